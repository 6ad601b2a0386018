//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands of a real
//! variable, semi-infinite integration by doubling panels, and Gauss-Legendre
//! rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 15-point Kronrod estimate and |K15 - G7| on `[a, b]`.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let err = ((kronrod - gauss) * half).norm();
    // QUADPACK-style rescaling of |K - G|
    let err = if err > 0.0 {
        err * (200.0 * err / (kronrod.norm() * half.abs()).max(f64::MIN_POSITIVE))
            .powf(0.5)
            .min(1.0)
    } else {
        err
    };
    (kronrod * half, err.max(4.0 * f64::EPSILON * (kronrod * half).norm()))
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

const MAX_SEGMENTS: usize = 4000;

/// Globally adaptive integration of `f` over `[a, b]` until the summed error
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    let (value, err) = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    loop {
        let total: NeumaierSum = heap.iter().map(|s| s.value).collect();
        let total = total.total();
        let total_err: f64 = heap.iter().map(|s| s.err).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if total_err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(QuadratureResult {
                value: total,
                abs_error_estimate: total_err,
                evaluations,
            });
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Numerical {
                message: format!(
                    "tolerance {abs_tol:e} unreachable on [{a}, {b}] after {evaluations} evaluations"
                ),
                best_estimate: Some((total.re, total.im)),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numerical {
                message: format!("interval collapsed near {mid} before reaching tolerance"),
                best_estimate: Some((total.re, total.im)),
            });
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15(&f, lo, hi);
            heap.push(Segment {
                a: lo,
                b: hi,
                value,
                err,
            });
        }
        evaluations += 30;
    }
}

/// Integral of `f` over `[a, inf)` built from adaptive panels of doubling
/// width. Integration stops once two consecutive panels contribute less than a
/// tenth of the tolerance `max(abs_tol, rel_tol |I|)`; the last panel's
/// magnitude is added to the error as a tail bound.
pub fn integrate_to_infinity<F>(
    f: F,
    a: f64,
    first_width: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    let mut sum = NeumaierSum::default();
    let mut err = 0.0;
    let mut evaluations = 0;
    let mut lo = a;
    let mut width = first_width;
    let mut quiet = 0;
    for _ in 0..60 {
        let hi = lo + width;
        let panel = integrate(&f, lo, hi, abs_tol / 20.0, rel_tol / 2.0)?;
        sum.add(panel.value);
        err += panel.abs_error_estimate;
        evaluations += panel.evaluations;
        let magnitude = panel.value.norm();
        if magnitude < abs_tol.max(rel_tol * sum.total().norm()) / 10.0 {
            quiet += 1;
            if quiet == 2 {
                return Ok(QuadratureResult {
                    value: sum.total(),
                    abs_error_estimate: err + magnitude,
                    evaluations,
                });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Numerical {
        message: "integrand tail did not decay".into(),
        best_estimate: Some((sum.total().re, sum.total().im)),
    })
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, refined by Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((0.5 * (1.0 + x), 0.5 * w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}
