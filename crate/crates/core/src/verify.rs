//! Invariant suites behind `loopvertex verify`.
//!
//! Every check is named after the invariant it guards, so a failing run
//! lists exactly which property broke.

use std::f64::consts::PI;
use std::str::FromStr;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binom_pn_n, cayley_count, fit_majorant_constant, fuss_catalan_number, fuss_catalan_number_alt,
    log_z_series_coefficients, majorant_terms, perturbative_partial_sum,
};
use crate::derivative::s_derivatives;
use crate::error::{Error, Result};
use crate::kernel::{bound_constant, radius, s_eval, t_closed_form, t_solve};
use crate::lve::{
    covariance, enumerate_trees, log_z_partial, order_one_direct, order_one_ibp_check, order_term,
    LveConfig, LvePartialSum, WRule, PSD_TOLERANCE,
};
use crate::model::ModelSpec;
use crate::oracle::{g2_lvr, g2_oracle, gallavotti_free_energy, s_from_derivative_integral, z_lvr, z_oracle};
use crate::record::CheckOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernel,
    Combinatorics,
    Oracle,
    Lve,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kernel" => Suite::Kernel,
            "combinatorics" => Suite::Combinatorics,
            "oracle" => Suite::Oracle,
            "lve" => Suite::Lve,
            "all" => Suite::All,
            other => return Err(Error::Contract(format!("unknown suite {other:?}"))),
        })
    }
}

/// Deliberate defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Adds one to the third Catalan number wherever the suites read it.
    CatalanCoefficient,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "catalan-coefficient" => Ok(Fault::CatalanCoefficient),
            other => Err(Error::Contract(format!("unknown fault {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub quick: bool,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 2024,
            fault: None,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    match suite {
        Suite::Kernel => kernel_suite(opts),
        Suite::Combinatorics => combinatorics_suite(opts),
        Suite::Oracle => oracle_suite(opts),
        Suite::Lve => lve_suite(opts),
        Suite::All => [
            kernel_suite(opts),
            combinatorics_suite(opts),
            oracle_suite(opts),
            lve_suite(opts),
        ]
        .concat(),
    }
}

fn check(name: &str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// `radii x angles` points of the cut plane, `|z|` from `1e-3` to `1e4`,
/// angles symmetric about the real axis and avoiding it.
pub fn cut_plane_grid(radii: usize, angles: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(radii * angles);
    for i in 0..radii {
        let r = 10f64.powf(-3.0 + 7.0 * i as f64 / (radii.max(2) - 1) as f64);
        for k in 0..angles {
            let theta = -PI + PI * (2 * k + 1) as f64 / angles as f64;
            out.push(Complex64::from_polar(r, theta));
        }
    }
    out
}

/// Points of a disk `|z| < scale` in the cut plane.
pub fn small_grid(count: usize, scale: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let r = scale * (k as f64 + 0.5) / count as f64;
            let theta = -PI + 2.0 * PI * ((k as f64 * 0.618_033_988_749_895) % 1.0);
            Complex64::from_polar(r, theta)
        })
        .filter(|z| !(z.im == 0.0 && z.re > 0.0))
        .collect()
}

fn catalan_numbers(count: u64, fault: Option<Fault>) -> Vec<BigUint> {
    let mut c: Vec<BigUint> = (0..count).map(|n| fuss_catalan_number(2, n)).collect();
    if fault == Some(Fault::CatalanCoefficient) && c.len() > 3 {
        c[3] += 1u32;
    }
    c
}

pub fn max_residual(p: u32, grid: &[Complex64]) -> Result<f64> {
    grid.iter()
        .map(|&z| t_solve(p, z).map(|k| k.residual))
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
}

pub fn max_closed_form_gap(p: u32, grid: &[Complex64]) -> Result<f64> {
    grid.iter().try_fold(0.0f64, |m, &z| {
        Ok(m.max((t_solve(p, z)?.t - t_closed_form(p, z)?).norm()))
    })
}

fn kernel_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let (radii, angles) = if opts.quick { (5, 8) } else { (10, 20) };
    let grid = cut_plane_grid(radii, angles);
    let mut out = Vec::new();
    out.push(check("tree function satisfies z T^p - T + 1 = 0", || {
        let mut worst: f64 = 0.0;
        for p in 2..=6 {
            worst = worst.max(max_residual(p, &grid)?);
        }
        Ok((worst < 1e-12, format!("max residual {worst:.3e} over {} points, p = 2..6", grid.len())))
    }));
    out.push(check("continuation agrees with radical solutions", || {
        let pts = cut_plane_grid(5, if opts.quick { 4 } else { 20 });
        let mut worst: f64 = 0.0;
        for p in 2..=4 {
            worst = worst.max(max_closed_form_gap(p, &pts)?);
        }
        Ok((worst < 1e-10, format!("max |t_solve - closed form| {worst:.3e}")))
    }));
    out.push(check("tree function obeys Schwarz reflection", || {
        let mut worst: f64 = 0.0;
        for p in 2..=6 {
            for &z in &grid {
                let a = t_solve(p, z)?.t;
                let b = t_solve(p, z.conj())?.t;
                worst = worst.max((a.conj() - b).norm() / a.norm());
            }
        }
        Ok((worst < 1e-13, format!("max relative asymmetry {worst:.3e}")))
    }));
    out.push(check("tree function series starts with Catalan numbers", || {
        let c = catalan_numbers(8, opts.fault);
        let z = Complex64::new(1e-3, 0.0);
        let series: Complex64 = c
            .iter()
            .enumerate()
            .map(|(n, c)| z.powu(n as u32) * c.to_f64().unwrap_or(f64::NAN))
            .sum();
        let gap = (series - t_solve(2, z)?.t).norm();
        Ok((gap < 1e-15, format!("|series - T_2(1e-3)| = {gap:.3e}")))
    }));
    out.push(check("action derivatives match finite differences", || {
        let mut worst: f64 = 0.0;
        for p in 2..=5 {
            for z in [Complex64::new(-0.7, 0.2), Complex64::new(0.01, -0.03), Complex64::new(-20.0, 5.0)] {
                let h = 1e-4 * z.norm().max(radius(p)?);
                let d = s_derivatives(p, z, 2)?;
                let fd1 = (s_eval(p, z + h)? - s_eval(p, z - h)?) / (2.0 * h);
                let fd2 = (s_derivatives(p, z + h, 1)?[0] - s_derivatives(p, z - h, 1)?[0]) / (2.0 * h);
                worst = worst
                    .max((d[0] - fd1).norm() / d[0].norm().max(1e-3))
                    .max((d[1] - fd2).norm() / d[1].norm().max(1e-3));
            }
        }
        Ok((worst < 1e-5, format!("max relative gap {worst:.3e}")))
    }));
    out.push(check("action derivative bound constant is finite", || {
        let q_max = if opts.quick { 4 } else { 8 };
        let pts: Vec<Complex64> = cut_plane_grid(radii, angles)
            .into_iter()
            .filter(|z| z.arg().abs() >= 0.3)
            .collect();
        let mut ks = Vec::new();
        for p in [2, 3, 5] {
            let spec = ModelSpec::new(p, Complex64::new(0.0, 0.0), 0.3)?;
            ks.push(bound_constant(&spec, &pts, q_max)?);
        }
        let ok = ks.iter().all(|k| k.is_finite());
        Ok((ok, format!("K = {ks:?} for p = 2, 3, 5")))
    }));
    out.push(check("Catalan action derivatives bounded on the negative axis with K <= 4", || {
        let spec = ModelSpec::new(2, Complex64::new(0.0, 0.0), 0.3)?;
        let pts: Vec<Complex64> = (0..60)
            .map(|i| Complex64::new(-(10f64.powf(-3.0 + 7.0 * i as f64 / 59.0)), 0.0))
            .collect();
        let k = bound_constant(&spec, &pts, 8)?;
        Ok((k <= 4.01, format!("K = {k:.6}")))
    }));
    out
}

fn combinatorics_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    out.push(check("Fuss-Catalan numbers match known values", || {
        let c2: Vec<u64> = catalan_numbers(7, opts.fault).iter().map(|c| c.to_u64().unwrap_or(0)).collect();
        let c3: Vec<u64> = (0..5).map(|n| fuss_catalan_number(3, n).to_u64().unwrap_or(0)).collect();
        let ok = c2 == [1, 1, 2, 5, 14, 42, 132] && c3 == [1, 1, 3, 12, 55];
        Ok((ok, format!("C^(2) = {c2:?}, C^(3) = {c3:?}")))
    }));
    out.push(check("Fuss-Catalan closed forms agree", || {
        let n_max = if opts.quick { 20 } else { 40 };
        for p in 2..=8 {
            for n in 0..=n_max {
                if fuss_catalan_number(p, n) != fuss_catalan_number_alt(p, n) {
                    return Ok((false, format!("p = {p}, n = {n}")));
                }
            }
        }
        Ok((true, format!("p <= 8, n <= {n_max}")))
    }));
    out.push(check("((p-1)n + 1) divides binom(pn, n)", || {
        for p in 2..=8u32 {
            for n in 0..=40u64 {
                let d = BigUint::from((p as u64 - 1) * n + 1);
                if !(binom_pn_n(p, n) % d).is_zero() {
                    return Ok((false, format!("fails at p = {p}, n = {n}")));
                }
            }
        }
        Ok((true, "p <= 8, n <= 40".into()))
    }));
    out.push(check("Cayley counts match tree enumeration", || {
        for n in 1..=6usize {
            let enumerated = enumerate_trees(n)?.len();
            if BigUint::from(enumerated) != cayley_count(n as u64) {
                return Ok((false, format!("n = {n}: {enumerated} trees")));
            }
        }
        Ok((true, "n = 1..6".into()))
    }));
    out.push(check("perturbative series is asymptotic with fourth coefficient 1680", || {
        let exact = crate::combinatorics::z_series_coefficient(2, 4, 0)
            .to_f64()
            .unwrap_or(f64::NAN);
        let mut worst: f64 = 0.0;
        for i in 0..if opts.quick { 4 } else { 10 } {
            let lambda = 10f64.powf(-3.0 + i as f64 / 9.0);
            let spec = ModelSpec::real(2, lambda)?;
            let z = z_oracle(&spec, 1e-13)?.value;
            let ratio = (z - perturbative_partial_sum(&spec, 3, 0)).norm() / lambda.powi(4);
            worst = worst.max(ratio);
        }
        Ok((exact == 1680.0 && worst <= 2.0 * exact, format!("max ratio {worst:.2} vs bound {}", 2.0 * exact)))
    }));
    out
}

/// Richardson-extrapolated `dG/dlambda` at the origin.
pub fn cumulant_slope(p: u32, h: f64) -> Result<f64> {
    let slope = |l: f64| -> Result<f64> {
        let g = g2_oracle(&ModelSpec::real(p, l)?, 1e-13)?.value.re;
        Ok((g - 1.0) / l)
    };
    let (d1, d2, d3) = (slope(h)?, slope(h / 2.0)?, slope(h / 4.0)?);
    // two rounds of Richardson for an O(h) leading error
    let r1 = 2.0 * d2 - d1;
    let r2 = 2.0 * d3 - d2;
    Ok((4.0 * r2 - r1) / 3.0)
}

/// LVR grid: `p = 2..4` over real couplings and `0.1 e^{+-i pi/3}`.
pub fn lvr_specs(quick: bool) -> Result<Vec<ModelSpec>> {
    let reals: &[f64] = if quick { &[0.01, 0.5] } else { &[0.01, 0.05, 0.1, 0.5, 1.0] };
    let mut specs = Vec::new();
    for p in 2..=4 {
        for &l in reals {
            specs.push(ModelSpec::real(p, l)?);
        }
        for sign in [1.0, -1.0] {
            specs.push(ModelSpec::new(p, Complex64::from_polar(0.1, sign * PI / 3.0), 0.1)?);
        }
    }
    Ok(specs)
}

fn oracle_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    out.push(check("loop vertex representation reproduces Z", || {
        let mut worst: f64 = 0.0;
        for spec in lvr_specs(opts.quick)? {
            worst = worst.max((z_lvr(&spec, 1e-12)?.value - z_oracle(&spec, 1e-12)?.value).norm());
        }
        Ok((worst < 1e-8, format!("max |z_lvr - z_oracle| {worst:.3e}")))
    }));
    out.push(check("loop vertex representation reproduces the two-point cumulant", || {
        let mut worst: f64 = 0.0;
        for spec in lvr_specs(opts.quick)? {
            worst = worst.max((g2_lvr(&spec, 1e-12)?.value - g2_oracle(&spec, 1e-12)?.value).norm());
        }
        Ok((worst < 1e-8, format!("max |g2_lvr - g2_oracle| {worst:.3e}")))
    }));
    out.push(check("two-point cumulant slopes are -4 and -18", || {
        let s2 = cumulant_slope(2, 1e-3)?;
        let s3 = cumulant_slope(3, 1e-3)?;
        let ok = (s2 + 4.0).abs() < 0.04 && (s3 + 18.0).abs() < 0.18;
        Ok((ok, format!("slopes {s2:.6}, {s3:.6}")))
    }));
    out.push(check("action equals the integral of its derivative", || {
        let pts = small_grid(if opts.quick { 10 } else { 50 }, 5.0);
        let mut worst: f64 = 0.0;
        for (i, &z) in pts.iter().enumerate() {
            let p = 2 + (i % 4) as u32;
            worst = worst.max((s_eval(p, z)? - s_from_derivative_integral(p, z, 1e-14)?.value).norm());
        }
        Ok((worst < 1e-10, format!("max gap {worst:.3e} over {} points", pts.len())))
    }));
    out.push(check("Gallavotti free energy substitutes into the action", || {
        let worst = gallavotti_gap(if opts.quick { 20 } else { 100 }, opts.seed)?;
        Ok((worst < 1e-10, format!("max gap {worst:.3e}")))
    }));
    out
}

/// Largest `|A_p(g^p phibar^{p-1}, phi) - S_p(g^p (phi phibar)^{p-1})|` over
/// random draws.
pub fn gallavotti_gap(draws: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let c = |rng: &mut ChaCha8Rng, scale: f64| {
        Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
    };
    for _ in 0..draws {
        let p = rng.random_range(2..=6u32);
        let (g, phi, phibar) = (c(&mut rng, 0.6), c(&mut rng, 1.5), c(&mut rng, 1.5));
        let z = g.powu(p) * (phi * phibar).powu(p - 1);
        if z.im == 0.0 && z.re >= radius(p)? {
            continue;
        }
        let a = gallavotti_free_energy(p, g.powu(p) * phibar.powu(p - 1), phi)?;
        worst = worst.max((a - s_eval(p, z)?).norm());
    }
    Ok(worst)
}

/// Smallest eigenvalue over `draws` random `(tree, w)` covariances on `n` vertices.
pub fn min_covariance_eigenvalue(n: usize, draws: usize, seed: u64) -> Result<f64> {
    let trees = enumerate_trees(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let mut worst = f64::INFINITY;
    for _ in 0..draws {
        let tree = &trees[rng.random_range(0..trees.len())];
        let w: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
        worst = worst.min(covariance(tree, &w)?.min_eigenvalue());
    }
    Ok(worst)
}

/// `|LVE - log Z| <= max(3 sigma, |last order|)`.
pub fn lve_within_budget(spec: &ModelSpec, sum: &LvePartialSum) -> Result<(bool, f64, f64)> {
    let exact = z_oracle(spec, 1e-13)?.value.ln();
    let gap = (sum.cumulative.value - exact).norm();
    let last = sum.orders.last().map(|o| o.value.norm()).unwrap_or(0.0);
    let budget = (3.0 * sum.cumulative.std_error).max(last);
    Ok((gap <= budget, gap, budget))
}

fn lve_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let samples = if opts.quick { 4_000 } else { 50_000 };
    let mut out = Vec::new();
    out.push(check("oriented tree counts are n^(n-2) 2^(n-1)", || {
        for n in 1..=6usize {
            let oriented: usize = enumerate_trees(n)?.iter().map(|t| t.orientation_count()).sum();
            let want = n.pow(n.saturating_sub(2) as u32) << (n - 1);
            if oriented != want {
                return Ok((false, format!("n = {n}: {oriented} vs {want}")));
            }
        }
        Ok((true, "n = 1..6".into()))
    }));
    out.push(check("replica covariances are positive semidefinite", || {
        let draws = if opts.quick { 100 } else { 1000 };
        let mut worst = f64::INFINITY;
        for n in 2..=6 {
            worst = worst.min(min_covariance_eigenvalue(n, draws, opts.seed)?);
        }
        Ok((worst >= -PSD_TOLERANCE, format!("min eigenvalue {worst:.3e}")))
    }));
    out.push(check("single vertex term agrees with its integrated-by-parts form", || {
        let mut worst: f64 = 0.0;
        for (p, l) in [(2, 0.1), (3, 0.05)] {
            let spec = ModelSpec::real(p, l)?;
            worst = worst.max((order_one_direct(&spec)? - order_one_ibp_check(&spec)?).norm());
        }
        Ok((worst < 1e-8, format!("max gap {worst:.3e}")))
    }));
    let flagship = if opts.quick { (2, 0.05, 3) } else { (2, 0.05, 4) };
    out.push(check("tree expansion reproduces log Z", || {
        let (p, l, n_max) = flagship;
        let spec = ModelSpec::real(p, l)?;
        let cfg = LveConfig::new(samples, WRule::TensorQuadrature, opts.seed, n_max)?;
        let sum = log_z_partial(&spec, &cfg)?;
        let (ok, gap, budget) = lve_within_budget(&spec, &sum)?;
        Ok((ok, format!("p = {p}, lambda = {l}, n_max = {n_max}: gap {gap:.3e}, budget {budget:.3e}")))
    }));
    out.push(check("tree expansion is deterministic for a fixed seed", || {
        let spec = ModelSpec::real(3, 0.02)?;
        let cfg = LveConfig::new(1_000, WRule::JointMc, opts.seed, 5)?;
        let a = order_term(&spec, 4, &cfg)?;
        let b = order_term(&spec, 4, &cfg)?;
        Ok((a == b, format!("{} vs {}", a.value, b.value)))
    }));
    out.push(check("tree expansion slope matches the log Z series", || {
        let n_max = 4;
        let (l1, l2) = (0.01, 0.02);
        let cfg = LveConfig::new(samples, WRule::TensorQuadrature, opts.seed, n_max)?;
        let a = log_z_partial(&ModelSpec::real(2, l1)?, &cfg)?;
        let b = log_z_partial(&ModelSpec::real(2, l2)?, &cfg)?;
        let coeffs: Vec<f64> = log_z_series_coefficients(2, 5)
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect();
        let series = |l: f64| (1..=4).map(|n| coeffs[n] * l.powi(n as i32)).sum::<f64>();
        let fd_lve = (b.cumulative.value.re - a.cumulative.value.re) / (l2 - l1);
        let fd_series = (series(l2) - series(l1)) / (l2 - l1);
        let sigma = (a.cumulative.std_error.powi(2) + b.cumulative.std_error.powi(2)).sqrt();
        let truncation = b.orders[n_max - 1].value.norm() + a.orders[n_max - 1].value.norm()
            + coeffs[5].abs() * (l2.powi(5) - l1.powi(5));
        let budget = (3.0 * sigma + truncation) / (l2 - l1);
        let gap = (fd_lve - fd_series).abs();
        Ok((gap <= budget, format!("slope {fd_lve:.6} vs series {fd_series:.6}, budget {budget:.3e}")))
    }));
    out.push(check("order magnitudes are dominated by the tree majorant", || {
        let spec = ModelSpec::real(2, 0.05)?;
        let cfg = LveConfig::new(samples.min(10_000), WRule::TensorQuadrature, opts.seed, 4)?;
        let mags = log_z_partial(&spec, &cfg)?.order_magnitudes();
        let k = fit_majorant_constant(2, 0.05, &mags);
        let bound = majorant_terms(2, 0.05, k, mags.len());
        let ok = k.is_finite() && mags.iter().zip(&bound).all(|(m, b)| *m <= b * (1.0 + 1e-12));
        Ok((ok, format!("fitted K = {k:.4}")))
    }));
    out
}
