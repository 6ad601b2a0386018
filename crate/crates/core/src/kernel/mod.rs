//! The tree function `T_p` solving `z T^p - T + 1 = 0`, and the derived
//! loop vertex kernels `F_p = 1/(1 - p z T^{p-1})`, `S_p = log F_p` and
//! `E_p = F_p T^{p-1}` on the cut plane `C - [R_p, inf)`.

mod closed_form;

pub use closed_form::{cardano_deltas, f_closed_form, quotient_identity_sides, t_closed_form};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combinatorics::fuss_catalan_number;
use crate::derivative::s_derivatives;
use crate::error::{Error, Result};
use crate::model::{check_order, ModelSpec};

/// Points closer than this to the branch point carry a degraded-accuracy flag.
pub const BRANCH_POINT_ZONE: f64 = 1e-6;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 50;
const SERIES_START_FRACTION: f64 = 0.4;

/// Convergence radius `R_p = (p-1)^{p-1} / p^p` of the Fuss-Catalan series.
pub fn radius(p: u32) -> Result<f64> {
    check_order(p)?;
    let p = p as f64;
    Ok(((p - 1.0) / p).powf(p - 1.0) / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    InsideDisk,
    CutPlane,
    OnCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutPlanePoint {
    pub z: Complex64,
    pub region: Region,
}

impl CutPlanePoint {
    pub fn classify(p: u32, z: Complex64) -> Result<Self> {
        let r = radius(p)?;
        let region = if z.im == 0.0 && z.re >= r - 1e-12 {
            Region::OnCut
        } else if z.norm() < r {
            Region::InsideDisk
        } else {
            Region::CutPlane
        };
        Ok(Self { z, region })
    }

    /// Classifies `z` and fails with a domain error when it lies on the cut.
    pub fn require_off_cut(p: u32, z: Complex64) -> Result<Self> {
        let point = Self::classify(p, z)?;
        if point.region == Region::OnCut {
            return Err(Error::Domain(format!(
                "z = {z} lies on the cut [{}, inf) of T_{p}",
                radius(p)?
            )));
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {z}")));
        }
        Ok(point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEval {
    pub value: Complex64,
    /// Set when `|z| >= 0.9 R_p`, where the partial sums converge slowly.
    pub slow_convergence: bool,
}

/// Partial sum `sum_{n < n_terms} C_n^(p) z^n` with exact coefficients.
pub fn t_series(p: u32, z: Complex64, n_terms: usize) -> Result<SeriesEval> {
    let r = radius(p)?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for n in 0..n_terms {
        let c = fuss_catalan_number(p, n as u64).to_f64().unwrap_or(f64::INFINITY);
        value += power * c;
        power *= z;
    }
    Ok(SeriesEval {
        value,
        slow_convergence: z.norm() >= 0.9 * r,
    })
}

/// Evaluation of all kernels at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub z: Complex64,
    pub t: Complex64,
    pub f: Complex64,
    pub s: Complex64,
    pub e: Complex64,
    /// `|z T^p - T + 1|`.
    pub residual: f64,
    /// Within [`BRANCH_POINT_ZONE`] of `R_p`: the square-root singularity
    /// limits attainable accuracy.
    pub degraded: bool,
}

impl KernelEval {
    fn from_t(p: u32, z: Complex64, t: Complex64, degraded: bool) -> Self {
        let tp1 = t.powu(p - 1);
        let f = (Complex64::new(1.0, 0.0) - z * tp1 * p as f64).inv();
        Self {
            z,
            t,
            f,
            s: f.ln(),
            e: f * tp1,
            residual: (z * tp1 * t - t + 1.0).norm(),
            degraded,
        }
    }
}

/// `C_n^(p)` in floating point by the ratio recurrence, for fast series starts.
fn series_f64(p: u32, z: Complex64, tol: f64) -> Complex64 {
    let pf = p as f64;
    let mut c = 1.0;
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0, 0.0);
    for n in 0..400 {
        let nf = n as f64;
        let mut ratio = 1.0 / (nf + 1.0);
        for j in 1..=p {
            ratio *= pf * nf + j as f64;
        }
        for j in 2..=p {
            ratio /= (pf - 1.0) * nf + j as f64;
        }
        c *= ratio;
        power *= z;
        let term = power * c;
        sum += term;
        if term.norm() < tol * sum.norm() {
            break;
        }
    }
    sum
}

fn newton(p: u32, z: Complex64, start: Complex64) -> Option<(Complex64, usize)> {
    let mut t = start;
    for iter in 1..=NEWTON_MAX_ITER {
        let tp1 = t.powu(p - 1);
        let g = z * tp1 * t - t + 1.0;
        let dg = z * tp1 * p as f64 - 1.0;
        if dg == Complex64::new(0.0, 0.0) {
            return None;
        }
        let delta = g / dg;
        t -= delta;
        if !t.re.is_finite() || !t.im.is_finite() {
            return None;
        }
        if delta.norm() <= NEWTON_TOL * t.norm() {
            return Some((t, iter));
        }
    }
    None
}

/// Analytic branch of `T_p` with `T_p(0) = 1`.
///
/// Inside `0.4 R_p` the value comes from the series. Farther out it is
/// continued along the ray from `0.4 R_p z/|z|` with a power-law predictor
/// (`d log T / d log z = z E`) and Newton correction; steps are halved
/// whenever the corrector strays from the predictor.
pub fn t_solve(p: u32, z: Complex64) -> Result<KernelEval> {
    let point = CutPlanePoint::require_off_cut(p, z)?;
    let r = radius(p)?;
    let degraded = (z - r).norm() < BRANCH_POINT_ZONE;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(KernelEval::from_t(p, z, Complex64::new(1.0, 0.0), false));
    }
    let start_radius = SERIES_START_FRACTION * r;
    if point.region == Region::InsideDisk && z.norm() <= start_radius {
        let seed = series_f64(p, z, 1e-17);
        let t = newton(p, z, seed).map(|(t, _)| t).unwrap_or(seed);
        return Ok(KernelEval::from_t(p, z, t, degraded));
    }

    let direction = z / z.norm();
    let target = z.norm();
    let mut rad = start_radius;
    let mut t = series_f64(p, direction * rad, 1e-17);
    let mut h: f64 = 0.25;
    let mut steps = 0usize;
    while rad < target {
        steps += 1;
        if steps > 100_000 || h < 1e-12 {
            return Err(Error::numerical(format!(
                "continuation of T_{p} to z = {z} stalled at |z| = {rad:.6e} (step {h:.3e})"
            )));
        }
        let next = (rad * (1.0 + h)).min(target);
        let here = direction * rad;
        let there = if next == target { z } else { direction * next };
        let tp1 = t.powu(p - 1);
        let e = tp1 / (Complex64::new(1.0, 0.0) - here * tp1 * p as f64);
        let predicted = t * (here * e * (next / rad).ln()).exp();
        match newton(p, there, predicted) {
            Some((corrected, iters))
                if iters <= 12
                    && (corrected - predicted).norm() <= 0.05 * corrected.norm() =>
            {
                t = corrected;
                rad = next;
                if iters <= 4 {
                    h = (h * 1.5).min(1.0);
                }
            }
            _ => h *= 0.5,
        }
    }
    Ok(KernelEval::from_t(p, z, t, degraded))
}

pub fn f_eval(p: u32, z: Complex64) -> Result<Complex64> {
    Ok(t_solve(p, z)?.f)
}

pub fn s_eval(p: u32, z: Complex64) -> Result<Complex64> {
    Ok(t_solve(p, z)?.s)
}

pub fn e_eval(p: u32, z: Complex64) -> Result<Complex64> {
    Ok(t_solve(p, z)?.e)
}

/// Smallest `K` such that `|S^(q)(z)| <= (q-1)! (K / (1 + |z|))^q` holds at
/// every grid point for `1 <= q <= q_max`.
///
/// Grid points must lie in the sector `|arg z| >= spec.epsilon` (the origin
/// is admitted).
pub fn bound_constant(spec: &ModelSpec, z_grid: &[Complex64], q_max: usize) -> Result<f64> {
    if q_max == 0 {
        return Err(Error::Contract("q_max must be at least 1".into()));
    }
    let mut k: f64 = 0.0;
    for &z in z_grid {
        if z != Complex64::new(0.0, 0.0) && z.arg().abs() < spec.epsilon {
            return Err(Error::Domain(format!(
                "grid point {z} lies in the excluded sector |arg z| < {}",
                spec.epsilon
            )));
        }
        let derivs = s_derivatives(spec.p, z, q_max)?;
        let mut q_fact = 1.0; // (q-1)!
        for (i, d) in derivs.iter().enumerate() {
            let q = i + 1;
            if q > 1 {
                q_fact *= (q - 1) as f64;
            }
            let kq = (1.0 + z.norm()) * (d.norm() / q_fact).powf(1.0 / q as f64);
            if !kq.is_finite() {
                return Err(Error::numerical(format!("non-finite S^({q}) at {z}")));
            }
            k = k.max(kq);
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn radii() {
        assert_eq!(radius(2).unwrap(), 0.25);
        assert!((radius(3).unwrap() - 4.0 / 27.0).abs() < 1e-16);
        assert!((radius(5).unwrap() - 0.08192).abs() < 1e-16);
        assert_eq!(radius(1), Err(Error::InvalidOrder(1)));
    }

    #[test]
    fn series_values() {
        assert_eq!(t_series(4, c(0.0, 0.0), 10).unwrap().value, c(1.0, 0.0));
        let z = c(0.001, 0.0);
        let v = t_series(3, z, 3).unwrap().value;
        assert!((v.re - (1.0 + 0.001 + 3e-6)).abs() < 1e-15);
        let catalan = t_series(2, c(0.1, 0.0), 60).unwrap();
        let closed = (1.0 - 0.6f64.sqrt()) / 0.2;
        assert!((catalan.value.re - closed).abs() < 1e-9);
        assert!(!catalan.slow_convergence);
        assert!(t_series(2, c(0.24, 0.0), 10).unwrap().slow_convergence);
    }

    #[test]
    fn solve_known_values() {
        let k = t_solve(2, c(-1.0, 0.0)).unwrap();
        assert!((k.t.re - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        let k0 = t_solve(5, c(0.0, 0.0)).unwrap();
        assert_eq!(k0.t, c(1.0, 0.0));
        assert_eq!(k0.residual, 0.0);
    }

    #[test]
    fn approaches_branch_value() {
        let r3 = radius(3).unwrap();
        let k = t_solve(3, c(r3 * (1.0 - 1e-10), 0.0)).unwrap();
        assert!((k.t.re - 1.5).abs() < 1e-4);
        assert!(k.degraded);
        assert!(!t_solve(3, c(r3 * 0.5, 0.0)).unwrap().degraded);
    }

    #[test]
    fn rejects_cut() {
        assert!(matches!(t_solve(2, c(0.3, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(t_solve(2, c(0.25, 0.0)), Err(Error::Domain(_))));
        assert!(t_solve(2, c(0.3, 1e-9)).is_ok());
        assert_eq!(
            CutPlanePoint::classify(3, c(0.1, 0.0)).unwrap().region,
            Region::InsideDisk
        );
        assert_eq!(
            CutPlanePoint::classify(3, c(-1.0, 0.0)).unwrap().region,
            Region::CutPlane
        );
    }

    #[test]
    fn kernels_at_known_points() {
        assert_eq!(f_eval(3, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(s_eval(3, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(e_eval(3, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let f = f_eval(2, c(0.1, 0.0)).unwrap();
        assert!((f.re - 0.6f64.powf(-0.5)).abs() < 1e-14);
        let s = s_eval(2, c(0.1, 0.0)).unwrap();
        assert!((s.re + 0.5 * 0.6f64.ln()).abs() < 1e-14);
        let e = e_eval(2, c(0.1, 0.0)).unwrap();
        let t2 = (1.0 - 0.6f64.sqrt()) / 0.2;
        assert!((e.re - 0.6f64.powf(-0.5) * t2).abs() < 1e-13);
        let f3 = f_eval(3, c(-1.0, 0.0)).unwrap();
        assert!(f3.im.abs() < 1e-15 && f3.re > 0.0 && f3.re < 1.0);
    }

    #[test]
    fn s_matches_cardano_form() {
        // u = -27 z / 4 = 27/8 at z = -1/2
        let z = c(-0.5, 0.0);
        let s = s_eval(3, z).unwrap();
        let (dp, dm) = cardano_deltas(c(27.0 / 8.0, 0.0));
        let h = (1.0f64 + 27.0 / 8.0).sqrt().recip();
        let f3 = (dp + dm) * h * 0.5;
        assert!((s - f3.ln()).norm() < 1e-13);
    }

    #[test]
    fn bound_constant_errors() {
        let spec = ModelSpec::new(3, c(0.0, 0.0), 0.5).unwrap();
        assert!(matches!(
            bound_constant(&spec, &[c(1.0, 0.1)], 4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            bound_constant(&spec, &[c(-1.0, 0.0)], 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn bound_constant_near_origin_reaches_p() {
        for p in 2..=5 {
            let spec = ModelSpec::new(p, c(0.0, 0.0), 0.5).unwrap();
            let k = bound_constant(&spec, &[c(0.0, 0.0)], 1).unwrap();
            assert!((k - p as f64).abs() < 1e-12, "p={p} k={k}");
        }
    }

    #[test]
    fn catalan_bound_on_negative_axis() {
        let spec = ModelSpec::new(2, c(0.0, 0.0), 0.3).unwrap();
        let grid: Vec<_> = (0..60)
            .map(|i| c(-(10f64.powf(-3.0 + 7.0 * i as f64 / 59.0)), 0.0))
            .collect();
        let k = bound_constant(&spec, &grid, 8).unwrap();
        assert!(k <= 4.0 + 1e-9 && k > 3.0, "k = {k}");
    }
}
