//! Quadrature references for the partition function and the two-point
//! cumulant, both directly and through the loop vertex representation.
//!
//! The normalized complex Gaussian measure reduces radially: for any `G`,
//! `int dmu G(phi phibar) = int_0^inf e^{-t} G(t) dt`. For complex couplings
//! the radial integral runs along the ray `t = e^{i alpha} s` with
//! `alpha = -arg(lambda)/p`, on which `lambda t^p` is real and positive and
//! `e^{-t}` still decays.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{s_eval, t_solve};
use crate::model::ModelSpec;
use crate::quadrature::{integrate, integrate_to_infinity, QuadratureResult};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rotation angle of the radial contour for coupling `lambda`.
pub fn contour_angle(p: u32, lambda: Complex64) -> f64 {
    if lambda == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        -lambda.arg() / p as f64
    }
}

/// `int_0^inf g(t) dt` along the ray at angle `alpha`.
pub(crate) fn integrate_ray<G>(alpha: f64, tol: f64, g: G) -> Result<QuadratureResult>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let direction = Complex64::from_polar(1.0, alpha);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let result = integrate_to_infinity(
        |s| match g(direction * s) {
            Ok(v) => v * direction,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
        0.0,
        2.0,
        tol,
        0.0,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result
}

fn radial(spec: &ModelSpec, tol: f64, g: impl Fn(Complex64) -> Result<Complex64>) -> Result<QuadratureResult> {
    integrate_ray(contour_angle(spec.p, spec.lambda), tol, |t| Ok((-t).exp() * g(t)?))
}

/// `int_0^inf t^k e^{-t} dt`, which must equal `k!`.
pub fn radial_moment(k: u32, tol: f64) -> Result<QuadratureResult> {
    integrate_ray(0.0, tol, |t| Ok(t.powu(k) * (-t).exp()))
}

fn moment_with_interaction(spec: &ModelSpec, q: u32, tol: f64) -> Result<QuadratureResult> {
    if spec.is_free() {
        let q_fact: f64 = (1..=q).map(f64::from).product();
        return Ok(QuadratureResult {
            value: Complex64::new(q_fact, 0.0),
            abs_error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let p = spec.p;
    let lambda = spec.lambda;
    radial(spec, tol, |t| Ok(t.powu(q) * (-lambda * t.powu(p)).exp()))
}

/// `Z_p(lambda) = int_0^inf e^{-t - lambda t^p} dt`.
pub fn z_oracle(spec: &ModelSpec, tol: f64) -> Result<QuadratureResult> {
    moment_with_interaction(spec, 0, tol)
}

fn ratio(num: QuadratureResult, den: QuadratureResult) -> QuadratureResult {
    let value = num.value / den.value;
    let rel = num.abs_error_estimate / num.value.norm().max(f64::MIN_POSITIVE)
        + den.abs_error_estimate / den.value.norm();
    QuadratureResult {
        value,
        abs_error_estimate: value.norm() * rel,
        evaluations: num.evaluations + den.evaluations,
    }
}

/// `G^c_{p,1}(lambda) = int t e^{-t-lambda t^p} / int e^{-t-lambda t^p}`.
pub fn g2_oracle(spec: &ModelSpec, tol: f64) -> Result<QuadratureResult> {
    let num = moment_with_interaction(spec, 1, tol)?;
    let den = moment_with_interaction(spec, 0, tol)?;
    Ok(ratio(num, den))
}

fn vertex_argument(spec: &ModelSpec, t: Complex64) -> Complex64 {
    -spec.lambda * t.powu(spec.p - 1)
}

/// `Z_p` through the loop vertex representation: `int_0^inf e^{-t} F_p(-lambda t^{p-1}) dt`.
pub fn z_lvr(spec: &ModelSpec, tol: f64) -> Result<QuadratureResult> {
    radial(spec, tol, |t| Ok(t_solve(spec.p, vertex_argument(spec, t))?.f))
}

/// `G^c_{p,1}` through the loop vertex representation,
/// `1 + Z^{-1} int_0^inf e^{-t} p z S'(z) F(z) dt` with `z = -lambda t^{p-1}`.
///
/// `g dS/dg = p z S'(z)` because `z = g^p t^{p-1}`.
pub fn g2_lvr(spec: &ModelSpec, tol: f64) -> Result<QuadratureResult> {
    let p = spec.p;
    let pf = p as f64;
    let insertion = radial(spec, tol, |t| {
        let z = vertex_argument(spec, t);
        let k = t_solve(p, z)?;
        let s_prime = pf * k.e * (ONE + (pf - 1.0) * z * k.e);
        Ok(pf * z * s_prime * k.f)
    })?;
    let z = z_lvr(spec, tol)?;
    let quotient = ratio(insertion, z);
    Ok(QuadratureResult {
        value: ONE + quotient.value,
        ..quotient
    })
}

/// Free energy `A_p(lambda, J) = log F_p(lambda J^{p-1})` of the Gallavotti
/// theory.
pub fn gallavotti_free_energy(p: u32, lambda: Complex64, j: Complex64) -> Result<Complex64> {
    s_eval(p, lambda * j.powu(p - 1))
}

/// `S(z)` recomputed as `int_0^1 z S'(tz) dt`.
pub fn s_from_derivative_integral(p: u32, z: Complex64, tol: f64) -> Result<QuadratureResult> {
    let pf = p as f64;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let result = integrate(
        |t| {
            let w = z * t;
            match t_solve(p, w) {
                Ok(k) => z * pf * k.e * (ONE + (pf - 1.0) * w * k.e),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
        },
        0.0,
        1.0,
        tol,
        0.0,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result
}
