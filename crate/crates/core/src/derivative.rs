//! Exact high-order derivatives of the loop vertex kernel by jet recursion.
//!
//! `E = F T^{p-1}` obeys `E' = E^2 [(2p-1) + p(p-1) z E]`, so its Taylor
//! coefficients follow from the value at the base point alone. The action then
//! has `S' = F'/F = p E (1 + (p-1) z E)`, and field derivatives of
//! `S(-lambda (phi phibar)^{p-1})` come from composing the jet of `S` with the
//! polynomial jet of the argument.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{factorial_f64, BivariateJet, UnivariateJet};
use crate::kernel::{t_solve, KernelEval};
use crate::model::ModelSpec;

/// Total derivative order accepted by [`corner_derivative`].
pub const MAX_CORNER_ORDER: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Taylor coefficients of `E` at `kernel.z` up to `order`, seeded by `kernel.e`.
fn e_coeffs(p: u32, kernel: &KernelEval, order: usize) -> Vec<Complex64> {
    let z = kernel.z;
    let pf = p as f64;
    let lin = 2.0 * pf - 1.0;
    let quad = pf * (pf - 1.0);
    let mut c = Vec::with_capacity(order + 1);
    c.push(kernel.e);
    // running coefficients of E^2
    let mut e2: Vec<Complex64> = Vec::with_capacity(order + 1);
    for k in 0..order {
        e2.push((0..=k).map(|i| c[i] * c[k - i]).sum());
        // Q = (2p-1) + p(p-1)(z+h)E, coefficient j
        let q = |j: usize| -> Complex64 {
            let mut v = quad * z * c[j];
            if j == 0 {
                v += lin;
            } else {
                v += quad * c[j - 1];
            }
            v
        };
        let rhs: Complex64 = (0..=k).map(|i| e2[i] * q(k - i)).sum();
        c.push(rhs / (k as f64 + 1.0));
    }
    c
}

/// Jet of `E` at `z` to the given order.
pub fn e_jet(p: u32, z: Complex64, order: usize) -> Result<UnivariateJet> {
    let kernel = t_solve(p, z)?;
    UnivariateJet::new(z, e_coeffs(p, &kernel, order))
}

/// Coefficients of `p E(h) (1 + (p-1)(z+h) E(h))`, i.e. the jet of `S'`.
fn s_prime_coeffs(p: u32, kernel: &KernelEval, order: usize) -> Vec<Complex64> {
    let e = e_coeffs(p, kernel, order);
    let pf = p as f64;
    let z = kernel.z;
    // inner = 1 + (p-1)(z+h)E
    let inner: Vec<Complex64> = (0..=order)
        .map(|j| {
            let mut v = (pf - 1.0) * z * e[j];
            if j == 0 {
                v += 1.0;
            } else {
                v += (pf - 1.0) * e[j - 1];
            }
            v
        })
        .collect();
    (0..=order)
        .map(|k| pf * (0..=k).map(|i| e[i] * inner[k - i]).sum::<Complex64>())
        .collect()
}

/// Taylor coefficients of `S` at `kernel.z` up to `order`.
pub(crate) fn s_coeffs(p: u32, kernel: &KernelEval, order: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(kernel.s);
    if order > 0 {
        let sp = s_prime_coeffs(p, kernel, order - 1);
        out.extend(sp.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)));
    }
    out
}

/// Jet of `S` at `z` to the given order.
pub fn s_jet(p: u32, z: Complex64, order: usize) -> Result<UnivariateJet> {
    let kernel = t_solve(p, z)?;
    UnivariateJet::new(z, s_coeffs(p, &kernel, order))
}

/// `[S'(z), S''(z), ..., S^(q_max)(z)]`.
pub fn s_derivatives(p: u32, z: Complex64, q_max: usize) -> Result<Vec<Complex64>> {
    if q_max == 0 {
        return Err(Error::Contract("q_max must be at least 1".into()));
    }
    let kernel = t_solve(p, z)?;
    Ok(s_prime_coeffs(p, &kernel, q_max - 1)
        .into_iter()
        .enumerate()
        .map(|(k, c)| c * factorial_f64(k))
        .collect())
}

/// Jet in `(u, v)` of `S(-lambda (phi+u)^{p-1} (phibar+v)^{p-1})`, truncated to
/// `u^a v^b` and to total outer order `outer`.
///
/// Coefficients with `i + j <= outer` are exact; higher ones are truncated.
pub fn corner_jet(
    spec: &ModelSpec,
    phi: Complex64,
    phibar: Complex64,
    a: usize,
    b: usize,
    outer: usize,
) -> Result<BivariateJet> {
    let p = spec.p;
    let z0 = -spec.lambda * (phi * phibar).powu(p - 1);
    let kernel = t_solve(p, z0)?;
    let s = s_coeffs(p, &kernel, outer);
    Ok(compose(spec, phi, phibar, a, b, &s))
}

/// Horner evaluation of `sum_k s_k P^k` with `P = z(phi+u, phibar+v) - z0`.
pub(crate) fn compose(
    spec: &ModelSpec,
    phi: Complex64,
    phibar: Complex64,
    a: usize,
    b: usize,
    s: &[Complex64],
) -> BivariateJet {
    let m = spec.p as usize - 1;
    let poly = |x: Complex64| -> Vec<Complex64> {
        // (x + h)^m
        let mut binom = 1.0;
        (0..=m)
            .map(|k| {
                let term = x.powu((m - k) as u32) * binom;
                binom = binom * (m - k) as f64 / (k + 1) as f64;
                term
            })
            .collect()
    };
    let mut shift = BivariateJet::separable(a, b, &poly(phi), &poly(phibar)).scale(-spec.lambda);
    shift.set(0, 0, ZERO);

    let mut acc = BivariateJet::constant(a, b, *s.last().unwrap_or(&ZERO));
    for &coeff in s.iter().rev().skip(1) {
        acc = acc.try_mul(&shift).expect("same truncation orders");
        acc.add_constant(coeff);
    }
    acc
}

/// `d^a/dphi^a d^b/dphibar^b S_p(-lambda (phi phibar)^{p-1})`, with `phi` and
/// `phibar` treated as independent variables.
pub fn corner_derivative(
    spec: &ModelSpec,
    phi: Complex64,
    phibar: Complex64,
    a: usize,
    b: usize,
) -> Result<Complex64> {
    if a + b > MAX_CORNER_ORDER {
        return Err(Error::Contract(format!(
            "corner derivative order {} exceeds {MAX_CORNER_ORDER}",
            a + b
        )));
    }
    Ok(corner_jet(spec, phi, phibar, a, b, a + b)?.derivative(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{radius, s_eval};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn e_jet_at_origin() {
        for p in 2..=6u32 {
            let pf = p as f64;
            let jet = e_jet(p, c(0.0, 0.0), 2).unwrap();
            assert_eq!(jet.coeff(0), c(1.0, 0.0));
            assert!((jet.coeff(1).re - (2.0 * pf - 1.0)).abs() < 1e-13);
            // E''(0) = 9p^2 - 9p + 2
            assert!((jet.derivative(2).re - (9.0 * pf * pf - 9.0 * pf + 2.0)).abs() < 1e-12);
        }
        let jet = e_jet(2, c(0.0, 0.0), 2).unwrap();
        assert!((jet.coeff(2).re - 10.0).abs() < 1e-13);
        assert_eq!(e_jet(4, c(0.0, 0.0), 0).unwrap().coeffs(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn e_second_derivative_closed_form() {
        // E'' = (9p^2-9p+2)E^3 + 5p(p-1)(2p-1) z E^4 + 3p^2(p-1)^2 z^2 E^5
        for p in 2..=5u32 {
            let pf = p as f64;
            for z in [c(-0.7, 0.3), c(0.02, -0.05), c(-12.0, 0.0)] {
                let jet = e_jet(p, z, 2).unwrap();
                let e = jet.coeff(0);
                let want = (9.0 * pf * pf - 9.0 * pf + 2.0) * e.powu(3)
                    + 5.0 * pf * (pf - 1.0) * (2.0 * pf - 1.0) * z * e.powu(4)
                    + 3.0 * pf * pf * (pf - 1.0).powi(2) * z * z * e.powu(5);
                assert!((jet.derivative(2) - want).norm() < 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn first_derivative_formula() {
        for p in 2..=5u32 {
            let z = c(-0.3, 0.2);
            let d = s_derivatives(p, z, 1).unwrap();
            let e = crate::kernel::e_eval(p, z).unwrap();
            let want = e * p as f64 * (1.0 + (p as f64 - 1.0) * z * e);
            assert!((d[0] - want).norm() < 1e-14);
        }
        for p in 2..=6u32 {
            let d = s_derivatives(p, c(0.0, 0.0), 1).unwrap();
            assert!((d[0].re - p as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn catalan_action_derivatives() {
        // S_2 = -log(1 - 4z)/2 so S^(q)(z) = (q-1)! 4^q / (2 (1-4z)^q)
        let d = s_derivatives(2, c(-1.0, 0.0), 10).unwrap();
        let mut qf = 1.0;
        for (i, v) in d.iter().enumerate() {
            let q = i as i32 + 1;
            if q > 1 {
                qf *= (q - 1) as f64;
            }
            let want = qf * 4f64.powi(q) / (2.0 * 5f64.powi(q));
            assert!((v.re - want).abs() < 1e-13 * want, "q={q}");
        }
        assert!((s_derivatives(2, c(0.0, 0.0), 1).unwrap()[0].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn matches_finite_differences() {
        for p in 2..=4u32 {
            let r = radius(p).unwrap();
            for z in [c(-0.5, 0.1), c(0.3 * r, 0.5 * r), c(-3.0, -2.0)] {
                let exact = s_derivatives(p, z, 3).unwrap();
                let h = 1e-3 * (1.0 + z.norm()).min(0.1 * r).max(1e-4);
                let s = |dz: f64| s_eval(p, z + dz).unwrap();
                let d1 = (s(h) - s(-h)) / (2.0 * h);
                let d2 = (s(h) - 2.0 * s(0.0) + s(-h)) / (h * h);
                assert!((d1 - exact[0]).norm() < 1e-6 * exact[0].norm(), "p={p} z={z}");
                assert!((d2 - exact[1]).norm() < 1e-4 * exact[1].norm(), "p={p} z={z}");
            }
        }
    }

    #[test]
    fn corner_derivative_examples() {
        let spec = ModelSpec::new(2, c(0.07, 0.02), 0.1).unwrap();
        let phi = c(0.4, -0.3);
        let phibar = phi.conj();
        let zeroth = corner_derivative(&spec, phi, phibar, 0, 0).unwrap();
        let z0 = -spec.lambda * phi * phibar;
        assert!((zeroth - s_eval(2, z0).unwrap()).norm() < 1e-15);

        let at_origin = corner_derivative(&spec, c(0.0, 0.0), c(0.0, 0.0), 1, 1).unwrap();
        assert!((at_origin + 2.0 * spec.lambda).norm() < 1e-15);

        for p in 3..=5 {
            let spec = ModelSpec::new(p, c(0.1, 0.0), 0.1).unwrap();
            let v = corner_derivative(&spec, c(0.0, 0.0), c(0.0, 0.0), 1, 1).unwrap();
            assert_eq!(v, c(0.0, 0.0));
        }
    }

    #[test]
    fn corner_derivative_order_cap() {
        let spec = ModelSpec::real(2, 0.1).unwrap();
        assert!(corner_derivative(&spec, c(0.1, 0.0), c(0.1, 0.0), 40, 30).is_err());
    }
}
