//! Exact integer and rational combinatorics: Fuss-Catalan numbers, the
//! coefficients of `F_p`, perturbative coefficients of `Z_p`, Cayley counts and
//! the tree-expansion convergence majorant.
//!
//! Everything here is computed with arbitrary precision so that these
//! functions can serve as oracles for the floating point layers above.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::model::ModelSpec;
use crate::summation::NeumaierSum;

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) here
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `binom(pn, n)`, the `n`-th coefficient of `F_p`.
pub fn binom_pn_n(p: u32, n: u64) -> BigUint {
    binomial(p as u64 * n, n)
}

/// `C_n^(p) = binom(pn, n) / ((p-1)n + 1)`.
pub fn fuss_catalan_number(p: u32, n: u64) -> BigUint {
    let denom = (p as u64 - 1) * n + 1;
    binom_pn_n(p, n) / denom
}

/// `C_n^(p) = binom(pn + 1, n) / (pn + 1)`, the other standard form.
pub fn fuss_catalan_number_alt(p: u32, n: u64) -> BigUint {
    let m = p as u64 * n + 1;
    binomial(m, n) / m
}

/// Coefficient of `lambda^n (Jbar J)^q` in `Z_p(lambda, Jbar, J)`:
/// `(-1)^n (pn + q)! / (n! (q!)^2)`.
pub fn z_series_coefficient(p: u32, n: u64, q: u64) -> BigRational {
    let num = BigInt::from(factorial(p as u64 * n + q));
    let qf = factorial(q);
    let den = BigInt::from(factorial(n) * &qf * &qf);
    let value = BigRational::new(num, den);
    if n % 2 == 1 {
        -value
    } else {
        value
    }
}

/// Truncated perturbative series `sum_{n <= n_max} c_{n,q} lambda^n`.
///
/// The coefficients are exact; each is rounded once before multiplication by
/// the (complex, floating point) coupling power. The series is divergent:
/// past the optimal truncation order the partial sums grow factorially.
pub fn perturbative_partial_sum(spec: &ModelSpec, n_max: u64, q: u64) -> Complex64 {
    let mut sum = NeumaierSum::default();
    let mut power = Complex64::new(1.0, 0.0);
    for n in 0..=n_max {
        let c = z_series_coefficient(spec.p, n, q)
            .to_f64()
            .unwrap_or(f64::INFINITY);
        sum.add(power * c);
        power *= spec.lambda;
    }
    sum.total()
}

/// Coefficients `l_0..=l_{n_max}` of `log Z_p(lambda) = sum_n l_n lambda^n`,
/// by the formal logarithm of the exact `Z_p` series.
pub fn log_z_series_coefficients(p: u32, n_max: u64) -> Vec<BigRational> {
    let c: Vec<BigRational> = (0..=n_max).map(|n| z_series_coefficient(p, n, 0)).collect();
    let mut l = vec![BigRational::zero(); n_max as usize + 1];
    for n in 1..=n_max as usize {
        // n l_n = n c_n - sum_{k<n} k l_k c_{n-k}   (c_0 = 1)
        let mut acc = BigRational::from_integer(BigInt::from(n)) * &c[n];
        for k in 1..n {
            acc -= BigRational::from_integer(BigInt::from(k)) * &l[k] * &c[n - k];
        }
        l[n] = acc / BigRational::from_integer(BigInt::from(n));
    }
    l
}

/// Number of labeled trees on `n` vertices.
pub fn cayley_count(n: u64) -> BigUint {
    match n {
        0 => BigUint::zero(),
        1 | 2 => BigUint::one(),
        _ => BigUint::from(n).pow((n - 2) as u32),
    }
}

/// Calls `visit` with every composition of `total` into `parts` positive parts.
pub fn for_each_composition(total: usize, parts: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(
        remaining: usize,
        slots: usize,
        buf: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if slots == 1 {
            buf.push(remaining);
            visit(buf);
            buf.pop();
            return;
        }
        // leave at least one unit for each later slot
        for d in 1..=remaining - (slots - 1) {
            buf.push(d);
            rec(remaining - d, slots - 1, buf, visit);
            buf.pop();
        }
    }
    if parts == 0 || total < parts {
        return;
    }
    let mut buf = Vec::with_capacity(parts);
    rec(total, parts, &mut buf, &mut visit);
}

/// Number of labeled trees with prescribed degrees: `(n-2)! / prod (d_i - 1)!`.
pub fn trees_with_degrees(degrees: &[usize]) -> BigUint {
    let n = degrees.len() as u64;
    if n < 2 {
        return BigUint::one();
    }
    let den = degrees
        .iter()
        .fold(BigUint::one(), |acc, &d| acc * factorial(d as u64 - 1));
    factorial(n - 2) / den
}

/// `sum_{d} (n-2)!/prod(d_i-1)! * prod (d_i-1)!` over degree sequences of
/// trees on `n` vertices; the combinatorial weight of the order-`n` majorant.
fn majorant_weight(n: usize) -> BigUint {
    static MEMO: OnceLock<Mutex<HashMap<usize, BigUint>>> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    if let Some(w) = memo.lock().unwrap().get(&n) {
        return w.clone();
    }
    let mut total = BigUint::zero();
    for_each_composition(2 * n - 2, n, |degrees| {
        let corner_factorials = degrees
            .iter()
            .fold(BigUint::one(), |acc, &d| acc * factorial(d as u64 - 1));
        total += trees_with_degrees(degrees) * corner_factorials;
    });
    memo.lock().unwrap().insert(n, total.clone());
    total
}

/// Per-order terms of the tree-expansion majorant,
/// `(1/n!) sum_d [(n-2)!/prod (d_i-1)!] prod (d_i-1)! K^{d_i} |lambda|^{d_i/(2p-2)}`.
///
/// Order 1 (the single loop vertex) uses the surrogate `K |lambda|^{1/(2p-2)}`;
/// this is a convention, not a derived bound. Index `i` holds order `i + 1`.
pub fn majorant_terms(p: u32, abs_lambda: f64, k: f64, n_max: usize) -> Vec<f64> {
    let exponent = 1.0 / (2.0 * p as f64 - 2.0);
    let scale = k * abs_lambda.powf(exponent);
    (1..=n_max)
        .map(|n| {
            if n == 1 {
                return scale;
            }
            let weight = majorant_weight(n).to_f64().unwrap_or(f64::INFINITY);
            let n_fact = factorial(n as u64).to_f64().unwrap_or(f64::INFINITY);
            weight / n_fact * scale.powi(2 * n as i32 - 2)
        })
        .collect()
}

pub fn majorant_partial_sum(p: u32, abs_lambda: f64, k: f64, n_max: usize) -> f64 {
    majorant_terms(p, abs_lambda, k, n_max).iter().sum()
}

/// Smallest `K` for which every observed order magnitude is dominated by the
/// majorant term of the same order. `magnitudes[i]` is the order `i + 1` term.
pub fn fit_majorant_constant(p: u32, abs_lambda: f64, magnitudes: &[f64]) -> f64 {
    let unit = majorant_terms(p, abs_lambda, 1.0, magnitudes.len());
    magnitudes
        .iter()
        .zip(&unit)
        .enumerate()
        .map(|(i, (&m, &u))| {
            let n = i + 1;
            // order n scales as K^{max(1, 2n-2)}
            let power = if n == 1 { 1.0 } else { 2.0 * n as f64 - 2.0 };
            if u > 0.0 {
                (m / u).powf(1.0 / power)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn catalan_numbers() {
        let got: Vec<_> = (0..=6).map(|n| fuss_catalan_number(2, n)).collect();
        let want: Vec<_> = [1u64, 1, 2, 5, 14, 42, 132].iter().map(|&v| big(v)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn ternary_fuss_catalan() {
        let got: Vec<_> = (0..=4).map(|n| fuss_catalan_number(3, n)).collect();
        let want: Vec<_> = [1u64, 1, 3, 12, 55].iter().map(|&v| big(v)).collect();
        assert_eq!(got, want);
        for p in 2..=9 {
            assert_eq!(fuss_catalan_number(p, 0), big(1));
        }
    }

    #[test]
    fn both_fuss_catalan_forms_agree() {
        for p in 2..=8 {
            for n in 0..=40 {
                let c = fuss_catalan_number(p, n);
                assert_eq!(c, fuss_catalan_number_alt(p, n), "p={p} n={n}");
                assert_eq!(c * ((p as u64 - 1) * n + 1), binom_pn_n(p, n));
            }
        }
    }

    #[test]
    fn binom_pn_n_values() {
        assert_eq!(binom_pn_n(3, 2), big(15));
        assert_eq!(binom_pn_n(3, 3), big(84));
        assert_eq!(binom_pn_n(5, 0), big(1));
    }

    #[test]
    fn perturbative_coefficients() {
        let want = [1i64, -2, 12, -120];
        for (n, &w) in want.iter().enumerate() {
            assert_eq!(
                z_series_coefficient(2, n as u64, 0),
                BigRational::from_integer(BigInt::from(w))
            );
        }
        assert_eq!(
            z_series_coefficient(3, 2, 0),
            BigRational::from_integer(BigInt::from(360))
        );
        assert_eq!(z_series_coefficient(4, 0, 0), BigRational::one());
        // (p n + q)!/(n! q!^2) with p=2, n=1, q=2: 4!/(1 * 4) = 6, sign -
        assert_eq!(
            z_series_coefficient(2, 1, 2),
            BigRational::from_integer(BigInt::from(-6))
        );
    }

    #[test]
    fn two_point_first_order_slope() {
        // G = Z_1 / Z_0 with Z_q = sum_n c_{n,q} lambda^n; slope = c_{1,1}/c_{0,1} - c_{1,0}
        for (p, slope) in [(2u32, -4i64), (3, -18)] {
            let r = z_series_coefficient(p, 1, 1) / z_series_coefficient(p, 0, 1)
                - z_series_coefficient(p, 1, 0);
            assert_eq!(r, BigRational::from_integer(BigInt::from(slope)));
        }
    }

    #[test]
    fn log_series() {
        let l = log_z_series_coefficients(2, 4);
        let int = |v: i64| BigRational::from_integer(BigInt::from(v));
        assert_eq!(l[0], int(0));
        assert_eq!(l[1], int(-2));
        assert_eq!(l[2], int(10));
        assert_eq!(l[3], BigRational::new(BigInt::from(-296), BigInt::from(3)));
        assert_eq!(l[4], int(1412));
    }

    #[test]
    fn partial_sums() {
        let spec = ModelSpec::real(2, 0.01).unwrap();
        let s = perturbative_partial_sum(&spec, 3, 0);
        assert!((s.re - 0.98108).abs() < 1e-15);
        let free = ModelSpec::real(2, 0.0).unwrap();
        assert_eq!(perturbative_partial_sum(&free, 5, 0).re, 1.0);
    }

    #[test]
    fn partial_sums_diverge() {
        let spec = ModelSpec::real(2, 0.01).unwrap();
        let exact = 0.981_094_307_315_387_9; // radial quadrature of e^{-t - 0.01 t^2}
        let errors: Vec<f64> = (0..200)
            .map(|n| (perturbative_partial_sum(&spec, n, 0).re - exact).abs())
            .collect();
        let best = errors
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(best > 3 && best < 199, "optimal truncation at {best}");
        assert!(errors[199].is_nan() || errors[199] >= 1.0);
    }

    #[test]
    fn cayley() {
        let want = [1u64, 1, 3, 16, 125, 1296];
        for (i, &w) in want.iter().enumerate() {
            assert_eq!(cayley_count(i as u64 + 1), big(w));
        }
    }

    #[test]
    fn degree_refined_cayley_sums_to_cayley() {
        for n in 2..=9usize {
            let mut total = BigUint::zero();
            for_each_composition(2 * n - 2, n, |d| total += trees_with_degrees(d));
            assert_eq!(total, cayley_count(n as u64), "n={n}");
        }
    }

    #[test]
    fn majorant_ratio_signals_convergence_region() {
        let small = majorant_terms(2, 1e-4, 1.0, 10);
        assert!(small.windows(2).skip(1).all(|w| w[1] < w[0]));
        let large = majorant_terms(2, 10.0, 4.0, 10);
        assert!(large.windows(2).skip(1).all(|w| w[1] > w[0]));
        assert_eq!(majorant_terms(3, 0.5, 2.0, 1), vec![2.0 * 0.5f64.powf(0.25)]);
    }

    #[test]
    fn fitted_majorant_dominates() {
        let mags = [3e-2, 4e-3, 5e-4, 7e-5];
        let k = fit_majorant_constant(2, 0.05, &mags);
        let terms = majorant_terms(2, 0.05, k, mags.len());
        for (m, t) in mags.iter().zip(&terms) {
            assert!(*m <= t * (1.0 + 1e-12));
        }
    }
}
