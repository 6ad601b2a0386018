//! Truncated Taylor jets in one and two displacement variables.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Taylor coefficients `c_k = f^(k)(base) / k!` for `k = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateJet {
    base: Complex64,
    coeffs: Vec<Complex64>,
}

impl UnivariateJet {
    pub fn new(base: Complex64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Contract("a jet needs at least one coefficient".into()));
        }
        Ok(Self { base, coeffs })
    }

    pub fn constant(base: Complex64, value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![ZERO; order + 1];
        coeffs[0] = value;
        Self { base, coeffs }
    }

    /// The displacement `h` itself: `base + h` has jet `[base, 1, 0, ...]`.
    pub fn displacement(base: Complex64, order: usize) -> Self {
        let mut jet = Self::constant(base, ZERO, order);
        if order >= 1 {
            jet.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        jet
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    /// `k`-th derivative at the base point.
    pub fn derivative(&self, k: usize) -> Complex64 {
        self.coeff(k) * factorial_f64(k)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::Contract(format!(
                "jet orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        if self.base != other.base {
            return Err(Error::Contract(format!(
                "jet base points differ: {} vs {}",
                self.base, other.base
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { base: self.base, coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.coeffs.len();
        let mut coeffs = vec![ZERO; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs[..n - i].iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(Self { base: self.base, coeffs })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            base: self.base,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

impl Add for &UnivariateJet {
    type Output = UnivariateJet;

    /// Panics on mismatched jets; use [`UnivariateJet::try_add`] to recover.
    fn add(self, rhs: Self) -> UnivariateJet {
        self.try_add(rhs).expect("jet mismatch")
    }
}

impl Mul for &UnivariateJet {
    type Output = UnivariateJet;

    fn mul(self, rhs: Self) -> UnivariateJet {
        self.try_mul(rhs).expect("jet mismatch")
    }
}

/// Coefficients of `u^i v^j` for `i <= a_order`, `j <= b_order`, stored row
/// major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateJet {
    a_order: usize,
    b_order: usize,
    coeffs: Vec<Complex64>,
}

impl BivariateJet {
    pub fn zero(a_order: usize, b_order: usize) -> Self {
        Self {
            a_order,
            b_order,
            coeffs: vec![ZERO; (a_order + 1) * (b_order + 1)],
        }
    }

    pub fn constant(a_order: usize, b_order: usize, value: Complex64) -> Self {
        let mut jet = Self::zero(a_order, b_order);
        jet.coeffs[0] = value;
        jet
    }

    /// Outer product of a polynomial in `u` and one in `v`, truncated.
    pub fn separable(a_order: usize, b_order: usize, in_u: &[Complex64], in_v: &[Complex64]) -> Self {
        let mut jet = Self::zero(a_order, b_order);
        for (i, x) in in_u.iter().take(a_order + 1).enumerate() {
            for (j, y) in in_v.iter().take(b_order + 1).enumerate() {
                jet.coeffs[i * (b_order + 1) + j] = x * y;
            }
        }
        jet
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.a_order, self.b_order)
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        if i > self.a_order || j > self.b_order {
            return ZERO;
        }
        self.coeffs[i * (self.b_order + 1) + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.coeffs[i * (self.b_order + 1) + j] = value;
    }

    /// Mixed partial `d^i/du^i d^j/dv^j` at the origin.
    pub fn derivative(&self, i: usize, j: usize) -> Complex64 {
        self.coeff(i, j) * factorial_f64(i) * factorial_f64(j)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.orders() != other.orders() {
            return Err(Error::Contract(format!(
                "bivariate jet orders differ: {:?} vs {:?}",
                self.orders(),
                other.orders()
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (o, x) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += x;
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let (na, nb) = (self.a_order + 1, self.b_order + 1);
        let mut out = Self::zero(self.a_order, self.b_order);
        for i1 in 0..na {
            for j1 in 0..nb {
                let x = self.coeffs[i1 * nb + j1];
                if x == ZERO {
                    continue;
                }
                for i2 in 0..na - i1 {
                    for j2 in 0..nb - j1 {
                        out.coeffs[(i1 + i2) * nb + j1 + j2] += x * other.coeffs[i2 * nb + j2];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn add_constant(&mut self, value: Complex64) {
        self.coeffs[0] += value;
    }
}

pub(crate) fn factorial_f64(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}
