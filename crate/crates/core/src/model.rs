use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interaction order and coupling of the `(phibar phi)^p` model.
///
/// `epsilon` is the half-angle of the excluded sector. For couplings it bounds
/// `|arg lambda| < pi - epsilon`; for kernel arguments it is the sector
/// `|arg z| >= epsilon` used when fitting derivative bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: u32,
    pub lambda: Complex64,
    pub epsilon: f64,
}

impl ModelSpec {
    pub fn new(p: u32, lambda: Complex64, epsilon: f64) -> Result<Self> {
        check_order(p)?;
        if !(epsilon > 0.0 && epsilon < PI) {
            return Err(Error::Domain(format!(
                "sector half-angle must lie in (0, pi), got {epsilon}"
            )));
        }
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::Domain(format!("non-finite coupling {lambda}")));
        }
        if lambda != Complex64::new(0.0, 0.0) && lambda.arg().abs() >= PI - epsilon {
            return Err(Error::Domain(format!(
                "coupling {lambda} lies outside the pacman domain |arg| < pi - {epsilon}"
            )));
        }
        Ok(Self { p, lambda, epsilon })
    }

    /// Real positive coupling with a default sector of 0.1 rad.
    pub fn real(p: u32, lambda: f64) -> Result<Self> {
        Self::new(p, Complex64::new(lambda, 0.0), 0.1)
    }

    pub fn is_free(&self) -> bool {
        self.lambda == Complex64::new(0.0, 0.0)
    }
}

pub(crate) fn check_order(p: u32) -> Result<()> {
    if p < 2 {
        Err(Error::InvalidOrder(p))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_order() {
        assert_eq!(ModelSpec::real(1, 0.1), Err(Error::InvalidOrder(1)));
    }

    #[test]
    fn pacman_domain() {
        assert!(ModelSpec::new(3, Complex64::from_polar(0.1, 2.0), 0.3).is_ok());
        assert!(ModelSpec::new(3, Complex64::from_polar(0.1, PI - 0.2), 0.3).is_err());
        assert!(ModelSpec::new(3, Complex64::new(-0.1, 0.0), 0.3).is_err());
        assert!(ModelSpec::new(3, Complex64::new(0.0, 0.0), 0.3).is_ok());
    }
}
