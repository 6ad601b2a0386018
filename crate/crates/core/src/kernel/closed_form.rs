//! Radical solutions of `z T^p - T + 1 = 0` for p = 2, 3, 4.

use num_complex::Complex64;

use super::{radius, t_series, CutPlanePoint};
use crate::error::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(Delta_+(u), Delta_-(u)) = ((sqrt(1+u) + sqrt u)^{1/3}, (sqrt(1+u) - sqrt u)^{1/3})`
/// with principal roots; the pair satisfies `Delta_+ Delta_- = 1`.
pub fn cardano_deltas(u: Complex64) -> (Complex64, Complex64) {
    let w = (ONE + u).sqrt() + u.sqrt();
    // sqrt(1+u) - sqrt(u) = 1 / w, written without the cancellation
    (w.cbrt(), w.inv().cbrt())
}

/// Both sides of `(D+ - D-)/(D+ + D-) = h (sqrt u - (D+ - D-))`, `h = (1+u)^{-1/2}`.
pub fn quotient_identity_sides(u: Complex64) -> (Complex64, Complex64) {
    let (dp, dm) = cardano_deltas(u);
    let h = (ONE + u).sqrt().inv();
    ((dp - dm) / (dp + dm), h * (u.sqrt() - (dp - dm)))
}

/// `T_p(z)` from the explicit radical formulas (Catalan, Cardano, and the
/// quartic resolvent for p = 4).
pub fn t_closed_form(p: u32, z: Complex64) -> Result<Complex64> {
    if !(2..=4).contains(&p) {
        return Err(Error::UnsupportedOrder(p));
    }
    CutPlanePoint::require_off_cut(p, z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(ONE);
    }
    Ok(match p {
        2 => catalan(z),
        3 => cardano(z),
        _ => quartic(z)?,
    })
}

/// `F_p(z)` from the same radical formulas.
pub fn f_closed_form(p: u32, z: Complex64) -> Result<Complex64> {
    if !(2..=4).contains(&p) {
        return Err(Error::UnsupportedOrder(p));
    }
    CutPlanePoint::require_off_cut(p, z)?;
    Ok(match p {
        2 => (ONE - 4.0 * z).sqrt().inv(),
        3 => {
            let u = -27.0 * z / 4.0;
            let (dp, dm) = cardano_deltas(u);
            (ONE + u).sqrt().inv() * (dp + dm) * 0.5
        }
        _ => {
            let t = t_closed_form(4, z)?;
            t / (4.0 - 3.0 * t)
        }
    })
}

fn catalan(z: Complex64) -> Complex64 {
    // (1 - sqrt(1 - 4z)) / 2z, rationalized
    2.0 / (ONE + (ONE - 4.0 * z).sqrt())
}

fn cardano(z: Complex64) -> Complex64 {
    let u = -27.0 * z / 4.0;
    let (dp, dm) = cardano_deltas(u);
    (dp - dm) / (-3.0 * z).sqrt()
}

/// Radicals appearing in the p = 4 solution, in nesting order:
/// `z^{1/3}`, `sqrt(D)`, `(1 + sqrt D)^{1/3}`, `(1 - sqrt D)^{1/3}`,
/// `(1+4v)^{1/4}`, `(1+4v)^{1/2}`, `(2 - (1+4v)^{1/2})^{1/2}`, `(vz)^{1/4}`.
const QUARTIC_ROOT_ORDERS: [u32; 8] = [3, 2, 3, 3, 4, 2, 2, 4];

type Radicals = [Complex64; 8];

fn principal_root(x: Complex64, k: u32) -> Complex64 {
    match k {
        2 => x.sqrt(),
        3 => x.cbrt(),
        _ => x.powf(1.0 / k as f64),
    }
}

fn unity(k: u32, j: u32) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / k as f64)
}

/// Evaluates the nested radicals at `z`, resolving each root with `choose`.
/// `choose(slot, candidates)` returns the index of the branch to keep.
fn quartic_radicals(
    z: Complex64,
    mut choose: impl FnMut(usize, &[Complex64]) -> usize,
) -> (Complex64, Radicals) {
    let mut rad = [Complex64::new(0.0, 0.0); 8];
    let mut pick = |slot: usize, x: Complex64, rad: &mut Radicals| -> Complex64 {
        let k = QUARTIC_ROOT_ORDERS[slot];
        let base = principal_root(x, k);
        let candidates: Vec<Complex64> = (0..k).map(|j| base * unity(k, j)).collect();
        let chosen = candidates[choose(slot, &candidates)];
        rad[slot] = chosen;
        chosen
    };
    let c = pick(0, z, &mut rad);
    let disc = ONE - 256.0 / 27.0 * z;
    let sd = pick(1, disc, &mut rad);
    let one_plus = ONE + sd;
    let one_minus = ONE - sd;
    // whichever of 1 +- sqrt(D) is small is recomputed from their product 256z/27
    let product = 256.0 / 27.0 * z;
    let (one_plus, one_minus) = if one_plus.norm() >= one_minus.norm() {
        (one_plus, product / one_plus)
    } else {
        (product / one_minus, one_minus)
    };
    let a = pick(2, one_plus, &mut rad);
    let b = pick(3, one_minus, &mut rad);
    let v = c / 2f64.cbrt() * (a + b);
    let r4 = pick(4, ONE + 4.0 * v, &mut rad);
    let r2 = pick(5, ONE + 4.0 * v, &mut rad);
    let s = pick(6, 2.0 - r2, &mut rad);
    let q = pick(7, v * z, &mut rad);
    ((r4 - s) / (2.0 * q), rad)
}

fn quartic(z: Complex64) -> Result<Complex64> {
    let r4 = radius(4)?;
    let start_radius = 0.05 * r4;
    let direction = z / z.norm();
    let start = if z.norm() <= start_radius {
        z
    } else {
        direction * start_radius
    };

    // Branches at the start point: every combination of roots, keep the one
    // closest to the series value.
    let reference = t_series(4, start, 200)?.value;
    let combos: u32 = QUARTIC_ROOT_ORDERS.iter().product();
    let mut best: Option<(f64, Radicals, Complex64)> = None;
    for code in 0..combos {
        let mut digits = [0usize; 8];
        let mut rest = code;
        for (slot, &k) in QUARTIC_ROOT_ORDERS.iter().enumerate() {
            digits[slot] = (rest % k) as usize;
            rest /= k;
        }
        let (t, rad) = quartic_radicals(start, |slot, _| digits[slot]);
        let dist = (t - reference).norm();
        if dist.is_finite() && best.as_ref().is_none_or(|b| dist < b.0) {
            best = Some((dist, rad, t));
        }
    }
    let (dist, mut previous, mut t) = best.expect("at least one branch combination");
    if dist > 1e-8 * reference.norm() {
        return Err(Error::numerical(format!(
            "no radical branch matches the series at {start} (closest {dist:e})"
        )));
    }

    // Continue every radical along the ray by nearest-root matching.
    let target = z.norm();
    let mut rad_now = start.norm();
    let mut h: f64 = 0.05;
    let mut steps = 0usize;
    while rad_now < target {
        steps += 1;
        if steps > 1_000_000 || h < 1e-13 {
            return Err(Error::numerical(format!(
                "radical continuation to {z} stalled at |z| = {rad_now:e}"
            )));
        }
        let next = (rad_now * (1.0 + h)).min(target);
        let there = if next == target { z } else { direction * next };
        let (t_next, rad) = quartic_radicals(there, |slot, candidates| {
            nearest(candidates, previous[slot])
        });
        let smooth = rad.iter().zip(&previous).all(|(new, old)| {
            (new - old).norm() <= 0.25 * new.norm().max(old.norm())
        });
        if smooth {
            previous = rad;
            t = t_next;
            rad_now = next;
            h = (h * 1.25).min(0.1);
        } else {
            h *= 0.5;
        }
    }
    Ok(t)
}

fn nearest(candidates: &[Complex64], target: Complex64) -> usize {
    candidates
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_arguments() {
        let t2 = t_closed_form(2, c(0.1, 0.0)).unwrap();
        assert!((t2.re - 1.127_016_653_792_583).abs() < 1e-14);
        let t3 = t_closed_form(3, c(0.01, 0.0)).unwrap();
        let series = t_series(3, c(0.01, 0.0), 80).unwrap().value;
        assert!((t3 - series).norm() < 1e-12);
        assert!((t3.re - 1.010_312_578_810_11).abs() < 1e-13);
        assert_eq!(t_closed_form(4, c(0.0, 0.0)).unwrap(), ONE);
    }

    #[test]
    fn unsupported_orders() {
        assert_eq!(t_closed_form(5, c(0.1, 0.0)), Err(Error::UnsupportedOrder(5)));
        assert_eq!(f_closed_form(1, c(0.1, 0.0)), Err(Error::UnsupportedOrder(1)));
    }

    #[test]
    fn quartic_on_negative_axis() {
        // principal radicals alone give i * T here; tracking must recover T
        let t = t_closed_form(4, c(-1.0, 0.0)).unwrap();
        assert!((t - c(0.724_491_959_000_515_6, 0.0)).norm() < 1e-12, "{t}");
        let t = t_closed_form(4, c(-0.01, 0.0)).unwrap();
        assert!((t - c(0.990_379_309_684_763_6, 0.0)).norm() < 1e-12, "{t}");
    }

    #[test]
    fn cardano_product_is_one() {
        for u in [c(0.3, 0.0), c(-0.5, 0.2), c(40.0, -3.0), c(-3.0, 1e-3)] {
            let (dp, dm) = cardano_deltas(u);
            assert!((dp * dm - ONE).norm() < 1e-14);
        }
    }
}
