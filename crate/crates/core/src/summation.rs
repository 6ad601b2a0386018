use num_complex::Complex64;

/// Neumaier-compensated sum of complex values. Real and imaginary parts are
/// compensated independently.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn step(acc: &mut (f64, f64), x: f64) {
    let (sum, comp) = *acc;
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    *acc = (t, comp + c);
}

impl NeumaierSum {
    pub fn add(&mut self, z: Complex64) {
        step(&mut self.re, z.re);
        step(&mut self.im, z.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

impl FromIterator<Complex64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for z in iter {
            s.add(z);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100].map(|x| Complex64::new(x, -x));
        let s: NeumaierSum = xs.into_iter().collect();
        assert_eq!(s.total(), Complex64::new(2.0, -2.0));
    }
}
