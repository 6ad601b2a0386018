use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::trees::Tree;
use crate::error::{Error, Result};

/// Eigenvalues down to this are treated as roundoff and clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Interpolated replica covariance: unit diagonal, and off the diagonal the
/// smallest edge weight on the tree path between the two vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaCovariance {
    x: DMatrix<f64>,
}

impl ReplicaCovariance {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.x.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn covariance(tree: &Tree, w: &[f64]) -> Result<ReplicaCovariance> {
    if w.len() != tree.edges().len() {
        return Err(Error::Contract(format!(
            "{} weights for {} edges",
            w.len(),
            tree.edges().len()
        )));
    }
    if let Some(bad) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Contract(format!("weight {bad} outside [0, 1]")));
    }
    let n = tree.n();
    let adj = tree.adjacency();
    let mut x = DMatrix::from_element(n, n, 0.0);
    let mut stack = Vec::with_capacity(n);
    for root in 0..n {
        // depth-first walk carrying the running path minimum
        x[(root, root)] = 1.0;
        stack.push((root, usize::MAX, 1.0f64));
        while let Some((v, from, m)) = stack.pop() {
            for &(u, k) in &adj[v] {
                if u != from {
                    let mu = m.min(w[k]);
                    x[(root, u)] = mu;
                    stack.push((u, v, mu));
                }
            }
        }
    }
    Ok(ReplicaCovariance { x })
}

/// Factor `L` with `L L^T = X`, from the eigen-decomposition of `X`.
#[derive(Debug, Clone)]
pub struct ReplicaSampler {
    factor: DMatrix<f64>,
}

impl ReplicaSampler {
    pub fn new(cov: &ReplicaCovariance) -> Result<Self> {
        let eig = SymmetricEigen::new(cov.x.clone());
        let n = cov.n();
        let mut factor = eig.eigenvectors.clone();
        for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -PSD_TOLERANCE {
                return Err(Error::numerical(format!(
                    "replica covariance is not positive semidefinite (eigenvalue {lambda:e})"
                )));
            }
            let scale = lambda.max(0.0).sqrt();
            for row in 0..n {
                factor[(row, col)] *= scale;
            }
        }
        Ok(Self { factor })
    }

    pub fn n(&self) -> usize {
        self.factor.nrows()
    }

    /// Fills `out` with `phi = L xi`, `xi` standard complex normals
    /// (`E|xi|^2 = 1`). The conjugate fields are `phi.conj()`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, xi: &mut Vec<Complex64>, out: &mut [Complex64]) {
        let n = self.n();
        xi.clear();
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for _ in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            xi.push(Complex64::new(re * scale, im * scale));
        }
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (0..n).map(|k| xi[k] * self.factor[(i, k)]).sum();
        }
    }
}

/// One draw of replica fields `(phi_i, phibar_i = conj phi_i)` with
/// `E[phi_i conj phi_j] = x_ij` and `E[phi_i phi_j] = 0`.
pub fn sample_replicas<R: Rng + ?Sized>(
    cov: &ReplicaCovariance,
    rng: &mut R,
) -> Result<Vec<(Complex64, Complex64)>> {
    let sampler = ReplicaSampler::new(cov)?;
    let mut xi = Vec::new();
    let mut phi = vec![Complex64::new(0.0, 0.0); cov.n()];
    sampler.sample_into(rng, &mut xi, &mut phi);
    Ok(phi.into_iter().map(|f| (f, f.conj())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lve::trees::enumerate_trees;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_edge() {
        let tree = Tree::new(2, vec![(0, 1)]).unwrap();
        let cov = covariance(&tree, &[0.5]).unwrap();
        assert_eq!(cov.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
    }

    #[test]
    fn path_minimum() {
        let tree = Tree::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let cov = covariance(&tree, &[0.3, 0.7]).unwrap();
        assert_eq!(cov.get(0, 2), 0.3);
        assert_eq!(cov.get(2, 0), 0.3);
        assert_eq!(cov.get(1, 2), 0.7);
    }

    #[test]
    fn unit_weights_give_all_ones() {
        let tree = &enumerate_trees(4).unwrap()[5];
        let cov = covariance(tree, &[1.0; 3]).unwrap();
        assert!(cov.matrix().iter().all(|&v| v == 1.0));
        assert!(cov.min_eigenvalue() > -PSD_TOLERANCE);
    }

    #[test]
    fn weight_range_is_enforced() {
        let tree = Tree::new(2, vec![(0, 1)]).unwrap();
        assert!(matches!(covariance(&tree, &[1.5]), Err(Error::Contract(_))));
        assert!(matches!(covariance(&tree, &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn all_ones_covariance_gives_equal_replicas() {
        let tree = Tree::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let cov = covariance(&tree, &[1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = sample_replicas(&cov, &mut rng).unwrap();
            assert!((f[0].0 - f[1].0).norm() < 1e-7 && (f[0].0 - f[2].0).norm() < 1e-7);
        }
    }

    #[test]
    fn second_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 100_000;
        // identity covariance: E|phi|^2 = 1
        let id = covariance(&Tree::new(2, vec![(0, 1)]).unwrap(), &[0.0]).unwrap();
        let (mut m, mut m2) = (0.0, 0.0);
        for _ in 0..samples {
            let v = sample_replicas(&id, &mut rng).unwrap()[0].0.norm_sqr();
            m += v;
            m2 += v * v;
        }
        let mean = m / samples as f64;
        let se = ((m2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se);

        let half = covariance(&Tree::new(2, vec![(0, 1)]).unwrap(), &[0.5]).unwrap();
        let (mut m, mut m2) = (Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..samples {
            let f = sample_replicas(&half, &mut rng).unwrap();
            let v = f[0].0 * f[1].1;
            m += v;
            m2 += v.norm_sqr();
        }
        let mean = m / samples as f64;
        let se = ((m2 / samples as f64 - mean.norm_sqr()) / samples as f64).sqrt();
        assert!((mean - 0.5).norm() < 3.0 * se, "{mean} +- {se}");
    }
}
