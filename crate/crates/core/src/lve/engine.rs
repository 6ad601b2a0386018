use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covariance::{covariance, ReplicaSampler};
use super::trees::{enumerate_trees, orient_tree, Tree};
use crate::derivative::corner_jet;
use crate::error::{Error, Result};
use crate::kernel::{radius, s_eval};
use crate::model::ModelSpec;
use crate::oracle::{contour_angle, integrate_ray, s_from_derivative_integral};
use crate::quadrature::gauss_legendre_unit;
use crate::summation::NeumaierSum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest expansion order accepted by [`log_z_partial`].
pub const MAX_LVE_ORDER: usize = 6;
/// Gauss-Legendre nodes per `w` axis under [`WRule::TensorQuadrature`].
pub const TENSOR_NODES_PER_AXIS: usize = 8;
/// Largest tree for which the tensor rule is used.
pub const TENSOR_MAX_VERTICES: usize = 4;
/// Samples closer than this to the cut are redrawn.
pub const CUT_PROXIMITY: f64 = 1e-12;
/// Redraw fraction at which sampling is abandoned.
pub const MAX_REDRAW_FRACTION: f64 = 1e-4;
const JOINT_CHUNK: usize = 4096;
const RADIAL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WRule {
    /// Tensor Gauss-Legendre in `w` for trees with at most four vertices,
    /// joint Monte Carlo above.
    TensorQuadrature,
    JointMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LveConfig {
    pub mc_samples: usize,
    pub w_rule: WRule,
    pub master_seed: u64,
    pub n_max: usize,
}

impl LveConfig {
    pub fn new(mc_samples: usize, w_rule: WRule, master_seed: u64, n_max: usize) -> Result<Self> {
        let config = Self {
            mc_samples,
            w_rule,
            master_seed,
            n_max,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples < 100 {
            return Err(Error::Contract(format!(
                "mc_samples must be at least 100, got {}",
                self.mc_samples
            )));
        }
        if self.n_max < 1 {
            return Err(Error::Contract("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    fn exact(value: Complex64, seed: u64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: 0,
            seed,
        }
    }
}

/// Per-order estimates (index `i` is order `i + 1`, already divided by `n!`)
/// and their running total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvePartialSum {
    pub orders: Vec<MCEstimate>,
    pub cumulative: MCEstimate,
}

impl LvePartialSum {
    pub fn order_magnitudes(&self) -> Vec<f64> {
        self.orders.iter().map(|o| o.value.norm()).collect()
    }
}

/// `prod_i d^{a_i}/dphi_i^{a_i} d^{b_i}/dphibar_i^{b_i} S_p(z_i)` with
/// `a_i = in_degree_i`, `b_i = out_degree_i`.
pub fn tree_integrand(
    spec: &ModelSpec,
    ot: &super::trees::OrientedTree,
    fields: &[(Complex64, Complex64)],
) -> Result<Complex64> {
    if fields.len() != ot.n {
        return Err(Error::Contract(format!(
            "{} field pairs for {} vertices",
            fields.len(),
            ot.n
        )));
    }
    let mut product = Complex64::new(1.0, 0.0);
    for (i, &(phi, phibar)) in fields.iter().enumerate() {
        let (a, b) = (ot.in_degree[i], ot.out_degree[i]);
        let jet = corner_jet(spec, phi, phibar, a, b, a + b)?;
        product *= jet.derivative(a, b);
    }
    Ok(product)
}

fn cut_distance(z: Complex64, r: f64) -> f64 {
    if z.re >= r {
        z.im.abs()
    } else {
        (z - r).norm()
    }
}

/// A tree with every orientation precomputed as per-vertex `d/dphi` counts.
struct TreePlan {
    n: usize,
    loads: Vec<usize>,
    in_degrees: Vec<Vec<usize>>,
}

impl TreePlan {
    fn new(tree: &Tree) -> Result<Self> {
        let in_degrees = (0..tree.orientation_count())
            .map(|idx| orient_tree(tree, idx).map(|ot| ot.in_degree))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: tree.n(),
            loads: tree.degrees(),
            in_degrees,
        })
    }

    /// Orientation-summed integrand, or `None` when a vertex sits on the cut.
    fn oriented_sum(
        &self,
        spec: &ModelSpec,
        cut: f64,
        phi: &[Complex64],
        table: &mut Vec<Vec<Complex64>>,
    ) -> Result<Option<Complex64>> {
        table.clear();
        for (i, &f) in phi.iter().enumerate() {
            let fbar = f.conj();
            let z = -spec.lambda * (f * fbar).powu(spec.p - 1);
            if cut_distance(z, cut) < CUT_PROXIMITY {
                return Ok(None);
            }
            let d = self.loads[i];
            let jet = corner_jet(spec, f, fbar, d, d, d)?;
            table.push((0..=d).map(|a| jet.derivative(a, d - a)).collect());
        }
        let mut sum = NeumaierSum::default();
        for ins in &self.in_degrees {
            let term = ins
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (i, &a)| acc * table[i][a]);
            sum.add(term);
        }
        Ok(Some(sum.total()))
    }
}

/// Running first and second moments of complex samples.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: NeumaierSum,
    sum_sq: f64,
    redraws: u64,
}

impl Moments {
    fn push(&mut self, x: Complex64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq += x.norm_sqr();
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum.add(other.sum.total());
        self.sum_sq += other.sum_sq;
        self.redraws += other.redraws;
    }

    fn mean(&self) -> Complex64 {
        self.sum.total() / self.count as f64
    }

    /// Variance of the mean.
    fn mean_variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = (self.sum_sq / n - self.mean().norm_sqr()).max(0.0) * n / (n - 1.0);
        var / n
    }
}

/// Independent stream for `(master_seed, tree, unit)`; ChaCha keyed on all three.
fn stream(master_seed: u64, tree_key: u64, unit: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&tree_key.to_le_bytes());
    key[16..24].copy_from_slice(&unit.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stable identifier of a labeled tree, independent of enumeration order.
fn tree_key(tree: &Tree) -> u64 {
    let mut edges: Vec<(usize, usize)> = tree
        .edges()
        .iter()
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    edges.sort_unstable();
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ tree.n() as u64;
    for (u, v) in edges {
        for x in [u as u64, v as u64] {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn check_redraws(m: &Moments, budget: usize) -> Result<()> {
    if m.redraws as f64 > MAX_REDRAW_FRACTION * budget as f64 {
        return Err(Error::numerical(format!(
            "{} of {} field draws landed within {CUT_PROXIMITY:e} of the cut",
            m.redraws, budget
        )));
    }
    Ok(())
}

fn sample_fields<R: Rng>(
    spec: &ModelSpec,
    plan: &TreePlan,
    sampler: &ReplicaSampler,
    rng: &mut R,
    count: usize,
    budget: usize,
    moments: &mut Moments,
) -> Result<()> {
    let cut = radius(spec.p)?;
    let mut xi = Vec::with_capacity(plan.n);
    let mut phi = vec![ZERO; plan.n];
    let mut table = Vec::with_capacity(plan.n);
    let mut accepted = 0;
    while accepted < count {
        sampler.sample_into(rng, &mut xi, &mut phi);
        match plan.oriented_sum(spec, cut, &phi, &mut table)? {
            Some(v) => {
                moments.push(v);
                accepted += 1;
            }
            None => {
                moments.redraws += 1;
                check_redraws(moments, budget)?;
            }
        }
    }
    Ok(())
}

/// The single loop vertex, `int_0^inf e^{-t} S_p(-lambda t^{p-1}) dt`.
fn single_vertex(spec: &ModelSpec) -> Result<Complex64> {
    let p = spec.p;
    let lambda = spec.lambda;
    let r = integrate_ray(contour_angle(p, lambda), RADIAL_TOL, |t| {
        Ok((-t).exp() * s_eval(p, -lambda * t.powu(p - 1))?)
    })?;
    Ok(r.value)
}

/// Sum over all orientations of `tree` of the `w` and field integrals of
/// [`tree_integrand`]. Every orientation sees the same draws.
pub fn tree_term(spec: &ModelSpec, tree: &Tree, config: &LveConfig) -> Result<MCEstimate> {
    config.validate()?;
    let seed = config.master_seed;
    if spec.is_free() {
        return Ok(MCEstimate::exact(ZERO, seed));
    }
    let n = tree.n();
    if n == 1 {
        return Ok(MCEstimate::exact(single_vertex(spec)?, seed));
    }
    let plan = TreePlan::new(tree)?;
    let key = tree_key(tree);
    let budget = config.mc_samples;
    let axes = n - 1;

    if config.w_rule == WRule::TensorQuadrature && n <= TENSOR_MAX_VERTICES {
        let rule = gauss_legendre_unit(TENSOR_NODES_PER_AXIS);
        let nodes = TENSOR_NODES_PER_AXIS.pow(axes as u32);
        let per_node = (budget / nodes).max(2);
        let parts = (0..nodes)
            .into_par_iter()
            .map(|node| -> Result<(f64, Moments)> {
                let mut w = vec![0.0; axes];
                let mut weight = 1.0;
                let mut rest = node;
                for slot in w.iter_mut() {
                    let (x, wt) = rule[rest % TENSOR_NODES_PER_AXIS];
                    rest /= TENSOR_NODES_PER_AXIS;
                    *slot = x;
                    weight *= wt;
                }
                let sampler = ReplicaSampler::new(&covariance(tree, &w)?)?;
                let mut rng = stream(seed, key, node as u64);
                let mut m = Moments::default();
                sample_fields(spec, &plan, &sampler, &mut rng, per_node, per_node, &mut m)?;
                Ok((weight, m))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut value = NeumaierSum::default();
        let mut variance = 0.0;
        for (weight, m) in &parts {
            value.add(m.mean() * *weight);
            variance += weight * weight * m.mean_variance();
        }
        return Ok(MCEstimate {
            value: value.total(),
            std_error: variance.sqrt(),
            samples: (per_node * nodes) as u64,
            seed,
        });
    }

    let chunks = budget.div_ceil(JOINT_CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Moments> {
            let count = JOINT_CHUNK.min(budget - chunk * JOINT_CHUNK);
            let mut rng = stream(seed, key, chunk as u64);
            let mut m = Moments::default();
            let mut w = vec![0.0; axes];
            for _ in 0..count {
                for slot in w.iter_mut() {
                    *slot = rng.random::<f64>();
                }
                let sampler = ReplicaSampler::new(&covariance(tree, &w)?)?;
                sample_fields(spec, &plan, &sampler, &mut rng, 1, count, &mut m)?;
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Moments::default();
    for m in &parts {
        total.merge(m);
    }
    check_redraws(&total, budget)?;
    Ok(MCEstimate {
        value: total.mean(),
        std_error: total.mean_variance().sqrt(),
        samples: total.count,
        seed,
    })
}

/// `(1/n!) sum_T tree_term(T)` for one order `n`.
pub fn order_term(spec: &ModelSpec, n: usize, config: &LveConfig) -> Result<MCEstimate> {
    let trees = enumerate_trees(n)?;
    let terms = trees
        .par_iter()
        .map(|t| tree_term(spec, t, config))
        .collect::<Result<Vec<_>>>()?;
    let n_fact: f64 = (1..=n).map(|k| k as f64).product();
    let value: NeumaierSum = terms.iter().map(|t| t.value).collect();
    let variance: f64 = terms.iter().map(|t| t.std_error * t.std_error).sum();
    Ok(MCEstimate {
        value: value.total() / n_fact,
        std_error: variance.sqrt() / n_fact,
        samples: terms.iter().map(|t| t.samples).sum(),
        seed: config.master_seed,
    })
}

/// Partial sum of the tree expansion of `log Z_p(lambda)` through `config.n_max`.
pub fn log_z_partial(spec: &ModelSpec, config: &LveConfig) -> Result<LvePartialSum> {
    config.validate()?;
    if config.n_max > MAX_LVE_ORDER {
        return Err(Error::Size(format!(
            "expansion order capped at {MAX_LVE_ORDER}, asked for {}",
            config.n_max
        )));
    }
    let orders = (1..=config.n_max)
        .map(|n| order_term(spec, n, config))
        .collect::<Result<Vec<_>>>()?;
    let value: NeumaierSum = orders.iter().map(|o| o.value).collect();
    let variance: f64 = orders.iter().map(|o| o.std_error * o.std_error).sum();
    let cumulative = MCEstimate {
        value: value.total(),
        std_error: variance.sqrt(),
        samples: orders.iter().map(|o| o.samples).sum(),
        seed: config.master_seed,
    };
    Ok(LvePartialSum { orders, cumulative })
}

/// The single-vertex term recomputed as `int_0^inf e^{-r} int_0^1 z S'(t z) dt dr`
/// with `z = -lambda r^{p-1}`.
pub fn order_one_ibp_check(spec: &ModelSpec) -> Result<Complex64> {
    if spec.is_free() {
        return Ok(ZERO);
    }
    let p = spec.p;
    let lambda = spec.lambda;
    let r = integrate_ray(contour_angle(p, lambda), 1e-12, |r| {
        let inner = s_from_derivative_integral(p, -lambda * r.powu(p - 1), 1e-14)?;
        Ok((-r).exp() * inner.value)
    })?;
    Ok(r.value)
}

/// Direct single-vertex quadrature, the reference for [`order_one_ibp_check`].
pub fn order_one_direct(spec: &ModelSpec) -> Result<Complex64> {
    if spec.is_free() {
        return Ok(ZERO);
    }
    single_vertex(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lve::covariance::sample_replicas;
    use crate::oracle::z_oracle;

    fn config(samples: usize, n_max: usize) -> LveConfig {
        LveConfig::new(samples, WRule::TensorQuadrature, 7, n_max).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(LveConfig::new(99, WRule::JointMc, 0, 1).is_err());
        assert!(LveConfig::new(100, WRule::JointMc, 0, 0).is_err());
        let spec = ModelSpec::real(2, 0.1).unwrap();
        let cfg = LveConfig::new(100, WRule::JointMc, 0, 7).unwrap();
        assert!(matches!(log_z_partial(&spec, &cfg), Err(Error::Size(_))));
    }

    #[test]
    fn free_theory_vanishes() {
        let spec = ModelSpec::real(2, 0.0).unwrap();
        let out = log_z_partial(&spec, &config(100, 3)).unwrap();
        assert!(out.orders.iter().all(|o| o.value == ZERO && o.std_error == 0.0));
        assert_eq!(out.cumulative.value, ZERO);
    }

    #[test]
    fn single_vertex_integrand_is_action() {
        let spec = ModelSpec::real(3, 0.2).unwrap();
        let tree = &enumerate_trees(1).unwrap()[0];
        let ot = orient_tree(tree, 0).unwrap();
        let f = Complex64::new(0.7, -0.4);
        let v = tree_integrand(&spec, &ot, &[(f, f.conj())]).unwrap();
        let z = -spec.lambda * (f * f.conj()).powu(2);
        assert!((v - s_eval(3, z).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn two_vertex_integrand_near_origin() {
        let tree = &enumerate_trees(2).unwrap()[0];
        let ot = orient_tree(tree, 0).unwrap();
        let tiny = Complex64::new(1e-9, 1e-9);
        let fields = [(tiny, tiny.conj()); 2];
        let spec = ModelSpec::real(2, 0.05).unwrap();
        // each first-order corner is -2 lambda times the opposite field
        let v = tree_integrand(&spec, &ot, &fields).unwrap() / (tiny * tiny.conj());
        assert!((v - Complex64::new(0.01, 0.0)).norm() < 1e-10);
        let spec = ModelSpec::real(3, 0.05).unwrap();
        assert!(tree_integrand(&spec, &ot, &fields).unwrap().norm() < 1e-12);
    }

    #[test]
    fn single_vertex_routes_agree() {
        for (p, lambda) in [(2, 0.1), (3, 0.05)] {
            let spec = ModelSpec::real(p, lambda).unwrap();
            let direct = order_one_direct(&spec).unwrap();
            let ibp = order_one_ibp_check(&spec).unwrap();
            assert!((direct - ibp).norm() < 1e-8, "p={p}: {direct} vs {ibp}");
        }
        assert_eq!(order_one_ibp_check(&ModelSpec::real(2, 0.0).unwrap()).unwrap(), ZERO);
    }

    /// Gauss-Hermite nodes and weights for `int e^{-x^2} f(x) dx` (Golub-Welsch).
    fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
        let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::new(jacobi);
        (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect()
    }

    #[test]
    fn hermite_rule_moments() {
        let rule = gauss_hermite(20);
        let m0: f64 = rule.iter().map(|r| r.1).sum();
        let m2: f64 = rule.iter().map(|(x, w)| w * x * x).sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!((m2 - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_vertex_term_matches_dense_quadrature() {
        let spec = ModelSpec::real(2, 0.05).unwrap();
        let tree = &enumerate_trees(2).unwrap()[0];
        let plan = TreePlan::new(tree).unwrap();
        let cut = radius(2).unwrap();
        // xi components have density e^{-|xi|^2}/pi per complex axis
        let gh = gauss_hermite(16);
        let gl = gauss_legendre_unit(8);
        let mut reference = NeumaierSum::default();
        let mut table = Vec::new();
        for &(w, ww) in &gl {
            let s = (1.0 - w * w).sqrt();
            for &(a, wa) in &gh {
                for &(b, wb) in &gh {
                    for &(c, wc) in &gh {
                        for &(d, wd) in &gh {
                            let xi1 = Complex64::new(a, b);
                            let xi2 = Complex64::new(c, d);
                            let phi = [xi1, w * xi1 + s * xi2];
                            let v = plan.oriented_sum(&spec, cut, &phi, &mut table).unwrap().unwrap();
                            reference.add(v * (ww * wa * wb * wc * wd));
                        }
                    }
                }
            }
        }
        let reference = reference.total() / (std::f64::consts::PI * std::f64::consts::PI);
        let mc = tree_term(&spec, tree, &config(40_000, 2)).unwrap();
        assert!(
            (mc.value - reference).norm() < 3.0 * mc.std_error,
            "{} +- {} vs {reference}",
            mc.value,
            mc.std_error
        );
    }

    #[test]
    fn deterministic_across_runs() {
        let spec = ModelSpec::real(2, 0.1).unwrap();
        let tree = &enumerate_trees(5).unwrap()[17];
        let cfg = LveConfig::new(5000, WRule::JointMc, 99, 5).unwrap();
        let a = tree_term(&spec, tree, &cfg).unwrap();
        let b = tree_term(&spec, tree, &cfg).unwrap();
        assert_eq!(a, b);
        let other = LveConfig { master_seed: 100, ..cfg };
        assert_ne!(a.value, tree_term(&spec, tree, &other).unwrap().value);
    }

    #[test]
    fn replica_draws_feed_integrand() {
        let spec = ModelSpec::real(2, 0.05).unwrap();
        let tree = &enumerate_trees(3).unwrap()[0];
        let cov = covariance(tree, &[0.4, 0.9]).unwrap();
        let mut rng = stream(1, 2, 3);
        let fields = sample_replicas(&cov, &mut rng).unwrap();
        let plan = TreePlan::new(tree).unwrap();
        let phi: Vec<_> = fields.iter().map(|f| f.0).collect();
        let mut table = Vec::new();
        let summed = plan
            .oriented_sum(&spec, radius(2).unwrap(), &phi, &mut table)
            .unwrap()
            .unwrap();
        let direct: Complex64 = (0..tree.orientation_count())
            .map(|i| tree_integrand(&spec, &orient_tree(tree, i).unwrap(), &fields).unwrap())
            .sum();
        assert!((summed - direct).norm() < 1e-14 * direct.norm().max(1e-300));
    }

    #[test]
    fn low_order_sum_tracks_oracle() {
        let spec = ModelSpec::real(2, 0.02).unwrap();
        let out = log_z_partial(&spec, &config(20_000, 3)).unwrap();
        let exact = z_oracle(&spec, 1e-13).unwrap().value.ln();
        let budget = (3.0 * out.cumulative.std_error).max(out.orders[2].value.norm());
        assert!(
            (out.cumulative.value - exact).norm() <= budget,
            "{} vs {exact} (budget {budget:e})",
            out.cumulative.value
        );
    }
}
