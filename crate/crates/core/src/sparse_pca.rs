//! Sparse principal components by truncated power iteration with Rayleigh
//! quotient deflation.

use ndarray::{Array1, ArrayView1};

use crate::dataset::{Direction, DirectionOrigin};
use crate::error::{Error, Result};
use crate::estimators::{top_eigen, CovarianceEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePcConfig {
    pub n_components: usize,
    pub sparsity_budget: usize,
    pub max_iter: usize,
    pub conv_tol: f64,
}

impl SparsePcConfig {
    /// `k` components with the default budget `⌈√p⌉`.
    pub fn new(p: usize, n_components: usize) -> Self {
        Self {
            n_components,
            sparsity_budget: default_budget(p),
            max_iter: 500,
            conv_tol: 1e-7,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.sparsity_budget = budget;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_components == 0 || self.n_components > p {
            return Err(Error::invalid(format!(
                "n_components must lie in [1, {p}], got {}",
                self.n_components
            )));
        }
        if self.sparsity_budget == 0 || self.sparsity_budget > p {
            return Err(Error::invalid(format!(
                "sparsity budget must lie in [1, {p}], got {}",
                self.sparsity_budget
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::invalid(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        Ok(())
    }
}

pub fn default_budget(p: usize) -> usize {
    ((p as f64).sqrt().ceil() as usize).clamp(1, p.max(1))
}

/// Keeps the `s` largest-magnitude entries (ties broken by lower index) and
/// rescales to unit norm. Returns `None` if nothing nonzero survives.
fn truncate_normalize(y: &Array1<f64>, s: usize) -> Option<Array1<f64>> {
    let p = y.len();
    let mut out = Array1::zeros(p);
    if s >= p {
        out.assign(y);
    } else {
        let mut idx: Vec<usize> = (0..p).collect();
        let order = |a: &usize, b: &usize| y[*b].abs().total_cmp(&y[*a].abs()).then(a.cmp(b));
        idx.select_nth_unstable_by(s - 1, order);
        for &j in &idx[..s] {
            out[j] = y[j];
        }
    }
    let norm = out.dot(&out).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    out /= norm;
    Some(out)
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub(crate) fn canonical_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = j;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

struct Deflated<'a> {
    sigma: &'a CovarianceEstimate,
    found: Vec<(f64, Array1<f64>)>,
}

impl Deflated<'_> {
    fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut y = self.sigma.apply(x);
        for (lam, v) in &self.found {
            y.scaled_add(-lam * v.dot(&x), v);
        }
        y
    }
}

fn power_iterate(op: &Deflated<'_>, init: Array1<f64>, cfg: &SparsePcConfig) -> Array1<f64> {
    let mut x = init;
    for _ in 0..cfg.max_iter {
        let y = op.apply(x.view());
        let Some(mut next) = truncate_normalize(&y, cfg.sparsity_budget) else {
            break;
        };
        if next.dot(&x) < 0.0 {
            next.mapv_inplace(|v| -v);
        }
        let delta = (&next - &x).mapv(|d| d * d).sum().sqrt();
        x = next;
        if delta <= cfg.conv_tol {
            break;
        }
    }
    x
}

/// The first `cfg.n_components` sparse principal components of `sigma`.
///
/// Component `j` starts from the `j`-th dense eigenvector of `sigma`,
/// truncated to the budget, and iterates on `Σ − Σ_{i<j} λ̂_i v̂_i v̂_iᵀ` with
/// `λ̂_i = v̂_iᵀ Σ v̂_i`.
pub fn sparse_pc(sigma: &CovarianceEstimate, cfg: &SparsePcConfig) -> Result<Vec<Direction>> {
    cfg.validate(sigma.p())?;
    if sigma.is_zero() {
        return Err(Error::Numerical("zero covariance has no principal direction".into()));
    }
    let dense = top_eigen(sigma, cfg.n_components)?;
    let mut op = Deflated {
        sigma,
        found: Vec::with_capacity(cfg.n_components),
    };
    let mut out = Vec::with_capacity(cfg.n_components);
    for j in 0..cfg.n_components {
        let start = dense.vector(j).to_owned();
        let init = truncate_normalize(&start, cfg.sparsity_budget)
            .ok_or_else(|| Error::Numerical(format!("component {} has an empty start vector", j + 1)))?;
        let mut v = power_iterate(&op, init, cfg);
        canonical_sign(&mut v);
        let lam = sigma.bilinear(v.view(), v.view());
        op.found.push((lam, v.clone()));
        out.push(Direction::new(v, DirectionOrigin::Pc(j + 1))?);
    }
    Ok(out)
}

/// Budget maximizing `vᵀΣv − λ₁·s/p` for the leading sparse component, the
/// smaller budget winning ties.
pub fn choose_budget(sigma: &CovarianceEstimate, candidates: &[usize]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("choose_budget needs at least one candidate"));
    }
    let p = sigma.p();
    let lambda1 = sigma.lambda_max()?;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<(usize, f64)> = None;
    for s in sorted {
        let cfg = SparsePcConfig::new(p, 1).with_budget(s);
        let v = sparse_pc(sigma, &cfg)?.remove(0);
        let score = sigma.bilinear(v.view(), v.view()) - lambda1 * s as f64 / p as f64;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((s, score));
        }
    }
    Ok(best.map(|(s, _)| s).expect("non-empty candidates"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::top_eigen_matrix;
    use ndarray::{array, s, Array2, Axis};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn outer(v: &Array1<f64>) -> Array2<f64> {
        v.view().insert_axis(Axis(1)).dot(&v.view().insert_axis(Axis(0)))
    }

    fn block_unit(p: usize, from: usize, to: usize) -> Array1<f64> {
        let mut v = Array1::zeros(p);
        v.slice_mut(s![from..to]).fill(1.0 / ((to - from) as f64).sqrt());
        v
    }

    fn app_a_sigma() -> (CovarianceEstimate, Array1<f64>) {
        let v = block_unit(100, 0, 10);
        let m = outer(&v) * 3.0 + Array2::<f64>::eye(100);
        (CovarianceEstimate::from_matrix(m, 0).unwrap(), v)
    }

    #[test]
    fn recovers_app_a_support() {
        let (sigma, v1) = app_a_sigma();
        let pcs = sparse_pc(&sigma, &SparsePcConfig::new(100, 1).with_budget(10)).unwrap();
        let w = pcs[0].weights();
        for j in 0..100 {
            if j < 10 {
                assert!((w[j] - 0.316227766).abs() < 1e-6, "{j}: {}", w[j]);
            } else {
                assert_eq!(w[j], 0.0);
            }
        }
        for budget in 10..=20 {
            let pcs = sparse_pc(&sigma, &SparsePcConfig::new(100, 1).with_budget(budget)).unwrap();
            assert!(pcs[0].weights().dot(&v1) >= 0.99);
        }
    }

    #[test]
    fn axis_spike_with_budget_one() {
        let sigma = CovarianceEstimate::from_matrix(Array2::from_diag(&array![5.0, 1.0, 1.0]), 0).unwrap();
        let pcs = sparse_pc(&sigma, &SparsePcConfig::new(3, 1).with_budget(1)).unwrap();
        assert_eq!(pcs[0].weights(), &array![1.0, 0.0, 0.0]);
        assert_eq!(pcs[0].origin(), DirectionOrigin::Pc(1));
    }

    #[test]
    fn block_covariance_components_live_in_their_blocks() {
        let p = 300;
        let mut m = Array2::<f64>::eye(p);
        for (start, diag, off) in [(0usize, 2.0, 1.8), (10, 1.0, 0.6)] {
            for i in start..start + 10 {
                for j in start..start + 10 {
                    m[[i, j]] = if i == j { diag } else { off };
                }
            }
        }
        // Independent oracle: top eigenvector of each 10×10 block is uniform.
        let b1 = top_eigen_matrix(&m.slice(s![0..10, 0..10]).to_owned(), 1).unwrap();
        let b2 = top_eigen_matrix(&m.slice(s![10..20, 10..20]).to_owned(), 1).unwrap();
        assert!((b1.values[0] - 18.2).abs() < 1e-10);
        assert!((b2.values[0] - 6.4).abs() < 1e-10);
        let sigma = CovarianceEstimate::from_matrix(m, 0).unwrap();
        let pcs = sparse_pc(&sigma, &SparsePcConfig::new(p, 2).with_budget(10)).unwrap();
        let support = |d: &Direction| -> Vec<usize> {
            d.weights().iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(j, _)| j).collect()
        };
        assert_eq!(support(&pcs[0]), (0..10).collect::<Vec<_>>());
        assert_eq!(support(&pcs[1]), (10..20).collect::<Vec<_>>());
        assert!(pcs[0].weights().dot(pcs[1].weights()).abs() <= 0.1);
    }

    #[test]
    fn zero_matrix_is_an_error() {
        let sigma = CovarianceEstimate::from_matrix(Array2::zeros((4, 4)), 0).unwrap();
        assert!(sparse_pc(&sigma, &SparsePcConfig::new(4, 1)).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (sigma, _) = app_a_sigma();
        assert!(sparse_pc(&sigma, &SparsePcConfig::new(100, 1).with_budget(0)).is_err());
        assert!(sparse_pc(&sigma, &SparsePcConfig::new(100, 1).with_budget(101)).is_err());
        let mut cfg = SparsePcConfig::new(100, 1);
        cfg.conv_tol = 0.0;
        assert!(sparse_pc(&sigma, &cfg).is_err());
        assert_eq!(default_budget(100), 10);
        assert_eq!(default_budget(1000), 32);
    }

    #[test]
    fn budget_choice_examples() {
        // Analytic scores: s=5 → 2.5 − 0.2, s=10 → 4 − 0.4, s=50 → 4 − 2.
        let (sigma, _) = app_a_sigma();
        assert_eq!(choose_budget(&sigma, &[5, 10, 50]).unwrap(), 10);
        let id = CovarianceEstimate::from_matrix(Array2::eye(20), 0).unwrap();
        assert_eq!(choose_budget(&id, &[8, 3, 12]).unwrap(), 3);
        assert_eq!(choose_budget(&sigma, &[17]).unwrap(), 17);
        assert!(choose_budget(&sigma, &[]).is_err());
    }

    fn random_spiked(seed: u64, p: usize) -> CovarianceEstimate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let support = rng.random_range(3..p / 2);
        let mut v = Array1::<f64>::zeros(p);
        for j in 0..support {
            v[j] = rng.random_range(0.5..1.5);
        }
        v /= v.dot(&v).sqrt();
        let strength = rng.random_range(2.0..20.0);
        let mut noise = Array2::<f64>::zeros((p, p));
        for i in 0..p {
            for j in 0..=i {
                let e = rng.random_range(-0.05..0.05);
                noise[[i, j]] = e;
                noise[[j, i]] = e;
            }
        }
        let m = outer(&v) * strength + Array2::<f64>::eye(p) + noise;
        CovarianceEstimate::from_matrix(m, 0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unit_norm_and_budget(seed in any::<u64>(), budget in 1usize..30) {
            let sigma = random_spiked(seed, 30);
            let pcs = sparse_pc(&sigma, &SparsePcConfig::new(30, 2).with_budget(budget)).unwrap();
            for pc in &pcs {
                prop_assert!((pc.norm() - 1.0).abs() <= 1e-10);
                prop_assert!(pc.nonzeros() <= budget);
            }
        }

        #[test]
        fn explained_variance_grows_with_budget(seed in any::<u64>()) {
            let sigma = random_spiked(seed, 30);
            let mut last = f64::NEG_INFINITY;
            for budget in 1..=30 {
                let v = sparse_pc(&sigma, &SparsePcConfig::new(30, 1).with_budget(budget)).unwrap().remove(0);
                let explained = sigma.bilinear(v.view(), v.view());
                prop_assert!(explained >= last - 1e-9, "budget {}: {} < {}", budget, explained, last);
                last = explained;
            }
        }
    }
}
