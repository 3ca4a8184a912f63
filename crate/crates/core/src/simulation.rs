//! Data-generating processes with analytic population values, and a seeded
//! parallel Monte Carlo engine.
//!
//! Randomness: replicate `r` of a run with base seed `b` draws everything from
//! `ChaCha8Rng::seed_from_u64(mix64(b, r))`. The worker count never changes a
//! report, since replicates own their streams and are aggregated in order.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{make_folds, Dataset, Direction, DirectionOrigin};
use crate::error::{Error, Result};
use crate::estimators::{pinv_shifted_at, top_eigen, CovarianceEstimate, DEFAULT_PINV_REL_TOL};
use crate::influence::NuisanceFit;
use crate::linalg::{cholesky_lower, matmul_nd};
use crate::numeric::{critical_value, ks_distance_to_normal, mix64};
use crate::projection_test::{CrossFit, TestSpec};
use crate::sparse_logistic::{fit_logistic_lasso, LassoConfig};
use crate::sparse_pca::canonical_sign;

/// Ground-truth moments of a simulation setting.
#[derive(Debug)]
pub struct PopulationSpec {
    pub label: String,
    pub mu_x: Array1<f64>,
    pub mu_z: Array1<f64>,
    sigma: Arc<CovarianceEstimate>,
    /// Full analytic spectrum (non-increasing) when known.
    pub eigvals: Option<Vec<f64>>,
    pub v1: Option<Array1<f64>>,
    pub v2: Option<Array1<f64>>,
    oracle: Mutex<BTreeMap<usize, NuisanceFit>>,
}

impl PopulationSpec {
    pub fn new(
        label: impl Into<String>,
        mu_x: Array1<f64>,
        mu_z: Array1<f64>,
        sigma: Array2<f64>,
        eigvals: Option<Vec<f64>>,
        v1: Option<Array1<f64>>,
        v2: Option<Array1<f64>>,
    ) -> Result<Self> {
        let p = sigma.nrows();
        for len in [mu_x.len(), mu_z.len()] {
            if len != p {
                return Err(Error::DimensionMismatch { expected: p, found: len });
            }
        }
        Ok(Self {
            label: label.into(),
            mu_x,
            mu_z,
            sigma: Arc::new(CovarianceEstimate::from_matrix(sigma, 0)?),
            eigvals,
            v1,
            v2,
            oracle: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn p(&self) -> usize {
        self.mu_x.len()
    }

    pub fn sigma(&self) -> &Array2<f64> {
        self.sigma.matrix()
    }

    pub fn covariance(&self) -> &Arc<CovarianceEstimate> {
        &self.sigma
    }

    pub fn mean_difference(&self) -> Array1<f64> {
        &self.mu_x - &self.mu_z
    }

    /// `k`-th population eigenvector (1-based): analytic when recorded,
    /// otherwise from the eigendecomposition with the largest entry positive.
    pub fn eigenvector(&self, k: usize) -> Result<Array1<f64>> {
        match (k, &self.v1, &self.v2) {
            (1, Some(v), _) | (2, _, Some(v)) => Ok(v.clone()),
            _ => {
                let eig = top_eigen(&self.sigma, k)?;
                let mut v = eig.vector(k - 1).to_owned();
                canonical_sign(&mut v);
                Ok(v)
            }
        }
    }

    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if let Some(vals) = &self.eigvals {
            if k >= 1 && k <= vals.len() {
                return Ok(vals[k - 1]);
            }
        }
        Ok(top_eigen(&self.sigma, k)?.values[k - 1])
    }

    pub fn direction(&self, k: usize) -> Result<Direction> {
        Direction::new(self.eigenvector(k)?, DirectionOrigin::Pc(k))
    }

    /// `(μ_X − μ_Z)ᵀ v_k`.
    pub fn projected_difference(&self, k: usize) -> Result<f64> {
        Ok(self.mean_difference().dot(&self.eigenvector(k)?))
    }

    /// Population nuisances for component `k` (cached). `w` is set to 1/2;
    /// callers replace it with the per-fold value.
    pub fn oracle_nuisance(&self, k: usize) -> Result<NuisanceFit> {
        let mut cache = self.oracle.lock().expect("oracle cache poisoned");
        if let Some(fit) = cache.get(&k) {
            return Ok(fit.clone());
        }
        let v = self.direction(k)?;
        let (pinv, lambda) = pinv_shifted_at(&self.sigma, k, DEFAULT_PINV_REL_TOL)?;
        let s = pinv.apply(self.mean_difference().view());
        let fit = NuisanceFit::from_parts(self.mu_x.clone(), self.mu_z.clone(), self.sigma.clone(), lambda, v, s, 0.5)?;
        cache.insert(k, fit.clone());
        Ok(fit)
    }
}

fn block(p: usize, from: usize, to: usize, value: f64) -> Array1<f64> {
    let mut v = Array1::zeros(p);
    v.slice_mut(s![from..to]).fill(value);
    v
}

fn outer(v: &Array1<f64>) -> Array2<f64> {
    v.view().insert_axis(Axis(1)).dot(&v.view().insert_axis(Axis(0)))
}

fn repeat(values: &[(f64, usize)]) -> Vec<f64> {
    values.iter().flat_map(|&(v, k)| std::iter::repeat_n(v, k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullSetting {
    GlobalNull,
    ProjectedNull,
    Alternative,
}

#[derive(Debug, Clone)]
enum Sampler {
    /// `μ + L g` with `L Lᵀ = Σ`.
    Gaussian { chol: Array2<f64> },
    /// `μ^pre + Σ_k √a_k g_k v_k + ε`, then each entry zeroed with probability 1/2.
    ZeroInflatedSpiked {
        pre_mu_x: Array1<f64>,
        pre_mu_z: Array1<f64>,
        spikes: Vec<(f64, Array1<f64>)>,
    },
    /// Gaussian draw, then each entry zeroed with probability 1/2, then every
    /// value below `floor` set to 0.
    MaskedGaussian {
        chol: Array2<f64>,
        floor: f64,
    },
}

/// A simulation setting with fixed group sizes.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: Arc<PopulationSpec>,
    n_x: usize,
    n_z: usize,
    sampler: Sampler,
}

fn cholesky_with_jitter(sigma: &Array2<f64>) -> Result<Array2<f64>> {
    if let Some(l) = cholesky_lower(sigma) {
        return Ok(l);
    }
    let p = sigma.nrows();
    let jitter = 1e-10 * sigma.diag().sum() / p as f64;
    let shifted = sigma + &(Array2::<f64>::eye(p) * jitter);
    cholesky_lower(&shifted).ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))
}

impl Generator {
    /// The 100-dimensional Gaussian setting with a rank-one spike
    /// (`N_X = 500`, `N_Z = 250`).
    pub fn spiked(setting: NullSetting) -> Result<Self> {
        let p = 100;
        let v1 = block(p, 0, 10, 1.0 / 10f64.sqrt());
        let mut mu_x = block(p, 0, 5, 2.5);
        mu_x.slice_mut(s![5..10]).fill(-2.5);
        let mu_z = match setting {
            NullSetting::GlobalNull => mu_x.clone(),
            NullSetting::ProjectedNull => -&mu_x,
            NullSetting::Alternative => {
                return Err(Error::invalid("the 100-dimensional spiked setting has no alternative"))
            }
        };
        let sigma = outer(&v1) * 3.0 + Array2::<f64>::eye(p);
        let chol = cholesky_with_jitter(&sigma)?;
        let label = match setting {
            NullSetting::GlobalNull => "appA-global",
            _ => "appA-projected",
        };
        let eig = repeat(&[(4.0, 1), (1.0, 99)]);
        let spec = PopulationSpec::new(label, mu_x, mu_z, sigma, Some(eig), Some(v1), None)?;
        Ok(Self {
            spec: Arc::new(spec),
            n_x: 500,
            n_z: 250,
            sampler: Sampler::Gaussian { chol },
        })
    }

    /// The zero-inflated 1000-dimensional two-spike setting.
    ///
    /// The recorded covariance follows the documented moment formula
    /// (`Σ_ii = Σ^pre_ii / 2`, `Σ_ij = Σ^pre_ij / 4`); the exact variance of a
    /// masked coordinate also carries a `(μ^pre_i)² / 4` term that the formula
    /// leaves out.
    pub fn zero_inflated(setting: NullSetting, n_x: usize, n_z: usize) -> Result<Self> {
        if n_x < 4 || n_z < 4 {
            return Err(Error::invalid(format!("group sizes must be at least 4, got {n_x} and {n_z}")));
        }
        let p = 1000;
        let r20 = 1.0 / 20f64.sqrt();
        let v1 = block(p, 0, 20, r20);
        let v2 = block(p, 20, 40, r20);
        let pre_mu_x = block(p, 0, 20, 1.0);
        let pre_mu_z = match setting {
            NullSetting::GlobalNull => pre_mu_x.clone(),
            NullSetting::ProjectedNull => {
                let mut m = pre_mu_x.clone();
                m.slice_mut(s![20..40]).fill(5.0);
                m
            }
            NullSetting::Alternative => {
                let mut m = block(p, 0, 20, 1.2);
                m.slice_mut(s![20..40]).fill(0.9);
                m
            }
        };
        let pre_sigma = outer(&v1) * 100.0 + outer(&v2) * 50.0 + Array2::<f64>::eye(p);
        let mut sigma = &pre_sigma / 4.0;
        for i in 0..p {
            sigma[[i, i]] = pre_sigma[[i, i]] / 2.0;
        }
        let label = match setting {
            NullSetting::GlobalNull => "f1-global",
            NullSetting::ProjectedNull => "f1-projected",
            NullSetting::Alternative => "f1-alternative",
        };
        let eig = repeat(&[(26.75, 1), (13.625, 1), (1.75, 19), (1.125, 19), (0.5, 960)]);
        let spec = PopulationSpec::new(
            label,
            &pre_mu_x / 2.0,
            &pre_mu_z / 2.0,
            sigma,
            Some(eig),
            Some(v1.clone()),
            Some(v2.clone()),
        )?;
        Ok(Self {
            spec: Arc::new(spec),
            n_x,
            n_z,
            sampler: Sampler::ZeroInflatedSpiked {
                pre_mu_x,
                pre_mu_z,
                spikes: vec![(100.0, v1), (50.0, v2)],
            },
        })
    }

    /// The 300-dimensional block-diagonal setting with masking and a 0.5
    /// floor. The recorded moments are those of the Gaussian draw before
    /// masking.
    pub fn blocks(n_x: usize, n_z: usize) -> Result<Self> {
        if n_x < 4 || n_z < 4 {
            return Err(Error::invalid(format!("group sizes must be at least 4, got {n_x} and {n_z}")));
        }
        let p = 300;
        let mut sigma = Array2::<f64>::eye(p);
        for (start, diag, off) in [(0usize, 2.0, 1.8), (10, 1.0, 0.6)] {
            for i in start..start + 10 {
                for j in start..start + 10 {
                    sigma[[i, j]] = if i == j { diag } else { off };
                }
            }
        }
        let mu_x = Array1::from_elem(p, 1.0);
        let mut mu_z = mu_x.clone();
        mu_z.slice_mut(s![10..20]).fill(2.0);
        let r10 = 1.0 / 10f64.sqrt();
        let eig = repeat(&[(18.2, 1), (6.4, 1), (1.0, 280), (0.4, 9), (0.2, 9)]);
        let chol = cholesky_with_jitter(&sigma)?;
        let spec = PopulationSpec::new(
            "f2",
            mu_x,
            mu_z,
            sigma,
            Some(eig),
            Some(block(p, 0, 10, r10)),
            Some(block(p, 10, 20, r10)),
        )?;
        Ok(Self {
            spec: Arc::new(spec),
            n_x,
            n_z,
            sampler: Sampler::MaskedGaussian { chol, floor: 0.5 },
        })
    }

    /// Equal-mean Gaussian groups of sizes 100 and 50 in dimension 100, using
    /// the spiked covariance and control mean of `spiked`.
    pub fn degeneracy_null() -> Result<Self> {
        let base = Self::spiked(NullSetting::GlobalNull)?;
        let spec = PopulationSpec::new(
            "degeneracy-null",
            base.spec.mu_x.clone(),
            base.spec.mu_x.clone(),
            base.spec.sigma().clone(),
            base.spec.eigvals.clone(),
            base.spec.v1.clone(),
            None,
        )?;
        Ok(Self {
            spec: Arc::new(spec),
            n_x: 100,
            n_z: 50,
            sampler: base.sampler,
        })
    }

    pub fn with_sizes(mut self, n_x: usize, n_z: usize) -> Result<Self> {
        if n_x < 2 || n_z < 2 {
            return Err(Error::invalid(format!("group sizes must be at least 2, got {n_x} and {n_z}")));
        }
        self.n_x = n_x;
        self.n_z = n_z;
        Ok(self)
    }

    pub fn spec(&self) -> &Arc<PopulationSpec> {
        &self.spec
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// Draws the control rows, then the treatment rows, from one stream.
    pub fn sample(&self, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self.draw(&mut rng, self.n_x, self.spec.mu_x.view(), true);
        let z = self.draw(&mut rng, self.n_z, self.spec.mu_z.view(), false);
        Dataset::new(x, z, None)
    }

    fn draw(&self, rng: &mut ChaCha8Rng, n: usize, mu: ArrayView1<'_, f64>, control: bool) -> Array2<f64> {
        let p = mu.len();
        match &self.sampler {
            Sampler::Gaussian { chol } => {
                let g = normal_matrix(rng, n, p);
                matmul_nd(g.view(), chol.t()) + mu
            }
            Sampler::ZeroInflatedSpiked {
                pre_mu_x,
                pre_mu_z,
                spikes,
            } => {
                let pre_mu = if control { pre_mu_x } else { pre_mu_z };
                let mut out = Array2::zeros((n, p));
                for mut row in out.rows_mut() {
                    for (dst, m) in row.iter_mut().zip(pre_mu.iter()) {
                        let e: f64 = rng.sample(StandardNormal);
                        *dst = m + e;
                    }
                    for (strength, v) in spikes {
                        let g: f64 = rng.sample(StandardNormal);
                        row.scaled_add(strength.sqrt() * g, v);
                    }
                    mask_half(rng, row.as_slice_mut().expect("row-major"));
                }
                out
            }
            Sampler::MaskedGaussian { chol, floor } => {
                let g = normal_matrix(rng, n, p);
                let mut out = matmul_nd(g.view(), chol.t()) + mu;
                for mut row in out.rows_mut() {
                    let row = row.as_slice_mut().expect("row-major");
                    mask_half(rng, row);
                    for v in row.iter_mut() {
                        if *v < *floor {
                            *v = 0.0;
                        }
                    }
                }
                out
            }
        }
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal))
}

/// Zeroes each entry independently with probability 1/2, one random bit per
/// entry.
fn mask_half(rng: &mut ChaCha8Rng, row: &mut [f64]) {
    for chunk in row.chunks_mut(64) {
        let bits = rng.next_u64();
        for (k, v) in chunk.iter_mut().enumerate() {
            if bits >> k & 1 == 0 {
                *v = 0.0;
            }
        }
    }
}

pub fn gen_spiked(setting: NullSetting, seed: u64) -> Result<(Dataset, Arc<PopulationSpec>)> {
    let g = Generator::spiked(setting)?;
    Ok((g.sample(seed)?, g.spec.clone()))
}

/// Zero-inflated setting with `n_per_group` samples in each group.
pub fn gen_zero_inflated(setting: NullSetting, n_per_group: usize, seed: u64) -> Result<(Dataset, Arc<PopulationSpec>)> {
    let g = Generator::zero_inflated(setting, n_per_group, n_per_group)?;
    Ok((g.sample(seed)?, g.spec.clone()))
}

pub fn gen_blocks(n_x: usize, n_z: usize, seed: u64) -> Result<(Dataset, Arc<PopulationSpec>)> {
    let g = Generator::blocks(n_x, n_z)?;
    Ok((g.sample(seed)?, g.spec.clone()))
}

/// What one replicate produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepOutcome {
    Statistic { t: f64, ci: Option<[f64; 2]> },
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub label: String,
    pub statistic: String,
    pub reps: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub statistic_samples: Vec<f64>,
    pub ks_to_normal: f64,
    pub degenerate_reps: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Fraction of confidence intervals covering the population target.
    pub ci_coverage: Option<f64>,
    /// Replicate index of each entry of `statistic_samples`.
    #[serde(skip)]
    pub sample_reps: Vec<usize>,
}

impl McReport {
    /// Aggregates replicate outcomes in order. `target` is the value the
    /// confidence intervals should cover.
    pub fn from_outcomes(
        label: &str,
        statistic: &str,
        outcomes: &[RepOutcome],
        seed: u64,
        alpha: f64,
        target: Option<f64>,
    ) -> Result<Self> {
        let crit = critical_value(alpha)?;
        let mut samples = Vec::new();
        let mut sample_reps = Vec::new();
        let mut covered = 0usize;
        let mut with_ci = 0usize;
        for (r, o) in outcomes.iter().enumerate() {
            if let RepOutcome::Statistic { t, ci } = o {
                samples.push(*t);
                sample_reps.push(r);
                if let (Some([lo, hi]), Some(target)) = (ci, target) {
                    with_ci += 1;
                    if *lo <= target && target <= *hi {
                        covered += 1;
                    }
                }
            }
        }
        let degenerate = outcomes.len() - samples.len();
        if samples.is_empty() {
            return Err(Error::Numerical(format!(
                "all {} replicates had degenerate variance",
                outcomes.len()
            )));
        }
        let rejections = samples.iter().filter(|t| t.abs() > crit).count();
        Ok(Self {
            label: label.to_string(),
            statistic: statistic.to_string(),
            reps: outcomes.len(),
            rejections,
            rejection_rate: rejections as f64 / samples.len() as f64,
            ks_to_normal: ks_distance_to_normal(&samples),
            statistic_samples: samples,
            degenerate_reps: degenerate,
            seed,
            alpha,
            ci_coverage: (with_ci > 0).then(|| covered as f64 / with_ci as f64),
            sample_reps,
        })
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    /// Two-column `rep,t` CSV of the non-degenerate statistics.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["rep", "t"])?;
        for (i, t) in self.statistic_samples.iter().enumerate() {
            let rep = self.sample_reps.get(i).copied().unwrap_or(i);
            wtr.write_record([rep.to_string(), t.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_mc_args(reps: usize, alpha: f64) -> Result<()> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    critical_value(alpha).map(|_| ())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Runs `rep_fn(rep_seed)` for every replicate on `workers` threads and
/// returns the results in replicate order.
pub fn run_replicates<T, F>(reps: usize, base_seed: u64, workers: usize, rep_fn: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool(workers)?.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| rep_fn(mix64(base_seed, r)))
            .collect::<Result<Vec<T>>>()
    })
}

/// Monte Carlo over an arbitrary per-replicate statistic.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_with<F>(
    label: &str,
    statistic: &str,
    reps: usize,
    base_seed: u64,
    alpha: f64,
    workers: usize,
    target: Option<f64>,
    rep_fn: F,
) -> Result<McReport>
where
    F: Fn(u64) -> Result<RepOutcome> + Sync,
{
    check_mc_args(reps, alpha)?;
    let outcomes = run_replicates(reps, base_seed, workers, rep_fn)?;
    McReport::from_outcomes(label, statistic, &outcomes, base_seed, alpha, target)
}

/// Fold plan seed and lasso seed derived from a replicate seed.
pub fn rep_seeds(rep_seed: u64) -> (u64, u64) {
    (mix64(rep_seed, 1), mix64(rep_seed, 2))
}

/// Runs every test in `tests` on the same simulated draws.
pub fn monte_carlo_suite(
    generator: &Generator,
    tests: &[TestSpec],
    m_folds: usize,
    reps: usize,
    base_seed: u64,
    alpha: f64,
    workers: usize,
) -> Result<Vec<McReport>> {
    check_mc_args(reps, alpha)?;
    if tests.is_empty() {
        return Err(Error::invalid("no tests to run"));
    }
    let outcomes = run_replicates(reps, base_seed, workers, |rep_seed| {
        let data = generator.sample(rep_seed)?;
        let (fold_seed, lasso_seed) = rep_seeds(rep_seed);
        let plan = make_folds(data.n_x(), data.n_z(), m_folds, fold_seed)?;
        let cf = CrossFit::new(&data, &plan)?;
        tests
            .iter()
            .map(|t| {
                let t = t.clone().with_lasso_seed(lasso_seed).with_population(generator.spec());
                match cf.run(&t) {
                    Ok(r) => Ok(RepOutcome::Statistic {
                        t: r.statistic,
                        ci: r.ci_95,
                    }),
                    Err(Error::DegenerateVariance { .. }) => Ok(RepOutcome::Degenerate),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    tests
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let column: Vec<RepOutcome> = outcomes.iter().map(|o| o[i]).collect();
            let target = t.coverage_target(generator.spec(), m_folds)?;
            McReport::from_outcomes(&generator.spec().label, &t.name(), &column, base_seed, alpha, target)
        })
        .collect()
}

/// Monte Carlo of a single test.
pub fn monte_carlo(
    generator: &Generator,
    test: &TestSpec,
    m_folds: usize,
    reps: usize,
    base_seed: u64,
    alpha: f64,
    workers: usize,
) -> Result<McReport> {
    Ok(monte_carlo_suite(generator, std::slice::from_ref(test), m_folds, reps, base_seed, alpha, workers)?.remove(0))
}

/// Fraction of replicates whose cross-validated logistic lasso, fitted on the
/// full sample (control labelled 1), has every coefficient exactly zero.
pub fn degeneracy_fraction(
    generator: &Generator,
    reps: usize,
    base_seed: u64,
    lasso: &LassoConfig,
    workers: usize,
) -> Result<f64> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    let zeros = run_replicates(reps, base_seed, workers, |rep_seed| {
        let data = generator.sample(rep_seed)?;
        let x = ndarray::concatenate(Axis(0), &[data.x().view(), data.z().view()])
            .map_err(|e| Error::invalid(e.to_string()))?;
        let labels: Vec<bool> = (0..data.n_x() + data.n_z()).map(|i| i < data.n_x()).collect();
        let cfg = LassoConfig {
            seed: rep_seeds(rep_seed).1,
            ..lasso.clone()
        };
        let fit = fit_logistic_lasso(x.view(), &labels, &cfg)?;
        Ok(fit.nonzero_count == 0)
    })?;
    Ok(zeros.iter().filter(|z| **z).count() as f64 / reps as f64)
}

/// The equal-means degeneracy demonstration: sizes 100 and 50, p = 100.
pub fn degeneracy_demo(reps: usize, seed: u64, workers: usize) -> Result<f64> {
    if reps < 50 {
        return Err(Error::invalid(format!("degeneracy demo needs at least 50 reps, got {reps}")));
    }
    degeneracy_fraction(&Generator::degeneracy_null()?, reps, seed, &LassoConfig::default(), workers)
}
