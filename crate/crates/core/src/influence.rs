//! Out-of-fold nuisance estimates and the eigenvector influence function
//!
//! `φ(x) = sᵀ[(x − μ)(x − μ)ᵀ − Σ] v = (sᵀc)(cᵀv) − sᵀΣv`, with `c = x − μ`
//! and `s = (λ I − Σ)⁺ (μ_X − μ_Z)`.

use std::sync::Arc;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Direction, DirectionOrigin, FoldPlan};
use crate::error::{Error, Result};
use crate::estimators::{
    pinv_shifted_at, pooled_covariance, sample_mean, thresholded_mean, top_eigen, CovarianceEstimate,
    DEFAULT_PINV_REL_TOL,
};
use crate::simulation::PopulationSpec;
use crate::sparse_pca::{canonical_sign, default_budget, sparse_pc, SparsePcConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Control,
    Treatment,
}

/// How the out-of-fold nuisances are estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceOptions {
    /// Hard-threshold the nuisance means at `c·√(ln p / n)`.
    pub threshold_means: bool,
    pub mean_threshold_c: f64,
    /// Use the dense eigenvector instead of the sparse PC.
    pub dense_pc: bool,
    /// Sparse PC budget; `None` means `⌈√p⌉`.
    pub sparsity_budget: Option<usize>,
    /// Off-diagonal covariance threshold multiplier; `None` disables it.
    pub cov_threshold: Option<f64>,
    pub pinv_rel_tol: f64,
}

impl Default for NuisanceOptions {
    fn default() -> Self {
        Self {
            threshold_means: true,
            mean_threshold_c: 1.0,
            dense_pc: false,
            sparsity_budget: None,
            cov_threshold: None,
            pinv_rel_tol: DEFAULT_PINV_REL_TOL,
        }
    }
}

impl NuisanceOptions {
    pub fn sparse_config(&self, p: usize, k: usize) -> SparsePcConfig {
        SparsePcConfig::new(p, k).with_budget(self.sparsity_budget.unwrap_or_else(|| default_budget(p)))
    }

    /// Group mean under the thresholding policy.
    pub fn mean(&self, samples: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if self.threshold_means && samples.nrows() >= 2 && samples.ncols() >= 2 {
            thresholded_mean(samples, self.mean_threshold_c)
        } else {
            sample_mean(samples)
        }
    }
}

#[derive(Debug, Clone)]
pub struct NuisanceFit {
    pub mu_x: Array1<f64>,
    pub mu_z: Array1<f64>,
    pub sigma: Arc<CovarianceEstimate>,
    /// Eigenvalue paired with `v1` (the `pc_index`-th eigenvalue of `sigma`).
    pub lambda1: f64,
    pub v1: Direction,
    pub s: Array1<f64>,
    /// `n_X / (n_X + n_Z)` for the evaluation fold.
    pub w: f64,
    s_sigma_v: f64,
}

impl NuisanceFit {
    /// Builds the fit from its parts, computing `s = (λ_k I − Σ)⁺ (μ_X − μ_Z)`.
    pub fn assemble(
        mu_x: Array1<f64>,
        mu_z: Array1<f64>,
        sigma: Arc<CovarianceEstimate>,
        pc_index: usize,
        v1: Direction,
        w: f64,
        rel_tol: f64,
    ) -> Result<Self> {
        let p = sigma.p();
        for len in [mu_x.len(), mu_z.len(), v1.len()] {
            if len != p {
                return Err(Error::DimensionMismatch { expected: p, found: len });
            }
        }
        let (pinv, lambda) = pinv_shifted_at(&sigma, pc_index, rel_tol)?;
        let s = pinv.apply((&mu_x - &mu_z).view());
        Self::from_parts(mu_x, mu_z, sigma, lambda, v1, s, w)
    }

    /// Builds the fit with a precomputed `s`.
    pub fn from_parts(
        mu_x: Array1<f64>,
        mu_z: Array1<f64>,
        sigma: Arc<CovarianceEstimate>,
        lambda1: f64,
        v1: Direction,
        s: Array1<f64>,
        w: f64,
    ) -> Result<Self> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::invalid(format!("group weight must lie in (0, 1), got {w}")));
        }
        let s_sigma_v = sigma.bilinear(s.view(), v1.view());
        Ok(Self {
            mu_x,
            mu_z,
            sigma,
            lambda1,
            v1,
            s,
            w,
            s_sigma_v,
        })
    }

    pub fn with_weight(mut self, w: f64) -> Result<Self> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::invalid(format!("group weight must lie in (0, 1), got {w}")));
        }
        self.w = w;
        Ok(self)
    }

    /// Same fit with `v1` replaced (for sign alignment); `sᵀΣv` follows.
    pub fn with_direction(mut self, v1: Direction) -> Self {
        self.s_sigma_v = self.sigma.bilinear(self.s.view(), v1.view());
        self.v1 = v1;
        self
    }

    /// `sᵀ Σ v`, cached.
    pub fn s_sigma_v(&self) -> f64 {
        self.s_sigma_v
    }

    pub fn mean(&self, group: Group) -> &Array1<f64> {
        match group {
            Group::Control => &self.mu_x,
            Group::Treatment => &self.mu_z,
        }
    }

    /// `φ` evaluated on every row of `samples`.
    pub fn influence_values(&self, samples: ArrayView2<'_, f64>, group: Group) -> Array1<f64> {
        let mu = self.mean(group);
        let shift_s = mu.dot(&self.s);
        let shift_v = mu.dot(self.v1.weights());
        let cs = samples.dot(&self.s) - shift_s;
        let cv = samples.dot(self.v1.weights()) - shift_v;
        cs * cv - self.s_sigma_v
    }
}

/// Fits the nuisances on the complement of fold `m`, with `w` taken from the
/// in-fold counts of fold `m`.
pub fn fit_nuisance(
    dataset: &Dataset,
    plan: &FoldPlan,
    m: usize,
    pc_index: usize,
    options: &NuisanceOptions,
) -> Result<NuisanceFit> {
    plan.check_compatible(dataset)?;
    if m >= plan.m_folds() {
        return Err(Error::invalid(format!("fold {m} out of range for {} folds", plan.m_folds())));
    }
    let (xo, zo) = dataset.subset(&plan.x_out(m), &plan.z_out(m));
    let (nx_in, nz_in) = (plan.x_in(m).len(), plan.z_in(m).len());
    let w = nx_in as f64 / (nx_in + nz_in) as f64;
    let sigma = Arc::new(pooled_covariance(xo.view(), zo.view(), options.cov_threshold)?);
    let v = principal_direction(&sigma, pc_index, options)?;
    let mu_x = options.mean(xo.view())?;
    let mu_z = options.mean(zo.view())?;
    NuisanceFit::assemble(mu_x, mu_z, sigma, pc_index, v, w, options.pinv_rel_tol)
}

/// The `k`-th principal direction of `sigma`, sparse or dense per `options`.
pub fn principal_direction(sigma: &CovarianceEstimate, k: usize, options: &NuisanceOptions) -> Result<Direction> {
    if k == 0 || k > sigma.p() {
        return Err(Error::invalid(format!("pc_index must lie in [1, {}], got {k}", sigma.p())));
    }
    if options.dense_pc {
        let eig = top_eigen(sigma, k)?;
        let mut v = eig.vector(k - 1).to_owned();
        canonical_sign(&mut v);
        Direction::new(v, DirectionOrigin::Pc(k))
    } else {
        let mut pcs = sparse_pc(sigma, &options.sparse_config(sigma.p(), k))?;
        Ok(pcs.pop().expect("k >= 1 components"))
    }
}

/// `φ(x)` from a fitted nuisance, without forming the outer product.
pub fn influence_value(x: ArrayView1<'_, f64>, fit: &NuisanceFit, group: Group) -> f64 {
    let c = &x - fit.mean(group);
    c.dot(&fit.s) * c.dot(fit.v1.weights()) - fit.s_sigma_v
}

/// `φ(x)` at the population values of `spec` (first eigenvector).
pub fn true_influence(x: ArrayView1<'_, f64>, spec: &PopulationSpec, group: Group) -> Result<f64> {
    let fit = spec.oracle_nuisance(1)?;
    Ok(influence_value(x, &fit, group))
}
