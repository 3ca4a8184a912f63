//! L1-penalized logistic regression and the anchored projection direction.
//!
//! The solver follows the usual glmnet recipe: standardized columns, an
//! unpenalized intercept, IRLS outer steps with cyclic coordinate descent on
//! the weighted least-squares surrogate, sequential strong rules with a full
//! KKT check, and warm starts down a decreasing lambda path.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Direction, DirectionOrigin};
use crate::error::{Error, Result};

pub const DEFAULT_PATH_LEN: usize = 50;
pub const DEFAULT_MIN_RATIO: f64 = 0.01;
pub const DEFAULT_CV_FOLDS: usize = 5;

const COEF_TOL: f64 = 1e-7;
const MAX_CYCLES: usize = 10_000;
const PROB_CLAMP: f64 = 1e-5;
const MAX_DEV_RATIO: f64 = 0.999;
/// CV stops walking the path after this many consecutive lambdas without a
/// new best held-out deviance.
const CV_PATIENCE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    /// Coefficients on the original feature scale.
    pub beta: Array1<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub nonzero_count: usize,
}

/// Solver settings. `lambda_grid = None` uses `DEFAULT_PATH_LEN` log-spaced
/// values from `λ_max` down to `DEFAULT_MIN_RATIO·λ_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    pub lambda_grid: Option<Vec<f64>>,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda_grid: None,
            cv_folds: DEFAULT_CV_FOLDS,
            seed: 0,
        }
    }
}

/// Column-major standardized design.
struct Design {
    n: usize,
    p: usize,
    cols: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Design {
    fn new(x: ArrayView2<'_, f64>, rows: &[usize]) -> Self {
        let n = rows.len();
        let p = x.ncols();
        let mut cols = vec![0.0; n * p];
        let mut center = vec![0.0; p];
        let mut scale = vec![1.0; p];
        for j in 0..p {
            let col = &mut cols[j * n..(j + 1) * n];
            for (dst, &i) in col.iter_mut().zip(rows) {
                *dst = x[[i, j]];
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            center[j] = mean;
            if sd > 0.0 {
                scale[j] = sd;
            }
            for v in col.iter_mut() {
                *v = (*v - mean) / scale[j];
            }
        }
        Self {
            n,
            p,
            cols,
            center,
            scale,
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    /// `(1/n) x_jᵀ r`
    fn inner(&self, j: usize, r: &[f64]) -> f64 {
        dot2(self.col(j), r) / self.n as f64
    }
}

/// `Σ a_i b_i c_i` with four independent accumulators so the loop vectorizes.
fn dot3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let n = a.len().min(b.len()).min(c.len());
    let (a, b, c) = (&a[..n], &b[..n], &c[..n]);
    let mut acc = [0.0; 4];
    let mut chunks = 0;
    for ((x, y), z) in a.chunks_exact(4).zip(b.chunks_exact(4)).zip(c.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k] * z[k];
        }
        chunks += 4;
    }
    let mut tail = 0.0;
    for i in chunks..n {
        tail += a[i] * b[i] * c[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut chunks = 0;
    for (x, y) in a.chunks_exact(4).zip(b.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
        chunks += 4;
    }
    let mut tail = 0.0;
    for i in chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y ← y + alpha·x`
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^η)` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn soft_threshold(g: f64, lambda: f64) -> f64 {
    if g > lambda {
        g - lambda
    } else if g < -lambda {
        g + lambda
    } else {
        0.0
    }
}

/// Warm-startable solver state on one design.
struct PathState<'a> {
    d: &'a Design,
    y: Vec<f64>,
    beta: Vec<f64>,
    b0: f64,
    eta: Vec<f64>,
    ever_active: Vec<bool>,
    /// `(1/n) x_jᵀ (y − p)` at the current solution.
    grad: Vec<f64>,
    null_dev: f64,
    /// Smallest penalty with an all-zero solution.
    null_lambda: f64,
    cycles: usize,
    saturated: bool,
    last_lambda: f64,
}

impl<'a> PathState<'a> {
    fn new(d: &'a Design, y: Vec<f64>) -> Self {
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        let b0 = (ybar / (1.0 - ybar)).ln();
        let mut s = Self {
            d,
            beta: vec![0.0; d.p],
            b0,
            eta: vec![b0; d.n],
            ever_active: vec![false; d.p],
            grad: vec![0.0; d.p],
            null_dev: 0.0,
            null_lambda: 0.0,
            cycles: 0,
            saturated: false,
            last_lambda: f64::INFINITY,
            y,
        };
        s.null_dev = s.deviance();
        s.refresh_gradient();
        s.null_lambda = s.lambda_max();
        s
    }

    fn lambda_max(&self) -> f64 {
        self.grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()))
    }

    fn deviance(&self) -> f64 {
        2.0 * self
            .y
            .iter()
            .zip(&self.eta)
            .map(|(y, e)| softplus(*e) - y * e)
            .sum::<f64>()
    }

    fn objective(&self, lambda: f64) -> f64 {
        self.deviance() / (2.0 * self.d.n as f64) + lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn refresh_eta(&mut self) {
        self.eta.fill(self.b0);
        for j in 0..self.d.p {
            let b = self.beta[j];
            if b != 0.0 {
                axpy(b, self.d.col(j), &mut self.eta);
            }
        }
    }

    fn refresh_gradient(&mut self) {
        let resid: Vec<f64> = self.y.iter().zip(&self.eta).map(|(y, e)| y - sigmoid(*e)).collect();
        for j in 0..self.d.p {
            self.grad[j] = self.d.inner(j, &resid);
        }
    }

    /// One coordinate-descent cycle (intercept, then `coords`) on the weighted
    /// least-squares surrogate. Returns the largest coefficient change.
    fn sweep(&mut self, lambda: f64, coords: &[usize], w: &[f64], r: &mut [f64], xv: &[f64], wsum: f64) -> f64 {
        let n = self.d.n as f64;
        self.cycles += 1;
        let mut max_change = 0.0_f64;
        let d0 = r.iter().zip(w).map(|(r, w)| r * w).sum::<f64>() / wsum;
        if d0 != 0.0 {
            self.b0 += d0;
            r.iter_mut().for_each(|v| *v -= d0);
            max_change = d0.abs();
        }
        for &j in coords {
            if xv[j] <= 0.0 {
                continue;
            }
            let col = self.d.col(j);
            let g = dot3(col, w, r) / n + xv[j] * self.beta[j];
            let new = soft_threshold(g, lambda) / xv[j];
            let delta = new - self.beta[j];
            if delta != 0.0 {
                axpy(-delta, col, r);
                self.beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }

    /// IRLS with coordinate descent restricted to `active`.
    fn irls(&mut self, lambda: f64, active: &[usize]) {
        let n = self.d.n as f64;
        let mut w = vec![0.0; self.d.n];
        let mut r = vec![0.0; self.d.n];
        let mut xv = vec![0.0; self.d.p];
        // Early surrogates need not be solved exactly; the final outer step
        // still has to move every coefficient by less than COEF_TOL.
        let mut inner_tol = 1e-3_f64;
        for _ in 0..100 {
            if self.cycles >= MAX_CYCLES {
                break;
            }
            for i in 0..self.d.n {
                let p = sigmoid(self.eta[i]).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                w[i] = p * (1.0 - p);
                r[i] = (self.y[i] - p) / w[i];
            }
            let wsum: f64 = w.iter().sum();
            for &j in active {
                let col = self.d.col(j);
                xv[j] = dot3(col, col, &w) / n;
            }
            let old_beta: Vec<(usize, f64)> = active.iter().map(|&j| (j, self.beta[j])).collect();
            let old_b0 = self.b0;
            let old_obj = self.objective(lambda);
            loop {
                let change = self.sweep(lambda, active, &w, &mut r, &xv, wsum);
                if change < inner_tol || self.cycles >= MAX_CYCLES {
                    break;
                }
                // Converge on the nonzero coordinates before the next full sweep.
                let nonzero: Vec<usize> = active.iter().copied().filter(|&j| self.beta[j] != 0.0).collect();
                while self.cycles < MAX_CYCLES && self.sweep(lambda, &nonzero, &w, &mut r, &xv, wsum) >= inner_tol {}
            }
            self.refresh_eta();
            // Step-halving if the quadratic surrogate overshot.
            let mut halvings = 0;
            while self.objective(lambda) > old_obj * (1.0 + 1e-12) + 1e-15 && halvings < 30 {
                for &(j, b) in &old_beta {
                    self.beta[j] = 0.5 * (self.beta[j] + b);
                }
                self.b0 = 0.5 * (self.b0 + old_b0);
                self.refresh_eta();
                halvings += 1;
            }
            let outer_change = old_beta
                .iter()
                .map(|&(j, b)| (self.beta[j] - b).abs())
                .fold((self.b0 - old_b0).abs(), f64::max);
            if outer_change < COEF_TOL {
                break;
            }
            inner_tol = (0.1 * outer_change).clamp(COEF_TOL, inner_tol);
        }
    }

    /// Solves at `lambda`, warm-started from the current state.
    fn solve(&mut self, lambda: f64) {
        if self.saturated || (lambda >= self.null_lambda && self.beta.iter().all(|b| *b == 0.0)) {
            self.last_lambda = lambda;
            return;
        }
        let prev = if self.last_lambda.is_finite() {
            self.last_lambda
        } else {
            self.lambda_max().max(lambda)
        };
        let mut in_set: Vec<bool> = (0..self.d.p)
            .map(|j| self.ever_active[j] || self.grad[j].abs() >= 2.0 * lambda - prev)
            .collect();
        loop {
            let active: Vec<usize> = (0..self.d.p).filter(|&j| in_set[j]).collect();
            self.irls(lambda, &active);
            self.refresh_gradient();
            let mut violated = false;
            for j in 0..self.d.p {
                if !in_set[j] && self.grad[j].abs() > lambda {
                    in_set[j] = true;
                    violated = true;
                }
            }
            if !violated || self.cycles >= MAX_CYCLES {
                break;
            }
        }
        for j in 0..self.d.p {
            if self.beta[j] != 0.0 {
                self.ever_active[j] = true;
            }
        }
        self.last_lambda = lambda;
        if self.null_dev > 0.0 && 1.0 - self.deviance() / self.null_dev >= MAX_DEV_RATIO {
            self.saturated = true;
        }
    }

    fn to_fit(&self, lambda: f64) -> LassoFit {
        let d = self.d;
        let mut beta = Array1::zeros(d.p);
        let mut intercept = self.b0;
        for j in 0..d.p {
            if self.beta[j] != 0.0 {
                beta[j] = self.beta[j] / d.scale[j];
                intercept -= beta[j] * d.center[j];
            }
        }
        let nonzero_count = beta.iter().filter(|b: &&f64| **b != 0.0).count();
        LassoFit {
            beta,
            intercept,
            lambda,
            nonzero_count,
        }
    }
}

fn labels_to_f64(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect()
}

fn check_inputs(x: ArrayView2<'_, f64>, labels: &[bool]) -> Result<()> {
    if x.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: labels.len(),
        });
    }
    let ones = labels.iter().filter(|&&l| l).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::invalid("logistic lasso needs both classes in the labels"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("logistic lasso features must be finite"));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::invalid("lambda grid values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("lambda grid must be strictly decreasing"));
    }
    Ok(())
}

/// `λ_max = max_j |⟨x_j, y − ȳ⟩| / n` on standardized columns: the smallest
/// penalty whose solution is exactly zero.
pub fn lambda_max(x: ArrayView2<'_, f64>, labels: &[bool]) -> Result<f64> {
    check_inputs(x, labels)?;
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let design = Design::new(x, &rows);
    Ok(PathState::new(&design, labels_to_f64(labels)).lambda_max())
}

/// Log-spaced grid from `lambda_max` down to `ratio·lambda_max`.
pub fn default_grid(lambda_max: f64, len: usize, ratio: f64) -> Vec<f64> {
    if len == 1 {
        return vec![lambda_max];
    }
    let (hi, lo) = (lambda_max.ln(), (lambda_max * ratio).ln());
    (0..len)
        .map(|k| match k {
            0 => lambda_max,
            _ => (hi + (lo - hi) * k as f64 / (len - 1) as f64).exp(),
        })
        .collect()
}

/// Fits every lambda of a decreasing grid with warm starts.
pub fn lasso_path(x: ArrayView2<'_, f64>, labels: &[bool], grid: &[f64]) -> Result<Vec<LassoFit>> {
    check_inputs(x, labels)?;
    check_grid(grid)?;
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let design = Design::new(x, &rows);
    let mut state = PathState::new(&design, labels_to_f64(labels));
    Ok(grid
        .iter()
        .map(|&l| {
            state.solve(l);
            state.to_fit(l)
        })
        .collect())
}

/// Largest KKT violation of `fit` for the mean logistic loss plus
/// `λ‖β‖₁` on standardized columns.
pub fn kkt_violation(x: ArrayView2<'_, f64>, labels: &[bool], fit: &LassoFit) -> Result<f64> {
    check_inputs(x, labels)?;
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let d = Design::new(x, &rows);
    let y = labels_to_f64(labels);
    let eta: Vec<f64> = x.rows().into_iter().map(|row| fit.intercept + row.dot(&fit.beta)).collect();
    let resid: Vec<f64> = y.iter().zip(&eta).map(|(y, e)| y - sigmoid(*e)).collect();
    let mut worst = (resid.iter().sum::<f64>() / d.n as f64).abs();
    for j in 0..d.p {
        // Gradient of the mean log-loss with respect to the standardized coefficient.
        let g = -d.inner(j, &resid);
        let b = fit.beta[j] * d.scale[j];
        let v = if b != 0.0 {
            (g + fit.lambda * b.signum()).abs()
        } else {
            (g.abs() - fit.lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

fn holdout_deviance(x: ArrayView2<'_, f64>, labels: &[bool], rows: &[usize], fit_state: &PathState<'_>) -> f64 {
    let d = fit_state.d;
    rows.iter()
        .map(|&i| {
            let mut eta = fit_state.b0;
            for j in 0..d.p {
                let b = fit_state.beta[j];
                if b != 0.0 {
                    eta += b * (x[[i, j]] - d.center[j]) / d.scale[j];
                }
            }
            let p = sigmoid(eta).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if labels[i] {
                -2.0 * p.ln()
            } else {
                -2.0 * (1.0 - p).ln()
            }
        })
        .sum()
}

/// Stratified round-robin CV assignment, shuffled within each class.
fn cv_assignment(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    let mut pos = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            out[i] = pos % k;
            pos += 1;
        }
    }
    out
}

/// Cross-validated logistic lasso. The selected lambda minimizes held-out
/// deviance (larger lambda on ties). Walking the path stops once the CV
/// deviance has failed to improve for `CV_PATIENCE` consecutive lambdas.
pub fn fit_logistic_lasso(x: ArrayView2<'_, f64>, labels: &[bool], cfg: &LassoConfig) -> Result<LassoFit> {
    check_inputs(x, labels)?;
    let n = x.nrows();
    if cfg.cv_folds < 2 {
        return Err(Error::invalid(format!("cv_folds must be at least 2, got {}", cfg.cv_folds)));
    }
    if n < 2 * cfg.cv_folds {
        return Err(Error::invalid(format!(
            "logistic lasso needs n >= 2·cv_folds ({}), got n = {n}",
            2 * cfg.cv_folds
        )));
    }
    let ones = labels.iter().filter(|&&l| l).count();
    if ones < 2 || n - ones < 2 {
        return Err(Error::invalid("each class needs at least 2 samples for cross-validation"));
    }
    let all: Vec<usize> = (0..n).collect();
    let full = Design::new(x, &all);
    let y = labels_to_f64(labels);
    let mut full_state = PathState::new(&full, y.clone());
    let grid = match &cfg.lambda_grid {
        Some(g) => {
            check_grid(g)?;
            g.clone()
        }
        None => {
            let lmax = full_state.lambda_max();
            if !(lmax > 0.0) {
                return Ok(full_state.to_fit(0.0));
            }
            default_grid(lmax, DEFAULT_PATH_LEN, DEFAULT_MIN_RATIO)
        }
    };

    let assignment = cv_assignment(labels, cfg.cv_folds, cfg.seed);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..cfg.cv_folds)
        .map(|k| {
            let train = all.iter().copied().filter(|&i| assignment[i] != k).collect();
            let test = all.iter().copied().filter(|&i| assignment[i] == k).collect();
            (train, test)
        })
        .collect();
    let designs: Vec<Design> = splits.iter().map(|(train, _)| Design::new(x, train)).collect();
    let mut states: Vec<PathState<'_>> = designs
        .iter()
        .zip(&splits)
        .map(|(d, (train, _))| PathState::new(d, train.iter().map(|&i| y[i]).collect()))
        .collect();

    let mut best = (0usize, f64::INFINITY);
    for (k, &lambda) in grid.iter().enumerate() {
        let mut dev = 0.0;
        for (state, (_, test)) in states.iter_mut().zip(&splits) {
            state.solve(lambda);
            dev += holdout_deviance(x, labels, test, state);
        }
        if dev < best.1 {
            best = (k, dev);
        }
        if k - best.0 >= CV_PATIENCE {
            break;
        }
    }

    for &lambda in &grid[..=best.0] {
        full_state.solve(lambda);
    }
    Ok(full_state.to_fit(grid[best.0]))
}

/// Weight `w_n = n^α` and threshold `r_n = n^{−γ}` (or 0) of the anchored
/// direction, for the per-fold reference size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorConfig {
    pub w_exponent: f64,
    /// `None` disables thresholding (`r_n = 0`).
    pub r_exponent: Option<f64>,
    pub n_reference: usize,
}

impl AnchorConfig {
    pub fn new(w_exponent: f64, r_exponent: Option<f64>, n_reference: usize) -> Result<Self> {
        let cfg = Self {
            w_exponent,
            r_exponent,
            n_reference,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `α = 1/2`, `γ = 1/3`.
    pub fn standard(n_reference: usize) -> Self {
        Self {
            w_exponent: 0.5,
            r_exponent: Some(1.0 / 3.0),
            n_reference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_exponent > 0.0 && self.w_exponent <= 0.5) {
            return Err(Error::invalid(format!(
                "anchor weight exponent must lie in (0, 1/2], got {}",
                self.w_exponent
            )));
        }
        if let Some(g) = self.r_exponent {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!("anchor threshold exponent must be positive, got {g}")));
            }
        }
        if self.n_reference == 0 {
            return Err(Error::invalid("anchor reference size must be positive"));
        }
        Ok(())
    }

    pub fn weight(&self) -> f64 {
        (self.n_reference as f64).powf(self.w_exponent)
    }

    pub fn threshold(&self) -> f64 {
        match self.r_exponent {
            Some(g) => (self.n_reference as f64).powf(-g),
            None => 0.0,
        }
    }
}

/// `v + w_n β` when `‖β‖ ≥ r_n`, else `v` unchanged.
pub fn anchored_direction(v: &Direction, beta: ArrayView1<'_, f64>, cfg: &AnchorConfig) -> Result<Direction> {
    if v.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: beta.len(),
        });
    }
    cfg.validate()?;
    let norm = beta.dot(&beta).sqrt();
    let weights = if norm >= cfg.threshold() {
        v.weights() + &(&beta * cfg.weight())
    } else {
        v.weights().clone()
    };
    Direction::new(weights, DirectionOrigin::Anchored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn simulated(n: usize, p: usize, shift: f64, seed: u64) -> (Array2<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
        let x = Array2::from_shape_fn((n, p), |(i, j)| {
            let z: f64 = rng.sample(StandardNormal);
            if labels[i] && j < 3 {
                z + shift
            } else {
                z
            }
        });
        (x, labels)
    }

    #[test]
    fn large_penalty_gives_null_fit_on_separated_data() {
        let x = array![[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]];
        let labels = [false, false, false, true, true, true];
        let fit = &lasso_path(x.view(), &labels, &[100.0]).unwrap()[0];
        assert_eq!(fit.beta[0], 0.0);
        assert_eq!(fit.nonzero_count, 0);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn lambda_max_is_the_zero_boundary() {
        let (x, labels) = simulated(60, 8, 1.0, 3);
        let lmax = lambda_max(x.view(), &labels).unwrap();
        let at = &lasso_path(x.view(), &labels, &[lmax])
            .unwrap()[0];
        assert_eq!(at.nonzero_count, 0);
        assert!(kkt_violation(x.view(), &labels, at).unwrap() <= 1e-4);
        let below = &lasso_path(x.view(), &labels, &[lmax * 0.95]).unwrap()[0];
        assert!(below.nonzero_count > 0);
    }

    #[test]
    fn path_fits_satisfy_kkt() {
        let (x, labels) = simulated(120, 30, 0.8, 11);
        let grid = default_grid(lambda_max(x.view(), &labels).unwrap(), 30, 0.01);
        let path = lasso_path(x.view(), &labels, &grid).unwrap();
        for fit in &path {
            let v = kkt_violation(x.view(), &labels, fit).unwrap();
            assert!(v <= 1e-4, "lambda {}: violation {v}", fit.lambda);
            assert_eq!(fit.nonzero_count, fit.beta.iter().filter(|b| **b != 0.0).count());
        }
        // Small penalties let a coefficient cross zero, so support may shrink
        // deep in the path; the leading stretch grows monotonically.
        let counts: Vec<usize> = path.iter().map(|f| f.nonzero_count).collect();
        assert!(counts[..20].windows(2).all(|w| w[1] >= w[0]), "{counts:?}");
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn cv_fit_is_deterministic_and_finds_signal() {
        let (x, labels) = simulated(150, 40, 1.5, 5);
        let cfg = LassoConfig {
            seed: 9,
            ..LassoConfig::default()
        };
        let a = fit_logistic_lasso(x.view(), &labels, &cfg).unwrap();
        let b = fit_logistic_lasso(x.view(), &labels, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.beta[0] > 0.0 && a.beta[1] > 0.0 && a.beta[2] > 0.0);
        assert!(kkt_violation(x.view(), &labels, &a).unwrap() <= 1e-4);
    }

    #[test]
    fn constant_columns_stay_at_zero() {
        let (mut x, labels) = simulated(80, 6, 1.5, 2);
        x.column_mut(4).fill(3.0);
        let fit = fit_logistic_lasso(x.view(), &labels, &LassoConfig::default()).unwrap();
        assert_eq!(fit.beta[4], 0.0);
        assert!(fit.beta.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, labels) = simulated(40, 4, 1.0, 1);
        let one_class = vec![true; 40];
        assert!(fit_logistic_lasso(x.view(), &one_class, &LassoConfig::default()).is_err());
        let empty = LassoConfig {
            lambda_grid: Some(vec![]),
            ..LassoConfig::default()
        };
        assert!(fit_logistic_lasso(x.view(), &labels, &empty).is_err());
        let rising = LassoConfig {
            lambda_grid: Some(vec![0.1, 0.2]),
            ..LassoConfig::default()
        };
        assert!(fit_logistic_lasso(x.view(), &labels, &rising).is_err());
        let many_folds = LassoConfig {
            cv_folds: 30,
            ..LassoConfig::default()
        };
        assert!(fit_logistic_lasso(x.view(), &labels, &many_folds).is_err());
    }

    #[test]
    fn anchored_direction_examples() {
        let mut e1 = Array1::zeros(10);
        e1[0] = 1.0;
        let v = Direction::new(e1.clone(), DirectionOrigin::Pc(1)).unwrap();

        let zero = Array1::zeros(10);
        let same = anchored_direction(&v, zero.view(), &AnchorConfig::standard(64)).unwrap();
        assert_eq!(same.weights(), v.weights());
        assert_eq!(same.origin(), DirectionOrigin::Anchored);

        let cfg = AnchorConfig::standard(64);
        assert!((cfg.threshold() - 0.25).abs() < 1e-15);
        assert_eq!(cfg.weight(), 8.0);
        let mut beta = Array1::zeros(10);
        beta[1] = 0.3;
        let u = anchored_direction(&v, beta.view(), &cfg).unwrap();
        assert_eq!(u.weights()[0], 1.0);
        assert!((u.weights()[1] - 2.4).abs() < 1e-15);
        assert!(u.weights().iter().skip(2).all(|w| *w == 0.0));

        // Below threshold: bit-identical to v.
        beta[1] = 0.2;
        assert_eq!(anchored_direction(&v, beta.view(), &cfg).unwrap().weights(), v.weights());

        let r_zero = AnchorConfig::new(1.0 / 3.0, None, 64).unwrap();
        beta[1] = 1e-9;
        let u = anchored_direction(&v, beta.view(), &r_zero).unwrap();
        assert!((u.weights()[1] - 64f64.powf(1.0 / 3.0) * 1e-9).abs() < 1e-20);

        assert!(anchored_direction(&v, Array1::zeros(3).view(), &cfg).is_err());
        assert!(AnchorConfig::new(0.7, None, 10).is_err());
        assert!(AnchorConfig::new(0.5, Some(0.0), 10).is_err());
    }
}
