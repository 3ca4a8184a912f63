//! Group means, pooled covariance, symmetric eigendecomposition and the
//! pseudoinverse of the shifted covariance `(λ I − Σ)⁺`.
//!
//! A pooled covariance built from raw samples is kept in factored form
//! `Σ = w·Fᵀ F` (rows of `F` are centered samples, `w = 1/(n−2)`). When
//! `n < p` the spectrum comes from the small `F Fᵀ` Gram matrix, and the dense
//! `p × p` matrix is only materialized on request.

use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{gram_cols, gram_rows, matmul_nd, max_asymmetry, symmetric_eigen_desc};

/// Asymmetry accepted on input before an error is raised.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Default relative cutoff used by the pseudoinverses.
pub const DEFAULT_PINV_REL_TOL: f64 = 1e-8;

/// Dual eigenvalues below this fraction of the largest are treated as exact
/// zeros (their primal vectors would be numerically unreliable).
const DUAL_RANK_TOL: f64 = 1e-10;

pub fn sample_mean(samples: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if samples.nrows() == 0 {
        return Err(Error::invalid("sample_mean of an empty sample"));
    }
    Ok(column_means(samples))
}

fn column_means(samples: ArrayView2<'_, f64>) -> Array1<f64> {
    let mut acc = Array1::zeros(samples.ncols());
    for row in samples.rows() {
        acc += &row;
    }
    acc / samples.nrows() as f64
}

/// Hard-threshold level `c·√(ln p / n)`.
pub fn mean_threshold(n: usize, p: usize, c: f64) -> f64 {
    c * ((p as f64).ln() / n as f64).sqrt()
}

/// Column means with entries smaller than `c·√(ln p / n)` in magnitude set to 0.
pub fn thresholded_mean(samples: ArrayView2<'_, f64>, c: f64) -> Result<Array1<f64>> {
    let (n, p) = samples.dim();
    if n < 2 || p < 2 {
        return Err(Error::invalid(format!(
            "thresholded_mean needs n >= 2 and p >= 2, got n={n}, p={p}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("threshold multiplier must be positive, got {c}")));
    }
    let level = mean_threshold(n, p, c);
    let mut mean = column_means(samples);
    mean.mapv_inplace(|m| if m.abs() < level { 0.0 } else { m });
    Ok(mean)
}

/// Eigenvalues (non-increasing) and matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigenPair {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> ArrayView1<'_, f64> {
        self.vectors.column(j)
    }
}

/// Leading part of the spectrum of a covariance estimate. When `complete` is
/// false the missing eigenvalues are exactly zero and their eigenvectors span
/// the orthogonal complement of `vectors`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
    pub complete: bool,
}

#[derive(Debug)]
pub struct CovarianceEstimate {
    p: usize,
    n_effective: usize,
    factor: Option<Array2<f64>>,
    weight: f64,
    dense: OnceLock<Array2<f64>>,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for CovarianceEstimate {
    fn clone(&self) -> Self {
        let dense = OnceLock::new();
        if let Some(d) = self.dense.get() {
            let _ = dense.set(d.clone());
        }
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            p: self.p,
            n_effective: self.n_effective,
            factor: self.factor.clone(),
            weight: self.weight,
            dense,
            spectrum,
        }
    }
}

impl CovarianceEstimate {
    /// Wraps an explicit matrix. Asymmetry up to `SYMMETRY_TOL` is averaged
    /// away; anything larger is rejected.
    pub fn from_matrix(matrix: Array2<f64>, n_effective: usize) -> Result<Self> {
        let p = matrix.nrows();
        if matrix.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariance matrix has non-finite entries"));
        }
        let asym = max_asymmetry(&matrix);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        let dense = OnceLock::new();
        let _ = dense.set(symmetrize(matrix));
        Ok(Self {
            p,
            n_effective,
            factor: None,
            weight: 1.0,
            dense,
            spectrum: OnceLock::new(),
        })
    }

    /// Covariance `weight·Fᵀ F` given its factor.
    pub fn from_factor(factor: Array2<f64>, weight: f64, n_effective: usize) -> Self {
        Self {
            p: factor.ncols(),
            n_effective,
            factor: Some(factor),
            weight,
            dense: OnceLock::new(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_effective(&self) -> usize {
        self.n_effective
    }

    /// Factor `F` and weight `w` with `Σ = w·Fᵀ F`, when available.
    pub fn factor(&self) -> Option<(&Array2<f64>, f64)> {
        self.factor.as_ref().map(|f| (f, self.weight))
    }

    /// Dense `p × p` matrix, built on first use for factored estimates.
    pub fn matrix(&self) -> &Array2<f64> {
        self.dense.get_or_init(|| {
            let f = self.factor.as_ref().expect("covariance has neither matrix nor factor");
            symmetrize(gram_cols(f.view()) * self.weight)
        })
    }

    /// `Σ v` without forming `Σ` when a factor is available.
    pub fn apply(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        match (&self.factor, self.dense.get()) {
            (_, Some(d)) => d.dot(&v),
            (Some(f), None) => f.t().dot(&f.dot(&v)) * self.weight,
            (None, None) => unreachable!("covariance has neither matrix nor factor"),
        }
    }

    /// `aᵀ Σ b`.
    pub fn bilinear(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match (&self.factor, self.dense.get()) {
            (Some(f), _) => f.dot(&a).dot(&f.dot(&b)) * self.weight,
            (None, Some(d)) => a.dot(&d.dot(&b)),
            (None, None) => unreachable!("covariance has neither matrix nor factor"),
        }
    }

    pub fn diagonal(&self) -> Array1<f64> {
        match (&self.factor, self.dense.get()) {
            (_, Some(d)) => d.diag().to_owned(),
            (Some(f), None) => f.map_axis(Axis(0), |col| col.dot(&col) * self.weight),
            (None, None) => unreachable!("covariance has neither matrix nor factor"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.factor {
            Some(f) => f.iter().all(|v| *v == 0.0),
            None => self.matrix().iter().all(|v| *v == 0.0),
        }
    }

    /// Eigen-decomposition, cached. Uses the `F Fᵀ` Gram matrix when the
    /// factor has fewer rows than columns.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = match &self.factor {
            Some(f) if f.nrows() < self.p => dual_spectrum(f.view(), self.weight)?,
            _ => {
                let (values, vectors) = symmetric_eigen_desc(self.matrix())?;
                Spectrum {
                    values,
                    vectors,
                    complete: true,
                }
            }
        };
        Ok(self.spectrum.get_or_init(|| s))
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> Result<f64> {
        let s = self.spectrum()?;
        Ok(if s.values.is_empty() { 0.0 } else { s.values[0].max(0.0) })
    }
}

fn symmetrize(m: Array2<f64>) -> Array2<f64> {
    let t = m.t().to_owned();
    (m + t) * 0.5
}

fn dual_spectrum(f: ArrayView2<'_, f64>, weight: f64) -> Result<Spectrum> {
    let g = symmetrize(gram_rows(f));
    let (vals, u) = symmetric_eigen_desc(&g)?;
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let q = vals.iter().take_while(|&&v| v > DUAL_RANK_TOL * top && v > 0.0).count();
    let unweighted = vals.slice(ndarray::s![..q]).to_owned();
    let mut vectors = matmul_nd(f.t(), u.slice(ndarray::s![.., ..q]));
    for (mut col, &mu) in vectors.columns_mut().into_iter().zip(unweighted.iter()) {
        col /= mu.sqrt();
    }
    Ok(Spectrum {
        values: unweighted * weight,
        vectors,
        complete: false,
    })
}

/// Pooled within-group covariance with divisor `n_x + n_z − 2`. When
/// `threshold` is `Some(c)` with `c > 0`, off-diagonal entries below
/// `c·√(ln p / (n_x + n_z))` in magnitude are set to 0.
pub fn pooled_covariance(
    x: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
    threshold: Option<f64>,
) -> Result<CovarianceEstimate> {
    let (nx, nz) = (x.nrows(), z.nrows());
    if nx < 2 || nz < 2 {
        return Err(Error::invalid(format!(
            "pooled covariance needs at least 2 samples per group, got {nx} and {nz}"
        )));
    }
    if x.ncols() != z.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: z.ncols(),
        });
    }
    let p = x.ncols();
    let n = nx + nz;
    let mut factor = Array2::zeros((n, p));
    for (block, rows) in [(0..nx, x), (nx..n, z)] {
        let mean = column_means(rows);
        for (i, row) in block.zip(rows.rows()) {
            let mut out = factor.row_mut(i);
            out.assign(&row);
            out -= &mean;
        }
    }
    let cov = CovarianceEstimate::from_factor(factor, 1.0 / (n - 2) as f64, n);
    match threshold {
        Some(c) if c > 0.0 => {
            let level = c * ((p as f64).ln() / n as f64).sqrt();
            let mut m = cov.matrix().clone();
            for ((i, j), v) in m.indexed_iter_mut() {
                if i != j && v.abs() < level {
                    *v = 0.0;
                }
            }
            CovarianceEstimate::from_matrix(m, n)
        }
        Some(c) if c < 0.0 || c.is_nan() => Err(Error::invalid(format!(
            "covariance threshold multiplier must be non-negative, got {c}"
        ))),
        _ => Ok(cov),
    }
}

/// The `k` largest eigenpairs of `sigma`.
pub fn top_eigen(sigma: &CovarianceEstimate, k: usize) -> Result<EigenPair> {
    let p = sigma.p();
    if k == 0 || k > p {
        return Err(Error::invalid(format!("eigenpair count must lie in [1, {p}], got {k}")));
    }
    let s = sigma.spectrum()?;
    if k <= s.values.len() {
        return Ok(EigenPair {
            values: s.values.slice(ndarray::s![..k]).to_owned(),
            vectors: s.vectors.slice(ndarray::s![.., ..k]).to_owned(),
        });
    }
    // Asked for more than the numerical rank of a factored estimate.
    let (values, vectors) = symmetric_eigen_desc(sigma.matrix())?;
    Ok(EigenPair {
        values: values.slice(ndarray::s![..k]).to_owned(),
        vectors: vectors.slice(ndarray::s![.., ..k]).to_owned(),
    })
}

/// `top_eigen` on a raw matrix, rejecting asymmetric input.
pub fn top_eigen_matrix(matrix: &Array2<f64>, k: usize) -> Result<EigenPair> {
    let cov = CovarianceEstimate::from_matrix(matrix.clone(), 0)?;
    top_eigen(&cov, k)
}

/// Symmetric operator `V diag(c) Vᵀ + c_⊥ (I − V Vᵀ)`.
#[derive(Debug, Clone)]
pub struct PinvOperator {
    vectors: Array2<f64>,
    coeffs: Array1<f64>,
    complement: f64,
}

impl PinvOperator {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let proj = self.vectors.t().dot(&x);
        let mut out = self.vectors.dot(&(&proj * &self.coeffs));
        if self.complement != 0.0 {
            let residual = &x - &self.vectors.dot(&proj);
            out.scaled_add(self.complement, &residual);
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let p = self.dim();
        let scaled = &self.vectors * &self.coeffs;
        let mut out = matmul_nd(scaled.view(), self.vectors.t());
        if self.complement != 0.0 {
            let proj = matmul_nd(self.vectors.view(), self.vectors.t());
            out = out + (Array2::<f64>::eye(p) - proj) * self.complement;
        }
        symmetrize(out)
    }
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    Ok(())
}

fn shifted_inverse(
    spectrum: &Spectrum,
    lambda: f64,
    null_index: Option<usize>,
    rel_tol: f64,
) -> PinvOperator {
    let shifted: Vec<f64> = spectrum.values.iter().map(|l| lambda - l).collect();
    let mut scale = shifted.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if !spectrum.complete {
        scale = scale.max(lambda.abs());
    }
    let cutoff = rel_tol * scale;
    let invert = |a: f64| if scale > 0.0 && a.abs() > cutoff { 1.0 / a } else { 0.0 };
    let coeffs = Array1::from_iter(
        shifted
            .iter()
            .enumerate()
            .map(|(i, &a)| if Some(i) == null_index { 0.0 } else { invert(a) }),
    );
    let complement = if spectrum.complete { 0.0 } else { invert(lambda) };
    PinvOperator {
        vectors: spectrum.vectors.clone(),
        coeffs,
        complement,
    }
}

/// `(lambda1·I − Σ)⁺`. Eigenvalues of the shifted matrix below
/// `rel_tol·max|eig|` are dropped, and when `lambda1` equals the top
/// eigenvalue of `sigma` the top eigenvector is always dropped.
pub fn pinv_shifted(lambda1: f64, sigma: &CovarianceEstimate, rel_tol: f64) -> Result<PinvOperator> {
    check_rel_tol(rel_tol)?;
    let top = sigma.lambda_max()?;
    let slack = 1e-8 * top.abs().max(1.0);
    if !lambda1.is_finite() || lambda1 < top - slack {
        return Err(Error::invalid(format!(
            "lambda1 = {lambda1} is below the top eigenvalue {top} of sigma"
        )));
    }
    let spectrum = sigma.spectrum()?;
    let null = (!spectrum.values.is_empty() && lambda1 - top <= slack).then_some(0);
    Ok(shifted_inverse(spectrum, lambda1, null, rel_tol))
}

/// `(λ_k·I − Σ)⁺` for the `k`-th eigenvalue (1-based), with the `k`-th
/// eigenvector dropped. Returns the operator and `λ_k`.
pub fn pinv_shifted_at(sigma: &CovarianceEstimate, k: usize, rel_tol: f64) -> Result<(PinvOperator, f64)> {
    check_rel_tol(rel_tol)?;
    let spectrum = sigma.spectrum()?;
    if k == 0 || k > spectrum.values.len() {
        return Err(Error::invalid(format!(
            "component {k} is outside the nonzero spectrum ({} eigenvalues)",
            spectrum.values.len()
        )));
    }
    let lambda = spectrum.values[k - 1];
    Ok((shifted_inverse(spectrum, lambda, Some(k - 1), rel_tol), lambda))
}

/// Moore–Penrose pseudoinverse of a symmetric matrix.
pub fn pinv_symmetric(a: &Array2<f64>, rel_tol: f64) -> Result<Array2<f64>> {
    check_rel_tol(rel_tol)?;
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    let (values, vectors) = symmetric_eigen_desc(a)?;
    let spectrum = Spectrum {
        values: -values,
        vectors,
        complete: true,
    };
    Ok(shifted_inverse(&spectrum, 0.0, None, rel_tol).to_dense())
}
