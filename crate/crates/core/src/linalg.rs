//! Bridge between `ndarray` storage and `faer` kernels.
//!
//! All faer calls run with `Par::Seq` (the crate is built without faer's rayon
//! feature), so every decomposition is bit-reproducible regardless of how many
//! Monte Carlo workers are active.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Llt;
use faer::{Accum, Mat, MatRef, Par, Side};
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

fn view<'a>(a: &'a ArrayView2<'_, f64>) -> MatRef<'a, f64> {
    let (r, c) = a.dim();
    let slice = a
        .as_slice_memory_order()
        .expect("ndarray view must be contiguous");
    if a.is_standard_layout() {
        MatRef::from_row_major_slice(slice, r, c)
    } else {
        MatRef::from_column_major_slice(slice, r, c)
    }
}

fn to_ndarray(m: MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn contiguous(a: ArrayView2<'_, f64>) -> Option<ArrayView2<'_, f64>> {
    if a.is_standard_layout() || a.t().is_standard_layout() {
        Some(a)
    } else {
        None
    }
}

/// `a · b`
pub fn matmul_nd(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let a_owned;
    let a = match contiguous(a.view()) {
        Some(v) => v,
        None => {
            a_owned = a.as_standard_layout().into_owned();
            a_owned.view()
        }
    };
    let b_owned;
    let b = match contiguous(b.view()) {
        Some(v) => v,
        None => {
            b_owned = b.as_standard_layout().into_owned();
            b_owned.view()
        }
    };
    let (fa, fb) = (view(&a), view(&b));
    let mut out = Mat::<f64>::zeros(fa.nrows(), fb.ncols());
    matmul(out.as_mut(), Accum::Replace, fa, fb, 1.0, Par::Seq);
    to_ndarray(out.as_ref())
}

/// `Fᵀ F` for an `r × p` factor.
pub fn gram_cols(f: ArrayView2<'_, f64>) -> Array2<f64> {
    matmul_nd(f.t(), f)
}

/// `F Fᵀ` for an `r × p` factor.
pub fn gram_rows(f: ArrayView2<'_, f64>) -> Array2<f64> {
    matmul_nd(f, f.t())
}

/// Largest absolute difference between `a` and `aᵀ`.
pub fn max_asymmetry(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full symmetric eigendecomposition with eigenvalues sorted non-increasing.
/// Column `j` of the returned matrix pairs with value `j`.
pub fn symmetric_eigen_desc(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let owned;
    let av = match contiguous(a.view()) {
        Some(v) => v,
        None => {
            owned = a.as_standard_layout().into_owned();
            owned.view()
        }
    };
    let evd = view(&av)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer sorts ascending.
    let values = Array1::from_shape_fn(n, |k| s[n - 1 - k]);
    let vectors = Array2::from_shape_fn((n, n), |(i, k)| u[(i, n - 1 - k)]);
    Ok((values, vectors))
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// when the factorization breaks down.
pub fn cholesky_lower(a: &Array2<f64>) -> Option<Array2<f64>> {
    let owned = a.as_standard_layout().into_owned();
    let llt = Llt::new(view(&owned.view()), Side::Lower).ok()?;
    let l = llt.L();
    let n = a.nrows();
    Some(Array2::from_shape_fn((n, n), |(i, j)| if j <= i { l[(i, j)] } else { 0.0 }))
}
