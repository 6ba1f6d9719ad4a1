//! Small dense linear-algebra helpers shared by the geometry modules.
//!
//! Everything here works on `nalgebra` dynamic matrices; dimensions in this
//! crate never exceed a few dozen, so no attempt is made at blocking or reuse
//! of workspaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending
/// and eigenvectors permuted to match.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Orthonormal basis (Euclidean) of the null space of `m`. Singular values below
/// `rel_tol * sigma_max` count as zero.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to a square matrix so the SVD returns a complete right basis.
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = if smax == 0.0 { f64::INFINITY } else { rel_tol * smax };
    let kernel: Vec<DVector<f64>> =
        (0..cols).filter(|&i| svd.singular_values[i] <= cutoff).map(|i| v_t.row(i).transpose()).collect();
    if kernel.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&kernel)
    }
}

/// Numerical rank via singular values relative to the largest one.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Smallest-over-largest singular value ratio of the columns of `m`.
pub fn column_conditioning(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 {
        0.0
    } else {
        smin / smax
    }
}

/// Orthonormalize the columns of `m` with respect to the positive definite
/// metric `g` (`x^T g y`). Fails if the columns are numerically dependent.
pub fn orthonormalize(m: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.ncols() == 0 {
        return Ok(m.clone());
    }
    let gram = m.transpose() * g * m;
    let gram = (&gram + gram.transpose()) * 0.5;
    let chol = gram
        .cholesky()
        .ok_or_else(|| LabError::degenerate("orthonormalize", "Gram matrix of columns is not positive definite"))?;
    let l = chol.l();
    let l_inv_t = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| LabError::degenerate("orthonormalize", "singular Cholesky factor"))?;
    Ok(m * l_inv_t)
}

/// Sine of the largest principal angle between the column spans of `q1` and
/// `q2`, both assumed orthonormal in the metric `g`. Returns 1.0 when the
/// dimensions differ.
pub fn subspace_distance(q1: &DMatrix<f64>, q2: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    if q1.ncols() != q2.ncols() {
        return 1.0;
    }
    if q1.ncols() == 0 {
        return 0.0;
    }
    // Residual of projecting q1 onto span(q2), measured in the g-norm.
    let coeffs = q2.transpose() * g * q1;
    let resid = q1 - q2 * coeffs;
    let gram = resid.transpose() * g * &resid;
    let (vals, _) = sorted_symmetric_eigen(&gram);
    vals[vals.len() - 1].max(0.0).sqrt()
}

/// Complex matrix exponential.
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

/// Principal matrix logarithm by inverse scaling and squaring: repeated
/// Denman-Beavers square roots bring the argument close to the identity, where
/// the Mercator series converges quickly.
pub fn logm(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    let mut a = m.clone();
    let mut squarings = 0u32;
    while (&a - &id).norm() > 0.25 {
        a = sqrtm_db(&a)?;
        squarings += 1;
        if squarings > 60 {
            return Err(LabError::Computation("matrix log: square roots did not converge".into()));
        }
    }
    let x = &a - &id;
    let mut term = x.clone();
    let mut sum = CMatrix::zeros(n, n);
    for k in 1..200 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let contrib = &term * Complex64::new(sign / k as f64, 0.0);
        sum += &contrib;
        if contrib.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        term = &term * &x;
    }
    Ok(sum * Complex64::new(2f64.powi(squarings as i32), 0.0))
}

fn sqrtm_db(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = CMatrix::identity(n, n);
    for _ in 0..100 {
        let y_inv =
            y.clone().try_inverse().ok_or_else(|| LabError::Computation("matrix sqrt: singular iterate".into()))?;
        let z_inv =
            z.clone().try_inverse().ok_or_else(|| LabError::Computation("matrix sqrt: singular iterate".into()))?;
        let half = Complex64::new(0.5, 0.0);
        let y_next = (&y + z_inv) * half;
        let z_next = (&z + y_inv) * half;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta < 1e-15 * y.norm() {
            return Ok(y);
        }
    }
    Err(LabError::Computation("matrix sqrt: Denman-Beavers did not converge".into()))
}

/// Real 2n x 2n matrix of multiplication by `i` on C^n written as (Re, Im) blocks.
pub fn standard_complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(n + k, k)] = 1.0;
        j[(k, n + k)] = -1.0;
    }
    j
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let k = null_space(&m, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-14);
    }

    #[test]
    fn log_inverts_exp() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.2, -0.3, -1.2, 0.0, 0.8, 0.3, -0.8, 0.0]);
        let e = expm(&to_complex(&a));
        let l = logm(&e).unwrap();
        let back = l.map(|c| c.re);
        assert!(max_abs(&(back - a)) < 1e-12);
    }

    #[test]
    fn subspace_distance_detects_equal_spans() {
        let g = DMatrix::identity(3, 3);
        let q1 = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let s = 0.5_f64.sqrt();
        let q2 = DMatrix::from_column_slice(3, 2, &[s, s, 0.0, s, -s, 0.0]);
        assert!(subspace_distance(&q1, &q2, &g) < 1e-15);
        let q3 = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((subspace_distance(&q1, &q3, &g) - 1.0).abs() < 1e-15);
    }
}
