//! Finite-difference calculus on chart coordinates: derivatives of matrix
//! fields, the Nijenhuis tensor of an almost complex structure and brackets of
//! vector fields. All differences are central.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::max_abs;

/// Matrix-valued field on a chart (typically `x -> J(x)`).
pub trait MatrixField: Fn(&DVector<f64>) -> Result<DMatrix<f64>> {}
impl<F: Fn(&DVector<f64>) -> Result<DMatrix<f64>>> MatrixField for F {}

/// Vector field on a chart.
pub trait VectorField: Fn(&DVector<f64>) -> Result<DVector<f64>> {}
impl<F: Fn(&DVector<f64>) -> Result<DVector<f64>>> VectorField for F {}

fn shifted(x: &DVector<f64>, k: usize, s: f64) -> DVector<f64> {
    let mut y = x.clone();
    y[k] += s;
    y
}

/// `[d_0 F, ..., d_{m-1} F]` at `x`.
pub fn partials(field: &impl MatrixField, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>> {
    (0..x.len())
        .map(|k| {
            let plus = field(&shifted(x, k, h))?;
            let minus = field(&shifted(x, k, -h))?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// Central-difference gradient of a scalar function.
pub fn gradient(f: &impl Fn(&DVector<f64>) -> Result<f64>, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    for k in 0..x.len() {
        g[k] = (f(&shifted(x, k, h))? - f(&shifted(x, k, -h))?) / (2.0 * h);
    }
    Ok(g)
}

/// Jacobian `D F` of a vector field, column `k` = `d_k F`.
pub fn jacobian(field: &impl VectorField, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let plus = field(&shifted(x, k, h))?;
        let minus = field(&shifted(x, k, -h))?;
        cols.push((plus - minus) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Components `N[m][(i, j)]` of the Nijenhuis tensor of the structure field on
/// coordinate fields `d_i, d_j`:
/// `N^m_ij = J^l_i d_l J^m_j - J^l_j d_l J^m_i - J^m_l (d_i J^l_j - d_j J^l_i)`.
pub fn nijenhuis_tensor(field: &impl MatrixField, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>> {
    let j = field(x)?;
    let dj = partials(field, x, h)?;
    let dim = x.len();
    let mut out = vec![DMatrix::zeros(dim, dim); dim];
    for i in 0..dim {
        for jj in 0..dim {
            let mut first = DVector::zeros(dim);
            for l in 0..dim {
                first += dj[l].column(jj) * j[(l, i)] - dj[l].column(i) * j[(l, jj)];
            }
            let curl = dj[i].column(jj) - dj[jj].column(i);
            let total = first - &j * curl;
            for m in 0..dim {
                out[m][(i, jj)] = total[m];
            }
        }
    }
    Ok(out)
}

/// Max-norm of `N(d_i, d_j)`.
pub fn nijenhuis_component(tensor: &[DMatrix<f64>], i: usize, j: usize) -> f64 {
    tensor.iter().fold(0.0_f64, |acc, n| acc.max(n[(i, j)].abs()))
}

pub fn nijenhuis_max(tensor: &[DMatrix<f64>]) -> f64 {
    tensor.iter().fold(0.0_f64, |acc, n| acc.max(max_abs(n)))
}

/// Lie bracket `[A, B] = DB A - DA B` of two chart vector fields.
pub fn lie_bracket(a: &impl VectorField, b: &impl VectorField, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let da = jacobian(a, x, h)?;
    let db = jacobian(b, x, h)?;
    Ok(db * a(x)? - da * b(x)?)
}

/// `||J^2 + I||_max`.
pub fn square_residual(j: &DMatrix<f64>) -> f64 {
    let n = j.nrows();
    max_abs(&(j * j + DMatrix::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_complex_structure;

    #[test]
    fn constant_structure_is_integrable() {
        let field = |_: &DVector<f64>| Ok(standard_complex_structure(2));
        let x = DVector::from_vec(vec![0.1, 0.2, -0.3, 0.4]);
        let n = nijenhuis_tensor(&field, &x, 1e-3).unwrap();
        assert_eq!(nijenhuis_max(&n), 0.0);
    }

    // Conjugating the flat structure by a diffeomorphism keeps it integrable;
    // a pointwise rotation of J that is not induced by a map generally does not.
    fn conjugated(x: &DVector<f64>) -> Result<DMatrix<f64>> {
        // F(x) = x + 0.3 * (x1^2, x0 x3, sin x2, x0^2) ; J = DF^{-1} J0 DF
        let mut df = DMatrix::<f64>::identity(4, 4);
        df[(0, 1)] += 0.6 * x[1];
        df[(1, 0)] += 0.3 * x[3];
        df[(1, 3)] += 0.3 * x[0];
        df[(2, 2)] += 0.3 * x[2].cos();
        df[(3, 0)] += 0.6 * x[0];
        let inv = df.clone().try_inverse().unwrap();
        Ok(inv * standard_complex_structure(2) * df)
    }

    fn twisted(x: &DVector<f64>) -> Result<DMatrix<f64>> {
        // J = P J0 P^{-1} with P depending on x in a non-holomorphic way.
        let mut p = DMatrix::<f64>::identity(4, 4);
        p[(0, 2)] = 0.5 * x[1];
        p[(1, 3)] = 0.4 * x[0] * x[0];
        let inv = p.clone().try_inverse().unwrap();
        Ok(&p * standard_complex_structure(2) * inv)
    }

    #[test]
    fn pulled_back_structure_is_integrable_at_second_order() {
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        let r1 = nijenhuis_max(&nijenhuis_tensor(&conjugated, &x, 1e-3).unwrap());
        let r2 = nijenhuis_max(&nijenhuis_tensor(&conjugated, &x, 5e-4).unwrap());
        assert!(r1 < 1e-5);
        let ratio = r1 / r2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
        assert!(square_residual(&conjugated(&x).unwrap()) < 1e-13);
    }

    #[test]
    fn twisted_structure_is_detected() {
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        assert!(square_residual(&twisted(&x).unwrap()) < 1e-13);
        assert!(nijenhuis_max(&nijenhuis_tensor(&twisted, &x, 1e-3).unwrap()) > 1e-2);
    }

    #[test]
    fn bracket_of_linear_fields() {
        // A = M x, B = N x  =>  [A, B] = (N M - M N) x
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let n = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let a = |x: &DVector<f64>| Ok(&m * x);
        let b = |x: &DVector<f64>| Ok(&n * x);
        let x = DVector::from_vec(vec![0.7, -0.4]);
        let br = lie_bracket(&a, &b, &x, 1e-3).unwrap();
        let exact = (&n * &m - &m * &n) * &x;
        assert!(crate::linalg::max_abs_vec(&(br - exact)) < 1e-12);
    }
}
