use nalgebra::{DMatrix, DVector};

use super::LieAlgebraData;
use crate::error::{LabError, Result};
use crate::linalg::{column_conditioning, null_space, orthonormalize, subspace_distance};

/// A linear subspace of a Lie algebra, stored as a basis orthonormal for `-B`.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Span of the columns of `columns`; they must be linearly independent.
    pub fn new(alg: &LieAlgebraData, columns: DMatrix<f64>) -> Result<Self> {
        assert_eq!(columns.nrows(), alg.dim(), "subspace basis has wrong ambient dimension");
        if columns.ncols() > 0 && column_conditioning(&columns) <= 1e-10 {
            return Err(LabError::degenerate("Subspace::new", "basis columns are numerically dependent"));
        }
        let basis = orthonormalize(&columns, &alg.metric())?;
        Ok(Subspace { ambient: alg.dim(), basis })
    }

    pub fn from_vectors(alg: &LieAlgebraData, vectors: &[DVector<f64>]) -> Result<Self> {
        if vectors.is_empty() {
            return Ok(Self::zero(alg.dim()));
        }
        Self::new(alg, DMatrix::from_columns(vectors))
    }

    /// Span of possibly dependent vectors; keeps a maximal independent set.
    pub fn span_of(alg: &LieAlgebraData, columns: &DMatrix<f64>, rel_tol: f64) -> Result<Self> {
        if columns.ncols() == 0 {
            return Ok(Self::zero(alg.dim()));
        }
        let svd = columns.clone().svd(true, false);
        let u = svd.u.expect("requested left singular vectors");
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let keep: Vec<DVector<f64>> = (0..svd.singular_values.len())
            .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
            .map(|i| u.column(i).into_owned())
            .collect();
        Self::from_vectors(alg, &keep)
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: DMatrix::zeros(ambient, 0) }
    }

    pub fn full(alg: &LieAlgebraData) -> Result<Self> {
        Self::new(alg, DMatrix::identity(alg.dim(), alg.dim()))
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Basis orthonormal with respect to `-B`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    /// `-B`-orthogonal projector onto the subspace, as a matrix on coordinates.
    pub fn projector(&self, alg: &LieAlgebraData) -> DMatrix<f64> {
        &self.basis * self.basis.transpose() * alg.metric()
    }

    /// Coordinates of `x` (assumed in the subspace) in the orthonormal basis.
    pub fn coordinates(&self, alg: &LieAlgebraData, x: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * alg.metric() * x
    }

    pub fn sum(&self, alg: &LieAlgebraData, other: &Subspace) -> Result<Self> {
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(self.dim() + other.dim());
        cols.extend(self.basis.column_iter().map(|c| c.into_owned()));
        cols.extend(other.basis.column_iter().map(|c| c.into_owned()));
        if cols.is_empty() {
            return Ok(Self::zero(alg.dim()));
        }
        Self::span_of(alg, &DMatrix::from_columns(&cols), 1e-10)
    }

    /// Image of the subspace under a linear map on coordinates.
    pub fn image(&self, alg: &LieAlgebraData, op: &DMatrix<f64>) -> Result<Self> {
        Self::span_of(alg, &(op * &self.basis), 1e-10)
    }

    /// Sine of the largest principal angle between the two subspaces (in the
    /// `-B` geometry); 1.0 if their dimensions differ.
    pub fn distance(&self, alg: &LieAlgebraData, other: &Subspace) -> f64 {
        subspace_distance(&self.basis, &other.basis, &alg.metric())
    }

    /// Max over basis pairs of `|B(u, v)|`.
    pub fn killing_pairing(&self, alg: &LieAlgebraData, other: &Subspace) -> f64 {
        crate::linalg::max_abs(&(self.basis.transpose() * alg.killing() * &other.basis))
    }

    /// Norm of the component of `x` orthogonal to the subspace.
    pub fn residual(&self, alg: &LieAlgebraData, x: &DVector<f64>) -> f64 {
        let r = x - self.projector(alg) * x;
        alg.norm(&r)
    }
}

/// `-B`-orthogonal complement of `s`, optionally taken inside `within`.
pub fn orth_complement(alg: &LieAlgebraData, s: &Subspace, within: Option<&Subspace>) -> Result<Subspace> {
    let full;
    let w = match within {
        Some(w) => w,
        None => {
            full = Subspace::full(alg)?;
            &full
        }
    };
    if s.dim() == 0 {
        return Ok(w.clone());
    }
    let pairing = s.basis().transpose() * alg.killing() * w.basis();
    let kernel = null_space(&pairing, 1e-10);
    let expected = w.dim().saturating_sub(s.dim());
    if kernel.ncols() < expected {
        return Err(LabError::degenerate(
            "orth_complement",
            format!("kernel has dimension {} but at least {expected} expected", kernel.ncols()),
        ));
    }
    if kernel.ncols() == 0 {
        return Ok(Subspace::zero(alg.dim()));
    }
    Subspace::new(alg, w.basis() * kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{build_algebra, AlgebraSpec};

    #[test]
    fn complement_of_axis_in_so3() {
        let alg = build_algebra(AlgebraSpec::So(3)).unwrap();
        let s = Subspace::from_vectors(&alg, &[alg.basis_vector(0)]).unwrap();
        let c = orth_complement(&alg, &s, None).unwrap();
        assert_eq!(c.dim(), 2);
        let expected = Subspace::from_vectors(&alg, &[alg.basis_vector(1), alg.basis_vector(2)]).unwrap();
        assert!(c.distance(&alg, &expected) < 1e-12);
        assert!(s.killing_pairing(&alg, &c) < 1e-12);
    }

    #[test]
    fn complement_of_everything_is_zero() {
        let alg = build_algebra(AlgebraSpec::Su(3)).unwrap();
        let full = Subspace::full(&alg).unwrap();
        assert_eq!(orth_complement(&alg, &full, None).unwrap().dim(), 0);
    }

    #[test]
    fn complement_within_subspace_adds_up() {
        let alg = build_algebra(AlgebraSpec::So(5)).unwrap();
        let within = Subspace::from_vectors(&alg, &(0..6).map(|i| alg.basis_vector(i)).collect::<Vec<_>>()).unwrap();
        let mut v = alg.basis_vector(0) + alg.basis_vector(3) * 0.5;
        v[1] = -0.25;
        let s = Subspace::from_vectors(&alg, &[v]).unwrap();
        let c = orth_complement(&alg, &s, Some(&within)).unwrap();
        assert_eq!(c.dim(), 5);
        assert!(s.killing_pairing(&alg, &c) < 1e-12);
        assert!(s.sum(&alg, &c).unwrap().distance(&alg, &within) < 1e-12);
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let alg = build_algebra(AlgebraSpec::So(3)).unwrap();
        let e = alg.basis_vector(0);
        assert!(Subspace::from_vectors(&alg, &[e.clone(), e * 2.0]).is_err());
    }
}
