//! Rank-one symmetric pairs `(g, k)` with `g = k + p`, the decomposition of
//! `g` adapted to a regular element `X0 in p`, and the classification catalog.

mod catalog;
mod decomposition;

pub use catalog::{
    catalog, catalog_cross_checks, export_catalog, rows_without_quadric_counterpart, CatalogEntry, CatalogFamily,
    CrossCheck, Linear, Space, CATALOG_SCHEMA,
};
pub use decomposition::{mprime_decomposition, verify_lemma33, Lemma33Report, MprimeDecomposition};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{LabError, Result};
use crate::lie::{build_algebra, AlgebraSpec, LieAlgebraData, Subspace};
use crate::linalg::{null_space, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairName {
    Sphere(usize),
    RealProjective(usize),
    ComplexProjective(usize),
}

impl fmt::Display for PairName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairName::Sphere(n) => write!(f, "sphere({n})"),
            PairName::RealProjective(n) => write!(f, "rproj({n})"),
            PairName::ComplexProjective(n) => write!(f, "cproj({n})"),
        }
    }
}

impl FromStr for PairName {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || LabError::UnsupportedModel(format!("unknown symmetric pair `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let n: usize = s[open + 1..s.len() - 1].trim().parse().map_err(|_| bad())?;
        match &s[..open] {
            "sphere" => Ok(PairName::Sphere(n)),
            "rproj" => Ok(PairName::RealProjective(n)),
            "cproj" => Ok(PairName::ComplexProjective(n)),
            _ => Err(bad()),
        }
    }
}

/// A symmetric pair `g = k + p` of rank one with a distinguished unit `X0 in p`.
#[derive(Clone, Debug)]
pub struct SymmetricPairData {
    pub name: PairName,
    pub algebra: LieAlgebraData,
    pub k_sub: Subspace,
    pub p_sub: Subspace,
    /// Unit vector (`-B(X0, X0) = 1`) in `p`.
    pub x0: DVector<f64>,
    /// `S` with `sigma(g) = S g S^{-1}` on the matrix group; `K` is its fixed set.
    pub group_involution: CMatrix,
    /// Global-space remark; `rproj(n)` shares the local pair of `sphere(n)`.
    pub cover_note: Option<String>,
}

pub fn build_pair(name: PairName) -> Result<SymmetricPairData> {
    match name {
        PairName::Sphere(n) | PairName::RealProjective(n) if (2..=4).contains(&n) => {
            let algebra = build_algebra(AlgebraSpec::So(n + 1))?;
            // Generators e_{1j} (first n in lexicographic order) move the base point e_1.
            let p_cols: Vec<DVector<f64>> = (0..n).map(|i| algebra.basis_vector(i)).collect();
            let k_cols: Vec<DVector<f64>> = (n..algebra.dim()).map(|i| algebra.basis_vector(i)).collect();
            let mut s = CMatrix::identity(n + 1, n + 1);
            s[(0, 0)] = Complex64::new(-1.0, 0.0);
            let cover_note = match name {
                PairName::RealProjective(_) => {
                    Some(format!("S^{n} double covers RP^{n}; same local pair as sphere({n})"))
                }
                _ => None,
            };
            SymmetricPairData::assemble(name, algebra, &k_cols, &p_cols, s, cover_note)
        }
        PairName::ComplexProjective(1) => {
            let algebra = build_algebra(AlgebraSpec::Su(2))?;
            let p_cols = vec![algebra.basis_vector(0), algebra.basis_vector(1)];
            let k_cols = vec![algebra.basis_vector(2)];
            let mut s = CMatrix::identity(2, 2);
            s[(1, 1)] = Complex64::new(-1.0, 0.0);
            SymmetricPairData::assemble(name, algebra, &k_cols, &p_cols, s, None)
        }
        other => Err(LabError::UnsupportedModel(format!(
            "symmetric pair {other} (supported: sphere(2..=4), rproj(2..=4), cproj(1))"
        ))),
    }
}

impl SymmetricPairData {
    fn assemble(
        name: PairName,
        algebra: LieAlgebraData,
        k_cols: &[DVector<f64>],
        p_cols: &[DVector<f64>],
        group_involution: CMatrix,
        cover_note: Option<String>,
    ) -> Result<Self> {
        let k_sub = Subspace::from_vectors(&algebra, k_cols)?;
        let p_sub = Subspace::from_vectors(&algebra, p_cols)?;
        let x0 = p_sub.vector(0);
        Ok(SymmetricPairData { name, algebra, k_sub, p_sub, x0, group_involution, cover_note })
    }

    /// Same pair with a different distinguished element (not normalized).
    pub fn with_x0(&self, x0: DVector<f64>) -> Self {
        SymmetricPairData { x0, ..self.clone() }
    }

    pub fn p_dim(&self) -> usize {
        self.p_sub.dim()
    }

    pub fn k_dim(&self) -> usize {
        self.k_sub.dim()
    }

    /// Element of `p` with the given coordinates in the orthonormal `p` basis.
    pub fn p_vector(&self, coords: &[f64]) -> DVector<f64> {
        self.p_sub.basis() * DVector::from_column_slice(coords)
    }

    pub fn proj_k(&self) -> DMatrix<f64> {
        self.k_sub.projector(&self.algebra)
    }

    pub fn proj_p(&self) -> DMatrix<f64> {
        self.p_sub.projector(&self.algebra)
    }

    /// Residuals of `[k,k] in k`, `[k,p] in p`, `[p,p] in k` over basis pairs.
    pub fn cartan_residuals(&self) -> [f64; 3] {
        let alg = &self.algebra;
        let pk = self.proj_k();
        let pp = self.proj_p();
        let worst = |a: &Subspace, b: &Subspace, target: &DMatrix<f64>| {
            let mut w = 0.0_f64;
            for i in 0..a.dim() {
                for j in 0..b.dim() {
                    let br = alg.bracket(&a.vector(i), &b.vector(j));
                    let off = &br - target * &br;
                    w = w.max(crate::linalg::max_abs_vec(&off));
                }
            }
            w
        };
        [
            worst(&self.k_sub, &self.k_sub, &pk),
            worst(&self.k_sub, &self.p_sub, &pp),
            worst(&self.p_sub, &self.p_sub, &pk),
        ]
    }

    /// Dimension of `ker(ad_x) ∩ p`; equal to one for rank-one pairs.
    pub fn kernel_dim_in_p(&self, x: &DVector<f64>) -> usize {
        let restricted = self.algebra.ad(x) * self.p_sub.basis();
        null_space(&restricted, 1e-10).ncols()
    }

    /// Uniformly distributed unit vector in `p`.
    pub fn random_unit_p<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        self.p_sub.basis() * crate::sampling::unit_vector(rng, self.p_dim())
    }

    /// Checks `sigma` on the matrix realization: `S X S^{-1}` is `X` on `k` and
    /// `-X` on `p`.
    pub fn involution_residual(&self) -> f64 {
        let alg = &self.algebra;
        let s = &self.group_involution;
        let s_inv = s.clone().try_inverse().expect("involution matrix is invertible");
        let mut worst = 0.0_f64;
        for (sub, sign) in [(&self.k_sub, 1.0), (&self.p_sub, -1.0)] {
            for i in 0..sub.dim() {
                let x = alg.to_matrix(&sub.vector(i));
                let conj = s * &x * &s_inv;
                worst = worst.max((conj - x * Complex64::new(sign, 0.0)).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_of_small_pairs() {
        let s2 = build_pair(PairName::Sphere(2)).unwrap();
        assert_eq!(s2.algebra.spec, AlgebraSpec::So(3));
        assert_eq!((s2.k_dim(), s2.p_dim()), (1, 2));
        let s3 = build_pair(PairName::Sphere(3)).unwrap();
        assert_eq!((s3.k_dim(), s3.p_dim()), (3, 3));
        let cp1 = build_pair(PairName::ComplexProjective(1)).unwrap();
        assert_eq!((cp1.k_dim(), cp1.p_dim()), (1, 2));
    }

    #[test]
    fn cartan_relations_and_rank_one() {
        for name in [
            PairName::Sphere(2),
            PairName::Sphere(3),
            PairName::Sphere(4),
            PairName::RealProjective(2),
            PairName::RealProjective(3),
            PairName::RealProjective(4),
            PairName::ComplexProjective(1),
        ] {
            let pair = build_pair(name).unwrap();
            for r in pair.cartan_residuals() {
                assert!(r < 1e-12, "{name}: {r}");
            }
            assert!((pair.algebra.norm(&pair.x0) - 1.0).abs() < 1e-14);
            assert_eq!(pair.kernel_dim_in_p(&pair.x0), 1, "{name}");
            assert!(pair.involution_residual() < 1e-14, "{name}");
        }
    }

    #[test]
    fn unsupported_pairs() {
        assert!(build_pair(PairName::Sphere(5)).is_err());
        assert!(build_pair(PairName::ComplexProjective(2)).is_err());
        assert!("hproj(1)".parse::<PairName>().is_err());
        assert_eq!("rproj(3)".parse::<PairName>().unwrap(), PairName::RealProjective(3));
    }

    #[test]
    fn rproj_records_cover() {
        let rp = build_pair(PairName::RealProjective(2)).unwrap();
        assert!(rp.cover_note.is_some());
        let s = build_pair(PairName::Sphere(2)).unwrap();
        assert!(crate::linalg::max_abs(&(rp.proj_p() - s.proj_p())) == 0.0);
    }
}
