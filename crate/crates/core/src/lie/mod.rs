//! Compact Lie algebras at desk scale.
//!
//! Two matrix families are supported, each with a fixed basis so that every
//! numerical example in the test-suite is reproducible:
//!
//! * `so(n)`, `3 <= n <= 6`: generators `E_ji - E_ij` for `i < j`, ordered
//!   lexicographically in `(i, j)`. With this sign `so(3)` satisfies
//!   `[e1, e2] = e3` cyclically. Killing form `-2(n-2) I`.
//! * `su(n)`, `2 <= n <= 4`: `i lambda_a / sqrt(2)` where `lambda_a` are the
//!   generalized Gell-Mann matrices (`tr(lambda_a lambda_b) = 2 delta_ab`),
//!   ordered: for each pair `j < k` the symmetric then the antisymmetric
//!   off-diagonal matrix, then the `n - 1` diagonal ones. For `su(2)` this is
//!   `{i sigma_1, i sigma_2, i sigma_3} / sqrt(2)`. Killing form `-2n I`.
//!
//! Structure constants are stored dense.

mod spectral;
mod subspace;

pub use spectral::{analytic_ad, left_log_derivative, AdFunction, SpectralCalculus};
pub use subspace::{orth_complement, Subspace};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::linalg::{max_abs, sorted_symmetric_eigen, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraSpec {
    So(usize),
    Su(usize),
}

impl fmt::Display for AlgebraSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraSpec::So(n) => write!(f, "so({n})"),
            AlgebraSpec::Su(n) => write!(f, "su({n})"),
        }
    }
}

impl FromStr for AlgebraSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || LabError::UnsupportedModel(format!("cannot parse algebra `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let n: usize = s[open + 1..s.len() - 1].trim().parse().map_err(|_| bad())?;
        match &s[..open] {
            "so" => Ok(AlgebraSpec::So(n)),
            "su" => Ok(AlgebraSpec::Su(n)),
            _ => Err(bad()),
        }
    }
}

/// A compact Lie algebra: basis, structure constants and Killing form, plus a
/// faithful matrix realization used for group-level checks.
#[derive(Clone, Debug)]
pub struct LieAlgebraData {
    pub name: String,
    pub spec: AlgebraSpec,
    pub basis_labels: Vec<String>,
    dim: usize,
    /// `c[(i * dim + j) * dim + k]`, `[e_i, e_j] = sum_k c_ijk e_k`.
    structure: Vec<f64>,
    killing: DMatrix<f64>,
    matrix_basis: Vec<CMatrix>,
}

pub fn build_algebra(spec: AlgebraSpec) -> Result<LieAlgebraData> {
    let (labels, matrices) = match spec {
        AlgebraSpec::So(n) if (3..=6).contains(&n) => so_basis(n),
        AlgebraSpec::Su(n) if (2..=4).contains(&n) => su_basis(n),
        other => return Err(LabError::UnsupportedModel(format!("algebra {other} (supported: so(3..=6), su(2..=4))"))),
    };
    LieAlgebraData::from_matrix_basis(spec.to_string(), spec, labels, matrices)
}

fn so_basis(n: usize) -> (Vec<String>, Vec<CMatrix>) {
    let mut labels = Vec::new();
    let mut mats = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut m = CMatrix::zeros(n, n);
            m[(j, i)] = Complex64::new(1.0, 0.0);
            m[(i, j)] = Complex64::new(-1.0, 0.0);
            labels.push(format!("e{}{}", i + 1, j + 1));
            mats.push(m);
        }
    }
    (labels, mats)
}

fn su_basis(n: usize) -> (Vec<String>, Vec<CMatrix>) {
    let i_unit = Complex64::new(0.0, 1.0);
    let scale = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    let mut labels = Vec::new();
    let mut mats = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let mut sym = CMatrix::zeros(n, n);
            sym[(j, k)] = Complex64::new(1.0, 0.0);
            sym[(k, j)] = Complex64::new(1.0, 0.0);
            labels.push(format!("s{}{}", j + 1, k + 1));
            mats.push(sym * i_unit * scale);

            let mut anti = CMatrix::zeros(n, n);
            anti[(j, k)] = Complex64::new(0.0, -1.0);
            anti[(k, j)] = Complex64::new(0.0, 1.0);
            labels.push(format!("a{}{}", j + 1, k + 1));
            mats.push(anti * i_unit * scale);
        }
    }
    for l in 1..n {
        let c = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = CMatrix::zeros(n, n);
        for m in 0..l {
            d[(m, m)] = Complex64::new(c, 0.0);
        }
        d[(l, l)] = Complex64::new(-(l as f64) * c, 0.0);
        labels.push(format!("d{l}"));
        mats.push(d * i_unit * scale);
    }
    (labels, mats)
}

fn frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

impl LieAlgebraData {
    /// Builds the algebra data from a Frobenius-orthogonal matrix basis closed
    /// under commutators.
    pub fn from_matrix_basis(
        name: String,
        spec: AlgebraSpec,
        basis_labels: Vec<String>,
        matrix_basis: Vec<CMatrix>,
    ) -> Result<Self> {
        let dim = matrix_basis.len();
        let norms: Vec<f64> = matrix_basis.iter().map(|m| frobenius(m, m)).collect();
        let mut structure = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let comm = &matrix_basis[i] * &matrix_basis[j] - &matrix_basis[j] * &matrix_basis[i];
                let mut recon = CMatrix::zeros(comm.nrows(), comm.ncols());
                for k in 0..dim {
                    let c = frobenius(&matrix_basis[k], &comm) / norms[k];
                    structure[(i * dim + j) * dim + k] = c;
                    recon += &matrix_basis[k] * Complex64::new(c, 0.0);
                }
                if (&recon - &comm).norm() > 1e-12 * (1.0 + comm.norm()) {
                    return Err(LabError::degenerate(
                        "build_algebra",
                        format!("matrix basis of {name} not closed under bracket"),
                    ));
                }
            }
        }
        let mut alg = LieAlgebraData {
            name,
            spec,
            basis_labels,
            dim,
            structure,
            killing: DMatrix::zeros(dim, dim),
            matrix_basis,
        };
        let ads: Vec<DMatrix<f64>> = (0..dim).map(|i| alg.ad_basis(i)).collect();
        alg.killing = DMatrix::from_fn(dim, dim, |i, j| (&ads[i] * &ads[j]).trace());
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn killing(&self) -> &DMatrix<f64> {
        &self.killing
    }

    /// The positive definite inner product `-B`.
    pub fn metric(&self) -> DMatrix<f64> {
        -&self.killing
    }

    pub fn killing_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.killing * y)[(0, 0)]
    }

    /// `sqrt(-B(x, x))`.
    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        (-self.killing_form(x, x)).max(0.0).sqrt()
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        e[i] = 1.0;
        e
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for k in 0..d {
                    out[k] += xy * self.structure[base + k];
                }
            }
        }
        out
    }

    fn ad_basis(&self, i: usize) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |k, j| self.structure[(i * d + j) * d + k])
    }

    /// Matrix of `ad_x` acting on coordinate vectors (column `j` is `[x, e_j]`).
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            if x[i] != 0.0 {
                m += self.ad_basis(i) * x[i];
            }
        }
        m
    }

    pub fn ad_operator(&self, x: &DVector<f64>) -> AdOperator {
        AdOperator { x: x.clone(), matrix: self.ad(x) }
    }

    /// The matrix realization `sum_i x_i M_i`.
    pub fn to_matrix(&self, x: &DVector<f64>) -> CMatrix {
        let n = self.matrix_basis[0].nrows();
        let mut m = CMatrix::zeros(n, n);
        for (i, b) in self.matrix_basis.iter().enumerate() {
            if x[i] != 0.0 {
                m += b * Complex64::new(x[i], 0.0);
            }
        }
        m
    }

    /// Coordinates of a matrix in the realization (orthogonal projection onto
    /// the span of the basis).
    pub fn from_matrix(&self, m: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.matrix_basis.iter().map(|b| frobenius(b, m) / frobenius(b, b)))
    }

    pub fn matrix_size(&self) -> usize {
        self.matrix_basis[0].nrows()
    }

    /// Max-norm of `c_ijk + c_jik`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((self.structure_constant(i, j, k) + self.structure_constant(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// Max-norm of the Jacobiator over all basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let (a, b, c) = (self.basis_vector(i), self.basis_vector(j), self.basis_vector(k));
                    let r = self.bracket(&a, &self.bracket(&b, &c))
                        + self.bracket(&b, &self.bracket(&c, &a))
                        + self.bracket(&c, &self.bracket(&a, &b));
                    worst = worst.max(crate::linalg::max_abs_vec(&r));
                }
            }
        }
        worst
    }

    /// Largest eigenvalue of the Killing matrix (negative for compact algebras).
    pub fn killing_max_eigenvalue(&self) -> f64 {
        let (vals, _) = sorted_symmetric_eigen(&self.killing);
        vals[vals.len() - 1]
    }

    /// Checks every invariant of the algebra data and reports the residuals.
    pub fn validate(&self) -> AlgebraReport {
        AlgebraReport {
            antisymmetry: self.antisymmetry_residual(),
            jacobi: self.jacobi_residual(),
            killing_symmetry: max_abs(&(&self.killing - self.killing.transpose())),
            killing_max_eigenvalue: self.killing_max_eigenvalue(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlgebraReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub killing_symmetry: f64,
    pub killing_max_eigenvalue: f64,
}

impl AlgebraReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.antisymmetry <= tol
            && self.jacobi <= tol
            && self.killing_symmetry <= tol
            && self.killing_max_eigenvalue < 0.0
    }
}

/// `ad_X` together with the element it was built from.
#[derive(Clone, Debug)]
pub struct AdOperator {
    pub x: DVector<f64>,
    pub matrix: DMatrix<f64>,
}

impl AdOperator {
    /// Max-norm of `B(ad_X Y, W) + B(Y, ad_X W)` over basis pairs, i.e. of
    /// `ad^T B + B ad`.
    pub fn invariance_residual(&self, killing: &DMatrix<f64>) -> f64 {
        max_abs(&(self.matrix.transpose() * killing + killing * &self.matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn killing_by_trace(alg: &LieAlgebraData) -> DMatrix<f64> {
        // Independent route: build ad matrices from brackets of basis vectors.
        let d = alg.dim();
        let ads: Vec<DMatrix<f64>> = (0..d)
            .map(|i| {
                let ei = alg.basis_vector(i);
                let cols: Vec<DVector<f64>> = (0..d).map(|j| alg.bracket(&ei, &alg.basis_vector(j))).collect();
                DMatrix::from_columns(&cols)
            })
            .collect();
        DMatrix::from_fn(d, d, |i, j| (&ads[i] * &ads[j]).trace())
    }

    #[test]
    fn so3_cyclic_brackets() {
        let so3 = build_algebra(AlgebraSpec::So(3)).unwrap();
        let e = |i| so3.basis_vector(i);
        assert!(crate::linalg::max_abs_vec(&(so3.bracket(&e(0), &e(1)) - e(2))) < 1e-15);
        assert!(crate::linalg::max_abs_vec(&(so3.bracket(&e(1), &e(2)) - e(0))) < 1e-15);
        assert!(crate::linalg::max_abs_vec(&(so3.bracket(&e(2), &e(0)) - e(1))) < 1e-15);
        assert!(crate::linalg::max_abs_vec(&so3.bracket(&e(0), &e(0))) == 0.0);
    }

    #[test]
    fn killing_forms_match_trace_oracle() {
        let so3 = build_algebra(AlgebraSpec::So(3)).unwrap();
        let expected = DMatrix::identity(3, 3) * -2.0;
        assert!(max_abs(&(killing_by_trace(&so3) - &expected)) < 1e-12);
        assert!(max_abs(&(so3.killing() - &expected)) < 1e-12);

        let su2 = build_algebra(AlgebraSpec::Su(2)).unwrap();
        let expected = DMatrix::identity(3, 3) * -4.0;
        assert!(max_abs(&(killing_by_trace(&su2) - &expected)) < 1e-12);
        assert!(max_abs(&(su2.killing() - &expected)) < 1e-12);
    }

    #[test]
    fn every_supported_algebra_is_valid() {
        for spec in [
            AlgebraSpec::So(3),
            AlgebraSpec::So(4),
            AlgebraSpec::So(5),
            AlgebraSpec::So(6),
            AlgebraSpec::Su(2),
            AlgebraSpec::Su(3),
            AlgebraSpec::Su(4),
        ] {
            let alg = build_algebra(spec).unwrap();
            let report = alg.validate();
            assert!(report.passes(1e-12), "{spec}: {report:?}");
            assert!(max_abs(&(killing_by_trace(&alg) - alg.killing())) < 1e-12);
            let expected_dim = match spec {
                AlgebraSpec::So(n) => n * (n - 1) / 2,
                AlgebraSpec::Su(n) => n * n - 1,
            };
            assert_eq!(alg.dim(), expected_dim);
        }
    }

    #[test]
    fn killing_is_scalar_in_documented_bases() {
        for n in 3..=6 {
            let alg = build_algebra(AlgebraSpec::So(n)).unwrap();
            let c = -2.0 * (n as f64 - 2.0);
            assert!(max_abs(&(alg.killing() - DMatrix::identity(alg.dim(), alg.dim()) * c)) < 1e-12);
        }
        for n in 2..=4 {
            let alg = build_algebra(AlgebraSpec::Su(n)).unwrap();
            let c = -2.0 * n as f64;
            assert!(max_abs(&(alg.killing() - DMatrix::identity(alg.dim(), alg.dim()) * c)) < 1e-12);
        }
    }

    #[test]
    fn unsupported_sizes_are_rejected() {
        assert!(matches!(build_algebra(AlgebraSpec::So(7)), Err(LabError::UnsupportedModel(_))));
        assert!(matches!(build_algebra(AlgebraSpec::Su(1)), Err(LabError::UnsupportedModel(_))));
        assert!("sp(2)".parse::<AlgebraSpec>().is_err());
        assert_eq!("su(3)".parse::<AlgebraSpec>().unwrap(), AlgebraSpec::Su(3));
    }

    #[test]
    fn ad_is_killing_skew() {
        let alg = build_algebra(AlgebraSpec::Su(3)).unwrap();
        let x = DVector::from_fn(alg.dim(), |i, _| (i as f64 * 0.37).sin());
        assert!(alg.ad_operator(&x).invariance_residual(alg.killing()) < 1e-12);
    }

    #[test]
    fn matrix_round_trip() {
        let alg = build_algebra(AlgebraSpec::So(4)).unwrap();
        let x = DVector::from_fn(alg.dim(), |i, _| 0.1 * i as f64 - 0.2);
        let back = alg.from_matrix(&alg.to_matrix(&x));
        assert!(crate::linalg::max_abs_vec(&(back - x)) < 1e-15);
    }
}
