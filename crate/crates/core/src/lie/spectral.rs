//! Analytic functions of `ad_X` by spectral calculus.
//!
//! For a compact algebra `ad_X` is skew for the inner product `-B`, so in a
//! `-B`-orthonormal frame it is a real antisymmetric matrix `M` with spectrum
//! `{±i mu_k}`. Every function used here is split into even and odd parts,
//! `f(M) = g(M^2) + M h(M^2)`, and `-M^2` is symmetric positive semidefinite,
//! so a single real symmetric eigendecomposition `-M^2 = Q diag(mu^2) Q^T`
//! evaluates both parts. Evenness of the even functions is exact by
//! construction.

use nalgebra::{DMatrix, DVector};

use super::LieAlgebraData;
use crate::error::{LabError, Result};
use crate::linalg::sorted_symmetric_eigen;

/// Even analytic functions of `ad_X` needed by the adapted complex structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdFunction {
    /// `T_X = (sin ad_X / ad_X)^{-1} cos ad_X`; `mu coth mu` on `±i mu`.
    Stenzel,
    /// `T_X^{-1}`; `tanh(mu) / mu`.
    StenzelInverse,
    /// `sin ad_X / ad_X`; `sinh(mu) / mu`.
    Sinc,
    /// `cos ad_X`; `cosh(mu)`.
    Cos,
}

impl AdFunction {
    fn on_modulus(self, mu: f64) -> f64 {
        let small = mu < 1e-4;
        let m2 = mu * mu;
        match self {
            AdFunction::Stenzel => {
                if small {
                    1.0 + m2 / 3.0 - m2 * m2 / 45.0
                } else {
                    mu / mu.tanh()
                }
            }
            AdFunction::StenzelInverse => {
                if small {
                    1.0 - m2 / 3.0 + 2.0 * m2 * m2 / 15.0
                } else {
                    mu.tanh() / mu
                }
            }
            AdFunction::Sinc => {
                if small {
                    1.0 + m2 / 6.0 + m2 * m2 / 120.0
                } else {
                    mu.sinh() / mu
                }
            }
            AdFunction::Cos => mu.cosh(),
        }
    }
}

/// Spectral data of `ad_X` in a `-B`-orthonormal frame.
#[derive(Clone, Debug)]
pub struct SpectralCalculus {
    /// Coordinates -> orthonormal frame: `x_frame = to_frame * x`.
    to_frame: DMatrix<f64>,
    from_frame: DMatrix<f64>,
    skew: DMatrix<f64>,
    q: DMatrix<f64>,
    mu: DVector<f64>,
}

impl SpectralCalculus {
    pub fn new(alg: &LieAlgebraData, x: &DVector<f64>) -> Result<Self> {
        let chol = alg
            .metric()
            .cholesky()
            .ok_or_else(|| LabError::Computation(format!("{}: -B is not positive definite", alg.name)))?;
        let l = chol.l();
        let to_frame = l.transpose();
        let from_frame = to_frame
            .clone()
            .try_inverse()
            .ok_or_else(|| LabError::Computation("singular Cholesky factor of -B".into()))?;
        let skew = &to_frame * alg.ad(x) * &from_frame;
        let asym = crate::linalg::max_abs(&(&skew + skew.transpose()));
        let scale = crate::linalg::max_abs(&skew).max(1.0);
        if asym > 1e-10 * scale {
            return Err(LabError::Computation(format!(
                "ad_X is not -B-skew (residual {asym:.3e}); eigen-solver precondition fails"
            )));
        }
        let neg_sq = -(&skew * &skew);
        let (vals, q) = sorted_symmetric_eigen(&neg_sq);
        let mu = vals.map(|v| v.max(0.0).sqrt());
        Ok(SpectralCalculus { to_frame, from_frame, skew, q, mu })
    }

    fn conjugate(&self, diag: DVector<f64>) -> DMatrix<f64> {
        &self.q * DMatrix::from_diagonal(&diag) * self.q.transpose()
    }

    /// `g(ad_X)` for an even function given on moduli `mu >= 0`.
    pub fn even(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let inner = self.conjugate(self.mu.map(g));
        &self.from_frame * inner * &self.to_frame
    }

    /// `ad_X h(ad_X^2)`, with `h` given as a function of `mu`.
    pub fn odd(&self, h: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let inner = &self.skew * self.conjugate(self.mu.map(h));
        &self.from_frame * inner * &self.to_frame
    }

    pub fn apply(&self, f: AdFunction) -> DMatrix<f64> {
        self.even(|mu| f.on_modulus(mu))
    }

    /// Moduli `mu_k` of the eigenvalues `±i mu_k` of `ad_X`.
    pub fn moduli(&self) -> &DVector<f64> {
        &self.mu
    }
}

/// Matrix of the named even function of `ad_X`.
pub fn analytic_ad(alg: &LieAlgebraData, x: &DVector<f64>, f: AdFunction) -> Result<DMatrix<f64>> {
    Ok(SpectralCalculus::new(alg, x)?.apply(f))
}

/// Left logarithmic derivative of `exp` at `a`: `(1 - e^{-ad_a}) / ad_a`, so that
/// `exp(a)^{-1} d/ds exp(a + s y)|_0 = left_log_derivative(a) y`.
pub fn left_log_derivative(alg: &LieAlgebraData, a: &DVector<f64>) -> Result<DMatrix<f64>> {
    let sc = SpectralCalculus::new(alg, a)?;
    // Even part sinh(z)/z, odd part (1 - cosh z)/z, evaluated at z = ±i mu.
    let even = sc.even(|mu| if mu < 1e-4 { 1.0 - mu * mu / 6.0 } else { mu.sin() / mu });
    let odd = sc.odd(|mu| if mu < 1e-4 { -0.5 + mu * mu / 24.0 } else { -(1.0 - mu.cos()) / (mu * mu) });
    Ok(even + odd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{build_algebra, AlgebraSpec};
    use crate::linalg::{expm, max_abs};
    use num_complex::Complex64;

    fn power_series(ad: &DMatrix<f64>, coeff: impl Fn(usize) -> f64, terms: usize) -> DMatrix<f64> {
        let n = ad.nrows();
        let mut out = DMatrix::zeros(n, n);
        let mut pow = DMatrix::identity(n, n);
        for k in 0..terms {
            out += &pow * coeff(k);
            pow = &pow * ad;
        }
        out
    }

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    #[test]
    fn zero_gives_identity() {
        let alg = build_algebra(AlgebraSpec::So(4)).unwrap();
        let x = DVector::zeros(alg.dim());
        for f in [AdFunction::Stenzel, AdFunction::StenzelInverse, AdFunction::Sinc, AdFunction::Cos] {
            let m = analytic_ad(&alg, &x, f).unwrap();
            assert!(max_abs(&(m - DMatrix::identity(alg.dim(), alg.dim()))) < 1e-15);
        }
    }

    #[test]
    fn sinc_and_cos_match_power_series() {
        let alg = build_algebra(AlgebraSpec::So(3)).unwrap();
        let x = DVector::from_vec(vec![0.4, -0.7, 0.3]);
        let ad = alg.ad(&x);
        // sin(z)/z = sum (-1)^k z^{2k} / (2k+1)!, cos z = sum (-1)^k z^{2k} / (2k)!
        let sinc =
            power_series(&ad, |k| if k % 2 == 1 { 0.0 } else { (-1f64).powi((k / 2) as i32) / factorial(k + 1) }, 30);
        let cos = power_series(&ad, |k| if k % 2 == 1 { 0.0 } else { (-1f64).powi((k / 2) as i32) / factorial(k) }, 30);
        assert!(max_abs(&(analytic_ad(&alg, &x, AdFunction::Sinc).unwrap() - &sinc)) < 1e-12);
        assert!(max_abs(&(analytic_ad(&alg, &x, AdFunction::Cos).unwrap() - &cos)) < 1e-12);
        let t = sinc.clone().try_inverse().unwrap() * &cos;
        assert!(max_abs(&(analytic_ad(&alg, &x, AdFunction::Stenzel).unwrap() - t)) < 1e-12);
    }

    #[test]
    fn stenzel_and_inverse_compose_to_identity() {
        let alg = build_algebra(AlgebraSpec::Su(3)).unwrap();
        let x = DVector::from_fn(alg.dim(), |i, _| 0.3 * ((i * 7 + 1) as f64).sin());
        let t = analytic_ad(&alg, &x, AdFunction::Stenzel).unwrap();
        let ti = analytic_ad(&alg, &x, AdFunction::StenzelInverse).unwrap();
        assert!(max_abs(&(&t * &ti - DMatrix::identity(alg.dim(), alg.dim()))) < 1e-10);
    }

    #[test]
    fn stenzel_is_even() {
        let alg = build_algebra(AlgebraSpec::So(3)).unwrap();
        let x = DVector::from_vec(vec![0.9, 0.2, -1.1]);
        let plus = analytic_ad(&alg, &x, AdFunction::Stenzel).unwrap();
        let minus = analytic_ad(&alg, &(-&x), AdFunction::Stenzel).unwrap();
        assert!(max_abs(&(plus - minus)) < 1e-13);
    }

    #[test]
    fn functions_commute_with_ad() {
        let alg = build_algebra(AlgebraSpec::So(5)).unwrap();
        let x = DVector::from_fn(alg.dim(), |i, _| 0.2 * (i as f64 - 4.0));
        let ad = alg.ad(&x);
        for f in [AdFunction::Stenzel, AdFunction::StenzelInverse, AdFunction::Sinc, AdFunction::Cos] {
            let m = analytic_ad(&alg, &x, f).unwrap();
            assert!(max_abs(&(&m * &ad - &ad * &m)) < 1e-10, "{f:?}");
        }
    }

    #[test]
    fn left_log_derivative_matches_group_difference_quotient() {
        let alg = build_algebra(AlgebraSpec::So(4)).unwrap();
        let a = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1, 0.0, -0.4]);
        let d = left_log_derivative(&alg, &a).unwrap();
        let h = 1e-5;
        let ga_inv = expm(&alg.to_matrix(&(-&a)));
        for i in 0..alg.dim() {
            let e = alg.basis_vector(i);
            let plus = expm(&alg.to_matrix(&(&a + &e * h)));
            let minus = expm(&alg.to_matrix(&(&a - &e * h)));
            let deriv = (plus - minus) * Complex64::new(0.5 / h, 0.0);
            let fd = alg.from_matrix(&(&ga_inv * deriv));
            let exact = d.column(i).into_owned();
            assert!(crate::linalg::max_abs_vec(&(fd - exact)) < 1e-8);
        }
    }
}
