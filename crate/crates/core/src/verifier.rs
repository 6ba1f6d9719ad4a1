//! Finite-difference `dd^c` of exhaustions and the certificates built on it.
//!
//! On functions `d^c u = -du o J`, so `beta(X) = -du(JX)` and
//! `dd^c u(d_i, d_j) = d_i beta_j - d_j beta_i` (coordinate fields commute).
//! The Hermitian form is `H(X, Y) = dd^c u(X, JY)`; with this sign
//! `H = 4 I` for `u = |z|^2` on `C^n`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chart::{gradient, jacobian};
use crate::error::{LabError, Result};
use crate::foliation::solve_z;
use crate::linalg::{max_abs, null_space, orthonormalize, sorted_symmetric_eigen, subspace_distance};
use crate::model::{exhaustion, j_generator, ComplexModel, Exhaustion};

type CustomFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Profile {
    Composite(Arc<dyn Exhaustion>),
    Custom { name: String, f: CustomFn },
}

/// A function `u` on the chart of a model, usually `f o tau`.
#[derive(Clone)]
pub struct ExhaustionField<'a> {
    pub model: &'a dyn ComplexModel,
    profile: Profile,
}

impl<'a> ExhaustionField<'a> {
    pub fn new(model: &'a dyn ComplexModel, kind: &str) -> Result<Self> {
        Ok(ExhaustionField { model, profile: Profile::Composite(exhaustion(kind)?) })
    }

    pub fn tau(model: &'a dyn ComplexModel) -> Self {
        Self::new(model, "tau").expect("tau is always registered")
    }

    pub fn custom(
        model: &'a dyn ComplexModel,
        name: &str,
        f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ExhaustionField { model, profile: Profile::Custom { name: name.to_string(), f: Arc::new(f) } }
    }

    pub fn name(&self) -> &str {
        match &self.profile {
            Profile::Composite(e) => e.name(),
            Profile::Custom { name, .. } => name,
        }
    }

    pub fn needs_positive_tau(&self) -> bool {
        match &self.profile {
            Profile::Composite(e) => e.needs_positive_tau(),
            Profile::Custom { .. } => false,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        match &self.profile {
            Profile::Composite(e) => {
                let tau = self.model.tau(x)?;
                if e.needs_positive_tau() && tau <= 0.0 {
                    return Err(LabError::NearZeroLocus { tau, delta: 0.0 });
                }
                Ok(e.apply(tau))
            }
            Profile::Custom { f, .. } => Ok(f(x)),
        }
    }
}

/// `dd^c u` at a point with its Hermitian symmetrization.
#[derive(Clone, Debug)]
pub struct HermitianSample {
    pub point: DVector<f64>,
    /// Antisymmetric matrix of the 2-form in the chart basis.
    pub ddc: DMatrix<f64>,
    /// Symmetric part of `ddc * J`.
    pub h: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub j: DMatrix<f64>,
    /// `max |ddc(h) - ddc(h/2)|` when extrapolated, otherwise 0.
    pub fd_change: f64,
}

impl HermitianSample {
    pub fn from_form(point: DVector<f64>, ddc: DMatrix<f64>, j: DMatrix<f64>, fd_change: f64) -> Self {
        let hj = &ddc * &j;
        let h = (&hj + hj.transpose()) * 0.5;
        let (eigenvalues, eigenvectors) = sorted_symmetric_eigen(&h);
        HermitianSample { point, ddc, h, eigenvalues, eigenvectors, j, fd_change }
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        max_abs(&(&self.ddc + self.ddc.transpose()))
    }

    /// `|J^T H J - H| / |H|` in max norm.
    pub fn j_invariance_residual(&self) -> f64 {
        let scale = max_abs(&self.h).max(f64::MIN_POSITIVE);
        max_abs(&(self.j.transpose() * &self.h * &self.j - &self.h)) / scale
    }

    /// `trace H / 2n`.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.h.trace() / self.h.nrows() as f64
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn ddc_matrix(field: &ExhaustionField<'_>, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let model = field.model;
    let u = |y: &DVector<f64>| field.eval(y);
    let beta = |y: &DVector<f64>| -> Result<DVector<f64>> {
        let du = gradient(&u, y, h)?;
        Ok(-(model.j_matrix(y)?.transpose() * du))
    };
    let dbeta = jacobian(&beta, x, h)?;
    Ok(dbeta.transpose() - dbeta)
}

fn check_stencil(field: &ExhaustionField<'_>, x: &DVector<f64>, h: f64) -> Result<()> {
    field.model.check_domain(x, 2.0 * h)?;
    if field.needs_positive_tau() {
        let r = field.model.tau(x)?.sqrt();
        if r < 4.0 * h {
            return Err(LabError::NearZeroLocus { tau: r * r, delta: 4.0 * h });
        }
    }
    Ok(())
}

/// Single-step central-difference `dd^c u`.
pub fn ddc_form(field: &ExhaustionField<'_>, x: &DVector<f64>, h: f64) -> Result<HermitianSample> {
    check_stencil(field, x, h)?;
    let ddc = ddc_matrix(field, x, h)?;
    Ok(HermitianSample::from_form(x.clone(), ddc, field.model.j_matrix(x)?, 0.0))
}

/// `dd^c u` from steps `h` and `h/2` combined by Richardson extrapolation.
pub fn ddc_form_richardson(field: &ExhaustionField<'_>, x: &DVector<f64>, h: f64) -> Result<HermitianSample> {
    check_stencil(field, x, h)?;
    let coarse = ddc_matrix(field, x, h)?;
    let fine = ddc_matrix(field, x, 0.5 * h)?;
    let change = max_abs(&(&coarse - &fine));
    let ddc = (fine * 4.0 - coarse) / 3.0;
    Ok(HermitianSample::from_form(x.clone(), ddc, field.model.j_matrix(x)?, change))
}

/// Thresholds for the eigenvalue certificates, relative to `trace H / 2n`
/// where marked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaTolerances {
    pub null_rel: f64,
    pub pos_rel: f64,
    pub det_ratio: f64,
    /// Minimum fibre distance `sqrt(tau)` of sample points.
    pub delta: f64,
    /// Relative bound on `H_tau(Z-plane, CR distribution)`.
    pub cross_block: f64,
}

impl Default for MaTolerances {
    fn default() -> Self {
        MaTolerances { null_rel: 1e-4, pos_rel: 1e-2, det_ratio: 1e-6, delta: 0.05, cross_block: 1e-5 }
    }
}

fn check_delta(model: &dyn ComplexModel, x: &DVector<f64>, delta: f64) -> Result<()> {
    let tau = model.tau(x)?;
    if tau.sqrt() <= delta {
        return Err(LabError::NearZeroLocus { tau, delta });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PshSample {
    pub index: usize,
    pub tau: f64,
    pub min_eigenvalue: f64,
    pub eigenvalues: DVector<f64>,
    /// `max |H_tau(A, B)| / max |H_tau|`, `A` in span{Zhat, J Zhat}, `B` in the CR distribution.
    pub cross_block: f64,
    /// Smallest eigenvalue of `H_tau` on the CR distribution.
    pub cr_min_tau: f64,
    /// Smallest eigenvalue of `H_u` on the CR distribution, `u` the model's profile.
    pub cr_min_profile: f64,
}

#[derive(Clone, Debug)]
pub struct PshReport {
    pub samples: Vec<PshSample>,
    pub margin: f64,
    pub max_cross_block: f64,
    pub pass: bool,
}

impl PshReport {
    pub fn offenders(&self) -> Vec<&PshSample> {
        self.samples.iter().filter(|s| s.min_eigenvalue <= 0.0).collect()
    }
}

/// Orthonormal basis of `{X : dtau(X) = 0, dtau(JX) = 0}`.
pub fn cr_distribution(model: &dyn ComplexModel, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let tau = |y: &DVector<f64>| model.tau(y);
    let g = gradient(&tau, x, h)?;
    let j = model.j_matrix(x)?;
    let rows = DMatrix::from_rows(&[g.transpose(), g.transpose() * j]);
    Ok(null_space(&rows, 1e-10))
}

/// Euclidean-orthonormal basis of span{Zhat, J Zhat}.
pub fn generator_plane(model: &dyn ComplexModel, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let z = model.generator(x)?;
    let jz = j_generator(model, x)?;
    let m = DMatrix::from_columns(&[z, jz]);
    orthonormalize(&m, &DMatrix::identity(m.nrows(), m.nrows()))
}

pub fn psh_certificate(
    model: &dyn ComplexModel,
    samples: &[DVector<f64>],
    h: f64,
    tol: &MaTolerances,
) -> Result<PshReport> {
    let field = ExhaustionField::tau(model);
    let profile = ExhaustionField::new(model, model.ma_kind())?;
    let results: Vec<Result<PshSample>> = samples
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            check_delta(model, x, tol.delta)?;
            let s = ddc_form_richardson(&field, x, h)?;
            let hu = ddc_form_richardson(&profile, x, h)?;
            let cr = cr_distribution(model, x, h)?;
            let plane = generator_plane(model, x)?;
            let scale = max_abs(&s.h);
            let cross_block = max_abs(&(plane.transpose() * &s.h * &cr)) / scale;
            let restricted = |m: &DMatrix<f64>| sorted_symmetric_eigen(&(cr.transpose() * m * &cr)).0[0];
            Ok(PshSample {
                index,
                tau: model.tau(x)?,
                min_eigenvalue: s.min_eigenvalue(),
                eigenvalues: s.eigenvalues.clone(),
                cross_block,
                cr_min_tau: restricted(&s.h),
                cr_min_profile: restricted(&hu.h),
            })
        })
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let margin = samples.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let max_cross_block = samples.iter().map(|s| s.cross_block).fold(0.0, f64::max);
    let pass = samples.iter().all(|s| s.min_eigenvalue > 0.0 && s.cr_min_tau > 0.0 && s.cr_min_profile > 0.0)
        && max_cross_block < tol.cross_block;
    Ok(PshReport { samples, margin, max_cross_block, pass })
}

#[derive(Clone, Debug)]
pub struct MaSample {
    pub index: usize,
    pub eigenvalues: DVector<f64>,
    pub mean: f64,
    pub null_count: usize,
    pub positive_count: usize,
    pub det_ratio: f64,
    /// `min eigenvalue / mean`.
    pub min_relative: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct MaReport {
    pub kind: String,
    /// The requested profile is the one the model's theory prescribes.
    pub kind_matches_model: bool,
    pub samples: Vec<MaSample>,
    pub max_det_ratio: f64,
    pub pass: bool,
}

impl MaReport {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.pass).count()
    }
}

/// Classifies the spectrum of `H_u` at one point.
pub fn ma_profile(sample: &HermitianSample, index: usize, tol: &MaTolerances) -> MaSample {
    let ev = &sample.eigenvalues;
    let dim = ev.len();
    let mean = sample.mean_eigenvalue();
    let null_count = ev.iter().filter(|l| l.abs() < tol.null_rel * mean).count();
    let positive_count = ev.iter().filter(|&&l| l > tol.pos_rel * mean).count();
    let det: f64 = ev.iter().product();
    let det_ratio = det.abs() / mean.powi(dim as i32);
    let min_relative = ev[0] / mean;
    let pass = mean > 0.0
        && null_count == 2
        && positive_count == dim - 2
        && det_ratio < tol.det_ratio
        && min_relative >= -tol.null_rel;
    MaSample { index, eigenvalues: ev.clone(), mean, null_count, positive_count, det_ratio, min_relative, pass }
}

pub fn ma_certificate(
    model: &dyn ComplexModel,
    kind: &str,
    samples: &[DVector<f64>],
    h: f64,
    tol: &MaTolerances,
) -> Result<MaReport> {
    if kind != "sqrt_tau" && kind != "log_tau" {
        return Err(LabError::Usage(format!("MA certificate needs kind sqrt_tau or log_tau, got `{kind}`")));
    }
    let field = ExhaustionField::new(model, kind)?;
    let results: Vec<Result<MaSample>> = samples
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            check_delta(model, x, tol.delta)?;
            Ok(ma_profile(&ddc_form_richardson(&field, x, h)?, index, tol))
        })
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_det_ratio = samples.iter().map(|s| s.det_ratio).fold(0.0, f64::max);
    let pass = !samples.is_empty() && samples.iter().all(|s| s.pass);
    Ok(MaReport { kind: kind.to_string(), kind_matches_model: kind == model.ma_kind(), samples, max_det_ratio, pass })
}

/// Angle (radians) between the two-dimensional near-null eigenspace of `H_u`
/// (`u` the model's profile) and span{Z, JZ} of the foliation frame.
pub fn kernel_alignment(model: &dyn ComplexModel, x: &DVector<f64>, h: f64) -> Result<f64> {
    let field = ExhaustionField::new(model, model.ma_kind())?;
    let s = ddc_form_richardson(&field, x, h)?;
    let null = s.eigenvectors.columns(0, 2).into_owned();
    let frame = solve_z(model, x, h)?;
    let plane = DMatrix::from_columns(&[frame.z.clone(), frame.jz.clone()]);
    let id = DMatrix::identity(x.len(), x.len());
    let plane = orthonormalize(&plane, &id)?;
    Ok(subspace_distance(&null, &plane, &id).min(1.0).asin())
}

/// Delimited spectra: one row per sample with chart coordinates then eigenvalues.
pub fn spectra_rows(points: &[DVector<f64>], spectra: &[DVector<f64>]) -> Vec<String> {
    points
        .iter()
        .zip(spectra)
        .enumerate()
        .map(|(i, (p, ev))| {
            let mut fields = vec![i.to_string()];
            fields.extend(p.iter().map(|c| format!("{c:.17e}")));
            fields.extend(ev.iter().map(|c| format!("{c:.17e}")));
            fields.join("\t")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_model;
    use crate::sampling::seeded_rng;

    #[test]
    fn constant_function_has_zero_form() {
        let m = build_model("sphere(2)").unwrap();
        let field = ExhaustionField::custom(m.as_ref(), "one", |_| 1.0);
        let x = DVector::from_vec(vec![0.1, 0.2, 0.5, -0.3]);
        let s = ddc_form(&field, &x, 1e-3).unwrap();
        assert_eq!(max_abs(&s.ddc), 0.0);
    }

    #[test]
    fn euclidean_tau_is_four_times_identity() {
        let m = build_model("euclidean(2)").unwrap();
        let x = DVector::from_vec(vec![0.3, -0.4, 0.1, 0.7]);
        let s = ddc_form(&ExhaustionField::tau(m.as_ref()), &x, 1e-3).unwrap();
        assert!(max_abs(&(s.h - DMatrix::identity(4, 4) * 4.0)) < 1e-6);
    }

    #[test]
    fn stenzel_form_is_j_invariant() {
        let m = build_model("sphere(2)").unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..3 {
            let x = m.sample(&mut rng, 0.2, 1.0);
            let s = ddc_form_richardson(&ExhaustionField::tau(m.as_ref()), &x, 1e-3).unwrap();
            assert!(s.antisymmetry_residual() < 1e-12);
            assert!(s.j_invariance_residual() < 1e-6, "{}", s.j_invariance_residual());
        }
    }

    #[test]
    fn kind_is_validated() {
        let m = build_model("sphere(2)").unwrap();
        let x = vec![m.sample(&mut seeded_rng(1), 0.2, 1.0)];
        assert!(matches!(
            ma_certificate(m.as_ref(), "tau", &x, 1e-3, &MaTolerances::default()),
            Err(LabError::Usage(_))
        ));
    }

    #[test]
    fn samples_near_zero_locus_are_refused() {
        let m = build_model("sphere(2)").unwrap();
        let x = DVector::from_vec(vec![0.1, 0.0, 0.01, 0.0]);
        let err = ma_certificate(m.as_ref(), "sqrt_tau", &[x], 1e-3, &MaTolerances::default());
        assert!(matches!(err, Err(LabError::NearZeroLocus { .. })));
    }

    #[test]
    fn sphere_sqrt_profile_and_log_control() {
        let m = build_model("sphere(2)").unwrap();
        let mut rng = seeded_rng(12);
        let pts: Vec<DVector<f64>> = (0..4).map(|_| m.sample(&mut rng, 0.2, 1.0)).collect();
        let tol = MaTolerances::default();
        let good = ma_certificate(m.as_ref(), "sqrt_tau", &pts, 1e-3, &tol).unwrap();
        assert!(good.pass, "{:?}", good.samples);
        assert!(good.kind_matches_model);
        let bad = ma_certificate(m.as_ref(), "log_tau", &pts, 1e-3, &tol).unwrap();
        assert!(!bad.pass);
        assert!(!bad.kind_matches_model);
    }

    #[test]
    fn psh_on_sphere_including_near_zero_section() {
        let m = build_model("sphere(2)").unwrap();
        let mut rng = seeded_rng(13);
        let mut pts: Vec<DVector<f64>> = (0..4).map(|_| m.sample(&mut rng, 0.2, 1.0)).collect();
        pts.push(DVector::from_vec(vec![0.2, -0.1, 0.0, 0.06]));
        let report = psh_certificate(m.as_ref(), &pts, 1e-3, &MaTolerances::default()).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.offenders().is_empty());
    }

    #[test]
    fn tau_is_positive_across_zero_section() {
        // tau itself is smooth at v = 0, so its form can be taken there.
        let m = build_model("sphere(2)").unwrap();
        let x = DVector::from_vec(vec![0.1, 0.2, 0.01, 0.0]);
        let s = ddc_form_richardson(&ExhaustionField::tau(m.as_ref()), &x, 1e-3).unwrap();
        assert!(s.min_eigenvalue() > 0.0);
    }

    #[test]
    fn alignment_on_sphere() {
        let m = build_model("sphere(2)").unwrap();
        let x = m.sample(&mut seeded_rng(14), 0.3, 1.0);
        assert!(kernel_alignment(m.as_ref(), &x, 1e-3).unwrap() < 1e-3);
    }
}
