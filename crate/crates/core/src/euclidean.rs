//! The flat model `C^n` with `tau = |z|^2`, closed forms for calibration.
//!
//! Chart coordinates are `(Re z, Im z)`; `J` is the constant block matrix
//! `[[0, -I], [I, 0]]`. For constant `J` the Hermitian form of `dd^c u` is
//! `Hess u + J^T (Hess u) J`.

use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};
use crate::linalg::standard_complex_structure;
use crate::model::ComplexModel;
use crate::sampling::shell_vector;
use crate::verifier::HermitianSample;

/// `H` of `dd^c |z|^2` is this multiple of the identity.
pub const DDC_CONVENTION_CONSTANT: f64 = 4.0;

/// Slope of `log tau(r dir)` against `log r`.
pub const LOG_SINGULARITY_SLOPE: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct EuclideanModel {
    n: usize,
    j: DMatrix<f64>,
}

impl EuclideanModel {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(LabError::UnsupportedModel(format!("euclidean({n}) (supported: 2..=4)")));
        }
        Ok(EuclideanModel { n, j: standard_complex_structure(n) })
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }
}

impl ComplexModel for EuclideanModel {
    fn name(&self) -> String {
        format!("euclidean({})", self.n)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn j_matrix(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.j.clone())
    }

    fn tau(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(x.norm_squared())
    }

    fn ma_kind(&self) -> &'static str {
        "log_tau"
    }

    /// `-J z`: the rotation `z -> e^{-it} z`, so `J Zhat = z` is the Euler field.
    fn generator(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(-(&self.j * x))
    }

    fn check_domain(&self, _x: &DVector<f64>, _margin: f64) -> Result<()> {
        Ok(())
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, r_min: f64, r_max: f64) -> DVector<f64> {
        shell_vector(rng, 2 * self.n, r_min, r_max)
    }

    fn leaf_seed(&self, rng: &mut dyn rand::RngCore, r_min: f64, _t_max: f64) -> DVector<f64> {
        shell_vector(rng, 2 * self.n, r_min, 1.0)
    }

    fn has_constant_structure(&self) -> bool {
        true
    }

    fn as_euclidean(&self) -> Option<&EuclideanModel> {
        Some(self)
    }
}

/// Exact `dd^c` of `tau` or `log tau` at `z` under the convention of
/// [`crate::verifier`].
pub fn analytic_ddc(kind: &str, z: &DVector<f64>) -> Result<HermitianSample> {
    let dim = z.len();
    if !dim.is_multiple_of(2) {
        return Err(LabError::Usage("chart vector must have even length".into()));
    }
    let j = standard_complex_structure(dim / 2);
    let id = DMatrix::<f64>::identity(dim, dim);
    let h = match kind {
        "tau" => id * DDC_CONVENTION_CONSTANT,
        "log_tau" => {
            let r2 = z.norm_squared();
            if r2 == 0.0 {
                return Err(LabError::NearZeroLocus { tau: 0.0, delta: 0.0 });
            }
            let jz = &j * z;
            id * (4.0 / r2) - (z * z.transpose() + &jz * jz.transpose()) * (4.0 / (r2 * r2))
        }
        other => return Err(LabError::Usage(format!("no closed form for kind `{other}`"))),
    };
    let ddc = -(&h * &j);
    Ok(HermitianSample::from_form(z.clone(), ddc, j, 0.0))
}

#[derive(Clone, Debug)]
pub struct LogProbeReport {
    pub slope: f64,
    pub intercept: f64,
    /// `max |u - slope log r - intercept|` over the radii.
    pub max_remainder: f64,
    pub slope_ok: bool,
}

/// Least-squares fit of `u(r dir)` against `log r`.
pub fn log_singularity_probe(
    u: impl Fn(&DVector<f64>) -> Result<f64>,
    dir: &DVector<f64>,
    radii: &[f64],
) -> Result<LogProbeReport> {
    if radii.len() < 2 || radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(LabError::Usage("radii must be at least two values in (0, 1]".into()));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys = radii.iter().map(|&r| u(&(dir * r))).collect::<Result<Vec<f64>>>()?;
    let (slope, intercept) = linear_fit(&xs, &ys);
    let max_remainder = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).abs()).fold(0.0, f64::max);
    let s = LOG_SINGULARITY_SLOPE;
    Ok(LogProbeReport { slope, intercept, max_remainder, slope_ok: (0.99 * s..=1.01 * s).contains(&slope) })
}

/// Ordinary least squares `y ~ slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}
