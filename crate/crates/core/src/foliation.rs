//! The vector field `Z` defined by `dd^c tau(JZ, JX) = X(tau)`, its flows and
//! the leaf certificates.
//!
//! Two normalizations appear. `solve_z` returns `Z` exactly as defined by the
//! equation above; it is what the kernel and orthogonality checks use. The
//! flows use the model's generator `Zhat` (see [`crate::model`]), which spans
//! the same line and whose flows are group actions: on Morimoto-Nagano models
//! `Z = sqrt(tau) Zhat`, on `C^n` `Zhat = 2 Z`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chart::{gradient, lie_bracket};
use crate::error::{LabError, Result};
use crate::euclidean::linear_fit;
use crate::linalg::{column_conditioning, max_abs, null_space, orthonormalize};
use crate::model::{exhaustion, j_generator, ComplexModel};
use crate::verifier::{ddc_form_richardson, ExhaustionField};

#[derive(Clone, Debug)]
pub struct FoliationFrame {
    pub point: DVector<f64>,
    pub z: DVector<f64>,
    pub jz: DVector<f64>,
    /// `2n - 2` columns spanning the `dd^c tau`-orthocomplement of span{Z, JZ}.
    pub h_basis: DMatrix<f64>,
    /// `|A Z - grad tau| / |grad tau|` for the system matrix `A`.
    pub residual: f64,
    /// Deviation of `Z` when the system is solved in permuted coordinates.
    pub permuted_deviation: f64,
    /// `max |H(h_basis, {Z, JZ})|`, relative to `max |H|`.
    pub orthogonality: f64,
    pub conditioning: f64,
}

pub fn solve_z(model: &dyn ComplexModel, x: &DVector<f64>, h: f64) -> Result<FoliationFrame> {
    let dim = x.len();
    let field = ExhaustionField::tau(model);
    let sample = ddc_form_richardson(&field, x, h)?;
    let j = &sample.j;
    let a = -(j.transpose() * &sample.ddc * j);
    let grad = gradient(&|y: &DVector<f64>| model.tau(y), x, h)?;
    let conditioning = column_conditioning(&a);
    if conditioning < 1e-12 {
        return Err(LabError::degenerate(
            "solve_z",
            format!("singular system, sigma_min/sigma_max = {conditioning:.3e}"),
        ));
    }
    let z = a.clone().lu().solve(&grad).ok_or_else(|| LabError::degenerate("solve_z", "LU solve failed"))?;
    let scale = grad.norm().max(f64::MIN_POSITIVE);
    let residual = (&a * &z - &grad).norm() / scale;

    // Same system with coordinates reversed.
    let perm = DMatrix::from_fn(dim, dim, |r, c| if r + c == dim - 1 { 1.0 } else { 0.0 });
    let zp = (&perm * &a * &perm)
        .lu()
        .solve(&(&perm * &grad))
        .ok_or_else(|| LabError::degenerate("solve_z", "permuted LU solve failed"))?;
    let permuted_deviation = (&perm * zp - &z).norm() / z.norm().max(f64::MIN_POSITIVE);

    let jz = j * &z;
    let plane = DMatrix::from_columns(&[z.clone(), jz.clone()]);
    let h_basis = null_space(&(plane.transpose() * &sample.h), 1e-10);
    let orthogonality = if h_basis.ncols() == 0 {
        0.0
    } else {
        max_abs(&(plane.transpose() * &sample.h * &h_basis)) / max_abs(&sample.h)
    };
    Ok(FoliationFrame { point: x.clone(), z, jz, h_basis, residual, permuted_deviation, orthogonality, conditioning })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowField {
    Z,
    JZ,
}

impl std::fmt::Display for FlowField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowField::Z => "Z",
            FlowField::JZ => "JZ",
        })
    }
}

fn field_value(model: &dyn ComplexModel, field: FlowField, x: &DVector<f64>) -> Result<DVector<f64>> {
    match field {
        FlowField::Z => model.generator(x),
        FlowField::JZ => j_generator(model, x),
    }
}

#[derive(Clone, Debug)]
pub struct LeafTrace {
    pub seed: DVector<f64>,
    pub field: FlowField,
    pub t: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub tau: Vec<f64>,
    pub step: f64,
    pub order: u32,
    /// The flow left the chart before `t_max`.
    pub truncated: bool,
}

impl LeafTrace {
    pub fn end(&self) -> &DVector<f64> {
        self.points.last().expect("trace holds at least the seed")
    }
}

/// Classical fourth-order Runge-Kutta with fixed step.
pub fn integrate_flow(
    model: &dyn ComplexModel,
    field: FlowField,
    seed: &DVector<f64>,
    t_max: f64,
    dt: f64,
) -> Result<LeafTrace> {
    if !(dt > 0.0 && t_max >= 0.0) {
        return Err(LabError::Usage(format!("invalid flow parameters t_max={t_max}, dt={dt}")));
    }
    model.check_domain(seed, 0.0)?;
    // Whole number of equal steps ending exactly at t_max.
    let steps = (t_max / dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { dt } else { t_max / steps as f64 };
    let mut trace = LeafTrace {
        seed: seed.clone(),
        field,
        t: vec![0.0],
        points: vec![seed.clone()],
        tau: vec![model.tau(seed)?],
        step: dt,
        order: 4,
        truncated: false,
    };
    let f = |y: &DVector<f64>| field_value(model, field, y);
    let mut x = seed.clone();
    for k in 1..=steps {
        let stage = || -> Result<DVector<f64>> {
            let k1 = f(&x)?;
            let k2 = f(&(&x + &k1 * (0.5 * dt)))?;
            let k3 = f(&(&x + &k2 * (0.5 * dt)))?;
            let k4 = f(&(&x + &k3 * dt))?;
            Ok(&x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
        };
        let next = match stage() {
            Ok(n) if model.check_domain(&n, 0.0).is_ok() => n,
            Ok(_) | Err(LabError::ChartRadiusExceeded { .. }) => {
                trace.truncated = true;
                log::debug!("{} flow from {:?} left the chart at t = {}", field, seed.as_slice(), k as f64 * dt);
                break;
            }
            Err(e) => return Err(e),
        };
        x = next;
        trace.t.push(k as f64 * dt);
        trace.tau.push(model.tau(&x)?);
        trace.points.push(x.clone());
    }
    Ok(trace)
}

/// Endpoint differences below this are treated as roundoff.
pub const HALVING_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalvingProbe {
    /// `|x(s) - x(s/2)| / |x(s/2) - x(s/4)|` at `t_max`.
    pub ratio: f64,
    /// Base step `s` actually used, a whole fraction of `t_max`.
    pub step: f64,
}

/// Step-halving ratio starting from `dt`. When the finer difference is at
/// roundoff the base step is doubled, up to `t_max / 4`. `None` if any run
/// leaves the chart or the flow is integrated exactly at every step tried.
pub fn step_halving_ratio(
    model: &dyn ComplexModel,
    field: FlowField,
    seed: &DVector<f64>,
    t_max: f64,
    dt: f64,
) -> Result<Option<HalvingProbe>> {
    let mut step = dt;
    while step <= t_max / 4.0 + 1e-15 {
        let ends = [step, step / 2.0, step / 4.0]
            .iter()
            .map(|&s| integrate_flow(model, field, seed, t_max, s).map(|tr| (tr.end().clone(), tr.truncated, tr.step)))
            .collect::<Result<Vec<_>>>()?;
        if ends.iter().any(|e| e.1) {
            return Ok(None);
        }
        let e1 = (&ends[0].0 - &ends[1].0).norm();
        let e2 = (&ends[1].0 - &ends[2].0).norm();
        if e2 > HALVING_FLOOR {
            return Ok(Some(HalvingProbe { ratio: e1 / e2, step: ends[0].2 }));
        }
        step *= 2.0;
    }
    Ok(None)
}

/// Component of `[Zhat, J Zhat]` off span{Zhat, J Zhat}, relative to `|Zhat| |J Zhat|`.
pub fn integrability_residual(model: &dyn ComplexModel, x: &DVector<f64>, h: f64) -> Result<f64> {
    let zf = |y: &DVector<f64>| model.generator(y);
    let jzf = |y: &DVector<f64>| j_generator(model, y);
    let bracket = lie_bracket(&zf, &jzf, x, h)?;
    let z = zf(x)?;
    let jz = jzf(x)?;
    let id = DMatrix::identity(x.len(), x.len());
    let q = orthonormalize(&DMatrix::from_columns(&[z.clone(), jz.clone()]), &id)?;
    let off = &bracket - &q * (q.transpose() * &bracket);
    Ok(off.norm() / (z.norm() * jz.norm()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafTolerances {
    /// Absolute drift of `tau` along the `Zhat` flow.
    pub z_drift: f64,
    /// Deviation of the leaf profile from its linear fit, relative to its range.
    pub affine_rel: f64,
    /// Accepted interval for the RK4 step-halving ratio.
    pub ratio_range: (f64, f64),
}

impl Default for LeafTolerances {
    fn default() -> Self {
        LeafTolerances { z_drift: 1e-8, affine_rel: 1e-5, ratio_range: (12.0, 20.0) }
    }
}

#[derive(Clone, Debug)]
pub struct LeafResult {
    pub index: usize,
    pub z_drift: f64,
    /// `f(tau)` along the `J Zhat` flow, `f` the model's profile.
    pub profile_slope: f64,
    pub affine_residual: f64,
    pub monotone: bool,
    pub rk4: Option<HalvingProbe>,
    pub truncated: bool,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct LeafReport {
    pub profile: String,
    pub leaves: Vec<LeafResult>,
    pub traces: Vec<LeafTrace>,
    pub pass: bool,
}

fn affine_residual(t: &[f64], y: &[f64]) -> (f64, f64) {
    let (slope, intercept) = linear_fit(t, y);
    let range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    let dev = t.iter().zip(y).map(|(t, y)| (y - slope * t - intercept).abs()).fold(0.0, f64::max);
    (slope, if range > 0.0 { dev / range } else { dev })
}

pub fn leaf_harmonicity_certificate(
    model: &dyn ComplexModel,
    seeds: &[DVector<f64>],
    t_max: f64,
    dt: f64,
    tol: &LeafTolerances,
) -> Result<LeafReport> {
    let profile = exhaustion(model.ma_kind())?;
    let results: Vec<Result<(LeafResult, LeafTrace, LeafTrace)>> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let zt = integrate_flow(model, FlowField::Z, seed, t_max, dt)?;
            let jt = integrate_flow(model, FlowField::JZ, seed, t_max, dt)?;
            let tau0 = zt.tau[0];
            let z_drift = zt.tau.iter().map(|t| (t - tau0).abs()).fold(0.0, f64::max);
            let values: Vec<f64> = jt.tau.iter().map(|&t| profile.apply(t)).collect();
            let (profile_slope, affine) = affine_residual(&jt.t, &values);
            let monotone = jt.tau.windows(2).all(|w| w[1] > w[0]);
            let rk4 = step_halving_ratio(model, FlowField::Z, seed, t_max, dt)?;
            let ratio_ok = rk4.is_some_and(|p| (tol.ratio_range.0..=tol.ratio_range.1).contains(&p.ratio));
            let truncated = zt.truncated || jt.truncated;
            let pass = z_drift < tol.z_drift && affine < tol.affine_rel && monotone && ratio_ok && !truncated;
            let result =
                LeafResult { index, z_drift, profile_slope, affine_residual: affine, monotone, rk4, truncated, pass };
            Ok((result, zt, jt))
        })
        .collect();
    let mut leaves = Vec::with_capacity(seeds.len());
    let mut traces = Vec::with_capacity(2 * seeds.len());
    for r in results {
        let (res, zt, jt) = r?;
        leaves.push(res);
        traces.push(zt);
        traces.push(jt);
    }
    let pass = !leaves.is_empty() && leaves.iter().all(|l| l.pass);
    Ok(LeafReport { profile: profile.name().to_string(), leaves, traces, pass })
}

/// Delimited rows `leaf, field, t, coords..., tau, sqrt(tau)`.
pub fn trace_rows(leaf: usize, trace: &LeafTrace) -> Vec<String> {
    trace
        .t
        .iter()
        .zip(&trace.points)
        .zip(&trace.tau)
        .map(|((t, p), tau)| {
            let mut fields = vec![leaf.to_string(), trace.field.to_string(), format!("{t:.6}")];
            fields.extend(p.iter().map(|c| format!("{c:.17e}")));
            fields.push(format!("{tau:.17e}"));
            fields.push(format!("{:.17e}", tau.sqrt()));
            fields.join("\t")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_vec, standard_complex_structure};
    use crate::model::build_model;
    use crate::sampling::seeded_rng;

    #[test]
    fn euclidean_z_is_half_rotation() {
        let m = build_model("euclidean(2)").unwrap();
        let z0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let frame = solve_z(m.as_ref(), &z0, 1e-3).unwrap();
        let expected = -(standard_complex_structure(2) * &z0) * 0.5;
        assert!(max_abs_vec(&(&frame.z - expected)) < 1e-9);
        assert!(max_abs_vec(&(&frame.jz - &z0 * 0.5)) < 1e-9);
        assert!(frame.residual < 1e-8 && frame.permuted_deviation < 1e-9);
        let gen = m.generator(&z0).unwrap();
        assert!(max_abs_vec(&(gen - &frame.z * 2.0)) < 1e-9);
    }

    #[test]
    fn scaling_tau_leaves_z_unchanged() {
        // Z depends on tau only through dd^c tau and dtau, both linear.
        let m = build_model("sphere(2)").unwrap();
        let x = m.sample(&mut seeded_rng(3), 0.3, 1.0);
        let field = ExhaustionField::tau(m.as_ref());
        let scaled = ExhaustionField::custom(m.as_ref(), "3tau", move |y: &DVector<f64>| {
            3.0 * crate::stenzel::ChartPoint::from_coords(y).v.norm_squared()
        });
        let s1 = ddc_form_richardson(&field, &x, 1e-3).unwrap();
        let s3 = ddc_form_richardson(&scaled, &x, 1e-3).unwrap();
        let solve = |ddc: &DMatrix<f64>, c: f64| {
            let grad = gradient(&|y: &DVector<f64>| Ok(c * m.tau(y)?), &x, 1e-3).unwrap();
            (-(s1.j.transpose() * ddc * &s1.j)).lu().solve(&grad).unwrap()
        };
        assert!(max_abs_vec(&(solve(&s1.ddc, 1.0) - solve(&s3.ddc, 3.0))) < 1e-9);
    }

    #[test]
    fn sphere_z_is_scaled_generator() {
        let m = build_model("sphere(2)").unwrap();
        let mut rng = seeded_rng(5);
        for _ in 0..3 {
            let x = m.sample(&mut rng, 0.2, 1.0);
            let frame = solve_z(m.as_ref(), &x, 1e-3).unwrap();
            let gen = m.generator(&x).unwrap();
            let r = m.tau(&x).unwrap().sqrt();
            assert!(max_abs_vec(&(&frame.z - gen * r)) < 1e-7);
            assert!(frame.residual < 1e-8);
            assert!(frame.orthogonality < 1e-6);
            assert_eq!(frame.h_basis.ncols(), 2);
        }
    }

    #[test]
    fn z_plane_is_integrable() {
        for name in ["sphere(2)", "cproj(1)", "euclidean(3)"] {
            let m = build_model(name).unwrap();
            let x = m.sample(&mut seeded_rng(6), 0.3, 1.0);
            assert!(integrability_residual(m.as_ref(), &x, 1e-3).unwrap() < 1e-4, "{name}");
        }
    }

    #[test]
    fn leaves_on_sphere_and_euclidean() {
        for name in ["sphere(2)", "euclidean(2)"] {
            let m = build_model(name).unwrap();
            let mut rng = seeded_rng(7);
            let seeds: Vec<DVector<f64>> = (0..2).map(|_| m.leaf_seed(&mut rng, 0.2, 1.0)).collect();
            let report =
                leaf_harmonicity_certificate(m.as_ref(), &seeds, 1.0, 0.01, &LeafTolerances::default()).unwrap();
            assert!(report.pass, "{name}: {:?}", report.leaves);
        }
    }

    #[test]
    fn chart_exit_truncates() {
        let m = build_model("sphere(2)").unwrap();
        let seed = DVector::from_vec(vec![0.9, 0.0, 0.5, 0.0]);
        let trace = integrate_flow(m.as_ref(), FlowField::Z, &seed, 1.0, 0.01).unwrap();
        assert!(trace.truncated);
        assert!(trace.t.len() < 101);
    }
}
