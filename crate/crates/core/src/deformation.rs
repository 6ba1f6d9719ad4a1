//! Pulled-back complex structures `JJ = DF^{-1} J(F) DF` and their deformation
//! tensor `phi` on the normal distribution.
//!
//! `JJ` and `J` both preserve the Monge-Ampère plane `Zc = span{Zhat, J Zhat}`
//! when `F` maps leaves holomorphically onto leaves, so each induces a complex
//! structure on the quotient `T / Zc`. That quotient is identified with the
//! normal distribution `H`, and all tensors below are written in coordinates
//! of an `H`-basis. Rows of the quotient coordinates of a vector are obtained
//! by solving `[B | Zc] c = v` and keeping the `B` block; the `Zc` block is
//! the component that is discarded.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::chart::jacobian;
use crate::error::{LabError, Result};
use crate::foliation::{integrate_flow, FlowField};
use crate::linalg::{max_abs, null_space, rank, to_complex, CMatrix};
use crate::model::{j_generator, ComplexModel};
use crate::verifier::{ddc_form_richardson, ExhaustionField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A smooth self-map of the chart of a flat model `C^n`, coordinates `(Re z, Im z)`.
pub trait Deformation: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let h = 1e-6 * x.norm().max(1.0);
        jacobian(&|y: &DVector<f64>| self.map(y), x, h)
    }
}

fn split(x: &DVector<f64>) -> Vec<Complex64> {
    let n = x.len() / 2;
    (0..n).map(|k| Complex64::new(x[k], x[n + k])).collect()
}

fn join(z: &[Complex64]) -> DVector<f64> {
    let n = z.len();
    DVector::from_fn(2 * n, |r, _| if r < n { z[r].re } else { z[r - n].im })
}

/// Real `2n x 2n` matrix of a complex `n x n` matrix.
pub fn realify(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let e = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => e.re,
            (true, false) => -e.im,
            (false, true) => e.im,
        }
    })
}

#[derive(Debug)]
struct IdentityMap;

impl Deformation for IdentityMap {
    fn name(&self) -> &'static str {
        "identity"
    }
    fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.clone())
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(x.len(), x.len()))
    }
}

/// A fixed unitary: a rotation of the first two coordinates followed by phases.
#[derive(Debug)]
struct UnitaryMap {
    matrix: DMatrix<f64>,
}

impl UnitaryMap {
    fn new(n: usize) -> Self {
        let mut u = CMatrix::identity(n, n);
        let (c, s) = (0.7_f64.cos(), 0.7_f64.sin());
        u[(0, 0)] = Complex64::new(c, 0.0);
        u[(0, 1)] = Complex64::new(-s, 0.0) * Complex64::from_polar(1.0, 0.4);
        u[(1, 0)] = Complex64::new(s, 0.0);
        u[(1, 1)] = Complex64::new(c, 0.0) * Complex64::from_polar(1.0, 0.4);
        let phases =
            CMatrix::from_diagonal(&DVector::from_fn(n, |k, _| Complex64::from_polar(1.0, 0.3 * (k as f64 + 1.0))));
        UnitaryMap { matrix: realify(&(phases * u)) }
    }
}

impl Deformation for UnitaryMap {
    fn name(&self) -> &'static str {
        "unitary"
    }
    fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.matrix * x)
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.matrix.clone())
    }
}

/// `z -> e^{i theta([z])} z` with `theta = 0.8 |z_1|^2 / |z|^2`.
#[derive(Debug)]
struct LeafRotation;

impl Deformation for LeafRotation {
    fn name(&self) -> &'static str {
        "leaf-rotation"
    }
    fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let z = split(x);
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            return Err(LabError::degenerate("leaf-rotation", "undefined at the origin"));
        }
        let phase = Complex64::from_polar(1.0, 0.8 * z[0].norm_sqr() / r2);
        Ok(join(&z.iter().map(|w| phase * w).collect::<Vec<_>>()))
    }
}

/// Moves the line through `(1, zeta)` onto the line through `(1, h(zeta))`,
/// `h(zeta) = zeta + 0.3 conj(zeta) e^{-|zeta|^2}`, preserving `|z|`.
#[derive(Debug)]
struct FibreTwist;

impl Deformation for FibreTwist {
    fn name(&self) -> &'static str {
        "fibre-twist"
    }
    fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let z = split(x);
        if z[0].norm() < 1e-3 * x.norm() {
            return Err(LabError::degenerate("fibre-twist", "first coordinate too small for the affine chart"));
        }
        let zeta: Vec<Complex64> = z[1..].iter().map(|w| w / z[0]).collect();
        let mut image = zeta.clone();
        image[0] = zeta[0] + 0.3 * zeta[0].conj() * (-zeta[0].norm_sqr()).exp();
        let before: f64 = 1.0 + zeta.iter().map(|w| w.norm_sqr()).sum::<f64>();
        let after: f64 = 1.0 + image.iter().map(|w| w.norm_sqr()).sum::<f64>();
        let lead = z[0] * (before / after).sqrt();
        let mut out = vec![lead];
        out.extend(image.iter().map(|w| lead * w));
        Ok(join(&out))
    }
}

/// `z -> z + 0.1 conj(z) e^{-|z|^2}`; not holomorphic on any leaf.
#[derive(Debug)]
struct NonLeafHolomorphic;

impl Deformation for NonLeafHolomorphic {
    fn name(&self) -> &'static str {
        "non-leaf-holomorphic"
    }
    fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let bump = 0.1 * (-x.norm_squared()).exp();
        let z = split(x);
        Ok(join(&z.iter().map(|w| w + bump * w.conj()).collect::<Vec<_>>()))
    }
}

type DeformationCtor = fn(usize) -> Box<dyn Deformation>;

pub struct DeformationRegistry {
    entries: Vec<(&'static str, DeformationCtor)>,
}

impl Default for DeformationRegistry {
    fn default() -> Self {
        let mut reg = DeformationRegistry { entries: Vec::new() };
        reg.register("identity", |_| Box::new(IdentityMap));
        reg.register("unitary", |n| Box::new(UnitaryMap::new(n)));
        reg.register("leaf-rotation", |_| Box::new(LeafRotation));
        reg.register("fibre-twist", |_| Box::new(FibreTwist));
        reg.register("non-leaf-holomorphic", |_| Box::new(NonLeafHolomorphic));
        reg
    }
}

impl DeformationRegistry {
    pub fn register(&mut self, name: &'static str, ctor: DeformationCtor) {
        self.entries.retain(|(f, _)| *f != name);
        self.entries.push((name, ctor));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(f, _)| *f).collect()
    }

    /// Instance for complex dimension `n`.
    pub fn build(&self, name: &str, n: usize) -> Result<Box<dyn Deformation>> {
        self.entries.iter().find(|(f, _)| *f == name).map(|(_, c)| c(n)).ok_or_else(|| {
            LabError::Usage(format!("unknown deformation `{name}` (known: {})", self.names().join(", ")))
        })
    }
}

/// `JJ = DF^{-1} J(F(x)) DF` on a flat base model.
pub struct DeformedStructure<'a> {
    pub base: &'a dyn ComplexModel,
    pub diffeo: Box<dyn Deformation>,
}

impl<'a> DeformedStructure<'a> {
    pub fn new(base: &'a dyn ComplexModel, diffeo: Box<dyn Deformation>) -> Result<Self> {
        if base.as_euclidean().is_none() {
            return Err(LabError::UnsupportedModel(format!(
                "deformations are defined on euclidean(n), not {}",
                base.name()
            )));
        }
        Ok(DeformedStructure { base, diffeo })
    }

    pub fn from_name(base: &'a dyn ComplexModel, name: &str) -> Result<Self> {
        let diffeo = DeformationRegistry::default().build(name, base.n())?;
        Self::new(base, diffeo)
    }

    pub fn name(&self) -> &'static str {
        self.diffeo.name()
    }

    pub fn j_prime(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let df = self.diffeo.jacobian(x)?;
        let j = self.base.j_matrix(&self.diffeo.map(x)?)?;
        let inv = df.clone().try_inverse().ok_or_else(|| LabError::degenerate("deformation", "singular Jacobian"))?;
        Ok(inv * j * df)
    }

    /// `max |JJ v - J v| / |v|` over `v` in `Zc`.
    pub fn premise_residual(&self, x: &DVector<f64>) -> Result<f64> {
        let zc = DMatrix::from_columns(&[self.base.generator(x)?, j_generator(self.base, x)?]);
        let diff = (self.j_prime(x)? - self.base.j_matrix(x)?) * &zc;
        Ok(max_abs(&diff) / max_abs(&zc))
    }
}

/// `(H^{10}, H^{01})` spanned by `(e -/+ i J e) / 2` for `e` in a real frame
/// whose vectors together with their `J`-images span `H`.
pub fn eigenspace_split(j: &DMatrix<f64>, h_basis: &DMatrix<f64>) -> Result<(CMatrix, CMatrix)> {
    let jh = j * h_basis;
    let square = max_abs(&(j * &jh + h_basis));
    if square > 1e-8 * max_abs(h_basis).max(1.0) {
        return Err(LabError::degenerate("eigenspace_split", format!("J^2 + I = {square:.3e} on the subspace")));
    }
    let both = DMatrix::from_columns(
        &h_basis.column_iter().chain(jh.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
    );
    if rank(&both, 1e-8) != rank(h_basis, 1e-8) {
        return Err(LabError::degenerate("eigenspace_split", "subspace is not J-invariant"));
    }
    let frame = complex_frame(j, h_basis)?;
    Ok(frame_split(j, &frame))
}

fn frame_split(j: &DMatrix<f64>, frame: &DMatrix<f64>) -> (CMatrix, CMatrix) {
    let e = to_complex(frame);
    let je = to_complex(&(j * frame));
    let half = Complex64::new(0.5, 0.0);
    ((&e - &je * I) * half, (&e + &je * I) * half)
}

/// Greedy choice of columns `e_k` of `basis` with `{e_k, J e_k}` independent.
fn complex_frame(j: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = basis.ncols() / 2;
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut span: Vec<DVector<f64>> = Vec::new();
    for c in basis.column_iter() {
        if chosen.len() == m {
            break;
        }
        let c = c.into_owned();
        let mut trial = span.clone();
        trial.push(c.clone());
        trial.push(j * &c);
        if rank(&DMatrix::from_columns(&trial), 1e-8) == trial.len() {
            span = trial;
            chosen.push(c);
        }
    }
    if chosen.len() != m {
        return Err(LabError::degenerate("eigenspace_split", "subspace is not J-invariant"));
    }
    Ok(DMatrix::from_columns(&chosen))
}

/// Normal distribution at `x` with quotient coordinates.
struct NormalFrame {
    basis: DMatrix<f64>,
    zc: DMatrix<f64>,
    /// `[basis | zc]^{-1}`.
    inverse: DMatrix<f64>,
    /// `B^T H_tau B`.
    metric: DMatrix<f64>,
}

impl NormalFrame {
    fn new(model: &dyn ComplexModel, x: &DVector<f64>, h: f64) -> Result<Self> {
        let zc = DMatrix::from_columns(&[model.generator(x)?, j_generator(model, x)?]);
        let htau = ddc_form_richardson(&ExhaustionField::tau(model), x, h)?.h;
        let basis = null_space(&(zc.transpose() * &htau), 1e-10);
        if basis.ncols() + 2 != x.len() {
            return Err(LabError::degenerate("normal frame", format!("H has dimension {}", basis.ncols())));
        }
        let full = DMatrix::from_columns(
            &basis.column_iter().chain(zc.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
        );
        let inverse =
            full.try_inverse().ok_or_else(|| LabError::degenerate("normal frame", "H and Zc are not complementary"))?;
        let metric = basis.transpose() * &htau * &basis;
        Ok(NormalFrame { basis, zc, inverse, metric })
    }

    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Quotient coordinates of the columns of `v` and the relative size of the discarded `Zc` part.
    fn quotient(&self, v: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
        let c = &self.inverse * v;
        let m = self.dim();
        let top = c.rows(0, m).into_owned();
        let drop = &self.zc * c.rows(m, 2);
        let drift = drop.norm() / v.norm().max(f64::MIN_POSITIVE);
        (top, drift)
    }

    /// Matrix of the structure `s` induced on `T / Zc`.
    fn induced(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        self.quotient(&(s * &self.basis)).0
    }
}

#[derive(Clone, Debug)]
pub struct DeformationSample {
    pub point: DVector<f64>,
    /// Real vectors `e_k`; `H^{01}` is spanned by `e_k + i J e_k`.
    pub frame: DMatrix<f64>,
    pub phi: Option<CMatrix>,
    pub regular: bool,
    /// `sigma_min / sigma_max` of the projection `H'^{01} -> H^{01}`.
    pub conditioning: f64,
    /// `|JJ - J|` on the quotient in the `H`-basis.
    pub structure_gap: f64,
    /// Operator norm of `phi` for the Hermitian metric of `dd^c tau` on `H`.
    pub phi_norm: f64,
    pub premise_residual: f64,
}

impl DeformationSample {
    pub fn phi_max_abs(&self) -> f64 {
        self.phi.as_ref().map_or(0.0, |p| p.iter().fold(0.0, |a, z| a.max(z.norm())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationTolerances {
    /// Bound on `JJ - J` over `Zc`, relative.
    pub premise: f64,
    /// Projections with `sigma_min / sigma_max` below this are non-regular.
    pub regular_conditioning: f64,
    pub fd_step: f64,
}

impl Default for DeformationTolerances {
    fn default() -> Self {
        DeformationTolerances { premise: 1e-8, regular_conditioning: 1e-8, fd_step: 1e-3 }
    }
}

/// Deformation tensor at `x`. `frame` is a set of real vectors at `x` whose
/// quotient classes form the `H^{01}` frame; by default one is chosen from
/// the normal basis.
pub fn deformation_tensor(
    deformed: &DeformedStructure<'_>,
    x: &DVector<f64>,
    frame: Option<&DMatrix<f64>>,
    tol: &DeformationTolerances,
) -> Result<DeformationSample> {
    let model = deformed.base;
    let premise_residual = deformed.premise_residual(x)?;
    if premise_residual.is_nan() || premise_residual >= tol.premise {
        return Err(LabError::Premise(format!(
            "{}: JJ differs from J on span{{Z, JZ}} by {premise_residual:.3e}",
            deformed.name()
        )));
    }
    let nf = NormalFrame::new(model, x, tol.fd_step)?;
    let m0 = nf.induced(&model.j_matrix(x)?);
    let m1 = nf.induced(&deformed.j_prime(x)?);
    let structure_gap = max_abs(&(&m1 - &m0));

    let coords = match frame {
        Some(f) => nf.quotient(f).0,
        None => complex_frame(&m0, &DMatrix::identity(nf.dim(), nf.dim()))?,
    };
    let frame_vectors = &nf.basis * &coords;
    let (e10, e01) = frame_split(&m0, &coords);
    let k = coords.ncols();

    // (I + i M1) / 2 projects onto H'^{01} along H'^{10}; on H^{01} it is
    // injective exactly at regular points.
    let graph = CMatrix::identity(nf.dim(), nf.dim()) + to_complex(&m1) * I;
    let u = graph * &e01;

    let split =
        CMatrix::from_columns(&e10.column_iter().chain(e01.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>());
    let ab = split.lu().solve(&u).ok_or_else(|| LabError::degenerate("deformation_tensor", "frame does not span H"))?;
    let a = ab.rows(0, k).into_owned();
    let b = ab.rows(k, k).into_owned();
    let sv = b.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let conditioning = if smax == 0.0 { 0.0 } else { sv.iter().cloned().fold(f64::INFINITY, f64::min) / smax };
    let regular = conditioning >= tol.regular_conditioning;
    let (phi, phi_norm) = if regular {
        let binv =
            b.try_inverse().ok_or_else(|| LabError::degenerate("deformation_tensor", "projection not invertible"))?;
        let phi = a * binv;
        let norm = hermitian_operator_norm(&phi, &e10, &e01, &nf.metric)?;
        (Some(phi), norm)
    } else {
        log::debug!("{} non-regular at {:?}: conditioning {conditioning:.3e}", deformed.name(), x.as_slice());
        (None, f64::NAN)
    };
    Ok(DeformationSample {
        point: x.clone(),
        frame: frame_vectors,
        phi,
        regular,
        conditioning,
        structure_gap,
        phi_norm,
        premise_residual,
    })
}

fn hermitian_operator_norm(phi: &CMatrix, e10: &CMatrix, e01: &CMatrix, metric: &DMatrix<f64>) -> Result<f64> {
    let g = to_complex(metric);
    let chol = |e: &CMatrix| {
        let gram = e.adjoint() * &g * e;
        let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
        gram.cholesky().map(|c| c.l()).ok_or_else(|| LabError::degenerate("phi norm", "frame Gram matrix not positive"))
    };
    let l10 = chol(e10)?;
    let l01 = chol(e01)?;
    let l01_inv = l01.adjoint().try_inverse().ok_or_else(|| LabError::degenerate("phi norm", "singular frame"))?;
    let op = l10.adjoint() * phi * l01_inv;
    Ok(op.singular_values().iter().cloned().fold(0.0, f64::max))
}

/// `phi` on a `(2k+1) x (2k+1)` grid of the leaf through `seed`, with the
/// frame pushed forward by the `Zhat` and `J Zhat` flows.
#[derive(Clone, Debug)]
pub struct LeafPhiGrid {
    pub spacing: f64,
    /// Indexed `[s][t]`: `J Zhat` time `s * spacing`, `Zhat` time `t * spacing`.
    pub samples: Vec<Vec<DeformationSample>>,
    /// Largest `Zc` component removed from a pushed-forward frame vector, relative.
    pub max_drift: f64,
}

fn flow_map(model: &dyn ComplexModel, x: &DVector<f64>, s: f64, t: f64, dt: f64) -> Result<DVector<f64>> {
    let y = integrate_flow(model, FlowField::Z, x, t, dt)?;
    if y.truncated {
        return Err(LabError::Computation("leaf flow left the chart".into()));
    }
    let w = integrate_flow(model, FlowField::JZ, y.end(), s, dt)?;
    if w.truncated {
        return Err(LabError::Computation("leaf flow left the chart".into()));
    }
    Ok(w.end().clone())
}

pub fn propagate_along_leaf(
    deformed: &DeformedStructure<'_>,
    seed: &DVector<f64>,
    spacing: f64,
    half_width: usize,
    dt: f64,
    tol: &DeformationTolerances,
) -> Result<LeafPhiGrid> {
    let model = deformed.base;
    let base = deformation_tensor(deformed, seed, None, tol)?;
    let frame0 = base.frame.clone();
    let eps = 1e-6 * seed.norm().max(1.0);
    let side = 2 * half_width + 1;
    let cells: Vec<(usize, usize)> = (0..side).flat_map(|i| (0..side).map(move |j| (i, j))).collect();
    let results: Vec<Result<(DeformationSample, f64)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let s = i as f64 * spacing;
            let t = j as f64 * spacing;
            let point = flow_map(model, seed, s, t, dt)?;
            let cols = frame0
                .column_iter()
                .map(|e| {
                    let plus = flow_map(model, &(seed + e * eps), s, t, dt)?;
                    let minus = flow_map(model, &(seed - e * eps), s, t, dt)?;
                    Ok((plus - minus) / (2.0 * eps))
                })
                .collect::<Result<Vec<_>>>()?;
            let pushed = DMatrix::from_columns(&cols);
            let nf = NormalFrame::new(model, &point, tol.fd_step)?;
            let (_, drift) = nf.quotient(&pushed);
            Ok((deformation_tensor(deformed, &point, Some(&pushed), tol)?, drift))
        })
        .collect();
    let mut samples = vec![Vec::with_capacity(side); side];
    let mut max_drift = 0.0_f64;
    for ((i, _), r) in cells.iter().zip(results) {
        let (sample, drift) = r?;
        max_drift = max_drift.max(drift);
        samples[*i].push(sample);
    }
    log::debug!("{}: frame drift along leaf {max_drift:.3e}", deformed.name());
    Ok(LeafPhiGrid { spacing, samples, max_drift })
}

fn phi_or_err(s: &DeformationSample) -> Result<&CMatrix> {
    s.phi.as_ref().ok_or_else(|| LabError::Computation("deformation tensor not regular along the leaf".into()))
}

/// `max |d phi/dt + i d phi/ds|` at interior grid points, central differences.
pub fn leafwise_cr_residual(grid: &LeafPhiGrid) -> Result<f64> {
    let side = grid.samples.len();
    let mut worst = 0.0_f64;
    for i in 1..side - 1 {
        for j in 1..side - 1 {
            let dt = (phi_or_err(&grid.samples[i][j + 1])? - phi_or_err(&grid.samples[i][j - 1])?)
                / Complex64::new(2.0 * grid.spacing, 0.0);
            let ds = (phi_or_err(&grid.samples[i + 1][j])? - phi_or_err(&grid.samples[i - 1][j])?)
                / Complex64::new(2.0 * grid.spacing, 0.0);
            let r = dt + ds * I;
            worst = worst.max(r.iter().fold(0.0, |a, z| a.max(z.norm())));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug)]
pub struct BoundednessReport {
    /// Largest `dd^c tau`-norm of `phi` on the grid.
    pub sup_norm: f64,
    /// Largest entrywise change of `phi` from the seed.
    pub variation: f64,
    pub max_abs: f64,
}

pub fn boundedness_probe(grid: &LeafPhiGrid) -> Result<BoundednessReport> {
    let origin = phi_or_err(&grid.samples[0][0])?;
    let mut report = BoundednessReport { sup_norm: 0.0, variation: 0.0, max_abs: 0.0 };
    for s in grid.samples.iter().flatten() {
        let phi = phi_or_err(s)?;
        report.sup_norm = report.sup_norm.max(s.phi_norm);
        report.max_abs = report.max_abs.max(s.phi_max_abs());
        report.variation = report.variation.max((phi - origin).iter().fold(0.0, |a, z| a.max(z.norm())));
    }
    Ok(report)
}

/// Delimited rows `index, coords..., regular, conditioning, (re, im) of phi`.
pub fn phi_rows(samples: &[DeformationSample]) -> Vec<String> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut fields = vec![i.to_string()];
            fields.extend(s.point.iter().map(|c| format!("{c:.17e}")));
            fields.push((s.regular as u8).to_string());
            fields.push(format!("{:.6e}", s.conditioning));
            if let Some(phi) = &s.phi {
                for z in phi.iter() {
                    fields.push(format!("{:.17e}", z.re));
                    fields.push(format!("{:.17e}", z.im));
                }
            }
            fields.join("\t")
        })
        .collect()
}
