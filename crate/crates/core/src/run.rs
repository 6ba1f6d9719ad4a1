//! Batch runs: certificate suites selected by name, run against one model,
//! collected into a line-oriented report.
//!
//! Report lines are `key = value`. The first line carries the schema version,
//! then the configuration echo, the effective tolerances, one block per suite
//! and a final `overall` line. Everything in the report is a function of the
//! configuration; timing goes to the log only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use rand::RngCore;
use rayon::prelude::*;

use crate::chart::square_residual;
use crate::deformation::{
    boundedness_probe, deformation_tensor, leafwise_cr_residual, phi_rows, propagate_along_leaf, DeformationSample,
    DeformationTolerances, DeformedStructure,
};
use crate::error::{LabError, Result};
use crate::euclidean::analytic_ddc;
use crate::foliation::{integrability_residual, leaf_harmonicity_certificate, solve_z, trace_rows, LeafTolerances};
use crate::linalg::max_abs;
use crate::model::{build_model, exhaustion, ComplexModel};
use crate::sampling::sample_rng;
use crate::stenzel::{ChartPoint, TangentRep};
use crate::symmetric::{catalog, catalog_cross_checks, verify_lemma33};
use crate::verifier::{
    ddc_form, ddc_form_richardson, kernel_alignment, ma_certificate, psh_certificate, spectra_rows, ExhaustionField,
    MaTolerances,
};

pub const REPORT_SCHEMA: &str = "malab-report/1";
pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_TOLERANCE_FILE: &str = "malab-tolerances.toml";
pub const TOLERANCE_FILE_ENV: &str = "MALAB_TOLERANCE_FILE";

/// Named thresholds with their defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    values: BTreeMap<&'static str, f64>,
}

const TOLERANCE_DEFAULTS: &[(&str, f64)] = &[
    ("algebra.residual", 1e-10),
    ("lemma33.residual", 1e-10),
    ("structure.square", 1e-9),
    ("structure.gauge", 1e-10),
    ("structure.nijenhuis", 1e-4),
    ("structure.ratio_min", 3.0),
    ("structure.ratio_max", 5.0),
    ("structure.ratio_floor", 1e-9),
    ("calibration.tau", 1e-6),
    ("calibration.log_tau", 1e-6),
    ("psh.cross_block", 1e-5),
    ("ma.null_rel", 1e-4),
    ("ma.pos_rel", 1e-2),
    ("ma.det_ratio", 1e-6),
    ("ma.delta", 0.05),
    ("foliation.solve_residual", 1e-8),
    ("foliation.alignment", 1e-3),
    ("foliation.integrability", 1e-4),
    ("foliation.z_drift", 1e-8),
    ("foliation.affine_rel", 1e-5),
    ("foliation.ratio_min", 12.0),
    ("foliation.ratio_max", 20.0),
    ("deformation.phi_zero", 1e-12),
    ("deformation.phi_min", 1e-3),
    ("deformation.variation", 1e-6),
    ("deformation.cr", 1e-5),
    ("deformation.premise", 1e-8),
    ("deformation.regular_conditioning", 1e-8),
];

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { values: TOLERANCE_DEFAULTS.iter().copied().collect() }
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        *self.values.get(key).unwrap_or_else(|| panic!("unregistered tolerance `{key}`"))
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(LabError::Usage(format!("tolerance `{key}` must be finite, got {value}")));
        }
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(LabError::Usage(format!("unknown tolerance `{key}`"))),
        }
    }

    /// `KEY=VALUE`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| LabError::Usage(format!("tolerance override `{spec}` is not KEY=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| LabError::Usage(format!("tolerance `{}` has non-numeric value `{value}`", key.trim())))?;
        self.set(key.trim(), value)
    }

    /// Overrides from TOML; dotted keys and nested tables are equivalent.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e| LabError::Usage(format!("tolerance file: {e}")))?;
        let mut flat = Vec::new();
        flatten("", &toml::Value::Table(table), &mut flat)?;
        for (key, value) in flat {
            self.set(&key, value)?;
        }
        Ok(())
    }

    /// Defaults overlaid with the file named by `MALAB_TOLERANCE_FILE`, or
    /// with `malab-tolerances.toml` in the working directory when it exists.
    pub fn load() -> Result<Tolerances> {
        let mut t = Tolerances::default();
        let path = match std::env::var_os(TOLERANCE_FILE_ENV) {
            Some(p) => {
                let p = std::path::PathBuf::from(p);
                if !p.is_file() {
                    return Err(LabError::Usage(format!(
                        "{TOLERANCE_FILE_ENV} points to missing file {}",
                        p.display()
                    )));
                }
                p
            }
            None => {
                let p = std::path::PathBuf::from(DEFAULT_TOLERANCE_FILE);
                if !p.is_file() {
                    return Ok(t);
                }
                p
            }
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| LabError::Usage(format!("cannot read {}: {e}", path.display())))?;
        t.apply_toml(&text)?;
        Ok(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    fn ma(&self) -> MaTolerances {
        MaTolerances {
            null_rel: self.get("ma.null_rel"),
            pos_rel: self.get("ma.pos_rel"),
            det_ratio: self.get("ma.det_ratio"),
            delta: self.get("ma.delta"),
            cross_block: self.get("psh.cross_block"),
        }
    }

    fn leaf(&self) -> LeafTolerances {
        LeafTolerances {
            z_drift: self.get("foliation.z_drift"),
            affine_rel: self.get("foliation.affine_rel"),
            ratio_range: (self.get("foliation.ratio_min"), self.get("foliation.ratio_max")),
        }
    }

    fn deformation(&self, fd_step: f64) -> DeformationTolerances {
        DeformationTolerances {
            premise: self.get("deformation.premise"),
            regular_conditioning: self.get("deformation.regular_conditioning"),
            fd_step,
        }
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, f64)>) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        toml::Value::Float(f) => {
            out.push((prefix.to_string(), *f));
            Ok(())
        }
        toml::Value::Integer(i) => {
            out.push((prefix.to_string(), *i as f64));
            Ok(())
        }
        other => Err(LabError::Usage(format!("tolerance `{prefix}` must be a number, got {other}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: String,
    /// Empty selects every suite that applies to the model.
    pub suites: Vec<String>,
    /// Overrides each suite's default sample count.
    pub samples: Option<usize>,
    pub h: f64,
    pub dt: f64,
    pub seed: u64,
    /// Profile for the `ma` suite; the model's own kind by default.
    pub ma_kind: Option<String>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: "euclidean(2)".into(),
            suites: Vec::new(),
            samples: None,
            h: 1e-3,
            dt: 0.01,
            seed: DEFAULT_SEED,
            ma_kind: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// One named quantity in a suite block.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub key: String,
    pub value: String,
    /// `None` for informational entries.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<Check>,
    /// Set when the suite stopped on a numerical error.
    pub error: Option<String>,
    pub spectra: Vec<String>,
    pub traces: Vec<String>,
    pub phi: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport { name: name.to_string(), ..Default::default() }
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn check(&self, key: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.key == key)
    }

    /// Records `value < bound`.
    fn below(&mut self, key: &str, value: f64, bound: f64) {
        self.checks.push(Check { key: key.into(), value: fmt_f(value), pass: Some(value < bound) });
    }

    fn above(&mut self, key: &str, value: f64, bound: f64) {
        self.checks.push(Check { key: key.into(), value: fmt_f(value), pass: Some(value > bound) });
    }

    fn flag(&mut self, key: &str, holds: bool) {
        self.checks.push(Check { key: key.into(), value: holds.to_string(), pass: Some(holds) });
    }

    fn info(&mut self, key: &str, value: impl ToString) {
        self.checks.push(Check { key: key.into(), value: value.to_string(), pass: None });
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_list(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(fmt_f).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: RunConfig,
    pub suites: Vec<SuiteReport>,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        !self.suites.is_empty() && self.suites.iter().all(|s| s.pass())
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let mut line = |k: &str, v: &str| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("schema", REPORT_SCHEMA);
        line("config.model", &c.model);
        line("config.suites", &self.suites.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(","));
        line("config.samples", &c.samples.map_or("default".into(), |s| s.to_string()));
        line("config.h", &fmt_f(c.h));
        line("config.dt", &fmt_f(c.dt));
        line("config.seed", &c.seed.to_string());
        line("config.ma_kind", c.ma_kind.as_deref().unwrap_or("default"));
        for (k, v) in c.tolerances.iter() {
            line(&format!("tolerance.{k}"), &fmt_f(v));
        }
        for s in &self.suites {
            line(&format!("suite.{}.status", s.name), if s.pass() { "pass" } else { "fail" });
            if let Some(e) = &s.error {
                line(&format!("suite.{}.error", s.name), e);
            }
            for ch in &s.checks {
                line(&format!("suite.{}.{}", s.name, ch.key), &ch.value);
                if let Some(p) = ch.pass {
                    line(&format!("suite.{}.{}.pass", s.name, ch.key), &p.to_string());
                }
            }
        }
        line("overall", if self.pass() { "pass" } else { "fail" });
        out
    }

    pub fn spectra(&self) -> Vec<String> {
        self.collect(|s| &s.spectra)
    }

    pub fn traces(&self) -> Vec<String> {
        self.collect(|s| &s.traces)
    }

    pub fn phi(&self) -> Vec<String> {
        self.collect(|s| &s.phi)
    }

    fn collect(&self, rows: impl Fn(&SuiteReport) -> &Vec<String>) -> Vec<String> {
        self.suites.iter().flat_map(|s| rows(s).iter().map(move |r| format!("{}\t{r}", s.name))).collect()
    }
}

pub struct SuiteContext<'a> {
    pub model: &'a dyn ComplexModel,
    pub config: &'a RunConfig,
}

impl SuiteContext<'_> {
    fn tol(&self, key: &str) -> f64 {
        self.config.tolerances.get(key)
    }

    fn count(&self, default: usize) -> usize {
        self.config.samples.unwrap_or(default)
    }

    /// Sample points with fibre norm in `[r_min, 1]`, one generator stream per index.
    fn points(&self, stream: u64, count: usize, r_min: f64) -> Vec<DVector<f64>> {
        (0..count)
            .map(|i| {
                let mut rng = sample_rng(self.config.seed, stream, i as u64);
                self.model.sample(&mut rng as &mut dyn RngCore, r_min, 1.0)
            })
            .collect()
    }
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn applies_to(&self, model: &dyn ComplexModel) -> bool;
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()>;
}

/// Suites by name, in execution order.
pub struct SuiteRegistry {
    suites: Vec<Box<dyn Suite>>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        let mut reg = SuiteRegistry { suites: Vec::new() };
        reg.register(Box::new(AlgebraSuite));
        reg.register(Box::new(Lemma33Suite));
        reg.register(Box::new(StructureSuite));
        reg.register(Box::new(PshSuite));
        reg.register(Box::new(MaSuite));
        reg.register(Box::new(FoliationSuite));
        reg.register(Box::new(DeformationSuite));
        reg.register(Box::new(CatalogSuite));
        reg
    }
}

impl SuiteRegistry {
    pub fn register(&mut self, suite: Box<dyn Suite>) {
        self.suites.retain(|s| s.name() != suite.name());
        self.suites.push(suite);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.suites.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Suite> {
        self.suites.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    /// Suites requested by the config, or every applicable one.
    pub fn select(&self, model: &dyn ComplexModel, names: &[String]) -> Result<Vec<&dyn Suite>> {
        if names.is_empty() {
            return Ok(self.suites.iter().filter(|s| s.applies_to(model)).map(|s| s.as_ref()).collect());
        }
        let mut chosen: Vec<&dyn Suite> = Vec::new();
        for name in names {
            let suite = self.get(name).ok_or_else(|| {
                LabError::Usage(format!("unknown suite `{name}` (known: {})", self.names().join(", ")))
            })?;
            if !suite.applies_to(model) {
                return Err(LabError::Usage(format!("suite `{name}` does not apply to {}", model.name())));
            }
            if !chosen.iter().any(|s| s.name() == suite.name()) {
                chosen.push(suite);
            }
        }
        // Registry order keeps reports independent of flag order.
        let order = self.names();
        chosen.sort_by_key(|s| order.iter().position(|n| *n == s.name()));
        Ok(chosen)
    }
}

fn validate(config: &RunConfig) -> Result<()> {
    if !(config.h > 0.0 && config.h.is_finite()) {
        return Err(LabError::Usage(format!("--h must be positive, got {}", config.h)));
    }
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(LabError::Usage(format!("--dt must be positive, got {}", config.dt)));
    }
    if config.samples == Some(0) {
        return Err(LabError::Usage("--samples must be positive".into()));
    }
    if let Some(kind) = &config.ma_kind {
        exhaustion(kind)?;
    }
    Ok(())
}

fn is_usage(e: &LabError) -> bool {
    matches!(e, LabError::Usage(_) | LabError::UnsupportedModel(_))
}

/// Runs the configured suites. Usage errors are returned; numerical errors
/// mark the suite as failed.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    validate(config)?;
    let model = build_model(&config.model)?;
    let registry = SuiteRegistry::default();
    let suites = registry.select(model.as_ref(), &config.suites)?;
    let ctx = SuiteContext { model: model.as_ref(), config };
    let mut reports = Vec::with_capacity(suites.len());
    for suite in suites {
        let mut report = SuiteReport::new(suite.name());
        if let Err(e) = suite.run(&ctx, &mut report) {
            if is_usage(&e) {
                return Err(e);
            }
            log::warn!("suite {} stopped: {e}", suite.name());
            report.error = Some(e.to_string());
        }
        reports.push(report);
    }
    Ok(RunReport { config: config.clone(), suites: reports })
}

struct AlgebraSuite;

impl Suite for AlgebraSuite {
    fn name(&self) -> &'static str {
        "algebra"
    }
    fn applies_to(&self, model: &dyn ComplexModel) -> bool {
        model.as_stenzel().is_some()
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let pair = &ctx.model.as_stenzel().expect("applies_to checked").structure.pair;
        let tol = ctx.tol("algebra.residual");
        let v = pair.algebra.validate();
        report.info("algebra", &pair.algebra.name);
        report.below("antisymmetry", v.antisymmetry, tol);
        report.below("jacobi", v.jacobi, tol);
        report.below("killing_symmetry", v.killing_symmetry, tol);
        report.below("killing_max_eigenvalue", v.killing_max_eigenvalue, 0.0);
        let [kk, kp, pp] = pair.cartan_residuals();
        report.below("cartan_kk", kk, tol);
        report.below("cartan_kp", kp, tol);
        report.below("cartan_pp", pp, tol);
        report.below("involution", pair.involution_residual(), tol);
        Ok(())
    }
}

struct Lemma33Suite;

impl Suite for Lemma33Suite {
    fn name(&self) -> &'static str {
        "lemma33"
    }
    fn applies_to(&self, model: &dyn ComplexModel) -> bool {
        model.as_stenzel().is_some()
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let pair = &ctx.model.as_stenzel().expect("applies_to checked").structure.pair;
        let count = ctx.count(20);
        let reports = (0..count)
            .map(|i| {
                let x0 = pair.random_unit_p(&mut sample_rng(ctx.config.seed, 1, i as u64));
                verify_lemma33(&pair.with_x0(x0))
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = |f: &dyn Fn(&crate::symmetric::Lemma33Report) -> f64| reports.iter().map(f).fold(0.0, f64::max);
        let tol = ctx.tol("lemma33.residual");
        report.info("samples", count);
        report.info("dims", format!("{:?}", reports[0].dims));
        report.flag("dims_constant", reports.iter().all(|r| r.dims == reports[0].dims));
        report.below("complement_residual", worst(&|r| r.complement_residual), tol);
        report.below("image_residual", worst(&|r| r.image_residual), tol);
        report.below("l_p2_pairing", worst(&|r| r.l_p2_pairing), tol);
        report.below("p2_in_k", worst(&|r| r.p2_in_k), tol);
        Ok(())
    }
}

struct StructureSuite;

#[derive(Default)]
struct StructureSample {
    square: f64,
    gauge: f64,
    nijenhuis: f64,
    ratio: Option<f64>,
}

impl Suite for StructureSuite {
    fn name(&self) -> &'static str {
        "structure"
    }
    fn applies_to(&self, model: &dyn ComplexModel) -> bool {
        model.as_stenzel().is_some()
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let s = &ctx.model.as_stenzel().expect("applies_to checked").structure;
        let h = ctx.config.h;
        let floor = ctx.tol("structure.ratio_floor");
        let points = ctx.points(2, ctx.count(100), 0.2);
        let samples = points
            .par_iter()
            .map(|x| -> Result<StructureSample> {
                let point = ChartPoint::from_coords(x);
                let square = square_residual(&s.j_in_chart(&point)?);
                let xe = s.fibre_element(&point);
                let gb = s.gauge_basis(&xe);
                let mut gauge = 0.0_f64;
                for w in s.chart_tangent_basis(&point)? {
                    let jw = s.j(&xe, &w)?;
                    for c in 0..gb.ncols() {
                        let g = TangentRep::from_stacked(&gb.column(c).into_owned());
                        gauge = gauge.max(s.gauge_distance(&xe, &s.j(&xe, &(&w + &g))?, &jw)?);
                    }
                }
                let r1 = s.nijenhuis_max_residual(&point, h)?;
                let r2 = s.nijenhuis_max_residual(&point, h / 2.0)?;
                let ratio = (r1 > floor).then(|| r1 / r2);
                Ok(StructureSample { square, gauge, nijenhuis: r1, ratio })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let worst = |f: fn(&StructureSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
        let ratios: Vec<f64> = samples.iter().filter_map(|s| s.ratio).collect();
        let (lo, hi) = (ctx.tol("structure.ratio_min"), ctx.tol("structure.ratio_max"));
        report.info("samples", samples.len());
        report.below("square", worst(|s| s.square), ctx.tol("structure.square"));
        report.below("gauge", worst(|s| s.gauge), ctx.tol("structure.gauge"));
        report.below("nijenhuis", worst(|s| s.nijenhuis), ctx.tol("structure.nijenhuis"));
        report.info("ratio_tested", ratios.len());
        report.info("ratio_min", fmt_f(ratios.iter().cloned().fold(f64::INFINITY, f64::min)));
        report.info("ratio_max", fmt_f(ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)));
        report.flag("ratio_in_range", ratios.iter().all(|r| (lo..=hi).contains(r)));
        Ok(())
    }
}

struct PshSuite;

impl Suite for PshSuite {
    fn name(&self) -> &'static str {
        "psh"
    }
    fn applies_to(&self, _model: &dyn ComplexModel) -> bool {
        true
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let model = ctx.model;
        let tol = ctx.config.tolerances.ma();
        let points = ctx.points(3, ctx.count(200), 0.2);
        if model.as_euclidean().is_some() {
            calibration(ctx, &points, report)?;
        }
        let psh = psh_certificate(model, &points, ctx.config.h, &tol)?;
        report.info("samples", psh.samples.len());
        report.above("min_eigenvalue", psh.margin, 0.0);
        report.above("cr_min_tau", psh.samples.iter().map(|s| s.cr_min_tau).fold(f64::INFINITY, f64::min), 0.0);
        report.above("cr_min_profile", psh.samples.iter().map(|s| s.cr_min_profile).fold(f64::INFINITY, f64::min), 0.0);
        report.below("cross_block", psh.max_cross_block, tol.cross_block);
        report.info("offenders", psh.offenders().len());
        let spectra: Vec<DVector<f64>> = psh.samples.iter().map(|s| s.eigenvalues.clone()).collect();
        report.spectra = spectra_rows(&points, &spectra).into_iter().map(|r| format!("tau\t{r}")).collect();
        Ok(())
    }
}

/// Difference quotients against closed forms at `h` and `h/2`.
fn calibration(ctx: &SuiteContext<'_>, points: &[DVector<f64>], report: &mut SuiteReport) -> Result<()> {
    let h = ctx.config.h;
    for kind in ["tau", "log_tau"] {
        let field = ExhaustionField::new(ctx.model, kind)?;
        let mut coarse = 0.0_f64;
        let mut fine = 0.0_f64;
        let mut rich = 0.0_f64;
        for z in points {
            let exact = analytic_ddc(kind, z)?;
            coarse = coarse.max(max_abs(&(ddc_form(&field, z, h)?.h - &exact.h)));
            fine = fine.max(max_abs(&(ddc_form(&field, z, h / 2.0)?.h - &exact.h)));
            rich = rich.max(max_abs(&(ddc_form_richardson(&field, z, h)?.h - &exact.h)));
        }
        let bound = ctx.tol(&format!("calibration.{kind}"));
        if kind == "tau" {
            report.below("calibration.tau.max_error", coarse, bound);
            report.info("calibration.tau.max_error_half_step", fmt_f(fine));
        } else {
            report.info("calibration.log_tau.max_error", fmt_f(coarse));
            report.info("calibration.log_tau.step_ratio", fmt_f(coarse / fine));
            report.below("calibration.log_tau.richardson_error", rich, bound);
        }
    }
    Ok(())
}

struct MaSuite;

impl Suite for MaSuite {
    fn name(&self) -> &'static str {
        "ma"
    }
    fn applies_to(&self, _model: &dyn ComplexModel) -> bool {
        true
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let model = ctx.model;
        let kind = ctx.config.ma_kind.as_deref().unwrap_or(model.ma_kind());
        let points = ctx.points(4, ctx.count(200), 0.2);
        let ma = ma_certificate(model, kind, &points, ctx.config.h, &ctx.config.tolerances.ma())?;
        report.info("kind", kind);
        report.info("model_kind", model.ma_kind());
        report.info("kind_matches_model", ma.kind_matches_model);
        report.info("samples", ma.samples.len());
        report.info("failures", ma.failures());
        report.below("max_det_ratio", ma.max_det_ratio, ctx.tol("ma.det_ratio"));
        report.flag("null_count_two", ma.samples.iter().all(|s| s.null_count == 2));
        let dim = model.chart_dim();
        report.flag("positive_count", ma.samples.iter().all(|s| s.positive_count == dim - 2));
        report.info(
            "min_relative_eigenvalue",
            fmt_f(ma.samples.iter().map(|s| s.min_relative).fold(f64::INFINITY, f64::min)),
        );
        let spectra: Vec<DVector<f64>> = ma.samples.iter().map(|s| s.eigenvalues.clone()).collect();
        report.spectra = spectra_rows(&points, &spectra).into_iter().map(|r| format!("{kind}\t{r}")).collect();
        Ok(())
    }
}

struct FoliationSuite;

impl Suite for FoliationSuite {
    fn name(&self) -> &'static str {
        "foliation"
    }
    fn applies_to(&self, _model: &dyn ComplexModel) -> bool {
        true
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let model = ctx.model;
        let h = ctx.config.h;
        let count = ctx.count(20);
        let points = ctx.points(5, count, 0.2);
        let rows = points
            .par_iter()
            .map(|x| -> Result<[f64; 4]> {
                let frame = solve_z(model, x, h)?;
                Ok([
                    frame.residual,
                    kernel_alignment(model, x, h)?,
                    integrability_residual(model, x, h)?,
                    frame.orthogonality,
                ])
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let worst = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
        report.info("samples", count);
        report.below("solve_residual", worst(0), ctx.tol("foliation.solve_residual"));
        report.below("alignment", worst(1), ctx.tol("foliation.alignment"));
        report.below("integrability", worst(2), ctx.tol("foliation.integrability"));
        report.info("normal_orthogonality", fmt_f(worst(3)));

        let leaves = count.div_ceil(4);
        let seeds: Vec<DVector<f64>> = (0..leaves)
            .map(|i| {
                let mut rng = sample_rng(ctx.config.seed, 6, i as u64);
                model.leaf_seed(&mut rng as &mut dyn RngCore, 0.2, 1.0)
            })
            .collect();
        let leaf = leaf_harmonicity_certificate(model, &seeds, 1.0, ctx.config.dt, &ctx.config.tolerances.leaf())?;
        let tol = ctx.config.tolerances.leaf();
        let probes: Vec<_> = leaf.leaves.iter().filter_map(|l| l.rk4).collect();
        let ratios: Vec<f64> = probes.iter().map(|p| p.ratio).collect();
        report.info("leaves", leaves);
        report.info("profile", &leaf.profile);
        report.below("z_drift", leaf.leaves.iter().map(|l| l.z_drift).fold(0.0, f64::max), tol.z_drift);
        report.below(
            "affine_residual",
            leaf.leaves.iter().map(|l| l.affine_residual).fold(0.0, f64::max),
            tol.affine_rel,
        );
        report.flag("monotone", leaf.leaves.iter().all(|l| l.monotone));
        report.flag("untruncated", leaf.leaves.iter().all(|l| !l.truncated));
        report.info("profile_slopes", fmt_list(leaf.leaves.iter().map(|l| l.profile_slope)));
        report.info("rk4_ratios", fmt_list(ratios.iter().copied()));
        report.info("rk4_probe_steps", fmt_list(probes.iter().map(|p| p.step)));
        report.flag(
            "rk4_ratio_in_range",
            ratios.len() == leaves && ratios.iter().all(|r| (tol.ratio_range.0..=tol.ratio_range.1).contains(r)),
        );
        report.traces = leaf.traces.iter().enumerate().flat_map(|(i, t)| trace_rows(i / 2, t)).collect();
        Ok(())
    }
}

struct DeformationSuite;

impl DeformationSuite {
    fn samples(
        base: &dyn ComplexModel,
        name: &str,
        points: &[DVector<f64>],
        tol: &DeformationTolerances,
    ) -> Result<Vec<Result<DeformationSample>>> {
        let d = DeformedStructure::from_name(base, name)?;
        Ok(points.par_iter().map(|x| deformation_tensor(&d, x, None, tol)).collect())
    }
}

impl Suite for DeformationSuite {
    fn name(&self) -> &'static str {
        "deformation"
    }
    fn applies_to(&self, model: &dyn ComplexModel) -> bool {
        model.as_euclidean().is_some()
    }
    fn run(&self, ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let model = ctx.model;
        let tol = ctx.config.tolerances.deformation(ctx.config.h);
        let points = ctx.points(7, ctx.count(20), 0.3);
        report.info("samples", points.len());
        for name in ["identity", "unitary", "leaf-rotation", "fibre-twist"] {
            let samples = Self::samples(model, name, &points, &tol)?.into_iter().collect::<Result<Vec<_>>>()?;
            let max_phi = samples.iter().map(|s| s.phi_max_abs()).fold(0.0, f64::max);
            let max_norm = samples.iter().map(|s| s.phi_norm).fold(0.0, f64::max);
            let key = name.replace('-', "_");
            report.flag(&format!("{key}.regular"), samples.iter().all(|s| s.regular));
            match name {
                "identity" | "unitary" => {
                    report.below(&format!("{key}.max_phi"), max_phi, ctx.tol("deformation.phi_zero"))
                }
                "fibre-twist" => report.above(&format!("{key}.max_phi"), max_phi, ctx.tol("deformation.phi_min")),
                _ => report.info(&format!("{key}.max_phi"), fmt_f(max_phi)),
            }
            report.info(&format!("{key}.max_phi_norm"), fmt_f(max_norm));
            let gap_matches = samples.iter().all(|s| (s.phi_max_abs() > 1e-6) == (s.structure_gap > 1e-6));
            report.flag(&format!("{key}.phi_zero_iff_structures_agree"), gap_matches);
            report.phi.extend(phi_rows(&samples).into_iter().map(|r| format!("{name}\t{r}")));
        }

        for name in ["leaf-rotation", "fibre-twist"] {
            let d = DeformedStructure::from_name(model, name)?;
            let mut cr = 0.0_f64;
            let mut variation = 0.0_f64;
            let mut sup = 0.0_f64;
            let mut drift = 0.0_f64;
            for seed in points.iter().take(3) {
                let grid = propagate_along_leaf(&d, seed, 0.05, 1, ctx.config.dt / 2.0, &tol)?;
                let b = boundedness_probe(&grid)?;
                cr = cr.max(leafwise_cr_residual(&grid)?);
                variation = variation.max(b.variation);
                sup = sup.max(b.sup_norm);
                drift = drift.max(grid.max_drift);
            }
            let key = name.replace('-', "_");
            report.below(&format!("{key}.leaf_variation"), variation, ctx.tol("deformation.variation"));
            report.below(&format!("{key}.cr_residual"), cr, ctx.tol("deformation.cr"));
            report.info(&format!("{key}.leaf_sup_norm"), fmt_f(sup));
            report.info(&format!("{key}.frame_drift"), fmt_f(drift));
        }

        let rejected = Self::samples(model, "non-leaf-holomorphic", &points, &tol)?
            .into_iter()
            .filter(|r| matches!(r, Err(LabError::Premise(_))))
            .count();
        report.flag("non_leaf_holomorphic.rejected", rejected == points.len());
        Ok(())
    }
}

struct CatalogSuite;

impl Suite for CatalogSuite {
    fn name(&self) -> &'static str {
        "catalog"
    }
    fn applies_to(&self, _model: &dyn ComplexModel) -> bool {
        true
    }
    fn run(&self, _ctx: &SuiteContext<'_>, report: &mut SuiteReport) -> Result<()> {
        let entries = catalog();
        report.info("entries", entries.len());
        for check in catalog_cross_checks(&entries) {
            // A failing dimension check on an entry already annotated as a
            // suspected misprint is reported, not counted.
            let noted = check
                .name
                .strip_prefix("compactification_dim_")
                .and_then(|row| entries.iter().find(|e| e.source_row == row))
                .is_some_and(|e| e.note.is_some());
            if check.holds || !noted {
                report.flag(&check.name, check.holds);
            } else {
                report.info(&check.name, "false (noted)");
            }
            report.info(&format!("{}.detail", check.name), check.detail);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(model: &str, suites: &[&str], samples: usize) -> RunConfig {
        RunConfig {
            model: model.into(),
            suites: suites.iter().map(|s| s.to_string()).collect(),
            samples: Some(samples),
            ..RunConfig::default()
        }
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.apply_override("ma.det_ratio=1e-3").unwrap();
        assert_eq!(t.get("ma.det_ratio"), 1e-3);
        t.apply_toml("\"psh.cross_block\" = 1\n[structure]\nnijenhuis = 2e-4\n").unwrap();
        assert_eq!(t.get("structure.nijenhuis"), 2e-4);
        assert_eq!(t.get("psh.cross_block"), 1.0);
        assert!(matches!(t.apply_override("nope=1"), Err(LabError::Usage(_))));
        assert!(t.apply_override("ma.det_ratio").is_err());
        assert!(t.apply_toml("ma = { det_ratio = \"x\" }").is_err());
    }

    #[test]
    fn selection_and_usage_errors() {
        let reg = SuiteRegistry::default();
        let e = build_model("euclidean(2)").unwrap();
        let names: Vec<_> = reg.select(e.as_ref(), &[]).unwrap().iter().map(|s| s.name()).collect();
        assert_eq!(names, ["psh", "ma", "foliation", "deformation", "catalog"]);
        assert!(reg.select(e.as_ref(), &["structure".into()]).is_err());
        assert!(reg.select(e.as_ref(), &["bogus".into()]).is_err());
        let s = build_model("sphere(2)").unwrap();
        let picked: Vec<_> =
            reg.select(s.as_ref(), &["ma".into(), "algebra".into()]).unwrap().iter().map(|s| s.name()).collect();
        assert_eq!(picked, ["algebra", "ma"]);
        assert!(matches!(run(&config("torus(2)", &[], 1)), Err(LabError::UnsupportedModel(_))));
        let mut c = config("sphere(2)", &["ma"], 1);
        c.ma_kind = Some("tau".into());
        assert!(matches!(run(&c), Err(LabError::Usage(_))));
    }

    #[test]
    fn sphere_log_control_fails_and_sqrt_passes() {
        let mut c = config("sphere(2)", &["ma"], 5);
        let good = run(&c).unwrap();
        assert!(good.pass(), "{}", good.render());
        c.ma_kind = Some("log_tau".into());
        let bad = run(&c).unwrap();
        assert!(!bad.pass());
        assert!(bad.render().contains("suite.ma.kind_matches_model = false"));
    }

    #[test]
    fn reports_are_deterministic() {
        let c = config("sphere(2)", &["algebra", "lemma33", "psh", "catalog"], 3);
        let a = run(&c).unwrap().render();
        let b = run(&c).unwrap().render();
        assert_eq!(a, b);
        assert!(a.starts_with("schema = malab-report/1\n"));
        assert!(a.trim_end().ends_with("overall = pass"), "{a}");
        let mut other = c.clone();
        other.seed += 1;
        assert_ne!(run(&other).unwrap().render(), a);
    }

    #[test]
    fn numerical_failure_marks_suite() {
        let mut c = config("sphere(2)", &["psh"], 2);
        c.tolerances.set("ma.delta", 5.0).unwrap();
        let r = run(&c).unwrap();
        assert!(!r.pass());
        assert!(r.suite("psh").unwrap().error.as_deref().unwrap().contains("zero locus"));
    }
}
