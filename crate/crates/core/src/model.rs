//! Complex models behind a common trait, selected by name at runtime.
//!
//! A model exposes a chart of real dimension `2n`, the matrix of its complex
//! structure, the exhaustion `tau` and the generator `Zhat` of the
//! Monge-Ampère foliation: the vector field tangent to the level sets of
//! `tau` whose partner `J Zhat` moves across them, normalized so that the
//! flows are one-parameter group actions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};
use crate::euclidean::EuclideanModel;
use crate::sampling::{ball_vector, shell_vector};
use crate::stenzel::{ChartPoint, StenzelStructure, TangentRep};
use crate::symmetric::{build_pair, PairName};

/// Real-valued profile `f` with `u = f(tau)`.
pub trait Exhaustion: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn apply(&self, tau: f64) -> f64;
    /// `f` is singular at `tau = 0`.
    fn needs_positive_tau(&self) -> bool;
}

#[derive(Debug)]
struct Identity;
#[derive(Debug)]
struct Sqrt;
#[derive(Debug)]
struct Log;

impl Exhaustion for Identity {
    fn name(&self) -> &'static str {
        "tau"
    }
    fn apply(&self, tau: f64) -> f64 {
        tau
    }
    fn needs_positive_tau(&self) -> bool {
        false
    }
}

impl Exhaustion for Sqrt {
    fn name(&self) -> &'static str {
        "sqrt_tau"
    }
    fn apply(&self, tau: f64) -> f64 {
        tau.sqrt()
    }
    fn needs_positive_tau(&self) -> bool {
        true
    }
}

impl Exhaustion for Log {
    fn name(&self) -> &'static str {
        "log_tau"
    }
    fn apply(&self, tau: f64) -> f64 {
        tau.ln()
    }
    fn needs_positive_tau(&self) -> bool {
        true
    }
}

pub const EXHAUSTION_KINDS: [&str; 3] = ["tau", "sqrt_tau", "log_tau"];

pub fn exhaustion(name: &str) -> Result<Arc<dyn Exhaustion>> {
    match name {
        "tau" => Ok(Arc::new(Identity)),
        "sqrt_tau" => Ok(Arc::new(Sqrt)),
        "log_tau" => Ok(Arc::new(Log)),
        other => {
            Err(LabError::Usage(format!("unknown exhaustion kind `{other}` (known: {})", EXHAUSTION_KINDS.join(", "))))
        }
    }
}

pub trait ComplexModel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// Complex dimension; the chart has real dimension `2n`.
    fn n(&self) -> usize;
    fn chart_dim(&self) -> usize {
        2 * self.n()
    }
    fn j_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn tau(&self, x: &DVector<f64>) -> Result<f64>;
    /// Profile for which `f(tau)` solves the homogeneous equation.
    fn ma_kind(&self) -> &'static str;
    /// `Zhat` at `x` in chart components.
    fn generator(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// Fails unless a stencil of half-width `margin` around `x` stays in the chart.
    fn check_domain(&self, x: &DVector<f64>, margin: f64) -> Result<()>;
    /// Sample with fibre norm in `[r_min, r_max]`.
    fn sample(&self, rng: &mut dyn rand::RngCore, r_min: f64, r_max: f64) -> DVector<f64>;
    /// Seed whose `Zhat` flow over `[0, t_max]` stays well inside the chart.
    fn leaf_seed(&self, rng: &mut dyn rand::RngCore, r_min: f64, t_max: f64) -> DVector<f64>;
    /// `J` is the same matrix at every point.
    fn has_constant_structure(&self) -> bool {
        false
    }
    fn as_stenzel(&self) -> Option<&StenzelModel> {
        None
    }
    fn as_euclidean(&self) -> Option<&EuclideanModel> {
        None
    }
}

/// `J Zhat`.
pub fn j_generator(model: &dyn ComplexModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(model.j_matrix(x)? * model.generator(x)?)
}

/// Morimoto-Nagano model `T(G/K)` in the slice chart, `tau = |v|^2`.
#[derive(Debug, Clone)]
pub struct StenzelModel {
    pub structure: StenzelStructure,
}

impl StenzelModel {
    pub fn new(pair: PairName) -> Result<Self> {
        Ok(StenzelModel { structure: StenzelStructure::new(build_pair(pair)?) })
    }

    pub fn with_radius(pair: PairName, radius: f64) -> Result<Self> {
        Ok(StenzelModel { structure: StenzelStructure::with_radius(build_pair(pair)?, radius) })
    }
}

impl ComplexModel for StenzelModel {
    fn name(&self) -> String {
        self.structure.pair.name.to_string()
    }

    fn n(&self) -> usize {
        self.structure.n()
    }

    fn j_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.structure.j_in_chart(&ChartPoint::from_coords(x))
    }

    fn tau(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(ChartPoint::from_coords(x).v.norm_squared())
    }

    fn ma_kind(&self) -> &'static str {
        "sqrt_tau"
    }

    /// `(X/|X|, 0)`: the flow `[(g exp(t X/|X|), X)]`.
    fn generator(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let point = ChartPoint::from_coords(x);
        let r = point.v.norm();
        if r < 1e-12 {
            return Err(LabError::NearZeroLocus { tau: r * r, delta: 1e-12 });
        }
        let s = &self.structure;
        let dir = s.fibre_element(&point) / r;
        let zero = DVector::zeros(dir.len());
        s.rep_to_chart(&point, &TangentRep::new(dir, zero))
    }

    fn check_domain(&self, x: &DVector<f64>, margin: f64) -> Result<()> {
        let a = ChartPoint::from_coords(x).a.norm();
        let radius = self.structure.radius;
        if a > radius {
            return Err(LabError::ChartRadiusExceeded { norm: a, radius });
        }
        if a + margin > radius {
            return Err(LabError::StepTooLarge { step: margin, margin: radius - a });
        }
        Ok(())
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, r_min: f64, r_max: f64) -> DVector<f64> {
        let n = self.n();
        let a = ball_vector(rng, n, 0.8 * self.structure.radius);
        let v = shell_vector(rng, n, r_min, r_max);
        ChartPoint::new(a, v).coords()
    }

    fn leaf_seed(&self, rng: &mut dyn rand::RngCore, r_min: f64, t_max: f64) -> DVector<f64> {
        // The Zhat flow moves `a` along `v/|v|`; start half a leaf behind the slice origin.
        let n = self.n();
        let v = shell_vector(rng, n, r_min, 1.0);
        let dir = &v / v.norm();
        let offset = ball_vector(rng, n, 0.2 * self.structure.radius);
        let a = offset - &dir * (0.5 * t_max);
        ChartPoint::new(a, v).coords()
    }

    fn as_stenzel(&self) -> Option<&StenzelModel> {
        Some(self)
    }
}

type Constructor = fn(usize) -> Result<Box<dyn ComplexModel>>;

/// Model families by name; `family(n)` selects a member.
pub struct ModelRegistry {
    entries: Vec<(&'static str, Constructor)>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut reg = ModelRegistry { entries: Vec::new() };
        reg.register("euclidean", |n| Ok(Box::new(EuclideanModel::new(n)?)));
        reg.register("sphere", |n| Ok(Box::new(StenzelModel::new(PairName::Sphere(n))?)));
        reg.register("rproj", |n| Ok(Box::new(StenzelModel::new(PairName::RealProjective(n))?)));
        reg.register("cproj", |n| Ok(Box::new(StenzelModel::new(PairName::ComplexProjective(n))?)));
        reg
    }
}

impl ModelRegistry {
    pub fn register(&mut self, family: &'static str, ctor: Constructor) {
        self.entries.retain(|(f, _)| *f != family);
        self.entries.push((family, ctor));
    }

    pub fn families(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(f, _)| *f).collect()
    }

    pub fn build(&self, name: &str) -> Result<Box<dyn ComplexModel>> {
        let (family, n) = parse_call(name)?;
        let ctor = self
            .entries
            .iter()
            .find(|(f, _)| *f == family)
            .map(|(_, c)| c)
            .ok_or_else(|| LabError::UnsupportedModel(format!("unknown model family `{family}`")))?;
        ctor(n)
    }
}

/// `"family(n)"` -> `("family", n)`.
pub fn parse_call(name: &str) -> Result<(&str, usize)> {
    let s = name.trim();
    let bad = || LabError::UnsupportedModel(format!("malformed model name `{s}`, expected family(n)"));
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s.strip_suffix(')').ok_or_else(bad)?.get(open + 1..).ok_or_else(bad)?;
    let n = inner.trim().parse().map_err(|_| bad())?;
    Ok((&s[..open], n))
}

pub fn build_model(name: &str) -> Result<Box<dyn ComplexModel>> {
    ModelRegistry::default().build(name)
}
