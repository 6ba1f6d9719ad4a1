//! The adapted complex structure on `T(G/K) = G x_K p` in slice charts.
//!
//! A point `[(g, X)]` is written in the chart `psi(a, v) = [(exp a, v)]` with
//! `a, v` given in the `-B`-orthonormal basis of `p`. Tangent vectors at
//! `[(g, X)]` are pairs `(Y, V)`, `Y` in `g` acting by left-invariant
//! translation and `V` in `p`, modulo the gauge directions `(W, [X, W])`,
//! `W` in `k`. Both components are stored in algebra coordinates.
//!
//! The structure is
//!
//! ```text
//! J(Y, V) = ( -T^{-1} (V - ad_X Y_k),  T Y_p ),   T = (sin ad_X / ad_X)^{-1} cos ad_X
//! ```
//!
//! On representatives with `Y_k = 0` this is `(-T^{-1} V, T Y)`. The `Y_k`
//! term makes the map annihilate gauge vectors, so it descends to the
//! quotient; [`StenzelStructure::j_literal`] keeps the variant with `T` in
//! place of `T^{-1}` in that term for comparison.

use nalgebra::{DMatrix, DVector};

use crate::chart::{nijenhuis_component, nijenhuis_max, nijenhuis_tensor};
use crate::error::{LabError, Result};
use crate::lie::{left_log_derivative, AdFunction, SpectralCalculus};
use crate::linalg::{expm, logm, max_abs, CMatrix};
use crate::symmetric::SymmetricPairData;

pub const DEFAULT_CHART_RADIUS: f64 = 1.0;

/// Chart coordinates `(a, v)` in the orthonormal `p` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub a: DVector<f64>,
    pub v: DVector<f64>,
}

impl ChartPoint {
    pub fn new(a: DVector<f64>, v: DVector<f64>) -> Self {
        assert_eq!(a.len(), v.len(), "slice and fibre coordinates differ in length");
        ChartPoint { a, v }
    }

    pub fn origin(n: usize) -> Self {
        ChartPoint::new(DVector::zeros(n), DVector::zeros(n))
    }

    /// Splits `x = (a, v)`.
    pub fn from_coords(x: &DVector<f64>) -> Self {
        let n = x.len() / 2;
        ChartPoint::new(x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
    }

    pub fn coords(&self) -> DVector<f64> {
        let n = self.a.len();
        DVector::from_fn(2 * n, |i, _| if i < n { self.a[i] } else { self.v[i - n] })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

/// Tangent representative `(Y, V)` in algebra coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentRep {
    pub y: DVector<f64>,
    pub v: DVector<f64>,
}

impl TangentRep {
    pub fn new(y: DVector<f64>, v: DVector<f64>) -> Self {
        TangentRep { y, v }
    }

    fn stacked(&self) -> DVector<f64> {
        let d = self.y.len();
        DVector::from_fn(2 * d, |i, _| if i < d { self.y[i] } else { self.v[i - d] })
    }

    pub fn from_stacked(s: &DVector<f64>) -> Self {
        let d = s.len() / 2;
        TangentRep::new(s.rows(0, d).into_owned(), s.rows(d, d).into_owned())
    }

    pub fn scale(&self, c: f64) -> Self {
        TangentRep::new(&self.y * c, &self.v * c)
    }
}

impl std::ops::Sub for &TangentRep {
    type Output = TangentRep;
    fn sub(self, rhs: &TangentRep) -> TangentRep {
        TangentRep::new(&self.y - &rhs.y, &self.v - &rhs.v)
    }
}

impl std::ops::Add for &TangentRep {
    type Output = TangentRep;
    fn add(self, rhs: &TangentRep) -> TangentRep {
        TangentRep::new(&self.y + &rhs.y, &self.v + &rhs.v)
    }
}

#[derive(Clone, Debug)]
pub struct StenzelStructure {
    pub pair: SymmetricPairData,
    pub radius: f64,
    proj_k: DMatrix<f64>,
    proj_p: DMatrix<f64>,
    metric: DMatrix<f64>,
}

impl StenzelStructure {
    pub fn new(pair: SymmetricPairData) -> Self {
        Self::with_radius(pair, DEFAULT_CHART_RADIUS)
    }

    pub fn with_radius(pair: SymmetricPairData, radius: f64) -> Self {
        let proj_k = pair.proj_k();
        let proj_p = pair.proj_p();
        let metric = pair.algebra.metric();
        StenzelStructure { pair, radius, proj_k, proj_p, metric }
    }

    /// `n = dim p`, the complex dimension.
    pub fn n(&self) -> usize {
        self.pair.p_dim()
    }

    fn g_dim(&self) -> usize {
        self.pair.algebra.dim()
    }

    /// Algebra coordinates of the element of `p` with orthonormal coordinates `c`.
    pub fn p_element(&self, c: &DVector<f64>) -> DVector<f64> {
        self.pair.p_sub.basis() * c
    }

    pub fn p_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.pair.p_sub.coordinates(&self.pair.algebra, x)
    }

    pub fn fibre_element(&self, point: &ChartPoint) -> DVector<f64> {
        self.p_element(&point.v)
    }

    pub fn check_point(&self, point: &ChartPoint) -> Result<()> {
        let norm = point.a.norm();
        if norm > self.radius {
            return Err(LabError::ChartRadiusExceeded { norm, radius: self.radius });
        }
        Ok(())
    }

    /// Representatives of `d/da_i`, `d/dv_j` at `[(exp a, v)]`, in that order.
    pub fn chart_tangent_basis(&self, point: &ChartPoint) -> Result<Vec<TangentRep>> {
        self.check_point(point)?;
        let alg = &self.pair.algebra;
        let d = left_log_derivative(alg, &self.p_element(&point.a))?;
        let zero = DVector::zeros(self.g_dim());
        let p = self.pair.p_sub.basis();
        let mut out = Vec::with_capacity(2 * self.n());
        for i in 0..self.n() {
            out.push(TangentRep::new(&d * p.column(i), zero.clone()));
        }
        for j in 0..self.n() {
            out.push(TangentRep::new(zero.clone(), p.column(j).into_owned()));
        }
        Ok(out)
    }

    fn stenzel_ops(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let sc = SpectralCalculus::new(&self.pair.algebra, x)?;
        Ok((sc.apply(AdFunction::Stenzel), sc.apply(AdFunction::StenzelInverse)))
    }

    /// `J` at `[(g, X)]` on the representative `w`; `x` in algebra coordinates.
    pub fn j(&self, x: &DVector<f64>, w: &TangentRep) -> Result<TangentRep> {
        let (t, t_inv) = self.stenzel_ops(x)?;
        Ok(self.apply_j(x, &t, &t_inv, w))
    }

    fn apply_j(&self, x: &DVector<f64>, t: &DMatrix<f64>, t_inv: &DMatrix<f64>, w: &TangentRep) -> TangentRep {
        let ad = self.pair.algebra.ad(x);
        let yk = &self.proj_k * &w.y;
        let yp = &self.proj_p * &w.y;
        let y_new = -(t_inv * (&w.v - &ad * yk));
        let v_new = t * yp;
        TangentRep::new(y_new, v_new)
    }

    /// Variant with `+T ad_X Y_k` in the first component; not gauge invariant.
    pub fn j_literal(&self, x: &DVector<f64>, w: &TangentRep) -> Result<TangentRep> {
        let (t, t_inv) = self.stenzel_ops(x)?;
        let ad = self.pair.algebra.ad(x);
        let yk = &self.proj_k * &w.y;
        let yp = &self.proj_p * &w.y;
        Ok(TangentRep::new(-(&t_inv * &w.v) + &t * (ad * yk), t * yp))
    }

    /// Columns `(W_i, [X, W_i])` for an orthonormal basis `W_i` of `k`, stacked.
    pub fn gauge_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let k = self.pair.k_sub.basis();
        let ad = self.pair.algebra.ad(x);
        let d = self.g_dim();
        let mut m = DMatrix::zeros(2 * d, k.ncols());
        m.view_mut((0, 0), (d, k.ncols())).copy_from(k);
        m.view_mut((d, 0), (d, k.ncols())).copy_from(&(ad * k));
        m
    }

    fn product_metric(&self) -> DMatrix<f64> {
        let d = self.g_dim();
        let mut g = DMatrix::zeros(2 * d, 2 * d);
        g.view_mut((0, 0), (d, d)).copy_from(&self.metric);
        g.view_mut((d, d), (d, d)).copy_from(&self.metric);
        g
    }

    /// Representative orthogonal (product `-B` metric) to the gauge directions.
    pub fn canonical(&self, x: &DVector<f64>, w: &TangentRep) -> Result<TangentRep> {
        let gb = self.gauge_basis(x);
        if gb.ncols() == 0 {
            return Ok(w.clone());
        }
        let g = self.product_metric();
        let s = w.stacked();
        let normal = gb.transpose() * &g * &gb;
        let rhs = gb.transpose() * &g * &s;
        let coeff = normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| LabError::degenerate("gauge reduction", "singular gauge Gram matrix"))?;
        Ok(TangentRep::from_stacked(&(s - gb * coeff)))
    }

    /// Norm of `w1 - w2` modulo gauge.
    pub fn gauge_distance(&self, x: &DVector<f64>, w1: &TangentRep, w2: &TangentRep) -> Result<f64> {
        let c = self.canonical(x, &(w1 - w2))?;
        let alg = &self.pair.algebra;
        Ok((alg.norm(&c.y).powi(2) + alg.norm(&c.v).powi(2)).sqrt())
    }

    /// Square system `[chart basis | gauge]` in `(Y, p-coords of V)` rows.
    fn reduction_system(&self, point: &ChartPoint, basis: &[TangentRep]) -> DMatrix<f64> {
        let d = self.g_dim();
        let n = self.n();
        let x = self.fibre_element(point);
        let gb = self.gauge_basis(&x);
        let cols = 2 * n + gb.ncols();
        let mut m = DMatrix::zeros(d + n, cols);
        for (c, b) in basis.iter().enumerate() {
            m.view_mut((0, c), (d, 1)).copy_from(&b.y);
            m.view_mut((d, c), (n, 1)).copy_from(&self.p_coords(&b.v));
        }
        for c in 0..gb.ncols() {
            let w = gb.column(c);
            m.view_mut((0, 2 * n + c), (d, 1)).copy_from(&w.rows(0, d));
            m.view_mut((d, 2 * n + c), (n, 1)).copy_from(&self.p_coords(&w.rows(d, d).into_owned()));
        }
        m
    }

    /// Chart components of the tangent vector represented by the columns of `reps`.
    fn reduce(&self, point: &ChartPoint, basis: &[TangentRep], reps: &[TangentRep]) -> Result<DMatrix<f64>> {
        let d = self.g_dim();
        let n = self.n();
        let system = self.reduction_system(point, basis);
        let mut rhs = DMatrix::zeros(d + n, reps.len());
        for (c, r) in reps.iter().enumerate() {
            rhs.view_mut((0, c), (d, 1)).copy_from(&r.y);
            rhs.view_mut((d, c), (n, 1)).copy_from(&self.p_coords(&r.v));
        }
        let sol = system.clone().lu().solve(&rhs).ok_or_else(|| {
            let cond = crate::linalg::column_conditioning(&system);
            LabError::degenerate(
                "chart reduction",
                format!("singular reduction system (sigma_min/sigma_max = {cond:.3e})"),
            )
        })?;
        Ok(sol.rows(0, 2 * n).into_owned())
    }

    /// Chart vector of the tangent vector represented by `w` at `point`.
    pub fn rep_to_chart(&self, point: &ChartPoint, w: &TangentRep) -> Result<DVector<f64>> {
        let basis = self.chart_tangent_basis(point)?;
        Ok(self.reduce(point, &basis, std::slice::from_ref(w))?.column(0).into_owned())
    }

    /// Matrix of `J` in the coordinate basis `(d/da, d/dv)`.
    pub fn j_in_chart(&self, point: &ChartPoint) -> Result<DMatrix<f64>> {
        let basis = self.chart_tangent_basis(point)?;
        let x = self.fibre_element(point);
        let (t, t_inv) = self.stenzel_ops(&x)?;
        let images: Vec<TangentRep> = basis.iter().map(|b| self.apply_j(&x, &t, &t_inv, b)).collect();
        self.reduce(point, &basis, &images)
    }

    pub fn j_field(&self) -> impl Fn(&DVector<f64>) -> Result<DMatrix<f64>> + '_ {
        move |x: &DVector<f64>| self.j_in_chart(&ChartPoint::from_coords(x))
    }

    fn check_margin(&self, point: &ChartPoint, h: f64) -> Result<()> {
        let margin = self.radius - point.a.norm();
        if margin < 2.0 * h {
            return Err(LabError::StepTooLarge { step: h, margin });
        }
        Ok(())
    }

    /// Max-norm of `N(d_i, d_j)` by central differences of the chart `J` field.
    pub fn nijenhuis_residual(&self, point: &ChartPoint, (i, j): (usize, usize), h: f64) -> Result<f64> {
        self.check_margin(point, h)?;
        let tensor = nijenhuis_tensor(&self.j_field(), &point.coords(), h)?;
        Ok(nijenhuis_component(&tensor, i, j))
    }

    /// Max over all coordinate pairs.
    pub fn nijenhuis_max_residual(&self, point: &ChartPoint, h: f64) -> Result<f64> {
        self.check_margin(point, h)?;
        Ok(nijenhuis_max(&nijenhuis_tensor(&self.j_field(), &point.coords(), h)?))
    }

    /// Matrix group element `exp(a)` for `a` in orthonormal `p` coordinates.
    pub fn group_element(&self, a: &DVector<f64>) -> CMatrix {
        expm(&self.pair.algebra.to_matrix(&self.p_element(a)))
    }

    /// Chart coordinates of `h . psi(point)` for `h = exp(b)`, `b` in `g`.
    ///
    /// Uses the Cartan decomposition `h exp(a) = exp(a') k` with
    /// `a' = log(g sigma(g)^{-1}) / 2`; then `[(exp(a') k, v)] = [(exp a', Ad_k v)]`.
    pub fn translate(&self, b: &DVector<f64>, point: &ChartPoint) -> Result<ChartPoint> {
        let alg = &self.pair.algebra;
        let g = expm(&alg.to_matrix(b)) * self.group_element(&point.a);
        let s = &self.pair.group_involution;
        let s_inv = s.clone().try_inverse().expect("involution matrix is invertible");
        let g_inv = g.clone().try_inverse().ok_or_else(|| LabError::Computation("singular group element".into()))?;
        let sigma_g_inv = s * g_inv * &s_inv;
        let log = logm(&(&g * sigma_g_inv))?;
        let a_new = alg.from_matrix(&log) * 0.5;
        let k = expm(&alg.to_matrix(&(-&a_new))) * &g;
        let k_inv = k.clone().try_inverse().ok_or_else(|| LabError::Computation("singular isotropy element".into()))?;
        let v_new = alg.from_matrix(&(&k * alg.to_matrix(&self.fibre_element(point)) * k_inv));
        Ok(ChartPoint::new(self.p_coords(&a_new), self.p_coords(&v_new)))
    }

    /// `max |DPhi J(x) - J(Phi x) DPhi|` for the chart expression `Phi` of the
    /// left translation by `exp(b)`; `DPhi` by central differences with step `eps`.
    pub fn equivariance_residual(&self, point: &ChartPoint, b: &DVector<f64>, eps: f64) -> Result<f64> {
        let phi = |x: &DVector<f64>| self.translate(b, &ChartPoint::from_coords(x)).map(|p| p.coords());
        let x = point.coords();
        let dphi = crate::chart::jacobian(&phi, &x, eps)?;
        let image = ChartPoint::from_coords(&phi(&x)?);
        let lhs = &dphi * self.j_in_chart(point)?;
        let rhs = self.j_in_chart(&image)? * &dphi;
        Ok(max_abs(&(lhs - rhs)))
    }

    /// Max deviation of the left-log-derivative basis from a difference quotient
    /// of the matrix chart map `a -> exp(a)`.
    pub fn chart_tangent_fd_residual(&self, point: &ChartPoint, eps: f64) -> Result<f64> {
        let alg = &self.pair.algebra;
        let basis = self.chart_tangent_basis(point)?;
        let g_inv = self
            .group_element(&point.a)
            .try_inverse()
            .ok_or_else(|| LabError::Computation("singular group element".into()))?;
        let mut worst = 0.0_f64;
        for i in 0..self.n() {
            let mut plus = point.a.clone();
            plus[i] += eps;
            let mut minus = point.a.clone();
            minus[i] -= eps;
            let diff =
                (self.group_element(&plus) - self.group_element(&minus)) / num_complex::Complex64::new(2.0 * eps, 0.0);
            let y = alg.from_matrix(&(&g_inv * diff));
            worst = worst.max(crate::linalg::max_abs_vec(&(y - &basis[i].y)));
        }
        Ok(worst)
    }
}
