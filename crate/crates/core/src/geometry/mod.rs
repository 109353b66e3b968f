//! Discretized weighted geometries: metric and potential families, weighted
//! measures, symmetric tensor fields and flow scenarios.
//!
//! The supported geometries are flat 1-D/2-D tori, Euclidean boxes, and 2-D
//! conformal tori. All metrics are scalar multiples of the identity per node
//! (`g = γ δ`), which keeps curvature closed forms exact and eigenvalue
//! normalizations trivial. Time derivatives of the families are analytic,
//! never finite-differenced in `t`.

pub mod curvature;

use crate::error::{ModelError, Result};
use crate::grid::{DomainKind, GridSpec};
use crate::scalar::{sq, Scalar};

/// Effective (Bakry-Emery) dimension: finite `m`, or the `m = ∞` sentinel in
/// which the `∇φ⊗∇φ/(m-n)` correction vanishes exactly.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum EffectiveDim<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> EffectiveDim<S> {
    pub fn is_finite(&self) -> bool {
        matches!(self, EffectiveDim::Finite(_))
    }

    pub fn finite_value(&self) -> Option<S> {
        match self {
            EffectiveDim::Finite(m) => Some(*m),
            EffectiveDim::Infinite => None,
        }
    }
}

/// Time-dependent metric family `g(t)`.
///
/// Every variant is conformally flat with a single scalar factor:
/// `g = δ`, `g = c(t) δ` with `c(t) = e^{2λt}`, or `g = e^{2a(t,x)} δ` with
/// `a(t,x) = A e^{-δt} cos(k·x + θ)` on the 2-D torus.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricFamily<S> {
    StaticEuclidean,
    IsotropicScaling { lambda: S },
    Conformal2d { amplitude: S, freq: [i32; 2], phase: S, decay: S },
}

impl<S: Scalar> MetricFamily<S> {
    /// Whether `∂_t g` vanishes identically.
    pub fn is_time_dependent(&self) -> bool {
        match self {
            MetricFamily::StaticEuclidean => false,
            MetricFamily::IsotropicScaling { lambda } => *lambda != S::zero(),
            MetricFamily::Conformal2d { amplitude, decay, .. } => {
                *amplitude != S::zero() && *decay != S::zero()
            }
        }
    }

    /// Scaling factor `c(t) = e^{2λt}` (1 for the other variants).
    pub fn scale(&self, t: S) -> S {
        match self {
            MetricFamily::IsotropicScaling { lambda } => (S::real(2.0) * *lambda * t).exp(),
            _ => S::one(),
        }
    }

    fn conformal_a(&self, t: S, x: [S; 2]) -> S {
        match self {
            MetricFamily::Conformal2d { amplitude, freq, phase, decay } => {
                let k_dot_x = S::real(freq[0] as f64) * x[0] + S::real(freq[1] as f64) * x[1];
                *amplitude * (-*decay * t).exp() * (k_dot_x + *phase).cos()
            }
            _ => S::zero(),
        }
    }

    fn conformal_a_dot(&self, t: S, x: [S; 2]) -> S {
        match self {
            MetricFamily::Conformal2d { decay, .. } => -*decay * self.conformal_a(t, x),
            _ => S::zero(),
        }
    }

    /// Pointwise scalar factor `γ(t, x)` with `g = γ δ`.
    pub fn gamma(&self, t: S, x: [S; 2]) -> S {
        match self {
            MetricFamily::StaticEuclidean => S::one(),
            MetricFamily::IsotropicScaling { .. } => self.scale(t),
            MetricFamily::Conformal2d { .. } => (S::real(2.0) * self.conformal_a(t, x)).exp(),
        }
    }

    /// Pointwise factor of `∂_t g = γ̇ δ`.
    pub fn gamma_dot(&self, t: S, x: [S; 2]) -> S {
        match self {
            MetricFamily::StaticEuclidean => S::zero(),
            MetricFamily::IsotropicScaling { lambda } => {
                S::real(2.0) * *lambda * self.scale(t)
            }
            MetricFamily::Conformal2d { .. } => {
                S::real(2.0) * self.conformal_a_dot(t, x) * self.gamma(t, x)
            }
        }
    }

    /// `Tr_g ∂_t g = n γ̇ / γ`.
    pub fn trace_g_dg_dt(&self, n: usize, t: S, x: [S; 2]) -> S {
        match self {
            MetricFamily::StaticEuclidean => S::zero(),
            MetricFamily::IsotropicScaling { lambda } => {
                S::real(n as f64) * S::real(2.0) * *lambda
            }
            MetricFamily::Conformal2d { .. } => {
                S::real(n as f64) * S::real(2.0) * self.conformal_a_dot(t, x)
            }
        }
    }

    /// `½ log(det g(t,x) / det g(0,x))`, the fixed-measure compensator.
    pub fn half_log_det_ratio(&self, n: usize, t: S, x: [S; 2]) -> S {
        let half_n = S::real(n as f64) * S::real(0.5);
        match self {
            MetricFamily::StaticEuclidean => S::zero(),
            MetricFamily::IsotropicScaling { lambda } => {
                half_n * S::real(2.0) * *lambda * t
            }
            MetricFamily::Conformal2d { .. } => {
                half_n * S::real(2.0) * (self.conformal_a(t, x) - self.conformal_a(S::zero(), x))
            }
        }
    }

    /// Per-node metric representation at time `t` (multiplier or conformal
    /// factor field). Errors when the scale factor degenerates.
    pub fn metric_at(&self, grid: &GridSpec<S>, t: S) -> Result<MetricAt<S>> {
        match self {
            MetricFamily::StaticEuclidean => Ok(MetricAt::Flat),
            MetricFamily::IsotropicScaling { .. } => {
                let c = self.scale(t);
                if !(c > S::zero()) || !c.is_finite() {
                    return Err(ModelError::DegenerateMetric { t: t.as_f64(), value: c.as_f64() });
                }
                Ok(MetricAt::Scaled { c })
            }
            MetricFamily::Conformal2d { .. } => {
                let a = grid.sample(|x| self.conformal_a(t, x));
                for &ai in &a {
                    let gamma = (S::real(2.0) * ai).exp();
                    if !(gamma > S::zero()) || !gamma.is_finite() {
                        return Err(ModelError::DegenerateMetric {
                            t: t.as_f64(),
                            value: gamma.as_f64(),
                        });
                    }
                }
                Ok(MetricAt::Conformal { a })
            }
        }
    }
}

/// Metric at a fixed time, reduced to its per-node scalar factor.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricAt<S> {
    Flat,
    Scaled { c: S },
    Conformal { a: Vec<S> },
}

impl<S: Scalar> MetricAt<S> {
    /// Scalar factor `γ` at a node (`g = γ δ`).
    pub fn gamma(&self, idx: usize) -> S {
        match self {
            MetricAt::Flat => S::one(),
            MetricAt::Scaled { c } => *c,
            MetricAt::Conformal { a } => (S::real(2.0) * a[idx]).exp(),
        }
    }

    /// `√det g = γ^{n/2}`.
    pub fn sqrt_det(&self, idx: usize, n: usize) -> S {
        let g = self.gamma(idx);
        match n {
            1 => g.sqrt(),
            _ => g,
        }
    }

    /// Conformal exponent field, when present.
    pub fn conformal_exponent(&self) -> Option<&[S]> {
        match self {
            MetricAt::Conformal { a } => Some(a),
            _ => None,
        }
    }
}

/// One trigonometric term `amplitude · cos(freq·x + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigTerm<S> {
    pub amplitude: S,
    pub freq: [i32; 2],
    pub phase: S,
}

/// Spatial part of the potential, drawn from a closed catalog so that
/// time derivatives and boundary decay stay analytic.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind<S> {
    Zero,
    /// `κ ‖x‖²/2`, plus `(n/2) log(2π/κ)` when `normalized` (so that the
    /// associated Gaussian measure has unit mass). `κ` is signed: negative
    /// values express the expanding drift convention.
    Quadratic { kappa: S, normalized: bool },
    TrigSum { terms: Vec<TrigTerm<S>> },
}

impl<S: Scalar> PotentialKind<S> {
    pub fn eval(&self, n: usize, x: [S; 2]) -> S {
        match self {
            PotentialKind::Zero => S::zero(),
            PotentialKind::Quadratic { kappa, normalized } => {
                let norm_sq = sq(x[0]) + if n == 2 { sq(x[1]) } else { S::zero() };
                let mut v = *kappa * norm_sq * S::real(0.5);
                if *normalized {
                    let half_n = S::real(n as f64) * S::real(0.5);
                    v = v + half_n * (S::real(2.0) * S::PI() / *kappa).ln();
                }
                v
            }
            PotentialKind::TrigSum { terms } => {
                let mut v = S::zero();
                for term in terms {
                    let k_dot_x =
                        S::real(term.freq[0] as f64) * x[0] + S::real(term.freq[1] as f64) * x[1];
                    v = v + term.amplitude * (k_dot_x + term.phase).cos();
                }
                v
            }
        }
    }

    /// Whether the potential is constant in space (the `m = n` convention).
    pub fn is_constant(&self) -> bool {
        match self {
            PotentialKind::Zero => true,
            PotentialKind::Quadratic { kappa, .. } => *kappa == S::zero(),
            PotentialKind::TrigSum { terms } => {
                terms.iter().all(|term| term.amplitude == S::zero())
            }
        }
    }
}

/// Whether the potential tracks the metric so the measure stays fixed.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CompatibilityMode {
    /// `∂_t φ = ½ Tr_g ∂_t g` enforced via the exact compensator
    /// `½ log(det g(t)/det g(0))`; the weighted measure is `t`-independent.
    FixedMeasure,
    /// The potential is the static base; the measure may drift in `t`.
    Free,
}

/// Time-dependent potential `φ(t, x)` = static base + optional compensator.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialFamily<S> {
    pub base: PotentialKind<S>,
    pub mode: CompatibilityMode,
}

impl<S: Scalar> PotentialFamily<S> {
    pub fn phi(&self, metric: &MetricFamily<S>, n: usize, t: S, x: [S; 2]) -> S {
        let base = self.base.eval(n, x);
        match self.mode {
            CompatibilityMode::Free => base,
            CompatibilityMode::FixedMeasure => base + metric.half_log_det_ratio(n, t, x),
        }
    }

    pub fn dphi_dt(&self, metric: &MetricFamily<S>, n: usize, t: S, x: [S; 2]) -> S {
        match self.mode {
            CompatibilityMode::Free => S::zero(),
            CompatibilityMode::FixedMeasure => {
                metric.trace_g_dg_dt(n, t, x) * S::real(0.5)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.base.is_constant()
    }
}

/// Per-node quadrature weights realizing `dμ = e^{-φ} √(det g) h^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure<S> {
    pub weights: Vec<S>,
}

impl<S: Scalar> WeightedMeasure<S> {
    pub fn total(&self) -> S {
        self.weights.iter().copied().sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: &[S]) -> S {
        f.iter().zip(&self.weights).map(|(fi, wi)| *fi * *wi).sum()
    }

    /// `⟨u, v⟩_μ`.
    pub fn inner(&self, u: &[S], v: &[S]) -> S {
        u.iter().zip(v).zip(&self.weights).map(|((ui, vi), wi)| *ui * *vi * *wi).sum()
    }

    pub fn norm(&self, u: &[S]) -> S {
        self.inner(u, u).sqrt()
    }
}

/// Quadrature weights of `μ(t)`: `w_i = e^{-φ(t,x_i)} √(det g(t,x_i)) h^n`.
pub fn measure_weights<S: Scalar>(
    grid: &GridSpec<S>,
    metric: &MetricFamily<S>,
    potential: &PotentialFamily<S>,
    t: S,
) -> Result<WeightedMeasure<S>> {
    let metric_at = metric.metric_at(grid, t)?;
    let n = grid.dim();
    let cell = grid.cell_volume();
    let mut weights = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let x = grid.pos(idx);
        let w = (-potential.phi(metric, n, t, x)).exp() * metric_at.sqrt_det(idx, n) * cell;
        if !(w > S::zero()) || !w.is_finite() {
            return Err(ModelError::InvalidScenario(format!(
                "measure weight degenerated to {} at node {idx}",
                w.as_f64()
            )));
        }
        weights.push(w);
    }
    Ok(WeightedMeasure { weights })
}

/// Node-wise symmetric 2-tensor field, stored as upper triangle
/// (`xy`/`yy` stay empty in 1-D).
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField<S> {
    pub dim: usize,
    pub xx: Vec<S>,
    pub xy: Vec<S>,
    pub yy: Vec<S>,
}

impl<S: Scalar> SymTensorField<S> {
    pub fn zeros(dim: usize, len: usize) -> Self {
        let off = if dim == 2 { vec![S::zero(); len] } else { Vec::new() };
        SymTensorField { dim, xx: vec![S::zero(); len], xy: off.clone(), yy: off }
    }

    pub fn len(&self) -> usize {
        self.xx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xx.is_empty()
    }

    /// Adds `v δ` at every node.
    pub fn add_scaled_identity(&mut self, v: S) {
        for x in self.xx.iter_mut() {
            *x = *x + v;
        }
        for y in self.yy.iter_mut() {
            *y = *y + v;
        }
    }

    /// Adds a per-node multiple of the identity.
    pub fn add_diag_field(&mut self, field: &[S], scale: S) {
        for (x, f) in self.xx.iter_mut().zip(field) {
            *x = *x + scale * *f;
        }
        for (y, f) in self.yy.iter_mut().zip(field) {
            *y = *y + scale * *f;
        }
    }

    pub fn sub_assign(&mut self, other: &SymTensorField<S>, scale: S) {
        for (a, b) in self.xx.iter_mut().zip(&other.xx) {
            *a = *a - scale * *b;
        }
        for (a, b) in self.xy.iter_mut().zip(&other.xy) {
            *a = *a - scale * *b;
        }
        for (a, b) in self.yy.iter_mut().zip(&other.yy) {
            *a = *a - scale * *b;
        }
    }

    /// Squared tensor norm with respect to `g = γ δ`:
    /// `|T|²_g = γ^{-2} Σ_{ij} T_{ij}²`.
    pub fn norm_sq_g(&self, idx: usize, gamma: S) -> S {
        let raw = match self.dim {
            1 => sq(self.xx[idx]),
            _ => sq(self.xx[idx]) + S::real(2.0) * sq(self.xy[idx]) + sq(self.yy[idx]),
        };
        raw / sq(gamma)
    }

    /// `T(∇u, ∇u)` with covariant gradient components `(gx, gy)` and metric
    /// factor `γ`: contravariant lifting contributes `γ^{-2}`.
    pub fn quad_with_gradient(&self, idx: usize, gx: S, gy: S, gamma: S) -> S {
        let raw = match self.dim {
            1 => self.xx[idx] * sq(gx),
            _ => {
                self.xx[idx] * sq(gx)
                    + S::real(2.0) * self.xy[idx] * gx * gy
                    + self.yy[idx] * sq(gy)
            }
        };
        raw / sq(gamma)
    }

    /// Minimum eigenvalue of `g^{-1} T` at a node (`g = γ δ`).
    pub fn min_eig_generalized(&self, idx: usize, gamma: S) -> S {
        match self.dim {
            1 => self.xx[idx] / gamma,
            _ => {
                let half = S::real(0.5);
                let tr_half = (self.xx[idx] + self.yy[idx]) * half;
                let disc = (sq((self.xx[idx] - self.yy[idx]) * half) + sq(self.xy[idx])).sqrt();
                (tr_half - disc) / gamma
            }
        }
    }

    /// Eigenvector of the minimum eigenvalue at a node (unit length).
    pub fn min_eig_vector(&self, idx: usize) -> [S; 2] {
        if self.dim == 1 {
            return [S::one(), S::zero()];
        }
        let lam = self.min_eig_generalized(idx, S::one());
        // (A - λI) v = 0; pick the row with the larger residual entry.
        let r1 = [self.xx[idx] - lam, self.xy[idx]];
        let r2 = [self.xy[idx], self.yy[idx] - lam];
        let n1 = sq(r1[0]) + sq(r1[1]);
        let n2 = sq(r2[0]) + sq(r2[1]);
        let row = if n1 >= n2 { r1 } else { r2 };
        let norm = (sq(row[0]) + sq(row[1])).sqrt();
        if norm == S::zero() {
            return [S::one(), S::zero()];
        }
        // v orthogonal to the chosen row
        [-row[1] / norm, row[0] / norm]
    }
}

/// A complete experiment: grid, families, constants, time grid and datum.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowScenario<S> {
    pub grid: GridSpec<S>,
    pub metric: MetricFamily<S>,
    pub potential: PotentialFamily<S>,
    pub k: S,
    pub m: EffectiveDim<S>,
    pub t_grid: Vec<S>,
    pub initial_datum: Vec<S>,
}

impl<S: Scalar> FlowScenario<S> {
    pub fn new(
        grid: GridSpec<S>,
        metric: MetricFamily<S>,
        potential: PotentialFamily<S>,
        k: S,
        m: EffectiveDim<S>,
        t_grid: Vec<S>,
        initial_datum: Vec<S>,
    ) -> Result<Self> {
        let scenario = FlowScenario { grid, metric, potential, k, m, t_grid, initial_datum };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        let n = self.grid.dim();
        if let MetricFamily::Conformal2d { freq, .. } = &self.metric {
            if n != 2 || self.grid.domain() != DomainKind::PeriodicTorus {
                return Err(ModelError::InvalidScenario(
                    "conformal metrics require the 2-D torus".into(),
                ));
            }
            if freq == &[0, 0] {
                return Err(ModelError::InvalidScenario(
                    "conformal frequency must be nonzero".into(),
                ));
            }
        }
        if let PotentialKind::Quadratic { kappa, normalized } = &self.potential.base {
            if self.grid.domain() != DomainKind::EuclideanBox && *kappa != S::zero() {
                return Err(ModelError::InvalidScenario(
                    "quadratic potentials require a box domain".into(),
                ));
            }
            if *normalized && !(*kappa > S::zero()) {
                return Err(ModelError::InvalidScenario(
                    "normalized quadratic potentials require kappa > 0".into(),
                ));
            }
            // Wall decay rule: e^{-φ} must drop below 1e-12 at the wall so
            // the reflecting truncation emulates completeness.
            if *kappa > S::zero() {
                let wall = self.grid.extent() - self.grid.h() * S::real(0.5);
                let drop = *kappa * sq(wall) * S::real(0.5);
                if drop < S::real(1e12f64.ln()) {
                    return Err(ModelError::InvalidScenario(format!(
                        "box too narrow for the Gaussian potential: e^{{-κR²/2}} = {:.2e} > 1e-12",
                        (-drop.as_f64()).exp()
                    )));
                }
            }
        }
        if self.t_grid.len() < 5 {
            return Err(ModelError::InvalidScenario("t_grid needs at least 5 points".into()));
        }
        if !(self.t_grid[0] >= S::zero()) {
            return Err(ModelError::InvalidScenario("t_grid must start at t >= 0".into()));
        }
        for pair in self.t_grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(ModelError::InvalidScenario(
                    "t_grid must be strictly increasing".into(),
                ));
            }
        }
        if self.initial_datum.len() != self.grid.len() {
            return Err(ModelError::InvalidScenario(format!(
                "initial datum has {} nodes, grid has {}",
                self.initial_datum.len(),
                self.grid.len()
            )));
        }
        let min = self.initial_datum.iter().copied().fold(S::infinity(), S::min);
        if !(min > S::zero()) {
            return Err(ModelError::NonPositiveField { min: min.as_f64() });
        }
        match self.m {
            EffectiveDim::Infinite => {}
            EffectiveDim::Finite(m) => {
                let nf = S::real(n as f64);
                if m < nf {
                    return Err(ModelError::InvalidDimension { m: m.as_f64(), n });
                }
                if m == nf && !self.potential.is_constant() {
                    return Err(ModelError::ConventionViolation);
                }
            }
        }
        if !self.k.is_finite() {
            return Err(ModelError::InvalidScenario("K must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Scenario window `[0, T]`.
    pub fn t_end(&self) -> S {
        *self.t_grid.last().unwrap()
    }

    pub fn check_time(&self, t: S) -> Result<()> {
        if t < S::zero() || t > self.t_end() {
            return Err(ModelError::TimeOutOfRange {
                t: t.as_f64(),
                lo: 0.0,
                hi: self.t_end().as_f64(),
            });
        }
        Ok(())
    }

    /// Whether `μ(t)` is independent of `t` (static data or compensated φ).
    pub fn is_measure_fixed(&self) -> bool {
        !self.metric.is_time_dependent()
            || self.potential.mode == CompatibilityMode::FixedMeasure
    }

    pub fn measure_at(&self, t: S) -> Result<WeightedMeasure<S>> {
        measure_weights(&self.grid, &self.metric, &self.potential, t)
    }

    pub fn metric_at(&self, t: S) -> Result<MetricAt<S>> {
        self.metric.metric_at(&self.grid, t)
    }

    /// Sampled potential at time `t`.
    pub fn phi_field(&self, t: S) -> Vec<S> {
        let n = self.grid.dim();
        self.grid.sample(|x| self.potential.phi(&self.metric, n, t, x))
    }

    /// `max_x |∂_t φ - ½ Tr_g ∂_t g|` at time `t`: zero exactly for
    /// compensated potentials, the missing compensator size otherwise.
    pub fn compatibility_residual(&self, t: S) -> S {
        let n = self.grid.dim();
        let mut worst = S::zero();
        for idx in 0..self.grid.len() {
            let x = self.grid.pos(idx);
            let lhs = self.potential.dphi_dt(&self.metric, n, t, x);
            let rhs = self.metric.trace_g_dg_dt(n, t, x) * S::real(0.5);
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }
}

/// Samples a Gaussian bump `exp(-|x - c|²/(2σ²))` (no normalization).
/// Displacements wrap on the torus.
pub fn gaussian_datum<S: Scalar>(grid: &GridSpec<S>, sigma: S, center: [S; 2]) -> Vec<S> {
    grid.sample(|x| {
        let d = displacement(grid, x, center);
        (-(sq(d[0]) + sq(d[1])) / (S::real(2.0) * sq(sigma))).exp()
    })
}

/// Narrow Gaussian surrogate of a point mass with a `1e-12` positivity
/// floor; far tails of an unfloored narrow Gaussian underflow to exact
/// zeros, which the positivity contract forbids.
pub fn near_delta_datum<S: Scalar>(grid: &GridSpec<S>, sigma: S, center: [S; 2]) -> Vec<S> {
    let mut f = gaussian_datum(grid, sigma, center);
    let floor = S::real(1e-12);
    for v in f.iter_mut() {
        *v = v.max(floor);
    }
    f
}

/// Shortest displacement `x - c`, wrapped on the torus.
pub fn displacement<S: Scalar>(grid: &GridSpec<S>, x: [S; 2], c: [S; 2]) -> [S; 2] {
    let mut d = [x[0] - c[0], x[1] - c[1]];
    if grid.domain() == DomainKind::PeriodicTorus {
        let period = grid.extent();
        for di in d.iter_mut().take(grid.dim()) {
            // wrap into (-period/2, period/2]
            *di = *di - (*di / period).round() * period;
        }
    }
    if grid.dim() == 1 {
        d[1] = S::zero();
    }
    d
}

/// Scales `f` so that `∫ f dμ = 1`.
pub fn normalize_datum<S: Scalar>(f: &mut [S], measure: &WeightedMeasure<S>) {
    let mass = measure.integrate(f);
    for v in f.iter_mut() {
        *v = *v / mass;
    }
}
