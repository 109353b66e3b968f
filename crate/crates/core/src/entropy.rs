//! Entropy functionals along the heat flow: the rate-normalized entropy gap
//! `H_K`, the `W_K`-entropy, their time derivatives and dissipation
//! functionals, and the dimensional `H_{m,K}` / `W_{m,K}` pair.
//!
//! Two discretizations of the Fisher information coexist deliberately:
//! the Dirichlet-form value `Σ_e κ_e (u_j - u_i)(log u_j - log u_i)` equals
//! `-d/dt Ent(P_t f | μ)` exactly for the semi-discrete flow and is used
//! inside every derivative identity, while the pointwise-stencil quadrature
//! `∫ |∇u|²_g / u dμ` is the direct transcription and is reported alongside.

use crate::error::{ModelError, Result};
use crate::geometry::curvature::super_flow_tensor;
use crate::geometry::{EffectiveDim, FlowScenario, PotentialKind, WeightedMeasure};
use crate::operators::fields::{grad_inner, gradient, gradient_sq, metric_hessian};
use crate::operators::propagator::HeatPropagator;
use crate::operators::{assemble_witten, WittenOperator};
use crate::scalar::{sq, Scalar};

/// The coefficient family `C_K, D_K, β_K, α_K` with the exact algebra
/// `D - C = 2K`, `C + D = 2K coth(Kt)`, `D' = -C D` preserved through the
/// `K → 0` seam by a three-term series below `|Kt| = 1e-4`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EntropyCoefficients<S> {
    pub k: S,
}

impl<S: Scalar> EntropyCoefficients<S> {
    const SERIES_THRESHOLD: f64 = 1e-4;

    pub fn new(k: S) -> Self {
        EntropyCoefficients { k }
    }

    fn series_branch(&self, t: S) -> bool {
        (self.k * t).abs() < S::real(Self::SERIES_THRESHOLD)
    }

    /// The numerically small member of the pair `{C_K, D_K}`: `C_K` for
    /// `K > 0` and `D_K = C_{-K}` for `K < 0`, both equal to
    /// `a/(e^{at} - 1)` with `a = 2|K|`. The large member is recovered by
    /// adding `2|K|`, so `D - C = 2K` stays exact without cancellation.
    fn small_member(&self, t: S) -> S {
        if self.k == S::zero() {
            return t.recip();
        }
        let a = S::real(2.0) * self.k.abs();
        if self.series_branch(t) {
            let w = a * t;
            return (S::one() - w * S::real(0.5) + sq(w) / S::real(12.0)) / t;
        }
        a / (a * t).exp_m1()
    }

    /// `C_K(t) = 2K/(e^{2Kt} - 1)`, `C_0(t) = 1/t`.
    pub fn c(&self, t: S) -> S {
        if self.k >= S::zero() {
            self.small_member(t)
        } else {
            self.small_member(t) - S::real(2.0) * self.k
        }
    }

    /// `D_K(t) = 2K/(1 - e^{-2Kt}) = C_K(t) + 2K` (the identity is kept
    /// exact in every branch).
    pub fn d(&self, t: S) -> S {
        if self.k >= S::zero() {
            self.small_member(t) + S::real(2.0) * self.k
        } else {
            self.small_member(t)
        }
    }

    /// `D_K'(t) = -C_K(t) D_K(t)`.
    pub fn d_prime(&self, t: S) -> S {
        -self.c(t) * self.d(t)
    }

    /// `β_K(t) = sinh(2Kt)/(2K)`, `β_0(t) = t`.
    pub fn beta(&self, t: S) -> S {
        if self.k == S::zero() {
            return t;
        }
        if self.series_branch(t) {
            let z2 = sq(S::real(2.0) * self.k * t);
            return t * (S::one() + z2 / S::real(6.0) + sq(z2) / S::real(120.0));
        }
        (S::real(2.0) * self.k * t).sinh() / (S::real(2.0) * self.k)
    }

    /// `α_K(t) = K tanh(Kt)` (continuous through `K = 0` as written).
    pub fn alpha(&self, t: S) -> S {
        self.k * (self.k * t).tanh()
    }

    /// `2K coth(Kt) = C_K(t) + D_K(t)`, which is `2/t` at `K = 0`.
    pub fn two_k_coth(&self, t: S) -> S {
        self.c(t) + self.d(t)
    }

    /// `1 + e^{2Kt}`, the `W_K`-dissipation prefactor.
    pub fn w_prefactor(&self, t: S) -> S {
        S::one() + (S::real(2.0) * self.k * t).exp()
    }

    /// `(1 - e^{-2Kτ})/(2K) = 1/D_K(τ)`, the log-Sobolev rate.
    pub fn lsi_coeff(&self, tau: S) -> S {
        self.d(tau).recip()
    }

    /// `2K/(e^{2Kτ} - 1) = C_K(τ)`, the reversal log-Sobolev rate.
    pub fn rlsi_coeff(&self, tau: S) -> S {
        self.c(tau)
    }

    /// `(1 - e^{-2Kτ})/K = 2/D_K(τ)`, the Poincaré rate.
    pub fn poincare_coeff(&self, tau: S) -> S {
        S::real(2.0) / self.d(tau)
    }

    /// `K/(e^{2Kτ} - 1) = C_K(τ)/2`, the reversal Poincaré rate.
    pub fn rpoincare_coeff(&self, tau: S) -> S {
        self.c(tau) * S::real(0.5)
    }
}

/// `Ent(f | μ) = ∫ f log f dμ` for strictly positive `f`.
pub fn entropy_rel<S: Scalar>(f: &[S], measure: &WeightedMeasure<S>) -> Result<S> {
    let min = f.iter().copied().fold(S::infinity(), S::min);
    if !(min > S::zero()) {
        return Err(ModelError::NonPositiveField { min: min.as_f64() });
    }
    Ok(f.iter()
        .zip(&measure.weights)
        .map(|(fi, wi)| *fi * fi.ln() * *wi)
        .sum())
}

/// Pointwise-stencil Fisher information `∫ |∇f|²_g / f dμ(t)`.
pub fn fisher<S: Scalar>(scenario: &FlowScenario<S>, t: S, f: &[S]) -> Result<S> {
    let min = f.iter().copied().fold(S::infinity(), S::min);
    if !(min > S::zero()) {
        return Err(ModelError::NonPositiveField { min: min.as_f64() });
    }
    let metric = scenario.metric_at(t)?;
    let mu = scenario.measure_at(t)?;
    let gsq = gradient_sq(&scenario.grid, &metric, f);
    Ok(gsq
        .iter()
        .zip(f)
        .zip(&mu.weights)
        .map(|((g, fi), wi)| *g / *fi * *wi)
        .sum())
}

/// Dirichlet-form Fisher information `Γ(u, log u)` summed over edges; this
/// is `-d/dt Ent(P_t f|μ)` exactly for the semi-discrete flow.
pub fn fisher_dirichlet<S: Scalar>(op: &WittenOperator<S>, u: &[S]) -> S {
    let log_u: Vec<S> = u.iter().map(|v| v.ln()).collect();
    op.dirichlet(u, &log_u)
}

/// Sampled entropy curve `t ↦ (H_K, W_K, derivatives, dissipation terms)`.
#[derive(Clone, Debug)]
pub struct EntropyCurve<S> {
    pub k: S,
    pub t: Vec<S>,
    pub h_k: Vec<S>,
    /// 4th-order finite-difference `dH_K/dt` (one-sided at the ends).
    pub dh_fd: Vec<S>,
    /// Analytic identity `D_K(t)[Fisher + C_K(t)(Ent(u) - Ent(f))]`.
    pub dh_identity: Vec<S>,
    pub d2h_fd: Vec<S>,
    pub w_k: Vec<S>,
    pub dw_fd: Vec<S>,
    /// `β_K (d²H + 2K coth(Kt) dH)`, the ODE form of `dW_K/dt`.
    pub dw_identity: Vec<S>,
    /// `-(1+e^{2Kt})[∫|∇²log u|² u dμ + ∫(½∂_t g + Ric(L) - Kg)(∇log u)² u dμ]`.
    pub rhs_w: Vec<S>,
    /// Dirichlet-form Fisher information.
    pub fisher: Vec<S>,
    /// Pointwise-stencil Fisher information.
    pub fisher_pointwise: Vec<S>,
    /// `∫ |∇² log P_t f|²_g P_t f dμ`.
    pub hessian_integral: Vec<S>,
    /// `∫ (½∂_t g + Ric(L) - Kg)(∇log u, ∇log u) P_t f dμ`.
    pub curvature_integral: Vec<S>,
    /// Samples whose time derivatives use one-sided (lower-accuracy) stencils.
    pub edge_flag: Vec<bool>,
}

/// Uniform spacing of a sample grid, or the non-uniformity error.
fn uniform_spacing<S: Scalar>(t: &[S]) -> Result<S> {
    let d = t[1] - t[0];
    for pair in t.windows(2) {
        let step = pair[1] - pair[0];
        if (step - d).abs() > S::real(1e-9) * d.abs() {
            return Err(ModelError::NonUniformTimeGrid);
        }
    }
    Ok(d)
}

/// 4th-order first derivative on uniform samples; one-sided at the ends.
fn fd_first<S: Scalar>(v: &[S], d: S) -> Vec<S> {
    let n = v.len();
    let r = |x: f64| S::real(x);
    let mut out = vec![S::zero(); n];
    let denom = (r(12.0) * d).recip();
    for k in 0..n {
        out[k] = if k >= 2 && k + 2 < n {
            (v[k - 2] - r(8.0) * v[k - 1] + r(8.0) * v[k + 1] - v[k + 2]) * denom
        } else if k == 0 {
            (r(-25.0) * v[0] + r(48.0) * v[1] - r(36.0) * v[2] + r(16.0) * v[3] - r(3.0) * v[4])
                * denom
        } else if k == 1 {
            (r(-3.0) * v[0] - r(10.0) * v[1] + r(18.0) * v[2] - r(6.0) * v[3] + v[4]) * denom
        } else if k == n - 2 {
            -((r(-3.0) * v[n - 1] - r(10.0) * v[n - 2] + r(18.0) * v[n - 3] - r(6.0) * v[n - 4]
                + v[n - 5])
                * denom)
        } else {
            -((r(-25.0) * v[n - 1] + r(48.0) * v[n - 2] - r(36.0) * v[n - 3]
                + r(16.0) * v[n - 4]
                - r(3.0) * v[n - 5])
                * denom)
        };
    }
    out
}

/// 4th-order second derivative on uniform samples; one-sided at the ends
/// (3-point fallback when only five samples are available).
fn fd_second<S: Scalar>(v: &[S], d: S) -> Vec<S> {
    let n = v.len();
    let r = |x: f64| S::real(x);
    let mut out = vec![S::zero(); n];
    let denom = (r(12.0) * d * d).recip();
    let d2 = (d * d).recip();
    for k in 0..n {
        out[k] = if k >= 2 && k + 2 < n {
            (-v[k - 2] + r(16.0) * v[k - 1] - r(30.0) * v[k] + r(16.0) * v[k + 1] - v[k + 2])
                * denom
        } else if n >= 6 && k == 0 {
            (r(45.0) * v[0] - r(154.0) * v[1] + r(214.0) * v[2] - r(156.0) * v[3]
                + r(61.0) * v[4]
                - r(10.0) * v[5])
                * denom
        } else if n >= 6 && k == 1 {
            (r(10.0) * v[0] - r(15.0) * v[1] - r(4.0) * v[2] + r(14.0) * v[3] - r(6.0) * v[4]
                + v[5])
                * denom
        } else if n >= 6 && k == n - 2 {
            (r(10.0) * v[n - 1] - r(15.0) * v[n - 2] - r(4.0) * v[n - 3] + r(14.0) * v[n - 4]
                - r(6.0) * v[n - 5]
                + v[n - 6])
                * denom
        } else if n >= 6 {
            (r(45.0) * v[n - 1] - r(154.0) * v[n - 2] + r(214.0) * v[n - 3] - r(156.0) * v[n - 4]
                + r(61.0) * v[n - 5]
                - r(10.0) * v[n - 6])
                * denom
        } else if k == 0 {
            (r(2.0) * v[0] - r(5.0) * v[1] + r(4.0) * v[2] - v[3]) * d2
        } else if k == 1 {
            (v[0] - r(2.0) * v[1] + v[2]) * d2
        } else if k == n - 2 {
            (v[n - 3] - r(2.0) * v[n - 2] + v[n - 1]) * d2
        } else {
            (r(2.0) * v[n - 1] - r(5.0) * v[n - 2] + r(4.0) * v[n - 3] - v[n - 4]) * d2
        };
    }
    out
}

/// The two dissipation integrals at time `t` for the evolved field `u`:
/// `(∫|∇²log u|²_g u dμ, ∫(½∂_t g + Ric(L) - Kg)(∇log u)² u dμ)`.
pub fn dissipation_integrals<S: Scalar>(
    scenario: &FlowScenario<S>,
    t: S,
    u: &[S],
) -> Result<(S, S)> {
    let grid = &scenario.grid;
    let metric = scenario.metric_at(t)?;
    let mu = scenario.measure_at(t)?;
    let log_u: Vec<S> = u.iter().map(|v| v.ln()).collect();
    let hess = metric_hessian(grid, &metric, &log_u);
    let tensor = super_flow_tensor(scenario, t, EffectiveDim::Infinite, scenario.k)?;
    let [gx, gy] = gradient(grid, &log_u);
    let mut hess_int = S::zero();
    let mut curv_int = S::zero();
    for i in 0..u.len() {
        let gamma = metric.gamma(i);
        let gyi = if grid.dim() == 2 { gy[i] } else { S::zero() };
        let uw = u[i] * mu.weights[i];
        hess_int = hess_int + hess.norm_sq_g(i, gamma) * uw;
        curv_int = curv_int + tensor.quad_with_gradient(i, gx[i], gyi, gamma) * uw;
    }
    Ok((hess_int, curv_int))
}

/// `dW_K/dt` dissipation functional at `t` for the supplied `u = P_{0,t} f`.
pub fn rhs_w_at<S: Scalar>(scenario: &FlowScenario<S>, t: S, u: &[S]) -> Result<S> {
    let coeffs = EntropyCoefficients::new(scenario.k);
    let (hess_int, curv_int) = dissipation_integrals(scenario, t, u)?;
    Ok(-coeffs.w_prefactor(t) * (hess_int + curv_int))
}

/// Convenience form of [`rhs_w_at`] that evolves the scenario datum itself.
pub fn rhs_w_dissipation<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    t: S,
) -> Result<S> {
    let u = prop.evolve(&scenario.initial_datum, S::zero(), t)?;
    rhs_w_at(scenario, t, &u)
}

/// Builds the full entropy curve of a scenario: `H_K` and `W_K` with both
/// finite-difference and identity-form derivatives, Fisher information and
/// the dissipation integrals at every sample of the (uniform) `t_grid`.
pub fn h_entropy_curve<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
) -> Result<EntropyCurve<S>> {
    if !scenario.is_measure_fixed() {
        return Err(ModelError::InvalidScenario(
            "entropy curves require a fixed measure (static data or compensated potential)".into(),
        ));
    }
    let t_grid = &scenario.t_grid;
    if !(t_grid[0] > S::zero()) {
        return Err(ModelError::InvalidScenario(
            "entropy curves need t_grid[0] > 0 (the rate coefficients are singular at t = 0)"
                .into(),
        ));
    }
    let spacing = uniform_spacing(t_grid)?;
    let coeffs = EntropyCoefficients::new(scenario.k);
    let mu = scenario.measure_at(t_grid[0])?;
    let f = &scenario.initial_datum;
    let ent_f = entropy_rel(f, &mu)?;
    let path = prop.evolve_path(f, S::zero(), t_grid)?;

    let n = t_grid.len();
    let mut curve = EntropyCurve {
        k: scenario.k,
        t: t_grid.clone(),
        h_k: Vec::with_capacity(n),
        dh_fd: Vec::new(),
        dh_identity: Vec::with_capacity(n),
        d2h_fd: Vec::new(),
        w_k: Vec::with_capacity(n),
        dw_fd: Vec::new(),
        dw_identity: Vec::with_capacity(n),
        rhs_w: Vec::with_capacity(n),
        fisher: Vec::with_capacity(n),
        fisher_pointwise: Vec::with_capacity(n),
        hessian_integral: Vec::with_capacity(n),
        curvature_integral: Vec::with_capacity(n),
        edge_flag: (0..n).map(|k| k < 2 || k + 2 >= n).collect(),
    };

    for (idx, &t) in t_grid.iter().enumerate() {
        let u = &path[idx];
        let op = assemble_witten(scenario, t)?;
        let ent_u = entropy_rel(u, &mu)?;
        let fisher_dir = fisher_dirichlet(&op, u);
        curve.fisher.push(fisher_dir);
        curve.fisher_pointwise.push(fisher(scenario, t, u)?);
        curve.h_k.push(coeffs.d(t) * (ent_f - ent_u));
        curve.dh_identity.push(coeffs.d(t) * (fisher_dir + coeffs.c(t) * (ent_u - ent_f)));
        let (hess_int, curv_int) = dissipation_integrals(scenario, t, u)?;
        curve.hessian_integral.push(hess_int);
        curve.curvature_integral.push(curv_int);
        curve.rhs_w.push(-coeffs.w_prefactor(t) * (hess_int + curv_int));
    }

    curve.dh_fd = fd_first(&curve.h_k, spacing);
    curve.d2h_fd = fd_second(&curve.h_k, spacing);
    curve.w_k = (0..n)
        .map(|i| curve.h_k[i] + coeffs.beta(t_grid[i]) * curve.dh_fd[i])
        .collect();
    curve.dw_fd = fd_first(&curve.w_k, spacing);
    curve.dw_identity = (0..n)
        .map(|i| {
            coeffs.beta(t_grid[i])
                * (curve.d2h_fd[i] + coeffs.two_k_coth(t_grid[i]) * curve.dh_fd[i])
        })
        .collect();
    Ok(curve)
}

/// Alias of [`h_entropy_curve`]: the `W_K` columns are always populated.
pub fn w_entropy_curve<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
) -> Result<EntropyCurve<S>> {
    h_entropy_curve(scenario, prop)
}

fn check_interior<S: Scalar>(curve: &EntropyCurve<S>, idx: usize) -> Result<()> {
    if idx < 2 || idx + 2 >= curve.t.len() {
        return Err(ModelError::TooNearGridEnd { index: idx });
    }
    Ok(())
}

/// Left side of the second-order entropy inequality at sample `idx`:
/// `d²H/dt² + 2K coth(Kt) dH/dt + 2 D_K(t) ∫|∇²log u|² u dμ`.
pub fn second_order_lhs<S: Scalar>(curve: &EntropyCurve<S>, idx: usize) -> Result<S> {
    check_interior(curve, idx)?;
    let coeffs = EntropyCoefficients::new(curve.k);
    let t = curve.t[idx];
    Ok(curve.d2h_fd[idx]
        + coeffs.two_k_coth(t) * curve.dh_fd[idx]
        + S::real(2.0) * coeffs.d(t) * curve.hessian_integral[idx])
}

/// Identity form of the same quantity:
/// `-2 D_K(t) ∫ (½∂_t g + Ric(L) - Kg)(∇log u)² u dμ`.
pub fn second_order_identity_rhs<S: Scalar>(curve: &EntropyCurve<S>, idx: usize) -> Result<S> {
    check_interior(curve, idx)?;
    let coeffs = EntropyCoefficients::new(curve.k);
    Ok(S::real(-2.0) * coeffs.d(curve.t[idx]) * curve.curvature_integral[idx])
}

/// Dimensional second-order quantity at sample `idx`:
/// `d²H/dt² + 2K coth(Kt) dH/dt + (2 D_K(t)/m) Fisher²`, which is
/// nonpositive under `CD(K, m)` (with the Dirichlet-form Fisher, so the
/// Cauchy-Schwarz step behind it is discretely exact for unit-mass data).
pub fn km_second_order_lhs<S: Scalar>(curve: &EntropyCurve<S>, m: S, n: usize, idx: usize) -> Result<S> {
    let nf = S::real(n as f64);
    if !(m > nf) {
        return Err(ModelError::InvalidDimension { m: m.as_f64(), n });
    }
    check_interior(curve, idx)?;
    let coeffs = EntropyCoefficients::new(curve.k);
    let t = curve.t[idx];
    Ok(curve.d2h_fd[idx]
        + coeffs.two_k_coth(t) * curve.dh_fd[idx]
        + S::real(2.0) * coeffs.d(t) / m * sq(curve.fisher[idx]))
}

/// `-(m/2)(1 + log(4πt) + Kt + K²t²/6)`, the dimensional normalizer of
/// `H_{m,K}` (`K` in the drift convention of the kernel).
pub fn hmk_normalizer<S: Scalar>(m: S, k: S, t: S) -> S {
    let kt = k * t;
    -m * S::real(0.5)
        * (S::one() + (S::real(4.0) * S::PI() * t).ln() + kt + sq(kt) / S::real(6.0))
}

/// PDE time at which a Gaussian of standard deviation `sigma` equals the
/// drift-`k` kernel: solves `v_k(t) = σ²`.
pub fn near_delta_effective_time<S: Scalar>(k: S, sigma: S) -> S {
    if k == S::zero() {
        sq(sigma) * S::real(0.5)
    } else {
        (k * sq(sigma)).ln_1p() / (S::real(2.0) * k)
    }
}

/// Sampled dimensional entropy curve for a fundamental-solution surrogate.
#[derive(Clone, Debug)]
pub struct HmkCurve<S> {
    pub m: S,
    /// Drift-convention `K` entering the normalizer (`-κ` for a quadratic
    /// potential `κ‖x‖²/2`).
    pub kernel_k: S,
    pub t: Vec<S>,
    pub h_mk: Vec<S>,
    pub dh_fd: Vec<S>,
    /// `W_{m,K} = d/dt (t H_{m,K}) = H_{m,K} + t dH_{m,K}/dt`.
    pub w_mk: Vec<S>,
    pub dw_fd: Vec<S>,
    /// `Ent(u(t) | μ)` samples.
    pub ent_mu: Vec<S>,
    /// `t >= 10 h²`: samples where the near-delta surrogate is resolved.
    pub trusted: Vec<bool>,
}

/// Dimensional entropy curve `H_{m,K}, W_{m,K}` along the flow of a
/// fundamental-solution surrogate.
///
/// The scenario's `initial_datum` is interpreted as the state at
/// `t_grid[0]` (a narrow Gaussian surrogate placed at its kernel-consistent
/// effective time, see [`near_delta_effective_time`]), normalized to
/// `∫ u dμ = 1`. Requires a static box geometry with a zero or quadratic
/// potential, whose drift rate fixes the `K` of the normalizer.
pub fn hmk_wmk_curve<S: Scalar>(
    scenario: &FlowScenario<S>,
    m: S,
    prop: &HeatPropagator<S>,
) -> Result<HmkCurve<S>> {
    let n = scenario.dim();
    if m < S::real(n as f64) {
        return Err(ModelError::InvalidDimension { m: m.as_f64(), n });
    }
    if scenario.metric.is_time_dependent()
        || scenario.grid.domain() != crate::grid::DomainKind::EuclideanBox
    {
        return Err(ModelError::InvalidScenario(
            "H_{m,K} surrogates require a static box geometry".into(),
        ));
    }
    let kernel_k = match &scenario.potential.base {
        PotentialKind::Zero => S::zero(),
        PotentialKind::Quadratic { kappa, .. } => -*kappa,
        PotentialKind::TrigSum { .. } => {
            return Err(ModelError::InvalidScenario(
                "H_{m,K} requires a zero or quadratic potential (a kernel drift rate)".into(),
            ))
        }
    };
    let t_grid = &scenario.t_grid;
    if !(t_grid[0] > S::zero()) {
        return Err(ModelError::InvalidScenario("H_{m,K} needs t_grid[0] > 0".into()));
    }
    let spacing = uniform_spacing(t_grid)?;
    let mu = scenario.measure_at(t_grid[0])?;
    let mass = mu.integrate(&scenario.initial_datum);
    if (mass - S::one()).abs() > S::real(1e-8) {
        return Err(ModelError::NotNormalized { mass: mass.as_f64() });
    }
    let path = prop.evolve_path(&scenario.initial_datum, t_grid[0], t_grid)?;
    let h_sq = sq(scenario.grid.h());
    let mut ent_mu = Vec::with_capacity(t_grid.len());
    let mut h_mk = Vec::with_capacity(t_grid.len());
    for (idx, &t) in t_grid.iter().enumerate() {
        let ent = entropy_rel(&path[idx], &mu)?;
        ent_mu.push(ent);
        h_mk.push(-ent + hmk_normalizer(m, kernel_k, t));
    }
    let dh_fd = fd_first(&h_mk, spacing);
    let w_mk: Vec<S> = (0..t_grid.len()).map(|i| h_mk[i] + t_grid[i] * dh_fd[i]).collect();
    let dw_fd = fd_first(&w_mk, spacing);
    Ok(HmkCurve {
        m,
        kernel_k,
        t: t_grid.clone(),
        h_mk,
        dh_fd,
        w_mk,
        dw_fd,
        ent_mu,
        trusted: t_grid.iter().map(|&t| t >= S::real(10.0) * h_sq).collect(),
    })
}

/// Optional diagnostic: the full dimensional `W_{m,K}`-dissipation
/// functional
/// `-2t ∫ [|∇²f_w - (K/2 + 1/2t) g|² + (½∂_t g + Ric_{m,n}(L) + Kg)(∇f_w)²] u dμ
///  - (2t/(m-n)) ∫ |⟨∇φ, ∇f_w⟩ + (m-n)(1+Kt)/(2t)|² u dμ`
/// with `f_w = -log u - (m/2) log(4πt)`. Not acceptance-gated; it assumes
/// `u` is close to the exact fundamental solution.
pub fn wmk_dissipation_diagnostic<S: Scalar>(
    scenario: &FlowScenario<S>,
    t: S,
    u: &[S],
    m: S,
    kernel_k: S,
) -> Result<S> {
    let grid = &scenario.grid;
    let n = grid.dim();
    let nf = S::real(n as f64);
    if m < nf {
        return Err(ModelError::InvalidDimension { m: m.as_f64(), n });
    }
    let metric = scenario.metric_at(t)?;
    let mu = scenario.measure_at(t)?;
    let half = S::real(0.5);
    let log_norm = (S::real(4.0) * S::PI() * t).ln() * m * half;
    let f_w: Vec<S> = u.iter().map(|v| -v.ln() - log_norm).collect();
    let mut hess = metric_hessian(grid, &metric, &f_w);
    let shift = kernel_k * half + (S::real(2.0) * t).recip();
    for i in 0..u.len() {
        let g = metric.gamma(i);
        hess.xx[i] = hess.xx[i] - shift * g;
        if n == 2 {
            hess.yy[i] = hess.yy[i] - shift * g;
        }
    }
    let m_dim = if m == nf { EffectiveDim::Infinite } else { EffectiveDim::Finite(m) };
    // ½∂_t g + Ric_{m,n}(L) + K g = super-flow tensor at level -K
    let tensor = super_flow_tensor(scenario, t, m_dim, -kernel_k)?;
    let [gx, gy] = gradient(grid, &f_w);
    let mut quad_terms = S::zero();
    for i in 0..u.len() {
        let gamma = metric.gamma(i);
        let gyi = if n == 2 { gy[i] } else { S::zero() };
        let uw = u[i] * mu.weights[i];
        quad_terms = quad_terms
            + (hess.norm_sq_g(i, gamma) + tensor.quad_with_gradient(i, gx[i], gyi, gamma)) * uw;
    }
    let mut total = S::real(-2.0) * t * quad_terms;
    if m > nf {
        let phi = scenario.phi_field(t);
        let cross = grad_inner(grid, &metric, &phi, &f_w);
        let offset = (m - nf) * (S::one() + kernel_k * t) / (S::real(2.0) * t);
        let mut drift_term = S::zero();
        for i in 0..u.len() {
            drift_term = drift_term + sq(cross[i] + offset) * u[i] * mu.weights[i];
        }
        total = total - S::real(2.0) * t / (m - nf) * drift_term;
    }
    Ok(total)
}
