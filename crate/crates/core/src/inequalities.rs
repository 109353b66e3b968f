//! Margin checks for the semigroup functional inequalities, the Harnack
//! bounds, and the interpolation identities behind their proofs.
//!
//! Every inequality is evaluated pointwise over the grid and summarized by
//! the minimum margin (right side minus left side in its natural
//! orientation) over a family of positive test functions. Verdicts allow a
//! fixed `1e-8` slack plus a scenario-declared discretization allowance
//! `C·h²` scaled by the squared amplitude of the family, since margins are
//! quadratic in the test-function deviation.

use crate::entropy::EntropyCoefficients;
use crate::error::{ModelError, Result};
use crate::geometry::curvature::residual_minimizer;
use crate::geometry::{displacement, FlowScenario};
use crate::grid::{DomainKind, GridSpec};
use crate::operators::fields::gradient_sq;
use crate::operators::propagator::HeatPropagator;
use crate::scalar::{sq, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator used to draw test functions.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    /// `exp` of a band-limited trigonometric sum (torus-friendly).
    RandomTrig,
    /// Positive floor plus a few Gaussian bumps (wall-friendly on boxes).
    GaussianBumps,
    /// `1 + ε v` with `∇v` concentrated along the worst residual
    /// eigen-direction at the minimizing node.
    NearEigen,
}

/// Seeded family of positive test functions with `ε <= f <= 1/ε`.
#[derive(Clone, Debug)]
pub struct TestFamily<S> {
    pub count: usize,
    pub generator: GeneratorKind,
    /// Positivity floor `ε`.
    pub floor: S,
    pub seed: u64,
    /// Linearization amplitude of the near-eigen construction.
    pub near_eigen_amplitude: S,
}

impl<S: Scalar> TestFamily<S> {
    pub fn new(generator: GeneratorKind, count: usize, seed: u64) -> Self {
        TestFamily {
            count,
            generator,
            floor: S::real(1e-3),
            seed,
            near_eigen_amplitude: S::real(1e-2),
        }
    }

    /// Natural amplitude scale of the family's deviations from constants;
    /// inequality margins (and their stencil errors) scale with its square.
    pub fn amplitude_scale(&self) -> S {
        match self.generator {
            GeneratorKind::NearEigen => self.near_eigen_amplitude,
            _ => S::one(),
        }
    }
}

/// Draws the family over the scenario grid. The near-eigen generator reads
/// the scenario's residual minimizer at `t = 0`.
pub fn generate_family<S: Scalar>(
    family: &TestFamily<S>,
    scenario: &FlowScenario<S>,
) -> Result<Vec<Vec<S>>> {
    let grid = &scenario.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
    let mut out = Vec::with_capacity(family.count);
    match family.generator {
        GeneratorKind::RandomTrig => {
            let waves: &[[i32; 2]] = if grid.dim() == 1 {
                &[[1, 0], [2, 0], [3, 0]]
            } else {
                &[[1, 0], [0, 1], [1, 1], [2, 0], [0, 2]]
            };
            let cap = S::real(0.9) * family.floor.recip().ln();
            for _ in 0..family.count {
                let coeffs: Vec<(S, S, [i32; 2])> = waves
                    .iter()
                    .map(|w| {
                        let norm = f64::from(w[0].pow(2) + w[1].pow(2));
                        let scale = 0.6 / norm;
                        (
                            S::real(rng.gen_range(-1.0..1.0) * scale),
                            S::real(rng.gen_range(-1.0..1.0) * scale),
                            *w,
                        )
                    })
                    .collect();
                let raw = grid.sample(|x| {
                    let mut s = S::zero();
                    for (a, b, w) in &coeffs {
                        let arg = S::real(w[0] as f64) * x[0] + S::real(w[1] as f64) * x[1];
                        s = s + *a * arg.cos() + *b * arg.sin();
                    }
                    s
                });
                let max = raw.iter().fold(S::zero(), |m, v| m.max(v.abs()));
                let scale = if max > cap { cap / max } else { S::one() };
                out.push(raw.iter().map(|s| (*s * scale).exp()).collect());
            }
        }
        GeneratorKind::GaussianBumps => {
            if family.floor > S::real(0.25) {
                return Err(ModelError::InvalidScenario(
                    "gaussian-bumps floor must be <= 0.25 to respect the 1/ε cap".into(),
                ));
            }
            let width = match grid.domain() {
                DomainKind::PeriodicTorus => grid.extent(),
                DomainKind::EuclideanBox => grid.extent() * S::real(2.0),
            };
            for _ in 0..family.count {
                let bumps: Vec<([S; 2], S, S)> = (0..3)
                    .map(|_| {
                        let coord = |rng: &mut ChaCha8Rng| match grid.domain() {
                            DomainKind::PeriodicTorus => {
                                S::real(rng.gen_range(0.0..1.0)) * width
                            }
                            DomainKind::EuclideanBox => {
                                S::real(rng.gen_range(-0.55..0.55)) * width
                            }
                        };
                        let c = [coord(&mut rng), coord(&mut rng)];
                        let sigma = S::real(rng.gen_range(0.06..0.14)) * width;
                        let amp = S::real(rng.gen_range(0.3..1.0));
                        (c, sigma, amp)
                    })
                    .collect();
                out.push(grid.sample(|x| {
                    let mut v = family.floor;
                    for (c, sigma, amp) in &bumps {
                        let d = displacement(grid, x, *c);
                        v = v + *amp
                            * (-(sq(d[0]) + sq(d[1])) / (S::real(2.0) * sq(*sigma))).exp();
                    }
                    v
                }));
            }
        }
        GeneratorKind::NearEigen => {
            let min = residual_minimizer(scenario, S::zero(), scenario.m, scenario.k)?;
            let center = grid.pos(min.node);
            let eig = min.eigvec;
            let width = match grid.domain() {
                DomainKind::PeriodicTorus => grid.extent(),
                DomainKind::EuclideanBox => grid.extent() * S::real(2.0),
            };
            let sig_min = (S::real(5.0) * grid.h()).max(S::real(0.03) * width);
            let sig_max = S::real(0.15) * width;
            let eps = family.near_eigen_amplitude;
            for i in 0..family.count {
                let frac = if family.count > 1 {
                    S::real(i as f64 / (family.count - 1) as f64)
                } else {
                    S::zero()
                };
                let sigma = sig_min * (sig_max / sig_min).powf(frac);
                out.push(grid.sample(|x| {
                    let d = displacement(grid, x, center);
                    let along = (d[0] * eig[0] + d[1] * eig[1]) / sigma;
                    let v = along * (-(sq(d[0]) + sq(d[1])) / (S::real(2.0) * sq(sigma))).exp();
                    S::one() + eps * v
                }));
            }
        }
    }
    for f in &out {
        debug_assert!(f
            .iter()
            .all(|v| *v >= family.floor * S::real(0.999) && *v <= family.floor.recip()));
    }
    Ok(out)
}

/// Margin summary for one inequality over a test family.
#[derive(Clone, Debug)]
pub struct InequalityReport<S> {
    pub id: String,
    /// Per-test-function margin (pointwise minimum over nodes).
    pub margins: Vec<S>,
    pub min_margin: S,
    pub mean_margin: S,
    pub slack: S,
    /// `min_margin >= -slack`.
    pub pass: bool,
}

impl<S: Scalar> InequalityReport<S> {
    pub fn from_margins(id: impl Into<String>, margins: Vec<S>, slack: S) -> Self {
        let min = margins.iter().copied().fold(S::infinity(), S::min);
        let mean = margins.iter().copied().sum::<S>() / S::real(margins.len().max(1) as f64);
        InequalityReport { id: id.into(), min_margin: min, mean_margin: mean, slack, pass: min >= -slack, margins }
    }
}

/// Verdict slack: `1e-8 + allowance · h² · scale²` where `scale` is the
/// family amplitude.
pub fn margin_slack<S: Scalar>(grid: &GridSpec<S>, allowance: S, scale: S) -> S {
    S::real(1e-8) + allowance * sq(grid.h()) * sq(scale)
}

/// Evolved payloads shared by the five Theorem-type inequality checks for a
/// fixed `(s, t)` pair: a single batched evolution covers all of them.
pub struct SemigroupSnapshot<S> {
    pub s: S,
    pub t: S,
    pub pf: Vec<Vec<S>>,
    pub p_flogf: Vec<Vec<S>>,
    pub p_f2: Vec<Vec<S>>,
    /// `P_{s,t}(|∇f|²_{g(s)})`.
    pub p_gradsq: Vec<Vec<S>>,
    /// `P_{s,t}(|∇f|²_{g(s)}/f)`.
    pub p_fisher: Vec<Vec<S>>,
    /// `|∇ P_{s,t} f|²_{g(t)}`.
    pub grad_pf_sq: Vec<Vec<S>>,
}

/// Evolves the payload batch for `fields` from `s` to `t`.
pub fn evolve_snapshot<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    fields: &[Vec<S>],
) -> Result<SemigroupSnapshot<S>> {
    let grid = &scenario.grid;
    let metric_s = scenario.metric_at(s)?;
    let metric_t = scenario.metric_at(t)?;
    let mut payload = Vec::with_capacity(fields.len() * 5);
    for f in fields {
        let gsq = gradient_sq(grid, &metric_s, f);
        payload.push(f.clone());
        payload.push(f.iter().map(|v| *v * v.ln()).collect());
        payload.push(f.iter().map(|v| sq(*v)).collect());
        payload.push(gsq.clone());
        payload.push(gsq.iter().zip(f).map(|(g, v)| *g / *v).collect());
    }
    let evolved = prop.evolve_many(&payload, s, t)?;
    let mut snap = SemigroupSnapshot {
        s,
        t,
        pf: Vec::with_capacity(fields.len()),
        p_flogf: Vec::with_capacity(fields.len()),
        p_f2: Vec::with_capacity(fields.len()),
        p_gradsq: Vec::with_capacity(fields.len()),
        p_fisher: Vec::with_capacity(fields.len()),
        grad_pf_sq: Vec::with_capacity(fields.len()),
    };
    let mut iter = evolved.into_iter();
    for _ in 0..fields.len() {
        let pf = iter.next().unwrap();
        snap.grad_pf_sq.push(gradient_sq(grid, &metric_t, &pf));
        snap.pf.push(pf);
        snap.p_flogf.push(iter.next().unwrap());
        snap.p_f2.push(iter.next().unwrap());
        snap.p_gradsq.push(iter.next().unwrap());
        snap.p_fisher.push(iter.next().unwrap());
    }
    Ok(snap)
}

fn min_over_nodes<S: Scalar>(field: impl Iterator<Item = S>) -> S {
    field.fold(S::infinity(), S::min)
}

/// The five inequality kinds of the equivalence theorem, plus the
/// log-gradient estimate used inside its proof interpolation.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum InequalityKind {
    LogSobolev,
    ReversalLogSobolev,
    Poincare,
    ReversalPoincare,
    GradientEstimate,
    LogGradientEstimate,
}

impl InequalityKind {
    pub fn id(&self) -> &'static str {
        match self {
            InequalityKind::LogSobolev => "lsi",
            InequalityKind::ReversalLogSobolev => "rlsi",
            InequalityKind::Poincare => "poincare",
            InequalityKind::ReversalPoincare => "rpoincare",
            InequalityKind::GradientEstimate => "gradient-estimate",
            InequalityKind::LogGradientEstimate => "log-gradient-estimate",
        }
    }
}

/// Pointwise margin field (RHS - LHS) of one inequality for test function
/// index `i` of the snapshot.
pub fn margin_field<S: Scalar>(
    kind: InequalityKind,
    snap: &SemigroupSnapshot<S>,
    coeffs: &EntropyCoefficients<S>,
    i: usize,
) -> Vec<S> {
    let tau = snap.t - snap.s;
    let n = snap.pf[i].len();
    (0..n)
        .map(|x| {
            let pf = snap.pf[i][x];
            let gap_log = snap.p_flogf[i][x] - pf * pf.ln();
            let var = snap.p_f2[i][x] - sq(pf);
            match kind {
                InequalityKind::LogSobolev => {
                    coeffs.lsi_coeff(tau) * snap.p_fisher[i][x] - gap_log
                }
                InequalityKind::ReversalLogSobolev => {
                    coeffs.rlsi_coeff(tau) * gap_log - snap.grad_pf_sq[i][x] / pf
                }
                InequalityKind::Poincare => {
                    coeffs.poincare_coeff(tau) * snap.p_gradsq[i][x] - var
                }
                // Reversal Poincaré bounds |∇Pf|² (not |∇Pf|²/Pf: both sides
                // must be 2-homogeneous in f, as the ε²-linearization of the
                // reversal log-Sobolev inequality shows).
                InequalityKind::ReversalPoincare => {
                    coeffs.rpoincare_coeff(tau) * var - snap.grad_pf_sq[i][x]
                }
                InequalityKind::GradientEstimate => {
                    (S::real(-2.0) * coeffs.k * tau).exp() * snap.p_gradsq[i][x]
                        - snap.grad_pf_sq[i][x]
                }
                InequalityKind::LogGradientEstimate => {
                    (S::real(-2.0) * coeffs.k * tau).exp() * snap.p_fisher[i][x]
                        - snap.grad_pf_sq[i][x] / pf
                }
            }
        })
        .collect()
}

fn check_window<S: Scalar>(scenario: &FlowScenario<S>, s: S, t: S) -> Result<()> {
    scenario.check_time(s)?;
    scenario.check_time(t)?;
    if !(t > s) {
        return Err(ModelError::TimeOutOfRange {
            t: t.as_f64(),
            lo: s.as_f64(),
            hi: scenario.t_end().as_f64(),
        });
    }
    Ok(())
}

fn single_check<S: Scalar>(
    kind: InequalityKind,
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    check_window(scenario, s, t)?;
    let fields = generate_family(family, scenario)?;
    let snap = evolve_snapshot(scenario, prop, s, t, &fields)?;
    let coeffs = EntropyCoefficients::new(scenario.k);
    let slack = margin_slack(&scenario.grid, allowance, family.amplitude_scale());
    let margins: Vec<S> = (0..fields.len())
        .map(|i| min_over_nodes(margin_field(kind, &snap, &coeffs, i).into_iter()))
        .collect();
    Ok(InequalityReport::from_margins(kind.id(), margins, slack))
}

pub fn lsi_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    single_check(InequalityKind::LogSobolev, scenario, prop, s, t, family, allowance)
}

pub fn rlsi_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    single_check(InequalityKind::ReversalLogSobolev, scenario, prop, s, t, family, allowance)
}

pub fn poincare_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    single_check(InequalityKind::Poincare, scenario, prop, s, t, family, allowance)
}

pub fn rpoincare_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    single_check(InequalityKind::ReversalPoincare, scenario, prop, s, t, family, allowance)
}

pub fn gradient_estimate_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    single_check(InequalityKind::GradientEstimate, scenario, prop, s, t, family, allowance)
}

pub fn log_gradient_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<InequalityReport<S>> {
    single_check(InequalityKind::LogGradientEstimate, scenario, prop, s, t, family, allowance)
}

/// All five equivalence-theorem inequalities from one shared evolution.
pub fn theorem_suite<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t: S,
    family: &TestFamily<S>,
    allowance: S,
) -> Result<Vec<InequalityReport<S>>> {
    check_window(scenario, s, t)?;
    let fields = generate_family(family, scenario)?;
    let snap = evolve_snapshot(scenario, prop, s, t, &fields)?;
    let coeffs = EntropyCoefficients::new(scenario.k);
    let slack = margin_slack(&scenario.grid, allowance, family.amplitude_scale());
    let kinds = [
        InequalityKind::LogSobolev,
        InequalityKind::ReversalLogSobolev,
        InequalityKind::Poincare,
        InequalityKind::ReversalPoincare,
        InequalityKind::GradientEstimate,
    ];
    Ok(kinds
        .iter()
        .map(|kind| {
            let margins: Vec<S> = (0..fields.len())
                .map(|i| min_over_nodes(margin_field(*kind, &snap, &coeffs, i).into_iter()))
                .collect();
            InequalityReport::from_margins(kind.id(), margins, slack)
        })
        .collect())
}

/// Harnack margins for a family of bounded positive initial data.
#[derive(Clone, Debug)]
pub struct HarnackReport<S> {
    /// Sharp bound with constant `2K/(1 - e^{-2Kt})`.
    pub hh: InequalityReport<S>,
    /// Bound with constant `1/t + 2K`.
    pub ham: InequalityReport<S>,
    /// The algebraic dominance `(ham margin) >= (hh margin)` held at every
    /// node and sample without slack.
    pub dominance_exact: bool,
}

/// Checks both Harnack inequalities over the scenario's time grid.
///
/// The scenario must be a `(-K, ∞)`-super flow with `K >= 0`, declared via
/// `scenario.k = -K <= 0`; `A` is the discrete sup of each solution over the
/// full space-time sample set.
pub fn harnack_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    data: &[Vec<S>],
    allowance: S,
) -> Result<HarnackReport<S>> {
    if scenario.k > S::zero() {
        return Err(ModelError::InvalidScenario(
            "Harnack checks require scenario.k = -K <= 0 (a (-K,∞)-super flow)".into(),
        ));
    }
    let k = -scenario.k;
    let coeffs = EntropyCoefficients::new(k);
    let grid = &scenario.grid;
    let samples: Vec<S> = scenario.t_grid.iter().copied().filter(|t| *t > S::zero()).collect();
    let slack = margin_slack(grid, allowance, S::one());
    let mut hh_margins = Vec::with_capacity(data.len());
    let mut ham_margins = Vec::with_capacity(data.len());
    let mut dominance = true;
    for u0 in data {
        let min = u0.iter().copied().fold(S::infinity(), S::min);
        if !(min > S::zero()) {
            return Err(ModelError::NonPositiveField { min: min.as_f64() });
        }
        let path = prop.evolve_path(u0, S::zero(), &samples)?;
        let mut sup = u0.iter().copied().fold(S::neg_infinity(), S::max);
        for u in &path {
            sup = u.iter().copied().fold(sup, S::max);
        }
        let mut hh_min = S::infinity();
        let mut ham_min = S::infinity();
        for (u, &t) in path.iter().zip(&samples) {
            let metric = scenario.metric_at(t)?;
            let gsq = gradient_sq(grid, &metric, u);
            let hh_coef = coeffs.d(t);
            let ham_coef = t.recip() + S::real(2.0) * k;
            for i in 0..u.len() {
                let log_ratio = (sup / u[i]).ln();
                let lhs = gsq[i] / sq(u[i]);
                let hh = hh_coef * log_ratio - lhs;
                let ham = ham_coef * log_ratio - lhs;
                hh_min = hh_min.min(hh);
                ham_min = ham_min.min(ham);
                if ham < hh {
                    dominance = false;
                }
            }
        }
        hh_margins.push(hh_min);
        ham_margins.push(ham_min);
    }
    Ok(HarnackReport {
        hh: InequalityReport::from_margins("harnack-hh", hh_margins, slack),
        ham: InequalityReport::from_margins("harnack-ham", ham_margins, slack),
        dominance_exact: dominance,
    })
}

/// Samples of `α(r) = P_{r,T}(P_{s,r}f log P_{s,r}f)` and of the identity's
/// right side `P_{r,T}(|∇P_{s,r}f|²/P_{s,r}f)` at a probe node over
/// `r_count` uniform points of `[s, T]`.
pub fn interpolation_samples<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t_end: S,
    f: &[S],
    r_count: usize,
    probe: usize,
) -> Result<(Vec<S>, Vec<S>)> {
    check_window(scenario, s, t_end)?;
    assert!(r_count >= 3);
    let dr = (t_end - s) / S::real((r_count - 1) as f64);
    let r_samples: Vec<S> = (0..r_count).map(|i| s + dr * S::real(i as f64)).collect();
    let path = prop.evolve_path(f, s, &r_samples)?;
    let grid = &scenario.grid;
    let mut alpha = Vec::with_capacity(r_count);
    let mut rhs = Vec::with_capacity(r_count);
    for (v, &r) in path.iter().zip(&r_samples) {
        let metric = scenario.metric_at(r)?;
        let gsq = gradient_sq(grid, &metric, v);
        let payload = vec![
            v.iter().map(|x| *x * x.ln()).collect::<Vec<S>>(),
            gsq.iter().zip(v).map(|(g, x)| *g / *x).collect::<Vec<S>>(),
        ];
        let evolved = prop.evolve_many(&payload, r, t_end)?;
        alpha.push(evolved[0][probe]);
        rhs.push(evolved[1][probe]);
    }
    Ok((alpha, rhs))
}

/// Max interior residual of the interpolation identity
/// `α'(r) = -P_{r,T}(|∇P_{s,r}f|²/P_{s,r}f)` at a probe node, with `α'` by
/// central differences over the uniform r-samples.
pub fn interpolation_identity_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t_end: S,
    f: &[S],
    r_count: usize,
    probe: usize,
) -> Result<S> {
    let (alpha, rhs) = interpolation_samples(scenario, prop, s, t_end, f, r_count, probe)?;
    let dr = (t_end - s) / S::real((r_count - 1) as f64);
    let mut worst = S::zero();
    for i in 1..r_count - 1 {
        let alpha_prime = (alpha[i + 1] - alpha[i - 1]) / (S::real(2.0) * dr);
        worst = worst.max((alpha_prime + rhs[i]).abs());
    }
    Ok(worst)
}

/// Monotonicity report for `ψ(t) = e^{-2K(T-t)} P_{t,T}(|∇P_{s,t}f|²)` at a
/// probe node: margins are the consecutive decrements `ψ_k - ψ_{k+1}`.
pub fn psi_monotonicity_check<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t_end: S,
    f: &[S],
    sample_count: usize,
    probe: usize,
    allowance: S,
) -> Result<InequalityReport<S>> {
    let psi = psi_samples(scenario, prop, s, t_end, f, sample_count, probe)?;
    let slack = margin_slack(&scenario.grid, allowance, S::one());
    let margins: Vec<S> = psi.windows(2).map(|w| w[0] - w[1]).collect();
    Ok(InequalityReport::from_margins("psi-monotonicity", margins, slack))
}

/// The ψ samples themselves (used by the monotonicity check and tests).
pub fn psi_samples<S: Scalar>(
    scenario: &FlowScenario<S>,
    prop: &HeatPropagator<S>,
    s: S,
    t_end: S,
    f: &[S],
    sample_count: usize,
    probe: usize,
) -> Result<Vec<S>> {
    check_window(scenario, s, t_end)?;
    assert!(sample_count >= 2);
    let dt = (t_end - s) / S::real((sample_count - 1) as f64);
    let samples: Vec<S> = (0..sample_count).map(|i| s + dt * S::real(i as f64)).collect();
    let path = prop.evolve_path(f, s, &samples)?;
    let grid = &scenario.grid;
    let mut psi = Vec::with_capacity(sample_count);
    for (v, &t) in path.iter().zip(&samples) {
        let metric = scenario.metric_at(t)?;
        let gsq = gradient_sq(grid, &metric, v);
        let evolved = prop.evolve_many(&[gsq], t, t_end)?;
        let decay = (S::real(-2.0) * scenario.k * (t_end - t)).exp();
        psi.push(decay * evolved[0][probe]);
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        CompatibilityMode, EffectiveDim, MetricFamily, PotentialFamily, PotentialKind, TrigTerm,
    };
    use crate::grid::GridSpec;

    fn torus_scenario(n: usize, phi_amp: f64, k: f64) -> FlowScenario<f64> {
        FlowScenario::new(
            GridSpec::torus(1, n).unwrap(),
            MetricFamily::StaticEuclidean,
            PotentialFamily {
                base: PotentialKind::TrigSum {
                    terms: vec![TrigTerm { amplitude: phi_amp, freq: [1, 0], phase: 0.0 }],
                },
                mode: CompatibilityMode::Free,
            },
            k,
            EffectiveDim::Infinite,
            (0..9).map(|i| 0.05 * (i + 1) as f64).collect(),
            vec![1.0; n],
        )
        .unwrap()
    }

    #[test]
    fn generated_families_respect_bounds() {
        let scenario = torus_scenario(128, 0.5, 0.0);
        for gen in [GeneratorKind::RandomTrig, GeneratorKind::GaussianBumps, GeneratorKind::NearEigen] {
            let family = TestFamily::new(gen, 6, 42);
            let fields = generate_family(&family, &scenario).unwrap();
            assert_eq!(fields.len(), 6);
            for f in &fields {
                for v in f {
                    assert!(*v >= family.floor * 0.999 && *v <= 1.0 / family.floor);
                }
            }
        }
    }

    #[test]
    fn family_generation_is_deterministic() {
        let scenario = torus_scenario(64, 0.3, 0.0);
        let family = TestFamily::new(GeneratorKind::RandomTrig, 4, 7);
        let a = generate_family(&family, &scenario).unwrap();
        let b = generate_family(&family, &scenario).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_functions_give_zero_margins() {
        let scenario = torus_scenario(64, 0.4, 0.2);
        let prop = HeatPropagator::new(&scenario);
        let fields = vec![vec![1.7; 64]];
        let snap = evolve_snapshot(&scenario, &prop, 0.0, 0.2, &fields).unwrap();
        let coeffs = EntropyCoefficients::new(scenario.k);
        for kind in [
            InequalityKind::LogSobolev,
            InequalityKind::ReversalLogSobolev,
            InequalityKind::Poincare,
            InequalityKind::ReversalPoincare,
            InequalityKind::GradientEstimate,
        ] {
            let margin = min_over_nodes(margin_field(kind, &snap, &coeffs, 0).into_iter());
            assert!(margin.abs() < 1e-9, "{kind:?}: {margin}");
        }
    }

    #[test]
    fn suite_passes_on_a_positive_curvature_torus() {
        // φ = -0.4 cos x has Ric(L) = 0.4 cos x >= -0.4; with K = -0.4 the
        // scenario is a K-super flow and every margin must clear the slack.
        let scenario = torus_scenario(128, -0.4, -0.4);
        let prop = HeatPropagator::new(&scenario);
        let family = TestFamily::new(GeneratorKind::RandomTrig, 8, 11);
        let reports = theorem_suite(&scenario, &prop, 0.0, 0.25, &family, 2.0).unwrap();
        for r in &reports {
            assert!(r.pass, "{}: min margin {} < -{}", r.id, r.min_margin, r.slack);
        }
    }

    #[test]
    fn linearization_ties_lsi_to_poincare() {
        // margins of f = 1 + εg approach ε²/2 times the Poincaré margins
        let scenario = torus_scenario(128, -0.3, -0.3);
        let prop = HeatPropagator::new(&scenario);
        let g = scenario.grid.sample(|x| 0.8 * x[0].cos() + 0.4 * (2.0 * x[0]).sin());
        let coeffs = EntropyCoefficients::new(scenario.k);
        let (s, t) = (0.0, 0.2);
        let snap_g = evolve_snapshot(&scenario, &prop, s, t, &[g.clone()]).unwrap();
        let poincare = margin_field(InequalityKind::Poincare, &snap_g, &coeffs, 0);
        let mut prev_gap = f64::INFINITY;
        for eps in [1e-2, 1e-3] {
            let f: Vec<f64> = g.iter().map(|v| 1.0 + eps * v).collect();
            let snap_f = evolve_snapshot(&scenario, &prop, s, t, &[f]).unwrap();
            let lsi = margin_field(InequalityKind::LogSobolev, &snap_f, &coeffs, 0);
            let gap = lsi
                .iter()
                .zip(&poincare)
                .map(|(l, p)| (l / (eps * eps) - p / 2.0).abs())
                .fold(0.0f64, f64::max);
            // third-order remainder: the ε²-normalized gap shrinks with ε
            assert!(gap < 0.2 * eps.max(1e-3) / 1e-3 * 0.01 + 0.02, "eps={eps}: gap {gap}");
            assert!(gap < prev_gap || gap < 1e-4);
            prev_gap = gap;
        }
    }

    #[test]
    fn near_eigen_detects_a_violating_flow() {
        // φ = 0.5 cos x gives Ric(L) = -0.5 cos x, dipping to -0.5 < -0.1,
        // so with K = 0 the gradient estimate must fail for concentrated
        // test functions at short times.
        let scenario = torus_scenario(256, 0.5, 0.0);
        let prop = HeatPropagator::new(&scenario);
        let family = TestFamily::new(GeneratorKind::NearEigen, 8, 3);
        for tau in [1e-3, 1e-2] {
            let report =
                gradient_estimate_check(&scenario, &prop, 0.0, tau, &family, 1.0).unwrap();
            assert!(
                report.min_margin < 0.0,
                "tau={tau}: margin {} not negative",
                report.min_margin
            );
        }
        // and at τ = 1e-2 the violation clears the declared slack
        let report = gradient_estimate_check(&scenario, &prop, 0.0, 1e-2, &family, 1.0).unwrap();
        assert!(!report.pass, "violation hidden by slack {}", report.slack);
    }

    #[test]
    fn harnack_margins_and_dominance() {
        // static flow with Ric(L) >= -0.5: a (-0.5, ∞)-super flow
        let scenario = torus_scenario(128, 0.5, -0.5);
        let prop = HeatPropagator::new(&scenario);
        let family = TestFamily::new(GeneratorKind::RandomTrig, 6, 21);
        let data = generate_family(&family, &scenario).unwrap();
        let report = harnack_check(&scenario, &prop, &data, 2.0).unwrap();
        assert!(report.hh.pass, "hh min {}", report.hh.min_margin);
        assert!(report.ham.pass, "ham min {}", report.ham.min_margin);
        assert!(report.dominance_exact);
        // constants have zero left side and nonnegative margins
        let const_report = harnack_check(&scenario, &prop, &[vec![2.0; 128]], 1.0).unwrap();
        assert!(const_report.hh.min_margin >= -1e-12);
        // K = 0 case: (Ham) collapses to (1/t) log(A/u)
        let flat = torus_scenario(128, 0.0, 0.0);
        let prop = HeatPropagator::new(&flat);
        let data = generate_family(&family, &flat).unwrap();
        let report = harnack_check(&flat, &prop, &data, 2.0).unwrap();
        assert!(report.ham.pass && report.hh.pass && report.dominance_exact);
        // positive scenario.k is rejected
        let bad = torus_scenario(64, 0.0, 0.5);
        let prop = HeatPropagator::new(&bad);
        assert!(harnack_check(&bad, &prop, &[vec![1.0; 64]], 1.0).is_err());
        // non-positive initial data are rejected
        let flat = torus_scenario(64, 0.0, 0.0);
        let prop = HeatPropagator::new(&flat);
        let mut u0 = vec![1.0; 64];
        u0[7] = 0.0;
        assert!(matches!(
            harnack_check(&flat, &prop, &[u0], 1.0),
            Err(crate::error::ModelError::NonPositiveField { .. })
        ));
    }

    #[test]
    fn interpolation_identity_residual_refines_at_order_two() {
        let mut residuals = Vec::new();
        for (n, r_count, div) in [(64usize, 9usize, 4usize), (128, 17, 8)] {
            let scenario = torus_scenario(n, 0.3, 0.0);
            let prop = HeatPropagator::with_divisor(&scenario, div);
            let f = scenario.grid.sample(|x| (0.4 * x[0].cos()).exp());
            let probe = n / 3;
            let resid =
                interpolation_identity_check(&scenario, &prop, 0.0, 0.4, &f, r_count, probe)
                    .unwrap();
            residuals.push(resid);
        }
        let ratio = residuals[0] / residuals[1];
        assert!(ratio > 2.5 && ratio < 6.5, "ratio {ratio} ({residuals:?})");
        // constants are exact
        let scenario = torus_scenario(64, 0.3, 0.0);
        let prop = HeatPropagator::new(&scenario);
        let resid =
            interpolation_identity_check(&scenario, &prop, 0.0, 0.4, &vec![2.0; 64], 9, 10)
                .unwrap();
        assert!(resid < 1e-12);
    }

    #[test]
    fn gradient_margin_matches_the_fourier_oracle() {
        // flat torus, φ = 0, K = 0, f = 1 + ½cos x: both sides are explicit
        // Fourier data, the margin field is their difference.
        let n = 128;
        let scenario = torus_scenario(n, 0.0, 0.0);
        let prop = HeatPropagator::new(&scenario);
        let f = scenario.grid.sample(|x| 1.0 + 0.5 * x[0].cos());
        let tau = 0.3;
        let snap = evolve_snapshot(&scenario, &prop, 0.0, tau, &[f]).unwrap();
        let coeffs = EntropyCoefficients::new(0.0);
        let field = margin_field(InequalityKind::GradientEstimate, &snap, &coeffs, 0);
        let h: f64 = scenario.grid.h();
        for i in 0..n {
            let x = scenario.grid.pos(i)[0];
            // P(|∇f|²) = ¼(½ - ½e^{-4τ}cos 2x); |∇Pf|² = ¼e^{-2τ}sin²x
            let expected = 0.25 * (0.5 - 0.5 * (-4.0 * tau).exp() * (2.0 * x).cos())
                - 0.25 * (-2.0 * tau).exp() * x.sin().powi(2);
            assert!((field[i] - expected).abs() < 4.0 * h * h, "node {i}");
            assert!(field[i] >= -1e-10);
        }
    }

    #[test]
    fn harnack_sharpness_on_the_expanding_soliton() {
        // Ric(L) = -K g exactly (box with φ = -K‖x‖²/2): the sharp bound is
        // strictly tighter than the 1/t + 2K form for K > 0.
        let k = 0.5;
        let grid: GridSpec<f64> = GridSpec::euclidean_box(1, 256, 8.0).unwrap();
        let scenario = FlowScenario::new(
            grid.clone(),
            MetricFamily::StaticEuclidean,
            PotentialFamily {
                base: PotentialKind::Quadratic { kappa: -k, normalized: false },
                mode: CompatibilityMode::Free,
            },
            -k,
            EffectiveDim::Infinite,
            (0..9).map(|i| 0.05 + 0.06 * i as f64).collect(),
            vec![1.0; 256],
        )
        .unwrap();
        let prop = HeatPropagator::new(&scenario);
        let data: Vec<Vec<f64>> = [(0.8, 0.0), (1.2, 0.5), (1.0, -1.0)]
            .iter()
            .map(|&(sigma, c)| {
                grid.sample(|x| 0.1 + (-(x[0] - c) * (x[0] - c) / (2.0 * sigma * sigma)).exp())
            })
            .collect();
        let report = harnack_check(&scenario, &prop, &data, 2.0).unwrap();
        assert!(report.hh.pass, "hh min {}", report.hh.min_margin);
        assert!(report.ham.pass);
        assert!(report.dominance_exact);
        // sharpness: the HH margin sits strictly below the Ham margin
        assert!(report.hh.min_margin < report.ham.min_margin);
    }

    #[test]
    fn interpolation_integrated_form_reproduces_the_entropy_gap() {
        // ∫_s^T α'(r) dr = α(T) - α(s): the r-quadrature of the right side
        // must reproduce the pointwise semigroup entropy gap.
        let n = 128;
        let scenario = torus_scenario(n, 0.3, 0.0);
        let prop = HeatPropagator::with_divisor(&scenario, 8);
        let f = scenario.grid.sample(|x| (0.4 * x[0].cos()).exp());
        let probe = n / 3;
        let (s, t_end) = (0.0, 0.4);
        let r_count = 33;
        let (alpha, rhs) =
            interpolation_samples(&scenario, &prop, s, t_end, &f, r_count, probe).unwrap();
        let dr = (t_end - s) / (r_count - 1) as f64;
        // trapezoid quadrature of the dissipation samples
        let mut integral = 0.5 * (rhs[0] + rhs[r_count - 1]);
        for r in rhs.iter().take(r_count - 1).skip(1) {
            integral += r;
        }
        integral *= dr;
        let gap = alpha[0] - alpha[r_count - 1];
        assert!((integral - gap).abs() < 2e-4, "{integral} vs {gap}");
    }

    #[test]
    fn psi_of_a_constant_vanishes() {
        let scenario = torus_scenario(64, 0.3, 0.0);
        let prop = HeatPropagator::new(&scenario);
        let psi = psi_samples(&scenario, &prop, 0.0, 0.4, &vec![2.0; 64], 5, 10).unwrap();
        assert!(psi.iter().all(|p| p.abs() < 1e-12), "{psi:?}");
    }

    #[test]
    fn implication_chain_from_gradient_margins_to_lsi() {
        // the proof integrates the log-gradient estimate over r; whenever
        // those margins are nonnegative along the interpolation, the
        // integrated log-Sobolev margin must clear (minus quadrature slop).
        let (s, t) = (0.0, 0.3);
        let mut checked = 0;
        for (amp, k) in [
            (-0.4, -0.4),
            (-0.3, -0.3),
            (-0.2, -0.25),
            (0.0, 0.0),
            (0.2, -0.25),
            (0.3, -0.35),
            (0.4, -0.45),
            (-0.5, -0.5),
            (0.1, -0.15),
            (0.5, -0.55),
        ] {
            let scenario = torus_scenario(128, amp, k);
            let prop = HeatPropagator::new(&scenario);
            let coeffs = EntropyCoefficients::new(k);
            for seed in [5u64, 6] {
                let family = TestFamily::new(GeneratorKind::RandomTrig, 1, seed);
                let f = generate_family(&family, &scenario).unwrap().pop().unwrap();
                let r_samples: Vec<f64> = (1..=8).map(|i| s + (t - s) * i as f64 / 9.0).collect();
                let mut all_nonneg = true;
                for &r in &r_samples {
                    let snap =
                        evolve_snapshot(&scenario, &prop, s, r, std::slice::from_ref(&f))
                            .unwrap();
                    let m = min_over_nodes(
                        margin_field(InequalityKind::LogGradientEstimate, &snap, &coeffs, 0)
                            .into_iter(),
                    );
                    if m < 0.0 {
                        all_nonneg = false;
                        break;
                    }
                }
                if all_nonneg {
                    let snap = evolve_snapshot(&scenario, &prop, s, t, &[f]).unwrap();
                    let lsi = min_over_nodes(
                        margin_field(InequalityKind::LogSobolev, &snap, &coeffs, 0).into_iter(),
                    );
                    assert!(lsi >= -1e-6, "amp={amp}, k={k}, seed={seed}: lsi margin {lsi}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 10, "only {checked} chain instances exercised");
    }

    #[test]
    fn psi_is_monotone_and_matches_the_fourier_oracle() {
        let n = 128;
        let scenario = torus_scenario(n, 0.0, 0.0);
        let prop = HeatPropagator::new(&scenario);
        let f = scenario.grid.sample(|x| 1.0 + 0.5 * x[0].cos());
        let probe = n / 3;
        let (s, t_end) = (0.0, 0.4);
        let psi = psi_samples(&scenario, &prop, s, t_end, &f, 9, probe).unwrap();
        // oracle: ψ(t) = ¼ e^{-2(t-s)} (½ - ½ e^{-4(T-t)} cos 2x*)
        let x_star = scenario.grid.pos(probe)[0];
        let h: f64 = scenario.grid.h();
        for (k, p) in psi.iter().enumerate() {
            let t = s + (t_end - s) * k as f64 / 8.0;
            let expected = 0.25
                * (-2.0 * (t - s)).exp()
                * (0.5 - 0.5 * (-4.0 * (t_end - t)).exp() * (2.0 * x_star).cos());
            assert!((p - expected).abs() < 6.0 * h * h, "sample {k}: {p} vs {expected}");
        }
        let report =
            psi_monotonicity_check(&scenario, &prop, s, t_end, &f, 9, probe, 1.0).unwrap();
        assert!(report.pass);
        // strict decrease for a non-constant function
        assert!(report.margins.iter().all(|m| *m > 0.0));
    }
}
