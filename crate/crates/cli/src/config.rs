//! Scenario configuration: a TOML key-value document mapped onto the core
//! types, with validation diagnostics that name the offending key.
//!
//! Potentials, metrics and initial data come from a closed catalog with
//! parameters, so analytic time derivatives stay available without an
//! expression engine.

use serde::Deserialize;
use wentropy_core::entropy::near_delta_effective_time;
use wentropy_core::geometry::curvature::residual_floor;
use wentropy_core::geometry::{
    gaussian_datum, measure_weights, near_delta_datum, normalize_datum, CompatibilityMode,
    EffectiveDim, FlowScenario, MetricFamily, PotentialFamily, PotentialKind, TrigTerm,
};
use wentropy_core::grid::{DomainKind, GridSpec};
use wentropy_core::inequalities::{GeneratorKind, TestFamily};

/// Configuration / usage error (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, what: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{key}: {what}"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub checks: ChecksSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub domain: String,
    pub dimension: usize,
    pub points_per_axis: usize,
    /// Box half-width; ignored on the torus (period fixed at 2π).
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    /// "static" (default), "scaling" or "conformal".
    pub variant: Option<String>,
    pub lambda: Option<f64>,
    pub amplitude: Option<f64>,
    pub freq: Option<[i32; 2]>,
    pub phase: Option<f64>,
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTermSection {
    pub amplitude: f64,
    pub freq: [i32; 2],
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// "zero" (default), "quadratic" or "trig".
    pub kind: Option<String>,
    pub kappa: Option<f64>,
    pub normalized: Option<bool>,
    pub terms: Option<Vec<TrigTermSection>>,
    /// "free" (default) or "fixed-measure".
    pub mode: Option<String>,
}

/// `K` may be a number or `"auto"` (largest value keeping the scenario a
/// super flow, measured from the residual); `m` a number or `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberOrWord {
    Number(f64),
    Word(String),
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub k: Option<NumberOrWord>,
    pub m: Option<NumberOrWord>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// "constant" (default), "trig-exp", "gaussian" or "near-delta".
    pub kind: Option<String>,
    pub value: Option<f64>,
    pub amplitude: Option<f64>,
    pub freq: Option<[i32; 2]>,
    pub sigma: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// "random-trig" (default), "gaussian-bumps" or "near-eigen".
    pub generator: Option<String>,
    pub count: Option<usize>,
    pub floor: Option<f64>,
    pub seed: Option<u64>,
    pub near_eigen_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default)]
    pub run: Vec<String>,
    /// `(s, t)` windows for the semigroup inequality checks.
    pub pairs: Option<Vec<[f64; 2]>>,
    /// Discretization allowance `C` in the verdict slack `1e-8 + C·h²`.
    pub allowance: Option<f64>,
    /// Effective dimension for the km-second-order check.
    pub m_km: Option<f64>,
    /// `t - s` used by the contrapositive detection.
    pub tau: Option<f64>,
}

/// A fully resolved experiment.
pub struct BuiltConfig {
    pub scenario: FlowScenario<f64>,
    pub family: TestFamily<f64>,
    pub checks: Vec<String>,
    pub pairs: Vec<(f64, f64)>,
    pub allowance: f64,
    pub m_km: f64,
    pub tau: f64,
    pub seed: u64,
    /// The resolved curvature constant (after "auto").
    pub k: f64,
    pub k_was_auto: bool,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))
}

impl ConfigFile {
    /// Validates and assembles the scenario; `seed_override` comes from the
    /// command line.
    pub fn build(&self, seed_override: Option<u64>) -> Result<BuiltConfig, ConfigError> {
        let grid = self.build_grid()?;
        let metric = self.build_metric(&grid)?;
        let potential = self.build_potential(&grid)?;
        let m = self.build_m()?;
        let (k_given, k_was_auto) = match &self.constants.k {
            None => (Some(0.0), false),
            Some(NumberOrWord::Number(v)) => (Some(*v), false),
            Some(NumberOrWord::Word(w)) if w == "auto" => (None, true),
            Some(NumberOrWord::Word(w)) => {
                return Err(bad("constants.k", format!("expected a number or \"auto\", got {w:?}")))
            }
        };
        let t_grid = self.build_time_grid(&grid, &potential)?;
        let datum = self.build_datum(&grid, &metric, &potential, t_grid[0])?;

        let mk_scenario = |k: f64| {
            FlowScenario::new(
                grid.clone(),
                metric.clone(),
                potential.clone(),
                k,
                m,
                t_grid.clone(),
                datum.clone(),
            )
            .map_err(|e| ConfigError(format!("scenario: {e}")))
        };
        let k = match k_given {
            Some(k) => k,
            None => {
                let probe = mk_scenario(0.0)?;
                residual_floor(&probe, m, 0.0, 25)
                    .map_err(|e| ConfigError(format!("constants.k auto-resolution: {e}")))?
                    - 1e-3
            }
        };
        let scenario = mk_scenario(k)?;

        let family = self.build_family()?;
        let seed = seed_override.unwrap_or(family.seed);
        let family = TestFamily { seed, ..family };

        let checks = &self.checks;
        let pairs: Vec<(f64, f64)> = checks
            .pairs
            .clone()
            .unwrap_or_else(|| vec![[0.0, 0.25f64.min(scenario.t_end() * 0.5)]])
            .into_iter()
            .map(|[s, t]| (s, t))
            .collect();
        for (i, &(s, t)) in pairs.iter().enumerate() {
            if !(s >= 0.0 && t > s && t <= scenario.t_end() + 1e-12) {
                return Err(bad(
                    &format!("checks.pairs[{i}]"),
                    format!("needs 0 <= s < t <= {}", scenario.t_end()),
                ));
            }
        }
        let allowance = checks.allowance.unwrap_or(1.0);
        if allowance < 0.0 {
            return Err(bad("checks.allowance", "must be nonnegative"));
        }
        let m_km = checks.m_km.unwrap_or(3.0);
        let tau = checks.tau.unwrap_or(1e-2);
        for (i, id) in checks.run.iter().enumerate() {
            if !crate::checks::KNOWN_CHECKS.iter().any(|(name, _)| name == id) {
                return Err(bad(
                    &format!("checks.run[{i}]"),
                    format!("unknown check {id:?}; see `wentropy list-catalog`"),
                ));
            }
        }
        Ok(BuiltConfig {
            scenario,
            family,
            checks: checks.run.clone(),
            pairs,
            allowance,
            m_km,
            tau,
            seed,
            k,
            k_was_auto,
        })
    }

    fn build_grid(&self) -> Result<GridSpec<f64>, ConfigError> {
        let g = &self.grid;
        if !(g.dimension == 1 || g.dimension == 2) {
            return Err(bad("grid.dimension", format!("must be 1 or 2 (got {})", g.dimension)));
        }
        if g.points_per_axis < 8 {
            return Err(bad(
                "grid.points_per_axis",
                format!("must be >= 8 (got {})", g.points_per_axis),
            ));
        }
        match g.domain.as_str() {
            "torus" => GridSpec::torus(g.dimension, g.points_per_axis)
                .map_err(|e| bad("grid", e)),
            "box" => {
                let half = g
                    .half_width
                    .ok_or_else(|| bad("grid.half_width", "required for box domains"))?;
                if !(half > 0.0) {
                    return Err(bad("grid.half_width", "must be positive"));
                }
                GridSpec::euclidean_box(g.dimension, g.points_per_axis, half)
                    .map_err(|e| bad("grid", e))
            }
            other => Err(bad("grid.domain", format!("expected \"torus\" or \"box\", got {other:?}"))),
        }
    }

    fn build_metric(&self, grid: &GridSpec<f64>) -> Result<MetricFamily<f64>, ConfigError> {
        let m = &self.metric;
        match m.variant.as_deref().unwrap_or("static") {
            "static" => Ok(MetricFamily::StaticEuclidean),
            "scaling" => {
                let lambda = m.lambda.ok_or_else(|| bad("metric.lambda", "required for scaling"))?;
                Ok(MetricFamily::IsotropicScaling { lambda })
            }
            "conformal" => {
                if grid.dim() != 2 || grid.domain() != DomainKind::PeriodicTorus {
                    return Err(bad("metric.variant", "conformal requires the 2-D torus"));
                }
                Ok(MetricFamily::Conformal2d {
                    amplitude: m
                        .amplitude
                        .ok_or_else(|| bad("metric.amplitude", "required for conformal"))?,
                    freq: m.freq.unwrap_or([1, 0]),
                    phase: m.phase.unwrap_or(0.0),
                    decay: m.decay.unwrap_or(0.0),
                })
            }
            other => Err(bad(
                "metric.variant",
                format!("expected \"static\", \"scaling\" or \"conformal\", got {other:?}"),
            )),
        }
    }

    fn build_potential(&self, grid: &GridSpec<f64>) -> Result<PotentialFamily<f64>, ConfigError> {
        let p = &self.potential;
        let base = match p.kind.as_deref().unwrap_or("zero") {
            "zero" => PotentialKind::Zero,
            "quadratic" => {
                let kappa = p.kappa.ok_or_else(|| bad("potential.kappa", "required"))?;
                if grid.domain() != DomainKind::EuclideanBox && kappa != 0.0 {
                    return Err(bad("potential.kind", "quadratic requires a box domain"));
                }
                PotentialKind::Quadratic { kappa, normalized: p.normalized.unwrap_or(false) }
            }
            "trig" => {
                let terms = p
                    .terms
                    .as_ref()
                    .ok_or_else(|| bad("potential.terms", "required for trig"))?;
                PotentialKind::TrigSum {
                    terms: terms
                        .iter()
                        .map(|t| TrigTerm { amplitude: t.amplitude, freq: t.freq, phase: t.phase })
                        .collect(),
                }
            }
            other => Err(bad(
                "potential.kind",
                format!("expected \"zero\", \"quadratic\" or \"trig\", got {other:?}"),
            ))?,
        };
        let mode = match p.mode.as_deref().unwrap_or("free") {
            "free" => CompatibilityMode::Free,
            "fixed-measure" => CompatibilityMode::FixedMeasure,
            other => {
                return Err(bad(
                    "potential.mode",
                    format!("expected \"free\" or \"fixed-measure\", got {other:?}"),
                ))
            }
        };
        Ok(PotentialFamily { base, mode })
    }

    fn build_m(&self) -> Result<EffectiveDim<f64>, ConfigError> {
        match &self.constants.m {
            None => Ok(EffectiveDim::Infinite),
            Some(NumberOrWord::Word(w)) if w == "inf" => Ok(EffectiveDim::Infinite),
            Some(NumberOrWord::Number(v)) => Ok(EffectiveDim::Finite(*v)),
            Some(NumberOrWord::Word(w)) => {
                Err(bad("constants.m", format!("expected a number or \"inf\", got {w:?}")))
            }
        }
    }

    fn build_time_grid(
        &self,
        grid: &GridSpec<f64>,
        potential: &PotentialFamily<f64>,
    ) -> Result<Vec<f64>, ConfigError> {
        let t = &self.time;
        if t.samples < 5 {
            return Err(bad("time.samples", format!("must be >= 5 (got {})", t.samples)));
        }
        let mut start = t.start;
        // near-delta data at start <= 0 snap to the kernel-consistent
        // effective time of the surrogate
        if start <= 0.0 && self.initial.kind.as_deref() == Some("near-delta") {
            let sigma = self.initial.sigma.unwrap_or(3.0 * grid.h());
            let kappa = match &potential.base {
                PotentialKind::Quadratic { kappa, .. } => *kappa,
                _ => 0.0,
            };
            start = near_delta_effective_time(-kappa, sigma);
        }
        if !(t.end > start) {
            return Err(bad("time.end", format!("must exceed time.start (= {start})")));
        }
        if start < 0.0 {
            return Err(bad("time.start", "must be nonnegative"));
        }
        Ok((0..t.samples)
            .map(|i| start + (t.end - start) * i as f64 / (t.samples - 1) as f64)
            .collect())
    }

    fn build_datum(
        &self,
        grid: &GridSpec<f64>,
        metric: &MetricFamily<f64>,
        potential: &PotentialFamily<f64>,
        t0: f64,
    ) -> Result<Vec<f64>, ConfigError> {
        let i = &self.initial;
        let mut datum = match i.kind.as_deref().unwrap_or("constant") {
            "constant" => vec![i.value.unwrap_or(1.0); grid.len()],
            "trig-exp" => {
                let amp = i.amplitude.unwrap_or(0.3);
                let freq = i.freq.unwrap_or([1, 0]);
                grid.sample(|x| {
                    (amp * (freq[0] as f64 * x[0] + freq[1] as f64 * x[1]).cos()).exp()
                })
            }
            "gaussian" => {
                let sigma = i.sigma.ok_or_else(|| bad("initial.sigma", "required"))?;
                if !(sigma > 0.0) {
                    return Err(bad("initial.sigma", "must be positive"));
                }
                let c = i.center.unwrap_or([0.0, 0.0]);
                gaussian_datum(grid, sigma, c)
            }
            "near-delta" => {
                let sigma = i.sigma.unwrap_or(3.0 * grid.h());
                let c = i.center.unwrap_or([0.0, 0.0]);
                near_delta_datum(grid, sigma, c)
            }
            other => {
                return Err(bad(
                    "initial.kind",
                    format!(
                        "expected \"constant\", \"trig-exp\", \"gaussian\" or \"near-delta\", got {other:?}"
                    ),
                ))
            }
        };
        let normalize = i.normalize.unwrap_or(i.kind.as_deref() == Some("near-delta"));
        if normalize {
            let mu = measure_weights(grid, metric, potential, t0)
                .map_err(|e| ConfigError(format!("initial normalization: {e}")))?;
            normalize_datum(&mut datum, &mu);
        }
        Ok(datum)
    }

    fn build_family(&self) -> Result<TestFamily<f64>, ConfigError> {
        let f = &self.family;
        let generator = match f.generator.as_deref().unwrap_or("random-trig") {
            "random-trig" => GeneratorKind::RandomTrig,
            "gaussian-bumps" => GeneratorKind::GaussianBumps,
            "near-eigen" => GeneratorKind::NearEigen,
            other => {
                return Err(bad(
                    "family.generator",
                    format!(
                        "expected \"random-trig\", \"gaussian-bumps\" or \"near-eigen\", got {other:?}"
                    ),
                ))
            }
        };
        let count = f.count.unwrap_or(20);
        if count == 0 {
            return Err(bad("family.count", "must be positive"));
        }
        let floor = f.floor.unwrap_or(1e-3);
        if !(floor > 0.0 && floor < 1.0) {
            return Err(bad("family.floor", "must lie in (0, 1)"));
        }
        let mut family = TestFamily::new(generator, count, f.seed.unwrap_or(42));
        family.floor = floor;
        if let Some(eps) = f.near_eigen_amplitude {
            if !(eps > 0.0) {
                return Err(bad("family.near_eigen_amplitude", "must be positive"));
            }
            family.near_eigen_amplitude = eps;
        }
        Ok(family)
    }
}
