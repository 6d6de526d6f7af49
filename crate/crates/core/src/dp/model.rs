use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::distributions::{DiscreteDistribution, FamilySpec};
use crate::error::{Error, Result};
use crate::premiums::PremiumSpec;
use crate::risk::RiskSpec;
use crate::treaties::TreatyFamily;

use super::value::uniform_grid;

/// Planning horizon: `N` periods or infinitely many.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(n) => s.serialize_u64(*n as u64),
            Horizon::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(usize),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(n) => Ok(Horizon::Finite(n)),
            Repr::S(s) if s == "infinite" => Ok(Horizon::Infinite),
            Repr::S(s) => Err(de::Error::custom(format!(
                "horizon must be a period count or \"infinite\", got \"{s}\""
            ))),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Infinite => f.write_str("infinite"),
        }
    }
}

/// Per-period model ingredients as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    /// Claims `Y`.
    #[serde(deserialize_with = "distribution_source")]
    pub claims: DiscreteDistribution,
    /// Premium income `Z`.
    #[serde(deserialize_with = "distribution_source")]
    pub income: DiscreteDistribution,
    pub risk: RiskSpec,
    pub premium: PremiumSpec,
}

/// Accepts either a family description or an explicit `[[value, prob], ...]` list.
fn distribution_source<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DiscreteDistribution, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Source {
        Atoms(Vec<(f64, f64)>),
        Family(FamilySpec),
    }
    match Source::deserialize(d)? {
        Source::Atoms(pairs) => DiscreteDistribution::new(&pairs).map_err(de::Error::custom),
        Source::Family(spec) => DiscreteDistribution::discretize(&spec).map_err(de::Error::custom),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_grid_count")]
    pub count: usize,
}

fn default_grid_count() -> usize {
    512
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        uniform_grid(self.min, self.max, self.count)
    }
}

/// Which treaty family to optimize over and how finely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatyConfig {
    pub family: TreatyFamily,
    /// Fixed upper point of the ceded layer. Defaults to the stage's
    /// Value-at-Risk of the claims under a VaR criterion, else their maximum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    /// Number of linear pieces for the piecewise-linear family.
    #[serde(default = "default_knots")]
    pub knots: usize,
    /// Points in the coarse scan that precedes golden-section refinement.
    #[serde(default = "default_coarse")]
    pub coarse: usize,
}

fn default_knots() -> usize {
    8
}

fn default_coarse() -> usize {
    64
}

impl TreatyConfig {
    pub fn new(family: TreatyFamily) -> Self {
        Self {
            family,
            upper: None,
            knots: default_knots(),
            coarse: default_coarse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Simulated periods for an infinite-horizon policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
}

fn default_paths() -> usize {
    10_000
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            seed: 0,
            periods: None,
        }
    }
}

/// A complete model: horizon, per-stage data, grid, treaty family and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub horizon: Horizon,
    /// Discount factor, already combining cost-of-capital rate and interest.
    pub beta: f64,
    /// Restrict treaties to those whose premium is covered by the current surplus.
    #[serde(default = "default_true")]
    pub budget_constrained: bool,
    #[serde(default)]
    pub initial_capital: f64,
    /// Stationary stage data; also the default for every stage.
    pub stage: StageSpec,
    /// Optional non-stationary data, one entry per period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageSpec>>,
    pub grid: GridSpec,
    pub treaty: TreatyConfig,
    /// Target weighted-norm error of the infinite-horizon solution.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Documentation only; `beta` is what the solver uses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_coc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_free: Option<f64>,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

fn default_true() -> bool {
    true
}

fn default_tolerance() -> f64 {
    1e-4
}

fn default_max_iterations() -> usize {
    5_000
}

/// Resolved ingredients of one Bellman stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageData {
    pub dy: DiscreteDistribution,
    pub dz: DiscreteDistribution,
    pub risk: RiskSpec,
    pub premium: PremiumSpec,
    pub beta: f64,
    pub budget_constrained: bool,
    pub search: SearchSpec,
}

/// How the per-state minimization explores the treaty family.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub family: TreatyFamily,
    pub layer_upper: f64,
    /// Knot positions for the piecewise-linear family, starting at 0.
    pub knots: Vec<f64>,
    pub coarse: usize,
}

impl SearchSpec {
    /// Resolves family defaults against one stage's claims and risk measure.
    pub fn resolve(treaty: &TreatyConfig, claims: &DiscreteDistribution, risk: &RiskSpec) -> Result<Self> {
        let layer_upper = match (treaty.upper, risk) {
            (Some(u), _) => u,
            (None, RiskSpec::ValueAtRisk { alpha }) => claims.quantile(*alpha)?,
            (None, _) => claims.ess_sup(),
        };
        let knots = if treaty.family == TreatyFamily::PiecewiseLinear {
            quantile_knots(claims, treaty.knots)?
        } else {
            Vec::new()
        };
        Ok(Self {
            family: treaty.family,
            layer_upper,
            knots,
            coarse: treaty.coarse,
        })
    }
}

impl ModelConfig {
    /// A stationary config with defaults for everything optional.
    pub fn stationary(
        horizon: Horizon,
        beta: f64,
        stage: StageSpec,
        grid: GridSpec,
        family: TreatyFamily,
    ) -> Self {
        Self {
            horizon,
            beta,
            budget_constrained: true,
            initial_capital: 0.0,
            stage,
            stages: None,
            grid,
            treaty: TreatyConfig::new(family),
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            r_coc: None,
            risk_free: None,
            simulation: SimulationSpec::default(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: ModelConfig = serde_json::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn is_infinite(&self) -> bool {
        self.horizon == Horizon::Infinite
    }

    /// Number of decision periods; `None` for an infinite horizon.
    pub fn periods(&self) -> Option<usize> {
        match self.horizon {
            Horizon::Finite(n) => Some(n),
            Horizon::Infinite => None,
        }
    }

    pub fn grid_points(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn stage_spec(&self, n: usize) -> &StageSpec {
        match &self.stages {
            Some(list) => &list[n.min(list.len() - 1)],
            None => &self.stage,
        }
    }

    /// Bellman data for the transition from period `n` to `n + 1`.
    pub fn stage_data(&self, n: usize) -> Result<StageData> {
        let spec = self.stage_spec(n);
        let search = SearchSpec::resolve(&self.treaty, &spec.claims, &spec.risk)?;
        Ok(StageData {
            dy: spec.claims.clone(),
            dz: spec.income.clone(),
            risk: spec.risk.clone(),
            premium: spec.premium.clone(),
            beta: self.beta,
            budget_constrained: self.budget_constrained,
            search,
        })
    }

    /// Checks every modelling assumption the solvers rely on.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::validation("beta", format!("must lie in (0, 1], got {}", self.beta)));
        }
        match self.horizon {
            Horizon::Finite(0) => return Err(Error::validation("horizon", "must be at least 1")),
            Horizon::Finite(n) => {
                if let Some(list) = &self.stages {
                    if list.len() != n {
                        return Err(Error::validation(
                            "stages",
                            format!("expected {n} entries, got {}", list.len()),
                        ));
                    }
                }
            }
            Horizon::Infinite => {
                if self.beta >= 1.0 {
                    return Err(Error::validation("beta", "infinite horizon requires strict discounting, beta < 1"));
                }
                if self.stages.is_some() {
                    return Err(Error::validation("stages", "infinite horizon requires stationary data"));
                }
                if !self.stage.risk.is_coherent() {
                    return Err(Error::validation(
                        "stage.risk",
                        format!("coherence required for infinite horizon, got {}", self.stage.risk.kind()),
                    ));
                }
            }
        }
        validate_stage(&self.stage, "stage")?;
        if let Some(list) = &self.stages {
            for (i, s) in list.iter().enumerate() {
                validate_stage(s, &format!("stages[{i}]"))?;
            }
        }
        let g = &self.grid;
        if !(g.min.is_finite() && g.max.is_finite() && g.min < g.max) {
            return Err(Error::validation("grid", "need finite min < max"));
        }
        if g.count < 16 {
            return Err(Error::validation("grid.count", format!("must be at least 16, got {}", g.count)));
        }
        if let Some(u) = self.treaty.upper {
            if !(u >= 0.0 && u.is_finite()) {
                return Err(Error::validation("treaty.upper", "must be finite and non-negative"));
            }
        }
        if self.treaty.knots == 0 {
            return Err(Error::validation("treaty.knots", "must be at least 1"));
        }
        if self.treaty.coarse < 3 {
            return Err(Error::validation("treaty.coarse", "must be at least 3"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::validation("tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations", "must be at least 1"));
        }
        if self.simulation.paths == 0 {
            return Err(Error::validation("simulation.paths", "must be at least 1"));
        }
        Ok(())
    }
}

fn validate_stage(s: &StageSpec, path: &str) -> Result<()> {
    if s.claims.ess_inf() < 0.0 {
        return Err(Error::validation(
            format!("{path}.claims"),
            format!("claims must be non-negative, min atom {}", s.claims.ess_inf()),
        ));
    }
    let wrap = |field: &str, e: Error| Error::validation(format!("{path}.{field}"), e.to_string());
    s.risk.validate().map_err(|e| wrap("risk", e))?;
    s.premium.validate().map_err(|e| wrap("premium", e))?;
    let at_zero = s
        .premium
        .price(&DiscreteDistribution::point_mass(0.0))
        .map_err(|e| wrap("premium", e))?;
    if at_zero.abs() > 1e-12 {
        return Err(Error::validation(
            format!("{path}.premium"),
            format!("premium of a zero risk must be 0, got {at_zero}"),
        ));
    }
    Ok(())
}

/// `k` pieces: knots at 0 and at the claim quantiles `i / k`.
fn quantile_knots(dy: &DiscreteDistribution, k: usize) -> Result<Vec<f64>> {
    let mut knots = vec![0.0];
    for i in 1..k {
        let t = dy.quantile(i as f64 / k as f64)?;
        if t > *knots.last().unwrap() {
            knots.push(t);
        }
    }
    Ok(knots)
}
