//! Law-invariant risk measures evaluated exactly on finite support.
//!
//! Quantile-based measures integrate the piecewise-constant quantile function
//! cell by cell, so Value-at-Risk, Expected Shortfall, distortion and spectral
//! measures carry no discretization error beyond the one already in the input
//! distribution.

use serde::{Deserialize, Serialize};

use crate::distortion::{Distortion, Spectrum};
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};

/// A risk measure applied at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RiskSpecRepr", into = "RiskSpecRepr")]
pub enum RiskSpec {
    Expectation,
    ValueAtRisk { alpha: f64 },
    ExpectedShortfall { alpha: f64 },
    Distortion(Distortion),
    Spectral(Spectrum),
    Entropic { gamma: f64 },
}

impl RiskSpec {
    pub fn var(alpha: f64) -> Self {
        RiskSpec::ValueAtRisk { alpha }
    }

    pub fn es(alpha: f64) -> Self {
        RiskSpec::ExpectedShortfall { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RiskSpec::Expectation => Ok(()),
            RiskSpec::ValueAtRisk { alpha } => check_open_unit(*alpha, "value-at-risk level"),
            RiskSpec::ExpectedShortfall { alpha } => {
                if *alpha >= 0.0 && *alpha < 1.0 {
                    Ok(())
                } else {
                    Err(Error::OutOfRange {
                        what: "expected-shortfall level",
                        value: *alpha,
                    })
                }
            }
            RiskSpec::Distortion(g) => g.validate(),
            RiskSpec::Spectral(phi) => phi.validate(),
            RiskSpec::Entropic { gamma } => {
                if *gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::OutOfRange {
                        what: "entropic risk aversion",
                        value: *gamma,
                    })
                }
            }
        }
    }

    /// Positive homogeneity holds for every kind except the entropic measure.
    pub fn is_positive_homogeneous(&self) -> bool {
        !matches!(self, RiskSpec::Entropic { .. })
    }

    /// Monotone, translation invariant, positively homogeneous and subadditive.
    pub fn is_coherent(&self) -> bool {
        match self {
            RiskSpec::Expectation | RiskSpec::ExpectedShortfall { .. } | RiskSpec::Spectral(_) => true,
            RiskSpec::Distortion(g) => g.is_concave(),
            RiskSpec::ValueAtRisk { .. } | RiskSpec::Entropic { .. } => false,
        }
    }

    /// Human-readable kind tag, as used in config files.
    pub fn kind(&self) -> &'static str {
        match self {
            RiskSpec::Expectation => "expectation",
            RiskSpec::ValueAtRisk { .. } => "value-at-risk",
            RiskSpec::ExpectedShortfall { .. } => "expected-shortfall",
            RiskSpec::Distortion(_) => "distortion",
            RiskSpec::Spectral(_) => "spectral",
            RiskSpec::Entropic { .. } => "entropic",
        }
    }

    /// Applies the measure to `d`.
    pub fn evaluate(&self, d: &DiscreteDistribution) -> Result<f64> {
        match self {
            RiskSpec::Expectation => Ok(d.mean()),
            RiskSpec::ValueAtRisk { alpha } => var(d, *alpha),
            RiskSpec::ExpectedShortfall { alpha } => es(d, *alpha),
            RiskSpec::Distortion(g) => Ok(distortion_unchecked(d, g)),
            RiskSpec::Spectral(phi) => Ok(spectral_unchecked(d, phi)),
            RiskSpec::Entropic { gamma } => entropic(d, *gamma),
        }
    }
}

fn check_open_unit(alpha: f64, what: &'static str) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value: alpha })
    }
}

/// Value-at-Risk: the left-continuous `alpha`-quantile.
pub fn var(d: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_open_unit(alpha, "value-at-risk level")?;
    d.quantile(alpha)
}

/// Expected Shortfall: average of the quantile function over `[alpha, 1]`.
pub fn es(d: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange {
            what: "expected-shortfall level",
            value: alpha,
        });
    }
    if alpha == 0.0 {
        return Ok(d.mean());
    }
    let cdf = d.cdf_at_atoms();
    let start = d.quantile_index(alpha);
    let mut acc = 0.0;
    let mut lower = alpha;
    for i in start..d.len() {
        acc += d.values()[i] * (cdf[i] - lower);
        lower = cdf[i];
    }
    Ok(acc / (1.0 - alpha))
}

/// Distortion risk measure via the dual distortion on the quantile function.
pub fn distortion_rm(d: &DiscreteDistribution, g: &Distortion) -> Result<f64> {
    g.validate()?;
    Ok(distortion_unchecked(d, g))
}

fn distortion_unchecked(d: &DiscreteDistribution, g: &Distortion) -> f64 {
    let mut prev = g.dual(0.0);
    let mut acc = 0.0;
    for (v, &f) in d.values().iter().zip(d.cdf_at_atoms()) {
        let cur = g.dual(f);
        acc += v * (cur - prev);
        prev = cur;
    }
    acc
}

/// Spectral risk measure `int_0^1 F^{-1}(u) phi(u) du`.
pub fn spectral_rm(d: &DiscreteDistribution, phi: &Spectrum) -> Result<f64> {
    phi.validate()?;
    Ok(spectral_unchecked(d, phi))
}

fn spectral_unchecked(d: &DiscreteDistribution, phi: &Spectrum) -> f64 {
    let mut lower = 0.0;
    let mut acc = 0.0;
    for (v, &f) in d.values().iter().zip(d.cdf_at_atoms()) {
        acc += v * phi.integral(lower, f);
        lower = f;
    }
    acc
}

/// Entropic risk measure `log E[exp(gamma X)] / gamma`.
pub fn entropic(d: &DiscreteDistribution, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::OutOfRange {
            what: "entropic risk aversion",
            value: gamma,
        });
    }
    let shift = d.ess_sup();
    let s: f64 = d.atoms().map(|(v, p)| p * (gamma * (v - shift)).exp()).sum();
    Ok(shift + s.ln() / gamma)
}

/// Config-file form: `{kind, alpha?, gamma?, distortion?, spectrum?}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RiskSpecRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distortion: Option<Distortion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spectrum: Option<Spectrum>,
}

impl TryFrom<RiskSpecRepr> for RiskSpec {
    type Error = Error;

    fn try_from(r: RiskSpecRepr) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::validation(name, format!("risk kind `{}` requires `{name}`", r.kind)))
        };
        let spec = match r.kind.as_str() {
            "expectation" => RiskSpec::Expectation,
            "value-at-risk" | "var" => RiskSpec::ValueAtRisk {
                alpha: need(r.alpha, "alpha")?,
            },
            "expected-shortfall" | "es" => RiskSpec::ExpectedShortfall {
                alpha: need(r.alpha, "alpha")?,
            },
            "distortion" => RiskSpec::Distortion(
                r.distortion
                    .clone()
                    .ok_or_else(|| Error::validation("distortion", "distortion kind requires `distortion`"))?,
            ),
            "spectral" => RiskSpec::Spectral(
                r.spectrum
                    .clone()
                    .ok_or_else(|| Error::validation("spectrum", "spectral kind requires `spectrum`"))?,
            ),
            "entropic" => RiskSpec::Entropic {
                gamma: need(r.gamma, "gamma")?,
            },
            other => return Err(Error::validation("kind", format!("unknown risk kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<RiskSpec> for RiskSpecRepr {
    fn from(s: RiskSpec) -> Self {
        let mut r = RiskSpecRepr {
            kind: s.kind().to_string(),
            alpha: None,
            gamma: None,
            distortion: None,
            spectrum: None,
        };
        match s {
            RiskSpec::Expectation => {}
            RiskSpec::ValueAtRisk { alpha } | RiskSpec::ExpectedShortfall { alpha } => r.alpha = Some(alpha),
            RiskSpec::Distortion(g) => r.distortion = Some(g),
            RiskSpec::Spectral(phi) => r.spectrum = Some(phi),
            RiskSpec::Entropic { gamma } => r.gamma = Some(gamma),
        }
        r
    }
}
