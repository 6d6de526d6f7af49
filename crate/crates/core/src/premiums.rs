//! Reinsurance premium principles.
//!
//! Premiums act on non-negative risks and are computed from the survival
//! function: `(1 + theta) * int_0^inf g(S_X(t)) dt`, which on finite support is
//! a finite sum over the gaps between consecutive atoms.

use serde::{Deserialize, Serialize};

use crate::distortion::Distortion;
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::treaties::Treaty;

/// Premium principle `pi_R` used to price ceded risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PremiumRepr", into = "PremiumRepr")]
pub enum PremiumSpec {
    /// `(1 + theta) E[X]`
    Expected { theta: f64 },
    /// `(1 + theta) int S^gamma`
    ProportionalHazard { theta: f64, gamma: f64 },
    /// `(1 + theta) int g(S)`
    Wang { theta: f64, distortion: Distortion },
}

impl PremiumSpec {
    pub fn expected(theta: f64) -> Self {
        PremiumSpec::Expected { theta }
    }

    pub fn ph(theta: f64, gamma: f64) -> Self {
        PremiumSpec::ProportionalHazard { theta, gamma }
    }

    pub fn theta(&self) -> f64 {
        match self {
            PremiumSpec::Expected { theta }
            | PremiumSpec::ProportionalHazard { theta, .. }
            | PremiumSpec::Wang { theta, .. } => *theta,
        }
    }

    /// The distortion applied to the survival function.
    pub fn distortion(&self) -> Distortion {
        match self {
            PremiumSpec::Expected { .. } => Distortion::Identity,
            PremiumSpec::ProportionalHazard { gamma, .. } => Distortion::PowerHazard(*gamma),
            PremiumSpec::Wang { distortion, .. } => distortion.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let theta = self.theta();
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::OutOfRange {
                what: "safety loading",
                value: theta,
            });
        }
        match self {
            PremiumSpec::Expected { .. } => Ok(()),
            PremiumSpec::ProportionalHazard { gamma, .. } => {
                if *gamma > 0.0 && *gamma <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::OutOfRange {
                        what: "power-hazard exponent",
                        value: *gamma,
                    })
                }
            }
            PremiumSpec::Wang { distortion, .. } => distortion.validate(),
        }
    }

    /// Price of the non-negative risk `d`.
    pub fn price(&self, d: &DiscreteDistribution) -> Result<f64> {
        match self {
            PremiumSpec::Expected { theta } => expected_premium(d, *theta),
            _ => wang_unchecked(d, &self.distortion(), self.theta()),
        }
    }
}

fn check_support(d: &DiscreteDistribution) -> Result<()> {
    if d.ess_inf() < 0.0 {
        Err(Error::NegativeSupport(d.ess_inf()))
    } else {
        Ok(())
    }
}

/// Wang premium `(1 + theta) int_0^inf g(S_X(t)) dt`.
pub fn wang_premium(d: &DiscreteDistribution, g: &Distortion, theta: f64) -> Result<f64> {
    g.validate()?;
    wang_unchecked(d, g, theta)
}

fn wang_unchecked(d: &DiscreteDistribution, g: &Distortion, theta: f64) -> Result<f64> {
    check_support(d)?;
    let values = d.values();
    let tail = d.survival_at_atoms();
    // S = 1 on [0, v_0)
    let mut acc = values[0];
    for i in 0..values.len() - 1 {
        acc += (values[i + 1] - values[i]) * g.eval(tail[i]);
    }
    Ok((1.0 + theta) * acc)
}

/// Expected value principle `(1 + theta) E[X]`.
pub fn expected_premium(d: &DiscreteDistribution, theta: f64) -> Result<f64> {
    check_support(d)?;
    Ok((1.0 + theta) * d.mean())
}

/// Price of treaty `f`: the premium of the ceded loss `Y - f(Y)`.
pub fn treaty_premium(spec: &PremiumSpec, dy: &DiscreteDistribution, f: &Treaty) -> Result<f64> {
    if matches!(f, Treaty::Identity) {
        return Ok(0.0);
    }
    let ceded = dy.push_forward(|y| y - f.retained(y));
    spec.price(&ceded)
}

/// Closed-form price of the layer that cedes `[a, upper]`:
/// `(1 + theta) int_a^upper g(S_Y(y)) dy`.
pub fn layer_premium_closed_form(
    dy: &DiscreteDistribution,
    g: &Distortion,
    theta: f64,
    a: f64,
    upper: f64,
) -> Result<f64> {
    if !(a >= 0.0 && a <= upper) {
        return Err(Error::OutOfRange {
            what: "layer deductible",
            value: a,
        });
    }
    let values = dy.values();
    let tail = dy.survival_at_atoms();
    // S_Y is constant between atoms; walk the breakpoints inside (a, upper).
    let mut idx = values.partition_point(|&v| v <= a);
    let mut left = a;
    let mut acc = 0.0;
    while left < upper {
        let s = if idx == 0 { 1.0 } else { tail[idx - 1] };
        let right = if idx < values.len() { values[idx].min(upper) } else { upper };
        acc += (right - left) * g.eval(s);
        left = right;
        idx += 1;
    }
    Ok((1.0 + theta) * acc)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PremiumRepr {
    kind: String,
    #[serde(default)]
    theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distortion: Option<Distortion>,
}

impl TryFrom<PremiumRepr> for PremiumSpec {
    type Error = Error;

    fn try_from(r: PremiumRepr) -> Result<Self> {
        let spec = match r.kind.as_str() {
            "expected" => PremiumSpec::Expected { theta: r.theta },
            "ph" => PremiumSpec::ProportionalHazard {
                theta: r.theta,
                gamma: r
                    .gamma
                    .ok_or_else(|| Error::validation("gamma", "ph premium requires `gamma`"))?,
            },
            "wang" => PremiumSpec::Wang {
                theta: r.theta,
                distortion: r
                    .distortion
                    .ok_or_else(|| Error::validation("distortion", "wang premium requires `distortion`"))?,
            },
            other => return Err(Error::validation("kind", format!("unknown premium kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<PremiumSpec> for PremiumRepr {
    fn from(s: PremiumSpec) -> Self {
        match s {
            PremiumSpec::Expected { theta } => PremiumRepr {
                kind: "expected".into(),
                theta,
                gamma: None,
                distortion: None,
            },
            PremiumSpec::ProportionalHazard { theta, gamma } => PremiumRepr {
                kind: "ph".into(),
                theta,
                gamma: Some(gamma),
                distortion: None,
            },
            PremiumSpec::Wang { theta, distortion } => PremiumRepr {
                kind: "wang".into(),
                theta,
                gamma: None,
                distortion: Some(distortion),
            },
        }
    }
}
