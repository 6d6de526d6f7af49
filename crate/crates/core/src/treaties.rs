//! Admissible retained-loss functions.
//!
//! A treaty is described by the part of each claim the insurer keeps. Every
//! family here is increasing with slopes in `[0, 1]`, so both the retained and
//! the ceded loss are increasing in the claim.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::premiums::{treaty_premium, PremiumSpec};

/// Family tag used in configs and policy files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreatyFamily {
    Identity,
    FullCession,
    Proportional,
    StopLoss,
    Layer,
    PiecewiseLinear,
}

impl TreatyFamily {
    pub fn name(self) -> &'static str {
        match self {
            TreatyFamily::Identity => "identity",
            TreatyFamily::FullCession => "full-cession",
            TreatyFamily::Proportional => "proportional",
            TreatyFamily::StopLoss => "stop-loss",
            TreatyFamily::Layer => "layer",
            TreatyFamily::PiecewiseLinear => "piecewise-linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => TreatyFamily::Identity,
            "full-cession" => TreatyFamily::FullCession,
            "proportional" => TreatyFamily::Proportional,
            "stop-loss" => TreatyFamily::StopLoss,
            "layer" => TreatyFamily::Layer,
            "piecewise-linear" => TreatyFamily::PiecewiseLinear,
            other => return Err(Error::UnsupportedFamily(other.to_string())),
        })
    }
}

impl fmt::Display for TreatyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A retained-loss function `f` with `0 <= f(t) <= t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Treaty {
    /// No reinsurance.
    Identity,
    /// Everything is ceded.
    FullCession,
    /// Retains `c * y`.
    Proportional { c: f64 },
    /// Retains `min(y, a)`.
    StopLoss { retention: f64 },
    /// Cedes the layer `[a, a + w]` and retains everything below and above it.
    Layer { deductible: f64, width: f64 },
    /// Slope `slopes[i]` on `[knots[i], knots[i + 1])`; the last slope extends
    /// to infinity. `knots[0]` must be 0.
    PiecewiseLinear { knots: Vec<f64>, slopes: Vec<f64> },
}

impl Treaty {
    pub fn layer(deductible: f64, width: f64) -> Self {
        Treaty::Layer { deductible, width }
    }

    pub fn stop_loss(retention: f64) -> Self {
        Treaty::StopLoss { retention }
    }

    pub fn family(&self) -> TreatyFamily {
        match self {
            Treaty::Identity => TreatyFamily::Identity,
            Treaty::FullCession => TreatyFamily::FullCession,
            Treaty::Proportional { .. } => TreatyFamily::Proportional,
            Treaty::StopLoss { .. } => TreatyFamily::StopLoss,
            Treaty::Layer { .. } => TreatyFamily::Layer,
            Treaty::PiecewiseLinear { .. } => TreatyFamily::PiecewiseLinear,
        }
    }

    /// Flat parameter list, in the order accepted by [`Treaty::from_params`].
    pub fn params(&self) -> Vec<f64> {
        match self {
            Treaty::Identity | Treaty::FullCession => vec![],
            Treaty::Proportional { c } => vec![*c],
            Treaty::StopLoss { retention } => vec![*retention],
            Treaty::Layer { deductible, width } => vec![*deductible, *width],
            Treaty::PiecewiseLinear { knots, slopes } => {
                knots.iter().zip(slopes).flat_map(|(&t, &s)| [t, s]).collect()
            }
        }
    }

    /// Rebuilds a treaty from its family and flat parameters, checking ranges.
    pub fn from_params(family: TreatyFamily, params: &[f64]) -> Result<Self> {
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::validation(
                    "params",
                    format!("{family} expects {n} parameters, got {}", params.len()),
                ))
            }
        };
        let nonneg = |v: f64, what: &'static str| {
            if v >= 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::OutOfRange { what, value: v })
            }
        };
        let unit = |v: f64, what: &'static str| {
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::OutOfRange { what, value: v })
            }
        };
        Ok(match family {
            TreatyFamily::Identity => {
                want(0)?;
                Treaty::Identity
            }
            TreatyFamily::FullCession => {
                want(0)?;
                Treaty::FullCession
            }
            TreatyFamily::Proportional => {
                want(1)?;
                Treaty::Proportional {
                    c: unit(params[0], "retained proportion")?,
                }
            }
            TreatyFamily::StopLoss => {
                want(1)?;
                Treaty::StopLoss {
                    retention: nonneg(params[0], "retention")?,
                }
            }
            TreatyFamily::Layer => {
                want(2)?;
                Treaty::Layer {
                    deductible: nonneg(params[0], "layer deductible")?,
                    width: nonneg(params[1], "layer width")?,
                }
            }
            TreatyFamily::PiecewiseLinear => {
                if params.is_empty() || params.len() % 2 != 0 {
                    return Err(Error::validation("params", "piecewise-linear expects knot/slope pairs"));
                }
                let knots: Vec<f64> = params.iter().step_by(2).copied().collect();
                let slopes: Vec<f64> = params.iter().skip(1).step_by(2).copied().collect();
                if knots[0] != 0.0 || knots.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::validation(
                        "params",
                        "piecewise-linear knots must start at 0 and increase strictly",
                    ));
                }
                for &s in &slopes {
                    unit(s, "piecewise-linear slope")?;
                }
                Treaty::PiecewiseLinear { knots, slopes }
            }
        })
    }

    /// `f(y)` without input checks.
    #[inline]
    pub fn retained(&self, y: f64) -> f64 {
        match self {
            Treaty::Identity => y,
            Treaty::FullCession => 0.0,
            Treaty::Proportional { c } => c * y,
            Treaty::StopLoss { retention } => y.min(*retention),
            Treaty::Layer { deductible, width } => {
                y.min(*deductible) + (y - deductible - width).max(0.0)
            }
            Treaty::PiecewiseLinear { knots, slopes } => {
                let mut acc = 0.0;
                for i in 0..knots.len() {
                    if y <= knots[i] {
                        break;
                    }
                    let right = knots.get(i + 1).map_or(y, |&t| t.min(y));
                    acc += slopes[i] * (right - knots[i]);
                }
                acc
            }
        }
    }

    /// `f(y)` for a claim `y >= 0`.
    pub fn eval_retained(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::NegativeClaim(y));
        }
        Ok(self.retained(y))
    }

    /// Ceded part `y - f(y)`.
    #[inline]
    pub fn ceded(&self, y: f64) -> f64 {
        y - self.retained(y)
    }
}

impl fmt::Display for Treaty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family())?;
        let params = self.params();
        if !params.is_empty() {
            let joined: Vec<String> = params.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", joined.join(", "))?;
        }
        Ok(())
    }
}

const ADMISSIBILITY_SLACK: f64 = 1e-12;

/// Checks `0 <= f <= id` at the probes and that `f` and `id - f` increase
/// between consecutive probes.
pub fn is_admissible(f: impl Fn(f64) -> f64, probes: &[f64]) -> bool {
    let mut prev: Option<(f64, f64)> = None;
    for &t in probes {
        let v = f(t);
        if !v.is_finite() || v < -ADMISSIBILITY_SLACK || v > t + ADMISSIBILITY_SLACK {
            return false;
        }
        if let Some((pt, pv)) = prev {
            if v < pv - ADMISSIBILITY_SLACK || (t - v) < (pt - pv) - ADMISSIBILITY_SLACK {
                return false;
            }
        }
        prev = Some((t, v));
    }
    true
}

/// Parameter range of a one-parameter family, ordered from most to least
/// reinsurance. The premium is decreasing along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

/// One-parameter slice through a treaty family: `make(t)` for `t` in `range`.
pub(crate) fn family_slice(
    family: TreatyFamily,
    dy: &DiscreteDistribution,
    layer_upper: f64,
) -> Result<(ParamRange, Box<dyn Fn(f64) -> Treaty + Send + Sync>)> {
    Ok(match family {
        TreatyFamily::StopLoss => (
            ParamRange {
                lo: 0.0,
                hi: dy.ess_sup().max(0.0),
            },
            Box::new(|a| Treaty::StopLoss { retention: a }),
        ),
        TreatyFamily::Layer => (
            ParamRange {
                lo: 0.0,
                hi: layer_upper,
            },
            Box::new(move |a| Treaty::Layer {
                deductible: a,
                width: (layer_upper - a).max(0.0),
            }),
        ),
        TreatyFamily::Proportional => (
            ParamRange { lo: 0.0, hi: 1.0 },
            Box::new(|c| Treaty::Proportional { c }),
        ),
        other => return Err(Error::UnsupportedFamily(other.to_string())),
    })
}

/// Smallest `t` in `range` with `premium(t) <= budget`, for a premium that
/// decreases in `t` and vanishes at `range.hi`.
pub(crate) fn smallest_feasible(
    range: ParamRange,
    budget: f64,
    premium: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    if premium(range.lo)? <= budget {
        return Ok(range.lo);
    }
    let (mut lo, mut hi) = (range.lo, range.hi);
    // ~1e-16 relative resolution on the unit interval
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if premium(mid)? <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Parameters of a one-parameter family whose treaty premium is within `budget`.
///
/// Stop-loss and proportional ranges run up to full retention; the layer range
/// keeps the upper point fixed at `layer_upper`.
pub fn feasible_retention_range(
    family: TreatyFamily,
    spec: &PremiumSpec,
    dy: &DiscreteDistribution,
    budget: f64,
    layer_upper: f64,
) -> Result<ParamRange> {
    if !(budget >= 0.0) {
        return Err(Error::OutOfRange {
            what: "budget",
            value: budget,
        });
    }
    let (range, make) = family_slice(family, dy, layer_upper)?;
    let lo = smallest_feasible(range, budget, |t| treaty_premium(spec, dy, &make(t)))?;
    Ok(ParamRange { lo, hi: range.hi })
}
