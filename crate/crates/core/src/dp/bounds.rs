use crate::error::Result;

use super::model::{ModelConfig, StageData};
use super::value::ValueFunction;

/// Affine envelope `-c_low - a x^+ <= J(x) <= c_high + a x^-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub a: f64,
    pub c_low: f64,
    pub c_high: f64,
}

impl Bounds {
    pub const ZERO: Bounds = Bounds {
        a: 0.0,
        c_low: 0.0,
        c_high: 0.0,
    };

    pub fn low(&self, x: f64) -> f64 {
        -self.c_low - self.a * x.max(0.0)
    }

    pub fn high(&self, x: f64) -> f64 {
        self.c_high + self.a * (-x).max(0.0)
    }

    /// Grid points where `v` leaves the envelope by more than `slack`.
    pub fn violations(&self, v: &ValueFunction, slack: f64) -> Vec<f64> {
        v.grid()
            .iter()
            .zip(v.values())
            .filter(|(&x, &j)| j < self.low(x) - slack || j > self.high(x) + slack)
            .map(|(&x, _)| x)
            .collect()
    }
}

/// Envelope of `J_n` given that of `J_{n+1}`.
pub fn stage_bounds(stage: &StageData, next: &Bounds) -> Result<Bounds> {
    let k = 1.0 + stage.beta * next.a;
    let scaled = stage.dy.scale(k);
    Ok(Bounds {
        a: k,
        c_low: k * stage.dz.ess_sup() + stage.beta * next.c_low,
        c_high: stage.risk.evaluate(&scaled)? + k * stage.premium.price(&stage.dy)? + stage.beta * next.c_high,
    })
}

/// Envelopes for `J_0, ..., J_N` of a finite-horizon model; the last is zero.
pub fn finite_bounds(config: &ModelConfig) -> Result<Vec<Bounds>> {
    let n = config.periods().expect("finite horizon");
    let mut out = vec![Bounds::ZERO; n + 1];
    for m in (0..n).rev() {
        out[m] = stage_bounds(&config.stage_data(m)?, &out[m + 1])?;
    }
    Ok(out)
}

/// Stationary envelope `-x^+/(1-beta) - eta_low/(1-beta)^2 <= J <= x^-/(1-beta) + eta_high/(1-beta)^2`.
pub fn infinite_bounds(stage: &StageData) -> Result<Bounds> {
    let d = 1.0 - stage.beta;
    let eta_low = stage.dz.ess_sup();
    let eta_high = stage.risk.evaluate(&stage.dy)? + stage.premium.price(&stage.dy)?;
    Ok(Bounds {
        a: 1.0 / d,
        c_low: eta_low / (d * d),
        c_high: eta_high / (d * d),
    })
}
