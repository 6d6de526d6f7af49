//! Closed-form solutions used as independent checks of the Bellman solver.
//!
//! * VaR criterion with a layer treaty: the optimal policy is myopic and the
//!   deductible solves a one-dimensional first-order condition.
//! * ES criterion, expected-value premium and uniform claims: the optimal
//!   stop-loss retention is explicit in the budget.
//! * Unconstrained positively homogeneous criteria: value functions are affine.

use serde::Serialize;

use crate::distortion::Distortion;
use crate::distributions::{independent_product, DiscreteDistribution};
use crate::dp::{minimize, FiniteSolution, ModelConfig, SearchSpec, StageData, TreatyConfig, ValueFunction};
use crate::error::{Error, Result};
use crate::premiums::{layer_premium_closed_form, PremiumSpec};
use crate::risk::RiskSpec;
use crate::treaties::{Treaty, TreatyFamily};

const BRACKET: f64 = 1e-10;

/// Optimal layer deductibles under a Value-at-Risk criterion.
#[derive(Debug, Clone)]
pub struct VarLayerSolution {
    /// Unconstrained optimal deductible.
    pub a_star: f64,
    /// Upper point of the layer, `VaR_alpha(Y)`.
    pub var_level: f64,
    dy: DiscreteDistribution,
    g: Distortion,
    theta: f64,
}

impl VarLayerSolution {
    /// Premium of the layer `[a, VaR]`.
    pub fn layer_premium(&self, a: f64) -> Result<f64> {
        layer_premium_closed_form(&self.dy, &self.g, self.theta, a, self.var_level)
    }

    /// Static objective `a + pi(h_a)`.
    pub fn psi(&self, a: f64) -> Result<f64> {
        Ok(a + self.layer_premium(a)?)
    }

    /// Smallest deductible in `[a*, VaR]` whose layer premium fits into `x^+`.
    pub fn a_of_x(&self, x: f64) -> Result<f64> {
        let budget = x.max(0.0);
        if self.layer_premium(self.a_star)? <= budget {
            return Ok(self.a_star);
        }
        let (mut lo, mut hi) = (self.a_star, self.var_level);
        while hi - lo > BRACKET {
            let mid = 0.5 * (lo + hi);
            if self.layer_premium(mid)? <= budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Deductible of the optimal layer `h_a(y) = max(min(a, y), y - VaR + a)`.
///
/// With `psi'(a) = 1 - (1 + theta) g(S_Y(a))`, the unconstrained optimum is
/// `inf {a : psi'(a) >= 0}` when `g(1 - alpha) < 1 / (1 + theta)` and `VaR_alpha(Y)`
/// otherwise.
pub fn oracle_var_layer(dy: &DiscreteDistribution, g: &Distortion, theta: f64, alpha: f64) -> Result<VarLayerSolution> {
    g.validate()?;
    let var_level = dy.quantile(alpha)?;
    let dpsi = |a: f64| 1.0 - (1.0 + theta) * g.eval(dy.survival(a));
    let a_star = if g.eval(1.0 - alpha) < 1.0 / (1.0 + theta) {
        let (mut lo, mut hi) = (0.0, var_level);
        if dpsi(lo) >= 0.0 {
            hi = lo;
        }
        while hi - lo > BRACKET {
            let mid = 0.5 * (lo + hi);
            if dpsi(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // psi' only jumps at atoms; land exactly on the jump.
        let i = dy.values().partition_point(|&v| v < hi - 2.0 * BRACKET);
        match dy.values().get(i) {
            Some(&v) if (v - hi).abs() <= 2.0 * BRACKET && dpsi(v) >= 0.0 => v,
            _ => hi,
        }
        .min(var_level)
    } else {
        var_level
    };
    Ok(VarLayerSolution {
        a_star,
        var_level,
        dy: dy.clone(),
        g: g.clone(),
        theta,
    })
}

/// Optimal stop-loss retention for uniform claims on `[0, 1]`, ES criterion
/// and expected-value premium: `max(min(theta/(1+theta), alpha), (1 - sqrt(2x^+/(1+theta)))^+)`.
pub fn oracle_es_uniform(theta: f64, alpha: f64, x: f64) -> Result<f64> {
    if 1.0 / (1.0 - alpha) < 1.0 + theta {
        return Err(Error::ParameterRegime(format!(
            "need 1/(1-alpha) >= 1+theta, got alpha={alpha}, theta={theta}"
        )));
    }
    let floor = (theta / (1.0 + theta)).min(alpha);
    let budget = (1.0 - (2.0 * x.max(0.0) / (1.0 + theta)).sqrt()).max(0.0);
    Ok(floor.max(budget))
}

/// Static optimum `min rho(f(Y) + pi(f) - Z)` over the configured family.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticOptimum {
    pub treaty: Treaty,
    pub premium: f64,
    pub value: f64,
}

/// One-period problem with an optional premium budget.
pub fn static_reinsurance(
    risk: &RiskSpec,
    premium: &PremiumSpec,
    dy: &DiscreteDistribution,
    dz: &DiscreteDistribution,
    budget: Option<f64>,
    treaty: &TreatyConfig,
) -> Result<StaticOptimum> {
    let stage = StageData {
        dy: dy.clone(),
        dz: dz.clone(),
        risk: risk.clone(),
        premium: premium.clone(),
        beta: 0.0,
        budget_constrained: budget.is_some(),
        search: SearchSpec::resolve(treaty, dy, risk)?,
    };
    let objective = |f: &Treaty, p: f64| {
        let u = independent_product(dy, dz, |y, z| f.retained(y) + p - z);
        risk.evaluate(&u)
    };
    let m = minimize(&stage, budget.map(|b| b.max(0.0)), &objective)?;
    Ok(StaticOptimum {
        treaty: m.treaty,
        premium: m.premium,
        value: m.value,
    })
}

/// Affine value functions of an unconstrained, positively homogeneous model.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedSolution {
    /// `min_f rho(f(Y) - Z) + pi(f)`.
    pub c: f64,
    /// Optimal at every stage and state.
    pub treaty: Treaty,
    pub beta: f64,
    /// `N`, or `None` for the infinite horizon.
    pub periods: Option<usize>,
}

impl UnconstrainedSolution {
    /// `(intercept, slope)` of `J_n`. For the infinite horizon `n` is ignored.
    pub fn coefficients(&self, n: usize) -> (f64, f64) {
        let b = self.beta;
        match self.periods {
            Some(big_n) => {
                let mut intercept = 0.0;
                let mut slope = 0.0;
                for k in 0..big_n.saturating_sub(n) {
                    let w = b.powi(k as i32);
                    intercept += (k as f64 + 1.0) * w;
                    slope -= w;
                }
                (self.c * intercept, slope)
            }
            None => (self.c / ((1.0 - b) * (1.0 - b)), -1.0 / (1.0 - b)),
        }
    }

    pub fn value(&self, n: usize, x: f64) -> f64 {
        let (c0, c1) = self.coefficients(n);
        c0 + c1 * x
    }

    /// `J_n` sampled on `grid` with matching extrapolation slopes.
    pub fn value_function(&self, n: usize, grid: &[f64]) -> ValueFunction {
        let (_, slope) = self.coefficients(n);
        ValueFunction::from_fn(grid, |x| self.value(n, x), slope, slope)
    }
}

pub fn oracle_unconstrained(config: &ModelConfig) -> Result<UnconstrainedSolution> {
    if config.budget_constrained {
        return Err(Error::ParameterRegime("the affine solution needs an unconstrained model".into()));
    }
    if config.stages.is_some() {
        return Err(Error::ParameterRegime("the affine solution needs stationary data".into()));
    }
    let s = &config.stage;
    if !s.risk.is_positive_homogeneous() {
        return Err(Error::ParameterRegime(format!(
            "the affine solution needs a positively homogeneous risk measure, got {}",
            s.risk.kind()
        )));
    }
    let opt = static_reinsurance(&s.risk, &s.premium, &s.claims, &s.income, None, &config.treaty)?;
    Ok(UnconstrainedSolution {
        c: opt.value,
        treaty: opt.treaty,
        beta: config.beta,
        periods: config.periods(),
    })
}

/// One row of an oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub stage: usize,
    pub x: f64,
    pub oracle: f64,
    pub dp: f64,
}

impl GapRow {
    pub fn gap(&self) -> f64 {
        (self.oracle - self.dp).abs()
    }
}

/// Which closed form applies to a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Deductibles at every stage.
    VarLayer,
    /// Stop-loss retentions at the last stage.
    EsUniform,
    /// Values at every stage.
    Unconstrained,
}

pub fn applicable_oracle(config: &ModelConfig) -> Result<OracleKind> {
    let s = &config.stage;
    let stationary = config.stages.is_none();
    if !config.budget_constrained && stationary && s.risk.is_positive_homogeneous() {
        return Ok(OracleKind::Unconstrained);
    }
    if config.periods().is_some() {
        let all_var = (0..config.periods().unwrap())
            .all(|n| matches!(config.stage_spec(n).risk, RiskSpec::ValueAtRisk { .. }));
        let deterministic_z = (0..config.periods().unwrap()).all(|n| config.stage_spec(n).income.len() == 1);
        if all_var && deterministic_z && config.treaty.family == TreatyFamily::Layer && config.treaty.upper.is_none() {
            return Ok(OracleKind::VarLayer);
        }
        if stationary
            && matches!(s.risk, RiskSpec::ExpectedShortfall { .. })
            && matches!(s.premium, PremiumSpec::Expected { .. })
            && config.treaty.family == TreatyFamily::StopLoss
            && looks_standard_uniform(&s.claims)
        {
            return Ok(OracleKind::EsUniform);
        }
    }
    Err(Error::ParameterRegime("no closed-form solution covers this configuration".into()))
}

/// Moment and support check for a discretized uniform law on `[0, 1]`.
fn looks_standard_uniform(d: &DiscreteDistribution) -> bool {
    d.len() >= 100
        && d.ess_inf() >= 0.0
        && d.ess_sup() <= 1.0
        && (d.mean() - 0.5).abs() < 1e-3
        && (d.variance() - 1.0 / 12.0).abs() < 1e-3
}

/// Compares a finite-horizon solution with the applicable closed form.
pub fn oracle_gaps(config: &ModelConfig, solution: &FiniteSolution) -> Result<(OracleKind, Vec<GapRow>)> {
    let kind = applicable_oracle(config)?;
    let grid = config.grid_points();
    let n_periods = config.periods().unwrap_or(1);
    let mut rows = Vec::new();
    match kind {
        OracleKind::Unconstrained => {
            let oracle = oracle_unconstrained(config)?;
            for n in 0..n_periods {
                for (&x, &j) in grid.iter().zip(solution.values[n].values()) {
                    rows.push(GapRow {
                        stage: n,
                        x,
                        oracle: oracle.value(n, x),
                        dp: j,
                    });
                }
            }
        }
        OracleKind::VarLayer => {
            for n in 0..n_periods {
                let s = config.stage_spec(n);
                let alpha = match s.risk {
                    RiskSpec::ValueAtRisk { alpha } => alpha,
                    _ => unreachable!(),
                };
                let sol = oracle_var_layer(&s.claims, &s.premium.distortion(), s.premium.theta(), alpha)?;
                for (&x, f) in grid.iter().zip(solution.policy.row(n)) {
                    rows.push(GapRow {
                        stage: n,
                        x,
                        oracle: sol.a_of_x(x)?,
                        dp: f.params()[0],
                    });
                }
            }
        }
        OracleKind::EsUniform => {
            let s = &config.stage;
            let alpha = match s.risk {
                RiskSpec::ExpectedShortfall { alpha } => alpha,
                _ => unreachable!(),
            };
            let n = n_periods - 1;
            for (&x, f) in grid.iter().zip(solution.policy.row(n)) {
                rows.push(GapRow {
                    stage: n,
                    x,
                    oracle: oracle_es_uniform(s.premium.theta(), alpha, x)?,
                    dp: f.params()[0],
                });
            }
        }
    }
    Ok((kind, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::FamilySpec;

    fn uniform(m: usize) -> DiscreteDistribution {
        DiscreteDistribution::discretize(&FamilySpec::uniform(0.0, 1.0, m)).unwrap()
    }

    #[test]
    fn var_layer_case_one() {
        let sol = oracle_var_layer(&uniform(2001), &Distortion::Identity, 0.2, 0.95).unwrap();
        assert!((sol.a_star - 1.0 / 6.0).abs() < 1e-3, "{}", sol.a_star);
        assert!(sol.a_star <= sol.var_level);
        let generous = sol.layer_premium(sol.a_star).unwrap() + 0.01;
        assert_eq!(sol.a_of_x(generous).unwrap(), sol.a_star);
        assert!((sol.a_of_x(0.0).unwrap() - sol.var_level).abs() < 1e-9);
    }

    #[test]
    fn var_layer_case_two() {
        // g(0.05) = 0.05^0.1 ~ 0.74 > 1/1.5
        let g = Distortion::PowerHazard(0.1);
        let u = uniform(1001);
        let sol = oracle_var_layer(&u, &g, 0.5, 0.95).unwrap();
        assert_eq!(sol.a_star, u.quantile(0.95).unwrap());
    }

    #[test]
    fn var_layer_deductible_decreases_in_budget() {
        let sol = oracle_var_layer(&uniform(2001), &Distortion::Identity, 0.2, 0.95).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let a = sol.a_of_x(-0.2 + i as f64 * 0.02).unwrap();
            assert!(a <= prev + 1e-12);
            assert!(a >= sol.a_star);
            prev = a;
        }
    }

    #[test]
    fn es_uniform_examples() {
        assert!((oracle_es_uniform(0.2, 0.95, 0.6).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(oracle_es_uniform(0.2, 0.95, 0.0).unwrap(), 1.0);
        assert_eq!(oracle_es_uniform(0.0, 0.5, 10.0).unwrap(), 0.0);
        assert!(matches!(oracle_es_uniform(0.2, 0.1, 1.0), Err(Error::ParameterRegime(_))));
    }

    #[test]
    fn unconstrained_coefficients() {
        let sol = UnconstrainedSolution {
            c: 1.0,
            treaty: Treaty::Identity,
            beta: 0.9,
            periods: Some(3),
        };
        let (c0, c1) = sol.coefficients(0);
        assert!((c1 + 2.71).abs() < 1e-12);
        assert!((c0 - 5.23).abs() < 1e-12);
        assert_eq!(sol.coefficients(2), (1.0, -1.0));
        let inf = UnconstrainedSolution { periods: None, ..sol };
        let (c0, c1) = inf.coefficients(0);
        assert!((c0 - 100.0).abs() < 1e-9 && (c1 + 10.0).abs() < 1e-12);
    }

    #[test]
    fn static_es_matches_closed_form() {
        let u = uniform(2001);
        let z = DiscreteDistribution::point_mass(0.3);
        let t = TreatyConfig::new(TreatyFamily::StopLoss);
        for x in [0.0, 0.05, 0.15, 0.6] {
            let opt = static_reinsurance(&RiskSpec::es(0.95), &PremiumSpec::expected(0.2), &u, &z, Some(x), &t).unwrap();
            let a = opt.treaty.params()[0];
            let want = oracle_es_uniform(0.2, 0.95, x).unwrap().min(u.ess_sup());
            assert!((a - want).abs() < 5e-3, "x={x}: {a} vs {want}");
        }
    }

    #[test]
    fn static_unconstrained_is_bracketed_by_endpoints() {
        let u = uniform(501);
        let z = DiscreteDistribution::point_mass(0.0);
        let t = TreatyConfig::new(TreatyFamily::StopLoss);
        let rho = RiskSpec::es(0.9);
        let pi = PremiumSpec::expected(0.1);
        let opt = static_reinsurance(&rho, &pi, &u, &z, None, &t).unwrap();
        let keep = rho.evaluate(&u).unwrap();
        let cede = pi.price(&u).unwrap();
        assert!(opt.value <= keep.min(cede) + 1e-12);
    }
}
