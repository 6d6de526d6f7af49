//! Forward Monte Carlo of the controlled surplus process.
//!
//! Paths are split into fixed-size batches. Batch `b` draws from a ChaCha8
//! generator seeded with the master seed and switched to stream `b`, so results
//! do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::DiscreteDistribution;
use crate::dp::{evaluate_policy, ModelConfig, PolicyTable, StageData, ValueFunction};
use crate::error::{Error, Result};
use crate::premiums::treaty_premium;
use crate::risk::RiskSpec;
use crate::treaties::Treaty;

/// Paths per independent random stream.
pub const BATCH: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalSummary {
    pub mean: f64,
    pub std_error: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub paths: usize,
    pub periods: usize,
    pub seed: u64,
    /// Fraction of paths with negative surplus at some period `1..=N`.
    pub ruin_probability: f64,
    /// `1.96 sqrt(p (1 - p) / n)`.
    pub ci_half_width: f64,
    pub terminal: TerminalSummary,
    /// Number of paths with negative surplus at the end of each period.
    pub ruin_by_period: Vec<usize>,
    /// Number of paths whose first ruin happens in each period.
    pub first_ruin_by_period: Vec<usize>,
    /// Per-period counts of a positive one-step cost `U_n`, when value functions are supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imputed_ruin_by_period: Option<Vec<usize>>,
}

struct Batch {
    terminal: Vec<f64>,
    ruined: usize,
    ruin_by_period: Vec<usize>,
    first_ruin: Vec<usize>,
    imputed: Vec<usize>,
}

fn draw(d: &DiscreteDistribution, rng: &mut ChaCha8Rng) -> f64 {
    if d.len() == 1 {
        return d.values()[0];
    }
    // u in (0, 1]
    let u = 1.0 - rng.gen::<f64>();
    d.values()[d.quantile_index(u).min(d.len() - 1)]
}

/// Simulates `n_paths` surplus paths from `config.initial_capital` under `policy`.
pub fn simulate_paths(policy: &PolicyTable, config: &ModelConfig, n_paths: usize, seed: u64) -> Result<SimResult> {
    simulate_with_values(policy, config, n_paths, seed, None)
}

/// As [`simulate_paths`], additionally counting periods whose one-step cost
/// `f(Y) + p - Z - x + beta J_{n+1}(x')` is positive, given `J_0..J_N`.
pub fn simulate_with_values(
    policy: &PolicyTable,
    config: &ModelConfig,
    n_paths: usize,
    seed: u64,
    values: Option<&[ValueFunction]>,
) -> Result<SimResult> {
    if n_paths == 0 {
        return Err(Error::validation("simulation.paths", "must be at least 1"));
    }
    let periods = match config.periods() {
        Some(n) => n,
        None => config.simulation.periods.unwrap_or(10),
    };
    let grid = policy.grid().to_vec();
    let stages: Vec<StageData> = (0..periods).map(|n| config.stage_data(n)).collect::<Result<_>>()?;
    // premium of every tabulated treaty
    let premiums: Vec<Vec<f64>> = (0..periods)
        .map(|n| {
            policy
                .row(n)
                .iter()
                .map(|f| treaty_premium(&stages[n].premium, &stages[n].dy, f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let x0 = config.initial_capital;
    let n_batches = n_paths.div_ceil(BATCH);
    let batches: Vec<Batch> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(n_paths - b * BATCH);
            let mut out = Batch {
                terminal: Vec::with_capacity(count),
                ruined: 0,
                ruin_by_period: vec![0; periods],
                first_ruin: vec![0; periods],
                imputed: vec![0; periods],
            };
            for _ in 0..count {
                let mut x = x0;
                let mut ruined = false;
                for n in 0..periods {
                    let s = &stages[n];
                    let (f, p) = match grid.partition_point(|&t| t <= x).checked_sub(1) {
                        Some(j) => (&policy.row(n)[j], premiums[n][j]),
                        None => (&Treaty::Identity, 0.0),
                    };
                    if s.budget_constrained && p > x.max(0.0) + 1e-12 {
                        return Err(Error::InfeasiblePolicyRow {
                            stage: n,
                            state: x,
                            reason: format!("premium {p} exceeds surplus"),
                        });
                    }
                    let y = draw(&s.dy, &mut rng);
                    let z = draw(&s.dz, &mut rng);
                    let r = f.retained(y);
                    let next = x - r - p + z;
                    if let Some(v) = values {
                        if r + p - z - x + s.beta * v[n + 1].eval(next) > 0.0 {
                            out.imputed[n] += 1;
                        }
                    }
                    x = next;
                    if x < 0.0 {
                        out.ruin_by_period[n] += 1;
                        if !ruined {
                            out.first_ruin[n] += 1;
                            ruined = true;
                        }
                    }
                }
                if ruined {
                    out.ruined += 1;
                }
                out.terminal.push(x);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut terminal = Vec::with_capacity(n_paths);
    let mut ruined = 0;
    let mut ruin_by_period = vec![0; periods];
    let mut first_ruin_by_period = vec![0; periods];
    let mut imputed = vec![0; periods];
    for b in batches {
        terminal.extend(b.terminal);
        ruined += b.ruined;
        for n in 0..periods {
            ruin_by_period[n] += b.ruin_by_period[n];
            first_ruin_by_period[n] += b.first_ruin[n];
            imputed[n] += b.imputed[n];
        }
    }
    let n = n_paths as f64;
    let p = ruined as f64 / n;
    let mean = terminal.iter().sum::<f64>() / n;
    let var = if n_paths > 1 {
        terminal.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    terminal.sort_by(f64::total_cmp);
    let q = |u: f64| terminal[((u * n).ceil() as usize).clamp(1, n_paths) - 1];
    Ok(SimResult {
        paths: n_paths,
        periods,
        seed,
        ruin_probability: p,
        ci_half_width: 1.96 * (p * (1.0 - p) / n).sqrt(),
        terminal: TerminalSummary {
            mean,
            std_error: (var / n).sqrt(),
            q05: q(0.05),
            q50: q(0.5),
            q95: q(0.95),
        },
        ruin_by_period,
        first_ruin_by_period,
        imputed_ruin_by_period: values.map(|_| imputed),
    })
}

/// Ruin-probability bound `sum (1 - alpha_n)` and whether its precondition holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuinBound {
    pub bound: f64,
    /// `J_{n,pi}(x_n) <= 0` along the drift path at every stage.
    pub holds_precondition: bool,
    /// Surplus levels visited by the drift path.
    pub path: Vec<f64>,
}

/// Checks the precondition of the ruin bound along the path
/// `x_{n+1} = x_n + z_n - f_n(VaR_alpha(Y)) - pi(f_n)` with `z_n` the
/// `(1 - alpha)`-quantile of income, using policy values at the grid state below.
pub fn ruin_bound_check(policy: &PolicyTable, config: &ModelConfig, x0: f64) -> Result<RuinBound> {
    let periods = config.periods().ok_or(Error::NotVaRConfig)?;
    let mut alphas = Vec::with_capacity(periods);
    for n in 0..periods {
        match config.stage_spec(n).risk {
            RiskSpec::ValueAtRisk { alpha } => alphas.push(alpha),
            _ => return Err(Error::NotVaRConfig),
        }
    }
    let bound = alphas.iter().map(|a| 1.0 - a).sum();
    let values = evaluate_policy(policy, config)?;
    let grid = policy.grid();
    let mut x = x0;
    let mut path = vec![x];
    let mut holds = true;
    for n in 0..periods {
        let s = config.stage_data(n)?;
        let (f, j) = match grid.partition_point(|&t| t <= x).checked_sub(1) {
            Some(j) => (policy.row(n)[j].clone(), Some(j)),
            None => (Treaty::Identity, None),
        };
        let value = match j {
            Some(j) => values[n].values()[j],
            None => values[n].eval(x),
        };
        if value > 0.0 {
            holds = false;
        }
        let p = treaty_premium(&s.premium, &s.dy, &f)?;
        let y = s.dy.quantile(alphas[n])?;
        let z = s.dz.quantile((1.0 - alphas[n]).max(f64::MIN_POSITIVE))?;
        x = x + z - f.retained(y) - p;
        path.push(x);
    }
    Ok(RuinBound {
        bound,
        holds_precondition: holds,
        path,
    })
}
