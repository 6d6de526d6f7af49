use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

use super::model::ModelConfig;
use super::operator::{bellman_step, step, Choice};
use super::policy::PolicyTable;
use super::value::ValueFunction;

/// Work done at one backward-induction stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageStats {
    pub stage: usize,
    pub evaluations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct FiniteSolution {
    /// `J_0, ..., J_N` with `J_N = 0`.
    pub values: Vec<ValueFunction>,
    pub policy: PolicyTable,
    pub stats: Vec<StageStats>,
}

/// Backward induction `J_n = T_n J_{n+1}` from `J_N = 0`.
pub fn solve_finite(config: &ModelConfig) -> Result<FiniteSolution> {
    let n = config
        .periods()
        .ok_or_else(|| Error::validation("horizon", "finite-horizon solver needs a period count"))?;
    let grid = config.grid_points();
    let mut values = vec![ValueFunction::zero(&grid)];
    let mut rows = Vec::with_capacity(n);
    let mut stats = Vec::with_capacity(n);
    for m in (0..n).rev() {
        let started = Instant::now();
        let s = config.stage_data(m)?;
        let out = bellman_step(values.last().unwrap(), &s, &grid, m)?;
        stats.push(StageStats {
            stage: m,
            evaluations: out.evaluations,
            seconds: started.elapsed().as_secs_f64(),
        });
        values.push(out.value);
        rows.push(out.row);
    }
    values.reverse();
    rows.reverse();
    stats.reverse();
    Ok(FiniteSolution {
        values,
        policy: PolicyTable::new(grid, rows)?,
        stats,
    })
}

/// Value `J_{n,pi}` of a Markov policy at every stage, by `J_{n,pi} = T_{n,d_n} J_{n+1,pi}`.
pub fn evaluate_policy(policy: &PolicyTable, config: &ModelConfig) -> Result<Vec<ValueFunction>> {
    let n = config
        .periods()
        .ok_or_else(|| Error::validation("horizon", "policy evaluation needs a finite horizon"))?;
    let grid = config.grid_points();
    if policy.grid() != grid.as_slice() {
        return Err(Error::GridMismatch);
    }
    let mut values = vec![ValueFunction::zero(&grid)];
    for m in (0..n).rev() {
        let s = config.stage_data(m)?;
        let out = step(values.last().unwrap(), &s, &grid, m, Choice::Fixed(policy.row(m)))?;
        values.push(out.value);
    }
    values.reverse();
    Ok(values)
}
