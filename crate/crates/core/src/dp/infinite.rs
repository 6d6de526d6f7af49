use crate::error::{Error, Result};
use crate::treaties::Treaty;

use super::bounds::Bounds;
use super::model::{ModelConfig, StageData};
use super::operator::{step, Choice, StepOutput};
use super::policy::PolicyTable;
use super::value::ValueFunction;

/// Contraction modulus `1 - (1 - beta)^2` of the Bellman operator in the weighted norm.
pub fn modulus(beta: f64) -> f64 {
    1.0 - (1.0 - beta) * (1.0 - beta)
}

/// Weight `b(x) = |x| / (1 - beta) + eta / (1 - beta)^2` of the weighted supremum norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub beta: f64,
    pub eta: f64,
}

impl Weight {
    /// `eta = rho(Y) + pi(Y) + |ess sup Z|`.
    pub fn for_stage(s: &StageData) -> Result<Self> {
        let eta = s.risk.evaluate(&s.dy)? + s.premium.price(&s.dy)? + s.dz.ess_sup().abs();
        Ok(Self {
            beta: s.beta,
            eta: eta.max(1e-12),
        })
    }

    pub fn at(&self, x: f64) -> f64 {
        let d = 1.0 - self.beta;
        x.abs() / d + self.eta / (d * d)
    }

    /// `max_j |v1(x_j) - v2(x_j)| / b(x_j)`.
    pub fn norm(&self, v1: &ValueFunction, v2: &ValueFunction) -> Result<f64> {
        if !v1.same_grid(v2) {
            return Err(Error::GridMismatch);
        }
        Ok(v1
            .grid()
            .iter()
            .zip(v1.values().iter().zip(v2.values()))
            .map(|(&x, (a, b))| (a - b).abs() / self.at(x))
            .fold(0.0, f64::max))
    }
}

/// Weighted distance between two value functions on a shared grid.
pub fn weighted_norm(v1: &ValueFunction, v2: &ValueFunction, beta: f64, eta: f64) -> Result<f64> {
    Weight { beta, eta }.norm(v1, v2)
}

/// Successive approximations `v_{k+1} = T v_k` from `v_0 = 0`.
pub struct ValueIteration<'a> {
    stage: &'a StageData,
    grid: Vec<f64>,
    current: ValueFunction,
    k: usize,
}

impl<'a> ValueIteration<'a> {
    pub fn new(stage: &'a StageData, grid: &[f64]) -> Self {
        Self {
            stage,
            grid: grid.to_vec(),
            current: ValueFunction::zero(grid),
            k: 0,
        }
    }

    pub fn current(&self) -> &ValueFunction {
        &self.current
    }

    pub fn iterations(&self) -> usize {
        self.k
    }

    /// Applies `T` once and returns the step output; `current` becomes the new iterate.
    pub fn advance(&mut self) -> Result<StepOutput> {
        let out = step(&self.current, self.stage, &self.grid, self.k, Choice::Optimize)?;
        self.current = out.value.clone();
        self.k += 1;
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct InfiniteSolution {
    pub value: ValueFunction,
    pub policy: PolicyTable,
    pub iterations: usize,
    /// Guaranteed bound on the weighted distance to the fixed point.
    pub certificate: f64,
    /// `||v_{k+1} - v_k||_b` for every iteration.
    pub residuals: Vec<f64>,
    pub evaluations: usize,
}

/// Value iteration until the a-posteriori bound `q / (1 - q) ||v_K - v_{K-1}||_b`
/// drops below `tol`.
pub fn solve_infinite(config: &ModelConfig, tol: f64) -> Result<InfiniteSolution> {
    if !config.is_infinite() {
        return Err(Error::validation("horizon", "expected an infinite horizon"));
    }
    let s = config.stage_data(0)?;
    let q = modulus(s.beta);
    let weight = Weight::for_stage(&s)?;
    let threshold = tol * (1.0 - q) / q;
    let grid = config.grid_points();
    let mut it = ValueIteration::new(&s, &grid);
    let mut residuals = Vec::new();
    let mut evaluations = 0;
    loop {
        let prev = it.current().clone();
        let out = it.advance()?;
        evaluations += out.evaluations;
        let r = weight.norm(&out.value, &prev)?;
        residuals.push(r);
        if r <= threshold {
            return Ok(InfiniteSolution {
                value: out.value,
                policy: PolicyTable::stationary(grid, out.row)?,
                iterations: it.iterations(),
                certificate: q / (1.0 - q) * r,
                residuals,
                evaluations,
            });
        }
        if it.iterations() >= config.max_iterations {
            return Err(Error::MaxIterations {
                iterations: it.iterations(),
                residual: r,
            });
        }
    }
}

/// Fixed point of `T_d` for a stationary decision rule, with the same stopping rule.
pub fn evaluate_stationary_policy(row: &[Treaty], config: &ModelConfig, tol: f64) -> Result<(ValueFunction, f64)> {
    let s = config.stage_data(0)?;
    let q = modulus(s.beta);
    let weight = Weight::for_stage(&s)?;
    let grid = config.grid_points();
    let mut v = ValueFunction::zero(&grid);
    for k in 1..=config.max_iterations {
        let next = step(&v, &s, &grid, k - 1, Choice::Fixed(row))?.value;
        let r = weight.norm(&next, &v)?;
        v = next;
        if r <= tol * (1.0 - q) / q {
            return Ok((v, q / (1.0 - q) * r));
        }
        if k == config.max_iterations {
            return Err(Error::MaxIterations { iterations: k, residual: r });
        }
    }
    unreachable!("max_iterations is at least 1")
}

/// `v_n >= v_m + b_low q^m / (1 - q)` on the grid, for iterates `v_m = T^m 0` with `n >= m`.
pub fn weakly_increasing(v_n: &ValueFunction, v_m: &ValueFunction, m: usize, bounds: &Bounds, q: f64) -> bool {
    let tail = q.powi(m as i32) / (1.0 - q);
    v_n.grid()
        .iter()
        .zip(v_n.values().iter().zip(v_m.values()))
        .all(|(&x, (&a, &b))| a >= b + bounds.low(x) * tail - 1e-9)
}
