use rayon::prelude::*;

use crate::distributions::independent_product;
use crate::error::{Error, Result};
use crate::premiums::treaty_premium;
use crate::treaties::{family_slice, smallest_feasible, ParamRange, Treaty, TreatyFamily};

use super::model::StageData;
use super::value::ValueFunction;

/// Minimizers within this distance of the best value count as ties.
const TIE: f64 = 1e-9;
const MONOTONE_SLACK: f64 = 1e-6;
const PREMIUM_SLACK: f64 = 1e-12;
const PL_SWEEPS: usize = 3;

/// `L v(x, f) = rho(f(Y) + p - Z - x + beta v(x + Z - f(Y) - p))` with `p = pi(f)`.
pub fn apply_l(v: &ValueFunction, x: f64, f: &Treaty, s: &StageData) -> Result<f64> {
    let p = treaty_premium(&s.premium, &s.dy, f)?;
    l_with_premium(v, x, f, p, s)
}

fn l_with_premium(v: &ValueFunction, x: f64, f: &Treaty, p: f64, s: &StageData) -> Result<f64> {
    let beta = s.beta;
    let u = independent_product(&s.dy, &s.dz, |y, z| {
        let r = f.retained(y);
        r + p - z - x + beta * v.eval(x + z - r - p)
    });
    s.risk.evaluate(&u)
}

/// Best treaty found for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub treaty: Treaty,
    pub premium: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `objective(f, pi(f))` over the stage's treaty family subject to
/// `pi(f) <= budget` when a budget is given.
pub(crate) fn minimize(
    s: &StageData,
    budget: Option<f64>,
    objective: &dyn Fn(&Treaty, f64) -> Result<f64>,
) -> Result<Minimum> {
    let mut evaluations = 0usize;
    let mut eval = |f: &Treaty| -> Result<(f64, f64)> {
        evaluations += 1;
        let p = treaty_premium(&s.premium, &s.dy, f)?;
        Ok((p, objective(f, p)?))
    };
    let affordable = |p: f64| budget.map_or(true, |b| p <= b + PREMIUM_SLACK);
    let search = &s.search;
    let best = match search.family {
        TreatyFamily::Identity => {
            let (p, v) = eval(&Treaty::Identity)?;
            (Treaty::Identity, p, v)
        }
        TreatyFamily::FullCession => {
            let (p0, v0) = eval(&Treaty::Identity)?;
            let (p1, v1) = eval(&Treaty::FullCession)?;
            if affordable(p1) && v1 <= v0 + TIE {
                (Treaty::FullCession, p1, v1)
            } else {
                (Treaty::Identity, p0, v0)
            }
        }
        TreatyFamily::StopLoss | TreatyFamily::Layer | TreatyFamily::Proportional => {
            let (range, make) = family_slice(search.family, &s.dy, search.layer_upper)?;
            let lo = match budget {
                Some(b) => smallest_feasible(range, b, |t| treaty_premium(&s.premium, &s.dy, &make(t)))?,
                None => range.lo,
            };
            let (t, _) = search_1d(ParamRange { lo, hi: range.hi }, search.coarse, |t| {
                Ok(eval(&make(t))?.1)
            })?;
            let f = make(t);
            let (p, v) = eval(&f)?;
            (f, p, v)
        }
        TreatyFamily::PiecewiseLinear => {
            let knots = search.knots.clone();
            let mut slopes = vec![1.0; knots.len()];
            let with = |slopes: &[f64], i: usize, t: f64| {
                let mut sl = slopes.to_vec();
                sl[i] = t;
                Treaty::PiecewiseLinear {
                    knots: knots.clone(),
                    slopes: sl,
                }
            };
            for _ in 0..PL_SWEEPS {
                for i in 0..knots.len() {
                    let range = ParamRange { lo: 0.0, hi: 1.0 };
                    let lo = match budget {
                        Some(b) => smallest_feasible(range, b, |t| {
                            treaty_premium(&s.premium, &s.dy, &with(&slopes, i, t))
                        })?,
                        None => 0.0,
                    };
                    let (t, _) = search_1d(ParamRange { lo, hi: 1.0 }, search.coarse, |t| {
                        Ok(eval(&with(&slopes, i, t))?.1)
                    })?;
                    slopes[i] = t;
                }
            }
            let f = Treaty::PiecewiseLinear { knots, slopes };
            let (p, v) = eval(&f)?;
            (f, p, v)
        }
    };
    Ok(Minimum {
        treaty: best.0,
        premium: best.1,
        value: best.2,
        evaluations,
    })
}

/// Coarse scan followed by golden-section refinement around the best scan
/// point. Ties go to the smaller parameter.
pub(crate) fn search_1d(
    range: ParamRange,
    coarse: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let ParamRange { lo, hi } = range;
    if !(hi > lo) {
        return Ok((lo, f(lo)?));
    }
    let n = coarse.max(3);
    let pts: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect();
    let mut vals = Vec::with_capacity(n);
    for &t in &pts {
        vals.push(f(t)?);
    }
    let i = pick(&vals);
    let mut a = pts[i.saturating_sub(1)];
    let mut b = pts[(i + 1).min(n - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-10 * hi.abs().max(1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let (tg, vg) = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut best = (pts[i], vals[i]);
    if vg < best.1 - TIE || (vg <= best.1 + TIE && tg < best.0) {
        best = (tg, vg);
    }
    Ok(best)
}

/// Index of the smallest value; near-ties resolve to the lowest index.
fn pick(vals: &[f64]) -> usize {
    let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
    vals.iter().position(|&v| v <= m + TIE).unwrap_or(0)
}

/// Per-state choice in a Bellman step: optimize, or apply a fixed decision rule.
#[derive(Debug, Clone, Copy)]
pub enum Choice<'a> {
    Optimize,
    Fixed(&'a [Treaty]),
}

/// Result of one application of `T_n` (or `T_{n,d}`) on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub value: ValueFunction,
    pub row: Vec<Treaty>,
    pub evaluations: usize,
}

/// `T_n v` on `grid`, with the minimizing treaty per state.
pub fn bellman_step(v_next: &ValueFunction, s: &StageData, grid: &[f64], stage: usize) -> Result<StepOutput> {
    step(v_next, s, grid, stage, Choice::Optimize)
}

/// `T_n v` or `T_{n,d} v`; both go through the same minimization.
pub fn step(v_next: &ValueFunction, s: &StageData, grid: &[f64], stage: usize, choice: Choice<'_>) -> Result<StepOutput> {
    if let Choice::Fixed(row) = choice {
        if row.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
    }
    let mins: Vec<Minimum> = grid
        .par_iter()
        .enumerate()
        .map(|(j, &x)| {
            let budget = s.budget_constrained.then(|| x.max(0.0));
            let objective = |f: &Treaty, p: f64| l_with_premium(v_next, x, f, p, s);
            match choice {
                Choice::Optimize => minimize(s, budget, &objective),
                Choice::Fixed(row) => {
                    let f = &row[j];
                    let p = treaty_premium(&s.premium, &s.dy, f)?;
                    if let Some(b) = budget {
                        if p > b + PREMIUM_SLACK {
                            return Err(Error::InfeasiblePolicyRow {
                                stage,
                                state: x,
                                reason: format!("premium {p} of {f} exceeds budget {b}"),
                            });
                        }
                    }
                    Ok(Minimum {
                        treaty: f.clone(),
                        premium: p,
                        value: objective(f, p)?,
                        evaluations: 1,
                    })
                }
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = mins.iter().map(|m| m.value).collect();
    if matches!(choice, Choice::Optimize) {
        check_decreasing(grid, &values, stage)?;
    }
    let (sl, sr) = v_next.slopes();
    let value = ValueFunction::new(
        grid.to_vec(),
        values,
        -(1.0 + s.beta * sl.abs()),
        -(1.0 + s.beta * sr.abs()),
    )?;
    let evaluations = mins.iter().map(|m| m.evaluations).sum();
    Ok(StepOutput {
        value,
        row: mins.into_iter().map(|m| m.treaty).collect(),
        evaluations,
    })
}

fn check_decreasing(grid: &[f64], values: &[f64], stage: usize) -> Result<()> {
    for j in 0..values.len() - 1 {
        let increase = values[j + 1] - values[j];
        if increase > MONOTONE_SLACK * values[j].abs().max(1.0) {
            return Err(Error::MonotonicityViolation {
                stage,
                left: grid[j],
                right: grid[j + 1],
                increase,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DiscreteDistribution, FamilySpec};
    use crate::dp::model::SearchSpec;
    use crate::premiums::PremiumSpec;
    use crate::risk::RiskSpec;

    fn stage(risk: RiskSpec, family: TreatyFamily, budget: bool) -> StageData {
        let dy = DiscreteDistribution::discretize(&FamilySpec::uniform(0.0, 1.0, 401)).unwrap();
        let layer_upper = match risk {
            RiskSpec::ValueAtRisk { alpha } => dy.quantile(alpha).unwrap(),
            _ => dy.ess_sup(),
        };
        StageData {
            dy,
            dz: DiscreteDistribution::point_mass(0.3),
            risk,
            premium: PremiumSpec::expected(0.2),
            beta: 0.9,
            budget_constrained: budget,
            search: SearchSpec {
                family,
                layer_upper,
                knots: vec![0.0, 0.25, 0.5, 0.75],
                coarse: 64,
            },
        }
    }

    #[test]
    fn search_1d_finds_interior_and_boundary_minima() {
        let (t, v) = search_1d(ParamRange { lo: 0.0, hi: 1.0 }, 64, |t| Ok((t - 0.3141).powi(2))).unwrap();
        assert!((t - 0.3141).abs() < 1e-6 && v < 1e-12);
        let (t, _) = search_1d(ParamRange { lo: 0.4, hi: 1.0 }, 64, |t| Ok(t)).unwrap();
        assert!((t - 0.4).abs() < 1e-9);
        let (t, _) = search_1d(ParamRange { lo: 0.0, hi: 1.0 }, 64, |_| Ok(1.0)).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn l_examples() {
        let s = stage(RiskSpec::es(0.9), TreatyFamily::StopLoss, true);
        let grid: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let zero = ValueFunction::zero(&grid);
        let rho_y = s.risk.evaluate(&s.dy).unwrap();
        let l = apply_l(&zero, 0.2, &Treaty::Identity, &s).unwrap();
        assert!((l - (rho_y - 0.3 - 0.2)).abs() < 1e-12);
        let l2 = apply_l(&zero, 0.7, &Treaty::Identity, &s).unwrap();
        assert!((l2 - (l - 0.5)).abs() < 1e-12);
        // affine v(x) = c - x
        let c = 2.0;
        let v = ValueFunction::from_fn(&grid, |x| c - x, -1.0, -1.0);
        let f = Treaty::stop_loss(0.4);
        let p = treaty_premium(&s.premium, &s.dy, &f).unwrap();
        let rho_f = s.risk.evaluate(&s.dy.push_forward(|y| f.retained(y))).unwrap();
        let x = 0.1;
        let want = 1.9 * (rho_f + p) - 1.9 * x - 1.9 * 0.3 + 0.9 * c;
        assert!((apply_l(&v, x, &f, &s).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_forces_identity_under_var() {
        let s = stage(RiskSpec::var(0.95), TreatyFamily::Layer, true);
        let grid: Vec<f64> = (0..16).map(|i| -1.0 + i as f64 / 15.0).collect();
        let out = bellman_step(&ValueFunction::zero(&grid), &s, &grid, 0).unwrap();
        for (x, f) in grid.iter().zip(&out.row) {
            if *x <= 0.0 {
                assert_eq!(treaty_premium(&s.premium, &s.dy, f).unwrap(), 0.0);
                for y in [0.1, 0.5, 0.9] {
                    assert!((f.retained(y) - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unconstrained_terminal_step_is_state_free() {
        let s = stage(RiskSpec::es(0.9), TreatyFamily::StopLoss, false);
        let grid: Vec<f64> = (0..32).map(|i| -1.0 + i as f64 / 15.5).collect();
        let out = bellman_step(&ValueFunction::zero(&grid), &s, &grid, 0).unwrap();
        let c = out.value.values()[0] + grid[0];
        for (j, &x) in grid.iter().enumerate() {
            assert!((out.value.values()[j] - (c - x)).abs() < 1e-12);
            assert!((out.row[j].params()[0] - out.row[0].params()[0]).abs() < 1e-7);
        }
        assert_eq!(out.value.slopes(), (-1.0, -1.0));
    }

    #[test]
    fn fixed_rows_are_checked_for_feasibility() {
        let s = stage(RiskSpec::es(0.9), TreatyFamily::StopLoss, true);
        let grid: Vec<f64> = (0..16).map(|i| -0.5 + i as f64 / 15.0).collect();
        let row = vec![Treaty::FullCession; 16];
        let err = step(&ValueFunction::zero(&grid), &s, &grid, 3, Choice::Fixed(&row)).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePolicyRow { stage: 3, .. }));
    }

    #[test]
    fn piecewise_linear_improves_on_identity() {
        let s = stage(RiskSpec::es(0.9), TreatyFamily::PiecewiseLinear, false);
        let grid: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let zero = ValueFunction::zero(&grid);
        let m = minimize(&s, None, &|f, p| l_with_premium(&zero, 0.0, f, p, &s)).unwrap();
        let id = apply_l(&zero, 0.0, &Treaty::Identity, &s).unwrap();
        assert!(m.value < id - 0.1, "{} vs {id}", m.value);
    }
}
