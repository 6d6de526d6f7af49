//! Backward induction under Expected Shortfall with a budget constraint.

use std::path::PathBuf;

use reinsure_dp::cli::parse_config;
use reinsure_dp::dp::solve_finite;
use reinsure_dp::oracles::{oracle_gaps, GapRow};

fn main() -> reinsure_dp::Result<()> {
    let config = parse_config(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/es_uniform.json"))?;
    let sol = solve_finite(&config)?;
    for s in &sol.stats {
        println!("stage {}: {} evaluations in {:.2}s", s.stage, s.evaluations, s.seconds);
    }
    let x0 = config.initial_capital;
    for (n, v) in sol.values.iter().enumerate() {
        println!("J_{n}({x0}) = {:.6}", v.eval(x0));
    }
    for x in [-0.25, 0.0, 0.05, 0.1, 0.5] {
        println!("stage 0 treaty at x = {x:>5}: {}", sol.policy.lookup(0, x).unwrap());
    }
    let (kind, rows) = oracle_gaps(&config, &sol)?;
    let max = rows.iter().map(GapRow::gap).fold(0.0, f64::max);
    println!("{kind:?} oracle: max retention gap {max:.3e}");
    Ok(())
}
