//! Under Value-at-Risk the multi-period optimum repeats the one-period layer.

use std::path::PathBuf;

use reinsure_dp::cli::parse_config;
use reinsure_dp::distortion::Distortion;
use reinsure_dp::dp::{solve_finite, Horizon};
use reinsure_dp::oracles::oracle_var_layer;

fn main() -> reinsure_dp::Result<()> {
    let config = parse_config(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/var_layer.json"))?;
    let mut one = config.clone();
    one.horizon = Horizon::Finite(1);
    let multi = solve_finite(&config)?;
    let single = solve_finite(&one)?;

    let stage = config.stage_spec(0);
    let oracle = oracle_var_layer(&stage.claims, &Distortion::Identity, stage.premium.theta(), 0.95)?;
    println!("unconstrained deductible a* = {:.6}, VaR level {:.6}", oracle.a_star, oracle.var_level);
    let grid = multi.policy.grid();
    for x in [0.0, 0.02, 0.05, 0.1, 1.0] {
        let x = grid[grid.partition_point(|&g| g <= x) - 1];
        let deductibles: Vec<String> = (0..3).map(|n| format!("{:.6}", multi.policy.lookup(n, x).unwrap().params()[0])).collect();
        println!(
            "x = {x:<8.5} N=3 deductibles {:?}  N=1 {:.6}  oracle {:.6}",
            deductibles,
            single.policy.lookup(0, x).unwrap().params()[0],
            oracle.a_of_x(x)?
        );
    }
    Ok(())
}
