//! Stationary solution by value iteration, checked against the affine closed form.

use std::path::PathBuf;

use reinsure_dp::cli::parse_config;
use reinsure_dp::dp::{solve_infinite, Weight};
use reinsure_dp::oracles::oracle_unconstrained;

fn main() -> reinsure_dp::Result<()> {
    let config = parse_config(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/unconstrained_infinite.json"))?;
    let sol = solve_infinite(&config, config.tolerance)?;
    println!("{} iterations, certificate {:.3e}", sol.iterations, sol.certificate);
    for (k, r) in sol.residuals.iter().enumerate().step_by(20) {
        println!("  residual at iteration {k}: {r:.3e}");
    }
    let exact = oracle_unconstrained(&config)?;
    let reference = exact.value_function(0, sol.value.grid());
    let w = Weight::for_stage(&config.stage_data(0)?)?;
    println!("stationary treaty {}", sol.policy.lookup(0, 0.0).unwrap());
    println!("closed-form treaty {}", exact.treaty);
    println!("weighted distance to closed form {:.3e}", w.norm(&sol.value, &reference)?);
    println!("fitted slope {:.6} (closed form {:.6})", sol.value.fitted_slope(), -1.0 / (1.0 - config.beta));
    Ok(())
}
