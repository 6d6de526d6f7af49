//! Command-line front end: config ingestion, orchestration and result files.
//!
//! Exit status is 0 on success, 1 for invalid input or usage, 2 when a solver
//! fails numerically.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::dp::{
    evaluate_policy, evaluate_stationary_policy, finite_bounds, fmt_float, infinite_bounds, solve_finite,
    solve_infinite, ModelConfig, PolicyTable, ValueFunction,
};
use crate::error::{Error, Result};
use crate::oracles::{oracle_gaps, oracle_unconstrained, GapRow};
use crate::risk::RiskSpec;
use crate::sim::{ruin_bound_check, simulate_with_values};
use crate::treaties::Treaty;

pub const THREADS_ENV: &str = "REINSURE_DP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "reinsure-dp", version, about = "Optimal dynamic reinsurance by dynamic programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Backward induction over a finite horizon.
    SolveFinite(Common),
    /// Value iteration for the stationary infinite-horizon problem.
    SolveInfinite(Common),
    /// Value of a fixed policy (default: no reinsurance).
    EvaluatePolicy(Common),
    /// Solve and compare with the applicable closed-form solution.
    OracleCompare(Common),
    /// Monte Carlo of the surplus under the optimal (or a given) policy.
    Simulate(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Seed for simulation; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to REINSURE_DP_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Infinite-horizon error target; overrides the config.
    #[arg(long)]
    tol: Option<f64>,
    /// Policy file (policy.csv format) for evaluate-policy and simulate.
    #[arg(long)]
    policy: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveFinite(_) => "solve-finite",
            Command::SolveInfinite(_) => "solve-infinite",
            Command::EvaluatePolicy(_) => "evaluate-policy",
            Command::OracleCompare(_) => "oracle-compare",
            Command::Simulate(_) => "simulate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::SolveFinite(c)
            | Command::SolveInfinite(c)
            | Command::EvaluatePolicy(c)
            | Command::OracleCompare(c)
            | Command::Simulate(c) => c,
        }
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ModelConfig> {
    let text = fs::read_to_string(path)?;
    ModelConfig::from_json_str(&text)
}

/// Serializes a config so that [`parse_config`] returns it unchanged.
pub fn write_config(config: &ModelConfig) -> String {
    config.to_json_string()
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let common = cli.command.common().clone();
    let threads = match resolve_threads(common.threads) {
        Ok(t) => t,
        Err(e) => return report(&e),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return report(&Error::Io(e.to_string())),
    };
    match pool.install(|| execute(&cli.command, &common, pool.current_num_threads())) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if e.is_numeric_failure() {
        2
    } else {
        1
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::validation(THREADS_ENV, format!("not a thread count: `{v}`"))),
        Err(_) => Ok(0),
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.written.push(path.display().to_string());
        Ok(())
    }
}

fn execute(command: &Command, args: &Common, threads: usize) -> Result<()> {
    let started = Instant::now();
    let raw = fs::read_to_string(&args.config)?;
    let echo: Value = serde_json::from_str(&raw)?;
    let config = ModelConfig::from_json_str(&raw)?;
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::validation("--tol", "must be positive"));
        }
    }
    let tol = args.tol.unwrap_or(config.tolerance);
    let seed = args.seed.unwrap_or(config.simulation.seed);

    fs::create_dir_all(&args.out)?;
    let manifest_path = args.out.join("manifest.json");
    if manifest_path.exists() {
        fs::remove_file(&manifest_path)?;
    }
    let mut out = Outputs {
        dir: args.out.clone(),
        written: Vec::new(),
    };
    let mut details = serde_json::Map::new();

    match command {
        Command::SolveFinite(_) => {
            require_finite(&config)?;
            let sol = solve_finite(&config)?;
            let bounds = finite_bounds(&config)?;
            let violations: usize = sol
                .values
                .iter()
                .zip(&bounds)
                .map(|(v, b)| b.violations(v, 1e-9).len())
                .sum();
            out.write("values.csv", &values_csv(&sol.values))?;
            out.write("policy.csv", &sol.policy.to_csv())?;
            details.insert("stats".into(), json!(sol.stats));
            details.insert("envelope_violations".into(), json!(violations));
        }
        Command::SolveInfinite(_) => {
            if !config.is_infinite() {
                return Err(Error::validation("horizon", "solve-infinite needs \"horizon\": \"infinite\""));
            }
            let sol = solve_infinite(&config, tol)?;
            let bounds = infinite_bounds(&config.stage_data(0)?)?;
            out.write("values.csv", &values_csv(std::slice::from_ref(&sol.value)))?;
            out.write("policy.csv", &sol.policy.to_csv())?;
            details.insert("iterations".into(), json!(sol.iterations));
            details.insert("certificate".into(), json!(sol.certificate));
            details.insert("last_residual".into(), json!(sol.residuals.last()));
            details.insert("evaluations".into(), json!(sol.evaluations));
            details.insert("envelope_violations".into(), json!(bounds.violations(&sol.value, 1e-9).len()));
        }
        Command::EvaluatePolicy(_) => {
            let policy = load_policy(args.policy.as_deref(), &config)?;
            if config.is_infinite() {
                let (v, certificate) = evaluate_stationary_policy(policy.row(0), &config, tol)?;
                out.write("values.csv", &values_csv(std::slice::from_ref(&v)))?;
                details.insert("certificate".into(), json!(certificate));
            } else {
                let values = evaluate_policy(&policy, &config)?;
                out.write("values.csv", &values_csv(&values))?;
            }
            details.insert(
                "policy".into(),
                json!(args.policy.as_ref().map_or("identity".to_string(), |p| p.display().to_string())),
            );
        }
        Command::OracleCompare(_) => {
            let (kind, rows) = if config.is_infinite() {
                let sol = solve_infinite(&config, tol)?;
                let oracle = oracle_unconstrained(&config)?;
                details.insert("certificate".into(), json!(sol.certificate));
                let rows = config
                    .grid_points()
                    .iter()
                    .zip(sol.value.values())
                    .map(|(&x, &j)| GapRow {
                        stage: 0,
                        x,
                        oracle: oracle.value(0, x),
                        dp: j,
                    })
                    .collect();
                (crate::oracles::OracleKind::Unconstrained, rows)
            } else {
                let sol = solve_finite(&config)?;
                oracle_gaps(&config, &sol)?
            };
            let max_gap = rows.iter().map(GapRow::gap).fold(0.0, f64::max);
            print_gap_table(&rows);
            println!("max gap: {max_gap:.3e}");
            out.write("oracle_gap.csv", &gap_csv(&rows))?;
            details.insert("oracle".into(), json!(kind));
            details.insert("max_gap".into(), json!(max_gap));
        }
        Command::Simulate(_) => {
            let (policy, values) = match &args.policy {
                Some(_) => (load_policy(args.policy.as_deref(), &config)?, None),
                None if config.is_infinite() => (solve_infinite(&config, tol)?.policy, None),
                None => {
                    let sol = solve_finite(&config)?;
                    (sol.policy, Some(sol.values))
                }
            };
            let result = simulate_with_values(&policy, &config, config.simulation.paths, seed, values.as_deref())?;
            let all_var = config.periods().is_some_and(|n| {
                (0..n).all(|m| matches!(config.stage_spec(m).risk, RiskSpec::ValueAtRisk { .. }))
            });
            let mut doc = json!({ "result": result });
            if all_var {
                let bound = ruin_bound_check(&policy, &config, config.initial_capital)?;
                doc["ruin_bound"] = json!(bound);
            }
            if args.policy.is_none() {
                out.write("policy.csv", &policy.to_csv())?;
            }
            out.write("sim.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        }
    }

    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": command.name(),
        "config_path": args.config.display().to_string(),
        "config": echo,
        "threads": threads,
        "seed": seed,
        "tolerance": tol,
        "beta": config.beta,
        "r_coc": config.r_coc,
        "risk_free": config.risk_free,
        "details": Value::Object(details),
        "outputs": out.written,
        "wall_seconds": started.elapsed().as_secs_f64(),
        "created_unix": now,
    });
    write_atomic(&manifest_path, &(serde_json::to_string_pretty(&manifest)? + "\n"))
}

fn require_finite(config: &ModelConfig) -> Result<()> {
    if config.is_infinite() {
        Err(Error::validation("horizon", "solve-finite needs a period count"))
    } else {
        Ok(())
    }
}

fn load_policy(path: Option<&Path>, config: &ModelConfig) -> Result<PolicyTable> {
    let grid = config.grid_points();
    match path {
        Some(p) => {
            let table = PolicyTable::from_csv(&fs::read_to_string(p)?)?;
            if table.grid() != grid.as_slice() {
                return Err(Error::GridMismatch);
            }
            Ok(table)
        }
        None => Ok(PolicyTable::constant(grid, config.periods().unwrap_or(1), Treaty::Identity)),
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `stage,x,J` rows for `J_0, J_1, ...`.
pub fn values_csv(values: &[ValueFunction]) -> String {
    let mut s = String::from("stage,x,J\n");
    for (n, v) in values.iter().enumerate() {
        for (x, j) in v.grid().iter().zip(v.values()) {
            s.push_str(&format!("{n},{},{}\n", fmt_float(*x), fmt_float(*j)));
        }
    }
    s
}

pub fn gap_csv(rows: &[GapRow]) -> String {
    let mut s = String::from("stage,x,oracle,dp,gap\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.stage,
            fmt_float(r.x),
            fmt_float(r.oracle),
            fmt_float(r.dp),
            fmt_float(r.gap())
        ));
    }
    s
}

fn print_gap_table(rows: &[GapRow]) {
    println!("{:>5} {:>12} {:>14} {:>14} {:>12}", "stage", "x", "oracle", "dp", "gap");
    for r in rows {
        println!(
            "{:>5} {:>12.6} {:>14.8} {:>14.8} {:>12.3e}",
            r.stage,
            r.x,
            r.oracle,
            r.dp,
            r.gap()
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["reinsure-dp", "frobnicate"]), 1);
        assert_eq!(run(["reinsure-dp", "solve-finite"]), 1);
        assert_eq!(run(["reinsure-dp", "--help"]), 0);
    }

    #[test]
    fn missing_config_exits_one() {
        let dir = std::env::temp_dir().join("reinsure-dp-missing-config");
        let code = run([
            "reinsure-dp",
            "solve-finite",
            "--config",
            "/nonexistent/config.json",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
    }
}
