//! End-to-end acceptance checks. Runs sequentially so that the wall-clock
//! targets are measured without competing test threads, and prints one
//! PASS/FAIL line per criterion.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reinsure_dp::cli::{gap_csv, parse_config, values_csv};
use reinsure_dp::distortion::{Distortion, Spectrum};
use reinsure_dp::distributions::{independent_product, DiscreteDistribution, FamilySpec};
use reinsure_dp::dp::{
    finite_bounds, infinite_bounds, modulus, solve_finite, solve_infinite, step, uniform_grid, Bounds, Choice,
    FiniteSolution, GridSpec, Horizon, InfiniteSolution, ModelConfig, StageSpec, ValueFunction, Weight,
};
use reinsure_dp::oracles::{oracle_gaps, oracle_unconstrained, GapRow, OracleKind};
use reinsure_dp::premiums::PremiumSpec;
use reinsure_dp::risk::{self, RiskSpec};
use reinsure_dp::sim::{ruin_bound_check, simulate_paths};
use reinsure_dp::treaties::TreatyFamily;

fn config(name: &str) -> ModelConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    parse_config(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

/// Everything later criteria reuse from the oracle runs.
struct Runs {
    es: (ModelConfig, FiniteSolution),
    var: (ModelConfig, FiniteSolution),
    unc: (ModelConfig, FiniteSolution),
    unc_inf: (ModelConfig, InfiniteSolution),
}

fn criterion_1() -> (Outcome, (ModelConfig, FiniteSolution)) {
    let c = config("es_uniform.json");
    let (sol, t) = timed(|| solve_finite(&c).unwrap());
    let (kind, rows) = oracle_gaps(&c, &sol).unwrap();
    let max_gap = rows.iter().map(GapRow::gap).fold(0.0, f64::max);
    let pass = kind == OracleKind::EsUniform && rows.len() == 512 && max_gap <= 5e-3 && t.as_secs_f64() < 10.0;
    (
        outcome(pass, format!("max retention gap {max_gap:.3e} over {} states, {:.2}s", rows.len(), t.as_secs_f64())),
        (c, sol),
    )
}

fn criterion_2() -> (Outcome, (ModelConfig, FiniteSolution)) {
    let c = config("var_layer.json");
    let mut single = c.clone();
    single.horizon = Horizon::Finite(1);
    let ((sol, sol1), t) = timed(|| (solve_finite(&c).unwrap(), solve_finite(&single).unwrap()));
    let (kind, rows) = oracle_gaps(&c, &sol).unwrap();
    let max_gap = rows.iter().map(GapRow::gap).fold(0.0, f64::max);
    let mut myopia_gap: f64 = 0.0;
    for n in 0..3 {
        for (f, g) in sol.policy.row(n).iter().zip(sol1.policy.row(0)) {
            for (a, b) in f.params().iter().zip(g.params()) {
                myopia_gap = myopia_gap.max((a - b).abs());
            }
        }
    }
    let pass = kind == OracleKind::VarLayer
        && rows.len() == 3 * 512
        && max_gap <= 5e-3
        && myopia_gap <= 1e-9
        && t.as_secs_f64() < 30.0;
    (
        outcome(
            pass,
            format!(
                "max deductible gap {max_gap:.3e}, N=3 vs N=1 policy gap {myopia_gap:.1e}, {:.2}s",
                t.as_secs_f64()
            ),
        ),
        (c, sol),
    )
}

fn criterion_3() -> (Outcome, (ModelConfig, FiniteSolution), (ModelConfig, InfiniteSolution)) {
    let c = config("unconstrained.json");
    let ci = config("unconstrained_infinite.json");
    let ((sol, inf), t) = timed(|| (solve_finite(&c).unwrap(), solve_infinite(&ci, ci.tolerance).unwrap()));
    let mut slope_err: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for n in 0..5 {
        let want: f64 = -(0..5 - n).map(|k| 0.9f64.powi(k as i32)).sum::<f64>();
        slope_err = slope_err.max(((sol.values[n].fitted_slope() - want) / want).abs());
        let row = sol.policy.row(n);
        let first = row[0].params()[0];
        for f in row {
            spread = spread.max((f.params()[0] - first).abs());
        }
    }
    let oracle = oracle_unconstrained(&ci).unwrap();
    let exact = oracle.value_function(0, inf.value.grid());
    let weight = Weight::for_stage(&ci.stage_data(0).unwrap()).unwrap();
    let dist = weight.norm(&inf.value, &exact).unwrap();
    let pass = slope_err <= 1e-4 && spread <= 1e-6 && dist <= inf.certificate && t.as_secs_f64() < 60.0;
    (
        outcome(
            pass,
            format!(
                "slope rel err {slope_err:.1e}, policy spread {spread:.1e}, infinite ||J-J*||_b {dist:.2e} <= certificate {:.2e} after {} iterations, {:.2}s",
                inf.certificate,
                inf.iterations,
                t.as_secs_f64()
            ),
        ),
        (c, sol),
        (ci, inf),
    )
}

fn contraction_stage() -> ModelConfig {
    let stage = StageSpec {
        claims: DiscreteDistribution::discretize(&FamilySpec::uniform(0.0, 1.0, 201)).unwrap(),
        income: DiscreteDistribution::point_mass(0.3),
        risk: RiskSpec::es(0.9),
        premium: PremiumSpec::expected(0.2),
    };
    let grid = GridSpec {
        min: -1.0,
        max: 2.0,
        count: 97,
    };
    ModelConfig::stationary(Horizon::Infinite, 0.9, stage, grid, TreatyFamily::StopLoss)
}

/// A decreasing piecewise-linear function between the stationary envelopes.
fn random_decreasing(grid: &[f64], b: &Bounds, beta: f64, rng: &mut ChaCha8Rng) -> ValueFunction {
    let t: f64 = rng.gen();
    let scale = rng.gen_range(0.1..20.0);
    let mut h = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        h -= scale * rng.gen::<f64>() / grid.len() as f64;
        let v = t * b.low(x) + (1.0 - t) * b.high(x) + h;
        values.push(v.min(b.high(x)).max(b.low(x)));
    }
    let s = -1.0 / (1.0 - beta);
    ValueFunction::new(grid.to_vec(), values, s, s).unwrap()
}

fn criterion_4() -> Outcome {
    let c = contraction_stage();
    let s = c.stage_data(0).unwrap();
    let grid = uniform_grid(c.grid.min, c.grid.max, c.grid.count);
    let b = infinite_bounds(&s).unwrap();
    let w = Weight::for_stage(&s).unwrap();
    let q = modulus(0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (result, t) = timed(|| {
        let mut worst_ratio: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..100 {
            let v1 = random_decreasing(&grid, &b, 0.9, &mut rng);
            let v2 = random_decreasing(&grid, &b, 0.9, &mut rng);
            let before = w.norm(&v1, &v2).unwrap();
            let t1 = step(&v1, &s, &grid, 0, Choice::Optimize).unwrap().value;
            let t2 = step(&v2, &s, &grid, 0, Choice::Optimize).unwrap().value;
            let after = w.norm(&t1, &t2).unwrap();
            if after > q * before + 1e-8 {
                failures += 1;
            }
            worst_ratio = worst_ratio.max(after / before);
        }
        (worst_ratio, failures)
    });
    let (worst_ratio, failures) = result;
    outcome(
        failures == 0 && t.as_secs_f64() < 60.0,
        format!("worst ||Tv1-Tv2||_b / ||v1-v2||_b = {worst_ratio:.4} (q = {q}), {failures} failures, {:.2}s", t.as_secs_f64()),
    )
}

fn criterion_5(runs: &Runs) -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    for (c, sol) in [&runs.es, &runs.var, &runs.unc] {
        let bounds = finite_bounds(c).unwrap();
        for (v, b) in sol.values.iter().zip(&bounds) {
            violations += b.violations(v, 1e-9).len();
            checked += v.grid().len();
        }
    }
    let (ci, inf) = &runs.unc_inf;
    let b = infinite_bounds(&ci.stage_data(0).unwrap()).unwrap();
    violations += b.violations(&inf.value, 1e-9).len();
    checked += inf.value.grid().len();
    outcome(violations == 0, format!("{violations} violations over {checked} grid values"))
}

fn random_distribution(rng: &mut ChaCha8Rng) -> DiscreteDistribution {
    let n = rng.gen_range(1..40);
    let mut pairs = Vec::with_capacity(n);
    let mut total = 0.0;
    for _ in 0..n {
        let p = rng.gen_range(0.01..1.0);
        total += p;
        pairs.push((rng.gen_range(-5.0..5.0), p));
    }
    for pair in &mut pairs {
        pair.1 /= total;
    }
    DiscreteDistribution::new(&pairs).unwrap()
}

fn kinds() -> Vec<RiskSpec> {
    vec![
        RiskSpec::Expectation,
        RiskSpec::var(0.9),
        RiskSpec::es(0.95),
        RiskSpec::es(0.5),
        RiskSpec::Distortion(Distortion::PowerHazard(0.6)),
        RiskSpec::Spectral(Spectrum::Power(2.0)),
        RiskSpec::Entropic { gamma: 0.7 },
    ]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Comonotone pair on a shared uniform grid: `(F^-1(u_i), G^-1(u_i))`.
fn comonotone_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let a = random_distribution(rng);
    let b = random_distribution(rng);
    let m = 64;
    (0..m)
        .map(|i| {
            let u = (i as f64 + 0.5) / m as f64;
            (a.quantile(u).unwrap(), b.quantile(u).unwrap())
        })
        .unzip()
}

fn equally_weighted(values: impl IntoIterator<Item = f64>) -> DiscreteDistribution {
    let v: Vec<f64> = values.into_iter().collect();
    let p = 1.0 / v.len() as f64;
    DiscreteDistribution::new(&v.iter().map(|&x| (x, p)).collect::<Vec<_>>()).unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (failures, t) = timed(|| {
        let mut failures: Vec<String> = Vec::new();
        for _ in 0..500 {
            let d = random_distribution(&mut rng);
            for k in kinds() {
                let r = k.evaluate(&d).unwrap();
                for m in [-2.0, -0.5, 0.0, 1.0, 3.0] {
                    if !close(k.evaluate(&d.shift(m)).unwrap(), r + m) {
                        failures.push(format!("translation {}", k.kind()));
                    }
                }
                if k.is_positive_homogeneous() {
                    for l in [0.0, 0.5, 2.0, 10.0] {
                        if !close(k.evaluate(&d.scale(l)).unwrap(), l * r) {
                            failures.push(format!("homogeneity {}", k.kind()));
                        }
                    }
                }
                let bump: f64 = rng.gen_range(0.0..1.0);
                let up = d.push_forward(|v| v + bump * (v.sin() + 1.0));
                if k.evaluate(&up).unwrap() < r - 1e-9 {
                    failures.push(format!("monotonicity {}", k.kind()));
                }
                if k.evaluate(&DiscreteDistribution::point_mass(0.0)).unwrap() != 0.0 {
                    failures.push(format!("normalization {}", k.kind()));
                }
            }
            let alpha = rng.gen_range(0.01..0.99);
            let as_distortion = risk::distortion_rm(&d, &Distortion::ValueAtRisk(alpha)).unwrap();
            if !close(as_distortion, risk::var(&d, alpha).unwrap()) {
                failures.push("VaR as distortion".into());
            }
            let as_spectral = risk::spectral_rm(&d, &Spectrum::ExpectedShortfall(alpha)).unwrap();
            if !close(as_spectral, risk::es(&d, alpha).unwrap()) {
                failures.push("ES as spectral".into());
            }
        }
        let coherent = [
            RiskSpec::Expectation,
            RiskSpec::es(0.9),
            RiskSpec::es(0.3),
            RiskSpec::Distortion(Distortion::PowerHazard(0.5)),
            RiskSpec::Spectral(Spectrum::Power(3.0)),
        ];
        for _ in 0..200 {
            let x = random_distribution(&mut rng);
            let y = random_distribution(&mut rng);
            let sum = independent_product(&x, &y, |a, b| a + b);
            for k in &coherent {
                let lhs = k.evaluate(&sum).unwrap();
                if lhs > k.evaluate(&x).unwrap() + k.evaluate(&y).unwrap() + 1e-9 {
                    failures.push(format!("subadditivity {}", k.kind()));
                }
            }
            let (xs, ys) = comonotone_pair(&mut rng);
            let dx = equally_weighted(xs.iter().copied());
            let dy = equally_weighted(ys.iter().copied());
            let diff = equally_weighted(xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()));
            let sum = equally_weighted(xs.iter().zip(&ys).map(|(a, b)| a + b));
            let neg_y = dy.scale(-1.0);
            for k in &coherent {
                let (rx, ry) = (k.evaluate(&dx).unwrap(), k.evaluate(&dy).unwrap());
                if (rx - ry).abs() > k.evaluate(&diff).unwrap() + 1e-9 {
                    failures.push(format!("triangular {}", k.kind()));
                }
                if k.evaluate(&sum).unwrap() < rx - k.evaluate(&neg_y).unwrap() - 1e-9 {
                    failures.push(format!("complement {}", k.kind()));
                }
            }
            let ent = RiskSpec::Entropic { gamma: 0.8 };
            for l in [0.25, 0.5, 0.75] {
                let mix = equally_weighted(xs.iter().zip(&ys).map(|(a, b)| l * a + (1.0 - l) * b));
                let lhs = ent.evaluate(&mix).unwrap();
                let rhs = l * ent.evaluate(&dx).unwrap() + (1.0 - l) * ent.evaluate(&dy).unwrap();
                if lhs > rhs + 1e-9 {
                    failures.push("entropic convexity".into());
                }
            }
        }
        failures
    });
    let pass = failures.is_empty() && t.as_secs_f64() < 10.0;
    let detail = if failures.is_empty() {
        format!("500 distributions x {} kinds, 200 pairs, {:.2}s", kinds().len(), t.as_secs_f64())
    } else {
        format!("{} failures, first: {}", failures.len(), failures[0])
    };
    outcome(pass, detail)
}

fn criterion_7(runs: &Runs) -> (Outcome, Vec<String>) {
    let (c, sol) = &runs.var;
    let ((check, results), t) = timed(|| {
        let check = ruin_bound_check(&sol.policy, c, c.initial_capital).unwrap();
        let results: Vec<_> = (1..=20u64)
            .map(|seed| simulate_paths(&sol.policy, c, 100_000, seed).unwrap())
            .collect();
        (check, results)
    });
    let within = results
        .iter()
        .filter(|r| r.ruin_probability - r.ci_half_width <= check.bound + 1e-12)
        .count();
    let worst = results.iter().map(|r| r.ruin_probability).fold(0.0, f64::max);
    let pass = check.holds_precondition && (check.bound - 0.15).abs() < 1e-12 && within >= 19 && t.as_secs_f64() < 60.0;
    let json = results.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    (
        outcome(
            pass,
            format!(
                "x0 = {}, precondition {}, {within}/20 seeds within bound {:.2} (max ruin frequency {worst:.5}), {:.2}s",
                c.initial_capital,
                check.holds_precondition,
                check.bound,
                t.as_secs_f64()
            ),
        ),
        json,
    )
}

fn finite_csvs(sol: &FiniteSolution) -> (String, String) {
    (values_csv(&sol.values), sol.policy.to_csv())
}

fn criterion_8(runs: &Runs, sims: &[String]) -> Outcome {
    let mut mismatches = Vec::new();
    for (name, (c, sol)) in [("es", &runs.es), ("var", &runs.var), ("unconstrained", &runs.unc)] {
        let again = solve_finite(c).unwrap();
        if finite_csvs(&again) != finite_csvs(sol) {
            mismatches.push(name);
        }
        if let (Ok((_, a)), Ok((_, b))) = (oracle_gaps(c, &again), oracle_gaps(c, sol)) {
            if gap_csv(&a) != gap_csv(&b) {
                mismatches.push(name);
            }
        }
    }
    let (ci, inf) = &runs.unc_inf;
    let again = solve_infinite(ci, ci.tolerance).unwrap();
    if values_csv(std::slice::from_ref(&again.value)) != values_csv(std::slice::from_ref(&inf.value))
        || again.policy.to_csv() != inf.policy.to_csv()
    {
        mismatches.push("infinite");
    }
    let (c, sol) = &runs.var;
    let again: Vec<String> = (1..=20u64)
        .map(|seed| serde_json::to_string(&simulate_paths(&sol.policy, c, 100_000, seed).unwrap()).unwrap())
        .collect();
    if again != sims {
        mismatches.push("simulation");
    }
    outcome(mismatches.is_empty(), format!("rerun mismatches: {mismatches:?}"))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, title: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {n} {:<34} {}  {}", title, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    let (o1, es) = criterion_1();
    report(1, "ES/uniform oracle", o1);
    let (o2, var) = criterion_2();
    report(2, "VaR myopia and layer oracle", o2);
    let (o3, unc, unc_inf) = criterion_3();
    report(3, "unconstrained affine structure", o3);
    report(4, "contraction certificate", criterion_4());
    let runs = Runs { es, var, unc, unc_inf };
    report(5, "bounding envelopes", criterion_5(&runs));
    report(6, "risk-measure axioms", criterion_6());
    let (o7, sims) = criterion_7(&runs);
    report(7, "ruin bound", o7);
    report(8, "determinism", criterion_8(&runs, &sims));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
