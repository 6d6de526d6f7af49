//! The Bellman operator contracts in the weighted sup-norm.

use reinsure_dp::distributions::{DiscreteDistribution, FamilySpec};
use reinsure_dp::dp::{
    infinite_bounds, modulus, step, uniform_grid, Choice, GridSpec, Horizon, ModelConfig, StageSpec, ValueFunction,
    Weight,
};
use reinsure_dp::premiums::PremiumSpec;
use reinsure_dp::risk::RiskSpec;
use reinsure_dp::treaties::TreatyFamily;

fn main() -> reinsure_dp::Result<()> {
    let stage = StageSpec {
        claims: DiscreteDistribution::discretize(&FamilySpec::uniform(0.0, 1.0, 201))?,
        income: DiscreteDistribution::point_mass(0.3),
        risk: RiskSpec::es(0.9),
        premium: PremiumSpec::expected(0.2),
    };
    let grid = GridSpec {
        min: -1.0,
        max: 2.0,
        count: 97,
    };
    let beta = 0.9;
    let config = ModelConfig::stationary(Horizon::Infinite, beta, stage, grid, TreatyFamily::StopLoss);
    let s = config.stage_data(0)?;
    let xs = uniform_grid(-1.0, 2.0, 97);
    let b = infinite_bounds(&s)?;
    let w = Weight::for_stage(&s)?;
    let slope = -1.0 / (1.0 - beta);

    let low = ValueFunction::from_fn(&xs, |x| b.low(x), slope, slope);
    let high = ValueFunction::from_fn(&xs, |x| b.high(x), slope, slope);
    let before = w.norm(&low, &high)?;
    let t_low = step(&low, &s, &xs, 0, Choice::Optimize)?.value;
    let t_high = step(&high, &s, &xs, 0, Choice::Optimize)?.value;
    let after = w.norm(&t_low, &t_high)?;
    println!("||v1 - v2||_b   = {before:.6}");
    println!("||Tv1 - Tv2||_b = {after:.6}");
    println!("ratio {:.4} <= modulus {:.4}", after / before, modulus(beta));
    Ok(())
}
