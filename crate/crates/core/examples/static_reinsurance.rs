//! One-period optimal treaty with and without a premium budget.

use reinsure_dp::distributions::{DiscreteDistribution, FamilySpec};
use reinsure_dp::dp::TreatyConfig;
use reinsure_dp::oracles::{oracle_es_uniform, static_reinsurance};
use reinsure_dp::premiums::PremiumSpec;
use reinsure_dp::risk::RiskSpec;
use reinsure_dp::treaties::TreatyFamily;

fn main() -> reinsure_dp::Result<()> {
    let claims = DiscreteDistribution::discretize(&FamilySpec::uniform(0.0, 1.0, 2001))?;
    let income = DiscreteDistribution::point_mass(0.3);
    let risk = RiskSpec::es(0.95);
    let premium = PremiumSpec::expected(0.2);

    for family in [TreatyFamily::StopLoss, TreatyFamily::Layer, TreatyFamily::Proportional] {
        let treaty = TreatyConfig {
            family,
            upper: None,
            knots: 8,
            coarse: 64,
        };
        for budget in [None, Some(0.02), Some(0.1)] {
            let opt = static_reinsurance(&risk, &premium, &claims, &income, budget, &treaty)?;
            println!(
                "{:<14} budget {:<10} {:<40} premium {:.6}  rho {:.6}",
                family.name(),
                budget.map_or("none".to_string(), |b| b.to_string()),
                opt.treaty.to_string(),
                opt.premium,
                opt.value
            );
        }
    }
    println!("closed-form stop-loss retention with budget 0.02: {:.6}", oracle_es_uniform(0.2, 0.95, 0.02)?);
    Ok(())
}
