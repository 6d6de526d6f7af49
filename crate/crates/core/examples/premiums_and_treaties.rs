//! Premiums of common treaties under several pricing principles.

use reinsure_dp::distortion::Distortion;
use reinsure_dp::distributions::{DiscreteDistribution, FamilySpec};
use reinsure_dp::premiums::{layer_premium_closed_form, treaty_premium, PremiumSpec};
use reinsure_dp::treaties::{feasible_retention_range, Treaty, TreatyFamily};

fn main() -> reinsure_dp::Result<()> {
    let claims = DiscreteDistribution::discretize(&FamilySpec::exponential(2.0, 1000, 10.0))?;
    let pricing = [PremiumSpec::expected(0.2), PremiumSpec::ph(0.1, 0.7)];
    let treaties = [
        Treaty::FullCession,
        Treaty::Proportional { c: 0.4 },
        Treaty::stop_loss(0.5),
        Treaty::layer(0.5, 1.0),
    ];

    for spec in &pricing {
        println!("premium principle: {spec:?}");
        for f in &treaties {
            println!("  {f:<40} premium {:.6}", treaty_premium(spec, &claims, f)?);
        }
    }

    let closed = layer_premium_closed_form(&claims, &Distortion::Identity, 0.2, 0.5, 1.5)?;
    println!("closed-form layer [0.5, 1.5] premium {closed:.6}");

    let range = feasible_retention_range(TreatyFamily::StopLoss, &pricing[0], &claims, 0.1, claims.ess_sup())?;
    println!("stop-loss retentions affordable with budget 0.1: [{:.6}, {:.6}]", range.lo, range.hi);
    Ok(())
}
