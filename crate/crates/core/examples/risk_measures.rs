//! Risk measures on a discretized lognormal loss.

use reinsure_dp::distortion::{Distortion, Spectrum};
use reinsure_dp::distributions::{DiscreteDistribution, FamilySpec};
use reinsure_dp::risk::RiskSpec;

fn main() -> reinsure_dp::Result<()> {
    let loss = DiscreteDistribution::discretize(&FamilySpec::lognormal(0.0, 0.5, 2000, 20.0))?;
    println!("mean {:.6}  ess sup {:.6}", loss.mean(), loss.ess_sup());

    let measures = [
        RiskSpec::Expectation,
        RiskSpec::var(0.99),
        RiskSpec::es(0.99),
        RiskSpec::Distortion(Distortion::PowerHazard(0.5)),
        RiskSpec::Spectral(Spectrum::Power(3.0)),
        RiskSpec::Entropic { gamma: 0.5 },
    ];
    for r in &measures {
        let plain = r.evaluate(&loss)?;
        let shifted = r.evaluate(&loss.shift(1.0))?;
        println!(
            "{:<22} rho(X) = {plain:>10.6}  rho(X + 1) - rho(X) = {:.3e}  coherent: {}",
            r.kind(),
            shifted - plain,
            r.is_coherent()
        );
    }
    Ok(())
}
