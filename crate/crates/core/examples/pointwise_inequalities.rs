//! Pointwise inequalities of both multiplier families.

use wavelab::error::Result;
use wavelab::multiplier::{
    band_samples, check_pointwise_inequalities, log_samples, MultiplierField,
};

fn main() -> Result<()> {
    for kappa in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let rep = check_pointwise_inequalities(
            &MultiplierField::kss(kappa)?,
            &log_samples(1e-4, 1e3, 10_000),
        );
        println!(
            "kss κ = {kappa:<4}  violations {}  min margin {:.3e}",
            rep.total_violations, rep.min_margin
        );
    }
    for k in 1..=8 {
        let rho = 2f64.powi(k);
        let rep =
            check_pointwise_inequalities(&MultiplierField::ms(rho)?, &band_samples(rho, 10_000));
        let eq: Vec<usize> = rep.checks.iter().map(|c| c.equalities).collect();
        println!(
            "ms  ρ = {rho:<4}  violations {}  equalities {eq:?}",
            rep.total_violations
        );
    }
    Ok(())
}
