//! Lifespan sweep for `F = φ_t²`, `h = φ`: blow-up time per data size and a
//! fit of `log T_star` against `1/ε`.

use wavelab::experiments::{lifespan_sweep, DataSpec};
use wavelab::grid::GridPolicy;
use wavelab::solver::{HKind, Nonlinearity};

fn main() -> wavelab::error::Result<()> {
    let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
    let policy = GridPolicy {
        dr: 1.0 / 16.0,
        pad: 8.0,
        cfl_factor: 0.9,
        coeff_bound: 0.5,
    };
    let budget = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200.0);
    let rep = lifespan_sweep(
        &DataSpec::gaussian(0.4),
        &[0.4, 0.3, 0.2, 0.15, 0.1],
        &nl,
        budget,
        &policy,
    )?;
    for p in &rep.points {
        println!(
            "eps = {:<5} T* = {:<10.4} {:?}",
            p.epsilon, p.t_star, p.criterion
        );
    }
    match rep.fit {
        Some(f) => println!(
            "slope {:.4}  intercept {:.4}  r² {:.4}",
            f.slope, f.intercept, f.r_squared
        ),
        None => println!("fit: {}", rep.fit_error.unwrap_or_default()),
    }
    println!("strictly monotone: {}", rep.strictly_monotone);
    Ok(())
}
