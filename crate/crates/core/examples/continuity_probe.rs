//! Lipschitz ratios of the solution map over step sizes and random directions.

use wavelab::error::Result;
use wavelab::experiments::{continuity_probe_directions, random_directions, DataSpec};
use wavelab::grid::build_grid;
use wavelab::solver::{HKind, Nonlinearity};

fn main() -> Result<()> {
    let g = build_grid(10.0, 320, 0.9, 1.0 / 6.0)?;
    let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
    let base = DataSpec::gaussian(0.05).sample(&g)?;
    let dirs = random_directions(42, 4, &g)?;
    let rep = continuity_probe_directions(
        &base,
        &dirs,
        &[0.0, 1e-2, 5e-3, 2.5e-3],
        &nl,
        2.0,
        &g,
        1.0 / 6.0,
    )?;
    for p in &rep.points {
        println!(
            "dir {}  δ {:<7} ratio {:?}  admissible {}",
            p.direction, p.delta, p.ratio, p.admissible
        );
    }
    println!("max/min {:?}", rep.spread());
    Ok(())
}
