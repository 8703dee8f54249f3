//! Empirical stand-ins for the existential constants, from one Picard run.

use wavelab::error::Result;
use wavelab::experiments::{constants_ledger, DataSpec};
use wavelab::grid::build_grid;
use wavelab::picard::{run, PicardOptions};
use wavelab::solver::{HKind, Nonlinearity};

fn main() -> Result<()> {
    let g = build_grid(9.0, 256, 0.9, 1.0 / 6.0)?;
    let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
    let rep = run(
        &DataSpec::gaussian(0.01).sample(&g)?,
        &nl,
        1.0,
        &g,
        &PicardOptions::default(),
    )?;
    print!(
        "{}",
        wavelab::io::to_json_string(&constants_ledger(&rep, "example-eps0.01-T1"))?
    );
    Ok(())
}
