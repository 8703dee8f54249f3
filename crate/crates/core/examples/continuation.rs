//! Two-segment continuation against a one-shot run.

use wavelab::error::Result;
use wavelab::experiments::{continuation_check, ContinuationOptions, DataSpec};
use wavelab::grid::build_grid;
use wavelab::solver::{HKind, Nonlinearity};

fn main() -> Result<()> {
    let g = build_grid(12.0, 384, 0.9, 1.0 / 6.0)?;
    let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
    for mollify_k in [None, Some(4)] {
        let opts = ContinuationOptions {
            mollify_k,
            ..Default::default()
        };
        let c = continuation_check(&DataSpec::gaussian(0.05), &nl, 2, 2.0, &g, &opts)?;
        println!("{}", wavelab::io::to_json_string(&c)?);
    }
    Ok(())
}
