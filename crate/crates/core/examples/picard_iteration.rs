//! Successive approximations for `F = φ_t²`, `h = φ` and their contraction ratios.

use wavelab::error::Result;
use wavelab::experiments::DataSpec;
use wavelab::grid::build_grid;
use wavelab::picard::{contraction_condition, contraction_ratios, run, PicardOptions};
use wavelab::solver::{HKind, Nonlinearity};

fn main() -> Result<()> {
    let g = build_grid(9.0, 256, 0.9, 1.0 / 6.0)?;
    let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
    let pair = DataSpec::gaussian(0.01).sample(&g)?;
    let rep = run(&pair, &nl, 1.0, &g, &PicardOptions::default())?;
    for r in &rep.records {
        println!(
            "k {:>2}  j {:?}  E1+Y1 diff {:.3e}  sup|h| {:.2e}",
            r.k,
            r.mollifier_j,
            r.diff(),
            r.sup_h
        );
    }
    println!("ratios {:?}", contraction_ratios(&rep)?);
    let c4 = rep.records.iter().filter_map(|r| r.c4).fold(0.0, f64::max);
    let (v, ok) = contraction_condition(c4, rep.m1_empirical, rep.epsilon, 1.0);
    println!(
        "M1 {:.4}  C4 {:.4}  smallness {v:.3e} (holds: {ok})",
        rep.m1_empirical, c4
    );
    Ok(())
}
