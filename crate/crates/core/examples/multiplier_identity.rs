//! Divergence identity: exact pointwise check, constant fields and mesh refinement.

use wavelab::error::Result;
use wavelab::grid::build_grid;
use wavelab::multiplier::{
    divergence_lhs_exact, divergence_residual, divergence_rhs, refinement_study, DivergenceMethod,
    MultiplierField, Scenario,
};

fn main() -> Result<()> {
    let scen = Scenario::manufactured(0.1);
    for mf in [MultiplierField::kss(0.5)?, MultiplierField::ms(4.0)?] {
        let p = scen.point(0.5, 1.3, 3)?;
        let (l, r) = (
            divergence_lhs_exact(&p, &mf, 1.3)?,
            divergence_rhs(&p, &mf, 1.3),
        );
        println!("{}: lhs {l:.15e}  rhs {r:.15e}", mf.variant());
        let g = build_grid(8.0, 256, 0.9, 0.0)?;
        let c = divergence_residual(
            &Scenario::Constant { value: 1.0 },
            &mf,
            &g,
            1.0,
            DivergenceMethod::Exact,
            None,
        )?;
        println!("  constant field max residual {:.2e}", c.max_residual);
        let rep = refinement_study(
            &scen,
            &mf,
            8.0,
            &[128, 256, 512],
            0.9,
            1.0,
            DivergenceMethod::Difference,
        )?;
        println!("  refinement ratios {:?}", rep.ratios);
    }
    Ok(())
}
