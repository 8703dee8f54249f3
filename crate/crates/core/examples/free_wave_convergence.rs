//! Free radial wave against the d'Alembert oracle on three meshes.

use wavelab::data::{profile, ProfileParams};
use wavelab::error::Result;
use wavelab::grid::build_grid;
use wavelab::solver::{dalembert_free, solve_linear, CoefficientField, Forcing};

fn main() -> Result<()> {
    let t = 5.0;
    let mut prev: Option<f64> = None;
    for nr in [512, 1024, 2048] {
        let g = build_grid(12.0, nr, 0.9, 0.0)?;
        let pair = profile(
            "gaussian",
            ProfileParams {
                g_amplitude: 0.5,
                ..Default::default()
            },
            &g,
        )?;
        let out = solve_linear(
            &pair,
            &CoefficientField::zero(),
            &Forcing::zero(),
            t,
            &g,
            &mut [],
        )?;
        let phi = out.final_snapshot.phi(g.dr());
        let err: Vec<f64> = (0..g.len())
            .map(|i| phi[i] - dalembert_free(&pair, t, g.r(i)))
            .collect();
        let e = g.l2(&err);
        match prev {
            Some(p) => println!("nr {nr:>5}  L2 error {e:.3e}  ratio {:.3}", p / e),
            None => println!("nr {nr:>5}  L2 error {e:.3e}"),
        }
        prev = Some(e);
    }
    Ok(())
}
