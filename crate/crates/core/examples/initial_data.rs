//! Data pairs, their Sobolev norms, rescaling and the mollifier family.

use wavelab::data::{profile, scale_to_epsilon, sobolev_norms, ProfileParams};
use wavelab::error::Result;
use wavelab::grid::build_grid;
use wavelab::mollifier::{mollifier_kernel, mollify_pair, mollify_radial};

fn main() -> Result<()> {
    let g = build_grid(6.0, 4096, 0.9, 0.0)?;
    let pair = profile(
        "ripple",
        ProfileParams {
            g_amplitude: -0.5,
            ..Default::default()
        },
        &g,
    )?;
    let n = sobolev_norms(&pair, &g)?;
    println!(
        "‖∇f‖_H1 = {:.6}  ‖g‖_H1 = {:.6}  eps = {:.6}",
        n.h1_grad_f, n.h1_g, n.epsilon
    );

    let small = scale_to_epsilon(&pair, &g, 0.01)?;
    println!("rescaled eps = {:.12}", sobolev_norms(&small, &g)?.epsilon);

    for k in 0..=6 {
        let j = 1u32 << k;
        let m = sobolev_norms(&mollify_pair(&pair, j)?, &g)?;
        let f = mollify_radial(&pair.f, j, &g)?;
        let d: Vec<f64> = f
            .values
            .iter()
            .zip(&pair.f.values)
            .map(|(a, b)| a - b)
            .collect();
        println!(
            "j = {j:>3}  mass {:.12}  eps {:.6}  ‖ρ_j*f - f‖ {:.3e}",
            mollifier_kernel(j)?.mass(),
            m.epsilon,
            g.l2(&d)
        );
    }
    Ok(())
}
