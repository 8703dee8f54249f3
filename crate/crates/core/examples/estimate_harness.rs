//! Space-time estimate sweep, energy inequality, Sobolev ratios and convolution bounds.

use wavelab::data::{profile, ProfileParams};
use wavelab::error::Result;
use wavelab::estimates::{
    convolution_bound_check, energy_inequality_check, estimate_sweep, grid_of_instances,
    sobolev_checks, uniformity_across_t, write_sweep_csv,
};
use wavelab::grid::{build_grid, GridPolicy};
use wavelab::level::LevelCollector;
use wavelab::multiplier::log_samples;
use wavelab::solver::{solve_linear, CoefficientField, Forcing};

fn main() -> Result<()> {
    let policy = GridPolicy {
        dr: 1.0 / 16.0,
        pad: 8.0,
        cfl_factor: 0.9,
        coeff_bound: 1.0 / 6.0,
    };
    let rows = estimate_sweep(
        &grid_of_instances(&[0.01, 0.1], &[1.0, 10.0], &[0.0, 0.1], &[0.0], 0.25),
        &policy,
    )?;
    write_sweep_csv(&rows, std::io::stdout())?;
    println!(
        "spread of max ratio across T: {:?}",
        uniformity_across_t(&rows)
    );

    let g = build_grid(10.0, 512, 0.9, 1.0 / 6.0)?;
    let pair = profile(
        "gaussian",
        ProfileParams {
            g_amplitude: 0.5,
            ..Default::default()
        },
        &g,
    )?;
    let forcing = Forcing::closed("shell", |t, r| 0.05 * (-(r - 1.0 - t).powi(2)).exp());
    let e = energy_inequality_check(&pair, &CoefficientField::gaussian(0.1), &forcing, 3.0, &g)?;
    println!("energy inequality implied C = {:?}", e.implied_c);

    let mut col = LevelCollector::new(20);
    solve_linear(
        &pair,
        &CoefficientField::zero(),
        &Forcing::zero(),
        3.0,
        &g,
        &mut [&mut col],
    )?;
    println!(
        "Sobolev constant C_S = {:.4}",
        sobolev_checks(&col.levels)?.c_s()
    );

    let conv = convolution_bound_check(
        &[1, 4, 16, 64],
        &[0.5, 1.5, 2.5],
        &log_samples(1e-3, 1e3, 81),
        &[0.5],
    )?;
    for k in &conv.kernel {
        println!(
            "k {:>2} α {}  sup {:.4}  far field {:.1e}",
            k.k, k.alpha, k.sup_ratio, k.far_field_deviation
        );
    }
    Ok(())
}
