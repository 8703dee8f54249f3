//! Streaming E/Y/Z norms of a quasilinear run, and the same norms merged from two slabs.

use wavelab::error::Result;
use wavelab::experiments::DataSpec;
use wavelab::grid::build_grid;
use wavelab::level::LevelCollector;
use wavelab::norms::NormAccumulator;
use wavelab::solver::{solve_quasilinear, HKind, Nonlinearity};

fn main() -> Result<()> {
    let g = build_grid(12.0, 384, 0.9, 1.0 / 6.0)?;
    let nl = Nonlinearity::new(1.0, 0.5, HKind::Quadratic, 1.0);
    let pair = DataSpec::gaussian(0.05).sample(&g)?;
    let mut col = LevelCollector::new(1);
    let out = solve_quasilinear(&pair, &nl, 4.0, &g, &mut [&mut col])?;
    let n = out.norms.finalize()?;
    println!("{}", wavelab::io::to_json_string(&n)?);

    let half = col.levels.len() / 2;
    let (mut a, mut b) = (
        NormAccumulator::new(&col.levels[0].grid),
        NormAccumulator::new(&col.levels[0].grid),
    );
    col.levels[..half]
        .iter()
        .try_for_each(|l| a.accumulate_level(l))?;
    col.levels[half..]
        .iter()
        .try_for_each(|l| b.accumulate_level(l))?;
    let m = a.merge(&b)?.finalize()?;
    println!("merged Y1 {:.15e} vs {:.15e}", m.y1, n.y1);
    println!(
        "Z1 <= factor * Y1: {} <= {}",
        n.z1,
        n.z_over_y_factor() * n.y1
    );
    Ok(())
}
