//! The mollifier family `ρ_j(x) = j³ ρ(j x)` and exact radial convolution.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::data::{DataPair, RadialFunction};
use crate::error::{invalid, Result, WaveError};
use crate::grid::RadialGrid;
use crate::quadrature::{tanh_sinh, tanh_sinh_split, GaussLegendre};

const TABLE_CELLS: usize = 4096;

fn bump(s: f64) -> f64 {
    let s = s.abs();
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

struct BaseTable {
    z: f64,
    /// `G(τ_i) = ∫_0^{τ_i} σ ρ(σ) dσ` at `τ_i = i / TABLE_CELLS`.
    g: Vec<f64>,
    m2: f64,
}

fn base() -> &'static BaseTable {
    static TABLE: OnceLock<BaseTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mass = 4.0 * PI * tanh_sinh(0.0, 1.0, 1e-15, |s, _, _| s * s * bump(s));
        let z = 1.0 / mass;
        let gl = GaussLegendre::new(12);
        let h = 1.0 / TABLE_CELLS as f64;
        let mut g = Vec::with_capacity(TABLE_CELLS + 1);
        g.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_CELLS {
            let a = i as f64 * h;
            acc += gl.integrate(a, a + h, |s| z * s * bump(s));
            g.push(acc);
        }
        let m2 = 4.0 * PI * z * tanh_sinh(0.0, 1.0, 1e-15, |s, _, _| s.powi(4) * bump(s));
        BaseTable { z, g, m2 }
    })
}

/// Normalized base profile `ρ(s) = Z exp(-1/(1 - s²))` on `s < 1`.
pub fn base_rho(s: f64) -> f64 {
    base().z * bump(s)
}

/// `G(τ)` by cubic Hermite interpolation of the cumulative table.
fn big_g(tau: f64) -> f64 {
    let t = base();
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return t.g[TABLE_CELLS];
    }
    let h = 1.0 / TABLE_CELLS as f64;
    let x = tau / h;
    let i = (x.floor() as usize).min(TABLE_CELLS - 1);
    let s = x - i as f64;
    let a = i as f64 * h;
    let (g0, g1) = (t.g[i], t.g[i + 1]);
    let d0 = a * base_rho(a) * h;
    let d1 = (a + h) * base_rho(a + h) * h;
    let s2 = s * s;
    let s3 = s2 * s;
    g0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * (s3 - 2.0 * s2 + s)
        + g1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * (s3 - s2)
}

/// `ρ_j` for one scale index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierKernel {
    pub j: u32,
    /// Normalization `Z` of the base profile.
    pub normalization: f64,
}

pub fn mollifier_kernel(j: u32) -> Result<MollifierKernel> {
    if j < 1 {
        return Err(invalid("mollifier scale index must be at least 1"));
    }
    Ok(MollifierKernel {
        j,
        normalization: base().z,
    })
}

impl MollifierKernel {
    pub fn support_radius(&self) -> f64 {
        1.0 / self.j as f64
    }

    /// `ρ_j(|x|)`.
    pub fn value(&self, r: f64) -> f64 {
        let j = self.j as f64;
        j * j * j * base_rho(j * r)
    }

    /// `∫_{ℝ³} ρ_j dx` by direct quadrature at this scale.
    pub fn mass(&self) -> f64 {
        let rad = self.support_radius();
        4.0 * PI * tanh_sinh(0.0, rad, 1e-15, |s, _, _| s * s * self.value(s))
    }

    /// `m₂(j) = ∫ |y|² ρ_j(y) dy = m₂(1) / j²`.
    pub fn second_moment(&self) -> f64 {
        base().m2 / (self.j as f64).powi(2)
    }

    /// `∫_{|r-s|}^{r+s} t ρ_j(t) dt`.
    pub fn shell_kernel(&self, r: f64, s: f64) -> f64 {
        let j = self.j as f64;
        j * (big_g(j * (r + s)) - big_g(j * (r - s).abs()))
    }
}

/// `(ρ_j * f)(r)` at every node via the shell formula.
pub fn mollify_radial(f: &RadialFunction, j: u32, grid: &RadialGrid) -> Result<RadialFunction> {
    let kernel = mollifier_kernel(j)?;
    let rad = kernel.support_radius();
    if grid.dr() >= 0.25 * rad {
        return Err(WaveError::Resolution { j, dr: grid.dr() });
    }
    let values = grid
        .nodes()
        .iter()
        .map(|&r| {
            if r == 0.0 {
                4.0 * PI
                    * tanh_sinh(0.0, rad, 1e-14, |s, _, _| {
                        s * s * kernel.value(s) * f.value(s)
                    })
            } else {
                let a = (r - rad).max(0.0);
                let b = r + rad;
                // the outer shell saturates at s = rad - r when r < rad
                let mut breaks = vec![a, b];
                if r < rad && rad - r > a {
                    breaks.insert(1, rad - r);
                }
                let int = tanh_sinh_split(&breaks, 1e-13, |s, _, _| {
                    s * f.value(s) * kernel.shell_kernel(r, s)
                });
                2.0 * PI * int / r
            }
        })
        .collect();
    RadialFunction::sampled(values, grid)
}

/// Mollifies both components of a pair.
pub fn mollify_pair(pair: &DataPair, j: u32) -> Result<DataPair> {
    let f = mollify_radial(&pair.f, j, &pair.grid)?;
    let g = mollify_radial(&pair.g, j, &pair.grid)?;
    Ok(DataPair {
        grid: pair.grid,
        f,
        g,
        descriptor: None,
    })
}

/// Whether `ρ_j` is resolved on `grid`.
pub fn resolves(grid: &RadialGrid, j: u32) -> bool {
    grid.dr() < 0.25 / j as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Profile, ProfileKind};
    use crate::grid::build_grid;

    #[test]
    fn unit_mass_and_support() {
        for k in 0..=8 {
            let m = mollifier_kernel(1 << k).unwrap();
            assert!((m.mass() - 1.0).abs() < 1e-10, "k={k} mass={}", m.mass());
            assert_eq!(m.support_radius(), 2f64.powi(-k));
            assert_eq!(m.value(1.0001 * m.support_radius()), 0.0);
            assert!(m.value(0.5 * m.support_radius()) > 0.0);
        }
        assert!(mollifier_kernel(0).is_err());
    }

    #[test]
    fn shell_kernel_large_r_limit() {
        // For s > 1/j the shell integral is the full first moment 1/(4π s)·(mass)/(...)
        let m = mollifier_kernel(4).unwrap();
        // ∫_0^∞ t ρ_j(t) dt is j·G(1)
        let full = m.shell_kernel(10.0, 10.0);
        assert!((full - 4.0 * big_g(1.0)).abs() < 1e-14);
    }

    #[test]
    fn locally_constant_is_preserved() {
        let g = build_grid(4.0, 400, 0.5, 0.0).unwrap();
        let f = RadialFunction::sampled(vec![2.5; g.len()], &g).unwrap();
        let out = mollify_radial(&f, 8, &g).unwrap();
        for i in 0..300 {
            assert!(
                (out.values[i] - 2.5).abs() < 1e-12,
                "i={i} {}",
                out.values[i]
            );
        }
    }

    #[test]
    fn quadratic_gains_second_moment() {
        let g = build_grid(2.0, 400, 0.5, 0.0).unwrap();
        let quad = RadialFunction::sampled(g.nodes().iter().map(|r| r * r).collect(), &g).unwrap();
        for j in [4u32, 8, 16] {
            let out = mollify_radial(&quad, j, &g).unwrap();
            let m2 = mollifier_kernel(j).unwrap().second_moment();
            for i in [0usize, 1, 50, 200, 300] {
                let r = g.r(i);
                assert!((out.values[i] - (r * r + m2)).abs() < 1e-11, "j={j} i={i}");
            }
        }
        let m = mollifier_kernel(1).unwrap();
        let direct = 4.0 * PI * tanh_sinh(0.0, 1.0, 1e-15, |s, _, _| s.powi(4) * m.value(s));
        assert!((direct - m.second_moment()).abs() < 1e-14);
    }

    #[test]
    fn resolution_guard() {
        let g = build_grid(4.0, 64, 0.5, 0.0).unwrap();
        let f = RadialFunction::from_profile(
            Profile::new(ProfileKind::Gaussian, 1.0, 0.0, 1.0).unwrap(),
            &g,
        );
        assert!(matches!(
            mollify_radial(&f, 64, &g),
            Err(WaveError::Resolution { j: 64, .. })
        ));
        assert!(mollify_radial(&f, 2, &g).is_ok());
    }
}
