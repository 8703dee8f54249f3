//! Derived fields at one time level and the streaming sink interface.

use crate::error::Result;
use crate::grid::{even_derivatives, hessian_sq_unchecked, FieldSnapshot, RadialGrid};

/// Every quantity the norm, estimate and trace sinks read at one time level.
///
/// `phi_tt` comes from the equation, `(1 - h) Δφ + F`, not from time differencing.
#[derive(Debug, Clone)]
pub struct LevelFields {
    pub grid: RadialGrid,
    pub t: f64,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub phi_r: Vec<f64>,
    pub phi_rr: Vec<f64>,
    pub phi_tr: Vec<f64>,
    pub phi_tt: Vec<f64>,
    pub h: Vec<f64>,
    pub h_t: Vec<f64>,
    pub h_r: Vec<f64>,
    pub forcing: Vec<f64>,
    /// False when only first-order fields are meaningful.
    pub second_order: bool,
}

impl LevelFields {
    /// Builds the level from a snapshot and the coefficient/forcing samples at the same time.
    pub fn from_snapshot(
        grid: &RadialGrid,
        snap: &FieldSnapshot,
        h: &[f64],
        h_t: &[f64],
        h_r: &[f64],
        forcing: &[f64],
    ) -> Result<Self> {
        grid.check_len(h.len())?;
        grid.check_len(h_t.len())?;
        grid.check_len(h_r.len())?;
        grid.check_len(forcing.len())?;
        Self::from_snapshot_with(grid, snap, |_, _, _| {
            [h.to_vec(), h_t.to_vec(), h_r.to_vec(), forcing.to_vec()]
        })
    }

    /// Builds the level with coefficient samples computed from `(φ, φ_t, φ_r)` of the level itself.
    pub fn from_snapshot_with(
        grid: &RadialGrid,
        snap: &FieldSnapshot,
        coeffs: impl FnOnce(&[f64], &[f64], &[f64]) -> [Vec<f64>; 4],
    ) -> Result<Self> {
        grid.check_len(snap.u.len())?;
        let dr = grid.dr();
        let phi = snap.phi(dr);
        let phi_t = snap.phi_t(dr);
        let (phi_r, phi_rr) = even_derivatives(&phi, dr);
        let (phi_tr, _) = even_derivatives(&phi_t, dr);
        let [h, h_t, h_r, forcing] = coeffs(&phi, &phi_t, &phi_r);
        let lap = laplacian(&phi_r, &phi_rr, dr);
        let phi_tt = lap
            .iter()
            .zip(&h)
            .zip(&forcing)
            .map(|((l, h), f)| (1.0 - h) * l + f)
            .collect();
        Ok(Self {
            grid: *grid,
            t: snap.t,
            phi,
            phi_t,
            phi_r,
            phi_rr,
            phi_tr,
            phi_tt,
            h,
            h_t,
            h_r,
            forcing,
            second_order: true,
        })
    }

    /// Level of the free equation (`h = 0`, `F = 0`).
    pub fn free(grid: &RadialGrid, snap: &FieldSnapshot) -> Result<Self> {
        let z = vec![0.0; grid.len()];
        Self::from_snapshot(grid, snap, &z, &z, &z, &z)
    }

    /// Level carrying only `φ`, `φ_t`, `φ_r`; second-order fields are zero.
    pub fn first_order(
        grid: &RadialGrid,
        t: f64,
        phi: Vec<f64>,
        phi_t: Vec<f64>,
        phi_r: Vec<f64>,
    ) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid: *grid,
            t,
            phi,
            phi_t,
            phi_r,
            phi_rr: z.clone(),
            phi_tr: z.clone(),
            phi_tt: z.clone(),
            h: z.clone(),
            h_t: z.clone(),
            h_r: z.clone(),
            forcing: z,
            second_order: false,
        }
    }

    pub fn hessian_sq(&self) -> Vec<f64> {
        hessian_sq_unchecked(&self.phi_r, &self.phi_rr, self.grid.dr())
    }

    pub fn laplacian(&self) -> Vec<f64> {
        laplacian(&self.phi_r, &self.phi_rr, self.grid.dr())
    }

    /// `|∂φ|² = φ_t² + φ_r²`.
    pub fn grad_sq(&self) -> Vec<f64> {
        self.phi_t
            .iter()
            .zip(&self.phi_r)
            .map(|(a, b)| a * a + b * b)
            .collect()
    }

    /// `|∂∂φ|² = φ_tt² + 2 φ_tr² + |∇²φ|²`.
    pub fn second_grad_sq(&self) -> Vec<f64> {
        let hs = self.hessian_sq();
        (0..self.phi.len())
            .map(|i| self.phi_tt[i].powi(2) + 2.0 * self.phi_tr[i].powi(2) + hs[i])
            .collect()
    }

    /// `E₁`-type value `‖∇φ‖ + ‖φ_t‖` at this level.
    pub fn energy1(&self) -> f64 {
        self.grid.l2(&self.phi_r) + self.grid.l2(&self.phi_t)
    }

    /// `‖φ_t‖² + ‖∇φ‖²`, the conserved quadratic energy of the free equation.
    pub fn quadratic_energy(&self) -> f64 {
        self.grid.l2_sq(&self.phi_r) + self.grid.l2_sq(&self.phi_t)
    }

    pub fn sup_abs_h(&self) -> f64 {
        self.h.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `Δφ = φ_rr + 2 φ_r / r`, with `3 φ_rr(0)` at the origin.
pub(crate) fn laplacian(phi_r: &[f64], phi_rr: &[f64], dr: f64) -> Vec<f64> {
    phi_r
        .iter()
        .zip(phi_rr)
        .enumerate()
        .map(|(i, (d1, d2))| {
            if i == 0 {
                3.0 * d2
            } else {
                d2 + 2.0 * d1 / (i as f64 * dr)
            }
        })
        .collect()
}

/// Receives time levels in increasing `t`.
pub trait LevelSink {
    fn accept(&mut self, level: &LevelFields) -> Result<()>;
}

impl<S: LevelSink + ?Sized> LevelSink for &mut S {
    fn accept(&mut self, level: &LevelFields) -> Result<()> {
        (**self).accept(level)
    }
}

/// Collects every level it sees; meant for tests and small runs.
#[derive(Debug, Default, Clone)]
pub struct LevelCollector {
    pub levels: Vec<LevelFields>,
    pub stride: usize,
    seen: usize,
}

impl LevelCollector {
    pub fn new(stride: usize) -> Self {
        Self {
            levels: Vec::new(),
            stride: stride.max(1),
            seen: 0,
        }
    }
}

impl LevelSink for LevelCollector {
    fn accept(&mut self, level: &LevelFields) -> Result<()> {
        if self.seen.is_multiple_of(self.stride.max(1)) {
            self.levels.push(level.clone());
        }
        self.seen += 1;
        Ok(())
    }
}
