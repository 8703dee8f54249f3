//! Uniform radial mesh for the reduced problem in `u = r φ`, discrete radial
//! calculus and node quadrature weights.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WaveError};

/// Largest admissible sup |h| for the perturbed operator.
pub const COEFF_BOUND_MAX: f64 = 0.5;

/// Uniform mesh `r_i = i dr`, `i = 0..=nr`, with a CFL-limited time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    nr: usize,
    dr: f64,
    dt: f64,
    cfl_factor: f64,
    coeff_bound: f64,
}

/// Builds a grid whose time step is `cfl_factor * dr / sqrt(1 + coeff_bound)`.
pub fn build_grid(r_max: f64, nr: usize, cfl_factor: f64, coeff_bound: f64) -> Result<RadialGrid> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(invalid(format!("r_max must be positive, got {r_max}")));
    }
    if nr < 16 {
        return Err(invalid(format!("nr must be at least 16, got {nr}")));
    }
    if !(cfl_factor > 0.0 && cfl_factor < 1.0) {
        return Err(invalid(format!(
            "cfl_factor must lie in (0, 1), got {cfl_factor}"
        )));
    }
    if !(coeff_bound >= 0.0) {
        return Err(invalid(format!(
            "coeff_bound must be nonnegative, got {coeff_bound}"
        )));
    }
    if coeff_bound > COEFF_BOUND_MAX {
        return Err(WaveError::CoefficientBound {
            sup: coeff_bound,
            limit: COEFF_BOUND_MAX,
        });
    }
    let dr = r_max / nr as f64;
    let dt = cfl_factor * dr / (1.0 + coeff_bound).sqrt();
    Ok(RadialGrid {
        r_max,
        nr,
        dr,
        dt,
        cfl_factor,
        coeff_bound,
    })
}

/// Sizes a grid to a time horizon: `r_max = t_end + pad` at a fixed target `dr`,
/// so outgoing waves never reach the outer boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub dr: f64,
    pub pad: f64,
    pub cfl_factor: f64,
    pub coeff_bound: f64,
}

impl GridPolicy {
    pub fn grid_for(&self, t_end: f64) -> Result<RadialGrid> {
        if !(self.dr > 0.0) || !(self.pad > 0.0) {
            return Err(invalid("grid policy needs positive dr and pad"));
        }
        let r_max = t_end.max(0.0) + self.pad;
        let nr = ((r_max / self.dr).ceil() as usize).max(16);
        build_grid(r_max, nr, self.cfl_factor, self.coeff_bound)
    }
}

impl RadialGrid {
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn nr(&self) -> usize {
        self.nr
    }
    /// Number of nodes, `nr + 1`.
    pub fn len(&self) -> usize {
        self.nr + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn cfl_factor(&self) -> f64 {
        self.cfl_factor
    }
    pub fn coeff_bound(&self) -> f64 {
        self.coeff_bound
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.nr).map(|i| self.r(i)).collect()
    }

    /// Largest stable step for a given sup |h|.
    pub fn stable_dt(&self, sup_h: f64) -> f64 {
        self.dr / (1.0 + sup_h.abs()).sqrt()
    }

    /// Step count and uniform step that land exactly on `t_end`.
    pub fn steps_to(&self, t_end: f64) -> (usize, f64) {
        if t_end <= 0.0 {
            return (0, self.dt);
        }
        let n = ((t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, t_end / n as f64)
    }

    /// Same grid with the time step shrunk so that `t_end` is a whole number of steps.
    pub fn fitted_to(&self, t_end: f64) -> RadialGrid {
        let (_, dt) = self.steps_to(t_end);
        RadialGrid { dt, ..*self }
    }

    /// Halves both `dr` and `dt`; fine-grid node `2i` coincides with coarse node `i`.
    pub fn refined(&self) -> RadialGrid {
        RadialGrid {
            nr: self.nr * 2,
            dr: self.dr * 0.5,
            dt: self.dt * 0.5,
            ..*self
        }
    }

    /// Overrides the time step; it must not exceed the CFL choice.
    pub fn with_time_step(&self, dt: f64) -> Result<RadialGrid> {
        if !(dt > 0.0)
            || dt > self.cfl_factor * self.dr / (1.0 + self.coeff_bound).sqrt() * (1.0 + 1e-12)
        {
            return Err(invalid(format!("time step {dt} violates the CFL bound")));
        }
        Ok(RadialGrid { dt, ..*self })
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(invalid(format!(
                "array length {n} does not match nr + 1 = {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Trapezoid rule for `∫_0^{r_max} v dr`.
    pub fn trapezoid(&self, v: &[f64]) -> f64 {
        let n = v.len();
        if n < 2 {
            return 0.0;
        }
        let inner: f64 = v[1..n - 1].iter().sum();
        self.dr * (inner + 0.5 * (v[0] + v[n - 1]))
    }

    /// `‖v‖²_{L²(ℝ³)} = 4π ∫ r² v² dr` for a radial function sampled at the nodes.
    pub fn l2_sq(&self, v: &[f64]) -> f64 {
        let w: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, x)| self.r(i).powi(2) * x * x)
            .collect();
        4.0 * PI * self.trapezoid(&w)
    }

    pub fn l2(&self, v: &[f64]) -> f64 {
        self.l2_sq(v).sqrt()
    }

    /// Node weights `W_i` with `Σ W_i w_i = ∫_0^{r_max} r^p w(r) dr` exactly when `w`
    /// is piecewise linear between nodes. Requires `p > -1`.
    pub fn moment_weights(&self, p: f64) -> Vec<f64> {
        assert!(p > -1.0, "moment exponent must exceed -1");
        let mut w = vec![0.0; self.len()];
        let gl = crate::quadrature::GaussLegendre::new(8);
        for i in 0..self.nr {
            let a = self.r(i);
            let b = self.r(i + 1);
            let (left, right) = if i < 32 {
                let m0 = (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0);
                let m1 = (b.powf(p + 2.0) - a.powf(p + 2.0)) / (p + 2.0);
                ((b * m0 - m1) / self.dr, (m1 - a * m0) / self.dr)
            } else {
                (
                    gl.integrate(a, b, |r| r.powf(p) * (b - r)) / self.dr,
                    gl.integrate(a, b, |r| r.powf(p) * (r - a)) / self.dr,
                )
            };
            w[i] += left;
            w[i + 1] += right;
        }
        w
    }
}

/// First and second radial derivatives: central stencils inside, second-order
/// one-sided stencils at both ends. Exact on quadratics.
pub fn radial_derivatives(values: &[f64], grid: &RadialGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    grid.check_len(values.len())?;
    let n = values.len();
    let h = grid.dr();
    let v = values;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
    let m = n - 1;
    d1[m] = (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h);
    d2[m] = (2.0 * v[m] - 5.0 * v[m - 1] + 4.0 * v[m - 2] - v[m - 3]) / (h * h);
    Ok((d1, d2))
}

/// Derivatives of a function known to be even in `r` (a radial field):
/// the origin uses the mirror node, the outer end is one-sided.
pub(crate) fn even_derivatives(v: &[f64], dr: f64) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (v[i + 1] - v[i - 1]) / (2.0 * dr);
        d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dr * dr);
    }
    d1[0] = 0.0;
    d2[0] = 2.0 * (v[1] - v[0]) / (dr * dr);
    let m = n - 1;
    d1[m] = (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * dr);
    d2[m] = (2.0 * v[m] - 5.0 * v[m - 1] + 4.0 * v[m - 2] - v[m - 3]) / (dr * dr);
    (d1, d2)
}

/// `|∇²φ|² = φ_rr² + 2 (φ_r / r)²` for radial φ; `3 φ_rr(0)²` at the origin.
pub fn hessian_frobenius_sq(phi_r: &[f64], phi_rr: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    grid.check_len(phi_r.len())?;
    grid.check_len(phi_rr.len())?;
    Ok(hessian_sq_unchecked(phi_r, phi_rr, grid.dr()))
}

pub(crate) fn hessian_sq_unchecked(phi_r: &[f64], phi_rr: &[f64], dr: f64) -> Vec<f64> {
    phi_r
        .iter()
        .zip(phi_rr)
        .enumerate()
        .map(|(i, (&d1, &d2))| {
            if i == 0 {
                3.0 * d2 * d2
            } else {
                let q = d1 / (i as f64 * dr);
                d2 * d2 + 2.0 * q * q
            }
        })
        .collect()
}

/// `φ = u / r` with the origin value `∂_r u(0)` taken from the odd extension of `u`.
pub(crate) fn phi_from_u(u: &[f64], dr: f64) -> Vec<f64> {
    let mut phi: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, &x)| if i == 0 { 0.0 } else { x / (i as f64 * dr) })
        .collect();
    phi[0] = (8.0 * u[1] - u[2]) / (6.0 * dr);
    phi
}

/// One time level of the reduced solution: `u = r φ` and `∂_t u` at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
}

impl FieldSnapshot {
    /// Builds a snapshot from nodal φ and ∂_t φ.
    pub fn from_phi(t: f64, phi: &[f64], phi_t: &[f64], grid: &RadialGrid) -> Result<Self> {
        grid.check_len(phi.len())?;
        grid.check_len(phi_t.len())?;
        let u = phi.iter().enumerate().map(|(i, p)| grid.r(i) * p).collect();
        let u_t = phi_t
            .iter()
            .enumerate()
            .map(|(i, p)| grid.r(i) * p)
            .collect();
        Ok(Self { t, u, u_t })
    }

    pub fn zeros(t: f64, grid: &RadialGrid) -> Self {
        Self {
            t,
            u: vec![0.0; grid.len()],
            u_t: vec![0.0; grid.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.u_t).all(|x| x.is_finite())
    }

    pub fn phi(&self, dr: f64) -> Vec<f64> {
        phi_from_u(&self.u, dr)
    }

    pub fn phi_t(&self, dr: f64) -> Vec<f64> {
        phi_from_u(&self.u_t, dr)
    }

    /// `(φ_r, φ_rr)`.
    pub fn phi_derivatives(&self, dr: f64) -> (Vec<f64>, Vec<f64>) {
        even_derivatives(&self.phi(dr), dr)
    }
}
