//! Streaming energy norms `E₁, E₂` and weighted space-time norms `Y₁, Y₂, Z₁, Z₂`.
//!
//! With the `4π r² dr` measure the weights `r^{-5/4}` and `r^{-1/4}` become
//! `r^{-1/2}` and `r^{3/2}` in the radial integrals; both are handled by exact
//! cell moments against piecewise-linear node factors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WaveError};
use crate::grid::{FieldSnapshot, RadialGrid};
use crate::level::{LevelFields, LevelSink};

const N_INT: usize = 8;
const N_SUP: usize = 5;

/// Which parts of the accumulator are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    First,
    Second,
}

/// Node weights for the two radial weights and the `⟨r⟩^{-1/2}` factor.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WeightSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bracket: Vec<f64>,
}

impl WeightSet {
    /// `4π ∫ r^{p_lo}`, `4π ∫ r^{p_hi}` weights and `⟨r⟩^{-q}` at the nodes.
    pub fn new(grid: &RadialGrid, p_lo: f64, p_hi: f64, q: f64) -> Self {
        let scale = |w: Vec<f64>| w.into_iter().map(|x| 4.0 * PI * x).collect::<Vec<_>>();
        Self {
            lo: scale(grid.moment_weights(p_lo)),
            hi: scale(grid.moment_weights(p_hi)),
            bracket: grid
                .nodes()
                .iter()
                .map(|r| (1.0 + r * r).powf(-0.5 * q))
                .collect(),
        }
    }
}

/// Mergeable accumulator over a time slab.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAccumulator {
    grid: RadialGrid,
    order: NormOrder,
    weights: WeightSet,
    levels: usize,
    t_first: f64,
    t_last: f64,
    first: [f64; N_INT],
    last: [f64; N_INT],
    integral: [f64; N_INT],
    sup: [f64; N_SUP],
}

impl NormAccumulator {
    pub fn new(grid: &RadialGrid) -> Self {
        Self::with_order(grid, NormOrder::Second)
    }

    pub fn with_order(grid: &RadialGrid, order: NormOrder) -> Self {
        Self {
            grid: *grid,
            order,
            weights: WeightSet::new(grid, -0.5, 1.5, 1.0),
            levels: 0,
            t_first: 0.0,
            t_last: 0.0,
            first: [0.0; N_INT],
            last: [0.0; N_INT],
            integral: [0.0; N_INT],
            sup: [0.0; N_SUP],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn t_first(&self) -> f64 {
        self.t_first
    }

    pub fn t_last(&self) -> f64 {
        self.t_last
    }

    /// Elapsed time covered by the accumulated levels.
    pub fn elapsed(&self) -> f64 {
        if self.levels == 0 {
            0.0
        } else {
            self.t_last - self.t_first
        }
    }

    fn level_densities(&self, lv: &LevelFields) -> [f64; N_INT] {
        let w = &self.weights;
        let mut q = [0.0; N_INT];
        let second = self.order == NormOrder::Second && lv.second_order;
        let dd = if second {
            Some(lv.second_grad_sq())
        } else {
            None
        };
        for i in 0..lv.phi.len() {
            let p2 = lv.phi[i] * lv.phi[i];
            let g2 = lv.phi_t[i] * lv.phi_t[i] + lv.phi_r[i] * lv.phi_r[i];
            let b = w.bracket[i];
            q[0] += w.lo[i] * p2;
            q[1] += w.hi[i] * g2;
            q[2] += w.lo[i] * b * p2;
            q[3] += w.hi[i] * b * g2;
            if let Some(dd) = &dd {
                q[4] += w.lo[i] * g2;
                q[5] += w.hi[i] * dd[i];
                q[6] += w.lo[i] * b * g2;
                q[7] += w.hi[i] * b * dd[i];
            }
        }
        q
    }

    fn level_sups(&self, lv: &LevelFields) -> [f64; N_SUP] {
        level_sups(lv, self.order)
    }

    /// Adds one level; levels must arrive in increasing time.
    pub fn accumulate_level(&mut self, lv: &LevelFields) -> Result<()> {
        if lv.grid != self.grid {
            return Err(invalid("level grid differs from accumulator grid"));
        }
        if self.levels > 0 && !(lv.t > self.t_last) {
            return Err(WaveError::Sequencing {
                last: self.t_last,
                got: lv.t,
            });
        }
        let q = self.level_densities(lv);
        let s = self.level_sups(lv);
        if self.levels == 0 {
            self.first = q;
            self.t_first = lv.t;
        } else {
            let half = 0.5 * (lv.t - self.t_last);
            for k in 0..N_INT {
                self.integral[k] += half * (self.last[k] + q[k]);
            }
        }
        for k in 0..N_SUP {
            self.sup[k] = self.sup[k].max(s[k]);
        }
        self.last = q;
        self.t_last = lv.t;
        self.levels += 1;
        Ok(())
    }

    /// Combines with the accumulator of the following time slab. A slab that starts
    /// at this slab's last time shares that level; otherwise the gap is bridged by
    /// the trapezoid rule.
    pub fn merge(&self, next: &NormAccumulator) -> Result<NormAccumulator> {
        // segments may fit slightly different time steps to their own spans
        if next.grid.nr() != self.grid.nr()
            || next.grid.r_max() != self.grid.r_max()
            || next.order != self.order
        {
            return Err(invalid("cannot merge accumulators over different grids"));
        }
        if self.levels == 0 {
            return Ok(next.clone());
        }
        if next.levels == 0 {
            return Ok(self.clone());
        }
        if next.t_first < self.t_last {
            return Err(WaveError::Sequencing {
                last: self.t_last,
                got: next.t_first,
            });
        }
        let mut out = self.clone();
        let gap = 0.5 * (next.t_first - self.t_last);
        for k in 0..N_INT {
            out.integral[k] += next.integral[k] + gap * (self.last[k] + next.first[k]);
        }
        for k in 0..N_SUP {
            out.sup[k] = out.sup[k].max(next.sup[k]);
        }
        out.last = next.last;
        out.t_last = next.t_last;
        out.levels += next.levels - usize::from(next.t_first == self.t_last);
        Ok(out)
    }

    pub fn raw(&self) -> RawIntegrals {
        let i = self.integral;
        RawIntegrals {
            i1: i[0],
            i2: i[1],
            j1: i[2],
            j2: i[3],
            i1_d: i[4],
            i2_d: i[5],
            j1_d: i[6],
            j2_d: i[7],
            sup_grad: self.sup[0],
            sup_phi_t: self.sup[1],
            sup_hessian: self.sup[2],
            sup_grad_phi_t: self.sup[3],
            sup_phi_tt: self.sup[4],
        }
    }

    pub fn finalize(&self) -> Result<NormReport> {
        NormReport::from_raw(&self.raw(), self.elapsed())
    }
}

impl LevelSink for NormAccumulator {
    fn accept(&mut self, level: &LevelFields) -> Result<()> {
        self.accumulate_level(level)
    }
}

fn level_sups(lv: &LevelFields, order: NormOrder) -> [f64; N_SUP] {
    let g = &lv.grid;
    let mut s = [g.l2(&lv.phi_r), g.l2(&lv.phi_t), 0.0, 0.0, 0.0];
    if order == NormOrder::Second && lv.second_order {
        let hs: Vec<f64> = lv
            .hessian_sq()
            .iter()
            .enumerate()
            .map(|(i, h)| g.r(i).powi(2) * h)
            .collect();
        s[2] = (4.0 * PI * g.trapezoid(&hs)).sqrt();
        s[3] = g.l2(&lv.phi_tr);
        s[4] = g.l2(&lv.phi_tt);
    }
    s
}

/// Unprefixed space-time integrals and energy sups.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub j1: f64,
    pub j2: f64,
    pub i1_d: f64,
    pub i2_d: f64,
    pub j1_d: f64,
    pub j2_d: f64,
    pub sup_grad: f64,
    pub sup_phi_t: f64,
    pub sup_hessian: f64,
    pub sup_grad_phi_t: f64,
    pub sup_phi_tt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    #[serde(rename = "Y1")]
    pub y1: f64,
    #[serde(rename = "Y2")]
    pub y2: f64,
    #[serde(rename = "Z1")]
    pub z1: f64,
    #[serde(rename = "Z2")]
    pub z2: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "J1")]
    pub j1: f64,
    #[serde(rename = "J2")]
    pub j2: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub raw: RawIntegrals,
}

impl NormReport {
    pub fn from_raw(raw: &RawIntegrals, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(invalid("norms need an elapsed time T > 0"));
        }
        let py = (1.0 + t).powf(-0.5);
        let pz = 1.0 / (2.0 + t).ln();
        let y1_sq = py * (raw.i1 + raw.i2);
        let z1_sq = pz * (raw.j1 + raw.j2);
        let y1d_sq = py * (raw.i1_d + raw.i2_d);
        let z1d_sq = pz * (raw.j1_d + raw.j2_d);
        let e1 = raw.sup_grad + raw.sup_phi_t;
        let e2 = e1 + raw.sup_hessian + 2.0 * raw.sup_grad_phi_t + raw.sup_phi_tt;
        Ok(Self {
            e1,
            e2,
            y1: y1_sq.sqrt(),
            y2: (y1_sq + y1d_sq).sqrt(),
            z1: z1_sq.sqrt(),
            z2: (z1_sq + z1d_sq).sqrt(),
            i1: raw.i1,
            i2: raw.i2,
            j1: raw.j1,
            j2: raw.j2,
            t,
            raw: *raw,
        })
    }

    /// `sqrt((1+T)^{1/2} / log(2+T))`, the factor with `Z₁ ≤ factor · Y₁`.
    pub fn z_over_y_factor(&self) -> f64 {
        ((1.0 + self.t).sqrt() / (2.0 + self.t).ln()).sqrt()
    }
}

/// Instantaneous energy candidate of a free-equation snapshot.
///
/// Order 1 gives `‖∇φ‖ + ‖φ_t‖`; order 2 adds `‖∇²φ‖ + 2‖∇φ_t‖ + ‖φ_tt‖`
/// with `φ_tt = Δφ`.
pub fn energy(snap: &FieldSnapshot, grid: &RadialGrid, order: u8) -> Result<f64> {
    let lv = LevelFields::free(grid, snap)?;
    level_energy(&lv, order)
}

/// [`energy`] for a level whose `φ_tt` already accounts for `h` and `F`.
pub fn level_energy(lv: &LevelFields, order: u8) -> Result<f64> {
    let s = level_sups(lv, NormOrder::Second);
    match order {
        1 => Ok(s[0] + s[1]),
        2 => Ok(s[0] + s[1] + s[2] + 2.0 * s[3] + s[4]),
        _ => Err(invalid(format!("energy order must be 1 or 2, got {order}"))),
    }
}

/// `‖φ_t‖² + ‖∇φ‖²`.
pub fn quadratic_energy(snap: &FieldSnapshot, grid: &RadialGrid) -> Result<f64> {
    Ok(LevelFields::free(grid, snap)?.quadratic_energy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::quadrature::tanh_sinh;
    use approx::assert_relative_eq;

    fn static_level(g: &RadialGrid, t: f64, amp: f64) -> LevelFields {
        let phi: Vec<f64> = g.nodes().iter().map(|r| amp * (-r * r).exp()).collect();
        let z = vec![0.0; g.len()];
        let snap = FieldSnapshot::from_phi(t, &phi, &z, g).unwrap();
        LevelFields::free(g, &snap).unwrap()
    }

    #[test]
    fn finalize_arithmetic() {
        let raw = RawIntegrals {
            i1: 1.0,
            i2: 2.0,
            j1: 2.0,
            j2: 1.0,
            ..Default::default()
        };
        let rep = NormReport::from_raw(&raw, 1.0).unwrap();
        assert_relative_eq!(rep.y1 * rep.y1, 3.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(rep.y1 * rep.y1, 2.12132, max_relative = 1e-5);
        let rep = NormReport::from_raw(&raw, std::f64::consts::E - 2.0).unwrap();
        assert_relative_eq!(rep.z1 * rep.z1, 3.0, max_relative = 1e-14);
        assert!(NormReport::from_raw(&raw, 0.0).is_err());
    }

    #[test]
    fn zero_levels_give_zero() {
        let g = build_grid(4.0, 100, 0.5, 0.0).unwrap();
        let mut acc = NormAccumulator::new(&g);
        for n in 0..4 {
            let snap = FieldSnapshot::zeros(n as f64 * 0.1, &g);
            acc.accept(&LevelFields::free(&g, &snap).unwrap()).unwrap();
        }
        let rep = acc.finalize().unwrap();
        assert_eq!(rep.e2, 0.0);
        assert_eq!(rep.y2, 0.0);
        assert_eq!(rep.z2, 0.0);
    }

    #[test]
    fn out_of_order_is_rejected() {
        let g = build_grid(4.0, 100, 0.5, 0.0).unwrap();
        let mut acc = NormAccumulator::new(&g);
        acc.accept(&static_level(&g, 0.5, 1.0)).unwrap();
        assert!(matches!(
            acc.accept(&static_level(&g, 0.5, 1.0)),
            Err(WaveError::Sequencing { .. })
        ));
    }

    #[test]
    fn static_gaussian_matches_oracle() {
        let g = build_grid(8.0, 1600, 0.5, 0.0).unwrap();
        let mut acc = NormAccumulator::new(&g);
        for n in 0..=10 {
            acc.accept(&static_level(&g, n as f64 * 0.1, 1.0)).unwrap();
        }
        let rep = acc.finalize().unwrap();
        // I₁ = 4π ∫ r^{-1/2} e^{-2r²} dr,  I₂ = 4π ∫ r^{3/2} · 4r² e^{-2r²} dr over T = 1
        let four_pi = 4.0 * PI;
        let i1 = four_pi
            * tanh_sinh(0.0, 12.0, 1e-14, |r, _, _| {
                r.powf(-0.5) * (-2.0 * r * r).exp()
            });
        let i2 = four_pi
            * tanh_sinh(0.0, 12.0, 1e-14, |r, _, _| {
                4.0 * r.powf(3.5) * (-2.0 * r * r).exp()
            });
        let j1 = four_pi
            * tanh_sinh(0.0, 12.0, 1e-14, |r, _, _| {
                r.powf(-0.5) * (1.0 + r * r).powf(-0.5) * (-2.0 * r * r).exp()
            });
        assert_relative_eq!(rep.i1, i1, max_relative = 1e-4);
        assert_relative_eq!(rep.i2, i2, max_relative = 1e-3);
        assert_relative_eq!(rep.j1, j1, max_relative = 1e-4);
        assert!(rep.j1 <= rep.i1 && rep.j2 <= rep.i2);
        let y1 = ((i1 + i2) / 2f64.sqrt()).sqrt();
        assert_relative_eq!(rep.y1, y1, max_relative = 1e-2);
        assert_relative_eq!(rep.e1, 2.4303, max_relative = 1e-3);
        assert!(rep.z1 <= rep.y1 * rep.z_over_y_factor());
    }

    #[test]
    fn merge_equals_concatenation() {
        let g = build_grid(6.0, 300, 0.5, 0.0).unwrap();
        let levels: Vec<LevelFields> = (0..9)
            .map(|n| static_level(&g, 0.1 * n as f64, 1.0 + 0.1 * n as f64))
            .collect();
        let mut whole = NormAccumulator::new(&g);
        levels.iter().for_each(|l| whole.accept(l).unwrap());
        // shared boundary level
        let mut a = NormAccumulator::new(&g);
        let mut b = NormAccumulator::new(&g);
        levels[..5].iter().for_each(|l| a.accept(l).unwrap());
        levels[4..].iter().for_each(|l| b.accept(l).unwrap());
        let m = a.merge(&b).unwrap();
        // disjoint slabs
        let mut c = NormAccumulator::new(&g);
        let mut d = NormAccumulator::new(&g);
        levels[..4].iter().for_each(|l| c.accept(l).unwrap());
        levels[4..].iter().for_each(|l| d.accept(l).unwrap());
        let m2 = c.merge(&d).unwrap();
        for m in [&m, &m2] {
            let (x, y) = (m.raw(), whole.raw());
            assert_relative_eq!(x.i1, y.i1, max_relative = 1e-12);
            assert_relative_eq!(x.j2_d, y.j2_d, max_relative = 1e-12);
            assert_eq!(x.sup_grad, y.sup_grad);
            assert_eq!(m.levels(), whole.levels());
        }
    }

    #[test]
    fn energy_of_static_gaussian() {
        let g = build_grid(8.0, 1600, 0.5, 0.0).unwrap();
        let lv = static_level(&g, 0.0, 1.0);
        let snap = FieldSnapshot::from_phi(0.0, &lv.phi, &lv.phi_t, &g).unwrap();
        assert_relative_eq!(energy(&snap, &g, 1).unwrap(), 2.4303, max_relative = 1e-4);
        assert_eq!(energy(&FieldSnapshot::zeros(0.0, &g), &g, 2).unwrap(), 0.0);
        assert!(energy(&snap, &g, 3).is_err());
    }
}
