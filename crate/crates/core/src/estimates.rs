//! Empirical sides of the weighted space-time estimate, the energy inequality,
//! radial Sobolev ratios, and convolution bounds for the mollifier family.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{profile, scale_to_epsilon, DataPair, ProfileParams};
use crate::error::{invalid, Result};
use crate::grid::{GridPolicy, RadialGrid};
use crate::io::fmt_f64;
use crate::level::{LevelFields, LevelSink};
use crate::mollifier::mollifier_kernel;
use crate::norms::level_energy;
use crate::quadrature::{tanh_sinh, tanh_sinh_split};
use crate::solver::{solve_linear, CoefficientField, Forcing};

const N_TERMS: usize = 12;

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(invalid("mu must lie in (0, 1/2)"));
    }
    Ok(())
}

/// Streams the estimate integrands over the levels of a linear run.
///
/// Radial weights include the `4π r²` measure: `r^{-1+2μ}` on `φ²`, `r^{1+2μ}` on
/// `|∂φ|²`, and `⟨r⟩^{-2μ}` in the Z-type parts.
#[derive(Debug, Clone)]
pub struct EstimateAccumulator {
    mu: f64,
    grid: RadialGrid,
    w_lo: Vec<f64>,
    w_hi: Vec<f64>,
    w_2: Vec<f64>,
    w_2mu: Vec<f64>,
    w_52: Vec<f64>,
    bracket: Vec<f64>,
    levels: usize,
    t_first: f64,
    t_last: f64,
    last: [f64; N_TERMS],
    integral: [f64; N_TERMS],
    energy_first: f64,
    energy_last: f64,
    energy_sup: f64,
}

impl EstimateAccumulator {
    pub fn new(grid: &RadialGrid, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let w = |p: f64| {
            grid.moment_weights(p)
                .into_iter()
                .map(|x| 4.0 * PI * x)
                .collect::<Vec<_>>()
        };
        Ok(Self {
            mu,
            grid: *grid,
            w_lo: w(-1.0 + 2.0 * mu),
            w_hi: w(1.0 + 2.0 * mu),
            w_2: w(2.0),
            w_2mu: w(2.0 * mu),
            w_52: w(2.5),
            bracket: grid
                .nodes()
                .iter()
                .map(|r| (1.0 + r * r).powf(-mu))
                .collect(),
            levels: 0,
            t_first: 0.0,
            t_last: 0.0,
            last: [0.0; N_TERMS],
            integral: [0.0; N_TERMS],
            energy_first: 0.0,
            energy_last: 0.0,
            energy_sup: 0.0,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn densities(&self, lv: &LevelFields) -> [f64; N_TERMS] {
        let mut q = [0.0; N_TERMS];
        for i in 0..lv.phi.len() {
            let p = lv.phi[i].abs();
            let g2 = lv.phi_t[i].powi(2) + lv.phi_r[i].powi(2);
            let g = g2.sqrt();
            let f = lv.forcing[i].abs();
            let h = lv.h[i].abs();
            let dh = lv.h_t[i].hypot(lv.h_r[i]);
            let b = self.bracket[i];
            q[0] += self.w_lo[i] * p * p;
            q[1] += self.w_hi[i] * g2;
            q[2] += self.w_lo[i] * b * p * p;
            q[3] += self.w_hi[i] * b * g2;
            q[4] += self.w_2[i] * g * f;
            q[5] += self.w_hi[i] * b * p * f;
            q[6] += self.w_2[i] * dh * g2;
            q[7] += self.w_hi[i] * b * dh * p * g;
            q[8] += self.w_hi[i] * b * h * g2;
            q[9] += self.w_2mu[i] * b * h * p * g;
            q[10] += self.w_2[i] * (lv.phi_t[i] * lv.forcing[i]).abs();
            q[11] += self.w_52[i] * f * f;
        }
        q
    }

    pub fn report(&self) -> Result<EstimateReport> {
        if self.levels == 0 {
            return Err(invalid("no levels accumulated"));
        }
        let t = self.t_last - self.t_first;
        if !(t > 0.0) {
            return Err(invalid("estimate needs an elapsed time T > 0"));
        }
        let i = &self.integral;
        let lhs_y = (1.0 + t).powf(-2.0 * self.mu) * (i[0] + i[1]);
        let lhs_z = (i[2] + i[3]) / (2.0 + t).ln();
        let terms = [i[4], i[5], i[6], i[7], i[8], i[9]];
        let rhs_interaction: f64 = terms.iter().sum();
        let rhs_data = self.energy_first;
        let rhs = rhs_data + rhs_interaction;
        let ratio = if rhs > 0.0 {
            Some((lhs_y + lhs_z) / rhs)
        } else {
            None
        };
        let energy_rhs = rhs_data + i[10] + i[6];
        let energy = EnergyInequality {
            lhs: self.energy_last,
            rhs_data,
            rhs_forcing: i[10],
            rhs_coefficient: i[6],
            implied_c: if energy_rhs > 0.0 {
                Some(self.energy_last / energy_rhs)
            } else {
                None
            },
        };
        Ok(EstimateReport {
            mu: self.mu,
            t,
            lhs_y,
            lhs_z,
            rhs_data,
            rhs_interaction,
            ratio,
            terms,
            energy,
            sup_energy: self.energy_sup,
            forcing_weighted_sq: i[11],
        })
    }
}

impl LevelSink for EstimateAccumulator {
    fn accept(&mut self, lv: &LevelFields) -> Result<()> {
        if lv.grid.nr() != self.grid.nr() || lv.grid.r_max() != self.grid.r_max() {
            return Err(invalid("level grid differs from accumulator grid"));
        }
        if self.levels > 0 && !(lv.t > self.t_last) {
            return Err(crate::error::WaveError::Sequencing {
                last: self.t_last,
                got: lv.t,
            });
        }
        let q = self.densities(lv);
        let e = lv.quadratic_energy();
        if self.levels == 0 {
            self.t_first = lv.t;
            self.energy_first = e;
        } else {
            let half = 0.5 * (lv.t - self.t_last);
            for k in 0..N_TERMS {
                self.integral[k] += half * (self.last[k] + q[k]);
            }
        }
        self.energy_last = e;
        self.energy_sup = self.energy_sup.max(e);
        self.last = q;
        self.t_last = lv.t;
        self.levels += 1;
        Ok(())
    }
}

/// `‖∂φ(T)‖² ≤ C(‖∂φ(0)‖² + ∫∫ |φ_t F| + ∫∫ |∂h| |∂φ|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyInequality {
    pub lhs: f64,
    pub rhs_data: f64,
    pub rhs_forcing: f64,
    pub rhs_coefficient: f64,
    pub implied_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mu: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub lhs_y: f64,
    pub lhs_z: f64,
    /// `‖∇f‖² + ‖g‖²`
    pub rhs_data: f64,
    pub rhs_interaction: f64,
    /// `None` when both right-hand parts vanish.
    pub ratio: Option<f64>,
    /// The six interaction integrals in order: `|∂φ||F|`, `|φ||F|`, `|∂h||∂φ|²`,
    /// `|∂h||φ∂φ|`, `|h||∂φ|²`, `|h||φ∂φ|`, each with its weight.
    pub terms: [f64; 6],
    pub energy: EnergyInequality,
    /// `sup_t ‖∂φ(t)‖²`
    pub sup_energy: f64,
    /// `‖r^{1/4} F‖²` over the slab.
    pub forcing_weighted_sq: f64,
}

/// Solves the linear problem and evaluates both sides of the space-time estimate.
pub fn kss_sides(
    pair: &DataPair,
    h: &CoefficientField,
    forcing: &Forcing,
    mu: f64,
    t_end: f64,
    grid: &RadialGrid,
) -> Result<EstimateReport> {
    let mut acc = EstimateAccumulator::new(grid, mu)?;
    solve_linear(pair, h, forcing, t_end, grid, &mut [&mut acc])?;
    acc.report()
}

/// Energy inequality alone; same run as [`kss_sides`].
pub fn energy_inequality_check(
    pair: &DataPair,
    h: &CoefficientField,
    forcing: &Forcing,
    t_end: f64,
    grid: &RadialGrid,
) -> Result<EnergyInequality> {
    Ok(kss_sides(pair, h, forcing, 0.25, t_end, grid)?.energy)
}

/// One instance of the estimate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateInstance {
    pub id: usize,
    pub mu: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub eps: f64,
    /// `h = c e^{-r²}`.
    pub h_amplitude: f64,
    pub g_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub instance: EstimateInstance,
    pub report: EstimateReport,
}

/// Instances spanning `eps × T × h × g` with Gaussian data and `F = 0`.
pub fn grid_of_instances(
    eps: &[f64],
    ts: &[f64],
    hs: &[f64],
    gs: &[f64],
    mu: f64,
) -> Vec<EstimateInstance> {
    let mut out = Vec::new();
    for &g in gs {
        for &h in hs {
            for &e in eps {
                for &t in ts {
                    out.push(EstimateInstance {
                        id: out.len(),
                        mu,
                        t_end: t,
                        eps: e,
                        h_amplitude: h,
                        g_amplitude: g,
                    });
                }
            }
        }
    }
    out
}

pub fn run_instance(inst: &EstimateInstance, policy: &GridPolicy) -> Result<EstimateRow> {
    let grid = policy.grid_for(inst.t_end)?;
    let params = ProfileParams {
        g_amplitude: inst.g_amplitude,
        ..Default::default()
    };
    let pair = scale_to_epsilon(&profile("gaussian", params, &grid)?, &grid, inst.eps)?;
    let h = if inst.h_amplitude == 0.0 {
        CoefficientField::zero()
    } else {
        CoefficientField::gaussian(inst.h_amplitude)
    };
    let report = kss_sides(&pair, &h, &Forcing::zero(), inst.mu, inst.t_end, &grid)?;
    Ok(EstimateRow {
        instance: *inst,
        report,
    })
}

/// Runs every instance; rows keep the input order.
pub fn estimate_sweep(
    instances: &[EstimateInstance],
    policy: &GridPolicy,
) -> Result<Vec<EstimateRow>> {
    instances
        .par_iter()
        .map(|i| run_instance(i, policy))
        .collect()
}

/// `(max_T M(T) - min_T M(T)) / max_T M(T)` where `M(T)` is the largest ratio among rows at `T`.
pub fn uniformity_across_t(rows: &[EstimateRow]) -> Option<f64> {
    let mut ts: Vec<f64> = rows.iter().map(|r| r.instance.t_end).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let maxima: Vec<f64> = ts
        .iter()
        .map(|t| {
            rows.iter()
                .filter(|r| r.instance.t_end == *t)
                .filter_map(|r| r.report.ratio)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let hi = maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) || !lo.is_finite() {
        return None;
    }
    Some((hi - lo) / hi)
}

pub fn write_sweep_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "instance_id",
        "mu",
        "T",
        "eps",
        "lhs_y",
        "lhs_z",
        "rhs_data",
        "rhs_interaction",
        "ratio",
    ])?;
    for row in rows {
        let r = &row.report;
        w.write_record([
            row.instance.id.to_string(),
            fmt_f64(row.instance.mu),
            fmt_f64(row.instance.t_end),
            fmt_f64(row.instance.eps),
            fmt_f64(r.lhs_y),
            fmt_f64(r.lhs_z),
            fmt_f64(r.rhs_data),
            fmt_f64(r.rhs_interaction),
            r.ratio.map_or_else(String::new, fmt_f64),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Empirical Sobolev-type ratios of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevRecord {
    pub t: f64,
    /// `sup r^{1/2} |φ| / ‖∇φ‖`
    pub radial_decay: Option<f64>,
    /// `sup |φ| / E₂`
    pub sup_bound: Option<f64>,
    /// `sup r^{1/2} ⟨r⟩^{1/2} |∂φ| / E₂`
    pub derivative_decay: Option<f64>,
    /// `‖φ/r‖ / ‖∇φ‖`, at most 2.
    pub hardy: Option<f64>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub records: Vec<SobolevRecord>,
    pub max_radial_decay: f64,
    pub max_sup_bound: f64,
    pub max_derivative_decay: f64,
    pub max_hardy: f64,
    pub skipped: usize,
}

impl SobolevReport {
    /// Largest of the three Sobolev ratios, the stand-in for `C_S`.
    pub fn c_s(&self) -> f64 {
        self.max_radial_decay
            .max(self.max_sup_bound)
            .max(self.max_derivative_decay)
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub fn sobolev_record(lv: &LevelFields) -> Result<SobolevRecord> {
    let g = &lv.grid;
    let grad = g.l2(&lv.phi_r);
    let e2 = level_energy(lv, 2)?;
    let mut a: f64 = 0.0;
    let mut b: f64 = 0.0;
    let mut c: f64 = 0.0;
    for i in 0..lv.phi.len() {
        let r = g.r(i);
        a = a.max(r.sqrt() * lv.phi[i].abs());
        b = b.max(lv.phi[i].abs());
        c = c.max((r * (1.0 + r * r).sqrt()).sqrt() * lv.phi_t[i].hypot(lv.phi_r[i]));
    }
    // r² (φ/r)² = φ²
    let hardy_sq = 4.0 * PI * g.trapezoid(&lv.phi.iter().map(|p| p * p).collect::<Vec<_>>());
    let rec = SobolevRecord {
        t: lv.t,
        radial_decay: ratio(a, grad),
        sup_bound: ratio(b, e2),
        derivative_decay: ratio(c, e2),
        hardy: ratio(hardy_sq.sqrt(), grad),
        skipped: !(grad > 0.0 && e2 > 0.0),
    };
    Ok(rec)
}

pub fn sobolev_checks(levels: &[LevelFields]) -> Result<SobolevReport> {
    let records: Vec<SobolevRecord> = levels.iter().map(sobolev_record).collect::<Result<_>>()?;
    let mx =
        |f: fn(&SobolevRecord) -> Option<f64>| records.iter().filter_map(f).fold(0.0, f64::max);
    Ok(SobolevReport {
        max_radial_decay: mx(|r| r.radial_decay),
        max_sup_bound: mx(|r| r.sup_bound),
        max_derivative_decay: mx(|r| r.derivative_decay),
        max_hardy: mx(|r| r.hardy),
        skipped: records.iter().filter(|r| r.skipped).count(),
        records,
    })
}

/// Running maxima of the Sobolev ratios over every `stride`-th level.
#[derive(Debug, Clone)]
pub struct SobolevSink {
    stride: usize,
    seen: usize,
    pub report: SobolevReport,
}

impl SobolevSink {
    pub fn new(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            seen: 0,
            report: SobolevReport {
                records: Vec::new(),
                max_radial_decay: 0.0,
                max_sup_bound: 0.0,
                max_derivative_decay: 0.0,
                max_hardy: 0.0,
                skipped: 0,
            },
        }
    }
}

impl LevelSink for SobolevSink {
    fn accept(&mut self, lv: &LevelFields) -> Result<()> {
        if self.seen.is_multiple_of(self.stride) {
            let rec = sobolev_record(lv)?;
            let r = &mut self.report;
            r.max_radial_decay = r.max_radial_decay.max(rec.radial_decay.unwrap_or(0.0));
            r.max_sup_bound = r.max_sup_bound.max(rec.sup_bound.unwrap_or(0.0));
            r.max_derivative_decay = r
                .max_derivative_decay
                .max(rec.derivative_decay.unwrap_or(0.0));
            r.max_hardy = r.max_hardy.max(rec.hardy.unwrap_or(0.0));
            r.skipped += usize::from(rec.skipped);
            r.records.push(rec);
        }
        self.seen += 1;
        Ok(())
    }
}

/// Mean of `|x - y|^{-α}` over the sphere `|y| = s`, with `|x| = x`.
pub fn sphere_average(x: f64, s: f64, alpha: f64) -> f64 {
    if s == 0.0 {
        return x.powf(-alpha);
    }
    let (p, m) = (x + s, (x - s).abs());
    if (alpha - 2.0).abs() < 1e-14 {
        (p.ln() - m.ln()) / (2.0 * x * s)
    } else {
        let e = 2.0 - alpha;
        (p.powf(e) - m.powf(e)) / (2.0 * x * s * e)
    }
}

/// `|x|^α ∫ ρ_k(y) |x - y|^{-α} dy`.
pub fn kernel_ratio(k: u32, alpha: f64, x: f64) -> Result<f64> {
    if !(0.0..3.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 3), got {alpha}")));
    }
    if !(x > 0.0) {
        return Err(invalid("kernel ratio needs |x| > 0"));
    }
    let m = mollifier_kernel(k)?;
    let rad = m.support_radius();
    let mut breaks = vec![0.0];
    if x < rad {
        breaks.push(x);
    }
    breaks.push(rad);
    let v = tanh_sinh_split(&breaks, 1e-12, |s, _, _| {
        4.0 * PI * s * s * m.value(s) * sphere_average(x, s, alpha)
    });
    Ok(x.powf(alpha) * v)
}

/// `|x|^γ ∫_0^1 |x + θ z|^{-γ} dθ` for `|x| = x`, `|z| = z`, angle `β` between them.
pub fn line_average_ratio(x: f64, z: f64, beta: f64, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if !(x > 0.0) || !(0.0..=1.0).contains(&z) {
        return Err(invalid("line average needs |x| > 0 and |z| ≤ 1"));
    }
    let c = beta.cos();
    let dist2 = |th: f64| (x * x + 2.0 * th * x * z * c + th * th * z * z).max(0.0);
    let mut breaks = vec![0.0];
    if z > 0.0 {
        let th = -x * c / z;
        if th > 0.0 && th < 1.0 {
            breaks.push(th);
        }
    }
    breaks.push(1.0);
    let v = tanh_sinh_split(&breaks, 1e-12, |th, _, _| dist2(th).powf(-0.5 * gamma));
    Ok(x.powf(gamma) * v)
}

/// Closed form of the line average when `x ⊥ z`.
pub fn orthogonal_line_average(x: f64, z: f64, gamma: f64) -> f64 {
    let top = (z / x).asinh();
    let int = tanh_sinh(0.0, top, 1e-14, |u, _, _| u.cosh().powf(1.0 - gamma));
    x.powf(1.0 - gamma) / z * int
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBound {
    pub k: u32,
    pub alpha: f64,
    pub sup_ratio: f64,
    pub sup_at: f64,
    /// `max |ratio - 1|` over samples with `|x| ≥ 10/k`.
    pub far_field_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineBound {
    pub gamma: f64,
    pub sup_ratio: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionReport {
    pub kernel: Vec<KernelBound>,
    pub line: Vec<LineBound>,
}

/// Sup constants over `x_grid` for each `(k, α)`, and line-average sups over sampled
/// `(x, z, angle)` for each `γ`.
pub fn convolution_bound_check(
    k_list: &[u32],
    alpha_list: &[f64],
    x_grid: &[f64],
    gamma_list: &[f64],
) -> Result<ConvolutionReport> {
    let pairs: Vec<(u32, f64)> = k_list
        .iter()
        .flat_map(|&k| alpha_list.iter().map(move |&a| (k, a)))
        .collect();
    let kernel = pairs
        .par_iter()
        .map(|&(k, alpha)| {
            let mut sup: f64 = 0.0;
            let mut at = f64::NAN;
            let mut far: f64 = 0.0;
            for &x in x_grid {
                let v = kernel_ratio(k, alpha, x)?;
                if v > sup {
                    sup = v;
                    at = x;
                }
                if x >= 10.0 / k as f64 {
                    far = far.max((v - 1.0).abs());
                }
            }
            Ok(KernelBound {
                k,
                alpha,
                sup_ratio: sup,
                sup_at: at,
                far_field_deviation: far,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs = crate::multiplier::log_samples(1e-3, 1e2, 41);
    let zs = [0.05, 0.25, 0.5, 0.75, 1.0];
    let betas: Vec<f64> = (0..=12).map(|i| PI * i as f64 / 12.0).collect();
    let line = gamma_list
        .iter()
        .map(|&gamma| {
            let mut sup: f64 = 0.0;
            let mut n = 0;
            for &x in &xs {
                for &z in &zs {
                    for &b in &betas {
                        sup = sup.max(line_average_ratio(x, z, b, gamma)?);
                        n += 1;
                    }
                }
            }
            Ok(LineBound {
                gamma,
                sup_ratio: sup,
                samples: n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvolutionReport { kernel, line })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, FieldSnapshot};

    #[test]
    fn mu_range() {
        let g = build_grid(4.0, 64, 0.9, 0.0).unwrap();
        assert!(EstimateAccumulator::new(&g, 0.7).is_err());
        assert!(EstimateAccumulator::new(&g, 0.0).is_err());
        assert!(EstimateAccumulator::new(&g, 0.25).is_ok());
    }

    #[test]
    fn zero_solution_has_undefined_ratio() {
        let g = build_grid(6.0, 128, 0.9, 1.0 / 6.0).unwrap();
        let rep = kss_sides(
            &DataPair::zeros(&g),
            &CoefficientField::zero(),
            &Forcing::zero(),
            0.25,
            1.0,
            &g,
        )
        .unwrap();
        assert_eq!(rep.lhs_y + rep.lhs_z, 0.0);
        assert_eq!(rep.rhs_data, 0.0);
        assert_eq!(rep.ratio, None);
    }

    #[test]
    fn free_wave_energy_equality_and_scaling() {
        let g = build_grid(16.0, 1024, 0.9, 1.0 / 6.0).unwrap();
        let pair = profile("gaussian", ProfileParams::default(), &g).unwrap();
        let a = kss_sides(
            &pair,
            &CoefficientField::zero(),
            &Forcing::zero(),
            0.25,
            5.0,
            &g,
        )
        .unwrap();
        assert_eq!(a.rhs_interaction, 0.0);
        assert!(
            (a.energy.implied_c.unwrap() - 1.0).abs() < 1e-3,
            "{:?}",
            a.energy
        );
        let b = kss_sides(
            &pair.scaled(0.05),
            &CoefficientField::zero(),
            &Forcing::zero(),
            0.25,
            5.0,
            &g,
        )
        .unwrap();
        assert!((a.ratio.unwrap() - b.ratio.unwrap()).abs() < 1e-10 * a.ratio.unwrap());
        let h = CoefficientField::gaussian(0.1);
        let c = kss_sides(&pair, &h, &Forcing::zero(), 0.25, 5.0, &g).unwrap();
        let d = kss_sides(&pair.scaled(3.0), &h, &Forcing::zero(), 0.25, 5.0, &g).unwrap();
        assert!(c.rhs_interaction > 0.0);
        assert!((c.ratio.unwrap() - d.ratio.unwrap()).abs() < 1e-10 * c.ratio.unwrap());
        assert!(c.energy.implied_c.unwrap().is_finite());
    }

    #[test]
    fn gaussian_sobolev_ratio() {
        let g = build_grid(8.0, 1600, 0.9, 0.0).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let snap = FieldSnapshot::from_phi(0.0, &phi, &vec![0.0; g.len()], &g).unwrap();
        let lv = LevelFields::free(&g, &snap).unwrap();
        let rec = sobolev_record(&lv).unwrap();
        assert!(
            (rec.radial_decay.unwrap() - 0.22659).abs() < 2e-5,
            "{rec:?}"
        );
        assert!(rec.hardy.unwrap() <= 2.0);
        let snap2 = FieldSnapshot::from_phi(
            0.0,
            &phi.iter().map(|p| 7.0 * p).collect::<Vec<_>>(),
            &vec![0.0; g.len()],
            &g,
        )
        .unwrap();
        let rec2 = sobolev_record(&LevelFields::free(&g, &snap2).unwrap()).unwrap();
        assert!((rec.radial_decay.unwrap() - rec2.radial_decay.unwrap()).abs() < 1e-14);
        let zero = sobolev_record(&LevelFields::free(&g, &FieldSnapshot::zeros(0.0, &g)).unwrap())
            .unwrap();
        assert!(zero.skipped);
        assert_eq!(zero.radial_decay, None);
    }

    #[test]
    fn sphere_average_matches_direct_quadrature() {
        for alpha in [0.5, 1.5, 2.0, 2.5] {
            let (x, s) = (1.3, 0.4);
            let direct = tanh_sinh(0.0, PI, 1e-14, |th, _, _| {
                0.5 * th.sin() * (x * x + s * s - 2.0 * x * s * th.cos()).powf(-0.5 * alpha)
            });
            assert!(
                (sphere_average(x, s, alpha) - direct).abs() < 1e-12,
                "{alpha}"
            );
        }
    }

    #[test]
    fn kernel_far_field_and_alpha_range() {
        for alpha in [0.5, 1.5, 2.5] {
            let v = kernel_ratio(4, alpha, 10.0 / 4.0).unwrap();
            assert!((v - 1.0).abs() < 0.01, "{alpha} {v}");
        }
        assert!(kernel_ratio(4, 3.0, 1.0).is_err());
        // scale covariance: the ratio depends on k|x| only
        let a = kernel_ratio(2, 1.5, 0.3).unwrap();
        let b = kernel_ratio(8, 1.5, 0.075).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_line_average_oracle() {
        for (x, z) in [(0.01, 1.0), (0.5, 0.3), (3.0, 1.0)] {
            let q = line_average_ratio(x, z, 0.5 * PI, 0.5).unwrap();
            let exact = x.sqrt() * orthogonal_line_average(x, z, 0.5);
            assert!((q - exact).abs() < 1e-11 * exact, "{x} {z}");
        }
        // antiparallel with a zero crossing stays integrable
        let q = line_average_ratio(0.5, 1.0, PI, 0.5).unwrap();
        assert!(q.is_finite() && q > 0.0);
        assert!(line_average_ratio(1.0, 1.0, 0.0, 1.0).is_err());
    }
}
