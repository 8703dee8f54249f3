//! Successive approximation: `φ₋₁ = 0`, and `φ_k` solves the linear equation with
//! coefficient `h(φ_{k-1})`, forcing `F(∂φ_{k-1})` and data mollified at scale `2^k`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{sobolev_norms, DataPair};
use crate::error::{invalid, Result, WaveError};
use crate::estimates::{EstimateAccumulator, SobolevSink};
use crate::grid::RadialGrid;
use crate::mollifier::{mollify_pair, resolves};
use crate::solver::{
    solve_linear, CoefficientField, DifferenceSink, Forcing, Nonlinearity, SolveStatus, Trace,
    TraceRecorder,
};

/// Largest `sup |h(φ_k)|` an iterate may reach.
pub const ADMISSIBLE_H: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub k_max: usize,
    pub tol: f64,
    /// Stored trace keeps every `trace_stride`-th level.
    pub trace_stride: usize,
    /// Abort on the first iterate with `sup |h| > 1/6`.
    pub enforce_admissibility: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            k_max: 12,
            tol: 1e-8,
            trace_stride: 1,
            enforce_admissibility: true,
        }
    }
}

/// One stage of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Mollifier scale `2^k`, or `None` once it is below the grid resolution.
    pub mollifier_j: Option<u32>,
    pub e1_diff: f64,
    pub y1_diff: f64,
    pub z1_diff: f64,
    pub e2: f64,
    pub y2: f64,
    pub z2: f64,
    pub sup_h: f64,
    pub admissible: bool,
    /// `‖∇f_k‖_{H¹} + ‖g_k‖_{H¹}`.
    pub data_epsilon: f64,
    /// `‖∂φ_k(0)‖_{H¹}`
    pub data_h1: f64,
    /// `‖∂(φ_k - φ_{k-1})(0)‖_{L²}`
    pub data_diff: f64,
    /// Largest Sobolev ratio seen along the stage.
    pub sobolev: f64,
    /// Energy-type estimate of the stage divided by its data and coupling terms.
    pub c2: Option<f64>,
    /// Second-order bound of the stage divided by its right side.
    pub c3: Option<f64>,
    /// Difference bound of the stage divided by its right side.
    pub c4: Option<f64>,
}

impl IterationRecord {
    pub fn diff(&self) -> f64 {
        self.e1_diff + self.y1_diff
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub t_end: f64,
    pub nl: Nonlinearity,
    pub epsilon: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// `max_k (E₂ + Y₂ + Z₂)(φ_k) / ε`.
    pub m1_empirical: f64,
    #[serde(skip)]
    pub final_trace: Option<Arc<Trace>>,
}

/// Data for stage `k`; falls back to the unmollified pair when `ρ_{2^k}` is not resolved.
pub fn stage_data(pair: &DataPair, k: usize) -> Result<(DataPair, Option<u32>)> {
    if k >= 31 {
        return Ok((pair.clone(), None));
    }
    let j = 1u32 << k;
    if !resolves(&pair.grid, j) {
        return Ok((pair.clone(), None));
    }
    Ok((mollify_pair(pair, j)?, Some(j)))
}

pub fn run(
    pair: &DataPair,
    nl: &Nonlinearity,
    t_end: f64,
    grid: &RadialGrid,
    opts: &PicardOptions,
) -> Result<IterationReport> {
    if !(t_end > 0.0) {
        return Err(invalid("the iteration needs T > 0"));
    }
    if opts.k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    let epsilon = sobolev_norms(pair, grid)?.epsilon;
    let mut prev = Arc::new(Trace::new(grid, opts.trace_stride));
    let mut records = Vec::with_capacity(opts.k_max);
    let mut converged = false;
    let mut m1: f64 = 0.0;
    let mut prev_data: Option<DataPair> = None;
    let log_t = (2.0 + t_end).ln();
    let sqrt_t = (1.0 + t_end).sqrt();

    for k in 0..opts.k_max {
        let wrap = |e: WaveError| WaveError::Iteration {
            k,
            source: Box::new(e),
        };
        let (data, j) = stage_data(pair, k).map_err(wrap)?;
        let data_norms = sobolev_norms(&data, grid).map_err(wrap)?;
        let data_diff = match &prev_data {
            Some(p) => sobolev_norms(&data.axpy(-1.0, p).map_err(wrap)?, grid).map_err(wrap)?,
            None => data_norms,
        };
        let data_diff = data_diff.energy_data().sqrt();
        let (h, f) = if k == 0 {
            (CoefficientField::zero(), Forcing::zero())
        } else {
            (
                CoefficientField::from_iterate(prev.clone(), *nl),
                Forcing::from_iterate(prev.clone(), *nl),
            )
        };
        let mut rec = TraceRecorder::new(grid, opts.trace_stride);
        let mut diff = DifferenceSink::new(prev.clone());
        let mut est = EstimateAccumulator::new(grid, 0.25).map_err(wrap)?;
        let stride = (grid.steps_to(t_end).0 / 64).max(1);
        let mut sob = SobolevSink::new(stride);
        let out = solve_linear(
            &data,
            &h,
            &f,
            t_end,
            grid,
            &mut [&mut rec, &mut diff, &mut est, &mut sob],
        )
        .map_err(wrap)?;
        if let SolveStatus::CflViolation { t } = out.status {
            return Err(wrap(invalid(format!(
                "time step unstable at t = {t}; raise the grid coefficient bound"
            ))));
        }
        let trace = rec.into_trace();
        let sup_h = nl.h_sup(trace.sup_abs_phi);
        let admissible = sup_h <= ADMISSIBLE_H;
        if !admissible && opts.enforce_admissibility {
            return Err(WaveError::Admissibility { k, sup: sup_h });
        }
        let norms = out.norms.finalize().map_err(wrap)?;
        let d = diff
            .accumulator()
            .ok_or_else(|| wrap(invalid("no levels emitted")))?
            .finalize()
            .map_err(wrap)?;
        if epsilon > 0.0 {
            m1 = m1.max((norms.e2 + norms.y2 + norms.z2) / epsilon);
        }
        let er = est.report().map_err(wrap)?;
        let frac = |a: f64, b: f64| (b > 0.0).then(|| a / b);
        let c2 = frac(
            er.sup_energy + norms.y1.powi(2) + norms.z1.powi(2),
            er.rhs_data
                + (1.0 + t_end).powf(0.25) * norms.y1 * er.forcing_weighted_sq.sqrt()
                + sqrt_t * norms.y1.powi(2) * (out.sup_h + out.sup_weighted_dh),
        );
        let (c3, c4) = match records.last() {
            None => (None, None),
            Some(p) => {
                let p: &IterationRecord = p;
                let c3 = frac(
                    norms.e2 + norms.y2 + norms.z2,
                    data_norms.h1_of_gradient()
                        + p.data_h1.powi(2)
                        + p.e2 * (norms.z2 + p.z2) * log_t,
                );
                let pp_e2 = if records.len() >= 2 {
                    records[records.len() - 2].e2
                } else {
                    0.0
                };
                let c4 = frac(
                    d.e1 + d.y1 + d.z1,
                    data_diff + (p.e2 + pp_e2 + p.y2) * sqrt_t * (p.e1_diff + p.y1_diff + d.y1),
                );
                (c3, c4)
            }
        };
        let record = IterationRecord {
            k,
            mollifier_j: j,
            e1_diff: d.e1,
            y1_diff: d.y1,
            z1_diff: d.z1,
            e2: norms.e2,
            y2: norms.y2,
            z2: norms.z2,
            sup_h,
            admissible,
            data_epsilon: data_norms.epsilon,
            data_h1: data_norms.h1_of_gradient(),
            data_diff,
            sobolev: sob.report.c_s(),
            c2,
            c3,
            c4,
        };
        records.push(record);
        prev_data = Some(data);
        prev = Arc::new(trace);
        if record.diff() < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(IterationReport {
        t_end,
        nl: *nl,
        epsilon,
        records,
        converged,
        m1_empirical: m1,
        final_trace: Some(prev),
    })
}

/// `(e1_diff_k + y1_diff_k) / (e1_diff_{k-1} + y1_diff_{k-1})` for `k ≥ 1`; `None` where the
/// denominator vanishes.
pub fn contraction_ratios(report: &IterationReport) -> Result<Vec<Option<f64>>> {
    ratios_of(&report.records)
}

pub(crate) fn ratios_of(records: &[IterationRecord]) -> Result<Vec<Option<f64>>> {
    if records.len() < 3 {
        return Err(invalid(format!(
            "need at least 3 records, got {}",
            records.len()
        )));
    }
    Ok(records
        .windows(2)
        .map(|w| {
            let den = w[0].diff();
            if den == 0.0 {
                None
            } else {
                Some(w[1].diff() / den)
            }
        })
        .collect())
}

/// The smallness condition `C₄ · 2 M₁ ε (1 + T)^{1/2} ≤ 1/4`.
pub fn contraction_condition(c4: f64, m1: f64, epsilon: f64, t_end: f64) -> (f64, bool) {
    let v = c4 * 2.0 * m1 * epsilon * (1.0 + t_end).sqrt();
    (v, v <= 0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{profile, ProfileParams};
    use crate::grid::build_grid;
    use crate::solver::HKind;

    fn record(k: usize, d: f64) -> IterationRecord {
        IterationRecord {
            k,
            mollifier_j: None,
            e1_diff: d,
            y1_diff: 0.0,
            z1_diff: 0.0,
            e2: 0.0,
            y2: 0.0,
            z2: 0.0,
            sup_h: 0.0,
            admissible: true,
            data_epsilon: 0.0,
            data_h1: 0.0,
            data_diff: 0.0,
            sobolev: 0.0,
            c2: None,
            c3: None,
            c4: None,
        }
    }

    #[test]
    fn geometric_ratios() {
        let recs = [record(0, 1.0), record(1, 1.0 / 3.0), record(2, 1.0 / 9.0)];
        let r = ratios_of(&recs).unwrap();
        assert!((r[0].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((r[1].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let r = ratios_of(&[record(0, 0.0), record(1, 1.0), record(2, 4.0)]).unwrap();
        assert_eq!(r[0], None);
        assert_eq!(r[1], Some(4.0));
        assert!(ratios_of(&recs[..2]).is_err());
    }

    #[test]
    fn free_iteration_only_sees_mollification() {
        let g = build_grid(8.0, 128, 0.9, 1.0 / 6.0).unwrap();
        let pair = profile(
            "gaussian",
            ProfileParams {
                amplitude: 0.01,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let opts = PicardOptions {
            k_max: 6,
            ..Default::default()
        };
        let rep = run(&pair, &Nonlinearity::free(), 0.5, &g, &opts).unwrap();
        // ρ_{2^k} is resolved for k ≤ 1 on this mesh, so stage 3 repeats stage 2 exactly
        assert_eq!(rep.records[1].mollifier_j, Some(2));
        assert_eq!(rep.records[2].mollifier_j, None);
        assert!(rep.records[2].diff() > 0.0);
        assert_eq!(rep.records[3].diff(), 0.0);
        assert!(rep.converged);
        assert_eq!(rep.records.len(), 4);
    }

    #[test]
    fn small_data_contracts() {
        let g = build_grid(8.0, 256, 0.9, 1.0 / 6.0).unwrap();
        let pair = profile("gaussian", ProfileParams::default(), &g).unwrap();
        let pair = crate::data::scale_to_epsilon(&pair, &g, 0.01).unwrap();
        let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
        let rep = run(
            &pair,
            &nl,
            1.0,
            &g,
            &PicardOptions {
                k_max: 8,
                ..Default::default()
            },
        )
        .unwrap();
        let ratios = contraction_ratios(&rep).unwrap();
        for r in ratios.iter().skip(1).flatten() {
            assert!(*r <= 0.5, "{ratios:?}");
        }
        assert!(rep.records.iter().all(|r| r.admissible));
        assert!(rep.m1_empirical > 0.0);
    }

    #[test]
    fn admissibility_failure_is_reported() {
        let g = build_grid(8.0, 128, 0.9, 0.5).unwrap();
        let pair = profile("gaussian", ProfileParams::default(), &g).unwrap();
        let nl = Nonlinearity::new(0.0, 0.0, HKind::Linear, 1.0);
        let r = run(&pair, &nl, 0.5, &g, &PicardOptions::default());
        assert!(matches!(r, Err(WaveError::Admissibility { k: 0, .. })));
    }
}
