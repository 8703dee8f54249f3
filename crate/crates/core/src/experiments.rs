//! Experiment drivers: lifespan sweeps, segmented continuation, Lipschitz probes of
//! the solution map and the ledger of empirical constants.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{scale_to_epsilon, sobolev_norms, DataPair, Profile, ProfileKind, ProfileParams};
use crate::error::{invalid, Result, WaveError};
use crate::grid::{GridPolicy, RadialGrid};
use crate::mollifier::{mollify_pair, resolves};
use crate::picard::{IterationReport, ADMISSIBLE_H};
use crate::solver::{
    evolve_quasilinear, initial_snapshot, solve_quasilinear, BlowupCriterion, DifferenceSink,
    HKind, Nonlinearity, SolveOutcome, SolveStatus, TraceRecorder,
};

/// A data family resampled on whatever grid a run needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub kind: ProfileKind,
    pub params: ProfileParams,
    /// Rescale to this `‖∇f‖_{H¹} + ‖g‖_{H¹}` when set.
    pub epsilon: Option<f64>,
}

impl DataSpec {
    pub fn gaussian(epsilon: f64) -> Self {
        Self {
            kind: ProfileKind::Gaussian,
            params: ProfileParams::default(),
            epsilon: Some(epsilon),
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon: Some(epsilon),
            ..*self
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Result<DataPair> {
        let p = self.params;
        let f = Profile::new(self.kind, p.amplitude, p.center, p.width)?;
        let g = Profile::new(self.kind, p.g_amplitude, p.center, p.width)?;
        let pair = DataPair::from_profiles(f, g, grid);
        match self.epsilon {
            Some(e) => scale_to_epsilon(&pair, grid, e),
            None => Ok(pair),
        }
    }
}

/// Why a lifespan run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    NonFinite,
    CoefficientBound,
    EnergyGrowth,
    Cfl,
    /// Reached the time budget without blowing up.
    Budget,
}

impl From<BlowupCriterion> for StopCriterion {
    fn from(c: BlowupCriterion) -> Self {
        match c {
            BlowupCriterion::NonFinite => Self::NonFinite,
            BlowupCriterion::CoefficientBound => Self::CoefficientBound,
            BlowupCriterion::EnergyGrowth => Self::EnergyGrowth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanPoint {
    pub epsilon: f64,
    /// Blow-up time, or the budget when none occurred.
    pub t_star: f64,
    pub blew_up: bool,
    pub criterion: StopCriterion,
    pub nr: usize,
    pub r_max: f64,
    pub dt: f64,
}

/// Least squares of `log T_star` against `1/ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanReport {
    pub t_budget: f64,
    pub points: Vec<LifespanPoint>,
    pub fit: Option<FitResult>,
    /// Set when the fit could not be formed.
    pub fit_error: Option<String>,
    /// `T_star` nonincreasing in `ε`, budget points counted at the budget.
    pub monotone: bool,
    /// Every point blew up and `T_star` strictly increases as `ε` decreases.
    pub strictly_monotone: bool,
}

/// Fits `y = slope x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(invalid("fit needs equally many abscissae and ordinates"));
    }
    if x.len() < 3 {
        return Err(WaveError::FitUndefined(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("fit abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points: x.len(),
    })
}

/// One quasilinear run per `ε`, to blow-up or to the budget.
pub fn lifespan_sweep(
    data: &DataSpec,
    eps_list: &[f64],
    nl: &Nonlinearity,
    t_budget: f64,
    policy: &GridPolicy,
) -> Result<LifespanReport> {
    if eps_list.is_empty() {
        return Err(invalid("lifespan sweep needs at least one epsilon"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("eps_list must be strictly decreasing"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("lifespan epsilons must be positive"));
    }
    if !(t_budget > 0.0) {
        return Err(invalid("t_budget must be positive"));
    }
    let grid = policy.grid_for(t_budget + data.params.center.abs() + data.params.width)?;
    let points: Vec<LifespanPoint> = eps_list
        .par_iter()
        .map(|&eps| -> Result<LifespanPoint> {
            let pair = data.with_epsilon(eps).sample(&grid)?;
            let out = solve_quasilinear(&pair, nl, t_budget, &grid, &mut [])?;
            let (t_star, blew_up, criterion) = match out.status {
                SolveStatus::Completed => (t_budget, false, StopCriterion::Budget),
                SolveStatus::Blowup { t_star, criterion } => (t_star, true, criterion.into()),
                SolveStatus::CflViolation { t } => (t, false, StopCriterion::Cfl),
            };
            Ok(LifespanPoint {
                epsilon: eps,
                t_star,
                blew_up,
                criterion,
                nr: grid.nr(),
                r_max: grid.r_max(),
                dt: out.grid.dt(),
            })
        })
        .collect::<Result<_>>()?;
    let blown: Vec<&LifespanPoint> = points.iter().filter(|p| p.blew_up).collect();
    let x: Vec<f64> = blown.iter().map(|p| 1.0 / p.epsilon).collect();
    let y: Vec<f64> = blown.iter().map(|p| p.t_star.ln()).collect();
    let (fit, fit_error) = match least_squares(&x, &y) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let monotone = points.windows(2).all(|w| w[1].t_star >= w[0].t_star);
    let strictly_monotone =
        points.iter().all(|p| p.blew_up) && points.windows(2).all(|w| w[1].t_star > w[0].t_star);
    Ok(LifespanReport {
        t_budget,
        points,
        fit,
        fit_error,
        monotone,
        strictly_monotone,
    })
}

pub fn write_lifespan_csv<W: std::io::Write>(report: &LifespanReport, out: W) -> Result<()> {
    use crate::io::fmt_f64;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "t_star", "criterion"])?;
    for p in &report.points {
        let c = serde_json::to_value(p.criterion)?;
        w.write_record([
            fmt_f64(p.epsilon),
            fmt_f64(p.t_star),
            c.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Re-mollify restart data at scale `2^k` when set.
    pub mollify_k: Option<u32>,
    /// Largest `sup |h|` a segment may reach.
    pub h_bound: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            mollify_k: None,
            h_bound: ADMISSIBLE_H,
        }
    }
}

/// Runs `segments` consecutive quasilinear solves of length `segment_length`, each
/// restarted from the previous final snapshot, and merges their norms.
pub fn continuation_run(
    pair: &DataPair,
    nl: &Nonlinearity,
    segments: usize,
    segment_length: f64,
    grid: &RadialGrid,
    opts: &ContinuationOptions,
) -> Result<SolveOutcome> {
    if segments == 0 {
        return Err(invalid("continuation needs at least one segment"));
    }
    if !(segment_length > 0.0) {
        return Err(invalid("segment length must be positive"));
    }
    let mut snap = initial_snapshot(pair, grid)?;
    let mut merged: Option<SolveOutcome> = None;
    for s in 0..segments {
        let wrap = |e: WaveError| WaveError::Segment {
            segment: s,
            source: Box::new(e),
        };
        if s > 0 {
            if let Some(k) = opts.mollify_k {
                let j = 1u32 << k;
                if resolves(grid, j) {
                    let restart =
                        DataPair::sampled(snap.phi(grid.dr()), snap.phi_t(grid.dr()), grid)
                            .map_err(wrap)?;
                    let t = snap.t;
                    snap = initial_snapshot(&mollify_pair(&restart, j).map_err(wrap)?, grid)
                        .map_err(wrap)?;
                    snap.t = t;
                }
            }
        }
        let t_end = segment_length * (s + 1) as f64;
        let out = evolve_quasilinear(&snap, nl, t_end, grid, &mut []).map_err(wrap)?;
        if !out.status.is_completed() || out.sup_h > opts.h_bound {
            return Err(wrap(WaveError::Admissibility {
                k: s,
                sup: out.sup_h,
            }));
        }
        snap = out.final_snapshot.clone();
        merged = Some(match merged {
            None => out,
            Some(m) => SolveOutcome {
                status: out.status,
                final_snapshot: out.final_snapshot,
                norms: m.norms.merge(&out.norms).map_err(wrap)?,
                grid: out.grid,
                steps: m.steps + out.steps,
                initial_energy: m.initial_energy,
                sup_h: m.sup_h.max(out.sup_h),
                sup_weighted_dh: m.sup_weighted_dh.max(out.sup_weighted_dh),
            },
        });
    }
    merged.ok_or_else(|| invalid("no segments ran"))
}

/// One-shot against segmented `E₁`, with the one-shot refinement gap as the error scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationCheck {
    pub segments: usize,
    pub segment_length: f64,
    pub e1_direct: f64,
    pub e1_segmented: f64,
    pub e1_refined: f64,
    pub discretization_error: f64,
    pub difference: f64,
    pub within_tolerance: bool,
}

pub fn continuation_check(
    data: &DataSpec,
    nl: &Nonlinearity,
    segments: usize,
    segment_length: f64,
    grid: &RadialGrid,
    opts: &ContinuationOptions,
) -> Result<ContinuationCheck> {
    let total = segment_length * segments as f64;
    let e1 = |g: &RadialGrid| -> Result<f64> {
        let out = solve_quasilinear(&data.sample(g)?, nl, total, g, &mut [])?;
        if !out.status.is_completed() {
            return Err(invalid("the one-shot run did not complete"));
        }
        Ok(out.norms.finalize()?.e1)
    };
    let e1_direct = e1(grid)?;
    let e1_refined = e1(&grid.refined())?;
    let seg = continuation_run(
        &data.sample(grid)?,
        nl,
        segments,
        segment_length,
        grid,
        opts,
    )?;
    let e1_segmented = seg.norms.finalize()?.e1;
    let discretization_error = (e1_direct - e1_refined).abs();
    let difference = (e1_direct - e1_segmented).abs();
    Ok(ContinuationCheck {
        segments,
        segment_length,
        e1_direct,
        e1_segmented,
        e1_refined,
        discretization_error,
        difference,
        within_tolerance: difference <= 3.0 * discretization_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzPoint {
    pub delta: f64,
    pub direction: usize,
    /// `‖∇(f - f_δ)‖ + ‖g - g_δ‖`
    pub data_diff: f64,
    pub e1_diff: f64,
    pub y1_diff: f64,
    pub ratio: Option<f64>,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub t_end: f64,
    pub base_sup_h: f64,
    pub points: Vec<LipschitzPoint>,
}

impl LipschitzReport {
    /// Largest over smallest defined ratio among admissible points.
    pub fn spread(&self) -> Option<f64> {
        let r: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.admissible)
            .filter_map(|p| p.ratio)
            .collect();
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(0.0, f64::max);
        (!r.is_empty() && lo > 0.0).then(|| hi / lo)
    }
}

fn probe_points(
    base: &DataPair,
    directions: &[DataPair],
    deltas: &[f64],
    nl: &Nonlinearity,
    t_end: f64,
    grid: &RadialGrid,
    h_bound: f64,
) -> Result<LipschitzReport> {
    if !(t_end > 0.0) {
        return Err(invalid("continuity probe needs T > 0"));
    }
    let mut rec = TraceRecorder::new(grid, 1);
    let out = solve_quasilinear(base, nl, t_end, grid, &mut [&mut rec])?;
    if !out.status.is_completed() {
        return Err(invalid("the base run did not complete"));
    }
    let base_ok = out.sup_h <= h_bound;
    let reference = Arc::new(rec.into_trace());
    let jobs: Vec<(usize, f64)> = (0..directions.len())
        .flat_map(|d| deltas.iter().map(move |&x| (d, x)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(d, delta)| -> Result<LipschitzPoint> {
            let pert = base.axpy(delta, &directions[d])?;
            let data_diff = sobolev_norms(&pert.axpy(-1.0, base)?, grid)?.energy_size();
            let mut diff = DifferenceSink::new(reference.clone());
            let run = solve_quasilinear(&pert, nl, t_end, grid, &mut [&mut diff])?;
            let admissible = base_ok && run.status.is_completed() && run.sup_h <= h_bound;
            let norms = diff
                .accumulator()
                .ok_or_else(|| invalid("no levels emitted"))?
                .finalize()?;
            let num = norms.e1 + norms.y1;
            let ratio = (data_diff > 0.0).then(|| num / data_diff);
            Ok(LipschitzPoint {
                delta,
                direction: d,
                data_diff,
                e1_diff: norms.e1,
                y1_diff: norms.y1,
                ratio,
                admissible,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LipschitzReport {
        t_end,
        base_sup_h: out.sup_h,
        points,
    })
}

/// `(‖Φ(d) - Φ(d + δ p)‖_{E₁} + ‖·‖_{Y₁}) / ‖d - (d + δ p)‖_{Ḣ¹ × L²}` for each `δ`.
pub fn continuity_probe(
    base: &DataPair,
    perturbation: &DataPair,
    deltas: &[f64],
    nl: &Nonlinearity,
    t_end: f64,
    grid: &RadialGrid,
    h_bound: f64,
) -> Result<LipschitzReport> {
    probe_points(
        base,
        std::slice::from_ref(perturbation),
        deltas,
        nl,
        t_end,
        grid,
        h_bound,
    )
}

/// The same probe over several perturbation directions.
pub fn continuity_probe_directions(
    base: &DataPair,
    directions: &[DataPair],
    deltas: &[f64],
    nl: &Nonlinearity,
    t_end: f64,
    grid: &RadialGrid,
    h_bound: f64,
) -> Result<LipschitzReport> {
    probe_points(base, directions, deltas, nl, t_end, grid, h_bound)
}

/// Random smooth perturbations, each a sum of two Gaussian shells in `f` and `g`,
/// normalized to unit `Ḣ¹ × L²` size.
pub fn random_directions(seed: u64, count: usize, grid: &RadialGrid) -> Result<Vec<DataPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 0.5 * grid.r_max();
    (0..count)
        .map(|_| {
            let shell = |rng: &mut ChaCha8Rng| -> Result<DataPair> {
                let c = rng.gen_range(0.0..reach.min(3.0));
                let w = rng.gen_range(0.5..1.5);
                let f = Profile::new(ProfileKind::Gaussian, rng.gen_range(-1.0..1.0), c, w)?;
                let g = Profile::new(ProfileKind::Gaussian, rng.gen_range(-1.0..1.0), c, w)?;
                Ok(DataPair::from_profiles(f, g, grid))
            };
            let p = shell(&mut rng)?.axpy(1.0, &shell(&mut rng)?)?;
            let size = sobolev_norms(&p, grid)?.energy_size();
            if !(size > 0.0) {
                return Err(WaveError::CannotScale);
            }
            Ok(p.scaled(1.0 / size))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub value: Option<f64>,
    pub experiment: String,
    pub note: String,
}

/// Empirical stand-ins for the existential constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub entries: Vec<LedgerEntry>,
}

impl ConstantsLedger {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| e.value)
    }
}

fn max_of(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    v.flatten().filter(|x| x.is_finite()).reduce(f64::max)
}

/// Builds the ledger from a Picard report.
pub fn constants_ledger(report: &IterationReport, experiment: &str) -> ConstantsLedger {
    let rec = &report.records;
    let c_s = max_of(rec.iter().map(|r| Some(r.sobolev))).filter(|c| *c > 0.0);
    let c2 = max_of(rec.iter().map(|r| r.c2));
    let c3 = max_of(rec.iter().map(|r| r.c3));
    let c4 = max_of(rec.iter().map(|r| r.c4));
    let m1 = Some(report.m1_empirical).filter(|m| *m > 0.0);
    let lambda = report.nl.lambda.abs();
    let c0 = match (c_s, lambda > 0.0) {
        (Some(cs), true) => Some(match report.nl.h_kind {
            HKind::Linear => 1.0 / (6.0 * lambda * cs),
            HKind::Quadratic => (1.0 / (6.0 * lambda)).sqrt() / cs,
        }),
        _ => None,
    };
    let a1 = c3.zip(m1).map(|(c, m)| 1.0 / (8.0 * c * m));
    let a2 = c4.zip(m1).map(|(c, m)| 1.0 / (2.0 * 64.0 * c * c * m * m));
    let entry = |name: &str, value: Option<f64>, note: &str| LedgerEntry {
        name: name.to_string(),
        value,
        experiment: experiment.to_string(),
        note: note.to_string(),
    };
    ConstantsLedger {
        entries: vec![
            entry(
                "C_S",
                c_s,
                "largest radial Sobolev ratio over sampled levels of every iterate",
            ),
            entry("C2", c2, "largest energy-estimate ratio over iterates"),
            entry(
                "C3",
                c3,
                "largest second-order bound ratio over iterates k >= 1",
            ),
            entry(
                "C4",
                c4,
                "largest difference bound ratio over iterates k >= 1",
            ),
            entry("c0", c0, "sup|h| <= 1/6 threshold implied by C_S and h"),
            entry("M1", m1, "max (E2 + Y2 + Z2) / eps over iterates"),
            entry("A1", a1, "1 / (8 C3 M1)"),
            entry("A2", a2, "1 / (2 * 8^2 * C4^2 * M1^2)"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn policy() -> GridPolicy {
        GridPolicy {
            dr: 1.0 / 16.0,
            pad: 6.0,
            cfl_factor: 0.9,
            coeff_bound: 0.5,
        }
    }

    #[test]
    fn fit_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let f = least_squares(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(matches!(
            least_squares(&x[..2], &y[..2]),
            Err(WaveError::FitUndefined(2))
        ));
    }

    #[test]
    fn free_wave_never_blows_up() {
        let rep = lifespan_sweep(
            &DataSpec::gaussian(0.1),
            &[0.4, 0.2],
            &Nonlinearity::free(),
            5.0,
            &policy(),
        )
        .unwrap();
        assert!(rep
            .points
            .iter()
            .all(|p| !p.blew_up && p.criterion == StopCriterion::Budget));
        assert!(rep.fit.is_none() && rep.fit_error.is_some());
        assert!(lifespan_sweep(
            &DataSpec::gaussian(0.1),
            &[0.2, 0.4],
            &Nonlinearity::free(),
            5.0,
            &policy()
        )
        .is_err());
    }

    #[test]
    fn one_segment_matches_direct_and_zero_stays_zero() {
        let g = build_grid(10.0, 320, 0.9, 0.5).unwrap();
        let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
        let pair = DataSpec::gaussian(0.05).sample(&g).unwrap();
        let direct = solve_quasilinear(&pair, &nl, 2.0, &g, &mut []).unwrap();
        let seg =
            continuation_run(&pair, &nl, 1, 2.0, &g, &ContinuationOptions::default()).unwrap();
        assert_eq!(direct.final_snapshot, seg.final_snapshot);
        let zero = continuation_run(
            &DataPair::zeros(&g),
            &nl,
            3,
            1.0,
            &g,
            &ContinuationOptions::default(),
        )
        .unwrap();
        assert!(zero.final_snapshot.u.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn admissibility_failure_names_the_segment() {
        let g = build_grid(10.0, 320, 0.9, 0.5).unwrap();
        let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
        let pair = DataSpec::gaussian(0.05).sample(&g).unwrap();
        let opts = ContinuationOptions {
            mollify_k: None,
            h_bound: 1e-6,
        };
        let err = continuation_run(&pair, &nl, 2, 1.0, &g, &opts).unwrap_err();
        assert!(matches!(err, WaveError::Segment { segment: 0, .. }));
    }

    #[test]
    fn zero_delta_gives_zero_difference() {
        let g = build_grid(8.0, 256, 0.9, 0.5).unwrap();
        let nl = Nonlinearity::new(1.0, 0.0, HKind::Linear, 1.0);
        let base = DataSpec::gaussian(0.05).sample(&g).unwrap();
        let dir = random_directions(7, 1, &g).unwrap();
        let rep =
            continuity_probe(&base, &dir[0], &[0.0, 1e-2], &nl, 1.0, &g, ADMISSIBLE_H).unwrap();
        assert_eq!(rep.points[0].e1_diff + rep.points[0].y1_diff, 0.0);
        assert!(rep.points[0].ratio.is_none());
        assert!(rep.points[1].ratio.unwrap() > 0.0);
    }

    #[test]
    fn directions_are_seeded() {
        let g = build_grid(8.0, 128, 0.9, 0.5).unwrap();
        assert_eq!(
            random_directions(3, 2, &g).unwrap(),
            random_directions(3, 2, &g).unwrap()
        );
        assert_ne!(
            random_directions(3, 1, &g).unwrap(),
            random_directions(4, 1, &g).unwrap()
        );
    }
}
