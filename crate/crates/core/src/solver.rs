//! Explicit leapfrog stepping for `∂²_t φ - Δφ + h Δφ = F` in `u = r φ`,
//! the quasilinear variant with `h = h(φ)` and `F = a φ_t² + b |∇φ|²`,
//! and the free-wave d'Alembert oracle.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{DataPair, RadialFunction};
use crate::error::{invalid, Result, WaveError};
use crate::grid::{even_derivatives, phi_from_u, FieldSnapshot, RadialGrid, COEFF_BOUND_MAX};
use crate::io::fmt_f64;
use crate::level::{LevelFields, LevelSink};
use crate::norms::{NormAccumulator, NormOrder};
use crate::quadrature::GaussLegendre;

/// Growth factor of `E₁` over its initial value that counts as blow-up.
pub const ENERGY_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HKind {
    /// `h(φ) = λ φ`
    Linear,
    /// `h(φ) = λ φ²`
    Quadratic,
}

/// `F(∂φ) = a φ_t² + b |∇φ|²` and `h(φ)` with `h(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub a: f64,
    pub b: f64,
    pub h_kind: HKind,
    pub lambda: f64,
}

impl Nonlinearity {
    pub fn new(a: f64, b: f64, h_kind: HKind, lambda: f64) -> Self {
        Self {
            a,
            b,
            h_kind,
            lambda,
        }
    }

    /// `a = b = 0`, `h ≡ 0`.
    pub fn free() -> Self {
        Self::new(0.0, 0.0, HKind::Linear, 0.0)
    }

    pub fn h(&self, phi: f64) -> f64 {
        match self.h_kind {
            HKind::Linear => self.lambda * phi,
            HKind::Quadratic => self.lambda * phi * phi,
        }
    }

    pub fn dh(&self, phi: f64) -> f64 {
        match self.h_kind {
            HKind::Linear => self.lambda,
            HKind::Quadratic => 2.0 * self.lambda * phi,
        }
    }

    /// `sup |h|` over fields with `sup |φ| = m`.
    pub fn h_sup(&self, m: f64) -> f64 {
        self.h(m.abs()).abs()
    }

    pub fn forcing(&self, phi_t: f64, phi_r: f64) -> f64 {
        self.a * phi_t * phi_t + self.b * phi_r * phi_r
    }

    pub fn is_linear(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.lambda == 0.0
    }

    /// `[h, h_t, h_r, F]` at every node.
    pub(crate) fn samples(&self, phi: &[f64], phi_t: &[f64], phi_r: &[f64]) -> [Vec<f64>; 4] {
        let n = phi.len();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let d = self.dh(phi[i]);
            out[0][i] = self.h(phi[i]);
            out[1][i] = d * phi_t[i];
            out[2][i] = d * phi_r[i];
            out[3][i] = self.forcing(phi_t[i], phi_r[i]);
        }
        out
    }
}

type JetFn = Arc<dyn Fn(f64, f64) -> (f64, f64, f64) + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum CoefficientSource {
    Zero,
    Closed(JetFn),
    Iterate { trace: Arc<Trace>, nl: Nonlinearity },
}

/// `h(t, r)` of the linear equation, with its derivatives.
#[derive(Clone)]
pub struct CoefficientField {
    source: CoefficientSource,
    pub name: String,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .finish()
    }
}

impl CoefficientField {
    pub fn zero() -> Self {
        Self {
            source: CoefficientSource::Zero,
            name: "zero".into(),
        }
    }

    /// Closed form returning `(h, ∂_t h, ∂_r h)`.
    pub fn closed(
        name: &str,
        jet: impl Fn(f64, f64) -> (f64, f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            source: CoefficientSource::Closed(Arc::new(jet)),
            name: name.into(),
        }
    }

    /// `h = c e^{-r²}`.
    pub fn gaussian(c: f64) -> Self {
        Self::closed(&format!("{c}*exp(-r^2)"), move |_, r| {
            let e = c * (-r * r).exp();
            (e, 0.0, -2.0 * r * e)
        })
    }

    /// `h(φ_prev)` read from a stored trace.
    pub fn from_iterate(trace: Arc<Trace>, nl: Nonlinearity) -> Self {
        Self {
            source: CoefficientSource::Iterate { trace, nl },
            name: "iterate".into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, CoefficientSource::Zero)
    }

    fn fill(
        &self,
        t: f64,
        grid: &RadialGrid,
        h: &mut [f64],
        ht: &mut [f64],
        hr: &mut [f64],
    ) -> Result<()> {
        match &self.source {
            CoefficientSource::Zero => {
                h.fill(0.0);
                ht.fill(0.0);
                hr.fill(0.0);
            }
            CoefficientSource::Closed(jet) => {
                for i in 0..h.len() {
                    let (a, b, c) = jet(t, grid.r(i));
                    h[i] = a;
                    ht[i] = b;
                    hr[i] = c;
                }
            }
            CoefficientSource::Iterate { trace, nl } => {
                let (phi, phi_t, phi_r) = trace.fields_at(t, grid)?;
                for i in 0..h.len() {
                    let d = nl.dh(phi[i]);
                    h[i] = nl.h(phi[i]);
                    ht[i] = d * phi_t[i];
                    hr[i] = d * phi_r[i];
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
enum ForcingSource {
    Zero,
    Closed(ScalarFn),
    Iterate { trace: Arc<Trace>, nl: Nonlinearity },
}

/// Right-hand side `F(t, r)` of the linear equation.
#[derive(Clone)]
pub struct Forcing {
    source: ForcingSource,
    pub name: String,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing").field("name", &self.name).finish()
    }
}

impl Forcing {
    pub fn zero() -> Self {
        Self {
            source: ForcingSource::Zero,
            name: "zero".into(),
        }
    }

    pub fn closed(name: &str, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            source: ForcingSource::Closed(Arc::new(f)),
            name: name.into(),
        }
    }

    /// `F(∂φ_prev)` read from a stored trace.
    pub fn from_iterate(trace: Arc<Trace>, nl: Nonlinearity) -> Self {
        Self {
            source: ForcingSource::Iterate { trace, nl },
            name: "iterate".into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, ForcingSource::Zero)
    }

    fn fill(&self, t: f64, grid: &RadialGrid, out: &mut [f64]) -> Result<()> {
        match &self.source {
            ForcingSource::Zero => out.fill(0.0),
            ForcingSource::Closed(f) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = f(t, grid.r(i));
                }
            }
            ForcingSource::Iterate { trace, nl } => {
                let (_, phi_t, phi_r) = trace.fields_at(t, grid)?;
                for i in 0..out.len() {
                    out[i] = nl.forcing(phi_t[i], phi_r[i]);
                }
            }
        }
        Ok(())
    }
}

/// The manufactured solution `φ* = e^{-t} e^{-r²}` with `h = c e^{-r²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub h_amplitude: f64,
}

impl ManufacturedCase {
    pub fn exact(&self, t: f64, r: f64) -> f64 {
        (-t - r * r).exp()
    }

    pub fn data(&self, grid: &RadialGrid) -> DataPair {
        let f = crate::data::Profile::gaussian(1.0, 1.0).expect("unit width");
        let g = crate::data::Profile::gaussian(-1.0, 1.0).expect("unit width");
        DataPair::from_profiles(f, g, grid)
    }

    pub fn coefficient(&self) -> CoefficientField {
        CoefficientField::gaussian(self.h_amplitude)
    }

    /// `F = φ*_tt - (1 - h) Δφ*`.
    pub fn forcing(&self) -> Forcing {
        let c = self.h_amplitude;
        Forcing::closed("manufactured", move |t, r| {
            let p = (-t - r * r).exp();
            let h = c * (-r * r).exp();
            p - (1.0 - h) * (4.0 * r * r - 6.0) * p
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCriterion {
    NonFinite,
    CoefficientBound,
    EnergyGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Completed,
    Blowup {
        t_star: f64,
        criterion: BlowupCriterion,
    },
    CflViolation {
        t: f64,
    },
}

impl SolveStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, Self::Completed)
    }
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Last valid level.
    pub final_snapshot: FieldSnapshot,
    /// Norm accumulator over every emitted level.
    pub norms: NormAccumulator,
    /// Grid with the time step actually used.
    pub grid: RadialGrid,
    pub steps: usize,
    /// `E₁` at the first level.
    pub initial_energy: f64,
    /// `sup |h|` over emitted levels.
    pub sup_h: f64,
    /// `sup r^{1/2} ⟨r⟩^{1/2} |∂h|` over emitted levels.
    pub sup_weighted_dh: f64,
}

enum Mode<'a> {
    Linear {
        h: &'a CoefficientField,
        f: &'a Forcing,
    },
    Quasi(&'a Nonlinearity),
}

/// Solves the linear equation from `(f, g)` on `[0, T]`.
pub fn solve_linear(
    pair: &DataPair,
    h: &CoefficientField,
    forcing: &Forcing,
    t_end: f64,
    grid: &RadialGrid,
    sinks: &mut [&mut dyn LevelSink],
) -> Result<SolveOutcome> {
    let init = initial_snapshot(pair, grid)?;
    evolve(&init, t_end, grid, Mode::Linear { h, f: forcing }, sinks)
}

/// Solves the quasilinear equation from `(f, g)` on `[0, T]`.
pub fn solve_quasilinear(
    pair: &DataPair,
    nl: &Nonlinearity,
    t_end: f64,
    grid: &RadialGrid,
    sinks: &mut [&mut dyn LevelSink],
) -> Result<SolveOutcome> {
    let init = initial_snapshot(pair, grid)?;
    evolve(&init, t_end, grid, Mode::Quasi(nl), sinks)
}

/// Linear run from an arbitrary snapshot up to absolute time `t_end`.
pub fn evolve_linear(
    init: &FieldSnapshot,
    h: &CoefficientField,
    forcing: &Forcing,
    t_end: f64,
    grid: &RadialGrid,
    sinks: &mut [&mut dyn LevelSink],
) -> Result<SolveOutcome> {
    evolve(init, t_end, grid, Mode::Linear { h, f: forcing }, sinks)
}

/// Quasilinear run from an arbitrary snapshot up to absolute time `t_end`.
pub fn evolve_quasilinear(
    init: &FieldSnapshot,
    nl: &Nonlinearity,
    t_end: f64,
    grid: &RadialGrid,
    sinks: &mut [&mut dyn LevelSink],
) -> Result<SolveOutcome> {
    evolve(init, t_end, grid, Mode::Quasi(nl), sinks)
}

/// `u = r f`, `u_t = r g` at `t = 0`.
pub fn initial_snapshot(pair: &DataPair, grid: &RadialGrid) -> Result<FieldSnapshot> {
    if pair.grid.nr() != grid.nr() || pair.grid.r_max() != grid.r_max() {
        return Err(invalid("data pair was sampled on a different mesh"));
    }
    FieldSnapshot::from_phi(0.0, &pair.f.values, &pair.g.values, grid)
}

fn accel(u: &[f64], h: &[f64], f: &[f64], dr: f64, out: &mut [f64]) {
    let n = u.len();
    let inv = 1.0 / (dr * dr);
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for i in 1..n - 1 {
        let urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
        out[i] = (1.0 - h[i]) * urr + i as f64 * dr * f[i];
    }
}

struct Samples {
    h: Vec<f64>,
    ht: Vec<f64>,
    hr: Vec<f64>,
    f: Vec<f64>,
}

impl Samples {
    fn new(n: usize) -> Self {
        Self {
            h: vec![0.0; n],
            ht: vec![0.0; n],
            hr: vec![0.0; n],
            f: vec![0.0; n],
        }
    }

    fn fill(
        &mut self,
        mode: &Mode<'_>,
        t: f64,
        grid: &RadialGrid,
        u: &[f64],
        u_t: &[f64],
    ) -> Result<()> {
        match mode {
            Mode::Linear { h, f } => {
                h.fill(t, grid, &mut self.h, &mut self.ht, &mut self.hr)?;
                f.fill(t, grid, &mut self.f)?;
            }
            Mode::Quasi(nl) => {
                let phi = phi_from_u(u, grid.dr());
                let phi_t = phi_from_u(u_t, grid.dr());
                let (phi_r, _) = even_derivatives(&phi, grid.dr());
                let [h, ht, hr, f] = nl.samples(&phi, &phi_t, &phi_r);
                self.h = h;
                self.ht = ht;
                self.hr = hr;
                self.f = f;
            }
        }
        Ok(())
    }

    fn sup_h(&self) -> f64 {
        self.h.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn weighted_dh(lv: &LevelFields) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..lv.h.len() {
        let r = lv.grid.r(i);
        let w = (r * (1.0 + r * r).sqrt()).sqrt();
        m = m.max(w * lv.h_t[i].hypot(lv.h_r[i]));
    }
    m
}

fn evolve(
    init: &FieldSnapshot,
    t_end: f64,
    grid: &RadialGrid,
    mode: Mode<'_>,
    sinks: &mut [&mut dyn LevelSink],
) -> Result<SolveOutcome> {
    grid.check_len(init.u.len())?;
    grid.check_len(init.u_t.len())?;
    let duration = t_end - init.t;
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(invalid(format!(
            "end time {t_end} precedes start time {}",
            init.t
        )));
    }
    let (steps, dt) = grid.steps_to(duration);
    let fitted = if steps > 0 {
        grid.fitted_to(duration)
    } else {
        *grid
    };
    let n = grid.len();
    let dr = grid.dr();
    let quasi = matches!(mode, Mode::Quasi(_));

    let mut u_prev = init.u.clone();
    let mut v0 = init.u_t.clone();
    for v in [&mut u_prev, &mut v0] {
        v[0] = 0.0;
        v[n - 1] = 0.0;
    }

    let mut norms = NormAccumulator::with_order(&fitted, NormOrder::Second);
    let mut samples = Samples::new(n);
    let mut sup_h: f64 = 0.0;
    let mut sup_dh: f64 = 0.0;

    let check = |s: &Samples, u: &[f64], t: f64| -> Result<Option<SolveStatus>> {
        if u.iter().any(|x| !x.is_finite()) || s.h.iter().chain(&s.f).any(|x| !x.is_finite()) {
            return Ok(Some(SolveStatus::Blowup {
                t_star: t,
                criterion: BlowupCriterion::NonFinite,
            }));
        }
        let sh = s.sup_h();
        if sh > COEFF_BOUND_MAX {
            if quasi {
                return Ok(Some(SolveStatus::Blowup {
                    t_star: t,
                    criterion: BlowupCriterion::CoefficientBound,
                }));
            }
            return Err(WaveError::CoefficientBound {
                sup: sh,
                limit: COEFF_BOUND_MAX,
            });
        }
        if dt * (1.0 + sh).sqrt() > dr {
            return Ok(Some(SolveStatus::CflViolation { t }));
        }
        Ok(None)
    };

    let build_level = |snap: &FieldSnapshot, s: &Samples| -> Result<LevelFields> {
        match &mode {
            Mode::Quasi(nl) => {
                LevelFields::from_snapshot_with(&fitted, snap, |p, pt, pr| nl.samples(p, pt, pr))
            }
            Mode::Linear { .. } => {
                LevelFields::from_snapshot(&fitted, snap, &s.h, &s.ht, &s.hr, &s.f)
            }
        }
    };

    let outcome = |status, final_snapshot, norms, steps, e0, sup_h, sup_dh| SolveOutcome {
        status,
        final_snapshot,
        norms,
        grid: fitted,
        steps,
        initial_energy: e0,
        sup_h,
        sup_weighted_dh: sup_dh,
    };

    let snap0 = FieldSnapshot {
        t: init.t,
        u: u_prev.clone(),
        u_t: v0.clone(),
    };
    samples.fill(&mode, init.t, grid, &u_prev, &v0)?;
    if let Some(status) = check(&samples, &u_prev, init.t)? {
        return Ok(outcome(status, snap0, norms, 0, 0.0, 0.0, 0.0));
    }
    let lv0 = build_level(&snap0, &samples)?;
    let e0 = lv0.energy1();
    sup_h = sup_h.max(lv0.sup_abs_h());
    sup_dh = sup_dh.max(weighted_dh(&lv0));
    norms.accumulate_level(&lv0)?;
    for s in sinks.iter_mut() {
        s.accept(&lv0)?;
    }
    drop(lv0);
    if steps == 0 {
        return Ok(outcome(
            SolveStatus::Completed,
            snap0,
            norms,
            0,
            e0,
            sup_h,
            sup_dh,
        ));
    }

    let mut a = vec![0.0; n];
    accel(&u_prev, &samples.h, &samples.f, dr, &mut a);
    let mut u_cur: Vec<f64> = (0..n)
        .map(|i| u_prev[i] + dt * v0[i] + 0.5 * dt * dt * a[i])
        .collect();
    u_cur[0] = 0.0;
    u_cur[n - 1] = 0.0;
    let mut u_old: Vec<f64> = Vec::new();
    let mut u_next = vec![0.0; n];
    let mut est = vec![0.0; n];
    let mut last = snap0;

    for k in 1..=steps {
        let t = init.t + duration * (k as f64 / steps as f64);
        if quasi {
            if k == 1 {
                for i in 0..n {
                    est[i] = 2.0 * (u_cur[i] - u_prev[i]) / dt - v0[i];
                }
            } else {
                for i in 0..n {
                    est[i] = (3.0 * u_cur[i] - 4.0 * u_prev[i] + u_old[i]) / (2.0 * dt);
                }
            }
        }
        samples.fill(&mode, t, grid, &u_cur, &est)?;
        if let Some(status) = check(&samples, &u_cur, t)? {
            return Ok(outcome(status, last, norms, k - 1, e0, sup_h, sup_dh));
        }
        accel(&u_cur, &samples.h, &samples.f, dr, &mut a);
        for i in 0..n {
            u_next[i] = 2.0 * u_cur[i] - u_prev[i] + dt * dt * a[i];
        }
        u_next[0] = 0.0;
        u_next[n - 1] = 0.0;
        let u_t: Vec<f64> = (0..n)
            .map(|i| (u_next[i] - u_prev[i]) / (2.0 * dt))
            .collect();
        let snap = FieldSnapshot {
            t,
            u: u_cur.clone(),
            u_t,
        };
        let lv = build_level(&snap, &samples)?;
        if quasi && e0 > 0.0 && lv.energy1() > ENERGY_CAP * e0 {
            let status = SolveStatus::Blowup {
                t_star: t,
                criterion: BlowupCriterion::EnergyGrowth,
            };
            return Ok(outcome(status, last, norms, k - 1, e0, sup_h, sup_dh));
        }
        if quasi && lv.h.iter().chain(&lv.phi_tt).any(|x| !x.is_finite()) {
            let status = SolveStatus::Blowup {
                t_star: t,
                criterion: BlowupCriterion::NonFinite,
            };
            return Ok(outcome(status, last, norms, k - 1, e0, sup_h, sup_dh));
        }
        sup_h = sup_h.max(lv.sup_abs_h());
        sup_dh = sup_dh.max(weighted_dh(&lv));
        norms.accumulate_level(&lv)?;
        for s in sinks.iter_mut() {
            s.accept(&lv)?;
        }
        last = snap;
        std::mem::swap(&mut u_old, &mut u_prev);
        std::mem::swap(&mut u_prev, &mut u_cur);
        std::mem::swap(&mut u_cur, &mut u_next);
        if u_next.len() != n {
            u_next = vec![0.0; n];
        }
    }
    Ok(outcome(
        SolveStatus::Completed,
        last,
        norms,
        steps,
        e0,
        sup_h,
        sup_dh,
    ))
}

/// Stored `φ, φ_t, φ_r` levels of a run, used as the next iterate's coefficient
/// and as a reference for differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub grid: RadialGrid,
    pub stride: usize,
    pub times: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub phi_t: Vec<Vec<f64>>,
    pub phi_r: Vec<Vec<f64>>,
    pub sup_abs_phi: f64,
}

impl Trace {
    pub fn new(grid: &RadialGrid, stride: usize) -> Self {
        Self {
            grid: *grid,
            stride: stride.max(1),
            times: Vec::new(),
            phi: Vec::new(),
            phi_t: Vec::new(),
            phi_r: Vec::new(),
            sup_abs_phi: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Fields at time `t` sampled at the nodes of `target`, whose nodes must be a
    /// subset of this trace's nodes. Linear interpolation in time between stored levels.
    pub fn fields_at(&self, t: f64, target: &RadialGrid) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = target.len();
        if self.is_empty() {
            let z = vec![0.0; n];
            return Ok((z.clone(), z.clone(), z));
        }
        let ratio = self.grid.nr() / target.nr();
        if ratio == 0
            || ratio * target.nr() != self.grid.nr()
            || (self.grid.r_max() - target.r_max()).abs() > 1e-12
        {
            return Err(invalid("trace mesh does not nest the requested mesh"));
        }
        let pick = |row: &Vec<f64>| -> Vec<f64> { (0..n).map(|i| row[i * ratio]).collect() };
        let k = self.times.partition_point(|&s| s <= t);
        let tol = 1e-9 * self.grid.dt().max(1e-300);
        if k == 0 {
            return Ok((
                pick(&self.phi[0]),
                pick(&self.phi_t[0]),
                pick(&self.phi_r[0]),
            ));
        }
        let lo = k - 1;
        if (t - self.times[lo]).abs() <= tol || k == self.times.len() {
            return Ok((
                pick(&self.phi[lo]),
                pick(&self.phi_t[lo]),
                pick(&self.phi_r[lo]),
            ));
        }
        if (self.times[k] - t).abs() <= tol {
            return Ok((
                pick(&self.phi[k]),
                pick(&self.phi_t[k]),
                pick(&self.phi_r[k]),
            ));
        }
        let w = (t - self.times[lo]) / (self.times[k] - self.times[lo]);
        let mix = |rows: &Vec<Vec<f64>>| -> Vec<f64> {
            (0..n)
                .map(|i| (1.0 - w) * rows[lo][i * ratio] + w * rows[k][i * ratio])
                .collect()
        };
        Ok((mix(&self.phi), mix(&self.phi_t), mix(&self.phi_r)))
    }

    /// Writes columns `t, r, phi, phi_t`, keeping every `r_stride`-th node.
    pub fn write_csv<W: Write>(&self, out: W, r_stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "r", "phi", "phi_t"])?;
        for (k, t) in self.times.iter().enumerate() {
            for i in (0..self.grid.len()).step_by(r_stride.max(1)) {
                w.write_record([
                    fmt_f64(*t),
                    fmt_f64(self.grid.r(i)),
                    fmt_f64(self.phi[k][i]),
                    fmt_f64(self.phi_t[k][i]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sink that stores every `stride`-th level as a [`Trace`].
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    pub trace: Trace,
    seen: usize,
}

impl TraceRecorder {
    pub fn new(grid: &RadialGrid, stride: usize) -> Self {
        Self {
            trace: Trace::new(grid, stride),
            seen: 0,
        }
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

impl LevelSink for TraceRecorder {
    fn accept(&mut self, lv: &LevelFields) -> Result<()> {
        let m = lv.phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        self.trace.sup_abs_phi = self.trace.sup_abs_phi.max(m);
        if self.seen.is_multiple_of(self.trace.stride) {
            if self.trace.is_empty() {
                self.trace.grid = lv.grid;
            }
            self.trace.times.push(lv.t);
            self.trace.phi.push(lv.phi.clone());
            self.trace.phi_t.push(lv.phi_t.clone());
            self.trace.phi_r.push(lv.phi_r.clone());
        }
        self.seen += 1;
        Ok(())
    }
}

/// Accumulates first-order norms of `φ - φ_ref` against a stored reference trace.
#[derive(Debug, Clone)]
pub struct DifferenceSink {
    reference: Arc<Trace>,
    pub norms: Option<NormAccumulator>,
}

impl DifferenceSink {
    pub fn new(reference: Arc<Trace>) -> Self {
        Self {
            reference,
            norms: None,
        }
    }

    pub fn accumulator(&self) -> Option<&NormAccumulator> {
        self.norms.as_ref()
    }
}

impl LevelSink for DifferenceSink {
    fn accept(&mut self, lv: &LevelFields) -> Result<()> {
        let (p, pt, pr) = self.reference.fields_at(lv.t, &lv.grid)?;
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
        let d = LevelFields::first_order(
            &lv.grid,
            lv.t,
            sub(&lv.phi, &p),
            sub(&lv.phi_t, &pt),
            sub(&lv.phi_r, &pr),
        );
        let acc = self
            .norms
            .get_or_insert_with(|| NormAccumulator::with_order(&lv.grid, NormOrder::First));
        acc.accumulate_level(&d)
    }
}

/// Per-level energies of a run.
#[derive(Debug, Clone, Default)]
pub struct EnergyProbe {
    pub times: Vec<f64>,
    /// `‖∇φ‖ + ‖φ_t‖`
    pub e1: Vec<f64>,
    /// `‖φ_t‖² + ‖∇φ‖²`
    pub quadratic: Vec<f64>,
}

impl EnergyProbe {
    /// Largest relative deviation of `sqrt(‖φ_t‖² + ‖∇φ‖²)` from its first value.
    pub fn relative_drift(&self) -> f64 {
        let Some(&q0) = self.quadratic.first() else {
            return 0.0;
        };
        if q0 == 0.0 {
            return 0.0;
        }
        let e0 = q0.sqrt();
        self.quadratic
            .iter()
            .map(|q| (q.sqrt() - e0).abs() / e0)
            .fold(0.0, f64::max)
    }
}

impl LevelSink for EnergyProbe {
    fn accept(&mut self, lv: &LevelFields) -> Result<()> {
        self.times.push(lv.t);
        self.e1.push(lv.energy1());
        self.quadratic.push(lv.quadratic_energy());
        Ok(())
    }
}

/// Value and derivatives of an exact radial solution at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhiJet {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_r: f64,
    pub phi_tt: f64,
    pub phi_tr: f64,
    pub phi_rr: f64,
}

fn even_jet(f: &RadialFunction, s: f64) -> (f64, f64, f64) {
    let (v, d1, d2) = f.jet(s.abs());
    (v, if s < 0.0 { -d1 } else { d1 }, d2)
}

fn resolution_scale(pair: &DataPair) -> f64 {
    match pair.descriptor {
        Some(d) => d.f.width.min(d.g.width),
        None => 4.0 * pair.grid.dr(),
    }
}

fn integral_u1(pair: &DataPair, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let gl = GaussLegendre::new(16);
    let panels = (((b - a).abs() / (0.125 * resolution_scale(pair))).ceil() as usize).max(2);
    gl.integrate_composite(a, b, panels, |s| s * even_jet(&pair.g, s).0)
}

/// Free radial wave by d'Alembert on `u = r φ` with odd extensions of `r f`, `r g`.
pub fn dalembert_free(pair: &DataPair, t: f64, r: f64) -> f64 {
    let r = r.abs();
    if r == 0.0 {
        let (f0, f1, _) = even_jet(&pair.f, t);
        let (g0, _, _) = even_jet(&pair.g, t);
        return f0 + t * f1 + t * g0;
    }
    let u0 = |s: f64| s * even_jet(&pair.f, s).0;
    (u0(r + t) + u0(r - t) + integral_u1(pair, r - t, r + t)) / (2.0 * r)
}

/// Derivatives of the d'Alembert solution up to second order; requires `r > 0`.
pub fn dalembert_jet(pair: &DataPair, t: f64, r: f64) -> Result<PhiJet> {
    if !(r > 0.0) {
        return Err(invalid(
            "the d'Alembert jet is evaluated away from the origin",
        ));
    }
    let u0 = |s: f64| {
        let (f, f1, f2) = even_jet(&pair.f, s);
        (s * f, f + s * f1, 2.0 * f1 + s * f2)
    };
    let u1 = |s: f64| {
        let (g, g1, _) = even_jet(&pair.g, s);
        (s * g, g + s * g1)
    };
    let (p, pd, pdd) = u0(r + t);
    let (m, md, mdd) = u0(r - t);
    let (q, qd) = u1(r + t);
    let (n, nd) = u1(r - t);
    let big_u = 0.5 * (p + m) + 0.5 * integral_u1(pair, r - t, r + t);
    let u_t = 0.5 * (pd - md) + 0.5 * (q + n);
    let u_r = 0.5 * (pd + md) + 0.5 * (q - n);
    let u_tt = 0.5 * (pdd + mdd) + 0.5 * (qd - nd);
    let u_tr = 0.5 * (pdd - mdd) + 0.5 * (qd + nd);
    let (r2, r3) = (r * r, r * r * r);
    Ok(PhiJet {
        phi: big_u / r,
        phi_t: u_t / r,
        phi_r: u_r / r - big_u / r2,
        phi_tt: u_tt / r,
        phi_tr: u_tr / r - u_t / r2,
        phi_rr: u_tt / r - 2.0 * u_r / r2 + 2.0 * big_u / r3,
    })
}
