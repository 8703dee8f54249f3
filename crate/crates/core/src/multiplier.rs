//! Radial multiplier vector fields `X = f(r) x/r`, the modified momentum density,
//! its divergence identity, and the pointwise inequalities on `f`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataPair;
use crate::dual::{Dual, Scalar};
use crate::error::{invalid, Result, WaveError};
use crate::grid::{build_grid, RadialGrid, COEFF_BOUND_MAX};
use crate::solver::{dalembert_jet, PhiJet};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Relative slack under which an inequality counts as equality.
pub const EQUALITY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum MultiplierKind {
    /// `f = (r / (1 + r))^κ`
    Kss { kappa: f64 },
    /// `f = r / (ρ + r)`
    Ms { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierField {
    pub kind: MultiplierKind,
    /// Space dimension.
    pub n: usize,
}

impl MultiplierField {
    pub fn kss(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(invalid(format!("kappa must lie in (0, 1), got {kappa}")));
        }
        Ok(Self {
            kind: MultiplierKind::Kss { kappa },
            n: 3,
        })
    }

    pub fn ms(rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            kind: MultiplierKind::Ms { rho },
            n: 3,
        })
    }

    pub fn from_name(variant: &str, parameter: f64) -> Result<Self> {
        match variant.to_ascii_lowercase().as_str() {
            "kss" => Self::kss(parameter),
            "ms" => Self::ms(parameter),
            other => Err(invalid(format!("unknown multiplier variant '{other}'"))),
        }
    }

    pub fn with_dimension(self, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid(format!("dimension must be at least 3, got {n}")));
        }
        Ok(Self { n, ..self })
    }

    pub fn variant(&self) -> &'static str {
        match self.kind {
            MultiplierKind::Kss { .. } => "kss",
            MultiplierKind::Ms { .. } => "ms",
        }
    }

    pub fn parameter(&self) -> f64 {
        match self.kind {
            MultiplierKind::Kss { kappa } => kappa,
            MultiplierKind::Ms { rho } => rho,
        }
    }

    fn nm1(&self) -> f64 {
        self.n as f64 - 1.0
    }

    pub fn f(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        match self.kind {
            MultiplierKind::Kss { kappa } => {
                kappa * r.powf(kappa - 1.0) * (1.0 + r).powf(-kappa - 1.0)
            }
            MultiplierKind::Ms { rho } => rho / (rho + r).powi(2),
        }
    }

    pub fn f_second(&self, r: f64) -> f64 {
        match self.kind {
            MultiplierKind::Kss { kappa } => {
                kappa * r.powf(kappa - 2.0) * (1.0 + r).powf(-kappa - 2.0) * (kappa - 1.0 - 2.0 * r)
            }
            MultiplierKind::Ms { rho } => -2.0 * rho / (rho + r).powi(3),
        }
    }

    /// `(f, f/r, ∂_r(f/r))` for any scalar type.
    pub fn eval<S: Scalar>(&self, r: S) -> (S, S, S) {
        match self.kind {
            MultiplierKind::Kss { kappa } => {
                let one = S::cst(1.0);
                let f = ((r.ln() - (one + r).ln()).scale(kappa)).exp();
                let fr = f / r;
                let fp = f.scale(kappa) / (r * (one + r));
                (f, fr, (fp - fr) / r)
            }
            MultiplierKind::Ms { rho } => {
                let d = S::cst(rho) + r;
                (r / d, S::cst(1.0) / d, -S::cst(1.0) / (d * d))
            }
        }
    }

    /// `Δ(f/r) = r^{1-n} ∂_r(r^{n-2}(f' - f/r))`.
    pub fn laplacian_f_over_r(&self, r: f64) -> f64 {
        match self.kind {
            MultiplierKind::Kss { .. } => {
                let f = self.f(r);
                let fp = self.f_prime(r);
                let q = fp - f / r;
                let qp = self.f_second(r) - fp / r + f / (r * r);
                (self.n as f64 - 2.0) * q / (r * r) + qp / r
            }
            MultiplierKind::Ms { rho } => {
                let n = self.n as f64;
                -((n - 3.0) * r + (n - 1.0) * rho) / (r * (rho + r).powi(3))
            }
        }
    }

    /// `tr π = f' + (n-1) f / r`.
    pub fn trace_pi(&self, r: f64) -> f64 {
        self.f_prime(r) + self.nm1() * self.f(r) / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierScalars {
    pub r: f64,
    pub f: f64,
    pub f_prime: f64,
    pub f_over_r: f64,
    pub d_f_over_r: f64,
    /// `f/r - f'`
    pub gap: f64,
    pub laplacian_f_over_r: f64,
    pub trace_pi: f64,
}

pub fn multiplier_scalars(mf: &MultiplierField, r: f64) -> Result<MultiplierScalars> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("multiplier scalars need r > 0, got {r}")));
    }
    let (f, fr, dfr) = mf.eval(r);
    let fp = mf.f_prime(r);
    Ok(MultiplierScalars {
        r,
        f,
        f_prime: fp,
        f_over_r: fr,
        d_f_over_r: dfr,
        gap: fr - fp,
        laplacian_f_over_r: mf.laplacian_f_over_r(r),
        trace_pi: mf.trace_pi(r),
    })
}

/// Outcome of one inequality over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Samples where both sides agree to rounding.
    pub equalities: usize,
    /// Smallest `(greater - lesser) / max(|greater|, |lesser|)`.
    pub min_margin: f64,
    pub min_margin_at: f64,
    pub first_violation_at: Option<f64>,
}

impl InequalityCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            violations: 0,
            equalities: 0,
            min_margin: f64::INFINITY,
            min_margin_at: f64::NAN,
            first_violation_at: None,
        }
    }

    /// Records `greater ≥ lesser` at `r`.
    fn record(&mut self, r: f64, greater: f64, lesser: f64) {
        let scale = greater.abs().max(lesser.abs());
        let margin = if scale > 0.0 {
            (greater - lesser) / scale
        } else {
            0.0
        };
        self.samples += 1;
        if margin.abs() <= EQUALITY_TOL {
            self.equalities += 1;
        } else if margin < 0.0 || !margin.is_finite() {
            self.violations += 1;
            self.first_violation_at.get_or_insert(r);
        }
        if margin < self.min_margin || self.min_margin_at.is_nan() {
            self.min_margin = margin;
            self.min_margin_at = r;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub variant: String,
    pub parameter: f64,
    pub samples: usize,
    pub skipped: usize,
    pub checks: Vec<InequalityCheck>,
    pub total_violations: usize,
    pub min_margin: f64,
}

/// `n` log-spaced radii in `[a, b]`.
pub fn log_samples(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` equispaced radii covering the band `[ρ/2, ρ]` including both ends.
pub fn band_samples(rho: f64, n: usize) -> Vec<f64> {
    let a = 0.5 * rho;
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (rho - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Checks the lower bound on `f/r - f'` and the upper bound on `Δ(f/r)` for the
/// KSS field, and the four band inequalities for the MS field. MS samples outside
/// `[ρ/2, ρ]` are skipped.
pub fn check_pointwise_inequalities(mf: &MultiplierField, samples: &[f64]) -> ViolationReport {
    let mut skipped = 0;
    let checks = match mf.kind {
        MultiplierKind::Kss { kappa } => {
            let mut gap = InequalityCheck::new("gap_lower_bound");
            let mut lap = InequalityCheck::new("laplacian_upper_bound");
            for &r in samples {
                if !(r > 0.0) {
                    skipped += 1;
                    continue;
                }
                let s = multiplier_scalars(mf, r).expect("r > 0");
                let w = r.powf(kappa - 1.0) * (1.0 + r).powf(-kappa);
                gap.record(r, s.gap, (1.0 - kappa) * w);
                let bound =
                    -kappa * (1.0 - kappa) / (r.powf(3.0 - kappa) * (1.0 + r).powf(2.0 + kappa));
                lap.record(r, bound, s.laplacian_f_over_r);
            }
            vec![gap, lap]
        }
        MultiplierKind::Ms { rho } => {
            let nm1 = mf.nm1();
            let mut c1 = InequalityCheck::new("fprime_lower_bound");
            let mut c2 = InequalityCheck::new("gap_lower_bound");
            let mut c3 = InequalityCheck::new("laplacian_rho_bound");
            let mut c4 = InequalityCheck::new("laplacian_cube_bound");
            for &r in samples {
                if !(r >= 0.5 * rho && r <= rho) {
                    skipped += 1;
                    continue;
                }
                let s = multiplier_scalars(mf, r).expect("r > 0");
                let d = rho + r;
                c1.record(r, s.f_prime, 1.0 / (2.0 * d));
                c2.record(r, s.gap, 1.0 / (3.0 * d));
                let mid = nm1 * rho / (r * d.powi(3));
                c3.record(r, -s.laplacian_f_over_r, mid);
                c4.record(r, mid, nm1 / d.powi(3));
            }
            vec![c1, c2, c3, c4]
        }
    };
    let total_violations = checks.iter().map(|c| c.violations).sum();
    let min_margin = checks
        .iter()
        .map(|c| c.min_margin)
        .fold(f64::INFINITY, f64::min);
    ViolationReport {
        variant: mf.variant().into(),
        parameter: mf.parameter(),
        samples: samples.len() - skipped,
        skipped,
        checks,
        total_violations,
        min_margin,
    }
}

/// `sup r² |∂_r(f/r)|` over the samples.
pub fn flux_weight_constant(mf: &MultiplierField, samples: &[f64]) -> f64 {
    samples
        .iter()
        .filter(|r| **r > 0.0)
        .map(|&r| r * r * mf.eval(r).2.abs())
        .fold(0.0, f64::max)
}

/// Radial coefficient tensor: `h^{00}`, `h^{0a} = h0r x^a/r`,
/// `h^{ab} = hrr x^a x^b / r² + hperp (δ^{ab} - x^a x^b / r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HTensor<S> {
    pub h00: S,
    pub h0r: S,
    pub hrr: S,
    pub hperp: S,
}

impl HTensor<f64> {
    /// `h^{αβ} = diag(0, h, ..., h)`.
    pub fn isotropic(h: f64) -> Self {
        Self {
            h00: 0.0,
            h0r: 0.0,
            hrr: h,
            hperp: h,
        }
    }

    /// Pointwise size used against the coefficient bound.
    pub fn size(&self) -> f64 {
        self.h00.abs() + 2.0 * self.h0r.abs() + self.hrr.abs().max(self.hperp.abs())
    }

    fn seed(&self, d: &HTensor<f64>) -> HTensor<Dual> {
        HTensor {
            h00: Dual::new(self.h00, d.h00),
            h0r: Dual::new(self.h0r, d.h0r),
            hrr: Dual::new(self.hrr, d.hrr),
            hperp: Dual::new(self.hperp, d.hperp),
        }
    }
}

/// Energy-momentum components in the radial frame and the contracted densities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TensorSample<S> {
    pub q00: S,
    pub q0r: S,
    pub qr0: S,
    pub qrr: S,
    pub p0: S,
    pub pr: S,
    pub pbar0: S,
    pub pbarr: S,
}

/// Assembles `Q`, `P` and the modified density `P̄` at one point.
pub fn assemble_densities<S: Scalar>(
    phi: S,
    phi_t: S,
    phi_r: S,
    h: &HTensor<S>,
    mf: &MultiplierField,
    r: S,
) -> Result<TensorSample<S>> {
    let size =
        h.h00.abs_value() + 2.0 * h.h0r.abs_value() + h.hrr.abs_value().max(h.hperp.abs_value());
    if size > COEFF_BOUND_MAX {
        return Err(WaveError::CoefficientBound {
            sup: size,
            limit: COEFF_BOUND_MAX,
        });
    }
    let half = 0.5;
    let (f, fr, dfr) = mf.eval(r);
    let nm1 = mf.nm1();
    // ∂^γφ ∂_γφ and h^{γδ} ∂_γφ ∂_δφ
    let s = phi_r * phi_r - phi_t * phi_t;
    let hs = h.h00 * phi_t * phi_t + (h.h0r * phi_t * phi_r).scale(2.0) + h.hrr * phi_r * phi_r;
    let h0 = h.h00 * phi_t + h.h0r * phi_r;
    let hr = h.h0r * phi_t + h.hrr * phi_r;
    let q00 = phi_t * phi_t + s.scale(half) + h0 * phi_t - hs.scale(half);
    let q0r = phi_t * phi_r + h0 * phi_r;
    let qr0 = phi_r * phi_t - hr * phi_t;
    let qrr = phi_r * phi_r - s.scale(half) - hr * phi_r + hs.scale(half);
    let p0 = f * q0r;
    let pr = f * qrr;
    let pbar0 = p0 + (fr * phi * phi_t).scale(0.5 * nm1) + (fr * h0 * phi).scale(0.5 * nm1);
    let pbarr = pr + (fr * phi * phi_r).scale(0.5 * nm1)
        - (dfr * phi * phi).scale(0.25 * nm1)
        - (fr * hr * phi).scale(0.5 * nm1);
    Ok(TensorSample {
        q00,
        q0r,
        qr0,
        qrr,
        p0,
        pr,
        pbar0,
        pbarr,
    })
}

/// Fields of a scenario at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointData {
    pub phi: PhiJet,
    pub h: HTensor<f64>,
    pub h_t: HTensor<f64>,
    pub h_r: HTensor<f64>,
    pub forcing: f64,
}

/// The remainder `R̄` collecting forcing and coefficient terms.
pub fn remainder(p: &PointData, mf: &MultiplierField, r: f64) -> f64 {
    let nm1 = mf.nm1();
    let (f, fr, _) = mf.eval(r);
    let fp = mf.f_prime(r);
    let j = &p.phi;
    let (h, ht, hr) = (&p.h, &p.h_t, &p.h_r);
    let corr = j.phi_r + 0.5 * nm1 * j.phi / r;
    let big_hr = h.h0r * j.phi_t + h.hrr * j.phi_r;
    let hs = h.h00 * j.phi_t.powi(2) + 2.0 * h.h0r * j.phi_t * j.phi_r + h.hrr * j.phi_r.powi(2);
    let div_h = (ht.h00 + hr.h0r + nm1 * h.h0r / r) * j.phi_t
        + (ht.h0r + hr.hrr + nm1 * (h.hrr - h.hperp) / r) * j.phi_r;
    let dr_hs =
        hr.h00 * j.phi_t.powi(2) + 2.0 * hr.h0r * j.phi_t * j.phi_r + hr.hrr * j.phi_r.powi(2);
    -f * j.phi_r * p.forcing - 0.5 * nm1 * fr * j.phi * p.forcing - f * div_h * corr
        + 0.5 * f * dr_hs
        - fp * big_hr * corr
        + fr * big_hr * corr
        - fr * big_hr * j.phi_r
        + 0.5 * fp * hs
}

/// Right side of the divergence identity for radial fields.
pub fn divergence_rhs(p: &PointData, mf: &MultiplierField, r: f64) -> f64 {
    let j = &p.phi;
    0.5 * mf.f_prime(r) * (j.phi_r.powi(2) + j.phi_t.powi(2))
        - 0.25 * mf.nm1() * mf.laplacian_f_over_r(r) * j.phi.powi(2)
        + remainder(p, mf, r)
}

/// `-∂_t P̄_0 + r^{1-n} ∂_r(r^{n-1} P̄_r)` by forward-mode differentiation.
pub fn divergence_lhs_exact(p: &PointData, mf: &MultiplierField, r: f64) -> Result<f64> {
    let j = &p.phi;
    let st = assemble_densities(
        Dual::new(j.phi, j.phi_t),
        Dual::new(j.phi_t, j.phi_tt),
        Dual::new(j.phi_r, j.phi_tr),
        &p.h.seed(&p.h_t),
        mf,
        Dual::cst(r),
    )?;
    let sr = assemble_densities(
        Dual::new(j.phi, j.phi_r),
        Dual::new(j.phi_t, j.phi_tr),
        Dual::new(j.phi_r, j.phi_rr),
        &p.h.seed(&p.h_r),
        mf,
        Dual::var(r),
    )?;
    Ok(-st.pbar0.d + sr.pbarr.d + mf.nm1() * sr.pbarr.v / r)
}

/// Closed-form fields against which the identity is checked.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// `φ ≡ c`, `h = 0`, `F = 0`.
    Constant { value: f64 },
    /// `φ = e^{-t} e^{-r²}` with `h00 = a₀ e^{-t-r²}`, `h0r = a₁ r e^{-r²}`,
    /// `hrr = a₂ e^{-r²}`, `hperp = a₃ e^{-r²}`, and the forcing that makes the equation hold.
    Manufactured { amplitudes: [f64; 4] },
    /// Free wave from the d'Alembert oracle.
    FreeWave(DataPair),
}

impl Scenario {
    /// `h = c e^{-r²}` in every spatial direction.
    pub fn manufactured(c: f64) -> Self {
        Self::Manufactured {
            amplitudes: [0.0, 0.0, c, c],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Manufactured { .. } => "manufactured",
            Self::FreeWave(_) => "free_wave",
        }
    }

    pub fn point(&self, t: f64, r: f64, n: usize) -> Result<PointData> {
        match self {
            Self::Constant { value } => Ok(PointData {
                phi: PhiJet {
                    phi: *value,
                    ..Default::default()
                },
                ..Default::default()
            }),
            Self::Manufactured {
                amplitudes: [a0, a1, a2, a3],
            } => {
                let e = (-r * r).exp();
                let p = (-t).exp() * e;
                let phi = PhiJet {
                    phi: p,
                    phi_t: -p,
                    phi_r: -2.0 * r * p,
                    phi_tt: p,
                    phi_tr: 2.0 * r * p,
                    phi_rr: (4.0 * r * r - 2.0) * p,
                };
                let h00 = a0 * (-t).exp() * e;
                let h = HTensor {
                    h00,
                    h0r: a1 * r * e,
                    hrr: a2 * e,
                    hperp: a3 * e,
                };
                let h_t = HTensor {
                    h00: -h00,
                    ..Default::default()
                };
                let h_r = HTensor {
                    h00: -2.0 * r * h00,
                    h0r: a1 * e * (1.0 - 2.0 * r * r),
                    hrr: -2.0 * r * h.hrr,
                    hperp: -2.0 * r * h.hperp,
                };
                let nm1 = n as f64 - 1.0;
                let lap = phi.phi_rr + nm1 * phi.phi_r / r;
                let hdd = h.h00 * phi.phi_tt
                    + 2.0 * h.h0r * phi.phi_tr
                    + h.hrr * phi.phi_rr
                    + h.hperp * nm1 * phi.phi_r / r;
                Ok(PointData {
                    phi,
                    h,
                    h_t,
                    h_r,
                    forcing: phi.phi_tt - lap + hdd,
                })
            }
            Self::FreeWave(pair) => {
                if n != 3 {
                    return Err(invalid("the d'Alembert scenario is three-dimensional"));
                }
                Ok(PointData {
                    phi: dalembert_jet(pair, t, r)?,
                    ..Default::default()
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceMethod {
    /// Central differences of the sampled densities.
    Difference,
    /// Forward-mode derivatives of the densities.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub nr: usize,
    pub dr: f64,
    pub dt: f64,
    pub collar: f64,
    pub samples: usize,
    pub max_residual: f64,
    /// Space-time `L²` norm with measure `4π r^{n-1} dr dt`.
    pub l2_residual: f64,
    pub max_at: (f64, f64),
}

/// Residual of the divergence identity on `[0, T] × [collar, r_max]`.
/// The collar defaults to `4 dr`.
pub fn divergence_residual(
    scenario: &Scenario,
    mf: &MultiplierField,
    grid: &RadialGrid,
    t_end: f64,
    method: DivergenceMethod,
    collar: Option<f64>,
) -> Result<ResidualReport> {
    if !(t_end > 0.0) {
        return Err(invalid("the residual needs T > 0"));
    }
    let collar = collar.unwrap_or(4.0 * grid.dr());
    let dr = grid.dr();
    let nr = grid.nr();
    let i_min = ((collar / dr - 1e-9).ceil() as usize).max(1);
    if i_min + 1 >= nr {
        return Err(invalid("collar leaves no interior nodes"));
    }
    let (steps, dt) = grid.steps_to(t_end);
    let steps = steps.max(2);
    let dt = if dt > 0.0 { dt } else { t_end / steps as f64 };
    let time = |k: usize| t_end * k as f64 / steps as f64;
    let n = mf.n;
    let nm1 = mf.nm1();

    type Row = Vec<(f64, f64, f64)>;
    let densities = |k: usize| -> Result<Row> {
        let t = time(k);
        (0..=nr)
            .map(|i| {
                if i + 1 < i_min {
                    return Ok((0.0, 0.0, 0.0));
                }
                let r = grid.r(i);
                let p = scenario.point(t, r, n)?;
                let s = assemble_densities(p.phi.phi, p.phi.phi_t, p.phi.phi_r, &p.h, mf, r)?;
                Ok((s.pbar0, s.pbarr, divergence_rhs(&p, mf, r)))
            })
            .collect()
    };

    let residual_rows: Vec<Vec<(f64, f64)>> = match method {
        DivergenceMethod::Difference => {
            let rows: Vec<Row> = (0..=steps)
                .into_par_iter()
                .map(densities)
                .collect::<Result<_>>()?;
            (1..steps)
                .map(|k| {
                    (i_min..nr)
                        .map(|i| {
                            let r = grid.r(i);
                            let dp0 = (rows[k + 1][i].0 - rows[k - 1][i].0) / (2.0 * dt);
                            let flux = |m: usize| grid.r(m).powi(n as i32 - 1) * rows[k][m].1;
                            let div =
                                (flux(i + 1) - flux(i - 1)) / (2.0 * dr * r.powi(n as i32 - 1));
                            (r, -dp0 + div - rows[k][i].2)
                        })
                        .collect()
                })
                .collect()
        }
        DivergenceMethod::Exact => (1..steps)
            .into_par_iter()
            .map(|k| {
                let t = time(k);
                (i_min..nr)
                    .map(|i| {
                        let r = grid.r(i);
                        let p = scenario.point(t, r, n)?;
                        Ok((
                            r,
                            divergence_lhs_exact(&p, mf, r)? - divergence_rhs(&p, mf, r),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
    };

    let mut max_residual: f64 = 0.0;
    let mut max_at = (0.0, 0.0);
    let mut sum = 0.0;
    let mut samples = 0;
    for (row, k) in residual_rows.iter().zip(1..) {
        for &(r, res) in row {
            let a = res.abs();
            if a > max_residual || a.is_nan() {
                max_residual = a;
                max_at = (time(k), r);
            }
            sum += res * res * r.powf(nm1);
            samples += 1;
        }
    }
    Ok(ResidualReport {
        nr,
        dr,
        dt,
        collar,
        samples,
        max_residual,
        l2_residual: (FOUR_PI * sum * dr * dt).sqrt(),
        max_at,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub variant: String,
    pub parameter: f64,
    pub scenario: String,
    pub method: DivergenceMethod,
    pub levels: Vec<ResidualReport>,
    /// Ratios of consecutive `L²` residuals.
    pub ratios: Vec<f64>,
}

impl RefinementReport {
    pub fn refinement_ratio(&self) -> Option<f64> {
        self.ratios.last().copied()
    }
}

/// Residuals over a sequence of meshes with a collar fixed at `4 dr` of the coarsest.
pub fn refinement_study(
    scenario: &Scenario,
    mf: &MultiplierField,
    r_max: f64,
    nrs: &[usize],
    cfl: f64,
    t_end: f64,
    method: DivergenceMethod,
) -> Result<RefinementReport> {
    let Some(&nr0) = nrs.first() else {
        return Err(invalid("refinement needs at least one mesh"));
    };
    let collar = 4.0 * r_max / nr0 as f64;
    let mut levels = Vec::with_capacity(nrs.len());
    for &nr in nrs {
        let grid = build_grid(r_max, nr, cfl, 0.0)?;
        levels.push(divergence_residual(
            scenario,
            mf,
            &grid,
            t_end,
            method,
            Some(collar),
        )?);
    }
    let ratios = levels
        .windows(2)
        .map(|w| w[0].l2_residual / w[1].l2_residual)
        .collect();
    Ok(RefinementReport {
        variant: mf.variant().into(),
        parameter: mf.parameter(),
        scenario: scenario.name().into(),
        method,
        levels,
        ratios,
    })
}

/// Flat summary written by the identity and inequality drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSummary {
    pub variant: String,
    pub parameter: f64,
    pub samples: usize,
    pub min_margin: f64,
    pub max_residual: f64,
    pub l2_residual: f64,
    pub refinement_ratio: Option<f64>,
}

impl MultiplierSummary {
    pub fn from_parts(
        violations: Option<&ViolationReport>,
        refinement: Option<&RefinementReport>,
    ) -> Self {
        let finest = refinement.and_then(|r| r.levels.last());
        let (variant, parameter) = match (violations, refinement) {
            (Some(v), _) => (v.variant.clone(), v.parameter),
            (None, Some(r)) => (r.variant.clone(), r.parameter),
            (None, None) => (String::new(), f64::NAN),
        };
        Self {
            variant,
            parameter,
            samples: violations
                .map(|v| v.samples)
                .or(finest.map(|f| f.samples))
                .unwrap_or(0),
            min_margin: violations.map_or(f64::NAN, |v| v.min_margin),
            max_residual: finest.map_or(f64::NAN, |f| f.max_residual),
            l2_residual: finest.map_or(f64::NAN, |f| f.l2_residual),
            refinement_ratio: refinement.and_then(|r| r.refinement_ratio()),
        }
    }
}
