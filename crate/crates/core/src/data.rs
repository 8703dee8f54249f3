//! Radial data pairs `(f, g)`, their Sobolev norms and rescaling.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WaveError};
use crate::grid::{radial_derivatives, RadialGrid};
use crate::io::fmt_f64;

/// Base shape of a test profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `e^{-s²}`
    Gaussian,
    /// `exp(1 - 1/(1 - s²))` on `|s| < 1`, peak value 1.
    Bump,
    /// `e^{-s²} cos(π s)`
    Ripple,
}

impl FromStr for ProfileKind {
    type Err = WaveError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "bump" => Ok(Self::Bump),
            "ripple" => Ok(Self::Ripple),
            other => Err(invalid(format!("unknown profile kind `{other}`"))),
        }
    }
}

impl ProfileKind {
    /// `(b, b', b'')` of the base shape.
    fn jet(self, s: f64) -> (f64, f64, f64) {
        match self {
            Self::Gaussian => {
                let e = (-s * s).exp();
                (e, -2.0 * s * e, (4.0 * s * s - 2.0) * e)
            }
            Self::Bump => {
                if s.abs() >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let q = 1.0 - s * s;
                let b = (1.0 - 1.0 / q).exp();
                let p1 = -2.0 * s / (q * q);
                let p2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
                (b, p1 * b, (p2 + p1 * p1) * b)
            }
            Self::Ripple => {
                let e = (-s * s).exp();
                let (sn, cs) = (std::f64::consts::PI * s).sin_cos();
                let pi = std::f64::consts::PI;
                (
                    e * cs,
                    e * (-2.0 * s * cs - pi * sn),
                    e * ((4.0 * s * s - 2.0 - pi * pi) * cs + 4.0 * pi * s * sn),
                )
            }
        }
    }

    /// Radius beyond which the shape is negligible (below ~1e-16) or zero.
    fn reach(self) -> f64 {
        match self {
            Self::Bump => 1.0,
            _ => 6.1,
        }
    }
}

/// `A/2 [b((r - c)/w) + b((r + c)/w)]`, even in `r` and smooth at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Profile {
    pub fn new(kind: ProfileKind, amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(invalid(format!(
                "profile width must be positive, got {width}"
            )));
        }
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(invalid("profile parameters must be finite"));
        }
        Ok(Self {
            kind,
            amplitude,
            center,
            width,
        })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(ProfileKind::Gaussian, amplitude, 0.0, width)
    }

    /// Value and first two radial derivatives.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        let w = self.width;
        let (a0, a1, a2) = self.kind.jet((r - self.center) / w);
        let (b0, b1, b2) = self.kind.jet((r + self.center) / w);
        let k = 0.5 * self.amplitude;
        (k * (a0 + b0), k * (a1 + b1) / w, k * (a2 + b2) / (w * w))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).0
    }

    /// Radius of the (numerical) support.
    pub fn support_radius(&self) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.center.abs() + self.kind.reach() * self.width
    }
}

/// A radial function sampled on a grid, optionally backed by a scaled analytic profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub values: Vec<f64>,
    analytic: Option<(Profile, f64)>,
    dr: f64,
}

impl RadialFunction {
    pub fn from_profile(profile: Profile, grid: &RadialGrid) -> Self {
        let values = grid.nodes().iter().map(|&r| profile.value(r)).collect();
        Self {
            values,
            analytic: Some((profile, 1.0)),
            dr: grid.dr(),
        }
    }

    pub fn sampled(values: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            values,
            analytic: None,
            dr: grid.dr(),
        })
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            analytic: None,
            dr: grid.dr(),
        }
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn profile(&self) -> Option<(Profile, f64)> {
        self.analytic
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            analytic: self.analytic.map(|(p, s)| (p, s * c)),
            dr: self.dr,
        }
    }

    /// `self + c · other`; the result is analytic only if `other` vanishes.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        let analytic = if c == 0.0 || other.values.iter().all(|v| *v == 0.0) {
            self.analytic
        } else {
            None
        };
        Self {
            values,
            analytic,
            dr: self.dr,
        }
    }

    /// Value and first two derivatives at an arbitrary radius.
    ///
    /// Sampled functions use the cubic through the four nearest nodes, with the
    /// even reflection at the origin and zero beyond the last node.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        let r = r.abs();
        if let Some((p, s)) = self.analytic {
            let (a, b, c) = p.jet(r);
            return (s * a, s * b, s * c);
        }
        let n = self.values.len();
        let x = r / self.dr;
        let i = x.floor() as isize;
        if i as usize >= n - 1 {
            return (0.0, 0.0, 0.0);
        }
        let at = |k: isize| -> f64 {
            let k = k.unsigned_abs();
            self.values.get(k).copied().unwrap_or(0.0)
        };
        let s = x - i as f64;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Lagrange cubic on nodes -1, 0, 1, 2
        let l0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let l1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let l2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let l3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        let d0 = -(3.0 * s * s - 6.0 * s + 2.0) / 6.0;
        let d1 = (3.0 * s * s - 4.0 * s - 1.0) / 2.0;
        let d2 = -(3.0 * s * s - 2.0 * s - 2.0) / 2.0;
        let d3 = (3.0 * s * s - 1.0) / 6.0;
        let e0 = -(s - 1.0);
        let e1 = 3.0 * s - 2.0;
        let e2 = -(3.0 * s - 1.0);
        let e3 = s;
        let v = p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3;
        let dv = (p0 * d0 + p1 * d1 + p2 * d2 + p3 * d3) / self.dr;
        let ddv = (p0 * e0 + p1 * e1 + p2 * e2 + p3 * e3) / (self.dr * self.dr);
        (v, dv, ddv)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).0
    }

    pub fn support_radius(&self) -> f64 {
        if let Some((p, s)) = self.analytic {
            if s == 0.0 {
                return 0.0;
            }
            return p.support_radius();
        }
        let last = self.values.iter().rposition(|v| v.abs() > 1e-300);
        last.map_or(0.0, |i| (i + 1) as f64 * self.dr)
    }
}

/// Which analytic profiles a pair was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDescriptor {
    pub f: Profile,
    pub g: Profile,
}

/// Initial data `φ(0) = f`, `∂_t φ(0) = g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPair {
    pub grid: RadialGrid,
    pub f: RadialFunction,
    pub g: RadialFunction,
    pub descriptor: Option<PairDescriptor>,
}

/// Parameters of the test-data families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    /// Amplitude of `g`, which has the same shape as `f`.
    pub g_amplitude: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
            g_amplitude: 0.0,
        }
    }
}

/// Builds a pair from a named family.
pub fn profile(kind: &str, params: ProfileParams, grid: &RadialGrid) -> Result<DataPair> {
    let kind: ProfileKind = kind.parse()?;
    let f = Profile::new(kind, params.amplitude, params.center, params.width)?;
    let g = Profile::new(kind, params.g_amplitude, params.center, params.width)?;
    Ok(DataPair::from_profiles(f, g, grid))
}

impl DataPair {
    pub fn from_profiles(f: Profile, g: Profile, grid: &RadialGrid) -> Self {
        Self {
            grid: *grid,
            f: RadialFunction::from_profile(f, grid),
            g: RadialFunction::from_profile(g, grid),
            descriptor: Some(PairDescriptor { f, g }),
        }
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self {
            grid: *grid,
            f: RadialFunction::zeros(grid),
            g: RadialFunction::zeros(grid),
            descriptor: None,
        }
    }

    pub fn sampled(f: Vec<f64>, g: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        Ok(Self {
            grid: *grid,
            f: RadialFunction::sampled(f, grid)?,
            g: RadialFunction::sampled(g, grid)?,
            descriptor: None,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            f: self.f.scaled(c),
            g: self.g.scaled(c),
            descriptor: self.descriptor,
        }
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &DataPair) -> Result<Self> {
        if other.grid != self.grid {
            return Err(invalid("pairs live on different grids"));
        }
        let f = self.f.axpy(c, &other.f);
        let g = self.g.axpy(c, &other.g);
        let descriptor = if f.is_analytic() && g.is_analytic() {
            self.descriptor
        } else {
            None
        };
        Ok(Self {
            grid: self.grid,
            f,
            g,
            descriptor,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.f
            .values
            .iter()
            .chain(&self.g.values)
            .all(|v| *v == 0.0)
    }

    pub fn support_radius(&self) -> f64 {
        self.f.support_radius().max(self.g.support_radius())
    }

    /// Writes columns `r, f, g`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "f", "g"])?;
        for (i, r) in self.grid.nodes().iter().enumerate() {
            w.write_record([
                fmt_f64(*r),
                fmt_f64(self.f.values[i]),
                fmt_f64(self.g.values[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sobolev norms of a pair in `L²(ℝ³)` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub l2_f: f64,
    /// `‖∇f‖`
    pub h1dot_f: f64,
    /// `‖∇²f‖`
    pub h2dot_f: f64,
    /// `‖∇f‖_{H¹}`
    pub h1_grad_f: f64,
    pub l2_g: f64,
    pub h1dot_g: f64,
    /// `‖g‖_{H¹}`
    pub h1_g: f64,
    /// `‖∇f‖_{H¹} + ‖g‖_{H¹}`
    pub epsilon: f64,
}

impl NormRecord {
    /// `‖∇f‖² + ‖g‖²`
    pub fn energy_data(&self) -> f64 {
        self.h1dot_f.powi(2) + self.l2_g.powi(2)
    }

    /// `‖∂φ(0)‖_{H¹} = (‖∇f‖²_{H¹} + ‖g‖²_{H¹})^{1/2}`
    pub fn h1_of_gradient(&self) -> f64 {
        (self.h1_grad_f.powi(2) + self.h1_g.powi(2)).sqrt()
    }

    /// `‖∇f‖ + ‖g‖`, the `Ḣ¹ × L²` size.
    pub fn energy_size(&self) -> f64 {
        self.h1dot_f + self.l2_g
    }
}

pub fn sobolev_norms(pair: &DataPair, grid: &RadialGrid) -> Result<NormRecord> {
    grid.check_len(pair.f.values.len())?;
    grid.check_len(pair.g.values.len())?;
    let (f1, f2) = radial_derivatives(&pair.f.values, grid)?;
    let (g1, _) = radial_derivatives(&pair.g.values, grid)?;
    let hess = crate::grid::hessian_frobenius_sq(&f1, &f2, grid)?;
    let l2_f = grid.l2(&pair.f.values);
    let h1dot_f = grid.l2(&f1);
    let weighted: Vec<f64> = hess
        .iter()
        .enumerate()
        .map(|(i, h)| grid.r(i).powi(2) * h)
        .collect();
    let h2dot_f = (4.0 * std::f64::consts::PI * grid.trapezoid(&weighted)).sqrt();
    let l2_g = grid.l2(&pair.g.values);
    let h1dot_g = grid.l2(&g1);
    let h1_grad_f = (h1dot_f * h1dot_f + h2dot_f * h2dot_f).sqrt();
    let h1_g = (l2_g * l2_g + h1dot_g * h1dot_g).sqrt();
    Ok(NormRecord {
        l2_f,
        h1dot_f,
        h2dot_f,
        h1_grad_f,
        l2_g,
        h1dot_g,
        h1_g,
        epsilon: h1_grad_f + h1_g,
    })
}

/// Rescales so that `‖∇f‖_{H¹} + ‖g‖_{H¹} = eps_target`.
pub fn scale_to_epsilon(pair: &DataPair, grid: &RadialGrid, eps_target: f64) -> Result<DataPair> {
    if !(eps_target >= 0.0) || !eps_target.is_finite() {
        return Err(invalid(format!(
            "eps_target must be nonnegative, got {eps_target}"
        )));
    }
    let eps = sobolev_norms(pair, grid)?.epsilon;
    if !(eps > 0.0) {
        return Err(WaveError::CannotScale);
    }
    Ok(pair.scaled(eps_target / eps))
}
