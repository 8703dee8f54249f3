//! One-dimensional quadrature rules used by the mollifier, the convolution
//! bound checks and the test oracles.

use std::f64::consts::FRAC_PI_2;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Double-exponential (tanh-sinh) quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` with both endpoint distances
/// computed without cancellation, so integrable endpoint singularities like
/// `(b - x)^{-1/2}` are resolved to near machine precision.
pub fn tanh_sinh(a: f64, b: f64, tol: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let t_max = 4.5;
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // 1 - tanh(|u|) = 2 / (1 + e^{2|u|})
        let comp = 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let (x, dl, dr) = if u >= 0.0 {
            let dr = half * comp;
            (b - dr, 2.0 * half - dr, dr)
        } else {
            let dl = half * comp;
            (a + dl, dl, 2.0 * half - dl)
        };
        if dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let v = f(x, dl, dr);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        let mut fresh = 0.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            fresh += eval(t) + eval(-t);
            k += 2;
        }
        sum += fresh;
        let next = sum * h * half;
        let converged = (next - estimate).abs() <= tol * next.abs().max(1e-300);
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// `tanh_sinh` over consecutive breakpoints.
pub fn tanh_sinh_split(breaks: &[f64], tol: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| tanh_sinh(w[0], w[1], tol, &f))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let gl = GaussLegendre::new(8);
        // exact for degree <= 15
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(0.0, 1.0, 1e-14, |_, dl, _| dl.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        // ∫_0^1 (1-x)^{-1/2} dx = 2 using the right distance
        let v = tanh_sinh(0.0, 1.0, 1e-14, |_, _, dr| dr.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn tanh_sinh_smooth() {
        let v = tanh_sinh(0.0, std::f64::consts::PI, 1e-14, |x, _, _| x.sin());
        assert!((v - 2.0).abs() < 1e-13);
    }
}
