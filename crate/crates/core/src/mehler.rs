//! Model heat kernel of the Folland–Stein operator
//! `ℒ_μ = −½ Σ X_j² − iμ X_0` on the Heisenberg group `H^{2n+1}`, the Mehler
//! factor `G` and the symbol inverse `q_μ`.
//!
//! The kernel is written as the inverse Fourier transform in `x_0`:
//!
//! ```text
//! k_μ(x_0, x', t) = (2π)^{-1} (2πt)^{-n} ∫ e^{i x_0 ξ − μ t ξ} (tξ / sinh tξ)^n
//!                   · exp(−(1/2t) · tξ coth(tξ) · |x'|²) dξ
//! ```
//!
//! With this normalization `∫ k_0(x, t) dx = 1` and `k_μ(0,0,1) = (n+1)! ν(μ)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::special::{ln_cosh, ln_x_over_sinh, tanh_over_x, x_coth};

/// Target for the neglected tails of the Fourier and Laplace integrals.
const TAIL_EPS: f64 = 1e-17;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovectorPoint {
    pub xi0: f64,
    pub xiprime: Vec<f64>,
}

impl CovectorPoint {
    pub fn new(xi0: f64, xiprime: Vec<f64>) -> Result<Self> {
        ensure_finite(&[xi0], "ξ0")?;
        ensure_finite(&xiprime, "ξ'")?;
        Ok(Self { xi0, xiprime })
    }

    /// Parabolic dilation `(s² ξ_0, s ξ')`.
    pub fn dilate(&self, s: f64) -> Self {
        Self {
            xi0: s * s * self.xi0,
            xiprime: self.xiprime.iter().map(|v| s * v).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.xi0 == 0.0 && self.xiprime.iter().all(|&v| v == 0.0)
    }
}

/// Per-coordinate curvature `σ_k` of `|L|` in normal-form coordinates:
/// `λ_j` on coordinates `j` and `n + j`, zero on the remaining `d − 2n`.
fn abs_levi_diagonal(lambdas: &[f64], d: usize) -> Result<Vec<f64>> {
    let n = lambdas.len();
    if 2 * n > d {
        return Err(Error::InvalidInput(format!("need 2n <= d, got n={n}, d={d}")));
    }
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("λ_j must be positive and finite".into()));
    }
    let mut sigma = vec![0.0; d];
    for (j, &l) in lambdas.iter().enumerate() {
        sigma[j] = l;
        sigma[n + j] = l;
    }
    Ok(sigma)
}

fn ln_mehler_g(lambdas: &[f64], sigma: &[f64], xi: &CovectorPoint, t: f64) -> f64 {
    let s = t * xi.xi0.abs();
    let ln_det: f64 = lambdas.iter().map(|&l| ln_cosh(s * l)).sum();
    let quad: f64 = sigma
        .iter()
        .zip(&xi.xiprime)
        .map(|(&sg, &v)| tanh_over_x(s * sg) * v * v)
        .sum();
    -ln_det - t * quad
}

/// `det^{-1/2} cosh(t|ξ_0||L|) · exp(−t ⟨tanh(t|ξ_0||L|)/(t|ξ_0||L|) ξ', ξ'⟩)`
/// with `L` in normal form with generators `λ` on a rank-`d` bundle.
pub fn mehler_g(lambdas: &[f64], d: usize, xi: &CovectorPoint, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be finite and >= 0, got {t}")));
    }
    let sigma = abs_levi_diagonal(lambdas, d)?;
    if xi.xiprime.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: xi.xiprime.len(),
        });
    }
    Ok(ln_mehler_g(lambdas, &sigma, xi, t).exp())
}

/// Value of `q_μ` with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolValue {
    pub value: Complex64,
    pub error: f64,
}

/// `q_μ(ξ) = ∫_0^∞ e^{−tμξ_0} G(ξ, t) dt` for `|Re μ| < Σ λ_j`.
///
/// The time variable is rescaled by the parabolic size `|ξ_0| + |ξ'|²`, so
/// the quadrature sees the same integrand at `ξ` and at `s.ξ`.
pub fn symbol_inverse_q(lambdas: &[f64], d: usize, mu: Complex64, xi: &CovectorPoint) -> Result<SymbolValue> {
    let sigma = abs_levi_diagonal(lambdas, d)?;
    if xi.xiprime.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: xi.xiprime.len(),
        });
    }
    if !mu.re.is_finite() || !mu.im.is_finite() {
        return Err(Error::NonFinite("μ"));
    }
    let half_trace: f64 = lambdas.iter().sum();
    if mu.re.abs() >= half_trace {
        return Err(Error::Precondition(format!(
            "|Re μ| = {} must be below ½Tr|L| = {half_trace} for the Laplace integral to converge",
            mu.re.abs()
        )));
    }
    if xi.is_zero() {
        return Err(Error::InvalidInput("q_μ is not defined at ξ = 0".into()));
    }

    let r2_zero: f64 = sigma
        .iter()
        .zip(&xi.xiprime)
        .filter(|(&s, _)| s == 0.0)
        .map(|(_, v)| v * v)
        .sum();
    let r2: f64 = xi.xiprime.iter().map(|v| v * v).sum();
    let scale = xi.xi0.abs() + r2;

    // integrand in the rescaled time τ = t·scale
    let f = |tau: f64| -> Complex64 {
        let t = tau / scale;
        let ln_g = ln_mehler_g(lambdas, &sigma, xi, t);
        let z = Complex64::new(ln_g, 0.0) - mu * (t * xi.xi0);
        z.exp() / scale
    };
    // asymptotic decay rate in τ
    let rate = if xi.xi0 != 0.0 {
        (xi.xi0.abs() * half_trace + mu.re * xi.xi0 + r2_zero) / scale
    } else {
        1.0
    };
    let tail_span = 1.0 / rate;
    let mut upper = 1.0;
    while f(upper).norm() * scale * upper.max(tail_span) > TAIL_EPS && upper < 1e8 {
        upper *= 2.0;
    }
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        initial_panels: 16,
        max_panels: 20_000,
    };
    let res = integrate(f, 0.0, upper, opts);
    if !res.converged {
        return Err(Error::Quadrature {
            value: res.value.norm(),
            error: res.error,
        });
    }
    Ok(SymbolValue {
        value: res.value,
        error: res.error + TAIL_EPS / scale,
    })
}

/// A point where the model heat kernel is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatQuery {
    pub n: usize,
    pub mu: Complex64,
    pub x0: f64,
    pub xprime: Vec<f64>,
    pub t: f64,
}

impl HeatQuery {
    pub fn new(n: usize, mu: Complex64, x0: f64, xprime: Vec<f64>, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if xprime.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: xprime.len(),
            });
        }
        ensure_finite(&[x0, t, mu.re, mu.im], "heat query")?;
        ensure_finite(&xprime, "x'")?;
        if t <= 0.0 {
            return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
        }
        if mu.re.abs() >= n as f64 {
            return Err(Error::Precondition(format!(
                "|Re μ| = {} must be below n = {n}",
                mu.re.abs()
            )));
        }
        Ok(Self {
            n,
            mu,
            x0,
            xprime,
            t,
        })
    }

    /// The origin `(0, 0)` at time `t`.
    pub fn origin(n: usize, mu: Complex64, t: f64) -> Result<Self> {
        Self::new(n, mu, 0.0, vec![0.0; 2 * n], t)
    }

    pub fn with_real_mu(n: usize, mu: f64, x0: f64, xprime: Vec<f64>, t: f64) -> Result<Self> {
        Self::new(n, Complex64::new(mu, 0.0), x0, xprime, t)
    }

    fn radius_sq(&self) -> f64 {
        self.xprime.iter().map(|v| v * v).sum()
    }

    /// The parabolically dilated query `(s² x_0, s x', s² t)`.
    pub fn dilate(&self, s: f64) -> Result<Self> {
        Self::new(
            self.n,
            self.mu,
            s * s * self.x0,
            self.xprime.iter().map(|v| s * v).collect(),
            s * s * self.t,
        )
    }
}

/// The `ξ_0`-integrand of the kernel, including every normalization factor,
/// so that `k_μ = ∫_ℝ heat_integrand(q, ξ) dξ`.
pub fn heat_integrand(q: &HeatQuery, xi0: f64) -> Complex64 {
    let n = q.n as f64;
    let t = q.t;
    let s = t * xi0;
    let two_pi = std::f64::consts::TAU;
    let ln_mod = n * ln_x_over_sinh(s) - x_coth(s) * q.radius_sq() / (2.0 * t) - n * (two_pi * t).ln() - two_pi.ln();
    (Complex64::new(ln_mod, q.x0 * xi0) - q.mu * s).exp()
}

/// Kernel value with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatValue {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

/// Cut-off `S` in the rescaled variable `s = tξ` such that the two tails of
/// `∫ (s/sinh s)^n e^{|Re μ| s} ds` beyond `S` stay under [`TAIL_EPS`].
pub(crate) fn fourier_cutoff(n: usize, mu_re_abs: f64, r: f64) -> f64 {
    let n_f = n as f64;
    let delta = n_f - mu_re_abs + r;
    // (s/sinh s)^n ≤ (2s)^n e^{-ns} / (1 − e^{-2})^n for s ≥ 1
    let c = (1.0 - (-2.0f64).exp()).powf(-n_f);
    let tail = |s: f64| 2.0 * c * (2.0 * s).powf(n_f) * (-delta * s).exp() / delta * (1.0 + n_f / (delta * s));
    let mut s = 8.0;
    while tail(s) > TAIL_EPS {
        s *= 1.25;
    }
    s
}

/// Folland–Stein heat kernel `k_μ(x_0, x', t)`.
pub fn heat_kernel_fs(q: &HeatQuery) -> Result<HeatValue> {
    let t = q.t;
    let r = q.radius_sq() / (2.0 * t);
    let upper = fourier_cutoff(q.n, q.mu.re.abs(), r);
    // oscillation e^{i (x_0/t) s}: keep several panels per period
    let omega = (q.x0 / t).abs();
    let periods = omega * upper / std::f64::consts::TAU;
    let initial_panels = (16.0 + 2.0 * periods).min(4096.0) as usize;
    let f = |s: f64| {
        let xi = s / t;
        (heat_integrand(q, xi) + heat_integrand(q, -xi)) * (1.0 / t)
    };
    // natural size of the kernel near the origin at time t
    let scale = (2.0 * std::f64::consts::PI * t).powi(q.n as i32 + 1).recip();
    let floor = TAIL_EPS * scale;
    // Far from the origin the integral is a cancellation of O(scale) terms,
    // so its absolute accuracy is limited to a small multiple of scale.
    let opts = QuadOptions {
        abs_tol: 1e-15 * scale,
        rel_tol: 1e-13,
        initial_panels,
        max_panels: 50_000,
    };
    let res = integrate(f, 0.0, upper, opts);
    if !res.converged && res.error > (1e-10 * res.value.norm()).max(1e-13 * scale) {
        return Err(Error::Quadrature {
            value: res.value.norm(),
            error: res.error,
        });
    }
    Ok(HeatValue {
        value: res.value,
        error: res.error + floor,
        panels: res.panels,
    })
}
