//! Representation-side spectra of model sublaplacians and heat values at the
//! origin computed from the Plancherel formula.
//!
//! In the Schrödinger representation with parameter `λ ≠ 0` the model
//! operator `ℒ_μ` acts with eigenvalues `e_m(λ; μ) = λ² (m + n/2 + (μ/2) sgn λ)`
//! on a level of multiplicity `binom(m+n−1, n−1)`. A product of `k` commuting
//! factors has eigenvalues `λ^{2k} ∏_j a_m(μ_j)`, and with the weight
//! `|λ|^{2n+1}` the `λ`-integral of the heat trace separates:
//!
//! ```text
//! K(0,t) = C_n · J_{n,k} · Σ_± Σ_m mult(m) · (t ∏_j a_m(±μ_j))^{−(n+1)/k}
//! J_{n,k} = ∫_0^∞ u^{2n+1} e^{−u^{2k}} du
//! ```
//!
//! `C_n` is fixed once per `n` by matching the Mehler kernel at `μ = 0`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levi::{complex_eigenvalues, symplectic_spectrum, LeviForm, MEMBERSHIP_TOL};
use crate::mehler::{heat_kernel_fs, HeatQuery};
use crate::quad::{integrate, QuadOptions};
use crate::special::{binomial, level_multiplicity};

/// Product `∏_j ℒ_{μ_j}` of commuting Folland–Stein operators on `H^{2n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelOperatorSpec {
    pub n: usize,
    pub factors: Vec<Complex64>,
}

impl ModelOperatorSpec {
    pub fn new(n: usize, factors: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if factors.is_empty() {
            return Err(Error::InvalidInput("a model operator needs at least one factor".into()));
        }
        if factors.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("factor list"));
        }
        Ok(Self { n, factors })
    }

    pub fn real(n: usize, factors: &[f64]) -> Result<Self> {
        Self::new(n, factors.iter().map(|&m| Complex64::new(m, 0.0)).collect())
    }

    /// Heisenberg order `2k`.
    pub fn order(&self) -> usize {
        2 * self.factors.len()
    }

    /// Level coefficient `∏_j (m + n/2 + sign·μ_j/2)` at a real level `m`.
    pub fn level_product(&self, m: f64, sign: f64) -> Complex64 {
        let base = m + 0.5 * self.n as f64;
        self.factors
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &mu| acc * (base + 0.5 * sign * mu))
    }
}

/// `(e_m(λ; μ), multiplicity)` for `m = 0..=m_max`.
pub fn rep_eigenvalues(n: usize, mu: Complex64, lambda: f64, m_max: usize) -> Result<Vec<(Complex64, usize)>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput("the representation parameter λ must be finite and nonzero".into()));
    }
    let sign = lambda.signum();
    let l2 = lambda * lambda;
    Ok((0..=m_max)
        .map(|m| {
            let e = (mu * (0.5 * sign) + (m as f64 + 0.5 * n as f64)) * l2;
            let mult = binomial((m + n - 1) as i64, (n - 1) as i64) as usize;
            (e, mult)
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct PlancherelOptions {
    /// Levels summed exactly before the Euler–Maclaurin tail takes over.
    pub m_max: usize,
    /// Initial Gauss–Legendre panels for the `λ` integral.
    pub lambda_panels: usize,
}

impl Default for PlancherelOptions {
    fn default() -> Self {
        Self {
            m_max: 512,
            lambda_panels: 8,
        }
    }
}

/// Heat value with an error estimate and the truncation actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlancherelValue {
    pub value: Complex64,
    pub error: f64,
    pub m_max: usize,
    pub lambda_panels: usize,
    pub calibration: f64,
}

/// `J_{n,k} = ∫_0^∞ u^{2n+1} e^{−u^{2k}} du` by adaptive quadrature on a
/// truncated range; returns `(value, error, panels)`.
pub fn lambda_integral(n: usize, k: usize, initial_panels: usize) -> (f64, f64, usize) {
    let p = (2 * n + 1) as f64;
    let q = (2 * k) as i32;
    let f = |u: f64| (p * u.ln() - u.powi(q)).exp();
    // the tail beyond U is below U^{2n+1} e^{−U^{2k}} / (2k U^{2k−1} − (2n+1)/U)
    let mut upper: f64 = 2.0;
    loop {
        let denom = 2.0 * k as f64 * upper.powi(q - 1) - p / upper;
        if denom > 0.0 && f(upper) / denom < 1e-18 {
            break;
        }
        upper *= 1.1;
    }
    let opts = QuadOptions {
        abs_tol: 1e-18,
        rel_tol: 1e-14,
        initial_panels: initial_panels.max(1),
        max_panels: 10_000,
    };
    let res = integrate(f, 0.0, upper, opts);
    (res.value, res.error + 1e-18, res.panels)
}

struct LevelSum {
    value: Complex64,
    error: f64,
}

/// `Σ_± Σ_m mult(m) (t P_m^±)^{−(n+1)/k}` with the tail past `m_max`
/// replaced by its Euler–Maclaurin expansion.
fn level_sum(spec: &ModelOperatorSpec, t: f64, m_max: usize) -> Result<LevelSum> {
    let n = spec.n;
    let k = spec.factors.len();
    let power = -((n + 1) as f64) / k as f64;
    let big_m = m_max.max(64);

    // positivity of every level product, then a check that the arguments
    // can only shrink beyond the exact range
    for sign in [1.0, -1.0] {
        for m in 0..=big_m {
            let p = spec.level_product(m as f64, sign);
            if p.norm() == 0.0 || p.re <= 0.0 {
                return Err(Error::NonPositiveSpectrum {
                    m,
                    sign: sign as i8,
                    detail: format!("level product {:.6} + {:.6}i has non-positive real part", p.re, p.im),
                });
            }
        }
        let base = big_m as f64 + 0.5 * n as f64;
        let arg_sum: f64 = spec
            .factors
            .iter()
            .map(|&mu| {
                let a = base + 0.5 * sign * mu;
                if a.re <= 0.0 {
                    f64::INFINITY
                } else {
                    a.arg().abs()
                }
            })
            .sum();
        if arg_sum >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidInput(format!(
                "m_max = {big_m} too small to certify positivity of the remaining levels"
            )));
        }
    }

    let g = |x: f64| -> Complex64 {
        let mult = level_multiplicity(x, n);
        [1.0, -1.0]
            .iter()
            .map(|&s| (spec.level_product(x, s) * t).powf(power) * mult)
            .sum()
    };

    let mut direct = Complex64::new(0.0, 0.0);
    for m in 0..big_m {
        direct += g(m as f64);
    }

    let mf = big_m as f64;
    let tail_opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        initial_panels: 4,
        max_panels: 2_000,
    };
    let integral = integrate(|u: f64| g(mf / u) * (mf / (u * u)), 0.0, 1.0, tail_opts);
    let d1_at = |h: f64| (g(mf - 2.0 * h) - g(mf - h) * 8.0 + g(mf + h) * 8.0 - g(mf + 2.0 * h)) / (12.0 * h);
    let h1 = mf / 32.0;
    let d1 = d1_at(h1);
    let d1_half = d1_at(0.5 * h1);
    let h3 = mf / 16.0;
    let d3 = (g(mf + 2.0 * h3) - g(mf + h3) * 2.0 + g(mf - h3) * 2.0 - g(mf - 2.0 * h3)) / (2.0 * h3.powi(3));
    let value = direct + integral.value + g(mf) * 0.5 - d1_half / 12.0 + d3 / 720.0;

    // For these power-law tails the next Euler–Maclaurin term is far below
    // the third-derivative one, so that term doubles as the bound.
    let error = (d3 / 720.0).norm()
        + (d1 - d1_half).norm() / 12.0
        + integral.error
        + 1e-14 * value.norm();
    Ok(LevelSum { value, error })
}

fn raw_heat_value(spec: &ModelOperatorSpec, t: f64, opts: PlancherelOptions) -> Result<(Complex64, f64, usize)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let (j, j_err, panels) = lambda_integral(spec.n, spec.factors.len(), opts.lambda_panels);
    let sum = level_sum(spec, t, opts.m_max)?;
    let value = sum.value * j;
    let error = sum.error * j + sum.value.norm() * j_err;
    Ok((value, error, panels))
}

/// Calibration of the Plancherel normalization against the Mehler kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub n: usize,
    /// `C_n = k_0(0,0,1) / raw Plancherel sum`.
    pub constant: f64,
    /// The value `(2π)^{−(n+1)}` the constant should reproduce.
    pub expected: f64,
    pub mehler_value: f64,
}

impl Calibration {
    pub fn relative_deviation(&self) -> f64 {
        (self.constant / self.expected - 1.0).abs()
    }
}

/// Fits `C_n` on the single factor `μ = 0` at `t = 1`; nothing else is used.
pub fn calibrate(n: usize) -> Result<Calibration> {
    let mehler = heat_kernel_fs(&HeatQuery::origin(n, Complex64::new(0.0, 0.0), 1.0)?)?;
    let spec = ModelOperatorSpec::real(n, &[0.0])?;
    let (raw, _, _) = raw_heat_value(&spec, 1.0, PlancherelOptions::default())?;
    Ok(Calibration {
        n,
        constant: mehler.value.re / raw.re,
        expected: std::f64::consts::TAU.powi(-(n as i32 + 1)),
        mehler_value: mehler.value.re,
    })
}

/// Cached [`calibrate`].
pub fn calibration(n: usize) -> Result<Calibration> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Calibration>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(c) = cache.lock().expect("calibration cache poisoned").get(&n) {
        return Ok(*c);
    }
    let c = calibrate(n)?;
    cache.lock().expect("calibration cache poisoned").insert(n, c);
    Ok(c)
}

/// `K(0, t)` for the heat semigroup of the product operator.
pub fn heat_value_at_origin(spec: &ModelOperatorSpec, t: f64) -> Result<PlancherelValue> {
    heat_value_at_origin_with(spec, t, PlancherelOptions::default())
}

pub fn heat_value_at_origin_with(spec: &ModelOperatorSpec, t: f64, opts: PlancherelOptions) -> Result<PlancherelValue> {
    let cal = calibration(spec.n)?;
    let (raw, err, panels) = raw_heat_value(spec, t, opts)?;
    Ok(PlancherelValue {
        value: raw * cal.constant,
        error: err * cal.constant,
        m_max: opts.m_max.max(64),
        lambda_panels: panels,
        calibration: cal.constant,
    })
}

/// Where an eigenvalue of `μ` makes a representation eigenvalue vanish.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocklandWitness {
    pub eigenvalue: Complex64,
    /// Total level `|α|` of the harmonic-oscillator state.
    pub m: usize,
    pub alpha: Vec<usize>,
    /// Sign of the representation parameter.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocklandReport {
    pub holds: bool,
    pub witness: Option<RocklandWitness>,
    /// Oscillator levels inspected.
    pub levels_checked: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RocklandOptions {
    /// Budget of oscillator levels per eigenvalue.
    pub max_levels: usize,
}

impl Default for RocklandOptions {
    fn default() -> Self {
        Self { max_levels: 1_000_000 }
    }
}

struct Level {
    energy: f64,
    alpha: Vec<usize>,
    /// Smallest index that may still be incremented, so every multi-index
    /// is generated once.
    first: usize,
}

impl PartialEq for Level {
    fn eq(&self, other: &Self) -> bool {
        self.energy == other.energy
    }
}
impl Eq for Level {}
impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Level {
    fn cmp(&self, other: &Self) -> Ordering {
        other.energy.total_cmp(&self.energy)
    }
}

/// Injectivity of the model sublaplacian in every nontrivial irreducible
/// representation of the tangent group.
///
/// On the Schrödinger representations the operator reduces to
/// `Σ λ_j(−∂_j² + ξ_j²) ± (|ξ''|² + μ)`; it fails to be injective exactly when
/// some eigenvalue `z` of `μ` satisfies `z = ∓E` for an oscillator energy
/// `E = Σ λ_j(2α_j + 1)` (or any `E ≥ Σλ_j` when there are extra abelian
/// directions). Energies are enumerated in increasing order.
pub fn rockland_scan(l: &LeviForm, mu: &DMatrix<Complex64>, opts: RocklandOptions) -> Result<RocklandReport> {
    let spec = symplectic_spectrum(l)?;
    let rank_full = spec.rank == l.dim();
    let c = spec.half_trace();
    let eigenvalues = complex_eigenvalues(mu)?;
    let mut levels_checked = 0;

    for z in eigenvalues {
        if z.im.abs() > MEMBERSHIP_TOL {
            continue;
        }
        let target = z.re.abs();
        let sign: i8 = if z.re > 0.0 { -1 } else { 1 };
        if !rank_full {
            levels_checked += 1;
            if target >= c - MEMBERSHIP_TOL {
                return Ok(RocklandReport {
                    holds: false,
                    witness: Some(RocklandWitness {
                        eigenvalue: z,
                        m: 0,
                        alpha: vec![0; spec.n()],
                        sign,
                    }),
                    levels_checked,
                });
            }
            continue;
        }
        let mut heap = BinaryHeap::new();
        heap.push(Level {
            energy: c,
            alpha: vec![0; spec.n()],
            first: 0,
        });
        while let Some(level) = heap.pop() {
            levels_checked += 1;
            if level.energy > target + MEMBERSHIP_TOL {
                break;
            }
            if (level.energy - target).abs() <= MEMBERSHIP_TOL {
                return Ok(RocklandReport {
                    holds: false,
                    witness: Some(RocklandWitness {
                        eigenvalue: z,
                        m: level.alpha.iter().sum(),
                        alpha: level.alpha,
                        sign,
                    }),
                    levels_checked,
                });
            }
            if levels_checked >= opts.max_levels {
                return Err(Error::InvalidInput(format!(
                    "oscillator level budget {} exhausted below |z| = {target}",
                    opts.max_levels
                )));
            }
            for j in level.first..spec.n() {
                let mut alpha = level.alpha.clone();
                alpha[j] += 1;
                heap.push(Level {
                    energy: level.energy + 2.0 * spec.lambdas[j],
                    alpha,
                    first: j,
                });
            }
        }
    }
    Ok(RocklandReport {
        holds: true,
        witness: None,
        levels_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levi::sublaplacian_condition;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn lambda_integral_matches_gamma() {
        for n in 1..4 {
            for k in 1..5 {
                let (j, err, _) = lambda_integral(n, k, 8);
                let want = crate::special::gamma((n + 1) as f64 / k as f64) / (2 * k) as f64;
                assert!((j - want).abs() < 1e-13 * want, "n={n} k={k}: {j} vs {want}");
                assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn rep_eigenvalue_examples() {
        let e = rep_eigenvalues(2, c(0.0), 1.0, 4).unwrap();
        let mults: Vec<usize> = e.iter().map(|p| p.1).collect();
        assert_eq!(mults, vec![1, 2, 3, 4, 5]);
        // μ = 1 on n = 1 vanishes at m = 0 for λ < 0
        let e = rep_eigenvalues(1, c(1.0), -2.0, 3).unwrap();
        assert_eq!(e[0].0, c(0.0));
        let e = rep_eigenvalues(1, c(0.5), -1.0, 3).unwrap();
        assert_eq!(e[0].0, c(0.25));
        assert_eq!(rep_eigenvalues(3, c(0.7), -1.3, 5).unwrap(), rep_eigenvalues(3, c(-0.7), 1.3, 5).unwrap());
        assert!(rep_eigenvalues(1, c(0.0), 0.0, 3).is_err());
    }

    #[test]
    fn calibration_is_the_fourier_normalization() {
        for n in 1..4 {
            let cal = calibration(n).unwrap();
            assert!(cal.relative_deviation() < 1e-10, "{cal:?}");
        }
    }

    #[test]
    fn single_factor_origin_value() {
        let spec = ModelOperatorSpec::real(1, &[0.0]).unwrap();
        let v = heat_value_at_origin(&spec, 1.0).unwrap();
        assert!((v.value.re - 0.125).abs() < 1e-10);
    }

    #[test]
    fn singular_product_reports_level() {
        let spec = ModelOperatorSpec::real(1, &[1.0, -1.0]).unwrap();
        match heat_value_at_origin(&spec, 1.0) {
            Err(Error::NonPositiveSpectrum { m: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rockland_examples() {
        let mu0 = DMatrix::from_element(1, 1, c(0.0));
        assert!(!rockland_scan(&LeviForm::zero(2).unwrap(), &mu0, Default::default()).unwrap().holds);
        assert!(rockland_scan(&LeviForm::heisenberg(1), &mu0, Default::default()).unwrap().holds);

        let l = LeviForm::normal_form(&[1.0, 2.0], 4).unwrap();
        let mu = DMatrix::from_element(1, 1, c(-7.0));
        let r = rockland_scan(&l, &mu, Default::default()).unwrap();
        let w = r.witness.unwrap();
        assert_eq!(w.sign, 1);
        assert!(w.m == 1 || w.m == 2);
        assert!(!sublaplacian_condition(&l, &mu).unwrap().holds);
    }
}
