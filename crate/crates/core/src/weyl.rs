//! Closed-form Weyl-law constants and eigenvalue predictions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levi::{condition_xpq, condition_y, GeometryParams};
use crate::mehler::fourier_cutoff;
use crate::plancherel::{heat_value_at_origin, ModelOperatorSpec};
use crate::quad::{integrate, QuadOptions};
use crate::special::{binomial, factorial, gamma, ln_x_over_sinh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeConvention {
    Pseudohermitian,
    Contact,
    Haar,
}

impl fmt::Display for VolumeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VolumeConvention::Pseudohermitian => "pseudohermitian",
            VolumeConvention::Contact => "contact",
            VolumeConvention::Haar => "haar",
        })
    }
}

impl std::str::FromStr for VolumeConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudohermitian" => Ok(Self::Pseudohermitian),
            "contact" => Ok(Self::Contact),
            "haar" => Ok(Self::Haar),
            other => Err(Error::InvalidInput(format!("unknown volume convention '{other}'"))),
        }
    }
}

/// Power of two relating the model constant to the `θ`-volume.
///
/// The lemma form multiplies `ν(μ)` by `2ⁿ`; following the normal-form
/// volume density `2ⁿ dx` instead gives `2⁻ⁿ`. The two differ by `4ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    Lemma,
    NormalForm,
}

impl Prefactor {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Prefactor::Lemma => 2f64.powi(n as i32),
            Prefactor::NormalForm => 2f64.powi(-(n as i32)),
        }
    }

    /// Converts a constant printed with the lemma's `2ⁿ` to this prefactor.
    pub fn from_lemma(self, value: f64, n: usize) -> f64 {
        match self {
            Prefactor::Lemma => value,
            Prefactor::NormalForm => value * 4f64.powi(-(n as i32)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Prefactor::Lemma => "lemma 2^n",
            Prefactor::NormalForm => "normal-form 2^-n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

/// A Weyl constant with everything needed to audit how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylRecord {
    pub family: String,
    pub params: Vec<(String, ParamValue)>,
    pub constant: f64,
    pub exponent: f64,
    pub volume_convention: VolumeConvention,
    pub provenance: Vec<String>,
}

impl WeylRecord {
    /// `N(λ) ≈ ν₀ λ^e`.
    pub fn predict(&self, lambda: f64) -> f64 {
        self.constant * lambda.powf(self.exponent)
    }

    /// `λ_k ≈ (k/ν₀)^{1/e}`.
    pub fn predict_eigenvalue(&self, k: usize) -> f64 {
        (k as f64 / self.constant).powf(1.0 / self.exponent)
    }
}

pub const PROVENANCE_NU: &str = "nu carries 1/(n+1)! so that nu(mu) = k_mu(0,0,1)/(n+1)!";
pub const PROVENANCE_FOURIER: &str = "heat kernel carries the 1/(2 pi) of the inverse Fourier transform in x0";
pub const PROVENANCE_BETA: &str = "beta nu-argument (q-p)+2(l-k)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuValue {
    pub value: f64,
    pub rel_err: f64,
}

/// `ν(μ) = (2π)^{−(n+1)}/(n+1)! · ∫_ℝ e^{−μξ} (ξ/sinh ξ)ⁿ dξ`, `|μ| < n`.
pub fn nu(n: usize, mu: f64) -> Result<NuValue> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !mu.is_finite() {
        return Err(Error::NonFinite("μ"));
    }
    if mu.abs() >= n as f64 {
        return Err(Error::Precondition(format!(
            "nu(n={n}, mu={mu}) diverges: need |mu| < n"
        )));
    }
    let nf = n as f64;
    let upper = fourier_cutoff(n, mu.abs(), 0.0);
    let f = |x: f64| {
        let base = nf * ln_x_over_sinh(x);
        (base - mu * x).exp() + (base + mu * x).exp()
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        initial_panels: 16,
        max_panels: 20_000,
    };
    let res = integrate(f, 0.0, upper, opts);
    if !res.converged {
        return Err(Error::Quadrature {
            value: res.value,
            error: res.error,
        });
    }
    let norm = std::f64::consts::TAU.powi(-(n as i32 + 1)) / factorial(n as u32 + 1);
    Ok(NuValue {
        value: res.value * norm,
        rel_err: (res.error + 1e-17) / res.value + 4.0 * f64::EPSILON,
    })
}

fn nu_at(n: usize, arg: i64) -> Result<f64> {
    Ok(nu(n, arg as f64)?.value)
}

/// One summand `weight · ν(argument)` of a Weyl constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuTerm {
    pub weight: f64,
    pub argument: i64,
}

fn check_arguments(n: usize, terms: &[NuTerm], what: &str) -> Result<()> {
    if let Some(t) = terms.iter().find(|t| t.argument.unsigned_abs() >= n as u64) {
        return Err(Error::Precondition(format!(
            "{what}: nu argument {} outside (-{n}, {n})",
            t.argument
        )));
    }
    Ok(())
}

fn sum_terms(n: usize, terms: &[NuTerm]) -> Result<f64> {
    terms.iter().try_fold(0.0, |acc, t| Ok(acc + t.weight * nu_at(n, t.argument)?))
}

fn degree_check(v: usize, n: usize, name: &str) -> Result<()> {
    if v > n {
        Err(Error::InvalidInput(format!("{name} = {v} out of range 0..={n}")))
    } else {
        Ok(())
    }
}

/// Summands of `α_{nκpq}`:
/// `½ binom(n,p) binom(n−κ,k) binom(κ,q−k) ν(n+2q−2κ−4k)`.
pub fn alpha_terms(n: usize, kappa: usize, p: usize, q: usize) -> Result<Vec<NuTerm>> {
    let g = GeometryParams::nondegenerate(n, kappa)?;
    degree_check(p, n, "p")?;
    if !condition_y(&g, q)? {
        return Err(Error::Precondition(format!(
            "condition Y({q}) fails for n={n}, kappa={kappa}: the Kohn Laplacian is not hypoelliptic"
        )));
    }
    let (n_i, q_i, kappa_i) = (n as i64, q as i64, kappa as i64);
    let terms: Vec<NuTerm> = ((q_i - kappa_i).max(0)..=q_i.min(n_i - kappa_i))
        .map(|k| NuTerm {
            weight: 0.5 * binomial(n_i, p as i64) * binomial(n_i - kappa_i, k) * binomial(kappa_i, q_i - k),
            argument: n_i + 2 * q_i - 2 * kappa_i - 4 * k,
        })
        .collect();
    check_arguments(n, &terms, "alpha")?;
    Ok(terms)
}

/// Summands of `β_{nκpq}`:
/// `2ⁿ binom(n−κ,l) binom(κ,p−l) binom(n−κ,k) binom(κ,q−k) ν((q−p)+2(l−k))`.
pub fn beta_terms(n: usize, kappa: usize, p: usize, q: usize) -> Result<Vec<NuTerm>> {
    let g = GeometryParams::nondegenerate(n, kappa)?;
    if !condition_xpq(&g, p, q)? {
        return Err(Error::Precondition(format!(
            "condition X({p},{q}) fails for n={n}, kappa={kappa}: the horizontal sublaplacian is not hypoelliptic"
        )));
    }
    let (n_i, kappa_i, p_i, q_i) = (n as i64, kappa as i64, p as i64, q as i64);
    let two_n = 2f64.powi(n as i32);
    let mut terms = Vec::new();
    for l in (p_i - kappa_i).max(0)..=p_i.min(n_i - kappa_i) {
        for k in (q_i - kappa_i).max(0)..=q_i.min(n_i - kappa_i) {
            terms.push(NuTerm {
                weight: two_n
                    * binomial(n_i - kappa_i, l)
                    * binomial(kappa_i, p_i - l)
                    * binomial(n_i - kappa_i, k)
                    * binomial(kappa_i, q_i - k),
                argument: (q_i - p_i) + 2 * (l - k),
            });
        }
    }
    check_arguments(n, &terms, "beta")?;
    Ok(terms)
}

/// Summands of `γ_{nk} = Σ_{p+q=k} 2ⁿ binom(n,p) binom(n,q) ν(p−q)`.
pub fn gamma_terms(n: usize, k: usize) -> Result<Vec<NuTerm>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    degree_check(k, 2 * n, "k")?;
    if k == n {
        return Err(Error::Precondition(format!(
            "k = n = {n}: the horizontal sublaplacian on {n}-forms is not hypoelliptic"
        )));
    }
    let two_n = 2f64.powi(n as i32);
    let terms: Vec<NuTerm> = (0..=k.min(n))
        .filter(|&p| k - p <= n)
        .map(|p| NuTerm {
            weight: two_n * binomial(n as i64, p as i64) * binomial(n as i64, (k - p) as i64),
            argument: p as i64 - (k - p) as i64,
        })
        .collect();
    check_arguments(n, &terms, "gamma")?;
    Ok(terms)
}

/// `α_{nκpq}` as printed (lemma prefactor).
pub fn alpha(n: usize, kappa: usize, p: usize, q: usize) -> Result<f64> {
    sum_terms(n, &alpha_terms(n, kappa, p, q)?)
}

/// `β_{nκpq}` as printed (lemma prefactor).
pub fn beta(n: usize, kappa: usize, p: usize, q: usize) -> Result<f64> {
    sum_terms(n, &beta_terms(n, kappa, p, q)?)
}

/// `γ_{nk}` as printed (lemma prefactor).
pub fn gamma_constant(n: usize, k: usize) -> Result<f64> {
    sum_terms(n, &gamma_terms(n, k)?)
}

fn form_record(family: &str, n: usize, params: Vec<(String, ParamValue)>, printed: f64, prefactor: Prefactor, extra: &[&str]) -> WeylRecord {
    let mut provenance = vec![
        PROVENANCE_NU.to_string(),
        PROVENANCE_FOURIER.to_string(),
        format!("prefactor {}", prefactor.label()),
    ];
    provenance.extend(extra.iter().map(|s| s.to_string()));
    WeylRecord {
        family: family.to_string(),
        params,
        constant: prefactor.from_lemma(printed, n),
        exponent: (n + 1) as f64,
        volume_convention: VolumeConvention::Pseudohermitian,
        provenance,
    }
}

pub fn alpha_record(n: usize, kappa: usize, p: usize, q: usize, prefactor: Prefactor) -> Result<WeylRecord> {
    let v = alpha(n, kappa, p, q)?;
    let params = vec![
        ("n".into(), ParamValue::Int(n as i64)),
        ("kappa".into(), ParamValue::Int(kappa as i64)),
        ("p".into(), ParamValue::Int(p as i64)),
        ("q".into(), ParamValue::Int(q as i64)),
    ];
    Ok(form_record("alpha", n, params, v, prefactor, &[]))
}

pub fn beta_record(n: usize, kappa: usize, p: usize, q: usize, prefactor: Prefactor) -> Result<WeylRecord> {
    let v = beta(n, kappa, p, q)?;
    let params = vec![
        ("n".into(), ParamValue::Int(n as i64)),
        ("kappa".into(), ParamValue::Int(kappa as i64)),
        ("p".into(), ParamValue::Int(p as i64)),
        ("q".into(), ParamValue::Int(q as i64)),
    ];
    Ok(form_record("beta", n, params, v, prefactor, &[PROVENANCE_BETA]))
}

pub fn gamma_record(n: usize, k: usize, prefactor: Prefactor) -> Result<WeylRecord> {
    let v = gamma_constant(n, k)?;
    let params = vec![
        ("n".into(), ParamValue::Int(n as i64)),
        ("k".into(), ParamValue::Int(k as i64)),
    ];
    Ok(form_record("gamma", n, params, v, prefactor, &[]))
}

/// A candidate constant and the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub prefactor: Option<Prefactor>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublaplacianWeyl {
    pub record: WeylRecord,
    pub candidates: Vec<Candidate>,
}

/// Weyl constant of a sublaplacian with model `ℒ_μ ⊗ 1_{rk E}`.
///
/// Against Haar volume the constant is `ν(μ) rk E vol`. Against the
/// `θ`-volumes both prefactor candidates are returned; the record carries
/// the normal-form one.
pub fn sublaplacian_weyl(n: usize, mu: f64, rank_e: usize, volume: f64, convention: VolumeConvention) -> Result<SublaplacianWeyl> {
    if rank_e == 0 {
        return Err(Error::InvalidInput("rank of the bundle must be positive".into()));
    }
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::InvalidInput(format!("volume must be positive, got {volume}")));
    }
    let base = nu(n, mu)?.value * rank_e as f64 * volume;
    let params = vec![
        ("n".into(), ParamValue::Int(n as i64)),
        ("mu".into(), ParamValue::Real(mu)),
        ("rank_e".into(), ParamValue::Int(rank_e as i64)),
        ("volume".into(), ParamValue::Real(volume)),
    ];
    let mut provenance = vec![PROVENANCE_NU.to_string(), PROVENANCE_FOURIER.to_string()];
    let (constant, candidates) = match convention {
        VolumeConvention::Haar => {
            provenance.push("haar volume: constant = vol k_mu(0,0,1) / Gamma(n+2)".into());
            (
                base,
                vec![Candidate {
                    prefactor: None,
                    constant: base,
                }],
            )
        }
        VolumeConvention::Pseudohermitian | VolumeConvention::Contact => {
            provenance.push(format!("prefactor {} (lemma 2^n reported as candidate)", Prefactor::NormalForm.label()));
            let candidates: Vec<Candidate> = [Prefactor::NormalForm, Prefactor::Lemma]
                .into_iter()
                .map(|p| Candidate {
                    prefactor: Some(p),
                    constant: p.factor(n) * base,
                })
                .collect();
            (candidates[0].constant, candidates)
        }
    };
    Ok(SublaplacianWeyl {
        record: WeylRecord {
            family: "sublaplacian".into(),
            params,
            constant,
            exponent: (n + 1) as f64,
            volume_convention: convention,
            provenance,
        },
        candidates,
    })
}

/// Gover–Graham constant with the alternative normalizations alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoverGraham {
    pub record: WeylRecord,
    pub factors: Vec<f64>,
    /// `K^{(k)}(0, 1)`.
    pub heat_value: f64,
    pub heat_error: f64,
    /// `2⁻ⁿ Γ(1+(2n+2)/k)⁻¹ K(0,1)`.
    pub alt_gamma: f64,
    /// `2ⁿ Γ(1+(2n+2)/k)⁻¹ K(0,1)`, the printed form.
    pub printed: f64,
}

/// Shifts `k−1, k−3, …, −(k−1)` of the factorization
/// `∏_j (Δ_b + i(k−1−2j) X_0)`.
pub fn gover_graham_factors(k: usize) -> Vec<f64> {
    (0..k).map(|j| k as f64 - 1.0 - 2.0 * j as f64).collect()
}

pub fn gover_graham_constant(n: usize, k: usize) -> Result<GoverGraham> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("n and k must be at least 1".into()));
    }
    if k > n && (k - n) % 2 == 1 {
        return Err(Error::Precondition(format!(
            "k = {k}: the factorization contains the factors Δ_b + i{n}X_0 and Δ_b - i{n}X_0, \
             whose principal symbols are not invertible"
        )));
    }
    let factors = gover_graham_factors(k);
    let spec = ModelOperatorSpec::real(n, &factors)?;
    let heat = heat_value_at_origin(&spec, 1.0)?;
    let kval = heat.value.re;
    let nf = (n + 1) as f64;
    let kf = k as f64;
    let constant = Prefactor::NormalForm.factor(n) * kval / gamma(1.0 + nf / kf);
    let alt_gamma = Prefactor::NormalForm.factor(n) * kval / gamma(1.0 + 2.0 * nf / kf);
    let printed = Prefactor::Lemma.factor(n) * kval / gamma(1.0 + 2.0 * nf / kf);
    Ok(GoverGraham {
        record: WeylRecord {
            family: "gover_graham".into(),
            params: vec![
                ("n".into(), ParamValue::Int(n as i64)),
                ("k".into(), ParamValue::Int(k as i64)),
            ],
            constant,
            exponent: nf / kf,
            volume_convention: VolumeConvention::Pseudohermitian,
            provenance: vec![
                PROVENANCE_FOURIER.to_string(),
                format!("prefactor {}", Prefactor::NormalForm.label()),
                "Gamma(1+(n+1)/k) from the order-2k counting law".into(),
                "K(0,1) from the calibrated Plancherel sum".into(),
            ],
        },
        factors,
        heat_value: kval,
        heat_error: heat.error,
        alt_gamma,
        printed,
    })
}
