//! The ledger of normalization choices behind every reported number.
//!
//! Several factors can legitimately be placed in more than one way (where
//! the `1/(2π)` of the Fourier inversion lives, which power of two links the
//! model constant to the `θ`-volume, ...). Each choice is recorded here, and
//! a short hash of the choices travels with every emitted table so that
//! results computed under different conventions are never combined.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nil::NilcheckReport;
use crate::plancherel::calibration;
use crate::weyl::{sublaplacian_weyl, Prefactor, VolumeConvention};

pub const LEDGER_SCHEMA: &str = "heisenspec-ledger/1";

/// Relative tolerance for accepting a prefactor candidate against the grid.
pub const ADJUDICATION_TOLERANCE: f64 = 0.10;
/// Allowed distance of the fitted counting exponent from 2.
pub const EXPONENT_TOLERANCE: f64 = 0.05;

/// `vol_θ(Γ\H³)` for `θ = dx₀ + x₂dx₁ − x₁dx₂`: twice the Haar volume.
pub const NILMANIFOLD_THETA_VOLUME: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub n: usize,
    pub constant: f64,
    pub expected: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCheck {
    pub prefactor: Prefactor,
    pub predicted: f64,
    pub relative_error: f64,
}

/// Grid evidence for or against each prefactor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjudication {
    pub grids: Vec<usize>,
    pub fit_constants: Vec<f64>,
    pub extrapolated_constant: f64,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub theta_volume: f64,
    pub candidates: Vec<CandidateCheck>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PrefactorStatus {
    Unadjudicated,
    Adjudicated { chosen: Prefactor, evidence: Adjudication },
    /// Evidence was collected but did not single out one candidate.
    Inconclusive { evidence: Adjudication },
}

impl PrefactorStatus {
    /// Prefactor to use when emitting constants.
    pub fn effective(&self) -> Prefactor {
        match self {
            PrefactorStatus::Adjudicated { chosen, .. } => *chosen,
            _ => Prefactor::NormalForm,
        }
    }

    fn tag(&self) -> String {
        match self {
            PrefactorStatus::Unadjudicated => "unadjudicated".into(),
            PrefactorStatus::Adjudicated { chosen, .. } => format!("adjudicated:{}", chosen.label()),
            PrefactorStatus::Inconclusive { .. } => "inconclusive".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionsLedger {
    pub schema: String,
    pub fourier_factor: String,
    pub nu_factorial: String,
    pub heat_exponent: String,
    pub beta_argument: String,
    pub kohn_sign: String,
    pub gover_graham_gamma: String,
    pub nilmanifold_volume: String,
    pub calibration: Vec<CalibrationEntry>,
    pub prefactor: PrefactorStatus,
}

impl ConventionsLedger {
    /// The library's conventions with Plancherel calibrations for `n ≤ 3`
    /// and the prefactor not yet adjudicated.
    pub fn standard() -> Result<Self> {
        let calibration = (1..=3)
            .map(|n| {
                calibration(n).map(|c| CalibrationEntry {
                    n,
                    constant: c.constant,
                    expected: c.expected,
                    relative_deviation: c.relative_deviation(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schema: LEDGER_SCHEMA.into(),
            fourier_factor: "heat kernel includes the 1/(2 pi) of the x0 inverse Fourier transform".into(),
            nu_factorial: "nu(mu) = k_mu(0,0,1)/(n+1)! = (2 pi)^-(n+1)/(n+1)! int e^{-mu s}(s/sinh s)^n ds".into(),
            heat_exponent: "Gaussian factor exp(-(1/(2t)) (t s coth t s)|x'|^2), matching the 1/2 in the operator".into(),
            beta_argument: "beta uses nu((q-p)+2(l-k)); then gamma_{n,k} = sum_{p+q=k} beta_{n,0,p,q}".into(),
            kohn_sign: "Kohn mu-spectrum reported as the negation of the reduced direct form".into(),
            gover_graham_gamma: "order-2k counting law uses Gamma(1+(n+1)/k); Gamma(1+(2n+2)/k) reported as an alternative".into(),
            nilmanifold_volume: "theta = dx0 + x2 dx1 - x1 dx2 gives vol_theta = 2 vol_Haar = 2 on the integer quotient".into(),
            calibration,
            prefactor: PrefactorStatus::Unadjudicated,
        })
    }

    /// Short SHA-256 digest over the convention choices.
    ///
    /// Evidence numbers are left out on purpose: two ledgers that settled on
    /// the same prefactor hash the same even if their grid runs differ.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for field in [
            &self.schema,
            &self.fourier_factor,
            &self.nu_factorial,
            &self.heat_exponent,
            &self.beta_argument,
            &self.kohn_sign,
            &self.gover_graham_gamma,
            &self.nilmanifold_volume,
        ] {
            h.update(field.as_bytes());
            h.update([0u8]);
        }
        for c in &self.calibration {
            h.update(format!("{}:{:.9e}", c.n, c.constant).as_bytes());
            h.update([0u8]);
        }
        h.update(self.prefactor.tag().as_bytes());
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(format!("ledger serialization: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ledger: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("ledger parse: {e}")))?;
        if ledger.schema != LEDGER_SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported ledger schema '{}'", ledger.schema)));
        }
        Ok(ledger)
    }
}

/// Compares a grid study against both prefactor candidates.
///
/// A candidate is chosen only when the exponent is within
/// [`EXPONENT_TOLERANCE`] of 2 and exactly one candidate is within
/// [`ADJUDICATION_TOLERANCE`] of the extrapolated constant.
pub fn adjudicate(report: &NilcheckReport) -> Result<PrefactorStatus> {
    let weyl = sublaplacian_weyl(1, 0.0, 1, NILMANIFOLD_THETA_VOLUME, VolumeConvention::Pseudohermitian)?;
    let observed = report.half_operator_constant;
    let candidates: Vec<CandidateCheck> = weyl
        .candidates
        .iter()
        .filter_map(|c| {
            c.prefactor.map(|p| CandidateCheck {
                prefactor: p,
                predicted: c.constant,
                relative_error: (observed / c.constant - 1.0).abs(),
            })
        })
        .collect();
    let evidence = Adjudication {
        grids: report.grids.iter().map(|g| g.n).collect(),
        fit_constants: report.grids.iter().map(|g| g.fit.constant).collect(),
        extrapolated_constant: observed,
        exponent: report.exponent_fit.exponent,
        exponent_stderr: report.exponent_fit.exponent_stderr,
        theta_volume: NILMANIFOLD_THETA_VOLUME,
        candidates,
        tolerance: ADJUDICATION_TOLERANCE,
    };
    let accepted: Vec<Prefactor> = evidence
        .candidates
        .iter()
        .filter(|c| c.relative_error <= ADJUDICATION_TOLERANCE)
        .map(|c| c.prefactor)
        .collect();
    let exponent_ok = (evidence.exponent - 2.0).abs() <= EXPONENT_TOLERANCE;
    Ok(match accepted.as_slice() {
        [only] if exponent_ok => PrefactorStatus::Adjudicated { chosen: *only, evidence },
        _ => PrefactorStatus::Inconclusive { evidence },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrations_match_fourier_convention() {
        let l = ConventionsLedger::standard().unwrap();
        assert_eq!(l.calibration.len(), 3);
        assert!(l.calibration.iter().all(|c| c.relative_deviation < 1e-9));
    }

    #[test]
    fn hash_tracks_choices_and_round_trips() {
        let l = ConventionsLedger::standard().unwrap();
        let h = l.hash();
        assert_eq!(h.len(), 16);
        assert_eq!(h, ConventionsLedger::standard().unwrap().hash());
        let back = ConventionsLedger::from_json(&l.to_json().unwrap()).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.hash(), h);
        let mut changed = l.clone();
        changed.prefactor = PrefactorStatus::Inconclusive {
            evidence: Adjudication {
                grids: vec![],
                fit_constants: vec![],
                extrapolated_constant: 0.0,
                exponent: 0.0,
                exponent_stderr: 0.0,
                theta_volume: 2.0,
                candidates: vec![],
                tolerance: 0.1,
            },
        };
        assert_ne!(changed.hash(), h);
        assert!(ConventionsLedger::from_json("{}").is_err());
    }
}
