//! Bound reports and offline re-verification.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{decode, encode, round9, MatrixRepr, RunConfig};
use crate::linalg::CMat;
use crate::qops::{sys, LabeledOperator};
use crate::testers::{self, Tester, TesterKind};
use crate::{Error, Result};

pub const SCHEMA: &str = "chandisc-report/1";

/// Residual above which stored data fails verification.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Solver,
    SizeCap,
    Other,
}

impl FailureKind {
    pub fn of(e: &Error) -> Self {
        match e {
            Error::SizeOverflow(_) => FailureKind::SizeCap,
            Error::Solver(_) | Error::InfeasibleParty(_) => FailureKind::Solver,
            _ => FailureKind::Other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl From<&Error> for Failure {
    fn from(e: &Error) -> Self {
        Failure { kind: FailureKind::of(e), message: e.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterRepr {
    pub kind: TesterKind,
    pub systems: Vec<(String, usize)>,
    pub elements: Vec<MatrixRepr>,
}

impl TesterRepr {
    pub fn from_tester(t: &Tester) -> Self {
        TesterRepr {
            kind: t.kind,
            systems: t.systems.iter().map(|s| (s.name.clone(), s.dim)).collect(),
            elements: t.elements.iter().map(|e| encode(e.matrix())).collect(),
        }
    }

    pub fn to_tester(&self) -> Result<Tester> {
        let systems: Vec<_> = self.systems.iter().map(|(n, d)| sys(n, *d)).collect();
        let elements = self
            .elements
            .iter()
            .map(|m| LabeledOperator::new(systems.clone(), decode(m)?))
            .collect::<Result<Vec<_>>>()?;
        Tester::new(self.kind, elements)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LowerReport {
    pub value: Option<f64>,
    pub status: String,
    /// `seesaw`, `exact_sdp` or `oracle`.
    pub source: String,
    pub restarts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_restart: Option<usize>,
    /// SHA-256 of the encoded factors or tester elements.
    pub digest: String,
    /// Party factors of the compiled problem, in party order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tester: Option<TesterRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpperReport {
    pub value: Option<f64>,
    pub primal_value: Option<f64>,
    pub status: String,
    /// `hierarchy`, `exact_sdp`, `relaxation` or `oracle`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppt: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bosonic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extend_party: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub party: usize,
    pub r_v: f64,
    pub l_tau: f64,
    pub f_tau: f64,
    /// `[r_V, r_V/l + (l−1)/l · f_τ]`.
    pub interval: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub chandisc: String,
    pub schema: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub schema: String,
    pub config: RunConfig,
    /// Register size the scenario was compiled with.
    pub registers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<LowerReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<UpperReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seesaw_certificate: Option<CertificateReport>,
    pub wall_time_s: f64,
    pub versions: Versions,
}

impl BoundReport {
    pub fn failures(&self) -> Vec<&Failure> {
        let lower = self.lower.as_ref().and_then(|l| l.failure.as_ref());
        let upper = self.upper.as_ref().and_then(|u| u.failure.as_ref());
        lower.into_iter().chain(upper).collect()
    }

    /// 0 when every subtask succeeded, 4 if one hit a size cap, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        let f = self.failures();
        if f.is_empty() {
            0
        } else if f.iter().any(|x| x.kind == FailureKind::SizeCap) {
            4
        } else {
            3
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: BoundReport = serde_json::from_str(text).map_err(|e| Error::BadReport(e.to_string()))?;
        if r.schema != SCHEMA {
            return Err(Error::BadReport(format!("schema `{}`, expected `{SCHEMA}`", r.schema)));
        }
        Ok(r)
    }
}

pub fn digest(mats: &[MatrixRepr]) -> String {
    let mut h = Sha256::new();
    for m in mats {
        for row in m {
            for [re, im] in row {
                h.update(re.to_le_bytes());
                h.update(im.to_le_bytes());
            }
        }
        h.update(b"|");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, residual: f64) {
        self.checks.push(Check { name: name.into(), residual, passed: residual <= VERIFY_TOL });
    }
}

/// Recomputes feasibility residuals and objectives of the stored lower
/// bound certificate without solving anything.
pub fn verify(report: &BoundReport) -> Result<Verification> {
    let mut v = Verification { checks: Vec::new() };
    let scenario = report.config.scenario.build().map_err(|e| Error::BadReport(format!("scenario: {e}")))?;
    if scenario.registers != report.registers {
        return Err(Error::BadReport("register size differs from the scenario".into()));
    }
    if let Some(lower) = &report.lower {
        if let Some(value) = lower.value {
            if !lower.factors.is_empty() {
                let mats: Vec<MatrixRepr> = lower.factors.clone();
                v.push("lower digest", if digest(&mats) == lower.digest { 0.0 } else { f64::INFINITY });
                let factors: Vec<CMat> = mats.iter().map(decode).collect::<Result<_>>().map_err(|e| Error::BadReport(e.to_string()))?;
                let p = scenario.compile()?;
                if factors.len() != p.num_parties() || factors.iter().zip(p.parties()).any(|(x, q)| x.nrows() != q.dim) {
                    return Err(Error::BadReport("factor shapes do not match the compiled scenario".into()));
                }
                for (x, party) in factors.iter().zip(p.parties()) {
                    v.push(format!("party `{}` feasibility", party.name), party.violation(x));
                }
                v.push("lower objective", (p.objective(&factors) - value).abs());
            }
            if let Some(tr) = &lower.tester {
                v.push("lower digest", if digest(&tr.elements) == lower.digest { 0.0 } else { f64::INFINITY });
                let t = tr.to_tester().map_err(|e| Error::BadReport(format!("tester: {e}")))?;
                let r = testers::validate(&t);
                v.push("tester positivity", (-r.min_eig).max(0.0));
                v.push("tester constraints", r.max_residual());
                let e = if t.kind.is_two_copy() { scenario.two_copy()? } else { scenario.ensemble.clone() };
                v.push("lower objective", (testers::success_probability(&t, &e)? - value).abs());
            }
        }
    }
    if let (Some(l), Some(u)) = (
        report.lower.as_ref().and_then(|l| l.value),
        report.upper.as_ref().and_then(|u| u.value),
    ) {
        v.push("lower ≤ upper", (l - u).max(0.0));
    }
    Ok(v)
}

pub(crate) fn rounded(x: f64) -> Option<f64> {
    Some(round9(x))
}
