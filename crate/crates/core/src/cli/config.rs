//! Run configuration (TOML) and the matrix encoding shared with reports.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelEnsemble, Preset, IN, OUT};
use crate::linalg::{self, CMat};
use crate::qops::{sys, LabeledOperator};
use crate::scenarios::{Scenario, ScenarioKind};
use crate::{Error, Result};

/// Row-major rows of `[re, im]` pairs.
pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

/// Report precision.
pub const ROUND: f64 = 1e9;

pub fn round9(x: f64) -> f64 {
    if x.is_finite() {
        (x * ROUND).round() / ROUND
    } else {
        x
    }
}

pub fn encode(m: &CMat) -> MatrixRepr {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [round9(m[(r, c)].re), round9(m[(r, c)].im)]).collect())
        .collect()
}

pub fn decode(m: &MatrixRepr) -> Result<CMat> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::Parse(format!("matrix with {n} rows is not square")));
    }
    Ok(CMat::from_fn(n, n, |r, c| linalg::cplx(m[r][c][0], m[r][c][1])))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactSdp,
    Hierarchy,
    Seesaw,
    Sandwich,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolytopeKind {
    Octahedron,
    Cube,
    Tetrahedron,
}

impl PolytopeKind {
    pub fn bloch_vectors(self) -> Vec<[f64; 3]> {
        let s = 1.0 / 3f64.sqrt();
        match self {
            PolytopeKind::Octahedron => vec![
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
                [0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0],
            ],
            PolytopeKind::Cube => {
                let mut v = Vec::with_capacity(8);
                for a in [-s, s] {
                    for b in [-s, s] {
                        for c in [-s, s] {
                            v.push([a, b, c]);
                        }
                    }
                }
                v
            }
            PolytopeKind::Tetrahedron => vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub weight: f64,
    pub d_in: usize,
    pub d_out: usize,
    /// Choi matrix on input ⊗ output.
    pub choi: MatrixRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelSpec>>,
    #[serde(default = "default_kind")]
    pub kind: ScenarioKind,
    #[serde(default = "one")]
    pub d_e: usize,
    #[serde(default = "one")]
    pub d_e2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolConfig {
    #[serde(default = "tol_feas")]
    pub feas: f64,
    #[serde(default = "tol_feas")]
    pub gap: f64,
    /// Seesaw stopping threshold on the per-sweep improvement.
    #[serde(default = "tol_conv")]
    pub conv: f64,
}

impl Default for TolConfig {
    fn default() -> Self {
        TolConfig { feas: tol_feas(), gap: tol_feas(), conv: tol_conv() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub method: Method,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "yes")]
    pub ppt: bool,
    #[serde(default = "yes")]
    pub bosonic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extend_party: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: TolConfig,
    #[serde(default = "default_cap")]
    pub size_cap: usize,
    /// Bloch polytope on a qubit state party for a seesaw certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polytope: Option<PolytopeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_kind() -> ScenarioKind {
    ScenarioKind::MemoryDeSingleCopy
}
fn default_restarts() -> usize {
    20
}
fn default_iters() -> usize {
    500
}
fn default_cap() -> usize {
    5000
}
fn tol_feas() -> f64 {
    1e-8
}
fn tol_conv() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let s = &self.scenario;
        match (&s.preset, &s.channels) {
            (Some(_), Some(_)) => return Err(Error::Parse("scenario: give either `preset` or `channels`, not both".into())),
            (None, None) => return Err(Error::Parse("scenario: missing `preset` or `channels`".into())),
            _ => {}
        }
        if matches!(self.method, Method::Seesaw | Method::Sandwich) && self.seed.is_none() {
            return Err(Error::Parse(format!("`seed` is required for method `{:?}`", self.method).to_lowercase()));
        }
        if matches!(self.method, Method::Seesaw | Method::Sandwich) && self.restarts == 0 {
            return Err(Error::Parse("`restarts` must be ≥ 1".into()));
        }
        if matches!(self.method, Method::Hierarchy | Method::Sandwich) && self.k == 0 {
            return Err(Error::Parse("`k` must be ≥ 1".into()));
        }
        if self.polytope.is_some() && self.method != Method::Sandwich {
            return Err(Error::Parse("`polytope` is only used by method `sandwich`".into()));
        }
        Ok(())
    }

    pub fn ensemble(&self) -> Result<ChannelEnsemble> {
        self.scenario.ensemble()
    }
}

impl ScenarioConfig {
    pub fn preset(&self) -> Result<Option<Preset>> {
        self.preset.as_deref().map(Preset::parse).transpose()
    }

    pub fn ensemble(&self) -> Result<ChannelEnsemble> {
        if let Some(p) = self.preset()? {
            return p.ensemble();
        }
        let specs = self.channels.as_ref().ok_or_else(|| Error::Parse("scenario: no channels".into()))?;
        let members = specs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = decode(&c.choi).map_err(|e| Error::Parse(format!("channels[{i}].choi: {e}")))?;
                if m.nrows() != c.d_in * c.d_out {
                    return Err(Error::Parse(format!("channels[{i}].choi has side {}, expected d_in·d_out", m.nrows())));
                }
                Ok((c.weight, LabeledOperator::new(vec![sys(IN, c.d_in), sys(OUT, c.d_out)], m)?))
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelEnsemble::new(members)
    }

    pub fn build(&self) -> Result<Scenario> {
        let memory = match self.kind {
            ScenarioKind::AdaptiveNoClassical | ScenarioKind::AdaptiveClassicalMemory => (self.d_e, self.d_e2),
            _ => (self.d_e, 1),
        };
        Scenario::new(self.kind, self.ensemble()?, memory, self.registers)
    }
}
