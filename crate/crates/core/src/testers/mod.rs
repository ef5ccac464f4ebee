//! Testers with unlimited memory: exact optimisation, validation, class
//! membership and physical realisation.

mod membership;
mod realize;
pub(crate) mod sdp;

pub use membership::{membership, membership_with, Certificate, Membership, MembershipOptions};
pub use realize::{realize_adaptive, realize_single_copy, Realization};
pub use sdp::{optimal_adaptive, optimal_adaptive_with, optimal_parallel, optimal_single_copy, optimal_single_copy_with, OptimalTester};

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelEnsemble, Layout, IN, OUT};
use crate::linalg::{self, CMat};
use crate::qops::{self, partial_trace, sys, LabeledOperator, SystemLabel};
use crate::{Error, Result};

pub const I1: &str = "I1";
pub const O1: &str = "O1";
pub const I2: &str = "I2";
pub const O2: &str = "O2";

/// PSD tolerance on tester elements.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TesterKind {
    SingleCopy,
    Parallel2,
    Adaptive2,
    ClassicallyAdaptive2,
}

impl TesterKind {
    pub fn is_two_copy(self) -> bool {
        self != TesterKind::SingleCopy
    }
}

#[derive(Clone, Debug)]
pub struct Tester {
    pub kind: TesterKind,
    /// `[I, O]` for single-copy testers, `[I1, O1, I2, O2]` otherwise.
    pub systems: Vec<SystemLabel>,
    pub elements: Vec<LabeledOperator>,
}

impl Tester {
    /// Elements are permuted into the kind's canonical system order.
    pub fn new(kind: TesterKind, elements: Vec<LabeledOperator>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::NotATester("no elements".into()))?;
        let names: &[&str] = if kind.is_two_copy() { &[I1, O1, I2, O2] } else { &[IN, OUT] };
        let ordered = qops::permute_systems(first, names)?;
        let systems = ordered.systems().to_vec();
        let mut out = Vec::with_capacity(elements.len());
        for (i, t) in elements.iter().enumerate() {
            let t = qops::permute_systems(t, names)?;
            if t.systems() != systems.as_slice() {
                return Err(Error::DimMismatch(format!("tester element {i} has different systems")));
            }
            if !t.is_hermitian(qops::HERM_TOL) {
                return Err(Error::NotATester(format!("element {i} is not hermitian")));
            }
            out.push(t);
        }
        Ok(Tester { kind, systems, elements: out })
    }

    /// Memoryless tester `ρᵀ ⊗ M^i` on `[I, O]`.
    pub fn memoryless(rho: &CMat, povm: &[CMat]) -> Result<Self> {
        let (di, d_o) = (rho.nrows(), povm.first().map_or(0, |m| m.nrows()));
        let rt = linalg::transpose(rho);
        let elements = povm
            .iter()
            .map(|m| {
                if m.nrows() != d_o {
                    return Err(Error::DimMismatch("POVM elements of different size".into()));
                }
                LabeledOperator::new(vec![sys(IN, di), sys(OUT, d_o)], linalg::kron(&rt, m))
            })
            .collect::<Result<Vec<_>>>()?;
        Tester::new(TesterKind::SingleCopy, elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        self.elements[0].dim_of(name)
    }

    /// `W = Σ_i T^i`.
    pub fn sum(&self) -> LabeledOperator {
        let mut w = self.elements[0].clone();
        for t in &self.elements[1..] {
            w = w.add(t).expect("elements share systems");
        }
        w
    }

    pub fn with_kind(&self, kind: TesterKind) -> Result<Self> {
        if kind.is_two_copy() != self.kind.is_two_copy() {
            return Err(Error::DimMismatch("single-copy and two-copy testers are not interchangeable".into()));
        }
        Ok(Tester { kind, ..self.clone() })
    }
}

/// Member Choi matrices of `e` in the system order a tester of `kind`
/// expects.
pub fn ensemble_chois(e: &ChannelEnsemble, kind: TesterKind) -> Result<Vec<LabeledOperator>> {
    if !kind.is_two_copy() {
        return Ok(e.members.iter().map(|m| m.1.clone()).collect());
    }
    let [(a, b), (c, d)] = e
        .copy_dims()
        .ok_or_else(|| Error::DimMismatch("two-copy tester needs a two-copy ensemble".into()))?;
    e.members
        .iter()
        .map(|(_, m)| {
            let split = LabeledOperator::new(vec![sys(I1, a), sys(I2, c), sys(O1, b), sys(O2, d)], m.matrix().clone())?;
            qops::permute_systems(&split, &[I1, O1, I2, O2])
        })
        .collect()
}

/// `Σ_i q_i Tr(T^i C^i)`.
pub fn success_probability(t: &Tester, e: &ChannelEnsemble) -> Result<f64> {
    if t.len() != e.len() {
        return Err(Error::DimMismatch(format!("tester has {} elements, ensemble {} members", t.len(), e.len())));
    }
    if t.kind.is_two_copy() != matches!(e.layout, Layout::TwoCopy { .. }) {
        return Err(Error::DimMismatch("tester and ensemble disagree on the number of copies".into()));
    }
    let chois = ensemble_chois(e, t.kind)?;
    let mut p = 0.0;
    for ((q, c), ti) in e.weights().iter().zip(&chois).zip(&t.elements) {
        if c.systems() != ti.systems() {
            return Err(Error::DimMismatch("tester and channel systems differ".into()));
        }
        p += q * linalg::trace_prod(ti.matrix(), c.matrix()).re;
    }
    Ok(p)
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub kind: TesterKind,
    /// Smallest eigenvalue over all elements.
    pub min_eig: f64,
    pub residuals: Vec<(String, f64)>,
}

impl ValidationReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.0 == name).map(|r| r.1)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.min_eig >= -tol && self.max_residual() <= tol
    }
}

fn tensor_id(x: &LabeledOperator, s: &SystemLabel) -> LabeledOperator {
    qops::tensor(x, &LabeledOperator::identity(vec![s.clone()]).expect("identity")).expect("disjoint systems")
}

fn diff(a: &LabeledOperator, b: &LabeledOperator) -> f64 {
    let b = qops::permute_systems(b, &a.names()).expect("same systems");
    linalg::max_abs_diff(a.matrix(), b.matrix())
}

/// Residuals of `W = σ ⊗ 1` over the given output systems.
fn single_copy_residuals(w: &LabeledOperator, outputs: &[&str]) -> Vec<(String, f64)> {
    let d_o: usize = outputs.iter().map(|o| w.dim_of(o).unwrap()).product();
    let sigma = partial_trace(w, outputs).unwrap().scaled(1.0 / d_o as f64);
    let mut back = sigma.clone();
    for o in outputs {
        back = tensor_id(&back, &w.systems()[w.position(o).unwrap()]);
    }
    vec![
        ("marginal".into(), diff(w, &back)),
        ("normalization".into(), (sigma.trace().re - 1.0).abs()),
    ]
}

fn adaptive_residuals(w: &LabeledOperator) -> Vec<(String, f64)> {
    let o2 = w.systems()[w.position(O2).unwrap()].clone();
    let o1 = w.systems()[w.position(O1).unwrap()].clone();
    let r = partial_trace(w, &[O2]).unwrap().scaled(1.0 / o2.dim as f64);
    let second = diff(w, &tensor_id(&r, &o2));
    let r1 = partial_trace(&r, &[I2]).unwrap();
    let sigma = partial_trace(&r1, &[O1]).unwrap().scaled(1.0 / o1.dim as f64);
    let first = diff(&r1, &tensor_id(&sigma, &o1));
    vec![
        ("comb_second".into(), second),
        ("comb_first".into(), first),
        ("normalization".into(), (sigma.trace().re - 1.0).abs()),
    ]
}

/// PSD and marginal diagnostics for the tester's declared kind.
pub fn validate(t: &Tester) -> ValidationReport {
    let min_eig = t.elements.iter().map(|x| x.min_eig()).fold(f64::INFINITY, f64::min);
    let w = t.sum();
    let residuals = match t.kind {
        TesterKind::SingleCopy => single_copy_residuals(&w, &[OUT]),
        TesterKind::Parallel2 => single_copy_residuals(&w, &[O1, O2]),
        TesterKind::Adaptive2 | TesterKind::ClassicallyAdaptive2 => adaptive_residuals(&w),
    };
    ValidationReport { kind: t.kind, min_eig, residuals }
}
