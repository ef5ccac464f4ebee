//! Channel families, ensembles and ensemble transformations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, cplx, CMat, ONE, ZERO};
use crate::qops::{self, choi, partial_trace, sys, KrausChannel, LabeledOperator, SystemLabel};

/// Names of the two systems carried by every ensemble member.
pub const IN: &str = "I";
pub const OUT: &str = "O";

/// How an ensemble's input/output spaces factor.
#[derive(Clone, Debug)]
pub enum Layout {
    Single,
    /// Members are C_i ⊗ D_i with input I₁I₂ and output O₁O₂ (first copy most significant).
    TwoCopy { first: Box<ChannelEnsemble>, second: Box<ChannelEnsemble> },
}

#[derive(Clone, Debug)]
pub struct ChannelEnsemble {
    pub input: SystemLabel,
    pub output: SystemLabel,
    pub members: Vec<(f64, LabeledOperator)>,
    pub layout: Layout,
}

impl ChannelEnsemble {
    /// Validates weights and Choi matrices; member Chois are reordered to [I, O].
    pub fn new(members: Vec<(f64, LabeledOperator)>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::BadEnsemble("no members".into()))?;
        let d_in = first.1.dim_of(IN)?;
        let d_out = first.1.dim_of(OUT)?;
        let mut total = 0.0;
        let mut out = Vec::with_capacity(members.len());
        for (i, (q, c)) in members.into_iter().enumerate() {
            if !(q >= 0.0) {
                return Err(Error::BadEnsemble(format!("weight {i} is negative")));
            }
            total += q;
            if c.systems().len() != 2 {
                return Err(Error::BadEnsemble(format!("member {i} must act on exactly I and O")));
            }
            let c = qops::permute_systems(&c, &[IN, OUT])?;
            if c.dim_of(IN)? != d_in || c.dim_of(OUT)? != d_out {
                return Err(Error::DimMismatch(format!("member {i} has different system dimensions")));
            }
            if c.herm_dev() > qops::HERM_TOL || c.min_eig() < -1e-9 {
                return Err(Error::BadEnsemble(format!("member {i} is not PSD")));
            }
            let m = partial_trace(&c, &[OUT])?;
            let dev = linalg::max_abs_diff(m.matrix(), &linalg::eye(d_in));
            if dev > 1e-9 {
                return Err(Error::BadEnsemble(format!("member {i} is not trace preserving ({dev:.2e})")));
            }
            out.push((q, c));
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadEnsemble(format!("weights sum to {total}")));
        }
        Ok(ChannelEnsemble { input: sys(IN, d_in), output: sys(OUT, d_out), members: out, layout: Layout::Single })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.input.dim
    }

    pub fn d_out(&self) -> usize {
        self.output.dim
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.0).collect()
    }

    pub fn chois(&self) -> Vec<&CMat> {
        self.members.iter().map(|m| m.1.matrix()).collect()
    }

    /// Per-copy (d_in, d_out) pairs of a two-copy ensemble.
    pub fn copy_dims(&self) -> Option<[(usize, usize); 2]> {
        match &self.layout {
            Layout::Single => None,
            Layout::TwoCopy { first, second } => {
                Some([(first.d_in(), first.d_out()), (second.d_in(), second.d_out())])
            }
        }
    }
}

fn check_index(d: usize, i: usize, j: usize) -> Result<()> {
    if i >= d || j >= d {
        return Err(Error::BadIndex(format!("clock-shift ({i}, {j}) for d = {d}")));
    }
    Ok(())
}

pub fn shift(d: usize) -> CMat {
    CMat::from_fn(d, d, |r, c| if r == (c + 1) % d { ONE } else { ZERO })
}

pub fn clock(d: usize) -> CMat {
    let w = 2.0 * PI / d as f64;
    CMat::from_fn(d, d, |r, c| if r == c { c64::from_polar(1.0, w * r as f64) } else { ZERO })
}

/// X_d^i Z_d^j.
pub fn clock_shift(d: usize, i: usize, j: usize) -> Result<CMat> {
    check_index(d, i, j)?;
    let w = 2.0 * PI / d as f64;
    // (X^i Z^j)|l⟩ = ω^{jl} |l + i⟩
    Ok(CMat::from_fn(d, d, |r, c| {
        if r == (c + i) % d {
            c64::from_polar(1.0, w * ((j * c) % d) as f64)
        } else {
            ZERO
        }
    }))
}

/// All d² clock-shift operators ordered by (i, j) lexicographically.
pub fn clock_shift_group(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(clock_shift(d, i, j).expect("indices in range"));
        }
    }
    out
}

/// Principal square root of a unitary, eigenphases taken in (−π, π].
pub fn principal_sqrt(u: &CMat) -> Result<CMat> {
    let dev = linalg::is_unitary(u, 1e-10);
    if dev > 0.0 {
        return Err(Error::NotUnitary(dev));
    }
    let n = u.nrows();
    // A unitary is normal: its hermitian and anti-hermitian parts commute and a
    // generic real combination of them has the eigenbasis of U.
    let h1 = linalg::hermitize(u);
    let h2 = CMat::from_fn(n, n, |r, c| (u[(r, c)] - u[(c, r)].conj()) * cplx(0.0, -0.5));
    for &t in &[0.618_033_988_749_894_9, 0.377_964_473_009_227_2, 1.414_213_562_373_095_1] {
        let m = &h1 + linalg::rscale(&h2, t);
        let (_, v) = linalg::eigh(&m);
        let d = v.adjoint() * u * &v;
        let off = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| d[(r, c)].norm())
            .fold(0.0, f64::max);
        if off > 1e-11 {
            continue;
        }
        let roots: Vec<c64> = (0..n)
            .map(|k| {
                let z = d[(k, k)];
                let mut ph = z.arg();
                if ph <= -PI + 1e-13 {
                    ph = PI;
                }
                c64::from_polar(1.0, ph / 2.0)
            })
            .collect();
        let r = &v * linalg::diag(&roots) * v.adjoint();
        return Ok(r);
    }
    Err(Error::NotUnitary(f64::NAN))
}

fn qubit(name: &str) -> SystemLabel {
    sys(name, 2)
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

pub fn pauli_x() -> CMat {
    linalg::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> CMat {
    linalg::from_rows(&[&[ZERO, cplx(0.0, -1.0)], &[cplx(0.0, 1.0), ZERO]])
}

pub fn pauli_z() -> CMat {
    linalg::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// ρ ↦ pρ + (1−p) σ_x ρ σ_x.
pub fn bit_flip(p: f64) -> Result<KrausChannel> {
    check_prob(p)?;
    KrausChannel::new(
        qubit(IN),
        qubit(OUT),
        vec![linalg::rscale(&linalg::eye(2), p.sqrt()), linalg::rscale(&pauli_x(), (1.0 - p).sqrt())],
    )
}

pub fn amplitude_damping(p: f64) -> Result<KrausChannel> {
    check_prob(p)?;
    let b0 = linalg::from_real(&[&[1.0, 0.0], &[0.0, (1.0 - p).sqrt()]]);
    let b1 = linalg::from_real(&[&[0.0, p.sqrt()], &[0.0, 0.0]]);
    KrausChannel::new(qubit(IN), qubit(OUT), vec![b0, b1])
}

/// Choi of the Werner–Holevo channel ∝ projector onto the (anti)symmetric subspace.
pub fn werner_holevo(d: usize, symmetric: bool) -> Result<LabeledOperator> {
    if d < 2 {
        return Err(Error::BadParameter("Werner–Holevo channels need d ≥ 2".into()));
    }
    let swap = qops::permutation_unitary(d, 2, &[1, 0])?;
    let s = if symmetric { 1.0 } else { -1.0 };
    let c = 2.0 / (d as f64 + s);
    let mat = CMat::from_fn(d * d, d * d, |r, cc| {
        let id = if r == cc { 1.0 } else { 0.0 };
        (cplx(id, 0.0) + swap.matrix()[(r, cc)] * s) * (c / 2.0)
    });
    LabeledOperator::new(vec![sys(IN, d), sys(OUT, d)], mat)
}

pub fn uniform_unitary_ensemble(unitaries: &[CMat]) -> Result<ChannelEnsemble> {
    if unitaries.is_empty() {
        return Err(Error::BadEnsemble("no unitaries".into()));
    }
    let d = unitaries[0].nrows();
    let q = 1.0 / unitaries.len() as f64;
    let mut members = Vec::with_capacity(unitaries.len());
    for u in unitaries {
        if u.nrows() != d {
            return Err(Error::DimMismatch("unitaries of different size".into()));
        }
        let dev = linalg::is_unitary(u, 1e-10);
        if dev > 0.0 {
            return Err(Error::NotUnitary(dev));
        }
        members.push((q, qops::choi_unitary(u, IN, OUT)));
    }
    ChannelEnsemble::new(members)
}

pub fn kraus_ensemble(channels: &[(f64, KrausChannel)]) -> Result<ChannelEnsemble> {
    ChannelEnsemble::new(
        channels
            .iter()
            .map(|(q, k)| {
                let c = choi(k);
                let c = c.relabel(&k.input.name, "__in").and_then(|c| c.relabel(&k.output.name, OUT)).and_then(|c| c.relabel("__in", IN));
                c.map(|c| (*q, c))
            })
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Unnormalised maximally entangled projector Σ_ij |ii⟩⟨jj| on d⊗d.
fn max_entangled(d: usize) -> CMat {
    CMat::from_fn(d * d, d * d, |r, c| if r % (d + 1) == 0 && c % (d + 1) == 0 { ONE } else { ZERO })
}

/// Members C_i ⊗ id_{d_E} with input I·E and output O·E.
pub fn tensor_with_identity(e: &ChannelEnsemble, d_e: usize) -> Result<ChannelEnsemble> {
    if d_e == 0 {
        return Err(Error::BadParameter("memory dimension must be ≥ 1".into()));
    }
    if d_e == 1 {
        return Ok(e.clone());
    }
    let (di, d_o) = (e.d_in(), e.d_out());
    let phi = LabeledOperator::new(vec![sys("E", d_e), sys("F", d_e)], max_entangled(d_e))?;
    let mut members = Vec::with_capacity(e.len());
    for (q, c) in &e.members {
        let big = qops::tensor(c, &phi)?;
        let big = qops::permute_systems(&big, &[IN, "E", OUT, "F"])?;
        members.push((*q, LabeledOperator::new(vec![sys(IN, di * d_e), sys(OUT, d_o * d_e)], big.into_matrix())?));
    }
    ChannelEnsemble::new(members)
}

/// Pairs members C_i ⊗ D_i with input I₁I₂ and output O₁O₂.
pub fn pair(e1: &ChannelEnsemble, e2: &ChannelEnsemble) -> Result<ChannelEnsemble> {
    if e1.len() != e2.len() {
        return Err(Error::BadEnsemble("paired ensembles differ in size".into()));
    }
    let mut members = Vec::with_capacity(e1.len());
    for ((q, c), (q2, d)) in e1.members.iter().zip(&e2.members) {
        if (q - q2).abs() > 1e-12 {
            return Err(Error::BadEnsemble("paired ensembles differ in weights".into()));
        }
        let a = c.relabel(IN, "I1")?.relabel(OUT, "O1")?;
        let b = d.relabel(IN, "I2")?.relabel(OUT, "O2")?;
        let t = qops::permute_systems(&qops::tensor(&a, &b)?, &["I1", "I2", "O1", "O2"])?;
        members.push((
            *q,
            LabeledOperator::new(vec![sys(IN, e1.d_in() * e2.d_in()), sys(OUT, e1.d_out() * e2.d_out())], t.into_matrix())?,
        ));
    }
    let mut out = ChannelEnsemble::new(members)?;
    out.layout = Layout::TwoCopy { first: Box::new(e1.clone()), second: Box::new(e2.clone()) };
    Ok(out)
}

/// Members C_i ⊗ C_i over I₁I₂ → O₁O₂.
pub fn two_copy(e: &ChannelEnsemble) -> Result<ChannelEnsemble> {
    pair(e, e)
}

/// The displayed square roots {1, √σ_x, √σ_y, √σ_z}.
pub fn sqrt_pauli_unitaries() -> Vec<CMat> {
    let w = c64::from_polar(std::f64::consts::FRAC_1_SQRT_2, PI / 4.0);
    let i = cplx(0.0, 1.0);
    vec![
        linalg::eye(2),
        linalg::scale(&linalg::from_rows(&[&[ONE, i], &[i, ONE]]), w),
        linalg::scale(&linalg::from_rows(&[&[ONE, -ONE], &[ONE, ONE]]), w),
        linalg::diag(&[ONE, i]),
    ]
}

pub fn pauli_unitaries() -> Vec<CMat> {
    vec![linalg::eye(2), pauli_x(), pauli_y(), pauli_z()]
}

/// Uniform ensemble of amplitude damping (p = 2/3), bit flip (p = 1/3) and identity.
pub fn adc_bf_id() -> Result<ChannelEnsemble> {
    let q = 1.0 / 3.0;
    kraus_ensemble(&[
        (q, amplitude_damping(2.0 / 3.0)?),
        (q, bit_flip(1.0 / 3.0)?),
        (q, KrausChannel::unitary(qubit(IN), qubit(OUT), linalg::eye(2))?),
    ])
}

pub fn werner_holevo_pair(d: usize) -> Result<ChannelEnsemble> {
    ChannelEnsemble::new(vec![(0.5, werner_holevo(d, true)?), (0.5, werner_holevo(d, false)?)])
}

/// Named presets: `pauli`, `clock_shift:d`, `sqrt_clock_shift:d`, `sqrt_pauli`,
/// `adc_bf_id`, `werner_holevo:d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Pauli,
    ClockShift(usize),
    SqrtClockShift(usize),
    SqrtPauli,
    AdcBfId,
    WernerHolevo(usize),
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let dim = |a: Option<&str>| -> Result<usize> {
            let a = a.ok_or_else(|| Error::Parse(format!("preset `{name}` needs a dimension, e.g. `{name}:3`")))?;
            let d: usize = a.parse().map_err(|_| Error::Parse(format!("bad dimension `{a}` in preset `{s}`")))?;
            if d < 2 {
                return Err(Error::Parse(format!("preset `{s}` needs dimension ≥ 2")));
            }
            Ok(d)
        };
        let no_arg = |p: Preset| -> Result<Preset> {
            if arg.is_some() {
                return Err(Error::Parse(format!("preset `{name}` takes no argument")));
            }
            Ok(p)
        };
        match name {
            "pauli" => no_arg(Preset::Pauli),
            "sqrt_pauli" => no_arg(Preset::SqrtPauli),
            "adc_bf_id" => no_arg(Preset::AdcBfId),
            "clock_shift" => Ok(Preset::ClockShift(dim(arg)?)),
            "sqrt_clock_shift" => Ok(Preset::SqrtClockShift(dim(arg)?)),
            "werner_holevo" => Ok(Preset::WernerHolevo(dim(arg)?)),
            _ => Err(Error::Parse(format!("unknown preset `{s}`"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Preset::Pauli => "pauli".into(),
            Preset::SqrtPauli => "sqrt_pauli".into(),
            Preset::AdcBfId => "adc_bf_id".into(),
            Preset::ClockShift(d) => format!("clock_shift:{d}"),
            Preset::SqrtClockShift(d) => format!("sqrt_clock_shift:{d}"),
            Preset::WernerHolevo(d) => format!("werner_holevo:{d}"),
        }
    }

    /// Unitaries of a unitary preset, if any.
    pub fn unitaries(&self) -> Option<Vec<CMat>> {
        match self {
            Preset::Pauli => Some(pauli_unitaries()),
            Preset::SqrtPauli => Some(sqrt_pauli_unitaries()),
            Preset::ClockShift(d) => Some(clock_shift_group(*d)),
            Preset::SqrtClockShift(d) => Some(
                clock_shift_group(*d).iter().map(|u| principal_sqrt(u).expect("clock-shift is unitary")).collect(),
            ),
            Preset::AdcBfId | Preset::WernerHolevo(_) => None,
        }
    }

    pub fn ensemble(&self) -> Result<ChannelEnsemble> {
        match self {
            Preset::AdcBfId => adc_bf_id(),
            Preset::WernerHolevo(d) => werner_holevo_pair(*d),
            _ => uniform_unitary_ensemble(&self.unitaries().expect("unitary preset")),
        }
    }
}
