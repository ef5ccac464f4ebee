//! Explicit state / processing / measurement realisations of testers.

use super::{validate, Tester, TesterKind, I1, I2, O1, O2};
use crate::channels::{IN, OUT};
use crate::linalg::{self, CMat};
use crate::qops::{self, partial_trace, sys, LabeledOperator};
use crate::{Error, Result};

pub const E: &str = "E";
pub const E1: &str = "E1";
pub const E2: &str = "E2";

/// Eigenvalues of `σ` (and `R`) below this fraction of the largest are
/// treated as zero when inverting their square roots.
const PINV_REL: f64 = 1e-10;

/// Tolerance on tester constraints accepted for realisation.
const ACCEPT_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct Realization {
    /// `ρ` on `[I, E]` or `[I1, E1]`.
    pub state: LabeledOperator,
    /// Choi of the intermediate channel on `[E1, O1, I2, E2]`.
    pub processing: Option<LabeledOperator>,
    /// POVM on `[E, O]` or `[E2, O2]`.
    pub povm: Vec<LabeledOperator>,
}

fn transposed(x: &LabeledOperator) -> LabeledOperator {
    x.map_matrix(linalg::transpose)
}

impl Realization {
    /// Tester elements `T^i = (ρ * K * (M^i)ᵀ)ᵀ`, so that `Tr(T^i C)` is the
    /// probability of outcome `i`.
    pub fn tester(&self) -> Result<Tester> {
        let (front, kind) = match &self.processing {
            None => (self.state.clone(), TesterKind::SingleCopy),
            Some(k) => (qops::link_product(&self.state, k)?, TesterKind::Adaptive2),
        };
        let elements = self
            .povm
            .iter()
            .map(|m| Ok(transposed(&qops::link_product(&front, &transposed(m))?)))
            .collect::<Result<Vec<_>>>()?;
        Tester::new(kind, elements)
    }

    /// Largest violation of: unit-trace PSD state, complete POVM, and the
    /// channel condition on the processing.
    pub fn violation(&self) -> f64 {
        let mut v = (self.state.trace().re - 1.0).abs().max(-self.state.min_eig()).max(self.state.herm_dev());
        let mut sum = linalg::zeros(self.povm[0].side(), self.povm[0].side());
        for m in &self.povm {
            v = v.max(-m.min_eig()).max(m.herm_dev());
            sum += m.matrix();
        }
        v = v.max(linalg::max_abs_diff(&sum, &linalg::eye(sum.nrows())));
        if let Some(k) = &self.processing {
            v = v.max(-k.min_eig());
            let marg = partial_trace(k, &[I2, E2]).expect("processing systems");
            v = v.max(linalg::max_abs_diff(marg.matrix(), &linalg::eye(marg.side())));
        }
        v
    }
}

/// `(S ⊗ 1) X (S ⊗ 1)†` where `S` acts on the leading factor.
fn sandwich(s: &CMat, x: &CMat) -> CMat {
    let rest = x.nrows() / s.nrows();
    let big = linalg::kron(s, &linalg::eye(rest));
    &(&big * x) * big.adjoint()
}

/// Replaces `M^i` by `S^{-1/2} M^i S^{-1/2}` with `S = Σ M^i`, which leaves
/// an exactly complete POVM unchanged.
fn complete(povm: &mut [CMat]) {
    let n = povm[0].nrows();
    let mut s = linalg::zeros(n, n);
    for m in povm.iter() {
        s += m;
    }
    if linalg::max_abs_diff(&s, &linalg::eye(n)) == 0.0 {
        return;
    }
    let inv = linalg::psd_pinv_sqrt(&s, 1e-14);
    for m in povm.iter_mut() {
        *m = linalg::hermitize(&(&(&inv * &*m) * &inv));
    }
}

/// Measurement `M^i = (√σ⁺ ⊗ 1) T^i (√σ⁺ ⊗ 1) + G^i` with the kernel
/// completion assigned to the first outcome.
fn povm_from(sigma: &CMat, elements: &[CMat]) -> Vec<CMat> {
    let rel = PINV_REL;
    let pinv = linalg::psd_pinv_sqrt(sigma, rel);
    let ker = linalg::kernel_projector(sigma, rel);
    let mut povm: Vec<CMat> = elements.iter().map(|t| linalg::hermitize(&sandwich(&pinv, t))).collect();
    let rest = elements[0].nrows() / sigma.nrows();
    povm[0] += linalg::kron(&ker, &linalg::eye(rest));
    complete(&mut povm);
    povm
}

/// Vectorised `conj(√X)` as a pure (unnormalised) state on `X ⊗ X`.
fn purification(x: &CMat) -> CMat {
    let a = linalg::conj(&linalg::psd_sqrt(x));
    let n = x.nrows();
    let v: Vec<linalg::c64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    linalg::outer(&v, &v)
}

fn check(t: &Tester, kind: TesterKind) -> Result<()> {
    let t = t.with_kind(kind)?;
    let r = validate(&t);
    if !r.passes(ACCEPT_TOL) {
        return Err(Error::NotATester(format!(
            "{kind:?} constraints violated (min eigenvalue {:.2e}, residual {:.2e})",
            r.min_eig,
            r.max_residual()
        )));
    }
    Ok(())
}

/// Purified input with memory `E ≅ I` followed by a joint measurement.
pub fn realize_single_copy(t: &Tester) -> Result<Realization> {
    if t.kind != TesterKind::SingleCopy {
        return Err(Error::NotATester(format!("expected a single-copy tester, got {:?}", t.kind)));
    }
    check(t, TesterKind::SingleCopy)?;
    let (di, d_o) = (t.dim_of(IN)?, t.dim_of(OUT)?);
    let sigma = partial_trace(&t.sum(), &[OUT])?.scaled(1.0 / d_o as f64).into_matrix();
    let sigma = linalg::hermitize(&sigma);
    let mut rho = purification(&sigma);
    let tr = linalg::trace(&rho).re;
    rho = linalg::rscale(&rho, 1.0 / tr);
    let elements: Vec<CMat> = t.elements.iter().map(|x| x.matrix().clone()).collect();
    let povm = povm_from(&sigma, &elements)
        .into_iter()
        .map(|m| LabeledOperator::new(vec![sys(E, di), sys(OUT, d_o)], m))
        .collect::<Result<Vec<_>>>()?;
    Ok(Realization { state: LabeledOperator::new(vec![sys(IN, di), sys(E, di)], rho)?, processing: None, povm })
}

/// Purified first input, an intermediate channel storing `I1 O1 I2` in
/// memory, and a final joint measurement.
pub fn realize_adaptive(t: &Tester) -> Result<Realization> {
    if !matches!(t.kind, TesterKind::Adaptive2 | TesterKind::ClassicallyAdaptive2) {
        return Err(Error::NotATester(format!("expected an adaptive tester, got {:?}", t.kind)));
    }
    check(t, TesterKind::Adaptive2)?;
    let (a, b, c, d) = (t.dim_of(I1)?, t.dim_of(O1)?, t.dim_of(I2)?, t.dim_of(O2)?);
    let w = t.sum();
    let r = partial_trace(&w, &[O2])?.scaled(1.0 / d as f64);
    let sigma = partial_trace(&r, &[O1, I2])?.scaled(1.0 / b as f64);
    let (r, sigma) = (linalg::hermitize(r.matrix()), linalg::hermitize(sigma.matrix()));
    let rho = linalg::rscale(&purification(&sigma), 1.0 / linalg::trace(&sigma).re);
    let de2 = a * b * c;
    // K = (conj √σ⁺ ⊗ 1) |ψ_R⟩⟨ψ_R| (conj √σ⁺ ⊗ 1) + Π⊥ ⊗ 1 ⊗ |0⟩⟨0|
    let rel = PINV_REL;
    let s = linalg::conj(&linalg::psd_pinv_sqrt(&sigma, rel));
    let mut k = sandwich(&s, &purification(&r));
    let ker = linalg::conj(&linalg::kernel_projector(&sigma, rel));
    k += linalg::kron(&linalg::kron(&ker, &linalg::eye(b)), &linalg::ketbra(c * de2, 0, 0));
    // exact channel normalisation
    let kl = LabeledOperator::new(vec![sys(E1, a), sys(O1, b), sys(I2, c), sys(E2, de2)], linalg::hermitize(&k))?;
    let marg = partial_trace(&kl, &[I2, E2])?.into_matrix();
    let fix = linalg::psd_pinv_sqrt(&marg, 1e-14);
    let kl = kl.map_matrix(|x| linalg::hermitize(&sandwich(&fix, x)));
    let elements: Vec<CMat> = t.elements.iter().map(|x| x.matrix().clone()).collect();
    let povm = povm_from(&r, &elements)
        .into_iter()
        .map(|m| LabeledOperator::new(vec![sys(E2, de2), sys(O2, d)], m))
        .collect::<Result<Vec<_>>>()?;
    Ok(Realization {
        state: LabeledOperator::new(vec![sys(I1, a), sys(E1, a)], rho)?,
        processing: Some(kl),
        povm,
    })
}
