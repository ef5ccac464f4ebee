//! Exact SDPs over testers with unrestricted memory.

use super::{ensemble_chois, Tester, TesterKind, I1, I2, O1, O2};
use crate::channels::{ChannelEnsemble, IN, OUT};
use crate::linalg;
use crate::qops::LabeledOperator;
use crate::sdpiface::{self, BlockId, ConicProblem, EntryMap, Sense, SolveOptions, SparseMat, Status, Term};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct OptimalTester {
    /// Success probability of `tester`.
    pub value: f64,
    pub dual_value: f64,
    pub status: Status,
    pub tester: Tester,
}

/// `X ↦ X − (Tr_S X) ⊗ 1_S / d_S` for the subsystems `S` in `mask`.
pub(crate) fn omega_map(dims: &[usize], mask: &[bool]) -> EntryMap {
    let n: usize = dims.iter().product();
    let d: usize = dims.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| x).product();
    let traced: Vec<usize> = dims.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect();
    let mut transfers: Vec<(usize, usize, usize, usize, linalg::c64)> = EntryMap::identity(n).transfers;
    let coef = linalg::cplx(-1.0 / d as f64, 0.0);
    let with_traced = |digs: &[usize], u: &[usize]| {
        let mut out = digs.to_vec();
        let mut k = 0;
        for (p, &m) in mask.iter().enumerate() {
            if m {
                out[p] = u[k];
                k += 1;
            }
        }
        crate::qops::undigits(&out, dims)
    };
    let traced_digits = |digs: &[usize]| -> Vec<usize> {
        digs.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect()
    };
    let nt: usize = traced.iter().product();
    for sc in 0..n {
        let dc = crate::qops::digits(sc, dims);
        for sr in 0..n {
            let dr = crate::qops::digits(sr, dims);
            if traced_digits(&dr) != traced_digits(&dc) {
                continue;
            }
            for t in 0..nt {
                let u = crate::qops::digits(t, &traced);
                transfers.push((sr, sc, with_traced(&dr, &u), with_traced(&dc, &u), coef));
            }
        }
    }
    EntryMap { n_in: n, n_out: n, transfers }
}

/// Adds one PSD block per element and the objective `Σ q_i Tr(T^i C^i)`.
fn element_blocks(p: &mut ConicProblem, e: &ChannelEnsemble, chois: &[LabeledOperator]) -> Result<Vec<BlockId>> {
    let n = chois[0].side();
    let ids: Vec<BlockId> = (0..e.len()).map(|i| p.add_block(format!("T{i}"), n)).collect::<Result<_>>()?;
    let obj = ids
        .iter()
        .zip(e.weights())
        .zip(chois)
        .map(|((&id, q), c)| Term::Block(id, SparseMat::from_dense(&linalg::rscale(c.matrix(), q), 0.0)))
        .collect();
    p.set_objective(obj, 0.0)?;
    Ok(ids)
}

fn trace_equality(p: &mut ConicProblem, ids: &[BlockId], n: usize, value: f64) -> Result<()> {
    p.add_equality(ids.iter().map(|&id| Term::Block(id, SparseMat::identity(n))).collect(), value)
}

fn matrix_zero(p: &mut ConicProblem, ids: &[BlockId], map: &EntryMap) -> Result<()> {
    let parts: Vec<(BlockId, &EntryMap)> = ids.iter().map(|&id| (id, map)).collect();
    p.add_matrix_equality(&parts, &[], &linalg::zeros(map.n_out, map.n_out))
}

pub(crate) fn finish(p: &ConicProblem, ids: &[BlockId], kind: TesterKind, systems: &LabeledOperator, opts: &SolveOptions) -> Result<OptimalTester> {
    let s = sdpiface::solve_with(p, opts)?;
    if s.status != Status::Optimal {
        return Err(Error::Solver(format!("tester SDP ended with {:?}", s.status)));
    }
    let elements = ids
        .iter()
        .map(|&id| LabeledOperator::new(systems.systems().to_vec(), linalg::hermitize(s.block(id))))
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalTester { value: s.primal_value, dual_value: s.dual_value, status: s.status, tester: Tester::new(kind, elements)? })
}

fn single_copy_like(e: &ChannelEnsemble, kind: TesterKind, opts: &SolveOptions) -> Result<OptimalTester> {
    let chois = ensemble_chois(e, kind)?;
    let dims = chois[0].dims();
    let n = chois[0].side();
    let outputs: Vec<bool> = chois[0].names().iter().map(|s| *s == OUT || *s == O1 || *s == O2).collect();
    let d_o: usize = dims.iter().zip(&outputs).filter(|(_, &m)| m).map(|(&d, _)| d).product();
    let mut p = ConicProblem::new(Sense::Maximize);
    let ids = element_blocks(&mut p, e, &chois)?;
    trace_equality(&mut p, &ids, n, d_o as f64)?;
    matrix_zero(&mut p, &ids, &omega_map(&dims, &outputs))?;
    finish(&p, &ids, kind, &chois[0], opts)
}

/// Optimum over all single-copy testers `Σ T^i = σ ⊗ 1_O`.
pub fn optimal_single_copy(e: &ChannelEnsemble) -> Result<OptimalTester> {
    optimal_single_copy_with(e, &SolveOptions::default())
}

pub fn optimal_single_copy_with(e: &ChannelEnsemble, opts: &SolveOptions) -> Result<OptimalTester> {
    debug_assert_eq!(e.members[0].1.names(), vec![IN, OUT]);
    single_copy_like(e, TesterKind::SingleCopy, opts)
}

/// Optimum over parallel two-copy testers `Σ T^i = σ_{I1 I2} ⊗ 1_{O1 O2}`.
pub fn optimal_parallel(e2: &ChannelEnsemble) -> Result<OptimalTester> {
    single_copy_like(e2, TesterKind::Parallel2, &SolveOptions::default())
}

/// Optimum over adaptive two-copy testers (two-step comb constraints).
pub fn optimal_adaptive(e2: &ChannelEnsemble) -> Result<OptimalTester> {
    optimal_adaptive_with(e2, &SolveOptions::default())
}

pub fn optimal_adaptive_with(e2: &ChannelEnsemble, opts: &SolveOptions) -> Result<OptimalTester> {
    let (p, ids, chois) = adaptive_problem(e2)?;
    finish(&p, &ids, TesterKind::Adaptive2, &chois[0], opts)
}

/// The adaptive tester SDP before solving: problem, element blocks and the
/// member Chois on `[I1, O1, I2, O2]`.
pub(crate) fn adaptive_problem(e2: &ChannelEnsemble) -> Result<(ConicProblem, Vec<BlockId>, Vec<LabeledOperator>)> {
    let chois = ensemble_chois(e2, TesterKind::Adaptive2)?;
    debug_assert_eq!(chois[0].names(), vec![I1, O1, I2, O2]);
    let dims = chois[0].dims();
    let n = chois[0].side();
    let mut p = ConicProblem::new(Sense::Maximize);
    let ids = element_blocks(&mut p, e2, &chois)?;
    trace_equality(&mut p, &ids, n, (dims[1] * dims[3]) as f64)?;
    // W = R ⊗ 1_{O2}
    matrix_zero(&mut p, &ids, &omega_map(&dims, &[false, false, false, true]))?;
    // Tr_{I2 O2} W ∝ σ ⊗ 1_{O1}
    let first = EntryMap::partial_trace(&dims, &[false, false, true, true]).then(&omega_map(&dims[..2], &[false, true]))?;
    matrix_zero(&mut p, &ids, &first)?;
    Ok((p, ids, chois))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    #[test]
    fn omega_kills_product_with_identity() {
        let a = linalg::from_real(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = linalg::kron(&a, &linalg::eye(3));
        let m = omega_map(&[2, 3], &[false, true]);
        assert!(linalg::max_abs(&m.apply(&x)) < 1e-14);
        let y = linalg::kron(&linalg::eye(3), &a);
        let m = omega_map(&[3, 2], &[true, false]);
        assert!(linalg::max_abs(&m.apply(&y)) < 1e-14);
        let z: CMat = linalg::kron(&a, &a);
        assert!(linalg::max_abs(&omega_map(&[2, 2], &[false, true]).apply(&z)) > 0.1);
    }
}
