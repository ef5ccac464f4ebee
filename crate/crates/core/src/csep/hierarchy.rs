//! PPT-constrained symmetric extensions of the separable cone.
//!
//! For a two-party problem with extended party `A` and other party `B`, the
//! variable is `ρ` on `A^{⊗k} ⊗ B`, kept block diagonal in the declared
//! blocks of `B`. In bosonic mode each block is stored in the basis of
//! `Sym^k(A) ⊗ B_b`; otherwise on the full `A^{⊗k} ⊗ B_b` with explicit
//! invariance under swaps of neighbouring copies.

use std::collections::HashMap;
use std::path::PathBuf;

use super::{ConstrainedSepProblem, Party};
use crate::linalg::{self, c64, CMat, ONE, ZERO};
use crate::qops;
use crate::sdpiface::{
    self, BackendKind, BlockId, ConicProblem, EntryMap, ImageCone, Sense, SolveOptions, SparseMat, Status, Term,
};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct HierarchyOptions {
    pub k: usize,
    pub ppt: bool,
    /// Party whose copies are extended; the lowest-dimensional one when
    /// unset. Indices refer to the two-party form (after merging).
    pub extend_party: Option<usize>,
    pub bosonic: bool,
    /// Largest admissible PSD block side.
    pub size_cap: usize,
    pub solve: SolveOptions,
    /// Write the conic problem in SDPA format before solving.
    pub dump: Option<PathBuf>,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            k: 1,
            ppt: true,
            extend_party: None,
            bosonic: true,
            size_cap: 5000,
            solve: SolveOptions::default(),
            dump: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HierarchyBound {
    /// Upper bound on the separable optimum: the dual objective.
    pub value: f64,
    pub primal_value: f64,
    pub status: Status,
    pub k: usize,
    pub ppt: bool,
    pub bosonic: bool,
    pub extend_party: usize,
    /// Extension blocks, one per block of the other party, in the stored
    /// basis.
    pub extension: Vec<CMat>,
    /// Two-party marginal over the (merged) parties in problem order.
    pub marginal: CMat,
    pub backend: BackendKind,
    pub max_block: usize,
    pub equalities: usize,
}

/// Hierarchy level `k` with the given flags; see [`upper_bound_with`].
pub fn upper_bound(
    p: &ConstrainedSepProblem,
    k: usize,
    ppt: bool,
    extend_party: usize,
    bosonic: bool,
) -> Result<HierarchyBound> {
    upper_bound_with(p, &HierarchyOptions { k, ppt, extend_party: Some(extend_party), bosonic, ..Default::default() })
}

/// Lowest-dimensional party of the two-party form, first on ties.
pub fn default_extension(p: &ConstrainedSepProblem) -> usize {
    let d: Vec<usize> = p.parties().iter().map(|q| q.dim).collect();
    if d[1] < d[0] {
        1
    } else {
        0
    }
}

/// Labels of the copies basis: `Sym^l(C^d)` or `(C^d)^{⊗l}`.
struct ExtBasis {
    d: usize,
    k: usize,
    bosonic: bool,
}

fn arrangements(ms: &[usize]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &x in ms {
        *counts.entry(x).or_insert(0) += 1;
    }
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    fact(ms.len()) / counts.values().map(|&c| fact(c)).product::<f64>()
}

fn multisets(d: usize, l: usize) -> Result<Vec<Vec<usize>>> {
    if l == 0 {
        return Ok(vec![Vec::new()]);
    }
    Ok(qops::symmetric_isometry(d, l)?.multisets)
}

impl ExtBasis {
    fn dim(&self, l: usize) -> Option<usize> {
        if self.bosonic {
            qops::binomial(self.d + l - 1, l)
        } else {
            self.d.checked_pow(l as u32)
        }
    }

    /// Isometry from the `k`-copy space into `(l copies) ⊗ (k − l copies)`.
    fn split(&self, l: usize) -> Result<CMat> {
        let k = self.k;
        if !self.bosonic || l == 0 || l == k {
            return Ok(linalg::eye(self.dim(k).unwrap()));
        }
        let mk = multisets(self.d, k)?;
        let ml = multisets(self.d, l)?;
        let mr = multisets(self.d, k - l)?;
        let il: HashMap<&Vec<usize>, usize> = ml.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let ir: HashMap<&Vec<usize>, usize> = mr.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut j = linalg::zeros(ml.len() * mr.len(), mk.len());
        for (c, m) in mk.iter().enumerate() {
            let am = arrangements(m);
            for (a, m1) in ml.iter().enumerate() {
                // m2 = m − m1 as multisets, if m1 ⊆ m
                let mut rest = m.clone();
                let mut ok = true;
                for x in m1 {
                    match rest.iter().position(|y| y == x) {
                        Some(pos) => {
                            rest.remove(pos);
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let b = ir[&rest];
                let _ = il[m1];
                j[(a * mr.len() + b, c)] = c64::new((arrangements(m1) * arrangements(&rest) / am).sqrt(), 0.0);
            }
        }
        Ok(j)
    }
}

/// `C = Σ_m (J_m ⊗ 1)† F (J_m ⊗ 1)` where `J_m` are the row groups of the
/// split isometry onto `(k−1 copies) ⊗ A`.
fn lifted_cost(j: &CMat, da: usize, s: usize, fb: &CMat) -> CMat {
    let dk = j.ncols();
    let groups = j.nrows() / da;
    let n = dk * s;
    let mut c = linalg::zeros(n, n);
    for m in 0..groups {
        let jm = CMat::from_fn(da, dk, |a, col| j[(m * da + a, col)]);
        if linalg::max_abs(&jm) == 0.0 {
            continue;
        }
        let w = linalg::kron(&jm, &linalg::eye(s));
        let t = fb * &w;
        c += w.adjoint() * t;
    }
    c
}

fn transfers_map(n_in: usize, n_out: usize, transfers: Vec<(usize, usize, usize, usize, c64)>) -> EntryMap {
    EntryMap { n_in, n_out, transfers }
}

pub fn upper_bound_with(p: &ConstrainedSepProblem, opts: &HierarchyOptions) -> Result<HierarchyBound> {
    let k = opts.k;
    if k == 0 {
        return Err(Error::BadParameter("hierarchy level k must be ≥ 1".into()));
    }
    let q = p.merged()?;
    let e = opts.extend_party.unwrap_or_else(|| default_extension(&q));
    if e > 1 {
        return Err(Error::BadIndex(format!("extension party {e} of a two-party form")));
    }
    let o = 1 - e;
    let (pa, pb): (&Party, &Party) = (q.party(e), q.party(o));
    let f = q.ordered_cost(e)?;
    let (da, db) = (pa.dim, pb.dim);
    let basis = ExtBasis { d: da, k, bosonic: opts.bosonic };
    let overflow = || Error::SizeOverflow(format!("{k} copies of a {da}-dimensional party"));
    let dims: Vec<usize> = (0..=k).map(|l| basis.dim(l).ok_or_else(overflow)).collect::<Result<_>>()?;
    let dk = dims[k];

    let blocks = pb.blocks().to_vec();
    let smax = blocks.iter().map(|b| b.len()).max().unwrap_or(0);
    let mut max_side = dk.checked_mul(smax).ok_or_else(overflow)?;
    if opts.ppt {
        for l in 1..k {
            max_side = max_side.max(dims[l] * dims[k - l] * smax);
        }
    }
    if pa.cut().is_some() && opts.ppt {
        max_side = max_side.max(dims[k - 1] * da * smax);
    }
    if max_side > opts.size_cap {
        return Err(Error::SizeOverflow(format!(
            "extension block side {max_side} exceeds the cap {}",
            opts.size_cap
        )));
    }

    let j_last = basis.split(k - 1)?;
    let locals: Vec<HashMap<usize, usize>> =
        blocks.iter().map(|b| b.iter().enumerate().map(|(u, &i)| (i, u)).collect()).collect();

    let mut prob = ConicProblem::new(Sense::Maximize);
    let mut ids: Vec<BlockId> = Vec::with_capacity(blocks.len());
    for (b, idx) in blocks.iter().enumerate() {
        ids.push(prob.add_block(format!("ext[{b}]"), dk * idx.len())?);
    }

    // unit trace
    prob.add_equality(
        ids.iter().zip(&blocks).map(|(&id, idx)| Term::Block(id, SparseMat::identity(dk * idx.len()))).collect(),
        1.0,
    )?;

    // objective through the single-copy marginal
    let mut objective = Vec::with_capacity(blocks.len());
    for (b, idx) in blocks.iter().enumerate() {
        let s = idx.len();
        let fb = CMat::from_fn(da * s, da * s, |r, c| {
            let (a1, u) = (r / s, r % s);
            let (a2, v) = (c / s, c % s);
            f[(a1 * db + idx[u], a2 * db + idx[v])]
        });
        let cb = lifted_cost(&j_last, da, s, &fb);
        objective.push(Term::Block(ids[b], SparseMat::from_dense(&linalg::hermitize(&cb), 1e-15)));
    }
    prob.set_objective(objective, 0.0)?;

    // copies symmetry (permutation mode only; bosonic storage is symmetric)
    if !opts.bosonic && k > 1 {
        for (b, idx) in blocks.iter().enumerate() {
            let s = idx.len();
            let n = dk * s;
            for t in 0..k - 1 {
                let mut sigma: Vec<usize> = (0..k).collect();
                sigma.swap(t, t + 1);
                let u = qops::permutation_unitary(da, k, &sigma)?.into_matrix();
                let us = linalg::kron(&u, &linalg::eye(s));
                let mut m = EntryMap::conjugation(&us);
                for tr in m.transfers.iter_mut() {
                    tr.4 = -tr.4;
                }
                m.transfers.extend(EntryMap::identity(n).transfers);
                prob.add_matrix_equality(&[(ids[b], &m)], &[], &linalg::zeros(n, n))?;
            }
        }
    }

    // lifted B constraint: Tr_B[(1 ⊗ H) ρ] = β Tr_B ρ on the k copies
    for row in pb.constraint.hermitian_rows() {
        let mut maps = Vec::new();
        for (b, idx) in blocks.iter().enumerate() {
            let s = idx.len();
            let h = super::affine::restrict(&row.entries, &locals[b]);
            if h.is_empty() && row.beta == 0.0 {
                continue;
            }
            let mut tr = Vec::with_capacity(dk * dk * (h.len() + s));
            for m2 in 0..dk {
                for m1 in 0..dk {
                    for &(r, c, v) in &h {
                        // Σ_{u,v} H[v,u] X[(m1,u),(m2,v)]
                        tr.push((m1 * s + c, m2 * s + r, m1, m2, v));
                    }
                    if row.beta != 0.0 {
                        for u in 0..s {
                            tr.push((m1 * s + u, m2 * s + u, m1, m2, c64::new(-row.beta, 0.0)));
                        }
                    }
                }
            }
            maps.push((ids[b], transfers_map(dk * s, dk, tr)));
        }
        if maps.is_empty() {
            continue;
        }
        let parts: Vec<(BlockId, &EntryMap)> = maps.iter().map(|(id, m)| (*id, m)).collect();
        prob.add_matrix_equality(&parts, &[], &linalg::zeros(dk, dk))?;
    }

    // lifted A constraint on one copy, per block of B:
    // Tr_{A_k}[(1 ⊗ G ⊗ 1) ρ] = α Tr_{A_k} ρ
    let a_rows = pa.constraint.hermitian_rows();
    if !a_rows.is_empty() {
        let dkm = dims[k - 1];
        for (b, idx) in blocks.iter().enumerate() {
            let s = idx.len();
            let w = linalg::kron(&j_last, &linalg::eye(s));
            let lift = EntryMap::conjugation(&w);
            let nz = dkm * s;
            for row in &a_rows {
                let mut tr = Vec::new();
                for m2 in 0..dkm {
                    for m1 in 0..dkm {
                        for v in 0..s {
                            for u in 0..s {
                                let dst = (m1 * s + u, m2 * s + v);
                                for &(r, c, g) in &row.entries {
                                    // G[a', a] Z[(m1,a,u),(m2,a',v)]
                                    tr.push(((m1 * da + c) * s + u, (m2 * da + r) * s + v, dst.0, dst.1, g));
                                }
                                if row.beta != 0.0 {
                                    for a in 0..da {
                                        tr.push((
                                            (m1 * da + a) * s + u,
                                            (m2 * da + a) * s + v,
                                            dst.0,
                                            dst.1,
                                            c64::new(-row.beta, 0.0),
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
                let contract = transfers_map(dkm * da * s, nz, tr);
                let m = lift.then(&contract)?;
                prob.add_matrix_equality(&[(ids[b], &m)], &[], &linalg::zeros(nz, nz))?;
            }
        }
    }

    if opts.ppt {
        for (b, idx) in blocks.iter().enumerate() {
            let s = idx.len();
            for l in 1..=k {
                let jl = basis.split(l)?;
                let (left, right) = (dims[l], dims[k - l] * s);
                let conj = EntryMap::conjugation(&linalg::kron(&jl, &linalg::eye(s)));
                let pt = EntryMap::partial_transpose(&[left, right], &[true, false]);
                let map = conj.then(&pt)?;
                prob.add_psd_image(ImageCone::new(format!("pt{l}[{b}]"), left * right).with_part(ids[b], map))?;
            }
            if let Some((_, d2)) = pb.cut() {
                let map = cut_transpose_local(dk, idx, &locals[b], d2)?;
                prob.add_psd_image(ImageCone::new(format!("cutB[{b}]"), dk * s).with_part(ids[b], map))?;
            }
            if let Some((d1, d2)) = pa.cut() {
                let dkm = dims[k - 1];
                let conj = EntryMap::conjugation(&linalg::kron(&j_last, &linalg::eye(s)));
                let pt = EntryMap::partial_transpose(&[dkm, d1, d2, s], &[false, false, true, false]);
                let map = conj.then(&pt)?;
                prob.add_psd_image(ImageCone::new(format!("cutA[{b}]"), dkm * da * s).with_part(ids[b], map))?;
            }
        }
    }

    if let Some(path) = &opts.dump {
        prob.write_sdpa(path)?;
    }
    let sol = sdpiface::solve_with(&prob, &opts.solve)?;
    if matches!(sol.status, Status::Infeasible | Status::Unbounded) {
        return Err(Error::Solver(format!("hierarchy level {k} reported {:?}", sol.status)));
    }

    let extension: Vec<CMat> = ids.iter().map(|&id| sol.block(id).clone()).collect();
    // marginal on A ⊗ B, then back to problem order
    let mut rho = linalg::zeros(da * db, da * db);
    let groups = j_last.nrows() / da;
    for (b, idx) in blocks.iter().enumerate() {
        let s = idx.len();
        let x = &extension[b];
        for m in 0..groups {
            let jm = CMat::from_fn(da, dk, |a, col| j_last[(m * da + a, col)]);
            let w = linalg::kron(&jm, &linalg::eye(s));
            let y = &w * x * w.adjoint();
            for r in 0..da * s {
                for c in 0..da * s {
                    let (a1, u) = (r / s, r % s);
                    let (a2, v) = (c / s, c % s);
                    rho[(a1 * db + idx[u], a2 * db + idx[v])] += y[(r, c)];
                }
            }
        }
    }
    let marginal = if e == 0 {
        rho
    } else {
        let lo = qops::LabeledOperator::new(vec![qops::sys("a", da), qops::sys("b", db)], rho)?;
        qops::permute_systems(&lo, &["b", "a"])?.into_matrix()
    };
    Ok(HierarchyBound {
        value: if sol.status == Status::Optimal { sol.dual_value } else { sol.dual_value.max(sol.primal_value) },
        primal_value: sol.primal_value,
        status: sol.status,
        k,
        ppt: opts.ppt,
        bosonic: opts.bosonic,
        extend_party: e,
        extension,
        marginal,
        backend: sol.backend,
        max_block: max_side,
        equalities: prob.num_equalities(),
    })
}

/// Partial transpose on the second factor of the other party's internal cut,
/// acting on one stored block `(copies) ⊗ B_b`.
fn cut_transpose_local(dk: usize, idx: &[usize], local: &HashMap<usize, usize>, d2: usize) -> Result<EntryMap> {
    let s = idx.len();
    let mut tr = Vec::with_capacity(dk * dk * s * s);
    for m2 in 0..dk {
        for m1 in 0..dk {
            for v in 0..s {
                for u in 0..s {
                    let (gu, gv) = (idx[u], idx[v]);
                    let ru = (gu / d2) * d2 + gv % d2;
                    let cv = (gv / d2) * d2 + gu % d2;
                    let (Some(&lu), Some(&lv)) = (local.get(&ru), local.get(&cv)) else {
                        return Err(Error::BadParameter("internal cut is not compatible with the blocks".into()));
                    };
                    tr.push((m1 * s + u, m2 * s + v, m1 * s + lu, m2 * s + lv, ONE));
                }
            }
        }
    }
    let _ = ZERO;
    Ok(transfers_map(dk * s, dk * s, tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_isometry_onto_symmetric_parts() {
        for (d, k) in [(2, 3), (3, 4), (4, 2)] {
            let b = ExtBasis { d, k, bosonic: true };
            for l in 0..=k {
                let j = b.split(l).unwrap();
                let g = j.adjoint() * &j;
                assert!(linalg::max_abs_diff(&g, &linalg::eye(j.ncols())) < 1e-12, "d={d} k={k} l={l}");
            }
            // consistency with the explicit isometries for 0 < l < k
            let vk = qops::symmetric_isometry(d, k).unwrap().matrix();
            let l = 1;
            let vl = qops::symmetric_isometry(d, l).unwrap().matrix();
            let vr = qops::symmetric_isometry(d, k - l).unwrap().matrix();
            let direct = linalg::kron(&vl, &vr).adjoint() * &vk;
            assert!(linalg::max_abs_diff(&direct, &b.split(l).unwrap()) < 1e-12);
        }
    }
}
