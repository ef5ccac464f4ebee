//! Constrained separability: optimise `Tr(F ρ)` over products of party
//! states that each satisfy an affine constraint.
//!
//! Upper bounds come from the PPT-constrained symmetric-extension hierarchy
//! ([`upper_bound`]), lower bounds from alternating optimisation
//! ([`seesaw`]), and polytope certificates relate the two ([`polytope`]).

mod affine;
mod hierarchy;
pub mod polytope;
mod seesaw;
mod space;

use std::collections::HashMap;

pub use affine::AffineMap;
pub use hierarchy::{upper_bound, upper_bound_with, HierarchyBound, HierarchyOptions};
pub use polytope::{
    approximation_radius, f_tau, polytope_certificate, seesaw_error_bound, Interval, Polytope, SeesawCertificate,
};
pub use seesaw::{seesaw, seesaw_with, SeesawOptions, SeesawResult};
pub use space::{is_degenerate, party_optimum, party_feasible, PartyOptimum};

use crate::linalg::{self, CMat, ZERO};
use crate::qops::{self, LabeledOperator};
use crate::{Error, Result};

/// One factor of a constrained-separable decomposition.
#[derive(Clone, Debug)]
pub struct Party {
    pub name: String,
    pub dim: usize,
    pub constraint: AffineMap,
    /// Index sets of a block-diagonal decomposition that optimal points may
    /// be assumed to have. A single block covering everything by default.
    blocks: Vec<Vec<usize>>,
    /// Internal bipartition `(d1, d2)` with `dim = d1·d2`, used for an extra
    /// partial-transpose condition on merged parties.
    cut: Option<(usize, usize)>,
}

impl Party {
    pub fn new(name: impl Into<String>, dim: usize, constraint: AffineMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParameter("party dimension must be ≥ 1".into()));
        }
        if constraint.dim() != dim {
            return Err(Error::DimMismatch(format!("constraint acts on side {}, party has {dim}", constraint.dim())));
        }
        Ok(Party { name: name.into(), dim, constraint, blocks: vec![(0..dim).collect()], cut: None })
    }

    /// Trace-one states with no further constraint.
    pub fn state(name: impl Into<String>, dim: usize) -> Result<Self> {
        Party::new(name, dim, AffineMap::unconstrained(dim))
    }

    /// Declare a block structure; the blocks must partition `0..dim` and the
    /// constraint must not couple different blocks.
    pub fn with_blocks(mut self, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; self.dim];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::BadParameter("empty block".into()));
            }
            for &i in b {
                if i >= self.dim || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::BadParameter(format!("blocks do not partition 0..{}", self.dim)));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::BadParameter(format!("blocks do not partition 0..{}", self.dim)));
        }
        let owner = block_owner(&blocks, self.dim);
        for row in self.constraint.hermitian_rows() {
            if row.entries.iter().any(|&(i, j, _)| owner[i] != owner[j]) {
                return Err(Error::BadParameter(format!("constraint of party `{}` couples blocks", self.name)));
            }
        }
        self.blocks = blocks;
        Ok(self)
    }

    /// Contiguous blocks of equal size `size`.
    pub fn with_uniform_blocks(self, size: usize) -> Result<Self> {
        if size == 0 || self.dim % size != 0 {
            return Err(Error::BadParameter(format!("block size {size} does not divide {}", self.dim)));
        }
        let blocks = (0..self.dim / size).map(|b| (b * size..(b + 1) * size).collect()).collect();
        self.with_blocks(blocks)
    }

    pub fn with_cut(mut self, d1: usize, d2: usize) -> Result<Self> {
        if d1 * d2 != self.dim {
            return Err(Error::DimMismatch(format!("cut {d1}×{d2} of a party of dimension {}", self.dim)));
        }
        self.cut = Some((d1, d2));
        Ok(self)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn cut(&self) -> Option<(usize, usize)> {
        self.cut
    }

    /// Assemble a full operator from per-block pieces.
    pub fn assemble(&self, pieces: &[CMat]) -> CMat {
        let mut x = linalg::zeros(self.dim, self.dim);
        for (b, p) in self.blocks.iter().zip(pieces) {
            for (u, &i) in b.iter().enumerate() {
                for (v, &j) in b.iter().enumerate() {
                    x[(i, j)] = p[(u, v)];
                }
            }
        }
        x
    }

    /// Restriction of `x` to each block.
    pub fn split(&self, x: &CMat) -> Vec<CMat> {
        self.blocks
            .iter()
            .map(|b| CMat::from_fn(b.len(), b.len(), |u, v| x[(b[u], b[v])]))
            .collect()
    }

    /// Worst violation of `X ⪰ 0`, `Tr X = 1`, `Φ(X) = a`.
    pub fn violation(&self, x: &CMat) -> f64 {
        let neg = (-linalg::min_eig(&linalg::hermitize(x))).max(0.0);
        let tr = (linalg::trace(x) - linalg::ONE).norm();
        neg.max(tr).max(self.constraint.residual(x)).max(linalg::herm_dev(x))
    }
}

fn block_owner(blocks: &[Vec<usize>], dim: usize) -> Vec<usize> {
    let mut owner = vec![usize::MAX; dim];
    for (b, idx) in blocks.iter().enumerate() {
        for &i in idx {
            owner[i] = b;
        }
    }
    owner
}

/// `max Tr(F ⊗_p X_p)` over constrained party states, with `F` hermitian on
/// the tensor product of the parties in order.
#[derive(Clone, Debug)]
pub struct ConstrainedSepProblem {
    cost: LabeledOperator,
    parties: Vec<Party>,
    /// Parties merged into one composite party for upper bounds of
    /// three-party problems.
    merge: (usize, usize),
}

impl ConstrainedSepProblem {
    pub fn new(cost: LabeledOperator, parties: Vec<Party>) -> Result<Self> {
        if !(2..=3).contains(&parties.len()) {
            return Err(Error::BadParameter(format!("{} parties; 2 or 3 supported", parties.len())));
        }
        let dims: Vec<usize> = parties.iter().map(|p| p.dim).collect();
        if cost.dims() != dims {
            return Err(Error::DimMismatch(format!("cost over {:?}, parties {:?}", cost.dims(), dims)));
        }
        let names: Vec<&str> = parties.iter().map(|p| p.name.as_str()).collect();
        if cost.names() != names {
            return Err(Error::DimMismatch(format!("cost systems {:?}, parties {:?}", cost.names(), names)));
        }
        if !cost.is_hermitian(1e-9) {
            return Err(Error::BadParameter(format!("cost is not hermitian (deviation {:.2e})", cost.herm_dev())));
        }
        // the cost must be block diagonal in every party's declared blocks
        let owners: Vec<Vec<usize>> = parties.iter().map(|p| block_owner(&p.blocks, p.dim)).collect();
        let f = cost.matrix();
        let n = f.nrows();
        for c in 0..n {
            let dc = qops::digits(c, &dims);
            for r in 0..n {
                if f[(r, c)] == ZERO {
                    continue;
                }
                let dr = qops::digits(r, &dims);
                if f[(r, c)].norm() > 1e-12 && (0..dims.len()).any(|k| owners[k][dr[k]] != owners[k][dc[k]]) {
                    return Err(Error::BadParameter(format!(
                        "cost couples distinct blocks of party `{}`",
                        parties[(0..dims.len()).find(|&k| owners[k][dr[k]] != owners[k][dc[k]]).unwrap()].name
                    )));
                }
            }
        }
        let merge = (parties.len() - 2, parties.len() - 1);
        Ok(ConstrainedSepProblem { cost, parties, merge })
    }

    /// Choose the two parties combined for upper bounds of three-party
    /// problems.
    pub fn with_merge(mut self, i: usize, j: usize) -> Result<Self> {
        if self.parties.len() != 3 || i >= 3 || j >= 3 || i == j {
            return Err(Error::BadParameter("merge needs two distinct parties of a 3-party problem".into()));
        }
        self.merge = (i, j);
        Ok(self)
    }

    pub fn cost(&self) -> &LabeledOperator {
        &self.cost
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn party(&self, i: usize) -> &Party {
        &self.parties[i]
    }

    pub fn num_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn merge_pair(&self) -> (usize, usize) {
        self.merge
    }

    /// `Tr(F ⊗_p X_p)`.
    pub fn objective(&self, factors: &[CMat]) -> f64 {
        let g = self.contract(0, factors);
        linalg::trace_prod(&g, &factors[0]).re
    }

    /// Reduced cost `G` on party `keep` with `Tr(G X_keep) = Tr(F ⊗ X)`
    /// for the other factors fixed.
    pub fn contract(&self, keep: usize, factors: &[CMat]) -> CMat {
        let dims: Vec<usize> = self.parties.iter().map(|p| p.dim).collect();
        let f = self.cost.matrix();
        let n = f.nrows();
        let dk = dims[keep];
        let mut g = linalg::zeros(dk, dk);
        let digs: Vec<Vec<usize>> = (0..n).map(|i| qops::digits(i, &dims)).collect();
        for c in 0..n {
            let dc = &digs[c];
            for r in 0..n {
                let v = f[(r, c)];
                if v == ZERO {
                    continue;
                }
                let dr = &digs[r];
                let mut w = v;
                for (p, x) in factors.iter().enumerate() {
                    if p != keep {
                        // Tr(F (X ⊗ ...)) picks X[c_p, r_p]
                        w *= x[(dc[p], dr[p])];
                    }
                }
                g[(dr[keep], dc[keep])] += w;
            }
        }
        g
    }

    /// Cost reordered to `(first, second)` for a two-party problem.
    pub(crate) fn ordered_cost(&self, first: usize) -> Result<CMat> {
        if self.parties.len() != 2 {
            return Err(Error::BadParameter("two-party problem expected".into()));
        }
        if first == 0 {
            return Ok(self.cost.matrix().clone());
        }
        let order = [self.parties[1].name.as_str(), self.parties[0].name.as_str()];
        Ok(qops::permute_systems(&self.cost, &order)?.into_matrix())
    }

    /// Two-party relaxation: the merge pair becomes one composite party on
    /// `X_i ⊗ X_j` whose constraints are the lifted constraints of `i` and
    /// `j`, with the internal cut recorded.
    pub fn merged(&self) -> Result<ConstrainedSepProblem> {
        if self.parties.len() == 2 {
            return Ok(self.clone());
        }
        let (i, j) = self.merge;
        let rest = (0..3).find(|&k| k != i && k != j).unwrap();
        let (pi, pj) = (&self.parties[i], &self.parties[j]);
        let name = format!("{}{}", pi.name, pj.name);
        let dim = pi.dim * pj.dim;
        let constraint = lifted_pair_constraint(pi, pj)?;
        let mut blocks = Vec::new();
        for bi in &pi.blocks {
            for bj in &pj.blocks {
                let mut idx = Vec::with_capacity(bi.len() * bj.len());
                for &x in bi {
                    for &y in bj {
                        idx.push(x * pj.dim + y);
                    }
                }
                blocks.push(idx);
            }
        }
        let composite = Party::new(name.clone(), dim, constraint)?.with_blocks(blocks)?.with_cut(pi.dim, pj.dim)?;
        let order = [self.parties[rest].name.as_str(), pi.name.as_str(), pj.name.as_str()];
        let f = qops::permute_systems(&self.cost, &order)?;
        let cost = LabeledOperator::new(
            vec![qops::sys(&self.parties[rest].name, self.parties[rest].dim), qops::sys(&name, dim)],
            f.into_matrix(),
        )?;
        ConstrainedSepProblem::new(cost, vec![self.parties[rest].clone(), composite])
    }
}

/// Constraints valid on `X_i ⊗ X_j`: `(Φ_i ⊗ id)(Z) = a_i ⊗ Tr_i Z` and
/// `(id ⊗ Φ_j)(Z) = Tr_j Z ⊗ a_j`, as homogeneous hermitian rows.
fn lifted_pair_constraint(pi: &Party, pj: &Party) -> Result<AffineMap> {
    let (di, dj) = (pi.dim, pj.dim);
    let dim = di * dj;
    let mut action = Vec::new();
    let mut rows = 0;
    let basis = |d: usize| -> Vec<Vec<(usize, usize, crate::linalg::c64)>> {
        (0..d * d).map(|k| crate::sdpiface::hermitian_basis_entries(d, k)).collect()
    };
    // rows of the form Tr((H ⊗ E) Z) − β Tr((1 ⊗ E) Z) for hermitian E
    let mut push = |h: &[(usize, usize, crate::linalg::c64)], beta: f64, other: &[(usize, usize, crate::linalg::c64)], first: bool| {
        let mut acc: HashMap<(usize, usize), crate::linalg::c64> = HashMap::new();
        let (dh, de) = if first { (di, dj) } else { (dj, di) };
        let idx = |a: usize, b: usize| if first { a * dj + b } else { b * dj + a };
        for &(a, a2, hv) in h {
            for &(e, e2, ev) in other {
                *acc.entry((idx(a, e), idx(a2, e2))).or_insert(ZERO) += hv * ev;
            }
        }
        if beta != 0.0 {
            for a in 0..dh {
                for &(e, e2, ev) in other {
                    *acc.entry((idx(a, e), idx(a, e2))).or_insert(ZERO) -= ev * beta;
                }
            }
        }
        let _ = de;
        // Tr(G Z) as action: G[q, p] ↦ action[p + q·dim]
        for ((q, p), v) in acc {
            if v.norm() > 1e-15 {
                action.push((rows, p + q * dim, v));
            }
        }
        rows += 1;
    };
    let bj = basis(dj);
    for row in pi.constraint.hermitian_rows() {
        for e in &bj {
            push(&row.entries, row.beta, e, true);
        }
    }
    let bi = basis(di);
    for row in pj.constraint.hermitian_rows() {
        for e in &bi {
            push(&row.entries, row.beta, e, false);
        }
    }
    AffineMap::new(dim, rows, action, vec![ZERO; rows])
}
