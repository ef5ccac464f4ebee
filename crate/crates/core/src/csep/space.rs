//! Linear optimisation over one party's constrained state space.

use std::collections::HashMap;

use super::Party;
use crate::linalg::{self, CMat};
use crate::sdpiface::{self, BlockId, ConicProblem, Sense, SolveOptions, SparseMat, Status, Term};
use crate::Result;

#[derive(Clone, Debug)]
pub struct PartyOptimum {
    pub status: Status,
    pub value: f64,
    pub point: CMat,
}

/// Largest coordinate count for which degeneracy is tested by rank.
const DEGENERACY_COORDS: usize = 4096;

fn index_maps(blocks: &[Vec<usize>]) -> Vec<HashMap<usize, usize>> {
    blocks.iter().map(|b| b.iter().enumerate().map(|(u, &i)| (i, u)).collect()).collect()
}

fn single(dim: usize) -> Vec<Vec<usize>> {
    vec![(0..dim).collect()]
}

/// Conic problem for `X ⪰ 0, Tr X = 1, Φ(X) = a` with `X` block diagonal
/// in `blocks`. Returns `None` when a constraint row is trivially
/// inconsistent.
pub(crate) fn party_problem(
    party: &Party,
    blocks: &[Vec<usize>],
    cost: &CMat,
    sense: Sense,
) -> Result<Option<(ConicProblem, Vec<BlockId>)>> {
    let mut p = ConicProblem::new(sense);
    let ids: Vec<BlockId> = blocks
        .iter()
        .enumerate()
        .map(|(b, idx)| p.add_block(format!("{}[{b}]", party.name), idx.len()))
        .collect::<Result<_>>()?;
    let maps = index_maps(blocks);
    p.add_equality(ids.iter().zip(blocks).map(|(&id, b)| Term::Block(id, SparseMat::identity(b.len()))).collect(), 1.0)?;
    for row in party.constraint.hermitian_rows() {
        if row.entries.is_empty() {
            if row.beta.abs() > 1e-12 {
                return Ok(None);
            }
            continue;
        }
        let mut terms = Vec::new();
        for (b, m) in maps.iter().enumerate() {
            let e = super::affine::restrict(&row.entries, m);
            if !e.is_empty() {
                terms.push(Term::Block(ids[b], SparseMat { n: blocks[b].len(), entries: e }));
            }
        }
        if terms.is_empty() {
            if row.beta.abs() > 1e-12 {
                return Ok(None);
            }
            continue;
        }
        p.add_equality(terms, row.beta)?;
    }
    let obj = ids
        .iter()
        .zip(blocks)
        .map(|(&id, b)| {
            let c = CMat::from_fn(b.len(), b.len(), |u, v| cost[(b[u], b[v])]);
            Term::Block(id, SparseMat::from_dense(&c, 0.0))
        })
        .collect();
    p.set_objective(obj, 0.0)?;
    Ok(Some((p, ids)))
}

fn assemble(party: &Party, blocks: &[Vec<usize>], pieces: &[CMat]) -> CMat {
    let mut x = linalg::zeros(party.dim, party.dim);
    for (b, piece) in blocks.iter().zip(pieces) {
        for (u, &i) in b.iter().enumerate() {
            for (v, &j) in b.iter().enumerate() {
                x[(i, j)] = piece[(u, v)];
            }
        }
    }
    x
}

/// Optimise `Re Tr(G X)` over the party's constrained states. With
/// `use_blocks` the declared block structure is imposed, which leaves the
/// optimum unchanged when `G` is block diagonal.
pub fn party_optimum(party: &Party, cost: &CMat, sense: Sense, use_blocks: bool, opts: &SolveOptions) -> Result<PartyOptimum> {
    let blocks = if use_blocks { party.blocks().to_vec() } else { single(party.dim) };
    if party.constraint.rows() == 0 {
        // extreme eigenvector of the cost, over all blocks
        let mut best: Option<(f64, Vec<linalg::c64>, usize)> = None;
        for (bi, b) in blocks.iter().enumerate() {
            let g = CMat::from_fn(b.len(), b.len(), |u, v| cost[(b[u], b[v])]);
            let (vals, vecs) = linalg::eigh(&g);
            let k = if sense == Sense::Maximize { vals.len() - 1 } else { 0 };
            let better = match &best {
                None => true,
                Some((v, _, _)) => {
                    if sense == Sense::Maximize {
                        vals[k] > *v
                    } else {
                        vals[k] < *v
                    }
                }
            };
            if better {
                best = Some((vals[k], (0..b.len()).map(|i| vecs[(i, k)]).collect(), bi));
            }
        }
        let (value, v, bi) = best.expect("party without blocks");
        let mut psi = vec![linalg::ZERO; party.dim];
        for (u, &i) in blocks[bi].iter().enumerate() {
            psi[i] = v[u];
        }
        return Ok(PartyOptimum { status: Status::Optimal, value, point: linalg::outer(&psi, &psi) });
    }
    let Some((p, ids)) = party_problem(party, &blocks, cost, sense)? else {
        return Ok(PartyOptimum {
            status: Status::Infeasible,
            value: f64::NAN,
            point: linalg::zeros(party.dim, party.dim),
        });
    };
    let s = sdpiface::solve_with(&p, opts)?;
    let pieces: Vec<CMat> = ids.iter().map(|&id| linalg::hermitize(s.block(id))).collect();
    let point = assemble(party, &blocks, &pieces);
    Ok(PartyOptimum { status: s.status, value: s.primal_value, point })
}

/// Whether the party's constrained state space is nonempty.
pub fn party_feasible(party: &Party) -> Result<bool> {
    if party.constraint.rows() == 0 {
        return Ok(true);
    }
    let blocks = party.blocks().to_vec();
    let zero = linalg::zeros(party.dim, party.dim);
    let Some((p, _)) = party_problem(party, &blocks, &zero, Sense::Maximize)? else {
        return Ok(false);
    };
    Ok(sdpiface::check_feasibility(&p)?.status == Status::Optimal)
}

/// Whether trace and constraint rows pin down a single block-diagonal
/// operator. Large parties are reported as non-degenerate without testing.
pub fn is_degenerate(party: &Party) -> bool {
    let blocks = party.blocks();
    let sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
    let total: usize = sizes.iter().map(|s| s * s).sum();
    if total > DEGENERACY_COORDS || party.constraint.rows() == 0 {
        return total == 1;
    }
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, s| {
        let o = *acc;
        *acc += s * s;
        Some(o)
    }).collect();
    let maps = index_maps(blocks);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut tr = vec![0.0; total];
    for (b, &s) in sizes.iter().enumerate() {
        for i in 0..s {
            tr[offsets[b] + i] = 1.0;
        }
    }
    rows.push(tr);
    for row in party.constraint.hermitian_rows() {
        let mut v = vec![0.0; total];
        for (b, m) in maps.iter().enumerate() {
            let e = super::affine::restrict(&row.entries, m);
            for (k, a) in sdpiface::entry_coords(sizes[b], e) {
                v[offsets[b] + k] = a;
            }
        }
        rows.push(v);
    }
    linalg::rank_of_rows(&rows, total, 1e-10) == total
}
