//! Conic problems over complex hermitian PSD blocks.
//!
//! A [`ConicProblem`] holds named PSD blocks, optional free real scalars,
//! affine equalities `Σ Re Tr(C_b X_b) + Σ a_s t_s = rhs`, PSD constraints on
//! linear images of the blocks (partial transposes and isometric
//! conjugations, as used by the separability relaxations), and a linear
//! objective. Problems are solved by a primal-dual interior-point method, or
//! by a first-order splitting method for instances too large for dense
//! Newton systems.

mod admm;
mod ipm;
mod lower;
mod sdpa;

use std::collections::HashMap;
use std::path::Path;

use crate::linalg::{self, c64, CMat, ZERO};
use crate::{Error, Result};

pub use lower::{block_to_coords, coord_count, coords_to_block};
pub use sdpa::real_embedding;
pub(crate) use lower::{basis_entries as hermitian_basis_entries, entry_coords};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

/// Square sparse complex matrix given by its nonzero entries. Duplicate
/// entries are summed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMat {
    pub n: usize,
    pub entries: Vec<(usize, usize, c64)>,
}

impl SparseMat {
    pub fn new(n: usize) -> Self {
        SparseMat { n, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        SparseMat { n, entries: (0..n).map(|i| (i, i, linalg::ONE)).collect() }
    }

    /// Entries of `a` with modulus above `drop`.
    pub fn from_dense(a: &CMat, drop: f64) -> Self {
        let n = a.nrows();
        let mut entries = Vec::new();
        for j in 0..a.ncols() {
            for i in 0..n {
                let v = a[(i, j)];
                if v.norm() > drop {
                    entries.push((i, j, v));
                }
            }
        }
        SparseMat { n, entries }
    }

    pub fn push(&mut self, i: usize, j: usize, v: c64) {
        self.entries.push((i, j, v));
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = linalg::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseMat { n: self.n, entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect() }
    }

    /// Sums duplicates and drops exact zeros.
    pub fn compressed(&self) -> Self {
        let mut map: HashMap<(usize, usize), c64> = HashMap::new();
        for &(i, j, v) in &self.entries {
            *map.entry((i, j)).or_insert(ZERO) += v;
        }
        let mut entries: Vec<_> = map.into_iter().filter(|(_, v)| *v != ZERO).map(|((i, j), v)| (i, j, v)).collect();
        entries.sort_by_key(|&(i, j, _)| (j, i));
        SparseMat { n: self.n, entries }
    }

    pub fn herm_dev(&self) -> f64 {
        let c = self.compressed();
        let map: HashMap<(usize, usize), c64> = c.entries.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        let mut dev = 0.0f64;
        for (&(i, j), &v) in &map {
            let w = map.get(&(j, i)).copied().unwrap_or(ZERO);
            dev = dev.max((v - w.conj()).norm());
        }
        dev
    }
}

/// One term of a real linear functional.
#[derive(Clone, Debug)]
pub enum Term {
    /// `Re Tr(C X_b)`.
    Block(BlockId, SparseMat),
    /// `a t_s`.
    Scalar(ScalarId, f64),
}

/// Linear map between square matrices given entrywise:
/// `out[(dr, dc)] += coef * X[(sr, sc)]` for every transfer.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryMap {
    pub n_in: usize,
    pub n_out: usize,
    pub transfers: Vec<(usize, usize, usize, usize, c64)>,
}

impl EntryMap {
    pub fn identity(n: usize) -> Self {
        let mut transfers = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                transfers.push((i, j, i, j, linalg::ONE));
            }
        }
        EntryMap { n_in: n, n_out: n, transfers }
    }

    /// `X ↦ V X V†` for `V` of shape `n_out × n_in`; entries of `V` below
    /// `1e-14` are skipped.
    pub fn conjugation(v: &CMat) -> Self {
        let (r, c) = (v.nrows(), v.ncols());
        let mut cols: Vec<Vec<(usize, c64)>> = vec![Vec::new(); c];
        for j in 0..c {
            for i in 0..r {
                if v[(i, j)].norm() > 1e-14 {
                    cols[j].push((i, v[(i, j)]));
                }
            }
        }
        let mut transfers = Vec::new();
        for sc in 0..c {
            for sr in 0..c {
                for &(dr, a) in &cols[sr] {
                    for &(dc, b) in &cols[sc] {
                        transfers.push((sr, sc, dr, dc, a * b.conj()));
                    }
                }
            }
        }
        EntryMap { n_in: c, n_out: r, transfers }
    }

    /// Partial transpose on the subsystems flagged in `mask`, for a block
    /// with tensor factors of sizes `dims`.
    pub fn partial_transpose(dims: &[usize], mask: &[bool]) -> Self {
        let n: usize = dims.iter().product();
        let mut transfers = Vec::with_capacity(n * n);
        for sc in 0..n {
            let dc_digits = crate::qops::digits(sc, dims);
            for sr in 0..n {
                let dr_digits = crate::qops::digits(sr, dims);
                let mut rr = dr_digits.clone();
                let mut cc = dc_digits.clone();
                for k in 0..dims.len() {
                    if mask[k] {
                        std::mem::swap(&mut rr[k], &mut cc[k]);
                    }
                }
                transfers.push((
                    sr,
                    sc,
                    crate::qops::undigits(&rr, dims),
                    crate::qops::undigits(&cc, dims),
                    linalg::ONE,
                ));
            }
        }
        EntryMap { n_in: n, n_out: n, transfers }
    }

    /// `X ↦ X ⊗ 1_d`.
    pub fn tensor_identity(n: usize, d: usize) -> Self {
        let mut transfers = Vec::with_capacity(n * n * d);
        for sc in 0..n {
            for sr in 0..n {
                for k in 0..d {
                    transfers.push((sr, sc, sr * d + k, sc * d + k, linalg::ONE));
                }
            }
        }
        EntryMap { n_in: n, n_out: n * d, transfers }
    }

    /// Partial trace over the subsystems flagged in `mask`.
    pub fn partial_trace(dims: &[usize], mask: &[bool]) -> Self {
        let n: usize = dims.iter().product();
        let kept: Vec<usize> = dims.iter().zip(mask).filter(|(_, &m)| !m).map(|(&d, _)| d).collect();
        let n_out: usize = kept.iter().product();
        let split = |i: usize| {
            let dg = crate::qops::digits(i, dims);
            let k: Vec<usize> = dg.iter().zip(mask).filter(|(_, &m)| !m).map(|(&x, _)| x).collect();
            let t: Vec<usize> = dg.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect();
            (crate::qops::undigits(&k, &kept), t)
        };
        let parts: Vec<(usize, Vec<usize>)> = (0..n).map(split).collect();
        let mut transfers = Vec::new();
        for sc in 0..n {
            for sr in 0..n {
                if parts[sr].1 == parts[sc].1 {
                    transfers.push((sr, sc, parts[sr].0, parts[sc].0, linalg::ONE));
                }
            }
        }
        EntryMap { n_in: n, n_out, transfers }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.transfers {
            t.4 *= s;
        }
        self
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &EntryMap) -> Result<Self> {
        if self.n_out != other.n_in {
            return Err(Error::DimMismatch(format!("map composition {} vs {}", self.n_out, other.n_in)));
        }
        let mut by_src: HashMap<(usize, usize), Vec<(usize, usize, c64)>> = HashMap::new();
        for &(sr, sc, dr, dc, v) in &other.transfers {
            by_src.entry((sr, sc)).or_default().push((dr, dc, v));
        }
        let mut acc: HashMap<(usize, usize, usize, usize), c64> = HashMap::new();
        for &(sr, sc, mr, mc, a) in &self.transfers {
            if let Some(list) = by_src.get(&(mr, mc)) {
                for &(dr, dc, b) in list {
                    *acc.entry((sr, sc, dr, dc)).or_insert(ZERO) += a * b;
                }
            }
        }
        let mut transfers: Vec<_> =
            acc.into_iter().filter(|(_, v)| v.norm() > 1e-15).map(|((a, b, c, d), v)| (a, b, c, d, v)).collect();
        transfers.sort_by_key(|t| (t.1, t.0, t.3, t.2));
        Ok(EntryMap { n_in: self.n_in, n_out: other.n_out, transfers })
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = linalg::zeros(self.n_out, self.n_out);
        for &(sr, sc, dr, dc, v) in &self.transfers {
            out[(dr, dc)] += v * x[(sr, sc)];
        }
        out
    }
}

/// PSD constraint `K + Σ_b L_b(X_b) + Σ_s t_s G_s ⪰ 0` on a matrix of side `n`.
#[derive(Clone, Debug)]
pub struct ImageCone {
    pub name: String,
    pub n: usize,
    pub parts: Vec<(BlockId, EntryMap)>,
    pub scalars: Vec<(ScalarId, SparseMat)>,
    pub constant: SparseMat,
}

impl ImageCone {
    pub fn new(name: impl Into<String>, n: usize) -> Self {
        ImageCone { name: name.into(), n, parts: Vec::new(), scalars: Vec::new(), constant: SparseMat::new(n) }
    }

    pub fn with_part(mut self, b: BlockId, map: EntryMap) -> Self {
        self.parts.push((b, map));
        self
    }

    pub fn with_scalar(mut self, s: ScalarId, g: SparseMat) -> Self {
        self.scalars.push((s, g));
        self
    }

    pub fn with_constant(mut self, k: SparseMat) -> Self {
        self.constant = k;
        self
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub name: String,
    pub n: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Equality {
    pub terms: Vec<Term>,
    pub rhs: f64,
}

/// Conic program over hermitian PSD blocks. Immutable once handed to a
/// solver; all builder methods validate shapes eagerly.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub(crate) blocks: Vec<Block>,
    pub(crate) scalars: Vec<String>,
    pub(crate) equalities: Vec<Equality>,
    pub(crate) cones: Vec<ImageCone>,
    pub(crate) objective: Vec<Term>,
    pub(crate) objective_constant: f64,
    pub(crate) sense: Sense,
}

const HERM_CHECK: f64 = 1e-9;

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        ConicProblem {
            blocks: Vec::new(),
            scalars: Vec::new(),
            equalities: Vec::new(),
            cones: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_block(&mut self, name: impl Into<String>, n: usize) -> Result<BlockId> {
        let name = name.into();
        if n == 0 {
            return Err(Error::BadParameter(format!("block `{name}` has side 0")));
        }
        if self.blocks.iter().any(|b| b.name == name) {
            return Err(Error::DuplicateSystem(name));
        }
        self.blocks.push(Block { name, n });
        Ok(BlockId(self.blocks.len() - 1))
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarId {
        self.scalars.push(name.into());
        ScalarId(self.scalars.len() - 1)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_scalars(&self) -> usize {
        self.scalars.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn num_cones(&self) -> usize {
        self.cones.len()
    }

    pub fn block_dim(&self, b: BlockId) -> usize {
        self.blocks[b.0].n
    }

    pub fn block_name(&self, b: BlockId) -> &str {
        &self.blocks[b.0].name
    }

    pub fn block_by_name(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name).map(BlockId)
    }

    fn check_terms(&self, terms: &[Term]) -> Result<()> {
        for t in terms {
            match t {
                Term::Block(b, c) => {
                    let blk = self
                        .blocks
                        .get(b.0)
                        .ok_or_else(|| Error::BadIndex(format!("block {}", b.0)))?;
                    if c.n != blk.n || c.entries.iter().any(|&(i, j, _)| i >= blk.n || j >= blk.n) {
                        return Err(Error::DimMismatch(format!(
                            "coefficient of side {} on block `{}` of side {}",
                            c.n, blk.name, blk.n
                        )));
                    }
                    let dev = c.herm_dev();
                    if dev > HERM_CHECK {
                        return Err(Error::BadParameter(format!(
                            "coefficient on block `{}` is not hermitian (deviation {dev:.2e})",
                            blk.name
                        )));
                    }
                }
                Term::Scalar(s, a) => {
                    if s.0 >= self.scalars.len() {
                        return Err(Error::BadIndex(format!("scalar {}", s.0)));
                    }
                    if !a.is_finite() {
                        return Err(Error::BadParameter("non-finite scalar coefficient".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn add_equality(&mut self, terms: Vec<Term>, rhs: f64) -> Result<()> {
        self.check_terms(&terms)?;
        if !rhs.is_finite() {
            return Err(Error::BadParameter("non-finite right-hand side".into()));
        }
        self.equalities.push(Equality { terms, rhs });
        Ok(())
    }

    /// Matrix equality `Σ_b L_b(X_b) + Σ_s t_s G_s = R`, imposed as one real
    /// equation per hermitian coordinate of the output space. Each `L_b`
    /// must preserve hermiticity.
    pub fn add_matrix_equality(
        &mut self,
        parts: &[(BlockId, &EntryMap)],
        scalars: &[(ScalarId, &SparseMat)],
        rhs: &CMat,
    ) -> Result<()> {
        let n = rhs.nrows();
        if rhs.ncols() != n {
            return Err(Error::DimMismatch("right-hand side must be square".into()));
        }
        let mut by_dst: Vec<HashMap<(usize, usize), Vec<(usize, usize, c64)>>> = Vec::with_capacity(parts.len());
        for (b, map) in parts {
            let blk = self.blocks.get(b.0).ok_or_else(|| Error::BadIndex(format!("block {}", b.0)))?;
            if map.n_in != blk.n || map.n_out != n {
                return Err(Error::DimMismatch(format!(
                    "matrix equality: map {}→{} on block `{}` of side {} with right-hand side {}",
                    map.n_in, map.n_out, blk.name, blk.n, n
                )));
            }
            let mut h: HashMap<(usize, usize), Vec<(usize, usize, c64)>> = HashMap::new();
            for &(sr, sc, dr, dc, v) in &map.transfers {
                h.entry((dr, dc)).or_default().push((sr, sc, v));
            }
            by_dst.push(h);
        }
        for (s, g) in scalars {
            if s.0 >= self.scalars.len() || g.n != n {
                return Err(Error::DimMismatch("matrix equality: scalar term".into()));
            }
        }
        let dense_g: Vec<CMat> = scalars.iter().map(|(_, g)| g.to_dense()).collect();
        let rhs_c = lower::block_to_coords(rhs);
        for k in 0..n * n {
            let e = lower::basis_entries(n, k);
            let mut terms = Vec::new();
            for ((b, map), h) in parts.iter().zip(&by_dst) {
                let mut c = SparseMat::new(map.n_in);
                for &(p, q, ev) in &e {
                    // Re Tr(E L(X)) picks E[p,q] against L(X)[q,p]
                    if let Some(ts) = h.get(&(q, p)) {
                        for &(sr, sc, v) in ts {
                            c.push(sc, sr, ev * v);
                        }
                    }
                }
                if !c.entries.is_empty() {
                    terms.push(Term::Block(*b, c.compressed()));
                }
            }
            for ((s, _), g) in scalars.iter().zip(&dense_g) {
                let mut a = 0.0;
                for &(p, q, ev) in &e {
                    a += (ev * g[(q, p)]).re;
                }
                if a != 0.0 {
                    terms.push(Term::Scalar(*s, a));
                }
            }
            self.add_equality(terms, rhs_c[k])?;
        }
        Ok(())
    }

    pub fn add_psd_image(&mut self, cone: ImageCone) -> Result<()> {
        for (b, map) in &cone.parts {
            let blk = self
                .blocks
                .get(b.0)
                .ok_or_else(|| Error::BadIndex(format!("block {}", b.0)))?;
            if map.n_in != blk.n || map.n_out != cone.n {
                return Err(Error::DimMismatch(format!(
                    "cone `{}`: map {}→{} on block `{}` of side {} into side {}",
                    cone.name, map.n_in, map.n_out, blk.name, blk.n, cone.n
                )));
            }
        }
        for (s, g) in &cone.scalars {
            if s.0 >= self.scalars.len() || g.n != cone.n {
                return Err(Error::DimMismatch(format!("cone `{}`: scalar term", cone.name)));
            }
            if g.herm_dev() > HERM_CHECK {
                return Err(Error::BadParameter(format!("cone `{}`: scalar coefficient not hermitian", cone.name)));
            }
        }
        if cone.constant.n != cone.n || cone.constant.herm_dev() > HERM_CHECK {
            return Err(Error::BadParameter(format!("cone `{}`: bad constant", cone.name)));
        }
        self.cones.push(cone);
        Ok(())
    }

    pub fn set_objective(&mut self, terms: Vec<Term>, constant: f64) -> Result<()> {
        self.check_terms(&terms)?;
        self.objective = terms;
        self.objective_constant = constant;
        Ok(())
    }

    /// Objective value at given block and scalar values.
    pub fn evaluate_objective(&self, blocks: &[CMat], scalars: &[f64]) -> f64 {
        self.objective_constant + eval_terms(&self.objective, blocks, scalars)
    }

    /// Largest absolute violation of the equalities at given values.
    pub fn equality_violation(&self, blocks: &[CMat], scalars: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|e| (eval_terms(&e.terms, blocks, scalars) - e.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Most negative eigenvalue over blocks and image cones (0 if all PSD).
    pub fn cone_violation(&self, blocks: &[CMat], scalars: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for b in blocks {
            worst = worst.max(-linalg::min_eig(b));
        }
        for c in &self.cones {
            let mut m = c.constant.to_dense();
            for (b, map) in &c.parts {
                m += map.apply(&blocks[b.0]);
            }
            for (s, g) in &c.scalars {
                m += linalg::rscale(&g.to_dense(), scalars[s.0]);
            }
            worst = worst.max(-linalg::min_eig(&m));
        }
        worst
    }

    /// Writes the problem in SDPA sparse format, complex blocks realified.
    pub fn write_sdpa(&self, path: &Path) -> Result<()> {
        sdpa::write(self, path)
    }
}

fn eval_terms(terms: &[Term], blocks: &[CMat], scalars: &[f64]) -> f64 {
    let mut v = 0.0;
    for t in terms {
        match t {
            Term::Block(b, c) => {
                let x = &blocks[b.0];
                for &(i, j, a) in &c.entries {
                    v += (a * x[(j, i)]).re;
                }
            }
            Term::Scalar(s, a) => v += a * scalars[s.0],
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub feas: f64,
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { feas: 1e-8, gap: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Interior point unless the dense Newton system is estimated too large.
    Auto,
    InteriorPoint,
    Admm,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: Tolerances,
    pub backend: Backend,
    pub max_iter: usize,
    /// Tolerances used when the splitting backend is selected.
    pub admm_tol: Tolerances,
    pub admm_max_iter: usize,
    /// The splitting method sees the objective divided by this factor
    /// times its largest coefficient. Values well above 1 keep primal
    /// feasibility from stalling behind the dual.
    pub admm_cost_scale: f64,
    /// Estimated floating-point work per Newton step above which `Auto`
    /// switches to the splitting method.
    pub ipm_flop_limit: f64,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: Tolerances::default(),
            backend: Backend::Auto,
            max_iter: 120,
            admm_tol: Tolerances { feas: 1e-7, gap: 1e-7 },
            admm_max_iter: 200_000,
            admm_cost_scale: 100.0,
            ipm_flop_limit: 6e10,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    InteriorPoint,
    Admm,
    Presolve,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// Objective at the returned point.
    pub primal_value: f64,
    /// Objective of the dual point; an upper bound for maximization up to
    /// the reported residuals.
    pub dual_value: f64,
    pub block_values: Vec<CMat>,
    pub scalar_values: Vec<f64>,
    /// Multipliers of the equalities in problem order.
    pub equality_duals: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub backend: BackendKind,
}

impl Solution {
    pub fn block(&self, b: BlockId) -> &CMat {
        &self.block_values[b.0]
    }

    pub fn scalar(&self, s: ScalarId) -> f64 {
        self.scalar_values[s.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    fn failed(p: &ConicProblem, status: Status, backend: BackendKind, iterations: usize) -> Self {
        let (pv, dv) = match (status, p.sense) {
            (Status::Infeasible, Sense::Maximize) => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            (Status::Infeasible, Sense::Minimize) => (f64::INFINITY, f64::INFINITY),
            (Status::Unbounded, Sense::Maximize) => (f64::INFINITY, f64::INFINITY),
            (Status::Unbounded, Sense::Minimize) => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            _ => (f64::NAN, f64::NAN),
        };
        Solution {
            status,
            primal_value: pv,
            dual_value: dv,
            block_values: p.blocks.iter().map(|b| linalg::zeros(b.n, b.n)).collect(),
            scalar_values: vec![0.0; p.scalars.len()],
            equality_duals: vec![0.0; p.equalities.len()],
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations,
            backend,
        }
    }
}

pub fn solve(p: &ConicProblem, tol: &Tolerances) -> Result<Solution> {
    solve_with(p, &SolveOptions { tol: *tol, ..SolveOptions::default() })
}

pub fn solve_with(p: &ConicProblem, opts: &SolveOptions) -> Result<Solution> {
    if p.blocks.is_empty() {
        return Err(Error::BadParameter("conic problem without blocks".into()));
    }
    let std = lower::lower(p);
    let Some(normalized) = lower::normalize(&std) else {
        return Ok(Solution::failed(p, Status::Infeasible, BackendKind::Presolve, 0));
    };
    let backend = match opts.backend {
        Backend::Auto => {
            if ipm::newton_cost(&normalized.form) > opts.ipm_flop_limit {
                Backend::Admm
            } else {
                Backend::InteriorPoint
            }
        }
        b => b,
    };
    // interior point needs independent rows
    let pre = if backend == Backend::Admm {
        normalized
    } else {
        match lower::presolve(&std) {
            Some(pre) => pre,
            None => return Ok(Solution::failed(p, Status::Infeasible, BackendKind::Presolve, 0)),
        }
    };
    let raw = match backend {
        Backend::Admm => admm::solve(&pre.form, &opts.admm_tol, opts.admm_max_iter, opts.admm_cost_scale, opts.verbose),
        _ => ipm::solve_classified(&pre.form, &opts.tol, opts.max_iter, opts.verbose),
    };
    Ok(lower::recover(p, &std, &pre, raw))
}

/// Feasibility of the constraint set: `Optimal` with objective 0 when a
/// point within `tol.feas` of the constraints exists.
pub fn check_feasibility(p: &ConicProblem) -> Result<Solution> {
    check_feasibility_with(p, &SolveOptions::default())
}

pub fn check_feasibility_with(p: &ConicProblem, opts: &SolveOptions) -> Result<Solution> {
    if p.blocks.is_empty() {
        return Err(Error::BadParameter("conic problem without blocks".into()));
    }
    let mut q = p.clone();
    q.objective.clear();
    q.objective_constant = 0.0;
    let std = lower::lower(&q);
    let pre = match lower::presolve(&std) {
        Some(pre) => pre,
        None => return Ok(Solution::failed(&q, Status::Infeasible, BackendKind::Presolve, 0)),
    };
    let raw = ipm::feasibility(&pre.form, &opts.tol, opts.max_iter, opts.verbose);
    Ok(lower::recover(&q, &std, &pre, raw))
}

#[cfg(test)]
mod tests;
