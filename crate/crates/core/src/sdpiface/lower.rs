//! Lowering to the standard form
//!
//!   min cᵀx  s.t.  A x = b,   F0_c + Σ_j x_j F_{c,j} ⪰ 0  for every cone c,
//!
//! with x real. Hermitian blocks are parametrized in the orthonormal basis
//! {e_ii, (e_ij + e_ji)/√2, i(e_ij − e_ji)/√2}, so Frobenius inner products
//! of hermitian matrices coincide with Euclidean ones on coordinates.

use std::collections::HashMap;

use super::{BackendKind, ConicProblem, Sense, Solution, Status, Term};
use crate::linalg::{self, c64, CMat};

const SQRT1_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn coord_count(n: usize) -> usize {
    n * n
}

/// Coordinate index of the diagonal entry `i` or of the real (`im=false`)
/// or imaginary part of the pair `i < j`.
#[inline]
pub(crate) fn coord_index(n: usize, i: usize, j: usize, im: bool) -> usize {
    if i == j {
        i
    } else {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        n + 2 * (j * (j - 1) / 2 + i) + im as usize
    }
}

/// Entries of the basis element with coordinate index `k`.
pub(crate) fn basis_entries(n: usize, k: usize) -> Vec<(usize, usize, c64)> {
    if k < n {
        return vec![(k, k, linalg::ONE)];
    }
    let p = (k - n) / 2;
    let im = (k - n) % 2 == 1;
    // invert p = j(j-1)/2 + i
    let mut j = ((((8 * p + 1) as f64).sqrt() + 1.0) / 2.0) as usize;
    while j * (j - 1) / 2 > p {
        j -= 1;
    }
    while (j + 1) * j / 2 <= p {
        j += 1;
    }
    let i = p - j * (j - 1) / 2;
    if im {
        vec![(i, j, c64::new(0.0, SQRT1_2)), (j, i, c64::new(0.0, -SQRT1_2))]
    } else {
        vec![(i, j, c64::new(SQRT1_2, 0.0)), (j, i, c64::new(SQRT1_2, 0.0))]
    }
}

/// Coordinates `⟨E_k, C⟩ = Re Tr(E_k C)` of a matrix given by entries;
/// for hermitian `C` these are its coordinates in the basis.
pub(crate) fn entry_coords(n: usize, entries: impl IntoIterator<Item = (usize, usize, c64)>) -> Vec<(usize, f64)> {
    let mut acc: HashMap<usize, f64> = HashMap::new();
    for (p, q, f) in entries {
        if p == q {
            *acc.entry(p).or_insert(0.0) += f.re;
        } else if p < q {
            *acc.entry(coord_index(n, p, q, false)).or_insert(0.0) += f.re * SQRT1_2;
            *acc.entry(coord_index(n, p, q, true)).or_insert(0.0) += f.im * SQRT1_2;
        } else {
            *acc.entry(coord_index(n, q, p, false)).or_insert(0.0) += f.re * SQRT1_2;
            *acc.entry(coord_index(n, q, p, true)).or_insert(0.0) -= f.im * SQRT1_2;
        }
    }
    let mut v: Vec<(usize, f64)> = acc.into_iter().filter(|(_, a)| *a != 0.0).collect();
    v.sort_by_key(|e| e.0);
    v
}

pub fn block_to_coords(x: &CMat) -> Vec<f64> {
    let n = x.nrows();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i] = x[(i, i)].re;
    }
    for j in 1..n {
        for i in 0..j {
            let a = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
            v[coord_index(n, i, j, false)] = a.re * std::f64::consts::SQRT_2;
            v[coord_index(n, i, j, true)] = a.im * std::f64::consts::SQRT_2;
        }
    }
    v
}

pub fn coords_to_block(v: &[f64], n: usize) -> CMat {
    let mut x = linalg::zeros(n, n);
    for i in 0..n {
        x[(i, i)] = c64::new(v[i], 0.0);
    }
    for j in 1..n {
        for i in 0..j {
            let a = c64::new(v[coord_index(n, i, j, false)], v[coord_index(n, i, j, true)]) * SQRT1_2;
            x[(i, j)] = a;
            x[(j, i)] = a.conj();
        }
    }
    x
}

#[derive(Clone, Debug)]
pub(crate) struct StdCone {
    pub n: usize,
    pub f0: CMat,
    pub vars: Vec<usize>,
    /// Full entry lists of F_{c,j} for `vars[j]`.
    pub maps: Vec<Vec<(u32, u32, c64)>>,
}

impl StdCone {
    pub fn apply(&self, x: &[f64]) -> CMat {
        let mut m = self.f0.clone();
        for (k, &v) in self.vars.iter().enumerate() {
            let t = x[v];
            if t != 0.0 {
                for &(a, b, f) in &self.maps[k] {
                    m[(a as usize, b as usize)] += f * t;
                }
            }
        }
        m
    }

    /// F(dx) without the constant term.
    pub fn apply_linear(&self, dx: &[f64]) -> CMat {
        let mut m = linalg::zeros(self.n, self.n);
        for (k, &v) in self.vars.iter().enumerate() {
            let t = dx[v];
            if t != 0.0 {
                for &(a, b, f) in &self.maps[k] {
                    m[(a as usize, b as usize)] += f * t;
                }
            }
        }
        m
    }

    /// Adds F*(Z) into `out` (indexed by global variable).
    pub fn adjoint_add(&self, z: &CMat, out: &mut [f64], scale: f64) {
        for (k, &v) in self.vars.iter().enumerate() {
            let mut s = 0.0;
            for &(a, b, f) in &self.maps[k] {
                s += (f * z[(b as usize, a as usize)]).re;
            }
            out[v] += scale * s;
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct StdForm {
    pub nvar: usize,
    pub c: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub cones: Vec<StdCone>,
    pub linking: Vec<bool>,
}

impl StdForm {
    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect()
    }

    pub fn at_mul_add(&self, y: &[f64], out: &mut [f64], scale: f64) {
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, a) in r {
                    out[j] += scale * a * yi;
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct RawSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub pobj: f64,
    pub dobj: f64,
    pub pres: f64,
    pub dres: f64,
    pub iters: usize,
    pub backend: BackendKind,
}

pub(crate) struct Layout {
    pub block_off: Vec<usize>,
    pub scalar_off: usize,
}

pub(crate) fn layout(p: &ConicProblem) -> Layout {
    let mut block_off = Vec::with_capacity(p.blocks.len());
    let mut off = 0;
    for b in &p.blocks {
        block_off.push(off);
        off += coord_count(b.n);
    }
    Layout { block_off, scalar_off: off }
}

fn lower_terms(p: &ConicProblem, lay: &Layout, terms: &[Term]) -> Vec<(usize, f64)> {
    let mut acc: HashMap<usize, f64> = HashMap::new();
    for t in terms {
        match t {
            Term::Block(b, c) => {
                let n = p.blocks[b.0].n;
                for (k, a) in entry_coords(n, c.entries.iter().copied()) {
                    *acc.entry(lay.block_off[b.0] + k).or_insert(0.0) += a;
                }
            }
            Term::Scalar(s, a) => *acc.entry(lay.scalar_off + s.0).or_insert(0.0) += a,
        }
    }
    let mut v: Vec<(usize, f64)> = acc.into_iter().filter(|(_, a)| *a != 0.0).collect();
    v.sort_by_key(|e| e.0);
    v
}

fn merge_entries(list: &mut Vec<(u32, u32, c64)>) {
    list.sort_by_key(|e| (e.1, e.0));
    let mut out: Vec<(u32, u32, c64)> = Vec::with_capacity(list.len());
    for &(a, b, f) in list.iter() {
        if let Some(last) = out.last_mut() {
            if last.0 == a && last.1 == b {
                last.2 += f;
                continue;
            }
        }
        out.push((a, b, f));
    }
    out.retain(|e| e.2.norm() > 1e-15);
    *list = out;
}

pub(crate) fn lower(p: &ConicProblem) -> StdForm {
    let lay = layout(p);
    let nvar = lay.scalar_off + p.scalars.len();
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut c = vec![0.0; nvar];
    for (j, a) in lower_terms(p, &lay, &p.objective) {
        c[j] = sign * a;
    }
    let mut rows = Vec::with_capacity(p.equalities.len());
    let mut b = Vec::with_capacity(p.equalities.len());
    for e in &p.equalities {
        rows.push(lower_terms(p, &lay, &e.terms));
        b.push(e.rhs);
    }
    let mut cones = Vec::new();
    for (bi, blk) in p.blocks.iter().enumerate() {
        let n = blk.n;
        let off = lay.block_off[bi];
        let vars: Vec<usize> = (0..n * n).map(|k| off + k).collect();
        let maps = (0..n * n)
            .map(|k| basis_entries(n, k).into_iter().map(|(a, b, f)| (a as u32, b as u32, f)).collect())
            .collect();
        cones.push(StdCone { n, f0: linalg::zeros(n, n), vars, maps });
    }
    for cone in &p.cones {
        let mut per_var: HashMap<usize, Vec<(u32, u32, c64)>> = HashMap::new();
        for (bid, map) in &cone.parts {
            let n = p.blocks[bid.0].n;
            let off = lay.block_off[bid.0];
            let mut by_src: HashMap<(usize, usize), Vec<(usize, usize, c64)>> = HashMap::new();
            for &(sr, sc, dr, dc, v) in &map.transfers {
                by_src.entry((sr, sc)).or_default().push((dr, dc, v));
            }
            for k in 0..n * n {
                let mut list = Vec::new();
                for (pr, pc, e) in basis_entries(n, k) {
                    if let Some(ts) = by_src.get(&(pr, pc)) {
                        for &(dr, dc, v) in ts {
                            list.push((dr as u32, dc as u32, v * e));
                        }
                    }
                }
                if !list.is_empty() {
                    per_var.entry(off + k).or_default().extend(list);
                }
            }
        }
        for (sid, g) in &cone.scalars {
            per_var
                .entry(lay.scalar_off + sid.0)
                .or_default()
                .extend(g.entries.iter().map(|&(a, b, f)| (a as u32, b as u32, f)));
        }
        let mut vars: Vec<usize> = per_var.keys().copied().collect();
        vars.sort_unstable();
        let mut maps = Vec::with_capacity(vars.len());
        let mut kept = Vec::with_capacity(vars.len());
        for v in vars {
            let mut list = per_var.remove(&v).unwrap();
            merge_entries(&mut list);
            if !list.is_empty() {
                kept.push(v);
                maps.push(list);
            }
        }
        cones.push(StdCone { n: cone.n, f0: cone.constant.to_dense(), vars: kept, maps });
    }
    let mut linking = vec![false; nvar];
    for l in linking.iter_mut().skip(lay.scalar_off) {
        *l = true;
    }
    StdForm { nvar, c, rows, b, cones, linking }
}

pub(crate) struct Presolved {
    pub form: StdForm,
    /// Original indices of the kept rows and their scale factors.
    pub kept: Vec<usize>,
    pub scale: Vec<f64>,
}

fn row_norms(f: &StdForm) -> Option<(Vec<f64>, f64)> {
    let norms: Vec<f64> = f.rows.iter().map(|r| r.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()).collect();
    let bmax = f.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    // zero rows
    for (i, &n) in norms.iter().enumerate() {
        if n == 0.0 && f.b[i].abs() > 1e-12 * (1.0 + bmax) {
            return None;
        }
    }
    Some((norms, bmax))
}

fn keep_rows(f: &StdForm, indep: Vec<usize>, norms: &[f64]) -> Presolved {
    let mut form = f.clone();
    form.rows = indep.iter().map(|&i| f.rows[i].iter().map(|&(j, a)| (j, a / norms[i])).collect()).collect();
    form.b = indep.iter().map(|&i| f.b[i] / norms[i]).collect();
    let scale = indep.iter().map(|&i| norms[i]).collect();
    Presolved { form, kept: indep, scale }
}

/// Drops empty equality rows and normalizes the rest, keeping dependent
/// rows. Enough for the splitting backend, whose linear step stays
/// nonsingular. Returns `None` on an inconsistent empty row.
pub(crate) fn normalize(f: &StdForm) -> Option<Presolved> {
    let (norms, _) = row_norms(f)?;
    let kept = (0..f.rows.len()).filter(|&i| norms[i] > 0.0).collect();
    Some(keep_rows(f, kept, &norms))
}

/// Removes linearly dependent equality rows and normalizes the rest.
/// Returns `None` when the equalities are inconsistent.
pub(crate) fn presolve(f: &StdForm) -> Option<Presolved> {
    let m = f.rows.len();
    let (norms, bmax) = row_norms(f)?;
    let cand: Vec<usize> = (0..m).filter(|&i| norms[i] > 0.0).collect();
    let mc = cand.len();
    // Gram matrix of the normalized rows
    let mut cols: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for (ci, &i) in cand.iter().enumerate() {
        for &(j, a) in &f.rows[i] {
            cols.entry(j).or_default().push((ci, a / norms[i]));
        }
    }
    let mut g = vec![0.0; mc * mc];
    for list in cols.values() {
        for &(p, a) in list {
            for &(q, b) in list {
                if q >= p {
                    g[p * mc + q] += a * b;
                }
            }
        }
    }
    for p in 0..mc {
        for q in 0..p {
            g[p * mc + q] = g[q * mc + p];
        }
    }
    let piv = pivoted_cholesky_rank(&mut g, mc, 1e-11);
    let mut indep: Vec<usize> = piv.iter().map(|&ci| cand[ci]).collect();
    indep.sort_unstable();
    // consistency: least-norm solution of the independent rows satisfies all
    if indep.len() < m {
        let x0 = least_norm(f, &indep, &norms);
        let ax = f.a_mul(&x0);
        for i in 0..m {
            let tol = 1e-9 * (1.0 + bmax) * (1.0 + norms[i]);
            if (ax[i] - f.b[i]).abs() > tol.max(1e-9) {
                return None;
            }
        }
    }
    Some(keep_rows(f, indep, &norms))
}

/// Greedy diagonal-pivoted Cholesky on a dense PSD matrix (row-major);
/// returns indices of pivots above `rel` times the largest diagonal.
fn pivoted_cholesky_rank(g: &mut [f64], n: usize, rel: f64) -> Vec<usize> {
    let mut diag: Vec<f64> = (0..n).map(|i| g[i * n + i]).collect();
    let top = diag.iter().cloned().fold(0.0f64, f64::max);
    let mut used = vec![false; n];
    let mut chosen = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    loop {
        let mut best = None;
        let mut bv = rel * top.max(1e-300);
        for i in 0..n {
            if !used[i] && diag[i] > bv {
                bv = diag[i];
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        used[p] = true;
        let d = diag[p].sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if used[i] && i != p {
                continue;
            }
            let mut s = g[p * n + i];
            for lk in &l {
                s -= lk[p] * lk[i];
            }
            col[i] = s / d;
        }
        col[p] = d;
        for i in 0..n {
            if !used[i] {
                diag[i] -= col[i] * col[i];
            }
        }
        l.push(col);
        chosen.push(p);
    }
    chosen
}

fn least_norm(f: &StdForm, idx: &[usize], norms: &[f64]) -> Vec<f64> {
    let k = idx.len();
    let mut cols: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for (ci, &i) in idx.iter().enumerate() {
        for &(j, a) in &f.rows[i] {
            cols.entry(j).or_default().push((ci, a / norms[i]));
        }
    }
    let mut g = linalg::RMat::zeros(k, k);
    for list in cols.values() {
        for &(p, a) in list {
            for &(q, b) in list {
                g[(p, q)] += a * b;
            }
        }
    }
    let rhs = linalg::RMat::from_fn(k, 1, |i, _| f.b[idx[i]] / norms[idx[i]]);
    use faer::linalg::solvers::Solve;
    let w = match g.llt(faer::Side::Lower) {
        Ok(l) => l.solve(&rhs),
        Err(_) => g.partial_piv_lu().solve(&rhs),
    };
    let mut x = vec![0.0; f.nvar];
    for (ci, &i) in idx.iter().enumerate() {
        for &(j, a) in &f.rows[i] {
            x[j] += a / norms[i] * w[(ci, 0)];
        }
    }
    x
}

pub(crate) fn recover(p: &ConicProblem, orig: &StdForm, pre: &Presolved, raw: RawSolution) -> Solution {
    let lay = layout(p);
    let x = &raw.x;
    let block_values: Vec<CMat> = if x.len() == orig.nvar {
        p.blocks.iter().enumerate().map(|(i, b)| coords_to_block(&x[lay.block_off[i]..], b.n)).collect()
    } else {
        p.blocks.iter().map(|b| linalg::zeros(b.n, b.n)).collect()
    };
    let scalar_values: Vec<f64> = if x.len() == orig.nvar {
        (0..p.scalars.len()).map(|s| x[lay.scalar_off + s]).collect()
    } else {
        vec![0.0; p.scalars.len()]
    };
    let mut equality_duals = vec![0.0; p.equalities.len()];
    if raw.y.len() == pre.kept.len() {
        for (k, &i) in pre.kept.iter().enumerate() {
            equality_duals[i] = raw.y[k] / pre.scale[k];
        }
    }
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let (primal_value, dual_value) = match raw.status {
        Status::Optimal | Status::NumericalTrouble if x.len() == orig.nvar => (
            p.evaluate_objective(&block_values, &scalar_values),
            p.objective_constant + sign * raw.dobj,
        ),
        Status::Infeasible => {
            if p.sense == Sense::Maximize {
                (f64::NEG_INFINITY, f64::NEG_INFINITY)
            } else {
                (f64::INFINITY, f64::INFINITY)
            }
        }
        Status::Unbounded => {
            if p.sense == Sense::Maximize {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, f64::NEG_INFINITY)
            }
        }
        _ => (f64::NAN, f64::NAN),
    };
    Solution {
        status: raw.status,
        primal_value,
        dual_value,
        block_values,
        scalar_values,
        equality_duals,
        primal_residual: raw.pres,
        dual_residual: raw.dres,
        iterations: raw.iters,
        backend: raw.backend,
    }
}
