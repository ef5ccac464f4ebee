//! Operators over labeled tensor-product systems.
//!
//! Index convention: the first system in `systems` is the most significant
//! digit of a row/column index.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, ONE, ZERO};

/// Hermiticity/positivity tolerance used by validation predicates.
pub const HERM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    pub name: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        assert!(dim >= 1, "system dimension must be positive");
        SystemLabel { name: name.into(), dim }
    }
}

pub fn sys(name: &str, dim: usize) -> SystemLabel {
    SystemLabel::new(name, dim)
}

#[derive(Clone, Debug)]
pub struct LabeledOperator {
    systems: Vec<SystemLabel>,
    mat: CMat,
}

fn check_unique(systems: &[SystemLabel]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in systems {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::DuplicateSystem(s.name.clone()));
        }
    }
    Ok(())
}

fn side_of(systems: &[SystemLabel]) -> usize {
    systems.iter().map(|s| s.dim).product()
}

impl LabeledOperator {
    pub fn new(systems: Vec<SystemLabel>, mat: CMat) -> Result<Self> {
        check_unique(&systems)?;
        let n = side_of(&systems);
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimMismatch(format!(
                "matrix {}x{} for systems of total dimension {}",
                mat.nrows(),
                mat.ncols(),
                n
            )));
        }
        Ok(LabeledOperator { systems, mat })
    }

    pub fn identity(systems: Vec<SystemLabel>) -> Result<Self> {
        let n = side_of(&systems);
        Self::new(systems, linalg::eye(n))
    }

    pub fn zeros(systems: Vec<SystemLabel>) -> Result<Self> {
        let n = side_of(&systems);
        Self::new(systems, linalg::zeros(n, n))
    }

    pub fn systems(&self) -> &[SystemLabel] {
        &self.systems
    }

    pub fn names(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(|s| s.dim).collect()
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.systems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.systems[self.position(name)?].dim)
    }

    pub fn has(&self, name: &str) -> bool {
        self.systems.iter().any(|s| s.name == name)
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(&self.mat)
    }

    pub fn herm_dev(&self) -> f64 {
        linalg::herm_dev(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.herm_dev() <= tol
    }

    pub fn min_eig(&self) -> f64 {
        linalg::min_eig(&self.mat)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eig() >= -tol
    }

    pub fn scaled(&self, s: f64) -> Self {
        LabeledOperator { systems: self.systems.clone(), mat: linalg::rscale(&self.mat, s) }
    }

    pub fn map_matrix(&self, f: impl FnOnce(&CMat) -> CMat) -> Self {
        LabeledOperator { systems: self.systems.clone(), mat: f(&self.mat) }
    }

    /// Sum with an operator over the same systems (in any order).
    pub fn add(&self, other: &LabeledOperator) -> Result<Self> {
        let o = permute_systems(other, &self.names())?;
        Ok(LabeledOperator { systems: self.systems.clone(), mat: &self.mat + &o.mat })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<Self> {
        let o = permute_systems(other, &self.names())?;
        Ok(LabeledOperator { systems: self.systems.clone(), mat: &self.mat - &o.mat })
    }

    pub fn relabel(&self, old: &str, new: &str) -> Result<Self> {
        let p = self.position(old)?;
        let mut systems = self.systems.clone();
        systems[p].name = new.to_string();
        check_unique(&systems)?;
        Ok(LabeledOperator { systems, mat: self.mat.clone() })
    }

    /// Max entrywise distance to `other` after aligning system order.
    pub fn distance(&self, other: &LabeledOperator) -> Result<f64> {
        let o = permute_systems(other, &self.names())?;
        Ok(linalg::max_abs_diff(&self.mat, &o.mat))
    }
}

#[derive(Clone, Debug)]
pub struct KrausChannel {
    pub input: SystemLabel,
    pub output: SystemLabel,
    pub kraus_ops: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(input: SystemLabel, output: SystemLabel, kraus_ops: Vec<CMat>) -> Result<Self> {
        if kraus_ops.is_empty() {
            return Err(Error::BadParameter("empty Kraus list".into()));
        }
        let mut acc = linalg::zeros(input.dim, input.dim);
        for k in &kraus_ops {
            if k.nrows() != output.dim || k.ncols() != input.dim {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    output.dim,
                    input.dim
                )));
            }
            acc += k.adjoint() * k;
        }
        let dev = linalg::max_abs_diff(&acc, &linalg::eye(input.dim));
        if dev > 1e-10 {
            return Err(Error::BadParameter(format!("Kraus list not trace preserving ({dev:.2e})")));
        }
        Ok(KrausChannel { input, output, kraus_ops })
    }

    pub fn unitary(input: SystemLabel, output: SystemLabel, u: CMat) -> Result<Self> {
        Self::new(input, output, vec![u])
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = linalg::zeros(self.output.dim, self.output.dim);
        for k in &self.kraus_ops {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn compose(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if self.output.dim != after.input.dim {
            return Err(Error::DimMismatch("composition of incompatible channels".into()));
        }
        let mut ops = Vec::new();
        for g in &after.kraus_ops {
            for f in &self.kraus_ops {
                ops.push(g * f);
            }
        }
        KrausChannel::new(self.input.clone(), after.output.clone(), ops)
    }
}

/// Mixed-radix digits of `idx` for dimensions `dims` (first most significant).
pub fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for p in (0..dims.len()).rev() {
        out[p] = idx % dims[p];
        idx /= dims[p];
    }
    out
}

pub fn undigits(d: &[usize], dims: &[usize]) -> usize {
    let mut idx = 0;
    for (x, n) in d.iter().zip(dims) {
        idx = idx * n + x;
    }
    idx
}

pub fn tensor(x: &LabeledOperator, y: &LabeledOperator) -> Result<LabeledOperator> {
    let mut systems = x.systems.clone();
    systems.extend(y.systems.iter().cloned());
    check_unique(&systems)?;
    Ok(LabeledOperator { systems, mat: linalg::kron(&x.mat, &y.mat) })
}

pub fn tensor_all(ops: &[LabeledOperator]) -> Result<LabeledOperator> {
    let mut it = ops.iter();
    let mut acc = it
        .next()
        .ok_or_else(|| Error::BadParameter("empty tensor product".into()))?
        .clone();
    for o in it {
        acc = tensor(&acc, o)?;
    }
    Ok(acc)
}

fn positions(x: &LabeledOperator, names: &[&str]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let p = x.position(n)?;
        if out.contains(&p) {
            return Err(Error::DuplicateSystem(n.to_string()));
        }
        out.push(p);
    }
    Ok(out)
}

/// Indices split into (kept, traced) parts.
fn split_index(i: usize, dims: &[usize], traced: &[bool]) -> (usize, usize) {
    let d = digits(i, dims);
    let (mut k, mut t) = (0, 0);
    for p in 0..dims.len() {
        if traced[p] {
            t = t * dims[p] + d[p];
        } else {
            k = k * dims[p] + d[p];
        }
    }
    (k, t)
}

pub fn partial_trace(x: &LabeledOperator, over: &[&str]) -> Result<LabeledOperator> {
    let pos = positions(x, over)?;
    let dims = x.dims();
    let mut traced = vec![false; dims.len()];
    for p in &pos {
        traced[*p] = true;
    }
    let kept: Vec<SystemLabel> = x
        .systems
        .iter()
        .enumerate()
        .filter(|(p, _)| !traced[*p])
        .map(|(_, s)| s.clone())
        .collect();
    let dk = side_of(&kept);
    let dt: usize = pos.iter().map(|p| dims[*p]).product();
    // groups[t] lists (kept index, full index) pairs
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); dt];
    for i in 0..x.side() {
        let (k, t) = split_index(i, &dims, &traced);
        groups[t].push((k, i));
    }
    let mut out = linalg::zeros(dk, dk);
    for g in &groups {
        for &(kc, c) in g {
            for &(kr, r) in g {
                out[(kr, kc)] += x.mat[(r, c)];
            }
        }
    }
    Ok(LabeledOperator { systems: kept, mat: out })
}

pub fn partial_transpose(x: &LabeledOperator, over: &[&str]) -> Result<LabeledOperator> {
    let pos = positions(x, over)?;
    let dims = x.dims();
    let n = x.side();
    let mut out = linalg::zeros(n, n);
    for c in 0..n {
        let dc = digits(c, &dims);
        for r in 0..n {
            let mut dr = digits(r, &dims);
            let mut dc2 = dc.clone();
            for &p in &pos {
                std::mem::swap(&mut dr[p], &mut dc2[p]);
            }
            out[(undigits(&dr, &dims), undigits(&dc2, &dims))] = x.mat[(r, c)];
        }
    }
    Ok(LabeledOperator { systems: x.systems.clone(), mat: out })
}

/// Maps old flat indices to new flat indices for a reordering of systems.
pub fn permutation_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let new_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
    let n: usize = dims.iter().product();
    (0..n)
        .map(|i| {
            let d = digits(i, dims);
            let nd: Vec<usize> = order.iter().map(|&p| d[p]).collect();
            undigits(&nd, &new_dims)
        })
        .collect()
}

pub fn permute_systems(x: &LabeledOperator, new_order: &[&str]) -> Result<LabeledOperator> {
    if new_order.len() != x.systems.len() {
        return Err(Error::BadPermutation(new_order.join(",")));
    }
    let order = positions(x, new_order).map_err(|_| Error::BadPermutation(new_order.join(",")))?;
    if order.iter().enumerate().all(|(i, &p)| i == p) {
        return Ok(x.clone());
    }
    let map = permutation_map(&x.dims(), &order);
    let n = x.side();
    let mut out = linalg::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            out[(map[r], map[c])] = x.mat[(r, c)];
        }
    }
    let systems = order.iter().map(|&p| x.systems[p].clone()).collect();
    Ok(LabeledOperator { systems, mat: out })
}

/// Choi matrix Σ_ij |i⟩⟨j| ⊗ C(|i⟩⟨j|) on systems [input, output].
pub fn choi(ch: &KrausChannel) -> LabeledOperator {
    let (di, d_o) = (ch.input.dim, ch.output.dim);
    let mut mat = linalg::zeros(di * d_o, di * d_o);
    for k in &ch.kraus_ops {
        // |K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩
        let v: Vec<c64> = (0..di * d_o).map(|idx| k[(idx % d_o, idx / d_o)]).collect();
        for c in 0..v.len() {
            let vc = v[c].conj();
            if vc == ZERO {
                continue;
            }
            for r in 0..v.len() {
                mat[(r, c)] += v[r] * vc;
            }
        }
    }
    LabeledOperator { systems: vec![ch.input.clone(), ch.output.clone()], mat }
}

/// Choi matrix of a unitary channel on systems [input, output].
pub fn choi_unitary(u: &CMat, input: &str, output: &str) -> LabeledOperator {
    let d = u.nrows();
    let v: Vec<c64> = (0..d * d).map(|idx| u[(idx % d, idx / d)]).collect();
    LabeledOperator {
        systems: vec![sys(input, d), sys(output, u.nrows())],
        mat: linalg::outer(&v, &v),
    }
}

/// Link product X*Y = Tr_E[(X^{T_E} ⊗ 1)(1 ⊗ Y)] over the systems shared by name.
/// Result systems: X's private systems followed by Y's private systems.
pub fn link_product(x: &LabeledOperator, y: &LabeledOperator) -> Result<LabeledOperator> {
    let shared: Vec<&str> = x.names().into_iter().filter(|n| y.has(n)).collect();
    for n in &shared {
        if x.dim_of(n)? != y.dim_of(n)? {
            return Err(Error::DimMismatch(format!("shared system `{n}` has different dimensions")));
        }
    }
    let xa: Vec<&str> = x.names().into_iter().filter(|n| !shared.contains(n)).collect();
    let yb: Vec<&str> = y.names().into_iter().filter(|n| !shared.contains(n)).collect();
    let mut xo = xa.clone();
    xo.extend(shared.iter().cloned());
    let mut yo = shared.clone();
    yo.extend(yb.iter().cloned());
    let xp = permute_systems(x, &xo)?;
    let yp = permute_systems(y, &yo)?;
    let da: usize = xa.iter().map(|n| x.dim_of(n).unwrap()).product();
    let de: usize = shared.iter().map(|n| x.dim_of(n).unwrap()).product();
    let db: usize = yb.iter().map(|n| y.dim_of(n).unwrap()).product();
    // X̃[(a,a'),(e',e)] = X[(a,e'),(a',e)],  Ỹ[(e',e),(b,b')] = Y[(e',b),(e,b')]
    let xt = CMat::from_fn(da * da, de * de, |r, c| {
        let (a, a2) = (r / da, r % da);
        let (e2, e) = (c / de, c % de);
        xp.mat[(a * de + e2, a2 * de + e)]
    });
    let yt = CMat::from_fn(de * de, db * db, |r, c| {
        let (e2, e) = (r / de, r % de);
        let (b, b2) = (c / db, c % db);
        yp.mat[(e2 * db + b, e * db + b2)]
    });
    let rt = &xt * &yt;
    let mat = CMat::from_fn(da * db, da * db, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        rt[(a * da + a2, b * db + b2)]
    });
    let mut systems: Vec<SystemLabel> =
        xa.iter().map(|n| xp.systems[xp.position(n).unwrap()].clone()).collect();
    systems.extend(yb.iter().map(|n| yp.systems[yp.position(n).unwrap()].clone()));
    Ok(LabeledOperator { systems, mat })
}

/// Full contraction X*Y when all systems are shared, returned as a scalar.
pub fn link_scalar(x: &LabeledOperator, y: &LabeledOperator) -> Result<c64> {
    let r = link_product(x, y)?;
    if r.side() != 1 {
        return Err(Error::DimMismatch("link product leaves private systems".into()));
    }
    Ok(r.mat[(0, 0)])
}

pub fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Isometry onto the symmetric subspace of (C^d)^{⊗k}, with sparse columns.
#[derive(Clone, Debug)]
pub struct SymmetricIsometry {
    pub d: usize,
    pub k: usize,
    /// Sorted occupation multisets labelling the columns.
    pub multisets: Vec<Vec<usize>>,
    /// Column m: list of (row index in (C^d)^{⊗k}, amplitude).
    pub columns: Vec<Vec<(usize, f64)>>,
}

impl SymmetricIsometry {
    pub fn dim(&self) -> usize {
        self.multisets.len()
    }

    pub fn full_dim(&self) -> usize {
        self.d.pow(self.k as u32)
    }

    pub fn matrix(&self) -> CMat {
        let mut v = linalg::zeros(self.full_dim(), self.dim());
        for (m, col) in self.columns.iter().enumerate() {
            for &(r, a) in col {
                v[(r, m)] = linalg::cplx(a, 0.0);
            }
        }
        v
    }

    /// Column index of a (not necessarily sorted) multiset.
    pub fn index_of(&self, ms: &[usize]) -> usize {
        let mut s = ms.to_vec();
        s.sort_unstable();
        self.multisets.binary_search(&s).expect("multiset out of range")
    }
}

fn multisets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..d {
            cur.push(v);
            rec(d, k, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, k, 0, &mut Vec::new(), &mut out);
    out
}

fn distinct_permutations(ms: &[usize]) -> Vec<Vec<usize>> {
    fn rec(counts: &mut Vec<usize>, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in 0..counts.len() {
            if counts[v] > 0 {
                counts[v] -= 1;
                cur.push(v);
                rec(counts, len, cur, out);
                cur.pop();
                counts[v] += 1;
            }
        }
    }
    let d = ms.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0; d];
    for &v in ms {
        counts[v] += 1;
    }
    let mut out = Vec::new();
    rec(&mut counts, ms.len(), &mut Vec::new(), &mut out);
    out
}

pub fn symmetric_isometry(d: usize, k: usize) -> Result<SymmetricIsometry> {
    if d == 0 || k == 0 {
        return Err(Error::BadParameter("symmetric subspace needs d ≥ 1, k ≥ 1".into()));
    }
    let dim = binomial(d + k - 1, k)
        .ok_or_else(|| Error::SizeOverflow(format!("binom({}, {})", d + k - 1, k)))?;
    d.checked_pow(k as u32)
        .ok_or_else(|| Error::SizeOverflow(format!("{d}^{k}")))?;
    let ms = multisets(d, k);
    debug_assert_eq!(ms.len(), dim);
    let dims = vec![d; k];
    let columns = ms
        .iter()
        .map(|m| {
            let perms = distinct_permutations(m);
            let a = 1.0 / (perms.len() as f64).sqrt();
            let mut col: Vec<(usize, f64)> = perms.iter().map(|p| (undigits(p, &dims), a)).collect();
            col.sort_by_key(|e| e.0);
            col
        })
        .collect();
    Ok(SymmetricIsometry { d, k, multisets: ms, columns })
}

fn copy_labels(d: usize, k: usize) -> Vec<SystemLabel> {
    (1..=k).map(|i| sys(&format!("A{i}"), d)).collect()
}

/// U_σ on (C^d)^{⊗k}: the factor in position j moves to position σ(j)
/// (`sigma` is 0-based).
pub fn permutation_unitary(d: usize, k: usize, sigma: &[usize]) -> Result<LabeledOperator> {
    let mut seen = vec![false; k];
    if sigma.len() != k || sigma.iter().any(|&s| s >= k || std::mem::replace(&mut seen[s], true)) {
        return Err(Error::BadPermutation(format!("{sigma:?}")));
    }
    let dims = vec![d; k];
    let n = d.pow(k as u32);
    let mut mat = linalg::zeros(n, n);
    for c in 0..n {
        let dc = digits(c, &dims);
        let mut dr = vec![0; k];
        for j in 0..k {
            dr[sigma[j]] = dc[j];
        }
        mat[(undigits(&dr, &dims), c)] = ONE;
    }
    LabeledOperator::new(copy_labels(d, k), mat)
}

/// Ω_O(X) = X − Tr_O(X) ⊗ 1_O / d_O, with O kept in place.
pub fn trace_and_replace(x: &LabeledOperator, over: &str) -> Result<LabeledOperator> {
    let d_o = x.dim_of(over)?;
    let t = partial_trace(x, &[over])?;
    let id = LabeledOperator::identity(vec![x.systems[x.position(over)?].clone()])?;
    let back = tensor(&t, &id.scaled(1.0 / d_o as f64))?;
    let back = permute_systems(&back, &x.names())?;
    Ok(LabeledOperator { systems: x.systems.clone(), mat: &x.mat - &back.mat })
}

pub mod random {
    //! Haar-random unitaries, states and channels for tests and initialisation.

    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::*;

    pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            linalg::cplx(a, b) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    /// Haar-random isometry C^c → C^r (r ≥ c) via Gram–Schmidt.
    pub fn isometry<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMat {
        assert!(r >= c);
        let mut g = ginibre(rng, r, c);
        for j in 0..c {
            for p in 0..j {
                let mut ip = ZERO;
                for i in 0..r {
                    ip += g[(i, p)].conj() * g[(i, j)];
                }
                for i in 0..r {
                    let v = g[(i, p)];
                    g[(i, j)] -= v * ip;
                }
            }
            let nrm: f64 = (0..r).map(|i| g[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            for i in 0..r {
                g[(i, j)] /= nrm;
            }
        }
        g
    }

    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
        isometry(rng, d, d)
    }

    pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<c64> {
        let g = isometry(rng, d, 1);
        (0..d).map(|i| g[(i, 0)]).collect()
    }

    /// Random density matrix of full rank (Hilbert–Schmidt measure).
    pub fn density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
        let g = ginibre(rng, d, d);
        let rho = &g * g.adjoint();
        let t = linalg::trace(&rho).re;
        linalg::rscale(&rho, 1.0 / t)
    }

    /// Random channel with `nk` Kraus operators from a Haar isometry.
    pub fn channel<R: Rng + ?Sized>(
        rng: &mut R,
        input: SystemLabel,
        output: SystemLabel,
        nk: usize,
    ) -> KrausChannel {
        let v = isometry(rng, output.dim * nk, input.dim);
        let ops = (0..nk)
            .map(|k| CMat::from_fn(output.dim, input.dim, |i, j| v[(k * output.dim + i, j)]))
            .collect();
        KrausChannel::new(input, output, ops).expect("isometry yields a channel")
    }

    /// Random hermitian matrix with Gaussian entries.
    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
        let g = ginibre(rng, d, d);
        linalg::hermitize(&g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cplx, from_real};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sz() -> CMat {
        from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    fn phi_plus() -> LabeledOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [cplx(s, 0.0), ZERO, ZERO, cplx(s, 0.0)];
        LabeledOperator::new(vec![sys("A", 2), sys("B", 2)], linalg::outer(&v, &v)).unwrap()
    }

    #[test]
    fn tensor_identities_and_diagonal() {
        let a = LabeledOperator::identity(vec![sys("A", 2)]).unwrap();
        let b = LabeledOperator::identity(vec![sys("B", 3)]).unwrap();
        let ab = tensor(&a, &b).unwrap();
        assert_eq!(linalg::max_abs_diff(ab.matrix(), &linalg::eye(6)), 0.0);
        let z1 = LabeledOperator::new(vec![sys("A", 2)], sz()).unwrap();
        let z2 = LabeledOperator::new(vec![sys("B", 2)], sz()).unwrap();
        let zz = tensor(&z1, &z2).unwrap();
        let d: Vec<f64> = (0..4).map(|i| zz.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(tensor(&z1, &z1).unwrap_err(), Error::DuplicateSystem("A".into()));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = partial_trace(&phi_plus(), &["B"]).unwrap();
        assert!(linalg::max_abs_diff(m.matrix(), &linalg::rscale(&linalg::eye(2), 0.5)) < 1e-15);
        let rho = LabeledOperator::new(vec![sys("A", 3)], random::density(&mut rng, 3)).unwrap();
        let sig = LabeledOperator::new(vec![sys("B", 2)], random::hermitian(&mut rng, 2)).unwrap();
        let t = partial_trace(&tensor(&rho, &sig).unwrap(), &["B"]).unwrap();
        let expect = linalg::scale(rho.matrix(), sig.trace());
        assert!(linalg::max_abs_diff(t.matrix(), &expect) < 1e-12);
        let t2 = partial_trace(&tensor(&rho, &sig).unwrap(), &["A"]).unwrap();
        assert!(linalg::max_abs_diff(t2.matrix(), &linalg::scale(sig.matrix(), rho.trace())) < 1e-12);
        assert!(matches!(partial_trace(&rho, &["Q"]), Err(Error::UnknownSystem(_))));
    }

    #[test]
    fn purification_marginal() {
        // Σ_i |i⟩ ⊗ √σᵀ|i⟩ has marginal (√σᵀ)ᵀ(√σᵀ)^* = σ on I.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random::density(&mut rng, 3);
        let st = linalg::transpose(&linalg::psd_sqrt(&s));
        let v: Vec<c64> = (0..9).map(|idx| st[(idx % 3, idx / 3)]).collect();
        let p = LabeledOperator::new(vec![sys("I", 3), sys("E", 3)], linalg::outer(&v, &v)).unwrap();
        let m = partial_trace(&p, &["E"]).unwrap();
        assert!(linalg::max_abs_diff(m.matrix(), &s) < 1e-12);
    }

    #[test]
    fn partial_transpose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = LabeledOperator::new(vec![sys("A", 2)], random::ginibre(&mut rng, 2, 2)).unwrap();
        let b = LabeledOperator::new(vec![sys("B", 3)], random::ginibre(&mut rng, 3, 3)).unwrap();
        let ab = tensor(&a, &b).unwrap();
        let pt = partial_transpose(&ab, &["B"]).unwrap();
        let bt = b.map_matrix(linalg::transpose);
        assert!(pt.distance(&tensor(&a, &bt).unwrap()).unwrap() < 1e-15);
        let back = partial_transpose(&pt, &["B"]).unwrap();
        assert!(back.distance(&ab).unwrap() == 0.0);
        let e = partial_transpose(&phi_plus(), &["B"]).unwrap().min_eig();
        assert!((e + 0.5).abs() < 1e-12);
    }

    #[test]
    fn permute_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = LabeledOperator::new(vec![sys("A", 2)], random::ginibre(&mut rng, 2, 2)).unwrap();
        let b = LabeledOperator::new(vec![sys("B", 3)], random::ginibre(&mut rng, 3, 3)).unwrap();
        let ab = tensor(&a, &b).unwrap();
        let ba = permute_systems(&ab, &["B", "A"]).unwrap();
        assert!(linalg::max_abs_diff(ba.matrix(), tensor(&b, &a).unwrap().matrix()) < 1e-15);
        let back = permute_systems(&ba, &["A", "B"]).unwrap();
        assert_eq!(linalg::max_abs_diff(back.matrix(), ab.matrix()), 0.0);
        assert!(matches!(permute_systems(&ab, &["A", "A"]), Err(Error::BadPermutation(_))));
        assert!(matches!(permute_systems(&ab, &["A"]), Err(Error::BadPermutation(_))));
    }

    #[test]
    fn choi_examples() {
        let q = |n: &str| sys(n, 2);
        let id = KrausChannel::unitary(q("I"), q("O"), linalg::eye(2)).unwrap();
        let c = choi(&id);
        assert!((c.trace().re - 2.0).abs() < 1e-15);
        for (r, cc) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_eq!(c.matrix()[(r, cc)], ONE);
        }
        let x = from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let cx = choi(&KrausChannel::unitary(q("I"), q("O"), x).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [ZERO, cplx(s, 0.0), cplx(s, 0.0), ZERO];
        assert!(linalg::max_abs_diff(cx.matrix(), &linalg::rscale(&linalg::outer(&psi, &psi), 2.0)) < 1e-15);
    }

    #[test]
    fn link_product_identity_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = LabeledOperator::new(vec![sys("I", 2), sys("E", 3)], random::density(&mut rng, 6)).unwrap();
        let one = LabeledOperator::identity(vec![sys("E", 3), sys("O", 2)]).unwrap();
        let l = link_product(&rho, &one).unwrap();
        let expect = tensor(&partial_trace(&rho, &["E"]).unwrap(), &LabeledOperator::identity(vec![sys("O", 2)]).unwrap()).unwrap();
        assert!(l.distance(&expect).unwrap() < 1e-12);
        let bad = LabeledOperator::identity(vec![sys("E", 2)]).unwrap();
        assert!(matches!(link_product(&rho, &bad), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn link_product_without_shared_is_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = LabeledOperator::new(vec![sys("A", 2)], random::hermitian(&mut rng, 2)).unwrap();
        let b = LabeledOperator::new(vec![sys("B", 3)], random::hermitian(&mut rng, 3)).unwrap();
        let l = link_product(&a, &b).unwrap();
        assert!(l.distance(&tensor(&a, &b).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn symmetric_isometry_dims() {
        assert_eq!(symmetric_isometry(2, 2).unwrap().dim(), 3);
        assert_eq!(symmetric_isometry(3, 4).unwrap().dim(), 15);
        let v = symmetric_isometry(3, 3).unwrap();
        let m = v.matrix();
        let g = m.adjoint() * &m;
        assert!(linalg::max_abs_diff(&g, &linalg::eye(v.dim())) < 1e-14);
        let p = &m * m.adjoint();
        for sigma in [[1, 0, 2], [1, 2, 0], [0, 2, 1]] {
            let u = permutation_unitary(3, 3, &sigma).unwrap();
            let lhs = u.matrix() * &p;
            let rhs = &p * u.matrix();
            assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-14);
            assert!(linalg::max_abs_diff(&(m.adjoint() * u.matrix() * &m), &linalg::eye(v.dim())) < 1e-14);
        }
        assert!(matches!(symmetric_isometry(1 << 40, 40), Err(Error::SizeOverflow(_))));
    }

    #[test]
    fn permutation_unitary_examples() {
        let id = permutation_unitary(2, 3, &[0, 1, 2]).unwrap();
        assert_eq!(linalg::max_abs_diff(id.matrix(), &linalg::eye(8)), 0.0);
        let sw = permutation_unitary(2, 2, &[1, 0]).unwrap();
        let ev = linalg::eigvalsh(sw.matrix());
        assert!((ev[0] + 1.0).abs() < 1e-14 && ev[1..].iter().all(|e| (e - 1.0).abs() < 1e-14));
        // U_σ (v1⊗v2⊗v3) = v_{σ⁻¹(1)} ⊗ v_{σ⁻¹(2)} ⊗ v_{σ⁻¹(3)}
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vs: Vec<CMat> = (0..3).map(|_| random::ginibre(&mut rng, 2, 1)).collect();
        let sigma = [1, 2, 0];
        let mut inv = [0; 3];
        for j in 0..3 {
            inv[sigma[j]] = j;
        }
        let u = permutation_unitary(2, 3, &sigma).unwrap();
        let lhs = u.matrix() * linalg::kron(&linalg::kron(&vs[0], &vs[1]), &vs[2]);
        let rhs = linalg::kron(&linalg::kron(&vs[inv[0]], &vs[inv[1]]), &vs[inv[2]]);
        assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-14);
        let pi = [2, 0, 1];
        let comp: Vec<usize> = (0..3).map(|j| sigma[pi[j]]).collect();
        let up = permutation_unitary(2, 3, &pi).unwrap();
        let uc = permutation_unitary(2, 3, &comp).unwrap();
        assert!(linalg::max_abs_diff(&(u.matrix() * up.matrix()), uc.matrix()) == 0.0);
    }

    #[test]
    fn trace_and_replace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = LabeledOperator::new(vec![sys("A", 3)], random::density(&mut rng, 3)).unwrap();
        let id = LabeledOperator::identity(vec![sys("O", 2)]).unwrap().scaled(0.5);
        let x = tensor(&rho, &id).unwrap();
        assert!(linalg::max_abs(trace_and_replace(&x, "O").unwrap().matrix()) < 1e-15);
        let z = LabeledOperator::new(vec![sys("O", 2)], sz()).unwrap();
        let xz = tensor(&rho, &z).unwrap();
        assert!(trace_and_replace(&xz, "O").unwrap().distance(&xz).unwrap() < 1e-15);
        let r = LabeledOperator::new(vec![sys("O", 2), sys("A", 3)], random::ginibre(&mut rng, 6, 6)).unwrap();
        let o1 = trace_and_replace(&r, "O").unwrap();
        let o2 = trace_and_replace(&o1, "O").unwrap();
        assert!(o1.distance(&o2).unwrap() < 1e-14);
        assert!(linalg::max_abs(partial_trace(&o1, &["O"]).unwrap().matrix()) < 1e-14);
    }
}
