use std::collections::HashMap;

use crate::linalg::{self, c64, CMat, ZERO};
use crate::qops::{digits, undigits};
use crate::{Error, Result};

/// Affine constraint `Φ(X) = a` on the operators of one party.
///
/// `Φ` acts on the column-stacked operator: entry `(r, p + q·dim, c)` adds
/// `c · X[p, q]` to output coordinate `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    dim: usize,
    rows: usize,
    action: Vec<(usize, usize, c64)>,
    target: Vec<c64>,
}

/// Real linear functional `Tr(H X) = beta` with `H` hermitian, stored sparse.
#[derive(Clone, Debug)]
pub(crate) struct HermRow {
    pub entries: Vec<(usize, usize, c64)>,
    pub beta: f64,
}

impl AffineMap {
    pub fn new(dim: usize, rows: usize, action: Vec<(usize, usize, c64)>, target: Vec<c64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParameter("affine map on empty space".into()));
        }
        if target.len() != rows {
            return Err(Error::DimMismatch(format!("{} target entries for {} rows", target.len(), rows)));
        }
        if let Some(&(r, c, _)) = action.iter().find(|&&(r, c, _)| r >= rows || c >= dim * dim) {
            return Err(Error::BadIndex(format!("action entry ({r}, {c}) outside {rows}×{}", dim * dim)));
        }
        if action.iter().any(|e| !e.2.re.is_finite() || !e.2.im.is_finite()) {
            return Err(Error::BadParameter("non-finite action entry".into()));
        }
        Ok(AffineMap { dim, rows, action, target })
    }

    /// No constraint beyond unit trace.
    pub fn unconstrained(dim: usize) -> Self {
        AffineMap { dim, rows: 0, action: Vec::new(), target: Vec::new() }
    }

    /// Map given on matrix units: `f(p, q)` lists the entries `(r, c, v)` of
    /// `Φ(|p⟩⟨q|)`, an operator of side `out_dim`; `target` is the required
    /// value of `Φ(X)`.
    pub fn from_elementwise(
        dim: usize,
        out_dim: usize,
        f: impl Fn(usize, usize) -> Vec<(usize, usize, c64)>,
        target: &CMat,
    ) -> Result<Self> {
        if target.nrows() != out_dim || target.ncols() != out_dim {
            return Err(Error::DimMismatch(format!("target must be {out_dim}×{out_dim}")));
        }
        let mut action = Vec::new();
        for q in 0..dim {
            for p in 0..dim {
                for (r, c, v) in f(p, q) {
                    if r >= out_dim || c >= out_dim {
                        return Err(Error::BadIndex(format!("output entry ({r}, {c})")));
                    }
                    if v != ZERO {
                        action.push((r + c * out_dim, p + q * dim, v));
                    }
                }
            }
        }
        let mut t = Vec::with_capacity(out_dim * out_dim);
        for c in 0..out_dim {
            for r in 0..out_dim {
                t.push(target[(r, c)]);
            }
        }
        AffineMap::new(dim, out_dim * out_dim, action, t)
    }

    /// `Tr_S(X) = target`, with `S` the subsystems flagged in `traced`.
    pub fn partial_trace(dims: &[usize], traced: &[bool], target: &CMat) -> Result<Self> {
        if dims.len() != traced.len() {
            return Err(Error::DimMismatch("trace mask length".into()));
        }
        let dim: usize = dims.iter().product();
        let kept: Vec<usize> = dims.iter().zip(traced).filter(|(_, &t)| !t).map(|(&d, _)| d).collect();
        let out: usize = kept.iter().product();
        let keep_digits = |d: &[usize]| -> Vec<usize> {
            d.iter().zip(traced).filter(|(_, &t)| !t).map(|(&x, _)| x).collect()
        };
        AffineMap::from_elementwise(
            dim,
            out,
            |p, q| {
                let dp = digits(p, dims);
                let dq = digits(q, dims);
                if dims.iter().enumerate().any(|(k, _)| traced[k] && dp[k] != dq[k]) {
                    return Vec::new();
                }
                vec![(undigits(&keep_digits(&dp), &kept), undigits(&keep_digits(&dq), &kept), linalg::ONE)]
            },
            target,
        )
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stacked(&self, other: &AffineMap) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(format!("stacking maps on sides {} and {}", self.dim, other.dim)));
        }
        let mut action = self.action.clone();
        action.extend(other.action.iter().map(|&(r, c, v)| (r + self.rows, c, v)));
        let mut target = self.target.clone();
        target.extend_from_slice(&other.target);
        Ok(AffineMap { dim: self.dim, rows: self.rows + other.rows, action, target })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn action(&self) -> &[(usize, usize, c64)] {
        &self.action
    }

    pub fn target(&self) -> &[c64] {
        &self.target
    }

    pub fn is_trivial(&self) -> bool {
        self.action.is_empty() && self.target.iter().all(|t| *t == ZERO)
    }

    pub fn apply(&self, x: &CMat) -> Vec<c64> {
        let mut out = vec![ZERO; self.rows];
        for &(r, c, v) in &self.action {
            out[r] += v * x[(c % self.dim, c / self.dim)];
        }
        out
    }

    /// Largest entry of `|Φ(X) − a|`.
    pub fn residual(&self, x: &CMat) -> f64 {
        self.apply(x).iter().zip(&self.target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// The constraint as real hermitian functionals, with exact duplicates
    /// (up to sign and scale) removed.
    pub(crate) fn hermitian_rows(&self) -> Vec<HermRow> {
        let mut by_row: Vec<Vec<(usize, usize, c64)>> = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.action {
            // Φ(X)_r = Tr(G X) with G[q, p] = action[r, p + q·dim]
            by_row[r].push((c / self.dim, c % self.dim, v));
        }
        let half = c64::new(0.5, 0.0);
        let mut out = Vec::new();
        let mut seen: HashMap<Vec<(usize, usize, i64, i64)>, f64> = HashMap::new();
        for (r, g) in by_row.iter().enumerate() {
            for part in 0..2 {
                // part 0: Re Tr(GX) = Tr((G+G†)/2 X); part 1: Im Tr(GX) = Tr((G−G†)/(2i) X)
                let mut acc: HashMap<(usize, usize), c64> = HashMap::new();
                for &(i, j, v) in g {
                    let (a, b) = if part == 0 { (v * half, v.conj() * half) } else { (v * c64::new(0.0, -0.5), v.conj() * c64::new(0.0, 0.5)) };
                    *acc.entry((i, j)).or_insert(ZERO) += a;
                    *acc.entry((j, i)).or_insert(ZERO) += b;
                }
                let mut entries: Vec<(usize, usize, c64)> =
                    acc.into_iter().filter(|(_, v)| v.norm() > 1e-15).map(|((i, j), v)| (i, j, v)).collect();
                let beta = if part == 0 { self.target[r].re } else { self.target[r].im };
                if entries.is_empty() {
                    if beta.abs() > 1e-15 {
                        // inconsistent row; keep it so feasibility checks fail
                        out.push(HermRow { entries, beta });
                    }
                    continue;
                }
                entries.sort_by_key(|e| (e.0, e.1));
                // hermitian rows may only be rescaled by real numbers
                let lead = entries[0].2;
                let sign = if lead.re.abs() > 1e-12 { lead.re.signum() } else { lead.im.signum() };
                let s = sign * lead.norm();
                let key: Vec<(usize, usize, i64, i64)> = entries
                    .iter()
                    .map(|&(i, j, v)| (i, j, (v.re / s * 1e10).round() as i64, (v.im / s * 1e10).round() as i64))
                    .collect();
                let nb = beta / s;
                if let Some(&prev) = seen.get(&key) {
                    if (prev - nb).abs() <= 1e-12 * (1.0 + prev.abs()) {
                        continue;
                    }
                } else {
                    seen.insert(key, nb);
                }
                out.push(HermRow { entries, beta });
            }
        }
        out
    }
}

/// Entries of `H` restricted to the index set `idx` (local indices).
pub(crate) fn restrict(entries: &[(usize, usize, c64)], local: &HashMap<usize, usize>) -> Vec<(usize, usize, c64)> {
    entries
        .iter()
        .filter_map(|&(i, j, v)| match (local.get(&i), local.get(&j)) {
            (Some(&a), Some(&b)) => Some((a, b, v)),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn dense(entries: &[(usize, usize, c64)], n: usize) -> CMat {
    let mut m = linalg::zeros(n, n);
    for &(i, j, v) in entries {
        m[(i, j)] += v;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partial_trace_map_matches_qops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random::density(&mut rng, 6);
        let lo = crate::qops::LabeledOperator::new(vec![crate::qops::sys("a", 2), crate::qops::sys("b", 3)], x.clone())
            .unwrap();
        let t = crate::qops::partial_trace(&lo, &["a"]).unwrap();
        let m = AffineMap::partial_trace(&[2, 3], &[true, false], t.matrix()).unwrap();
        assert!(m.residual(&x) < 1e-14);
        let y = random::density(&mut rng, 6);
        assert!(m.residual(&y) > 1e-3);
    }

    #[test]
    fn hermitian_rows_reproduce_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random::hermitian(&mut rng, 4);
        let t = linalg::eye(2);
        let m = AffineMap::partial_trace(&[2, 2], &[false, true], &t).unwrap();
        let fx = m.apply(&x);
        let rows = m.hermitian_rows();
        // a 2×2 hermitian output has 4 real coordinates
        assert_eq!(rows.len(), 4);
        for r in &rows {
            let h = dense(&r.entries, 4);
            assert!(linalg::herm_dev(&h) < 1e-15);
            let v = linalg::trace_prod(&h, &x).re;
            // every row value is a real or imaginary part of some fx entry
            assert!(fx.iter().any(|c| (c.re - v).abs() < 1e-12 || (c.im - v).abs() < 1e-12 || (c.im + v).abs() < 1e-12));
        }
    }
}
