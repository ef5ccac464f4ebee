//! SDPA sparse-format export.
//!
//! The standard form `min cᵀx, F0 + Σ x_j F_j ⪰ 0, Ax = b` maps onto SDPA's
//! `min cᵀx, Σ x_j F_j − F_0 ⪰ 0` with `F_0 = −F0`. Each complex cone is
//! realified through `[[Re, −Im], [Im, Re]]` and the equalities become a
//! diagonal block holding both `aᵀx − b ≥ 0` and `b − aᵀx ≥ 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::lower;
use super::ConicProblem;
use crate::linalg::{c64, CMat, RMat};
use crate::{Error, Result};

/// Real symmetric embedding `[[Re A, −Im A], [Im A, Re A]]` of a complex
/// matrix; hermitian inputs give symmetric outputs with every eigenvalue
/// doubled.
pub fn real_embedding(a: &CMat) -> RMat {
    let (r, c) = (a.nrows(), a.ncols());
    RMat::from_fn(2 * r, 2 * c, |i, j| {
        let v = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

fn push_embedded(acc: &mut BTreeMap<(usize, usize), f64>, n: usize, a: usize, b: usize, f: c64) {
    let mut put = |i: usize, j: usize, v: f64| {
        if v != 0.0 && i <= j {
            *acc.entry((i, j)).or_insert(0.0) += v;
        }
    };
    put(a, b, f.re);
    put(a + n, b + n, f.re);
    put(a + n, b, f.im);
    put(a, b + n, -f.im);
}

pub(crate) fn render(p: &ConicProblem) -> String {
    let f = lower::lower(p);
    let mut s = String::new();
    let _ = writeln!(s, "\"chandisc conic problem: {} variables, {} equalities", f.nvar, f.rows.len());
    let _ = writeln!(s, "{}", f.nvar);
    let nb = f.cones.len() + usize::from(!f.rows.is_empty());
    let _ = writeln!(s, "{nb}");
    let mut sizes: Vec<String> = f.cones.iter().map(|c| (2 * c.n).to_string()).collect();
    if !f.rows.is_empty() {
        sizes.push(format!("-{}", 2 * f.rows.len()));
    }
    let _ = writeln!(s, "{}", sizes.join(" "));
    let cs: Vec<String> = f.c.iter().map(|v| format!("{v:.17e}")).collect();
    let _ = writeln!(s, "{}", cs.join(" "));
    // F_0 = −F0 per cone, and (b, −b) on the diagonal block
    let lp_block = f.cones.len() + 1;
    for (ci, cn) in f.cones.iter().enumerate() {
        let mut acc = BTreeMap::new();
        for j in 0..cn.n {
            for i in 0..cn.n {
                let v = cn.f0[(i, j)];
                if v.norm() != 0.0 {
                    push_embedded(&mut acc, cn.n, i, j, -v);
                }
            }
        }
        for ((i, j), v) in acc {
            let _ = writeln!(s, "0 {} {} {} {v:.17e}", ci + 1, i + 1, j + 1);
        }
    }
    let mr = f.rows.len();
    for (r, &b) in f.b.iter().enumerate() {
        if b != 0.0 {
            let _ = writeln!(s, "0 {lp_block} {} {} {:.17e}", r + 1, r + 1, b);
            let _ = writeln!(s, "0 {lp_block} {} {} {:.17e}", mr + r + 1, mr + r + 1, -b);
        }
    }
    // F_j, grouped by variable
    let mut per_var: Vec<Vec<(usize, usize, usize, f64)>> = vec![Vec::new(); f.nvar];
    for (ci, cn) in f.cones.iter().enumerate() {
        for (k, &v) in cn.vars.iter().enumerate() {
            let mut acc = BTreeMap::new();
            for &(a, b, x) in &cn.maps[k] {
                push_embedded(&mut acc, cn.n, a as usize, b as usize, x);
            }
            for ((i, j), val) in acc {
                per_var[v].push((ci + 1, i + 1, j + 1, val));
            }
        }
    }
    for (r, row) in f.rows.iter().enumerate() {
        for &(v, a) in row {
            per_var[v].push((lp_block, r + 1, r + 1, a));
            per_var[v].push((lp_block, mr + r + 1, mr + r + 1, -a));
        }
    }
    for (v, list) in per_var.iter().enumerate() {
        for &(blk, i, j, val) in list {
            let _ = writeln!(s, "{} {blk} {i} {j} {val:.17e}", v + 1);
        }
    }
    s
}

pub(crate) fn write(p: &ConicProblem, path: &Path) -> Result<()> {
    std::fs::write(path, render(p)).map_err(|e| Error::Solver(format!("writing {}: {e}", path.display())))
}
