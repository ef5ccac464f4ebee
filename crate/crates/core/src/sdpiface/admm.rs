//! Operator-splitting solver on the homogeneous self-dual embedding
//! (O'Donoghue et al.), for instances whose dense Newton systems do not fit.
//!
//!   min cᵀx  s.t.  𝒜x + s = 𝔟,  s ∈ {0}^m × PSD cones,
//!
//! where the cone rows of 𝒜 are `−F_c` in hermitian coordinates and
//! 𝔟 = (b, F0_c). The linear step solves `(I + 𝒜ᵀ𝒜) x = r` by
//! preconditioned conjugate gradients with warm starts.

use super::lower::{block_to_coords, coords_to_block, entry_coords, RawSolution, StdForm};
use super::{BackendKind, Status, Tolerances};
use crate::linalg;

struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn nrows(&self) -> usize {
        self.ptr.len() - 1
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.nrows() {
            let mut s = 0.0;
            for k in self.ptr[r]..self.ptr[r + 1] {
                s += self.val[k] * x[self.idx[k]];
            }
            out[r] = s;
        }
    }

    fn tmul(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.nrows() {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for k in self.ptr[r]..self.ptr[r + 1] {
                out[self.idx[k]] += self.val[k] * yr;
            }
        }
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Data {
    a: Csr,
    b: Vec<f64>,
    c: Vec<f64>,
    m: usize,
    cones: Vec<(usize, usize)>,
    precond: Vec<f64>,
}

fn build(f: &StdForm, c: &[f64]) -> Data {
    let m = f.rows.len();
    let mut rows: Vec<Vec<(usize, f64)>> = f.rows.clone();
    let mut b = f.b.clone();
    let mut cones = Vec::new();
    for cn in &f.cones {
        let start = rows.len();
        let nn = cn.n * cn.n;
        let mut crow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nn];
        for (k, &v) in cn.vars.iter().enumerate() {
            for (j, a) in entry_coords(cn.n, cn.maps[k].iter().map(|&(p, q, x)| (p as usize, q as usize, x))) {
                crow[j].push((v, -a));
            }
        }
        rows.extend(crow);
        b.extend(block_to_coords(&cn.f0));
        cones.push((start, cn.n));
    }
    let mut ptr = Vec::with_capacity(rows.len() + 1);
    let mut idx = Vec::new();
    let mut val = Vec::new();
    ptr.push(0);
    for r in &rows {
        for &(j, a) in r {
            idx.push(j);
            val.push(a);
        }
        ptr.push(idx.len());
    }
    let a = Csr { ptr, idx, val };
    let mut precond = vec![1.0; f.nvar];
    for (&j, &v) in a.idx.iter().zip(&a.val) {
        precond[j] += v * v;
    }
    Data { a, b, c: c.to_vec(), m, cones, precond }
}

impl Data {
    /// (I + 𝒜ᵀ𝒜) x = r by Jacobi-preconditioned CG, starting from `x`.
    fn cg(&self, r: &[f64], x: &mut [f64], rel_tol: f64, max_it: usize) -> usize {
        let n = x.len();
        let mut tmp = vec![0.0; self.a.nrows()];
        let apply = |v: &[f64], out: &mut [f64], tmp: &mut [f64]| {
            self.a.mul(v, tmp);
            self.a.tmul(tmp, out);
            for (o, &vi) in out.iter_mut().zip(v) {
                *o += vi;
            }
        };
        let mut ax = vec![0.0; n];
        apply(x, &mut ax, &mut tmp);
        let mut res: Vec<f64> = r.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let rn = norm_inf(r).max(1e-300);
        if norm_inf(&res) <= rel_tol * rn {
            return 0;
        }
        let mut z: Vec<f64> = res.iter().zip(&self.precond).map(|(a, p)| a / p).collect();
        let mut p = z.clone();
        let mut rz = dot(&res, &z);
        let mut ap = vec![0.0; n];
        for it in 0..max_it {
            apply(&p, &mut ap, &mut tmp);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                res[i] -= alpha * ap[i];
            }
            if norm_inf(&res) <= rel_tol * rn {
                return it + 1;
            }
            for i in 0..n {
                z[i] = res[i] / self.precond[i];
            }
            let rz2 = dot(&res, &z);
            let beta = rz2 / rz;
            rz = rz2;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        max_it
    }

    fn project_dual_cone(&self, y: &mut [f64]) {
        for &(start, n) in &self.cones {
            let sl = &mut y[start..start + n * n];
            let mat = coords_to_block(sl, n);
            let (vals, vecs) = linalg::eigh(&mat);
            if vals[0] >= 0.0 {
                continue;
            }
            let mut proj = linalg::zeros(n, n);
            for (k, &l) in vals.iter().enumerate() {
                if l <= 0.0 {
                    continue;
                }
                for j in 0..n {
                    let vj = vecs[(j, k)].conj() * l;
                    for i in 0..n {
                        proj[(i, j)] += vecs[(i, k)] * vj;
                    }
                }
            }
            sl.copy_from_slice(&block_to_coords(&proj));
        }
    }
}

pub(crate) fn solve(f: &StdForm, tol: &Tolerances, max_iter: usize, cost_scale: f64, verbose: bool) -> RawSolution {
    let cmax = norm_inf(&f.c);
    let cscale = cost_scale * if cmax > 0.0 { cmax } else { 1.0 };
    let c: Vec<f64> = f.c.iter().map(|v| v / cscale).collect();
    let d = build(f, &c);
    let n = f.nvar;
    let mr = d.a.nrows();
    let bn = norm_inf(&d.b);
    let cn = norm_inf(&d.c);

    // g = M⁻¹ h with h = (c, 𝔟)
    let mut gx = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    d.a.tmul(&d.b, &mut rhs);
    for i in 0..n {
        rhs[i] = d.c[i] - rhs[i];
    }
    d.cg(&rhs, &mut gx, 1e-13, 10 * n + 100);
    let mut gy = vec![0.0; mr];
    d.a.mul(&gx, &mut gy);
    for i in 0..mr {
        gy[i] += d.b[i];
    }
    let hg = dot(&d.c, &gx) + dot(&d.b, &gy);

    let alpha = 1.5;
    let mut ux = vec![0.0; n];
    let mut uy = vec![0.0; mr];
    let mut ut = 1.0;
    let mut vy = vec![0.0; mr];
    let mut vt = 1.0;
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; mr];
    let mut tmp_n = vec![0.0; n];
    let mut tmp_m = vec![0.0; mr];
    let mut best: Option<RawSolution> = None;
    let mut iters = 0;
    for k in 0..max_iter {
        iters = k;
        // linear step on w = u + v (v_x = 0)
        let wy: Vec<f64> = uy.iter().zip(&vy).map(|(a, b)| a + b).collect();
        let wt = ut + vt;
        d.a.tmul(&wy, &mut tmp_n);
        for i in 0..n {
            tmp_n[i] = ux[i] - tmp_n[i];
        }
        let cg_tol = if k < 20 { 1e-7 } else { 1e-10 };
        d.cg(&tmp_n, &mut px, cg_tol, 500);
        d.a.mul(&px, &mut py);
        for i in 0..mr {
            py[i] += wy[i];
        }
        let tt = (wt + dot(&d.c, &px) + dot(&d.b, &py)) / (1.0 + hg);
        // tilde u = p − τ̃ g
        let tux: Vec<f64> = px.iter().zip(&gx).map(|(p, g)| p - tt * g).collect();
        let tuy: Vec<f64> = py.iter().zip(&gy).map(|(p, g)| p - tt * g).collect();
        // projection with over-relaxation
        let mut ax = vec![0.0; n];
        for i in 0..n {
            ax[i] = alpha * tux[i] + (1.0 - alpha) * ux[i];
        }
        let mut ay = vec![0.0; mr];
        for i in 0..mr {
            ay[i] = alpha * tuy[i] + (1.0 - alpha) * uy[i];
        }
        let at = alpha * tt + (1.0 - alpha) * ut;
        ux.copy_from_slice(&ax);
        let mut ny: Vec<f64> = ay.iter().zip(&vy).map(|(a, v)| a - v).collect();
        d.project_dual_cone(&mut ny);
        let nt = (at - vt).max(0.0);
        for i in 0..mr {
            vy[i] += ny[i] - ay[i];
        }
        vt += nt - at;
        uy = ny;
        ut = nt;

        if k % 25 == 0 || k + 1 == max_iter {
            if ut <= 1e-12 {
                continue;
            }
            let xh: Vec<f64> = ux.iter().map(|v| v / ut).collect();
            let yh: Vec<f64> = uy.iter().map(|v| v / ut).collect();
            let sh: Vec<f64> = vy.iter().map(|v| v / ut).collect();
            d.a.mul(&xh, &mut tmp_m);
            let mut pr = 0.0f64;
            for i in 0..mr {
                pr = pr.max((tmp_m[i] + sh[i] - d.b[i]).abs());
            }
            let pres = pr / (1.0 + bn);
            d.a.tmul(&yh, &mut tmp_n);
            let dres = tmp_n.iter().zip(&d.c).map(|(a, c)| (a + c).abs()).fold(0.0f64, f64::max) / (1.0 + cn);
            let pobj = dot(&d.c, &xh) * cscale;
            let dobj = -dot(&d.b, &yh) * cscale;
            let gap = (pobj - dobj).abs();
            if verbose && k % 250 == 0 {
                eprintln!("admm {k:6} pobj {pobj:+.8e} dobj {dobj:+.8e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e}");
            }
            let done = pres <= tol.feas && dres <= tol.feas && gap <= tol.gap * pobj.abs().max(1.0);
            best = Some(RawSolution {
                status: if done { Status::Optimal } else { Status::NumericalTrouble },
                x: xh,
                y: yh[..d.m].to_vec(),
                pobj,
                dobj,
                pres,
                dres,
                iters: k,
                backend: BackendKind::Admm,
            });
            if done {
                break;
            }
        }
    }
    let mut out = best.unwrap_or(RawSolution {
        status: Status::NumericalTrouble,
        x: vec![0.0; n],
        y: vec![0.0; d.m],
        pobj: f64::NAN,
        dobj: f64::NAN,
        pres: f64::NAN,
        dres: f64::NAN,
        iters,
        backend: BackendKind::Admm,
    });
    out.iters = iters;
    out
}
