//! Infeasible-start primal-dual interior-point method with Nesterov–Todd
//! scaling and Mehrotra predictor-corrector steps, for the standard form of
//! `lower`.
//!
//! Variables coupled through a common cone form a component with its own
//! dense Newton block; variables flagged as linking (free scalars, or
//! variables shared by many cones) are kept in the reduced system together
//! with the equality multipliers.

use faer::linalg::solvers::Solve;
use faer::{Par, Side};

use super::lower::{entry_coords, RawSolution, StdCone, StdForm};
use super::{BackendKind, Status, Tolerances};
use crate::linalg::{self, c64, CMat, RMat, ZERO};

struct Comp {
    vars: Vec<usize>,
    links: Vec<usize>,
    rows: Vec<usize>,
}

struct Structure {
    comps: Vec<Comp>,
    /// For every global variable: (component, local index) or linking index.
    place: Vec<Place>,
    links: Vec<usize>,
    cone_comp: Vec<Option<usize>>,
    /// Per row: entries on linking variables (link index, coefficient).
    row_links: Vec<Vec<(usize, f64)>>,
    /// Per component, per local row: entries (local var, coefficient).
    comp_rows: Vec<Vec<Vec<(usize, f64)>>>,
}

#[derive(Clone, Copy)]
enum Place {
    Local(usize, usize),
    Link(usize),
}

fn find(p: &mut [usize], mut i: usize) -> usize {
    while p[i] != i {
        p[i] = p[p[i]];
        i = p[i];
    }
    i
}

fn analyze(f: &StdForm) -> Structure {
    let n = f.nvar;
    let mut in_cone = vec![false; n];
    for c in &f.cones {
        for &v in &c.vars {
            in_cone[v] = true;
        }
    }
    let linking: Vec<bool> = (0..n).map(|v| f.linking[v] || !in_cone[v]).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for c in &f.cones {
        let mut first = None;
        for &v in &c.vars {
            if linking[v] {
                continue;
            }
            match first {
                None => first = Some(v),
                Some(u) => {
                    let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let mut root_comp = vec![usize::MAX; n];
    let mut comps: Vec<Comp> = Vec::new();
    let mut place = vec![Place::Link(0); n];
    let mut links = Vec::new();
    for v in 0..n {
        if linking[v] {
            place[v] = Place::Link(links.len());
            links.push(v);
            continue;
        }
        let r = find(&mut parent, v);
        if root_comp[r] == usize::MAX {
            root_comp[r] = comps.len();
            comps.push(Comp { vars: Vec::new(), links: Vec::new(), rows: Vec::new() });
        }
        let g = root_comp[r];
        place[v] = Place::Local(g, comps[g].vars.len());
        comps[g].vars.push(v);
    }
    let mut cone_comp = Vec::with_capacity(f.cones.len());
    for c in &f.cones {
        let mut g = None;
        let mut ls = Vec::new();
        for &v in &c.vars {
            match place[v] {
                Place::Local(cg, _) => g = Some(cg),
                Place::Link(l) => ls.push(l),
            }
        }
        if let Some(g) = g {
            comps[g].links.extend(ls);
        }
        cone_comp.push(g);
    }
    for c in comps.iter_mut() {
        c.links.sort_unstable();
        c.links.dedup();
    }
    let mut row_links = Vec::with_capacity(f.rows.len());
    let mut comp_rows: Vec<Vec<Vec<(usize, f64)>>> = vec![Vec::new(); comps.len()];
    for (ri, row) in f.rows.iter().enumerate() {
        let mut rl = Vec::new();
        let mut per: Vec<(usize, usize, f64)> = Vec::new();
        for &(v, a) in row {
            match place[v] {
                Place::Local(g, k) => per.push((g, k, a)),
                Place::Link(l) => rl.push((l, a)),
            }
        }
        per.sort_by_key(|e| e.0);
        let mut i = 0;
        while i < per.len() {
            let g = per[i].0;
            let mut entries = Vec::new();
            while i < per.len() && per[i].0 == g {
                entries.push((per[i].1, per[i].2));
                i += 1;
            }
            comps[g].rows.push(ri);
            comp_rows[g].push(entries);
        }
        row_links.push(rl);
    }
    Structure { comps, place, links, cone_comp, row_links, comp_rows }
}

/// Rough floating-point work of one Newton step.
pub(crate) fn newton_cost(f: &StdForm) -> f64 {
    let s = analyze(f);
    let mut w = 0.0;
    for c in &s.comps {
        let ng = c.vars.len() as f64;
        let k = (c.links.len() + c.rows.len()) as f64;
        w += ng * ng * ng / 3.0 + 2.0 * ng * ng * k + ng * k * k;
    }
    let nk = (s.links.len() + f.rows.len()) as f64;
    w += 2.0 / 3.0 * nk * nk * nk;
    for c in &f.cones {
        let nv = c.vars.len() as f64;
        let nnz = c.maps.iter().map(|m| m.len()).sum::<usize>() as f64 / nv.max(1.0);
        let nc = c.n as f64;
        w += 8.0 * nv * nnz * nc * nc + 4.0 * nv * nv * nnz;
    }
    w
}

struct Scaling {
    r: CMat,
    rinv: CMat,
    lam: Vec<f64>,
    winv: CMat,
}

fn chol_lower(a: &CMat) -> Option<CMat> {
    let h = linalg::hermitize(a);
    h.llt(Side::Lower).ok().map(|l| l.L().to_owned())
}

fn nt_scaling(s: &CMat, z: &CMat) -> Option<Scaling> {
    let n = s.nrows();
    let ls = chol_lower(s)?;
    let lz = chol_lower(z)?;
    let m = lz.adjoint() * &ls;
    let svd = m.svd().ok()?;
    let sv = svd.S().column_vector();
    let lam: Vec<f64> = (0..n).map(|i| sv[i].re).collect();
    if lam.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return None;
    }
    let v = svd.V().to_owned();
    let mut r = &ls * &v;
    for j in 0..n {
        let sc = 1.0 / lam[j].sqrt();
        for i in 0..n {
            r[(i, j)] *= sc;
        }
    }
    // R⁻¹ = Λ^{1/2} V† L_s⁻¹
    let mut lsinv = linalg::eye(n);
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(ls.as_ref(), lsinv.as_mut(), Par::Seq);
    let mut rinv = v.adjoint() * &lsinv;
    for i in 0..n {
        let sc = lam[i].sqrt();
        for j in 0..n {
            rinv[(i, j)] *= sc;
        }
    }
    let winv = linalg::hermitize(&(rinv.adjoint() * &rinv));
    Some(Scaling { r, rinv, lam, winv })
}

fn congruence(a: &CMat, x: &CMat) -> CMat {
    // A X A†
    a * x * a.adjoint()
}

fn max_step(lam: &[f64], dt: &CMat) -> f64 {
    let n = lam.len();
    let m = CMat::from_fn(n, n, |i, j| dt[(i, j)] / (lam[i] * lam[j]).sqrt());
    let e = linalg::min_eig(&m);
    if e < 0.0 {
        -1.0 / e
    } else {
        f64::INFINITY
    }
}

fn jordan(a: &CMat, b: &CMat) -> CMat {
    let ab = a * b;
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| (ab[(i, j)] + ab[(j, i)].conj()) * 0.5)
}

struct Factor {
    chol: Vec<faer::linalg::solvers::Llt<f64>>,
    bg: Vec<RMat>,
    klu: faer::linalg::solvers::PartialPivLu<f64>,
    nk: usize,
}

pub(crate) struct Ipm<'a> {
    f: &'a StdForm,
    st: Structure,
    verbose: bool,
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<CMat>,
    z: Vec<CMat>,
}

impl<'a> Ipm<'a> {
    pub fn new(f: &'a StdForm, verbose: bool) -> Self {
        Ipm { f, st: analyze(f), verbose }
    }

    fn hess_apply(&self, sc: &[Scaling], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.f.nvar];
        for (c, s) in self.f.cones.iter().zip(sc) {
            let fv = c.apply_linear(v);
            let q = &s.winv * fv * &s.winv;
            c.adjoint_add(&q, &mut out, 1.0);
        }
        out
    }

    fn build(&self, sc: &[Scaling]) -> Option<Factor> {
        let st = &self.st;
        let nl = st.links.len();
        let m = self.f.rows.len();
        let mut hg: Vec<RMat> = st.comps.iter().map(|c| RMat::zeros(c.vars.len(), c.vars.len())).collect();
        let mut hgl: Vec<RMat> = st.comps.iter().map(|c| RMat::zeros(c.vars.len(), c.links.len())).collect();
        let link_pos: Vec<Vec<usize>> = st
            .comps
            .iter()
            .map(|c| {
                let mut v = vec![usize::MAX; nl];
                for (k, &l) in c.links.iter().enumerate() {
                    v[l] = k;
                }
                v
            })
            .collect();
        let mut hll = RMat::zeros(nl, nl);
        for (ci, (cone, s)) in self.f.cones.iter().zip(sc).enumerate() {
            let g = st.cone_comp[ci];
            let places: Vec<Place> = cone.vars.iter().map(|&v| st.place[v]).collect();
            let n = cone.n;
            let p = &s.winv;
            let pv: Vec<c64> = (0..n * n).map(|k| p[(k % n, k / n)]).collect();
            let mut y = vec![ZERO; n * n];
            for u in 0..cone.vars.len() {
                y.iter_mut().for_each(|e| *e = ZERO);
                for &(a, b, fv) in &cone.maps[u] {
                    let (a, b) = (a as usize, b as usize);
                    for j in 0..n {
                        let pbj = pv[j + b * n].conj() * fv;
                        if pbj == ZERO {
                            continue;
                        }
                        let col = &pv[a * n..a * n + n];
                        let yc = &mut y[j * n..j * n + n];
                        for i in 0..n {
                            yc[i] += col[i] * pbj;
                        }
                    }
                }
                for w in u..cone.vars.len() {
                    let mut h = 0.0;
                    for &(a, b, gv) in &cone.maps[w] {
                        h += (gv * y[b as usize + a as usize * n]).re;
                    }
                    if h == 0.0 {
                        continue;
                    }
                    match (places[u], places[w]) {
                        (Place::Local(_, i), Place::Local(_, j)) => {
                            let gi = g.unwrap();
                            hg[gi][(i, j)] += h;
                            if i != j {
                                hg[gi][(j, i)] += h;
                            }
                        }
                        (Place::Local(_, i), Place::Link(l)) | (Place::Link(l), Place::Local(_, i)) => {
                            let gi = g.unwrap();
                            hgl[gi][(i, link_pos[gi][l])] += h;
                        }
                        (Place::Link(l1), Place::Link(l2)) => {
                            hll[(l1, l2)] += h;
                            if l1 != l2 {
                                hll[(l2, l1)] += h;
                            }
                        }
                    }
                }
            }
        }
        let nk = nl + m;
        let mut k = RMat::zeros(nk, nk);
        for i in 0..nl {
            for j in 0..nl {
                k[(i, j)] = hll[(i, j)];
            }
        }
        for (r, rl) in st.row_links.iter().enumerate() {
            for &(l, a) in rl {
                k[(l, nl + r)] += a;
                k[(nl + r, l)] += a;
            }
        }
        let mut chol = Vec::with_capacity(st.comps.len());
        let mut bgs = Vec::with_capacity(st.comps.len());
        for (gi, comp) in st.comps.iter().enumerate() {
            let h = &mut hg[gi];
            let ng = comp.vars.len();
            let dmax = (0..ng).map(|i| h[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
            let mut fac = None;
            for &delta in &[0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
                if delta > 0.0 {
                    for i in 0..ng {
                        h[(i, i)] += delta * dmax;
                    }
                }
                if let Ok(l) = h.llt(Side::Lower) {
                    fac = Some(l);
                    break;
                }
            }
            let fac = fac?;
            let nlg = comp.links.len();
            let wg = nlg + comp.rows.len();
            let mut bg = RMat::zeros(ng, wg);
            for j in 0..nlg {
                for i in 0..ng {
                    bg[(i, j)] = hgl[gi][(i, j)];
                }
            }
            for (lr, entries) in st.comp_rows[gi].iter().enumerate() {
                for &(i, a) in entries {
                    bg[(i, nlg + lr)] = a;
                }
            }
            let x = fac.solve(&bg);
            let gram = bg.transpose() * &x;
            let idx: Vec<usize> =
                comp.links.iter().copied().chain(comp.rows.iter().map(|&r| nl + r)).collect();
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    k[(ia, ib)] -= gram[(a, b)];
                }
            }
            chol.push(fac);
            bgs.push(bg);
        }
        let klu = k.partial_piv_lu();
        Some(Factor { chol, bg: bgs, klu, nk })
    }

    fn newton_solve(&self, fac: &Factor, g: &[f64], rp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let st = &self.st;
        let nl = st.links.len();
        let mut rk = RMat::zeros(fac.nk, 1);
        for (l, &v) in st.links.iter().enumerate() {
            rk[(l, 0)] = g[v];
        }
        for (r, &v) in rp.iter().enumerate() {
            rk[(nl + r, 0)] = v;
        }
        let mut wgs = Vec::with_capacity(st.comps.len());
        for (gi, comp) in st.comps.iter().enumerate() {
            let gg = RMat::from_fn(comp.vars.len(), 1, |i, _| g[comp.vars[i]]);
            let w = fac.chol[gi].solve(&gg);
            let t = fac.bg[gi].transpose() * &w;
            let nlg = comp.links.len();
            for (a, &l) in comp.links.iter().enumerate() {
                rk[(l, 0)] -= t[(a, 0)];
            }
            for (a, &r) in comp.rows.iter().enumerate() {
                rk[(nl + r, 0)] -= t[(nlg + a, 0)];
            }
            wgs.push(w);
        }
        let u = fac.klu.solve(&rk);
        let mut dx = vec![0.0; self.f.nvar];
        for (l, &v) in st.links.iter().enumerate() {
            dx[v] = u[(l, 0)];
        }
        let dy: Vec<f64> = (0..rp.len()).map(|r| u[(nl + r, 0)]).collect();
        for (gi, comp) in st.comps.iter().enumerate() {
            let nlg = comp.links.len();
            let uu = RMat::from_fn(nlg + comp.rows.len(), 1, |a, _| {
                if a < nlg {
                    u[(comp.links[a], 0)]
                } else {
                    u[(nl + comp.rows[a - nlg], 0)]
                }
            });
            let bu = &fac.bg[gi] * &uu;
            let corr = fac.chol[gi].solve(&bu);
            for (i, &v) in comp.vars.iter().enumerate() {
                dx[v] = wgs[gi][(i, 0)] - corr[(i, 0)];
            }
        }
        (dx, dy)
    }

    /// Newton solve with iterative refinement against the exact operator.
    fn solve_refined(&self, sc: &[Scaling], fac: &Factor, g: &[f64], rp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dx, mut dy) = self.newton_solve(fac, g, rp);
        let gn = g.iter().chain(rp).fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
        for _ in 0..3 {
            let mut r1 = self.hess_apply(sc, &dx);
            self.f.at_mul_add(&dy, &mut r1, 1.0);
            for (a, &b) in r1.iter_mut().zip(g) {
                *a = b - *a;
            }
            let adx = self.f.a_mul(&dx);
            let r2: Vec<f64> = rp.iter().zip(&adx).map(|(a, b)| a - b).collect();
            let res = r1.iter().chain(&r2).fold(0.0f64, |a, &v| a.max(v.abs()));
            if !(res > 1e-13 * gn) {
                break;
            }
            let (cx, cy) = self.newton_solve(fac, &r1, &r2);
            for (a, b) in dx.iter_mut().zip(&cx) {
                *a += b;
            }
            for (a, b) in dy.iter_mut().zip(&cy) {
                *a += b;
            }
        }
        (dx, dy)
    }

    pub fn run(&self, tol: &Tolerances, max_iter: usize) -> RawSolution {
        let f = self.f;
        let cmax = f.c.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let cscale = if cmax > 0.0 { cmax } else { 1.0 };
        let c: Vec<f64> = f.c.iter().map(|v| v / cscale).collect();
        let bmax = f.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let f0max: Vec<f64> = f.cones.iter().map(linalg_max_abs_f0).collect();
        let nu: f64 = f.cones.iter().map(|c| c.n as f64).sum();
        let m = f.rows.len();

        let xi_s = 1.0f64.max(bmax.sqrt()).max(f0max.iter().cloned().fold(0.0, f64::max));
        let xi_z = 1.0;
        let mut it = Iterate {
            x: vec![0.0; f.nvar],
            y: vec![0.0; m],
            s: f.cones.iter().map(|c| linalg::rscale(&linalg::eye(c.n), xi_s)).collect(),
            z: f.cones.iter().map(|c| linalg::rscale(&linalg::eye(c.n), xi_z)).collect(),
        };
        let mut best: Option<(f64, RawSolution)> = None;
        let mut stall = 0;
        let mut status = Status::NumericalTrouble;
        let mut iters = 0;
        for k in 0..max_iter {
            iters = k;
            // residuals
            let ax = f.a_mul(&it.x);
            let rp: Vec<f64> = f.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let rs: Vec<CMat> = f
                .cones
                .iter()
                .zip(&it.s)
                .map(|(cn, s)| s - cn.apply(&it.x))
                .collect();
            let mut rd = c.clone();
            for (cn, z) in f.cones.iter().zip(&it.z) {
                cn.adjoint_add(z, &mut rd, -1.0);
            }
            f.at_mul_add(&it.y, &mut rd, 1.0);
            let pobj: f64 = c.iter().zip(&it.x).map(|(a, b)| a * b).sum::<f64>() * cscale;
            let dobj = (-f.b.iter().zip(&it.y).map(|(a, b)| a * b).sum::<f64>()
                - f.cones.iter().zip(&it.z).map(|(cn, z)| linalg::inner(&cn.f0, z)).sum::<f64>())
                * cscale;
            let pres_eq = rp.iter().fold(0.0f64, |a, &v| a.max(v.abs())) / (1.0 + bmax);
            let pres_cone = rs
                .iter()
                .zip(&f0max)
                .map(|(r, fm)| linalg::max_abs(r) / (1.0 + fm))
                .fold(0.0f64, f64::max);
            let pres = pres_eq.max(pres_cone);
            let dres = rd.iter().fold(0.0f64, |a, &v| a.max(v.abs())) / (1.0 + c.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
            let gap = (pobj - dobj).abs();
            let mu: f64 = it.s.iter().zip(&it.z).map(|(s, z)| linalg::inner(s, z)).sum::<f64>() / nu;
            if self.verbose {
                eprintln!(
                    "ipm {k:3} pobj {pobj:+.10e} dobj {dobj:+.10e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} mu {mu:.2e}"
                );
            }
            let raw = RawSolution {
                status: Status::NumericalTrouble,
                x: it.x.clone(),
                y: it.y.clone(),
                pobj,
                dobj,
                pres,
                dres,
                iters: k,
                backend: BackendKind::InteriorPoint,
            };
            let merit = pres.max(dres).max(gap / (1.0 + pobj.abs()));
            if best.as_ref().map_or(true, |(b, _)| merit < *b) {
                best = Some((merit, raw));
            }
            if pres <= tol.feas && dres <= tol.feas && gap <= tol.gap * pobj.abs().max(1.0) {
                status = Status::Optimal;
                break;
            }
            let xn = it.x.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            let yn = it.y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if !(xn < 1e12 && yn < 1e12 && mu.is_finite()) {
                break;
            }

            let Some(sc) = it.s.iter().zip(&it.z).map(|(s, z)| nt_scaling(s, z)).collect::<Option<Vec<_>>>()
            else {
                break;
            };
            let Some(fac) = self.build(&sc) else { break };

            let rhs_g = |d: &[CMat]| -> Vec<f64> {
                let mut g = vec![0.0; f.nvar];
                for ((cn, s), (dc, r)) in f.cones.iter().zip(&sc).zip(d.iter().zip(&rs)) {
                    let q = s.rinv.adjoint() * dc * &s.rinv + &s.winv * r * &s.winv;
                    cn.adjoint_add(&q, &mut g, 1.0);
                }
                for (a, b) in g.iter_mut().zip(&rd) {
                    *a -= b;
                }
                g
            };
            let directions = |dx: &[f64], d: &[CMat]| -> (Vec<CMat>, Vec<CMat>) {
                let mut dst = Vec::with_capacity(f.cones.len());
                let mut dzt = Vec::with_capacity(f.cones.len());
                for ((cn, s), (dc, r)) in f.cones.iter().zip(&sc).zip(d.iter().zip(&rs)) {
                    let ds = cn.apply_linear(dx) - r;
                    let t = linalg::hermitize(&congruence(&s.rinv, &ds));
                    dzt.push(dc - &t);
                    dst.push(t);
                }
                (dst, dzt)
            };
            let steps = |dst: &[CMat], dzt: &[CMat]| -> (f64, f64) {
                let mut ap = f64::INFINITY;
                let mut ad = f64::INFINITY;
                for (s, (a, b)) in sc.iter().zip(dst.iter().zip(dzt)) {
                    ap = ap.min(max_step(&s.lam, a));
                    ad = ad.min(max_step(&s.lam, b));
                }
                (ap, ad)
            };

            // predictor
            let d_aff: Vec<CMat> = sc.iter().map(|s| linalg::rdiag(&s.lam.iter().map(|l| -l).collect::<Vec<_>>())).collect();
            let g_aff = rhs_g(&d_aff);
            let (dx_a, _dy_a) = self.solve_refined(&sc, &fac, &g_aff, &rp);
            let (dst_a, dzt_a) = directions(&dx_a, &d_aff);
            let (ap_a, ad_a) = steps(&dst_a, &dzt_a);
            let ap_a = ap_a.min(1.0);
            let ad_a = ad_a.min(1.0);
            let mut mu_aff = 0.0;
            for (s, (a, b)) in sc.iter().zip(dst_a.iter().zip(&dzt_a)) {
                let lam = linalg::rdiag(&s.lam);
                let sa = &lam + linalg::rscale(a, ap_a);
                let za = &lam + linalg::rscale(b, ad_a);
                mu_aff += linalg::inner(&sa, &za);
            }
            mu_aff /= nu;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let d_cor: Vec<CMat> = sc
                .iter()
                .zip(dst_a.iter().zip(&dzt_a))
                .map(|(s, (a, b))| {
                    let n = s.lam.len();
                    let cross = jordan(a, b);
                    CMat::from_fn(n, n, |i, j| {
                        let mut r = -cross[(i, j)];
                        if i == j {
                            r += c64::new(sigma * mu - s.lam[i] * s.lam[i], 0.0);
                        }
                        r * (2.0 / (s.lam[i] + s.lam[j]))
                    })
                })
                .collect();
            let g_cor = rhs_g(&d_cor);
            let (dx, dy) = self.solve_refined(&sc, &fac, &g_cor, &rp);
            let (dst, dzt) = directions(&dx, &d_cor);
            let (ap, ad) = steps(&dst, &dzt);
            let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
            let ap = (gamma * ap).min(1.0);
            let ad = (gamma * ad).min(1.0);
            if !(ap.is_finite() && ad.is_finite()) {
                break;
            }
            for (a, b) in it.x.iter_mut().zip(&dx) {
                *a += ap * b;
            }
            for (a, b) in it.y.iter_mut().zip(&dy) {
                *a += ad * b;
            }
            for (i, s) in sc.iter().enumerate() {
                let ds = congruence(&s.r, &dst[i]);
                let dz = congruence(&s.rinv.adjoint().to_owned(), &dzt[i]);
                it.s[i] = linalg::hermitize(&(&it.s[i] + linalg::rscale(&ds, ap)));
                it.z[i] = linalg::hermitize(&(&it.z[i] + linalg::rscale(&dz, ad)));
            }
            if ap < 1e-8 && ad < 1e-8 {
                stall += 1;
                if stall >= 3 {
                    break;
                }
            } else {
                stall = 0;
            }
        }
        let (_, mut out) = best.expect("at least one iterate");
        if status == Status::Optimal {
            out.status = Status::Optimal;
        }
        out.iters = iters;
        out
    }
}

fn linalg_max_abs_f0(c: &StdCone) -> f64 {
    linalg::max_abs(&c.f0)
}

/// `Status::Optimal` run, or a classification of the failure by the two
/// auxiliary feasibility problems.
pub(crate) fn solve_classified(f: &StdForm, tol: &Tolerances, max_iter: usize, verbose: bool) -> RawSolution {
    let ipm = Ipm::new(f, verbose);
    let raw = ipm.run(tol, max_iter);
    if raw.status == Status::Optimal {
        return raw;
    }
    match primal_phase1(f, tol, max_iter, verbose) {
        Phase1::Infeasible => {
            return RawSolution { status: Status::Infeasible, ..raw };
        }
        Phase1::Feasible => {}
        Phase1::Unknown => return raw,
    }
    if f.nvar + f.rows.len() <= 3000 {
        if let Phase1::Infeasible = dual_phase1(f, tol, max_iter, verbose) {
            return RawSolution { status: Status::Unbounded, ..raw };
        }
    }
    raw
}

enum Phase1 {
    Feasible,
    Infeasible,
    Unknown,
}

fn with_margin(f: &StdForm) -> StdForm {
    let t = f.nvar;
    let mut g = f.clone();
    g.nvar += 1;
    g.c = vec![0.0; g.nvar];
    g.c[t] = -1.0;
    g.linking.push(true);
    for cn in g.cones.iter_mut() {
        cn.vars.push(t);
        cn.maps.push((0..cn.n).map(|i| (i as u32, i as u32, c64::new(-1.0, 0.0))).collect());
    }
    g.cones.push(StdCone {
        n: 1,
        f0: linalg::rdiag(&[1.0]),
        vars: vec![t],
        maps: vec![vec![(0, 0, c64::new(-1.0, 0.0))]],
    });
    g
}

fn run_phase1(g: &StdForm, tol: &Tolerances, max_iter: usize, verbose: bool) -> (Phase1, RawSolution) {
    let ipm = Ipm::new(g, verbose);
    let raw = ipm.run(tol, max_iter);
    let t_primal = -raw.pobj;
    let t_dual = -raw.dobj;
    let verdict = if raw.status == Status::Optimal {
        if t_primal >= -tol.feas {
            Phase1::Feasible
        } else {
            Phase1::Infeasible
        }
    } else if raw.pres <= tol.feas.max(1e-7) && t_primal >= -tol.feas {
        Phase1::Feasible
    } else if raw.dres <= tol.feas.max(1e-7) && t_dual < -10.0 * tol.feas.max(1e-7) {
        Phase1::Infeasible
    } else {
        Phase1::Unknown
    };
    (verdict, raw)
}

fn primal_phase1(f: &StdForm, tol: &Tolerances, max_iter: usize, verbose: bool) -> Phase1 {
    run_phase1(&with_margin(f), tol, max_iter, verbose).0
}

fn dual_phase1(f: &StdForm, tol: &Tolerances, max_iter: usize, verbose: bool) -> Phase1 {
    // variables: per cone the coordinates of Z_c, then y, then t
    let mut off = Vec::with_capacity(f.cones.len());
    let mut nz = 0;
    for cn in &f.cones {
        off.push(nz);
        nz += cn.n * cn.n;
    }
    let m = f.rows.len();
    let nvar = nz + m + 1;
    let t = nz + m;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); f.nvar];
    for (ci, cn) in f.cones.iter().enumerate() {
        for (k, &v) in cn.vars.iter().enumerate() {
            let coords = entry_coords(cn.n, cn.maps[k].iter().map(|&(a, b, x)| (a as usize, b as usize, x)));
            rows[v].extend(coords.into_iter().map(|(j, a)| (off[ci] + j, a)));
        }
    }
    for (r, row) in f.rows.iter().enumerate() {
        for &(v, a) in row {
            rows[v].push((nz + r, -a));
        }
    }
    let mut cones = Vec::with_capacity(f.cones.len() + 1);
    for (ci, cn) in f.cones.iter().enumerate() {
        let n = cn.n;
        let mut vars: Vec<usize> = (0..n * n).map(|k| off[ci] + k).collect();
        let mut maps: Vec<Vec<(u32, u32, c64)>> = (0..n * n)
            .map(|k| {
                super::lower::basis_entries(n, k)
                    .into_iter()
                    .map(|(a, b, x)| (a as u32, b as u32, x))
                    .collect()
            })
            .collect();
        vars.push(t);
        maps.push((0..n).map(|i| (i as u32, i as u32, c64::new(-1.0, 0.0))).collect());
        cones.push(StdCone { n, f0: linalg::zeros(n, n), vars, maps });
    }
    cones.push(StdCone { n: 1, f0: linalg::rdiag(&[1.0]), vars: vec![t], maps: vec![vec![(0, 0, c64::new(-1.0, 0.0))]] });
    let mut c = vec![0.0; nvar];
    c[t] = -1.0;
    let mut linking = vec![false; nvar];
    for l in linking.iter_mut().skip(nz) {
        *l = true;
    }
    let g = StdForm { nvar, c, rows, b: f.c.clone(), cones, linking };
    match super::lower::presolve(&g) {
        None => Phase1::Infeasible,
        Some(pre) => run_phase1(&pre.form, tol, max_iter, verbose).0,
    }
}

/// Phase-one feasibility: maximizes the margin t with `cones ⪰ t·1`,
/// `t ≤ 1`. Optimal (objective reported as 0) iff t ≥ −tol.feas.
pub(crate) fn feasibility(f: &StdForm, tol: &Tolerances, max_iter: usize, verbose: bool) -> RawSolution {
    let g = with_margin(f);
    let (verdict, raw) = run_phase1(&g, tol, max_iter, verbose);
    let mut x = raw.x.clone();
    x.truncate(f.nvar);
    let status = match verdict {
        Phase1::Feasible => Status::Optimal,
        Phase1::Infeasible => Status::Infeasible,
        Phase1::Unknown => Status::NumericalTrouble,
    };
    RawSolution { status, x, y: raw.y, pobj: 0.0, dobj: 0.0, pres: raw.pres, dres: raw.dres, iters: raw.iters, backend: BackendKind::InteriorPoint }
}
