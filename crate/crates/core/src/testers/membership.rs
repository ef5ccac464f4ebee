//! Certificate-based class membership of a fixed tester.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{validate, Tester, TesterKind, I1, I2, O1, O2, PSD_TOL};
use crate::linalg::{self, c64, CMat};
use crate::qops::{self, partial_trace, partial_transpose, random, LabeledOperator};
use crate::sdpiface::{self, BlockId, ConicProblem, EntryMap, ImageCone, Sense, SolveOptions, SparseMat, Status, Term};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct MembershipOptions {
    /// Symmetric-extension level for the separability test across the
    /// `I1 O1 | I2 O2` cut; 1 means the partial-transpose test only.
    pub level: usize,
    /// Restarts of the alternating search for an explicit decomposition.
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Residual tolerance on marginals and on decompositions.
    pub tol: f64,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions { level: 1, restarts: 6, max_iters: 60, seed: 0, tol: 1e-7 }
    }
}

#[derive(Clone, Debug)]
pub enum Certificate {
    /// Comb constraints hold up to `residual`.
    Marginals { residual: f64 },
    MarginalViolation { residual: f64 },
    NotPsd { min_eig: f64 },
    /// `T^i = Σ_j R^j ⊗ S^{i|j}` up to `residual`.
    Decomposition { registers: usize, residual: f64, first: Vec<CMat>, second: Vec<Vec<CMat>> },
    /// An element is not PPT across the `I1 O1 | I2 O2` cut.
    CutPptViolation { element: usize, min_eig: f64 },
    /// An element has no bosonic symmetric extension at this level.
    NoSymmetricExtension { element: usize, level: usize },
}

#[derive(Clone, Debug)]
pub enum Membership {
    Member(Certificate),
    NonMember(Certificate),
    /// No certificate fired at the configured level.
    Inconclusive { level: usize, registers: usize, best_residual: f64 },
}

impl Membership {
    pub fn is_member(&self) -> Option<bool> {
        match self {
            Membership::Member(_) => Some(true),
            Membership::NonMember(_) => Some(false),
            Membership::Inconclusive { .. } => None,
        }
    }
}

pub fn membership(t: &Tester, cls: TesterKind, registers: Option<usize>) -> Result<Membership> {
    membership_with(t, cls, registers, &MembershipOptions::default())
}

/// Membership of `t` in class `cls`. Classically adaptive membership needs
/// the register size `registers`.
pub fn membership_with(t: &Tester, cls: TesterKind, registers: Option<usize>, opts: &MembershipOptions) -> Result<Membership> {
    let min_eig = t.elements.iter().map(|x| x.min_eig()).fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL {
        return Ok(Membership::NonMember(Certificate::NotPsd { min_eig }));
    }
    let comb = if cls == TesterKind::ClassicallyAdaptive2 { TesterKind::Adaptive2 } else { cls };
    let r = validate(&t.with_kind(comb)?);
    let residual = r.max_residual();
    if residual > opts.tol {
        return Ok(Membership::NonMember(Certificate::MarginalViolation { residual }));
    }
    if cls != TesterKind::ClassicallyAdaptive2 {
        return Ok(Membership::Member(Certificate::Marginals { residual }));
    }
    let l = registers.ok_or_else(|| Error::BadParameter("classically adaptive membership needs a register size".into()))?;
    if l == 0 {
        return Err(Error::BadParameter("register size must be ≥ 1".into()));
    }
    for (i, x) in t.elements.iter().enumerate() {
        let pt = partial_transpose(x, &[I2, O2])?;
        let m = pt.min_eig();
        if m < -PSD_TOL.max(opts.tol * x.trace().re.abs()) {
            return Ok(Membership::NonMember(Certificate::CutPptViolation { element: i, min_eig: m }));
        }
    }
    let found = decompose(t, l, opts)?;
    if found.residual <= opts.tol {
        return Ok(Membership::Member(Certificate::Decomposition {
            registers: l,
            residual: found.residual,
            first: found.first,
            second: found.second,
        }));
    }
    if opts.level >= 2 {
        for (i, x) in t.elements.iter().enumerate() {
            if !has_symmetric_extension(x, opts.level)? {
                return Ok(Membership::NonMember(Certificate::NoSymmetricExtension { element: i, level: opts.level }));
            }
        }
    }
    Ok(Membership::Inconclusive { level: opts.level, registers: l, best_residual: found.residual })
}

struct Decomposed {
    residual: f64,
    first: Vec<CMat>,
    second: Vec<Vec<CMat>>,
}

/// `X ↦ X ⊗ F` for `X` of side `n`.
fn right_tensor(n: usize, f: &CMat) -> EntryMap {
    let m = f.nrows();
    let mut transfers = Vec::new();
    for sc in 0..n {
        for sr in 0..n {
            for v in 0..m {
                for u in 0..m {
                    let a = f[(u, v)];
                    if a.norm() > 0.0 {
                        transfers.push((sr, sc, sr * m + u, sc * m + v, a));
                    }
                }
            }
        }
    }
    EntryMap { n_in: n, n_out: n * m, transfers }
}

/// `X ↦ F ⊗ X` for `X` of side `n`.
fn left_tensor(f: &CMat, n: usize) -> EntryMap {
    let m = f.nrows();
    let mut transfers = Vec::new();
    for sc in 0..n {
        for sr in 0..n {
            for v in 0..m {
                for u in 0..m {
                    let a = f[(u, v)];
                    if a.norm() > 0.0 {
                        transfers.push((sr, sc, u * n + sr, v * n + sc, a));
                    }
                }
            }
        }
    }
    EntryMap { n_in: n, n_out: n * m, transfers }
}

/// Single-copy tester constraints `Σ_i X^i = σ ⊗ 1_d`, `Tr σ = 1`, on
/// blocks of side `n = d_in · d`.
fn tester_constraints(p: &mut ConicProblem, ids: &[BlockId], d_in: usize, d: usize) -> Result<()> {
    let n = d_in * d;
    p.add_equality(ids.iter().map(|&id| Term::Block(id, SparseMat::identity(n))).collect(), d as f64)?;
    let om = super::sdp::omega_map(&[d_in, d], &[false, true]);
    let parts: Vec<(BlockId, &EntryMap)> = ids.iter().map(|&id| (id, &om)).collect();
    p.add_matrix_equality(&parts, &[], &linalg::zeros(n, n))
}

/// One alternating half-step: minimise the largest deviation
/// `‖Σ_j L_j(X) − T^i‖` over the free factor family.
fn half_step(
    t: &[CMat],
    fixed: &[Vec<CMat>],
    free_first: bool,
    d_in: usize,
    d: usize,
    l: usize,
) -> Result<Option<(f64, Vec<Vec<CMat>>)>> {
    let n_free = d_in * d;
    let mut p = ConicProblem::new(Sense::Minimize);
    let s = p.add_scalar("t");
    let big = t[0].nrows();
    // free[j][0] for R^j, free[j][i] for S^{i|j}
    let per = if free_first { 1 } else { t.len() };
    let mut ids: Vec<Vec<BlockId>> = Vec::with_capacity(l);
    for j in 0..l {
        ids.push((0..per).map(|i| p.add_block(format!("x{j}_{i}"), n_free)).collect::<Result<_>>()?);
    }
    if free_first {
        let all: Vec<BlockId> = ids.iter().map(|v| v[0]).collect();
        tester_constraints(&mut p, &all, d_in, d)?;
    } else {
        for v in &ids {
            tester_constraints(&mut p, v, d_in, d)?;
        }
    }
    for (i, ti) in t.iter().enumerate() {
        for sign in [1.0, -1.0] {
            let mut cone = ImageCone::new(format!("dev{i}{sign}"), big)
                .with_scalar(s, SparseMat::identity(big))
                .with_constant(SparseMat::from_dense(&linalg::rscale(ti, sign), 0.0));
            for j in 0..l {
                let (id, map) = if free_first {
                    (ids[j][0], right_tensor(n_free, &fixed[j][i]))
                } else {
                    (ids[j][i], left_tensor(&fixed[j][0], n_free))
                };
                cone = cone.with_part(id, map.scaled(-sign));
            }
            p.add_psd_image(cone)?;
        }
    }
    p.set_objective(vec![Term::Scalar(s, 1.0)], 0.0)?;
    let sol = sdpiface::solve_with(&p, &SolveOptions::default())?;
    if sol.status != Status::Optimal {
        return Ok(None);
    }
    let vals = ids.iter().map(|v| v.iter().map(|&b| linalg::hermitize(sol.block(b))).collect()).collect();
    Ok(Some((sol.scalar(s).max(0.0), vals)))
}

fn deviation(t: &[CMat], first: &[CMat], second: &[Vec<CMat>]) -> f64 {
    t.iter()
        .enumerate()
        .map(|(i, ti)| {
            let mut acc = ti.clone();
            for (r, s) in first.iter().zip(second) {
                acc -= linalg::kron(r, &s[i]);
            }
            linalg::max_abs(&acc)
        })
        .fold(0.0, f64::max)
}

/// Second-round guess from conditioning on eigenprojectors of a random
/// contraction of `W` over the second copy.
fn structured_start(t: &Tester, l: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<CMat>>> {
    let w = t.sum();
    let (a, b) = (t.dim_of(I1)?, t.dim_of(O1)?);
    let m = t.dim_of(I2)? * t.dim_of(O2)?;
    let z = random::hermitian(rng, m);
    let zw = LabeledOperator::new(w.systems().to_vec(), &w.matrix().clone() * linalg::kron(&linalg::eye(a * b), &z))?;
    let g = linalg::hermitize(partial_trace(&zw, &[I2, O2])?.matrix());
    let (_, vecs) = linalg::eigh(&g);
    let n = a * b;
    let mut groups: Vec<CMat> = vec![linalg::zeros(n, n); l];
    for k in 0..n {
        let v: Vec<c64> = (0..n).map(|r| vecs[(r, n - 1 - k)]).collect();
        groups[k % l] += linalg::outer(&v, &v);
    }
    let mut out = Vec::with_capacity(l);
    for pj in &groups {
        let cond: Vec<CMat> = t
            .elements
            .iter()
            .map(|x| {
                let y = LabeledOperator::new(x.systems().to_vec(), linalg::kron(pj, &linalg::eye(m)) * x.matrix())?;
                Ok(linalg::hermitize(partial_trace(&y, &[I1, O1])?.matrix()))
            })
            .collect::<Result<_>>()?;
        out.push(cond);
    }
    Ok(out)
}

fn random_second(t: &Tester, l: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<CMat>>> {
    let (di, d) = (t.dim_of(I2)?, t.dim_of(O2)?);
    let mut out = Vec::with_capacity(l);
    for _ in 0..l {
        let rho = random::density(rng, di);
        let raw: Vec<CMat> = (0..t.len()).map(|_| random::density(rng, d)).collect();
        let mut s = linalg::zeros(d, d);
        for x in &raw {
            s += x;
        }
        let inv = linalg::psd_pinv_sqrt(&s, 1e-14);
        out.push(raw.iter().map(|x| linalg::kron(&linalg::transpose(&rho), &(&(&inv * x) * &inv))).collect());
    }
    Ok(out)
}

fn decompose(t: &Tester, l: usize, opts: &MembershipOptions) -> Result<Decomposed> {
    let elems: Vec<CMat> = t.elements.iter().map(|x| x.matrix().clone()).collect();
    let (a, b) = (t.dim_of(I1)?, t.dim_of(O1)?);
    let (c, d) = (t.dim_of(I2)?, t.dim_of(O2)?);
    let mut best = Decomposed { residual: f64::INFINITY, first: Vec::new(), second: Vec::new() };
    for r in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let mut second = if r == 0 { structured_start(t, l, &mut rng)? } else { random_second(t, l, &mut rng)? };
        let mut last = f64::INFINITY;
        for _ in 0..opts.max_iters {
            let Some((_, firsts)) = half_step(&elems, &second, true, a, b, l)? else { break };
            let first: Vec<CMat> = firsts.into_iter().map(|mut v| v.remove(0)).collect();
            let wrapped: Vec<Vec<CMat>> = first.iter().map(|x| vec![x.clone()]).collect();
            let Some((dev, seconds)) = half_step(&elems, &wrapped, false, c, d, l)? else { break };
            second = seconds;
            let res = deviation(&elems, &first, &second);
            if res < best.residual {
                best = Decomposed { residual: res, first: first.clone(), second: second.clone() };
            }
            if res <= opts.tol || last - dev < 1e-9 * last.max(1e-3) {
                break;
            }
            last = dev;
        }
        if best.residual <= opts.tol {
            break;
        }
    }
    Ok(best)
}

/// Whether `x / Tr x` has a bosonic symmetric extension of `level` copies
/// of `I1 O1` that is PPT on every cut.
fn has_symmetric_extension(x: &LabeledOperator, level: usize) -> Result<bool> {
    let da = x.dim_of(I1)? * x.dim_of(O1)?;
    let db = x.dim_of(I2)? * x.dim_of(O2)?;
    let tr = x.trace().re;
    if tr <= 0.0 {
        return Ok(true);
    }
    let target = linalg::rscale(x.matrix(), 1.0 / tr);
    let iso = qops::symmetric_isometry(da, level)?;
    let s = iso.dim();
    let big = iso.full_dim() * db;
    if big > 4096 {
        return Err(Error::SizeOverflow(format!("symmetric extension of side {big}")));
    }
    let v = linalg::kron(&iso.matrix(), &linalg::eye(db));
    let lift = EntryMap::conjugation(&v);
    let mut dims = vec![da; level];
    dims.push(db);
    let mut p = ConicProblem::new(Sense::Maximize);
    let y = p.add_block("ext", s * db)?;
    let mut mask = vec![false; level + 1];
    for m in mask.iter_mut().take(level).skip(1) {
        *m = true;
    }
    let marg = lift.then(&EntryMap::partial_trace(&dims, &mask))?;
    p.add_matrix_equality(&[(y, &marg)], &[], &target)?;
    for cut in 1..=level {
        let mut pt = vec![false; level + 1];
        for m in pt.iter_mut().take(cut) {
            *m = true;
        }
        p.add_psd_image(ImageCone::new(format!("ppt{cut}"), big).with_part(y, lift.then(&EntryMap::partial_transpose(&dims, &pt))?))?;
    }
    Ok(sdpiface::check_feasibility(&p)?.status == Status::Optimal)
}
