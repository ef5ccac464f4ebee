//! Memory-constrained discrimination scenarios compiled to constrained
//! separable problems, plus closed-form oracles.

mod oracles;
mod points;
mod relaxation;

pub use oracles::{oracle_adaptive_no_cc_cap, oracle_clock_shift, oracle_group_uniform, theorem6_blocks, theorem6_strategy};
pub use points::{memoryless_point, AdaptiveStrategy, ClassicalStrategy};
pub use relaxation::{classically_adaptive_relaxation, classically_adaptive_relaxation_with};

use serde::{Deserialize, Serialize};

use crate::channels::{self, ChannelEnsemble, Layout};
use crate::csep::{AffineMap, ConstrainedSepProblem, Party};
use crate::linalg::{self, c64, CMat, ONE};
use crate::qops::{digits, sys, undigits, LabeledOperator};
use crate::testers::{ensemble_chois, TesterKind};
use crate::{Error, Result};

/// Largest party dimension a compile will produce.
pub const MAX_PARTY_DIM: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    MemorylessSingleCopy,
    MemoryDeSingleCopy,
    ParallelMemoryDe,
    AdaptiveNoClassical,
    AdaptiveClassicalMemory,
    ClassicallyAdaptive,
}

impl ScenarioKind {
    pub fn is_two_copy(self) -> bool {
        !matches!(self, ScenarioKind::MemorylessSingleCopy | ScenarioKind::MemoryDeSingleCopy)
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Single-copy ensemble; two-copy kinds pair it with itself.
    pub ensemble: ChannelEnsemble,
    /// Quantum memory `d_E`, or `(d_E1, d_E2)` for adaptive kinds.
    pub memory: (usize, usize),
    /// Classical register size.
    pub registers: usize,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, ensemble: ChannelEnsemble, memory: (usize, usize), registers: Option<usize>) -> Result<Self> {
        if memory.0 == 0 || memory.1 == 0 {
            return Err(Error::BadParameter("memory dimensions must be ≥ 1".into()));
        }
        let registers = match kind {
            ScenarioKind::AdaptiveClassicalMemory | ScenarioKind::ClassicallyAdaptive => registers.unwrap_or(ensemble.len()),
            _ => registers.unwrap_or(1),
        };
        if registers == 0 {
            return Err(Error::BadParameter("register size must be ≥ 1".into()));
        }
        if kind == ScenarioKind::AdaptiveNoClassical && registers != 1 {
            return Err(Error::BadParameter("adaptive scenario without classical memory has register size 1".into()));
        }
        if kind == ScenarioKind::MemorylessSingleCopy && memory != (1, 1) {
            return Err(Error::BadParameter("memoryless scenario with nontrivial memory".into()));
        }
        if matches!(ensemble.layout, Layout::TwoCopy { .. }) {
            return Err(Error::BadParameter("scenario ensembles are single-copy; two-copy kinds pair them".into()));
        }
        Ok(Scenario { kind, ensemble, memory, registers })
    }

    /// The two-copy ensemble `C_i ⊗ C_i` for two-copy kinds.
    pub fn two_copy(&self) -> Result<ChannelEnsemble> {
        channels::two_copy(&self.ensemble)
    }

    pub fn compile(&self) -> Result<ConstrainedSepProblem> {
        match self.kind {
            ScenarioKind::MemorylessSingleCopy => compile_memoryless_single_copy(&self.ensemble),
            ScenarioKind::MemoryDeSingleCopy => compile_memory_de(&self.ensemble, self.memory.0),
            ScenarioKind::ParallelMemoryDe => compile_memory_de(&self.two_copy()?, self.memory.0),
            ScenarioKind::AdaptiveNoClassical | ScenarioKind::AdaptiveClassicalMemory => {
                compile_adaptive(&self.two_copy()?, self.memory.0, self.memory.1, self.registers)
            }
            ScenarioKind::ClassicallyAdaptive => compile_classically_adaptive(&self.two_copy()?, self.registers),
        }
    }
}

fn checked_dim(name: &str, factors: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &f in factors {
        n = n.checked_mul(f).ok_or_else(|| Error::SizeOverflow(format!("party `{name}`")))?;
    }
    if n > MAX_PARTY_DIM {
        return Err(Error::SizeOverflow(format!("party `{name}` of dimension {n} exceeds {MAX_PARTY_DIM}")));
    }
    Ok(n)
}

/// Whether two digit strings agree on the positions in `key`.
fn same_key(p: &[usize], q: &[usize], key: &[usize]) -> bool {
    key.iter().all(|&k| p[k] == q[k])
}

/// Sum of the diagonal blocks labelled by the digits `key`, indexed on the
/// output by the digits `keep`, set equal to `target`.
fn block_sum_map(dims: &[usize], key: &[usize], keep: &[usize], target: &CMat) -> Result<AffineMap> {
    let n: usize = dims.iter().product();
    let kept: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let out: usize = kept.iter().product();
    AffineMap::from_elementwise(
        n,
        out,
        |p, q| {
            let dp = digits(p, dims);
            let dq = digits(q, dims);
            if !same_key(&dp, &dq, key) {
                return Vec::new();
            }
            let r: Vec<usize> = keep.iter().map(|&k| dp[k]).collect();
            let c: Vec<usize> = keep.iter().map(|&k| dq[k]).collect();
            vec![(undigits(&r, &kept), undigits(&c, &kept), ONE)]
        },
        target,
    )
}

/// Blocks grouping flat indices by the digits in `key`.
fn key_blocks(dims: &[usize], key: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = dims.iter().product();
    let kd: Vec<usize> = key.iter().map(|&k| dims[k]).collect();
    let nb: usize = kd.iter().product();
    let mut blocks = vec![Vec::new(); nb];
    for i in 0..n {
        let d = digits(i, dims);
        let b: Vec<usize> = key.iter().map(|&k| d[k]).collect();
        blocks[undigits(&b, &kd)].push(i);
    }
    blocks
}

/// Cost operator from a function of (row digits, column digits) per party.
fn build_cost(
    parties: &[(&str, &[usize])],
    f: impl Fn(&[Vec<usize>], &[Vec<usize>]) -> c64,
) -> Result<LabeledOperator> {
    let sides: Vec<usize> = parties.iter().map(|(_, d)| d.iter().product()).collect();
    let n: usize = sides.iter().product();
    let mut m = linalg::zeros(n, n);
    let split = |idx: usize| -> Vec<Vec<usize>> {
        let flat = digits(idx, &sides);
        flat.iter().zip(parties).map(|(&x, (_, d))| digits(x, d)).collect()
    };
    let all: Vec<Vec<Vec<usize>>> = (0..n).map(split).collect();
    for c in 0..n {
        for r in 0..n {
            let v = f(&all[r], &all[c]);
            if v != linalg::ZERO {
                m[(r, c)] = v;
            }
        }
    }
    let systems = parties.iter().zip(&sides).map(|((name, _), &s)| sys(name, s)).collect();
    LabeledOperator::new(systems, m)
}

pub const MEAS: &str = "M";
pub const STATE: &str = "rho";
pub const INSTR: &str = "K";
pub const SECOND: &str = "S";
pub const FIRST: &str = "R";

/// Memoryless single-copy discrimination: party `M` holds `⊕_i M^i / d_O`
/// on flag ⊗ output, party `rho` the input state.
pub fn compile_memoryless_single_copy(e: &ChannelEnsemble) -> Result<ConstrainedSepProblem> {
    let (n, di, d_o) = (e.len(), e.d_in(), e.d_out());
    let dm = checked_dim(MEAS, &[n, d_o])?;
    let dims_m = [n, d_o];
    let target = linalg::rscale(&linalg::eye(d_o), 1.0 / d_o as f64);
    let meas = Party::new(MEAS, dm, AffineMap::partial_trace(&dims_m, &[true, false], &target)?)?.with_uniform_blocks(d_o)?;
    let state = Party::state(STATE, di)?;
    // F[(i o, a), (i o', a')] = d_O q_i C^i[(a' o), (a o')], i.e. C^{T_I}
    let q = e.weights();
    let chois = e.chois();
    let cost = build_cost(&[(MEAS, &dims_m), (STATE, &[di])], |r, c| {
        let (i, o, a) = (r[0][0], r[0][1], r[1][0]);
        let (ic, oc, ac) = (c[0][0], c[0][1], c[1][0]);
        if i != ic {
            return linalg::ZERO;
        }
        chois[i][(ac * d_o + o, a * d_o + oc)] * (d_o as f64 * q[i])
    })?;
    ConstrainedSepProblem::new(cost, vec![meas, state])
}

/// Single-copy discrimination with a `d_E`-dimensional quantum memory.
pub fn compile_memory_de(e: &ChannelEnsemble, d_e: usize) -> Result<ConstrainedSepProblem> {
    if d_e == 0 {
        return Err(Error::BadParameter("memory dimension must be ≥ 1".into()));
    }
    compile_memoryless_single_copy(&channels::tensor_with_identity(e, d_e)?)
}

fn lift_two_copy(e2: &ChannelEnsemble, d_e1: usize, d_e2: usize) -> Result<ChannelEnsemble> {
    let Layout::TwoCopy { first, second } = &e2.layout else {
        return Err(Error::DimMismatch("adaptive scenarios need a two-copy ensemble".into()));
    };
    if d_e1 == 0 || d_e2 == 0 {
        return Err(Error::BadParameter("memory dimensions must be ≥ 1".into()));
    }
    if d_e1 * d_e2 == 1 {
        return Ok(e2.clone());
    }
    channels::pair(&channels::tensor_with_identity(first, d_e1)?, &channels::tensor_with_identity(second, d_e2)?)
}

/// Sequential two-copy discrimination with quantum memories `d_E1`, `d_E2`
/// and an `L`-valued classical register. Parties: `M` = `⊕_{j,i} M^{i|j}`
/// on L·N·O2 (scaled by `1/(L d_O2)`), `K` = `⊕_j K^j` on L·O1·I2 (scaled
/// by `1/d_O1`), `rho` on I1.
pub fn compile_adaptive(e2: &ChannelEnsemble, d_e1: usize, d_e2: usize, registers: usize) -> Result<ConstrainedSepProblem> {
    if registers == 0 {
        return Err(Error::BadParameter("register size must be ≥ 1".into()));
    }
    let e = lift_two_copy(e2, d_e1, d_e2)?;
    let [(a, b), (c, d)] = e.copy_dims().expect("two-copy layout");
    let (n, l) = (e.len(), registers);
    let dims_m = [l, n, d];
    let dims_k = [l, b, c];
    let dm = checked_dim(MEAS, &dims_m)?;
    let dk = checked_dim(INSTR, &dims_k)?;
    let meas = Party::new(
        MEAS,
        dm,
        block_sum_map(&dims_m, &[0, 1], &[0, 2], &linalg::rscale(&linalg::eye(l * d), 1.0 / (l * d) as f64))?,
    )?
    .with_blocks(key_blocks(&dims_m, &[0, 1]))?;
    let instr = Party::new(
        INSTR,
        dk,
        AffineMap::partial_trace(&dims_k, &[true, false, true], &linalg::rscale(&linalg::eye(b), 1.0 / b as f64))?,
    )?
    .with_blocks(key_blocks(&dims_k, &[0]))?;
    let state = Party::state(STATE, a)?;
    // tester Σ_j ρᵀ ⊗ (K^j)ᵀ ⊗ M^{i|j}: cost carries C^{T_{I1 O1 I2}}
    let chois = ensemble_chois(&e, TesterKind::Adaptive2)?;
    let q = e.weights();
    let scale = (l * d * b) as f64;
    let g = |i: usize, r: [usize; 4], cc: [usize; 4]| -> c64 {
        let dims = [a, b, c, d];
        chois[i].matrix()[(undigits(&r, &dims), undigits(&cc, &dims))]
    };
    let cost = build_cost(&[(MEAS, &dims_m), (INSTR, &dims_k), (STATE, &[a])], |r, cc| {
        let (j, i, o2, jk, o1, i2, i1) = (r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0]);
        let (jc, ic, o2c, jkc, o1c, i2c, i1c) = (cc[0][0], cc[0][1], cc[0][2], cc[1][0], cc[1][1], cc[1][2], cc[2][0]);
        if j != jc || i != ic || jk != jkc || j != jk {
            return linalg::ZERO;
        }
        g(i, [i1c, o1c, i2c, o2], [i1, o1, i2, o2c]) * (scale * q[i])
    })?;
    ConstrainedSepProblem::new(cost, vec![meas, instr, state])
}

/// Classically adaptive two-copy discrimination with an `L`-valued register.
/// Parties: `S` = `⊕_{j,i} S^{i|j}` on L·N·I2·O2 (scaled by `1/(L d_O2)`),
/// `R` = `⊕_j R^j` on L·I1·O1 (scaled by `1/d_O1`).
pub fn compile_classically_adaptive(e2: &ChannelEnsemble, registers: usize) -> Result<ConstrainedSepProblem> {
    if registers == 0 {
        return Err(Error::BadParameter("register size must be ≥ 1".into()));
    }
    let [(a, b), (c, d)] =
        e2.copy_dims().ok_or_else(|| Error::DimMismatch("classically adaptive scenarios need a two-copy ensemble".into()))?;
    let (n, l) = (e2.len(), registers);
    let dims_s = [l, n, c, d];
    let dims_r = [l, a, b];
    let ds = checked_dim(SECOND, &dims_s)?;
    let dr = checked_dim(FIRST, &dims_r)?;
    // per register value: Σ_i S^{i|j} = σ_j ⊗ 1, Tr σ_j fixed
    let omega_s = omega_rows(&dims_s, &[0, 1], &[0, 2, 3], 3, l * c * d)?;
    let tr_s = block_sum_map(&dims_s, &[0, 1, 2, 3], &[0], &linalg::rscale(&linalg::eye(l), 1.0 / l as f64))?;
    let sec = Party::new(SECOND, ds, omega_s.stacked(&tr_s)?)?.with_blocks(key_blocks(&dims_s, &[0, 1]))?;
    let omega_r = omega_rows(&dims_r, &[0], &[1, 2], 2, a * b)?;
    let first = Party::new(FIRST, dr, omega_r)?.with_blocks(key_blocks(&dims_r, &[0]))?;
    let chois = ensemble_chois(e2, TesterKind::ClassicallyAdaptive2)?;
    let q = e2.weights();
    let scale = (l * d * b) as f64;
    let cost = build_cost(&[(SECOND, &dims_s), (FIRST, &dims_r)], |r, cc| {
        let (j, i, i2, o2, jr, i1, o1) = (r[0][0], r[0][1], r[0][2], r[0][3], r[1][0], r[1][1], r[1][2]);
        let (jc, ic, i2c, o2c, jrc, i1c, o1c) = (cc[0][0], cc[0][1], cc[0][2], cc[0][3], cc[1][0], cc[1][1], cc[1][2]);
        if j != jc || i != ic || jr != jrc || j != jr {
            return linalg::ZERO;
        }
        let dims = [a, b, c, d];
        chois[i].matrix()[(undigits(&[i1, o1, i2, o2], &dims), undigits(&[i1c, o1c, i2c, o2c], &dims))] * (scale * q[i])
    })?;
    ConstrainedSepProblem::new(cost, vec![sec, first])
}

/// `Ω` of the block sum over the flag digits: inside each block labelled
/// by `key`, the replaced digit `omega` is traced out and spread back
/// uniformly; the output is indexed by the `keep` digits.
fn omega_rows(dims: &[usize], key: &[usize], keep: &[usize], omega: usize, out: usize) -> Result<AffineMap> {
    let n: usize = dims.iter().product();
    let kept: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    debug_assert_eq!(kept.iter().product::<usize>(), out);
    let pos = keep.iter().position(|&k| k == omega).expect("replaced digit must be kept");
    let d_om = dims[omega];
    AffineMap::from_elementwise(
        n,
        out,
        |p, q| {
            let dp = digits(p, dims);
            let dq = digits(q, dims);
            if !same_key(&dp, &dq, key) {
                return Vec::new();
            }
            let r: Vec<usize> = keep.iter().map(|&k| dp[k]).collect();
            let c: Vec<usize> = keep.iter().map(|&k| dq[k]).collect();
            let mut v = vec![(undigits(&r, &kept), undigits(&c, &kept), ONE)];
            if r[pos] == c[pos] {
                for u in 0..d_om {
                    let (mut r2, mut c2) = (r.clone(), c.clone());
                    r2[pos] = u;
                    c2[pos] = u;
                    v.push((undigits(&r2, &kept), undigits(&c2, &kept), linalg::cplx(-1.0 / d_om as f64, 0.0)));
                }
            }
            v
        },
        &linalg::zeros(out, out),
    )
}

#[cfg(test)]
mod tests;
