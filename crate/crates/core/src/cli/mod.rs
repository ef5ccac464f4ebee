//! Batch front end: configs in, bound reports out.

mod config;
mod report;

pub use config::{decode, encode, round9, ChannelSpec, MatrixRepr, Method, PolytopeKind, RunConfig, ScenarioConfig, TolConfig};
pub use report::{
    digest, verify, BoundReport, CertificateReport, Check, Failure, FailureKind, LowerReport, TesterRepr, UpperReport,
    Verification, Versions, SCHEMA, VERIFY_TOL,
};

use std::path::PathBuf;
use std::time::Instant;

use report::rounded;

use crate::channels::{Layout, Preset};
use crate::csep::{self, HierarchyOptions, Polytope, SeesawOptions};
use crate::scenarios::{self, Scenario, ScenarioKind};
use crate::sdpiface::{SolveOptions, Status, Tolerances};
use crate::testers::{self, OptimalTester};
use crate::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for restarts and vertex subproblems.
    pub workers: Option<usize>,
    /// Directory receiving SDPA dumps of hierarchy problems.
    pub dump_dir: Option<PathBuf>,
    /// Overrides the config seed.
    pub seed: Option<u64>,
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions { tol: Tolerances { feas: cfg.tolerances.feas, gap: cfg.tolerances.gap }, ..SolveOptions::default() }
}

/// Runs `cfg` on a worker pool of the requested size. Subtask failures are
/// recorded in the report; only configuration and compile errors abort.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<BoundReport> {
    let mut cfg = cfg.clone();
    if opts.seed.is_some() {
        cfg.seed = opts.seed;
    }
    cfg.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::BadParameter(format!("worker pool: {e}")))?;
    pool.install(|| run_inner(&cfg, opts))
}

fn run_inner(cfg: &RunConfig, opts: &RunOptions) -> Result<BoundReport> {
    let start = Instant::now();
    let scenario = cfg.scenario.build()?;
    let mut report = BoundReport {
        schema: SCHEMA.into(),
        config: cfg.clone(),
        registers: scenario.registers,
        lower: None,
        upper: None,
        seesaw_certificate: None,
        wall_time_s: 0.0,
        versions: Versions { chandisc: env!("CARGO_PKG_VERSION").into(), schema: SCHEMA.into() },
    };
    match cfg.method {
        Method::Oracle => {
            let (lower, upper) = oracle(&scenario, cfg.scenario.preset()?)?;
            report.lower = lower;
            report.upper = Some(upper);
        }
        Method::ExactSdp => {
            let (lower, upper) = exact(&scenario, cfg);
            report.lower = lower;
            report.upper = Some(upper);
        }
        Method::Hierarchy => {
            let p = scenario.compile()?;
            report.upper = Some(hierarchy(&p, cfg, opts));
        }
        Method::Seesaw => {
            let p = scenario.compile()?;
            report.lower = Some(seesaw(&p, cfg));
        }
        Method::Sandwich => {
            let p = scenario.compile()?;
            report.lower = Some(seesaw(&p, cfg));
            report.upper = Some(hierarchy(&p, cfg, opts));
            if let Some(kind) = cfg.polytope {
                report.seesaw_certificate = Some(certificate(&p, kind)?);
            }
        }
    }
    report.wall_time_s = (start.elapsed().as_secs_f64() * 1e3).round() / 1e3;
    Ok(report)
}

fn seesaw(p: &csep::ConstrainedSepProblem, cfg: &RunConfig) -> LowerReport {
    let opts = SeesawOptions {
        restarts: cfg.restarts,
        seed: cfg.seed.expect("checked"),
        max_iters: cfg.max_iters,
        conv_tol: cfg.tolerances.conv,
        solve: solve_options(cfg),
        ..SeesawOptions::default()
    };
    match csep::seesaw_with(p, &opts) {
        Ok(r) => {
            let factors: Vec<MatrixRepr> = r.factors.iter().map(encode).collect();
            LowerReport {
                value: rounded(p.objective(&r.factors.iter().map(|m| decode(&encode(m)).expect("square")).collect::<Vec<_>>())),
                status: "optimal".into(),
                source: "seesaw".into(),
                restarts: r.restarts,
                best_restart: Some(r.best_restart),
                digest: digest(&factors),
                factors,
                ..LowerReport::default()
            }
        }
        Err(e) => LowerReport {
            status: "failed".into(),
            source: "seesaw".into(),
            restarts: cfg.restarts,
            failure: Some(Failure::from(&e)),
            ..LowerReport::default()
        },
    }
}

fn hierarchy(p: &csep::ConstrainedSepProblem, cfg: &RunConfig, opts: &RunOptions) -> UpperReport {
    let dump = opts.dump_dir.as_ref().map(|d| d.join(format!("hierarchy_k{}.dat-s", cfg.k)));
    let h = HierarchyOptions {
        k: cfg.k,
        ppt: cfg.ppt,
        extend_party: cfg.extend_party,
        bosonic: cfg.bosonic,
        size_cap: cfg.size_cap,
        solve: solve_options(cfg),
        dump,
    };
    let base = UpperReport {
        source: "hierarchy".into(),
        k: Some(cfg.k),
        ppt: Some(cfg.ppt),
        bosonic: Some(cfg.bosonic),
        ..UpperReport::default()
    };
    match csep::upper_bound_with(p, &h) {
        Ok(b) => {
            let mut u = UpperReport {
                value: rounded(b.value),
                primal_value: rounded(b.primal_value),
                status: format!("{:?}", b.status).to_lowercase(),
                extend_party: Some(b.extend_party),
                backend: Some(format!("{:?}", b.backend).to_lowercase()),
                ..base
            };
            if b.status != Status::Optimal {
                u.failure = Some(Failure { kind: FailureKind::Solver, message: format!("hierarchy ended with {:?}", b.status) });
            }
            u
        }
        Err(e) => UpperReport { status: "failed".into(), failure: Some(Failure::from(&e)), ..base },
    }
}

fn certificate(p: &csep::ConstrainedSepProblem, kind: PolytopeKind) -> Result<CertificateReport> {
    let p2 = if p.num_parties() > 2 { p.merged()? } else { p.clone() };
    let party = (0..2)
        .rev()
        .find(|&i| p2.party(i).dim == 2 && p2.party(i).constraint.is_trivial())
        .ok_or_else(|| Error::BadParameter("polytope certificates need a qubit state party".into()))?;
    let v = Polytope::bloch(&kind.bloch_vectors(), p2.party(party))?;
    let c = csep::polytope_certificate(&p2, &v, party)?;
    Ok(CertificateReport {
        party,
        r_v: round9(c.r_v),
        l_tau: round9(c.l_tau),
        f_tau: round9(c.f_tau),
        interval: [round9(c.r_v), round9(c.upper_from_bound)],
    })
}

/// Whether the memory in `s` suffices to realise every tester of the
/// unrestricted class.
fn memory_suffices(s: &Scenario) -> bool {
    let (di, d_o) = (s.ensemble.d_in(), s.ensemble.d_out());
    match s.kind {
        ScenarioKind::MemorylessSingleCopy => di == 1,
        ScenarioKind::MemoryDeSingleCopy => s.memory.0 >= di,
        ScenarioKind::ParallelMemoryDe => s.memory.0 >= di * di,
        ScenarioKind::AdaptiveNoClassical | ScenarioKind::AdaptiveClassicalMemory => {
            s.memory.0 >= di && s.memory.1 >= di * d_o * di
        }
        ScenarioKind::ClassicallyAdaptive => false,
    }
}

fn exact(s: &Scenario, cfg: &RunConfig) -> (Option<LowerReport>, UpperReport) {
    let opts = solve_options(cfg);
    let (source, res): (&str, Result<OptimalTester>) = match s.kind {
        ScenarioKind::MemorylessSingleCopy | ScenarioKind::MemoryDeSingleCopy => {
            ("exact_sdp", testers::optimal_single_copy_with(&s.ensemble, &opts))
        }
        ScenarioKind::ParallelMemoryDe => ("exact_sdp", s.two_copy().and_then(|e| testers::optimal_parallel(&e))),
        ScenarioKind::AdaptiveNoClassical | ScenarioKind::AdaptiveClassicalMemory => {
            ("exact_sdp", s.two_copy().and_then(|e| testers::optimal_adaptive_with(&e, &opts)))
        }
        ScenarioKind::ClassicallyAdaptive => {
            ("relaxation", s.two_copy().and_then(|e| scenarios::classically_adaptive_relaxation_with(&e, &opts)))
        }
    };
    match res {
        Ok(o) => {
            let upper = UpperReport {
                value: rounded(o.dual_value),
                primal_value: rounded(o.value),
                status: format!("{:?}", o.status).to_lowercase(),
                source: source.into(),
                ..UpperReport::default()
            };
            let lower = memory_suffices(s).then(|| tester_lower(&o.tester, s, "exact_sdp"));
            (lower, upper)
        }
        Err(e) => (None, UpperReport { status: "failed".into(), source: source.into(), failure: Some(Failure::from(&e)), ..UpperReport::default() }),
    }
}

/// Lower bound certified by an explicit tester, valued after rounding.
fn tester_lower(t: &testers::Tester, s: &Scenario, source: &str) -> LowerReport {
    let repr = TesterRepr::from_tester(t);
    let value = repr.to_tester().and_then(|t| {
        let e = if t.kind.is_two_copy() { s.two_copy()? } else { s.ensemble.clone() };
        testers::success_probability(&t, &e)
    });
    match value {
        Ok(v) => LowerReport {
            value: rounded(v),
            status: "optimal".into(),
            source: source.into(),
            digest: digest(&repr.elements),
            tester: Some(repr),
            ..LowerReport::default()
        },
        Err(e) => LowerReport { status: "failed".into(), source: source.into(), failure: Some(Failure::from(&e)), ..LowerReport::default() },
    }
}

fn oracle_upper(value: f64, status: &str) -> UpperReport {
    UpperReport { value: rounded(value), status: status.into(), source: "oracle".into(), ..UpperReport::default() }
}

fn oracle_both(value: f64) -> (Option<LowerReport>, UpperReport) {
    let lower = LowerReport { value: rounded(value), status: "closed_form".into(), source: "oracle".into(), ..LowerReport::default() };
    (Some(lower), oracle_upper(value, "closed_form"))
}

/// Closed forms: clock-shift and irreducible group ensembles for the
/// single-copy kinds, the register-free adaptive cap, and the perfect
/// classically adaptive clock-shift strategy.
fn oracle(s: &Scenario, preset: Option<Preset>) -> Result<(Option<LowerReport>, UpperReport)> {
    if !matches!(s.ensemble.layout, Layout::Single) {
        return Err(Error::BadParameter("oracles take single-copy ensembles".into()));
    }
    let clock_d = match preset {
        Some(Preset::Pauli) => Some(2),
        Some(Preset::ClockShift(d)) => Some(d),
        _ => None,
    };
    match s.kind {
        ScenarioKind::MemorylessSingleCopy | ScenarioKind::MemoryDeSingleCopy => {
            if let Some(d) = clock_d {
                return Ok(oracle_both(scenarios::oracle_clock_shift(d, s.memory.0)));
            }
            let us = preset
                .as_ref()
                .and_then(|p| p.unitaries())
                .ok_or_else(|| Error::BadParameter("no closed form for this ensemble".into()))?;
            Ok(oracle_both(scenarios::oracle_group_uniform(&us, s.memory.0)?))
        }
        ScenarioKind::AdaptiveNoClassical => {
            let cap = scenarios::oracle_adaptive_no_cc_cap(s.ensemble.len(), s.ensemble.d_out(), s.memory.1);
            Ok((None, oracle_upper(cap, "bound")))
        }
        ScenarioKind::ClassicallyAdaptive | ScenarioKind::AdaptiveClassicalMemory => match clock_d {
            Some(d) if s.registers >= d => {
                let t = scenarios::theorem6_strategy(d)?;
                let lower = tester_lower(&t, s, "oracle");
                Ok((Some(lower), oracle_upper(1.0, "trivial")))
            }
            _ => Err(Error::BadParameter("no closed form for this adaptive scenario".into())),
        },
        ScenarioKind::ParallelMemoryDe => Err(Error::BadParameter("no closed form for parallel scenarios".into())),
    }
}
