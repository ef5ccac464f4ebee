//! Alternating maximisation over one party at a time.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::space::{is_degenerate, party_feasible, party_optimum};
use super::{ConstrainedSepProblem, Party};
use crate::linalg::{self, CMat};
use crate::qops::random;
use crate::sdpiface::{Sense, SolveOptions, Status};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once a full sweep improves the objective by less than this.
    pub conv_tol: f64,
    /// Starting points for one party, one per restart; overrides
    /// `restarts`.
    pub init: Option<(usize, Vec<CMat>)>,
    pub solve: SolveOptions,
    pub parallel: bool,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 20,
            seed: 0,
            max_iters: 500,
            conv_tol: 1e-10,
            init: None,
            solve: SolveOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    /// Objective at `factors`.
    pub value: f64,
    pub factors: Vec<CMat>,
    pub best_restart: usize,
    pub restarts: usize,
    /// Objective after each sweep of the best restart.
    pub history: Vec<f64>,
    /// Final value of every restart.
    pub values: Vec<f64>,
}

pub fn seesaw(p: &ConstrainedSepProblem, restarts: usize, seed: u64, max_iters: usize, conv_tol: f64) -> Result<SeesawResult> {
    seesaw_with(p, &SeesawOptions { restarts, seed, max_iters, conv_tol, ..Default::default() })
}

struct Run {
    value: f64,
    factors: Vec<CMat>,
    history: Vec<f64>,
}

fn random_start(party: &Party, rng: &mut ChaCha8Rng, opts: &SolveOptions) -> Result<CMat> {
    let psi = random::pure_state(rng, party.dim);
    let proj = linalg::outer(&psi, &psi);
    if party.constraint.rows() == 0 {
        return Ok(proj);
    }
    // feasible point of largest overlap with a random pure state
    let opt = party_optimum(party, &proj, Sense::Maximize, true, opts)?;
    if opt.status != Status::Optimal {
        return Err(Error::Solver(format!("seesaw start for party `{}`: {:?}", party.name, opt.status)));
    }
    Ok(opt.point)
}

fn run_one(
    p: &ConstrainedSepProblem,
    fixed: &[Option<CMat>],
    r: usize,
    opts: &SeesawOptions,
) -> Result<Run> {
    let n = p.num_parties();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(r as u64);
    let mut factors = Vec::with_capacity(n);
    for i in 0..n {
        let x = if let Some(x) = &fixed[i] {
            x.clone()
        } else if let Some((party, pts)) = &opts.init {
            if *party == i {
                pts[r].clone()
            } else {
                random_start(p.party(i), &mut rng, &opts.solve)?
            }
        } else {
            random_start(p.party(i), &mut rng, &opts.solve)?
        };
        factors.push(x);
    }
    let start = opts.init.as_ref().map_or(0, |(party, _)| (party + 1) % n);
    let mut value = p.objective(&factors);
    let mut history = vec![value];
    for _ in 0..opts.max_iters {
        let before = value;
        for step in 0..n {
            let i = (start + step) % n;
            if fixed[i].is_some() {
                continue;
            }
            let g = linalg::hermitize(&p.contract(i, &factors));
            let opt = party_optimum(p.party(i), &g, Sense::Maximize, true, &opts.solve)?;
            if opt.status != Status::Optimal {
                continue;
            }
            let old = std::mem::replace(&mut factors[i], opt.point);
            let v = p.objective(&factors);
            if v >= value {
                value = v;
            } else {
                factors[i] = old;
            }
        }
        history.push(value);
        if value - before < opts.conv_tol {
            break;
        }
    }
    Ok(Run { value, factors, history })
}

pub fn seesaw_with(p: &ConstrainedSepProblem, opts: &SeesawOptions) -> Result<SeesawResult> {
    let n = p.num_parties();
    for (i, party) in p.parties().iter().enumerate() {
        if !party_feasible(party)? {
            return Err(Error::InfeasibleParty(i));
        }
    }
    let restarts = match &opts.init {
        Some((party, pts)) => {
            if *party >= n {
                return Err(Error::BadIndex(format!("seesaw start party {party}")));
            }
            if let Some(bad) = pts.iter().position(|x| p.party(*party).violation(x) > 1e-8) {
                return Err(Error::BadParameter(format!("start point {bad} violates the party constraint")));
            }
            pts.len()
        }
        None => opts.restarts,
    };
    if restarts == 0 {
        return Err(Error::BadParameter("seesaw needs at least one restart".into()));
    }
    // parties whose constraints leave a single point are held fixed
    let mut fixed: Vec<Option<CMat>> = vec![None; n];
    for (i, party) in p.parties().iter().enumerate() {
        if is_degenerate(party) {
            let zero = linalg::zeros(party.dim, party.dim);
            let opt = party_optimum(party, &zero, Sense::Maximize, true, &opts.solve)?;
            fixed[i] = Some(opt.point);
        }
    }
    let runs: Vec<Result<Run>> = if opts.parallel {
        (0..restarts).into_par_iter().map(|r| run_one(p, &fixed, r, opts)).collect()
    } else {
        (0..restarts).map(|r| run_one(p, &fixed, r, opts)).collect()
    };
    let mut values = Vec::with_capacity(restarts);
    let mut best: Option<(usize, Run)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        values.push(run.value);
        // strict comparison keeps the lowest index on ties
        if best.as_ref().is_none_or(|(_, b)| run.value > b.value) {
            best = Some((r, run));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    Ok(SeesawResult {
        value: run.value,
        factors: run.factors,
        best_restart,
        restarts,
        history: run.history,
        values,
    })
}
