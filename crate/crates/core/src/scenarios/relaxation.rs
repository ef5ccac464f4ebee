//! Register-size independent upper bound for classically adaptive testers.

use crate::channels::ChannelEnsemble;
use crate::sdpiface::{EntryMap, ImageCone, SolveOptions};
use crate::testers::sdp::{adaptive_problem, finish};
use crate::testers::{OptimalTester, TesterKind};
use crate::Result;

/// Adaptive tester SDP with every element PPT across the `I1 O1 | I2 O2`
/// cut. Every classically adaptive tester `Σ_j R^j ⊗ S^{i|j}` is feasible
/// whatever the register size, so `dual_value` bounds them all.
pub fn classically_adaptive_relaxation(e2: &ChannelEnsemble) -> Result<OptimalTester> {
    classically_adaptive_relaxation_with(e2, &SolveOptions::default())
}

pub fn classically_adaptive_relaxation_with(e2: &ChannelEnsemble, opts: &SolveOptions) -> Result<OptimalTester> {
    let (mut p, ids, chois) = adaptive_problem(e2)?;
    let dims = chois[0].dims();
    let n = chois[0].side();
    for (i, &id) in ids.iter().enumerate() {
        let pt = EntryMap::partial_transpose(&dims, &[false, false, true, true]);
        p.add_psd_image(ImageCone::new(format!("ppt{i}"), n).with_part(id, pt))?;
    }
    finish(&p, &ids, TesterKind::Adaptive2, &chois[0], opts)
}
