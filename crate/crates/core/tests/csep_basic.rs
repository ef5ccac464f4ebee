use chandisc::csep::{self, ConstrainedSepProblem, HierarchyOptions, Party};
use chandisc::linalg::{self, ONE, ZERO};
use chandisc::qops::{sys, LabeledOperator};

fn bell_problem() -> ConstrainedSepProblem {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [ONE * h, ZERO, ZERO, ONE * h];
    let f = LabeledOperator::new(vec![sys("a", 2), sys("b", 2)], linalg::outer(&phi, &phi)).unwrap();
    ConstrainedSepProblem::new(f, vec![Party::state("a", 2).unwrap(), Party::state("b", 2).unwrap()]).unwrap()
}

#[test]
fn bell_overlap_ppt_and_seesaw() {
    let p = bell_problem();
    let ub = csep::upper_bound(&p, 1, true, 0, true).unwrap();
    assert!((ub.value - 0.5).abs() < 1e-7, "{}", ub.value);
    let ss = csep::seesaw(&p, 4, 1, 100, 1e-12).unwrap();
    assert!((ss.value - 0.5).abs() < 1e-9, "{}", ss.value);
    for k in 2..=3 {
        let ub = csep::upper_bound_with(&p, &HierarchyOptions { k, ..Default::default() }).unwrap();
        assert!((ub.value - 0.5).abs() < 1e-6, "k={k} {}", ub.value);
        let pm = csep::upper_bound_with(&p, &HierarchyOptions { k, bosonic: false, ..Default::default() }).unwrap();
        assert!(ub.value <= pm.value + 1e-7);
    }
    // without PPT the only constraint left at k=1 is normalisation
    let free = csep::upper_bound(&p, 1, false, 0, true).unwrap();
    assert!((free.value - 1.0).abs() < 1e-7);
    let k2 = csep::upper_bound(&p, 2, false, 0, true).unwrap();
    assert!((k2.value - 0.75).abs() < 1e-6, "{}", k2.value);
}
