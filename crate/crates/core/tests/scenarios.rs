use chandisc::channels::{self, ChannelEnsemble, Preset, IN, OUT};
use chandisc::csep::{self, HierarchyOptions};
use chandisc::linalg::{self, CMat};
use chandisc::qops::{random, sys};
use chandisc::scenarios::{self, AdaptiveStrategy, ClassicalStrategy, Scenario, ScenarioKind};
use chandisc::testers::{self, Tester, TesterKind};
use chandisc::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_ensemble(rng: &mut ChaCha8Rng, n: usize, di: usize, d_o: usize) -> ChannelEnsemble {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let tot: f64 = raw.iter().sum();
    let members: Vec<_> = raw
        .iter()
        .map(|q| (q / tot, random::channel(rng, sys(IN, di), sys(OUT, d_o), 2)))
        .collect();
    channels::kraus_ensemble(&members).unwrap()
}

/// Random POVM with `n` outcomes on dimension `d`.
fn random_povm(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<CMat> {
    let raw: Vec<CMat> = (0..n).map(|_| random::density(rng, d)).collect();
    let mut s = linalg::zeros(d, d);
    for x in &raw {
        s += x;
    }
    let inv = linalg::psd_pinv_sqrt(&s, 1e-14);
    raw.iter().map(|x| linalg::hermitize(&(&(&inv * x) * &inv))).collect()
}

fn check_point(p: &csep::ConstrainedSepProblem, factors: &[CMat], expected: f64) {
    for (party, x) in p.parties().iter().zip(factors) {
        assert!(party.violation(x) < 1e-10, "party {} violation {}", party.name, party.violation(x));
    }
    let v = p.objective(factors);
    assert!((v - expected).abs() < 1e-10, "objective {v} vs success {expected}");
}

#[test]
fn memoryless_objective_matches_success_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, di, d_o, de) in [(3, 2, 2, 1), (2, 2, 3, 1), (3, 2, 2, 2)] {
        let e = random_ensemble(&mut rng, n, di, d_o);
        let lifted = channels::tensor_with_identity(&e, de).unwrap();
        let rho = random::density(&mut rng, di * de);
        let povm = random_povm(&mut rng, n, d_o * de);
        let t = Tester::memoryless(&rho, &povm).unwrap();
        let expected = testers::success_probability(&t, &lifted).unwrap();
        let p = scenarios::compile_memory_de(&e, de).unwrap();
        check_point(&p, &scenarios::memoryless_point(&rho, &povm), expected);
    }
}

fn random_adaptive(rng: &mut ChaCha8Rng, dims: [(usize, usize); 2], l: usize, n: usize) -> AdaptiveStrategy {
    let [(a, b), (c, d)] = dims;
    let raw: Vec<CMat> = (0..l).map(|_| linalg::rscale(&random::density(rng, b * c), b as f64)).collect();
    // Tr_{I2} Σ_j K^j = 1_{O1}
    let mut marg = linalg::zeros(b, b);
    for x in &raw {
        for r in 0..b {
            for s in 0..b {
                for u in 0..c {
                    marg[(r, s)] += x[(r * c + u, s * c + u)];
                }
            }
        }
    }
    let fix = linalg::kron(&linalg::psd_pinv_sqrt(&marg, 1e-14), &linalg::eye(c));
    let instrument = raw.iter().map(|x| linalg::hermitize(&(&(&fix * x) * &fix))).collect();
    let measurement = (0..l).map(|_| random_povm(rng, n, d)).collect();
    AdaptiveStrategy { rho: random::density(rng, a), instrument, measurement }
}

#[test]
fn adaptive_objective_matches_success_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (n, l, de1, de2) in [(3, 1, 1, 1), (4, 2, 1, 1), (2, 3, 1, 1), (2, 2, 2, 1)] {
        let e = random_ensemble(&mut rng, n, 2, 2);
        let first = channels::tensor_with_identity(&e, de1).unwrap();
        let second = channels::tensor_with_identity(&e, de2).unwrap();
        let lifted = channels::pair(&first, &second).unwrap();
        let dims = lifted.copy_dims().unwrap();
        let s = random_adaptive(&mut rng, dims, l, n);
        let t = s.tester(dims).unwrap();
        assert!(testers::validate(&t).passes(1e-10));
        let expected = testers::success_probability(&t, &lifted).unwrap();
        let p = scenarios::compile_adaptive(&channels::two_copy(&e).unwrap(), de1, de2, l).unwrap();
        check_point(&p, &s.point(dims), expected);
    }
}

#[test]
fn classical_objective_matches_success_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (n, l, di, d_o) in [(3, 2, 2, 2), (2, 3, 2, 3)] {
        let e = random_ensemble(&mut rng, n, di, d_o);
        let e2 = channels::two_copy(&e).unwrap();
        let dims = e2.copy_dims().unwrap();
        let rho = linalg::transpose(&random::density(&mut rng, di));
        let first: Vec<CMat> = random_povm(&mut rng, l, d_o).iter().map(|m| linalg::kron(&rho, m)).collect();
        let second: Vec<Vec<CMat>> = (0..l)
            .map(|_| {
                let sj = linalg::transpose(&random::density(&mut rng, di));
                random_povm(&mut rng, n, d_o).iter().map(|m| linalg::kron(&sj, m)).collect()
            })
            .collect();
        let s = ClassicalStrategy { first, second };
        let t = s.tester(dims).unwrap();
        assert!(testers::validate(&t).passes(1e-10));
        let expected = testers::success_probability(&t, &e2).unwrap();
        let p = scenarios::compile_classically_adaptive(&e2, l).unwrap();
        check_point(&p, &s.point(dims), expected);
    }
}

#[test]
fn memoryless_clock_shift_qubit_sandwich() {
    let e = Preset::ClockShift(2).ensemble().unwrap();
    let p = scenarios::compile_memoryless_single_copy(&e).unwrap();
    let ss = csep::seesaw(&p, 4, 0, 200, 1e-12).unwrap();
    let ub = csep::upper_bound_with(&p, &HierarchyOptions { k: 3, ..Default::default() }).unwrap();
    assert!((ss.value - 0.5).abs() < 1e-4, "{}", ss.value);
    assert!((ub.value - 0.5).abs() < 1e-4, "{}", ub.value);
}

#[test]
fn single_channel_is_always_identified() {
    let e = Preset::SqrtPauli.ensemble().unwrap();
    let one = ChannelEnsemble::new(vec![(1.0, e.members[1].1.clone())]).unwrap();
    let p = scenarios::compile_memoryless_single_copy(&one).unwrap();
    let ss = csep::seesaw(&p, 1, 0, 50, 1e-12).unwrap();
    assert!((ss.value - 1.0).abs() < 1e-8);
    let l2 = Scenario::new(ScenarioKind::ClassicallyAdaptive, one, (1, 1), Some(2)).unwrap();
    let ss = csep::seesaw(&l2.compile().unwrap(), 1, 0, 50, 1e-12).unwrap();
    assert!((ss.value - 1.0).abs() < 1e-8);
}

#[test]
fn closed_form_oracles() {
    assert!((scenarios::oracle_clock_shift(3, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(scenarios::oracle_clock_shift(4, 4), 1.0);
    assert_eq!(scenarios::oracle_clock_shift(4, 2), 0.5);
    assert_eq!(scenarios::oracle_adaptive_no_cc_cap(4, 2, 1), 0.5);
    assert_eq!(scenarios::oracle_adaptive_no_cc_cap(9, 3, 1), 1.0 / 3.0);
    assert_eq!(scenarios::oracle_adaptive_no_cc_cap(3, 2, 2), 1.0);
    let pauli = channels::pauli_unitaries();
    assert!((scenarios::oracle_group_uniform(&pauli, 1).unwrap() - 0.5).abs() < 1e-15);
    let cs3 = channels::clock_shift_group(3);
    assert!((scenarios::oracle_group_uniform(&cs3, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let roots = Preset::SqrtClockShift(3).unitaries().unwrap();
    assert_eq!(scenarios::oracle_group_uniform(&roots, 1), Err(Error::NotAGroup));
    // {1, Z} is a group but the representation splits
    let diag = vec![linalg::eye(2), channels::pauli_z()];
    assert!(matches!(scenarios::oracle_group_uniform(&diag, 1), Err(Error::NotIrreducible(_))));
}

#[test]
fn theorem6_perfect_discrimination() {
    for d in 2..=4 {
        let e2 = channels::two_copy(&Preset::ClockShift(d).ensemble().unwrap()).unwrap();
        let t = scenarios::theorem6_strategy(d).unwrap();
        assert_eq!(t.kind, TesterKind::ClassicallyAdaptive2);
        assert!(testers::validate(&t).passes(1e-12));
        let p = testers::success_probability(&t, &e2).unwrap();
        assert!((p - 1.0).abs() < 1e-10, "d={d}: {p}");
        if d <= 3 {
            let blocks = scenarios::theorem6_blocks(d).unwrap();
            let prob = scenarios::compile_classically_adaptive(&e2, d).unwrap();
            check_point(&prob, &blocks.point([(d, d), (d, d)]), 1.0);
        }
    }
}

#[test]
fn theorem6_as_adaptive_point_with_register() {
    // ρ = |0⟩⟨0|, K^j = |j⟩⟨j|_O1 ⊗ |f0⟩⟨f0|_I2, conditional Fourier readout
    let d = 2;
    let e2 = channels::two_copy(&Preset::ClockShift(d).ensemble().unwrap()).unwrap();
    let plus = linalg::rscale(&linalg::from_real(&[&[1.0, 1.0], &[1.0, 1.0]]), 0.5);
    let minus = linalg::rscale(&linalg::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]]), 0.5);
    let zero = linalg::zeros(d, d);
    let instrument = (0..d).map(|j| linalg::kron(&linalg::ketbra(d, j, j), &plus)).collect();
    // member i = 2a + b, read b in the Fourier basis once a = j is known
    let measurement = (0..d)
        .map(|j| {
            (0..d * d)
                .map(|i| match (i / d == j, i % d) {
                    (false, _) => zero.clone(),
                    (true, 0) => plus.clone(),
                    (true, _) => minus.clone(),
                })
                .collect()
        })
        .collect();
    let s = AdaptiveStrategy { rho: linalg::ketbra(d, 0, 0), instrument, measurement };
    let p = scenarios::compile_adaptive(&e2, 1, 1, 2).unwrap();
    check_point(&p, &s.point([(d, d), (d, d)]), 1.0);
}

#[test]
fn adaptive_without_register_is_capped() {
    let e = Preset::ClockShift(2).ensemble().unwrap();
    let sc = Scenario::new(ScenarioKind::AdaptiveNoClassical, e, (1, 1), None).unwrap();
    let ub = csep::upper_bound(&sc.compile().unwrap(), 1, true, 0, true).unwrap();
    assert!(ub.value <= 0.5 + 1e-3, "{}", ub.value);
}

#[test]
fn relaxation_bounds_classically_adaptive() {
    let e2 = channels::two_copy(&Preset::SqrtPauli.ensemble().unwrap()).unwrap();
    let r = scenarios::classically_adaptive_relaxation(&e2).unwrap();
    assert!(r.dual_value <= 0.8980 + 1e-3, "{}", r.dual_value);
    let t = r.tester.with_kind(TesterKind::Adaptive2).unwrap();
    assert!(testers::validate(&t).passes(1e-6));
    // the perfect adaptive tester is cut off
    assert!(r.dual_value < testers::optimal_adaptive(&e2).unwrap().value - 0.05);
}

#[test]
fn scenario_validation() {
    let e = Preset::Pauli.ensemble().unwrap();
    assert!(Scenario::new(ScenarioKind::MemoryDeSingleCopy, e.clone(), (0, 1), None).is_err());
    assert!(Scenario::new(ScenarioKind::ClassicallyAdaptive, e.clone(), (1, 1), Some(0)).is_err());
    assert!(Scenario::new(ScenarioKind::AdaptiveNoClassical, e.clone(), (1, 1), Some(2)).is_err());
    let sc = Scenario::new(ScenarioKind::ClassicallyAdaptive, e.clone(), (1, 1), None).unwrap();
    assert_eq!(sc.registers, 4);
    let huge = Scenario::new(ScenarioKind::ClassicallyAdaptive, e, (1, 1), Some(1 << 12)).unwrap();
    assert!(matches!(huge.compile(), Err(Error::SizeOverflow(_))));
}

fn bracket(p: &csep::ConstrainedSepProblem, restarts: usize) -> (f64, f64) {
    let ss = csep::seesaw(p, restarts, 3, 200, 1e-12).unwrap();
    let ub = csep::upper_bound(p, 1, true, 0, true).unwrap();
    (ss.value, ub.value)
}

#[test]
fn memory_monotonicity_clock_shift() {
    for d in [2usize, 3] {
        let e = Preset::ClockShift(d).ensemble().unwrap();
        let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for d_e in [1, d] {
            let now = if d_e >= d {
                let v = testers::optimal_single_copy(&e).unwrap();
                (v.value, v.dual_value)
            } else {
                bracket(&scenarios::compile_memory_de(&e, d_e).unwrap(), 4)
            };
            let oracle = scenarios::oracle_clock_shift(d, d_e);
            assert!(now.0 <= oracle + 1e-6 && now.1 >= oracle - 1e-6, "d={d} d_E={d_e}: {now:?} vs {oracle}");
            assert!(now.0 >= last.0 - 1e-4 && now.1 >= last.1 - 1e-4, "d={d} d_E={d_e}: {now:?} after {last:?}");
            last = now;
        }
    }
}

#[test]
fn register_monotonicity_and_inclusions() {
    let e = Preset::ClockShift(2).ensemble().unwrap();
    let e2 = channels::two_copy(&e).unwrap();
    // the L = 1 value is capped at 1/2 (see adaptive_without_register_is_capped)
    let mut last = f64::NEG_INFINITY;
    for l in 1..=3 {
        let p = scenarios::compile_adaptive(&e2, 1, 1, l).unwrap();
        let now = csep::seesaw(&p, 3, 3, 200, 1e-12).unwrap().value;
        assert!(now >= last - 1e-4, "L={l}: {now} after {last}");
        last = now;
    }
    assert!(last > 1.0 - 1e-4, "{last}");

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2 {
        let e2 = channels::two_copy(&random_ensemble(&mut rng, 3, 2, 2)).unwrap();
        let nocc = csep::seesaw(&scenarios::compile_adaptive(&e2, 1, 1, 1).unwrap(), 3, 5, 200, 1e-12).unwrap();
        let acm = csep::seesaw(&scenarios::compile_adaptive(&e2, 1, 1, 3).unwrap(), 3, 5, 200, 1e-12).unwrap();
        let ada = testers::optimal_adaptive(&e2).unwrap();
        assert!(acm.value <= ada.dual_value + 1e-7, "{} > {}", acm.value, ada.dual_value);
        assert!(nocc.value <= ada.dual_value + 1e-7);
    }
}
