use super::*;
use crate::linalg::{self, cplx, ONE};
use crate::qops::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trace_term(b: BlockId, n: usize) -> Term {
    Term::Block(b, SparseMat::identity(n))
}

fn state_problem(sense: Sense, obj: &CMat) -> (ConicProblem, BlockId) {
    let n = obj.nrows();
    let mut p = ConicProblem::new(sense);
    let r = p.add_block("rho", n).unwrap();
    p.add_equality(vec![trace_term(r, n)], 1.0).unwrap();
    p.set_objective(vec![Term::Block(r, SparseMat::from_dense(obj, 0.0))], 0.0).unwrap();
    (p, r)
}

fn helstrom(backend: Backend) -> Solution {
    let k0 = linalg::ketbra(2, 0, 0);
    let plus = linalg::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let mut p = ConicProblem::new(Sense::Maximize);
    let m0 = p.add_block("M0", 2).unwrap();
    let m1 = p.add_block("M1", 2).unwrap();
    let id = EntryMap::identity(2);
    p.add_matrix_equality(&[(m0, &id), (m1, &id)], &[], &linalg::eye(2)).unwrap();
    p.set_objective(
        vec![
            Term::Block(m0, SparseMat::from_dense(&linalg::rscale(&k0, 0.5), 0.0)),
            Term::Block(m1, SparseMat::from_dense(&linalg::rscale(&plus, 0.5), 0.0)),
        ],
        0.0,
    )
    .unwrap();
    solve_with(&p, &SolveOptions { backend, ..SolveOptions::default() }).unwrap()
}

#[test]
fn coordinates_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = random::hermitian(&mut rng, 5);
    let v = block_to_coords(&h);
    assert!(linalg::max_abs_diff(&coords_to_block(&v, 5), &h) < 1e-14);
    let h2 = random::hermitian(&mut rng, 5);
    let v2 = block_to_coords(&h2);
    let dot: f64 = v.iter().zip(&v2).map(|(a, b)| a * b).sum();
    assert!((dot - linalg::inner(&h, &h2)).abs() < 1e-12);
    for k in 0..25 {
        let e = lower::basis_entries(5, k);
        let c = lower::entry_coords(5, e);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].0, k);
        assert!((c[0].1 - 1.0).abs() < 1e-14);
    }
}

#[test]
fn max_sigma_z_expectation() {
    let (p, r) = state_problem(Sense::Maximize, &crate::channels::pauli_z());
    let s = solve(&p, &Tolerances::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - 1.0).abs() < 1e-7, "{}", s.primal_value);
    assert!((s.dual_value - 1.0).abs() < 1e-7);
    assert!((s.block(r)[(0, 0)].re - 1.0).abs() < 1e-6);
}

#[test]
fn min_eigenvalue_of_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random::hermitian(&mut rng, 6);
    let (p, _) = state_problem(Sense::Minimize, &h);
    let s = solve(&p, &Tolerances::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - linalg::min_eig(&h)).abs() < 1e-7);
}

#[test]
fn helstrom_pair() {
    let oracle = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
    let s = helstrom(Backend::InteriorPoint);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - oracle).abs() < 1e-8, "{}", s.primal_value);
    assert!(s.dual_value >= oracle - 1e-8);
    assert!((s.primal_value - s.dual_value).abs() <= 1e-8);
}

#[test]
fn helstrom_pair_splitting() {
    let oracle = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
    let s = helstrom(Backend::Admm);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - oracle).abs() < 1e-5, "{}", s.primal_value);
}

#[test]
fn ppt_fidelity_with_bell_state() {
    // max ⟨Φ⁺|ρ|Φ⁺⟩ over two-qubit PPT states is 1/2
    let phi = [ONE * std::f64::consts::FRAC_1_SQRT_2, linalg::ZERO, linalg::ZERO, ONE * std::f64::consts::FRAC_1_SQRT_2];
    let proj = linalg::outer(&phi, &phi);
    let (mut p, r) = state_problem(Sense::Maximize, &proj);
    p.add_psd_image(ImageCone::new("pt", 4).with_part(r, EntryMap::partial_transpose(&[2, 2], &[false, true])))
        .unwrap();
    for backend in [Backend::InteriorPoint, Backend::Admm] {
        let s = solve_with(&p, &SolveOptions { backend, ..SolveOptions::default() }).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.primal_value - 0.5).abs() < 1e-5, "{backend:?} {}", s.primal_value);
    }
}

#[test]
fn free_scalar_epigraph() {
    // min t s.t. t·1 − H ⪰ 0 gives the largest eigenvalue
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = random::hermitian(&mut rng, 4);
    let mut p = ConicProblem::new(Sense::Minimize);
    let dummy = p.add_block("slack", 1).unwrap();
    p.add_equality(vec![trace_term(dummy, 1)], 1.0).unwrap();
    let t = p.add_scalar("t");
    p.add_psd_image(
        ImageCone::new("epi", 4)
            .with_scalar(t, SparseMat::identity(4))
            .with_constant(SparseMat::from_dense(&linalg::rscale(&h, -1.0), 0.0)),
    )
    .unwrap();
    p.set_objective(vec![Term::Scalar(t, 1.0)], 0.0).unwrap();
    let s = solve(&p, &Tolerances::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.scalar(t) - linalg::max_eig(&h)).abs() < 1e-7);
}

#[test]
fn feasibility_examples() {
    let mut p = ConicProblem::new(Sense::Maximize);
    let _ = p.add_block("X", 2).unwrap();
    assert_eq!(check_feasibility(&p).unwrap().status, Status::Optimal);

    let mut q = ConicProblem::new(Sense::Maximize);
    let x = q.add_block("X", 2).unwrap();
    q.add_equality(vec![trace_term(x, 2)], 1.0).unwrap();
    q.add_equality(vec![trace_term(x, 2)], 2.0).unwrap();
    assert_eq!(check_feasibility(&q).unwrap().status, Status::Infeasible);
    assert_eq!(solve(&q, &Tolerances::default()).unwrap().status, Status::Infeasible);
}

#[test]
fn cone_infeasibility_detected() {
    let mut p = ConicProblem::new(Sense::Maximize);
    let x = p.add_block("X", 3).unwrap();
    p.add_equality(vec![trace_term(x, 3)], -1.0).unwrap();
    p.set_objective(vec![Term::Block(x, SparseMat::new(3).tap_diag(0, 1.0))], 0.0).unwrap();
    assert_eq!(solve(&p, &Tolerances::default()).unwrap().status, Status::Infeasible);
    assert_eq!(check_feasibility(&p).unwrap().status, Status::Infeasible);
}

#[test]
fn unbounded_detected() {
    let mut p = ConicProblem::new(Sense::Maximize);
    let x = p.add_block("X", 2).unwrap();
    p.add_equality(vec![Term::Block(x, SparseMat::new(2).tap_diag(0, 1.0))], 1.0).unwrap();
    p.set_objective(vec![trace_term(x, 2)], 0.0).unwrap();
    assert_eq!(solve(&p, &Tolerances::default()).unwrap().status, Status::Unbounded);
}

#[test]
fn embedding_doubles_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let h = random::hermitian(&mut rng, 4);
        let e = real_embedding(&h);
        let mut sym = 0.0f64;
        for i in 0..8 {
            for j in 0..8 {
                sym = sym.max((e[(i, j)] - e[(j, i)]).abs());
            }
        }
        assert!(sym < 1e-15);
        let ev = linalg::eigvalsh(&linalg::from_real(
            &(0..8).map(|i| (0..8).map(|j| e[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>().iter().map(|r| r.as_slice()).collect::<Vec<_>>(),
        ));
        let base = linalg::eigvalsh(&h);
        for k in 0..4 {
            assert!((ev[2 * k] - base[k]).abs() < 1e-12);
            assert!((ev[2 * k + 1] - base[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn sdpa_dump_header() {
    let (mut p, r) = state_problem(Sense::Maximize, &crate::channels::pauli_x());
    p.add_psd_image(ImageCone::new("copy", 2).with_part(r, EntryMap::identity(2))).unwrap();
    let s = sdpa::render(&p);
    let lines: Vec<&str> = s.lines().collect();
    assert!(lines[0].starts_with('"'));
    assert_eq!(lines[1].trim(), "4");
    assert_eq!(lines[2].trim(), "3");
    assert_eq!(lines[3].trim(), "4 4 -2");
}

#[test]
fn complex_objective_handled() {
    // ⟨ψ|ρ|ψ⟩ with a genuinely complex ψ
    let psi = [cplx(0.6, 0.0), cplx(0.0, 0.8)];
    let proj = linalg::outer(&psi, &psi);
    let (p, r) = state_problem(Sense::Maximize, &proj);
    let s = solve(&p, &Tolerances::default()).unwrap();
    assert!((s.primal_value - 1.0).abs() < 1e-7);
    assert!(linalg::max_abs_diff(s.block(r), &proj) < 1e-4);
}

trait TapDiag {
    fn tap_diag(self, i: usize, v: f64) -> Self;
}

impl TapDiag for SparseMat {
    fn tap_diag(mut self, i: usize, v: f64) -> Self {
        self.push(i, i, cplx(v, 0.0));
        self
    }
}
