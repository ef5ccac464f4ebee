use super::*;
use crate::qops::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn omega_rows_vanish_on_product_with_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // two blocks (flag 0..2) of σ_j ⊗ 1_3
    let blocks: Vec<CMat> = (0..2).map(|_| linalg::kron(&random::density(&mut rng, 2), &linalg::eye(3))).collect();
    let x = linalg::direct_sum(&blocks);
    let m = omega_rows(&[2, 2, 3], &[0], &[0, 1, 2], 2, 12).unwrap();
    assert!(m.residual(&x) < 1e-12);
    let bad = linalg::direct_sum(&[random::density(&mut rng, 6), linalg::zeros(6, 6)]);
    assert!(m.residual(&bad) > 1e-3);
}

#[test]
fn block_sum_adds_flagged_blocks() {
    let a = linalg::rdiag(&[0.25, 0.0]);
    let b = linalg::rdiag(&[0.0, 0.25]);
    let x = linalg::direct_sum(&[a, b]);
    let target = linalg::rscale(&linalg::eye(2), 0.25);
    let m = block_sum_map(&[2, 2], &[0], &[1], &target).unwrap();
    assert!(m.residual(&x) < 1e-14);
}

#[test]
fn key_blocks_partition() {
    let b = key_blocks(&[2, 3, 2], &[0, 1]);
    assert_eq!(b.len(), 6);
    assert_eq!(b[0], vec![0, 1]);
    assert_eq!(b[5], vec![10, 11]);
}

#[test]
fn oversized_party_is_rejected() {
    assert!(matches!(checked_dim("M", &[1 << 10, 1 << 10]), Err(Error::SizeOverflow(_))));
}
