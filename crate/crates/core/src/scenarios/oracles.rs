//! Closed-form optima and explicit strategies.

use super::points::ClassicalStrategy;
use crate::linalg::{self, c64, CMat};
use crate::testers::Tester;
use crate::{Error, Result};

/// Closure tolerance relative to the dimension.
const GROUP_TOL: f64 = 1e-8;
const SCHUR_TOL: f64 = 1e-9;

/// `min{1, d_E / d}` for the uniform clock-shift ensemble.
pub fn oracle_clock_shift(d: usize, d_e: usize) -> f64 {
    (d_e as f64 / d as f64).min(1.0)
}

/// `min{d_O d_E2 / N, 1}` for adaptive two-copy testers without a
/// classical register.
pub fn oracle_adaptive_no_cc_cap(n: usize, d_o: usize, d_e2: usize) -> f64 {
    ((d_o * d_e2) as f64 / n as f64).min(1.0)
}

/// `(1/N) d min{d, d_E}` for a uniform ensemble of unitaries forming an
/// irreducible projective representation of a group.
pub fn oracle_group_uniform(unitaries: &[CMat], d_e: usize) -> Result<f64> {
    let n = unitaries.len();
    let d = unitaries.first().ok_or_else(|| Error::BadParameter("empty unitary set".into()))?.nrows();
    if d_e == 0 {
        return Err(Error::BadParameter("memory dimension must be ≥ 1".into()));
    }
    for u in unitaries {
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimMismatch("unitaries of different size".into()));
        }
        let dev = linalg::is_unitary(u, 1e-10);
        if dev > 0.0 {
            return Err(Error::NotUnitary(dev));
        }
    }
    let daggers: Vec<CMat> = unitaries.iter().map(linalg::dagger).collect();
    for a in unitaries {
        for b in unitaries {
            let ab = a * b;
            let closed = daggers.iter().any(|c| (linalg::trace_prod(c, &ab).norm() - d as f64).abs() < GROUP_TOL * d as f64);
            if !closed {
                return Err(Error::NotAGroup);
            }
        }
    }
    let schur: f64 = unitaries.iter().map(|u| linalg::trace(u).norm_sqr()).sum::<f64>() / n as f64;
    if (schur - 1.0).abs() > SCHUR_TOL {
        return Err(Error::NotIrreducible(schur));
    }
    Ok((d * d.min(d_e)) as f64 / n as f64)
}

/// Fourier vector `|f_b⟩ = Σ_m ω^{bm} |m⟩ / √d`.
fn fourier(d: usize, b: usize) -> Vec<c64> {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    (0..d).map(|m| c64::from_polar(1.0 / (d as f64).sqrt(), w * ((b * m) % d) as f64)).collect()
}

/// Perfect classically adaptive strategy for two copies of the clock-shift
/// ensemble (member `i = a d + b` is `X^a Z^b`): probe `|0⟩` and read `a` in
/// the computational basis, then probe `|f_0⟩` and read `b` in the Fourier
/// basis. Register size `L = d`.
pub fn theorem6_blocks(d: usize) -> Result<ClassicalStrategy> {
    if d < 2 {
        return Err(Error::BadParameter("clock-shift dimension must be ≥ 2".into()));
    }
    let first = (0..d).map(|j| linalg::kron(&linalg::ketbra(d, 0, 0), &linalg::ketbra(d, j, j))).collect();
    let f0 = fourier(d, 0);
    let probe = linalg::transpose(&linalg::outer(&f0, &f0));
    let zero = linalg::zeros(d * d, d * d);
    let second = (0..d)
        .map(|j| {
            (0..d * d)
                .map(|i| {
                    let (a, b) = (i / d, i % d);
                    if a != j {
                        return zero.clone();
                    }
                    let fb = fourier(d, b);
                    linalg::kron(&probe, &linalg::outer(&fb, &fb))
                })
                .collect()
        })
        .collect();
    Ok(ClassicalStrategy { first, second })
}

/// The strategy of [`theorem6_blocks`] as a two-copy tester.
pub fn theorem6_strategy(d: usize) -> Result<Tester> {
    theorem6_blocks(d)?.tester([(d, d), (d, d)])
}
