//! Explicit strategies and the corresponding feasible points of compiled
//! problems.

use crate::linalg::{self, CMat};
use crate::qops::{sys, LabeledOperator};
use crate::testers::{Tester, TesterKind, I1, I2, O1, O2};
use crate::{Error, Result};

/// Factors `[⊕_i M^i / d_O, ρ]` of the memoryless compile.
pub fn memoryless_point(rho: &CMat, povm: &[CMat]) -> Vec<CMat> {
    let d_o = povm[0].nrows();
    vec![linalg::rscale(&linalg::direct_sum(povm), 1.0 / d_o as f64), rho.clone()]
}

/// Sequential strategy: state `ρ` on I1, instrument Chois `K^j` on
/// `[O1, I2]`, conditional POVMs `M^{i|j}` on O2 indexed `[j][i]`.
#[derive(Clone, Debug)]
pub struct AdaptiveStrategy {
    pub rho: CMat,
    pub instrument: Vec<CMat>,
    pub measurement: Vec<Vec<CMat>>,
}

impl AdaptiveStrategy {
    /// `T^i = Σ_j ρᵀ ⊗ (K^j)ᵀ ⊗ M^{i|j}` on `[I1, O1, I2, O2]`.
    pub fn tester(&self, dims: [(usize, usize); 2]) -> Result<Tester> {
        if self.instrument.len() != self.measurement.len() {
            return Err(Error::DimMismatch("one conditional POVM per instrument outcome".into()));
        }
        let [(a, b), (c, d)] = dims;
        let n = self.measurement[0].len();
        let rt = linalg::transpose(&self.rho);
        let elements = (0..n)
            .map(|i| {
                let mut acc = linalg::zeros(a * b * c * d, a * b * c * d);
                for (k, m) in self.instrument.iter().zip(&self.measurement) {
                    acc += linalg::kron(&linalg::kron(&rt, &linalg::transpose(k)), &m[i]);
                }
                LabeledOperator::new(vec![sys(I1, a), sys(O1, b), sys(I2, c), sys(O2, d)], acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Tester::new(TesterKind::Adaptive2, elements)
    }

    /// Factors `[⊕_{j,i} M^{i|j} / (L d_O2), ⊕_j K^j / d_O1, ρ]` of the
    /// adaptive compile with `L` = number of instrument outcomes.
    pub fn point(&self, dims: [(usize, usize); 2]) -> Vec<CMat> {
        let [(_, b), (_, d)] = dims;
        let l = self.instrument.len();
        let flat: Vec<CMat> = self.measurement.iter().flatten().cloned().collect();
        vec![
            linalg::rscale(&linalg::direct_sum(&flat), 1.0 / (l * d) as f64),
            linalg::rscale(&linalg::direct_sum(&self.instrument), 1.0 / b as f64),
            self.rho.clone(),
        ]
    }
}

/// Classically adaptive strategy in normal form: first-round tester
/// elements `R^j` on `[I1, O1]` and second-round testers `S^{i|j}` on
/// `[I2, O2]` indexed `[j][i]`.
#[derive(Clone, Debug)]
pub struct ClassicalStrategy {
    pub first: Vec<CMat>,
    pub second: Vec<Vec<CMat>>,
}

impl ClassicalStrategy {
    /// `T^i = Σ_j R^j ⊗ S^{i|j}` with the per-copy dimensions given.
    pub fn tester(&self, dims: [(usize, usize); 2]) -> Result<Tester> {
        if self.first.len() != self.second.len() {
            return Err(Error::DimMismatch("one second-round tester per register value".into()));
        }
        let [(a, b), (c, d)] = dims;
        let n = self.second[0].len();
        let elements = (0..n)
            .map(|i| {
                let mut acc = linalg::zeros(a * b * c * d, a * b * c * d);
                for (r, s) in self.first.iter().zip(&self.second) {
                    acc += linalg::kron(r, &s[i]);
                }
                LabeledOperator::new(vec![sys(I1, a), sys(O1, b), sys(I2, c), sys(O2, d)], acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Tester::new(TesterKind::ClassicallyAdaptive2, elements)
    }

    /// Factors `[⊕_{j,i} S^{i|j} / (L d_O2), ⊕_j R^j / d_O1]` of the
    /// classically adaptive compile.
    pub fn point(&self, dims: [(usize, usize); 2]) -> Vec<CMat> {
        let [(_, b), (_, d)] = dims;
        let l = self.first.len();
        let flat: Vec<CMat> = self.second.iter().flatten().cloned().collect();
        vec![
            linalg::rscale(&linalg::direct_sum(&flat), 1.0 / (l * d) as f64),
            linalg::rscale(&linalg::direct_sum(&self.first), 1.0 / b as f64),
        ]
    }
}
