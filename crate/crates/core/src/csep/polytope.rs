//! Inner polytopes of a party's state space and the resulting error bars
//! on polytope (seesaw-start) lower bounds.

use rayon::prelude::*;

use super::space::party_optimum;
use super::{ConstrainedSepProblem, Party};
use crate::linalg::{self, CMat, RMat};
use crate::sdpiface::{self, Sense, SolveOptions, Status};
use crate::{Error, Result};

/// Convex hull of constrained states with a reference point inside.
#[derive(Clone, Debug)]
pub struct Polytope {
    pub vertices: Vec<CMat>,
    pub reference: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeesawCertificate {
    pub r_v: f64,
    pub l_tau: f64,
    pub f_tau: f64,
    pub upper_from_bound: f64,
}

/// Vertex feasibility tolerance.
const VERTEX_TOL: f64 = 1e-9;
/// Largest number of vertex subsets tried during facet enumeration.
const MAX_SUBSETS: u128 = 5_000_000;

impl Polytope {
    pub fn new(vertices: Vec<CMat>, reference: CMat, party: &Party) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::GeometryError("polytope without vertices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.nrows() != party.dim || v.ncols() != party.dim {
                return Err(Error::DimMismatch(format!("vertex {i} has side {}", v.nrows())));
            }
            let bad = party.violation(v);
            if bad > VERTEX_TOL {
                return Err(Error::GeometryError(format!("vertex {i} violates the party constraint by {bad:.2e}")));
            }
        }
        if reference.nrows() != party.dim || party.violation(&reference) > VERTEX_TOL {
            return Err(Error::DegenerateReference);
        }
        Ok(Polytope { vertices, reference })
    }

    /// Reference point at the vertex average.
    pub fn with_centroid(vertices: Vec<CMat>, party: &Party) -> Result<Self> {
        let n = party.dim;
        let mut tau = linalg::zeros(n, n);
        for v in &vertices {
            tau += v;
        }
        let tau = linalg::rscale(&tau, 1.0 / vertices.len().max(1) as f64);
        Polytope::new(vertices, tau, party)
    }

    /// Pure qubit states with the given Bloch vectors.
    pub fn bloch(vectors: &[[f64; 3]], party: &Party) -> Result<Self> {
        let sx = crate::channels::pauli_x();
        let sy = crate::channels::pauli_y();
        let sz = crate::channels::pauli_z();
        let verts = vectors
            .iter()
            .map(|r| {
                let m = linalg::eye(2) + linalg::rscale(&sx, r[0]) + linalg::rscale(&sy, r[1]) + linalg::rscale(&sz, r[2]);
                linalg::rscale(&m, 0.5)
            })
            .collect();
        Polytope::new(verts, linalg::rscale(&linalg::eye(2), 0.5), party)
    }
}

/// Dimension of the tangent space `{X = X†: Tr X = 0, Φ(X) = 0}`.
fn tangent_rank(party: &Party) -> usize {
    let n = party.dim;
    let nc = n * n;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut tr = vec![0.0; nc];
    for i in 0..n {
        tr[i] = 1.0;
    }
    rows.push(tr);
    for row in party.constraint.hermitian_rows() {
        let mut v = vec![0.0; nc];
        for (k, a) in sdpiface::entry_coords(n, row.entries.iter().cloned()) {
            v[k] = a;
        }
        rows.push(v);
    }
    nc - linalg::rank_of_rows(&rows, nc, 1e-10)
}

/// Facets `{y : h·y ≤ c}` of the hull of `pts` in `R^r`, assumed full
/// dimensional with the origin inside.
fn facets(pts: &[Vec<f64>], r: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let m = pts.len();
    if r == 0 {
        return Ok(Vec::new());
    }
    let count = (0..r as u128).fold(1u128, |acc, i| acc * (m as u128 - i) / (i + 1));
    if count > MAX_SUBSETS {
        return Err(Error::GeometryError(format!("{count} vertex subsets exceed the enumeration limit")));
    }
    let scale = pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |a, &x| a.max(x.abs())).max(1e-300);
    let eps = 1e-9 * scale;
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        // hyperplane through the chosen points: normal spans the null space
        // of the difference vectors
        let base = &pts[idx[0]];
        let mut g = RMat::zeros(r, r);
        for t in 1..r {
            let d: Vec<f64> = pts[idx[t]].iter().zip(base).map(|(a, b)| a - b).collect();
            for i in 0..r {
                for j in 0..r {
                    g[(i, j)] += d[i] * d[j];
                }
            }
        }
        let (vals, vecs) = linalg::rsym_eig(&g);
        let top = vals.last().cloned().unwrap_or(0.0).max(1e-300);
        let simple = r == 1 || (vals[0] <= 1e-12 * top && vals[1] > 1e-9 * top);
        if simple {
            let mut h: Vec<f64> = (0..r).map(|i| vecs[(i, 0)]).collect();
            let mut c: f64 = h.iter().zip(base).map(|(a, b)| a * b).sum();
            if c < 0.0 {
                h.iter_mut().for_each(|x| *x = -*x);
                c = -c;
            }
            let side = pts.iter().all(|p| h.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() <= c + eps);
            if side {
                let dup = out.iter().any(|(h2, c2)| {
                    (c2 - c).abs() <= eps && h2.iter().zip(&h).all(|(a, b)| (a - b).abs() <= 1e-7)
                });
                if !dup {
                    out.push((h, c));
                }
            }
        }
        // next r-subset in lexicographic order
        let mut t = r;
        loop {
            if t == 0 {
                return Ok(out);
            }
            t -= 1;
            if idx[t] < m - r + t {
                idx[t] += 1;
                for u in t + 1..r {
                    idx[u] = idx[u - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Largest `t` with `t·Y + (1 − t)·τ ⊆ conv(vertices)`, `Y` the party's
/// constrained state space.
pub fn approximation_radius(v: &Polytope, party: &Party) -> Result<f64> {
    approximation_radius_with(v, party, &SolveOptions::default())
}

pub fn approximation_radius_with(v: &Polytope, party: &Party, opts: &SolveOptions) -> Result<f64> {
    let n = party.dim;
    let nc = n * n;
    let tau_c = sdpiface::block_to_coords(&v.reference);
    let diffs: Vec<Vec<f64>> = v
        .vertices
        .iter()
        .map(|x| sdpiface::block_to_coords(x).iter().zip(&tau_c).map(|(a, b)| a - b).collect())
        .collect();
    // orthonormal basis of the span of the shifted vertices
    let m = diffs.len();
    let gram = RMat::from_fn(m, m, |i, j| diffs[i].iter().zip(&diffs[j]).map(|(a, b)| a * b).sum());
    let (vals, vecs) = linalg::rsym_eig(&gram);
    let top = vals.last().cloned().unwrap_or(0.0);
    let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > 1e-14 * top && vals[i] > 1e-24).collect();
    let r = keep.len();
    if r < tangent_rank(party) {
        return Err(Error::DegenerateReference);
    }
    if r == 0 {
        return Ok(1.0);
    }
    // basis vectors u_t = Σ_i vecs[i,t] diffs_i / sqrt(λ_t)
    let basis: Vec<Vec<f64>> = keep
        .iter()
        .map(|&t| {
            let s = vals[t].sqrt();
            (0..nc).map(|k| (0..m).map(|i| vecs[(i, t)] * diffs[i][k]).sum::<f64>() / s).collect()
        })
        .collect();
    let pts: Vec<Vec<f64>> = diffs
        .iter()
        .map(|d| basis.iter().map(|u| u.iter().zip(d).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let fs = facets(&pts, r)?;
    if fs.is_empty() {
        return Err(Error::GeometryError("no facets found".into()));
    }
    let scale = pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |a, &x| a.max(x.abs()));
    if fs.iter().any(|(_, c)| *c <= 1e-9 * scale) {
        return Err(Error::DegenerateReference);
    }
    let ratios: Vec<Result<f64>> = fs
        .par_iter()
        .map(|(h, c)| {
            let hc: Vec<f64> = (0..nc).map(|k| h.iter().zip(&basis).map(|(a, u)| a * u[k]).sum()).collect();
            let hm = sdpiface::coords_to_block(&hc, n);
            let opt = party_optimum(party, &hm, Sense::Maximize, false, opts)?;
            if opt.status != Status::Optimal {
                return Err(Error::Solver(format!("facet support function: {:?}", opt.status)));
            }
            let m_h = opt.value - linalg::inner(&hm, &v.reference);
            Ok(if m_h <= *c { 1.0 } else { c / m_h })
        })
        .collect();
    let mut l = 1.0f64;
    for x in ratios {
        l = l.min(x?);
    }
    Ok(l)
}

/// `min_{ρ_B ∈ Y_B} Tr[Tr_A(F (τ ⊗ 1)) ρ_B]` with `τ` on party `tau_party`.
pub fn f_tau(p: &ConstrainedSepProblem, tau: &CMat, tau_party: usize) -> Result<f64> {
    if p.num_parties() != 2 || tau_party > 1 {
        return Err(Error::BadParameter("f_tau needs a two-party problem".into()));
    }
    let other = 1 - tau_party;
    let mut factors = vec![linalg::zeros(1, 1); 2];
    factors[tau_party] = tau.clone();
    factors[other] = linalg::eye(p.party(other).dim);
    let g = linalg::hermitize(&p.contract(other, &factors));
    let opt = party_optimum(p.party(other), &g, Sense::Minimize, true, &SolveOptions::default())?;
    if opt.status != Status::Optimal {
        return Err(Error::Solver(format!("f_tau: {:?}", opt.status)));
    }
    Ok(opt.value)
}

/// `[r_V, r_V/l + ((l−1)/l)·f]`.
pub fn seesaw_error_bound(r_v: f64, l: f64, f: f64) -> Result<Interval> {
    if !(l > 0.0 && l <= 1.0) {
        return Err(Error::BadRadius(l));
    }
    Ok(Interval { lower: r_v, upper: r_v / l + (l - 1.0) / l * f })
}

/// Polytope lower bound `r_V` (best vertex with the other party optimised),
/// with its radius, `f_τ` and the resulting upper endpoint.
pub fn polytope_certificate(p: &ConstrainedSepProblem, v: &Polytope, party: usize) -> Result<SeesawCertificate> {
    if p.num_parties() != 2 || party > 1 {
        return Err(Error::BadParameter("polytope certificates need a two-party problem".into()));
    }
    let other = 1 - party;
    let vals: Vec<Result<f64>> = v
        .vertices
        .par_iter()
        .map(|x| {
            let mut factors = vec![linalg::zeros(1, 1); 2];
            factors[party] = x.clone();
            factors[other] = linalg::eye(p.party(other).dim);
            let g = linalg::hermitize(&p.contract(other, &factors));
            let opt = party_optimum(p.party(other), &g, Sense::Maximize, true, &SolveOptions::default())?;
            if opt.status != Status::Optimal {
                return Err(Error::Solver(format!("vertex subproblem: {:?}", opt.status)));
            }
            Ok(opt.value)
        })
        .collect();
    let mut r_v = f64::NEG_INFINITY;
    for x in vals {
        r_v = r_v.max(x?);
    }
    let l = approximation_radius(v, p.party(party))?;
    let f = f_tau(p, &v.reference, party)?;
    let iv = seesaw_error_bound(r_v, l, f)?;
    Ok(SeesawCertificate { r_v, l_tau: l, f_tau: f, upper_from_bound: iv.upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> Party {
        Party::state("a", 2).unwrap()
    }

    #[test]
    fn octahedron_and_cube_radius() {
        let oct = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        let l = approximation_radius(&Polytope::bloch(&oct, &qubit()).unwrap(), &qubit()).unwrap();
        assert!((l - 1.0 / 3f64.sqrt()).abs() < 1e-9, "{l}");
        let s = 1.0 / 3f64.sqrt();
        let mut cube = Vec::new();
        for a in [-s, s] {
            for b in [-s, s] {
                for c in [-s, s] {
                    cube.push([a, b, c]);
                }
            }
        }
        let l = approximation_radius(&Polytope::bloch(&cube, &qubit()).unwrap(), &qubit()).unwrap();
        assert!((l - s).abs() < 1e-9, "{l}");
    }

    #[test]
    fn tetrahedron_radius() {
        let s = 1.0 / 3f64.sqrt();
        let tet = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let l = approximation_radius(&Polytope::bloch(&tet, &qubit()).unwrap(), &qubit()).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-9, "{l}");
    }

    #[test]
    fn flat_polytope_is_degenerate() {
        let sq = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]];
        let err = approximation_radius(&Polytope::bloch(&sq, &qubit()).unwrap(), &qubit()).unwrap_err();
        assert_eq!(err, Error::DegenerateReference);
    }

    #[test]
    fn error_interval_arithmetic() {
        let iv = seesaw_error_bound(0.5, 0.5, 0.0).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.5, 1.0));
        let iv = seesaw_error_bound(0.3, 1.0, 0.1).unwrap();
        assert_eq!(iv.lower, iv.upper);
        assert_eq!(seesaw_error_bound(0.3, 0.0, 0.1).unwrap_err(), Error::BadRadius(0.0));
    }
}
