//! Thin dense linear-algebra layer over `faer`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};

pub use faer::c64;

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn cplx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(r, c, |i, j| cplx(rows[i][j], 0.0))
}

pub fn from_rows(rows: &[&[c64]]) -> CMat {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn diag(v: &[c64]) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |i, j| if i == j { v[i] } else { ZERO })
}

pub fn rdiag(v: &[f64]) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |i, j| if i == j { cplx(v[i], 0.0) } else { ZERO })
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn transpose(a: &CMat) -> CMat {
    a.transpose().to_owned()
}

pub fn conj(a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn rscale(a: &CMat, s: f64) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Re Tr(A† B).
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let x = a[(i, j)];
            let y = b[(i, j)];
            s += x.re * y.re + x.im * y.im;
        }
    }
    s
}

/// Tr(A B) for square A, B of equal size.
pub fn trace_prod(a: &CMat, b: &CMat) -> c64 {
    let n = a.nrows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn fro_norm(a: &CMat) -> f64 {
    inner(a, a).sqrt()
}

/// max |A − A†|.
pub fn herm_dev(a: &CMat) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn hermitize(a: &CMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigenvalues (ascending) and eigenvectors of a hermitian matrix.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitize(a);
    let e = h
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigendecomposition failed");
    let s = e.S();
    let vals = (0..h.nrows()).map(|i| s[i].re).collect();
    (vals, e.U().to_owned())
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    let h = hermitize(a);
    h.self_adjoint_eigenvalues(Side::Lower)
        .expect("hermitian eigenvalues failed")
}

pub fn min_eig(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    eigvalsh(a)[0]
}

pub fn max_eig(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    *eigvalsh(a).last().unwrap()
}

/// V f(Λ) V† for a hermitian matrix.
pub fn herm_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, v) = eigh(a);
    let n = a.nrows();
    let mut vf = v.clone();
    for j in 0..n {
        let s = f(vals[j]);
        for i in 0..n {
            vf[(i, j)] *= s;
        }
    }
    &vf * v.adjoint()
}

/// Square root of a PSD matrix; negative eigenvalues are clipped to zero.
pub fn psd_sqrt(a: &CMat) -> CMat {
    herm_fn(a, |x| x.max(0.0).sqrt())
}

/// Moore–Penrose pseudo-inverse of a PSD matrix's square root: eigenvalues of
/// `a` below `rel * max` are treated as zero.
pub fn psd_pinv_sqrt(a: &CMat, rel: f64) -> CMat {
    let (vals, _) = eigh(a);
    let top = vals.iter().cloned().fold(0.0f64, f64::max);
    let cut = rel * top;
    herm_fn(a, |x| if x > cut && x > 0.0 { 1.0 / x.sqrt() } else { 0.0 })
}

/// Orthogonal projector onto the eigenspace with eigenvalues at most `rel * max`.
pub fn kernel_projector(a: &CMat, rel: f64) -> CMat {
    let (vals, _) = eigh(a);
    let top = vals.iter().cloned().fold(0.0f64, f64::max);
    let cut = rel * top;
    herm_fn(a, |x| if x > cut { 0.0 } else { 1.0 })
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

pub fn rinverse_spd(a: &RMat) -> Option<RMat> {
    a.llt(Side::Lower).ok().map(|l| l.inverse())
}

pub fn is_unitary(u: &CMat, tol: f64) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u;
    let dev = max_abs_diff(&p, &eye(u.nrows()));
    if dev > tol { dev } else { 0.0 }
}

/// Outer product |u⟩⟨v| of column vectors.
pub fn outer(u: &[c64], v: &[c64]) -> CMat {
    CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

pub fn basis_vec(n: usize, i: usize) -> Vec<c64> {
    let mut v = vec![ZERO; n];
    v[i] = ONE;
    v
}

pub fn ketbra(n: usize, i: usize, j: usize) -> CMat {
    CMat::from_fn(n, n, |r, c| if r == i && c == j { ONE } else { ZERO })
}

/// Direct sum of square blocks along the diagonal.
pub fn direct_sum(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let m = b.nrows();
        for j in 0..m {
            for i in 0..m {
                out[(off + i, off + j)] = b[(i, j)];
            }
        }
        off += m;
    }
    out
}

pub fn sub_block(a: &CMat, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
    CMat::from_fn(nr, nc, |i, j| a[(r0 + i, c0 + j)])
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
pub fn rsym_eig(a: &RMat) -> (Vec<f64>, RMat) {
    let n = a.nrows();
    let s = RMat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let e = s.self_adjoint_eigen(Side::Lower).expect("symmetric eigendecomposition failed");
    let d = e.S();
    ((0..n).map(|i| d[i]).collect(), e.U().to_owned())
}

/// Numerical rank of the row set `rows` (each of length `ncols`), using
/// the Gram matrix of the smaller side and a relative threshold.
pub fn rank_of_rows(rows: &[Vec<f64>], ncols: usize, rel: f64) -> usize {
    let m = rows.len();
    if m == 0 || ncols == 0 {
        return 0;
    }
    let g = if m <= ncols {
        RMat::from_fn(m, m, |i, j| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum())
    } else {
        let mut g = RMat::zeros(ncols, ncols);
        for r in rows {
            for i in 0..ncols {
                if r[i] == 0.0 {
                    continue;
                }
                for j in 0..ncols {
                    g[(i, j)] += r[i] * r[j];
                }
            }
        }
        g
    };
    let (vals, _) = rsym_eig(&g);
    let top = vals.iter().cloned().fold(0.0f64, f64::max);
    vals.iter().filter(|&&v| v > rel * rel * top && v > 0.0).count()
}
