//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigenpairs of a Hermitian matrix, ascending in energy. Each eigenvector is
/// rephased so that its largest-magnitude component is real and positive.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.clone().symmetric_eigen();
    let mut v = eig.eigenvectors;
    let mut a = v.adjoint() * &herm * &v;
    jacobi_polish(&mut a, &mut v);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vals.push(a[(k, k)].re);
        vecs.set_column(col, &fix_phase(v.column(k).into_owned()));
    }
    (vals, vecs)
}

/// Cyclic complex Jacobi sweeps on a nearly diagonal Hermitian `a`,
/// accumulating the rotations into `v`.
fn jacobi_polish(a: &mut CMat, v: &mut CMat) {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..20 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let m = apq.norm();
                if m <= 1e-18 * scale {
                    continue;
                }
                // Make a_pq real positive, then apply a real rotation.
                let u = apq / m;
                let uc = u.conj();
                for k in 0..n {
                    a[(k, q)] *= uc;
                    v[(k, q)] *= uc;
                }
                for k in 0..n {
                    a[(q, k)] *= u;
                }
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * m);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * c - y * s;
                    a[(k, q)] = x * s + y * c;
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * c - y * s;
                    v[(k, q)] = x * s + y * c;
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = x * c - y * s;
                    a[(q, k)] = x * s + y * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }
}

/// Rephases so that the largest-magnitude entry is real positive. Ties are
/// broken by the lowest index.
pub fn fix_phase(mut v: CVec) -> CVec {
    let mut best = 0;
    let mut mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        // Entries equal to within rounding are treated as ties.
        if z.norm() > mag * (1.0 + 1e-9) {
            mag = z.norm();
            best = i;
        }
    }
    if mag > 0.0 {
        let ph = v[best].conj() / v[best].norm();
        v *= ph;
        v[best] = C64::new(v[best].norm(), 0.0);
    }
    v
}

/// `U† A U`
pub fn transform(a: &CMat, u: &CMat) -> CMat {
    u.adjoint() * a * u
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_error(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// Kronecker product of a list of square matrices.
pub fn kron_all(ms: &[&CMat]) -> CMat {
    let mut out = CMat::from_element(1, 1, ONE);
    for m in ms {
        out = out.kronecker(m);
    }
    out
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real-symmetric eigen-decomposition, ascending.
pub fn eigh_real(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[k]);
        let mut v = eig.eigenvectors.column(k).into_owned();
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
        vecs.set_column(col, &v);
    }
    (vals, vecs)
}
