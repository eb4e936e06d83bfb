//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Eigen-decomposition of a hermitean matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let sym = (h + h.adjoint()) * re(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    hermitian_eigen(h).0
}

/// f(H) for hermitean H via its eigenbasis.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, v) = hermitian_eigen(h);
    let d = CVector::from_iterator(values.len(), values.iter().map(|&x| f(x)));
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * d[c]);
    scaled * v.adjoint()
}

/// exp(-i t H) for hermitean H.
pub fn evolution(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |x| Complex64::from_polar(1.0, -x * t))
}

/// exp(X) for anti-hermitean X.
pub fn exp_anti_hermitian(x: &CMatrix) -> CMatrix {
    evolution(&(x * I), 1.0)
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, rng);
    (&g + g.adjoint()) * re(0.5)
}

/// Random anti-hermitean matrix rescaled to the given operator norm.
pub fn random_anti_hermitian<R: Rng + ?Sized>(n: usize, norm: f64, rng: &mut R) -> CMatrix {
    let h = random_hermitian(n, rng) * I;
    let s = operator_norm(&h);
    h * re(norm / s)
}

pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the diagonal phases of R removed).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, rng).qr();
    let (q, r) = qr.unpack();
    let mut u = q;
    for c in 0..n {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for row in 0..n {
            u[(row, c)] *= phase;
        }
    }
    u
}

/// Matched distance between two eigenvalue lists (greedy nearest pairing).
pub fn matched_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut free: Vec<bool> = vec![true; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| free[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("lists have equal length");
        free[k] = false;
        worst = worst.max(d);
    }
    worst
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = ONE;
    v
}

pub fn permutation_matrix(map: &[usize]) -> CMatrix {
    let n = map.len();
    let mut p = CMatrix::zeros(n, n);
    for (from, &to) in map.iter().enumerate() {
        p[(to, from)] = ONE;
    }
    p
}
