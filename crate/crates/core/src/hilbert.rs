//! Finite-dimensional unitaries, their eigenphases and Hamiltonians.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I};

pub const MAX_DIM: usize = 4096;
const UNITARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct UnitaryOperator(CMatrix);

impl UnitaryOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 || m.nrows() > MAX_DIM {
            return Err(Error::UnsupportedShape(format!("{}x{} unitary", m.nrows(), m.ncols())));
        }
        let defect = linalg::unitarity_defect(&m);
        if defect > UNITARITY_TOL {
            return Err(Error::NonUnitary { defect });
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn inverse(&self) -> CMatrix {
        self.0.adjoint()
    }
}

#[derive(Debug, Clone)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    /// Symmetrises away rounding noise; rejects genuinely non-hermitean input.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::UnsupportedShape(format!("{}x{} hermitean", m.nrows(), m.ncols())));
        }
        let scale = linalg::max_abs(&m).max(1.0);
        if linalg::hermiticity_defect(&m) > 1e-8 * scale {
            return Err(Error::InvalidInput("matrix is not hermitean".into()));
        }
        Ok(Self((&m + m.adjoint()) * linalg::re(0.5)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0)
    }

    /// exp(-i t H).
    pub fn evolve(&self, t: f64) -> CMatrix {
        linalg::evolution(&self.0, t)
    }
}

/// Eigenphases ω in [0, 2π) with U = V diag(e^{-iω}) V†.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMatrix {
        self.with_diagonal(|w| Complex64::from_polar(1.0, -w))
    }

    fn with_diagonal(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let v = &self.vectors;
        let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * f(self.phases[c]));
        scaled * v.adjoint()
    }
}

/// Wrap an angle into [0, 2π), sending values within rounding of 2π to 0.
pub fn wrap_phase(w: f64) -> f64 {
    let r = w.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r
    }
}

/// Generic rotation so that pairs ω, 2θ−ω sharing cos(ω−θ) are unlikely among physical spectra.
const SPLIT_ANGLE: f64 = 0.371_902_815_3;
const CLUSTER_TOL: f64 = 1e-6;

/// Joint eigenbasis of the commuting hermitean parts of e^{iθ}U: diagonalise the real part,
/// then separate each degenerate cluster with the imaginary part.
pub fn eigenphases(u: &UnitaryOperator) -> Result<Spectrum> {
    let n = u.dim();
    let rot = u.matrix() * Complex64::from_polar(1.0, SPLIT_ANGLE);
    let re_part = (&rot + rot.adjoint()) * linalg::re(0.5);
    let im_part = (&rot - rot.adjoint()) * Complex64::new(0.0, -0.5);
    let (vals, vecs) = linalg::hermitian_eigen(&re_part);
    let mut basis = CMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < CLUSTER_TOL {
            end += 1;
        }
        let block = vecs.columns(start, end - start).into_owned();
        let inner = block.adjoint() * &im_part * &block;
        let (_, w) = linalg::hermitian_eigen(&inner);
        basis.columns_mut(start, end - start).copy_from(&(block * w));
        start = end;
    }
    let diag = basis.adjoint() * u.matrix() * &basis;
    let mut order: Vec<(f64, usize)> = (0..n).map(|k| (wrap_phase(-diag[(k, k)].arg()), k)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let phases = order.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| basis[(r, order[c].1)]);
    Ok(Spectrum { phases, vectors })
}

/// H with exp(-iH) = U; `shifts` adds a multiple of 2π (or any offset) per eigenvector.
pub fn hamiltonian_from_unitary(u: &UnitaryOperator, shifts: Option<&[f64]>) -> Result<HermitianOperator> {
    let spec = eigenphases(u)?;
    if let Some(s) = shifts {
        if s.len() != spec.phases.len() {
            return Err(Error::InvalidInput(format!("{} shifts for dimension {}", s.len(), spec.phases.len())));
        }
    }
    let shifted = Spectrum {
        phases: spec
            .phases
            .iter()
            .enumerate()
            .map(|(k, w)| w + shifts.map_or(0.0, |s| s[k]))
            .collect(),
        vectors: spec.vectors,
    };
    HermitianOperator::new(shifted.with_diagonal(|w| Complex64::new(w, 0.0)))
}

/// Shift register |k> -> |k+1 mod n>.
pub fn shift_register(n: usize) -> UnitaryOperator {
    let map: Vec<usize> = (0..n).map(|k| (k + 1) % n).collect();
    UnitaryOperator(linalg::permutation_matrix(&map))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierScheme {
    /// π − i Σ (1/n)(Uⁿ − U⁻ⁿ) e^{−n/R}; R is the damping length.
    PlainDamped,
    /// Odd powers of sin ω with arcsin coefficients; R is the highest power index.
    ArcsinCenter,
    /// sin ω · Σ b_k ((1 − cos ω)/2)^k; R is the highest k.
    Stretched,
}

impl FourierScheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::PlainDamped => "plain-damped",
            Self::ArcsinCenter => "arcsin-center",
            Self::Stretched => "stretched",
        }
    }
}

impl std::str::FromStr for FourierScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-damped" => Ok(Self::PlainDamped),
            "arcsin-center" => Ok(Self::ArcsinCenter),
            "stretched" => Ok(Self::Stretched),
            other => Err(Error::InvalidInput(format!("unknown scheme {other}"))),
        }
    }
}

/// a_n = (2n)! / (4ⁿ (n!)² (2n+1)): arcsin x = Σ a_n x^{2n+1}.
pub fn arcsin_coefficients(order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut central = 1.0;
    for n in 0..=order {
        if n > 0 {
            central *= (2 * n - 1) as f64 / (2 * n) as f64;
        }
        out.push(central / (2 * n + 1) as f64);
    }
    out
}

/// b_k = 4^k (k!)² / (2k+1)!: ω = sin ω Σ b_k ((1 − cos ω)/2)^k.
pub fn stretched_coefficients(order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut b = 1.0;
    for k in 0..=order {
        if k > 0 {
            b *= (2 * k) as f64 / (2 * k + 1) as f64;
        }
        out.push(b);
    }
    out
}

/// Number of damped Fourier terms kept: beyond it e^{−n/R} is below double precision.
fn damped_terms(cutoff: f64) -> usize {
    (cutoff * 37.0).ceil() as usize
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff >= 1.0 && cutoff.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("cutoff {cutoff} must be at least 1")))
    }
}

/// Scalar image of an eigenphase ω under the truncated series.
pub fn approx_curve(omega: f64, cutoff: f64, scheme: FourierScheme) -> f64 {
    match scheme {
        FourierScheme::PlainDamped => {
            let r = (-1.0 / cutoff).exp();
            PI - 2.0 * (r * omega.sin()).atan2(1.0 - r * omega.cos())
        }
        FourierScheme::ArcsinCenter => {
            let s = omega.sin();
            let s2 = s * s;
            arcsin_coefficients(cutoff as usize)
                .iter()
                .rev()
                .fold(0.0, |acc, a| acc * s2 + a)
                * s
        }
        FourierScheme::Stretched => {
            let h = (1.0 - omega.cos()) / 2.0;
            stretched_coefficients(cutoff as usize)
                .iter()
                .rev()
                .fold(0.0, |acc, b| acc * h + b)
                * omega.sin()
        }
    }
}

fn horner(coeffs: &[f64], x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    coeffs
        .iter()
        .rev()
        .fold(CMatrix::zeros(n, n), |acc, &c| acc * x + linalg::identity(n) * linalg::re(c))
}

/// The truncated operator series built from powers of U and U⁻¹.
pub fn fourier_hamiltonian_series(u: &UnitaryOperator, cutoff: f64, scheme: FourierScheme) -> Result<HermitianOperator> {
    check_cutoff(cutoff)?;
    let n = u.dim();
    let uu = u.matrix();
    let ui = u.inverse();
    let h = match scheme {
        FourierScheme::PlainDamped => {
            let mut acc = linalg::identity(n) * linalg::re(PI);
            let mut up = linalg::identity(n);
            let mut dn = linalg::identity(n);
            for k in 1..=damped_terms(cutoff) {
                up = &up * uu;
                dn = &dn * &ui;
                let w = (-(k as f64) / cutoff).exp() / k as f64;
                acc -= (&up - &dn) * (I * w);
            }
            acc
        }
        FourierScheme::ArcsinCenter => {
            let sin = (uu - &ui) * (I * 0.5);
            let s2 = &sin * &sin;
            horner(&arcsin_coefficients(cutoff as usize), &s2) * sin
        }
        FourierScheme::Stretched => {
            let sin = (uu - &ui) * (I * 0.5);
            let half = (linalg::identity(n) * linalg::re(2.0) - uu - &ui) * linalg::re(0.25);
            horner(&stretched_coefficients(cutoff as usize), &half) * sin
        }
    };
    HermitianOperator::new(h)
}

/// exp(-iH) from a hermitean H; returned unitary is checked.
pub fn unitary_from_hamiltonian(h: &HermitianOperator, t: f64) -> Result<UnitaryOperator> {
    UnitaryOperator::new(h.evolve(t))
}

pub fn identity_unitary(n: usize) -> UnitaryOperator {
    UnitaryOperator(linalg::identity(n))
}

pub fn is_identity(m: &CMatrix, tol: f64) -> bool {
    linalg::max_abs_diff(m, &linalg::identity(m.nrows())) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    /// Cayley oracle: A = i(1−U)(1+U)⁻¹ is hermitean with eigenvalues tan(ω/2)·(−1).
    fn cayley_phases(u: &CMatrix) -> Vec<f64> {
        let n = u.nrows();
        let id = linalg::identity(n);
        let a = (&id - u) * (&id + u).try_inverse().unwrap() * I;
        let a = (&a + a.adjoint()) * linalg::re(0.5);
        let mut w: Vec<f64> = SymmetricEigen::new(a)
            .eigenvalues
            .iter()
            .map(|t| wrap_phase(-2.0 * t.atan()))
            .collect();
        w.sort_by(f64::total_cmp);
        w
    }

    #[test]
    fn three_cycle_phases() {
        let s = eigenphases(&shift_register(3)).unwrap();
        let want = [0.0, TAU / 3.0, 2.0 * TAU / 3.0];
        for (a, b) in s.phases.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn identity_phases_are_zero() {
        let s = eigenphases(&identity_unitary(5)).unwrap();
        assert!(s.phases.iter().all(|&w| w == 0.0));
        let h = hamiltonian_from_unitary(&identity_unitary(5), None).unwrap();
        assert!(linalg::max_abs(h.matrix()) < 1e-14);
    }

    #[test]
    fn haar_phases_match_cayley_oracle() {
        let mut r = rng::stream(11, 0);
        for _ in 0..5 {
            let u = linalg::haar_unitary(4, &mut r);
            let ours = eigenphases(&UnitaryOperator::new(u.clone()).unwrap()).unwrap().phases;
            let oracle = cayley_phases(&u);
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{ours:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn three_cycle_hamiltonian_entries() {
        let h = hamiltonian_from_unitary(&shift_register(3), None).unwrap();
        let pre = TAU / 3.0;
        let kappa = Complex64::new(-0.5, 3f64.sqrt() / 6.0);
        let m = h.matrix();
        for r in 0..3 {
            assert!((m[(r, r)] - pre).norm() < 1e-12);
            // Row k holds κ one column to the right and κ* one column to the left.
            assert!((m[(r, (r + 1) % 3)] - pre * kappa).norm() < 1e-12);
            assert!((m[((r + 1) % 3, r)] - pre * kappa.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let m = linalg::identity(2) * linalg::re(1.1);
        assert!(matches!(UnitaryOperator::new(m), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn shifts_move_eigenvalues_by_full_turns() {
        let u = shift_register(4);
        let shifts = [0.0, TAU, 0.0, -TAU];
        let h = hamiltonian_from_unitary(&u, Some(&shifts)).unwrap();
        let base = eigenphases(&u).unwrap().phases;
        let mut want: Vec<f64> = base.iter().zip(shifts).map(|(w, s)| w + s).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in h.eigenvalues().iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(linalg::max_abs_diff(&h.evolve(1.0), u.matrix()) < 1e-9);
    }

    #[test]
    fn damped_curve_closed_form() {
        for &r in &[2.0, 10.0, 100.0] {
            for k in 1..40 {
                let w = PI * k as f64 / 40.0;
                let closed = 2.0 * (((1.0f64 / r).exp() - w.cos()) / w.sin()).atan();
                assert_relative_eq!(approx_curve(w, r, FourierScheme::PlainDamped), closed, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn damped_curve_small_omega_and_vacuum_edge() {
        let r = 1000.0;
        let w = 0.3;
        let c = approx_curve(w, r, FourierScheme::PlainDamped);
        assert!((c - (w + 2.0 / (r * w))).abs() < 1e-3);
        let (wmin, _) = (1..2000)
            .map(|k| k as f64 * 1e-4)
            .map(|w| (w, approx_curve(w, r, FourierScheme::PlainDamped)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let w0 = (2.0 / r).sqrt();
        assert!((wmin - w0).abs() / w0 < 0.05, "{wmin} vs {w0}");
        assert_eq!(approx_curve(0.0, r, FourierScheme::PlainDamped), PI);
    }

    #[test]
    fn damped_curve_converges_with_halving() {
        let dev = |r: f64| {
            (0..=400)
                .map(|k| 0.5 + (TAU - 1.0) * k as f64 / 400.0)
                .map(|w| (approx_curve(w, r, FourierScheme::PlainDamped) - w).abs())
                .fold(0.0, f64::max)
        };
        // The leading deviation is 1/R; the ratio approaches 1/2 from above through 1/R² terms.
        let ratios: Vec<f64> = [8.0, 16.0, 32.0, 64.0, 128.0].iter().map(|&r| dev(2.0 * r) / dev(r)).collect();
        assert!(ratios.iter().all(|&q| q < 0.52), "{ratios:?}");
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        assert!((ratios[4] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn coefficient_tables() {
        let a = arcsin_coefficients(3);
        for (x, y) in a.iter().zip([1.0, 1.0 / 6.0, 3.0 / 40.0, 5.0 / 112.0]) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
        let b = stretched_coefficients(4);
        for (x, y) in b.iter().zip([1.0, 2.0 / 3.0, 8.0 / 15.0, 16.0 / 35.0, 128.0 / 315.0]) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn arcsin_error_order() {
        // Truncation error at small ω scales as ω^{2n+3}: halving ω divides it by 2^{2n+3}.
        for n in 0..4 {
            let err = |w: f64| (approx_curve(w, n as f64, FourierScheme::ArcsinCenter) - w).abs();
            let ratio = err(0.2) / err(0.1);
            let want = 2f64.powi(2 * n + 3);
            assert!((ratio / want - 1.0).abs() < 0.1, "n={n} ratio={ratio}");
            assert!(err(0.5) < 0.5f64.powi(2 * n + 3));
        }
    }

    #[test]
    fn operator_series_match_scalar_curves() {
        let mut r = rng::stream(5, 1);
        let u = UnitaryOperator::new(linalg::haar_unitary(5, &mut r)).unwrap();
        let spec = eigenphases(&u).unwrap();
        for scheme in [FourierScheme::PlainDamped, FourierScheme::ArcsinCenter, FourierScheme::Stretched] {
            let cutoff = 6.0;
            let h = fourier_hamiltonian_series(&u, cutoff, scheme).unwrap();
            let want = Spectrum {
                phases: spec.phases.clone(),
                vectors: spec.vectors.clone(),
            }
            .with_diagonal(|w| Complex64::new(approx_curve(w, cutoff, scheme), 0.0));
            assert!(linalg::max_abs_diff(h.matrix(), &want) < 1e-9, "{scheme:?}");
        }
    }

    #[test]
    fn stretched_converges_inside_branch() {
        let w: f64 = 2.5;
        let e40 = (approx_curve(w, 40.0, FourierScheme::Stretched) - w).abs();
        let e160 = (approx_curve(w, 160.0, FourierScheme::Stretched) - w).abs();
        assert!(e160 < e40 && e160 < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip(seed in 0u64..1000, n in 1usize..7) {
            let mut r = rng::stream(seed, 2);
            let u = UnitaryOperator::new(linalg::haar_unitary(n, &mut r)).unwrap();
            let spec = eigenphases(&u).unwrap();
            prop_assert!(linalg::max_abs_diff(&spec.reconstruct(), u.matrix()) < 1e-9);
            prop_assert!(spec.phases.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(spec.phases.iter().all(|&w| (0.0..TAU).contains(&w)));
            let h = hamiltonian_from_unitary(&u, None).unwrap();
            let back = h.evolve(1.0) * u.matrix().adjoint();
            prop_assert!(is_identity(&back, 1e-9));
        }

        #[test]
        fn round_trip_on_degenerate_permutations(seed in 0u64..1000, n in 1usize..24) {
            use rand::seq::SliceRandom;
            let mut r = rng::stream(seed, 3);
            let mut map: Vec<usize> = (0..n).collect();
            map.shuffle(&mut r);
            let u = UnitaryOperator::new(linalg::permutation_matrix(&map)).unwrap();
            let spec = eigenphases(&u).unwrap();
            prop_assert!(linalg::unitarity_defect(&spec.vectors) < 1e-9);
            prop_assert!(linalg::max_abs_diff(&spec.reconstruct(), u.matrix()) < 1e-9);
        }
    }
}
