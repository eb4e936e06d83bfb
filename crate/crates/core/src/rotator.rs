//! The harmonic rotator: an N-state cogwheel written as spin ℓ = (N−1)/2.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{HermitianOperator, UnitaryOperator};
use crate::linalg::{self, CMatrix, I};

/// Spin ℓ stored as 2ℓ so half-odd values stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotatorParams {
    twice_ell: usize,
}

impl RotatorParams {
    pub fn new(twice_ell: usize) -> Result<Self> {
        if twice_ell == 0 {
            return Err(Error::InvalidInput("ℓ must be at least 1/2".into()));
        }
        Ok(Self { twice_ell })
    }

    pub fn from_ell(ell: f64) -> Result<Self> {
        let t = (2.0 * ell).round();
        if (2.0 * ell - t).abs() > 1e-12 || t < 1.0 {
            return Err(Error::InvalidInput(format!("ℓ = {ell} is not a positive half-integer")));
        }
        Self::new(t as usize)
    }

    pub fn ell(&self) -> f64 {
        self.twice_ell as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice_ell + 1
    }

    pub fn is_half_odd(&self) -> bool {
        self.twice_ell % 2 == 1
    }

    /// Magnetic quantum number of basis index j (j = m + ℓ).
    pub fn m(&self, j: usize) -> f64 {
        j as f64 - self.ell()
    }

    /// Sign picked up when a state is carried once around the cycle.
    pub fn wrap_sign(&self) -> f64 {
        if self.is_half_odd() {
            -1.0
        } else {
            1.0
        }
    }
}

/// Operators in the energy basis, index j = m + ℓ.
#[derive(Debug, Clone)]
pub struct AngularOperators {
    pub l1: CMatrix,
    pub l2: CMatrix,
    pub l3: CMatrix,
    pub lplus: CMatrix,
    pub lminus: CMatrix,
    pub x: CMatrix,
    pub p: CMatrix,
    /// H = (2π/N)(L3 + ℓ), spectrum 2πk/N.
    pub h: CMatrix,
}

impl AngularOperators {
    pub fn algebra_defect(&self) -> f64 {
        let c = |a: &CMatrix, b: &CMatrix, target: &CMatrix| {
            linalg::max_abs_diff(&linalg::commutator(a, b), &(target * I))
        };
        c(&self.l1, &self.l2, &self.l3)
            .max(c(&self.l2, &self.l3, &self.l1))
            .max(c(&self.l3, &self.l1, &self.l2))
    }

    pub fn casimir_defect(&self, params: RotatorParams) -> f64 {
        let ell = params.ell();
        let l2 = &self.l1 * &self.l1 + &self.l2 * &self.l2 + &self.l3 * &self.l3;
        linalg::max_abs_diff(&l2, &(linalg::identity(params.dim()) * linalg::re(ell * (ell + 1.0))))
    }

    /// Max-abs deviation of [x,p] from i(1 − N H/(2πℓ)).
    pub fn modified_commutator_defect(&self, params: RotatorParams) -> f64 {
        let n = params.dim() as f64;
        let want = (linalg::identity(params.dim()) - &self.h * linalg::re(n / (TAU * params.ell()))) * I;
        linalg::max_abs_diff(&linalg::commutator(&self.x, &self.p), &want)
    }

    /// (2π/N)(p² + x² − 1)/2, the oscillator approximation near the bottom of the spectrum.
    pub fn oscillator_hamiltonian(&self, params: RotatorParams) -> CMatrix {
        let n = params.dim();
        (&self.p * &self.p + &self.x * &self.x - linalg::identity(n)) * linalg::re(PI / n as f64)
    }
}

pub fn build_operators(params: RotatorParams) -> AngularOperators {
    let n = params.dim();
    let twice = params.twice_ell as f64;
    let ell = params.ell();
    let mut lplus = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let kf = k as f64;
        lplus[(k + 1, k)] = linalg::re(((kf + 1.0) * (twice - kf)).sqrt());
    }
    let lminus = lplus.transpose();
    let l1 = (&lplus + &lminus) * linalg::re(0.5);
    let l2 = (&lplus - &lminus) * Complex64::new(0.0, -0.5);
    let l3 = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |j, _| linalg::re(params.m(j))));
    let h = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |j, _| linalg::re(TAU * j as f64 / n as f64)));
    let scale = linalg::re(1.0 / ell.sqrt());
    let x = &l1 * scale;
    let p = -&l2 * scale;
    AngularOperators { l1, l2, l3, lplus, lminus, x, p, h }
}

/// exp(2πiσ/N): |m> -> |m+1>, with |ℓ> -> ±|−ℓ> (minus for half-odd ℓ).
pub fn raise_operator(params: RotatorParams) -> UnitaryOperator {
    let n = params.dim();
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n - 1 {
        r[(j + 1, j)] = linalg::re(1.0);
    }
    r[(0, n - 1)] += linalg::re(params.wrap_sign());
    UnitaryOperator::new(r).expect("signed cyclic shifts are unitary")
}

/// The beable σ in the energy basis: ⟨m+k|σ|m⟩ = i(−1)^k / (2 sin(πk/N)), zero diagonal.
pub fn sigma_operator(params: RotatorParams) -> HermitianOperator {
    let n = params.dim();
    let mut s = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 1..n {
            let target = j + k;
            let wrap = if target >= n { params.wrap_sign() } else { 1.0 };
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let value = sign * wrap / (2.0 * (PI * k as f64 / n as f64).sin());
            s[(target % n, j)] = Complex64::new(0.0, value);
        }
    }
    HermitianOperator::new(s).expect("σ is hermitean by construction")
}

/// Columns |σ>_ont = N^{-1/2} Σ_m e^{−2πimσ/N} |m>, for σ = −ℓ..ℓ in ascending order.
pub fn ontological_basis(params: RotatorParams) -> CMatrix {
    let n = params.dim();
    let norm = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |j, c| {
        let m = params.m(j);
        let sigma = params.m(c);
        Complex64::from_polar(norm, -TAU * m * sigma / n as f64)
    })
}

/// exp(−iHt) in the energy basis.
pub fn evolution(params: RotatorParams, t: i64) -> CMatrix {
    let n = params.dim();
    CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |j, _| {
        Complex64::from_polar(1.0, -TAU * (j as f64) * t as f64 / n as f64)
    }))
}

/// True when U(t) carries every beable eigenstate |σ> onto |σ+t> (cyclically, up to a phase).
pub fn deterministic_evolution_check(params: RotatorParams, t: i64) -> bool {
    let n = params.dim() as i64;
    let basis = ontological_basis(params);
    let moved = basis.adjoint() * evolution(params, t) * &basis;
    (0..n).all(|j| {
        let target = (j + t).rem_euclid(n);
        (0..n).all(|r| {
            let amp = moved[(r as usize, j as usize)].norm();
            if r == target {
                (amp - 1.0).abs() < 1e-9
            } else {
                amp < 1e-9
            }
        })
    })
}

const RESCALE_ABOVE: f64 = 1e150;

/// Eigenvectors of L1 in the L3 basis: entry (j3, j1) = ⟨m3|m1⟩, columns ordered by m1 ascending.
///
/// Each column comes from the three-term recursion run from m3 = ℓ down to the middle of the
/// ladder, where it is stable, and is completed by the reflection symmetry m3 -> −m3. Columns
/// are normalised with ⟨m1|ℓ⟩ > 0, which makes the matrix symmetric.
pub fn x_frame_transform(params: RotatorParams) -> Result<UnitaryOperator> {
    let n = params.dim();
    let ell = params.ell();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for j1 in 0..n {
        let m1 = params.m(j1);
        let mut c = vec![0.0f64; n];
        c[n - 1] = 1.0;
        let lowest = n / 2;
        // c(m3−1) from the equation centred on m3.
        for j in (lowest + 1..n).rev() {
            let m3 = params.m(j);
            let up = if j + 1 < n { ((ell + m3 + 1.0) * (ell - m3)).sqrt() * c[j + 1] } else { 0.0 };
            let down = ((ell + m3) * (ell + 1.0 - m3)).sqrt();
            c[j - 1] = (2.0 * m1 * c[j] - up) / down;
            if c[j - 1].abs() > RESCALE_ABOVE {
                for v in &mut c[j - 1..] {
                    *v /= RESCALE_ABOVE;
                }
            }
        }
        // Rotation by π about the 1-axis maps m3 -> −m3 with sign (−1)^{ℓ−m1}.
        let parity = if ((ell - m1).round() as i64) % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 1 && parity < 0.0 {
            c[lowest] = 0.0;
        }
        for j3 in 0..lowest {
            c[j3] = parity * c[n - 1 - j3];
        }
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::RecursionUnderflow);
        }
        for (j3, v) in c.iter().enumerate() {
            out[(j3, j1)] = v / norm;
        }
    }
    UnitaryOperator::new(out.map(linalg::re))
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// ⟨m1|||m3⟩ on the de-normalised states ||m> = √((ℓ+m)!(ℓ−m)!) |m>, rows m1, columns m3.
pub fn denormalised_overlaps(params: RotatorParams) -> Result<DMatrix<f64>> {
    let n = params.dim();
    let t = x_frame_transform(params)?;
    let weight = |j: usize| 0.5 * (ln_factorial(j) + ln_factorial(n - 1 - j));
    Ok(DMatrix::from_fn(n, n, |j1, j3| {
        t.matrix()[(j3, j1)].re * (weight(j1) + weight(j3)).exp()
    }))
}

/// ⟨m1|σ>_ont, rows m1 ascending, columns σ ascending.
pub fn beable_overlaps(params: RotatorParams) -> Result<CMatrix> {
    let t = x_frame_transform(params)?;
    Ok(t.matrix().adjoint() * ontological_basis(params))
}
