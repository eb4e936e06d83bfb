//! Massless spin-½ particle in terms of commuting beables: sheet orientation q̂ (upper
//! hemisphere), sign s and distance r, with the spinor change of basis and vacuum correlations.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I, ONE, ZERO};
use crate::quadrature::Composite;

pub type Spin2 = Matrix2<Complex64>;
/// (row, column, value) of a sparse matrix.
pub type SparseEntry = (usize, usize, Complex64);

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Unit vector on the closed upper hemisphere. On the equator the representative has q₂ > 0, or
/// q₂ = 0 and q₁ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

fn in_upper_half(q: &Vector3<f64>) -> bool {
    q.z > 0.0 || (q.z == 0.0 && (q.y > 0.0 || (q.y == 0.0 && q.x > 0.0)))
}

impl Direction {
    pub fn new(q: [f64; 3]) -> Result<Self> {
        let v = Vector3::from(q);
        if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidInput(format!("|q̂| = {} is not 1", v.norm())));
        }
        if !in_upper_half(&v) {
            return Err(Error::InvalidInput("q̂ must lie on the upper hemisphere".into()));
        }
        Ok(Self(v))
    }

    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        Self::new([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
    }

    /// Splits a momentum into q̂ on the upper hemisphere and signed p_r with p = q̂ p_r.
    pub fn from_momentum(p: [f64; 3]) -> Result<(Self, f64)> {
        let v = Vector3::from(p);
        let len = v.norm();
        if len == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        let sign = if in_upper_half(&v) { 1.0 } else { -1.0 };
        Ok((Self(v * (sign / len)), sign * len))
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }
}

/// Sheet at distance r along q̂, moving with velocity s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetState {
    pub qhat: Direction,
    pub s: Sign,
    pub r: f64,
}

impl SheetState {
    pub fn evolve(&self, t: f64) -> Self {
        Self { r: self.r + self.s.value() * t, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeableSpinor(pub Vector2<Complex64>);

pub fn sigma_dot(v: &Vector3<f64>) -> Spin2 {
    Spin2::new(
        linalg::re(v.z),
        Complex64::new(v.x, -v.y),
        Complex64::new(v.x, v.y),
        linalg::re(-v.z),
    )
}

pub fn pauli() -> [Spin2; 3] {
    [
        sigma_dot(&Vector3::x()),
        sigma_dot(&Vector3::y()),
        sigma_dot(&Vector3::z()),
    ]
}

/// Eigenspinor of q̂·σ with eigenvalue s, in the phase convention where s₁ = θ̂·σ swaps χ⁺ and χ⁻.
/// Any unit q with q₃ ≠ −1 is accepted; at q₃ = 1 the lower spinor takes its φ = 0 limit.
pub fn spinor(q: [f64; 3], s: Sign) -> Result<BeableSpinor> {
    let [q1, q2, q3] = q;
    if (q3 + 1.0).abs() < UNIT_TOLERANCE {
        return Err(Error::PoleAtSouth);
    }
    let plus = 1.0 + q3;
    let chi = match s {
        Sign::Plus => Vector2::new(linalg::re((plus / 2.0).sqrt()), Complex64::new(q1, q2) / (2.0 * plus).sqrt()),
        Sign::Minus if 1.0 - q3 < UNIT_TOLERANCE => Vector2::new(ZERO, ONE),
        Sign::Minus => {
            let minus = 1.0 - q3;
            Vector2::new(linalg::re(-(minus / 2.0).sqrt()), Complex64::new(q1, q2) / (2.0 * minus).sqrt())
        }
    };
    Ok(BeableSpinor(chi))
}

/// Right-handed orthonormal triad (θ̂, φ̂, q̂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub theta: Vector3<f64>,
    pub phi: Vector3<f64>,
    pub q: Vector3<f64>,
}

impl Frame {
    pub fn new(q: [f64; 3]) -> Result<Self> {
        let [q1, q2, q3] = q;
        let rho2 = 1.0 - q3 * q3;
        if rho2 < UNIT_TOLERANCE {
            return Err(Error::PoleAtSouth);
        }
        let rho = rho2.sqrt();
        Ok(Self {
            theta: Vector3::new(q3 * q1, q3 * q2, q3 * q3 - 1.0) / rho,
            phi: Vector3::new(-q2, q1, 0.0) / rho,
            q: Vector3::from(q),
        })
    }

    /// cot θ = q₃/√(1 − q₃²).
    pub fn cot_theta(&self) -> f64 {
        self.q.z / (1.0 - self.q.z * self.q.z).sqrt()
    }

    /// The sign-flip operators s₁ = θ̂·σ, s₂ = φ̂·σ, s₃ = q̂·σ.
    pub fn operators(&self) -> [Spin2; 3] {
        [sigma_dot(&self.theta), sigma_dot(&self.phi), sigma_dot(&self.q)]
    }

    /// σ_i rebuilt as θ_i s₁ + φ_i s₂ + q_i s₃.
    pub fn pauli_reconstruction(&self) -> [Spin2; 3] {
        let [s1, s2, s3] = self.operators();
        std::array::from_fn(|i| s1 * linalg::re(self.theta[i]) + s2 * linalg::re(self.phi[i]) + s3 * linalg::re(self.q[i]))
    }

    /// ½(θ_i s₁ + φ_i s₂ − cot θ θ_i s₃): added to the orbital L_i it gives the rotation generator
    /// that commutes with every s_j.
    pub fn ontological_correction(&self) -> [Spin2; 3] {
        let [s1, s2, s3] = self.operators();
        let cot = self.cot_theta();
        std::array::from_fn(|i| {
            (s1 * linalg::re(self.theta[i]) + s2 * linalg::re(self.phi[i]) - s3 * linalg::re(cot * self.theta[i]))
                * linalg::re(0.5)
        })
    }
}

/// Cubic momentum grid p = dp·(n₁, n₂, n₃) with |n_i| ≤ half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub half: i64,
    pub dp: f64,
}

impl MomentumGrid {
    pub fn points(&self) -> Vec<[i64; 3]> {
        let r = -self.half..=self.half;
        r.clone()
            .flat_map(|a| r.clone().flat_map(move |b| (-self.half..=self.half).map(move |c| [a, b, c])))
            .collect()
    }

    pub fn momentum(&self, n: [i64; 3]) -> [f64; 3] {
        n.map(|v| v as f64 * self.dp)
    }

    fn cell(&self) -> f64 {
        self.dp.powi(3)
    }

    /// ⟨p,α|q̂,p_r,s⟩ = p_r δ³(p − q̂p_r) χ^s_α(q̂) between grid-normalised states: the delta becomes
    /// δ_{n,n'}/dp³, a momentum state carries √dp³ and a beable state √(dp³/p_r²).
    pub fn momentum_overlap(&self, n: [i64; 3], alpha: usize, qhat: &Direction, p_r: f64, s: Sign) -> Result<Complex64> {
        if p_r == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        if n == [0, 0, 0] {
            return Err(Error::ZeroMomentum);
        }
        let target = qhat.vector() * p_r;
        let p = Vector3::from(self.momentum(n));
        if (p - target).norm() > 1e-9 * self.dp {
            return Ok(ZERO);
        }
        let chi = spinor(qhat.vector().into(), s)?;
        let weight = p_r / self.cell() * self.cell().sqrt() * (self.cell() / (p_r * p_r)).sqrt();
        Ok(chi.0[alpha] * weight)
    }

    /// Non-zero overlaps (row, column, value) between all (p ≠ 0, α) and all (q̂, p_r, s) labels
    /// of the grid, with rows 2·point + α and columns 2·label + (0 for s = +, 1 for s = −).
    pub fn overlap_entries(&self) -> Result<(usize, Vec<SparseEntry>)> {
        let points: Vec<[i64; 3]> = self.points().into_iter().filter(|n| *n != [0, 0, 0]).collect();
        let labels = points
            .iter()
            .map(|&n| Direction::from_momentum(self.momentum(n)))
            .collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::new();
        for (row, &n) in points.iter().enumerate() {
            for (col, (q, p_r)) in labels.iter().enumerate() {
                for alpha in 0..2 {
                    for (k, s) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
                        let v = self.momentum_overlap(n, alpha, q, *p_r, s)?;
                        if v != ZERO {
                            entries.push((2 * row + alpha, 2 * col + k, v));
                        }
                    }
                }
            }
        }
        Ok((2 * points.len(), entries))
    }
}

fn integer_ratio(delta_r: f64, dr: f64) -> Result<i64> {
    if dr <= 0.0 {
        return Err(Error::InvalidInput("dr must be positive".into()));
    }
    let n = (delta_r / dr).round();
    if (delta_r / dr - n).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("Δr = {delta_r} is not a multiple of dr = {dr}")));
    }
    Ok(n as i64)
}

/// |∫₀^{π/dr} (dr/2π) e^{ipΔr} dp|²: ¼ at Δr = 0, dr²/(π²Δr²) for odd Δr/dr, 0 otherwise.
pub fn vacuum_pair_correlation(r1: f64, r2: f64, dr: f64) -> Result<f64> {
    let delta = r1 - r2;
    let n = integer_ratio(delta, dr)?;
    Ok(if n == 0 {
        0.25
    } else if n.rem_euclid(2) == 1 {
        dr * dr / (PI * PI * delta * delta)
    } else {
        0.0
    })
}

/// The defining integral done by Gauss–Legendre quadrature.
pub fn vacuum_pair_correlation_quadrature(r1: f64, r2: f64, dr: f64) -> Result<f64> {
    let delta = r1 - r2;
    integer_ratio(delta, dr)?;
    let cycles = ((delta.abs() / dr / 2.0).ceil() as usize).max(1);
    let rule = Composite::new(20, 4 * cycles);
    let amp = rule.integrate_complex(0.0, PI / dr, |p| Complex64::from_polar(dr / TAU, p * delta));
    Ok(amp.norm_sqr())
}

/// Dirac sea of H = s p_r on a ring of `sites` points spaced by dr, for both signs of s: the
/// correlation matrix ⟨ψ†(r₂,s₂)ψ(r₁,s₁)⟩ is the projector on negative energies. Rows and
/// columns are ordered (s = +, r), then (s = −, r).
pub fn ring_vacuum_correlation(sites: usize, dr: f64) -> Result<CMatrix> {
    if sites < 2 || !sites.is_multiple_of(2) {
        return Err(Error::InvalidInput("ring needs an even number of sites".into()));
    }
    if dr <= 0.0 {
        return Err(Error::InvalidInput("dr must be positive".into()));
    }
    let n = sites as i64;
    // Filled momenta 2πj/(N dr): j ∈ [−N/2, −1] for s = +, the mirror j ∈ [1, N/2] for s = −.
    let profile = |js: std::ops::RangeInclusive<i64>| -> Vec<Complex64> {
        (0..n)
            .map(|d| js.clone().map(|j| Complex64::from_polar(1.0 / n as f64, TAU * (j * d) as f64 / n as f64)).sum())
            .collect()
    };
    let blocks = [profile(-n / 2..=-1), profile(1..=n / 2)];
    let mut c = CMatrix::zeros(2 * sites, 2 * sites);
    for (block, v) in blocks.iter().enumerate() {
        for a in 0..sites {
            for b in 0..sites {
                c[(block * sites + a, block * sites + b)] = v[(a as i64 - b as i64).rem_euclid(n) as usize];
            }
        }
    }
    Ok(c)
}

/// (1/p_r f)(r) = ½ i ∫ sgn(r − r') f(r') dr' for f supported in [lo, hi]. The kernel is only
/// the inverse of p_r on functions with ∫f = 0 (wave functions vanishing at p_r = 0); otherwise
/// the edge state is hit.
pub fn inverse_momentum(f: impl Fn(f64) -> Complex64, r: f64, lo: f64, hi: f64) -> Result<Complex64> {
    let rule = Composite::new(24, 32);
    let total = rule.integrate_complex(lo, hi, &f);
    let scale = rule.integrate(lo, hi, |x| f(x).norm());
    if total.norm() > 1e-10 * scale.max(1e-300) {
        return Err(Error::EdgeState);
    }
    let mid = r.clamp(lo, hi);
    let below = rule.integrate_complex(lo, mid, &f);
    let above = rule.integrate_complex(mid, hi, &f);
    Ok((below - above) * (0.5 * I))
}
