//! Massless boson on a 1+1 dimensional space-time lattice as an integer cellular automaton, its
//! quantum kernels, the instability in more dimensions, and the parity-product automaton.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_rational::Ratio;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pq::translation_generator_element;

/// Integer field Q(x) on a ring and its momentum P⁺(x) on the following time link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerFieldState {
    q: Vec<i64>,
    pplus: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoverField {
    pub left: Vec<i64>,
    pub right: Vec<i64>,
}

fn laplacian(q: &[i64]) -> Vec<i64> {
    let n = q.len();
    (0..n).map(|x| q[(x + n - 1) % n] + q[(x + 1) % n] - 2 * q[x]).collect()
}

impl IntegerFieldState {
    pub fn new(q: Vec<i64>, pplus: Vec<i64>) -> Result<Self> {
        if q.len() != pplus.len() {
            return Err(Error::InvalidInput("Q and P⁺ must have the same length".into()));
        }
        if q.len() < 2 || !q.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("ring size {} must be even and at least 2", q.len())));
        }
        Ok(Self { q, pplus })
    }

    pub fn zero(len: usize) -> Result<Self> {
        Self::new(vec![0; len], vec![0; len])
    }

    /// State whose field takes the values `now` at t and `next` at t+1.
    pub fn from_layers(now: Vec<i64>, next: &[i64]) -> Result<Self> {
        let pplus = next.iter().zip(&now).map(|(b, a)| b - a).collect();
        Self::new(now, pplus)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q(&self) -> &[i64] {
        &self.q
    }

    pub fn pplus(&self) -> &[i64] {
        &self.pplus
    }

    /// Q ← Q + P⁺, then P⁺ ← P⁺ + ΔQ with the new Q.
    pub fn step(&self) -> Self {
        let q: Vec<i64> = self.q.iter().zip(&self.pplus).map(|(a, b)| a + b).collect();
        let lap = laplacian(&q);
        let pplus = self.pplus.iter().zip(&lap).map(|(a, b)| a + b).collect();
        Self { q, pplus }
    }

    pub fn step_back(&self) -> Self {
        let lap = laplacian(&self.q);
        let pplus: Vec<i64> = self.pplus.iter().zip(&lap).map(|(a, b)| a - b).collect();
        let q = self.q.iter().zip(&pplus).map(|(a, b)| a - b).collect();
        Self { q, pplus }
    }

    /// A^L = P⁺ + Q(x) − Q(x−1) moves one site toward lower x per step; A^R = P⁺ + Q(x) − Q(x+1)
    /// moves toward higher x.
    pub fn movers(&self) -> MoverField {
        let n = self.len();
        let left = (0..n).map(|x| self.pplus[x] + self.q[x] - self.q[(x + n - 1) % n]).collect();
        let right = (0..n).map(|x| self.pplus[x] + self.q[x] - self.q[(x + 1) % n]).collect();
        MoverField { left, right }
    }

    /// E = ½ΣP⁺² + ½Σ(Q + P⁺)(2Q(x) − Q(x−1) − Q(x+1)), exact.
    pub fn classical_energy(&self) -> Ratio<i128> {
        let lap = laplacian(&self.q);
        let twice: i128 = self
            .pplus
            .iter()
            .zip(&self.q)
            .zip(&lap)
            .map(|((&p, &q), &l)| i128::from(p) * i128::from(p) - (i128::from(q) + i128::from(p)) * i128::from(l))
            .sum();
        Ratio::new(twice, 2)
    }

    /// The same energy from the ring Fourier modes:
    /// (1/2L) Σ_k cos²(k/2)|P_k|² + 4 sin²(k/2)|Q_k + P_k/2|².
    pub fn momentum_space_energy(&self) -> f64 {
        let n = self.len();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let mut qk: Vec<Complex64> = self.q.iter().map(|&v| linalg::re(v as f64)).collect();
        let mut pk: Vec<Complex64> = self.pplus.iter().map(|&v| linalg::re(v as f64)).collect();
        fft.process(&mut qk);
        fft.process(&mut pk);
        let total: f64 = (0..n)
            .map(|j| {
                let half = PI * j as f64 / n as f64;
                half.cos().powi(2) * pk[j].norm_sqr() + 4.0 * half.sin().powi(2) * (qk[j] + pk[j] * 0.5).norm_sqr()
            })
            .sum();
        total / (2.0 * n as f64)
    }
}

/// M_s for the position-space Hamiltonian kernel, in the small-cutoff form:
/// ½(log(2/λ) − Σ_{k<s/2} 1/(k+½)) for even s, ½(log(2λ) + Σ_{k=1}^{(s−1)/2} 1/k) for odd s.
pub fn quantum_kernel(s: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput(format!("cutoff {lambda} outside (0, 1)")));
    }
    Ok(if s.is_multiple_of(2) {
        let sum: f64 = (0..s / 2).map(|k| 1.0 / (k as f64 + 0.5)).sum();
        0.5 * ((2.0 / lambda).ln() - sum)
    } else {
        let sum: f64 = (1..=(s - 1) / 2).map(|k| 1.0 / k as f64).sum();
        0.5 * ((2.0 * lambda).ln() + sum)
    })
}

/// M_s with the regular part of the excluded endpoint intervals put back through second order:
/// (−1)^s (λ/2π + λ²(s²/2 − 1/6)/4).
pub fn quantum_kernel_finite_cutoff(s: u64, lambda: f64) -> Result<f64> {
    let sign = if s.is_multiple_of(2) { 1.0 } else { -1.0 };
    let s2 = (s * s) as f64;
    Ok(quantum_kernel(s, lambda)? + sign * (lambda / TAU + lambda * lambda * (s2 / 2.0 - 1.0 / 6.0) / 4.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stability {
    /// Bounded oscillation with frequency ω, cos ω = 1 − s/2.
    Stable { omega: f64 },
    /// Exponential growth; `growth` is the spectral radius of the one-step map.
    Unstable { growth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionReport {
    /// Σ_i 2(1 − cos k_i), which equals 4 sin²(ω/2).
    pub s: f64,
    pub stability: Stability,
}

/// One-step map of a single Fourier mode (Q, P⁺) in d dimensions.
pub fn mode_map(s: f64) -> [[f64; 2]; 2] {
    [[1.0, 1.0], [-s, 1.0 - s]]
}

pub fn dispersion_stability(k: &[f64]) -> Result<DispersionReport> {
    if k.is_empty() {
        return Err(Error::InvalidInput("wave vector needs at least one component".into()));
    }
    let s: f64 = k.iter().map(|ki| 2.0 * (1.0 - ki.cos())).sum();
    let c = 1.0 - s / 2.0;
    let stability = if s <= 4.0 {
        Stability::Stable { omega: c.clamp(-1.0, 1.0).acos() }
    } else {
        // Eigenvalues solve λ² − 2cλ + 1 = 0 with c < −1.
        Stability::Unstable { growth: -c + (c * c - 1.0).sqrt() }
    };
    Ok(DispersionReport { s, stability })
}

/// Kernel of the projection onto positive (+) or negative (−) lattice momenta.
pub fn vacuum_projector(positive: bool, y: i64) -> Complex64 {
    if y.rem_euclid(2) == 1 {
        let sign = if positive { 1.0 } else { -1.0 };
        Complex64::new(0.0, sign / (PI * y as f64))
    } else if y == 0 {
        linalg::re(0.5)
    } else {
        linalg::re(0.0)
    }
}

/// Commutators of the mover operators a = √2π A − η/√2π built on two neighbouring sites, with
/// each integer truncated to |A| ≤ `cutoff`. Returns ([a^L(0), a^L(1)], [a^R(0), a^R(1)]) and the
/// edge state ⟨A|e⟩ = (−1)^A of one site.
pub fn mover_commutators(cutoff: i64) -> (CMatrix, CMatrix, Vec<f64>) {
    let n = (2 * cutoff + 1) as usize;
    let value = |i: usize| i as i64 - cutoff;
    let a = CMatrix::from_fn(n, n, |r, c| if r == c { linalg::re(value(r) as f64) } else { linalg::ZERO });
    let eta = CMatrix::from_fn(n, n, |r, c| translation_generator_element(value(r) - value(c)));
    let one = linalg::identity(n);
    let root = linalg::re(TAU.sqrt());
    // a^L(x) carries η^L(x−1); a^R(x) carries η^R(x+1).
    let left0 = linalg::kron(&a, &one) * root;
    let left1 = linalg::kron(&one, &a) * root - linalg::kron(&eta, &one) / root;
    let right0 = linalg::kron(&a, &one) * root - linalg::kron(&one, &eta) / root;
    let right1 = linalg::kron(&one, &a) * root;
    let edge = (0..n).map(|i| if value(i).rem_euclid(2) == 0 { 1.0 } else { -1.0 }).collect();
    (
        linalg::commutator(&left0, &left1),
        linalg::commutator(&right0, &right1),
        edge,
    )
}

/// σ = ±1 on the sites of a d-dimensional torus with even side lengths, for the automaton
/// σ(x,t+1) = Π_i σ(x+e_i,t) σ(x−e_i,t) · σ(x,t−1) on the sublattice Σx + t even.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityTorus {
    dims: Vec<usize>,
}

impl ParityTorus {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2 || d % 2 != 0) {
            return Err(Error::InvalidInput("torus sides must be even and at least 2".into()));
        }
        Ok(Self { dims })
    }

    pub fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (i, &d) in self.dims.iter().enumerate().rev() {
            out[i] = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).fold(0, |acc, (&c, &d)| acc * d + c % d)
    }

    /// Whether (x, t) belongs to the even space-time sublattice.
    pub fn is_even(&self, index: usize, t: i64) -> bool {
        (self.coords(index).iter().sum::<usize>() as i64 + t).rem_euclid(2) == 0
    }

    pub fn neighbours(&self, index: usize) -> Vec<usize> {
        let c = self.coords(index);
        let mut out = Vec::with_capacity(2 * c.len());
        for axis in 0..c.len() {
            for delta in [1, self.dims[axis] - 1] {
                let mut n = c.clone();
                n[axis] = (n[axis] + delta) % self.dims[axis];
                out.push(self.index(&n));
            }
        }
        out
    }

    /// Layer t+1 from layers t−1 and t; entries off the sublattice at t+1 are set to +1.
    pub fn parity_ca_step(&self, prev: &[i8], cur: &[i8], t: i64) -> Result<Vec<i8>> {
        if prev.len() != self.sites() || cur.len() != self.sites() {
            return Err(Error::InvalidInput("layer size does not match torus".into()));
        }
        Ok((0..self.sites())
            .map(|x| {
                if !self.is_even(x, t + 1) {
                    return 1;
                }
                self.neighbours(x).iter().map(|&n| cur[n]).product::<i8>() * prev[x]
            })
            .collect())
    }

    /// Layers t0−1 .. t0+steps from Cauchy data at (t0−1, t0).
    pub fn evolve(&self, prev: Vec<i8>, cur: Vec<i8>, t0: i64, steps: usize) -> Result<Vec<Vec<i8>>> {
        let mut layers = vec![prev, cur];
        for k in 0..steps {
            let n = layers.len();
            let next = self.parity_ca_step(&layers[n - 2], &layers[n - 1], t0 + k as i64)?;
            layers.push(next);
        }
        Ok(layers)
    }

    /// History of sign flips produced by the changeable at the odd site (x1, t1): layer t1 is
    /// kept, only (x1, t1−1) flips, and the flips are propagated both ways with the same law.
    /// Returns the flip pattern (true = flipped) for layers t_lo ..= t_hi.
    pub fn changeable_flips(&self, x1: usize, t1: i64, t_lo: i64, t_hi: i64) -> Result<Vec<Vec<bool>>> {
        if self.is_even(x1, t1) {
            return Err(Error::InvalidInput("changeables live on odd sites".into()));
        }
        if !(t_lo < t1 && t1 <= t_hi) {
            return Err(Error::InvalidInput("time range must contain t1−1 and t1".into()));
        }
        let n = self.sites();
        let span = (t_hi - t_lo + 1) as usize;
        let mut layers = vec![vec![false; n]; span];
        let at = |t: i64| (t - t_lo) as usize;
        layers[at(t1 - 1)][x1] = true;
        for t in t1..t_hi {
            let next: Vec<bool> = (0..n)
                .map(|x| {
                    self.is_even(x, t + 1)
                        && self.neighbours(x).iter().fold(layers[at(t - 1)][x], |acc, &m| acc ^ layers[at(t)][m])
                })
                .collect();
            layers[at(t + 1)] = next;
        }
        for t in (t_lo + 1..t1).rev() {
            // Same law solved for the earlier layer.
            let prev: Vec<bool> = (0..n)
                .map(|x| {
                    self.is_even(x, t - 1)
                        && self.neighbours(x).iter().fold(layers[at(t + 1)][x], |acc, &m| acc ^ layers[at(t)][m])
                })
                .collect();
            layers[at(t - 1)] = prev;
        }
        Ok(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Composite;
    use crate::rng;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use rand::Rng;

    fn random_state(len: usize, amp: i64, seed: u64) -> IntegerFieldState {
        let mut r = rng::stream(seed, 0);
        let q = (0..len).map(|_| r.random_range(-amp..=amp)).collect();
        let p = (0..len).map(|_| r.random_range(-amp..=amp)).collect();
        IntegerFieldState::new(q, p).unwrap()
    }

    #[test]
    fn zero_state_is_fixed() {
        let z = IntegerFieldState::zero(8).unwrap();
        assert_eq!(z.step(), z);
        assert_eq!(z.classical_energy(), Ratio::from_integer(0));
        assert!(z.movers().left.iter().chain(&z.movers().right).all(|&v| v == 0));
        assert!(IntegerFieldState::zero(7).is_err());
    }

    #[test]
    fn second_order_form() {
        let mut q0 = vec![0; 16];
        q0[0] = 1;
        let s0 = IntegerFieldState::from_layers(q0.clone(), &q0).unwrap();
        let s1 = s0.step();
        let s2 = s1.step();
        let n = 16;
        for x in 0..n {
            let want = s1.q()[(x + n - 1) % n] + s1.q()[(x + 1) % n] - s0.q()[x];
            assert_eq!(s2.q()[x], want);
        }
        let mut s = random_state(16, 5, 1);
        for _ in 0..20 {
            let (a, b, c) = (s.clone(), s.step(), s.step().step());
            for x in 0..n {
                assert_eq!(c.q()[x], b.q()[(x + n - 1) % n] + b.q()[(x + 1) % n] - a.q()[x]);
            }
            s = b;
        }
    }

    #[test]
    fn sublattices_decouple() {
        let n = 12;
        let mut r = rng::stream(2, 0);
        let a0: Vec<i64> = (0..n).map(|_| r.random_range(-3..=3)).collect();
        let a1: Vec<i64> = (0..n).map(|_| r.random_range(-3..=3)).collect();
        // Perturb only sites with x + t odd (t = 0 on a0, t = 1 on a1).
        let b0: Vec<i64> = a0.iter().enumerate().map(|(x, v)| if x % 2 == 1 { v + 7 } else { *v }).collect();
        let b1: Vec<i64> = a1.iter().enumerate().map(|(x, v)| if x % 2 == 0 { v - 4 } else { *v }).collect();
        let mut s = IntegerFieldState::from_layers(a0, &a1).unwrap();
        let mut u = IntegerFieldState::from_layers(b0, &b1).unwrap();
        for t in 0..50 {
            for x in (0..n).filter(|x| (x + t) % 2 == 0) {
                assert_eq!(s.q()[x], u.q()[x]);
            }
            s = s.step();
            u = u.step();
        }
    }

    #[test]
    fn reversible_over_long_runs() {
        let start = random_state(32, 20, 3);
        let mut s = start.clone();
        for _ in 0..1000 {
            s = s.step();
        }
        for _ in 0..1000 {
            s = s.step_back();
        }
        assert_eq!(s, start);
    }

    #[test]
    fn movers_translate_exactly() {
        let mut s = random_state(32, 9, 4);
        let n = 32;
        for _ in 0..64 {
            let now = s.movers();
            let next = s.step();
            let later = next.movers();
            for x in 0..n {
                assert_eq!(later.left[x], now.left[(x + 1) % n]);
                assert_eq!(later.right[x], now.right[(x + n - 1) % n]);
                let sum = 2 * s.pplus()[x] + 2 * s.q()[x] - s.q()[(x + n - 1) % n] - s.q()[(x + 1) % n];
                assert_eq!(now.left[x] + now.right[x], sum);
            }
            s = next;
        }
    }

    #[test]
    fn energy_is_conserved_exactly() {
        let mut s = random_state(16, 1000, 5);
        let e0 = s.classical_energy();
        for _ in 0..100_000 {
            s = s.step();
            assert_eq!(s.classical_energy(), e0);
        }
        let e: f64 = (*e0.numer() as f64) / (*e0.denom() as f64);
        assert!((s.momentum_space_energy() - e).abs() < 1e-9 * e.abs().max(1.0));
    }

    #[test]
    fn momentum_form_matches_position_form() {
        for seed in 0..20 {
            let s = random_state(24, 50, 100 + seed);
            let e = s.classical_energy();
            let e = *e.numer() as f64 / *e.denom() as f64;
            assert!((s.momentum_space_energy() - e).abs() < 1e-9 * e.abs().max(1.0));
        }
    }

    /// M_s = (1/π) ∫₀^{π−λ} κ cos(sκ) / (2 sin κ) dκ, panels graded toward the cutoff.
    fn kernel_quadrature(s: u64, lambda: f64) -> f64 {
        let rule = Composite::new(30, 1);
        let f = |k: f64| if k == 0.0 { 0.5 } else { k * (s as f64 * k).cos() / (2.0 * k.sin()) };
        let mut edges = vec![0.0, PI / 2.0];
        let mut gap = PI / 4.0;
        while gap > lambda * 1.5 {
            edges.push(PI - gap);
            gap /= 2.0;
        }
        edges.push(PI - lambda);
        rule.integrate_pieces(&edges, f) / PI
    }

    #[test]
    fn kernel_closed_forms_against_quadrature() {
        let lambda = 1e-3;
        assert!((quantum_kernel(0, lambda).unwrap() - 0.5 * (2.0 / lambda).ln()).abs() < 1e-15);
        for s in 0..12u64 {
            let quad = kernel_quadrature(s, lambda);
            let closed = quantum_kernel(s, lambda).unwrap();
            let corrected = quantum_kernel_finite_cutoff(s, lambda).unwrap();
            assert!((corrected - quad).abs() < 1e-6, "s={s}: {corrected} vs {quad}");
            let s2 = (s * s) as f64;
            assert!((closed - quad).abs() < lambda / TAU + lambda * lambda * s2 + 1e-9);
        }
        assert!(quantum_kernel(1, 0.0).is_err());
    }

    #[test]
    fn kernel_divergence_alternates() {
        for s in 0..8u64 {
            let d = quantum_kernel(s, 1e-6).unwrap() - quantum_kernel(s, 1e-3).unwrap();
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            assert!((d - sign * 0.5 * 1000f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn stability_classes() {
        let mut r = rng::stream(6, 0);
        for _ in 0..10 {
            let k = r.random_range(-PI..PI);
            match dispersion_stability(&[k]).unwrap().stability {
                Stability::Stable { omega } => assert!((omega - k.abs()).abs() < 1e-7),
                Stability::Unstable { .. } => panic!("1d is stable"),
            }
        }
        let corner = dispersion_stability(&[PI, PI]).unwrap();
        assert!((corner.s - 8.0).abs() < 1e-12);
        assert!(matches!(corner.stability, Stability::Unstable { .. }));
        assert!(matches!(dispersion_stability(&[0.1, 0.2]).unwrap().stability, Stability::Stable { .. }));
    }

    #[test]
    fn stability_matches_iterated_growth() {
        let mut r = rng::stream(7, 0);
        for _ in 0..20 {
            let k = [r.random_range(-PI..PI), r.random_range(-PI..PI)];
            let report = dispersion_stability(&k).unwrap();
            let m = mode_map(report.s);
            let (mut q, mut p) = (1.0f64, 0.3f64);
            let steps = 200;
            let mut peak: f64 = 0.0;
            let mut halfway = 0.0;
            for i in 0..steps {
                (q, p) = (m[0][0] * q + m[0][1] * p, m[1][0] * q + m[1][1] * p);
                peak = peak.max(q.hypot(p));
                if i == steps / 2 - 1 {
                    halfway = q.hypot(p);
                }
            }
            let rate = (q.hypot(p) / halfway).powf(2.0 / steps as f64);
            match report.stability {
                Stability::Stable { .. } if report.s < 3.99 => assert!(peak < 1e3, "{k:?}"),
                Stability::Stable { .. } => {}
                Stability::Unstable { growth } => assert!((rate - growth).abs() < 1e-2 * growth, "{rate} {growth}"),
            }
        }
    }

    #[test]
    fn projectors_split_the_identity() {
        assert_eq!(vacuum_projector(true, 0), linalg::re(0.5));
        assert_eq!(vacuum_projector(true, 4), linalg::re(0.0));
        assert!((vacuum_projector(true, 1) - Complex64::new(0.0, 1.0 / PI)).norm() < 1e-16);
        for y in -9..=9 {
            let sum = vacuum_projector(true, y) + vacuum_projector(false, y);
            assert!((sum - linalg::re(if y == 0 { 1.0 } else { 0.0 })).norm() < 1e-16);
        }
        // Idempotence, with the 1/z² tail of the truncated convolution as tolerance.
        let cut = 200_000i64;
        for y in [0i64, 1, 2, 3] {
            let conv: Complex64 = (-cut..=cut).map(|z| vacuum_projector(true, y - z) * vacuum_projector(true, z)).sum();
            assert!((conv - vacuum_projector(true, y)).norm() < 1e-5);
        }
    }

    #[test]
    fn mover_commutators_away_from_edge() {
        let (left, right, edge) = mover_commutators(6);
        let n = edge.len();
        let ones = linalg::identity(n);
        let e = CMatrix::from_fn(n, n, |r, c| linalg::re(edge[r] * edge[c]));
        let away = linalg::identity(n) - e;
        let left_want = linalg::kron(&away, &ones) * linalg::I;
        let right_want = linalg::kron(&ones, &away) * (-linalg::I);
        assert!(linalg::max_abs_diff(&left, &left_want) < 1e-12);
        assert!(linalg::max_abs_diff(&right, &right_want) < 1e-12);
    }

    #[test]
    fn parity_ca_uniform_and_light_cone() {
        let torus = ParityTorus::new(vec![8, 8]).unwrap();
        let n = torus.sites();
        let ones = vec![1i8; n];
        let layers = torus.evolve(ones.clone(), ones.clone(), 0, 10).unwrap();
        assert!(layers.iter().all(|l| l.iter().all(|&v| v == 1)));

        // Brute force on an unbounded lattice, within the light cone before wrapping.
        use std::collections::HashMap;
        let mut field: HashMap<(i64, i64, i64), i8> = HashMap::new();
        let get = |f: &HashMap<(i64, i64, i64), i8>, k| *f.get(&k).unwrap_or(&1);
        field.insert((0, 0, 0), -1);
        for t in 0..3i64 {
            for x in -8i64..=8 {
                for y in -8i64..=8 {
                    if (x + y + t + 1).rem_euclid(2) != 0 {
                        continue;
                    }
                    let v = get(&field, (x + 1, y, t)) * get(&field, (x - 1, y, t)) * get(&field, (x, y + 1, t))
                        * get(&field, (x, y - 1, t))
                        * get(&field, (x, y, t - 1));
                    field.insert((x, y, t + 1), v);
                }
            }
        }
        let mut cur = ones.clone();
        cur[torus.index(&[0, 0])] = -1;
        let layers = torus.evolve(ones.clone(), cur, 0, 3).unwrap();
        for (ti, layer) in layers.iter().enumerate().skip(1) {
            let t = ti as i64 - 1;
            for i in 0..n {
                let c = torus.coords(i);
                let (x, y) = (c[0] as i64, c[1] as i64);
                let (x, y) = (if x > 4 { x - 8 } else { x }, if y > 4 { y - 8 } else { y });
                if torus.is_even(i, t) {
                    assert_eq!(layer[i], get(&field, (x, y, t)), "t={t} x={x} y={y}");
                    if layer[i] == -1 {
                        assert!(x.abs() + y.abs() <= t.max(0));
                    }
                }
            }
        }
    }

    #[test]
    fn changeables_obey_the_product_law() {
        let torus = ParityTorus::new(vec![8, 8]).unwrap();
        let (lo, hi) = (-6i64, 6i64);
        for x in 0..torus.sites() {
            for t in [0i64, 1] {
                if !torus.is_even(x, t) {
                    continue;
                }
                // Odd neighbours of the even site (x, t): spatial ones at t, and (x, t±1).
                let mut total = vec![vec![false; torus.sites()]; (hi - lo + 1) as usize];
                let mut odd = torus.neighbours(x).into_iter().map(|m| (m, t)).collect::<Vec<_>>();
                odd.push((x, t - 1));
                odd.push((x, t + 1));
                for (m, tm) in odd {
                    let f = torus.changeable_flips(m, tm, lo, hi).unwrap();
                    for (a, b) in total.iter_mut().zip(f) {
                        for (u, v) in a.iter_mut().zip(b) {
                            *u ^= v;
                        }
                    }
                }
                assert!(total.iter().all(|l| l.iter().all(|&v| !v)));
            }
        }
    }

    #[test]
    fn changeable_flips_one_site_forward() {
        let torus = ParityTorus::new(vec![8, 8]).unwrap();
        let x1 = torus.index(&[3, 2]);
        let f = torus.changeable_flips(x1, 0, -1, 1).unwrap();
        assert_eq!(f[0].iter().filter(|&&v| v).count(), 1);
        assert!(f[1].iter().all(|&v| !v));
        assert_eq!(f[2].iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i).collect::<Vec<_>>(), vec![x1]);
    }

    proptest! {
        #[test]
        fn step_inverts(q in proptest::collection::vec(-1000i64..1000, 8),
                        p in proptest::collection::vec(-1000i64..1000, 8)) {
            let s = IntegerFieldState::new(q, p).unwrap();
            prop_assert_eq!(s.step().step_back(), s.clone());
            prop_assert_eq!(s.step().classical_energy(), s.classical_energy());
            let e = s.classical_energy();
            let e = *e.numer() as f64 / *e.denom() as f64;
            prop_assert!((s.momentum_space_energy() - e).abs() < 1e-6);
        }
    }
}
