//! Integer/angle decomposition of a canonical pair: the theta-function phase, the q and p
//! operators on the (Q, P) lattice, the edge state and the wavelets ⟨q|Q,P⟩.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hilbert::HermitianOperator;
use crate::linalg::{self, CMatrix};
use crate::quadrature::Composite;

const THETA_TERMS: i64 = 8;
const PRODUCT_TERMS: i32 = 12;
const SINGULAR_RADIUS: f64 = 1e-13;

/// Reduce an angle into (−π, π].
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub kappa: f64,
    pub xi: f64,
}

impl TorusPoint {
    pub fn new(kappa: f64, xi: f64) -> Self {
        Self { kappa: reduce_angle(kappa), xi: reduce_angle(xi) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub r: f64,
    pub phi: f64,
}

/// Σ_N exp(−π(N − ξ/2π)² + iNκ), summed over the 17 terms nearest the Gaussian centre.
pub fn theta_sum(kappa: f64, xi: f64) -> Complex64 {
    let x = xi / TAU;
    let centre = x.round() as i64;
    (centre - THETA_TERMS..=centre + THETA_TERMS)
        .map(|n| {
            let d = n as f64 - x;
            Complex64::from_polar((-PI * d * d).exp(), n as f64 * kappa)
        })
        .sum()
}

/// Triple-product form of the same sum; accurate for |ξ| ≲ π.
pub fn theta_product(kappa: f64, xi: f64) -> Complex64 {
    let mut acc = Complex64::new((-xi * xi / (4.0 * PI)).exp(), 0.0);
    for n in 1..=PRODUCT_TERMS {
        acc *= 1.0 - (-TAU * n as f64).exp();
    }
    let z = Complex64::new(xi, kappa);
    for n in 0..=PRODUCT_TERMS {
        let shift = -TAU * n as f64 - PI;
        acc *= (Complex64::new(1.0, 0.0) + (z + shift).exp()) * (Complex64::new(1.0, 0.0) + (-z + shift).exp());
    }
    acc
}

/// r e^{iφ} from the theta sum: φ is periodic in κ and gains κ when ξ advances by 2π.
pub fn phase_function(kappa: f64, xi: f64) -> Result<PhaseSample> {
    let k0 = reduce_angle(kappa);
    let x0 = reduce_angle(xi);
    let turns = ((xi - x0) / TAU).round();
    let s = theta_sum(k0, x0);
    let r = s.norm();
    if r < SINGULAR_RADIUS {
        return Err(Error::SingularPoint { kappa, xi });
    }
    Ok(PhaseSample { r, phi: s.arg() + turns * k0 })
}

fn parity_sign(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// ⟨Q1,P1|a|Q2,P2⟩ with dQ = Q2 − Q1, dP = P2 − P1; zero on the diagonal.
pub fn a_element(dq: i64, dp: i64) -> Complex64 {
    if dq == 0 && dp == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let d = (dq * dq + dp * dp) as f64;
    Complex64::new(0.0, -parity_sign(dq + dp) * dp as f64 / (TAU * d))
}

/// ⟨Q1,P1|b|Q2,P2⟩ with the same difference convention.
pub fn b_element(dq: i64, dp: i64) -> Complex64 {
    if dq == 0 && dp == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let d = (dq * dq + dp * dp) as f64;
    Complex64::new(0.0, parity_sign(dq + dp) * dq as f64 / d)
}

/// Square window Q, P ∈ [−half, half], ordered row-major over (Q, P).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PQLatticeWindow {
    half: i64,
}

impl PQLatticeWindow {
    /// `width` values per axis; must be odd so the window is symmetric about 0.
    pub fn new(width: usize) -> Result<Self> {
        if width < 3 || width.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("window width {width} must be odd and at least 3")));
        }
        Ok(Self { half: (width / 2) as i64 })
    }

    pub fn width(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.width() * self.width()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state(&self, index: usize) -> (i64, i64) {
        let w = self.width();
        ((index / w) as i64 - self.half, (index % w) as i64 - self.half)
    }

    pub fn index(&self, q: i64, p: i64) -> Option<usize> {
        if q.abs() > self.half || p.abs() > self.half {
            return None;
        }
        Some(((q + self.half) as usize) * self.width() + (p + self.half) as usize)
    }

    pub fn states(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

fn lattice_matrix(window: PQLatticeWindow, f: impl Fn((i64, i64), (i64, i64)) -> Complex64) -> CMatrix {
    let n = window.len();
    CMatrix::from_fn(n, n, |r, c| f(window.state(r), window.state(c)))
}

/// Truncated q = Q + a and p = 2πP + b.
pub fn qp_operators(window: PQLatticeWindow) -> (HermitianOperator, HermitianOperator) {
    let q = lattice_matrix(window, |(q1, p1), (q2, p2)| {
        let diag = if (q1, p1) == (q2, p2) { q1 as f64 } else { 0.0 };
        a_element(q2 - q1, p2 - p1) + diag
    });
    let p = lattice_matrix(window, |(q1, p1), (q2, p2)| {
        let diag = if (q1, p1) == (q2, p2) { TAU * p1 as f64 } else { 0.0 };
        b_element(q2 - q1, p2 - p1) + diag
    });
    (
        HermitianOperator::new(q).expect("q is hermitean"),
        HermitianOperator::new(p).expect("p is hermitean"),
    )
}

/// [q,p]/i − 𝟙 on the whole window, by dense products.
pub fn commutator_defect(window: PQLatticeWindow) -> CMatrix {
    let (q, p) = qp_operators(window);
    let c = linalg::commutator(q.matrix(), p.matrix()) * Complex64::new(0.0, -1.0);
    c - linalg::identity(window.len())
}

/// [q,p]/i − 𝟙 between the states of the central block |Q|,|P| ≤ block_half, with the
/// intermediate sum running over the whole window. Uses the closed-form elements, so windows
/// far too large for dense products are cheap.
pub fn commutator_defect_block(window: PQLatticeWindow, block_half: i64) -> Result<CMatrix> {
    let block = PQLatticeWindow::new((2 * block_half + 1) as usize)?;
    if block_half > window.half {
        return Err(Error::InvalidInput("block larger than window".into()));
    }
    let states: Vec<(i64, i64)> = window.states().collect();
    let n = block.len();
    let entries: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|rc| {
            let (s1, s2) = (block.state(rc / n), block.state(rc % n));
            let q_of = |s: (i64, i64), t: (i64, i64)| {
                a_element(t.0 - s.0, t.1 - s.1) + if s == t { s.0 as f64 } else { 0.0 }
            };
            let p_of = |s: (i64, i64), t: (i64, i64)| {
                b_element(t.0 - s.0, t.1 - s.1) + if s == t { TAU * s.1 as f64 } else { 0.0 }
            };
            let comm: Complex64 = states
                .iter()
                .map(|&k| q_of(s1, k) * p_of(k, s2) - p_of(s1, k) * q_of(k, s2))
                .sum();
            comm * Complex64::new(0.0, -1.0) - if s1 == s2 { 1.0 } else { 0.0 }
        })
        .collect();
    Ok(CMatrix::from_row_iterator(n, n, entries))
}

/// The edge state ⟨Q,P|ψe⟩ = (−1)^{P+Q}, unnormalised, over a window.
pub fn edge_state(window: PQLatticeWindow) -> Vec<f64> {
    window.states().map(|(q, p)| parity_sign(q + p)).collect()
}

/// −|ψe⟩⟨ψe| restricted to a window: the limit of the commutator defect.
pub fn edge_projector_limit(window: PQLatticeWindow) -> CMatrix {
    let e = edge_state(window);
    let n = e.len();
    CMatrix::from_fn(n, n, |r, c| linalg::re(-e[r] * e[c]))
}

/// ⟨ψe|[q,p]|ψe⟩/i for the normalised edge state of a window.
pub fn edge_expectation(window: PQLatticeWindow) -> f64 {
    let (q, p) = qp_operators(window);
    let c = linalg::commutator(q.matrix(), p.matrix()) * Complex64::new(0.0, -1.0);
    let e = edge_state(window);
    let norm2: f64 = e.iter().map(|v| v * v).sum();
    let v = nalgebra::DVector::from_iterator(e.len(), e.iter().map(|&x| linalg::re(x)));
    (v.adjoint() * c * &v)[(0, 0)].re / norm2
}

/// ⟨q|Q,P⟩ by a κ-trapezoid with nodes offset half a step from 0.
pub fn wavefunction(q: f64, big_q: i64, big_p: i64, quad_points: usize) -> Result<Complex64> {
    if quad_points < 256 {
        return Err(Error::InvalidInput(format!("{quad_points} quadrature points; need at least 256")));
    }
    let xi = TAU * (q - big_q as f64);
    let h = TAU / quad_points as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..quad_points {
        let kappa = (k as f64 + 0.5) * h;
        let s = phase_function(kappa, xi)?;
        acc += Complex64::from_polar(1.0, -s.phi);
    }
    Ok(Complex64::from_polar(1.0, TAU * big_p as f64 * q) * acc / quad_points as f64)
}

/// Quadrature for integrals over the whole q line, split as q = n + ξ/2π: an FFT in κ gives
/// every integer offset n at once, and Gauss panels in ξ are graded toward the theta zero at ±π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineQuadrature {
    pub fft_points: usize,
    /// Integer offsets kept: |n| ≤ terms.
    pub terms: i64,
    pub grading_levels: u32,
    pub gauss_degree: usize,
}

impl Default for LineQuadrature {
    fn default() -> Self {
        Self { fft_points: 4096, terms: 1000, grading_levels: 10, gauss_degree: 24 }
    }
}

impl LineQuadrature {
    fn xi_nodes(&self) -> Vec<(f64, f64)> {
        let mut edges = vec![0.0, PI / 2.0];
        for l in 1..self.grading_levels {
            edges.push(PI - PI / 2f64.powi(l as i32 + 1));
        }
        edges.push(PI);
        let rule = Composite::new(self.gauss_degree, 1);
        let half: Vec<(f64, f64)> = edges.windows(2).flat_map(|w| rule.nodes(w[0], w[1]).collect::<Vec<_>>()).collect();
        half.iter().rev().map(|&(x, w)| (-x, w)).chain(half.iter().copied()).collect()
    }

    /// c_n(ξ) = (1/2π) ∫ e^{−iφ(κ,ξ)} e^{−inκ} dκ for n = −terms..=terms.
    fn coefficients(&self, xi: f64, plan: &dyn rustfft::Fft<f64>) -> Result<Vec<Complex64>> {
        let m = self.fft_points;
        let h = TAU / m as f64;
        let mut buf = (0..m)
            .map(|j| {
                let s = theta_sum((j as f64 + 0.5) * h, xi);
                if s.norm() < SINGULAR_RADIUS {
                    Err(Error::SingularPoint { kappa: (j as f64 + 0.5) * h, xi })
                } else {
                    Ok(s.conj() / s.norm())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        plan.process(&mut buf);
        Ok((-self.terms..=self.terms)
            .map(|n| {
                let idx = n.rem_euclid(m as i64) as usize;
                buf[idx] * Complex64::from_polar(1.0 / m as f64, -PI * n as f64 / m as f64)
            })
            .collect())
    }

    /// ∫ conj(⟨q|Q1,P1⟩) ⟨q|Q2,P2⟩ dq over the whole line.
    pub fn overlap(&self, first: (i64, i64), second: (i64, i64)) -> Result<Complex64> {
        let plan = FftPlanner::<f64>::new().plan_fft_forward(self.fft_points);
        let nodes = self.xi_nodes();
        let parts = nodes
            .par_iter()
            .map(|&(xi, w)| {
                let c = self.coefficients(xi, plan.as_ref())?;
                let at = |n: i64, (q, p): (i64, i64)| {
                    let k = n - q;
                    if k.abs() > self.terms {
                        return Complex64::new(0.0, 0.0);
                    }
                    let pos = n as f64 + xi / TAU;
                    c[(k + self.terms) as usize] * Complex64::from_polar(1.0, TAU * p as f64 * pos)
                };
                let sum: Complex64 = (-self.terms..=self.terms).map(|n| at(n, first).conj() * at(n, second)).sum();
                Ok(sum * (w / TAU))
            })
            .collect::<Result<Vec<Complex64>>>()?;
        Ok(parts.into_iter().sum())
    }
}

/// Δ_a(dx) = sin π(dx − a) / π(dx − a) on the infinite lattice.
pub fn fractional_translation_kernel(a: f64, dx: i64) -> f64 {
    let u = dx as f64 - a;
    if u == 0.0 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

/// ⟨x|η|x'⟩ with e^{iηa} = Δ_a: i(−1)^{x−x'}/(x − x'), zero on the diagonal.
pub fn translation_generator_element(dx: i64) -> Complex64 {
    if dx == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, parity_sign(dx) / dx as f64)
    }
}

/// Δ_a periodised onto a ring of even length L: the κ-integral becomes a sum over the L
/// lattice momenta, with the two Nyquist endpoints sharing half weight.
pub fn ring_translation_kernel(a: f64, dx: i64, len: usize) -> f64 {
    let l = len as f64;
    let u = dx as f64 - a;
    let s = (PI * u / l).tan();
    if s.abs() < 1e-14 {
        return (PI * u).cos();
    }
    (PI * u).sin() / (l * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn sum_and_product_agree() {
        let mut r = rng::stream(1, 0);
        for _ in 0..200 {
            let k = r.random_range(-PI..PI);
            let x = r.random_range(-PI..PI);
            assert!((theta_sum(k, x) - theta_product(k, x)).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_at_corner() {
        assert!(matches!(phase_function(PI, PI), Err(Error::SingularPoint { .. })));
        assert!(theta_product(PI, PI).norm() < 1e-14);
    }

    #[test]
    fn phase_symmetries() {
        let mut r = rng::stream(2, 0);
        for _ in 0..100 {
            let k = r.random_range(-3.1..3.1);
            let x = r.random_range(-3.1..3.1);
            let phi = |a: f64, b: f64| phase_function(a, b).unwrap().phi;
            assert!((phi(k, x) + phi(-k, x)).abs() < 1e-10);
            assert!((phi(k, x) + phi(k, -x)).abs() < 1e-10);
            assert!((phi(k, x) + phi(x, k) - k * x / TAU).abs() < 1e-10);
            assert!((phi(k, x + TAU) - phi(k, x) - k).abs() < 1e-10);
            assert!((phi(k + TAU, x) - phi(k, x)).abs() < 1e-10);
            let s = phase_function(k, x).unwrap();
            assert!((Complex64::from_polar(s.r, s.phi) - theta_sum(k, x)).norm() < 1e-12);
        }
        for x in [-2.0, 0.3, 3.0] {
            assert_eq!(phase_function(0.0, x).unwrap().phi, 0.0);
        }
    }

    #[test]
    fn a_and_b_elements() {
        assert!((a_element(0, 1) - Complex64::new(0.0, 1.0 / TAU)).norm() < 1e-16);
        assert_eq!(a_element(1, 0), Complex64::new(0.0, 0.0));
        assert_eq!(a_element(0, 0), Complex64::new(0.0, 0.0));
        let mut r = rng::stream(3, 0);
        for _ in 0..50 {
            let dq = r.random_range(-20..=20);
            let dp = r.random_range(-20..=20);
            assert_eq!(a_element(dq, dp), a_element(-dq, -dp).conj());
            // Q <-> P, i <-> −i and q <-> p/2π carry a into b.
            assert!((a_element(dp, dq).conj() * TAU - b_element(dq, dp)).norm() < 1e-15);
        }
    }

    #[test]
    fn q_and_p_structure() {
        let w = PQLatticeWindow::new(7).unwrap();
        let (q, p) = qp_operators(w);
        assert!(linalg::hermiticity_defect(q.matrix()) < 1e-12);
        assert!(linalg::hermiticity_defect(p.matrix()) < 1e-12);
        for (i, (bq, bp)) in w.states().enumerate() {
            assert_eq!(q.matrix()[(i, i)].re, bq as f64);
            assert!((p.matrix()[(i, i)].re - TAU * bp as f64).abs() < 1e-15);
            // ⟨ont|a|ont⟩ = 0 and the diagonal of b vanishes.
            assert_eq!(q.matrix()[(i, i)].im, 0.0);
        }
    }

    #[test]
    fn commutator_defect_approaches_edge_projector() {
        let small = PQLatticeWindow::new(21).unwrap();
        let c = commutator_defect(small);
        assert!(linalg::hermiticity_defect(&c) < 1e-12);
        let (i00, i11) = (small.index(0, 0).unwrap(), small.index(1, 1).unwrap());
        assert!((c[(i00, i11)].re + 1.0).abs() < 0.15);
        let block = commutator_defect_block(small, 2).unwrap();
        let bw = PQLatticeWindow::new(5).unwrap();
        for r in 0..bw.len() {
            for col in 0..bw.len() {
                let (s1, s2) = (bw.state(r), bw.state(col));
                let full = c[(small.index(s1.0, s1.1).unwrap(), small.index(s2.0, s2.1).unwrap())];
                assert!((block[(r, col)] - full).norm() < 1e-10);
            }
        }
        let err = |width: usize| {
            let b = commutator_defect_block(PQLatticeWindow::new(width).unwrap(), 2).unwrap();
            linalg::max_abs_diff(&b, &edge_projector_limit(bw))
        };
        assert!(err(21) < err(11));
    }

    #[test]
    fn edge_state_carries_the_whole_defect() {
        for width in [5, 9, 13] {
            let w = PQLatticeWindow::new(width).unwrap();
            let n = w.len() as f64;
            assert!((edge_expectation(w) - (1.0 - n)).abs() < 1e-9 * n);
        }
    }

    #[test]
    fn wavefunction_profile() {
        let at0 = wavefunction(0.0, 0, 0, 512).unwrap();
        assert!((at0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // At half-integers the wavelet is exactly 1/(π(n+½)) in magnitude.
        for n in [0.0, 1.0, 3.0] {
            let q = n + 0.5;
            let v = wavefunction(q, 0, 0, 4096).unwrap().norm();
            assert!((v - 1.0 / (PI * q)).abs() < 2e-3, "q={q}: {v}");
        }
        assert!(wavefunction(1.5, 0, 0, 4096).unwrap().norm() > 0.2);
        assert!(wavefunction(0.0, 0, 0, 100).is_err());
    }

    #[test]
    fn wavefunction_matches_fft_coefficients() {
        let quad = LineQuadrature { fft_points: 1024, terms: 10, ..Default::default() };
        let plan = FftPlanner::<f64>::new().plan_fft_forward(1024);
        let xi = 0.7;
        let c = quad.coefficients(xi, plan.as_ref()).unwrap();
        for n in -3i64..=3 {
            let direct = wavefunction(n as f64 + xi / TAU, 0, 0, 1024).unwrap();
            assert!((direct - c[(n + 10) as usize]).norm() < 1e-12);
        }
        let shifted = wavefunction(2.0 + xi / TAU, 1, 3, 1024).unwrap();
        let want = c[(1 + 10) as usize] * Complex64::from_polar(1.0, TAU * 3.0 * (2.0 + xi / TAU));
        assert!((shifted - want).norm() < 1e-12);
    }

    #[test]
    fn wavelets_are_orthonormal() {
        let quad = LineQuadrature::default();
        let norm = quad.overlap((0, 0), (0, 0)).unwrap();
        assert!((norm.re - 1.0).abs() < 1e-6 && norm.im.abs() < 1e-9, "{norm}");
        for (s1, s2) in [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((2, -1), (-1, 3)), ((1, 1), (1, -2))] {
            assert!(quad.overlap(s1, s2).unwrap().norm() < 1e-5);
        }
    }

    #[test]
    fn fractional_kernel_values() {
        for a in [-2.0, 0.0, 3.0] {
            for dx in -4..=4 {
                let want = if dx as f64 == a { 1.0 } else { 0.0 };
                assert!((fractional_translation_kernel(a, dx) - want).abs() < 1e-15);
            }
        }
        assert!((fractional_translation_kernel(0.5, 0) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn generator_is_derivative_of_kernel() {
        let h = 1e-6;
        for dx in [-3i64, -1, 1, 2, 5] {
            let deriv = (fractional_translation_kernel(h, dx) - fractional_translation_kernel(-h, dx)) / (2.0 * h);
            // d/da e^{iηa} at a = 0 is iη.
            let want = Complex64::new(0.0, 1.0) * translation_generator_element(dx);
            assert!((deriv - want.re).abs() < 1e-8 && want.im.abs() < 1e-15);
        }
    }

    #[test]
    fn ring_kernel_is_periodised_sinc() {
        let len = 16;
        for a in [0.3, -1.7] {
            for dx in 0..len as i64 {
                let direct: f64 = (-20000..=20000)
                    .map(|m| fractional_translation_kernel(a, dx + m * len as i64))
                    .sum();
                assert!((ring_translation_kernel(a, dx, len) - direct).abs() < 1e-3);
            }
        }
        for dx in 0..len as i64 {
            let want = if dx == 3 { 1.0 } else { 0.0 };
            assert!((ring_translation_kernel(3.0, dx, len) - want).abs() < 1e-12);
        }
    }

    fn apply_ring(a: f64, v: &[Complex64]) -> Vec<Complex64> {
        let l = v.len();
        (0..l)
            .map(|x| {
                (0..l)
                    .map(|y| v[y] * ring_translation_kernel(a, x as i64 - y as i64, l))
                    .sum()
            })
            .collect()
    }

    /// FFT oracle: multiply mode k by e^{−iκa}, Nyquist mode by cos(πa).
    fn fft_shift(a: f64, v: &[Complex64]) -> Vec<Complex64> {
        let l = v.len();
        let mut planner = FftPlanner::<f64>::new();
        let mut buf = v.to_vec();
        planner.plan_fft_forward(l).process(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            let kk = if k > l / 2 { k as f64 - l as f64 } else { k as f64 };
            *z *= if k == l / 2 { Complex64::new((PI * a).cos(), 0.0) } else { Complex64::from_polar(1.0, -TAU * kk * a / l as f64) };
        }
        planner.plan_fft_inverse(l).process(&mut buf);
        buf.iter().map(|z| z / l as f64).collect()
    }

    #[test]
    fn ring_translations_compose() {
        let l = 64;
        let mut r = rng::stream(4, 0);
        let mut v: Vec<Complex64> = (0..l).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        for (a, b) in [(0.3, 0.45), (-1.2, 0.7), (2.5, 0.25)] {
            let direct = apply_ring(a, &v);
            let oracle = fft_shift(a, &v);
            assert!(direct.iter().zip(&oracle).all(|(x, y)| (x - y).norm() < 1e-10));
            // Composition is exact away from the Nyquist mode, which carries cos πa · cos πb.
            let nyq: Complex64 = v.iter().enumerate().map(|(x, z)| z * parity_sign(x as i64)).sum::<Complex64>() / l as f64;
            for (x, z) in v.iter_mut().enumerate() {
                *z -= nyq * parity_sign(x as i64);
            }
            let two = apply_ring(a, &apply_ring(b, &v));
            let one = apply_ring(a + b, &v);
            assert!(two.iter().zip(&one).all(|(x, y)| (x - y).norm() < 1e-8));
        }
    }
}
