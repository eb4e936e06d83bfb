//! Baker–Campbell–Hausdorff expansions: the plain series for log(e^P e^Q), the compact series for
//! a conjugate of e^{S+D} e^{S−D}, the resulting local Hamiltonian density of a two-step
//! automaton, and the first-order expansion of e^{−iH₀/2} e^{−iB} e^{−iH₀/2}.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::hilbert::{eigenphases, HermitianOperator, UnitaryOperator};
use crate::linalg::{self, commutator, CMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    S,
    D,
}

/// Coefficient times the right-nested commutator [X₁,[X₂,[…,Xₙ]]] of its letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedWord {
    pub letters: Vec<Letter>,
    pub coefficient: Ratio<i64>,
}

impl NestedWord {
    /// Letters written as a string over {S, D} (K and L are accepted as synonyms).
    pub fn new(coefficient: Ratio<i64>, letters: &str) -> Result<Self> {
        let letters = letters
            .chars()
            .map(|c| match c {
                'S' | 'K' => Ok(Letter::S),
                'D' | 'L' => Ok(Letter::D),
                other => Err(Error::InvalidInput(format!("unknown letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::InvalidInput("empty word".into()));
        }
        Ok(Self { letters, coefficient })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    fn coefficient_f64(&self) -> f64 {
        *self.coefficient.numer() as f64 / *self.coefficient.denom() as f64
    }

    /// Nested commutator without the coefficient.
    pub fn bracket(&self, s: &CMatrix, d: &CMatrix) -> CMatrix {
        let pick = |l: Letter| if l == Letter::S { s } else { d };
        let (last, rest) = self.letters.split_last().expect("words are non-empty");
        rest.iter().rev().fold(pick(*last).clone(), |acc, &l| commutator(pick(l), &acc))
    }

    pub fn evaluate(&self, s: &CMatrix, d: &CMatrix) -> CMatrix {
        self.bracket(s, d) * linalg::re(self.coefficient_f64())
    }
}

/// Right-nested commutator of a sequence of matrices.
pub fn nested(xs: &[&CMatrix]) -> CMatrix {
    let (last, rest) = xs.split_last().expect("at least one matrix");
    rest.iter().rev().fold((*last).clone(), |acc, x| commutator(x, &acc))
}

fn check_square_pair(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::InvalidInput("generators must be square matrices of one size".into()));
    }
    Ok(())
}

/// log(e^P e^Q) through the given order in P and Q (1 to 4).
pub fn bch_truncated(p: &CMatrix, q: &CMatrix, order: usize) -> Result<CMatrix> {
    check_square_pair(p, q)?;
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidInput(format!("order {order} is outside 1..=4")));
    }
    let mut r = p + q;
    if order >= 2 {
        let pq = commutator(p, q);
        r += &pq * linalg::re(0.5);
        if order >= 3 {
            let ppq = commutator(p, &pq);
            r += (&ppq + commutator(&pq, q)) * linalg::re(1.0 / 12.0);
            if order >= 4 {
                r += commutator(&ppq, q) * linalg::re(1.0 / 24.0);
            }
        }
    }
    Ok(r)
}

/// Words of R̃(S, D) with e^{R̃} = e^F e^{S+D} e^{S−D} e^{−F}, through the given odd order.
pub fn conjugacy_words(order: usize) -> Result<Vec<NestedWord>> {
    if ![1, 3, 5, 7].contains(&order) {
        return Err(Error::InvalidInput(format!("order {order} is not one of 1, 3, 5, 7")));
    }
    let table: [(i64, i64, &str); 10] = [
        (2, 1, "S"),
        (-1, 12, "DSD"),
        (8, 960, "DSSSD"),
        (-1, 960, "DDDSD"),
        (-51, 60480, "DSSSSSD"),
        (-76, 60480, "DDSDSSD"),
        (33, 60480, "DDDSSSD"),
        (44, 60480, "DSDDSSD"),
        (-3, 8 * 60480, "DDDDDSD"),
        (0, 1, ""),
    ];
    table
        .iter()
        .take_while(|(_, _, w)| !w.is_empty() && w.len() <= order)
        .map(|&(n, d, w)| NestedWord::new(Ratio::new(n, d), w))
        .collect()
}

pub fn conjugacy_expansion(s: &CMatrix, d: &CMatrix, order: usize) -> Result<CMatrix> {
    check_square_pair(s, d)?;
    let words = conjugacy_words(order)?;
    Ok(words.iter().fold(CMatrix::zeros(s.nrows(), s.ncols()), |acc, w| acc + w.evaluate(s, d)))
}

/// Best unitary G making G U G† close to W in Frobenius norm. For unitaries the optimum maps
/// matched eigenvectors onto each other; eigenphases are matched as a cyclic shift of their
/// sorted lists.
#[derive(Debug, Clone)]
pub struct ConjugatorFit {
    pub conjugator: CMatrix,
    pub residual: f64,
}

pub fn fit_conjugator(u: &UnitaryOperator, w: &UnitaryOperator) -> Result<ConjugatorFit> {
    let n = u.dim();
    if w.dim() != n {
        return Err(Error::InvalidInput("unitaries of different dimension".into()));
    }
    let a = eigenphases(u)?;
    let b = eigenphases(w)?;
    let cost = |shift: usize| -> f64 {
        (0..n)
            .map(|k| (Complex64::from_polar(1.0, -a.phases[k]) - Complex64::from_polar(1.0, -b.phases[(k + shift) % n])).norm_sqr())
            .sum()
    };
    let shift = (0..n).min_by(|&x, &y| cost(x).total_cmp(&cost(y))).unwrap_or(0);
    let matched = CMatrix::from_fn(n, n, |r, c| b.vectors[(r, (c + shift) % n)]);
    let conjugator = matched * a.vectors.adjoint();
    Ok(ConjugatorFit { conjugator, residual: cost(shift).sqrt() })
}

/// A ring of `sites` sites with `local_dim` states each; site 0 is the most significant factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ring {
    pub sites: usize,
    pub local_dim: usize,
}

impl Ring {
    pub fn new(sites: usize, local_dim: usize) -> Result<Self> {
        if sites < 2 || !sites.is_multiple_of(2) || local_dim < 2 {
            return Err(Error::InvalidInput("ring needs an even number ≥ 2 of sites with dimension ≥ 2".into()));
        }
        if (local_dim as f64).powi(sites as i32) > 4096.0 {
            return Err(Error::InvalidInput("ring Hilbert space too large for dense matrices".into()));
        }
        Ok(Self { sites, local_dim })
    }

    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.sites as u32)
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.sites;
        d.min(self.sites - d)
    }

    /// `ops[j]` acts on site `first + j` (mod sites); identity elsewhere.
    pub fn embed(&self, first: usize, ops: &[CMatrix]) -> CMatrix {
        let mut factors: Vec<CMatrix> = vec![linalg::identity(self.local_dim); self.sites];
        for (j, op) in ops.iter().enumerate() {
            factors[(first + j) % self.sites] = op.clone();
        }
        factors.iter().skip(1).fold(factors[0].clone(), |acc, f| linalg::kron(&acc, f))
    }

    /// Hermitean operator on site x whose matrix depends on the states of both neighbours:
    /// Σ_{a,b} |a⟩⟨a|_{x−1} ⊗ h[a·d + b]_x ⊗ |b⟩⟨b|_{x+1}. Operators of this form on sites of
    /// one parity commute.
    pub fn controlled(&self, x: usize, blocks: &[CMatrix]) -> Result<CMatrix> {
        let d = self.local_dim;
        if blocks.len() != d * d || blocks.iter().any(|h| h.shape() != (d, d) || linalg::hermiticity_defect(h) > 1e-12) {
            return Err(Error::InvalidInput(format!("need {} hermitean {d}×{d} blocks", d * d)));
        }
        let proj = |a: usize| CMatrix::from_fn(d, d, |r, c| if r == a && c == a { linalg::ONE } else { Complex64::new(0.0, 0.0) });
        let left = (x + self.sites - 1) % self.sites;
        let mut total = CMatrix::zeros(self.dim(), self.dim());
        for a in 0..d {
            for b in 0..d {
                let mut factors: Vec<CMatrix> = vec![linalg::identity(d); self.sites];
                factors[left] = proj(a);
                factors[x] = blocks[a * d + b].clone();
                factors[(x + 1) % self.sites] = proj(b);
                total += factors.iter().skip(1).fold(factors[0].clone(), |acc, f| linalg::kron(&acc, f));
            }
        }
        Ok(total)
    }

    /// Sites on which `op` acts non-trivially: it fails to commute with some matrix unit there.
    pub fn support(&self, op: &CMatrix, tol: f64) -> Vec<usize> {
        let d = self.local_dim;
        (0..self.sites)
            .filter(|&x| {
                (0..d * d).any(|k| {
                    let unit = CMatrix::from_fn(d, d, |r, c| if r * d + c == k { linalg::ONE } else { Complex64::new(0.0, 0.0) });
                    linalg::max_abs(&commutator(op, &self.embed(x, &[unit]))) > tol
                })
            })
            .collect()
    }
}

/// Local terms of H̃ = Σ_r H̃(r) for U = e^{−iA} e^{−iB}, with A = Σ_{even} A(x), B = Σ_{odd} B(x).
#[derive(Debug, Clone)]
pub struct DensityTerm {
    pub site: usize,
    pub order: usize,
    pub matrix: CMatrix,
}

/// K(x) = A(x), L(x) = A(x) on even sites; K(x) = B(x), L(x) = −B(x) on odd sites. With
/// S = −½iΣK, D = −½iΣL and R̃ = −iH̃, every word of odd length n contributes to the site of its
/// first letter; the remaining letters only enter through the sums ΣK and ΣL.
pub fn ca_hamiltonian_density(k: &[CMatrix], l: &[CMatrix], order: usize) -> Result<Vec<DensityTerm>> {
    if k.len() != l.len() || k.is_empty() {
        return Err(Error::InvalidInput("K and L need one operator per site".into()));
    }
    let words = conjugacy_words(order)?;
    let n = k[0].nrows();
    let total = |ops: &[CMatrix]| ops.iter().fold(CMatrix::zeros(n, n), |acc, x| acc + x);
    let (sk, sl) = (total(k), total(l));
    let mut terms = Vec::new();
    for length in (1..=order).step_by(2) {
        let mut per_site = vec![CMatrix::zeros(n, n); k.len()];
        for w in words.iter().filter(|w| w.len() == length) {
            // i·c·(−i/2)ⁿ
            let scale = I * linalg::re(w.coefficient_f64()) * Complex64::new(0.0, -0.5).powi(length as i32);
            let first = w.letters[0];
            let inner = if length == 1 {
                None
            } else {
                Some(NestedWord { letters: w.letters[1..].to_vec(), coefficient: Ratio::from_integer(1) }.bracket(&sk, &sl))
            };
            for (r, acc) in per_site.iter_mut().enumerate() {
                let head = if first == Letter::S { &k[r] } else { &l[r] };
                let bracket = match &inner {
                    None => head.clone(),
                    Some(m) => commutator(head, m),
                };
                *acc += bracket * scale;
            }
        }
        terms.extend(per_site.into_iter().enumerate().map(|(site, matrix)| DensityTerm { site, order: length, matrix }));
    }
    Ok(terms)
}

/// Sum of all density terms, the full H̃.
pub fn density_total(terms: &[DensityTerm]) -> Option<CMatrix> {
    let first = terms.first()?;
    Some(terms.iter().skip(1).fold(first.matrix.clone(), |acc, t| acc + &t.matrix))
}

/// Two-step automaton on a ring: A(x) on even sites and B(x) on odd sites, each a neighbour
/// controlled site operator, together with K and L.
#[derive(Debug, Clone)]
pub struct TwoStepAutomaton {
    pub ring: Ring,
    pub k: Vec<CMatrix>,
    pub l: Vec<CMatrix>,
    pub a: CMatrix,
    pub b: CMatrix,
}

impl TwoStepAutomaton {
    /// Random hermitean blocks of operator norm `norm` for every site.
    pub fn random<R: rand::Rng + ?Sized>(ring: Ring, norm: f64, rng: &mut R) -> Result<Self> {
        let d = ring.local_dim;
        let n = ring.dim();
        let mut k = Vec::with_capacity(ring.sites);
        let mut l = Vec::with_capacity(ring.sites);
        let mut a = CMatrix::zeros(n, n);
        let mut b = CMatrix::zeros(n, n);
        for x in 0..ring.sites {
            let blocks: Vec<CMatrix> = (0..d * d).map(|_| linalg::random_anti_hermitian(d, norm, rng) * I).collect();
            let op = ring.controlled(x, &blocks)?;
            if x % 2 == 0 {
                a += &op;
                l.push(op.clone());
            } else {
                b += &op;
                l.push(-&op);
            }
            k.push(op);
        }
        Ok(Self { ring, k, l, a, b })
    }

    /// e^{−iA} e^{−iB}
    pub fn step(&self) -> Result<UnitaryOperator> {
        UnitaryOperator::new(linalg::evolution(&self.a, 1.0) * linalg::evolution(&self.b, 1.0))
    }

    /// Conjugation-invariant distance between the step and e^{−iH̃} at each odd order.
    pub fn density_residuals(&self, max_order: usize) -> Result<Vec<(usize, f64)>> {
        let u = self.step()?;
        (1..=max_order)
            .step_by(2)
            .map(|order| {
                let h = density_total(&ca_hamiltonian_density(&self.k, &self.l, order)?).expect("ring has sites");
                let w = UnitaryOperator::new(linalg::evolution(&h, 1.0))?;
                Ok((order, fit_conjugator(&u, &w)?.residual))
            })
            .collect()
    }
}

/// Taylor coefficients of x/(2 sin(x/2)) in powers of x², by exact inversion of
/// 2 sin(x/2)/x = Σ (−1)ⁿ x²ⁿ / (4ⁿ (2n+1)!).
pub fn half_angle_series(terms: usize) -> Vec<Ratio<i128>> {
    let mut base: Vec<Ratio<i128>> = Vec::with_capacity(terms);
    let mut fact: i128 = 1;
    for n in 0..terms as i128 {
        if n > 0 {
            fact *= (2 * n) * (2 * n + 1);
        }
        let sign = if n % 2 == 0 { 1 } else { -1 };
        base.push(Ratio::new(sign, 4i128.pow(n as u32) * fact));
    }
    let mut inv: Vec<Ratio<i128>> = Vec::with_capacity(terms);
    for n in 0..terms {
        if n == 0 {
            inv.push(Ratio::from_integer(1));
            continue;
        }
        let s: Ratio<i128> = (1..=n).map(|j| base[j] * inv[n - j]).sum();
        inv.push(-s);
    }
    inv
}

pub fn half_angle_factor(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + x * x / 24.0
    } else {
        x / (2.0 * (x / 2.0).sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionOrder {
    /// x/(2 sin(x/2)) evaluated exactly.
    Exact,
    /// That function truncated to this many powers of x².
    Series(usize),
}

/// Distance from 2π below which an energy gap is treated as resonant.
pub const RESONANCE_MARGIN: f64 = 1e-6;

/// H with e^{−iH} = e^{−iH₀/2} e^{−iB} e^{−iH₀/2} + O(B²): in the eigenbasis of H₀,
/// H_kl = E_k δ_kl + ΔE/(2 sin(ΔE/2)) B_kl.
pub fn interaction_expansion(h0: &HermitianOperator, b: &HermitianOperator, order: ExpansionOrder) -> Result<HermitianOperator> {
    if h0.dim() != b.dim() {
        return Err(Error::InvalidInput("H0 and B differ in dimension".into()));
    }
    let n = h0.dim();
    let (energies, v) = linalg::hermitian_eigen(h0.matrix());
    let bb = v.adjoint() * b.matrix() * &v;
    let coeffs: Vec<f64> = match order {
        ExpansionOrder::Exact => Vec::new(),
        ExpansionOrder::Series(t) => half_angle_series(t).iter().map(|c| *c.numer() as f64 / *c.denom() as f64).collect(),
    };
    let mut h = CMatrix::zeros(n, n);
    for k in 0..n {
        h[(k, k)] = linalg::re(energies[k]);
        for l in 0..n {
            if bb[(k, l)].norm() < 1e-14 {
                continue;
            }
            let delta = energies[k] - energies[l];
            if delta.abs() >= TAU - RESONANCE_MARGIN {
                return Err(Error::ResonanceSingularity { delta });
            }
            let f = match order {
                ExpansionOrder::Exact => half_angle_factor(delta),
                ExpansionOrder::Series(_) => coeffs.iter().rev().fold(0.0, |acc, c| acc * delta * delta + c),
            };
            h[(k, l)] += bb[(k, l)] * f;
        }
    }
    HermitianOperator::new(&v * h * v.adjoint())
}

/// e^{−iH₀/2} e^{−iB} e^{−iH₀/2}.
pub fn split_evolution(h0: &HermitianOperator, b: &HermitianOperator) -> CMatrix {
    let half = linalg::evolution(h0.matrix(), 0.5);
    &half * linalg::evolution(b.matrix(), 1.0) * &half
}

/// Largest gap between H₀ eigenvalues; below 2π the expansion is regular.
pub fn max_gap(h0: &HermitianOperator) -> f64 {
    let e = h0.eigenvalues();
    e.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - e.iter().cloned().fold(f64::INFINITY, f64::min)
}
