//! Second quantisation of single-particle models with Jordan–Wigner fermion fields: Fock states
//! as occupation bits, the bilinear Hamiltonian, permutation dynamics of the fields and the
//! filled Dirac sea.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{self, HermitianOperator, UnitaryOperator};
use crate::linalg::{self, CMatrix, CVector};

/// Field operators work as bit operations up to this many modes.
pub const MAX_FIELD_MODES: usize = 14;
/// Dense Fock-space matrices are built up to this many modes.
pub const MAX_DENSE_MODES: usize = 10;

/// Occupation numbers of `modes` modes; bit i is mode i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    bits: u32,
    modes: usize,
}

impl FockState {
    pub fn new(bits: u32, modes: usize) -> Result<Self> {
        if modes > MAX_FIELD_MODES || u64::from(bits) >= 1u64 << modes {
            return Err(Error::InvalidInput(format!("occupation {bits:#b} does not fit {modes} modes")));
        }
        Ok(Self { bits, modes })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { bits: 0, modes }
    }

    pub fn from_occupations(occ: &[bool]) -> Result<Self> {
        let bits = occ.iter().enumerate().fold(0u32, |acc, (i, &o)| acc | (u32::from(o) << i));
        Self::new(bits, occ.len())
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        self.bits >> mode & 1 == 1
    }

    pub fn occupations(&self) -> Vec<bool> {
        (0..self.modes).map(|i| self.is_occupied(i)).collect()
    }

    pub fn particles(&self) -> u32 {
        self.bits.count_ones()
    }

    /// (−1)^{n₀+⋯+n_{i−1}}
    pub fn jw_sign(&self, mode: usize) -> f64 {
        if (self.bits & ((1u32 << mode) - 1)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// ψ_i or ψ†_i: the ladder operator on mode i times the sign string over modes below i.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldOperator {
    pub mode: usize,
    pub kind: Ladder,
}

impl FieldOperator {
    pub fn annihilate(mode: usize) -> Self {
        Self { mode, kind: Ladder::Annihilate }
    }

    pub fn create(mode: usize) -> Self {
        Self { mode, kind: Ladder::Create }
    }

    pub fn adjoint(self) -> Self {
        let kind = match self.kind {
            Ladder::Annihilate => Ladder::Create,
            Ladder::Create => Ladder::Annihilate,
        };
        Self { kind, ..self }
    }

    /// Image of a basis state, None when it is annihilated.
    pub fn apply(&self, s: FockState) -> Option<(f64, FockState)> {
        let occupied = s.is_occupied(self.mode);
        let allowed = match self.kind {
            Ladder::Annihilate => occupied,
            Ladder::Create => !occupied,
        };
        allowed.then(|| (s.jw_sign(self.mode), FockState { bits: s.bits ^ (1 << self.mode), modes: s.modes }))
    }

    pub fn dense(&self, modes: usize) -> Result<CMatrix> {
        check_dense(modes)?;
        let n = 1usize << modes;
        let mut m = CMatrix::zeros(n, n);
        for b in 0..n {
            if let Some((sign, t)) = self.apply(FockState { bits: b as u32, modes }) {
                m[(t.index(), b)] = linalg::re(sign);
            }
        }
        Ok(m)
    }
}

fn check_dense(modes: usize) -> Result<()> {
    if modes == 0 || modes > MAX_DENSE_MODES {
        return Err(Error::InvalidInput(format!("dense Fock space needs 1..={MAX_DENSE_MODES} modes, got {modes}")));
    }
    Ok(())
}

/// Applies a product of field operators, rightmost first.
pub fn apply_product(ops: &[FieldOperator], s: FockState) -> Option<(f64, FockState)> {
    ops.iter().rev().try_fold((1.0, s), |(sign, st), op| op.apply(st).map(|(g, t)| (sign * g, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSet {
    modes: usize,
}

impl FieldSet {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn annihilator(&self, i: usize) -> FieldOperator {
        FieldOperator::annihilate(i)
    }

    pub fn creator(&self, i: usize) -> FieldOperator {
        FieldOperator::create(i)
    }

    pub fn basis(&self) -> impl Iterator<Item = FockState> + '_ {
        (0..1u32 << self.modes).map(|bits| FockState { bits, modes: self.modes })
    }

    /// Largest deviation of {ψ_i, ψ†_j} from δ_ij and of {ψ_i, ψ_j}, {ψ†_i, ψ†_j} from 0, over
    /// every mode pair and basis state.
    pub fn anticommutator_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let m = self.modes;
        for s in self.basis() {
            for i in 0..m {
                for j in 0..m {
                    for (x, y, expected) in [
                        (FieldOperator::annihilate(i), FieldOperator::create(j), i == j),
                        (FieldOperator::annihilate(i), FieldOperator::annihilate(j), false),
                        (FieldOperator::create(i), FieldOperator::create(j), false),
                    ] {
                        let mut out: Vec<(FockState, f64)> = Vec::new();
                        for (sign, t) in [apply_product(&[x, y], s), apply_product(&[y, x], s)].into_iter().flatten() {
                            match out.iter_mut().find(|(u, _)| *u == t) {
                                Some(e) => e.1 += sign,
                                None => out.push((t, sign)),
                            }
                        }
                        if expected {
                            match out.iter_mut().find(|(u, _)| *u == s) {
                                Some(e) => e.1 -= 1.0,
                                None => out.push((s, -1.0)),
                            }
                        }
                        worst = out.iter().fold(worst, |w, (_, c)| w.max(c.abs()));
                    }
                }
            }
        }
        worst
    }
}

pub fn jw_fields(modes: usize) -> Result<FieldSet> {
    if modes == 0 || modes > MAX_FIELD_MODES {
        return Err(Error::InvalidInput(format!("fields need 1..={MAX_FIELD_MODES} modes, got {modes}")));
    }
    Ok(FieldSet { modes })
}

fn check_single_particle(h: &CMatrix) -> Result<usize> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::InvalidInput("single-particle matrix must be square".into()));
    }
    let defect = linalg::hermiticity_defect(h);
    if defect > 1e-10 {
        return Err(Error::InvalidInput(format!("single-particle matrix is not hermitean (defect {defect:.3e})")));
    }
    Ok(h.nrows())
}

/// Columns of Σ_{j,i} h_ji ψ†_j ψ_i for the given basis states, reported as (row, column, value).
fn bilinear_entries(h: &CMatrix, states: &[FockState], mut emit: impl FnMut(FockState, FockState, Complex64)) {
    let m = h.nrows();
    for &s in states {
        for i in 0..m {
            let Some((si, t)) = FieldOperator::annihilate(i).apply(s) else { continue };
            for j in 0..m {
                let hji = h[(j, i)];
                if hji == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((sj, u)) = FieldOperator::create(j).apply(t) {
                    emit(u, s, hji * si * sj);
                }
            }
        }
    }
}

/// H_F = Σ ψ†_j h_ji ψ_i on the full 2^M Fock space.
pub fn second_quantized_h(h: &CMatrix) -> Result<HermitianOperator> {
    let m = check_single_particle(h)?;
    check_dense(m)?;
    let n = 1usize << m;
    let states: Vec<FockState> = (0..n as u32).map(|bits| FockState { bits, modes: m }).collect();
    let mut out = CMatrix::zeros(n, n);
    bilinear_entries(h, &states, |row, col, v| out[(row.index(), col.index())] += v);
    HermitianOperator::new(out)
}

/// Total particle number Σ ψ†_i ψ_i.
pub fn number_operator(modes: usize) -> Result<CMatrix> {
    check_dense(modes)?;
    let n = 1usize << modes;
    Ok(CMatrix::from_diagonal(&CVector::from_fn(n, |b, _| linalg::re((b as u32).count_ones() as f64))))
}

/// Fock energies grouped by particle number, each block diagonalised separately. Works up to
/// MAX_FIELD_MODES since the largest block has C(M, M/2) states.
pub fn fock_spectrum(h: &CMatrix) -> Result<Vec<(u32, f64)>> {
    let m = check_single_particle(h)?;
    if m > MAX_FIELD_MODES {
        return Err(Error::InvalidInput(format!("at most {MAX_FIELD_MODES} modes")));
    }
    let mut levels = Vec::new();
    for count in 0..=m as u32 {
        let states: Vec<FockState> = (0..1u32 << m).filter(|b| b.count_ones() == count).map(|bits| FockState { bits, modes: m }).collect();
        let pos: std::collections::HashMap<u32, usize> = states.iter().enumerate().map(|(k, s)| (s.bits, k)).collect();
        let mut block = CMatrix::zeros(states.len(), states.len());
        bilinear_entries(h, &states, |row, col, v| block[(pos[&row.bits], pos[&col.bits])] += v);
        levels.extend(linalg::hermitian_eigenvalues(&block).into_iter().map(|e| (count, e)));
    }
    levels.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(levels)
}

/// Sums of every subset of the single-particle energies, sorted.
pub fn subset_sums(energies: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0];
    for &e in energies {
        let shifted: Vec<f64> = sums.iter().map(|s| s + e).collect();
        sums.extend(shifted);
    }
    sums.sort_by(f64::total_cmp);
    sums
}

/// Permutation matrix with ⟨π(i)|P|i⟩ = 1.
pub fn permutation_unitary(perm: &[usize]) -> Result<UnitaryOperator> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
        }
    }
    UnitaryOperator::new(linalg::permutation_matrix(perm))
}

/// h with e^{−ih} = P: eigenphases in [0, 2π), or in (−π, π] when `recenter` is set.
pub fn permutation_hamiltonian(perm: &[usize], recenter: bool) -> Result<HermitianOperator> {
    let u = permutation_unitary(perm)?;
    if !recenter {
        return hilbert::hamiltonian_from_unitary(&u, None);
    }
    let spec = hilbert::eigenphases(&u)?;
    let shifts: Vec<f64> = spec.phases.iter().map(|&w| if w > PI + 1e-12 { -TAU } else { 0.0 }).collect();
    hilbert::hamiltonian_from_unitary(&u, Some(&shifts))
}

/// e^{iH_F t} ψ_k e^{−iH_F t} as a dense matrix.
pub fn heisenberg_field(hf: &HermitianOperator, k: usize, modes: usize, t: f64) -> Result<CMatrix> {
    let psi = FieldOperator::annihilate(k).dense(modes)?;
    let forward = linalg::evolution(hf.matrix(), t);
    Ok(forward.adjoint() * psi * forward)
}

/// Whether every field evolves by the permutation at integer time t, ψ_k(t) = ψ_{π^{−t}(k)},
/// which is Σ_i (e^{−iht})_{ki} ψ_i for h = −i log P.
pub fn heisenberg_permutation(perm: &[usize], t: i64, recenter: bool, tol: f64) -> Result<bool> {
    let m = perm.len();
    let h = permutation_hamiltonian(perm, recenter)?;
    let hf = second_quantized_h(h.matrix())?;
    let source = permutation_power(perm, -t);
    for (k, &from) in source.iter().enumerate() {
        let evolved = heisenberg_field(&hf, k, m, t as f64)?;
        let expected = FieldOperator::annihilate(from).dense(m)?;
        if linalg::max_abs_diff(&evolved, &expected) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// π^t as an index map; negative t gives powers of the inverse.
pub fn permutation_power(perm: &[usize], t: i64) -> Vec<usize> {
    let mut step = perm.to_vec();
    if t < 0 {
        for (i, &p) in perm.iter().enumerate() {
            step[p] = i;
        }
    }
    let mut out: Vec<usize> = (0..perm.len()).collect();
    for _ in 0..t.unsigned_abs() {
        out = out.iter().map(|&x| step[x]).collect();
    }
    out
}

/// The second-quantised permutation on a basis state: the occupied modes move to their images
/// and the sign is the parity of the reordering into increasing mode order.
pub fn permute_state(perm: &[usize], s: FockState) -> Result<(f64, FockState)> {
    if perm.len() != s.modes() {
        return Err(Error::InvalidInput("permutation and state differ in mode count".into()));
    }
    let images: Vec<usize> = (0..s.modes()).filter(|&i| s.is_occupied(i)).map(|i| perm[i]).collect();
    let inversions = images.iter().enumerate().map(|(a, x)| images[a + 1..].iter().filter(|&y| y < x).count()).sum::<usize>();
    let bits = images.iter().fold(0u32, |acc, &i| acc | 1 << i);
    Ok((if inversions % 2 == 0 { 1.0 } else { -1.0 }, FockState { bits, modes: s.modes() }))
}

/// Ground state of H_F: every single-particle level below zero filled.
#[derive(Debug, Clone)]
pub struct DiracVacuum {
    /// Single-particle energies, ascending, with the eigenvectors as columns of `modes`.
    pub energies: Vec<f64>,
    pub modes: CMatrix,
    /// Occupations in the eigenmode basis.
    pub filled: FockState,
    pub vacuum_energy: f64,
    /// The vacuum in the original Fock basis.
    pub state: CVector,
    /// H_F − E_vac.
    pub normal_ordered: HermitianOperator,
}

pub fn dirac_vacuum(h: &CMatrix) -> Result<DiracVacuum> {
    let m = check_single_particle(h)?;
    check_dense(m)?;
    let (energies, modes) = linalg::hermitian_eigen(h);
    let occ: Vec<bool> = energies.iter().map(|&e| e < 0.0).collect();
    let filled = FockState::from_occupations(&occ)?;
    let vacuum_energy: f64 = energies.iter().filter(|&&e| e < 0.0).sum();
    let mut state = CVector::zeros(1 << m);
    state[0] = linalg::ONE;
    let creators: Vec<CMatrix> = (0..m).map(|i| FieldOperator::create(i).dense(m)).collect::<Result<_>>()?;
    for (n, _) in occ.iter().enumerate().filter(|(_, &o)| o) {
        let b_dag = (0..m).fold(CMatrix::zeros(1 << m, 1 << m), |acc, i| acc + &creators[i] * modes[(i, n)]);
        state = b_dag * state;
    }
    let hf = second_quantized_h(h)?;
    let shifted = hf.matrix() - linalg::identity(1 << m) * linalg::re(vacuum_energy);
    Ok(DiracVacuum { energies, modes, filled, vacuum_energy, state, normal_ordered: HermitianOperator::new(shifted)? })
}

impl DiracVacuum {
    /// Energy to add a particle in eigenmode n (if empty) or remove one (if filled): |E_n|.
    pub fn excitation_energy(&self, n: usize) -> f64 {
        self.energies[n].abs()
    }
}
