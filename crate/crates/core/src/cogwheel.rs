//! Cogwheels, general permutation models and information-losing automata.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{HermitianOperator, UnitaryOperator};
use crate::linalg::{self, CMatrix};

/// A single cycle of `teeth` states with a uniform energy offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CogwheelModel {
    pub teeth: usize,
    pub delta_e: f64,
}

impl CogwheelModel {
    pub fn new(teeth: usize, delta_e: f64) -> Result<Self> {
        if teeth == 0 {
            return Err(Error::InvalidInput("a cogwheel needs at least one state".into()));
        }
        Ok(Self { teeth, delta_e })
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.teeth)
            .map(|k| TAU * k as f64 / self.teeth as f64 + self.delta_e)
            .collect()
    }
}

/// An invertible update law on `{0..size-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationModel {
    map: Vec<usize>,
}

impl PermutationModel {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &s in &map {
            if s >= map.len() {
                return Err(Error::InvalidInput(format!("target {s} outside {} states", map.len())));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::NotBijective(s));
            }
        }
        Ok(Self { map })
    }

    /// Consecutive blocks of states, each cycled once per step.
    pub fn from_cycle_lengths(lengths: &[usize]) -> Result<Self> {
        let mut map = Vec::new();
        for &len in lengths {
            if len == 0 {
                return Err(Error::InvalidInput("cycle length must be positive".into()));
            }
            let base = map.len();
            map.extend((0..len).map(|k| base + (k + 1) % len));
        }
        Self::new(map)
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, s: usize) -> usize {
        self.map[s]
    }

    pub fn unitary(&self) -> UnitaryOperator {
        UnitaryOperator::new(linalg::permutation_matrix(&self.map)).expect("permutation matrices are unitary")
    }

    pub fn push_forward(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dist.len()];
        for (s, p) in dist.iter().enumerate() {
            out[self.map[s]] += p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// States in visiting order, starting from the smallest label.
    pub states: Vec<usize>,
    pub delta_e: f64,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub cycle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpectrum {
    pub cycles: Vec<Cycle>,
    /// Sorted by energy.
    pub levels: Vec<Level>,
}

/// Split a permutation into disjoint cycles and collect their cogwheel spectra.
pub fn decompose_cycles(model: &PermutationModel, delta_e: Option<&[f64]>) -> Result<CompositeSpectrum> {
    let mut visited = vec![false; model.size()];
    let mut cycles = Vec::new();
    for start in 0..model.size() {
        if visited[start] {
            continue;
        }
        let mut states = Vec::new();
        let mut s = start;
        while !visited[s] {
            visited[s] = true;
            states.push(s);
            s = model.apply(s);
        }
        cycles.push(states);
    }
    if let Some(d) = delta_e {
        if d.len() != cycles.len() {
            return Err(Error::InvalidInput(format!("{} offsets for {} cycles", d.len(), cycles.len())));
        }
    }
    let cycles: Vec<Cycle> = cycles
        .into_iter()
        .enumerate()
        .map(|(i, states)| Cycle { states, delta_e: delta_e.map_or(0.0, |d| d[i]) })
        .collect();
    let mut levels: Vec<Level> = cycles
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            CogwheelModel { teeth: c.len(), delta_e: c.delta_e }
                .levels()
                .into_iter()
                .map(move |energy| Level { energy, cycle: i })
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.cycle.cmp(&b.cycle)));
    Ok(CompositeSpectrum { cycles, levels })
}

/// Columns are the per-cycle Fourier modes; they diagonalise the permutation unitary.
/// Column order follows `spectrum.cycles` and, within a cycle, k = 0..len.
pub fn cycle_eigenbasis(size: usize, spectrum: &CompositeSpectrum) -> CMatrix {
    let mut v = CMatrix::zeros(size, size);
    let mut col = 0;
    for c in &spectrum.cycles {
        let len = c.len();
        let norm = 1.0 / (len as f64).sqrt();
        for k in 0..len {
            for (n, &s) in c.states.iter().enumerate() {
                v[(s, col)] = Complex64::from_polar(norm, TAU * (k * n) as f64 / len as f64);
            }
            col += 1;
        }
    }
    v
}

/// ⟨n|k⟩ = e^{2πikn/N}/√N.
pub fn dft_basis(n: usize) -> UnitaryOperator {
    let norm = 1.0 / (n as f64).sqrt();
    let m = CMatrix::from_fn(n, n, |r, c| Complex64::from_polar(norm, TAU * ((r * c) % n) as f64 / n as f64));
    UnitaryOperator::new(m).expect("the discrete Fourier matrix is unitary")
}

/// Closed-form cogwheel Hamiltonian with spectrum {2πk/N}, generating the shift |k> -> |k+1>.
pub fn hamiltonian_matrix(n: usize) -> Result<HermitianOperator> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    let nf = n as f64;
    let mut h = CMatrix::zeros(n, n);
    for r in 0..n {
        h[(r, r)] = Complex64::new(PI * (1.0 - 1.0 / nf), 0.0);
    }
    for p in 1..n {
        let coeff = -Complex64::new(1.0, 1.0 / (PI * p as f64 / nf).tan()) * (PI / nf);
        // Uᵖ has ones at (k+p, k).
        for k in 0..n {
            h[((k + p) % n, k)] += coeff;
        }
    }
    HermitianOperator::new(h)
}

/// A possibly non-invertible update law on `{0..size-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossyAutomaton {
    map: Vec<usize>,
}

impl LossyAutomaton {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&s| s >= map.len()) {
            return Err(Error::InvalidInput(format!("target {bad} outside {} states", map.len())));
        }
        Ok(Self { map })
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn iterate(&self, s: usize, steps: usize) -> usize {
        (0..steps).fold(s, |x, _| self.map[x])
    }

    pub fn push_forward(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dist.len()];
        for (s, p) in dist.iter().enumerate() {
            out[self.map[s]] += p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Classes sorted by their smallest member; members ascending.
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class of f(x) for any x in each class; `None` if members disagree.
    pub fn induced_map(&self, a: &LossyAutomaton) -> Option<Vec<usize>> {
        self.classes
            .iter()
            .map(|members| {
                let mut targets = members.iter().map(|&x| self.class_of[a.map()[x]]);
                let first = targets.next()?;
                targets.all(|t| t == first).then_some(first)
            })
            .collect()
    }

    pub fn class_weights(&self, dist: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .map(|m| m.iter().map(|&x| dist[x]).sum())
            .collect()
    }
}

/// x ~ y iff f^t(x) = f^t(y) for some t ≤ horizon; equivalently f^horizon(x) = f^horizon(y).
pub fn info_equivalence_classes(a: &LossyAutomaton, horizon: usize) -> Partition {
    let mut key_to_class: HashMap<usize, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of = vec![0; a.size()];
    for (x, class) in class_of.iter_mut().enumerate() {
        let key = a.iterate(x, horizon);
        let id = *key_to_class.entry(key).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[id].push(x);
        *class = id;
    }
    Partition { classes, class_of }
}

pub fn is_bijection(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    map.iter().all(|&t| t < map.len() && !std::mem::replace(&mut seen[t], true))
}

/// The all-to-one block D together with the Fourier conjugator Y satisfying D†Y = YD.
#[derive(Debug, Clone)]
pub struct TimeReversal {
    pub y: UnitaryOperator,
    pub d: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeReversalDefects {
    pub conjugation: f64,
    pub d_dagger_left: f64,
    pub d_dagger_right: f64,
}

impl TimeReversal {
    /// Max-abs defects of D†Y = YD, DD† = N|0><0| and D†D = N|e><e|.
    pub fn defects(&self) -> TimeReversalDefects {
        let n = self.d.nrows();
        let y = self.y.matrix();
        let conjugation = linalg::max_abs_diff(&(self.d.adjoint() * y), &(y * &self.d));
        let mut top = CMatrix::zeros(n, n);
        top[(0, 0)] = linalg::re(n as f64);
        let e = CMatrix::from_element(n, 1, linalg::re(1.0 / (n as f64).sqrt()));
        let flat = &e * e.adjoint() * linalg::re(n as f64);
        TimeReversalDefects {
            conjugation,
            d_dagger_left: linalg::max_abs_diff(&(&self.d * self.d.adjoint()), &top),
            d_dagger_right: linalg::max_abs_diff(&(self.d.adjoint() * &self.d), &flat),
        }
    }
}

/// Requires the block that sends every state to state 0.
pub fn time_reverse_conjugator(block: &LossyAutomaton) -> Result<TimeReversal> {
    let n = block.size();
    if n == 0 || block.map().iter().any(|&t| t != 0) {
        return Err(Error::UnsupportedShape("expected the map sending every state to state 0".into()));
    }
    let mut d = CMatrix::zeros(n, n);
    for l in 0..n {
        d[(0, l)] = linalg::re(1.0);
    }
    Ok(TimeReversal { y: dft_basis(n), d })
}
