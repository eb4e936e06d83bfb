//! Discrete Hamiltonian dynamics on integer phase space. A (Q, P) pair moves to the next lattice
//! point on its energy contour, where contours are the level sets of the cell-wise bilinear
//! interpolation of H. Several pairs update in a fixed cyclic order; nearest-neighbour fields
//! update even sites, then odd sites.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type IntFn = Arc<dyn Fn(i64) -> i64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(i64, i64) -> i64 + Send + Sync>;
pub type JointFn = Arc<dyn Fn(&[i64], &[i64]) -> i64 + Send + Sync>;

/// H(Q,P) = T(P) + V(Q) + A(Q)B(P).
#[derive(Clone)]
pub struct DHamSystem1D {
    t: IntFn,
    v: IntFn,
    a: IntFn,
    b: IntFn,
}

impl fmt::Debug for DHamSystem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DHamSystem1D")
    }
}

impl DHamSystem1D {
    pub fn new(t: IntFn, v: IntFn) -> Self {
        Self { t, v, a: Arc::new(|_| 0), b: Arc::new(|_| 0) }
    }

    pub fn with_magnetic(self, a: IntFn, b: IntFn) -> Self {
        Self { a, b, ..self }
    }

    /// T = ½P(P−1), V = ½Q(Q−1).
    pub fn oscillator() -> Self {
        Self::new(Arc::new(|p| p * (p - 1) / 2), Arc::new(|q| q * (q - 1) / 2))
    }

    pub fn h(&self, q: i64, p: i64) -> i64 {
        (self.t)(p) + (self.v)(q) + (self.a)(q) * (self.b)(p)
    }
}

/// Inclusive rectangle of lattice points searched for contours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub q_min: i64,
    pub q_max: i64,
    pub p_min: i64,
    pub p_max: i64,
}

impl Window {
    pub fn around(centre: (i64, i64), half: i64) -> Self {
        Self { q_min: centre.0 - half, q_max: centre.0 + half, p_min: centre.1 - half, p_max: centre.1 + half }
    }

    pub fn contains(&self, (q, p): (i64, i64)) -> bool {
        (self.q_min..=self.q_max).contains(&q) && (self.p_min..=self.p_max).contains(&p)
    }

    fn has_cell(&self, (q, p): (i64, i64)) -> bool {
        (self.q_min..self.q_max).contains(&q) && (self.p_min..self.p_max).contains(&p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// (q,p)–(q+1,p)
    Horizontal(i64, i64),
    /// (q,p)–(q,p+1)
    Vertical(i64, i64),
}

impl Edge {
    fn ends(self) -> ((i64, i64), (i64, i64)) {
        match self {
            Edge::Horizontal(q, p) => ((q, p), (q + 1, p)),
            Edge::Vertical(q, p) => ((q, p), (q, p + 1)),
        }
    }
}

/// Closed level curve at one energy with the lattice points it carries, in the direction of the
/// Hamiltonian flow (higher H on the left).
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<(i64, i64)>,
    /// ∮ dl/|∇H| along the interpolated curve.
    pub continuum_period: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub energy: i64,
    /// Every closed curve in the window, including those that pass between lattice points.
    pub contours: Vec<Contour>,
    /// Points at this energy that no curve passes through: every neighbour has H ≥ E.
    pub fixed_points: Vec<(i64, i64)>,
}

impl ContourSet {
    /// Curves carrying at least one lattice point.
    pub fn cycles(&self) -> impl Iterator<Item = &Contour> {
        self.contours.iter().filter(|c| !c.points.is_empty())
    }

    pub fn point_count(&self) -> usize {
        self.cycles().map(|c| c.points.len()).sum::<usize>() + self.fixed_points.len()
    }
}

struct Tracer<'a, F> {
    h: &'a F,
    energy: i64,
    window: Window,
}

impl<F: Fn(i64, i64) -> i64> Tracer<'_, F> {
    // Points exactly at the level count as above it; this keeps every crossing strictly inside
    // an edge or at its upper end and removes degenerate cells.
    fn above(&self, (q, p): (i64, i64)) -> bool {
        (self.h)(q, p) >= self.energy
    }

    fn is_crossing(&self, e: Edge) -> bool {
        let (a, b) = e.ends();
        self.above(a) != self.above(b)
    }

    fn corners((q, p): (i64, i64)) -> [(i64, i64); 4] {
        [(q, p), (q + 1, p), (q + 1, p + 1), (q, p + 1)]
    }

    /// Cell edges in counter-clockwise order; edge k runs from corner k to corner k+1.
    fn cell_edges((q, p): (i64, i64)) -> [Edge; 4] {
        [Edge::Horizontal(q, p), Edge::Vertical(q + 1, p), Edge::Horizontal(q, p + 1), Edge::Vertical(q, p)]
    }

    /// The cell the curve enters through this crossing: walking its boundary counter-clockwise,
    /// the edge goes from above to below.
    fn entry_cell(&self, e: Edge) -> (i64, i64) {
        match e {
            Edge::Horizontal(q, p) => {
                if self.above((q, p)) {
                    (q, p)
                } else {
                    (q, p - 1)
                }
            }
            Edge::Vertical(q, p) => {
                if self.above((q, p + 1)) {
                    (q, p)
                } else {
                    (q - 1, p)
                }
            }
        }
    }

    fn exit(&self, cell: (i64, i64), entry: Edge) -> Edge {
        let corners = Self::corners(cell);
        let edges = Self::cell_edges(cell);
        let up: Vec<bool> = corners.iter().map(|&c| self.above(c)).collect();
        let k = edges.iter().position(|&e| e == entry).expect("entry edge belongs to cell");
        let exits: Vec<usize> = (0..4).filter(|&i| !up[i] && up[(i + 1) % 4]).collect();
        if exits.len() == 1 {
            return edges[exits[0]];
        }
        // Saddle cell: the bilinear centre value decides which corners are joined.
        let centre: i64 = corners.iter().map(|&(q, p)| (self.h)(q, p)).sum::<i64>() - 4 * self.energy;
        if centre >= 0 {
            edges[(k + 1) % 4]
        } else {
            edges[(k + 3) % 4]
        }
    }

    fn crossing_point(&self, e: Edge) -> (f64, f64) {
        let (a, b) = e.ends();
        let (hi, lo) = if self.above(a) { (a, b) } else { (b, a) };
        let (h_hi, h_lo) = ((self.h)(hi.0, hi.1) as f64, (self.h)(lo.0, lo.1) as f64);
        let t = (h_hi - self.energy as f64) / (h_hi - h_lo);
        (hi.0 as f64 + t * (lo.0 - hi.0) as f64, hi.1 as f64 + t * (lo.1 - hi.1) as f64)
    }

    fn gradient(&self, cell: (i64, i64), (x, y): (f64, f64)) -> f64 {
        let [c00, c10, c11, c01] = Self::corners(cell).map(|(q, p)| (self.h)(q, p) as f64);
        let (al, be) = (x - cell.0 as f64, y - cell.1 as f64);
        let dq = (c10 - c00) * (1.0 - be) + (c11 - c01) * be;
        let dp = (c01 - c00) * (1.0 - al) + (c11 - c10) * al;
        dq.hypot(dp)
    }

    fn owner(&self, (q, p): (i64, i64)) -> Option<Edge> {
        [
            ((q + 1, p), Edge::Horizontal(q, p)),
            ((q, p + 1), Edge::Vertical(q, p)),
            ((q - 1, p), Edge::Horizontal(q - 1, p)),
            ((q, p - 1), Edge::Vertical(q, p - 1)),
        ]
        .into_iter()
        .find(|&(n, _)| !self.above(n))
        .map(|(_, e)| e)
    }

    fn trace(&self) -> Result<ContourSet> {
        let w = self.window;
        let too_small = Error::WindowTooSmall { energy: self.energy };
        let mut edges = Vec::new();
        for q in w.q_min..=w.q_max {
            for p in w.p_min..=w.p_max {
                if q < w.q_max && self.is_crossing(Edge::Horizontal(q, p)) {
                    edges.push(Edge::Horizontal(q, p));
                }
                if p < w.p_max && self.is_crossing(Edge::Vertical(q, p)) {
                    edges.push(Edge::Vertical(q, p));
                }
            }
        }
        let mut loop_of: HashMap<Edge, (usize, usize)> = HashMap::new();
        let mut loops: Vec<(Vec<Edge>, f64, f64)> = Vec::new();
        let mut visited = HashSet::new();
        for &start in &edges {
            if visited.contains(&start) {
                continue;
            }
            let id = loops.len();
            let mut path = Vec::new();
            let (mut period, mut length) = (0.0, 0.0);
            let mut cur = start;
            loop {
                if !visited.insert(cur) {
                    return Err(too_small);
                }
                loop_of.insert(cur, (id, path.len()));
                path.push(cur);
                let cell = self.entry_cell(cur);
                if !w.has_cell(cell) {
                    return Err(too_small);
                }
                let next = self.exit(cell, cur);
                let (a, b) = (self.crossing_point(cur), self.crossing_point(next));
                let seg = (b.0 - a.0).hypot(b.1 - a.1);
                let grad = self.gradient(cell, ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0));
                if seg > 0.0 && grad > 0.0 {
                    period += seg / grad;
                    length += seg;
                }
                if next == start {
                    break;
                }
                cur = next;
            }
            loops.push((path, period, length));
        }
        let mut owned: Vec<Vec<(usize, (i64, i64))>> = vec![Vec::new(); loops.len()];
        let mut fixed_points = Vec::new();
        for q in w.q_min..=w.q_max {
            for p in w.p_min..=w.p_max {
                if (self.h)(q, p) != self.energy {
                    continue;
                }
                match self.owner((q, p)) {
                    None => fixed_points.push((q, p)),
                    Some(e) => {
                        let &(id, pos) = loop_of.get(&e).ok_or(Error::WindowTooSmall { energy: self.energy })?;
                        owned[id].push((pos, (q, p)));
                    }
                }
            }
        }
        let contours = loops
            .into_iter()
            .zip(owned)
            .map(|((_, continuum_period, length), mut pts)| {
                pts.sort_unstable();
                Contour { points: pts.into_iter().map(|(_, x)| x).collect(), continuum_period, length }
            })
            .collect();
        Ok(ContourSet { energy: self.energy, contours, fixed_points })
    }
}

/// Contours of an arbitrary integer function of (Q, P) at level `energy`.
pub fn contour_set(h: &impl Fn(i64, i64) -> i64, energy: i64, window: Window) -> Result<ContourSet> {
    Tracer { h, energy, window }.trace()
}

pub fn contour_points(system: &DHamSystem1D, energy: i64, window: Window) -> Result<ContourSet> {
    contour_set(&|q, p| system.h(q, p), energy, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub state: (i64, i64),
    /// The point is alone on its contour and stays put.
    pub stuck: bool,
}

fn step_in(set: &ContourSet, state: (i64, i64), direction: Direction) -> Result<StepOutcome> {
    for c in set.cycles() {
        if let Some(i) = c.points.iter().position(|&x| x == state) {
            let n = c.points.len();
            if n == 1 {
                break;
            }
            let j = match direction {
                Direction::Forward => (i + 1) % n,
                Direction::Backward => (i + n - 1) % n,
            };
            return Ok(StepOutcome { state: c.points[j], stuck: false });
        }
    }
    if set.fixed_points.contains(&state) || set.cycles().any(|c| c.points == [state]) {
        return Ok(StepOutcome { state, stuck: true });
    }
    Err(Error::WindowTooSmall { energy: set.energy })
}

/// One update of a single pair; the contour is searched in `window`.
pub fn step_pair(system: &DHamSystem1D, state: (i64, i64), direction: Direction, window: Window) -> Result<StepOutcome> {
    let set = contour_points(system, system.h(state.0, state.1), window)?;
    step_in(&set, state, direction)
}

/// Repeated single-pair updates with the contour of each visited energy cached.
#[derive(Debug)]
pub struct PairEvolution {
    system: DHamSystem1D,
    window: Window,
    cache: HashMap<i64, ContourSet>,
}

impl PairEvolution {
    pub fn new(system: DHamSystem1D, window: Window) -> Self {
        Self { system, window, cache: HashMap::new() }
    }

    pub fn step(&mut self, state: (i64, i64), direction: Direction) -> Result<StepOutcome> {
        let e = self.system.h(state.0, state.1);
        if !self.cache.contains_key(&e) {
            let set = contour_points(&self.system, e, self.window)?;
            self.cache.insert(e, set);
        }
        step_in(&self.cache[&e], state, direction)
    }
}

/// Several (Q_i, P_i) pairs with a joint integer Hamiltonian, updated one pair at a time.
#[derive(Clone)]
pub struct MultiPairSystem {
    pairs: usize,
    h: JointFn,
    window_half: i64,
}

impl fmt::Debug for MultiPairSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPairSystem({} pairs)", self.pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiState {
    pub q: Vec<i64>,
    pub p: Vec<i64>,
}

impl MultiPairSystem {
    pub fn new(pairs: usize, h: JointFn, window_half: i64) -> Self {
        Self { pairs, h, window_half }
    }

    pub fn energy(&self, s: &MultiState) -> i64 {
        (self.h)(&s.q, &s.p)
    }

    pub fn update_pair(&self, s: &MultiState, i: usize, direction: Direction) -> Result<MultiState> {
        if i >= self.pairs || s.q.len() != self.pairs || s.p.len() != self.pairs {
            return Err(Error::InvalidInput("pair index or state size does not match the system".into()));
        }
        let local = |q: i64, p: i64| {
            let mut qs = s.q.clone();
            let mut ps = s.p.clone();
            qs[i] = q;
            ps[i] = p;
            (self.h)(&qs, &ps)
        };
        let here = (s.q[i], s.p[i]);
        let set = contour_set(&local, local(here.0, here.1), Window::around(here, self.window_half))?;
        let out = step_in(&set, here, direction)?;
        let mut next = s.clone();
        next.q[i] = out.state.0;
        next.p[i] = out.state.1;
        Ok(next)
    }

    /// One cycle: pairs updated in `order`, first entry first.
    pub fn cycle_update(&self, s: &MultiState, order: &[usize]) -> Result<MultiState> {
        order.iter().try_fold(s.clone(), |acc, &i| self.update_pair(&acc, i, Direction::Forward))
    }

    /// Inverse of `cycle_update` with the same order.
    pub fn cycle_inverse(&self, s: &MultiState, order: &[usize]) -> Result<MultiState> {
        order.iter().rev().try_fold(s.clone(), |acc, &i| self.update_pair(&acc, i, Direction::Backward))
    }
}

/// Field (φ(x), P(x)) on a ring with H = Σ_x kinetic(P) + site(φ) + bond(φ(x), φ(x+1)).
#[derive(Clone)]
pub struct FieldSystem {
    pub kinetic: IntFn,
    pub site: IntFn,
    pub bond: PairFn,
    pub window_half: i64,
}

impl fmt::Debug for FieldSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FieldSystem")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldState {
    pub phi: Vec<i64>,
    pub p: Vec<i64>,
}

impl FieldSystem {
    pub fn energy(&self, s: &FieldState) -> i64 {
        let n = s.phi.len();
        (0..n)
            .map(|x| (self.kinetic)(s.p[x]) + (self.site)(s.phi[x]) + (self.bond)(s.phi[x], s.phi[(x + 1) % n]))
            .sum()
    }

    fn update_site(&self, s: &mut FieldState, x: usize, direction: Direction) -> Result<()> {
        let n = s.phi.len();
        let (left, right) = (s.phi[(x + n - 1) % n], s.phi[(x + 1) % n]);
        let local = |phi: i64, p: i64| (self.kinetic)(p) + (self.site)(phi) + (self.bond)(left, phi) + (self.bond)(phi, right);
        let here = (s.phi[x], s.p[x]);
        let set = contour_set(&local, local(here.0, here.1), Window::around(here, self.window_half))?;
        let out = step_in(&set, here, direction)?;
        s.phi[x] = out.state.0;
        s.p[x] = out.state.1;
        Ok(())
    }

    fn check(&self, s: &FieldState) -> Result<()> {
        if s.phi.len() != s.p.len() || s.phi.len() < 2 || !s.phi.len().is_multiple_of(2) {
            return Err(Error::InvalidInput("field needs an even ring with matching φ and P".into()));
        }
        Ok(())
    }

    /// All even sites, then all odd sites, each in the given order.
    pub fn field_update_ordered(&self, s: &FieldState, even: &[usize], odd: &[usize]) -> Result<FieldState> {
        self.check(s)?;
        let n = s.phi.len();
        let mut sorted_even = even.to_vec();
        let mut sorted_odd = odd.to_vec();
        sorted_even.sort_unstable();
        sorted_odd.sort_unstable();
        if sorted_even != (0..n).step_by(2).collect::<Vec<_>>() || sorted_odd != (1..n).step_by(2).collect::<Vec<_>>() {
            return Err(Error::InvalidInput("orders must list every even and every odd site once".into()));
        }
        let mut next = s.clone();
        for &x in even.iter().chain(odd) {
            self.update_site(&mut next, x, Direction::Forward)?;
        }
        Ok(next)
    }

    pub fn field_update(&self, s: &FieldState) -> Result<FieldState> {
        let n = s.phi.len();
        let even: Vec<usize> = (0..n).step_by(2).collect();
        let odd: Vec<usize> = (1..n).step_by(2).collect();
        self.field_update_ordered(s, &even, &odd)
    }

    pub fn field_update_inverse(&self, s: &FieldState) -> Result<FieldState> {
        self.check(s)?;
        let n = s.phi.len();
        let mut prev = s.clone();
        for x in (1..n).step_by(2).chain((0..n).step_by(2)) {
            self.update_site(&mut prev, x, Direction::Backward)?;
        }
        Ok(prev)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSummary {
    pub energies: Vec<i64>,
    pub points: usize,
    pub continuum_period: f64,
    /// Mean lattice speed over the continuum speed, Σ period / Σ points; None without points.
    pub ratio: Option<f64>,
}

/// Compares the lattice speed with |∇H| over the energy band [energy, energy + samples).
pub fn speed_statistics(system: &DHamSystem1D, energy: i64, samples: usize, window: Window) -> Result<SpeedSummary> {
    let mut points = 0;
    let mut period = 0.0;
    let energies: Vec<i64> = (0..samples as i64).map(|k| energy + k).collect();
    for &e in &energies {
        let set = contour_points(system, e, window)?;
        points += set.point_count();
        period += set.contours.iter().map(|c| c.continuum_period).sum::<f64>();
    }
    let ratio = (points > 0).then(|| period / points as f64);
    Ok(SpeedSummary { energies, points, continuum_period: period, ratio })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// For H = aP + bQ: lattice points per level inside the tilted square of side ε√(a²+b²), and the
/// lattice step length along a level line over |∇H|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchStatistics {
    pub points_per_contour: f64,
    pub speed_ratio: f64,
}

pub fn linear_patch(a: i64, b: i64, eps: i64) -> Result<PatchStatistics> {
    if a == 0 && b == 0 {
        return Err(Error::InvalidInput("H = aP + bQ needs a or b non-zero".into()));
    }
    let k = eps * (a * a + b * b);
    // Along a level line the lattice steps by (a, −b)/gcd in (Q, P).
    let g = gcd(a, b);
    let step = ((a / g) as f64).hypot((b / g) as f64);
    let grad = (a as f64).hypot(b as f64);
    let reach = eps * (a.abs() + b.abs()) + 1;
    let mut count = 0i64;
    for q in -reach..=reach {
        for p in -reach..=reach {
            let along = b * q + a * p;
            let across = a * q - b * p;
            if (0..k).contains(&along) && (0..k).contains(&across) {
                count += 1;
            }
        }
    }
    let levels = (0..k).filter(|v| v % g == 0).count() as f64;
    Ok(PatchStatistics { points_per_contour: count as f64 / levels, speed_ratio: step / grad })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// The bound holds with equality somewhere; orbits may grow linearly.
    Marginal,
    Unstable,
}

/// Q ← Q + T P⁺, then P⁺ ← P⁺ − V Q, with symmetric integer T and V.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerOscillator {
    t: Vec<Vec<i64>>,
    v: Vec<Vec<i64>>,
}

fn mat_vec(m: &[Vec<i64>], x: &[i64]) -> Result<Vec<i64>> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .try_fold(0i64, |acc, (a, b)| a.checked_mul(*b).and_then(|v| acc.checked_add(v)))
                .ok_or(Error::Overflow)
        })
        .collect()
}

fn vec_add(x: &[i64], y: &[i64], sign: i64) -> Result<Vec<i64>> {
    x.iter()
        .zip(y)
        .map(|(a, b)| b.checked_mul(sign).and_then(|v| a.checked_add(v)).ok_or(Error::Overflow))
        .collect()
}

impl IntegerOscillator {
    pub fn new(t: Vec<Vec<i64>>, v: Vec<Vec<i64>>) -> Result<Self> {
        let n = t.len();
        let square = |m: &Vec<Vec<i64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        let symmetric = |m: &Vec<Vec<i64>>| (0..n).all(|i| (0..n).all(|j| m[i][j] == m[j][i]));
        if n == 0 || !square(&t) || !square(&v) {
            return Err(Error::InvalidInput("T and V must be square matrices of one size".into()));
        }
        if !symmetric(&t) || !symmetric(&v) {
            return Err(Error::InvalidInput("T and V must be symmetric".into()));
        }
        Ok(Self { t, v })
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn step(&self, q: &[i64], pplus: &[i64]) -> Result<(Vec<i64>, Vec<i64>)> {
        let q1 = vec_add(q, &mat_vec(&self.t, pplus)?, 1)?;
        let p1 = vec_add(pplus, &mat_vec(&self.v, &q1)?, -1)?;
        Ok((q1, p1))
    }

    pub fn step_back(&self, q: &[i64], pplus: &[i64]) -> Result<(Vec<i64>, Vec<i64>)> {
        let p0 = vec_add(pplus, &mat_vec(&self.v, q)?, 1)?;
        let q0 = vec_add(q, &mat_vec(&self.t, &p0)?, -1)?;
        Ok((q0, p0))
    }

    /// 2H = P⁺ᵀ T P⁻ + Qᵀ V Q with P⁻ = P⁺ + V Q the momentum half a step earlier.
    pub fn twice_energy(&self, q: &[i64], pplus: &[i64]) -> Result<i128> {
        let pminus = vec_add(pplus, &mat_vec(&self.v, q)?, 1)?;
        let form = |m: &[Vec<i64>], x: &[i64], y: &[i64]| -> i128 {
            (0..x.len())
                .flat_map(|i| (0..y.len()).map(move |j| (i, j)))
                .map(|(i, j)| i128::from(x[i]) * i128::from(m[i][j]) * i128::from(y[j]))
                .sum()
        };
        Ok(form(&self.t, pplus, &pminus) + form(&self.v, q, q))
    }

    fn to_matrix(m: &[Vec<i64>]) -> DMatrix<f64> {
        let n = m.len();
        DMatrix::from_fn(n, n, |i, j| m[i][j] as f64)
    }

    /// T > 0, V > 0, 4V⁻¹ − T ≥ 0 and 4T⁻¹ − V ≥ 0. With T > 0 the last two are both the
    /// statement that every eigenvalue of T^{½} V T^{½} lies in (0, 4].
    pub fn stability(&self) -> Stability {
        let t = Self::to_matrix(&self.t);
        let v = Self::to_matrix(&self.v);
        let tol = 1e-9;
        let Some(chol) = t.clone().cholesky() else {
            return Stability::Unstable;
        };
        if v.clone().symmetric_eigenvalues().min() <= tol {
            return Stability::Unstable;
        }
        let l = chol.l();
        let m = l.transpose() * v * l;
        let eig = m.symmetric_eigenvalues();
        let top = eig.max();
        if top > 4.0 + tol {
            Stability::Unstable
        } else if top > 4.0 - tol {
            Stability::Marginal
        } else {
            Stability::Stable
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn osc_window() -> Window {
        Window::around((0, 0), 30)
    }

    /// Brute-force oracle: all lattice points at the energy in the window.
    fn scan(system: &DHamSystem1D, e: i64, w: Window) -> Vec<(i64, i64)> {
        let mut v = Vec::new();
        for q in w.q_min..=w.q_max {
            for p in w.p_min..=w.p_max {
                if system.h(q, p) == e {
                    v.push((q, p));
                }
            }
        }
        v
    }

    #[test]
    fn oscillator_contours_cover_the_level_set() {
        let sys = DHamSystem1D::oscillator();
        for e in 0..40 {
            let set = contour_points(&sys, e, osc_window()).unwrap();
            let mut found: Vec<(i64, i64)> = set.cycles().flat_map(|c| c.points.clone()).chain(set.fixed_points.clone()).collect();
            found.sort_unstable();
            let mut want = scan(&sys, e, osc_window());
            want.sort_unstable();
            assert_eq!(found, want, "E={e}");
        }
        let one = contour_points(&sys, 1, osc_window()).unwrap();
        let cycles: Vec<&Contour> = one.cycles().collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].points.len(), 8);
        assert!(contour_points(&sys, -1, osc_window()).unwrap().cycles().next().is_none());
        assert_eq!(scan(&sys, 50, osc_window()).len(), 0);
    }

    #[test]
    fn orbit_follows_the_hamiltonian_flow() {
        // At the top of an orbit ∂H/∂P > 0, so Q increases.
        let sys = DHamSystem1D::oscillator();
        let set = contour_points(&sys, 12, osc_window()).unwrap();
        for c in set.cycles().filter(|c| c.points.len() > 2) {
            let top = c.points.iter().enumerate().max_by_key(|(_, x)| (x.1, -x.0)).unwrap().0;
            let next = c.points[(top + 1) % c.points.len()];
            assert!(next.0 > c.points[top].0 || next.1 < c.points[top].1);
        }
    }

    #[test]
    fn window_must_contain_the_contour() {
        let sys = DHamSystem1D::oscillator();
        assert_eq!(contour_points(&sys, 20, Window::around((6, 0), 3)), Err(Error::WindowTooSmall { energy: 20 }));
        assert_eq!(step_pair(&sys, (7, 0), Direction::Forward, Window::around((7, 0), 2)), Err(Error::WindowTooSmall { energy: 21 }));
    }

    #[test]
    fn orbit_period_equals_point_count() {
        let sys = DHamSystem1D::oscillator();
        let set = contour_points(&sys, 2, osc_window()).unwrap();
        for c in set.cycles() {
            let n = c.points.len();
            let mut evo = PairEvolution::new(sys.clone(), osc_window());
            let mut s = c.points[0];
            for k in 1..=n {
                s = evo.step(s, Direction::Forward).unwrap().state;
                assert_eq!(s == c.points[0], k == n || n == 1);
            }
        }
    }

    #[test]
    fn fixed_points_stay() {
        // H = P² + Q²: the origin is a strict minimum and stays put.
        let sys = DHamSystem1D::new(Arc::new(|p| p * p), Arc::new(|q| q * q));
        let out = step_pair(&sys, (0, 0), Direction::Forward, Window::around((0, 0), 4)).unwrap();
        assert_eq!(out, StepOutcome { state: (0, 0), stuck: true });
        let max = DHamSystem1D::new(Arc::new(|p| -p * p), Arc::new(|q| -q * q));
        let out = step_pair(&max, (0, 0), Direction::Forward, Window::around((0, 0), 4)).unwrap();
        assert!(out.stuck);
    }

    #[test]
    fn long_run_conserves_energy_and_reverses() {
        let sys = DHamSystem1D::oscillator().with_magnetic(Arc::new(|q| q), Arc::new(|p| (p / 3).signum()));
        let w = Window::around((0, 0), 40);
        let mut evo = PairEvolution::new(sys.clone(), w);
        let start = (3, -2);
        let e = sys.h(start.0, start.1);
        let mut s = start;
        for _ in 0..1_000_000 {
            s = evo.step(s, Direction::Forward).unwrap().state;
            assert_eq!(sys.h(s.0, s.1), e);
        }
        for _ in 0..1_000_000 {
            s = evo.step(s, Direction::Backward).unwrap().state;
        }
        assert_eq!(s, start);
    }

    #[test]
    fn one_pair_update_is_a_bijection() {
        let sys = DHamSystem1D::oscillator();
        let mut evo = PairEvolution::new(sys.clone(), osc_window());
        let region: Vec<(i64, i64)> = scan_below(&sys, 60);
        let image: HashSet<(i64, i64)> = region.iter().map(|&s| evo.step(s, Direction::Forward).unwrap().state).collect();
        assert_eq!(image.len(), region.len());
        assert!(image.iter().all(|&(q, p)| sys.h(q, p) <= 60));
    }

    fn scan_below(sys: &DHamSystem1D, emax: i64) -> Vec<(i64, i64)> {
        let mut v = Vec::new();
        for q in -15..=15 {
            for p in -15..=15 {
                if sys.h(q, p) <= emax {
                    v.push((q, p));
                }
            }
        }
        v
    }

    fn two_pairs() -> MultiPairSystem {
        let h = |q: &[i64], p: &[i64]| q.iter().chain(p).map(|x| x * (x - 1) / 2).sum::<i64>();
        MultiPairSystem::new(2, Arc::new(h), 20)
    }

    /// Positive definite, so every level set is bounded.
    fn coupled_pairs() -> MultiPairSystem {
        let h = |q: &[i64], p: &[i64]| q.iter().chain(p).map(|x| x * x).sum::<i64>() + q[0] * q[1] + p[0] * q[1];
        MultiPairSystem::new(2, Arc::new(h), 20)
    }

    #[test]
    fn decoupled_pairs_factorise() {
        let multi = two_pairs();
        let single = DHamSystem1D::oscillator();
        let mut s = MultiState { q: vec![2, -1], p: vec![1, 3] };
        let (mut a, mut b) = ((2, 1), (-1, 3));
        for _ in 0..50 {
            s = multi.cycle_update(&s, &[0, 1]).unwrap();
            a = step_pair(&single, a, Direction::Forward, osc_window()).unwrap().state;
            b = step_pair(&single, b, Direction::Forward, osc_window()).unwrap().state;
            assert_eq!((s.q[0], s.p[0]), a);
            assert_eq!((s.q[1], s.p[1]), b);
        }
    }

    #[test]
    fn coupled_order_matters_and_cycles_invert() {
        let multi = coupled_pairs();
        let mut r = rng::stream(30, 0);
        let mut differ = false;
        for _ in 0..20 {
            let s = MultiState { q: vec![r.random_range(-4..=4), r.random_range(-4..=4)], p: vec![r.random_range(-4..=4), r.random_range(-4..=4)] };
            let a = multi.cycle_update(&s, &[0, 1]).unwrap();
            let b = multi.cycle_update(&s, &[1, 0]).unwrap();
            differ |= a != b;
            assert_eq!(multi.energy(&a), multi.energy(&s));
        }
        assert!(differ);
        let start = MultiState { q: vec![1, -2], p: vec![0, 2] };
        let mut s = start.clone();
        for _ in 0..10_000 {
            s = multi.cycle_update(&s, &[0, 1]).unwrap();
        }
        for _ in 0..10_000 {
            s = multi.cycle_inverse(&s, &[0, 1]).unwrap();
        }
        assert_eq!(s, start);
    }

    #[test]
    fn multi_pair_cycle_is_a_bijection() {
        let multi = coupled_pairs();
        let mut states = Vec::new();
        for q0 in -6..=6 {
            for q1 in -6..=6 {
                for p0 in -6..=6 {
                    for p1 in -6..=6 {
                        let s = MultiState { q: vec![q0, q1], p: vec![p0, p1] };
                        if multi.energy(&s) <= 8 {
                            states.push(s);
                        }
                    }
                }
            }
        }
        let set: HashSet<MultiState> = states.iter().cloned().collect();
        let image: HashSet<MultiState> = states.iter().map(|s| multi.cycle_update(s, &[0, 1]).unwrap()).collect();
        assert_eq!(image, set);
    }

    fn chain_field(window_half: i64) -> FieldSystem {
        FieldSystem {
            kinetic: Arc::new(|p| p * (p - 1) / 2),
            site: Arc::new(|f| f * (f - 1) / 2),
            bond: Arc::new(|a, b| (b - a) * (b - a - 1) / 2),
            window_half,
        }
    }

    #[test]
    fn field_update_order_within_parity_is_immaterial() {
        let sys = chain_field(20);
        let mut r = rng::stream(31, 0);
        let s = FieldState { phi: (0..8).map(|_| r.random_range(-3..=3)).collect(), p: (0..8).map(|_| r.random_range(-3..=3)).collect() };
        let base = sys.field_update(&s).unwrap();
        assert_eq!(sys.energy(&base), sys.energy(&s));
        for _ in 0..10 {
            let mut even: Vec<usize> = (0..8).step_by(2).collect();
            let mut odd: Vec<usize> = (1..8).step_by(2).collect();
            for v in [&mut even, &mut odd] {
                for i in (1..v.len()).rev() {
                    v.swap(i, r.random_range(0..=i));
                }
            }
            assert_eq!(sys.field_update_ordered(&s, &even, &odd).unwrap(), base);
        }
        assert_eq!(sys.field_update_inverse(&base).unwrap(), s);
    }

    #[test]
    fn field_signals_travel_at_most_two_links() {
        let sys = chain_field(20);
        let n = 16;
        let a = FieldState { phi: vec![0; n], p: vec![0; n] };
        let mut b = a.clone();
        b.phi[0] = 2;
        let (mut x, mut y) = (a, b);
        for t in 1..=3 {
            x = sys.field_update(&x).unwrap();
            y = sys.field_update(&y).unwrap();
            for site in 0..n {
                let dist = site.min(n - site);
                if dist > 2 * t {
                    assert_eq!((x.phi[site], x.p[site]), (y.phi[site], y.p[site]), "t={t} site={site}");
                }
            }
        }
    }

    #[test]
    fn zero_field_hamiltonian_is_a_no_op() {
        let sys = FieldSystem { kinetic: Arc::new(|_| 0), site: Arc::new(|_| 0), bond: Arc::new(|_, _| 0), window_half: 3 };
        let s = FieldState { phi: vec![1, -2, 3, 0], p: vec![4, 0, -1, 2] };
        assert_eq!(sys.field_update(&s).unwrap(), s);
    }

    #[test]
    fn speed_ratio_tends_to_one() {
        let sys = DHamSystem1D::oscillator();
        let summary = speed_statistics(&sys, 50, 40, Window::around((0, 0), 40)).unwrap();
        let ratio = summary.ratio.unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
        let below = speed_statistics(&sys, -5, 3, osc_window()).unwrap();
        assert_eq!(below.ratio, None);
    }

    #[test]
    fn linear_patch_statistics() {
        for (a, b) in [(3, 5), (2, 7), (1, 1), (4, 9)] {
            let s = linear_patch(a, b, 12).unwrap();
            assert_eq!(s.speed_ratio, 1.0);
            assert!((s.points_per_contour - 12.0).abs() < 0.05 * 12.0, "{a},{b}: {}", s.points_per_contour);
        }
    }

    #[test]
    fn integer_oscillator_conserves_energy() {
        let n: usize = 6;
        let t: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        let v: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 2 } else if i.abs_diff(j) == 1 { -1 } else { 0 }).collect())
            .collect();
        let osc = IntegerOscillator::new(t, v).unwrap();
        assert_eq!(osc.stability(), Stability::Stable);
        let (mut q, mut p) = (vec![3, -1, 0, 2, 5, -4], vec![1, 0, -2, 0, 1, 1]);
        let e = osc.twice_energy(&q, &p).unwrap();
        let mut peak = 0;
        for _ in 0..100_000 {
            (q, p) = osc.step(&q, &p).unwrap();
            assert_eq!(osc.twice_energy(&q, &p).unwrap(), e);
            peak = peak.max(q.iter().map(|x| x.abs()).max().unwrap());
        }
        assert!(peak < 100);
        let zero = vec![0; n];
        assert_eq!(osc.step(&zero, &zero).unwrap(), (zero.clone(), zero.clone()));
        let single = IntegerOscillator::new(vec![vec![1]], vec![vec![1]]).unwrap();
        let (mut q, mut p) = (vec![4], vec![-3]);
        // 2H = P⁺P⁻ + Q² with P⁻ = P⁺ + Q.
        let e = p[0] * (p[0] + q[0]) + q[0] * q[0];
        for _ in 0..1000 {
            let back = single.step_back(&single.step(&q, &p).unwrap().0, &single.step(&q, &p).unwrap().1).unwrap();
            assert_eq!(back, (q.clone(), p.clone()));
            (q, p) = single.step(&q, &p).unwrap();
            assert_eq!(i128::from(p[0] * (p[0] + q[0]) + q[0] * q[0]), i128::from(e));
        }
    }

    #[test]
    fn predicate_matches_empirical_boundedness() {
        let mut r = rng::stream(32, 0);
        let (mut stable, mut unstable) = (0, 0);
        while stable < 10 || unstable < 10 {
            let n = r.random_range(2..=3usize);
            // T positive definite: diagonal dominant with positive diagonal.
            let mut t = vec![vec![0i64; n]; n];
            let mut v = vec![vec![0i64; n]; n];
            for i in 0..n {
                for j in i..n {
                    let (a, b) = if i == j { (r.random_range(1..=2), r.random_range(-1..=4)) } else { (0, r.random_range(-2..=2)) };
                    t[i][j] = a;
                    t[j][i] = a;
                    v[i][j] = b;
                    v[j][i] = b;
                }
            }
            let osc = IntegerOscillator::new(t, v).unwrap();
            let class = osc.stability();
            if class == Stability::Marginal {
                continue;
            }
            if (class == Stability::Stable && stable >= 10) || (class == Stability::Unstable && unstable >= 10) {
                continue;
            }
            let (mut q, mut p): (Vec<i64>, Vec<i64>) = ((0..n).map(|_| r.random_range(-3..=3)).collect(), (0..n).map(|_| r.random_range(-3..=3)).collect());
            if q.iter().chain(&p).all(|&x| x == 0) {
                q[0] = 1;
            }
            let mut bounded = true;
            for _ in 0..100_000 {
                match osc.step(&q, &p) {
                    Ok((a, b)) if a.iter().chain(&b).all(|x| x.abs() < 1_000_000) => (q, p) = (a, b),
                    _ => {
                        bounded = false;
                        break;
                    }
                }
            }
            assert_eq!(bounded, class == Stability::Stable, "{osc:?}");
            if class == Stability::Stable {
                stable += 1;
            } else {
                unstable += 1;
            }
        }
    }
}
