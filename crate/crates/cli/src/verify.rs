use std::f64::consts::{PI, SQRT_2, TAU};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use ontolab_core::linalg::{self, CMatrix};
use ontolab_core::{bch, bell, cogwheel, dham, fermi2q, hilbert, lattice2d, neutrino, pq, rng, rotator};

use crate::experiments::{edge_block_error, ExperimentArgs, CATALOGUE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

/// Work sizes that differ between the suites.
#[derive(Debug, Clone)]
struct Budget {
    lattice_steps: usize,
    dham_steps: usize,
    mc_samples: usize,
    max_modes: usize,
    edge_windows: Vec<usize>,
}

impl Budget {
    fn of(suite: Suite) -> Self {
        match suite {
            Suite::Fast => Self {
                lattice_steps: 10_000,
                dham_steps: 20_000,
                mc_samples: 1_000_000,
                max_modes: 8,
                edge_windows: vec![21, 41],
            },
            Suite::Full => Self {
                lattice_steps: 100_000,
                dham_steps: 1_000_000,
                mc_samples: 1_000_000,
                max_modes: 10,
                edge_windows: vec![21, 41, 81],
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

type Outcome = Result<String, String>;
type CheckFn = fn(&Budget) -> Outcome;

fn pass_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn core<T>(r: ontolab_core::error::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("hilbert", "hamiltonian_round_trip", hilbert_round_trip),
    ("hilbert", "plain_damped_closed_form", hilbert_plain_damped),
    ("cogwheel", "clock_eigenvalues", cogwheel_clock),
    ("cogwheel", "composite_levels", cogwheel_composite),
    ("rotator", "beable_evolution", rotator_evolution),
    ("rotator", "overlap_rows", rotator_overlaps),
    ("pq", "edge_projector_limit", pq_edge),
    ("pq", "wavelet_shape", pq_wavelet),
    ("pq", "wavelet_orthonormality", pq_orthonormality),
    ("bell", "chsh", bell_chsh),
    ("bell", "correlation_identity", bell_identity),
    ("lattice2d", "exact_evolution", lattice_run),
    ("lattice2d", "dispersion", lattice_dispersion),
    ("neutrino", "pair_correlation", neutrino_correlation),
    ("dham", "orbit_conservation", dham_orbit),
    ("dham", "speed_ratio", dham_speed),
    ("bch", "order_scaling", bch_scaling),
    ("bch", "conjugacy_symmetries", bch_symmetries),
    ("bch", "half_angle_series", bch_series),
    ("bch", "interaction_expansion", bch_interaction),
    ("fermi2q", "fock_spectrum", fermi_spectrum),
    ("fermi2q", "dirac_vacuum", fermi_vacuum),
    ("fermi2q", "heisenberg_permutation", fermi_heisenberg),
    ("cli", "empty_universes", empty_universes),
];

pub fn run(suite: Suite) -> Report {
    let budget = Budget::of(suite);
    let checks: Vec<CheckReport> = CHECKS
        .iter()
        .map(|&(module, name, f)| {
            let start = Instant::now();
            let outcome = f(&budget);
            let seconds = start.elapsed().as_secs_f64();
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckReport { module, name, passed, detail, seconds }
        })
        .collect();
    Report { suite, passed: checks.iter().all(|c| c.passed), checks }
}

fn hilbert_round_trip(_: &Budget) -> Outcome {
    let mut r = rng::stream(11, 0);
    let mut worst = 0.0f64;
    for n in [1, 2, 5, 16] {
        let u = core(hilbert::UnitaryOperator::new(linalg::haar_unitary(n, &mut r)))?;
        let h = core(hilbert::hamiltonian_from_unitary(&u, None))?;
        worst = worst.max(linalg::max_abs_diff(&h.evolve(1.0), u.matrix()));
    }
    pass_if(worst <= 1e-9, format!("max |exp(-iH) - U| = {worst:.3e}"))
}

fn hilbert_plain_damped(_: &Budget) -> Outcome {
    let mut worst = 0.0f64;
    for r in [2.0f64, 8.0, 32.0] {
        for k in 1..40 {
            let w = TAU * k as f64 / 40.0;
            let closed = 2.0 * ((1.0f64 / r).exp() - w.cos()).atan2(w.sin());
            worst = worst.max((hilbert::approx_curve(w, r, hilbert::FourierScheme::PlainDamped) - closed).abs());
        }
    }
    pass_if(worst < 1e-12, format!("max deviation from closed form {worst:.3e}"))
}

fn cogwheel_clock(_: &Budget) -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=64 {
        let mut e = core(cogwheel::hamiltonian_matrix(n))?.eigenvalues();
        e.sort_by(f64::total_cmp);
        for (k, v) in e.iter().enumerate() {
            worst = worst.max((v - TAU * k as f64 / n as f64).abs());
        }
    }
    pass_if(worst < 1e-10, format!("N = 2..64, max |E_k - 2πk/N| = {worst:.3e}"))
}

fn cogwheel_composite(_: &Budget) -> Outcome {
    let model = core(cogwheel::PermutationModel::from_cycle_lengths(&[3, 5, 7]))?;
    let spec = core(cogwheel::decompose_cycles(&model, Some(&[0.0, 0.4, 1.1])))?;
    let mut got: Vec<f64> = spec.levels.iter().map(|l| l.energy).collect();
    let mut want: Vec<f64> = [(3, 0.0), (5, 0.4), (7, 1.1)]
        .iter()
        .flat_map(|&(n, d)| (0..n).map(move |k| d + TAU * k as f64 / n as f64))
        .collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    let worst = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    pass_if(got.len() == 15 && worst < 1e-10, format!("{} levels, max deviation {worst:.3e}", got.len()))
}

fn rotator_evolution(_: &Budget) -> Outcome {
    for ell in [0.5, 1.0, 2.5, 6.0] {
        let p = core(rotator::RotatorParams::from_ell(ell))?;
        for t in [1, 2, 5, -3] {
            if !rotator::deterministic_evolution_check(p, t) {
                return Err(format!("ℓ = {ell}, t = {t}: beables not permuted"));
            }
        }
    }
    Ok("ℓ ∈ {1/2, 1, 5/2, 6}, t ∈ {1, 2, 5, -3}".into())
}

fn rotator_overlaps(_: &Budget) -> Outcome {
    let p = core(rotator::RotatorParams::from_ell(40.0))?;
    let o = core(rotator::beable_overlaps(p))?;
    let worst = (0..p.dim())
        .map(|j| ((0..p.dim()).map(|s| o[(j, s)].norm_sqr()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    pass_if(worst < 1e-8, format!("ℓ = 40, max |row sum - 1| = {worst:.3e}"))
}

fn pq_edge(b: &Budget) -> Outcome {
    let errors = b.edge_windows.iter().map(|&w| edge_block_error(w, 4).map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let at41 = b.edge_windows.iter().position(|&w| w == 41).map(|i| errors[i]).unwrap_or(f64::NAN);
    pass_if(monotone && at41 < 0.05, format!("windows {:?}: block errors {errors:.4?}", b.edge_windows))
}

fn pq_wavelet(_: &Budget) -> Outcome {
    let centre = core(pq::wavefunction(0.0, 0, 0, 4096))?.norm();
    let half_odd = core(pq::wavefunction(1.5, 0, 0, 4096))?.norm();
    let exact = 2.0 / (3.0 * PI);
    pass_if(
        centre > 0.95 && (half_odd - exact).abs() < 1e-6,
        format!("|ψ(0)| = {centre:.6}, |ψ(1.5)| = {half_odd:.9} against 2/(3π) = {exact:.9}"),
    )
}

fn pq_orthonormality(_: &Budget) -> Outcome {
    let quad = pq::LineQuadrature::default();
    let norm = core(quad.overlap((0, 0), (0, 0)))?;
    let norm_err = (norm - 1.0).norm();
    let mut r = rng::stream(12, 0);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let s1 = (r.random_range(-3..=3), r.random_range(-3..=3));
        let mut s2 = s1;
        while s2 == s1 {
            s2 = (r.random_range(-3..=3), r.random_range(-3..=3));
        }
        worst = worst.max(core(quad.overlap(s1, s2))?.norm());
    }
    pass_if(norm_err < 1e-6 && worst < 1e-5, format!("|<0,0|0,0> - 1| = {norm_err:.3e}, max off-diagonal {worst:.3e}"))
}

fn bell_chsh(b: &Budget) -> Outcome {
    let settings = bell::Settings::from_degrees([22.5, -22.5, 0.0, 45.0]);
    let start = Instant::now();
    let quad = core(bell::chsh(&settings, 1024))?;
    let mc = core(bell::monte_carlo_chsh(&settings, b.mc_samples, 7))?;
    let secs = start.elapsed().as_secs_f64();
    let target = 2.0 * SQRT_2;
    pass_if(
        (quad.abs() - target).abs() < 1e-5 && (mc.s.abs() - target).abs() < 0.01 && secs < 5.0,
        format!("quadrature {quad:.8}, Monte Carlo {:.5} ± {:.5} ({} samples), {secs:.2} s", mc.s, mc.stderr, b.mc_samples),
    )
}

fn bell_identity(_: &Budget) -> Outcome {
    let mut r = rng::stream(13, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (a, b): (f64, f64) = (r.random_range(0.0..PI), r.random_range(0.0..PI));
        worst = worst.max((core(bell::expectation_ab(a, b, 1024))? - (2.0 * (a - b)).cos()).abs());
    }
    pass_if(worst < 1e-6, format!("50 random settings, max |<AB> - cos 2(a-b)| = {worst:.3e}"))
}

fn lattice_run(b: &Budget) -> Outcome {
    let n = 64;
    let mut r = rng::stream(14, 0);
    let q: Vec<i64> = (0..n).map(|_| r.random_range(-5..=5)).collect();
    let p: Vec<i64> = (0..n).map(|_| r.random_range(-5..=5)).collect();
    let start = core(lattice2d::IntegerFieldState::new(q, p))?;
    let energy = start.classical_energy();
    let mut s = start.clone();
    for t in 0..b.lattice_steps {
        let now = s.movers();
        let next = s.step();
        let later = next.movers();
        if next.classical_energy() != energy {
            return Err(format!("energy changed at step {}", t + 1));
        }
        if (0..n).any(|x| later.left[x] != now.left[(x + 1) % n] || later.right[x] != now.right[(x + n - 1) % n]) {
            return Err(format!("movers did not translate at step {}", t + 1));
        }
        s = next;
    }
    let back = (0..b.lattice_steps).fold(s, |s, _| s.step_back());
    pass_if(back == start, format!("L = 64, {} steps, energy {energy} exact, round trip bit-exact", b.lattice_steps))
}

fn lattice_dispersion(_: &Budget) -> Outcome {
    let corner = core(lattice2d::dispersion_stability(&[PI, PI]))?;
    let growth = match corner.stability {
        lattice2d::Stability::Unstable { growth } if growth > 1.0 => growth,
        other => return Err(format!("k = (π,π) reported {other:?}")),
    };
    for i in 0..=256 {
        let k = PI * i as f64 / 256.0;
        if let lattice2d::Stability::Unstable { growth } = core(lattice2d::dispersion_stability(&[k]))?.stability {
            return Err(format!("d = 1 mode k = {k} unstable with growth {growth}"));
        }
    }
    Ok(format!("(π,π) spectral radius {growth:.6}; every d = 1 mode stable"))
}

fn neutrino_correlation(_: &Budget) -> Outcome {
    let mut worst = 0.0f64;
    for dr in [1.0, 0.5] {
        for k in 0..=32 {
            let d = k as f64 * dr;
            let diff = core(neutrino::vacuum_pair_correlation(d, 0.0, dr))? - core(neutrino::vacuum_pair_correlation_quadrature(d, 0.0, dr))?;
            worst = worst.max(diff.abs());
        }
    }
    pass_if(worst < 1e-10, format!("Δr/dr = 0..32, max |closed - quadrature| = {worst:.3e}"))
}

fn dham_orbit(b: &Budget) -> Outcome {
    let sys = dham::DHamSystem1D::oscillator();
    let window = dham::Window::around((0, 0), 64);
    let mut evo = dham::PairEvolution::new(sys.clone(), window);
    let start = (4, -1);
    let e = sys.h(start.0, start.1);
    let mut s = start;
    for t in 0..b.dham_steps {
        s = core(evo.step(s, dham::Direction::Forward))?.state;
        if sys.h(s.0, s.1) != e {
            return Err(format!("H changed at step {}", t + 1));
        }
    }
    for _ in 0..b.dham_steps {
        s = core(evo.step(s, dham::Direction::Backward))?.state;
    }
    pass_if(s == start, format!("{} steps at H = {e}, reversed bit-exactly", b.dham_steps))
}

fn dham_speed(_: &Budget) -> Outcome {
    let sys = dham::DHamSystem1D::oscillator();
    let window = dham::Window::around((0, 0), 64);
    let mut ratios = Vec::new();
    for e in [20, 50, 100] {
        let r = core(dham::speed_statistics(&sys, e, 40, window))?.ratio.ok_or(format!("no points near E = {e}"))?;
        ratios.push(r);
    }
    pass_if(ratios.iter().all(|r| (r - 1.0).abs() < 0.1), format!("speed ratios at E = 20, 50, 100: {ratios:.4?}"))
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn frob(m: &CMatrix) -> f64 {
    m.norm()
}

/// Halving the scale must divide each error by 2^(power(order)) within a factor 3.
fn scales_as(errs: &[f64], power: i32) -> bool {
    let expected = 2f64.powi(power);
    errs.windows(2).all(|w| {
        let ratio = w[0] / w[1];
        ratio > expected / 3.0 && ratio < expected * 3.0
    })
}

fn bch_scaling(_: &Budget) -> Outcome {
    let mut r = rng::stream(15, 0);
    let p = linalg::random_anti_hermitian(3, 1.0, &mut r);
    let q = linalg::random_anti_hermitian(3, 1.0, &mut r);
    let mut detail = Vec::new();
    for order in 1..=4 {
        let errs = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| {
                let (pe, qe) = (&p * linalg::re(e), &q * linalg::re(e));
                let z = core(bch::bch_truncated(&pe, &qe, order))?;
                Ok(frob(&(linalg::exp_anti_hermitian(&z) - linalg::exp_anti_hermitian(&pe) * linalg::exp_anti_hermitian(&qe))))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if !scales_as(&errs, order as i32 + 1) {
            return Err(format!("order {order}: errors {}", sci(&errs)));
        }
        detail.push(format!("{:.2}", errs[1] / errs[2]));
    }
    Ok(format!("halving ratios at orders 1-4: {}", detail.join(", ")))
}

fn bch_symmetries(_: &Budget) -> Outcome {
    let mut r = rng::stream(16, 0);
    let mut worst = 0.0f64;
    for _ in 0..16 {
        let s = linalg::random_anti_hermitian(3, 0.5, &mut r);
        let d = linalg::random_anti_hermitian(3, 0.5, &mut r);
        let base = core(bch::conjugacy_expansion(&s, &d, 7))?;
        let flipped = core(bch::conjugacy_expansion(&s, &(-&d), 7))?;
        let negated = core(bch::conjugacy_expansion(&(-&s), &(-&d), 7))?;
        worst = worst.max(linalg::max_abs_diff(&base, &flipped)).max(linalg::max_abs_diff(&base, &(-negated)));
    }
    pass_if(worst < 1e-13, format!("even in D and odd overall, max defect {worst:.3e}"))
}

fn bch_series(_: &Budget) -> Outcome {
    use num_rational::Ratio;
    let c = bch::half_angle_series(3);
    let want = [Ratio::from_integer(1), Ratio::new(1, 24), Ratio::new(7, 5760)];
    pass_if(c[..3] == want, format!("coefficients {}, {}, {}", c[0], c[1], c[2]))
}

fn bch_interaction(_: &Budget) -> Outcome {
    let mut r = rng::stream(17, 0);
    let n = 6;
    let u = linalg::haar_unitary(n, &mut r);
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| linalg::re(3.0 * (k as f64 / (n - 1) as f64 - 0.5))));
    let h0 = core(hilbert::HermitianOperator::new(&u * diag * u.adjoint()))?;
    let dir = linalg::random_hermitian(n, &mut r);
    let dir = &dir * linalg::re(1.0 / linalg::operator_norm(&dir));
    let errs = [0.02, 0.01, 0.005]
        .iter()
        .map(|&e| {
            let b = core(hilbert::HermitianOperator::new(&dir * linalg::re(e)))?;
            let h = core(bch::interaction_expansion(&h0, &b, bch::ExpansionOrder::Exact))?;
            Ok(frob(&(linalg::evolution(h.matrix(), 1.0) - bch::split_evolution(&h0, &b))))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    pass_if(scales_as(&errs, 2), format!("6×6, ‖B‖ = 0.02, 0.01, 0.005: errors {}", sci(&errs)))
}

fn fermi_spectrum(b: &Budget) -> Outcome {
    let mut r = rng::stream(18, 0);
    let mut worst = 0.0f64;
    for m in 1..=b.max_modes {
        let h = linalg::random_hermitian(m, &mut r);
        let levels = core(fermi2q::fock_spectrum(&h))?;
        let sums = fermi2q::subset_sums(&linalg::hermitian_eigenvalues(&h));
        if levels.len() != sums.len() {
            return Err(format!("M = {m}: {} levels for {} subsets", levels.len(), sums.len()));
        }
        worst = worst.max(levels.iter().zip(&sums).map(|(l, s)| (l.1 - s).abs()).fold(0.0, f64::max));
    }
    pass_if(worst < 1e-9, format!("M = 1..{}, max |level - subset sum| = {worst:.3e}", b.max_modes))
}

fn fermi_vacuum(_: &Budget) -> Outcome {
    let mut r = rng::stream(19, 0);
    let h = linalg::random_hermitian(6, &mut r);
    let vac = core(fermi2q::dirac_vacuum(&h))?;
    let lowest = vac.normal_ordered.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    let at_vacuum = (vac.state.adjoint() * vac.normal_ordered.matrix() * &vac.state)[(0, 0)].norm();
    pass_if(lowest > -1e-9 && at_vacuum < 1e-9, format!("min normal-ordered level {lowest:.3e}, vacuum energy {at_vacuum:.3e}"))
}

fn fermi_heisenberg(_: &Budget) -> Outcome {
    for perm in [vec![1, 0], vec![2, 0, 1], vec![1, 2, 3, 0], vec![3, 4, 0, 2, 1]] {
        for t in [1, 2, 3] {
            for recenter in [false, true] {
                if !core(fermi2q::heisenberg_permutation(&perm, t, recenter, 1e-9))? {
                    return Err(format!("{perm:?} at t = {t} (recenter {recenter}) is not a field permutation"));
                }
            }
        }
    }
    Ok("fields permute at integer times for five permutations".into())
}

fn empty_universes(_: &Budget) -> Outcome {
    let cases = [
        ("cogwheel.spectrum", serde_json::json!({ "cycles": [] })),
        ("fermi2q.spectrum", serde_json::json!({ "perm": [] })),
        ("pq.edge", serde_json::json!({ "windows": [] })),
        ("dham.speed", serde_json::json!({ "E": [] })),
        ("hilbert.omega_curves", serde_json::json!({ "R": [] })),
    ];
    for (name, params) in cases.clone() {
        let Value::Object(map) = params else { unreachable!() };
        let args = ExperimentArgs::from_params(name, &map).map_err(|e| e.to_string())?.with_defaults();
        args.execute(None).map_err(|e| format!("{name}: {e}"))?;
    }
    let listed = CATALOGUE.len();
    pass_if(listed >= 12, format!("{} empty configurations ran; {listed} experiments catalogued", cases.len()))
}

impl Report {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or_else(|_| Value::Object(Map::new()))
    }
}
