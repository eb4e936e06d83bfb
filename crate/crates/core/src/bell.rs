//! Setting-correlated hidden-variable model for polarised photon pairs and the CHSH combination.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::Composite;
use crate::rng;

const CHUNK: usize = 1 << 16;

/// Reduce an angle into [0, π).
pub fn reduce_half_turn(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Polariser angles for the two observers, each with two choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Settings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self {
            a: reduce_half_turn(a),
            a_prime: reduce_half_turn(a_prime),
            b: reduce_half_turn(b),
            b_prime: reduce_half_turn(b_prime),
        }
    }

    pub fn from_degrees(angles: [f64; 4]) -> Self {
        let [a, ap, b, bp] = angles.map(f64::to_radians);
        Self::new(a, ap, b, bp)
    }

    /// The four (Alice, Bob, sign) terms of S.
    pub fn terms(&self) -> [(f64, f64, f64); 4] {
        [
            (self.a, self.b, 1.0),
            (self.a_prime, self.b, 1.0),
            (self.a, self.b_prime, 1.0),
            (self.a_prime, self.b_prime, -1.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OntPhoton {
    c: f64,
}

impl OntPhoton {
    pub fn new(c: f64) -> Self {
        Self { c: reduce_half_turn(c) }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// ±1 outcome behind a polariser at angle `setting`.
    pub fn outcome(&self, setting: f64) -> i8 {
        sign_of_cos2(self.c - setting)
    }
}

/// sign(cos 2x) with sign(0) = +1.
pub fn sign_of_cos2(x: f64) -> i8 {
    if (2.0 * x).cos() >= 0.0 {
        1
    } else {
        -1
    }
}

/// Conditional density of the photon angle c given the settings a and b.
pub fn w_conditional(c: f64, a: f64, b: f64) -> f64 {
    0.5 * (4.0 * c - 2.0 * a - 2.0 * b).sin().abs()
}

/// ∫₀^c W(x|a,b) dx.
pub fn w_cdf(c: f64, a: f64, b: f64) -> f64 {
    let shift = (2.0 * a + 2.0 * b) / 4.0;
    hump_integral(c - shift) - hump_integral(-shift)
}

// ∫₀^y ½|sin 4x| dx, valid for any real y.
fn hump_integral(y: f64) -> f64 {
    let m = (4.0 * y / PI).floor();
    let r = 4.0 * y - m * PI;
    (2.0 * m + 1.0 - r.cos()) / 8.0
}

/// Points in [0, π) where either the density or one of the outcome signs has a kink.
fn breakpoints(a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![0.0, PI];
    for k in 0..8 {
        let kf = k as f64;
        pts.push(reduce_half_turn((2.0 * a + 2.0 * b) / 4.0 + kf * FRAC_PI_4));
        pts.push(reduce_half_turn(a + FRAC_PI_4 + kf * FRAC_PI_2));
        pts.push(reduce_half_turn(b + FRAC_PI_4 + kf * FRAC_PI_2));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    pts
}

fn panel_rule(quad_points: usize, pieces: usize) -> Result<Composite> {
    if quad_points < 1024 {
        return Err(Error::InvalidInput(format!("{quad_points} quadrature points; need at least 1024")));
    }
    Ok(Composite::new(16, (quad_points / (16 * pieces)).max(1)))
}

/// ⟨AB⟩ = ∫ W(c|a,b) A(c) B(c) dc, integrated piecewise between kinks.
pub fn expectation_ab(a: f64, b: f64, quad_points: usize) -> Result<f64> {
    let pts = breakpoints(a, b);
    let rule = panel_rule(quad_points, pts.len() - 1)?;
    Ok(rule.integrate_pieces(&pts, |c| {
        let photon = OntPhoton { c };
        w_conditional(c, a, b) * f64::from(photon.outcome(a) * photon.outcome(b))
    }))
}

/// ∫₀^π W(c|a,b) dc by the same piecewise quadrature.
pub fn w_normalisation(a: f64, b: f64, quad_points: usize) -> Result<f64> {
    let pts = breakpoints(a, b);
    let rule = panel_rule(quad_points, pts.len() - 1)?;
    Ok(rule.integrate_pieces(&pts, |c| w_conditional(c, a, b)))
}

pub fn chsh(settings: &Settings, quad_points: usize) -> Result<f64> {
    settings
        .terms()
        .iter()
        .map(|&(a, b, s)| Ok(s * expectation_ab(a, b, quad_points)?))
        .sum()
}

/// Draws c from W(·|a,b): choose one of the four equal humps, then invert the sin CDF inside it.
pub fn sample_c<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let hump = rng.random_range(0..4) as f64;
    let u: f64 = rng.random();
    let t = (1.0 - 2.0 * u).acos() / 4.0;
    reduce_half_turn((2.0 * a + 2.0 * b) / 4.0 + hump * FRAC_PI_4 + t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub c: f64,
    pub alice: i8,
    pub bob: i8,
}

/// `n` trials at fixed settings; chunk `k` uses RNG stream `k` of `seed`, so the output does not
/// depend on thread count.
pub fn sample_trials(a: f64, b: f64, n: usize, seed: u64) -> Result<Vec<Trial>> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let chunks: Vec<Vec<Trial>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| {
                    let photon = OntPhoton { c: sample_c(a, b, &mut r) };
                    Trial { c: photon.c, alice: photon.outcome(a), bob: photon.outcome(b) }
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Empirical ⟨AB⟩ from `n` sampled trials, without storing them.
pub fn sampled_correlation(a: f64, b: f64, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let total: i64 = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| {
                    let photon = OntPhoton { c: sample_c(a, b, &mut r) };
                    i64::from(photon.outcome(a) * photon.outcome(b))
                })
                .sum::<i64>()
        })
        .sum();
    Ok(total as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloChsh {
    pub s: f64,
    pub stderr: f64,
}

/// S from `n` trials per term; term `i` uses seed `seed + i`.
pub fn monte_carlo_chsh(settings: &Settings, n: usize, seed: u64) -> Result<MonteCarloChsh> {
    let mut s = 0.0;
    let mut var = 0.0;
    for (i, &(a, b, sign)) in settings.terms().iter().enumerate() {
        let e = sampled_correlation(a, b, n, seed.wrapping_add(i as u64))?;
        s += sign * e;
        var += (1.0 - e * e) / n as f64;
    }
    Ok(MonteCarloChsh { s, stderr: var.sqrt() })
}

/// Distribution of c that ignores the settings.
#[derive(Debug, Clone, PartialEq)]
pub enum HiddenDensity {
    Uniform,
    Delta(f64),
    /// Weights over equal bins of [0, π); normalised on use.
    Histogram(Vec<f64>),
}

/// S for a setting-independent density. Every integrand is piecewise constant, so the integral is
/// exact: midpoint value times length on each piece between sign changes and bin edges.
pub fn lhv_chsh(settings: &Settings, density: &HiddenDensity) -> Result<f64> {
    let bracket = |c: f64| -> f64 {
        let photon = OntPhoton { c };
        settings
            .terms()
            .iter()
            .map(|&(a, b, s)| s * f64::from(photon.outcome(a) * photon.outcome(b)))
            .sum()
    };
    let weights = match density {
        HiddenDensity::Delta(c) => return Ok(bracket(reduce_half_turn(*c))),
        HiddenDensity::Uniform => vec![1.0],
        HiddenDensity::Histogram(w) => w.clone(),
    };
    if weights.is_empty() || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidInput("histogram weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("histogram has zero mass".into()));
    }
    let bins = weights.len();
    let mut pts: Vec<f64> = (0..=bins).map(|k| PI * k as f64 / bins as f64).collect();
    for s in [settings.a, settings.a_prime, settings.b, settings.b_prime] {
        for k in 0..4 {
            pts.push(reduce_half_turn(s + FRAC_PI_4 + k as f64 * FRAC_PI_2));
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let width = PI / bins as f64;
    Ok(pts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let bin = ((mid / width) as usize).min(bins - 1);
            weights[bin] / (total * width) * (w[1] - w[0]) * bracket(mid)
        })
        .sum())
}
