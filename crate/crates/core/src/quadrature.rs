//! Composite Gauss-Legendre rules and a periodic midpoint rule.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

/// Gauss-Legendre rule of fixed degree applied panel by panel.
#[derive(Debug, Clone)]
pub struct Composite {
    pairs: Vec<(f64, f64)>,
    panels: usize,
}

impl Composite {
    pub fn new(degree: usize, panels: usize) -> Self {
        let degree = NonZeroUsize::new(degree).expect("degree must be positive");
        let rule = GaussLegendre::new(degree);
        let pairs = rule.as_node_weight_pairs().to_vec();
        Self { pairs, panels: panels.max(1) }
    }

    pub fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = (b - a) / self.panels as f64;
        (0..self.panels).flat_map(move |k| {
            let lo = a + k as f64 * h;
            self.pairs
                .iter()
                .map(move |&(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w))
        })
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex(&self, a: f64, b: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes(a, b).map(|(x, w)| f(x) * w).sum()
    }

    /// Integrate over consecutive intervals given by sorted breakpoints.
    pub fn integrate_pieces(&self, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.integrate(w[0], w[1], &f))
            .sum()
    }
}

/// Midpoint rule on one period [a, a+period): spectrally accurate for smooth periodic f.
pub fn periodic_midpoint(a: f64, period: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let h = period / n as f64;
    (0..n).map(|k| f(a + (k as f64 + 0.5) * h)).sum::<Complex64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = Composite::new(8, 3);
        let v = q.integrate(-1.0, 2.0, |x| x.powi(7) - 3.0 * x * x);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn pieces_with_kink() {
        let q = Composite::new(20, 1);
        let v = q.integrate_pieces(&[-1.0, 0.0, 1.0], f64::abs);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_rule_on_trig() {
        let v = periodic_midpoint(0.0, std::f64::consts::TAU, 16, |x| Complex64::new(x.cos().powi(2), 0.0));
        assert!((v.re - std::f64::consts::PI).abs() < 1e-13);
    }
}
