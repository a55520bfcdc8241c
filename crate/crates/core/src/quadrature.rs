//! One-dimensional quadrature independent of the grid pipeline.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|(x, w)| (c + h * x, h * w)).collect()
}

/// Adaptive bisection with an embedded pair of Gauss–Legendre rules (10 and 21
/// points); an interval is accepted once the two estimates agree.
pub struct AdaptiveQuadrature {
    low: GaussLegendre,
    high: GaussLegendre,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for AdaptiveQuadrature {
    fn default() -> Self {
        Self {
            low: GaussLegendre::new(NonZeroUsize::new(10).unwrap()),
            high: GaussLegendre::new(NonZeroUsize::new(21).unwrap()),
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            max_depth: 48,
        }
    }
}

impl AdaptiveQuadrature {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let whole = self.high.integrate(a, b, &f);
        let tol = (self.rel_tol * whole.abs()).max(self.abs_tol);
        self.recurse(&f, a, b, whole, tol, 0)
    }

    fn recurse<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, est: f64, tol: f64, depth: usize) -> f64 {
        let coarse = self.low.integrate(a, b, f);
        if (est - coarse).abs() <= tol || depth >= self.max_depth {
            return est;
        }
        let m = 0.5 * (a + b);
        let left = self.high.integrate(a, m, f);
        let right = self.high.integrate(m, b, f);
        self.recurse(f, a, m, left, 0.5 * tol, depth + 1) + self.recurse(f, m, b, right, 0.5 * tol, depth + 1)
    }

    /// `2π ∫₀^R f(ρ) ρ dρ`: the planar integral of a radial function.
    pub fn radial(&self, f: impl Fn(f64) -> f64, r_max: f64) -> f64 {
        2.0 * PI * self.integrate(|r| f(r) * r, 0.0, r_max)
    }
}
