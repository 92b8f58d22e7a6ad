//! Gauss–Legendre rules and integration of `∫_0^{upper} g(s, z_s) ds` along a
//! piecewise-constant covariate path.

use std::f64::consts::PI;

use crate::paths::CovariatePath;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Fixed-order panel quadrature along covariate segments.
///
/// Each grid segment intersected with `[0, upper]` is split into equal panels
/// no wider than `max_panel`, and each panel gets the same Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct SegmentQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    max_panel: f64,
}

pub const DEFAULT_NODES: usize = 16;

impl SegmentQuadrature {
    pub fn new(n_nodes: usize, max_panel: f64) -> Self {
        assert!(max_panel > 0.0, "panel width must be positive");
        let (nodes, weights) = gauss_legendre(n_nodes);
        Self {
            nodes,
            weights,
            max_panel,
        }
    }

    /// 16 nodes, panels at most `T / 16` wide.
    pub fn for_horizon(horizon: f64) -> Self {
        Self::new(DEFAULT_NODES, horizon / 16.0)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Visit every quadrature point `(t, z_t, weight)` on `[0, upper]`.
    pub fn for_each_point<F>(&self, z: &CovariatePath, upper: f64, mut visit: F)
    where
        F: FnMut(f64, &[f64], f64),
    {
        for k in 0..z.num_segments() {
            let (start, end, value) = z.segment(k);
            if start >= upper {
                break;
            }
            let end = end.min(upper);
            let len = end - start;
            if len <= 0.0 {
                continue;
            }
            let panels = (len / self.max_panel).ceil().max(1.0) as usize;
            let width = len / panels as f64;
            for p in 0..panels {
                let a = start + p as f64 * width;
                let half = 0.5 * width;
                let mid = a + half;
                for (x, w) in self.nodes.iter().zip(&self.weights) {
                    visit(mid + half * x, value, half * w);
                }
            }
        }
    }

    pub fn integrate<F>(&self, z: &CovariatePath, upper: f64, mut g: F) -> f64
    where
        F: FnMut(f64, &[f64]) -> f64,
    {
        let mut total = 0.0;
        self.for_each_point(z, upper, |t, v, w| total += w * g(t, v));
        total
    }
}
