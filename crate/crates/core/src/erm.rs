//! Empirical logit-risk minimization over
//! `F_B = { Σ a_j Φ_j + Σ b_j Ψ_j + c : ‖a‖₁ <= B, ‖b‖₁ <= B, |c| <= B }`.
//!
//! The problem is smooth and convex in `θ = (a, b, c)`. It is solved by
//! projected gradient with the fixed step `1/Λ`, where `Λ` bounds the largest
//! Hessian eigenvalue: `Λ = sup φ'' · λ_max((1/n) Σ g_i g_iᵀ)` with
//! `g_i = (Φ_i, Ψ_i, 1)`. The default variant adds momentum with a monotone
//! safeguard (an iterate is only accepted when it does not increase the
//! objective), so the reported objective trace never goes up.

use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::paths::Label;

/// `φ(t) = log₂(1 + e^t)`, evaluated as `(max(t, 0) + ln(1 + e^{−|t|})) / ln 2`.
pub fn logit_loss(t: f64) -> f64 {
    (t.max(0.0) + (-t.abs()).exp().ln_1p()) / LN_2
}

/// `φ'(t) = 1 / (ln 2 (e^{−t} + 1))`.
pub fn logit_loss_deriv(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (LN_2 * ((-t).exp() + 1.0))
    } else {
        let e = t.exp();
        e / (LN_2 * (1.0 + e))
    }
}

/// `φ''(t) = σ(t) (1 − σ(t)) / ln 2`; at most `1 / (4 ln 2)`.
pub fn logit_loss_second(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e) * LN_2)
}

pub const LOGIT_CURVATURE_BOUND: f64 = 1.0 / (4.0 * LN_2);

/// Mean of `φ(−y_i s_i)`.
pub fn risk_of_scores(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, y)| logit_loss(-y.sign() * s))
        .sum();
    Ok(total / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    /// Class index `B`: number of terms per group and the `ℓ¹` radius.
    pub radius: usize,
}

impl Coefficients {
    pub fn zeros(radius: usize) -> Self {
        Self {
            a: vec![0.0; radius],
            b: vec![0.0; radius],
            c: 0.0,
            radius,
        }
    }

    fn l1(v: &[f64]) -> f64 {
        v.iter().map(|x| x.abs()).sum()
    }

    pub fn is_feasible(&self) -> bool {
        let r = self.radius as f64;
        self.a.len() == self.radius
            && self.b.len() == self.radius
            && Self::l1(&self.a) <= r
            && Self::l1(&self.b) <= r
            && self.c.abs() <= r
    }

    /// `f = a·Φ + b·Ψ + c` for one feature row (extra columns are ignored).
    pub fn score(&self, phi: &[f64], psi: &[f64]) -> f64 {
        let mut s = self.c;
        for (a, p) in self.a.iter().zip(phi) {
            s += a * p;
        }
        for (b, p) in self.b.iter().zip(psi) {
            s += b * p;
        }
        s
    }

    pub fn scores(&self, features: &FeatureMatrix) -> Vec<f64> {
        (0..features.n())
            .map(|i| self.score(features.phi_row(i), features.psi_row(i)))
            .collect()
    }

    fn to_theta(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(2 * self.radius + 1);
        theta.extend_from_slice(&self.a);
        theta.extend_from_slice(&self.b);
        theta.push(self.c);
        theta
    }

    fn from_theta(theta: &[f64], radius: usize) -> Self {
        Self {
            a: theta[..radius].to_vec(),
            b: theta[radius..2 * radius].to_vec(),
            c: theta[2 * radius],
            radius,
        }
    }

    /// Coefficient file: `B`, then the `a`, `b` and `c` lines.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            let mut s = String::new();
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{x:.16e}").unwrap();
            }
            s
        };
        format!(
            "{}\n{}\n{}\n{:.16e}\n",
            self.radius,
            join(&self.a),
            join(&self.b),
            self.c
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let bad = |line: usize, message: String| Error::Parse { line, message };
        if lines.len() < 4 {
            return Err(bad(lines.len() + 1, "expected 4 lines: B, a, b, c".into()));
        }
        let radius: usize = lines[0]
            .trim()
            .parse()
            .map_err(|e| bad(1, format!("B: {e}")))?;
        let parse_row = |k: usize| -> Result<Vec<f64>> {
            lines[k]
                .trim()
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| bad(k + 1, e.to_string())))
                .collect()
        };
        let a = parse_row(1)?;
        let b = parse_row(2)?;
        let c: f64 = lines[3].trim().parse().map_err(|e| bad(4, format!("c: {e}")))?;
        if a.len() != radius || b.len() != radius {
            return Err(bad(
                2,
                format!("B={radius} but a has {} and b has {} entries", a.len(), b.len()),
            ));
        }
        let coeffs = Self { a, b, c, radius };
        if !coeffs.is_feasible() {
            return Err(bad(1, format!("coefficients lie outside F_{radius}")));
        }
        Ok(coeffs)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// `A_n(f)` for `f` given by `coeffs`.
pub fn empirical_risk(coeffs: &Coefficients, features: &FeatureMatrix) -> Result<f64> {
    if features.b() < coeffs.radius {
        return Err(Error::DimensionMismatch(format!(
            "coefficients need {} feature columns, matrix has {}",
            coeffs.radius,
            features.b()
        )));
    }
    risk_of_scores(&coeffs.scores(features), features.labels())
}

/// Euclidean projection onto `{ w : ‖w‖₁ <= radius }` by soft-thresholding at
/// the sort-based pivot. The result satisfies `Σ|w_i| <= radius` exactly in
/// floating point (left-to-right summation).
pub fn project_l1(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "radius must be positive");
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumulative += m;
        let candidate = (cumulative - radius) / (k + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    let mut w: Vec<f64> = v
        .iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect();
    // rounding can leave the sum a few ulps above the radius
    loop {
        let s: f64 = w.iter().map(|x| x.abs()).sum();
        if s <= radius {
            break;
        }
        let shrink = (radius / s) * (1.0 - 4.0 * f64::EPSILON);
        w.iter_mut().for_each(|x| *x *= shrink);
    }
    w
}

fn project_theta(theta: &mut [f64], radius: usize) {
    let r = radius as f64;
    let a = project_l1(&theta[..radius], r);
    let b = project_l1(&theta[radius..2 * radius], r);
    theta[..radius].copy_from_slice(&a);
    theta[radius..2 * radius].copy_from_slice(&b);
    theta[2 * radius] = theta[2 * radius].clamp(-r, r);
}

/// The fitting problem restricted to the first `cols` feature columns.
struct Problem<'a> {
    fm: &'a FeatureMatrix,
    cols: usize,
    signs: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(fm: &'a FeatureMatrix, cols: usize) -> Self {
        let signs = fm.labels().iter().map(|y| y.sign()).collect();
        Self { fm, cols, signs }
    }

    fn dim(&self) -> usize {
        2 * self.cols + 1
    }

    fn scores(&self, theta: &[f64], out: &mut [f64]) {
        let b = self.cols;
        for (i, o) in out.iter_mut().enumerate() {
            let phi = &self.fm.phi_row(i)[..b];
            let psi = &self.fm.psi_row(i)[..b];
            let mut s = theta[2 * b];
            for k in 0..b {
                s += theta[k] * phi[k] + theta[b + k] * psi[k];
            }
            *o = s;
        }
    }

    fn value_from_scores(&self, scores: &[f64]) -> f64 {
        let total: f64 = scores
            .iter()
            .zip(&self.signs)
            .map(|(s, y)| logit_loss(-y * s))
            .sum();
        total / scores.len() as f64
    }

    fn gradient_from_scores(&self, scores: &[f64], grad: &mut [f64]) {
        let b = self.cols;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let inv_n = 1.0 / scores.len() as f64;
        for (i, (s, y)) in scores.iter().zip(&self.signs).enumerate() {
            let w = -y * logit_loss_deriv(-y * s) * inv_n;
            let phi = &self.fm.phi_row(i)[..b];
            let psi = &self.fm.psi_row(i)[..b];
            for k in 0..b {
                grad[k] += w * phi[k];
                grad[b + k] += w * psi[k];
            }
            grad[2 * b] += w;
        }
    }

    /// Upper bound on the gradient's Lipschitz constant.
    fn smoothness(&self) -> f64 {
        let p = self.dim();
        let b = self.cols;
        let n = self.fm.n() as f64;
        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut g = vec![0.0; p];
        for i in 0..self.fm.n() {
            g[..b].copy_from_slice(&self.fm.phi_row(i)[..b]);
            g[b..2 * b].copy_from_slice(&self.fm.psi_row(i)[..b]);
            g[2 * b] = 1.0;
            for r in 0..p {
                if g[r] == 0.0 {
                    continue;
                }
                for c in r..p {
                    gram[(r, c)] += g[r] * g[c];
                }
            }
        }
        for r in 0..p {
            for c in r..p {
                let v = gram[(r, c)] / n;
                gram[(r, c)] = v;
                gram[(c, r)] = v;
            }
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let gershgorin = (0..p)
            .map(|r| (0..p).map(|c| gram[(r, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let top = if p <= 400 {
            let eig = SymmetricEigen::new(gram).eigenvalues;
            let lmax = eig.iter().copied().fold(0.0, f64::max);
            // eigen-solver error is relative to the matrix norm
            (lmax * (1.0 + 1e-8) + 1e-12 * gershgorin).min(gershgorin)
        } else {
            gershgorin
        };
        (LOGIT_CURVATURE_BOUND * top).max(f64::MIN_POSITIVE)
    }
}

/// Risk gradient with respect to `(a, b, c)`, laid out as `[a.., b.., c]`.
pub fn risk_gradient(coeffs: &Coefficients, features: &FeatureMatrix) -> Result<Vec<f64>> {
    if features.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let problem = Problem::new(features, coeffs.radius);
    let theta = coeffs.to_theta();
    let mut scores = vec![0.0; features.n()];
    problem.scores(&theta, &mut scores);
    let mut grad = vec![0.0; problem.dim()];
    problem.gradient_from_scores(&scores, &mut grad);
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Plain projected gradient.
    Projected,
    /// Projected gradient with momentum, monotone safeguard and restarts.
    Accelerated,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop once the objective drops by less than `tol · |A_n|` over `window` iterations.
    pub tol: f64,
    pub window: usize,
    pub method: Method,
    pub record_trace: bool,
    /// Starting point; defaults to zero. Projected onto `F_B` first.
    pub init: Option<Coefficients>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            tol: 1e-9,
            window: 10,
            method: Method::Accelerated,
            record_trace: false,
            init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub coefficients: Coefficients,
    pub risk: f64,
    pub initial_risk: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub step: f64,
    /// Objective of the accepted iterate after each iteration (if recorded).
    pub trace: Vec<f64>,
}

/// Minimize `A_n` over `F_radius` using the first `radius` feature columns.
pub fn fit_erm(features: &FeatureMatrix, radius: usize, options: &FitOptions) -> Result<FitReport> {
    if radius == 0 {
        return Err(Error::Config("class index B must be at least 1".into()));
    }
    if features.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if features.b() < radius {
        return Err(Error::DimensionMismatch(format!(
            "F_{radius} needs {radius} feature columns, matrix has {}",
            features.b()
        )));
    }
    let problem = Problem::new(features, radius);
    let p = problem.dim();
    let n = features.n();
    let lipschitz = problem.smoothness();
    if !lipschitz.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let step = 1.0 / lipschitz;

    let mut x = match &options.init {
        Some(c) if c.radius == radius => c.to_theta(),
        Some(c) => {
            return Err(Error::DimensionMismatch(format!(
                "initial coefficients are for F_{}, fitting F_{radius}",
                c.radius
            )))
        }
        None => vec![0.0; p],
    };
    project_theta(&mut x, radius);
    let mut sx = vec![0.0; n];
    problem.scores(&x, &mut sx);
    let mut fx = problem.value_from_scores(&sx);
    if !fx.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let initial_risk = fx;

    let mut y = x.clone();
    let mut sy = sx.clone();
    let mut momentum = 1.0f64;
    let mut grad = vec![0.0; p];
    let mut z = vec![0.0; p];
    let mut sz = vec![0.0; n];
    let mut history = vec![fx];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iters {
        iterations += 1;
        problem.gradient_from_scores(&sy, &mut grad);
        for k in 0..p {
            z[k] = y[k] - step * grad[k];
        }
        project_theta(&mut z, radius);
        problem.scores(&z, &mut sz);
        let fz = problem.value_from_scores(&sz);
        if !fz.is_finite() {
            return Err(Error::NonFinite { iteration: iterations });
        }

        let improved = fz <= fx;
        match options.method {
            Method::Projected => {
                if !improved {
                    // a full step from the current point cannot increase the
                    // objective in exact arithmetic; this is rounding noise
                    converged = true;
                    if options.record_trace {
                        trace.push(fx);
                    }
                    break;
                }
                x.copy_from_slice(&z);
                sx.copy_from_slice(&sz);
                fx = fz;
                y.copy_from_slice(&x);
                sy.copy_from_slice(&sx);
            }
            Method::Accelerated => {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                if improved {
                    // y ← z + ((t−1)/t')(z − x_old)
                    let beta = (momentum - 1.0) / next;
                    for k in 0..p {
                        y[k] = z[k] + beta * (z[k] - x[k]);
                    }
                    for i in 0..n {
                        sy[i] = sz[i] + beta * (sz[i] - sx[i]);
                    }
                    x.copy_from_slice(&z);
                    sx.copy_from_slice(&sz);
                    fx = fz;
                    momentum = next;
                } else {
                    // restart from the accepted iterate
                    y.copy_from_slice(&x);
                    sy.copy_from_slice(&sx);
                    momentum = 1.0;
                }
            }
        }
        if options.record_trace {
            trace.push(fx);
        }
        history.push(fx);
        if history.len() > options.window {
            let old = history[history.len() - 1 - options.window];
            if old - fx <= options.tol * fx.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
    }

    let coefficients = Coefficients::from_theta(&x, radius);
    debug_assert!(coefficients.is_feasible());
    Ok(FitReport {
        coefficients,
        risk: fx,
        initial_risk,
        iterations,
        converged,
        tol: options.tol,
        step,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_values() {
        assert_eq!(logit_loss(0.0), 1.0);
        // ln(1 + e) / ln 2
        assert!((logit_loss(1.0) - 1.894_636_123_972_011_6).abs() < 1e-14);
        assert!((logit_loss(1000.0) - 1000.0 / LN_2).abs() < 1e-9);
        assert!(logit_loss(-1000.0) >= 0.0 && logit_loss(-1000.0) < 1e-300);
        assert!(logit_loss(-1000.0).is_finite());
    }

    #[test]
    fn derivative_matches_central_differences() {
        let h = 1e-5;
        for t in [-2.0, 0.0, 3.0] {
            let fd = (logit_loss(t + h) - logit_loss(t - h)) / (2.0 * h);
            assert!((logit_loss_deriv(t) - fd).abs() < 1e-6, "t={t}");
            let fd2 = (logit_loss_deriv(t + h) - logit_loss_deriv(t - h)) / (2.0 * h);
            assert!((logit_loss_second(t) - fd2).abs() < 1e-6, "t={t}");
        }
        assert!((logit_loss_second(0.0) - LOGIT_CURVATURE_BOUND).abs() < 1e-16);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1(&[0.3, -0.2], 1.0), vec![0.3, -0.2]);
        assert_eq!(project_l1(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(project_l1(&[2.0, 1.0], 1.0), vec![1.0, 0.0]);
        let w = project_l1(&[-2.0, 1.5, 0.1], 1.0);
        assert!((w[0] + 0.75).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15 && w[2] == 0.0);
    }

    #[test]
    fn projection_matches_grid_search() {
        // nearest point of the unit l1 ball to (2, 1) by dense search on its boundary
        let v = [2.0, 1.0];
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        let steps = 40_000;
        for k in 0..steps {
            let s = 4.0 * k as f64 / steps as f64;
            // walk the diamond boundary
            let (a, b) = match s {
                s if s < 1.0 => (1.0 - s, s),
                s if s < 2.0 => (1.0 - s, 2.0 - s),
                s if s < 3.0 => (s - 3.0, 2.0 - s),
                s => (s - 3.0, s - 4.0),
            };
            let d = (a - v[0]).powi(2) + (b - v[1]).powi(2);
            if d < best.0 {
                best = (d, [a, b]);
            }
        }
        let w = project_l1(&v, 1.0);
        assert!((w[0] - best.1[0]).abs() < 1e-3 && (w[1] - best.1[1]).abs() < 1e-3);
    }

    #[test]
    fn coefficient_text_round_trip() {
        let c = Coefficients {
            a: vec![0.25, -1.0 / 3.0],
            b: vec![0.0, 1.0],
            c: -0.125,
            radius: 2,
        };
        let back = Coefficients::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let bad = "1\n2.0\n0.0\n0.0\n";
        assert!(Coefficients::from_text(bad).is_err());
    }

    fn matrix(rows: &[(f64, f64, Label)]) -> FeatureMatrix {
        let phi = rows.iter().map(|r| r.0).collect();
        let psi = rows.iter().map(|r| r.1).collect();
        let labels = rows.iter().map(|r| r.2).collect();
        FeatureMatrix::from_parts(1, phi, psi, labels, None).unwrap()
    }

    #[test]
    fn zero_coefficients_have_unit_risk() {
        let fm = matrix(&[(0.3, 2.0, Label::Plus), (0.9, 0.0, Label::Minus)]);
        assert_eq!(empirical_risk(&Coefficients::zeros(1), &fm).unwrap(), 1.0);
    }

    #[test]
    fn large_margin_risk_vanishes() {
        let fm = matrix(&[(1.0, 0.0, Label::Plus)]);
        let c = Coefficients {
            a: vec![1.0],
            b: vec![0.0],
            c: 19.0,
            radius: 1,
        };
        // margin 20 exceeds F_1, but the risk functional itself does not care
        assert!(empirical_risk(&c, &fm).unwrap() < 1e-6);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let fm = FeatureMatrix::from_parts(1, vec![], vec![], vec![], None).unwrap();
        assert!(matches!(empirical_risk(&Coefficients::zeros(1), &fm), Err(Error::EmptyDataset)));
        assert!(matches!(fit_erm(&fm, 1, &FitOptions::default()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn non_finite_features_are_reported() {
        for bad in [f64::NAN, 1e308] {
            let fm = matrix(&[(bad, 1e308, Label::Plus), (-1.0, 0.0, Label::Minus)]);
            let err = fit_erm(&fm, 1, &FitOptions::default()).unwrap_err();
            assert!(matches!(err, Error::NonFinite { iteration: 0 }));
        }
    }

    #[test]
    fn all_positive_zero_features_push_intercept_to_boundary() {
        let fm = matrix(&[(0.0, 0.0, Label::Plus); 5]);
        for radius in [1usize, 3] {
            let fm = FeatureMatrix::from_parts(
                radius,
                vec![0.0; 5 * radius],
                vec![0.0; 5 * radius],
                fm.labels().to_vec(),
                None,
            )
            .unwrap();
            let r = fit_erm(&fm, radius, &FitOptions::default()).unwrap();
            assert!((r.coefficients.c - radius as f64).abs() < 1e-6, "{r:?}");
            assert!((r.risk - logit_loss(-(radius as f64))).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicated_dataset_gives_same_fit() {
        let fm = matrix(&[
            (0.3, 2.0, Label::Plus),
            (0.9, 0.0, Label::Minus),
            (0.5, 1.0, Label::Minus),
            (0.1, 3.0, Label::Plus),
        ]);
        let once = fit_erm(&fm, 1, &FitOptions::default()).unwrap();
        let twice = fit_erm(&fm.repeated(2), 1, &FitOptions::default()).unwrap();
        assert!((once.risk - twice.risk).abs() < 1e-9);
    }

    #[test]
    fn both_methods_agree_and_are_monotone() {
        let fm = matrix(&[
            (0.3, 2.0, Label::Plus),
            (0.9, 0.0, Label::Minus),
            (0.5, 1.0, Label::Minus),
            (0.1, 3.0, Label::Plus),
            (0.7, 1.0, Label::Plus),
        ]);
        let mut opts = FitOptions {
            record_trace: true,
            ..FitOptions::default()
        };
        let acc = fit_erm(&fm, 1, &opts).unwrap();
        opts.method = Method::Projected;
        let plain = fit_erm(&fm, 1, &opts).unwrap();
        assert!((acc.risk - plain.risk).abs() < 1e-6);
        for r in [&acc, &plain] {
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(r.risk <= r.initial_risk);
            assert!(r.coefficients.is_feasible());
        }
    }
}
