//! Class intensities `λ₊`, `λ₋` with their bounds, the label prior, and the
//! basis dictionary `φ_j` on `[0, T] × [0, 1]^d`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::paths::Label;

/// A rate function `(t, z) -> λ(t, z)`.
pub type RateFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Relative slack allowed when comparing an intensity to its bounds.
const BOUND_SLACK: f64 = 1e-12;

/// Grid resolution per `(t, z_i)` axis pair used for the bound spot check.
const CHECK_GRID: usize = 32;
const CHECK_RANDOM: usize = 1000;

#[derive(Clone)]
pub struct IntensityModel {
    name: String,
    horizon: f64,
    dim: usize,
    lambda_plus: RateFn,
    lambda_minus: RateFn,
    eps: f64,
    dmax: f64,
    p_plus: f64,
}

impl fmt::Debug for IntensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntensityModel")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("dim", &self.dim)
            .field("eps", &self.eps)
            .field("dmax", &self.dmax)
            .field("p_plus", &self.p_plus)
            .finish()
    }
}

impl IntensityModel {
    /// Builds the model and spot-checks `ε <= λ± <= D` on a dense set of
    /// points: all corners of `[0,T] × [0,1]^d` (for `d <= 12`), a grid over
    /// every `(t, z_i)` pair with the other coordinates at `1/2`, and
    /// a fixed pseudo-random sample.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        horizon: f64,
        dim: usize,
        lambda_plus: RateFn,
        lambda_minus: RateFn,
        eps: f64,
        dmax: f64,
        p_plus: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if dim == 0 {
            return Err(Error::Config("covariate dimension must be at least 1".into()));
        }
        if !(eps > 0.0 && dmax >= eps && dmax.is_finite()) {
            return Err(Error::IntensityBounds(format!(
                "need 0 < eps <= D, got eps={eps}, D={dmax}"
            )));
        }
        if !(p_plus > 0.0 && p_plus < 1.0) {
            return Err(Error::Config(format!(
                "class prior p_plus must lie in (0, 1), got {p_plus}"
            )));
        }
        let model = Self {
            name: name.into(),
            horizon,
            dim,
            lambda_plus,
            lambda_minus,
            eps,
            dmax,
            p_plus,
        };
        model.check_bounds()?;
        Ok(model)
    }

    fn check_bounds(&self) -> Result<()> {
        let mut point = vec![0.5; self.dim];
        let check = |t: f64, z: &[f64]| -> Result<()> {
            for (which, f) in [("lambda_plus", &self.lambda_plus), ("lambda_minus", &self.lambda_minus)] {
                let v = f(t, z);
                let lo = self.eps * (1.0 - BOUND_SLACK);
                let hi = self.dmax * (1.0 + BOUND_SLACK);
                if !(v >= lo && v <= hi) {
                    return Err(Error::IntensityBounds(format!(
                        "{which}({t}, {z:?}) = {v} outside [{}, {}]",
                        self.eps, self.dmax
                    )));
                }
            }
            Ok(())
        };

        if self.dim <= 12 {
            for mask in 0..(1u32 << (self.dim + 1)) {
                let t = if mask & 1 == 1 { self.horizon } else { 0.0 };
                for (i, zi) in point.iter_mut().enumerate() {
                    *zi = ((mask >> (i + 1)) & 1) as f64;
                }
                check(t, &point)?;
            }
        }
        for i in 0..self.dim {
            point.iter_mut().for_each(|v| *v = 0.5);
            for a in 0..CHECK_GRID {
                let t = self.horizon * a as f64 / (CHECK_GRID - 1) as f64;
                for b in 0..CHECK_GRID {
                    point[i] = b as f64 / (CHECK_GRID - 1) as f64;
                    check(t, &point)?;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b0d5);
        for _ in 0..CHECK_RANDOM {
            let t = rng.random::<f64>() * self.horizon;
            point.iter_mut().for_each(|v| *v = rng.random());
            check(t, &point)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dmax(&self) -> f64 {
        self.dmax
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        1.0 - self.p_plus
    }

    pub fn lambda_plus(&self, t: f64, z: &[f64]) -> f64 {
        (self.lambda_plus)(t, z)
    }

    pub fn lambda_minus(&self, t: f64, z: &[f64]) -> f64 {
        (self.lambda_minus)(t, z)
    }

    pub fn rate(&self, label: Label) -> &RateFn {
        match label {
            Label::Plus => &self.lambda_plus,
            Label::Minus => &self.lambda_minus,
        }
    }

    /// Same intensities, different class prior.
    pub fn with_prior(&self, p_plus: f64) -> Result<Self> {
        if !(p_plus > 0.0 && p_plus < 1.0) {
            return Err(Error::Config(format!(
                "class prior p_plus must lie in (0, 1), got {p_plus}"
            )));
        }
        Ok(Self {
            p_plus,
            ..self.clone()
        })
    }
}

/// Names accepted by [`scenario`].
pub const SCENARIOS: &[&str] = &["affine-1d", "symmetric-1d", "constant-rates", "periodic-2d"];

/// Built-in synthetic scenarios.
///
/// * `affine-1d`: `d = 1`, `λ₊ = 2 + 2z`, `λ₋ = 4 − 2z`, `ε = 2`, `D = 4`.
/// * `symmetric-1d`: `d = 1`, `λ₊ = λ₋ = 2 + z`, `ε = 2`, `D = 3`.
/// * `constant-rates`: `d = 1`, `λ₊ ≡ 2`, `λ₋ ≡ 1`, `ε = 1`, `D = 2`.
/// * `periodic-2d`: `d = 2`, `λ₊ = 3 + z₁ + cos(2πt/T) z₂`,
///   `λ₋ = 3 − z₁ + sin(2πt/T) z₂`, `ε = 1`, `D = 5`.
pub fn scenario(name: &str, horizon: f64, p_plus: f64) -> Result<IntensityModel> {
    let (dim, plus, minus, eps, dmax): (usize, RateFn, RateFn, f64, f64) = match name {
        "affine-1d" => (
            1,
            Arc::new(|_, z| 2.0 + 2.0 * z[0]),
            Arc::new(|_, z| 4.0 - 2.0 * z[0]),
            2.0,
            4.0,
        ),
        "symmetric-1d" => (
            1,
            Arc::new(|_, z| 2.0 + z[0]),
            Arc::new(|_, z| 2.0 + z[0]),
            2.0,
            3.0,
        ),
        "constant-rates" => (1, Arc::new(|_, _| 2.0), Arc::new(|_, _| 1.0), 1.0, 2.0),
        "periodic-2d" => {
            let w = 2.0 * PI / horizon;
            (
                2,
                Arc::new(move |t, z| 3.0 + z[0] + (w * t).cos() * z[1]),
                Arc::new(move |t, z| 3.0 - z[0] + (w * t).sin() * z[1]),
                1.0,
                5.0,
            )
        }
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    IntensityModel::new(name, horizon, dim, plus, minus, eps, dmax, p_plus)
}

/// `η = p₊ / (p₋ e^{−ξ} + p₊)`.
pub fn eta_from_xi(xi: f64, p_plus: f64) -> f64 {
    let p_minus = 1.0 - p_plus;
    p_plus / (p_minus * (-xi).exp() + p_plus)
}

/// Evaluates a prefix `φ_1..φ_count` of a dictionary at one point.
pub trait BasisEvaluator {
    fn eval_into(&mut self, t: f64, z: &[f64], out: &mut [f64]);
}

/// A countable family of bounded functions `φ_j`, `j >= 1`.
pub trait Dictionary: Send + Sync {
    fn dim(&self) -> usize;

    /// `φ_j(t, z)`, 1-based.
    fn eval(&self, j: usize, t: f64, z: &[f64]) -> f64;

    /// `max_{j <= count} ‖φ_j‖_∞`.
    fn sup_bound(&self, count: usize) -> f64;

    fn description(&self) -> String;

    /// An evaluator for `φ_1..φ_count`; implementations may precompute.
    fn prefix_evaluator(&self, count: usize) -> Box<dyn BasisEvaluator + '_> {
        Box::new(GenericEvaluator { dict: self, count })
    }
}

struct GenericEvaluator<'a, D: ?Sized> {
    dict: &'a D,
    count: usize,
}

impl<D: Dictionary + ?Sized> BasisEvaluator for GenericEvaluator<'_, D> {
    fn eval_into(&mut self, t: f64, z: &[f64], out: &mut [f64]) {
        for (j, o) in out[..self.count].iter_mut().enumerate() {
            *o = self.dict.eval(j + 1, t, z);
        }
    }
}

/// Multi-indices `(k_0, k_1, .., k_d)` by increasing total degree, ties in
/// ascending lexicographic order. Starts at the zero index.
#[derive(Debug, Clone)]
pub struct MultiIndices {
    current: Vec<u32>,
    started: bool,
}

impl MultiIndices {
    pub fn new(parts: usize) -> Self {
        assert!(parts >= 2);
        Self {
            current: vec![0; parts],
            started: false,
        }
    }

    fn advance(&mut self) {
        let n = self.current.len();
        let mut right_mass = self.current[n - 1];
        for i in (0..n - 1).rev() {
            if right_mass > 0 {
                self.current[i] += 1;
                for v in &mut self.current[i + 1..n - 1] {
                    *v = 0;
                }
                self.current[n - 1] = right_mass - 1;
                return;
            }
            right_mass += self.current[i];
        }
        // last composition of this degree: move to the next degree
        let degree = right_mass + 1;
        self.current.iter_mut().for_each(|v| *v = 0);
        self.current[n - 1] = degree;
    }
}

impl Iterator for MultiIndices {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.started {
            self.advance();
        }
        self.started = true;
        Some(self.current.clone())
    }
}

/// Tensor cosine basis, orthonormal in `L²([0,T] × [0,1]^d)`:
/// products of `{1/√T, √(2/T) cos(kπt/T)}` in time and `{1, √2 cos(kπz_i)}`
/// in each covariate coordinate.
#[derive(Debug, Clone, Copy)]
pub struct CosineDictionary {
    dim: usize,
    horizon: f64,
}

pub fn cosine_dictionary(dim: usize, horizon: f64) -> CosineDictionary {
    assert!(dim >= 1, "covariate dimension must be at least 1");
    assert!(horizon > 0.0, "horizon must be positive");
    CosineDictionary { dim, horizon }
}

impl CosineDictionary {
    pub fn multi_index(&self, j: usize) -> Vec<u32> {
        assert!(j >= 1, "dictionary index is 1-based");
        MultiIndices::new(self.dim + 1)
            .nth(j - 1)
            .expect("infinite iterator")
    }

    fn element_sup(&self, index: &[u32]) -> f64 {
        let active = index.iter().filter(|&&k| k > 0).count() as i32;
        (2f64.powi(active) / self.horizon).sqrt()
    }
}

impl Dictionary for CosineDictionary {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, j: usize, t: f64, z: &[f64]) -> f64 {
        let index = self.multi_index(j);
        let mut v = if index[0] == 0 {
            1.0 / self.horizon.sqrt()
        } else {
            (2.0 / self.horizon).sqrt() * (index[0] as f64 * PI * t / self.horizon).cos()
        };
        for (k, zi) in index[1..].iter().zip(z) {
            if *k > 0 {
                v *= SQRT_2 * (*k as f64 * PI * zi).cos();
            }
        }
        v
    }

    fn sup_bound(&self, count: usize) -> f64 {
        MultiIndices::new(self.dim + 1)
            .take(count.max(1))
            .map(|idx| self.element_sup(&idx))
            .fold(0.0, f64::max)
    }

    fn description(&self) -> String {
        format!("cosine(d={}, T={})", self.dim, self.horizon)
    }

    fn prefix_evaluator(&self, count: usize) -> Box<dyn BasisEvaluator + '_> {
        let parts = self.dim + 1;
        let indices: Vec<u32> = MultiIndices::new(parts).take(count).flatten().collect();
        let max_degree = indices.iter().copied().max().unwrap_or(0) as usize;
        Box::new(CosineEvaluator {
            horizon: self.horizon,
            parts,
            count,
            indices,
            tables: vec![0.0; parts * (max_degree + 1)],
            max_degree,
        })
    }
}

struct CosineEvaluator {
    horizon: f64,
    parts: usize,
    count: usize,
    indices: Vec<u32>,
    // tables[p * (max_degree + 1) + k] = normalized 1-d factor of order k in part p
    tables: Vec<f64>,
    max_degree: usize,
}

impl BasisEvaluator for CosineEvaluator {
    fn eval_into(&mut self, t: f64, z: &[f64], out: &mut [f64]) {
        let width = self.max_degree + 1;
        let time_scale = (2.0 / self.horizon).sqrt();
        self.tables[0] = 1.0 / self.horizon.sqrt();
        for k in 1..width {
            self.tables[k] = time_scale * (k as f64 * PI * t / self.horizon).cos();
        }
        for p in 1..self.parts {
            let row = &mut self.tables[p * width..(p + 1) * width];
            row[0] = 1.0;
            for (k, v) in row.iter_mut().enumerate().skip(1) {
                *v = SQRT_2 * (k as f64 * PI * z[p - 1]).cos();
            }
        }
        for (j, o) in out[..self.count].iter_mut().enumerate() {
            let idx = &self.indices[j * self.parts..(j + 1) * self.parts];
            let mut v = self.tables[idx[0] as usize];
            for p in 1..self.parts {
                let k = idx[p] as usize;
                if k > 0 {
                    v *= self.tables[p * width + k];
                }
            }
            *o = v;
        }
    }
}

/// A user-supplied dictionary with a declared sup-norm bound.
#[derive(Clone)]
pub struct FnDictionary {
    dim: usize,
    bound: f64,
    func: Arc<dyn Fn(usize, f64, &[f64]) -> f64 + Send + Sync>,
    description: String,
}

impl fmt::Debug for FnDictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnDictionary")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .field("description", &self.description)
            .finish()
    }
}

impl FnDictionary {
    /// Grid-checks `|φ_j| <= bound` for `j <= checked` over `[0, T] × [0, 1]^d`.
    pub fn new<F>(
        dim: usize,
        horizon: f64,
        bound: f64,
        checked: usize,
        description: impl Into<String>,
        func: F,
    ) -> Result<Self>
    where
        F: Fn(usize, f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0xd1c7);
        let mut z = vec![0.0; dim];
        for j in 1..=checked {
            for a in 0..=32 {
                let t = horizon * a as f64 / 32.0;
                for b in 0..=8 {
                    z.iter_mut().for_each(|v| *v = b as f64 / 8.0);
                    let v = func(j, t, &z);
                    if !(v.abs() <= bound) {
                        return Err(Error::DictionaryBound(format!(
                            "|phi_{j}({t}, {z:?})| = {} exceeds L = {bound}",
                            v.abs()
                        )));
                    }
                }
                z.iter_mut().for_each(|v| *v = rng.random());
                let v = func(j, t, &z);
                if !(v.abs() <= bound) {
                    return Err(Error::DictionaryBound(format!(
                        "|phi_{j}({t}, {z:?})| = {} exceeds L = {bound}",
                        v.abs()
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            bound,
            func: Arc::new(func),
            description: description.into(),
        })
    }
}

impl Dictionary for FnDictionary {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, j: usize, t: f64, z: &[f64]) -> f64 {
        (self.func)(j, t, z)
    }

    fn sup_bound(&self, _count: usize) -> f64 {
        self.bound
    }

    fn description(&self) -> String {
        self.description.clone()
    }
}
