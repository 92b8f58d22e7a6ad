//! Covariate paths, Cox trajectories by thinning, labeled datasets, and the
//! change-of-measure weight between a Poisson law and the unit-rate law.
//!
//! Every sample `i` of a dataset draws from its own ChaCha20 stream keyed by
//! `(seed, i)`, so datasets do not depend on generation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::IntensityModel;
use crate::paths::{CountingPath, CovariatePath, Label, LabeledSample};
use crate::quadrature::SegmentQuadrature;

/// Relative tolerance on the thinning majorant.
const MAJORANT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateKind {
    /// `Z ≡ (1/2, .., 1/2)`.
    ConstantHalf,
    /// Per coordinate, a stationary Ornstein–Uhlenbeck chain sampled exactly
    /// on the grid and mapped into `(0, 1)` by the logistic function.
    LogisticOu { theta: f64, sigma: f64 },
}

impl CovariateKind {
    pub const DEFAULT_OU: CovariateKind = CovariateKind::LogisticOu {
        theta: 1.0,
        sigma: 2.0,
    };

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "constant-half" => Ok(CovariateKind::ConstantHalf),
            "logistic-ou" => Ok(Self::DEFAULT_OU),
            other => Err(Error::Config(format!(
                "unknown covariate_kind `{other}` (expected constant-half or logistic-ou)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CovariateKind::ConstantHalf => "constant-half",
            CovariateKind::LogisticOu { .. } => "logistic-ou",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub n: usize,
    pub horizon: f64,
    pub cap: u32,
    pub grid_steps: usize,
    pub covariate_kind: CovariateKind,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.grid_steps == 0 {
            return Err(Error::Config("grid_steps must be at least 1".into()));
        }
        if self.cap == 0 {
            return Err(Error::Config("u must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// The random stream of sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `+1` with probability `p_plus`.
pub fn draw_label<R: Rng + ?Sized>(p_plus: f64, rng: &mut R) -> Label {
    if rng.random::<f64>() < p_plus {
        Label::Plus
    } else {
        Label::Minus
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn simulate_covariate<R: Rng + ?Sized>(
    config: &SimConfig,
    dim: usize,
    rng: &mut R,
) -> CovariatePath {
    let m = config.grid_steps;
    let dt = config.horizon / m as f64;
    let mut grid: Vec<f64> = (0..m).map(|k| k as f64 * dt).collect();
    grid.push(config.horizon);
    let values = match config.covariate_kind {
        CovariateKind::ConstantHalf => vec![0.5; m * dim],
        CovariateKind::LogisticOu { theta, sigma } => {
            let stationary_sd = sigma / (2.0 * theta).sqrt();
            let decay = (-theta * dt).exp();
            let innovation_sd = stationary_sd * (1.0 - decay * decay).sqrt();
            let mut values = vec![0.0; m * dim];
            for i in 0..dim {
                let mut x = stationary_sd * rng.sample::<f64, _>(StandardNormal);
                for k in 0..m {
                    values[k * dim + i] = logistic(x);
                    x = decay * x + innovation_sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            values
        }
    };
    CovariatePath::new(grid, values, dim).expect("generator output satisfies path invariants")
}

/// Lewis–Shedler thinning with constant majorant `dmax`: candidates from a
/// homogeneous Poisson process of rate `dmax`, each kept with probability
/// `λ(t, z_t) / dmax`. Stops at the `cap`-th accepted jump.
pub fn simulate_cox<R, F>(
    lambda: F,
    z: &CovariatePath,
    dmax: f64,
    horizon: f64,
    cap: u32,
    rng: &mut R,
) -> Result<CountingPath>
where
    R: Rng + ?Sized,
    F: Fn(f64, &[f64]) -> f64,
{
    let mut jumps = Vec::new();
    if dmax > 0.0 {
        let gaps = Exp::new(dmax).map_err(|e| Error::Config(e.to_string()))?;
        let mut t = 0.0;
        while jumps.len() < cap as usize {
            let gap: f64 = gaps.sample(rng);
            t += gap;
            if t > horizon {
                break;
            }
            if gap <= 0.0 {
                continue;
            }
            let rate = lambda(t, z.value_at(t));
            if rate > dmax * (1.0 + MAJORANT_SLACK) {
                return Err(Error::MajorantViolated {
                    t,
                    value: rate,
                    bound: dmax,
                });
            }
            if rng.random::<f64>() * dmax < rate {
                jumps.push(t);
            }
        }
    }
    CountingPath::new(horizon, jumps, cap)
}

/// One labeled sample from its own stream.
pub fn simulate_sample(config: &SimConfig, model: &IntensityModel, index: u64) -> Result<LabeledSample> {
    let mut rng = sample_rng(config.seed, index);
    let y = draw_label(model.p_plus(), &mut rng);
    let z = simulate_covariate(config, model.dim(), &mut rng);
    let x = simulate_cox(
        model.rate(y).as_ref(),
        &z,
        model.dmax(),
        config.horizon,
        config.cap,
        &mut rng,
    )?;
    LabeledSample::stopped(x, z, y)
}

/// Samples `0..n` of the stream family; parallel, order-preserving.
pub fn simulate_dataset(config: &SimConfig, model: &IntensityModel) -> Result<Vec<LabeledSample>> {
    config.validate()?;
    if config.horizon != model.horizon() {
        return Err(Error::Config(format!(
            "simulation horizon {} differs from the model's {}",
            config.horizon,
            model.horizon()
        )));
    }
    (0..config.n as u64)
        .into_par_iter()
        .map(|i| simulate_sample(config, model, i))
        .collect()
}

/// `−∫_0^{T∧τ} (1 − λ(s, z_s)) ds − Σ_{t_i ≤ T∧τ} ln λ(t_i, z_{t_i})`.
///
/// `exp` of this is the density of the unit-rate stopped Poisson law with
/// respect to the law with intensity `λ(·, z_·)`.
pub fn girsanov_log_weight<F>(
    lambda: F,
    x: &CountingPath,
    z: &CovariatePath,
    quad: &SegmentQuadrature,
) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let window = x.tau();
    let compensator = quad.integrate(z, window, |s, zs| 1.0 - lambda(s, zs));
    let mut log_sum = 0.0;
    for &t in x.jump_times().iter().take_while(|&&t| t <= window) {
        let rate = lambda(t, z.value_at(t));
        if !(rate > 0.0) {
            return Err(Error::NonPositiveIntensity { t, value: rate });
        }
        log_sum += rate.ln();
    }
    Ok(-compensator - log_sum)
}
