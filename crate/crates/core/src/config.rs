//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored; string values may be quoted.

use std::path::Path;

use crate::erm::FitOptions;
use crate::error::{Error, Result};
use crate::model::{cosine_dictionary, scenario, CosineDictionary, IntensityModel};
use crate::select::{SelectionSettings, Selector};
use crate::simulate::{CovariateKind, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n: usize,
    pub horizon: f64,
    pub cap: u32,
    pub dim: usize,
    pub grid_steps: usize,
    pub scenario: String,
    pub covariate_kind: String,
    pub p_plus: f64,
    pub alpha: f64,
    pub k_max: usize,
    pub c_pen: f64,
    pub delta: Option<f64>,
    pub selector: String,
    pub holdout_fraction: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub eval_size: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 1000,
            horizon: 1.0,
            cap: 10,
            dim: 1,
            grid_steps: 50,
            scenario: "affine-1d".into(),
            covariate_kind: "logistic-ou".into(),
            p_plus: 0.5,
            alpha: 1.0,
            k_max: 8,
            c_pen: 1.0,
            delta: None,
            selector: "penalized".into(),
            holdout_fraction: 0.25,
            n_grid: vec![250, 1000, 4000],
            replications: 20,
            eval_size: 100_000,
            max_iters: 50_000,
            tol: 1e-9,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("`{key}`: cannot parse `{value}`: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            config.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim_matches(|c| c == '"' || c == '\'');
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "n" => self.n = parse_num(key, value)?,
            "T" => self.horizon = parse_num(key, value)?,
            "u" => self.cap = parse_num(key, value)?,
            "d" => self.dim = parse_num(key, value)?,
            "grid_steps" => self.grid_steps = parse_num(key, value)?,
            "scenario" => self.scenario = value.to_string(),
            "covariate_kind" => self.covariate_kind = value.to_string(),
            "p_plus" => self.p_plus = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "k_max" => self.k_max = parse_num(key, value)?,
            "c_pen" | "C_pen" => self.c_pen = parse_num(key, value)?,
            "delta" => self.delta = Some(parse_num(key, value)?),
            "selector" => self.selector = value.to_string(),
            "holdout_fraction" => self.holdout_fraction = parse_num(key, value)?,
            "n_grid" => {
                self.n_grid = value
                    .trim_matches(|c| c == '[' || c == ']')
                    .split(',')
                    .map(|s| parse_num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "replications" => self.replications = parse_num(key, value)?,
            "eval_size" => self.eval_size = parse_num(key, value)?,
            "max_iters" => self.max_iters = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("u", self.cap as usize),
            ("d", self.dim),
            ("grid_steps", self.grid_steps),
            ("k_max", self.k_max),
            ("replications", self.replications),
            ("eval_size", self.eval_size),
            ("max_iters", self.max_iters),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be positive")));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("`T` must be positive, got {}", self.horizon)));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Config("`n_grid` needs positive sizes".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("`n_grid` must be strictly increasing".into()));
        }
        CovariateKind::parse(&self.covariate_kind)?;
        self.selector()?;
        Ok(())
    }

    pub fn covariate(&self) -> Result<CovariateKind> {
        CovariateKind::parse(&self.covariate_kind)
    }

    pub fn selector(&self) -> Result<Selector> {
        Selector::parse(&self.selector, self.holdout_fraction)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        Ok(SimConfig {
            seed: self.seed,
            n: self.n,
            horizon: self.horizon,
            cap: self.cap,
            grid_steps: self.grid_steps,
            covariate_kind: self.covariate()?,
        })
    }

    /// The named scenario; its dimension must agree with `d`.
    pub fn model(&self) -> Result<IntensityModel> {
        let model = scenario(&self.scenario, self.horizon, self.p_plus)?;
        if model.dim() != self.dim {
            return Err(Error::Config(format!(
                "scenario `{}` has d = {}, config says d = {}",
                self.scenario,
                model.dim(),
                self.dim
            )));
        }
        Ok(model)
    }

    pub fn dictionary(&self) -> CosineDictionary {
        cosine_dictionary(self.dim, self.horizon)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            ..FitOptions::default()
        }
    }

    pub fn selection(&self) -> Result<SelectionSettings> {
        Ok(SelectionSettings {
            alpha: self.alpha,
            k_max: self.k_max,
            c_pen: self.c_pen,
            delta: self.delta,
            selector: self.selector()?,
            fit: self.fit_options(),
        })
    }
}
