//! Consistency experiment over a grid of sample sizes, and the Monte-Carlo
//! change-of-measure check.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::erm::Coefficients;
use crate::error::{Error, Result};
use crate::features::{feature_matrix, FeatureMatrix};
use crate::model::IntensityModel;
use crate::oracle::{mc_phi_risk, mean_estimate, OracleTable};
use crate::paths::{Label, LabeledSample};
use crate::quadrature::SegmentQuadrature;
use crate::select::{default_schedule, fit_penalized};
use crate::simulate::{
    girsanov_log_weight, sample_rng, simulate_covariate, simulate_cox, simulate_dataset, SimConfig,
};
use crate::stats::mix_seed;

const EVAL_TAG: u64 = 0x00e7_a100;
const GIRSANOV_TAG: u64 = 0x0061_25a0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub chosen_k: usize,
    pub b_k: usize,
    pub train_risk: f64,
    /// `L̂(f̂_n)` with label noise integrated out.
    pub risk: f64,
    pub excess_risk: f64,
    pub phi_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub n: usize,
    pub replications: usize,
    pub mean_excess_risk: f64,
    pub se_excess_risk: f64,
    pub mean_risk: f64,
    pub bayes_risk: f64,
    pub mean_phi_risk: f64,
    pub phi_risk_star: f64,
    pub mean_chosen_k: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunRow>,
    pub aggregate: Vec<AggregateRow>,
    pub bayes_risk: f64,
    pub phi_risk_star: f64,
}

impl ExperimentReport {
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("n,replication,seed,k,B_k,train_risk,risk,excess_risk,phi_risk\n");
        for r in &self.runs {
            writeln!(
                out,
                "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.replication, r.seed, r.chosen_k, r.b_k, r.train_risk, r.risk, r.excess_risk, r.phi_risk
            )
            .unwrap();
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(
            "n,replications,mean_excess_risk,se_excess_risk,mean_risk,bayes_risk,mean_phi_risk,phi_risk_star,mean_k\n",
        );
        for a in &self.aggregate {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                a.n,
                a.replications,
                a.mean_excess_risk,
                a.se_excess_risk,
                a.mean_risk,
                a.bayes_risk,
                a.mean_phi_risk,
                a.phi_risk_star,
                a.mean_chosen_k
            )
            .unwrap();
        }
        out
    }

    /// Writes `runs.csv` and `aggregate.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [("runs.csv", self.runs_csv()), ("aggregate.csv", self.aggregate_csv())] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

struct EvalSet {
    table: OracleTable,
    features: FeatureMatrix,
}

fn build_eval_set(config: &RunConfig, model: &IntensityModel) -> Result<EvalSet> {
    let sim = SimConfig {
        seed: mix_seed(config.seed, &[EVAL_TAG]),
        n: config.eval_size,
        ..config.sim_config()?
    };
    let samples = simulate_dataset(&sim, model)?;
    let table = OracleTable::build(model, &samples)?;
    let b_max = default_schedule(config.alpha, config.k_max);
    let features = feature_matrix(&samples, &config.dictionary(), b_max)?;
    Ok(EvalSet { table, features })
}

fn staged<T>(stage: &'static str, n: usize, replication: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        n,
        replication,
        source: Box::new(e),
    })
}

fn run_one(
    config: &RunConfig,
    model: &IntensityModel,
    eval: &EvalSet,
    n: usize,
    replication: usize,
) -> Result<RunRow> {
    let seed = mix_seed(config.seed, &[n as u64, replication as u64]);
    let sim = SimConfig {
        seed,
        n,
        ..config.sim_config()?
    };
    let train = staged("simulate", n, replication, simulate_dataset(&sim, model))?;
    let settings = config.selection()?;
    let (_, report) = staged(
        "select",
        n,
        replication,
        fit_penalized(&train, &config.dictionary(), &settings),
    )?;
    let coeffs: &Coefficients = &report.coefficients;
    let scores = coeffs.scores(&eval.features);
    let predictions: Vec<Label> = scores.iter().map(|&s| Label::from_score(s)).collect();
    let evaluate = || -> Result<(f64, f64, f64)> {
        let risk = eval.table.conditional_risk(&predictions)?;
        let excess = eval.table.excess_risk(&predictions)?.value;
        let phi = mc_phi_risk(&scores, eval.features.labels())?.value;
        Ok((risk, excess, phi))
    };
    let (risk, excess_risk, phi_risk) = staged("evaluate", n, replication, evaluate())?;
    Ok(RunRow {
        n,
        replication,
        seed,
        chosen_k: report.chosen_k,
        b_k: report.chosen().b_k,
        train_risk: report.chosen().risk,
        risk,
        excess_risk,
        phi_risk,
    })
}

/// For every `n` in the grid and every replication: a fresh training set,
/// model selection, and evaluation on one shared evaluation set.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let model = config.model()?;
    let eval = build_eval_set(config, &model)?;
    let bayes_risk = eval.table.bayes_risk().value;
    let phi_risk_star = eval.table.phi_risk_star()?;

    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |r| (n, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(n, r)| run_one(config, &model, &eval, n, r))
        .collect::<Result<Vec<_>>>()?;

    let aggregate = config
        .n_grid
        .iter()
        .map(|&n| {
            let rows: Vec<&RunRow> = runs.iter().filter(|r| r.n == n).collect();
            let count = rows.len() as f64;
            let excess: Vec<f64> = rows.iter().map(|r| r.excess_risk).collect();
            let est = mean_estimate(&excess);
            AggregateRow {
                n,
                replications: rows.len(),
                mean_excess_risk: est.value,
                se_excess_risk: est.std_error,
                mean_risk: rows.iter().map(|r| r.risk).sum::<f64>() / count,
                bayes_risk,
                mean_phi_risk: rows.iter().map(|r| r.phi_risk).sum::<f64>() / count,
                phi_risk_star,
                mean_chosen_k: rows.iter().map(|r| r.chosen_k as f64).sum::<f64>() / count,
            }
        })
        .collect();

    Ok(ExperimentReport {
        runs,
        aggregate,
        bayes_risk,
        phi_risk_star,
    })
}

/// Expectations of the stopped unit-rate Poisson law on `[0, T]` with cap `u`.
pub mod unit_rate {
    /// `E min(N_T, u)`.
    pub fn capped_count_mean(horizon: f64, cap: u32) -> f64 {
        let mut p = (-horizon).exp();
        let mut below = 0.0;
        let mut mean = 0.0;
        for k in 0..cap {
            mean += k as f64 * p;
            below += p;
            p *= horizon / (k + 1) as f64;
        }
        mean + cap as f64 * (1.0 - below)
    }

    /// `P(N_T = 0)`.
    pub fn no_jump_probability(horizon: f64) -> f64 {
        (-horizon).exp()
    }

    /// `E min(first jump, T)`.
    pub fn capped_first_jump_mean(horizon: f64) -> f64 {
        -(-horizon).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirsanovRow {
    pub intensity: String,
    pub functional: String,
    pub weighted_mean: f64,
    pub std_error: f64,
    pub exact: f64,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GirsanovReport {
    pub rows: Vec<GirsanovRow>,
    pub reps: usize,
    /// `max |W|` over the sampled paths when `λ ≡ 1`.
    pub unit_weight_max: f64,
}

impl GirsanovReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.unit_weight_max < 1e-12
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("intensity,functional,weighted_mean,std_error,exact,z_score,pass\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.6},{}",
                r.intensity,
                r.functional,
                r.weighted_mean,
                r.std_error,
                r.exact,
                r.z_score,
                u8::from(r.pass)
            )
            .unwrap();
        }
        out
    }
}

/// Number of standard errors allowed between the weighted and exact means.
pub const GIRSANOV_Z_LIMIT: f64 = 4.0;

type Rate = fn(f64, &[f64]) -> f64;

/// Simulates `reps` paths under `λ ≡ 2` and `λ = 2 + 2z`, reweights by
/// `e^W`, and compares three functionals against their unit-rate values.
pub fn run_girsanov_check(config: &RunConfig, reps: usize) -> Result<GirsanovReport> {
    if reps < 2 {
        return Err(Error::Config("the change-of-measure check needs at least 2 paths".into()));
    }
    let sim = SimConfig {
        n: reps,
        ..config.sim_config()?
    };
    sim.validate()?;
    let horizon = sim.horizon;
    let cap = sim.cap;
    let quad = SegmentQuadrature::for_horizon(horizon);
    let cases: [(&str, Rate, f64); 3] = [
        ("constant-2", |_, _| 2.0, 2.0),
        ("affine-2+2z", |_, z| 2.0 + 2.0 * z[0], 4.0),
        ("unit", |_, _| 1.0, 1.0),
    ];
    let exact = [
        ("capped-count", unit_rate::capped_count_mean(horizon, cap)),
        ("no-jump", unit_rate::no_jump_probability(horizon)),
        ("capped-first-jump", unit_rate::capped_first_jump_mean(horizon)),
    ];

    let mut rows = Vec::new();
    let mut unit_weight_max = 0.0;
    for (case, (name, rate, dmax)) in cases.iter().enumerate() {
        let seed = mix_seed(config.seed, &[GIRSANOV_TAG, case as u64]);
        let draws = (0..reps as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                let z = simulate_covariate(&sim, 1, &mut rng);
                let x = simulate_cox(rate, &z, *dmax, horizon, cap, &mut rng)?;
                let w = girsanov_log_weight(rate, &x, &z, &quad)?;
                let first = x.jump_times().first().copied().unwrap_or(horizon);
                let g = [x.len() as f64, f64::from(u8::from(x.is_empty())), first];
                Ok((w, g))
            })
            .collect::<Result<Vec<_>>>()?;
        if *name == "unit" {
            unit_weight_max = draws.iter().map(|(w, _)| w.abs()).fold(0.0, f64::max);
            continue;
        }
        for (f, (label, target)) in exact.iter().enumerate() {
            let weighted: Vec<f64> = draws.iter().map(|(w, g)| w.exp() * g[f]).collect();
            let est = mean_estimate(&weighted);
            let z_score = if est.std_error > 0.0 {
                (est.value - target) / est.std_error
            } else if est.value == *target {
                0.0
            } else {
                f64::INFINITY
            };
            rows.push(GirsanovRow {
                intensity: name.to_string(),
                functional: label.to_string(),
                weighted_mean: est.value,
                std_error: est.std_error,
                exact: *target,
                z_score,
                pass: z_score.abs() <= GIRSANOV_Z_LIMIT,
            });
        }
    }
    Ok(GirsanovReport {
        rows,
        reps,
        unit_weight_max,
    })
}

/// Shared evaluation set of an experiment, exposed for reporting tools.
pub fn evaluation_samples(config: &RunConfig, model: &IntensityModel) -> Result<Vec<LabeledSample>> {
    let sim = SimConfig {
        seed: mix_seed(config.seed, &[EVAL_TAG]),
        n: config.eval_size,
        ..config.sim_config()?
    };
    simulate_dataset(&sim, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_rate_expectations() {
        // cap 1: E min(N, 1) = P(N >= 1)
        assert!((unit_rate::capped_count_mean(1.3, 1) - (1.0 - (-1.3f64).exp())).abs() < 1e-15);
        // large cap recovers E N = T
        assert!((unit_rate::capped_count_mean(2.0, 60) - 2.0).abs() < 1e-12);
        assert!((unit_rate::capped_first_jump_mean(1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    fn tiny_config() -> RunConfig {
        RunConfig {
            seed: 5,
            n_grid: vec![40],
            replications: 2,
            eval_size: 300,
            k_max: 2,
            cap: 5,
            grid_steps: 10,
            ..RunConfig::default()
        }
    }

    #[test]
    fn single_cell_experiment_is_deterministic() {
        let config = RunConfig {
            replications: 1,
            ..tiny_config()
        };
        let a = run_experiment(&config).unwrap();
        assert_eq!(a.runs.len(), 1);
        assert_eq!(a.aggregate.len(), 1);
        assert!(a.runs[0].excess_risk >= 0.0);
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.aggregate_csv(), b.aggregate_csv());
        assert_eq!(a.runs_csv(), b.runs_csv());
    }

    #[test]
    fn girsanov_check_small() {
        let report = run_girsanov_check(&tiny_config(), 4000).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.unit_weight_max, 0.0);
        assert!(report.passed(), "{}", report.to_csv());
    }
}
