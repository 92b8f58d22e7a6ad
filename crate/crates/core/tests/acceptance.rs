//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the lines are always shown.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use coxflow::erm::{empirical_risk, fit_erm, logit_loss, risk_gradient, Coefficients, FitOptions, Method};
use coxflow::experiment::{run_experiment, run_girsanov_check};
use coxflow::features::{class_bound, feature_matrix, FeatureMatrix};
use coxflow::model::{cosine_dictionary, scenario, Dictionary};
use coxflow::oracle::{likelihood_ratio_posterior, mc_bayes_risk, mean_estimate, posterior, OracleTable};
use coxflow::paths::{write_dataset_to, CovariatePath, Label};
use coxflow::quadrature::SegmentQuadrature;
use coxflow::select::{default_schedule, penalty, schedule_mass, select_penalized, SelectionPlan};
use coxflow::simulate::{sample_rng, simulate_cox, simulate_dataset, CovariateKind, SimConfig};
use coxflow::stats::ks_exponential;
use coxflow::RunConfig;
use rand::Rng;
use rayon::prelude::*;

// Tolerances and sizes.
const POSTERIOR_TOL: f64 = 1e-10;
const Z_LIMIT: f64 = 4.0;
const KS_LEVEL: f64 = 0.001;
const GRID_TOL: f64 = 1e-4;
const GRID_STEP: f64 = 1e-3;
const FD_REL_TOL: f64 = 1e-5;
const NESTED_SLACK: f64 = 1e-6;
const PENALTY_REL_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sim(seed: u64, n: usize, cap: u32) -> SimConfig {
    SimConfig {
        seed,
        n,
        horizon: 1.0,
        cap,
        grid_steps: 50,
        covariate_kind: CovariateKind::DEFAULT_OU,
    }
}

fn posterior_identity() -> Outcome {
    let start = Instant::now();
    let model = scenario("affine-1d", 1.0, 0.4).unwrap();
    let data = simulate_dataset(&sim(101, 10_000, 10), &model).unwrap();
    let quad = SegmentQuadrature::for_horizon(1.0);
    let worst = data
        .par_iter()
        .map(|s| {
            let (closed, _) = posterior(&s.x, &s.z, &model).unwrap();
            let brute = likelihood_ratio_posterior(&quad, &s.x, &s.z, &model).unwrap();
            (closed - brute).abs()
        })
        .reduce(|| 0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        worst <= POSTERIOR_TOL && elapsed < Duration::from_secs(60),
        format!("max |posterior - likelihood-ratio posterior| = {worst:.3e} over 10^4 paths (tol {POSTERIOR_TOL:e}), {elapsed:.1?}"),
    )
}

fn change_of_measure() -> Outcome {
    let start = Instant::now();
    let config = RunConfig {
        seed: 202,
        cap: 3,
        grid_steps: 50,
        ..RunConfig::default()
    };
    let report = run_girsanov_check(&config, 100_000).unwrap();
    let elapsed = start.elapsed();
    let worst = report.rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    outcome(
        report.passed() && worst <= Z_LIMIT && elapsed < Duration::from_secs(120),
        format!(
            "{} functional/intensity pairs, max |z| = {worst:.2} (limit {Z_LIMIT}), unit-rate max |W| = {:e}, {elapsed:.1?}",
            report.rows.len(),
            report.unit_weight_max
        ),
    )
}

fn simulation_correctness() -> Outcome {
    // homogeneous rate 2 under a majorant of 5
    let rate = 2.0;
    let horizon = 6_000.0;
    let z = CovariatePath::constant(horizon, vec![0.5]).unwrap();
    let mut rng = sample_rng(303, 0);
    let x = simulate_cox(|_, _| rate, &z, 5.0, horizon, u32::MAX, &mut rng).unwrap();
    let mut gaps: Vec<f64> = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &t in x.jump_times().iter().take(10_000) {
        gaps.push(t - prev);
        prev = t;
    }
    let (d, p) = ks_exponential(&gaps, rate);
    let ks_ok = gaps.len() == 10_000 && p > KS_LEVEL;

    // N_T against the compensator ∫λ(s, Z_s) ds on covariate-driven paths
    let model = scenario("affine-1d", 1.0, 0.5).unwrap();
    let data = simulate_dataset(&sim(304, 10_000, 1_000), &model).unwrap();
    let quad = SegmentQuadrature::for_horizon(1.0);
    let counts: Vec<f64> = data.iter().map(|s| s.x.len() as f64).collect();
    let comps: Vec<f64> = data
        .iter()
        .map(|s| {
            let rate = model.rate(s.y);
            quad.integrate(&s.z, 1.0, |t, zt| rate(t, zt))
        })
        .collect();
    let diff: Vec<f64> = counts.iter().zip(&comps).map(|(n, c)| n - c).collect();
    let est = mean_estimate(&diff);
    let z_count = est.value / est.std_error;
    let count_ok = z_count.abs() <= Z_LIMIT;
    outcome(
        ks_ok && count_ok,
        format!(
            "KS D = {d:.4}, p = {p:.3} on {} gaps (level {KS_LEVEL}); mean count {:.4} vs compensator {:.4}, z = {z_count:.2}",
            gaps.len(),
            mean_estimate(&counts).value,
            mean_estimate(&comps).value
        ),
    )
}

fn calibration() -> Outcome {
    let model = scenario("affine-1d", 1.0, 0.6).unwrap();
    let data = simulate_dataset(&sim(404, 100_000, 10), &model).unwrap();
    let table = OracleTable::build(&model, &data).unwrap();
    let resid: Vec<f64> = table
        .labels
        .iter()
        .zip(&table.eta)
        .map(|(y, e)| f64::from(u8::from(*y == Label::Plus)) - e)
        .collect();
    let est = mean_estimate(&resid);
    let z = est.value / est.std_error;

    let p_plus = 0.3;
    let sym = scenario("symmetric-1d", 1.0, p_plus).unwrap();
    let sym_data = simulate_dataset(&sim(405, 100_000, 10), &sym).unwrap();
    let bayes = mc_bayes_risk(&sym, &sym_data).unwrap();
    let target = p_plus.min(1.0 - p_plus);
    let sym_ok = (bayes.value - target).abs() <= Z_LIMIT * bayes.std_error + 1e-12;
    outcome(
        z.abs() <= Z_LIMIT && sym_ok,
        format!(
            "mean(1{{Y=1}} - eta) = {:.2e}, z = {z:.2}; symmetric Bayes risk {:.6} vs {target} (SE {:.1e})",
            est.value, bayes.value, bayes.std_error
        ),
    )
}

/// Exact minimum of the risk over the step-`h` grid of `[-1, 1]^3`: all
/// `(a, b)` pairs, and for each a bisection on the forward differences of
/// the convex sequence in `c`.
fn grid_minimum(phi: &[f64], psi: &[f64], labels: &[Label]) -> f64 {
    let steps = (2.0 / GRID_STEP).round() as i64;
    let at = |i: i64| -1.0 + i as f64 * GRID_STEP;
    let risk = |a: f64, b: f64, c: f64| -> f64 {
        (0..labels.len())
            .map(|i| logit_loss(-labels[i].sign() * (a * phi[i] + b * psi[i] + c)))
            .sum::<f64>()
            / labels.len() as f64
    };
    (0..=steps)
        .into_par_iter()
        .map(|ia| {
            let a = at(ia);
            let mut best = f64::INFINITY;
            for ib in 0..=steps {
                let b = at(ib);
                let (mut lo, mut hi) = (0, steps);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if risk(a, b, at(mid + 1)) < risk(a, b, at(mid)) {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                best = best.min(risk(a, b, at(lo)));
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn erm_solver() -> Outcome {
    let mut rng = sample_rng(505, 0);
    let mut worst_gap: f64 = 0.0;
    let mut monotone = true;
    let mut worst_fd: f64 = 0.0;
    for _ in 0..10 {
        let phi: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let psi: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels: Vec<Label> = (0..4)
            .map(|_| if rng.random::<bool>() { Label::Plus } else { Label::Minus })
            .collect();
        let fm = FeatureMatrix::from_parts(1, phi.clone(), psi.clone(), labels.clone(), None).unwrap();
        for method in [Method::Accelerated, Method::Projected] {
            let options = FitOptions {
                method,
                record_trace: true,
                ..FitOptions::default()
            };
            let fit = fit_erm(&fm, 1, &options).unwrap();
            monotone &= fit.initial_risk >= fit.trace.first().copied().unwrap_or(fit.risk);
            monotone &= fit.trace.windows(2).all(|w| w[1] <= w[0]);
            if method == Method::Accelerated {
                let grid = grid_minimum(&phi, &psi, &labels);
                worst_gap = worst_gap.max((fit.risk - grid).abs());
            }
        }
        let coeffs = Coefficients {
            a: vec![rng.random_range(-1.0..1.0)],
            b: vec![rng.random_range(-1.0..1.0)],
            c: rng.random_range(-1.0..1.0),
            radius: 1,
        };
        let grad = risk_gradient(&coeffs, &fm).unwrap();
        let h = 1e-5;
        for (i, g) in grad.iter().enumerate() {
            let shifted = |delta: f64| {
                let mut c = coeffs.clone();
                match i {
                    0 => c.a[0] += delta,
                    1 => c.b[0] += delta,
                    _ => c.c += delta,
                }
                empirical_risk(&c, &fm).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            worst_fd = worst_fd.max((g - fd).abs() / g.abs().max(1e-3));
        }
    }
    outcome(
        worst_gap <= GRID_TOL && monotone && worst_fd <= FD_REL_TOL,
        format!(
            "max |A_n(solver) - grid min| = {worst_gap:.2e} (tol {GRID_TOL:e}); monotone traces: {monotone}; max gradient rel. error {worst_fd:.2e} (tol {FD_REL_TOL:e})"
        ),
    )
}

fn class_bound_invariant() -> Outcome {
    let mut violations = 0usize;
    let mut worst_ratio: f64 = 0.0;
    for (name, seed) in [("affine-1d", 601u64), ("periodic-2d", 602)] {
        let model = scenario(name, 1.0, 0.5).unwrap();
        let data = simulate_dataset(&sim(seed, 1_000, 10), &model).unwrap();
        let dict = cosine_dictionary(model.dim(), 1.0);
        let b = 7;
        let fm = feature_matrix(&data, &dict, b).unwrap();
        let bound = class_bound(1.0, 10, dict.sup_bound(b)) * b as f64;
        let mut rng = sample_rng(seed, 1);
        for _ in 0..1_000 {
            let coeffs = random_feasible(&mut rng, b);
            for s in coeffs.scores(&fm) {
                worst_ratio = worst_ratio.max(s.abs() / bound);
                if s.abs() > bound {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations of |f| <= UB over 2 x 10^3 x 10^3 evaluations; max |f|/UB = {worst_ratio:.3}"),
    )
}

/// Uniform direction on the `ℓ¹` sphere of radius `b`, with probability
/// 1/2 all mass on one coordinate.
fn random_feasible<R: Rng>(rng: &mut R, b: usize) -> Coefficients {
    let radius = b as f64;
    let draw = |rng: &mut R| -> Vec<f64> {
        if rng.random::<bool>() {
            let mut v = vec![0.0; b];
            v[rng.random_range(0..b)] = if rng.random::<bool>() { radius } else { -radius };
            v
        } else {
            let raw: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm: f64 = raw.iter().map(|x| x.abs()).sum();
            raw.iter().map(|x| x / norm * radius * 0.999_999).collect()
        }
    };
    let a = draw(rng);
    let bb = draw(rng);
    let c = if rng.random::<bool>() { radius } else { rng.random_range(-radius..radius) };
    Coefficients { a, b: bb, c, radius: b }
}

fn nested_monotonicity() -> Outcome {
    let model = scenario("affine-1d", 1.0, 0.5).unwrap();
    let dict = cosine_dictionary(1, 1.0);
    let mut worst: f64 = 0.0;
    let mut risks_seen = Vec::new();
    for seed in [701u64, 702, 703] {
        let data = simulate_dataset(&sim(seed, 400, 10), &model).unwrap();
        let fm = feature_matrix(&data, &dict, default_schedule(1.0, 5)).unwrap();
        let plan = SelectionPlan::new(1.0, 5, 0.0, None, fm.n(), fm.bound().unwrap()).unwrap();
        let report = select_penalized(&fm, &plan, &FitOptions::default()).unwrap();
        for w in report.rows.windows(2) {
            worst = worst.max(w[1].risk - w[0].risk);
        }
        risks_seen.push(report.rows.iter().map(|r| format!("{:.4}", r.risk)).collect::<Vec<_>>().join(" "));
    }
    outcome(
        worst <= NESTED_SLACK,
        format!("max increase of A_n(f_k) over k=1..5 is {worst:.2e} (slack {NESTED_SLACK:e}); risks [{}]", risks_seen.join(" | ")),
    )
}

fn consistency_trend() -> Outcome {
    let start = Instant::now();
    let config = RunConfig {
        seed: 2024,
        scenario: "affine-1d".into(),
        cap: 10,
        grid_steps: 50,
        k_max: 5,
        selector: "holdout".into(),
        eval_size: 100_000,
        n_grid: vec![250, 1000, 4000],
        replications: 20,
        ..RunConfig::default()
    };
    let report = run_experiment(&config).unwrap();
    let elapsed = start.elapsed();
    let means: Vec<f64> = report.aggregate.iter().map(|a| a.mean_excess_risk).collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = config.n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let halved = means[2] < 0.5 * means[0];
    outcome(
        decreasing && slope < 0.0 && halved && elapsed < Duration::from_secs(1800),
        format!(
            "mean excess risk {:.3e} / {:.3e} / {:.3e} at n = 250 / 1000 / 4000; log-log slope {slope:.3}; ratio {:.3}; {elapsed:.1?}",
            means[0],
            means[1],
            means[2],
            means[2] / means[0]
        ),
    )
}

/// Output of `reference/penalty_reference.py` (60-digit arithmetic).
const PENALTY_REFERENCE: [[f64; 8]; 2] = [
    [
        8115.3268653915931464,
        1213507.1045649108671,
        25568606.159840603572,
        268335352.63081426319,
        1570966240.1716622815,
        6542534199.0540396461,
        21730199878.297208558,
        63728751845.054976411,
    ],
    [
        0.7167080957936918135,
        3.7419895373505902128,
        11.841062405630783331,
        59.424112718656309151,
        109.71605643229522026,
        186.68206266904324938,
        298.42030514517088477,
        663.97281977126175649,
    ],
];

fn penalty_audit() -> Outcome {
    let dict = cosine_dictionary(1, 1.0);
    let u_bound = class_bound(1.0, 10, dict.sup_bound(default_schedule(1.0, 8)));
    let plans = [
        SelectionPlan::new(1.0, 8, 1.0, None, 1000, u_bound).unwrap(),
        SelectionPlan::new(2.0, 8, 0.1, Some(0.5), 250, 1.5).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for (plan, reference) in plans.iter().zip(&PENALTY_REFERENCE) {
        for (k, want) in (1..=8).zip(reference) {
            worst = worst.max((penalty(k, plan) - want).abs() / want);
        }
    }
    let mut mass_ok = true;
    let mut masses = Vec::new();
    for alpha in [1.0, 2.0] {
        let (partial, tail) = schedule_mass(alpha, 8);
        mass_ok &= partial + tail <= 1.0;
        masses.push(format!("alpha={alpha}: {:.4}", partial + tail));
    }
    outcome(
        u_bound == 23.0 && worst <= PENALTY_REL_TOL && mass_ok,
        format!(
            "max rel. deviation from 60-digit reference {worst:.2e} (tol {PENALTY_REL_TOL:e}) for k=1..8; sum B_k^-alpha + tail: {}",
            masses.join(", ")
        ),
    )
}

fn determinism() -> Outcome {
    let model = scenario("affine-1d", 1.0, 0.5).unwrap();
    let config = sim(808, 2_000, 10);
    let in_pool = |threads: usize| -> (Vec<u8>, String) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let data = simulate_dataset(&config, &model).unwrap();
            let mut bytes = Vec::new();
            write_dataset_to(&mut bytes, &data).unwrap();
            let run = RunConfig {
                seed: 809,
                n_grid: vec![60, 120],
                replications: 3,
                eval_size: 2_000,
                k_max: 3,
                selector: "holdout".into(),
                ..RunConfig::default()
            };
            (bytes, run_experiment(&run).unwrap().aggregate_csv())
        })
    };
    let (data1, agg1) = in_pool(1);
    let (data4, agg4) = in_pool(4);
    let (data4b, agg4b) = in_pool(4);
    outcome(
        data1 == data4 && data4 == data4b && agg1 == agg4 && agg4 == agg4b,
        format!(
            "dataset ({} bytes) and aggregate CSV ({} bytes) identical across 1/4/4 threads: {}",
            data1.len(),
            agg1.len(),
            data1 == data4 && agg1 == agg4 && data4 == data4b && agg4 == agg4b
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("posterior vs likelihood-ratio posterior", posterior_identity),
        ("change-of-measure identity", change_of_measure),
        ("simulation correctness", simulation_correctness),
        ("calibration", calibration),
        ("ERM solver", erm_solver),
        ("class-bound invariant", class_bound_invariant),
        ("nested-class monotonicity", nested_monotonicity),
        ("consistency trend", consistency_trend),
        ("penalty audit", penalty_audit),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {}",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
