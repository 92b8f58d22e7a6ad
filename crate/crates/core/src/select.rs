//! Choice of the class index `k` over the nested family `F_{B_1} ⊆ F_{B_2} ⊆ ..`.
//!
//! The penalized rule minimizes `A_n(f̂_k) + pen(k)` with
//! `pen(k) = C [R_k ln n / n + C_k (α ln B_k + δ + ln 2) / n]`, where
//! `A_k = U B_k φ'(U B_k)`, `C_k = 2 (φ(U B_k) + 1 − ln 2)` and
//! `R_k = A_k² B_k C_k + √A_k / C_k`. A hold-out rule is offered as a
//! practical alternative.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::erm::{empirical_risk, fit_erm, logit_loss, logit_loss_deriv, Coefficients, FitOptions};
use crate::error::{Error, Result};
use crate::features::{class_bound, feature_matrix, FeatureMatrix};
use crate::model::Dictionary;
use crate::paths::LabeledSample;

/// `B_k = ⌈(πk)^{2/α} / 6^{1/α}⌉`.
pub fn default_schedule(alpha: f64, k: usize) -> usize {
    assert!(alpha > 0.0 && k >= 1);
    ((PI * k as f64).powf(2.0 / alpha) / 6f64.powf(1.0 / alpha)).ceil() as usize
}

/// `Σ_{k <= k_max} B_k^{−α}` for the default schedule, plus the bound
/// `6 / (π² k_max)` on the remaining tail (from `B_k^{−α} <= 6 / (π k)²`).
pub fn schedule_mass(alpha: f64, k_max: usize) -> (f64, f64) {
    let partial = (1..=k_max)
        .map(|k| (default_schedule(alpha, k) as f64).powf(-alpha))
        .sum();
    (partial, 6.0 / (PI * PI * k_max as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selector {
    Penalized,
    /// Fit on the leading `1 − fraction` of the sample, score on the rest,
    /// then refit the chosen class on everything.
    Holdout { fraction: f64 },
}

impl Selector {
    pub fn parse(name: &str, fraction: f64) -> Result<Self> {
        match name {
            "penalized" => Ok(Selector::Penalized),
            "holdout" => Ok(Selector::Holdout { fraction }),
            other => Err(Error::Config(format!(
                "unknown selector `{other}` (expected penalized or holdout)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPlan {
    pub alpha: f64,
    /// `B_1..B_{k_max}`.
    pub schedule: Vec<usize>,
    pub delta: f64,
    pub c_pen: f64,
    pub n: usize,
    /// `U = 1 + (T + u) L`.
    pub bound: f64,
}

impl SelectionPlan {
    /// Default schedule and `δ = 2 ln n` unless `delta` is given.
    pub fn new(alpha: f64, k_max: usize, c_pen: f64, delta: Option<f64>, n: usize, bound: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        if k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(c_pen >= 0.0) {
            return Err(Error::Config(format!("C_pen must be non-negative, got {c_pen}")));
        }
        let schedule = (1..=k_max).map(|k| default_schedule(alpha, k)).collect();
        let delta = delta.unwrap_or(2.0 * (n.max(1) as f64).ln());
        Ok(Self {
            alpha,
            schedule,
            delta,
            c_pen,
            n,
            bound,
        })
    }

    pub fn k_max(&self) -> usize {
        self.schedule.len()
    }

    pub fn b_of(&self, k: usize) -> usize {
        self.schedule[k - 1]
    }
}

/// The constants `(A_k, C_k, R_k)` for class size `b` and bound `u_bound`.
pub fn penalty_constants(u_bound: f64, b: usize) -> (f64, f64, f64) {
    let ub = u_bound * b as f64;
    let a = ub * logit_loss_deriv(ub);
    let c = 2.0 * (logit_loss(ub) + 1.0 - LN_2);
    let r = a * a * b as f64 * c + a.sqrt() / c;
    (a, c, r)
}

/// `pen(k)` for an explicit `(U, B, n, α, δ, C)`.
pub fn penalty_value(u_bound: f64, b: usize, n: f64, alpha: f64, delta: f64, c_pen: f64) -> f64 {
    let (_, c, r) = penalty_constants(u_bound, b);
    c_pen * (r * n.ln() / n + c * (alpha * (b as f64).ln() + delta + LN_2) / n)
}

pub fn penalty(k: usize, plan: &SelectionPlan) -> f64 {
    penalty_value(
        plan.bound,
        plan.b_of(k),
        plan.n as f64,
        plan.alpha,
        plan.delta,
        plan.c_pen,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub k: usize,
    pub b_k: usize,
    pub risk: f64,
    pub pen: f64,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct SelectionReport {
    pub rows: Vec<SelectionRow>,
    pub chosen_k: usize,
    pub coefficients: Coefficients,
    pub selector: Selector,
}

impl SelectionReport {
    pub fn chosen(&self) -> &SelectionRow {
        &self.rows[self.chosen_k - 1]
    }

    /// CSV with columns `k,B_k,risk,pen,score,chosen`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,B_k,risk,pen,score,chosen\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{}",
                r.k,
                r.b_k,
                r.risk,
                r.pen,
                r.score,
                u8::from(r.k == self.chosen_k)
            )
            .unwrap();
        }
        out
    }
}

/// Smallest `k` attaining the minimum score.
fn argmin_first(rows: &[SelectionRow]) -> usize {
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.score < rows[best].score {
            best = i;
        }
    }
    rows[best].k
}

/// Penalized selection on precomputed features (at least `B_{k_max}` columns).
pub fn select_penalized(
    features: &FeatureMatrix,
    plan: &SelectionPlan,
    options: &FitOptions,
) -> Result<SelectionReport> {
    let fits = (1..=plan.k_max())
        .into_par_iter()
        .map(|k| fit_erm(features, plan.b_of(k), options))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SelectionRow> = fits
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let k = i + 1;
            let pen = penalty(k, plan);
            SelectionRow {
                k,
                b_k: plan.b_of(k),
                risk: f.risk,
                pen,
                score: f.risk + pen,
            }
        })
        .collect();
    let chosen_k = argmin_first(&rows);
    Ok(SelectionReport {
        rows,
        chosen_k,
        coefficients: fits[chosen_k - 1].coefficients.clone(),
        selector: Selector::Penalized,
    })
}

/// Hold-out selection on precomputed features.
pub fn select_holdout(
    features: &FeatureMatrix,
    plan: &SelectionPlan,
    fraction: f64,
    options: &FitOptions,
) -> Result<SelectionReport> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "hold-out fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = features.n();
    let n_valid = ((n as f64) * fraction).round() as usize;
    if n_valid == 0 || n_valid >= n {
        return Err(Error::Config(format!(
            "cannot split {n} samples with hold-out fraction {fraction}"
        )));
    }
    let train = features.rows(0..n - n_valid);
    let valid = features.rows(n - n_valid..n);
    let rows = (1..=plan.k_max())
        .into_par_iter()
        .map(|k| {
            let fit = fit_erm(&train, plan.b_of(k), options)?;
            let score = empirical_risk(&fit.coefficients, &valid)?;
            Ok(SelectionRow {
                k,
                b_k: plan.b_of(k),
                risk: fit.risk,
                pen: score - fit.risk,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen_k = argmin_first(&rows);
    let refit = fit_erm(features, plan.b_of(chosen_k), options)?;
    Ok(SelectionReport {
        rows,
        chosen_k,
        coefficients: refit.coefficients,
        selector: Selector::Holdout { fraction },
    })
}

#[derive(Debug, Clone)]
pub struct SelectionSettings {
    pub alpha: f64,
    pub k_max: usize,
    pub c_pen: f64,
    pub delta: Option<f64>,
    pub selector: Selector,
    pub fit: FitOptions,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            k_max: 8,
            c_pen: 1.0,
            delta: None,
            selector: Selector::Penalized,
            fit: FitOptions::default(),
        }
    }
}

/// Features up to `B_{k_max}`, the plan for this sample, and the selection.
pub fn fit_penalized(
    dataset: &[LabeledSample],
    dict: &dyn Dictionary,
    settings: &SelectionSettings,
) -> Result<(SelectionPlan, SelectionReport)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let b_max = default_schedule(settings.alpha, settings.k_max.max(1));
    let features = feature_matrix(dataset, dict, b_max)?;
    let bound = features.bound().unwrap_or_else(|| {
        class_bound(dataset[0].x.horizon(), dataset[0].x.cap(), dict.sup_bound(b_max))
    });
    let plan = SelectionPlan::new(
        settings.alpha,
        settings.k_max,
        settings.c_pen,
        settings.delta,
        dataset.len(),
        bound,
    )?;
    let report = select_with(&features, &plan, settings)?;
    Ok((plan, report))
}

pub fn select_with(
    features: &FeatureMatrix,
    plan: &SelectionPlan,
    settings: &SelectionSettings,
) -> Result<SelectionReport> {
    match settings.selector {
        Selector::Penalized => select_penalized(features, plan, &settings.fit),
        Selector::Holdout { fraction } => select_holdout(features, plan, fraction, &settings.fit),
    }
}
