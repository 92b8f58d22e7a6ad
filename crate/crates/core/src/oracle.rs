//! Bayes quantities computed from the true intensities, and Monte-Carlo risk
//! estimates built on them.

use rayon::prelude::*;

use crate::erm::{logit_loss, risk_of_scores};
use crate::error::{Error, Result};
use crate::model::{eta_from_xi, IntensityModel};
use crate::paths::{CountingPath, CovariatePath, Label, LabeledSample};
use crate::quadrature::SegmentQuadrature;
use crate::simulate::girsanov_log_weight;

/// `∫_0^{T∧τ} (λ₋ − λ₊)(s, z_s) ds + Σ_{t_i ≤ T∧τ} ln(λ₊/λ₋)(t_i, z_{t_i})`.
pub fn xi_with(quad: &SegmentQuadrature, x: &CountingPath, z: &CovariatePath, model: &IntensityModel) -> Result<f64> {
    let window = x.tau();
    let drift = quad.integrate(z, window, |s, zs| {
        model.lambda_minus(s, zs) - model.lambda_plus(s, zs)
    });
    let mut jumps = 0.0;
    for &t in x.jump_times().iter().take_while(|&&t| t <= window) {
        let zt = z.value_at(t);
        let plus = model.lambda_plus(t, zt);
        let minus = model.lambda_minus(t, zt);
        for value in [plus, minus] {
            if !(value > 0.0) {
                return Err(Error::NonPositiveIntensity { t, value });
            }
        }
        jumps += (plus / minus).ln();
    }
    Ok(drift + jumps)
}

pub fn xi(x: &CountingPath, z: &CovariatePath, model: &IntensityModel) -> Result<f64> {
    xi_with(&SegmentQuadrature::for_horizon(model.horizon()), x, z, model)
}

/// `(P(Y = +1 | x, z), P(Y = −1 | x, z))`; the second is `1 −` the first.
pub fn posterior(x: &CountingPath, z: &CovariatePath, model: &IntensityModel) -> Result<(f64, f64)> {
    let plus = eta_from_xi(xi(x, z, model)?, model.p_plus());
    Ok((plus, 1.0 - plus))
}

/// The Bayes decision statistic `f* = ξ − ln(p₋/p₊)`.
pub fn bayes_score_from_xi(xi: f64, model: &IntensityModel) -> f64 {
    xi - (model.p_minus() / model.p_plus()).ln()
}

pub fn bayes_classify(x: &CountingPath, z: &CovariatePath, model: &IntensityModel) -> Result<Label> {
    Ok(Label::from_score(bayes_score_from_xi(xi(x, z, model)?, model)))
}

/// Posterior computed from the two likelihood ratios against the unit-rate
/// law, `p₊w₊ / (p₊w₊ + p₋w₋)` with `w± = exp(−W±)`.
pub fn likelihood_ratio_posterior(
    quad: &SegmentQuadrature,
    x: &CountingPath,
    z: &CovariatePath,
    model: &IntensityModel,
) -> Result<f64> {
    let log_plus = model.p_plus().ln() - girsanov_log_weight(model.rate(Label::Plus).as_ref(), x, z, quad)?;
    let log_minus = model.p_minus().ln() - girsanov_log_weight(model.rate(Label::Minus).as_ref(), x, z, quad)?;
    let top = log_plus.max(log_minus);
    let wp = (log_plus - top).exp();
    let wm = (log_minus - top).exp();
    Ok(wp / (wp + wm))
}

/// A Monte-Carlo probability estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_eval: usize,
}

impl RiskEstimate {
    pub fn new(value: f64, n_eval: usize) -> Self {
        let value = value.clamp(0.0, 1.0);
        Self {
            value,
            std_error: (value * (1.0 - value) / n_eval as f64).sqrt(),
            n_eval,
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
    }
}

/// Per-sample `ξ` for an evaluation set, so several classifiers can be
/// scored against the same oracle.
#[derive(Debug, Clone)]
pub struct OracleTable {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub labels: Vec<Label>,
    p_plus: f64,
    p_minus: f64,
}

impl OracleTable {
    pub fn build(model: &IntensityModel, samples: &[LabeledSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let quad = SegmentQuadrature::for_horizon(model.horizon());
        let xi = samples
            .par_iter()
            .map(|s| xi_with(&quad, &s.x, &s.z, model))
            .collect::<Result<Vec<_>>>()?;
        let eta = xi.iter().map(|&v| eta_from_xi(v, model.p_plus())).collect();
        Ok(Self {
            xi,
            eta,
            labels: samples.iter().map(|s| s.y).collect(),
            p_plus: model.p_plus(),
            p_minus: model.p_minus(),
        })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn bayes_scores(&self) -> Vec<f64> {
        let shift = (self.p_minus / self.p_plus).ln();
        self.xi.iter().map(|&v| v - shift).collect()
    }

    pub fn bayes_labels(&self) -> Vec<Label> {
        self.bayes_scores().into_iter().map(Label::from_score).collect()
    }

    /// `E min(η, 1 − η)`.
    pub fn bayes_risk(&self) -> RiskEstimate {
        let total: f64 = self.eta.iter().map(|&e| e.min(1.0 - e)).sum();
        RiskEstimate::new(total / self.len() as f64, self.len())
    }

    /// Misclassification frequency of `predictions` against the drawn labels.
    pub fn risk(&self, predictions: &[Label]) -> Result<RiskEstimate> {
        misclassification(predictions, &self.labels)
    }

    /// `E[1{g = +1}(1 − η) + 1{g = −1} η]`, the risk of `g` with the label
    /// noise integrated out.
    pub fn conditional_risk(&self, predictions: &[Label]) -> Result<f64> {
        self.check_len(predictions.len())?;
        let total: f64 = predictions
            .iter()
            .zip(&self.eta)
            .map(|(g, &e)| match g {
                Label::Plus => 1.0 - e,
                Label::Minus => e,
            })
            .sum();
        Ok(total / self.len() as f64)
    }

    /// `E[|2η − 1| 1{g ≠ g*}]`, the excess risk over the Bayes rule.
    pub fn excess_risk(&self, predictions: &[Label]) -> Result<MeanEstimate> {
        self.check_len(predictions.len())?;
        let terms: Vec<f64> = predictions
            .iter()
            .zip(self.bayes_labels())
            .zip(&self.eta)
            .map(|((&g, best), &e)| if g == best { 0.0 } else { (2.0 * e - 1.0).abs() })
            .collect();
        Ok(mean_estimate(&terms))
    }

    /// Monte-Carlo `A(f*)`.
    pub fn phi_risk_star(&self) -> Result<f64> {
        risk_of_scores(&self.bayes_scores(), &self.labels)
    }

    /// `Σ ln P(Y_i = y_i | x_i, z_i)`.
    pub fn log_likelihood(&self) -> f64 {
        self.eta
            .iter()
            .zip(&self.labels)
            .map(|(&e, y)| match y {
                Label::Plus => e.ln(),
                Label::Minus => (1.0 - e).ln(),
            })
            .sum()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{len} predictions for {} evaluation samples",
                self.len()
            )));
        }
        Ok(())
    }
}

pub fn misclassification(predictions: &[Label], labels: &[Label]) -> Result<RiskEstimate> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let wrong = predictions.iter().zip(labels).filter(|(g, y)| g != y).count();
    Ok(RiskEstimate::new(wrong as f64 / labels.len() as f64, labels.len()))
}

/// Misclassification frequency of an arbitrary classifier on `eval`.
pub fn mc_risk<F>(classifier: F, eval: &[LabeledSample]) -> Result<RiskEstimate>
where
    F: Fn(&LabeledSample) -> Result<Label> + Sync,
{
    let predictions = eval.par_iter().map(&classifier).collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = eval.iter().map(|s| s.y).collect();
    misclassification(&predictions, &labels)
}

pub fn mc_bayes_risk(model: &IntensityModel, eval: &[LabeledSample]) -> Result<RiskEstimate> {
    Ok(OracleTable::build(model, eval)?.bayes_risk())
}

/// Monte-Carlo `A(f) = E φ(−Y f)` from per-sample scores.
pub fn mc_phi_risk(scores: &[f64], labels: &[Label]) -> Result<MeanEstimate> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let losses: Vec<f64> = scores
        .iter()
        .zip(labels)
        .map(|(&f, y)| logit_loss(-y.sign() * f))
        .collect();
    Ok(mean_estimate(&losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scenario;
    use crate::simulate::{simulate_dataset, CovariateKind, SimConfig};
    use std::f64::consts::LN_2;

    fn path(jumps: &[f64]) -> (CountingPath, CovariatePath) {
        (
            CountingPath::new(1.0, jumps.to_vec(), 100).unwrap(),
            CovariatePath::constant(1.0, vec![0.5]).unwrap(),
        )
    }

    #[test]
    fn xi_constant_rates_closed_form() {
        let model = scenario("constant-rates", 1.0, 0.5).unwrap();
        for m in 0..5 {
            let jumps: Vec<f64> = (0..m).map(|i| 0.1 + 0.15 * i as f64).collect();
            let (x, z) = path(&jumps);
            let want = -1.0 + m as f64 * LN_2;
            assert!((xi(&x, &z, &model).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_vanishes_for_equal_rates() {
        let model = scenario("symmetric-1d", 1.0, 0.5).unwrap();
        let (x, z) = path(&[0.2, 0.5, 0.9]);
        assert_eq!(xi(&x, &z, &model).unwrap(), 0.0);
        assert_eq!(posterior(&x, &z, &model).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn xi_without_jumps_is_the_drift() {
        // λ₋ − λ₊ = 2 − 4z = 0 at z = 1/2, so use z = 1/4: 1 per unit time
        let model = scenario("affine-1d", 2.0, 0.5).unwrap();
        let x = CountingPath::new(2.0, vec![], 3).unwrap();
        let z = CovariatePath::constant(2.0, vec![0.25]).unwrap();
        assert!((xi(&x, &z, &model).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_limit_and_boundary() {
        assert!(eta_from_xi(40.0, 0.5) > 1.0 - 1e-8);
        let model = scenario("symmetric-1d", 1.0, 0.7).unwrap();
        let (x, z) = path(&[0.3]);
        assert_eq!(bayes_classify(&x, &z, &model).unwrap(), Label::Plus);
        let even = scenario("symmetric-1d", 1.0, 0.5).unwrap();
        // ξ = 0 = ln(p₋/p₊): boundary goes to −1
        assert_eq!(bayes_classify(&x, &z, &even).unwrap(), Label::Minus);
    }

    #[test]
    fn likelihood_ratio_posterior_matches() {
        let model = scenario("affine-1d", 1.0, 0.3).unwrap();
        let quad = SegmentQuadrature::for_horizon(1.0);
        let cfg = SimConfig {
            seed: 11,
            n: 200,
            horizon: 1.0,
            cap: 5,
            grid_steps: 20,
            covariate_kind: CovariateKind::DEFAULT_OU,
        };
        for s in simulate_dataset(&cfg, &model).unwrap() {
            let (plus, minus) = posterior(&s.x, &s.z, &model).unwrap();
            assert_eq!(plus + minus, 1.0);
            let brute = likelihood_ratio_posterior(&quad, &s.x, &s.z, &model).unwrap();
            assert!((plus - brute).abs() < 1e-10);
        }
    }

    #[test]
    fn risk_helpers() {
        let labels = [Label::Plus, Label::Minus, Label::Minus, Label::Plus];
        let r = misclassification(&[Label::Plus; 4], &labels).unwrap();
        assert_eq!(r.value, 0.5);
        assert!((r.std_error - 0.25).abs() < 1e-15);
        assert!(misclassification(&[], &[]).is_err());
        let zero = mc_phi_risk(&[0.0; 4], &labels).unwrap();
        assert_eq!(zero.value, 1.0);
        assert_eq!(zero.std_error, 0.0);
    }
}
