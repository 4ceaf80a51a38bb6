//! Pseudo-label engine and reference loss functions.
//!
//! The loss functions here are the value-level references that a training
//! harness re-implements differentiably; they are not used for optimization.

use crate::error::{check_dims, Error, Result};
use crate::types::{code, ProbMap, RgbImage, TriLabelMap, Validate, Violation};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` inside every logarithm.
pub const PROB_EPS: f64 = 1e-7;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Running exponential average of one image's peer predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaState {
    /// `None` until the first prediction arrives.
    pub average: Option<ProbMap>,
    /// Number of updates folded in so far.
    pub step: u64,
    /// Weight of the newest prediction, in `(0, 1]`.
    pub decay: f64,
    /// Epochs between updates. The caller owns the epoch loop and consults this.
    pub period: u32,
}

impl EmaState {
    pub fn new(decay: f64, period: u32) -> Result<Self> {
        let state = EmaState {
            average: None,
            step: 0,
            decay,
            period,
        };
        state.validate()?;
        Ok(state)
    }

    /// Continues from an existing average, e.g. one loaded from disk.
    pub fn resume(average: ProbMap, step: u64, decay: f64, period: u32) -> Result<Self> {
        let state = EmaState {
            average: Some(average),
            step,
            decay,
            period,
        };
        state.validate()?;
        Ok(state)
    }

    /// Whether an update is due at the end of `epoch` (1-based).
    pub fn due(&self, epoch: u32) -> bool {
        self.period > 0 && epoch > 0 && epoch.is_multiple_of(self.period)
    }
}

impl Validate for EmaState {
    fn validate(&self) -> Result<(), Violation> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Violation(format!("ema decay {} outside (0, 1]", self.decay)));
        }
        if self.period == 0 {
            return Err(Violation("ema period must be at least one epoch".into()));
        }
        match &self.average {
            Some(avg) => avg.validate(),
            None => Ok(()),
        }
    }
}

/// `p ← λ·pred + (1−λ)·p`; the first prediction initializes `p`.
pub fn ema_update(state: &EmaState, pred: &ProbMap) -> Result<EmaState> {
    state.validate()?;
    pred.validate()?;
    let average = match &state.average {
        None => pred.clone(),
        Some(prev) => {
            check_dims(prev.dims(), pred.dims())?;
            let lambda = state.decay;
            let values = prev
                .values
                .iter()
                .zip(&pred.values)
                .map(|(&p, &y)| (lambda * y + (1.0 - lambda) * p).clamp(0.0, 1.0))
                .collect();
            ProbMap {
                width: prev.width,
                height: prev.height,
                values,
            }
        }
    };
    Ok(EmaState {
        average: Some(average),
        step: state.step + 1,
        ..state.clone()
    })
}

/// Hard cluster labels where the cluster map is confident, the averaged
/// prediction on ignored pixels.
pub fn merge_pseudo(ema: &ProbMap, cluster: &TriLabelMap) -> Result<ProbMap> {
    check_dims(ema.dims(), cluster.dims())?;
    cluster.validate()?;
    let values = ema
        .values
        .iter()
        .zip(&cluster.labels)
        .map(|(&p, &c)| match c {
            code::IGNORED => p,
            _ => f64::from(c),
        })
        .collect();
    Ok(ProbMap {
        width: ema.width,
        height: ema.height,
        values,
    })
}

/// Binary cross-entropy averaged over pixels whose label is not ignored.
pub fn partial_ce_loss(pred: &ProbMap, labels: &TriLabelMap) -> Result<f64> {
    check_dims(labels.dims(), pred.dims())?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&y, &t) in pred.values.iter().zip(&labels.labels) {
        let y = clamp_prob(y);
        match t {
            code::NUCLEUS => sum -= y.ln(),
            code::BACKGROUND => sum -= (1.0 - y).ln(),
            _ => continue,
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptySupport);
    }
    Ok(sum / count as f64)
}

/// Which divergence [`kl_cot_loss`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KlMode {
    /// Bernoulli KL over both classes.
    #[default]
    Binary,
    /// Positive-class term only, `p·ln(p/ŷ)`.
    PositiveOnly,
}

fn xlogy_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// Mean per-pixel KL divergence from the pseudo label to the prediction,
/// over all pixels.
pub fn kl_cot_loss(pseudo: &ProbMap, pred: &ProbMap, mode: KlMode) -> Result<f64> {
    check_dims(pseudo.dims(), pred.dims())?;
    let n = pseudo.values.len();
    let sum: f64 = pseudo
        .values
        .iter()
        .zip(&pred.values)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            let y = clamp_prob(y);
            match mode {
                KlMode::Binary => xlogy_ratio(p, y) + xlogy_ratio(1.0 - p, 1.0 - y),
                KlMode::PositiveOnly => xlogy_ratio(p, y),
            }
        })
        .sum();
    Ok(sum / n as f64)
}

/// Mean over pixels of the squared L2 color distance.
pub fn colorization_loss(pred: &RgbImage, target: &RgbImage) -> Result<f64> {
    check_dims(target.dims(), pred.dims())?;
    let sum: f64 = pred
        .samples
        .iter()
        .zip(&target.samples)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / pred.pixel_count() as f64)
}

/// Cumulative-learning weights for the co-training and colorization terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    /// Final co-training weight.
    pub eta: f64,
    /// Initial colorization weight.
    pub epsilon: f64,
    pub max_epochs: u32,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            eta: 1.0,
            epsilon: 0.1,
            max_epochs: 100,
        }
    }
}

impl Validate for ScheduleConfig {
    fn validate(&self) -> Result<(), Violation> {
        if self.max_epochs == 0 {
            return Err(Violation("max_epochs must be at least 1".into()));
        }
        if !(self.eta >= 0.0 && self.epsilon >= 0.0) {
            return Err(Violation("eta and epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

fn progress(epoch: f64, cfg: &ScheduleConfig) -> Result<f64> {
    cfg.validate()?;
    let max = f64::from(cfg.max_epochs);
    if !(0.0..=max).contains(&epoch) {
        return Err(Error::OutOfRange(format!("epoch {epoch} outside [0, {max}]")));
    }
    Ok(epoch / max)
}

/// `η (n / n_max)²`. Fractional epochs are accepted.
pub fn schedule_alpha(epoch: f64, cfg: &ScheduleConfig) -> Result<f64> {
    let t = progress(epoch, cfg)?;
    Ok(cfg.eta * t * t)
}

/// `ε (1 − n / n_max)²`.
pub fn schedule_beta(epoch: f64, cfg: &ScheduleConfig) -> Result<f64> {
    let t = progress(epoch, cfg)?;
    Ok(cfg.epsilon * (1.0 - t) * (1.0 - t))
}

/// Loss terms of one segmentation + colorization learner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LearnerLosses {
    pub voronoi: f64,
    pub cluster: f64,
    pub cotrain: f64,
    pub color: f64,
}

impl LearnerLosses {
    pub fn weighted(&self, alpha: f64, beta: f64) -> f64 {
        self.voronoi + self.cluster + alpha * self.cotrain + beta * self.color
    }
}

/// Sum of both learners' weighted losses.
pub fn total_loss(first: &LearnerLosses, second: &LearnerLosses, alpha: f64, beta: f64) -> f64 {
    first.weighted(alpha, beta) + second.weighted(alpha, beta)
}
