//! Pixel- and object-level evaluation, and the point-perturbation study.

mod instance;
mod object;
mod perturb;
mod pixel;

pub use instance::{binarize, instances};
pub use object::{aji, dice_obj};
pub use perturb::{draw_offset, in_nucleus_ratio, perturb_points, trilabel_accuracy};
pub use pixel::{f1, pixel_accuracy};

use crate::error::Result;
use crate::types::{InstanceMap, ProbMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    pub f1: f64,
    pub dice_obj: f64,
    pub aji: f64,
}

impl MetricReport {
    /// Element-wise mean over images; `None` for an empty slice.
    pub fn mean(reports: &[MetricReport]) -> Option<MetricReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let sum = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(MetricReport {
            accuracy: sum(|r| r.accuracy),
            f1: sum(|r| r.f1),
            dice_obj: sum(|r| r.dice_obj),
            aji: sum(|r| r.aji),
        })
    }
}

impl std::fmt::Display for MetricReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "acc={:.4} f1={:.4} dice_obj={:.4} aji={:.4}",
            self.accuracy, self.f1, self.dice_obj, self.aji
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub threshold: f64,
    pub min_area: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.5,
            min_area: 20,
        }
    }
}

/// Thresholds `pred`, extracts instances and scores them against `gt`.
pub fn evaluate(pred: &ProbMap, gt: &InstanceMap, cfg: &EvalConfig) -> Result<MetricReport> {
    let mask = binarize(pred, cfg.threshold);
    let pred_inst = instances(&mask, pred.width, pred.height, cfg.min_area);
    let gt_mask = gt.mask();
    Ok(MetricReport {
        accuracy: pixel_accuracy(&mask, &gt_mask)?,
        f1: f1(&mask, &gt_mask)?,
        dice_obj: dice_obj(gt, &pred_inst)?,
        aji: aji(gt, &pred_inst)?,
    })
}
