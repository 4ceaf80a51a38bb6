use crate::error::{check_dims, Result};

fn confusion(pred: &[bool], gt: &[bool]) -> Result<[usize; 4]> {
    check_dims((gt.len(), 1), (pred.len(), 1))?;
    let mut m = [0usize; 4];
    for (&p, &g) in pred.iter().zip(gt) {
        m[(usize::from(p) << 1) | usize::from(g)] += 1;
    }
    // [TN, FN, FP, TP]
    Ok(m)
}

/// `(TP + TN) / total`.
pub fn pixel_accuracy(pred: &[bool], gt: &[bool]) -> Result<f64> {
    let [tn, fn_, fp, tp] = confusion(pred, gt)?;
    let total = tn + fn_ + fp + tp;
    Ok((tp + tn) as f64 / total.max(1) as f64)
}

/// `2TP / (2TP + FP + FN)`, nuclei positive; two empty masks score 1.
pub fn f1(pred: &[bool], gt: &[bool]) -> Result<f64> {
    let [_, fn_, fp, tp] = confusion(pred, gt)?;
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}
