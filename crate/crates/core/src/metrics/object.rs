use std::collections::HashMap;

use crate::error::{check_dims, Result};
use crate::types::InstanceMap;

/// Areas and pairwise overlaps of two instance maps.
struct Overlaps {
    gt_area: Vec<usize>,
    pred_area: Vec<usize>,
    /// `by_gt[i]`: (pred id, overlap) for gt instance `i + 1`, ascending pred id.
    by_gt: Vec<Vec<(usize, usize)>>,
    by_pred: Vec<Vec<(usize, usize)>>,
}

impl Overlaps {
    fn new(gt: &InstanceMap, pred: &InstanceMap) -> Result<Self> {
        check_dims(gt.dims(), pred.dims())?;
        let kg = gt.instance_count();
        let kp = pred.instance_count();
        let mut gt_area = vec![0; kg];
        let mut pred_area = vec![0; kp];
        let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
        for (&g, &p) in gt.ids.iter().zip(&pred.ids) {
            let (g, p) = (g as usize, p as usize);
            if g > 0 {
                gt_area[g - 1] += 1;
            }
            if p > 0 {
                pred_area[p - 1] += 1;
            }
            if g > 0 && p > 0 {
                *pairs.entry((g, p)).or_default() += 1;
            }
        }
        let mut by_gt = vec![Vec::new(); kg];
        let mut by_pred = vec![Vec::new(); kp];
        for (&(g, p), &n) in &pairs {
            by_gt[g - 1].push((p, n));
            by_pred[p - 1].push((g, n));
        }
        by_gt.iter_mut().for_each(|v| v.sort_unstable());
        by_pred.iter_mut().for_each(|v| v.sort_unstable());
        Ok(Overlaps {
            gt_area,
            pred_area,
            by_gt,
            by_pred,
        })
    }
}

/// Size-weighted Dice of each object against its maximum-overlap partner,
/// one side at a time. Among equally overlapping partners the smaller one
/// (higher Dice) is taken, so the score does not depend on instance ids.
fn one_sided_dice(own_area: &[usize], other_area: &[usize], partners: &[Vec<(usize, usize)>]) -> f64 {
    let total: usize = own_area.iter().sum();
    let mut acc = 0.0;
    for (i, cands) in partners.iter().enumerate() {
        let best = cands.iter().max_by(|&&(pa, na), &&(pb, nb)| {
            na.cmp(&nb).then(other_area[pb - 1].cmp(&other_area[pa - 1]))
        });
        if let Some(&(id, n)) = best {
            let dice = 2.0 * n as f64 / (own_area[i] + other_area[id - 1]) as f64;
            acc += own_area[i] as f64 * dice;
        }
    }
    acc / total as f64
}

/// Object-level Dice averaged over the ground-truth-side and prediction-side
/// matchings. Two empty maps score 1; exactly one empty map scores 0.
pub fn dice_obj(gt: &InstanceMap, pred: &InstanceMap) -> Result<f64> {
    let ov = Overlaps::new(gt, pred)?;
    match (ov.gt_area.iter().any(|&a| a > 0), ov.pred_area.iter().any(|&a| a > 0)) {
        (false, false) => return Ok(1.0),
        (false, true) | (true, false) => return Ok(0.0),
        _ => {}
    }
    let g = one_sided_dice(&ov.gt_area, &ov.pred_area, &ov.by_gt);
    let p = one_sided_dice(&ov.pred_area, &ov.gt_area, &ov.by_pred);
    Ok(0.5 * (g + p))
}

/// Aggregated Jaccard index with greedy one-to-one matching in gt id order.
/// Unmatched prediction pixels are added to the denominator.
pub fn aji(gt: &InstanceMap, pred: &InstanceMap) -> Result<f64> {
    let ov = Overlaps::new(gt, pred)?;
    let mut used = vec![false; ov.pred_area.len()];
    let mut inter_sum = 0usize;
    let mut union_sum = 0usize;
    for (i, cands) in ov.by_gt.iter().enumerate() {
        let g_area = ov.gt_area[i];
        if g_area == 0 {
            continue;
        }
        let mut best: Option<(usize, usize, usize)> = None; // (pred id, inter, union)
        for &(p, n) in cands {
            if used[p - 1] {
                continue;
            }
            let union = g_area + ov.pred_area[p - 1] - n;
            let better = match best {
                None => true,
                // n/union > bn/bu, compared exactly
                Some((_, bn, bu)) => n * bu > bn * union,
            };
            if better {
                best = Some((p, n, union));
            }
        }
        match best {
            Some((p, n, union)) => {
                used[p - 1] = true;
                inter_sum += n;
                union_sum += union;
            }
            None => union_sum += g_area,
        }
    }
    for (j, &area) in ov.pred_area.iter().enumerate() {
        if !used[j] {
            union_sum += area;
        }
    }
    if union_sum == 0 {
        return Ok(1.0);
    }
    Ok(inter_sum as f64 / union_sum as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, ids: Vec<u32>) -> InstanceMap {
        InstanceMap {
            width: w,
            height: ids.len() / w,
            ids,
        }
    }

    fn squares(w: usize, h: usize, squares: &[(usize, usize, u32)]) -> InstanceMap {
        let mut ids = vec![0; w * h];
        for &(x0, y0, id) in squares {
            for y in y0..y0 + 2 {
                for x in x0..x0 + 2 {
                    ids[y * w + x] = id;
                }
            }
        }
        map(w, ids)
    }

    #[test]
    fn identical_maps_score_one() {
        let m = squares(8, 8, &[(0, 0, 1), (4, 4, 2)]);
        assert_eq!(aji(&m, &m).unwrap(), 1.0);
        assert_eq!(dice_obj(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn empty_prediction() {
        let gt = squares(6, 6, &[(1, 1, 1)]);
        let pred = InstanceMap::empty(6, 6);
        assert_eq!(aji(&gt, &pred).unwrap(), 0.0);
        assert_eq!(dice_obj(&gt, &pred).unwrap(), 0.0);
        assert_eq!(aji(&pred, &pred).unwrap(), 1.0);
        assert_eq!(dice_obj(&pred, &pred).unwrap(), 1.0);
    }

    #[test]
    fn shifted_square_has_no_overlap() {
        let gt = squares(8, 8, &[(0, 0, 1)]);
        let pred = squares(8, 8, &[(4, 4, 1)]);
        assert_eq!(dice_obj(&gt, &pred).unwrap(), 0.0);
        assert_eq!(aji(&gt, &pred).unwrap(), 0.0);
    }

    #[test]
    fn one_of_two_matched() {
        let gt = squares(8, 8, &[(0, 0, 1), (4, 4, 2)]);
        let pred = squares(8, 8, &[(0, 0, 1)]);
        // C = 4, U = 4 + 4
        assert_eq!(aji(&gt, &pred).unwrap(), 0.5);
        // gt side: 0.5 * 1 + 0.5 * 0; pred side: 1
        assert_eq!(dice_obj(&gt, &pred).unwrap(), 0.75);
    }

    #[test]
    fn used_predictions_are_not_reused() {
        // one large prediction covering two gt objects
        let gt = map(4, vec![1, 1, 2, 2]);
        let pred = map(4, vec![1, 1, 1, 1]);
        // gt 1 takes pred 1 (C=2, U=4); gt 2 finds nothing (U += 2)
        assert!((aji(&gt, &pred).unwrap() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(aji(&InstanceMap::empty(2, 2), &InstanceMap::empty(2, 3)).is_err());
    }
}
