use crate::coarse::morphology::{label_components, Connectivity};
use crate::types::{InstanceMap, ProbMap};

/// Foreground where `prob >= threshold`.
pub fn binarize(prob: &ProbMap, threshold: f64) -> Vec<bool> {
    prob.values.iter().map(|&v| v >= threshold).collect()
}

/// 8-connected components of at least `min_area` pixels, numbered `1..=K`
/// in raster order.
pub fn instances(mask: &[bool], width: usize, height: usize, min_area: usize) -> InstanceMap {
    let (labels, areas) = label_components(mask, width, height, Connectivity::Eight);
    let mut remap = vec![0u32; areas.len() + 1];
    let mut next = 0;
    for (i, &area) in areas.iter().enumerate() {
        if area >= min_area {
            next += 1;
            remap[i + 1] = next;
        }
    }
    InstanceMap {
        width,
        height,
        ids: labels.iter().map(|&l| remap[l as usize]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Validate;

    #[test]
    fn empty_mask() {
        let inst = instances(&[false; 12], 4, 3, 0);
        assert!(inst.ids.iter().all(|&id| id == 0));
    }

    #[test]
    fn two_squares() {
        let mut prob = ProbMap::filled(8, 4, 0.1);
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1), (5, 2), (6, 2), (5, 3), (6, 3)] {
            prob.values[y * 8 + x] = 0.9;
        }
        let inst = instances(&binarize(&prob, 0.5), 8, 4, 1);
        assert_eq!(inst.instance_count(), 2);
        assert_eq!(inst.ids[0], 1);
        assert_eq!(inst.ids[2 * 8 + 5], 2);
        assert!(inst.validate().is_ok());
    }

    #[test]
    fn threshold_is_inclusive_and_small_parts_drop() {
        let prob = ProbMap::new(5, 1, vec![0.5, 0.5, 0.0, 0.7, 0.49]).unwrap();
        let inst = instances(&binarize(&prob, 0.5), 5, 1, 2);
        assert_eq!(inst.ids, vec![1, 1, 0, 0, 0]);
    }
}
