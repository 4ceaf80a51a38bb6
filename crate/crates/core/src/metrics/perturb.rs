use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Error, Result};
use crate::types::{code, InstanceMap, Point, PointSet, TriLabelMap};

const MAX_REDRAWS: usize = 16;

/// Uniform integer offset in `[-max_shift, max_shift]²`.
pub fn draw_offset<R: Rng>(rng: &mut R, max_shift: usize) -> (i64, i64) {
    let s = max_shift as i64;
    (rng.random_range(-s..=s), rng.random_range(-s..=s))
}

fn clamp_to(p: Point, d: (i64, i64), width: usize, height: usize) -> Point {
    let x = (p.x as i64 + d.0).clamp(0, width as i64 - 1) as usize;
    let y = (p.y as i64 + d.1).clamp(0, height as i64 - 1) as usize;
    Point::new(x, y)
}

/// Closest free pixel to `p` by Chebyshev ring, raster order within a ring.
fn nudge(p: Point, taken: &HashSet<Point>, width: usize, height: usize) -> Option<Point> {
    let max_ring = width.max(height) as i64;
    for r in 0..=max_ring {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r {
                    continue;
                }
                let (x, y) = (p.x as i64 + dx, p.y as i64 + dy);
                if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
                    continue;
                }
                let q = Point::new(x as usize, y as usize);
                if !taken.contains(&q) {
                    return Some(q);
                }
            }
        }
    }
    None
}

/// Shifts every point by an independent uniform offset, clamped to the image.
/// A point that lands on an already-placed point is redrawn up to 16 times,
/// then moved to the nearest free pixel.
pub fn perturb_points(
    points: &PointSet,
    max_shift: usize,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<PointSet> {
    points.validate_within(width, height)?;
    if points.len() > width * height {
        return Err(Error::OutOfRange("more points than pixels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = HashSet::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for &p in points {
        let mut candidate = clamp_to(p, draw_offset(&mut rng, max_shift), width, height);
        let mut redraws = 0;
        while taken.contains(&candidate) && redraws < MAX_REDRAWS {
            candidate = clamp_to(p, draw_offset(&mut rng, max_shift), width, height);
            redraws += 1;
        }
        if taken.contains(&candidate) {
            candidate = nudge(candidate, &taken, width, height).expect("a free pixel exists");
        }
        taken.insert(candidate);
        out.push(candidate);
    }
    Ok(PointSet { points: out })
}

/// Fraction of points that fall inside a ground-truth instance.
pub fn in_nucleus_ratio(points: &PointSet, gt: &InstanceMap) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    points.validate_within(gt.width, gt.height)?;
    let inside = points
        .iter()
        .filter(|p| gt.ids[p.y * gt.width + p.x] > 0)
        .count();
    Ok(inside as f64 / points.len() as f64)
}

/// Agreement between a tri-state label and the ground-truth mask over the
/// pixels the label does not ignore.
pub fn trilabel_accuracy(label: &TriLabelMap, gt_mask: &[bool]) -> Result<f64> {
    check_dims((label.labels.len(), 1), (gt_mask.len(), 1))?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (&c, &g) in label.labels.iter().zip(gt_mask) {
        if c == code::IGNORED {
            continue;
        }
        total += 1;
        if (c == code::NUCLEUS) == g {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptySupport);
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_points() -> PointSet {
        let pts = (0..5)
            .flat_map(|y| (0..5).map(move |x| Point::new(4 + 6 * x, 4 + 6 * y)))
            .collect();
        PointSet::new(pts).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let pts = grid_points();
        assert_eq!(perturb_points(&pts, 0, 17, 40, 40).unwrap(), pts);
    }

    #[test]
    fn seeded() {
        let pts = grid_points();
        let a = perturb_points(&pts, 4, 3, 40, 40).unwrap();
        assert_eq!(a, perturb_points(&pts, 4, 3, 40, 40).unwrap());
        assert_ne!(a, perturb_points(&pts, 4, 4, 40, 40).unwrap());
    }

    #[test]
    fn shifts_stay_in_range_and_points_stay_distinct() {
        let pts = grid_points();
        let moved = perturb_points(&pts, 3, 8, 40, 40).unwrap();
        for (a, b) in pts.iter().zip(&moved) {
            assert!((a.x as i64 - b.x as i64).abs() <= 3);
            assert!((a.y as i64 - b.y as i64).abs() <= 3);
        }
        assert!(moved.validate_within(40, 40).is_ok());
    }

    #[test]
    fn crowded_image_still_yields_distinct_points() {
        let pts: Vec<Point> = (0..3).flat_map(|y| (0..3).map(move |x| Point::new(x, y))).collect();
        let pts = PointSet::new(pts).unwrap();
        let moved = perturb_points(&pts, 5, 1, 3, 3).unwrap();
        assert!(moved.validate_within(3, 3).is_ok());
        assert_eq!(moved.len(), 9);
    }

    #[test]
    fn ratio_extremes() {
        let mut gt = InstanceMap::empty(6, 6);
        gt.ids[2 * 6 + 2] = 1;
        let inside = PointSet::new(vec![Point::new(2, 2)]).unwrap();
        let outside = PointSet::new(vec![Point::new(0, 0), Point::new(5, 5)]).unwrap();
        assert_eq!(in_nucleus_ratio(&inside, &gt).unwrap(), 1.0);
        assert_eq!(in_nucleus_ratio(&outside, &gt).unwrap(), 0.0);
    }

    #[test]
    fn trilabel_accuracy_skips_ignored() {
        let label = TriLabelMap::new(4, 1, vec![1, 0, 2, 1]).unwrap();
        let gt = [true, true, false, false];
        assert_eq!(trilabel_accuracy(&label, &gt).unwrap(), 1.0 / 3.0);
    }
}
