use super::nearest::NearestPoint;
use crate::error::{Error, Result};
use crate::types::PointSet;

/// Distance to the nearest annotated point, clipped at `d_max` and divided by it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub d_max: f64,
}

pub fn distance_map(points: &PointSet, width: usize, height: usize, d_max: f64) -> Result<DistanceMap> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(Error::OutOfRange(format!("d_max must be positive, got {d_max}")));
    }
    points.validate_within(width, height)?;
    let index = NearestPoint::new(&points.points, width, height);
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let d = (index.query(x, y).1 as f64).sqrt();
            values.push(d.min(d_max) / d_max);
        }
    }
    Ok(DistanceMap {
        width,
        height,
        values,
        d_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Point;

    #[test]
    fn zero_at_points_and_clipped_far_away() {
        let points = PointSet::new(vec![Point::new(0, 0)]).unwrap();
        let map = distance_map(&points, 31, 31, 20.0).unwrap();
        assert_eq!(map.values[0], 0.0);
        assert_eq!(map.values[30 * 31 + 30], 1.0);
        assert!((map.values[3] - 3.0 / 20.0).abs() < 1e-15);
        assert!((map.values[4 * 31 + 3] - 5.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn empty_points_error() {
        assert!(matches!(distance_map(&PointSet::default(), 3, 3, 20.0), Err(Error::EmptyPoints)));
    }
}
