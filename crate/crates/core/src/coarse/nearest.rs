use crate::types::Point;

/// Exact nearest-point queries over integer pixel coordinates.
///
/// Points are bucketed into square cells; a query scans rings of cells
/// outward until no unvisited cell can hold a closer point. Ties in squared
/// distance go to the lower point index.
#[derive(Debug, Clone)]
pub struct NearestPoint {
    points: Vec<Point>,
    cell: usize,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl NearestPoint {
    /// `width` and `height` bound the query region; points may lie anywhere inside it.
    pub fn new(points: &[Point], width: usize, height: usize) -> Self {
        assert!(!points.is_empty(), "nearest-point index needs at least one point");
        let area = (width * height).max(1) as f64;
        let cell = ((area / points.len() as f64).sqrt().ceil() as usize).max(1);
        let cols = width.max(1).div_ceil(cell);
        let rows = height.max(1).div_ceil(cell);
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, p) in points.iter().enumerate() {
            let cx = (p.x / cell).min(cols - 1);
            let cy = (p.y / cell).min(rows - 1);
            buckets[cy * cols + cx].push(i as u32);
        }
        NearestPoint {
            points: points.to_vec(),
            cell,
            cols,
            rows,
            buckets,
        }
    }

    /// Index of the nearest point and its squared distance.
    pub fn query(&self, x: usize, y: usize) -> (usize, u64) {
        let cx = (x / self.cell).min(self.cols - 1) as isize;
        let cy = (y / self.cell).min(self.rows - 1) as isize;
        let mut best = (u64::MAX, usize::MAX);
        let max_ring = self.cols.max(self.rows) as isize;
        for ring in 0..=max_ring {
            for gy in cy - ring..=cy + ring {
                if gy < 0 || gy >= self.rows as isize {
                    continue;
                }
                let on_edge_row = gy == cy - ring || gy == cy + ring;
                let step = if on_edge_row { 1 } else { (2 * ring).max(1) };
                let mut gx = cx - ring;
                while gx <= cx + ring {
                    if gx >= 0 && gx < self.cols as isize {
                        for &i in &self.buckets[gy as usize * self.cols + gx as usize] {
                            let p = self.points[i as usize];
                            let dx = p.x as i64 - x as i64;
                            let dy = p.y as i64 - y as i64;
                            let d2 = (dx * dx + dy * dy) as u64;
                            if (d2, i as usize) < best {
                                best = (d2, i as usize);
                            }
                        }
                    }
                    gx += step;
                }
            }
            // every unvisited point is farther than ring * cell
            let reach = (ring as u64) * self.cell as u64;
            if best.0 <= reach * reach {
                break;
            }
        }
        (best.1, best.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Point], x: usize, y: usize) -> (usize, u64) {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let dx = p.x as i64 - x as i64;
                let dy = p.y as i64 - y as i64;
                ((dx * dx + dy * dy) as u64, i)
            })
            .min()
            .map(|(d, i)| (i, d))
            .unwrap()
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            w in 1usize..40,
            h in 1usize..40,
            raw in proptest::collection::vec((0usize..1000, 0usize..1000), 1..25),
        ) {
            let points: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x % w, y % h)).collect();
            let index = NearestPoint::new(&points, w, h);
            for y in 0..h {
                for x in 0..w {
                    prop_assert_eq!(index.query(x, y), brute(&points, x, y));
                }
            }
        }
    }
}
