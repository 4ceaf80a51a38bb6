use super::nearest::NearestPoint;
use crate::error::{Error, Result};
use crate::types::{code, PointSet, TriLabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoronoiConfig {
    /// Pixels within this Euclidean distance of a point are labelled nucleus.
    pub point_radius: usize,
    /// Ridge thickness in pixels; 0 disables the ridge.
    pub edge_width: usize,
}

impl Default for VoronoiConfig {
    fn default() -> Self {
        VoronoiConfig {
            point_radius: 2,
            edge_width: 2,
        }
    }
}

/// Nearest-point cell id of every pixel, row-major.
pub fn voronoi_cells(points: &PointSet, width: usize, height: usize) -> Result<Vec<u32>> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    points.validate_within(width, height)?;
    let index = NearestPoint::new(&points.points, width, height);
    let mut cells = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            cells.push(index.query(x, y).0 as u32);
        }
    }
    Ok(cells)
}

/// Pixels with a differently-assigned pixel within L1 distance
/// `max(1, edge_width / 2)`. Both sides of a boundary are marked, so an
/// even `edge_width` gives a ridge exactly that many pixels thick.
pub fn ridge_mask(cells: &[u32], width: usize, height: usize, edge_width: usize) -> Vec<bool> {
    let mut ridge = vec![false; width * height];
    if edge_width == 0 {
        return ridge;
    }
    let reach = (edge_width / 2).max(1) as isize;
    let mut offsets = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if (dx != 0 || dy != 0) && dx.abs() + dy.abs() <= reach {
                offsets.push((dx, dy));
            }
        }
    }
    for y in 0..height {
        for x in 0..width {
            let own = cells[y * width + x];
            ridge[y * width + x] = offsets.iter().any(|&(dx, dy)| {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                nx >= 0
                    && ny >= 0
                    && (nx as usize) < width
                    && (ny as usize) < height
                    && cells[ny as usize * width + nx as usize] != own
            });
        }
    }
    ridge
}

/// Point disks → nucleus, cell ridges → background, everything else ignored.
pub fn voronoi_label(
    points: &PointSet,
    width: usize,
    height: usize,
    cfg: &VoronoiConfig,
) -> Result<TriLabelMap> {
    let cells = voronoi_cells(points, width, height)?;
    let ridge = ridge_mask(&cells, width, height, cfg.edge_width);
    let mut labels: Vec<u8> = ridge
        .iter()
        .map(|&r| if r { code::BACKGROUND } else { code::IGNORED })
        .collect();

    let r = cfg.point_radius as isize;
    for p in points {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                let x = p.x as isize + dx;
                let y = p.y as isize + dy;
                if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                    labels[y as usize * width + x as usize] = code::NUCLEUS;
                }
            }
        }
    }
    Ok(TriLabelMap {
        width,
        height,
        labels,
    })
}
