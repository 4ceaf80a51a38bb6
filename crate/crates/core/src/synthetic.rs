//! Synthetic H&E-like tiles with known ground truth.
//!
//! Nuclei are non-overlapping ellipses. Hematoxylin density is high inside
//! them and faint outside; eosin density is a smooth texture over the stroma.
//! The color image follows the Beer–Lambert model with a fixed stain matrix,
//! so every generated tile comes with its exact densities, instance map and
//! one centroid annotation per nucleus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::{InstanceMap, Point, PointSet, RgbImage};

/// Typical hematoxylin and eosin OD directions (unit norm).
pub const HEMATOXYLIN_OD: [f64; 3] = [0.6455608922897785, 0.71508283453637, 0.2681560629511388];
pub const EOSIN_OD: [f64; 3] = [0.09049912154828423, 0.955268505231889, 0.2815528225946621];

#[derive(Debug, Clone)]
pub struct TileConfig {
    pub width: usize,
    pub height: usize,
    pub nuclei: usize,
    /// Semi-axis range in pixels.
    pub min_radius: f64,
    pub max_radius: f64,
    pub seed: u64,
    /// Stain OD columns (hematoxylin, eosin); need not be unit norm.
    pub stains: [[f64; 3]; 2],
    /// Standard deviation of additive per-pixel density noise.
    pub noise: f64,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            width: 64,
            height: 64,
            nuclei: 8,
            min_radius: 3.0,
            max_radius: 5.5,
            seed: 0,
            stains: [HEMATOXYLIN_OD, EOSIN_OD],
            noise: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTile {
    pub image: RgbImage,
    pub instances: InstanceMap,
    pub points: PointSet,
    pub hematoxylin: Vec<f64>,
    pub eosin: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    theta: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

pub fn generate_tile(cfg: &TileConfig) -> SyntheticTile {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (w, h) = (cfg.width, cfg.height);
    let margin = cfg.max_radius.ceil() + 1.0;

    let mut nuclei: Vec<Ellipse> = Vec::new();
    let mut attempts = 0;
    while nuclei.len() < cfg.nuclei && attempts < 10_000 {
        attempts += 1;
        let e = Ellipse {
            cx: rng.random_range(margin..w as f64 - margin).round(),
            cy: rng.random_range(margin..h as f64 - margin).round(),
            a: rng.random_range(cfg.min_radius..=cfg.max_radius),
            b: rng.random_range(cfg.min_radius..=cfg.max_radius),
            theta: rng.random_range(0.0..std::f64::consts::PI),
        };
        let clear = nuclei.iter().all(|o| {
            let d = ((o.cx - e.cx).powi(2) + (o.cy - e.cy).powi(2)).sqrt();
            d > o.a.max(o.b) + e.a.max(e.b) + 2.0
        });
        if clear {
            nuclei.push(e);
        }
    }

    let mut ids = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            if let Some(k) = nuclei.iter().position(|e| e.contains(x as f64, y as f64)) {
                ids[y * w + x] = k as u32 + 1;
            }
        }
    }

    // low-frequency stroma texture
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.05..0.25),
                rng.random_range(0.05..0.25),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();

    let mut hema = Vec::with_capacity(w * h);
    let mut eos = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let inside = ids[y * w + x] > 0;
            let texture = waves
                .iter()
                .map(|&(fx, fy, ph)| (fx * x as f64 + fy * y as f64 + ph).sin())
                .sum::<f64>()
                / waves.len() as f64;
            let mut noise = || cfg.noise * (rng.random::<f64>() * 2.0 - 1.0);
            let (dh, de) = if inside {
                (1.1 + noise(), 0.03 + noise())
            } else {
                (0.02 + noise(), 0.45 + 0.25 * texture + noise())
            };
            hema.push(dh.max(0.0));
            eos.push(de.max(0.0));
        }
    }

    let samples = hema
        .iter()
        .zip(&eos)
        .flat_map(|(&dh, &de)| {
            [0, 1, 2].map(|c| (-(cfg.stains[0][c] * dh + cfg.stains[1][c] * de)).exp())
        })
        .collect();

    let points = nuclei
        .iter()
        .map(|e| Point::new(e.cx as usize, e.cy as usize))
        .collect();

    SyntheticTile {
        image: RgbImage {
            width: w,
            height: h,
            samples,
            illumination: [1.0; 3],
        },
        instances: InstanceMap {
            width: w,
            height: h,
            ids,
        },
        points: PointSet { points },
        hematoxylin: hema,
        eosin: eos,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Validate;

    #[test]
    fn tiles_are_valid_and_points_sit_in_their_nucleus() {
        for seed in 0..5 {
            let tile = generate_tile(&TileConfig {
                seed,
                ..TileConfig::default()
            });
            tile.image.validate().unwrap();
            tile.instances.validate().unwrap();
            tile.points.validate_within(64, 64).unwrap();
            for (k, p) in tile.points.iter().enumerate() {
                assert_eq!(tile.instances.ids[p.y * 64 + p.x], k as u32 + 1);
            }
        }
    }

    #[test]
    fn reference_stains_are_unit() {
        for col in [HEMATOXYLIN_OD, EOSIN_OD] {
            let n: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }
}
