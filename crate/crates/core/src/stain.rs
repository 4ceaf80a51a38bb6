//! Beer–Lambert stain separation.
//!
//! Intensities are mapped to optical density `od = -ln(x / x0)`, where stains
//! add linearly: `od ≈ W · D` with `W` a 3x2 matrix of unit stain color vectors
//! and `D` the per-pixel stain densities. `W` and `D` are estimated by
//! Frobenius-norm non-negative matrix factorization with multiplicative
//! updates, run on tissue pixels only. Single-stain images are recovered by
//! keeping one rank-1 term: `x_h = x0 ⊙ exp(-W[:, h] · D[h, :])`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{GrayImage, RgbImage, StainModel, Validate, Violation};

/// Conventional hematoxylin optical-density direction, used to decide which
/// recovered column is hematoxylin.
pub const REFERENCE_HEMATOXYLIN: [f64; 3] = [0.650, 0.704, 0.286];

/// Floor applied to intensities before the logarithm.
pub const INTENSITY_FLOOR: f64 = 1.0 / 255.0;

const UPDATE_EPS: f64 = 1e-12;
const MIN_COLUMN_NORM: f64 = 1e-6;

/// Per-pixel optical densities, interleaved like [`RgbImage::samples`].
#[derive(Debug, Clone, PartialEq)]
pub struct OdImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl OdImage {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, i: usize) -> [f64; 3] {
        [self.values[3 * i], self.values[3 * i + 1], self.values[3 * i + 2]]
    }
}

impl Validate for OdImage {
    fn validate(&self) -> Result<(), Violation> {
        if self.values.len() != self.width * self.height * 3 {
            return Err(Violation("optical density buffer size mismatch".into()));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Violation("optical density must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Stain densities, `rows[0]` for hematoxylin and `rows[1]` for eosin.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub width: usize,
    pub height: usize,
    pub rows: [Vec<f64>; 2],
}

impl Validate for DensityMap {
    fn validate(&self) -> Result<(), Violation> {
        let n = self.width * self.height;
        for row in &self.rows {
            if row.len() != n {
                return Err(Violation("density row length mismatch".into()));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Violation("densities must be finite and non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stain {
    Hematoxylin,
    Eosin,
}

#[derive(Debug, Clone)]
pub struct StainConfig {
    /// Maximum multiplicative-update iterations.
    pub iters: usize,
    /// Stop once the relative objective change falls below this.
    pub tol: f64,
    pub seed: u64,
    /// OD norm above which a pixel counts as tissue.
    pub tissue_threshold: f64,
    /// Minimum fraction of tissue pixels.
    pub tissue_fraction: f64,
    /// Tissue pixels beyond this count are subsampled (seeded) before factorizing.
    pub max_samples: usize,
    /// Percentile of the in-plane angle distribution used to seed each stain column.
    pub angle_percentile: f64,
    /// Columns closer than this (degrees) are reported as degenerate.
    pub min_separation_deg: f64,
}

impl Default for StainConfig {
    fn default() -> Self {
        StainConfig {
            iters: 300,
            tol: 1e-6,
            seed: 0,
            tissue_threshold: 0.15,
            tissue_fraction: 0.01,
            max_samples: 1 << 16,
            angle_percentile: 1.0,
            min_separation_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StainEstimate {
    pub model: StainModel,
    pub density: DensityMap,
    /// Squared Frobenius residual on the factorized samples after each iteration.
    pub objective: Vec<f64>,
    /// Relative reconstruction error `‖OD − W·D‖ / ‖OD‖` over the whole image.
    pub relative_error: f64,
}

pub fn to_od(image: &RgbImage, illumination: [f64; 3]) -> OdImage {
    let values = image
        .samples
        .chunks_exact(3)
        .flat_map(|px| {
            let mut od = [0.0; 3];
            for c in 0..3 {
                let v = -(px[c].max(INTENSITY_FLOOR) / illumination[c]).ln();
                od[c] = v.max(0.0);
            }
            od
        })
        .collect();
    OdImage {
        width: image.width,
        height: image.height,
        values,
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between two vectors in degrees.
pub fn angle_deg(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = dot(a, b) / (norm(a) * norm(b));
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Non-negative least squares for `v ≈ a·w0 + b·w1`.
fn nnls2(w: &[[f64; 3]; 2], v: &[f64; 3]) -> [f64; 2] {
    let g00 = dot(&w[0], &w[0]);
    let g01 = dot(&w[0], &w[1]);
    let g11 = dot(&w[1], &w[1]);
    let r0 = dot(&w[0], v);
    let r1 = dot(&w[1], v);
    let det = g00 * g11 - g01 * g01;
    if det > 1e-14 {
        let a = (g11 * r0 - g01 * r1) / det;
        let b = (g00 * r1 - g01 * r0) / det;
        if a >= 0.0 && b >= 0.0 {
            return [a, b];
        }
    }
    let resid = |a: f64, b: f64| -2.0 * (a * r0 + b * r1) + a * a * g00 + 2.0 * a * b * g01 + b * b * g11;
    let a_only = (r0 / g00).max(0.0);
    let b_only = (r1 / g11).max(0.0);
    if resid(a_only, 0.0) <= resid(0.0, b_only) {
        [a_only, 0.0]
    } else {
        [0.0, b_only]
    }
}

/// Seeds the two stain columns at the extreme in-plane angles of the tissue
/// samples, projected onto the plane of the two leading principal directions.
fn initial_columns(samples: &[[f64; 3]], percentile: f64) -> Result<[[f64; 3]; 2]> {
    let mut scatter = Matrix3::<f64>::zeros();
    for s in samples {
        let v = Vector3::from(*s);
        scatter += v * v.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut e1: [f64; 3] = eig.eigenvectors.column(order[0]).into();
    let e2: [f64; 3] = eig.eigenvectors.column(order[1]).into();
    if e1.iter().sum::<f64>() < 0.0 {
        e1.iter_mut().for_each(|v| *v = -*v);
    }

    let mut angles: Vec<f64> = samples
        .iter()
        .map(|s| dot(&e2, s).atan2(dot(&e1, s)))
        .collect();
    angles.sort_by(f64::total_cmp);
    let rank = |p: f64| {
        let idx = (p / 100.0 * (angles.len() - 1) as f64).round() as usize;
        angles[idx.min(angles.len() - 1)]
    };
    let mut cols = [0.0; 2].map(|_| [0.0; 3]);
    for (col, phi) in cols.iter_mut().zip([rank(percentile), rank(100.0 - percentile)]) {
        for c in 0..3 {
            col[c] = (phi.cos() * e1[c] + phi.sin() * e2[c]).max(0.0);
        }
        let n = norm(col);
        if n < MIN_COLUMN_NORM {
            return Err(Error::DegenerateFactorization(
                "initial stain direction leaves the non-negative orthant".into(),
            ));
        }
        col.iter_mut().for_each(|v| *v /= n);
    }
    Ok(cols)
}

fn objective(samples: &[[f64; 3]], w: &[[f64; 3]; 2], h: &[[f64; 2]]) -> f64 {
    samples
        .iter()
        .zip(h)
        .map(|(v, d)| {
            (0..3)
                .map(|c| {
                    let r = v[c] - w[0][c] * d[0] - w[1][c] * d[1];
                    r * r
                })
                .sum::<f64>()
        })
        .sum()
}

/// Factorizes tissue optical densities into stain colors and densities.
pub fn estimate_stains(od: &OdImage, cfg: &StainConfig) -> Result<StainEstimate> {
    od.validate()?;
    let total = od.pixel_count();
    let tissue_idx: Vec<usize> = (0..total)
        .filter(|&i| norm(&od.pixel(i)) > cfg.tissue_threshold)
        .collect();
    let required = ((cfg.tissue_fraction * total as f64).ceil() as usize).max(2);
    if tissue_idx.len() < required {
        return Err(Error::InsufficientTissue {
            tissue: tissue_idx.len(),
            total,
            required,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<[f64; 3]> = if tissue_idx.len() > cfg.max_samples {
        let mut picked = sample(&mut rng, tissue_idx.len(), cfg.max_samples).into_vec();
        picked.sort_unstable();
        picked.iter().map(|&k| od.pixel(tissue_idx[k])).collect()
    } else {
        tissue_idx.iter().map(|&i| od.pixel(i)).collect()
    };

    let mut w = initial_columns(&samples, cfg.angle_percentile)?;
    let mut h: Vec<[f64; 2]> = samples
        .iter()
        .map(|v| {
            let d = nnls2(&w, v);
            let jitter: [f64; 2] = [rng.random(), rng.random()];
            [d[0] * (1.0 + 0.01 * jitter[0]) + 1e-9, d[1] * (1.0 + 0.01 * jitter[1]) + 1e-9]
        })
        .collect();

    let mut history = Vec::with_capacity(cfg.iters);
    let mut prev = objective(&samples, &w, &h);
    for _ in 0..cfg.iters {
        // H ← H ⊙ (WᵀV) / (WᵀW H)
        let g = [
            [dot(&w[0], &w[0]), dot(&w[0], &w[1])],
            [dot(&w[1], &w[0]), dot(&w[1], &w[1])],
        ];
        for (d, v) in h.iter_mut().zip(&samples) {
            let num = [dot(&w[0], v), dot(&w[1], v)];
            let den = [
                g[0][0] * d[0] + g[0][1] * d[1],
                g[1][0] * d[0] + g[1][1] * d[1],
            ];
            d[0] *= num[0] / (den[0] + UPDATE_EPS);
            d[1] *= num[1] / (den[1] + UPDATE_EPS);
        }

        // W ← W ⊙ (V Hᵀ) / (W H Hᵀ)
        let mut vht = [[0.0; 3]; 2];
        let mut hht = [[0.0; 2]; 2];
        for (d, v) in h.iter().zip(&samples) {
            for k in 0..2 {
                for c in 0..3 {
                    vht[k][c] += v[c] * d[k];
                }
                hht[k][0] += d[k] * d[0];
                hht[k][1] += d[k] * d[1];
            }
        }
        let w_old = w;
        for k in 0..2 {
            for c in 0..3 {
                let den = w_old[0][c] * hht[0][k] + w_old[1][c] * hht[1][k];
                w[k][c] = w_old[k][c] * vht[k][c] / (den + UPDATE_EPS);
            }
        }

        // unit columns, scale pushed into H
        for k in 0..2 {
            let n = norm(&w[k]);
            if n < MIN_COLUMN_NORM {
                return Err(Error::DegenerateFactorization(format!(
                    "stain column {k} collapsed (norm {n:e})"
                )));
            }
            w[k].iter_mut().for_each(|v| *v /= n);
            h.iter_mut().for_each(|d| d[k] *= n);
        }

        let obj = objective(&samples, &w, &h);
        history.push(obj);
        let rel = (prev - obj).abs() / prev.max(f64::MIN_POSITIVE);
        prev = obj;
        if rel < cfg.tol {
            break;
        }
    }

    let separation = angle_deg(&w[0], &w[1]);
    if separation < cfg.min_separation_deg {
        return Err(Error::DegenerateFactorization(format!(
            "stain columns only {separation:.3}° apart; image looks single-stain"
        )));
    }

    let reference = REFERENCE_HEMATOXYLIN;
    if dot(&w[1], &reference) / norm(&w[1]) > dot(&w[0], &reference) / norm(&w[0]) {
        w.swap(0, 1);
    }
    let model = StainModel {
        columns: w,
        h_column: 0,
    };
    model.validate()?;

    let mut rows = [Vec::with_capacity(total), Vec::with_capacity(total)];
    let mut resid = 0.0;
    let mut energy = 0.0;
    for i in 0..total {
        let v = od.pixel(i);
        let d = nnls2(&w, &v);
        for c in 0..3 {
            let r = v[c] - w[0][c] * d[0] - w[1][c] * d[1];
            resid += r * r;
            energy += v[c] * v[c];
        }
        rows[0].push(d[0]);
        rows[1].push(d[1]);
    }
    let density = DensityMap {
        width: od.width,
        height: od.height,
        rows,
    };
    Ok(StainEstimate {
        model,
        density,
        objective: history,
        relative_error: (resid / energy.max(f64::MIN_POSITIVE)).sqrt(),
    })
}

/// Image of one stain alone: `x0 ⊙ exp(-W[:, s] · D[s, :])`.
pub fn reconstruct_component(
    illumination: [f64; 3],
    model: &StainModel,
    density: &DensityMap,
    which: Stain,
) -> RgbImage {
    let (col, row) = match which {
        Stain::Hematoxylin => (model.hematoxylin(), &density.rows[0]),
        Stain::Eosin => (model.eosin(), &density.rows[1]),
    };
    let samples = row
        .iter()
        .flat_map(|&d| {
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = (illumination[c] * (-col[c] * d).exp()).min(1.0);
            }
            px
        })
        .collect();
    RgbImage {
        width: density.width,
        height: density.height,
        samples,
        illumination,
    }
}

/// Full Beer–Lambert reconstruction `x0 ⊙ exp(-W·D)` with both stains.
pub fn reconstruct(illumination: [f64; 3], model: &StainModel, density: &DensityMap) -> RgbImage {
    let h = model.hematoxylin();
    let e = model.eosin();
    let samples = density.rows[0]
        .iter()
        .zip(&density.rows[1])
        .flat_map(|(&dh, &de)| {
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = (illumination[c] * (-(h[c] * dh + e[c] * de)).exp()).min(1.0);
            }
            px
        })
        .collect();
    RgbImage {
        width: density.width,
        height: density.height,
        samples,
        illumination,
    }
}

/// Channel mean.
pub fn collapse_to_gray(image: &RgbImage) -> GrayImage {
    GrayImage {
        width: image.width,
        height: image.height,
        samples: image.pixels().map(|p| (p[0] + p[1] + p[2]) / 3.0).collect(),
    }
}
