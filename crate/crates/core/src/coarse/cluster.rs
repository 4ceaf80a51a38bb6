use super::distance::{distance_map, DistanceMap};
use super::kmeans::{kmeans, Features, KMeansConfig};
use super::morphology::{fill_holes, open, remove_small_components};
use crate::error::{check_dims, Error, Result};
use crate::types::{code, PointSet, RgbImage, TriLabelMap, Validate, Violation};

/// Refinement passes stop early once the map stops changing.
const MAX_REFINE_PASSES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    /// Always 3: nuclei, background, ignored.
    pub k: usize,
    pub rgb_weight: f64,
    pub dist_weight: f64,
    /// Distance clip, in pixels.
    pub d_max: f64,
    pub kmeans_iters: usize,
    pub kmeans_tol: f64,
    pub seed: u64,
    /// Nucleus components smaller than this many pixels become ignored.
    pub min_area: usize,
    pub opening_radius: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 3,
            rgb_weight: 1.0,
            dist_weight: 0.5,
            d_max: 20.0,
            kmeans_iters: 100,
            kmeans_tol: 1e-4,
            seed: 0,
            min_area: 20,
            opening_radius: 1,
        }
    }
}

impl ClusterConfig {
    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            seed: self.seed,
            iters: self.kmeans_iters,
            tol: self.kmeans_tol,
        }
    }
}

impl Validate for ClusterConfig {
    fn validate(&self) -> Result<(), Violation> {
        if self.k != 3 {
            return Err(Violation(format!("cluster count must be 3, got {}", self.k)));
        }
        if !(self.rgb_weight > 0.0 && self.dist_weight > 0.0) {
            return Err(Violation("feature weights must be positive".into()));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Violation("d_max must be positive".into()));
        }
        Ok(())
    }
}

/// `(w_rgb·R, w_rgb·G, w_rgb·B, w_d·d)` per pixel.
pub fn kmeans_features(image: &RgbImage, dmap: &DistanceMap, cfg: &ClusterConfig) -> Result<Features> {
    check_dims(image.dims(), (dmap.width, dmap.height))?;
    let mut data = Vec::with_capacity(image.pixel_count() * 4);
    for (px, &d) in image.pixels().zip(&dmap.values) {
        data.extend(px.iter().map(|c| c * cfg.rgb_weight));
        data.push(d * cfg.dist_weight);
    }
    Ok(Features::new(4, data))
}

/// Ranks clusters by mean distance feature (ties: darker first). The closest
/// cluster is nuclei, the farthest background, the rest ignored.
pub fn classify_clusters(
    assignments: &[usize],
    k: usize,
    dmap: &DistanceMap,
    image: &RgbImage,
) -> Result<TriLabelMap> {
    check_dims(image.dims(), (dmap.width, dmap.height))?;
    if assignments.len() != dmap.values.len() {
        return Err(Error::Format(format!(
            "{} assignments for {} pixels",
            assignments.len(),
            dmap.values.len()
        )));
    }
    let mut dist_sum = vec![0.0; k];
    let mut bright_sum = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for ((&a, &d), px) in assignments.iter().zip(&dmap.values).zip(image.pixels()) {
        dist_sum[a] += d;
        bright_sum[a] += (px[0] + px[1] + px[2]) / 3.0;
        counts[a] += 1;
    }
    let mut ranked: Vec<(f64, f64, usize)> = (0..k)
        .filter(|&j| counts[j] > 0)
        .map(|j| (dist_sum[j] / counts[j] as f64, bright_sum[j] / counts[j] as f64, j))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut class = vec![code::IGNORED; k];
    if let Some(first) = ranked.first() {
        class[first.2] = code::NUCLEUS;
    }
    if ranked.len() > 1 {
        class[ranked.last().unwrap().2] = code::BACKGROUND;
    }
    Ok(TriLabelMap {
        width: dmap.width,
        height: dmap.height,
        labels: assignments.iter().map(|&a| class[a]).collect(),
    })
}

fn refine_pass(map: &TriLabelMap, cfg: &ClusterConfig) -> TriLabelMap {
    let (w, h) = map.dims();
    let nucleus: Vec<bool> = map.labels.iter().map(|&c| c == code::NUCLEUS).collect();
    let kept = remove_small_components(&nucleus, w, h, cfg.min_area);
    let opened = open(&kept, w, h, cfg.opening_radius);
    let filled = fill_holes(&opened, w, h);
    let labels = map
        .labels
        .iter()
        .zip(nucleus.iter().zip(&filled))
        .map(|(&c, (&was, &now))| match (was, now) {
            (true, false) => code::IGNORED,
            (false, true) => code::NUCLEUS,
            _ => c,
        })
        .collect();
    TriLabelMap {
        width: w,
        height: h,
        labels,
    }
}

/// Component removal, opening and hole filling on the nucleus mask, repeated
/// until the map stops changing. Removed nucleus pixels become ignored.
pub fn refine(raw: &TriLabelMap, cfg: &ClusterConfig) -> TriLabelMap {
    let mut current = refine_pass(raw, cfg);
    for _ in 1..MAX_REFINE_PASSES {
        let next = refine_pass(&current, cfg);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Distance map → features → k-means → cluster classes → refinement, with
/// every annotated pixel forced to nucleus.
pub fn cluster_label(image: &RgbImage, points: &PointSet, cfg: &ClusterConfig) -> Result<TriLabelMap> {
    cfg.validate()?;
    let (w, h) = image.dims();
    let dmap = distance_map(points, w, h, cfg.d_max)?;
    let features = kmeans_features(image, &dmap, cfg)?;
    let clusters = kmeans(&features, &cfg.kmeans_config())?;
    let raw = classify_clusters(&clusters.assignments, cfg.k, &dmap, image)?;
    let mut refined = refine(&raw, cfg);
    for p in points {
        refined.labels[p.y * w + p.x] = code::NUCLEUS;
    }
    Ok(refined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Point;

    fn dmap_from(values: Vec<f64>, width: usize) -> DistanceMap {
        DistanceMap {
            width,
            height: values.len() / width,
            values,
            d_max: 20.0,
        }
    }

    #[test]
    fn classes_follow_mean_distance() {
        let assignments = vec![0, 1, 2];
        let dmap = dmap_from(vec![0.1, 0.5, 0.9], 3);
        let image = RgbImage::filled(3, 1, [0.5; 3]);
        let map = classify_clusters(&assignments, 3, &dmap, &image).unwrap();
        assert_eq!(map.labels, vec![code::NUCLEUS, code::IGNORED, code::BACKGROUND]);
    }

    #[test]
    fn distance_ties_go_to_the_darker_cluster() {
        let assignments = vec![0, 1, 2];
        let dmap = dmap_from(vec![0.4, 0.4, 0.9], 3);
        let image = RgbImage::new(3, 1, vec![0.8, 0.8, 0.8, 0.2, 0.2, 0.2, 0.5, 0.5, 0.5]).unwrap();
        let map = classify_clusters(&assignments, 3, &dmap, &image).unwrap();
        assert_eq!(map.labels, vec![code::IGNORED, code::NUCLEUS, code::BACKGROUND]);
    }

    #[test]
    fn isolated_blob_becomes_ignored() {
        let mut map = TriLabelMap::filled(10, 10, code::BACKGROUND);
        for i in [11, 12, 13] {
            map.labels[i] = code::NUCLEUS;
        }
        let out = refine(&map, &ClusterConfig::default());
        for i in [11, 12, 13] {
            assert_eq!(out.labels[i], code::IGNORED);
        }
        assert_eq!(out.labels.iter().filter(|&&c| c == code::BACKGROUND).count(), 97);
    }

    #[test]
    fn square_hole_is_filled() {
        let mut map = TriLabelMap::filled(14, 14, code::BACKGROUND);
        for y in 2..12 {
            for x in 2..12 {
                map.labels[y * 14 + x] = code::NUCLEUS;
            }
        }
        for (x, y) in [(6, 6), (7, 6), (6, 7), (7, 7)] {
            map.labels[y * 14 + x] = code::BACKGROUND;
        }
        let out = refine(&map, &ClusterConfig::default());
        for (x, y) in [(6, 6), (7, 6), (6, 7), (7, 7)] {
            assert_eq!(out.get(x, y), code::NUCLEUS);
        }
    }

    #[test]
    fn weights_must_be_positive() {
        let cfg = ClusterConfig {
            dist_weight: 0.0,
            ..ClusterConfig::default()
        };
        assert!(cfg.validate().is_err());
        let points = PointSet::new(vec![Point::new(1, 1)]).unwrap();
        assert!(cluster_label(&RgbImage::filled(4, 4, [0.5; 3]), &points, &cfg).is_err());
    }
}
