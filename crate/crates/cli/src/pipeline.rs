//! Batch pipeline: per-image artifacts plus a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pointprop_core::coarse::{cluster_label, voronoi_label};
use pointprop_core::dataio::{
    read_instances, read_points, read_probmap, read_rgb, write_atomic, write_gray, write_probmap, write_trilabel,
};
use pointprop_core::metrics::evaluate;
use pointprop_core::propagation::merge_pseudo;
use pointprop_core::stain::{
    collapse_to_gray, estimate_stains, reconstruct_component, to_od, Stain, StainConfig, StainEstimate,
};
use pointprop_core::{GrayImage, RgbImage};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct PipelineDirs {
    pub images: PathBuf,
    pub points: PathBuf,
    pub out: PathBuf,
    /// `<stem>.pfg` predictions to merge with the cluster labels.
    pub predictions: Option<PathBuf>,
    /// `<stem>.png` instance maps to score the predictions against.
    pub ground_truth: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct InputEntry {
    pub stem: String,
    pub image: String,
    pub image_sha256: String,
    pub points: String,
    pub points_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth_sha256: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    pub config: String,
    pub inputs: Vec<InputEntry>,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hematoxylin-only rendering of `image`, collapsed to one channel.
pub fn hematoxylin_gray(image: &RgbImage, cfg: &StainConfig) -> Result<(GrayImage, StainEstimate)> {
    let od = to_od(image, image.illumination);
    let est = estimate_stains(&od, cfg)?;
    let h = reconstruct_component(image.illumination, &est.model, &est.density, Stain::Hematoxylin);
    Ok((collapse_to_gray(&h), est))
}

fn files_with_extension(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(ext));
        if let (true, Some(stem)) = (matches, path.file_stem().and_then(|s| s.to_str())) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

struct WorkItem {
    stem: String,
    image: PathBuf,
    points: PathBuf,
    prediction: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
}

fn pair_inputs(dirs: &PipelineDirs) -> Result<Vec<WorkItem>> {
    let images = files_with_extension(&dirs.images, "png")?;
    let points = files_with_extension(&dirs.points, "csv")?;
    if let Some(stem) = points.keys().find(|s| !images.contains_key(*s)) {
        bail!("points file {stem}.csv has no matching image");
    }
    let mut items = Vec::with_capacity(images.len());
    for (stem, image) in images {
        let Some(pts) = points.get(&stem) else {
            bail!("image {stem}.png has no matching points file");
        };
        let lookup = |dir: &Option<PathBuf>, ext: &str, what: &str| -> Result<Option<PathBuf>> {
            match dir {
                None => Ok(None),
                Some(d) => {
                    let p = d.join(format!("{stem}.{ext}"));
                    if !p.is_file() {
                        bail!("image {stem}.png has no {what} at {}", p.display());
                    }
                    Ok(Some(p))
                }
            }
        };
        items.push(WorkItem {
            prediction: lookup(&dirs.predictions, "pfg", "prediction")?,
            ground_truth: lookup(&dirs.ground_truth, "png", "ground truth")?,
            stem,
            image,
            points: pts.clone(),
        });
    }
    Ok(items)
}

fn process(item: &WorkItem, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let image = read_rgb(&item.image)?;
    let points = read_points(&item.points)?;
    let (w, h) = image.dims();
    points.validate_within(w, h)?;
    let mut written = Vec::new();
    let mut emit = |name: String| {
        written.push(name.clone());
        out.join(name)
    };

    let (hgray, _) = hematoxylin_gray(&image, &cfg.stain_config())?;
    write_gray(&hgray, &emit(format!("{}.h.png", item.stem)))?;

    let vor = voronoi_label(&points, w, h, &cfg.voronoi)?;
    write_trilabel(&vor, &emit(format!("{}.vor.png", item.stem)))?;

    let clu = cluster_label(&image, &points, &cfg.cluster_config())?;
    write_trilabel(&clu, &emit(format!("{}.clu.png", item.stem)))?;

    if let Some(pred_path) = &item.prediction {
        let pred = read_probmap(pred_path)?;
        let pseudo = merge_pseudo(&pred, &clu)?;
        write_probmap(&pseudo, &emit(format!("{}.pseudo.pfg", item.stem)))?;
        if let Some(gt_path) = &item.ground_truth {
            let gt = read_instances(gt_path)?;
            let report = evaluate(&pred, &gt, &cfg.eval)?;
            let path = emit(format!("{}.metrics.txt", item.stem));
            write_atomic(&path, format!("{report}\n").as_bytes())?;
        }
    }
    Ok(written)
}

/// Runs every image through stain separation and both coarse labelers on a
/// pool of `jobs` workers, then writes `manifest.json` into the output dir.
pub fn run_pipeline(cfg: &PipelineConfig, dirs: &PipelineDirs, jobs: Option<usize>) -> Result<Manifest> {
    if dirs.ground_truth.is_some() && dirs.predictions.is_none() {
        bail!("ground truth given without predictions to score");
    }
    let items = pair_inputs(dirs)?;
    fs::create_dir_all(&dirs.out).with_context(|| format!("creating {}", dirs.out.display()))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker pool")?;
    let results: Vec<Result<Vec<String>>> = pool.install(|| {
        items
            .par_iter()
            .map(|item| process(item, cfg, &dirs.out).with_context(|| format!("image {}", item.stem)))
            .collect()
    });

    let mut inputs = Vec::with_capacity(items.len());
    let mut outputs = Vec::new();
    for (item, result) in items.iter().zip(results) {
        for name in result? {
            outputs.push(OutputEntry {
                sha256: sha256_file(&dirs.out.join(&name))?,
                path: name,
            });
        }
        let file_name = |p: &Path| p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        inputs.push(InputEntry {
            stem: item.stem.clone(),
            image: file_name(&item.image),
            image_sha256: sha256_file(&item.image)?,
            points: file_name(&item.points),
            points_sha256: sha256_file(&item.points)?,
            prediction_sha256: item.prediction.as_deref().map(sha256_file).transpose()?,
            ground_truth_sha256: item.ground_truth.as_deref().map(sha256_file).transpose()?,
        });
    }

    let manifest = Manifest {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        inputs,
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(&dirs.out.join(MANIFEST_NAME), &bytes)?;
    Ok(manifest)
}
