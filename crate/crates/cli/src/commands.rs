use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pointprop_core::coarse::{cluster_label, voronoi_label, ClusterConfig, VoronoiConfig};
use pointprop_core::dataio::{
    crop, crop_rgb, read_instances, read_points, read_probmap, read_rgb, read_trilabel, split_dataset, stitch, tile,
    write_atomic, write_gray, write_instances, write_points, write_probmap, write_rgb, write_stain_model,
    write_trilabel, SplitSpec,
};
use pointprop_core::metrics::{evaluate, perturb_points, EvalConfig};
use pointprop_core::propagation::{
    colorization_loss, ema_update, kl_cot_loss, merge_pseudo, partial_ce_loss, EmaState, KlMode,
};
use pointprop_core::stain::{collapse_to_gray, estimate_stains, reconstruct_component, to_od, Stain, StainConfig};
use pointprop_core::synthetic::{generate_tile, TileConfig};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::pipeline::{run_pipeline, PipelineDirs, MANIFEST_NAME};
use crate::{
    ClusterArgs, Command, EmaArgs, EvalArgs, LossCommand, MergeArgs, PerturbArgs, PipelineArgs, SplitArgs, StainArgs,
    StitchArgs, SynthArgs, TileArgs, VoronoiArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::StainSeparate(a) => stain_separate(a),
        Command::GenVoronoi(a) => gen_voronoi(a),
        Command::GenCluster(a) => gen_cluster(a),
        Command::Ema(a) => ema(a),
        Command::Merge(a) => merge(a),
        Command::Loss(l) => loss(l),
        Command::Eval(a) => eval(a),
        Command::Perturb(a) => perturb(a),
        Command::Split(a) => split(a),
        Command::Tile(a) => tile_cmd(a),
        Command::Stitch(a) => stitch_cmd(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Synth(a) => synth(a),
    }
}

/// Parses `WxH`.
pub fn parse_size(raw: &str) -> Result<(usize, usize)> {
    let (w, h) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("size must look like WxH, got {raw:?}"))?;
    let w: usize = w.trim().parse().with_context(|| format!("bad width in {raw:?}"))?;
    let h: usize = h.trim().parse().with_context(|| format!("bad height in {raw:?}"))?;
    if w == 0 || h == 0 {
        bail!("size must be positive, got {raw:?}");
    }
    Ok((w, h))
}

fn stain_separate(a: StainArgs) -> Result<()> {
    let image = read_rgb(&a.input)?;
    let cfg = StainConfig {
        iters: a.iters,
        seed: a.seed,
        tissue_threshold: a.tissue_threshold,
        ..StainConfig::default()
    };
    let est = estimate_stains(&to_od(&image, image.illumination), &cfg)
        .with_context(|| format!("separating {}", a.input.display()))?;
    let mut outputs = vec![(Stain::Hematoxylin, &a.out_h)];
    if let Some(e) = &a.out_e {
        outputs.push((Stain::Eosin, e));
    }
    for (which, path) in outputs {
        let component = reconstruct_component(image.illumination, &est.model, &est.density, which);
        if a.rgb {
            write_rgb(&component, path)?;
        } else {
            write_gray(&collapse_to_gray(&component), path)?;
        }
    }
    if let Some(path) = &a.out_model {
        write_stain_model(&est.model, path)?;
    }
    println!(
        "iterations={} relative_error={:.6}",
        est.objective.len(),
        est.relative_error
    );
    Ok(())
}

fn gen_voronoi(a: VoronoiArgs) -> Result<()> {
    let (w, h) = parse_size(&a.size)?;
    let points = read_points(&a.points)?;
    let cfg = VoronoiConfig {
        point_radius: a.radius,
        edge_width: a.edge_width,
    };
    write_trilabel(&voronoi_label(&points, w, h, &cfg)?, &a.out)?;
    Ok(())
}

fn gen_cluster(a: ClusterArgs) -> Result<()> {
    let image = read_rgb(&a.image)?;
    let points = read_points(&a.points)?;
    let cfg = ClusterConfig {
        seed: a.seed,
        d_max: a.dmax,
        min_area: a.min_area,
        rgb_weight: a.rgb_weight,
        dist_weight: a.dist_weight,
        opening_radius: a.opening_radius,
        ..ClusterConfig::default()
    };
    write_trilabel(&cluster_label(&image, &points, &cfg)?, &a.out)?;
    Ok(())
}

fn ema(a: EmaArgs) -> Result<()> {
    let pred = read_probmap(&a.pred)?;
    // the period only matters to a caller driving epochs
    let state = if a.state.exists() {
        EmaState::resume(read_probmap(&a.state)?, 1, a.decay, 1)?
    } else {
        EmaState::new(a.decay, 1)?
    };
    let next = ema_update(&state, &pred)?;
    write_probmap(next.average.as_ref().expect("set by ema_update"), &a.out)?;
    Ok(())
}

fn merge(a: MergeArgs) -> Result<()> {
    let ema = read_probmap(&a.ema)?;
    let cluster = read_trilabel(&a.cluster)?;
    write_probmap(&merge_pseudo(&ema, &cluster)?, &a.out)?;
    Ok(())
}

fn loss(cmd: LossCommand) -> Result<()> {
    let value = match cmd {
        LossCommand::Vor(a) | LossCommand::Clu(a) => partial_ce_loss(&read_probmap(&a.pred)?, &read_trilabel(&a.label)?)?,
        LossCommand::Cot(a) => {
            let mode = if a.positive_only {
                KlMode::PositiveOnly
            } else {
                KlMode::Binary
            };
            kl_cot_loss(&read_probmap(&a.pseudo)?, &read_probmap(&a.pred)?, mode)?
        }
        LossCommand::Color(a) => colorization_loss(&read_rgb(&a.pred)?, &read_rgb(&a.target)?)?,
    };
    println!("{value:.9}");
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let pred = read_probmap(&a.pred)?;
    let gt = read_instances(&a.gt)?;
    let cfg = EvalConfig {
        threshold: a.threshold,
        min_area: a.min_area,
    };
    println!("{}", evaluate(&pred, &gt, &cfg)?);
    Ok(())
}

fn perturb(a: PerturbArgs) -> Result<()> {
    let (w, h) = parse_size(&a.size)?;
    let points = read_points(&a.points)?;
    write_points(&perturb_points(&points, a.shift, a.seed, w, h)?, &a.out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SplitFile<'a> {
    seed: u64,
    overlap_ratio: f64,
    a: Vec<&'a str>,
    b: Vec<&'a str>,
}

fn split(a: SplitArgs) -> Result<()> {
    let text = fs::read_to_string(&a.ids).with_context(|| format!("reading {}", a.ids.display()))?;
    let ids: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if ids.is_empty() {
        bail!("{} lists no ids", a.ids.display());
    }
    let spec = SplitSpec {
        seed: a.seed,
        overlap_ratio: a.overlap,
    };
    let (xa, xb) = split_dataset(&ids, &spec)?;
    let file = SplitFile {
        seed: a.seed,
        overlap_ratio: a.overlap,
        a: xa,
        b: xb,
    };
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    write_atomic(&a.out, &bytes)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PatchEntry {
    name: String,
    x: usize,
    y: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridFile {
    source: String,
    width: usize,
    height: usize,
    patch: usize,
    overlap: usize,
    patches: Vec<PatchEntry>,
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| anyhow!("cannot take a file stem of {}", path.display()))
}

fn tile_cmd(a: TileArgs) -> Result<()> {
    let ext = a
        .input
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let stem = stem_of(&a.input)?;
    fs::create_dir_all(&a.out_dir)?;

    enum Source {
        Map(pointprop_core::ProbMap),
        Rgb(pointprop_core::RgbImage),
    }
    let source = match ext.as_str() {
        "pfg" => Source::Map(read_probmap(&a.input)?),
        "png" => Source::Rgb(read_rgb(&a.input)?),
        _ => bail!("tile expects a .png or .pfg input, got {}", a.input.display()),
    };
    let (w, h) = match &source {
        Source::Map(m) => m.dims(),
        Source::Rgb(i) => i.dims(),
    };
    let grid = tile(w, h, a.patch, a.overlap)?;
    let mut patches = Vec::with_capacity(grid.len());
    for &(x, y) in &grid.origins {
        let name = format!("{stem}_{x}_{y}");
        let path = a.out_dir.join(format!("{name}.{ext}"));
        match &source {
            Source::Map(m) => write_probmap(&crop(m, (x, y), a.patch, a.patch)?, &path)?,
            Source::Rgb(i) => write_rgb(&crop_rgb(i, (x, y), a.patch, a.patch)?, &path)?,
        }
        patches.push(PatchEntry { name, x, y });
    }
    let file = GridFile {
        source: a.input.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        width: w,
        height: h,
        patch: a.patch,
        overlap: a.overlap,
        patches,
    };
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    write_atomic(&a.out_dir.join(format!("{stem}.grid.json")), &bytes)?;
    println!("{} patches", file.patches.len());
    Ok(())
}

fn stitch_cmd(a: StitchArgs) -> Result<()> {
    let text = fs::read_to_string(&a.grid).with_context(|| format!("reading {}", a.grid.display()))?;
    let grid: GridFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.grid.display()))?;
    let dir: PathBuf = match a.patches {
        Some(d) => d,
        None => a.grid.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let mut patches = Vec::with_capacity(grid.patches.len());
    for p in &grid.patches {
        let map = read_probmap(&dir.join(format!("{}.pfg", p.name)))?;
        patches.push(((p.x, p.y), map));
    }
    write_probmap(&stitch(&patches, grid.width, grid.height)?, &a.out)?;
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_env()?;
    let dirs = PipelineDirs {
        points: a.points.unwrap_or_else(|| a.images.clone()),
        images: a.images,
        out: a.out,
        predictions: a.preds,
        ground_truth: a.gt,
    };
    let manifest = run_pipeline(&cfg, &dirs, a.jobs)?;
    let hash = crate::pipeline::sha256_file(&dirs.out.join(MANIFEST_NAME))?;
    println!(
        "images={} outputs={} manifest_sha256={hash}",
        manifest.inputs.len(),
        manifest.outputs.len()
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let dirs = ["images", "points", "gt"].map(|d| a.out.join(d));
    for d in &dirs {
        fs::create_dir_all(d)?;
    }
    for i in 0..a.count {
        let tile = generate_tile(&TileConfig {
            width: a.size,
            height: a.size,
            nuclei: a.nuclei,
            seed: a.seed.wrapping_add(i as u64),
            ..TileConfig::default()
        });
        let stem = format!("tile_{i:03}");
        write_rgb(&tile.image, &dirs[0].join(format!("{stem}.png")))?;
        write_points(&tile.points, &dirs[1].join(format!("{stem}.csv")))?;
        write_instances(&tile.instances, &dirs[2].join(format!("{stem}.png")))?;
    }
    Ok(())
}
