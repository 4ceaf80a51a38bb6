use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod pipeline;

/// Turns point annotations on H&E images into pixel-level supervision.
#[derive(Parser, Debug)]
#[command(name = "pointprop", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate stain vectors and write the hematoxylin (and eosin) component.
    StainSeparate(StainArgs),
    /// Voronoi label from points: disks nucleus, cell ridges background.
    GenVoronoi(VoronoiArgs),
    /// Cluster label from k-means on color and distance-to-point.
    GenCluster(ClusterArgs),
    /// Fold a prediction into the running average of one image.
    Ema(EmaArgs),
    /// Hard cluster labels where confident, averaged prediction elsewhere.
    Merge(MergeArgs),
    /// Reference loss values, printed with 9 decimals.
    #[command(subcommand)]
    Loss(LossCommand),
    /// Score a probability map against an instance map.
    Eval(EvalArgs),
    /// Shift every point by a seeded uniform offset.
    Perturb(PerturbArgs),
    /// Split a list of ids between two learners.
    Split(SplitArgs),
    /// Cut an image or probability map into overlapping patches.
    Tile(TileArgs),
    /// Average patch predictions back into a full-size map.
    Stitch(StitchArgs),
    /// Run stain separation and both coarse labelers over a directory.
    Pipeline(PipelineArgs),
    /// Write synthetic tiles with points and ground truth.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct StainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_h: PathBuf,
    #[arg(long)]
    out_e: Option<PathBuf>,
    /// Also write the 7-number stain model file.
    #[arg(long)]
    out_model: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.15)]
    tissue_threshold: f64,
    /// Keep the components as RGB instead of collapsing to gray.
    #[arg(long)]
    rgb: bool,
}

#[derive(Args, Debug)]
struct VoronoiArgs {
    #[arg(long)]
    points: PathBuf,
    /// Image size as WxH.
    #[arg(long)]
    size: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long, default_value_t = 2)]
    edge_width: usize,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    dmax: f64,
    #[arg(long, default_value_t = 20)]
    min_area: usize,
    #[arg(long, default_value_t = 1.0)]
    rgb_weight: f64,
    #[arg(long, default_value_t = 0.5)]
    dist_weight: f64,
    #[arg(long, default_value_t = 1)]
    opening_radius: usize,
}

#[derive(Args, Debug)]
struct EmaArgs {
    /// Current average; a missing file starts from the prediction.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[arg(long)]
    ema: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum LossCommand {
    /// Partial cross-entropy against a Voronoi label.
    Vor(LabelLossArgs),
    /// Partial cross-entropy against a cluster label.
    Clu(LabelLossArgs),
    /// KL divergence from a pseudo label to a prediction.
    Cot(CotArgs),
    /// Mean squared color distance between two RGB images.
    Color(ColorArgs),
}

#[derive(Args, Debug)]
struct LabelLossArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    label: PathBuf,
}

#[derive(Args, Debug)]
struct CotArgs {
    #[arg(long)]
    pseudo: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Only the positive-class term.
    #[arg(long)]
    positive_only: bool,
}

#[derive(Args, Debug)]
struct ColorArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    target: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 20)]
    min_area: usize,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    shift: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Image size as WxH, used to clamp shifted points.
    #[arg(long)]
    size: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Text file with one id per line.
    #[arg(long)]
    ids: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with both subsets.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TileArgs {
    /// RGB `.png` or `.pfg` probability map.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 224)]
    patch: usize,
    #[arg(long, default_value_t = 80)]
    overlap: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct StitchArgs {
    /// Grid file written by `tile`.
    #[arg(long)]
    grid: PathBuf,
    /// Directory holding `<patch name>.pfg` predictions; defaults to the grid's directory.
    #[arg(long)]
    patches: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// key = value settings; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    images: PathBuf,
    /// Directory of `<stem>.csv`; defaults to the image directory.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    preds: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 8)]
    nuclei: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
