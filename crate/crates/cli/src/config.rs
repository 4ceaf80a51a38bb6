//! `key = value` pipeline configuration.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use pointprop_core::coarse::{ClusterConfig, VoronoiConfig};
use pointprop_core::metrics::EvalConfig;
use pointprop_core::propagation::{EmaState, KlMode, ScheduleConfig};
use pointprop_core::stain::StainConfig;
use pointprop_core::Validate;
use sha2::{Digest, Sha256};

pub const SEED_ENV: &str = "POINTPROP_SEED";

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub stain: StainConfig,
    pub voronoi: VoronoiConfig,
    pub cluster: ClusterConfig,
    pub ema_decay: f64,
    pub ema_period: u32,
    pub kl_mode: KlMode,
    pub schedule: ScheduleConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            stain: StainConfig::default(),
            voronoi: VoronoiConfig::default(),
            cluster: ClusterConfig::default(),
            ema_decay: 0.5,
            ema_period: 3,
            kl_mode: KlMode::Binary,
            schedule: ScheduleConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| anyhow!("{key}: cannot parse {raw:?}: {e}"))
}

fn parse_kl_mode(raw: &str) -> Result<KlMode> {
    match raw {
        "binary" => Ok(KlMode::Binary),
        "positive-only" => Ok(KlMode::PositiveOnly),
        other => bail!("kl.mode: expected \"binary\" or \"positive-only\", found {other:?}"),
    }
}

fn kl_mode_name(mode: KlMode) -> &'static str {
    match mode {
        KlMode::Binary => "binary",
        KlMode::PositiveOnly => "positive-only",
    }
}

impl PipelineConfig {
    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_value(key, raw)?,
            "stain.iters" => self.stain.iters = parse_value(key, raw)?,
            "stain.tol" => self.stain.tol = parse_value(key, raw)?,
            "stain.tissue_threshold" => self.stain.tissue_threshold = parse_value(key, raw)?,
            "stain.tissue_fraction" => self.stain.tissue_fraction = parse_value(key, raw)?,
            "stain.max_samples" => self.stain.max_samples = parse_value(key, raw)?,
            "voronoi.point_radius" => self.voronoi.point_radius = parse_value(key, raw)?,
            "voronoi.edge_width" => self.voronoi.edge_width = parse_value(key, raw)?,
            "cluster.rgb_weight" => self.cluster.rgb_weight = parse_value(key, raw)?,
            "cluster.dist_weight" => self.cluster.dist_weight = parse_value(key, raw)?,
            "cluster.d_max" => self.cluster.d_max = parse_value(key, raw)?,
            "cluster.kmeans_iters" => self.cluster.kmeans_iters = parse_value(key, raw)?,
            "cluster.kmeans_tol" => self.cluster.kmeans_tol = parse_value(key, raw)?,
            "cluster.min_area" => self.cluster.min_area = parse_value(key, raw)?,
            "cluster.opening_radius" => self.cluster.opening_radius = parse_value(key, raw)?,
            "ema.decay" => self.ema_decay = parse_value(key, raw)?,
            "ema.period" => self.ema_period = parse_value(key, raw)?,
            "kl.mode" => self.kl_mode = parse_kl_mode(raw)?,
            "schedule.eta" => self.schedule.eta = parse_value(key, raw)?,
            "schedule.epsilon" => self.schedule.epsilon = parse_value(key, raw)?,
            "schedule.max_epochs" => self.schedule.max_epochs = parse_value(key, raw)?,
            "eval.threshold" => self.eval.threshold = parse_value(key, raw)?,
            "eval.min_area" => self.eval.min_area = parse_value(key, raw)?,
            _ => bail!("unknown key {key:?}"),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Unknown or repeated
    /// keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {lineno}: expected key = value"))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                bail!("line {lineno}: duplicate key {key:?}");
            }
            cfg.set(key, value.trim()).with_context(|| format!("line {lineno}"))?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Applies `POINTPROP_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|e| anyhow!("{SEED_ENV}: cannot parse {raw:?}: {e}"))?;
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        self.cluster_config().validate()?;
        self.schedule.validate()?;
        EmaState::new(self.ema_decay, self.ema_period)?;
        let s = &self.stain;
        if s.iters == 0 || s.tol.is_nan() || s.tol < 0.0 || s.tissue_threshold.is_nan() || s.tissue_threshold < 0.0 {
            bail!("stain settings: iters must be positive, tol and tissue_threshold non-negative");
        }
        if !(0.0..=1.0).contains(&s.tissue_fraction) {
            bail!("stain.tissue_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.eval.threshold) {
            bail!("eval.threshold must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn stain_config(&self) -> StainConfig {
        StainConfig {
            seed: self.seed,
            ..self.stain.clone()
        }
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            seed: self.seed,
            ..self.cluster.clone()
        }
    }

    /// Every key with its effective value, in a fixed order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("write to String");
        put("seed", self.seed.to_string());
        put("stain.iters", self.stain.iters.to_string());
        put("stain.tol", self.stain.tol.to_string());
        put("stain.tissue_threshold", self.stain.tissue_threshold.to_string());
        put("stain.tissue_fraction", self.stain.tissue_fraction.to_string());
        put("stain.max_samples", self.stain.max_samples.to_string());
        put("voronoi.point_radius", self.voronoi.point_radius.to_string());
        put("voronoi.edge_width", self.voronoi.edge_width.to_string());
        put("cluster.rgb_weight", self.cluster.rgb_weight.to_string());
        put("cluster.dist_weight", self.cluster.dist_weight.to_string());
        put("cluster.d_max", self.cluster.d_max.to_string());
        put("cluster.kmeans_iters", self.cluster.kmeans_iters.to_string());
        put("cluster.kmeans_tol", self.cluster.kmeans_tol.to_string());
        put("cluster.min_area", self.cluster.min_area.to_string());
        put("cluster.opening_radius", self.cluster.opening_radius.to_string());
        put("ema.decay", self.ema_decay.to_string());
        put("ema.period", self.ema_period.to_string());
        put("kl.mode", kl_mode_name(self.kl_mode).to_string());
        put("schedule.eta", self.schedule.eta.to_string());
        put("schedule.epsilon", self.schedule.epsilon.to_string());
        put("schedule.max_epochs", self.schedule.max_epochs.to_string());
        put("eval.threshold", self.eval.threshold.to_string());
        put("eval.min_area", self.eval.min_area.to_string());
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = PipelineConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg.canonical(), PipelineConfig::default().canonical());
        assert_eq!(cfg.ema_decay, 0.5);
        assert_eq!(cfg.schedule.eta, 1.0);
        assert_eq!(cfg.schedule.epsilon, 0.1);
    }

    #[test]
    fn values_and_comments() {
        let cfg = PipelineConfig::parse("seed = 9  # run a\ncluster.d_max=12.5\nkl.mode = positive-only\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.cluster.d_max, 12.5);
        assert_eq!(cfg.kl_mode, KlMode::PositiveOnly);
        assert_eq!(cfg.cluster_config().seed, 9);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::parse("seed = 1\nclusters.k = 3\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 2"));
        assert!(format!("{err:#}").contains("unknown key"));
    }

    #[test]
    fn duplicate_and_malformed_lines_rejected() {
        assert!(PipelineConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(PipelineConfig::parse("seed 1\n").is_err());
        assert!(PipelineConfig::parse("seed = x\n").is_err());
    }

    #[test]
    fn invariants_checked() {
        assert!(PipelineConfig::parse("ema.decay = 0\n").is_err());
        assert!(PipelineConfig::parse("cluster.dist_weight = -1\n").is_err());
        assert!(PipelineConfig::parse("schedule.max_epochs = 0\n").is_err());
    }

    #[test]
    fn canonical_text_reparses_to_the_same_hash() {
        let cfg = PipelineConfig::parse("seed = 4\nstain.tol = 1e-7\ncluster.rgb_weight = 0.3\n").unwrap();
        let again = PipelineConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(again.hash(), cfg.hash());
        assert_ne!(cfg.hash(), PipelineConfig::default().hash());
    }
}
