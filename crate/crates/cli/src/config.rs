//! Run configuration: defaults, then an optional TOML file, then `MODS_*`
//! environment variables and command-line flags (flags win over env).

use std::path::Path;

use clap::Args;
use mods_core::ann::IndexMode;
use mods_core::descriptor::DescriptorConfig;
use mods_core::matcher::MatchConfig;
use mods_core::segmenter::SegmenterConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every random choice; overrides a fixture spec's own seed.
    pub seed: Option<u64>,
    /// Worker threads; logical CPU count when unset.
    pub jobs: Option<usize>,
    /// Per-component noise for `embed --mode synth`.
    pub noise: f64,
    pub matcher: MatchConfig,
    pub descriptor: DescriptorConfig,
    pub segmenter: SegmenterConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            jobs: None,
            noise: 0.15,
            matcher: MatchConfig::default(),
            descriptor: DescriptorConfig::default(),
            segmenter: SegmenterConfig::default(),
        }
    }
}

/// Settings that may come from flags or the environment.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file with optional [matcher], [descriptor], [segmenter] sections
    #[arg(long, global = true, env = "MODS_CONFIG")]
    pub config: Option<std::path::PathBuf>,
    /// Seed for all randomness [default: fixture spec seed]
    #[arg(long, global = true, env = "MODS_SEED")]
    pub seed: Option<u64>,
    /// Worker threads [default: logical CPUs]
    #[arg(long, global = true, env = "MODS_JOBS")]
    pub jobs: Option<usize>,
    /// Synthetic embedding noise [default: 0.15]
    #[arg(long, global = true, env = "MODS_NOISE")]
    pub noise: Option<f64>,
    /// Largest cosine distance kept in region matches [default: 0.6]
    #[arg(long, global = true, env = "MODS_GAMMA")]
    pub gamma: Option<f64>,
    /// Lines per region [default: 3]
    #[arg(long, global = true, env = "MODS_REGION_LINES")]
    pub region_lines: Option<u32>,
    /// Line stride between regions [default: 1]
    #[arg(long, global = true, env = "MODS_REGION_STRIDE")]
    pub region_stride: Option<u32>,
    /// Stopword probability threshold [default: 0.7]
    #[arg(long, global = true, env = "MODS_STOPWORD_TAU")]
    pub stopword_tau: Option<f32>,
    /// Nearest-neighbour index: exact | kdtree [default: kdtree]
    #[arg(long, global = true, env = "MODS_INDEX_MODE")]
    pub index_mode: Option<IndexMode>,
    /// KD-tree leaf size [default: 16]
    #[arg(long, global = true, env = "MODS_LEAF_SIZE")]
    pub leaf_size: Option<usize>,
    /// KD-tree leaf budget per query [default: 64]
    #[arg(long, global = true, env = "MODS_MAX_VISITED_LEAVES")]
    pub max_visited_leaves: Option<usize>,
    /// Descriptor canvas height [default: 48]
    #[arg(long, global = true, env = "MODS_CANVAS_HEIGHT")]
    pub canvas_height: Option<u32>,
    /// Descriptor canvas width [default: 128]
    #[arg(long, global = true, env = "MODS_CANVAS_WIDTH")]
    pub canvas_width: Option<u32>,
    /// Descriptor grid rows [default: 6]
    #[arg(long, global = true, env = "MODS_GRID_ROWS")]
    pub grid_rows: Option<u32>,
    /// Descriptor grid columns [default: 16]
    #[arg(long, global = true, env = "MODS_GRID_COLS")]
    pub grid_cols: Option<u32>,
    /// Gradient orientation bins [default: 8]
    #[arg(long, global = true, env = "MODS_ORIENTATION_BINS")]
    pub orientation_bins: Option<u32>,
    /// Append projection profiles to the descriptor [default: true]
    #[arg(long, global = true, env = "MODS_INCLUDE_PROFILES")]
    pub include_profiles: Option<bool>,
    /// Small-component height factor [default: 0.4]
    #[arg(long, global = true, env = "MODS_SMALL_FACTOR")]
    pub small_factor: Option<f64>,
    /// Large-component height factor [default: 2.0]
    #[arg(long, global = true, env = "MODS_LARGE_FACTOR")]
    pub large_factor: Option<f64>,
    /// Pair cost needed to link components into a line [default: 1.5]
    #[arg(long, global = true, env = "MODS_COST_THRESHOLD")]
    pub cost_threshold: Option<f64>,
    /// Page scale as a multiple of median component height [default: 3.0]
    #[arg(long, global = true, env = "MODS_PAGE_SCALE_FACTOR")]
    pub page_scale_factor: Option<f64>,
    /// Comma-separated word gap factors [default: 1,1.5,2]
    #[arg(long, global = true, env = "MODS_GAP_FACTORS", value_delimiter = ',')]
    pub gap_factors: Option<Vec<f64>>,
    /// Fixed binarization threshold [default: Otsu]
    #[arg(long, global = true, env = "MODS_BINARIZE_THRESHOLD")]
    pub binarize_threshold: Option<u8>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Defaults, then the config file named by `o.config`, then `o`.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        c.apply(o);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.jobs.is_some() {
            self.jobs = o.jobs;
        }
        set(&mut self.noise, o.noise);
        let m = &mut self.matcher;
        set(&mut m.gamma, o.gamma);
        set(&mut m.region_lines, o.region_lines);
        set(&mut m.region_stride, o.region_stride);
        set(&mut m.stopword_tau, o.stopword_tau);
        set(&mut m.index.mode, o.index_mode);
        set(&mut m.index.leaf_size, o.leaf_size);
        set(&mut m.index.max_visited_leaves, o.max_visited_leaves);
        let d = &mut self.descriptor;
        set(&mut d.height, o.canvas_height);
        set(&mut d.width, o.canvas_width);
        set(&mut d.grid_rows, o.grid_rows);
        set(&mut d.grid_cols, o.grid_cols);
        set(&mut d.orientation_bins, o.orientation_bins);
        set(&mut d.include_profiles, o.include_profiles);
        let s = &mut self.segmenter;
        set(&mut s.small_factor, o.small_factor);
        set(&mut s.large_factor, o.large_factor);
        set(&mut s.cost_threshold, o.cost_threshold);
        set(&mut s.page_scale_factor, o.page_scale_factor);
        set(&mut s.gap_factors, o.gap_factors.clone());
        if o.binarize_threshold.is_some() {
            s.binarize_threshold = o.binarize_threshold;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: String| CliError::Usage(format!("invalid configuration: {e}"));
        self.matcher.validate().map_err(|e| usage(e.to_string()))?;
        self.descriptor.validate().map_err(usage)?;
        self.segmenter.validate().map_err(usage)?;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(usage("noise must be finite and >= 0".into()));
        }
        if self.jobs == Some(0) {
            return Err(usage("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
