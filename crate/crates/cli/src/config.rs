//! Optional JSON run configuration. Command-line flags take precedence over
//! values read from the file.

use std::path::{Path, PathBuf};

use bandsim_core::reward::{EpisodeConfig, RewardWeights};
use bandsim_core::scene::PoissonConfig;
use bandsim_core::{Error, Polarity, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

impl From<Direction> for Polarity {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Positive => Polarity::Positive,
            Direction::Negative => Polarity::Negative,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub contrast: Option<f64>,
    pub offset: Option<f64>,
    pub initial_direction: Option<Direction>,
    pub bins: Option<usize>,
    pub log_epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub poisson: Option<PoissonConfig>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub fov_deg: Option<f64>,
    pub max_range: Option<f64>,
    pub frame_rate: Option<f64>,
    pub length: Option<f64>,
    pub speed: Option<f64>,
    pub yaw_deg: Option<f64>,
    pub start: Option<[f64; 3]>,
    pub command: Option<[f64; 3]>,
    pub weights: Option<RewardWeights>,
    pub episode: Option<EpisodeConfig>,
    pub map_bins: Option<usize>,
    pub bin_span_deg: Option<f64>,
    pub env_counts: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub frames: Option<usize>,
}

/// Where a group of settings came from, for error messages.
#[derive(Debug, Clone)]
pub enum Origin {
    Flags,
    File(PathBuf),
    Defaults,
}

impl Origin {
    pub fn label(&self) -> String {
        match self {
            Origin::Flags => "command line".into(),
            Origin::File(p) => p.display().to_string(),
            Origin::Defaults => "defaults".into(),
        }
    }

    /// Attach this origin to a validation error.
    pub fn blame(&self, e: Error) -> Error {
        e.in_file(Path::new(&self.label()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub file: FileConfig,
    pub path: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: format!("config {}", path.display()),
            source,
        })?;
        Ok(Self {
            file,
            path: Some(path.to_path_buf()),
        })
    }

    /// Origin of a group of settings: the command line if any of its flags
    /// was given, else the config file if it set any of them.
    pub fn origin(&self, flag_given: bool, file_given: bool) -> Origin {
        match (&self.path, flag_given, file_given) {
            (_, true, _) => Origin::Flags,
            (Some(p), false, true) => Origin::File(p.clone()),
            _ => Origin::Defaults,
        }
    }
}

/// Flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Parse a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(field: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid(field, format!("cannot parse {:?} in {text:?}", s.trim())))
        })
        .collect()
}

pub fn parse_vec3(field: &str, text: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = parse_list(field, text)?;
    <[f64; 3]>::try_from(v).map_err(|_| Error::invalid(field, format!("expected three comma-separated numbers, got {text:?}")))
}

/// Reward weights given inline as JSON or as a path to a JSON file.
pub fn parse_weights(text: &str) -> Result<RewardWeights> {
    let trimmed = text.trim_start();
    let (json, source) = if trimmed.starts_with('{') {
        (text.to_string(), "--weights".to_string())
    } else {
        let path = Path::new(text);
        (
            std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
            path.display().to_string(),
        )
    };
    let w: RewardWeights = serde_json::from_str(&json).map_err(|source_err| Error::Json {
        context: format!("reward weights ({source})"),
        source: source_err,
    })?;
    w.validate().map_err(|e| e.in_file(Path::new(&source)))?;
    Ok(w)
}
