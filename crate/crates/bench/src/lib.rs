//! Runtime and logical-memory comparison of the vectorized event path
//! against the sequential reference path.

pub mod memory;
mod report;

use std::time::Instant;

use bandsim_core::event::synthetic::{random_walk_stack, WalkParams};
use bandsim_core::{
    accumulate_tensor, diff_tensors, oracle_event_stream, vectorized_event_tensor, BinningConfig,
    ContrastConfig, DiffReport, EventTensor, LogFrameStack,
};
use serde::{Deserialize, Serialize};

pub use memory::{oracle_ledger, vectorized_ledger, BatchShape, MemoryLedger};
pub use report::{read_report, write_report, write_report_json, BenchReport, BenchRow, Method, REPORT_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] bandsim_core::Error),

    #[error("methods disagree at env_count {env_count}, environment {env}: {} differing cells, total difference {}", .report.num_mismatched_cells, .report.total_abs_difference)]
    Mismatch {
        env_count: usize,
        env: usize,
        report: DiffReport,
    },
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub env_counts: Vec<usize>,
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub contrast: f64,
    pub bins: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub frame_period: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            env_counts: vec![1, 5, 10, 15, 20, 25],
            height: 240,
            width: 320,
            frames: 240,
            contrast: 0.2,
            bins: 5,
            repetitions: 3,
            seed: 0,
            frame_period: 0.01,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> bandsim_core::Result<()> {
        use bandsim_core::Error;
        if self.env_counts.is_empty() {
            return Err(Error::invalid("env_counts", "must not be empty"));
        }
        if self.env_counts.contains(&0) {
            return Err(Error::invalid("env_counts", "entries must be positive"));
        }
        if self.repetitions < 3 {
            return Err(Error::invalid(
                "repetitions",
                format!("must be at least 3, got {}", self.repetitions),
            ));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::invalid("resolution", "height and width must be positive"));
        }
        if self.height > u16::MAX as usize || self.width > u16::MAX as usize {
            return Err(Error::invalid("resolution", "height and width must fit in 16 bits"));
        }
        if !(self.frame_period.is_finite() && self.frame_period > 0.0) {
            return Err(Error::invalid("frame_period", "must be positive"));
        }
        self.contrast_config().validate()?;
        self.binning().validate(self.frames)
    }

    pub fn contrast_config(&self) -> ContrastConfig {
        ContrastConfig::new(self.contrast)
    }

    pub fn binning(&self) -> BinningConfig {
        BinningConfig::new(self.bins)
    }

    /// The input stack for one environment. Environment `i` is the same
    /// stack at every env_count.
    pub fn environment(&self, env: usize) -> bandsim_core::Result<LogFrameStack> {
        random_walk_stack(
            self.seed.wrapping_add(env as u64),
            (self.frames, self.height, self.width),
            &WalkParams::default(),
            self.frame_period,
        )
    }
}

pub fn run_vectorized(stack: &LogFrameStack, cfg: &BenchConfig) -> bandsim_core::Result<EventTensor> {
    vectorized_event_tensor(stack, &cfg.contrast_config(), cfg.binning())
}

pub fn run_oracle(stack: &LogFrameStack, cfg: &BenchConfig) -> bandsim_core::Result<EventTensor> {
    let stream = oracle_event_stream(stack, &cfg.contrast_config())?;
    accumulate_tensor(&stream, stack.len(), cfg.binning())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

struct Point {
    vectorized: Vec<f64>,
    oracle: Vec<f64>,
    events: u64,
}

/// Environments are generated and run one at a time so that memory use stays
/// bounded; each repetition's runtime is the sum over environments. The
/// first run of each method on each environment is a warm-up and is not
/// timed.
fn run_point(cfg: &BenchConfig, env_count: usize) -> BenchResult<Point> {
    let reps = cfg.repetitions;
    let mut point = Point {
        vectorized: vec![0.0; reps],
        oracle: vec![0.0; reps],
        events: 0,
    };
    for env in 0..env_count {
        let stack = cfg.environment(env)?;
        let fast = run_vectorized(&stack, cfg)?;
        let slow = run_oracle(&stack, cfg)?;
        let report = diff_tensors(&fast, &slow)?;
        if !report.is_equal() {
            return Err(BenchError::Mismatch { env_count, env, report });
        }
        point.events += slow.total();
        for r in 0..reps {
            let (out, secs) = timed(|| run_vectorized(&stack, cfg));
            out?;
            point.vectorized[r] += secs;
            let (out, secs) = timed(|| run_oracle(&stack, cfg));
            out?;
            point.oracle[r] += secs;
        }
    }
    Ok(point)
}

fn summarize(times: &[f64]) -> (f64, f64) {
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let max = times.iter().cloned().fold(0.0, f64::max);
    (mean, max)
}

pub fn run_benchmark(cfg: &BenchConfig) -> BenchResult<BenchReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(2 * cfg.env_counts.len());
    for &env_count in &cfg.env_counts {
        let point = run_point(cfg, env_count)?;
        let shape = BatchShape {
            envs: env_count as u64,
            frames: cfg.frames as u64,
            height: cfg.height as u64,
            width: cfg.width as u64,
            bins: cfg.bins as u64,
        };
        for (method, times, ledger) in [
            (Method::Vectorized, &point.vectorized, vectorized_ledger(&shape)),
            (Method::Oracle, &point.oracle, oracle_ledger(&shape, point.events)),
        ] {
            let (mean_runtime_s, max_runtime_s) = summarize(times);
            rows.push(BenchRow {
                method,
                env_count,
                mean_runtime_s,
                max_runtime_s,
                peak_bytes: ledger.peak(),
                mean_bytes: ledger.mean(),
                correct: true,
            });
        }
    }
    Ok(BenchReport::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchConfig {
        BenchConfig {
            env_counts: vec![1],
            height: 8,
            width: 8,
            frames: 8,
            bins: 2,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn minimal_config_gives_two_checked_rows() {
        let report = run_benchmark(&tiny()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].method, Method::Oracle);
        assert_eq!(report.rows[1].method, Method::Vectorized);
        assert!(report.rows.iter().all(|r| r.correct && r.env_count == 1));
        assert!(report.rows.iter().all(|r| r.max_runtime_s >= r.mean_runtime_s));
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            (BenchConfig { env_counts: vec![], ..tiny() }, "env_counts"),
            (BenchConfig { env_counts: vec![1, 0], ..tiny() }, "env_counts"),
            (BenchConfig { repetitions: 2, ..tiny() }, "repetitions"),
            (BenchConfig { contrast: 0.0, ..tiny() }, "contrast"),
            (BenchConfig { bins: 9, ..tiny() }, "bins"),
        ];
        for (cfg, field) in cases {
            let err = cfg.validate().unwrap_err().to_string();
            assert!(err.contains(field), "{err}");
        }
    }

    #[test]
    fn environments_are_stable() {
        let cfg = tiny();
        assert_eq!(cfg.environment(3).unwrap(), cfg.environment(3).unwrap());
        assert_ne!(cfg.environment(3).unwrap(), cfg.environment(4).unwrap());
    }

    #[test]
    fn memory_columns_grow_with_env_count() {
        let cfg = BenchConfig {
            env_counts: vec![2, 1, 4],
            ..tiny()
        };
        let report = run_benchmark(&cfg).unwrap();
        let counts: Vec<usize> = report.rows.iter().map(|r| r.env_count).collect();
        assert_eq!(counts, [1, 2, 4, 1, 2, 4]);
        for method in [Method::Oracle, Method::Vectorized] {
            let rows: Vec<_> = report.rows.iter().filter(|r| r.method == method).collect();
            assert!(rows.windows(2).all(|w| w[0].peak_bytes <= w[1].peak_bytes));
            let ratio = rows[2].mean_bytes as f64 / rows[1].mean_bytes as f64;
            assert!((ratio - 2.0).abs() <= 0.4, "{method:?} {ratio}");
        }
    }
}
