//! `bandsim`: scene generation, rendering, event simulation, distance maps,
//! reward evaluation and benchmarking from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Direction;

#[derive(Parser, Debug)]
#[command(name = "bandsim", version, about = "Event-camera simulation for quadrotor forest flight")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Random seed for scene sampling and synthetic inputs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ContrastArgs {
    #[arg(long)]
    pub contrast: Option<f64>,
    /// Reference offset subtracted before banding.
    #[arg(long, allow_hyphen_values = true)]
    pub offset: Option<f64>,
    #[arg(long, value_enum)]
    pub initial_direction: Option<Direction>,
    /// Epsilon of the log transform for 8-bit inputs.
    #[arg(long)]
    pub log_epsilon: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct CameraArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Horizontal field of view in degrees.
    #[arg(long)]
    pub fov_deg: Option<f64>,
    #[arg(long)]
    pub max_range: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a Poisson forest and write scene.json.
    GenScene {
        /// Trees per square meter.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Write a straight constant-speed trajectory to trajectory.csv.
    GenTrajectory {
        #[arg(long, value_name = "X,Y,Z", allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        yaw_deg: Option<f64>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long)]
        frame_rate: Option<f64>,
    },
    /// Render a scene along a trajectory into frames.evf and depth.evf.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[command(flatten)]
        camera: CameraArgs,
    },
    /// Dense event tensor from a frame file, written to events.evt.
    Events {
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        contrast: ContrastArgs,
        /// Number of temporal bins.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Sequential reference events, written to oracle.evs and oracle.evt.
    Oracle {
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        contrast: ContrastArgs,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Compare two event tensors; exit status 0 iff they are equal.
    Compare { lhs: PathBuf, rhs: PathBuf },
    /// Teacher map from a scene and pose, or student map from a depth frame.
    Distmap {
        #[arg(long, requires = "pose", conflicts_with = "depth")]
        scene: Option<PathBuf>,
        /// Position and heading as x,y,z,yaw_deg[,pitch_deg,roll_deg].
        #[arg(long, allow_hyphen_values = true)]
        pose: Option<String>,
        #[arg(long)]
        depth: Option<PathBuf>,
        /// Frame index within the depth file.
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long)]
        map_bins: Option<usize>,
        #[arg(long)]
        bin_span_deg: Option<f64>,
        #[arg(long)]
        fov_deg: Option<f64>,
        #[arg(long)]
        max_range: Option<f64>,
    },
    /// Per-step rewards and episode statistics for a trajectory.
    RewardEval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Commanded velocity vx,vy,vz in m/s.
        #[arg(long, allow_hyphen_values = true)]
        command: Option<String>,
        /// Reward weights as inline JSON or a path to a JSON file.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Compare runtime and logical memory of both event paths.
    Bench {
        #[arg(long, value_name = "N,N,...")]
        env_counts: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        contrast: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
