use std::fmt::Write as _;
use std::io::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bandsim_bench::{run_benchmark, write_report, write_report_json, BenchConfig, BenchError};
use bandsim_core::event::container::{read_tensor, write_stream, write_tensor, FrameFile, FrameKind, FramePayload};
use bandsim_core::fmt::sig9;
use bandsim_core::reward::{
    episode_report_csv, evaluate_episode, rewards_csv, rollout_rewards, CommandInput, EpisodeConfig, EpisodeRecord,
    RewardWeights,
};
use bandsim_core::scene::{
    make_trajectory, sample_forest, student_distance_map, teacher_bin_interval, teacher_distance_map,
    CameraPose, CameraTrajectory, ForestScene, PathSpec, PoissonConfig, RenderConfig, SpeedProfile, WorldBox,
    DEFAULT_BIN_SPAN_DEG, DEFAULT_NUM_BINS,
};
use bandsim_core::{
    accumulate_tensor, diff_tensors, oracle_event_stream, vectorized_event_tensor, BinningConfig, ContrastConfig,
    Error, LogFrameStack, Polarity, Result,
};

use crate::config::{parse_list, parse_vec3, parse_weights, pick, Settings};
use crate::{CameraArgs, Cli, Command, ContrastArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 2;

const DEFAULT_CONTRAST: f64 = 0.2;
const DEFAULT_EVENT_BINS: usize = 5;
const DEFAULT_ALTITUDE: f64 = 2.0;
const DEFAULT_LENGTH: f64 = 45.0;
const DEFAULT_SPEED: f64 = 9.0;
const DEFAULT_FRAME_RATE: f64 = 50.0;
const DEFAULT_COMMAND: [f64; 3] = [8.0, 0.0, 0.0];

pub fn run(cli: Cli) -> Result<u8> {
    let settings = Settings::load(cli.global.config.as_deref())?;
    let file = &settings.file;
    if let Some(n) = cli.global.threads.or(file.threads) {
        if n == 0 {
            let origin = settings.origin(cli.global.threads.is_some(), true);
            return Err(origin.blame(Error::invalid("threads", "must be >= 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
    }
    let seed = pick(cli.global.seed, file.seed, 0);
    let out = cli.global.out.clone();
    if !matches!(cli.command, Command::Compare { .. }) {
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    }
    let ctx = Ctx { settings: &settings, seed, out };

    match cli.command {
        Command::GenScene { delta } => ctx.gen_scene(delta),
        Command::GenTrajectory {
            start,
            yaw_deg,
            length,
            speed,
            frame_rate,
        } => ctx.gen_trajectory(start, yaw_deg, length, speed, frame_rate),
        Command::Render { scene, trajectory, camera } => ctx.render(&scene, &trajectory, &camera),
        Command::Events { frames, contrast, bins } => ctx.events(&frames, &contrast, bins),
        Command::Oracle { frames, contrast, bins } => ctx.oracle(&frames, &contrast, bins),
        Command::Compare { lhs, rhs } => compare(&lhs, &rhs),
        Command::Distmap {
            scene,
            pose,
            depth,
            frame,
            map_bins,
            bin_span_deg,
            fov_deg,
            max_range,
        } => ctx.distmap(DistmapArgs {
            scene,
            pose,
            depth,
            frame,
            map_bins,
            bin_span_deg,
            fov_deg,
            max_range,
        }),
        Command::RewardEval {
            scene,
            trajectory,
            command,
            weights,
        } => ctx.reward_eval(&scene, &trajectory, command, weights),
        Command::Bench {
            env_counts,
            reps,
            width,
            height,
            frames,
            contrast,
            bins,
        } => ctx.bench(BenchArgs {
            env_counts,
            reps,
            width,
            height,
            frames,
            contrast,
            bins,
        }),
    }
}

struct Ctx<'a> {
    settings: &'a Settings,
    seed: u64,
    out: PathBuf,
}

struct DistmapArgs {
    scene: Option<PathBuf>,
    pose: Option<String>,
    depth: Option<PathBuf>,
    frame: usize,
    map_bins: Option<usize>,
    bin_span_deg: Option<f64>,
    fov_deg: Option<f64>,
    max_range: Option<f64>,
}

struct BenchArgs {
    env_counts: Option<String>,
    reps: Option<usize>,
    width: Option<usize>,
    height: Option<usize>,
    frames: Option<usize>,
    contrast: Option<f64>,
    bins: Option<usize>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn gen_scene(&self, delta: Option<f64>) -> Result<u8> {
        let file = &self.settings.file;
        let base = file.poisson.unwrap_or_default();
        let cfg = PoissonConfig {
            delta: pick(delta, file.delta, base.delta),
            ..base
        };
        let origin = self
            .settings
            .origin(delta.is_some(), file.delta.is_some() || file.poisson.is_some());
        cfg.validate().map_err(|e| origin.blame(e))?;
        let scene = sample_forest(&cfg, self.seed)?;
        scene.write(&self.path("scene.json"))?;
        Ok(EXIT_OK)
    }

    fn gen_trajectory(
        &self,
        start: Option<String>,
        yaw_deg: Option<f64>,
        length: Option<f64>,
        speed: Option<f64>,
        frame_rate: Option<f64>,
    ) -> Result<u8> {
        let file = &self.settings.file;
        let flags = start.is_some() || yaw_deg.is_some() || length.is_some() || speed.is_some() || frame_rate.is_some();
        let in_file = file.start.is_some()
            || file.yaw_deg.is_some()
            || file.length.is_some()
            || file.speed.is_some()
            || file.frame_rate.is_some();
        let origin = self.settings.origin(flags, in_file);
        let start = match start {
            Some(s) => Some(parse_vec3("start", &s).map_err(|e| origin.blame(e))?),
            None => None,
        };
        let [x0, y0] = WorldBox::default().left_edge_center();
        let path = PathSpec::Straight {
            start: pick(start, file.start, [x0, y0, DEFAULT_ALTITUDE]),
            yaw: pick(yaw_deg, file.yaw_deg, 0.0).to_radians(),
            length: pick(length, file.length, DEFAULT_LENGTH),
        };
        let speed = SpeedProfile::Constant {
            speed: pick(speed, file.speed, DEFAULT_SPEED),
        };
        let rate = pick(frame_rate, file.frame_rate, DEFAULT_FRAME_RATE);
        let traj = make_trajectory(&path, speed, rate, None).map_err(|e| origin.blame(e))?;
        traj.write(&self.path("trajectory.csv"))?;
        Ok(EXIT_OK)
    }

    fn camera(&self, args: &CameraArgs) -> Result<RenderConfig> {
        let file = &self.settings.file;
        let d = RenderConfig::default();
        let cfg = RenderConfig {
            width: pick(args.width, file.width, d.width),
            height: pick(args.height, file.height, d.height),
            horizontal_fov: args
                .fov_deg
                .or(file.fov_deg)
                .map_or(d.horizontal_fov, f64::to_radians),
            max_range: pick(args.max_range, file.max_range, d.max_range),
            log_epsilon: file.log_epsilon.unwrap_or(d.log_epsilon),
        };
        let origin = self.settings.origin(
            args.width.is_some() || args.height.is_some() || args.fov_deg.is_some() || args.max_range.is_some(),
            file.width.is_some() || file.height.is_some() || file.fov_deg.is_some() || file.max_range.is_some(),
        );
        cfg.validate().map_err(|e| origin.blame(e))?;
        Ok(cfg)
    }

    fn render(&self, scene_path: &Path, traj_path: &Path, camera: &CameraArgs) -> Result<u8> {
        let cfg = self.camera(camera)?;
        let scene = ForestScene::read(scene_path)?;
        let traj = CameraTrajectory::read(traj_path)?;
        let (frames, depth) = bandsim_core::scene::render_frames(&scene, &traj, &cfg).map_err(|e| e.in_file(traj_path))?;
        FrameFile::from_log_stack(&frames).write(&self.path("frames.evf"))?;
        FrameFile::depth(depth.to_f32(), traj.frame_period()).write(&self.path("depth.evf"))?;
        Ok(EXIT_OK)
    }

    fn contrast(&self, args: &ContrastArgs) -> Result<ContrastConfig> {
        let file = &self.settings.file;
        let dir = args.initial_direction.or(file.initial_direction).map_or(Polarity::Positive, Into::into);
        let cfg = ContrastConfig::new(pick(args.contrast, file.contrast, DEFAULT_CONTRAST))
            .with_offset(pick(args.offset, file.offset, 0.0))
            .with_initial_direction(dir);
        let origin = self.settings.origin(
            args.contrast.is_some() || args.offset.is_some() || args.initial_direction.is_some(),
            file.contrast.is_some() || file.offset.is_some() || file.initial_direction.is_some(),
        );
        cfg.validate().map_err(|e| origin.blame(e))?;
        Ok(cfg)
    }

    fn load_frames(&self, path: &Path, args: &ContrastArgs) -> Result<LogFrameStack> {
        let eps = pick(
            args.log_epsilon,
            self.settings.file.log_epsilon,
            bandsim_core::event::DEFAULT_LOG_EPSILON,
        );
        FrameFile::read(path)?.to_log_stack(eps).map_err(|e| e.in_file(path))
    }

    fn binning(&self, bins: Option<usize>, frames: usize) -> Result<BinningConfig> {
        let file = &self.settings.file;
        let cfg = BinningConfig::new(pick(bins, file.bins, DEFAULT_EVENT_BINS));
        let origin = self.settings.origin(bins.is_some(), file.bins.is_some());
        cfg.validate(frames).map_err(|e| origin.blame(e))?;
        Ok(cfg)
    }

    fn events(&self, frames: &Path, args: &ContrastArgs, bins: Option<usize>) -> Result<u8> {
        let cfg = self.contrast(args)?;
        let stack = self.load_frames(frames, args)?;
        let bins = self.binning(bins, stack.len())?;
        let tensor = vectorized_event_tensor(&stack, &cfg, bins).map_err(|e| e.in_file(frames))?;
        write_tensor(&tensor, &self.path("events.evt"))?;
        Ok(EXIT_OK)
    }

    fn oracle(&self, frames: &Path, args: &ContrastArgs, bins: Option<usize>) -> Result<u8> {
        let cfg = self.contrast(args)?;
        let stack = self.load_frames(frames, args)?;
        let bins = self.binning(bins, stack.len())?;
        let stream = oracle_event_stream(&stack, &cfg).map_err(|e| e.in_file(frames))?;
        write_stream(&stream, &self.path("oracle.evs"))?;
        let tensor = accumulate_tensor(&stream, stack.len(), bins)?;
        write_tensor(&tensor, &self.path("oracle.evt"))?;
        Ok(EXIT_OK)
    }

    fn map_geometry(&self, args: &DistmapArgs) -> Result<(usize, f64, f64)> {
        let file = &self.settings.file;
        let n = pick(args.map_bins, file.map_bins, DEFAULT_NUM_BINS);
        let span = pick(args.bin_span_deg, file.bin_span_deg, DEFAULT_BIN_SPAN_DEG).to_radians();
        let max_range = pick(args.max_range, file.max_range, RenderConfig::default().max_range);
        let origin = self.settings.origin(
            args.map_bins.is_some() || args.bin_span_deg.is_some() || args.max_range.is_some(),
            file.map_bins.is_some() || file.bin_span_deg.is_some() || file.max_range.is_some(),
        );
        if n == 0 {
            return Err(origin.blame(Error::invalid("map_bins", "need at least one bin")));
        }
        if !(span.is_finite() && span > 0.0 && n as f64 * span < std::f64::consts::TAU) {
            return Err(origin.blame(Error::invalid(
                "bin_span_deg",
                format!("{n} bins must cover less than a full turn"),
            )));
        }
        if !(max_range.is_finite() && max_range > 0.0) {
            return Err(origin.blame(Error::invalid("max_range", "must be > 0")));
        }
        Ok((n, span, max_range))
    }

    fn distmap(&self, args: DistmapArgs) -> Result<u8> {
        let (n, span, max_range) = self.map_geometry(&args)?;
        let mut csv = String::new();
        match (&args.scene, &args.pose, &args.depth) {
            (Some(scene_path), Some(pose), None) => {
                let scene = ForestScene::read(scene_path)?;
                let pose = parse_pose(pose)?;
                let map = teacher_distance_map(&scene, &pose, n, span, max_range)?;
                csv.push_str("bin,bearing_start_rad,bearing_end_rad,distance_m\n");
                for (i, d) in map.bins.iter().enumerate() {
                    let iv = teacher_bin_interval(pose.yaw, i, n, span);
                    let _ = writeln!(csv, "{i},{},{},{}", sig9(iv.start), sig9(iv.end), sig9(*d));
                }
            }
            (None, None, Some(depth_path)) => {
                let file = FrameFile::read(depth_path)?;
                let depth = match (file.kind, &file.payload) {
                    (FrameKind::DepthF32, FramePayload::F32(a)) => a,
                    _ => {
                        return Err(Error::invalid("dtype", "expected a depth file (dtype 2)").in_file(depth_path));
                    }
                };
                let (t, h, w) = depth.dim();
                if args.frame >= t {
                    return Err(Error::invalid("frame", format!("index {} out of range for {t} frames", args.frame))
                        .in_file(depth_path));
                }
                let cam = self.camera(&CameraArgs {
                    width: Some(w),
                    height: Some(h),
                    fov_deg: args.fov_deg,
                    max_range: Some(max_range),
                })?;
                let view = depth.index_axis(ndarray::Axis(0), args.frame).mapv(f64::from);
                let map = student_distance_map(view.view(), &cam, n, span)?;
                csv.push_str("band,bin,distance_m\n");
                for band in 0..3 {
                    for (i, d) in map.band(band).iter().enumerate() {
                        let _ = writeln!(csv, "{band},{i},{}", sig9(*d));
                    }
                }
            }
            _ => {
                return Err(Error::invalid(
                    "distmap inputs",
                    "give either --scene with --pose, or --depth",
                ))
            }
        }
        write_text(&self.path("distmap.csv"), &csv)?;
        Ok(EXIT_OK)
    }

    fn reward_eval(
        &self,
        scene_path: &Path,
        traj_path: &Path,
        command: Option<String>,
        weights: Option<String>,
    ) -> Result<u8> {
        let file = &self.settings.file;
        let command_origin = self.settings.origin(command.is_some(), file.command.is_some());
        let command = match command {
            Some(c) => Some(parse_vec3("command", &c).map_err(|e| command_origin.blame(e))?),
            None => None,
        };
        let cmd = CommandInput::new(pick(command, file.command, DEFAULT_COMMAND).into())
            .map_err(|e| command_origin.blame(e))?;
        let weights: RewardWeights = match weights {
            Some(w) => parse_weights(&w)?,
            None => {
                let w = file.weights.unwrap_or_default();
                w.validate().map_err(|e| self.settings.origin(false, true).blame(e))?;
                w
            }
        };
        let episode: EpisodeConfig = file.episode.unwrap_or_default();
        let scene = ForestScene::read(scene_path)?;
        let traj = CameraTrajectory::read(traj_path)?;
        let rows = rollout_rewards(&scene, &traj, &cmd, &weights, &episode)?;
        write_text(&self.path("rewards.csv"), &rewards_csv(&rows))?;
        let stats = evaluate_episode(&scene, &traj, &cmd, &episode);
        let record = EpisodeRecord {
            episode_id: 0,
            seed: scene.seed,
            poisson_delta: scene.poisson_delta,
            stats,
        };
        write_text(&self.path("episode.csv"), &episode_report_csv(&[record]))?;
        let _ = writeln!(
            std::io::stdout(),
            "success={} distance_m={} mean_velocity_mps={}",
            stats.success,
            sig9(stats.distance_along_command),
            sig9(stats.mean_velocity)
        );
        Ok(EXIT_OK)
    }

    fn bench(&self, args: BenchArgs) -> Result<u8> {
        let file = &self.settings.file;
        let d = BenchConfig::default();
        let origin = self.settings.origin(
            args.env_counts.is_some()
                || args.reps.is_some()
                || args.width.is_some()
                || args.height.is_some()
                || args.frames.is_some()
                || args.contrast.is_some()
                || args.bins.is_some(),
            file.env_counts.is_some()
                || file.reps.is_some()
                || file.width.is_some()
                || file.height.is_some()
                || file.frames.is_some()
                || file.contrast.is_some()
                || file.bins.is_some(),
        );
        let env_counts = match args.env_counts {
            Some(s) => Some(parse_list("env_counts", &s).map_err(|e| origin.blame(e))?),
            None => None,
        };
        let cfg = BenchConfig {
            env_counts: pick(env_counts, file.env_counts.clone(), d.env_counts),
            height: pick(args.height, file.height, d.height),
            width: pick(args.width, file.width, d.width),
            frames: pick(args.frames, file.frames, d.frames),
            contrast: pick(args.contrast, file.contrast, d.contrast),
            bins: pick(args.bins, file.bins, d.bins),
            repetitions: pick(args.reps, file.reps, d.repetitions),
            seed: self.seed,
            frame_period: d.frame_period,
        };
        cfg.validate().map_err(|e| origin.blame(e))?;
        match run_benchmark(&cfg) {
            Ok(report) => {
                write_report(&report, &self.path("bench.csv"))?;
                write_report_json(&report, &cfg, &self.path("bench.json"))?;
                Ok(EXIT_OK)
            }
            Err(BenchError::Core(e)) => Err(e),
            Err(e @ BenchError::Mismatch { .. }) => {
                eprintln!("error: {e}");
                if let BenchError::Mismatch { report, .. } = &e {
                    eprintln!("{}", serde_json::to_string_pretty(report).unwrap_or_default());
                }
                Ok(EXIT_MISMATCH)
            }
        }
    }
}

/// `x,y,z,yaw_deg[,pitch_deg,roll_deg]`.
fn parse_pose(text: &str) -> Result<CameraPose> {
    let v: Vec<f64> = parse_list("pose", text)?;
    let pose = match v[..] {
        [x, y, z, yaw] => CameraPose::new([x, y, z], yaw.to_radians(), 0.0),
        [x, y, z, yaw, pitch, roll] => {
            CameraPose::new([x, y, z], yaw.to_radians(), 0.0).with_attitude(pitch.to_radians(), roll.to_radians())
        }
        _ => {
            return Err(Error::invalid(
                "pose",
                format!("expected x,y,z,yaw_deg or x,y,z,yaw_deg,pitch_deg,roll_deg, got {text:?}"),
            ))
        }
    };
    pose.validate()?;
    Ok(pose)
}

fn compare(lhs: &Path, rhs: &Path) -> Result<u8> {
    let a = read_tensor(lhs)?;
    let b = read_tensor(rhs)?;
    match diff_tensors(&a, &b) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            let _ = writeln!(std::io::stdout(), "{json}");
            Ok(if report.is_equal() { EXIT_OK } else { EXIT_MISMATCH })
        }
        Err(e) => {
            eprintln!("tensors are not comparable: {e}");
            Ok(EXIT_MISMATCH)
        }
    }
}
