use std::path::Path;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig9;

use super::wrap_angle;

/// Camera pose in a z-up world. The body frame is forward-left-up; the
/// orientation is yaw about z, then pitch about the body y axis (positive
/// tilts the nose down), then roll about the body x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub time: f64,
}

impl CameraPose {
    pub fn new(position: [f64; 3], yaw: f64, time: f64) -> Self {
        Self {
            position,
            yaw: wrap_angle(yaw),
            pitch: 0.0,
            roll: 0.0,
            time,
        }
    }

    pub fn with_attitude(mut self, pitch: f64, roll: f64) -> Self {
        self.pitch = pitch;
        self.roll = roll;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.position.iter().all(|v| v.is_finite())
            && self.yaw.is_finite()
            && self.pitch.is_finite()
            && self.roll.is_finite()
            && self.time.is_finite();
        if !finite {
            return Err(Error::invalid("pose", "all components must be finite"));
        }
        Ok(())
    }

    /// Body-to-world rotation.
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn origin(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

/// Time-ordered poses at a constant frame period.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrajectory {
    poses: Vec<CameraPose>,
    frame_period: f64,
}

impl CameraTrajectory {
    pub fn new(poses: Vec<CameraPose>, frame_period: f64) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::invalid("trajectory", "needs at least one pose"));
        }
        if !(frame_period.is_finite() && frame_period > 0.0) {
            return Err(Error::invalid("frame_period", "must be > 0"));
        }
        for (i, p) in poses.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::invalid(format!("pose {i}"), e.to_string()))?;
        }
        for (i, w) in poses.windows(2).enumerate() {
            let dt = w[1].time - w[0].time;
            let tol = 1e-6 * frame_period.max(w[1].time.abs() * 1e-3);
            if (dt - frame_period).abs() > tol {
                return Err(Error::invalid(
                    "trajectory times",
                    format!("step {} -> {} spans {dt}, expected {frame_period}", i, i + 1),
                ));
            }
        }
        Ok(Self {
            poses: poses
                .into_iter()
                .map(|p| CameraPose {
                    yaw: wrap_angle(p.yaw),
                    ..p
                })
                .collect(),
            frame_period,
        })
    }

    /// Poses sampled at `t0 + k * frame_period`.
    pub fn from_samples(
        samples: impl IntoIterator<Item = ([f64; 3], f64)>,
        frame_period: f64,
        t0: f64,
    ) -> Result<Self> {
        let poses = samples
            .into_iter()
            .enumerate()
            .map(|(k, (p, yaw))| CameraPose::new(p, yaw, t0 + k as f64 * frame_period))
            .collect();
        Self::new(poses, frame_period)
    }

    pub fn poses(&self) -> &[CameraPose] {
        &self.poses
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,x,y,z,yaw,pitch,roll\n");
        for p in &self.poses {
            let row = [p.time, p.position[0], p.position[1], p.position[2], p.yaw, p.pitch, p.roll]
                .map(sig9)
                .join(",");
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form; the frame period is the mean spacing of the rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|source| Error::Csv {
            context: "trajectory header".into(),
            source,
        })?;
        let expected = ["time", "x", "y", "z", "yaw", "pitch", "roll"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::invalid(
                "trajectory header",
                format!("expected {}", expected.join(",")),
            ));
        }
        let mut poses = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|source| Error::Csv {
                context: format!("trajectory row {}", i + 1),
                source,
            })?;
            let v: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("trajectory row {}", i + 1), e.to_string()))?;
            poses.push(CameraPose {
                position: [v[1], v[2], v[3]],
                yaw: v[4],
                pitch: v[5],
                roll: v[6],
                time: v[0],
            });
        }
        let frame_period = match poses.len() {
            0 => return Err(Error::invalid("trajectory", "no rows")),
            1 => 1.0,
            n => (poses[n - 1].time - poses[0].time) / (n - 1) as f64,
        };
        Self::new(poses, frame_period)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| e.in_file(path))
    }
}

/// Geometric path of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Straight {
        start: [f64; 3],
        yaw: f64,
        length: f64,
    },
    /// Constant-curvature horizontal arc; positive curvature turns left.
    Arc {
        start: [f64; 3],
        yaw: f64,
        length: f64,
        curvature: f64,
    },
    /// Catmull-Rom spline through the waypoints.
    Waypoints { points: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedProfile {
    Constant { speed: f64 },
    /// Speed changes linearly in time from `initial` to `final`.
    Linear { initial: f64, r#final: f64 },
}

impl SpeedProfile {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpeedProfile::Constant { speed } => speed.is_finite() && speed > 0.0,
            SpeedProfile::Linear { initial, r#final } => {
                initial.is_finite() && r#final.is_finite() && initial > 0.0 && r#final > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("speed", "speeds must be finite and > 0"))
        }
    }

    fn duration(&self, length: f64) -> f64 {
        match *self {
            SpeedProfile::Constant { speed } => length / speed,
            SpeedProfile::Linear { initial, r#final } => 2.0 * length / (initial + r#final),
        }
    }

    fn distance_at(&self, t: f64, duration: f64) -> f64 {
        match *self {
            SpeedProfile::Constant { speed } => speed * t,
            SpeedProfile::Linear { initial, r#final } => {
                let accel = (r#final - initial) / duration;
                initial * t + 0.5 * accel * t * t
            }
        }
    }
}

/// Arc-length parameterized geometry.
trait PathGeometry {
    fn length(&self) -> f64;
    /// Position and direction of travel at arc length `s`.
    fn sample(&self, s: f64) -> ([f64; 3], f64);
}

struct Line {
    start: [f64; 3],
    yaw: f64,
    length: f64,
}

impl PathGeometry for Line {
    fn length(&self) -> f64 {
        self.length
    }

    fn sample(&self, s: f64) -> ([f64; 3], f64) {
        let [x, y, z] = self.start;
        ([x + s * self.yaw.cos(), y + s * self.yaw.sin(), z], self.yaw)
    }
}

struct CircularArc {
    start: [f64; 3],
    yaw: f64,
    length: f64,
    curvature: f64,
}

impl PathGeometry for CircularArc {
    fn length(&self) -> f64 {
        self.length
    }

    fn sample(&self, s: f64) -> ([f64; 3], f64) {
        let k = self.curvature;
        let [x, y, z] = self.start;
        let heading = self.yaw + k * s;
        let (dx, dy) = if k.abs() < 1e-12 {
            (s * self.yaw.cos(), s * self.yaw.sin())
        } else {
            (
                (heading.sin() - self.yaw.sin()) / k,
                (self.yaw.cos() - heading.cos()) / k,
            )
        };
        ([x + dx, y + dy, z], heading)
    }
}

/// Catmull-Rom spline reparameterized by arc length through a dense lookup
/// table.
struct Spline {
    points: Vec<Vector3<f64>>,
    table: Vec<(f64, f64)>,
}

const SPLINE_SAMPLES_PER_SEGMENT: usize = 256;

impl Spline {
    fn new(points: &[[f64; 3]]) -> Self {
        let points: Vec<Vector3<f64>> = points.iter().map(|p| Vector3::from(*p)).collect();
        let segments = points.len() - 1;
        let n = segments * SPLINE_SAMPLES_PER_SEGMENT;
        let mut table = Vec::with_capacity(n + 1);
        let mut s = 0.0;
        let mut prev = points[0];
        table.push((0.0, 0.0));
        for i in 1..=n {
            let u = i as f64 / SPLINE_SAMPLES_PER_SEGMENT as f64;
            let p = Self::eval(&points, u).0;
            s += (p - prev).norm();
            prev = p;
            table.push((s, u));
        }
        Self { points, table }
    }

    fn eval(points: &[Vector3<f64>], u: f64) -> (Vector3<f64>, Vector3<f64>) {
        let segments = points.len() - 1;
        let i = (u.floor() as usize).min(segments - 1);
        let t = u - i as f64;
        let p1 = points[i];
        let p2 = points[i + 1];
        let p0 = if i == 0 { 2.0 * p1 - p2 } else { points[i - 1] };
        let p3 = if i + 2 < points.len() {
            points[i + 2]
        } else {
            2.0 * p2 - p1
        };
        let (t2, t3) = (t * t, t * t * t);
        let pos = 0.5
            * ((2.0 * p1)
                + (-p0 + p2) * t
                + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
                + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
        let vel = 0.5
            * ((-p0 + p2)
                + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (2.0 * t)
                + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * (3.0 * t2));
        (pos, vel)
    }
}

impl PathGeometry for Spline {
    fn length(&self) -> f64 {
        self.table.last().unwrap().0
    }

    fn sample(&self, s: f64) -> ([f64; 3], f64) {
        let idx = self.table.partition_point(|(len, _)| *len < s).clamp(1, self.table.len() - 1);
        let (s0, u0) = self.table[idx - 1];
        let (s1, u1) = self.table[idx];
        let u = if s1 > s0 {
            u0 + (u1 - u0) * ((s - s0) / (s1 - s0)).clamp(0.0, 1.0)
        } else {
            u0
        };
        let (p, v) = Self::eval(&self.points, u);
        (p.into(), v.y.atan2(v.x))
    }
}

/// Sample a path at a constant frame rate. Yaw follows the direction of
/// travel unless `yaw_override` is given; pitch and roll are zero.
pub fn make_trajectory(
    path: &PathSpec,
    speed: SpeedProfile,
    frame_rate: f64,
    yaw_override: Option<f64>,
) -> Result<CameraTrajectory> {
    if !(frame_rate.is_finite() && frame_rate > 0.0) {
        return Err(Error::invalid("frame_rate", "must be > 0"));
    }
    speed.validate()?;
    let geometry: Box<dyn PathGeometry> = match path {
        PathSpec::Straight { start, yaw, length } => Box::new(Line {
            start: *start,
            yaw: *yaw,
            length: *length,
        }),
        PathSpec::Arc {
            start,
            yaw,
            length,
            curvature,
        } => Box::new(CircularArc {
            start: *start,
            yaw: *yaw,
            length: *length,
            curvature: *curvature,
        }),
        PathSpec::Waypoints { points } => {
            if points.len() < 2 {
                return Err(Error::invalid("waypoints", "need at least two points"));
            }
            Box::new(Spline::new(points))
        }
    };
    let length = geometry.length();
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid("path length", format!("must be > 0, got {length}")));
    }
    let dt = 1.0 / frame_rate;
    let duration = speed.duration(length);
    let steps = (duration / dt + 1e-9).floor() as usize;
    let samples = (0..=steps).map(|k| {
        let s = speed.distance_at(k as f64 * dt, duration).min(length);
        let (p, heading) = geometry.sample(s);
        (p, yaw_override.unwrap_or(heading))
    });
    CameraTrajectory::from_samples(samples, dt, 0.0)
}
