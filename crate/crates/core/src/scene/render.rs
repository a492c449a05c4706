//! Minimal pinhole raycaster over cylinders, a ground plane and sky.

use nalgebra::Vector3;
use ndarray::Array3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{log_transform, LogFrameStack, DEFAULT_LOG_EPSILON};

use super::{CameraPose, CameraTrajectory, Cylinder, ForestScene};

pub const SKY_INTENSITY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view in radians.
    pub horizontal_fov: f64,
    pub max_range: f64,
    pub log_epsilon: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            horizontal_fov: std::f64::consts::FRAC_PI_2,
            max_range: 50.0,
            log_epsilon: DEFAULT_LOG_EPSILON,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("resolution", "width and height must be >= 1"));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < std::f64::consts::PI) {
            return Err(Error::invalid("horizontal_fov", "must lie in (0, pi)"));
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(Error::invalid("max_range", "must be > 0"));
        }
        if !(self.log_epsilon > 0.0) {
            return Err(Error::invalid("log_epsilon", "must be > 0"));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.width as f64 / (0.5 * self.horizontal_fov).tan()
    }

    /// Normalized image-plane coordinates of a pixel center: `(right, down)`
    /// offsets at unit forward distance.
    pub fn normalized_coords(&self, u: usize, v: usize) -> (f64, f64) {
        let f = self.focal();
        (
            (u as f64 + 0.5 - 0.5 * self.width as f64) / f,
            (v as f64 + 0.5 - 0.5 * self.height as f64) / f,
        )
    }

    /// Body-frame ray through a pixel with unit forward component, so the
    /// ray parameter of a hit is its depth along the optical axis.
    pub fn body_ray(&self, u: usize, v: usize) -> Vector3<f64> {
        let (xr, yd) = self.normalized_coords(u, v);
        Vector3::new(1.0, -xr, -yd)
    }

    /// Pixel coordinates (continuous, pixel centers at `k + 0.5`) of a
    /// body-frame point in front of the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.x <= 1e-9 {
            return None;
        }
        let f = self.focal();
        Some((
            -p.y / p.x * f + 0.5 * self.width as f64,
            -p.z / p.x * f + 0.5 * self.height as f64,
        ))
    }
}

/// `T x H x W` depths along the optical axis, `max_range` where nothing is
/// hit within range.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthStack {
    pub depths: Array3<f64>,
    pub max_range: f64,
}

impl DepthStack {
    pub fn frame(&self, t: usize) -> ndarray::ArrayView2<'_, f64> {
        self.depths.index_axis(ndarray::Axis(0), t)
    }

    pub fn to_f32(&self) -> Array3<f32> {
        self.depths.mapv(|v| v as f32)
    }
}

/// What a ray hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Cylinder(usize),
    Ground,
    Sky,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub surface: Surface,
    /// Ray parameter; infinite for sky.
    pub t: f64,
    pub intensity: f64,
}

/// Ray parameter of the entry point into a vertical cylinder spanning
/// `z_low..=z_high`, for a ray starting outside it.
pub fn ray_cylinder(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    c: &Cylinder,
    z_low: f64,
    z_high: f64,
) -> Option<f64> {
    let ox = origin.x - c.x;
    let oy = origin.y - c.y;
    let a = dir.x * dir.x + dir.y * dir.y;
    if a < 1e-18 {
        return None;
    }
    let b = ox * dir.x + oy * dir.y;
    let cc = ox * ox + oy * oy - c.r * c.r;
    let disc = b * b - a * cc;
    if disc < 0.0 || cc <= 0.0 {
        return None;
    }
    // Numerically stable near root.
    let t = if b < 0.0 {
        cc / (-b + disc.sqrt())
    } else {
        return None;
    };
    let z = origin.z + t * dir.z;
    (t > 0.0 && (z_low..=z_high).contains(&z)).then_some(t)
}

/// Ray parameter of the ground plane `z = ground`.
pub fn ray_ground(origin: &Vector3<f64>, dir: &Vector3<f64>, ground: f64) -> Option<f64> {
    if dir.z >= 0.0 {
        return None;
    }
    let t = (ground - origin.z) / dir.z;
    (t > 0.0).then_some(t)
}

/// Nearest hit of a world-frame ray and its shaded linear intensity.
pub fn trace(scene: &ForestScene, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Hit {
    let ground = scene.world_box.min[2];
    let top = scene.world_box.max[2];
    let mut best = Hit {
        surface: Surface::Sky,
        t: f64::INFINITY,
        intensity: SKY_INTENSITY,
    };
    if let Some(t) = ray_ground(origin, dir, ground) {
        best.surface = Surface::Ground;
        best.t = t;
    }
    for (i, c) in scene.cylinders.iter().enumerate() {
        if let Some(t) = ray_cylinder(origin, dir, c, ground, top) {
            if t < best.t {
                best.surface = Surface::Cylinder(i);
                best.t = t;
            }
        }
    }
    let unit = dir.normalize();
    best.intensity = match best.surface {
        Surface::Sky => SKY_INTENSITY,
        Surface::Ground => shade(scene.background_albedo, -unit.z),
        Surface::Cylinder(i) => {
            let c = &scene.cylinders[i];
            let p = origin + dir * best.t;
            let n = Vector3::new(p.x - c.x, p.y - c.y, 0.0) / c.r;
            shade(c.albedo, -unit.dot(&n))
        }
    };
    best
}

fn shade(albedo: f64, cos_incidence: f64) -> f64 {
    albedo * (0.5 + 0.5 * cos_incidence.max(0.0))
}

fn check_pose(scene: &ForestScene, pose: &CameraPose, index: usize) -> Result<()> {
    pose.validate()?;
    let [x, y, z] = pose.position;
    let wb = &scene.world_box;
    if !(wb.contains([x, y, z]) && z > wb.min[2]) {
        return Err(Error::invalid(
            format!("pose {index}"),
            format!("position ({x}, {y}, {z}) outside the world box"),
        ));
    }
    if let Some(c) = scene.colliding_cylinder(x, y, 0.0) {
        return Err(Error::invalid(
            format!("pose {index}"),
            format!("position ({x}, {y}) inside cylinder {c}"),
        ));
    }
    Ok(())
}

/// Render one frame: linear intensities and optical-axis depths, row-major.
pub fn render_pose(scene: &ForestScene, pose: &CameraPose, cfg: &RenderConfig) -> (Vec<f32>, Vec<f64>) {
    let rot = pose.rotation();
    let origin = pose.origin();
    let (w, h) = (cfg.width, cfg.height);
    let mut intensity = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let dir = rot * cfg.body_ray(u, v);
            let hit = trace(scene, &origin, &dir);
            intensity.push(hit.intensity as f32);
            depth.push(hit.t.min(cfg.max_range));
        }
    }
    (intensity, depth)
}

/// Render log-intensity and depth stacks along a trajectory.
pub fn render_frames(
    scene: &ForestScene,
    traj: &CameraTrajectory,
    cfg: &RenderConfig,
) -> Result<(LogFrameStack, DepthStack)> {
    cfg.validate()?;
    scene.validate()?;
    for (i, p) in traj.poses().iter().enumerate() {
        check_pose(scene, p, i)?;
    }
    let frames: Vec<(Vec<f32>, Vec<f64>)> = traj
        .poses()
        .par_iter()
        .map(|p| render_pose(scene, p, cfg))
        .collect();
    let t = frames.len();
    let (h, w) = (cfg.height, cfg.width);
    let mut intensity = Vec::with_capacity(t * h * w);
    let mut depth = Vec::with_capacity(t * h * w);
    for (i, d) in frames {
        intensity.extend(i);
        depth.extend(d);
    }
    let intensity = Array3::from_shape_vec((t, h, w), intensity).expect("frame sizes match");
    let stack = log_transform(
        &intensity,
        cfg.log_epsilon,
        traj.frame_period(),
        traj.poses()[0].time,
    )?;
    Ok((
        stack,
        DepthStack {
            depths: Array3::from_shape_vec((t, h, w), depth).expect("frame sizes match"),
            max_range: cfg.max_range,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::WorldBox;

    #[test]
    fn ray_cylinder_head_on() {
        let c = Cylinder {
            x: 10.0,
            y: 0.0,
            r: 1.0,
            albedo: 0.5,
        };
        let o = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(ray_cylinder(&o, &Vector3::new(1.0, 0.0, 0.0), &c, 0.0, 10.0), Some(9.0));
        assert_eq!(ray_cylinder(&o, &Vector3::new(-1.0, 0.0, 0.0), &c, 0.0, 10.0), None);
        assert_eq!(ray_cylinder(&o, &Vector3::new(1.0, 1.0, 0.0), &c, 0.0, 10.0), None);
        // Passes over the top.
        assert_eq!(ray_cylinder(&o, &Vector3::new(1.0, 0.0, 2.0), &c, 0.0, 10.0), None);
    }

    #[test]
    fn ground_and_sky() {
        let scene = ForestScene::empty(WorldBox::default());
        let o = Vector3::new(50.0, 50.0, 2.0);
        let down = trace(&scene, &o, &Vector3::new(1.0, 0.0, -1.0));
        assert_eq!(down.surface, Surface::Ground);
        assert!((down.t - 2.0).abs() < 1e-12);
        let up = trace(&scene, &o, &Vector3::new(1.0, 0.0, 0.1));
        assert_eq!(up.surface, Surface::Sky);
        assert_eq!(up.intensity, SKY_INTENSITY);
    }

    #[test]
    fn head_on_cylinder_is_fully_lit() {
        let scene = ForestScene::empty(WorldBox::default()).with_cylinders(vec![Cylinder {
            x: 60.0,
            y: 50.0,
            r: 0.5,
            albedo: 0.6,
        }]);
        let hit = trace(&scene, &Vector3::new(50.0, 50.0, 2.0), &Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(hit.surface, Surface::Cylinder(0));
        assert!((hit.intensity - 0.6).abs() < 1e-12);
    }

    #[test]
    fn poses_inside_geometry_are_rejected() {
        let scene = ForestScene::empty(WorldBox::default()).with_cylinders(vec![Cylinder {
            x: 60.0,
            y: 50.0,
            r: 0.5,
            albedo: 0.6,
        }]);
        let cfg = RenderConfig::default();
        let inside = CameraTrajectory::new(vec![CameraPose::new([60.0, 50.2, 2.0], 0.0, 0.0)], 0.01).unwrap();
        assert!(render_frames(&scene, &inside, &cfg).is_err());
        let outside = CameraTrajectory::new(vec![CameraPose::new([160.0, 50.0, 2.0], 0.0, 0.0)], 0.01).unwrap();
        assert!(render_frames(&scene, &outside, &cfg).is_err());
    }
}
