use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{CameraTrajectory, DepthStack, RenderConfig};

/// Largest image-space displacement, in pixels, of any pixel's 3-D hit point
/// between consecutive frames. Points that fall behind the next camera are
/// skipped.
pub fn check_flow_bound(depth: &DepthStack, traj: &CameraTrajectory, cfg: &RenderConfig) -> Result<f64> {
    cfg.validate()?;
    let (t, h, w) = depth.depths.dim();
    if t != traj.len() {
        return Err(Error::invalid(
            "depth stack",
            format!("{t} frames for a trajectory of {} poses", traj.len()),
        ));
    }
    if h != cfg.height || w != cfg.width {
        return Err(Error::invalid("depth stack", "resolution does not match the camera"));
    }
    let poses = traj.poses();
    let max = (0..t.saturating_sub(1))
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&poses[k], &poses[k + 1]);
            let (rot_a, rot_b_inv) = (a.rotation(), b.rotation().inverse());
            let (org_a, org_b) = (a.origin(), b.origin());
            let frame = depth.frame(k);
            let mut worst: f64 = 0.0;
            for v in 0..h {
                for u in 0..w {
                    let world = rot_a * (cfg.body_ray(u, v) * frame[[v, u]]) + org_a;
                    let local = rot_b_inv * (world - org_b);
                    if let Some((pu, pv)) = cfg.project(&local) {
                        let du = pu - (u as f64 + 0.5);
                        let dv = pv - (v as f64 + 0.5);
                        worst = worst.max(du.hypot(dv));
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(max)
}
