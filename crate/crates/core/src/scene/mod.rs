//! Procedural forests, camera motion, rendering and distance observations.

mod camera;
mod distmap;
mod flow;
mod forest;
mod render;

pub use camera::{make_trajectory, CameraPose, CameraTrajectory, PathSpec, SpeedProfile};
pub use distmap::{
    default_bin_span, student_distance_map, teacher_bin_interval, teacher_distance_map,
    BandedDistanceMap, DistanceMap, DEFAULT_BIN_SPAN_DEG, DEFAULT_NUM_BINS,
};
pub use flow::check_flow_bound;
pub use forest::{
    min_obstacle_distance, sample_forest, BearingInterval, Cylinder, ForestScene, PoissonConfig,
    WorldBox, DEFAULT_BACKGROUND_ALBEDO,
};
pub use render::{
    ray_cylinder, ray_ground, render_frames, render_pose, trace, DepthStack, Hit, RenderConfig,
    Surface, SKY_INTENSITY,
};

use std::f64::consts::{PI, TAU};

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::wrap_angle;
    use std::f64::consts::PI;

    #[test]
    fn wrap() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }
}
