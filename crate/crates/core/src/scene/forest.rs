use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::wrap_angle;

/// Axis-aligned world bounds in meters. The ground is `min[2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for WorldBox {
    fn default() -> Self {
        Self {
            min: [0.0, 0.0, 0.0],
            max: [100.0, 100.0, 20.0],
        }
    }
}

impl WorldBox {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] < self.max[i]) {
                return Err(Error::invalid(
                    "world_box",
                    format!("axis {i}: need finite min < max, got {} .. {}", self.min[i], self.max[i]),
                ));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (self.min[0]..=self.max[0]).contains(&x) && (self.min[1]..=self.max[1]).contains(&y)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.contains_xy(p[0], p[1]) && (self.min[2]..=self.max[2]).contains(&p[2])
    }

    /// Center of the `x = min` edge, where episodes start.
    pub fn left_edge_center(&self) -> [f64; 2] {
        [self.min[0], 0.5 * (self.min[1] + self.max[1])]
    }
}

/// A vertical tree trunk standing on the ground and reaching the top of the
/// world box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinder {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub albedo: f64,
}

impl Cylinder {
    pub fn center_distance(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }

    /// Horizontal distance from `(x, y)` to the surface; negative inside.
    pub fn surface_distance(&self, x: f64, y: f64) -> f64 {
        self.center_distance(x, y) - self.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestScene {
    pub world_box: WorldBox,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson_delta: Option<f64>,
    pub background_albedo: f64,
    pub cylinders: Vec<Cylinder>,
}

pub const DEFAULT_BACKGROUND_ALBEDO: f64 = 0.35;

impl ForestScene {
    pub fn empty(world_box: WorldBox) -> Self {
        Self {
            world_box,
            seed: 0,
            poisson_delta: None,
            background_albedo: DEFAULT_BACKGROUND_ALBEDO,
            cylinders: Vec::new(),
        }
    }

    pub fn with_cylinders(mut self, cylinders: Vec<Cylinder>) -> Self {
        self.cylinders = cylinders;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.world_box.validate()?;
        if !(0.0..=1.0).contains(&self.background_albedo) {
            return Err(Error::invalid("background_albedo", "must lie in [0, 1]"));
        }
        for (i, c) in self.cylinders.iter().enumerate() {
            if !(c.r.is_finite() && c.r > 0.0) {
                return Err(Error::invalid(format!("cylinders[{i}].r"), "must be > 0"));
            }
            if !self.world_box.contains_xy(c.x, c.y) {
                return Err(Error::invalid(
                    format!("cylinders[{i}]"),
                    format!("center ({}, {}) outside the world box", c.x, c.y),
                ));
            }
            if !(0.0..=1.0).contains(&c.albedo) {
                return Err(Error::invalid(format!("cylinders[{i}].albedo"), "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// First cylinder whose surface is within `margin` of `(x, y)`.
    pub fn colliding_cylinder(&self, x: f64, y: f64, margin: f64) -> Option<usize> {
        self.cylinders
            .iter()
            .position(|c| c.surface_distance(x, y) < margin)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing scene".into(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing scene".into(),
            source,
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: format!("parsing scene {}", path.display()),
                source,
            },
            other => other.in_file(path),
        })
    }
}

/// Parameters of a homogeneous Poisson forest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoissonConfig {
    /// Expected trees per square meter.
    pub delta: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub world_box: WorldBox,
    /// Trees whose surface comes closer than this to `start` are removed.
    pub min_clearance: f64,
    pub start: [f64; 2],
}

impl Default for PoissonConfig {
    fn default() -> Self {
        let world_box = WorldBox::default();
        Self {
            delta: 0.04,
            r_min: 0.2,
            r_max: 0.5,
            world_box,
            min_clearance: 2.0,
            start: world_box.left_edge_center(),
        }
    }
}

impl PoissonConfig {
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.world_box.validate()?;
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::invalid("delta", format!("must be >= 0, got {}", self.delta)));
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_max && self.r_max.is_finite()) {
            return Err(Error::invalid(
                "radius range",
                format!("need 0 < r_min <= r_max, got [{}, {}]", self.r_min, self.r_max),
            ));
        }
        if !(self.min_clearance.is_finite() && self.min_clearance >= 0.0) {
            return Err(Error::invalid("min_clearance", "must be >= 0"));
        }
        Ok(())
    }
}

/// Draw a forest: a Poisson number of trees with uniform positions and radii.
/// The draw order is fixed, so a seed always yields the same scene.
pub fn sample_forest(cfg: &PoissonConfig, seed: u64) -> Result<ForestScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wb = cfg.world_box;
    let mean = cfg.delta * wb.area();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::invalid("delta", e.to_string()))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let mut cylinders = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.gen_range(wb.min[0]..wb.max[0]);
        let y = rng.gen_range(wb.min[1]..wb.max[1]);
        let r = rng.gen_range(cfg.r_min..=cfg.r_max);
        let albedo = rng.gen_range(0.2..=0.8);
        let c = Cylinder { x, y, r, albedo };
        if c.surface_distance(cfg.start[0], cfg.start[1]) >= cfg.min_clearance {
            cylinders.push(c);
        }
    }
    Ok(ForestScene {
        world_box: wb,
        seed,
        poisson_delta: Some(cfg.delta),
        background_albedo: DEFAULT_BACKGROUND_ALBEDO,
        cylinders,
    })
}

/// A horizontal bearing interval `[start, end]` in radians, counter-clockwise
/// from the world x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingInterval {
    pub start: f64,
    pub end: f64,
}

impl BearingInterval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn centered(center: f64, width: f64) -> Self {
        Self {
            start: center - 0.5 * width,
            end: center + 0.5 * width,
        }
    }

    fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.end - self.start)
    }
}

/// Closest cylinder surface (horizontal distance) whose angular extent, seen
/// from `position`, overlaps `interval`. Clamped to `max_range`; zero if the
/// position is inside a cylinder.
pub fn min_obstacle_distance(
    scene: &ForestScene,
    position: [f64; 2],
    interval: BearingInterval,
    max_range: f64,
) -> f64 {
    let [px, py] = position;
    let center = interval.center();
    let half = interval.half_width();
    let mut best = max_range;
    for c in &scene.cylinders {
        let d = c.center_distance(px, py);
        if d <= c.r {
            return 0.0;
        }
        let surface = d - c.r;
        if surface >= best {
            continue;
        }
        let bearing = (c.y - py).atan2(c.x - px);
        let extent = (c.r / d).asin();
        if wrap_angle(bearing - center).abs() <= half + extent {
            best = surface;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_is_empty() {
        let s = sample_forest(&PoissonConfig::default().with_delta(0.0), 3).unwrap();
        assert!(s.cylinders.is_empty());
    }

    #[test]
    fn same_seed_same_forest() {
        let cfg = PoissonConfig::default();
        assert_eq!(sample_forest(&cfg, 11).unwrap(), sample_forest(&cfg, 11).unwrap());
        assert_ne!(sample_forest(&cfg, 11).unwrap(), sample_forest(&cfg, 12).unwrap());
    }

    #[test]
    fn start_is_clear() {
        let cfg = PoissonConfig::default().with_delta(0.5);
        let s = sample_forest(&cfg, 5).unwrap();
        assert!(s
            .cylinders
            .iter()
            .all(|c| c.surface_distance(cfg.start[0], cfg.start[1]) >= 2.0));
    }

    #[test]
    fn invalid_config() {
        let mut cfg = PoissonConfig::default();
        cfg.r_min = 0.6;
        assert!(sample_forest(&cfg, 0).is_err());
        assert!(sample_forest(&PoissonConfig::default().with_delta(-1.0), 0).is_err());
    }

    #[test]
    fn distance_queries() {
        let empty = ForestScene::empty(WorldBox::default());
        let iv = BearingInterval::centered(0.0, 0.2);
        assert_eq!(min_obstacle_distance(&empty, [10.0, 50.0], iv, 50.0), 50.0);

        let one = empty.clone().with_cylinders(vec![Cylinder {
            x: 20.0,
            y: 50.0,
            r: 0.5,
            albedo: 0.5,
        }]);
        assert_eq!(min_obstacle_distance(&one, [10.0, 50.0], iv, 50.0), 9.5);
        let behind = BearingInterval::centered(std::f64::consts::PI, 0.2);
        assert_eq!(min_obstacle_distance(&one, [10.0, 50.0], behind, 50.0), 50.0);
        assert_eq!(min_obstacle_distance(&one, [20.1, 50.0], behind, 50.0), 0.0);
        // Out of range is clamped.
        assert_eq!(min_obstacle_distance(&one, [10.0, 50.0], iv, 5.0), 5.0);
    }

    #[test]
    fn partial_overlap_counts() {
        // Cylinder at bearing 0.1 with angular half-extent asin(0.5/10) ~ 0.05
        // overlaps an interval ending at 0.06 but not one ending at 0.04.
        let b = 0.1f64;
        let scene = ForestScene::empty(WorldBox::default()).with_cylinders(vec![Cylinder {
            x: 10.0 + 10.0 * b.cos(),
            y: 50.0 + 10.0 * b.sin(),
            r: 0.5,
            albedo: 0.5,
        }]);
        assert!(min_obstacle_distance(&scene, [10.0, 50.0], BearingInterval::new(-0.2, 0.06), 50.0) < 10.0);
        assert_eq!(min_obstacle_distance(&scene, [10.0, 50.0], BearingInterval::new(-0.2, 0.04), 50.0), 50.0);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let s = sample_forest(&PoissonConfig::default().with_delta(0.001), 1).unwrap();
        let text = s.to_json().unwrap();
        assert_eq!(ForestScene::from_json(&text).unwrap(), s);
        let bad = text.replacen("\"seed\"", "\"sneed\"", 1);
        assert!(ForestScene::from_json(&bad).is_err());
    }
}
