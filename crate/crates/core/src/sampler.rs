//! Random scene sampling under placement constraints.
//!
//! Placement is rejection-based: positions are drawn uniformly in a fixed
//! ground-plane square and redrawn whenever a constraint fails. Two
//! constraints are enforced pairwise: centers may not come closer than the
//! sum of the size radii plus a padding distance, and the projected centers
//! must be separated by a margin along both camera axes (which is what makes
//! every spatial relation unambiguous).
//!
//! The margin and radius defaults are artifact constants, configurable here.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::rng::{self, stream};
use crate::scene::{Color, Material, ObjectRecord, Relation, SceneGraph, Shape, Size};

/// Half-width of the ground-plane placement square, in scene units.
pub const PLACEMENT_HALF_WIDTH: f64 = 3.0;

/// Base camera view direction; jitter rotates it about the vertical axis.
pub const BASE_CAMERA_VIEW: [f64; 3] = [-1.0, 1.0, -0.75];

/// Attribute-restriction regime for compositional-generalization splits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// All eight colors for every shape.
    #[default]
    Full,
    /// Cubes in gray/blue/brown/yellow, cylinders in red/green/purple/cyan,
    /// spheres unrestricted.
    A,
    /// Cube and cylinder palettes of condition A swapped.
    B,
}

const COOL_WARM: [Color; 4] = [Color::Gray, Color::Blue, Color::Brown, Color::Yellow];
const VIVID: [Color; 4] = [Color::Red, Color::Green, Color::Purple, Color::Cyan];

impl Condition {
    /// Colors allowed for a shape under this condition.
    pub fn palette(self, shape: Shape) -> &'static [Color] {
        match (self, shape) {
            (Condition::Full, _) | (_, Shape::Sphere) => Color::ALL,
            (Condition::A, Shape::Cube) | (Condition::B, Shape::Cylinder) => &COOL_WARM,
            (Condition::A, Shape::Cylinder) | (Condition::B, Shape::Cube) => &VIVID,
        }
    }

    pub fn allows(self, shape: Shape, color: Color) -> bool {
        self.palette(shape).contains(&color)
    }
}

/// Sampler configuration; every field has a documented default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub min_objects: usize,
    pub max_objects: usize,
    /// Required clearance between object perimeters (beyond the sum of the
    /// size radii), in scene units.
    pub min_pairwise_distance: f64,
    /// Minimum separation of projected centers along each camera axis.
    pub min_axis_margin: f64,
    /// Total camera yaw jitter range, in degrees.
    pub camera_jitter: f64,
    pub condition: Condition,
    pub seed: u64,
    /// Position redraws allowed per object before the scene attempt fails.
    pub placement_attempts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            min_objects: 3,
            max_objects: 10,
            min_pairwise_distance: 0.25,
            min_axis_margin: 0.4,
            camera_jitter: 10.0,
            condition: Condition::Full,
            seed: 0,
            placement_attempts: 50,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SampleError> {
        if self.min_objects < 3 || self.max_objects > 10 || self.min_objects > self.max_objects {
            return Err(SampleError::InvalidConfig(
                "object count bounds must satisfy 3 <= min <= max <= 10".into(),
            ));
        }
        if self.min_axis_margin <= 0.0 || self.min_pairwise_distance < 0.0 {
            return Err(SampleError::InvalidConfig(
                "margins must be positive".into(),
            ));
        }
        if self.placement_attempts == 0 {
            return Err(SampleError::InvalidConfig(
                "placement_attempts must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    /// Rejection placement ran out of attempts; the caller retries with a
    /// fresh per-scene stream.
    #[error("placement exhausted after {attempts} attempts for object {object}")]
    PlacementExhausted { object: usize, attempts: usize },
}

/// A constraint violation found by [`validate_scene`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    ObjectCount {
        count: usize,
    },
    Intersection {
        a: usize,
        b: usize,
    },
    /// Projected centers of `a` and `b` are closer than the margin along the
    /// axis named by `axis` (`left` for the right axis, `behind` for the
    /// behind axis).
    AxisMargin {
        a: usize,
        b: usize,
        axis: Relation,
    },
    PaletteViolation {
        object: usize,
    },
    OutOfBounds {
        object: usize,
    },
    BadHeight {
        object: usize,
    },
}

/// Samples one scene graph; deterministic for a fixed `(config, rng stream)`.
pub fn sample_scene(
    scene_id: u64,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<SceneGraph, SampleError> {
    config.validate()?;

    let yaw_range = config.camera_jitter.to_radians() / 2.0;
    let yaw = if yaw_range > 0.0 {
        rng.random_range(-yaw_range..=yaw_range)
    } else {
        0.0
    };
    let (sin, cos) = (libm::sin(yaw), libm::cos(yaw));
    let camera_view = [
        BASE_CAMERA_VIEW[0] * cos - BASE_CAMERA_VIEW[1] * sin,
        BASE_CAMERA_VIEW[0] * sin + BASE_CAMERA_VIEW[1] * cos,
        BASE_CAMERA_VIEW[2],
    ];
    let (behind_axis, right_axis) =
        crate::scene::derive_axes(camera_view).expect("base view has a ground projection");

    let count = rng.random_range(config.min_objects..=config.max_objects);
    let mut objects: Vec<ObjectRecord> = Vec::with_capacity(count);
    for id in 0..count {
        let shape = *Shape::ALL.choose(rng).expect("non-empty");
        let size = *Size::ALL.choose(rng).expect("non-empty");
        let color = *config
            .condition
            .palette(shape)
            .choose(rng)
            .expect("non-empty");
        let material = *Material::ALL.choose(rng).expect("non-empty");
        let rotation = rng.random_range(0.0..360.0);

        let mut placed = false;
        for _ in 0..config.placement_attempts {
            let x = rng.random_range(-PLACEMENT_HALF_WIDTH..=PLACEMENT_HALF_WIDTH);
            let y = rng.random_range(-PLACEMENT_HALF_WIDTH..=PLACEMENT_HALF_WIDTH);
            let ok = objects.iter().all(|other| {
                let dx = x - other.position[0];
                let dy = y - other.position[1];
                let min_dist = size.radius() + other.size.radius() + config.min_pairwise_distance;
                if dx * dx + dy * dy < min_dist * min_dist {
                    return false;
                }
                let along_right = (dx * right_axis[0] + dy * right_axis[1]).abs();
                let along_behind = (dx * behind_axis[0] + dy * behind_axis[1]).abs();
                along_right >= config.min_axis_margin && along_behind >= config.min_axis_margin
            });
            if ok {
                objects.push(ObjectRecord {
                    id,
                    shape,
                    size,
                    color,
                    material,
                    position: [x, y, size.radius()],
                    rotation,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SampleError::PlacementExhausted {
                object: id,
                attempts: config.placement_attempts,
            });
        }
    }

    Ok(SceneGraph::new(scene_id, objects, camera_view).expect("sampler produces dense ids"))
}

/// Whole-scene retry budget used by [`sample_scenes`] when placement fails.
pub const SCENE_RETRY_BUDGET: u64 = 64;

/// Samples `count` scenes in parallel, one derived stream per scene index.
///
/// A scene whose placement fails is retried with a fresh stream for the same
/// index, so output depends only on `(config, count)`, not worker count.
pub fn sample_scenes(count: usize, config: &SamplerConfig) -> Result<Vec<SceneGraph>, SampleError> {
    config.validate()?;
    let results = par::map_indexed(count, |i| {
        for attempt in 0..SCENE_RETRY_BUDGET {
            let mut rng = rng::derive(config.seed, &[stream::SCENE, i as u64, attempt]);
            match sample_scene(i as u64, config, &mut rng) {
                Ok(scene) => return Ok(scene),
                Err(SampleError::PlacementExhausted { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(SampleError::PlacementExhausted {
            object: 0,
            attempts: config.placement_attempts,
        })
    });
    results.into_iter().collect()
}

/// Reports every constraint violation in a scene; empty means valid.
pub fn validate_scene(scene: &SceneGraph, config: &SamplerConfig) -> Vec<Violation> {
    let mut violations = Vec::new();
    let n = scene.len();
    if n < config.min_objects || n > config.max_objects {
        violations.push(Violation::ObjectCount { count: n });
    }
    for o in &scene.objects {
        if !config.condition.allows(o.shape, o.color) {
            violations.push(Violation::PaletteViolation { object: o.id });
        }
        if o.position[2] < 0.0 {
            violations.push(Violation::BadHeight { object: o.id });
        }
        if o.position[0].abs() > PLACEMENT_HALF_WIDTH || o.position[1].abs() > PLACEMENT_HALF_WIDTH
        {
            violations.push(Violation::OutOfBounds { object: o.id });
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let (oa, ob) = (&scene.objects[a], &scene.objects[b]);
            let dx = oa.position[0] - ob.position[0];
            let dy = oa.position[1] - ob.position[1];
            let min_dist = oa.size.radius() + ob.size.radius() + config.min_pairwise_distance;
            if dx * dx + dy * dy < min_dist * min_dist {
                violations.push(Violation::Intersection { a, b });
            }
            let right = scene.camera.right_axis;
            let behind = scene.camera.behind_axis;
            if (dx * right[0] + dy * right[1]).abs() < config.min_axis_margin {
                violations.push(Violation::AxisMargin {
                    a,
                    b,
                    axis: Relation::Left,
                });
            }
            if (dx * behind[0] + dy * behind[1]).abs() < config.min_axis_margin {
                violations.push(Violation::AxisMargin {
                    a,
                    b,
                    axis: Relation::Behind,
                });
            }
        }
    }
    violations
}
