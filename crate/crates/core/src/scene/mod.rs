//! Attributed scene graphs and the exact semantics of spatial and
//! same-attribute relationships.
//!
//! A scene is a collection of objects annotated with shape, size, color,
//! material, and a ground-plane position. Spatial relations are defined
//! against two axes derived from the camera: the ground-plane projection of
//! the view direction (negated) is the "behind" axis, and that axis rotated
//! -90 degrees is the "right" axis. One object is behind another if its
//! position is further along the behind axis; left/right work the same way on
//! the right axis. Exactly equal projections mean neither relation holds.

mod json;

pub use json::{RelationshipsJson, SceneJson, SceneObjectJson};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Set of object ids, ordered so that iteration is deterministic.
pub type IdSet = BTreeSet<usize>;

/// Errors from scene construction and relation queries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    /// The camera view direction is vertical: no ground-plane projection, so
    /// no relation axes exist.
    #[error("camera view vector has no ground-plane projection")]
    DegenerateCamera,
    /// An object id that is not present in the scene.
    #[error("unknown object id {0}")]
    UnknownObject(usize),
    /// Object ids must be the dense indices 0..n, in order.
    #[error("object ids must be dense indices 0..n in order")]
    InvalidObjectIds,
}

macro_rules! attribute_enum {
    ($(#[$doc:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant,)+
        }

        impl $name {
            /// Every value, in canonical order.
            pub const ALL: &'static [$name] = &[$($name::$variant,)+];

            /// Canonical lowercase word.
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }

            /// Parses the canonical lowercase word.
            pub fn parse_word(word: &str) -> Option<$name> {
                match word {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

attribute_enum!(
    /// Object size; two values.
    Size { Small => "small", Large => "large" }
);

attribute_enum!(
    /// Object color; eight values.
    Color {
        Gray => "gray",
        Red => "red",
        Blue => "blue",
        Green => "green",
        Brown => "brown",
        Purple => "purple",
        Cyan => "cyan",
        Yellow => "yellow",
    }
);

attribute_enum!(
    /// Object shape; three values.
    Shape { Cube => "cube", Sphere => "sphere", Cylinder => "cylinder" }
);

attribute_enum!(
    /// Object material; two values.
    Material { Rubber => "rubber", Metal => "metal" }
);

attribute_enum!(
    /// Spatial relation between two objects, defined on the camera axes.
    Relation { Left => "left", Right => "right", Front => "front", Behind => "behind" }
);

impl Size {
    /// Ground radius implied by the size, in scene units.
    pub fn radius(self) -> f64 {
        match self {
            Size::Small => 0.35,
            Size::Large => 0.7,
        }
    }
}

impl Relation {
    fn index(self) -> usize {
        match self {
            Relation::Left => 0,
            Relation::Right => 1,
            Relation::Front => 2,
            Relation::Behind => 3,
        }
    }
}

/// The attribute dimensions an object carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Size,
    Color,
    Material,
    Shape,
}

/// A single object: attributes plus pose.
///
/// `position` is `[x, y, z]` in scene units with `x, y` on the ground plane
/// and `z` the center height. `rotation` is degrees about the vertical axis;
/// it is carried for export fidelity and has no effect on relation semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectRecord {
    pub id: usize,
    pub shape: Shape,
    pub size: Size,
    pub color: Color,
    pub material: Material,
    pub position: [f64; 3],
    pub rotation: f64,
}

impl ObjectRecord {
    fn ground(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }

    /// Whether this object matches `other` on the given attribute dimension.
    pub fn same_attribute(&self, other: &ObjectRecord, kind: AttributeKind) -> bool {
        match kind {
            AttributeKind::Size => self.size == other.size,
            AttributeKind::Color => self.color == other.color,
            AttributeKind::Material => self.material == other.material,
            AttributeKind::Shape => self.shape == other.shape,
        }
    }
}

/// Camera pose: the view direction plus the two derived ground-plane axes.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraPose {
    pub view: [f64; 3],
    pub behind_axis: [f64; 2],
    pub right_axis: [f64; 2],
}

impl CameraPose {
    /// Builds a pose from a view direction, deriving both relation axes.
    pub fn from_view(view: [f64; 3]) -> Result<CameraPose, SceneError> {
        let (behind_axis, right_axis) = derive_axes(view)?;
        Ok(CameraPose {
            view,
            behind_axis,
            right_axis,
        })
    }
}

const MIN_GROUND_PROJECTION: f64 = 1e-9;

/// Derives the `(behind, right)` unit axes from a camera view direction.
///
/// The behind axis is the normalized ground-plane projection of the view
/// vector, negated; the right axis is the behind axis rotated -90 degrees.
pub fn derive_axes(view: [f64; 3]) -> Result<([f64; 2], [f64; 2]), SceneError> {
    let norm = (view[0] * view[0] + view[1] * view[1]).sqrt();
    if norm < MIN_GROUND_PROJECTION {
        return Err(SceneError::DegenerateCamera);
    }
    let behind = [-view[0] / norm, -view[1] / norm];
    let right = [behind[1], -behind[0]];
    Ok((behind, right))
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// An immutable scene: objects, camera, and the cached relationship closure.
///
/// Relationship lists are derived at construction and `relationships(r)[i]`
/// holds every object that stands in relation `r` to object `i` (for example
/// `relationships(Left)[i]` is everything left of object `i`).
#[derive(Clone, Debug, PartialEq)]
pub struct SceneGraph {
    pub scene_id: u64,
    pub objects: Vec<ObjectRecord>,
    pub camera: CameraPose,
    relationships: [Vec<Vec<usize>>; 4],
}

impl SceneGraph {
    /// Builds a scene, deriving camera axes and the relationship cache.
    ///
    /// Object ids must equal their position in `objects`; other invariants
    /// (object count bounds, margins) are reported by the sampler's validator
    /// rather than enforced here so that hand-authored scenes stay loadable.
    pub fn new(
        scene_id: u64,
        objects: Vec<ObjectRecord>,
        camera_view: [f64; 3],
    ) -> Result<SceneGraph, SceneError> {
        if objects.iter().enumerate().any(|(i, o)| o.id != i) {
            return Err(SceneError::InvalidObjectIds);
        }
        let camera = CameraPose::from_view(camera_view)?;
        let relationships = compute_relationships(&objects, &camera);
        Ok(SceneGraph {
            scene_id,
            objects,
            camera,
            relationships,
        })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Every object id in the scene.
    pub fn all_ids(&self) -> IdSet {
        (0..self.objects.len()).collect()
    }

    pub fn object(&self, id: usize) -> Result<&ObjectRecord, SceneError> {
        self.objects.get(id).ok_or(SceneError::UnknownObject(id))
    }

    /// Whether object `a` stands in relation `r` to object `b`.
    ///
    /// Defined by projection onto the camera axes: `behind(a, b)` holds iff
    /// `dot(pos(a) - pos(b), behind_axis) > 0`, front is the converse, and
    /// left/right work the same way on the right axis. An exactly equal
    /// projection means neither relation of the pair holds, and no relation
    /// holds between an object and itself.
    pub fn relate_pair(&self, a: usize, b: usize, r: Relation) -> Result<bool, SceneError> {
        let oa = self.object(a)?;
        let ob = self.object(b)?;
        if a == b {
            return Ok(false);
        }
        let ga = oa.ground();
        let gb = ob.ground();
        let d = [ga[0] - gb[0], ga[1] - gb[1]];
        Ok(match r {
            Relation::Behind => dot2(d, self.camera.behind_axis) > 0.0,
            Relation::Front => dot2(d, self.camera.behind_axis) < 0.0,
            Relation::Right => dot2(d, self.camera.right_axis) > 0.0,
            Relation::Left => dot2(d, self.camera.right_axis) < 0.0,
        })
    }

    /// Cached ids of every object standing in relation `r` to object `b`.
    pub fn related_ids(&self, r: Relation, b: usize) -> Result<&[usize], SceneError> {
        self.relationships[r.index()]
            .get(b)
            .map(Vec::as_slice)
            .ok_or(SceneError::UnknownObject(b))
    }

    /// The full per-object relationship table for one relation.
    pub fn relationships(&self, r: Relation) -> &[Vec<usize>] {
        &self.relationships[r.index()]
    }

    /// Ids of all objects other than `a` sharing `a`'s value on `kind`.
    pub fn same_attribute_set(&self, a: usize, kind: AttributeKind) -> Result<IdSet, SceneError> {
        let anchor = self.object(a)?;
        Ok(self
            .objects
            .iter()
            .filter(|o| o.id != a && o.same_attribute(anchor, kind))
            .map(|o| o.id)
            .collect())
    }

    /// Mean ground-plane position of all objects.
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.objects.len().max(1) as f64;
        let mut c = [0.0, 0.0];
        for o in &self.objects {
            c[0] += o.position[0];
            c[1] += o.position[1];
        }
        [c[0] / n, c[1] / n]
    }

    /// Objects in the half of the camera frame corresponding to `r`.
    ///
    /// The frame is split at the scene centroid: the front half is everything
    /// with a negative projection of `pos - centroid` onto the behind axis,
    /// the left half everything negative on the right axis, and so on.
    /// Objects exactly on the midline fall in neither half.
    pub fn half_plane_ids(&self, r: Relation) -> IdSet {
        let c = self.centroid();
        self.objects
            .iter()
            .filter(|o| {
                let d = [o.position[0] - c[0], o.position[1] - c[1]];
                match r {
                    Relation::Behind => dot2(d, self.camera.behind_axis) > 0.0,
                    Relation::Front => dot2(d, self.camera.behind_axis) < 0.0,
                    Relation::Right => dot2(d, self.camera.right_axis) > 0.0,
                    Relation::Left => dot2(d, self.camera.right_axis) < 0.0,
                }
            })
            .map(|o| o.id)
            .collect()
    }

    /// Recomputes the relationship closure from positions and axes.
    ///
    /// Equals the cached table by construction; exposed so validators can
    /// check stored relationship blocks against first principles.
    pub fn recompute_relationships(&self) -> [Vec<Vec<usize>>; 4] {
        compute_relationships(&self.objects, &self.camera)
    }
}

fn compute_relationships(objects: &[ObjectRecord], camera: &CameraPose) -> [Vec<Vec<usize>>; 4] {
    let mut table: [Vec<Vec<usize>>; 4] = Default::default();
    for rel in Relation::ALL {
        let axis = match rel {
            Relation::Behind | Relation::Front => camera.behind_axis,
            Relation::Left | Relation::Right => camera.right_axis,
        };
        let positive = matches!(rel, Relation::Behind | Relation::Right);
        let per_object = objects
            .iter()
            .map(|b| {
                let gb = b.ground();
                objects
                    .iter()
                    .filter(|a| {
                        if a.id == b.id {
                            return false;
                        }
                        let ga = a.ground();
                        let proj = dot2([ga[0] - gb[0], ga[1] - gb[1]], axis);
                        if positive {
                            proj > 0.0
                        } else {
                            proj < 0.0
                        }
                    })
                    .map(|a| a.id)
                    .collect()
            })
            .collect();
        table[rel.index()] = per_object;
    }
    table
}

#[cfg(test)]
mod tests;
