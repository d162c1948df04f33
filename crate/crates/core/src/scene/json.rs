//! Scene JSON schema.
//!
//! ```json
//! {
//!   "scene_id": 0,
//!   "camera_view": [x, y, z],
//!   "objects": [
//!     {"id": 0, "shape": "cube", "size": "small", "color": "red",
//!      "material": "rubber", "position": [x, y, z], "rotation": 0.0}
//!   ],
//!   "relationships": {"left": [[..]], "right": [[..]],
//!                     "front": [[..]], "behind": [[..]]}
//! }
//! ```
//!
//! The relationship block is optional on input (always recomputed from
//! positions and camera axes) and mandatory on output.

use serde::{Deserialize, Serialize};

use super::{ObjectRecord, Relation, SceneError, SceneGraph};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneObjectJson {
    pub id: usize,
    pub shape: super::Shape,
    pub size: super::Size,
    pub color: super::Color,
    pub material: super::Material,
    pub position: [f64; 3],
    pub rotation: f64,
}

/// Per-relation object lists; field order is part of the output format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipsJson {
    pub left: Vec<Vec<usize>>,
    pub right: Vec<Vec<usize>>,
    pub front: Vec<Vec<usize>>,
    pub behind: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneJson {
    pub scene_id: u64,
    pub camera_view: [f64; 3],
    pub objects: Vec<SceneObjectJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relationships: Option<RelationshipsJson>,
}

impl SceneJson {
    pub fn from_scene(scene: &SceneGraph) -> SceneJson {
        SceneJson {
            scene_id: scene.scene_id,
            camera_view: scene.camera.view,
            objects: scene
                .objects
                .iter()
                .map(|o| SceneObjectJson {
                    id: o.id,
                    shape: o.shape,
                    size: o.size,
                    color: o.color,
                    material: o.material,
                    position: o.position,
                    rotation: o.rotation,
                })
                .collect(),
            relationships: Some(RelationshipsJson {
                left: scene.relationships(Relation::Left).to_vec(),
                right: scene.relationships(Relation::Right).to_vec(),
                front: scene.relationships(Relation::Front).to_vec(),
                behind: scene.relationships(Relation::Behind).to_vec(),
            }),
        }
    }

    /// Builds the scene graph, recomputing relationships from positions.
    pub fn into_scene(self) -> Result<SceneGraph, SceneError> {
        let objects = self
            .objects
            .into_iter()
            .map(|o| ObjectRecord {
                id: o.id,
                shape: o.shape,
                size: o.size,
                color: o.color,
                material: o.material,
                position: o.position,
                rotation: o.rotation,
            })
            .collect();
        SceneGraph::new(self.scene_id, objects, self.camera_view)
    }
}

impl SceneGraph {
    pub fn to_json_value(&self) -> SceneJson {
        SceneJson::from_scene(self)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&SceneJson::from_scene(self)).expect("scene serialization")
    }

    pub fn from_json_str(s: &str) -> Result<SceneGraph, String> {
        let json: SceneJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        json.into_scene().map_err(|e| e.to_string())
    }
}
