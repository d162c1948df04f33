//! Per-question analysis records and dataset-level aggregates.
//!
//! One record per question carries the full profile plus the pruned
//! (effective) program; the aggregate collects the histograms the analysis
//! axes are read from. Effective-size histograms are also reported with
//! same-attribute questions excluded, since those have a lower size ceiling
//! and would correlate size with difficulty.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::generate::QuestionInstance;
use crate::par;
use crate::program::{ExecFailure, Program};
use crate::relaxed::{effective_question, profile, Topology};
use crate::scene::SceneGraph;

/// Stand-in for the image midline: the scene centroid in the camera frame.
pub const MIDLINE_DEFINITION: &str = "centroid_camera_frame";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub question_id: u64,
    pub scene_id: u64,
    pub family_id: String,
    pub question_type: String,
    pub size: usize,
    pub effective_size: usize,
    pub topology: Topology,
    pub spatial_relation_count: usize,
    pub same_attribute_relation_count: usize,
    pub absolute_spatial_answerable: bool,
    pub pruned_program: Program,
}

/// Recomputes the profile and effective program for one question.
pub fn analyze_instance(
    q: &QuestionInstance,
    scene: &SceneGraph,
) -> Result<AnalysisRecord, ExecFailure> {
    let profile = profile(&q.program, scene)?;
    let (pruned_program, effective_size) = effective_question(&q.program, scene)?;
    debug_assert_eq!(effective_size, profile.effective_size);
    Ok(AnalysisRecord {
        question_id: q.question_id,
        scene_id: q.scene_id,
        family_id: q.family_id.clone(),
        question_type: profile.question_type.name().to_string(),
        size: profile.size,
        effective_size,
        topology: profile.topology,
        spatial_relation_count: profile.spatial_relation_count,
        same_attribute_relation_count: profile.same_attribute_relation_count,
        absolute_spatial_answerable: profile.absolute_spatial_answerable,
        pruned_program,
    })
}

/// Analyzes a whole dataset in parallel, ordered by question id.
pub fn analyze_dataset(
    instances: &[QuestionInstance],
    scenes: &BTreeMap<u64, &SceneGraph>,
) -> Result<Vec<AnalysisRecord>, ExecFailure> {
    let results: Vec<Result<AnalysisRecord, ExecFailure>> = par::map_slice(instances, |q| {
        let scene = scenes
            .get(&q.scene_id)
            .ok_or(ExecFailure::UnknownObject(q.scene_id as usize))?;
        analyze_instance(q, scene)
    });
    results.into_iter().collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// How "half of the image" is defined for the absolute-spatial flag.
    pub midline_definition: String,
    pub questions: u64,
    pub by_type: BTreeMap<String, u64>,
    pub by_size: BTreeMap<usize, u64>,
    pub by_effective_size: BTreeMap<usize, u64>,
    /// Same histograms restricted to questions without same-attribute
    /// relations.
    pub by_size_no_same_attr: BTreeMap<usize, u64>,
    pub by_effective_size_no_same_attr: BTreeMap<usize, u64>,
    pub by_topology: BTreeMap<String, u64>,
    pub by_spatial_relation_count: BTreeMap<usize, u64>,
    pub absolute_spatial_fraction: f64,
}

pub fn aggregate(records: &[AnalysisRecord]) -> AggregateReport {
    let mut report = AggregateReport {
        midline_definition: MIDLINE_DEFINITION.to_string(),
        questions: records.len() as u64,
        ..Default::default()
    };
    let mut absolute = 0u64;
    for r in records {
        *report.by_type.entry(r.question_type.clone()).or_insert(0) += 1;
        *report.by_size.entry(r.size).or_insert(0) += 1;
        *report
            .by_effective_size
            .entry(r.effective_size)
            .or_insert(0) += 1;
        if r.same_attribute_relation_count == 0 {
            *report.by_size_no_same_attr.entry(r.size).or_insert(0) += 1;
            *report
                .by_effective_size_no_same_attr
                .entry(r.effective_size)
                .or_insert(0) += 1;
        }
        let topology = match r.topology {
            Topology::Chain => "chain",
            Topology::Tree => "tree",
        };
        *report.by_topology.entry(topology.to_string()).or_insert(0) += 1;
        *report
            .by_spatial_relation_count
            .entry(r.spatial_relation_count)
            .or_insert(0) += 1;
        absolute += r.absolute_spatial_answerable as u64;
    }
    report.absolute_spatial_fraction = if records.is_empty() {
        0.0
    } else {
        absolute as f64 / records.len() as f64
    };
    report
}

/// Renders one histogram as two-column CSV with a header row.
pub fn histogram_csv<K: std::fmt::Display>(name: &str, hist: &BTreeMap<K, u64>) -> String {
    let mut out = format!("{name},count\n");
    for (k, v) in hist {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}
