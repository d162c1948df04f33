//! Dataset diagnostics: the question-type mode baseline as a bias probe,
//! per-family balance checks, and text-level statistics.
//!
//! The probe predicts each question type's most frequent training-split
//! answer. On a bias-free dataset its accuracy sits at the chance level of
//! the type's answer space, so any type whose accuracy clears chance by more
//! than the configured margin raises an alarm. Count questions are exempt:
//! their distribution is only softly balanced and residual bias is expected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{QuestionInstance, Split, SplitAssignment};
use crate::program::{answer_space, FunctionKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("empty training split")]
    EmptySplit,
}

/// Per-type modal-answer model fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTypeModel {
    /// Question type name -> modal training answer.
    pub modal: BTreeMap<String, String>,
    /// Question type name -> training answer histogram.
    pub train_histograms: BTreeMap<String, BTreeMap<String, u64>>,
    pub train_count: u64,
}

impl QTypeModel {
    pub fn predict(&self, question_type: FunctionKind) -> Option<&str> {
        self.modal.get(question_type.name()).map(String::as_str)
    }
}

/// Fits the modal answer per question type; ties break lexicographically on
/// the serialized answer.
pub fn fit_qtype<'a>(
    train: impl IntoIterator<Item = &'a QuestionInstance>,
) -> Result<QTypeModel, AuditError> {
    let mut histograms: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut total = 0u64;
    for q in train {
        *histograms
            .entry(q.profile.question_type.name().to_string())
            .or_default()
            .entry(q.answer.to_string())
            .or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(AuditError::EmptySplit);
    }
    let modal = histograms
        .iter()
        .map(|(ty, hist)| {
            let best = hist
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .expect("non-empty histogram");
            (ty.clone(), best.0.clone())
        })
        .collect();
    Ok(QTypeModel {
        modal,
        train_histograms: histograms,
        train_count: total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeAudit {
    pub eval_count: u64,
    pub qtype_mode_accuracy: f64,
    pub chance_level: f64,
    pub answer_entropy_bits: f64,
    pub answer_histogram: BTreeMap<String, u64>,
    pub bias_alarm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyAudit {
    pub accepted: u64,
    pub max_answer_share: f64,
    /// Max share minus the uniform share of the family's answer space.
    pub balance_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessStats {
    /// Unique fraction over every question's normalized text.
    pub unique_fraction: f64,
    /// Per eval split: fraction of questions whose text also occurs in train.
    pub overlap_with_train: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bias_margin: f64,
    /// Question length metric: whitespace token count.
    pub question_length_histogram: BTreeMap<usize, u64>,
    pub per_type: BTreeMap<String, TypeAudit>,
    pub per_family: BTreeMap<String, FamilyAudit>,
    pub uniqueness: UniquenessStats,
    pub alarms: Vec<String>,
}

fn entropy_bits(hist: &BTreeMap<String, u64>) -> f64 {
    let total: u64 = hist.values().sum();
    if total == 0 {
        return 0.0;
    }
    hist.values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

fn chance_level(kind: FunctionKind) -> f64 {
    answer_space(kind)
        .map(|space| 1.0 / space.len() as f64)
        .unwrap_or(0.0)
}

/// Exact text-match uniqueness and train-overlap statistics.
pub fn uniqueness_stats(
    instances: &[QuestionInstance],
    splits: &SplitAssignment,
) -> UniquenessStats {
    use std::collections::BTreeSet;
    let unique: BTreeSet<&str> = instances.iter().map(|q| q.text.as_str()).collect();
    let unique_fraction = if instances.is_empty() {
        1.0
    } else {
        unique.len() as f64 / instances.len() as f64
    };

    let train_texts: BTreeSet<&str> = instances
        .iter()
        .filter(|q| splits.split_of(q.scene_id) == Some(Split::Train))
        .map(|q| q.text.as_str())
        .collect();
    let mut overlap_with_train = BTreeMap::new();
    for (name, split) in [("val", Split::Val), ("test", Split::Test)] {
        let evals: Vec<&QuestionInstance> = instances
            .iter()
            .filter(|q| splits.split_of(q.scene_id) == Some(split))
            .collect();
        let overlapping = evals
            .iter()
            .filter(|q| train_texts.contains(q.text.as_str()))
            .count();
        let fraction = if evals.is_empty() {
            0.0
        } else {
            overlapping as f64 / evals.len() as f64
        };
        overlap_with_train.insert(name.to_string(), fraction);
    }
    UniquenessStats {
        unique_fraction,
        overlap_with_train,
    }
}

/// Runs the full bias audit: fits the Q-type-mode probe on the training
/// split and evaluates it on val+test.
pub fn audit(
    instances: &[QuestionInstance],
    splits: &SplitAssignment,
    bias_margin: f64,
) -> Result<AuditReport, AuditError> {
    let train: Vec<&QuestionInstance> = instances
        .iter()
        .filter(|q| splits.split_of(q.scene_id) == Some(Split::Train))
        .collect();
    let eval: Vec<&QuestionInstance> = instances
        .iter()
        .filter(|q| {
            matches!(
                splits.split_of(q.scene_id),
                Some(Split::Val) | Some(Split::Test)
            )
        })
        .collect();
    let model = fit_qtype(train.iter().copied())?;

    let mut per_type: BTreeMap<String, TypeAudit> = BTreeMap::new();
    let mut grouped: BTreeMap<FunctionKind, Vec<&QuestionInstance>> = BTreeMap::new();
    for q in &eval {
        grouped.entry(q.profile.question_type).or_default().push(q);
    }
    let mut alarms = Vec::new();
    for (kind, questions) in grouped {
        let mut histogram: BTreeMap<String, u64> = BTreeMap::new();
        let mut hits = 0u64;
        for q in &questions {
            let answer = q.answer.to_string();
            if model.predict(kind) == Some(answer.as_str()) {
                hits += 1;
            }
            *histogram.entry(answer).or_insert(0) += 1;
        }
        let accuracy = hits as f64 / questions.len() as f64;
        let chance = chance_level(kind);
        // Count answers are only softly balanced; no alarm for them.
        let alarmed = kind != FunctionKind::Count && accuracy > chance + bias_margin;
        if alarmed {
            alarms.push(format!(
                "{}: accuracy {:.3} exceeds chance {:.3} by more than {:.3}",
                kind.name(),
                accuracy,
                chance,
                bias_margin
            ));
        }
        per_type.insert(
            kind.name().to_string(),
            TypeAudit {
                eval_count: questions.len() as u64,
                qtype_mode_accuracy: accuracy,
                chance_level: chance,
                answer_entropy_bits: entropy_bits(&histogram),
                answer_histogram: histogram,
                bias_alarm: alarmed,
            },
        );
    }

    let mut per_family: BTreeMap<String, FamilyAudit> = BTreeMap::new();
    let mut family_hists: BTreeMap<&str, (FunctionKind, BTreeMap<String, u64>)> = BTreeMap::new();
    for q in instances {
        family_hists
            .entry(q.family_id.as_str())
            .or_insert_with(|| (q.profile.question_type, BTreeMap::new()))
            .1
            .entry(q.answer.to_string())
            .and_modify(|c| *c += 1)
            .or_insert(1);
    }
    for (family_id, (kind, hist)) in family_hists {
        let accepted: u64 = hist.values().sum();
        let max_share = hist.values().copied().max().unwrap_or(0) as f64 / accepted.max(1) as f64;
        per_family.insert(
            family_id.to_string(),
            FamilyAudit {
                accepted,
                max_answer_share: max_share,
                balance_deviation: max_share - chance_level(kind),
            },
        );
    }

    let mut question_length_histogram: BTreeMap<usize, u64> = BTreeMap::new();
    for q in instances {
        *question_length_histogram
            .entry(q.text.split_whitespace().count())
            .or_insert(0) += 1;
    }

    Ok(AuditReport {
        bias_margin,
        question_length_histogram,
        per_type,
        per_family,
        uniqueness: uniqueness_stats(instances, splits),
        alarms,
    })
}

impl AuditReport {
    /// Plain-text table for terminals; the JSON form is the primary output.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "bias audit (margin {:.2}; question length = whitespace tokens)",
            self.bias_margin
        );
        let _ = writeln!(
            out,
            "{:<16} {:>7} {:>10} {:>8} {:>9}  alarm",
            "type", "n_eval", "mode_acc", "chance", "entropy"
        );
        for (ty, audit) in &self.per_type {
            let _ = writeln!(
                out,
                "{:<16} {:>7} {:>10.4} {:>8.4} {:>9.3}  {}",
                ty,
                audit.eval_count,
                audit.qtype_mode_accuracy,
                audit.chance_level,
                audit.answer_entropy_bits,
                if audit.bias_alarm { "BIAS" } else { "-" }
            );
        }
        let _ = writeln!(
            out,
            "unique text fraction {:.4}; overlap with train: {}",
            self.uniqueness.unique_fraction,
            self.uniqueness
                .overlap_with_train
                .iter()
                .map(|(k, v)| format!("{k} {v:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        if self.alarms.is_empty() {
            let _ = writeln!(out, "no bias alarms");
        } else {
            for alarm in &self.alarms {
                let _ = writeln!(out, "ALARM: {alarm}");
            }
        }
        out
    }
}
