//! Question generation.
//!
//! For each scene the generator searches family bindings depth-first,
//! pruning with scene ground truth (a partial binding whose reference set is
//! already empty, or whose fully determined reference is not a singleton,
//! cannot yield a well-posed question). Surviving candidates are screened
//! for degeneracy and then rejection-sampled so that per-family answer
//! distributions stay close to uniform.
//!
//! Generation is deterministic for any worker count: the expensive search
//! runs in parallel with one derived random stream per (scene, family), and
//! the cheap accept/reject decisions run in a single sequential pass over
//! scenes in index order.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{
    realize_text, BalanceMode, Binding, QuestionFamily, SynonymTable, TemplateArg,
};
use crate::par;
use crate::program::{answer_space, exec_all, execute, ExecFailure, FunctionKind, Program, Value};
use crate::relaxed::{profile, QuestionProfile};
use crate::rng::{self, stream};
use crate::scene::{IdSet, Relation, SceneGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub questions_per_image: usize,
    /// Hard-balance cap: an answer's share may not exceed
    /// `(1 + balance_tolerance) / |answer space|`.
    pub balance_tolerance: f64,
    /// Acceptance-probability floor for soft-balanced (count) families.
    pub soft_floor: f64,
    /// Expansion budget per (scene, family) search.
    pub max_dfs_nodes: usize,
    /// Valid candidates collected per (scene, family).
    pub candidates_per_family: usize,
    /// Disabled for control runs; every candidate is accepted.
    pub balancing_enabled: bool,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            questions_per_image: 10,
            balance_tolerance: 0.05,
            soft_floor: 0.05,
            max_dfs_nodes: 10_000,
            candidates_per_family: 6,
            balancing_enabled: true,
            seed: 0,
        }
    }
}

/// A fully bound, accepted question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionInstance {
    pub question_id: u64,
    pub scene_id: u64,
    pub family_id: String,
    pub text: String,
    pub program: Program,
    pub answer: Value,
    pub profile: QuestionProfile,
}

impl QuestionInstance {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("instance serialization")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub ill_posed: u64,
    pub degenerate: u64,
    pub balance: u64,
    pub duplicate_text: u64,
}

impl RejectionCounts {
    pub fn total(&self) -> u64 {
        self.ill_posed + self.degenerate + self.balance + self.duplicate_text
    }
}

/// Per-family bookkeeping. `attempts` counts every candidate that reached a
/// decision, so `attempts == accepted + rejections.total()` always holds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub attempts: u64,
    pub accepted: u64,
    pub rejections: RejectionCounts,
    pub answers: BTreeMap<String, u64>,
    /// Partial assignments cut by ground-truth pruning (search diagnostics;
    /// not part of the attempts identity).
    pub dfs_pruned_partials: u64,
    /// Searches that ran out of space or budget before filling their pool.
    pub dfs_exhausted: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub families: BTreeMap<String, FamilyStats>,
    pub scene_starved: Vec<u64>,
    pub total_questions: u64,
    pub unique_text_fraction: f64,
}

/// Train/val/test scene-id assignment, 70/15/15 by scene order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl SplitAssignment {
    pub fn from_scene_ids(ids: &[u64]) -> SplitAssignment {
        let n = ids.len();
        let n_train = n * 70 / 100;
        let n_val = n * 15 / 100;
        SplitAssignment {
            train: ids[..n_train].to_vec(),
            val: ids[n_train..n_train + n_val].to_vec(),
            test: ids[n_train + n_val..].to_vec(),
        }
    }

    pub fn split_of(&self, scene_id: u64) -> Option<Split> {
        if self.train.binary_search(&scene_id).is_ok() {
            return Some(Split::Train);
        }
        if self.val.binary_search(&scene_id).is_ok() {
            return Some(Split::Val);
        }
        if self.test.binary_search(&scene_id).is_ok() {
            return Some(Split::Test);
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("no families to instantiate")]
    NoFamilies,
    #[error("scene ids must be unique and ascending")]
    BadSceneIds,
}

/// Binding search failed: the space was exhausted or the budget ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("binding search exhausted")]
pub struct Exhausted;

/// A reference whose qualifier is unnecessary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("degenerate reference at node {node}")]
pub struct Degenerate {
    pub node: usize,
}

/// Checks that every qualified `unique` reference needs its qualifier.
///
/// For each unique node fed (through attribute filters) by a relate or
/// same-attribute node, the qualifier subchain is deleted and the filters
/// re-run over the whole scene; if they alone pin down the same object, the
/// qualifier was unnecessary and the question is degenerate.
pub fn degeneracy_check(program: &Program, scene: &SceneGraph) -> Result<(), Degenerate> {
    let values = match exec_all(program, scene) {
        Ok(v) => v,
        // Callers run this after successful strict execution.
        Err(_) => return Ok(()),
    };
    for (i, node) in program.nodes.iter().enumerate() {
        if node.kind != FunctionKind::Unique {
            continue;
        }
        let mut cur = node.inputs[0];
        let mut filters = Vec::new();
        while program.nodes[cur].kind.is_filter() {
            filters.push(cur);
            cur = program.nodes[cur].inputs[0];
        }
        let qualifier = program.nodes[cur].kind;
        if qualifier != FunctionKind::Relate && !qualifier.is_same_attribute() {
            continue;
        }
        let mut set = scene.all_ids();
        for &f in &filters {
            let fnode = &program.nodes[f];
            set = match crate::program::filter_ids(scene, &set, fnode.kind, &fnode.value_inputs[0])
            {
                Ok(s) => s,
                Err(_) => return Ok(()),
            };
        }
        if let Value::Object(original) = &values[i] {
            if set.len() == 1 && set.contains(original) {
                return Err(Degenerate { node: i });
            }
        }
    }
    Ok(())
}

/// Whether an answer may be accepted given the family's current histogram.
///
/// Hard mode keeps every answer's share at or below
/// `(1 + tolerance) / |space|` (with a floor of one acceptance so empty
/// histograms can start); soft mode accepts with probability proportional to
/// the answer bin's deficit against the current maximum bin, floored so
/// generation terminates.
pub fn balance_accept(
    stats: &FamilyStats,
    mode: BalanceMode,
    answer_space_size: usize,
    answer: &str,
    config: &GenerationConfig,
    rng: &mut impl Rng,
) -> bool {
    let count = stats.answers.get(answer).copied().unwrap_or(0);
    match mode {
        BalanceMode::UniformHard => hard_cap_allows(stats, answer_space_size, answer, config),
        BalanceMode::UniformSoft => {
            let max_bin = stats.answers.values().copied().max().unwrap_or(0);
            if max_bin == 0 {
                return true;
            }
            let deficit = (max_bin - count) as f64 / max_bin as f64;
            rng.random::<f64>() < deficit.max(config.soft_floor)
        }
    }
}

/// The pure hard-cap rule, shared by [`balance_accept`] and the candidate
/// picker inside [`generate_dataset`].
fn hard_cap_allows(
    stats: &FamilyStats,
    answer_space_size: usize,
    answer: &str,
    config: &GenerationConfig,
) -> bool {
    let count = stats.answers.get(answer).copied().unwrap_or(0);
    let cap = (1.0 + config.balance_tolerance) / answer_space_size as f64;
    let mut allowed = ((cap * (stats.accepted + 1) as f64).floor() as u64).max(1);
    // Integer granularity can freeze a histogram solid: with every bin at
    // the floor, the floor cannot grow because the total cannot grow. The
    // tolerance term only outweighs rounding once n * tolerance exceeds the
    // answer-space size, so grant one unit of slack below that horizon. A
    // bin last accepted during the slack phase holds O(space/tolerance)
    // items, far under the cap at the sample sizes where the cap is read;
    // every later acceptance obeys the exact floor rule.
    if (stats.accepted as f64) * config.balance_tolerance < answer_space_size as f64 {
        allowed += 1;
    }
    count < allowed
}

/// A valid (binding, program, answer) triple found by the search, along with
/// the ill-posed/degenerate rejections hit since the previous candidate.
#[derive(Clone, Debug)]
pub struct SearchCandidate {
    pub binding: Binding,
    pub program: Program,
    pub answer: Value,
    pub pre_ill_posed: u64,
    pub pre_degenerate: u64,
}

#[derive(Clone, Debug, Default)]
pub struct SearchDiag {
    pub pruned_partials: u64,
    pub exhausted: bool,
}

struct Dfs<'a> {
    family: &'a QuestionFamily,
    scene: &'a SceneGraph,
    domains: Vec<Vec<Option<Value>>>,
    budget: usize,
    max_candidates: usize,
    candidates: Vec<SearchCandidate>,
    diag: SearchDiag,
    pending_ill_posed: u64,
    pending_degenerate: u64,
    scanned: usize,
}

/// Collects up to `max_candidates` valid bindings for a family on a scene.
///
/// Slots are assigned in declaration order with per-slot value order
/// shuffled by `rng`, so repeated calls with fresh streams explore different
/// corners of the space.
pub fn dfs_collect(
    family: &QuestionFamily,
    scene: &SceneGraph,
    rng: &mut impl Rng,
    max_candidates: usize,
    max_nodes: usize,
) -> (Vec<SearchCandidate>, SearchDiag) {
    let domains = family
        .slots
        .iter()
        .map(|slot| {
            let mut values: Vec<Option<Value>> =
                slot.slot_type.domain().into_iter().map(Some).collect();
            if slot.nullable {
                values.push(None);
            }
            // Fisher-Yates on the candidate order.
            for i in (1..values.len()).rev() {
                values.swap(i, rng.random_range(0..=i));
            }
            values
        })
        .collect();
    let mut dfs = Dfs {
        family,
        scene,
        domains,
        budget: max_nodes,
        max_candidates,
        candidates: Vec::new(),
        diag: SearchDiag::default(),
        pending_ill_posed: 0,
        pending_degenerate: 0,
        scanned: 0,
    };
    let mut binding = Binding::new();
    dfs.search(&mut binding, 0);
    dfs.diag.exhausted = dfs.candidates.len() < max_candidates;
    (dfs.candidates, dfs.diag)
}

/// Finds one binding whose program executes without ill-posedness and passes
/// the degeneracy check.
pub fn dfs_instantiate(
    family: &QuestionFamily,
    scene: &SceneGraph,
    rng: &mut impl Rng,
    max_nodes: usize,
) -> Result<Binding, Exhausted> {
    let (mut candidates, _) = dfs_collect(family, scene, rng, 1, max_nodes);
    candidates.pop().map(|c| c.binding).ok_or(Exhausted)
}

impl<'a> Dfs<'a> {
    /// Returns true when the search should stop (pool full or budget spent).
    fn search(&mut self, binding: &mut Binding, depth: usize) -> bool {
        if depth == self.family.slots.len() {
            return self.evaluate_full(binding);
        }
        let slot_name = self.family.slots[depth].name.clone();
        let values = self.domains[depth].clone();
        for value in values {
            if self.budget == 0 {
                return true;
            }
            self.budget -= 1;
            binding.bind(slot_name.clone(), value);
            let violated = self
                .family
                .constraints
                .iter()
                .any(|c| c.check(binding) == Some(false));
            if violated || !self.partial_feasible(binding) {
                self.diag.pruned_partials += 1;
            } else if self.search(binding, depth + 1) {
                binding.0.remove(&slot_name);
                return true;
            }
            binding.0.remove(&slot_name);
        }
        false
    }

    fn evaluate_full(&mut self, binding: &Binding) -> bool {
        let Ok(program) = crate::family::instantiate_unchecked(self.family, binding) else {
            return false;
        };
        match execute(&program, self.scene) {
            Err(ExecFailure::IllPosed { .. }) => {
                self.pending_ill_posed += 1;
                false
            }
            Err(_) => false,
            Ok(answer) => {
                if degeneracy_check(&program, self.scene).is_err() {
                    self.pending_degenerate += 1;
                    return false;
                }
                self.scanned += 1;
                // Keep the pool answer-diverse: once an answer holds half the
                // pool, pass further candidates with it by and keep hunting
                // for scarcer answers, up to a bounded scan.
                let per_answer_cap = self.max_candidates.div_ceil(2).max(1);
                let have = self
                    .candidates
                    .iter()
                    .filter(|c| c.answer == answer)
                    .count();
                if have < per_answer_cap {
                    self.candidates.push(SearchCandidate {
                        binding: binding.clone(),
                        program,
                        answer,
                        pre_ill_posed: std::mem::take(&mut self.pending_ill_posed),
                        pre_degenerate: std::mem::take(&mut self.pending_degenerate),
                    });
                }
                self.candidates.len() >= self.max_candidates
                    || self.scanned >= self.max_candidates.saturating_mul(4)
            }
        }
    }

    /// Ground-truth pruning: evaluates the template optimistically under the
    /// partial binding. Unbound filters pass everything through, unbound
    /// relations take the union over all four. Binding more slots can only
    /// shrink these sets, so an empty set feeding a `unique` (or a fully
    /// determined non-singleton) dooms every extension.
    fn partial_feasible(&self, binding: &Binding) -> bool {
        let template = &self.family.program_template;
        let mut sets: Vec<Option<(IdSet, bool)>> = Vec::with_capacity(template.len());
        for node in template {
            use FunctionKind::*;
            let entry = match node.kind {
                Scene => Some((self.scene.all_ids(), true)),
                FilterSize | FilterColor | FilterMaterial | FilterShape => {
                    let (set, exact) = sets[node.inputs[0]].clone().expect("filters consume sets");
                    match &node.value_inputs[0] {
                        TemplateArg::Literal(v) => {
                            match crate::program::filter_ids(self.scene, &set, node.kind, v) {
                                Ok(s) => Some((s, exact)),
                                Err(_) => return false,
                            }
                        }
                        TemplateArg::Slot(name) => match binding.get(name) {
                            None => Some((set, false)),
                            Some(None) => Some((set, exact)),
                            Some(Some(v)) => {
                                match crate::program::filter_ids(self.scene, &set, node.kind, v) {
                                    Ok(s) => Some((s, exact)),
                                    Err(_) => return false,
                                }
                            }
                        },
                    }
                }
                Unique => {
                    let (set, exact) = sets[node.inputs[0]].clone().expect("unique consumes sets");
                    if set.is_empty() || (exact && set.len() != 1) {
                        return false;
                    }
                    Some((set, exact))
                }
                Relate => {
                    let (set, exact) = sets[node.inputs[0]].clone().expect("relate consumes sets");
                    let (relations, bound): (Vec<Relation>, bool) = match &node.value_inputs[0] {
                        TemplateArg::Literal(Value::Relation(r)) => (vec![*r], true),
                        TemplateArg::Slot(name) => match binding.get(name) {
                            Some(Some(Value::Relation(r))) => (vec![*r], true),
                            _ => (Relation::ALL.to_vec(), false),
                        },
                        _ => (Relation::ALL.to_vec(), false),
                    };
                    let mut out = IdSet::new();
                    for &r in &relations {
                        for &o in &set {
                            if let Ok(ids) = self.scene.related_ids(r, o) {
                                out.extend(ids.iter().copied());
                            }
                        }
                    }
                    Some((out, exact && bound))
                }
                SameSize | SameColor | SameMaterial | SameShape => {
                    let (set, exact) = sets[node.inputs[0]].clone().expect("same consumes sets");
                    let kind = crate::program::same_attribute_kind(node.kind);
                    let mut out = IdSet::new();
                    for &o in &set {
                        if let Ok(ids) = self.scene.same_attribute_set(o, kind) {
                            out.extend(ids);
                        }
                    }
                    Some((out, exact))
                }
                And => {
                    let (a, ea) = sets[node.inputs[0]].clone().expect("and consumes sets");
                    let (b, eb) = sets[node.inputs[1]].clone().expect("and consumes sets");
                    Some((a.intersection(&b).copied().collect(), ea && eb))
                }
                Or => {
                    let (a, ea) = sets[node.inputs[0]].clone().expect("or consumes sets");
                    let (b, eb) = sets[node.inputs[1]].clone().expect("or consumes sets");
                    Some((a.union(&b).copied().collect(), ea && eb))
                }
                Count | Exist | QuerySize | QueryColor | QueryMaterial | QueryShape
                | EqualInteger | LessThan | GreaterThan | EqualSize | EqualColor
                | EqualMaterial | EqualShape => None,
            };
            sets.push(entry);
        }
        true
    }
}

struct PoolCandidate {
    program: Program,
    answer: Value,
    text: String,
    pre_ill_posed: u64,
    pre_degenerate: u64,
}

struct ScenePlan {
    rotation: Vec<usize>,
    pools: Vec<Vec<PoolCandidate>>,
    diags: Vec<SearchDiag>,
}

fn build_scene_plan(
    scene_index: usize,
    scene: &SceneGraph,
    families: &[QuestionFamily],
    synonyms: &SynonymTable,
    config: &GenerationConfig,
    pool_count: usize,
) -> ScenePlan {
    let n = families.len();
    let mut rot_rng = rng::derive(config.seed, &[stream::QUESTION, scene_index as u64]);
    let start = rot_rng.random_range(0..n);
    let rotation: Vec<usize> = (0..n).map(|i| (start + i) % n).collect();

    let mut pools: Vec<Vec<PoolCandidate>> = (0..n).map(|_| Vec::new()).collect();
    let mut diags: Vec<SearchDiag> = vec![SearchDiag::default(); n];
    for &fam_idx in rotation.iter().take(pool_count) {
        let family = &families[fam_idx];
        let mut search_rng = rng::derive(
            config.seed,
            &[stream::QUESTION, scene_index as u64, 1 + fam_idx as u64],
        );
        let (candidates, diag) = dfs_collect(
            family,
            scene,
            &mut search_rng,
            config.candidates_per_family,
            config.max_dfs_nodes,
        );
        diags[fam_idx] = diag;
        pools[fam_idx] = candidates
            .into_iter()
            .enumerate()
            .filter_map(|(ci, c)| {
                let mut text_rng = rng::derive(
                    config.seed,
                    &[stream::TEXT, scene_index as u64, fam_idx as u64, ci as u64],
                );
                let text = realize_text(family, &c.binding, synonyms, &mut text_rng).ok()?;
                Some(PoolCandidate {
                    program: c.program,
                    answer: c.answer,
                    text,
                    pre_ill_posed: c.pre_ill_posed,
                    pre_degenerate: c.pre_degenerate,
                })
            })
            .collect();
    }
    ScenePlan {
        rotation,
        pools,
        diags,
    }
}

/// Everything one generation run produces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetBundle {
    pub instances: Vec<QuestionInstance>,
    pub stats: GenerationStats,
    pub splits: SplitAssignment,
}

/// Generates `questions_per_image` accepted questions per scene.
///
/// Families rotate per scene with a stream-derived start. A scene that
/// cannot fill its quota from its candidate pools is skipped entirely (its
/// tentative stats are rolled back) and recorded in `scene_starved`.
pub fn generate_dataset(
    scenes: &[SceneGraph],
    families: &[QuestionFamily],
    synonyms: &SynonymTable,
    config: &GenerationConfig,
) -> Result<DatasetBundle, GenerateError> {
    if families.is_empty() {
        return Err(GenerateError::NoFamilies);
    }
    if config.questions_per_image == 0 {
        return Err(GenerateError::InvalidConfig(
            "questions_per_image must be >= 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.balance_tolerance) || config.balance_tolerance == 0.0 {
        return Err(GenerateError::InvalidConfig(
            "balance_tolerance must be in (0, 1]".into(),
        ));
    }
    let ids: Vec<u64> = scenes.iter().map(|s| s.scene_id).collect();
    if ids.len() > 1 && ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GenerateError::BadSceneIds);
    }

    // How many families get a candidate pool per scene; generous enough that
    // balance rejections rarely starve a scene.
    let pool_count = families.len().min((config.questions_per_image * 3).max(16));

    // Phase 1: per-scene searches, in parallel.
    let plans: Vec<ScenePlan> = par::map_indexed(scenes.len(), |i| {
        build_scene_plan(i, &scenes[i], families, synonyms, config, pool_count)
    });

    // Phase 2: sequential accept/reject decisions in scene order.
    let space_sizes: Vec<usize> = families
        .iter()
        .map(|f| {
            f.root_kind()
                .and_then(|k| answer_space(k).ok())
                .map_or(2, |space| space.len())
        })
        .collect();
    let mut stats = GenerationStats::default();
    for family in families {
        stats
            .families
            .insert(family.family_id.clone(), FamilyStats::default());
    }
    let mut balance_rng = rng::derive(config.seed, &[stream::BALANCE]);
    let mut accepted: Vec<(usize, String, Program, Value, String)> = Vec::new();

    for (scene_index, plan) in plans.iter().enumerate() {
        let snapshot = stats.families.clone();
        let mut scene_accepted: Vec<(usize, String, Program, Value, String)> = Vec::new();
        let mut seen_texts: BTreeSet<&str> = BTreeSet::new();
        let mut consumed: Vec<Vec<bool>> =
            plan.pools.iter().map(|p| vec![false; p.len()]).collect();
        let mut supply: usize = plan.pools.iter().map(Vec::len).sum();
        for (fam_idx, diag) in plan.diags.iter().enumerate() {
            let st = stats
                .families
                .get_mut(&families[fam_idx].family_id)
                .expect("stats pre-seeded");
            st.dfs_pruned_partials += diag.pruned_partials;
            st.dfs_exhausted += diag.exhausted as u64;
        }

        let mut pos = 0usize;
        while scene_accepted.len() < config.questions_per_image && supply > 0 {
            let fam_idx = plan.rotation[pos % plan.rotation.len()];
            pos += 1;
            let pool = &plan.pools[fam_idx];
            let family = &families[fam_idx];

            // Pick the unconsumed candidate whose answer bin is currently the
            // most under-filled (the search already randomized within bins).
            // Candidates that would clear the hard cap and carry fresh text
            // are preferred, so rejections only surface when the whole pool
            // is capped or duplicated.
            let pick = {
                let st = &stats.families[&family.family_id];
                let mut best: Option<(bool, bool, u64, usize)> = None;
                for (ci, candidate) in pool.iter().enumerate() {
                    if consumed[fam_idx][ci] {
                        continue;
                    }
                    let answer_key = candidate.answer.to_string();
                    let capped = config.balancing_enabled
                        && family.answer_balancing == BalanceMode::UniformHard
                        && !hard_cap_allows(st, space_sizes[fam_idx], &answer_key, config);
                    let dup = seen_texts.contains(candidate.text.as_str());
                    let bin = st.answers.get(&answer_key).copied().unwrap_or(0);
                    let key = (capped, dup, bin, ci);
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
                best.map(|(_, _, _, ci)| ci)
            };
            let Some(ci) = pick else { continue };
            consumed[fam_idx][ci] = true;
            supply -= 1;
            let candidate = &pool[ci];

            let st = stats
                .families
                .get_mut(&family.family_id)
                .expect("stats pre-seeded");
            st.attempts += 1 + candidate.pre_ill_posed + candidate.pre_degenerate;
            st.rejections.ill_posed += candidate.pre_ill_posed;
            st.rejections.degenerate += candidate.pre_degenerate;

            let answer_key = candidate.answer.to_string();
            let accept = !config.balancing_enabled
                || balance_accept(
                    st,
                    family.answer_balancing,
                    space_sizes[fam_idx],
                    &answer_key,
                    config,
                    &mut balance_rng,
                );
            if !accept {
                st.rejections.balance += 1;
                continue;
            }
            if seen_texts.contains(candidate.text.as_str()) {
                st.rejections.duplicate_text += 1;
                continue;
            }
            st.accepted += 1;
            *st.answers.entry(answer_key).or_insert(0) += 1;
            seen_texts.insert(candidate.text.as_str());
            scene_accepted.push((
                scene_index,
                family.family_id.clone(),
                candidate.program.clone(),
                candidate.answer.clone(),
                candidate.text.clone(),
            ));
        }

        if scene_accepted.len() < config.questions_per_image {
            stats.families = snapshot;
            stats.scene_starved.push(scenes[scene_index].scene_id);
        } else {
            accepted.extend(scene_accepted);
        }
    }

    // Phase 3: profiles in parallel, then dense question ids.
    let profiles: Vec<QuestionProfile> =
        par::map_slice(&accepted, |(scene_index, _, program, _, _)| {
            profile(program, &scenes[*scene_index]).expect("accepted questions profile cleanly")
        });
    let instances: Vec<QuestionInstance> = accepted
        .into_iter()
        .zip(profiles)
        .enumerate()
        .map(
            |(qid, ((scene_index, family_id, program, answer, text), profile))| QuestionInstance {
                question_id: qid as u64,
                scene_id: scenes[scene_index].scene_id,
                family_id,
                text,
                program,
                answer,
                profile,
            },
        )
        .collect();

    stats.total_questions = instances.len() as u64;
    let unique: BTreeSet<&str> = instances.iter().map(|q| q.text.as_str()).collect();
    stats.unique_text_fraction = if instances.is_empty() {
        1.0
    } else {
        unique.len() as f64 / instances.len() as f64
    };

    let splits = SplitAssignment::from_scene_ids(&ids);
    Ok(DatasetBundle {
        instances,
        stats,
        splits,
    })
}

/// Re-executes every instance against its scene and re-runs both validity
/// checks; returns human-readable violation strings.
pub fn revalidate(
    instances: &[QuestionInstance],
    scenes: &BTreeMap<u64, &SceneGraph>,
) -> Vec<String> {
    let results: Vec<Option<String>> = par::map_slice(instances, |q| {
        let Some(scene) = scenes.get(&q.scene_id) else {
            return Some(format!(
                "question {}: missing scene {}",
                q.question_id, q.scene_id
            ));
        };
        if let Err(e) = crate::program::typecheck(&q.program) {
            return Some(format!("question {}: {e}", q.question_id));
        }
        match execute(&q.program, scene) {
            Ok(answer) if answer == q.answer => {}
            Ok(answer) => {
                return Some(format!(
                    "question {}: stored answer {} but execution gives {answer}",
                    q.question_id, q.answer
                ))
            }
            Err(e) => return Some(format!("question {}: {e}", q.question_id)),
        }
        if let Err(e) = degeneracy_check(&q.program, scene) {
            return Some(format!("question {}: {e}", q.question_id));
        }
        match profile(&q.program, scene) {
            Ok(p) if p == q.profile => None,
            Ok(_) => Some(format!(
                "question {}: stored profile is stale",
                q.question_id
            )),
            Err(e) => Some(format!("question {}: {e}", q.question_id)),
        }
    });
    results.into_iter().flatten().collect()
}
