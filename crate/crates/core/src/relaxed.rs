//! Pruned-question execution and per-question analysis.
//!
//! Pruning replaces an object-typed input of some node with `scene()`, which
//! can make references ambiguous, so pruned programs run under relaxed
//! semantics: `unique` is the identity, functions over single objects map
//! over their input set and flatten, and query functions return sets of
//! attribute values. A comparison over value sets returns every boolean
//! obtainable by pairing the sides, so an ambiguous comparison never
//! masquerades as a definite answer.
//!
//! The effective question of a (program, scene) pair is the smallest pruned
//! candidate whose relaxed answer is exactly the strict answer; its node
//! count is the effective size.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::program::{
    eval_node, execute, filter_ids, same_attribute_kind, ExecFailure, FunctionKind, Program,
    ProgramNode, Ty, TypeError, Value,
};
use crate::scene::{Color, IdSet, Material, SceneGraph, Shape, Size};

/// A relaxed runtime value: every strict value lifted to a set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelaxedValue {
    ObjectSet(IdSet),
    Integers(BTreeSet<u8>),
    Booleans(BTreeSet<bool>),
    Sizes(BTreeSet<Size>),
    Colors(BTreeSet<Color>),
    Shapes(BTreeSet<Shape>),
    Materials(BTreeSet<Material>),
}

impl RelaxedValue {
    /// Whether this relaxed value is exactly the singleton of `strict`.
    pub fn is_singleton_of(&self, strict: &Value) -> bool {
        match (self, strict) {
            (RelaxedValue::ObjectSet(s), Value::Object(id)) => s.len() == 1 && s.contains(id),
            (RelaxedValue::ObjectSet(s), Value::ObjectSet(t)) => s == t,
            (RelaxedValue::Integers(s), Value::Integer(v)) => s.len() == 1 && s.contains(v),
            (RelaxedValue::Booleans(s), Value::Boolean(v)) => s.len() == 1 && s.contains(v),
            (RelaxedValue::Sizes(s), Value::Size(v)) => s.len() == 1 && s.contains(v),
            (RelaxedValue::Colors(s), Value::Color(v)) => s.len() == 1 && s.contains(v),
            (RelaxedValue::Shapes(s), Value::Shape(v)) => s.len() == 1 && s.contains(v),
            (RelaxedValue::Materials(s), Value::Material(v)) => s.len() == 1 && s.contains(v),
            _ => false,
        }
    }

    fn as_objects(&self, node: usize) -> Result<&IdSet, ExecFailure> {
        match self {
            RelaxedValue::ObjectSet(s) => Ok(s),
            _ => Err(TypeError::Mismatch {
                node,
                expected: Ty::ObjectSet,
                found: Ty::Boolean,
            }
            .into()),
        }
    }
}

/// Executes a program under relaxed semantics. Never raises ill-posed.
pub fn execute_relaxed(program: &Program, scene: &SceneGraph) -> Result<RelaxedValue, ExecFailure> {
    if program.nodes.is_empty() {
        return Err(TypeError::Empty.into());
    }
    let mut values: Vec<RelaxedValue> = Vec::with_capacity(program.nodes.len());
    for i in 0..program.nodes.len() {
        let value = eval_relaxed(program, scene, &values, i)?;
        values.push(value);
    }
    Ok(values.pop().expect("non-empty program"))
}

fn eval_relaxed(
    program: &Program,
    scene: &SceneGraph,
    values: &[RelaxedValue],
    i: usize,
) -> Result<RelaxedValue, ExecFailure> {
    use FunctionKind::*;
    let node = &program.nodes[i];
    let input = |slot: usize| -> Result<&RelaxedValue, ExecFailure> {
        let idx = *node.inputs.get(slot).ok_or(TypeError::InputArity {
            node: i,
            function: node.kind.name(),
            expected: node.kind.signature().inputs.len(),
            found: node.inputs.len(),
        })?;
        if idx >= i {
            return Err(TypeError::ForwardInput {
                node: i,
                input: idx,
            }
            .into());
        }
        Ok(&values[idx])
    };

    Ok(match node.kind {
        Scene => RelaxedValue::ObjectSet(scene.all_ids()),
        // Identity: pruned references stay as candidate sets.
        Unique => input(0)?.clone(),
        Relate => {
            let objects = input(0)?.as_objects(i)?.clone();
            let rel = match node.value_inputs.first() {
                Some(Value::Relation(r)) => *r,
                other => {
                    return Err(TypeError::Mismatch {
                        node: i,
                        expected: Ty::Relation,
                        found: other.map_or(Ty::Relation, Value::ty),
                    }
                    .into())
                }
            };
            let mut out = IdSet::new();
            for id in objects {
                let related = scene
                    .related_ids(rel, id)
                    .map_err(|_| ExecFailure::UnknownObject(id))?;
                out.extend(related.iter().copied());
            }
            RelaxedValue::ObjectSet(out)
        }
        Count => {
            let objects = input(0)?.as_objects(i)?;
            RelaxedValue::Integers(BTreeSet::from([objects.len() as u8]))
        }
        Exist => {
            let objects = input(0)?.as_objects(i)?;
            RelaxedValue::Booleans(BTreeSet::from([!objects.is_empty()]))
        }
        FilterSize | FilterColor | FilterMaterial | FilterShape => {
            let objects = input(0)?.as_objects(i)?;
            let literal = node.value_inputs.first().ok_or(TypeError::ValueArity {
                node: i,
                function: node.kind.name(),
                expected: 1,
                found: 0,
            })?;
            RelaxedValue::ObjectSet(filter_ids(scene, objects, node.kind, literal)?)
        }
        QuerySize => RelaxedValue::Sizes(query_set(scene, input(0)?.as_objects(i)?, |o| o.size)?),
        QueryColor => {
            RelaxedValue::Colors(query_set(scene, input(0)?.as_objects(i)?, |o| o.color)?)
        }
        QueryMaterial => {
            RelaxedValue::Materials(query_set(scene, input(0)?.as_objects(i)?, |o| o.material)?)
        }
        QueryShape => {
            RelaxedValue::Shapes(query_set(scene, input(0)?.as_objects(i)?, |o| o.shape)?)
        }
        And | Or => {
            let a = input(0)?.as_objects(i)?;
            let b = input(1)?.as_objects(i)?;
            let out: IdSet = if node.kind == And {
                a.intersection(b).copied().collect()
            } else {
                a.union(b).copied().collect()
            };
            RelaxedValue::ObjectSet(out)
        }
        SameSize | SameColor | SameMaterial | SameShape => {
            let objects = input(0)?.as_objects(i)?.clone();
            let kind = same_attribute_kind(node.kind);
            let mut out = IdSet::new();
            for id in objects {
                let same = scene
                    .same_attribute_set(id, kind)
                    .map_err(|_| ExecFailure::UnknownObject(id))?;
                out.extend(same);
            }
            RelaxedValue::ObjectSet(out)
        }
        EqualInteger | LessThan | GreaterThan => {
            let (a, b) = match (input(0)?, input(1)?) {
                (RelaxedValue::Integers(a), RelaxedValue::Integers(b)) => (a.clone(), b.clone()),
                _ => {
                    return Err(TypeError::Mismatch {
                        node: i,
                        expected: Ty::Integer,
                        found: Ty::Boolean,
                    }
                    .into())
                }
            };
            RelaxedValue::Booleans(pairings(&a, &b, |x, y| match node.kind {
                EqualInteger => x == y,
                LessThan => x < y,
                GreaterThan => x > y,
                _ => unreachable!(),
            }))
        }
        EqualSize | EqualColor | EqualMaterial | EqualShape => {
            let out = match (input(0)?, input(1)?) {
                (RelaxedValue::Sizes(a), RelaxedValue::Sizes(b)) => pairings(a, b, |x, y| x == y),
                (RelaxedValue::Colors(a), RelaxedValue::Colors(b)) => pairings(a, b, |x, y| x == y),
                (RelaxedValue::Shapes(a), RelaxedValue::Shapes(b)) => pairings(a, b, |x, y| x == y),
                (RelaxedValue::Materials(a), RelaxedValue::Materials(b)) => {
                    pairings(a, b, |x, y| x == y)
                }
                _ => {
                    return Err(TypeError::Mismatch {
                        node: i,
                        expected: node.kind.signature().inputs[0],
                        found: Ty::Boolean,
                    }
                    .into())
                }
            };
            RelaxedValue::Booleans(out)
        }
    })
}

fn query_set<T: Ord + Copy>(
    scene: &SceneGraph,
    objects: &IdSet,
    f: impl Fn(&crate::scene::ObjectRecord) -> T,
) -> Result<BTreeSet<T>, ExecFailure> {
    let mut out = BTreeSet::new();
    for &id in objects {
        let obj = scene
            .object(id)
            .map_err(|_| ExecFailure::UnknownObject(id))?;
        out.insert(f(obj));
    }
    Ok(out)
}

/// The set of booleans obtainable by pairing every element of `a` with every
/// element of `b`; empty inputs yield the empty set, which matches nothing.
fn pairings<T: Copy>(a: &BTreeSet<T>, b: &BTreeSet<T>, f: impl Fn(T, T) -> bool) -> BTreeSet<bool> {
    let mut out = BTreeSet::new();
    for &x in a {
        for &y in b {
            out.insert(f(x, y));
            if out.len() == 2 {
                return out;
            }
        }
    }
    out
}

/// Object-typed input edges eligible for pruning, as `(node, slot)` pairs in
/// innermost-out order. Edges already fed by a bare `scene()` are skipped.
pub fn prunable_edges(program: &Program) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (i, node) in program.nodes.iter().enumerate() {
        for (slot, &ty) in node.kind.signature().inputs.iter().enumerate() {
            if !matches!(ty, Ty::Object | Ty::ObjectSet) {
                continue;
            }
            let feeds = node.inputs.get(slot).copied();
            if feeds.map(|f| program.nodes[f].kind) == Some(FunctionKind::Scene) {
                continue;
            }
            edges.push((i, slot));
        }
    }
    edges
}

/// Rebuilds the program with each listed edge redirected to `scene()`,
/// dropping nodes that become unreachable from the root.
///
/// All redirected edges share one scene node; if the surviving program
/// already reaches an original scene node, that node is reused instead of
/// inserting a duplicate.
pub fn prune_program(program: &Program, edges: &[(usize, usize)]) -> Program {
    let n = program.nodes.len();
    let mut reachable = vec![false; n];
    let mut needs_scene = false;
    let mut stack = vec![program.root()];
    while let Some(i) = stack.pop() {
        if reachable[i] {
            continue;
        }
        reachable[i] = true;
        for (slot, &inp) in program.nodes[i].inputs.iter().enumerate() {
            if edges.contains(&(i, slot)) {
                needs_scene = true;
            } else {
                stack.push(inp);
            }
        }
    }

    let reachable_scene =
        (0..n).find(|&i| reachable[i] && program.nodes[i].kind == FunctionKind::Scene);
    let mut nodes: Vec<ProgramNode> = Vec::new();
    let mut remap = vec![usize::MAX; n];
    if needs_scene && reachable_scene.is_none() {
        nodes.push(ProgramNode {
            kind: FunctionKind::Scene,
            inputs: vec![],
            value_inputs: vec![],
        });
    }
    let mut scene_idx = if reachable_scene.is_none() {
        Some(0)
    } else {
        None
    };
    for i in 0..n {
        if !reachable[i] {
            continue;
        }
        let node = &program.nodes[i];
        let inputs = node
            .inputs
            .iter()
            .enumerate()
            .map(|(slot, &inp)| {
                if edges.contains(&(i, slot)) {
                    usize::MAX
                } else {
                    remap[inp]
                }
            })
            .collect::<Vec<_>>();
        remap[i] = nodes.len();
        if reachable_scene == Some(i) {
            scene_idx = Some(remap[i]);
        }
        nodes.push(ProgramNode {
            kind: node.kind,
            inputs,
            value_inputs: node.value_inputs.clone(),
        });
    }
    let scene_idx = scene_idx.expect("a scene node exists whenever an edge was pruned");
    for node in &mut nodes {
        for inp in &mut node.inputs {
            if *inp == usize::MAX {
                *inp = scene_idx;
            }
        }
    }
    Program::new(nodes)
}

/// One evaluated pruning candidate.
#[derive(Clone, Debug)]
pub struct PruneCandidate {
    /// The redirected edge, or `None` for the unpruned original.
    pub edge: Option<(usize, usize)>,
    pub program: Program,
    pub relaxed: RelaxedValue,
    pub agrees: bool,
}

/// Enumerates the single-edge pruning candidates in innermost-out order,
/// each evaluated under relaxed semantics against the strict `answer`.
pub fn prune_candidates(
    program: &Program,
    scene: &SceneGraph,
    answer: &Value,
) -> Result<Vec<PruneCandidate>, ExecFailure> {
    let mut out = Vec::new();
    for edge in prunable_edges(program) {
        let pruned = prune_program(program, &[edge]);
        let relaxed = execute_relaxed(&pruned, scene)?;
        let agrees = relaxed.is_singleton_of(answer);
        out.push(PruneCandidate {
            edge: Some(edge),
            program: pruned,
            relaxed,
            agrees,
        });
    }
    let relaxed = execute_relaxed(program, scene)?;
    let agrees = relaxed.is_singleton_of(answer);
    out.push(PruneCandidate {
        edge: None,
        program: program.clone(),
        relaxed,
        agrees,
    });
    Ok(out)
}

/// Computes the effective question: the smallest pruning candidate whose
/// relaxed answer equals the strict answer, ties broken by enumeration order.
/// The unpruned program is always a valid fallback candidate.
pub fn effective_question(
    program: &Program,
    scene: &SceneGraph,
) -> Result<(Program, usize), ExecFailure> {
    let answer = execute(program, scene)?;
    let candidates = prune_candidates(program, scene, &answer)?;
    let best = candidates
        .into_iter()
        .filter(|c| c.agrees)
        .min_by_key(|c| c.program.len())
        .expect("the unpruned program always agrees");
    let size = best.program.len();
    Ok((best.program, size))
}

/// Strict execution with absolute half-plane semantics for `relate`: each
/// relate node ignores its input object and returns the objects in the half
/// of the camera frame named by its relation. Everything upstream still
/// executes strictly, so a reference that only resolves under true relational
/// semantics can become ill-posed here.
pub fn execute_absolute(program: &Program, scene: &SceneGraph) -> Result<Value, ExecFailure> {
    if program.nodes.is_empty() {
        return Err(TypeError::Empty.into());
    }
    let mut values: Vec<Value> = Vec::with_capacity(program.nodes.len());
    for i in 0..program.nodes.len() {
        let node = &program.nodes[i];
        let value = if node.kind == FunctionKind::Relate {
            match node.value_inputs.first() {
                Some(Value::Relation(r)) => Value::ObjectSet(scene.half_plane_ids(*r)),
                other => {
                    return Err(TypeError::Mismatch {
                        node: i,
                        expected: Ty::Relation,
                        found: other.map_or(Ty::Relation, Value::ty),
                    }
                    .into())
                }
            }
        } else {
            eval_node(program, scene, &values, i)?
        };
        values.push(value);
    }
    Ok(values.pop().expect("non-empty"))
}

/// Whether the question can be answered with absolute spatial reasoning:
/// executing with half-plane relate semantics leaves the answer unchanged.
pub fn absolute_spatial_answerable(
    program: &Program,
    scene: &SceneGraph,
) -> Result<bool, ExecFailure> {
    let answer = execute(program, scene)?;
    Ok(match execute_absolute(program, scene) {
        Ok(modified) => modified == answer,
        // Half-plane semantics broke a reference; the answer changed.
        Err(ExecFailure::IllPosed { .. }) => false,
        Err(other) => return Err(other),
    })
}

/// Whether the program is a single chain or has a two-branch merge node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Tree,
}

/// Analysis metadata attached to every generated question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionProfile {
    pub question_type: FunctionKind,
    pub size: usize,
    pub effective_size: usize,
    pub topology: Topology,
    pub spatial_relation_count: usize,
    pub same_attribute_relation_count: usize,
    pub absolute_spatial_answerable: bool,
}

/// Profiles a question whose strict execution succeeds.
pub fn profile(program: &Program, scene: &SceneGraph) -> Result<QuestionProfile, ExecFailure> {
    let question_type = program.root_kind().ok_or(TypeError::Empty)?;
    let (_, effective_size) = effective_question(program, scene)?;
    let topology = if program.nodes.iter().any(|n| n.inputs.len() == 2) {
        Topology::Tree
    } else {
        Topology::Chain
    };
    Ok(QuestionProfile {
        question_type,
        size: program.len(),
        effective_size,
        topology,
        spatial_relation_count: program
            .nodes
            .iter()
            .filter(|n| n.kind == FunctionKind::Relate)
            .count(),
        same_attribute_relation_count: program
            .nodes
            .iter()
            .filter(|n| n.kind.is_same_attribute())
            .count(),
        absolute_spatial_answerable: absolute_spatial_answerable(program, scene)?,
    })
}
