//! Independent re-implementations used to cross-check the library: a naive
//! recursive executor, a relaxed set evaluator over arbitrary prune subsets,
//! and validity re-checkers. These deliberately share no evaluation code
//! with the crate; they only reuse the data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use sceneq_core::program::{FunctionKind, Program, ProgramNode, Ty, Value};
use sceneq_core::scene::{Color, Material, Relation, SceneGraph, Shape, Size};

pub fn worked_scene() -> SceneGraph {
    SceneGraph::from_json_str(include_str!("../data/worked_scene.json")).unwrap()
}

pub fn worked_program() -> Program {
    Program::from_json_str(include_str!("../data/worked_program.json")).unwrap()
}

// ---------------------------------------------------------------------------
// Naive strict executor.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleFailure {
    IllPosed,
    Type,
    Unknown,
}

fn axes(scene: &SceneGraph) -> ([f64; 2], [f64; 2]) {
    let v = scene.camera.view;
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let behind = [-v[0] / n, -v[1] / n];
    let right = [behind[1], -behind[0]];
    (behind, right)
}

/// Whether object `a` stands in relation `r` to object `b`, from first
/// principles (positions and the camera view vector only).
pub fn oracle_related(scene: &SceneGraph, a: usize, b: usize, r: Relation) -> bool {
    if a == b {
        return false;
    }
    let (behind, right) = axes(scene);
    let pa = scene.objects[a].position;
    let pb = scene.objects[b].position;
    let d = [pa[0] - pb[0], pa[1] - pb[1]];
    match r {
        Relation::Behind => d[0] * behind[0] + d[1] * behind[1] > 0.0,
        Relation::Front => d[0] * behind[0] + d[1] * behind[1] < 0.0,
        Relation::Right => d[0] * right[0] + d[1] * right[1] > 0.0,
        Relation::Left => d[0] * right[0] + d[1] * right[1] < 0.0,
    }
}

fn attr_value(scene: &SceneGraph, id: usize, kind: FunctionKind) -> Value {
    let o = &scene.objects[id];
    match kind {
        FunctionKind::QuerySize | FunctionKind::FilterSize | FunctionKind::SameSize => {
            Value::Size(o.size)
        }
        FunctionKind::QueryColor | FunctionKind::FilterColor | FunctionKind::SameColor => {
            Value::Color(o.color)
        }
        FunctionKind::QueryMaterial | FunctionKind::FilterMaterial | FunctionKind::SameMaterial => {
            Value::Material(o.material)
        }
        FunctionKind::QueryShape | FunctionKind::FilterShape | FunctionKind::SameShape => {
            Value::Shape(o.shape)
        }
        _ => unreachable!(),
    }
}

/// Evaluates every node of the program the slow way. Like the production
/// executor, an ill-posed unique anywhere in the node list fails the whole
/// program (there is no short-circuiting).
pub fn oracle_execute(program: &Program, scene: &SceneGraph) -> Result<Value, OracleFailure> {
    let mut values: Vec<Value> = Vec::new();
    for node in &program.nodes {
        let get = |slot: usize| -> Result<Value, OracleFailure> {
            node.inputs
                .get(slot)
                .map(|&i| values[i].clone())
                .ok_or(OracleFailure::Type)
        };
        let objects = |v: Value| -> Result<Vec<usize>, OracleFailure> {
            match v {
                Value::ObjectSet(ids) => Ok(ids.into_iter().collect()),
                _ => Err(OracleFailure::Type),
            }
        };
        let object = |v: Value| -> Result<usize, OracleFailure> {
            match v {
                Value::Object(id) => Ok(id),
                _ => Err(OracleFailure::Type),
            }
        };
        use FunctionKind::*;
        let value = match node.kind {
            Scene => Value::ObjectSet((0..scene.objects.len()).collect()),
            Unique => {
                let ids = objects(get(0)?)?;
                if ids.len() != 1 {
                    return Err(OracleFailure::IllPosed);
                }
                Value::Object(ids[0])
            }
            Relate => {
                let anchor = object(get(0)?)?;
                if anchor >= scene.objects.len() {
                    return Err(OracleFailure::Unknown);
                }
                let rel = match node.value_inputs.first() {
                    Some(Value::Relation(r)) => *r,
                    _ => return Err(OracleFailure::Type),
                };
                Value::ObjectSet(
                    (0..scene.objects.len())
                        .filter(|&x| oracle_related(scene, x, anchor, rel))
                        .collect(),
                )
            }
            Count => Value::Integer(objects(get(0)?)?.len() as u8),
            Exist => Value::Boolean(!objects(get(0)?)?.is_empty()),
            FilterSize | FilterColor | FilterMaterial | FilterShape => {
                let want = node
                    .value_inputs
                    .first()
                    .cloned()
                    .ok_or(OracleFailure::Type)?;
                let ids = objects(get(0)?)?;
                Value::ObjectSet(
                    ids.into_iter()
                        .filter(|&id| attr_value(scene, id, node.kind) == want)
                        .collect(),
                )
            }
            QuerySize | QueryColor | QueryMaterial | QueryShape => {
                let id = object(get(0)?)?;
                if id >= scene.objects.len() {
                    return Err(OracleFailure::Unknown);
                }
                attr_value(scene, id, node.kind)
            }
            And | Or => {
                let a: BTreeSet<usize> = objects(get(0)?)?.into_iter().collect();
                let b: BTreeSet<usize> = objects(get(1)?)?.into_iter().collect();
                let out: BTreeSet<usize> = if node.kind == And {
                    a.intersection(&b).copied().collect()
                } else {
                    a.union(&b).copied().collect()
                };
                Value::ObjectSet(out)
            }
            SameSize | SameColor | SameMaterial | SameShape => {
                let id = object(get(0)?)?;
                if id >= scene.objects.len() {
                    return Err(OracleFailure::Unknown);
                }
                let anchor = attr_value(scene, id, node.kind);
                Value::ObjectSet(
                    (0..scene.objects.len())
                        .filter(|&x| x != id && attr_value(scene, x, node.kind) == anchor)
                        .collect(),
                )
            }
            EqualInteger | LessThan | GreaterThan => {
                let (a, b) = match (get(0)?, get(1)?) {
                    (Value::Integer(a), Value::Integer(b)) => (a, b),
                    _ => return Err(OracleFailure::Type),
                };
                Value::Boolean(match node.kind {
                    EqualInteger => a == b,
                    LessThan => a < b,
                    GreaterThan => a > b,
                    _ => unreachable!(),
                })
            }
            EqualSize | EqualColor | EqualMaterial | EqualShape => {
                let (a, b) = (get(0)?, get(1)?);
                if a.ty() != b.ty()
                    || !matches!(a.ty(), Ty::Size | Ty::Color | Ty::Material | Ty::Shape)
                {
                    return Err(OracleFailure::Type);
                }
                Value::Boolean(a == b)
            }
        };
        values.push(value);
    }
    values.pop().ok_or(OracleFailure::Type)
}

/// Compares a production outcome with the oracle's.
pub fn outcomes_match(
    ours: &Result<Value, sceneq_core::program::ExecFailure>,
    oracle: &Result<Value, OracleFailure>,
) -> bool {
    use sceneq_core::program::ExecFailure;
    match (ours, oracle) {
        (Ok(a), Ok(b)) => a == b,
        (Err(ExecFailure::IllPosed { .. }), Err(OracleFailure::IllPosed)) => true,
        (Err(ExecFailure::Type(_)), Err(OracleFailure::Type)) => true,
        (Err(ExecFailure::UnknownObject(_)), Err(OracleFailure::Unknown)) => true,
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Random well-typed program generator.

fn indices_of(types: &[Ty], want: Ty) -> Vec<usize> {
    types
        .iter()
        .enumerate()
        .filter(|(_, &t)| t == want)
        .map(|(i, _)| i)
        .collect()
}

fn random_literal(rng: &mut impl Rng, ty: Ty) -> Value {
    match ty {
        Ty::Size => Value::Size(Size::ALL[rng.random_range(0..Size::ALL.len())]),
        Ty::Color => Value::Color(Color::ALL[rng.random_range(0..Color::ALL.len())]),
        Ty::Material => Value::Material(Material::ALL[rng.random_range(0..Material::ALL.len())]),
        Ty::Shape => Value::Shape(Shape::ALL[rng.random_range(0..Shape::ALL.len())]),
        Ty::Relation => Value::Relation(Relation::ALL[rng.random_range(0..Relation::ALL.len())]),
        _ => unreachable!("only literal types"),
    }
}

/// Grows a random well-typed program of at most `max_nodes` nodes, ending in
/// an answer-producing root. Uniques over random sets arise freely, so both
/// successful and ill-posed outcomes are produced.
pub fn random_program(rng: &mut impl Rng, max_nodes: usize) -> Program {
    assert!(max_nodes >= 3);
    let mut nodes: Vec<ProgramNode> = vec![ProgramNode {
        kind: FunctionKind::Scene,
        inputs: vec![],
        value_inputs: vec![],
    }];
    let mut types: Vec<Ty> = vec![Ty::ObjectSet];
    let target = rng.random_range(3..=max_nodes);

    while nodes.len() + 2 < target {
        let sets = indices_of(&types, Ty::ObjectSet);
        let objs = indices_of(&types, Ty::Object);
        let ints = indices_of(&types, Ty::Integer);
        use FunctionKind::*;
        let mut options: Vec<FunctionKind> = Vec::new();
        options.extend_from_slice(&[FilterSize, FilterColor, FilterMaterial, FilterShape]);
        options.extend_from_slice(&[Unique, Unique, And, Or, Count]);
        if !objs.is_empty() {
            options.extend_from_slice(&[
                Relate,
                Relate,
                SameSize,
                SameColor,
                SameMaterial,
                SameShape,
            ]);
        }
        if !ints.is_empty() {
            options.extend_from_slice(&[EqualInteger, LessThan, GreaterThan]);
        }
        let kind = options[rng.random_range(0..options.len())];
        let sig = kind.signature();
        let mut inputs = Vec::new();
        let mut ok = true;
        for &ty in sig.inputs {
            let pool = match ty {
                Ty::ObjectSet => &sets,
                Ty::Object => &objs,
                Ty::Integer => &ints,
                _ => {
                    ok = false;
                    break;
                }
            };
            if pool.is_empty() {
                ok = false;
                break;
            }
            inputs.push(pool[rng.random_range(0..pool.len())]);
        }
        if !ok {
            continue;
        }
        let value_inputs = sig
            .value_inputs
            .iter()
            .map(|&ty| random_literal(rng, ty))
            .collect();
        types.push(sig.output);
        nodes.push(ProgramNode {
            kind,
            inputs,
            value_inputs,
        });
    }

    // Coerce the final node into an answer-producing root.
    let last = nodes.len() - 1;
    match types[last] {
        Ty::ObjectSet => {
            let kind = if rng.random_bool(0.5) {
                FunctionKind::Count
            } else {
                FunctionKind::Exist
            };
            nodes.push(ProgramNode {
                kind,
                inputs: vec![last],
                value_inputs: vec![],
            });
        }
        Ty::Object => {
            let kind = [
                FunctionKind::QuerySize,
                FunctionKind::QueryColor,
                FunctionKind::QueryMaterial,
                FunctionKind::QueryShape,
            ][rng.random_range(0..4)];
            nodes.push(ProgramNode {
                kind,
                inputs: vec![last],
                value_inputs: vec![],
            });
        }
        // Integer, boolean, and attribute outputs already root a question.
        _ => {}
    }
    Program::new(nodes)
}

// ---------------------------------------------------------------------------
// Independent validity re-checkers.

/// Degeneracy, re-derived from scratch: for every unique reference whose
/// filter prefix bottoms out at a relate/same qualifier, running the filters
/// alone over the whole scene must not isolate the same object.
pub fn naive_degenerate(program: &Program, scene: &SceneGraph) -> bool {
    for (i, node) in program.nodes.iter().enumerate() {
        if node.kind != FunctionKind::Unique {
            continue;
        }
        let mut filters: Vec<usize> = Vec::new();
        let mut cur = node.inputs[0];
        while matches!(
            program.nodes[cur].kind,
            FunctionKind::FilterSize
                | FunctionKind::FilterColor
                | FunctionKind::FilterMaterial
                | FunctionKind::FilterShape
        ) {
            filters.push(cur);
            cur = program.nodes[cur].inputs[0];
        }
        let is_qualifier = matches!(
            program.nodes[cur].kind,
            FunctionKind::Relate
                | FunctionKind::SameSize
                | FunctionKind::SameColor
                | FunctionKind::SameMaterial
                | FunctionKind::SameShape
        );
        if !is_qualifier {
            continue;
        }
        // Resolve the original reference with the naive executor.
        let sub = Program::new(program.nodes[..=i].to_vec());
        let Ok(Value::Object(original)) = oracle_execute(&sub, scene) else {
            continue;
        };
        let survivors: Vec<usize> = (0..scene.objects.len())
            .filter(|&id| {
                filters.iter().all(|&f| {
                    attr_value(scene, id, program.nodes[f].kind) == program.nodes[f].value_inputs[0]
                })
            })
            .collect();
        if survivors == [original] {
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Relaxed evaluation over arbitrary prune subsets, for the effective-size
// oracle. Every value is a set of strict values.

type RelaxedSet = BTreeSet<Value>;

fn all_objects(scene: &SceneGraph) -> RelaxedSet {
    (0..scene.objects.len()).map(Value::Object).collect()
}

fn relaxed_eval(
    program: &Program,
    scene: &SceneGraph,
    pruned: &BTreeSet<(usize, usize)>,
    node_idx: usize,
    memo: &mut BTreeMap<usize, RelaxedSet>,
) -> RelaxedSet {
    if let Some(v) = memo.get(&node_idx) {
        return v.clone();
    }
    let node = &program.nodes[node_idx];
    let input = |slot: usize, memo: &mut BTreeMap<usize, RelaxedSet>| -> RelaxedSet {
        if pruned.contains(&(node_idx, slot)) {
            all_objects(scene)
        } else {
            relaxed_eval(program, scene, pruned, node.inputs[slot], memo)
        }
    };
    use FunctionKind::*;
    let ids = |set: &RelaxedSet| -> Vec<usize> {
        set.iter()
            .filter_map(|v| match v {
                Value::Object(id) => Some(*id),
                _ => None,
            })
            .collect()
    };
    let result: RelaxedSet = match node.kind {
        Scene => all_objects(scene),
        Unique => input(0, memo),
        Relate => {
            let anchors = ids(&input(0, memo));
            let rel = match node.value_inputs.first() {
                Some(Value::Relation(r)) => *r,
                _ => return RelaxedSet::new(),
            };
            (0..scene.objects.len())
                .filter(|&x| anchors.iter().any(|&a| oracle_related(scene, x, a, rel)))
                .map(Value::Object)
                .collect()
        }
        Count => [Value::Integer(ids(&input(0, memo)).len() as u8)].into(),
        Exist => [Value::Boolean(!ids(&input(0, memo)).is_empty())].into(),
        FilterSize | FilterColor | FilterMaterial | FilterShape => {
            let want = node.value_inputs[0].clone();
            ids(&input(0, memo))
                .into_iter()
                .filter(|&id| attr_value(scene, id, node.kind) == want)
                .map(Value::Object)
                .collect()
        }
        QuerySize | QueryColor | QueryMaterial | QueryShape => ids(&input(0, memo))
            .into_iter()
            .map(|id| attr_value(scene, id, node.kind))
            .collect(),
        And => {
            let a = input(0, memo);
            let b = input(1, memo);
            a.intersection(&b).cloned().collect()
        }
        Or => {
            let a = input(0, memo);
            let b = input(1, memo);
            a.union(&b).cloned().collect()
        }
        SameSize | SameColor | SameMaterial | SameShape => {
            let anchors = ids(&input(0, memo));
            (0..scene.objects.len())
                .filter(|&x| {
                    anchors.iter().any(|&a| {
                        a != x && attr_value(scene, a, node.kind) == attr_value(scene, x, node.kind)
                    })
                })
                .map(Value::Object)
                .collect()
        }
        EqualInteger | LessThan | GreaterThan | EqualSize | EqualColor | EqualMaterial
        | EqualShape => {
            let a = input(0, memo);
            let b = input(1, memo);
            let mut out = RelaxedSet::new();
            for x in &a {
                for y in &b {
                    let verdict = match node.kind {
                        EqualInteger | EqualSize | EqualColor | EqualMaterial | EqualShape => {
                            x == y
                        }
                        LessThan => x < y,
                        GreaterThan => x > y,
                        _ => unreachable!(),
                    };
                    out.insert(Value::Boolean(verdict));
                }
            }
            out
        }
    };
    memo.insert(node_idx, result.clone());
    result
}

fn prunable_edges(program: &Program) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (i, node) in program.nodes.iter().enumerate() {
        for (slot, &ty) in node.kind.signature().inputs.iter().enumerate() {
            if matches!(ty, Ty::Object | Ty::ObjectSet)
                && program.nodes[node.inputs[slot]].kind != FunctionKind::Scene
            {
                edges.push((i, slot));
            }
        }
    }
    edges
}

fn pruned_size(program: &Program, pruned: &BTreeSet<(usize, usize)>) -> usize {
    let mut reachable = BTreeSet::new();
    let mut cut_an_edge = false;
    let mut stack = vec![program.root()];
    while let Some(i) = stack.pop() {
        if !reachable.insert(i) {
            continue;
        }
        for (slot, &inp) in program.nodes[i].inputs.iter().enumerate() {
            if pruned.contains(&(i, slot)) {
                cut_an_edge = true;
            } else {
                stack.push(inp);
            }
        }
    }
    let has_scene = reachable
        .iter()
        .any(|&i| program.nodes[i].kind == FunctionKind::Scene);
    reachable.len() + usize::from(cut_an_edge && !has_scene)
}

/// Exhaustive effective size: the minimum size over all prune subsets whose
/// relaxed answer is exactly the strict answer. Exponential in the edge
/// count; callers should gate on `prunable_edge_count`.
pub fn exhaustive_effective_size(program: &Program, scene: &SceneGraph, answer: &Value) -> usize {
    let edges = prunable_edges(program);
    let singleton: RelaxedSet = [answer.clone()].into();
    let mut best = program.len();
    for mask in 1u32..(1 << edges.len()) {
        let subset: BTreeSet<(usize, usize)> = edges
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &e)| e)
            .collect();
        let size = pruned_size(program, &subset);
        if size >= best {
            continue;
        }
        let mut memo = BTreeMap::new();
        let result = relaxed_eval(program, scene, &subset, program.root(), &mut memo);
        if result == singleton {
            best = size;
        }
    }
    best
}

pub fn prunable_edge_count(program: &Program) -> usize {
    prunable_edges(program).len()
}
