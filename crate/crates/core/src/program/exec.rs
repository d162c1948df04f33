//! Strict bottom-up execution of programs against scene graphs.
//!
//! Evaluation is a single pass in topological order with no short-circuiting:
//! an ill-posed `unique` anywhere in the DAG fails the whole question, which
//! is exactly what generation-time rejection needs. Execution is pure: the
//! outcome is a function of `(program, scene)` alone.

use thiserror::Error;

use super::{typecheck::TypeError, FunctionKind, Program, Ty, Value};
use crate::scene::{AttributeKind, IdSet, SceneGraph};

/// Why execution failed.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExecFailure {
    /// `unique` saw a set whose size is not one; the question is ill-posed.
    #[error("ill-posed: unique over a set of size {set_size} at node {node}")]
    IllPosed { node: usize, set_size: usize },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("unknown object id {0}")]
    UnknownObject(usize),
}

/// Either the answer value or a failure record.
pub type ExecOutcome = Result<Value, ExecFailure>;

/// Executes the program, returning the root value.
pub fn execute(program: &Program, scene: &SceneGraph) -> ExecOutcome {
    exec_all(program, scene).map(|mut values| values.pop().expect("non-empty program"))
}

/// Executes the program, returning every node's value in node order.
///
/// Exposed so analyses (degeneracy checking, pruning) can inspect
/// intermediate references without re-walking subprograms.
pub fn exec_all(program: &Program, scene: &SceneGraph) -> Result<Vec<Value>, ExecFailure> {
    if program.nodes.is_empty() {
        return Err(TypeError::Empty.into());
    }
    let mut values: Vec<Value> = Vec::with_capacity(program.nodes.len());
    for i in 0..program.nodes.len() {
        let value = eval_node(program, scene, &values, i)?;
        values.push(value);
    }
    Ok(values)
}

fn input<'v>(
    program: &Program,
    values: &'v [Value],
    node: usize,
    slot: usize,
) -> Result<&'v Value, ExecFailure> {
    let idx = *program.nodes[node]
        .inputs
        .get(slot)
        .ok_or(TypeError::InputArity {
            node,
            function: program.nodes[node].kind.name(),
            expected: program.nodes[node].kind.signature().inputs.len(),
            found: program.nodes[node].inputs.len(),
        })?;
    if idx >= node {
        return Err(TypeError::ForwardInput { node, input: idx }.into());
    }
    Ok(&values[idx])
}

fn as_set(v: &Value, node: usize) -> Result<&IdSet, ExecFailure> {
    match v {
        Value::ObjectSet(s) => Ok(s),
        other => Err(TypeError::Mismatch {
            node,
            expected: Ty::ObjectSet,
            found: other.ty(),
        }
        .into()),
    }
}

fn as_object(v: &Value, node: usize) -> Result<usize, ExecFailure> {
    match v {
        Value::Object(id) => Ok(*id),
        other => Err(TypeError::Mismatch {
            node,
            expected: Ty::Object,
            found: other.ty(),
        }
        .into()),
    }
}

fn as_integer(v: &Value, node: usize) -> Result<u8, ExecFailure> {
    match v {
        Value::Integer(n) => Ok(*n),
        other => Err(TypeError::Mismatch {
            node,
            expected: Ty::Integer,
            found: other.ty(),
        }
        .into()),
    }
}

fn value_input(
    program: &Program,
    node: usize,
    slot: usize,
    expected: Ty,
) -> Result<&Value, ExecFailure> {
    let v = program.nodes[node]
        .value_inputs
        .get(slot)
        .ok_or(TypeError::ValueArity {
            node,
            function: program.nodes[node].kind.name(),
            expected: program.nodes[node].kind.signature().value_inputs.len(),
            found: program.nodes[node].value_inputs.len(),
        })?;
    if v.ty() != expected {
        return Err(TypeError::Mismatch {
            node,
            expected,
            found: v.ty(),
        }
        .into());
    }
    Ok(v)
}

/// Applies one attribute filter to a set of ids against a scene.
pub fn filter_ids(
    scene: &SceneGraph,
    set: &IdSet,
    kind: FunctionKind,
    literal: &Value,
) -> Result<IdSet, ExecFailure> {
    let mut out = IdSet::new();
    for &id in set {
        let obj = scene
            .object(id)
            .map_err(|_| ExecFailure::UnknownObject(id))?;
        let keep = match (kind, literal) {
            (FunctionKind::FilterSize, Value::Size(v)) => obj.size == *v,
            (FunctionKind::FilterColor, Value::Color(v)) => obj.color == *v,
            (FunctionKind::FilterMaterial, Value::Material(v)) => obj.material == *v,
            (FunctionKind::FilterShape, Value::Shape(v)) => obj.shape == *v,
            _ => unreachable!("filter literal type is checked by the caller"),
        };
        if keep {
            out.insert(id);
        }
    }
    Ok(out)
}

pub fn same_attribute_kind(kind: FunctionKind) -> AttributeKind {
    match kind {
        FunctionKind::SameSize => AttributeKind::Size,
        FunctionKind::SameColor => AttributeKind::Color,
        FunctionKind::SameMaterial => AttributeKind::Material,
        FunctionKind::SameShape => AttributeKind::Shape,
        _ => unreachable!("not a same-attribute kind"),
    }
}

pub(crate) fn eval_node(
    program: &Program,
    scene: &SceneGraph,
    values: &[Value],
    i: usize,
) -> Result<Value, ExecFailure> {
    use FunctionKind::*;
    let kind = program.nodes[i].kind;
    Ok(match kind {
        Scene => Value::ObjectSet(scene.all_ids()),
        Unique => {
            let set = as_set(input(program, values, i, 0)?, i)?;
            if set.len() == 1 {
                Value::Object(*set.iter().next().expect("singleton"))
            } else {
                return Err(ExecFailure::IllPosed {
                    node: i,
                    set_size: set.len(),
                });
            }
        }
        Relate => {
            let id = as_object(input(program, values, i, 0)?, i)?;
            let rel = match value_input(program, i, 0, Ty::Relation)? {
                Value::Relation(r) => *r,
                _ => unreachable!(),
            };
            let related = scene
                .related_ids(rel, id)
                .map_err(|_| ExecFailure::UnknownObject(id))?;
            Value::ObjectSet(related.iter().copied().collect())
        }
        Count => {
            let set = as_set(input(program, values, i, 0)?, i)?;
            assert!(
                set.len() <= 10,
                "sets never exceed the ten-object scene bound"
            );
            Value::Integer(set.len() as u8)
        }
        Exist => {
            let set = as_set(input(program, values, i, 0)?, i)?;
            Value::Boolean(!set.is_empty())
        }
        FilterSize | FilterColor | FilterMaterial | FilterShape => {
            let set = as_set(input(program, values, i, 0)?, i)?;
            let expected = kind.signature().value_inputs[0];
            let literal = value_input(program, i, 0, expected)?;
            Value::ObjectSet(filter_ids(scene, set, kind, literal)?)
        }
        QuerySize | QueryColor | QueryMaterial | QueryShape => {
            let id = as_object(input(program, values, i, 0)?, i)?;
            let obj = scene
                .object(id)
                .map_err(|_| ExecFailure::UnknownObject(id))?;
            match kind {
                QuerySize => Value::Size(obj.size),
                QueryColor => Value::Color(obj.color),
                QueryMaterial => Value::Material(obj.material),
                QueryShape => Value::Shape(obj.shape),
                _ => unreachable!(),
            }
        }
        And | Or => {
            let a = as_set(input(program, values, i, 0)?, i)?;
            let b = as_set(input(program, values, i, 1)?, i)?;
            let out: IdSet = if kind == And {
                a.intersection(b).copied().collect()
            } else {
                a.union(b).copied().collect()
            };
            Value::ObjectSet(out)
        }
        SameSize | SameColor | SameMaterial | SameShape => {
            let id = as_object(input(program, values, i, 0)?, i)?;
            let set = scene
                .same_attribute_set(id, same_attribute_kind(kind))
                .map_err(|_| ExecFailure::UnknownObject(id))?;
            Value::ObjectSet(set)
        }
        EqualInteger | LessThan | GreaterThan => {
            let a = as_integer(input(program, values, i, 0)?, i)?;
            let b = as_integer(input(program, values, i, 1)?, i)?;
            Value::Boolean(match kind {
                EqualInteger => a == b,
                LessThan => a < b,
                GreaterThan => a > b,
                _ => unreachable!(),
            })
        }
        EqualSize | EqualColor | EqualMaterial | EqualShape => {
            let expected = kind.signature().inputs[0];
            let a = input(program, values, i, 0)?;
            let b = input(program, values, i, 1)?;
            for v in [a, b] {
                if v.ty() != expected {
                    return Err(TypeError::Mismatch {
                        node: i,
                        expected,
                        found: v.ty(),
                    }
                    .into());
                }
            }
            Value::Boolean(a == b)
        }
    })
}

/// Error from [`answer_space`] for kinds that cannot root a question.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{0} is not a root kind")]
pub struct NotARootKind(pub FunctionKind);

/// The set of answers a question of the given root kind can produce.
pub fn answer_space(kind: FunctionKind) -> Result<Vec<Value>, NotARootKind> {
    super::answer_values(kind).ok_or(NotARootKind(kind))
}
