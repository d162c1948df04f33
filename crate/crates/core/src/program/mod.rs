//! The typed functional question DSL.
//!
//! A question is a DAG of function nodes in topological order; the last node
//! is the root and its output is the answer. Each function has a fixed
//! signature over node inputs (values flowing along edges) and value inputs
//! (attribute or relation literals attached to the node). The executor walks
//! the DAG bottom-up against a scene graph.

mod exec;
mod typecheck;

pub use exec::{
    answer_space, exec_all, execute, filter_ids, same_attribute_kind, ExecFailure, ExecOutcome,
    NotARootKind,
};
pub use typecheck::{typecheck, TypeError};

pub(crate) use exec::eval_node;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scene::{Color, IdSet, Material, Relation, Shape, Size};

/// Value types flowing through a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Object,
    ObjectSet,
    Integer,
    Boolean,
    Size,
    Color,
    Shape,
    Material,
    Relation,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Ty::Object => "Object",
            Ty::ObjectSet => "ObjectSet",
            Ty::Integer => "Integer",
            Ty::Boolean => "Boolean",
            Ty::Size => "Size",
            Ty::Color => "Color",
            Ty::Shape => "Shape",
            Ty::Material => "Material",
            Ty::Relation => "Relation",
        };
        f.write_str(name)
    }
}

/// A runtime value. Integers stay within 0..=10 by construction (scenes hold
/// at most ten objects); booleans render as yes/no.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Object(usize),
    ObjectSet(IdSet),
    Integer(u8),
    Boolean(bool),
    Size(Size),
    Color(Color),
    Shape(Shape),
    Material(Material),
    Relation(Relation),
}

impl Value {
    pub fn ty(&self) -> Ty {
        match self {
            Value::Object(_) => Ty::Object,
            Value::ObjectSet(_) => Ty::ObjectSet,
            Value::Integer(_) => Ty::Integer,
            Value::Boolean(_) => Ty::Boolean,
            Value::Size(_) => Ty::Size,
            Value::Color(_) => Ty::Color,
            Value::Shape(_) => Ty::Shape,
            Value::Material(_) => Ty::Material,
            Value::Relation(_) => Ty::Relation,
        }
    }

    /// Parses an attribute/relation literal, a yes/no boolean, or an integer.
    /// Literal words are disjoint across the attribute enumerations, so the
    /// result is unambiguous.
    pub fn parse_literal(s: &str) -> Option<Value> {
        if let Some(v) = Size::parse_word(s) {
            return Some(Value::Size(v));
        }
        if let Some(v) = Color::parse_word(s) {
            return Some(Value::Color(v));
        }
        if let Some(v) = Shape::parse_word(s) {
            return Some(Value::Shape(v));
        }
        if let Some(v) = Material::parse_word(s) {
            return Some(Value::Material(v));
        }
        if let Some(v) = Relation::parse_word(s) {
            return Some(Value::Relation(v));
        }
        match s {
            "yes" => Some(Value::Boolean(true)),
            "no" => Some(Value::Boolean(false)),
            _ => s
                .parse::<u8>()
                .ok()
                .filter(|n| *n <= 10)
                .map(Value::Integer),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Object(id) => write!(f, "object:{id}"),
            Value::ObjectSet(ids) => {
                write!(f, "objects:")?;
                for (i, id) in ids.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{id}")?;
                }
                Ok(())
            }
            Value::Integer(n) => write!(f, "{n}"),
            Value::Boolean(true) => f.write_str("yes"),
            Value::Boolean(false) => f.write_str("no"),
            Value::Size(v) => f.write_str(v.as_str()),
            Value::Color(v) => f.write_str(v.as_str()),
            Value::Shape(v) => f.write_str(v.as_str()),
            Value::Material(v) => f.write_str(v.as_str()),
            Value::Relation(v) => f.write_str(v.as_str()),
        }
    }
}

impl FromStr for Value {
    type Err = String;

    fn from_str(s: &str) -> Result<Value, String> {
        Value::parse_literal(s).ok_or_else(|| format!("not a value literal: {s:?}"))
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Value, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The 26 basic functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Scene,
    Unique,
    Relate,
    Count,
    Exist,
    FilterSize,
    FilterColor,
    FilterMaterial,
    FilterShape,
    QuerySize,
    QueryColor,
    QueryMaterial,
    QueryShape,
    #[serde(alias = "AND")]
    And,
    #[serde(alias = "OR")]
    Or,
    SameSize,
    SameColor,
    SameMaterial,
    SameShape,
    EqualInteger,
    LessThan,
    GreaterThan,
    EqualSize,
    EqualColor,
    EqualMaterial,
    EqualShape,
}

/// Fixed signature of a function: node-input types, value-input types, and
/// the output type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub inputs: &'static [Ty],
    pub value_inputs: &'static [Ty],
    pub output: Ty,
}

const SET: &[Ty] = &[Ty::ObjectSet];
const SET2: &[Ty] = &[Ty::ObjectSet, Ty::ObjectSet];
const OBJ: &[Ty] = &[Ty::Object];
const INT2: &[Ty] = &[Ty::Integer, Ty::Integer];
const NONE: &[Ty] = &[];

impl FunctionKind {
    pub const ALL: &'static [FunctionKind] = &[
        FunctionKind::Scene,
        FunctionKind::Unique,
        FunctionKind::Relate,
        FunctionKind::Count,
        FunctionKind::Exist,
        FunctionKind::FilterSize,
        FunctionKind::FilterColor,
        FunctionKind::FilterMaterial,
        FunctionKind::FilterShape,
        FunctionKind::QuerySize,
        FunctionKind::QueryColor,
        FunctionKind::QueryMaterial,
        FunctionKind::QueryShape,
        FunctionKind::And,
        FunctionKind::Or,
        FunctionKind::SameSize,
        FunctionKind::SameColor,
        FunctionKind::SameMaterial,
        FunctionKind::SameShape,
        FunctionKind::EqualInteger,
        FunctionKind::LessThan,
        FunctionKind::GreaterThan,
        FunctionKind::EqualSize,
        FunctionKind::EqualColor,
        FunctionKind::EqualMaterial,
        FunctionKind::EqualShape,
    ];

    pub fn signature(self) -> Signature {
        use FunctionKind::*;
        let (inputs, value_inputs, output) = match self {
            Scene => (NONE, NONE, Ty::ObjectSet),
            Unique => (SET, NONE, Ty::Object),
            Relate => (OBJ, &[Ty::Relation][..], Ty::ObjectSet),
            Count => (SET, NONE, Ty::Integer),
            Exist => (SET, NONE, Ty::Boolean),
            FilterSize => (SET, &[Ty::Size][..], Ty::ObjectSet),
            FilterColor => (SET, &[Ty::Color][..], Ty::ObjectSet),
            FilterMaterial => (SET, &[Ty::Material][..], Ty::ObjectSet),
            FilterShape => (SET, &[Ty::Shape][..], Ty::ObjectSet),
            QuerySize => (OBJ, NONE, Ty::Size),
            QueryColor => (OBJ, NONE, Ty::Color),
            QueryMaterial => (OBJ, NONE, Ty::Material),
            QueryShape => (OBJ, NONE, Ty::Shape),
            And | Or => (SET2, NONE, Ty::ObjectSet),
            SameSize | SameColor | SameMaterial | SameShape => (OBJ, NONE, Ty::ObjectSet),
            EqualInteger | LessThan | GreaterThan => (INT2, NONE, Ty::Boolean),
            EqualSize => (&[Ty::Size, Ty::Size][..], NONE, Ty::Boolean),
            EqualColor => (&[Ty::Color, Ty::Color][..], NONE, Ty::Boolean),
            EqualMaterial => (&[Ty::Material, Ty::Material][..], NONE, Ty::Boolean),
            EqualShape => (&[Ty::Shape, Ty::Shape][..], NONE, Ty::Boolean),
        };
        Signature {
            inputs,
            value_inputs,
            output,
        }
    }

    /// Lowercase snake_case name used in program JSON.
    pub fn name(self) -> &'static str {
        use FunctionKind::*;
        match self {
            Scene => "scene",
            Unique => "unique",
            Relate => "relate",
            Count => "count",
            Exist => "exist",
            FilterSize => "filter_size",
            FilterColor => "filter_color",
            FilterMaterial => "filter_material",
            FilterShape => "filter_shape",
            QuerySize => "query_size",
            QueryColor => "query_color",
            QueryMaterial => "query_material",
            QueryShape => "query_shape",
            And => "and",
            Or => "or",
            SameSize => "same_size",
            SameColor => "same_color",
            SameMaterial => "same_material",
            SameShape => "same_shape",
            EqualInteger => "equal_integer",
            LessThan => "less_than",
            GreaterThan => "greater_than",
            EqualSize => "equal_size",
            EqualColor => "equal_color",
            EqualMaterial => "equal_material",
            EqualShape => "equal_shape",
        }
    }

    pub fn is_filter(self) -> bool {
        matches!(
            self,
            FunctionKind::FilterSize
                | FunctionKind::FilterColor
                | FunctionKind::FilterMaterial
                | FunctionKind::FilterShape
        )
    }

    pub fn is_same_attribute(self) -> bool {
        matches!(
            self,
            FunctionKind::SameSize
                | FunctionKind::SameColor
                | FunctionKind::SameMaterial
                | FunctionKind::SameShape
        )
    }

    /// Whether this kind may appear as a question root (its output is an
    /// answer value, not an object reference).
    pub fn is_root_kind(self) -> bool {
        !matches!(self.signature().output, Ty::Object | Ty::ObjectSet)
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One node of a program DAG.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramNode {
    #[serde(rename = "function")]
    pub kind: FunctionKind,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub value_inputs: Vec<Value>,
}

/// A question program: nodes in topological order, last node is the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub nodes: Vec<ProgramNode>,
}

impl Program {
    pub fn new(nodes: Vec<ProgramNode>) -> Program {
        Program { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the root node.
    pub fn root(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Kind of the root node; this is the question type.
    pub fn root_kind(&self) -> Option<FunctionKind> {
        self.nodes.last().map(|n| n.kind)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("program serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Program, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Compact single-line rendering for logs and error messages.
    pub fn render(&self) -> String {
        fn go(p: &Program, i: usize, out: &mut String) {
            let node = &p.nodes[i];
            out.push_str(node.kind.name());
            if !node.inputs.is_empty() || !node.value_inputs.is_empty() {
                out.push('(');
                let mut first = true;
                for v in &node.value_inputs {
                    if !first {
                        out.push_str(", ");
                    }
                    out.push_str(&v.to_string());
                    first = false;
                }
                for &inp in &node.inputs {
                    if !first {
                        out.push_str(", ");
                    }
                    go(p, inp, out);
                    first = false;
                }
                out.push(')');
            } else {
                out.push_str("()");
            }
        }
        let mut out = String::new();
        if !self.nodes.is_empty() {
            go(self, self.root(), &mut out);
        }
        out
    }
}

/// Convenience constructor used heavily in tests and the question builder.
pub fn node(kind: FunctionKind, inputs: &[usize], value_inputs: &[Value]) -> ProgramNode {
    ProgramNode {
        kind,
        inputs: inputs.to_vec(),
        value_inputs: value_inputs.to_vec(),
    }
}

/// The answers a root kind can produce, in canonical order.
///
/// `count` spans 0..=10, `exist` and the comparisons are yes/no, and each
/// query kind spans its attribute enumeration.
pub fn answer_values(kind: FunctionKind) -> Option<Vec<Value>> {
    use FunctionKind::*;
    let values = match kind {
        Count => (0..=10).map(Value::Integer).collect(),
        Exist | EqualInteger | LessThan | GreaterThan | EqualSize | EqualColor | EqualMaterial
        | EqualShape => vec![Value::Boolean(true), Value::Boolean(false)],
        QuerySize => Size::ALL.iter().map(|&v| Value::Size(v)).collect(),
        QueryColor => Color::ALL.iter().map(|&v| Value::Color(v)).collect(),
        QueryMaterial => Material::ALL.iter().map(|&v| Value::Material(v)).collect(),
        QueryShape => Shape::ALL.iter().map(|&v| Value::Shape(v)).collect(),
        _ => return None,
    };
    Some(values)
}

/// Answer strings for a root kind, sorted for deterministic tie-breaking.
pub fn answer_strings(kind: FunctionKind) -> Option<BTreeSet<String>> {
    answer_values(kind).map(|vs| vs.iter().map(Value::to_string).collect())
}
