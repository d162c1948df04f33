//! Question families: program templates with typed parameter slots, text
//! templates, and declarative slot constraints.
//!
//! A family is data, not code: the catalog is a JSON document validated at
//! load. Binding the slots instantiates a concrete program (functions whose
//! value slot bound to nil are removed and their consumers rewired) and a
//! natural-language question (nil slots elide, shape slots fall back to a
//! generic noun, attribute words draw from a synonym table).

mod catalog;
mod instantiate;

pub use catalog::{builtin_families, builtin_synonyms};
pub use instantiate::{
    instantiate_program, realize_canonical, realize_text, realize_with, SynonymTable,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::program::{FunctionKind, Program, ProgramNode, Ty, Value};
use crate::scene::{Color, Material, Relation, Shape, Size};

/// Upper bound on slots per family.
pub const MAX_SLOTS: usize = 19;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("family {family_id}: rule {rule}: {detail}")]
    Validation {
        family_id: String,
        rule: &'static str,
        detail: String,
    },
    #[error("unbound slot {0}")]
    UnboundSlot(String),
    #[error("invalid binding: {0}")]
    InvalidBinding(String),
    #[error("nil-removal left a malformed program: {0}")]
    InvalidAfterRemoval(String),
    #[error("unsubstituted placeholder left in text: {0}")]
    TemplateHoleLeft(String),
    #[error("io error: {0}")]
    Io(String),
}

/// The type of a parameter slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotType {
    Size,
    Color,
    Material,
    Shape,
    Relation,
}

impl SlotType {
    /// All concrete values a slot of this type can bind to (nil excluded).
    pub fn domain(self) -> Vec<Value> {
        match self {
            SlotType::Size => Size::ALL.iter().map(|&v| Value::Size(v)).collect(),
            SlotType::Color => Color::ALL.iter().map(|&v| Value::Color(v)).collect(),
            SlotType::Material => Material::ALL.iter().map(|&v| Value::Material(v)).collect(),
            SlotType::Shape => Shape::ALL.iter().map(|&v| Value::Shape(v)).collect(),
            SlotType::Relation => Relation::ALL.iter().map(|&v| Value::Relation(v)).collect(),
        }
    }

    pub fn matches(self, value: &Value) -> bool {
        matches!(
            (self, value),
            (SlotType::Size, Value::Size(_))
                | (SlotType::Color, Value::Color(_))
                | (SlotType::Material, Value::Material(_))
                | (SlotType::Shape, Value::Shape(_))
                | (SlotType::Relation, Value::Relation(_))
        )
    }

    fn ty(self) -> Ty {
        match self {
            SlotType::Size => Ty::Size,
            SlotType::Color => Ty::Color,
            SlotType::Material => Ty::Material,
            SlotType::Shape => Ty::Shape,
            SlotType::Relation => Ty::Relation,
        }
    }
}

/// A typed parameter slot, e.g. `<C>` of type color.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSlot {
    pub name: String,
    #[serde(rename = "type")]
    pub slot_type: SlotType,
    #[serde(default)]
    pub nullable: bool,
}

/// A declarative constraint over slot bindings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// The two slots may not bind to the same non-nil value.
    NotEqual { slots: [String; 2] },
    /// The slot may not bind to nil.
    NonNil { slot: String },
    /// The left and right slot tuples may not bind identically.
    SlotsDiffer {
        left: Vec<String>,
        right: Vec<String>,
    },
}

impl Constraint {
    /// Slot names the constraint mentions.
    pub fn slots(&self) -> Vec<&str> {
        match self {
            Constraint::NotEqual { slots } => slots.iter().map(String::as_str).collect(),
            Constraint::NonNil { slot } => vec![slot],
            Constraint::SlotsDiffer { left, right } => {
                left.iter().chain(right).map(String::as_str).collect()
            }
        }
    }

    /// Evaluates against a partial binding: `Some(false)` means violated no
    /// matter how the remaining slots bind, `Some(true)` means satisfied,
    /// `None` means undetermined.
    pub fn check(&self, binding: &Binding) -> Option<bool> {
        match self {
            Constraint::NotEqual { slots } => {
                match (binding.get(&slots[0]), binding.get(&slots[1])) {
                    (Some(Some(a)), Some(Some(b))) => Some(a != b),
                    (Some(None), Some(_)) | (Some(_), Some(None)) => Some(true),
                    _ => None,
                }
            }
            Constraint::NonNil { slot } => binding.get(slot).map(|v| v.is_some()),
            Constraint::SlotsDiffer { left, right } => {
                let mut all_equal = true;
                for (l, r) in left.iter().zip(right) {
                    match (binding.get(l), binding.get(r)) {
                        (Some(a), Some(b)) if a != b => return Some(true),
                        (Some(a), Some(b)) if a == b => {}
                        _ => all_equal = false,
                    }
                }
                if all_equal {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

/// How the generator balances this family's answer distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    /// Reject any answer whose share would exceed the tolerance cap.
    #[default]
    UniformHard,
    /// Accept with probability proportional to the answer's bin deficit;
    /// used for count questions where uniformity is unattainable.
    UniformSoft,
}

/// A program-template argument: a literal or a slot reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemplateArg {
    Literal(Value),
    Slot(String),
}

impl Serialize for TemplateArg {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TemplateArg::Literal(v) => v.serialize(serializer),
            TemplateArg::Slot(name) => serializer.serialize_str(name),
        }
    }
}

impl<'de> Deserialize<'de> for TemplateArg {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<TemplateArg, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.starts_with('<') {
            return Ok(TemplateArg::Slot(s));
        }
        Value::parse_literal(&s)
            .map(TemplateArg::Literal)
            .ok_or_else(|| D::Error::custom(format!("not a literal or slot: {s:?}")))
    }
}

impl fmt::Display for TemplateArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateArg::Literal(v) => v.fmt(f),
            TemplateArg::Slot(name) => f.write_str(name),
        }
    }
}

/// One node of a program template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateNode {
    #[serde(rename = "function")]
    pub kind: FunctionKind,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub value_inputs: Vec<TemplateArg>,
}

/// A question family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionFamily {
    pub family_id: String,
    #[serde(default)]
    pub answer_balancing: BalanceMode,
    pub slots: Vec<ParameterSlot>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    pub program_template: Vec<TemplateNode>,
    pub text_templates: Vec<String>,
}

impl QuestionFamily {
    pub fn slot(&self, name: &str) -> Option<&ParameterSlot> {
        self.slots.iter().find(|s| s.name == name)
    }

    /// The question type this family produces.
    pub fn root_kind(&self) -> Option<FunctionKind> {
        self.program_template.last().map(|n| n.kind)
    }
}

/// A (partial) assignment of slots to values; `None` is nil.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binding(pub BTreeMap<String, Option<Value>>);

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Option<Value>) {
        self.0.insert(name.into(), value);
    }

    /// `None` means the slot is unassigned; `Some(None)` means nil.
    pub fn get(&self, name: &str) -> Option<&Option<Value>> {
        self.0.get(name)
    }

    /// Checks completeness, slot types, nullability, and constraints.
    pub fn validate(&self, family: &QuestionFamily) -> Result<(), FamilyError> {
        for slot in &family.slots {
            match self.get(&slot.name) {
                None => return Err(FamilyError::UnboundSlot(slot.name.clone())),
                Some(None) if !slot.nullable => {
                    return Err(FamilyError::InvalidBinding(format!(
                        "slot {} is not nullable",
                        slot.name
                    )))
                }
                Some(Some(v)) if !slot.slot_type.matches(v) => {
                    return Err(FamilyError::InvalidBinding(format!(
                        "slot {} expects {:?}, got {v}",
                        slot.name, slot.slot_type
                    )))
                }
                _ => {}
            }
        }
        for constraint in &family.constraints {
            if constraint.check(self) != Some(true) {
                return Err(FamilyError::InvalidBinding(format!(
                    "constraint violated: {constraint:?}"
                )));
            }
        }
        Ok(())
    }
}

fn scan_slot_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        match rest[start..].find('>') {
            Some(len) => {
                tokens.push(rest[start..start + len + 1].to_string());
                rest = &rest[start + len + 1..];
            }
            None => break,
        }
    }
    tokens
}

fn validation(family_id: &str, rule: &'static str, detail: impl Into<String>) -> FamilyError {
    FamilyError::Validation {
        family_id: family_id.into(),
        rule,
        detail: detail.into(),
    }
}

/// Validates one family; returns the rule name and detail on failure.
pub fn validate_family(family: &QuestionFamily) -> Result<(), FamilyError> {
    let id = &family.family_id;
    if family.slots.len() > MAX_SLOTS {
        return Err(validation(
            id,
            "slot_limit",
            format!("{} slots", family.slots.len()),
        ));
    }
    let mut names = BTreeSet::new();
    for slot in &family.slots {
        if !names.insert(slot.name.as_str()) {
            return Err(validation(id, "unique_slot_names", slot.name.clone()));
        }
        if !slot.name.starts_with('<') || !slot.name.ends_with('>') {
            return Err(validation(id, "slot_name_shape", slot.name.clone()));
        }
    }
    if family.text_templates.is_empty() {
        return Err(validation(id, "has_text_template", "no text templates"));
    }
    match family.root_kind() {
        Some(kind) if kind.is_root_kind() => {}
        Some(kind) => {
            return Err(validation(id, "root_is_question_kind", kind.name()));
        }
        None => return Err(validation(id, "root_is_question_kind", "empty template")),
    }

    // Template shape: arities, ordering, and slot typing against signatures.
    for (i, node) in family.program_template.iter().enumerate() {
        let sig = node.kind.signature();
        if node.inputs.len() != sig.inputs.len() {
            return Err(validation(
                id,
                "template_shape",
                format!("node {i}: {} wants {} inputs", node.kind, sig.inputs.len()),
            ));
        }
        if node.value_inputs.len() != sig.value_inputs.len() {
            return Err(validation(
                id,
                "template_shape",
                format!(
                    "node {i}: {} wants {} value inputs",
                    node.kind,
                    sig.value_inputs.len()
                ),
            ));
        }
        if node.inputs.iter().any(|&inp| inp >= i) {
            return Err(validation(
                id,
                "template_shape",
                format!("node {i}: forward input"),
            ));
        }
        for (arg, &expected) in node.value_inputs.iter().zip(sig.value_inputs) {
            match arg {
                TemplateArg::Literal(v) if v.ty() != expected => {
                    return Err(validation(
                        id,
                        "slot_type_matches",
                        format!("node {i}: literal {v} is not {expected}"),
                    ));
                }
                TemplateArg::Slot(name) => match family.slot(name) {
                    None => return Err(validation(id, "slot_declared", name.clone())),
                    Some(slot) if slot.slot_type.ty() != expected => {
                        return Err(validation(
                            id,
                            "slot_type_matches",
                            format!("node {i}: slot {name} is not {expected}"),
                        ));
                    }
                    Some(slot) if slot.nullable => {
                        // Removal must be well-defined: one input, same type.
                        if sig.inputs.len() != 1 || sig.inputs[0] != sig.output {
                            return Err(validation(
                                id,
                                "nullable_removal_safe",
                                format!("node {i}: {} cannot be removed", node.kind),
                            ));
                        }
                    }
                    Some(_) => {}
                },
                TemplateArg::Literal(_) => {}
            }
        }
    }

    // Text templates: every token is declared, every slot is mentioned.
    for (t, text) in family.text_templates.iter().enumerate() {
        let tokens: BTreeSet<String> = scan_slot_tokens(text).into_iter().collect();
        for token in &tokens {
            if family.slot(token).is_none() {
                return Err(validation(
                    id,
                    "slot_declared",
                    format!("template {t} references {token}"),
                ));
            }
        }
        for slot in &family.slots {
            if !tokens.contains(&slot.name) {
                return Err(validation(
                    id,
                    "slot_mentioned",
                    format!("template {t} omits {}", slot.name),
                ));
            }
        }
    }
    for constraint in &family.constraints {
        for name in constraint.slots() {
            if family.slot(name).is_none() {
                return Err(validation(
                    id,
                    "slot_declared",
                    format!("constraint uses {name}"),
                ));
            }
        }
        if let Constraint::SlotsDiffer { left, right } = constraint {
            if left.len() != right.len() {
                return Err(validation(
                    id,
                    "constraint_shape",
                    "slots_differ arity mismatch",
                ));
            }
        }
    }

    // Cheap instantiation probes: all-non-nil plus each single-nil variant
    // must typecheck after removal. The exhaustive nil sweep lives in tests.
    let mut base = Binding::new();
    for slot in &family.slots {
        base.bind(slot.name.clone(), Some(slot.slot_type.domain()[0].clone()));
    }
    let mut probes = vec![base.clone()];
    for slot in family.slots.iter().filter(|s| s.nullable) {
        let mut b = base.clone();
        b.bind(slot.name.clone(), None);
        probes.push(b);
    }
    for binding in probes {
        if let Err(e) = instantiate_unchecked(family, &binding) {
            return Err(validation(id, "instantiation_typechecks", e.to_string()));
        }
    }
    Ok(())
}

/// Instantiation without binding validation; used by the load-time probes
/// (which intentionally ignore constraints).
pub(crate) fn instantiate_unchecked(
    family: &QuestionFamily,
    binding: &Binding,
) -> Result<Program, FamilyError> {
    let template = &family.program_template;
    let n = template.len();
    let mut removed: Vec<bool> = Vec::with_capacity(n);
    let mut literal_values: Vec<Vec<Value>> = Vec::with_capacity(n);
    for node in template.iter() {
        let mut values = Vec::with_capacity(node.value_inputs.len());
        let mut remove = false;
        for arg in &node.value_inputs {
            match arg {
                TemplateArg::Literal(v) => values.push(v.clone()),
                TemplateArg::Slot(name) => match binding.get(name) {
                    None => return Err(FamilyError::UnboundSlot(name.clone())),
                    Some(None) => remove = true,
                    Some(Some(v)) => values.push(v.clone()),
                },
            }
        }
        if remove {
            values.clear();
        }
        removed.push(remove);
        literal_values.push(values);
    }

    // Resolve through chains of removed nodes.
    let resolve = |mut idx: usize| -> Result<usize, FamilyError> {
        loop {
            if !removed[idx] {
                return Ok(idx);
            }
            match template[idx].inputs.first() {
                Some(&input) => idx = input,
                None => {
                    return Err(FamilyError::InvalidAfterRemoval(format!(
                        "removed node {idx} has no input to rewire to"
                    )))
                }
            }
        }
    };

    if removed[n - 1] {
        return Err(FamilyError::InvalidAfterRemoval("root node removed".into()));
    }

    let mut remap = vec![usize::MAX; n];
    let mut nodes: Vec<ProgramNode> = Vec::new();
    for i in 0..n {
        if removed[i] {
            continue;
        }
        let mut inputs = Vec::with_capacity(template[i].inputs.len());
        for &input in &template[i].inputs {
            let target = resolve(input)?;
            debug_assert!(remap[target] != usize::MAX);
            inputs.push(remap[target]);
        }
        remap[i] = nodes.len();
        nodes.push(ProgramNode {
            kind: template[i].kind,
            inputs,
            value_inputs: literal_values[i].clone(),
        });
    }
    let program = Program::new(nodes);
    crate::program::typecheck(&program)
        .map_err(|e| FamilyError::InvalidAfterRemoval(e.to_string()))?;
    Ok(program)
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    schema_version: u32,
    families: Vec<QuestionFamily>,
}

/// Parses and validates a family catalog; load order is preserved.
pub fn parse_families(content: &str) -> Result<Vec<QuestionFamily>, FamilyError> {
    if content.trim().is_empty() {
        return Ok(Vec::new());
    }
    let file: FamilyFile =
        serde_json::from_str(content).map_err(|e| FamilyError::Parse(e.to_string()))?;
    if file.schema_version != crate::SCHEMA_VERSION {
        return Err(FamilyError::Parse(format!(
            "unsupported schema_version {}",
            file.schema_version
        )));
    }
    let mut seen = BTreeSet::new();
    for family in &file.families {
        if !seen.insert(family.family_id.clone()) {
            return Err(validation(
                &family.family_id,
                "unique_family_id",
                "duplicate id",
            ));
        }
        validate_family(family)?;
    }
    Ok(file.families)
}

/// Loads a family catalog from disk.
pub fn load_families(path: &Path) -> Result<Vec<QuestionFamily>, FamilyError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| FamilyError::Io(format!("{}: {e}", path.display())))?;
    parse_families(&content)
}

#[cfg(test)]
mod tests;
