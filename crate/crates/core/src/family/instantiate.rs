//! Binding instantiation: programs via nil-removal, text via templates and
//! synonyms.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Deserialize;

use super::{Binding, FamilyError, QuestionFamily, SlotType};
use crate::program::{Program, Value};
use crate::scene::Relation;

/// Instantiates the family's program template under a validated binding:
/// slots are replaced by their bound literals, nodes whose slot bound to nil
/// are removed with their consumers rewired to their input, and the result
/// must typecheck.
pub fn instantiate_program(
    family: &QuestionFamily,
    binding: &Binding,
) -> Result<Program, FamilyError> {
    binding.validate(family)?;
    super::instantiate_unchecked(family, binding)
}

/// Surface-word tables: per-canonical-word synonym lists, relation phrases,
/// and the generic nouns used when a shape slot binds to nil.
///
/// Every surface form maps back to exactly one canonical term, so realized
/// text can be de-synonymized unambiguously.
#[derive(Clone, Debug)]
pub struct SynonymTable {
    attribute: BTreeMap<String, Vec<String>>,
    generic_nouns: Vec<String>,
    relation: BTreeMap<Relation, Vec<String>>,
    inverse_words: BTreeMap<String, String>,
    inverse_phrases: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct SynonymFile {
    schema_version: u32,
    attribute_synonyms: BTreeMap<String, Vec<String>>,
    generic_nouns: Vec<String>,
    relation_phrases: BTreeMap<Relation, Vec<String>>,
}

fn pluralizes(canonical: &str) -> bool {
    // Shapes and generic nouns appear pluralized in templates; attribute
    // adjectives never do.
    matches!(canonical, "cube" | "sphere" | "cylinder" | "thing")
}

impl SynonymTable {
    pub fn parse(content: &str) -> Result<SynonymTable, FamilyError> {
        let file: SynonymFile =
            serde_json::from_str(content).map_err(|e| FamilyError::Parse(e.to_string()))?;
        if file.schema_version != crate::SCHEMA_VERSION {
            return Err(FamilyError::Parse(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        if file.generic_nouns.is_empty() {
            return Err(FamilyError::Parse("generic_nouns must not be empty".into()));
        }
        for canonical in file.attribute_synonyms.keys() {
            if Value::parse_literal(canonical).is_none() {
                return Err(FamilyError::Parse(format!(
                    "attribute_synonyms key {canonical:?} is not an attribute word"
                )));
            }
        }
        for rel in Relation::ALL {
            if file.relation_phrases.get(rel).is_none_or(Vec::is_empty) {
                return Err(FamilyError::Parse(format!("relation {rel} has no phrases")));
            }
        }

        let mut attribute = file.attribute_synonyms;
        // Canonical word leads each surface list.
        for (canonical, surfaces) in attribute.iter_mut() {
            surfaces.insert(0, canonical.clone());
        }
        let mut generic = file.generic_nouns;
        let canonical_noun = generic[0].clone();
        attribute.insert(canonical_noun.clone(), std::mem::take(&mut generic));

        let mut inverse_words = BTreeMap::new();
        for (canonical, surfaces) in &attribute {
            for surface in surfaces {
                let mut insert = |s: String, c: String| -> Result<(), FamilyError> {
                    if let Some(prev) = inverse_words.insert(s.clone(), c.clone()) {
                        if prev != c {
                            return Err(FamilyError::Parse(format!(
                                "surface {s:?} maps to both {prev:?} and {c:?}"
                            )));
                        }
                    }
                    Ok(())
                };
                insert(surface.clone(), canonical.clone())?;
                if pluralizes(canonical) {
                    insert(format!("{surface}s"), format!("{canonical}s"))?;
                }
            }
        }
        let mut inverse_phrases = Vec::new();
        for phrases in file.relation_phrases.values() {
            let canonical = phrases[0].clone();
            for phrase in phrases {
                inverse_phrases.push((phrase.clone(), canonical.clone()));
            }
        }
        inverse_phrases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));

        let generic_nouns = attribute
            .get(&canonical_noun)
            .cloned()
            .expect("inserted above");
        Ok(SynonymTable {
            attribute,
            generic_nouns,
            relation: file.relation_phrases,
            inverse_words,
            inverse_phrases,
        })
    }

    /// All surface forms for a slot value, canonical first.
    pub fn surfaces(&self, value: &Value) -> Result<&[String], FamilyError> {
        match value {
            Value::Relation(r) => Ok(self
                .relation
                .get(r)
                .map(Vec::as_slice)
                .expect("validated at parse")),
            Value::Size(_) | Value::Color(_) | Value::Shape(_) | Value::Material(_) => {
                let canonical = value.to_string();
                self.attribute
                    .get(&canonical)
                    .map(Vec::as_slice)
                    .ok_or_else(|| FamilyError::Parse(format!("no surfaces for {canonical}")))
            }
            other => Err(FamilyError::InvalidBinding(format!(
                "{other} has no surface form"
            ))),
        }
    }

    /// Generic nouns standing in for a nil shape slot, canonical first.
    pub fn generic_nouns(&self) -> &[String] {
        &self.generic_nouns
    }

    /// Rewrites every synonym in `text` back to its canonical term.
    /// Inverse of realization up to article agreement.
    pub fn desynonymize(&self, text: &str) -> String {
        let mut out = text.to_string();
        for (phrase, canonical) in &self.inverse_phrases {
            if phrase != canonical {
                out = out.replace(phrase.as_str(), canonical);
            }
        }
        let mut rebuilt: Vec<String> = Vec::new();
        for token in out.split(' ') {
            let (word, punct) = split_trailing_punct(token);
            let replaced = self
                .inverse_words
                .get(word)
                .map(String::as_str)
                .unwrap_or(word);
            rebuilt.push(format!("{replaced}{punct}"));
        }
        normalize_articles(&rebuilt.join(" "))
    }
}

fn split_trailing_punct(token: &str) -> (&str, &str) {
    let end = token.trim_end_matches(['?', ';', ',', '.']);
    (end, &token[end.len()..])
}

/// Realizes one text template with an explicit option picker.
///
/// `picker` receives the number of options (templates are chosen by the
/// caller; synonym and noun choices go through here) and returns an index.
pub fn realize_with(
    family: &QuestionFamily,
    binding: &Binding,
    synonyms: &SynonymTable,
    template_index: usize,
    picker: &mut dyn FnMut(usize) -> usize,
) -> Result<String, FamilyError> {
    let template = family.text_templates.get(template_index).ok_or_else(|| {
        FamilyError::InvalidBinding(format!("template index {template_index} out of range"))
    })?;

    let mut out = String::with_capacity(template.len());
    let mut rest = template.as_str();
    while let Some(start) = rest.find('<') {
        out.push_str(&rest[..start]);
        rest = &rest[start..];
        let Some(len) = rest.find('>') else {
            return Err(FamilyError::TemplateHoleLeft(rest.to_string()));
        };
        let token = &rest[..len + 1];
        rest = &rest[len + 1..];

        let slot = family
            .slot(token)
            .ok_or_else(|| FamilyError::TemplateHoleLeft(token.to_string()))?;
        match binding.get(token) {
            None => return Err(FamilyError::UnboundSlot(token.to_string())),
            Some(Some(value)) => {
                let options = synonyms.surfaces(value)?;
                out.push_str(&options[picker(options.len()).min(options.len() - 1)]);
            }
            Some(None) => {
                if slot.slot_type == SlotType::Shape {
                    let nouns = synonyms.generic_nouns();
                    out.push_str(&nouns[picker(nouns.len()).min(nouns.len() - 1)]);
                }
                // Other nil slots elide; whitespace is normalized below.
            }
        }
    }
    out.push_str(rest);

    let text = normalize_articles(&normalize_whitespace(&out));
    if text.contains('<') {
        return Err(FamilyError::TemplateHoleLeft(text));
    }
    Ok(text)
}

/// Realizes text with template, synonym, and noun choices drawn from `rng`.
pub fn realize_text(
    family: &QuestionFamily,
    binding: &Binding,
    synonyms: &SynonymTable,
    rng: &mut impl Rng,
) -> Result<String, FamilyError> {
    binding.validate(family)?;
    let template_index = rng.random_range(0..family.text_templates.len());
    realize_with(family, binding, synonyms, template_index, &mut |n| {
        rng.random_range(0..n)
    })
}

/// Realizes text with every choice canonical (first option).
pub fn realize_canonical(
    family: &QuestionFamily,
    binding: &Binding,
    synonyms: &SynonymTable,
    template_index: usize,
) -> Result<String, FamilyError> {
    realize_with(family, binding, synonyms, template_index, &mut |_| 0)
}

fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for ch in text.chars() {
        if ch == ' ' {
            if !last_space {
                out.push(' ');
            }
            last_space = true;
        } else {
            if matches!(ch, '?' | ';' | ',' | '.') && out.ends_with(' ') {
                out.pop();
            }
            out.push(ch);
            last_space = false;
        }
    }
    out.trim().to_string()
}

/// Minimal article agreement: `a` before a vowel-initial word becomes `an`,
/// and vice versa.
fn normalize_articles(text: &str) -> String {
    let words: Vec<&str> = text.split(' ').collect();
    let mut out: Vec<String> = Vec::with_capacity(words.len());
    for (i, word) in words.iter().enumerate() {
        let next_vowel = words
            .get(i + 1)
            .and_then(|w| w.chars().next())
            .is_some_and(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'));
        let fixed = match (*word, next_vowel) {
            ("a", true) => "an",
            ("an", false) => "a",
            _ => word,
        };
        out.push(fixed.to_string());
    }
    out.join(" ")
}
