//! Built-in family catalog and synonym table.
//!
//! The same documents ship as `data/families.json` and `data/synonyms.json`
//! so they can be copied and extended; the CLI falls back to these built-ins
//! when no catalog path is given.

use super::{parse_families, QuestionFamily, SynonymTable};

pub const FAMILIES_JSON: &str = include_str!("../../data/families.json");
pub const SYNONYMS_JSON: &str = include_str!("../../data/synonyms.json");

/// The validated built-in catalog.
pub fn builtin_families() -> Vec<QuestionFamily> {
    parse_families(FAMILIES_JSON).expect("builtin catalog is valid")
}

/// The validated built-in synonym table.
pub fn builtin_synonyms() -> SynonymTable {
    SynonymTable::parse(SYNONYMS_JSON).expect("builtin synonym table is valid")
}
