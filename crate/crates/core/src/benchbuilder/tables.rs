use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BuildError, Result, SourceSample};

/// Assigns a question category to questions starting with `prefix`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixRule {
    pub prefix: String,
    pub category: String,
}

/// T1: class → unrelated classes. T2: supercategory → member classes.
/// T3: question category → known answers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupTables {
    #[serde(default)]
    pub t1: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub t2: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub t3: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub category_prefixes: Vec<PrefixRule>,
}

impl LookupTables {
    pub fn unrelated(&self, class: &str) -> Option<&BTreeSet<String>> {
        self.t1.get(class)
    }

    pub fn is_unrelated(&self, class: &str, other: &str) -> bool {
        self.t1.get(class).is_some_and(|s| s.contains(other))
    }

    /// Supercategory whose T2 bucket contains `class`.
    pub fn bucket_of(&self, class: &str) -> Option<&str> {
        self.t2.iter().find(|(_, m)| m.contains(class)).map(|(k, _)| k.as_str())
    }

    pub fn same_bucket(&self, a: &str, b: &str) -> bool {
        self.t2.values().any(|m| m.contains(a) && m.contains(b))
    }

    /// Category from the first matching prefix rule (case-insensitive).
    pub fn categorize(&self, question: &str) -> Option<&str> {
        let q = question.trim_start().to_lowercase();
        self.category_prefixes
            .iter()
            .find(|r| q.starts_with(&r.prefix.to_lowercase()))
            .map(|r| r.category.as_str())
    }

    /// Question category of a sample: its own field, else a prefix rule.
    pub fn category_of<'a>(&'a self, s: &'a SourceSample) -> Option<&'a str> {
        if !s.question_category.trim().is_empty() {
            return Some(&s.question_category);
        }
        s.source_qa.as_ref().and_then(|qa| self.categorize(&qa.question))
    }

    pub fn validate(&self, manifest: &[SourceSample]) -> Result<()> {
        let bad = |m: String| Err(BuildError::InvalidTables(m));
        for (class, unrelated) in &self.t1 {
            if unrelated.contains(class) {
                return bad(format!("t1 maps {class:?} to itself"));
            }
            if let Some(b) = self.bucket_of(class) {
                if let Some(mate) = self.t2[b].iter().find(|m| unrelated.contains(*m)) {
                    return bad(format!("t1 lists {mate:?} as unrelated to bucket-mate {class:?}"));
                }
            }
        }
        for s in manifest {
            if let Some(c) = self.category_of(s) {
                if s.source_qa.is_some() && !self.t3.contains_key(c) {
                    return bad(format!("t3 has no entry for question category {c:?} (sample {})", s.id));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn invariants_checked() {
        let mut t = LookupTables::default();
        t.t1.insert("guitar".into(), set(&["parcel"]));
        t.t2.insert("instrument".into(), set(&["guitar", "piano"]));
        t.validate(&[]).unwrap();
        assert!(t.same_bucket("guitar", "piano"));
        assert_eq!(t.bucket_of("piano"), Some("instrument"));
        t.t1.get_mut("guitar").unwrap().insert("guitar".into());
        assert!(t.validate(&[]).is_err());
        t.t1.insert("guitar".into(), set(&["piano"]));
        assert!(t.validate(&[]).is_err());
    }

    #[test]
    fn prefix_rules() {
        let t = LookupTables {
            category_prefixes: alloc::vec![PrefixRule {
                prefix: "Where".into(),
                category: "Localization".into()
            }],
            ..Default::default()
        };
        assert_eq!(t.categorize("where is the dog?"), Some("Localization"));
        assert_eq!(t.categorize("What is it?"), None);
    }
}
