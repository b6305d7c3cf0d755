//! Ternary articulatory feature table.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::inventory::nfd;

const BUNDLED_TSV: &str = include_str!("../../data/ipa_features.tsv");

/// Release of the upstream feature database the bundled table was exported from.
pub const BUNDLED_SOURCE: &str = "panphon 0.22.2 (ipa_all.csv)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum FeatureValue {
    Minus = -1,
    Zero = 0,
    Plus = 1,
}

impl FeatureValue {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+" | "+1" | "1" => Some(Self::Plus),
            "-" | "-1" | "\u{2212}" => Some(Self::Minus),
            "0" => Some(Self::Zero),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        self as i8
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Plus => '+',
            Self::Minus => '-',
            Self::Zero => '0',
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector(Box<[FeatureValue]>);

impl FeatureVector {
    pub fn new(values: Vec<FeatureValue>) -> Self {
        Self(values.into_boxed_slice())
    }

    pub fn values(&self) -> &[FeatureValue] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of positions at which the two vectors disagree.
    pub fn hamming(&self, other: &FeatureVector) -> usize {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(other.0.iter()).filter(|(a, b)| a != b).count()
    }
}

/// Immutable mapping from NFD phone strings to feature vectors.
///
/// Lookups are case-sensitive and always performed on the NFD form of the
/// query, so precomposed and decomposed spellings resolve identically.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    entries: HashMap<String, FeatureVector>,
    feature_names: Vec<String>,
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>, entries: HashMap<String, FeatureVector>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::FeatureTable("no feature columns".into()));
        }
        let mut normalized = HashMap::with_capacity(entries.len());
        for (phone, vector) in entries {
            if vector.len() != feature_names.len() {
                return Err(Error::FeatureTable(format!(
                    "{phone:?} has {} values, expected {}",
                    vector.len(),
                    feature_names.len()
                )));
            }
            normalized.insert(nfd(&phone), vector);
        }
        Ok(Self {
            entries: normalized,
            feature_names,
        })
    }

    /// The table shipped with the crate.
    pub fn bundled() -> Arc<FeatureTable> {
        static TABLE: OnceLock<Arc<FeatureTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                Arc::new(Self::from_tsv_str(BUNDLED_TSV).expect("bundled feature table is well-formed"))
            })
            .clone()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_tsv_str(&text)
    }

    /// Parses the TSV layout: optional `#` comment lines, a header row whose
    /// first cell names the phone column, then one row per phone.
    pub fn from_tsv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::FeatureTable("missing header row".into()))?;
        let feature_names: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_string()).collect();
        if feature_names.is_empty() {
            return Err(Error::FeatureTable("header has no feature columns".into()));
        }

        let mut entries = HashMap::new();
        for (lineno, line) in lines {
            let mut cells = line.split('\t');
            let phone = cells.next().unwrap_or_default().trim();
            if phone.is_empty() {
                return Err(Error::FeatureTable(format!("line {}: empty phone cell", lineno + 1)));
            }
            let values = cells
                .map(|c| {
                    FeatureValue::parse(c.trim()).ok_or_else(|| {
                        Error::FeatureTable(format!("line {}: bad feature value {c:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != feature_names.len() {
                return Err(Error::FeatureTable(format!(
                    "line {}: {} values for {} features",
                    lineno + 1,
                    values.len(),
                    feature_names.len()
                )));
            }
            let key = nfd(phone);
            if entries.contains_key(&key) {
                return Err(Error::FeatureTable(format!("line {}: duplicate phone {phone:?}", lineno + 1)));
            }
            entries.insert(key, FeatureVector::new(values));
        }
        Ok(Self {
            entries,
            feature_names,
        })
    }

    pub fn get(&self, phone: &str) -> Option<&FeatureVector> {
        match self.entries.get(phone) {
            Some(v) => Some(v),
            None => {
                let normalized = nfd(phone);
                if normalized == phone {
                    None
                } else {
                    self.entries.get(&normalized)
                }
            }
        }
    }

    pub fn contains(&self, phone: &str) -> bool {
        self.get(phone).is_some()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn phones(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
