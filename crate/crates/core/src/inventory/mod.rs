//! Phone inventory: segmentation, validity, replacement rules and census.

mod census;
mod features;
mod replace;
mod tokenize;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfd_quick, IsNormalized, UnicodeNormalization};

pub use census::{census, CategoryCount, PhoneCensus};
pub use features::{FeatureTable, FeatureValue, FeatureVector, BUNDLED_SOURCE};
pub use replace::{normalize, AppliedRule, NormalizeOutcome, ReplacementMap, ReplacementRule};
pub use tokenize::{canonical, is_diacritic, is_tie, tokenize, tokenize_flat, Phone, Transcript};

pub(crate) fn nfd(s: &str) -> String {
    nfd_cow(s).into_owned()
}

pub(crate) fn nfd_cow(s: &str) -> Cow<'_, str> {
    if s.is_ascii() || is_nfd_quick(s.chars()) == IsNormalized::Yes {
        Cow::Borrowed(s)
    } else {
        Cow::Owned(s.nfd().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ValidPrimary,
    ValidOneDiacritic,
    ValidTwoDiacritics,
    Invalid,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::ValidPrimary,
        Category::ValidOneDiacritic,
        Category::ValidTwoDiacritics,
        Category::Invalid,
    ];

    pub fn is_valid(self) -> bool {
        self != Category::Invalid
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::ValidPrimary => "valid_primary",
            Category::ValidOneDiacritic => "valid_one_diacritic",
            Category::ValidTwoDiacritics => "valid_two_diacritics",
            Category::Invalid => "invalid",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validity depends only on table lookup; the valid bucket depends only on
/// the diacritic count. Phones with three or more marks land in
/// [`Category::ValidTwoDiacritics`].
pub fn classify(phone: &Phone, table: &FeatureTable) -> Category {
    if !table.contains(phone.surface()) {
        return Category::Invalid;
    }
    match phone.diacritic_count() {
        0 => Category::ValidPrimary,
        1 => Category::ValidOneDiacritic,
        _ => Category::ValidTwoDiacritics,
    }
}
