use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{classify, Category, FeatureTable, Phone, Transcript};
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub type_count: u64,
    pub token_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhoneCensus {
    pub per_category: BTreeMap<Category, CategoryCount>,
    pub per_phone: BTreeMap<String, u64>,
    /// Valid phones with three or more marks. Already included in the
    /// `valid_two_diacritics` bucket; reported separately as a flag.
    pub three_plus_diacritics: CategoryCount,
    #[serde(skip)]
    categories: BTreeMap<String, (Category, usize)>,
}

impl PhoneCensus {
    pub fn empty() -> Self {
        Self {
            per_category: Category::ALL.iter().map(|c| (*c, CategoryCount::default())).collect(),
            per_phone: BTreeMap::new(),
            three_plus_diacritics: CategoryCount::default(),
            categories: BTreeMap::new(),
        }
    }

    fn add_phone(&mut self, phone: &Phone, table: &FeatureTable, count: u64) {
        let surface = phone.surface();
        let (category, marks) = match self.categories.get(surface) {
            Some(&known) => known,
            None => {
                let known = (classify(phone, table), phone.diacritic_count());
                self.categories.insert(surface.to_string(), known);
                known
            }
        };
        let entry = self.per_phone.entry(surface.to_string()).or_default();
        let first = *entry == 0;
        *entry += count;

        let bucket = self.per_category.entry(category).or_default();
        bucket.token_count += count;
        if first {
            bucket.type_count += 1;
        }
        if category.is_valid() && marks >= 3 {
            self.three_plus_diacritics.token_count += count;
            if first {
                self.three_plus_diacritics.type_count += 1;
            }
        }
    }

    /// Adds another census computed against the same table.
    pub fn merge(&mut self, other: &PhoneCensus, table: &FeatureTable) {
        for (surface, &count) in &other.per_phone {
            // keys came from parsed phones so they re-parse
            if let Ok(phone) = Phone::parse(surface) {
                self.add_phone(&phone, table, count);
            }
        }
    }

    pub fn category(&self, category: Category) -> CategoryCount {
        self.per_category.get(&category).copied().unwrap_or_default()
    }

    pub fn category_of(&self, surface: &str) -> Option<Category> {
        self.categories.get(surface).map(|(c, _)| *c)
    }

    pub fn total_tokens(&self) -> u64 {
        self.per_phone.values().sum()
    }

    pub fn total_types(&self) -> usize {
        self.per_phone.len()
    }

    /// CSV with columns `category,type_count,token_count`.
    pub fn write_category_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["category", "type_count", "token_count"])?;
        for category in Category::ALL {
            let c = self.category(category);
            w.write_record([category.as_str(), &c.type_count.to_string(), &c.token_count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV with columns `phone,category,token_count`, most frequent first.
    pub fn write_phone_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<(&String, &u64)> = self.per_phone.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["phone", "category", "token_count"])?;
        for (phone, count) in rows {
            let category = self.category_of(phone).map(Category::as_str).unwrap_or("invalid");
            w.write_record([phone.as_str(), category, &count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Default for PhoneCensus {
    fn default() -> Self {
        Self::empty()
    }
}

pub fn census<'a, I>(corpus: I, table: &FeatureTable) -> PhoneCensus
where
    I: IntoIterator<Item = &'a Transcript>,
{
    let mut out = PhoneCensus::empty();
    for transcript in corpus {
        for phone in transcript.phones() {
            out.add_phone(phone, table, 1);
        }
    }
    out
}
