//! IPA segmentation.
//!
//! Words are separated by whitespace. Within a word every non-mark
//! character starts a new phone; combining marks, spacing modifier letters
//! (length, aspiration, palatalization, stress, tone letters...) and
//! superscripts attach to the phone on their left. A tie bar glues the next
//! base character onto the current phone so affricates stay whole. Marks
//! that open a word (pre-glottalization, pre-nasalization) become a prefix of
//! the following base.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::nfd;

pub const TIE_ABOVE: char = '\u{361}';
pub const TIE_BELOW: char = '\u{35C}';
const CEDILLA: char = '\u{327}';

pub fn is_tie(c: char) -> bool {
    c == TIE_ABOVE || c == TIE_BELOW
}

/// Codepoint classes treated as attached marks rather than bases.
pub fn is_diacritic(c: char) -> bool {
    if is_tie(c) {
        return false;
    }
    matches!(c as u32,
        0x0300..=0x036F       // combining diacritical marks
        | 0x1AB0..=0x1AFF     // combining diacritical marks extended
        | 0x1DC0..=0x1DFF     // combining diacritical marks supplement
        | 0x20D0..=0x20FF     // combining marks for symbols
        | 0xFE20..=0xFE2F     // combining half marks
        | 0x02B0..=0x02FF     // spacing modifier letters, incl. length, stress, tone letters
        | 0x1D2C..=0x1D6A     // phonetic extensions: modifier letters
        | 0x1D78
        | 0x1D9B..=0x1DBF     // phonetic extensions supplement: modifier letters
        | 0x2070..=0x209F     // superscripts and subscripts
        | 0xA700..=0xA721     // modifier tone letters
        | 0xA788..=0xA78A
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phone {
    surface: String,
    base: String,
    diacritics: Vec<String>,
}

impl Phone {
    /// Builds a phone from an already segmented surface string.
    ///
    /// Fails if the string contains whitespace or segments into more than
    /// one phone.
    pub fn parse(s: &str) -> Result<Self> {
        let normalized = nfd(s);
        if normalized.chars().any(char::is_whitespace) {
            return Err(Error::Domain(format!("phone {s:?} contains whitespace")));
        }
        let mut phones = segment_word(&normalized);
        match phones.len() {
            0 => Err(Error::EmptyTranscript),
            1 => Ok(phones.pop().unwrap()),
            n => Err(Error::Domain(format!("{s:?} segments into {n} phones"))),
        }
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn diacritics(&self) -> &[String] {
        &self.diacritics
    }

    /// Marks carried by this phone: trailing diacritics plus any prefix or
    /// pre-tie marks folded into the base. Tie bars and the cedilla of `ç`
    /// are part of the base symbol and do not count.
    pub fn diacritic_count(&self) -> usize {
        let mut in_base = 0;
        let mut prev: Option<char> = None;
        for c in self.base.chars() {
            if is_diacritic(c) && !(c == CEDILLA && prev == Some('c')) {
                in_base += 1;
            }
            prev = Some(c);
        }
        in_base + self.diacritics.len()
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

impl Serialize for Phone {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.surface)
    }
}

impl<'de> Deserialize<'de> for Phone {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Phone::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Default)]
struct Builder {
    base: String,
    diacritics: Vec<String>,
    join_next: bool,
}

impl Builder {
    fn finish(self) -> Phone {
        let mut surface = self.base.clone();
        for d in &self.diacritics {
            surface.push_str(d);
        }
        Phone {
            surface,
            base: self.base,
            diacritics: self.diacritics,
        }
    }
}

/// Segments one whitespace-free, NFD-normalized word.
pub(crate) fn segment_word(word: &str) -> Vec<Phone> {
    let mut phones = Vec::new();
    let mut current: Option<Builder> = None;
    let mut prefix = String::new();

    for c in word.chars() {
        if is_tie(c) {
            match current.as_mut() {
                Some(b) => {
                    // marks before the tie become part of the joined base
                    for d in b.diacritics.drain(..) {
                        b.base.push_str(&d);
                    }
                    b.base.push(c);
                    b.join_next = true;
                }
                None => prefix.push(c),
            }
        } else if is_diacritic(c) {
            match current.as_mut() {
                Some(b) if b.join_next => b.base.push(c),
                Some(b) if c == CEDILLA && b.diacritics.is_empty() && b.base.ends_with('c') => {
                    b.base.push(c)
                }
                Some(b) => b.diacritics.push(c.to_string()),
                None => prefix.push(c),
            }
        } else {
            match current.as_mut() {
                Some(b) if b.join_next => {
                    b.base.push(c);
                    b.join_next = false;
                }
                _ => {
                    if let Some(b) = current.take() {
                        phones.push(b.finish());
                    }
                    let mut base = std::mem::take(&mut prefix);
                    base.push(c);
                    current = Some(Builder {
                        base,
                        ..Builder::default()
                    });
                }
            }
        }
    }
    if let Some(b) = current {
        phones.push(b.finish());
    }
    if !prefix.is_empty() {
        // a word made only of marks
        phones.push(Builder {
            base: prefix,
            ..Builder::default()
        }
        .finish());
    }
    phones
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub words: Vec<Vec<Phone>>,
    #[serde(default)]
    pub language_code: String,
    #[serde(default)]
    pub utterance_id: String,
}

impl Transcript {
    pub fn from_words(words: Vec<Vec<Phone>>) -> Self {
        Self {
            words: words.into_iter().filter(|w| !w.is_empty()).collect(),
            language_code: String::new(),
            utterance_id: String::new(),
        }
    }

    pub fn with_metadata(mut self, language_code: impl Into<String>, utterance_id: impl Into<String>) -> Self {
        self.language_code = language_code.into();
        self.utterance_id = utterance_id.into();
        self
    }

    pub fn phones(&self) -> impl Iterator<Item = &Phone> {
        self.words.iter().flatten()
    }

    pub fn flatten(&self) -> Vec<Phone> {
        self.phones().cloned().collect()
    }

    pub fn phone_count(&self) -> usize {
        self.words.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.phone_count() == 0
    }

    /// Space-separated words, phones concatenated within a word.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, word) in self.words.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            for phone in word {
                out.push_str(phone.surface());
            }
        }
        out
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// NFD with whitespace runs collapsed to single spaces and trimmed.
pub fn canonical(raw: &str) -> String {
    nfd(raw).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits a raw transcript into words of phones.
pub fn tokenize(raw: &str) -> Result<Transcript> {
    let normalized = nfd(raw);
    let words: Vec<Vec<Phone>> = normalized.split_whitespace().map(segment_word).collect();
    let transcript = Transcript::from_words(words);
    if transcript.is_empty() {
        return Err(Error::EmptyTranscript);
    }
    Ok(transcript)
}

/// Tokenizes an unsegmented prediction: whitespace is dropped and the phones
/// are returned as one flat sequence.
pub fn tokenize_flat(raw: &str) -> Vec<Phone> {
    nfd(raw).split_whitespace().flat_map(segment_word).collect()
}
