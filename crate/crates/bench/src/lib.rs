//! Deterministic inputs for the benchmarks.

use phonaudit_core::rng::SplitMix64;

const PHONES: [&str; 16] = [
    "p", "b", "t", "d", "k", "ɡ", "s", "ʃ", "a", "i", "u", "ə", "tˤ", "kʰʲ", "t͡ʃ", "ǁ",
];

/// A space-separated transcript of `words` words drawn from a fixed inventory.
pub fn transcript(seed: u64, words: usize) -> String {
    let mut rng = SplitMix64::new(seed);
    (0..words)
        .map(|_| {
            let len = 2 + rng.below(5) as usize;
            (0..len).map(|_| PHONES[rng.below(PHONES.len() as u64) as usize]).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Copy of `text` with roughly `rate_pct` percent of phones replaced and
/// spaces removed.
pub fn corrupt(seed: u64, text: &str, rate_pct: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    phonaudit_core::inventory::tokenize_flat(text)
        .iter()
        .map(|p| {
            if rng.below(100) < rate_pct {
                PHONES[rng.below(PHONES.len() as u64) as usize].to_string()
            } else {
                p.surface().to_string()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn inputs_are_reproducible() {
        assert_eq!(super::transcript(3, 4), super::transcript(3, 4));
        assert_eq!(super::transcript(3, 4).split(' ').count(), 4);
        assert!(!super::corrupt(1, &super::transcript(3, 4), 20).contains(' '));
    }
}
