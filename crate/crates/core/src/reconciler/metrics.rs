use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Metric {
    Levenshtein,
    Dice,
    Jaccard,
    KbLevenshtein,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Levenshtein, Metric::Dice, Metric::Jaccard, Metric::KbLevenshtein];
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance if it is at most `max`, computed with early exit.
pub fn levenshtein_within(a: &str, b: &str, max: usize) -> Option<usize> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        let mut row_min = cur[0];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
            row_min = row_min.min(cur[j + 1]);
        }
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Some(prev[b.len()]).filter(|&d| d <= max)
}

fn similarity_from_distance(a: &str, b: &str, d: usize) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        1.0
    } else {
        1.0 - d as f64 / longest as f64
    }
}

/// `1 - d / max(|a|, |b|)`; two empty strings are identical.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    similarity_from_distance(a, b, levenshtein(a, b))
}

/// Levenshtein similarity when the strings are at most `max` edits apart,
/// with the distance.
pub fn levenshtein_similarity_within(a: &str, b: &str, max: usize) -> Option<(f64, usize)> {
    levenshtein_within(a, b, max).map(|d| (similarity_from_distance(a, b, d), d))
}

fn bigrams(s: &str) -> BTreeSet<(char, char)> {
    let chars: Vec<char> = s.chars().collect();
    chars.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Dice coefficient over the sets of character bigrams (no padding).
/// Strings too short to have bigrams score 1 if equal, else 0.
pub fn dice(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let (x, y) = (bigrams(a), bigrams(b));
    if x.is_empty() && y.is_empty() {
        return 0.0;
    }
    2.0 * x.intersection(&y).count() as f64 / (x.len() + y.len()) as f64
}

/// Jaccard index over the sets of whitespace-separated tokens.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let x: BTreeSet<&str> = a.split_whitespace().collect();
    let y: BTreeSet<&str> = b.split_whitespace().collect();
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    x.intersection(&y).count() as f64 / x.union(&y).count() as f64
}

/// Similarity of two already-prepared strings under a plain metric.
/// [`Metric::KbLevenshtein`] compares like Levenshtein; its extra knowledge
/// lies in how the strings are prepared.
pub fn similarity(metric: Metric, a: &str, b: &str) -> f64 {
    match metric {
        Metric::Levenshtein | Metric::KbLevenshtein => levenshtein_similarity(a, b),
        Metric::Dice => dice(a, b),
        Metric::Jaccard => jaccard(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_values() {
        assert_eq!(levenshtein("PIAZZA", "PIAZA"), 1);
        assert_eq!(levenshtein_within("kitten", "sitting", 3), Some(3));
        assert_eq!(levenshtein_within("kitten", "sitting", 2), None);
        assert_eq!(dice("night", "nacht"), 0.25);
        assert_eq!(jaccard("VIA DELLA VIGNA NUOVA", "VIA VIGNA NUOVA"), 0.75);
        for m in Metric::ALL {
            assert_eq!(similarity(m, "VIA ROMA", "VIA ROMA"), 1.0);
            assert_eq!(similarity(m, "", ""), 1.0);
        }
    }
}
