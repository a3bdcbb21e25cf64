//! Lexical answer-quality metrics: Exact Match, BLEU, ROUGE-1, ROUGE-L.
//!
//! All four operate on [`normalize`]d token sequences. The tokenization is
//! deliberately pinned (lowercase, every non-alphanumeric character treated
//! as a separator, split on whitespace runs) because each metric's value
//! depends on it; changing the scheme is a breaking change to reported
//! numbers.
//!
//! Defaults follow the printed formulas exactly: BLEU uses orders 1..4 with
//! uniform weights, clipped precisions, brevity penalty min(1, e^(1-|r|/|a|)),
//! and no smoothing; ROUGE-1 is the recall form (divide by reference length);
//! ROUGE-L is 2·LCS/(|a|+|r|), the beta = 1 case. Deviation knobs (smoothing,
//! strict short-candidate handling, ROUGE-1 F-measure) are explicit options,
//! never silent behavior changes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// One scored answer: what the generator produced vs. the reference. The
/// generated text may be empty (it is scored, not rejected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerPair {
    pub query_id: String,
    pub generated: String,
    pub reference: String,
}

/// A normalized token sequence. Only [`normalize`] produces these, so any
/// two `TokenSeq`s are comparable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, maps every non-alphanumeric character to a separator, and
/// splits on whitespace runs. "The  cat." becomes [the, cat]; "A—B" becomes
/// [a, b].
pub fn normalize(text: &str) -> TokenSeq {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_alphanumeric() {
            for lower in c.to_lowercase() {
                cleaned.push(lower);
            }
        } else {
            cleaned.push(' ');
        }
    }
    TokenSeq {
        tokens: cleaned.split_whitespace().map(str::to_string).collect(),
    }
}

/// Fraction of pairs whose generated and reference texts normalize to the
/// same token sequence.
pub fn exact_match(pairs: &[AnswerPair]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let matches = pairs
        .iter()
        .filter(|p| normalize(&p.generated) == normalize(&p.reference))
        .count();
    Ok(matches as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BleuOptions {
    /// Add-one smoothing on clipped and total n-gram counts.
    pub smooth: bool,
    /// Treat candidate-shorter-than-n orders as precision 0 instead of
    /// excluding them from the geometric mean.
    pub strict_short: bool,
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped order-n matches: candidate n-gram occurrences capped by their
/// reference occurrences, plus the candidate n-gram total.
fn clipped_matches(cand: &[String], refr: &[String], n: usize) -> (usize, usize) {
    let cand_counts = ngram_counts(cand, n);
    let ref_counts = ngram_counts(refr, n);
    let matched = cand_counts
        .iter()
        .map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, cand.len() + 1 - n)
}

/// Sentence BLEU with the default options (orders 1..4, uniform weights, no
/// smoothing, short orders excluded).
pub fn bleu(pair: &AnswerPair) -> Result<f64, MetricError> {
    bleu_with(pair, BleuOptions::default())
}

pub fn bleu_with(pair: &AnswerPair, options: BleuOptions) -> Result<f64, MetricError> {
    let cand = normalize(&pair.generated);
    let refr = normalize(&pair.reference);
    if refr.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if cand.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0u32;
    for n in 1..=4 {
        if cand.len() < n {
            if options.strict_short {
                return Ok(0.0);
            }
            // No order-n candidate n-grams exist; excluding the order
            // re-normalizes the uniform weights over those that do.
            continue;
        }
        let (matched, total) = clipped_matches(cand.tokens(), refr.tokens(), n);
        let precision = if options.smooth {
            (matched + 1) as f64 / (total + 1) as f64
        } else {
            matched as f64 / total as f64
        };
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_sum += precision.ln();
        orders += 1;
    }
    let geo_mean = (log_sum / f64::from(orders)).exp();
    let bp = if cand.len() >= refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    Ok(bp * geo_mean)
}

fn unigram_overlap(generated: &TokenSeq, reference: &TokenSeq) -> usize {
    let gen_counts = ngram_counts(generated.tokens(), 1);
    let ref_counts = ngram_counts(reference.tokens(), 1);
    gen_counts
        .iter()
        .map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum()
}

/// Recall-form ROUGE-1: clipped unigram overlap divided by reference length.
pub fn rouge_1(pair: &AnswerPair) -> Result<f64, MetricError> {
    let generated = normalize(&pair.generated);
    let reference = normalize(&pair.reference);
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(unigram_overlap(&generated, &reference) as f64 / reference.len() as f64)
}

/// Toolkit-compatible ROUGE-1 F1 over the same clipped overlap.
pub fn rouge_1_fmeasure(pair: &AnswerPair) -> Result<f64, MetricError> {
    let generated = normalize(&pair.generated);
    let reference = normalize(&pair.reference);
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if generated.is_empty() {
        return Ok(0.0);
    }
    let overlap = unigram_overlap(&generated, &reference) as f64;
    if overlap == 0.0 {
        return Ok(0.0);
    }
    let precision = overlap / generated.len() as f64;
    let recall = overlap / reference.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Token-level longest common subsequence length, by dynamic programming
/// over a rolling row (O(|a|·|b|) time, O(|b|) space).
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L with beta = 1: 2·LCS(a,r) / (|a| + |r|). Both sides empty is
/// undefined and scores 0 with a warning.
pub fn rouge_l(pair: &AnswerPair) -> Result<f64, MetricError> {
    let generated = normalize(&pair.generated);
    let reference = normalize(&pair.reference);
    if generated.is_empty() && reference.is_empty() {
        log::warn!(
            "rouge_l: query {}: both texts empty after normalization, scoring 0",
            pair.query_id
        );
        return Ok(0.0);
    }
    let lcs = lcs_len(generated.tokens(), reference.tokens()) as f64;
    Ok(2.0 * lcs / (generated.len() + reference.len()) as f64)
}

/// Per-metric means over a pair set, default options throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticReport {
    pub pairs: usize,
    pub exact_match: f64,
    pub bleu: f64,
    pub rouge_1: f64,
    pub rouge_l: f64,
}

pub fn semantic_report(pairs: &[AnswerPair]) -> Result<SemanticReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let mut bleu_sum = 0.0;
    let mut r1_sum = 0.0;
    let mut rl_sum = 0.0;
    for pair in pairs {
        bleu_sum += bleu(pair)?;
        r1_sum += rouge_1(pair)?;
        rl_sum += rouge_l(pair)?;
    }
    Ok(SemanticReport {
        pairs: pairs.len(),
        exact_match: exact_match(pairs)?,
        bleu: bleu_sum / n,
        rouge_1: r1_sum / n,
        rouge_l: rl_sum / n,
    })
}
