//! Deterministic extractive answerer: picks the context sentence with the
//! highest unigram overlap with the question. No model, no network, so
//! end-to-end runs and the sample config work fully offline.

use super::{ChatMessage, GenError, GenerationProvider};
use crate::metrics::semantic::normalize;

pub struct ExtractiveGenerator;

const NO_ANSWER: &str = "No answer found in the retrieved context.";

/// Pulls the labeled sections back out of the rendered answer prompt. The
/// default template (and any override used with this provider) must keep the
/// `Context:` and `Question:` markers.
fn split_prompt(prompt: &str) -> Option<(&str, &str)> {
    let ctx_at = prompt.find("Context:")?;
    let q_at = prompt[ctx_at..].find("Question:")? + ctx_at;
    let context = &prompt[ctx_at + "Context:".len()..q_at];
    let question_part = &prompt[q_at + "Question:".len()..];
    // The question runs to the end of its line; anything after is
    // instruction boilerplate.
    let question = question_part.trim_start().lines().next().unwrap_or("");
    Some((context, question))
}

fn overlap(question_tokens: &[String], sentence: &str) -> usize {
    let sent = normalize(sentence);
    question_tokens
        .iter()
        .filter(|t| sent.tokens().contains(t))
        .count()
}

impl GenerationProvider for ExtractiveGenerator {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GenError> {
        let prompt = messages
            .last()
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        let Some((context, question)) = split_prompt(prompt) else {
            return Err(GenError::MalformedResponse {
                message: "prompt lacks Context:/Question: markers".to_string(),
            });
        };
        let question_tokens = normalize(question).tokens().to_vec();
        let mut best: Option<(usize, &str)> = None;
        for sentence in context
            .split(['.', '?', '!', '\n'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
        {
            let score = overlap(&question_tokens, sentence);
            // Strictly-greater keeps the earliest (highest-ranked) sentence
            // on ties.
            if score > 0 && best.map_or(true, |(s, _)| score > s) {
                best = Some((score, sentence));
            }
        }
        Ok(best
            .map(|(_, s)| s.to_string())
            .unwrap_or_else(|| NO_ANSWER.to_string()))
    }
}
