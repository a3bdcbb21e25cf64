//! Normalizes per-arm results onto five 0..=10 capability axes so arms with
//! incomparable raw units (MRR vs seconds vs bytes) can sit on one chart.
//!
//! Quality axes (clean retrieval, degraded retrieval, semantic quality) are
//! population z-scores scaled by 10 and clipped into 0..=10. Cost axes
//! (speed, memory) are best-over-actual ratios scaled by 10, so the cheapest
//! arm scores 10 and one twice as expensive scores 5. An axis with no spread
//! cannot rank arms; every arm present on it scores 10 and the report says
//! so rather than implying a measured difference.

use serde::{Deserialize, Serialize};

/// Raw per-arm measurements. `None` means the run did not produce the axis
/// (semantic evaluation off, profiling off, no questions at that level).
#[derive(Debug, Clone, PartialEq)]
pub struct RadarInputs {
    pub arm: String,
    /// MRR over level-0 (clean text) questions.
    pub mrr_clean: Option<f64>,
    /// MRR over level-3 (heaviest degradation) questions.
    pub mrr_noisy: Option<f64>,
    /// Sequence-overlap score of generated answers, all levels pooled.
    pub rouge_l: Option<f64>,
    pub retrieval_latency_s: Option<f64>,
    pub memory_bytes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarScores {
    pub arm: String,
    pub clean_retrieval: Option<f64>,
    pub noisy_retrieval: Option<f64>,
    pub semantic_quality: Option<f64>,
    pub processing_speed: Option<f64>,
    pub memory_efficiency: Option<f64>,
}

const AXIS_MAX: f64 = 10.0;

/// Higher-is-better axis: 10 * (x - mean) / stddev, clipped to 0..=10.
/// Population statistics over the arms that have the value.
fn z_axis(name: &str, values: &[Option<f64>], warnings: &mut Vec<String>) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if present.is_empty() {
        return vec![None; values.len()];
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    let variance =
        present.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / present.len() as f64;
    let stddev = variance.sqrt();
    if present.len() == 1 || stddev == 0.0 {
        warnings.push(format!(
            "axis `{name}`: no spread across arms; all present arms score {AXIS_MAX}"
        ));
        return values.iter().map(|v| v.map(|_| AXIS_MAX)).collect();
    }
    values
        .iter()
        .map(|v| v.map(|x| (AXIS_MAX * (x - mean) / stddev).clamp(0.0, AXIS_MAX)))
        .collect()
}

/// Lower-is-better axis: 10 * best / actual over positive values. A
/// non-positive measurement cannot be ranked this way and drops off the axis.
fn ratio_axis(
    name: &str,
    arms: &[&str],
    values: &[Option<f64>],
    warnings: &mut Vec<String>,
) -> Vec<Option<f64>> {
    let cleaned: Vec<Option<f64>> = values
        .iter()
        .zip(arms)
        .map(|(v, arm)| match v {
            Some(x) if *x > 0.0 => Some(*x),
            Some(x) => {
                warnings.push(format!(
                    "axis `{name}`: arm `{arm}` has non-positive value {x}; dropped from the axis"
                ));
                None
            }
            None => None,
        })
        .collect();
    let best = cleaned
        .iter()
        .filter_map(|v| *v)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return vec![None; values.len()];
    }
    cleaned
        .iter()
        .map(|v| v.map(|x| (AXIS_MAX * best / x).clamp(0.0, AXIS_MAX)))
        .collect()
}

/// Scores every arm on the five axes. Returned warnings flag axes that were
/// degenerate (no spread) or measurements that had to be dropped.
pub fn radar_scores(inputs: &[RadarInputs]) -> (Vec<RadarScores>, Vec<String>) {
    let mut warnings = Vec::new();
    let arms: Vec<&str> = inputs.iter().map(|i| i.arm.as_str()).collect();
    let pick = |f: fn(&RadarInputs) -> Option<f64>| -> Vec<Option<f64>> {
        inputs.iter().map(f).collect()
    };
    let clean = z_axis("clean_retrieval", &pick(|i| i.mrr_clean), &mut warnings);
    let noisy = z_axis("noisy_retrieval", &pick(|i| i.mrr_noisy), &mut warnings);
    let semantic = z_axis("semantic_quality", &pick(|i| i.rouge_l), &mut warnings);
    let speed = ratio_axis(
        "processing_speed",
        &arms,
        &pick(|i| i.retrieval_latency_s),
        &mut warnings,
    );
    let memory = ratio_axis(
        "memory_efficiency",
        &arms,
        &pick(|i| i.memory_bytes),
        &mut warnings,
    );
    let scores = inputs
        .iter()
        .enumerate()
        .map(|(i, input)| RadarScores {
            arm: input.arm.clone(),
            clean_retrieval: clean[i],
            noisy_retrieval: noisy[i],
            semantic_quality: semantic[i],
            processing_speed: speed[i],
            memory_efficiency: memory[i],
        })
        .collect();
    (scores, warnings)
}
