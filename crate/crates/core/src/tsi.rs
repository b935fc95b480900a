//! Topic-switching index: one minus the cosine similarity between a
//! question's embedding and its answer's embedding, averaged per call.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::encoder::EmbeddingVector;
use crate::math;
use crate::sector::Sector;
use crate::transcript::{EarningsCall, QaPair};
use crate::Date;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TsiError {
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("call has no question/answer pairs")]
    NoPairs,
    #[error("every pair in the call had a zero-norm embedding")]
    AllPairsSkipped,
}

/// How pair indices are combined into the call index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Every scored pair counts once.
    #[default]
    PerPair,
    /// Each analyst's pairs are averaged first; analysts then count once.
    PerAnalyst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_ordinal: usize,
    pub analyst_name: String,
    pub similarity: f64,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallIndexRecord {
    pub company_symbol: String,
    pub call_date: Date,
    pub sector: Sector,
    pub index: f64,
    pub n_pairs_scored: usize,
    pub n_pairs_skipped: usize,
}

/// Call metadata carried into a [`CallIndexRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct CallMeta {
    pub company_symbol: String,
    pub call_date: Date,
    pub sector: Sector,
}

impl From<&EarningsCall> for CallMeta {
    fn from(call: &EarningsCall) -> Self {
        Self {
            company_symbol: call.company_symbol.clone(),
            call_date: call.call_date,
            sector: call.sector,
        }
    }
}

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, TsiError> {
    if a.len() != b.len() {
        return Err(TsiError::DimensionMismatch(a.len(), b.len()));
    }
    let na = math::l2_norm(a);
    let nb = math::l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(TsiError::ZeroNorm);
    }
    Ok((math::dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Outcome of scoring one pair. Zero-norm embeddings are skipped rather than
/// failing the call.
#[derive(Debug, Clone, PartialEq)]
pub enum PairOutcome {
    Scored(PairScore),
    Skipped { pair_ordinal: usize },
}

pub fn score_pair(
    question: &EmbeddingVector,
    answer: &EmbeddingVector,
    pair: &QaPair,
) -> Result<PairOutcome, TsiError> {
    match cosine_similarity(question.values(), answer.values()) {
        Ok(similarity) => Ok(PairOutcome::Scored(PairScore {
            pair_ordinal: pair.pair_ordinal,
            analyst_name: pair.analyst_name.clone(),
            similarity,
            index: 1.0 - similarity,
        })),
        Err(TsiError::ZeroNorm) => Ok(PairOutcome::Skipped {
            pair_ordinal: pair.pair_ordinal,
        }),
        Err(e) => Err(e),
    }
}

/// Averages pair scores into the call's index.
///
/// Scores are summed in `pair_ordinal` order so the result does not depend
/// on the order of `pairs`.
pub fn score_call<'a, I>(pairs: I, meta: CallMeta, weighting: Weighting) -> Result<CallIndexRecord, TsiError>
where
    I: IntoIterator<Item = (&'a QaPair, &'a EmbeddingVector, &'a EmbeddingVector)>,
{
    let mut scores = Vec::new();
    let mut skipped = 0usize;
    let mut seen = 0usize;
    for (pair, q, a) in pairs {
        seen += 1;
        match score_pair(q, a, pair)? {
            PairOutcome::Scored(s) => scores.push(s),
            PairOutcome::Skipped { .. } => skipped += 1,
        }
    }
    if seen == 0 {
        return Err(TsiError::NoPairs);
    }
    if scores.is_empty() {
        return Err(TsiError::AllPairsSkipped);
    }
    let index = aggregate(&mut scores, weighting);
    Ok(CallIndexRecord {
        company_symbol: meta.company_symbol,
        call_date: meta.call_date,
        sector: meta.sector,
        index,
        n_pairs_scored: scores.len(),
        n_pairs_skipped: skipped,
    })
}

/// Combines already scored pairs. `scores` must be non-empty.
pub fn aggregate(scores: &mut [PairScore], weighting: Weighting) -> f64 {
    scores.sort_by_key(|a| a.pair_ordinal);
    match weighting {
        Weighting::PerPair => {
            let values: Vec<f64> = scores.iter().map(|s| s.index).collect();
            math::mean(&values)
        }
        Weighting::PerAnalyst => {
            let mut by_analyst: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for s in scores.iter() {
                by_analyst.entry(s.analyst_name.as_str()).or_default().push(s.index);
            }
            let means: Vec<f64> = by_analyst.values().map(|v| math::mean(v)).collect();
            math::mean(&means)
        }
    }
}
