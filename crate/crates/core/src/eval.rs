//! Scoring-quality metrics.

use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("label at position {0} is not 0 or 1")]
    NonBinaryLabel(usize),
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("metric undefined: labels contain only one class")]
    SingleClass,
}

/// A score vector aligned with binary labels (1 marks anomalous records).
#[derive(Debug, Clone)]
pub struct LabeledScores<F> {
    scores: Vec<F>,
    labels: Vec<u8>,
}

impl<F: Real> LabeledScores<F> {
    pub fn new(scores: Vec<F>, labels: Vec<u8>) -> Result<Self, EvalError> {
        if scores.len() != labels.len() {
            return Err(EvalError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(EvalError::NonBinaryLabel(i));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(EvalError::NonFiniteScore(i));
        }
        Ok(LabeledScores { scores, labels })
    }

    pub fn scores(&self) -> &[F] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Rank-based AUROC (Mann-Whitney), with average ranks over tied scores.
///
/// Requires at least one positive and one negative label.
pub fn auroc<F: Real>(ls: &LabeledScores<F>) -> Result<f64, EvalError> {
    let n = ls.len();
    let positives = ls.labels.iter().filter(|&&l| l == 1).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }

    // Stable order with index tie-break keeps the ranking deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        ls.scores[i]
            .partial_cmp(&ls.scores[j])
            .expect("scores validated finite")
            .then(i.cmp(&j))
    });

    // Average ranks (1-based) over groups of equal scores.
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ls.scores[order[end]] == ls.scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            if ls.labels[i] == 1 {
                positive_rank_sum += avg_rank;
            }
        }
        start = end;
    }

    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Points `(fpr, tpr)` of the ROC curve, from threshold `+inf` down.
pub fn roc_points<F: Real>(ls: &LabeledScores<F>) -> Result<Vec<(f64, f64)>, EvalError> {
    let n = ls.len();
    let positives = ls.labels.iter().filter(|&&l| l == 1).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        ls.scores[j]
            .partial_cmp(&ls.scores[i])
            .expect("scores validated finite")
            .then(i.cmp(&j))
    });
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n && ls.scores[order[end]] == ls.scores[order[k]] {
            end += 1;
        }
        for &i in &order[k..end] {
            if ls.labels[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        k = end;
    }
    Ok(points)
}

/// Split of the records whose final score was boosted (`final > burst`) or
/// damped (`final < burst`) by the pattern components. Records with a zero
/// burst score, or where the two scores are equal, belong to neither
/// population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternContribution {
    /// Fraction of boosted records that are labeled anomalous.
    pub boosted_true_positive: f64,
    /// Fraction of boosted records that are labeled normal.
    pub boosted_false_positive: f64,
    /// Fraction of damped records that are labeled normal.
    pub damped_true_negative: f64,
    /// Fraction of damped records that are labeled anomalous.
    pub damped_false_negative: f64,
    pub boosted: usize,
    pub damped: usize,
}

/// Compare final scores against burst-only scores record by record.
pub fn pattern_contribution<F: Real>(
    final_scores: &[F],
    burst_only: &[F],
    labels: &[u8],
) -> Result<PatternContribution, EvalError> {
    if final_scores.len() != burst_only.len() || final_scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: final_scores.len(),
            labels: labels.len().min(burst_only.len()),
        });
    }
    let mut boosted = 0usize;
    let mut boosted_pos = 0usize;
    let mut damped = 0usize;
    let mut damped_pos = 0usize;
    for ((&a, &b), &label) in final_scores.iter().zip(burst_only).zip(labels) {
        if label > 1 {
            return Err(EvalError::NonBinaryLabel(0));
        }
        if b <= F::zero() {
            continue;
        }
        // a/b > 1 iff a > b since b > 0; avoids the division.
        if a > b {
            boosted += 1;
            boosted_pos += usize::from(label == 1);
        } else if a < b {
            damped += 1;
            damped_pos += usize::from(label == 1);
        }
    }
    let rate = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(PatternContribution {
        boosted_true_positive: rate(boosted_pos, boosted),
        boosted_false_positive: rate(boosted - boosted_pos, boosted),
        damped_true_negative: rate(damped - damped_pos, damped),
        damped_false_negative: rate(damped_pos, damped),
        boosted,
        damped,
    })
}
