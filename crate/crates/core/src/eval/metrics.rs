//! Ranking and classification metrics.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Average precision of a ranked relevance pattern; `None` without any
/// relevant item.
pub fn average_precision(relevant: &[bool]) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &r) in relevant.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanAp {
    pub map: f64,
    pub evaluated: usize,
    /// Queries without relevant items, left out of the mean.
    pub skipped: usize,
}

/// Unweighted mean AP over queries that have at least one relevant item.
pub fn mean_ap<'a, I>(queries: I) -> MeanAp
where
    I: IntoIterator<Item = &'a [bool]>,
{
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0usize, 0usize);
    for q in queries {
        match average_precision(q) {
            Some(ap) => {
                sum += ap;
                evaluated += 1;
            }
            None => skipped += 1,
        }
    }
    MeanAp {
        map: if evaluated > 0 {
            sum / evaluated as f64
        } else {
            0.0
        },
        evaluated,
        skipped,
    }
}

fn dcg(grades: impl Iterator<Item = u32>) -> f64 {
    grades
        .enumerate()
        .map(|(i, g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// nDCG over the first `p` positions of grades listed in ranked order. The
/// ideal ordering sorts all grades descending; 0 when that ideal gain is 0.
pub fn ndcg_at(grades: &[u32], p: usize) -> Result<f64, EvalError> {
    if p == 0 {
        return Err(EvalError::InvalidArgument(
            "nDCG cutoff p must be >= 1".into(),
        ));
    }
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(p));
    if idcg == 0.0 {
        return Ok(0.0);
    }
    Ok(dcg(grades.iter().copied().take(p)) / idcg)
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// positive-negative pairs where the positive scores higher, ties counting
/// one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::InvalidArgument("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sweep tie groups in ascending score order
    let (mut wins, mut negs_below) = (0.0f64, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group_pos = order[i..j].iter().filter(|&&k| labels[k]).count();
        let group_neg = (j - i) - group_pos;
        wins += group_pos as f64 * (negs_below as f64 + 0.5 * group_neg as f64);
        negs_below += group_neg;
        i = j;
    }
    Ok(wins / (pos as f64 * neg as f64))
}
