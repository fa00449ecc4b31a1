//! Evaluation: retrieval metrics, stemming for inexact relevance, the
//! synthetic corpus generator and the two evaluation protocols (document
//! similarity ranking and word spotting).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::normalize;
use crate::descriptor::StopwordLexicon;
use crate::doc_model::{CorpusManifest, EmbeddingStore, ModelError};
use crate::matcher::ScoreReport;

pub mod fixtures;
pub mod metrics;
pub mod porter;

pub use fixtures::{gen_fixtures, Degree, FixtureSpec, Fixtures};
pub use metrics::{average_precision, mean_ap, ndcg_at, roc_auc, MeanAp};
pub use porter::{inexact_match, porter_stem};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error("AUC needs at least one positive and one negative")]
    SingleClass,
    #[error("invalid fixture spec: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no score for pair ({query}, {target})")]
    MissingPair { query: String, target: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One graded document pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub query_doc: String,
    pub target_doc: String,
    pub grade: u32,
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> Result<(), EvalError> {
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads one JSON object per non-blank line.
pub fn read_jsonl<T: serde::de::DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub auc: f64,
    pub mean_ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocSimReport {
    pub queries: usize,
    pub pairs: usize,
    pub ndcg_p: usize,
    pub mods: RankingSummary,
    pub swm: RankingSummary,
    pub per_query: BTreeMap<String, QueryNdcg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryNdcg {
    pub mods: f64,
    pub swm: f64,
}

impl DocSimReport {
    pub fn table(&self) -> String {
        let mut s = format!("{:<8} {:>8} {:>8}\n", "metric", "nDCG@p", "AUC");
        for (name, r) in [("mods", &self.mods), ("swm", &self.swm)] {
            s.push_str(&format!(
                "{:<8} {:>8.4} {:>8.4}\n",
                name, r.mean_ndcg, r.auc
            ));
        }
        s.push_str(&format!(
            "queries={} pairs={} p={}\n",
            self.queries, self.pairs, self.ndcg_p
        ));
        s
    }
}

/// Evaluates scored pairs against graded truth.
///
/// Every non-self truth pair must have a score. Per query, targets are ranked
/// by descending `mods_norm` (ascending SWM distance), ties by `target_doc`,
/// and nDCG is taken at `p` (default: targets per query). AUC pools all pairs
/// with grade > 0 as positives; SWM distances are negated so that higher
/// means more similar for both scores.
pub fn eval_docsim(
    reports: &[ScoreReport],
    truth: &[TruthRecord],
    p: Option<usize>,
) -> Result<DocSimReport, EvalError> {
    let scores: BTreeMap<(&str, &str), &ScoreReport> = reports
        .iter()
        .map(|r| ((r.query_doc.as_str(), r.target_doc.as_str()), r))
        .collect();
    let mut by_query: BTreeMap<&str, Vec<(&str, u32, f64, f64)>> = BTreeMap::new();
    for t in truth.iter().filter(|t| t.query_doc != t.target_doc) {
        let r = scores
            .get(&(t.query_doc.as_str(), t.target_doc.as_str()))
            .ok_or_else(|| EvalError::MissingPair {
                query: t.query_doc.clone(),
                target: t.target_doc.clone(),
            })?;
        by_query.entry(&t.query_doc).or_default().push((
            &t.target_doc,
            t.grade,
            r.mods_norm,
            -r.swm,
        ));
    }
    if by_query.is_empty() {
        return Err(EvalError::InvalidArgument(
            "no truth pairs to evaluate".into(),
        ));
    }
    let p = p.unwrap_or_else(|| by_query.values().map(Vec::len).max().unwrap_or(1));
    let mut per_query = BTreeMap::new();
    let (mut labels, mut mods_scores, mut swm_scores) = (Vec::new(), Vec::new(), Vec::new());
    for (q, rows) in &by_query {
        let ndcg_for = |key: fn(&(&str, u32, f64, f64)) -> f64| -> Result<f64, EvalError> {
            let mut ranked = rows.clone();
            ranked.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.0.cmp(b.0)));
            let grades: Vec<u32> = ranked.iter().map(|r| r.1).collect();
            ndcg_at(&grades, p)
        };
        per_query.insert(
            q.to_string(),
            QueryNdcg {
                mods: ndcg_for(|r| r.2)?,
                swm: ndcg_for(|r| r.3)?,
            },
        );
        for r in rows {
            labels.push(r.1 > 0);
            mods_scores.push(r.2);
            swm_scores.push(r.3);
        }
    }
    let n = per_query.len() as f64;
    Ok(DocSimReport {
        queries: per_query.len(),
        pairs: labels.len(),
        ndcg_p: p,
        mods: RankingSummary {
            auc: roc_auc(&mods_scores, &labels)?,
            mean_ndcg: per_query.values().map(|v| v.mods).sum::<f64>() / n,
        },
        swm: RankingSummary {
            auc: roc_auc(&swm_scores, &labels)?,
            mean_ndcg: per_query.values().map(|v| v.swm).sum::<f64>() / n,
        },
        per_query,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpottingReport {
    pub inexact: bool,
    pub words: usize,
    #[serde(flatten)]
    pub map: MeanAp,
}

/// Query-by-example word spotting: every labeled non-stopword word queries
/// all other labeled words ranked by cosine similarity of their embeddings.
/// Relevant items share the label (or its stem when `inexact`). Queries with
/// no relevant item are skipped and counted.
pub fn eval_spotting(
    manifest: &CorpusManifest,
    store: &EmbeddingStore,
    lexicon: &StopwordLexicon,
    inexact: bool,
) -> Result<SpottingReport, EvalError> {
    let mut items: Vec<(String, Vec<f32>)> = Vec::new();
    let mut seen = BTreeSet::new();
    for doc in manifest.documents() {
        for w in doc.words() {
            let Some(label) = &w.label else { continue };
            let Some(rec) = store.get(&w.word_id) else {
                return Err(EvalError::InvalidArgument(format!(
                    "word `{}` has no embedding",
                    w.word_id
                )));
            };
            if !seen.insert(w.word_id.clone()) {
                continue;
            }
            let mut v = rec.vector.clone();
            normalize(&mut v);
            items.push((label.clone(), v));
        }
    }
    let stems: Vec<String> = items.iter().map(|(l, _)| porter_stem(l)).collect();
    let mut patterns = Vec::new();
    for (qi, (ql, qv)) in items.iter().enumerate() {
        if lexicon.contains(ql) {
            continue;
        }
        let mut ranked: Vec<(f64, usize)> = items
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != qi)
            .map(|(j, (_, v))| (crate::ann::dot(qv, v), j))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        patterns.push(
            ranked
                .iter()
                .map(|&(_, j)| {
                    if inexact {
                        stems[j] == stems[qi]
                    } else {
                        items[j].0 == *ql
                    }
                })
                .collect::<Vec<bool>>(),
        );
    }
    Ok(SpottingReport {
        inexact,
        words: items.len(),
        map: mean_ap(patterns.iter().map(Vec::as_slice)),
    })
}
