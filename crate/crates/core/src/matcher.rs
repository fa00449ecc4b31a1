//! Document-pair scoring.
//!
//! Two scores are computed for a pair of documents after stopword removal:
//!
//! * SWM, a symmetric distance: every word's distance to its nearest word in
//!   the other document, summed both ways and divided by the total word count.
//! * MODS, a similarity: each document is tiled into overlapping windows of
//!   `region_lines` text lines. Every source region is matched against every
//!   target region with a one-to-one assignment on cosine distances; pairs
//!   farther than `gamma` are dropped and the region keeps its best target.
//!   `mods_raw` sums region scores over `max(|Di|, |Dj|)`; `mods_norm` is the
//!   region-size weighted mean, which always lies in `[0, 1]`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::{dot, normalize, IndexParams, VectorIndex};
use crate::assignment::{self, CostMatrix};
use crate::descriptor::{is_stopword, StopwordLexicon};
use crate::doc_model::{CorpusManifest, DocumentRecord, EmbeddingStore};

/// Distance reported by SWM when either document has no words left.
pub const SWM_EMPTY_DISTANCE: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("document `{doc_id}`: word `{word_id}` has no embedding")]
    MissingEmbedding { doc_id: String, word_id: String },
    #[error("embedding dimension {got} for word `{word_id}`, expected {expected}")]
    Dimension {
        word_id: String,
        got: usize,
        expected: usize,
    },
    #[error("invalid match configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Largest cosine distance a word pair may have and still count.
    pub gamma: f64,
    pub region_lines: u32,
    pub region_stride: u32,
    pub stopword_tau: f32,
    pub index: IndexParams,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            gamma: 0.6,
            region_lines: 3,
            region_stride: 1,
            stopword_tau: 0.7,
            index: IndexParams::default(),
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        let bad = |m: &str| Err(MatchError::Config(m.into()));
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return bad("gamma must lie in (0, 2]");
        }
        if self.region_lines < 1 {
            return bad("region_lines must be at least 1");
        }
        if self.region_stride < 1 || self.region_stride > self.region_lines {
            return bad("region_stride must lie in [1, region_lines]");
        }
        if !(0.0..=1.0).contains(&self.stopword_tau) {
            return bad("stopword_tau must lie in [0, 1]");
        }
        if self.index.leaf_size == 0 || self.index.max_visited_leaves == 0 {
            return bad("index leaf_size and max_visited_leaves must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mods,
    Swm,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mods" => Ok(Self::Mods),
            "swm" => Ok(Self::Swm),
            other => Err(format!("unknown metric `{other}` (expected mods|swm)")),
        }
    }
}

/// A document reduced to its non-stopword words with unit vectors.
#[derive(Debug)]
pub struct PreparedDoc {
    pub doc_id: String,
    pub word_ids: Vec<String>,
    pub lines: Vec<u32>,
    vectors: Vec<Vec<f32>>,
    index: VectorIndex,
}

impl PreparedDoc {
    /// Builds a prepared document directly from `(word_id, line, vector)`.
    pub fn from_vectors(
        doc_id: impl Into<String>,
        words: Vec<(String, u32, Vec<f32>)>,
        params: IndexParams,
    ) -> Self {
        let mut word_ids = Vec::with_capacity(words.len());
        let mut lines = Vec::with_capacity(words.len());
        let mut vectors = Vec::with_capacity(words.len());
        for (id, line, mut v) in words {
            normalize(&mut v);
            word_ids.push(id);
            lines.push(line);
            vectors.push(v);
        }
        let index = VectorIndex::build(
            word_ids.iter().cloned().zip(vectors.iter().cloned()),
            params,
        );
        Self {
            doc_id: doc_id.into(),
            word_ids,
            lines,
            vectors,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i]
    }
}

/// A window of consecutive text lines over one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub region_id: usize,
    pub first_line: u32,
    pub last_line: u32,
    /// Indices into the prepared document's words, reading order.
    pub members: Vec<usize>,
}

impl Region {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordPair {
    pub source: usize,
    pub target: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMatch {
    pub source_region: usize,
    pub source_size: usize,
    /// Best target region, `None` when no targets exist.
    pub target_region: Option<usize>,
    pub pairs: Vec<WordPair>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub query_doc: String,
    pub target_doc: String,
    pub swm: f64,
    pub mods_raw: f64,
    pub mods_norm: f64,
    pub region_matches: Vec<RegionMatch>,
}

impl PairScore {
    pub fn score(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Mods => self.mods_norm,
            Metric::Swm => self.swm,
        }
    }
}

/// Cosine distance `1 - cos`, clamped to `[0, 2]`.
#[inline]
pub fn cosine_distance(a: &[f32], b: &[f32]) -> f64 {
    (1.0 - dot(a, b)).clamp(0.0, 2.0)
}

/// Filters stopwords and attaches normalized embeddings.
pub fn prepare(
    doc: &DocumentRecord,
    store: &EmbeddingStore,
    cfg: &MatchConfig,
    lexicon: &StopwordLexicon,
) -> Result<PreparedDoc, MatchError> {
    let mut words = Vec::with_capacity(doc.word_count());
    for w in doc.words() {
        let rec = store.get(&w.word_id);
        let mut probe = w.clone();
        if probe.stopword_prob.is_none() {
            probe.stopword_prob = rec.and_then(|r| r.stopword_prob);
        }
        if is_stopword(&probe, cfg.stopword_tau, lexicon) {
            continue;
        }
        let rec = rec.ok_or_else(|| MatchError::MissingEmbedding {
            doc_id: doc.doc_id.clone(),
            word_id: w.word_id.clone(),
        })?;
        if rec.vector.len() != store.dim() {
            return Err(MatchError::Dimension {
                word_id: w.word_id.clone(),
                got: rec.vector.len(),
                expected: store.dim(),
            });
        }
        words.push((w.word_id.clone(), w.line_index, rec.vector.clone()));
    }
    Ok(PreparedDoc::from_vectors(
        doc.doc_id.clone(),
        words,
        cfg.index,
    ))
}

fn nearest_sum(from: &PreparedDoc, to: &PreparedDoc) -> f64 {
    from.vectors
        .iter()
        .map(|v| to.index.query_knn(v, 1)[0].distance)
        .sum()
}

/// Symmetric mean nearest-word L2 distance; [`SWM_EMPTY_DISTANCE`] when
/// either side is empty.
pub fn swm_prepared(a: &PreparedDoc, b: &PreparedDoc) -> f64 {
    if a.is_empty() || b.is_empty() {
        return SWM_EMPTY_DISTANCE;
    }
    let ab = nearest_sum(a, b);
    let ba = nearest_sum(b, a);
    // sort the two halves so swapping the arguments adds in the same order
    let (lo, hi) = if ab <= ba { (ab, ba) } else { (ba, ab) };
    (lo + hi) / (a.len() + b.len()) as f64
}

/// Tiles the document into windows of `region_lines` consecutive line
/// indices advanced by `region_stride`; the final window is shifted back to
/// end on the last line. Windows without words are dropped.
pub fn tile_regions(doc: &PreparedDoc, cfg: &MatchConfig) -> Vec<Region> {
    let Some(&first) = doc.lines.iter().min() else {
        return Vec::new();
    };
    let last = *doc.lines.iter().max().unwrap();
    let k = cfg.region_lines.max(1);
    let stride = cfg.region_stride.max(1);
    let mut windows: Vec<(u32, u32)> = Vec::new();
    let mut start = first;
    loop {
        let end = start + k - 1;
        if end >= last {
            let s = last.saturating_sub(k - 1).max(first);
            if windows.last() != Some(&(s, last)) {
                windows.push((s, last));
            }
            break;
        }
        windows.push((start, end));
        start += stride;
    }
    let mut regions = Vec::with_capacity(windows.len());
    for (first_line, last_line) in windows {
        let members: Vec<usize> = (0..doc.len())
            .filter(|&i| doc.lines[i] >= first_line && doc.lines[i] <= last_line)
            .collect();
        if !members.is_empty() {
            regions.push(Region {
                region_id: regions.len(),
                first_line,
                last_line,
                members,
            });
        }
    }
    regions
}

/// Distance matrix between every word of `a` and every word of `b`.
pub struct DistanceTable {
    cols: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    pub fn new(a: &PreparedDoc, b: &PreparedDoc) -> Self {
        let mut data = Vec::with_capacity(a.len() * b.len());
        for va in &a.vectors {
            for vb in &b.vectors {
                data.push(cosine_distance(va, vb));
            }
        }
        Self {
            cols: b.len(),
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

fn score_region_pair(
    p: &Region,
    q: &Region,
    table: &DistanceTable,
    gamma: f64,
) -> (f64, Vec<WordPair>) {
    let mut cells = Vec::with_capacity(p.size() * q.size());
    for &k in &p.members {
        for &l in &q.members {
            cells.push(table.get(k, l));
        }
    }
    let cost = CostMatrix::new(p.size(), q.size(), cells).expect("distances are finite and >= 0");
    let mut pairs: Vec<WordPair> = assignment::solve(&cost)
        .into_iter()
        .map(|(r, c)| WordPair {
            source: p.members[r],
            target: q.members[c],
            distance: cost.get(r, c),
        })
        .filter(|wp| wp.distance <= gamma)
        .collect();
    // order-free summation: identical member sets give identical sums
    let mut gains: Vec<f64> = pairs
        .iter()
        .map(|wp| (1.0 - wp.distance).max(0.0))
        .collect();
    gains.sort_by(f64::total_cmp);
    let score = gains.iter().sum::<f64>() / p.size().max(q.size()) as f64;
    pairs.sort_by_key(|wp| (wp.source, wp.target));
    (score, pairs)
}

/// Best-scoring target region for `p`. Ties go to the target whose line span
/// starts first.
pub fn region_score(
    p: &Region,
    targets: &[Region],
    table: &DistanceTable,
    cfg: &MatchConfig,
) -> RegionMatch {
    let mut best = RegionMatch {
        source_region: p.region_id,
        source_size: p.size(),
        target_region: None,
        pairs: Vec::new(),
        score: 0.0,
    };
    let mut best_start = u32::MAX;
    for q in targets {
        let (score, pairs) = score_region_pair(p, q, table, cfg.gamma);
        let better = match best.target_region {
            None => true,
            Some(_) => score > best.score || (score == best.score && q.first_line < best_start),
        };
        if better {
            best = RegionMatch {
                source_region: p.region_id,
                source_size: p.size(),
                target_region: Some(q.region_id),
                pairs,
                score,
            };
            best_start = q.first_line;
        }
    }
    best
}

/// SWM and MODS scores for a prepared pair; `a` is the query side.
pub fn score_prepared(a: &PreparedDoc, b: &PreparedDoc, cfg: &MatchConfig) -> PairScore {
    let swm = swm_prepared(a, b);
    let mut out = PairScore {
        query_doc: a.doc_id.clone(),
        target_doc: b.doc_id.clone(),
        swm,
        mods_raw: 0.0,
        mods_norm: 0.0,
        region_matches: Vec::new(),
    };
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let table = DistanceTable::new(a, b);
    let source = tile_regions(a, cfg);
    let target = tile_regions(b, cfg);
    let matches: Vec<RegionMatch> = source
        .iter()
        .map(|p| region_score(p, &target, &table, cfg))
        .collect();
    let sum: f64 = matches.iter().map(|m| m.score).sum();
    let weighted: f64 = matches.iter().map(|m| m.source_size as f64 * m.score).sum();
    let weight: usize = matches.iter().map(|m| m.source_size).sum();
    out.mods_raw = sum / a.len().max(b.len()) as f64;
    out.mods_norm = (weighted / weight as f64).clamp(0.0, 1.0);
    out.region_matches = matches;
    out
}

/// Scorer bound to one embedding store, configuration and stopword lexicon.
pub struct Matcher<'a> {
    store: &'a EmbeddingStore,
    cfg: MatchConfig,
    lexicon: StopwordLexicon,
}

impl<'a> Matcher<'a> {
    pub fn new(
        store: &'a EmbeddingStore,
        cfg: MatchConfig,
        lexicon: StopwordLexicon,
    ) -> Result<Self, MatchError> {
        cfg.validate()?;
        Ok(Self {
            store,
            cfg,
            lexicon,
        })
    }

    pub fn config(&self) -> &MatchConfig {
        &self.cfg
    }

    pub fn prepare(&self, doc: &DocumentRecord) -> Result<PreparedDoc, MatchError> {
        prepare(doc, self.store, &self.cfg, &self.lexicon)
    }

    pub fn swm_score(&self, a: &DocumentRecord, b: &DocumentRecord) -> Result<f64, MatchError> {
        Ok(swm_prepared(&self.prepare(a)?, &self.prepare(b)?))
    }

    pub fn mods_score(
        &self,
        a: &DocumentRecord,
        b: &DocumentRecord,
    ) -> Result<PairScore, MatchError> {
        Ok(score_prepared(
            &self.prepare(a)?,
            &self.prepare(b)?,
            &self.cfg,
        ))
    }

    /// Scores `query` against every other corpus document. MODS sorts by
    /// descending `mods_norm`, SWM by ascending distance; ties by doc_id.
    /// Runs on the current rayon pool; the order does not depend on it.
    pub fn rank_corpus(
        &self,
        query: &DocumentRecord,
        corpus: &CorpusManifest,
        metric: Metric,
    ) -> Result<Vec<PairScore>, MatchError> {
        let q = self.prepare(query)?;
        let targets: Vec<&DocumentRecord> = corpus
            .documents()
            .iter()
            .filter(|d| d.doc_id != query.doc_id)
            .collect();
        let mut scores = targets
            .par_iter()
            .map(|d| Ok(score_prepared(&q, &self.prepare(d)?, &self.cfg)))
            .collect::<Result<Vec<_>, MatchError>>()?;
        sort_ranked(&mut scores, metric);
        Ok(scores)
    }
}

pub fn sort_ranked(scores: &mut [PairScore], metric: Metric) {
    scores.sort_by(|a, b| {
        let ord = match metric {
            Metric::Mods => b.mods_norm.total_cmp(&a.mods_norm),
            Metric::Swm => a.swm.total_cmp(&b.swm),
        };
        ord.then_with(|| a.target_doc.cmp(&b.target_doc))
    });
}

/// Serializable form of one scored pair, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub query_doc: String,
    pub target_doc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub swm: f64,
    pub mods_raw: f64,
    pub mods_norm: f64,
    #[serde(default)]
    pub region_matches: Vec<RegionMatchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMatchReport {
    pub source_region: usize,
    pub source_lines: [u32; 2],
    pub target_region: Option<usize>,
    pub target_lines: Option<[u32; 2]>,
    pub score: f64,
    /// `(source word_id, target word_id, cosine distance)`
    pub pairs: Vec<(String, String, f64)>,
}

/// Builds the report for a scored pair, resolving word ids and line spans.
pub fn report(
    score: &PairScore,
    a: &PreparedDoc,
    b: &PreparedDoc,
    cfg: &MatchConfig,
) -> ScoreReport {
    let sr = tile_regions(a, cfg);
    let tr = tile_regions(b, cfg);
    let region_matches = score
        .region_matches
        .iter()
        .map(|m| {
            let s = &sr[m.source_region];
            RegionMatchReport {
                source_region: m.source_region,
                source_lines: [s.first_line, s.last_line],
                target_region: m.target_region,
                target_lines: m.target_region.map(|t| [tr[t].first_line, tr[t].last_line]),
                score: m.score,
                pairs: m
                    .pairs
                    .iter()
                    .map(|p| {
                        (
                            a.word_ids[p.source].clone(),
                            b.word_ids[p.target].clone(),
                            p.distance,
                        )
                    })
                    .collect(),
            }
        })
        .collect();
    ScoreReport {
        query_doc: score.query_doc.clone(),
        target_doc: score.target_doc.clone(),
        rank: None,
        swm: score.swm,
        mods_raw: score.mods_raw,
        mods_norm: score.mods_norm,
        region_matches,
    }
}

/// Distinct lines of a prepared document.
pub fn line_set(doc: &PreparedDoc) -> BTreeSet<u32> {
    doc.lines.iter().copied().collect()
}
