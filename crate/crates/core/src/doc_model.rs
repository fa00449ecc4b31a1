//! Core data types: word boxes, document records, corpus manifests and the
//! `MODSEMB1` embedding store.
//!
//! Manifests are line-delimited JSON. An optional first line carries corpus
//! metadata (`{"corpus": {...}}`); every other line is one document. Embedding
//! stores are a little-endian binary format described on [`write_embeddings`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Magic bytes opening every embedding store file.
pub const EMBEDDING_MAGIC: &[u8; 8] = b"MODSEMB1";
/// Size of the fixed embedding store header in bytes.
pub const EMBEDDING_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document `{doc_id}`: word `{word_id}`: {message}")]
    InvalidWord {
        doc_id: String,
        word_id: String,
        message: String,
    },
    #[error("document `{doc_id}`: {message}")]
    InvalidDocument { doc_id: String, message: String },
    #[error("duplicate doc_id `{0}`")]
    DuplicateDoc(String),
    #[error("bad magic: expected MODSEMB1")]
    BadMagic,
    #[error("truncated embedding store: {0}")]
    Truncated(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("embedding word_id `{word_id}`: {message}")]
    InvalidEmbedding { word_id: String, message: String },
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Pixel rectangle in image coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Exclusive right edge.
    pub const fn right(&self) -> u32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub const fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub const fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox {
            x,
            y,
            w: self.right().max(other.right()) - x,
            h: self.bottom().max(other.bottom()) - y,
        }
    }

    /// Area intersection-over-union.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = self
            .right()
            .min(other.right())
            .saturating_sub(self.x.max(other.x)) as u64;
        let iy = self
            .bottom()
            .min(other.bottom())
            .saturating_sub(self.y.max(other.y)) as u64;
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Intersection-over-union of the two y-intervals.
    pub fn y_iou(&self, other: &BBox) -> f64 {
        let inter = self
            .bottom()
            .min(other.bottom())
            .saturating_sub(self.y.max(other.y));
        let union = self.bottom().max(other.bottom()) - self.y.min(other.y);
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// A segmented word hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct WordBox {
    pub word_id: String,
    pub bbox: BBox,
    pub line_index: u32,
    /// Transcription, stored lowercase.
    pub label: Option<String>,
    /// Probability that this word image is a stopword.
    pub stopword_prob: Option<f32>,
}

impl WordBox {
    pub fn new(word_id: impl Into<String>, bbox: BBox, line_index: u32) -> Self {
        Self {
            word_id: word_id.into(),
            bbox,
            line_index,
            label: None,
            stopword_prob: None,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_lowercase());
        self
    }

    pub fn with_stopword_prob(mut self, p: f32) -> Self {
        self.stopword_prob = Some(p);
        self
    }

    fn validate(&self, doc_id: &str) -> Result<()> {
        let bad = |message: &str| ModelError::InvalidWord {
            doc_id: doc_id.to_string(),
            word_id: self.word_id.clone(),
            message: message.to_string(),
        };
        if self.word_id.is_empty() {
            return Err(bad("empty word_id"));
        }
        if self.bbox.w == 0 || self.bbox.h == 0 {
            return Err(bad("bounding box must have positive width and height"));
        }
        if let Some(p) = self.stopword_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad("stopword_prob outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// One document image: its word boxes in reading order.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub page_image: Option<String>,
    words: Vec<WordBox>,
}

impl DocumentRecord {
    /// Builds a validated record. Words are stably sorted into reading order
    /// (line index, then left edge) and labels are lowercase-folded.
    pub fn new(
        doc_id: impl Into<String>,
        page_image: Option<String>,
        mut words: Vec<WordBox>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        if doc_id.is_empty() {
            return Err(ModelError::InvalidDocument {
                doc_id,
                message: "empty doc_id".into(),
            });
        }
        let mut seen = HashSet::with_capacity(words.len());
        for w in &mut words {
            w.validate(&doc_id)?;
            if !seen.insert(w.word_id.clone()) {
                return Err(ModelError::InvalidWord {
                    doc_id,
                    word_id: w.word_id.clone(),
                    message: "duplicate word_id".into(),
                });
            }
            if let Some(l) = &mut w.label {
                if l.chars().any(char::is_uppercase) {
                    *l = l.to_lowercase();
                }
            }
        }
        words.sort_by_key(|w| (w.line_index, w.bbox.x));
        Ok(Self {
            doc_id,
            page_image,
            words,
        })
    }

    pub fn words(&self) -> &[WordBox] {
        &self.words
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, word_id: &str) -> Option<&WordBox> {
        self.words.iter().find(|w| w.word_id == word_id)
    }
}

/// Corpus-level metadata carried on the manifest header line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusMeta {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub embedding_dim: Option<u32>,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub meta: CorpusMeta,
    documents: Vec<DocumentRecord>,
}

impl CorpusManifest {
    pub fn new(meta: CorpusMeta, documents: Vec<DocumentRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(ModelError::DuplicateDoc(d.doc_id.clone()));
            }
        }
        Ok(Self { meta, documents })
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.documents.len());
        for d in &self.documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(ModelError::DuplicateDoc(d.doc_id.clone()));
            }
            for w in &d.words {
                w.validate(&d.doc_id)?;
            }
        }
        Ok(())
    }
}

// Wire representation of a manifest line.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WordLine {
    word_id: String,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stopword_prob: Option<f32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocLine {
    doc_id: String,
    page_image: Option<String>,
    words: Vec<WordLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    corpus: CorpusMeta,
}

impl From<&WordBox> for WordLine {
    fn from(w: &WordBox) -> Self {
        WordLine {
            word_id: w.word_id.clone(),
            x: w.bbox.x,
            y: w.bbox.y,
            w: w.bbox.w,
            h: w.bbox.h,
            line: w.line_index,
            label: w.label.clone(),
            stopword_prob: w.stopword_prob,
        }
    }
}

impl From<WordLine> for WordBox {
    fn from(l: WordLine) -> Self {
        WordBox {
            word_id: l.word_id,
            bbox: BBox::new(l.x, l.y, l.w, l.h),
            line_index: l.line,
            label: l.label.map(|s| s.to_lowercase()),
            stopword_prob: l.stopword_prob,
        }
    }
}

/// Serializes a manifest to its line-delimited text form.
pub fn encode_manifest(m: &CorpusManifest) -> Result<String> {
    m.validate()?;
    let mut out = String::new();
    let header = HeaderLine {
        corpus: m.meta.clone(),
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for d in &m.documents {
        let line = DocLine {
            doc_id: d.doc_id.clone(),
            page_image: d.page_image.clone(),
            words: d.words.iter().map(WordLine::from).collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("document serializes"));
        out.push('\n');
    }
    Ok(out)
}

/// Parses and validates manifest text.
pub fn decode_manifest(text: &str) -> Result<CorpusManifest> {
    let mut meta = CorpusMeta::default();
    let mut docs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if idx == 0 && raw.starts_with("{\"corpus\"") {
            let h: HeaderLine = serde_json::from_str(raw).map_err(|e| ModelError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            meta = h.corpus;
            continue;
        }
        let d: DocLine = serde_json::from_str(raw).map_err(|e| ModelError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let words = d.words.into_iter().map(WordBox::from).collect();
        docs.push(DocumentRecord::new(d.doc_id, d.page_image, words)?);
    }
    CorpusManifest::new(meta, docs)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.push_str(&line);
        text.push('\n');
    }
    decode_manifest(&text)
}

/// Writes a manifest; invalid manifests are rejected before the file is touched.
pub fn write_manifest(m: &CorpusManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = encode_manifest(m)?;
    fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A stored descriptor for one word box.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub word_id: String,
    pub vector: Vec<f32>,
    pub stopword_prob: Option<f32>,
}

impl EmbeddingRecord {
    pub fn new(word_id: impl Into<String>, vector: Vec<f32>) -> Self {
        Self {
            word_id: word_id.into(),
            vector,
            stopword_prob: None,
        }
    }
}

/// Uniform-dimension collection of embedding records keyed by word_id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingStore {
    dim: usize,
    records: Vec<EmbeddingRecord>,
    by_id: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    /// Builds a store from records; the dimension is taken from the first record.
    pub fn from_records(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let dim = records.first().map_or(0, |r| r.vector.len());
        let mut store = Self::with_dim(dim);
        for r in records {
            store.push(r)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, record: EmbeddingRecord) -> Result<()> {
        if record.vector.len() != self.dim {
            return Err(ModelError::DimensionMismatch(format!(
                "word `{}` has dimension {}, store has {}",
                record.word_id,
                record.vector.len(),
                self.dim
            )));
        }
        if record.word_id.len() > u16::MAX as usize {
            return Err(ModelError::InvalidEmbedding {
                word_id: record.word_id,
                message: "word_id longer than 65535 bytes".into(),
            });
        }
        if self.by_id.contains_key(&record.word_id) {
            return Err(ModelError::InvalidEmbedding {
                word_id: record.word_id,
                message: "duplicate word_id".into(),
            });
        }
        self.by_id
            .insert(record.word_id.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn get(&self, word_id: &str) -> Option<&EmbeddingRecord> {
        self.by_id.get(word_id).map(|&i| &self.records[i])
    }
}

/// Encodes records in the `MODSEMB1` layout:
///
/// ```text
/// 0..8    b"MODSEMB1"
/// 8..12   record count, u32 LE
/// 12..16  dimension d, u32 LE
/// then per record:
///         word_id length (u16 LE), word_id UTF-8 bytes,
///         stopword_prob (f32 LE, NaN = absent), d x f32 LE
/// ```
///
/// Mixed dimensions fail before any byte is produced.
pub fn encode_embeddings(dim: usize, records: &[EmbeddingRecord]) -> Result<Vec<u8>> {
    for r in records {
        if r.vector.len() != dim {
            return Err(ModelError::DimensionMismatch(format!(
                "word `{}` has dimension {}, expected {}",
                r.word_id,
                r.vector.len(),
                dim
            )));
        }
        if r.word_id.len() > u16::MAX as usize {
            return Err(ModelError::InvalidEmbedding {
                word_id: r.word_id.clone(),
                message: "word_id longer than 65535 bytes".into(),
            });
        }
    }
    let count = u32::try_from(records.len())
        .map_err(|_| ModelError::DimensionMismatch("too many records".into()))?;
    let dim32 = u32::try_from(dim)
        .map_err(|_| ModelError::DimensionMismatch("dimension exceeds u32".into()))?;
    let payload: usize = records
        .iter()
        .map(|r| record_size(r.word_id.len(), dim))
        .sum();
    let mut buf = Vec::with_capacity(EMBEDDING_HEADER_LEN + payload);
    buf.extend_from_slice(EMBEDDING_MAGIC);
    buf.extend_from_slice(&count.to_le_bytes());
    buf.extend_from_slice(&dim32.to_le_bytes());
    for r in records {
        buf.extend_from_slice(&(r.word_id.len() as u16).to_le_bytes());
        buf.extend_from_slice(r.word_id.as_bytes());
        buf.extend_from_slice(&r.stopword_prob.unwrap_or(f32::NAN).to_le_bytes());
        for v in &r.vector {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

/// Bytes taken by one record with a word_id of `id_len` bytes.
pub const fn record_size(id_len: usize, dim: usize) -> usize {
    2 + id_len + 4 + 4 * dim
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(ModelError::Truncated(format!(
                "need {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode_embeddings(buf: &[u8]) -> Result<EmbeddingStore> {
    if buf.len() < EMBEDDING_MAGIC.len() || &buf[..8] != EMBEDDING_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let mut cur = Cursor { buf, pos: 8 };
    let count = u32::from_le_bytes(cur.take(4, "record count")?.try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(cur.take(4, "dimension")?.try_into().unwrap()) as usize;
    let mut store = EmbeddingStore::with_dim(dim);
    for i in 0..count {
        let id_len = u16::from_le_bytes(cur.take(2, "word_id length")?.try_into().unwrap());
        let id_bytes = cur.take(id_len as usize, "word_id")?;
        let word_id = std::str::from_utf8(id_bytes)
            .map_err(|e| ModelError::InvalidEmbedding {
                word_id: format!("<record {i}>"),
                message: format!("word_id is not UTF-8: {e}"),
            })?
            .to_string();
        let prob = cur.f32("stopword_prob")?;
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(cur.f32("vector component")?);
        }
        let stopword_prob = if prob.is_nan() { None } else { Some(prob) };
        store.push(EmbeddingRecord {
            word_id,
            vector,
            stopword_prob,
        })?;
    }
    if cur.pos != buf.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} trailing bytes after {count} records of dimension {dim}",
            buf.len() - cur.pos
        )));
    }
    Ok(store)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_embeddings(&buf)
}

pub fn write_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_embeddings(store.dim, &store.records)?;
    let io = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)?;
    Ok(())
}

/// Checks that every embedding resolves to exactly one word box in the manifest.
pub fn check_embeddings(manifest: &CorpusManifest, store: &EmbeddingStore) -> Result<()> {
    let mut owners: HashMap<&str, usize> = HashMap::new();
    for d in manifest.documents() {
        for w in d.words() {
            *owners.entry(w.word_id.as_str()).or_default() += 1;
        }
    }
    for r in store.records() {
        match owners.get(r.word_id.as_str()) {
            Some(1) => {}
            Some(n) => {
                return Err(ModelError::InvalidEmbedding {
                    word_id: r.word_id.clone(),
                    message: format!("ambiguous: matches {n} word boxes"),
                })
            }
            None => {
                return Err(ModelError::InvalidEmbedding {
                    word_id: r.word_id.clone(),
                    message: "no such word in manifest".into(),
                })
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, words: Vec<WordBox>) -> DocumentRecord {
        DocumentRecord::new(id, None, words).unwrap()
    }

    #[test]
    fn empty_manifest_text_is_empty_corpus() {
        let m = decode_manifest("").unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn zero_width_box_names_word() {
        let text = r#"{"doc_id":"d","page_image":null,"words":[{"word_id":"w7","x":0,"y":0,"w":0,"h":3,"line":0}]}"#;
        let err = decode_manifest(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("w7"), "{msg}");
        assert!(matches!(err, ModelError::InvalidWord { .. }));
    }

    #[test]
    fn parse_error_carries_line_and_field() {
        let text = "{\"corpus\":{\"name\":\"x\"}}\n{\"doc_id\":\"d\",\"page_image\":null,\"words\":[{\"word_id\":\"a\",\"x\":0,\"y\":0,\"h\":3,\"line\":0}]}\n";
        let err = decode_manifest(text).unwrap_err();
        match err {
            ModelError::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("`w`"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_doc_rejected() {
        let a = doc("a", vec![]);
        assert!(matches!(
            CorpusManifest::new(CorpusMeta::default(), vec![a.clone(), a]),
            Err(ModelError::DuplicateDoc(_))
        ));
    }

    #[test]
    fn words_sorted_and_labels_folded() {
        let d = doc(
            "d",
            vec![
                WordBox::new("b", BBox::new(50, 0, 5, 5), 1),
                WordBox::new("a", BBox::new(90, 0, 5, 5), 0).with_label("The"),
                WordBox::new("c", BBox::new(10, 0, 5, 5), 1),
            ],
        );
        let ids: Vec<_> = d.words().iter().map(|w| w.word_id.as_str()).collect();
        assert_eq!(ids, ["a", "c", "b"]);
        assert_eq!(d.words()[0].label.as_deref(), Some("the"));
        assert_eq!(d.word_count(), 3);
    }

    #[test]
    fn stopword_prob_out_of_range() {
        let w = WordBox::new("a", BBox::new(0, 0, 1, 1), 0).with_stopword_prob(1.5);
        assert!(DocumentRecord::new("d", None, vec![w]).is_err());
    }

    #[test]
    fn handcrafted_embedding_bytes() {
        // MODSEMB1 | count=1 | d=2 | len=2 "w0" | NaN | 1.0 0.0
        let mut bytes = b"MODSEMB1".to_vec();
        bytes.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0]);
        bytes.extend_from_slice(&[2, 0, b'w', b'0']);
        bytes.extend_from_slice(&[0x00, 0x00, 0xC0, 0x7F]);
        bytes.extend_from_slice(&[0x00, 0x00, 0x80, 0x3F]);
        bytes.extend_from_slice(&[0x00, 0x00, 0x00, 0x00]);
        let store = decode_embeddings(&bytes).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.dim(), 2);
        let r = store.get("w0").unwrap();
        assert_eq!(r.vector, vec![1.0, 0.0]);
        assert_eq!(r.stopword_prob, None);
        assert_eq!(encode_embeddings(2, store.records()).unwrap(), bytes);
    }

    #[test]
    fn empty_store_is_header_only() {
        let bytes = encode_embeddings(8, &[]).unwrap();
        assert_eq!(bytes.len(), EMBEDDING_HEADER_LEN);
        let s = decode_embeddings(&bytes).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.dim(), 8);
    }

    #[test]
    fn file_length_formula() {
        let recs: Vec<_> = ["a", "bb", "ccc"]
            .iter()
            .map(|id| EmbeddingRecord::new(*id, vec![0.5; 4]))
            .collect();
        let bytes = encode_embeddings(4, &recs).unwrap();
        // 16 + (2+1+4+16) + (2+2+4+16) + (2+3+4+16)
        assert_eq!(bytes.len(), 16 + 23 + 24 + 25);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let recs = vec![
            EmbeddingRecord::new("a", vec![1.0, 2.0]),
            EmbeddingRecord::new("b", vec![3.0, 4.0]),
        ];
        let bytes = encode_embeddings(2, &recs).unwrap();
        let one = 16 + record_size(1, 2);
        assert!(matches!(
            decode_embeddings(&bytes[..one]),
            Err(ModelError::Truncated(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_embeddings(&bad), Err(ModelError::BadMagic)));
        let mut long = bytes;
        long.extend_from_slice(&[0; 4]);
        assert!(matches!(
            decode_embeddings(&long),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let recs = vec![
            EmbeddingRecord::new("a", vec![1.0, 2.0]),
            EmbeddingRecord::new("b", vec![3.0]),
        ];
        assert!(EmbeddingStore::from_records(recs.clone()).is_err());
        assert!(matches!(
            encode_embeddings(2, &recs),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn check_embeddings_resolution() {
        let d1 = doc("d1", vec![WordBox::new("x", BBox::new(0, 0, 1, 1), 0)]);
        let d2 = doc("d2", vec![WordBox::new("x", BBox::new(0, 0, 1, 1), 0)]);
        let d3 = doc("d3", vec![WordBox::new("y", BBox::new(0, 0, 1, 1), 0)]);
        let m = CorpusManifest::new(CorpusMeta::default(), vec![d1, d2, d3]).unwrap();
        let ok = EmbeddingStore::from_records(vec![EmbeddingRecord::new("y", vec![1.0])]).unwrap();
        assert!(check_embeddings(&m, &ok).is_ok());
        let amb = EmbeddingStore::from_records(vec![EmbeddingRecord::new("x", vec![1.0])]).unwrap();
        assert!(check_embeddings(&m, &amb).is_err());
        let missing =
            EmbeddingStore::from_records(vec![EmbeddingRecord::new("z", vec![1.0])]).unwrap();
        assert!(check_embeddings(&m, &missing).is_err());
    }
}
