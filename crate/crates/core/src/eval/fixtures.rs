//! Seeded generator for a small plagiarism-detection corpus.
//!
//! Each source paragraph spawns derived documents at four plagiarism levels:
//! near copies (same tokens, different line breaks), light revisions (a small
//! share of content words swapped for synonyms), heavy revisions (sentences
//! shuffled and a larger share swapped) and unrelated text drawn from the
//! source's topic vocabulary. Word vectors come from [`synth_embed`] with one
//! writer seed per document.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, TruthRecord};
use crate::descriptor::{synth_embed, StopwordLexicon};
use crate::doc_model::{
    BBox, CorpusManifest, CorpusMeta, DocumentRecord, EmbeddingRecord, EmbeddingStore, WordBox,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degree {
    NearCopy,
    Light,
    Heavy,
    None,
}

impl Degree {
    pub const ALL: [Degree; 4] = [Degree::NearCopy, Degree::Light, Degree::Heavy, Degree::None];

    pub fn grade(self) -> u32 {
        match self {
            Degree::NearCopy => 3,
            Degree::Light => 2,
            Degree::Heavy => 1,
            Degree::None => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Degree::NearCopy => "near_copy",
            Degree::Light => "light",
            Degree::Heavy => "heavy",
            Degree::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceText {
    pub name: String,
    pub text: String,
    /// Content words used to write unrelated documents on the same topic.
    pub topic_words: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegreeCounts {
    pub near_copy: usize,
    pub light: usize,
    pub heavy: usize,
    pub none: usize,
}

impl Default for DegreeCounts {
    fn default() -> Self {
        Self {
            near_copy: 4,
            light: 4,
            heavy: 4,
            none: 7,
        }
    }
}

impl DegreeCounts {
    pub fn get(&self, d: Degree) -> usize {
        match d {
            Degree::NearCopy => self.near_copy,
            Degree::Light => self.light,
            Degree::Heavy => self.heavy,
            Degree::None => self.none,
        }
    }

    pub fn total(&self) -> usize {
        Degree::ALL.iter().map(|&d| self.get(d)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureSpec {
    pub name: String,
    pub seed: u64,
    pub sources: Vec<SourceText>,
    /// Derived documents per source.
    pub derived: DegreeCounts,
    pub light_replace: f64,
    pub heavy_replace: f64,
    pub noise: f64,
    pub dim: usize,
    pub words_per_line: u32,
    /// Each derived document draws its words per line uniformly from
    /// `words_per_line ± reflow_jitter`.
    pub reflow_jitter: u32,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            name: "docsim-proxy".into(),
            seed: 7,
            sources: builtin_sources(),
            derived: DegreeCounts::default(),
            light_replace: 0.10,
            heavy_replace: 0.25,
            noise: 0.15,
            dim: 128,
            words_per_line: 12,
            reflow_jitter: 1,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.sources.is_empty() {
            return bad("at least one source text is required".into());
        }
        for s in &self.sources {
            if tokenize(&s.text).is_empty() {
                return bad(format!("source `{}` has no words", s.name));
            }
            if self.derived.none > 0 && s.topic_words.is_empty() {
                return bad(format!("source `{}` has no topic words", s.name));
            }
        }
        for (name, v) in [
            ("light_replace", self.light_replace),
            ("heavy_replace", self.heavy_replace),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be finite and >= 0".into());
        }
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.words_per_line == 0 || self.reflow_jitter >= self.words_per_line {
            return bad("words_per_line must exceed reflow_jitter".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Fixtures {
    pub manifest: CorpusManifest,
    pub store: EmbeddingStore,
    pub truth: Vec<TruthRecord>,
}

/// Lowercase word tokens grouped by sentence.
pub fn sentences(text: &str) -> Vec<Vec<String>> {
    text.split(['.', '!', '?'])
        .map(tokenize)
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

fn replace_share(
    tokens: &mut [String],
    share: f64,
    lexicon: &StopwordLexicon,
    rng: &mut ChaCha8Rng,
) {
    let synonyms = synonym_table();
    let mut content: Vec<usize> = (0..tokens.len())
        .filter(|&i| !lexicon.contains(&tokens[i]))
        .collect();
    content.shuffle(rng);
    let n = ((share * tokens.len() as f64).round() as usize).min(content.len());
    for &i in &content[..n] {
        let original = tokens[i].clone();
        let replacement = match synonyms.get(original.as_str()) {
            Some(s) => s.to_string(),
            None => loop {
                let w = *FILLER.choose(rng).expect("filler is non-empty");
                if w != original {
                    break w.to_string();
                }
            },
        };
        tokens[i] = replacement;
    }
}

fn unrelated_text(source_len: usize, topic: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::with_capacity(source_len);
    while out.len() < source_len {
        let r: f64 = rng.random();
        let w = if r < 0.4 {
            FUNCTION_WORDS.choose(rng).unwrap().to_string()
        } else if r < 0.75 {
            topic.choose(rng).unwrap().clone()
        } else {
            FILLER.choose(rng).unwrap().to_string()
        };
        out.push(w);
    }
    out
}

fn layout(doc_id: &str, tokens: &[String], words_per_line: u32) -> Vec<WordBox> {
    let mut x = 0u32;
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let line = i as u32 / words_per_line;
            if (i as u32).is_multiple_of(words_per_line) {
                x = 0;
            }
            let w = 12 * t.len() as u32 + 8;
            let b = WordBox::new(
                format!("{doc_id}/w{i:03}"),
                BBox::new(x, line * 60, w, 32),
                line,
            )
            .with_label(t);
            x += w + 20;
            b
        })
        .collect()
}

/// Generates the corpus, its embeddings and the graded truth pairs.
pub fn gen_fixtures(spec: &FixtureSpec) -> Result<Fixtures, EvalError> {
    spec.validate()?;
    let lexicon = StopwordLexicon::english();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs = Vec::new();
    let mut store = EmbeddingStore::with_dim(spec.dim);
    let mut truth = Vec::new();

    let mut emit =
        |doc_id: String, tokens: &[String], wpl: u32, writer: u64| -> Result<(), EvalError> {
            let words = layout(&doc_id, tokens, wpl);
            for w in &words {
                let label = w.label.as_deref().unwrap_or_default();
                let v = synth_embed(label, writer, spec.noise, spec.dim);
                store.push(EmbeddingRecord::new(w.word_id.clone(), v))?;
            }
            docs.push(DocumentRecord::new(doc_id, None, words)?);
            Ok(())
        };

    let mut groups: Vec<(String, Vec<(String, Degree)>)> = Vec::new();
    for (si, source) in spec.sources.iter().enumerate() {
        let sents = sentences(&source.text);
        let flat: Vec<String> = sents.concat();
        let src_id = format!("src{si}");
        emit(src_id.clone(), &flat, spec.words_per_line, rng.next_u64())?;
        let mut derived = Vec::new();
        for degree in Degree::ALL {
            for j in 0..spec.derived.get(degree) {
                let tokens = match degree {
                    Degree::NearCopy => flat.clone(),
                    Degree::Light => {
                        let mut t = flat.clone();
                        replace_share(&mut t, spec.light_replace, &lexicon, &mut rng);
                        t
                    }
                    Degree::Heavy => {
                        let mut s = sents.clone();
                        s.shuffle(&mut rng);
                        let mut t = s.concat();
                        replace_share(&mut t, spec.heavy_replace, &lexicon, &mut rng);
                        t
                    }
                    Degree::None => unrelated_text(flat.len(), &source.topic_words, &mut rng),
                };
                let jitter = spec.reflow_jitter as i64;
                let wpl = (spec.words_per_line as i64 + rng.random_range(-jitter..=jitter)) as u32;
                let id = format!("{src_id}-{}-{j}", degree.name());
                emit(id.clone(), &tokens, wpl, rng.next_u64())?;
                derived.push((id, degree));
            }
        }
        groups.push((src_id, derived));
    }

    let all_ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    for (src_id, derived) in &groups {
        let grades: BTreeMap<&str, u32> = derived
            .iter()
            .map(|(id, d)| (id.as_str(), d.grade()))
            .collect();
        for target in all_ids.iter().filter(|t| *t != src_id) {
            truth.push(TruthRecord {
                query_doc: src_id.clone(),
                target_doc: target.clone(),
                grade: grades.get(target.as_str()).copied().unwrap_or(0),
            });
        }
    }

    let mut params = BTreeMap::new();
    params.insert("seed".into(), spec.seed.into());
    params.insert("noise".into(), spec.noise.into());
    params.insert("light_replace".into(), spec.light_replace.into());
    params.insert("heavy_replace".into(), spec.heavy_replace.into());
    params.insert("words_per_line".into(), spec.words_per_line.into());
    params.insert("reflow_jitter".into(), spec.reflow_jitter.into());
    let meta = CorpusMeta {
        name: spec.name.clone(),
        embedding_dim: Some(spec.dim as u32),
        params,
    };
    Ok(Fixtures {
        manifest: CorpusManifest::new(meta, docs)?,
        store,
        truth,
    })
}

/// Moves the last word of every line but the final one to the start of the
/// next line. Content and reading order are unchanged.
pub fn reflow_shift(doc: &DocumentRecord) -> Result<DocumentRecord, EvalError> {
    let mut words: Vec<WordBox> = doc.words().to_vec();
    let last_line = words.iter().map(|w| w.line_index).max().unwrap_or(0);
    let mut moved = vec![false; words.len()];
    for line in 0..last_line {
        if let Some(i) = (0..words.len())
            .filter(|&i| words[i].line_index == line && !moved[i])
            .max_by_key(|&i| words[i].bbox.x)
        {
            words[i].line_index = line + 1;
            // place it left of the next line's first word
            words[i].bbox.x = 0;
            moved[i] = true;
        }
    }
    for line in 1..=last_line {
        let shift = words
            .iter()
            .enumerate()
            .find(|(i, w)| moved[*i] && w.line_index == line)
            .map(|(_, w)| w.bbox.w + 20);
        if let Some(s) = shift {
            for (i, w) in words.iter_mut().enumerate() {
                if w.line_index == line && !moved[i] {
                    w.bbox.x += s;
                }
            }
        }
        for w in words.iter_mut().filter(|w| w.line_index == line) {
            w.bbox.y = line * 60;
        }
    }
    Ok(DocumentRecord::new(
        doc.doc_id.clone(),
        doc.page_image.clone(),
        words,
    )?)
}

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "a", "to", "in", "is", "that", "for", "it", "as", "with", "by", "on",
    "this", "are", "be", "from", "an", "or", "which", "when", "each", "can",
];

const FILLER: &[&str] = &[
    "system",
    "result",
    "example",
    "process",
    "approach",
    "value",
    "number",
    "study",
    "question",
    "practice",
    "method",
    "general",
    "important",
    "different",
    "common",
    "simple",
    "large",
    "small",
    "often",
    "usually",
    "problem",
    "idea",
    "model",
    "case",
    "point",
    "level",
    "form",
    "part",
    "view",
    "step",
    "rule",
    "effect",
    "change",
    "effort",
    "quality",
    "analysis",
    "theory",
    "basic",
    "useful",
    "typical",
];

fn synonym_table() -> BTreeMap<&'static str, &'static str> {
    [
        ("define", "specify"),
        ("new", "fresh"),
        ("extending", "enlarging"),
        ("existing", "current"),
        ("receives", "obtains"),
        ("parent", "ancestor"),
        ("override", "replace"),
        ("behavior", "conduct"),
        ("change", "modify"),
        ("mechanism", "device"),
        ("encourages", "promotes"),
        ("reuse", "recycling"),
        ("common", "shared"),
        ("logic", "reasoning"),
        ("single", "sole"),
        ("deep", "profound"),
        ("fragile", "brittle"),
        ("silently", "quietly"),
        ("alters", "modifies"),
        ("child", "descendant"),
        ("designers", "architects"),
        ("prefer", "favor"),
        ("holds", "keeps"),
        ("references", "pointers"),
        ("helper", "assistant"),
        ("offer", "provide"),
        ("path", "route"),
        ("describe", "depict"),
        ("contract", "agreement"),
        ("supplying", "providing"),
        ("structured", "organized"),
        ("shallow", "flat"),
        ("documents", "records"),
        ("tests", "checks"),
        ("expectations", "assumptions"),
        ("estimates", "approximates"),
        ("importance", "significance"),
        ("structure", "shape"),
        ("links", "connections"),
        ("point", "refer"),
        ("imagines", "pictures"),
        ("random", "arbitrary"),
        ("follows", "tracks"),
        ("outgoing", "departing"),
        ("occasionally", "sometimes"),
        ("jumps", "leaps"),
        ("earns", "gains"),
        ("high", "large"),
        ("many", "numerous"),
        ("important", "significant"),
        ("scores", "ratings"),
        ("form", "constitute"),
        ("computed", "calculated"),
        ("repeated", "iterated"),
        ("controls", "governs"),
        ("guarantees", "ensures"),
        ("convergence", "stability"),
        ("contains", "includes"),
        ("combine", "merge"),
        ("order", "sort"),
        ("results", "outcomes"),
        ("try", "attempt"),
        ("inflate", "boost"),
        ("artificial", "synthetic"),
        ("practical", "real"),
        ("add", "include"),
        ("detect", "spot"),
        ("suspicious", "dubious"),
        ("patterns", "motifs"),
        ("represents", "encodes"),
        ("every", "each"),
        ("space", "domain"),
        ("correspond", "relate"),
        ("records", "stores"),
        ("weight", "factor"),
        ("grows", "increases"),
        ("frequency", "rate"),
        ("shrinks", "decreases"),
        ("appears", "occurs"),
        ("queries", "requests"),
        ("encoded", "represented"),
        ("retrieval", "search"),
        ("reduces", "shrinks"),
        ("measuring", "gauging"),
        ("angle", "inclination"),
        ("ignores", "neglects"),
        ("length", "size"),
        ("rewards", "favors"),
        ("shared", "joint"),
        ("rare", "uncommon"),
        ("simple", "easy"),
        ("implement", "build"),
        ("scales", "grows"),
        ("large", "big"),
        ("collections", "corpora"),
        ("weakness", "flaw"),
        ("assumption", "premise"),
        ("independent", "unrelated"),
        ("techniques", "methods"),
        ("capture", "catch"),
        ("latent", "hidden"),
        ("topics", "themes"),
        ("relate", "connect"),
        ("different", "distinct"),
        ("vocabulary", "lexicon"),
        ("theorem", "result"),
        ("revise", "update"),
        ("belief", "conviction"),
        ("observing", "seeing"),
        ("evidence", "data"),
        ("hypothesis", "conjecture"),
        ("proportional", "relative"),
        ("multiplied", "scaled"),
        ("likelihood", "plausibility"),
        ("observed", "measured"),
        ("medical", "clinical"),
        ("illustrates", "shows"),
        ("clearly", "plainly"),
        ("accurate", "precise"),
        ("produces", "yields"),
        ("false", "wrong"),
        ("alarms", "warnings"),
        ("disease", "illness"),
        ("healthy", "well"),
        ("patients", "people"),
        ("vastly", "greatly"),
        ("outnumber", "exceed"),
        ("sick", "ill"),
        ("ignoring", "neglecting"),
        ("situations", "settings"),
        ("reasoning", "thinking"),
        ("error", "mistake"),
        ("naive", "simple"),
        ("classifiers", "labelers"),
        ("apply", "use"),
        ("assuming", "supposing"),
        ("words", "terms"),
        ("occur", "happen"),
        ("category", "class"),
        ("despite", "notwithstanding"),
        ("crude", "rough"),
        ("filter", "screen"),
        ("surprisingly", "unexpectedly"),
        ("modern", "current"),
        ("builds", "constructs"),
        ("entire", "whole"),
        ("principle", "idea"),
        ("updating", "refreshing"),
        ("arrives", "comes"),
        ("solves", "resolves"),
        ("complex", "complicated"),
        ("problem", "task"),
        ("combining", "joining"),
        ("solutions", "answers"),
        ("overlapping", "intersecting"),
        ("instead", "rather"),
        ("recomputing", "recalculating"),
        ("quantity", "amount"),
        ("algorithm", "procedure"),
        ("stores", "saves"),
        ("partial", "incomplete"),
        ("answer", "solution"),
        ("table", "array"),
        ("reuses", "recycles"),
        ("approach", "strategy"),
        ("applies", "works"),
        ("optimal", "best"),
        ("smaller", "lesser"),
        ("instances", "cases"),
        ("classic", "standard"),
        ("examples", "cases"),
        ("shortest", "briefest"),
        ("weighted", "scored"),
        ("strings", "sequences"),
        ("designer", "planner"),
        ("first", "initially"),
        ("writes", "composes"),
        ("simpler", "easier"),
        ("finally", "lastly"),
        ("chooses", "picks"),
        ("fills", "populates"),
        ("achieves", "reaches"),
        ("effect", "outcome"),
        ("caching", "storing"),
        ("recursive", "nested"),
        ("calls", "invocations"),
        ("careful", "thorough"),
        ("analysis", "study"),
        ("often", "frequently"),
        ("memory", "storage"),
        ("keeping", "retaining"),
        ("recent", "latest"),
        ("rows", "lines"),
    ]
    .into_iter()
    .collect()
}

fn topic(words: &str) -> Vec<String> {
    words.split_whitespace().map(String::from).collect()
}

/// Five short expository paragraphs on unrelated computing topics.
pub fn builtin_sources() -> Vec<SourceText> {
    vec![
        SourceText {
            name: "inheritance".into(),
            text: "Inheritance lets a programmer define a new class by extending an existing one. \
The derived class receives the fields and methods of its parent and may override any behavior it \
needs to change. This mechanism encourages reuse because common logic lives in a single base \
class. Deep hierarchies, however, become fragile when a change in the parent silently alters every \
child. Many designers therefore prefer composition, where an object holds references to helper \
objects instead of inheriting from them. Interfaces offer another path, since they describe a \
contract without supplying an implementation. A well structured program keeps hierarchies \
shallow, documents which methods may be overridden, and tests each subclass against the \
expectations of its parent."
                .into(),
            topic_words: topic(
                "class object method field parent child subclass interface override reuse \
hierarchy composition program code type module design behavior instance constructor library \
software abstract polymorphism encapsulation variable function compiler pattern developer",
            ),
        },
        SourceText {
            name: "pagerank".into(),
            text: "PageRank estimates the importance of a web page from the structure of the links \
that point to it. The method imagines a random surfer who follows outgoing links and occasionally \
jumps to an arbitrary page. A page earns a high score when many important pages link to it. The \
scores form the stationary distribution of this random walk and can be computed by repeated \
multiplication with the link matrix. A damping factor controls how often the surfer jumps, which \
guarantees convergence even when the graph contains dead ends. Search engines combine these scores \
with textual relevance to order results. Spammers try to inflate rankings with artificial link \
farms, so practical systems add filters that detect suspicious patterns."
                .into(),
            topic_words: topic(
                "page link web graph node edge score rank search engine surfer walk matrix \
eigenvector damping crawler index query relevance spam site hyperlink authority hub iteration \
convergence network browser domain traffic",
            ),
        },
        SourceText {
            name: "vector-space".into(),
            text: "The vector space model represents every document as a point in a space whose axes \
correspond to terms. Each coordinate records a weight that grows with the frequency of the term in \
the document and shrinks when the term appears in many documents. Queries are encoded the same \
way, so retrieval reduces to measuring the angle between vectors. Cosine similarity ignores \
document length and rewards shared rare terms. The model is simple to implement and scales to \
large collections with inverted indexes. Its weakness is the assumption that terms are \
independent, which ignores synonyms and word order. Later techniques reduce the dimension of the \
space to capture latent topics and relate documents that use different vocabulary."
                .into(),
            topic_words: topic(
                "vector document term weight query cosine similarity frequency retrieval index \
corpus collection axis dimension matrix token vocabulary ranking relevance inverted idf tf \
feature sparse dense projection semantic latent keyword",
            ),
        },
        SourceText {
            name: "bayes".into(),
            text: "Bayes theorem describes how to revise a belief after observing new evidence. The \
posterior probability of a hypothesis is proportional to its prior probability multiplied by the \
likelihood of the observed data. A medical test illustrates the idea clearly. Even an accurate test \
produces many false alarms when the disease is rare, because healthy patients vastly outnumber sick \
ones. Ignoring the prior in such situations is a common reasoning error. Naive classifiers apply \
the theorem to text by assuming that words occur independently given the category. Despite this \
crude assumption they filter spam surprisingly well. Modern statistics builds entire models on the \
same principle, updating distributions over parameters as each observation arrives."
                .into(),
            topic_words: topic(
                "probability prior posterior likelihood evidence hypothesis belief test disease \
patient distribution parameter observation sample statistic inference random variable event \
conditional independence classifier estimate uncertainty chance data bayes theorem outcome \
frequency",
            ),
        },
        SourceText {
            name: "dynamic-programming".into(),
            text: "Dynamic programming solves a complex problem by combining solutions of \
overlapping subproblems. Instead of recomputing the same quantity many times, the algorithm stores \
each partial answer in a table and reuses it. The approach applies when an optimal solution \
contains optimal solutions to smaller instances. Classic examples include the shortest path in a \
weighted graph, the edit distance between two strings, and the knapsack problem. A designer first \
defines the state, then writes a recurrence that relates each state to simpler ones, and finally \
chooses an order that fills the table. Memoization achieves the same effect from the top down by \
caching results of recursive calls. Careful analysis often reduces memory by keeping only the most \
recent rows."
                .into(),
            topic_words: topic(
                "algorithm table state recurrence subproblem optimal solution memoization cache \
recursion path distance sequence knapsack graph cost array loop complexity time memory index \
value string edit matrix bottom top greedy schedule",
            ),
        },
    ]
}
