//! `mods` command-line pipeline: segment pages, embed words, score and rank
//! documents, generate synthetic corpora and evaluate rankings.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 on data errors.
//! The resolved configuration is echoed to stderr as one JSON line; all data
//! output is deterministic for a given input and configuration.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mods_core::descriptor::{baseline_descriptor, synth_embed, StopwordLexicon};
use mods_core::doc_model::{
    check_embeddings, read_embeddings, read_manifest, write_embeddings, write_manifest,
    CorpusManifest, CorpusMeta, DocumentRecord, EmbeddingRecord, EmbeddingStore,
};
use mods_core::eval::{self, eval_docsim, eval_spotting, FixtureSpec, TruthRecord};
use mods_core::matcher::{self, Matcher, Metric, ScoreReport};
use mods_core::render::crop;
use mods_core::segmenter::segment_page;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub mod config;

pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "mods", version, about = "Document-image similarity scoring")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmbedMode {
    /// Gradient-histogram descriptor of the cropped word image
    Baseline,
    /// Label-seeded synthetic vector (needs word labels)
    Synth,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment page images into word hypotheses and write a manifest
    Segment {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute word embeddings for every word in a manifest
    Embed {
        manifest: PathBuf,
        #[arg(long, value_enum)]
        mode: EmbedMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one document pair; prints a score report line
    Score {
        manifest: PathBuf,
        embeddings: PathBuf,
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        pair: Vec<String>,
    },
    /// Rank the corpus against query documents; prints score report lines
    Rank {
        manifest: PathBuf,
        embeddings: PathBuf,
        /// Query document id (repeatable)
        #[arg(long, required = true)]
        query: Vec<String>,
        #[arg(long, default_value = "mods")]
        metric: Metric,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic graded corpus from a TOML fixture spec
    GenFixtures {
        spec: PathBuf,
        /// Directory for manifest.jsonl, embeddings.bin and truth.jsonl
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a score report against graded truth (nDCG and AUC)
    EvalDocsim {
        report: PathBuf,
        truth: PathBuf,
        /// nDCG cutoff [default: targets per query]
        #[arg(long)]
        p: Option<usize>,
        /// Print a plain-text table instead of JSON
        #[arg(long)]
        table: bool,
    },
    /// Query-by-example word spotting mAP over labeled words
    EvalSpot {
        manifest: PathBuf,
        embeddings: PathBuf,
        /// Count words sharing a stem as relevant
        #[arg(long)]
        inexact: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    let _ = writeln!(err, "config: {}", cfg.to_json());
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(data)?;
    let mut buf: Vec<u8> = Vec::new();
    pool.install(|| dispatch(&cli.command, &cfg, &mut buf))?;
    out.write_all(&buf).map_err(data)
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Segment { images, out: path } => segment(images, path, cfg),
        Command::Embed {
            manifest,
            mode,
            out: path,
        } => embed(manifest, *mode, path, cfg),
        Command::Score {
            manifest,
            embeddings,
            pair,
        } => score(manifest, embeddings, &pair[0], &pair[1], cfg, out),
        Command::Rank {
            manifest,
            embeddings,
            query,
            metric,
            out: path,
        } => rank(
            manifest,
            embeddings,
            query,
            *metric,
            cfg,
            path.as_deref(),
            out,
        ),
        Command::GenFixtures { spec, out_dir } => gen_fixtures(spec, out_dir, cfg),
        Command::EvalDocsim {
            report,
            truth,
            p,
            table,
        } => eval_docsim_cmd(report, truth, *p, *table, out),
        Command::EvalSpot {
            manifest,
            embeddings,
            inexact,
        } => {
            let (m, store) = load_pair(manifest, embeddings)?;
            let lexicon = StopwordLexicon::english();
            let r = eval_spotting(&m, &store, &lexicon, *inexact).map_err(data)?;
            writeln!(out, "{}", serde_json::to_string(&r).map_err(data)?).map_err(data)
        }
    }
}

fn segment(images: &[PathBuf], path: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let docs = images
        .par_iter()
        .map(|img_path| {
            let img = image::open(img_path)
                .map_err(|e| CliError::Data(format!("{}: {e}", img_path.display())))?
                .into_luma8();
            let doc_id = img_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| img_path.display().to_string());
            let seg = segment_page(&img, &cfg.segmenter);
            let abs = fs::canonicalize(img_path).map_err(data)?;
            DocumentRecord::new(
                doc_id.clone(),
                Some(abs.display().to_string()),
                seg.merged_words(&doc_id),
            )
            .map_err(data)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = CorpusManifest::new(CorpusMeta::default(), docs).map_err(data)?;
    write_manifest(&manifest, path).map_err(data)
}

/// Writer seed for a document: stable hash of the run seed and doc id.
fn writer_seed(seed: u64, doc_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

fn resolve_image(manifest: &Path, image: &str) -> PathBuf {
    let p = PathBuf::from(image);
    if p.is_absolute() {
        p
    } else {
        manifest.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn embed(
    manifest_path: &Path,
    mode: EmbedMode,
    path: &Path,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let manifest = read_manifest(manifest_path).map_err(data)?;
    let seed = cfg.seed.unwrap_or(0);
    let per_doc = manifest
        .documents()
        .par_iter()
        .map(|doc| -> Result<Vec<EmbeddingRecord>, CliError> {
            match mode {
                EmbedMode::Synth => {
                    let ws = writer_seed(seed, &doc.doc_id);
                    let dim = cfg.descriptor.dimension();
                    doc.words()
                        .iter()
                        .map(|w| {
                            let label = w.label.as_deref().ok_or_else(|| {
                                CliError::Data(format!(
                                    "word `{}` has no label; synth mode needs labels",
                                    w.word_id
                                ))
                            })?;
                            let mut r = EmbeddingRecord::new(
                                w.word_id.clone(),
                                synth_embed(label, ws, cfg.noise, dim),
                            );
                            r.stopword_prob = w.stopword_prob;
                            Ok(r)
                        })
                        .collect()
                }
                EmbedMode::Baseline => {
                    let image = doc.page_image.as_deref().ok_or_else(|| {
                        CliError::Data(format!("document `{}` has no page_image", doc.doc_id))
                    })?;
                    let image_path = resolve_image(manifest_path, image);
                    let page = image::open(&image_path)
                        .map_err(|e| CliError::Data(format!("{}: {e}", image_path.display())))?
                        .into_luma8();
                    Ok(doc
                        .words()
                        .iter()
                        .map(|w| {
                            let mut r = EmbeddingRecord::new(
                                w.word_id.clone(),
                                baseline_descriptor(&crop(&page, &w.bbox), &cfg.descriptor),
                            );
                            r.stopword_prob = w.stopword_prob;
                            r
                        })
                        .collect())
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut store = EmbeddingStore::with_dim(cfg.descriptor.dimension());
    for rec in per_doc.into_iter().flatten() {
        store.push(rec).map_err(data)?;
    }
    write_embeddings(&store, path).map_err(data)
}

fn load_pair(
    manifest: &Path,
    embeddings: &Path,
) -> Result<(CorpusManifest, EmbeddingStore), CliError> {
    let m = read_manifest(manifest).map_err(data)?;
    let e = read_embeddings(embeddings).map_err(data)?;
    check_embeddings(&m, &e).map_err(data)?;
    Ok((m, e))
}

fn find<'a>(m: &'a CorpusManifest, id: &str) -> Result<&'a DocumentRecord, CliError> {
    m.document(id)
        .ok_or_else(|| CliError::Data(format!("document `{id}` not found in manifest")))
}

fn write_report_line(out: &mut dyn Write, r: &ScoreReport) -> Result<(), CliError> {
    writeln!(out, "{}", serde_json::to_string(r).map_err(data)?).map_err(data)
}

fn score(
    manifest: &Path,
    embeddings: &Path,
    a: &str,
    b: &str,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (m, store) = load_pair(manifest, embeddings)?;
    let matcher = Matcher::new(&store, cfg.matcher, StopwordLexicon::english()).map_err(data)?;
    let pa = matcher.prepare(find(&m, a)?).map_err(data)?;
    let pb = matcher.prepare(find(&m, b)?).map_err(data)?;
    let s = matcher::score_prepared(&pa, &pb, &cfg.matcher);
    write_report_line(out, &matcher::report(&s, &pa, &pb, &cfg.matcher))
}

fn rank(
    manifest: &Path,
    embeddings: &Path,
    queries: &[String],
    metric: Metric,
    cfg: &RunConfig,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (m, store) = load_pair(manifest, embeddings)?;
    let matcher = Matcher::new(&store, cfg.matcher, StopwordLexicon::english()).map_err(data)?;
    let prepared = m
        .documents()
        .par_iter()
        .map(|d| matcher.prepare(d))
        .collect::<Result<Vec<_>, _>>()
        .map_err(data)?;
    let mut buf: Vec<u8> = Vec::new();
    for q in queries {
        let qi = m
            .documents()
            .iter()
            .position(|d| d.doc_id == *q)
            .ok_or_else(|| CliError::Data(format!("query document `{q}` not found in manifest")))?;
        let pq = &prepared[qi];
        let mut scored: Vec<(matcher::PairScore, usize)> = prepared
            .par_iter()
            .enumerate()
            .filter(|(i, _)| *i != qi)
            .map(|(i, pt)| (matcher::score_prepared(pq, pt, &cfg.matcher), i))
            .collect();
        scored.sort_by(|(a, _), (b, _)| {
            let ord = match metric {
                Metric::Mods => b.mods_norm.total_cmp(&a.mods_norm),
                Metric::Swm => a.swm.total_cmp(&b.swm),
            };
            ord.then_with(|| a.target_doc.cmp(&b.target_doc))
        });
        for (rank, (s, i)) in scored.iter().enumerate() {
            let mut r = matcher::report(s, pq, &prepared[*i], &cfg.matcher);
            r.rank = Some(rank + 1);
            write_report_line(&mut buf, &r)?;
        }
    }
    match path {
        Some(p) => fs::write(p, &buf).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => out.write_all(&buf).map_err(data),
    }
}

fn gen_fixtures(spec_path: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", spec_path.display())))?;
    let mut spec: FixtureSpec = toml::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", spec_path.display())))?;
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    let f = eval::gen_fixtures(&spec).map_err(data)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", out_dir.display())))?;
    write_manifest(&f.manifest, out_dir.join("manifest.jsonl")).map_err(data)?;
    write_embeddings(&f.store, out_dir.join("embeddings.bin")).map_err(data)?;
    let truth_path = out_dir.join("truth.jsonl");
    let file = fs::File::create(&truth_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", truth_path.display())))?;
    eval::write_jsonl(&f.truth, std::io::BufWriter::new(file)).map_err(data)
}

fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn eval_docsim_cmd(
    report: &Path,
    truth: &Path,
    p: Option<usize>,
    table: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let reports: Vec<ScoreReport> = eval::read_jsonl(open(report)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", report.display())))?;
    let truth: Vec<TruthRecord> = eval::read_jsonl(open(truth)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", truth.display())))?;
    let r = eval_docsim(&reports, &truth, p).map_err(data)?;
    if table {
        out.write_all(r.table().as_bytes()).map_err(data)
    } else {
        writeln!(out, "{}", serde_json::to_string(&r).map_err(data)?).map_err(data)
    }
}
