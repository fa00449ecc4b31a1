use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mods_core::render::{render_page, PageStyle};

fn mods(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mods"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL_SPEC: &str = "seed = 3\n[derived]\nnear_copy = 1\nlight = 1\nheavy = 1\nnone = 2\n";

fn fixtures(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.toml");
    std::fs::write(&spec, SMALL_SPEC).unwrap();
    let out = dir.join("fx");
    let o = mods(&["gen-fixtures", p(&spec), "--out-dir", p(&out)], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn help_and_usage_errors() {
    let o = mods(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in ["--gamma", "--region-lines", "--jobs", "--seed", "--config"] {
        assert!(help.contains(flag), "help lacks {flag}");
    }
    let o = mods(&["rank", "--bogus-flag"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--bogus-flag"));
    let o = mods(&["frobnicate"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_config_value_is_usage_error() {
    let o = mods(&["--gamma", "3.0", "eval-docsim", "a", "b"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma"));
}

#[test]
fn missing_input_is_data_error() {
    let o = mods(
        &[
            "eval-docsim",
            "/nonexistent/report.jsonl",
            "/nonexistent/t.jsonl",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/report.jsonl"));
}

#[test]
fn pipeline_score_rank_eval() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures(dir.path());
    let manifest = fx.join("manifest.jsonl");
    let emb = fx.join("embeddings.bin");
    for f in ["manifest.jsonl", "embeddings.bin", "truth.jsonl"] {
        assert!(fx.join(f).exists());
    }

    let o = mods(
        &["score", p(&manifest), p(&emb), "--pair", "src0", "src0"],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((line["mods_norm"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(line["swm"].as_f64().unwrap(), 0.0);

    let o = mods(
        &["rank", p(&manifest), p(&emb), "--query", "missing_id"],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing_id"));

    let report = dir.path().join("report.jsonl");
    let mut args = vec!["rank", p(&manifest), p(&emb), "--out", p(&report)];
    for q in [
        "--query", "src0", "--query", "src1", "--query", "src2", "--query", "src3", "--query",
        "src4",
    ] {
        args.push(q);
    }
    let o = mods(&args, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5 * 29);
    assert_eq!(lines[0]["rank"], 1);
    assert_eq!(lines[0]["query_doc"], "src0");
    assert!(!lines[0]["region_matches"].as_array().unwrap().is_empty());

    let o = mods(
        &["eval-docsim", p(&report), p(&fx.join("truth.jsonl"))],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["queries"], 5);
    assert!(r["mods"]["auc"].as_f64().unwrap() > 0.9);

    let o = mods(
        &[
            "eval-docsim",
            p(&report),
            p(&fx.join("truth.jsonl")),
            "--table",
        ],
        &[],
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("nDCG@p"));

    let o = mods(&["eval-spot", p(&manifest), p(&emb), "--inexact"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["inexact"], true);
    assert!(r["map"].as_f64().unwrap() > 0.5);
}

#[test]
fn output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures(dir.path());
    let run = |jobs: &str| {
        let o = mods(
            &[
                "--jobs",
                jobs,
                "rank",
                p(&fx.join("manifest.jsonl")),
                p(&fx.join("embeddings.bin")),
                "--query",
                "src1",
                "--metric",
                "swm",
            ],
            &[],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        o.stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mods.toml");
    std::fs::write(&cfg, "[matcher]\ngamma = 0.3\nregion_lines = 4\n").unwrap();
    let gamma = |args: &[&str], env: &[(&str, &str)]| -> (f64, u64) {
        let mut all = vec!["--config", p(&cfg)];
        all.extend_from_slice(args);
        all.extend_from_slice(&["eval-docsim", "/nonexistent/a", "/nonexistent/b"]);
        let o = mods(&all, env);
        let err = stderr(&o);
        let line = err
            .lines()
            .find(|l| l.starts_with("config: "))
            .expect("config echoed");
        let v: serde_json::Value = serde_json::from_str(&line["config: ".len()..]).unwrap();
        (
            v["matcher"]["gamma"].as_f64().unwrap(),
            v["matcher"]["region_lines"].as_u64().unwrap(),
        )
    };
    assert_eq!(gamma(&[], &[]), (0.3, 4));
    assert_eq!(gamma(&[], &[("MODS_GAMMA", "0.4")]), (0.4, 4));
    assert_eq!(
        gamma(&["--gamma", "0.5"], &[("MODS_GAMMA", "0.4")]),
        (0.5, 4)
    );
    assert_eq!(gamma(&["--region-lines", "2"], &[]), (0.3, 2));
}

#[test]
fn segment_then_embed_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let words = [
        "handwritten",
        "pages",
        "become",
        "word",
        "boxes",
        "then",
        "vectors",
    ];
    let mut images = Vec::new();
    for (i, seed) in [11u64, 12].iter().enumerate() {
        let page = render_page(&words, &PageStyle::default(), *seed);
        let path = dir.path().join(format!("page{i}.png"));
        page.image.save(&path).unwrap();
        images.push(path);
    }
    let manifest = dir.path().join("pages.jsonl");
    let o = mods(
        &[
            "segment",
            p(&images[0]),
            p(&images[1]),
            "--out",
            p(&manifest),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("\"page0\"") && text.contains("\"page1\""));

    let emb = dir.path().join("pages.bin");
    let o = mods(
        &[
            "embed",
            p(&manifest),
            "--mode",
            "baseline",
            "--out",
            p(&emb),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let store = mods_core::doc_model::read_embeddings(&emb).unwrap();
    assert_eq!(store.dim(), 1024);
    assert!(store.len() >= words.len() * 2);

    let o = mods(
        &["score", p(&manifest), p(&emb), "--pair", "page0", "page1"],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));

    // synth mode needs labels, which segmented words lack
    let o = mods(
        &["embed", p(&manifest), "--mode", "synth", "--out", p(&emb)],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
}
