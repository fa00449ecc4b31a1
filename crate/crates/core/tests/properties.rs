use std::collections::BTreeSet;

use mods_core::ann::{normalize, IndexMode, IndexParams, VectorIndex};
use mods_core::assignment::{solve, CostMatrix};
use mods_core::doc_model::{
    decode_embeddings, decode_manifest, encode_embeddings, encode_manifest, BBox, CorpusManifest,
    CorpusMeta, DocumentRecord, EmbeddingRecord, WordBox,
};
use mods_core::eval::{average_precision, ndcg_at, roc_auc};
use mods_core::matcher::{score_prepared, swm_prepared, MatchConfig, PreparedDoc};
use proptest::prelude::*;

fn unit(v: &[f32]) -> Vec<f64> {
    let n = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    v.iter().map(|x| *x as f64 / n).collect()
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1.0f32..1.0, dim)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f32>() > 1e-3)
}

fn brute_nearest(items: &[Vec<f32>], q: &[f32], k: usize) -> Vec<(usize, f64)> {
    let q = unit(q);
    let mut d: Vec<(usize, f64)> = items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let u = unit(v);
            (
                i,
                u.iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            )
        })
        .collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    d.truncate(k);
    d
}

fn index_agrees(dim: usize, items: Vec<Vec<f32>>, queries: Vec<Vec<f32>>, params: IndexParams) {
    let idx = VectorIndex::build(
        items
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("i{i:04}"), v.clone())),
        params,
    );
    assert_eq!(idx.dim(), dim);
    for q in &queries {
        let mut qn = q.clone();
        normalize(&mut qn);
        let got = idx.query_knn(&qn, 3);
        let want = brute_nearest(&items, q, 3);
        assert_eq!(got.len(), want.len());
        for (g, (wi, wd)) in got.iter().zip(&want) {
            assert_eq!(g.id, format!("i{wi:04}"));
            assert!((g.distance - wd).abs() < 1e-5, "{} vs {}", g.distance, wd);
        }
    }
}

fn brute_min_cost(c: &[Vec<f64>]) -> f64 {
    let (m, n) = (c.len(), c[0].len());
    let k = m.min(n);
    let mut best = f64::INFINITY;
    // choose an injective map from the smaller side into the larger
    fn rec(
        c: &[Vec<f64>],
        i: usize,
        k: usize,
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
        tall: bool,
    ) {
        if i == k {
            *best = best.min(acc);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                let v = if tall { c[j][i] } else { c[i][j] };
                rec(c, i + 1, k, used, acc + v, best, tall);
                used[j] = false;
            }
        }
    }
    let tall = m > n;
    let mut used = vec![false; m.max(n)];
    rec(c, 0, k, &mut used, 0.0, &mut best, tall);
    best
}

fn doc_strategy(max_words: usize, dim: usize) -> impl Strategy<Value = Vec<(u32, Vec<f32>)>> {
    prop::collection::vec((0u32..6, vec_strategy(dim)), 1..max_words)
}

fn prepared(id: &str, words: &[(u32, Vec<f32>)]) -> PreparedDoc {
    PreparedDoc::from_vectors(
        id,
        words
            .iter()
            .enumerate()
            .map(|(i, (l, v))| (format!("{id}{i}"), *l, v.clone()))
            .collect(),
        IndexParams::exact(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exact_index_matches_scan_d2(items in prop::collection::vec(vec_strategy(2), 1..60),
                                   queries in prop::collection::vec(vec_strategy(2), 1..10)) {
        index_agrees(2, items, queries, IndexParams::exact());
    }

    #[test]
    fn exact_index_matches_scan_d8(items in prop::collection::vec(vec_strategy(8), 1..60),
                                   queries in prop::collection::vec(vec_strategy(8), 1..10)) {
        index_agrees(8, items, queries, IndexParams::exact());
    }

    #[test]
    fn exact_index_matches_scan_d64(items in prop::collection::vec(vec_strategy(64), 1..60),
                                    queries in prop::collection::vec(vec_strategy(64), 1..10)) {
        index_agrees(64, items, queries, IndexParams::exact());
    }

    #[test]
    fn unbudgeted_kdtree_is_exact(items in prop::collection::vec(vec_strategy(8), 1..80),
                                  queries in prop::collection::vec(vec_strategy(8), 1..10),
                                  leaf in 1usize..8) {
        let params = IndexParams { mode: IndexMode::KdTree, leaf_size: leaf, max_visited_leaves: usize::MAX };
        index_agrees(8, items, queries, params);
    }

    #[test]
    fn assignment_is_optimal(m in 1usize..6, n in 1usize..6, seed in prop::collection::vec(0u32..20, 36)) {
        let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..n).map(|j| seed[i * 6 + j] as f64).collect()).collect();
        let c = CostMatrix::from_rows(&rows).unwrap();
        let pairs = solve(&c);
        prop_assert_eq!(pairs.len(), m.min(n));
        let rs: BTreeSet<_> = pairs.iter().map(|p| p.0).collect();
        let cs: BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(rs.len(), pairs.len());
        prop_assert_eq!(cs.len(), pairs.len());
        prop_assert_eq!(c.total(&pairs), brute_min_cost(&rows));
    }

    #[test]
    fn ap_matches_definition(rel in prop::collection::vec(any::<bool>(), 1..12)) {
        // precision at each relevant rank, counted directly
        let ranks: Vec<usize> = (0..rel.len()).filter(|&i| rel[i]).collect();
        let want = if ranks.is_empty() { None } else {
            Some(ranks.iter().map(|&r| rel[..=r].iter().filter(|&&x| x).count() as f64 / (r + 1) as f64).sum::<f64>() / ranks.len() as f64)
        };
        let got = average_precision(&rel);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => prop_assert!((g - w).abs() < 1e-12),
            _ => prop_assert!(false, "presence differs"),
        }
    }

    #[test]
    fn ndcg_bounded_and_one_when_sorted(grades in prop::collection::vec(0u32..4, 1..20)) {
        let p = grades.len();
        let v = ndcg_at(&grades, p).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        let mut sorted = grades.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let ideal = ndcg_at(&sorted, p).unwrap();
        if sorted[0] > 0 {
            prop_assert!((ideal - 1.0).abs() < 1e-12);
            if grades != sorted {
                prop_assert!(v < 1.0 - 1e-12);
            }
        } else {
            prop_assert_eq!(ideal, 0.0);
        }
    }

    #[test]
    fn auc_matches_pairs_and_is_monotone_invariant(
        data in prop::collection::vec((0u8..10, any::<bool>()), 2..40)
    ) {
        let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 10.0).collect();
        let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
        let pos = labels.iter().filter(|&&l| l).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let mut wins = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let want = wins / (pos * (labels.len() - pos)) as f64;
        let got = roc_auc(&scores, &labels).unwrap();
        prop_assert!((got - want).abs() < 1e-12);
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(roc_auc(&warped, &labels).unwrap(), got);
    }

    #[test]
    fn swm_symmetric_and_bounded(a in doc_strategy(20, 8), b in doc_strategy(20, 8)) {
        let (da, db) = (prepared("a", &a), prepared("b", &b));
        let ab = swm_prepared(&da, &db);
        let ba = swm_prepared(&db, &da);
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!((0.0..=2.0).contains(&ab));
    }

    #[test]
    fn mods_bounds_and_unique_pairs(a in doc_strategy(25, 8), b in doc_strategy(25, 8), k in 1u32..4) {
        let cfg = MatchConfig { region_lines: k, region_stride: 1, ..Default::default() };
        let s = score_prepared(&prepared("a", &a), &prepared("b", &b), &cfg);
        prop_assert!((0.0..=1.0).contains(&s.mods_norm));
        prop_assert!(s.mods_raw >= 0.0);
        for m in &s.region_matches {
            let src: BTreeSet<_> = m.pairs.iter().map(|p| p.source).collect();
            let dst: BTreeSet<_> = m.pairs.iter().map(|p| p.target).collect();
            prop_assert_eq!(src.len(), m.pairs.len());
            prop_assert_eq!(dst.len(), m.pairs.len());
            prop_assert!(m.pairs.iter().all(|p| p.distance <= cfg.gamma));
        }
    }

    #[test]
    fn self_pair_scores_one(a in doc_strategy(25, 8)) {
        let s = score_prepared(&prepared("a", &a), &prepared("a2", &a), &MatchConfig::default());
        prop_assert!((s.mods_norm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn word_order_within_lines_is_ignored(a in doc_strategy(25, 8), b in doc_strategy(25, 8), rot in 1usize..5) {
        // rotate the words of every line
        let mut permuted = a.clone();
        for line in 0..6u32 {
            let idx: Vec<usize> = (0..a.len()).filter(|&i| a[i].0 == line).collect();
            for (n, &i) in idx.iter().enumerate() {
                permuted[i] = a[idx[(n + rot) % idx.len()]].clone();
            }
        }
        let cfg = MatchConfig::default();
        let db = prepared("b", &b);
        let x = score_prepared(&prepared("a", &a), &db, &cfg).mods_norm;
        let y = score_prepared(&prepared("a", &permuted), &db, &cfg).mods_norm;
        prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
        let x = score_prepared(&db, &prepared("a", &a), &cfg).mods_norm;
        let y = score_prepared(&db, &prepared("a", &permuted), &cfg).mods_norm;
        prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
    }

    #[test]
    fn larger_gamma_never_lowers_mods(a in doc_strategy(20, 4), b in doc_strategy(20, 4), g1 in 0.05f64..1.0, dg in 0.0f64..1.0) {
        let lo = MatchConfig { gamma: g1, ..Default::default() };
        let hi = MatchConfig { gamma: (g1 + dg).min(2.0), ..Default::default() };
        let (da, db) = (prepared("a", &a), prepared("b", &b));
        prop_assert!(score_prepared(&da, &db, &hi).mods_norm + 1e-12 >= score_prepared(&da, &db, &lo).mods_norm);
    }

    #[test]
    fn manifest_roundtrip(docs in prop::collection::vec(
        prop::collection::vec((0u32..500, 0u32..500, 1u32..80, 1u32..40, 0u32..8, prop::option::of("[a-z]{1,8}"), prop::option::of(0.0f32..1.0)), 0..12), 1..5)
    ) {
        let docs: Vec<DocumentRecord> = docs.iter().enumerate().map(|(d, words)| {
            let boxes = words.iter().enumerate().map(|(i, (x, y, w, h, line, label, p))| {
                let mut b = WordBox::new(format!("d{d}w{i}"), BBox::new(*x, *y, *w, *h), *line);
                if let Some(l) = label { b = b.with_label(l); }
                if let Some(p) = p { b = b.with_stopword_prob(*p); }
                b
            }).collect();
            DocumentRecord::new(format!("d{d}"), Some(format!("p{d}.png")), boxes).unwrap()
        }).collect();
        let m = CorpusManifest::new(CorpusMeta { name: "t".into(), embedding_dim: Some(4), ..Default::default() }, docs).unwrap();
        let text = encode_manifest(&m).unwrap();
        prop_assert_eq!(decode_manifest(&text).unwrap(), m);
    }

    #[test]
    fn embedding_roundtrip(recs in prop::collection::vec(("[a-z0-9/]{1,12}", prop::collection::vec(-10.0f32..10.0, 5), prop::option::of(0.0f32..1.0)), 0..20)) {
        let records: Vec<EmbeddingRecord> = recs.iter().map(|(id, v, p)| {
            let mut r = EmbeddingRecord::new(id.clone(), v.clone());
            r.stopword_prob = *p;
            r
        }).collect();
        let bytes = encode_embeddings(5, &records).unwrap();
        let per: usize = records.iter().map(|r| 2 + r.word_id.len() + 4 + 20).sum();
        prop_assert_eq!(bytes.len(), 16 + per);
        let back = decode_embeddings(&bytes).unwrap();
        prop_assert_eq!(back.records(), records.as_slice());
    }
}
