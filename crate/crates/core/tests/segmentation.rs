use mods_core::render::{render_page, PageStyle};
use mods_core::segmenter::{segment_page, SegmenterConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_words(seed: u64, n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(2..=9);
            (0..len)
                .map(|_| rng.random_range(b'a'..=b'z') as char)
                .collect()
        })
        .collect()
}

#[test]
fn recall_on_rendered_pages() {
    let cfg = SegmenterConfig::default();
    let (mut hit, mut total) = (0usize, 0usize);
    for seed in 0..20u64 {
        let words = random_words(seed, 120);
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let page = render_page(&refs, &PageStyle::default(), seed);
        let seg = segment_page(&page.image, &cfg);
        let hyps = seg.merged_words("p");
        for gt in &page.words {
            total += 1;
            if hyps.iter().any(|h| h.bbox.iou(&gt.bbox) >= 0.5) {
                hit += 1;
            }
        }
    }
    let recall = hit as f64 / total as f64;
    eprintln!("recall {recall:.4} over {total} words");
    assert!(recall >= 0.9, "recall {recall}");
}
