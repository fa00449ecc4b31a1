//! Word-image descriptors and stopword classification.
//!
//! [`baseline_descriptor`] is a deterministic hand-built feature: gradient
//! orientation histograms over a fixed grid plus projection profiles, on a
//! 48x128 canvas. [`synth_embed`] maps a transcription to a reproducible
//! pseudo-random unit vector, which stands in for a learned embedding when
//! exercising the matcher and the evaluation harness.

use std::collections::HashSet;
use std::f64::consts::PI;

use image::imageops::{self, FilterType};
use image::{GrayImage, Luma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ann::normalize;
use crate::doc_model::WordBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorConfig {
    pub height: u32,
    pub width: u32,
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub orientation_bins: u32,
    pub include_profiles: bool,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            height: 48,
            width: 128,
            grid_rows: 6,
            grid_cols: 16,
            orientation_bins: 8,
            include_profiles: true,
        }
    }
}

impl DescriptorConfig {
    pub fn dimension(&self) -> usize {
        let hist = (self.grid_rows * self.grid_cols * self.orientation_bins) as usize;
        if self.include_profiles {
            hist + 2 * self.width as usize
        } else {
            hist
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("height", self.height),
            ("width", self.width),
            ("grid_rows", self.grid_rows),
            ("grid_cols", self.grid_cols),
            ("orientation_bins", self.orientation_bins),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(format!("descriptor {name} must be positive"));
            }
        }
        if self.grid_rows > self.height || self.grid_cols > self.width {
            return Err("descriptor grid is finer than the canvas".into());
        }
        Ok(())
    }
}

/// Most frequent intensity; ties resolve to the brighter value.
fn modal_intensity(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for p in img.pixels() {
        hist[p[0] as usize] += 1;
    }
    let mut best = 255usize;
    for v in (0..256).rev() {
        if hist[v] > hist[best] {
            best = v;
        }
    }
    best as u8
}

/// Aspect-preserving resize onto a `height x width` canvas filled with the
/// image's modal intensity, content centred.
pub fn fit_to_canvas(img: &GrayImage, height: u32, width: u32) -> GrayImage {
    let fill = modal_intensity(img);
    let (w, h) = img.dimensions();
    let scale = (height as f64 / h as f64).min(width as f64 / w as f64);
    let nw = ((w as f64 * scale).round() as u32).clamp(1, width);
    let nh = ((h as f64 * scale).round() as u32).clamp(1, height);
    let resized = if (nw, nh) == (w, h) {
        img.clone()
    } else {
        imageops::resize(img, nw, nh, FilterType::Triangle)
    };
    let mut canvas = GrayImage::from_pixel(width, height, Luma([fill]));
    imageops::replace(
        &mut canvas,
        &resized,
        ((width - nw) / 2) as i64,
        ((height - nh) / 2) as i64,
    );
    canvas
}

/// Computes the baseline descriptor of a word image. Output is unit-norm and
/// has length [`DescriptorConfig::dimension`].
pub fn baseline_descriptor(img: &GrayImage, cfg: &DescriptorConfig) -> Vec<f32> {
    assert!(img.width() > 0 && img.height() > 0, "empty word image");
    let canvas = fit_to_canvas(img, cfg.height, cfg.width);
    let (w, h) = (cfg.width as usize, cfg.height as usize);
    let px: Vec<f64> = canvas.pixels().map(|p| p[0] as f64 / 255.0).collect();
    let at = |x: usize, y: usize| px[y * w + x];

    let rows = cfg.grid_rows as usize;
    let cols = cfg.grid_cols as usize;
    let bins = cfg.orientation_bins as usize;
    let cell_h = h as f64 / rows as f64;
    let cell_w = w as f64 / cols as f64;
    let mut hist = vec![0.0f64; rows * cols * bins];

    for y in 0..h {
        for x in 0..w {
            let gx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
            let gy = at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            // unsigned orientation in [0, pi)
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += PI;
            }
            if theta >= PI {
                theta -= PI;
            }
            let fb = theta / PI * bins as f64 - 0.5;
            let b0 = fb.floor();
            let wb1 = fb - b0;
            let b0 = (b0 as isize).rem_euclid(bins as isize) as usize;
            let b1 = (b0 + 1) % bins;

            // bilinear spatial weights between neighbouring cell centres
            let fy = (y as f64 + 0.5) / cell_h - 0.5;
            let fx = (x as f64 + 0.5) / cell_w - 0.5;
            let (r0, wr1) = (fy.floor(), fy - fy.floor());
            let (c0, wc1) = (fx.floor(), fx - fx.floor());
            for (dr, wr) in [(0isize, 1.0 - wr1), (1, wr1)] {
                let r = r0 as isize + dr;
                if r < 0 || r >= rows as isize || wr == 0.0 {
                    continue;
                }
                for (dc, wc) in [(0isize, 1.0 - wc1), (1, wc1)] {
                    let c = c0 as isize + dc;
                    if c < 0 || c >= cols as isize || wc == 0.0 {
                        continue;
                    }
                    let cell = (r as usize * cols + c as usize) * bins;
                    let m = mag * wr * wc;
                    hist[cell + b0] += m * (1.0 - wb1);
                    hist[cell + b1] += m * wb1;
                }
            }
        }
    }
    normalize_f64(&mut hist);

    let mut out: Vec<f64> = hist;
    if cfg.include_profiles {
        let mut profiles = Vec::with_capacity(2 * w);
        // column means
        for x in 0..w {
            profiles.push((0..h).map(|y| at(x, y)).sum::<f64>() / h as f64);
        }
        // row means, linearly resampled to `w` samples
        let row_means: Vec<f64> = (0..h)
            .map(|y| (0..w).map(|x| at(x, y)).sum::<f64>() / w as f64)
            .collect();
        for i in 0..w {
            let pos = if w == 1 {
                0.0
            } else {
                i as f64 * (h - 1) as f64 / (w - 1) as f64
            };
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(h - 1);
            let t = pos - lo as f64;
            profiles.push(row_means[lo] * (1.0 - t) + row_means[hi] * t);
        }
        normalize_f64(&mut profiles);
        out.extend(profiles);
    }
    let mut v: Vec<f32> = out.into_iter().map(|x| x as f32).collect();
    normalize(&mut v);
    v
}

fn normalize_f64(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn seeded_rng(parts: &[&[u8]]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Deterministic synthetic embedding of a transcription.
///
/// The base direction depends only on `lowercase(label)`. A Gaussian
/// perturbation with per-component standard deviation `noise / sqrt(dim)`
/// (expected norm close to `noise`) is added from a stream seeded by the label
/// and `writer_seed`, then the sum is normalized. Two writers of the same
/// label therefore agree to cosine roughly `1 / (1 + noise^2)`.
pub fn synth_embed(label: &str, writer_seed: u64, noise: f64, dim: usize) -> Vec<f32> {
    assert!(noise >= 0.0, "noise must be non-negative");
    let label = label.to_lowercase();
    let normal = StandardNormal;
    let mut base_rng = seeded_rng(&[b"base", label.as_bytes()]);
    let mut base: Vec<f64> = (0..dim).map(|_| normal.sample(&mut base_rng)).collect();
    normalize_f64(&mut base);
    if noise > 0.0 {
        let mut rng = seeded_rng(&[b"writer", label.as_bytes(), &writer_seed.to_le_bytes()]);
        let sigma = noise / (dim as f64).sqrt();
        for x in base.iter_mut() {
            let e: f64 = normal.sample(&mut rng);
            *x += sigma * e;
        }
    }
    let mut v: Vec<f32> = base.into_iter().map(|x| x as f32).collect();
    normalize(&mut v);
    v
}

/// A set of lowercase stopwords.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopwordLexicon {
    words: HashSet<String>,
}

const DEFAULT_LEXICON: &str = include_str!("../data/stopwords_en.txt");

impl StopwordLexicon {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    /// The bundled 174-word English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_LEXICON)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Stopword decision. Probability evidence, when present, overrides the label.
pub fn is_stopword(word: &WordBox, tau: f32, lexicon: &StopwordLexicon) -> bool {
    match (word.stopword_prob, &word.label) {
        (Some(p), _) => p >= tau,
        (None, Some(label)) => lexicon.contains(label),
        (None, None) => false,
    }
}
