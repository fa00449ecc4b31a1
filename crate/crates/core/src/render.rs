//! Synthetic handwriting-like page rendering with ground-truth word boxes.
//!
//! Every character maps to a fixed stroke shape (body height class, width,
//! stroke pattern, optional dot), jittered per writer. Words in a line are
//! separated by wide gaps and characters by narrow ones; a few descenders are
//! extended into the next line's ascenders to produce merged components.

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doc_model::BBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageStyle {
    pub width: u32,
    pub margin: u32,
    pub x_height: u32,
    pub line_spacing: u32,
    /// Inclusive range of gaps between characters.
    pub char_gap: (u32, u32),
    /// Inclusive range of gaps between words.
    pub word_gap: (u32, u32),
    /// Probability that a descender is stretched into the line below.
    pub merge_prob: f64,
    pub ink: u8,
    pub paper: u8,
}

impl Default for PageStyle {
    fn default() -> Self {
        Self {
            width: 1000,
            margin: 30,
            x_height: 14,
            line_spacing: 50,
            char_gap: (1, 3),
            word_gap: (14, 24),
            merge_prob: 0.03,
            ink: 20,
            paper: 245,
        }
    }
}

/// A word drawn on a rendered page.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedWord {
    pub text: String,
    pub bbox: BBox,
    pub line_index: u32,
}

#[derive(Debug, Clone)]
pub struct RenderedPage {
    pub image: GrayImage,
    pub words: Vec<RenderedWord>,
}

#[derive(Clone, Copy)]
enum Body {
    XHeight,
    Ascender,
    Descender,
}

struct GlyphShape {
    body: Body,
    width: u32,
    /// 0 ring, 1 bar, 2 hook, 3 zigzag
    stroke: u8,
    dot: bool,
}

fn glyph_shape(c: char) -> GlyphShape {
    let c = c.to_ascii_lowercase();
    let body = match c {
        'b' | 'd' | 'f' | 'h' | 'k' | 'l' | 't' => Body::Ascender,
        'g' | 'j' | 'p' | 'q' | 'y' => Body::Descender,
        _ => Body::XHeight,
    };
    let code = c as u32;
    GlyphShape {
        body,
        width: match c {
            'i' | 'j' | 'l' => 3,
            'm' | 'w' => 13,
            _ => 7 + code % 4,
        },
        stroke: (code % 4) as u8,
        dot: matches!(c, 'i' | 'j'),
    }
}

struct Canvas<'a> {
    img: &'a mut GrayImage,
    ink: u8,
}

impl Canvas<'_> {
    fn rect(&mut self, x: i64, y: i64, w: i64, h: i64) {
        for yy in y.max(0)..(y + h).min(self.img.height() as i64) {
            for xx in x.max(0)..(x + w).min(self.img.width() as i64) {
                self.img.put_pixel(xx as u32, yy as u32, Luma([self.ink]));
            }
        }
    }
}

/// Draws one glyph with its top-left body corner at `(x, top)`; returns its box.
fn draw_glyph(
    canvas: &mut Canvas,
    shape: &GlyphShape,
    x: i64,
    baseline: i64,
    x_height: i64,
    rng: &mut ChaCha8Rng,
) -> BBox {
    let w = shape.width as i64 + rng.random_range(-1..=1);
    let w = w.max(2);
    let t = 2i64;
    let (top, bottom) = match shape.body {
        Body::XHeight => (baseline - x_height, baseline),
        Body::Ascender => (baseline - x_height - x_height * 6 / 10, baseline),
        Body::Descender => (baseline - x_height, baseline + x_height / 2),
    };
    let h = bottom - top;
    match shape.stroke {
        0 if w > 2 * t => {
            canvas.rect(x, top, w, t);
            canvas.rect(x, bottom - t, w, t);
            canvas.rect(x, top, t, h);
            canvas.rect(x + w - t, top, t, h);
        }
        2 if w > t => {
            canvas.rect(x, top, t, h);
            canvas.rect(x, bottom - t, w, t);
            canvas.rect(x + w - t, bottom - h / 2, t, h / 2);
        }
        3 if w > t => {
            canvas.rect(x, top, w, t);
            canvas.rect(x + w / 2 - 1, top, t, h);
            canvas.rect(x, bottom - t, w, t);
        }
        _ => canvas.rect(x + (w - t) / 2, top, t, h),
    }
    let mut bbox = BBox::new(x as u32, top as u32, w as u32, h as u32);
    if shape.dot {
        let dy = top - 5;
        canvas.rect(x + (w - t) / 2, dy, t + 1, 3);
        bbox = bbox.union(&BBox::new(
            (x + (w - t) / 2) as u32,
            dy as u32,
            (t + 1) as u32,
            3,
        ));
    }
    bbox
}

/// Lays `words` out left to right, wrapping at the page width, and draws them.
pub fn render_page(words: &[&str], style: &PageStyle, seed: u64) -> RenderedPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xh = style.x_height as i64;
    let usable = (style.width - 2 * style.margin) as i64;

    // layout pass: word widths with per-character gaps drawn up front
    struct Placed {
        text: String,
        line: u32,
        x: i64,
        gaps: Vec<i64>,
        widths: Vec<i64>,
    }
    let mut placed = Vec::new();
    let (mut line, mut x) = (0u32, 0i64);
    for &w in words {
        let widths: Vec<i64> = w.chars().map(|c| glyph_shape(c).width as i64 + 1).collect();
        let gaps: Vec<i64> = (1..widths.len())
            .map(|_| rng.random_range(style.char_gap.0..=style.char_gap.1) as i64)
            .collect();
        let total = widths.iter().sum::<i64>() + gaps.iter().sum::<i64>();
        if x > 0 && x + total > usable {
            line += 1;
            x = 0;
        }
        placed.push(Placed {
            text: w.to_string(),
            line,
            x,
            gaps,
            widths,
        });
        x += total + rng.random_range(style.word_gap.0..=style.word_gap.1) as i64;
    }
    let lines = placed.last().map_or(0, |p| p.line + 1);
    let height = style.margin * 2 + lines * style.line_spacing + xh as u32;
    let mut image = GrayImage::from_pixel(style.width, height.max(1), Luma([style.paper]));
    let mut canvas = Canvas {
        img: &mut image,
        ink: style.ink,
    };

    let mut out = Vec::with_capacity(placed.len());
    for p in &placed {
        let baseline = (style.margin + style.line_spacing * p.line) as i64
            + xh * 16 / 10
            + rng.random_range(-2..=2);
        let mut cx = style.margin as i64 + p.x;
        let mut bbox: Option<BBox> = None;
        for (k, c) in p.text.chars().enumerate() {
            let shape = glyph_shape(c);
            let g = draw_glyph(&mut canvas, &shape, cx, baseline, xh, &mut rng);
            bbox = Some(bbox.map_or(g, |b| b.union(&g)));
            if matches!(shape.body, Body::Descender)
                && p.line + 1 < lines
                && rng.random_bool(style.merge_prob)
            {
                // stroke reaching down into the next line's band
                let from = baseline + xh / 2;
                let to = baseline + style.line_spacing as i64 - xh;
                canvas.rect(cx, from, 2, to - from + 1);
            }
            cx += p.widths[k] - 1 + p.gaps.get(k).copied().unwrap_or(0);
        }
        if let Some(b) = bbox {
            out.push(RenderedWord {
                text: p.text.clone(),
                bbox: b,
                line_index: p.line,
            });
        }
    }
    RenderedPage { image, words: out }
}

/// Crops a word box out of a page, clamped to the page bounds.
pub fn crop(page: &GrayImage, bbox: &BBox) -> GrayImage {
    let x = bbox.x.min(page.width().saturating_sub(1));
    let y = bbox.y.min(page.height().saturating_sub(1));
    let w = bbox.w.min(page.width() - x).max(1);
    let h = bbox.h.min(page.height() - y).max(1);
    image::imageops::crop_imm(page, x, y, w, h).to_image()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let words = ["hello", "world", "this", "is", "a", "page"];
        let a = render_page(&words, &PageStyle::default(), 3);
        let b = render_page(&words, &PageStyle::default(), 3);
        assert_eq!(a.image, b.image);
        assert_eq!(a.words, b.words);
    }

    #[test]
    fn words_inside_page_and_wrapped() {
        let words: Vec<&str> = std::iter::repeat_n("segmentation", 40).collect();
        let page = render_page(&words, &PageStyle::default(), 1);
        assert_eq!(page.words.len(), 40);
        assert!(page.words.last().unwrap().line_index > 0);
        for w in &page.words {
            assert!(w.bbox.right() <= page.image.width());
            assert!(w.bbox.bottom() <= page.image.height());
        }
    }
}
