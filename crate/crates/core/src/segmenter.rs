//! Bottom-up page segmentation into line and word hypotheses.
//!
//! Foreground connected components are split by height into small
//! (punctuation, dots), medium (characters) and large (probable line merges)
//! classes. Medium components are linked into lines wherever their adjacency
//! cost exceeds a threshold; large components are cut between the lines they
//! cross and small ones join the nearest line. Each line is then grouped into
//! words once per gap threshold, giving several word-box hypothesis sets.

use std::f64::consts::FRAC_PI_2;

use image::{GrayImage, Luma};
use imageproc::contrast::otsu_level;
use imageproc::region_labelling::{connected_components, Connectivity};
use serde::{Deserialize, Serialize};

use crate::doc_model::{BBox, WordBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    /// Components shorter than `small_factor * median height` are small.
    pub small_factor: f64,
    /// Components taller than `large_factor * median height` are large.
    pub large_factor: f64,
    /// Medium components link when their pair cost exceeds this.
    pub cost_threshold: f64,
    /// Distance normalizer as a multiple of the median medium height.
    pub page_scale_factor: f64,
    /// Word gap thresholds as multiples of the median intra-line gap.
    pub gap_factors: Vec<f64>,
    /// Fixed binarization level; Otsu when absent.
    pub binarize_threshold: Option<u8>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            small_factor: 0.4,
            large_factor: 2.0,
            cost_threshold: 1.5,
            page_scale_factor: 3.0,
            gap_factors: vec![1.0, 1.5, 2.0],
            binarize_threshold: None,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.small_factor > 0.0 && self.small_factor < self.large_factor) {
            return Err("segmenter size factors must satisfy 0 < small < large".into());
        }
        if !(0.0..=3.0).contains(&self.cost_threshold) {
            return Err("segmenter cost_threshold must lie in [0, 3]".into());
        }
        if self.page_scale_factor.is_nan() || self.page_scale_factor <= 0.0 {
            return Err("segmenter page_scale_factor must be positive".into());
        }
        if self.gap_factors.is_empty() || self.gap_factors.iter().any(|g| g.is_nan() || *g <= 0.0) {
            return Err("segmenter gap_factors must be a non-empty list of positive values".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectedComponent {
    pub bbox: BBox,
    pub pixel_count: u32,
    /// Mean pixel coordinate.
    pub centroid: (f64, f64),
    pub pixels: Vec<(u32, u32)>,
}

impl ConnectedComponent {
    /// Builds a component from its pixel coordinates. Panics on an empty list.
    pub fn from_pixels(mut pixels: Vec<(u32, u32)>) -> Self {
        assert!(!pixels.is_empty(), "component needs at least one pixel");
        pixels.sort_by_key(|&(x, y)| (y, x));
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        let (mut sx, mut sy) = (0.0f64, 0.0f64);
        for &(x, y) in &pixels {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            sx += x as f64;
            sy += y as f64;
        }
        let n = pixels.len() as f64;
        Self {
            bbox: BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
            pixel_count: pixels.len() as u32,
            centroid: (sx / n, sy / n),
            pixels,
        }
    }

    /// Solid rectangle.
    pub fn rect(x: u32, y: u32, w: u32, h: u32) -> Self {
        let pixels = (y..y + h)
            .flat_map(|yy| (x..x + w).map(move |xx| (xx, yy)))
            .collect();
        Self::from_pixels(pixels)
    }

    fn split_at(&self, cuts: &[f64]) -> Vec<ConnectedComponent> {
        let mut pieces: Vec<Vec<(u32, u32)>> = vec![Vec::new(); cuts.len() + 1];
        for &(x, y) in &self.pixels {
            let slot = cuts.iter().take_while(|c| y as f64 >= **c).count();
            pieces[slot].push((x, y));
        }
        pieces
            .into_iter()
            .filter(|p| !p.is_empty())
            .map(ConnectedComponent::from_pixels)
            .collect()
    }
}

/// Binarizes (Otsu unless `threshold` is given; ink is dark) and returns the
/// 8-connected foreground components sorted by (top, left).
pub fn extract_components(image: &GrayImage, threshold: Option<u8>) -> Vec<ConnectedComponent> {
    assert!(image.width() > 0 && image.height() > 0, "empty image");
    let (lo, hi) = image.pixels().fold((u8::MAX, u8::MIN), |(lo, hi), p| {
        (lo.min(p[0]), hi.max(p[0]))
    });
    let level = match threshold {
        Some(t) => t,
        None if lo == hi => return Vec::new(),
        None => otsu_level(image),
    };
    if level >= hi && threshold.is_none() {
        return Vec::new();
    }
    let binary = GrayImage::from_fn(image.width(), image.height(), |x, y| {
        Luma([if image.get_pixel(x, y)[0] <= level {
            255
        } else {
            0
        }])
    });
    let labels = connected_components(&binary, Connectivity::Eight, Luma([0u8]));
    let mut groups: Vec<Vec<(u32, u32)>> = Vec::new();
    for (x, y, l) in labels.enumerate_pixels() {
        let l = l[0] as usize;
        if l == 0 {
            continue;
        }
        if groups.len() < l {
            groups.resize_with(l, Vec::new);
        }
        groups[l - 1].push((x, y));
    }
    let mut ccs: Vec<_> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(ConnectedComponent::from_pixels)
        .collect();
    ccs.sort_by_key(|c| (c.bbox.y, c.bbox.x));
    ccs
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SizeClasses {
    pub small: Vec<ConnectedComponent>,
    pub medium: Vec<ConnectedComponent>,
    pub large: Vec<ConnectedComponent>,
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Splits components by height relative to the median component height.
pub fn partition_components(
    ccs: Vec<ConnectedComponent>,
    small_factor: f64,
    large_factor: f64,
) -> SizeClasses {
    let mut heights: Vec<f64> = ccs.iter().map(|c| c.bbox.h as f64).collect();
    let Some(m) = median(&mut heights) else {
        return SizeClasses::default();
    };
    let mut classes = SizeClasses::default();
    for c in ccs {
        let h = c.bbox.h as f64;
        if h < small_factor * m {
            classes.small.push(c);
        } else if h > large_factor * m {
            classes.large.push(c);
        } else {
            classes.medium.push(c);
        }
    }
    classes
}

/// `page_scale_factor` times the median height of the medium components.
pub fn page_scale(classes: &SizeClasses, page_scale_factor: f64) -> f64 {
    let mut h: Vec<f64> = classes.medium.iter().map(|c| c.bbox.h as f64).collect();
    median(&mut h).map_or(1.0, |m| (m * page_scale_factor).max(1.0))
}

/// Adjacency cost of two components, in `[0, 3]`; higher means more likely
/// neighbours on one text line.
///
/// Sum of the y-interval IoU, one minus the centroid distance over
/// `page_scale` and one minus the centroid angle from horizontal over a right
/// angle, the last two clamped to `[0, 1]`.
pub fn pair_cost(ci: &ConnectedComponent, cj: &ConnectedComponent, page_scale: f64) -> f64 {
    let overlap = ci.bbox.y_iou(&cj.bbox);
    let dx = (cj.centroid.0 - ci.centroid.0).abs();
    let dy = (cj.centroid.1 - ci.centroid.1).abs();
    let dist = (dx * dx + dy * dy).sqrt();
    let (d_hat, theta_hat) = if dist == 0.0 {
        (0.0, 0.0)
    } else {
        (
            (dist / page_scale).clamp(0.0, 1.0),
            (dy.atan2(dx) / FRAC_PI_2).clamp(0.0, 1.0),
        )
    };
    overlap + (1.0 - d_hat) + (1.0 - theta_hat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineHypothesis {
    pub line_index: u32,
    /// Sorted by centroid x.
    pub members: Vec<ConnectedComponent>,
    pub bbox: BBox,
}

impl LineHypothesis {
    fn center_y(&self) -> f64 {
        self.bbox.center().1
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn union_bbox(ccs: &[ConnectedComponent]) -> BBox {
    ccs.iter()
        .skip(1)
        .fold(ccs[0].bbox, |acc, c| acc.union(&c.bbox))
}

/// Groups components into text lines, indexed top to bottom.
pub fn build_lines(
    classes: &SizeClasses,
    page_scale: f64,
    cost_threshold: f64,
) -> Vec<LineHypothesis> {
    let medium = &classes.medium;
    if medium.is_empty() {
        return Vec::new();
    }
    let mut sets = DisjointSet::new(medium.len());
    for i in 0..medium.len() {
        for j in i + 1..medium.len() {
            if pair_cost(&medium[i], &medium[j], page_scale) > cost_threshold {
                sets.union(i, j);
            }
        }
    }
    let mut groups: Vec<Vec<ConnectedComponent>> = Vec::new();
    let mut slot = vec![usize::MAX; medium.len()];
    for (i, cc) in medium.iter().enumerate() {
        let root = sets.find(i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(cc.clone());
    }
    let mut lines: Vec<LineHypothesis> = groups
        .into_iter()
        .map(|members| LineHypothesis {
            line_index: 0,
            bbox: union_bbox(&members),
            members,
        })
        .collect();
    lines.sort_by(|a, b| {
        a.center_y()
            .total_cmp(&b.center_y())
            .then(a.bbox.x.cmp(&b.bbox.x))
    });

    // Bands and centres come from the medium components alone.
    let bands: Vec<BBox> = lines.iter().map(|l| l.bbox).collect();
    let nearest = |y: f64| -> usize {
        let mut best = 0;
        for (i, b) in bands.iter().enumerate() {
            if (b.center().1 - y).abs() < (bands[best].center().1 - y).abs() {
                best = i;
            }
        }
        best
    };

    let mut extra: Vec<Vec<ConnectedComponent>> = vec![Vec::new(); lines.len()];
    for c in &classes.large {
        let crossed: Vec<usize> = bands
            .iter()
            .enumerate()
            .filter(|(_, b)| c.bbox.y < b.bottom() && b.y < c.bbox.bottom())
            .map(|(i, _)| i)
            .collect();
        match crossed.len() {
            0 => extra[nearest(c.centroid.1)].push(c.clone()),
            1 => extra[crossed[0]].push(c.clone()),
            _ => {
                let cuts: Vec<f64> = crossed
                    .windows(2)
                    .map(|w| (bands[w[0]].bottom() as f64 + bands[w[1]].y as f64) / 2.0)
                    .collect();
                for piece in c.split_at(&cuts) {
                    let k = cuts
                        .iter()
                        .take_while(|cut| piece.bbox.y as f64 >= **cut)
                        .count();
                    extra[crossed[k]].push(piece);
                }
            }
        }
    }
    for c in &classes.small {
        extra[nearest(c.centroid.1)].push(c.clone());
    }

    for (idx, (line, more)) in lines.iter_mut().zip(extra).enumerate() {
        line.line_index = idx as u32;
        line.members.extend(more);
        line.members.sort_by(|a, b| {
            a.centroid
                .0
                .total_cmp(&b.centroid.0)
                .then(a.bbox.y.cmp(&b.bbox.y))
        });
        line.bbox = union_bbox(&line.members);
    }
    lines
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordHypothesisSet {
    pub threshold_id: String,
    /// Gap threshold in pixels.
    pub gap_threshold: f64,
    pub boxes: Vec<WordBox>,
}

/// Median of the positive horizontal gaps between consecutive line members;
/// 1.0 when no positive gap exists.
pub fn median_gap(lines: &[LineHypothesis]) -> f64 {
    let mut gaps: Vec<f64> = lines
        .iter()
        .flat_map(|l| {
            l.members
                .windows(2)
                .map(|w| w[1].bbox.x as f64 - w[0].bbox.right() as f64)
        })
        .filter(|g| *g > 0.0)
        .collect();
    median(&mut gaps).unwrap_or(1.0)
}

/// Groups each line's members into words: a member joins the current word
/// when its left edge is at most `factor * median_gap` pixels right of the
/// word's right edge. One hypothesis set per factor.
pub fn group_words(lines: &[LineHypothesis], gap_factors: &[f64]) -> Vec<WordHypothesisSet> {
    let unit = median_gap(lines);
    gap_factors
        .iter()
        .enumerate()
        .map(|(set, &factor)| {
            let gap_threshold = factor * unit;
            let mut boxes = Vec::new();
            for line in lines {
                let mut word: Option<BBox> = None;
                let mut k = 0;
                let mut flush = |b: BBox, k: &mut usize| {
                    boxes.push(WordBox::new(
                        format!("t{set}-l{}-w{}", line.line_index, *k),
                        b,
                        line.line_index,
                    ));
                    *k += 1;
                };
                for m in &line.members {
                    word = Some(match word {
                        Some(cur) if (m.bbox.x as f64 - cur.right() as f64) <= gap_threshold => {
                            cur.union(&m.bbox)
                        }
                        Some(cur) => {
                            flush(cur, &mut k);
                            m.bbox
                        }
                        None => m.bbox,
                    });
                }
                if let Some(cur) = word {
                    flush(cur, &mut k);
                }
            }
            WordHypothesisSet {
                threshold_id: format!("t{set}"),
                gap_threshold,
                boxes,
            }
        })
        .collect()
}

/// Full segmentation result for one page.
#[derive(Debug, Clone)]
pub struct PageSegmentation {
    pub lines: Vec<LineHypothesis>,
    pub hypotheses: Vec<WordHypothesisSet>,
}

impl PageSegmentation {
    /// Union of all hypothesis sets with duplicate boxes removed, ids prefixed
    /// by `prefix`. Earlier sets win on duplicates.
    pub fn merged_words(&self, prefix: &str) -> Vec<WordBox> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for set in &self.hypotheses {
            for b in &set.boxes {
                if seen.insert((b.bbox, b.line_index)) {
                    let mut w = b.clone();
                    w.word_id = format!("{prefix}{}", b.word_id);
                    out.push(w);
                }
            }
        }
        out
    }
}

pub fn segment_page(image: &GrayImage, cfg: &SegmenterConfig) -> PageSegmentation {
    let ccs = extract_components(image, cfg.binarize_threshold);
    let classes = partition_components(ccs, cfg.small_factor, cfg.large_factor);
    let scale = page_scale(&classes, cfg.page_scale_factor);
    let lines = build_lines(&classes, scale, cfg.cost_threshold);
    let hypotheses = group_words(&lines, &cfg.gap_factors);
    PageSegmentation { lines, hypotheses }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank(w: u32, h: u32) -> GrayImage {
        GrayImage::from_pixel(w, h, Luma([255]))
    }

    fn fill(img: &mut GrayImage, x: u32, y: u32, w: u32, h: u32) {
        for yy in y..y + h {
            for xx in x..x + w {
                img.put_pixel(xx, yy, Luma([0]));
            }
        }
    }

    #[test]
    fn white_page_has_no_components() {
        assert!(extract_components(&blank(40, 30), None).is_empty());
    }

    #[test]
    fn single_square() {
        let mut img = blank(40, 40);
        fill(&mut img, 5, 5, 10, 10);
        let ccs = extract_components(&img, None);
        assert_eq!(ccs.len(), 1);
        assert_eq!(ccs[0].bbox, BBox::new(5, 5, 10, 10));
        assert_eq!(ccs[0].pixel_count, 100);
        assert_eq!(ccs[0].centroid, (9.5, 9.5));
    }

    #[test]
    fn two_squares_sorted() {
        let mut img = blank(60, 60);
        fill(&mut img, 30, 40, 5, 5);
        fill(&mut img, 2, 3, 4, 4);
        let ccs = extract_components(&img, None);
        assert_eq!(ccs.len(), 2);
        assert_eq!(ccs[0].bbox, BBox::new(2, 3, 4, 4));
        assert_eq!(ccs[1].bbox, BBox::new(30, 40, 5, 5));
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let mut img = blank(10, 10);
        fill(&mut img, 2, 2, 1, 1);
        fill(&mut img, 3, 3, 1, 1);
        assert_eq!(extract_components(&img, None).len(), 1);
    }

    fn heights(hs: &[u32]) -> Vec<ConnectedComponent> {
        hs.iter()
            .enumerate()
            .map(|(i, &h)| ConnectedComponent::rect(i as u32 * 20, 0, 5, h))
            .collect()
    }

    #[test]
    fn partition_by_median() {
        let c = partition_components(heights(&[2, 10, 10, 10, 30]), 0.4, 2.0);
        let h = |v: &[ConnectedComponent]| v.iter().map(|c| c.bbox.h).collect::<Vec<_>>();
        assert_eq!(h(&c.small), vec![2]);
        assert_eq!(h(&c.medium), vec![10, 10, 10]);
        assert_eq!(h(&c.large), vec![30]);

        let same = partition_components(heights(&[7, 7, 7]), 0.4, 2.0);
        assert_eq!(same.medium.len(), 3);
        let single = partition_components(heights(&[4]), 0.4, 2.0);
        assert_eq!(single.medium.len(), 1);
    }

    #[test]
    fn pair_cost_examples() {
        let a = ConnectedComponent::rect(0, 0, 10, 10);
        let b = ConnectedComponent::rect(12, 0, 10, 10);
        assert!((pair_cost(&a, &b, 100.0) - 2.88).abs() < 1e-12);
        assert_eq!(pair_cost(&a, &b, 100.0), pair_cost(&b, &a, 100.0));
        assert_eq!(pair_cost(&a, &a.clone(), 100.0), 3.0);
        let below = ConnectedComponent::rect(0, 30, 10, 10);
        let c = pair_cost(&a, &below, 100.0);
        assert!((c - (1.0 - 0.3)).abs() < 1e-12 && c <= 1.0);
    }

    fn row(y: u32, n: u32) -> Vec<ConnectedComponent> {
        (0..n)
            .map(|i| ConnectedComponent::rect(i * 12, y, 10, 10))
            .collect()
    }

    #[test]
    fn one_row_one_line() {
        let classes = SizeClasses {
            medium: row(0, 3),
            ..Default::default()
        };
        let lines = build_lines(&classes, 100.0, 1.5);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].members.len(), 3);
    }

    #[test]
    fn two_rows_and_a_dot() {
        let mut medium = row(50, 4);
        medium.extend(row(10, 4));
        let classes = SizeClasses {
            small: vec![ConnectedComponent::rect(13, 4, 2, 2)],
            medium,
            ..Default::default()
        };
        let lines = build_lines(&classes, 30.0, 1.5);
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].line_index, 0);
        assert_eq!(lines[0].bbox.y, 4);
        assert_eq!(lines[0].members.len(), 5);
        assert_eq!(lines[1].bbox.y, 50);
    }

    #[test]
    fn large_component_split_between_lines() {
        let mut medium = row(10, 4);
        medium.extend(row(40, 4));
        // vertical bar from line 0 into line 1
        let bar = ConnectedComponent::rect(60, 10, 3, 40);
        let classes = SizeClasses {
            medium,
            large: vec![bar],
            ..Default::default()
        };
        let lines = build_lines(&classes, 30.0, 1.5);
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].members.len(), 5);
        assert_eq!(lines[1].members.len(), 5);
        // cut at the middle of the gap between y=20 and y=40
        assert_eq!(lines[0].bbox.bottom(), 30);
        assert_eq!(lines[1].members.iter().map(|m| m.bbox.y).min(), Some(30));
    }

    #[test]
    fn empty_medium_no_lines() {
        let classes = SizeClasses {
            small: heights(&[1]),
            ..Default::default()
        };
        assert!(build_lines(&classes, 10.0, 1.5).is_empty());
    }

    fn line_with_gaps(gaps: &[u32]) -> LineHypothesis {
        let mut x = 0;
        let mut members = vec![ConnectedComponent::rect(0, 0, 5, 10)];
        for g in gaps {
            x += 5 + g;
            members.push(ConnectedComponent::rect(x, 0, 5, 10));
        }
        LineHypothesis {
            line_index: 0,
            bbox: union_bbox(&members),
            members,
        }
    }

    #[test]
    fn word_grouping() {
        let line = line_with_gaps(&[2, 2, 12, 2]);
        assert_eq!(median_gap(std::slice::from_ref(&line)), 2.0);
        let sets = group_words(std::slice::from_ref(&line), &[1.5]);
        assert_eq!(sets[0].boxes.len(), 2);
        assert_eq!(sets[0].boxes[0].bbox, BBox::new(0, 0, 19, 10));

        let inf = group_words(std::slice::from_ref(&line), &[f64::INFINITY]);
        assert_eq!(inf[0].boxes.len(), 1);

        let three = group_words(&[line], &[1.0, 1.5, 2.0]);
        assert_eq!(three.len(), 3);
        for s in &three {
            assert!(s.boxes.iter().all(|b| b.line_index == 0));
        }
    }

    #[test]
    fn single_member_line_is_one_word() {
        let line = line_with_gaps(&[]);
        let sets = group_words(&[line], &[1.0]);
        assert_eq!(sets[0].boxes.len(), 1);
    }
}
