//! Nearest-neighbour search over unit vectors.
//!
//! [`IndexMode::Exact`] scans every item and is the reference answer.
//! [`IndexMode::KdTree`] splits on the highest-variance coordinate at the
//! median and answers queries with best-bin-first descent, visiting at most
//! `max_visited_leaves` leaves. With an unbounded leaf budget the tree search
//! is exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    Exact,
    KdTree,
}

impl std::str::FromStr for IndexMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "kdtree" => Ok(Self::KdTree),
            other => Err(format!(
                "unknown index mode `{other}` (expected exact|kdtree)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexParams {
    pub mode: IndexMode,
    pub leaf_size: usize,
    /// `usize::MAX` disables the budget.
    pub max_visited_leaves: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            mode: IndexMode::KdTree,
            leaf_size: 16,
            max_visited_leaves: 64,
        }
    }
}

impl IndexParams {
    pub fn exact() -> Self {
        Self {
            mode: IndexMode::Exact,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub id: String,
    pub distance: f64,
}

#[derive(Debug)]
enum Node {
    Leaf {
        items: Vec<usize>,
    },
    Split {
        dim: usize,
        value: f32,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Immutable nearest-neighbour index. Vectors are re-normalized on build.
#[derive(Debug)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    id_rank: Vec<u32>,
    params: IndexParams,
    root: Option<Node>,
}

/// Scales `v` to unit L2 norm in place; zero vectors are left untouched.
pub fn normalize(v: &mut [f32]) {
    let norm = v
        .iter()
        .map(|x| (*x as f64) * (*x as f64))
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (*x as f64 / norm) as f32;
        }
    }
}

/// Euclidean distance accumulated in `f64`.
#[inline]
pub fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

impl VectorIndex {
    /// Builds an index. Panics if vector dimensions differ; the ids must be unique.
    pub fn build<I, S>(items: I, params: IndexParams) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (id, mut v) in items {
            let d = *dim.get_or_insert(v.len());
            assert_eq!(v.len(), d, "all vectors must share one dimension");
            normalize(&mut v);
            ids.push(id.into());
            data.extend_from_slice(&v);
        }
        let dim = dim.unwrap_or(0);
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let mut id_rank = vec![0u32; ids.len()];
        for (rank, &i) in order.iter().enumerate() {
            id_rank[i] = rank as u32;
        }
        let mut index = Self {
            dim,
            ids,
            data,
            id_rank,
            params,
            root: None,
        };
        if params.mode == IndexMode::KdTree && !index.ids.is_empty() {
            let all: Vec<usize> = (0..index.ids.len()).collect();
            index.root = Some(index.build_node(all, params.leaf_size.max(1)));
        }
        index
    }

    fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn build_node(&self, mut items: Vec<usize>, leaf_size: usize) -> Node {
        if items.len() <= leaf_size {
            return Node::Leaf { items };
        }
        let n = items.len() as f64;
        let mut best_dim = 0;
        let mut best_var = -1.0;
        for d in 0..self.dim {
            let mean = items.iter().map(|&i| self.vector(i)[d] as f64).sum::<f64>() / n;
            let var = items
                .iter()
                .map(|&i| {
                    let x = self.vector(i)[d] as f64 - mean;
                    x * x
                })
                .sum::<f64>();
            if var > best_var {
                best_var = var;
                best_dim = d;
            }
        }
        if best_var <= 0.0 {
            return Node::Leaf { items };
        }
        items.sort_by(|&a, &b| {
            self.vector(a)[best_dim]
                .total_cmp(&self.vector(b)[best_dim])
                .then(a.cmp(&b))
        });
        let mid = items.len() / 2;
        let value = self.vector(items[mid])[best_dim];
        let right = items.split_off(mid);
        Node::Split {
            dim: best_dim,
            value,
            left: Box::new(self.build_node(items, leaf_size)),
            right: Box::new(self.build_node(right, leaf_size)),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> IndexParams {
        self.params
    }

    /// Returns up to `k` neighbours by ascending L2 distance, ties by id.
    ///
    /// `q` is used as given; callers pass unit vectors.
    pub fn query_knn(&self, q: &[f32], k: usize) -> Vec<Neighbor> {
        assert!(k >= 1, "k must be at least 1");
        if self.ids.is_empty() {
            return Vec::new();
        }
        assert_eq!(q.len(), self.dim, "query dimension mismatch");
        let mut best = KBest::new(k);
        match &self.root {
            None => {
                for i in 0..self.ids.len() {
                    best.offer(l2_distance(q, self.vector(i)), i, self.id_rank[i]);
                }
            }
            Some(root) => self.search_tree(root, q, &mut best),
        }
        best.into_sorted()
            .into_iter()
            .map(|(distance, i)| Neighbor {
                id: self.ids[i].clone(),
                distance,
            })
            .collect()
    }

    fn search_tree(&self, root: &Node, q: &[f32], best: &mut KBest) {
        let budget = self.params.max_visited_leaves.max(1);
        let mut visited = 0usize;
        let mut queue = BinaryHeap::new();
        queue.push(Pending {
            bound: 0.0,
            node: root,
        });
        while let Some(Pending { bound, node }) = queue.pop() {
            if visited >= budget {
                break;
            }
            if best.is_full() && bound > best.worst_sq() * (1.0 + 1e-12) {
                break;
            }
            let mut node = node;
            loop {
                match node {
                    Node::Leaf { items } => {
                        for &i in items {
                            best.offer(l2_distance(q, self.vector(i)), i, self.id_rank[i]);
                        }
                        visited += 1;
                        break;
                    }
                    Node::Split {
                        dim,
                        value,
                        left,
                        right,
                    } => {
                        let diff = q[*dim] as f64 - *value as f64;
                        let (near, far) = if diff < 0.0 {
                            (left, right)
                        } else {
                            (right, left)
                        };
                        queue.push(Pending {
                            bound: bound.max(diff * diff),
                            node: far,
                        });
                        node = near;
                    }
                }
            }
        }
    }
}

struct Pending<'a> {
    bound: f64,
    node: &'a Node,
}

impl PartialEq for Pending<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Pending<'_> {}
impl PartialOrd for Pending<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending<'_> {
    // min-heap on bound
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound)
    }
}

/// Bounded max-heap keeping the k smallest (distance, id rank) pairs.
struct KBest {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance: f64,
    rank: u32,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.rank.cmp(&other.rank))
    }
}

impl KBest {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    fn worst_sq(&self) -> f64 {
        self.heap
            .peek()
            .map_or(f64::INFINITY, |c| c.distance * c.distance)
    }

    fn offer(&mut self, distance: f64, index: usize, rank: u32) {
        let cand = Candidate {
            distance,
            rank,
            index,
        };
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(top) = self.heap.peek() {
            if cand < *top {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    fn into_sorted(self) -> Vec<(f64, usize)> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.distance, c.index))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_index_returns_nothing() {
        for params in [IndexParams::exact(), IndexParams::default()] {
            let idx = VectorIndex::build(Vec::<(String, Vec<f32>)>::new(), params);
            assert!(idx.query_knn(&[1.0, 0.0], 3).is_empty());
        }
    }

    #[test]
    fn axis_vectors_are_their_own_neighbors() {
        let items = vec![
            ("x", vec![1.0, 0.0, 0.0]),
            ("y", vec![0.0, 1.0, 0.0]),
            ("z", vec![0.0, 0.0, 1.0]),
        ];
        let idx = VectorIndex::build(items.clone(), IndexParams::exact());
        for (id, v) in &items {
            let r = idx.query_knn(v, 1);
            assert_eq!(r[0].id, *id);
            assert_eq!(r[0].distance, 0.0);
        }
    }

    #[test]
    fn two_point_distances() {
        let idx = VectorIndex::build(
            vec![("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])],
            IndexParams::exact(),
        );
        let r = idx.query_knn(&[1.0, 0.0], 2);
        assert_eq!(
            r[0],
            Neighbor {
                id: "a".into(),
                distance: 0.0
            }
        );
        assert_eq!(r[1].id, "b");
        assert!((r[1].distance - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn k_clamped_to_size() {
        let items = vec![
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("c", vec![1.0, 1.0]),
        ];
        for params in [
            IndexParams::exact(),
            IndexParams {
                leaf_size: 1,
                ..Default::default()
            },
        ] {
            let idx = VectorIndex::build(items.clone(), params);
            assert_eq!(idx.query_knn(&[1.0, 0.0], 5).len(), 3);
        }
    }

    #[test]
    fn ties_break_by_id() {
        let items = vec![("b", vec![0.0, 1.0]), ("a", vec![0.0, -1.0])];
        let idx = VectorIndex::build(items, IndexParams::exact());
        let r = idx.query_knn(&[1.0, 0.0], 2);
        assert_eq!(r[0].id, "a");
        assert_eq!(r[1].id, "b");
    }

    #[test]
    fn build_renormalizes() {
        let idx = VectorIndex::build(vec![("a", vec![3.0, 4.0])], IndexParams::exact());
        let r = idx.query_knn(&[0.6, 0.8], 1);
        assert!(r[0].distance < 1e-7);
    }
}
