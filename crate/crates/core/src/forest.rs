//! Maximum-weight spanning forest construction and held-out model selection.
//!
//! `chow_liu` runs greedy acyclic edge insertion in non-increasing weight
//! order (Kruskal), recording the full insertion order so every prefix
//! `E(0) ⊂ E(1) ⊂ ... ⊂ E(d-1)` is available for selection afterwards.
//! Ties are broken lexicographically by `(i, j)` so runs are reproducible.

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::kde::{eval_bivariate, eval_univariate};
use crate::mi::{GridFits, HeldoutTerms, MiMatrix};

/// Undirected weighted edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(i: usize, j: usize, weight: f64) -> Self {
        assert!(i < j, "edges are stored with i < j");
        Edge { i, j, weight }
    }
}

/// Union-find over vertices with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Join the two classes; false if already connected.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
        true
    }

    pub fn connected(&mut self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }
}

/// An acyclic edge set over `d` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub d: usize,
    pub edges: Vec<Edge>,
}

impl Forest {
    pub fn empty(d: usize) -> Self {
        Forest { d, edges: Vec::new() }
    }

    pub fn new(d: usize, edges: Vec<Edge>) -> Self {
        let forest = Forest { d, edges };
        debug_assert!(forest.is_acyclic());
        forest
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut uf = UnionFind::new(self.d);
        self.edges.iter().all(|e| uf.union(e.i, e.j))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.d];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Connected components as (vertices, edge indices), including
    /// singletons.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut uf = UnionFind::new(self.d);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        let mut by_root: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> =
            std::collections::BTreeMap::new();
        for v in 0..self.d {
            let root = uf.find(v);
            by_root.entry(root).or_default().0.push(v);
        }
        for (idx, e) in self.edges.iter().enumerate() {
            let root = uf.find(e.i);
            by_root.get_mut(&root).unwrap().1.push(idx);
        }
        by_root.into_values().collect()
    }

    /// Largest component size measured in edges.
    pub fn max_component_edges(&self) -> usize {
        self.components()
            .iter()
            .map(|(_, edges)| edges.len())
            .max()
            .unwrap_or(0)
    }
}

/// The full Chow-Liu insertion order; prefix `k` is the best `k`-edge forest
/// visited by the greedy run.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSequence {
    pub d: usize,
    pub edges: Vec<Edge>,
}

impl ForestSequence {
    /// Number of stored edges (the largest selectable `k`).
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn prefix(&self, k: usize) -> Forest {
        Forest {
            d: self.d,
            edges: self.edges[..k.min(self.edges.len())].to_vec(),
        }
    }

    pub fn full(&self) -> Forest {
        self.prefix(self.edges.len())
    }
}

/// Weight-sorted edge list with the deterministic tie rule: non-increasing
/// weight, then lexicographic `(i, j)`.
fn sorted_edges(m: &MiMatrix) -> Vec<Edge> {
    let mut edges: Vec<Edge> = m.pairs().map(|(i, j, w)| Edge::new(i, j, w)).collect();
    edges.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .expect("edge weights must not be NaN")
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    edges
}

/// Greedy maximum-weight acyclic insertion over all pairs, recording the
/// order. Runs to `d - 1` edges regardless of weight signs.
pub fn chow_liu(m: &MiMatrix) -> ForestSequence {
    let d = m.d();
    let mut uf = UnionFind::new(d);
    let mut inserted = Vec::with_capacity(d.saturating_sub(1));
    for edge in sorted_edges(m) {
        if inserted.len() + 1 == d {
            break;
        }
        if uf.union(edge.i, edge.j) {
            inserted.push(edge);
        }
    }
    ForestSequence { d, edges: inserted }
}

/// Kruskal on held-out cross weights, stopping before any edge with
/// weight <= 0. Over all forests this maximizes the total cross weight.
pub fn build_heldout_forest(cross: &MiMatrix) -> Forest {
    let d = cross.d();
    let mut uf = UnionFind::new(d);
    let mut edges = Vec::new();
    for edge in sorted_edges(cross) {
        if edge.weight <= 0.0 {
            break;
        }
        if uf.union(edge.i, edge.j) {
            edges.push(edge);
        }
    }
    Forest { d, edges }
}

/// Held-out negative log-likelihood risk of a forest under precomputed grid
/// terms: minus the cross weights of its edges, minus the univariate
/// cross-entropy terms of every vertex.
pub fn risk_from_terms(forest: &Forest, terms: &HeldoutTerms) -> f64 {
    let edge_part: f64 = forest
        .edges
        .iter()
        .map(|e| terms.cross.get(e.i, e.j))
        .sum();
    let vertex_part: f64 = terms.uni_cross.iter().sum();
    -edge_part - vertex_part
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    GridRisk,
    SampleLoglik,
}

impl SelectMode {
    pub fn from_name(name: &str) -> crate::error::Result<Self> {
        match name {
            "grid" | "grid_risk" => Ok(SelectMode::GridRisk),
            "sample" | "sample_loglik" => Ok(SelectMode::SampleLoglik),
            other => Err(crate::error::FdeError::InvalidInput(format!(
                "unknown selection mode {other:?}; expected grid or sample"
            ))),
        }
    }
}

/// Result of held-out prefix selection. `curve[k]` is the held-out score of
/// prefix `k` (higher is better in both modes); `k_hat` maximizes it, with
/// ties resolved toward the sparser model.
#[derive(Debug, Clone)]
pub struct Selection {
    pub k_hat: usize,
    pub curve: Vec<f64>,
    pub mode: SelectMode,
}

impl Selection {
    fn from_curve(curve: Vec<f64>, mode: SelectMode) -> Self {
        let mut k_hat = 0;
        for (k, &score) in curve.iter().enumerate() {
            if score > curve[k_hat] {
                k_hat = k;
            }
        }
        Selection { k_hat, curve, mode }
    }
}

/// Grid-risk selection over all nested prefixes in one pass: the score of
/// prefix `k` is minus its held-out risk, so adding edge `k` changes the
/// score by exactly that edge's cross weight.
pub fn select_k_grid(seq: &ForestSequence, terms: &HeldoutTerms) -> Selection {
    let base = -risk_from_terms(&seq.prefix(0), terms);
    let mut curve = Vec::with_capacity(seq.len() + 1);
    let mut score = base;
    curve.push(score);
    for e in &seq.edges {
        score += terms.cross.get(e.i, e.j);
        curve.push(score);
    }
    Selection::from_curve(curve, SelectMode::GridRisk)
}

/// Sample-likelihood selection: the score of prefix `k` is the mean held-out
/// log-likelihood of the prefix model, evaluated by exact kernel sums at the
/// held-out rows. Edge contributions accumulate over the insertion order.
pub fn select_k_sample(
    seq: &ForestSequence,
    train: &GridFits,
    held: &DataMatrix,
) -> Selection {
    let n2 = held.n() as f64;
    let kernel = &train.kernel;
    let floor = train.floor;

    // log-likelihood of the empty forest: sum of univariate terms
    let mut base = 0.0;
    for j in 0..train.d() {
        let col = train.column(j);
        let mut acc = 0.0;
        for s in 0..held.n() {
            acc += eval_univariate(col, kernel, train.h1[j], floor, held.get(s, j)).ln();
        }
        base += acc / n2;
    }

    let mut curve = Vec::with_capacity(seq.len() + 1);
    let mut score = base;
    curve.push(score);
    for e in &seq.edges {
        let col_i = train.column(e.i);
        let col_j = train.column(e.j);
        let mut acc = 0.0;
        for s in 0..held.n() {
            let (x, y) = (held.get(s, e.i), held.get(s, e.j));
            let pb = eval_bivariate(
                col_i,
                col_j,
                kernel,
                train.h2[e.i],
                train.h2[e.j],
                floor,
                x,
                y,
            );
            let pi = eval_univariate(col_i, kernel, train.h1[e.i], floor, x);
            let pj = eval_univariate(col_j, kernel, train.h1[e.j], floor, y);
            acc += (pb / (pi * pj)).ln();
        }
        score += acc / n2;
        curve.push(score);
    }
    Selection::from_curve(curve, SelectMode::SampleLoglik)
}
