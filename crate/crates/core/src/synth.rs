//! Synthetic benchmarks: multivariate Gaussians with sparse block precision
//! matrices, optionally pushed through per-coordinate empirical CDFs to make
//! the joint distribution non-Gaussian while preserving rank dependence.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{FdeError, Result};

const BLOCK_RETRIES: usize = 100;
/// Chance that a block of three or more vertices gets one extra edge beyond
/// its spanning tree, creating a cycle.
const EXTRA_EDGE_PROB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    Cdf,
}

/// Generator parameters. Defaults follow the synthetic benchmark setup:
/// mean 0.5, precision diagonal 62, block off-diagonals drawn from
/// [-30, -10], connected blocks of at most eight vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub d: usize,
    pub n: usize,
    pub mean: f64,
    pub diag: f64,
    pub offdiag_range: (f64, f64),
    pub max_block: usize,
    /// Fraction of vertices assigned to blocks; the rest stay isolated.
    pub block_coverage: f64,
    pub seed: u64,
    pub transform: Transform,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            d: 100,
            n: 800,
            mean: 0.5,
            diag: 62.0,
            offdiag_range: (-30.0, -10.0),
            max_block: 8,
            block_coverage: 1.0,
            seed: 0,
            transform: Transform::None,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(FdeError::InvalidInput("d and n must be positive".into()));
        }
        if self.diag.is_nan() || self.diag <= 0.0 {
            return Err(FdeError::InvalidInput(
                "precision diagonal must be positive".into(),
            ));
        }
        if self.offdiag_range.0 > self.offdiag_range.1 {
            return Err(FdeError::InvalidInput(
                "off-diagonal range must satisfy lo <= hi".into(),
            ));
        }
        if self.max_block < 2 {
            return Err(FdeError::InvalidInput("max_block must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.block_coverage) {
            return Err(FdeError::InvalidInput(
                "block_coverage must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub data: DataMatrix,
    /// Support of the precision matrix off-diagonal, as `(i, j)` with `i < j`.
    pub truth: Vec<(usize, usize)>,
    pub omega: DMatrix<f64>,
}

/// Edges of one block: a random spanning tree over the members, plus
/// occasionally one extra edge that closes a cycle.
fn block_edges(members: &[usize], rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let k = members.len();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(k);
    for v in 1..k {
        let parent = rng.gen_range(0..v);
        edges.push((members[parent].min(members[v]), members[parent].max(members[v])));
    }
    if k >= 3 && rng.gen::<f64>() < EXTRA_EDGE_PROB {
        loop {
            let a = rng.gen_range(0..k - 1);
            let b = rng.gen_range(a + 1..k);
            let e = (members[a].min(members[b]), members[a].max(members[b]));
            if !edges.contains(&e) {
                edges.push(e);
                break;
            }
        }
    }
    edges
}

fn block_is_pd(members: &[usize], edges: &[(usize, usize, f64)], diag: f64) -> bool {
    let k = members.len();
    let index: std::collections::HashMap<usize, usize> = members
        .iter()
        .enumerate()
        .map(|(l, &v)| (v, l))
        .collect();
    let mut sub = DMatrix::from_diagonal_element(k, k, diag);
    for &(i, j, w) in edges {
        let (a, b) = (index[&i], index[&j]);
        sub[(a, b)] = w;
        sub[(b, a)] = w;
    }
    sub.cholesky().is_some()
}

/// Draw samples from `N(mean, Omega^{-1})` with a block-sparse `Omega`,
/// returning the data and the true edge support. Deterministic given the
/// spec (ChaCha8 stream keyed by the seed).
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;

    // partition a shuffled vertex list into random blocks up to the
    // requested coverage
    let mut vertices: Vec<usize> = (0..d).collect();
    vertices.shuffle(&mut rng);
    let target = (spec.block_coverage * d as f64).floor() as usize;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut used = 0;
    while target.saturating_sub(used) >= 2 {
        let cap = spec.max_block.min(target - used);
        let size = if cap == 2 { 2 } else { rng.gen_range(2..=cap) };
        blocks.push(vertices[used..used + size].to_vec());
        used += size;
    }

    let mut omega = DMatrix::from_diagonal_element(d, d, spec.diag);
    let mut truth = Vec::new();
    let (lo, hi) = spec.offdiag_range;
    for members in &blocks {
        let mut accepted = None;
        for _ in 0..BLOCK_RETRIES {
            let weighted: Vec<(usize, usize, f64)> = block_edges(members, &mut rng)
                .into_iter()
                .map(|(i, j)| (i, j, rng.gen_range(lo..=hi)))
                .collect();
            if block_is_pd(members, &weighted, spec.diag) {
                accepted = Some(weighted);
                break;
            }
        }
        let weighted = accepted.ok_or(FdeError::NotPositiveDefinite {
            retries: BLOCK_RETRIES,
        })?;
        for (i, j, w) in weighted {
            omega[(i, j)] = w;
            omega[(j, i)] = w;
            truth.push((i, j));
        }
    }
    truth.sort_unstable();

    // X = mean + L^{-T} z gives covariance Omega^{-1}
    let chol = omega
        .clone()
        .cholesky()
        .ok_or(FdeError::NotPositiveDefinite {
            retries: BLOCK_RETRIES,
        })?;
    let lt = chol.l().transpose();
    let mut rows = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = lt
            .solve_upper_triangular(&z)
            .expect("Cholesky factor has positive diagonal");
        rows.push(x.iter().map(|v| v + spec.mean).collect::<Vec<f64>>());
    }
    let mut data = DataMatrix::from_rows(rows)?;
    if spec.transform == Transform::Cdf {
        data = cdf_transform(&data);
    }
    Ok(SynthOutput { data, truth, omega })
}

/// Replace each column by its empirical CDF ranks mapped to `(0, 1)` via
/// `rank / (n + 1)`; ties get the average rank. Order statistics, and hence
/// all rank correlations, are preserved.
pub fn cdf_transform(data: &DataMatrix) -> DataMatrix {
    let (n, d) = (data.n(), data.d());
    let mut values = vec![0.0; n * d];
    for j in 0..d {
        let column = data.column(j);
        let ranks = average_ranks(&column);
        for s in 0..n {
            values[s * d + j] = ranks[s] / (n as f64 + 1.0);
        }
    }
    DataMatrix::from_vec(n, d, values).expect("shape preserved")
}

/// One-based ranks with ties averaged.
fn average_ranks(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut pos = 0;
    while pos < n {
        let mut end = pos + 1;
        while end < n && column[order[end]] == column[order[pos]] {
            end += 1;
        }
        let avg = (pos + 1 + end) as f64 / 2.0; // mean of ranks pos+1 ..= end
        for &idx in &order[pos..end] {
            ranks[idx] = avg;
        }
        pos = end;
    }
    ranks
}
