//! Pairwise mutual-information estimation on evaluation grids and the
//! d x d edge-weight matrix.
//!
//! Three plug-in estimators are available. `medium` integrates the log-ratio
//! against the bivariate fit; `fast` combines plug-in entropies of the
//! univariate fits; `slow` does the same with marginals obtained by
//! integrating the bivariate fit. Cross weights integrate a held-out
//! bivariate fit against the log-ratio of training fits and may be negative.
//!
//! The matrix computation precomputes per-variable kernel rows once per grid
//! point and reuses them across all pairs, so each kernel term is evaluated
//! exactly once per variable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::FitConfig;
use crate::data::DataMatrix;
use crate::error::{FdeError, Result};
use crate::grid::Grid;
use crate::kde::{
    self, bandwidth_bivariate, bandwidth_univariate, fit_univariate, BivariateKde, KeepDim,
    KernelRows, UnivariateKde,
};
use crate::kernel::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiEstimator {
    Fast,
    Medium,
    Slow,
}

impl MiEstimator {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "fast" => Ok(MiEstimator::Fast),
            "medium" => Ok(MiEstimator::Medium),
            "slow" => Ok(MiEstimator::Slow),
            other => Err(FdeError::InvalidInput(format!(
                "unknown estimator {other:?}; expected fast, medium or slow"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MiEstimator::Fast => "fast",
            MiEstimator::Medium => "medium",
            MiEstimator::Slow => "slow",
        }
    }
}

/// Which quantity a matrix holds: one of the three training estimators, or
/// held-out cross weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiTag {
    Fast,
    Medium,
    Slow,
    Cross,
}

impl From<MiEstimator> for MiTag {
    fn from(e: MiEstimator) -> Self {
        match e {
            MiEstimator::Fast => MiTag::Fast,
            MiEstimator::Medium => MiTag::Medium,
            MiEstimator::Slow => MiTag::Slow,
        }
    }
}

/// Symmetric d x d matrix of pairwise edge weights. Each off-diagonal entry
/// is computed once and mirrored; the diagonal is zero and unused.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMatrix {
    d: usize,
    entries: Vec<f64>,
    pub tag: MiTag,
}

impl MiMatrix {
    pub fn zeros(d: usize, tag: MiTag) -> Self {
        MiMatrix {
            d,
            entries: vec![0.0; d * d],
            tag,
        }
    }

    /// Build from explicit upper-triangle weights, mirroring them.
    pub fn from_pairs(d: usize, tag: MiTag, mut weights: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = MiMatrix::zeros(d, tag);
        for i in 0..d {
            for j in (i + 1)..d {
                m.set_pair(i, j, weights(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn set_pair(&mut self, i: usize, j: usize, w: f64) {
        self.entries[i * self.d + j] = w;
        self.entries[j * self.d + i] = w;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// All unordered pairs `(i, j, weight)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.d).flat_map(move |i| ((i + 1)..self.d).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn scale(&self, c: f64) -> MiMatrix {
        MiMatrix {
            d: self.d,
            entries: self.entries.iter().map(|v| v * c).collect(),
            tag: self.tag,
        }
    }
}

/// Grid sum `(1/m^2) * sum_kl pb * ln(pb / (pi * pj))`.
///
/// The ratio is formed before the logarithm, so a bivariate grid that equals
/// the product of its factors gives exactly zero.
pub fn mi_medium(biv: &BivariateKde, uni_i: &UnivariateKde, uni_j: &UnivariateKde) -> f64 {
    let m = biv.m;
    debug_assert_eq!(uni_i.values.len(), m);
    debug_assert_eq!(uni_j.values.len(), m);
    let mut acc = 0.0;
    for k in 0..m {
        let pi = uni_i.values[k];
        for l in 0..m {
            let pb = biv.value(k, l);
            acc += pb * (pb / (pi * uni_j.values[l])).ln();
        }
    }
    acc / (m * m) as f64
}

fn neg_entropy_grid(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &p in values {
        acc += p * p.ln();
    }
    acc / values.len() as f64
}

/// Plug-in entropy combination: bivariate negative entropy, weighted `1/m^2`,
/// minus the two univariate `p ln p` sums weighted `1/m`. Not guaranteed
/// nonnegative.
pub fn mi_fast(biv: &BivariateKde, uni_i: &UnivariateKde, uni_j: &UnivariateKde) -> f64 {
    let m = biv.m;
    let mut acc = 0.0;
    for k in 0..m {
        for l in 0..m {
            let pb = biv.value(k, l);
            acc += pb * pb.ln();
        }
    }
    acc / (m * m) as f64 - neg_entropy_grid(&uni_i.values) - neg_entropy_grid(&uni_j.values)
}

/// Same combination as [`mi_fast`] but with marginals obtained from the
/// bivariate fit itself (see [`kde::marginalize_bivariate`]).
pub fn mi_slow(biv: &BivariateKde, marginal_i: &[f64], marginal_j: &[f64]) -> f64 {
    let m = biv.m;
    debug_assert_eq!(marginal_i.len(), m);
    debug_assert_eq!(marginal_j.len(), m);
    let mut acc = 0.0;
    for k in 0..m {
        for l in 0..m {
            let pb = biv.value(k, l);
            acc += pb * pb.ln();
        }
    }
    acc / (m * m) as f64 - neg_entropy_grid(marginal_i) - neg_entropy_grid(marginal_j)
}

/// Held-out cross weight: integrates the held-out bivariate fit against the
/// log-ratio of the training fits. Negative values flag harmful edges.
pub fn cross_mi(
    biv_held: &BivariateKde,
    biv_train: &BivariateKde,
    uni_train_i: &UnivariateKde,
    uni_train_j: &UnivariateKde,
) -> f64 {
    let m = biv_held.m;
    debug_assert_eq!(biv_train.m, m);
    let mut acc = 0.0;
    for k in 0..m {
        let pi = uni_train_i.values[k];
        for l in 0..m {
            let p2 = biv_held.value(k, l);
            let p1 = biv_train.value(k, l);
            acc += p2 * (p1 / (pi * uni_train_j.values[l])).ln();
        }
    }
    acc / (m * m) as f64
}

/// Kernel density fits of one data split on a shared grid: univariate fits
/// with per-variable plug-in bandwidths, plus per-variable kernel rows at
/// the bivariate bandwidths, from which any pair's bivariate grid follows.
#[derive(Debug, Clone)]
pub struct GridFits {
    pub grid: Grid,
    pub kernel: KernelSpec,
    pub floor: f64,
    pub data: DataMatrix,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub uni: Vec<UnivariateKde>,
    columns: Vec<Vec<f64>>,
    rows2: Vec<KernelRows>,
}

impl GridFits {
    /// Fit all univariate estimates and bivariate kernel rows for a split.
    /// The data must already live in the unit cube.
    pub fn fit(data: &DataMatrix, config: &FitConfig) -> Result<Self> {
        let d = data.d();
        let mut h1 = Vec::with_capacity(d);
        let mut h2 = Vec::with_capacity(d);
        for j in 0..d {
            let column = data.column(j);
            h1.push(bandwidth_univariate(&column, config.beta).map_err(|e| tag_dim(e, j))?);
            h2.push(bandwidth_bivariate(&column, config.beta).map_err(|e| tag_dim(e, j))?);
        }
        Self::with_bandwidths(data, config, h1, h2)
    }

    /// Build the fits with externally supplied per-variable bandwidths, as
    /// when reconstructing a persisted model.
    pub fn with_bandwidths(
        data: &DataMatrix,
        config: &FitConfig,
        h1: Vec<f64>,
        h2: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let d = data.d();
        if h1.len() != d || h2.len() != d {
            return Err(FdeError::InvalidInput(format!(
                "expected {d} bandwidths per kind, got {} and {}",
                h1.len(),
                h2.len()
            )));
        }
        if h1.iter().chain(&h2).any(|&h| h.is_nan() || h <= 0.0) {
            return Err(FdeError::InvalidInput(
                "bandwidths must be positive".into(),
            ));
        }
        let grid = Grid::uniform(config.m);
        let mut uni = Vec::with_capacity(d);
        let mut rows2 = Vec::with_capacity(d);
        let mut columns = Vec::with_capacity(d);
        for j in 0..d {
            let column = data.column(j);
            let mut fit = fit_univariate(&column, &config.kernel, &grid, h1[j], config.floor);
            fit.dim_index = j;
            uni.push(fit);
            rows2.push(KernelRows::compute(&column, &config.kernel, &grid, h2[j]));
            columns.push(column);
        }
        Ok(GridFits {
            grid,
            kernel: config.kernel,
            floor: config.floor,
            data: data.clone(),
            h1,
            h2,
            uni,
            columns,
            rows2,
        })
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    /// Cached training column for off-grid evaluation.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Bivariate grid fit for the pair `(i, j)`, floored.
    pub fn bivariate(&self, i: usize, j: usize) -> BivariateKde {
        let mut fit = kde::fit_bivariate_from_rows(&self.rows2[i], &self.rows2[j], self.floor);
        fit.dims = (i, j);
        fit
    }

    /// Univariate cross-entropy terms `(1/m) * sum_k held(x_k) * ln train(x_k)`
    /// for every vertex; `self` is the training split.
    fn uni_cross_terms(&self, held: &GridFits) -> Vec<f64> {
        (0..self.d())
            .map(|j| {
                let mut acc = 0.0;
                for (p2, p1) in held.uni[j].values.iter().zip(&self.uni[j].values) {
                    acc += p2 * p1.ln();
                }
                acc / self.grid.m() as f64
            })
            .collect()
    }
}

fn tag_dim(e: FdeError, dim: usize) -> FdeError {
    match e {
        FdeError::DegenerateColumn { .. } => FdeError::DegenerateColumn { dim },
        other => other,
    }
}

fn pair_list(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((i, j));
        }
    }
    pairs
}

fn pair_weight(fits: &GridFits, estimator: MiEstimator, i: usize, j: usize) -> f64 {
    let biv = fits.bivariate(i, j);
    match estimator {
        MiEstimator::Medium => mi_medium(&biv, &fits.uni[i], &fits.uni[j]),
        MiEstimator::Fast => mi_fast(&biv, &fits.uni[i], &fits.uni[j]),
        MiEstimator::Slow => {
            let mi = kde::marginalize_bivariate(&biv, KeepDim::First);
            let mj = kde::marginalize_bivariate(&biv, KeepDim::Second);
            mi_slow(&biv, &mi, &mj)
        }
    }
}

/// Edge-weight matrix over all pairs of fitted variables.
pub fn mi_matrix_from_fits(fits: &GridFits, estimator: MiEstimator, parallel: bool) -> MiMatrix {
    let d = fits.d();
    let pairs = pair_list(d);
    let weights: Vec<((usize, usize), f64)> = if parallel {
        pairs
            .par_iter()
            .map(|&(i, j)| ((i, j), pair_weight(fits, estimator, i, j)))
            .collect()
    } else {
        pairs
            .iter()
            .map(|&(i, j)| ((i, j), pair_weight(fits, estimator, i, j)))
            .collect()
    };
    let mut m = MiMatrix::zeros(d, estimator.into());
    for ((i, j), w) in weights {
        m.set_pair(i, j, w);
    }
    m
}

/// Fit marginals and compute the mutual-information matrix in one shot.
pub fn mi_matrix(data: &DataMatrix, config: &FitConfig, parallel: bool) -> Result<MiMatrix> {
    if data.d() < 2 {
        return Err(FdeError::InvalidInput(format!(
            "mutual information needs d >= 2, got d = {}",
            data.d()
        )));
    }
    let fits = GridFits::fit(data, config)?;
    Ok(mi_matrix_from_fits(&fits, config.estimator, parallel))
}

/// Held-out grid quantities for risk evaluation: cross weights for every
/// pair, plus per-vertex univariate cross-entropy terms.
#[derive(Debug, Clone)]
pub struct HeldoutTerms {
    pub cross: MiMatrix,
    /// `(1/m) * sum_k held(x_k) * ln train(x_k)` per vertex.
    pub uni_cross: Vec<f64>,
}

/// Cross weights of training fits scored on a held-out split.
pub fn heldout_terms(train: &GridFits, held: &GridFits, parallel: bool) -> Result<HeldoutTerms> {
    if train.grid != held.grid {
        return Err(FdeError::GridMismatch(format!(
            "training grid has m = {}, held-out grid m = {}",
            train.grid.m(),
            held.grid.m()
        )));
    }
    if train.d() != held.d() {
        return Err(FdeError::GridMismatch(format!(
            "training split has d = {}, held-out split d = {}",
            train.d(),
            held.d()
        )));
    }
    let d = train.d();
    let pairs = pair_list(d);
    let eval = |&(i, j): &(usize, usize)| {
        let biv2 = held.bivariate(i, j);
        let biv1 = train.bivariate(i, j);
        ((i, j), cross_mi(&biv2, &biv1, &train.uni[i], &train.uni[j]))
    };
    let weights: Vec<((usize, usize), f64)> = if parallel {
        pairs.par_iter().map(eval).collect()
    } else {
        pairs.iter().map(eval).collect()
    };
    let mut cross = MiMatrix::zeros(d, MiTag::Cross);
    for ((i, j), w) in weights {
        cross.set_pair(i, j, w);
    }
    Ok(HeldoutTerms {
        cross,
        uni_cross: train.uni_cross_terms(held),
    })
}
