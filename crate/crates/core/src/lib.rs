//! Forest-structured nonparametric density estimation.
//!
//! The estimator fits kernel density estimates of all univariate and
//! bivariate marginals on a training split, weighs every variable pair by
//! its estimated mutual information, and assembles forests by greedy
//! maximum-weight acyclic insertion. Model complexity is chosen on a
//! held-out split, either by pruning the Chow-Liu insertion order or by
//! cross-validated forests with a cap on the edges per tree component.
//!
//! Modules:
//! - [`kde`]: plug-in bandwidths, grid fits, off-grid evaluation;
//! - [`mi`]: the three mutual-information estimators, cross weights and the
//!   pairwise weight matrix;
//! - [`forest`]: Kruskal construction, nested prefixes, held-out selection;
//! - [`restricted`]: size-restricted forests with the 1/4-approximation;
//! - [`model`]: evaluable forest densities, the Gaussian baseline and model
//!   persistence;
//! - [`synth`]: sparse-precision Gaussian benchmarks and the empirical-CDF
//!   transform;
//! - [`pipeline`]: rescale/split/fit/select workflows;
//! - [`io`]: CSV and TSV formats.

pub mod config;
pub mod data;
pub mod error;
pub mod forest;
pub mod grid;
pub mod io;
pub mod kde;
pub mod kernel;
pub mod mi;
pub mod model;
pub mod pipeline;
pub mod restricted;
pub mod synth;

pub use config::FitConfig;
pub use data::{rescale_to_unit_cube, AffineMap, DataMatrix, DataSplit};
pub use error::{FdeError, Result};
pub use forest::{
    build_heldout_forest, chow_liu, Edge, Forest, ForestSequence, SelectMode, Selection,
};
pub use grid::Grid;
pub use kde::{
    bandwidth_bivariate, bandwidth_univariate, eval_bivariate, eval_univariate, fit_bivariate,
    fit_univariate, marginalize_bivariate, BivariateKde, KeepDim, UnivariateKde,
};
pub use kernel::{KernelFamily, KernelSpec};
pub use mi::{
    cross_mi, heldout_terms, mi_fast, mi_matrix, mi_medium, mi_slow, GridFits, HeldoutTerms,
    MiEstimator, MiMatrix, MiTag,
};
pub use model::{
    fit_gaussian, fit_model, heldout_loglik_fde, heldout_loglik_gauss, ForestDensityModel,
    GaussianModel, ModelFile,
};
pub use restricted::{
    approx_krf, greedy_degree_bounded, restricted_selection, tree_partition, Partition,
    RestrictedSelection,
};
pub use synth::{cdf_transform, generate, SynthSpec, SynthOutput, Transform};
