//! Evaluable density models: a forest of bivariate/univariate kernel ratios,
//! and the multivariate Gaussian baseline it is compared against.
//!
//! The forest density of a point factorizes as the product over forest edges
//! of `p(x_i, x_j) / (p(x_i) p(x_j))` times the product of univariate
//! marginals. Evaluation always uses exact kernel sums at the query point
//! rather than grid interpolation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::FitConfig;
use crate::data::{AffineMap, DataMatrix, DataSplit};
use crate::error::{FdeError, Result};
use crate::forest::{risk_from_terms, Edge, Forest};
use crate::kde::{eval_bivariate, eval_univariate};
use crate::mi::{heldout_terms, GridFits};

/// A forest structure with the fitted marginals needed to evaluate it.
#[derive(Debug, Clone)]
pub struct ForestDensityModel {
    pub forest: Forest,
    pub fits: GridFits,
    pub beta: f64,
    /// Content hash of the (unit-cube) training split.
    pub train_hash: String,
}

/// Fit marginals on the training split and attach them to a forest.
pub fn fit_model(forest: Forest, train: &DataMatrix, config: &FitConfig) -> Result<ForestDensityModel> {
    let fits = GridFits::fit(train, config)?;
    Ok(fit_model_from_fits(forest, fits, config.beta))
}

/// Attach an already-fitted split to a forest without refitting.
pub fn fit_model_from_fits(forest: Forest, fits: GridFits, beta: f64) -> ForestDensityModel {
    let train_hash = fits.data.content_hash();
    ForestDensityModel {
        forest,
        fits,
        beta,
        train_hash,
    }
}

impl ForestDensityModel {
    pub fn d(&self) -> usize {
        self.fits.d()
    }

    /// Log-density at a point of the unit cube, by exact kernel sums.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d() {
            return Err(FdeError::InvalidInput(format!(
                "point has {} coordinates, model has d = {}",
                x.len(),
                self.d()
            )));
        }
        for (dim, &v) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(FdeError::OutOfCube { dim, value: v });
            }
        }
        let fits = &self.fits;
        let kernel = &fits.kernel;
        let floor = fits.floor;
        let mut acc = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            acc += eval_univariate(fits.column(j), kernel, fits.h1[j], floor, xj).ln();
        }
        for e in &self.forest.edges {
            let (xi, xj) = (x[e.i], x[e.j]);
            let pb = eval_bivariate(
                fits.column(e.i),
                fits.column(e.j),
                kernel,
                fits.h2[e.i],
                fits.h2[e.j],
                floor,
                xi,
                xj,
            );
            let pi = eval_univariate(fits.column(e.i), kernel, fits.h1[e.i], floor, xi);
            let pj = eval_univariate(fits.column(e.j), kernel, fits.h1[e.j], floor, xj);
            acc += pb.ln() - pi.ln() - pj.ln();
        }
        Ok(acc)
    }

    /// Mean log-density over the rows of a held-out split.
    pub fn heldout_loglik(&self, held: &DataMatrix) -> Result<f64> {
        if held.d() != self.d() {
            return Err(FdeError::InvalidInput(format!(
                "held-out data has d = {}, model has d = {}",
                held.d(),
                self.d()
            )));
        }
        let mut acc = 0.0;
        for s in 0..held.n() {
            acc += self.log_density(held.row(s))?;
        }
        Ok(acc / held.n() as f64)
    }

    /// Held-out negative log-likelihood risk against grid fits of the
    /// held-out split.
    pub fn heldout_risk(&self, held: &GridFits) -> Result<f64> {
        let terms = heldout_terms(&self.fits, held, false)?;
        Ok(risk_from_terms(&self.forest, &terms))
    }
}

/// Mean log-density of a forest model over a held-out split.
pub fn heldout_loglik_fde(model: &ForestDensityModel, held: &DataMatrix) -> Result<f64> {
    model.heldout_loglik(held)
}

/// Multivariate Gaussian fit by sample mean and inverse sample covariance.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub log_det_precision: f64,
}

/// Fit the Gaussian baseline. Fails when the sample covariance is singular.
pub fn fit_gaussian(train: &DataMatrix) -> Result<GaussianModel> {
    let (n, d) = (train.n(), train.d());
    if n <= d {
        return Err(FdeError::SingularCovariance);
    }
    let mut mean = DVector::zeros(d);
    for s in 0..n {
        for j in 0..d {
            mean[j] += train.get(s, j);
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for s in 0..n {
        let row = train.row(s);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v: f64 = cov[(a, b)] / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or(FdeError::SingularCovariance)?;
    let log_det_cov: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let precision = chol.inverse();
    Ok(GaussianModel {
        mean,
        precision,
        log_det_precision: -log_det_cov,
    })
}

impl GaussianModel {
    pub fn d(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.d();
        let diff = DVector::from_iterator(d, x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let quad = (&self.precision * &diff).dot(&diff);
        -0.5 * quad + 0.5 * self.log_det_precision
            - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Mean Gaussian log-density over a held-out split.
pub fn heldout_loglik_gauss(model: &GaussianModel, held: &DataMatrix) -> Result<f64> {
    if held.d() != model.d() {
        return Err(FdeError::InvalidInput(format!(
            "held-out data has d = {}, model has d = {}",
            held.d(),
            model.d()
        )));
    }
    let mut acc = 0.0;
    for s in 0..held.n() {
        acc += model.log_density(held.row(s));
    }
    Ok(acc / held.n() as f64)
}

/// One persisted forest edge with its pairwise bandwidths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub h2i: f64,
    pub h2j: f64,
}

/// On-disk model document. The training data itself is supplied again at
/// load time and checked against the stored content hash; everything else
/// needed to reproduce evaluation (bandwidths, rescale maps, the split
/// permutation) is stored explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub rng: String,
    pub d: usize,
    pub m: usize,
    pub beta: f64,
    pub kernel: String,
    pub floor: f64,
    pub seed: u64,
    pub split_fraction: f64,
    pub permutation: Vec<usize>,
    pub n1: usize,
    pub rescale: Vec<AffineMap>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub forest: Vec<EdgeRecord>,
    pub train_hash: String,
}

impl ModelFile {
    pub fn from_model(
        model: &ForestDensityModel,
        maps: &[AffineMap],
        split: &DataSplit,
        split_fraction: f64,
        seed: u64,
    ) -> Self {
        let fits = &model.fits;
        ModelFile {
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: "chacha8".to_string(),
            d: model.d(),
            m: fits.grid.m(),
            beta: model.beta,
            kernel: fits.kernel.name().to_string(),
            floor: fits.floor,
            seed,
            split_fraction,
            permutation: split.permutation.clone(),
            n1: split.n1,
            rescale: maps.to_vec(),
            h1: fits.h1.clone(),
            h2: fits.h2.clone(),
            forest: model
                .forest
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    i: e.i,
                    j: e.j,
                    weight: e.weight,
                    h2i: fits.h2[e.i],
                    h2j: fits.h2[e.j],
                })
                .collect(),
            train_hash: model.train_hash.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FdeError::ModelFormat(e.to_string()))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn fit_config(&self) -> Result<FitConfig> {
        Ok(FitConfig {
            m: self.m,
            beta: self.beta,
            kernel: crate::kernel::KernelSpec::from_name(&self.kernel)?,
            floor: self.floor,
            estimator: crate::mi::MiEstimator::Medium,
        })
    }

    /// Rebuild the evaluable model from the original (unrescaled) data file
    /// contents, verifying the training-split content hash.
    pub fn reconstruct(&self, original: &DataMatrix) -> Result<ForestDensityModel> {
        if original.d() != self.d {
            return Err(FdeError::ModelFormat(format!(
                "data has d = {}, model was fitted with d = {}",
                original.d(),
                self.d
            )));
        }
        if original.n() != self.permutation.len() {
            return Err(FdeError::ModelFormat(format!(
                "data has {} rows, model split recorded {}",
                original.n(),
                self.permutation.len()
            )));
        }
        let cube = crate::data::apply_rescale(original, &self.rescale, false);
        let d1 = cube.select_rows(&self.permutation[..self.n1]);
        let actual = d1.content_hash();
        if actual != self.train_hash {
            return Err(FdeError::TrainHashMismatch {
                expected: self.train_hash.clone(),
                actual,
            });
        }
        let config = self.fit_config()?;
        let fits = GridFits::with_bandwidths(&d1, &config, self.h1.clone(), self.h2.clone())?;
        let edges = self
            .forest
            .iter()
            .map(|e| Edge::new(e.i, e.j, e.weight))
            .collect();
        let forest = Forest {
            d: self.d,
            edges,
        };
        if !forest.is_acyclic() {
            return Err(FdeError::ModelFormat("stored forest contains a cycle".into()));
        }
        Ok(fit_model_from_fits(forest, fits, self.beta))
    }
}
