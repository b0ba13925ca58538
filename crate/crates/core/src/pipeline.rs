//! End-to-end workflows shared by the command-line tool and the test suites:
//! rescale, split, fit marginals on both halves, build forests, select.

use crate::config::FitConfig;
use crate::data::{rescale_to_unit_cube, AffineMap, DataMatrix, DataSplit};
use crate::error::Result;
use crate::forest::{
    chow_liu, select_k_grid, select_k_sample, ForestSequence, SelectMode, Selection,
};
use crate::mi::{heldout_terms, mi_matrix_from_fits, GridFits, HeldoutTerms, MiMatrix};
use crate::model::{fit_model_from_fits, ForestDensityModel, ModelFile};
use crate::restricted::{restricted_selection, RestrictedSelection};

/// Rescaled data with its seeded shuffle split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cube: DataMatrix,
    pub maps: Vec<AffineMap>,
    pub split: DataSplit,
    pub split_fraction: f64,
    pub seed: u64,
    pub d1: DataMatrix,
    pub d2: DataMatrix,
}

/// Rescale onto the unit cube and split rows by a seeded shuffle; the first
/// `ceil(frac * n)` shuffled rows form the training half.
pub fn prepare(data: &DataMatrix, split_fraction: f64, seed: u64) -> Result<Prepared> {
    let (cube, maps) = rescale_to_unit_cube(data)?;
    let split = DataSplit::new(cube.n(), split_fraction, seed)?;
    let d1 = cube.select_rows(split.d1_rows());
    let d2 = cube.select_rows(split.d2_rows());
    Ok(Prepared {
        cube,
        maps,
        split,
        split_fraction,
        seed,
        d1,
        d2,
    })
}

/// Marginal fits of both halves, the training edge weights and the Chow-Liu
/// insertion order.
#[derive(Debug, Clone)]
pub struct ChowLiuFit {
    pub fits1: GridFits,
    pub fits2: GridFits,
    pub mi: MiMatrix,
    pub sequence: ForestSequence,
}

pub fn chow_liu_fit(prepared: &Prepared, config: &FitConfig, parallel: bool) -> Result<ChowLiuFit> {
    let fits1 = GridFits::fit(&prepared.d1, config)?;
    let fits2 = GridFits::fit(&prepared.d2, config)?;
    let mi = mi_matrix_from_fits(&fits1, config.estimator, parallel);
    let sequence = chow_liu(&mi);
    Ok(ChowLiuFit {
        fits1,
        fits2,
        mi,
        sequence,
    })
}

pub fn cross_terms(fit: &ChowLiuFit, parallel: bool) -> Result<HeldoutTerms> {
    heldout_terms(&fit.fits1, &fit.fits2, parallel)
}

/// Select the prefix size on the held-out half and assemble the model.
pub fn select_model(
    prepared: &Prepared,
    fit: &ChowLiuFit,
    config: &FitConfig,
    mode: SelectMode,
    parallel: bool,
) -> Result<(Selection, ForestDensityModel)> {
    let selection = match mode {
        SelectMode::GridRisk => {
            let terms = cross_terms(fit, parallel)?;
            select_k_grid(&fit.sequence, &terms)
        }
        SelectMode::SampleLoglik => select_k_sample(&fit.sequence, &fit.fits1, &prepared.d2),
    };
    let forest = fit.sequence.prefix(selection.k_hat);
    let model = fit_model_from_fits(forest, fit.fits1.clone(), config.beta);
    Ok((selection, model))
}

/// Build, prune and select size-restricted forests, then assemble the model
/// for the winning `kappa`.
pub fn restricted_model(
    fit: &ChowLiuFit,
    config: &FitConfig,
    kappa_max: usize,
    parallel: bool,
) -> Result<(RestrictedSelection, ForestDensityModel)> {
    let terms = cross_terms(fit, parallel)?;
    let selection = restricted_selection(&fit.mi, &terms, kappa_max);
    let model = fit_model_from_fits(selection.forest.clone(), fit.fits1.clone(), config.beta);
    Ok((selection, model))
}

/// Persist a fitted model with the metadata needed to rebuild it from the
/// original data file.
pub fn model_file(prepared: &Prepared, model: &ForestDensityModel) -> ModelFile {
    ModelFile::from_model(
        model,
        &prepared.maps,
        &prepared.split,
        prepared.split_fraction,
        prepared.seed,
    )
}
