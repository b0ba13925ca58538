//! Simulation scenarios: end-to-end behavior on data with known structure.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use fde_core::forest::SelectMode;
use fde_core::model::fit_model_from_fits;
use fde_core::pipeline::{chow_liu_fit, prepare, restricted_model, select_model};
use fde_core::{DataMatrix, FitConfig, Forest};

/// Gaussian sample whose precision matrix holds two disjoint 3-edge path
/// trees: 0-1-2-3 and 4-5-6-7.
fn two_tree_data(n: usize, seed: u64) -> DataMatrix {
    let d = 8;
    let mut omega = DMatrix::from_diagonal_element(d, d, 62.0);
    for (i, j) in [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)] {
        omega[(i, j)] = -25.0;
        omega[(j, i)] = -25.0;
    }
    let chol = omega.cholesky().expect("diagonally dominant");
    let lt = chol.l().transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = lt.solve_upper_triangular(&z).unwrap();
        rows.push(x.iter().map(|v| v + 0.5).collect::<Vec<f64>>());
    }
    DataMatrix::from_rows(rows).unwrap()
}

fn component_vertex_sets(forest: &Forest) -> Vec<Vec<usize>> {
    forest
        .components()
        .into_iter()
        .map(|(vertices, _)| vertices)
        .filter(|vs| vs.len() > 1)
        .collect()
}

#[test]
fn restricted_selection_recovers_two_disjoint_trees() {
    let config = FitConfig {
        floor: 1e-3,
        ..FitConfig::default()
    };
    let mut matches = 0;
    let mut kappa_hats = Vec::new();
    for seed in 0..20u64 {
        let raw = two_tree_data(2000, 10_000 + seed);
        let prepared = prepare(&raw, 0.5, 10_500 + seed).unwrap();
        let fit = chow_liu_fit(&prepared, &config, false).unwrap();
        let (selection, model) = restricted_model(&fit, &config, 5, false).unwrap();
        kappa_hats.push(selection.kappa_hat);
        assert!(model.forest.max_component_edges() <= selection.kappa_hat.max(1));
        let components = component_vertex_sets(&model.forest);
        let matches_truth = selection.kappa_hat == 3
            && components.len() == 2
            && components.contains(&vec![0, 1, 2, 3])
            && components.contains(&vec![4, 5, 6, 7]);
        if matches_truth {
            matches += 1;
        }
    }
    assert!(
        matches >= 16,
        "true split recovered in only {matches}/20 seeds (kappa_hats: {kappa_hats:?})"
    );
}

#[test]
fn selected_forest_beats_empty_forest_on_held_out_data() {
    let config = FitConfig::default();
    let mut wins = 0;
    for seed in 0..20u64 {
        let spec = fde_core::SynthSpec {
            d: 10,
            n: 800,
            seed: 11_000 + seed,
            transform: fde_core::Transform::Cdf,
            ..fde_core::SynthSpec::default()
        };
        let out = fde_core::generate(&spec).unwrap();
        let prepared = prepare(&out.data, 0.5, 11_500 + seed).unwrap();
        let fit = chow_liu_fit(&prepared, &config, false).unwrap();
        let (_, selected) =
            select_model(&prepared, &fit, &config, SelectMode::SampleLoglik, false).unwrap();
        let empty = fit_model_from_fits(Forest::empty(10), fit.fits1.clone(), config.beta);
        let l_selected = selected.heldout_loglik(&prepared.d2).unwrap();
        let l_empty = empty.heldout_loglik(&prepared.d2).unwrap();
        if l_selected > l_empty {
            wins += 1;
        }
    }
    assert_eq!(wins, 20, "selected model won only {wins}/20 seeds");
}
