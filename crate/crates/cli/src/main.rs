//! Batch command-line surface for forest density estimation.
//!
//! Subcommands: `synth`, `mi`, `fit`, `select`, `restricted`, `eval`,
//! `export`. All outputs are files under `--out` whose first lines are
//! comment headers recording the tool version, a hash of the effective
//! configuration and hashes of the input files.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 numeric error. Failures
//! print one machine-readable line `error: <code>: <detail>` to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fde_core::forest::SelectMode;
use fde_core::io;
use fde_core::mi::MiEstimator;
use fde_core::model::{fit_gaussian, heldout_loglik_gauss, ModelFile};
use fde_core::pipeline;
use fde_core::synth::{self, SynthSpec, Transform};
use fde_core::{FdeError, FitConfig, KernelSpec};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(
    name = "fde",
    version,
    about = "Forest density estimation: kernel marginals, mutual-information forests, held-out selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Evaluation grid points per dimension
    #[arg(long, default_value_t = 128)]
    m: usize,
    /// Smoothness parameter for the plug-in bandwidths
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Kernel family: epanechnikov or boxcar
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Truncation floor for fitted density values
    #[arg(long, default_value_t = 1e-8)]
    floor: f64,
    /// Fraction of rows in the training split
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    /// Mutual-information estimator: fast, medium or slow
    #[arg(long, default_value = "medium")]
    estimator: String,
    /// Seed for the split shuffle (and any other randomness)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl CommonOpts {
    fn fit_config(&self) -> Result<FitConfig, FdeError> {
        let config = FitConfig {
            m: self.m,
            beta: self.beta,
            kernel: KernelSpec::from_name(&self.kernel)?,
            floor: self.floor,
            estimator: MiEstimator::from_name(&self.estimator)?,
        };
        config.validate()?;
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(FdeError::InvalidInput(format!(
                "--split must lie in (0, 1), got {}",
                self.split
            )));
        }
        Ok(config)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the pairwise mutual-information matrix of a data file as TSV
    Mi {
        data: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit a forest density model (full Chow-Liu tree, or a prefix via --k)
    Fit {
        data: PathBuf,
        /// Use the first k edges of the insertion order instead of the full tree
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Select the forest size on the held-out split and write the curve
    Select {
        data: PathBuf,
        /// Selection criterion: sample (held-out log-likelihood) or grid (grid risk)
        #[arg(long, default_value = "sample")]
        mode: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Cross-validate size-restricted forests up to --kappa-max
    Restricted {
        data: PathBuf,
        #[arg(long = "kappa-max")]
        kappa_max: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Generate a sparse-precision Gaussian benchmark dataset
    Synth {
        #[arg(long, default_value_t = 20)]
        d: usize,
        #[arg(long, default_value_t = 800)]
        n: usize,
        /// Extra rows written to eval.csv, drawn from the same distribution
        #[arg(long = "eval-n", default_value_t = 0)]
        eval_n: usize,
        #[arg(long, default_value_t = 0.5)]
        mean: f64,
        #[arg(long, default_value_t = 62.0)]
        diag: f64,
        #[arg(long = "offdiag-lo", default_value_t = -30.0)]
        offdiag_lo: f64,
        #[arg(long = "offdiag-hi", default_value_t = -10.0)]
        offdiag_hi: f64,
        #[arg(long = "max-block", default_value_t = 8)]
        max_block: usize,
        /// Fraction of vertices assigned to dependence blocks
        #[arg(long, default_value_t = 1.0)]
        coverage: f64,
        /// Marginal transform: none, or cdf for the empirical-CDF version
        #[arg(long, default_value = "none")]
        transform: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate a stored model: held-out log-likelihoods of the forest
    /// density and the Gaussian baseline
    Eval {
        /// Model file written by fit/select/restricted
        #[arg(long)]
        model: PathBuf,
        /// The data file the model was fitted on
        #[arg(long)]
        train: PathBuf,
        /// Evaluation data file
        #[arg(long)]
        data: PathBuf,
    },
    /// Re-export a stored model (validated copy plus its forest edge list)
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn exit_code_for(e: &FdeError) -> u8 {
    match e {
        FdeError::Io(_)
        | FdeError::Parse { .. }
        | FdeError::ConstantColumn { .. }
        | FdeError::ModelFormat(_)
        | FdeError::TrainHashMismatch { .. }
        | FdeError::InvalidInput(_) => EXIT_DATA,
        FdeError::DegenerateColumn { .. }
        | FdeError::GridMismatch(_)
        | FdeError::OutOfCube { .. }
        | FdeError::NotATree(_)
        | FdeError::SingularCovariance
        | FdeError::NotPositiveDefinite { .. } => EXIT_NUMERIC,
    }
}

fn fail(code: u8, detail: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {code}: {detail}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mi { data, common } => cmd_mi(&data, &common),
        Command::Fit { data, k, common } => cmd_fit(&data, k, &common),
        Command::Select { data, mode, common } => cmd_select(&data, &mode, &common),
        Command::Restricted {
            data,
            kappa_max,
            common,
        } => cmd_restricted(&data, kappa_max, &common),
        Command::Synth {
            d,
            n,
            eval_n,
            mean,
            diag,
            offdiag_lo,
            offdiag_hi,
            max_block,
            coverage,
            transform,
            seed,
            out,
        } => cmd_synth(
            d, n, eval_n, mean, diag, offdiag_lo, offdiag_hi, max_block, coverage, &transform,
            seed, &out,
        ),
        Command::Eval { model, train, data } => cmd_eval(&model, &train, &data),
        Command::Export { model, out } => cmd_export(&model, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(detail)) => fail(EXIT_USAGE, detail),
        Err(CmdError::Core(e)) => fail(exit_code_for(&e), e),
    }
}

enum CmdError {
    Usage(String),
    Core(FdeError),
}

impl From<FdeError> for CmdError {
    fn from(e: FdeError) -> Self {
        CmdError::Core(e)
    }
}

type CmdResult = Result<(), CmdError>;

/// Flag validation failures are usage errors (exit 2), not data errors.
fn validated_config(common: &CommonOpts) -> Result<FitConfig, CmdError> {
    common.fit_config().map_err(|e| CmdError::Usage(e.to_string()))
}

fn ensure_out_dir(out: &Path) -> Result<(), CmdError> {
    std::fs::create_dir_all(out).map_err(|e| CmdError::Core(FdeError::Io(e)))?;
    Ok(())
}

/// Standard output header: tool version, hash of the effective config, and
/// content hashes of every input file.
fn header_lines(subcommand: &str, config_echo: &serde_json::Value, inputs: &[&Path]) -> Result<Vec<String>, FdeError> {
    let config_hash = &io::sha256_hex(config_echo.to_string().as_bytes())[..16];
    let mut input_parts = Vec::new();
    for path in inputs {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        input_parts.push(format!("{name}:{}", &io::sha256_hex_file(path)?[..16]));
    }
    Ok(vec![
        format!("fde {} {subcommand}", env!("CARGO_PKG_VERSION")),
        format!(
            "config={config_hash} inputs={}",
            if input_parts.is_empty() {
                "-".to_string()
            } else {
                input_parts.join(",")
            }
        ),
    ])
}

fn common_echo(sub: &str, common: &CommonOpts) -> serde_json::Value {
    serde_json::json!({
        "subcommand": sub,
        "m": common.m,
        "beta": common.beta,
        "kernel": common.kernel,
        "floor": common.floor,
        "split": common.split,
        "estimator": common.estimator,
        "seed": common.seed,
    })
}

fn cmd_mi(data_path: &Path, common: &CommonOpts) -> CmdResult {
    let config = validated_config(common)?;
    ensure_out_dir(&common.out)?;
    let raw = io::read_csv_matrix(data_path)?;
    let (cube, _) = fde_core::rescale_to_unit_cube(&raw)?;
    let matrix = fde_core::mi::mi_matrix(&cube, &config, true)?;
    let header = header_lines("mi", &common_echo("mi", common), &[data_path])?;
    io::write_mi_tsv(&common.out.join("mi_matrix.tsv"), &matrix, &header)?;
    Ok(())
}

fn cmd_fit(data_path: &Path, k: Option<usize>, common: &CommonOpts) -> CmdResult {
    let config = validated_config(common)?;
    ensure_out_dir(&common.out)?;
    let raw = io::read_csv_matrix(data_path)?;
    let prepared = pipeline::prepare(&raw, common.split, common.seed)?;
    let fit = pipeline::chow_liu_fit(&prepared, &config, true)?;
    let k = k.unwrap_or(fit.sequence.len());
    if k > fit.sequence.len() {
        return Err(CmdError::Usage(format!(
            "--k {k} exceeds the {} edges of the full tree",
            fit.sequence.len()
        )));
    }
    let forest = fit.sequence.prefix(k);
    let model = fde_core::model::fit_model_from_fits(forest, fit.fits1.clone(), config.beta);
    let header = header_lines("fit", &common_echo("fit", common), &[data_path])?;
    io::write_forest_tsv(&common.out.join("forest.tsv"), &model.forest, &header)?;
    pipeline::model_file(&prepared, &model).save(&common.out.join("model.json"))?;
    println!("fitted forest with k={k} edges over d={} variables", model.d());
    Ok(())
}

fn cmd_select(data_path: &Path, mode: &str, common: &CommonOpts) -> CmdResult {
    let config = validated_config(common)?;
    let mode = SelectMode::from_name(mode).map_err(|e| CmdError::Usage(e.to_string()))?;
    ensure_out_dir(&common.out)?;
    let raw = io::read_csv_matrix(data_path)?;
    let prepared = pipeline::prepare(&raw, common.split, common.seed)?;
    let fit = pipeline::chow_liu_fit(&prepared, &config, true)?;
    let (selection, model) = pipeline::select_model(&prepared, &fit, &config, mode, true)?;
    let mode_name = match mode {
        SelectMode::GridRisk => "grid",
        SelectMode::SampleLoglik => "sample",
    };
    let echo = {
        let mut v = common_echo("select", common);
        v["mode"] = serde_json::json!(mode_name);
        v
    };
    let header = header_lines("select", &echo, &[data_path])?;
    io::write_curve_csv(&common.out.join("curve.csv"), &selection.curve, &header)?;
    io::write_forest_tsv(&common.out.join("forest.tsv"), &model.forest, &header)?;
    pipeline::model_file(&prepared, &model).save(&common.out.join("model.json"))?;
    println!(
        "selected k={} mode={mode_name} heldout={}",
        selection.k_hat,
        io::format_sig12(selection.curve[selection.k_hat])
    );
    Ok(())
}

fn cmd_restricted(data_path: &Path, kappa_max: Option<usize>, common: &CommonOpts) -> CmdResult {
    let config = validated_config(common)?;
    ensure_out_dir(&common.out)?;
    let raw = io::read_csv_matrix(data_path)?;
    let prepared = pipeline::prepare(&raw, common.split, common.seed)?;
    let d = raw.d();
    let kappa_max = kappa_max.unwrap_or(d.saturating_sub(1));
    if kappa_max > d.saturating_sub(1) {
        return Err(CmdError::Usage(format!(
            "--kappa-max {kappa_max} exceeds d-1 = {}",
            d - 1
        )));
    }
    let fit = pipeline::chow_liu_fit(&prepared, &config, true)?;
    let (selection, model) = pipeline::restricted_model(&fit, &config, kappa_max, true)?;
    let echo = {
        let mut v = common_echo("restricted", common);
        v["kappa_max"] = serde_json::json!(kappa_max);
        v
    };
    let header = header_lines("restricted", &echo, &[data_path])?;

    let path = common.out.join("candidates.csv");
    let mut body = String::from("kappa,raw_weight,raw_edges,pruned_edges,heldout_risk\n");
    for c in &selection.candidates {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            c.kappa,
            io::format_sig12(c.raw_weight),
            c.raw_edges,
            c.pruned_edges,
            io::format_sig12(c.heldout_risk)
        ));
    }
    let mut text = String::new();
    for line in &header {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&body);
    std::fs::write(&path, text).map_err(FdeError::Io)?;

    io::write_forest_tsv(&common.out.join("forest.tsv"), &model.forest, &header)?;
    pipeline::model_file(&prepared, &model).save(&common.out.join("model.json"))?;
    println!(
        "selected kappa={} edges={} heldout_risk={}",
        selection.kappa_hat,
        model.forest.edges.len(),
        io::format_sig12(selection.candidates[selection.kappa_hat].heldout_risk)
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    d: usize,
    n: usize,
    eval_n: usize,
    mean: f64,
    diag: f64,
    offdiag_lo: f64,
    offdiag_hi: f64,
    max_block: usize,
    coverage: f64,
    transform: &str,
    seed: u64,
    out: &Path,
) -> CmdResult {
    let transform = match transform {
        "none" => Transform::None,
        "cdf" => Transform::Cdf,
        other => {
            return Err(CmdError::Usage(format!(
                "unknown transform {other:?}; expected none or cdf"
            )))
        }
    };
    ensure_out_dir(out)?;
    // train and eval rows come from one draw so they share the precision matrix
    let spec = SynthSpec {
        d,
        n: n + eval_n,
        mean,
        diag,
        offdiag_range: (offdiag_lo, offdiag_hi),
        max_block,
        block_coverage: coverage,
        seed,
        transform,
    };
    let output = synth::generate(&spec)?;
    let train_rows: Vec<usize> = (0..n).collect();
    let eval_rows: Vec<usize> = (n..n + eval_n).collect();

    let echo = serde_json::json!({
        "subcommand": "synth",
        "spec": spec,
        "eval_n": eval_n,
        "rng": "chacha8",
    });
    let header = header_lines("synth", &echo, &[])?;
    io::write_csv_matrix(&out.join("data.csv"), &output.data.select_rows(&train_rows), &header)?;
    if eval_n > 0 {
        io::write_csv_matrix(&out.join("eval.csv"), &output.data.select_rows(&eval_rows), &header)?;
    }
    io::write_truth_tsv(&out.join("truth.tsv"), d, &output.truth, &header)?;
    let spec_echo = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "rng": "chacha8",
        "spec": spec,
        "eval_n": eval_n,
        "truth_edges": output.truth.len(),
    });
    std::fs::write(
        out.join("spec.json"),
        serde_json::to_string_pretty(&spec_echo).expect("spec echo serializes"),
    )
    .map_err(FdeError::Io)?;
    println!(
        "wrote {} training rows, {} eval rows, {} truth edges",
        n,
        eval_n,
        output.truth.len()
    );
    Ok(())
}

fn cmd_eval(model_path: &Path, train_path: &Path, data_path: &Path) -> CmdResult {
    let file = ModelFile::load(model_path)?;
    let train = io::read_csv_matrix(train_path)?;
    let model = file.reconstruct(&train)?;
    let eval_raw = io::read_csv_matrix(data_path)?;
    if eval_raw.d() != model.d() {
        return Err(CmdError::Core(FdeError::InvalidInput(format!(
            "evaluation data has d = {}, model has d = {}",
            eval_raw.d(),
            model.d()
        ))));
    }
    // held-out rows can fall outside the training range; clamp into the cube
    let eval_cube = fde_core::data::apply_rescale(&eval_raw, &file.rescale, true);
    let l_fde = model.heldout_loglik(&eval_cube)?;
    let gauss = fit_gaussian(&model.fits.data)?;
    let l_gauss = heldout_loglik_gauss(&gauss, &eval_cube)?;
    println!("loglik_fde={}", io::format_sig12(l_fde));
    println!("loglik_gauss={}", io::format_sig12(l_gauss));
    Ok(())
}

fn cmd_export(model_path: &Path, out: &Path) -> CmdResult {
    let file = ModelFile::load(model_path)?;
    ensure_out_dir(out)?;
    let forest = fde_core::Forest {
        d: file.d,
        edges: file
            .forest
            .iter()
            .map(|e| fde_core::Edge::new(e.i, e.j, e.weight))
            .collect(),
    };
    if !forest.is_acyclic() {
        return Err(CmdError::Core(FdeError::ModelFormat(
            "stored forest contains a cycle".into(),
        )));
    }
    let echo = serde_json::json!({"subcommand": "export", "model_version": file.version});
    let header = header_lines("export", &echo, &[model_path])?;
    io::write_forest_tsv(&out.join("forest.tsv"), &forest, &header)?;
    file.save(&out.join("model.json"))?;
    println!("exported model with d={} k={}", file.d, forest.edges.len());
    Ok(())
}
