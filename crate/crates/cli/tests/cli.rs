//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Deterministic synthetic data file via the synth subcommand.
fn synth_dir(root: &Path, d: usize, n: usize, eval_n: usize, seed: u64) -> PathBuf {
    let out = root.join(format!("synth_{d}_{n}_{seed}"));
    let result = run(&[
        "synth",
        "--d",
        &d.to_string(),
        "--n",
        &n.to_string(),
        "--eval-n",
        &eval_n.to_string(),
        "--seed",
        &seed.to_string(),
        "--transform",
        "cdf",
        "--out",
        &path_str(&out),
    ]);
    assert!(result.status.success(), "synth failed: {}", stderr(&result));
    out
}

#[test]
fn synth_fit_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let synth = synth_dir(dir.path(), 6, 500, 200, 42);
    let fit_out = dir.path().join("fit");
    let result = run(&[
        "fit",
        &path_str(&synth.join("data.csv")),
        "--m",
        "64",
        "--seed",
        "7",
        "--out",
        &path_str(&fit_out),
    ]);
    assert!(result.status.success(), "fit failed: {}", stderr(&result));
    assert!(fit_out.join("model.json").exists());
    assert!(fit_out.join("forest.tsv").exists());

    let result = run(&[
        "eval",
        "--model",
        &path_str(&fit_out.join("model.json")),
        "--train",
        &path_str(&synth.join("data.csv")),
        "--data",
        &path_str(&synth.join("eval.csv")),
    ]);
    assert!(result.status.success(), "eval failed: {}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("loglik_fde="));
    assert!(text.contains("loglik_gauss="));
}

#[test]
fn select_summary_matches_curve_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let synth = synth_dir(dir.path(), 7, 600, 0, 3);
    let out = dir.path().join("select");
    let result = run(&[
        "select",
        &path_str(&synth.join("data.csv")),
        "--m",
        "64",
        "--seed",
        "11",
        "--out",
        &path_str(&out),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let summary = stdout(&result);
    let k_hat: usize = summary
        .split("k=")
        .nth(1)
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|tok| tok.parse().ok())
        .expect("summary line carries k=<k>");

    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    let mut best = (0usize, f64::NEG_INFINITY);
    for line in curve.lines() {
        if line.starts_with('#') || line.starts_with('k') {
            continue;
        }
        let mut parts = line.split(',');
        let k: usize = parts.next().unwrap().parse().unwrap();
        let score: f64 = parts.next().unwrap().parse().unwrap();
        if score > best.1 {
            best = (k, score);
        }
    }
    assert_eq!(best.0, k_hat, "curve argmax disagrees with summary");

    // the forest file header records the same k
    let forest = std::fs::read_to_string(out.join("forest.tsv")).unwrap();
    assert!(forest.starts_with(&format!("# d=7 k={k_hat}")));
}

#[test]
fn export_reimport_reproduces_loglik() {
    let dir = tempfile::tempdir().unwrap();
    let synth = synth_dir(dir.path(), 5, 400, 150, 9);
    let fit_out = dir.path().join("fit");
    assert!(run(&[
        "fit",
        &path_str(&synth.join("data.csv")),
        "--m",
        "64",
        "--k",
        "3",
        "--seed",
        "2",
        "--out",
        &path_str(&fit_out),
    ])
    .status
    .success());
    let export_out = dir.path().join("export");
    assert!(run(&[
        "export",
        "--model",
        &path_str(&fit_out.join("model.json")),
        "--out",
        &path_str(&export_out),
    ])
    .status
    .success());

    let eval = |model: &Path| -> String {
        let out = run(&[
            "eval",
            "--model",
            &path_str(model),
            "--train",
            &path_str(&synth.join("data.csv")),
            "--data",
            &path_str(&synth.join("eval.csv")),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        stdout(&out)
    };
    let a = eval(&fit_out.join("model.json"));
    let b = eval(&export_out.join("model.json"));
    let parse = |text: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix("loglik_fde="))
            .unwrap()
            .parse()
            .unwrap()
    };
    let (la, lb) = (parse(&a), parse(&b));
    assert!((la - lb).abs() <= 1e-10, "{la} vs {lb}");
}

#[test]
fn mi_on_duplicated_column_dominates_row() {
    let dir = tempfile::tempdir().unwrap();
    // three independent columns, the fourth duplicating column 1
    let mut text = String::new();
    let mut state = 88172645463325252u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..800 {
        let (a, b, c) = (next(), next(), next());
        text.push_str(&format!("{a},{b},{c},{b}\n"));
    }
    let data = dir.path().join("dup.csv");
    std::fs::write(&data, text).unwrap();
    let out = dir.path().join("mi");
    let result = run(&[
        "mi",
        &path_str(&data),
        "--m",
        "64",
        "--out",
        &path_str(&out),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let tsv = std::fs::read_to_string(out.join("mi_matrix.tsv")).unwrap();
    let rows: Vec<Vec<f64>> = tsv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // independence: small entries everywhere except the duplicated pair
    let self_mi = rows[1][3];
    for (j, &entry) in rows[1].iter().enumerate() {
        if j != 1 && j != 3 {
            assert!(self_mi > entry);
            assert!(entry.abs() <= 0.05, "entry (1,{j}) = {entry}");
        }
    }
    // symmetry as written
    for (i, row) in rows.iter().enumerate() {
        for (j, &entry) in row.iter().enumerate() {
            assert_eq!(entry, rows[j][i]);
        }
    }
}

#[test]
fn error_model_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // empty file: data error (3) with a machine-readable stderr line
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let result = run(&["mi", &path_str(&empty)]);
    assert_eq!(result.status.code(), Some(3));
    assert!(stderr(&result).starts_with("error: 3: "), "{}", stderr(&result));

    // missing file: data error (3)
    let result = run(&["mi", &path_str(&dir.path().join("nope.csv"))]);
    assert_eq!(result.status.code(), Some(3));

    // bad flag value: usage error (2)
    let ok = dir.path().join("ok.csv");
    std::fs::write(&ok, "0.1,0.9\n0.4,0.3\n0.8,0.2\n0.5,0.6\n0.2,0.9\n").unwrap();
    let result = run(&["mi", &path_str(&ok), "--kernel", "gaussian"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).starts_with("error: 2: "));
    let result = run(&["mi", &path_str(&ok), "--split", "1.5"]);
    assert_eq!(result.status.code(), Some(2));

    // unknown subcommand: clap usage error (2)
    let result = run(&["frobnicate"]);
    assert_eq!(result.status.code(), Some(2));

    // constant column: data error (3)
    let constant = dir.path().join("constant.csv");
    std::fs::write(&constant, "0.1,5.0\n0.4,5.0\n0.8,5.0\n0.3,5.0\n").unwrap();
    let result = run(&["mi", &path_str(&constant)]);
    assert_eq!(result.status.code(), Some(3));
    assert!(stderr(&result).contains("column 1"));
}

#[test]
fn outputs_are_deterministic_and_carry_headers() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = synth_dir(dir.path(), 5, 300, 0, 17);
    let s2_dir = dir.path().join("again");
    let result = run(&[
        "synth", "--d", "5", "--n", "300", "--eval-n", "0", "--seed", "17", "--transform", "cdf",
        "--out", &path_str(&s2_dir),
    ]);
    assert!(result.status.success());
    let a = std::fs::read(s1.join("data.csv")).unwrap();
    let b = std::fs::read(s2_dir.join("data.csv")).unwrap();
    assert_eq!(a, b, "same seed must give identical bytes");

    for name in ["data.csv", "truth.tsv"] {
        let text = std::fs::read_to_string(s1.join(name)).unwrap();
        assert!(text.starts_with('#'), "{name} must open with a comment header");
        let header: String = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        assert!(header.contains("fde 0.1.0"), "{name} header: {header}");
        assert!(header.contains("config="), "{name}");
        assert!(header.contains("inputs="), "{name}");
    }

    // same seed, same analysis: identical outputs
    let m1 = dir.path().join("m1");
    let m2 = dir.path().join("m2");
    for out in [&m1, &m2] {
        assert!(run(&[
            "select",
            &path_str(&s1.join("data.csv")),
            "--m",
            "32",
            "--seed",
            "5",
            "--out",
            &path_str(out),
        ])
        .status
        .success());
    }
    for name in ["curve.csv", "forest.tsv", "model.json"] {
        let a = std::fs::read(m1.join(name)).unwrap();
        let b = std::fs::read(m2.join(name)).unwrap();
        assert_eq!(a, b, "{name} not deterministic");
    }
}

#[test]
fn restricted_candidates_table_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let synth = synth_dir(dir.path(), 8, 600, 0, 23);
    let out = dir.path().join("restricted");
    let result = run(&[
        "restricted",
        &path_str(&synth.join("data.csv")),
        "--kappa-max",
        "4",
        "--m",
        "64",
        "--seed",
        "29",
        "--out",
        &path_str(&out),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let summary = stdout(&result);
    let kappa_hat: usize = summary
        .split("kappa=")
        .nth(1)
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|tok| tok.parse().ok())
        .unwrap();

    let table = std::fs::read_to_string(out.join("candidates.csv")).unwrap();
    let mut rows = Vec::new();
    for line in table.lines() {
        if line.starts_with('#') || line.starts_with("kappa,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        rows.push((
            fields[0].parse::<usize>().unwrap(),
            fields[4].parse::<f64>().unwrap(),
        ));
    }
    assert_eq!(rows.len(), 5); // kappa = 0..=4
    let best = rows
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    assert_eq!(best.0, kappa_hat, "summary kappa disagrees with the table");
}
