//! End-to-end tests of the `emcm` binary: every subcommand, the documented
//! exit codes, and determinism of the generated files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("emcm_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emcm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Small two-resonator model with a static term, poles inside 2.0-2.1 GHz.
fn write_test_model(path: &Path) {
    let text = "\
version 1
ports 2
eta0 376.730313668
band 2.0e9 2.1e9
term 42.2 0.02 0.013 inband
term 42.6 -0.017 0.021 inband
term 0 1.5 0.9 outband
term 60.0 1.1 -0.7 outband
";
    std::fs::write(path, text).unwrap();
}

#[test]
fn usage_error_exits_2() {
    let out = run(&["eval", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_1() {
    let out = run(&["compare", "/nonexistent/a.cm", "/nonexistent/b.cm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a.cm"));
}

#[test]
fn compare_ranks_iris_change() {
    let out = run(&[
        "compare",
        &fixture("inline_dr_narrowband.cm"),
        &fixture("inline_dr_narrowband_iris.cm"),
        "--top",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    // Header plus four entries, biggest first: the resonator 3/4 block.
    assert_eq!(lines.len(), 5);
    assert!(lines[1].trim_start().starts_with("6    6"));
    assert!(lines[2].trim_start().starts_with("5    5"));
    assert!(text.contains("0.017500"));
    // Deterministic output.
    let again = run(&[
        "compare",
        &fixture("inline_dr_narrowband.cm"),
        &fixture("inline_dr_narrowband_iris.cm"),
        "--top",
        "4",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn compare_threshold_lists_leakage_couplings() {
    let out = run(&[
        "compare",
        &fixture("dual_mode_classical.cm"),
        &fixture("dual_mode_narrowband.cm"),
        "--threshold",
        "0.05",
    ]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 7, "{text}");
    for pos in ["4    4", "9    9", "1    4", "2    9", "8   10", "3    5"] {
        assert!(text.contains(pos), "missing {pos} in {text}");
    }
}

#[test]
fn zeros_reports_paper_frequencies() {
    let dir = workdir("zeros");
    let out_path = dir.join("zeros.zs");
    let out = run(&[
        "zeros",
        &fixture("dual_mode_classical.cm"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("transmission zeros (4)"));
    assert!(text.contains("reflection zeros (8)"));
    for f in ["1.219305", "1.220101", "1.226902", "1.227704"] {
        assert!(text.contains(f), "missing TZ {f} in {text}");
    }
    let zs = emcm::io::zeros_file::read_zeros(&out_path).unwrap();
    assert_eq!(zs.transmission_zeros.len(), 4);
    assert_eq!(zs.prototype_poles.len(), 8);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn eval_exports_touchstone_and_csv() {
    let dir = workdir("eval");
    let model = dir.join("model.prm");
    write_test_model(&model);

    let s2p = dir.join("sweep.s2p");
    let out = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--f-start",
        "2.0e9",
        "--f-stop",
        "2.1e9",
        "--points",
        "11",
        "--out",
        s2p.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&s2p).unwrap();
    assert!(text.starts_with("# Hz S RI R 376.730313668"));
    // 11 data lines with 9 columns each.
    let data: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(['#', '!']))
        .collect();
    assert_eq!(data.len(), 11);
    assert_eq!(data[0].split_whitespace().count(), 9);

    // Single-point grid, CSV format.
    let csv = dir.join("point.csv");
    let out = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--f-start",
        "2.05e9",
        "--f-stop",
        "2.05e9",
        "--points",
        "1",
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("freq_hz,S11_re,S11_im"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn narrowband_then_inverse_round_trip() {
    let dir = workdir("narrowband");
    let model = dir.join("model.prm");
    write_test_model(&model);

    let cm = dir.join("reduced.cm");
    let oob = dir.join("reduced.oob");
    let out = run(&[
        "narrowband",
        "--model",
        model.to_str().unwrap(),
        "--out-matrix",
        cm.to_str().unwrap(),
        "--out-oob",
        oob.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("reduced 2 in-band terms"));

    let parsed = emcm::io::matrix_file::read_matrix(&cm).unwrap();
    assert_eq!(parsed.ports, 2);
    assert_eq!(parsed.order, 2);
    let oob_file = emcm::io::oob_file::read_oob(&oob).unwrap();
    assert_eq!(oob_file.oob.ports(), 2);
    // The loading is dominated by the strong static term, so it is nonzero.
    assert!(oob_file.oob.z0().iter().any(|v| v.norm() > 1e-3));

    // Inverse maps the classical matrix back to the two eigenresonances.
    let back = dir.join("back.prm");
    let out = run(&[
        "inverse",
        "--matrix",
        cm.to_str().unwrap(),
        "--out",
        back.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let recovered = emcm::io::model_file::read_model(&back).unwrap();
    let mut poles: Vec<f64> = recovered.model.terms.iter().map(|t| t.k_n).collect();
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((poles[0] - 42.2).abs() < 1e-6);
    assert!((poles[1] - 42.6).abs() < 1e-6);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn basis_diagonalizes_and_applies_transform() {
    let dir = workdir("basis");
    // The published narrowband matrix is a dense coupling-matrix pair once
    // mapped through inverse; diagonalize it and re-apply the transform.
    let em_cm = dir.join("em.cm");
    let model_out = dir.join("em.prm");
    let out = run(&[
        "inverse",
        "--matrix",
        &fixture("dual_mode_narrowband.cm"),
        "--out",
        model_out.to_str().unwrap(),
        "--matrix-out",
        em_cm.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let trans = dir.join("transversal.cm");
    let qfile = dir.join("q.bt");
    let out = run(&[
        "basis",
        "--matrix",
        em_cm.to_str().unwrap(),
        "--out",
        trans.to_str().unwrap(),
        "--transform-out",
        qfile.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let trans_file = emcm::io::matrix_file::read_matrix(&trans).unwrap();
    let resblock = trans_file.matrix.view((2, 2), (8, 8)).into_owned();
    for i in 0..8 {
        for j in 0..8 {
            if i != j {
                assert!(resblock[(i, j)].abs() < 1e-6, "off-diagonal at ({i},{j})");
            }
        }
    }

    // Applying the inverse transform recovers the dense matrix.
    let q = emcm::io::transform_file::read_transform(&qfile).unwrap();
    emcm::io::transform_file::write_transform(&qfile, &q.inverse()).unwrap();
    let dense_again = dir.join("dense.cm");
    let out = run(&[
        "basis",
        "--matrix",
        trans.to_str().unwrap(),
        "--apply",
        qfile.to_str().unwrap(),
        "--out",
        dense_again.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let a = emcm::io::matrix_file::read_matrix(&em_cm).unwrap();
    let b = emcm::io::matrix_file::read_matrix(&dense_again).unwrap();
    assert!((a.matrix - b.matrix).abs().max() < 1e-8);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn fit_model_recovers_generator() {
    let dir = workdir("fitmodel");
    // Synthesize impedance samples from a known model through the library.
    let truth = emcm::model::PoleResidueModel::new(
        1,
        vec![
            emcm::model::PoleResidueTerm::new(42.31, vec![0.05], true),
            emcm::model::PoleResidueTerm::new(42.77, vec![0.04], true),
        ],
    );
    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    for i in 0..41 {
        let k = 41.8 + 1.4 * i as f64 / 40.0;
        freqs.push(emcm::model::frequency(k));
        mats.push(emcm::impedance::eval_impedance(&truth, k).unwrap());
    }
    let samples = emcm::fit::rational::SweepSamples::new(freqs, mats).unwrap();
    let csv = dir.join("samples.csv");
    emcm::io::export::export_samples_csv(&csv, &samples).unwrap();

    let fitted = dir.join("fitted.prm");
    let out = run(&[
        "fit-model",
        "--samples",
        csv.to_str().unwrap(),
        "--poles",
        "2",
        "--out",
        fitted.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("fitted 2 poles"));
    let model = emcm::io::model_file::read_model(&fitted).unwrap().model;
    let mut poles: Vec<f64> = model.terms.iter().map(|t| t.k_n).collect();
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((poles[0] - 42.31).abs() / 42.31 < 1e-8);
    assert!((poles[1] - 42.77).abs() / 42.77 < 1e-8);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn fit_classical_round_trip_via_files() {
    let dir = workdir("fitclassical");
    // Targets from the pristine prototype.
    let zs = dir.join("targets.zs");
    let out = run(&[
        "zeros",
        &fixture("dual_mode_classical.cm"),
        "--out",
        zs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    // Slightly perturbed start written through the library.
    let file = emcm::io::matrix_file::read_matrix(fixture("dual_mode_classical.cm")).unwrap();
    let mut perturbed = file.clone();
    perturbed.matrix[(2, 3)] += 0.005;
    perturbed.matrix[(3, 2)] += 0.005;
    perturbed.matrix[(6, 9)] -= 0.004;
    perturbed.matrix[(9, 6)] -= 0.004;
    let init = dir.join("init.cm");
    emcm::io::matrix_file::write_matrix(&init, &perturbed).unwrap();

    let fitted = dir.join("fitted.cm");
    let out = run(&[
        "fit-classical",
        "--targets",
        zs.to_str().unwrap(),
        "--init",
        init.to_str().unwrap(),
        "--out",
        fitted.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result = emcm::io::matrix_file::read_matrix(&fitted).unwrap();
    let err = (result.matrix - file.matrix).abs().max();
    assert!(err < 1e-3, "recovered entries off by {err}");
    let _ = std::fs::remove_dir_all(&dir);
}
