//! Runs the binary and compares reports with `tests/golden/*.txt`.
//! Set `UPDATE_GOLDEN=1` to rewrite the expected files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"))
}

/// Drops lines that depend on wall-clock time.
fn normalized(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with("elapsed") && !l.contains("time:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn aalkit(cwd: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_aalkit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

fn golden(name: &str, cwd: &Path, args: &[&str], status: i32) {
    let (code, report) = aalkit(cwd, args);
    assert_eq!(code, status, "{name}: exit status\n{report}");
    let report = normalized(&report);
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &report).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(report, want, "{name}: report differs from {}", path.display());
}

fn here() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn leibniz_z3() {
    golden("leibniz_z3", &here(), &["leibniz", "--algebra", &data("z3.alg"), "--filter", "1,2"], 0);
}

#[test]
fn model_check_semilattice() {
    golden(
        "model_check_semilattice",
        &here(),
        &["model-check", "--calculus", &data("semilattice.calc"), "--algebra", &data("z3.alg"), "--filter", "1,2"],
        0,
    );
}

#[test]
fn model_check_extension_fails() {
    golden(
        "model_check_extension",
        &here(),
        &["model-check", "--calculus", "@semilattice-ext", "--algebra", &data("z3.alg"), "--filter", "1,2"],
        1,
    );
}

#[test]
fn normalize_cancels() {
    golden("normalize", &here(), &["normalize", "(+ x (- x))"], 0);
}

#[test]
fn normalize_polynomial() {
    golden("normalize_square", &here(), &["normalize", "(* (+ x (+ y 1)) (+ x (- y)))"], 0);
}

#[test]
fn countermodel() {
    golden("countermodel", &here(), &["countermodel", "--p", "(+ (* (+ 1 1) z) 1)", "--modulus", "4"], 0);
}

#[test]
fn countermodel_root() {
    golden("countermodel_root", &here(), &["countermodel", "--p", "(+ z (- (+ 1 1)))", "--modulus", "4"], 1);
}

#[test]
fn frege_model() {
    golden("frege_model", &here(), &["frege-model"], 0);
}

#[test]
fn gallery_semilattice() {
    golden("gallery_semilattice", &here(), &["gallery", "semilattice"], 0);
}

#[test]
fn usage_error() {
    golden("usage_error", &here(), &["leibniz", "--filter", "1"], 2);
}

#[test]
fn guard_violation() {
    golden("guard_magma", &here(), &["gallery", "magma", "--magma-n", "12"], 2);
}

#[test]
fn witness_files_replay() {
    let dir = tempfile::tempdir().unwrap();
    golden("witness", dir.path(), &["witness", "--p", "(+ z (- (+ 1 1)))", "--solution", "2", "--out", "w"], 0);
    for f in ["lp.calc", "theorem.drv", "theorem.chain", "R.drv", "MP.drv", "G.drv", "Rep.plus.drv", "Rep.iff.drv"] {
        assert!(dir.path().join("w").join(f).exists(), "{f} not emitted");
    }
    let (code, report) = aalkit(dir.path(), &["check-chain", "w/theorem.chain"]);
    assert_eq!(code, 0, "{report}");
    let (code, report) = aalkit(
        dir.path(),
        &[
            "check-proof",
            "w/theorem.drv",
            "--calculus",
            "w/lp.calc",
            "--signature",
            "lp",
            "--goal",
            "(iff (+ (+ 1 1) (- (+ 1 1))) 0)",
        ],
    );
    assert_eq!(code, 0, "{report}");
    let (code, report) = aalkit(dir.path(), &["check-proof", "w/G.drv", "--calculus", "w/lp.calc", "--signature", "lp"]);
    assert_eq!(code, 0, "{report}");
}

#[test]
fn tampered_proof_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = aalkit(dir.path(), &["witness", "--p", "(+ z (- 1))", "--solution", "1", "--out", "w"]);
    assert_eq!(code, 0);
    let path = dir.path().join("w/theorem.drv");
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen(" 0) BY", " 1) BY", 1);
    assert_ne!(tampered, text);
    std::fs::write(&path, tampered).unwrap();
    let (code, report) = aalkit(dir.path(), &["check-proof", "w/theorem.drv", "--calculus", "w/lp.calc", "--signature", "lp"]);
    assert_eq!(code, 1, "{report}");
    assert!(report.starts_with("RESULT: FAIL\n"));
}

#[test]
fn leibniz_oracle_suite_via_cli() {
    golden("leibniz_oracles", &here(), &["leibniz", "--verify-oracles", "--seed", "3", "--threads", "2"], 0);
}

#[test]
fn cr_chain_ground() {
    let (code, report) = aalkit(&here(), &["cr-chain", "(* (+ 1 1) (+ 1 1))", "(+ (+ 1 1) (+ 1 1))"]);
    assert_eq!(code, 0, "{report}");
    let chain: String = report.lines().skip(2).map(|l| format!("{l}\n")).collect();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.chain"), chain).unwrap();
    let (code, report) = aalkit(dir.path(), &["check-chain", "c.chain"]);
    assert_eq!(code, 0, "{report}");
}
