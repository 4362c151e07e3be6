use aalkit::cli::run;
use aalkit::gallery::all_bundles;

fn cli(args: &[&str]) -> (i32, String) {
    let o = run(std::iter::once("aalkit").chain(args.iter().copied()));
    (o.status, o.report)
}

#[test]
fn bundles_pass_and_their_files_replay() {
    let dir = tempfile::tempdir().unwrap();
    for b in all_bundles().unwrap() {
        assert!(b.passed(), "{b}");
        let target = dir.path().join(&b.name);
        b.write_to(&target).unwrap();
        let manifest = std::fs::read_to_string(target.join("manifest")).unwrap();
        assert_eq!(manifest.lines().count(), b.manifest.len());
        for line in manifest.lines() {
            let tag = line.rsplit(' ').next().unwrap();
            assert!(["claim", "computed", "immediate"].contains(&tag), "{line}");
        }
        for (name, _) in &b.files {
            let path = target.join(name);
            let p = path.to_str().unwrap();
            let (status, report) = match name.rsplit('.').next().unwrap() {
                "chain" => cli(&["check-chain", p]),
                "alg" => cli(&["parse", p, "--kind", "algebra"]),
                "matrix" => cli(&["parse", p, "--kind", "matrix"]),
                "calc" if b.name == "semilattice" => cli(&["parse", p, "--kind", "calculus", "--signature", "semilattice"]),
                "calc" => cli(&["parse", p, "--kind", "calculus", "--signature", "magma"]),
                other => panic!("unexpected file kind {other}"),
            };
            assert_eq!(status, 0, "{name}: {report}");
        }
    }
}

#[test]
fn matrix_files_drive_model_checks() {
    let dir = tempfile::tempdir().unwrap();
    for b in all_bundles().unwrap() {
        b.write_to(&dir.path().join(&b.name)).unwrap();
    }
    let m = dir.path().join("magma-5");
    let (status, report) = cli(&[
        "model-check",
        "--calculus",
        m.join("cm.calc").to_str().unwrap(),
        "--signature",
        "magma",
        "--algebra",
        m.join("magma_0.matrix").to_str().unwrap(),
    ]);
    assert_eq!(status, 0, "{report}");
    let (status, report) = cli(&["leibniz", "--algebra", m.join("magma_0.matrix").to_str().unwrap()]);
    assert_eq!(status, 0, "{report}");
}
