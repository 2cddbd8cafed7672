//! End-to-end tests driving the compiled binary: file in, file out, exit
//! codes as documented.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaussim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_square(dir: &Path) -> PathBuf {
    let path = dir.join("square.json");
    std::fs::write(
        &path,
        r#"{"dim": 2, "vertices": [[1,1],[-1,1],[-1,-1],[1,-1]], "facets": []}"#,
    )
    .unwrap();
    path
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn square_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let square = write_square(dir.path());
    let mu = dir.path().join("mu.json");
    let report = dir.path().join("report.json");
    let solved = dir.path().join("solved.json");

    let out = run(&[
        "gen-measure",
        "--kind",
        "from-body",
        "--body",
        square.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--out",
        mu.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    // Four atoms of mass pi at the diagonals.
    let mu_json = json_file(&mu);
    let atoms = mu_json["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 4);
    for atom in atoms {
        let mass = atom["mass"].as_f64().unwrap();
        assert!((mass - std::f64::consts::PI).abs() < 1e-12, "mass {mass}");
    }

    let out = run(&[
        "solve",
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--out",
        report.to_str().unwrap(),
        "--export-body",
        solved.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    let report_json = json_file(&report);
    assert_eq!(report_json["status"], "converged");
    assert!(report_json["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report_json["options"]["p"].as_f64().unwrap(), 2.0);

    // The recovered body is the square again: verify closes the loop.
    let verdict = dir.path().join("verify.json");
    let out = run(&[
        "verify",
        "--body",
        solved.to_str().unwrap(),
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--out",
        verdict.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let verdict_json = json_file(&verdict);
    assert!(verdict_json["tv_residual"].as_f64().unwrap() <= 1e-8);

    // Determinism: running the solve again yields byte-identical output.
    let before = std::fs::read(&report).unwrap();
    let out = run(&[
        "solve",
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    assert_eq!(before, std::fs::read(&report).unwrap());
}

#[test]
fn inadmissible_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let hemi = dir.path().join("hemi.json");
    std::fs::write(
        &hemi,
        r#"{"dim": 2, "kind": "atomic", "atoms": [
            {"dir": [1.0, 0.0], "mass": 1.0},
            {"dir": [0.0, 1.0], "mass": 1.0}]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("report.json");

    let out = run(&[
        "solve",
        "--mu",
        hemi.to_str().unwrap(),
        "--p",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("hemisphere"), "{stderr}");

    let out = run(&[
        "solve",
        "--mu",
        hemi.to_str().unwrap(),
        "--p",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("p must be nonzero"), "{stderr}");

    // check-measure agrees without running a solve.
    let out = run(&["check-measure", "--mu", hemi.to_str().unwrap(), "--p", "2"]);
    assert_code(&out, 2);
    let verdict: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("verdict JSON on stdout");
    assert_eq!(verdict["admissible"], false);
    assert_eq!(verdict["hemisphere_ok"], false);
}

#[test]
fn exhausted_budget_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let mu = dir.path().join("mu.json");
    let report = dir.path().join("report.json");
    let out = run(&[
        "gen-measure",
        "--kind",
        "bump",
        "--dim",
        "2",
        "--level",
        "2",
        "--c2",
        "0.5",
        "--out",
        mu.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    let out = run(&[
        "solve",
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--max-iters",
        "1",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_code(&out, 4);
    assert_eq!(json_file(&report)["status"], "max-iters");
}

#[test]
fn uniform_and_bump_generators_measure_up() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = dir.path().join("uniform.json");
    let out = run(&[
        "gen-measure",
        "--kind",
        "uniform",
        "--dim",
        "2",
        "--level",
        "1",
        "--out",
        uniform.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("total mass 6.283185307180"),
        "uniform density on the circle must have mass 2 pi: {stdout}"
    );

    // A bump with zero amplitude is the uniform density, byte for byte.
    let flat = dir.path().join("flat.json");
    let out = run(&[
        "gen-measure",
        "--kind",
        "bump",
        "--dim",
        "2",
        "--level",
        "1",
        "--c1",
        "1",
        "--c2",
        "0",
        "--out",
        flat.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    assert_eq!(
        std::fs::read(&uniform).unwrap(),
        std::fs::read(&flat).unwrap()
    );

    // The even variant is exactly symmetric under antipody.
    let even = dir.path().join("even.json");
    let out = run(&[
        "gen-measure",
        "--kind",
        "bump",
        "--dim",
        "3",
        "--level",
        "1",
        "--axis",
        "0,0,1",
        "--even",
        "--out",
        even.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let even_json = json_file(&even);
    assert_eq!(even_json["kind"], "density");
    let out = run(&["check-measure", "--mu", even.to_str().unwrap()]);
    assert_code(&out, 0);
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["even"], true);
}

#[test]
fn entropy_command_matches_the_square_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let square = write_square(dir.path());
    let out = run(&[
        "entropy",
        "--body",
        square.to_str().unwrap(),
        "--level",
        "3",
        "--quad-depth",
        "4",
    ]);
    assert_code(&out, 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let g = json["entropy_support"].as_f64().unwrap();
    let e = json["entropy_radial"].as_f64().unwrap();
    // pi ln 2 - 4 Catalan and 2 pi ln 2 - 4 Catalan.
    assert!((g - (-1.4862762864052739)).abs() < 1e-10, "G = {g}");
    assert!((e - 0.6913098038983284).abs() < 1e-10, "E = {e}");
}

#[test]
fn exports_produce_obj_csv_and_grid_json() {
    let dir = tempfile::tempdir().unwrap();
    let square = write_square(dir.path());

    let csv = dir.path().join("square.csv");
    let out = run(&[
        "export",
        "--body",
        square.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y\n"));
    assert_eq!(text.lines().count(), 6, "header + closed 4-vertex loop");

    // OBJ needs a 3-dimensional body.
    let out = run(&[
        "export",
        "--body",
        square.to_str().unwrap(),
        "--format",
        "obj",
        "--out",
        dir.path().join("square.obj").to_str().unwrap(),
    ]);
    assert_code(&out, 1);

    let octa = dir.path().join("octa.json");
    std::fs::write(
        &octa,
        r#"{"dim": 3, "vertices": [[1,0,0],[-1,0,0],[0,1,0],[0,-1,0],[0,0,1],[0,0,-1]], "facets": []}"#,
    )
    .unwrap();
    let obj = dir.path().join("octa.obj");
    let out = run(&[
        "export",
        "--body",
        octa.to_str().unwrap(),
        "--format",
        "obj",
        "--out",
        obj.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 6);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 8);

    let grid = dir.path().join("grid.json");
    let out = run(&[
        "export",
        "--grid-dim",
        "3",
        "--grid-level",
        "1",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let grid_json = json_file(&grid);
    assert_eq!(grid_json["dirs"].as_array().unwrap().len(), 42);
    let areas: f64 = grid_json["cell_areas"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_f64().unwrap())
        .sum();
    assert!((areas - 4.0 * std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn plot_data_tabulates_radius_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let square = write_square(dir.path());
    let mu = dir.path().join("mu.json");
    run(&[
        "gen-measure",
        "--kind",
        "from-body",
        "--body",
        square.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--out",
        mu.to_str().unwrap(),
    ]);

    let csv = dir.path().join("profile.csv");
    let out = run(&[
        "plot-data",
        "--body",
        square.to_str().unwrap(),
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("ux,uy,radius,source_cell_mass,image_mass,target_mass,abs_residual")
    );
    assert_eq!(lines.count(), 32, "one row per level-2 direction");
    // The body produced the target, so every residual column entry is 0.
    for line in text.lines().skip(1) {
        let last = line.rsplit(',').next().unwrap();
        assert_eq!(last.parse::<f64>().unwrap(), 0.0, "line {line}");
    }
}

#[test]
fn malformed_inputs_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = run(&[
        "solve",
        "--mu",
        bad.to_str().unwrap(),
        "--p",
        "2",
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_code(&out, 1);

    let negative = dir.path().join("negative.json");
    std::fs::write(
        &negative,
        r#"{"dim": 2, "kind": "atomic", "atoms": [{"dir": [1.0, 0.0], "mass": -1.0}]}"#,
    )
    .unwrap();
    let out = run(&[
        "check-measure",
        "--mu",
        negative.to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("negative mass"), "{stderr}");

    let missing = dir.path().join("does-not-exist.json");
    let out = run(&["entropy", "--body", missing.to_str().unwrap()]);
    assert_code(&out, 1);
}

#[test]
fn ma_verification_runs_on_a_solved_ball() {
    let dir = tempfile::tempdir().unwrap();
    // A uniform density target weights every cell by its area, which is
    // exactly the image measure of the unit ball: the solve is immediate
    // and the recovered body is smooth enough for the curvature check.
    let mu = dir.path().join("mu.json");
    let out = run(&[
        "gen-measure",
        "--kind",
        "uniform",
        "--dim",
        "3",
        "--level",
        "1",
        "--out",
        mu.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    let report = dir.path().join("report.json");
    let solved = dir.path().join("solved.json");
    let out = run(&[
        "solve",
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "1",
        "--out",
        report.to_str().unwrap(),
        "--export-body",
        solved.to_str().unwrap(),
    ]);
    assert_code(&out, 0);

    let verdict = dir.path().join("verify.json");
    let out = run(&[
        "verify",
        "--body",
        solved.to_str().unwrap(),
        "--mu",
        mu.to_str().unwrap(),
        "--p",
        "2",
        "--level",
        "1",
        "--ma",
        "--out",
        verdict.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let verdict_json = json_file(&verdict);
    assert!(verdict_json["tv_residual"].as_f64().unwrap() <= 1e-9);
    assert!(
        verdict_json["ma_max_abs"].as_f64().unwrap() <= 1e-9,
        "the unit ball satisfies the curvature equation on the nose"
    );
    assert_eq!(
        verdict_json["ma_residuals"].as_array().unwrap().len(),
        42,
        "one residual per level-1 node"
    );
}
