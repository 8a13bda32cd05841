use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tautline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tautline"))
        .args(args)
        .env_remove("TAUTLINE_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn numbers(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect()
}

fn assert_close(got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
    }
}

const FOUR_STEP: &str = "value\n1.5\n-1\n-0.5\n1\n";

#[test]
fn denoise_four_step_signal() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.csv", FOUR_STEP);
    let out = dir.path().join("u.csv");
    let diag = dir.path().join("d.json");
    let res = tautline(&[
        "denoise",
        "--input",
        s(&input),
        "--lambda",
        "0.5",
        "--output",
        s(&out),
        "--emit-string",
        "--emit-certificate",
        "--emit-tube",
        "--diagnostics",
        s(&diag),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_close(&numbers(&out), &[1.0, -0.25, -0.25, 0.5]);
    assert_eq!(
        fs::read_to_string(dir.path().join("u.string.csv")).unwrap(),
        "x,y\n0,0\n1,1\n3,0.5\n4,1\n"
    );
    for name in ["u.certificate.csv", "u.tube_upper.csv", "u.tube_lower.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let d: serde_json::Value = serde_json::from_str(&fs::read_to_string(&diag).unwrap()).unwrap();
    assert_eq!(d["tv_f"], 4.5);
    assert_eq!(d["tv_u"], 2.0);
    assert_eq!(d["gnorm"], 1.25);
    assert!(d["relative_duality_gap"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn denoise_sign_on_explicit_grid_and_json() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "sign.csv", "x,value\n-1,-1\n0,1\n1,\n");
    let out = dir.path().join("u.csv");
    assert!(tautline(&[
        "denoise",
        "--input",
        s(&input),
        "--lambda",
        "0.5",
        "--output",
        s(&out)
    ])
    .status
    .success());
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "x,value\n-1,-0.5\n0,0.5\n1,\n"
    );

    let input = write(
        &dir,
        "sign.json",
        "{\"interval\":[-1,1],\"breakpoints\":[-1,0,1],\"values\":[-1,1]}",
    );
    let out = dir.path().join("u.json");
    assert!(tautline(&[
        "denoise",
        "--input",
        s(&input),
        "--lambda",
        "0.5",
        "--output",
        s(&out)
    ])
    .status
    .success());
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "{\"interval\":[-1,1],\"breakpoints\":[-1,0,1],\"values\":[-0.5,0.5]}\n"
    );
}

#[test]
fn constant_input_is_fixed_and_grid_is_kept() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.csv", "value\n2\n2\n2\n");
    let out = dir.path().join("u.csv");
    assert!(tautline(&[
        "denoise",
        "--input",
        s(&input),
        "--lambda",
        "3",
        "--output",
        s(&out)
    ])
    .status
    .success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "value\n2\n2\n2\n");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.csv", FOUR_STEP);
    let out = dir.path().join("u.csv");
    let code = |args: &[&str]| tautline(args).status.code().unwrap();

    assert_eq!(
        code(&[
            "denoise",
            "--input",
            s(&input),
            "--lambda",
            "-1",
            "--output",
            s(&out)
        ]),
        4
    );
    assert_eq!(
        code(&[
            "denoise",
            "--input",
            s(&input),
            "--lambda",
            "0",
            "--output",
            s(&out)
        ]),
        4
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&[
            "denoise",
            "--input",
            s(&missing),
            "--lambda",
            "1",
            "--output",
            s(&out)
        ]),
        2
    );
    let nowhere = dir.path().join("no/such/dir/u.csv");
    assert_eq!(
        code(&[
            "denoise",
            "--input",
            s(&input),
            "--lambda",
            "1",
            "--output",
            s(&nowhere)
        ]),
        2
    );
    assert_eq!(
        code(&["denoise", "--input", s(&input), "--output", s(&out)]),
        64
    );
    assert_eq!(code(&["frobnicate"]), 64);
    assert_eq!(code(&["--help"]), 0);

    let bad = write(&dir, "bad.csv", "value\n1\nNaN\n");
    let res = tautline(&[
        "denoise",
        "--input",
        s(&bad),
        "--lambda",
        "1",
        "--output",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bad.csv:3"));

    let unsorted = write(&dir, "unsorted.csv", "x,value\n0,1\n2,3\n1,\n");
    let res = tautline(&[
        "denoise",
        "--input",
        s(&unsorted),
        "--lambda",
        "1",
        "--output",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unsorted.csv:4"));
}

#[test]
fn tolerance_from_environment() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.csv", FOUR_STEP);
    let out = dir.path().join("u.csv");
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_tautline"))
            .args([
                "denoise",
                "--input",
                s(&input),
                "--lambda",
                "0.5",
                "--output",
                s(&out),
            ])
            .env("TAUTLINE_TOL", tol)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(run("1e-6"), Some(0));
    assert_eq!(run("nope"), Some(4));
}

#[test]
fn isotonic_pools_and_sorts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("u.csv");
    let input = write(&dir, "six_step.csv", "value\n-1\n-2\n-0.45\n1\n0.5\n2.05\n");
    assert!(tautline(&[
        "isotonic",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--emit-envelope"
    ])
    .status
    .success());
    assert_close(&numbers(&out), &[-1.5, -1.5, -0.45, 0.75, 0.75, 2.05]);
    let env = fs::read_to_string(dir.path().join("u.envelope.csv")).unwrap();
    let xs: Vec<&str> = env
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(xs, ["0", "2", "3", "5", "6"]);
    assert!(dir.path().join("u.cumulative.csv").exists());

    let sorted = write(&dir, "sorted.csv", "value\n-1\n0\n3\n");
    assert!(
        tautline(&["isotonic", "--input", s(&sorted), "--output", s(&out)])
            .status
            .success()
    );
    assert_close(&numbers(&out), &[-1.0, 0.0, 3.0]);

    let reversed = write(&dir, "rev.csv", "value\n3\n0\n-1\n");
    assert!(
        tautline(&["isotonic", "--input", s(&reversed), "--output", s(&out)])
            .status
            .success()
    );
    assert_close(&numbers(&out), &[2.0 / 3.0; 3]);
}

#[test]
fn sweep_follows_closed_form() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "sign.csv", "x,value\n-1,-1\n0,1\n1,\n");
    let out = dir.path().join("sweep.csv");
    let res = tautline(&[
        "sweep",
        "--input",
        s(&input),
        "--lambda-min",
        "0.25",
        "--lambda-max",
        "2",
        "--count",
        "8",
        "--scale",
        "linear",
        "--output",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("lambda,e,tv_u,fidelity,fidelity_over_lambda\n"));
    for row in text.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let (l, e) = (cols[0], cols[1]);
        let want = if l < 1.0 { 2.0 * l - l * l } else { 1.0 };
        assert!((e - want).abs() < 1e-12, "{row}");
    }

    let bad = tautline(&[
        "sweep",
        "--input",
        s(&input),
        "--lambda-min",
        "2",
        "--lambda-max",
        "1",
        "--output",
        s(&out),
    ]);
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn single_point_sweep_matches_diagnostics() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.csv", FOUR_STEP);
    let out = dir.path().join("sweep.csv");
    let diag = dir.path().join("d.json");
    let u = dir.path().join("u.csv");
    assert!(tautline(&[
        "sweep",
        "--input",
        s(&input),
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "0.5",
        "--count",
        "1",
        "--output",
        s(&out),
    ])
    .status
    .success());
    assert!(tautline(&[
        "denoise",
        "--input",
        s(&input),
        "--lambda",
        "0.5",
        "--output",
        s(&u),
        "--diagnostics",
        s(&diag)
    ])
    .status
    .success());
    let row: Vec<f64> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    let d: serde_json::Value = serde_json::from_str(&fs::read_to_string(&diag).unwrap()).unwrap();
    assert_eq!(row[1], d["energy"].as_f64().unwrap());
    assert_eq!(row[2], d["tv_u"].as_f64().unwrap());
}

#[test]
fn verify_fixture_passes_and_corruption_fails() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.csv", FOUR_STEP);
    let report = dir.path().join("report.txt");
    let res = tautline(&["verify", "--input", s(&input), "--report", s(&report)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(&report).unwrap();
    assert!(!text.contains("FAIL"));
    assert!(text.contains("PASS lambda=0.625 oracle_equivalence"));

    // the true certificate at lambda 0.5 dips to -1 at x = 3; this one does not
    let cert = write(&dir, "cert.csv", "x,y\n0,0\n1,1\n2,-0.5\n3,-0.5\n4,0\n");
    let res = tautline(&[
        "verify",
        "--input",
        s(&input),
        "--lambda",
        "0.5",
        "--certificate",
        s(&cert),
        "--report",
        s(&report),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let text = fs::read_to_string(&report).unwrap();
    assert!(
        text.contains("FAIL supplied certificate.residual"),
        "{text}"
    );

    let good = write(&dir, "good.csv", "x,y\n0,0\n1,1\n2,-0.5\n3,-1\n4,0\n");
    let res = tautline(&[
        "verify",
        "--input",
        s(&input),
        "--lambda",
        "0.5",
        "--certificate",
        s(&good),
        "--report",
        s(&report),
    ]);
    assert!(
        res.status.success(),
        "{}",
        fs::read_to_string(&report).unwrap()
    );
}

#[test]
fn verify_random_corpus_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    assert!(
        tautline(&["verify", "--random", "6", "--seed", "42", "--report", s(&a)])
            .status
            .success()
    );
    assert!(
        tautline(&["verify", "--random", "6", "--seed", "42", "--report", s(&b)])
            .status
            .success()
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        tautline(&["verify", "--seed", "1", "--report", s(&a)])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "f.csv", "value\n0.3\n-2.7\n4.1\n4.0\n-0.9\n1.25\n");
    let mut outputs = Vec::new();
    for name in ["one", "two"] {
        let out = dir.path().join(format!("{name}.csv"));
        let diag = dir.path().join(format!("{name}.json"));
        assert!(tautline(&[
            "denoise",
            "--input",
            s(&input),
            "--lambda",
            "0.7",
            "--output",
            s(&out),
            "--emit-certificate",
            "--diagnostics",
            s(&diag),
        ])
        .status
        .success());
        outputs.push((
            fs::read(&out).unwrap(),
            fs::read(dir.path().join(format!("{name}.certificate.csv"))).unwrap(),
            fs::read(&diag).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}
