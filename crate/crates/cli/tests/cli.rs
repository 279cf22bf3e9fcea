use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adaspline::datasets::{read_csv, resample_grid, write_csv};
use adaspline::{assemble_system, BoundingBox, FitConfig, KnotVector, PointCloud, SplineModel};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaspline"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn key_values(path: &Path) -> Vec<(String, String)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].to_string())
        })
        .collect()
}

fn lookup(rows: &[(String, String)], key: &str) -> String {
    rows.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no {key}"))
        .1
        .clone()
}

#[test]
fn synth_writes_requested_rows() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "c.csv");
    ok(&[
        "synth",
        "--kind",
        "polysinc",
        "--count",
        "1000",
        "--seed",
        "7",
        "--out",
        s(&out),
    ]);
    let cloud = read_csv(&out).unwrap();
    assert_eq!(cloud.len(), 1000);
    assert_eq!(cloud.dim(), 2);
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.csv");
    let b = p(&dir, "b.csv");
    for path in [&a, &b] {
        ok(&[
            "synth",
            "--kind",
            "annulus",
            "--count",
            "500",
            "--seed",
            "3",
            "--out",
            s(path),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
#[allow(clippy::approx_constant)]
fn void_thins_disk() {
    let dir = TempDir::new().unwrap();
    let plain = p(&dir, "plain.csv");
    let thinned = p(&dir, "thin.csv");
    let n = 20_000;
    let count = n.to_string();
    ok(&[
        "synth",
        "--kind",
        "polysinc",
        "--count",
        &count,
        "--seed",
        "1",
        "--out",
        s(&plain),
    ]);
    ok(&[
        "synth",
        "--kind",
        "polysinc",
        "--count",
        &count,
        "--seed",
        "1",
        "--void",
        "6.28,6.28,3.14,0.02",
        "--out",
        s(&thinned),
    ]);
    let in_disk = |path: &Path| {
        read_csv(path)
            .unwrap()
            .points()
            .filter(|(x, _)| (x[0] - 6.28).powi(2) + (x[1] - 6.28).powi(2) <= 3.14 * 3.14)
            .count() as f64
    };
    // disk area fraction a; retained density inside is 0.02 of the ambient one
    let a = std::f64::consts::PI * 3.14 * 3.14 / (8.0 * std::f64::consts::PI).powi(2);
    let expected_plain = n as f64 * a;
    let q = 0.02 * a / (0.02 * a + 1.0 - a);
    let expected_thin = n as f64 * q;
    let sd_plain = (n as f64 * a * (1.0 - a)).sqrt();
    let sd_thin = (n as f64 * q * (1.0 - q)).sqrt();
    assert!((in_disk(&plain) - expected_plain).abs() < 5.0 * sd_plain);
    assert!((in_disk(&thinned) - expected_thin).abs() < 5.0 * sd_thin);
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "x.csv");
    for args in [
        vec!["synth", "--kind", "cubes", "--out", s(&out)],
        vec![
            "synth",
            "--kind",
            "polysinc",
            "--void",
            "1,2,3",
            "--out",
            s(&out),
        ],
        vec![
            "synth",
            "--kind",
            "annulus",
            "--void",
            "0,0,1,0.5",
            "--out",
            s(&out),
        ],
        vec![
            "synth",
            "--kind",
            "polysinc",
            "--void",
            "0,0,1,1.5",
            "--out",
            s(&out),
        ],
        vec!["fit", "--input", s(&out)],
    ] {
        let r = run(&args);
        assert_eq!(r.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&r.stderr).starts_with("error:"),
            "{args:?}"
        );
    }
    assert!(!out.exists());
}

/// Samples of a polynomial that a cubic spline reproduces exactly.
fn cubic_cloud(path: &Path) {
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for i in 0..30 {
        for j in 0..30 {
            let x = i as f64 / 29.0 * 2.0;
            let y = -1.0 + j as f64 / 29.0 * 2.0;
            coords.extend([x, y]);
            values.push(x * x * x - 2.0 * x * y + y * y - 0.5 * y * y * y);
        }
    }
    write_csv(&PointCloud::new(2, 1, coords, values).unwrap(), path).unwrap();
}

#[test]
fn fit_recovers_spline_data() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "d.csv");
    let model = p(&dir, "m.json");
    let report = p(&dir, "r.csv");
    cubic_cloud(&data);
    ok(&[
        "fit",
        "--input",
        s(&data),
        "--degree",
        "3",
        "--ctrl",
        "6,6",
        "--threshold",
        "0",
        "--out",
        s(&model),
        "--report",
        s(&report),
    ]);
    let rows = key_values(&report);
    let residual: f64 = lookup(&rows, "data_residual_1").parse().unwrap();
    assert!(residual <= 1e-8, "residual {residual}");
    assert_eq!(lookup(&rows, "regularized"), "0");

    // CG gives the same model within solver tolerance
    let cg = p(&dir, "cg.json");
    ok(&[
        "fit",
        "--input",
        s(&data),
        "--ctrl",
        "6,6",
        "--threshold",
        "0",
        "--solver",
        "cg",
        "--out",
        s(&cg),
    ]);
    let pts = p(&dir, "pts.csv");
    fs::write(&pts, "x1,x2\n0.3,0.2\n1.9,-0.9\n").unwrap();
    let e1 = p(&dir, "e1.csv");
    let e2 = p(&dir, "e2.csv");
    ok(&[
        "eval",
        "--model",
        s(&model),
        "--points",
        s(&pts),
        "--out",
        s(&e1),
    ]);
    ok(&[
        "eval",
        "--model",
        s(&cg),
        "--points",
        s(&pts),
        "--out",
        s(&e2),
    ]);
    let a = read_csv(&e1).unwrap();
    let b = read_csv(&e2).unwrap();
    for ((x, va), &vb) in a.points().map(|(x, v)| (x, v[0])).zip(b.values()) {
        let truth = x[0].powi(3) - 2.0 * x[0] * x[1] + x[1] * x[1] - 0.5 * x[1].powi(3);
        assert!((va - truth).abs() < 1e-9);
        assert!((vb - truth).abs() < 1e-7);
    }
}

#[test]
fn annulus_needs_regularization() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "a.csv");
    let model = p(&dir, "m.json");
    let report = p(&dir, "r.csv");
    ok(&[
        "synth",
        "--kind",
        "annulus",
        "--count",
        "5000",
        "--seed",
        "11",
        "--out",
        s(&data),
    ]);

    let fail = run(&[
        "fit",
        "--input",
        s(&data),
        "--degree",
        "2",
        "--ctrl",
        "40,40",
        "--threshold",
        "0",
        "--orders",
        "1,2",
        "--out",
        s(&model),
    ]);
    assert_eq!(fail.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&fail.stderr);
    assert!(
        stderr.starts_with("error:") && stderr.contains("singular"),
        "{stderr}"
    );
    assert!(!model.exists());

    ok(&[
        "fit",
        "--input",
        s(&data),
        "--degree",
        "2",
        "--ctrl",
        "40,40",
        "--threshold",
        "5",
        "--orders",
        "1,2",
        "--out",
        s(&model),
        "--report",
        s(&report),
    ]);
    let rows = key_values(&report);
    let cond: f64 = lookup(&rows, "condition_stacked").parse().unwrap();
    assert!(cond.is_finite() && cond >= 1.0);
    assert_eq!(lookup(&rows, "rank_deficient"), "false");
    assert!(lookup(&rows, "regularized").parse::<usize>().unwrap() > 0);
}

fn constant_model_file(path: &Path, c: f64) {
    let knots = [
        KnotVector::uniform_clamped(4, 2).unwrap(),
        KnotVector::uniform_clamped(5, 2).unwrap(),
    ];
    let json = serde_json::json!({
        "format": "adaspline-model",
        "version": 1,
        "dim": 2,
        "value_dim": 1,
        "degree": 2,
        "shape": [4, 5],
        "knots": knots.iter().map(|k| k.knots().to_vec()).collect::<Vec<_>>(),
        "bbox": {"min": [0.0, -1.0], "max": [1.0, 1.0]},
        "control": vec![vec![c]; 20],
    });
    fs::write(path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
}

#[test]
fn eval_constant_model_grid() {
    let dir = TempDir::new().unwrap();
    let model = p(&dir, "m.json");
    let out = p(&dir, "g.csv");
    constant_model_file(&model, 2.5);
    ok(&[
        "eval",
        "--model",
        s(&model),
        "--grid",
        "7,9",
        "--out",
        s(&out),
    ]);
    let grid = read_csv(&out).unwrap();
    assert_eq!(grid.len(), 63);
    assert!(grid.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
}

fn random_model(seed: u64) -> SplineModel {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let knots = vec![
        KnotVector::uniform_clamped(6, 3).unwrap(),
        KnotVector::uniform_clamped(5, 3).unwrap(),
    ];
    let control = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SplineModel::new(
        knots,
        2,
        control,
        BoundingBox::new(vec![-2.0, 1.0], vec![2.0, 3.0]).unwrap(),
    )
    .unwrap()
}

fn save_model(model: &SplineModel, path: &Path) {
    let json = serde_json::json!({
        "format": "adaspline-model",
        "version": 1,
        "dim": model.dim(),
        "value_dim": model.value_dim(),
        "degree": model.degree(),
        "shape": model.knots().iter().map(KnotVector::len).collect::<Vec<_>>(),
        "knots": model.knots().iter().map(|k| k.knots().to_vec()).collect::<Vec<_>>(),
        "bbox": {"min": model.bbox().min, "max": model.bbox().max},
        "control": model.control_points().chunks(model.value_dim()).collect::<Vec<_>>(),
    });
    fs::write(path, serde_json::to_string(&json).unwrap()).unwrap();
}

#[test]
fn eval_matches_library() {
    let dir = TempDir::new().unwrap();
    let model = random_model(5);
    let path = p(&dir, "m.json");
    save_model(&model, &path);

    let grid = p(&dir, "g.csv");
    ok(&[
        "eval",
        "--model",
        s(&path),
        "--grid",
        "11,6",
        "--out",
        s(&grid),
    ]);
    let cli = read_csv(&grid).unwrap();
    let lib = resample_grid(&model, &[11, 6]).unwrap();
    assert_eq!(cli.coords(), lib.coords());
    assert_eq!(cli.values(), lib.values());

    let pts = p(&dir, "pts.csv");
    fs::write(&pts, "x1,x2,extra\n-2,1,9\n2,3,9\n-2,3,9\n").unwrap();
    let out = p(&dir, "e.csv");
    ok(&[
        "eval",
        "--model",
        s(&path),
        "--points",
        s(&pts),
        "--out",
        s(&out),
    ]);
    let e = read_csv(&out).unwrap();
    assert_eq!(e.value_dim(), 2);
    // corners reproduce the corner control points
    let corners = [0, 29, 4];
    for (i, &rank) in corners.iter().enumerate() {
        for (a, b) in e.value(i).iter().zip(model.control_point(rank)) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn eval_rejects_mismatched_input() {
    let dir = TempDir::new().unwrap();
    let path = p(&dir, "m.json");
    save_model(&random_model(1), &path);
    let pts = p(&dir, "pts.csv");
    let out = p(&dir, "e.csv");

    fs::write(&pts, "x1\n0.5\n").unwrap();
    assert_eq!(
        run(&[
            "eval",
            "--model",
            s(&path),
            "--points",
            s(&pts),
            "--out",
            s(&out)
        ])
        .status
        .code(),
        Some(4)
    );

    fs::write(&pts, "x1,x2\n5.0,2.0\n").unwrap();
    let r = run(&[
        "eval",
        "--model",
        s(&path),
        "--points",
        s(&pts),
        "--out",
        s(&out),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error:"));

    assert_eq!(
        run(&[
            "eval",
            "--model",
            s(&path),
            "--grid",
            "4,4,4",
            "--out",
            s(&out)
        ])
        .status
        .code(),
        Some(2)
    );

    let broken = p(&dir, "broken.json");
    fs::write(&broken, "{\"format\": \"adaspline-model\", \"version\": 1}").unwrap();
    assert_eq!(
        run(&[
            "eval",
            "--model",
            s(&broken),
            "--grid",
            "4,4",
            "--out",
            s(&out)
        ])
        .status
        .code(),
        Some(4)
    );
    assert_eq!(
        run(&[
            "eval",
            "--model",
            s(&p(&dir, "missing.json")),
            "--grid",
            "4,4",
            "--out",
            s(&out)
        ])
        .status
        .code(),
        Some(4)
    );
}

#[test]
fn report_self_comparison_is_zero() {
    let dir = TempDir::new().unwrap();
    let path = p(&dir, "m.json");
    save_model(&random_model(2), &path);
    let grid = p(&dir, "g.csv");
    ok(&[
        "eval",
        "--model",
        s(&path),
        "--grid",
        "20,20",
        "--out",
        s(&grid),
    ]);
    let out = p(&dir, "r.csv");
    ok(&[
        "report",
        "--model",
        s(&path),
        "--reference",
        s(&grid),
        "--out",
        s(&out),
    ]);
    let rows = key_values(&out);
    assert!(lookup(&rows, "max_error").parse::<f64>().unwrap() < 1e-13);
    assert_eq!(lookup(&rows, "samples"), "800");

    ok(&[
        "report",
        "--model",
        s(&path),
        "--reference",
        s(&grid),
        "--roi",
        "-2,0,1,2",
        "--out",
        s(&out),
    ]);
    let rows = key_values(&out);
    let inside = lookup(&rows, "samples").parse::<usize>().unwrap();
    assert!(inside > 0 && inside < 800);

    let r = run(&[
        "report",
        "--model",
        s(&path),
        "--reference",
        s(&grid),
        "--roi",
        "-3,0,1,2",
    ]);
    assert_eq!(r.status.code(), Some(2));
    let r = run(&[
        "report",
        "--model",
        s(&path),
        "--reference",
        s(&grid),
        "--roi",
        "-2,0,1",
    ]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn report_polysinc_and_lambda_export() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "c.csv");
    let model = p(&dir, "m.json");
    let fit_lambda = p(&dir, "fit_lambda.csv");
    ok(&[
        "synth",
        "--kind",
        "polysinc",
        "--count",
        "8000",
        "--seed",
        "4",
        "--default-voids",
        "0.05",
        "--out",
        s(&data),
    ]);
    ok(&[
        "fit",
        "--input",
        s(&data),
        "--degree",
        "3",
        "--ctrl",
        "25,25",
        "--threshold",
        "6",
        "--out",
        s(&model),
        "--lambda-out",
        s(&fit_lambda),
    ]);
    let report = p(&dir, "r.csv");
    let lambda = p(&dir, "lambda.csv");
    ok(&[
        "report",
        "--model",
        s(&model),
        "--reference",
        "polysinc",
        "--roi",
        "-9,-3,-9,-3",
        "--grid",
        "64,64",
        "--out",
        s(&report),
        "--lambda-out",
        s(&lambda),
        "--input",
        s(&data),
        "--threshold",
        "6",
    ]);
    let rows = key_values(&report);
    let max: f64 = lookup(&rows, "max_error").parse().unwrap();
    assert!(max.is_finite() && max > 0.0);
    assert_eq!(lookup(&rows, "samples"), "4096");

    assert_eq!(fs::read(&lambda).unwrap(), fs::read(&fit_lambda).unwrap());
    let cloud = read_csv(&data).unwrap();
    let sys = assemble_system(&cloud, &FitConfig::new(3, vec![25, 25], 6.0, vec![2])).unwrap();
    let mut rdr = csv::Reader::from_path(&lambda).unwrap();
    let exported: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[6].parse().unwrap())
        .collect();
    assert_eq!(exported, sys.lambdas.lambda);
    assert!(exported.iter().any(|&l| l > 0.0));
}
