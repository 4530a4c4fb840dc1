use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn kda(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kda"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = kda(dir, args);
    assert!(out.status.success(), "kda {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Header line plus data rows of a CSV written by the tool.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let c = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[c].parse().unwrap()).collect()
}

#[test]
fn scenario_one_coefficients_match_reference_values() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["scenario", "1", "--grid=-1,1,5", "--lambda-curve", "3"]);
    let (header, rows) = read_csv(&tmp.path().join("scenario1_coefficients.csv"));
    assert_eq!(header[0], "term");
    let cell = |term: &str, col: &str| -> f64 {
        let c = header.iter().position(|h| h == col).unwrap();
        let r = rows.iter().find(|r| r[0] == term).unwrap();
        r[c].parse().unwrap()
    };
    // Leading coefficients of the linear discriminant, up to a global sign.
    let s = cell("x1", "homo1").signum();
    assert!((s * cell("x1", "homo1") - 0.6060).abs() < 1e-3);
    assert!((s * cell("x2", "homo1") - 0.7954).abs() < 1e-3);
    let s = cell("x1", "inhomo3").signum();
    assert!((s * cell("x1^2", "inhomo3") + 0.0141).abs() < 1e-3);
}

#[test]
fn scenario_two_linear_ratio_is_zero() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["scenario", "2", "--grid=-1,1,5", "--lambda-curve", "4"]);
    let lambda = column(&tmp.path().join("scenario2_lambda_curve.csv"), "lambda");
    assert_eq!(lambda.len(), 4);
    assert_eq!(lambda[0], 0.0);
    assert!(lambda.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
    // The odd homogeneous fit has no signal, so its grid is identically zero.
    let zeros = column(&tmp.path().join("scenario2_grid_homo1.csv"), "score");
    assert!(zeros.iter().all(|&v| v == 0.0));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["scenario", "1", "--grid=-1,1,5", "--sample-n", "30", "--poly-homo", "1", "--poly-inhomo", "2"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for name in ["scenario1_sample_points.csv", "scenario1_sample_grid_gauss1.csv"] {
        let strip = |p: &Path| fs::read_to_string(p).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
        assert_eq!(strip(&a.path().join(name)), strip(&b.path().join(name)), "{name}");
    }
}

#[test]
fn csv_header_carries_the_configuration() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--seed", "11", "rff", "1", "--d", "1..3", "--grid-d", "2", "--grid=-1,1,3"]);
    let text = fs::read_to_string(tmp.path().join("scenario1_rff_lambda_curve.csv")).unwrap();
    let first = text.lines().next().unwrap();
    let doc: serde_json::Value = serde_json::from_str(first.trim_start_matches("# ")).unwrap();
    assert_eq!(doc["config"]["seed"], 11);
    assert_eq!(doc["config"]["command"]["command"], "rff");
}

#[test]
fn nested_feature_ratios_do_not_decrease() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["rff", "2", "--d", "1..25", "--grid-d", "5", "--grid=-1,1,3"]);
    let lambda = column(&tmp.path().join("scenario2_rff_lambda_curve.csv"), "lambda");
    assert_eq!(lambda.len(), 25);
    assert!(lambda.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)), "{lambda:?}");
}

#[test]
fn fitted_model_scores_points_consistently_with_grid() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["fit", "--method", "sample", "--scenario", "1", "--kernel", "inhomo:2", "--sample-n", "60"]);
    ok(dir, &["grid", dir.join("model.json").to_str().unwrap(), "--grid=-1,1,3"]);
    let points = dir.join("points.csv");
    fs::write(&points, "x1,x2,label\n-1,-1,1\n0,1,2\n1,0,1\n").unwrap();
    ok(dir, &["score", dir.join("model.json").to_str().unwrap(), points.to_str().unwrap()]);

    let (gh, grid) = read_csv(&dir.join("grid.csv"));
    let scores = column(&dir.join("scores.csv"), "score");
    let find = |x: f64, y: f64| -> f64 {
        let row = grid.iter().find(|r| r[0].parse::<f64>().unwrap() == x && r[1].parse::<f64>().unwrap() == y).unwrap();
        row[gh.iter().position(|h| h == "score").unwrap()].parse().unwrap()
    };
    for (k, (x, y)) in [(-1.0, -1.0), (0.0, 1.0), (1.0, 0.0)].into_iter().enumerate() {
        assert!((find(x, y) - scores[k]).abs() <= 1e-12 * scores[k].abs().max(1.0));
    }
    let predicted = column(&dir.join("scores.csv"), "predicted");
    assert!(predicted.iter().all(|&p| p == 1.0 || p == 2.0));
}

#[test]
fn population_model_round_trips_through_json() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["--format", "json", "fit", "--scenario", "2", "--kernel", "inhomo:4"]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("model.json")).unwrap()).unwrap();
    assert_eq!(doc["model"]["model_type"], "population");
    ok(dir, &["--format", "json", "grid", dir.join("model.json").to_str().unwrap(), "--grid=-2,2,5"]);
    let grid: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("grid.json")).unwrap()).unwrap();
    assert_eq!(grid["rows"].as_array().unwrap().len(), 25);
}

#[test]
fn bad_kernel_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = kda(tmp.path(), &["fit", "--kernel", "bogus:3"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn unknown_scenario_reports_json_error() {
    let tmp = TempDir::new().unwrap();
    let out = kda(tmp.path(), &["scenario", "9"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("scenario"));
}

#[test]
fn missing_data_file_names_the_path() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("absent.data");
    let out = kda(tmp.path(), &["spam", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
    assert!(err["error"]["message"].as_str().unwrap().contains("absent.data"));
}

#[test]
fn spam_pipeline_runs_on_a_synthetic_table() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("synthetic.data");
    let mut text = String::new();
    for i in 0..120usize {
        let spam = i % 2;
        let mut row: Vec<String> = (0..54)
            .map(|j| {
                let v = ((i * 7 + j * 13) % 17) as f64 * 0.1 + if j < 4 { spam as f64 } else { 0.0 };
                if (i + j) % 3 == 0 { "0".into() } else { format!("{v:.2}") }
            })
            .collect();
        row.push(format!("{:.3}", 1.5 + (i % 5) as f64 + spam as f64));
        row.push(((i % 11) + 1 + 10 * spam).to_string());
        row.push(((i % 29) + 5).to_string());
        row.push(spam.to_string());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&data, text).unwrap();
    ok(tmp.path(), &["spam", data.to_str().unwrap(), "--degrees", "1..2", "--grid-n", "11"]);
    let overall = column(&tmp.path().join("spam_errors.csv"), "overall");
    assert_eq!(overall.len(), 2);
    assert!(overall.iter().all(|e| (0.0..=1.0).contains(e)));
    let pre: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("spam_preprocessing.json")).unwrap()).unwrap();
    assert_eq!(pre["summary"]["rows"], 120);
}
