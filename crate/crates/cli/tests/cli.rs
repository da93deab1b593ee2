use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qualsim::model::CANONICAL_ASSOCIATIONS;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn qualsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qualsim")).args(args).current_dir(root()).output().unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn manifest(dir: &Path, body: &str) -> String {
    let path = dir.join("manifest.in.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn simulate(manifest: &str, out: &Path, extra: &[&str]) -> Output {
    let out = out.display().to_string();
    let mut args = vec!["simulate", "--manifest", manifest, "--out", &out];
    args.extend_from_slice(extra);
    let output = qualsim(&args);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    output
}

#[test]
fn baseline_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), "kind = \"baseline\"\niterations = 3000\nseed = 42\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate(&m, &a, &[]);
    simulate(&m, &b, &[]);
    for file in ["baseline.csv", "baseline.json"] {
        let first = fs::read(a.join(file)).unwrap();
        assert!(!first.is_empty());
        assert_eq!(first, fs::read(b.join(file)).unwrap(), "{file}");
    }
    let csv = fs::read_to_string(a.join("baseline.csv")).unwrap();
    assert_eq!(csv.lines().count(), 46);
    assert!(csv.starts_with("association,p_old,se_old,p_new,se_new,delta,se_delta,relative_loss,money_delta_eur\n"));

    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["seed"], 42);
    assert_eq!(run["iterations"], 3000);
    assert!(run["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(run["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn flags_override_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), "kind = \"baseline\"\niterations = 100000\nseed = 42\npartitions = 3\n");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    simulate(&m, &a, &["--iterations", "2000", "--seed", "7", "--partitions", "2"]);
    simulate(&m, &b, &["--iterations", "2000", "--seed", "7", "--partitions", "2"]);
    simulate(&m, &c, &["--iterations", "2000", "--seed", "8", "--partitions", "2"]);
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("run.json")).unwrap()).unwrap();
    assert_eq!(
        (run["seed"].as_u64(), run["iterations"].as_u64(), run["partitions"].as_u64()),
        (Some(7), Some(2000), Some(2))
    );
    let read = |d: &Path| fs::read(d.join("baseline.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let effective = fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(effective.contains("seed = 7\n") && effective.contains("iterations = 2000\n"), "{effective}");
}

#[test]
fn invalid_manifests_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out").display().to_string();
    for body in [
        "kind = \"baseline\"\niterations = -10\nseed = 42\n",
        "kind = \"baseline\"\niterations = 10\n",
        "kind = \"guesswork\"\niterations = 10\nseed = 1\n",
        "kind = \"weighted\"\niterations = 10\nseed = 1\nseason_weights = [1.0, 1.0]\n",
        "kind = \"baseline\"\niterations = 10\nseed = 1\nformats = [\"pre-2018\", \"no-such-format.toml\"]\n",
    ] {
        let m = manifest(dir.path(), body);
        let output = qualsim(&["simulate", "--manifest", &m, "--out", &out]);
        assert_eq!(code(&output), 2, "{body}");
        assert!(!output.stderr.is_empty());
    }
    let m = manifest(dir.path(), "kind = \"baseline\"\niterations = 10\nseed = 1\n");
    assert_eq!(code(&qualsim(&["simulate", "--manifest", &m, "--iterations", "0"])), 2);
    assert_eq!(code(&qualsim(&["simulate", "--manifest", "/no/such/manifest.toml"])), 2);
    assert!(!Path::new(&out).exists());
}

fn broken_fixtures(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    fs::create_dir_all(&data).unwrap();
    for file in ["ranks.csv", "coefficients.csv", "elo.csv"] {
        let text = fs::read_to_string(root().join("data/fixtures").join(file)).unwrap();
        let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("Hungary,2017/18,")).collect();
        fs::write(data.join(file), kept.join("\n") + "\n").unwrap();
    }
    data
}

#[test]
fn data_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = broken_fixtures(dir.path()).display().to_string();
    let m = manifest(dir.path(), "kind = \"baseline\"\niterations = 10\nseed = 1\n");
    let output = qualsim(&["simulate", "--manifest", &m, "--data", &data]);
    assert_eq!(code(&output), 3);
    assert!(String::from_utf8_lossy(&output.stderr).contains("missing association: Hungary in 2017/18"));

    let output = qualsim(&["validate", "--data", &data]);
    assert_eq!(code(&output), 3);
    assert_eq!(code(&qualsim(&["validate"])), 0);
}

fn bar_labels(svg: &str) -> Vec<String> {
    svg.lines()
        .filter(|l| l.starts_with("<rect x="))
        .map(|l| l.split("<title>").nth(1).unwrap().split(':').next().unwrap().replace("&amp;", "&"))
        .collect()
}

#[test]
fn charts_from_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let m = manifest(dir.path(), "kind = \"baseline\"\niterations = 2000\nseed = 3\n");
    simulate(&m, &out, &[]);
    let report = out.join("baseline.json").display().to_string();
    let output = qualsim(&["chart", &report]);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    let bars = fs::read_to_string(out.join("baseline-delta.svg")).unwrap();
    let labels = bar_labels(&bars);
    assert_eq!(labels.len(), 45);
    assert_eq!(labels, CANONICAL_ASSOCIATIONS.map(String::from).to_vec());
    let scatter = fs::read_to_string(out.join("baseline-scatter.svg")).unwrap();
    assert_eq!(scatter.matches("<circle").count(), 45);

    // The CSV report charts the same way.
    let charts = dir.path().join("csv-charts");
    let csv = out.join("baseline.csv").display().to_string();
    assert_eq!(code(&qualsim(&["chart", &csv, "--out", &charts.display().to_string()])), 0);
    assert_eq!(fs::read_to_string(charts.join("baseline-delta.svg")).unwrap(), bars);

    let conv = dir.path().join("conv");
    let m = manifest(dir.path(), "kind = \"convergence\"\niterations = 4000\nseed = 3\ncheckpoints = [1000, 2000]\n");
    simulate(&m, &conv, &[]);
    let csv = fs::read_to_string(conv.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let report = conv.join("convergence.json").display().to_string();
    assert_eq!(code(&qualsim(&["chart", &report])), 0);
    let svg = fs::read_to_string(conv.join("convergence.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("pre-2018 format (left scale)") && svg.contains("post-2018 format (right scale)"));
}

#[test]
fn chart_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&qualsim(&["chart", &empty.display().to_string()])), 3);
    let header_only = dir.path().join("header.csv");
    fs::write(&header_only, "association,p_old,se_old,p_new,se_new,delta,se_delta,relative_loss,money_delta_eur\n")
        .unwrap();
    assert_eq!(code(&qualsim(&["chart", &header_only.display().to_string()])), 3);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&qualsim(&["chart", &missing.display().to_string()])), 3);
}

#[test]
fn other_kinds_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, rows) in [("weighted", 46), ("sensitivity", 1 + 45 * 3), ("seeding", 1 + 45 * 2)] {
        let m = manifest(dir.path(), &format!("kind = \"{kind}\"\niterations = 1000\nseed = 5\n"));
        let out = dir.path().join(kind);
        simulate(&m, &out, &[]);
        let csv = fs::read_to_string(out.join(format!("{kind}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), rows, "{kind}");
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("{kind}.json"))).unwrap()).unwrap();
        assert_eq!(json["kind"], kind);
        let report = out.join(format!("{kind}.json")).display().to_string();
        assert_eq!(code(&qualsim(&["chart", &report])), 0, "{kind}");
    }
}

#[test]
fn fetch_elo_from_a_recorded_response() {
    let dir = tempfile::tempdir().unwrap();
    let mapping = dir.path().join("mapping.csv");
    fs::write(&mapping, "association,season,club\nHungary,2019/20,Ferencvaros\nGibraltar,2019/20,Lincoln Red Imps\n")
        .unwrap();
    let recorded = root().join("crates/core/tests/data/clubelo_2019-09-01.csv").display().to_string();
    let out = dir.path().join("elo.candidate.csv");
    let args = |out: &Path| {
        vec![
            "fetch-elo".to_string(),
            "--season".into(),
            "2019/20".into(),
            "--mapping".into(),
            mapping.display().to_string(),
            "--recorded".into(),
            recorded.clone(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let run = |out: &Path| {
        let a = args(out);
        qualsim(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let output = run(&out);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "association,season,value\nHungary,2019/20,1468\n");
    assert!(String::from_utf8_lossy(&output.stderr).contains("unmapped: Gibraltar"));
    // Never overwrites.
    assert_eq!(code(&run(&out)), 3);
}
