use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_str()
        .unwrap()
        .to_owned()
}

fn momtail(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momtail"))
        .args(args)
        .env("MOMTAIL_CACHE_DIR", cache)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_label(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"].as_str().unwrap().to_owned()
}

#[test]
fn dirac_moments_are_powers_and_cached() {
    let cache = tempfile::tempdir().unwrap();
    let out = momtail(
        cache.path(),
        &["moments", &data("dirac_two.json"), "--k-max", "5"],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let values: Vec<String> = rows.records().map(|r| r.unwrap()[1].to_owned()).collect();
    assert_eq!(values, ["1", "2", "4", "8", "16", "32"]);
    let cached: Vec<PathBuf> = std::fs::read_dir(cache.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(cached.len(), 1);

    // A shorter request is served from the stored table.
    let again = momtail(
        cache.path(),
        &["moments", &data("dirac_two.json"), "--k-max", "2"],
    );
    assert_eq!(String::from_utf8(again.stdout).unwrap().lines().count(), 4);
}

#[test]
fn exit_codes() {
    let cache = tempfile::tempdir().unwrap();
    let missing = momtail(cache.path(), &["moments", "no_such_file.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(error_label(&missing), "input");

    let bad_interval = momtail(
        cache.path(),
        &["construct", "alternating", "--a", "1", "--b", "1"],
    );
    assert_eq!(bad_interval.status.code(), Some(2));

    let garbage = cache.path().join("garbage.json");
    std::fs::write(&garbage, "{\"kind\": \"nonsense\"}").unwrap();
    let out = momtail(
        cache.path(),
        &[
            "compare",
            garbage.to_str().unwrap(),
            &data("dirac_two.json"),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_modes() {
    let cache = tempfile::tempdir().unwrap();
    let uniform = data("uniform_one_two.json");
    let same = json(&momtail(
        cache.path(),
        &["compare", &uniform, &uniform, "--depth", "10"],
    ));
    assert_eq!(same["verdict"], "equal_prefix");

    let ramp = data("ramp_one_two.json");
    let proved = json(&momtail(
        cache.path(),
        &["compare", &uniform, &ramp, "--certify", "piecewise"],
    ));
    assert_eq!(proved["verdict"], "strictly_below");
    assert_eq!(proved["label"], "proved");
}

#[test]
fn game_commands() {
    let cache = tempfile::tempdir().unwrap();
    let game = data("no_equilibrium_game.json");
    let report = json(&momtail(cache.path(), &["game", "analyze", &game]));
    assert_eq!(report["verdict"], "no_equilibrium");
    assert_eq!(report["top_value"], "3/10");

    let projected = json(&momtail(
        cache.path(),
        &["game", "project", &game, "--i", "3", "--json"],
    ));
    assert_eq!(
        projected["matrix"],
        serde_json::json!([["1/2", "1/10"], ["1/10", "1/2"]])
    );

    let single = data("single_outcome_game.json");
    let check = json(&momtail(
        cache.path(),
        &[
            "game",
            "check",
            &single,
            "--profile",
            r#"{"row":["1","0"],"column":["0","1"]}"#,
        ],
    ));
    assert_eq!(check["status"], "yes");
}

#[test]
fn verify_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("kernel.json");
    let built = json(&momtail(
        dir.path(),
        &[
            "construct",
            "kernel",
            "--n",
            "4",
            "--out",
            artifact.to_str().unwrap(),
        ],
    ));
    assert_eq!(built["verified"], true);
    let ok = momtail(dir.path(), &["verify", artifact.to_str().unwrap()]);
    assert!(ok.status.success());

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&artifact).unwrap()).unwrap();
    let pieces = v["construction"]["density"]["pieces"]
        .as_array_mut()
        .unwrap();
    pieces[0][0] = Value::String("7/3".into());
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&v).unwrap()).unwrap();
    let bad = momtail(dir.path(), &["verify", tampered.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(5));
}

#[test]
fn construct_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let (csv_path, plot_path) = (dir.path().join("k.csv"), dir.path().join("k.dat"));
    let out = momtail(
        dir.path(),
        &[
            "construct",
            "kernel",
            "--n",
            "3",
            "--csv",
            csv_path.to_str().unwrap(),
            "--plot",
            plot_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let table = std::fs::read_to_string(csv_path).unwrap();
    assert!(table.starts_with("k,moment"));
    // Moments 0..=3 vanish.
    for line in table.lines().skip(1).take(4) {
        assert!(line.ends_with(",0"), "{line}");
    }
    let plot = std::fs::read_to_string(plot_path).unwrap();
    assert!(plot.starts_with('#'));
    assert!(plot.lines().count() > 100);
}
