use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use boke_cli::matrix::value_columns;

fn boke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boke")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

const SMALL: &str = r#"
problems = ["forrester"]
algorithms = [{ kind = "boke" }, { kind = "random_search" }]
seeds = [0, 1, 2]
budget = 12
noise_std = 0.01
"#;

#[test]
fn run_writes_one_trace_per_combination_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = boke(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = csv_files(&out);
    assert_eq!(files.len(), 6);
    assert!(files.contains(&"forrester__boke__seed2.csv".to_string()));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["forrester"]["boke"]["runs"], 3);
    assert_eq!(summary["forrester"]["random_search"]["mean_simple_regret"].as_array().unwrap().len(), 12);

    let text = fs::read_to_string(out.join("forrester__boke__seed0.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x1,y,ell,beta,acq,best,update_us,infer_us");
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(boke(&["run", &cfg, "--output", a.to_str().unwrap()]).status.success());
    assert!(boke(&["run", &cfg, "--output", b.to_str().unwrap()]).status.success());
    for name in csv_files(&a) {
        assert_eq!(value_columns(&a.join(&name)).unwrap(), value_columns(&b.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn budget_not_above_init_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        r#"
        problems = ["hartmann3"]
        algorithms = [{ kind = "boke" }]
        seeds = 1
        budget = 9
        "#,
    );
    let out = dir.path().join("out");
    let o = boke(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists(), "nothing runs when validation fails");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", &format!("{SMALL}\nbugdet = 3\n"));
    let o = boke(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bugdet"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    assert_eq!(boke(&["run", "/nonexistent/boke.toml"]).status.code(), Some(1));
}

#[test]
fn summarize_rebuilds_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    assert!(boke(&["run", &cfg, "--output", out.to_str().unwrap()]).status.success());
    let before: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    fs::remove_file(out.join("summary.json")).unwrap();
    let o = boke(&["summarize", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let after: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for alg in ["boke", "random_search"] {
        assert_eq!(before["forrester"][alg]["mean_simple_regret"], after["forrester"][alg]["mean_simple_regret"]);
        assert_eq!(before["forrester"][alg]["runs"], after["forrester"][alg]["runs"]);
    }
}

#[test]
fn summarize_empty_directory_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(boke(&["summarize", dir.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn fill_writes_curves_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fill.toml",
        r#"
        methods = ["lhs", "uniform_random"]
        dims = [1]
        t_max = 40
        seeds = 2
        slope_t_min = 10
        "#,
    );
    let out = dir.path().join("fill");
    let o = boke(&["fill", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fill = fs::read_to_string(out.join("fill.csv")).unwrap();
    assert_eq!(fill.lines().next().unwrap(), "method,d,t,mean_fill");
    let slopes = fs::read_to_string(out.join("fill_slopes.csv")).unwrap();
    assert_eq!(slopes.lines().count(), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope="));
}

#[test]
fn example_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy();
        if name.starts_with("fill") {
            boke_cli::config::FillConfig::parse_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        } else {
            boke_cli::config::ExperimentConfig::parse_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
