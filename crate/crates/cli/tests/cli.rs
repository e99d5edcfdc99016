use std::path::Path;
use std::process::{Command, Output};

use orbitctl::cache::{Cache, CACHE_ENV};
use orbitctl_core::RationalMap;

const BASILICA: &str = r#"{"numerator": [[-1, 0], [0, 0], [1, 0]]}"#;

fn orbitctl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitctl"))
        .current_dir(dir)
        .env_remove(CACHE_ENV)
        .args(args)
        .output()
        .unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("basilica.json"), BASILICA).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

#[test]
fn enumerate_writes_census_and_cache() {
    let dir = workspace();
    let o = orbitctl(
        dir.path(),
        &[
            "enumerate",
            "--map",
            "basilica.json",
            "--n",
            "1..8",
            "--cache",
            "c",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,repelling,nonrepelling,fixed_points,census_total,identity_holds,method"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.contains(",true,")));
    assert!(rows[1].starts_with("2,0,1,4,4,"));
    let files: Vec<_> = std::fs::read_dir(dir.path().join("c")).unwrap().collect();
    assert_eq!(files.len(), 1, "lock file must be released");
}

#[test]
fn reports_are_deterministic() {
    let dir = workspace();
    let args = [
        "profile",
        "--map",
        "basilica.json",
        "--n",
        "9..10",
        "--cache",
        "c",
    ];
    let first = orbitctl(dir.path(), &args);
    let second = orbitctl(dir.path(), &args);
    assert!(first.status.success() && second.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).starts_with("alpha,xi,sigma2,H,residual,n_used\n"));
}

#[test]
fn config_file_with_output_dir() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"map": "basilica.json", "n_min": 8, "n_max": 10, "cache_dir": "c",
            "output_dir": "out", "interval": [-1.0, 1.0],
            "arc": {"center_angle": 1.5707963267948966, "width_fraction": 0.5}}"#,
    )
    .unwrap();
    let o = orbitctl(dir.path(), &["count", "--config", "run.json"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("out/count.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0.5")));
    // Flags win over the file.
    let o = orbitctl(
        dir.path(),
        &[
            "count",
            "--config",
            "run.json",
            "--n",
            "9",
            "--arc-width",
            "1",
        ],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/count.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",1.0"));
}

#[test]
fn config_errors_exit_two_with_key_path() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"map": "basilica.json", "n_max": 4, "tolerances": {"eta": 2}}"#,
    )
    .unwrap();
    let o = orbitctl(dir.path(), &["profile", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("tolerances.eta"));

    let o = orbitctl(
        dir.path(),
        &["profile", "--map", "basilica.json", "--n", "30"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(error_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("budget"));

    let o = orbitctl(
        dir.path(),
        &["profile", "--map", "basilica.json", "--alpha", "median"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = workspace();
    let o = orbitctl(dir.path(), &["frobnicate"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn environment_overrides_cache_dir() {
    let dir = workspace();
    let o = Command::new(env!("CARGO_BIN_EXE_orbitctl"))
        .current_dir(dir.path())
        .env(CACHE_ENV, "from-env")
        .args([
            "enumerate",
            "--map",
            "basilica.json",
            "--n",
            "4",
            "--cache",
            "from-flag",
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env").is_dir());
    assert!(!dir.path().join("from-flag").exists());
}

#[test]
fn held_lock_blocks_a_second_writer() {
    let dir = workspace();
    let map = RationalMap::from_json(BASILICA).unwrap();
    let cache_dir = dir.path().join("c");
    let held = Cache::open(&cache_dir, &map).unwrap();
    assert!(Cache::open(&cache_dir, &map).is_err());
    let o = orbitctl(
        dir.path(),
        &[
            "enumerate",
            "--map",
            "basilica.json",
            "--n",
            "3",
            "--cache",
            "c",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(error_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("locked"));
    drop(held);
    let o = orbitctl(
        dir.path(),
        &[
            "enumerate",
            "--map",
            "basilica.json",
            "--n",
            "3",
            "--cache",
            "c",
        ],
    );
    assert!(o.status.success());
}

#[test]
fn cache_is_reused_across_runs() {
    let dir = workspace();
    let o = orbitctl(
        dir.path(),
        &[
            "enumerate",
            "--map",
            "basilica.json",
            "--n",
            "6",
            "--cache",
            "c",
        ],
    );
    assert!(o.status.success());
    let map = RationalMap::from_json(BASILICA).unwrap();
    let cache = Cache::open(&dir.path().join("c"), &map).unwrap();
    let db = cache.load(&map).unwrap();
    assert_eq!(db.complete_through(), 6);
}

#[test]
fn decay_and_dimension_reports() {
    let dir = workspace();
    let o = orbitctl(
        dir.path(),
        &[
            "decay",
            "--map",
            "basilica.json",
            "--depth",
            "6",
            "--alpha",
            "0.7",
            "--pairs",
            "0,0;0,1",
            "--steps",
            "20",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let csv = stdout(&o);
    assert!(csv.starts_with("b,k,depth,n_steps,rate\n"));
    assert_eq!(csv.lines().count(), 3);

    let o = orbitctl(
        dir.path(),
        &[
            "dimension",
            "--map",
            "basilica.json",
            "--n",
            "8",
            "--depth",
            "6",
            "--cache",
            "c",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let estimators: Vec<_> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(
        estimators,
        ["orbit-sums", "orbit-sums-fitted", "transfer-op"]
    );
}
