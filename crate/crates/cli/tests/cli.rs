use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FOLLOWING: &str = r#"
schema_version = 1
output_dir = "out"
n_runs = 10
rng_seed = 11

[synth]
template = "car_following"
stream = { gaps = [25.0, 30.0], speeds = [10.0, 11.0, 12.0] }
"#;

const MERGE: &str = r#"
schema_version = 1
output_dir = "out"
n_runs = 12
rng_seed = 4

[synth]
template = "merge"
main = { lead_distance = 20.0, gaps = [25.0], speeds = [10.0, 10.0] }
ramp = { lead_distance = 25.0, gaps = [], speeds = [9.0] }
"#;

fn extrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extrap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file below `dir`, relative path to contents.
fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_writes_logs_table_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", FOLLOWING);
    let o = extrap(&["simulate", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert_eq!(fs::read_dir(out.join("logs")).unwrap().count(), 10);
    let table = fs::read_to_string(out.join("metric_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 11);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["succeeded"], 10);
    assert_eq!(manifest["config"]["rng_seed"], 11);
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 10);
    assert_eq!(manifest["runs"][3]["run_seed"], 11 ^ 3);
}

#[test]
fn reruns_and_worker_counts_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", MERGE);
    let run = |out: &str, jobs: &str| {
        let out = dir.path().join(out);
        let o = extrap(&["--jobs", jobs, "simulate", "--config", s(&cfg), "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let an = out.join("analysis");
        let table = out.join("metric_table.csv");
        let o = extrap(&[
            "--jobs", jobs, "analyze", "--table", s(&table), "--out", s(&an), "--sizes", "5,10", "--config", s(&cfg),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        tree(&out)
    };
    let a = run("a", "1");
    assert!(a.iter().any(|(n, _)| n.ends_with("density.csv")));
    assert_eq!(a, run("a", "4"), "rerun in place");
    assert_eq!(a, run("b", "4"), "different worker count");
}

#[test]
fn rerun_with_fewer_runs_drops_stale_logs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", FOLLOWING);
    assert!(extrap(&["simulate", "--config", s(&cfg)]).status.success());
    assert!(extrap(&["simulate", "--config", s(&cfg), "--n-runs", "3"]).status.success());
    assert_eq!(fs::read_dir(dir.path().join("out/logs")).unwrap().count(), 3);
}

#[test]
fn both_sources_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", &format!("tracks = \"t.csv\"\n{FOLLOWING}"));
    let o = extrap(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`tracks`"), "{}", stderr(&o));
}

#[test]
fn missing_files_are_io_errors() {
    let dir = TempDir::new().unwrap();
    let o = extrap(&["simulate", "--config", s(&dir.path().join("absent.toml"))]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write(
        dir.path(),
        "run.toml",
        "schema_version = 1\noutput_dir = \"o\"\nmap = \"m.txt\"\ntracks = \"t.csv\"\ncase_id = 1\ncurrent_index = 9\n",
    );
    let o = extrap(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn enumerate_two_by_two() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "roster.toml",
        "[[model]]\nkind = \"standard\"\n\n[[model]]\nkind = \"constant_velocity\"\n",
    );
    let cfg = write(
        dir.path(),
        "run.toml",
        &FOLLOWING
            .replace("gaps = [25.0, 30.0], speeds = [10.0, 11.0, 12.0]", "gaps = [25.0], speeds = [10.0, 11.0]")
            .replace("n_runs = 10", "n_runs = 10\nroster = \"roster.toml\""),
    );
    let o = extrap(&["enumerate", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["requested_runs"], 4);
    let runs = manifest["runs"].as_array().unwrap();
    let names: Vec<(String, String)> = runs
        .iter()
        .map(|r| {
            (
                r["assignment"]["1"].as_str().unwrap().to_owned(),
                r["assignment"]["2"].as_str().unwrap().to_owned(),
            )
        })
        .collect();
    let (a, b) = ("standard".to_owned(), "constant_velocity".to_owned());
    assert_eq!(
        names,
        vec![(a.clone(), a.clone()), (a.clone(), b.clone()), (b.clone(), a), (b.clone(), b)]
    );
    assert_eq!(runs[2]["origin"]["enumerated"]["index"], 2);
}

#[test]
fn enumerate_over_cap_suggests_simulate() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", FOLLOWING);
    let o = extrap(&["enumerate", "--config", s(&cfg), "--cap", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("simulate"), "{}", stderr(&o));
}

#[test]
fn all_children_failing_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", FOLLOWING);
    let scene = dir.path().join("scene");
    let o = extrap(&["synth-scene", "--config", s(&cfg), "--out", s(&scene)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // push track 1 far off the map
    let tracks = fs::read_to_string(scene.join("tracks.csv")).unwrap();
    let moved: Vec<String> = tracks
        .lines()
        .map(|l| {
            let mut f: Vec<String> = l.split(',').map(str::to_owned).collect();
            if f[1] == "1" {
                f[6] = (f[6].parse::<f64>().unwrap() + 500.0).to_string();
            }
            f.join(",")
        })
        .collect();
    fs::write(scene.join("tracks.csv"), moved.join("\n") + "\n").unwrap();
    write(&scene, "roster.toml", "[[model]]\nkind = \"standard\"\n");
    let text = fs::read_to_string(scene.join("scene.toml")).unwrap() + "roster = \"roster.toml\"\n";
    let cfg = write(&scene, "scene.toml", &text);
    let o = extrap(&["simulate", "--config", s(&cfg), "--n-runs", "3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("track 1"), "{}", stderr(&o));
}

#[test]
fn synth_scene_round_trips_through_tracks_source() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", MERGE);
    let scene = dir.path().join("scene");
    assert!(extrap(&["synth-scene", "--config", s(&cfg), "--out", s(&scene)]).status.success());
    for f in ["map.txt", "tracks.csv", "scene.toml"] {
        assert!(scene.join(f).exists(), "{f}");
    }
    // the tracks source and the synthetic source describe the same scene
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(extrap(&["simulate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    let o = extrap(&["simulate", "--config", s(&scene.join("scene.toml")), "--out", s(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(a.join("metric_table.csv")).unwrap(),
        fs::read(b.join("metric_table.csv")).unwrap()
    );
}

const TABLE: &str = "run_index,run_seed,distance_worst,distance_mean,distance_defined_frames\n\
0,0,4,5,30\n1,1,6,7,30\n2,2,8,9,30\n3,3,,,0\n";

#[test]
fn analyze_single_table_layout() {
    let dir = TempDir::new().unwrap();
    let table = write(dir.path(), "t.csv", TABLE);
    let out = dir.path().join("an");
    let o = extrap(&["analyze", "--table", s(&table), "--out", s(&out), "--sizes", "1,3", "--resamples", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let density = fs::read_to_string(out.join("density.csv")).unwrap();
    let mut lines = density.lines();
    assert_eq!(lines.next(), Some("distance_x,distance_y"));
    assert_eq!(lines.count(), 512);
    let th = fs::read_to_string(out.join("thresholds.csv")).unwrap();
    let row: Vec<&str> = th.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..7], ["0", "distance", "5", "below", "3", "1", "0.3333333333333333"]);
    let conv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 3);
    assert!(!out.join("ground_truth.csv").exists());
}

#[test]
fn analyze_two_tables_overlay_columns() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.csv", TABLE);
    let b = write(dir.path(), "b.csv", &TABLE.replace(",4,5,30", ",2,3,30"));
    let out = dir.path().join("an");
    let o = extrap(&["analyze", "--table", s(&a), "--table", s(&b), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let density = fs::read_to_string(out.join("cumulative.csv")).unwrap();
    assert_eq!(
        density.lines().next(),
        Some("0_distance_x,0_distance_y,1_distance_x,1_distance_y")
    );
}

#[test]
fn analyze_warns_on_empty_population() {
    let dir = TempDir::new().unwrap();
    let text = "run_index,run_seed,distance_worst,distance_mean,distance_defined_frames,\
gap_time_worst,gap_time_mean,gap_time_defined_frames\n0,0,4,5,30,,,0\n1,1,6,6,30,,,0\n";
    let table = write(dir.path(), "t.csv", text);
    let out = dir.path().join("an");
    let o = extrap(&["analyze", "--table", s(&table), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("gap_time"), "{}", stderr(&o));
    let header = fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(header.lines().next(), Some("distance_x,distance_y"));
}

#[test]
fn analyze_rejects_malformed_table() {
    let dir = TempDir::new().unwrap();
    let table = write(dir.path(), "t.csv", "run_index,bogus\n0,1\n");
    let o = extrap(&["analyze", "--table", s(&table), "--out", s(&dir.path().join("an"))]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
