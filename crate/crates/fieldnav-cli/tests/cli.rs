//! End-to-end tests of the `fieldnav` binary: artifact layout, exit codes,
//! determinism and the render contracts, all through the real executable.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fieldnav::grid::{CategoryTable, GridCell, SemanticGrid};
use fieldnav::mapfile;
use fieldnav::sim::EvalReport;
use image::Rgb;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fieldnav"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fieldnav");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gen_scenes(dir: &Path, count: usize, seed: u64) {
    run_ok(bin().args([
        "scene-gen",
        "--seed",
        &seed.to_string(),
        "--count",
        &count.to_string(),
        "--width-m",
        "8",
        "--height-m",
        "8",
        "--out",
        dir.to_str().unwrap(),
    ]));
}

#[test]
fn scene_gen_writes_maps_and_manifest() {
    let tmp = TempDir::new().unwrap();
    gen_scenes(tmp.path(), 3, 7);
    for seed in 7..10 {
        let map = mapfile::read_map::<f64>(tmp.path().join(format!("scene-{seed:04}.map")))
            .expect("listed map parses");
        assert!(map.is_complete());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["scenes"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["scenes"][0]["seed"], 7);
}

#[test]
fn dataset_gen_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    gen_scenes(tmp.path(), 2, 1);
    let manifest = tmp.path().join("manifest.json");
    for name in ["a.pfds", "b.pfds"] {
        run_ok(bin().args([
            "dataset-gen",
            "--scenes",
            manifest.to_str().unwrap(),
            "--count",
            "4",
            "--seed",
            "5",
            "--out",
            tmp.path().join(name).to_str().unwrap(),
        ]));
    }
    let a = fs::read(tmp.path().join("a.pfds")).unwrap();
    let b = fs::read(tmp.path().join("b.pfds")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same seed must produce byte-identical datasets");
}

#[test]
fn eval_reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    gen_scenes(tmp.path(), 1, 3);
    let manifest = tmp.path().join("manifest.json");
    for name in ["r1.json", "r2.json"] {
        run_ok(bin().args([
            "eval",
            "--scenes",
            manifest.to_str().unwrap(),
            "--policy",
            "poni",
            "--predictor",
            "oracle",
            "--episodes",
            "2",
            "--seed",
            "1",
            "--budget-steps",
            "120",
            "--report",
            tmp.path().join(name).to_str().unwrap(),
        ]));
    }
    let a = fs::read(tmp.path().join("r1.json")).unwrap();
    let b = fs::read(tmp.path().join("r2.json")).unwrap();
    assert_eq!(a, b);
    let report: EvalReport = serde_json::from_slice(&a).unwrap();
    assert_eq!(report.policies.len(), 1);
    assert_eq!(report.policies[0].episodes.len(), 2);
}

#[test]
fn invalid_config_value_exits_2_and_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[potential]\nalpha = 1.5\n").unwrap();
    let out = bin()
        .args([
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--scenes",
            "unused.json",
            "--report",
            "unused-report.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("potential.alpha"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_exits_2_and_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "turbo_mode = true\n").unwrap();
    let out = bin()
        .args([
            "bench",
            "--config",
            cfg.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("turbo_mode"), "stderr: {stderr}");
}

#[test]
fn runtime_failures_exit_1() {
    let out = bin()
        .args([
            "dataset-gen",
            "--scenes",
            "does-not-exist.json",
            "--out",
            "unused.pfds",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn overlay_without_episode_id_exits_2() {
    let out = bin()
        .args([
            "render",
            "--map",
            "unused.map",
            "--overlay",
            "trajectory:report.json",
            "--out",
            "unused.png",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("episode id"), "stderr: {stderr}");
}

#[test]
fn effective_config_round_trips_through_print_config() {
    let tmp = TempDir::new().unwrap();
    let out = run_ok(bin().args([
        "eval",
        "--print-config",
        "--scenes",
        "unused.json",
        "--report",
        "unused-report.json",
        "--alpha",
        "0.7",
        "--seed",
        "9",
    ]));
    let dumped = tmp.path().join("effective.toml");
    fs::write(&dumped, &out.stdout).unwrap();
    let again = run_ok(bin().args([
        "eval",
        "--print-config",
        "--config",
        dumped.to_str().unwrap(),
        "--scenes",
        "unused.json",
        "--report",
        "unused-report.json",
    ]));
    assert_eq!(out.stdout, again.stdout, "dump of the dump must be identical");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alpha = 0.7"));
    assert!(text.contains("eval = 9"));
}

fn load_png(path: &Path) -> image::RgbImage {
    image::open(path).expect("png decodes").to_rgb8()
}

#[test]
fn unexplored_map_renders_as_uniform_unexplored_color() {
    let tmp = TempDir::new().unwrap();
    let blank: SemanticGrid =
        SemanticGrid::new_unexplored(12, 9, 0.1, CategoryTable::default_indoor()).unwrap();
    let map_path = tmp.path().join("blank.map");
    mapfile::write_map(&blank, &map_path).unwrap();
    let png = tmp.path().join("blank.png");
    run_ok(bin().args([
        "render",
        "--map",
        map_path.to_str().unwrap(),
        "--out",
        png.to_str().unwrap(),
    ]));
    let img = load_png(&png);
    assert_eq!((img.width(), img.height()), (12, 9));
    for p in img.pixels() {
        assert_eq!(*p, Rgb([90, 90, 90]));
    }
}

#[test]
fn zero_potential_overlay_matches_plain_render() {
    let tmp = TempDir::new().unwrap();
    gen_scenes(tmp.path(), 1, 2);
    let map = tmp.path().join("scene-0002.map");
    let plain = tmp.path().join("plain.png");
    let overlaid = tmp.path().join("overlaid.png");
    run_ok(bin().args([
        "render",
        "--map",
        map.to_str().unwrap(),
        "--out",
        plain.to_str().unwrap(),
    ]));
    // A complete map compared against itself has no unexplored space, so
    // the area potential is identically zero.
    run_ok(bin().args([
        "render",
        "--map",
        map.to_str().unwrap(),
        "--overlay",
        "pf:area",
        "--out",
        overlaid.to_str().unwrap(),
    ]));
    assert_eq!(fs::read(&plain).unwrap(), fs::read(&overlaid).unwrap());
}

#[test]
fn trajectory_overlay_paints_exactly_the_visited_cells() {
    let tmp = TempDir::new().unwrap();
    gen_scenes(tmp.path(), 1, 3);
    let manifest = tmp.path().join("manifest.json");
    let report_path = tmp.path().join("report.json");
    run_ok(bin().args([
        "eval",
        "--scenes",
        manifest.to_str().unwrap(),
        "--policy",
        "fbe",
        "--episodes",
        "1",
        "--seed",
        "4",
        "--budget-steps",
        "60",
        "--report",
        report_path.to_str().unwrap(),
    ]));
    let report: EvalReport =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let trajectory = &report.policies[0].episodes[0].trajectory;
    assert!(trajectory.len() > 1, "episode should move");

    let map_path = tmp.path().join("scene-0003.map");
    let png = tmp.path().join("traj.png");
    let overlay = format!("trajectory:{},0", report_path.display());
    run_ok(bin().args([
        "render",
        "--map",
        map_path.to_str().unwrap(),
        "--overlay",
        &overlay,
        "--out",
        png.to_str().unwrap(),
    ]));

    // Expected trajectory pixels: the distinct visited cells minus those
    // repainted by the start/stop marker blocks.
    let map = mapfile::read_map::<f64>(&map_path).unwrap();
    let visited: std::collections::BTreeSet<GridCell> =
        trajectory.iter().map(|p| p.cell).collect();
    let mut markers = std::collections::BTreeSet::new();
    for &anchor in &[trajectory[0].cell, trajectory[trajectory.len() - 1].cell] {
        markers.insert(anchor);
        markers.extend(map.neighbors8(anchor));
    }
    let expected = visited.difference(&markers).count();

    let img = load_png(&png);
    let painted = img
        .pixels()
        .filter(|p| **p == Rgb([30, 80, 220]))
        .count();
    assert_eq!(painted, expected, "one blue pixel per unmarked visited cell");

    // Both markers are present.
    assert!(img.pixels().any(|p| *p == Rgb([0, 170, 0])), "start marker");
    assert!(img.pixels().any(|p| *p == Rgb([200, 0, 120])), "stop marker");
}

#[test]
fn out_of_range_episode_index_exits_1() {
    let tmp = TempDir::new().unwrap();
    gen_scenes(tmp.path(), 1, 3);
    let manifest = tmp.path().join("manifest.json");
    let report_path = tmp.path().join("report.json");
    run_ok(bin().args([
        "eval",
        "--scenes",
        manifest.to_str().unwrap(),
        "--policy",
        "fbe",
        "--episodes",
        "1",
        "--seed",
        "4",
        "--budget-steps",
        "30",
        "--report",
        report_path.to_str().unwrap(),
    ]));
    let overlay = format!("trajectory:{},99", report_path.display());
    let out = bin()
        .args([
            "render",
            "--map",
            tmp.path().join("scene-0003.map").to_str().unwrap(),
            "--overlay",
            &overlay,
            "--out",
            tmp.path().join("x.png").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("out of range"), "stderr: {stderr}");
}
