use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn forge(args: &[&str], cwd: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FORGE_WORKERS")
        .output()
        .expect("spawn forge");
    assert!(
        out.status.success(),
        "forge {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn compose_render_eval_sheet() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    forge(&["compose", "--seed", "4", "--width", "16", "--height", "16", "--out", "scene.json"], d);
    forge(&["trajectories", "--count", "2", "--seed", "9", "--out", "traj"], d);
    assert!(d.join("traj/traj_001.json").exists());
    forge(
        &["render", "--scene", "scene.json", "--traj", "traj/traj_000.json", "--out", "clip", "--spp", "2"],
        d,
    );
    for f in ["frame_001.png", "frame_014.png", "mask.png", "control.json"] {
        assert!(d.join("clip").join(f).exists(), "{f}");
    }
    forge(&["eval", "--pred", "clip", "--gt", "clip", "--mask", "clip", "--out", "report.json"], d);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["means"]["rmse"], 0.0);
    assert_eq!(report["mask_mode"], "foreground");
    forge(&["sheet", "--clip", "clip", "--scale", "2", "--out", "sheet.png"], d);
    assert!(d.join("sheet.png").exists());
}

#[test]
fn mit_build_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = forge(&["mit-build"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/mit_trajectories.txt");
    assert_eq!(text, fs::read_to_string(fixture).unwrap());
}

#[test]
fn campaign_train_sample_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = forge(
        &[
            "campaign", "--out", "data", "--scenes", "1", "--trajectories", "2", "--width", "12",
            "--height", "12", "--sphere", "--spp", "1", "--workers", "1",
        ],
        d,
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 clips"));
    // Second run resumes without re-rendering.
    let again = forge(&["campaign", "--out", "data", "--scenes", "1", "--trajectories", "2", "--width", "12",
        "--height", "12", "--sphere", "--spp", "1"], d);
    assert!(String::from_utf8_lossy(&again.stdout).contains("0 rendered"));

    forge(
        &["train-toy", "--data", "data", "--steps", "3", "--c1", "4", "--c2", "6", "--out", "toy.ckpt", "--log", "loss.csv"],
        d,
    );
    assert_eq!(fs::read_to_string(d.join("loss.csv")).unwrap().lines().count(), 4);
    forge(
        &[
            "sample", "--ckpt", "toy.ckpt", "--scene", "data/scenes/scene_0000.json", "--traj",
            "data/clips/s0000_t000/control.json", "--steps", "3", "--out", "pred",
        ],
        d,
    );
    assert!(d.join("pred/frame_014.png").exists());
    forge(&["eval", "--pred", "pred", "--gt", "data/clips/s0000_t000", "--crop", "10"], d);
}

#[test]
fn bad_input_reports_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(["render", "--scene", "missing.json", "--traj", "missing.json", "--out", "x"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
