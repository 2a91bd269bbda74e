use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ddp(args: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_analyze_score() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("scenario.txt");
    fs::write(&scenario, "run_id = cli\nframes = 8\nburst_frame = 7\nnoise = 0.05\nseed = 4\n").unwrap();
    let frames = tmp.path().join("frames");
    let out = tmp.path().join("out");

    let o = ddp(&[Path::new("synth"), &scenario, &frames]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(frames.join("manifest.txt").exists());

    let o = ddp(&[Path::new("analyze"), &frames, Path::new("--out"), &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("no prediction") || text.contains("prediction at frame"));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("run_id = cli"), "{report}");
    assert!(out.join("pairs.csv").exists() && out.join("triggers.log").exists());

    let o = ddp(&[Path::new("score"), &out.join("report.txt"), &frames.join("manifest.txt")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).trim().is_empty());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("scenario.txt");
    fs::write(&scenario, "run_id = flags\nframes = 9\n").unwrap();
    let frames = tmp.path().join("frames");
    assert!(ddp(&[Path::new("synth"), &scenario, &frames]).status.success());

    let config = tmp.path().join("ddp.conf");
    fs::write(&config, "stride = 5\n").unwrap();
    let out = tmp.path().join("out");
    let o = ddp(&[
        Path::new("analyze"),
        &frames,
        Path::new("--config"),
        &config,
        Path::new("--stride"),
        Path::new("2"),
        Path::new("--out"),
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("pairs.csv")).unwrap().lines().count() - 1;
    // Frames 0..=8 at stride 2 rather than 5.
    assert_eq!(rows, 4);
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ddp(&[Path::new("analyze"), tmp.path()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let config = tmp.path().join("bad.conf");
    fs::write(&config, "strdie = 2\n").unwrap();
    let o = ddp(&[Path::new("analyze"), tmp.path(), Path::new("--config"), &config]);
    assert!(!o.status.success());
}
