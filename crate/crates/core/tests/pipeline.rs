use std::fs;

use ddp::frame::{extract_window, frame_file_name, write_xyzm};
use ddp::synth::{write_scenario, BalloonScenario, WeakSpot};
use ddp::{analyze_pair, run_analyze, AnalysisConfig, Engine, EngineConfig, Error, Frame, FrameDir, WindowSpec};

fn scenario(frames: u64) -> BalloonScenario {
    BalloonScenario {
        run_id: "pipeline".into(),
        frames,
        burst_frame: Some(frames - 1),
        weak_spot: Some(WeakSpot {
            row: 4.0,
            col: 4.0,
            radius: 3.0,
            onset: 2,
            exponent: 2.0,
            strength: 2e-3,
        }),
        noise: 0.05,
        seed: 3,
        ..BalloonScenario::default()
    }
}

#[test]
fn window_extraction_commutes_with_analysis() {
    let s = BalloonScenario {
        width: 8,
        height: 8,
        ..scenario(12)
    };
    let window = WindowSpec::new(2, 5, 3, 6);
    let (a, b) = (s.frame(5).unwrap(), s.frame(6).unwrap());
    let (wa, wb) = (extract_window(&a, &window).unwrap(), extract_window(&b, &window).unwrap());
    assert_eq!((wa.width(), wa.height()), (4, 4));

    // Rebuild the 4x4 frames from raw values so nothing of the parent frame survives.
    let rebuild = |f: &Frame| Frame::from_values(f.time_index(), 4, 4, f.dims(), f.values().to_vec()).unwrap();
    let cfg = AnalysisConfig::default();
    let via_window = analyze_pair(&wa, &wb, &cfg).unwrap();
    let direct = analyze_pair(&rebuild(&wa), &rebuild(&wb), &cfg).unwrap();
    assert_eq!(via_window.ranks, direct.ranks);
    assert_eq!(via_window.curvature, direct.curvature);
}

#[test]
fn directory_round_trip_matches_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(8);
    write_scenario(&s, dir.path()).unwrap();
    assert_eq!(FrameDir::open(dir.path()).unwrap().len(), 7);

    let from_disk = run_analyze(dir.path(), EngineConfig::default(), None).unwrap();
    let mut in_memory = Engine::new(EngineConfig::default()).unwrap();
    in_memory.run(s.generate().unwrap().into_iter().map(Ok)).unwrap();
    assert_eq!(from_disk.engine.pairs_csv(), in_memory.pairs_csv());
    assert_eq!(from_disk.run_id, "pipeline");
}

#[test]
fn stride_controls_pairing() {
    let dir = tempfile::tempdir().unwrap();
    // Frames 0..=8; stride 2 pairs (0,2), (2,4), (4,6), (6,8).
    write_scenario(&scenario(10), dir.path()).unwrap();
    let cfg = EngineConfig {
        stride: 2,
        ..EngineConfig::default()
    };
    let out = run_analyze(dir.path(), cfg, None).unwrap();
    assert_eq!(out.engine.rows().len(), 4);
}

#[test]
fn single_frame_directory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let frame = scenario(4).frame(0).unwrap();
    let mut file = fs::File::create(dir.path().join(frame_file_name(0))).unwrap();
    write_xyzm(&frame, &mut file).unwrap();
    let err = run_analyze(dir.path(), EngineConfig::default(), None).unwrap_err();
    assert!(matches!(err, Error::InsufficientFrames { needed: 2, found: 1 }), "{err}");
}

#[test]
fn static_sequence_is_silent() {
    let s = BalloonScenario {
        growth_rate: 0.0,
        noise: 0.0,
        burst_frame: None,
        weak_spot: None,
        ..scenario(6)
    };
    let mut engine = Engine::new(EngineConfig::default()).unwrap();
    engine.run(s.generate().unwrap().into_iter().map(Ok)).unwrap();
    assert!(engine.events().is_empty());
    assert_eq!(engine.predicted_frame(), None);
}

#[test]
fn reports_are_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        write_scenario(&scenario(10), &dir.path().join("frames")).unwrap();
        run_analyze(&dir.path().join("frames"), EngineConfig::default(), Some(&out)).unwrap();
        ["pairs.csv", "triggers.log", "report.txt"].map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run(), run());
}
