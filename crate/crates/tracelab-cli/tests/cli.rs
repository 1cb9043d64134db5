use std::process::Command;

fn tracelab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tracelab"))
}

#[test]
fn scan_csv_contract_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let csv = dir.path().join(format!("{name}.csv"));
        let json = dir.path().join(format!("{name}.json"));
        let svg = dir.path().join(format!("{name}.svg"));
        let status = tracelab()
            .args([
                "scan", "--p", "-1:2:0.5", "--q", "-1:2:0.5", "--s", "1", "--dim", "2",
                "--trials", "50", "--seed", "7", "--k-mode", "random",
            ])
            .arg("--csv")
            .arg(&csv)
            .arg("--json")
            .arg(&json)
            .arg("--svg")
            .arg(&svg)
            .status()
            .unwrap();
        assert!(status.success(), "scan should exit 0 on an agreeing grid");
        (
            std::fs::read(&csv).unwrap(),
            std::fs::read(&json).unwrap(),
            std::fs::read(&svg).unwrap(),
        )
    };
    let (csv1, json1, svg1) = run("a");
    let (csv2, json2, svg2) = run("b");
    assert_eq!(csv1, csv2, "CSV must be byte-identical across runs");
    assert_eq!(json1, json2, "JSON must be byte-identical across runs");
    assert_eq!(svg1, svg2, "SVG must be byte-identical across runs");

    let text = String::from_utf8(csv1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,q,s,dim,trials,convex_violations,concave_violations,empirical,theoretical,agrees"
    );
    // 7x7 grid minus the excluded (0, 0) node.
    assert_eq!(lines.count(), 48);
    // Every float round-trips exactly.
    for line in text.lines().skip(1) {
        let p: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!(p.is_finite());
    }
}

#[test]
fn single_node_scan_exits_zero() {
    let status = tracelab()
        .args([
            "scan", "--p", "0.5", "--q", "0.5", "--s", "1", "--dim", "2", "--trials", "100",
            "--seed", "1",
        ])
        .output()
        .unwrap();
    assert!(status.status.success());
    let text = String::from_utf8(status.stdout).unwrap();
    assert!(text.contains("CONCAVE_CONSISTENT"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["scan", "--p", "nope", "--q", "1"],
        vec!["scan", "--p", "1:0:0.5", "--q", "1"],
        vec!["verify", "--suite", "bogus"],
        vec!["dpi", "--divergence", "alpha-z"],
        vec!["entropy", "--states", "/nonexistent.json"],
    ] {
        let status = tracelab().args(&args).output().unwrap();
        assert_eq!(status.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn entropy_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("states.json");
    std::fs::write(
        &states,
        r#"{"rho":[[[0.5,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]],
            "sigma":[[[0.25,0.0],[0.0,0.0]],[[0.0,0.0],[0.75,0.0]]]}"#,
    )
    .unwrap();
    let out = tracelab()
        .args(["entropy", "--divergence", "umegaki", "--states"])
        .arg(&states)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    let expect = 0.5 * (4.0f64 / 3.0).ln();
    assert!((value - expect).abs() < 1e-12);

    // Non-density input is a usage error.
    std::fs::write(
        &states,
        r#"{"rho":[[[0.9,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]],
            "sigma":[[[0.25,0.0],[0.0,0.0]],[[0.0,0.0],[0.75,0.0]]]}"#,
    )
    .unwrap();
    let out = tracelab()
        .args(["entropy", "--divergence", "umegaki", "--states"])
        .arg(&states)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dpi_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let json = dir.path().join(format!("{name}.json"));
        let status = tracelab()
            .args([
                "dpi", "--alpha", "2", "--z", "1", "--dim", "2", "--env-dim", "2", "--trials",
                "30", "--seed", "11",
            ])
            .arg("--json")
            .arg(&json)
            .status()
            .unwrap();
        assert!(status.success(), "in-region point must be consistent");
        std::fs::read(&json).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn probe_disagreement_would_exit_two() {
    // An in-region point agrees (exit 0)...
    let status = tracelab()
        .args(["probe", "--p", "0.5", "--q", "0.5", "--s", "1", "--dim", "2", "--trials", "200"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    // ...and a NEITHER point never disagrees by construction, so exercise
    // exit 2 via a forced scan disagreement is impossible without breaking
    // the theory; instead check the probe search finds both witnesses.
    let out = tracelab()
        .args([
            "probe", "--p", "1", "--q", "1", "--s", "1", "--dim", "2", "--trials", "300",
            "--budget", "100", "--seed", "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Concavity violation found"));
    assert!(text.contains("Convexity violation found"));
}
