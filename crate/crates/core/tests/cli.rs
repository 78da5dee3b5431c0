use std::path::Path;
use std::process::{Command, Output};

use qbdcr::linalg::{mm, DenseMatrix};

fn qbdcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbdcr")).args(args).output().expect("spawn qbdcr")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_scalar(dir: &Path, a: f64, b: f64, c: f64) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, v) in [("Am1.mtx", a), ("A0.mtx", b), ("A1.mtx", c)] {
        mm::write(dir.join(name), &DenseMatrix::from_fn(1, 1, |_, _| v), &[]).unwrap();
    }
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_scalar_transient_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let out = tmp.path().join("out");
    write_scalar(&input, 0.2, 0.4, 0.4);
    let o = qbdcr(&["solve", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g = mm::read(out.join("G.mtx")).unwrap();
    assert!((g.get(0, 0) - 0.5).abs() <= 1e-14);
    let r = report(&out);
    assert_eq!(r["stop_reason"], "converged");
    assert!(r["residual"].as_f64().unwrap() < 1e-14);
    assert!(std::fs::read_to_string(out.join("G.mtx")).unwrap().contains("run_config="));
}

#[test]
fn solve_without_iterations_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qbdcr(&["solve", "--size", "20", "--iters", "0", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(report(tmp.path())["stop_reason"], "max_iter");
}

#[test]
fn solve_reports_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad");
    write_scalar(&input, 0.2, 0.4, 0.4);
    let text = std::fs::read_to_string(input.join("Am1.mtx")).unwrap();
    let corrupt = text.lines().map(|l| if l.starts_with('%') || l.split_whitespace().count() != 1 { l.to_string() } else { "x".into() });
    std::fs::write(input.join("Am1.mtx"), corrupt.collect::<Vec<_>>().join("\n")).unwrap();
    let o = qbdcr(&["solve", "--input", s(&input), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parse error"), "{}", stderr(&o));

    let o = qbdcr(&["solve", "--input", s(&tmp.path().join("missing")), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("I/O error"), "{}", stderr(&o));
}

#[test]
fn solve_reports_singular_pencil() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let out = tmp.path().join("out");
    write_scalar(&input, 0.0, 1.0, 0.0);
    let o = qbdcr(&["solve", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("singular"), "{}", stderr(&o));
    assert_eq!(report(&out)["stop_reason"], "singular");
}

#[test]
fn solve_output_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |d: &str| {
        let dir = tmp.path().join(d);
        let o = qbdcr(&["solve", "--size", "40", "--band", "2", "--seed", "7", "--out", s(&dir)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = std::fs::read_to_string(dir.join("G.mtx")).unwrap();
        text.lines().filter(|l| !l.starts_with('%')).map(str::to_string).collect::<Vec<_>>()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn bench_rows_are_sorted_and_accurate() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = tmp.path().join("bench.csv");
    let start = std::time::Instant::now();
    let o = qbdcr(&["bench", "--size", "100,200", "--runs", "1", "--tol", "1e-8,1e-16", "--out", s(&csv_path)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(start.elapsed().as_secs() < 60);

    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("# run_config={"));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let keys: Vec<(usize, String, String)> =
        rows.iter().map(|r| (r[0].parse().unwrap(), r[2].to_string(), r[3].to_string())).collect();
    assert_eq!(
        keys,
        [(100, "dense", ""), (100, "hodlr", "1e-16"), (100, "hodlr", "1e-8"), (200, "dense", ""), (200, "hodlr", "1e-16"), (200, "hodlr", "1e-8")]
            .map(|(m, b, t)| (m, b.to_string(), t.to_string()))
    );
    for r in &rows {
        assert_eq!(&r[11], "ok");
        let resid: f64 = r[9].parse().unwrap();
        let bound = if &r[3] == "1e-8" { 1e-6 } else { 1e-12 };
        assert!(resid <= bound, "{r:?}");
    }
}

#[test]
fn decay_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qbdcr(&["decay", "--size", "60", "--iters", "4", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["decay.csv", "ranks.csv", "decay.gp"] {
        let text = std::fs::read_to_string(tmp.path().join(name)).unwrap();
        assert!(text.starts_with("# run_config={"), "{name}");
    }
    let b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(b["run_config"]["subcommand"], "decay");
    assert_eq!(b["bounds"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_passes_and_detects_a_broken_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v.json");
    let o = qbdcr(&["verify", "--trials", "1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = qbdcr(&["verify", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let o = qbdcr(&["verify", "--trials", "200", "--corrupt-oracle", "--out", s(&out)]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("failed"));
}
