use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use ymhk::algebra::U1;
use ymhk::energy::FlowParams;
use ymhk::flow::FlowState;
use ymhk::io::snapshot::save_snapshot;
use ymhk::lattice::LatticeShape;

fn ymhk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ymhk")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.conf")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.conf");
    std::fs::write(
        &path,
        "extents = 6,6\ngroup = su2\nk = 1\nlambda = 0.5\ninit = hot:0.4\nseed = 3\n\
         dt_safety = 0.5\nt_max = 1e9\nmax_steps = 40\nsnapshot_every = 20\n",
    )
    .unwrap();
    path
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = ymhk(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_usage_error() {
    let o = ymhk(&["run", "--config", "/nonexistent/x.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "extents = 4,4\ngroup = u1\ndt_safety = 3\n").unwrap();
    let o = ymhk(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dt_safety"), "{}", stderr(&o));
}

#[test]
fn info_on_flat_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.ymhk");
    let lat = Arc::new(LatticeShape::new(&[4], 1.0).unwrap());
    let s = FlowState::<U1>::cold(lat, FlowParams::new(0, 0.0).unwrap()).unwrap();
    save_snapshot(&s, &path).unwrap();

    let o = ymhk(&["info", "--snapshot", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("group = U(1)"), "{text}");
    assert!(text.contains("n = 1"));
    assert!(text.contains("extents = [4]"));
    assert!(text.contains("bytes = 172"));
}

#[test]
fn info_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.ymhk");
    std::fs::write(&path, b"not a snapshot at all").unwrap();
    let o = ymhk(&["info", "--snapshot", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_on_shipped_config() {
    let o = ymhk(&["verify", "--config", reference_config().to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn run_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = ymhk(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["trace.csv", "final.ymhk", "snap_00000020.ymhk", "snap_00000040.ymhk"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 1 + 41);

    let snap = out.join("snap_00000020.ymhk");
    let o = ymhk(&[
        "resume",
        "--config",
        cfg.to_str().unwrap(),
        "--snapshot",
        snap.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("trace.resume.csv").exists());
}

#[test]
fn resume_rejects_group_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let path = dir.path().join("u1.ymhk");
    let lat = Arc::new(LatticeShape::new(&[6, 6], 1.0).unwrap());
    save_snapshot(&FlowState::<U1>::cold(lat, FlowParams::new(1, 0.0).unwrap()).unwrap(), &path).unwrap();
    let o = ymhk(&["resume", "--config", cfg.to_str().unwrap(), "--snapshot", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("group"));
}

#[test]
fn scale_test_and_blowup_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("scale");
    let o = ymhk(&["scale-test", "--config", cfg.to_str().unwrap(), "--rho", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(out.join("scale_report.txt")).unwrap().contains("time_dilation = 6.25"));

    let o = ymhk(&["scale-test", "--config", cfg.to_str().unwrap(), "--rho", "0.3"]);
    assert_eq!(o.status.code(), Some(2));

    let run_out = dir.path().join("run");
    assert!(ymhk(&["run", "--config", cfg.to_str().unwrap(), "--out", run_out.to_str().unwrap()]).status.success());
    let b = dir.path().join("blowup");
    let o = ymhk(&[
        "blowup",
        "--snapshot",
        run_out.join("final.ymhk").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(b.join("blowup_report.txt")).unwrap();
    let m0: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("center_value = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((m0 - 1.0).abs() < 1e-12);
    assert!(b.join("extracted.ymhk").exists());
}
