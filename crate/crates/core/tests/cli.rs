use std::path::Path;
use std::process::{Command, Output};

fn pcag(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcag"))
        .args(args)
        .env("PCAG_OUT_DIR", out)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tree_summary_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcag(&["tree"], dir.path());
    assert!(o.status.success());
    let line = stdout(&o);
    assert!(line.contains("depth=7"), "{line}");
    assert!(line.contains("max_children=6"), "{line}");
    let tree = std::fs::read_to_string(dir.path().join("tree.csv")).unwrap();
    assert!(tree.starts_with("sensor_id,parent_id,depth,children,subtree\n"));
    assert_eq!(tree.lines().count(), 53);
    let loads = std::fs::read_to_string(dir.path().join("loads_default.csv")).unwrap();
    assert!(loads.lines().any(|l| l == "16,51,52,103"));
}

#[test]
fn out_flag_overrides_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = pcag(&["tree", "--out", flag_dir.path().to_str().unwrap()], env_dir.path());
    assert!(o.status.success());
    assert!(flag_dir.path().join("tree.csv").exists());
    assert!(!env_dir.path().join("tree.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# small run\nsynth_epochs = 200\nfolds = 4\nq = 2\nrange = 15\n").unwrap();
    let o = pcag(&["basis", "--config", cfg.to_str().unwrap(), "--method", "pim"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("basis method=pim components=2"));
    let basis = std::fs::read_to_string(dir.path().join("basis.csv")).unwrap();
    assert!(basis.starts_with("sensor_id,mean,w_1,w_2\n"));
}

#[test]
fn synthetic_trace_feeds_back_in() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcag(&["synth", "--set", "synth_epochs=60"], dir.path());
    assert!(o.status.success());
    let trace = dir.path().join("trace.csv");
    let o = pcag(&["cov", "--trace", trace.to_str().unwrap(), "--folds", "3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("cov rounds=20 "));
    let snap = std::fs::read_to_string(dir.path().join("cov_snapshot.csv")).unwrap();
    assert!(snap.starts_with("i,j,c_ij\n"));
}

#[test]
fn score_respects_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcag(&["score", "--set", "synth_epochs=100", "--folds", "2", "--epsilon", "0.25"], dir.path());
    assert!(o.status.success());
    let rec = std::fs::read_to_string(dir.path().join("reconstruction.csv")).unwrap();
    let mut rows = 0;
    for line in rec.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[2] - f[3]).abs() <= 0.25 + 1e-7, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 100 * 52);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pcag(&[], dir.path()).status.code(), Some(1));
    assert_eq!(pcag(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(pcag(&["--help"], dir.path()).status.code(), Some(0));
    // validation
    assert_eq!(pcag(&["tree", "--q", "60"], dir.path()).status.code(), Some(1));
    assert_eq!(pcag(&["tree", "--range", "2"], dir.path()).status.code(), Some(1));
    assert_eq!(pcag(&["tree", "--epsilon", "-1"], dir.path()).status.code(), Some(1));
    assert_eq!(pcag(&["tree", "--set", "nonsense=1"], dir.path()).status.code(), Some(1));
    assert_eq!(pcag(&["xval", "--folds", "30", "--set", "synth_epochs=20"], dir.path()).status.code(), Some(1));
    // runtime: unreadable input, unwritable output
    let o = pcag(&["tree", "--trace", "/nonexistent/trace.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/trace.csv"));
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(pcag(&["tree", "--out", file.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn loads_skips_disconnected_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcag(&["loads", "--set", "synth_epochs=100", "--folds", "2", "--set", "ranges=4,10", "--set", "q_loads=3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("skipped=[4]"));
    let fig10 = std::fs::read_to_string(dir.path().join("fig10_loads.csv")).unwrap();
    assert!(fig10.lines().any(|l| l.starts_with("10,default,460,")));
}

#[test]
fn pim_finds_three_components_on_rank_three_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rank3.conf");
    std::fs::write(&cfg, "synth_sources = 3\nsynth_noise = 0\nsynth_epochs = 300\nfolds = 3\nrange = 50\n").unwrap();
    let o = pcag(&["pim", "--config", cfg.to_str().unwrap(), "--q", "3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("pim components=3 "), "{}", stdout(&o));
}

#[test]
fn xval_table_has_one_row_per_fold_and_component() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("x.conf");
    std::fs::write(&cfg, "synth_epochs = 200\nfolds = 4\nq_max = 6\nranges = 10\n").unwrap();
    let o = pcag(&["xval", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("fig9_retained_variance.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4 * 6);
}
