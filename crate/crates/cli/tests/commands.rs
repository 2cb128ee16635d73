use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cmsbnp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmsbnp")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = cmsbnp(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_sketch(dir: &Path) -> std::path::PathBuf {
    let tokens = dir.join("tokens.txt");
    let sketch = dir.join("sk.txt");
    ok(&["generate-zipf", "--exponent", "1.5", "--tokens", "5000", "--vocab", "2000", "--seed", "4", "--out", p(&tokens)]);
    ok(&["ingest", "--input", p(&tokens), "--rows", "2", "--buckets", "64", "--seed", "9", "--out", p(&sketch)]);
    sketch
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cmsbnp(&[]).status.code(), Some(1));
    assert_eq!(cmsbnp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cmsbnp(&["generate-zipf"]).status.code(), Some(1));
    assert_eq!(cmsbnp(&["generate-zipf", "--exponent", "0.5"]).status.code(), Some(1));
    assert!(cmsbnp(&["--help"]).status.success());
}

#[test]
fn missing_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cmsbnp(&["ingest", "--input", "/no/such/file", "--out", p(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file"));
    let o = cmsbnp(&["query", "--sketch", "/no/such/sketch", "tok"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_sketch_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "not a sketch\n").unwrap();
    assert_eq!(cmsbnp(&["query", "--sketch", p(&bad), "tok"]).status.code(), Some(2));
}

#[test]
fn empty_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let o = cmsbnp(&["ingest", "--input", p(&empty), "--out", p(&dir.path().join("sk"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("sk").exists());
}

#[test]
fn ingest_reports_shape_and_cms_needs_no_params() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = dir.path().join("t.txt");
    fs::write(&tokens, "a\nb\na\nc\na\n").unwrap();
    let sketch = dir.path().join("sk.txt");
    let line = ok(&["ingest", "--input", p(&tokens), "--rows", "3", "--buckets", "50", "--out", p(&sketch)]);
    assert_eq!(line.trim(), "m=5 N=3 J=50");
    let q = ok(&["query", "--sketch", p(&sketch), "a", "zzz"]);
    let lines: Vec<&str> = q.lines().collect();
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(fields[0], "a");
    assert_eq!(fields[2], "cms");
    assert!(fields[3].parse::<f64>().unwrap() >= 3.0);
}

#[test]
fn uci_bag_of_words_is_expanded() {
    let dir = tempfile::tempdir().unwrap();
    let uci = dir.path().join("docword.txt");
    fs::write(&uci, "2\n3\n3\n1 1 4\n1 3 1\n2 1 2\n").unwrap();
    let sketch = dir.path().join("sk.txt");
    let line = ok(&["ingest", "--input", p(&uci), "--format", "uci", "--buckets", "40", "--out", p(&sketch)]);
    assert_eq!(line.trim(), "m=7 N=2 J=40");
    let q = ok(&["query", "--sketch", p(&sketch), "1"]);
    assert!(q.split('\t').nth(3).unwrap().trim().parse::<f64>().unwrap() >= 6.0);

    fs::write(&uci, "2\n3\n2\n1 1 4\n").unwrap();
    assert_eq!(cmsbnp(&["ingest", "--input", p(&uci), "--format", "uci", "--out", p(&sketch)]).status.code(), Some(2));
}

#[test]
fn posterior_queries_check_their_params() {
    let dir = tempfile::tempdir().unwrap();
    let sketch = small_sketch(dir.path());
    assert_eq!(cmsbnp(&["query", "--sketch", p(&sketch), "--estimator", "dp-mean", "1"]).status.code(), Some(1));

    let dp = dir.path().join("dp.txt");
    ok(&["fit", "--sketch", p(&sketch), "--model", "dp", "--out", p(&dp)]);
    let q = ok(&["query", "--sketch", p(&sketch), "--params", p(&dp), "--estimator", "dp-mean", "1", "2"]);
    for line in q.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        let cms = f[1].split(',').map(|c| c.parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
        assert!(f[3].parse::<f64>().unwrap() <= cms + 1e-9);
    }
    let o = cmsbnp(&["query", "--sketch", p(&sketch), "--params", p(&dp), "--estimator", "pyp-mean", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let r = ok(&["query", "--sketch", p(&sketch), "--params", p(&dp), "--range2", "1", "2"]);
    assert!(r.starts_with("range2\t1\t2\tmean\t"));

    let pyp = dir.path().join("pyp.txt");
    ok(&["fit", "--sketch", p(&sketch), "--model", "pyp", "--replicates", "3", "--budget", "12", "--out", p(&pyp)]);
    ok(&["query", "--sketch", p(&sketch), "--params", p(&pyp), "--estimator", "pyp-median", "1"]);
    let o = cmsbnp(&["query", "--sketch", p(&sketch), "--params", p(&pyp), "--range2", "1", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults\ntokens = 20\nvocab=50\nseed=3\n").unwrap();
    let c = p(&cfg);
    let from_file = ok(&["--config", c, "generate-zipf", "--exponent", "2"]);
    assert_eq!(from_file.lines().count(), 20);
    let overridden = ok(&["--config", c, "generate-zipf", "--exponent", "2", "--tokens", "7"]);
    assert_eq!(overridden.lines().count(), 7);
    assert!(from_file.starts_with(&overridden));

    fs::write(&cfg, "tokens\n").unwrap();
    assert_eq!(cmsbnp(&["--config", c, "generate-zipf", "--exponent", "2"]).status.code(), Some(2));
}

#[test]
fn seeded_commands_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_sketch(dir.path());
    let first = fs::read(&a).unwrap();
    let again = small_sketch(dir.path());
    assert_eq!(first, fs::read(again).unwrap());
    let fit = ["fit", "--sketch", p(&a), "--model", "pyp", "--replicates", "2", "--budget", "8", "--seed", "5"];
    assert_eq!(ok(&fit), ok(&fit));
    let bench = ["bench", "--zipf", "1.4", "--tokens", "4000", "--vocab", "3000", "--hash", "64x2", "--estimators", "cms,cmm,dp-mean", "--seed", "1"];
    let out = ok(&bench);
    assert_eq!(out, ok(&bench));
    assert!(out.contains("# dp theta="));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    ok(&["bench", "--zipf", "1.4", "--tokens", "3000", "--vocab", "2000", "--hash", "32x2,16x4", "--estimators", "truth,cms", "--csv", p(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 9 * 2);
    assert_eq!(cmsbnp(&["bench", "--zipf", "1.4", "--hash", "32by2"]).status.code(), Some(1));
    assert_eq!(cmsbnp(&["bench"]).status.code(), Some(1));
}
