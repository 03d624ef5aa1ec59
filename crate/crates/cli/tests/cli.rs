use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TABLE1: &str = r#"{"channels": 3, "numerator": [1, -0.69195, 1.02372, 1.02372, -0.69195, 1], "denominator": [], "symmetry": "+1"}"#;

fn cmfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmfb"))
        .args(args)
        .env_remove("CMFB_GRID")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn design(dir: &Path, name: &str, m: &str, n: &str) -> PathBuf {
    let out = dir.join(name);
    let o = cmfb(&["design", "--channels", m, "--poles", n, "--output", p(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    out
}

fn noise_file(dir: &Path, len: usize) -> PathBuf {
    // xorshift keeps the test free of extra dependencies
    let mut s: u64 = 0x9e3779b97f4a7c15;
    let text: String = (0..len)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            format!("{}\n", (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    let path = dir.join("noise.txt");
    std::fs::write(&path, text).unwrap();
    path
}

fn read_text_signal(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

#[test]
fn design_report_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = design(dir.path(), "a.json", "3", "3");
    let b = design(dir.path(), "b.json", "3", "3");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = cmfb(&[
        "design",
        "--channels",
        "3",
        "--poles",
        "3",
        "--ripple-db",
        "0.05",
        "-o",
        p(&dir.path().join("c.json")),
    ]);
    let report = stdout(&o);
    let att: f64 = report
        .lines()
        .find(|l| l.starts_with("stopband attenuation"))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap();
    assert!(att >= 25.0, "{report}");
    assert!(report.contains("iterations"));
}

#[test]
fn design_without_output_is_usage_error() {
    assert_eq!(cmfb(&["design", "--channels", "3"]).status.code(), Some(64));
    assert_eq!(cmfb(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(cmfb(&["--help"]).status.code(), Some(0));
}

#[test]
fn infeasible_design_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = cmfb(&[
        "design",
        "--channels",
        "3",
        "--poles",
        "0",
        "--ripple-db",
        "0.0001",
        "--cutoff",
        "0.3",
        "--stopband-edge",
        "1.2",
        "--max-iterations",
        "300",
        "-o",
        p(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
}

#[test]
fn verify_table1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t1.json");
    std::fs::write(&path, TABLE1).unwrap();
    let o = cmfb(&["verify", p(&path)]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    assert!(report.contains("PASS"));
    assert!(report.contains("frame ratio           3.3015"));
    assert!(report.contains("0.48828"));
    assert!(report.contains("-0.72259"));
    assert!(report.contains("system delay          5"));
}

#[test]
fn verify_all_ones_is_tight() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ones.json");
    std::fs::write(
        &path,
        r#"{"channels": 4, "numerator": [1,1,1,1,1,1,1,1], "denominator": [], "symmetry": "+1"}"#,
    )
    .unwrap();
    let o = cmfb(&["verify", p(&path)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("frame ratio           0.000000 dB"));
}

#[test]
fn verify_corrupted_symmetry_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, TABLE1.replace("-0.69195, 1]", "-0.5, 1]")).unwrap();
    let o = cmfb(&["verify", p(&path)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("symmetric"));
}

#[test]
fn missing_or_malformed_file_exits_1() {
    assert_eq!(
        cmfb(&["verify", "/nonexistent/x.json"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.json");
    std::fs::write(&path, "{").unwrap();
    assert_eq!(cmfb(&["verify", p(&path)]).status.code(), Some(1));
}

#[test]
fn response_csv_shape_and_centers() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = design(dir.path(), "m3.json", "3", "3");
    let csv = dir.path().join("r.csv");
    let o = cmfb(&["response", p(&coeffs), "--grid", "1024", "-o", p(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "omega,h0_db,h1_db,h2_db");
    assert_eq!(lines.len(), 1025);
    let rows: Vec<Vec<f64>> = lines[1..]
        .iter()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    for ch in 0..3 {
        let peak = rows
            .iter()
            .max_by(|a, b| a[ch + 1].total_cmp(&b[ch + 1]))
            .unwrap()[0];
        let center = (2 * ch + 1) as f64 * std::f64::consts::PI / 6.0;
        assert!(
            (peak - center).abs() < std::f64::consts::PI / 6.0,
            "channel {ch} peaks at {peak}"
        );
    }

    // same run again is byte-identical, and CMFB_GRID sets the default grid
    let again = Command::new(env!("CARGO_BIN_EXE_cmfb"))
        .args(["response", p(&coeffs)])
        .env("CMFB_GRID", "1024")
        .output()
        .unwrap();
    assert_eq!(again.stdout, text.as_bytes());
}

#[test]
fn response_floor_matches_verify_attenuation() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = design(dir.path(), "m4.json", "4", "3");
    let report = stdout(&cmfb(&["verify", p(&coeffs)]));
    let att: f64 = report
        .lines()
        .find(|l| l.starts_with("stopband attenuation"))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap();
    let o = cmfb(&["response", p(&coeffs), "--grid", "8192", "--prototype"]);
    let text = stdout(&o);
    let edge = 1.5 * std::f64::consts::PI / 4.0;
    let mut peak = f64::NEG_INFINITY;
    let mut stop = f64::NEG_INFINITY;
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (w, db) = (cells[0], *cells.last().unwrap());
        peak = peak.max(db);
        if w >= edge {
            stop = stop.max(db);
        }
    }
    assert!(
        ((peak - stop) - att).abs() <= 0.1,
        "csv {} vs verify {att}",
        peak - stop
    );
}

#[test]
fn roundtrip_and_composition() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = design(dir.path(), "m4.json", "4", "3");
    let noise = noise_file(dir.path(), 48_000);

    let rt = dir.path().join("rt.txt");
    let o = cmfb(&[
        "process",
        "roundtrip",
        p(&coeffs),
        "-i",
        p(&noise),
        "-o",
        p(&rt),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rel: f64 = stdout(&o)
        .lines()
        .find(|l| l.starts_with("relative error"))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rel <= 1e-8);

    let sub = dir.path().join("sub.cmfb");
    let syn = dir.path().join("syn.txt");
    assert_eq!(
        cmfb(&[
            "process",
            "analyze",
            p(&coeffs),
            "-i",
            p(&noise),
            "-o",
            p(&sub)
        ])
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        cmfb(&[
            "process",
            "synthesize",
            p(&coeffs),
            "-i",
            p(&sub),
            "-o",
            p(&syn)
        ])
        .status
        .code(),
        Some(0)
    );
    let a = read_text_signal(&rt);
    let b = read_text_signal(&syn);
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12));

    let x = read_text_signal(&noise);
    assert!(a.iter().zip(&x).all(|(u, v)| (u - v).abs() <= 1e-9));
}

#[test]
fn binary_signals_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("t1.json");
    std::fs::write(&coeffs, TABLE1).unwrap();
    let x: Vec<f64> = (0..300)
        .map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0)
        .collect();
    let input = dir.path().join("x.bin");
    std::fs::write(
        &input,
        x.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>(),
    )
    .unwrap();
    let out = dir.path().join("y.bin");
    let o = cmfb(&[
        "process",
        "roundtrip",
        p(&coeffs),
        "--format",
        "binary",
        "-i",
        p(&input),
        "-o",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(bytes.len(), (300 - 5) * 8);
    let y: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert!(y.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-12));
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("t1.json");
    std::fs::write(&coeffs, TABLE1).unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    for mode in ["roundtrip", "analyze"] {
        let out = dir.path().join(format!("{mode}.out"));
        let o = cmfb(&["process", mode, p(&coeffs), "-i", p(&empty), "-o", p(&out)]);
        assert_eq!(o.status.code(), Some(0));
        let len = std::fs::metadata(&out).unwrap().len();
        assert_eq!(len, if mode == "analyze" { 16 } else { 0 });
    }
    let sub = dir.path().join("analyze.out");
    let y = dir.path().join("y.txt");
    let o = cmfb(&[
        "process",
        "synthesize",
        p(&coeffs),
        "-i",
        p(&sub),
        "-o",
        p(&y),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::metadata(&y).unwrap().len(), 0);
}

#[test]
fn subband_channel_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("t1.json");
    std::fs::write(&coeffs, TABLE1).unwrap();
    let m4 = design(dir.path(), "m4.json", "4", "1");
    let noise = noise_file(dir.path(), 64);
    let sub = dir.path().join("sub.cmfb");
    assert_eq!(
        cmfb(&["process", "analyze", p(&m4), "-i", p(&noise), "-o", p(&sub)])
            .status
            .code(),
        Some(0)
    );
    let o = cmfb(&[
        "process",
        "synthesize",
        p(&coeffs),
        "-i",
        p(&sub),
        "-o",
        p(&dir.path().join("y.txt")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
