use std::process::{Command, Output};
use std::time::Instant;

use rician_df::capacity::{capacity_opra, capacity_ora};
use rician_df::cli::{execute, CommandKind, Flags, RunConfig};
use rician_df::{db_to_linear, MinSnrDistribution, RicianHop};

const BIN: &str = env!("CARGO_BIN_EXE_rician-df");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header row and data rows of a CSV table, after the schema line.
fn parse_csv(text: &str, table: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# rician-df {table} schema v1")
    );
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn exponential_cdf_table() {
    let o = run(&[
        "dist",
        "--kx",
        "0",
        "--ky",
        "0",
        "--snr-x",
        "5",
        "--snr-y",
        "2",
        "--sweep",
        "0:10:21",
        "--mc-samples",
        "0",
    ]);
    assert!(o.status.success());
    let (header, rows) = parse_csv(&stdout(&o), "dist");
    assert_eq!(
        header,
        [
            "gamma",
            "cdf_analytic",
            "pdf_analytic",
            "cdf_mc",
            "mc_stderr"
        ]
    );
    assert_eq!(rows.len(), 21);
    let s = 1.0 / 5.0 + 1.0 / 2.0;
    let gamma = column(&header, &rows, "gamma");
    let cdf = column(&header, &rows, "cdf_analytic");
    for (g, f) in gamma.iter().zip(&cdf) {
        let expected = -(-s * g).exp_m1();
        assert!(
            (f - expected).abs() <= 1e-11 * expected.max(1e-300),
            "γ = {g}: {f} vs {expected}"
        );
    }
    for r in &rows {
        assert!(r[3].is_empty() && r[4].is_empty());
    }
}

#[test]
fn numbers_carry_twelve_significant_digits() {
    let o = run(&["dist", "--sweep", "0.5:3:4", "--mc-samples", "0"]);
    let (_, rows) = parse_csv(&stdout(&o), "dist");
    for cell in rows.iter().flat_map(|r| r[..3].iter()) {
        let (mantissa, exp) = cell.split_once('e').unwrap();
        assert!(exp.parse::<i32>().is_ok());
        let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
        assert_eq!(digits.len(), 12, "{cell}");
    }
}

#[test]
fn term_count_comparison_columns() {
    let o = run(&[
        "dist",
        "--kx",
        "5",
        "--ky",
        "5",
        "--snr-x",
        "5",
        "--snr-y",
        "5",
        "--sweep",
        "0:20:41",
        "--mc-samples",
        "0",
        "--compare-terms",
        "10,40",
    ]);
    assert!(o.status.success());
    let (header, rows) = parse_csv(&stdout(&o), "dist");
    let full = column(&header, &rows, "cdf_analytic");
    let ten = column(&header, &rows, "cdf_terms_10");
    let forty = column(&header, &rows, "cdf_terms_40");
    let worst_ten = full
        .iter()
        .zip(&ten)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let worst_forty = full
        .iter()
        .zip(&forty)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst_ten > 1e-3, "{worst_ten}");
    assert!(worst_forty < 1e-9, "{worst_forty}");
}

#[test]
fn capacity_sweep_rows() {
    let start = Instant::now();
    let o = run(&[
        "capacity",
        "--kx",
        "2",
        "--ky",
        "2",
        "--sweep",
        "0:30:31:db",
    ]);
    assert!(start.elapsed().as_secs_f64() < 60.0);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let (header, rows) = parse_csv(&text, "capacity");
    assert_eq!(rows.len(), 31);
    let ora = column(&header, &rows, "c_ora");
    let opra = column(&header, &rows, "c_opra");
    let g0 = column(&header, &rows, "gamma0");
    let beta0 = column(&header, &rows, "beta0_opt");
    let p_out = column(&header, &rows, "p_out");
    for i in 0..31 {
        assert!(opra[i] >= ora[i] && ora[i] >= 0.0, "row {i}");
        assert!((0.0..=1.0).contains(&g0[i]));
        assert!(beta0[i] > 0.0 && beta0[i] <= 1.0);
        assert!((0.0..=1.0).contains(&p_out[i]));
    }
    let status = header.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().all(|r| r[status] == "ok"));
    let gaps: Vec<f64> = opra.iter().zip(&ora).map(|(a, b)| a - b).collect();
    assert!((10..30).all(|i| gaps[i + 1] < gaps[i]));
    assert!(gaps[30] <= 0.02);
}

#[test]
fn asymmetric_sweep_keeps_ratio() {
    let o = run(&[
        "capacity",
        "--kx",
        "2",
        "--ky",
        "2",
        "--snr-x",
        "2",
        "--snr-y",
        "1",
        "--sweep",
        "0:30:4:db",
        "--scheme",
        "ora,opra",
    ]);
    assert!(o.status.success());
    let (header, rows) = parse_csv(&stdout(&o), "capacity");
    let db = column(&header, &rows, "snr_db");
    let ora = column(&header, &rows, "c_ora");
    let opra = column(&header, &rows, "c_opra");
    let tifr = header.iter().position(|h| h == "c_tifr_opt").unwrap();
    for i in 0..rows.len() {
        let m = db_to_linear(db[i]);
        let d = MinSnrDistribution::with_default_control(
            RicianHop::new(2.0, m).unwrap(),
            RicianHop::new(2.0, m / 2.0).unwrap(),
        )
        .unwrap();
        let expected_ora = capacity_ora(&d).unwrap().capacity;
        let expected_opra = capacity_opra(&d).unwrap().capacity;
        assert!((ora[i] - expected_ora).abs() <= 1e-11 * expected_ora);
        assert!((opra[i] - expected_opra).abs() <= 1e-11 * expected_opra);
        assert!(rows[i][tifr].is_empty());
    }
}

#[test]
fn bandwidth_scales_capacity() {
    let base = run(&["capacity", "--sweep", "0:10:2:db", "--scheme", "ora"]);
    let wide = run(&[
        "capacity",
        "--sweep",
        "0:10:2:db",
        "--scheme",
        "ora",
        "--bandwidth",
        "1000",
    ]);
    let (h, a) = parse_csv(&stdout(&base), "capacity");
    let (_, b) = parse_csv(&stdout(&wide), "capacity");
    for (x, y) in column(&h, &a, "c_ora").iter().zip(column(&h, &b, "c_ora")) {
        assert!((1000.0 * x - y).abs() <= 1e-10 * y);
    }
}

#[test]
fn cutoff_table() {
    let o = run(&[
        "cutoff",
        "--kx",
        "2",
        "--ky",
        "5",
        "--sweep",
        "0:30:7:db",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["table"], "cutoff");
    assert_eq!(v["schema_version"], 1);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    for r in rows {
        let g0 = r["gamma0"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&g0));
        assert!(r["cutoff_residual"].as_f64().unwrap().abs() <= 1e-8);
        assert_eq!(r["status"], "ok");
    }
}

#[test]
fn validate_report_is_json_and_passes() {
    let o = run(&["validate", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["table"], "validate");
    let rows = v["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!(r["status"], "pass", "{r}");
        if let Some(z) = r["z"].as_f64() {
            assert!(z.abs() <= 3.0);
        }
    }
}

#[test]
fn corrupted_tolerance_is_flagged() {
    let o = run(&["validate", "--tol", "1e-1", "--mc-samples", "100000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("backend disagreement"));
}

#[test]
fn validate_is_byte_identical() {
    let args = [
        "validate",
        "--kx",
        "1",
        "--ky",
        "4",
        "--seed",
        "99",
        "--mc-samples",
        "100000",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
}

#[test]
fn configuration_errors_exit_with_two() {
    let cases: [&[&str]; 7] = [
        &["validate", "--mc-samples", "10"],
        &["capacity", "--snr-x", "2", "--snr-x-db", "3"],
        &["capacity", "--no-such-flag"],
        &["dist", "--sweep", "5:1:10"],
        &["dist", "--kx", "-1"],
        &["capacity", "--scheme", "bogus"],
        &["dist", "--format", "xml"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn failed_rows_are_flagged_with_three() {
    let o = run(&[
        "capacity",
        "--kx",
        "10",
        "--terms",
        "1",
        "--tol",
        "1e-12",
        "--sweep",
        "0:10:3:db",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let (header, rows) = parse_csv(&stdout(&o), "capacity");
    assert_eq!(rows.len(), 3);
    let status = header.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().all(|r| r[status].starts_with("error")));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(
        &path,
        "# exponential hops\nkx = 0\nky = 0\nsnr-x 5\nsnr_y = 5\nsweep = 0:5:3\nformat = json\nmc-samples = 0\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let o = run(&["dist", "--config", p]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cdf = v["rows"][2]["cdf_analytic"].as_f64().unwrap();
    assert!((cdf - (1.0 - (-2.0f64).exp())).abs() < 1e-11);

    let o = run(&["dist", "--config", p, "--format", "csv", "--kx", "3"]);
    let (header, rows) = parse_csv(&stdout(&o), "dist");
    let flags = Flags {
        kx: Some(3.0),
        ky: Some(0.0),
        snr_x: Some(5.0),
        snr_y: Some(5.0),
        sweep: Some("0:5:3".into()),
        mc_samples: Some(0),
        ..Flags::default()
    };
    let cfg = RunConfig::resolve(&flags, CommandKind::Dist).unwrap();
    let expected = execute(CommandKind::Dist, &cfg)
        .unwrap()
        .table
        .values("cdf_analytic");
    let got = column(&header, &rows, "cdf_analytic");
    for (g, e) in got.iter().zip(expected) {
        assert!((g - e.unwrap()).abs() <= 1e-11);
    }

    std::fs::write(&path, "kx = 1\nwat = 3\n").unwrap();
    assert_eq!(run(&["dist", "--config", p]).status.code(), Some(2));
    assert_eq!(
        run(&["dist", "--config", "/nonexistent/run.conf"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.csv");
    let o = run(&[
        "capacity",
        "--sweep",
        "0:10:3:db",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let (_, rows) = parse_csv(&text, "capacity");
    assert_eq!(rows.len(), 3);
}
