use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nlsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nlsq(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|row| row.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn diagonal_state_json(populations: &[f64]) -> String {
    let n = populations.len();
    let re: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { populations[i] } else { 0.0 })
                .collect()
        })
        .collect();
    serde_json::json!({ "n_levels": n, "re": re, "im": vec![vec![0.0; n]; n] }).to_string()
}

#[test]
fn curve_has_one_ordered_row_per_alpha() {
    let text = ok(&["curve", "--state", "pacs:n=1", "--alpha-range", "0:1.5:0.1"]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(
        header,
        [
            "alpha",
            "xi",
            "nominator",
            "denominator",
            "best_params_json"
        ]
    );
    assert_eq!(rows.len(), 16);
    let alphas = column(&rows, 0);
    assert!(alphas.windows(2).all(|w| w[1] > w[0]));
    assert_eq!((alphas[0], alphas[15]), (0.0, 1.5));
    for row in &rows {
        let (xi, nom, den): (f64, f64, f64) = (
            row[1].parse().unwrap(),
            row[2].parse().unwrap(),
            row[3].parse().unwrap(),
        );
        assert!((xi - nom / den).abs() < 1e-12);
        let params: Value = serde_json::from_str(&row[4]).unwrap();
        assert!(params.get("unitary").is_some() && params.get("cost").is_some());
    }
    // alpha = 0 is Fock |1⟩, whose cubic ξ is exactly 3.
    assert!((column(&rows, 1)[0] - 3.0).abs() < 1e-6);
    assert!((column(&rows, 1)[10] - 0.769643).abs() < 1e-6);
}

#[test]
fn curve_usage_errors() {
    let cases: [&[&str]; 5] = [
        &["--state", "pacs:n=1", "--alpha-range", "1:0:0.1"],
        &["--state", "pacs:n=1", "--alpha-range", "0:1:0"],
        &["--state", "fock:1", "--alpha-range", "0:1:0.5"],
        &[
            "--state",
            "pacs:n=1",
            "--alpha-range",
            "0:1:0.5",
            "--cost",
            "septic",
        ],
        &["--state", "pacs:n=1"],
    ];
    for case in cases {
        let args: Vec<&str> = std::iter::once("curve")
            .chain(case.iter().copied())
            .collect();
        let out = nlsq(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn quintic_curve_is_never_above_cubic() {
    for n in ["pacs:n=1", "pacs:n=2"] {
        let args = |cost| {
            [
                "curve",
                "--state",
                n,
                "--alpha-range",
                "0:1.5:0.5",
                "--cost",
                cost,
            ]
        };
        let (_, cubic) = csv_rows(&ok(&args("cubic")));
        let (_, quintic) = csv_rows(&ok(&args("quintic:s=1.0,r4=0.2")));
        for (c, q) in column(&cubic, 1).iter().zip(column(&quintic, 1)) {
            assert!(q <= c + 1e-9, "{n}: quintic {q} > cubic {c}");
        }
    }
}

#[test]
fn n_levels_override_is_converged() {
    let run = |levels| {
        let (_, rows) = csv_rows(&ok(&[
            "curve",
            "--state",
            "pacs:n=1",
            "--alpha-range",
            "0.5:1.5:0.5",
            "--n-levels",
            levels,
        ]));
        column(&rows, 1)
    };
    for (a, b) in run("60").iter().zip(run("80")) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn loss_sweep_unit_transmittance_matches_certify() {
    let (header, rows) = csv_rows(&ok(&[
        "loss-sweep",
        "--state",
        "pacs:alpha=1.43,n=1",
        "--eta-range",
        "0.5:1:0.1",
    ]));
    assert_eq!(header, ["eta", "xi_cubic", "wigner_min"]);
    assert_eq!(rows.len(), 6);
    let xi = column(&rows, 1);
    assert!(xi.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{xi:?}");
    let wmin = column(&rows, 2);
    assert!(wmin[5] < -0.05 && wmin[0] > -1e-4);

    let report: Value =
        serde_json::from_str(&ok(&["certify", "--state", "pacs:alpha=1.43,n=1"])).unwrap();
    assert!((report["xi_cubic"].as_f64().unwrap() - xi[5]).abs() < 1e-12);
    assert_eq!(
        nlsq(&[
            "loss-sweep",
            "--state",
            "vacuum",
            "--eta-range",
            "0:1.2:0.4"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn certify_state_files() {
    let dir = TempDir::new().unwrap();
    let vacuum = dir.path().join("vacuum.json");
    std::fs::write(&vacuum, diagonal_state_json(&[1.0, 0.0, 0.0, 0.0])).unwrap();
    let report: Value =
        serde_json::from_str(&ok(&["certify", "--input", path_str(&vacuum)])).unwrap();
    let keys: Vec<&str> = report
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(keys.len(), 5);
    for k in [
        "xi_cubic",
        "xi_quintic",
        "certified",
        "best_params",
        "diagnostics",
    ] {
        assert!(keys.contains(&k), "{k}");
    }
    assert_eq!(report["certified"], false);
    assert!((report["xi_cubic"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    // |1⟩ sits three times above the cubic bound and is not certified.
    let fock1 = dir.path().join("fock1.json");
    std::fs::write(&fock1, diagonal_state_json(&[0.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
    let report: Value =
        serde_json::from_str(&ok(&["certify", "--input", path_str(&fock1)])).unwrap();
    assert!((report["xi_cubic"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert_eq!(report["certified"], false);

    let report: Value =
        serde_json::from_str(&ok(&["certify", "--state", "pacs:alpha=1,n=1"])).unwrap();
    assert_eq!(report["certified"], true);
}

#[test]
fn malformed_inputs_name_the_offending_place() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "theta,value\n0.0,0.1\n0.5,abc\n").unwrap();
    let out = nlsq(&["certify", "--input", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(4));
    let msg = stderr(&out);
    assert!(msg.contains("row 2") && msg.contains("value"), "{msg}");

    let json = dir.path().join("bad.json");
    std::fs::write(&json, r#"{"n_levels": 2, "re": [[1, 0], [0, 0]]}"#).unwrap();
    let out = nlsq(&["certify", "--input", path_str(&json)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("im"), "{}", stderr(&out));

    let out = nlsq(&[
        "certify",
        "--input",
        path_str(&dir.path().join("missing.csv")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(
        nlsq(&["certify", "--state", "fock:1", "--budget", "0:10:1e-3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sampling_is_deterministic() {
    let run = |seed| {
        ok(&[
            "sample",
            "--state",
            "pacs:alpha=1,n=1",
            "--phases",
            "4",
            "--per-phase",
            "500",
            "--seed",
            seed,
        ])
    };
    let a = run("7");
    assert_eq!(a, run("7"));
    assert_ne!(a, run("8"));
    assert!(a.starts_with("theta,value\n"));
    assert_eq!(a.lines().count(), 2001);
}

fn round_trip(state: &str, reference: &str, efficiency: &str, per_phase: &str, seed: &str) -> f64 {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("records.csv");
    let rho = dir.path().join("rho.json");
    ok(&[
        "sample",
        "--state",
        state,
        "--per-phase",
        per_phase,
        "--seed",
        seed,
        "--out",
        path_str(&data),
    ]);
    let summary: Value = serde_json::from_str(&ok(&[
        "tomography",
        "--input",
        path_str(&data),
        "--efficiency",
        efficiency,
        "--reference",
        reference,
        "--out",
        path_str(&rho),
    ]))
    .unwrap();
    assert_eq!(summary["dropped_records"], 0);
    let state: Value = serde_json::from_str(&std::fs::read_to_string(&rho).unwrap()).unwrap();
    assert_eq!(state["n_levels"], 25);
    summary["fidelity"].as_f64().unwrap()
}

#[test]
fn vacuum_round_trip() {
    let f = round_trip("vacuum", "vacuum", "1.0", "10000", "3");
    assert!(f > 0.995, "{f}");
}

#[test]
fn efficiency_correction_round_trip() {
    let f = round_trip(
        "pacs:alpha=1,n=1,eta=0.92",
        "pacs:alpha=1,n=1",
        "0.92",
        "16667",
        "5",
    );
    assert!(f > 0.99, "{f}");
}

#[test]
fn certify_quadrature_data_with_bootstrap() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("records.csv");
    ok(&[
        "sample",
        "--state",
        "pacs:alpha=1,n=1",
        "--per-phase",
        "5000",
        "--seed",
        "11",
        "--out",
        path_str(&data),
    ]);
    let args = [
        "certify",
        "--input",
        path_str(&data),
        "--bootstrap",
        "3",
        "--budget",
        "8:1500:1e-8",
        "--seed",
        "2",
    ];
    let text = ok(&args);
    assert_eq!(text, ok(&args));
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["certified"], true);
    let boot = report["diagnostics"]["bootstrap"].as_array().unwrap();
    assert_eq!(boot.len(), 2);
    for b in boot {
        assert_eq!(b["n_resamples"], 3);
        assert!(b["std"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn wigner_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("w.csv");
    ok(&[
        "wigner",
        "--state",
        "fock:1",
        "--x-axis",
        "-7:7:15",
        "--p-axis",
        "-7:7:3",
        "--out",
        path_str(&out),
    ]);
    let (header, rows) = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header, ["x", "p", "w"]);
    assert_eq!(rows.len(), 45);
    // W(0, 0) of |1⟩ is −1/π.
    assert!((column(&rows, 2)[22] + 1.0 / std::f64::consts::PI).abs() < 1e-12);

    let grid: Value = serde_json::from_str(&ok(&[
        "wigner", "--state", "vacuum", "--x-axis", "-6:6:3", "--p-axis", "-6:6:3",
    ]))
    .unwrap();
    assert_eq!(grid["values"].as_array().unwrap().len(), 9);
    assert_eq!(
        nlsq(&["wigner", "--state", "vacuum", "--x-axis", "1:-1:3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nlsq(&["wigner", "--state", "fock:1", "--x-axis", "-2:2:5"])
            .status
            .code(),
        Some(2)
    );
}
