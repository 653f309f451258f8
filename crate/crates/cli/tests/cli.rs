use std::process::{Command, Output};

use fejerlab::experiments::{parse_report, Verdict};

fn fejerlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fejerlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn predicted(text: &str) -> f64 {
    let field = text
        .split_whitespace()
        .find_map(|t| t.strip_prefix("predicted="))
        .expect("summary line");
    field.parse().unwrap()
}

#[test]
fn converge_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("semi.csv");
    let o = fejerlab(&[
        "converge", "--group", "r1", "--family", "semicircle:0.3", "--partition", "halves",
        "--function", "step", "--point", "0", "--sweep", "real:0.1:0.1:5", "--tol", "1e-6",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = parse_report(&out).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.predicted.unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(r.rows.len(), 5);
}

#[test]
fn oscillating_target_is_refused() {
    let o = fejerlab(&[
        "converge", "--group", "r1", "--family", "poisson", "--function", "sin-oscillation",
        "--point", "0", "--sweep", "real:0.1:0.5:4",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text.contains("verdict=refused"), "{text}");
    assert!(text.contains("directional limit"), "{text}");
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# ax+b run\ngroup = axb\nfamily = axbphi\nfunction = cell-values:0,1,2,3\npoint = 1,0\nsweep = real:0.1:0.1:3\ntol = 1e-5\n",
    )
    .unwrap();
    let o = fejerlab(&["--config", cfg.to_str().unwrap(), "converge"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((predicted(&stdout(&o)) - 1.5).abs() < 1e-12);

    let o = fejerlab(&["--config", cfg.to_str().unwrap(), "converge", "--function", "quadrant-step:A4"]);
    assert!(o.status.success());
    assert!((predicted(&stdout(&o)) - 0.25).abs() < 1e-12);
}

#[test]
fn custom_partition_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cells.conf");
    std::fs::write(
        &cfg,
        "cell.L.axis0 = below\ncell.R.axis0 = above\nsplit.axis0 = 0\n",
    )
    .unwrap();
    let o = fejerlab(&[
        "--config", cfg.to_str().unwrap(), "masses", "--group", "r1", "--family", "semicircle:0.25",
        "--sweep", "real:0.1:0.5:3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("param,L,R\n"), "{text}");
    assert!(text.contains("stable=true"));
}

#[test]
fn verify_kernel_and_compare() {
    let o = fejerlab(&["verify-kernel", "--group", "heis", "--family", "heisw3", "--sweep", "list:0.2,0.05,0.01"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("verdict=pass"));

    let o = fejerlab(&["verify-kernel", "--group", "torus1", "--family", "fejer", "--n", "8"]);
    assert!(o.status.success());

    let o = fejerlab(&["compare", "--n-max", "8", "--function", "harmonic:3", "--points", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,x,cesaro,convolve,abs_diff"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9 * 5);
    for row in rows {
        let diff: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(diff < 1e-7, "{row}");
    }
}

#[test]
fn lebesgue_reports_non_lebesgue_point() {
    let o = fejerlab(&["lebesgue", "--function", "open-interval:0:1", "--point", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("lebesgue_point=false"));
    let o = fejerlab(&["lebesgue", "--function", "open-interval:0:1", "--point", "0.5"]);
    assert!(stdout(&o).contains("lebesgue_point=true"));
}

#[test]
fn bad_input_is_an_error() {
    let o = fejerlab(&["verify-kernel", "--group", "sphere", "--family", "fejer", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fejerlab(&["verify-kernel", "--group", "r1", "--family", "fejer", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lives on"));
}
