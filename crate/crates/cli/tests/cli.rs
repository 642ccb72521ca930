//! End-to-end tests against the compiled binary: output schemas, exit
//! statuses, and determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ballprob"))
        .args(args)
        .output()
        .expect("failed to spawn binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn prob_emits_json_record() {
    let out = run(&[
        "prob", "--sigma2", "1", "--mu", "0", "--r", "1.959964",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    for key in ["p", "one_minus_p", "steps", "rescales", "wall_time_s"] {
        assert!(v.get(key).is_some(), "missing key {key} in {text}");
    }
    let p = v["p"].as_f64().unwrap();
    assert!((p - 0.95).abs() < 1e-5, "p = {p}");
}

#[test]
fn prob_family_table_row() {
    let out = run(&[
        "prob", "--family", "hirotsu1", "--dim", "10", "--r", "40",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    // The tail at R = 40 is far below any representable reference scale.
    assert!(v["one_minus_p"].as_f64().unwrap() < 1e-6);
}

#[test]
fn prob_saturates_for_first_experiment() {
    let out = run(&[
        "prob", "--sigma2", "9,4,1", "--mu", "1,0.5,0.25", "--r", "40",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(v["one_minus_p"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn cdf_schema_row_count_and_monotonicity() {
    let out = run(&[
        "cdf", "--sigma2", "9,4,1", "--mu", "1,0.5,0.25", "--rmax", "10", "--n-points", "100",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,G"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (r, g) = l.split_once(',').unwrap();
            (r.parse().unwrap(), g.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 100);
    for w in rows.windows(2) {
        assert!(w[1].0 > w[0].0);
        assert!(w[1].1 >= w[0].1 - 1e-8, "G not monotone: {w:?}");
    }
    // G(10) = 0.997832, confirmed against Monte Carlo to within one
    // standard error at n = 2e7.
    let last = rows.last().unwrap().1;
    assert!((last - 0.997832).abs() < 1e-4, "G(10) = {last}");
}

#[test]
fn cdf_at_seed_radius_single_row() {
    let out = run(&[
        "cdf", "--sigma2", "1,1", "--rmax", "1e-6", "--n-points", "50",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    let (_, g) = lines[1].split_once(',').unwrap();
    assert!(g.parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn cdf_is_byte_deterministic() {
    let args = [
        "cdf", "--sigma2", "2,0.5", "--mu", "0.3,-0.1", "--rmax", "5", "--n-points", "20",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn laplace_ratio_schema_and_convergence() {
    let out = run(&[
        "laplace-ratio", "--sigma2", "9,4,1", "--mu", "1,0.5,0.25", "--radii", "5,20",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,component,hgm_over_asymptotic"));
    let mut at20 = Vec::new();
    let mut dtau_at_20 = [0.0f64; 3];
    let mut dlambda_at_20 = [0.0f64; 3];
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3, "{line}");
        let r: f64 = cols[0].parse().unwrap();
        let ratio: f64 = cols[2].parse().unwrap();
        if r == 5.0 {
            // Wide bracket far from the asymptotic regime... but the
            // leading components are still settling; only a loose check.
            assert!((0.5..=1.5).contains(&ratio), "{line}");
        } else {
            assert!((0.95..=1.05).contains(&ratio), "{line}");
            at20.push(ratio);
            if let Some(i) = cols[1].strip_prefix("dtau") {
                dtau_at_20[i.parse::<usize>().unwrap() - 1] = ratio;
            }
            if let Some(i) = cols[1].strip_prefix("dlambda") {
                dlambda_at_20[i.parse::<usize>().unwrap() - 1] = ratio;
            }
        }
    }
    assert_eq!(at20.len(), 7);
    // The lambda and tau ratios nearly coincide for the trailing
    // coordinates.
    for i in 1..3 {
        assert!(
            (dtau_at_20[i] - dlambda_at_20[i]).abs() <= 0.02,
            "i={i}: {} vs {}",
            dtau_at_20[i],
            dlambda_at_20[i]
        );
    }
}

#[test]
fn laplace_ratio_tie_emits_diagnostic_rows() {
    let out = run(&[
        "laplace-ratio",
        "--sigma2",
        "1,0.999999984,0.99999997",
        "--radii",
        "10",
    ]);
    assert!(out.status.success(), "tie must not be a crash");
    let text = stdout(&out);
    assert!(
        text.contains("diagnostic,GroupSeparationTooSmall"),
        "{text}"
    );
}

#[test]
fn bench_chi_matches_closed_form_per_row() {
    let out = run(&["bench", "--family", "chi", "--dims", "3:10", "--r", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d,hgm,exact,diff,wall_time_s"));
    let mut count = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let diff: f64 = cols[3].parse().unwrap();
        assert!(diff.abs() <= 2e-6, "{line}");
        count += 1;
    }
    assert_eq!(count, 8);
}

#[test]
fn bench_exp_product_matches_closed_form_per_row() {
    let out = run(&[
        "bench", "--family", "exp-product", "--dims", "6:20:2", "--r", "1",
    ]);
    assert!(out.status.success());
    for line in stdout(&out).lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let diff: f64 = cols[3].parse().unwrap();
        assert!(diff.abs() <= 1e-7, "{line}");
    }
}

#[test]
fn bench_jobs_ordering_is_deterministic() {
    let base = run(&[
        "bench", "--family", "hirotsu1", "--dims", "4:8", "--r", "10",
    ]);
    let jobs = run(&[
        "bench", "--family", "hirotsu1", "--dims", "4:8", "--r", "10", "--jobs", "3",
    ]);
    assert!(base.status.success() && jobs.status.success());
    // Timing columns differ; the value columns must not.
    let strip = |o: &Output| -> Vec<String> {
        stdout(o)
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&base), strip(&jobs));
}

#[test]
fn params_file_is_accepted() {
    let dir = std::env::temp_dir();
    let path = dir.join("ballprob_params_test.json");
    std::fs::write(&path, r#"{"sigma2": [1.0], "mu": [0.0]}"#).unwrap();
    let out = run(&["prob", "--params", path.to_str().unwrap(), "--r", "1.959964"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!((v["p"].as_f64().unwrap() - 0.95).abs() < 1e-5);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["prob", "--r", "1"],                                    // no params
        vec!["prob", "--sigma2", "1", "--family", "chi", "--r", "1"], // both sources
        vec!["prob", "--sigma2", "1,2", "--mu", "0", "--r", "1"],    // length mismatch
        vec!["bench", "--family", "nope", "--dims", "3:5", "--r", "1"],
        vec!["bench", "--family", "chi", "--dims", "5:3", "--r", "1"],
        vec!["selftest", "--level", "bogus"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn solver_errors_exit_1_with_error_name() {
    // R below the seed radius is rejected by the solver.
    let out = run(&["prob", "--sigma2", "1", "--r", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(v.get("error").is_some());
}

#[test]
fn selftest_quick_passes() {
    let out = run(&["selftest", "--level", "quick"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS: ")), "{text}");
}
