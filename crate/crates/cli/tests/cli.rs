use std::path::PathBuf;
use std::process::{Command, Output};

use bethe_core::verification::walk_probability;

fn bethe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bethe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV output, header dropped.
fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("bethe-cli-{}-{name}", std::process::id()))
}

#[test]
fn prob_at_time_zero_is_delta() {
    let o = bethe(&[
        "prob", "--model", "asep", "--p", "0.5", "--y", "0,1", "--x", "0,1", "--t", "0",
        "--format", "csv",
    ]);
    let rows = csv_rows(&o);
    assert!((num(&rows[0][0]) - 1.0).abs() < 1e-12);
    let o = bethe(&[
        "prob", "--model", "asep", "--p", "0.5", "--y", "0,1", "--x", "0,2", "--t", "0",
        "--format", "csv",
    ]);
    assert!(num(&csv_rows(&o)[0][0]).abs() < 1e-12);
}

#[test]
fn prob_agrees_with_oracle() {
    let o = bethe(&[
        "prob", "--model", "azrp", "--p", "0.6", "--y", "0,0", "--x", "0,1", "--t", "0.3",
        "--oracle", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (a, b) = (
        v[0]["value"].as_f64().unwrap(),
        v[0]["oracle"].as_f64().unwrap(),
    );
    assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
}

#[test]
fn push_probability_has_error_bar() {
    let o = bethe(&[
        "prob", "--model", "push", "--p", "0.5", "--mu", "0.5", "--y", "0,1", "--x", "5,6", "--t",
        "1", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v[0]["value"].as_f64().unwrap();
    let err = v[0]["abs_error"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p) && p > 0.0);
    assert!(err < 1e-10 * p.max(1.0));
}

#[test]
fn negative_sites_parse() {
    let o = bethe(&[
        "prob", "--model", "asep", "--p", "0.3", "--y", "-3,-1", "--x", "-2,0", "--t", "0.5",
        "--format", "csv",
    ]);
    let p = num(&csv_rows(&o)[0][0]);
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &[
            "prob", "--model", "asep", "--p", "0.5", "--y", "0,1", "--t", "1",
        ],
        &[
            "prob", "--model", "asep", "--p", "0.5", "--y", "1,0", "--x", "0,1", "--t", "1",
        ],
        &[
            "prob", "--model", "asep", "--p", "1.5", "--y", "0,1", "--x", "0,1", "--t", "1",
        ],
        &[
            "prob", "--model", "asep", "--p", "0.5", "--mu", "0.3", "--y", "0,1", "--x", "0,1",
            "--t", "1",
        ],
        &[
            "prob", "--model", "foo", "--p", "0.5", "--y", "0,1", "--x", "0,1", "--t", "1",
        ],
        &[
            "prob", "--model", "asep", "--p", "0.5", "--y", "0,1", "--x", "0,1", "--t", "-1",
        ],
        &[
            "prob", "--model", "asep", "--p", "0.5", "--y", "0,1", "--x", "0,1", "--t", "1", "--m",
            "1",
        ],
        &[
            "marginal", "--model", "asep", "--p", "0.5", "--y", "0,1", "--m", "1", "--t", "1",
        ],
        &[
            "marginal", "--model", "azrp", "--p", "0.5", "--y", "0,1", "--m", "3", "--t", "1",
        ],
        &["verify", "--check", "nonsense"],
        &["verify", "--check", "bijection", "--model", "asep"],
        &[
            "sweep", "--model", "asep", "--p", "0.5", "--y", "0", "--x", "1", "--param", "q",
            "--grid", "0:1:0.5",
        ],
        &[
            "prob", "--model", "asep", "--p", "0.5", "--y", "0,1", "--x", "0,1", "--t", "1",
            "--format", "xml",
        ],
    ];
    for args in cases {
        let o = bethe(args);
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
fn numeric_failure_exits_3() {
    let o = bethe(&[
        "prob",
        "--model",
        "push",
        "--p",
        "0.5",
        "--mu",
        "0.5",
        "--y",
        "0,1",
        "--x",
        "5,6",
        "--t",
        "1",
        "--nodes",
        "8",
        "--max-nodes",
        "8",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
}

#[test]
fn marginal_single_particle_is_walk() {
    let o = bethe(&[
        "marginal", "--model", "azrp", "--p", "0.7", "--y", "2", "--m", "1", "--t", "1",
        "--format", "csv",
    ]);
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 11);
    for r in rows {
        let x: i64 = r[0].parse().unwrap();
        let expect = walk_probability(0.7, 0.3, 1.0, x - 2);
        assert!((num(&r[1]) - expect).abs() <= 1e-9, "x={x}");
    }
}

#[test]
fn marginal_columns() {
    let o = bethe(&[
        "marginal", "--model", "azrp", "--p", "0.5", "--y", "0,0,1", "--m", "2", "--t", "0.5",
        "--xs", "-1:2", "--format", "csv",
    ]);
    assert!(stdout(&o).starts_with("x,prob,err\n"));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| (-1e-9..=1.0).contains(&num(&r[1]))));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--model",
        "asap",
        "--p",
        "0.6",
        "--mu",
        "0.4",
        "--y",
        "0,1",
        "--t",
        "1",
        "--samples",
        "3000",
        "--seed",
        "7",
        "--format",
        "csv",
    ];
    let (a, b) = (bethe(&args), bethe(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&a);
    let total: i64 = rows.iter().map(|r| r[1].parse::<i64>().unwrap()).sum();
    assert_eq!(total, 3000);
    let mut other = args.to_vec();
    other[13] = "8";
    assert_ne!(bethe(&other).stdout, a.stdout);
}

#[test]
fn simulate_against_oracle() {
    let o = bethe(&[
        "simulate",
        "--model",
        "push",
        "--p",
        "0.5",
        "--mu",
        "0.5",
        "--y",
        "0,1",
        "--t",
        "0.5",
        "--samples",
        "20000",
        "--oracle",
        "--format",
        "csv",
    ]);
    let rows = csv_rows(&o);
    for r in rows.iter().filter(|r| num(&r[3]) * 20000.0 >= 10.0) {
        assert!(num(&r[4]).abs() < 5.0, "{r:?}");
    }
}

#[test]
fn trajectory_starts_at_y() {
    let o = bethe(&[
        "simulate",
        "--model",
        "asep",
        "--p",
        "0.5",
        "--y",
        "-1,3",
        "--t",
        "2",
        "--trajectory",
        "--format",
        "csv",
    ]);
    assert!(stdout(&o).starts_with("time,x1,x2\n0,-1,3\n"));
    let times: Vec<f64> = csv_rows(&o).iter().map(|r| num(&r[0])).collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]) && *times.last().unwrap() <= 2.0);
}

#[test]
fn verify_bijection_passes() {
    let o = bethe(&["verify", "--check", "bijection", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn verify_push_lemmas_at_four_particles() {
    let o = bethe(&[
        "verify", "--check", "lemmas", "--model", "push", "--n", "4", "--trials", "1", "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for r in v.as_array().unwrap() {
        assert!(r["residual"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn verify_json_schema() {
    let o = bethe(&[
        "verify", "--check", "walk", "--model", "asap", "--p", "0.3", "--mu", "0.6", "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v[0];
    for key in [
        "check",
        "model",
        "params",
        "residual",
        "tolerance",
        "pass",
        "seed",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["model"], "asap");
    assert_eq!(r["params"]["p"], 0.3);
    assert_eq!(r["pass"], true);
}

#[test]
fn verify_failure_exits_1() {
    let o = bethe(&[
        "verify", "--check", "walk", "--model", "asep", "--tol", "1e-30",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn sweep_in_time_is_walk() {
    let o = bethe(&[
        "sweep", "--model", "asep", "--p", "0.6", "--y", "0", "--x", "2", "--param", "t", "--grid",
        "0:2:0.1", "--format", "csv",
    ]);
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 21);
    for r in rows {
        let t = num(&r[0]);
        assert!(
            (num(&r[1]) - walk_probability(0.6, 0.4, t, 2)).abs() <= 1e-10,
            "t={t}"
        );
    }
}

#[test]
fn empty_sweep_is_header_only() {
    let o = bethe(&[
        "sweep", "--model", "asep", "--p", "0.6", "--y", "0", "--x", "2", "--param", "t", "--grid",
        "", "--format", "csv",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "t,value,err\n");
}

#[test]
fn sweep_mu_stays_in_unit_interval() {
    let o = bethe(&[
        "sweep",
        "--model",
        "asap",
        "--p",
        "0.6",
        "--y",
        "0,1",
        "--x",
        "1,3",
        "--t",
        "1",
        "--param",
        "mu",
        "--grid",
        "0.1:0.9:0.1",
        "--format",
        "csv",
    ]);
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[2][0], "0.3");
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&num(&r[1]))));
}

#[test]
fn config_file_and_flag_precedence() {
    let path = temp_path("run.conf");
    std::fs::write(
        &path,
        "# shared settings\nmodel = asep\np = 0.9\ny = 0\nx = 1\nt = 1\nformat = csv\n",
    )
    .unwrap();
    let conf = path.to_str().unwrap();
    let from_file = csv_rows(&bethe(&["prob", "--config", conf]));
    assert!((num(&from_file[0][0]) - walk_probability(0.9, 0.1, 1.0, 1)).abs() < 1e-10);
    let overridden = csv_rows(&bethe(&["prob", "--config", conf, "--p", "0.2"]));
    assert!((num(&overridden[0][0]) - walk_probability(0.2, 0.8, 1.0, 1)).abs() < 1e-10);
    std::fs::write(&path, "model = asep\nsamples = 10\n").unwrap();
    assert_eq!(bethe(&["prob", "--config", conf]).status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}

#[test]
fn output_file_is_byte_identical_and_quiet_is_silent() {
    let (a, b) = (temp_path("a.json"), temp_path("b.json"));
    for p in [&a, &b] {
        let o = bethe(&[
            "verify",
            "--check",
            "monte-carlo",
            "--model",
            "asep",
            "--seed",
            "11",
            "--format",
            "json",
            "--quiet",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    std::fs::remove_file(a).ok();
    std::fs::remove_file(b).ok();
}

#[test]
fn every_command_honors_csv() {
    let runs: &[&[&str]] = &[
        &[
            "prob", "--model", "asep", "--p", "0.5", "--y", "0", "--x", "0", "--t", "1",
        ],
        &[
            "marginal", "--model", "azrp", "--p", "0.5", "--y", "0", "--m", "1", "--t", "1",
            "--xs", "0",
        ],
        &[
            "simulate",
            "--model",
            "azrp",
            "--p",
            "0.5",
            "--y",
            "0,0",
            "--t",
            "1",
            "--samples",
            "10",
        ],
        &[
            "verify", "--check", "walk", "--model", "push", "--p", "0.5", "--mu", "0.5",
        ],
        &[
            "sweep", "--model", "asep", "--p", "0.5", "--y", "0", "--x", "0", "--param", "p",
            "--grid", "0.5", "--t", "1",
        ],
    ];
    for args in runs {
        let mut a = args.to_vec();
        a.extend(["--format", "csv"]);
        let o = bethe(&a);
        assert!(o.status.success(), "{args:?}");
        let text = stdout(&o);
        let header = text.lines().next().unwrap();
        assert!(
            !header.contains(' ') && header.contains(','),
            "{args:?}: {header}"
        );
        let q = bethe(&[a.as_slice(), &["--quiet"]].concat());
        assert!(q.stdout.is_empty());
    }
}
