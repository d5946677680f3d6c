//! Black-box tests of the installed binary: exit codes, file contracts,
//! and determinism of the artifacts, exercised through real process
//! invocations.

use std::path::Path;
use std::process::{Command, Output};

use blindsi::io::{read_json, read_results_csv, read_vector_csv, BenchmarkSummary};
use blindsi::metrics::fit_score;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blindsi"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [
        &["--help"][..],
        &["identify", "--help"][..],
        &["--version"][..],
    ] {
        let out = run(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
    assert!(stdout(&run(&["--help"])).contains("benchmark"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["--bogus-flag"][..],
        &["frobnicate"][..],
        &["identify"][..], // missing required data argument
        &[][..],
    ] {
        assert_eq!(code(&run(args)), 1, "{args:?}");
    }
}

#[test]
fn missing_data_file_exits_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = run(&["identify", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("absent.csv"),
        "stderr should name the file: {}",
        stderr(&out)
    );
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    // unknown configuration key
    let bad_key = write_config(dir.path(), "nois_ratio = 10.0\n");
    let out = run(&["simulate", "--config", &bad_key]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    // invalid value
    let bad_value = dir.path().join("bad_value.toml");
    std::fs::write(&bad_value, "n = 80\nN = 50\n").unwrap();
    let out = run(&["simulate", "--config", bad_value.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    // wrong header on the data column
    let data = dir.path().join("u.csv");
    std::fs::write(&data, "u\n1.0\n2.0\n").unwrap();
    let out = run(&["identify", data.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("header"), "{}", stderr(&out));

    // non-numeric row
    let garbled = dir.path().join("y.csv");
    std::fs::write(&garbled, "y\n1.0\nnope\n").unwrap();
    let out = run(&["identify", garbled.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    // basis switch instants beyond the recorded sample count
    let y_short = dir.path().join("short.csv");
    let mut body = String::from("y\n");
    for i in 0..40 {
        body.push_str(&format!("{}.5\n", i % 3));
    }
    std::fs::write(&y_short, body).unwrap();
    let config = dir.path().join("wide.toml");
    std::fs::write(
        &config,
        "n = 10\n[basis]\nkind = \"piecewise_constant\"\nswitch_instants = [50, 100]\n",
    )
    .unwrap();
    let out = run(&[
        "identify",
        y_short.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

fn fixture_config(dir: &Path, max_iters: usize) -> String {
    write_config(
        dir,
        &format!(
            "N = 100\nn = 30\nnoise_ratio = 10.0\nseed = 7\n\
             groups = [{{ p = 10, runs = 1 }}]\n\n[em]\nmax_iters = {max_iters}\n"
        ),
    )
}

#[test]
fn identify_round_trip_recovers_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path(), 3000);
    let sim_dir = dir.path().join("sim");
    let est_dir = dir.path().join("est");

    let out = run(&[
        "simulate",
        "--config",
        &config,
        "--output",
        sim_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = run(&[
        "identify",
        sim_dir.join("y.csv").to_str().unwrap(),
        "--config",
        &config,
        "--output",
        est_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stdout(&out).is_empty(),
        "--quiet must silence progress output"
    );

    let u_hat = read_vector_csv(&est_dir.join("u_hat.csv"), "u_hat").unwrap();
    let g_hat = read_vector_csv(&est_dir.join("g_hat.csv"), "g_hat").unwrap();
    let u_true = read_vector_csv(&sim_dir.join("u_true.csv"), "u_true").unwrap();
    let g_true = read_vector_csv(&sim_dir.join("g_true.csv"), "g_true").unwrap();
    let fit = fit_score(&u_hat, &g_hat, &u_true, &g_true, 30).unwrap();
    assert!(fit.value >= 0.8, "round-trip fit {:.3}", fit.value);

    assert!(est_dir.join("theta.json").exists());
    assert!(est_dir.join("trace.csv").exists());
}

#[test]
fn identify_reports_non_convergence_but_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path(), 40);
    let sim_dir = dir.path().join("sim");
    let est_dir = dir.path().join("est");

    run(&[
        "simulate",
        "--config",
        &config,
        "--output",
        sim_dir.to_str().unwrap(),
    ]);
    let out = run(&[
        "identify",
        sim_dir.join("y.csv").to_str().unwrap(),
        "--config",
        &config,
        "--output",
        est_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("40 iterations"), "{}", stderr(&out));
    // partial results are still on disk
    for file in ["g_hat.csv", "u_hat.csv", "theta.json", "trace.csv"] {
        assert!(est_dir.join(file).exists(), "{file} missing");
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config(dir.path(), 300);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out_dir in [&a, &b] {
        let out = run(&[
            "simulate",
            "--config",
            &config,
            "--output",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for file in ["y.csv", "u_true.csv", "g_true.csv", "instance.json"] {
        let bytes_a = std::fs::read(a.join(file)).unwrap();
        let bytes_b = std::fs::read(b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs between identical runs");
    }
}

#[test]
fn benchmark_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "N = 100\nn = 30\nnoise_ratio = 10.0\nseed = 42\n\
         groups = [{ p = 10, runs = 5 }]\n\n[em]\nmax_iters = 150\nrestarts = 2\n",
    );
    let out_a = dir.path().join("out_a");
    let out = run(&[
        "benchmark",
        "--config",
        &config,
        "--output",
        out_a.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("run 5/5"), "{}", stdout(&out));

    let rows = read_results_csv(&out_a.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.p, 10);
        assert_eq!(row.run, i);
        assert_eq!(row.wall_ms, 0, "wall_ms is pinned to zero for stable files");
        assert!(row.fit_bkb.is_finite());
    }

    // summary medians must be recomputable from the table
    let summary: BenchmarkSummary = read_json(&out_a.join("summary.json")).unwrap();
    assert_eq!(summary.groups.len(), 1);
    let group = &summary.groups[0];
    let recomputed =
        blindsi::harness::summarize_finite(&rows.iter().map(|r| r.fit_bkb).collect::<Vec<_>>())
            .unwrap();
    assert_eq!(group.bkb.unwrap(), recomputed);

    for plot in ["boxplot_p10.svg", "median_vs_p.svg"] {
        let text = std::fs::read_to_string(out_a.join(plot)).unwrap();
        assert!(text.starts_with("<svg"), "{plot} is not an svg");
    }

    // a second run of the same configuration reproduces the table exactly
    let out_b = dir.path().join("out_b");
    let out = run(&[
        "benchmark",
        "--config",
        &config,
        "--quiet",
        "--output",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        std::fs::read(out_a.join("results.csv")).unwrap(),
        std::fs::read(out_b.join("results.csv")).unwrap()
    );
}

#[test]
fn inspect_prints_orderings_and_rejects_empty_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "N = 100\nn = 30\nnoise_ratio = 10.0\nseed = 1\n\
         groups = [{ p = 5, runs = 3 }, { p = 20, runs = 3 }]\n\n\
         [em]\nmax_iters = 120\nrestarts = 2\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "benchmark",
        "--config",
        &config,
        "--quiet",
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let results = out_dir.join("results.csv");
    let out = run(&["inspect", results.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    for needle in [
        "group p=5",
        "group p=20",
        "median",
        "orderings",
        "NB-KB >= B-KB",
    ] {
        assert!(text.contains(needle), "missing \"{needle}\" in:\n{text}");
    }

    let empty = dir.path().join("empty.csv");
    std::fs::write(
        &empty,
        "p,run,seed,fit_bkb,fit_nbls,fit_nbkb,iters,converged,wall_ms\n",
    )
    .unwrap();
    let out = run(&["inspect", empty.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let missing = dir.path().join("absent.csv");
    let out = run(&["inspect", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}
