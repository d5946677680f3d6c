//! Command-line front end. Exit codes are a stable contract: 0 success,
//! 1 usage, 2 data or validation problems, 3 numerical failure. A
//! non-converged identification still writes its outputs before exiting
//! with code 3, so partial results are never lost.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::basis::BasisKind;
use crate::config::{BasisSection, ExperimentConfig};
use crate::em::{run_em, EmTrace};
use crate::error::{Error, Result};
use crate::harness::{derive_run_seed, draw_instance, run_one, summarize_finite, RunResult};
use crate::io::{
    read_results_csv, read_vector_csv, write_json, write_results_csv, write_trace_csv,
    write_vector_csv, BenchmarkSummary, GroupSummary, InstanceReport, ThetaReport,
};
use crate::metrics::{normalize_pair, Summary};
use crate::plot::{boxplot_svg, line_chart_svg, BoxSpec, LineSeries};

#[derive(Debug, Parser)]
#[command(
    name = "blindsi",
    version,
    about = "Blind identification of linear systems whose input lies in a known subspace"
)]
pub struct Cli {
    /// TOML configuration file; omitted fields take the benchmark defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Output directory, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the impulse response and input from an output recording.
    Identify {
        /// CSV file with a single column named `y`.
        data: PathBuf,
    },
    /// Generate one synthetic dataset.
    Simulate,
    /// Run the Monte Carlo benchmark over all configured groups.
    Benchmark,
    /// Summarize a benchmark results table and check estimator orderings.
    Inspect {
        /// A `results.csv` produced by the benchmark command.
        results: PathBuf,
    },
}

/// Parses `std::env` arguments, executes, and returns the process exit
/// code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.output {
        config.output_dir = dir.clone();
    }
    match &cli.command {
        Command::Identify { data } => cmd_identify(&config, data, cli.quiet),
        Command::Simulate => cmd_simulate(&config, cli.quiet),
        Command::Benchmark => cmd_benchmark(&config, cli.quiet),
        Command::Inspect { results } => cmd_inspect(results),
    }
}

fn ensure_output_dir(config: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))
}

fn last_step(trace: &EmTrace) -> f64 {
    match trace.thetas.as_slice() {
        [.., a, b] => b.distance(a),
        _ => 0.0,
    }
}

/// Reads the output column, runs the blind estimator with the configured
/// basis, and writes `g_hat.csv`, `u_hat.csv` (scale-normalized),
/// `theta.json`, and `trace.csv` into the output directory.
pub fn cmd_identify(config: &ExperimentConfig, data: &Path, quiet: bool) -> Result<()> {
    let y = read_vector_csv(data, "y")?;
    let mut sized = config.clone();
    sized.big_n = y.len();
    let fallback_p = config.groups.first().map(|g| g.p).unwrap_or(1);
    let basis = sized.instance_basis(fallback_p)?;
    let estimate = run_em(&y, basis.h(), &sized.em_settings(config.seed))?;

    let u_raw = basis.input(&estimate.theta.x)?;
    let pair = normalize_pair(&u_raw, &estimate.posterior.mean_g)?;

    ensure_output_dir(config)?;
    write_vector_csv(&config.output_dir.join("g_hat.csv"), "g_hat", &pair.g_norm)?;
    write_vector_csv(&config.output_dir.join("u_hat.csv"), "u_hat", &pair.u_norm)?;
    write_json(
        &config.output_dir.join("theta.json"),
        &ThetaReport {
            x: estimate.theta.x.iter().copied().collect(),
            sigma2: estimate.theta.sigma2,
            beta: estimate.theta.beta,
            log_marginal: estimate.final_log_marginal(),
            iterations: estimate.trace.iterations,
            converged: estimate.trace.converged,
        },
    )?;
    write_trace_csv(&config.output_dir.join("trace.csv"), &estimate.trace)?;

    if !quiet {
        println!(
            "estimated {} coefficients from {} samples in {} iterations, log marginal {:.4}",
            sized.n,
            y.len(),
            estimate.trace.iterations,
            estimate.final_log_marginal()
        );
        println!("wrote estimates to {}", config.output_dir.display());
    }
    if !estimate.trace.converged {
        return Err(Error::NonConvergence {
            iterations: estimate.trace.iterations,
            last_step: last_step(&estimate.trace),
        });
    }
    Ok(())
}

fn resolved_basis_section(kind: &BasisKind) -> BasisSection {
    match kind {
        BasisKind::PiecewiseConstant { switch_instants } => BasisSection {
            kind: "piecewise_constant".into(),
            switch_instants: Some(switch_instants.clone()),
            frequencies: None,
        },
        BasisKind::Sinusoid { frequencies } => BasisSection {
            kind: "sinusoid".into(),
            switch_instants: None,
            frequencies: Some(frequencies.clone()),
        },
        BasisKind::Custom => BasisSection {
            kind: "custom".into(),
            switch_instants: None,
            frequencies: None,
        },
    }
}

/// Draws one dataset with the configured system family, basis, and noise
/// level, and writes `y.csv`, `u_true.csv`, `g_true.csv`, `instance.json`.
pub fn cmd_simulate(config: &ExperimentConfig, quiet: bool) -> Result<()> {
    let fallback_p = config.groups.first().map(|g| g.p).unwrap_or(1);
    let basis = config.instance_basis(fallback_p)?;
    let run_seed = derive_run_seed(config.seed, basis.p(), 0);
    let inst = draw_instance(config, &basis, run_seed)?;

    ensure_output_dir(config)?;
    write_vector_csv(&config.output_dir.join("y.csv"), "y", &inst.y)?;
    write_vector_csv(
        &config.output_dir.join("u_true.csv"),
        "u_true",
        &inst.u_true,
    )?;
    write_vector_csv(
        &config.output_dir.join("g_true.csv"),
        "g_true",
        &inst.g_true,
    )?;
    write_json(
        &config.output_dir.join("instance.json"),
        &InstanceReport {
            seed: run_seed,
            sigma2_true: inst.sigma2_true,
            basis: resolved_basis_section(inst.basis.kind()),
        },
    )?;
    if !quiet {
        println!(
            "simulated {} samples (p = {}, noise variance {:.3e})",
            inst.y.len(),
            basis.p(),
            inst.sigma2_true
        );
        println!("wrote dataset to {}", config.output_dir.display());
    }
    Ok(())
}

fn fit_column(rows: &[RunResult], f: fn(&RunResult) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

fn group_boxes(summary: &GroupSummary) -> Vec<BoxSpec> {
    [
        ("B-KB", summary.bkb),
        ("NB-LS", summary.nbls),
        ("NB-KB", summary.nbkb),
    ]
    .into_iter()
    .filter_map(|(label, s)| {
        s.map(|summary| BoxSpec {
            label: label.into(),
            summary,
        })
    })
    .collect()
}

/// Runs every configured group, writing `results.csv`, `summary.json`, one
/// `boxplot_p<p>.svg` per group, and `median_vs_p.svg`. Individual run
/// failures become NaN rows; only configuration problems abort the batch.
pub fn cmd_benchmark(config: &ExperimentConfig, quiet: bool) -> Result<()> {
    ensure_output_dir(config)?;
    let started = Instant::now();
    let mut rows: Vec<RunResult> = Vec::new();
    let mut group_summaries: Vec<GroupSummary> = Vec::new();

    for group in &config.groups {
        let basis = config.group_basis(group.p)?;
        let group_started = Instant::now();
        let first = rows.len();
        for run in 0..group.runs {
            let run_started = Instant::now();
            let row = run_one(config, &basis, group.p, run);
            if !quiet {
                println!(
                    "p={} run {}/{}: B-KB {:.3} NB-LS {:.3} NB-KB {:.3}{} ({:.1}s)",
                    group.p,
                    run + 1,
                    group.runs,
                    row.fit_bkb,
                    row.fit_nbls,
                    row.fit_nbkb,
                    if row.converged {
                        ""
                    } else {
                        " [hit iteration cap]"
                    },
                    run_started.elapsed().as_secs_f64()
                );
            }
            rows.push(row);
        }
        let slice = &rows[first..];
        let summary = GroupSummary {
            p: group.p,
            bkb: summarize_finite(&fit_column(slice, |r| r.fit_bkb)),
            nbls: summarize_finite(&fit_column(slice, |r| r.fit_nbls)),
            nbkb: summarize_finite(&fit_column(slice, |r| r.fit_nbkb)),
        };
        let svg = boxplot_svg(
            &format!("FIT at p = {}", group.p),
            "FIT",
            &group_boxes(&summary),
        );
        let path = config.output_dir.join(format!("boxplot_p{}.svg", group.p));
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        if !quiet {
            println!(
                "group p={}: {} runs in {:.1}s",
                group.p,
                group.runs,
                group_started.elapsed().as_secs_f64()
            );
        }
        group_summaries.push(summary);
    }

    write_results_csv(&config.output_dir.join("results.csv"), &rows)?;
    write_json(
        &config.output_dir.join("summary.json"),
        &BenchmarkSummary {
            groups: group_summaries.clone(),
        },
    )?;

    let mut series = [
        LineSeries {
            name: "B-KB".into(),
            points: Vec::new(),
        },
        LineSeries {
            name: "NB-LS".into(),
            points: Vec::new(),
        },
        LineSeries {
            name: "NB-KB".into(),
            points: Vec::new(),
        },
    ];
    for g in &group_summaries {
        for (line, summary) in series.iter_mut().zip([&g.bkb, &g.nbls, &g.nbkb]) {
            if let Some(s) = summary {
                line.points.push((g.p as f64, s.median));
            }
        }
    }
    let svg = line_chart_svg("median FIT by input dimension", "p", "median FIT", &series);
    let path = config.output_dir.join("median_vs_p.svg");
    std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;

    if !quiet {
        let failed = rows.iter().filter(|r| !r.fit_bkb.is_finite()).count();
        println!(
            "benchmark: {} runs ({} failed) in {:.1}s, results in {}",
            rows.len(),
            failed,
            started.elapsed().as_secs_f64(),
            config.output_dir.display()
        );
    }
    Ok(())
}

fn median_of(summary: &Option<Summary>) -> Option<f64> {
    summary.as_ref().map(|s| s.median)
}

fn yes_no(v: bool) -> &'static str {
    if v {
        "yes"
    } else {
        "no"
    }
}

/// Prints per-group five-number summaries and the estimator-ordering
/// checks. Reporting only; orderings that fail are printed, not raised.
pub fn cmd_inspect(path: &Path) -> Result<()> {
    let rows = read_results_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Parse(format!(
            "{}: results table has no data rows",
            path.display()
        )));
    }
    let mut by_p: BTreeMap<usize, Vec<RunResult>> = BTreeMap::new();
    for row in rows {
        by_p.entry(row.p).or_default().push(row);
    }

    let mut summaries: BTreeMap<usize, GroupSummary> = BTreeMap::new();
    for (&p, group) in &by_p {
        let failed = group.iter().filter(|r| !r.fit_bkb.is_finite()).count();
        println!("group p={p}: {} runs, {} failed", group.len(), failed);
        let summary = GroupSummary {
            p,
            bkb: summarize_finite(&fit_column(group, |r| r.fit_bkb)),
            nbls: summarize_finite(&fit_column(group, |r| r.fit_nbls)),
            nbkb: summarize_finite(&fit_column(group, |r| r.fit_nbkb)),
        };
        for (label, s) in [
            ("B-KB", &summary.bkb),
            ("NB-LS", &summary.nbls),
            ("NB-KB", &summary.nbkb),
        ] {
            match s {
                Some(s) => println!(
                    "  {label:<6} median {:.4}  q1 {:.4}  q3 {:.4}  (n={})",
                    s.median, s.q1, s.q3, s.count
                ),
                None => println!("  {label:<6} no successful runs"),
            }
        }
        summaries.insert(p, summary);
    }

    println!("orderings");
    let nbkb_tops = summaries
        .values()
        .all(|g| match (median_of(&g.nbkb), median_of(&g.bkb)) {
            (Some(k), Some(b)) => k >= b,
            _ => false,
        });
    println!("  NB-KB >= B-KB in every group: {}", yes_no(nbkb_tops));
    for g in summaries.values() {
        if let (Some(b), Some(l)) = (median_of(&g.bkb), median_of(&g.nbls)) {
            println!("  B-KB >= NB-LS at p={}: {}", g.p, yes_no(b >= l));
        }
    }
    if summaries.len() >= 2 {
        let first = summaries.values().next().unwrap();
        let last = summaries.values().next_back().unwrap();
        if let (Some(lo_p), Some(hi_p)) = (median_of(&first.bkb), median_of(&last.bkb)) {
            println!(
                "  B-KB degrades from p={} to p={}: {}",
                first.p,
                last.p,
                yes_no(hi_p < lo_p)
            );
        }
    }
    Ok(())
}
