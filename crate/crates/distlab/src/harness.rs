//! CLI experiment runner.
//!
//! Every subcommand writes CSV data files plus one JSON summary into the
//! output directory. Data outputs are byte-deterministic given (config,
//! seed); the JSON summary additionally records wall-clock timing, which is
//! the one field allowed to differ between reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::deconvolve::{deconv_decision, DeconvConfig, Kernel};
use crate::discern::{run_trajectories, stopping_time_stats, DiscernConfig};
use crate::error::{Error, Result};
use crate::gaussian::{
    build_projection_test, estimate_projection_errors, SequenceModel, SignalVector,
};
use crate::kraft::{certify, CertifyConfig};
use crate::measures::{sine_density, sine_family, DensityFamily, GridMeasure};
use crate::partition::{build_test_from_families, estimate_errors, find_separating_sets,
    PartitionTestSpec};
use crate::poisson::{
    bayes_collapse_curve, bayes_collapse_double_sum, mc_bayes_collapse, mc_moment_identity,
    mc_tail_frequency, moment_identity_rhs, poisson_partition_errors, poisson_tail_bound,
    SINE_DESIGN_V,
};

#[derive(Debug, Parser)]
#[command(name = "distlab", version, about = "distinguishability experiments on [0,1)")]
pub struct Cli {
    /// RNG seed for all simulation (no entropy-based default).
    #[arg(long, global = true, env = "DISTLAB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Monte Carlo replicas.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub replicas: usize,

    /// Worker threads (0 = library default). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hull distance, Kraft lower bound, and the certification verdict.
    Kraft {
        /// Null family as JSON ({"members":[{"n_cells":..,"weights":[..]},..]}).
        #[arg(long)]
        families0: Option<PathBuf>,
        /// Alternative family as JSON; default is the sine family.
        #[arg(long)]
        families1: Option<PathBuf>,
        /// Size of the default sine alternative family.
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 512)]
        cells: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Partition-test Monte Carlo error curves and the fitted decay rate.
    Partition {
        #[arg(long)]
        families0: Option<PathBuf>,
        #[arg(long)]
        families1: Option<PathBuf>,
        /// Comma-separated sample sizes.
        #[arg(long, default_value = "50,100,200,400")]
        n: String,
        #[arg(long, default_value_t = 4096)]
        cells: usize,
        /// Override the automatically derived radius.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 4)]
        max_k: usize,
        #[arg(long, default_value_t = 4)]
        max_resolution: u32,
    },
    /// Projection-test error curves over a noise-level grid.
    Gaussian {
        /// white | hetero | illposed
        #[arg(long, default_value = "white")]
        model: String,
        /// Scales for hetero, or the A diagonal for illposed.
        #[arg(long)]
        scales: Option<String>,
        /// R diagonal for illposed.
        #[arg(long)]
        r_diag: Option<String>,
        #[arg(long, default_value = "1,0.5,0.25,0.1,0.05")]
        epsilon_grid: String,
        /// Alternative signal amplitude on the first coordinate.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Poisson process experiments.
    Poisson {
        /// identity | tailbound | partition | collapse
        #[arg(long, default_value = "identity")]
        action: String,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        /// Pooled realizations (identity/collapse) or comma list (partition).
        #[arg(long, default_value = "1")]
        n: String,
        /// Comma list of mixture sizes for collapse.
        #[arg(long, default_value = "10,100")]
        m_list: String,
        #[arg(long, default_value = "0.5,1,2")]
        mu_grid: String,
        #[arg(long, default_value = "0.25,0.5,1")]
        delta_grid: String,
        #[arg(long, default_value = "5,20,80")]
        n_grid: String,
    },
    /// Distinguishability before and after convolution.
    Deconv {
        /// point | uniform | gauss:SIGMA
        #[arg(long, default_value = "gauss:0.05")]
        kernel: String,
        #[arg(long)]
        families0: Option<PathBuf>,
        #[arg(long)]
        families1: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        #[arg(long, default_value_t = 4)]
        band: usize,
        #[arg(long, default_value_t = 1e-3)]
        floor: f64,
    },
    /// Stopping-time simulation of the sequential test.
    Discern {
        /// 0 = truth is the null member, 1 = the alternative member.
        #[arg(long, default_value_t = 1)]
        truth_side: u8,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        #[arg(long, default_value_t = 400)]
        nmax: usize,
        #[arg(long, default_value_t = 0.25)]
        c0: f64,
        #[arg(long, default_value_t = 0.25)]
        exponent: f64,
        #[arg(long, default_value = "0.005,0.01,0.02")]
        t_grid: String,
        #[arg(long, default_value = "0,25,50,100,200")]
        c_grid: String,
    },
    /// The total-variation vs setwise-discrepancy dichotomy table.
    Example21 {
        #[arg(long, default_value_t = 4096)]
        cells: usize,
        #[arg(long, default_value_t = 64)]
        max_i: usize,
    },
    /// Runs the full acceptance suite; exit 0 iff every criterion passes.
    Acceptance {},
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse {what} entry {p:?}"))
            })
        })
        .collect()
}

fn load_family(path: &Option<PathBuf>, default: impl FnOnce() -> Result<DensityFamily>) -> Result<DensityFamily> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            DensityFamily::from_json(&text)
        }
        None => default(),
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_summary(
    out: &Path,
    name: &str,
    seed: u64,
    config: Value,
    payload: Value,
    started: Instant,
) -> Result<()> {
    let summary = json!({
        "subcommand": name,
        "config": config,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "elapsed_ms": started.elapsed().as_secs_f64() * 1000.0,
        "result": payload,
    });
    fs::write(out.join(format!("{name}_summary.json")), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

/// Runs one configured experiment. Returns the process exit code:
/// 0 success, 2 usage error, 3 assertion (acceptance) failure.
pub fn run(cli: Cli) -> Result<i32> {
    if cli.replicas == 0 {
        eprintln!("error: --replicas must be >= 1");
        return Ok(2);
    }
    if cli.threads > 0 {
        // ignore failure when a global pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    fs::create_dir_all(&cli.out)?;
    let started = Instant::now();
    let out = cli.out.clone();
    let seed = cli.seed;
    let replicas = cli.replicas;

    match &cli.command {
        Command::Kraft { families0, families1, m, cells, tol, threshold } => {
            let f0 = load_family(families0, || {
                DensityFamily::new(vec![GridMeasure::uniform(*cells)])
            })?;
            let f1 = load_family(families1, || sine_family(*m, *cells))?;
            let config = CertifyConfig { indist_threshold: *threshold, tol: *tol, ..Default::default() };
            let verdict = certify(&f0, &f1, &config)?;
            let mut rows = Vec::new();
            for (i, w) in verdict.weights0.iter().enumerate() {
                rows.push(format!("0,{i},{w}"));
            }
            for (i, w) in verdict.weights1.iter().enumerate() {
                rows.push(format!("1,{i},{w}"));
            }
            write_csv(&out.join("kraft_weights.csv"), "family,index,weight", &rows)?;
            fs::write(out.join("kraft_verdict.json"), serde_json::to_string_pretty(&verdict)?)?;
            let config_echo = json!({
                "m": m, "cells": cells, "tol": tol, "threshold": threshold,
                "families0": families0, "families1": families1,
            });
            write_summary(&out, "kraft", seed, config_echo, json!({
                "kind": verdict.kind,
                "value": verdict.value,
                "kraft_lower_bound": (1.0 - verdict.value).max(0.0),
            }), started)?;
        }
        Command::Partition { families0, families1, n, cells, delta, max_k, max_resolution } => {
            let f0 = load_family(families0, || {
                DensityFamily::new(vec![GridMeasure::uniform(*cells)])
            })?;
            let f1 = load_family(families1, || {
                DensityFamily::new(vec![sine_density(1, *cells)?])
            })?;
            let n_values: Vec<usize> = parse_list(n, "--n")?;
            let (sets, gap) = find_separating_sets(&f0, &f1, *max_k, *max_resolution)?;
            let mut spec = build_test_from_families(&f0, &f1, &sets)?;
            if let Some(d) = delta {
                spec = PartitionTestSpec::new_general(
                    spec.sets().to_vec(),
                    spec.centers().to_vec(),
                    *d,
                )?;
            }
            let report = estimate_errors(&spec, &f0, &f1, &n_values, replicas, seed)?;
            let rows: Vec<String> = (0..n_values.len())
                .map(|i| {
                    format!(
                        "{},{},{},{},{}",
                        report.n_values[i],
                        report.alpha_hat[i],
                        report.beta_hat[i],
                        report.stderr_a[i],
                        report.stderr_b[i]
                    )
                })
                .collect();
            write_csv(&out.join("partition.csv"), "n,alpha_hat,beta_hat,stderr_a,stderr_b", &rows)?;
            let config_echo = json!({
                "n": n, "cells": cells, "delta": delta, "max_k": max_k,
                "max_resolution": max_resolution, "replicas": replicas,
                "families0": families0, "families1": families1,
            });
            write_summary(&out, "partition", seed, config_echo, json!({
                "gap": gap,
                "delta": spec.delta(),
                "report": report,
            }), started)?;
        }
        Command::Gaussian { model, scales, r_diag, epsilon_grid, a, dim } => {
            let scales_vec: Vec<f64> = match model.as_str() {
                "white" => vec![1.0; *dim],
                "hetero" => match scales {
                    Some(s) => parse_list(s, "--scales")?,
                    None => (1..=*dim).map(|j| 1.0 + 0.5 * (j % 2) as f64).collect(),
                },
                "illposed" => {
                    let a_diag: Vec<f64> = match scales {
                        Some(s) => parse_list(s, "--scales")?,
                        None => (1..=*dim).map(|j| 1.0 / j as f64).collect(),
                    };
                    let r: Vec<f64> = match r_diag {
                        Some(s) => parse_list(s, "--r-diag")?,
                        None => vec![1.0; a_diag.len()],
                    };
                    crate::gaussian::whiten(&a_diag, &r)?
                }
                other => {
                    eprintln!("error: unknown --model {other:?} (expected white|hetero|illposed)");
                    return Ok(2);
                }
            };
            let dims = scales_vec.len();
            let eps_grid: Vec<f64> = parse_list(epsilon_grid, "--epsilon-grid")?;
            let f0 = vec![SignalVector::zero(dims)?];
            let f1 = vec![SignalVector::basis(dims, 1, *a)?];
            let gamma: Vec<usize> = (1..=dims).collect();
            let spec = build_projection_test(&f0, &f1, &gamma, &scales_vec)?;
            let mut rows = Vec::new();
            let mut results = Vec::new();
            for &eps in &eps_grid {
                let model = SequenceModel::new(eps, scales_vec.clone())?;
                let est = estimate_projection_errors(
                    &f0,
                    &f1,
                    &spec,
                    replicas,
                    crate::partition::mix_seed(seed, &[eps.to_bits()]),
                    |s, rng| {
                        s.coeffs()
                            .iter()
                            .zip(&model.scales)
                            .map(|(&sj, &aj)| {
                                use rand_distr::Distribution;
                                let xi: f64 = rand_distr::StandardNormal.sample(rng);
                                aj * sj + model.epsilon * xi
                            })
                            .collect()
                    },
                )?;
                rows.push(format!("{eps},{},{}", est.alpha, est.beta));
                results.push(json!({"epsilon": eps, "alpha": est.alpha, "beta": est.beta,
                    "stderr_a": est.stderr_a, "stderr_b": est.stderr_b}));
            }
            write_csv(&out.join("gaussian.csv"), "epsilon,alpha_hat,beta_hat", &rows)?;
            let config_echo = json!({
                "model": model, "scales": scales_vec, "epsilon_grid": epsilon_grid,
                "a": a, "dim": dim, "replicas": replicas,
            });
            write_summary(&out, "gaussian", seed, config_echo, json!({
                "rho": spec.rho(), "curve": results,
            }), started)?;
        }
        Command::Poisson { action, cells, n, m_list, mu_grid, delta_grid, n_grid } => {
            let config_echo = json!({
                "action": action, "cells": cells, "n": n, "m_list": m_list,
                "mu_grid": mu_grid, "delta_grid": delta_grid, "n_grid": n_grid,
                "replicas": replicas,
            });
            match action.as_str() {
                "identity" => {
                    let n1: usize = parse_list::<usize>(n, "--n")?[0];
                    let s1 = sine_density(1, *cells)?;
                    let s2 = sine_density(2, *cells)?;
                    let mut rows = Vec::new();
                    for (label, a, b) in
                        [("same", &s1, &s1), ("orthogonal", &s1, &s2)]
                    {
                        let rhs = moment_identity_rhs(a, b, n1)?;
                        let (est, se) =
                            mc_moment_identity(a, b, n1, replicas.max(1_000), seed)?;
                        rows.push(format!("{label},{rhs},{est},{se}"));
                    }
                    write_csv(&out.join("poisson_identity.csv"), "pair,rhs,estimate,stderr", &rows)?;
                    write_summary(&out, "poisson", seed, config_echo, json!({"rows": rows}), started)?;
                }
                "tailbound" => {
                    let mus: Vec<f64> = parse_list(mu_grid, "--mu-grid")?;
                    let deltas: Vec<f64> = parse_list(delta_grid, "--delta-grid")?;
                    let ns: Vec<usize> = parse_list(n_grid, "--n-grid")?;
                    let mut rows = Vec::new();
                    let mut sound = true;
                    for &mu in &mus {
                        for &d in &deltas {
                            for &nn in &ns {
                                let bound = poisson_tail_bound(mu, d, nn)?;
                                let freq = mc_tail_frequency(
                                    mu,
                                    d,
                                    nn,
                                    replicas,
                                    crate::partition::mix_seed(
                                        seed,
                                        &[mu.to_bits(), d.to_bits(), nn as u64],
                                    ),
                                );
                                sound &= freq <= bound + 1e-12;
                                rows.push(format!("{mu},{d},{nn},{bound},{freq}"));
                            }
                        }
                    }
                    write_csv(&out.join("poisson_tailbound.csv"), "mu,delta,n,bound,empirical", &rows)?;
                    write_summary(&out, "poisson", seed, config_echo, json!({"sound": sound}), started)?;
                    if !sound {
                        eprintln!("assertion failed: empirical tail exceeded the bound");
                        return Ok(3);
                    }
                }
                "partition" => {
                    let n_values: Vec<usize> = parse_list(n, "--n")?;
                    let f0 = DensityFamily::new(vec![GridMeasure::uniform(*cells)])?;
                    let f1 = DensityFamily::new(vec![sine_density(1, *cells)?])?;
                    let (sets, _) = find_separating_sets(&f0, &f1, 4, 4)?;
                    let spec = build_test_from_families(&f0, &f1, &sets)?;
                    let report =
                        poisson_partition_errors(&spec, &f0, &f1, &n_values, replicas, seed)?;
                    let rows: Vec<String> = (0..n_values.len())
                        .map(|i| {
                            format!(
                                "{},{},{},{},{}",
                                report.n_values[i],
                                report.alpha_hat[i],
                                report.beta_hat[i],
                                report.stderr_a[i],
                                report.stderr_b[i]
                            )
                        })
                        .collect();
                    write_csv(
                        &out.join("poisson_partition.csv"),
                        "n,alpha_hat,beta_hat,stderr_a,stderr_b",
                        &rows,
                    )?;
                    write_summary(&out, "poisson", seed, config_echo, json!({"report": report}), started)?;
                }
                "collapse" => {
                    let n1: usize = parse_list::<usize>(n, "--n")?[0];
                    let ms: Vec<usize> = parse_list(m_list, "--m-list")?;
                    let closed = bayes_collapse_curve(n1, &ms, SINE_DESIGN_V)?;
                    // frequency m needs at least 4m cells to be resolvable
                    let mc_cells = ms
                        .iter()
                        .fold(*cells, |acc, &m| acc.max(4 * m))
                        .next_power_of_two();
                    let mut rows = Vec::new();
                    for (&m, &c) in ms.iter().zip(&closed) {
                        let ds = bayes_collapse_double_sum(n1, m, SINE_DESIGN_V)?;
                        let (mc, se) = mc_bayes_collapse(
                            n1,
                            m,
                            mc_cells,
                            replicas.max(1_000),
                            crate::partition::mix_seed(seed, &[m as u64]),
                        )?;
                        rows.push(format!("{m},{c},{ds},{mc},{se}"));
                    }
                    write_csv(
                        &out.join("poisson_collapse.csv"),
                        "m,closed,double_sum,mc,stderr",
                        &rows,
                    )?;
                    write_summary(&out, "poisson", seed, config_echo, json!({"rows": rows}), started)?;
                }
                other => {
                    eprintln!(
                        "error: unknown --action {other:?} (expected identity|tailbound|partition|collapse)"
                    );
                    return Ok(2);
                }
            }
        }
        Command::Deconv { kernel, families0, families1, cells, band, floor } => {
            let k = match kernel.as_str() {
                "point" => Kernel::point(*cells)?,
                "uniform" => Kernel::uniform(*cells)?,
                other => match other.strip_prefix("gauss:") {
                    Some(sigma) => {
                        let sigma: f64 = sigma.parse().map_err(|_| {
                            Error::InvalidParameter(format!("bad sigma in --kernel {other:?}"))
                        })?;
                        Kernel::gauss(*cells, sigma)?
                    }
                    None => {
                        eprintln!(
                            "error: unknown --kernel {other:?} (expected point|uniform|gauss:SIGMA)"
                        );
                        return Ok(2);
                    }
                },
            };
            let f0 = load_family(families0, || {
                DensityFamily::new(vec![GridMeasure::uniform(*cells)])
            })?;
            let f1 = load_family(families1, || {
                DensityFamily::new(vec![sine_density(1, *cells)?])
            })?;
            let config = DeconvConfig { band: *band, floor: *floor, certify: Default::default() };
            let decision = deconv_decision(&f0, &f1, &k, &config)?;
            fs::write(
                out.join("deconv_decision.json"),
                serde_json::to_string_pretty(&decision)?,
            )?;
            let config_echo = json!({
                "kernel": kernel, "cells": cells, "band": band, "floor": floor,
                "families0": families0, "families1": families1,
            });
            write_summary(&out, "deconv", seed, config_echo, json!({
                "agree": decision.agree,
                "invertible": decision.invertible,
                "min_band_magnitude": decision.min_band_magnitude,
            }), started)?;
        }
        Command::Discern { truth_side, cells, nmax, c0, exponent, t_grid, c_grid } => {
            let f0 = DensityFamily::new(vec![GridMeasure::uniform(*cells)])?;
            let f1 = DensityFamily::new(vec![sine_density(1, *cells)?])?;
            let (sets, _) = find_separating_sets(&f0, &f1, 4, 4)?;
            let truth = match truth_side {
                0 => f0.members()[0].clone(),
                1 => f1.members()[0].clone(),
                other => {
                    eprintln!("error: --truth-side must be 0 or 1, got {other}");
                    return Ok(2);
                }
            };
            let config = DiscernConfig { c0: *c0, exponent: *exponent, n_max: *nmax };
            let trajs =
                run_trajectories(&truth, &f0, &f1, &sets, &config, replicas.max(1_000), seed)?;
            let cs: Vec<usize> = parse_list(c_grid, "--c-grid")?;
            let ts: Vec<f64> = parse_list(t_grid, "--t-grid")?;
            let stats = stopping_time_stats(&trajs, &cs, &ts)?;
            let tail_rows: Vec<String> = stats
                .c_grid
                .iter()
                .zip(&stats.tail)
                .map(|(&c, &p)| format!("{c},{p}"))
                .collect();
            write_csv(&out.join("discern_tail.csv"), "c,tail", &tail_rows)?;
            let moment_rows: Vec<String> = stats
                .moments
                .iter()
                .map(|m| format!("{},{},{},{}", m.t, m.estimate, m.stderr, m.heavy_tail))
                .collect();
            write_csv(&out.join("discern_moments.csv"), "t,estimate,stderr,heavy_tail", &moment_rows)?;
            let config_echo = json!({
                "truth_side": truth_side, "cells": cells, "nmax": nmax, "c0": c0,
                "exponent": exponent, "t_grid": t_grid, "c_grid": c_grid,
                "replicas": replicas,
            });
            write_summary(&out, "discern", seed, config_echo, json!({
                "tail_rate": stats.tail_rate,
                "censored": stats.censored,
                "trajectories": stats.trajectories,
            }), started)?;
        }
        Command::Example21 { cells, max_i } => {
            let u = GridMeasure::uniform(*cells);
            let mut rows = Vec::new();
            let mut freqs: Vec<usize> = (1..=*max_i).collect();
            let mut j = 2 * *max_i;
            while j <= *cells / 4 {
                freqs.push(j);
                j += *max_i;
            }
            for &i in &freqs {
                let s = sine_density(i, *cells)?;
                let tv = crate::measures::total_variation(&u, &s)?;
                let tau = crate::measures::tau_discrepancy(&u, &s, 3)?;
                rows.push(format!("{i},{tv},{tau}"));
            }
            write_csv(&out.join("example21.csv"), "i,tv,tau_r3", &rows)?;
            let config_echo = json!({"cells": cells, "max_i": max_i});
            write_summary(&out, "example21", seed, config_echo, json!({
                "rows": rows.len(),
            }), started)?;
        }
        Command::Acceptance {} => {
            let exe = std::env::current_exe().ok();
            let results = crate::acceptance::run_all(seed, exe.as_deref());
            let mut all_passed = true;
            for r in &results {
                println!("{}", r.line());
                all_passed &= r.passed;
            }
            let config_echo = json!({"replicas": replicas});
            write_summary(&out, "acceptance", seed, config_echo, json!({
                "passed": results.iter().filter(|r| r.passed).count(),
                "total": results.len(),
            }), started)?;
            if !all_passed {
                return Ok(3);
            }
        }
    }
    Ok(0)
}
