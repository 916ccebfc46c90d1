use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use modcont::config::{RunConfig, SweepMode, VerifyConfig};
use modcont::monitor::{run_experiment, ExperimentConfig, SimulationTrace};
use modcont::spectral::write_snapshot;
use modcont::verifier::{
    certify_constant, check_inequality, hypothesis_march, hypothesis_profile, HypProfile,
};
use rayon::prelude::*;
use serde_json::json;

const EXIT_FAIL: u8 = 1;
const EXIT_PARAM: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "modcont",
    version,
    about = "Modulus-of-continuity certification and monitored simulations"
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check or certify a differential inequality.
    Verify(VerifyArgs),
    /// Run a monitored simulation.
    Simulate(SimulateArgs),
    /// Run a grid of verify or simulate cells in parallel.
    Sweep(SweepArgs),
    /// March the drift-hypothesis evolution of a modulus profile.
    Hypothesis(HypothesisArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Inequality: 2, 3, 4 (critical) or 4s (supercritical); or a kind name.
    #[arg(long)]
    thm: Option<String>,
    /// Check the drift hypothesis inequality instead.
    #[arg(long)]
    hyp1: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "cd")]
    c_d: Option<f64>,
    #[arg(long = "T")]
    t_max: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    /// Search the smallest certifying constant.
    #[arg(long)]
    certify: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario name, e.g. burgers, burgers-hilbert, fractal-burgers, drift-diffusion, linear-nse.
    #[arg(long = "eq")]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    ic: Option<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long = "T")]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Write the last good state as a binary snapshot.
    #[arg(long)]
    snapshot: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = ["verify", "simulate"])]
    mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long = "T")]
    t_max: Option<f64>,
}

#[derive(Args)]
struct HypothesisArgs {
    #[arg(long = "cd")]
    c_d: Option<f64>,
    #[arg(long = "T")]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Amplitude and rate of the tanh profile.
    #[arg(long)]
    amp: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<modcont::Error>() {
        Some(modcont::Error::Blowup { .. }) => EXIT_BLOWUP,
        Some(_) | None => EXIT_PARAM,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn kind_of(args: &VerifyArgs, base: &str) -> String {
    if args.hyp1 {
        return "HYP1".into();
    }
    match args.thm.as_deref() {
        None => base.to_string(),
        Some("2") => "THM2".into(),
        Some("3") => "THM3".into(),
        Some("4") | Some("4c") => "THM4_CRIT".into(),
        Some("4s") => "THM4_SUPER".into(),
        Some(other) => other.to_ascii_uppercase(),
    }
}

fn run_verify(v: &VerifyConfig) -> Result<(u8, serde_json::Value)> {
    if v.certify {
        let s = certify_constant(&v.kind, &v.params, &v.grid)?;
        let ok = s.constant.is_some() && s.report.certified;
        Ok((if ok { 0 } else { EXIT_FAIL }, serde_json::to_value(&s)?))
    } else {
        let r = check_inequality(&v.kind, &v.params, &v.grid)?;
        Ok((
            if r.certified { 0 } else { EXIT_FAIL },
            serde_json::to_value(&r)?,
        ))
    }
}

fn trace_code(t: &SimulationTrace) -> u8 {
    if t.blowup.is_some() {
        EXIT_BLOWUP
    } else if t.passed() {
        0
    } else {
        EXIT_FAIL
    }
}

fn write_trace(dir: &Path, t: &SimulationTrace, snapshot: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    t.write_csv(BufWriter::new(fs::File::create(dir.join("trace.csv"))?))?;
    t.write_long_csv(BufWriter::new(fs::File::create(
        dir.join("trace_long.csv"),
    )?))?;
    write_json(&dir.join("manifest.json"), &t.manifest())?;
    if snapshot {
        if let Some((time, field)) = &t.final_state {
            let mut w = BufWriter::new(fs::File::create(dir.join("final.snap"))?);
            write_snapshot(&mut w, field, *time)?;
        }
    }
    Ok(())
}

fn summarize(t: &SimulationTrace) -> String {
    if let Some(b) = &t.blowup {
        format!("blowup at t={:.4}: {}", b.t, b.reason)
    } else if let Some(e) = &t.bound_exceeded {
        format!(
            "{} bound exceeded at t={:.4}: {:.6e} > {:.6e}",
            e.kind, e.t, e.lipschitz, e.bound
        )
    } else if let Some(b) = &t.breakthrough {
        format!(
            "breakthrough at t={:.4}: deficit {:.3e} over slack {:.3e}",
            b.t, b.scan.deficit, b.slack
        )
    } else {
        format!(
            "passed: {} rows to t={:.4}",
            t.times.len(),
            t.times.last().copied().unwrap_or(0.0)
        )
    }
}

fn simulate_cell(cfg: &ExperimentConfig, dir: &Path, snapshot: bool) -> (u8, serde_json::Value) {
    match run_experiment(cfg)
        .map_err(anyhow::Error::from)
        .and_then(|t| {
            write_trace(dir, &t, snapshot)?;
            Ok(t)
        }) {
        Ok(t) => {
            let code = trace_code(&t);
            (
                code,
                json!({ "scenario": cfg.scenario, "n": t.n, "exit": code, "summary": summarize(&t), "manifest": t.manifest() }),
            )
        }
        Err(e) => {
            let code = exit_code_for(&e);
            (
                code,
                json!({ "scenario": cfg.scenario, "n": cfg.n, "exit": code, "error": format!("{e:#}") }),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads.or(cfg.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    cfg.simulate.seed = cfg.seed;
    cfg.simulate.scan.seed = cfg.seed;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    match cli.command {
        Command::Verify(a) => {
            let v = &mut cfg.verify;
            v.kind = kind_of(&a, &v.kind);
            let p = &mut v.params;
            if let Some(x) = a.alpha {
                p.alpha = x;
            }
            if let Some(x) = a.beta {
                p.beta = x;
            }
            if a.delta.is_some() {
                p.delta = a.delta;
            }
            if let Some(x) = a.c_d {
                p.c_d = x;
            }
            if let Some(x) = a.lambda0 {
                p.lambda0 = x;
            }
            if let Some(x) = a.t_max {
                v.grid.t_max = x;
            }
            v.certify |= a.certify;
            let (code, report) = run_verify(v)?;
            let path = cfg.out.join(format!("verify_{}.json", v.kind));
            write_json(&path, &report)?;
            let status = if code == 0 {
                "certified"
            } else {
                "not certified"
            };
            println!("{}: {status} (report {})", v.kind, path.display());
            Ok(code)
        }
        Command::Simulate(a) => {
            let s = &mut cfg.simulate;
            if let Some(x) = a.scenario {
                s.scenario = x;
            }
            s.n = a.n.or(s.n);
            s.nu = a.nu.or(s.nu);
            s.kappa = a.kappa.or(s.kappa);
            s.alpha = a.alpha.or(s.alpha);
            s.beta = a.beta.or(s.beta);
            s.amplitude = a.amplitude.or(s.amplitude);
            s.dt = a.dt.or(s.dt);
            if let Some(x) = a.ic {
                s.ic = x;
            }
            if let Some(x) = a.t_max {
                s.t_max = x;
            }
            let trace = run_experiment(s)?;
            write_trace(&cfg.out, &trace, a.snapshot)?;
            println!("{}: {}", s.scenario, summarize(&trace));
            Ok(trace_code(&trace))
        }
        Command::Sweep(a) => {
            let sw = &mut cfg.sweep;
            if let Some(m) = a.mode.as_deref() {
                sw.mode = if m == "verify" {
                    SweepMode::Verify
                } else {
                    SweepMode::Simulate
                };
            }
            if let Some(x) = a.scenarios {
                sw.scenarios = x;
            }
            if let Some(x) = a.resolutions {
                sw.resolutions = x;
            }
            if let Some(x) = a.alphas {
                sw.alphas = x;
            }
            if let Some(x) = a.betas {
                sw.betas = x;
            }
            if let Some(x) = a.t_max {
                cfg.simulate.t_max = x;
                cfg.verify.grid.t_max = x;
            }
            let (verify_cells, sim_cells) = cfg.sweep_cells();
            let out = cfg.out.clone();
            let mut results: Vec<(u8, serde_json::Value)> = verify_cells
                .par_iter()
                .map(|v| match run_verify(v) {
                    Ok((code, r)) => (code, json!({ "kind": v.kind, "alpha": v.params.alpha, "beta": v.params.beta, "exit": code, "certified": code == 0, "report": r })),
                    Err(e) => {
                        let e = anyhow::Error::from(e);
                        let code = exit_code_for(&e);
                        (code, json!({ "kind": v.kind, "alpha": v.params.alpha, "beta": v.params.beta, "exit": code, "certified": false, "error": format!("{e:#}") }))
                    }
                })
                .collect();
            let sims: Vec<(u8, serde_json::Value)> = sim_cells
                .par_iter()
                .map(|c| {
                    let name = match c.n {
                        Some(n) => format!("{}_n{n}", c.scenario),
                        None => c.scenario.clone(),
                    };
                    simulate_cell(c, &out.join(name), false)
                })
                .collect();
            results.extend(sims);
            let worst = results.iter().map(|r| r.0).max().unwrap_or(0);
            for (_, r) in &results {
                println!(
                    "{}",
                    r.get("summary")
                        .or_else(|| r.get("error"))
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| format!("{} exit {}", r["kind"], r["exit"]))
                );
            }
            let cells: Vec<serde_json::Value> = results.into_iter().map(|r| r.1).collect();
            write_json(
                &cfg.out.join("sweep.json"),
                &json!({ "worst_exit": worst, "cells": cells }),
            )?;
            Ok(worst)
        }
        Command::Hypothesis(a) => {
            let h = &mut cfg.hypothesis;
            if let Some(x) = a.c_d {
                h.march.c_d = x;
            }
            if let Some(x) = a.t_max {
                h.march.t_max = x;
            }
            if let Some(x) = a.dt {
                h.march.dt = x;
            }
            if a.amp.is_some() || a.rate.is_some() {
                let (amp0, rate0) = match h.profile {
                    HypProfile::Tanh { amp, rate } => (amp, rate),
                    _ => (2.0, 0.25),
                };
                h.profile = HypProfile::Tanh {
                    amp: a.amp.unwrap_or(amp0),
                    rate: a.rate.unwrap_or(rate0),
                };
            }
            let omega0 = hypothesis_profile(&h.profile, h.lambda0)?;
            let trace = hypothesis_march(&omega0, &h.march)?;
            let mut w = csv::Writer::from_path(cfg.out.join("hypothesis.csv"))?;
            w.write_record(["t", "slope0", "max_change", "dt"])?;
            for s in &trace.samples {
                w.write_record([s.t, s.slope0, s.max_change, s.dt].map(|v| format!("{v:e}")))?;
            }
            w.flush()?;
            write_json(
                &cfg.out.join("hypothesis.json"),
                &serde_json::to_value(&trace)?,
            )?;
            match &trace.violation {
                Some(v) => {
                    println!(
                        "hypothesis march: {} violated at t={:.6}: {}",
                        v.property, v.t, v.detail
                    );
                    Ok(EXIT_FAIL)
                }
                None => {
                    println!(
                        "hypothesis march: completed {} steps with all modulus properties intact",
                        trace.steps
                    );
                    Ok(0)
                }
            }
        }
    }
}
