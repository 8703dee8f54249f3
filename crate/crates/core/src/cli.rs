//! Command-line front end: reads a config, runs one command, writes its reports.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;

use crate::config::{parse_config, Command, RunConfig};
use crate::data::{sobolev_norms, NormRecord};
use crate::error::{Result, WaveError};
use crate::estimates::{
    convolution_bound_check, estimate_sweep, grid_of_instances, uniformity_across_t,
    write_sweep_csv,
};
use crate::experiments::{
    constants_ledger, continuation_check, continuity_probe_directions, lifespan_sweep,
    random_directions, write_lifespan_csv, ContinuationOptions,
};
use crate::io::{fmt_f64, write_json};
use crate::multiplier::{
    band_samples, check_pointwise_inequalities, divergence_residual, log_samples, refinement_study,
    DivergenceMethod, MultiplierField, MultiplierKind, MultiplierSummary, Scenario,
};
use crate::norms::NormReport;
use crate::picard::{self, contraction_ratios, PicardOptions};
use crate::solver::{
    solve_linear, solve_quasilinear, CoefficientField, EnergyProbe, Forcing, SolveStatus,
    TraceRecorder,
};

#[derive(Debug, Parser)]
#[command(
    name = "wavelab",
    version,
    about = "Radial quasilinear wave laboratory"
)]
pub struct Cli {
    /// One of solve, iterate, verify-identity, check-inequalities, verify-estimate,
    /// norms, lifespan, continuity, continue.
    pub subcommand: String,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Single worker thread.
    #[arg(long)]
    pub deterministic: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub fn exit_code(e: &WaveError) -> i32 {
    match e {
        WaveError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUN,
    }
}

/// Loads the config named on the command line; the subcommand overrides its `command` key.
pub fn load(cli: &Cli) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| WaveError::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let command = Command::parse(&cli.subcommand)?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| WaveError::Config(e.message().into()))?;
    doc.insert("command".into(), toml::Value::String(command.name().into()));
    parse_config(&toml::to_string(&doc).map_err(|e| WaveError::Config(e.to_string()))?)
}

/// Parses, dispatches and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("wavelab: {e}");
            return exit_code(&e);
        }
    };
    let threads = if cli.deterministic {
        1
    } else {
        cli.threads.unwrap_or(0)
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("wavelab: {e}");
            return EXIT_RUN;
        }
    };
    match pool.install(|| dispatch(&cfg, &cli.out)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("wavelab: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Serialize)]
struct SolveSummary {
    status: SolveStatus,
    steps: usize,
    nr: usize,
    r_max: f64,
    dt: f64,
    initial_energy: f64,
    sup_h: f64,
    sup_weighted_dh: f64,
    data: NormRecord,
    norms: Option<NormReport>,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(
        path,
    )?)))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Runs the configured command and writes its reports into `out`.
pub fn dispatch(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut put = |name: &str| {
        let p = out.join(name);
        files.push(p.clone());
        p
    };
    let nl = cfg.nonlinearity();
    let spec = cfg.data_spec();
    match cfg.command {
        Command::Solve | Command::Norms => {
            let grid = cfg.grid_for(cfg.t_end)?;
            let pair = spec.sample(&grid)?;
            let mut rec = TraceRecorder::new(&grid, cfg.trace_stride.max(1));
            let mut probe = EnergyProbe::default();
            let out = if nl.is_linear() {
                let h = if cfg.h_amplitude == 0.0 {
                    CoefficientField::zero()
                } else {
                    CoefficientField::gaussian(cfg.h_amplitude)
                };
                solve_linear(
                    &pair,
                    &h,
                    &Forcing::zero(),
                    cfg.t_end,
                    &grid,
                    &mut [&mut rec, &mut probe],
                )?
            } else {
                solve_quasilinear(&pair, &nl, cfg.t_end, &grid, &mut [&mut rec, &mut probe])?
            };
            let summary = SolveSummary {
                status: out.status,
                steps: out.steps,
                nr: grid.nr(),
                r_max: grid.r_max(),
                dt: out.grid.dt(),
                initial_energy: out.initial_energy,
                sup_h: out.sup_h,
                sup_weighted_dh: out.sup_weighted_dh,
                data: sobolev_norms(&pair, &grid)?,
                norms: out.norms.finalize().ok(),
            };
            if cfg.command == Command::Solve {
                write_json(&put("solve.json"), &summary)?;
                if cfg.trace_stride > 0 {
                    rec.into_trace()
                        .write_csv(BufWriter::new(File::create(put("trace.csv"))?), 1)?;
                }
            } else {
                write_json(&put("norms.json"), &summary)?;
                let mut w = csv_writer(&put("energy.csv"))?;
                w.write_record(["t", "E1", "quadratic"])?;
                for k in 0..probe.times.len() {
                    w.write_record([
                        fmt_f64(probe.times[k]),
                        fmt_f64(probe.e1[k]),
                        fmt_f64(probe.quadratic[k]),
                    ])?;
                }
                w.flush()?;
            }
        }
        Command::Iterate => {
            let grid = cfg.grid_for(cfg.t_end)?;
            let pair = spec.sample(&grid)?;
            let opts = PicardOptions {
                k_max: cfg.k_max,
                tol: cfg.tol,
                ..Default::default()
            };
            let rep = picard::run(&pair, &nl, cfg.t_end, &grid, &opts)?;
            let ratios = contraction_ratios(&rep).unwrap_or_default();
            write_json(&put("iteration.json"), &rep)?;
            let mut w = csv_writer(&put("iteration.csv"))?;
            w.write_record([
                "k", "e1_diff", "y1_diff", "z1_diff", "ratio", "E2", "Y2", "Z2", "sup_h", "C2",
                "C3", "C4",
            ])?;
            for (i, r) in rep.records.iter().enumerate() {
                let ratio = if i == 0 {
                    None
                } else {
                    ratios.get(i - 1).copied().flatten()
                };
                w.write_record([
                    r.k.to_string(),
                    fmt_f64(r.e1_diff),
                    fmt_f64(r.y1_diff),
                    fmt_f64(r.z1_diff),
                    opt(ratio),
                    fmt_f64(r.e2),
                    fmt_f64(r.y2),
                    fmt_f64(r.z2),
                    fmt_f64(r.sup_h),
                    opt(r.c2),
                    opt(r.c3),
                    opt(r.c4),
                ])?;
            }
            w.flush()?;
            write_json(&put("constants.json"), &constants_ledger(&rep, "iterate"))?;
        }
        Command::VerifyIdentity => {
            let mf = MultiplierField::from_name(&cfg.multiplier, cfg.multiplier_param)?;
            let grid = cfg.grid_for(cfg.t_end)?;
            let constant = divergence_residual(
                &Scenario::Constant { value: 1.0 },
                &mf,
                &grid,
                cfg.t_end,
                DivergenceMethod::Exact,
                None,
            )?;
            let nrs = if cfg.nr_list.is_empty() {
                vec![128, 256, 512]
            } else {
                cfg.nr_list.clone()
            };
            let r_max = cfg.r_max.unwrap_or(6.0);
            let refinement = refinement_study(
                &Scenario::manufactured(0.1),
                &mf,
                r_max,
                &nrs,
                cfg.cfl,
                cfg.t_end,
                DivergenceMethod::Difference,
            )?;
            #[derive(Serialize)]
            struct Identity<'a> {
                constant: &'a crate::multiplier::ResidualReport,
                refinement: &'a crate::multiplier::RefinementReport,
                summary: MultiplierSummary,
            }
            let summary = MultiplierSummary::from_parts(None, Some(&refinement));
            write_json(
                &put("identity.json"),
                &Identity {
                    constant: &constant,
                    refinement: &refinement,
                    summary,
                },
            )?;
        }
        Command::CheckInequalities => {
            let mf = MultiplierField::from_name(&cfg.multiplier, cfg.multiplier_param)?;
            let reports = match mf.kind {
                MultiplierKind::Kss { .. } => {
                    vec![check_pointwise_inequalities(
                        &mf,
                        &log_samples(1e-4, 1e3, cfg.samples),
                    )]
                }
                MultiplierKind::Ms { rho } => {
                    let rhos: Vec<f64> = if cfg.k_list.is_empty() {
                        vec![rho]
                    } else {
                        cfg.k_list.iter().map(|k| 2f64.powi(*k as i32)).collect()
                    };
                    rhos.iter()
                        .map(|&r| {
                            let m = MultiplierField::ms(r)?;
                            Ok(check_pointwise_inequalities(
                                &m,
                                &band_samples(r, cfg.samples),
                            ))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            write_json(&put("inequalities.json"), &reports)?;
        }
        Command::VerifyEstimate => {
            let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
            let instances = grid_of_instances(
                &or(&cfg.eps_list, cfg.eps.unwrap_or(0.05)),
                &or(&cfg.t_list, cfg.t_end),
                &or(&cfg.h_list, cfg.h_amplitude),
                &or(&cfg.g_list, cfg.g_amplitude),
                cfg.mu,
            );
            let rows = estimate_sweep(&instances, &cfg.policy())?;
            write_sweep_csv(&rows, BufWriter::new(File::create(put("estimate.csv"))?))?;
            #[derive(Serialize)]
            struct Estimate<'a> {
                uniformity: Option<f64>,
                rows: &'a [crate::estimates::EstimateRow],
            }
            write_json(
                &put("estimate.json"),
                &Estimate {
                    uniformity: uniformity_across_t(&rows),
                    rows: &rows,
                },
            )?;
            if !cfg.k_list.is_empty() && !cfg.alpha_list.is_empty() {
                let xs = log_samples(1e-3, 1e3, 121);
                let conv =
                    convolution_bound_check(&cfg.k_list, &cfg.alpha_list, &xs, &cfg.gamma_list)?;
                write_json(&put("convolution.json"), &conv)?;
            }
        }
        Command::Lifespan => {
            let eps = if cfg.eps_list.is_empty() {
                vec![0.4, 0.3, 0.2, 0.15, 0.1]
            } else {
                cfg.eps_list.clone()
            };
            let policy = crate::grid::GridPolicy {
                coeff_bound: crate::grid::COEFF_BOUND_MAX,
                ..cfg.policy()
            };
            let rep = lifespan_sweep(&spec, &eps, &nl, cfg.t_budget, &policy)?;
            write_lifespan_csv(&rep, BufWriter::new(File::create(put("lifespan.csv"))?))?;
            write_json(&put("lifespan_fit.json"), &rep)?;
        }
        Command::Continuity => {
            let grid = cfg.grid_for(cfg.t_end)?;
            let base = spec.sample(&grid)?;
            let dirs = random_directions(cfg.seed, cfg.directions, &grid)?;
            let deltas = if cfg.delta_list.is_empty() {
                vec![1e-2, 5e-3, 2.5e-3]
            } else {
                cfg.delta_list.clone()
            };
            let rep = continuity_probe_directions(
                &base,
                &dirs,
                &deltas,
                &nl,
                cfg.t_end,
                &grid,
                cfg.h_bound,
            )?;
            let mut w = csv_writer(&put("continuity.csv"))?;
            w.write_record([
                "direction",
                "delta",
                "data_diff",
                "e1_diff",
                "y1_diff",
                "ratio",
                "admissible",
            ])?;
            for p in &rep.points {
                w.write_record([
                    p.direction.to_string(),
                    fmt_f64(p.delta),
                    fmt_f64(p.data_diff),
                    fmt_f64(p.e1_diff),
                    fmt_f64(p.y1_diff),
                    opt(p.ratio),
                    p.admissible.to_string(),
                ])?;
            }
            w.flush()?;
            write_json(&put("continuity.json"), &rep)?;
        }
        Command::Continue => {
            let grid = cfg.grid_for(cfg.t_end)?;
            let opts = ContinuationOptions {
                mollify_k: cfg.mollify_k,
                h_bound: cfg.h_bound,
            };
            let seg = cfg.t_end / cfg.segments as f64;
            let check = continuation_check(&spec, &nl, cfg.segments, seg, &grid, &opts)?;
            write_json(&put("continuation.json"), &check)?;
        }
    }
    Ok(files)
}
