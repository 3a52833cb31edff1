use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use helmholtz_cip::theory::run_theory_checks;
use helmholtz_cip::{fit_slope, GammaSpec, SolverKind};
use helmholtz_harness::config::{Experiment, Method, RunConfig};
use helmholtz_harness::envelope::{fit_envelope, EnvelopeSample};
use helmholtz_harness::experiments::{build_system, solve_system, Case, HarnessError};
use helmholtz_harness::output::{self, Metadata};
use helmholtz_harness::plot::{log_log, Series};
use helmholtz_harness::{run_convergence, run_critical, run_dispersion, run_ksweep};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cipfem", version, about = "Helmholtz FEM and CIP-FEM experiments on the unit square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve single cases and print their error reports.
    Solve(Common),
    /// Error against mesh refinement, with the interpolation baseline.
    Convergence(Common),
    /// FEM, CIP and interpolation errors along k at fixed kh/p.
    Ksweep(Common),
    /// Critical mesh sizes for a tolerance on the relative error.
    CriticalH(Common),
    /// Discrete wave numbers of the 1D scheme.
    Dispersion {
        #[command(flatten)]
        common: Common,
        /// Values of t = kh.
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.4,0.6,0.9,1.2,1.5")]
        t: Vec<f64>,
    },
    /// Discrete norm identities, spectra and coercivity thresholds.
    TheoryCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "4,8")]
        meshes: Vec<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    /// optimal, zero, or const:v1[,v2,...]
    #[arg(long)]
    gamma: Option<GammaSpec>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(short, long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(short, long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(short, long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    kh_over_p: Option<f64>,
    /// Gauss points per direction for the load vector and the errors.
    #[arg(long)]
    quadrature: Option<usize>,
    #[arg(long)]
    dof_cap: Option<usize>,
    #[arg(long)]
    no_plots: bool,
    /// Also write the assembled matrices (solve only).
    #[arg(long)]
    export_matrix: bool,
}

impl Common {
    fn config(&self, experiment: Option<Experiment>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.output = v.clone();
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = &self.gamma {
            cfg.gamma = v.clone();
        }
        if let Some(v) = self.solver {
            cfg.solver.kind = v;
        }
        if let Some(v) = self.solver_tol {
            cfg.solver.tolerance = v;
        }
        if let Some(v) = &self.p {
            cfg.p = v.clone();
        }
        if let Some(v) = &self.k {
            cfg.k = v.clone();
        }
        if let Some(v) = &self.m {
            cfg.m = v.clone();
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.kh_over_p {
            cfg.kh_over_p = v;
        }
        if self.quadrature.is_some() {
            cfg.quadrature = self.quadrature;
        }
        if let Some(v) = self.dof_cap {
            cfg.dof_cap = v;
        }
        if self.no_plots {
            cfg.plots = false;
        }
        if self.export_matrix {
            cfg.export_matrix = true;
        }
        if let Some(e) = experiment {
            cfg.fill_defaults(e);
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_svg(cfg: &RunConfig, files: &mut Vec<String>, name: &str, svg: String) -> anyhow::Result<()> {
    if cfg.plots {
        let path = cfg.output.join(name);
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        files.push(name.to_string());
    }
    Ok(())
}

fn cmd_solve(cfg: &RunConfig) -> anyhow::Result<()> {
    fs::create_dir_all(&cfg.output)?;
    let mut reports = Vec::new();
    let mut files = vec!["solve.json".to_string()];
    for &p in &cfg.p {
        for &k in &cfg.k {
            for &m in &cfg.m {
                let case = Case::new(cfg.method, p, k, m, &cfg.gamma);
                let sys = build_system(&case, cfg)?;
                if cfg.export_matrix {
                    let name = format!("matrix_{}_p{p}_k{k}_m{m}.mtx", cfg.method);
                    let mut f = std::io::BufWriter::new(fs::File::create(cfg.output.join(&name))?);
                    sys.matrix.write_matrix_market(&mut f)?;
                    files.push(name);
                }
                let out = solve_system(&case, &sys, cfg)?;
                println!(
                    "{case}: dofs={} h1semi_rel={:.6e} l2_rel={:.6e} jump_semi={:.6e} residual={:.2e} ({}, {:.2}s)",
                    out.report.dofs, out.report.h1_semi_rel, out.report.l2_rel, out.report.jump_semi, out.relative_residual, out.solver, out.wall_time_s
                );
                reports.push(out);
            }
        }
    }
    fs::write(cfg.output.join("solve.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    output::write_metadata(&cfg.output, &Metadata { command: "solve", version: VERSION, config: cfg, files, notes: vec![], extra: None })
}

fn cmd_convergence(cfg: &RunConfig) -> anyhow::Result<()> {
    let rows = run_convergence(cfg)?;
    output::write_convergence(&cfg.output.join("convergence.csv"), &rows)?;
    let mut files = vec!["convergence.csv".to_string()];
    let mut series = Vec::new();
    let mut fits = Vec::new();
    let mut envelopes = Vec::new();
    for &p in &cfg.p {
        for &k in &cfg.k {
            let sel: Vec<_> = rows.iter().filter(|r| r.p == p && r.k == k).collect();
            let pts: Vec<(f64, f64)> = sel.iter().map(|r| (r.h, r.h1semi_rel)).collect();
            series.push(Series::new(format!("{} p={p} k={k}", cfg.method), pts.clone()));
            series.push(Series::new(format!("interp p={p} k={k}"), sel.iter().map(|r| (r.h, r.interp_h1semi_rel)).collect()).dashed());
            let finite: Vec<(f64, f64)> = pts.into_iter().filter(|s| s.1.is_finite() && s.1 > 0.0).collect();
            if let Ok(f) = fit_slope(&finite, true) {
                fits.push(json!({"p": p, "k": k, "slope": f.slope, "r2": f.r2}));
            }
        }
        let samples: Vec<EnvelopeSample> =
            rows.iter().filter(|r| r.p == p && r.h1semi_rel <= 0.5).map(|r| EnvelopeSample { k: r.k, h: r.h, error: r.h1semi_rel }).collect();
        if let Some(e) = fit_envelope(p, &samples) {
            envelopes.push(e);
        }
    }
    let slopes: Vec<(f64, String)> = cfg.p.iter().map(|&p| (p as f64, format!("slope {p}"))).collect();
    write_svg(cfg, &mut files, "convergence.svg", log_log("relative H1-seminorm error", "h", "error", &series, &slopes))?;
    let meta = Metadata {
        command: "convergence",
        version: VERSION,
        config: cfg,
        files,
        notes: vec![],
        extra: Some(json!({"slope_fits": fits, "envelopes": envelopes})),
    };
    output::write_metadata(&cfg.output, &meta)
}

fn cmd_ksweep(cfg: &RunConfig) -> anyhow::Result<()> {
    let rows = run_ksweep(cfg)?;
    output::write_sweep(&cfg.output.join("ksweep.csv"), &rows)?;
    let mut files = vec!["ksweep.csv".to_string()];
    let mut series = Vec::new();
    for &p in &cfg.p {
        let sel: Vec<_> = rows.iter().filter(|r| r.p == p).collect();
        series.push(Series::new(format!("fem p={p}"), sel.iter().map(|r| (r.k, r.fem_h1semi_rel)).collect()));
        series.push(Series::new(format!("cip p={p}"), sel.iter().map(|r| (r.k, r.cip_h1semi_rel)).collect()));
        series.push(Series::new(format!("interp p={p}"), sel.iter().map(|r| (r.k, r.interp_h1semi_rel)).collect()).dashed());
    }
    write_svg(cfg, &mut files, "ksweep.svg", log_log(&format!("kh/p = {}", cfg.kh_over_p), "k", "relative H1-seminorm error", &series, &[]))?;
    let notes = vec![format!(
        "k-grid {:?} replaces the published k = 1, 2, ..., 1000, which is beyond a desk-scale direct-solve budget",
        cfg.k
    )];
    output::write_metadata(&cfg.output, &Metadata { command: "ksweep", version: VERSION, config: cfg, files, notes, extra: None })
}

fn cmd_critical(cfg: &RunConfig) -> anyhow::Result<()> {
    let rows = run_critical(cfg)?;
    output::write_critical(&cfg.output, &rows)?;
    let mut files = vec!["critical_h.csv".to_string(), "critical_trace.csv".to_string()];
    let mut series = Vec::new();
    let mut fits = Vec::new();
    for &p in &cfg.p {
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == p).map(|r| (r.k, r.h_critical)).collect();
        if let Ok(f) = fit_slope(&pts, true) {
            println!("p={p} {}: slope of h_critical against k = {:.4} (r2 {:.4})", cfg.method, f.slope, f.r2);
            fits.push(json!({"p": p, "slope": f.slope, "intercept": f.intercept, "r2": f.r2}));
        }
        series.push(Series::new(format!("{} p={p}", cfg.method), pts));
    }
    let slopes = match cfg.method {
        Method::Fem => cfg.p.iter().map(|&p| (-(2.0 * p as f64 + 1.0) / (2.0 * p as f64), format!("slope -{}/{}", 2 * p + 1, 2 * p))).collect(),
        Method::Cip => vec![(-1.0, "slope -1".to_string())],
    };
    write_svg(cfg, &mut files, "critical_h.svg", log_log(&format!("critical h, eps = {}", cfg.eps), "k", "h", &series, &slopes))?;
    let meta = Metadata { command: "critical-h", version: VERSION, config: cfg, files, notes: vec![], extra: Some(json!({ "slope_fits": fits })) };
    output::write_metadata(&cfg.output, &meta)
}

fn cmd_dispersion(cfg: &RunConfig, ts: &[f64]) -> anyhow::Result<()> {
    let rows = run_dispersion(cfg, ts)?;
    let mut files = output::write_dispersion(&cfg.output, &rows)?;
    let series: Vec<Series> = cfg
        .p
        .iter()
        .map(|&p| Series::new(format!("p={p}"), rows.iter().filter(|r| r.p == p).map(|r| (r.t, r.rel_phase_error)).collect()))
        .collect();
    let slopes = cfg.p.iter().map(|&p| (2.0 * p as f64, format!("slope {}", 2 * p))).collect::<Vec<_>>();
    write_svg(cfg, &mut files, "dispersion.svg", log_log("relative phase error", "t = kh", "|theta - t| / t", &series, &slopes))?;
    output::write_metadata(&cfg.output, &Metadata { command: "dispersion", version: VERSION, config: cfg, files, notes: vec![], extra: None })
}

fn cmd_theory(cfg: &RunConfig, meshes: &[usize], seed: u64) -> anyhow::Result<bool> {
    let report = run_theory_checks(meshes, &cfg.p, seed)?;
    for c in &report.checks {
        println!("{} {}: {:.3e} ({})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.measured, c.bound);
    }
    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join("theory.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let meta = Metadata { command: "theory-check", version: VERSION, config: cfg, files: vec!["theory.json".into()], notes: vec![], extra: None };
    output::write_metadata(&cfg.output, &meta)?;
    Ok(report.all_passed())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Solve(c) => cmd_solve(&c.config(Some(Experiment::Solve))?)?,
        Command::Convergence(c) => cmd_convergence(&c.config(Some(Experiment::Convergence))?)?,
        Command::Ksweep(c) => cmd_ksweep(&c.config(Some(Experiment::Sweep))?)?,
        Command::CriticalH(c) => cmd_critical(&c.config(Some(Experiment::Critical))?)?,
        Command::Dispersion { common, t } => cmd_dispersion(&common.config(None)?, &t)?,
        Command::TheoryCheck { common, meshes, seed } => {
            let mut cfg = common.config(None)?;
            if common.p.is_none() && common.config.is_none() {
                cfg.p = vec![1, 2, 3];
            }
            return cmd_theory(&cfg, &meshes, seed);
        }
    }
    Ok(true)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    e.downcast_ref::<HarnessError>().map_or(1, |h| h.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

