//! The experiments: single solves, convergence studies, fixed-`kh/p` sweeps,
//! critical mesh sizes and dispersion tables.

use std::collections::BTreeMap;

use helmholtz_cip::assemble::{manufactured_rhs, AssembleError};
use helmholtz_cip::dispersion::{discrete_wavenumber, DispersionError};
use helmholtz_cip::linsolve::{SolveError, SolveStats};
use helmholtz_cip::penalty::PenaltyError;
use helmholtz_cip::{
    assemble_blocks, assemble_penalty, combined_system, error_report, gauss_rule, interpolation_error, solve, Complex64, DofMap, ErrorReport,
    ExactSolution, GammaSpec, Mesh, PenaltySet, SolverKind, SparseComplexMatrix,
};
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Method, RunConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error("solver failed for {case}: {source}")]
    Solver { case: String, source: SolveError },
    #[error("infeasible at desk scale: p={p} k={k} eps={eps} still at error {err:.4} with m={m} ({dofs} unknowns)")]
    Infeasible { p: usize, k: f64, eps: f64, m: usize, dofs: usize, err: f64 },
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Setup(_) => 1,
            HarnessError::Solver { .. } => 2,
            HarnessError::Infeasible { .. } => 3,
        }
    }
}

macro_rules! setup_from {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Setup(e.to_string())
            }
        }
    )*};
}
setup_from!(AssembleError, helmholtz_cip::element::QuadError, PenaltyError, DispersionError, helmholtz_cip::grid::GridError, helmholtz_cip::manufactured::ManufacturedError);

/// One `(method, p, k, m)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub method: Method,
    pub p: usize,
    pub k: f64,
    pub m: usize,
    pub gamma: GammaSpec,
}

impl Case {
    pub fn new(method: Method, p: usize, k: f64, m: usize, gamma: &GammaSpec) -> Self {
        let gamma = match method {
            Method::Fem => GammaSpec::Zero,
            Method::Cip => gamma.clone(),
        };
        Self { method, p, k, m, gamma }
    }

    pub fn dofs(&self) -> usize {
        dof_count(self.p, self.m)
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} p={} k={} m={} gamma={}", self.method, self.p, self.k, self.m, self.gamma)
    }
}

pub fn dof_count(p: usize, m: usize) -> usize {
    (p * m + 1).pow(2)
}

/// Assembled system of one case.
pub struct System {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub gamma: PenaltySet,
    pub exact: ExactSolution,
    pub matrix: SparseComplexMatrix,
    pub rhs: Vec<Complex64>,
}

pub fn build_system(case: &Case, cfg: &RunConfig) -> Result<System, HarnessError> {
    let mesh = Mesh::build_cartesian(case.m)?;
    let dofs = DofMap::new(&mesh, case.p)?;
    let gamma = case.gamma.resolve(case.p, case.k * mesh.h())?;
    let exact = ExactSolution::new(case.k)?;
    let q = gauss_rule(case.p + 1)?;
    let blocks = assemble_blocks(&mesh, &dofs, &q)?;
    let jump = assemble_penalty(&mesh, &dofs, &gamma, &q)?;
    let matrix = combined_system(&blocks, case.k, &jump);
    let rhs = manufactured_rhs(&mesh, &dofs, &exact, &gauss_rule(cfg.quadrature_points(case.p))?)?;
    Ok(System { mesh, dofs, gamma, exact, matrix, rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case: Case,
    pub report: ErrorReport,
    pub relative_residual: f64,
    pub solver: SolverKind,
    pub stats: SolveStats,
    pub wall_time_s: f64,
}

pub fn solve_case(case: &Case, cfg: &RunConfig) -> Result<CaseOutcome, HarnessError> {
    if case.dofs() > cfg.dof_cap {
        return Err(HarnessError::Setup(format!("{case}: {} unknowns exceed the cap of {}", case.dofs(), cfg.dof_cap)));
    }
    let sys = build_system(case, cfg)?;
    solve_system(case, &sys, cfg)
}

pub fn solve_system(case: &Case, sys: &System, cfg: &RunConfig) -> Result<CaseOutcome, HarnessError> {
    let sol = solve(&sys.matrix, &sys.rhs, &cfg.solver).map_err(|source| HarnessError::Solver { case: case.to_string(), source })?;
    let q = gauss_rule(cfg.quadrature_points(case.p))?;
    let report = error_report(&sys.mesh, &sys.dofs, &sol.solution, &sys.exact, case.k, &sys.gamma, &q)?;
    debug!("{case}: h1 rel {:.4e}, residual {:.2e}, {:.2}s", report.h1_semi_rel, sol.relative_residual, sol.wall_time_s);
    Ok(CaseOutcome { case: case.clone(), report, relative_residual: sol.relative_residual, solver: sol.kind, stats: sol.stats, wall_time_s: sol.wall_time_s })
}

pub fn interpolation_case(p: usize, k: f64, m: usize, cfg: &RunConfig) -> Result<ErrorReport, HarnessError> {
    let mesh = Mesh::build_cartesian(m)?;
    let dofs = DofMap::new(&mesh, p)?;
    let exact = ExactSolution::new(k)?;
    Ok(interpolation_error(&mesh, &dofs, &exact, k, &gauss_rule(cfg.quadrature_points(p))?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub p: usize,
    pub k: f64,
    pub m: usize,
    pub h: f64,
    pub dofs: usize,
    pub method: Method,
    pub h1semi_rel: f64,
    pub l2_rel: f64,
    pub jump_semi: f64,
    pub interp_h1semi_rel: f64,
    /// Relative residual of the linear solve; not part of the table.
    #[serde(skip)]
    pub residual: f64,
}

/// Error of the configured method and of the interpolant for every
/// `(p, k, m)` of the configuration. Failed solves leave NaN in their row.
pub fn run_convergence(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>, HarnessError> {
    if cfg.m.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Setup("the m list must be increasing".into()));
    }
    let mut keys = Vec::new();
    for &p in &cfg.p {
        for &k in &cfg.k {
            for &m in &cfg.m {
                keys.push((p, k, m));
            }
        }
    }
    let rows = keys
        .par_iter()
        .map(|&(p, k, m)| -> Result<ConvergenceRow, HarnessError> {
            let case = Case::new(cfg.method, p, k, m, &cfg.gamma);
            let interp = interpolation_case(p, k, m, cfg)?;
            let (h1, l2, jump, residual) = match solve_case(&case, cfg) {
                Ok(out) => (out.report.h1_semi_rel, out.report.l2_rel, out.report.jump_semi, out.relative_residual),
                Err(e @ HarnessError::Solver { .. }) | Err(e @ HarnessError::Setup(_)) => {
                    log::warn!("{e}");
                    (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                }
                Err(e) => return Err(e),
            };
            Ok(ConvergenceRow {
                p,
                k,
                m,
                h: 1.0 / m as f64,
                dofs: case.dofs(),
                method: cfg.method,
                h1semi_rel: h1,
                l2_rel: l2,
                jump_semi: jump,
                interp_h1semi_rel: interp.h1_semi_rel,
                residual,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub k: f64,
    pub m: usize,
    pub h: f64,
    pub dofs: usize,
    pub fem_h1semi_rel: f64,
    pub cip_h1semi_rel: f64,
    pub interp_h1semi_rel: f64,
    /// Larger relative residual of the two solves.
    pub max_residual: f64,
}

/// Mesh of the sweep at wave number `k`: `kh/p` held at `cfg.kh_over_p`.
/// Refined to the first mesh with `kh < π` when rounding lands above it,
/// since the optimal penalty is undefined there.
pub fn sweep_mesh(k: f64, p: usize, kh_over_p: f64) -> usize {
    ((k / (kh_over_p * p as f64)).round() as usize).max(scan_start(k))
}

/// FEM, CIP and interpolation errors along the k list at fixed `kh/p`.
pub fn run_ksweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, HarnessError> {
    let mut keys = Vec::new();
    for &p in &cfg.p {
        for &k in &cfg.k {
            keys.push((p, k));
        }
    }
    keys.par_iter()
        .map(|&(p, k)| {
            let m = sweep_mesh(k, p, cfg.kh_over_p);
            let err = |method: Method| match solve_case(&Case::new(method, p, k, m, &cfg.gamma), cfg) {
                Ok(out) => Ok((out.report.h1_semi_rel, out.relative_residual)),
                Err(e @ HarnessError::Solver { .. }) | Err(e @ HarnessError::Setup(_)) => {
                    log::warn!("{e}");
                    Ok((f64::NAN, f64::NAN))
                }
                Err(e) => Err(e),
            };
            let (fem, r1) = err(Method::Fem)?;
            let (cip, r2) = err(Method::Cip)?;
            let interp = interpolation_case(p, k, m, cfg)?.h1_semi_rel;
            info!("sweep p={p} k={k} m={m}: fem {fem:.4} cip {cip:.4} interp {interp:.4}");
            Ok(SweepRow {
                p,
                k,
                m,
                h: 1.0 / m as f64,
                dofs: dof_count(p, m),
                fem_h1semi_rel: fem,
                cip_h1semi_rel: cip,
                interp_h1semi_rel: interp,
                max_residual: r1.max(r2),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalMeshResult {
    pub p: usize,
    pub k: f64,
    pub eps: f64,
    pub method: Method,
    pub m_critical: usize,
    pub h_critical: f64,
    pub err_at_critical: f64,
    /// Every `(m, relative H¹-seminorm error)` evaluated, in scan order.
    #[serde(skip)]
    pub trace: Vec<(usize, f64)>,
    /// Largest relative residual of the solves in the trace.
    #[serde(skip)]
    pub max_residual: f64,
}

/// Coarsest mesh the scan starts from: the first with `kh < π`.
pub fn scan_start(k: f64) -> usize {
    ((k / std::f64::consts::PI).floor() as usize + 1).max(2)
}

/// Largest `m` whose system fits under the cap.
pub fn largest_feasible_m(p: usize, cap: usize) -> usize {
    let side = (cap as f64).sqrt().floor() as usize;
    side.saturating_sub(1) / p
}

/// Smallest `m` whose relative H¹-seminorm error is at most `eps`: double
/// from [`scan_start`] until the error drops below `eps`, then bisect over
/// the last doubling interval, taking the error to be monotone in `m`.
pub fn critical_mesh_size(k: f64, p: usize, eps: f64, method: Method, gamma: &GammaSpec, cfg: &RunConfig) -> Result<CriticalMeshResult, HarnessError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HarnessError::Setup(format!("eps must lie in (0, 1], got {eps}")));
    }
    let m_max = largest_feasible_m(p, cfg.dof_cap);
    let m_min = scan_start(k);
    if m_min > m_max {
        return Err(HarnessError::Infeasible { p, k, eps, m: m_min, dofs: dof_count(p, m_min), err: f64::NAN });
    }
    let mut seen: BTreeMap<usize, f64> = BTreeMap::new();
    let mut trace = Vec::new();
    let mut max_residual = 0.0f64;
    let mut eval = |m: usize| -> Result<f64, HarnessError> {
        if let Some(&e) = seen.get(&m) {
            return Ok(e);
        }
        let out = solve_case(&Case::new(method, p, k, m, gamma), cfg)?;
        max_residual = max_residual.max(out.relative_residual);
        let e = out.report.h1_semi_rel;
        debug!("critical p={p} k={k} {method}: m={m} err={e:.4e}");
        seen.insert(m, e);
        trace.push((m, e));
        Ok(e)
    };
    let mut lo = None;
    let mut hi = m_min;
    loop {
        let e = eval(hi)?;
        if e <= eps {
            break;
        }
        if hi == m_max {
            return Err(HarnessError::Infeasible { p, k, eps, m: hi, dofs: dof_count(p, hi), err: e });
        }
        lo = Some(hi);
        hi = (2 * hi).min(m_max);
    }
    if let Some(mut lo) = lo {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if eval(mid)? <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let err = eval(hi)?;
    info!("critical p={p} k={k} {method}: m={hi} err={err:.4e} after {} solves", trace.len());
    Ok(CriticalMeshResult { p, k, eps, method, m_critical: hi, h_critical: 1.0 / hi as f64, err_at_critical: err, trace, max_residual })
}

/// Critical mesh sizes for every `(p, k)` of the configuration.
pub fn run_critical(cfg: &RunConfig) -> Result<Vec<CriticalMeshResult>, HarnessError> {
    let mut keys = Vec::new();
    for &p in &cfg.p {
        for &k in &cfg.k {
            keys.push((p, k));
        }
    }
    keys.par_iter().map(|&(p, k)| critical_mesh_size(k, p, cfg.eps, cfg.method, &cfg.effective_gamma(), cfg)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub p: usize,
    pub t: f64,
    pub gamma: Vec<f64>,
    pub theta: f64,
    pub rel_phase_error: f64,
}

/// Discrete wave numbers of the configured scheme at the given `t = kh`.
pub fn run_dispersion(cfg: &RunConfig, ts: &[f64]) -> Result<Vec<DispersionRow>, HarnessError> {
    let gamma = cfg.effective_gamma();
    let mut rows = Vec::new();
    for &p in &cfg.p {
        for &t in ts {
            let set = gamma.resolve(p, t)?;
            let r = discrete_wavenumber(p, t, &set)?;
            rows.push(DispersionRow { p, t, gamma: set.values().iter().map(|z| z.re).collect(), theta: r.theta, rel_phase_error: r.rel_phase_error });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig { output: std::env::temp_dir(), ..RunConfig::default() }
    }

    #[test]
    fn fem_cases_drop_the_penalty() {
        let c = Case::new(Method::Fem, 2, 5.0, 4, &GammaSpec::Optimal);
        assert_eq!(c.gamma, GammaSpec::Zero);
        assert_eq!(c.dofs(), 81);
    }

    #[test]
    fn zero_penalty_cip_is_the_fem() {
        let c = cfg();
        let fem = solve_case(&Case::new(Method::Fem, 2, 6.0, 6, &GammaSpec::Optimal), &c).unwrap();
        let cip = solve_case(&Case::new(Method::Cip, 2, 6.0, 6, &GammaSpec::Zero), &c).unwrap();
        assert_eq!(fem.report, cip.report);
    }

    #[test]
    fn scan_bounds() {
        assert_eq!(scan_start(1.0), 2);
        assert_eq!(scan_start(20.0), 7);
        assert!(20.0 / (scan_start(20.0) as f64) < std::f64::consts::PI);
        assert_eq!(largest_feasible_m(1, 10_000), 99);
        assert_eq!(largest_feasible_m(2, 10_000), 49);
        assert!(dof_count(2, 49) <= 10_000 && dof_count(2, 50) > 10_000);
        assert_eq!(sweep_mesh(10.0, 1, 1.0), 10);
        assert_eq!(sweep_mesh(50.0, 3, 1.0), 17);
        assert_eq!(sweep_mesh(10.0, 3, 1.0), 4);
    }

    #[test]
    fn unit_tolerance_accepts_the_first_mesh() {
        let r = critical_mesh_size(5.0, 1, 1.0, Method::Fem, &GammaSpec::Zero, &cfg()).unwrap();
        assert_eq!(r.m_critical, scan_start(5.0));
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn critical_mesh_brackets_the_tolerance() {
        let c = cfg();
        let r = critical_mesh_size(10.0, 1, 0.2, Method::Cip, &GammaSpec::Optimal, &c).unwrap();
        assert!(r.err_at_critical <= 0.2);
        let below = solve_case(&Case::new(Method::Cip, 1, 10.0, r.m_critical - 1, &GammaSpec::Optimal), &c).unwrap();
        assert!(below.report.h1_semi_rel > 0.2);
        assert_eq!(r.trace.iter().filter(|(m, _)| *m == r.m_critical).count(), 1);
    }

    #[test]
    fn cap_makes_the_search_infeasible() {
        let c = RunConfig { dof_cap: 400, ..cfg() };
        let e = critical_mesh_size(10.0, 1, 0.01, Method::Fem, &GammaSpec::Zero, &c).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn convergence_rows_follow_the_key_order() {
        let c = RunConfig { p: vec![1, 2], k: vec![3.0], m: vec![4, 8], ..cfg() };
        let rows = run_convergence(&c).unwrap();
        let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.p, r.m)).collect();
        assert_eq!(keys, vec![(1, 4), (1, 8), (2, 4), (2, 8)]);
        assert!(rows.iter().all(|r| r.h1semi_rel.is_finite()));
        let unsorted = RunConfig { m: vec![8, 4], ..c };
        assert!(run_convergence(&unsorted).is_err());
    }

    #[test]
    fn dispersion_rows_carry_the_penalty() {
        let rows = run_dispersion(&RunConfig { p: vec![2], ..cfg() }, &[0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].gamma.len(), 2);
        assert!(rows[0].rel_phase_error < 1e-9);
    }
}
