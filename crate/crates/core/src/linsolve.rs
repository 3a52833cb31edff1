//! Linear solvers for the assembled complex systems.
//!
//! The default is a sparse direct factorization backed by `faer` with an
//! AMD fill-reducing ordering: for complex symmetric matrices a Bunch-Kaufman
//! `LBLᵀ` of the equivalent real symmetric system, otherwise (or when that
//! misses the residual target) LU with partial pivoting. Large systems fall
//! back to restarted GMRES preconditioned by an ILU(0) factorization.

use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, SparseRowMat, SymbolicSparseRowMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::DiscreteField;
use crate::sparse::CsrMatrix;

/// Relative residual the direct path must reach.
pub const DIRECT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Gmres,
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "gmres" => Ok(SolverKind::Gmres),
            other => Err(format!("unknown solver `{other}` (expected direct or gmres)")),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Direct => "direct",
            SolverKind::Gmres => "gmres",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target of the iterative path.
    pub tolerance: f64,
    /// Direct requests above this many unknowns switch to GMRES.
    pub gmres_threshold: usize,
    pub restart: usize,
    pub max_iterations: usize,
    /// Keep the factorization single-threaded (bitwise reproducible).
    pub sequential: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Direct,
            tolerance: 1e-8,
            gmres_threshold: 2_000_000,
            restart: 200,
            max_iterations: 20_000,
            sequential: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub matrix_nnz: usize,
    /// Direct path only.
    pub factorization: Option<Factorization>,
    /// Stored factor entries beyond those of the factored matrix (real
    /// entries of the equivalent system for `LBLᵀ`, zero for ILU(0)); the
    /// LU backend does not report it.
    pub fill_in: Option<usize>,
    /// Peak resident set size of the process after the solve.
    pub peak_memory_bytes: Option<u64>,
    pub iterations: Option<usize>,
    pub refinement_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: DiscreteField,
    pub relative_residual: f64,
    pub kind: SolverKind,
    pub stats: SolveStats,
    pub wall_time_s: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix has dimension {matrix} but the right-hand side has length {rhs}")]
    Dimension { matrix: usize, rhs: usize },
    #[error("factorization found no usable pivot at step {pivot:?} (relative residual {residual:e})")]
    Singular { pivot: Option<usize>, residual: f64 },
    #[error("GMRES stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solver backend: {0}")]
    Backend(String),
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖b - Ax‖ / ‖b‖` (or `‖Ax‖` when `b = 0`).
pub fn relative_residual(a: &CsrMatrix<Complex64>, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Peak resident memory from `/proc/self/status`, where available.
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Complex symmetric `A = Ar + iAi` as the real symmetric indefinite
/// system `[[Ar, -Ai], [-Ai, -Ar]] [xr; xi] = [br; -bi]`, with the real
/// and imaginary unknowns of each node interleaved. Lower triangle only.
fn real_equivalent(a: &CsrMatrix<Complex64>) -> Result<SparseColMat<usize, f64>, SolveError> {
    let n = a.dim();
    let mut trip = Vec::with_capacity(2 * a.nnz() + 2 * n);
    for i in 0..n {
        for (c, v) in a.row(i) {
            if c > i {
                continue;
            }
            trip.push(Triplet::new(2 * i, 2 * c, v.re));
            trip.push(Triplet::new(2 * i + 1, 2 * c, -v.im));
            if c < i {
                trip.push(Triplet::new(2 * i, 2 * c + 1, -v.im));
            }
            trip.push(Triplet::new(2 * i + 1, 2 * c + 1, -v.re));
        }
    }
    SparseColMat::try_new_from_triplets(2 * n, 2 * n, &trip).map_err(|e| SolveError::Backend(format!("{e:?}")))
}

/// Symmetric indefinite `LBLᵀ` factors of the real equivalent system.
struct Lblt {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    forward: Vec<usize>,
    inverse: Vec<usize>,
    /// Entries of the lower triangle of the real system.
    matrix_entries: usize,
}

impl Lblt {
    fn new(a: &CsrMatrix<Complex64>, par: Par) -> Result<Self, SolveError> {
        let r = real_equivalent(a)?;
        let symbolic = factorize_symbolic_cholesky(r.symbolic(), Side::Lower, SymmetricOrdering::Amd, CholeskySymbolicParams::default())
            .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
        let n = r.nrows();
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut forward = vec![0usize; n];
        let mut inverse = vec![0usize; n];
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()));
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut forward,
            &mut inverse,
            r.as_ref(),
            Side::Lower,
            par,
            MemStack::new(&mut mem),
            Default::default(),
        );
        let matrix_entries = r.compute_nnz();
        Ok(Self { symbolic, values, subdiag, forward, inverse, matrix_entries })
    }

    fn apply(&self, b: &[Complex64], par: Par) -> Vec<Complex64> {
        let n = b.len();
        let perm = PermRef::new_checked(&self.forward, &self.inverse, 2 * n);
        let f = IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        let mut x = Mat::<f64>::from_fn(2 * n, 1, |i, _| if i % 2 == 0 { b[i / 2].re } else { -b[i / 2].im });
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        f.solve_in_place_with_conj(Conj::No, x.as_mut(), par, MemStack::new(&mut mem));
        (0..n).map(|i| Complex64::new(x[(2 * i, 0)], x[(2 * i + 1, 0)])).collect()
    }
}

enum Factors {
    Lblt(Lblt),
    Lu(faer::sparse::linalg::solvers::Lu<usize, faer::c64>),
}

/// Which factorization a [`DirectSolver`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factorization {
    /// Bunch-Kaufman `LBLᵀ` of the real equivalent of a complex symmetric matrix.
    Lblt,
    /// LU with partial pivoting.
    Lu,
}

/// A reusable sparse direct factorization: `LBLᵀ` for complex symmetric
/// matrices, LU otherwise or when `LBLᵀ` misses the residual target.
pub struct DirectSolver<'a> {
    matrix: &'a CsrMatrix<Complex64>,
    factors: Factors,
    par: Par,
}

impl<'a> DirectSolver<'a> {
    pub fn new(matrix: &'a CsrMatrix<Complex64>, sequential: bool) -> Result<Self, SolveError> {
        let par = if sequential {
            faer::set_global_parallelism(Par::Seq);
            Par::Seq
        } else {
            Par::rayon(0)
        };
        let scale = matrix.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let factors = if matrix.symmetry_defect() <= 1e-12 * scale {
            Factors::Lblt(Lblt::new(matrix, par)?)
        } else {
            Factors::Lu(Self::lu(matrix)?)
        };
        Ok(Self { matrix, factors, par })
    }

    /// Direct solver forced onto the LU path.
    pub fn new_lu(matrix: &'a CsrMatrix<Complex64>, sequential: bool) -> Result<Self, SolveError> {
        let par = if sequential {
            faer::set_global_parallelism(Par::Seq);
            Par::Seq
        } else {
            Par::rayon(0)
        };
        Ok(Self { matrix, factors: Factors::Lu(Self::lu(matrix)?), par })
    }

    fn lu(matrix: &CsrMatrix<Complex64>) -> Result<faer::sparse::linalg::solvers::Lu<usize, faer::c64>, SolveError> {
        let n = matrix.dim();
        let symbolic = SymbolicSparseRowMat::new_checked(n, n, matrix.row_ptr().to_vec(), None, matrix.col_idx().to_vec());
        let a = SparseRowMat::<usize, faer::c64>::new(symbolic, matrix.values().to_vec());
        a.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => SolveError::Singular { pivot: Some(index), residual: f64::INFINITY },
            LuError::Generic(g) => SolveError::Backend(format!("{g:?}")),
        })
    }

    pub fn factorization(&self) -> Factorization {
        match self.factors {
            Factors::Lblt(_) => Factorization::Lblt,
            Factors::Lu(_) => Factorization::Lu,
        }
    }

    /// Stored entries of the factors beyond those of the factored matrix,
    /// when the backend exposes them.
    pub fn fill_in(&self) -> Option<usize> {
        match &self.factors {
            Factors::Lblt(f) => Some(f.symbolic.len_val().saturating_sub(f.matrix_entries)),
            Factors::Lu(_) => None,
        }
    }

    fn apply(&self, b: &[Complex64]) -> Vec<Complex64> {
        match &self.factors {
            Factors::Lblt(f) => f.apply(b, self.par),
            Factors::Lu(lu) => {
                let rhs = Mat::<faer::c64>::from_fn(b.len(), 1, |i, _| b[i]);
                let x = lu.solve(&rhs);
                (0..b.len()).map(|i| x[(i, 0)]).collect()
            }
        }
    }

    /// Solves `Ax = b` with up to three steps of iterative refinement.
    pub fn solve(&self, b: &[Complex64]) -> Result<(Vec<Complex64>, f64, usize), SolveError> {
        let n = self.matrix.dim();
        if b.len() != n {
            return Err(SolveError::Dimension { matrix: n, rhs: b.len() });
        }
        let mut x = self.apply(b);
        let mut res = relative_residual(self.matrix, &x, b);
        let mut steps = 0;
        while res.is_finite() && res > DIRECT_TOLERANCE && steps < 3 {
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.apply(&r);
            let cand: Vec<Complex64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
            let cres = relative_residual(self.matrix, &cand, b);
            steps += 1;
            if !(cres < res) {
                break;
            }
            x = cand;
            res = cres;
        }
        if !res.is_finite() || res > DIRECT_TOLERANCE {
            let pivot = x.iter().position(|z| !z.re.is_finite() || !z.im.is_finite());
            return Err(SolveError::Singular { pivot, residual: res });
        }
        Ok((x, res, steps))
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
pub struct Ilu0 {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix<Complex64>) -> Result<Self, SolveError> {
        let n = a.dim();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut values = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(SolveError::Singular { pivot: Some(i), residual: f64::INFINITY });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            for k in lo..hi {
                pos[col_idx[k]] = k;
            }
            for k in lo..hi {
                let c = col_idx[k];
                if c >= i {
                    break;
                }
                let piv = values[diag[c]];
                if piv == Complex64::new(0.0, 0.0) {
                    return Err(SolveError::Singular { pivot: Some(c), residual: f64::INFINITY });
                }
                let l = values[k] / piv;
                values[k] = l;
                for kk in diag[c] + 1..row_ptr[c + 1] {
                    let p = pos[col_idx[kk]];
                    if p != usize::MAX {
                        let u = values[kk];
                        values[p] -= l * u;
                    }
                }
            }
            for k in lo..hi {
                pos[col_idx[k]] = usize::MAX;
            }
        }
        Ok(Self { n, row_ptr, col_idx, values, diag })
    }

    pub fn apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut y = r.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for k in self.row_ptr[i]..self.diag[i] {
                s -= self.values[k] * y[self.col_idx[k]];
            }
            y[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for k in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[k] * y[self.col_idx[k]];
            }
            y[i] = s / self.values[self.diag[i]];
        }
        y
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Right-preconditioned restarted GMRES. Returns `(x, iterations, residual)`.
pub fn gmres(
    a: &CsrMatrix<Complex64>,
    b: &[Complex64],
    precond: &Ilu0,
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> (Vec<Complex64>, usize, f64) {
    let n = a.dim();
    let zero = Complex64::new(0.0, 0.0);
    let nb = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![zero; n];
    let mut total = 0;
    let restart = restart.max(1);
    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / nb <= tol || total >= max_iterations {
            return (x, total, beta / nb);
        }
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(f64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut inner = 0;
        while inner < restart && total < max_iterations {
            let z = precond.apply(&v[inner]);
            let mut w = a.mul_vec(&z);
            let mut col = vec![zero; inner + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            col[inner + 1] = Complex64::new(hn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let t = c * col[i] + s * col[i + 1];
                col[i + 1] = -s.conj() * col[i] + c * col[i + 1];
                col[i] = t;
            }
            // Givens rotation zeroing the subdiagonal entry
            let (aa, bb) = (col[inner], col[inner + 1]);
            let rad = (aa.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if aa.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let phase = aa / aa.norm();
                (aa.norm() / rad, phase * bb.conj() / rad)
            };
            col[inner] = c * aa + s * bb;
            col[inner + 1] = zero;
            cs.push((c, s));
            let gi = g[inner];
            g.push(-s.conj() * gi);
            g[inner] = c * gi;
            hess.push(col);
            inner += 1;
            total += 1;
            if g[inner].norm() / nb <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution on the upper triangular system
        let mut y = vec![zero; inner];
        for i in (0..inner).rev() {
            let mut s = g[i];
            for j in i + 1..inner {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![zero; n];
        for (j, yj) in y.iter().enumerate() {
            for (u, vj) in update.iter_mut().zip(&v[j]) {
                *u += yj * vj;
            }
        }
        let dz = precond.apply(&update);
        for (xi, d) in x.iter_mut().zip(&dz) {
            *xi += d;
        }
    }
}

/// Solves `Ax = b` according to `opts`.
pub fn solve(a: &CsrMatrix<Complex64>, b: &[Complex64], opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    let n = a.dim();
    if b.len() != n {
        return Err(SolveError::Dimension { matrix: n, rhs: b.len() });
    }
    let start = Instant::now();
    let kind = if opts.kind == SolverKind::Direct && n <= opts.gmres_threshold { SolverKind::Direct } else { SolverKind::Gmres };
    let (x, res, stats) = match kind {
        SolverKind::Direct => {
            let mut solver = DirectSolver::new(a, opts.sequential)?;
            let (x, res, steps) = match solver.solve(b) {
                Ok(r) => r,
                Err(SolveError::Singular { .. }) if solver.factorization() == Factorization::Lblt => {
                    // pivoting confined to supernodes can break down where LU does not
                    solver = DirectSolver::new_lu(a, opts.sequential)?;
                    solver.solve(b)?
                }
                Err(e) => return Err(e),
            };
            let stats = SolveStats {
                matrix_nnz: a.nnz(),
                factorization: Some(solver.factorization()),
                fill_in: solver.fill_in(),
                peak_memory_bytes: None,
                iterations: None,
                refinement_steps: steps,
            };
            (x, res, stats)
        }
        SolverKind::Gmres => {
            let ilu = Ilu0::new(a)?;
            let (x, it, _) = gmres(a, b, &ilu, opts.tolerance, opts.restart, opts.max_iterations);
            let res = relative_residual(a, &x, b);
            if !(res <= opts.tolerance) {
                return Err(SolveError::NotConverged { iterations: it, residual: res });
            }
            let stats = SolveStats {
                matrix_nnz: a.nnz(),
                factorization: None,
                fill_in: Some(0),
                peak_memory_bytes: None,
                iterations: Some(it),
                refinement_steps: 0,
            };
            (x, res, stats)
        }
    };
    let stats = SolveStats { peak_memory_bytes: peak_memory_bytes(), ..stats };
    Ok(SolveReport {
        solution: DiscreteField::from_coefficients(x),
        relative_residual: res,
        kind,
        stats,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_returns_the_rhs() {
        let a = CsrMatrix::identity(5, c(1.0, 0.0));
        let b: Vec<Complex64> = (0..5).map(|i| c(i as f64, -1.0)).collect();
        let r = solve(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(r.solution.coefficients, b);
        assert_eq!(r.relative_residual, 0.0);
    }

    #[test]
    fn diagonal_complex_system() {
        let mut t = TripletBuilder::new(2);
        t.push(0, 0, c(0.0, 1.0));
        t.push(1, 1, c(2.0, 0.0));
        let a = t.into_csr();
        let b = [c(0.0, 1.0), c(4.0, 0.0)];
        for kind in [SolverKind::Direct, SolverKind::Gmres] {
            let opts = SolverOptions { kind, ..Default::default() };
            let x = solve(&a, &b, &opts).unwrap().solution.coefficients;
            assert!((x[0] - c(1.0, 0.0)).norm() < 1e-14);
            assert!((x[1] - c(2.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut t = TripletBuilder::new(3);
        t.push(0, 0, c(1.0, 0.0));
        t.push(1, 1, c(1.0, 0.0));
        t.push(2, 0, c(1.0, 0.0));
        let a = t.into_csr();
        let err = solve(&a, &[c(1.0, 0.0); 3], &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::Singular { .. }), "{err:?}");
        assert!(matches!(
            solve(&a, &[c(1.0, 0.0); 2], &SolverOptions::default()),
            Err(SolveError::Dimension { .. })
        ));
    }

    #[test]
    fn gmres_matches_direct_on_an_indefinite_stencil() {
        let n = 60;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.push(i, i, c(2.0 - 0.5, 0.05));
            if i > 0 {
                t.push(i, i - 1, c(-1.0, 0.0));
                t.push(i - 1, i, c(-1.0, 0.0));
            }
        }
        let a = t.into_csr();
        let b: Vec<Complex64> = (0..n).map(|i| c((i as f64).sin(), 0.3)).collect();
        let d = solve(&a, &b, &SolverOptions::default()).unwrap();
        let opts = SolverOptions { kind: SolverKind::Gmres, tolerance: 1e-12, restart: 10, ..Default::default() };
        let g = solve(&a, &b, &opts).unwrap();
        assert!(g.relative_residual <= 1e-12);
        let diff = norm(&d.solution.coefficients.iter().zip(&g.solution.coefficients).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(diff / norm(&d.solution.coefficients) < 1e-9);
        assert!(g.stats.iterations.unwrap() > 0);
    }

    #[test]
    fn factorization_handle_is_reusable_and_deterministic() {
        let n = 30;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.push(i, i, c(3.0, 1.0));
            t.push(i, (i * 7 + 3) % n, c(0.5, -0.25));
        }
        let a = t.into_csr();
        let s = DirectSolver::new(&a, true).unwrap();
        let b1: Vec<Complex64> = (0..n).map(|i| c(i as f64, 0.0)).collect();
        let b2: Vec<Complex64> = (0..n).map(|i| c(0.0, 1.0 / (1.0 + i as f64))).collect();
        let (x1, r1, _) = s.solve(&b1).unwrap();
        let (x2, r2, _) = s.solve(&b2).unwrap();
        assert!(r1 <= DIRECT_TOLERANCE && r2 <= DIRECT_TOLERANCE);
        assert_eq!(s.solve(&b1).unwrap().0, x1);
        let again = solve(&a, &b2, &SolverOptions::default()).unwrap();
        assert_eq!(again.solution.coefficients, x2);
    }

    #[test]
    fn symmetric_matrices_take_the_lblt_path() {
        // indefinite, complex symmetric, with a zero diagonal entry that
        // forces a 2x2 pivot
        let n = 40;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.push(i, i, if i == 7 { c(0.0, 0.0) } else { c(1.0 - 0.1 * i as f64, 0.02) });
            if i > 0 {
                t.push(i, i - 1, c(-1.0, 0.1));
                t.push(i - 1, i, c(-1.0, 0.1));
            }
        }
        let a = t.into_csr();
        let b: Vec<Complex64> = (0..n).map(|i| c(1.0, (i as f64).cos())).collect();
        let s = DirectSolver::new(&a, true).unwrap();
        assert_eq!(s.factorization(), Factorization::Lblt);
        assert!(s.fill_in().is_some());
        let lu = DirectSolver::new_lu(&a, true).unwrap();
        let (x, r, _) = s.solve(&b).unwrap();
        let (y, _, _) = lu.solve(&b).unwrap();
        assert!(r <= DIRECT_TOLERANCE);
        let d: Vec<Complex64> = x.iter().zip(&y).map(|(x, y)| x - y).collect();
        assert!(norm(&d) <= 1e-10 * norm(&y));
        let report = solve(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(report.stats.factorization, Some(Factorization::Lblt));
    }

    #[test]
    fn unsymmetric_matrices_take_the_lu_path() {
        let mut t = TripletBuilder::new(2);
        t.push(0, 0, c(1.0, 0.0));
        t.push(0, 1, c(2.0, 0.0));
        t.push(1, 1, c(1.0, 1.0));
        let a = t.into_csr();
        assert_eq!(DirectSolver::new(&a, true).unwrap().factorization(), Factorization::Lu);
    }
}
