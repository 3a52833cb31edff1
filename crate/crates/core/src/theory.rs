//! Numerical checks of the discrete elliptic operator `A_h`, the discrete
//! Sobolev norms `‖v‖_{j,h} = ‖A_h^{j/2} v‖₀`, and the coercivity threshold of
//! the penalized stiffness form.
//!
//! Everything here is dense and meant for small meshes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{assemble_blocks, assemble_penalty_order, AssembleError};
use crate::element::gauss_rule;
use crate::field::DiscreteField;
use crate::grid::{DofMap, GridError, Mesh};
use crate::penalty::gamma_optimal;
use crate::sparse::CsrMatrix;

/// Largest system handled by the dense eigensolver.
pub const MAX_DENSE_DOFS: usize = 2500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("{0} unknowns exceed the dense limit of {MAX_DENSE_DOFS}")]
    TooLarge(usize),
    #[error("mass matrix is not positive definite")]
    MassNotDefinite,
    #[error("penalized form is still coercive at gamma = {0}; no threshold in the bracket")]
    NoThreshold(f64),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let n = a.dim();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            out[(i, j)] = v;
        }
    }
    out
}

/// Solution of `(S + M) x = λ M x` with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub m: usize,
    pub p: usize,
    /// ascending
    pub eigenvalues: Vec<f64>,
    /// columns are eigenvectors
    pub eigenvectors: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Coefficients of `v` in the eigenbasis, `X^T M v`.
    pub fn coordinates(&self, v: &DiscreteField) -> Vec<Complex64> {
        let n = self.eigenvalues.len();
        let re = DVector::from_iterator(n, v.coefficients.iter().map(|z| z.re));
        let im = DVector::from_iterator(n, v.coefficients.iter().map(|z| z.im));
        let xm = self.eigenvectors.transpose() * &self.mass;
        let a = &xm * re;
        let b = &xm * im;
        (0..n).map(|i| Complex64::new(a[i], b[i])).collect()
    }

    /// `max |X^T M X - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.mass * &self.eigenvectors;
        let n = g.nrows();
        (g - DMatrix::identity(n, n)).amax()
    }

    /// Multiplicities of the spectrum, grouping eigenvalues within `rel_tol`.
    pub fn multiplicities(&self, rel_tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &l in &self.eigenvalues {
            match out.last_mut() {
                Some((v, c)) if (l - *v).abs() <= rel_tol * v.abs().max(1.0) => *c += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }
}

/// Full generalized eigendecomposition of `A_h` via Cholesky reduction of `M`.
pub fn spectral_decomposition(mesh: &Mesh, dofs: &DofMap) -> Result<SpectralDecomposition, TheoryError> {
    let n = dofs.total();
    if n > MAX_DENSE_DOFS {
        return Err(TheoryError::TooLarge(n));
    }
    let p = dofs.order();
    let quad = gauss_rule(p + 1).expect("valid rule");
    let blocks = assemble_blocks(mesh, dofs, &quad)?;
    let s = dense(&blocks.stiffness);
    let m = dense(&blocks.mass);
    let chol = m.clone().cholesky().ok_or(TheoryError::MassNotDefinite)?;
    let l = chol.l();
    let a = &s + &m;
    // C = L^{-1} A L^{-T}
    let y = l.solve_lower_triangular(&a).ok_or(TheoryError::MassNotDefinite)?;
    let c = l.solve_lower_triangular(&y.transpose()).ok_or(TheoryError::MassNotDefinite)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    let lt = l.transpose();
    let eigenvectors = lt.solve_upper_triangular(&vecs).ok_or(TheoryError::MassNotDefinite)?;
    Ok(SpectralDecomposition { m: mesh.m(), p, eigenvalues, eigenvectors, stiffness: s, mass: m })
}

/// `‖v‖_{j,h} = (Σ λ_i^j |a_i|²)^{1/2}`; negative `j` allowed.
pub fn discrete_norm(v: &DiscreteField, j: i32, spec: &SpectralDecomposition) -> f64 {
    let a = spec.coordinates(v);
    spec.eigenvalues.iter().zip(&a).map(|(l, a)| l.powi(j) * a.norm_sqr()).sum::<f64>().sqrt()
}

/// Applies `A_h^{s}` to `v` through the eigenbasis.
pub fn apply_power(v: &DiscreteField, s: f64, spec: &SpectralDecomposition) -> DiscreteField {
    let a = spec.coordinates(v);
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, ai) in a.iter().enumerate() {
        let f = ai * spec.eigenvalues[i].powf(s);
        for (r, o) in out.iter_mut().enumerate() {
            *o += f * spec.eigenvectors[(r, i)];
        }
    }
    DiscreteField::from_coefficients(out)
}

fn bilinear(a: &DMatrix<f64>, v: &[Complex64], w: &[Complex64]) -> Complex64 {
    // w^H A v
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let aij = a[(i, j)];
            if aij != 0.0 {
                row += v[j] * aij;
            }
        }
        acc += w[i].conj() * row;
    }
    acc
}

/// `‖v‖₀ = (v^H M v)^{1/2}`.
pub fn l2_norm(v: &DiscreteField, spec: &SpectralDecomposition) -> f64 {
    bilinear(&spec.mass, &v.coefficients, &v.coefficients).re.sqrt()
}

/// `‖v‖₁ = (v^H (S + M) v)^{1/2}`.
pub fn h1_norm(v: &DiscreteField, spec: &SpectralDecomposition) -> f64 {
    let a = &spec.stiffness + &spec.mass;
    bilinear(&a, &v.coefficients, &v.coefficients).re.sqrt()
}

/// Relative defect of `(A_h v, w) = a(v, w) + (v, w)` with `A_h = M⁻¹(S + M)`
/// applied by a mass solve.
pub fn operator_identity_defect(v: &DiscreteField, w: &DiscreteField, spec: &SpectralDecomposition) -> f64 {
    let n = v.len();
    let a = &spec.stiffness + &spec.mass;
    let chol = spec.mass.clone().cholesky().expect("mass is positive definite");
    let re = DVector::from_iterator(n, v.coefficients.iter().map(|z| z.re));
    let im = DVector::from_iterator(n, v.coefficients.iter().map(|z| z.im));
    let ar = chol.solve(&(&a * re));
    let ai = chol.solve(&(&a * im));
    let ahv: Vec<Complex64> = (0..n).map(|i| Complex64::new(ar[i], ai[i])).collect();
    let lhs = bilinear(&spec.mass, &ahv, &w.coefficients);
    let rhs = bilinear(&a, &v.coefficients, &w.coefficients);
    (lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityResult {
    pub m: usize,
    pub p: usize,
    pub gamma0: f64,
    pub bracket_width: f64,
}

/// Unit-weight jump matrices for orders `1..=p`, dense.
fn unit_jumps(mesh: &Mesh, dofs: &DofMap) -> Result<Vec<DMatrix<f64>>, TheoryError> {
    let p = dofs.order();
    let q = gauss_rule(p + 1).expect("valid rule");
    (1..=p).map(|j| Ok(dense(&assemble_penalty_order(mesh, dofs, j, &q)?))).collect()
}

/// Positive definiteness of `S + γ Σ_j J_j` on the `M`-orthogonal complement
/// of the constants, tested by Cholesky of `S + γ ΣJ + (M𝟙)(M𝟙)^T`.
fn coercive(s: &DMatrix<f64>, jsum: &DMatrix<f64>, m1: &DVector<f64>, gamma: f64) -> bool {
    let scale = s.amax();
    let a = s + jsum * gamma + (m1 * m1.transpose()) * (scale / m1.norm_squared());
    a.cholesky().is_some()
}

/// Bisection in `[-10, 0]` for the most negative uniform `γ` keeping the
/// penalized stiffness form coercive, to a bracket of `1e-4`.
pub fn coercivity_threshold(mesh: &Mesh, dofs: &DofMap) -> Result<CoercivityResult, TheoryError> {
    let n = dofs.total();
    if n > MAX_DENSE_DOFS {
        return Err(TheoryError::TooLarge(n));
    }
    let p = dofs.order();
    let q = gauss_rule(p + 1).expect("valid rule");
    let blocks = assemble_blocks(mesh, dofs, &q)?;
    let s = dense(&blocks.stiffness);
    let mass = dense(&blocks.mass);
    let m1 = &mass * DVector::from_element(n, 1.0);
    let jsum = unit_jumps(mesh, dofs)?.into_iter().fold(DMatrix::zeros(n, n), |a, b| a + b);
    let (mut lo, mut hi) = (-10.0, 0.0);
    if coercive(&s, &jsum, &m1, lo) {
        return Err(TheoryError::NoThreshold(lo));
    }
    // hi is coercive (γ = 0 gives S, positive on the complement)
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if coercive(&s, &jsum, &m1, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CoercivityResult { m: mesh.m(), p, gamma0: 0.5 * (lo + hi), bracket_width: hi - lo })
}

/// Extreme values of `(v^T(S + J + M)v / v^T(S + M)v)^{1/2}` over all `v`.
pub fn norm_equivalence(mesh: &Mesh, dofs: &DofMap, gamma: &[f64]) -> Result<(f64, f64), TheoryError> {
    let n = dofs.total();
    if n > MAX_DENSE_DOFS {
        return Err(TheoryError::TooLarge(n));
    }
    let p = dofs.order();
    let q = gauss_rule(p + 1).expect("valid rule");
    let blocks = assemble_blocks(mesh, dofs, &q)?;
    let base = dense(&blocks.stiffness) + dense(&blocks.mass);
    let mut pen = base.clone();
    for (jm, jmat) in unit_jumps(mesh, dofs)?.into_iter().enumerate() {
        pen += jmat * gamma[jm];
    }
    let l = base.clone().cholesky().ok_or(TheoryError::MassNotDefinite)?.l();
    let y = l.solve_lower_triangular(&pen).ok_or(TheoryError::MassNotDefinite)?;
    let c = l.solve_lower_triangular(&y.transpose()).ok_or(TheoryError::MassNotDefinite)?;
    let c = (&c + c.transpose()) * 0.5;
    let ev = SymmetricEigen::new(c).eigenvalues;
    let lo = ev.min();
    let hi = ev.max();
    Ok((lo.max(0.0).sqrt(), hi.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub checks: Vec<TheoryCheck>,
    pub gamma0: Vec<CoercivityResult>,
    /// `(p, m, λ_max h²)`
    pub lambda_max_h2: Vec<(usize, usize, f64)>,
    /// `(p, m, largest eigenvalue multiplicity)`
    pub max_multiplicity: Vec<(usize, usize, usize)>,
}

impl TheoryReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> DiscreteField {
    DiscreteField::from_coefficients((0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
}

fn push(checks: &mut Vec<TheoryCheck>, name: String, measured: f64, passed: bool, bound: &str) {
    checks.push(TheoryCheck { name, passed, measured, bound: bound.to_string() });
}

/// Runs the full check suite over meshes `ms` (increasing) and orders `ps`.
pub fn run_theory_checks(ms: &[usize], ps: &[usize], seed: u64) -> Result<TheoryReport, TheoryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut lambda_max_h2 = Vec::new();
    let mut max_multiplicity = Vec::new();
    let mut gamma0 = Vec::new();
    for &p in ps {
        let mut prev_lh2: Option<f64> = None;
        let mut prev_g0: Option<f64> = None;
        for &m in ms {
            let mesh = Mesh::build_cartesian(m)?;
            let dofs = DofMap::new(&mesh, p)?;
            let spec = spectral_decomposition(&mesh, &dofs)?;
            let tag = format!("p={p} m={m}");

            push(&mut checks, format!("{tag}: M-orthonormal eigenvectors"), spec.orthonormality_defect(), spec.orthonormality_defect() <= 1e-10, "<= 1e-10");
            let l1 = spec.eigenvalues[0];
            push(&mut checks, format!("{tag}: lambda_1 = 1"), (l1 - 1.0).abs(), (l1 - 1.0).abs() <= 1e-10, "<= 1e-10");
            let lmin_ok = spec.eigenvalues.iter().all(|&l| l >= 1.0 - 1e-10);
            push(&mut checks, format!("{tag}: all eigenvalues >= 1"), l1, lmin_ok, ">= 1");

            let mut worst = [0.0f64; 4];
            for _ in 0..5 {
                let v = random_field(dofs.total(), &mut rng);
                let w = random_field(dofs.total(), &mut rng);
                let l2 = l2_norm(&v, &spec);
                let h1 = h1_norm(&v, &spec);
                worst[0] = worst[0].max((discrete_norm(&v, 0, &spec) - l2).abs() / l2);
                worst[1] = worst[1].max((discrete_norm(&v, 1, &spec) - h1).abs() / h1);
                let back = apply_power(&apply_power(&v, -0.5, &spec), 0.5, &spec);
                worst[2] = worst[2].max((discrete_norm(&back, 0, &spec) - l2).abs() / l2);
                worst[3] = worst[3].max(operator_identity_defect(&v, &w, &spec));
            }
            push(&mut checks, format!("{tag}: ||v||_0h = ||v||_0"), worst[0], worst[0] <= 1e-10, "<= 1e-10 rel");
            push(&mut checks, format!("{tag}: ||v||_1h = ||v||_1"), worst[1], worst[1] <= 1e-10, "<= 1e-10 rel");
            push(&mut checks, format!("{tag}: A^(1/2) A^(-1/2) v = v"), worst[2], worst[2] <= 1e-10, "<= 1e-10 rel");
            push(&mut checks, format!("{tag}: (A_h v, w) = a(v,w) + (v,w)"), worst[3], worst[3] <= 1e-10, "<= 1e-10 rel");

            let lh2 = spec.lambda_max() * spec.h() * spec.h();
            lambda_max_h2.push((p, m, lh2));
            if let Some(prev) = prev_lh2 {
                let r = lh2 / prev;
                push(&mut checks, format!("{tag}: lambda_max h^2 ratio to previous mesh"), r, (0.5..=2.0).contains(&r), "in [0.5, 2]");
            }
            prev_lh2 = Some(lh2);
            let mult = spec.multiplicities(1e-9).iter().map(|x| x.1).max().unwrap_or(1);
            max_multiplicity.push((p, m, mult));

            let c = coercivity_threshold(&mesh, &dofs)?;
            push(&mut checks, format!("{tag}: gamma_0 < 0"), c.gamma0, c.gamma0 < 0.0, "< 0");
            if let Some(prev) = prev_g0 {
                let d = (c.gamma0 - prev).abs() / prev.abs();
                push(&mut checks, format!("{tag}: gamma_0 change under refinement"), d, d <= 0.2, "<= 0.2 rel");
            }
            prev_g0 = Some(c.gamma0);
            gamma0.push(c);

            let g = gamma_optimal(p, 1.0).expect("t = 1 is in range");
            let gv: Vec<f64> = g.values().iter().map(|z| z.re).collect();
            let (lo, hi) = norm_equivalence(&mesh, &dofs, &gv)?;
            push(&mut checks, format!("{tag}: penalized H1 norm equivalence (lower)"), lo, (0.1..=10.0).contains(&lo), "in [0.1, 10]");
            push(&mut checks, format!("{tag}: penalized H1 norm equivalence (upper)"), hi, (0.1..=10.0).contains(&hi), "in [0.1, 10]");
        }
    }
    Ok(TheoryReport { checks, gamma0, lambda_max_h2, max_multiplicity })
}
