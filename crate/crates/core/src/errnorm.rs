//! Error functionals: H¹-seminorm, L², jump seminorm and the composite norms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemble::AssembleError;
use crate::element::{lagrange_basis, QuadRule, TensorBasis};
use crate::field::{DiscreteField, Field};
use crate::grid::{Axis, DofMap, Mesh};
use crate::penalty::{PenaltySet, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `‖∇(u - u_h)‖`
    pub h1_semi_abs: f64,
    pub h1_semi_rel: f64,
    /// `‖u - u_h‖`
    pub l2_abs: f64,
    pub l2_rel: f64,
    /// `(Σ_j Σ_e |γ_j| h^{2j-1} ‖[∂ʲu_h/∂nʲ]‖²_e)^{1/2}`
    pub jump_semi: f64,
    /// `(‖u - u_h‖₁² + jump²)^{1/2}`
    pub e_gamma: f64,
    /// `(e_gamma² + k²‖u - u_h‖²)^{1/2}`
    pub e_gamma_big: f64,
    pub exact_h1_semi: f64,
    pub exact_l2: f64,
    pub dofs: usize,
    pub k: f64,
    pub p: usize,
    pub m: usize,
    pub gamma_provenance: Provenance,
}

/// Squared norms of `u`, and of `u - u_h`, by element quadrature.
fn integrals(mesh: &Mesh, dofs: &DofMap, uh: &DiscreteField, exact: &dyn Field, quad: &QuadRule) -> [f64; 4] {
    let p = dofs.order();
    let basis = TensorBasis::new(p);
    let pts: Vec<(f64, f64)> = quad.iter().collect();
    let h2 = mesh.h() * mesh.h();
    let per: Vec<[f64; 4]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut acc = [0.0; 4];
            for &(y, wy) in &pts {
                for &(x, wx) in &pts {
                    let w = wx * wy * h2;
                    let refp = [x, y];
                    let phys = mesh.map_point(e, refp);
                    let (v, g) = uh.evaluate(mesh, dofs, &basis, e, refp);
                    let u = exact.value(phys);
                    let gu = exact.gradient(phys);
                    acc[0] += w * (gu[0].norm_sqr() + gu[1].norm_sqr());
                    acc[1] += w * u.norm_sqr();
                    acc[2] += w * ((gu[0] - g[0]).norm_sqr() + (gu[1] - g[1]).norm_sqr());
                    acc[3] += w * (u - v).norm_sqr();
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for a in per {
        for i in 0..4 {
            total[i] += a[i];
        }
    }
    total
}

/// Jump seminorm of `uh` weighted by `|γ_{j,e}|`, by edge quadrature of the
/// one-sided traces. On these grids `h^{2j-1}`, the two `h^{-j}` derivative
/// scalings and the edge length cancel.
pub fn jump_seminorm(mesh: &Mesh, dofs: &DofMap, uh: &DiscreteField, gamma: &PenaltySet, quad: &QuadRule) -> Result<f64, AssembleError> {
    if !dofs.matches(mesh) {
        return Err(AssembleError::MeshMismatch);
    }
    let p = dofs.order();
    if gamma.order() > p {
        return Err(AssembleError::PenaltyOrder { gamma: gamma.order(), p });
    }
    if gamma.is_zero() || gamma.order() == 0 {
        return Ok(0.0);
    }
    let basis = lagrange_basis(p);
    let n1 = p + 1;
    let along: Vec<(f64, Vec<f64>)> = quad.iter().map(|(s, w)| (w, basis.eval(0, s))).collect();
    let traces: Vec<(Vec<f64>, Vec<f64>)> = (1..=gamma.order()).map(|j| (basis.eval(j, 1.0), basis.eval(j, 0.0))).collect();
    let per_edge: Vec<f64> = mesh
        .interior_edges()
        .par_iter()
        .enumerate()
        .map(|(ei, e)| {
            let local = |a: usize, b: usize| match e.axis {
                Axis::X => a + n1 * b,
                Axis::Y => b + n1 * a,
            };
            let ul = |l: usize| uh.coefficients[dofs.global_index(e.left, l)];
            let ur = |l: usize| uh.coefficients[dofs.global_index(e.right, l)];
            let mut acc = 0.0;
            for (jm, (at1, at0)) in traces.iter().enumerate() {
                let w = gamma.value(ei, jm + 1).norm();
                if w == 0.0 {
                    continue;
                }
                for (qw, phi) in &along {
                    let mut jump = Complex64::new(0.0, 0.0);
                    for b in 0..n1 {
                        let mut across = Complex64::new(0.0, 0.0);
                        for a in 0..n1 {
                            across += ur(local(a, b)) * at0[a] - ul(local(a, b)) * at1[a];
                        }
                        jump += across * phi[b];
                    }
                    acc += w * qw * jump.norm_sqr();
                }
            }
            acc
        })
        .collect();
    Ok(per_edge.iter().sum::<f64>().sqrt())
}

/// Errors of `uh` against `exact`. The quadrature should have at least
/// `p + 2` points.
pub fn error_report(
    mesh: &Mesh,
    dofs: &DofMap,
    uh: &DiscreteField,
    exact: &dyn Field,
    k: f64,
    gamma: &PenaltySet,
    quad: &QuadRule,
) -> Result<ErrorReport, AssembleError> {
    if !dofs.matches(mesh) {
        return Err(AssembleError::MeshMismatch);
    }
    let [ug, ul, eg, el] = integrals(mesh, dofs, uh, exact, quad);
    let jump = jump_seminorm(mesh, dofs, uh, gamma, quad)?;
    let h1_semi_abs = eg.sqrt();
    let l2_abs = el.sqrt();
    let exact_h1_semi = ug.sqrt();
    let exact_l2 = ul.sqrt();
    let e_gamma = (eg + el + jump * jump).sqrt();
    Ok(ErrorReport {
        h1_semi_abs,
        h1_semi_rel: h1_semi_abs / exact_h1_semi,
        l2_abs,
        l2_rel: l2_abs / exact_l2,
        jump_semi: jump,
        e_gamma,
        e_gamma_big: (e_gamma * e_gamma + k * k * el).sqrt(),
        exact_h1_semi,
        exact_l2,
        dofs: dofs.total(),
        k,
        p: dofs.order(),
        m: mesh.m(),
        gamma_provenance: gamma.provenance(),
    })
}

/// Errors of the nodal Lagrange interpolant of `exact` (no jump term).
pub fn interpolation_error(mesh: &Mesh, dofs: &DofMap, exact: &dyn Field, k: f64, quad: &QuadRule) -> Result<ErrorReport, AssembleError> {
    let ih = DiscreteField::interpolate(dofs, exact);
    error_report(mesh, dofs, &ih, exact, k, &PenaltySet::zero(dofs.order()), quad)
}
