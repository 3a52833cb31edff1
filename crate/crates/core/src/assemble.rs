//! Sparse assembly of the Helmholtz system `S + J - k²M + ikB` and its load vector.
//!
//! Every element of a Cartesian grid is the same square up to translation, so
//! element and edge matrices are computed once on the reference square and
//! scattered. All entries are sums of tensor products of 1D reference
//! integrals.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::element::{lagrange_basis, reference_matrix_1d, Basis1D, QuadRule, TensorBasis};
use crate::grid::{Axis, DofMap, Edge, Mesh, Side};
use crate::manufactured::{ExactSolution, ManufacturedError};
use crate::penalty::PenaltySet;
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssembleError {
    #[error("degree-of-freedom map does not belong to this mesh")]
    MeshMismatch,
    #[error("penalty set has order {gamma} but the elements have order {p}")]
    PenaltyOrder { gamma: usize, p: usize },
    #[error("quadrature with {got} points cannot integrate order-{p} products exactly")]
    Quadrature { got: usize, p: usize },
    #[error(transparent)]
    Data(#[from] ManufacturedError),
}

/// Real symmetric blocks shared by the FEM and CIP systems.
#[derive(Debug, Clone)]
pub struct SystemBlocks {
    /// `(∇u, ∇v)`
    pub stiffness: CsrMatrix<f64>,
    /// `(u, v)`
    pub mass: CsrMatrix<f64>,
    /// `<u, v>` on the boundary
    pub boundary: CsrMatrix<f64>,
}

impl SystemBlocks {
    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }
}

fn check(mesh: &Mesh, dofs: &DofMap) -> Result<(), AssembleError> {
    if dofs.matches(mesh) {
        Ok(())
    } else {
        Err(AssembleError::MeshMismatch)
    }
}

fn check_quad(p: usize, quad: &QuadRule) -> Result<(), AssembleError> {
    if quad.len() < p + 1 {
        return Err(AssembleError::Quadrature { got: quad.len(), p });
    }
    Ok(())
}

struct Reference1D {
    mass: Vec<Vec<f64>>,
    stiff: Vec<Vec<f64>>,
}

impl Reference1D {
    fn new(basis: &Basis1D, quad: &QuadRule) -> Self {
        Self { mass: reference_matrix_1d(basis, 0, 0, quad), stiff: reference_matrix_1d(basis, 1, 1, quad) }
    }
}

/// Scatters a dense local matrix for every element in parallel, keeping
/// element order so the result does not depend on scheduling.
fn scatter_elements<T: crate::sparse::Scalar>(
    dofs: &DofMap,
    elements: &[usize],
    local: &[Vec<T>],
) -> TripletBuilder<T> {
    let n = local.len();
    let chunks: Vec<Vec<(usize, usize, T)>> = elements
        .par_chunks(256)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len() * n * n);
            for &e in chunk {
                let g = dofs.element_dofs(e);
                for a in 0..n {
                    for b in 0..n {
                        let v = local[a][b];
                        if v != T::default() {
                            out.push((g[a], g[b], v));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut builder = TripletBuilder::with_capacity(dofs.total(), chunks.iter().map(Vec::len).sum());
    for c in chunks {
        for (r, col, v) in c {
            builder.push(r, col, v);
        }
    }
    builder
}

/// Stiffness, mass and boundary mass matrices.
pub fn assemble_blocks(mesh: &Mesh, dofs: &DofMap, quad: &QuadRule) -> Result<SystemBlocks, AssembleError> {
    check(mesh, dofs)?;
    let p = dofs.order();
    check_quad(p, quad)?;
    let basis = lagrange_basis(p);
    let r = Reference1D::new(&basis, quad);
    let n1 = p + 1;
    let nl = n1 * n1;
    let h = mesh.h();

    let mut s_loc = vec![vec![0.0; nl]; nl];
    let mut m_loc = vec![vec![0.0; nl]; nl];
    for b in 0..n1 {
        for a in 0..n1 {
            for d in 0..n1 {
                for c in 0..n1 {
                    let row = a + n1 * b;
                    let col = c + n1 * d;
                    s_loc[row][col] = r.stiff[a][c] * r.mass[b][d] + r.mass[a][c] * r.stiff[b][d];
                    m_loc[row][col] = h * h * r.mass[a][c] * r.mass[b][d];
                }
            }
        }
    }
    let elements: Vec<usize> = (0..mesh.n_elements()).collect();
    let stiffness = scatter_elements(dofs, &elements, &s_loc).into_csr();
    let mass = scatter_elements(dofs, &elements, &m_loc).into_csr();

    let mut bb = TripletBuilder::new(dofs.total());
    for be in mesh.boundary_edges() {
        let g = dofs.element_dofs(be.element);
        // local indices of the nodes on this side, ordered along the edge
        let along: Vec<usize> = (0..n1)
            .map(|s| match be.side {
                Side::West => n1 * s,
                Side::East => p + n1 * s,
                Side::South => s,
                Side::North => s + n1 * p,
            })
            .collect();
        for (s, &la) in along.iter().enumerate() {
            for (t, &lb) in along.iter().enumerate() {
                bb.push(g[la], g[lb], h * r.mass[s][t]);
            }
        }
    }
    Ok(SystemBlocks { stiffness, mass, boundary: bb.into_csr() })
}

/// One-sided trace data for the order-`j` normal derivative jump across an
/// edge, on the reference element: entry `a` multiplies the 1D basis function
/// across the edge.
///
/// Returns `(minus side, plus side)` factors already carrying the jump sign,
/// jump = plus - minus.
fn jump_factors(basis: &Basis1D, j: usize, flipped: bool) -> (Vec<f64>, Vec<f64>) {
    // left element sees the edge at reference coordinate 1, right at 0
    let left: Vec<f64> = basis.eval(j, 1.0);
    let right: Vec<f64> = basis.eval(j, 0.0);
    if !flipped {
        (left.iter().map(|v| -v).collect(), right)
    } else {
        // normal reversed: the left element becomes the plus side and each
        // derivative along the normal picks up a factor -1
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        let minus: Vec<f64> = right.iter().map(|v| -s * v).collect();
        let plus: Vec<f64> = left.iter().map(|v| s * v).collect();
        (plus, minus)
    }
}

/// Dense edge matrix on the `2 (p+1)²` DOFs of (left element, right element)
/// for unit weight on order `j`. Independent of `h`: the `h^{2j-1}` weight,
/// the `h^{-2j}` from the two derivatives and the `h` edge length cancel.
fn unit_edge_matrix(basis: &Basis1D, axis: Axis, j: usize, along: &[Vec<f64>], flipped: bool) -> Vec<Vec<f64>> {
    let n1 = basis.len();
    let nl = n1 * n1;
    let (fl, fr) = jump_factors(basis, j, flipped);
    // full[s] for s in {left, right}: factor per local node, combined with a
    // 1D index along the edge
    let local = |a: usize, b: usize| a + n1 * b;
    let mut out = vec![vec![0.0; 2 * nl]; 2 * nl];
    let sides = [&fl, &fr];
    for (si, fs) in sides.iter().enumerate() {
        for (ti, ft) in sides.iter().enumerate() {
            for an in 0..n1 {
                for bn in 0..n1 {
                    for s in 0..n1 {
                        for t in 0..n1 {
                            let v = fs[an] * ft[bn] * along[s][t];
                            let (row, col) = match axis {
                                Axis::X => (local(an, s), local(bn, t)),
                                Axis::Y => (local(s, an), local(t, bn)),
                            };
                            out[si * nl + row][ti * nl + col] += v;
                        }
                    }
                }
            }
        }
    }
    out
}

fn penalty_impl(
    mesh: &Mesh,
    dofs: &DofMap,
    weight: &(dyn Fn(usize, usize) -> Complex64 + Sync),
    orders: std::ops::RangeInclusive<usize>,
    quad: &QuadRule,
    flipped: bool,
) -> CsrMatrix<Complex64> {
    let p = dofs.order();
    let basis = lagrange_basis(p);
    let along = reference_matrix_1d(&basis, 0, 0, quad);
    let units: Vec<[Vec<Vec<f64>>; 2]> = orders
        .clone()
        .map(|j| {
            [
                unit_edge_matrix(&basis, Axis::X, j, &along, flipped),
                unit_edge_matrix(&basis, Axis::Y, j, &along, flipped),
            ]
        })
        .collect();
    let j0 = *orders.start();
    let edges: &[Edge] = mesh.interior_edges();
    let n1 = p + 1;
    let nl = n1 * n1;
    let chunks: Vec<Vec<(usize, usize, Complex64)>> = edges
        .par_chunks(256)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut out = Vec::new();
            for (off, e) in chunk.iter().enumerate() {
                let ei = ci * 256 + off;
                let mut g = dofs.element_dofs(e.left);
                g.extend(dofs.element_dofs(e.right));
                let ax = match e.axis {
                    Axis::X => 0,
                    Axis::Y => 1,
                };
                for r in 0..2 * nl {
                    for c in 0..2 * nl {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (u, unit) in units.iter().enumerate() {
                            let v = unit[ax][r][c];
                            if v != 0.0 {
                                acc += weight(ei, j0 + u) * v;
                            }
                        }
                        if acc != Complex64::new(0.0, 0.0) {
                            out.push((g[r], g[c], acc));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut b = TripletBuilder::new(dofs.total());
    for c in chunks {
        for (r, col, v) in c {
            b.push(r, col, v);
        }
    }
    b.into_csr()
}

/// Jump penalty matrix `J` for the parameter set `gamma`.
pub fn assemble_penalty(
    mesh: &Mesh,
    dofs: &DofMap,
    gamma: &PenaltySet,
    quad: &QuadRule,
) -> Result<CsrMatrix<Complex64>, AssembleError> {
    check(mesh, dofs)?;
    let p = dofs.order();
    if gamma.order() > p {
        return Err(AssembleError::PenaltyOrder { gamma: gamma.order(), p });
    }
    check_quad(p, quad)?;
    if gamma.is_zero() || gamma.order() == 0 {
        return Ok(CsrMatrix::zeros(dofs.total()));
    }
    Ok(penalty_impl(mesh, dofs, &|e, j| gamma.value(e, j), 1..=gamma.order(), quad, false))
}

/// Same as [`assemble_penalty`] with every edge normal reversed.
pub fn assemble_penalty_flipped(
    mesh: &Mesh,
    dofs: &DofMap,
    gamma: &PenaltySet,
    quad: &QuadRule,
) -> Result<CsrMatrix<Complex64>, AssembleError> {
    check(mesh, dofs)?;
    let p = dofs.order();
    if gamma.order() > p {
        return Err(AssembleError::PenaltyOrder { gamma: gamma.order(), p });
    }
    check_quad(p, quad)?;
    Ok(penalty_impl(mesh, dofs, &|e, j| gamma.value(e, j), 1..=gamma.order(), quad, true))
}

/// Order-`j` jump term with unit weight, as a real matrix.
pub fn assemble_penalty_order(mesh: &Mesh, dofs: &DofMap, j: usize, quad: &QuadRule) -> Result<CsrMatrix<f64>, AssembleError> {
    check(mesh, dofs)?;
    let p = dofs.order();
    if j == 0 || j > p {
        return Err(AssembleError::PenaltyOrder { gamma: j, p });
    }
    check_quad(p, quad)?;
    let one = |_: usize, _: usize| Complex64::new(1.0, 0.0);
    Ok(penalty_impl(mesh, dofs, &one, j..=j, quad, false).map(|v| v.re))
}

/// Load vector `(f, v) + <g, v>` for a source `f` and boundary data
/// `g(point, outward normal)`.
pub fn assemble_rhs<F, G>(mesh: &Mesh, dofs: &DofMap, quad: &QuadRule, f: F, g: G) -> Result<Vec<Complex64>, AssembleError>
where
    F: Fn([f64; 2]) -> Complex64 + Sync,
    G: Fn([f64; 2], [f64; 2]) -> Result<Complex64, ManufacturedError> + Sync,
{
    check(mesh, dofs)?;
    let p = dofs.order();
    let tb = TensorBasis::new(p);
    let basis = tb.one_d();
    let h = mesh.h();
    let n1 = p + 1;

    let pts: Vec<(f64, f64)> = quad.iter().collect();
    let mut table: Vec<([f64; 2], f64, Vec<f64>)> = Vec::with_capacity(pts.len() * pts.len());
    for &(y, wy) in &pts {
        for &(x, wx) in &pts {
            table.push(([x, y], wx * wy, tb.eval(0, 0, [x, y])));
        }
    }
    let per_element: Vec<Vec<Complex64>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut loc = vec![Complex64::new(0.0, 0.0); n1 * n1];
            for (refp, w, phi) in &table {
                let fv = f(mesh.map_point(e, *refp)) * (w * h * h);
                for (l, v) in loc.iter_mut().enumerate() {
                    *v += fv * phi[l];
                }
            }
            loc
        })
        .collect();
    let mut b = vec![Complex64::new(0.0, 0.0); dofs.total()];
    for (e, loc) in per_element.iter().enumerate() {
        for (l, v) in loc.iter().enumerate() {
            b[dofs.global_index(e, l)] += *v;
        }
    }

    for be in mesh.boundary_edges() {
        let normal = be.side.outward_normal();
        for &(s, w) in &pts {
            let refp = match be.side {
                Side::West => [0.0, s],
                Side::East => [1.0, s],
                Side::South => [s, 0.0],
                Side::North => [s, 1.0],
            };
            let gv = g(mesh.map_point(be.element, refp), normal)? * (w * h);
            let phi = basis.eval(0, s);
            for (t, &ph) in phi.iter().enumerate() {
                let l = match be.side {
                    Side::West => n1 * t,
                    Side::East => p + n1 * t,
                    Side::South => t,
                    Side::North => t + n1 * p,
                };
                b[dofs.global_index(be.element, l)] += gv * ph;
            }
        }
    }
    Ok(b)
}

/// Load vector of the manufactured problem with exact solution `exact`.
pub fn manufactured_rhs(mesh: &Mesh, dofs: &DofMap, exact: &ExactSolution, quad: &QuadRule) -> Result<Vec<Complex64>, AssembleError> {
    assemble_rhs(mesh, dofs, quad, |x| Complex64::new(exact.source(x), 0.0), |x, n| exact.robin_g(x, n))
}

/// `S + J - k²M + ikB`, summed entrywise in that order.
pub fn combined_system(blocks: &SystemBlocks, k: f64, jump: &CsrMatrix<Complex64>) -> CsrMatrix<Complex64> {
    let n = blocks.dim();
    assert_eq!(jump.dim(), n, "jump matrix dimension");
    let k2 = k * k;
    let mut b = TripletBuilder::with_capacity(n, blocks.stiffness.nnz() + blocks.mass.nnz() + blocks.boundary.nnz() + jump.nnz());
    for i in 0..n {
        for (j, v) in blocks.stiffness.row(i) {
            b.push(i, j, Complex64::new(v, 0.0));
        }
        for (j, v) in jump.row(i) {
            b.push(i, j, v);
        }
        for (j, v) in blocks.mass.row(i) {
            b.push(i, j, Complex64::new(-k2 * v, 0.0));
        }
        for (j, v) in blocks.boundary.row(i) {
            b.push(i, j, Complex64::new(0.0, k * v));
        }
    }
    b.into_csr()
}

/// The FEM matrix `S - k²M + ikB`.
pub fn fem_system(blocks: &SystemBlocks, k: f64) -> CsrMatrix<Complex64> {
    combined_system(blocks, k, &CsrMatrix::zeros(blocks.dim()))
}
