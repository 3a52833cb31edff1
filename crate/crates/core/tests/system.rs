use helmholtz_cip::assemble::{assemble_penalty_order, fem_system, manufactured_rhs};
use helmholtz_cip::linsolve::relative_residual;
use helmholtz_cip::{
    assemble_blocks, assemble_penalty, combined_system, error_report, gamma_optimal, gauss_rule, solve, Complex64, DiscreteField, DofMap,
    ExactSolution, Mesh, PenaltySet, SolverOptions,
};

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

struct Problem {
    mesh: Mesh,
    dofs: DofMap,
    a: helmholtz_cip::SparseComplexMatrix,
    b: Vec<Complex64>,
    blocks: helmholtz_cip::SystemBlocks,
}

fn build(k: f64, m: usize, p: usize, gamma: &PenaltySet) -> Problem {
    let mesh = Mesh::build_cartesian(m).unwrap();
    let dofs = DofMap::new(&mesh, p).unwrap();
    let q = gauss_rule(p + 1).unwrap();
    let blocks = assemble_blocks(&mesh, &dofs, &q).unwrap();
    let j = assemble_penalty(&mesh, &dofs, gamma, &q).unwrap();
    let a = combined_system(&blocks, k, &j);
    let u = ExactSolution::new(k).unwrap();
    let b = manufactured_rhs(&mesh, &dofs, &u, &gauss_rule(p + 2).unwrap()).unwrap();
    Problem { mesh, dofs, a, b, blocks }
}

#[test]
fn linear_system_is_solved_to_tolerance() {
    let pr = build(5.0, 32, 1, &PenaltySet::zero(1));
    let r = solve(&pr.a, &pr.b, &SolverOptions::default()).unwrap();
    assert!(r.relative_residual <= 1e-10, "{}", r.relative_residual);
    assert_eq!(relative_residual(&pr.a, &r.solution.coefficients, &pr.b), r.relative_residual);
    let again = solve(&pr.a, &pr.b, &SolverOptions::default()).unwrap();
    assert_eq!(again.solution, r.solution);
}

#[test]
fn interpolated_exact_solution_nearly_satisfies_the_system() {
    let u = ExactSolution::new(5.0).unwrap();
    for p in [1, 2] {
        let mut prev = f64::INFINITY;
        for m in [8, 16, 32] {
            let t = 5.0 / m as f64;
            let pr = build(5.0, m, p, &gamma_optimal(p, t).unwrap());
            let ih = DiscreteField::interpolate(&pr.dofs, &u);
            let res = relative_residual(&pr.a, &ih.coefficients, &pr.b);
            assert!(res < prev, "p={p} m={m}: {res} after {prev}");
            prev = res;
        }
        assert!(prev < 0.05, "p={p}: {prev}");
    }
}

#[test]
fn load_vector_is_converged_in_the_quadrature() {
    let mesh = Mesh::build_cartesian(16).unwrap();
    let dofs = DofMap::new(&mesh, 2).unwrap();
    let u = ExactSolution::new(5.0).unwrap();
    let b4 = manufactured_rhs(&mesh, &dofs, &u, &gauss_rule(4).unwrap()).unwrap();
    let b8 = manufactured_rhs(&mesh, &dofs, &u, &gauss_rule(8).unwrap()).unwrap();
    let d: Vec<Complex64> = b4.iter().zip(&b8).map(|(a, b)| a - b).collect();
    assert!(norm(&d) <= 1e-10 * norm(&b8), "{}", norm(&d) / norm(&b8));
}

#[test]
fn imaginary_energy_comes_from_the_boundary() {
    for p in 1..=3 {
        let k = 12.0;
        let m = 12;
        let pr = build(k, m, p, &gamma_optimal(p, k / m as f64).unwrap());
        let x = solve(&pr.a, &pr.b, &SolverOptions::default()).unwrap().solution.coefficients;
        let energy = pr.a.quadratic_form(&x);
        let boundary = pr.blocks.boundary.quadratic_form(&x).re * k;
        assert!((energy.im - boundary).abs() <= 1e-10 * boundary.abs(), "p={p}: {} vs {}", energy.im, boundary);
    }
}

#[test]
fn zero_penalty_reproduces_the_fem_bit_for_bit() {
    let k = 7.0;
    let pr = build(k, 10, 2, &PenaltySet::zero(2));
    assert_eq!(pr.a, fem_system(&pr.blocks, k));
    let u = ExactSolution::new(k).unwrap();
    let q = gauss_rule(4).unwrap();
    let x = solve(&pr.a, &pr.b, &SolverOptions::default()).unwrap().solution;
    let fem = solve(&fem_system(&pr.blocks, k), &pr.b, &SolverOptions::default()).unwrap().solution;
    assert_eq!(x, fem);
    let r1 = error_report(&pr.mesh, &pr.dofs, &x, &u, k, &PenaltySet::zero(2), &q).unwrap();
    let r2 = error_report(&pr.mesh, &pr.dofs, &fem, &u, k, &PenaltySet::zero(2), &q).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn block_norms_scale_with_the_mesh() {
    // Frobenius norms: entry size times the square root of the entry count
    let fro = |m: usize, p: usize| {
        let mesh = Mesh::build_cartesian(m).unwrap();
        let dofs = DofMap::new(&mesh, p).unwrap();
        let q = gauss_rule(p + 1).unwrap();
        let b = assemble_blocks(&mesh, &dofs, &q).unwrap();
        let js: Vec<f64> = (1..=p).map(|j| assemble_penalty_order(&mesh, &dofs, j, &q).unwrap().frobenius_norm()).collect();
        (b.stiffness.frobenius_norm(), b.mass.frobenius_norm(), b.boundary.frobenius_norm(), js)
    };
    for p in 1..=3 {
        let (s1, m1, b1, j1) = fro(16, p);
        let (s2, m2, b2, j2) = fro(32, p);
        let within = |ratio: f64, expect: f64| (ratio / expect - 1.0).abs() <= 0.05;
        assert!(within(s2 / s1, 2.0), "S {}", s2 / s1);
        assert!(within(m2 / m1, 0.5), "M {}", m2 / m1);
        assert!(within(b2 / b1, 0.5f64.sqrt()), "B {}", b2 / b1);
        for (a, b) in j1.iter().zip(&j2) {
            assert!(within(b / a, 2.0), "J {}", b / a);
        }
    }
}

#[test]
fn matrix_market_export_round_trips_the_counts() {
    let pr = build(3.0, 2, 1, &gamma_optimal(1, 1.5).unwrap());
    let mut out = Vec::new();
    pr.a.write_matrix_market(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "%%MatrixMarket matrix coordinate complex general");
    assert_eq!(lines[1], format!("9 9 {}", pr.a.nnz()));
    assert_eq!(lines.len(), 2 + pr.a.nnz());
}
