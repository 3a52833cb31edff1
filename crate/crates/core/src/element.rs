//! Reference-element machinery on `[0,1]` and `[0,1]^2`: equispaced
//! Lagrange bases with derivatives of any order, and Gauss-Legendre rules.

use thiserror::Error;

/// Largest supported Gauss rule.
pub const MAX_GAUSS_POINTS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("Gauss rule with {0} points is outside the supported range 1..={MAX_GAUSS_POINTS}")]
    PointCount(usize),
}

/// One-dimensional Lagrange basis on the equispaced nodes `i/p`.
#[derive(Debug, Clone)]
pub struct Basis1D {
    p: usize,
    nodes: Vec<f64>,
    /// `coeffs[i][c]` is the coefficient of `x^c` in the i-th basis polynomial.
    coeffs: Vec<Vec<f64>>,
}

impl Basis1D {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "Lagrange basis needs order >= 1");
        let nodes: Vec<f64> = (0..=p).map(|i| i as f64 / p as f64).collect();
        let coeffs = (0..=p)
            .map(|i| {
                let mut poly = vec![1.0];
                for j in (0..=p).filter(|&j| j != i) {
                    let scale = 1.0 / (nodes[i] - nodes[j]);
                    // poly *= (x - x_j) * scale
                    let mut next = vec![0.0; poly.len() + 1];
                    for (c, &v) in poly.iter().enumerate() {
                        next[c + 1] += v * scale;
                        next[c] -= v * nodes[j] * scale;
                    }
                    poly = next;
                }
                poly
            })
            .collect();
        Self { p, nodes, coeffs }
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.p + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Value of the `deriv`-th derivative of basis function `i` at `x`.
    pub fn eval_one(&self, i: usize, deriv: usize, x: f64) -> f64 {
        let c = &self.coeffs[i];
        if deriv >= c.len() {
            return 0.0;
        }
        // Horner on the differentiated coefficients
        let mut acc = 0.0;
        for power in (deriv..c.len()).rev() {
            let falling: f64 = ((power - deriv + 1)..=power).map(|v| v as f64).product();
            acc = acc * x + c[power] * falling;
        }
        acc
    }

    /// All `p+1` basis values of derivative order `deriv` at `x`.
    pub fn eval(&self, deriv: usize, x: f64) -> Vec<f64> {
        (0..=self.p).map(|i| self.eval_one(i, deriv, x)).collect()
    }
}

pub fn lagrange_basis(p: usize) -> Basis1D {
    Basis1D::new(p)
}

/// Gauss-Legendre rule on `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_rule(n: usize) -> Result<QuadRule, QuadError> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return Err(QuadError::PointCount(n));
    }
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push(0.5 * (1.0 + x));
        weights.push(0.5 * w);
    }
    // Newton from the cosine guesses produces descending roots
    points.reverse();
    weights.reverse();
    Ok(QuadRule { points, weights })
}

/// Tensor-product basis on `[0,1]^2`; local index `a + (p+1) b`.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    basis: Basis1D,
}

impl TensorBasis {
    pub fn new(p: usize) -> Self {
        Self { basis: Basis1D::new(p) }
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn len(&self) -> usize {
        self.basis.len() * self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn one_d(&self) -> &Basis1D {
        &self.basis
    }

    pub fn eval(&self, dx: usize, dy: usize, point: [f64; 2]) -> Vec<f64> {
        let bx = self.basis.eval(dx, point[0]);
        let by = self.basis.eval(dy, point[1]);
        let mut out = Vec::with_capacity(bx.len() * by.len());
        for vy in &by {
            for vx in &bx {
                out.push(vx * vy);
            }
        }
        out
    }
}

/// Reference values `d^dx/dx^dx d^dy/dy^dy` of the order-`p` tensor basis.
///
/// On a physical element of size `h` a derivative of total order `d`
/// picks up a factor `h^-d`.
pub fn shape_2d(p: usize, dx: usize, dy: usize, point: [f64; 2]) -> Vec<f64> {
    TensorBasis::new(p).eval(dx, dy, point)
}

/// Dense 1D reference matrix `int_0^1 b_a^(da) b_b^(db)`.
pub fn reference_matrix_1d(basis: &Basis1D, da: usize, db: usize, quad: &QuadRule) -> Vec<Vec<f64>> {
    let n = basis.len();
    let mut out = vec![vec![0.0; n]; n];
    for (x, w) in quad.iter() {
        let va = basis.eval(da, x);
        let vb = basis.eval(db, x);
        for a in 0..n {
            for b in 0..n {
                out[a][b] += w * va[a] * vb[b];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_hats_at_midpoint() {
        let b = lagrange_basis(1);
        assert_eq!(b.eval(0, 0.5), vec![0.5, 0.5]);
    }

    #[test]
    fn interpolation_property() {
        for p in 1..=4 {
            let b = lagrange_basis(p);
            for (j, &x) in b.nodes().iter().enumerate() {
                for (i, v) in b.eval(0, x).into_iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-13, "p={p} i={i} j={j} v={v}");
                }
            }
        }
    }

    #[test]
    fn top_derivative_is_constant_and_sums_to_zero() {
        let b = lagrange_basis(3);
        let v0 = b.eval(3, 0.1);
        for x in [0.0, 0.37, 0.9, 1.0] {
            let v = b.eval(3, x);
            for (a, c) in v.iter().zip(&v0) {
                assert!((a - c).abs() < 1e-9);
            }
            assert!(v.iter().sum::<f64>().abs() < 1e-9);
        }
        assert!(b.eval(4, 0.3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gauss_small_rules() {
        let r = gauss_rule(1).unwrap();
        assert_eq!(r.points, vec![0.5]);
        assert_eq!(r.weights, vec![1.0]);
        let r = gauss_rule(2).unwrap();
        let d = 1.0 / (2.0 * 3f64.sqrt());
        assert!((r.points[0] - (0.5 - d)).abs() < 1e-15);
        assert!((r.points[1] - (0.5 + d)).abs() < 1e-15);
        assert!((r.integrate(|x| x.powi(3)) - 0.25).abs() < 1e-16);
    }

    #[test]
    fn gauss_rejects_out_of_range() {
        assert_eq!(gauss_rule(0), Err(QuadError::PointCount(0)));
        assert_eq!(gauss_rule(33), Err(QuadError::PointCount(33)));
    }

    #[test]
    fn gauss_exactness_all_sizes() {
        for n in 1..=MAX_GAUSS_POINTS {
            let r = gauss_rule(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.points.windows(2).all(|w| w[0] < w[1]));
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..2 * n {
                let exact = 1.0 / (k as f64 + 1.0);
                let got = r.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() < 2e-15, "n={n} k={k} err={}", got - exact);
            }
        }
    }

    #[test]
    fn corner_value_of_bilinear_basis() {
        let v = shape_2d(1, 0, 0, [0.0, 0.0]);
        assert_eq!(v, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn x_derivative_matches_central_difference() {
        let step = 1e-5;
        let c = shape_2d(2, 1, 0, [0.5, 0.5]);
        let plus = shape_2d(2, 0, 0, [0.5 + step, 0.5]);
        let minus = shape_2d(2, 0, 0, [0.5 - step, 0.5]);
        for i in 0..9 {
            let fd = (plus[i] - minus[i]) / (2.0 * step);
            assert!((fd - c[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn reference_mass_and_stiffness_p1() {
        let b = lagrange_basis(1);
        let q = gauss_rule(2).unwrap();
        let mass = reference_matrix_1d(&b, 0, 0, &q);
        let stiff = reference_matrix_1d(&b, 1, 1, &q);
        assert!((mass[0][0] - 1.0 / 3.0).abs() < 1e-15 && (mass[0][1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((stiff[0][0] - 1.0).abs() < 1e-15 && (stiff[0][1] + 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn partition_of_unity(p in 1usize..=3, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let s: f64 = shape_2d(p, 0, 0, [x, y]).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-13);
            for d in 1..=p {
                let s: f64 = shape_2d(p, d, 0, [x, y]).iter().sum();
                prop_assert!(s.abs() < 1e-10);
            }
        }

        #[test]
        fn derivatives_agree_with_finite_differences(
            p in 1usize..=3, dx in 0usize..=3, dy in 0usize..=3,
            x in 0.1f64..0.9, y in 0.1f64..0.9,
        ) {
            prop_assume!(dx + dy <= p && dx + dy >= 1);
            let step = 1e-4;
            let exact = shape_2d(p, dx, dy, [x, y]);
            // lower the larger derivative order by one and difference in that direction
            let (lx, ly, ex, ey) = if dx > 0 { (dx - 1, dy, step, 0.0) } else { (dx, dy - 1, 0.0, step) };
            let plus = shape_2d(p, lx, ly, [x + ex, y + ey]);
            let minus = shape_2d(p, lx, ly, [x - ex, y - ey]);
            for i in 0..exact.len() {
                let fd = (plus[i] - minus[i]) / (2.0 * step);
                prop_assert!((fd - exact[i]).abs() < 1e-5 * (1.0 + exact[i].abs()));
            }
        }

        #[test]
        fn reproduces_tensor_polynomials(
            p in 1usize..=3, x in 0.0f64..=1.0, y in 0.0f64..=1.0,
            cx in -2.0f64..2.0, cy in -2.0f64..2.0,
        ) {
            // f(x, y) = (1 + cx x^p)(1 + cy y^p) - x y is in Q_p
            let f = |x: f64, y: f64| (1.0 + cx * x.powi(p as i32)) * (1.0 + cy * y.powi(p as i32)) - x * y;
            let basis = TensorBasis::new(p);
            let nodes = basis.one_d().nodes().to_vec();
            let vals = basis.eval(0, 0, [x, y]);
            let mut acc = 0.0;
            for (b, &ny) in nodes.iter().enumerate() {
                for (a, &nx) in nodes.iter().enumerate() {
                    acc += f(nx, ny) * vals[a + (p + 1) * b];
                }
            }
            prop_assert!((acc - f(x, y)).abs() < 1e-12);
        }
    }
}
