//! Continuous fields and their discrete counterparts in `V_h`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::element::TensorBasis;
use crate::grid::{DofMap, Mesh};

/// A smooth complex field on the unit square with its gradient.
pub trait Field: Sync {
    fn value(&self, point: [f64; 2]) -> Complex64;
    fn gradient(&self, point: [f64; 2]) -> [Complex64; 2];
}

/// Coefficient vector of a function in `V_h` over the global Lagrange lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub coefficients: Vec<Complex64>,
}

impl DiscreteField {
    pub fn zeros(dofs: &DofMap) -> Self {
        Self { coefficients: vec![Complex64::new(0.0, 0.0); dofs.total()] }
    }

    pub fn from_coefficients(coefficients: Vec<Complex64>) -> Self {
        Self { coefficients }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Nodal Lagrange interpolant.
    pub fn interpolate(dofs: &DofMap, field: &dyn Field) -> Self {
        let coefficients = (0..dofs.total()).map(|g| field.value(dofs.node_coords(g))).collect();
        Self { coefficients }
    }

    /// Value and physical gradient at reference point `reference` of `element`.
    pub fn evaluate(
        &self,
        mesh: &Mesh,
        dofs: &DofMap,
        basis: &TensorBasis,
        element: usize,
        reference: [f64; 2],
    ) -> (Complex64, [Complex64; 2]) {
        let inv_h = mesh.m() as f64;
        let v = basis.eval(0, 0, reference);
        let gx = basis.eval(1, 0, reference);
        let gy = basis.eval(0, 1, reference);
        let mut out = (Complex64::new(0.0, 0.0), [Complex64::new(0.0, 0.0); 2]);
        for l in 0..basis.len() {
            let c = self.coefficients[dofs.global_index(element, l)];
            out.0 += c * v[l];
            out.1[0] += c * (gx[l] * inv_h);
            out.1[1] += c * (gy[l] * inv_h);
        }
        out
    }
}

/// A polynomial `Σ c_ab x^a y^b`; handy for exactness checks.
#[derive(Debug, Clone)]
pub struct Polynomial {
    /// `(a, b, coefficient)`
    pub terms: Vec<(u32, u32, Complex64)>,
}

impl Field for Polynomial {
    fn value(&self, p: [f64; 2]) -> Complex64 {
        self.terms.iter().map(|&(a, b, c)| c * p[0].powi(a as i32) * p[1].powi(b as i32)).sum()
    }

    fn gradient(&self, p: [f64; 2]) -> [Complex64; 2] {
        let mut g = [Complex64::new(0.0, 0.0); 2];
        for &(a, b, c) in &self.terms {
            if a > 0 {
                g[0] += c * a as f64 * p[0].powi(a as i32 - 1) * p[1].powi(b as i32);
            }
            if b > 0 {
                g[1] += c * b as f64 * p[0].powi(a as i32) * p[1].powi(b as i32 - 1);
            }
        }
        g
    }
}
