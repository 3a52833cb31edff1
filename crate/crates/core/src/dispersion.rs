//! Bloch-wave dispersion analysis of the 1D FEM and CIP-FEM on uniform grids.
//!
//! On the infinite grid with `h = 1` the scaled operator is
//! `K - t² M + Σ_j γ_j J_j`, `t = kh`. Each period holds the vertex and the
//! `p - 1` interior nodes of one element, and the Bloch ansatz
//! `u_{n p + r} = û_r e^{iθn}` reduces it to a `p x p` symbol `T(θ)`.
//! The discrete wavenumber `ω = θ / h` solves `det T(θ) = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{gauss_rule, lagrange_basis, reference_matrix_1d};
use crate::fit::{fit_slope, FitError, SlopeFit};
use crate::penalty::{GammaSpec, PenaltyError, PenaltySet};

pub const BRACKETS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("no propagating root of the dispersion relation in (0, pi) at t = {0}")]
    NoRoot(f64),
    #[error("penalty set has order {gamma}, elements have order {p}")]
    Order { gamma: usize, p: usize },
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub p: usize,
    pub t: f64,
    pub gamma: PenaltySet,
    /// `ωh`
    pub theta: f64,
    /// `|ω - k| / k`
    pub rel_phase_error: f64,
    /// `|det T(θ)|` at the root
    pub residual: f64,
    /// `‖T(θ)‖_F^p`, the natural size of the determinant
    pub symbol_scale: f64,
}

/// Dense matrix of the scaled 1D operator restricted to one period of test
/// functions, as a list of `(row, column, value)` with global indices.
fn stencil(p: usize, t: f64, gamma: &[f64]) -> Vec<(usize, i64, f64)> {
    let basis = lagrange_basis(p);
    let q = gauss_rule(p + 1).expect("valid rule");
    let k1 = reference_matrix_1d(&basis, 1, 1, &q);
    let m1 = reference_matrix_1d(&basis, 0, 0, &q);
    let mut out = Vec::new();
    let pi = p as i64;
    // elements touching the period-0 test functions
    for e in -1i64..=0 {
        for a in 0..=p {
            let row = e * pi + a as i64;
            if !(0..pi).contains(&row) {
                continue;
            }
            for b in 0..=p {
                out.push((row as usize, e * pi + b as i64, k1[a][b] - t * t * m1[a][b]));
            }
        }
    }
    // jumps at vertex v couple elements v-1 (trace at 1) and v (trace at 0)
    for (jm1, &g) in gamma.iter().enumerate() {
        let j = jm1 + 1;
        let at1 = basis.eval(j, 1.0);
        let at0 = basis.eval(j, 0.0);
        for v in -1i64..=1 {
            let mut fac: Vec<(i64, f64)> = Vec::with_capacity(2 * (p + 1));
            for a in 0..=p {
                fac.push(((v - 1) * pi + a as i64, -at1[a]));
                fac.push((v * pi + a as i64, at0[a]));
            }
            for &(r, fr) in &fac {
                if !(0..pi).contains(&r) {
                    continue;
                }
                for &(c, fc) in &fac {
                    out.push((r as usize, c, g * fr * fc));
                }
            }
        }
    }
    out
}

fn real_gamma(p: usize, gamma: &PenaltySet) -> Result<Vec<f64>, DispersionError> {
    if gamma.order() > p {
        return Err(DispersionError::Order { gamma: gamma.order(), p });
    }
    Ok(gamma.values().iter().map(|z| z.re).collect())
}

/// The Bloch symbol `T(θ)` as a dense `p x p` matrix.
pub fn bloch_symbol(p: usize, t: f64, gamma: &PenaltySet, theta: f64) -> Result<Vec<Vec<Complex64>>, DispersionError> {
    let g = real_gamma(p, gamma)?;
    Ok(symbol_from_stencil(p, &stencil(p, t, &g), theta))
}

fn symbol_from_stencil(p: usize, st: &[(usize, i64, f64)], theta: f64) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![Complex64::new(0.0, 0.0); p]; p];
    let pi = p as i64;
    for &(r, c, v) in st {
        let period = c.div_euclid(pi);
        let s = c.rem_euclid(pi) as usize;
        out[r][s] += Complex64::from_polar(v, theta * period as f64);
    }
    out
}

fn det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        if a[piv][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d *= a[col][col];
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..n {
                let v = a[col][j];
                a[i][j] -= f * v;
            }
        }
    }
    d
}

fn frobenius(a: &[Vec<Complex64>]) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the dispersion relation for the propagating root closest to `t`.
pub fn discrete_wavenumber(p: usize, t: f64, gamma: &PenaltySet) -> Result<DispersionResult, DispersionError> {
    let g = real_gamma(p, gamma)?;
    let st = stencil(p, t, &g);
    let f = |theta: f64| det(symbol_from_stencil(p, &st, theta)).re;
    let mut roots = Vec::new();
    if p == 1 {
        // T = a0 + a1 cos θ + a2 cos 2θ, a quadratic in c = cos θ
        let (t0, th, tp) = (f(0.0), f(std::f64::consts::FRAC_PI_2), f(std::f64::consts::PI));
        let a0 = (t0 + tp) / 4.0 + th / 2.0;
        let a2 = (t0 + tp) / 4.0 - th / 2.0;
        let a1 = (t0 - tp) / 2.0;
        // 2 a2 c² + a1 c + (a0 - a2) = 0
        let (qa, qb, qc) = (2.0 * a2, a1, a0 - a2);
        let mut cs = Vec::new();
        if qa.abs() <= 1e-15 * (qb.abs() + qc.abs()) {
            cs.push(-qc / qb);
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // stable quadratic formula
                let qq = -0.5 * (qb + qb.signum() * sq);
                cs.push(qq / qa);
                if qq != 0.0 {
                    cs.push(qc / qq);
                }
            }
        }
        for c in cs {
            if c > -1.0 && c < 1.0 {
                roots.push(c.acos());
            }
        }
    } else {
        let step = std::f64::consts::PI / BRACKETS as f64;
        let mut lo = 1e-12;
        let mut flo = f(lo);
        for i in 1..=BRACKETS {
            let hi = if i == BRACKETS { std::f64::consts::PI - 1e-12 } else { i as f64 * step };
            let fhi = f(hi);
            if flo == 0.0 {
                roots.push(lo);
            } else if flo.signum() != fhi.signum() {
                let (mut a, mut b, mut fa) = (lo, hi, flo);
                while b - a > 1e-14 {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid);
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            lo = hi;
            flo = fhi;
        }
    }
    let theta = roots
        .into_iter()
        .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
        .ok_or(DispersionError::NoRoot(t))?;
    let sym = symbol_from_stencil(p, &st, theta);
    let scale = frobenius(&sym).powi(p as i32);
    Ok(DispersionResult {
        p,
        t,
        gamma: gamma.clone(),
        theta,
        rel_phase_error: (theta - t).abs() / t,
        residual: det(sym).norm(),
        symbol_scale: scale,
    })
}

/// Log-log slope of the relative phase error against `t`.
pub fn phase_error_order(p: usize, ts: &[f64], gamma: &GammaSpec) -> Result<SlopeFit, DispersionError> {
    let mut samples = Vec::with_capacity(ts.len());
    for &t in ts {
        let set = gamma.resolve(p, t)?;
        let r = discrete_wavenumber(p, t, &set)?;
        samples.push((t, r.rel_phase_error));
    }
    Ok(fit_slope(&samples, true)?)
}
