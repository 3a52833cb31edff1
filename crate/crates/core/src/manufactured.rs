//! Manufactured Helmholtz solution on the unit square.
//!
//! The pair
//!
//! ```text
//! u = cos(k r)/k - c J0(k r),   c = (cos k + i sin k) / (k (J0(k) + i J1(k)))
//! f = sin(k r)/r
//! ```
//!
//! satisfies `-Δu - k²u = f` in the plane, and `∂u/∂r + i k u = 0` on the
//! unit circle. The Robin data on the square is `g = ∇u·n + i k u`.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManufacturedError {
    #[error("Bessel argument must be finite and non-negative, got {0}")]
    BesselDomain(f64),
    #[error("wave number must be positive and finite, got {0}")]
    WaveNumber(f64),
    #[error("gradient direction is undefined at the origin")]
    GradientAtOrigin,
}

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Below this value of `k r` the removable singularities are evaluated by
/// Taylor expansion.
pub const SMALL_KR: f64 = 1e-4;

fn check_arg(x: f64) -> Result<f64, ManufacturedError> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(ManufacturedError::BesselDomain(x))
    }
}

pub fn bessel_j0(x: f64) -> Result<f64, ManufacturedError> {
    check_arg(x).map(|x| j0_j1(x).0)
}

pub fn bessel_j1(x: f64) -> Result<f64, ManufacturedError> {
    check_arg(x).map(|x| j0_j1(x).1)
}

/// `(J0(x), J1(x))` for finite `x >= 0`.
pub(crate) fn j0_j1(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        hankel(x)
    }
}

fn series(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..60 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    (s0, s1)
}

/// Backward recurrence normalised by `J0 + 2 Σ J_2k = 1`.
fn miller(x: f64) -> (f64, f64) {
    let start = (x + 30.0 + 10.0 * x.cbrt()) as usize;
    let start = start + start % 2;
    // (upper, cur) = (J_{n+1}, J_n) up to a common scale
    let (mut upper, mut cur) = (0.0f64, 1e-30f64);
    let (mut norm, mut j1) = (0.0, 0.0);
    for n in (1..=start).rev() {
        let lower = 2.0 * n as f64 / x * cur - upper;
        upper = cur;
        cur = lower;
        let order = n - 1;
        if order == 1 {
            j1 = cur;
        } else if order > 0 && order % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            upper *= 1e-200;
            norm *= 1e-200;
            j1 *= 1e-200;
        }
    }
    norm += cur;
    (cur / norm, j1 / norm)
}

fn hankel(x: f64) -> (f64, f64) {
    let asym = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let (mut p, mut q) = (1.0, 0.0);
        let mut term = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
            if term.abs() >= last || term.abs() < 1e-17 {
                break;
            }
            last = term.abs();
            match k % 4 {
                1 => q += term,
                2 => p -= term,
                3 => q -= term,
                _ => p += term,
            }
        }
        (p, q)
    };
    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    let (s, c) = x.sin_cos();
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let (p0, q0) = asym(0.0);
    let (p1, q1) = asym(1.0);
    // chi0 = x - pi/4, chi1 = x - 3 pi/4
    let (cos0, sin0) = ((c + s) * r2, (s - c) * r2);
    let (cos1, sin1) = ((s - c) * r2, -(s + c) * r2);
    (amp * (p0 * cos0 - q0 * sin0), amp * (p1 * cos1 - q1 * sin1))
}

/// Wave number of the model problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveConfig {
    k: f64,
}

impl WaveConfig {
    pub fn new(k: f64) -> Result<Self, ManufacturedError> {
        if k.is_finite() && k > 0.0 {
            Ok(Self { k })
        } else {
            Err(ManufacturedError::WaveNumber(k))
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// `sin(kr)/r`, equal to `k` at the origin.
pub fn source_f(point: [f64; 2], k: f64) -> f64 {
    let r = point[0].hypot(point[1]);
    let z = k * r;
    if z < SMALL_KR {
        let z2 = z * z;
        k * (1.0 - z2 / 6.0 + z2 * z2 / 120.0)
    } else {
        (k * r).sin() / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    k: f64,
    c: Complex64,
}

impl ExactSolution {
    pub fn new(k: f64) -> Result<Self, ManufacturedError> {
        let k = WaveConfig::new(k)?.k();
        let (j0, j1) = j0_j1(k);
        let phase = Complex64::new(k.cos(), k.sin());
        let c = phase / (k * Complex64::new(j0, j1));
        Ok(Self { k, c })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// The constant in front of `J0(kr)`.
    pub fn bessel_coefficient(&self) -> Complex64 {
        self.c
    }

    pub fn u(&self, point: [f64; 2]) -> Complex64 {
        let r = point[0].hypot(point[1]);
        let z = self.k * r;
        let (j0, _) = j0_j1(z);
        Complex64::new(z.cos() / self.k, 0.0) - self.c * j0
    }

    /// `∂u/∂r / r`, continuous through the origin.
    fn radial_factor(&self, r: f64) -> Complex64 {
        let k = self.k;
        let z = k * r;
        if z < SMALL_KR {
            let z2 = z * z;
            let sine = -k * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
            let bessel = self.c * k * k * (0.5 - z2 / 16.0 + z2 * z2 / 384.0);
            Complex64::new(sine, 0.0) + bessel
        } else {
            let (_, j1) = j0_j1(z);
            (Complex64::new(-z.sin(), 0.0) + self.c * k * j1) / r
        }
    }

    pub fn grad_u(&self, point: [f64; 2]) -> Result<[Complex64; 2], ManufacturedError> {
        if point == [0.0, 0.0] {
            return Err(ManufacturedError::GradientAtOrigin);
        }
        Ok(self.grad_unchecked(point))
    }

    fn grad_unchecked(&self, point: [f64; 2]) -> [Complex64; 2] {
        let g = self.radial_factor(point[0].hypot(point[1]));
        [g * point[0], g * point[1]]
    }

    pub fn source(&self, point: [f64; 2]) -> f64 {
        source_f(point, self.k)
    }

    /// `∇u·n + i k u` on the boundary with outward normal `normal`.
    pub fn robin_g(&self, point: [f64; 2], normal: [f64; 2]) -> Result<Complex64, ManufacturedError> {
        let grad = self.grad_u(point)?;
        Ok(grad[0] * normal[0] + grad[1] * normal[1] + Complex64::i() * self.k * self.u(point))
    }
}

impl Field for ExactSolution {
    fn value(&self, point: [f64; 2]) -> Complex64 {
        self.u(point)
    }

    fn gradient(&self, point: [f64; 2]) -> [Complex64; 2] {
        self.grad_unchecked(point)
    }
}
