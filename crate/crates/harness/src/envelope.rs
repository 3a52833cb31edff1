//! Nonnegative two-term envelope `e ≈ C₁(kh)^p + C₂k(kh)^{2p}` of the
//! H¹-seminorm errors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub k: f64,
    pub h: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub p: usize,
    pub c1: f64,
    pub c2: f64,
    /// Largest `|model - e| / e` over the samples.
    pub max_rel_residual: f64,
    pub samples: usize,
}

impl Envelope {
    pub fn predict(&self, k: f64, h: f64) -> f64 {
        let (a, b) = basis(self.p, k, h);
        self.c1 * a + self.c2 * b
    }
}

fn basis(p: usize, k: f64, h: f64) -> (f64, f64) {
    let kh = k * h;
    (kh.powi(p as i32), k * kh.powi(2 * p as i32))
}

/// Nonnegative least squares in the relative misfit `(model - e) / e`;
/// with two unknowns the active-set search is a comparison of four
/// candidates. `None` without positive samples.
pub fn fit_envelope(p: usize, samples: &[EnvelopeSample]) -> Option<Envelope> {
    let rows: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.error > 0.0 && s.error.is_finite())
        .map(|s| {
            let (a, b) = basis(p, s.k, s.h);
            (a / s.error, b / s.error)
        })
        .collect();
    if rows.is_empty() {
        return None;
    }
    // normal equations of min Σ (c1 a + c2 b - 1)²
    let (mut saa, mut sab, mut sbb, mut sa, mut sb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b) in &rows {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sa += a;
        sb += b;
    }
    let cost = |c1: f64, c2: f64| rows.iter().map(|&(a, b)| (c1 * a + c2 * b - 1.0).powi(2)).sum::<f64>();
    let mut candidates = vec![(0.0, 0.0)];
    if saa > 0.0 {
        candidates.push((sa / saa, 0.0));
    }
    if sbb > 0.0 {
        candidates.push((0.0, sb / sbb));
    }
    let det = saa * sbb - sab * sab;
    if det > 1e-300 * saa * sbb {
        let c1 = (sa * sbb - sb * sab) / det;
        let c2 = (sb * saa - sa * sab) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            candidates.push((c1, c2));
        }
    }
    let (c1, c2) = candidates.into_iter().min_by(|x, y| cost(x.0, x.1).total_cmp(&cost(y.0, y.1)))?;
    let max_rel_residual = rows.iter().map(|&(a, b)| (c1 * a + c2 * b - 1.0).abs()).fold(0.0, f64::max);
    Some(Envelope { p, c1, c2, max_rel_residual, samples: rows.len() })
}
