//! Penalty parameters for the interior-penalty jump terms.
//!
//! The dispersion-free parameters `γ_j(t)`, `t = k h`, are ratios whose
//! numerator and denominator both vanish to high order at `t = 0`. Below
//! [`SERIES_THRESHOLD`] they are evaluated from Taylor expansions of the
//! numerator and denominator (coefficients in powers of `t²`, both scaled
//! by the leading denominator coefficient, computed in exact rational
//! arithmetic and rounded once to `f64`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest order with tabulated dispersion-free parameters.
pub const MAX_OPTIMAL_ORDER: usize = 3;

/// Switch point between the series and the closed-form evaluation.
pub const SERIES_THRESHOLD: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("t = kh must lie in (0, pi), got {0}")]
    OutOfRange(f64),
    #[error("dispersion-free parameters are only available for p = 1..=3, got p = {0}")]
    UnsupportedOrder(usize),
    #[error("expected {expected} penalty values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("penalty parameters need non-negative imaginary parts, got {0}")]
    NegativeImaginary(Complex64),
    #[error("cannot parse penalty specification `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// All parameters vanish: the standard FEM.
    Zero,
    Constant,
    OptimalFormula { t: f64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Zero => write!(f, "zero"),
            Provenance::Constant => write!(f, "constant"),
            Provenance::OptimalFormula { t } => write!(f, "optimal(t={t})"),
        }
    }
}

/// The parameters `γ_{j,e}`, `j = 1..=p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySet {
    p: usize,
    values: Vec<Complex64>,
    /// Per-edge replacements keyed by interior edge index.
    overrides: BTreeMap<usize, Vec<Complex64>>,
    provenance: Provenance,
}

impl PenaltySet {
    pub fn zero(p: usize) -> Self {
        Self {
            p,
            values: vec![Complex64::new(0.0, 0.0); p],
            overrides: BTreeMap::new(),
            provenance: Provenance::Zero,
        }
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_zero(&self) -> bool {
        self.provenance == Provenance::Zero
    }

    pub fn has_overrides(&self) -> bool {
        !self.overrides.is_empty()
    }

    /// `γ_j` for interior edge `edge`; `j` is 1-based.
    pub fn value(&self, edge: usize, j: usize) -> Complex64 {
        match self.overrides.get(&edge) {
            Some(v) => v[j - 1],
            None => self.values[j - 1],
        }
    }

    pub fn with_override(mut self, edge: usize, values: Vec<Complex64>) -> Result<Self, PenaltyError> {
        validate(self.p, &values)?;
        if values.iter().any(|v| *v != Complex64::new(0.0, 0.0)) && self.provenance == Provenance::Zero {
            self.provenance = Provenance::Constant;
        }
        self.overrides.insert(edge, values);
        Ok(self)
    }
}

fn validate(p: usize, values: &[Complex64]) -> Result<(), PenaltyError> {
    if values.len() != p {
        return Err(PenaltyError::WrongLength { expected: p, got: values.len() });
    }
    if let Some(v) = values.iter().find(|v| v.im < 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
        return Err(PenaltyError::NegativeImaginary(*v));
    }
    Ok(())
}

/// Uniform parameters; all-zero values give the FEM.
pub fn gamma_constant(p: usize, values: &[Complex64]) -> Result<PenaltySet, PenaltyError> {
    validate(p, values)?;
    let zero = values.iter().all(|v| *v == Complex64::new(0.0, 0.0));
    Ok(PenaltySet {
        p,
        values: values.to_vec(),
        overrides: BTreeMap::new(),
        provenance: if zero { Provenance::Zero } else { Provenance::Constant },
    })
}

/// Parameters that remove the phase error of the 1D scheme at `t = k h`.
pub fn gamma_optimal(p: usize, t: f64) -> Result<PenaltySet, PenaltyError> {
    if !(1..=MAX_OPTIMAL_ORDER).contains(&p) {
        return Err(PenaltyError::UnsupportedOrder(p));
    }
    if !(t > 0.0 && t < std::f64::consts::PI) {
        return Err(PenaltyError::OutOfRange(t));
    }
    let values = (1..=p).map(|j| Complex64::new(optimal_value(p, j, t), 0.0)).collect();
    Ok(PenaltySet {
        p,
        values,
        overrides: BTreeMap::new(),
        provenance: Provenance::OptimalFormula { t },
    })
}

/// Real value of `γ_j(t)` for order `p`; `j` is 1-based.
pub fn optimal_value(p: usize, j: usize, t: f64) -> f64 {
    if t < SERIES_THRESHOLD {
        let (num, den) = series_coefficients(p, j);
        let t2 = t * t;
        horner(num, t2) / horner(den, t2)
    } else {
        closed_form(p, j, t)
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Transcription of the dispersion-free formulas.
pub fn closed_form(p: usize, j: usize, t: f64) -> f64 {
    let t2 = t * t;
    let cos = f64::cos;
    match (p, j) {
        (1, 1) => {
            let c = cos(t);
            (t2 * (c + 2.0) + 6.0 * c - 6.0) / (12.0 * (1.0 - c).powi(2))
        }
        (2, 1) => {
            let c = cos(t / 2.0);
            let s = (t / 4.0).sin();
            (t2 * (2.0 * c + 1.0) + 12.0 * c * c - 12.0) / (768.0 * (s.powi(6) - s.powi(8)))
        }
        (2, 2) => {
            let s2 = (t / 4.0).sin().powi(2);
            let (s4, s6) = (s2 * s2, s2 * s2 * s2);
            let num = t2 * (8.0 * s6 + 12.0 * s4 - 30.0 * s2 + 15.0) - 160.0 * s6 + 400.0 * s4 - 240.0 * s2;
            let den = 61440.0 * (s6 * s4 - 2.0 * s4 * s4 + s6);
            num / den
        }
        (3, 1) => {
            let (c1, c2, c3) = (cos(t / 3.0), cos(2.0 * t / 3.0), cos(t));
            let num = 2.0 * t2 * (36.0 * c1 + 9.0 * c2 + 2.0 * c3 + 13.0) + 240.0 * (c3 - 1.0);
            let den = 480.0 * (2.0 * c1 + 1.0).powi(2) * (4.0 * c1 - 1.0) * (c1 - 1.0).powi(3);
            num / den
        }
        (3, 2) => {
            let (c1, c2, c3, c4) = (cos(t / 3.0), cos(2.0 * t / 3.0), cos(t), cos(4.0 * t / 3.0));
            let s1 = (t / 3.0).sin();
            let num = 2.0 * t2 * (c1 + 28.0 * c2 + c4 - c3 + 31.0) - 120.0 * s1 * s1 * (2.0 * c1 + 1.0).powi(2);
            let den = 34560.0 * (2.0 * c1 + 1.0).powi(3) * (c1 - 1.0).powi(4);
            num / den
        }
        (3, 3) => {
            let (c1, c2, c3) = (cos(t / 3.0), cos(2.0 * t / 3.0), cos(t));
            let (c4, c5, c6) = (cos(4.0 * t / 3.0), cos(5.0 * t / 3.0), cos(2.0 * t));
            let num = 36.0 * t2 * (c6 + 201.0 * c1 + 93.0 * c2 + 24.0 * c4 - 3.0 * c5 + 38.0 * c3 + 66.0)
                + 504.0 * (c3 - 1.0) * (36.0 * c1 + 9.0 * c2 + 2.0 * c3 + 13.0);
            let den = 6531840.0 * (c1 - 1.0).powi(4) * (2.0 * c1 + 1.0).powi(5);
            num / den
        }
        _ => panic!("no dispersion-free formula for p = {p}, j = {j}"),
    }
}

fn series_coefficients(p: usize, j: usize) -> (&'static [f64], &'static [f64]) {
    match (p, j) {
        (1, 1) => (&P1G1_NUM, &P1G1_DEN),
        (2, 1) => (&P2G1_NUM, &P2G1_DEN),
        (2, 2) => (&P2G2_NUM, &P2G2_DEN),
        (3, 1) => (&P3G1_NUM, &P3G1_DEN),
        (3, 2) => (&P3G2_NUM, &P3G2_DEN),
        (3, 3) => (&P3G3_NUM, &P3G3_DEN),
        _ => panic!("no dispersion-free formula for p = {p}, j = {j}"),
    }
}

/// User-facing choice of penalty parameters: `optimal`, `zero`, or
/// `const:v1[,v2[,v3]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum GammaSpec {
    Zero,
    Optimal,
    Constant(Vec<f64>),
}

impl GammaSpec {
    /// Concrete parameters for order `p` at `t = k h`.
    pub fn resolve(&self, p: usize, t: f64) -> Result<PenaltySet, PenaltyError> {
        match self {
            GammaSpec::Zero => Ok(PenaltySet::zero(p)),
            GammaSpec::Optimal => gamma_optimal(p, t),
            GammaSpec::Constant(v) => {
                let values: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                gamma_constant(p, &values)
            }
        }
    }
}

impl fmt::Display for GammaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSpec::Zero => write!(f, "zero"),
            GammaSpec::Optimal => write!(f, "optimal"),
            GammaSpec::Constant(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "const:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for GammaSpec {
    type Err = PenaltyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "zero" => Ok(GammaSpec::Zero),
            "optimal" => Ok(GammaSpec::Optimal),
            other => {
                let list = other.strip_prefix("const:").ok_or_else(|| PenaltyError::Parse(s.into()))?;
                let values = list
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| PenaltyError::Parse(s.into())))
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() || values.len() > MAX_OPTIMAL_ORDER {
                    return Err(PenaltyError::Parse(s.into()));
                }
                Ok(GammaSpec::Constant(values))
            }
        }
    }
}

impl From<GammaSpec> for String {
    fn from(g: GammaSpec) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for GammaSpec {
    type Error = PenaltyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

// p1g1: numerator, denominator in powers of t^2
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P1G1_NUM: [f64; 16] = [-8.3333333333333333e-2, 1.1111111111111111e-2, -4.1335978835978836e-4, 7.7160493827160494e-6, -8.7682379349046016e-8, 6.7295040840014385e-10, -3.7279923192621605e-12, 1.5619206968586226e-14, -5.1241959703958322e-17, 1.3523122916524871e-19, -2.9333623793949354e-22, 5.3228666450558985e-25, -8.1997230926745948e-28, 1.0857564370989808e-30, -1.2490617614289257e-33, 1.2600226032138722e-36];
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P1G1_DEN: [f64; 16] = [1.0, -1.6666666666666667e-1, 1.25e-2, -5.6216931216931217e-4, 1.7085537918871252e-5, -3.7578162578162578e-7, 6.2641741709202027e-9, -8.1888378294903868e-11, 8.6199279418233667e-13, -7.4631624274710879e-15, 5.40809258372893e-17, -3.3280575697055216e-19, 1.7608770997255542e-21, -8.0959867558845499e-24, 3.2645107977840628e-26, -1.1638184670460953e-28];
// p2g1: numerator, denominator in powers of t^2
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P2G1_NUM: [f64; 16] = [-1.6666666666666667e-2, 5.6216931216931217e-4, -7.7849426807760141e-6, 6.3935068275346053e-8, -3.6162720366176054e-10, 1.521964813032108e-12, -4.9903671327269099e-15, 1.3146660923013403e-17, -2.8465551224535568e-20, 5.1573339704022613e-23, -7.9346055708042624e-26, 1.0495606146502293e-28, -1.206394737910204e-31, 1.2161246670388956e-34, -1.0838903169830464e-37, 8.602304641814818e-41];
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P2G1_DEN: [f64; 16] = [1.0, -1.25e-1, 7.03125e-3, -2.3923197751322751e-4, 5.5868158895502646e-6, -9.6220646757756133e-8, 1.2807071590506907e-9, -1.3617041305950766e-11, 1.1855880407235301e-13, -8.6182230810035388e-16, 5.3128711074170409e-18, -2.8138255748092532e-20, 1.2944325797176623e-22, -5.2211185467996031e-25, 1.8616886779435591e-27, -5.9107073280308355e-30];
// p2g2: numerator, denominator in powers of t^2
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P2G2_NUM: [f64; 16] = [-1.3888888888888889e-3, 2.2321428571428571e-4, -1.1264054232804233e-5, 3.0271297632408744e-7, -5.228267266725228e-9, 6.404462285732437e-11, -5.9082002391601773e-13, 4.2721546563101409e-15, -2.4917557307631252e-17, 1.1980870306741384e-19, -4.8319016155891468e-22, 1.6579996820192178e-24, -4.8989986475028641e-27, 1.2594116469556023e-29, -2.8422596304710302e-32, 5.6757304770090122e-35];
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P2G2_DEN: [f64; 16] = [1.0, -1.875e-1, 1.6145833333333333e-2, -8.5229621362433862e-4, 3.1098865327380952e-5, -8.3938018813507095e-7, 1.7522502993148635e-8, -2.9213622285983702e-10, 3.9859272634631784e-12, -4.5375038344954226e-14, 4.3780007800001127e-16, -3.6273148239135241e-18, 2.6094758931770371e-20, -1.6455447629310739e-22, 9.1715975595387384e-25, -4.5510663996860255e-27];
// p3g1: numerator, denominator in powers of t^2
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P3G1_NUM: [f64; 16] = [-8.3333333333333333e-3, 8.7081128747795414e-4, -2.2841955712326083e-5, 3.094227488374722e-7, -2.6494355772642813e-9, 1.5803856704872595e-11, -6.9751277846737383e-14, 2.376103625095318e-16, -6.4477306212846805e-19, 1.4283179811360688e-21, -2.6341067448172157e-24, 4.1095755015917311e-27, -5.4969537002427106e-30, 6.3756947831798919e-33, -6.4749616947387804e-36, 5.8065840381367411e-39];
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P3G1_DEN: [f64; 16] = [1.0, -1.7592592592592593e-1, 1.2705761316872428e-2, -5.1857658167671885e-4, 1.3792940191990134e-5, -2.6051695952787984e-7, 3.7013161408584187e-9, -4.1209498411300856e-11, 3.7064418062624572e-13, -2.7566191855996483e-15, 1.7269323354163159e-17, -9.2501666465354803e-20, 4.2891601178120525e-22, -1.7396653062259033e-24, 6.2272228101688137e-27, -1.9824591083837361e-29];
// p3g2: numerator, denominator in powers of t^2
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P3G2_NUM: [f64; 16] = [-1.9841269841269841e-4, 1.9473838918283363e-5, -5.9599275134254558e-7, 9.959993330341927e-9, -1.0968149427512071e-10, 8.7354533195585421e-13, -5.3186794654978442e-15, 2.569273090377156e-17, -1.0115580218122569e-19, 3.313651929355075e-22, -9.1815001707278075e-25, 2.1811970614713977e-27, -4.4936303792071724e-30, 8.1068380393987635e-33, -1.2915906278368219e-35, 1.8307641271327969e-38];
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P3G2_DEN: [f64; 16] = [1.0, -1.4814814814814815e-1, 9.9108367626886145e-3, -4.0099868632104572e-4, 1.1114953427164472e-5, -2.2686860807178961e-7, 3.5778771919506367e-9, -4.5129097411482544e-11, 4.672757757613615e-13, -4.0532275523269297e-15, 2.9937710615239727e-17, -1.9082248410159701e-19, 1.0614015639448558e-21, -5.2009055506116215e-24, 2.2633937081474761e-26, -8.8104018759006679e-29];
// p3g3: numerator, denominator in powers of t^2
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P3G3_NUM: [f64; 16] = [-7.3486184597295708e-6, 1.9051973784484073e-6, -1.82753240595033e-7, 8.6171760886626426e-9, -2.4804587886201375e-10, 4.9123153086825576e-12, -7.1968884675191404e-14, 8.1850347099780496e-16, -7.4771594400811906e-18, 5.627695374780891e-20, -3.5591037499151739e-22, 1.9212190543736946e-24, -8.9662079950008716e-27, 3.6566836439013271e-29, -1.3151189644332371e-31, 4.2038805168820202e-34];
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const P3G3_DEN: [f64; 16] = [1.0, -2.2222222222222222e-1, 2.294238683127572e-2, -1.4679092182521538e-3, 6.5567644990560705e-5, -2.1854081529802823e-6, 5.6767475165996304e-8, -1.1855410898848327e-9, 2.0383800192161108e-11, -2.9401997296505128e-13, 3.6129424905758937e-15, -3.8308619798984072e-17, 3.5431709408551493e-19, -2.8852918156209006e-21, 2.0854382499793653e-23, -1.347374909231577e-25];

#[cfg(test)]
mod tests {
    use super::*;

    /// `γ_j(t)` evaluated in 400-digit arithmetic from the closed forms.
    const REFERENCE: &[(&str, &[(f64, f64)])] = &[
        ("p1g1", &[(1e-6, -0.083333333333336111111), (1e-4, -0.083333333361111111095), (1e-3, -0.083333336111110945767), (0.01, -0.083333611109457648809), (0.1, -0.083361094553555762862), (0.3, -0.083581977069407276668), (0.5, -0.084017075896646161618), (1.0, -0.085920968105831780621), (1.49, -0.088389116746236169848), (1.51, -0.088485049044984285312), (2.0, -0.089815452982797565417), (2.5, -0.085128658484062362724), (3.0, -0.059971316810790816655), (3.1, -0.049553257183363117187)]),
        ("p2g1", &[(1e-6, -0.016666666666668187831), (1e-4, -0.016666666681878306886), (1e-3, -0.016666668187830768574), (0.01, -0.016666818783876215843), (0.1, -0.016681886384494473007), (0.3, -0.016804227874832524296), (0.5, -0.017052056454723446324), (1.0, -0.018272016581587418264), (1.49, -0.020481209942926202585), (1.51, -0.020597664185350977754), (2.0, -0.024290591626693470051), (2.5, -0.030365311765735715653), (3.0, -0.040412324818226452415), (3.1, -0.04315082478710824194)]),
        ("p2g2", &[(1e-6, -0.0013888888888889260913), (1e-4, -0.001388888889260912698), (1e-3, -0.001388888926091265656), (0.01, -0.001388892609085130944), (0.1, -0.0013892604936669248941), (0.3, -0.0013922028326278588663), (0.5, -0.0013979198925319998911), (1.0, -0.0014213665873943053136), (1.49, -0.0014444239840350964244), (1.51, -0.0014449604864855954298), (2.0, -0.0014278131812580246096), (2.5, -0.001261611277096756185), (3.0, -0.00063445737487707829432), (3.1, -0.00039103697638227383222)]),
        ("p3g1", &[(1e-6, -0.0083333333333339285714), (1e-4, -0.0083333333392857142879), (1e-3, -0.0083333339285714502499), (0.01, -0.0083333928573596416503), (0.1, -0.0083392878823907239438), (0.3, -0.0083870805466157112047), (0.5, -0.0084835017343060126388), (1.0, -0.0089504756788443101217), (1.49, -0.0097634948662779077139), (1.51, -0.0098051743574058569509), (2.0, -0.011063782762549957079), (2.5, -0.012844629447714669817), (3.0, -0.0147707157669648268), (3.1, -0.014996756200042400392)]),
        ("p3g2", &[(1e-6, -0.00019841269841270833333), (1e-4, -0.00019841269851190476191), (1e-3, -0.00019841270833333343261), (0.01, -0.00019841369047718326796), (0.1, -0.0001985119146759404312), (0.3, -0.00019930634943711677291), (0.5, -0.00020089883860874137021), (1.0, -0.00020841736190790281209), (1.49, -0.00022074125017045204145), (1.51, -0.00022134677018638220018), (2.0, -0.00023840949883802189481), (2.5, -0.00025827988497351738627), (3.0, -0.00027201013767794519609), (3.1, -0.00027209338497734833106)]),
        ("p3g3", &[(1e-6, -7.3486184597292986696e-6), (1e-4, -7.3486184570078602954e-6), (1e-3, -7.3486181875584704526e-6), (0.01, -7.3485912421609219224e-6), (0.1, -7.3458921149026695973e-6), (0.3, -7.3237464701989580623e-6), (0.5, -7.2776511187741381797e-6), (1.0, -7.0282622974784186171e-6), (1.49, -6.4961989106803027195e-6), (1.51, -6.4657446259998368459e-6), (2.0, -5.4112938456179436022e-6), (2.5, -3.5124347497678330365e-6), (3.0, -8.2802921931161756863e-7), (3.1, -3.4302523114685976913e-7)]),
    ];

    fn key(p: usize, j: usize) -> String {
        format!("p{p}g{j}")
    }

    #[test]
    fn matches_extended_precision_reference() {
        for &(name, rows) in REFERENCE {
            let p = name[1..2].parse::<usize>().unwrap();
            let j = name[3..4].parse::<usize>().unwrap();
            assert_eq!(key(p, j), name);
            for &(t, expect) in rows {
                let got = optimal_value(p, j, t);
                let rel = ((got - expect) / expect).abs();
                assert!(rel < 1e-10, "{name} t={t}: {got} vs {expect} rel {rel:e}");
            }
        }
    }

    #[test]
    fn series_and_closed_form_agree_near_switch() {
        for p in 1..=3 {
            for j in 1..=p {
                let (num, den) = series_coefficients(p, j);
                for t in [1.3, 1.5, 1.7] {
                    let s = horner(num, t * t) / horner(den, t * t);
                    let c = closed_form(p, j, t);
                    assert!(((s - c) / c).abs() < 1e-11, "p={p} j={j} t={t}");
                }
            }
        }
    }

    #[test]
    fn small_t_limit_for_linear_elements() {
        let g = |t: f64| optimal_value(1, 1, t);
        // Richardson extrapolation of the O(t^2) approach to the limit
        let extrapolated = (4.0 * g(1e-4) - g(2e-4)) / 3.0;
        assert!((extrapolated + 1.0 / 12.0).abs() < 1e-14);
        assert!((g(1e-3) + 1.0 / 12.0).abs() < 1e-7);
    }

    #[test]
    fn linear_value_at_quarter_period() {
        let t = std::f64::consts::FRAC_PI_2;
        let expect = (t * t * 2.0 - 6.0) / 12.0;
        let got = gamma_optimal(1, t).unwrap().values()[0].re;
        assert!((got - expect).abs() < 1e-14);
        assert!((got + 0.088766).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(gamma_optimal(1, 0.0), Err(PenaltyError::OutOfRange(0.0)));
        assert!(gamma_optimal(2, std::f64::consts::PI).is_err());
        assert!(gamma_optimal(2, -0.1).is_err());
        assert_eq!(gamma_optimal(4, 0.5), Err(PenaltyError::UnsupportedOrder(4)));
        assert!(matches!(
            gamma_constant(2, &[Complex64::new(1.0, 0.0)]),
            Err(PenaltyError::WrongLength { expected: 2, got: 1 })
        ));
        assert!(matches!(
            gamma_constant(1, &[Complex64::new(0.1, -0.5)]),
            Err(PenaltyError::NegativeImaginary(_))
        ));
    }

    #[test]
    fn constant_sets_and_provenance() {
        let zero = gamma_constant(3, &[Complex64::new(0.0, 0.0); 3]).unwrap();
        assert_eq!(zero.provenance(), Provenance::Zero);
        assert!(zero.is_zero());
        let classical = gamma_constant(1, &[Complex64::new(-1.0 / 12.0, 0.0)]).unwrap();
        assert_eq!(classical.provenance(), Provenance::Constant);
        let opt = gamma_optimal(2, 0.7).unwrap();
        let same = gamma_constant(2, opt.values()).unwrap();
        assert_eq!(opt.values(), same.values());
        assert!(opt.values().iter().all(|v| v.im == 0.0 && v.re.is_finite()));
    }

    #[test]
    fn overrides_take_precedence() {
        let set = PenaltySet::zero(2)
            .with_override(3, vec![Complex64::new(0.5, 0.1), Complex64::new(0.2, 0.0)])
            .unwrap();
        assert_eq!(set.value(3, 1), Complex64::new(0.5, 0.1));
        assert_eq!(set.value(0, 1), Complex64::new(0.0, 0.0));
        assert_eq!(set.provenance(), Provenance::Constant);
    }

    #[test]
    fn continuity_and_boundedness() {
        for p in 1..=3 {
            for j in 1..=p {
                let mut prev = optimal_value(p, j, 1e-3);
                let mut t = 2e-3;
                while t < std::f64::consts::PI - 1e-3 {
                    let v = optimal_value(p, j, t);
                    assert!(v.abs() <= 10.0, "p={p} j={j} t={t} v={v}");
                    assert!((v - prev).abs() < 5e-3, "jump at p={p} j={j} t={t}");
                    prev = v;
                    t += 1e-3;
                }
            }
        }
    }

    #[test]
    fn spec_strings_roundtrip() {
        for s in ["zero", "optimal", "const:-0.25", "const:0.1,0.2,0.3"] {
            let g: GammaSpec = s.parse().unwrap();
            assert_eq!(g.to_string().parse::<GammaSpec>().unwrap(), g);
        }
        assert!("const:".parse::<GammaSpec>().is_err());
        assert!("const:1,2,3,4".parse::<GammaSpec>().is_err());
        assert!("best".parse::<GammaSpec>().is_err());
        let g: GammaSpec = "const:-0.25".parse().unwrap();
        assert!(g.resolve(2, 0.5).is_err());
        assert_eq!(g.resolve(1, 0.5).unwrap().values()[0].re, -0.25);
    }
}
