//! Volumes of the counting regions in `G/H` for the definite and indefinite
//! cases, the arcsin constant, and reassembly of the per-class coefficients
//! from stabilizer covolumes.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::arith::is_discriminant;
use crate::bqf::Regime;
use crate::classnum::omega;
use crate::pell::{self, PellError};
use crate::quadrature::{integrate, QuadratureError, Tolerance};
use crate::theory::{predict_class, TheoryError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionVolume {
    /// `T/|n|^{1/2}`
    pub m: f64,
    pub value: f64,
    pub ratio_to_leading: f64,
}

fn tolerance(m: f64) -> Tolerance {
    Tolerance { abs: 1e-9 * m, rel: 1e-11, max_intervals: 20_000 }
}

/// Hyperbolic area `∬ dx dy / y²` of `√max(1−y², 0) <= x <= √(y(M−y))`,
/// `1/M <= y <= M`. Leading term `M`.
pub fn definite_volume(m: f64) -> Result<RegionVolume, QuadratureError> {
    assert!(m > 1.0, "M must exceed 1");
    let tol = tolerance(m);
    // y in [1/M, 1] as y = e^s; the numerator is rationalized to avoid cancellation
    let lower = integrate(
        |s| {
            let y = s.exp();
            let width = (y * m - 1.0) / ((y * (m - y)).sqrt() + (1.0 - y * y).max(0.0).sqrt());
            width / y
        },
        -m.ln(),
        0.0,
        tol,
    )?;
    // y in [1, M/2] as y = e^s
    let half = 0.5 * m;
    let middle = if half > 1.0 {
        integrate(|s| (s.exp() * (m - s.exp())).sqrt() / s.exp(), 0.0, half.ln(), tol)?
    } else {
        0.0
    };
    // y in [max(1, M/2), M] as y = M − w², removing the square-root endpoint
    let y0 = half.max(1.0);
    let upper = integrate(
        |w| {
            let y = m - w * w;
            2.0 * w * w * y.sqrt() / (y * y)
        },
        0.0,
        (m - y0).sqrt(),
        tol,
    )?;
    let value = lower + middle + upper;
    Ok(RegionVolume { m, value, ratio_to_leading: value / m })
}

/// `(1/2)[u₀π/2 + ∫_{u₀}^{M} arcsin((M−u)/√(1+u²)) du]`, `u₀ = (M²−1)/(2M)`.
/// Leading term `M/2`.
pub fn indefinite_volume(m: f64) -> Result<RegionVolume, QuadratureError> {
    assert!(m > 1.0, "M must exceed 1");
    let u0 = (m * m - 1.0) / (2.0 * m);
    // u = u₀ + w²: the arcsin has a square-root singularity at u₀
    let tail = integrate(
        |w| {
            let u = u0 + w * w;
            let arg = ((m - u) / (1.0 + u * u).sqrt()).min(1.0);
            2.0 * w * arg.asin()
        },
        0.0,
        (m - u0).sqrt(),
        tolerance(m),
    )?;
    let value = 0.5 * (u0 * FRAC_PI_2 + tail);
    Ok(RegionVolume { m, value, ratio_to_leading: value / (0.5 * m) })
}

/// The two pieces `∫₀^{1/2} π/2 dv` and `∫_{1/2}^1 arcsin((1−v)/v) dv`.
pub fn arcsin_terms() -> (f64, f64) {
    let tol = Tolerance { abs: 1e-14, rel: 1e-14, max_intervals: 5_000 };
    let first = integrate(|_| FRAC_PI_2, 0.0, 0.5, tol).expect("constant integrand");
    // v = 1/2 + w²
    let second = integrate(
        |w| {
            let v = 0.5 + w * w;
            2.0 * w * ((1.0 - v) / v).clamp(-1.0, 1.0).asin()
        },
        0.0,
        0.5f64.sqrt(),
        tol,
    )
    .expect("smooth after substitution");
    (first, second)
}

/// Limit of `indefinite_volume(M)/(M/2)`; equals 1.
pub fn arcsin_constant() -> f64 {
    let (first, second) = arcsin_terms();
    first + second
}

/// Haar volume of `Γ\G` and covolumes of the stabilizers `Γ ∩ H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covolumes {
    pub gamma_g: f64,
}

pub fn covolume_constants() -> Covolumes {
    Covolumes { gamma_g: PI * PI / 6.0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reassembly {
    pub n: i64,
    pub content: u64,
    pub d: i64,
    pub reassembled: f64,
    pub predicted: f64,
    pub relative_error: f64,
}

impl Covolumes {
    /// `π/ω(d)` for a negative discriminant.
    pub fn definite_covolume(&self, d: i64) -> f64 {
        PI / omega(d) as f64
    }

    /// `2 log ε_d^{2/κ(d)} = (4/κ(d)) log ε_d`.
    pub fn indefinite_covolume(&self, d: i64) -> Result<f64, PellError> {
        let unit = pell::fundamental_unit(d)?;
        Ok(4.0 / unit.kappa as f64 * unit.regulator)
    }

    /// Coefficient of `T` in `D_T^Q` for a class of content `k`, rebuilt as
    /// covolume × region-volume leading coefficient / `m_G(Γ\G)`.
    pub fn reassemble(&self, n: i64, k: u64) -> Result<Reassembly, TheoryError> {
        let predicted = predict_class(n, k)?;
        let d = 4 * n / (k * k) as i64;
        let nf = (n as f64).abs().sqrt();
        let reassembled = match predicted.regime {
            Regime::Definite => self.definite_covolume(d) * (1.0 / nf) / self.gamma_g,
            Regime::Indefinite => self.indefinite_covolume(d)? * (1.0 / (2.0 * nf)) / self.gamma_g,
            Regime::Split => return Err(TheoryError::BadContent { n, k }),
        };
        let relative_error = (reassembled - predicted.coefficient).abs() / predicted.coefficient;
        Ok(Reassembly { n, content: k, d, reassembled, predicted: predicted.coefficient, relative_error })
    }
}

/// Reassembly for every nonsquare discriminant `d'` with `|d'| <= bound`,
/// realized as `4n/k²` with `k = 2` and, when `4 | d'`, also `k = 1`.
pub fn reassemble_all(bound: i64) -> Result<Vec<Reassembly>, TheoryError> {
    let covolumes = covolume_constants();
    let mut out = Vec::new();
    for d in -bound..=bound {
        if !is_discriminant(d) || crate::arith::is_square(d) {
            continue;
        }
        for k in [1u64, 2] {
            if (d * (k * k) as i64) % 4 == 0 {
                let n = d * (k * k) as i64 / 4;
                out.push(covolumes.reassemble(n, k)?);
            }
        }
    }
    Ok(out)
}
