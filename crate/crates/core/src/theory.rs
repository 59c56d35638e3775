//! Predicted leading terms of the per-class counts `D_T^Q` and of the
//! totals `D_T^n`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::arith::{badesa_factor, exact_sqrt, split_discriminant};
use crate::bqf::{class_representatives, Regime};
use crate::classnum::{class_data, omega, ClassNumError};
use crate::pell::{self, PellError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("n must be nonzero")]
    ZeroN,
    #[error("{k} is not an admissible content for n = {n}")]
    BadContent { n: i64, k: u64 },
    #[error(transparent)]
    ClassNumber(#[from] ClassNumError),
    #[error(transparent)]
    Pell(#[from] PellError),
}

/// Shape of a leading term: `C·T` or `C·T log T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Linear,
    TLogT,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub regime: Regime,
    pub coefficient: f64,
    pub growth: Growth,
}

impl Prediction {
    pub fn value_at(&self, t: f64) -> f64 {
        match self.growth {
            Growth::Linear => self.coefficient * t,
            Growth::TLogT => self.coefficient * t * t.ln(),
        }
    }
}

fn reduced_discriminant(n: i64, k: u64) -> Result<i64, TheoryError> {
    if n == 0 {
        return Err(TheoryError::ZeroN);
    }
    let kk = (k as i64).checked_mul(k as i64).filter(|&kk| k > 0 && (4 * n) % kk == 0);
    let Some(kk) = kk else {
        return Err(TheoryError::BadContent { n, k });
    };
    let d = 4 * n / kk;
    if d.rem_euclid(4) > 1 {
        return Err(TheoryError::BadContent { n, k });
    }
    Ok(d)
}

/// Leading term of `D_T^Q` for any class `Q` of content `k`.
pub fn predict_class(n: i64, k: u64) -> Result<Prediction, TheoryError> {
    let d = reduced_discriminant(n, k)?;
    let regime = Regime::of_discriminant(4 * n).expect("n is nonzero");
    let nf = (n as f64).abs();
    let (coefficient, growth) = match regime {
        Regime::Definite => (6.0 / (omega(d) as f64 * PI * nf.sqrt()), Growth::Linear),
        Regime::Indefinite => {
            let unit = pell::fundamental_unit(d)?;
            (12.0 * unit.regulator / (unit.kappa as f64 * PI * PI * nf.sqrt()), Growth::Linear)
        }
        Regime::Split => (6.0 / (PI * PI * nf.sqrt()), Growth::TLogT),
    };
    Ok(Prediction { regime, coefficient, growth })
}

/// Leading term of the total count `D_T^n`.
pub fn predict_total(n: i64) -> Result<Prediction, TheoryError> {
    if n == 0 {
        return Err(TheoryError::ZeroN);
    }
    let regime = Regime::of_discriminant(4 * n).expect("n is nonzero");
    let nf = (n as f64).abs();
    let (coefficient, growth) = match regime {
        Regime::Split => (12.0 / (PI * PI), Growth::TLogT),
        _ => {
            let split = split_discriminant(4 * n).expect("4n is a nonsquare discriminant");
            let h = class_data(split.d0)?.h as f64;
            let badesa = badesa_factor(split.f, split.d0) as f64;
            if regime == Regime::Definite {
                (12.0 * h * badesa / (omega(split.d0) as f64 * PI * nf.sqrt()), Growth::Linear)
            } else {
                let r = pell::regulator(split.d0)?;
                (12.0 * r * h * badesa / (PI * PI * nf.sqrt()), Growth::Linear)
            }
        }
    };
    Ok(Prediction { regime, coefficient, growth })
}

/// Sum of per-class coefficients over the class inventory against the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consistency {
    pub n: i64,
    pub class_sum: f64,
    pub total: f64,
    pub relative_error: f64,
}

pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

pub fn consistency_detail(n: i64) -> Result<Consistency, TheoryError> {
    if n == 0 {
        return Err(TheoryError::ZeroN);
    }
    let inventory = class_representatives(n);
    let mut class_sum = 0.0;
    for class in &inventory.classes {
        class_sum += predict_class(n, class.content)?.coefficient;
    }
    let total = predict_total(n)?.coefficient;
    Ok(Consistency { n, class_sum, total, relative_error: (class_sum - total).abs() / total })
}

/// Whether the class-level coefficients add up to the total coefficient.
pub fn consistency_check(n: i64) -> Result<bool, TheoryError> {
    Ok(consistency_detail(n)?.relative_error <= CONSISTENCY_TOLERANCE)
}

/// `k₀` with `n = k₀²`, if `n` is a positive square.
pub fn square_root_of_n(n: i64) -> Option<u64> {
    (n > 0).then(|| exact_sqrt(n as i128)).flatten().map(|r| r as u64)
}
