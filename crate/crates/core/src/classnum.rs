//! Class numbers `h(d)`, narrow class numbers `h⁺(d)`, the ω table and the
//! ring class number formula as an executable identity.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_rational::Ratio;
use thiserror::Error;

use crate::arith::{factorize, is_discriminant, is_fundamental, is_square, kronecker};
use crate::bqf::{indefinite_cycles, reduced_definite_forms};
use crate::pell::{self, PellError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassNumError {
    #[error("{0} is not a nonsquare discriminant")]
    InvalidDiscriminant(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error(transparent)]
    Pell(#[from] PellError),
}

/// Class data of a nonsquare discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassData {
    pub d: i64,
    pub h: u64,
    pub h_plus: u64,
    /// `Some(ω(d))` for `d < 0`
    pub omega: Option<u32>,
}

/// Order of the SL₂(ℤ)-stabilizer of a primitive definite form of discriminant `d`.
pub fn omega(d: i64) -> u32 {
    assert!(d < 0 && is_discriminant(d), "omega needs a negative discriminant, got {d}");
    match d {
        -4 => 4,
        -3 => 6,
        _ => 2,
    }
}

fn check(d: i64) -> Result<(), ClassNumError> {
    if !is_discriminant(d) || is_square(d) {
        return Err(ClassNumError::InvalidDiscriminant(d));
    }
    Ok(())
}

fn cache() -> &'static RwLock<HashMap<i64, ClassData>> {
    static CACHE: OnceLock<RwLock<HashMap<i64, ClassData>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `h`, `h⁺` and ω for a nonsquare discriminant, memoized.
pub fn class_data(d: i64) -> Result<ClassData, ClassNumError> {
    check(d)?;
    if let Some(data) = cache().read().expect("cache poisoned").get(&d) {
        return Ok(*data);
    }
    let data = if d < 0 {
        let h = reduced_definite_forms(d).len() as u64;
        ClassData { d, h, h_plus: h, omega: Some(omega(d)) }
    } else {
        // each proper class is one cycle of reduced forms
        let h_plus = indefinite_cycles(d).len() as u64;
        let kappa = pell::kappa(d)? as u64;
        debug_assert_eq!(h_plus % kappa, 0);
        ClassData { d, h: h_plus / kappa, h_plus, omega: None }
    };
    cache().write().expect("cache poisoned").insert(d, data);
    Ok(data)
}

/// Class number of the order of discriminant `d`.
pub fn class_number(d: i64) -> Result<u64, ClassNumError> {
    Ok(class_data(d)?.h)
}

/// Number of proper classes of primitive forms of discriminant `d > 0`.
pub fn narrow_class_number(d: i64) -> Result<u64, ClassNumError> {
    if d <= 0 {
        return Err(ClassNumError::InvalidDiscriminant(d));
    }
    Ok(class_data(d)?.h_plus)
}

/// Checks `h(d0 f²) = h(d0) f / [O_{d0}^× : O_{d0 f²}^×] · ∏_{p|f} (1 − χ_{d0}(p)/p)`
/// in exact rational arithmetic.
pub fn ring_class_check(d0: i64, f: u64) -> Result<bool, ClassNumError> {
    if !is_fundamental(d0) {
        return Err(ClassNumError::NotFundamental(d0));
    }
    let d = d0 * (f * f) as i64;
    let lhs = Ratio::from_integer(class_number(d)? as i128);
    let mut rhs = Ratio::new(
        class_number(d0)? as i128 * f as i128,
        pell::unit_index(d0, f)? as i128,
    );
    for p in factorize(f, None).primes() {
        rhs *= Ratio::new(p as i128 - kronecker(d0, p as i64) as i128, p as i128);
    }
    Ok(lhs == rhs)
}
