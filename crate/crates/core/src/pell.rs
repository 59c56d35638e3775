//! Pell-type equations `t² − d s² = ±4`, fundamental units of quadratic
//! orders, the norm sign κ, regulators and unit indices.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{is_discriminant, is_fundamental, isqrt_u128};
use crate::classnum::omega;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PellError {
    #[error("{0} is not a positive nonsquare discriminant")]
    InvalidDiscriminant(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("continued fraction of discriminant {d} did not close within {limit} steps")]
    IterationLimit { d: i64, limit: usize },
}

/// Cap on continued-fraction steps; the period of √d is O(√d log d).
const MAX_CF_STEPS: usize = 50_000_000;

/// Fundamental unit `ε_d = (eps_x + eps_y √d)/2` of the order of discriminant
/// `d > 0` together with the minimal solution of `t² − d s² = 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitData {
    pub d: i64,
    pub t: BigInt,
    pub s: BigInt,
    pub eps_x: BigInt,
    pub eps_y: BigInt,
    /// norm of ε_d, ±1
    pub norm: i8,
    /// 1 if the norm is −1, 2 otherwise
    pub kappa: u8,
    /// `log ε_d`
    pub regulator: f64,
}

fn check_discriminant(d: i64) -> Result<(), PellError> {
    let square = isqrt_u128(d.max(0) as u128).pow(2) == d.max(0) as u128;
    if d <= 0 || !is_discriminant(d) || square {
        return Err(PellError::InvalidDiscriminant(d));
    }
    Ok(())
}

/// Continued fraction of `ω = (P₀ + √d)/2`, `P₀ ≡ d (mod 2)`. The first
/// index k with complete-quotient denominator `Q_{k+1} = 2` yields the
/// fundamental unit `A_k − B_k ω̄ = (2A_k − P₀B_k + B_k√d)/2`.
fn unit_by_continued_fraction(d: i64) -> Result<(BigInt, BigInt), PellError> {
    let root = isqrt_u128(d as u128) as i128;
    let d128 = d as i128;
    let p0 = d128.rem_euclid(2);
    let (mut p, mut q) = (p0, 2i128);
    // A_{k-2}, A_{k-1} and B_{k-2}, B_{k-1} before step k
    let (mut a_prev, mut a_cur) = (BigInt::zero(), BigInt::one());
    let (mut b_prev, mut b_cur) = (BigInt::one(), BigInt::zero());
    for _ in 0..MAX_CF_STEPS {
        let digit = Integer::div_floor(&(p + root), &q);
        let a_next = &a_cur * digit + &a_prev;
        let b_next = &b_cur * digit + &b_prev;
        a_prev = std::mem::replace(&mut a_cur, a_next);
        b_prev = std::mem::replace(&mut b_cur, b_next);
        p = digit * q - p;
        q = (d128 - p * p) / q;
        if q == 2 {
            let x = BigInt::from(2) * &a_cur - BigInt::from(p0) * &b_cur;
            return Ok((x, b_cur));
        }
    }
    Err(PellError::IterationLimit { d, limit: MAX_CF_STEPS })
}

/// Minimal positive `(t, s)` with `t² − d s² = 4`.
pub fn pell4_min(d: i64) -> Result<(BigInt, BigInt), PellError> {
    let unit = fundamental_unit(d)?;
    Ok((unit.t.clone(), unit.s.clone()))
}

/// Natural log of a positive big integer, accurate to double precision.
fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("fits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `log((x + y√d)/2)` for a unit with `x² − d y² = 4·norm`, `x, y > 0`.
fn unit_log(x: &BigInt, norm: i8) -> f64 {
    // ε = (x + √(x² − 4·norm))/2, so log ε = log x + log((1 + √(1 − 4·norm/x²))/2)
    let xf = x.to_f64().unwrap_or(f64::INFINITY);
    if xf < 1e150 {
        let disc = xf * xf - 4.0 * norm as f64;
        return ((xf + disc.sqrt()) / 2.0).ln();
    }
    let r = 4.0 * norm as f64 * (-2.0 * ln_big(x)).exp();
    ln_big(x) + ((1.0 + (1.0 - r).sqrt()) / 2.0).ln()
}

fn compute_unit(d: i64) -> Result<UnitData, PellError> {
    check_discriminant(d)?;
    let (x, y) = unit_by_continued_fraction(d)?;
    let db = BigInt::from(d);
    let n4: BigInt = &x * &x - &db * &y * &y;
    let norm: i8 = if n4 == BigInt::from(4) { 1 } else { -1 };
    debug_assert_eq!(n4, BigInt::from(4 * norm as i64));
    let (t, s) = if norm == 1 {
        (x.clone(), y.clone())
    } else {
        // ε² = ((x² + d y²)/2 + x y √d)/2
        ((&x * &x + &db * &y * &y) / 2, &x * &y)
    };
    let regulator = unit_log(&x, norm);
    Ok(UnitData { d, t, s, eps_x: x, eps_y: y, norm, kappa: if norm == -1 { 1 } else { 2 }, regulator })
}

fn unit_cache() -> &'static RwLock<HashMap<i64, Arc<UnitData>>> {
    static CACHE: OnceLock<RwLock<HashMap<i64, Arc<UnitData>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Fundamental unit of the order of discriminant `d`, memoized per `d`.
pub fn fundamental_unit(d: i64) -> Result<Arc<UnitData>, PellError> {
    if let Some(u) = unit_cache().read().expect("cache poisoned").get(&d) {
        return Ok(Arc::clone(u));
    }
    let unit = Arc::new(compute_unit(d)?);
    unit_cache().write().expect("cache poisoned").insert(d, Arc::clone(&unit));
    Ok(unit)
}

pub fn kappa(d: i64) -> Result<u8, PellError> {
    Ok(fundamental_unit(d)?.kappa)
}

pub fn regulator(d: i64) -> Result<f64, PellError> {
    Ok(fundamental_unit(d)?.regulator)
}

/// Product of `(x1 + y1√d)/2` and `(x2 + y2√d)/2` in the same representation.
pub fn unit_mul(d: i64, (x1, y1): (&BigInt, &BigInt), (x2, y2): (&BigInt, &BigInt)) -> (BigInt, BigInt) {
    let x = (x1 * x2 + BigInt::from(d) * y1 * y2) / 2;
    let y = (x1 * y2 + x2 * y1) / 2;
    (x, y)
}

/// Whether `(x + y√d0)/2` lies in the order of discriminant `d0 f²`.
fn in_suborder(d0: i64, f: u64, x: &BigInt, y: &BigInt) -> bool {
    let fb = BigInt::from(f);
    if !y.is_multiple_of(&fb) {
        return false;
    }
    // (x + y'√(d0 f²))/2 with x ≡ y'·d0 f² (mod 2)
    let y_sub = y / &fb;
    let parity: BigInt = &y_sub * BigInt::from(d0) * BigInt::from(f * f);
    (x - parity).is_even()
}

/// `[O_{d0}^× : O_{d0 f²}^×]`.
pub fn unit_index(d0: i64, f: u64) -> Result<u64, PellError> {
    if !is_fundamental(d0) {
        return Err(PellError::NotFundamental(d0));
    }
    assert!(f >= 1, "conductor must be positive");
    if d0 < 0 {
        let df = d0 * (f * f) as i64;
        return Ok((omega(d0) / omega(df)) as u64);
    }
    let unit = fundamental_unit(d0)?;
    let base = (&unit.eps_x, &unit.eps_y);
    let (mut x, mut y) = (unit.eps_x.clone(), unit.eps_y.clone());
    let mut j = 1u64;
    while !in_suborder(d0, f, &x, &y) {
        (x, y) = unit_mul(d0, (&x, &y), base);
        j += 1;
    }
    debug_assert!(x.sign() == Sign::Plus && y.is_positive());
    Ok(j)
}
