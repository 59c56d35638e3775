//! Exact integer arithmetic: square roots, factorization, the Kronecker
//! symbol, discriminant splitting and square roots modulo composite moduli.

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not a discriminant (must be nonzero and congruent to 0 or 1 mod 4)")]
    NotDiscriminant(i64),
    #[error("{0} is a perfect square")]
    SquareDiscriminant(i64),
}

/// Floor square root of a nonnegative integer.
///
/// Panics on negative input.
pub fn isqrt(m: i64) -> i64 {
    assert!(m >= 0, "isqrt of negative number {m}");
    isqrt_u128(m as u128) as i64
}

/// Floor square root over `u128`, corrected after a floating-point guess.
pub fn isqrt_u128(m: u128) -> u128 {
    if m < 2 {
        return m;
    }
    let mut r = (m as f64).sqrt() as u128;
    // the float guess may be off by a few units at the top of the range
    while r.checked_mul(r).is_none_or(|sq| sq > m) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= m) {
        r += 1;
    }
    r
}

/// Returns `Some(r)` with `r >= 0` and `r * r == m` if `m` is a perfect
/// square. Zero counts as a square.
pub fn exact_sqrt(m: i128) -> Option<i128> {
    if m < 0 {
        return None;
    }
    let r = isqrt_u128(m as u128) as i128;
    (r * r == m).then_some(r)
}

pub fn is_square(m: i64) -> bool {
    exact_sqrt(m as i128).is_some()
}

/// Kronecker symbol `(a / b)`.
///
/// Panics when `a == b == 0`.
pub fn kronecker(a: i64, b: i64) -> i32 {
    assert!(a != 0 || b != 0, "kronecker(0, 0) is undefined");
    let mut a = a as i128;
    let mut b = b as i128;
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1;
    if b < 0 {
        b = -b;
        if a < 0 {
            result = -result;
        }
    }
    let twos = b.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a/2) = +1 for a = ±1 mod 8, -1 for a = ±3 mod 8
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        b >>= twos;
    }
    // Jacobi symbol (a / b) for odd positive b
    a = a.rem_euclid(b);
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(b % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && b % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut b);
        a %= b;
    }
    if b == 1 {
        result
    } else {
        0
    }
}

/// Smallest-prime-factor table for `0..=limit`.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: u64) -> Self {
        let limit = limit.max(1) as usize;
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                let mut j = i.saturating_mul(i);
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        SpfSieve { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn smallest_factor(&self, m: u64) -> Option<u64> {
        self.spf.get(m as usize).filter(|&&p| p != 0).map(|&p| p as u64)
    }
}

/// Prime factorization with strictly increasing primes and positive exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }
}

/// Factorizes `m >= 1`, using the sieve when `m` lies within its range and
/// trial division otherwise.
pub fn factorize(m: u64, sieve: Option<&SpfSieve>) -> Factorization {
    assert!(m >= 1, "factorize expects a positive integer");
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut push = |p: u64| match factors.last_mut() {
        Some((q, e)) if *q == p => *e += 1,
        _ => factors.push((p, 1)),
    };
    let mut rest = m;
    match sieve {
        Some(s) if m <= s.limit() => {
            while rest > 1 {
                let p = s.smallest_factor(rest).expect("within sieve range");
                push(p);
                rest /= p;
            }
        }
        _ => {
            let mut p = 2u64;
            while p * p <= rest {
                while rest.is_multiple_of(p) {
                    push(p);
                    rest /= p;
                }
                p += if p == 2 { 1 } else { 2 };
            }
            if rest > 1 {
                push(rest);
            }
        }
    }
    Factorization { value: m, factors }
}

/// Sum of divisors of a prime power `p^e` (equal to 1 for `e = 0`).
pub fn sigma1_prime_power(p: u64, e: u32) -> u64 {
    (0..=e).map(|k| p.pow(k)).sum()
}

/// Sum of the positive divisors of `m`.
pub fn sigma1(m: u64) -> u64 {
    factorize(m, None)
        .factors
        .iter()
        .map(|&(p, e)| sigma1_prime_power(p, e))
        .product()
}

pub fn is_squarefree(m: u64) -> bool {
    factorize(m, None).factors.iter().all(|&(_, e)| e == 1)
}

/// Whether `d` is the discriminant of a quadratic field.
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

pub fn is_discriminant(d: i64) -> bool {
    d != 0 && matches!(d.rem_euclid(4), 0 | 1)
}

/// A nonsquare discriminant written as `d0 * f^2` with `d0` fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscriminantSplit {
    pub d: i64,
    pub d0: i64,
    pub f: u64,
}

pub fn split_discriminant(d: i64) -> Result<DiscriminantSplit, ArithError> {
    if !is_discriminant(d) {
        return Err(ArithError::NotDiscriminant(d));
    }
    if is_square(d) {
        return Err(ArithError::SquareDiscriminant(d));
    }
    let sign = d.signum();
    let mut core = 1i64;
    let mut f = 1u64;
    for (p, e) in factorize(d.unsigned_abs(), None).factors {
        f *= p.pow(e / 2);
        if e % 2 == 1 {
            core *= p as i64;
        }
    }
    let mut d0 = sign * core;
    // squarefree kernel ≡ 2,3 mod 4 needs a factor 4 back from f
    if d0.rem_euclid(4) != 1 {
        d0 *= 4;
        f /= 2;
    }
    debug_assert_eq!(d0 as i128 * (f as i128).pow(2), d as i128);
    Ok(DiscriminantSplit { d, d0, f })
}

/// `∏_{p^e || f} (σ₁(p^e) − χ_{d0}(p)·σ₁(p^{e−1}))`.
pub fn badesa_factor(f: u64, d0: i64) -> u64 {
    factorize(f, None)
        .factors
        .iter()
        .map(|&(p, e)| {
            let chi = kronecker(d0, p as i64) as i64;
            (sigma1_prime_power(p, e) as i64 - chi * sigma1_prime_power(p, e - 1) as i64) as u64
        })
        .product()
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Tonelli–Shanks: a root of `u` modulo an odd prime `p`, `u` a nonzero residue.
fn tonelli_shanks(u: u64, p: u64) -> Option<u64> {
    let u = u % p;
    if pow_mod(u, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(u, (p + 1) / 4, p));
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let z = (2..p)
        .find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1)
        .expect("odd prime has a nonresidue");
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(u, q, p);
    let mut r = pow_mod(u, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    let e = (a as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

/// Square roots of a unit `u` modulo `p^k`, `k >= 1`.
fn unit_roots_prime_power(u: u64, p: u64, k: u32) -> Vec<u64> {
    let pk = p.pow(k);
    let u = u % pk;
    if p == 2 {
        return match k {
            1 => vec![1],
            2 => {
                if u % 4 == 1 {
                    vec![1, 3]
                } else {
                    vec![]
                }
            }
            _ => {
                if u % 8 != 1 {
                    return vec![];
                }
                // lift x from mod 2^j to mod 2^(j+1) keeping x^2 ≡ u mod 2^(j+1)
                let mut x = 1u64;
                for j in 3..k {
                    let modulus = 1u64 << (j + 1);
                    if mul_mod(x, x, modulus) != u % modulus {
                        x += 1 << (j - 1);
                    }
                }
                let half = pk / 2;
                let mut v = vec![x, pk - x, (x + half) % pk, (pk - x + half) % pk];
                v.sort_unstable();
                v.dedup();
                v
            }
        };
    }
    let Some(mut x) = tonelli_shanks(u % p, p) else {
        return vec![];
    };
    // Hensel: x <- x - (x^2 - u) / (2x)
    let mut modulus = p;
    for _ in 1..k {
        modulus *= p;
        let fx = (mul_mod(x, x, modulus) + modulus - u % modulus) % modulus;
        let inv = inverse_mod(mul_mod(2, x, modulus), modulus);
        x = (x + modulus - mul_mod(fx, inv, modulus)) % modulus;
    }
    let mut v = vec![x, (pk - x) % pk];
    v.sort_unstable();
    v.dedup();
    v
}

/// All `x` in `[0, p^k)` with `x^2 ≡ n (mod p^k)`.
fn roots_prime_power(n: i64, p: u64, k: u32) -> Vec<u64> {
    let pk = p.pow(k);
    let r = (n as i128).rem_euclid(pk as i128) as u64;
    if r == 0 {
        let step = p.pow(k.div_ceil(2));
        return (0..pk / step).map(|j| j * step).collect();
    }
    let mut v = 0u32;
    let mut unit = r;
    while unit.is_multiple_of(p) {
        unit /= p;
        v += 1;
    }
    if v % 2 == 1 {
        return vec![];
    }
    let rest = k - v;
    let base = unit_roots_prime_power(unit, p, rest);
    if v == 0 {
        return base;
    }
    // x = p^(v/2) * y with y^2 ≡ unit mod p^(k-v); y is free mod p^(k - v/2)
    let scale = p.pow(v / 2);
    let y_mod = p.pow(rest);
    let mut out: Vec<u64> = base
        .iter()
        .flat_map(|&y0| (0..scale).map(move |j| ((y0 + j * y_mod) * scale) % pk))
        .collect();
    out.sort_unstable();
    out
}

/// All residues `x` in `[0, m)` with `x^2 ≡ n (mod m)`, sorted ascending.
pub fn sqrt_mod(n: i64, m: u64, factorization: &Factorization) -> Vec<u64> {
    debug_assert_eq!(factorization.value, m);
    let mut roots = vec![0u64];
    let mut modulus = 1u64;
    for &(p, e) in &factorization.factors {
        let pe = p.pow(e);
        let local = roots_prime_power(n, p, e);
        if local.is_empty() {
            return vec![];
        }
        // CRT: x ≡ r (mod modulus), x ≡ s (mod pe)
        let inv = inverse_mod(modulus % pe, pe);
        let next = modulus * pe;
        let mut combined = Vec::with_capacity(roots.len() * local.len());
        for &r in &roots {
            for &s in &local {
                let t = mul_mod((s + pe - r % pe) % pe, inv, pe);
                combined.push((r as u128 + modulus as u128 * t as u128) as u64 % next);
            }
        }
        roots = combined;
        modulus = next;
    }
    roots.sort_unstable();
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn brute_roots(n: i64, m: u64) -> Vec<u64> {
        let r = (n as i128).rem_euclid(m as i128) as u64;
        (0..m).filter(|&x| mul_mod(x, x, m) == r).collect()
    }

    #[test]
    fn isqrt_examples() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(15), 3);
        assert_eq!(isqrt(1_000_000_000_000_000_000), 1_000_000_000);
        assert_eq!(isqrt(i64::MAX), 3_037_000_499);
        assert_eq!(isqrt_u128(u128::MAX), u64::MAX as u128);
    }

    #[test]
    #[should_panic]
    fn isqrt_negative_panics() {
        isqrt(-1);
    }

    #[test]
    fn zero_is_a_square() {
        assert_eq!(exact_sqrt(0), Some(0));
        assert_eq!(exact_sqrt(-4), None);
        assert!(!is_square(8));
    }

    fn brute_legendre(a: i64, p: i64) -> i32 {
        let r = a.rem_euclid(p);
        if r == 0 {
            0
        } else if (1..p).any(|x| (x * x) % p == r) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-4, 5), 1);
        for d in [-20, -4, -3, 0, 1, 5, 8, 12] {
            assert_eq!(kronecker(d, 1), 1);
        }
        // x^2 ≡ 5 mod 8 has no solution
        assert!(!(0..8).any(|x: i64| (x * x) % 8 == 5));
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(8, 3), -1);
    }

    #[test]
    fn kronecker_matches_legendre_for_odd_primes() {
        for p in [3i64, 5, 7, 11, 13, 97] {
            for a in -60..60 {
                assert_eq!(kronecker(a, p), brute_legendre(a, p), "({a}/{p})");
            }
        }
    }

    #[test]
    fn kronecker_completely_multiplicative_in_bottom() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a: i64 = rng.gen_range(-1000..1000);
            let b: i64 = rng.gen_range(-1000..1000);
            let c: i64 = rng.gen_range(-1000..1000);
            if a == 0 && (b == 0 || c == 0) {
                continue;
            }
            assert_eq!(kronecker(a, b * c), kronecker(a, b) * kronecker(a, c), "{a} {b} {c}");
        }
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1, None).factors.is_empty());
        assert_eq!(factorize(20, None).factors, vec![(2, 2), (5, 1)]);
        assert_eq!(factorize(97, None).factors, vec![(97, 1)]);
        let sieve = SpfSieve::new(1000);
        for m in 1..=2000 {
            assert_eq!(factorize(m, Some(&sieve)), factorize(m, None));
        }
    }

    #[test]
    fn sigma1_examples() {
        assert_eq!(sigma1(1), 1);
        assert_eq!(sigma1(4), 7);
        assert_eq!(sigma1(12), 28);
        assert_eq!(sigma1_prime_power(7, 0), 1);
        for m in 1..300u64 {
            assert_eq!(sigma1(m), (1..=m).filter(|d| m % d == 0).sum::<u64>());
        }
    }

    #[test]
    fn split_discriminant_examples() {
        let s = split_discriminant(-20).unwrap();
        assert_eq!((s.d0, s.f), (-20, 1));
        let s = split_discriminant(-16).unwrap();
        assert_eq!((s.d0, s.f), (-4, 2));
        let s = split_discriminant(20).unwrap();
        assert_eq!((s.d0, s.f), (5, 2));
        assert_eq!(split_discriminant(16), Err(ArithError::SquareDiscriminant(16)));
        assert_eq!(split_discriminant(7), Err(ArithError::NotDiscriminant(7)));
        assert_eq!(split_discriminant(0), Err(ArithError::NotDiscriminant(0)));
    }

    #[test]
    fn split_discriminant_round_trips() {
        for d0 in -100i64..=100 {
            if !is_fundamental(d0) {
                continue;
            }
            for f in 1..=50u64 {
                let d = d0 * (f * f) as i64;
                let s = split_discriminant(d).unwrap();
                assert_eq!((s.d0, s.f), (d0, f), "d = {d}");
            }
        }
    }

    #[test]
    fn fundamental_discriminants() {
        let small: Vec<i64> = (-30..=30).filter(|&d| is_fundamental(d)).collect();
        assert_eq!(
            small,
            vec![-24, -23, -20, -19, -15, -11, -8, -7, -4, -3, 5, 8, 12, 13, 17, 21, 24, 28, 29]
        );
    }

    #[test]
    fn badesa_factor_examples() {
        assert_eq!(badesa_factor(1, -4), 1);
        assert_eq!(badesa_factor(1, 5), 1);
        assert_eq!(badesa_factor(2, -4), 3);
        assert_eq!(badesa_factor(2, 5), 4);
    }

    /// `Σ_{l|f} l ∏_{p|l} (1 − χ(p)/p)` evaluated over exact rationals.
    fn divisor_sum_g(f: u64, d0: i64) -> num_rational::Ratio<i64> {
        use num_rational::Ratio;
        let mut total = Ratio::zero();
        for l in (1..=f).filter(|l| f.is_multiple_of(*l)) {
            let mut term = Ratio::from_integer(l as i64);
            for (p, _) in factorize(l, None).factors {
                term *= Ratio::one() - Ratio::new(kronecker(d0, p as i64) as i64, p as i64);
            }
            total += term;
        }
        total
    }

    #[test]
    fn badesa_factor_equals_divisor_sum() {
        for d0 in [-4i64, -3, 5, 8, -20] {
            for f in 1..=10_000u64 {
                let g = divisor_sum_g(f, d0);
                assert!(g.is_integer());
                assert_eq!(*g.numer(), badesa_factor(f, d0) as i64, "f = {f}, d0 = {d0}");
            }
        }
    }

    #[test]
    fn sqrt_mod_examples() {
        assert_eq!(sqrt_mod(1, 8, &factorize(8, None)), vec![1, 3, 5, 7]);
        assert!(sqrt_mod(2, 3, &factorize(3, None)).is_empty());
        assert_eq!(sqrt_mod(0, 1, &factorize(1, None)), vec![0]);
    }

    #[test]
    fn sqrt_mod_small_moduli_exhaustive() {
        for m in 1..=600u64 {
            let fm = factorize(m, None);
            for n in -40i64..40 {
                assert_eq!(sqrt_mod(n, m, &fm), brute_roots(n, m), "n = {n}, m = {m}");
            }
        }
    }

    #[test]
    fn sqrt_mod_matches_brute_force_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let sieve = SpfSieve::new(100_000);
        for _ in 0..400 {
            let m = rng.gen_range(1..=100_000u64);
            let fm = factorize(m, Some(&sieve));
            for _ in 0..50 {
                let n = rng.gen_range(-1_000_000i64..1_000_000);
                assert_eq!(sqrt_mod(n, m, &fm), brute_roots(n, m), "n = {n}, m = {m}");
            }
        }
    }

    proptest! {
        #[test]
        fn isqrt_brackets(m in 0i64..i64::MAX) {
            let r = isqrt(m) as i128;
            prop_assert!(r * r <= m as i128 && (r + 1) * (r + 1) > m as i128);
        }

        #[test]
        fn factorization_multiplies_back(m in 1u64..10_000_000) {
            let f = factorize(m, None);
            prop_assert_eq!(f.factors.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), m);
            prop_assert!(f.factors.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(f.factors.iter().all(|&(_, e)| e >= 1));
        }
    }
}
