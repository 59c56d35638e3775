//! Integral binary quadratic forms under the congruence action of SL₂(ℤ):
//! reduction, proper equivalence, class enumeration and stabilizers.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::arith::{exact_sqrt, isqrt_u128};
use crate::pell;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BqfError {
    #[error("form {0} is degenerate (discriminant 0)")]
    Degenerate(QuadForm),
    #[error("form {form} has the wrong discriminant regime: {expected}")]
    WrongRegime { form: QuadForm, expected: &'static str },
    #[error("form {0} is not primitive")]
    Imprimitive(QuadForm),
    #[error("{a}*{c} + {n} is not a perfect square")]
    NotSquare { a: i64, c: i64, n: i64 },
    #[error("pair ({a}, {c}) must satisfy a > c with both nonzero")]
    BadPair { a: i64, c: i64 },
    #[error("matrix ({p}, {q}; {r}, {s}) does not have determinant 1")]
    NotUnimodular { p: i64, q: i64, r: i64, s: i64 },
    #[error("integer overflow while transforming {0}")]
    Overflow(QuadForm),
    #[error("cannot parse quadratic form from {0:?}")]
    Parse(String),
}

/// The form `a x² + b xy + c y²`, identified with the matrix `[[a, b/2], [b/2, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn discriminant(&self) -> i64 {
        let d = self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128;
        i64::try_from(d).expect("discriminant overflows i64")
    }

    /// gcd of the coefficients (0 only for the zero form).
    pub fn content(&self) -> u64 {
        self.a.unsigned_abs().gcd(&self.b.unsigned_abs()).gcd(&self.c.unsigned_abs())
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn scale(&self, k: i64) -> QuadForm {
        QuadForm::new(self.a * k, self.b * k, self.c * k)
    }

    pub fn negate(&self) -> QuadForm {
        QuadForm::new(-self.a, -self.b, -self.c)
    }

    /// Value `Q(x, y)`.
    pub fn eval(&self, x: i128, y: i128) -> i128 {
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    pub fn regime(&self) -> Result<Regime, BqfError> {
        Regime::of_discriminant(self.discriminant()).ok_or(BqfError::Degenerate(*self))
    }

    fn coeffs(&self) -> [i64; 3] {
        [self.a, self.b, self.c]
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

impl FromStr for QuadForm {
    type Err = BqfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || BqfError::Parse(s.to_string());
        let inner = s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(err)?;
        let parts: Vec<i64> = inner
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        match parts[..] {
            [a, b, c] => Ok(QuadForm::new(a, b, c)),
            _ => Err(err()),
        }
    }
}

/// Discriminant regime of a nondegenerate form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Definite,
    Indefinite,
    Split,
}

impl Regime {
    pub fn of_discriminant(d: i64) -> Option<Regime> {
        match d {
            0 => None,
            d if d < 0 => Some(Regime::Definite),
            d if exact_sqrt(d as i128).is_some() => Some(Regime::Split),
            _ => Some(Regime::Indefinite),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Definite => "definite",
            Regime::Indefinite => "indefinite",
            Regime::Split => "split",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An element `(p, q; r, s)` of SL₂(ℤ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnimodularMatrix {
    pub p: i64,
    pub q: i64,
    pub r: i64,
    pub s: i64,
}

impl UnimodularMatrix {
    pub const IDENTITY: UnimodularMatrix = UnimodularMatrix { p: 1, q: 0, r: 0, s: 1 };
    /// `(0, -1; 1, 0)`
    pub const S: UnimodularMatrix = UnimodularMatrix { p: 0, q: -1, r: 1, s: 0 };
    /// `(1, 1; 0, 1)`
    pub const T: UnimodularMatrix = UnimodularMatrix { p: 1, q: 1, r: 0, s: 1 };

    pub fn new(p: i64, q: i64, r: i64, s: i64) -> Result<Self, BqfError> {
        if p as i128 * s as i128 - q as i128 * r as i128 != 1 {
            return Err(BqfError::NotUnimodular { p, q, r, s });
        }
        Ok(UnimodularMatrix { p, q, r, s })
    }

    pub fn determinant(&self) -> i128 {
        self.p as i128 * self.s as i128 - self.q as i128 * self.r as i128
    }

    pub fn inverse(&self) -> UnimodularMatrix {
        UnimodularMatrix { p: self.s, q: -self.q, r: -self.r, s: self.p }
    }

    pub fn transpose(&self) -> UnimodularMatrix {
        UnimodularMatrix { p: self.p, q: self.r, r: self.q, s: self.s }
    }

    /// Matrix product `self * rhs`; panics on overflow.
    pub fn mul(&self, rhs: &UnimodularMatrix) -> UnimodularMatrix {
        let f = |x: i64, y: i64, z: i64, w: i64| {
            i64::try_from(x as i128 * y as i128 + z as i128 * w as i128)
                .expect("matrix entry overflow")
        };
        UnimodularMatrix {
            p: f(self.p, rhs.p, self.q, rhs.r),
            q: f(self.p, rhs.q, self.q, rhs.s),
            r: f(self.r, rhs.p, self.s, rhs.r),
            s: f(self.r, rhs.q, self.s, rhs.s),
        }
    }

    /// The lower unipotent matrix `(1, 0; t, 1)`.
    pub fn lower(t: i64) -> UnimodularMatrix {
        UnimodularMatrix { p: 1, q: 0, r: t, s: 1 }
    }
}

/// `g·Q = g Q gᵀ`, or `None` if a coefficient leaves `i64`.
pub fn try_act(g: &UnimodularMatrix, form: &QuadForm) -> Option<QuadForm> {
    let (p, q, r, s) = (g.p as i128, g.q as i128, g.r as i128, g.s as i128);
    let (a, b, c) = (form.a as i128, form.b as i128, form.c as i128);
    let na = a.checked_mul(p * p)? + b.checked_mul(p * q)? + c.checked_mul(q * q)?;
    let nc = a.checked_mul(r * r)? + b.checked_mul(r * s)? + c.checked_mul(s * s)?;
    let nb = (2 * a).checked_mul(p * r)? + b.checked_mul(p * s + q * r)? + (2 * c).checked_mul(q * s)?;
    Some(QuadForm::new(na.try_into().ok()?, nb.try_into().ok()?, nc.try_into().ok()?))
}

/// `g·Q = g Q gᵀ`. Panics if a coefficient overflows `i64`.
pub fn act(g: &UnimodularMatrix, form: &QuadForm) -> QuadForm {
    try_act(g, form).unwrap_or_else(|| panic!("{}", BqfError::Overflow(*form)))
}

/// The form `[a, 2√(ac+n), c]` attached to a D(n)-pair with `a > c`.
pub fn e_form(a: i64, c: i64, n: i64) -> Result<QuadForm, BqfError> {
    if a == 0 || c == 0 || a <= c {
        return Err(BqfError::BadPair { a, c });
    }
    let root = exact_sqrt(a as i128 * c as i128 + n as i128).ok_or(BqfError::NotSquare { a, c, n })?;
    let b = i64::try_from(2 * root).map_err(|_| BqfError::Overflow(QuadForm::new(a, 0, c)))?;
    Ok(QuadForm::new(a, b, c))
}

// ---------------------------------------------------------------------------
// Definite forms

fn require_regime(form: &QuadForm, want: Regime, expected: &'static str) -> Result<(), BqfError> {
    if form.regime()? != want {
        return Err(BqfError::WrongRegime { form: *form, expected });
    }
    Ok(())
}

pub fn is_reduced_definite(form: &QuadForm) -> bool {
    let QuadForm { a, b, c } = *form;
    a > 0 && b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
}

/// Gauss reduction of a positive definite form, tracking the transformation.
fn reduce_positive(form: QuadForm) -> (QuadForm, UnimodularMatrix) {
    let mut f = form;
    let mut g = UnimodularMatrix::IDENTITY;
    loop {
        // bring b into (-a, a]
        if !(-f.a < f.b && f.b <= f.a) {
            let two_a = 2 * f.a as i128;
            let t = Integer::div_floor(&(f.a as i128 - f.b as i128), &two_a);
            let step = UnimodularMatrix::lower(t as i64);
            f = act(&step, &f);
            g = step.mul(&g);
        }
        if f.a > f.c || (f.a == f.c && f.b < 0) {
            f = act(&UnimodularMatrix::S, &f);
            g = UnimodularMatrix::S.mul(&g);
            continue;
        }
        return (f, g);
    }
}

/// Reduces a definite form to its unique reduced representative and returns
/// `g` with `act(g, Q)` equal to it. Negative definite forms reduce to the
/// negation of the reduced form of `-Q`.
pub fn reduce_definite(form: &QuadForm) -> Result<(QuadForm, UnimodularMatrix), BqfError> {
    require_regime(form, Regime::Definite, "negative discriminant")?;
    if form.a > 0 {
        Ok(reduce_positive(*form))
    } else {
        let (r, g) = reduce_positive(form.negate());
        Ok((r.negate(), g))
    }
}

fn reduce_definite_form(form: &QuadForm) -> QuadForm {
    if form.a > 0 {
        reduce_positive(*form).0
    } else {
        reduce_positive(form.negate()).0.negate()
    }
}

// ---------------------------------------------------------------------------
// Indefinite nonsquare forms

/// `floor(√d)` for a positive nonsquare `d`.
fn floor_sqrt(d: i64) -> i64 {
    isqrt_u128(d as u128) as i64
}

/// `0 < b < √d` and `|√d − 2|a|| < b`.
pub fn is_reduced_indefinite(form: &QuadForm) -> bool {
    let d = form.discriminant();
    if d <= 0 {
        return false;
    }
    let s = floor_sqrt(d) as i128;
    let (a2, b) = (2 * form.a.unsigned_abs() as i128, form.b as i128);
    b > 0 && b <= s && a2 + b > s && a2 - b <= s
}

/// Right neighbour `[c, r, (r² − d)/4c]` with `r ≡ −b (mod 2c)` in the
/// normalizing range; realized by the matrix `(0, −1; 1, t)`.
pub fn rho(form: &QuadForm) -> QuadForm {
    let d = form.discriminant() as i128;
    let s = floor_sqrt(d as i64) as i128;
    let (b, c) = (form.b as i128, form.c as i128);
    let two_c = 2 * c.abs();
    let r = if c * c > d {
        // -|c| < r <= |c|
        let mut r = (-b).rem_euclid(two_c);
        if r > c.abs() {
            r -= two_c;
        }
        r
    } else {
        // √d − 2|c| < r < √d
        s - (s + b).rem_euclid(two_c)
    };
    let nc = (r * r - d) / (4 * c);
    QuadForm::new(form.c, r as i64, nc as i64)
}

fn reduce_indefinite_form(form: &QuadForm) -> QuadForm {
    let mut f = *form;
    while !is_reduced_indefinite(&f) {
        f = rho(&f);
    }
    f
}

/// The cycle of reduced forms properly equivalent to `Q`, starting at the
/// first reduced form reached from `Q` under `rho`.
pub fn reduce_indefinite_cycle(form: &QuadForm) -> Result<Vec<QuadForm>, BqfError> {
    require_regime(form, Regime::Indefinite, "positive nonsquare discriminant")?;
    let start = reduce_indefinite_form(form);
    let mut cycle = vec![start];
    let mut f = rho(&start);
    while f != start {
        cycle.push(f);
        f = rho(&f);
    }
    Ok(cycle)
}

// ---------------------------------------------------------------------------
// Split forms (positive square discriminant)

/// The representative `[0, 2k, c]`, `0 <= c < 2k`, of the class of a form of
/// discriminant `(2k)²`.
pub fn canonical_split(form: &QuadForm) -> Result<QuadForm, BqfError> {
    require_regime(form, Regime::Split, "positive square discriminant")?;
    let root = exact_sqrt(form.discriminant() as i128).expect("split regime") as i64;
    canonical_split_with_root(form, root).ok_or(BqfError::Overflow(*form))
}

fn canonical_split_with_root(form: &QuadForm, root: i64) -> Option<QuadForm> {
    let QuadForm { a, b, c } = *form;
    let (a, b, c, root) = (a as i128, b as i128, c as i128, root as i128);
    // the two primitive isotropic vectors (x, y) with Q(x, y) = 0
    let isotropic: [(i128, i128); 2] = if a != 0 {
        [(-b + root, 2 * a), (-b - root, 2 * a)]
    } else {
        [(1, 0), (-c, b)]
    };
    for (x, y) in isotropic {
        if x == 0 && y == 0 {
            continue;
        }
        let g = x.gcd(&y);
        let (x, y) = (x / g, y / g);
        // complete (x, y) to a matrix (x, y; r, s) of determinant 1
        let e = x.extended_gcd(&y);
        let sign = e.gcd.signum();
        let (s, r) = (e.x * sign, -e.y * sign);
        debug_assert_eq!(x * s - y * r, 1);
        debug_assert_eq!(form.eval(x, y), 0);
        let new_b = 2 * a * x * r + b * (x * s + y * r) + 2 * c * y * s;
        if new_b != root {
            continue;
        }
        let new_c = a * r * r + b * r * s + c * s * s;
        return Some(QuadForm::new(0, i64::try_from(root).ok()?, i64::try_from(new_c.rem_euclid(root)).ok()?));
    }
    None
}

// ---------------------------------------------------------------------------
// Labels and equivalence

/// Canonical invariant of a proper equivalence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassLabel {
    pub canonical: QuadForm,
    pub regime: Regime,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.canonical.fmt(f)
    }
}

/// Canonical label: the reduced form (definite), the least form of the
/// reduced cycle (indefinite), or `[0, 2k, c]` (split).
pub fn class_label(form: &QuadForm) -> Result<ClassLabel, BqfError> {
    let regime = form.regime()?;
    let canonical = match regime {
        Regime::Definite => reduce_definite_form(form),
        Regime::Indefinite => *reduce_indefinite_cycle(form)?.iter().min().expect("nonempty cycle"),
        Regime::Split => canonical_split(form)?,
    };
    Ok(ClassLabel { canonical, regime })
}

/// Proper SL₂(ℤ)-equivalence.
pub fn equivalent(q1: &QuadForm, q2: &QuadForm) -> Result<bool, BqfError> {
    for q in [q1, q2] {
        q.regime()?;
    }
    if q1.discriminant() != q2.discriminant() || q1.content() != q2.content() {
        return Ok(false);
    }
    Ok(class_label(q1)? == class_label(q2)?)
}

// ---------------------------------------------------------------------------
// Class inventory

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signature {
    Positive,
    Negative,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InventoryClass {
    pub label: ClassLabel,
    pub content: u64,
    pub signature: Signature,
}

/// All proper classes of integral forms of discriminant `4n`.
#[derive(Debug, Clone)]
pub struct ClassInventory {
    pub n: i64,
    pub regime: Regime,
    pub classes: Vec<InventoryClass>,
    /// `√(4n)` in the split regime, 0 otherwise
    split_root: i64,
    /// every canonical form (and, for indefinite classes, every cycle member)
    lookup: HashMap<QuadForm, usize>,
}

impl ClassInventory {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn discriminant(&self) -> i64 {
        4 * self.n
    }

    pub fn index_of_label(&self, label: &ClassLabel) -> Option<usize> {
        self.classes.iter().position(|c| c.label == *label)
    }

    /// Index of the class containing `form` (one reduction plus a lookup).
    pub fn classify(&self, form: &QuadForm) -> Option<usize> {
        let key = match self.regime {
            Regime::Definite => reduce_definite_form(form),
            Regime::Indefinite => reduce_indefinite_form(form),
            Regime::Split => canonical_split_with_root(form, self.split_root)?,
        };
        self.lookup.get(&key).copied()
    }

    /// Contents `k` with `k² | 4n` and `4n/k²` a discriminant.
    pub fn contents(&self) -> Vec<u64> {
        let mut ks: Vec<u64> = self.classes.iter().map(|c| c.content).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Contents `k` admissible for discriminant `4n`, ascending.
pub fn admissible_contents(n: i64) -> Vec<u64> {
    let d = 4 * n as i128;
    (1..)
        .take_while(|k: &i128| k * k <= d.abs())
        .filter(|k| d % (k * k) == 0 && matches!((d / (k * k)).rem_euclid(4), 0 | 1))
        .map(|k| k as u64)
        .collect()
}

/// Gauss-reduced positive definite primitive forms of discriminant `d < 0`.
pub fn reduced_definite_forms(d: i64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= -d {
        for b in -a..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = QuadForm::new(a, b, num / (4 * a));
            if is_reduced_definite(&f) && f.is_primitive() {
                out.push(f);
            }
        }
        a += 1;
    }
    out
}

/// Reduced primitive indefinite forms of discriminant `d > 0` nonsquare.
pub fn reduced_indefinite_forms(d: i64) -> Vec<QuadForm> {
    let s = floor_sqrt(d);
    let mut out = Vec::new();
    for b in (1..=s).filter(|b| (b - d).rem_euclid(2) == 0) {
        let ac = (b * b - d) / 4;
        for a_abs in 1..=ac.unsigned_abs() as i64 {
            if ac % a_abs != 0 {
                continue;
            }
            for a in [a_abs, -a_abs] {
                let f = QuadForm::new(a, b, ac / a);
                if is_reduced_indefinite(&f) && f.is_primitive() {
                    out.push(f);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Partition of the reduced primitive forms of discriminant `d` into cycles,
/// each sorted so its least form comes first; cycles ordered by that form.
pub fn indefinite_cycles(d: i64) -> Vec<Vec<QuadForm>> {
    let mut seen = HashSet::new();
    let mut cycles = Vec::new();
    for f in reduced_indefinite_forms(d) {
        if seen.contains(&f) {
            continue;
        }
        let mut cycle = reduce_indefinite_cycle(&f).expect("indefinite");
        seen.extend(cycle.iter().copied());
        let start = cycle.iter().enumerate().min_by_key(|(_, f)| **f).map(|(i, _)| i).unwrap();
        cycle.rotate_left(start);
        cycles.push(cycle);
    }
    cycles.sort();
    cycles
}

/// Enumerates every proper class of discriminant `4n`, grouped by content
/// and signature, ordered by (content, canonical form).
pub fn class_representatives(n: i64) -> ClassInventory {
    assert!(n != 0, "n must be nonzero");
    let d = 4 * n;
    let regime = Regime::of_discriminant(d).expect("nonzero");
    let split_root = match regime {
        Regime::Split => exact_sqrt(d as i128).expect("square") as i64,
        _ => 0,
    };
    let mut classes = Vec::new();
    let mut lookup = HashMap::new();
    let mut push = |label: ClassLabel, content: u64, signature: Signature, keys: &[QuadForm]| {
        let idx = classes.len();
        classes.push(InventoryClass { label, content, signature });
        for key in keys {
            lookup.insert(*key, idx);
        }
    };
    match regime {
        Regime::Split => {
            for c in 0..split_root {
                let canonical = QuadForm::new(0, split_root, c);
                let label = ClassLabel { canonical, regime };
                push(label, canonical.content(), Signature::Indefinite, &[canonical]);
            }
        }
        Regime::Definite | Regime::Indefinite => {
            for k in admissible_contents(n) {
                let dk = d / (k * k) as i64;
                let k = k as i64;
                if regime == Regime::Definite {
                    for sig in [Signature::Positive, Signature::Negative] {
                        for f in reduced_definite_forms(dk) {
                            let mut canonical = f.scale(k);
                            if sig == Signature::Negative {
                                canonical = canonical.negate();
                            }
                            let label = ClassLabel { canonical, regime };
                            push(label, k as u64, sig, &[canonical]);
                        }
                    }
                } else {
                    for cycle in indefinite_cycles(dk) {
                        let scaled: Vec<QuadForm> = cycle.iter().map(|f| f.scale(k)).collect();
                        let label = ClassLabel { canonical: scaled[0], regime };
                        push(label, k as u64, Signature::Indefinite, &scaled);
                    }
                }
            }
        }
    }
    let mut inv = ClassInventory { n, regime, classes, split_root, lookup };
    sort_inventory(&mut inv);
    inv
}

fn sort_inventory(inv: &mut ClassInventory) {
    let mut order: Vec<usize> = (0..inv.classes.len()).collect();
    order.sort_by_key(|&i| (inv.classes[i].content, inv.classes[i].label.canonical));
    let mut remap = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    inv.classes = order.iter().map(|&i| inv.classes[i].clone()).collect();
    for v in inv.lookup.values_mut() {
        *v = remap[*v];
    }
}

// ---------------------------------------------------------------------------
// Stabilizers and the orbit oracle

/// Generator `T₀ = ((t − bs)/2, as; −cs, (t + bs)/2)` of the infinite part of
/// the SL₂(ℤ)-stabilizer of a primitive indefinite form under `g·Q = gQgᵀ`,
/// `(t, s)` minimal positive with `t² − d s² = 4`. The classical automorph
/// `((t − bs)/2, −cs; as, (t + bs)/2)` fixes `Q` under `gᵀQg` and is its transpose.
pub fn stabilizer_generator(form: &QuadForm) -> Result<UnimodularMatrix, BqfError> {
    require_regime(form, Regime::Indefinite, "positive nonsquare discriminant")?;
    if !form.is_primitive() {
        return Err(BqfError::Imprimitive(*form));
    }
    let d = form.discriminant();
    let (t, s) = pell::pell4_min(d).expect("valid indefinite discriminant");
    let (a, b, c) = (BigInt::from(form.a), BigInt::from(form.b), BigInt::from(form.c));
    let entries = [(&t - &b * &s) / 2, &a * &s, -(&c * &s), (&t + &b * &s) / 2];
    let small: Option<Vec<i64>> = entries.iter().map(|e| e.to_i64()).collect();
    let e = small.ok_or(BqfError::Overflow(*form))?;
    UnimodularMatrix::new(e[0], e[1], e[2], e[3])
}

const GENERATORS: [UnimodularMatrix; 4] = [
    UnimodularMatrix::S,
    UnimodularMatrix { p: 0, q: 1, r: -1, s: 0 },
    UnimodularMatrix::T,
    UnimodularMatrix { p: 1, q: -1, r: 0, s: 1 },
];

/// Breadth-first search of the orbit of `Q` under the standard generators of
/// SL₂(ℤ) and their inverses, keeping forms with all coefficients at most
/// `coeff_bound` in absolute value. Ground truth for equivalence tests.
pub fn orbit_oracle(form: &QuadForm, coeff_bound: u64) -> HashSet<QuadForm> {
    let in_bound = |f: &QuadForm| f.coeffs().iter().all(|x| x.unsigned_abs() <= coeff_bound);
    let mut seen = HashSet::new();
    if !in_bound(form) {
        return seen;
    }
    let mut queue = VecDeque::from([*form]);
    seen.insert(*form);
    while let Some(f) = queue.pop_front() {
        for g in &GENERATORS {
            let next = act(g, &f);
            if in_bound(&next) && seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::new(a, b, c)
    }

    fn mat(p: i64, qq: i64, r: i64, s: i64) -> UnimodularMatrix {
        UnimodularMatrix::new(p, qq, r, s).unwrap()
    }

    /// Direct `g Q gᵀ` over rational 2×2 matrices scaled by 2.
    fn act_by_matrix_product(g: &UnimodularMatrix, f: &QuadForm) -> QuadForm {
        let m = [[2 * f.a, f.b], [f.b, 2 * f.c]];
        let gm = [[g.p, g.q], [g.r, g.s]];
        let mut prod = [[0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        prod[i][j] += gm[i][k] * m[k][l] * gm[j][l];
                    }
                }
            }
        }
        q(prod[0][0] / 2, prod[0][1], prod[1][1] / 2)
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(q(1, 0, 1).discriminant(), -4);
        assert_eq!(q(2, 2, 1).discriminant(), -4);
        assert_eq!(q(1, 0, -2).discriminant(), 8);
    }

    #[test]
    fn act_examples() {
        let f = q(3, -5, 7);
        assert_eq!(act(&UnimodularMatrix::IDENTITY, &f), f);
        assert_eq!(act(&UnimodularMatrix::S, &f), q(7, 5, 3));
        let g = mat(1, 0, 1, 1);
        let image = act(&g, &q(1, 0, -2));
        assert_eq!(image, act_by_matrix_product(&g, &q(1, 0, -2)));
        assert_eq!(image, q(1, 2, -1));
        assert_eq!(image.discriminant(), 8);
    }

    #[test]
    fn unimodular_rejects_bad_determinant() {
        assert!(UnimodularMatrix::new(2, 0, 0, 1).is_err());
    }

    #[test]
    fn e_form_examples() {
        assert_eq!(e_form(2, 1, -1).unwrap(), q(2, 2, 1));
        assert_eq!(e_form(3, 1, 1).unwrap(), q(3, 4, 1));
        assert_eq!(e_form(1, -1, 1).unwrap(), q(1, 0, -1));
        assert!(matches!(e_form(2, 1, 0), Err(BqfError::NotSquare { .. })));
        assert!(matches!(e_form(1, 2, 2), Err(BqfError::BadPair { .. })));
        assert!(matches!(e_form(1, 0, 1), Err(BqfError::BadPair { .. })));
        for (a, c, n) in [(2, 1, -1), (3, 1, 1), (1, -1, 1), (12, 2, 1)] {
            assert_eq!(e_form(a, c, n).unwrap().discriminant(), 4 * n);
        }
    }

    #[test]
    fn reduce_definite_examples() {
        let (r, g) = reduce_definite(&q(1, 0, 1)).unwrap();
        assert_eq!((r, g), (q(1, 0, 1), UnimodularMatrix::IDENTITY));
        assert_eq!(reduce_definite(&q(2, 2, 3)).unwrap().0, q(2, 2, 3));
        let (r, g) = reduce_definite(&q(5, 4, 1)).unwrap();
        assert_eq!(r, q(1, 0, 1));
        assert_eq!(act(&g, &q(5, 4, 1)), r);
        assert!(orbit_oracle(&q(5, 4, 1), 10).contains(&q(1, 0, 1)));
        let (r, g) = reduce_definite(&q(-5, 4, -1)).unwrap();
        assert_eq!(r, q(-1, 0, -1));
        assert_eq!(act(&g, &q(-5, 4, -1)), r);
        assert!(reduce_definite(&q(1, 0, -1)).is_err());
    }

    #[test]
    fn reduce_definite_tie_breaks() {
        // |b| = a and a = c boundaries take b >= 0
        assert_eq!(reduce_definite(&q(2, -2, 3)).unwrap().0, q(2, 2, 3));
        assert_eq!(reduce_definite(&q(3, -2, 3)).unwrap().0, q(3, 2, 3));
        assert!(is_reduced_definite(&q(2, 2, 3)));
        assert!(!is_reduced_definite(&q(2, -2, 3)));
    }

    #[test]
    fn indefinite_cycle_examples() {
        let cycle = reduce_indefinite_cycle(&q(1, 2, -1)).unwrap();
        assert!(cycle.contains(&q(1, 2, -1)) && cycle.contains(&q(-1, 2, 1)));
        let other = reduce_indefinite_cycle(&q(1, 0, -2)).unwrap();
        let set1: HashSet<_> = cycle.iter().collect();
        let set2: HashSet<_> = other.iter().collect();
        assert_eq!(set1, set2);
        assert!(orbit_oracle(&q(1, 0, -2), 20).contains(&q(1, 2, -1)));
        for f in reduced_indefinite_forms(60) {
            assert!(reduce_indefinite_cycle(&f).unwrap().contains(&f));
        }
        assert!(reduce_indefinite_cycle(&q(1, 0, -1)).is_err());
        assert!(reduce_indefinite_cycle(&q(1, 0, 1)).is_err());
    }

    #[test]
    fn rho_is_realized_by_a_unimodular_move() {
        for f in reduced_indefinite_forms(140) {
            let next = rho(&f);
            let t = -(next.b + f.b) / (2 * f.c);
            let g = mat(0, -1, 1, t);
            assert_eq!(act(&g, &f), next, "{f}");
        }
    }

    #[test]
    fn canonical_split_examples() {
        assert_eq!(canonical_split(&q(0, 2, 0)).unwrap(), q(0, 2, 0));
        assert_eq!(canonical_split(&q(0, 2, 5)).unwrap(), q(0, 2, 1));
        let oracle = orbit_oracle(&q(1, 2, 0), 20);
        assert!(oracle.contains(&q(0, 2, 1)) && !oracle.contains(&q(0, 2, 0)));
        assert_eq!(canonical_split(&q(1, 2, 0)).unwrap(), q(0, 2, 1));
        assert_eq!(canonical_split(&q(0, -2, 0)).unwrap(), q(0, 2, 0));
        assert!(canonical_split(&q(1, 0, -2)).is_err());
    }

    #[test]
    fn canonical_split_agrees_with_orbit_oracle() {
        for k in 1..=4i64 {
            let root = 2 * k;
            let reps: Vec<QuadForm> = (0..root).map(|c| q(0, root, c)).collect();
            let orbits: Vec<HashSet<QuadForm>> = reps.iter().map(|r| orbit_oracle(r, 60)).collect();
            // the 2k representatives lie in distinct orbits
            for i in 0..reps.len() {
                for j in 0..reps.len() {
                    assert_eq!(orbits[i].contains(&reps[j]), i == j);
                }
            }
            for (i, orbit) in orbits.iter().enumerate() {
                for f in orbit.iter().filter(|f| f.coeffs().iter().all(|x| x.abs() <= 12)) {
                    assert_eq!(canonical_split(f).unwrap(), reps[i], "{f}");
                }
            }
        }
        let split_orbit = orbit_oracle(&q(1, 0, -1), 10);
        for f in &split_orbit {
            assert_eq!(canonical_split(f).unwrap(), canonical_split(&q(1, 0, -1)).unwrap());
        }
    }

    #[test]
    fn equivalent_examples() {
        let f = q(3, 4, 1);
        assert!(equivalent(&f, &f).unwrap());
        assert!(equivalent(&q(1, 0, 1), &q(2, 2, 1)).unwrap());
        assert!(!equivalent(&q(1, 0, 1), &q(-1, 0, -1)).unwrap());
        assert!(!equivalent(&q(1, 0, 1), &q(1, 1, 1)).unwrap());
        assert!(equivalent(&q(1, 0, 0), &q(1, 0, 1)).is_err());
    }

    #[test]
    fn class_representatives_examples() {
        let inv = class_representatives(-1);
        let reps: Vec<QuadForm> = inv.classes.iter().map(|c| c.label.canonical).collect();
        assert_eq!(reps, vec![q(-1, 0, -1), q(1, 0, 1)]);
        assert_eq!(class_representatives(1).len(), 2);
        let inv = class_representatives(5);
        assert_eq!(inv.contents(), vec![1, 2]);
        let reps: Vec<QuadForm> = inv.classes.iter().map(|c| c.label.canonical).collect();
        assert_eq!(reps, vec![q(-1, 4, 1), q(-2, 2, 2)]);
    }

    #[test]
    fn square_discriminant_class_count() {
        for k in 1..=10i64 {
            assert_eq!(class_representatives(k * k).len() as i64, 2 * k);
        }
    }

    #[test]
    fn admissible_contents_examples() {
        assert_eq!(admissible_contents(-1), vec![1]);
        assert_eq!(admissible_contents(-4), vec![1, 2]);
        assert_eq!(admissible_contents(5), vec![1, 2]);
        assert_eq!(admissible_contents(-12), vec![1, 2, 4]);
        assert_eq!(admissible_contents(-3), vec![1, 2]);
        assert_eq!(admissible_contents(-2), vec![1]);
    }

    #[test]
    fn stabilizer_generator_examples() {
        let g = stabilizer_generator(&q(1, 0, -2)).unwrap();
        assert_eq!(g, mat(3, 2, 4, 3));
        // the classical automorph acts on the other side
        assert_ne!(act(&mat(3, 4, 2, 3), &q(1, 0, -2)), q(1, 0, -2));
        assert_eq!(act(&mat(3, 4, 2, 3).transpose(), &q(1, 0, -2)), q(1, 0, -2));
        assert_eq!(act(&g, &q(1, 0, -2)), q(1, 0, -2));
        let g = stabilizer_generator(&q(1, 1, -1)).unwrap();
        assert_eq!(g, mat(1, 1, 1, 2));
        assert_eq!(act(&g, &q(1, 1, -1)), q(1, 1, -1));
        assert!(matches!(stabilizer_generator(&q(2, 0, -4)), Err(BqfError::Imprimitive(_))));
        assert!(stabilizer_generator(&q(1, 0, -1)).is_err());
    }

    #[test]
    fn stabilizer_generator_fixes_small_forms() {
        for a in -10i64..=10 {
            for b in -10i64..=10 {
                for c in -10i64..=10 {
                    let f = q(a, b, c);
                    let d = f.discriminant();
                    if d <= 0 || d > 200 || exact_sqrt(d as i128).is_some() || !f.is_primitive() {
                        continue;
                    }
                    let g = stabilizer_generator(&f).unwrap();
                    assert_eq!(g.determinant(), 1);
                    assert_eq!(act(&g, &f), f, "{f}");
                }
            }
        }
    }

    #[test]
    fn orbit_oracle_examples() {
        let orbit = orbit_oracle(&q(1, 0, 1), 5);
        for f in [q(1, 0, 1), q(2, 2, 1), q(1, 2, 2)] {
            assert!(orbit.contains(&f));
        }
        for f in &orbit {
            for g in &GENERATORS {
                let h = act(g, f);
                if h.coeffs().iter().all(|x| x.abs() <= 5) {
                    assert!(orbit.contains(&h));
                }
            }
        }
    }

    fn forms_of_discriminant(d: i64, bound: i64) -> Vec<QuadForm> {
        let mut v = Vec::new();
        for a in -bound..=bound {
            for b in -bound..=bound {
                let num = b * b - d;
                if a == 0 {
                    if num == 0 {
                        v.extend((-bound..=bound).map(|c| q(0, b, c)));
                    }
                    continue;
                }
                if num % (4 * a) == 0 && (num / (4 * a)).abs() <= bound {
                    v.push(q(a, b, num / (4 * a)));
                }
            }
        }
        v
    }

    /// Partition of `forms` by orbit-oracle reachability.
    fn oracle_partition(forms: &[QuadForm], bound: u64) -> Vec<usize> {
        let mut part = vec![usize::MAX; forms.len()];
        let mut next = 0;
        for i in 0..forms.len() {
            if part[i] != usize::MAX {
                continue;
            }
            let orbit = orbit_oracle(&forms[i], bound);
            for j in i..forms.len() {
                if orbit.contains(&forms[j]) {
                    part[j] = next;
                }
            }
            next += 1;
        }
        part
    }

    #[test]
    fn equivalence_agrees_with_orbit_oracle() {
        for n in -12i64..=12 {
            if n == 0 {
                continue;
            }
            let forms = forms_of_discriminant(4 * n, 20);
            let part = oracle_partition(&forms, 200);
            let labels: Vec<ClassLabel> = forms.iter().map(|f| class_label(f).unwrap()).collect();
            for i in 0..forms.len() {
                for j in 0..forms.len() {
                    assert_eq!(
                        part[i] == part[j],
                        labels[i] == labels[j],
                        "n = {n}: {} vs {}",
                        forms[i],
                        forms[j]
                    );
                }
            }
            let inv = class_representatives(n);
            for f in &forms {
                let idx = inv.classify(f).expect("inventory complete");
                assert_eq!(inv.classes[idx].label, class_label(f).unwrap());
            }
        }
    }

    #[test]
    fn inventory_counts_match_oracle_class_count() {
        for n in -12i64..=12 {
            if n == 0 {
                continue;
            }
            let forms = forms_of_discriminant(4 * n, 20);
            let part = oracle_partition(&forms, 200);
            let distinct: HashSet<usize> = part.into_iter().collect();
            assert_eq!(distinct.len(), class_representatives(n).len(), "n = {n}");
        }
    }

    fn small_matrix() -> impl Strategy<Value = UnimodularMatrix> {
        (-6i64..=6, -6i64..=6, -6i64..=6).prop_filter_map("not completable", |(p, q, t)| {
            let e = p.extended_gcd(&q);
            if e.gcd != 1 {
                return None;
            }
            // (p, q; r, s) with p s − q r = 1, shifted by t times the first row
            let (s, r) = (e.x, -e.y);
            UnimodularMatrix::new(p, q, r + t * p, s + t * q).ok()
        })
    }

    proptest! {
        #[test]
        fn action_laws(g1 in small_matrix(), g2 in small_matrix(),
                       a in -50i64..50, b in -50i64..50, c in -50i64..50) {
            let f = q(a, b, c);
            prop_assert_eq!(act(&UnimodularMatrix::IDENTITY, &f), f);
            prop_assert_eq!(act(&g1.mul(&g2), &f), act(&g1, &act(&g2, &f)));
            prop_assert_eq!(act(&g1, &f), act_by_matrix_product(&g1, &f));
            let image = act(&g1, &f);
            prop_assert_eq!(image.discriminant(), f.discriminant());
            prop_assert_eq!(image.content(), f.content());
            prop_assert_eq!(image.b.rem_euclid(2), f.b.rem_euclid(2));
        }

        #[test]
        fn definite_reduction_is_idempotent(a in 1i64..500, b in -500i64..500, c in 1i64..500,
                                            g in small_matrix()) {
            let f = q(a, b, c);
            prop_assume!(f.discriminant() < 0);
            let (r, m) = reduce_definite(&f).unwrap();
            prop_assert!(is_reduced_definite(&r));
            prop_assert_eq!(act(&m, &f), r);
            prop_assert_eq!(reduce_definite(&r).unwrap().0, r);
            prop_assert_eq!(reduce_definite(&act(&g, &f)).unwrap().0, r);
        }

        #[test]
        fn indefinite_label_is_invariant(a in -60i64..60, b in -60i64..60, c in -60i64..60,
                                         g in small_matrix()) {
            let f = q(a, b, c);
            prop_assume!(f.regime() == Ok(Regime::Indefinite));
            prop_assert_eq!(class_label(&act(&g, &f)).unwrap(), class_label(&f).unwrap());
        }

        #[test]
        fn split_label_is_invariant(k in 1i64..8, c in 0i64..16, g in small_matrix()) {
            let f = q(0, 2 * k, c);
            let image = act(&g, &f);
            prop_assert_eq!(canonical_split(&image).unwrap(), q(0, 2 * k, c % (2 * k)));
        }
    }
}
