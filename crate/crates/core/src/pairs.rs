//! Enumeration of D(n)-pairs `{a, c}` with `|a|, |c| <= T` and per-class
//! counting of their forms `E_ac = [a, 2√(ac+n), c]`.
//!
//! The fast enumerator walks moduli `m = |a|`: for every root `r` of
//! `x² ≡ n (mod m)` the square roots `B ≡ r (mod m)` give `c = (B² − n)/a`.
//! A pair is emitted only from its larger element, so each unordered pair
//! appears exactly once.

use std::ops::Range;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{exact_sqrt, factorize, sqrt_mod, SpfSieve};
use crate::bqf::{class_label, class_representatives, ClassInventory, ClassLabel, QuadForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairsError {
    #[error("form {form} of pair ({a}, {c}) matches no class of discriminant {disc}")]
    Unclassified { a: i64, c: i64, form: QuadForm, disc: i64 },
    #[error("brute-force enumeration is limited to T <= {max}, got {t}")]
    OracleTooLarge { t: u64, max: u64 },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

pub const BRUTE_FORCE_MAX_T: u64 = 5000;

/// A D(n)-pair `{a, c}` with `a > c` and `ac + n = root²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub a: i64,
    pub c: i64,
    pub root: i64,
}

impl Pair {
    /// Middle coefficient of `E_ac`.
    pub fn b(&self) -> i64 {
        2 * self.root
    }

    pub fn form(&self) -> QuadForm {
        QuadForm::new(self.a, self.b(), self.c)
    }
}

/// A pair together with the class of its form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRecord {
    pub a: i64,
    pub c: i64,
    pub b: i64,
    pub class_label: ClassLabel,
}

/// Fast enumerator over moduli `1..=T`; the sieve is built once and shared.
#[derive(Debug, Clone)]
pub struct PairEnumerator {
    n: i64,
    t: u64,
    include_b_zero: bool,
    sieve: SpfSieve,
}

impl PairEnumerator {
    pub fn new(n: i64, t: u64) -> Self {
        assert!(n != 0, "n must be nonzero");
        assert!(t >= 1, "T must be positive");
        PairEnumerator { n, t, include_b_zero: true, sieve: SpfSieve::new(t) }
    }

    /// Whether pairs with `ac + n = 0` are included (default true).
    pub fn include_b_zero(mut self, include: bool) -> Self {
        self.include_b_zero = include;
        self
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Emits every pair whose larger element has absolute value `m`.
    pub fn visit_modulus(&self, m: u64, emit: &mut impl FnMut(Pair)) {
        let n = self.n as i128;
        let t = self.t as i128;
        let mi = m as i128;
        for r in sqrt_mod(self.n, m, &factorize(m, Some(&self.sieve))) {
            // a = +m: c = (B² − n)/m grows with B; need c < m, |c| <= T
            let mut root = r as i128;
            loop {
                let c = (root * root - n) / mi;
                if c >= mi {
                    break;
                }
                if c != 0 && c >= -t && (root != 0 || self.include_b_zero) {
                    emit(Pair { a: m as i64, c: c as i64, root: root as i64 });
                }
                root += mi;
            }
            // a = −m: c = −(B² − n)/m falls with B; need c < −m, c >= −T
            let mut root = r as i128;
            loop {
                let value = root * root - n;
                if value > t * mi {
                    break;
                }
                if value > mi * mi && (root != 0 || self.include_b_zero) {
                    emit(Pair { a: -(m as i64), c: (-value / mi) as i64, root: root as i64 });
                }
                root += mi;
            }
        }
    }

    pub fn visit_range(&self, moduli: Range<u64>, emit: &mut impl FnMut(Pair)) {
        for m in moduli {
            self.visit_modulus(m, emit);
        }
    }

    pub fn for_each(&self, mut emit: impl FnMut(Pair)) {
        self.visit_range(1..self.t + 1, &mut emit);
    }

    /// All pairs, sorted.
    pub fn pairs(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        self.for_each(|p| out.push(p));
        out.sort_unstable();
        out
    }
}

/// All D(n)-pairs with entries in `[−T, T]`, sorted.
pub fn enumerate_pairs(n: i64, t: u64) -> Vec<Pair> {
    PairEnumerator::new(n, t).pairs()
}

fn brute_force_visit(n: i64, t: u64, a_range: Range<i64>, include_b_zero: bool, emit: &mut impl FnMut(Pair)) {
    let t = t as i64;
    for a in a_range {
        if a == 0 {
            continue;
        }
        for c in -t..a {
            if c == 0 {
                continue;
            }
            if let Some(root) = exact_sqrt(a as i128 * c as i128 + n as i128) {
                if root != 0 || include_b_zero {
                    emit(Pair { a, c, root: root as i64 });
                }
            }
        }
    }
}

/// Reference enumeration by testing every `a > c` in `[−T, T] \ {0}`.
pub fn enumerate_pairs_bruteforce(n: i64, t: u64) -> Result<Vec<Pair>, PairsError> {
    if t > BRUTE_FORCE_MAX_T {
        return Err(PairsError::OracleTooLarge { t, max: BRUTE_FORCE_MAX_T });
    }
    let mut out = Vec::new();
    brute_force_visit(n, t, -(t as i64)..t as i64 + 1, true, &mut |p| out.push(p));
    out.sort_unstable();
    Ok(out)
}

/// Attaches the class label of `E_ac` to each pair.
pub fn label_pairs(pairs: &[Pair], inventory: &ClassInventory) -> Result<Vec<PairRecord>, PairsError> {
    pairs
        .iter()
        .map(|p| {
            let idx = classify(p, inventory)?;
            Ok(PairRecord { a: p.a, c: p.c, b: p.b(), class_label: inventory.classes[idx].label })
        })
        .collect()
}

fn classify(p: &Pair, inventory: &ClassInventory) -> Result<usize, PairsError> {
    let form = p.form();
    debug_assert_eq!(form.discriminant(), inventory.discriminant());
    inventory.classify(&form).ok_or(PairsError::Unclassified {
        a: p.a,
        c: p.c,
        form,
        disc: inventory.discriminant(),
    })
}

/// Per-class counts `D_T^Q` and the total `D_T^n`; `per_class[i]` belongs to
/// `inventory.classes[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub n: i64,
    pub t: u64,
    pub per_class: Vec<u64>,
    pub total: u64,
}

impl CountTable {
    pub fn count_for(&self, inventory: &ClassInventory, label: &ClassLabel) -> Option<u64> {
        inventory.index_of_label(label).map(|i| self.per_class[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    pub include_b_zero: bool,
    pub workers: usize,
    /// use the brute-force enumerator
    pub oracle: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { include_b_zero: true, workers: 1, oracle: false }
    }
}

const CHUNK: u64 = 2048;

/// Counts D(n)-pairs up to `T` per proper class. Moduli are split into
/// fixed chunks counted independently and summed, so the result does not
/// depend on the number of workers.
pub fn count_by_class(
    n: i64,
    t: u64,
    inventory: &ClassInventory,
    options: &CountOptions,
) -> Result<CountTable, PairsError> {
    assert_eq!(inventory.n, n, "inventory built for a different n");
    if options.oracle && t > BRUTE_FORCE_MAX_T {
        return Err(PairsError::OracleTooLarge { t, max: BRUTE_FORCE_MAX_T });
    }
    let classes = inventory.len();
    let count_chunk = |range: Range<u64>, visit: &(dyn Fn(Range<u64>, &mut dyn FnMut(Pair)) + Sync)| {
        let mut counts = vec![0u64; classes];
        let mut failure = None;
        visit(range, &mut |p: Pair| match classify(&p, inventory) {
            Ok(i) => counts[i] += 1,
            Err(e) => failure = failure.take().or(Some(e)),
        });
        failure.map_or(Ok(counts), Err)
    };

    let chunks: Vec<Range<u64>> = (0..t.div_ceil(CHUNK)).map(|i| i * CHUNK + 1..((i + 1) * CHUNK).min(t) + 1).collect();
    let enumerator = (!options.oracle).then(|| PairEnumerator::new(n, t).include_b_zero(options.include_b_zero));
    let visit = |range: Range<u64>, emit: &mut dyn FnMut(Pair)| match &enumerator {
        Some(e) => e.visit_range(range, &mut |p| emit(p)),
        None => {
            // brute force: chunk over |a|, both signs
            let (lo, hi) = (range.start as i64, range.end as i64);
            brute_force_visit(n, t, lo..hi, options.include_b_zero, &mut |p| emit(p));
            brute_force_visit(n, t, -hi + 1..-lo + 1, options.include_b_zero, &mut |p| emit(p));
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| PairsError::Pool(e.to_string()))?;
    let partials: Vec<Vec<u64>> = pool.install(|| {
        chunks.into_par_iter().map(|r| count_chunk(r, &visit)).collect::<Result<_, _>>()
    })?;

    let mut per_class = vec![0u64; classes];
    for part in partials {
        for (acc, v) in per_class.iter_mut().zip(part) {
            *acc += v;
        }
    }
    let total = per_class.iter().sum();
    Ok(CountTable { n, t, per_class, total })
}

/// Number of forms `[a, b, c]` properly equivalent to `Q` with
/// `|a|, |c| <= T`, `a > c`, `b >= 0`; equal to `D_T^Q` through `{a, c} ↦ E_ac`.
pub fn f_count(form: &QuadForm, t: u64) -> Result<u64, PairsError> {
    let d = form.discriminant();
    assert!(d != 0 && d % 4 == 0, "f_count needs discriminant 4n with n nonzero");
    let inventory = class_representatives(d / 4);
    let label = class_label(form).expect("nondegenerate");
    let table = count_by_class(d / 4, t, &inventory, &CountOptions::default())?;
    Ok(table.count_for(&inventory, &label).unwrap_or(0))
}
