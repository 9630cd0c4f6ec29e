//! Exact arithmetic on the totally ordered set of non-zero prime powers.
//!
//! Every prime power `p^k` with `k > 0` is an integer `n ≥ 2`, and every one
//! with `k < 0` is the reciprocal `1/n` of such an integer. The order on the
//! set therefore reduces to the order of the integer prime powers, which are
//! kept in a lazily extended sorted table shared by all threads.
//!
//! The function Φ is `Φ(x) = ∏_p p^[[log_p x]]`. For integer prime powers this
//! is `lcm(1, …, ⌊x⌋)` when `x ≥ 1` and `1 / lcm(1, …, ⌈1/x⌉ - 1)` when
//! `x < 1`; both forms are products of the prime bases of the table entries.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest integer magnitude for Φ and range enumeration.
pub const TABLE_CAP: u64 = 1 << 26;

/// Largest magnitude `p^|k|` of a [`PrimePower`]; the order's neighbours of
/// anything in range still fit in `u64`.
pub const MAX_MAGNITUDE: u64 = 1 << 63;

/// Neighbour queries above this search directly instead of growing the table.
const NEIGHBOUR_TABLE: u64 = 1 << 22;

/// Deterministic Miller-Rabin for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A non-zero integer power `p^k` of a prime.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimePower {
    p: u64,
    k: i32,
    /// `p^|k|`
    n: u64,
}

impl PrimePower {
    pub fn new(p: u64, k: i32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("prime power exponent must be non-zero"));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let n = p
            .checked_pow(k.unsigned_abs())
            .filter(|&n| n <= MAX_MAGNITUDE)
            .ok_or_else(|| Error::OutOfRange(format!("{p}^{k}")))?;
        Ok(PrimePower { p, k, n })
    }

    /// Builds `n` (or `1/n` when `reciprocal`) from an integer prime power `n`.
    fn from_integer(n: u64, base: u64, reciprocal: bool) -> Self {
        let mut k = 0i32;
        let mut m = n;
        while m > 1 {
            m /= base;
            k += 1;
        }
        PrimePower {
            p: base,
            k: if reciprocal { -k } else { k },
            n,
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    /// The integer `p^|k|`.
    pub fn magnitude(&self) -> u64 {
        self.n
    }

    pub fn is_large(&self) -> bool {
        self.k > 0
    }

    pub fn to_f64(&self) -> f64 {
        if self.k > 0 {
            self.n as f64
        } else {
            1.0 / self.n as f64
        }
    }

    pub fn ln(&self) -> f64 {
        self.k as f64 * (self.p as f64).ln()
    }

    pub fn to_ratio(&self) -> BigRational {
        let n = BigInt::from(self.n);
        if self.k > 0 {
            BigRational::from_integer(n)
        } else {
            BigRational::new(BigInt::one(), n)
        }
    }

    pub fn recip(&self) -> Self {
        PrimePower {
            p: self.p,
            k: -self.k,
            n: self.n,
        }
    }

    /// Successor `n₊` in the total order.
    pub fn succ(&self) -> Self {
        if self.k > 0 {
            let (m, b) = integer_above(self.n);
            PrimePower::from_integer(m, b, false)
        } else {
            match integer_below(self.n) {
                Some((m, b)) => PrimePower::from_integer(m, b, true),
                None => PrimePower { p: 2, k: 1, n: 2 },
            }
        }
    }

    /// Predecessor `n₋` in the total order.
    pub fn pred(&self) -> Self {
        if self.k > 0 {
            match integer_below(self.n) {
                Some((m, b)) => PrimePower::from_integer(m, b, false),
                None => PrimePower { p: 2, k: -1, n: 2 },
            }
        } else {
            let (m, b) = integer_above(self.n);
            PrimePower::from_integer(m, b, true)
        }
    }

    /// `Φ(self)` as an exact rational.
    ///
    /// # Panics
    /// If the magnitude exceeds [`TABLE_CAP`].
    pub fn phi(&self) -> ExactPositiveRational {
        if self.k > 0 {
            ExactPositiveRational::from_integer(lcm_upto(self.n))
        } else {
            ExactPositiveRational::reciprocal_of(lcm_upto(self.n - 1))
        }
    }

    /// `ln Φ(self)` in floating point, without forming the big integer.
    pub fn ln_phi(&self) -> f64 {
        if self.k > 0 {
            ln_lcm_upto(self.n)
        } else {
            -ln_lcm_upto(self.n - 1)
        }
    }

    /// `ln vol(S_self) = ln(Φ(self) - Φ(self₋)) = ln Φ(self) + ln(1 - 1/p)`.
    pub fn ln_sphere_volume(&self) -> f64 {
        self.ln_phi() + (-(self.p as f64).recip()).ln_1p()
    }
}

impl Ord for PrimePower {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.k > 0, other.k > 0) {
            (true, true) => self.n.cmp(&other.n),
            (false, false) => other.n.cmp(&self.n),
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
        }
    }
}

impl PartialOrd for PrimePower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PrimePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.k)
    }
}

impl fmt::Debug for PrimePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.k)
    }
}

impl FromStr for PrimePower {
    type Err = Error;

    /// Parses the canonical `p^k` form.
    fn from_str(s: &str) -> Result<Self> {
        let (p, k) = s
            .split_once('^')
            .ok_or_else(|| Error::parse(format!("expected p^k, got {s:?}")))?;
        let p: u64 = parse_plain_uint(p)?;
        let k: i32 = parse_plain_int(k)?;
        PrimePower::new(p, k)
    }
}

fn parse_plain_uint(s: &str) -> Result<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return Err(Error::parse(format!("bad unsigned integer {s:?}")));
    }
    s.parse().map_err(|_| Error::parse(format!("bad unsigned integer {s:?}")))
}

fn parse_plain_int(s: &str) -> Result<i32> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let v = parse_plain_uint(digits)?;
    if s.starts_with('-') && v == 0 {
        return Err(Error::parse("negative zero"));
    }
    let v = i64::try_from(v).map_err(|_| Error::parse(format!("integer {s:?} too large")))?;
    let v = if s.starts_with('-') { -v } else { v };
    i32::try_from(v).map_err(|_| Error::parse(format!("integer {s:?} too large")))
}

/// A radius of a sphere or ball: zero or a prime power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Radius {
    Zero,
    Pp(PrimePower),
}

impl Radius {
    pub fn to_f64(&self) -> f64 {
        match self {
            Radius::Zero => 0.0,
            Radius::Pp(r) => r.to_f64(),
        }
    }

    pub fn to_ratio(&self) -> BigRational {
        match self {
            Radius::Zero => BigRational::zero(),
            Radius::Pp(r) => r.to_ratio(),
        }
    }

    pub fn prime_power(&self) -> Option<PrimePower> {
        match self {
            Radius::Zero => None,
            Radius::Pp(r) => Some(*r),
        }
    }
}

impl From<PrimePower> for Radius {
    fn from(r: PrimePower) -> Self {
        Radius::Pp(r)
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Zero => f.write_str("0"),
            Radius::Pp(r) => r.fmt(f),
        }
    }
}

impl FromStr for Radius {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "0" {
            Ok(Radius::Zero)
        } else {
            s.parse().map(Radius::Pp)
        }
    }
}

/// A positive rational in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactPositiveRational(BigRational);

impl ExactPositiveRational {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_positive() {
            Ok(ExactPositiveRational(value))
        } else {
            Err(Error::invalid(format!("{value} is not positive")))
        }
    }

    pub fn from_integer(n: BigUint) -> Self {
        ExactPositiveRational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn reciprocal_of(n: BigUint) -> Self {
        ExactPositiveRational(BigRational::new(BigInt::one(), BigInt::from(n)))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn ln(&self) -> f64 {
        ln_bigint(self.0.numer()) - ln_bigint(self.0.denom())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExactPositiveRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for ExactPositiveRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Natural logarithm of a positive big integer, accurate to a few ulps.
pub fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map_or(f64::NAN, f64::ln);
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().map_or(f64::NAN, f64::ln) + shift as f64 * std::f64::consts::LN_2
}

/// `[[t]]`: the floor for `t ≥ 0` and the floor plus one for `t < 0`.
pub fn double_bracket(t: f64) -> i64 {
    let f = t.floor() as i64;
    if t >= 0.0 {
        f
    } else {
        f + 1
    }
}

/// Exact `[[t]]` for rational input.
pub fn double_bracket_ratio(t: &BigRational) -> BigInt {
    let f = t.floor().to_integer();
    if t.is_negative() {
        f + 1
    } else {
        f
    }
}

/// The exponent `α_p(r) = [[log_p r]]` that describes the `p`-component of
/// the ball `B_r = ∏_p p^{-α_p(r)} Z_p`. Computed by integer comparisons.
pub fn ball_exponent(p: u64, r: &PrimePower) -> i64 {
    let n = r.magnitude() as u128;
    let p = p as u128;
    if r.k() > 0 {
        // largest a ≥ 0 with p^a ≤ n
        let mut a = 0;
        let mut pa = p;
        while pa <= n {
            a += 1;
            pa *= p;
        }
        a
    } else {
        // [log_p (1/n)] = -m with m the least integer such that p^m ≥ n
        let mut m = 0;
        let mut pm = 1u128;
        while pm < n {
            m += 1;
            pm *= p;
        }
        1 - m
    }
}

// ---------------------------------------------------------------------------
// The shared table of integer prime powers.

struct Table {
    limit: u64,
    /// Integer prime powers `≤ limit`, ascending.
    values: Vec<u64>,
    /// Prime base of each entry.
    bases: Vec<u64>,
    /// `cum_ln[i] = ln lcm(1, …, values[i])`.
    cum_ln: Vec<f64>,
}

impl Table {
    fn build(limit: u64) -> Table {
        let size = limit as usize + 1;
        let mut composite = vec![false; size];
        let mut pairs: Vec<(u64, u64)> = Vec::new();
        for i in 2..size {
            if composite[i] {
                continue;
            }
            let mut j = i * i;
            while j < size {
                composite[j] = true;
                j += i;
            }
            let p = i as u64;
            let mut q = p;
            loop {
                pairs.push((q, p));
                match q.checked_mul(p) {
                    Some(next) if next <= limit => q = next,
                    _ => break,
                }
            }
        }
        pairs.sort_unstable();
        let mut cum = 0.0;
        let mut comp = 0.0;
        let mut cum_ln = Vec::with_capacity(pairs.len());
        for &(_, p) in &pairs {
            // Neumaier summation keeps ln Φ accurate to ~1 ulp of the total.
            let term = (p as f64).ln();
            let t = cum + term;
            if f64::abs(cum) >= term {
                comp += (cum - t) + term;
            } else {
                comp += (term - t) + cum;
            }
            cum = t;
            cum_ln.push(cum + comp);
        }
        Table {
            limit,
            values: pairs.iter().map(|&(n, _)| n).collect(),
            bases: pairs.iter().map(|&(_, p)| p).collect(),
            cum_ln,
        }
    }

    /// Number of entries `≤ m`.
    fn count_le(&self, m: u64) -> usize {
        self.values.partition_point(|&v| v <= m)
    }

    fn first_above(&self, m: u64) -> Option<(u64, u64)> {
        let i = self.count_le(m);
        (i < self.values.len()).then(|| (self.values[i], self.bases[i]))
    }

    fn last_below(&self, m: u64) -> Option<(u64, u64)> {
        let i = self.values.partition_point(|&v| v < m);
        (i > 0).then(|| (self.values[i - 1], self.bases[i - 1]))
    }
}

static TABLE: OnceLock<RwLock<Table>> = OnceLock::new();

/// Runs `f` against a table covering at least `[2, min_limit]`.
///
/// Readers share the lock; extension takes the write lock and rebuilds with
/// a doubled limit.
fn with_table<R>(min_limit: u64, f: impl FnOnce(&Table) -> R) -> R {
    let lock = TABLE.get_or_init(|| RwLock::new(Table::build(1 << 12)));
    let min_limit = min_limit.min(TABLE_CAP);
    {
        let t = lock.read().expect("prime power table poisoned");
        if t.limit >= min_limit {
            return f(&t);
        }
    }
    {
        let mut t = lock.write().expect("prime power table poisoned");
        if t.limit < min_limit {
            let mut limit = t.limit;
            while limit < min_limit {
                limit = limit.saturating_mul(2).min(TABLE_CAP);
            }
            *t = Table::build(limit);
        }
    }
    let t = lock.read().expect("prime power table poisoned");
    f(&t)
}

/// Returns the base prime when `n` is a prime power `p^k`, `k ≥ 1`.
pub fn prime_power_base(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    for k in (1..=63u32).rev() {
        let root = integer_root(n, k);
        if root >= 2 && root.checked_pow(k) == Some(n) && is_prime(root) {
            return Some(root);
        }
    }
    None
}

fn integer_root(n: u64, k: u32) -> u64 {
    if k == 1 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    while r > 0 && r.checked_pow(k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// Smallest integer prime power `> n` with its base. Uses the table below
/// the cap and a direct search above it; Bertrand's postulate bounds both
/// searches by `2n`.
fn integer_above(n: u64) -> (u64, u64) {
    if n < NEIGHBOUR_TABLE / 2 {
        return with_table(2 * n + 2, |t| t.first_above(n)).expect("prime power in (n, 2n+2]");
    }
    let mut m = n + 1;
    loop {
        if let Some(b) = prime_power_base(m) {
            return (m, b);
        }
        m = m.checked_add(1).expect("prime power search overflowed u64");
    }
}

/// Largest integer prime power `< n`, if any.
fn integer_below(n: u64) -> Option<(u64, u64)> {
    if n <= NEIGHBOUR_TABLE {
        return with_table(n, |t| t.last_below(n));
    }
    (2..n).rev().find_map(|m| prime_power_base(m).map(|b| (m, b)))
}

/// Primes `≤ m`, ascending.
pub fn primes_upto(m: u64) -> Vec<u64> {
    with_table(m, |t| {
        let c = t.count_le(m);
        (0..c)
            .filter(|&i| t.values[i] == t.bases[i])
            .map(|i| t.values[i])
            .collect()
    })
}

/// `lcm(1, …, m)`.
pub fn lcm_upto(m: u64) -> BigUint {
    assert!(m <= TABLE_CAP, "Φ requested beyond the enumeration cap ({m})");
    with_table(m, |t| {
        let c = t.count_le(m);
        let mut acc = BigUint::one();
        // Multiply word-sized partial products to keep big multiplications few.
        let mut word: u64 = 1;
        for &p in &t.bases[..c] {
            match word.checked_mul(p) {
                Some(w) => word = w,
                None => {
                    acc *= word;
                    word = p;
                }
            }
        }
        acc * word
    })
}

/// `ln lcm(1, …, m)` (zero for `m < 2`).
pub fn ln_lcm_upto(m: u64) -> f64 {
    assert!(m <= TABLE_CAP, "Φ requested beyond the enumeration cap ({m})");
    with_table(m, |t| {
        let c = t.count_le(m);
        if c == 0 {
            0.0
        } else {
            t.cum_ln[c - 1]
        }
    })
}

/// Errors unless Φ and sphere enumeration are available around `q`, i.e.
/// `q` and its neighbours lie within [`TABLE_CAP`].
pub fn check_enumerable(q: &PrimePower) -> Result<()> {
    if q.magnitude() <= TABLE_CAP / 2 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{q} (enumeration cap {TABLE_CAP})")))
    }
}

/// All integer prime powers `n` with `lo ≤ n ≤ hi`, ascending.
///
/// # Panics
/// If `hi` exceeds [`TABLE_CAP`].
pub fn integer_prime_powers(lo: u64, hi: u64) -> Vec<PrimePower> {
    if hi < lo.max(2) {
        return Vec::new();
    }
    assert!(hi <= TABLE_CAP, "enumeration requested beyond the cap ({hi})");
    with_table(hi, |t| {
        let a = t.values.partition_point(|&v| v < lo);
        let b = t.count_le(hi);
        (a..b)
            .map(|i| PrimePower::from_integer(t.values[i], t.bases[i], false))
            .collect()
    })
}

fn ratio_floor_u64(x: &BigRational) -> Result<u64> {
    x.floor()
        .to_integer()
        .to_u64()
        .filter(|&v| v <= TABLE_CAP)
        .ok_or_else(|| Error::OutOfRange(x.to_string()))
}

fn ratio_ceil_u64(x: &BigRational) -> Result<u64> {
    x.ceil()
        .to_integer()
        .to_u64()
        .filter(|&v| v <= TABLE_CAP)
        .ok_or_else(|| Error::OutOfRange(x.to_string()))
}

/// `⌊x⌋` or `⌈x⌉` for neighbour queries, which need no table.
fn ratio_to_magnitude(x: &BigInt) -> Option<u64> {
    x.to_u64().filter(|&v| v <= MAX_MAGNITUDE)
}

fn require_positive(x: &BigRational) -> Result<()> {
    if x.is_positive() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{x} must be positive")))
    }
}

/// `Φ(x)` for a positive rational `x`.
pub fn phi(x: &BigRational) -> Result<ExactPositiveRational> {
    require_positive(x)?;
    if *x >= BigRational::one() {
        Ok(ExactPositiveRational::from_integer(lcm_upto(ratio_floor_u64(x)?)))
    } else {
        // largest integer strictly below 1/x
        let below = ratio_ceil_u64(&x.recip())? - 1;
        Ok(ExactPositiveRational::reciprocal_of(lcm_upto(below)))
    }
}

/// Smallest prime power strictly greater than `x`.
///
/// For `x ≥ 1` Bertrand's postulate puts a prime in `(⌊x⌋, 2⌊x⌋]`, so the table
/// is extended to `2⌊x⌋ + 2` before the lookup and the search always ends.
pub fn next_pp(x: &BigRational) -> Result<PrimePower> {
    require_positive(x)?;
    let out_of_range = || Error::OutOfRange(x.to_string());
    if *x >= BigRational::one() {
        let m = ratio_to_magnitude(&x.floor().to_integer()).ok_or_else(out_of_range)?;
        let (n, b) = integer_above(m);
        Ok(PrimePower::from_integer(n, b, false))
    } else {
        // largest integer prime power strictly below 1/x
        let c = ratio_to_magnitude(&x.recip().ceil().to_integer()).ok_or_else(out_of_range)?;
        Ok(match integer_below(c) {
            Some((n, b)) => PrimePower::from_integer(n, b, true),
            None => PrimePower { p: 2, k: 1, n: 2 },
        })
    }
}

/// Largest prime power strictly smaller than `x`.
pub fn prev_pp(x: &BigRational) -> Result<PrimePower> {
    require_positive(x)?;
    let out_of_range = || Error::OutOfRange(x.to_string());
    let two = BigRational::from_integer(BigInt::from(2));
    let half = two.recip();
    if *x > two {
        let c = ratio_to_magnitude(&x.ceil().to_integer()).ok_or_else(out_of_range)?;
        let (n, b) = integer_below(c).expect("2 < c has a prime power below");
        Ok(PrimePower::from_integer(n, b, false))
    } else if *x > half {
        Ok(PrimePower { p: 2, k: -1, n: 2 })
    } else {
        let m = ratio_to_magnitude(&x.recip().floor().to_integer()).ok_or_else(out_of_range)?;
        let (n, b) = integer_above(m);
        Ok(PrimePower::from_integer(n, b, true))
    }
}

/// All prime powers `q` with `a < q ≤ b`, ascending.
pub fn pp_range(a: &BigRational, b: &BigRational) -> Result<Vec<PrimePower>> {
    require_positive(a)?;
    require_positive(b)?;
    if a > b {
        return Err(Error::invalid(format!("empty range: {a} > {b}")));
    }
    let one = BigRational::one();
    let mut out = Vec::new();
    // Reciprocal part: 1/n in (a, b] with n ≥ 2, i.e. 1/b ≤ n < 1/a.
    if *a < one {
        let n_hi = ratio_ceil_u64(&a.recip())? - 1;
        let n_lo = ratio_ceil_u64(&b.recip())?.max(2);
        let mut small = integer_prime_powers(n_lo, n_hi);
        small.reverse();
        out.extend(small.into_iter().map(|q| q.recip()));
    }
    // Integer part: n in (a, b].
    if *b >= BigRational::from_integer(BigInt::from(2)) {
        let n_lo = ratio_floor_u64(a)? + 1;
        let n_hi = ratio_floor_u64(b)?;
        out.extend(integer_prime_powers(n_lo, n_hi));
    }
    Ok(out)
}

/// All prime powers `q` with `lo ≤ q ≤ hi`, ascending.
pub fn pp_closed_range(lo: &PrimePower, hi: &PrimePower) -> Vec<PrimePower> {
    if lo > hi {
        return Vec::new();
    }
    let mut out = Vec::new();
    if !lo.is_large() {
        let n_hi = lo.magnitude();
        let n_lo = if hi.is_large() { 2 } else { hi.magnitude() };
        let mut small = integer_prime_powers(n_lo, n_hi);
        small.reverse();
        out.extend(small.into_iter().map(|q| q.recip()));
    }
    if hi.is_large() {
        let n_lo = if lo.is_large() { lo.magnitude() } else { 2 };
        out.extend(integer_prime_powers(n_lo, hi.magnitude()));
    }
    out
}

/// Parses a rational written as `a`, `a/b` or a finite decimal `a.d`, with an
/// optional leading `-`. No whitespace, no `+`, non-zero denominator.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::parse(format!("bad rational {s:?}"));
    let body = s.strip_prefix('-').unwrap_or(s);
    let negative = body.len() != s.len();
    let digits_ok = |d: &str| !d.is_empty() && d.len() <= 4096 && d.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((n, d)) = body.split_once('/') {
        if !digits_ok(n) || !digits_ok(d) {
            return Err(bad());
        }
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        BigRational::new(n, d)
    } else if let Some((i, frac)) = body.split_once('.') {
        if !digits_ok(i) || !digits_ok(frac) {
            return Err(bad());
        }
        let n: BigInt = format!("{i}{frac}").parse().map_err(|_| bad())?;
        BigRational::new(n, num_traits::pow(BigInt::from(10), frac.len()))
    } else {
        if !digits_ok(body) {
            return Err(bad());
        }
        BigRational::from_integer(body.parse().map_err(|_| bad())?)
    };
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pp(p: u64, k: i32) -> PrimePower {
        PrimePower::new(p, k).unwrap()
    }

    #[test]
    fn double_bracket_examples() {
        assert_eq!(double_bracket(1.5), 1);
        assert_eq!(double_bracket(-1.0), 0);
        assert_eq!(double_bracket(-0.63), 0);
        assert_eq!(double_bracket(0.0), 0);
        assert_eq!(double_bracket_ratio(&q(-3, 2)), BigInt::from(-1));
        assert_eq!(double_bracket_ratio(&q(-1, 1)), BigInt::from(0));
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&q(1, 1)).unwrap().into_ratio(), q(1, 1));
        assert_eq!(phi(&q(10, 1)).unwrap().into_ratio(), q(2520, 1));
        assert_eq!(phi(&q(1, 3)).unwrap().into_ratio(), q(1, 2));
        assert_eq!(phi(&q(1, 2)).unwrap().into_ratio(), q(1, 1));
        assert_eq!(phi(&q(19, 10)).unwrap().into_ratio(), q(1, 1));
        assert_eq!(phi(&q(1, 4)).unwrap().into_ratio(), q(1, 6));
        assert!(phi(&q(0, 1)).is_err());
        assert!(phi(&q(-1, 2)).is_err());
    }

    #[test]
    fn next_prev_examples() {
        assert_eq!(next_pp(&q(5, 1)).unwrap(), pp(7, 1));
        assert_eq!(next_pp(&q(1, 2)).unwrap(), pp(2, 1));
        assert_eq!(prev_pp(&q(2, 1)).unwrap(), pp(2, -1));
        assert_eq!(prev_pp(&q(1, 3)).unwrap(), pp(2, -2));
        assert_eq!(next_pp(&q(1, 1)).unwrap(), pp(2, 1));
        assert_eq!(prev_pp(&q(1, 1)).unwrap(), pp(2, -1));
        assert_eq!(next_pp(&q(1, 5)).unwrap(), pp(2, -2));
        assert_eq!(pp(2, -2).succ(), pp(3, -1));
        assert_eq!(pp(2, -1).succ(), pp(2, 1));
        assert_eq!(pp(2, 1).pred(), pp(2, -1));
        assert_eq!(pp(7, 1).pred(), pp(5, 1));
    }

    #[test]
    fn range_examples() {
        let r = pp_range(&q(2, 1), &q(9, 1)).unwrap();
        let v: Vec<u64> = r.iter().map(|x| x.magnitude()).collect();
        assert_eq!(v, vec![3, 4, 5, 7, 8, 9]);
        assert_eq!(pp_range(&q(1, 2), &q(2, 1)).unwrap(), vec![pp(2, 1)]);
        assert!(pp_range(&q(5, 1), &q(5, 1)).unwrap().is_empty());
        assert!(pp_range(&q(6, 1), &q(5, 1)).is_err());
        let r = pp_range(&q(1, 6), &q(3, 1)).unwrap();
        assert_eq!(r, vec![pp(5, -1), pp(2, -2), pp(3, -1), pp(2, -1), pp(2, 1), pp(3, 1)]);
        assert_eq!(pp_closed_range(&pp(5, -1), &pp(3, 1)), r);
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..40).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
        assert!(is_prime(18_446_744_073_709_551_557));
    }

    #[test]
    fn prime_power_validation() {
        assert!(PrimePower::new(4, 1).is_err());
        assert!(PrimePower::new(2, 0).is_err());
        assert!(PrimePower::new(2, 64).is_err());
        assert_eq!(PrimePower::new(2, 40).unwrap().succ().magnitude(), (1u64 << 40) + 15);
        assert_eq!("3^-2".parse::<PrimePower>().unwrap(), pp(3, -2));
        assert!("3^0".parse::<PrimePower>().is_err());
        assert!("03^1".parse::<PrimePower>().is_err());
        assert!("3^+1".parse::<PrimePower>().is_err());
        assert!("3^-0".parse::<PrimePower>().is_err());
    }

    #[test]
    fn ordering_is_by_value() {
        let mut v = vec![pp(2, 3), pp(3, -1), pp(2, -2), pp(7, 1), pp(3, 2), pp(2, -1)];
        v.sort();
        assert_eq!(v, vec![pp(2, -2), pp(3, -1), pp(2, -1), pp(7, 1), pp(2, 3), pp(3, 2)]);
    }

    #[test]
    fn rationals() {
        let r = |s: &str| parse_rational(s).unwrap();
        assert_eq!(r("2/4"), BigRational::new(1.into(), 2.into()));
        assert_eq!(r("-3"), BigRational::from_integer((-3).into()));
        assert_eq!(r("0.25"), BigRational::new(1.into(), 4.into()));
        for bad in ["", "-", "1/0", "+1", " 1", "1/", "/2", "1.", ".5", "1/-2", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn prime_power_bases() {
        assert_eq!(prime_power_base(1), None);
        assert_eq!(prime_power_base(2), Some(2));
        assert_eq!(prime_power_base(6), None);
        assert_eq!(prime_power_base(243), Some(3));
        assert_eq!(prime_power_base(1 << 62), Some(2));
        assert_eq!(primes_upto(20), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn ball_exponents() {
        // B_{1/3} = 2Z_2 × ∏_{p≠2} Z_p
        assert_eq!(ball_exponent(2, &pp(3, -1)), -1);
        assert_eq!(ball_exponent(3, &pp(3, -1)), 0);
        assert_eq!(ball_exponent(2, &pp(2, -1)), 0);
        assert_eq!(ball_exponent(2, &pp(3, 1)), 1);
        assert_eq!(ball_exponent(2, &pp(2, 3)), 3);
        assert_eq!(ball_exponent(5, &pp(2, 2)), 0);
    }

    #[test]
    fn ln_phi_matches_exact() {
        for x in [pp(2, 1), pp(97, 1), pp(2, 10), pp(5, -1), pp(101, -1)] {
            let exact = x.phi().ln();
            assert!((exact - x.ln_phi()).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn table_extends_on_demand() {
        let big = pp(1_000_003, 1);
        assert_eq!(big.pred().magnitude(), 999_983);
        assert_eq!(big.succ().magnitude(), 1_000_033);
    }
}
