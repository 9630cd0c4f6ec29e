//! Truncated finite adeles.
//!
//! An [`AdelePoint`] stores finitely many explicit p-adic components. Every
//! prime without an explicit component is integral and contributes nothing to
//! arithmetic or to the norm; sampling materialises the primes it needs.
//!
//! A component is either *exact*, the rational `m·p^e` with `p ∤ m`, or
//! *truncated*, a digit prefix `p^v (a_0 + a_1 p + …)` known modulo
//! `p^(v + len)`. Arithmetic on truncated components keeps the smaller absolute
//! precision of the operands. When every known digit of a result cancels the
//! valuation is undetermined and [`Error::IndeterminateCancellation`] is raised.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::primepow::{ball_exponent, check_enumerable, is_prime, primes_upto, ExactPositiveRational, PrimePower, Radius};

/// Default number of p-adic digits drawn by the samplers.
pub const DEFAULT_DEPTH: usize = 16;

/// Longest digit string any single operation may materialise.
const MAX_SPAN: i64 = 1 << 20;


#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    /// `m · p^e` with `p ∤ m`, `m ≠ 0`.
    Exact { m: BigInt, e: i64 },
    /// `p^v Σ digits[i] p^i`, `digits[0] ≠ 0`, known modulo `p^(v + digits.len())`.
    Truncated { v: i64, digits: Vec<u64> },
}

/// A non-zero element of `Q_p`, exact or known to finite absolute precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicComponent {
    p: u64,
    repr: Repr,
}

impl PAdicComponent {
    /// The exact value `m · p^e`; factors of `p` in `m` are moved into the
    /// exponent. Returns `None` for `m = 0`.
    pub fn exact(p: u64, m: BigInt, e: i64) -> Result<Option<Self>> {
        check_prime(p)?;
        if m.is_zero() {
            return Ok(None);
        }
        let bp = BigInt::from(p);
        let mut m = m;
        let mut e = e;
        loop {
            let (q, r) = m.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            m = q;
            e += 1;
        }
        check_valuation(p, e)?;
        Ok(Some(PAdicComponent {
            p,
            repr: Repr::Exact { m, e },
        }))
    }

    /// A truncated component with leading digit at position `valuation`.
    pub fn truncated(p: u64, valuation: i64, digits: Vec<u64>) -> Result<Self> {
        check_prime(p)?;
        check_valuation(p, valuation)?;
        if digits.is_empty() {
            return Err(Error::invalid("truncated component needs at least one digit"));
        }
        if digits[0] == 0 {
            return Err(Error::invalid("leading digit must be non-zero"));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= p) {
            return Err(Error::invalid(format!("digit {d} out of range for p = {p}")));
        }
        if digits.len() as i64 > MAX_SPAN {
            return Err(Error::OutOfRange(format!("{} digits", digits.len())));
        }
        Ok(PAdicComponent {
            p,
            repr: Repr::Truncated { v: valuation, digits },
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `ord_p`, so that `|x|_p = p^{-valuation}`.
    pub fn valuation(&self) -> i64 {
        match &self.repr {
            Repr::Exact { e, .. } => *e,
            Repr::Truncated { v, .. } => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Exact { .. })
    }

    /// Absolute precision `N` (value known modulo `p^N`); `None` when exact.
    pub fn precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Exact { .. } => None,
            Repr::Truncated { v, digits } => Some(v + digits.len() as i64),
        }
    }

    /// Stored digits of a truncated component.
    pub fn digits(&self) -> Option<&[u64]> {
        match &self.repr {
            Repr::Exact { .. } => None,
            Repr::Truncated { digits, .. } => Some(digits),
        }
    }

    /// `m` and `e` of an exact component.
    pub fn exact_parts(&self) -> Option<(&BigInt, i64)> {
        match &self.repr {
            Repr::Exact { m, e } => Some((m, *e)),
            Repr::Truncated { .. } => None,
        }
    }

    pub fn neg(&self) -> Self {
        let repr = match &self.repr {
            Repr::Exact { m, e } => Repr::Exact { m: -m, e: *e },
            Repr::Truncated { v, digits } => {
                // p-adic complement: p - a_0, then p - 1 - a_i. Exact modulo p^(v+len).
                let p = self.p;
                let digits = digits
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| if i == 0 { p - d } else { p - 1 - d })
                    .collect();
                Repr::Truncated { v: *v, digits }
            }
        };
        PAdicComponent { p: self.p, repr }
    }

    /// Digits of the value at absolute positions `lo .. hi`, reduced modulo
    /// `p^hi`. Requires `hi ≤ precision`.
    fn digits_window(&self, lo: i64, hi: i64) -> Vec<u64> {
        let len = (hi - lo).max(0) as usize;
        let mut out = vec![0u64; len];
        match &self.repr {
            Repr::Truncated { v, digits } => {
                for (i, &d) in digits.iter().enumerate() {
                    let pos = v + i as i64;
                    if pos >= lo && pos < hi {
                        out[(pos - lo) as usize] = d;
                    }
                }
            }
            Repr::Exact { m, e } => {
                if *e >= hi {
                    return out;
                }
                let p = BigInt::from(self.p);
                let modulus = num_traits::pow(p.clone(), (hi - e) as usize);
                let mut r = m.mod_floor(&modulus);
                let mut pos = *e;
                while !r.is_zero() && pos < hi {
                    let (q, d) = r.div_rem(&p);
                    if pos >= lo {
                        out[(pos - lo) as usize] = d.to_u64().expect("digit below p");
                    }
                    r = q;
                    pos += 1;
                }
            }
        }
        out
    }

    /// Sum of two components of the same prime. `Ok(None)` means an exact zero.
    pub fn add(&self, other: &Self) -> Result<Option<Self>> {
        assert_eq!(self.p, other.p, "components of different primes");
        let p = self.p;
        if let (Repr::Exact { m: m1, e: e1 }, Repr::Exact { m: m2, e: e2 }) = (&self.repr, &other.repr) {
            let e = (*e1).min(*e2);
            let shift = |m: &BigInt, ei: i64| -> Result<BigInt> {
                let d = ei - e;
                if d > MAX_SPAN {
                    return Err(Error::OutOfRange(format!("exponent gap {d}")));
                }
                Ok(m * num_traits::pow(BigInt::from(p), d as usize))
            };
            let sum = shift(m1, *e1)? + shift(m2, *e2)?;
            return PAdicComponent::exact(p, sum, e);
        }
        let hi = match (self.precision(), other.precision()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => unreachable!(),
        };
        let lo = self.valuation().min(other.valuation());
        if lo >= hi {
            // Both operands lie at or below the shared precision.
            return Err(Error::IndeterminateCancellation { p, position: hi });
        }
        if hi - lo > MAX_SPAN {
            return Err(Error::OutOfRange(format!("digit span {}", hi - lo)));
        }
        let a = self.digits_window(lo, hi);
        let b = other.digits_window(lo, hi);
        let mut sum = Vec::with_capacity(a.len());
        let mut carry = 0u64;
        for (x, y) in a.iter().zip(&b) {
            let s = x + y + carry;
            if s >= p {
                sum.push(s - p);
                carry = 1;
            } else {
                sum.push(s);
                carry = 0;
            }
        }
        match sum.iter().position(|&d| d != 0) {
            Some(w) => {
                check_valuation(p, lo + w as i64)?;
                Ok(Some(PAdicComponent {
                    p,
                    repr: Repr::Truncated {
                        v: lo + w as i64,
                        digits: sum.split_off(w),
                    },
                }))
            }
            None => Err(Error::IndeterminateCancellation { p, position: hi }),
        }
    }

    fn fmt_text(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Exact { m, e } => write!(f, "{}:{}:={}", self.p, e, m),
            Repr::Truncated { v, digits } => {
                write!(f, "{}:{}:", self.p, v)?;
                if self.p <= 36 {
                    for &d in digits {
                        let c = char::from_digit(d as u32, 36).expect("digit below 36");
                        write!(f, "{c}")?;
                    }
                    Ok(())
                } else {
                    for (i, d) in digits.iter().enumerate() {
                        if i > 0 {
                            f.write_str(".")?;
                        }
                        write!(f, "{d}")?;
                    }
                    Ok(())
                }
            }
        }
    }

    fn parse_text(s: &str) -> Result<Self> {
        let mut parts = s.splitn(3, ':');
        let p = parts.next().ok_or_else(|| Error::parse("missing prime"))?;
        let v = parts.next().ok_or_else(|| Error::parse(format!("missing valuation in {s:?}")))?;
        let body = parts.next().ok_or_else(|| Error::parse(format!("missing digits in {s:?}")))?;
        let p = parse_canonical_int(p)?
            .to_u64()
            .filter(|&p| p >= 2)
            .ok_or_else(|| Error::parse(format!("bad prime {p:?}")))?;
        let v = parse_canonical_int(v)?
            .to_i64()
            .ok_or_else(|| Error::parse(format!("bad valuation {v:?}")))?;
        check_prime(p).map_err(|e| Error::parse(e.to_string()))?;
        check_valuation(p, v).map_err(|e| Error::parse(e.to_string()))?;
        if let Some(m) = body.strip_prefix('=') {
            let m = parse_canonical_int(m)?;
            if m.is_zero() || (&m % BigInt::from(p)).is_zero() {
                return Err(Error::parse(format!("exact part {m} must be non-zero and prime to {p}")));
            }
            return Ok(PAdicComponent {
                p,
                repr: Repr::Exact { m, e: v },
            });
        }
        let digits: Vec<u64> = if p <= 36 {
            body.chars()
                .map(|c| {
                    if c.is_ascii_uppercase() {
                        return None;
                    }
                    c.to_digit(36).map(u64::from)
                })
                .collect::<Option<_>>()
                .ok_or_else(|| Error::parse(format!("bad digit string {body:?}")))?
        } else {
            body.split('.')
                .map(|d| parse_canonical_int(d).ok().and_then(|d| d.to_u64()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::parse(format!("bad digit list {body:?}")))?
        };
        PAdicComponent::truncated(p, v, digits).map_err(|e| Error::parse(e.to_string()))
    }
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// The valuation must keep the component's contribution to the norm
/// (`p^(v+1)` or `p^(−v)`) a representable prime power.
fn check_valuation(p: u64, v: i64) -> Result<()> {
    let k = if v >= 0 { v.checked_add(1) } else { v.checked_neg() };
    match k.and_then(|k| i32::try_from(k).ok()) {
        Some(k) if PrimePower::new(p, k).is_ok() => Ok(()),
        _ => Err(Error::OutOfRange(format!("valuation {v} at p = {p}"))),
    }
}

/// Decimal integer without sign prefix `+`, leading zeros or `-0`.
fn parse_canonical_int(s: &str) -> Result<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let ok = !digits.is_empty()
        && digits.len() <= 4096
        && digits.bytes().all(|b| b.is_ascii_digit())
        && !(digits.len() > 1 && digits.starts_with('0'))
        && !(s.starts_with('-') && digits == "0");
    if !ok {
        return Err(Error::parse(format!("bad integer {s:?}")));
    }
    s.parse().map_err(|_| Error::parse(format!("bad integer {s:?}")))
}

/// A finite adele with finitely many explicit components.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AdelePoint {
    components: BTreeMap<u64, PAdicComponent>,
}

impl AdelePoint {
    pub fn zero() -> Self {
        AdelePoint::default()
    }

    pub fn from_components(components: impl IntoIterator<Item = PAdicComponent>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for c in components {
            if map.insert(c.p, c).is_some() {
                return Err(Error::invalid("duplicate prime in adele components"));
            }
        }
        Ok(AdelePoint { components: map })
    }

    pub fn components(&self) -> impl Iterator<Item = &PAdicComponent> {
        self.components.values()
    }

    pub fn component(&self, p: u64) -> Option<&PAdicComponent> {
        self.components.get(&p)
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Whether every explicit component lies in `Z_p`.
    pub fn is_integral(&self) -> bool {
        self.components.values().all(|c| c.valuation() >= 0)
    }

    pub fn neg(&self) -> Self {
        AdelePoint {
            components: self.components.iter().map(|(&p, c)| (p, c.neg())).collect(),
        }
    }

    /// Componentwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.components.clone();
        for (&p, c) in &other.components {
            match out.remove(&p) {
                None => {
                    out.insert(p, c.clone());
                }
                Some(mine) => {
                    if let Some(sum) = mine.add(c)? {
                        out.insert(p, sum);
                    }
                }
            }
        }
        Ok(AdelePoint { components: out })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// The adelic norm `‖x‖`: `max_p |x_p|_p` off `∏ Z_p`, `max_p |x_p|_p / p`
    /// on it. Depends on valuations only.
    pub fn norm(&self) -> Radius {
        let integral = self.is_integral();
        self.components
            .values()
            .filter_map(|c| {
                let k = if integral { -(c.valuation() + 1) } else { -c.valuation() };
                // off ∏ Z_p only the components outside Z_p can attain the max
                (integral || k > 0).then(|| radius_from_exponent(c.p, k))
            })
            .max()
            .unwrap_or(Radius::Zero)
    }

    /// `‖x‖₀ = max_p |x_p|_p / p`.
    pub fn norm0(&self) -> BigRational {
        self.components
            .values()
            .map(|c| p_power_ratio(c.p, -c.valuation() - 1))
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// `‖x‖₁ = max_p |x_p|_p`.
    pub fn norm1(&self) -> BigRational {
        self.components
            .values()
            .map(|c| p_power_ratio(c.p, -c.valuation()))
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

fn radius_from_exponent(p: u64, k: i64) -> Radius {
    // components are validated to keep this in range
    let k = i32::try_from(k).expect("valuation checked at construction");
    Radius::Pp(PrimePower::new(p, k).expect("valuation checked at construction"))
}

fn p_power_ratio(p: u64, k: i64) -> BigRational {
    let base = BigInt::from(p);
    let n = num_traits::pow(base, k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(n)
    } else {
        BigRational::new(BigInt::one(), n)
    }
}

/// `ρ(x, y) = ‖x − y‖`.
///
/// A component whose digits cancel completely is only known to have
/// valuation `≥` the shared precision. The distance is still returned when that
/// bound cannot reach the maximum attained by the resolved components;
/// otherwise the cancellation is reported.
pub fn distance(x: &AdelePoint, y: &AdelePoint) -> Result<Radius> {
    let y = y.neg();
    let mut resolved = x.components.clone();
    let mut unresolved: Vec<(u64, i64)> = Vec::new();
    for (&p, c) in &y.components {
        match resolved.remove(&p) {
            None => {
                resolved.insert(p, c.clone());
            }
            Some(mine) => match mine.add(c) {
                Ok(Some(sum)) => {
                    resolved.insert(p, sum);
                }
                Ok(None) => {}
                Err(Error::IndeterminateCancellation { p, position }) => unresolved.push((p, position)),
                Err(e) => return Err(e),
            },
        }
    }
    let diff = AdelePoint { components: resolved };
    let norm = diff.norm();
    let integral = diff.is_integral();
    for &(p, position) in &unresolved {
        // |d_p|_p ≤ p^{−position}; on ∏ Z_p the norm divides by p
        let bound_exp = if integral { -(position + 1) } else { -position };
        // a bound too small to represent is below every non-zero norm
        let below = |k: i64| match i32::try_from(k).map(|k| PrimePower::new(p, k)) {
            Ok(Ok(b)) => Radius::Pp(b) < norm,
            _ => k < 0 && norm != Radius::Zero,
        };
        let harmless = if integral {
            position >= 0 && below(bound_exp)
        } else {
            position >= 0 || below(bound_exp)
        };
        if !harmless {
            return Err(Error::IndeterminateCancellation { p, position });
        }
    }
    Ok(norm)
}

impl fmt::Display for AdelePoint {
    /// `p:v:d0d1…` per component, `;`-separated, `0` for the zero point.
    /// Digits are base-36 characters for `p ≤ 36` and `.`-separated decimals
    /// otherwise; exact components are written `p:e:=m`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("0");
        }
        for (i, c) in self.components.values().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            c.fmt_text(f)?;
        }
        Ok(())
    }
}

impl FromStr for AdelePoint {
    type Err = Error;

    /// Accepts exactly the canonical text produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "0" {
            return Ok(AdelePoint::zero());
        }
        let mut components = BTreeMap::new();
        let mut last = 0u64;
        for part in s.split(';') {
            let c = PAdicComponent::parse_text(part)?;
            if c.p <= last {
                return Err(Error::parse("components must be listed by strictly ascending prime"));
            }
            last = c.p;
            components.insert(c.p, c);
        }
        Ok(AdelePoint { components })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Ball,
    Sphere,
}

/// A ball `B_r(center)` or sphere `S_r(center)` with prime-power radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub center: AdelePoint,
    pub radius: PrimePower,
}

impl Region {
    pub fn ball(center: AdelePoint, radius: PrimePower) -> Self {
        Region {
            kind: RegionKind::Ball,
            center,
            radius,
        }
    }

    pub fn sphere(center: AdelePoint, radius: PrimePower) -> Self {
        Region {
            kind: RegionKind::Sphere,
            center,
            radius,
        }
    }

    /// Whether `x` lies in the region.
    pub fn contains(&self, x: &AdelePoint) -> Result<bool> {
        let d = distance(x, &self.center)?;
        Ok(match self.kind {
            RegionKind::Ball => d <= Radius::Pp(self.radius),
            RegionKind::Sphere => d == Radius::Pp(self.radius),
        })
    }
}

/// Haar volume: `vol(B_r) = Φ(r)`, `vol(S_r) = Φ(r) − Φ(r₋)`.
pub fn haar_volume(region: &Region) -> Result<ExactPositiveRational> {
    let r = region.radius;
    check_enumerable(&r)?;
    Ok(match region.kind {
        RegionKind::Ball => r.phi(),
        RegionKind::Sphere => {
            let v = r.phi().into_ratio() - r.pred().phi().into_ratio();
            ExactPositiveRational::new(v).expect("sphere volumes are positive")
        }
    })
}

/// Sampler settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Digits drawn per component.
    pub depth: usize,
    /// Every prime up to this bound gets an explicit component, so the sampled
    /// norm is exact whenever it exceeds `1/q` for the next prime `q`.
    pub prime_cutoff: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            depth: DEFAULT_DEPTH,
            prime_cutoff: 0,
        }
    }
}

/// Primes whose component of `B_r` differs from `Z_p`: `p ≤ r` for `r > 1`,
/// `p < 1/r` for `r < 1`.
pub fn nontrivial_primes(r: &PrimePower) -> Vec<u64> {
    if r.is_large() {
        primes_upto(r.magnitude())
    } else {
        primes_upto(r.magnitude() - 1)
    }
}

/// Uniform sample from a ball or sphere.
///
/// The ball `B_r` is `∏_p p^{-α_p} Z_p` with `α_p = [[log_p r]]`; each listed
/// component is drawn uniformly to `depth` digits. The sphere `S_r`, `r = q^k`,
/// is `B_r \ B_{r₋}`, and `B_{r₋}` differs from `B_r` only in the `q`-component
/// (`Φ(r₋) = Φ(r)/q`), so a sphere sample is a ball sample whose `q`-component
/// has a non-zero digit at position `-α_q`.
///
/// A non-distinguished component whose drawn digits are all zero is redrawn,
/// which biases the law by at most `p^{-depth}` per component.
pub fn sample_uniform<R: Rng + ?Sized>(region: &Region, config: &SamplerConfig, rng: &mut R) -> Result<AdelePoint> {
    if config.depth == 0 {
        return Err(Error::invalid("sampling depth must be positive"));
    }
    let r = region.radius;
    let mut primes = nontrivial_primes(&r);
    for p in primes_upto(config.prime_cutoff) {
        if !primes.contains(&p) {
            primes.push(p);
        }
    }
    primes.sort_unstable();
    let distinguished = (region.kind == RegionKind::Sphere).then(|| r.p());
    if let Some(q) = distinguished {
        if !primes.contains(&q) {
            primes.push(q);
            primes.sort_unstable();
        }
    }
    for _attempt in 0..64 {
        let mut comps = Vec::with_capacity(primes.len());
        for &p in &primes {
            let lo = -ball_exponent(p, &r);
            let c = if Some(p) == distinguished {
                let mut digits = Vec::with_capacity(config.depth);
                digits.push(rng.random_range(1..p));
                for _ in 1..config.depth {
                    digits.push(rng.random_range(0..p));
                }
                PAdicComponent::truncated(p, lo, digits)?
            } else {
                loop {
                    let digits: Vec<u64> = (0..config.depth).map(|_| rng.random_range(0..p)).collect();
                    if let Some(w) = digits.iter().position(|&d| d != 0) {
                        break PAdicComponent::truncated(p, lo + w as i64, digits[w..].to_vec())?;
                    }
                }
            };
            comps.push(c);
        }
        let sample = AdelePoint::from_components(comps)?;
        match sample.add(&region.center) {
            Ok(x) => return Ok(x),
            Err(Error::IndeterminateCancellation { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::IndeterminateCancellation {
        p: 0,
        position: config.depth as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pp(p: u64, k: i32) -> PrimePower {
        PrimePower::new(p, k).unwrap()
    }

    fn tr(p: u64, v: i64, digits: &[u64]) -> PAdicComponent {
        PAdicComponent::truncated(p, v, digits.to_vec()).unwrap()
    }

    fn ex(p: u64, m: i64, e: i64) -> PAdicComponent {
        PAdicComponent::exact(p, BigInt::from(m), e).unwrap().unwrap()
    }

    fn point(cs: Vec<PAdicComponent>) -> AdelePoint {
        AdelePoint::from_components(cs).unwrap()
    }

    fn depth_digits(lead: u64, fill: u64) -> Vec<u64> {
        let mut d = vec![fill; DEFAULT_DEPTH];
        d[0] = lead;
        d
    }

    #[test]
    fn norm_examples() {
        let x = point(vec![tr(2, -1, &depth_digits(1, 0))]);
        assert_eq!(x.norm(), Radius::Pp(pp(2, 1)));
        let y = point(vec![tr(3, 0, &depth_digits(2, 1))]);
        assert_eq!(y.norm(), Radius::Pp(pp(3, -1)));
        assert_eq!(AdelePoint::zero().norm(), Radius::Zero);
    }

    #[test]
    fn distance_examples() {
        let x = point(vec![ex(2, 1, -1), ex(5, 3, 2)]);
        assert_eq!(distance(&x, &x).unwrap(), Radius::Zero);
        let a = point(vec![tr(2, -1, &depth_digits(1, 0))]);
        let b = point(vec![tr(3, -1, &depth_digits(1, 0))]);
        assert_eq!(distance(&a, &b).unwrap(), Radius::Pp(pp(3, 1)));
        let c = a.clone();
        assert!(matches!(
            distance(&a, &c),
            Err(Error::IndeterminateCancellation { p: 2, .. })
        ));
    }

    #[test]
    fn add_examples() {
        let x = point(vec![tr(2, -1, &depth_digits(1, 0))]);
        assert_eq!(x.add(&AdelePoint::zero()).unwrap(), x);
        let sum = x.add(&x).unwrap();
        let c = sum.component(2).unwrap();
        assert_eq!(c.valuation(), 0);
        assert_eq!(c.digits().unwrap().len(), DEFAULT_DEPTH - 1);
        assert_eq!(c.digits().unwrap()[0], 1);
        // -1/2 in Q_2 is 2^-1 (1 + 2 + 4 + …); truncated it cancels 1/2 completely.
        let minus_half = point(vec![tr(2, -1, &depth_digits(1, 1))]);
        let half = point(vec![ex(2, 1, -1)]);
        assert!(matches!(
            half.add(&minus_half),
            Err(Error::IndeterminateCancellation { p: 2, position: 15 })
        ));
        // exact arithmetic stays exact
        let one = point(vec![ex(2, 1, -1)]).add(&point(vec![ex(2, 1, -1)])).unwrap();
        assert_eq!(one.component(2).unwrap().exact_parts(), Some((&BigInt::from(1), 0)));
        assert!(half.add(&half.neg()).unwrap().is_zero());
    }

    #[test]
    fn negation_is_additive_inverse_to_precision() {
        let x = point(vec![tr(7, -2, &[3, 6, 0, 5, 1])]);
        let y = point(vec![tr(7, -2, &[3, 6, 0, 5, 1, 2, 2])]);
        // x + (-y) cancels every digit x knows about
        assert!(matches!(
            x.sub(&y),
            Err(Error::IndeterminateCancellation { p: 7, position: 3 })
        ));
        let z = point(vec![tr(7, 1, &[4])]);
        let w = x.add(&z).unwrap().sub(&z.neg().neg()).unwrap();
        assert_eq!(w.component(7).unwrap().valuation(), -2);
    }

    #[test]
    fn exact_mixed_with_truncated() {
        let a = point(vec![ex(3, -1, 0)]); // -1
        let b = point(vec![tr(3, 0, &[1, 0, 0, 2])]); // 1 + 2·27 mod 81
        let s = a.add(&b).unwrap();
        let c = s.component(3).unwrap();
        assert_eq!(c.valuation(), 3);
        assert_eq!(c.digits().unwrap(), &[2]);
    }

    #[test]
    fn norm_sandwich() {
        let x = point(vec![tr(2, 1, &[1]), tr(5, 0, &[3])]);
        let n = x.norm().to_ratio();
        assert!(x.norm0() <= n && n <= x.norm1());
        let y = point(vec![tr(2, -3, &[1]), tr(3, -1, &[2])]);
        let n = y.norm().to_ratio();
        assert!(y.norm0() <= n && n <= y.norm1());
    }

    #[test]
    fn text_round_trip() {
        for s in [
            "0",
            "2:-1:1011",
            "2:-1:=1;3:0:21;101:4:7.0.100",
            "5:-3:=-7",
            "37:2:36.0.1",
            "11:0:a0",
        ] {
            let x: AdelePoint = s.parse().unwrap();
            assert_eq!(x.to_string(), s);
        }
        for bad in ["", "4:0:1", "2:0:0", "2:0:2", "3:0:1;2:0:1", "2:00:1", "2:-0:1", "2:1:=2", "2:1:=0", "11:0:A", "41:0:1.41", "2:1:"] {
            assert!(bad.parse::<AdelePoint>().is_err(), "{bad}");
        }
    }

    #[test]
    fn volume_examples() {
        let o = AdelePoint::zero();
        let v = |kind, r| haar_volume(&Region { kind, center: o.clone(), radius: r }).unwrap().into_ratio();
        assert_eq!(v(RegionKind::Ball, pp(2, -1)), BigRational::one());
        assert_eq!(v(RegionKind::Ball, pp(2, 1)), BigRational::from_integer(2.into()));
        assert_eq!(v(RegionKind::Sphere, pp(3, 1)), BigRational::from_integer(4.into()));
        assert_eq!(v(RegionKind::Sphere, pp(2, 1)), BigRational::one());
        // translation invariance
        let c: AdelePoint = "2:-3:=1".parse().unwrap();
        assert_eq!(
            haar_volume(&Region::sphere(c, pp(3, 1))).unwrap().into_ratio(),
            BigRational::from_integer(4.into())
        );
    }

    /// Exact measure bookkeeping behind the sphere sampler: `B_r` and `B_{r₋}`
    /// differ only in the distinguished component, by one power of `p`.
    #[test]
    fn sphere_construction_bookkeeping() {
        let radii = [
            pp(2, 1), pp(3, 1), pp(2, 2), pp(5, 1), pp(7, 1), pp(2, 3), pp(3, 2), pp(11, 1), pp(13, 1), pp(2, 4),
            pp(2, -1), pp(3, -1), pp(2, -2), pp(5, -1), pp(7, -1), pp(2, -3), pp(3, -2), pp(11, -1), pp(13, -1), pp(2, -4),
        ];
        for r in radii {
            let prev = r.pred();
            let mut product = BigRational::one();
            for p in primes_upto(64) {
                let a = ball_exponent(p, &r);
                let b = ball_exponent(p, &prev);
                if p == r.p() {
                    assert_eq!(a - b, 1, "r = {r}");
                } else {
                    assert_eq!(a, b, "r = {r}, p = {p}");
                }
                product *= p_power_ratio(p, a);
            }
            assert_eq!(product, r.phi().into_ratio(), "vol(B_r) for r = {r}");
            let sphere = haar_volume(&Region::sphere(AdelePoint::zero(), r)).unwrap().into_ratio();
            let q = BigRational::from_integer(r.p().into());
            assert_eq!(sphere, product.clone() * (q.clone() - BigRational::one()) / q);
        }
    }

    #[test]
    fn sphere_samples_have_exact_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = SamplerConfig {
            depth: 12,
            prime_cutoff: 13,
        };
        for r in [pp(2, 1), pp(3, -1), pp(2, -1), pp(7, 2), pp(5, -2)] {
            for _ in 0..200 {
                let x = sample_uniform(&Region::sphere(AdelePoint::zero(), r), &cfg, &mut rng).unwrap();
                assert_eq!(x.norm(), Radius::Pp(r));
            }
        }
        let c: AdelePoint = "3:-2:=5".parse().unwrap();
        for _ in 0..100 {
            let x = sample_uniform(&Region::sphere(c.clone(), pp(2, 2)), &cfg, &mut rng).unwrap();
            assert_eq!(distance(&x, &c).unwrap(), Radius::Pp(pp(2, 2)));
        }
    }

    #[test]
    fn ball_half_is_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = SamplerConfig {
            depth: 8,
            prime_cutoff: 7,
        };
        for _ in 0..200 {
            let x = sample_uniform(&Region::ball(AdelePoint::zero(), pp(2, -1)), &cfg, &mut rng).unwrap();
            assert!(x.norm() <= Radius::Pp(pp(2, -1)));
            assert!(x.is_integral());
        }
    }
}
