//! Radial functions on `A_f`.
//!
//! A radial function is determined by its values on the spheres `S_r`, so the
//! two representations here are indexed by [`Radius`]: [`RadialStep`] is an
//! exact locally constant function with compact support, [`RadialAnalytic`] a
//! floating-point profile with certified tail bounds.
//!
//! For a radial integrable `f` the Fourier transform is again radial and
//!
//! ```text
//! f̌(x) = Σ_{q < 1/‖x‖} Φ(q) (f(q) − f(q₊)),
//! ```
//!
//! the sum running over all prime powers when `x = 0`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::{Certified, ComplexSum};
use crate::primepow::{check_enumerable, parse_rational, pp_closed_range, PrimePower, Radius};

/// Values a [`RadialStep`] can carry.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic in this type is exact.
    const EXACT: bool;
    fn from_ratio(r: &BigRational) -> Self;
    /// `|v|²`, in the same type.
    fn modulus_sq(&self) -> Self;
    fn to_complex64(&self) -> Complex64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn ratio_json(r: &BigRational) -> Value {
    Value::String(r.to_string())
}

fn ratio_from_json(v: &Value) -> Result<BigRational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(BigRational::from_integer(
            n.to_string().parse::<BigInt>().map_err(|e| Error::parse(e.to_string()))?,
        )),
        _ => Err(Error::parse(format!("expected rational, got {v}"))),
    }
}

fn f64_from_json(v: &Value) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(format!("expected finite number, got {v}")))
}

fn complex_parts(v: &Value) -> Result<(&Value, &Value)> {
    let obj = v
        .as_object()
        .filter(|o| o.len() == 2)
        .ok_or_else(|| Error::parse(format!("expected {{\"re\", \"im\"}}, got {v}")))?;
    match (obj.get("re"), obj.get("im")) {
        (Some(re), Some(im)) => Ok((re, im)),
        _ => Err(Error::parse(format!("expected {{\"re\", \"im\"}}, got {v}"))),
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }
    fn modulus_sq(&self) -> Self {
        self * self
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(self), 0.0)
    }
    fn to_json(&self) -> Value {
        ratio_json(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        ratio_from_json(v)
    }
}

impl Scalar for Complex<BigRational> {
    const EXACT: bool = true;
    fn from_ratio(r: &BigRational) -> Self {
        Complex::new(r.clone(), BigRational::zero())
    }
    fn modulus_sq(&self) -> Self {
        Complex::new(self.norm_sqr(), BigRational::zero())
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
    fn to_json(&self) -> Value {
        json!({ "re": ratio_json(&self.re), "im": ratio_json(&self.im) })
    }
    fn from_json(v: &Value) -> Result<Self> {
        if let Ok(r) = ratio_from_json(v) {
            return Ok(Complex::new(r, BigRational::zero()));
        }
        let (re, im) = complex_parts(v)?;
        Ok(Complex::new(ratio_from_json(re)?, ratio_from_json(im)?))
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_ratio(r: &BigRational) -> Self {
        ratio_to_f64(r)
    }
    fn modulus_sq(&self) -> Self {
        self * self
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn to_json(&self) -> Value {
        json!(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        f64_from_json(v)
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;
    fn from_ratio(r: &BigRational) -> Self {
        Complex64::new(ratio_to_f64(r), 0.0)
    }
    fn modulus_sq(&self) -> Self {
        Complex64::new(self.norm_sqr(), 0.0)
    }
    fn to_complex64(&self) -> Complex64 {
        *self
    }
    fn to_json(&self) -> Value {
        json!({ "re": self.re, "im": self.im })
    }
    fn from_json(v: &Value) -> Result<Self> {
        if let Ok(x) = f64_from_json(v) {
            return Ok(Complex64::new(x, 0.0));
        }
        let (re, im) = complex_parts(v)?;
        Ok(Complex64::new(f64_from_json(re)?, f64_from_json(im)?))
    }
}

/// A radial step function: `inner_value` on `B_{inner_radius}`, `values[s]`
/// on the sphere `S_s` for `inner_radius < s ≤ support_radius`, zero outside
/// `B_{support_radius}`.
///
/// Steps are kept in a canonical form: zero sphere values are not stored and
/// the envelope is tight, i.e. `inner_radius` is the largest radius up to which
/// the function is constant and `support_radius` the smallest ball containing
/// the support (`support_radius = inner_radius` for multiples of a ball
/// indicator). Two canonical steps are equal iff they agree as functions,
/// except that the zero function keeps whatever envelope it was built with.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialStep<V> {
    inner_radius: PrimePower,
    support_radius: PrimePower,
    inner_value: V,
    values: BTreeMap<PrimePower, V>,
}

impl<V: Scalar> RadialStep<V> {
    pub fn new(
        inner_radius: PrimePower,
        support_radius: PrimePower,
        inner_value: V,
        values: BTreeMap<PrimePower, V>,
    ) -> Result<Self> {
        check_enumerable(&inner_radius)?;
        check_enumerable(&support_radius)?;
        if inner_radius > support_radius {
            return Err(Error::invalid(format!(
                "inner radius {inner_radius} exceeds support radius {support_radius}"
            )));
        }
        if let Some(s) = values.keys().find(|&&s| s <= inner_radius || s > support_radius) {
            return Err(Error::invalid(format!(
                "sphere {s} outside ({inner_radius}, {support_radius}]"
            )));
        }
        Ok(RadialStep {
            inner_radius,
            support_radius,
            inner_value,
            values,
        }
        .canonical())
    }

    /// `c · 1_{B_r}`.
    pub fn ball(r: PrimePower, c: V) -> Self {
        RadialStep::new(r, r, c, BTreeMap::new()).expect("valid envelope")
    }

    /// `c · 1_{S_r}`.
    pub fn sphere(r: PrimePower, c: V) -> Self {
        RadialStep::new(r.pred(), r, V::zero(), BTreeMap::from([(r, c)])).expect("valid envelope")
    }

    pub fn zero(r: PrimePower) -> Self {
        RadialStep::ball(r, V::zero())
    }

    pub fn inner_radius(&self) -> PrimePower {
        self.inner_radius
    }

    pub fn support_radius(&self) -> PrimePower {
        self.support_radius
    }

    pub fn inner_value(&self) -> &V {
        &self.inner_value
    }

    /// Non-zero sphere values, ascending by radius.
    pub fn values(&self) -> &BTreeMap<PrimePower, V> {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.inner_value.is_zero() && self.values.is_empty()
    }

    /// Value on the sphere of the given radius (`Zero` is the origin).
    pub fn value_at(&self, r: &Radius) -> V {
        match r {
            Radius::Zero => self.inner_value.clone(),
            Radius::Pp(s) if *s <= self.inner_radius => self.inner_value.clone(),
            Radius::Pp(s) if *s > self.support_radius => V::zero(),
            Radius::Pp(s) => self.values.get(s).cloned().unwrap_or_else(V::zero),
        }
    }

    pub fn value_at_pp(&self, s: &PrimePower) -> V {
        self.value_at(&Radius::Pp(*s))
    }

    fn canonical(mut self) -> Self {
        self.values.retain(|_, v| !v.is_zero());
        // Jump between stored spheres; walking radius by radius is too slow
        // for envelopes spanning many prime powers.
        self.support_radius = self.values.keys().next_back().copied().unwrap_or(self.inner_radius);
        if self.inner_value.is_zero() {
            if let Some(&first) = self.values.keys().next() {
                self.inner_radius = first.pred();
            } else {
                self.inner_radius = self.support_radius;
            }
        }
        loop {
            if self.inner_radius >= self.support_radius {
                break;
            }
            let next = self.inner_radius.succ();
            let v = self.values.get(&next).cloned().unwrap_or_else(V::zero);
            if v != self.inner_value {
                break;
            }
            self.values.remove(&next);
            self.inner_radius = next;
        }
        self
    }

    /// Applies `g` pointwise; `g(0)` must be `0` for the result to keep compact
    /// support, which is asserted.
    pub fn map<W: Scalar>(&self, g: impl Fn(&V) -> W) -> RadialStep<W> {
        assert!(g(&V::zero()).is_zero(), "map must send 0 to 0");
        RadialStep {
            inner_radius: self.inner_radius,
            support_radius: self.support_radius,
            inner_value: g(&self.inner_value),
            values: self.values.iter().map(|(&s, v)| (s, g(v))).collect(),
        }
        .canonical()
    }

    pub fn scale(&self, c: &V) -> Self {
        self.map(|v| c.clone() * v.clone())
    }

    pub fn modulus_sq(&self) -> Self {
        self.map(V::modulus_sq)
    }

    /// Exact integral `c₀ Φ(r₀) + Σ f(s) vol(S_s)`.
    pub fn integrate(&self) -> V {
        let mut total = self.inner_value.clone() * V::from_ratio(&self.inner_radius.phi().into_ratio());
        for (s, v) in &self.values {
            let vol = s.phi().into_ratio() - s.pred().phi().into_ratio();
            total = total + v.clone() * V::from_ratio(&vol);
        }
        total
    }

    /// The exact Fourier transform.
    ///
    /// The differences `f(q) − f(q₊)` vanish outside `[r₀, R]`, so the transform
    /// is a finite sum; it is constant on `B_{(1/R)₋}` and supported in
    /// `B_{(1/r₀)₋}`.
    pub fn fourier(&self) -> Self {
        let (r0, big_r) = (self.inner_radius, self.support_radius);
        let qs = pp_closed_range(&r0, &big_r);
        let mut prefix = Vec::with_capacity(qs.len() + 1);
        let mut acc = V::zero();
        prefix.push(acc.clone());
        for q in &qs {
            let d = self.value_at_pp(q) - self.value_at_pp(&q.succ());
            if !d.is_zero() {
                acc = acc + V::from_ratio(&q.phi().into_ratio()) * d;
            }
            prefix.push(acc.clone());
        }
        let new_inner = big_r.recip().pred();
        let new_support = r0.recip().pred();
        let at = |s: &PrimePower| {
            let bound = s.recip();
            prefix[qs.partition_point(|q| *q < bound)].clone()
        };
        let values = pp_closed_range(&new_inner.succ(), &new_support)
            .into_iter()
            .map(|s| (s, at(&s)))
            .collect();
        RadialStep::new(new_inner, new_support, at(&new_inner), values).expect("transform envelope is valid")
    }

    /// Profile `r ↦ f(r)` as a [`RadialAnalytic`] with exact tail bounds.
    pub fn to_analytic(&self) -> RadialAnalytic
    where
        V: Send + Sync + 'static,
    {
        let step = Arc::new(self.clone());
        let (r0, big_r) = (self.inner_radius, self.support_radius);
        let c0 = self.inner_value.to_complex64().norm();
        let profile_step = step.clone();
        RadialAnalytic {
            profile: Arc::new(move |r: &Radius| profile_step.value_at(r).to_complex64()),
            small_variation: Some(Arc::new(move |rho: &PrimePower| if *rho < r0 { 0.0 } else { f64::INFINITY })),
            small_mass: Some(Arc::new(move |rho: &PrimePower| {
                if *rho <= r0 {
                    c0 * rho.phi().to_f64()
                } else {
                    f64::INFINITY
                }
            })),
            large_variation: Some(Arc::new(move |p: &PrimePower| if *p > big_r { 0.0 } else { f64::INFINITY })),
            large_mass: Some(Arc::new(move |p: &PrimePower| if *p >= big_r { 0.0 } else { f64::INFINITY })),
            kind: AnalyticKind::Custom,
        }
    }

    /// JSON form `{ "inner_radius": "p^k", "support_radius": "p^k",
    /// "inner_value": v, "values": { "p^k": v, … } }`.
    pub fn to_json(&self) -> Value {
        let values: serde_json::Map<String, Value> =
            self.values.iter().map(|(s, v)| (s.to_string(), v.to_json())).collect();
        json!({
            "inner_radius": self.inner_radius.to_string(),
            "support_radius": self.support_radius.to_string(),
            "inner_value": self.inner_value.to_json(),
            "values": values,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::parse("radial step must be a JSON object"))?;
        if let Some(k) = obj
            .keys()
            .find(|k| !matches!(k.as_str(), "inner_radius" | "support_radius" | "inner_value" | "values"))
        {
            return Err(Error::parse(format!("unknown field {k:?}")));
        }
        let pp = |key: &str| -> Result<PrimePower> {
            obj.get(key)
                .and_then(Value::as_str)
                .ok_or_else(|| Error::parse(format!("missing string field {key:?}")))?
                .parse()
        };
        let inner_radius = pp("inner_radius")?;
        let support_radius = pp("support_radius")?;
        let inner_value = V::from_json(obj.get("inner_value").ok_or_else(|| Error::parse("missing inner_value"))?)?;
        let mut values = BTreeMap::new();
        if let Some(map) = obj.get("values") {
            let map = map.as_object().ok_or_else(|| Error::parse("values must be an object"))?;
            for (k, v) in map {
                values.insert(k.parse::<PrimePower>()?, V::from_json(v)?);
            }
        }
        RadialStep::new(inner_radius, support_radius, inner_value, values).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Parse(m),
            other => other,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::parse(e.to_string()))?;
        RadialStep::from_json(&v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    PointwiseMultiply,
}

/// `f + c·g` or `c·(f·g)`, with `c = 1` when omitted.
pub fn combine<V: Scalar>(f: &RadialStep<V>, g: &RadialStep<V>, op: CombineOp, scalar: Option<&V>) -> RadialStep<V> {
    let one = V::from_ratio(&BigRational::one());
    let c = scalar.cloned().unwrap_or(one);
    let r0 = f.inner_radius.min(g.inner_radius);
    let big_r = f.support_radius.max(g.support_radius);
    let eval = |r: &Radius| match op {
        CombineOp::Add => f.value_at(r) + c.clone() * g.value_at(r),
        CombineOp::PointwiseMultiply => c.clone() * (f.value_at(r) * g.value_at(r)),
    };
    let values = pp_closed_range(&r0.succ(), &big_r)
        .into_iter()
        .map(|s| (s, eval(&Radius::Pp(s))))
        .collect();
    RadialStep::new(r0, big_r, eval(&Radius::Zero), values).expect("envelope of a combination is valid")
}

/// Exact integral of a step; see [`RadialStep::integrate`].
pub fn integrate_step<V: Scalar>(f: &RadialStep<V>) -> V {
    f.integrate()
}

/// Exact Fourier transform of a step; see [`RadialStep::fourier`].
pub fn ft_radial_step<V: Scalar>(f: &RadialStep<V>) -> RadialStep<V> {
    f.fourier()
}

pub type Profile = Arc<dyn Fn(&Radius) -> Complex64 + Send + Sync>;
pub type TailBound = Arc<dyn Fn(&PrimePower) -> f64 + Send + Sync>;

/// Concrete analytic profiles with closed-form terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticKind {
    /// `e^{−t r^α}`.
    Heat { t: f64, alpha: f64 },
    /// `r^β e^{−t r^α}`.
    Weighted { t: f64, alpha: f64, beta: f64 },
    Custom,
}

/// A radial profile evaluated in floating point, with bounds used to truncate
/// the infinite sphere sums:
///
/// * `small_variation(ρ) ≥ Σ_{q ≤ ρ} Φ(q) |f(q) − f(q₊)|`,
/// * `small_mass(ρ) ≥ Σ_{s ≤ ρ} |f(s)| vol(S_s)`,
/// * `large_variation(P) ≥ Σ_{q ≥ P} Φ(q) |f(q) − f(q₊)|`,
/// * `large_mass(P) ≥ Σ_{s > P} |f(s)| vol(S_s)`.
///
/// Each bound must be non-decreasing in `ρ` (resp. non-increasing in `P`) and
/// may return `∞` where it does not apply.
#[derive(Clone)]
pub struct RadialAnalytic {
    pub profile: Profile,
    pub small_variation: Option<TailBound>,
    pub small_mass: Option<TailBound>,
    pub large_variation: Option<TailBound>,
    pub large_mass: Option<TailBound>,
    pub kind: AnalyticKind,
}

impl fmt::Debug for RadialAnalytic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialAnalytic").field("kind", &self.kind).finish_non_exhaustive()
    }
}

/// Upper bound for `ψ(x) = ln lcm(1..x)`, valid for all `x > 0`.
pub const PSI_SLOPE: f64 = 1.04;

/// `Σ_{n ≥ P} e^{h(n)}` over integers, for concave `h` with `h'(P) < 0`.
fn concave_tail(h: f64, dh: f64) -> f64 {
    if dh >= 0.0 || !h.is_finite() {
        return f64::INFINITY;
    }
    h.exp() * (1.0 + 1.0 / -dh)
}

impl RadialAnalytic {
    /// The heat symbol `e^{−t r^α}`.
    pub fn heat(t: f64, alpha: f64) -> Self {
        let large = move |p: &PrimePower| {
            if !p.is_large() {
                return f64::INFINITY;
            }
            let n = p.to_f64();
            concave_tail(PSI_SLOPE * n - t * n.powf(alpha), PSI_SLOPE - t * alpha * n.powf(alpha - 1.0))
        };
        RadialAnalytic {
            profile: Arc::new(move |r: &Radius| Complex64::new((-t * r.to_f64().powf(alpha)).exp(), 0.0)),
            small_variation: Some(Arc::new(move |rho: &PrimePower| {
                // Telescoping with Φ(q) ≤ Φ(ρ): Σ_{q≤ρ} ≤ Φ(ρ)(1 − e^{−t ρ₊^α}) ≤ Φ(ρ)·t·ρ₊^α.
                let up = rho.succ().to_f64();
                (rho.ln_phi()).exp() * -(-t * up.powf(alpha)).exp_m1()
            })),
            small_mass: Some(Arc::new(|rho: &PrimePower| rho.ln_phi().exp())),
            large_variation: Some(Arc::new(large)),
            large_mass: Some(Arc::new(large)),
            kind: AnalyticKind::Heat { t, alpha },
        }
    }

    /// The weighted symbol `r^β e^{−t r^α}`, `β ≥ 0`.
    pub fn weighted(t: f64, alpha: f64, beta: f64) -> Self {
        if beta == 0.0 {
            let mut h = RadialAnalytic::heat(t, alpha);
            h.kind = AnalyticKind::Weighted { t, alpha, beta };
            return h;
        }
        // f increases on [0, r*] and decreases afterwards.
        let r_star = (beta / (t * alpha)).powf(1.0 / alpha);
        let f = move |r: f64| r.powf(beta) * (-t * r.powf(alpha)).exp();
        let large = move |p: &PrimePower| {
            if !p.is_large() {
                return f64::INFINITY;
            }
            let n = p.to_f64();
            concave_tail(
                PSI_SLOPE * n + beta * n.ln() - t * n.powf(alpha),
                PSI_SLOPE + beta / n - t * alpha * n.powf(alpha - 1.0),
            )
        };
        RadialAnalytic {
            profile: Arc::new(move |r: &Radius| Complex64::new(f(r.to_f64()), 0.0)),
            small_variation: Some(Arc::new(move |rho: &PrimePower| {
                let up = rho.succ().to_f64();
                if up <= r_star {
                    rho.ln_phi().exp() * f(up)
                } else {
                    f64::INFINITY
                }
            })),
            small_mass: Some(Arc::new(move |rho: &PrimePower| {
                let r = rho.to_f64();
                if r <= r_star {
                    rho.ln_phi().exp() * f(r)
                } else {
                    f64::INFINITY
                }
            })),
            large_variation: Some(Arc::new(move |p: &PrimePower| 2.0 * large(p))),
            large_mass: Some(Arc::new(large)),
            kind: AnalyticKind::Weighted { t, alpha, beta },
        }
    }

    pub fn eval(&self, r: &Radius) -> Complex64 {
        (self.profile)(r)
    }

    /// `ln f(r)` for the closed-form kinds (`f > 0` there).
    fn ln_value(&self, r: &PrimePower) -> Option<f64> {
        match self.kind {
            AnalyticKind::Heat { t, alpha } => Some(-t * r.to_f64().powf(alpha)),
            AnalyticKind::Weighted { t, alpha, beta } => Some(beta * r.ln() - t * r.to_f64().powf(alpha)),
            AnalyticKind::Custom => None,
        }
    }

    /// `Φ(q)(f(q) − f(q₊))` and the magnitude of the largest exponent involved.
    fn variation_term(&self, q: &PrimePower) -> (Complex64, f64) {
        let ln_phi = q.ln_phi();
        let up = q.succ();
        match self.kind {
            AnalyticKind::Heat { t, alpha } => {
                let a = ln_phi - t * q.to_f64().powf(alpha);
                let gap = t * (up.to_f64().powf(alpha) - q.to_f64().powf(alpha));
                (Complex64::new(a.exp() * -(-gap).exp_m1(), 0.0), a.abs() + gap)
            }
            AnalyticKind::Weighted { .. } => {
                let a = ln_phi + self.ln_value(q).expect("closed form");
                let b = ln_phi + self.ln_value(&up).expect("closed form");
                (Complex64::new(a.exp() - b.exp(), 0.0), a.abs().max(b.abs()))
            }
            AnalyticKind::Custom => {
                let d = self.eval(&Radius::Pp(*q)) - self.eval(&Radius::Pp(up));
                (d * ln_phi.exp(), ln_phi.abs())
            }
        }
    }

    /// `f(s) vol(S_s)` and the magnitude of its exponent.
    fn sphere_term(&self, s: &PrimePower) -> (Complex64, f64) {
        let ln_vol = s.ln_sphere_volume();
        match self.ln_value(s) {
            Some(lf) => {
                let a = ln_vol + lf;
                (Complex64::new(a.exp(), 0.0), a.abs())
            }
            None => (self.eval(&Radius::Pp(*s)) * ln_vol.exp(), ln_vol.abs()),
        }
    }
}

/// Iteration cap for the truncation searches.
const MAX_STEPS: usize = 2_000_000;

fn require_bound<'a>(b: &'a Option<TailBound>, what: &str) -> Result<&'a TailBound> {
    b.as_ref()
        .ok_or_else(|| Error::invalid(format!("radial profile lacks a {what} bound")))
}

/// Largest `ρ ≤ 1/2` with `bound(ρ) ≤ budget`, also pushed below `below` when
/// that is cheap. Returns `(ρ, bound(ρ))`.
fn small_cut(bound: &TailBound, budget: f64, below: Option<PrimePower>, what: &str) -> Result<(PrimePower, f64)> {
    let mut rho = PrimePower::new(2, -1).expect("1/2");
    let mut b = bound(&rho);
    let mut steps = 0;
    while b > budget || below.is_some_and(|u| rho >= u && rho.magnitude() < 1 << 16) {
        rho = rho.pred();
        b = bound(&rho);
        steps += 1;
        if steps > MAX_STEPS || (b > budget && rho.magnitude() > 1 << 30) {
            return Err(Error::Tolerance {
                what: format!("small-radius tail of {what}"),
                requested: budget,
                achieved: b,
            });
        }
    }
    Ok((rho, b))
}

/// Smallest integer prime power `P ≥ 2` with `bound(P) ≤ budget`.
fn large_cut(bound: &TailBound, budget: f64, what: &str) -> Result<(PrimePower, f64)> {
    let mut p = PrimePower::new(2, 1).expect("2");
    let mut b = bound(&p);
    let mut steps = 0;
    while b > budget {
        p = p.succ();
        b = bound(&p);
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Tolerance {
                what: format!("large-radius tail of {what}"),
                requested: budget,
                achieved: b,
            });
        }
    }
    Ok((p, b))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance must be positive, got {tol}")))
    }
}

fn finish(sum: &ComplexSum, exponent_err: f64, truncation: f64, what: &str, tol: f64) -> Result<Certified<Complex64>> {
    let value = sum.value();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Tolerance {
            what: format!("{what} (terms overflow double precision)"),
            requested: tol,
            achieved: f64::INFINITY,
        });
    }
    Ok(Certified::new(
        value,
        truncation + sum.rounding_bound(crate::numeric::TERM_REL_ERR) + exponent_err,
    ))
}

/// `∫ f = Σ_s f(s) vol(S_s)`, truncated to `(ρ, P]` with certified tails.
pub fn integrate_radial(f: &RadialAnalytic, tol: f64) -> Result<Certified<Complex64>> {
    check_tol(tol)?;
    let small = require_bound(&f.small_mass, "small-radius mass")?;
    let large = require_bound(&f.large_mass, "large-radius mass")?;
    let (rho, b_small) = small_cut(small, tol / 4.0, None, "integral")?;
    let (p, b_large) = large_cut(large, tol / 4.0, "integral")?;
    let mut sum = ComplexSum::new();
    let mut exponent_err = 0.0;
    for s in pp_closed_range(&rho.succ(), &p) {
        let (term, a) = f.sphere_term(&s);
        exponent_err += term.norm() * a * 4.0 * f64::EPSILON;
        sum.add(term);
    }
    finish(&sum, exponent_err, b_small + b_large, "integral", tol)
}

/// `f̌` at a point of norm `x_norm`, truncated on both ends with certified
/// remainders. For `x_norm = 0` the sum runs over all prime powers.
pub fn ft_radial_eval(f: &RadialAnalytic, x_norm: &Radius, tol: f64) -> Result<Certified<Complex64>> {
    check_tol(tol)?;
    if let Some(r) = x_norm.prime_power() {
        check_enumerable(&r)?;
    }
    let small = require_bound(&f.small_variation, "small-radius variation")?;
    // q < 1/‖x‖ for prime powers means q ≤ (1/‖x‖)₋.
    let upper = x_norm.prime_power().map(|x| x.recip().pred());
    let (rho, b_small) = small_cut(small, tol / 4.0, upper, "Fourier transform")?;
    let (end, b_large) = match (upper, &f.large_variation) {
        (Some(u), None) => (u, 0.0),
        (_, Some(large)) => {
            let (p, b) = large_cut(large, tol / 4.0, "Fourier transform")?;
            match upper {
                Some(u) if u < p => (u, 0.0),
                _ => (p.pred(), b),
            }
        }
        (None, None) => return Err(Error::invalid("radial profile lacks a large-radius variation bound")),
    };
    if let Some(u) = upper.filter(|u| *u <= rho) {
        // the whole sum lies below the cut
        return finish(&ComplexSum::new(), 0.0, small(&u), "Fourier transform", tol);
    }
    let mut sum = ComplexSum::new();
    let mut exponent_err = 0.0;
    for q in pp_closed_range(&rho.succ(), &end) {
        let (term, a) = f.variation_term(&q);
        exponent_err += term.norm() * a * 4.0 * f64::EPSILON;
        sum.add(term);
    }
    finish(&sum, exponent_err, b_small + b_large, "Fourier transform", tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(p: u64, k: i32) -> PrimePower {
        PrimePower::new(p, k).unwrap()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    type Step = RadialStep<BigRational>;

    #[test]
    fn ft_examples() {
        let b_half = Step::ball(pp(2, -1), q(1));
        assert_eq!(b_half.fourier(), b_half);
        let b2 = Step::ball(pp(2, 1), q(1));
        assert_eq!(b2.fourier(), Step::ball(pp(3, -1), q(2)));
        let s2 = Step::sphere(pp(2, 1), q(1));
        let expected = combine(&Step::ball(pp(3, -1), q(2)), &Step::ball(pp(2, -1), q(1)), CombineOp::Add, Some(&q(-1)));
        assert_eq!(s2.fourier(), expected);
        assert_eq!(expected.inner_radius(), pp(3, -1));
        assert_eq!(expected.support_radius(), pp(2, -1));
        assert_eq!(expected.value_at(&Radius::Zero), q(1));
        assert_eq!(expected.value_at_pp(&pp(2, -1)), q(-1));
    }

    #[test]
    fn integrate_examples() {
        for r in [pp(2, -1), pp(2, 1), pp(3, 2), pp(5, -1)] {
            assert_eq!(Step::ball(r, q(1)).integrate(), r.phi().into_ratio());
        }
        assert!(Step::zero(pp(2, 1)).integrate().is_zero());
        assert_eq!(Step::sphere(pp(3, 1), q(1)).integrate(), q(4));
    }

    #[test]
    fn combine_examples() {
        let f = Step::sphere(pp(3, 1), q(5));
        assert_eq!(combine(&f, &Step::zero(pp(2, -1)), CombineOp::Add, None), f);
        let prod = combine(&Step::ball(pp(2, 1), q(1)), &Step::ball(pp(2, -1), q(1)), CombineOp::PointwiseMultiply, None);
        assert_eq!(prod, Step::ball(pp(2, -1), q(1)));
        let sum = combine(&Step::sphere(pp(2, 1), q(1)), &Step::ball(pp(2, -1), q(1)), CombineOp::Add, None);
        assert_eq!(sum.value_at(&Radius::Zero), q(1));
        assert_eq!(sum.value_at_pp(&pp(2, -1)), q(1));
        assert_eq!(sum.value_at_pp(&pp(2, 1)), q(1));
        assert_eq!(sum.value_at_pp(&pp(3, 1)), q(0));
        // 1 on B_2 in fact
        assert_eq!(sum, Step::ball(pp(2, 1), q(1)));
    }

    #[test]
    fn canonical_envelope() {
        let f = Step::new(pp(3, -1), pp(5, 1), q(2), BTreeMap::from([(pp(2, -1), q(2)), (pp(3, 1), q(0))])).unwrap();
        assert_eq!(f, Step::ball(pp(2, -1), q(2)));
        assert!(Step::new(pp(2, 1), pp(2, -1), q(1), BTreeMap::new()).is_err());
        assert!(Step::new(pp(2, -1), pp(2, 1), q(1), BTreeMap::from([(pp(3, 1), q(1))])).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = Step::new(pp(3, -1), pp(5, 1), q(2), BTreeMap::from([(pp(2, 1), BigRational::new(1.into(), 3.into()))])).unwrap();
        let s = f.to_json().to_string();
        assert_eq!(Step::from_json_str(&s).unwrap(), f);
        let g: RadialStep<Complex64> = RadialStep::from_json_str(
            r#"{"inner_radius":"2^-1","support_radius":"3^1","inner_value":{"re":1.5,"im":-2},"values":{"2^1":0.25}}"#,
        )
        .unwrap();
        assert_eq!(RadialStep::<Complex64>::from_json_str(&g.to_json().to_string()).unwrap(), g);
        for bad in [
            r#"{"inner_radius":"2^1","support_radius":"2^-1","inner_value":1}"#,
            r#"{"inner_radius":"4^1","support_radius":"5^1","inner_value":1}"#,
            r#"{"inner_radius":"2^1","support_radius":"3^1","inner_value":"1/0"}"#,
            r#"{"inner_radius":"2^1","support_radius":"3^1","inner_value":1,"extra":0}"#,
        ] {
            assert!(Step::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn analytic_matches_step_profile() {
        let b2 = RadialStep::<f64>::ball(pp(2, 1), 1.0).to_analytic();
        let v = ft_radial_eval(&b2, &Radius::Pp(pp(3, -1)), 1e-12).unwrap();
        assert!((v.value.re - 2.0).abs() < 1e-12, "{v:?}");
        let v = ft_radial_eval(&b2, &Radius::Pp(pp(2, -1)), 1e-12).unwrap();
        assert!(v.value.re.abs() < 1e-12, "{v:?}");
        let i = integrate_radial(&b2, 1e-12).unwrap();
        assert!((i.value.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ft_at_zero_is_integral() {
        let f = RadialAnalytic::heat(1.0, 2.0);
        let a = ft_radial_eval(&f, &Radius::Zero, 1e-10).unwrap();
        let b = integrate_radial(&f, 1e-10).unwrap();
        assert!((a.value - b.value).norm() <= 2e-10, "{a:?} {b:?}");
    }

    #[test]
    fn missing_bound_is_an_error() {
        let mut f = RadialAnalytic::heat(1.0, 2.0);
        f.large_mass = None;
        assert!(matches!(integrate_radial(&f, 1e-6), Err(Error::InvalidArgument(_))));
    }
}
