//! Spectral solvers for `∂u/∂t + D^α u = f` on radial data.
//!
//! `D^γ` is the Fourier multiplier `‖ξ‖^γ`. A radial step function has a step
//! function as transform, so everything happens on the spectral side: multiply
//! the transformed sphere values by the symbol and transform back.
//!
//! When the transform vanishes near the origin (zero integral) the product is
//! again a step function and the result is an exact [`RadialStep`]. Otherwise
//! the multiplied symbol is not locally constant at 0 and the result is an
//! [`EvaluableRadial`], evaluated pointwise with a tolerance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::heatkernel::{z_real_tol, KernelParams};
use crate::numeric::{fmt_f64, Certified, Sum};
use crate::primepow::{pp_closed_range, PrimePower, Radius};
use crate::quad;
use crate::radial::{ft_radial_eval, AnalyticKind, RadialAnalytic, RadialStep, Scalar};

/// Symbol `‖ξ_f‖^α`, or `|ξ_∞|^β + ‖ξ_f‖^α` on `A` when `beta` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolSpec {
    pub alpha: f64,
    pub beta: Option<f64>,
}

impl SymbolSpec {
    pub fn new(alpha: f64, beta: Option<f64>) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if let Some(b) = beta {
            if !(b > 0.0 && b <= 2.0) {
                return Err(Error::invalid(format!("beta must lie in (0, 2], got {b}")));
            }
        }
        Ok(SymbolSpec { alpha, beta })
    }

    fn require_solver_alpha(&self) -> Result<()> {
        if self.alpha > 1.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("the solvers need alpha > 1, got {}", self.alpha)))
        }
    }
}

/// A radial factor `s ↦ m(s)` of a spectral multiplier.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Multiplier {
    /// `e^{−t s^α}`
    Heat { t: f64, alpha: f64 },
    /// `s^γ`
    Power { gamma: f64 },
}

impl Multiplier {
    fn at(&self, s: &Radius) -> f64 {
        let x = s.to_f64();
        match *self {
            Multiplier::Heat { t, alpha } => (-t * x.powf(alpha)).exp(),
            Multiplier::Power { gamma } => x.powf(gamma),
        }
    }

    /// `|m(ρ) − m(0)|`; both kinds are monotone.
    fn variation_from_zero(&self, rho: f64) -> f64 {
        match *self {
            Multiplier::Heat { t, alpha } => -(-t * rho.powf(alpha)).exp_m1(),
            Multiplier::Power { gamma } => rho.powf(gamma),
        }
    }

    /// `sup_{s ≤ ρ} |m(s)|`.
    fn sup_below(&self, rho: f64) -> f64 {
        match *self {
            Multiplier::Heat { .. } => 1.0,
            Multiplier::Power { gamma } => rho.powf(gamma),
        }
    }
}

#[derive(Clone, Debug)]
struct SpectralTerm {
    weight: f64,
    multipliers: Vec<Multiplier>,
    step: Arc<RadialStep<f64>>,
}

impl SpectralTerm {
    fn factor(&self, s: &Radius) -> f64 {
        self.multipliers.iter().map(|m| m.at(s)).product::<f64>() * self.weight
    }
}

/// A spectral profile `g(s) = Σ_j w_j Π_k m_jk(s) ĥ_j(s)`.
#[derive(Clone, Debug, Default)]
struct Spectral {
    terms: Vec<SpectralTerm>,
}

impl Spectral {
    fn single(step: RadialStep<f64>) -> Self {
        Spectral {
            terms: vec![SpectralTerm {
                weight: 1.0,
                multipliers: Vec::new(),
                step: Arc::new(step),
            }],
        }
    }

    fn times(mut self, m: Multiplier) -> Self {
        for term in &mut self.terms {
            term.multipliers.push(m);
        }
        self
    }

    fn value(&self, s: &Radius) -> f64 {
        let mut sum = Sum::new();
        for term in &self.terms {
            let v = term.step.value_at(s);
            if v != 0.0 {
                sum.add(term.factor(s) * v);
            }
        }
        sum.value()
    }

    fn is_lizorkin(&self) -> bool {
        self.terms.iter().all(|t| *t.step.inner_value() == 0.0)
    }

    fn envelope(&self) -> (PrimePower, PrimePower) {
        let r_in = self.terms.iter().map(|t| t.step.inner_radius()).min().expect("non-empty");
        let r_out = self.terms.iter().map(|t| t.step.support_radius()).max().expect("non-empty");
        (r_in, r_out)
    }

    /// Exact inverse transform; only for Lizorkin-type profiles.
    fn to_exact(&self) -> RadialStep<f64> {
        debug_assert!(self.is_lizorkin());
        let (r_in, r_out) = self.envelope();
        let values: BTreeMap<PrimePower, f64> = pp_closed_range(&r_in.succ(), &r_out)
            .into_iter()
            .map(|s| (s, self.value(&Radius::Pp(s))))
            .collect();
        RadialStep::new(r_in, r_out, 0.0, values)
            .expect("envelope of a spectral profile is valid")
            .fourier()
    }

    fn to_analytic(&self) -> RadialAnalytic {
        let (r_in, r_out) = self.envelope();
        let spectral = Arc::new(self.clone());
        // |inner value| times the multiplier behaviour near 0, per term
        let near_zero: Vec<(f64, Vec<Multiplier>)> = self
            .terms
            .iter()
            .map(|t| ((t.weight * t.step.inner_value()).abs(), t.multipliers.clone()))
            .collect();
        let near_zero = Arc::new(near_zero);
        let nz_var = near_zero.clone();
        let nz_mass = near_zero;
        let profile = spectral.clone();
        RadialAnalytic {
            profile: Arc::new(move |r: &Radius| Complex64::new(profile.value(r), 0.0)),
            small_variation: Some(Arc::new(move |rho: &PrimePower| {
                if *rho >= r_in {
                    return f64::INFINITY;
                }
                // Σ_{q ≤ ρ} Φ(q)|g(q) − g(q₊)| ≤ Φ(ρ) Σ_j |c_j| Var_{[0, ρ₊]}(Π m_jk);
                // a product of monotone factors bounded by 1 or by s^γ has
                // variation at most the sum of the factor variations times the
                // sups of the others.
                let up = rho.succ().to_f64();
                let phi = rho.ln_phi().exp();
                phi * nz_var
                    .iter()
                    .map(|(c, ms)| {
                        let sups: Vec<f64> = ms.iter().map(|m| m.sup_below(up)).collect();
                        let var: f64 = ms
                            .iter()
                            .enumerate()
                            .map(|(i, m)| {
                                let others: f64 =
                                    sups.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s).product();
                                m.variation_from_zero(up) * others
                            })
                            .sum();
                        c * if ms.is_empty() { 0.0 } else { var }
                    })
                    .sum::<f64>()
            })),
            small_mass: Some(Arc::new(move |rho: &PrimePower| {
                if *rho > r_in {
                    return f64::INFINITY;
                }
                let r = rho.to_f64();
                let phi = rho.ln_phi().exp();
                phi * nz_mass
                    .iter()
                    .map(|(c, ms)| c * ms.iter().map(|m| m.sup_below(r).max(m.at(&Radius::Zero).abs())).product::<f64>())
                    .sum::<f64>()
            })),
            large_variation: Some(Arc::new(move |p: &PrimePower| if *p > r_out { 0.0 } else { f64::INFINITY })),
            large_mass: Some(Arc::new(move |p: &PrimePower| if *p >= r_out { 0.0 } else { f64::INFINITY })),
            kind: AnalyticKind::Custom,
        }
    }
}

/// A radial function given by its spectral profile, evaluated on demand.
#[derive(Clone, Debug)]
pub struct EvaluableRadial {
    spectral: Spectral,
    analytic: RadialAnalytic,
}

impl EvaluableRadial {
    fn new(spectral: Spectral) -> Self {
        let analytic = spectral.to_analytic();
        EvaluableRadial { spectral, analytic }
    }

    /// Value on the sphere of radius `r`.
    pub fn eval(&self, r: &Radius, tol: f64) -> Result<Certified<f64>> {
        let c = ft_radial_eval(&self.analytic, r, tol)?;
        Ok(Certified::new(c.value.re, c.error_bound))
    }

    /// Value of the transform at radius `s`.
    pub fn spectral_value(&self, s: &Radius) -> f64 {
        self.spectral.value(s)
    }
}

/// Output of the solvers: exact on Lizorkin-type data, evaluable otherwise.
#[derive(Clone, Debug)]
pub enum Solution {
    Exact(RadialStep<f64>),
    Evaluable(EvaluableRadial),
}

impl Solution {
    fn from_spectral(spectral: Spectral) -> Self {
        if spectral.is_lizorkin() {
            Solution::Exact(spectral.to_exact())
        } else {
            Solution::Evaluable(EvaluableRadial::new(spectral))
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Solution::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&RadialStep<f64>> {
        match self {
            Solution::Exact(s) => Some(s),
            Solution::Evaluable(_) => None,
        }
    }

    /// The exact step, or an error for evaluable solutions.
    pub fn into_exact(self) -> Result<RadialStep<f64>> {
        match self {
            Solution::Exact(s) => Ok(s),
            Solution::Evaluable(_) => Err(Error::invalid(
                "input is not of Lizorkin type (its transform does not vanish near 0); no exact step solution",
            )),
        }
    }

    pub fn eval(&self, r: &Radius, tol: f64) -> Result<Certified<f64>> {
        match self {
            Solution::Exact(s) => Ok(Certified::new(s.value_at(r), 0.0)),
            Solution::Evaluable(e) => e.eval(r, tol),
        }
    }
}

/// Exact transform of real data, as `f64` sphere values.
fn real_spectrum<V: Scalar>(f: &RadialStep<V>) -> Result<RadialStep<f64>> {
    let hat = f.fourier();
    let to_real = |v: &V| -> Result<f64> {
        let z = v.to_complex64();
        if z.im != 0.0 {
            return Err(Error::invalid(
                "the solvers take real data; solve real and imaginary parts separately",
            ));
        }
        Ok(z.re)
    };
    let mut inner = to_real(hat.inner_value())?;
    if !V::EXACT && inner != 0.0 {
        // In floating point the inner value ∫f is a cancelling sum; treat it
        // as zero when it is within the rounding error of that sum.
        let qs = pp_closed_range(&f.inner_radius(), &f.support_radius());
        let scale: f64 = qs
            .iter()
            .map(|q| q.ln_phi().exp() * (f.value_at_pp(q).to_complex64().norm() + f.value_at_pp(&q.succ()).to_complex64().norm()))
            .sum();
        if inner.abs() <= 8.0 * (qs.len() + 2) as f64 * f64::EPSILON * scale {
            inner = 0.0;
        }
    }
    let values = hat
        .values()
        .iter()
        .map(|(s, v)| Ok((*s, to_real(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    RadialStep::new(hat.inner_radius(), hat.support_radius(), inner, values)
}

/// `D^γ f = F^{−1}(‖ξ‖^γ F f)`.
pub fn apply_operator<V: Scalar>(f: &RadialStep<V>, gamma: f64) -> Result<Solution> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok(Solution::from_spectral(
        Spectral::single(real_spectrum(f)?).times(Multiplier::Power { gamma }),
    ))
}

/// `u(·, t) = Z_t ∗ u₀`, i.e. `û(ξ, t) = e^{−t‖ξ‖^α} û₀(ξ)`; `t = 0` returns `u₀`.
pub fn solve_homogeneous<V: Scalar>(u0: &RadialStep<V>, t: f64, symbol: &SymbolSpec) -> Result<Solution> {
    symbol.require_solver_alpha()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    let spectrum = real_spectrum(u0)?;
    if t == 0.0 {
        let spectral = Spectral::single(spectrum);
        return Ok(Solution::from_spectral(spectral));
    }
    Ok(Solution::from_spectral(
        Spectral::single(spectrum).times(Multiplier::Heat { t, alpha: symbol.alpha }),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// Piecewise linear in the spectral coefficients.
    Linear,
}

/// Forcing `f(·, τ)` sampled at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingGrid<V> {
    pub times: Vec<f64>,
    pub steps: Vec<RadialStep<V>>,
    pub interpolation: Interpolation,
}

impl<V: Scalar> ForcingGrid<V> {
    pub fn new(times: Vec<f64>, steps: Vec<RadialStep<V>>) -> Result<Self> {
        if times.is_empty() || times.len() != steps.len() {
            return Err(Error::invalid("forcing grid needs matching, non-empty times and steps"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("forcing grid must start at time 0"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("forcing times must be finite and strictly increasing"));
        }
        Ok(ForcingGrid {
            times,
            steps,
            interpolation: Interpolation::Linear,
        })
    }

    /// `f ≡ 0` on `[0, horizon]`.
    pub fn zero(horizon: f64) -> Result<Self> {
        let r = PrimePower::new(2, 1).expect("2");
        ForcingGrid::new(vec![0.0, horizon], vec![RadialStep::zero(r), RadialStep::zero(r)])
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// `{"interpolation": "linear", "nodes": [{"time": τ, "step": {…}}, …]}`.
    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .times
            .iter()
            .zip(&self.steps)
            .map(|(t, s)| json!({ "time": t, "step": s.to_json() }))
            .collect();
        json!({ "interpolation": "linear", "nodes": nodes })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::parse("forcing grid must be an object"))?;
        if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "interpolation" | "nodes")) {
            return Err(Error::parse(format!("unknown field {k:?}")));
        }
        match obj.get("interpolation").map(Value::as_str) {
            None | Some(Some("linear")) => {}
            Some(other) => return Err(Error::parse(format!("unsupported interpolation {other:?}"))),
        }
        let nodes = obj
            .get("nodes")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse("missing nodes array"))?;
        let mut times = Vec::with_capacity(nodes.len());
        let mut steps = Vec::with_capacity(nodes.len());
        for node in nodes {
            let n = node.as_object().ok_or_else(|| Error::parse("node must be an object"))?;
            if n.len() != 2 {
                return Err(Error::parse("node needs exactly time and step"));
            }
            times.push(
                n.get("time")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::parse("node time must be a number"))?,
            );
            steps.push(RadialStep::from_json(n.get("step").ok_or_else(|| Error::parse("node step missing"))?)?);
        }
        ForcingGrid::new(times, steps).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Parse(m),
            other => other,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::parse(e.to_string()))?;
        ForcingGrid::from_json(&v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    Trapezoid,
    Simpson,
}

impl Quadrature {
    fn order(&self) -> i32 {
        match self {
            Quadrature::Trapezoid => 2,
            Quadrature::Simpson => 4,
        }
    }

    fn weights(&self, m: usize, h: f64) -> Result<Vec<f64>> {
        match self {
            Quadrature::Trapezoid => Ok((0..=m)
                .map(|j| if j == 0 || j == m { h / 2.0 } else { h })
                .collect()),
            Quadrature::Simpson => {
                if m % 2 != 0 {
                    return Err(Error::invalid("Simpson's rule needs an even number of subintervals"));
                }
                Ok((0..=m)
                    .map(|j| {
                        if j == 0 || j == m {
                            h / 3.0
                        } else if j % 2 == 1 {
                            4.0 * h / 3.0
                        } else {
                            2.0 * h / 3.0
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Default number of τ-subintervals in the Duhamel integral.
pub const DEFAULT_DUHAMEL_NODES: usize = 64;

/// Duhamel solution with an error estimate from a half-resolution rerun.
#[derive(Clone, Debug)]
pub struct DuhamelSolution {
    pub solution: Solution,
    coarse: Solution,
    rule: Quadrature,
}

impl DuhamelSolution {
    /// Value at radius `r`; the bound adds the Richardson estimate
    /// `|u_M − u_{M/2}| / (2^order − 1)` to the evaluation tolerance.
    pub fn eval(&self, r: &Radius, tol: f64) -> Result<Certified<f64>> {
        let fine = self.solution.eval(r, tol)?;
        let coarse = self.coarse.eval(r, tol)?;
        let richardson = (fine.value - coarse.value).abs() / (2f64.powi(self.rule.order()) - 1.0);
        Ok(Certified::new(fine.value, fine.error_bound + richardson))
    }
}

fn duhamel_spectral(
    u0_hat: &RadialStep<f64>,
    forcing_hat: &[RadialStep<f64>],
    times: &[f64],
    t: f64,
    alpha: f64,
    rule: Quadrature,
    m: usize,
) -> Result<Spectral> {
    let mut spectral = Spectral::single(u0_hat.clone()).times(Multiplier::Heat { t, alpha });
    if t == 0.0 {
        return Ok(spectral);
    }
    let h = t / m as f64;
    let weights = rule.weights(m, h)?;
    for (j, w) in weights.into_iter().enumerate() {
        let tau = if j == m { t } else { j as f64 * h };
        let decay = Multiplier::Heat { t: t - tau, alpha };
        // locate τ in the forcing grid
        let k = times.partition_point(|&x| x <= tau).saturating_sub(1).min(times.len() - 1);
        let mut push = |weight: f64, idx: usize| {
            if weight != 0.0 && !forcing_hat[idx].is_zero() {
                spectral.terms.push(SpectralTerm {
                    weight,
                    multipliers: vec![decay],
                    step: Arc::new(forcing_hat[idx].clone()),
                });
            }
        };
        if k + 1 < times.len() && tau > times[k] {
            let lambda = (tau - times[k]) / (times[k + 1] - times[k]);
            push(w * (1.0 - lambda), k);
            push(w * lambda, k + 1);
        } else {
            push(w, k);
        }
    }
    Ok(spectral)
}

/// `u(·, t) = Z_t ∗ u₀ + ∫_0^t Z_{t−τ} ∗ f(·, τ) dτ` with the τ-integral by a
/// composite rule on `m` uniform subintervals, each node evaluated spectrally.
pub fn solve_nonhomogeneous<V: Scalar>(
    u0: &RadialStep<V>,
    forcing: &ForcingGrid<V>,
    t: f64,
    symbol: &SymbolSpec,
    rule: Quadrature,
    m: usize,
) -> Result<DuhamelSolution> {
    symbol.require_solver_alpha()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    if t > forcing.horizon() * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "forcing grid ends at {} before t = {t}",
            forcing.horizon()
        )));
    }
    if m < 2 || (rule == Quadrature::Simpson && m % 4 != 0) {
        return Err(Error::invalid(
            "need at least 2 subintervals (a multiple of 4 for Simpson, so the error estimate can halve it)",
        ));
    }
    let u0_hat = real_spectrum(u0)?;
    let forcing_hat = forcing.steps.iter().map(real_spectrum).collect::<Result<Vec<_>>>()?;
    let fine = duhamel_spectral(&u0_hat, &forcing_hat, &forcing.times, t, symbol.alpha, rule, m)?;
    let coarse = duhamel_spectral(&u0_hat, &forcing_hat, &forcing.times, t, symbol.alpha, rule, m / 2)?;
    Ok(DuhamelSolution {
        solution: Solution::from_spectral(fine),
        coarse: Solution::from_spectral(coarse),
        rule,
    })
}

/// A real-line function sampled on `x_i = x0 + i h`, taken to vanish outside.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl RealGrid {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(x0.is_finite() && h.is_finite() && h > 0.0) || values.len() < 2 {
            return Err(Error::invalid("real grid needs finite x0, positive step and at least two points"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("real grid values must be finite"));
        }
        Ok(RealGrid { x0, h, values })
    }

    pub fn sample(x0: f64, h: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        RealGrid::new(x0, h, (0..n).map(|i| f(x0 + i as f64 * h)).collect())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// CSV `x,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt_f64(self.x(i)), fmt_f64(*v)).expect("write to string");
        }
        out
    }

    /// Parses `x,value` CSV with uniformly spaced, increasing `x`.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        if lines.next().map(str::trim) != Some("x,value") {
            return Err(Error::parse("real grid CSV must start with the header x,value"));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("line {}: expected x,value", n + 2)))?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(format!("line {}: bad number {s:?}", n + 2)))
            };
            xs.push(parse(x)?);
            vs.push(parse(v)?);
        }
        if xs.len() < 2 {
            return Err(Error::parse("real grid needs at least two rows"));
        }
        let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::parse("grid abscissae must increase"));
        }
        for (i, x) in xs.iter().enumerate() {
            if (x - (xs[0] + i as f64 * h)).abs() > 1e-9 * h.max(xs[0].abs()) {
                return Err(Error::parse(format!("grid is not uniform at row {}", i + 2)));
            }
        }
        RealGrid::new(xs[0], h, vs).map_err(|e| Error::parse(e.to_string()))
    }

    /// `h Σ_j K((i − j) h) u_j` at every grid point, with `K` tabulated once
    /// per lag.
    fn convolve(&self, kernel: &dyn Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
        let n = self.values.len();
        let lags = (0..n).map(|d| kernel(d as f64 * self.h)).collect::<Result<Vec<_>>>()?;
        Ok((0..n)
            .map(|i| {
                let mut s = Sum::new();
                for (j, u) in self.values.iter().enumerate() {
                    s.add(lags[i.abs_diff(j)] * u);
                }
                self.h * s.value()
            })
            .collect())
    }
}

/// `Z_t^ℝ ∗ u` on the grid of `u`, checked against the same convolution on
/// the grid of every other point: the relative change must stay below `tol/2`.
pub fn real_heat_convolution(u: &RealGrid, t: f64, beta: f64, tol: f64) -> Result<RealGrid> {
    if t == 0.0 {
        return Ok(u.clone());
    }
    let params = KernelParams::new(t, 2.0, Some(beta))?;
    let kernel = |x: f64| z_real_tol(x, &params, (tol * 1e-3).min(1e-10)).map(|c| c.value);
    let fine = u.convolve(&kernel)?;
    let coarse_grid = RealGrid::new(u.x0, 2.0 * u.h, u.values.iter().step_by(2).copied().collect())?;
    let coarse = coarse_grid.convolve(&kernel)?;
    let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let change = fine
        .iter()
        .step_by(2)
        .zip(&coarse)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    if change >= tol / 2.0 {
        return Err(Error::GridTooCoarse { change, tol });
    }
    RealGrid::new(u.x0, u.h, fine)
}

/// Solution on `A` for factorizable data `u₀ = u_∞ ⊗ u_f`: the kernel
/// factorizes, so each factor evolves under its own semigroup.
pub fn solve_adelic<V: Scalar>(
    u_real: &RealGrid,
    u_fin: &RadialStep<V>,
    t: f64,
    symbol: &SymbolSpec,
    tol: f64,
) -> Result<(RealGrid, Solution)> {
    let beta = symbol
        .beta
        .ok_or_else(|| Error::invalid("the adelic solver needs beta"))?;
    let real = real_heat_convolution(u_real, t, beta, tol)?;
    let fin = solve_homogeneous(u_fin, t, symbol)?;
    Ok((real, fin))
}

/// `(D^β h)(x) = ∫ e^{2πixξ} |ξ|^β ĥ(ξ) dξ` for even, rapidly decaying `ĥ`,
/// as `2 ∫_0^Ξ cos(2πxξ) ξ^β ĥ(ξ) dξ` with `ĥ` negligible beyond `Ξ`.
pub fn real_operator(h_hat: &dyn Fn(f64) -> f64, beta: f64, x: f64, cutoff: f64, tol: f64) -> Result<Certified<f64>> {
    let pi = std::f64::consts::PI;
    let c = quad::integrate(
        |xi| 2.0 * (2.0 * pi * x * xi).cos() * xi.powf(beta) * h_hat(xi),
        0.0,
        cutoff,
        tol,
        20_000,
    )?;
    Ok(c)
}

/// `D^{α,β}(h_∞ ⊗ h_f)` at `(x_∞, ‖x_f‖)` by the combined symbol
/// `|ξ_∞|^β + ‖ξ_f‖^α`, one real quadrature per sphere of `ĥ_f`.
///
/// `ĥ_f` must vanish near the origin (Lizorkin type).
pub fn apply_adelic_operator<V: Scalar>(
    h_hat_real: &dyn Fn(f64) -> f64,
    h_fin: &RadialStep<V>,
    symbol: &SymbolSpec,
    x_real: f64,
    x_fin: &Radius,
    cutoff: f64,
    tol: f64,
) -> Result<Certified<f64>> {
    let beta = symbol
        .beta
        .ok_or_else(|| Error::invalid("the operator on A needs beta"))?;
    let spectrum = real_spectrum(h_fin)?;
    if *spectrum.inner_value() != 0.0 {
        return Err(Error::invalid("finite factor must be of Lizorkin type"));
    }
    let pi = std::f64::consts::PI;
    let mut sum = Sum::new();
    let mut err = 0.0;
    for (s, c) in spectrum.values() {
        // inverse transform of 1_{S_s} at x_f
        let eigen = RadialStep::sphere(*s, 1.0).fourier().value_at(x_fin);
        if eigen == 0.0 {
            continue;
        }
        let lambda = s.to_f64().powf(symbol.alpha);
        let q = quad::integrate(
            |xi| 2.0 * (2.0 * pi * x_real * xi).cos() * (xi.powf(beta) + lambda) * h_hat_real(xi),
            0.0,
            cutoff,
            tol,
            20_000,
        )?;
        sum.add(c * eigen * q.value);
        err += (c * eigen).abs() * q.error_bound;
    }
    Ok(Certified::new(sum.value(), err + sum.rounding_bound(0.0)))
}

/// Squared `L²` norm `∫ |u|²` of an exact solution.
pub fn l2_norm_sq(u: &RadialStep<f64>) -> f64 {
    u.modulus_sq().integrate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn pp(p: u64, k: i32) -> PrimePower {
        PrimePower::new(p, k).unwrap()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    /// `F^{−1} 1_{S_r}`.
    fn eigen(r: PrimePower) -> RadialStep<BigRational> {
        RadialStep::sphere(r, q(1)).fourier()
    }

    fn close(a: &RadialStep<f64>, b: &RadialStep<f64>, tol: f64) -> bool {
        let lo = a.inner_radius().min(b.inner_radius());
        let hi = a.support_radius().max(b.support_radius());
        let mut radii = vec![Radius::Zero];
        radii.extend(pp_closed_range(&lo, &hi).into_iter().map(Radius::Pp));
        radii.iter().all(|r| (a.value_at(r) - b.value_at(r)).abs() <= tol)
    }

    #[test]
    fn eigenfunction_of_operator() {
        for r in [pp(2, 1), pp(3, -1), pp(5, 2)] {
            let f = eigen(r);
            let out = apply_operator(&f, 2.0).unwrap().into_exact().unwrap();
            let expected = f.map(|v| num_traits::ToPrimitive::to_f64(v).unwrap() * r.to_f64().powi(2));
            assert!(close(&out, &expected, 1e-12 * r.to_f64().powi(2)), "{r}");
        }
    }

    #[test]
    fn lizorkin_combination_is_exact() {
        // 1_{S_2} − (vol S_2 / vol B_{1/2}) 1_{B_{1/2}}, vol(S_2) = vol(B_{1/2}) = 1
        let f = crate::radial::combine(
            &RadialStep::sphere(pp(2, 1), q(1)),
            &RadialStep::ball(pp(2, -1), q(1)),
            crate::radial::CombineOp::Add,
            Some(&q(-1)),
        );
        assert!(f.integrate() == q(0));
        assert!(apply_operator(&f, 1.5).unwrap().is_exact());
        assert!(!apply_operator(&RadialStep::ball(pp(2, 1), q(1)), 1.5).unwrap().is_exact());
    }

    #[test]
    fn evaluable_path_conserves_mass() {
        let u0 = RadialStep::ball(pp(2, 1), q(1));
        let sym = SymbolSpec::new(2.0, None).unwrap();
        let u = solve_homogeneous(&u0, 0.5, &sym).unwrap();
        assert!(!u.is_exact());
        // ∫ u = û(0) = û₀(0) = ∫ u₀ = Φ(2) = 2
        match &u {
            Solution::Evaluable(e) => assert_eq!(e.spectral_value(&Radius::Zero), 2.0),
            Solution::Exact(_) => unreachable!(),
        }
        // the value at 0 is ∫ û = Σ_s û(s) vol(S_s), positive for this data
        let v = u.eval(&Radius::Zero, 1e-10).unwrap();
        assert!(v.value > 0.0 && v.value < 1.0 + 1e-9, "{v:?}");
        // against heat-kernel convolution: Z_t ∗ 1_{B_2}(0) = P(t, 0, B_2)
        let p = crate::markov::transition_prob_ball(0.5, 2.0, &crate::adele::AdelePoint::zero(), &crate::adele::AdelePoint::zero(), &pp(2, 1), 1e-12).unwrap();
        assert!((v.value - p.value).abs() < 1e-9, "{v:?} {p:?}");
    }

    #[test]
    fn forcing_json_round_trip() {
        let g = ForcingGrid::new(vec![0.0, 0.5], vec![eigen(pp(2, 1)), RadialStep::zero(pp(2, 1))]).unwrap();
        let back = ForcingGrid::<BigRational>::from_json_str(&g.to_json().to_string()).unwrap();
        assert_eq!(back, g);
        assert!(ForcingGrid::<f64>::from_json_str(r#"{"nodes":[]}"#).is_err());
        assert!(ForcingGrid::<f64>::from_json_str(r#"{"nodes":[{"time":1,"step":{"inner_radius":"2^1","support_radius":"2^1","inner_value":1}}]}"#).is_err());
    }

    #[test]
    fn real_grid_csv() {
        let g = RealGrid::sample(-1.0, 0.5, 5, |x| x * x).unwrap();
        assert_eq!(RealGrid::from_csv(&g.to_csv()).unwrap(), g);
        assert!(RealGrid::from_csv("x,value\n0,1\n1,2\n3,4\n").is_err());
        assert!(RealGrid::from_csv("a,b\n0,1\n1,2\n").is_err());
    }

    #[test]
    fn gaussian_convolution() {
        let pi = std::f64::consts::PI;
        let t = 0.5;
        let u = RealGrid::sample(-6.0, 0.02, 601, |x| (-pi * x * x).exp()).unwrap();
        let out = real_heat_convolution(&u, t, 2.0, 1e-6).unwrap();
        let v = 1.0 / (2.0 * pi) + t / (2.0 * pi * pi);
        for i in (0..601).step_by(37) {
            let x = out.x(i);
            let exact = (2.0 * pi * v).powf(-0.5) * (-x * x / (2.0 * v)).exp();
            assert!((out.values[i] - exact).abs() < 1e-8, "{x}: {} {exact}", out.values[i]);
        }
    }
}
