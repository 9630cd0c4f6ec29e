//! Heat kernels on `A_f`, on `ℝ` and on `A = ℝ × A_f`.
//!
//! On `A_f` the kernel is the Fourier transform of `e^{−t‖ξ‖^α}`:
//!
//! ```text
//! Z(x, t) = Σ_{q < 1/‖x‖} Φ(q) (e^{−t q^α} − e^{−t q₊^α}),
//! ```
//!
//! a series of non-negative terms. It is truncated with two certified bounds:
//! below a radius `ρ` the terms telescope to at most `Φ(ρ)(1 − e^{−t ρ₊^α})`,
//! and above an integer `P` the estimate `ln Φ(n) = ψ(n) ≤ 1.04 n` (Rosser and
//! Schoenfeld) dominates the tail by a concave exponential sum.
//!
//! All terms are formed in the log domain, so a sphere volume `vol(S_r)` can be
//! folded into the series (`ln_scale`) without overflow.

use num_traits::ToPrimitive;
use statrs::function::gamma::{gamma, gamma_ur};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{Certified, Sum};
use crate::primepow::{check_enumerable, pp_closed_range, PrimePower, Radius};
use crate::quad;
use crate::radial::PSI_SLOPE;

/// Parameters of the heat kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    /// Time, `t > 0`.
    pub t: f64,
    /// Exponent on `A_f`, `α > 1`.
    pub alpha: f64,
    /// Exponent on `ℝ`, `β ∈ (0, 2]`.
    pub beta: Option<f64>,
}

impl KernelParams {
    pub fn new(t: f64, alpha: f64, beta: Option<f64>) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid(format!("time must be positive, got {t}")));
        }
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::invalid(format!("alpha must exceed 1, got {alpha}")));
        }
        if let Some(b) = beta {
            if !(b > 0.0 && b <= 2.0) {
                return Err(Error::invalid(format!("beta must lie in (0, 2], got {b}")));
            }
        }
        Ok(KernelParams { t, alpha, beta })
    }

    pub fn finite(t: f64, alpha: f64) -> Result<Self> {
        KernelParams::new(t, alpha, None)
    }

    pub fn with_time(&self, t: f64) -> Result<Self> {
        KernelParams::new(t, self.alpha, self.beta)
    }

    fn beta(&self) -> Result<f64> {
        self.beta
            .ok_or_else(|| Error::invalid("the real kernel needs beta"))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// `ln` of an upper bound for `Σ_{n ≥ P} e^{ψ(n) − t n^α}` over integers.
fn ln_large_tail(p: &PrimePower, t: f64, alpha: f64) -> f64 {
    if !p.is_large() {
        return f64::INFINITY;
    }
    let n = p.to_f64();
    let h = PSI_SLOPE * n - t * n.powf(alpha);
    let dh = PSI_SLOPE - t * alpha * n.powf(alpha - 1.0);
    if dh >= 0.0 {
        return f64::INFINITY;
    }
    h + (1.0 + 1.0 / -dh).ln()
}

/// `ln` of the telescoped bound `Φ(ρ)(1 − e^{−t ρ₊^α})` on `Σ_{q ≤ ρ}`.
fn ln_small_tail(rho: &PrimePower, t: f64, alpha: f64) -> f64 {
    rho.ln_phi() + (-(-t * rho.succ().to_f64().powf(alpha)).exp_m1()).ln()
}

const MAX_STEPS: usize = 2_000_000;

/// `e^{ln_scale} · Σ_{q ≤ upper} Φ(q)(e^{−t q^α} − e^{−t q₊^α})` with absolute
/// error at most `budget` (all prime powers when `upper` is `None`).
pub(crate) fn kernel_series(
    upper: Option<PrimePower>,
    t: f64,
    alpha: f64,
    ln_scale: f64,
    budget: f64,
) -> Result<Certified<f64>> {
    let ln_budget = (budget / 2.0).ln();
    let tolerance = |what: &str, achieved: f64| Error::Tolerance {
        what: format!("heat kernel series ({what})"),
        requested: budget,
        achieved,
    };
    // Small-radius cut: the largest ρ ≤ min(1/2, upper) whose telescoped tail fits.
    let half = PrimePower::new(2, -1).expect("1/2");
    let mut rho = match upper {
        Some(u) if u < half => u,
        _ => half,
    };
    let mut steps = 0;
    while ln_scale + ln_small_tail(&rho, t, alpha) > ln_budget {
        rho = rho.pred();
        steps += 1;
        if steps > MAX_STEPS {
            return Err(tolerance("small radii", (ln_scale + ln_small_tail(&rho, t, alpha)).exp()));
        }
    }
    let small = (ln_scale + ln_small_tail(&rho, t, alpha)).exp();
    // Large-radius cut, when the series reaches past 2.
    let (end, large) = match upper {
        Some(u) if !u.is_large() => (u, 0.0),
        _ => {
            let mut p = PrimePower::new(2, 1).expect("2");
            let mut steps = 0;
            while ln_scale + ln_large_tail(&p, t, alpha) > ln_budget {
                if upper.is_some_and(|u| p > u) {
                    break;
                }
                p = p.succ();
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(tolerance("large radii", f64::INFINITY));
                }
            }
            match upper {
                Some(u) if u < p => (u, 0.0),
                _ => (p.pred(), (ln_scale + ln_large_tail(&p, t, alpha)).exp()),
            }
        }
    };
    let mut sum = Sum::new();
    let mut exponent_err = 0.0;
    if rho < end {
        for q in pp_closed_range(&rho.succ(), &end) {
            let qa = q.to_f64().powf(alpha);
            let a = ln_scale + q.ln_phi() - t * qa;
            let gap = t * (q.succ().to_f64().powf(alpha) - qa);
            let term = a.exp() * -(-gap).exp_m1();
            exponent_err += term * (ln_scale.abs() + q.ln_phi().abs() + t * qa + gap + 8.0) * 4.0 * f64::EPSILON;
            sum.add(term);
        }
    }
    let value = sum.value();
    if !value.is_finite() {
        return Err(tolerance("overflow", f64::INFINITY));
    }
    Ok(Certified::new(
        value,
        small + large + exponent_err + sum.rounding_bound(crate::numeric::TERM_REL_ERR),
    ))
}

fn clamp_nonnegative(mut c: Certified<f64>) -> Result<Certified<f64>> {
    if c.value < 0.0 {
        if c.value >= -10.0 * f64::EPSILON {
            c.value = 0.0;
        } else {
            return Err(Error::NegativeKernel(c.value));
        }
    }
    Ok(c)
}

/// `Z(x, t; α)` on `A_f` for `‖x‖ = radius`, within `tol`.
pub fn z_finite(radius: &Radius, params: &KernelParams, tol: f64) -> Result<Certified<f64>> {
    check_tol(tol)?;
    if let Some(r) = radius.prime_power() {
        check_enumerable(&r)?;
    }
    let upper = radius.prime_power().map(|r| r.recip().pred());
    clamp_nonnegative(kernel_series(upper, params.t, params.alpha, 0.0, tol)?)
}

/// `Σ_{r > lo} Z(r) vol(S_r)` (all spheres when `lo` is `None`), within `tol`.
///
/// Exchanging the order of summation gives the exact large-radius tail
/// `Σ_{r > P} Z(r) vol(S_r) = 1 − e^{−t P₊^{−α}} − Φ(P) Z(P₊) ≤ 1 − e^{−t P₊^{−α}}`,
/// and near the origin `Σ_{r ≤ ρ} Z(r) vol(S_r) ≤ Z(0) Φ(ρ)`.
pub fn sphere_mass(lo: Option<PrimePower>, params: &KernelParams, tol: f64) -> Result<Certified<f64>> {
    check_tol(tol)?;
    if let Some(r) = &lo {
        check_enumerable(r)?;
    }
    let (t, alpha) = (params.t, params.alpha);
    let large_tail = |p: &PrimePower| -(-t * p.succ().to_f64().powf(-alpha)).exp_m1();
    let mut p = PrimePower::new(2, 1).expect("2");
    let mut steps = 0;
    while large_tail(&p) > tol / 4.0 {
        p = p.succ();
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Tolerance {
                what: "sphere sum of the heat kernel".into(),
                requested: tol,
                achieved: large_tail(&p),
            });
        }
    }
    if let Some(l) = lo.filter(|l| *l >= p) {
        return Ok(Certified::new(0.0, large_tail(&l)));
    }
    let z0 = z_finite(&Radius::Zero, params, 1e-6)?;
    let z0 = z0.value + z0.error_bound;
    let mut rho = PrimePower::new(2, -1).expect("1/2");
    while z0 * rho.ln_phi().exp() > tol / 4.0 {
        rho = rho.pred();
    }
    let (start, small) = match lo {
        Some(l) if l >= rho => (l, 0.0),
        _ => (rho, z0 * rho.ln_phi().exp()),
    };
    let radii = pp_closed_range(&start.succ(), &p);
    let budget = tol / 4.0 / radii.len().max(1) as f64;
    let mut sum = Sum::new();
    let mut err = small + large_tail(&p);
    for r in &radii {
        let c = kernel_series(Some(r.recip().pred()), t, alpha, r.ln_sphere_volume(), budget)?;
        sum.add(c.value);
        err += c.error_bound;
    }
    Ok(Certified::new(sum.value(), err + sum.rounding_bound(0.0)))
}

/// `∫_{A_f} Z(x, t) dx`, which is 1.
pub fn normalization(params: &KernelParams, tol: f64) -> Result<Certified<f64>> {
    sphere_mass(None, params, tol)
}

/// `I(t) = ∫ ‖y‖^β e^{−t‖y‖^α} dy` as a certified sphere sum.
pub fn moment_integral(params: &KernelParams, beta_weight: f64, tol: f64) -> Result<Certified<f64>> {
    if !(beta_weight.is_finite() && beta_weight >= 0.0) {
        return Err(Error::invalid(format!("weight exponent must be ≥ 0, got {beta_weight}")));
    }
    let f = crate::radial::RadialAnalytic::weighted(params.t, params.alpha, beta_weight);
    let c = crate::radial::integrate_radial(&f, tol)?;
    Ok(Certified::new(c.value.re, c.error_bound))
}

/// Threshold from which `Π(x) ≤ 1.31 x / ln x` for the prime-power counting
/// function: `π(x) < 1.25506 x / ln x` (Rosser and Schoenfeld) and the proper
/// powers add less than `0.05 x / ln x` once `x ≥ 10⁶`.
const PI_BOUND_FROM: u64 = 1_000_000;
const PI_BOUND_SLOPE: f64 = 1.31;

/// `C(ε) t` with `C(ε) = 2 Σ_{q > ε} q^{−α}` over prime powers `q`; the value
/// is the partial sum up to `2·10⁶`, the error bound the remainder.
///
/// By partial summation the remainder over `n > N` is at most
/// `α ∫_N^∞ Π(x) x^{−α−1} dx ≤ 1.31 α N^{1−α} / ((α − 1) ln N)`.
pub fn tail_mass_bound(epsilon: &PrimePower, params: &KernelParams) -> Result<Certified<f64>> {
    const N: u64 = 2 * PI_BOUND_FROM;
    check_enumerable(epsilon)?;
    let alpha = params.alpha;
    // largest prime power ≤ N
    let cap = crate::primepow::prev_pp(&num_rational::BigRational::from_integer((N + 1).into()))?;
    let (qs, n) = if *epsilon < cap {
        (pp_closed_range(&epsilon.succ(), &cap), N)
    } else {
        (Vec::new(), epsilon.magnitude())
    };
    let mut sum = Sum::new();
    // ascending q: add the small terms first
    for q in qs.iter().rev() {
        sum.add((-alpha * q.ln()).exp());
    }
    let n = n.to_f64().expect("fits");
    let remainder = PI_BOUND_SLOPE * alpha * n.powf(1.0 - alpha) / ((alpha - 1.0) * n.ln());
    let scale = 2.0 * params.t;
    Ok(Certified::new(
        scale * sum.value(),
        scale * (remainder + sum.rounding_bound(crate::numeric::TERM_REL_ERR)),
    ))
}

/// Panels allowed for the oscillatory real-kernel quadrature.
const REAL_MAX_PANELS: usize = 200_000;

/// Default accuracy of the real kernel for `β ∉ {1, 2}`.
pub const REAL_QUADRATURE_TOL: f64 = 1e-10;

/// `Z(x, t; β) = ∫_ℝ e^{2πixξ} e^{−t|ξ|^β} dξ`.
///
/// Closed forms for `β = 2` (Gaussian) and `β = 1` (Cauchy); otherwise the
/// cosine form `2 ∫_0^∞ cos(2πxξ) e^{−tξ^β} dξ` is integrated panel by panel
/// between zeros of the cosine until the envelope tail
/// `∫_Ξ^∞ e^{−tξ^β} dξ = Γ(1/β) Q(1/β, tΞ^β) / (β t^{1/β})` is below tolerance.
pub fn z_real(x: f64, params: &KernelParams) -> Result<Certified<f64>> {
    z_real_tol(x, params, REAL_QUADRATURE_TOL)
}

pub fn z_real_tol(x: f64, params: &KernelParams, tol: f64) -> Result<Certified<f64>> {
    check_tol(tol)?;
    let beta = params.beta()?;
    let t = params.t;
    let pi = std::f64::consts::PI;
    if !x.is_finite() {
        return Err(Error::invalid(format!("x must be finite, got {x}")));
    }
    if beta == 2.0 {
        let v = (pi / t).sqrt() * (-pi * pi * x * x / t).exp();
        return Ok(Certified::new(v, 4.0 * f64::EPSILON * v));
    }
    if beta == 1.0 {
        let v = 2.0 * t / (t * t + 4.0 * pi * pi * x * x);
        return Ok(Certified::new(v, 4.0 * f64::EPSILON * v));
    }
    let x = x.abs();
    let inv_b = 1.0 / beta;
    if x == 0.0 {
        let v = 2.0 * gamma(1.0 + inv_b) * t.powf(-inv_b);
        return Ok(Certified::new(v, 64.0 * f64::EPSILON * v));
    }
    if 2.0 * pi * x * t.powf(-inv_b) >= CONTOUR_THRESHOLD {
        return z_real_contour(x, t, beta, tol);
    }
    let envelope_tail =
        |xi: f64| 2.0 * gamma(inv_b) * gamma_ur(inv_b, t * xi.powf(beta)) / (beta * t.powf(inv_b));
    let integrand = |xi: f64| 2.0 * (2.0 * pi * x * xi).cos() * (-t * xi.powf(beta)).exp();
    let half_period = 1.0 / (2.0 * x);
    // The first panel ends at the first zero of the cosine.
    let mut a = 0.0;
    let mut b = half_period / 2.0;
    let mut sum = Sum::new();
    let mut err = 0.0;
    let mut panels = 0;
    loop {
        let c = quad::integrate(integrand, a, b, tol / 8.0, 4096)?;
        sum.add(c.value);
        err += c.error_bound;
        let tail = envelope_tail(b);
        if tail <= tol / 2.0 {
            err += tail;
            break;
        }
        panels += 1;
        if panels > REAL_MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "real kernel at x = {x}, t = {t}, beta = {beta}: envelope tail {tail:e} after {REAL_MAX_PANELS} panels"
            )));
        }
        a = b;
        b += half_period;
    }
    Ok(Certified::new(sum.value(), err + sum.rounding_bound(0.0)))
}

/// Above this value of `2π|x| t^{−1/β}` the real kernel is evaluated on a
/// rotated contour.
const CONTOUR_THRESHOLD: f64 = 4.0;

/// `Z(x) = 2 Re ∫_0^∞ e^{iyξ − tξ^β} dξ`, `y = 2πx > 0`, on the ray
/// `ξ = s e^{iθ}` with `θ = min(π/2, π/(2β))`.
///
/// In the sector `0 ≤ arg ξ ≤ θ` we have `cos(β arg ξ) ≥ 0`, so the integrand
/// is bounded by `e^{−y|ξ| sin arg ξ}` and the arc at infinity vanishes. On the
/// ray the modulus is at most `e^{−ys sin θ}`, which gives the tail bound.
fn z_real_contour(x: f64, t: f64, beta: f64, tol: f64) -> Result<Certified<f64>> {
    let pi = std::f64::consts::PI;
    let y = 2.0 * pi * x;
    let theta = (pi / (2.0 * beta)).min(pi / 2.0);
    let rot = Complex64::from_polar(1.0, theta);
    let rot_b = Complex64::from_polar(1.0, beta * theta);
    let decay = y * theta.sin();
    let integrand = |s: f64| {
        let w = Complex64::new(0.0, y * s) * rot - t * s.powf(beta) * rot_b;
        2.0 * (rot * w.exp()).re
    };
    // 2 ∫_S^∞ e^{−ys sin θ} ds ≤ tol/2
    let end = (4.0 / (tol * decay)).ln().max(1.0) / decay;
    let c = quad::integrate(integrand, 0.0, end, tol / 2.0, 4096)?;
    let tail = 2.0 * (-decay * end).exp() / decay;
    Ok(Certified::new(c.value, c.error_bound + tail))
}

/// `Z(x, t; α, β) = Z(x_∞, t; β) · Z(x_f, t; α)`.
pub fn z_adelic(x_real: f64, x_fin_radius: &Radius, params: &KernelParams, tol: f64) -> Result<Certified<f64>> {
    let a = z_real_tol(x_real, params, tol.min(REAL_QUADRATURE_TOL))?;
    let b = z_finite(x_fin_radius, params, tol)?;
    Ok(Certified::new(
        a.value * b.value,
        a.value.abs() * b.error_bound + b.value.abs() * a.error_bound + a.error_bound * b.error_bound,
    ))
}

/// `∫_ℝ Z(x, t; β) dx` by quadrature; equals 1.
pub fn real_normalization(params: &KernelParams, tol: f64) -> Result<Certified<f64>> {
    let scale = params.t.powf(1.0 / params.beta()?);
    // x = s tan θ has dx = s (1 + (x/s)²) dθ, so a pointwise error of
    // inner / (1 + (x/s)²) adds at most π s · inner to the integral.
    let inner = tol / (4.0 * std::f64::consts::PI * scale);
    let failure = std::cell::RefCell::new(None);
    let r = quad::integrate_real_line(
        |x| match z_real_tol(x, params, inner / (1.0 + (x / scale).powi(2))) {
            Ok(c) => c.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        scale,
        tol / 2.0,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    r.map(|c| Certified::new(c.value, c.error_bound + std::f64::consts::PI * scale * inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{ft_radial_eval, RadialAnalytic};

    fn pp(p: u64, k: i32) -> PrimePower {
        PrimePower::new(p, k).unwrap()
    }

    fn params(t: f64, alpha: f64) -> KernelParams {
        KernelParams::finite(t, alpha).unwrap()
    }

    #[test]
    fn validation() {
        assert!(KernelParams::finite(0.0, 2.0).is_err());
        assert!(KernelParams::finite(1.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, 2.0, Some(2.5)).is_err());
        assert!(KernelParams::new(1.0, 2.0, Some(0.0)).is_err());
        assert!(z_finite(&Radius::Zero, &params(1.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn agrees_with_generic_transform() {
        let p = params(0.7, 2.5);
        let heat = RadialAnalytic::heat(p.t, p.alpha);
        for r in [Radius::Zero, Radius::Pp(pp(2, 1)), Radius::Pp(pp(3, -1)), Radius::Pp(pp(7, 1)), Radius::Pp(pp(5, -2))] {
            let a = z_finite(&r, &p, 1e-12).unwrap();
            let b = ft_radial_eval(&heat, &r, 1e-12).unwrap();
            assert!((a.value - b.value.re).abs() < 3e-12, "{r}: {a:?} {b:?}");
        }
    }

    #[test]
    fn estimate_at_two() {
        for t in [0.1, 1.0, 3.0] {
            let p = params(t, 2.0);
            let z = z_finite(&Radius::Pp(pp(2, 1)), &p, 1e-12).unwrap();
            // 2t·2^{-α}·Φ((1/2)₋), Φ(1/3) = 1/2
            assert!(z.value <= 2.0 * t * 0.25 * 0.5, "{t}: {z:?}");
        }
    }

    #[test]
    fn normalization_small_grid() {
        for (t, a) in [(1.0, 2.0), (5.0, 3.0)] {
            let n = normalization(&params(t, a), 1e-8).unwrap();
            assert!((n.value - 1.0).abs() <= 1e-8, "{t} {a}: {n:?}");
            assert!(n.error_bound <= 1e-8);
        }
    }

    #[test]
    fn moment_zero_weight_is_kernel_at_origin() {
        let p = params(1.0, 2.0);
        let m = moment_integral(&p, 0.0, 1e-10).unwrap();
        let z = z_finite(&Radius::Zero, &p, 1e-10).unwrap();
        assert!((m.value - z.value).abs() <= 2e-10);
    }

    #[test]
    fn tail_bound_is_linear_in_t() {
        let e = pp(2, 1);
        let a = tail_mass_bound(&e, &params(1.0, 2.0)).unwrap();
        let b = tail_mass_bound(&e, &params(2.0, 2.0)).unwrap();
        assert!((b.value - 2.0 * a.value).abs() < 1e-15);
    }

    #[test]
    fn real_kernel_reference_values() {
        let pi = std::f64::consts::PI;
        let p2 = KernelParams::new(1.0, 2.0, Some(2.0)).unwrap();
        assert!((z_real(0.0, &p2).unwrap().value - pi.sqrt()).abs() < 1e-15);
        let p1 = KernelParams::new(1.0, 2.0, Some(1.0)).unwrap();
        assert_eq!(z_real(0.0, &p1).unwrap().value, 2.0);
        // general β against its own closed forms at the endpoints
        for beta in [1.0 + 1e-9, 2.0 - 1e-9] {
            let pb = KernelParams::new(0.8, 2.0, Some(beta)).unwrap();
            let near = KernelParams::new(0.8, 2.0, Some(beta.round())).unwrap();
            for x in [0.0, 0.1, 0.3] {
                let a = z_real(x, &pb).unwrap().value;
                let b = z_real(x, &near).unwrap().value;
                assert!((a - b).abs() < 1e-6, "beta {beta} x {x}: {a} {b}");
            }
        }
    }

    #[test]
    fn contour_matches_real_axis() {
        // both routes where the real-axis panels are still cheap
        for beta in [0.6, 1.5, 1.9] {
            let t = 1.0;
            for x in [0.7, 1.3, 3.0] {
                let contour = z_real_contour(x, t, beta, 1e-12).unwrap();
                let axis = 2.0
                    * quad::integrate(
                        |xi| (2.0 * std::f64::consts::PI * x * xi).cos() * (-t * xi.powf(beta)).exp(),
                        0.0,
                        (40.0f64).powf(1.0 / beta) * 40.0,
                        1e-12,
                        200_000,
                    )
                    .unwrap()
                    .value;
                assert!((contour.value - axis).abs() < 1e-9, "β={beta} x={x}: {contour:?} {axis}");
            }
        }
        // the β = 1 and β = 2 closed forms through the contour
        for (beta, x) in [(1.0, 2.0), (2.0, 0.9), (1.0, 50.0)] {
            let p = KernelParams::new(0.5, 2.0, Some(beta)).unwrap();
            let exact = z_real(x, &p).unwrap().value;
            let c = z_real_contour(x, 0.5, beta, 1e-13).unwrap();
            assert!((c.value - exact).abs() < 1e-11, "β={beta} x={x}: {c:?} {exact}");
        }
    }

    #[test]
    fn real_kernel_general_beta_normalizes() {
        let p = KernelParams::new(1.0, 2.0, Some(1.5)).unwrap();
        let n = real_normalization(&p, 1e-6).unwrap();
        assert!((n.value - 1.0).abs() < 1e-6, "{n:?}");
        assert!((z_real(0.4, &p).unwrap().value - z_real(-0.4, &p).unwrap().value).abs() < 1e-14);
    }
}
