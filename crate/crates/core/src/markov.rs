//! Transition functions of the heat semigroup and simulation of the jump
//! process it generates.
//!
//! The transition density is `p(t, x, y) = Z(x − y, t)`. Since `Z` is radial,
//! an increment is drawn in two stages: its norm from the sphere masses
//! `Z(r) vol(S_r)`, then a uniform point of that sphere.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::adele::{distance, sample_uniform, AdelePoint, Region, SamplerConfig};
use crate::error::{Error, Result};
use crate::heatkernel::{kernel_series, z_finite, KernelParams};
use crate::numeric::{fmt_f64, Certified, Sum};
use crate::primepow::{check_enumerable, pp_closed_range, PrimePower, Radius};

/// Law of `‖X_t − X_0‖` restricted to `[r_min, r_max]`.
#[derive(Clone, Debug)]
pub struct RadiusDistribution {
    pub params: KernelParams,
    /// `(r, Z(r) vol(S_r))`, ascending in `r`.
    pub entries: Vec<(PrimePower, f64)>,
    /// `1 − Σ masses`.
    pub tail_mass: f64,
    /// Certified bound on the true mass outside `[r_min, r_max]`.
    pub tail_bound: f64,
    /// Bound on the total error of the listed masses.
    pub mass_error: f64,
    cumulative: Vec<f64>,
}

impl RadiusDistribution {
    pub fn r_min(&self) -> PrimePower {
        self.entries.first().expect("non-empty").0
    }

    pub fn r_max(&self) -> PrimePower {
        self.entries.last().expect("non-empty").0
    }

    pub fn mass(&self, r: &PrimePower) -> f64 {
        self.entries
            .binary_search_by(|(s, _)| s.cmp(r))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Inverse-CDF draw; `None` when the uniform lands in the tail.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<PrimePower> {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.entries.get(i).map(|e| e.0)
    }
}

/// Masses of all spheres with `r_min ≤ r ≤ r_max`, each within `tol / count`.
///
/// The mass outside is bounded by `1 − e^{−t r_max₊^{−α}}` above (exact Fubini
/// tail) and `Z(0) Φ(r_min₋)` below.
pub fn radius_distribution(
    params: &KernelParams,
    r_min: &PrimePower,
    r_max: &PrimePower,
    tol: f64,
) -> Result<RadiusDistribution> {
    if r_min > r_max {
        return Err(Error::invalid(format!("r_min {r_min} exceeds r_max {r_max}")));
    }
    check_enumerable(r_min)?;
    check_enumerable(r_max)?;
    let (t, alpha) = (params.t, params.alpha);
    let radii = pp_closed_range(r_min, r_max);
    let budget = tol / radii.len() as f64;
    let mut entries = Vec::with_capacity(radii.len());
    let mut mass_error = 0.0;
    let mut total = Sum::new();
    for r in radii {
        let c = kernel_series(Some(r.recip().pred()), t, alpha, r.ln_sphere_volume(), budget)?;
        if c.value < 0.0 {
            return Err(Error::NegativeKernel(c.value));
        }
        total.add(c.value);
        mass_error += c.error_bound;
        entries.push((r, c.value));
    }
    let z0 = z_finite(&Radius::Zero, params, 1e-6)?;
    let below = (z0.value + z0.error_bound) * r_min.pred().ln_phi().exp();
    let above = -(-t * r_max.succ().to_f64().powf(-alpha)).exp_m1();
    let mut cumulative = Vec::with_capacity(entries.len());
    let mut acc = Sum::new();
    for (_, m) in &entries {
        acc.add(*m);
        cumulative.push(acc.value());
    }
    Ok(RadiusDistribution {
        params: *params,
        entries,
        tail_mass: 1.0 - total.value(),
        tail_bound: below + above,
        mass_error,
        cumulative,
    })
}

/// Radii `(r_min, r_max)` outside which the increment mass is at most `mass`
/// (half on each side).
pub fn auto_truncation(params: &KernelParams, mass: f64) -> Result<(PrimePower, PrimePower)> {
    let (t, alpha) = (params.t, params.alpha);
    let mut r_max = PrimePower::new(2, 1).expect("2");
    while -(-t * r_max.succ().to_f64().powf(-alpha)).exp_m1() > mass / 2.0 {
        r_max = r_max.succ();
        if r_max.magnitude() > 1 << 24 {
            return Err(Error::Tolerance {
                what: "increment truncation".into(),
                requested: mass,
                achieved: t * r_max.to_f64().powf(-alpha),
            });
        }
    }
    let z0 = z_finite(&Radius::Zero, params, 1e-6)?;
    let z0 = z0.value + z0.error_bound;
    let mut r_min = PrimePower::new(2, -1).expect("1/2");
    while z0 * r_min.pred().ln_phi().exp() > mass / 2.0 {
        r_min = r_min.pred();
    }
    Ok((r_min, r_max))
}

/// Truncation of the increment law and of sampled points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub r_min: PrimePower,
    pub r_max: PrimePower,
    pub sampler: SamplerConfig,
}

/// Largest total mass the truncation may discard.
pub const MAX_DISCARDED_MASS: f64 = 1e-6;

/// A simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub points: Vec<AdelePoint>,
    /// Real coordinate, when the process lives on `A`.
    pub real: Option<Vec<f64>>,
    /// Increment norms, `radii[i] = ‖points[i+1] − points[i]‖`.
    pub radii: Vec<PrimePower>,
    pub seed: u64,
    /// Radius draws that fell outside the truncation and were redrawn.
    pub tail_resamples: u64,
    /// Increments redrawn because the truncated sum no longer resolved them.
    pub cancellation_resamples: u64,
}

impl PathSample {
    /// `step,time,radius[,real_coord],point` with one row per step; step 0 is
    /// the start, with radius `0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let real = self.real.as_ref();
        out.push_str(if real.is_some() {
            "step,time,radius,real_coord,point\n"
        } else {
            "step,time,radius,point\n"
        });
        for (i, (t, x)) in self.times.iter().zip(&self.points).enumerate() {
            let radius = if i == 0 { "0".to_string() } else { self.radii[i - 1].to_string() };
            write!(out, "{i},{},{radius},", fmt_f64(*t)).expect("write to string");
            if let Some(r) = real {
                write!(out, "{},", fmt_f64(r[i])).expect("write to string");
            }
            writeln!(out, "{x}").expect("write to string");
        }
        out
    }
}

enum RealIncrement {
    None,
    Gaussian(Normal<f64>),
    Cauchy(Cauchy<f64>),
}

fn real_increment(params: &KernelParams, dt: f64) -> Result<RealIncrement> {
    let pi = std::f64::consts::PI;
    match params.beta {
        None => Ok(RealIncrement::None),
        // Z(x, t; 2) is the N(0, t/(2π²)) density.
        Some(b) if b == 2.0 => Ok(RealIncrement::Gaussian(
            Normal::new(0.0, (dt / (2.0 * pi * pi)).sqrt()).map_err(|e| Error::invalid(e.to_string()))?,
        )),
        // Z(x, t; 1) is the Cauchy density with scale t/(2π).
        Some(b) if b == 1.0 => Ok(RealIncrement::Cauchy(
            Cauchy::new(0.0, dt / (2.0 * pi)).map_err(|e| Error::invalid(e.to_string()))?,
        )),
        Some(b) => Err(Error::invalid(format!(
            "sampling the real coordinate needs beta in {{1, 2}}, got {b}"
        ))),
    }
}

/// Cap on consecutive redraws of a single increment.
const MAX_REDRAWS: u32 = 1000;

/// Simulates `n_steps` increments of length `dt` from `start`.
pub fn sample_path<R: Rng + ?Sized>(
    params: &KernelParams,
    start: &AdelePoint,
    start_real: f64,
    n_steps: usize,
    dt: f64,
    trunc: &Truncation,
    seed: u64,
    rng: &mut R,
) -> Result<PathSample> {
    let step_params = params.with_time(dt)?;
    let real_law = real_increment(params, dt)?;
    let mut path = PathSample {
        times: vec![0.0],
        points: vec![start.clone()],
        real: match real_law {
            RealIncrement::None => None,
            _ => Some(vec![start_real]),
        },
        radii: Vec::with_capacity(n_steps),
        seed,
        tail_resamples: 0,
        cancellation_resamples: 0,
    };
    if n_steps == 0 {
        return Ok(path);
    }
    let dist = radius_distribution(&step_params, &trunc.r_min, &trunc.r_max, 1e-10)?;
    if dist.tail_bound > MAX_DISCARDED_MASS {
        return Err(Error::invalid(format!(
            "truncation [{}, {}] discards up to {:e} of the increment mass (limit {MAX_DISCARDED_MASS:e})",
            trunc.r_min, trunc.r_max, dist.tail_bound
        )));
    }
    let mut current = start.clone();
    let mut current_real = start_real;
    for i in 1..=n_steps {
        let mut redraws = 0;
        let (next, r) = loop {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::IndeterminateCancellation { p: 0, position: i as i64 });
            }
            let Some(r) = dist.sample(rng) else {
                path.tail_resamples += 1;
                continue;
            };
            let inc = sample_uniform(&Region::sphere(AdelePoint::zero(), r), &trunc.sampler, rng)?;
            // The stored point must still resolve the increment: truncated
            // addition can drop low-order digits of either summand.
            let next = current.add(&inc).and_then(|x| Ok((distance(&x, &current)?, x)));
            match next {
                Ok((d, x)) if d == Radius::Pp(r) => break (x, r),
                Ok(_) | Err(Error::IndeterminateCancellation { .. }) => path.cancellation_resamples += 1,
                Err(e) => return Err(e),
            }
        };
        current_real += match &real_law {
            RealIncrement::None => 0.0,
            RealIncrement::Gaussian(n) => n.sample(rng),
            RealIncrement::Cauchy(c) => c.sample(rng),
        };
        if let Some(real) = path.real.as_mut() {
            real.push(current_real);
        }
        path.times.push(dt * i as f64);
        path.points.push(next.clone());
        path.radii.push(r);
        current = next;
    }
    Ok(path)
}

/// Path `i` uses ChaCha8 seeded with `master_seed` on stream `i`.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Independent paths on up to `threads` worker threads; the result does not
/// depend on the thread count.
pub fn sample_paths(
    params: &KernelParams,
    n_paths: usize,
    n_steps: usize,
    dt: f64,
    trunc: &Truncation,
    master_seed: u64,
    threads: usize,
) -> Result<Vec<PathSample>> {
    let threads = threads.clamp(1, n_paths.max(1));
    let run = |i: usize| {
        let mut rng = path_rng(master_seed, i as u64);
        sample_path(params, &AdelePoint::zero(), 0.0, n_steps, dt, trunc, master_seed, &mut rng)
    };
    if threads == 1 {
        return (0..n_paths).map(run).collect();
    }
    let mut slots: Vec<Option<Result<PathSample>>> = (0..n_paths).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = n_paths.div_ceil(threads);
        for (c, out) in slots.chunks_mut(chunk).enumerate() {
            let run = &run;
            scope.spawn(move || {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = Some(run(c * chunk + j));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

/// `P(t, x, B_ε(x)ᶜ) = Φ(ε) Σ_{s ≤ (1/ε)₋} vol(S_s) (1 − e^{−t s^α})`.
///
/// Pairing `1_{B_ε}` with `Z_t` on the Fourier side gives
/// `P(t, x, B_ε(x)) = Φ(ε) ∫_{B_{(1/ε)₋}} e^{−t‖ξ‖^α} dξ`, and
/// `Φ(ε) Φ((1/ε)₋) = 1` turns the complement into a sum of positive terms.
pub fn ball_complement_prob(t: f64, alpha: f64, eps: &PrimePower, tol: f64) -> Result<Certified<f64>> {
    KernelParams::finite(t, alpha)?;
    check_enumerable(eps)?;
    let ln_phi_eps = eps.ln_phi();
    let upper = eps.recip().pred();
    let small = |rho: &PrimePower| (ln_phi_eps + rho.ln_phi()).exp() * -(-t * rho.to_f64().powf(alpha)).exp_m1();
    let mut rho = upper;
    let mut steps = 0;
    while small(&rho) > tol / 2.0 {
        rho = rho.pred();
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Tolerance {
                what: "ball complement".into(),
                requested: tol,
                achieved: small(&rho),
            });
        }
    }
    let mut sum = Sum::new();
    if rho < upper {
        for s in pp_closed_range(&rho.succ(), &upper) {
            sum.add((ln_phi_eps + s.ln_sphere_volume()).exp() * -(-t * s.to_f64().powf(alpha)).exp_m1());
        }
    }
    Ok(Certified::new(
        sum.value(),
        small(&rho) + sum.rounding_bound(crate::numeric::TERM_REL_ERR * (1.0 + ln_phi_eps.abs())),
    ))
}

/// `P(t, x, B_ε(center))`.
///
/// Off the ball the kernel is constant on it (ultrametric), so the value is
/// `vol(B_ε) Z(‖x − center‖)`; on the ball it is one minus
/// [`ball_complement_prob`]. At `t = 0` it is `1_B(x)`.
pub fn transition_prob_ball(
    t: f64,
    alpha: f64,
    x: &AdelePoint,
    center: &AdelePoint,
    eps: &PrimePower,
    tol: f64,
) -> Result<Certified<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    let d = distance(x, center)?;
    let inside = d <= Radius::Pp(*eps);
    if t == 0.0 {
        return Ok(Certified::new(if inside { 1.0 } else { 0.0 }, 0.0));
    }
    let params = KernelParams::finite(t, alpha)?;
    if inside {
        let c = ball_complement_prob(t, alpha, eps, tol)?;
        Ok(Certified::new(1.0 - c.value, c.error_bound))
    } else {
        let vol = eps.ln_phi().exp();
        let z = z_finite(&d, &params, tol / vol.max(1.0))?;
        Ok(Certified::new(vol * z.value, vol * z.error_bound))
    }
}

/// Outcome of a χ² goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson's χ² for `observed` counts against cell probabilities `expected`
/// (which should sum to 1).
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::invalid("χ² needs at least two matching cells"));
    }
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = n * p;
            (o as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: law.sf(statistic),
    })
}

/// χ² of observed radii against a [`RadiusDistribution`].
///
/// Radii below `lump_below` share one cell (their sampled norms are only
/// resolved up to the prime cutoff); cells with expected count below 5 are
/// merged with their neighbours, and one cell collects everything else.
pub fn radius_chi_square(radii: &[Radius], dist: &RadiusDistribution, lump_below: &PrimePower) -> Result<ChiSquare> {
    let n = radii.len() as f64;
    // cell boundaries: each cell is a run of consecutive entries
    let mut cells: Vec<(PrimePower, f64)> = Vec::new(); // (largest radius in cell, probability)
    let mut low_mass = 0.0;
    let mut pending = 0.0;
    for &(r, m) in &dist.entries {
        if r < *lump_below {
            low_mass += m;
            continue;
        }
        pending += m;
        if pending * n >= 5.0 {
            cells.push((r, pending));
            pending = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.1 += pending;
    }
    let rest = (1.0 - low_mass - cells.iter().map(|c| c.1).sum::<f64>()).max(0.0);
    let mut observed = vec![0u64; cells.len() + 2];
    for r in radii {
        let idx = match r {
            Radius::Pp(s) if s >= lump_below => match cells.iter().position(|c| *s <= c.0) {
                Some(i) => i + 1,
                None => cells.len() + 1,
            },
            _ => 0,
        };
        observed[idx] += 1;
    }
    let mut expected = vec![low_mass];
    expected.extend(cells.iter().map(|c| c.1));
    expected.push(rest);
    // drop empty-expectation cells (they must be unobserved)
    let mut o = Vec::new();
    let mut e = Vec::new();
    for (obs, exp) in observed.into_iter().zip(expected) {
        if exp * n >= 5.0 {
            o.push(obs);
            e.push(exp);
        } else if let (Some(lo), Some(le)) = (o.last_mut(), e.last_mut()) {
            *lo += obs;
            *le += exp;
        } else {
            o.push(obs);
            e.push(exp);
        }
    }
    chi_square(&o, &e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatkernel::sphere_mass;

    fn pp(p: u64, k: i32) -> PrimePower {
        PrimePower::new(p, k).unwrap()
    }

    #[test]
    fn distribution_masses_are_consistent() {
        let p = KernelParams::finite(1.0, 2.0).unwrap();
        let d = radius_distribution(&p, &pp(2, -7), &pp(2, 7), 1e-10).unwrap();
        let total: f64 = d.entries.iter().map(|e| e.1).sum();
        assert!((total + d.tail_mass - 1.0).abs() < 1e-9);
        assert!(d.tail_mass <= d.tail_bound + d.mass_error, "{} {}", d.tail_mass, d.tail_bound);
        assert!(d.entries.iter().all(|e| e.1 >= 0.0));
    }

    #[test]
    fn ball_mass_routes_agree() {
        let (t, alpha) = (0.3, 2.0);
        let p = KernelParams::finite(t, alpha).unwrap();
        for eps in [pp(2, -1), pp(3, -1), pp(2, 1), pp(5, 1)] {
            let ft = ball_complement_prob(t, alpha, &eps, 1e-12).unwrap();
            let spheres = sphere_mass(Some(eps), &p, 1e-10).unwrap();
            assert!((ft.value - spheres.value).abs() < 2e-10, "{eps}: {ft:?} {spheres:?}");
        }
    }

    #[test]
    fn zero_time_is_indicator() {
        let x: AdelePoint = "2:-1:=1".parse().unwrap();
        let o = AdelePoint::zero();
        assert_eq!(transition_prob_ball(0.0, 2.0, &x, &o, &pp(2, 1), 1e-9).unwrap().value, 1.0);
        assert_eq!(transition_prob_ball(0.0, 2.0, &x, &o, &pp(2, -1), 1e-9).unwrap().value, 0.0);
    }

    #[test]
    fn empty_path_and_determinism() {
        let p = KernelParams::new(0.1, 2.0, Some(2.0)).unwrap();
        let (r_min, r_max) = auto_truncation(&p, 1e-7).unwrap();
        let trunc = Truncation {
            r_min,
            r_max,
            sampler: SamplerConfig { depth: 8, prime_cutoff: 13 },
        };
        let mut rng = path_rng(1, 0);
        let empty = sample_path(&p, &AdelePoint::zero(), 0.0, 0, 0.1, &trunc, 1, &mut rng).unwrap();
        assert_eq!(empty.points, vec![AdelePoint::zero()]);
        let a = sample_paths(&p, 3, 50, 0.1, &trunc, 9, 1).unwrap();
        let b = sample_paths(&p, 3, 50, 0.1, &trunc, 9, 3).unwrap();
        assert_eq!(a, b);
        for path in &a {
            for (i, r) in path.radii.iter().enumerate() {
                let d = distance(&path.points[i + 1], &path.points[i]).unwrap();
                assert_eq!(d, Radius::Pp(*r));
            }
        }
        assert!(a[0].to_csv().starts_with("step,time,radius,real_coord,point\n0,0.0,0,0.0,0\n"));
    }

    #[test]
    fn chi_square_sanity() {
        let c = chi_square(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-12);
        let c = chi_square(&[90, 10], &[0.5, 0.5]).unwrap();
        assert!(c.p_value < 1e-10);
    }
}
