//! Invariant suites with pass/fail reports.
//!
//! Each suite checks one group of properties at fixed tolerances and seeds;
//! the `verify` subcommand of the CLI and the acceptance tests run the same
//! code.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adele::{distance, haar_volume, sample_uniform, AdelePoint, PAdicComponent, Region, SamplerConfig};
use crate::cauchy::{
    apply_adelic_operator, apply_operator, l2_norm_sq, real_operator, solve_homogeneous, solve_nonhomogeneous,
    ForcingGrid, Quadrature, SymbolSpec,
};
use crate::error::{Error, Result};
use crate::heatkernel::{
    normalization, real_normalization, sphere_mass, tail_mass_bound, z_finite, z_real, KernelParams,
};
use crate::markov::{
    auto_truncation, ball_complement_prob, path_rng, radius_chi_square, radius_distribution, sample_paths,
    transition_prob_ball, Truncation,
};
use crate::oracle;
use crate::primepow::{integer_prime_powers, next_pp, pp_closed_range, prev_pp, PrimePower, Radius};
use crate::quad;
use crate::radial::{combine, CombineOp, RadialStep};

/// One checked property.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub id: u8,
    pub suite: &'static str,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.elapsed <= self.budget
    }

    /// One line: `[PASS] 4 heatkernel (12 checks, 3.1 s / 60 s)`.
    pub fn summary(&self) -> String {
        format!(
            "[{}] {} {} ({} checks, {:.2} s / {} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.suite,
            self.checks.len(),
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for c in &self.checks {
            writeln!(f, "  {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Suites in acceptance order; determinism of the CLI is checked by the CLI.
pub const SUITES: [&str; 9] = [
    "primepow",
    "volume",
    "fourier",
    "heatkernel",
    "semigroup",
    "sampler",
    "markov",
    "solvers",
    "adelic",
];

/// Runs a suite by name.
pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let (id, budget, f): (u8, u64, fn() -> Result<Vec<Check>>) = match name {
        "primepow" => (1, 5, order_algebra),
        "volume" => (2, 1, volume_telescoping),
        "fourier" => (3, 10, radial_fourier),
        "heatkernel" => (4, 60, heat_kernel),
        "semigroup" => (5, 120, semigroup_monte_carlo),
        "sampler" => (6, 60, sampler_law),
        "markov" => (7, 30, markov_conditions),
        "solvers" => (8, 60, solvers),
        "adelic" => (9, 60, adelic_factor),
        other => {
            return Err(Error::invalid(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    let suite = SUITES[id as usize - 1];
    let start = Instant::now();
    let checks = f()?;
    Ok(SuiteReport {
        id,
        suite,
        checks,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget),
    })
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn pp(p: u64, k: i32) -> PrimePower {
    PrimePower::new(p, k).expect("valid prime power")
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Counts failures of a property over a family, keeping the first witness.
struct Tally {
    name: &'static str,
    total: usize,
    failures: usize,
    first: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            total: 0,
            failures: 0,
            first: None,
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(witness());
            }
        }
    }

    fn check(self) -> Check {
        let detail = match &self.first {
            None => format!("{} cases", self.total),
            Some(w) => format!("{} of {} cases fail, first: {w}", self.failures, self.total),
        };
        Check::new(self.name, self.failures == 0, detail)
    }
}

fn order_algebra() -> Result<Vec<Check>> {
    let all = integer_prime_powers(2, 10_000);
    let mut reciprocal = Tally::new("Φ(p^-j)·Φ(p^j) = p");
    let mut predecessor = Tally::new("Φ(q₋) = Φ(q)/p on both branches");
    let mut inverse = Tally::new("next/prev are inverse");
    let mut duality = Tally::new("Φ(q)·Φ((1/q)₋) = 1");
    let mut definition = Tally::new("Φ(n) = lcm(1..n)");
    // cross-multiplied comparisons; normalising huge rationals is slow
    let eq = |a: (&BigInt, &BigInt), b: (&BigInt, &BigInt)| a.0 * b.1 == b.0 * a.1;
    for q in &all {
        let inv = q.recip();
        let (phi, phi_inv) = (q.phi(), inv.phi());
        let p = BigInt::from(q.p());
        reciprocal.record(
            phi.numer() * phi_inv.numer() == &p * phi.denom() * phi_inv.denom(),
            || q.to_string(),
        );
        for r in [*q, inv] {
            let rat = r.to_ratio();
            let prev = prev_pp(&rat)?;
            let (phi_r, phi_prev) = (r.phi(), prev.phi());
            let pr = BigInt::from(r.p());
            predecessor.record(
                prev == r.pred()
                    && eq(
                        (&(phi_prev.numer() * &pr), phi_prev.denom()),
                        (phi_r.numer(), phi_r.denom()),
                    ),
                || r.to_string(),
            );
            let next = next_pp(&rat)?;
            inverse.record(
                next == r.succ()
                    && next_pp(&prev.to_ratio())? == r
                    && prev_pp(&next.to_ratio())? == r
                    && r.pred().succ() == r
                    && r.succ().pred() == r,
                || r.to_string(),
            );
            let dual = r.recip().pred().phi();
            duality.record(
                phi_r.numer() * dual.numer() == phi_r.denom() * dual.denom(),
                || r.to_string(),
            );
        }
    }
    // Φ(n) against a running lcm
    let mut lcm = BigInt::one();
    let mut next = all.iter().peekable();
    for m in 1..=10_000u64 {
        // lcm(L, m) = L·m / gcd(L mod m, m), with the gcd in machine words
        let rem = (&lcm % m).to_u64().expect("below m");
        lcm *= m / rem.gcd(&m);
        if let Some(q) = next.next_if(|q| q.magnitude() == m) {
            let phi = q.phi();
            definition.record(phi.denom().is_one() && *phi.numer() == lcm, || q.to_string());
        }
    }
    let mut lcm_small = Tally::new("Φ agrees with the lcm oracle below 60");
    for n in 2..60u64 {
        for x in [ratio(n as i64, 1), ratio(1, n as i64), ratio(2 * n as i64 + 1, 2)] {
            lcm_small.record(
                crate::primepow::phi(&x)?.into_ratio() == oracle::phi_by_definition(&x),
                || x.to_string(),
            );
        }
    }
    Ok(vec![
        reciprocal.check(),
        predecessor.check(),
        inverse.check(),
        duality.check(),
        definition.check(),
        lcm_small.check(),
    ])
}

fn volume_telescoping() -> Result<Vec<Check>> {
    let base = pp(2, -10); // 1/1024 lies below every tested radius
    let mut radii: Vec<PrimePower> = [2u64, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27]
        .iter()
        .map(|&n| integer_prime_powers(n, n)[0])
        .collect();
    let large: Vec<PrimePower> = radii.clone();
    radii.extend(large.iter().map(PrimePower::recip));
    let mut tally = Tally::new("vol(B_base) + Σ vol(S_s) = Φ(r)");
    let mut spheres = Tally::new("vol(S_s) = Φ(s) − Φ(s₋) from the oracle");
    for r in &radii {
        let mut total = haar_volume(&Region::ball(AdelePoint::zero(), base))?.into_ratio();
        for s in pp_closed_range(&base.succ(), r) {
            total += haar_volume(&Region::sphere(AdelePoint::zero(), s))?.into_ratio();
        }
        tally.record(total == r.phi().into_ratio(), || r.to_string());
        let v = haar_volume(&Region::sphere(AdelePoint::zero(), *r))?.into_ratio();
        let x = r.to_ratio();
        let below = oracle::phi_by_definition(&prev_pp(&x)?.to_ratio());
        spheres.record(v == oracle::phi_by_definition(&x) - below, || r.to_string());
    }
    Ok(vec![
        Check::new("radii span both branches", radii.len() == 30, format!("{} radii", radii.len())),
        tally.check(),
        spheres.check(),
    ])
}

/// A random real step with small rational values.
pub fn random_step(rng: &mut impl Rng) -> RadialStep<BigRational> {
    let grid = pp_closed_range(&pp(19, -1), &pp(19, 1));
    let i = rng.random_range(0..grid.len());
    let j = rng.random_range(i..grid.len());
    let (r0, big_r) = (grid[i], grid[j]);
    let mut value = || -> BigRational {
        if rng.random_bool(0.15) {
            BigRational::zero()
        } else {
            ratio(rng.random_range(-9..=9), rng.random_range(1..=7))
        }
    };
    let inner = value();
    let values = pp_closed_range(&r0.succ(), &big_r)
        .into_iter()
        .map(|s| (s, value()))
        .collect();
    RadialStep::new(r0, big_r, inner, values).expect("valid random step")
}

fn radial_fourier() -> Result<Vec<Check>> {
    let one = BigRational::one();
    let radii: Vec<PrimePower> = [2u64, 3, 4, 5, 7, 8, 9, 11, 13, 16]
        .iter()
        .flat_map(|&n| {
            let q = integer_prime_powers(n, n)[0];
            [q, q.recip()]
        })
        .collect();
    let mut balls = Tally::new("F 1_{B_r} = Φ(r) 1_{B_(1/r)₋}");
    let mut spheres = Tally::new("F 1_{S_r} = Φ(r) 1_{B_(1/r)₋} − Φ(r₋) 1_{B_(1/r₋)₋}");
    for r in &radii {
        let phi = r.phi().into_ratio();
        let ball = RadialStep::ball(r.recip().pred(), phi.clone());
        balls.record(RadialStep::ball(*r, one.clone()).fourier() == ball, || r.to_string());
        let lower = r.pred();
        let inner = RadialStep::ball(lower.recip().pred(), lower.phi().into_ratio());
        let expected = combine(&ball, &inner, CombineOp::Add, Some(&-one.clone()));
        spheres.record(RadialStep::sphere(*r, one.clone()).fourier() == expected, || r.to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut double = Tally::new("F F f = f on random steps");
    let mut parseval = Tally::new("∫|f|² = ∫|Ff|² on random steps");
    let mut support = Tally::new("envelope (r₀, R) ↦ ((1/R)₋, (1/r₀)₋)");
    for _ in 0..50 {
        let f = random_step(&mut rng);
        let g = f.fourier();
        double.record(g.fourier() == f, || format!("{f:?}"));
        parseval.record(f.modulus_sq().integrate() == g.modulus_sq().integrate(), || format!("{f:?}"));
        support.record(
            g.inner_radius() >= f.support_radius().recip().pred()
                && g.support_radius() <= f.inner_radius().recip().pred(),
            || format!("{f:?}"),
        );
    }
    Ok(vec![
        Check::new("20 radii", radii.len() == 20, format!("{} radii", radii.len())),
        balls.check(),
        spheres.check(),
        double.check(),
        parseval.check(),
        support.check(),
    ])
}

/// The `(t, α)` grid of the normalization check.
pub const NORMALIZATION_TIMES: [f64; 5] = [0.05, 0.2, 1.0, 3.0, 10.0];
pub const NORMALIZATION_ALPHAS: [f64; 3] = [1.5, 2.0, 3.0];

fn heat_kernel() -> Result<Vec<Check>> {
    let mut norm = Tally::new("∫Z = 1 ± 1e-6 on the 5×3 grid");
    let mut nonneg = Tally::new("Z ≥ 0 at evaluated radii");
    let mut estimate = Tally::new("Z(x) ≤ 2t‖x‖^-α Φ((1/‖x‖)₋) on 1/8..8");
    let radii = pp_closed_range(&pp(2, -3), &pp(2, 3));
    for &t in &NORMALIZATION_TIMES {
        for &alpha in &NORMALIZATION_ALPHAS {
            let params = KernelParams::finite(t, alpha)?;
            let n = normalization(&params, 1e-7)?;
            norm.record((n.value - 1.0).abs() + n.error_bound <= 1e-6, || {
                format!("t={t} α={alpha}: {n}")
            });
            let mut eval_radii = vec![Radius::Zero];
            eval_radii.extend(pp_closed_range(&pp(2, -5), &pp(2, 5)).into_iter().map(Radius::Pp));
            for r in &eval_radii {
                let z = z_finite(r, &params, 1e-10)?;
                nonneg.record(z.value >= 0.0, || format!("t={t} α={alpha} r={r}: {z}"));
            }
            for r in &radii {
                let z = z_finite(&Radius::Pp(*r), &params, 1e-12)?;
                let bound = 2.0 * t * r.to_f64().powf(-alpha) * r.recip().pred().ln_phi().exp();
                estimate.record(z.value - z.error_bound <= bound, || {
                    format!("t={t} α={alpha} r={r}: {z} > {bound:e}")
                });
            }
        }
    }
    // (radius, t, α) against the sphere-indicator oracle
    let spots: [(Option<BigRational>, f64, f64); 10] = [
        (None, 1.0, 2.0),
        (Some(ratio(2, 1)), 1.0, 2.0),
        (Some(ratio(1, 2)), 0.5, 2.0),
        (Some(ratio(1, 3)), 1.0, 2.0),
        (Some(ratio(3, 1)), 1.0, 1.5),
        (Some(ratio(4, 1)), 2.0, 3.0),
        (Some(ratio(5, 1)), 1.0, 2.0),
        (Some(ratio(7, 1)), 0.3, 2.0),
        (Some(ratio(9, 1)), 1.0, 2.5),
        (None, 2.0, 3.0),
    ];
    let mut spot = Tally::new("agrees with the oracle sum within 1e-8 at 10 points");
    for (r, t, alpha) in &spots {
        let params = KernelParams::finite(*t, *alpha)?;
        let radius = match r {
            None => Radius::Zero,
            Some(x) => Radius::Pp(next_pp(&(x - ratio(1, 1_000_000)))?),
        };
        let z = z_finite(&radius, &params, 1e-11)?;
        let o = oracle::heat_kernel(r.as_ref(), *t, *alpha, 200, 400);
        spot.record((z.value - o).abs() <= 1e-8, || format!("r={radius} t={t} α={alpha}: {} vs {o}", z.value));
    }
    let regression = z_finite(&Radius::Pp(pp(2, 1)), &KernelParams::finite(1.0, 2.0)?, 1e-13)?;
    Ok(vec![
        norm.check(),
        nonneg.check(),
        estimate.check(),
        spot.check(),
        Check::new(
            "Z(2; t=1, α=2) regression value",
            (regression.value - 6.75631379367531e-2).abs() < 1e-13,
            format!("{regression}"),
        ),
    ])
}

/// Sampler resolution used by the Monte Carlo suites.
pub const MC_SAMPLER: SamplerConfig = SamplerConfig {
    depth: 24,
    prime_cutoff: 13,
};

/// Radii at or below `1/q`, `q` the first prime above the cutoff, are pooled.
fn lump_below(config: &SamplerConfig) -> PrimePower {
    let q = (config.prime_cutoff + 1..).find(|&n| crate::primepow::is_prime(n)).expect("primes are infinite");
    PrimePower::new(q, -1).expect("prime").succ()
}

fn semigroup_monte_carlo() -> Result<Vec<Check>> {
    let alpha = 2.0;
    let n = 100_000;
    let mut checks = Vec::new();
    for (i, (t, s)) in [(0.5, 0.5), (0.2, 0.8)].into_iter().enumerate() {
        let laws = [t, s, t + s]
            .iter()
            .map(|&u| {
                let p = KernelParams::finite(u, alpha)?;
                let (lo, hi) = auto_truncation(&p, 1e-9)?;
                radius_distribution(&p, &lo, &hi, 1e-12)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rng = path_rng(2024, i as u64);
        let mut radii = Vec::with_capacity(n);
        let mut redraws = 0u64;
        while radii.len() < n {
            let (Some(a), Some(b)) = (laws[0].sample(&mut rng), laws[1].sample(&mut rng)) else {
                redraws += 1;
                continue;
            };
            let x = sample_uniform(&Region::sphere(AdelePoint::zero(), a), &MC_SAMPLER, &mut rng)?;
            let y = sample_uniform(&Region::sphere(AdelePoint::zero(), b), &MC_SAMPLER, &mut rng)?;
            match x.add(&y) {
                Ok(z) => radii.push(z.norm()),
                Err(Error::IndeterminateCancellation { .. }) => redraws += 1,
                Err(e) => return Err(e),
            }
        }
        let chi = radius_chi_square(&radii, &laws[2], &lump_below(&MC_SAMPLER))?;
        checks.push(Check::new(
            format!("‖X_t + X_s‖ ~ law at t+s, (t, s) = ({t}, {s})"),
            chi.p_value > 1e-3,
            format!(
                "χ² = {:.2}, dof {}, p = {:.4}, {n} samples, {redraws} redraws",
                chi.statistic, chi.dof, chi.p_value
            ),
        ));
    }
    Ok(checks)
}

fn sampler_law() -> Result<Vec<Check>> {
    let params = KernelParams::finite(1.0, 2.0)?;
    let (r_min, r_max) = auto_truncation(&params, 1e-7)?;
    let trunc = Truncation {
        r_min,
        r_max,
        sampler: MC_SAMPLER,
    };
    let paths = sample_paths(&params, 10, 10_000, 1.0, &trunc, 11, 4)?;
    let dist = radius_distribution(&params, &r_min, &r_max, 1e-12)?;
    let mut sampled = Vec::new();
    let mut exact = Tally::new("sampled increments have exactly the drawn norm");
    for path in &paths {
        for (i, r) in path.radii.iter().enumerate() {
            sampled.push(Radius::Pp(*r));
            let d = distance(&path.points[i + 1], &path.points[i])?;
            exact.record(d == Radius::Pp(*r), || format!("step {i}: drew {r}, got {d}"));
        }
    }
    // radii drawn straight from the sphere sampler
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut direct = Tally::new("sphere samples lie on the sphere");
    for r in pp_closed_range(&pp(17, -1), &pp(2, 5)) {
        for _ in 0..20 {
            let x = sample_uniform(&Region::sphere(AdelePoint::zero(), r), &SamplerConfig::default(), &mut rng)?;
            direct.record(x.norm() == Radius::Pp(r), || format!("{r}: {x}"));
        }
    }
    // the drawn radii are the radius law; the norms come from the points
    let norms: Vec<Radius> = paths
        .iter()
        .flat_map(|p| p.points.windows(2).map(|w| distance(&w[1], &w[0])))
        .collect::<Result<_>>()?;
    let chi = radius_chi_square(&norms, &dist, &lump_below(&MC_SAMPLER))?;
    Ok(vec![
        Check::new(
            "increment norms ~ sphere masses",
            chi.p_value > 1e-3 && sampled.len() == 100_000,
            format!(
                "χ² = {:.2}, dof {}, p = {:.4}, {} samples, {} tail and {} precision redraws",
                chi.statistic,
                chi.dof,
                chi.p_value,
                sampled.len(),
                paths.iter().map(|p| p.tail_resamples).sum::<u64>(),
                paths.iter().map(|p| p.cancellation_resamples).sum::<u64>()
            ),
        ),
        exact.check(),
        direct.check(),
    ])
}

fn markov_conditions() -> Result<Vec<Check>> {
    let alpha = 2.0;
    let times = [0.1, 0.01, 0.001];
    let mut m_cond = Tally::new("P(t, x, B_ε(x)ᶜ)/t ≤ C(ε)");
    for eps in [pp(2, -1), pp(3, -1), pp(2, 1), pp(5, 1)] {
        for &t in &times {
            let p = ball_complement_prob(t, alpha, &eps, 1e-14)?;
            let c = tail_mass_bound(&eps, &KernelParams::finite(t, alpha)?)?;
            m_cond.record(p.value - p.error_bound <= c.value + c.error_bound, || {
                format!("ε={eps} t={t}: {p} vs {c}")
            });
        }
    }
    let mut n_cond = Tally::new("P(t, x, B_1/4(x)ᶜ)/t ≥ (3^α − 2^α)/3 − 1e-3");
    let floor = (3f64.powf(alpha) - 2f64.powf(alpha)) / 3.0 - 1e-3;
    let mut ratios = Vec::new();
    for &t in &times {
        let p = ball_complement_prob(t, alpha, &pp(2, -2), 1e-14)?;
        let r = (p.value - p.error_bound) / t;
        ratios.push(r);
        n_cond.record(r >= floor, || format!("t={t}: {r}"));
    }
    // L(B): sup over t ≤ 1 of P(t, x, B_1/2(0)) as ‖x‖ grows
    let mut sups = Vec::new();
    for k in 1..=5 {
        let x = AdelePoint::from_components([PAdicComponent::exact(2, BigInt::one(), -k)?.expect("non-zero")])?;
        let mut sup = 0.0f64;
        for t in [1.0, 0.5, 0.25, 0.1, 0.01, 0.001] {
            let p = transition_prob_ball(t, alpha, &x, &AdelePoint::zero(), &pp(2, -1), 1e-14)?;
            sup = sup.max(p.value + p.error_bound);
        }
        sups.push(sup);
    }
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    // space homogeneity
    let shift: AdelePoint = AdelePoint::from_components([
        PAdicComponent::exact(3, BigInt::from(2), -1)?.expect("non-zero"),
        PAdicComponent::exact(5, BigInt::from(7), 0)?.expect("non-zero"),
    ])?;
    let x = AdelePoint::from_components([PAdicComponent::exact(2, BigInt::one(), -2)?.expect("non-zero")])?;
    let a = transition_prob_ball(0.3, alpha, &x, &AdelePoint::zero(), &pp(2, 1), 1e-12)?;
    let b = transition_prob_ball(0.3, alpha, &x.add(&shift)?, &shift, &pp(2, 1), 1e-12)?;
    // the sphere route to the same ball mass
    let eps = pp(3, -1);
    let ft = ball_complement_prob(0.5, alpha, &eps, 1e-13)?;
    let direct = sphere_mass(Some(eps), &KernelParams::finite(0.5, alpha)?, 1e-11)?;
    Ok(vec![
        m_cond.check(),
        n_cond.check(),
        Check::new(
            "L(B): sup_t P(t, x, B) decreases to < 1e-4 by ‖x‖ = 32",
            monotone && sups[4] < 1e-4,
            sci(&sups),
        ),
        Check::new("translation invariance", a.value == b.value, format!("{} vs {}", a.value, b.value)),
        Check::new(
            "ball complement: Fourier and sphere routes agree",
            (ft.value - direct.value).abs() <= 1e-10,
            format!("{ft} vs {direct}"),
        ),
    ])
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn steps_close(a: &RadialStep<f64>, b: &RadialStep<f64>, rel: f64) -> bool {
    let lo = a.inner_radius().min(b.inner_radius());
    let hi = a.support_radius().max(b.support_radius());
    let scale = std::iter::once(a.inner_value().abs())
        .chain(a.values().values().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let mut radii = vec![Radius::Zero];
    radii.extend(pp_closed_range(&lo, &hi).into_iter().map(Radius::Pp));
    radii.iter().all(|r| (a.value_at(r) - b.value_at(r)).abs() <= rel * scale)
}

fn to_f64_step(f: &RadialStep<BigRational>) -> RadialStep<f64> {
    f.map(|v| v.to_f64().expect("finite"))
}

/// `F^{-1} 1_{S_r}`.
fn eigen(r: PrimePower) -> RadialStep<BigRational> {
    RadialStep::sphere(r, BigRational::one()).fourier()
}

/// A Lizorkin-type step: transform supported away from 0.
fn random_lizorkin(rng: &mut impl Rng) -> RadialStep<BigRational> {
    let spectral = random_step(rng);
    let r0 = spectral.inner_radius();
    let spectral = RadialStep::new(r0, spectral.support_radius(), BigRational::zero(), spectral.values().clone())
        .expect("valid");
    spectral.fourier()
}

fn solvers() -> Result<Vec<Check>> {
    let alpha = 2.0;
    let symbol = SymbolSpec::new(alpha, None)?;
    let spheres = [
        pp(2, 1),
        pp(3, 1),
        pp(2, 2),
        pp(5, 1),
        pp(7, 1),
        pp(2, 3),
        pp(3, 2),
        pp(2, -1),
        pp(3, -1),
        pp(5, -1),
    ];
    let mut decay = Tally::new("u(t) = e^{-t p^{αj}} u₀ on F⁻¹1_{S_{p^j}}");
    let mut rates = Tally::new("observed L² decay rate = p^{αj}");
    let mut operator = Tally::new("D^α F⁻¹1_{S_r} = r^α F⁻¹1_{S_r}");
    for r in spheres {
        let u0 = eigen(r);
        let u0f = to_f64_step(&u0);
        let lambda = r.to_f64().powf(alpha);
        let t = 0.7 / lambda;
        let u = solve_homogeneous(&u0, t, &symbol)?.into_exact()?;
        let expected = u0f.map(|v| v * (-t * lambda).exp());
        decay.record(steps_close(&u, &expected, 1e-12), || r.to_string());
        let rate = -(l2_norm_sq(&u) / l2_norm_sq(&u0f)).ln() / (2.0 * t);
        rates.record(rel_close(rate, lambda, 1e-10), || format!("{r}: {rate} vs {lambda}"));
        let d = apply_operator(&u0, alpha)?.into_exact()?;
        operator.record(steps_close(&d, &u0f.map(|v| v * lambda), 1e-12), || r.to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut semigroup = Tally::new("solve(solve(u₀, t), s) = solve(u₀, t + s)");
    let mut contraction = Tally::new("‖u(t)‖₂ non-increasing on a t-grid");
    let mut conserved = Tally::new("∫u(t) = ∫u₀");
    for _ in 0..10 {
        let u0 = random_lizorkin(&mut rng);
        let (t, s) = (rng.random_range(0.01..0.5), rng.random_range(0.01..0.5));
        let two = solve_homogeneous(&solve_homogeneous(&u0, t, &symbol)?.into_exact()?, s, &symbol)?.into_exact()?;
        let one = solve_homogeneous(&u0, t + s, &symbol)?.into_exact()?;
        semigroup.record(steps_close(&two, &one, 1e-12), || format!("{u0:?}"));
        let mut last = f64::INFINITY;
        for k in 0..=20 {
            let u = solve_homogeneous(&u0, 0.05 * k as f64, &symbol)?.into_exact()?;
            let n = l2_norm_sq(&u);
            // the sphere coefficients decay one by one, so only roundoff can raise the norm
            contraction.record(n <= last * (1.0 + 1e-13), || format!("step {k}: {n} > {last}"));
            last = n;
            conserved.record(u.integrate().abs() <= 1e-12 * (1.0 + n.sqrt()), || format!("{}", u.integrate()));
        }
    }
    // residual of the equation on exact solutions
    let u0 = random_lizorkin(&mut rng);
    let t = 0.2;
    let u_t = solve_homogeneous(&u0, t, &symbol)?.into_exact()?;
    let d_u = apply_operator(&u_t, alpha)?.into_exact()?;
    let mut residuals = Vec::new();
    for h in [1e-2, 1e-3, 1e-4] {
        let u_h = solve_homogeneous(&u0, t + h, &symbol)?.into_exact()?;
        let diff = combine(&u_h, &u_t, CombineOp::Add, Some(&-1.0));
        let res = combine(&diff.scale(&(1.0 / h)), &d_u, CombineOp::Add, Some(&1.0));
        residuals.push(l2_norm_sq(&res).sqrt() / h);
    }
    let residual_ok = residuals.iter().all(|&c| c <= 1.5 * residuals[0]);
    // manufactured Duhamel solution
    let r = pp(2, 1);
    let w = eigen(r);
    let lambda = r.to_f64().powf(alpha);
    let horizon = 1.0;
    let nodes = 64;
    let times: Vec<f64> = (0..=nodes).map(|j| horizon * j as f64 / nodes as f64).collect();
    let wf = to_f64_step(&w);
    let forcing = ForcingGrid::new(
        times.clone(),
        times
            .iter()
            .map(|&tau| wf.map(|v| v * (tau.cos() + lambda * tau.sin())))
            .collect(),
    )?;
    let exact = wf.map(|v| v * horizon.sin());
    let zero = RadialStep::zero(r);
    let mut errors = Vec::new();
    let mut bound_ok = true;
    for m in [16, 32, 64] {
        let sol = solve_nonhomogeneous(&zero, &forcing, horizon, &symbol, Quadrature::Simpson, m)?;
        let u = sol.solution.as_exact().expect("Lizorkin data").clone();
        let mut err = 0.0f64;
        let mut radii = vec![Radius::Zero];
        radii.extend(pp_closed_range(&u.inner_radius(), &u.support_radius()).into_iter().map(Radius::Pp));
        for rad in &radii {
            let e = (u.value_at(rad) - exact.value_at(rad)).abs();
            err = err.max(e);
            let c = sol.eval(rad, 1e-12)?;
            bound_ok &= e <= c.error_bound * 1.5 + 1e-14;
        }
        errors.push(err);
    }
    let order = (errors[1] / errors[2]).log2();
    let coarse_order = (errors[0] / errors[1]).log2();
    // f ≡ 0 reduces to the homogeneous solver
    let u0 = random_lizorkin(&mut rng);
    let duhamel = solve_nonhomogeneous(&u0, &ForcingGrid::zero(1.0)?, 0.4, &symbol, Quadrature::Simpson, 64)?;
    let plain = solve_homogeneous(&u0, 0.4, &symbol)?.into_exact()?;
    Ok(vec![
        decay.check(),
        rates.check(),
        operator.check(),
        semigroup.check(),
        contraction.check(),
        conserved.check(),
        Check::new(
            "residual ‖(u(t+h) − u(t))/h + D^α u(t)‖₂ = O(h)",
            residual_ok,
            format!("residual/h for h = 1e-2, 1e-3, 1e-4: {}", sci(&residuals)),
        ),
        Check::new(
            "manufactured Duhamel error < 1e-4 at M = 64 (Simpson)",
            errors[2] < 1e-4,
            format!("errors at M = 16, 32, 64: {}", sci(&errors)),
        ),
        Check::new(
            "observed Simpson order ≥ 3.5",
            order >= 3.5 && coarse_order >= 3.5,
            format!("{coarse_order:.3}, {order:.3}"),
        ),
        Check::new("reported error bounds cover the actual error", bound_ok, String::new()),
        Check::new(
            "zero forcing matches the homogeneous solver",
            steps_close(duhamel.solution.as_exact().expect("Lizorkin data"), &plain, 1e-12),
            String::new(),
        ),
    ])
}

fn adelic_factor() -> Result<Vec<Check>> {
    let pi = std::f64::consts::PI;
    let mut closed = Tally::new("z_real closed forms (β = 1, 2) vs quadrature within 1e-8");
    for beta in [1.0, 2.0] {
        for t in [0.5, 1.0, 2.0] {
            let params = KernelParams::new(t, 2.0, Some(beta))?;
            for x in [0.0, 0.05, 0.2, 0.5, 1.0] {
                let z = z_real(x, &params)?;
                let cutoff = (40.0 / t).powf(1.0 / beta);
                let q = quad::integrate(
                    |xi| 2.0 * (2.0 * pi * x * xi).cos() * (-t * xi.powf(beta)).exp(),
                    0.0,
                    cutoff,
                    1e-12,
                    20_000,
                )?;
                closed.record((z.value - q.value).abs() <= 1e-8, || {
                    format!("β={beta} t={t} x={x}: {} vs {}", z.value, q.value)
                });
            }
        }
    }
    let mut product = Tally::new("∫_A Z = 1 ± 1e-5");
    for (t, alpha) in [(1.0, 2.0), (0.5, 3.0), (2.0, 1.5)] {
        for beta in [1.0, 1.5, 2.0] {
            let params = KernelParams::new(t, alpha, Some(beta))?;
            let fin = normalization(&params, 1e-8)?;
            let real = real_normalization(&params, 1e-8)?;
            let v = fin.value * real.value;
            let err = fin.error_bound * real.value + real.error_bound * fin.value;
            product.record((v - 1.0).abs() + err <= 1e-5, || {
                format!("t={t} α={alpha} β={beta}: {v} ± {err:e}")
            });
        }
    }
    // D^{α,β}(h_∞ ⊗ h_f) = h_f D^β h_∞ + h_∞ D^α h_f
    let gauss_hat = |xi: f64| (-pi * xi * xi).exp();
    let gauss = |x: f64| (-pi * x * x).exp();
    let h_fin = combine(
        &RadialStep::sphere(pp(2, 1), BigRational::one()),
        &RadialStep::ball(pp(2, -1), BigRational::one()),
        CombineOp::Add,
        Some(&-BigRational::one()),
    );
    let h_fin_f = to_f64_step(&h_fin);
    let mut factor = Tally::new("operator factorization at sampled points within 1e-8");
    for (alpha, beta) in [(2.0, 1.5), (1.5, 2.0), (3.0, 0.5)] {
        let symbol = SymbolSpec::new(alpha, Some(beta))?;
        let d_fin = apply_operator(&h_fin, alpha)?.into_exact()?;
        for x in [0.0, 0.3, 1.1] {
            let d_real = real_operator(&gauss_hat, beta, x, 8.0, 1e-13)?;
            for rf in [Radius::Zero, Radius::Pp(pp(2, -1)), Radius::Pp(pp(2, 1)), Radius::Pp(pp(3, 1))] {
                let lhs = apply_adelic_operator(&gauss_hat, &h_fin, &symbol, x, &rf, 8.0, 1e-13)?;
                let rhs = h_fin_f.value_at(&rf) * d_real.value + gauss(x) * d_fin.value_at(&rf);
                factor.record((lhs.value - rhs).abs() <= 1e-8, || {
                    format!("α={alpha} β={beta} x={x} ‖x_f‖={rf}: {} vs {rhs}", lhs.value)
                });
            }
        }
    }
    Ok(vec![closed.check(), product.check(), factor.check()])
}
