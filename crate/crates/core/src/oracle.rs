//! Slow reference computations that share no code with the main modules.
//!
//! Φ comes straight from its definition as an lcm, prime powers from trial
//! division, and the heat kernel from its sphere-indicator form
//!
//! ```text
//! Z(r) = Σ_{s ≤ u} e^{−t s^α} vol(S_s) − Φ(u) e^{−t r^{−α}},   u = (1/r)₋,
//! ```
//!
//! which is the summation-by-parts dual of the series used by `heatkernel`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

/// `n` is a prime power `p^k`, `k ≥ 1`, by trial division.
pub fn is_prime_power(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut m = n;
            while m % p == 0 {
                m /= p;
            }
            return m == 1;
        }
        p += 1;
    }
    true
}

/// `lcm(1, …, m)` by repeated lcm.
pub fn lcm_by_definition(m: u64) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, k| acc.lcm(&BigInt::from(k)))
}

/// `Φ(x)` for positive rational `x`, from the definition.
pub fn phi_by_definition(x: &BigRational) -> BigRational {
    assert!(*x > BigRational::from_integer(0.into()));
    if *x >= BigRational::one() {
        let m = x.floor().to_integer().to_u64().expect("moderate x");
        BigRational::from_integer(lcm_by_definition(m))
    } else {
        let inv = x.recip();
        let m = inv.ceil().to_integer().to_u64().expect("moderate x") - 1;
        BigRational::new(BigInt::one(), lcm_by_definition(m))
    }
}

/// Prime powers in `[1/n_small, n_large]` (as rationals), ascending.
pub fn prime_power_grid(n_small: u64, n_large: u64) -> Vec<BigRational> {
    let mut out: Vec<BigRational> = (2..=n_small)
        .rev()
        .filter(|&n| is_prime_power(n))
        .map(|n| BigRational::new(BigInt::one(), BigInt::from(n)))
        .collect();
    out.extend((2..=n_large).filter(|&n| is_prime_power(n)).map(|n| BigRational::from_integer(n.into())));
    out
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite")
}

/// `Σ_s w(s) vol(S_s)` over the grid, with `vol(S_s) = Φ(s) − Φ(s₋)` from the
/// definition. The first grid point stands for the whole ball below it.
pub fn sphere_sum(grid: &[BigRational], w: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut comp = 0.0;
    let mut prev_phi: Option<BigRational> = None;
    for s in grid {
        let phi = phi_by_definition(s);
        let vol = match &prev_phi {
            Some(p) => &phi - p,
            None => phi.clone(),
        };
        let term = w(to_f64(s)) * to_f64(&vol);
        // Kahan
        let y = term - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
        prev_phi = Some(phi);
    }
    total
}

/// Heat kernel at `‖x‖ = r` (`None` for the origin) in sphere-indicator form.
///
/// Radii below `1/n_small` are dropped; their total weight is below
/// `Φ(1/n_small)`. For the origin the sum also stops at `n_large`.
pub fn heat_kernel(r: Option<&BigRational>, t: f64, alpha: f64, n_small: u64, n_large: u64) -> f64 {
    let g = |s: f64| (-t * s.powf(alpha)).exp();
    let grid = prime_power_grid(n_small, n_large);
    match r {
        None => sphere_sum(&grid, g),
        Some(r) => {
            let bound = r.recip();
            let below: Vec<BigRational> = grid.into_iter().filter(|s| *s < bound).collect();
            let u = below.last().expect("grid reaches below 1/r").clone();
            sphere_sum(&below, g) - to_f64(&phi_by_definition(&u)) * g(to_f64(&bound))
        }
    }
}

/// `∫ ‖y‖^β e^{−t‖y‖^α} dy` as a plain sphere sum over the grid.
pub fn moment(t: f64, alpha: f64, beta: f64, n_small: u64, n_large: u64) -> f64 {
    sphere_sum(&prime_power_grid(n_small, n_large), |s| s.powf(beta) * (-t * s.powf(alpha)).exp())
}

/// `Σ_{q > ε} q^{−α}` over prime powers `q ≤ n_large`, smallest terms first.
pub fn corollary_sum(epsilon: &BigRational, alpha: f64, n_large: u64) -> f64 {
    let grid = prime_power_grid(1_000, n_large);
    grid.iter()
        .filter(|q| *q > epsilon)
        .rev()
        .map(|q| to_f64(q).powf(-alpha))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitions() {
        assert_eq!(lcm_by_definition(10), BigInt::from(2520));
        assert!(is_prime_power(9) && is_prime_power(2) && !is_prime_power(12) && !is_prime_power(1));
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(phi_by_definition(&half), BigRational::one());
    }
}
