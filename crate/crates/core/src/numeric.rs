//! Floating-point helpers shared by the analytic modules.

use std::fmt;

use num_complex::Complex64;

/// A floating-point result together with a certified bound on its error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certified<T> {
    pub value: T,
    pub error_bound: f64,
}

impl<T> Certified<T> {
    pub fn new(value: T, error_bound: f64) -> Self {
        Certified { value, error_bound }
    }
}

impl fmt::Display for Certified<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e} ± {:.3e}", self.value, self.error_bound)
    }
}

impl fmt::Display for Certified<Complex64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.17e}{:+.17e}i ± {:.3e}",
            self.value.re, self.value.im, self.error_bound
        )
    }
}

/// Shortest round-trip text for a finite float, switching to exponent form
/// for very small or large magnitudes (`4.5e-42`, `0.25`, `-10.0`).
pub fn fmt_f64(x: f64) -> String {
    serde_json::Value::from(x).to_string()
}

/// Neumaier summation that also tracks `Σ|x|` for a rounding bound.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sum {
    sum: f64,
    comp: f64,
    abs: f64,
    n: usize,
}

impl Sum {
    pub fn new() -> Self {
        Sum::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
        self.n += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Bound on the accumulated rounding error, assuming each summand carries
    /// a relative error of at most `per_term` (a few ulps for `exp`/`expm1`).
    pub fn rounding_bound(&self, per_term: f64) -> f64 {
        self.abs * (per_term + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE
    }
}

/// Componentwise [`Sum`] for complex summands.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: Sum,
    im: Sum,
}

impl ComplexSum {
    pub fn new() -> Self {
        ComplexSum::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn rounding_bound(&self, per_term: f64) -> f64 {
        self.re.rounding_bound(per_term) + self.im.rounding_bound(per_term)
    }
}

/// Relative error allowed per term built from a handful of `exp`, `ln` and
/// `powf` evaluations.
pub(crate) const TERM_REL_ERR: f64 = 64.0 * f64::EPSILON;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = Sum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-14).abs() < 1e-25, "{}", s.value());
    }
}
