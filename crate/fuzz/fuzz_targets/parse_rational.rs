//! Rationals: parsing must not panic, and the prime-power neighbours of
//! anything in range must bracket it.

#![no_main]

use adelic_core::primepow::{next_pp, parse_rational, prev_pp};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    let Ok(x) = parse_rational(s) else { return };
    if let (Ok(lo), Ok(hi)) = (prev_pp(&x), next_pp(&x)) {
        assert!(lo.to_ratio() < x && x < hi.to_ratio());
    }
});
