//! Radial step JSON in all three value types; accepted input re-serializes
//! to an equal step.

#![no_main]

use adelic_core::radial::RadialStep;
use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;
use num_rational::BigRational;

fuzz_target!(|s: &str| {
    if let Ok(f) = RadialStep::<BigRational>::from_json_str(s) {
        let back = RadialStep::<BigRational>::from_json_str(&f.to_json().to_string()).unwrap();
        assert_eq!(back, f);
    }
    if let Ok(f) = RadialStep::<f64>::from_json_str(s) {
        let back = RadialStep::<f64>::from_json_str(&f.to_json().to_string()).unwrap();
        assert_eq!(back, f);
    }
    if let Ok(f) = RadialStep::<Complex64>::from_json_str(s) {
        let back = RadialStep::<Complex64>::from_json_str(&f.to_json().to_string()).unwrap();
        assert_eq!(back, f);
    }
});
