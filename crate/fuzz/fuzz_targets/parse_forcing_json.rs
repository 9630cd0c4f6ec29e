#![no_main]

use adelic_core::cauchy::ForcingGrid;
use libfuzzer_sys::fuzz_target;
use num_rational::BigRational;

fuzz_target!(|s: &str| {
    if let Ok(g) = ForcingGrid::<BigRational>::from_json_str(s) {
        let back = ForcingGrid::<BigRational>::from_json_str(&g.to_json().to_string()).unwrap();
        assert_eq!(back, g);
        assert!(g.horizon() >= 0.0);
    }
});
