#![no_main]

use adelic_core::cauchy::RealGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    if let Ok(g) = RealGrid::from_csv(s) {
        assert!(g.h > 0.0 && g.values.len() >= 2);
        let back = RealGrid::from_csv(&g.to_csv()).unwrap();
        assert_eq!(back.values, g.values);
    }
});
