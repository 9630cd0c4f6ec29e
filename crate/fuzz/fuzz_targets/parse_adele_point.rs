//! Point text: anything that parses must print back to the same text and
//! have a norm.

#![no_main]

use adelic_core::adele::AdelePoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    if let Ok(x) = s.parse::<AdelePoint>() {
        let text = x.to_string();
        assert_eq!(text, s, "only canonical text is accepted");
        assert_eq!(text.parse::<AdelePoint>().unwrap(), x);
        let _ = x.norm();
        let _ = x.add(&x.neg());
    }
});
