#![no_main]

use adelic_core::primepow::{PrimePower, Radius};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    if let Ok(q) = s.parse::<PrimePower>() {
        assert_eq!(q.to_string().parse::<PrimePower>().unwrap(), q);
        assert!(q.pred() < q && q < q.succ());
        assert_eq!(q.recip().recip(), q);
    }
    if let Ok(r) = s.parse::<Radius>() {
        assert_eq!(r.to_string().parse::<Radius>().unwrap(), r);
    }
});
