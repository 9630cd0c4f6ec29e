//! Replays the checked-in fuzz corpus on stable with the same round-trip
//! checks the fuzz targets make.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use num_rational::BigRational;

use adelic_core::adele::AdelePoint;
use adelic_core::cauchy::{ForcingGrid, RealGrid};
use adelic_core::primepow::{next_pp, parse_rational, prev_pp, PrimePower, Radius};
use adelic_core::radial::RadialStep;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut entries: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    assert!(!entries.is_empty(), "empty corpus for {target}");
    entries
        .into_iter()
        .filter_map(|p| {
            // libFuzzer only hands valid UTF-8 to `&str` targets
            let text = String::from_utf8(fs::read(&p).unwrap()).ok()?;
            Some((p, text))
        })
        .collect()
}

#[test]
fn adele_points() {
    let mut accepted = 0;
    for (path, s) in corpus("parse_adele_point") {
        if let Ok(x) = s.parse::<AdelePoint>() {
            accepted += 1;
            assert_eq!(x.to_string(), s, "{}", path.display());
            let _ = x.norm();
            let _ = x.add(&x.neg());
        }
    }
    assert!(accepted > 0);
}

#[test]
fn prime_powers() {
    for (path, s) in corpus("parse_prime_power") {
        if let Ok(q) = s.parse::<PrimePower>() {
            assert_eq!(q.to_string().parse::<PrimePower>().unwrap(), q, "{}", path.display());
            assert!(q.pred() < q && q < q.succ());
            assert_eq!(q.recip().recip(), q);
        }
        if let Ok(r) = s.parse::<Radius>() {
            assert_eq!(r.to_string().parse::<Radius>().unwrap(), r);
        }
    }
}

#[test]
fn rationals() {
    for (path, s) in corpus("parse_rational") {
        let Ok(x) = parse_rational(&s) else { continue };
        if let (Ok(lo), Ok(hi)) = (prev_pp(&x), next_pp(&x)) {
            assert!(lo.to_ratio() < x && x < hi.to_ratio(), "{}", path.display());
        }
    }
}

#[test]
fn radial_steps() {
    for (path, s) in corpus("parse_radial_json") {
        if let Ok(f) = RadialStep::<BigRational>::from_json_str(&s) {
            assert_eq!(RadialStep::from_json_str(&f.to_json().to_string()).unwrap(), f, "{}", path.display());
        }
        if let Ok(f) = RadialStep::<f64>::from_json_str(&s) {
            assert_eq!(RadialStep::from_json_str(&f.to_json().to_string()).unwrap(), f, "{}", path.display());
        }
        if let Ok(f) = RadialStep::<Complex64>::from_json_str(&s) {
            assert_eq!(RadialStep::from_json_str(&f.to_json().to_string()).unwrap(), f, "{}", path.display());
        }
    }
}

#[test]
fn forcing_grids() {
    for (path, s) in corpus("parse_forcing_json") {
        if let Ok(g) = ForcingGrid::<BigRational>::from_json_str(&s) {
            assert_eq!(ForcingGrid::from_json_str(&g.to_json().to_string()).unwrap(), g, "{}", path.display());
            assert!(g.horizon() >= 0.0);
        }
    }
}

#[test]
fn real_grids() {
    for (path, s) in corpus("parse_real_grid_csv") {
        if let Ok(g) = RealGrid::from_csv(&s) {
            assert!(g.h > 0.0 && g.values.len() >= 2);
            assert_eq!(RealGrid::from_csv(&g.to_csv()).unwrap().values, g.values, "{}", path.display());
        }
    }
}
