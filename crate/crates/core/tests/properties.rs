use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use adelic_core::adele::{distance, AdelePoint, PAdicComponent};
use adelic_core::cauchy::{solve_homogeneous, SymbolSpec};
use adelic_core::heatkernel::{z_finite, KernelParams};
use adelic_core::primepow::{next_pp, phi, pp_closed_range, pp_range, prev_pp, PrimePower, Radius};
use adelic_core::radial::{combine, CombineOp, RadialStep};

fn pp(p: u64, k: i32) -> PrimePower {
    PrimePower::new(p, k).unwrap()
}

fn grid() -> Vec<PrimePower> {
    pp_closed_range(&pp(19, -1), &pp(19, 1))
}

fn rational() -> impl Strategy<Value = BigRational> {
    prop_oneof![
        1 => Just(BigRational::zero()),
        6 => (-9i64..=9, 1i64..=7).prop_map(|(a, b)| BigRational::new(a.into(), b.into())),
    ]
}

fn positive_rational() -> impl Strategy<Value = BigRational> {
    (1i64..5000, 1i64..5000).prop_map(|(a, b)| BigRational::new(a.into(), b.into()))
}

fn step() -> impl Strategy<Value = RadialStep<BigRational>> {
    let n = grid().len();
    (0..n, 0..n)
        .prop_flat_map(move |(a, b)| {
            let (i, j) = (a.min(b), a.max(b));
            (Just(i), Just(j), rational(), proptest::collection::vec(rational(), j - i))
        })
        .prop_map(|(i, j, inner, vals)| {
            let g = grid();
            let values: BTreeMap<_, _> = g[i + 1..=j].iter().copied().zip(vals).collect();
            RadialStep::new(g[i], g[j], inner, values).unwrap()
        })
}

fn prime_power() -> impl Strategy<Value = PrimePower> {
    (prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 101, 65521]), -6i32..=6)
        .prop_filter_map("k ≠ 0 and within range", |(p, k)| {
            // Φ at large magnitudes is an lcm of that many integers; keep it cheap
            PrimePower::new(p, k).ok().filter(|q| k != 0 && q.magnitude() <= 100_000)
        })
}

fn exact_point() -> impl Strategy<Value = AdelePoint> {
    proptest::collection::vec((prop::sample::select(vec![2u64, 3, 5, 7]), -60i64..60, -3i64..3), 0..4).prop_map(
        |parts| {
            let mut by_prime = BTreeMap::new();
            for (p, m, e) in parts {
                if let Some(c) = PAdicComponent::exact(p, BigInt::from(m), e).unwrap() {
                    by_prime.insert(p, c);
                }
            }
            AdelePoint::from_components(by_prime.into_values()).unwrap()
        },
    )
}

fn integral(f: &RadialStep<BigRational>) -> BigRational {
    f.integrate()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn order_neighbours_are_inverse(q in prime_power()) {
        prop_assert_eq!(q.succ().pred(), q);
        prop_assert_eq!(q.recip().recip(), q);
        prop_assert!(q.pred() < q && q < q.succ());
        prop_assert_eq!(next_pp(&q.to_ratio()).unwrap(), q.succ());
        prop_assert_eq!(prev_pp(&q.to_ratio()).unwrap(), q.pred());
    }

    #[test]
    fn phi_reciprocal_duality(q in prime_power()) {
        let prod = phi(&q.to_ratio()).unwrap().into_ratio() * phi(&q.recip().to_ratio()).unwrap().into_ratio();
        prop_assert_eq!(prod, BigRational::from_integer(q.p().into()));
        // Φ jumps by p exactly at q
        let ratio = phi(&q.to_ratio()).unwrap().into_ratio() / phi(&q.pred().to_ratio()).unwrap().into_ratio();
        prop_assert_eq!(ratio, BigRational::from_integer(q.p().into()));
    }

    #[test]
    fn neighbours_bracket_rationals(x in positive_rational()) {
        let (lo, hi) = (prev_pp(&x).unwrap(), next_pp(&x).unwrap());
        prop_assert!(lo.to_ratio() < x && x < hi.to_ratio());
        let between = pp_range(&lo.to_ratio(), &hi.to_ratio()).unwrap();
        // only x itself (if a prime power) and hi lie in (lo, hi]
        prop_assert!(between.len() <= 2);
        prop_assert_eq!(*between.last().unwrap(), hi);
    }

    #[test]
    fn prime_power_text_round_trip(q in prime_power()) {
        prop_assert_eq!(q.to_string().parse::<PrimePower>().unwrap(), q);
    }

    #[test]
    fn double_transform_is_identity(f in step()) {
        prop_assert_eq!(f.fourier().fourier(), f);
    }

    #[test]
    fn parseval(f in step()) {
        prop_assert_eq!(integral(&f.modulus_sq()), integral(&f.fourier().modulus_sq()));
    }

    #[test]
    fn transform_at_origin_is_integral(f in step()) {
        prop_assert_eq!(f.fourier().value_at(&Radius::Zero), integral(&f));
    }

    #[test]
    fn support_law(f in step()) {
        prop_assume!(!f.is_zero());
        let g = f.fourier();
        prop_assert!(g.inner_radius() >= f.support_radius().recip().pred());
        prop_assert!(g.support_radius() <= f.inner_radius().recip().pred());
    }

    #[test]
    fn transform_is_linear(f in step(), g in step(), c in rational()) {
        let lhs = combine(&f, &g, CombineOp::Add, Some(&c)).fourier();
        let rhs = combine(&f.fourier(), &g.fourier(), CombineOp::Add, Some(&c));
        // zero has no preferred envelope, so compare through the difference
        prop_assert!(combine(&lhs, &rhs, CombineOp::Add, Some(&-BigRational::one())).is_zero());
    }

    #[test]
    fn radial_json_round_trip(f in step()) {
        prop_assert_eq!(RadialStep::<BigRational>::from_json_str(&f.to_json().to_string()).unwrap(), f);
    }

    #[test]
    fn ultrametric_inequality(x in exact_point(), y in exact_point()) {
        let s = x.add(&y).unwrap();
        let (nx, ny, ns) = (x.norm().to_ratio(), y.norm().to_ratio(), s.norm().to_ratio());
        prop_assert!(ns <= nx.clone().max(ny.clone()));
        if nx != ny {
            prop_assert_eq!(ns, nx.max(ny));
        }
    }

    #[test]
    fn distance_is_a_metric(x in exact_point(), y in exact_point(), z in exact_point()) {
        let dxy = distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, distance(&y, &x).unwrap());
        prop_assert_eq!(distance(&x, &x).unwrap(), Radius::Zero);
        let (dxz, dzy) = (distance(&x, &z).unwrap().to_ratio(), distance(&z, &y).unwrap().to_ratio());
        prop_assert!(dxy.to_ratio() <= dxz.max(dzy));
    }

    #[test]
    fn negation_cancels(x in exact_point()) {
        prop_assert!(x.add(&x.neg()).unwrap().is_zero());
        prop_assert_eq!(x.neg().norm(), x.norm());
    }

    #[test]
    fn point_text_round_trip(x in exact_point()) {
        prop_assert_eq!(x.to_string().parse::<AdelePoint>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_is_positive_and_radially_decreasing(t in 0.2f64..5.0, alpha in 1.5f64..4.0) {
        let params = KernelParams::finite(t, alpha).unwrap();
        let mut prev = z_finite(&Radius::Zero, &params, 1e-10).unwrap();
        prop_assert!(prev.value > 0.0);
        for r in pp_closed_range(&pp(2, -3), &pp(2, 3)) {
            let z = z_finite(&Radius::Pp(r), &params, 1e-10).unwrap();
            prop_assert!(z.value > -z.error_bound);
            prop_assert!(z.value <= prev.value + z.error_bound + prev.error_bound);
            prev = z;
        }
    }

    #[test]
    fn solver_is_linear_on_lizorkin_data(
        f in step(), g in step(), c in rational(), t in 0.01f64..3.0, alpha in 1.1f64..3.0,
    ) {
        // transforms of steps vanishing near 0 are exactly solvable
        let lift = |h: &RadialStep<BigRational>| {
            combine(h, &RadialStep::ball(h.inner_radius(), h.inner_value().clone()), CombineOp::Add, Some(&-BigRational::one()))
                .fourier()
        };
        let (u, v) = (lift(&f), lift(&g));
        let symbol = SymbolSpec::new(alpha, None).unwrap();
        let su = solve_homogeneous(&u, t, &symbol).unwrap().into_exact().unwrap();
        let sv = solve_homogeneous(&v, t, &symbol).unwrap().into_exact().unwrap();
        let sw = solve_homogeneous(&combine(&u, &v, CombineOp::Add, Some(&c)), t, &symbol).unwrap().into_exact().unwrap();
        let cf: f64 = num_traits::ToPrimitive::to_f64(&c).unwrap();
        let mut radii = vec![Radius::Zero];
        radii.extend(grid().into_iter().map(Radius::Pp));
        for r in &radii {
            let expect = su.value_at(r) + cf * sv.value_at(r);
            let got = sw.value_at(r);
            prop_assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{r}: {got} vs {expect}");
        }
    }
}
