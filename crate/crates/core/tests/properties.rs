use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use slicedice_core::arith::{parse_rational, power_norm, Radical};
use slicedice_core::lattice::{count_ball, enumerate_annulus, enumerate_norm_range, enumerate_sphere, sphere_counts};
use slicedice_core::operators::{
    maximal_function, multilinear_average, Exponent, GridFunction, MaximalConfig, NormalizationMode, Region,
};
use slicedice_core::primes::{progression_membership, Progression};
use slicedice_core::sharpness::delta_partial_sum;
use slicedice_core::slicing::{verify_domination, DominationConfig};
use slicedice_core::{LatticePoint, Rational, SurfaceSpec, Value};

fn box_points(d: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-radius..=radius).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

fn grid_fn(d: usize) -> impl Strategy<Value = GridFunction> {
    proptest::collection::btree_map(proptest::collection::vec(-3i64..=3, d), 1u64..=9, 1..4)
        .prop_map(move |m| GridFunction::from_integers(d, m).unwrap())
}

fn rational(v: &Value) -> BigRational {
    v.as_exact().and_then(Radical::to_rational).expect("rational value")
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shells_sum_to_ball(d in 1usize..=3, k in 2u32..=4, lambda in 0u64..=200) {
        let counts = sphere_counts(d, k, lambda);
        let total: u128 = counts.iter().sum();
        prop_assert_eq!(BigUint::from(total), count_ball(d, k, lambda));
    }

    #[test]
    fn enumeration_matches_box_oracle(d in 1usize..=3, k in 2u32..=4, lambda in 0u64..=60) {
        let radius = (lambda as f64).powf(1.0 / k as f64).ceil() as i64 + 1;
        let want: Vec<LatticePoint> = box_points(d, radius)
            .into_iter()
            .filter(|p| power_norm(p, k) == lambda)
            .map(LatticePoint::new)
            .collect();
        prop_assert_eq!(enumerate_sphere(d, k, lambda), want);
    }

    #[test]
    fn norm_ranges_nest(d in 1usize..=3, lo in 0u64..=30, span in 0u64..=30) {
        let a = enumerate_norm_range(d, 2, lo, lo + span);
        let b = enumerate_norm_range(d, 2, lo, lo + span + 5);
        prop_assert!(a.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn annulus_within_sphere_range(lambda in 1u64..=80, t in 0i64..=4) {
        let theta = Rational::new(t, 4);
        let pts = enumerate_annulus(3, theta, lambda, Rational::from_integer(1));
        prop_assert!(pts.iter().all(|p| p.norm(2) <= lambda));
        prop_assert!(pts.len() >= enumerate_sphere(3, 2, lambda).len());
    }

    #[test]
    fn average_is_multilinear(f in grid_fn(2), g in grid_fn(2), h in grid_fn(2), c in 1i64..=5, lambda in 0u64..=20) {
        let spec = SurfaceSpec::ball(2, 2, 2);
        let x = LatticePoint::new(vec![1, 0]);
        let avg = |a: &GridFunction, b: &GridFunction| {
            rational(&multilinear_average(&spec, &[a, b], lambda, NormalizationMode::ExactCount, &x).unwrap())
        };
        let base = avg(&f, &h);
        prop_assert_eq!(avg(&f.scale(&big(c)), &h), &base * big(c));
        prop_assert_eq!(avg(&f.add(&g).unwrap(), &h), &base + avg(&g, &h));
        prop_assert_eq!(avg(&h, &f.add(&g).unwrap()), avg(&h, &f) + avg(&h, &g));
    }

    #[test]
    fn ball_average_is_symmetric(f in grid_fn(2), g in grid_fn(2), lambda in 0u64..=20) {
        let spec = SurfaceSpec::ball(2, 2, 2);
        let x = LatticePoint::new(vec![0, 1]);
        let a = multilinear_average(&spec, &[&f, &g], lambda, NormalizationMode::ExactCount, &x).unwrap();
        let b = multilinear_average(&spec, &[&g, &f], lambda, NormalizationMode::ExactCount, &x).unwrap();
        prop_assert_eq!(a.as_exact(), b.as_exact());
    }

    #[test]
    fn exact_count_and_power_law_agree(f in grid_fn(1), g in grid_fn(1), lambda in 1u64..=40) {
        // T_λ^{count} · B(λ) = T_λ^{power} · λ^φ
        let spec = SurfaceSpec::ball(1, 2, 2);
        let phi = Rational::new(1, 1);
        let x = LatticePoint::new(vec![0]);
        let counted = multilinear_average(&spec, &[&f, &g], lambda, NormalizationMode::ExactCount, &x).unwrap();
        let powered = multilinear_average(&spec, &[&f, &g], lambda, NormalizationMode::PowerLaw(phi), &x).unwrap();
        let n = count_ball(2, 2, lambda);
        let lhs = rational(&counted) * BigRational::from_integer(BigInt::from(n));
        let rhs = rational(&powered) * big(lambda as i64);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn maximal_is_translation_equivariant(f in grid_fn(2), g in grid_fn(2), sx in -4i64..=4, sy in -4i64..=4) {
        let spec = SurfaceSpec::sphere(2, 2, 2);
        let s = LatticePoint::new(vec![sx, sy]);
        let pts = vec![LatticePoint::new(vec![0, 0]), LatticePoint::new(vec![1, 2]), LatticePoint::new(vec![-2, 1])];
        let shifted: Vec<LatticePoint> = pts.iter().map(|p| p.add(&s)).collect();
        let cfg = MaximalConfig::new(1..=16, NormalizationMode::ExactCount);
        let a = maximal_function(&spec, &[&f, &g], &cfg.clone().with_region(Region::Points(pts.clone()))).unwrap();
        let (ft, gt) = (f.translate(&s), g.translate(&s));
        let b = maximal_function(&spec, &[&ft, &gt], &cfg.with_region(Region::Points(shifted.clone()))).unwrap();
        for (p, q) in pts.iter().zip(&shifted) {
            prop_assert_eq!(a.get(p).as_exact().cloned(), b.get(q).as_exact().cloned());
        }
    }

    #[test]
    fn lp_norms_nest(f in grid_fn(2)) {
        let n1 = f.lp_norm(Exponent::Finite(Rational::from_integer(1)));
        let n2 = f.lp_norm(Exponent::Finite(Rational::from_integer(2)));
        let n3 = f.lp_norm(Exponent::Finite(Rational::new(7, 2)));
        let ninf = f.lp_norm(Exponent::Infinity);
        prop_assert!(n1.compare(&n2).is_ge());
        prop_assert!(n2.to_f64() >= n3.to_f64() * (1.0 - 1e-12));
        prop_assert!(n3.to_f64() >= ninf.to_f64() * (1.0 - 1e-12));
    }

    #[test]
    fn bilinear_ball_slicing_holds(f in grid_fn(1), g in grid_fn(1), lmax in 1u64..=40) {
        let spec = SurfaceSpec::ball(1, 2, 2);
        let rep = verify_domination(&spec, &[&f, &g], &DominationConfig::new(lmax)).unwrap();
        prop_assert!(rep.is_dominated(), "{}", rep);
        prop_assert_eq!(rep.violations, 0);
    }

    #[test]
    fn sphere_slicing_holds(f in grid_fn(2), g in grid_fn(2), lmax in 1u64..=30, slot in 0usize..=1) {
        let spec = SurfaceSpec::sphere(2, 2, 2);
        let rep = verify_domination(&spec, &[&f, &g], &DominationConfig::new(lmax).with_slot(slot)).unwrap();
        prop_assert!(rep.is_dominated(), "{}", rep);
    }

    #[test]
    fn progression_membership_matches_residues(a in -500i64..=500, r in 0u64..240, m in 1u64..=240) {
        let gamma = Progression::new(r % m, m).unwrap();
        prop_assert_eq!(progression_membership(a, &gamma), a.rem_euclid(m as i64) as u64 == r % m);
    }

    #[test]
    fn decimal_and_fraction_parse_agree(n in -999i64..=999, e in 0u32..=4) {
        let den = 10i64.pow(e);
        let whole = n.abs() / den;
        let frac = n.abs() % den;
        let sign = if n < 0 { "-" } else { "" };
        let text = if e == 0 { format!("{sign}{whole}") } else { format!("{sign}{whole}.{frac:0width$}", width = e as usize) };
        prop_assert_eq!(parse_rational(&text), Some(Rational::new(n, den)));
        prop_assert_eq!(parse_rational(&format!("{n}/{den}")), Some(Rational::new(n, den)));
    }

    #[test]
    fn delta_partial_sums_grow_with_radius(d in 1usize..=3, num in 1i64..=12, radius in 1u64..=12) {
        let spec = SurfaceSpec::ball(d, 2, 2);
        let r = Rational::new(num, 4);
        let a = delta_partial_sum(&spec, r, radius).unwrap();
        let b = delta_partial_sum(&spec, r, radius + 1).unwrap();
        prop_assert!(b >= a && a > 0.0);
    }
}

#[test]
fn zero_input_gives_zero_average() {
    let spec = SurfaceSpec::ball(2, 2, 2);
    let f = GridFunction::zero(2);
    let g = GridFunction::delta(LatticePoint::origin(2));
    let v = multilinear_average(&spec, &[&f, &g], 5, NormalizationMode::ExactCount, &LatticePoint::origin(2)).unwrap();
    assert!(rational(&v).is_zero());
    let v = multilinear_average(&spec, &[&g, &g], 0, NormalizationMode::ExactCount, &LatticePoint::origin(2)).unwrap();
    assert!(rational(&v).is_one());
}
