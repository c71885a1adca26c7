use brjuno_core::cf::{
    check_beta_recursion, check_determinants, construct_tau_number, convergents, cylinder, diophantine_profile,
    expand_rational, finite_value, CFNumber,
};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use proptest::prelude::*;

fn quotients() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..1000, 1..30)
}

fn big(v: &[u64]) -> Vec<BigUint> {
    v.iter().map(|&a| BigUint::from(a)).collect()
}

proptest! {
    #[test]
    fn rational_round_trip(p in 0u64..1_000_000_000, q in 1u64..1_000_000_000) {
        prop_assume!(p < q);
        let x = BigRational::new(BigInt::from(p), BigInt::from(q));
        let a = expand_rational(&x).unwrap();
        prop_assert_eq!(finite_value(&a), x);
        // canonical form ends in a quotient of at least 2
        if let Some(last) = a.last() {
            prop_assert!(a.len() == 1 || *last >= BigUint::from(2u32));
        }
    }

    #[test]
    fn convergent_determinants(mut v in quotients()) {
        v.push(2);
        let x = CFNumber::finite(big(&v)).unwrap();
        let cv = convergents(&x, v.len()).unwrap();
        prop_assert!(check_determinants(&cv));
    }

    #[test]
    fn cylinders_nest_and_contain_their_points(v in quotients(), extra in 1u64..50) {
        let mut o = v.clone();
        o.push(extra);
        o.push(3);
        let point = finite_value(&big(&o));
        let mut qs = vec![BigUint::from(0u32), BigUint::one()];
        for &a in &v {
            let next = BigUint::from(a) * &qs[qs.len() - 1] + &qs[qs.len() - 2];
            qs.push(next);
        }
        let mut prev: Option<_> = None;
        for k in 1..=v.len() {
            let c = cylinder(&big(&v[..k])).unwrap();
            prop_assert!(c.contains(&point));
            let (q, qp) = (&qs[k + 1], &qs[k]);
            let expect = BigRational::new(BigInt::one(), BigInt::from(q * (q + qp)));
            prop_assert_eq!(c.width(), expect);
            if let Some(p) = &prev {
                prop_assert!(cylinder_contains(p, &c));
            }
            prev = Some(c);
        }
    }

    #[test]
    fn approximation_sandwich(v in quotients(), extra in 1u64..50) {
        let mut o = v.clone();
        o.push(extra);
        o.push(2);
        let x = finite_value(&big(&o));
        let cv = convergents(&CFNumber::finite(big(&o)).unwrap(), o.len()).unwrap();
        for n in 1..=v.len() as i64 {
            let (c, c1) = (cv.get(n), cv.get(n + 1));
            let pq = BigRational::new(BigInt::from(c.p.clone()), BigInt::from(c.q.clone()));
            let d = (&x - pq).abs();
            let upper = BigRational::new(BigInt::one(), BigInt::from(&c.q * &c1.q));
            let lower = BigRational::new(BigInt::one(), BigInt::from(&c.q * (&c1.q + &c.q)));
            prop_assert!(d > lower && d < upper);
        }
    }
}

fn cylinder_contains(outer: &brjuno_core::cf::Cylinder, inner: &brjuno_core::cf::Cylinder) -> bool {
    outer.contains_cylinder(inner) && inner.width() < outer.width()
}

#[test]
fn beta_recursion_on_surds() {
    for x in [CFNumber::golden(), CFNumber::silver()] {
        assert_eq!(check_beta_recursion(&x, 30).unwrap(), Some(true));
    }
}

#[test]
fn tau_rule_reaches_its_exponent() {
    let x = construct_tau_number(4.0, 8, 2).unwrap();
    let prof = diophantine_profile(&x, 7).unwrap();
    let t = prof.taus[prof.taus.len() - 1];
    assert!((t - 4.0).abs() <= 0.1, "tau_n = {t}");
}

#[test]
fn golden_convergents_are_fibonacci() {
    let cv = convergents(&CFNumber::golden(), 30).unwrap();
    let (mut a, mut b) = (1u64, 1u64);
    for n in 1..=30 {
        assert_eq!(cv.get(n).q, BigUint::from(b));
        (a, b) = (b, a + b);
    }
}
