use gapcount_core::weak_lp::{distribution, weak_quasinorm, WeightedSequence};
use proptest::prelude::*;

fn values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..10.0f64], 1..60)
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), 0.2..4.0f64]
}

/// `sup_s s·#{v > s}^{1/p}` evaluated just below every jump point, with the
/// distribution function counted from scratch.
fn sweep(values: &[f64], p: f64) -> f64 {
    values
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| a * (values.iter().filter(|&&v| v >= a).count() as f64).powf(1.0 / p))
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn quasinorm_equals_the_jump_sweep(v in values(), p in exponent()) {
        let q = weak_quasinorm(&WeightedSequence::new(v.clone()).unwrap(), p);
        prop_assert_eq!(q, sweep(&v, p));
    }

    #[test]
    fn quasinorm_is_homogeneous(v in values(), p in exponent(), c in 0.01..100.0f64) {
        let s = WeightedSequence::new(v).unwrap();
        let lhs = weak_quasinorm(&s.scaled(c).unwrap(), p);
        let rhs = c * weak_quasinorm(&s, p);
        prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
    }

    #[test]
    fn appending_never_lowers_the_quasinorm(a in values(), b in values(), p in exponent()) {
        let sa = WeightedSequence::new(a).unwrap();
        let merged = sa.merged(&WeightedSequence::new(b).unwrap());
        prop_assert!(weak_quasinorm(&merged, p) >= weak_quasinorm(&sa, p));
    }

    #[test]
    fn merged_sequences_obey_the_quasi_triangle_bound(a in values(), b in values(), p in exponent()) {
        let sa = WeightedSequence::new(a).unwrap();
        let sb = WeightedSequence::new(b).unwrap();
        let bound = 2f64.powf(1.0 / p) * (weak_quasinorm(&sa, p) + weak_quasinorm(&sb, p));
        prop_assert!(weak_quasinorm(&sa.merged(&sb), p) <= bound * (1.0 + 1e-15));
    }

    #[test]
    fn distribution_counts_strict_exceedances(v in values(), s in 0.0..10.0f64) {
        let seq = WeightedSequence::new(v.clone()).unwrap();
        prop_assert_eq!(distribution(&seq, s), v.iter().filter(|&&x| x > s).count());
    }
}
