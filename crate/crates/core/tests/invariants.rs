use proptest::prelude::*;
use swanlab_core::{
    break_multiset, qi, rank1_oracle_break, LaurentElement, NablaModule, Normalization, PreparedModule, WeightVector, Q,
};

const P: u32 = 5;

fn laurent(terms: &[(i64, i64, i64)]) -> LaurentElement {
    terms
        .iter()
        .fold(LaurentElement::zero(P, 2), |acc, &(c, a, b)| acc + LaurentElement::term(P, qi(c), vec![a, b]))
}

// Nonzero coefficients prime to p, exponents in a box where only (0,0) is p-divisible.
fn poly() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((prop_oneof![1i64..=4, -4i64..=-1], -4i64..=4, -4i64..=4), 1..=3)
        .prop_map(|mut ts| {
            ts.retain(|&(_, a, b)| (a, b) != (0, 0));
            ts.sort_by_key(|&(_, a, b)| (a, b));
            ts.dedup_by_key(|t| (t.1, t.2));
            ts
        })
        .prop_filter("nonempty", |ts| !ts.is_empty())
}

fn weights() -> impl Strategy<Value = WeightVector> {
    (1i64..=5, 1i64..=5).prop_map(|(a, b)| WeightVector::from_ints(&[a, b]))
}

fn breaks(m: &NablaModule, r: &WeightVector) -> Vec<Q> {
    break_multiset(&PreparedModule::new(m).unwrap(), r, &Normalization::Simplex).unwrap().breaks
}

fn total(r: &WeightVector) -> Q {
    r.as_slice().iter().fold(qi(0), |a, b| a + b)
}

proptest! {
    #[test]
    fn rank_one_engine_matches_the_oracle(f in poly(), r in weights()) {
        let f = laurent(&f);
        let oracle = rank1_oracle_break(&f, &r).unwrap() / total(&r);
        prop_assert_eq!(breaks(&NablaModule::dwork(f).unwrap(), &r), vec![oracle]);
    }

    #[test]
    fn oracle_is_the_most_polar_term(f in poly(), r in weights()) {
        let expect = f.iter().map(|&(_, a, b)| -(r.as_slice()[0].clone() * qi(a) + r.as_slice()[1].clone() * qi(b))).fold(qi(0), Q::max);
        prop_assert_eq!(rank1_oracle_break(&laurent(&f), &r).unwrap(), expect);
    }

    #[test]
    fn dual_keeps_breaks(f in poly(), g in poly(), r in weights()) {
        let m = NablaModule::direct_sum(&NablaModule::dwork(laurent(&f)).unwrap(), &NablaModule::dwork(laurent(&g)).unwrap()).unwrap();
        prop_assert_eq!(breaks(&NablaModule::dual(&m), &r), breaks(&m, &r));
    }

    #[test]
    fn sum_is_multiset_union(f in poly(), g in poly(), r in weights()) {
        let (a, b) = (NablaModule::dwork(laurent(&f)).unwrap(), NablaModule::dwork(laurent(&g)).unwrap());
        let mut expect = breaks(&a, &r);
        expect.extend(breaks(&b, &r));
        expect.sort_by(|x, y| y.cmp(x));
        prop_assert_eq!(breaks(&NablaModule::direct_sum(&a, &b).unwrap(), &r), expect);
    }

    #[test]
    fn tensor_of_leaves_is_leaf_of_sum(f in poly(), g in poly(), r in weights()) {
        let (lf, lg) = (laurent(&f), laurent(&g));
        let sum = lf.clone() + lg.clone();
        prop_assume!(!sum.terms().is_empty());
        let t = NablaModule::tensor(&NablaModule::dwork(lf).unwrap(), &NablaModule::dwork(lg).unwrap()).unwrap();
        prop_assert_eq!(breaks(&t, &r), breaks(&NablaModule::dwork(sum).unwrap(), &r));
    }

    #[test]
    fn simplex_normalization_is_scale_invariant(f in poly(), a in 1i64..=5, b in 1i64..=5, k in 2i64..=4) {
        let m = NablaModule::dwork(laurent(&f)).unwrap();
        prop_assert_eq!(
            breaks(&m, &WeightVector::from_ints(&[a, b])),
            breaks(&m, &WeightVector::from_ints(&[k * a, k * b]))
        );
    }
}

#[test]
fn lxy_conductor_under_each_normalization() {
    let m = NablaModule::dwork(laurent(&[(1, -1, -1)])).unwrap();
    let prep = PreparedModule::new(&m).unwrap();
    let r = WeightVector::from_ints(&[2, 3]);
    let swan = |n: Normalization| break_multiset(&prep, &r, &n).unwrap().swan;
    assert_eq!(swan(Normalization::Natural), qi(5));
    assert_eq!(swan(Normalization::ByVariable(1)), Q::new(5.into(), 3.into()));
    assert_eq!(swan(Normalization::Simplex), qi(1));
    assert_eq!(swan(Normalization::ByMonomial(vec![1, 1])), qi(1));
}
