use swanlab_bench::{boundary_model, rank_four, two_leaf_sum};
use swanlab_core::{break_multiset, qi, subharmonicity_check, Normalization, PreparedModule, WeightVector};

#[test]
fn fixtures_build_and_evaluate() {
    let m = rank_four(5).unwrap();
    assert_eq!(m.rank(), 4);
    let b = break_multiset(&PreparedModule::new(&m).unwrap(), &WeightVector::from_ints(&[2, 3]), &Normalization::Natural);
    assert_eq!(b.unwrap().breaks.len(), 4);
    assert_eq!(two_leaf_sum(5).unwrap().rank(), 2);
    let s = subharmonicity_check(&boundary_model(5, &[(1, -5)]).unwrap()).unwrap();
    assert_eq!((s.lhs.clone(), s.rhs.clone()), (qi(2), qi(2)), "{s:?}");
}
