use tilekit::fibers::szabo_construct;
use tilekit::reductions::{self, Step, Strategy};
use tilekit::saturation;

#[test]
fn szabo_reduces_by_slabs_in_every_direction() {
    let (pair, report) = szabo_construct(&[3, 5, 7]).unwrap();
    assert_eq!(report.modulus, 11025);
    for i in 0..3 {
        let c = reductions::slab_conditions(&pair, i).unwrap();
        assert!(c.all() && c.agree(), "{c:?}");
        let r = reductions::slab_reduce(&pair, i).unwrap();
        assert!(r.t2_reduced_a && r.t2_reduced_b && r.t2_transfer_ok());
    }
    for p in [3, 5, 7] {
        assert!(reductions::subgroup_reduce(&pair, p).is_err());
        assert!(reductions::subgroup_reduce(&pair.swapped(), p).is_err());
    }
    let d = reductions::t2_induction_driver(&pair, Strategy::Auto, 1000).unwrap();
    assert!(d.proved && d.t2_direct && d.consistent);
    assert!(matches!(d.trace.step, Step::Slab { .. }));
    assert!(reductions::one_divisor_violations(&pair).unwrap().is_empty());
}

#[test]
fn szabo_holes_have_one_dimensional_saturating_sets() {
    let (pair, report) = szabo_construct(&[3, 5, 7]).unwrap();
    let m = pair.modulus().clone();
    let mut seen = 0;
    for (i, &root) in report.shifted_roots.iter().enumerate() {
        for x in m.fiber(root, i).unwrap() {
            if pair.a().contains(x) {
                continue;
            }
            let s = saturation::saturating_set(&pair, x).unwrap();
            let line = m.line(x, i).unwrap();
            if s.union.iter().all(|z| line.binary_search(z).is_ok()) {
                seen += 1;
                let ls = saturation::line_saturation(&pair, x, i).unwrap();
                assert_eq!(ls.alpha, Some(2));
                let s = saturation::one_dim_structure(&pair, x, 0, i, 2).unwrap();
                assert!(s.holds(), "{:?}", s.failures);
                assert_eq!(s.pset_a, vec![1]);
                assert!(s.pset_b.is_empty());
            }
            assert!(saturation::bispan_bound_check(&pair, x).unwrap());
        }
    }
    // every point of the three vacated fibers is such a hole
    assert_eq!(seen, 3 + 5 + 7);
}
