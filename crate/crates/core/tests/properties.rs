use delta_dyn::certify::{check_delta_tt, default_cover, CheckConfig};
use delta_dyn::criterion::{check_classical_hc, check_delta_hc, lambda_b_instance, DEFAULT_TOL};
use delta_dyn::exact::{int, rat, ratio, Q};
use delta_dyn::metric::{dist, Laterality, Pt, Space};
use delta_dyn::rotation::RotationAngle;
use delta_dyn::shifts::{right_inverse, weight_product, WeightProduct};
use delta_dyn::sparse::SparseVec;
use delta_dyn::systems::{iterate, SystemDef, WeightGen, WeightSeq};
use proptest::prelude::*;

fn small_q() -> impl Strategy<Value = Q> {
    (-40i64..=40, 1i64..=8).prop_map(|(p, q)| ratio(p, q))
}

fn nonzero_q() -> impl Strategy<Value = Q> {
    (prop_oneof![-6i64..=-1, 1i64..=6], 1i64..=4).prop_map(|(p, q)| ratio(p, q))
}

fn sparse(lo: i64, hi: i64) -> impl Strategy<Value = SparseVec> {
    prop::collection::vec((lo..=hi, small_q()), 0..6).prop_map(SparseVec::from_pairs)
}

fn weights() -> impl Strategy<Value = WeightSeq> {
    (prop::collection::vec(nonzero_q(), 0..6), nonzero_q(), nonzero_q()).prop_map(|(values, default, back)| {
        WeightSeq::two_sided(WeightGen::Explicit { values, default }, WeightGen::Constant { c: back })
    })
}

fn laterality() -> impl Strategy<Value = Laterality> {
    prop_oneof![Just(Laterality::Unilateral), Just(Laterality::Bilateral)]
}

fn shift(w: &WeightSeq, lat: Laterality) -> SystemDef {
    match lat {
        Laterality::Unilateral => SystemDef::unilateral(w.clone()),
        Laterality::Bilateral => SystemDef::bilateral(w.clone()),
    }
    .unwrap()
}

fn triangle(s: &Space, x: &Pt, y: &Pt, z: &Pt) -> bool {
    let xz = dist(s, x, z).unwrap();
    let xy = dist(s, x, y).unwrap();
    let yz = dist(s, y, z).unwrap();
    xz <= xy + yz + 1e-12 * (1.0 + xz)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_triangle(a in small_q(), b in small_q(), c in small_q()) {
        let s = Space::circle();
        prop_assert!(triangle(&s, &Pt::circle(a), &Pt::circle(b), &Pt::circle(c)));
    }

    #[test]
    fn capped_plane_triangle(p in prop::array::uniform6(small_q())) {
        let [a, b, c, d, e, f] = p;
        let s = Space::capped_plane();
        prop_assert!(triangle(&s, &Pt::plane(a, b), &Pt::plane(c, d), &Pt::plane(e, f)));
    }

    #[test]
    fn sequence_triangle(x in sparse(-4, 4), y in sparse(-4, 4), z in sparse(-4, 4)) {
        let s = Space::sequence(Laterality::Bilateral, 4);
        prop_assert!(triangle(&s, &Pt::Seq(x), &Pt::Seq(y), &Pt::Seq(z)));
    }

    #[test]
    fn shift_is_linear(w in weights(), lat in laterality(), x in sparse(0, 6), y in sparse(0, 6), c in small_q(), n in 0u64..5) {
        let sys = shift(&w, lat);
        let lhs = iterate(&sys, &Pt::Seq(&x.scale(&c) + &y), n).unwrap();
        let tx = iterate(&sys, &Pt::Seq(x), n).unwrap();
        let ty = iterate(&sys, &Pt::Seq(y), n).unwrap();
        let rhs = &tx.as_seq().unwrap().scale(&c) + ty.as_seq().unwrap();
        prop_assert_eq!(lhs.as_seq().unwrap(), &rhs);
    }

    #[test]
    fn weight_products_multiply(w in weights(), k in -6i64..12, m in 0u64..5, n in 0u64..5) {
        let lat = Laterality::Bilateral;
        let whole = weight_product(&w, lat, k, m + n).unwrap();
        let tail = weight_product(&w, lat, k - n as i64, m).unwrap();
        let head = weight_product(&w, lat, k, n).unwrap();
        let prod = tail.value().unwrap() * head.value().unwrap();
        prop_assert_eq!(whole, WeightProduct::Value(prod));
    }

    #[test]
    fn iterate_matches_weight_product(w in weights(), lat in laterality(), k in 0i64..8, n in 0u64..8) {
        let sys = shift(&w, lat);
        let image = iterate(&sys, &Pt::Seq(SparseVec::basis(k)), n).unwrap();
        let expected = match weight_product(&w, lat, k, n).unwrap() {
            WeightProduct::Value(a) => SparseVec::from_pairs([(k - n as i64, a)]),
            WeightProduct::Annihilated => SparseVec::zero(),
        };
        prop_assert_eq!(image.as_seq().unwrap(), &expected);
    }

    #[test]
    fn right_inverse_is_undone(w in weights(), lat in laterality(), v in sparse(0, 6), n in 0u64..6) {
        let sys = shift(&w, lat);
        let s = right_inverse(&w, lat, n, &v).unwrap();
        let back = iterate(&sys, &Pt::Seq(s), n).unwrap();
        prop_assert_eq!(back.as_seq().unwrap(), &v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn classical_implies_delta_hc(num in 8i64..=16, neg in any::<bool>(), delta in prop_oneof![Just(1e-6), Just(0.1), Just(1.0), Just(10.0)]) {
        let lambda = ratio(if neg { -num } else { num }, 4);
        let inst = lambda_b_instance(&lambda, 3, 40).unwrap();
        let classical = check_classical_hc(&inst, &rat(DEFAULT_TOL), 40).unwrap();
        let report = check_delta_hc(&inst, &rat(delta), 40).unwrap();
        prop_assert!(!classical.is_certified() || report.verdict.is_certified());
    }

    #[test]
    fn classifier_reruns_agree(seed in any::<u64>(), which in 0usize..3) {
        let sys = match which {
            0 => SystemDef::rotation(RotationAngle::irrational(0.618_033_988_749_895).unwrap()),
            1 => SystemDef::unilateral(WeightSeq::constant(int(2))).unwrap(),
            _ => SystemDef::identity(Space::capped_plane()),
        };
        let cfg = CheckConfig::new(ratio(1, 10), default_cover(&sys.space()))
            .with_horizon(40)
            .with_samples(3)
            .with_seed(seed);
        let first = check_delta_tt(&sys, &cfg).unwrap();
        let second = check_delta_tt(&sys, &cfg).unwrap();
        prop_assert_eq!(first, second);
    }
}
