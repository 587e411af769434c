use num_rational::Ratio;
use proptest::prelude::*;
use upcase_core::model::SubProcessId;
use upcase_core::scoring::{
    achievement_percentage, attribute_rating, build_profile, Rating, ResponseSheet,
};
use upcase_core::stats::{
    cohen_kappa, contingency_table, cronbach_alpha, icc, IccVariant, RatingVector, Weighting,
};
use upcase_core::ReferenceModel;

fn rating() -> impl Strategy<Value = Rating> {
    prop_oneof![Just(Rating::N), Just(Rating::P), Just(Rating::F)]
}

fn sheet_strategy() -> impl Strategy<Value = Vec<Rating>> {
    prop::collection::vec(rating(), 16)
}

fn bump(r: Rating) -> Rating {
    match r {
        Rating::N => Rating::P,
        _ => Rating::F,
    }
}

proptest! {
    #[test]
    fn raising_a_rating_never_lowers_scores(ratings in sheet_strategy(), idx in 0usize..16) {
        let model = ReferenceModel::canonical();
        let before = build_profile(&ResponseSheet::from_ordered("1.0", "x", &ratings), &model).unwrap();
        let mut raised = ratings.clone();
        raised[idx] = bump(raised[idx]);
        let after = build_profile(&ResponseSheet::from_ordered("1.0", "x", &raised), &model).unwrap();
        prop_assert!(after.overall >= before.overall);
        prop_assert!(after.overall_rating >= before.overall_rating);
        for sp in SubProcessId::ALL {
            prop_assert!(after.per_sub_process[&sp].score >= before.per_sub_process[&sp].score);
        }
    }

    #[test]
    fn overall_is_item_weighted_mean_of_sub_processes(ratings in sheet_strategy()) {
        let model = ReferenceModel::canonical();
        let p = build_profile(&ResponseSheet::from_ordered("1.0", "x", &ratings), &model).unwrap();
        let mut acc = Ratio::from_integer(0u64);
        for sp in SubProcessId::ALL {
            let n = model.indicators_of(sp).count() as u64;
            acc += p.per_sub_process[&sp].score.ratio() * Ratio::from_integer(n);
        }
        prop_assert_eq!(acc / Ratio::from_integer(16u64), p.overall.ratio());
        prop_assert_eq!(p.capability_level == 1, p.overall_rating == Rating::F);
    }

    #[test]
    fn percentage_bounds_and_rating_bands(ratings in prop::collection::vec(rating(), 1..40)) {
        let pct = achievement_percentage(&ratings).unwrap();
        let v = pct.ratio();
        prop_assert!(v <= Ratio::from_integer(100));
        let expected = if v <= Ratio::from_integer(15) {
            Rating::N
        } else if v <= Ratio::from_integer(85) {
            Rating::P
        } else {
            Rating::F
        };
        prop_assert_eq!(attribute_rating(pct), expected);
    }

    #[test]
    fn kappa_is_symmetric_and_at_most_one(
        pairs in prop::collection::vec((0u32..3, 0u32..3), 2..30),
        w in prop_oneof![Just(Weighting::None), Just(Weighting::Linear), Just(Weighting::Quadratic)],
    ) {
        let a = RatingVector::new("a", pairs.iter().map(|p| p.0).collect()).unwrap();
        let b = RatingVector::new("b", pairs.iter().map(|p| p.1).collect()).unwrap();
        let ab = cohen_kappa(&contingency_table(&a, &b, 3).unwrap(), w);
        let ba = cohen_kappa(&contingency_table(&b, &a, 3).unwrap(), w);
        match (ab, ba) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.coefficient - y.coefficient).abs() < 1e-12);
                prop_assert!(x.coefficient <= 1.0 + 1e-12);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric definedness: {:?}", other),
        }
    }

    #[test]
    fn identical_nondegenerate_raters_have_kappa_one(values in prop::collection::vec(0u32..3, 2..30)) {
        prop_assume!(values.iter().any(|v| *v != values[0]));
        let a = RatingVector::new("a", values.clone()).unwrap();
        for w in Weighting::ALL {
            let k = cohen_kappa(&contingency_table(&a, &a, 3).unwrap(), w).unwrap();
            prop_assert!((k.coefficient - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn icc_is_invariant_to_shift_and_positive_scale(
        matrix in prop::collection::vec(prop::collection::vec(0u32..3, 2), 3..20),
        shift in -5.0f64..5.0,
        scale in 0.5f64..4.0,
    ) {
        let m: Vec<Vec<f64>> = matrix.iter().map(|r| r.iter().map(|&x| f64::from(x)).collect()).collect();
        let t: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x * scale + shift).collect()).collect();
        for v in IccVariant::ALL {
            let a = icc(&m, v).unwrap();
            let b = icc(&t, v).unwrap();
            prop_assert_eq!(a.defined, b.defined);
            if let (Some(x), Some(y)) = (a.coefficient, b.coefficient) {
                prop_assert!((x - y).abs() < 1e-9, "{:?}: {} vs {}", v, x, y);
                prop_assert!(x <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn identical_raters_give_icc_one(col in prop::collection::vec(0u32..3, 3..20)) {
        prop_assume!(col.iter().any(|v| *v != col[0]));
        let m: Vec<Vec<f64>> = col.iter().map(|&x| vec![f64::from(x); 2]).collect();
        for v in IccVariant::ALL {
            prop_assert_eq!(icc(&m, v).unwrap().coefficient, Some(1.0));
        }
    }

    #[test]
    fn alpha_is_invariant_to_respondent_order_and_item_shift(
        matrix in prop::collection::vec(prop::collection::vec(0u32..3, 4), 3..15),
        shift in -3.0f64..3.0,
    ) {
        let m: Vec<Vec<f64>> = matrix.iter().map(|r| r.iter().map(|&x| f64::from(x)).collect()).collect();
        let Ok(base) = cronbach_alpha(&m) else { return Ok(()); };
        let mut rev = m.clone();
        rev.reverse();
        let shifted: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x + shift).collect()).collect();
        for other in [rev, shifted] {
            let a = cronbach_alpha(&other).unwrap();
            prop_assert!((a.alpha - base.alpha).abs() < 1e-9);
            prop_assert_eq!(a.alpha_if_deleted.len(), base.k);
        }
    }
}

/// With two categories every weighting scheme gives the same disagreement
/// matrix, so all three kappas coincide. Exhaustive for n <= 6.
#[test]
fn binary_kappas_coincide_exhaustively() {
    let mut checked = 0;
    for n in 2..=6usize {
        for mask_a in 0u32..(1 << n) {
            for mask_b in 0u32..(1 << n) {
                let bits = |m: u32| (0..n).map(|i| (m >> i) & 1).collect::<Vec<u32>>();
                let a = RatingVector::new("a", bits(mask_a)).unwrap();
                let b = RatingVector::new("b", bits(mask_b)).unwrap();
                let t = contingency_table(&a, &b, 2).unwrap();
                let ks: Vec<_> = Weighting::ALL
                    .iter()
                    .map(|w| cohen_kappa(&t, *w).ok().map(|k| k.coefficient))
                    .collect();
                for k in &ks[1..] {
                    match (ks[0], *k) {
                        (Some(x), Some(y)) => {
                            assert!((x - y).abs() < 1e-12, "n={n} {mask_a:b} {mask_b:b}")
                        }
                        (None, None) => {}
                        other => panic!("definedness differs: {other:?}"),
                    }
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 4 * 4 + 8 * 8 + 16 * 16 + 32 * 32 + 64 * 64);
}
