mod common;

use std::f64::consts::TAU;

use proptest::prelude::*;

use common::rotation_oracle;
use tamura_sh::cz::{
    cz_index, cz_rotation_analytic, direct_sum, find_crossings, symplectic_defect, HalfInteger,
    RotationPath,
};

fn off_integer(margin: f64) -> impl Strategy<Value = (f64, f64)> {
    (0.1f64..10.0, 0.1f64..10.0).prop_filter("turns near an integer", move |(a, t)| {
        let x = a * t;
        (x - x.round()).abs() > margin
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn numeric_index_matches_oracle((alpha, t) in off_integer(1e-3)) {
        let r = RotationPath::new(vec![alpha], TAU * t).unwrap();
        let expected = rotation_oracle(&[alpha], TAU * t);
        prop_assert_eq!(cz_index(&r.to_path()).unwrap(), HalfInteger::from_int(expected));
        prop_assert_eq!(cz_rotation_analytic(&[alpha], TAU * t).unwrap(), HalfInteger::from_int(expected));
    }

    #[test]
    fn direct_sum_is_additive((a1, t1) in off_integer(1e-3), a2 in 0.1f64..10.0) {
        let duration = TAU * t1;
        let x = a2 * t1;
        prop_assume!((x - x.round()).abs() > 1e-3);
        let p1 = RotationPath::new(vec![a1], duration).unwrap().to_path();
        let p2 = RotationPath::new(vec![a2], duration).unwrap().to_path();
        let sum = direct_sum(&p1, &p2).unwrap();
        prop_assert_eq!(
            cz_index(&sum).unwrap(),
            cz_index(&p1).unwrap() + cz_index(&p2).unwrap()
        );
    }

    #[test]
    fn reparametrization_invariance((alpha, t) in off_integer(1e-3)) {
        let b = TAU * t;
        let path = RotationPath::new(vec![alpha], b).unwrap().to_path();
        let re = path
            .reparametrize(0.0, 1.0, move |s| b * (s + s * s) / 2.0, move |s| b * (1.0 + 2.0 * s) / 2.0)
            .unwrap();
        prop_assert_eq!(cz_index(&re).unwrap(), cz_index(&path).unwrap());
    }

    #[test]
    fn rotation_paths_are_symplectic_and_integral(
        freqs in prop::collection::vec(0.1f64..10.0, 1..4),
        t in 0.1f64..10.0,
    ) {
        prop_assume!(freqs.iter().all(|a| ((a * t) - (a * t).round()).abs() > 1e-3));
        let r = RotationPath::new(freqs.clone(), TAU * t).unwrap();
        let path = r.to_path();
        for i in 0..=64 {
            let s = TAU * t * i as f64 / 64.0;
            prop_assert!(symplectic_defect(path.eval(s).unwrap().matrix()) <= 1e-9);
        }
        for c in find_crossings(&path).unwrap() {
            prop_assert_eq!(c.kernel_dim() % 2, 0);
        }
        let idx = cz_index(&path).unwrap();
        prop_assert!(idx.is_integer());
        prop_assert_eq!(idx.twice() % 2, 0);
        prop_assert_eq!(idx.to_integer().unwrap(), rotation_oracle(&freqs, TAU * t));
    }
}

#[test]
fn integer_turns_give_twice_the_turn_count() {
    for k in 1..=3 {
        for alpha in [0.5, 1.0, 3.0] {
            let duration = TAU * k as f64 / alpha;
            let r = RotationPath::new(vec![alpha], duration).unwrap();
            assert_eq!(
                cz_index(&r.to_path()).unwrap(),
                HalfInteger::from_int(2 * k)
            );
            assert_eq!(r.analytic_index(), HalfInteger::from_int(2 * k));
        }
    }
}
