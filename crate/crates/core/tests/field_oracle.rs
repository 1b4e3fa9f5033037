mod common;

use std::cmp::Ordering;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{interval_cmp, interval_floor, random_element, random_positive};
use tamura_sh::field::{floor_product, FieldContext, QuadIrrational};

fn element(d: u64) -> impl Strategy<Value = QuadIrrational> {
    (-1000i64..=1000, 1i64..=1000, -1000i64..=1000, 1i64..=1000)
        .prop_map(move |(a, b, c, e)| FieldContext::new(d).unwrap().from_parts((a, b), (c, e)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn floor_matches_interval_oracle(x in element(2), n in 1u64..=1_000_000) {
        if let Some(f) = interval_floor(n, &x) {
            prop_assert_eq!(floor_product(n, &x), f);
        }
    }

    #[test]
    fn floor_matches_interval_oracle_d5(x in element(5), n in 1u64..=1_000_000) {
        if let Some(f) = interval_floor(n, &x) {
            prop_assert_eq!(floor_product(n, &x), f);
        }
    }

    #[test]
    fn comparison_matches_interval_oracle(x in element(3), y in element(3)) {
        if let Some(o) = interval_cmp(&x, &y) {
            prop_assert_eq!(x.try_cmp(&y).unwrap(), o);
        }
    }
}

#[test]
fn comparison_is_a_total_order_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<QuadIrrational> = (0..10_000)
        .map(|_| random_element(&mut rng, 2, 1000, 1000))
        .collect();
    let mut unresolved = 0;
    for pair in xs.chunks(2) {
        let (x, y) = (&pair[0], &pair[1]);
        match interval_cmp(x, y) {
            Some(o) => assert_eq!(x.try_cmp(y).unwrap(), o, "{x} vs {y}"),
            None => unresolved += 1,
        }
    }
    assert_eq!(unresolved, 0);
    let mut sorted = xs[..500].to_vec();
    sorted.sort_by(|a, b| a.try_cmp(b).unwrap());
    for w in sorted.windows(2) {
        assert_ne!(interval_cmp(&w[0], &w[1]), Some(Ordering::Greater));
    }
}

#[test]
fn floors_of_huge_multiples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let x = random_positive(&mut rng, 5, 1000, 7);
        let n = u64::MAX - rand::Rng::gen_range(&mut rng, 0..1000);
        assert_eq!(
            Some(floor_product(n, &x)),
            interval_floor(n, &x),
            "{n} * ({x})"
        );
    }
}
