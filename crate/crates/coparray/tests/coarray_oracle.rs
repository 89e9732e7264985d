//! Coarray correctness against an independent ordered-pair oracle.

use std::collections::{BTreeSet, HashMap};

use coparray::coarray::difference_coarray;
use coparray::geometry::{coprime_1d, rcpa, CoprimePair, SensorArray};
use proptest::prelude::*;

type Point = (i64, i64);

/// Oracle: plain double loop over ordered sensor pairs.
fn oracle(positions: &[Point]) -> HashMap<Point, u64> {
    let mut out = HashMap::new();
    for &p in positions {
        for &q in positions {
            *out.entry((p.0 - q.0, p.1 - q.1)).or_insert(0u64) += 1;
        }
    }
    out
}

fn arbitrary_array() -> impl Strategy<Value = SensorArray> {
    proptest::collection::btree_set((0i64..16, 0i64..16), 1..=12).prop_map(|set| {
        let positions: Vec<Point> = set.into_iter().collect();
        SensorArray::new("random", positions, 0.5).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coarray_matches_ordered_pair_oracle(array in arbitrary_array()) {
        let co = difference_coarray(&array);
        let expected = oracle(array.positions());

        prop_assert_eq!(co.lags().len(), expected.len());
        for (&lag, &count) in &expected {
            prop_assert_eq!(co.weight(lag), count);
        }

        let n = array.positions().len() as u64;
        let total: u64 = co.weight_table().values().sum();
        prop_assert_eq!(total, n * n);
        prop_assert_eq!(co.weight((0, 0)), n);
    }

    #[test]
    fn holes_are_negation_symmetric(array in arbitrary_array()) {
        let co = difference_coarray(&array);
        for &h in co.holes() {
            prop_assert!(co.holes().contains(&(-h.0, -h.1)));
        }
        // contiguous square really is hole-free
        let h = co.contiguous_half_width();
        for x in -h..=h {
            for y in -h..=h {
                prop_assert!(co.contains((x, y)));
            }
        }
    }
}

#[test]
fn rcpa_coarray_is_product_of_1d_coarrays() {
    for (m, n) in [(1u32, 2u32), (2, 3), (1, 4), (3, 2), (2, 5), (3, 4), (1, 8)] {
        let Ok(pair) = CoprimePair::new(m, n) else {
            continue;
        };
        if 2 * m + n - 1 > 10 {
            continue;
        }
        let d: BTreeSet<i64> = difference_coarray(&coprime_1d(&pair))
            .lags()
            .iter()
            .map(|l| l.0)
            .collect();
        let co = difference_coarray(&rcpa(&pair));
        let product: BTreeSet<(i64, i64)> = d
            .iter()
            .flat_map(|&x| d.iter().map(move |&y| (x, y)))
            .collect();
        let lags: BTreeSet<(i64, i64)> = co.lags().iter().copied().collect();
        assert_eq!(lags, product, "M={m} N={n}");
    }
}
