use proptest::prelude::*;

use walklab::excursion::{
    count_excursions_with, excursion_field, excursion_field_with, induce_walk, induced_counts,
    sandwich_check,
};
use walklab::rng::{derive_seed, StreamKey};
use walklab::tracker::{DepthSpec, MultiDepthTracker};
use walklab::verify::brute_force_excursions;
use walklab::walk::generate_walk;
use walklab::{Cap, Completion, ExcursionTally, LayerValue, Trajectory};

fn path() -> impl Strategy<Value = Trajectory> {
    prop::collection::vec(any::<bool>(), 0..300).prop_map(|b| {
        let steps: Vec<i64> = b.iter().map(|&u| if u { 1 } else { -1 }).collect();
        Trajectory::from_increments(&steps).unwrap()
    })
}

fn completion() -> impl Strategy<Value = Completion> {
    prop_oneof![Just(Completion::Reached), Just(Completion::Returned)]
}

proptest! {
    #[test]
    fn walk_invariants(seed in any::<u64>(), n in 0u64..2000) {
        let t = generate_walk(seed, n);
        let pos = t.positions_to(n).unwrap();
        prop_assert_eq!(pos.len() as u64, n + 1);
        prop_assert_eq!(pos[0], 0);
        prop_assert!(pos.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        let last = *pos.last().unwrap();
        prop_assert_eq!(last.rem_euclid(2), (n % 2) as i64);
        let (lo, hi) = t.running_extrema(n).unwrap();
        prop_assert_eq!(lo, *pos.iter().min().unwrap());
        prop_assert_eq!(hi, *pos.iter().max().unwrap());
        prop_assert_eq!(t.range_size(n).unwrap(), (hi - lo + 1) as u64);
        let lt = t.local_times(n).unwrap();
        prop_assert_eq!(lt.total(), n + 1);
        prop_assert_eq!(lt.support_size(), t.range_size(n).unwrap());
    }

    #[test]
    fn walk_is_a_prefix_of_longer_walks(seed in any::<u64>(), n in 0u64..500, extra in 0u64..500) {
        let a = generate_walk(seed, n).positions_to(n).unwrap();
        let b = generate_walk(seed, n + extra).positions_to(n).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn step_bits_follow_the_stream(seed in any::<u64>(), t in 0u64..1000) {
        let w = generate_walk(seed, 1000);
        let bit = (StreamKey::new(seed, 0).word(t / 64) >> (t % 64)) & 1;
        prop_assert_eq!(w.step(t), if bit == 1 { 1 } else { -1 });
    }

    #[test]
    fn field_matches_brute_force(t in path(), k in 1u64..6, c in completion()) {
        let n = t.len();
        let pos = t.positions_to(n).unwrap();
        let field = excursion_field_with(&t, k, n, c).unwrap();
        let (lo, hi) = t.running_extrema(n).unwrap();
        for x in lo - 1..=hi + 1 {
            let want = brute_force_excursions(&pos, k, x, n as usize, c);
            prop_assert_eq!(field.get(x), want, "x = {}", x);
            prop_assert_eq!(count_excursions_with(&t, k, x, n, c).unwrap(), want);
        }
    }

    #[test]
    fn tracker_matches_field(seed in any::<u64>(), n in 1u64..3000, k in 1u64..10) {
        let t = generate_walk(seed, n);
        let mut tr = MultiDepthTracker::new(&[DepthSpec::full(k, vec![Cap::Finite(1), Cap::Finite(3), Cap::Infinite])]);
        tr.advance(&t.words(), n);
        let field = excursion_field(&t, k, n).unwrap();
        prop_assert_eq!(tr.counts(k).unwrap(), field.counts.clone());
        let snap = tr.snapshot();
        let d = snap.depth(k).unwrap();
        prop_assert_eq!(d.lattice, field.lattice_count());
        prop_assert_eq!(d.plain, field.plain_sum());
        prop_assert_eq!(d.max, field.max_count());
        for (cap, v) in &d.truncated {
            prop_assert_eq!(*v, field.truncated_sum(*cap));
        }
    }

    #[test]
    fn counts_are_monotone_in_time(t in path(), k in 1u64..6, c in completion()) {
        let n = t.len();
        let mut prev = excursion_field_with(&t, k, 0, c).unwrap();
        for m in 1..=n {
            let cur = excursion_field_with(&t, k, m, c).unwrap();
            for (&x, &v) in &prev.counts {
                prop_assert!(cur.get(x) >= v);
            }
            prev = cur;
        }
    }

    #[test]
    fn induced_walk_is_nearest_neighbour(t in path(), k in 1u64..6) {
        let n = t.len();
        let y = induce_walk(&t, k, n).unwrap();
        prop_assert_eq!(y.positions[0], 0);
        prop_assert!(y.positions.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        prop_assert!(y.times.windows(2).all(|w| w[1] > w[0] && (w[1] - w[0]) >= k));
        let pos = t.positions_to(n).unwrap();
        for (j, &tj) in y.times.iter().enumerate() {
            prop_assert_eq!(pos[tj as usize], k as i64 * y.positions[j]);
        }
        let (steps, downs) = induced_counts(&t.words(), n, k);
        prop_assert_eq!(steps, y.steps());
        prop_assert_eq!(downs, y.down.values().sum::<u64>());
        // under the reached convention the lattice counts are the down-steps of Y
        let field = excursion_field(&t, k, n).unwrap();
        prop_assert_eq!(field.lattice_count(), downs);
    }

    #[test]
    fn sandwich_upper_and_aligned_lower(t in path(), k in 2u64..9, x in -20i64..20) {
        let n = t.len();
        let s = sandwich_check(&t, k, x, n).unwrap();
        prop_assert!(s.mid <= s.upper);
        let r = x.rem_euclid(2 * k as i64);
        if r == 0 || r >= k as i64 {
            prop_assert!(s.lower <= s.mid as i64);
        }
    }

    #[test]
    fn merge_adds_pointwise(a in path(), b in path(), k in 1u64..5) {
        let n = a.len().min(b.len());
        let fa = excursion_field(&a, k, n).unwrap();
        let fb = excursion_field(&b, k, n).unwrap();
        let mut m = fa.clone();
        m.merge(&fb).unwrap();
        for x in -310..310 {
            prop_assert_eq!(m.get(x), fa.get(x) + fb.get(x));
        }
        prop_assert_eq!(m.lattice_count(), fa.lattice_count() + fb.lattice_count());
        let other: ExcursionTally = excursion_field(&a, k + 1, n).unwrap();
        prop_assert!(m.merge(&other).is_err());
    }

    #[test]
    fn tally_serde_round_trip(t in path(), k in 1u64..5) {
        let f = excursion_field(&t, k, t.len()).unwrap();
        let back: ExcursionTally = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn layer_value_serde_round_trip(v in any::<u64>(), inf in any::<bool>()) {
        let lv = if inf { LayerValue::Infinite } else { LayerValue::from_u64(v) };
        let s = serde_json::to_string(&lv).unwrap();
        let back: LayerValue = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, lv);
    }

    #[test]
    fn derived_seeds_are_distinct(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(master, "t", i), derive_seed(master, "t", j));
        prop_assert_ne!(derive_seed(master, "a", i), derive_seed(master, "b", i));
    }
}

#[test]
fn stream_reference_values() {
    let key = StreamKey::new(0, 0);
    assert_eq!(key.word(0), 0xcd70_6bf1_1ce4_f216);
    assert_eq!(
        generate_walk(0, 16).positions_to(16).unwrap(),
        [0, -1, 0, 1, 0, 1, 0, -1, -2, -3, -2, -3, -4, -3, -2, -1, 0]
    );
    assert_eq!(derive_seed(0, "lil", 0), 14_423_579_717_812_013_143);
    assert_eq!(derive_seed(42, "lil", 3), 1_710_639_016_499_756_898);
}
