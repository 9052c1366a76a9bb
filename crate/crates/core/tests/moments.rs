use lifelog_core::fusion::HrWindow;
use lifelog_core::moments::{detect_special_moments, flag_windows, MomentParams};
use proptest::prelude::*;

/// Windows of 30 s with quarter-bpm means, so shifted means stay exact.
fn stream() -> impl Strategy<Value = Vec<HrWindow>> {
    prop::collection::vec(
        (prop_oneof![6 => Just(1i64), 1 => 2i64..6], 200u32..800),
        1..160,
    )
    .prop_map(|steps| {
        let mut start = 0;
        steps
            .into_iter()
            .map(|(gap, q)| {
                start += gap * 30;
                HrWindow {
                    start,
                    len: 30,
                    mean_bpm: f64::from(q) / 4.0,
                    n_samples: 30,
                }
            })
            .collect()
    })
}

fn params() -> impl Strategy<Value = MomentParams> {
    (0.5f64..40.0, 0.5f64..5.0, 2usize..30, 1usize..5, 1usize..5).prop_map(
        |(abs_delta, z_threshold, baseline_len, merge_gap, context_pad)| MomentParams {
            abs_delta,
            z_threshold,
            baseline_len,
            merge_gap,
            context_pad,
        },
    )
}

proptest! {
    #[test]
    fn detection_is_deterministic(w in stream(), p in params()) {
        prop_assert_eq!(
            detect_special_moments(&w, &p).unwrap(),
            detect_special_moments(&w, &p).unwrap()
        );
    }

    #[test]
    fn shifting_all_means_changes_nothing(w in stream(), p in params(), shift in -60i32..60) {
        let shifted: Vec<HrWindow> = w
            .iter()
            .map(|x| HrWindow { mean_bpm: x.mean_bpm + f64::from(shift), ..*x })
            .collect();
        prop_assert_eq!(
            detect_special_moments(&w, &p).unwrap(),
            detect_special_moments(&shifted, &p).unwrap()
        );
    }

    #[test]
    fn raising_abs_delta_never_adds_flags(w in stream(), p in params(), extra in 0.0f64..30.0) {
        let higher = MomentParams { abs_delta: p.abs_delta + extra, ..p };
        let a = flag_windows(&w, &p).unwrap();
        let b = flag_windows(&w, &higher).unwrap();
        prop_assert!(b.len() <= a.len());
        let a_idx: Vec<usize> = a.iter().map(|f| f.window).collect();
        prop_assert!(b.iter().all(|f| a_idx.contains(&f.window)));
    }

    #[test]
    fn episodes_are_ordered_and_disjoint(w in stream(), p in params()) {
        let eps = detect_special_moments(&w, &p).unwrap();
        for e in &eps {
            prop_assert!(e.start < e.end);
            prop_assert_eq!(e.start, e.window_starts[0]);
            prop_assert_eq!(e.end, *e.window_starts.last().unwrap() + 30);
            prop_assert!(e.window_starts.windows(2).all(|s| s[0] < s[1]));
        }
        for pair in eps.windows(2) {
            prop_assert!(pair[0].end <= pair[1].start);
        }
    }

    #[test]
    fn constant_streams_have_no_episodes(
        n in 1usize..200,
        level in 25.0f64..250.0,
        p in params(),
    ) {
        let w: Vec<HrWindow> = (0..n as i64)
            .map(|i| HrWindow { start: i * 30, len: 30, mean_bpm: level, n_samples: 30 })
            .collect();
        prop_assert!(detect_special_moments(&w, &p).unwrap().is_empty());
    }
}
