mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{arb_xp_case, check_xp_laws, fingerprints};
use umlk::game::{
    self, leaderboard, mood_transition, CheckOutcome, CourseConfig, LeaderboardKind, MoodState, Recap, StudentState,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn xp_laws(case in arb_xp_case()) {
        if let Err(e) = check_xp_laws(&case) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn mood_stays_on_the_ladder(start in -3i8..=3, dxp in -2i64..=2, fixed in 0u32..3, new in 0u32..3, dc in -1.0f64..1.0) {
        let recap = Recap { new_errors: new, fixed_errors: fixed, delta_xp: dxp, delta_completeness: dc, obtainable_xp: 0, completeness: 0.0 };
        let next = mood_transition(MoodState::new(start), &recap);
        prop_assert!((-3..=3).contains(&next.index()));
        prop_assert!((next.index() - start).abs() <= 1);
    }

    #[test]
    fn leaderboard_order_is_total(xps in prop::collection::vec(0u64..600, 0..12)) {
        let cfg = CourseConfig::default();
        let students: Vec<StudentState> = xps.iter().enumerate().map(|(i, &xp)| {
            let mut s = StudentState::new(&format!("s{i}"), &format!("N{}", i % 3), &cfg);
            s.total_xp = xp;
            s.level = game::level_for_xp(xp, &cfg);
            s
        }).collect();
        let board = leaderboard(&LeaderboardKind::XpLevel, &students);
        let mut reversed = students.clone();
        reversed.reverse();
        prop_assert_eq!(&board, &leaderboard(&LeaderboardKind::XpLevel, &reversed));
        for w in board.windows(2) {
            prop_assert!(w[0].total_xp >= w[1].total_xp);
            prop_assert!(w[0].rank <= w[1].rank);
            if w[0].total_xp == w[1].total_xp {
                prop_assert_eq!(w[0].rank, w[1].rank);
            }
        }
    }
}

#[test]
fn quiet_recap_leaves_mood_alone() {
    let quiet = Recap {
        new_errors: 0,
        fixed_errors: 0,
        delta_xp: 0,
        delta_completeness: 0.0,
        obtainable_xp: 50,
        completeness: 0.5,
    };
    for m in -3..=3 {
        assert_eq!(mood_transition(MoodState::new(m), &quiet).index(), m);
    }
}

#[test]
fn worked_example_deduct_restore_complete() {
    let cfg = CourseConfig::default();
    let s0 = StudentState::new("ann", "Ann", &cfg);
    let one_error = CheckOutcome {
        completeness: 0.5,
        fingerprints: fingerprints(0b1),
    };
    let t1 = game::advance(&s0, &cfg, "ex", 100, &one_error).unwrap();
    assert_eq!(t1.recap.obtainable_xp, 95);
    assert_eq!(t1.recap.new_errors, 1);
    assert_eq!(t1.state.mood.index(), -1);

    let fixed = CheckOutcome {
        completeness: 1.0,
        fingerprints: BTreeSet::new(),
    };
    let t2 = game::advance(&t1.state, &cfg, "ex", 100, &fixed).unwrap();
    assert_eq!(t2.recap.obtainable_xp, 100);
    assert_eq!(t2.recap.fixed_errors, 1);
    assert_eq!(t2.state.mood.index(), 0);
    let done = t2.completion.expect("perfect check completes");
    assert_eq!(done.multiplier_applied, 1.25);
    assert_eq!(done.awarded_xp, 125);
    assert_eq!(done.new_level, 2);
    assert_eq!(done.unlocked_props, vec!["glasses".to_string()]);
    assert!(t2.state.has_completed("ex"));
    assert!(game::advance(&t2.state, &cfg, "ex", 100, &fixed).is_err());
}
