use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use protoctl_core::batch::{compute_stats, pearson, RunOutcome, RunResult};
use protoctl_core::collider::{
    ColliderSession, ColliderStatus, CollisionScore, Fragment, FragmentPair, Ghost,
    GhostChecklist, HarvestOutcome, Ratings, RealityBridge, SourceKind, Vision,
};
use protoctl_core::config::{ColliderRules, ReadinessRules};
use protoctl_core::integration::{bridge_to_actions, vision_to_readiness};
use protoctl_core::ledger::{diff_signals, score_rubric, DeltaClass};
use protoctl_core::precog::{
    evaluate_timing_grid, ActionCategory, Competitive, Direction, Evidence, ExternalWindow,
    MarketPhase, Overall, Readiness, Signal, SignalSource, Strength, TimingGrid,
};
use protoctl_core::{Confidence, Timestamp};

fn now() -> Timestamp {
    Utc.with_ymd_and_hms(2026, 5, 1, 0, 0, 0).unwrap()
}

fn vision(r: Ratings) -> Vision {
    Vision {
        id: String::new(),
        collision_id: String::new(),
        name: "n".into(),
        one_line: "o".into(),
        emotion: "e".into(),
        cinematic_image: "i".into(),
        why_now: "w".into(),
        ratings: r,
    }
}

/// Collider session with one Electric collision, ready to crystallize.
fn crystallizing() -> ColliderSession {
    let mut s = ColliderSession::draft("ghosty-0001", "t", now());
    for (text, tag) in [("alpha", "a"), ("beta", "b"), ("gamma", "c")] {
        s.add_fragment(Fragment::new(text, tag, SourceKind::Observation), now())
            .unwrap();
    }
    s.close_harvest(now()).unwrap();
    for id in ["f1", "f2", "f3"] {
        let g = Ghost {
            fragment_id: id.into(),
            structural_description: format!("structure of {id} moving under pressure"),
            checklist: GhostChecklist::all(),
        };
        s.attach_ghost(g, &ColliderRules::default(), now()).unwrap();
    }
    for (p, score) in [
        ("f1:f2", CollisionScore::Electric),
        ("f1:f3", CollisionScore::Boring),
        ("f2:f3", CollisionScore::Interesting),
    ] {
        s.score_collision(FragmentPair::parse(p).unwrap(), score, "why", now())
            .unwrap();
    }
    s.collision_gate(&ColliderRules::default(), now()).unwrap();
    s
}

#[test]
fn vision_gate_matches_min_three_oracle_on_all_625_tuples() {
    let mut s = crystallizing();
    let mut mismatches = 0;
    for n in 1..=5u8 {
        for f in 1..=5u8 {
            for r in 1..=5u8 {
                for t in 1..=5u8 {
                    let oracle = n >= 3 && f >= 3 && r >= 3 && t >= 3;
                    let ratings = Ratings::new(n, f, r, t);
                    let gate = s.crystallize_vision("f1:f2", vision(ratings), now()).unwrap();
                    if gate.advances != oracle || ratings.advances() != oracle {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    assert_eq!(mismatches, 0);
    assert_eq!(s.visions.len(), 625);
}

#[test]
fn out_of_range_rating_names_its_dimension() {
    let mut s = crystallizing();
    let err = s
        .crystallize_vision("f1:f2", vision(Ratings::new(3, 6, 3, 3)), now())
        .unwrap_err();
    use protoctl_core::ValidationError;
    assert_eq!(err.field_path().as_deref(), Some("ratings.feasibility"));
}

/// Axis polarities written out independently of the engine's tables.
fn oracle_polarity(g: &TimingGrid) -> [i32; 4] {
    let m = match g.market_phase {
        MarketPhase::Emergence | MarketPhase::Acceleration => 1,
        MarketPhase::Peak => 0,
        MarketPhase::PreEmergence | MarketPhase::Correction | MarketPhase::Plateau => -1,
    };
    let c = match g.competitive {
        Competitive::FirstMover | Competitive::FastFollower => 1,
        Competitive::Fortifier | Competitive::Undefined => 0,
        Competitive::TooLate => -1,
    };
    let r = match g.readiness {
        Readiness::Ready => 1,
        Readiness::PartiallyReady => 0,
        Readiness::NotReady => -1,
    };
    let e = match g.external_window {
        ExternalWindow::Open => 1,
        ExternalWindow::Opening => 0,
        ExternalWindow::Closed => -1,
    };
    [m, c, r, e]
}

fn all_grids() -> Vec<TimingGrid> {
    let mut out = Vec::new();
    for m in MarketPhase::ALL {
        for c in Competitive::ALL {
            for r in Readiness::ALL {
                for e in ExternalWindow::ALL {
                    out.push(TimingGrid::new(m, c, r, e));
                }
            }
        }
    }
    out
}

#[test]
fn timing_grid_matches_polarity_oracle_on_all_270_grids() {
    let grids = all_grids();
    assert_eq!(grids.len(), 270);
    let mut mismatches = 0;
    for g in &grids {
        let p = oracle_polarity(g);
        let sum: i32 = p.iter().sum();
        let overall = if sum >= 3 {
            Overall::Go
        } else if sum >= 1 {
            Overall::Soon
        } else {
            Overall::Watch
        };
        let escalate = p.iter().all(|&x| x == 1) || p.iter().all(|&x| x == -1);
        let j = evaluate_timing_grid(g);
        if j.overall != overall || j.polarity_sum != sum || j.escalated_contrarian_required != escalate {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn improving_an_axis_never_lowers_the_judgment() {
    let rank = |o: Overall| match o {
        Overall::Watch => 0,
        Overall::Soon => 1,
        Overall::Go => 2,
    };
    let grids = all_grids();
    for a in &grids {
        for b in &grids {
            let (pa, pb) = (oracle_polarity(a), oracle_polarity(b));
            if pa.iter().zip(&pb).all(|(x, y)| x <= y) {
                assert!(rank(evaluate_timing_grid(a).overall) <= rank(evaluate_timing_grid(b).overall));
            }
        }
    }
}

const TAGS: [&str; 6] = ["music", "finance", "biology", "logistics", "theatre", "law"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn preflight_aborts_exactly_the_homogeneous_sets(
        picks in prop::collection::vec(0usize..TAGS.len(), 3..=5),
        force_same in any::<bool>(),
        upper in any::<bool>(),
    ) {
        let tags: Vec<String> = picks
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let t = if force_same { TAGS[picks[0]] } else { TAGS[p] };
                // Case and padding do not make two tags different.
                if upper && i % 2 == 0 { format!(" {} ", t.to_uppercase()) } else { t.to_string() }
            })
            .collect();
        let distinct: std::collections::BTreeSet<String> =
            tags.iter().map(|t| t.trim().to_lowercase()).collect();
        let mut s = ColliderSession::draft("ghosty-0001", "t", now());
        for (i, tag) in tags.iter().enumerate() {
            s.add_fragment(Fragment::new(format!("fragment {i}"), tag.clone(), SourceKind::Observation), now()).unwrap();
        }
        let outcome = s.close_harvest(now()).unwrap();
        if distinct.len() == 1 {
            prop_assert_eq!(outcome, HarvestOutcome::AbortedPreflight);
            prop_assert_eq!(s.status, ColliderStatus::AbortedPreflight);
            prop_assert!(s.ghosts.is_empty());
        } else {
            prop_assert_eq!(outcome, HarvestOutcome::Ghosting);
            prop_assert_eq!(s.status, ColliderStatus::Ghosting);
        }
    }
}

fn signal_strategy() -> impl Strategy<Value = Vec<Signal>> {
    prop::collection::btree_map(0u8..20, (0usize..3, 0usize..3), 0..12).prop_map(|m| {
        m.into_iter()
            .map(|(k, (s, d))| Signal {
                key: format!("k{k:02}"),
                description: "d".into(),
                evidence: vec![Evidence { claim: "c".into(), source: "s".into() }],
                strength: [Strength::Weak, Strength::Emerging, Strength::Strong][s],
                direction: [Direction::Decelerating, Direction::Stable, Direction::Accelerating][d],
                confidence: Some(Confidence::Reported),
                source_kind: SignalSource::Numeric,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn diff_is_reflexive_dual_and_total(a in signal_strategy(), b in signal_strategy()) {
        let same = diff_signals(&a, &a).unwrap();
        prop_assert_eq!(same.len(), a.len());
        prop_assert!(same.iter().all(|d| d.classification == DeltaClass::Stable && !d.priority));

        let ab = diff_signals(&a, &b).unwrap();
        let ba = diff_signals(&b, &a).unwrap();
        for d in &ab {
            let mirror = ba.iter().find(|x| x.signal_key == d.signal_key).unwrap();
            match d.classification {
                DeltaClass::New => prop_assert_eq!(mirror.classification, DeltaClass::Dead),
                DeltaClass::Dead => prop_assert_eq!(mirror.classification, DeltaClass::New),
                DeltaClass::Strengthened => prop_assert_eq!(mirror.classification, DeltaClass::Weakened),
                DeltaClass::Weakened => prop_assert_eq!(mirror.classification, DeltaClass::Strengthened),
                DeltaClass::Stable => prop_assert_eq!(mirror.classification, DeltaClass::Stable),
            }
        }
        let mut union: Vec<&str> = a.iter().chain(&b).map(|s| s.key.as_str()).collect();
        union.sort_unstable();
        union.dedup();
        let keys: Vec<&str> = ab.iter().map(|d| d.signal_key.as_str()).collect();
        prop_assert_eq!(keys, union);
    }

    #[test]
    fn rubric_total_is_the_sum(scores in prop::collection::vec(0i64..=10, 8)) {
        let r = score_rubric("x", &scores, None).unwrap();
        prop_assert_eq!(i64::from(r.total), scores.iter().sum::<i64>());
        prop_assert!(r.total <= 80);
    }

    #[test]
    fn pearson_is_one_on_affine_images(
        xs in prop::collection::vec(-100.0f64..100.0, 3..30),
        slope in 0.1f64..10.0,
        offset in -50.0f64..50.0,
    ) {
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let up: Vec<f64> = xs.iter().map(|x| slope * x + offset).collect();
        let down: Vec<f64> = xs.iter().map(|x| -slope * x + offset).collect();
        prop_assert!((pearson(&xs, &up).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!((pearson(&xs, &down).unwrap() + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn batch_stats_ignore_run_order(
        runs in prop::collection::vec((1usize..=10, 0usize..=10, prop::collection::vec((1u8..=5, 1u8..=5), 0..3)), 1..12),
        seed in any::<u64>(),
    ) {
        let outcomes: Vec<RunOutcome> = runs
            .iter()
            .enumerate()
            .map(|(i, (pairs, electric, vs))| {
                let visions: Vec<Ratings> = vs.iter().map(|&(n, f)| Ratings::new(n, f, 4, 4)).collect();
                let result = if visions.iter().any(Ratings::advances) { RunResult::Success } else { RunResult::Failure };
                RunOutcome {
                    pairing_label: format!("r{i}"),
                    fragment_count: 4,
                    pair_count: *pairs,
                    electric_count: (*electric).min(*pairs),
                    interesting_count: 0,
                    boring_count: pairs - (*electric).min(*pairs),
                    visions,
                    result,
                    terminal_status: ColliderStatus::Completed,
                }
            })
            .collect();
        let mut shuffled = outcomes.clone();
        let n = shuffled.len();
        for i in 0..n {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % n as u64) as usize;
            shuffled.swap(i, j);
        }
        let a = compute_stats(&outcomes).unwrap();
        let b = compute_stats(&shuffled).unwrap();
        prop_assert_eq!(a.success_rate + a.failure_rate, 1.0);
        prop_assert_eq!(a.success_count, b.success_count);
        prop_assert_eq!(a.total_visions, b.total_visions);
        prop_assert!((a.mean_hit_rate_all - b.mean_hit_rate_all).abs() < 1e-12);
        match (a.novelty_feasibility_r, b.novelty_feasibility_r) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn bridge_yields_one_first_step_and_one_kill_per_condition(kills in prop::collection::vec("[a-z]{1,12}", 1..6)) {
        let bridge = RealityBridge {
            vision_id: "v1".into(),
            mvv: "m".into(),
            existing_capabilities: vec![],
            kill_conditions: kills.clone(),
            first_step_24h: "call someone".into(),
        };
        let items = bridge_to_actions(&vision(Ratings::new(3, 3, 3, 3)), &bridge);
        prop_assert_eq!(items.len(), 1 + kills.len());
        prop_assert_eq!(items.iter().filter(|a| a.category == ActionCategory::Now).count(), 1);
        let triggers: Vec<&String> = items.iter().filter(|a| a.category == ActionCategory::Kill).map(|a| &a.trigger).collect();
        prop_assert_eq!(triggers, kills.iter().collect::<Vec<_>>());
    }
}

#[test]
fn readiness_is_monotone_in_feasibility() {
    let rank = |r: Readiness| Readiness::ALL.iter().position(|x| *x == r).unwrap();
    let rules = ReadinessRules::default();
    let mut last = 0;
    for f in 1..=5 {
        let r = rank(vision_to_readiness(&vision(Ratings::new(3, f, 3, 3)), &rules));
        assert!(r >= last);
        last = r;
    }
    assert_eq!(vision_to_readiness(&vision(Ratings::new(3, 1, 3, 3)), &rules), Readiness::NotReady);
}

#[derive(Debug, Clone)]
enum Op {
    Fragment(usize),
    Harvest,
    Ghost(usize),
    Score(usize, usize, u8),
    Gate,
    Vision(u8),
    Bridge(usize),
    Complete,
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..3).prop_map(Op::Fragment),
        Just(Op::Harvest),
        (0usize..5).prop_map(Op::Ghost),
        (0usize..5, 0usize..5, 0u8..3).prop_map(|(a, b, s)| Op::Score(a, b, s)),
        Just(Op::Gate),
        (1u8..=5).prop_map(Op::Vision),
        (0usize..3).prop_map(Op::Bridge),
        Just(Op::Complete),
    ]
}

fn linear_index(s: ColliderStatus) -> Option<usize> {
    ColliderStatus::LINEAR.iter().position(|x| *x == s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Whatever the operator tries, the session only moves forward along the
    /// step order or into a terminal abort, and a failed call changes nothing.
    #[test]
    fn collider_status_only_moves_forward(ops in prop::collection::vec(op_strategy(), 0..80)) {
        let rules = ColliderRules::default();
        let mut s = ColliderSession::draft("ghosty-0001", "t", now());
        let mut prev = s.status;
        for op in ops {
            let before = s.clone();
            let ok = match op {
                Op::Fragment(t) => s.add_fragment(Fragment::new("x y", TAGS[t], SourceKind::Observation), now()).is_ok(),
                Op::Harvest => s.close_harvest(now()).is_ok(),
                Op::Ghost(i) => s.attach_ghost(Ghost {
                    fragment_id: format!("f{}", i + 1),
                    structural_description: "pressure moving through a narrow channel".into(),
                    checklist: GhostChecklist::all(),
                }, &rules, now()).is_ok(),
                Op::Score(a, b, sc) => {
                    let score = [CollisionScore::Boring, CollisionScore::Interesting, CollisionScore::Electric][sc as usize];
                    s.score_collision(FragmentPair::new(format!("f{}", a + 1), format!("f{}", b + 1)), score, "r", now()).is_ok()
                }
                Op::Gate => s.collision_gate(&rules, now()).is_ok(),
                Op::Vision(r) => {
                    let id = s.electric_ids().first().cloned().unwrap_or_default();
                    s.crystallize_vision(&id, vision(Ratings::new(r, r, r, r)), now()).is_ok()
                }
                Op::Bridge(v) => s.attach_bridge(&format!("v{}", v + 1), RealityBridge {
                    vision_id: String::new(),
                    mvv: "m".into(),
                    existing_capabilities: vec![],
                    kill_conditions: vec!["k".into()],
                    first_step_24h: "f".into(),
                }, now()).is_ok(),
                Op::Complete => s.complete(now()).is_ok(),
            };
            if !ok {
                prop_assert_eq!(&s, &before);
            }
            if prev.is_terminal() {
                prop_assert_eq!(s.status, prev);
            } else if let (Some(a), Some(b)) = (linear_index(prev), linear_index(s.status)) {
                prop_assert!(b == a || b == a + 1, "{:?} -> {:?}", prev, s.status);
            } else {
                prop_assert!(s.status.is_terminal());
            }
            prev = s.status;
        }
    }
}
