//! Property tests for the invariants of each module.

use gea_core::analytics::stats::{benjamini_hochberg, pearson, signed_bias};
use gea_core::analytics::{
    bootstrap_ci, canonical_sort, confusion_matrix, proficiency_accuracy, split, BootstrapSpec, PairedObservation,
    ResampleUnit, Statistic,
};
use gea_core::backends::{parse_score_reply, ScoreReply};
use gea_core::cohort::{describe_profile, sample_cohort};
use gea_core::engine::{aggregate_score, route_scores, Rounding, Terminal};
use gea_core::taxonomy::{Path, SkillId, SkillSet, SlotKey, Stage};
use gea_core::GeaConfig;
use proptest::prelude::*;

/// The textbook BH procedure: reject every p at or below the largest
/// sorted p(k) with p(k) <= k alpha / m.
fn bh_brute_force(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = (1..=m).rev().find(|&k| sorted[k - 1] <= k as f64 * alpha / m as f64);
    match cut {
        None => vec![false; m],
        Some(k) => p.iter().map(|&x| x <= sorted[k - 1]).collect(),
    }
}

fn rank(t: Terminal) -> u8 {
    match t {
        Terminal::Beginner => 0,
        Terminal::Intermediate => 1,
        Terminal::Advanced => 2,
    }
}

fn varied_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.0f64..1.0, n),
            proptest::collection::vec(0.0f64..1.0, n),
        )
    })
}

fn observations() -> impl Strategy<Value = Vec<PairedObservation>> {
    proptest::collection::vec((0u8..24, 0.0f64..=1.0, 0.0f64..=1.0, 0u8..10, 0usize..6), 1..120).prop_map(|v| {
        v.into_iter()
            .map(|(s, t, o, st, slot)| PairedObservation {
                skill: SkillId::from_index(s as usize),
                true_value: t,
                observed_value: o,
                student_id: format!("{st:03}"),
                slot: SlotKey::all()[slot],
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bh_matches_brute_force(p in proptest::collection::vec(0.0f64..=1.0, 1..=50), alpha in 0.001f64..0.2) {
        prop_assert_eq!(benjamini_hochberg(&p, alpha), bh_brute_force(&p, alpha));
    }

    #[test]
    fn bh_with_ties_matches_brute_force(idx in proptest::collection::vec(0usize..5, 1..=50)) {
        let grid = [0.001, 0.01, 0.02, 0.04, 0.5];
        let p: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        prop_assert_eq!(benjamini_hochberg(&p, 0.05), bh_brute_force(&p, 0.05));
    }

    #[test]
    fn pearson_is_affine_invariant((xs, ys) in varied_pairs(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let Some(r) = pearson(&xs, &ys).unwrap() else { return Ok(()); };
        let sx: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let sy: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
        let rx = pearson(&sx, &ys).unwrap().unwrap();
        let ry = pearson(&xs, &sy).unwrap().unwrap();
        prop_assert!((r - rx).abs() < 1e-9 && (r - ry).abs() < 1e-9);
        // negative scale flips the sign
        let neg: Vec<f64> = ys.iter().map(|y| -a * y).collect();
        prop_assert!((r + pearson(&xs, &neg).unwrap().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn pearson_is_bounded((xs, ys) in varied_pairs()) {
        if let Some(r) = pearson(&xs, &ys).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn bias_is_linear_in_shift((xs, ys) in varied_pairs(), c in -1.0f64..1.0) {
        let b = signed_bias(&xs, &ys).unwrap();
        let shifted: Vec<f64> = ys.iter().map(|y| y + c).collect();
        prop_assert!((signed_bias(&xs, &shifted).unwrap() - (b + c)).abs() < 1e-12);
    }

    #[test]
    fn scale_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let cfg = GeaConfig::default_config().unwrap();
        let s = &cfg.taxonomy.scale;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(s.to_proficiency(lo).unwrap() <= s.to_proficiency(hi).unwrap());
    }

    #[test]
    fn aggregate_is_permutation_invariant(
        values in proptest::collection::vec(0.0f64..=1.0, 1..=24),
        seed in any::<u64>(),
    ) {
        let mut entries = values.clone();
        entries.resize(24, -1.0);
        let base = aggregate_score(&entries, Rounding::HalfUp).unwrap();
        // deterministic shuffle of all positions, sentinels included
        let mut shuffled = entries.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(aggregate_score(&shuffled, Rounding::HalfUp).unwrap(), base);
    }

    #[test]
    fn aggregate_matches_mean_and_round(values in proptest::collection::vec(0u32..=100, 1..=24)) {
        // two-decimal inputs make the exact mean a rational we can round in integers
        let entries: Vec<f64> = values.iter().map(|&v| v as f64 / 100.0).collect();
        let (sum, n) = (values.iter().sum::<u32>(), values.len() as u32);
        // round(sum / n) half-up, in integer arithmetic
        let expected = (2 * sum + n) / (2 * n);
        prop_assert_eq!(aggregate_score(&entries, Rounding::HalfUp).unwrap(), expected);
    }

    #[test]
    fn routing_is_monotone_in_theta(
        s1 in proptest::array::uniform2(0u32..=100),
        high in proptest::array::uniform2(0u32..=100),
        low in proptest::array::uniform2(0u32..=100),
        t1 in 0.0f64..=101.0,
        t2 in 0.0f64..=101.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let stage2 = |p| Some(if p == Path::High { high } else { low });
        let (p_lo, term_lo) = route_scores(s1, stage2, lo).unwrap();
        let (p_hi, term_hi) = route_scores(s1, stage2, hi).unwrap();
        prop_assert!(!(p_lo == Path::Low && p_hi == Path::High));
        prop_assert!(rank(term_hi) <= rank(term_lo));
    }

    #[test]
    fn confusion_rows_sum_to_one_and_trace_is_exact_rate(pairs in observations()) {
        let cfg = GeaConfig::default_config().unwrap();
        let scale = &cfg.taxonomy.scale;
        let m = confusion_matrix(&pairs, scale).unwrap();
        prop_assert_eq!(m.row_counts.iter().sum::<usize>(), pairs.len());
        for (rates, &n) in m.rates.iter().zip(&m.row_counts) {
            match rates {
                Some(r) => prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9),
                None => prop_assert_eq!(n, 0),
            }
        }
        let acc = proficiency_accuracy(&pairs, scale).unwrap();
        prop_assert!((m.trace_rate().unwrap() - acc.exact).abs() < 1e-12);
        prop_assert!(acc.exact <= acc.adjacent);
    }

    #[test]
    fn bootstrap_ignores_input_order_after_canonical_sort(mut pairs in observations(), seed in any::<u64>()) {
        let spec = BootstrapSpec { resamples: 50, level: 0.9, seed, unit: ResampleUnit::Observation, max_redraws: 1000 };
        let mut reversed = pairs.clone();
        reversed.reverse();
        canonical_sort(&mut pairs);
        canonical_sort(&mut reversed);
        let (x1, y1) = split(&pairs);
        let (x2, y2) = split(&reversed);
        prop_assert_eq!(
            bootstrap_ci(&x1, &y1, None, Statistic::Bias, &spec).unwrap(),
            bootstrap_ci(&x2, &y2, None, Statistic::Bias, &spec).unwrap()
        );
    }

    #[test]
    fn well_formed_replies_round_trip(values in proptest::collection::vec(0u32..=100, 24), mask in 1u32..(1 << 24)) {
        let mut applicable = SkillSet::empty();
        for id in SkillId::all().filter(|id| mask & (1 << id.index()) != 0) {
            applicable.insert(id);
        }
        let vector: Vec<f64> = SkillId::all()
            .map(|id| if applicable.contains(id) { values[id.index()] as f64 / 100.0 } else { -1.0 })
            .collect();
        let score = aggregate_score(&vector, Rounding::HalfUp).unwrap();
        let reply = ScoreReply { score: score as i64, feedback: "ok".into(), skill_vector: vector };
        let raw = serde_json::to_string(&reply).unwrap();
        let parsed = parse_score_reply(&raw, applicable, Rounding::HalfUp).unwrap();
        let again = ScoreReply {
            score: parsed.score as i64,
            feedback: parsed.feedback,
            skill_vector: parsed.vector.entries().to_vec(),
        };
        prop_assert_eq!(serde_json::to_string(&again).unwrap(), raw);
        prop_assert_eq!(parsed.reported_score, None);
    }

    #[test]
    fn replies_with_extra_keys_are_rejected(key in "[a-z]{1,8}") {
        prop_assume!(!["score", "feedback", "skill_vector"].contains(&key.as_str()));
        let cfg = GeaConfig::default_config().unwrap();
        let slot = cfg.taxonomy.slot(SlotKey::new(Stage::Stage2High, 2)).unwrap();
        let vector: Vec<f64> = SkillId::all().map(|id| if slot.applicable.contains(id) { 0.5 } else { -1.0 }).collect();
        let raw = serde_json::json!({"score": 50, "feedback": "x", "skill_vector": vector, key: 1}).to_string();
        prop_assert!(parse_score_reply(&raw, slot.applicable, Rounding::HalfUp).is_err());
    }

    #[test]
    fn descriptor_level_matches_stored_score(seed in any::<u64>()) {
        let cfg = GeaConfig::default_config().unwrap();
        for p in sample_cohort(5, seed, &cfg.cohort, &cfg.taxonomy) {
            for line in describe_profile(&p, SkillSet::full(), &cfg.taxonomy, &cfg.descriptors).unwrap() {
                let level = cfg.taxonomy.scale.to_proficiency(p.skill(line.skill)).unwrap();
                prop_assert_eq!(cfg.taxonomy.scale.name(level), line.level.as_str());
            }
        }
    }
}
