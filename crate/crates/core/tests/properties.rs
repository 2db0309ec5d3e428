use std::collections::BTreeMap;

use proptest::prelude::*;

use mechalign::report::{
    build_profiles, classify, csv_string, misalignment, quadrant, read_csv, Metric, QuadrantLabel,
    DEFAULT_AXIS_EPSILON,
};
use mechalign::{
    alignment_value, compute_chart, dist_mean, wasserstein1, ChartOptions, Condition, Corpus,
    EmpiricalDistribution, MechanicId, Outcome, Playtrace, Predicate,
};

const MECHANICS: [&str; 3] = ["jump", "shoot", "collect"];

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![
        Just(Outcome::Win),
        Just(Outcome::Loss),
        Just(Outcome::Timeout)
    ]
}

prop_compose! {
    fn playtrace(episode: u64)(
        agent in 0..3usize,
        outcome in outcome(),
        counts in prop::collection::vec(prop::option::of(0..25u64), MECHANICS.len()),
        ticks in 1..500u64,
        score in prop::option::of(-50..50i64),
    ) -> Playtrace {
        Playtrace {
            game: "toy".into(),
            level: "l0".into(),
            agent: format!("agent{agent}"),
            episode,
            seed: episode * 7,
            outcome,
            ticks,
            counts: MECHANICS
                .iter()
                .zip(counts)
                .filter_map(|(m, c)| c.map(|c| (MechanicId::new(*m).unwrap(), c)))
                .collect(),
            score,
        }
    }
}

fn corpus() -> impl Strategy<Value = Corpus> {
    (1..30usize)
        .prop_flat_map(|n| (0..n as u64).map(playtrace).collect::<Vec<_>>())
        .prop_map(|traces| Corpus::new(traces, [MechanicId::new("idle").unwrap()]).unwrap())
}

/// Distributions whose weights are multiples of 1/`atoms`, returned with the
/// atom multiset they expand to.
fn lattice_distribution(atoms: usize) -> impl Strategy<Value = (EmpiricalDistribution, Vec<f64>)> {
    prop::collection::vec(0..=40u32, atoms).prop_map(move |mut points| {
        points.sort_unstable();
        let xs: Vec<f64> = points.iter().map(|&k| k as f64 / 40.0).collect();
        let mut grouped: BTreeMap<u32, usize> = BTreeMap::new();
        for &k in &points {
            *grouped.entry(k).or_default() += 1;
        }
        let d = EmpiricalDistribution::new(
            grouped.keys().map(|&k| k as f64 / 40.0).collect(),
            grouped.values().map(|&c| c as f64 / atoms as f64).collect(),
        )
        .unwrap();
        (d, xs)
    })
}

fn distribution() -> impl Strategy<Value = EmpiricalDistribution> {
    (1..12usize)
        .prop_flat_map(lattice_distribution)
        .prop_map(|(d, _)| d)
}

proptest! {
    #[test]
    fn trace_log_round_trip(c in corpus()) {
        let text = c.to_log_string();
        let back = Corpus::parse_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_log_string(), text);
    }

    #[test]
    fn filter_partitions(c in corpus()) {
        let wins = c.select(&Condition::Win).unwrap();
        let rest = c.select(&Condition::Predicate(Predicate::NonWin)).unwrap();
        let mut all: Vec<usize> = wins.iter().chain(&rest).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..c.len()).collect::<Vec<_>>());

        let losses = c.select(&Condition::Predicate(Predicate::Loss)).unwrap();
        let timeouts = c.select(&Condition::Predicate(Predicate::Timeout)).unwrap();
        prop_assert_eq!(losses.len() + timeouts.len(), rest.len());

        let by_agent: usize = c
            .agents()
            .map(|a| c.select(&Condition::agent(a)).unwrap().len())
            .sum();
        prop_assert_eq!(by_agent, c.len());
    }

    #[test]
    fn wasserstein_matches_sorted_atom_matching(
        ((p, xs), (q, ys)) in (1..12usize)
            .prop_flat_map(|n| (lattice_distribution(n), lattice_distribution(n)))
    ) {
        // With the same number of equal-mass atoms, the optimal plan pairs
        // the sorted atoms of one side with the sorted atoms of the other.
        let oracle: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()).sum::<f64>() / xs.len() as f64;
        prop_assert!((wasserstein1(&p, &q) - oracle).abs() <= 1e-12);
    }

    #[test]
    fn wasserstein_is_a_metric(p in distribution(), q in distribution(), r in distribution()) {
        let pq = wasserstein1(&p, &q);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!((pq - wasserstein1(&q, &p)).abs() <= 1e-12);
        prop_assert_eq!(wasserstein1(&p, &p), 0.0);
        if p != q {
            prop_assert!(pq > 0.0);
        }
        prop_assert!(wasserstein1(&p, &r) <= pq + wasserstein1(&q, &r) + 1e-12);
    }

    #[test]
    fn wasserstein_bounds_mean_gap(p in distribution(), q in distribution()) {
        prop_assert!((dist_mean(&p) - dist_mean(&q)).abs() <= wasserstein1(&p, &q) + 1e-12);
    }

    #[test]
    fn wasserstein_is_translation_invariant(p in distribution(), q in distribution(), shift in 0..=20u32) {
        let top = p.support().last().unwrap().max(*q.support().last().unwrap());
        let shift = (shift as f64 / 40.0).min(1.0 - top);
        let moved = |d: &EmpiricalDistribution| {
            EmpiricalDistribution::new(
                d.support().iter().map(|x| x + shift).collect(),
                d.weights().to_vec(),
            )
            .unwrap()
        };
        prop_assert!((wasserstein1(&moved(&p), &moved(&q)) - wasserstein1(&p, &q)).abs() <= 1e-12);
    }

    #[test]
    fn chart_signs_follow_means(c in corpus()) {
        let chart = compute_chart(&c, None, ChartOptions { no_win_fallback: true }).unwrap();
        for p in &chart.points {
            prop_assert!((0.0..=1.0).contains(&p.d_win) && (0.0..=1.0).contains(&p.d_agent));
            prop_assert_eq!(p.systemic, p.s_win as f64 * p.d_win);
            prop_assert_eq!(p.agential, p.s_agent as f64 * p.d_agent);
            let gap = p.mean_agent - p.mean_pooled;
            if gap.abs() > 1e-12 {
                prop_assert_eq!(p.s_agent as f64, gap.signum());
            }
            // Equal means with different shapes: no direction, whatever the distance.
            if gap.abs() <= 1e-12 {
                prop_assert_eq!(p.s_agent, 0);
            }
            if !chart.no_win_fallback {
                let v = alignment_value(&c, &p.mechanic, &Condition::Win).unwrap();
                prop_assert_eq!(v, p.systemic);
            }
        }
        for m in c.mechanic_universe() {
            prop_assert_eq!(alignment_value(&c, m, &Condition::All).unwrap(), 0.0);
        }
    }

    #[test]
    fn csv_round_trip(c in corpus()) {
        let chart = compute_chart(&c, None, ChartOptions { no_win_fallback: true }).unwrap();
        let text = csv_string(&chart);
        let rows = read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(rows.len(), chart.points.len());
        for (row, p) in rows.iter().zip(&chart.points) {
            prop_assert_eq!(&row.mechanic, p.mechanic.as_str());
            prop_assert_eq!(&row.agent, &p.agent_id);
            let six = |x: f64| format!("{x:.6}").parse::<f64>().unwrap();
            prop_assert_eq!(row.systemic, six(p.systemic));
            prop_assert_eq!(row.agential, six(p.agential));
        }
        prop_assert_eq!(csv_string(&chart), text);
    }

    #[test]
    fn quadrant_is_total_and_sign_consistent(e in -1.0..=1.0f64, i in -1.0..=1.0f64) {
        let label = quadrant(e, i, DEFAULT_AXIS_EPSILON);
        match label {
            QuadrantLabel::Q1_aligned_positive | QuadrantLabel::Q3_aligned_negative => {
                prop_assert!(e * i > 0.0)
            }
            QuadrantLabel::Q2_misaligned_agent_positive | QuadrantLabel::Q4_misaligned_agent_negative => {
                prop_assert!(e * i < 0.0)
            }
            QuadrantLabel::axis_systemic => prop_assert!(i.abs() <= DEFAULT_AXIS_EPSILON),
            QuadrantLabel::axis_agential => prop_assert!(e.abs() <= DEFAULT_AXIS_EPSILON),
            QuadrantLabel::origin_neutral => {
                prop_assert!(e.abs() <= DEFAULT_AXIS_EPSILON && i.abs() <= DEFAULT_AXIS_EPSILON)
            }
        }
        prop_assert_eq!(label.as_str().parse::<QuadrantLabel>().unwrap(), label);
        prop_assert!((0.0..=2.0).contains(&misalignment(e, i)));
    }

    #[test]
    fn classification_recovers_relabeled_archetype(copies in 2..6usize) {
        // Two archetypes with disjoint behavior; the unknown repeats one of them.
        let make = |agent: &str, episode: u64, outcome: Outcome, jump: u64| Playtrace {
            game: "toy".into(),
            level: "l0".into(),
            agent: agent.into(),
            episode,
            seed: episode,
            outcome,
            ticks: 10,
            counts: [(MechanicId::new("jump").unwrap(), jump)].into_iter().collect(),
            score: None,
        };
        let mut traces = Vec::new();
        for e in 0..copies as u64 {
            traces.push(make("jumper", e, Outcome::Win, 9));
            traces.push(make("sitter", e, Outcome::Loss, 0));
        }
        let reference = Corpus::new(traces, []).unwrap();
        let profiles = build_profiles(&reference).unwrap();
        let unknown: Vec<Playtrace> = (0..copies as u64)
            .map(|e| make("visitor", e, Outcome::Win, 9))
            .collect();
        let unknown = Corpus::new(unknown, []).unwrap();
        for metric in [Metric::L1, Metric::L2] {
            let ranked = classify(&profiles, &unknown, &reference, metric).unwrap();
            prop_assert_eq!(&ranked[0].agent, "jumper");
            prop_assert!(ranked[0].distance < ranked[1].distance);
        }
    }
}
