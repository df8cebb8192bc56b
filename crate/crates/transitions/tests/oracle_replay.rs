use graph_core::synth::{random_graph, max_arcs};
use graph_core::{Arc, SemanticGraph, Sentence, ROOT_LABEL};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transitions::{oracle, replay, Configuration, Transition};

/// Ten-token worked example: three multi-headed tokens, a token with two
/// dependents on opposite sides, and three singletons.
fn worked_example() -> SemanticGraph {
    let sentence = Sentence::from_triples(&[
        ("The", "the", "DT"),
        ("results", "result", "NNS"),
        ("were", "be", "VBD"),
        ("in", "in", "IN"),
        ("line", "line", "NN"),
        ("with", "with", "IN"),
        ("analysts", "analyst", "NNS"),
        ("'", "'", "POS"),
        ("expectations", "expectation", "NNS"),
        (".", ".", "."),
    ])
    .unwrap();
    let arcs = vec![
        Arc::new(1, 2, "BV").unwrap(),
        Arc::new(4, 2, "ARG1").unwrap(),
        Arc::new(0, 4, ROOT_LABEL).unwrap(),
        Arc::new(6, 4, "ARG2").unwrap(),
        Arc::new(4, 5, "ARG2").unwrap(),
        Arc::new(6, 9, "ARG1").unwrap(),
        Arc::new(7, 9, "poss").unwrap(),
    ];
    SemanticGraph::from_arcs(sentence, arcs).unwrap()
}

#[test]
fn worked_example_oracle_sequence() {
    let gold = worked_example();
    let sequence = oracle(&gold).unwrap();
    let expected = vec![
        Transition::Shift,
        Transition::attach(1, "BV"),
        Transition::attach(4, "ARG1"),
        Transition::Shift,
        Transition::Shift,
        Transition::attach(0, ROOT_LABEL),
        Transition::attach(6, "ARG2"),
        Transition::Shift,
        Transition::attach(4, "ARG2"),
        Transition::Shift,
        Transition::Shift,
        Transition::Shift,
        Transition::Shift,
        Transition::attach(6, "ARG1"),
        Transition::attach(7, "poss"),
        Transition::Shift,
        Transition::Shift,
    ];
    assert_eq!(sequence, expected);
    assert_eq!(sequence.len(), 17);
    let rebuilt = replay(gold.sentence().clone(), &sequence).unwrap();
    assert_eq!(rebuilt, gold);
}

/// Legality cross-checked against a from-scratch DFS on the built graph.
fn dfs_would_cycle(graph: &SemanticGraph, head: usize, dependent: usize) -> bool {
    // Cycle iff head is reachable from dependent via existing arcs.
    let mut stack = vec![dependent];
    let mut visited = vec![false; graph.n() + 1];
    visited[dependent] = true;
    while let Some(v) = stack.pop() {
        if v == head {
            return true;
        }
        for d in graph.dependents_of(v) {
            if !visited[d] {
                visited[d] = true;
                stack.push(d);
            }
        }
    }
    false
}

#[test]
fn legality_matches_naive_dfs_along_random_walks() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for round in 0..150 {
        let n = 2 + (round % 9);
        let gold = random_graph(&mut rng, n, max_arcs(n).min(2 * n) / 2, None).unwrap();
        let mut config = Configuration::initial(gold.sentence().clone());
        for transition in oracle(&gold).unwrap() {
            // Before each gold step, check every candidate attach.
            for head in 0..=n {
                if head == config.focus() {
                    continue;
                }
                let candidate = Transition::attach(head, "probe");
                let expected = !config.graph().contains_arc(head, config.focus())
                    && !dfs_would_cycle(config.graph(), head, config.focus());
                assert_eq!(
                    config.is_legal(&candidate),
                    expected,
                    "round {round}, focus {}, head {head}",
                    config.focus()
                );
            }
            config.apply(&transition).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn oracle_round_trip_on_random_dags(
        seed in 0u64..1_000_000,
        n in 1usize..20,
        density in 0.0f64..=1.3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arcs = ((density * n as f64).round() as usize).min(max_arcs(n));
        let gold = random_graph(&mut rng, n, arcs, None).unwrap();
        let sequence = oracle(&gold).unwrap();
        prop_assert_eq!(sequence.len(), n + gold.arc_count());
        let shifts = sequence.iter().filter(|t| **t == Transition::Shift).count();
        prop_assert_eq!(shifts, n);
        let rebuilt = replay(gold.sentence().clone(), &sequence).unwrap();
        prop_assert_eq!(rebuilt, gold);
    }

    #[test]
    fn arc_count_equals_attach_count_on_any_legal_walk(
        seed in 0u64..1_000_000,
        n in 1usize..12,
    ) {
        // Random legal walk driven by the legality predicate itself.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sentence = random_graph(&mut rng, n, 0, None).unwrap().sentence().clone();
        let mut config = Configuration::initial(sentence);
        let mut attaches = 0usize;
        while !config.is_terminal() {
            let head = rng.random_range(0..=n);
            let candidate = Transition::attach(head, "x");
            if rng.random_bool(0.6) && config.is_legal(&candidate) && head != 0 {
                config.apply(&candidate).unwrap();
                attaches += 1;
            } else {
                config.apply(&Transition::Shift).unwrap();
            }
        }
        prop_assert_eq!(config.graph().arc_count(), attaches);
        prop_assert!(config.graph().is_acyclic());
    }
}
