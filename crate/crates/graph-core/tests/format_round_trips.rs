use std::io::Cursor;

use graph_core::synth::{generate_corpus, SynthConfig};
use graph_core::{jsonl, sdp};
use proptest::prelude::*;

fn corpus_strategy() -> impl Strategy<Value = Vec<graph_core::SemanticGraph>> {
    (1u64..10_000, 1usize..6, 0.0f64..=1.2).prop_map(|(seed, sentences, ratio)| {
        generate_corpus(&SynthConfig {
            sentences,
            min_len: 1,
            max_len: 12,
            arc_ratio: ratio,
            singleton_share: None,
            seed,
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sdp_round_trip(corpus in corpus_strategy()) {
        let mut buf = Vec::new();
        sdp::write_sdp_corpus(&corpus, &mut buf).unwrap();
        let back = sdp::read_sdp_corpus(Cursor::new(&buf)).unwrap();
        prop_assert_eq!(&corpus, &back);
    }

    #[test]
    fn jsonl_round_trip(corpus in corpus_strategy()) {
        let mut buf = Vec::new();
        jsonl::write_jsonl_corpus(&corpus, &mut buf).unwrap();
        let back = jsonl::read_jsonl_corpus(Cursor::new(&buf)).unwrap();
        prop_assert_eq!(&corpus, &back);
    }

    #[test]
    fn generated_graphs_are_valid_dags(corpus in corpus_strategy()) {
        for graph in &corpus {
            prop_assert!(graph.is_acyclic());
            // No duplicate (head, dependent) pairs by construction of the arc map.
            let pairs: Vec<(usize, usize)> = graph.arcs().map(|(h, d, _)| (h, d)).collect();
            let mut dedup = pairs.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(pairs.len(), dedup.len());
        }
    }
}
