use eval::{evaluate, macro_average};
use graph_core::synth::{max_arcs, random_graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Swapping predicted and gold swaps precision and recall; F1 is symmetric.
fn check_swap_symmetry(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_graph(&mut rng, n, max_arcs(n) / 2, None).unwrap();
    let sentence = a.sentence().clone();
    let b = random_graph(&mut rng, n, max_arcs(n) / 3, None).unwrap();
    // Rebuild b over a's sentence so the corpora align.
    let arcs = b
        .arcs()
        .map(|(h, d, l)| graph_core::Arc::new(h, d, l).unwrap())
        .collect();
    let b = graph_core::SemanticGraph::from_arcs(sentence, arcs).unwrap();

    let ab = evaluate(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
    let ba = evaluate(std::slice::from_ref(&b), std::slice::from_ref(&a)).unwrap();
    prop_assert!((ab.labelled_precision() - ba.labelled_recall()).abs() < 1e-12);
    prop_assert!((ab.labelled_recall() - ba.labelled_precision()).abs() < 1e-12);
    prop_assert!((ab.labelled_f1() - ba.labelled_f1()).abs() < 1e-12);
    prop_assert!((ab.unlabelled_f1() - ba.unlabelled_f1()).abs() < 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn swap_symmetry(seed in 0u64..100_000, n in 1usize..15) {
        check_swap_symmetry(seed, n)?;
    }

    #[test]
    fn labelled_never_exceeds_unlabelled(seed in 0u64..100_000, n in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = random_graph(&mut rng, n, max_arcs(n) / 2, None).unwrap();
        let arcs = random_graph(&mut rng, n, max_arcs(n) / 3, None)
            .unwrap()
            .arcs()
            .map(|(h, d, l)| graph_core::Arc::new(h, d, l).unwrap())
            .collect();
        let pred =
            graph_core::SemanticGraph::from_arcs(gold.sentence().clone(), arcs).unwrap();
        let e = evaluate(std::slice::from_ref(&pred), std::slice::from_ref(&gold)).unwrap();
        prop_assert!(e.labelled_precision() <= e.unlabelled_precision() + 1e-12);
        prop_assert!(e.labelled_recall() <= e.unlabelled_recall() + 1e-12);
        prop_assert!(e.labelled_f1() <= e.unlabelled_f1() + 1e-12);
        for score in [
            e.labelled_precision(),
            e.labelled_recall(),
            e.labelled_f1(),
            e.unlabelled_precision(),
            e.unlabelled_recall(),
            e.unlabelled_f1(),
        ] {
            prop_assert!((0.0..=1.0).contains(&score));
        }
    }

    #[test]
    fn macro_average_between_min_and_max(scores in proptest::collection::vec(0.0f64..=100.0, 1..12)) {
        let avg = macro_average(&scores).unwrap();
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(avg >= min - 1e-9 && avg <= max + 1e-9);
    }
}
