//! Random labelled-DAG corpus generation.
//!
//! Each sentence draws a hidden topological order over its non-singleton
//! tokens; arcs are sampled only along that order (plus arcs from ROOT), so
//! every graph is acyclic by construction. Arc density is controlled by an
//! arcs-per-word ratio, and an optional singleton share pins the exact number
//! of tokens left without any arc. Generation is deterministic per seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::{Arc, SemanticGraph, Sentence, Token, ROOT_LABEL};

const WORDS: &[&str] = &[
    "time", "year", "people", "way", "day", "man", "thing", "woman", "life", "child", "world",
    "school", "state", "family", "student", "group", "country", "problem", "hand", "part",
    "place", "case", "week", "company", "system", "program", "question", "work", "night",
    "point", "home", "water", "room", "mother", "area", "money", "story", "fact", "month", "lot",
];
const TAGS: &[&str] = &["NN", "VB", "JJ", "RB", "DT", "IN", "PR", "CC"];
const LABELS: &[&str] = &["ARG1", "ARG2", "ARG3", "BV", "mod", "comp"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Arcs per word; each sentence gets `round(ratio * n)` arcs.
    pub arc_ratio: f64,
    /// When set, each sentence has exactly `round(share * n)` tokens with no
    /// incident arc. When unset, density alone decides which tokens stay bare.
    pub singleton_share: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),

    #[error(
        "cannot place {arcs} arcs over {active} connected words of a {n}-word sentence \
         (feasible range {min}..={max})"
    )]
    Infeasible {
        n: usize,
        active: usize,
        arcs: usize,
        min: usize,
        max: usize,
    },
}

/// Largest arc set on an n-word sentence: one orientation per token pair,
/// plus one arc from ROOT per token.
pub fn max_arcs(n: usize) -> usize {
    n * (n - 1) / 2 + n
}

pub fn generate_corpus(config: &SynthConfig) -> Result<Vec<SemanticGraph>, SynthError> {
    if config.min_len == 0 || config.min_len > config.max_len {
        return Err(SynthError::Config(format!(
            "bad length range {}..={}",
            config.min_len, config.max_len
        )));
    }
    if !(config.arc_ratio >= 0.0) {
        return Err(SynthError::Config(format!(
            "arc ratio must be non-negative, got {}",
            config.arc_ratio
        )));
    }
    if let Some(share) = config.singleton_share {
        if !(0.0..=1.0).contains(&share) {
            return Err(SynthError::Config(format!(
                "singleton share must lie in [0, 1], got {share}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut corpus = Vec::with_capacity(config.sentences);
    for _ in 0..config.sentences {
        let n = rng.random_range(config.min_len..=config.max_len);
        let arcs = (config.arc_ratio * n as f64).round() as usize;
        let singletons = config
            .singleton_share
            .map(|share| (share * n as f64).round() as usize);
        corpus.push(random_graph(&mut rng, n, arcs, singletons)?);
    }
    Ok(corpus)
}

/// One random labelled DAG with exactly `arcs` arcs. With
/// `singletons: Some(s)`, exactly `s` tokens end up without incident arcs.
pub fn random_graph(
    rng: &mut impl Rng,
    n: usize,
    arcs: usize,
    singletons: Option<usize>,
) -> Result<SemanticGraph, SynthError> {
    let sentence = random_sentence(rng, n);

    let mut positions: Vec<usize> = (1..=n).collect();
    positions.shuffle(rng);
    let (bare, active) = match singletons {
        Some(s) => {
            if s > n {
                return Err(SynthError::Config(format!(
                    "{s} singletons requested for {n} words"
                )));
            }
            positions.split_at(s)
        }
        None => positions.split_at(0),
    };
    let _ = bare; // stays untouched by construction
    let k = active.len();

    // Feasibility. Every arc touches at most two uncovered words, so covering
    // k words needs at least ceil(k/2) arcs; the pool below caps the maximum.
    let capacity = if k == 0 { 0 } else { max_arcs(k) };
    let min_required = if singletons.is_some() { k.div_ceil(2) } else { 0 };
    if arcs < min_required || arcs > capacity {
        return Err(SynthError::Infeasible {
            n,
            active: k,
            arcs,
            min: min_required,
            max: capacity,
        });
    }

    // Hidden topological order: active[i] precedes active[j] for i < j.
    // rank[p] = index of position p in that order.
    let mut rank = vec![usize::MAX; n + 1];
    for (i, &p) in active.iter().enumerate() {
        rank[p] = i;
    }
    let orient = |a: usize, b: usize| -> (usize, usize) {
        if a == 0 || b == 0 {
            (0, a.max(b))
        } else if rank[a] < rank[b] {
            (a, b)
        } else {
            (b, a)
        }
    };

    let mut chosen: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();

    if singletons.is_some() {
        // Cover phase: every active word gets at least one incident arc,
        // pairing uncovered words together while possible so the phase never
        // exceeds the ceil(k/2) budget.
        let mut order = active.to_vec();
        order.shuffle(rng);
        let mut covered = vec![false; n + 1];
        for idx in 0..order.len() {
            let w = order[idx];
            if covered[w] {
                continue;
            }
            let uncovered: Vec<usize> = order[idx + 1..]
                .iter()
                .copied()
                .filter(|&u| !covered[u])
                .collect();
            let partner = if uncovered.is_empty() {
                // Last uncovered word: lean on ROOT or any covered word.
                let mut options: Vec<usize> = active.iter().copied().filter(|&u| u != w).collect();
                options.push(0);
                options[rng.random_range(0..options.len())]
            } else {
                uncovered[rng.random_range(0..uncovered.len())]
            };
            covered[w] = true;
            if partner != 0 {
                covered[partner] = true;
            }
            chosen.insert(orient(w, partner));
        }
        debug_assert_eq!(chosen.len(), min_required);
    }

    // Fill phase: remaining arcs drawn uniformly from the unused pool.
    let remaining = arcs - chosen.len();
    if remaining > 0 {
        let mut pool: Vec<(usize, usize)> = Vec::with_capacity(capacity - chosen.len());
        for (i, &u) in active.iter().enumerate() {
            if !chosen.contains(&(0, u)) {
                pool.push((0, u));
            }
            for &w in &active[i + 1..] {
                if !chosen.contains(&(u, w)) {
                    pool.push((u, w));
                }
            }
        }
        let (picked, _) = pool.partial_shuffle(rng, remaining);
        chosen.extend(picked.iter().copied());
    }

    let arc_list: Vec<Arc> = chosen
        .into_iter()
        .map(|(head, dependent)| {
            let label = if head == 0 {
                ROOT_LABEL
            } else {
                LABELS[rng.random_range(0..LABELS.len())]
            };
            Arc::new(head, dependent, label).expect("generator pairs are well-formed")
        })
        .collect();

    Ok(SemanticGraph::from_arcs(sentence, arc_list).expect("generator output is a valid DAG"))
}

fn random_sentence(rng: &mut impl Rng, n: usize) -> Sentence {
    let tokens = (1..=n)
        .map(|i| {
            let word = WORDS[rng.random_range(0..WORDS.len())];
            let tag = TAGS[rng.random_range(0..TAGS.len())];
            Token::new(i, word, word, tag).expect("vocabulary words are non-empty")
        })
        .collect();
    Sentence::new(tokens).expect("positions assigned densely")
}
