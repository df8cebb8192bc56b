use std::collections::HashMap;

use graph_core::{SemanticGraph, ROOT_LABEL};
use serde::{Deserialize, Serialize};

/// Index 0 of every input vocabulary: the unknown-item slot.
pub const UNK: usize = 0;

/// String-to-id table. Id 0 is reserved by the builder for UNK in input
/// vocabularies; the label vocabulary reserves it for the ROOT label instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub(crate) struct Interner {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn with_reserved(reserved: &[&str]) -> Self {
        let mut interner = Interner {
            items: Vec::new(),
            index: HashMap::new(),
        };
        for item in reserved {
            interner.intern(item);
        }
        interner
    }

    fn intern(&mut self, item: &str) -> usize {
        if let Some(&id) = self.index.get(item) {
            return id;
        }
        let id = self.items.len();
        self.items.push(item.to_string());
        self.index.insert(item.to_string(), id);
        id
    }

    fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn resolve(&self, id: usize) -> &str {
        &self.items[id]
    }
}

impl From<Vec<String>> for Interner {
    fn from(items: Vec<String>) -> Self {
        let index = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Interner { items, index }
    }
}

impl From<Interner> for Vec<String> {
    fn from(interner: Interner) -> Self {
        interner.items
    }
}

/// Corpus-derived vocabularies: words, lemmas, pos tags, characters, labels,
/// plus the singleton sets backing UNK replacement during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocab {
    words: Interner,
    lemmas: Interner,
    pos_tags: Interner,
    chars: Interner,
    labels: Interner,
    word_singletons: Vec<usize>,
    lemma_singletons: Vec<usize>,
}

impl Vocab {
    /// Builds vocabularies from a training corpus.
    ///
    /// Input vocabularies reserve id 0 for UNK. The label vocabulary always
    /// contains the reserved ROOT label at id 0 and at least one ordinary
    /// label, so a decoder can always assign a non-ROOT label.
    pub fn from_corpus(corpus: &[SemanticGraph]) -> Vocab {
        let mut words = Interner::with_reserved(&["<unk>"]);
        let mut lemmas = Interner::with_reserved(&["<unk>"]);
        let mut pos_tags = Interner::with_reserved(&["<unk>"]);
        let mut chars = Interner::with_reserved(&["<unk>"]);
        let mut labels = Interner::with_reserved(&[ROOT_LABEL, "dep"]);
        let mut word_freq: HashMap<usize, usize> = HashMap::new();
        let mut lemma_freq: HashMap<usize, usize> = HashMap::new();

        for graph in corpus {
            for token in graph.sentence().tokens() {
                let w = words.intern(token.form());
                *word_freq.entry(w).or_insert(0) += 1;
                let l = lemmas.intern(token.lemma());
                *lemma_freq.entry(l).or_insert(0) += 1;
                pos_tags.intern(token.pos());
                for ch in token.characters() {
                    chars.intern(&ch.to_string());
                }
            }
            for (_, _, label) in graph.arcs() {
                labels.intern(label);
            }
        }

        let mut word_singletons: Vec<usize> = word_freq
            .iter()
            .filter(|&(_, &count)| count == 1)
            .map(|(&id, _)| id)
            .collect();
        word_singletons.sort_unstable();
        let mut lemma_singletons: Vec<usize> = lemma_freq
            .iter()
            .filter(|&(_, &count)| count == 1)
            .map(|(&id, _)| id)
            .collect();
        lemma_singletons.sort_unstable();

        Vocab {
            words,
            lemmas,
            pos_tags,
            chars,
            labels,
            word_singletons,
            lemma_singletons,
        }
    }

    pub fn word_id(&self, form: &str) -> usize {
        self.words.get(form).unwrap_or(UNK)
    }

    pub fn lemma_id(&self, lemma: &str) -> usize {
        self.lemmas.get(lemma).unwrap_or(UNK)
    }

    pub fn pos_id(&self, pos: &str) -> usize {
        self.pos_tags.get(pos).unwrap_or(UNK)
    }

    pub fn char_id(&self, ch: char) -> usize {
        self.chars.get(&ch.to_string()).unwrap_or(UNK)
    }

    /// Id of a known label, if present. ROOT is always id 0.
    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.get(label)
    }

    pub fn label(&self, id: usize) -> &str {
        self.labels.resolve(id)
    }

    pub fn root_label_id(&self) -> usize {
        0
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_lemmas(&self) -> usize {
        self.lemmas.len()
    }

    pub fn num_pos(&self) -> usize {
        self.pos_tags.len()
    }

    pub fn num_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn is_word_singleton(&self, id: usize) -> bool {
        self.word_singletons.binary_search(&id).is_ok()
    }

    pub fn is_lemma_singleton(&self, id: usize) -> bool {
        self.lemma_singletons.binary_search(&id).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graph_core::{Arc, Sentence};

    fn corpus() -> Vec<SemanticGraph> {
        let s1 = Sentence::from_triples(&[("the", "the", "DT"), ("cat", "cat", "NN")]).unwrap();
        let g1 = SemanticGraph::from_arcs(
            s1,
            vec![
                Arc::new(0, 2, ROOT_LABEL).unwrap(),
                Arc::new(2, 1, "det").unwrap(),
            ],
        )
        .unwrap();
        let s2 = Sentence::from_triples(&[("the", "the", "DT"), ("dog", "dog", "NN")]).unwrap();
        let g2 = SemanticGraph::from_arcs(s2, vec![Arc::new(2, 1, "det").unwrap()]).unwrap();
        vec![g1, g2]
    }

    #[test]
    fn reserves_unk_and_labels() {
        let vocab = Vocab::from_corpus(&corpus());
        assert_eq!(vocab.word_id("never-seen"), UNK);
        assert_eq!(vocab.label_id(ROOT_LABEL), Some(0));
        assert_eq!(vocab.label_id("dep"), Some(1));
        assert_eq!(vocab.label_id("det"), Some(2));
        assert!(vocab.num_labels() >= 2);
        assert_eq!(vocab.label(2), "det");
    }

    #[test]
    fn singletons_by_frequency() {
        let vocab = Vocab::from_corpus(&corpus());
        assert!(!vocab.is_word_singleton(vocab.word_id("the")));
        assert!(vocab.is_word_singleton(vocab.word_id("cat")));
        assert!(vocab.is_word_singleton(vocab.word_id("dog")));
    }

    #[test]
    fn survives_serde() {
        let vocab = Vocab::from_corpus(&corpus());
        let json = serde_json::to_string(&vocab).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(vocab, back);
        assert_eq!(back.word_id("cat"), vocab.word_id("cat"));
    }

    #[test]
    fn char_ids_cover_forms() {
        let vocab = Vocab::from_corpus(&corpus());
        assert_ne!(vocab.char_id('t'), UNK);
        assert_ne!(vocab.char_id('g'), UNK);
        assert_eq!(vocab.char_id('z'), UNK);
    }
}
