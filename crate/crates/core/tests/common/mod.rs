#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperim::cli::ingest::{build_vocabulary, parse_corpus, to_dataset, Dataset};
use hyperim::embed::LabelHierarchy;

pub const PARENTS: [&str; 2] = ["sport", "science"];
/// Leaf label and its parent.
pub const LEAVES: [(&str, &str); 5] = [
    ("football", "sport"),
    ("tennis", "sport"),
    ("chess", "sport"),
    ("physics", "science"),
    ("biology", "science"),
];
pub const KEYWORDS_PER_LEAF: usize = 6;
pub const NOISE_WORDS: usize = 18;
pub const KEYWORDS_PER_DOC: usize = 4;
pub const SEQ_LEN: usize = 10;

pub fn hierarchy_text() -> String {
    let mut s = String::new();
    for (leaf, parent) in LEAVES {
        writeln!(s, "{parent}\t{leaf}").unwrap();
    }
    s
}

pub fn hierarchy() -> LabelHierarchy {
    LabelHierarchy::parse(&hierarchy_text(), Path::new("toy.hierarchy")).unwrap()
}

fn keyword(leaf: usize, j: usize) -> String {
    format!("{}{j}", &LEAVES[leaf].0[..3])
}

fn noise(j: usize) -> String {
    format!("noise{j:02}")
}

/// `n` corpus lines: a random leaf, its parent, four of the leaf's keywords
/// and six noise words in random order. Keyword case is mixed to exercise
/// lowercasing.
pub fn corpus_text(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::new();
    for _ in 0..n {
        let leaf = rng.gen_range(0..LEAVES.len());
        let mut words: Vec<String> = (0..KEYWORDS_PER_LEAF).map(|j| keyword(leaf, j)).collect();
        words.shuffle(&mut rng);
        words.truncate(KEYWORDS_PER_DOC);
        if rng.gen_bool(0.5) {
            words[0] = words[0].to_uppercase();
        }
        for _ in 0..SEQ_LEN - KEYWORDS_PER_DOC {
            words.push(noise(rng.gen_range(0..NOISE_WORDS)));
        }
        words.shuffle(&mut rng);
        writeln!(s, "{},{}\t{}", LEAVES[leaf].1, LEAVES[leaf].0, words.join(" ")).unwrap();
    }
    s
}

/// Every word the generator can emit, so the vocabulary has exactly
/// 48 words plus padding and unknown.
pub fn full_vocabulary_line() -> String {
    let mut words: Vec<String> = (0..LEAVES.len())
        .flat_map(|l| (0..KEYWORDS_PER_LEAF).map(move |j| keyword(l, j)))
        .collect();
    words.extend((0..NOISE_WORDS).map(noise));
    words.join(" ")
}

/// Training and validation sets sharing the training vocabulary.
pub fn toy_datasets(n_train: usize, n_val: usize, seed: u64) -> (Dataset, Dataset) {
    let h = hierarchy();
    let mut vocab_docs = parse_corpus(&format!("\t{}\n", full_vocabulary_line()), Path::new("vocab")).unwrap();
    let train_docs = parse_corpus(&corpus_text(n_train, seed), Path::new("train")).unwrap();
    vocab_docs.extend(train_docs.iter().cloned());
    let vocab = build_vocabulary(&vocab_docs);
    let val_docs = parse_corpus(&corpus_text(n_val, seed.wrapping_add(1)), Path::new("val")).unwrap();
    let train = to_dataset(&train_docs, vocab.clone(), h.labels(), SEQ_LEN).unwrap();
    let val = to_dataset(&val_docs, vocab, h.labels(), SEQ_LEN).unwrap();
    (train, val)
}
