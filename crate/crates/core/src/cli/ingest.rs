use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::embed::Vocabulary;
use crate::error::{Error, Result};
use crate::model::Example;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// One corpus line before id mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub labels: Vec<String>,
    /// Lowercased whitespace tokens, untruncated.
    pub tokens: Vec<String>,
}

/// Parse `label[,label...]<TAB>text` lines. Blank lines are skipped.
pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: msg.to_string(),
        };
        let (labels, body) = line.split_once('\t').ok_or_else(|| bad("expected `labels<TAB>text`"))?;
        let labels: Vec<String> = if labels.trim().is_empty() {
            Vec::new()
        } else {
            labels.split(',').map(|l| l.trim().to_string()).collect()
        };
        if labels.iter().any(|l| l.is_empty() || l.contains(char::is_whitespace)) {
            return Err(bad("empty or malformed label id"));
        }
        docs.push(RawDocument {
            labels,
            tokens: body.split_whitespace().map(str::to_lowercase).collect(),
        });
    }
    Ok(docs)
}

/// Canonical corpus text: comma-joined labels, a tab, single-space-joined
/// lowercase tokens.
pub fn normalize_corpus(docs: &[RawDocument]) -> String {
    let mut s = String::new();
    for d in docs {
        writeln!(s, "{}\t{}", d.labels.join(","), d.tokens.join(" ")).unwrap();
    }
    s
}

/// Sequence length used when none is configured: the published values for
/// the three benchmark corpora, otherwise the smallest even number at or
/// above the 90th-percentile document length.
pub fn default_seq_len(name: &str, docs: &[RawDocument]) -> usize {
    let name = name.to_lowercase();
    if name.contains("rcv1") {
        return 300;
    }
    if name.contains("zhihu") {
        return 50;
    }
    if name.contains("wikilshtc") {
        return 150;
    }
    let mut lens: Vec<usize> = docs.iter().map(|d| d.tokens.len()).collect();
    lens.sort_unstable();
    let p90 = if lens.is_empty() {
        0
    } else {
        lens[((lens.len() as f64 * 0.9).ceil() as usize).clamp(1, lens.len()) - 1]
    };
    (p90 + p90 % 2).max(2)
}

/// Vocabulary with the reserved padding and unknown ids first, then every
/// corpus token in order of first appearance.
pub fn build_vocabulary(docs: &[RawDocument]) -> Vocabulary {
    let mut v = Vocabulary::from_words([PAD, UNK]);
    for d in docs {
        for t in &d.tokens {
            v.insert(t.clone());
        }
    }
    v
}

/// Token ids for `tokens`, unknown words mapped to [`UNK_ID`], truncated or
/// padded with [`PAD_ID`] to `seq_len`.
pub fn encode_tokens(tokens: &[String], vocab: &Vocabulary, seq_len: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens
        .iter()
        .take(seq_len)
        .map(|t| vocab.get(t).unwrap_or(UNK_ID))
        .collect();
    ids.resize(seq_len, PAD_ID);
    ids
}

/// Documents mapped to ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub vocab: Vocabulary,
    pub labels: Vocabulary,
    pub seq_len: usize,
}

/// Map parsed documents to ids. Every label must exist in `labels`; all
/// offenders are reported at once.
pub fn to_dataset(docs: &[RawDocument], vocab: Vocabulary, labels: &Vocabulary, seq_len: usize) -> Result<Dataset> {
    let unknown: BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| d.labels.iter())
        .filter(|l| labels.get(l).is_none())
        .map(String::as_str)
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownLabels(unknown.into_iter().map(String::from).collect()));
    }
    let examples = docs
        .iter()
        .map(|d| {
            let set: BTreeSet<usize> = d.labels.iter().map(|l| labels.get(l).unwrap()).collect();
            Example {
                tokens: encode_tokens(&d.tokens, &vocab, seq_len),
                labels: set.into_iter().collect(),
            }
        })
        .collect();
    Ok(Dataset {
        examples,
        vocab,
        labels: labels.clone(),
        seq_len,
    })
}

/// Read a corpus file and map it to ids. `vocab` fixes the vocabulary (for
/// evaluation); otherwise one is built from the corpus. `seq_len` defaults
/// per [`default_seq_len`].
pub fn ingest(path: &Path, labels: &Vocabulary, vocab: Option<&Vocabulary>, seq_len: Option<usize>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let docs = parse_corpus(&text, path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let t = seq_len.unwrap_or_else(|| default_seq_len(&name, &docs));
    if t == 0 || !t.is_multiple_of(2) {
        return Err(Error::Config(format!("sequence length {t} must be even and positive")));
    }
    let vocab = vocab.cloned().unwrap_or_else(|| build_vocabulary(&docs));
    to_dataset(&docs, vocab, labels, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("corpus.tsv")
    }

    #[test]
    fn lowercase_and_pad() {
        let docs = parse_corpus("a\tThe CAT\n", p()).unwrap();
        let vocab = build_vocabulary(&docs);
        let labels = Vocabulary::from_words(["a"]);
        let ds = to_dataset(&docs, vocab, &labels, 4).unwrap();
        let the = ds.vocab.get("the").unwrap();
        let cat = ds.vocab.get("cat").unwrap();
        assert_eq!(ds.examples[0].tokens, vec![the, cat, PAD_ID, PAD_ID]);
        assert_eq!(ds.examples[0].labels, vec![0]);
    }

    #[test]
    fn empty_and_long_documents() {
        let docs = parse_corpus("a\t\na\tw1 w2 w3 w4 w5 w6\n", p()).unwrap();
        let ds = to_dataset(&docs, build_vocabulary(&docs), &Vocabulary::from_words(["a"]), 4).unwrap();
        assert_eq!(ds.examples[0].tokens, vec![PAD_ID; 4]);
        let w: Vec<usize> = ["w1", "w2", "w3", "w4"]
            .iter()
            .map(|x| ds.vocab.get(x).unwrap())
            .collect();
        assert_eq!(ds.examples[1].tokens, w);
    }

    #[test]
    fn unknown_words_map_to_unk() {
        let v = Vocabulary::from_words([PAD, UNK, "known"]);
        assert_eq!(encode_tokens(&["known".into(), "other".into()], &v, 2), vec![2, UNK_ID]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_corpus("a\tok\n\nno tab here\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_corpus("a,,b\tx\n", p()).is_err());
    }

    #[test]
    fn unknown_labels_are_all_listed() {
        let docs = parse_corpus("a,zz\tx\nyy\tx\n", p()).unwrap();
        let err = to_dataset(&docs, build_vocabulary(&docs), &Vocabulary::from_words(["a"]), 2).unwrap_err();
        match err {
            Error::UnknownLabels(l) => assert_eq!(l, vec!["yy".to_string(), "zz".to_string()]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn normalization_is_idempotent() {
        let text = "b,a\t  Hello   WORLD\tagain\r\n\nc\t\n";
        let docs = parse_corpus(text, p()).unwrap();
        let once = normalize_corpus(&docs);
        let again = parse_corpus(&once, p()).unwrap();
        assert_eq!(docs, again);
        assert_eq!(normalize_corpus(&again), once);
    }

    #[test]
    fn default_lengths() {
        assert_eq!(default_seq_len("rcv1-train", &[]), 300);
        assert_eq!(default_seq_len("Zhihu", &[]), 50);
        assert_eq!(default_seq_len("wikilshtc_small", &[]), 150);
        let docs: Vec<RawDocument> = (1..=10)
            .map(|n| RawDocument {
                labels: vec![],
                tokens: vec!["x".into(); n],
            })
            .collect();
        assert_eq!(default_seq_len("toy", &docs), 10);
        assert_eq!(default_seq_len("toy", &docs[..7]), 8);
        assert_eq!(default_seq_len("toy", &[]), 2);
    }
}
