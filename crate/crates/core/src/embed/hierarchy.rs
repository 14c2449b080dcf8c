use std::collections::BTreeSet;
use std::path::Path;

use super::Vocabulary;
use crate::error::{Error, Result};

/// Labels plus the parent-child edge set. Edges are kept in insertion order
/// and deduplicated; the graph must be acyclic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelHierarchy {
    labels: Vocabulary,
    edges: Vec<(usize, usize)>,
    children: Vec<BTreeSet<usize>>,
}

impl LabelHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_label(&mut self, id: &str) -> usize {
        let i = self.labels.insert(id.to_string());
        if i == self.children.len() {
            self.children.push(BTreeSet::new());
        }
        i
    }

    pub fn add_edge(&mut self, parent: &str, child: &str) -> Result<()> {
        if parent == child {
            return Err(Error::Hierarchy(format!("self-loop on {parent}")));
        }
        let p = self.add_label(parent);
        let c = self.add_label(child);
        if self.children[p].insert(c) {
            self.edges.push((p, c));
        }
        Ok(())
    }

    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut h = Self::new();
        for (p, c) in edges {
            h.add_edge(p, c)?;
        }
        h.check_acyclic()?;
        Ok(h)
    }

    /// Parse `parent<TAB>child` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut h = Self::new();
        for (line, parent, child) in parse_pairs(text, path)? {
            h.add_edge(&parent, &child).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })?;
        }
        h.check_acyclic()?;
        Ok(h)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn to_text(&self) -> String {
        self.edges
            .iter()
            .map(|&(p, c)| format!("{}\t{}\n", self.labels.word(p), self.labels.word(c)))
            .collect()
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.len();
        let mut indeg = vec![0usize; n];
        for &(_, c) in &self.edges {
            indeg[c] += 1;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            Err(Error::Hierarchy("the parent-child graph has a cycle".into()))
        }
    }

    pub fn labels(&self) -> &Vocabulary {
        &self.labels
    }

    pub fn label_index(&self, id: &str) -> Option<usize> {
        self.labels.get(id)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn children(&self, label: usize) -> &BTreeSet<usize> {
        &self.children[label]
    }

    pub fn is_edge(&self, parent: usize, child: usize) -> bool {
        self.children[parent].contains(&child)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parse tab-separated string pairs, returning `(line number, left, right)`.
pub fn parse_pairs(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                out.push((i + 1, a.trim().to_string(), b.trim().to_string()))
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: "expected `parent<TAB>child`".into(),
                })
            }
        }
    }
    Ok(out)
}
