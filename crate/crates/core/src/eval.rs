//! Ranking metrics and the evaluation harness.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::model::{forward, Example, HyperIMParams};

pub const DEFAULT_KS: [usize; 3] = [1, 3, 5];

/// Indices of the `k` largest entries of `p`, descending, ties broken by
/// lower index.
pub fn rank_top_k(p: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Fraction of the top `k` predictions that are true.
///
/// # Panics
/// When `k` is zero or exceeds the number of labels.
pub fn precision_at_k(y: &[bool], p: &[f64], k: usize) -> f64 {
    check(y, p, k);
    let hits = rank_top_k(p, k).into_iter().filter(|&i| y[i]).count();
    hits as f64 / k as f64
}

/// Normalized discounted cumulative gain at `k`, or `None` when `y` has no
/// true label.
///
/// # Panics
/// When `k` is zero or exceeds the number of labels.
pub fn ndcg_at_k(y: &[bool], p: &[f64], k: usize) -> Option<f64> {
    check(y, p, k);
    let positives = y.iter().filter(|&&t| t).count();
    if positives == 0 {
        return None;
    }
    let discount = |i: usize| 1.0 / ((i + 2) as f64).ln();
    let dcg: f64 = rank_top_k(p, k)
        .into_iter()
        .enumerate()
        .filter(|&(_, l)| y[l])
        .map(|(i, _)| discount(i))
        .sum();
    let ideal: f64 = (0..k.min(positives)).map(discount).sum();
    Some(dcg / ideal)
}

fn check(y: &[bool], p: &[f64], k: usize) {
    assert_eq!(y.len(), p.len(), "truth and predictions differ in length");
    assert!(k >= 1 && k <= y.len(), "k = {k} outside 1..={}", y.len());
}

/// Per-instance metrics, `None` where a metric is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMetrics {
    pub precision: Vec<f64>,
    pub ndcg: Option<Vec<f64>>,
}

pub fn instance_metrics(y: &[bool], p: &[f64], ks: &[usize]) -> InstanceMetrics {
    let precision: Vec<f64> = ks.iter().map(|&k| precision_at_k(y, p, k)).collect();
    let ndcg: Option<Vec<f64>> = ks.iter().map(|&k| ndcg_at_k(y, p, k)).collect();
    if let (Some(n), Some(i)) = (&ndcg, ks.iter().position(|&k| k == 1)) {
        assert_eq!(n[i], precision[i], "nDCG@1 must equal P@1");
    }
    InstanceMetrics { precision, ndcg }
}

/// Means over instances. nDCG averages skip instances with no true label.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub ks: Vec<usize>,
    pub precision: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub instances: usize,
    /// Instances left out of the nDCG means.
    pub skipped: usize,
}

impl MetricTable {
    pub fn from_instances(ks: &[usize], rows: &[InstanceMetrics]) -> Self {
        let n = rows.len();
        let mut precision = vec![0.0; ks.len()];
        let mut ndcg = vec![0.0; ks.len()];
        let mut counted = 0usize;
        for r in rows {
            precision.iter_mut().zip(&r.precision).for_each(|(a, b)| *a += b);
            if let Some(nd) = &r.ndcg {
                ndcg.iter_mut().zip(nd).for_each(|(a, b)| *a += b);
                counted += 1;
            }
        }
        precision.iter_mut().for_each(|x| *x /= n.max(1) as f64);
        ndcg.iter_mut().for_each(|x| *x /= counted.max(1) as f64);
        Self {
            ks: ks.to_vec(),
            precision,
            ndcg,
            instances: n,
            skipped: n - counted,
        }
    }

    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.precision[i])
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.ndcg[i])
    }

    /// `metric<TAB>value` lines. nDCG@1 is omitted because it repeats P@1.
    pub fn key_values(&self) -> String {
        let mut s = String::new();
        for (i, k) in self.ks.iter().enumerate() {
            writeln!(s, "P@{k}\t{}", self.precision[i]).unwrap();
        }
        for (i, k) in self.ks.iter().enumerate() {
            if *k != 1 {
                writeln!(s, "nDCG@{k}\t{}", self.ndcg[i]).unwrap();
            }
        }
        s
    }

    /// Human-readable table, percentages with two decimals.
    pub fn text_table(&self) -> String {
        let mut s = String::new();
        let mut header = String::from("metric ");
        let mut p = String::from("P@k    ");
        let mut n = String::from("nDCG@k ");
        for (i, k) in self.ks.iter().enumerate() {
            write!(header, "{:>8}", format!("k={k}")).unwrap();
            write!(p, "{:>8.2}", 100.0 * self.precision[i]).unwrap();
            if *k == 1 {
                write!(n, "{:>8}", "-").unwrap();
            } else {
                write!(n, "{:>8.2}", 100.0 * self.ndcg[i]).unwrap();
            }
        }
        writeln!(s, "{header}\n{p}\n{n}").unwrap();
        writeln!(s, "instances {}", self.instances).unwrap();
        if self.skipped > 0 {
            writeln!(s, "skipped for nDCG (no true label) {}", self.skipped).unwrap();
        }
        s
    }
}

/// Evaluate `params` on `examples` at every `k` in `ks` that does not exceed
/// the label count.
pub fn evaluate(params: &HyperIMParams, examples: &[Example], ks: &[usize]) -> MetricTable {
    assert!(!examples.is_empty(), "evaluate needs at least one instance");
    let c = params.num_labels();
    let ks: Vec<usize> = ks.iter().copied().filter(|&k| k >= 1 && k <= c).collect();
    let rows: Vec<InstanceMetrics> = examples
        .par_iter()
        .map(|ex| instance_metrics(&ex.targets(c), &forward(&ex.tokens, params), &ks))
        .collect();
    let table = MetricTable::from_instances(&ks, &rows);
    if table.skipped > 0 {
        log::warn!("{} instance(s) without true labels skipped for nDCG", table.skipped);
    }
    table
}
