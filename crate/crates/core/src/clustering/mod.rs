//! Ward agglomerative clustering on a precomputed dissimilarity matrix,
//! tree cutting, and silhouette diagnostics for choosing `k`.
//!
//! Heights follow the Ward.D2 convention (squared dissimilarities inside the
//! Lance-Williams update). Ward.D, which feeds raw dissimilarities into the
//! same update, produces a different tree and is not offered.

mod ward;

use std::io::{Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::dissimilarity::DissimilarityMatrix;

pub use ward::{ward_cluster, Dendrogram, Merge};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("clustering needs at least 2 observations, got {0}")]
    TooFew(usize),
    #[error("dissimilarity matrix has non-finite entries")]
    NonFinite,
    #[error("k = {k} is out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("silhouette needs 2 <= k < n (k = {k}, n = {n})")]
    SilhouetteUndefined { k: usize, n: usize },
    #[error("labels ({labels}) and matrix ({n}) disagree in size")]
    SizeMismatch { labels: usize, n: usize },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Cluster labels `1..=k`, cluster 1 being the largest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    k: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl ClusterAssignment {
    /// Accepts labels in `1..=k` as given, without relabeling. Every cluster
    /// must be non-empty.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self, ClusterError> {
        let k = labels.iter().copied().max().unwrap_or(0);
        if labels.is_empty() || labels.contains(&0) {
            return Err(ClusterError::InvalidLabels("labels must be >= 1 and non-empty".into()));
        }
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l - 1] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(ClusterError::InvalidLabels(format!("cluster {} is empty", empty + 1)));
        }
        Ok(Self { k, labels, sizes })
    }

    /// Relabels arbitrary group ids so that cluster 1 is the largest; equal
    /// sizes are ordered by their smallest member index.
    pub fn canonical(groups: &[usize]) -> Self {
        use std::collections::HashMap;
        let mut info: HashMap<usize, (usize, usize)> = HashMap::new(); // group -> (size, first member)
        for (i, &g) in groups.iter().enumerate() {
            info.entry(g).and_modify(|e| e.0 += 1).or_insert((1, i));
        }
        let mut order: Vec<(usize, usize, usize)> = info.into_iter().map(|(g, (s, f))| (g, s, f)).collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let mut relabel = HashMap::new();
        for (new, (g, _, _)) in order.iter().enumerate() {
            relabel.insert(*g, new + 1);
        }
        let labels = groups.iter().map(|g| relabel[g]).collect();
        Self {
            k: order.len(),
            labels,
            sizes: order.iter().map(|o| o.1).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Positions belonging to cluster `label`.
    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// `id,cluster`
    pub fn write_csv<W: Write>(&self, ids: &[String], writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "cluster"])?;
        for (id, l) in ids.iter().zip(&self.labels) {
            w.write_record([id.as_str(), &l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `id,cluster` rows; labels are kept as written.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<String>, Self), ClusterError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "id" || &header[1] != "cluster" {
            return Err(ClusterError::InvalidLabels("expected header id,cluster".into()));
        }
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let label = rec[1]
                .parse::<usize>()
                .map_err(|_| ClusterError::InvalidLabels(format!("line {}: {:?} is not a cluster number", i + 2, &rec[1])))?;
            ids.push(rec[0].to_string());
            labels.push(label);
        }
        Ok((ids, Self::from_labels(labels)?))
    }
}

/// Cuts the tree into `k` clusters by undoing its last `k - 1` merges.
pub fn cut_tree(tree: &Dendrogram, k: usize) -> Result<ClusterAssignment, ClusterError> {
    let n = tree.n();
    if k == 0 || k > n {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    // group[node] for every node formed by the first n - k merges
    let mut group: Vec<usize> = (0..n).collect();
    let mut node_group: Vec<usize> = (0..n).collect();
    for m in &tree.merges()[..n - k] {
        let (gl, gr) = (node_group[m.left], node_group[m.right]);
        let keep = gl.min(gr);
        for g in group.iter_mut() {
            if *g == gl || *g == gr {
                *g = keep;
            }
        }
        node_group.push(keep);
    }
    Ok(ClusterAssignment::canonical(&group))
}

/// Mean silhouette width.
pub fn silhouette(d: &DissimilarityMatrix, labels: &ClusterAssignment) -> Result<f64, ClusterError> {
    let widths = silhouette_widths(d, labels)?;
    Ok(widths.iter().sum::<f64>() / widths.len() as f64)
}

/// Per-point silhouette `s(i) = (b - a) / max(a, b)`; points alone in their
/// cluster get 0.
pub fn silhouette_widths(d: &DissimilarityMatrix, labels: &ClusterAssignment) -> Result<Vec<f64>, ClusterError> {
    let n = d.n();
    if labels.len() != n {
        return Err(ClusterError::SizeMismatch { labels: labels.len(), n });
    }
    let k = labels.k();
    if k < 2 || k >= n {
        return Err(ClusterError::SilhouetteUndefined { k, n });
    }
    let lab = labels.labels();
    let sizes = labels.sizes();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let own = lab[i] - 1;
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0f64; k];
            for j in 0..n {
                if j != i {
                    sums[lab[j] - 1] += d.get(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// Mean silhouette for each `k` in `ks` (skipping values where it is
/// undefined).
pub fn silhouette_profile(d: &DissimilarityMatrix, tree: &Dendrogram, ks: impl IntoIterator<Item = usize>) -> Vec<(usize, f64)> {
    ks.into_iter()
        .filter_map(|k| {
            let cut = cut_tree(tree, k).ok()?;
            silhouette(d, &cut).ok().map(|s| (k, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> DissimilarityMatrix {
        let full: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { f(k / n, k % n) }).collect();
        DissimilarityMatrix::from_square(n, &full, "t").unwrap()
    }

    /// Points on a line; |x_i - x_j|.
    fn line(xs: &[f64]) -> DissimilarityMatrix {
        matrix(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    #[test]
    fn cut_extremes() {
        let d = line(&[0.0, 1.0, 5.0, 6.0, 20.0]);
        let t = ward_cluster(&d).unwrap();
        assert_eq!(cut_tree(&t, 1).unwrap().labels(), &[1; 5]);
        let all = cut_tree(&t, 5).unwrap();
        assert_eq!(all.k(), 5);
        assert_eq!(all.sizes(), &[1; 5]);
        assert_eq!(all.labels(), &[1, 2, 3, 4, 5]);
        assert!(matches!(cut_tree(&t, 0), Err(ClusterError::KOutOfRange { .. })));
        assert!(matches!(cut_tree(&t, 6), Err(ClusterError::KOutOfRange { .. })));
    }

    #[test]
    fn six_leaf_hand_trace() {
        // Pairs {0,1} d=1, {2,3} d=2, {4,5} d=3, pairs far apart; {4,5} is
        // closer to {2,3} than to {0,1}.
        let xs = [0.0, 1.0, 50.0, 52.0, 60.0, 63.0];
        let t = ward_cluster(&line(&xs)).unwrap();
        let m = t.merges();
        assert_eq!((m[0].left, m[0].right), (0, 1));
        assert_eq!((m[1].left, m[1].right), (2, 3));
        assert_eq!((m[2].left, m[2].right), (4, 5));
        assert_eq!(t.members(m[3].left.max(m[3].right)), vec![4, 5]);
        let three = cut_tree(&t, 3).unwrap();
        assert_eq!(three.labels(), &[1, 1, 2, 2, 3, 3]);
        let two = cut_tree(&t, 2).unwrap();
        // {2,3,4,5} is the larger cluster
        assert_eq!(two.labels(), &[2, 2, 1, 1, 1, 1]);
        assert_eq!(two.sizes(), &[4, 2]);
    }

    #[test]
    fn silhouette_separated_pairs() {
        let d = line(&[0.0, 1.0, 100.0, 101.0]);
        let labels = ClusterAssignment::from_labels(vec![1, 1, 2, 2]).unwrap();
        // a = 1, b = 100 (resp. 99.5 avg) for each point
        let s = silhouette(&d, &labels).unwrap();
        assert!(s > 0.9);
        let expected = [
            (100.5 - 1.0) / 100.5,
            (99.5 - 1.0) / 99.5,
            (99.5 - 1.0) / 99.5,
            (100.5 - 1.0) / 100.5,
        ];
        let w = silhouette_widths(&d, &labels).unwrap();
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn silhouette_k_n_minus_one() {
        // 4 points, merge {0,1}, others singletons
        let d = line(&[0.0, 2.0, 10.0, 30.0]);
        let labels = ClusterAssignment::from_labels(vec![1, 1, 2, 3]).unwrap();
        let w = silhouette_widths(&d, &labels).unwrap();
        // point 0: a = 2, b = min(10, 30) = 10 -> 0.8 ; point 1: a = 2, b = min(8, 28) = 8 -> 0.75
        assert!((w[0] - 0.8).abs() < 1e-12);
        assert!((w[1] - 0.75).abs() < 1e-12);
        assert_eq!(&w[2..], &[0.0, 0.0]);
        assert!((silhouette(&d, &labels).unwrap() - 1.55 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn silhouette_errors() {
        let d = line(&[0.0, 1.0, 2.0]);
        let one = ClusterAssignment::from_labels(vec![1, 1, 1]).unwrap();
        assert!(matches!(silhouette(&d, &one), Err(ClusterError::SilhouetteUndefined { .. })));
        let singletons = ClusterAssignment::from_labels(vec![1, 2, 3]).unwrap();
        assert!(matches!(silhouette(&d, &singletons), Err(ClusterError::SilhouetteUndefined { .. })));
        let short = ClusterAssignment::from_labels(vec![1, 2]).unwrap();
        assert!(matches!(silhouette(&d, &short), Err(ClusterError::SizeMismatch { .. })));
    }

    #[test]
    fn label_validation_and_canonical_order() {
        assert!(ClusterAssignment::from_labels(vec![1, 3]).is_err());
        assert!(ClusterAssignment::from_labels(vec![0, 1]).is_err());
        let c = ClusterAssignment::canonical(&[7, 3, 3, 9, 7, 3]);
        assert_eq!(c.labels(), &[2, 1, 1, 3, 2, 1]);
        assert_eq!(c.sizes(), &[3, 2, 1]);
        // tie on size resolved by smallest member index
        let c = ClusterAssignment::canonical(&[5, 4, 4, 5]);
        assert_eq!(c.labels(), &[1, 2, 2, 1]);
        let mut buf = Vec::new();
        c.write_csv(&["a".into(), "b".into(), "c".into(), "d".into()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,cluster\na,1\nb,2\nc,2\nd,1\n");
    }

    #[test]
    fn profile_over_k() {
        let d = line(&[0.0, 1.0, 10.0, 11.0, 30.0, 31.0]);
        let t = ward_cluster(&d).unwrap();
        let prof = silhouette_profile(&d, &t, 2..=8);
        assert_eq!(prof.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        let best = prof.iter().cloned().fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert_eq!(best.0, 3);
    }
}
