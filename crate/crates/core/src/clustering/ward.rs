use serde::Serialize;

use crate::dissimilarity::DissimilarityMatrix;

use super::ClusterError;

/// One agglomeration step. Leaves are nodes `0..n`; the cluster created by
/// merge `k` is node `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
    leaf_order: Vec<usize>,
    /// Merges whose height is below one of their children's heights.
    inversions: usize,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Merges in non-decreasing height order.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Leaves in left-to-right drawing order.
    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    pub fn inversions(&self) -> usize {
        self.inversions
    }

    /// Leaf members of node `node`, ascending.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n {
                out.push(v);
            } else {
                let m = &self.merges[v - self.n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        lo
    }
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    let (r, c) = if i > j { (i, j) } else { (j, i) };
    r * (r - 1) / 2 + c
}

/// Ward agglomeration (Ward.D2: the Lance-Williams recurrence runs on
/// squared dissimilarities, reported heights are square roots).
///
/// Nearest-neighbour chain, O(n^2) time and memory. Ties are resolved
/// deterministically: the chain starts at the smallest active index, and a
/// nearest-neighbour search prefers the chain predecessor, then the smallest
/// index.
pub fn ward_cluster(d: &DissimilarityMatrix) -> Result<Dendrogram, ClusterError> {
    let n = d.n();
    if n < 2 {
        return Err(ClusterError::TooFew(n));
    }
    if d.packed().iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    let mut dist: Vec<f64> = d.packed().iter().map(|v| v * v).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // (a, b, squared height) in discovery order
    let mut found: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);

    while found.len() < n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster remains"));
        }
        let a = *chain.last().expect("non-empty chain");
        let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };

        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        if let Some(p) = prev {
            best = p;
            best_d = dist[tri(a, p)];
        }
        for x in 0..n {
            if x == a || !active[x] {
                continue;
            }
            let dx = dist[tri(a, x)];
            if dx < best_d || (dx == best_d && Some(best) != prev && x < best) {
                best = x;
                best_d = dx;
            }
        }

        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let (lo, hi) = if a < best { (a, best) } else { (best, a) };
            let (n_lo, n_hi) = (size[lo] as f64, size[hi] as f64);
            for x in 0..n {
                if !active[x] || x == lo || x == hi {
                    continue;
                }
                let n_x = size[x] as f64;
                let updated = ((n_lo + n_x) * dist[tri(lo, x)] + (n_hi + n_x) * dist[tri(hi, x)] - n_x * best_d)
                    / (n_lo + n_hi + n_x);
                dist[tri(lo, x)] = updated;
            }
            size[lo] += size[hi];
            active[hi] = false;
            found.push((lo, hi, best_d));
        } else {
            chain.push(best);
        }
    }

    Ok(assemble(n, found))
}

/// Orders chain merges by height and assigns node ids.
fn assemble(n: usize, mut found: Vec<(usize, usize, f64)>) -> Dendrogram {
    // Stable: equal heights keep discovery order, which already puts children
    // before parents.
    found.sort_by(|x, y| x.2.total_cmp(&y.2));
    let mut uf = UnionFind::new(n);
    let mut node_of_root: Vec<usize> = (0..n).collect();
    let mut node_height = vec![0.0f64; 2 * n - 1];
    let mut node_size = vec![1usize; 2 * n - 1];
    let mut merges = Vec::with_capacity(n - 1);
    let mut inversions = 0;
    for (k, (a, b, h2)) in found.into_iter().enumerate() {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let (na, nb) = (node_of_root[ra], node_of_root[rb]);
        let (left, right) = if na < nb { (na, nb) } else { (nb, na) };
        let height = h2.max(0.0).sqrt();
        if h2 < 0.0 || height < node_height[left] || height < node_height[right] {
            inversions += 1;
        }
        let node = n + k;
        let size = node_size[left] + node_size[right];
        node_height[node] = height;
        node_size[node] = size;
        let root = uf.union(ra, rb);
        node_of_root[root] = node;
        merges.push(Merge { left, right, height, size });
    }

    let mut leaf_order = Vec::with_capacity(n);
    let mut stack = vec![2 * n - 2];
    while let Some(v) = stack.pop() {
        if v < n {
            leaf_order.push(v);
        } else {
            let m = &merges[v - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }

    Dendrogram {
        n,
        merges,
        leaf_order,
        inversions,
    }
}
