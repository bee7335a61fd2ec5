//! Bounding-box kd-tree with median splits on the widest dimension.
//!
//! Pruning uses the exact box-to-query lower bound, accumulated in the same
//! order as [`squared_distance`](super::squared_distance), so for any point inside a box the bound
//! never exceeds the computed distance. Subtrees are skipped only when the
//! bound is strictly greater than the current k-th key, which keeps the
//! index tie-break exact.

use std::collections::BinaryHeap;

use super::Candidate;

const LEAF_SIZE: usize = 32;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    /// Child node ids; `None` for leaves.
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub(super) struct KdTree {
    nodes: Vec<Node>,
    /// `2·d` floats per node: lower corner then upper corner.
    boxes: Vec<f64>,
    /// Original point index for each tree slot.
    perm: Vec<u32>,
    /// Coordinates in tree order, one column per dimension, so that a leaf
    /// scan runs over contiguous memory.
    cols: Vec<f64>,
    /// Largest leaf; exceeds `LEAF_SIZE` only for runs of equal points.
    max_leaf: usize,
    d: usize,
}

impl KdTree {
    pub fn build(points: &[f64], d: usize) -> Self {
        let n = points.len() / d;
        let mut tree = KdTree {
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            boxes: Vec::new(),
            perm: (0..n as u32).collect(),
            cols: Vec::new(),
            max_leaf: 0,
            d,
        };
        tree.build_node(points, 0, n);
        tree.cols = (0..d)
            .flat_map(|j| tree.perm.iter().map(move |&i| points[i as usize * d + j]))
            .collect();
        tree
    }

    fn build_node(&mut self, points: &[f64], start: usize, end: usize) -> usize {
        let d = self.d;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            children: None,
        });
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.perm[start..end] {
            let p = &points[i as usize * d..(i as usize + 1) * d];
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let (split_dim, spread) = (0..d)
            .map(|j| (j, hi[j] - lo[j]))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        self.boxes.extend_from_slice(&lo);
        self.boxes.extend_from_slice(&hi);

        if end - start <= LEAF_SIZE || spread <= 0.0 {
            self.max_leaf = self.max_leaf.max(end - start);
            return id;
        }
        let mid = start + (end - start) / 2;
        let coord = |i: &u32| points[*i as usize * d + split_dim];
        self.perm[start..end].select_nth_unstable_by(mid - start, |a, b| coord(a).total_cmp(&coord(b)));
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    fn lower_bound(&self, node: usize, x: &[f64]) -> f64 {
        let d = self.d;
        let lo = &self.boxes[2 * d * node..2 * d * node + d];
        let hi = &self.boxes[2 * d * node + d..2 * d * (node + 1)];
        let mut acc = 0.0;
        for j in 0..d {
            let gap = (lo[j] - x[j]).max(x[j] - hi[j]).max(0.0);
            acc += gap * gap;
        }
        acc
    }

    /// Point indices in tree order: consecutive entries are spatially close.
    pub fn order(&self) -> &[u32] {
        &self.perm
    }

    /// Sorted k nearest candidates.
    pub fn knn(&self, _points: &[f64], _d: usize, x: &[f64], k: usize) -> Vec<Candidate> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        let mut buf = vec![0.0; self.max_leaf];
        let bound = self.lower_bound(0, x);
        self.search(0, bound, x, k, &mut heap, &mut buf);
        heap.into_sorted_vec()
    }

    fn search(
        &self,
        node: usize,
        bound: f64,
        x: &[f64],
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
        buf: &mut [f64],
    ) {
        if heap.len() == k && bound > heap.peek().map_or(f64::INFINITY, |c| c.dist2) {
            return;
        }
        let Node { start, end, children } = self.nodes[node];
        match children {
            None => {
                // Same accumulation order as `squared_distance`.
                let n = self.perm.len();
                let dist = &mut buf[..end - start];
                dist.fill(0.0);
                for (j, &xj) in x.iter().enumerate() {
                    let col = &self.cols[j * n + start..j * n + end];
                    for (acc, v) in dist.iter_mut().zip(col) {
                        let diff = v - xj;
                        *acc += diff * diff;
                    }
                }
                let mut worst = match heap.peek() {
                    Some(top) if heap.len() == k => top.dist2,
                    _ => f64::INFINITY,
                };
                for (&dist2, &index) in dist.iter().zip(&self.perm[start..end]) {
                    if dist2 > worst {
                        continue;
                    }
                    let cand = Candidate { dist2, index };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if let Some(mut top) = heap.peek_mut() {
                        if cand < *top {
                            *top = cand;
                        }
                    }
                    if heap.len() == k {
                        worst = heap.peek().map_or(f64::INFINITY, |c| c.dist2);
                    }
                }
            }
            Some((left, right)) => {
                let bl = self.lower_bound(left, x);
                let br = self.lower_bound(right, x);
                if bl <= br {
                    self.search(left, bl, x, k, heap, buf);
                    self.search(right, br, x, k, heap, buf);
                } else {
                    self.search(right, br, x, k, heap, buf);
                    self.search(left, bl, x, k, heap, buf);
                }
            }
        }
    }
}
