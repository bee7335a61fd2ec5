//! Exact k-nearest-neighbor search under the Euclidean metric.
//!
//! Every path orders candidates by the key `(squared distance, point
//! index)`, so ties at the k-th distance go to the smallest index and all
//! strategies return identical neighbor lists. A query that coincides with
//! a sample point sees that point at distance 0.

mod kdtree;
mod sorted;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};

use kdtree::KdTree;
use sorted::Sorted1d;

/// The `k` nearest sample points to a query, nearest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborList {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Distance to the farthest of the returned neighbors.
    pub fn radius(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }
}

/// Search strategy; `Auto` picks a sorted array in one dimension and a
/// kd-tree otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    Auto,
    KdTree,
    BruteForce,
}

#[derive(Debug, Clone)]
enum Accel {
    Sorted(Sorted1d),
    Tree(KdTree),
    None,
}

/// Immutable exact k-NN index over a dataset. Safe to query from many
/// threads at once.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<f64>,
    n: usize,
    d: usize,
    accel: Accel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub dist2: f64,
    pub index: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

impl NeighborIndex {
    pub fn build(dataset: &Dataset) -> Self {
        Self::with_strategy(dataset, SearchStrategy::Auto)
    }

    pub fn with_strategy(dataset: &Dataset, strategy: SearchStrategy) -> Self {
        assert!(dataset.n() <= u32::MAX as usize, "at most 2^32 - 1 points are supported");
        let points = dataset.as_slice().to_vec();
        let (n, d) = (dataset.n(), dataset.d());
        let accel = match strategy {
            SearchStrategy::Auto if d == 1 => Accel::Sorted(Sorted1d::build(&points)),
            SearchStrategy::Auto | SearchStrategy::KdTree => Accel::Tree(KdTree::build(&points, d)),
            SearchStrategy::BruteForce => Accel::None,
        };
        Self { points, n, d, accel }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    fn check(&self, x: &[f64], k: usize) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("query point has non-finite coordinates"));
        }
        if k == 0 || k > self.n {
            return Err(Error::KOutOfRange {
                k,
                min: 1,
                max: self.n,
            });
        }
        Ok(())
    }

    /// The `k` sample points nearest to `x`.
    pub fn knn_query(&self, x: &[f64], k: usize) -> Result<NeighborList> {
        self.check(x, k)?;
        let cands = match &self.accel {
            Accel::Sorted(s) => s.knn(x[0], k),
            Accel::Tree(t) => t.knn(&self.points, self.d, x, k),
            Accel::None => self.brute_force_candidates(x, k),
        };
        Ok(to_list(cands))
    }

    /// Reference implementation: sorts every distance.
    pub fn knn_query_brute_force(&self, x: &[f64], k: usize) -> Result<NeighborList> {
        self.check(x, k)?;
        Ok(to_list(self.brute_force_candidates(x, k)))
    }

    fn brute_force_candidates(&self, x: &[f64], k: usize) -> Vec<Candidate> {
        let mut all: Vec<Candidate> = self
            .points
            .chunks_exact(self.d)
            .enumerate()
            .map(|(i, p)| Candidate {
                dist2: squared_distance(p, x),
                index: i as u32,
            })
            .collect();
        if k < all.len() {
            all.select_nth_unstable(k - 1);
            all.truncate(k);
        }
        all.sort_unstable();
        all
    }

    /// Empirical p-NN radius at `p = k/n`: the k-th smallest distance from
    /// `x` to the sample.
    pub fn knn_radius(&self, x: &[f64], k: usize) -> Result<f64> {
        self.check(x, k)?;
        Ok(match &self.accel {
            Accel::Sorted(s) => s.kth_dist2(x[0], k).sqrt(),
            _ => self.knn_query(x, k)?.radius(),
        })
    }

    /// Distances from `x` to its `k` nearest sample points, in no
    /// particular order. Cheaper than [`knn_query`](Self::knn_query) when
    /// the identities of the neighbors are not needed.
    pub fn knn_distances(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        self.check(x, k)?;
        Ok(match &self.accel {
            Accel::Sorted(s) => s.knn_distances(x[0], k).collect(),
            _ => self.knn_query(x, k)?.distances,
        })
    }

    /// Neighbor lists for every sample point (self included), computed in
    /// parallel; the result does not depend on the thread count.
    pub fn knn_all(&self, k: usize) -> Result<Vec<NeighborList>> {
        if k == 0 || k > self.n {
            return Err(Error::KOutOfRange {
                k,
                min: 1,
                max: self.n,
            });
        }
        self.map_points(|i| self.knn_query(self.point(i), k))
    }

    /// Evaluates `f` at every sample index in parallel and returns the
    /// results in index order. Points are visited in tree order when there
    /// is a tree, which keeps the nodes touched by neighboring queries in
    /// cache.
    pub fn map_points<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send + Default + Clone,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        let Accel::Tree(tree) = &self.accel else {
            return (0..self.n).into_par_iter().map(f).collect();
        };
        let found: Vec<T> = tree
            .order()
            .par_iter()
            .map(|&i| f(i as usize))
            .collect::<Result<_>>()?;
        let mut out = vec![T::default(); self.n];
        for (&i, value) in tree.order().iter().zip(found) {
            out[i as usize] = value;
        }
        Ok(out)
    }
}

fn to_list(cands: Vec<Candidate>) -> NeighborList {
    let (indices, distances) = cands
        .into_iter()
        .map(|c| (c.index as usize, c.dist2.sqrt()))
        .unzip();
    NeighborList { indices, distances }
}
