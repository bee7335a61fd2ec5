//! One-dimensional index: values sorted by `(value, index)`.
//!
//! Distances along a sorted line are V-shaped around the query, so the k
//! nearest points form a contiguous window. Queries merge outward from the
//! insertion point; the k-th distance alone is found by binary search over
//! window positions in `O(log n)`.

use super::Candidate;

#[derive(Debug, Clone)]
pub(super) struct Sorted1d {
    values: Vec<f64>,
    index: Vec<u32>,
}

#[inline]
fn dist2(v: f64, x: f64) -> f64 {
    let diff = v - x;
    diff * diff
}

impl Sorted1d {
    pub fn build(points: &[f64]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            points[a as usize]
                .total_cmp(&points[b as usize])
                .then(a.cmp(&b))
        });
        Self {
            values: order.iter().map(|&i| points[i as usize]).collect(),
            index: order,
        }
    }

    pub fn knn(&self, x: f64, k: usize) -> Vec<Candidate> {
        let n = self.values.len();
        let pos = self.values.partition_point(|v| *v < x);
        let (mut l, mut r) = (pos, pos);
        let mut out = Vec::with_capacity(k + 4);
        let take = |slot: usize| Candidate {
            dist2: dist2(self.values[slot], x),
            index: self.index[slot],
        };
        while out.len() < k {
            let go_left = match (l > 0, r < n) {
                (true, true) => dist2(self.values[l - 1], x) <= dist2(self.values[r], x),
                (true, false) => true,
                (false, _) => false,
            };
            if go_left {
                l -= 1;
                out.push(take(l));
            } else {
                out.push(take(r));
                r += 1;
            }
        }
        // Anything tied with the k-th distance competes on index.
        let kth = out[k - 1].dist2;
        while l > 0 && dist2(self.values[l - 1], x) == kth {
            l -= 1;
            out.push(take(l));
        }
        while r < n && dist2(self.values[r], x) == kth {
            out.push(take(r));
            r += 1;
        }
        // The merge emits distances in order; only tied runs need reordering.
        let mut start = 0;
        while start < out.len() {
            let mut end = start + 1;
            while end < out.len() && out[end].dist2 == out[start].dist2 {
                end += 1;
            }
            if end - start > 1 {
                out[start..end].sort_unstable();
            }
            if end >= k {
                break;
            }
            start = end;
        }
        out.truncate(k);
        out
    }

    /// Start of a window of `k` consecutive sorted values nearest to `x`.
    fn window(&self, x: f64, k: usize) -> usize {
        let v = &self.values;
        let last = v.len() - k;
        // First window start whose right reach is at least its left reach.
        let mut lo = 0usize;
        let mut hi = last + 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if v[mid + k - 1] - x >= x - v[mid] {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let cost = |l: usize| dist2(v[l], x).max(dist2(v[l + k - 1], x));
        match (lo <= last, lo > 0) {
            (true, true) if cost(lo - 1) < cost(lo) => lo - 1,
            (true, _) => lo,
            _ => lo - 1,
        }
    }

    /// Squared k-th nearest distance.
    pub fn kth_dist2(&self, x: f64, k: usize) -> f64 {
        let l = self.window(x, k);
        dist2(self.values[l], x).max(dist2(self.values[l + k - 1], x))
    }

    /// The multiset of the `k` nearest distances, in no particular order.
    pub fn knn_distances(&self, x: f64, k: usize) -> impl Iterator<Item = f64> + '_ {
        let l = self.window(x, k);
        self.values[l..l + k].iter().map(move |v| (v - x).abs())
    }
}
