//! Anomaly scorers built on nearest-neighbor distances.
//!
//! The empirical distance-to-measure of order `q` at a point is the q-power
//! mean of its `k` nearest sample distances (the point itself included when
//! it belongs to the sample). `q = 1` is the kNN score, `q = ∞` the kth-NN
//! score. DTMF₂ compares a point's DTM₂ with its neighbors'; LOF is the
//! classic local outlier factor. Every score is "higher = more anomalous".

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::index::{NeighborIndex, NeighborList};

/// Cap applied to ratios whose denominator vanishes.
pub const RATIO_CAP: f64 = 1e12;

/// Fraction of the sample used as the default neighbor count.
pub const DEFAULT_MASS: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Knn,
    Kthnn,
    Dtm,
    Dtmf,
    Lof,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Knn, Method::Kthnn, Method::Dtm, Method::Dtmf, Method::Lof];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Kthnn => "kthnn",
            Method::Dtm => "dtm",
            Method::Dtmf => "dtmf",
            Method::Lof => "lof",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown method '{s}' (valid: knn, kthnn, dtm, dtmf, lof)")))
    }
}

/// DTM order `q ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Finite(f64),
    Infinity,
}

impl Order {
    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(Order::Infinity)
        } else if q.is_finite() && q >= 1.0 {
            Ok(Order::Finite(q))
        } else {
            Err(Error::param(format!("q = {q} must be ≥ 1 or ∞")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Order::Finite(q) => q,
            Order::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinity)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(q) => write!(f, "{q}"),
            Order::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Order::Infinity),
            other => Order::new(
                other
                    .parse()
                    .map_err(|_| Error::param(format!("cannot parse q = '{s}'")))?,
            ),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(q) => s.serialize_f64(*q),
            Order::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) => Order::new(q),
            Raw::Str(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Neighbor count given directly, as a mass `m` (`k = ⌈m·n⌉`), or left to
/// the default `k = ⌈0.03·n⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborCount {
    K(usize),
    Mass(f64),
    #[default]
    Default,
}

/// `⌈m·n⌉` clamped to `[1, n]`, with a relative guard against `m·n`
/// landing a rounding error above an integer.
pub fn k_from_mass(m: f64, n: usize) -> usize {
    let raw = m * n as f64;
    let k = (raw - raw * 1e-12).ceil() as usize;
    k.clamp(1, n.max(1))
}

impl NeighborCount {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let k = match self {
            NeighborCount::K(k) => k,
            NeighborCount::Mass(m) => {
                if !(m > 0.0 && m < 1.0) {
                    return Err(Error::param(format!("mass m = {m} not in (0, 1)")));
                }
                k_from_mass(m, n)
            }
            NeighborCount::Default => k_from_mass(DEFAULT_MASS, n),
        };
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, min: 1, max: n });
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: Method,
    /// Only read by `dtm`; `knn`/`kthnn` fix it to 1/∞ and `dtmf` to 2.
    pub q: Order,
    pub neighbors: NeighborCount,
}

impl DetectorConfig {
    pub fn new(method: Method) -> Self {
        let q = match method {
            Method::Knn => Order::Finite(1.0),
            Method::Kthnn => Order::Infinity,
            _ => Order::Finite(2.0),
        };
        Self {
            method,
            q,
            neighbors: NeighborCount::Default,
        }
    }

    pub fn dtm(q: Order) -> Self {
        Self {
            q,
            ..Self::new(Method::Dtm)
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.neighbors = NeighborCount::K(k);
        self
    }

    pub fn with_mass(mut self, m: f64) -> Self {
        self.neighbors = NeighborCount::Mass(m);
        self
    }

    /// The order actually used by the method.
    pub fn effective_q(&self) -> Order {
        match self.method {
            Method::Knn => Order::Finite(1.0),
            Method::Kthnn => Order::Infinity,
            Method::Dtm => self.q,
            Method::Dtmf | Method::Lof => Order::Finite(2.0),
        }
    }

    /// Short human-readable label, e.g. `dtm(q=2)`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Dtm => format!("dtm(q={})", self.q),
            m => m.to_string(),
        }
    }
}

/// Per-point scores plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub config: DetectorConfig,
    /// Resolved neighbor count.
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub scores: Vec<f64>,
}

/// q-power mean of non-negative values. The maximum is factored out first
/// so that large `q` cannot overflow.
pub fn power_mean(distances: &[f64], q: Order) -> f64 {
    let k = distances.len() as f64;
    match q {
        Order::Infinity => distances.iter().copied().fold(0.0, f64::max),
        Order::Finite(1.0) => distances.iter().sum::<f64>() / k,
        Order::Finite(q) => {
            let max = distances.iter().copied().fold(0.0, f64::max);
            if max == 0.0 {
                return 0.0;
            }
            let scaled = distances.iter().map(|d| d / max);
            let sum: f64 = if q == 2.0 {
                scaled.map(|r| r * r).sum()
            } else if q.fract() == 0.0 && q <= 64.0 {
                scaled.map(|r| r.powi(q as i32)).sum()
            } else {
                scaled.map(|r| r.powf(q)).sum()
            };
            let mean = sum / k;
            max * if q == 2.0 { mean.sqrt() } else { mean.powf(1.0 / q) }
        }
    }
}

fn dtm_from_list(list: &NeighborList, q: Order) -> f64 {
    match q {
        Order::Infinity => list.radius(),
        _ => power_mean(&list.distances, q),
    }
}

/// Empirical DTM of order `q` at an arbitrary point `x`.
pub fn dtm_score(index: &NeighborIndex, x: &[f64], k: usize, q: Order) -> Result<f64> {
    if let Order::Finite(v) = q {
        Order::new(v)?;
    }
    match q {
        Order::Infinity => index.knn_radius(x, k),
        _ => Ok(power_mean(&index.knn_distances(x, k)?, q)),
    }
}

/// DTM of order `q` at every sample point.
pub fn dtm_scores(index: &NeighborIndex, k: usize, q: Order) -> Result<Vec<f64>> {
    index.map_points(|i| dtm_score(index, index.point(i), k, q))
}

/// `a / b` with `0/0 = 1`, `a/0 = RATIO_CAP` and the result capped.
pub fn safe_ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            RATIO_CAP
        }
    } else {
        (a / b).min(RATIO_CAP)
    }
}

/// Raw DTMF₂ value: mean over `y ∈ N_k(x)` of `DTM₂(y) / DTM₂(x)`.
/// Close to 1 for points that look like their neighbors and below 1 for
/// points sitting in sparser territory than their neighbors.
pub fn dtmf2_raw(index: &NeighborIndex, k: usize) -> Result<Vec<f64>> {
    let lists = index.knn_all(k)?;
    let dtm2: Vec<f64> = lists
        .par_iter()
        .map(|l| dtm_from_list(l, Order::Finite(2.0)))
        .collect();
    Ok(lists
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            l.indices.iter().map(|&j| safe_ratio(dtm2[j], dtm2[i])).sum::<f64>() / l.len() as f64
        })
        .collect())
}

/// DTMF₂ anomaly score: the reciprocal of [`dtmf2_raw`].
pub fn dtmf2_score(index: &NeighborIndex, k: usize) -> Result<Vec<f64>> {
    Ok(dtmf2_raw(index, k)?
        .into_iter()
        .map(|raw| safe_ratio(1.0, raw))
        .collect())
}

/// Local outlier factor with `k` neighbors, the point itself excluded.
pub fn lof_score(index: &NeighborIndex, k: usize) -> Result<Vec<f64>> {
    let n = index.len();
    if n < 2 {
        return Err(Error::param("LOF needs at least 2 points"));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::KOutOfRange { k, min: 1, max: n - 1 });
    }
    let lists: Vec<NeighborList> = (0..n)
        .into_par_iter()
        .map(|i| {
            let full = index.knn_query(index.point(i), k + 1)?;
            let (indices, distances): (Vec<usize>, Vec<f64>) = full
                .indices
                .into_iter()
                .zip(full.distances)
                .filter(|(j, _)| *j != i)
                .take(k)
                .unzip();
            Ok(NeighborList { indices, distances })
        })
        .collect::<Result<_>>()?;
    let k_distance: Vec<f64> = lists.iter().map(NeighborList::radius).collect();
    // Mean reachability distance; its reciprocal is the local reachability
    // density, so lrd(o)/lrd(p) = reach(p)/reach(o).
    let reach: Vec<f64> = lists
        .par_iter()
        .map(|l| {
            l.indices
                .iter()
                .zip(&l.distances)
                .map(|(&o, &dist)| k_distance[o].max(dist))
                .sum::<f64>()
                / k as f64
        })
        .collect();
    Ok(lists
        .par_iter()
        .enumerate()
        .map(|(p, l)| l.indices.iter().map(|&o| safe_ratio(reach[p], reach[o])).sum::<f64>() / k as f64)
        .collect())
}

/// Scores every point of `dataset` under `config`.
pub fn score_dataset(dataset: &Dataset, config: &DetectorConfig) -> Result<ScoreReport> {
    let index = NeighborIndex::build(dataset);
    score_with_index(&index, config)
}

pub fn score_with_index(index: &NeighborIndex, config: &DetectorConfig) -> Result<ScoreReport> {
    let n = index.len();
    let k = match (config.method, config.neighbors) {
        // LOF excludes the point itself, so the default may not reach n.
        (Method::Lof, NeighborCount::Default) => NeighborCount::Default.resolve(n)?.min(n.saturating_sub(1)).max(1),
        (_, nc) => nc.resolve(n)?,
    };
    let scores = match config.method {
        Method::Knn | Method::Kthnn | Method::Dtm => dtm_scores(index, k, config.effective_q())?,
        Method::Dtmf => dtmf2_score(index, k)?,
        Method::Lof => lof_score(index, k)?,
    };
    if let Some(bad) = scores.iter().position(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Internal(format!("score {} at point {bad} is not finite and ≥ 0", scores[bad])));
    }
    Ok(ScoreReport {
        config: *config,
        k,
        n,
        d: index.dim(),
        scores,
    })
}

/// How many points to flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Flag the `c` highest scores (ties to the lower index).
    TopCount(usize),
    /// Flag every score strictly above the threshold.
    Threshold(f64),
}

/// Points ordered from most to least anomalous, ties to the lower index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

pub fn rank_anomalies(scores: &[f64], budget: Budget) -> Result<Vec<Label>> {
    let mut out = vec![Label::Normal; scores.len()];
    match budget {
        Budget::TopCount(c) => {
            if c > scores.len() {
                return Err(Error::param(format!("budget {c} exceeds n = {}", scores.len())));
            }
            for i in ranking(scores).into_iter().take(c) {
                out[i] = Label::Anomaly;
            }
        }
        Budget::Threshold(t) => {
            for (o, s) in out.iter_mut().zip(scores) {
                if *s > t {
                    *o = Label::Anomaly;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_scenario;
    use crate::rng::SeededRng;
    use serde_json::json;

    fn line(values: &[f64]) -> NeighborIndex {
        NeighborIndex::build(&Dataset::from_values(values).unwrap())
    }

    #[test]
    fn hand_computed_dtm() {
        let idx = line(&[0.0, 1.0, 3.0]);
        assert_eq!(dtm_score(&idx, &[0.0], 2, Order::Finite(1.0)).unwrap(), 0.5);
        let q2 = dtm_score(&idx, &[0.0], 2, Order::Finite(2.0)).unwrap();
        assert!((q2 - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(dtm_score(&idx, &[0.0], 2, Order::Infinity).unwrap(), 1.0);
    }

    #[test]
    fn coincident_neighbors_give_zero() {
        let idx = line(&[2.0, 2.0, 2.0, 7.0]);
        for q in [Order::Finite(1.0), Order::Finite(3.5), Order::Infinity] {
            assert_eq!(dtm_score(&idx, &[2.0], 3, q).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_q_and_k() {
        let idx = line(&[0.0, 1.0]);
        assert!(dtm_score(&idx, &[0.0], 1, Order::Finite(0.5)).is_err());
        assert!(dtm_score(&idx, &[0.0], 3, Order::Finite(1.0)).is_err());
        assert!(Order::new(0.9).is_err());
        assert!(Order::new(f64::NAN).is_err());
        assert_eq!("inf".parse::<Order>().unwrap(), Order::Infinity);
    }

    #[test]
    fn large_q_does_not_overflow() {
        // 20^1000 overflows f64; the factored form does not.
        let idx = line(&[0.0, 10.0, 20.0]);
        let s = dtm_score(&idx, &[0.0], 3, Order::Finite(1000.0)).unwrap();
        assert!(s.is_finite());
        assert!(s > 19.9 && s <= 20.0, "{s}");
    }

    #[test]
    fn default_k_is_three_percent() {
        assert_eq!(NeighborCount::Default.resolve(1000).unwrap(), 30);
        assert_eq!(NeighborCount::Default.resolve(10).unwrap(), 1);
        assert_eq!(NeighborCount::Mass(0.1).resolve(5000).unwrap(), 500);
        assert_eq!(NeighborCount::Mass(0.07).resolve(100).unwrap(), 7);
        assert!(NeighborCount::Mass(1.0).resolve(10).is_err());
        assert!(NeighborCount::K(11).resolve(10).is_err());
    }

    #[test]
    fn kthnn_scores_on_line() {
        let ds = Dataset::from_values(&[0.0, 1.0, 3.0]).unwrap();
        let r = score_dataset(&ds, &DetectorConfig::new(Method::Kthnn).with_k(2)).unwrap();
        assert_eq!(r.scores, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn knn_equals_dtm_q1() {
        let ds = generate_scenario("clustered", &json!({}), 1).unwrap().into_dataset();
        let a = score_dataset(&ds, &DetectorConfig::new(Method::Knn)).unwrap();
        let b = score_dataset(&ds, &DetectorConfig::dtm(Order::Finite(1.0))).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.k, 16);
    }

    #[test]
    fn regular_ring_has_unit_dtmf_and_lof() {
        let pts: Vec<[f64; 2]> = (0..60)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 60.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let idx = NeighborIndex::build(&Dataset::from_rows(&pts).unwrap());
        for raw in dtmf2_raw(&idx, 5).unwrap() {
            assert!((raw - 1.0).abs() < 1e-9, "{raw}");
        }
        for lof in lof_score(&idx, 4).unwrap() {
            assert!((lof - 1.0).abs() < 1e-6, "{lof}");
        }
    }

    #[test]
    fn identical_points_have_defined_scores() {
        let idx = NeighborIndex::build(&Dataset::from_rows(&[[1.0, 1.0]; 6]).unwrap());
        assert!(dtmf2_raw(&idx, 3).unwrap().iter().all(|&r| r == 1.0));
        assert!(dtmf2_score(&idx, 3).unwrap().iter().all(|&r| r == 1.0));
        assert!(lof_score(&idx, 3).unwrap().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn local_anomaly_has_low_raw_dtmf() {
        let ds = generate_scenario("local", &json!({}), 7).unwrap();
        let idx = NeighborIndex::build(ds.dataset());
        let k = NeighborCount::Default.resolve(ds.n()).unwrap();
        let raw = dtmf2_raw(&idx, k).unwrap();
        let score = dtmf2_score(&idx, k).unwrap();
        for i in ds.anomaly_indices() {
            assert!(raw[i] < 1.0);
            assert!(score[i] > 1.0);
        }
    }

    #[test]
    fn isolated_point_has_largest_lof() {
        let mut rng = SeededRng::new(21);
        let mut pts: Vec<[f64; 2]> = (0..80)
            .map(|_| [0.1 * rng.standard_normal(), 0.1 * rng.standard_normal()])
            .collect();
        pts.push([3.0, 3.0]);
        let idx = NeighborIndex::build(&Dataset::from_rows(&pts).unwrap());
        let lof = lof_score(&idx, 5).unwrap();
        assert_eq!(ranking(&lof)[0], 80);
    }

    #[test]
    fn lof_on_three_collinear_points() {
        let idx = line(&[0.0, 1.0, 2.0]);
        let lof = lof_score(&idx, 2).unwrap();
        assert!(lof.iter().all(|s| s.is_finite() && *s > 0.0));
        assert!(lof_score(&idx, 3).is_err());
        assert!(lof_score(&line(&[1.0]), 1).is_err());
    }

    #[test]
    fn rank_anomalies_budgets() {
        assert!(rank_anomalies(&[3.0, 1.0, 2.0], Budget::TopCount(0))
            .unwrap()
            .iter()
            .all(|l| *l == Label::Normal));
        assert_eq!(
            rank_anomalies(&[3.0, 1.0, 2.0], Budget::TopCount(1)).unwrap(),
            vec![Label::Anomaly, Label::Normal, Label::Normal]
        );
        assert_eq!(
            rank_anomalies(&[2.0, 2.0, 1.0], Budget::TopCount(1)).unwrap(),
            vec![Label::Anomaly, Label::Normal, Label::Normal]
        );
        assert_eq!(
            rank_anomalies(&[2.0, 2.0, 1.0], Budget::Threshold(1.5)).unwrap(),
            vec![Label::Anomaly, Label::Anomaly, Label::Normal]
        );
        assert!(rank_anomalies(&[1.0], Budget::TopCount(2)).is_err());
    }

    #[test]
    fn config_serialization() {
        let c = DetectorConfig::dtm(Order::Infinity).with_mass(0.1);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"inf\""));
        let back: DetectorConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
