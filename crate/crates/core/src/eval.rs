//! Ranking metrics, the paired Wilcoxon signed-rank test, and analysis of
//! where misranked normal points sit relative to the support boundary.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::{Label, LabeledDataset};
use crate::detectors::{ranking, rank_anomalies, Budget};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::param(format!("score {i} is not finite")));
    }
    let pos = labels.iter().filter(|l| l.is_anomaly()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass {
            positives: pos,
            negatives: neg,
        });
    }
    Ok((pos, neg))
}

/// Area under the ROC curve in the Mann-Whitney form: the fraction of
/// (anomaly, normal) pairs ranked correctly, ties counting one half.
///
/// Pair credits are accumulated in integer half-units, so the result equals
/// direct pair counting bit for bit.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]].is_anomaly() {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        twice_u += p * (2 * neg_below + q);
        neg_below += q;
        i = j;
    }
    Ok(twice_u as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// Mean of the precision at each rank holding an anomaly. Equal scores are
/// ranked by lower index first, without interpolation.
pub fn average_precision(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let (pos, _) = check_inputs(scores, labels)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, i) in ranking(scores).into_iter().enumerate() {
        if labels[i].is_anomaly() {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

pub fn evaluate(scores: &[f64], labels: &[Label]) -> Result<EvalResult> {
    let (n_pos, n_neg) = check_inputs(scores, labels)?;
    Ok(EvalResult {
        auc: roc_auc(scores, labels)?,
        ap: average_precision(scores, labels)?,
        n_pos,
        n_neg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// `a` tends to exceed `b`.
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_MAX_PAIRS`] nonzero differences, normal above.
    Auto,
    Exact,
    Normal,
}

pub const EXACT_MAX_PAIRS: usize = 20;
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the (mid-)ranks of the positive differences.
    pub statistic: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(a, b, alternative, WilcoxonMethod::Auto)
}

/// Mid-ranks (1-based, doubled so they stay integral) of `values`.
fn doubled_mid_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1..=j share the rank (i+1+j)/2.
        let doubled = (i + 1 + j) as u64;
        for &o in &order[i..j] {
            ranks[o] = doubled;
        }
        i = j;
    }
    ranks
}

/// Paired signed-rank test on `a − b`. Zero differences are dropped; tied
/// magnitudes get mid-ranks. The normal path applies the tie-corrected
/// variance and a continuity correction of 0.5.
pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    method: WilcoxonMethod,
) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if let Some(d) = diffs.iter().find(|d| !d.is_finite()) {
        return Err(Error::param(format!("non-finite difference {d}")));
    }
    if diffs.is_empty() {
        return Err(Error::NoNonzeroDifferences);
    }
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Err(Error::TooFewDifferences {
            found: n,
            required: MIN_PAIRS,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_mid_ranks(&magnitudes);
    let w2: u64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let method = match method {
        WilcoxonMethod::Auto if n <= EXACT_MAX_PAIRS => WilcoxonMethod::Exact,
        WilcoxonMethod::Auto => WilcoxonMethod::Normal,
        m => m,
    };
    let p_value = match method {
        WilcoxonMethod::Exact => exact_p(&ranks, w2, alternative)?,
        _ => normal_p(&magnitudes, w2, alternative),
    };
    Ok(WilcoxonResult {
        statistic: w2 as f64 / 2.0,
        n,
        p_value,
        method,
    })
}

/// Null distribution of the doubled statistic by dynamic programming over
/// the `2^n` equally likely sign patterns.
fn exact_p(ranks: &[u64], w2: u64, alternative: Alternative) -> Result<f64> {
    if ranks.len() > 60 {
        return Err(Error::param("exact Wilcoxon path supports at most 60 pairs"));
    }
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let patterns = 2f64.powi(ranks.len() as i32);
    let w = w2 as usize;
    let upper = counts[w..].iter().sum::<f64>() / patterns;
    let lower = counts[..=w].iter().sum::<f64>() / patterns;
    Ok(match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    })
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn normal_p(magnitudes: &[f64], w2: u64, alternative: Alternative) -> f64 {
    let n = magnitudes.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let w = w2 as f64 / 2.0;
    match alternative {
        Alternative::Greater => upper_tail((w - mean - 0.5) / sd),
        Alternative::Less => 1.0 - upper_tail((w - mean + 0.5) / sd),
        Alternative::TwoSided => (2.0 * upper_tail(((w - mean).abs() - 0.5).max(0.0) / sd)).min(1.0),
    }
}

/// Where misranked normals lie relative to the boundary of the normal support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// Oracle budget: the true anomaly count.
    pub budget: usize,
    pub n_normals: usize,
    /// Indices of normal points ranked inside the budget.
    pub misclassified: Vec<usize>,
    pub mean_proxy_misclassified: Option<f64>,
    pub mean_proxy_correct: Option<f64>,
    /// Spearman correlation over normal points between the misranked
    /// indicator and the boundary proxy; `None` if either is constant.
    pub rank_correlation: Option<f64>,
}

/// Flags the top `anomaly_count` scores and relates the normals among them
/// to `boundary_proxy`, where larger values mean closer to the boundary
/// (for a Gaussian blob, the distance from its center).
pub fn boundary_misclassification(labeled: &LabeledDataset, scores: &[f64], boundary_proxy: &[f64]) -> Result<BoundaryReport> {
    let labels = labeled.require_labels()?;
    let n = labels.len();
    if scores.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: scores.len(),
        });
    }
    if boundary_proxy.len() != n {
        return Err(Error::param(format!(
            "missing boundary distances: got {} for {n} points",
            boundary_proxy.len()
        )));
    }
    let budget = labeled.anomaly_count();
    let predicted = rank_anomalies(scores, Budget::TopCount(budget))?;
    let mut misclassified = Vec::new();
    let (mut indicator, mut proxy) = (Vec::new(), Vec::new());
    for i in 0..n {
        if labels[i].is_anomaly() {
            continue;
        }
        let p = boundary_proxy[i];
        if !p.is_finite() {
            return Err(Error::param(format!("boundary distance of point {i} is not finite")));
        }
        let wrong = predicted[i].is_anomaly();
        if wrong {
            misclassified.push(i);
        }
        indicator.push(f64::from(u8::from(wrong)));
        proxy.push(p);
    }
    let mean_of = |want: bool| {
        let vals: Vec<f64> = indicator
            .iter()
            .zip(&proxy)
            .filter(|(w, _)| (**w == 1.0) == want)
            .map(|(_, p)| *p)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    Ok(BoundaryReport {
        budget,
        n_normals: proxy.len(),
        mean_proxy_misclassified: mean_of(true),
        mean_proxy_correct: mean_of(false),
        rank_correlation: spearman(&indicator, &proxy),
        misclassified,
    })
}

/// Spearman correlation (Pearson on mid-ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx: Vec<f64> = doubled_mid_ranks(x).into_iter().map(|r| r as f64).collect();
    let ry: Vec<f64> = doubled_mid_ranks(y).into_iter().map(|r| r as f64).collect();
    pearson(&rx, &ry)
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter()
            .map(|&b| if b == 1 { Label::Anomaly } else { Label::Normal })
            .collect()
    }

    fn pair_count_auc(scores: &[f64], labels: &[Label]) -> f64 {
        let (mut twice, mut pairs) = (0u64, 0u64);
        for (i, li) in labels.iter().enumerate() {
            for (j, lj) in labels.iter().enumerate() {
                if li.is_anomaly() && !lj.is_anomaly() {
                    pairs += 1;
                    if scores[i] > scores[j] {
                        twice += 2;
                    } else if scores[i] == scores[j] {
                        twice += 1;
                    }
                }
            }
        }
        twice as f64 / (2 * pairs) as f64
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &labels(&[1, 1, 0, 0])).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.4; 5], &labels(&[1, 0, 1, 0, 0])).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.9], &labels(&[1, 0])).unwrap(), 0.0);
        assert!(matches!(
            roc_auc(&[0.1, 0.9], &labels(&[1, 1])),
            Err(Error::SingleClass { positives: 2, negatives: 0 })
        ));
        assert!(roc_auc(&[f64::NAN, 0.9], &labels(&[1, 0])).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.2, 0.1], &labels(&[1, 1, 0, 0])).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.1], &labels(&[0, 1])).unwrap(), 0.5);
        let ap = average_precision(&[4.0, 3.0, 2.0, 1.0], &labels(&[1, 0, 1, 0])).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        // Ties go to the lower index: the normal at index 0 comes first.
        assert_eq!(average_precision(&[1.0, 1.0], &labels(&[0, 1])).unwrap(), 0.5);
    }

    #[test]
    fn auc_matches_pair_counting_on_random_instances() {
        let mut rng = SeededRng::new(99);
        for _ in 0..200 {
            let n = 2 + (rng.uniform() * 49.0) as usize;
            let scores: Vec<f64> = (0..n).map(|_| (rng.uniform() * 6.0).floor()).collect();
            let mut labs: Vec<Label> = (0..n)
                .map(|_| if rng.uniform() < 0.3 { Label::Anomaly } else { Label::Normal })
                .collect();
            labs[0] = Label::Anomaly;
            labs[1] = Label::Normal;
            assert_eq!(roc_auc(&scores, &labs).unwrap(), pair_count_auc(&scores, &labs));
        }
    }

    #[test]
    fn wilcoxon_all_positive_five_pairs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b, Alternative::Greater).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 1.0 / 32.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        let two = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided).unwrap();
        assert_eq!(two.p_value, 1.0 / 16.0);
        let less = wilcoxon_signed_rank(&a, &b, Alternative::Less).unwrap();
        assert_eq!(less.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_errors() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let err = wilcoxon_signed_rank(&a, &a, Alternative::TwoSided).unwrap_err();
        assert_eq!(err.to_string(), "no nonzero differences");
        let b = [1.0, 2.0, 3.0, 0.0, 0.0];
        assert!(matches!(
            wilcoxon_signed_rank(&a, &b, Alternative::TwoSided),
            Err(Error::TooFewDifferences { found: 2, required: 5 })
        ));
        assert!(wilcoxon_signed_rank(&a, &b[..4], Alternative::TwoSided).is_err());
    }

    #[test]
    fn exact_and_normal_agree_at_twenty_pairs() {
        let mut rng = SeededRng::new(5);
        for _ in 0..50 {
            let a: Vec<f64> = (0..20).map(|_| rng.standard_normal() + 0.3).collect();
            let b: Vec<f64> = (0..20).map(|_| rng.standard_normal()).collect();
            for alt in [Alternative::TwoSided, Alternative::Greater, Alternative::Less] {
                let e = wilcoxon_signed_rank_with(&a, &b, alt, WilcoxonMethod::Exact).unwrap();
                let n = wilcoxon_signed_rank_with(&a, &b, alt, WilcoxonMethod::Normal).unwrap();
                assert!((e.p_value - n.p_value).abs() < 0.02, "{} vs {}", e.p_value, n.p_value);
            }
        }
    }

    #[test]
    fn auto_switches_to_normal_above_twenty() {
        let a: Vec<f64> = (1..=25).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 25], Alternative::Greater).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert!(r.p_value < 1e-4);
    }

    #[test]
    fn boundary_analysis_perfect_and_imperfect() {
        use crate::data::Dataset;
        let ds = Dataset::from_values(&[0.0, 0.1, 0.2, 0.9, 5.0]).unwrap();
        let labs = labels(&[0, 0, 0, 0, 1]);
        let labeled = LabeledDataset::new(ds, labs).unwrap();
        let proxy = [0.0, 0.1, 0.2, 0.9, 5.0];
        let perfect = boundary_misclassification(&labeled, &[0.1, 0.2, 0.3, 0.4, 9.0], &proxy).unwrap();
        assert!(perfect.misclassified.is_empty());
        assert_eq!(perfect.mean_proxy_misclassified, None);
        let bad = boundary_misclassification(&labeled, &[0.1, 0.2, 0.3, 10.0, 9.0], &proxy).unwrap();
        assert_eq!(bad.misclassified, vec![3]);
        assert_eq!(bad.mean_proxy_misclassified, Some(0.9));
        assert!(bad.rank_correlation.unwrap() > 0.7);
        assert!(boundary_misclassification(&labeled, &[0.0; 5], &proxy[..3]).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[3.0, 2.0]), None);
    }
}
