//! Safety-zone separation check on population DTMs, and calibration of the
//! regularity constant `C` from pilot samples.

use serde::{Deserialize, Serialize};

use super::bounds::{alpha_n, g0_threshold};
use super::reference::ReferenceDistribution;
use crate::data::Dataset;
use crate::detectors::{dtm_scores, k_from_mass, Order};
use crate::error::{Error, Result};
use crate::index::NeighborIndex;

/// Inputs of a separation check. `g` is the density-level profile of the
/// normal component: `a(x) ≥ g(d(x, ∂S₀))`, non-decreasing.
pub struct SeparationSetup<'a> {
    pub normal: &'a ReferenceDistribution,
    pub anomaly: &'a ReferenceDistribution,
    pub epsilon: f64,
    pub m: f64,
    pub q: Order,
    pub h: f64,
    pub eta: f64,
    pub b: f64,
    pub g: &'a dyn Fn(f64) -> f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `None` when the threshold is undefined for these parameters.
    pub g0: Option<f64>,
    /// `inf{z ≥ 0 : g(z) ≥ g₀}` restricted to the depths seen on the grid.
    pub safety_depth: Option<f64>,
    pub safety_points: usize,
    pub anomaly_points: usize,
    pub lhs_sup: Option<f64>,
    pub rhs_inf: Option<f64>,
    pub holds: bool,
    pub note: Option<String>,
}

impl SeparationReport {
    fn failed(g0: Option<f64>, depth: Option<f64>, anomaly_points: usize, note: String) -> Self {
        SeparationReport {
            g0,
            safety_depth: depth,
            safety_points: 0,
            anomaly_points,
            lhs_sup: None,
            rhs_inf: None,
            holds: false,
            note: Some(note),
        }
    }
}

/// Smallest `z` in `[0, z_max]` with `g(z) ≥ level`, by bisection.
fn generalized_inverse(g: &dyn Fn(f64) -> f64, level: f64, z_max: f64) -> Option<f64> {
    if g(0.0) >= level {
        return Some(0.0);
    }
    if g(z_max) < level || g(z_max).is_nan() {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, z_max);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Evaluates `sup_{A_η} d + h < inf_{S₁} d` for the population DTM of the
/// mixture, with the sup taken over grid points of the safety zone and the
/// inf over the anomaly grid. An empty safety zone yields `holds = false`.
pub fn separation_check(setup: &SeparationSetup<'_>, normal_grid: &Dataset, anomaly_grid: &Dataset) -> Result<SeparationReport> {
    if setup.m <= setup.epsilon || setup.m.is_nan() || setup.epsilon.is_nan() {
        return Err(Error::MassNotAboveContamination {
            m: setup.m,
            epsilon: setup.epsilon,
        });
    }
    if setup.h < 0.0 || setup.h.is_nan() {
        return Err(Error::param("h must be ≥ 0"));
    }
    let mixture = ReferenceDistribution::mixture(setup.normal.clone(), setup.anomaly.clone(), setup.epsilon);
    mixture.validate()?;
    let n_anom = anomaly_grid.n();

    let g0 = match g0_threshold(setup.m, setup.epsilon, setup.eta, setup.h, setup.b, setup.q) {
        Ok(v) => v,
        Err(Error::SeparationTooSmall(msg)) => return Ok(SeparationReport::failed(None, None, n_anom, msg)),
        Err(e) => return Err(e),
    };
    let mut depths = Vec::with_capacity(normal_grid.n());
    for x in normal_grid.rows() {
        let inside = setup.normal.contains(x);
        depths.push(if inside { Some(setup.normal.boundary_distance(x)?) } else { None });
    }
    let z_max = depths.iter().flatten().copied().fold(0.0, f64::max);
    let Some(depth) = generalized_inverse(setup.g, g0, z_max) else {
        return Ok(SeparationReport::failed(
            Some(g0),
            None,
            n_anom,
            "safety zone contains no grid point".into(),
        ));
    };
    let zone: Vec<&[f64]> = normal_grid
        .rows()
        .zip(&depths)
        .filter(|(_, z)| z.is_some_and(|z| z >= depth))
        .map(|(x, _)| x)
        .collect();
    if zone.is_empty() {
        return Ok(SeparationReport::failed(
            Some(g0),
            Some(depth),
            n_anom,
            "safety zone contains no grid point".into(),
        ));
    }
    if n_anom == 0 {
        return Ok(SeparationReport::failed(Some(g0), Some(depth), 0, "anomaly grid is empty".into()));
    }
    let mut lhs = f64::NEG_INFINITY;
    for x in &zone {
        lhs = lhs.max(mixture.population_dtm(x, setup.m, setup.q)?);
    }
    let mut rhs = f64::INFINITY;
    for y in anomaly_grid.rows() {
        rhs = rhs.min(mixture.population_dtm(y, setup.m, setup.q)?);
    }
    Ok(SeparationReport {
        g0: Some(g0),
        safety_depth: Some(depth),
        safety_points: zone.len(),
        anomaly_points: n_anom,
        lhs_sup: Some(lhs),
        rhs_inf: Some(rhs),
        holds: lhs + setup.h < rhs,
        note: None,
    })
}

/// `max_i |d̂(X_i) − d(X_i)|` with `k = ⌈m n⌉`.
pub fn max_sample_deviation(dist: &ReferenceDistribution, sample: &Dataset, m: f64, q: Order) -> Result<f64> {
    let index = NeighborIndex::build(sample);
    let k = k_from_mass(m, sample.n());
    let empirical = dtm_scores(&index, k, q)?;
    let mut worst = 0.0f64;
    for (x, e) in sample.rows().zip(&empirical) {
        worst = worst.max((e - dist.population_dtm(x, m, q)?).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c: f64,
    pub max_deviation: f64,
    /// `α_n(α_n + √m)` for the pilot size.
    pub unit_bound: f64,
}

/// Smallest `C` making the sample DTM bound cover every pilot sample.
pub fn calibrate_c(dist: &ReferenceDistribution, pilots: &[Dataset], m: f64, q: Order, delta: f64) -> Result<Calibration> {
    if pilots.is_empty() {
        return Err(Error::EmptyInput("no pilot samples".into()));
    }
    let mut best: Option<Calibration> = None;
    for pilot in pilots {
        let a = alpha_n(pilot.n(), delta)?;
        let unit_bound = a * (a + m.sqrt());
        let dev = max_sample_deviation(dist, pilot, m, q)?;
        let c = dev / unit_bound;
        if best.as_ref().map_or(true, |b| c > b.c) {
            best = Some(Calibration {
                c,
                max_deviation: dev,
                unit_bound,
            });
        }
    }
    Ok(best.expect("non-empty pilots"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::full_support_eta;

    fn unit() -> ReferenceDistribution {
        ReferenceDistribution::UniformInterval { low: 0.0, high: 1.0 }
    }

    fn grid(points: usize) -> Dataset {
        Dataset::from_values(&(0..=points).map(|i| i as f64 / points as f64).collect::<Vec<_>>()).unwrap()
    }

    fn check(eta: f64, h: f64) -> SeparationReport {
        let normal = unit();
        let anomaly = ReferenceDistribution::PointMass { location: vec![1.0 + eta] };
        let a0 = |_: f64| 1.0;
        let setup = SeparationSetup {
            normal: &normal,
            anomaly: &anomaly,
            epsilon: 0.05,
            m: 0.1,
            q: Order::Finite(2.0),
            h,
            eta,
            b: 1.0,
            g: &a0,
        };
        let anomalies = Dataset::from_values(&[1.0 + eta]).unwrap();
        separation_check(&setup, &grid(200), &anomalies).unwrap()
    }

    #[test]
    fn holds_above_full_support_eta() {
        let eta_star = full_support_eta(0.1, 0.05, 1.0, 1.0, Order::Finite(2.0), 0.0).unwrap();
        let r = check(2.0 * eta_star, 0.0);
        assert!(r.holds, "{r:?}");
        assert_eq!(r.safety_points, 201);
        assert_eq!(r.safety_depth, Some(0.0));
    }

    #[test]
    fn touching_supports_do_not_separate() {
        let r = check(0.0, 0.0);
        assert!(!r.holds);
        assert!(r.note.is_some());
    }

    #[test]
    fn huge_buffer_does_not_separate() {
        let r = check(0.5, 100.0);
        assert!(!r.holds);
    }

    #[test]
    fn mass_must_exceed_contamination() {
        let normal = unit();
        let anomaly = ReferenceDistribution::PointMass { location: vec![2.0] };
        let g = |_: f64| 1.0;
        let setup = SeparationSetup {
            normal: &normal,
            anomaly: &anomaly,
            epsilon: 0.05,
            m: 0.01,
            q: Order::Infinity,
            h: 0.0,
            eta: 1.0,
            b: 1.0,
            g: &g,
        };
        let err = separation_check(&setup, &grid(10), &Dataset::from_values(&[2.0]).unwrap()).unwrap_err();
        assert!(err.to_string().starts_with("requires m > ε"));
    }

    #[test]
    fn increasing_profile_restricts_the_zone() {
        let normal = unit();
        let anomaly = ReferenceDistribution::PointMass { location: vec![3.0] };
        // g(z) = 4z reaches any level eventually; the zone keeps deep points.
        let g = |z: f64| 4.0 * z;
        let setup = SeparationSetup {
            normal: &normal,
            anomaly: &anomaly,
            epsilon: 0.05,
            m: 0.1,
            q: Order::Infinity,
            h: 0.0,
            eta: 2.0,
            b: 1.0,
            g: &g,
        };
        let r = separation_check(&setup, &grid(100), &Dataset::from_values(&[3.0]).unwrap()).unwrap();
        let g0 = 0.1 / 0.95 / 2.0;
        assert!((r.g0.unwrap() - g0).abs() < 1e-15);
        assert!((r.safety_depth.unwrap() - g0 / 4.0).abs() < 1e-12);
        assert!(r.safety_points < 101 && r.safety_points > 90);
        assert!(r.holds);
    }

    #[test]
    fn calibration_covers_the_pilot() {
        let dist = unit();
        let pilots: Vec<Dataset> = (0..3)
            .map(|s| dist.sample(400, s).unwrap().into_dataset())
            .collect();
        let cal = calibrate_c(&dist, &pilots, 0.05, Order::Finite(2.0), 0.05).unwrap();
        assert!(cal.c > 0.0);
        for p in &pilots {
            let dev = max_sample_deviation(&dist, p, 0.05, Order::Finite(2.0)).unwrap();
            assert!(dev <= cal.c * cal.unit_bound * (1.0 + 1e-12));
        }
    }
}
