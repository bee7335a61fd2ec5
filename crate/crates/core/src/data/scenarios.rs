//! Hand-built scenarios that stress different detector families.
//!
//! Parameter defaults were chosen to look like the usual textbook pictures
//! (a ring with anomalies in the middle, a dense and a sparse cluster with
//! anomalies next to the dense one, a far-away anomaly cluster). Normals
//! are always emitted first, anomalies last, and normals are drawn before
//! anomalies from the same stream, so changing only the separation keeps
//! every normal point fixed.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingParams {
    pub n_normal: usize,
    pub radius: f64,
    pub n_anomaly: usize,
    /// Radial perturbation bound for normals.
    pub jitter: f64,
    /// Place normals at equal angular spacing instead of uniform angles.
    pub evenly_spaced: bool,
    /// Anomalies are spread uniformly in a disc of this radius at the center.
    pub anomaly_spread: f64,
}

impl Default for RingParams {
    fn default() -> Self {
        Self {
            n_normal: 100,
            radius: 1.0,
            n_anomaly: 2,
            jitter: 0.0,
            evenly_spaced: false,
            anomaly_spread: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalParams {
    pub n_dense: usize,
    pub dense_std: f64,
    pub n_sparse: usize,
    pub sparse_std: f64,
    /// Distance between the two cluster centers.
    pub cluster_distance: f64,
    pub n_anomaly: usize,
    /// Distance of each anomaly from the dense cluster's center.
    pub anomaly_offset: f64,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            n_dense: 150,
            dense_std: 0.1,
            n_sparse: 150,
            sparse_std: 1.0,
            cluster_distance: 6.0,
            n_anomaly: 2,
            anomaly_offset: 0.7,
        }
    }
}

/// Standard-normal blob in the plane plus a small Gaussian anomaly cluster
/// whose center lies at distance `eta` from the blob's center. With the
/// defaults the cluster holds slightly fewer points than the default
/// neighbor count (16 of 514), so every anomaly's neighborhood reaches back
/// to the blob while its local density stays comparable to its neighbors'.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteredParams {
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub anomaly_std: f64,
    pub eta: f64,
}

impl Default for ClusteredParams {
    fn default() -> Self {
        Self {
            n_normal: 500,
            n_anomaly: 14,
            anomaly_std: 0.5,
            eta: 10.0,
        }
    }
}

/// Same geometry as [`ClusteredParams`] with five anomalies by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShrinkingParams {
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub anomaly_std: f64,
    pub eta: f64,
}

impl Default for ShrinkingParams {
    fn default() -> Self {
        Self {
            n_normal: 500,
            n_anomaly: 5,
            anomaly_std: 0.1,
            eta: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    Ring(RingParams),
    Local(LocalParams),
    Clustered(ClusteredParams),
    ShrinkingSeparation(ShrinkingParams),
}

pub const SCENARIO_NAMES: &[&str] = &["ring", "local", "clustered", "shrinking_separation"];

impl Scenario {
    /// Builds a scenario from its name and a (possibly empty) JSON object of
    /// parameter overrides.
    pub fn from_name(name: &str, params: &serde_json::Value) -> Result<Self> {
        let params = if params.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            params.clone()
        };
        let parse_err = |e: serde_json::Error| Error::param(format!("scenario '{name}': {e}"));
        Ok(match name {
            "ring" => Scenario::Ring(serde_json::from_value(params).map_err(parse_err)?),
            "local" => Scenario::Local(serde_json::from_value(params).map_err(parse_err)?),
            "clustered" => Scenario::Clustered(serde_json::from_value(params).map_err(parse_err)?),
            "shrinking_separation" => {
                Scenario::ShrinkingSeparation(serde_json::from_value(params).map_err(parse_err)?)
            }
            other => return Err(Error::UnknownScenario(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Ring(_) => "ring",
            Scenario::Local(_) => "local",
            Scenario::Clustered(_) => "clustered",
            Scenario::ShrinkingSeparation(_) => "shrinking_separation",
        }
    }

    /// Center of the normal component, used as the reference point for
    /// distance-from-center diagnostics.
    pub fn normal_center(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    pub fn generate(&self, seed: u64) -> Result<LabeledDataset> {
        let mut rng = SeededRng::new(seed);
        let mut pts: Vec<f64> = Vec::new();
        let mut labels = Vec::new();
        match self {
            Scenario::Ring(p) => {
                check_count("n_normal", p.n_normal)?;
                check_nonneg("radius", p.radius)?;
                check_nonneg("jitter", p.jitter)?;
                check_nonneg("anomaly_spread", p.anomaly_spread)?;
                let phase = 2.0 * std::f64::consts::PI * rng.uniform();
                for i in 0..p.n_normal {
                    let (c, s) = if p.evenly_spaced {
                        let t = phase + 2.0 * std::f64::consts::PI * i as f64 / p.n_normal as f64;
                        (libm::cos(t), libm::sin(t))
                    } else {
                        rng.unit_circle()
                    };
                    let r = if p.jitter > 0.0 {
                        p.radius + rng.uniform_range(-p.jitter, p.jitter)
                    } else {
                        p.radius
                    };
                    push(&mut pts, &mut labels, [r * c, r * s], Label::Normal);
                }
                for _ in 0..p.n_anomaly {
                    let u = rng.unit_ball(2);
                    let at = [p.anomaly_spread * u[0], p.anomaly_spread * u[1]];
                    push(&mut pts, &mut labels, at, Label::Anomaly);
                }
            }
            Scenario::Local(p) => {
                check_count("n_dense", p.n_dense)?;
                check_count("n_sparse", p.n_sparse)?;
                check_nonneg("dense_std", p.dense_std)?;
                check_nonneg("sparse_std", p.sparse_std)?;
                check_nonneg("anomaly_offset", p.anomaly_offset)?;
                for _ in 0..p.n_dense {
                    let at = [
                        p.dense_std * rng.standard_normal(),
                        p.dense_std * rng.standard_normal(),
                    ];
                    push(&mut pts, &mut labels, at, Label::Normal);
                }
                for _ in 0..p.n_sparse {
                    let at = [
                        p.cluster_distance + p.sparse_std * rng.standard_normal(),
                        p.sparse_std * rng.standard_normal(),
                    ];
                    push(&mut pts, &mut labels, at, Label::Normal);
                }
                // Anomalies sit on the far side of the dense cluster, spaced
                // evenly over a half circle.
                for i in 0..p.n_anomaly {
                    let t = std::f64::consts::FRAC_PI_2
                        + std::f64::consts::PI * (i as f64 + 0.5) / p.n_anomaly as f64;
                    let at = [p.anomaly_offset * libm::cos(t), p.anomaly_offset * libm::sin(t)];
                    push(&mut pts, &mut labels, at, Label::Anomaly);
                }
            }
            Scenario::Clustered(ClusteredParams {
                n_normal,
                n_anomaly,
                anomaly_std,
                eta,
            })
            | Scenario::ShrinkingSeparation(ShrinkingParams {
                n_normal,
                n_anomaly,
                anomaly_std,
                eta,
            }) => {
                check_count("n_normal", *n_normal)?;
                check_count("n_anomaly", *n_anomaly)?;
                check_nonneg("anomaly_std", *anomaly_std)?;
                check_nonneg("eta", *eta)?;
                blob_with_cluster(&mut rng, *n_normal, *n_anomaly, *anomaly_std, *eta, &mut pts, &mut labels);
            }
        }
        LabeledDataset::new(Dataset::new(pts, 2)?, labels)
    }
}

/// Name-based entry point; `params` is a JSON object of overrides.
pub fn generate_scenario(name: &str, params: &serde_json::Value, seed: u64) -> Result<LabeledDataset> {
    Scenario::from_name(name, params)?.generate(seed)
}

fn blob_with_cluster(
    rng: &mut SeededRng,
    n_normal: usize,
    n_anomaly: usize,
    anomaly_std: f64,
    eta: f64,
    pts: &mut Vec<f64>,
    labels: &mut Vec<Label>,
) {
    for _ in 0..n_normal {
        let at = [rng.standard_normal(), rng.standard_normal()];
        push(pts, labels, at, Label::Normal);
    }
    for _ in 0..n_anomaly {
        let at = [
            eta + anomaly_std * rng.standard_normal(),
            anomaly_std * rng.standard_normal(),
        ];
        push(pts, labels, at, Label::Anomaly);
    }
}

fn push(pts: &mut Vec<f64>, labels: &mut Vec<Label>, at: [f64; 2], label: Label) {
    pts.extend_from_slice(&at);
    labels.push(label);
}

fn check_count(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::param(format!("{name} must be positive")));
    }
    Ok(())
}

fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::param(format!("{name} must be finite and ≥ 0")));
    }
    Ok(())
}
