//! Component distributions and Huber-contaminated sampling.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

const GENERATOR_IDS: &[&str] = &["gaussian", "uniform_box", "uniform_ball", "circle", "point_mass"];

/// A component distribution, identified by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Isotropic Gaussian.
    Gaussian { mean: Vec<f64>, std: f64 },
    /// Uniform on the axis-aligned box `[low, high]`.
    UniformBox { low: Vec<f64>, high: Vec<f64> },
    /// Uniform on a closed Euclidean ball.
    UniformBall { center: Vec<f64>, radius: f64 },
    /// Uniform angle on a circle in the plane, radius perturbed by
    /// `Uniform[-jitter, jitter]`.
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        jitter: f64,
    },
    /// Dirac mass.
    PointMass { location: Vec<f64> },
}

impl Generator {
    /// Parses a JSON object of the form `{"kind": "...", ...}`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::param("generator needs a string field 'kind'"))?;
        if !GENERATOR_IDS.contains(&kind) {
            return Err(Error::UnknownGenerator(kind.to_string()));
        }
        let generator: Generator = serde_json::from_value(value.clone())
            .map_err(|e| Error::param(format!("generator '{kind}': {e}")))?;
        generator.validate()?;
        Ok(generator)
    }

    pub fn dim(&self) -> usize {
        match self {
            Generator::Gaussian { mean, .. } => mean.len(),
            Generator::UniformBox { low, .. } => low.len(),
            Generator::UniformBall { center, .. } => center.len(),
            Generator::Circle { .. } => 2,
            Generator::PointMass { location } => location.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if self.dim() == 0 {
            return Err(Error::param("generator dimension must be at least 1"));
        }
        match self {
            Generator::Gaussian { mean, std } => {
                if !finite(mean) || !std.is_finite() || *std < 0.0 {
                    return Err(Error::param("gaussian: mean must be finite and std ≥ 0"));
                }
            }
            Generator::UniformBox { low, high } => {
                if low.len() != high.len() {
                    return Err(Error::param("uniform_box: low and high differ in length"));
                }
                if !finite(low) || !finite(high) || low.iter().zip(high).any(|(l, h)| l > h) {
                    return Err(Error::param("uniform_box: need finite low ≤ high"));
                }
            }
            Generator::UniformBall { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius < 0.0 {
                    return Err(Error::param("uniform_ball: negative or non-finite radius"));
                }
            }
            Generator::Circle { center, radius, jitter } => {
                if !finite(center) || !radius.is_finite() || *radius < 0.0 {
                    return Err(Error::param("circle: negative or non-finite radius"));
                }
                if !jitter.is_finite() || *jitter < 0.0 {
                    return Err(Error::param("circle: jitter must be ≥ 0"));
                }
            }
            Generator::PointMass { location } => {
                if !finite(location) {
                    return Err(Error::param("point_mass: location must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Appends one draw to `out`.
    pub fn sample_into(&self, rng: &mut SeededRng, out: &mut Vec<f64>) {
        match self {
            Generator::Gaussian { mean, std } => {
                out.extend(mean.iter().map(|m| m + std * rng.standard_normal()));
            }
            Generator::UniformBox { low, high } => {
                out.extend(low.iter().zip(high).map(|(l, h)| rng.uniform_range(*l, *h)));
            }
            Generator::UniformBall { center, radius } => {
                let u = rng.unit_ball(center.len());
                out.extend(center.iter().zip(u).map(|(c, v)| c + radius * v));
            }
            Generator::Circle { center, radius, jitter } => {
                let (c, s) = rng.unit_circle();
                let r = if *jitter > 0.0 {
                    radius + rng.uniform_range(-jitter, *jitter)
                } else {
                    *radius
                };
                out.push(center[0] + r * c);
                out.push(center[1] + r * s);
            }
            Generator::PointMass { location } => out.extend_from_slice(location),
        }
    }
}

/// Huber contamination `P = (1-ε)P₀ + εP₁` with a sample size and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub normal: Generator,
    pub anomaly: Generator,
    pub epsilon: f64,
    pub n: usize,
    pub seed: u64,
}

impl ContaminationSpec {
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let field = |name: &str| {
            value
                .get(name)
                .ok_or_else(|| Error::param(format!("contamination spec is missing '{name}'")))
        };
        let normal = Generator::from_json(field("normal")?)?;
        let anomaly = Generator::from_json(field("anomaly")?)?;
        let epsilon = field("epsilon")?
            .as_f64()
            .ok_or_else(|| Error::param("epsilon must be a number"))?;
        let n = field("n")?
            .as_u64()
            .ok_or_else(|| Error::param("n must be a non-negative integer"))? as usize;
        let seed = value.get("seed").and_then(|s| s.as_u64()).unwrap_or(0);
        Ok(Self {
            normal,
            anomaly,
            epsilon,
            n,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.normal.validate()?;
        self.anomaly.validate()?;
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::param(format!("epsilon = {} not in [0, 1)", self.epsilon)));
        }
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        if self.normal.dim() != self.anomaly.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.normal.dim(),
                found: self.anomaly.dim(),
            });
        }
        Ok(())
    }
}

/// Draws `spec.n` points; each comes from the anomaly component with
/// probability ε, independently, and its label records that component.
pub fn sample_contaminated(spec: &ContaminationSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let d = spec.normal.dim();
    let mut rng = SeededRng::new(spec.seed);
    let mut points = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        if rng.uniform() < spec.epsilon {
            spec.anomaly.sample_into(&mut rng, &mut points);
            labels.push(Label::Anomaly);
        } else {
            spec.normal.sample_into(&mut rng, &mut points);
            labels.push(Label::Normal);
        }
    }
    LabeledDataset::new(Dataset::new(points, d)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec(epsilon: f64, n: usize, seed: u64) -> ContaminationSpec {
        ContaminationSpec {
            normal: Generator::UniformBox {
                low: vec![0.0],
                high: vec![1.0],
            },
            anomaly: Generator::PointMass {
                location: vec![3.0],
            },
            epsilon,
            n,
            seed,
        }
    }

    #[test]
    fn no_contamination_means_all_normal() {
        let ds = sample_contaminated(&spec(0.0, 100, 1)).unwrap();
        assert_eq!(ds.n(), 100);
        assert_eq!(ds.anomaly_count(), 0);
    }

    #[test]
    fn anomaly_count_within_binomial_interval() {
        assert!(binomial_two_sided_tail(10_000, 0.05, 400, 600) < 1e-4);
        for seed in 0..20 {
            let ds = sample_contaminated(&spec(0.05, 10_000, seed)).unwrap();
            let c = ds.anomaly_count();
            assert!((400..=600).contains(&c), "seed {seed}: {c}");
        }
    }

    /// `P(X < lo) + P(X > hi)` for `X ~ Binomial(n, p)`, summed from the
    /// exact pmf in log space.
    fn binomial_two_sided_tail(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
        let mut log_fact = vec![0.0f64; n as usize + 1];
        for i in 1..=n as usize {
            log_fact[i] = log_fact[i - 1] + (i as f64).ln();
        }
        (0..=n)
            .filter(|&k| k < lo || k > hi)
            .map(|k| {
                let (k, nn) = (k as usize, n as usize);
                (log_fact[nn] - log_fact[k] - log_fact[nn - k]
                    + k as f64 * p.ln()
                    + (nn - k) as f64 * (1.0 - p).ln())
                .exp()
            })
            .sum()
    }

    #[test]
    fn labels_record_the_component() {
        let ds = sample_contaminated(&spec(0.3, 2000, 5)).unwrap();
        for (p, l) in ds.dataset().rows().zip(ds.labels()) {
            match l {
                Label::Anomaly => assert_eq!(p, &[3.0]),
                Label::Normal => assert!((0.0..=1.0).contains(&p[0])),
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = sample_contaminated(&spec(0.1, 500, 9)).unwrap();
        let b = sample_contaminated(&spec(0.1, 500, 9)).unwrap();
        assert_eq!(a, b);
        let c = sample_contaminated(&spec(0.1, 500, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs() {
        assert!(sample_contaminated(&spec(1.0, 10, 0)).is_err());
        assert!(sample_contaminated(&spec(-0.1, 10, 0)).is_err());
        assert!(sample_contaminated(&spec(0.1, 0, 0)).is_err());
        let mut s = spec(0.1, 10, 0);
        s.anomaly = Generator::UniformBall {
            center: vec![0.0],
            radius: -1.0,
        };
        assert!(sample_contaminated(&s).is_err());
        let mut s = spec(0.1, 10, 0);
        s.anomaly = Generator::PointMass {
            location: vec![0.0, 0.0],
        };
        assert!(matches!(
            sample_contaminated(&s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_generators() {
        let g = Generator::from_json(&json!({"kind": "gaussian", "mean": [0.0, 0.0], "std": 1.0}))
            .unwrap();
        assert_eq!(g.dim(), 2);
        assert!(matches!(
            Generator::from_json(&json!({"kind": "pareto"})),
            Err(Error::UnknownGenerator(_))
        ));
        assert!(Generator::from_json(&json!({"kind": "uniform_ball", "center": [0.0], "radius": -2.0}))
            .is_err());
        let spec = ContaminationSpec::from_json(&json!({
            "normal": {"kind": "uniform_box", "low": [0.0], "high": [1.0]},
            "anomaly": {"kind": "point_mass", "location": [2.0]},
            "epsilon": 0.05, "n": 10, "seed": 3
        }))
        .unwrap();
        assert_eq!(spec.n, 10);
        assert_eq!(spec.seed, 3);
    }
}
