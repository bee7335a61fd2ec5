//! Reference distributions with computable ball masses, used as population
//! oracles for the p-NN radius `r_p(x) = inf{r > 0 : P(B(x, r)) ≥ p}` and
//! the population DTM `d(x) = ((1/m)∫₀^m r_p(x)^q dp)^(1/q)`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::data::{sample_contaminated, ContaminationSpec, Generator, LabeledDataset};
use crate::detectors::Order;
use crate::error::{Error, Result};
use crate::index::squared_distance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceDistribution {
    /// Uniform on `[low, high] ⊂ ℝ`.
    UniformInterval { low: f64, high: f64 },
    /// Uniform on a closed ball in `ℝ^d`.
    UniformBall { center: Vec<f64>, radius: f64 },
    PointMass { location: Vec<f64> },
    /// `(1-ε)·normal + ε·anomaly`.
    #[serde(rename = "huber_mixture")]
    Mixture {
        normal: Box<ReferenceDistribution>,
        anomaly: Box<ReferenceDistribution>,
        epsilon: f64,
    },
}

fn norm(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Fraction of a `d`-ball of radius `radius` cut off by a cap of height `h`.
fn cap_fraction(d: usize, h: f64, radius: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 2.0 * radius {
        return 1.0;
    }
    if h > radius {
        return 1.0 - cap_fraction(d, 2.0 * radius - h, radius);
    }
    let x = ((2.0 * radius * h - h * h) / (radius * radius)).clamp(0.0, 1.0);
    0.5 * beta_reg((d as f64 + 1.0) / 2.0, 0.5, x)
}

impl ReferenceDistribution {
    pub fn mixture(normal: ReferenceDistribution, anomaly: ReferenceDistribution, epsilon: f64) -> Self {
        ReferenceDistribution::Mixture {
            normal: Box::new(normal),
            anomaly: Box::new(anomaly),
            epsilon,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ReferenceDistribution::UniformInterval { .. } => 1,
            ReferenceDistribution::UniformBall { center, .. } => center.len(),
            ReferenceDistribution::PointMass { location } => location.len(),
            ReferenceDistribution::Mixture { normal, .. } => normal.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReferenceDistribution::UniformInterval { low, high } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::param("uniform_interval needs finite low ≤ high"));
                }
            }
            ReferenceDistribution::UniformBall { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::param("uniform_ball center must be finite and non-empty"));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::param("uniform_ball radius must be ≥ 0"));
                }
            }
            ReferenceDistribution::PointMass { location } => {
                if location.is_empty() || location.iter().any(|c| !c.is_finite()) {
                    return Err(Error::param("point_mass location must be finite and non-empty"));
                }
            }
            ReferenceDistribution::Mixture {
                normal,
                anomaly,
                epsilon,
            } => {
                normal.validate()?;
                anomaly.validate()?;
                if !(0.0..1.0).contains(epsilon) {
                    return Err(Error::param(format!("mixture ε = {epsilon} not in [0, 1)")));
                }
                if normal.dim() != anomaly.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: normal.dim(),
                        found: anomaly.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `P(B(x, r))` for the closed ball.
    pub fn ball_mass(&self, x: &[f64], r: f64) -> f64 {
        match self {
            ReferenceDistribution::UniformInterval { low, high } => {
                let len = high - low;
                if len == 0.0 {
                    return f64::from((x[0] - low).abs() <= r);
                }
                (((x[0] + r).min(*high) - (x[0] - r).max(*low)) / len).clamp(0.0, 1.0)
            }
            ReferenceDistribution::UniformBall { center, radius } => {
                let big = *radius;
                let s = norm(x, center);
                if big == 0.0 {
                    return f64::from(s <= r);
                }
                let d = center.len();
                if s + r <= big {
                    (r / big).powi(d as i32)
                } else if r >= s + big {
                    1.0
                } else if s >= r + big {
                    0.0
                } else {
                    // Lens: cap of the support ball plus cap of the query ball,
                    // split by the radical hyperplane.
                    let a = (s * s + big * big - r * r) / (2.0 * s);
                    let own = cap_fraction(d, big - a, big);
                    let other = cap_fraction(d, r - (s - a), r) * (r / big).powi(d as i32);
                    (own + other).clamp(0.0, 1.0)
                }
            }
            ReferenceDistribution::PointMass { location } => f64::from(norm(x, location) <= r),
            ReferenceDistribution::Mixture {
                normal,
                anomaly,
                epsilon,
            } => (1.0 - epsilon) * normal.ball_mass(x, r) + epsilon * anomaly.ball_mass(x, r),
        }
    }

    /// A radius at which the ball around `x` holds all the mass.
    fn covering_radius(&self, x: &[f64]) -> f64 {
        match self {
            ReferenceDistribution::UniformInterval { low, high } => (x[0] - low).abs().max((x[0] - high).abs()),
            ReferenceDistribution::UniformBall { center, radius } => norm(x, center) + radius,
            ReferenceDistribution::PointMass { location } => norm(x, location),
            ReferenceDistribution::Mixture { normal, anomaly, .. } => {
                normal.covering_radius(x).max(anomaly.covering_radius(x))
            }
        }
    }

    /// Population p-NN radius. Closed form for intervals, point masses and
    /// ball centers; bisection on `r ↦ P(B(x, r))` otherwise.
    pub fn population_radius(&self, x: &[f64], p: f64) -> Result<f64> {
        self.check_point(x)?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param(format!("p = {p} not in (0, 1]")));
        }
        Ok(self.radius_unchecked(x, p))
    }

    fn radius_unchecked(&self, x: &[f64], p: f64) -> f64 {
        match self {
            ReferenceDistribution::UniformInterval { low, high } if high > low => {
                let len = high - low;
                let target = p * len;
                let x = x[0];
                if x < *low {
                    return (low - x) + target;
                }
                if x > *high {
                    return (x - high) + target;
                }
                let near = (x - low).min(high - x);
                if target <= 2.0 * near {
                    target / 2.0
                } else {
                    target - near
                }
            }
            ReferenceDistribution::PointMass { location } => norm(x, location),
            ReferenceDistribution::UniformBall { center, radius } if norm(x, center) == 0.0 => {
                radius * p.powf(1.0 / center.len() as f64)
            }
            _ => self.bisect_radius(x, p),
        }
    }

    fn bisect_radius(&self, x: &[f64], p: f64) -> f64 {
        if self.ball_mass(x, 0.0) >= p {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, self.covering_radius(x));
        for _ in 0..200 {
            if hi - lo <= 1e-13 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.ball_mass(x, mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Population DTM of order `q` with mass `m`. Finite `q` integrates
    /// `r_p^q` over `[0, m]` by adaptive Simpson (relative tolerance 1e-9 or
    /// better); `q = ∞` returns `r_m`.
    pub fn population_dtm(&self, x: &[f64], m: f64, q: Order) -> Result<f64> {
        self.check_point(x)?;
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::param(format!("m = {m} not in (0, 1)")));
        }
        let scale = self.radius_unchecked(x, m);
        let q = match q {
            Order::Infinity => return Ok(scale),
            Order::Finite(q) => q,
        };
        if scale == 0.0 {
            return Ok(0.0);
        }
        // r_p is non-decreasing in p, so scaling by r_m keeps the integrand
        // in [0, 1] for any q.
        let f = |p: f64| (self.radius_unchecked(x, p.max(f64::MIN_POSITIVE)) / scale).powf(q);
        let integral = adaptive_simpson(f, 0.0, m, 1e-12)?;
        Ok(scale * (integral / m).powf(1.0 / q))
    }

    /// Distance from `x` to the boundary of the support, for `x` inside it;
    /// 0 outside. Point masses have no interior.
    pub fn boundary_distance(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(match self {
            ReferenceDistribution::UniformInterval { low, high } => (x[0] - low).min(high - x[0]).max(0.0),
            ReferenceDistribution::UniformBall { center, radius } => (radius - norm(x, center)).max(0.0),
            ReferenceDistribution::PointMass { .. } => 0.0,
            ReferenceDistribution::Mixture { .. } => {
                return Err(Error::Unsupported(
                    "boundary distance of a mixture; use a component".into(),
                ))
            }
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ReferenceDistribution::UniformInterval { low, high } => x[0] >= *low && x[0] <= *high,
            ReferenceDistribution::UniformBall { center, radius } => norm(x, center) <= *radius,
            ReferenceDistribution::PointMass { location } => x == location.as_slice(),
            ReferenceDistribution::Mixture { normal, anomaly, .. } => normal.contains(x) || anomaly.contains(x),
        }
    }

    fn to_generator(&self) -> Result<Generator> {
        Ok(match self {
            ReferenceDistribution::UniformInterval { low, high } => Generator::UniformBox {
                low: vec![*low],
                high: vec![*high],
            },
            ReferenceDistribution::UniformBall { center, radius } => Generator::UniformBall {
                center: center.clone(),
                radius: *radius,
            },
            ReferenceDistribution::PointMass { location } => Generator::PointMass {
                location: location.clone(),
            },
            ReferenceDistribution::Mixture { .. } => {
                return Err(Error::Unsupported("nested mixtures cannot be sampled".into()))
            }
        })
    }

    /// Draws `n` labeled points; mixtures record the component as the label.
    pub fn sample(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        self.validate()?;
        let spec = match self {
            ReferenceDistribution::Mixture {
                normal,
                anomaly,
                epsilon,
            } => ContaminationSpec {
                normal: normal.to_generator()?,
                anomaly: anomaly.to_generator()?,
                epsilon: *epsilon,
                n,
                seed,
            },
            other => {
                let g = other.to_generator()?;
                ContaminationSpec {
                    normal: g.clone(),
                    anomaly: g,
                    epsilon: 0.0,
                    n,
                    seed,
                }
            }
        };
        sample_contaminated(&spec)
    }
}

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 5_000_000;

/// Adaptive Simpson quadrature with relative tolerance `rel_tol`. The range
/// is first cut into 8 panels so that kinks cannot hide between the initial
/// nodes. Hitting the depth limit is accepted (the panel is then narrower
/// than 2⁻⁵⁰ of the range); running out of evaluations is an error.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut evals = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evals += 1;
        if evals > MAX_EVALS {
            return Err(Error::Quadrature(format!("more than {MAX_EVALS} evaluations")));
        }
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Quadrature(format!("integrand is {v} at {x}")))
        }
    };
    const PANELS: usize = 8;
    let width = (b - a) / PANELS as f64;
    let mut nodes = Vec::with_capacity(2 * PANELS + 1);
    for i in 0..=2 * PANELS {
        nodes.push(eval(a + width * i as f64 / 2.0)?);
    }
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..PANELS)
        .map(|i| {
            let (l, r) = (a + width * i as f64, a + width * (i + 1) as f64);
            let (fl, fm, fr) = (nodes[2 * i], nodes[2 * i + 1], nodes[2 * i + 2]);
            (l, r, fl, fm, fr, (r - l) / 6.0 * (fl + 4.0 * fm + fr))
        })
        .collect();
    let rough: f64 = panels.iter().map(|p| p.5).sum();
    let tol = (rel_tol * rough.abs()).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for (l, r, fl, fm, fr, whole) in panels {
        total += simpson_rec(&mut eval, l, r, fl, fm, fr, whole, tol / PANELS as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    eval: &mut impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (eval(lm)?, eval(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_rec(eval, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_rec(eval, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}
