//! Finite-sample bounds, separation thresholds and population oracles.

mod bounds;
mod reference;
mod separation;

pub use bounds::{
    alpha_n, beta_n, dtm_bound, dtm_bound_sample, full_support_eta, g0_threshold, k_of_p, radius_bound,
    radius_bound_sample,
};
pub use reference::{adaptive_simpson, ReferenceDistribution};
pub use separation::{calibrate_c, max_sample_deviation, separation_check, Calibration, SeparationReport, SeparationSetup};

use serde::{Deserialize, Serialize};

use crate::detectors::Order;
use crate::error::{Error, Result};

/// Parameters shared by the bound and threshold calculators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryInputs {
    pub n: usize,
    pub d: usize,
    pub delta: f64,
    pub m: f64,
    /// Regularity constant of the radius bounds; never estimated implicitly.
    pub c: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub h: f64,
    pub a0: f64,
    pub b: f64,
    pub q: Order,
}

impl Default for TheoryInputs {
    fn default() -> Self {
        TheoryInputs {
            n: 1000,
            d: 2,
            delta: 0.05,
            m: 0.03,
            c: 1.0,
            epsilon: 0.0,
            eta: 1.0,
            h: 0.0,
            a0: 1.0,
            b: 2.0,
            q: Order::Finite(2.0),
        }
    }
}

/// A computed quantity, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Value(f64),
    Omitted(String),
}

impl Outcome {
    fn from(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Outcome::Value(v),
            Err(e) => Outcome::Omitted(e.to_string()),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Outcome::Value(v) => Some(*v),
            Outcome::Omitted(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    /// `k = ⌈m n⌉` and `p = k / n` used by the radius bounds.
    pub k: usize,
    pub p: f64,
    pub beta_n: Outcome,
    pub alpha_n: Outcome,
    pub radius_bound: Outcome,
    pub radius_bound_sample: Outcome,
    pub dtm_bound: Outcome,
    pub dtm_bound_sample: Outcome,
    pub g0_threshold: Outcome,
    pub full_support_eta: Outcome,
}

impl TheoryInputs {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::param("n and d must be ≥ 1"));
        }
        let checks = [
            (self.delta > 0.0 && self.delta < 1.0, "delta must lie in (0, 1)"),
            (self.m > 0.0 && self.m < 1.0, "m must lie in (0, 1)"),
            (self.c > 0.0 && self.c.is_finite(), "C must be > 0"),
            ((0.0..1.0).contains(&self.epsilon), "epsilon must lie in [0, 1)"),
            (self.eta >= 0.0, "eta must be ≥ 0"),
            (self.h >= 0.0, "h must be ≥ 0"),
            (self.a0 > 0.0, "a0 must be > 0"),
            (self.b > 0.0, "b must be > 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::param(msg));
            }
        }
        Ok(())
    }

    /// Evaluates every calculator; quantities whose preconditions fail are
    /// reported as omitted with the reason.
    pub fn report(&self) -> Result<TheoryReport> {
        self.validate()?;
        let k = crate::detectors::k_from_mass(self.m, self.n);
        let p = k as f64 / self.n as f64;
        Ok(TheoryReport {
            inputs: self.clone(),
            k,
            p,
            beta_n: Outcome::from(beta_n(self.n, self.d, self.delta)),
            alpha_n: Outcome::from(alpha_n(self.n, self.delta)),
            radius_bound: Outcome::from(radius_bound(self.n, self.d, self.delta, p, self.c)),
            radius_bound_sample: Outcome::from(radius_bound_sample(self.n, self.delta, p, self.c)),
            dtm_bound: Outcome::from(dtm_bound(self.n, self.d, self.delta, self.m, self.c)),
            dtm_bound_sample: Outcome::from(dtm_bound_sample(self.n, self.delta, self.m, self.c)),
            g0_threshold: Outcome::from(g0_threshold(self.m, self.epsilon, self.eta, self.h, self.b, self.q)),
            full_support_eta: Outcome::from(full_support_eta(self.m, self.epsilon, self.a0, self.b, self.q, self.h)),
        })
    }
}
