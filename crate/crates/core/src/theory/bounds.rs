//! Closed-form deviation bounds and separation thresholds.
//!
//! All logarithms are natural. Every bound is linear in the regularity
//! constant `C`, which is always an explicit input.

use crate::detectors::Order;
use crate::error::{Error, Result};

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("δ = {delta} not in (0, 1)")))
    }
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("C = {c} must be positive")))
    }
}

fn check_mass(m: f64) -> Result<()> {
    if m > 0.0 && m < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("m = {m} not in (0, 1)")))
    }
}

/// `β_n = √((4/n)((d+1)·log(2n) + log(8/δ)))`.
pub fn beta_n(n: usize, d: usize, delta: f64) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::param("n and d must be at least 1"));
    }
    check_delta(delta)?;
    let n = n as f64;
    Ok((4.0 / n * ((d as f64 + 1.0) * (2.0 * n).ln() + (8.0 / delta).ln())).sqrt())
}

/// `α_n = √((4/(n-1))(log(2(n-1)) + log(8n/δ)))`; free of the dimension.
pub fn alpha_n(n: usize, delta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param(format!("α_n needs n ≥ 2 (got {n})")));
    }
    check_delta(delta)?;
    let nm1 = (n - 1) as f64;
    Ok((4.0 / nm1 * ((2.0 * nm1).ln() + (8.0 * n as f64 / delta).ln())).sqrt())
}

/// Recovers the integer `k` with `p = k/n`, rejecting other values of `p`.
pub fn k_of_p(n: usize, p: f64) -> Result<usize> {
    let raw = p * n as f64;
    let k = raw.round();
    if !(p > 0.0 && p <= 1.0) || (raw - k).abs() > 1e-9 * raw.max(1.0) || k < 1.0 {
        return Err(Error::param(format!(
            "p = {p} is not of the form k/n with 1 ≤ k ≤ n = {n}"
        )));
    }
    Ok(k as usize)
}

/// Uniform-in-x radius bound `C(β_n² + β_n·√p)`.
pub fn radius_bound(n: usize, d: usize, delta: f64, p: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    k_of_p(n, p)?;
    let b = beta_n(n, d, delta)?;
    Ok(c * (b * b + b * p.sqrt()))
}

/// Over-the-sample radius bound `C(α_n² + α_n·√p' + 1/n)` with
/// `p' = (k-1)/(n-1)`.
pub fn radius_bound_sample(n: usize, delta: f64, p: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    let k = k_of_p(n, p)?;
    let a = alpha_n(n, delta)?;
    let p_prime = (k - 1) as f64 / (n - 1) as f64;
    Ok(c * (a * a + a * p_prime.sqrt() + 1.0 / n as f64))
}

/// Uniform-in-x DTM bound `Cβ_n(β_n + √m)`, valid for every order q.
pub fn dtm_bound(n: usize, d: usize, delta: f64, m: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    check_mass(m)?;
    let b = beta_n(n, d, delta)?;
    Ok(c * b * (b + m.sqrt()))
}

/// Over-the-sample DTM bound `Cα_n(α_n + √m)`.
pub fn dtm_bound_sample(n: usize, delta: f64, m: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    check_mass(m)?;
    let a = alpha_n(n, delta)?;
    Ok(c * a * (a + m.sqrt()))
}

fn check_separation_inputs(m: f64, epsilon: f64, h: f64, b: f64) -> Result<()> {
    check_mass(m)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param(format!("ε = {epsilon} not in [0, 1)")));
    }
    if m <= epsilon {
        return Err(Error::MassNotAboveContamination { m, epsilon });
    }
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::param(format!("h = {h} must be ≥ 0")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::param(format!("b = {b} must be positive")));
    }
    Ok(())
}

/// Density level `g₀` the normal component must reach for points to be
/// provably separated:
///
/// ```text
/// q < ∞:  g₀ = m/(1-ε) · ((b+q)/b · ((m-ε)/m · ηᵠ - h))^(-b/q)
/// q = ∞:  g₀ = m/(1-ε) · (η - h)^(-b)
/// ```
pub fn g0_threshold(m: f64, epsilon: f64, eta: f64, h: f64, b: f64, q: Order) -> Result<f64> {
    check_separation_inputs(m, epsilon, h, b)?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::param(format!("η = {eta} must be ≥ 0")));
    }
    let lead = m / (1.0 - epsilon);
    match q {
        Order::Infinity => {
            let gap = eta - h;
            if gap <= 0.0 {
                return Err(Error::SeparationTooSmall(format!("η - h = {gap} ≤ 0")));
            }
            Ok(lead * gap.powf(-b))
        }
        Order::Finite(q) => {
            let inner = (m - epsilon) / m * eta.powf(q) - h;
            if inner <= 0.0 {
                return Err(Error::SeparationTooSmall(format!(
                    "(m-ε)/m·η^q - h = {inner} ≤ 0"
                )));
            }
            Ok(lead * ((b + q) / b * inner).powf(-b / q))
        }
    }
}

/// Smallest separation η for which the whole normal support is a safety
/// zone when the normal density level is bounded below by `a0`. This is the
/// value of η at which [`g0_threshold`] equals `a0`:
///
/// ```text
/// q < ∞:  η* = ( m/(m-ε) · ( b/(b+q) · (m/(a₀(1-ε)))^(q/b) + h ) )^(1/q)
/// q = ∞:  η* = (m/(a₀(1-ε)))^(1/b) + h
/// ```
pub fn full_support_eta(m: f64, epsilon: f64, a0: f64, b: f64, q: Order, h: f64) -> Result<f64> {
    check_separation_inputs(m, epsilon, h, b)?;
    if !(a0.is_finite() && a0 > 0.0) {
        return Err(Error::param(format!("a₀ = {a0} must be positive")));
    }
    let ratio = m / (a0 * (1.0 - epsilon));
    match q {
        Order::Infinity => Ok(ratio.powf(1.0 / b) + h),
        Order::Finite(q) => {
            Ok((m / (m - epsilon) * (b / (b + q) * ratio.powf(q / b) + h)).powf(1.0 / q))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_reference_value() {
        // √((4/1000)(3·ln 2000 + ln 160))
        let expected = (0.004f64 * (3.0 * 2000f64.ln() + 160f64.ln())).sqrt();
        let b = beta_n(1000, 2, 0.05).unwrap();
        assert_eq!(b, expected);
        assert!((b - 0.33394).abs() < 1e-5);
    }

    #[test]
    fn beta_decreases_in_n_and_stays_finite_near_one() {
        let mut prev = f64::INFINITY;
        for n in [1, 2, 5, 10, 100, 1000, 10_000, 1_000_000] {
            let b = beta_n(n, 3, 0.1).unwrap();
            assert!(b < prev);
            prev = b;
        }
        let near_one = beta_n(100, 1, 1.0 - 1e-12).unwrap();
        assert!(near_one.is_finite() && near_one > 0.0);
        assert!(beta_n(0, 1, 0.1).is_err());
        assert!(beta_n(10, 1, 1.0).is_err());
        assert!(beta_n(10, 1, 0.0).is_err());
    }

    #[test]
    fn alpha_reference_value() {
        // n = 2, δ = 0.5: √(4·(ln 2 + ln 32)) = √(4 ln 64)
        let a = alpha_n(2, 0.5).unwrap();
        assert!((a - (4.0 * 64f64.ln()).sqrt()).abs() < 1e-14);
        assert!((a - 4.07868).abs() < 5e-5);
        assert!(alpha_n(1, 0.5).is_err());
    }

    #[test]
    fn alpha_eventually_decreasing_and_dimension_free() {
        // Scan n over [2, 10^6]; after the first few values α_n decreases.
        let mut prev = alpha_n(2, 0.05).unwrap();
        let mut increases_after = 0usize;
        let mut n = 3usize;
        while n <= 1_000_000 {
            let a = alpha_n(n, 0.05).unwrap();
            if a > prev {
                increases_after = n;
            }
            prev = a;
            n = if n < 1000 { n + 1 } else { n + n / 100 };
        }
        assert!(increases_after < 10, "α_n still increasing at n = {increases_after}");
    }

    #[test]
    fn radius_bound_reference_value() {
        let b = beta_n(1000, 2, 0.05).unwrap();
        let expected = b * b + b * 0.03f64.sqrt();
        let r = radius_bound(1000, 2, 0.05, 0.03, 1.0).unwrap();
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.16936).abs() < 5e-5);
        assert!((radius_bound(1000, 2, 0.05, 0.03, 2.5).unwrap() - 2.5 * r).abs() < 1e-14);
        assert!(radius_bound(1000, 2, 0.05, 0.0305, 1.0).is_err());
    }

    #[test]
    fn radius_bound_limit_structure() {
        // At p = 1/n the √p term's share of the bound shrinks as n grows.
        let mut prev = f64::INFINITY;
        for n in [1_000usize, 100_000, 10_000_000] {
            let b = beta_n(n, 2, 0.05).unwrap();
            let r = radius_bound(n, 2, 0.05, 1.0 / n as f64, 1.0).unwrap();
            let share = (r - b * b) / (b * b);
            assert!(share < prev);
            prev = share;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn radius_bound_sample_formula() {
        let a = alpha_n(1000, 0.05).unwrap();
        let expected = a * a + a * (29.0f64 / 999.0).sqrt() + 1e-3;
        assert!((radius_bound_sample(1000, 0.05, 0.03, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn dtm_bound_reference_value() {
        let v = dtm_bound(1000, 2, 0.05, 0.03, 1.0).unwrap();
        assert!((v - 0.16936).abs() < 5e-5);
        assert!(dtm_bound(1000, 2, 0.05, 0.05, 1.0).unwrap() > v);
        let a = alpha_n(5000, 0.05).unwrap();
        assert!((dtm_bound_sample(5000, 0.05, 0.1, 1.0).unwrap() - a * (a + 0.1f64.sqrt())).abs() < 1e-15);
        assert!(dtm_bound(1000, 2, 0.05, 1.0, 1.0).is_err());
    }

    #[test]
    fn g0_reference_value() {
        let g = g0_threshold(0.1, 0.05, 2.0, 0.0, 1.0, Order::Infinity).unwrap();
        assert!((g - 0.1 / 0.95 / 2.0).abs() < 1e-15);
        assert!((g - 0.052632).abs() < 1e-6);
    }

    #[test]
    fn g0_monotone_in_h_and_eta() {
        for q in [Order::Finite(1.0), Order::Finite(2.0), Order::Infinity] {
            let a = g0_threshold(0.1, 0.05, 2.0, 0.0, 1.0, q).unwrap();
            let b = g0_threshold(0.1, 0.05, 2.0, 0.1, 1.0, q).unwrap();
            assert!(b > a);
            let far = g0_threshold(0.1, 0.05, 1e6, 0.0, 1.0, q).unwrap();
            assert!(far < 1e-5);
        }
    }

    #[test]
    fn g0_errors() {
        assert!(matches!(
            g0_threshold(0.01, 0.05, 2.0, 0.0, 1.0, Order::Infinity),
            Err(Error::MassNotAboveContamination { .. })
        ));
        assert!(matches!(
            g0_threshold(0.1, 0.05, 1.0, 1.0, 1.0, Order::Infinity),
            Err(Error::SeparationTooSmall(_))
        ));
        assert!(matches!(
            g0_threshold(0.1, 0.05, 0.0, 0.0, 1.0, Order::Finite(2.0)),
            Err(Error::SeparationTooSmall(_))
        ));
    }

    #[test]
    fn full_support_eta_reference_value() {
        let eta = full_support_eta(0.1, 0.05, 1.0, 1.0, Order::Finite(1.0), 0.0).unwrap();
        assert!((eta - 2.0 * 0.5 * 0.1 / 0.95).abs() < 1e-15);
        assert!((eta - 0.10526).abs() < 1e-5);
    }

    #[test]
    fn full_support_eta_inverts_g0() {
        for q in [Order::Finite(1.0), Order::Finite(2.5), Order::Infinity] {
            for a0 in [0.3, 1.0, 7.0] {
                let eta = full_support_eta(0.2, 0.05, a0, 2.0, q, 0.01).unwrap();
                let g = g0_threshold(0.2, 0.05, eta, 0.01, 2.0, q).unwrap();
                assert!((g - a0).abs() <= 1e-9 * a0, "{q} {a0}: {g}");
            }
        }
        let low = full_support_eta(0.2, 0.05, 1.0, 2.0, Order::Finite(2.0), 0.0).unwrap();
        let high = full_support_eta(0.2, 0.05, 2.0, 2.0, Order::Finite(2.0), 0.0).unwrap();
        assert!(high < low);
    }
}
