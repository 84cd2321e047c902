//! Spectrally negative Levy processes with a Gaussian part, a drift and a
//! finite mixture of compound Poisson downward jumps.
//!
//! Drift convention: `gamma` is the drift of the Levy-Khintchine triplet with
//! truncation function `1{|y| < 1}`, so
//!
//! ```text
//! kappa(t) = sigma^2 t^2 / 2 + gamma t + sum_i rate_i (E[e^{-t J_i}] - 1 + t E[J_i; J_i < 1])
//!          = sigma^2 t^2 / 2 + c t + sum_i rate_i (E[e^{-t J_i}] - 1)
//! ```
//!
//! with the effective drift `c = gamma + sum_i rate_i E[J_i; J_i < 1]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{phi1, psi};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "params", rename_all = "snake_case")]
pub enum MagnitudeLaw {
    Exponential { mean: f64 },
    Erlang { shape: u32, mean: f64 },
    Deterministic { size: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl MagnitudeLaw {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err((name, format!("must be a finite positive number, got {v}")))
            }
        };
        match *self {
            MagnitudeLaw::Exponential { mean } => positive("mean", mean),
            MagnitudeLaw::Erlang { shape, mean } => {
                if shape == 0 {
                    return Err(("shape", "must be a positive integer".into()));
                }
                positive("mean", mean)
            }
            MagnitudeLaw::Deterministic { size } => positive("size", size),
            MagnitudeLaw::Uniform { lo, hi } => {
                positive("lo", lo)?;
                positive("hi", hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(("hi", format!("must exceed lo ({lo}), got {hi}")))
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MagnitudeLaw::Exponential { mean } | MagnitudeLaw::Erlang { mean, .. } => mean,
            MagnitudeLaw::Deterministic { size } => size,
            MagnitudeLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// `E[J; J < 1]`.
    pub fn truncated_mean(&self) -> f64 {
        match *self {
            MagnitudeLaw::Exponential { mean } => mean - (mean + 1.0) * (-1.0 / mean).exp(),
            MagnitudeLaw::Erlang { shape, mean } => {
                // E[J; J<1] = mean * P(Gamma(shape + 1, rate) < 1) = mean * P(Poisson(rate) > shape)
                let rate = shape as f64 / mean;
                let mut term = (-rate).exp();
                let mut cdf = term;
                for n in 1..=shape {
                    term *= rate / n as f64;
                    cdf += term;
                }
                mean * (1.0 - cdf).max(0.0)
            }
            MagnitudeLaw::Deterministic { size } => {
                if size < 1.0 {
                    size
                } else {
                    0.0
                }
            }
            MagnitudeLaw::Uniform { lo, hi } => {
                if lo >= 1.0 {
                    0.0
                } else {
                    let top = hi.min(1.0);
                    0.5 * (top * top - lo * lo) / (hi - lo)
                }
            }
        }
    }

    /// `E[e^{-z J}]` for complex `z`.
    pub fn laplace(&self, z: Complex64) -> Complex64 {
        match *self {
            MagnitudeLaw::Exponential { mean } => 1.0 / (1.0 + mean * z),
            MagnitudeLaw::Erlang { shape, mean } => {
                let rate = shape as f64 / mean;
                (rate / (rate + z)).powi(shape as i32)
            }
            MagnitudeLaw::Deterministic { size } => (-z * size).exp(),
            MagnitudeLaw::Uniform { lo, hi } => {
                let w = hi - lo;
                (-z * lo).exp() * phi1(-z * w)
            }
        }
    }

    /// `d/dz E[e^{-z J}] = -E[J e^{-z J}]`.
    pub fn laplace_deriv(&self, z: Complex64) -> Complex64 {
        match *self {
            MagnitudeLaw::Exponential { mean } => {
                let d = 1.0 + mean * z;
                -mean / (d * d)
            }
            MagnitudeLaw::Erlang { shape, mean } => {
                let rate = shape as f64 / mean;
                let k = shape as f64;
                -(k / (rate + z)) * (rate / (rate + z)).powi(shape as i32)
            }
            MagnitudeLaw::Deterministic { size } => -size * (-z * size).exp(),
            MagnitudeLaw::Uniform { lo, hi } => {
                let w = hi - lo;
                -(-z * lo).exp() * (lo * phi1(-z * w) + w * psi(-z * w))
            }
        }
    }

    /// Whether the magnitude transform is rational in `z`.
    pub fn is_rational(&self) -> bool {
        matches!(
            self,
            MagnitudeLaw::Exponential { .. } | MagnitudeLaw::Erlang { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpComponent {
    pub rate: f64,
    #[serde(flatten)]
    pub law: MagnitudeLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    BrownianDrift,
    CompoundPoissonDrift,
    JumpDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariationClass {
    BoundedVariation,
    UnboundedVariation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    sigma: f64,
    gamma: f64,
    drift: f64,
    jumps: Vec<JumpComponent>,
    kind: ModelKind,
}

impl LevyModel {
    /// Builds a model from the Levy-Khintchine drift `gamma`.
    pub fn new(sigma: f64, gamma: f64, jumps: Vec<JumpComponent>) -> Result<Self> {
        let truncated: f64 = jumps.iter().map(|j| j.rate * j.law.truncated_mean()).sum();
        Self::build(sigma, gamma, gamma + truncated, jumps)
    }

    /// Builds a model from the effective drift `c` of the bounded-variation form.
    pub fn with_effective_drift(sigma: f64, c: f64, jumps: Vec<JumpComponent>) -> Result<Self> {
        let truncated: f64 = jumps.iter().map(|j| j.rate * j.law.truncated_mean()).sum();
        Self::build(sigma, c - truncated, c, jumps)
    }

    /// Brownian motion with drift, `kappa(t) = sigma^2 t^2 / 2 + gamma t`.
    pub fn brownian(sigma: f64, gamma: f64) -> Result<Self> {
        Self::new(sigma, gamma, Vec::new())
    }

    /// Cramer-Lundberg model with premium rate `c` and exponential claims.
    pub fn cramer_lundberg(c: f64, rate: f64, mean: f64) -> Result<Self> {
        Self::with_effective_drift(
            0.0,
            c,
            vec![JumpComponent {
                rate,
                law: MagnitudeLaw::Exponential { mean },
            }],
        )
    }

    fn build(sigma: f64, gamma: f64, drift: f64, jumps: Vec<JumpComponent>) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidModel {
                field: "sigma".into(),
                reason: format!("must be finite and nonnegative, got {sigma}"),
            });
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidModel {
                field: "gamma".into(),
                reason: "must be finite".into(),
            });
        }
        for (i, j) in jumps.iter().enumerate() {
            if !(j.rate.is_finite() && j.rate > 0.0) {
                return Err(Error::InvalidModel {
                    field: format!("jumps[{i}].rate"),
                    reason: format!("must be a finite positive number, got {}", j.rate),
                });
            }
            if let Err((name, reason)) = j.law.validate() {
                return Err(Error::InvalidModel {
                    field: format!("jumps[{i}].params.{name}"),
                    reason,
                });
            }
        }
        if sigma == 0.0 && drift <= 0.0 {
            return Err(Error::InvalidModel {
                field: "gamma".into(),
                reason: format!(
                    "a model without Gaussian part needs a positive effective drift, got c = {drift}"
                ),
            });
        }
        let kind = match (sigma > 0.0, jumps.is_empty()) {
            (_, true) => ModelKind::BrownianDrift,
            (false, false) => ModelKind::CompoundPoissonDrift,
            (true, false) => ModelKind::JumpDiffusion,
        };
        Ok(Self {
            sigma,
            gamma,
            drift,
            jumps,
            kind,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Effective drift `c`; the slope of the paths between jumps when `sigma = 0`.
    pub fn effective_drift(&self) -> f64 {
        self.drift
    }

    pub fn jumps(&self) -> &[JumpComponent] {
        &self.jumps
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn variation_class(&self) -> VariationClass {
        if self.sigma == 0.0 {
            VariationClass::BoundedVariation
        } else {
            VariationClass::UnboundedVariation
        }
    }

    pub fn is_bounded_variation(&self) -> bool {
        self.sigma == 0.0
    }

    /// Total jump intensity `Pi(-inf, 0)`.
    pub fn total_jump_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).sum()
    }

    /// Whether `1 / (kappa - q)` is a rational function.
    pub fn has_rational_transform(&self) -> bool {
        self.jumps.iter().all(|j| j.law.is_rational())
    }

    /// `kappa(theta)`; rejects negative arguments.
    pub fn laplace_exponent(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return domain(format!("Laplace exponent needs theta >= 0, got {theta}"));
        }
        Ok(self.kappa(theta))
    }

    /// `kappa(theta)` without the domain check. Finite for every real
    /// `theta` larger than minus the smallest exponential/Erlang rate.
    pub fn kappa(&self, theta: f64) -> f64 {
        let z = Complex64::new(theta, 0.0);
        let mut v = 0.5 * self.sigma * self.sigma * theta * theta + self.drift * theta;
        for j in &self.jumps {
            v += j.rate * (j.law.laplace(z).re - 1.0);
        }
        v
    }

    pub fn kappa_prime(&self, theta: f64) -> f64 {
        let z = Complex64::new(theta, 0.0);
        let mut v = self.sigma * self.sigma * theta + self.drift;
        for j in &self.jumps {
            v += j.rate * j.law.laplace_deriv(z).re;
        }
        v
    }

    /// `kappa'(0+) = E[X_1]`.
    pub fn kappa_prime_zero(&self) -> f64 {
        self.drift - self.jumps.iter().map(|j| j.rate * j.law.mean()).sum::<f64>()
    }

    pub fn kappa_complex(&self, z: Complex64) -> Complex64 {
        let mut v = 0.5 * self.sigma * self.sigma * z * z + self.drift * z;
        for j in &self.jumps {
            v += j.rate * (j.law.laplace(z) - 1.0);
        }
        v
    }

    pub fn kappa_prime_complex(&self, z: Complex64) -> Complex64 {
        let mut v = self.sigma * self.sigma * z + self.drift;
        for j in &self.jumps {
            v += j.rate * j.law.laplace_deriv(z);
        }
        v
    }

    /// `W_q(0)`: `1/c` for bounded variation, 0 otherwise.
    pub fn w_at_zero(&self) -> f64 {
        if self.is_bounded_variation() {
            1.0 / self.drift
        } else {
            0.0
        }
    }

    /// `W_q'(0+)`.
    pub fn w_deriv_at_zero(&self, q: f64) -> f64 {
        if self.is_bounded_variation() {
            (q + self.total_jump_rate()) / (self.drift * self.drift)
        } else {
            2.0 / (self.sigma * self.sigma)
        }
    }

    /// Right inverse `Phi_q = sup{t >= 0 : kappa(t) = q}`.
    pub fn phi_inverse(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0 && q.is_finite()) {
            return domain(format!("Phi_q needs finite q >= 0, got {q}"));
        }
        let tol = 1e-12 * q.max(1.0);
        // left end of the bracket: the root lies where kappa is increasing
        let lo = if self.kappa_prime_zero() >= 0.0 {
            if q == 0.0 {
                return Ok(0.0);
            }
            0.0
        } else {
            self.kappa_minimiser()
        };
        let mut hi = lo.max(1.0);
        let mut guard = 0;
        while self.kappa(hi) <= q {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Convergence {
                    what: format!("no upper bracket for Phi_{q}"),
                    residual: self.kappa(hi) - q,
                });
            }
        }
        let mut bracket = (lo, hi);
        // Newton from the right decreases monotonically onto the root by convexity.
        let mut t = hi;
        for _ in 0..200 {
            let f = self.kappa(t) - q;
            if f.abs() <= tol {
                return Ok(t);
            }
            if f > 0.0 {
                bracket.1 = t;
            } else {
                bracket.0 = t;
            }
            let d = self.kappa_prime(t);
            let mut next = if d > 0.0 { t - f / d } else { f64::NAN };
            if !(next > bracket.0 && next < bracket.1) {
                next = 0.5 * (bracket.0 + bracket.1);
            }
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1e-300) {
                t = next;
                break;
            }
            t = next;
        }
        let residual = self.kappa(t) - q;
        if residual.abs() <= tol {
            Ok(t)
        } else {
            Err(Error::Convergence {
                what: format!("Phi_{q}"),
                residual,
            })
        }
    }

    /// Minimiser of kappa on `[0, inf)` when `kappa'(0+) < 0`.
    fn kappa_minimiser(&self) -> f64 {
        let mut hi = 1.0;
        while self.kappa_prime(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.kappa_prime(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl() -> LevyModel {
        LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn brownian_exponent() {
        let m = LevyModel::brownian(2f64.sqrt(), 0.0).unwrap();
        assert!((m.laplace_exponent(2.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((m.phi_inverse(4.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(m.laplace_exponent(-0.1).is_err());
    }

    #[test]
    fn cramer_lundberg_exponent() {
        let m = cl();
        assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0);
        assert!((m.laplace_exponent(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(m.phi_inverse(0.0).unwrap(), 0.0);
        assert!((m.kappa_prime_zero() - 0.5).abs() < 1e-15);
        assert_eq!(m.variation_class(), VariationClass::BoundedVariation);
    }

    #[test]
    fn negative_drift_root() {
        let m = LevyModel::brownian(2f64.sqrt(), -1.0).unwrap();
        assert!((m.phi_inverse(0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_conventions_agree() {
        let jumps = vec![JumpComponent {
            rate: 2.0,
            law: MagnitudeLaw::Uniform { lo: 0.5, hi: 1.5 },
        }];
        let a = LevyModel::new(0.3, 0.7, jumps.clone()).unwrap();
        let b = LevyModel::with_effective_drift(0.3, a.effective_drift(), jumps).unwrap();
        assert!((a.gamma() - b.gamma()).abs() < 1e-15);
        // Levy-Khintchine form evaluated by quadrature of the uniform density
        let theta: f64 = 0.8;
        let n = 20000;
        let mut integral = 0.0;
        for i in 0..n {
            let y = 0.5 + (i as f64 + 0.5) / n as f64;
            let ind = if y < 1.0 { theta * y } else { 0.0 };
            integral += ((-theta * y).exp() - 1.0 + ind) / n as f64;
        }
        let lk = 0.5 * 0.09 * theta * theta + 0.7 * theta + 2.0 * integral;
        assert!((a.kappa(theta) - lk).abs() < 1e-8);
    }

    #[test]
    fn truncated_means() {
        // Erlang(1, m) is Exponential(m)
        let e = MagnitudeLaw::Exponential { mean: 0.7 }.truncated_mean();
        let k = MagnitudeLaw::Erlang { shape: 1, mean: 0.7 }.truncated_mean();
        assert!((e - k).abs() < 1e-15);
        // Erlang(2, 1): rate 2, E[J; J<1] = int_0^1 4 y^2 e^{-2y} dy
        let n = 200000;
        let mut s = 0.0;
        for i in 0..n {
            let y = (i as f64 + 0.5) / n as f64;
            s += 4.0 * y * y * (-2.0 * y).exp() / n as f64;
        }
        let got = MagnitudeLaw::Erlang { shape: 2, mean: 1.0 }.truncated_mean();
        assert!((got - s).abs() < 1e-10);
    }

    #[test]
    fn rejects_pure_decreasing() {
        assert!(LevyModel::cramer_lundberg(0.0, 1.0, 1.0).is_err());
        assert!(LevyModel::brownian(0.0, 0.0).is_err());
        let bad = LevyModel::new(
            1.0,
            0.0,
            vec![JumpComponent {
                rate: 1.0,
                law: MagnitudeLaw::Uniform { lo: 2.0, hi: 1.0 },
            }],
        );
        match bad {
            Err(Error::InvalidModel { field, .. }) => assert_eq!(field, "jumps[0].params.hi"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_deriv_matches_difference() {
        let law = MagnitudeLaw::Uniform { lo: 0.2, hi: 1.7 };
        for &t in &[1e-6, 0.3, 2.0] {
            let h = 1e-5;
            let fd = (law.laplace(Complex64::new(t + h, 0.0)).re
                - law.laplace(Complex64::new(t - h, 0.0)).re)
                / (2.0 * h);
            assert!((law.laplace_deriv(Complex64::new(t, 0.0)).re - fd).abs() < 1e-8);
        }
    }
}
