//! Scale functions `W_q`, `Z_q` and their relatives.

mod delay_ode;
mod exp_sum;
mod inversion;
mod shifted;

pub use shifted::{ShiftedKernelValue, ShiftedKernels};

use log::warn;

use crate::error::{domain, Result};
use crate::levy_model::LevyModel;
use crate::quadrature::{integrate_fallible, QuadOptions};
use delay_ode::DelayOde;
use exp_sum::ExpSum;
use inversion::Inverter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    PartialFraction,
    NumericalInversion,
    DelayIntegration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZFamily {
    pub z: f64,
    pub zbar: f64,
    pub wbar: f64,
}

#[derive(Debug, Clone)]
enum Backend {
    Exp(ExpSum),
    Inv(Inverter),
    Ode(DelayOde),
}

/// Scale functions of one model at one killing rate `q`.
#[derive(Debug, Clone)]
pub struct ScaleContext {
    model: LevyModel,
    q: f64,
    phi: f64,
    backend: Backend,
    quad: QuadOptions,
}

impl ScaleContext {
    /// Picks partial fractions when the transform is rational with simple
    /// poles, contour inversion when the poles repeat, and the delay-equation
    /// integrator for deterministic or uniform jump sizes (their transforms
    /// have infinitely many poles, which no deformed contour can avoid).
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        let phi = model.phi_inverse(q)?;
        let backend = if model.has_rational_transform() {
            match ExpSum::build(model, q, phi) {
                Some(e) => Backend::Exp(e),
                None => {
                    warn!("partial fractions degenerate at q = {q} (repeated roots); using contour inversion");
                    Backend::Inv(Inverter::new(model.clone(), q, phi))
                }
            }
        } else {
            Backend::Ode(DelayOde::new(model, q, phi))
        };
        Ok(Self::assemble(model, q, phi, backend))
    }

    pub fn with_backend(model: &LevyModel, q: f64, kind: BackendKind) -> Result<Self> {
        let phi = model.phi_inverse(q)?;
        let backend = match kind {
            BackendKind::NumericalInversion => Backend::Inv(Inverter::new(model.clone(), q, phi)),
            BackendKind::DelayIntegration => Backend::Ode(DelayOde::new(model, q, phi)),
            BackendKind::PartialFraction => {
                if !model.has_rational_transform() {
                    return domain("partial fractions need exponential/Erlang jumps only");
                }
                match ExpSum::build(model, q, phi) {
                    Some(e) => Backend::Exp(e),
                    None => return domain(format!("partial fractions degenerate at q = {q}")),
                }
            }
        };
        Ok(Self::assemble(model, q, phi, backend))
    }

    fn assemble(model: &LevyModel, q: f64, phi: f64, backend: Backend) -> Self {
        // numerical backends carry roundoff near 1e-12 that adaptive
        // quadrature must not try to resolve
        let quad = match backend {
            Backend::Exp(_) => QuadOptions::default(),
            _ => QuadOptions {
                abs_tol: 1e-12,
                rel_tol: 1e-10,
                ..QuadOptions::default()
            },
        };
        Self {
            model: model.clone(),
            q,
            phi,
            backend,
            quad,
        }
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Phi_q`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn backend(&self) -> BackendKind {
        match self.backend {
            Backend::Exp(_) => BackendKind::PartialFraction,
            Backend::Inv(_) => BackendKind::NumericalInversion,
            Backend::Ode(_) => BackendKind::DelayIntegration,
        }
    }

    pub fn quad_options(&self) -> &QuadOptions {
        &self.quad
    }

    /// `W_q(x)`, zero on the negative half-line.
    pub fn w_scale(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.model.w_at_zero());
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.w(x)),
            Backend::Inv(i) => i.w(x),
            Backend::Ode(o) => o.w(x),
        }
    }

    /// `e^{-Phi_q x} W_q(x)`.
    pub fn w_scaled(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.model.w_at_zero());
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.w(x) * (-self.phi * x).exp()),
            Backend::Inv(i) => i.w_scaled(x),
            Backend::Ode(o) => o.w_scaled(x),
        }
    }

    /// One-sided derivative of `W_q`.
    pub fn w_scale_deriv(&self, x: f64, side: Side) -> Result<f64> {
        if x < 0.0 {
            return domain(format!("W_q' is evaluated on x >= 0 only, got {x}"));
        }
        if x == 0.0 {
            if side == Side::Left {
                return domain("W_q'(0-) is not defined; pass Side::Right at 0");
            }
            return Ok(match &self.backend {
                Backend::Exp(e) => e.w_deriv(0.0),
                _ => self.model.w_deriv_at_zero(self.q),
            });
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.w_deriv(x)),
            Backend::Ode(o) if side == Side::Right => o.w_deriv(x),
            _ => self.richardson_deriv(x, side),
        }
    }

    fn richardson_deriv(&self, x: f64, side: Side) -> Result<f64> {
        let sign = match side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        let mut h = 1e-2 * x.max(1.0);
        if side == Side::Left {
            h = h.min(0.25 * x);
        }
        // second-order one-sided stencil, then Richardson on h -> h/2 -> h/4
        let stencil = |h: f64| -> Result<f64> {
            let f0 = self.w_scale(x)?;
            let f1 = self.w_scale(x + sign * h)?;
            let f2 = self.w_scale(x + sign * 2.0 * h)?;
            Ok(sign * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h))
        };
        let d0 = stencil(h)?;
        let d1 = stencil(0.5 * h)?;
        let d2 = stencil(0.25 * h)?;
        let r1 = (4.0 * d1 - d0) / 3.0;
        let r2 = (4.0 * d2 - d1) / 3.0;
        Ok((8.0 * r2 - r1) / 7.0)
    }

    fn integrate_w<F: Fn(f64, f64) -> f64>(&self, lo: f64, hi: f64, weight: F) -> Result<f64> {
        integrate_fallible(|t| Ok(weight(t, self.w_scale(t)?)), lo, hi, &self.quad)
    }

    /// `W_q bar(x) = int_0^x W_q`.
    pub fn wbar(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.wbar(x)),
            _ => self.integrate_w(0.0, x, |_, w| w),
        }
    }

    /// `int_0^x W_q bar = int_0^x (x - t) W_q(t) dt`.
    pub fn wbarbar(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.wbarbar(x)),
            _ => self.integrate_w(0.0, x, |t, w| (x - t) * w),
        }
    }

    pub fn z(&self, x: f64) -> Result<f64> {
        Ok(1.0 + self.q * self.wbar(x)?)
    }

    pub fn zbar(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(x);
        }
        Ok(x + self.q * self.wbarbar(x)?)
    }

    pub fn z_family(&self, x: f64) -> Result<ZFamily> {
        if x <= 0.0 {
            return Ok(ZFamily {
                z: 1.0,
                zbar: x,
                wbar: 0.0,
            });
        }
        let wbar = self.wbar(x)?;
        Ok(ZFamily {
            z: 1.0 + self.q * wbar,
            zbar: self.zbar(x)?,
            wbar,
        })
    }

    /// `int_0^len e^{-theta t} W_q(y + t) dt` for any real `y`.
    pub fn shifted_laplace(&self, y: f64, len: f64, theta: f64) -> Result<f64> {
        if len <= 0.0 {
            return Ok(0.0);
        }
        if y < 0.0 {
            let rest = len + y;
            if rest <= 0.0 {
                return Ok(0.0);
            }
            return Ok((theta * y).exp() * self.shifted_laplace(0.0, rest, theta)?);
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.shifted_laplace(y, len, theta)),
            _ => integrate_fallible(
                |t| Ok((-theta * t).exp() * self.w_scale(y + t)?),
                0.0,
                len,
                &self.quad,
            ),
        }
    }

    /// `Z_q(x) - (q / Phi_q) W_q(x)` for `q > 0`. It stays bounded while both
    /// terms grow like `e^{Phi_q x}`; the partial-fraction backend sums it
    /// without cancellation, the numerical backends subtract.
    pub fn z_excess(&self, x: f64) -> Result<f64> {
        if !(self.q > 0.0) {
            return domain("Z_q - (q/Phi_q) W_q needs q > 0");
        }
        if x < 0.0 {
            return Ok(1.0);
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.z_excess(x, self.q, self.phi)),
            _ => Ok(self.z(x)? - self.q / self.phi * self.w_scale(x)?),
        }
    }

    /// Relative accuracy to expect from single kernel evaluations.
    pub fn accuracy(&self) -> f64 {
        match self.backend {
            Backend::Exp(_) => 1e-12,
            _ => 1e-9,
        }
    }

    /// `int_0^x e^{-theta z} W_q(z) dz`.
    pub fn laplace_partial(&self, x: f64, theta: f64) -> Result<f64> {
        self.shifted_laplace(0.0, x, theta)
    }

    /// `int_0^x z e^{-theta z} W_q(z) dz`.
    pub fn laplace_moment(&self, x: f64, theta: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.laplace_moment(x, theta)),
            _ => self.integrate_w(0.0, x, |t, w| t * (-theta * t).exp() * w),
        }
    }

    fn tail_generic(&self, x: f64, theta: f64, power: i32) -> Result<f64> {
        let rate = theta - self.phi;
        let lead = (self.phi * x).exp();
        // e^{-Phi x} W(x) is bounded, so the weight alone controls the tail
        let len = (45.0 + 10.0 * power as f64) / rate;
        let v = integrate_fallible(
            |t| Ok(t.powi(power) * (-rate * t).exp() * self.w_scaled(x + t)?),
            0.0,
            len,
            &self.quad,
        )?;
        Ok(lead * v)
    }

    /// `int_0^inf e^{-theta t} W_q(x + t) dt` for `theta > Phi_q`, `x >= 0`.
    pub fn laplace_tail(&self, x: f64, theta: f64) -> Result<f64> {
        if !(theta > self.phi) {
            return domain(format!("tail transform needs theta > Phi_q = {}", self.phi));
        }
        match &self.backend {
            Backend::Exp(e) => Ok(e.laplace_tail(x, theta)),
            _ => self.tail_generic(x, theta, 0),
        }
    }

    fn laplace_tail_moment(&self, x: f64, theta: f64) -> Result<f64> {
        match &self.backend {
            Backend::Exp(e) => Ok(e.laplace_tail_moment(x, theta)),
            _ => self.tail_generic(x, theta, 1),
        }
    }

    /// `Z_q(x, theta) = e^{theta x} (1 + (q - kappa(theta)) int_0^x e^{-theta z} W_q(z) dz)`.
    ///
    /// For `theta > Phi_q` the equivalent tail form
    /// `(kappa(theta) - q) int_0^inf e^{-theta t} W_q(x + t) dt` is used; it has
    /// no cancellation for large `x`.
    pub fn z_theta(&self, x: f64, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return domain(format!("Z_q(x, theta) needs theta >= 0, got {theta}"));
        }
        if x <= 0.0 {
            return Ok((theta * x).exp());
        }
        if self.use_tail(x, theta) {
            let gap = self.model.kappa(theta) - self.q;
            Ok(gap * self.laplace_tail(x, theta)?)
        } else {
            let gap = self.q - self.model.kappa(theta);
            Ok((theta * x).exp() * (1.0 + gap * self.laplace_partial(x, theta)?))
        }
    }

    /// The tail form is exact for `theta > Phi_q`; numerical backends only
    /// switch to it once the direct form would lose digits to `e^{theta x}`.
    fn use_tail(&self, x: f64, theta: f64) -> bool {
        match self.backend {
            Backend::Exp(_) => theta > self.phi,
            _ => theta > self.phi && (theta - self.phi) * x > 5.0,
        }
    }

    /// Direct (finite-integral) form of `Z_q(x, theta)`, whatever `theta`.
    pub fn z_theta_direct(&self, x: f64, theta: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok((theta * x).exp());
        }
        let gap = self.q - self.model.kappa(theta);
        Ok((theta * x).exp() * (1.0 + gap * self.laplace_partial(x, theta)?))
    }

    /// `d/dtheta Z_q(x, theta)`.
    pub fn z_theta_dtheta(&self, x: f64, theta: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(x * (theta * x).exp());
        }
        let kp = self.model.kappa_prime(theta);
        if self.use_tail(x, theta) {
            let gap = self.model.kappa(theta) - self.q;
            Ok(kp * self.laplace_tail(x, theta)? - gap * self.laplace_tail_moment(x, theta)?)
        } else {
            let gap = self.q - self.model.kappa(theta);
            let e = (theta * x).exp();
            let part = self.laplace_partial(x, theta)?;
            let mom = self.laplace_moment(x, theta)?;
            Ok(x * e * (1.0 + gap * part) + e * (-kp * part - gap * mom))
        }
    }

    /// Density of the `q`-resolvent of `X` killed on exiting `[a, b]`.
    pub fn resolvent_density(&self, a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
        if !(a < b && a <= x && x <= b && a < y && y < b) {
            return domain(format!(
                "resolvent density needs a <= x <= b and a < y < b, got a={a}, b={b}, x={x}, y={y}"
            ));
        }
        let v = self.w_scale(x - a)? * self.w_scale(b - y)? / self.w_scale(b - a)?
            - self.w_scale(x - y)?;
        Ok(v.max(0.0))
    }
}

/// `Z_{alpha, beta}(x, theta)` where `alpha` is the rate of `ctx`.
pub fn z_two_param(ctx: &ScaleContext, beta: f64, x: f64, theta: f64) -> Result<f64> {
    let alpha = ctx.q();
    if !(beta >= -alpha) {
        return domain(format!("Z_(alpha,beta) needs beta >= -alpha, got alpha={alpha}, beta={beta}"));
    }
    if !(theta >= 0.0) {
        return domain(format!("Z_(alpha,beta) needs theta >= 0, got {theta}"));
    }
    let model = ctx.model();
    let phi_ab = model.phi_inverse(alpha + beta)?;
    let k = model.kappa(theta);
    let denom = alpha + beta - k;
    if denom.abs() < 1e-8 * (alpha + beta + 1.0) {
        // removable singularity at theta = Phi_{alpha+beta}
        let z = ctx.z_theta(x, phi_ab)?;
        let dz = ctx.z_theta_dtheta(x, phi_ab)?;
        return Ok(z - beta * dz / model.kappa_prime(phi_ab));
    }
    let z_theta = ctx.z_theta(x, theta)?;
    let z_phi = ctx.z_theta(x, phi_ab)?;
    Ok((beta * z_theta + (alpha - k) * z_phi) / denom)
}

/// `Z_{q,r}'(y) = q Phi_{q+r} Z_q(y, Phi_{q+r}) / (q + r)`.
pub fn z_two_param_deriv(ctx: &ScaleContext, r: f64, y: f64) -> Result<f64> {
    let q = ctx.q();
    let phi = ctx.model().phi_inverse(q + r)?;
    Ok(q * phi * ctx.z_theta(y, phi)? / (q + r))
}

#[cfg(test)]
mod tests;
