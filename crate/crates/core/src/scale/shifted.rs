//! Shifted kernels `W^a_{q,r}`, `Z^a_{q,r}`, `Zbar^a_{q,r}`.

use super::{ScaleContext, Side};
use crate::error::{domain, Error, Result};
use crate::quadrature::integrate_fallible;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedKernelValue {
    pub w_a: f64,
    pub z_a: f64,
    pub zbar_a: f64,
    /// Largest absolute discrepancy between the two convolution forms.
    pub representation_gap: f64,
}

/// Shifted kernels for rates `q` and `q + r` and level `a < 0`.
///
/// The convolution over `[0, -a]` has a positive integrand and is used for
/// all values; the convolution over `[0, x]` subtracts two terms growing like
/// `e^{Phi_{q+r} x}` and is only evaluated by [`ShiftedKernels::both`].
#[derive(Debug, Clone, Copy)]
pub struct ShiftedKernels<'c> {
    q: &'c ScaleContext,
    qr: &'c ScaleContext,
    r: f64,
    a: f64,
    gap_tol: f64,
}

impl<'c> ShiftedKernels<'c> {
    pub fn new(q: &'c ScaleContext, qr: &'c ScaleContext, a: f64) -> Result<Self> {
        let r = qr.q() - q.q();
        if !(r > 0.0) {
            return domain(format!("second context must have a larger rate, got r = {r}"));
        }
        if !(a < 0.0) || !a.is_finite() {
            return domain(format!("shifted kernels need a < 0, got {a}"));
        }
        Ok(Self {
            q,
            qr,
            r,
            a,
            gap_tol: 1e-8,
        })
    }

    pub fn with_gap_tolerance(mut self, tol: f64) -> Self {
        self.gap_tol = tol;
        self
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn conv_tail<F: Fn(f64) -> Result<f64>>(&self, x: f64, g: F) -> Result<f64> {
        integrate_fallible(
            |u| Ok(self.q.w_scale(x - self.a - u)? * g(u)?),
            0.0,
            -self.a,
            self.q.quad_options(),
        )
    }

    fn conv_head<F: Fn(f64) -> Result<f64>>(&self, x: f64, g: F) -> Result<f64> {
        integrate_fallible(
            |y| Ok(self.q.w_scale(x - y)? * g(y - self.a)?),
            0.0,
            x,
            self.q.quad_options(),
        )
    }

    /// `W^a(x)`.
    pub fn w(&self, x: f64) -> Result<f64> {
        if x < self.a {
            return Ok(0.0);
        }
        if x < 0.0 {
            return self.qr.w_scale(x - self.a);
        }
        Ok(self.q.w_scale(x - self.a)? + self.r * self.conv_tail(x, |u| self.qr.w_scale(u))?)
    }

    /// `Z^a(x)`.
    pub fn z(&self, x: f64) -> Result<f64> {
        if x < self.a {
            return Ok(1.0);
        }
        if x < 0.0 {
            return self.qr.z(x - self.a);
        }
        Ok(self.q.z(x - self.a)? + self.r * self.conv_tail(x, |u| self.qr.z(u))?)
    }

    /// `Zbar^a(x)`.
    pub fn zbar(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return self.qr.zbar(x - self.a);
        }
        Ok(self.q.zbar(x - self.a)? + self.r * self.conv_tail(x, |u| self.qr.zbar(u))?)
    }

    /// Evaluates both convolution forms and fails if they disagree beyond
    /// `gap_tol * max(1, |value|)`.
    pub fn both(&self, x: f64) -> Result<ShiftedKernelValue> {
        let w_a = self.w(x)?;
        let z_a = self.z(x)?;
        let zbar_a = self.zbar(x)?;
        let (w1, z1, zb1) = if x <= 0.0 {
            (
                self.qr.w_scale(x - self.a)?,
                self.qr.z(x - self.a)?,
                self.qr.zbar(x - self.a)?,
            )
        } else {
            (
                self.qr.w_scale(x - self.a)? - self.r * self.conv_head(x, |v| self.qr.w_scale(v))?,
                self.qr.z(x - self.a)? - self.r * self.conv_head(x, |v| self.qr.z(v))?,
                self.qr.zbar(x - self.a)? - self.r * self.conv_head(x, |v| self.qr.zbar(v))?,
            )
        };
        let mut gap: f64 = 0.0;
        for (kernel, v2, v1) in [("W^a", w_a, w1), ("Z^a", z_a, z1), ("Zbar^a", zbar_a, zb1)] {
            let g = (v2 - v1).abs();
            if g > self.gap_tol * v2.abs().max(1.0) {
                return Err(Error::RepresentationGap { kernel, x, gap: g });
            }
            gap = gap.max(g);
        }
        Ok(ShiftedKernelValue {
            w_a,
            z_a,
            zbar_a,
            representation_gap: gap,
        })
    }

    /// Right derivative of `W^a`; undefined at `x = a`.
    pub fn w_deriv(&self, x: f64) -> Result<f64> {
        if x == self.a {
            return domain("W^a' is not defined at x = a");
        }
        if x < self.a {
            return Ok(0.0);
        }
        if x < 0.0 {
            return self.qr.w_scale_deriv(x - self.a, Side::Right);
        }
        let conv = integrate_fallible(
            |u| Ok(self.q.w_scale_deriv(x - self.a - u, Side::Right)? * self.qr.w_scale(u)?),
            0.0,
            -self.a,
            self.q.quad_options(),
        )?;
        Ok(self.q.w_scale_deriv(x - self.a, Side::Right)? + self.r * conv)
    }

    /// Right derivative of `Z^a`.
    pub fn z_deriv(&self, x: f64) -> Result<f64> {
        let qr = self.q.q() + self.r;
        Ok(qr * self.w(x)? - self.r * self.qr.z(-self.a)? * self.q.w_scale(x)?)
    }

    /// Derivative of `Zbar^a`.
    pub fn zbar_deriv(&self, x: f64) -> Result<f64> {
        Ok(self.z(x)? - self.r * self.qr.zbar(-self.a)? * self.q.w_scale(x)?)
    }
}
