//! Kernels `H^a`, `I^a`, `h^a` and their right derivatives for a fixed `a < 0`.

use crate::error::{domain, Result};
use crate::quadrature::integrate_fallible;
use crate::scale::{ScaleContext, ShiftedKernels, Side};

/// A value obtained as a difference, with its condition number
/// `sum |terms| / |value|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioned {
    pub value: f64,
    pub cond: f64,
    /// Sum of the absolute values of the terms.
    pub mass: f64,
}

impl Conditioned {
    pub(crate) fn from_terms(plus: f64, minus: f64) -> Self {
        let value = plus - minus;
        let mass = plus.abs() + minus.abs();
        let cond = if mass == 0.0 {
            1.0
        } else if value == 0.0 {
            f64::INFINITY
        } else {
            mass / value.abs()
        };
        Self { value, cond, mass }
    }

    pub(crate) fn exact(value: f64) -> Self {
        Self {
            value,
            cond: 1.0,
            mass: value.abs(),
        }
    }
}

/// Kernels at rates `q` and `p = q + r` for one absolute-ruin level `a`.
#[derive(Debug, Clone, Copy)]
pub struct Kernels<'e> {
    cq: &'e ScaleContext,
    cp: &'e ScaleContext,
    sk: ShiftedKernels<'e>,
    q: f64,
    r: f64,
    a: f64,
    len: f64,
    /// `W_p(-a)`, `Z_p(-a)`, `Zbar_p(-a)`, `Wbar_p(-a)`
    wp: f64,
    zp: f64,
    zbarp: f64,
    wbarp: f64,
    /// `Z_p(-a) - (p / Phi_p) W_p(-a)`
    excess: f64,
}

impl<'e> Kernels<'e> {
    pub(crate) fn new(cq: &'e ScaleContext, cp: &'e ScaleContext, a: f64) -> Result<Self> {
        let sk = ShiftedKernels::new(cq, cp, a)?;
        let len = -a;
        let fam = cp.z_family(len)?;
        Ok(Self {
            cq,
            cp,
            sk,
            q: cq.q(),
            r: cp.q() - cq.q(),
            a,
            len,
            wp: cp.w_scale(len)?,
            zp: fam.z,
            zbarp: fam.zbar,
            wbarp: fam.wbar,
            excess: cp.z_excess(len)?,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn shifted(&self) -> &ShiftedKernels<'e> {
        &self.sk
    }

    /// `W_p(-a)`.
    pub fn w_p_len(&self) -> f64 {
        self.wp
    }

    pub fn z_p_len(&self) -> f64 {
        self.zp
    }

    pub fn zbar_p_len(&self) -> f64 {
        self.zbarp
    }

    fn ratio(&self) -> f64 {
        self.zp / self.wp
    }

    fn quad<F: FnMut(f64) -> Result<f64>>(&self, f: F, lo: f64, hi: f64) -> Result<f64> {
        integrate_fallible(f, lo, hi, self.cq.quad_options())
    }

    /// `Z_p(u) - W_p(u) Z_p(-a)/W_p(-a)` on `[0, -a]`, written through the
    /// bounded excess `Z_p - (p/Phi_p) W_p` so nothing large cancels.
    fn exit_below(&self, u: f64) -> Result<f64> {
        Ok(self.cp.z_excess(u)? - self.excess * self.cp.w_scale(u)? / self.wp)
    }

    /// `I^a(y) = Z^a(y) - W^a(y) Z_p(-a)/W_p(-a)`.
    pub fn i(&self, y: f64) -> Result<f64> {
        if y < self.a {
            return Ok(1.0);
        }
        if y < 0.0 {
            return self.exit_below(y + self.len);
        }
        let s = y + self.len;
        let head = self.cq.z(s)? - self.ratio() * self.cq.w_scale(s)?;
        let conv = self.quad(|u| Ok(self.cq.w_scale(s - u)? * self.exit_below(u)?), 0.0, self.len)?;
        Ok(head + self.r * conv)
    }

    /// `I^a` straight from its definition.
    pub fn i_direct(&self, y: f64) -> Result<f64> {
        Ok(self.sk.z(y)? - self.sk.w(y)? * self.ratio())
    }

    /// Right derivative of `I^a`.
    pub fn i_deriv(&self, y: f64) -> Result<f64> {
        if y == self.a {
            return domain("I^a' is not defined at y = a");
        }
        if y < self.a {
            return Ok(0.0);
        }
        let p = self.q + self.r;
        if y < 0.0 {
            let s = y + self.len;
            return Ok(p * self.cp.w_scale(s)? - self.ratio() * self.cp.w_scale_deriv(s, Side::Right)?);
        }
        let s = y + self.len;
        let head = self.q * self.cq.w_scale(s)? - self.ratio() * self.cq.w_scale_deriv(s, Side::Right)?;
        let conv = self.quad(
            |u| Ok(self.cq.w_scale_deriv(s - u, Side::Right)? * self.exit_below(u)?),
            0.0,
            self.len,
        )?;
        Ok(head + self.r * conv)
    }

    /// `(q + r) W^a(y) - Z_p(-a) (r W_q(y) + (W^a)'(y) / W_p(-a))`.
    pub fn i_deriv_direct(&self, y: f64) -> Result<f64> {
        let p = self.q + self.r;
        Ok(p * self.sk.w(y)? - self.zp * (self.r * self.cq.w_scale(y)? + self.sk.w_deriv(y)? / self.wp))
    }

    /// `L(theta) = int_0^{-a} e^{-theta u} W_p(u) du`.
    pub fn l(&self, theta: f64) -> Result<f64> {
        self.cp.shifted_laplace(0.0, self.len, theta)
    }

    /// `M(y) = int_0^{-a} e^{-theta u} W^{-u}(y) du`.
    pub fn m(&self, y: f64, theta: f64) -> Result<f64> {
        if y < self.a {
            return Ok(0.0);
        }
        if y < 0.0 {
            return self.cp.shifted_laplace(y, self.len, theta);
        }
        let direct = self.cq.shifted_laplace(y, self.len, theta)?;
        let conv = self.quad(
            |s| {
                Ok((-theta * s).exp()
                    * self.cp.w_scale(s)?
                    * self.cq.shifted_laplace(y, self.len - s, theta)?)
            },
            0.0,
            self.len,
        )?;
        Ok(direct + self.r * conv)
    }

    /// `d/dy int_0^len e^{-theta t} W_q(y + t) dt` for `y >= 0`.
    fn shifted_laplace_dy(&self, y: f64, len: f64, theta: f64) -> Result<f64> {
        if len <= 0.0 {
            return Ok(0.0);
        }
        Ok((-theta * len).exp() * self.cq.w_scale(y + len)? - self.cq.w_scale(y)?
            + theta * self.cq.shifted_laplace(y, len, theta)?)
    }

    /// Right derivative of `M`.
    pub fn m_deriv(&self, y: f64, theta: f64) -> Result<f64> {
        if y == self.a {
            return domain("M' is not defined at y = a");
        }
        if y < self.a {
            return Ok(0.0);
        }
        if y < 0.0 {
            return Ok(theta * self.m(y, theta)? + (theta * self.a).exp() * self.cp.w_scale(y - self.a)?);
        }
        let direct = self.shifted_laplace_dy(y, self.len, theta)?;
        let conv = self.quad(
            |s| {
                Ok((-theta * s).exp() * self.cp.w_scale(s)? * self.shifted_laplace_dy(y, self.len - s, theta)?)
            },
            0.0,
            self.len,
        )?;
        Ok(direct + self.r * conv)
    }

    /// `H^a(y, theta)` from its integral definition.
    pub fn h_integral(&self, y: f64, theta: f64) -> Result<Conditioned> {
        if y < self.a {
            return Ok(Conditioned::exact(0.0));
        }
        let lead = self.sk.w(y)? / self.wp * (1.0 + self.r * self.l(theta)?);
        let tail = self.r * self.m(y, theta)?;
        Ok(Conditioned::from_terms(lead, tail))
    }

    /// `H^a(y, 0) = (-r I^a(y) + q W^a(y)/W_p(-a) + r Z_q(y)) / (q + r)`.
    pub fn h_zero(&self, y: f64) -> Result<f64> {
        if y < self.a {
            return Ok(0.0);
        }
        let p = self.q + self.r;
        Ok((-self.r * self.i(y)? + self.q * self.sk.w(y)? / self.wp + self.r * self.cq.z(y)?) / p)
    }

    /// `H^a(y, 0) = (W^a/W_p(-a) (r Z_p(-a) + q) + r (Z_q(y) - Z^a(y))) / (q + r)`.
    pub fn h_zero_alt(&self, y: f64) -> Result<f64> {
        if y < self.a {
            return Ok(0.0);
        }
        let p = self.q + self.r;
        Ok((self.sk.w(y)? / self.wp * (self.r * self.zp + self.q) + self.r * (self.cq.z(y)? - self.sk.z(y)?)) / p)
    }

    /// Right derivative of `H^a(., theta)` from the integral definition.
    pub fn h_deriv_integral(&self, y: f64, theta: f64) -> Result<Conditioned> {
        if y == self.a {
            return domain("H^a' is not defined at y = a");
        }
        if y < self.a {
            return Ok(Conditioned::exact(0.0));
        }
        let lead = self.sk.w_deriv(y)? / self.wp * (1.0 + self.r * self.l(theta)?);
        let tail = self.r * self.m_deriv(y, theta)?;
        Ok(Conditioned::from_terms(lead, tail))
    }

    /// `H^a'(y, 0) = (q ((W^a)'(y)/W_p(-a) + r W_q(y)) - r I^a'(y)) / (q + r)`.
    pub fn h_deriv_zero(&self, y: f64) -> Result<f64> {
        if y == self.a {
            return domain("H^a' is not defined at y = a");
        }
        if y < self.a {
            return Ok(0.0);
        }
        let p = self.q + self.r;
        let wd = self.sk.w_deriv(y)?;
        Ok((self.q * (wd / self.wp + self.r * self.cq.w_scale(y)?) - self.r * self.i_deriv(y)?) / p)
    }

    /// First displayed form of `H^a'(y, 0)`.
    pub fn h_deriv_zero_alt(&self, y: f64) -> Result<Conditioned> {
        if y == self.a {
            return domain("H^a' is not defined at y = a");
        }
        if y < self.a {
            return Ok(Conditioned::exact(0.0));
        }
        let p = self.q + self.r;
        let k = self.r * self.zp + self.q;
        let wd = self.sk.w_deriv(y)?;
        let plus = wd * k / (p * self.wp) + self.r / p * self.cq.w_scale(y)? * k;
        Ok(Conditioned::from_terms(plus, self.r * self.sk.w(y)?))
    }

    /// `h^a(y)`, second displayed form, with the stable `I^a`.
    pub fn small_h(&self, y: f64) -> Result<Conditioned> {
        let c = self.r / (self.q + self.r);
        let plus = self.cq.zbar(y)? + self.zbarp / self.wp * self.sk.w(y)? - self.a * self.i(y)?;
        Ok(Conditioned::from_terms(c * plus, c * self.sk.zbar(y)?))
    }

    /// `h^a(y)`, first displayed form.
    pub fn small_h_alt(&self, y: f64) -> Result<Conditioned> {
        let c = self.r / (self.q + self.r);
        let coef = (self.a * self.zp + self.zbarp) / self.wp;
        let w = self.sk.w(y)?;
        let (cp, cm) = if coef >= 0.0 { (coef * w, 0.0) } else { (0.0, -coef * w) };
        let plus = self.cq.zbar(y)? + cp - self.a * self.sk.z(y)?;
        Ok(Conditioned::from_terms(c * plus, c * (cm + self.sk.zbar(y)?)))
    }

    /// Right derivative `h^a'(y)`.
    pub fn small_h_deriv(&self, y: f64) -> Result<Conditioned> {
        if y == self.a {
            return domain("h^a' is not defined at y = a");
        }
        let p = self.q + self.r;
        let c = self.r / p;
        let coef = (self.a * self.zp + self.zbarp) / self.wp;
        let wq = self.cq.w_scale(y)?;
        let wd = coef * self.sk.w_deriv(y)?;
        let (dp, dm) = if wd >= 0.0 { (wd, 0.0) } else { (0.0, -wd) };
        let plus = self.cq.z(y)? + dp - self.a * p * self.sk.w(y)? + self.r * wq * self.zbarp;
        let minus = dm - self.a * self.r * wq * self.zp + self.sk.z(y)?;
        Ok(Conditioned::from_terms(c * plus, c * minus))
    }

    /// `u~_1(x, a, theta)` for `x <= 0`.
    pub fn u1(&self, x: f64, theta: f64) -> Result<f64> {
        if x < self.a {
            return Ok(0.0);
        }
        let lead = self.cp.w_scale(x - self.a)? / self.wp * self.l(theta)?;
        Ok(self.r * (lead - self.cp.shifted_laplace(x, self.len, theta)?))
    }

    /// `u~_1(x, a, 0)` in closed form.
    pub fn u1_zero(&self, x: f64) -> Result<Conditioned> {
        let p = self.q + self.r;
        let w = self.cp.w_scale(x - self.a)?;
        let plus = self.r * w / self.wp * self.wbarp + self.r / p * self.cp.z(x)?;
        Ok(Conditioned::from_terms(plus, self.r / p * self.cp.z(x - self.a)?))
    }

    pub fn u2(&self, x: f64) -> Result<f64> {
        Ok(self.cp.w_scale(x - self.a)? / self.wp)
    }

    pub fn u3(&self, x: f64) -> Result<f64> {
        if x < self.a {
            return Ok(1.0);
        }
        self.exit_below(x + self.len)
    }

    /// `U_1^0(a, x, theta)`.
    pub fn big_u1(&self, x: f64, theta: f64) -> Result<f64> {
        Ok(-self.r * (self.sk.w(x)? * self.l(theta)? / self.wp - self.m(x, theta)?))
    }

    /// `U_1^0(a, x, 0)` in closed form.
    pub fn big_u1_zero(&self, x: f64) -> Result<f64> {
        let p = self.q + self.r;
        Ok(-self.r / p * (self.cq.z(x)? - self.sk.z(x)? + p * self.wbarp / self.wp * self.sk.w(x)?))
    }

    pub fn big_u2(&self, x: f64) -> Result<f64> {
        Ok(-self.sk.w(x)? / self.wp)
    }

    pub fn big_u3(&self, x: f64) -> Result<f64> {
        Ok(-self.i(x)?)
    }

    pub fn big_u4(&self, x: f64) -> Result<Conditioned> {
        let h = self.small_h(x)?;
        Ok(Conditioned { value: -h.value, ..h })
    }
}
