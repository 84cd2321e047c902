//! Identities without an upper level or without an absolute-ruin level, and
//! the `a -> -inf` limits of the reflected identities.

use super::{dual_check, guard, positive, Conditioned, Evaluator, IdentityValue, Scenario, Source, Trace};
use crate::error::{Error, Result};
use crate::quadrature::integrate_fallible;
use crate::scale::{z_two_param, z_two_param_deriv};

fn precondition(identity: &'static str, branch: &'static str, reason: impl Into<String>) -> Error {
    Error::Precondition {
        identity,
        branch,
        reason: reason.into(),
    }
}

impl Evaluator {
    fn phi_q(&self) -> f64 {
        self.cq.phi()
    }

    fn kappa_prime_zero(&self) -> f64 {
        self.model().kappa_prime_zero()
    }

    /// `Z_{q,r}(x, theta)`.
    pub fn z_qr(&self, x: f64, theta: f64) -> Result<f64> {
        z_two_param(&self.cq, self.r, x, theta)
    }

    /// `Z_{q,r}'(y) = q Phi_{q+r} Z_q(y, Phi_{q+r}) / (q + r)`.
    pub fn z_qr_deriv(&self, y: f64) -> Result<f64> {
        z_two_param_deriv(&self.cq, self.r, y)
    }

    /// `[(q + r) Z_{q+r}(y, Phi_q) - r Z_{q+r}(y)] / Phi_q`, and its limit
    /// `r Zbar_r(y) + kappa'(0+)` when `Phi_q = 0`.
    pub fn qphi(&self, y: f64) -> Result<f64> {
        let phi = self.phi_q();
        if phi > 0.0 {
            let p = self.q + self.r;
            Ok((p * self.cp.z_theta(y, phi)? - self.r * self.cp.z(y)?) / phi)
        } else {
            Ok(self.r * self.cp.zbar(y)? + self.kappa_prime_zero())
        }
    }

    /// Value of `qphi` as `y -> 0`: `q / Phi_q`, with its `q = 0` limits.
    pub fn qphi0(&self) -> f64 {
        let phi = self.phi_q();
        if self.q > 0.0 {
            self.q / phi
        } else if phi > 0.0 {
            0.0
        } else {
            self.kappa_prime_zero()
        }
    }

    /// `G(y, theta)` from its integral form.
    pub fn big_g(&self, y: f64, theta: f64) -> Result<Conditioned> {
        let phi = self.phi_q();
        let lead = self.cp.z_theta(y, phi)? / self.cp.w_scale(y)? * (1.0 + self.r * self.cp.laplace_partial(y, theta)?);
        let tail = integrate_fallible(
            |u| Ok((-theta * u).exp() * self.cp.z_theta(u, phi)?),
            0.0,
            y,
            self.cq.quad_options(),
        )?;
        Ok(Conditioned::from_terms(lead, self.r * tail))
    }

    /// `G(y, 0)` in closed form.
    pub fn big_g_zero(&self, y: f64) -> Result<f64> {
        let p = self.q + self.r;
        let zphi = self.cp.z_theta(y, self.phi_q())?;
        let lead = zphi / self.cp.w_scale(y)? * (self.r * self.cp.z(y)? + self.q);
        Ok((lead - self.r * (self.qphi(y)? - self.qphi0())) / p)
    }

    /// `J(y) = qphi(y) - Z_{q+r}(y, Phi_q) Z_{q+r}(y) / W_{q+r}(y)`.
    pub fn big_j(&self, y: f64) -> Result<f64> {
        let zphi = self.cp.z_theta(y, self.phi_q())?;
        Ok(self.qphi(y)? - zphi * self.cp.z(y)? / self.cp.w_scale(y)?)
    }

    /// `h_{q,r}(y)`, the level-`-a` coefficient of injections before absolute ruin.
    pub fn h_lim(&self, y: f64) -> Result<f64> {
        let phi = self.phi_q();
        let p = self.q + self.r;
        let fam = self.cp.z_family(y)?;
        let w = self.cp.w_scale(y)?;
        let zphi = self.cp.z_theta(y, phi)?;
        let inner = self.qphi0() / phi + (-y * fam.z + fam.zbar) / w * zphi + (y * phi - 1.0) * self.qphi(y)? / phi
            + self.r / phi * fam.zbar;
        Ok(self.r / p * inner)
    }

    /// `k_{q,r}(y)`.
    pub fn k_fn(&self, y: f64) -> Result<f64> {
        let p = self.q + self.r;
        let kp = self.kappa_prime_zero();
        let phi_p = self.cp.phi();
        let inner = self.cq.zbar(y)? - kp * self.cq.wbar(y)? - kp / p * (self.cq.z_theta(y, phi_p)? - self.cq.z(y)?);
        Ok(self.r / p * inner)
    }

    /// `h~_{q,r}(y) = r/(q+r) (Zbar_q(y) + kappa'(0+)/q)`, `q > 0`.
    pub fn h_tilde(&self, y: f64) -> Result<f64> {
        Ok(self.r / (self.q + self.r) * (self.cq.zbar(y)? + self.kappa_prime_zero() / self.q))
    }

    fn finite_kappa_prime(&self, identity: &'static str, branch: &'static str) -> Result<f64> {
        let kp = self.kappa_prime_zero();
        if kp.is_finite() {
            Ok(kp)
        } else {
            Err(precondition(identity, branch, "kappa'(0+) must be finite"))
        }
    }

    /// `E_x(e^{-q tau_a^-(r) - theta R_r(tau_a^-(r))}; tau_a^-(r) < inf)` with
    /// the `G` and `J` kernels in the trace.
    pub fn ruin_infinite(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "ruin_infinite";
        self.matches(s)?;
        let a = s.finite_a(ID)?;
        if self.q == 0.0 && s.theta != 0.0 {
            return Err(precondition(
                ID,
                "q = 0",
                format!("without discounting only theta = 0 is covered, got theta = {}", s.theta),
            ));
        }
        if self.q == 0.0 && self.phi_q() == 0.0 {
            self.finite_kappa_prime(ID, "q = 0, Phi_0 = 0")?;
        }
        let k = self.kernels(a)?;
        let len = -a;
        let mut tr = Trace::default();
        let acc = self.acc();
        let big_g = if s.theta == 0.0 {
            let closed = self.big_g_zero(len)?;
            let integral = self.big_g(len, 0.0)?;
            tr.put("G_integral(-a)", integral.value);
            dual_check(ID, "G at theta = 0", closed, integral, acc)?;
            closed
        } else {
            guard(ID, "G", self.big_g(len, s.theta)?, acc)?
        };
        let big_g = positive(ID, "G(-a, theta)", tr.put("G(-a)", big_g))?;
        let big_j = tr.put("J(-a)", self.big_j(len)?);
        let hx = self.h_value(&k, s.x, s.theta, ID, &mut tr, "x")?;
        let ix = self.i_value(&k, s.x, &mut tr, "x")?;
        Ok(IdentityValue::new(ix - big_j * hx / big_g, Source::RuinInfiniteHorizon, tr))
    }

    /// `(Z_{q,r}(x, theta) / Z_{q,r}(b, theta), Z_q(x, Phi_{q+r}) / Z_q(b, Phi_{q+r}))`.
    pub fn upcross_infinite(&self, s: &Scenario) -> Result<(IdentityValue, IdentityValue)> {
        const ID: &str = "upcross_infinite";
        self.matches(s)?;
        let b = s.finite_b(ID)?;
        s.x_at_most_b(ID)?;
        let mut tr = Trace::default();
        let zb = positive(ID, "Z_{q,r}(b, theta)", tr.put("Z_qr(b)", self.z_qr(b, s.theta)?))?;
        let zx = tr.put("Z_qr(x)", self.z_qr(s.x, s.theta)?);
        let phi_p = self.cp.phi();
        let nb = positive(ID, "Z_q(b, Phi_{q+r})", tr.put("Z_q(b,Phi_p)", self.cq.z_theta(b, phi_p)?))?;
        let nx = tr.put("Z_q(x,Phi_p)", self.cq.z_theta(s.x, phi_p)?);
        Ok((
            IdentityValue::new(zx / zb, Source::UpcrossInfiniteHorizon, tr.clone()),
            IdentityValue::new(nx / nb, Source::UpcrossNoBailout, tr),
        ))
    }

    /// Discounted injections until absolute ruin, no upper level.
    pub fn injections_before_ruin(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "injections_before_ruin";
        self.matches(s)?;
        let a = s.finite_a(ID)?;
        if !(self.q > 0.0 || self.phi_q() > 0.0) {
            return Err(precondition(ID, "case (i)", "needs q > 0, or q = 0 with Phi_0 > 0"));
        }
        let k = self.kernels(a)?;
        let len = -a;
        let mut tr = Trace::default();
        if s.x < a {
            return Ok(IdentityValue::new(0.0, Source::InjectionsBeforeAbsoluteRuin, tr));
        }
        let big_g = positive(ID, "G(-a, 0)", tr.put("G(-a)", self.big_g_zero(len)?))?;
        let hl = tr.put("h_lim(-a)", self.h_lim(len)?);
        let hx = self.h_value(&k, s.x, 0.0, ID, &mut tr, "x")?;
        let sx = self.small_h_value(&k, s.x, ID, &mut tr, "x")?;
        Ok(IdentityValue::new(hx / big_g * hl - sx, Source::InjectionsBeforeAbsoluteRuin, tr))
    }

    /// Discounted injections until `tau_b^+(r)`, no absolute ruin.
    pub fn injections_before_upcross(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "injections_before_upcross";
        self.matches(s)?;
        self.finite_kappa_prime(ID, "case (ii)")?;
        let b = s.finite_b(ID)?;
        s.x_at_most_b(ID)?;
        let mut tr = Trace::default();
        if s.x == b {
            return Ok(IdentityValue::new(0.0, Source::InjectionsBeforeUpcross, tr));
        }
        let zb = positive(ID, "Z_{q,r}(b)", tr.put("Z_qr(b)", self.z_qr(b, 0.0)?))?;
        let zx = tr.put("Z_qr(x)", self.z_qr(s.x, 0.0)?);
        let kb = tr.put("k(b)", self.k_fn(b)?);
        let kx = tr.put("k(x)", self.k_fn(s.x)?);
        let v = zx / zb * kb - kx;
        if self.q > 0.0 {
            let tb = tr.put("h~(b)", self.h_tilde(b)?);
            let tx = tr.put("h~(x)", self.h_tilde(s.x)?);
            tr.put("simplified", zx / zb * tb - tx);
        }
        Ok(IdentityValue::new(v, Source::InjectionsBeforeUpcross, tr))
    }

    /// Discounted injections over the whole time axis.
    pub fn injections_infinite(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "injections_infinite";
        self.matches(s)?;
        self.finite_kappa_prime(ID, "case (iii)")?;
        if !(self.q > 0.0) {
            return Err(precondition(ID, "case (iii)", "needs q > 0"));
        }
        let mut tr = Trace::default();
        let (pq, pp) = (self.phi_q(), self.cp.phi());
        let zx = tr.put("Z_qr(x)", self.z_qr(s.x, 0.0)?);
        let tx = tr.put("h~(x)", self.h_tilde(s.x)?);
        let v = (pp - pq) / (pp * pq) * zx - tx;
        Ok(IdentityValue::new(v, Source::InjectionsInfiniteHorizon, tr))
    }

    /// `a -> -inf` limit of the reflected dividends: `Z_{q,r}(x) / Z_{q,r}'(b)`.
    pub fn reflected_dividends_infinite(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "reflected_dividends_infinite";
        self.matches(s)?;
        if !(self.q > 0.0) {
            return Err(precondition(ID, "no absolute ruin", "needs q > 0"));
        }
        let b = s.finite_b(ID)?;
        let mut tr = Trace::default();
        let zd = positive(ID, "Z_{q,r}'(b)", tr.put("Z_qr'(b)", self.z_qr_deriv(b)?))?;
        let v = if s.x <= b {
            tr.put("Z_qr(x)", self.z_qr(s.x, 0.0)?) / zd
        } else {
            tr.put("Z_qr(b)", self.z_qr(b, 0.0)?) / zd + (s.x - b)
        };
        Ok(IdentityValue::new(v, Source::ReflectedDividendsInfinite, tr))
    }

    /// `a -> -inf` limit of the reflected injections.
    pub fn reflected_injections_infinite(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "reflected_injections_infinite";
        self.matches(s)?;
        self.finite_kappa_prime(ID, "no absolute ruin")?;
        if !(self.q > 0.0) {
            return Err(precondition(ID, "no absolute ruin", "needs q > 0"));
        }
        let b = s.finite_b(ID)?;
        let x = s.x.min(b);
        let mut tr = Trace::default();
        let zd = positive(ID, "Z_{q,r}'(b)", tr.put("Z_qr'(b)", self.z_qr_deriv(b)?))?;
        let zx = tr.put("Z_qr(x)", self.z_qr(x, 0.0)?);
        let zqb = tr.put("Z_q(b)", self.cq.z(b)?);
        let tx = tr.put("h~(x)", self.h_tilde(x)?);
        let v = self.r / (self.q + self.r) * zx * zqb / zd - tx;
        Ok(IdentityValue::new(v, Source::ReflectedInjectionsInfinite, tr))
    }
}
