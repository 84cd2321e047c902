//! Fluctuation identities for the process reflected at Poisson observation
//! times below 0, killed on absolute ruin below `a`, and stopped at or
//! reflected from above at `b`.

mod infinite;
mod kernels;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use kernels::{Conditioned, Kernels};

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::scale::{BackendKind, ScaleContext};

/// Parameters shared by all identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Discount rate.
    pub q: f64,
    /// Observation intensity.
    pub r: f64,
    /// Absolute-ruin level, `a < 0`; `-inf` where the identity does not use it.
    pub a: f64,
    /// Upper level or dividend barrier, `b > 0`; `+inf` where unused.
    pub b: f64,
    /// Starting point.
    pub x: f64,
    /// Laplace argument for the injected capital.
    pub theta: f64,
}

impl Scenario {
    pub fn new(q: f64, r: f64, a: f64, b: f64, x: f64, theta: f64) -> Result<Self> {
        let s = Self { q, r, a, b, x, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(format!("scenario: {what}")));
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return bad(&format!("q must be finite and >= 0, got {}", self.q));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(&format!("r must be finite and > 0, got {}", self.r));
        }
        if !(self.a < 0.0) {
            return bad(&format!("a must be < 0, got {}", self.a));
        }
        if !(self.b > 0.0) {
            return bad(&format!("b must be > 0, got {}", self.b));
        }
        if !self.x.is_finite() {
            return bad(&format!("x must be finite, got {}", self.x));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return bad(&format!("theta must be finite and >= 0, got {}", self.theta));
        }
        Ok(())
    }

    fn finite_a(&self, identity: &'static str) -> Result<f64> {
        if self.a.is_finite() {
            Ok(self.a)
        } else {
            Err(Error::Precondition {
                identity,
                branch: "finite absolute-ruin level",
                reason: "a finite level a < 0 is required".into(),
            })
        }
    }

    fn finite_b(&self, identity: &'static str) -> Result<f64> {
        if self.b.is_finite() {
            Ok(self.b)
        } else {
            Err(Error::Precondition {
                identity,
                branch: "finite upper level",
                reason: "a finite level b > 0 is required".into(),
            })
        }
    }

    fn x_at_most_b(&self, identity: &'static str) -> Result<()> {
        if self.x <= self.b {
            Ok(())
        } else {
            Err(Error::Precondition {
                identity,
                branch: "x <= b",
                reason: format!("x = {} exceeds b = {}", self.x, self.b),
            })
        }
    }
}

/// Which result an [`IdentityValue`] comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ExitKernels,
    JointLaplaceKilled,
    InjectionsKilled,
    RuinInfiniteHorizon,
    UpcrossInfiniteHorizon,
    UpcrossNoBailout,
    InjectionsBeforeAbsoluteRuin,
    InjectionsBeforeUpcross,
    InjectionsInfiniteHorizon,
    ReflectedExitKernels,
    ReflectedJointLaplace,
    ReflectedDividendsKilled,
    ReflectedDividendsInfinite,
    ReflectedInjectionsKilled,
    ReflectedInjectionsInfinite,
    ObservationClockBlocks,
    ClassicalExitBlocks,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Self::ExitKernels => "exit_kernels",
            Self::JointLaplaceKilled => "joint_laplace_killed",
            Self::InjectionsKilled => "injections_killed",
            Self::RuinInfiniteHorizon => "ruin_infinite_horizon",
            Self::UpcrossInfiniteHorizon => "upcross_infinite_horizon",
            Self::UpcrossNoBailout => "upcross_no_bailout",
            Self::InjectionsBeforeAbsoluteRuin => "injections_before_absolute_ruin",
            Self::InjectionsBeforeUpcross => "injections_before_upcross",
            Self::InjectionsInfiniteHorizon => "injections_infinite_horizon",
            Self::ReflectedExitKernels => "reflected_exit_kernels",
            Self::ReflectedJointLaplace => "reflected_joint_laplace",
            Self::ReflectedDividendsKilled => "reflected_dividends_killed",
            Self::ReflectedDividendsInfinite => "reflected_dividends_infinite",
            Self::ReflectedInjectionsKilled => "reflected_injections_killed",
            Self::ReflectedInjectionsInfinite => "reflected_injections_infinite",
            Self::ObservationClockBlocks => "observation_clock_blocks",
            Self::ClassicalExitBlocks => "classical_exit_blocks",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// An evaluated identity with the kernels it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityValue {
    pub value: f64,
    pub source: Source,
    pub kernel_trace: BTreeMap<String, f64>,
}

impl IdentityValue {
    fn new(value: f64, source: Source, trace: Trace) -> Self {
        Self {
            value,
            source,
            kernel_trace: trace.0,
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Trace(BTreeMap<String, f64>);

impl Trace {
    fn put(&mut self, name: impl Into<String>, v: f64) -> f64 {
        self.0.insert(name.into(), v);
        v
    }
}

/// Every identity the evaluator can produce, by command-line name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Identity {
    KernelH,
    KernelI,
    KernelHDeriv,
    KernelIDeriv,
    G,
    H,
    F,
    RuinLaplace,
    UpcrossLaplace,
    UpcrossNoBailout,
    InjectionsI,
    InjectionsII,
    InjectionsIII,
    HHat,
    JHat,
    FHat,
    JHatLimit,
    FHatLimit,
    U1,
    U2,
    U3,
    U1Zero,
    U2Zero,
    U3Zero,
    U4Zero,
}

impl Identity {
    pub const ALL: [Identity; 25] = [
        Self::KernelH,
        Self::KernelI,
        Self::KernelHDeriv,
        Self::KernelIDeriv,
        Self::G,
        Self::H,
        Self::F,
        Self::RuinLaplace,
        Self::UpcrossLaplace,
        Self::UpcrossNoBailout,
        Self::InjectionsI,
        Self::InjectionsII,
        Self::InjectionsIII,
        Self::HHat,
        Self::JHat,
        Self::FHat,
        Self::JHatLimit,
        Self::FHatLimit,
        Self::U1,
        Self::U2,
        Self::U3,
        Self::U1Zero,
        Self::U2Zero,
        Self::U3Zero,
        Self::U4Zero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::KernelH => "kernel_H",
            Self::KernelI => "kernel_I",
            Self::KernelHDeriv => "kernel_H_deriv",
            Self::KernelIDeriv => "kernel_I_deriv",
            Self::G => "g",
            Self::H => "h",
            Self::F => "f",
            Self::RuinLaplace => "ruin_laplace",
            Self::UpcrossLaplace => "upcross_laplace",
            Self::UpcrossNoBailout => "upcross_no_bailout",
            Self::InjectionsI => "injections_i",
            Self::InjectionsII => "injections_ii",
            Self::InjectionsIII => "injections_iii",
            Self::HHat => "h_hat",
            Self::JHat => "j_hat",
            Self::FHat => "f_hat",
            Self::JHatLimit => "j_hat_limit",
            Self::FHatLimit => "f_hat_limit",
            Self::U1 => "u1",
            Self::U2 => "u2",
            Self::U3 => "u3",
            Self::U1Zero => "U1_0",
            Self::U2Zero => "U2_0",
            Self::U3Zero => "U3_0",
            Self::U4Zero => "U4_0",
        }
    }

    /// Values that are probabilities or Laplace transforms of a nonnegative
    /// variable, hence lie in `[0, 1]`.
    pub fn is_probability(self) -> bool {
        matches!(
            self,
            Self::G
                | Self::H
                | Self::RuinLaplace
                | Self::UpcrossLaplace
                | Self::UpcrossNoBailout
                | Self::HHat
                | Self::U2
                | Self::U3
        )
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|i| i.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|i| i.name()).collect();
                Error::Domain(format!("unknown identity `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Relative tolerance for the built-in dual-evaluation checks.
const DUAL_TOL: f64 = 1e-9;
/// Condition number times accuracy above which a value is refused.
const FAULT_LEVEL: f64 = 1e-6;

fn fault(identity: &'static str, detail: String) -> Error {
    Error::NumericalFault { identity, detail }
}

/// Compares a primary value with an independent evaluation whenever the
/// latter is accurate enough for a `DUAL_TOL` comparison to be meaningful.
fn dual_check(identity: &'static str, what: &str, primary: f64, other: Conditioned, acc: f64) -> Result<()> {
    if other.cond * acc > DUAL_TOL / 10.0 {
        return Ok(());
    }
    let gap = (primary - other.value).abs();
    if gap > DUAL_TOL * primary.abs().max(other.value.abs()) {
        return Err(fault(
            identity,
            format!("{what}: forms disagree, {primary:e} vs {:e} (gap {gap:e})", other.value),
        ));
    }
    Ok(())
}

/// Refuses a value whose expected absolute error `acc * sum |terms|`
/// exceeds `FAULT_LEVEL * max(|v|, 1)`.
fn guard(identity: &'static str, what: &str, v: Conditioned, acc: f64) -> Result<f64> {
    if acc * v.mass > FAULT_LEVEL * v.value.abs().max(1.0) {
        return Err(fault(
            identity,
            format!("{what}: cancellation leaves too few digits (condition number {:e})", v.cond),
        ));
    }
    Ok(v.value)
}

fn positive(identity: &'static str, what: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(fault(identity, format!("{what} = {v:e}, expected a positive finite value")))
    }
}

/// Evaluates identities for one model, discount rate `q` and observation rate `r`.
#[derive(Debug, Clone)]
pub struct Evaluator {
    q: f64,
    r: f64,
    cq: ScaleContext,
    cp: ScaleContext,
}

impl Evaluator {
    pub fn new(model: &LevyModel, q: f64, r: f64) -> Result<Self> {
        Self::check_rates(q, r)?;
        Ok(Self {
            q,
            r,
            cq: ScaleContext::new(model, q)?,
            cp: ScaleContext::new(model, q + r)?,
        })
    }

    pub fn with_backend(model: &LevyModel, q: f64, r: f64, kind: BackendKind) -> Result<Self> {
        Self::check_rates(q, r)?;
        Ok(Self {
            q,
            r,
            cq: ScaleContext::with_backend(model, q, kind)?,
            cp: ScaleContext::with_backend(model, q + r, kind)?,
        })
    }

    pub fn for_scenario(model: &LevyModel, s: &Scenario) -> Result<Self> {
        s.validate()?;
        Self::new(model, s.q, s.r)
    }

    fn check_rates(q: f64, r: f64) -> Result<()> {
        if !(q >= 0.0 && q.is_finite() && r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("need q >= 0 and r > 0, got q={q}, r={r}")));
        }
        Ok(())
    }

    pub fn model(&self) -> &LevyModel {
        self.cq.model()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Scale functions at rate `q`.
    pub fn ctx_q(&self) -> &ScaleContext {
        &self.cq
    }

    /// Scale functions at rate `q + r`.
    pub fn ctx_qr(&self) -> &ScaleContext {
        &self.cp
    }

    fn acc(&self) -> f64 {
        self.cq.accuracy().max(self.cp.accuracy())
    }

    pub fn kernels(&self, a: f64) -> Result<Kernels<'_>> {
        Kernels::new(&self.cq, &self.cp, a)
    }

    fn matches(&self, s: &Scenario) -> Result<()> {
        s.validate()?;
        if s.q != self.q || s.r != self.r {
            return Err(Error::Domain(format!(
                "scenario rates (q={}, r={}) differ from the evaluator's (q={}, r={})",
                s.q, s.r, self.q, self.r
            )));
        }
        Ok(())
    }

    /// Evaluates `identity`; the kernel identities are evaluated at `y = s.x`.
    pub fn evaluate(&self, identity: Identity, s: &Scenario) -> Result<IdentityValue> {
        match identity {
            Identity::KernelH => self.kernel_h(s, s.x),
            Identity::KernelI => self.kernel_i(s, s.x),
            Identity::KernelHDeriv => self.kernel_h_deriv(s, s.x),
            Identity::KernelIDeriv => self.kernel_i_deriv(s, s.x),
            Identity::G => Ok(self.two_sided_exit(s)?.0),
            Identity::H => Ok(self.two_sided_exit(s)?.1),
            Identity::F => self.injections_killed(s),
            Identity::RuinLaplace => self.ruin_infinite(s),
            Identity::UpcrossLaplace => Ok(self.upcross_infinite(s)?.0),
            Identity::UpcrossNoBailout => Ok(self.upcross_infinite(s)?.1),
            Identity::InjectionsI => self.injections_before_ruin(s),
            Identity::InjectionsII => self.injections_before_upcross(s),
            Identity::InjectionsIII => self.injections_infinite(s),
            Identity::HHat => self.reflected_ruin_laplace(s),
            Identity::JHat => self.reflected_dividends(s),
            Identity::FHat => self.reflected_injections(s),
            Identity::JHatLimit => self.reflected_dividends_infinite(s),
            Identity::FHatLimit => self.reflected_injections_infinite(s),
            Identity::U1 => Ok(self.building_blocks_u(s)?[0].clone()),
            Identity::U2 => Ok(self.building_blocks_u(s)?[1].clone()),
            Identity::U3 => Ok(self.building_blocks_u(s)?[2].clone()),
            Identity::U1Zero => Ok(self.building_blocks_u0(s)?[0].clone()),
            Identity::U2Zero => Ok(self.building_blocks_u0(s)?[1].clone()),
            Identity::U3Zero => Ok(self.building_blocks_u0(s)?[2].clone()),
            Identity::U4Zero => Ok(self.building_blocks_u0(s)?[3].clone()),
        }
    }

    /// `H^a(y, theta)`; at `theta = 0` the closed form is returned and checked
    /// against the integral definition.
    fn h_value(&self, k: &Kernels<'_>, y: f64, theta: f64, id: &'static str, tr: &mut Trace, tag: &str) -> Result<f64> {
        let integral = k.h_integral(y, theta)?;
        if theta == 0.0 {
            let closed = k.h_zero(y)?;
            tr.put(format!("H_integral({tag})"), integral.value);
            dual_check(id, "H^a at theta = 0", closed, integral, self.acc())?;
            return Ok(tr.put(format!("H({tag})"), closed));
        }
        let v = guard(id, "H^a", integral, self.acc())?;
        Ok(tr.put(format!("H({tag})"), v))
    }

    /// Right derivative of `H^a(., theta)`.
    fn h_deriv_value(&self, k: &Kernels<'_>, y: f64, theta: f64, id: &'static str, tr: &mut Trace, tag: &str) -> Result<f64> {
        let integral = k.h_deriv_integral(y, theta)?;
        if theta == 0.0 {
            let closed = k.h_deriv_zero(y)?;
            let alt = k.h_deriv_zero_alt(y)?;
            tr.put(format!("H'_integral({tag})"), integral.value);
            tr.put(format!("H'_alt({tag})"), alt.value);
            dual_check(id, "H^a' at theta = 0", closed, alt, self.acc())?;
            dual_check(id, "H^a' at theta = 0 against the integral form", closed, integral, self.acc())?;
            return Ok(tr.put(format!("H'({tag})"), closed));
        }
        let v = guard(id, "H^a'", integral, self.acc())?;
        Ok(tr.put(format!("H'({tag})"), v))
    }

    /// `h^a(y)`, both displayed forms cross-checked.
    fn small_h_value(&self, k: &Kernels<'_>, y: f64, id: &'static str, tr: &mut Trace, tag: &str) -> Result<f64> {
        let main = k.small_h(y)?;
        let alt = k.small_h_alt(y)?;
        tr.put(format!("h^a_alt({tag})"), alt.value);
        let v = guard(id, "h^a", main, self.acc())?;
        dual_check(id, "h^a", v, alt, self.acc())?;
        Ok(tr.put(format!("h^a({tag})"), v))
    }

    fn small_h_deriv_value(&self, k: &Kernels<'_>, y: f64, id: &'static str, tr: &mut Trace, tag: &str) -> Result<f64> {
        let v = guard(id, "h^a'", k.small_h_deriv(y)?, self.acc())?;
        Ok(tr.put(format!("h^a'({tag})"), v))
    }

    fn i_value(&self, k: &Kernels<'_>, y: f64, tr: &mut Trace, tag: &str) -> Result<f64> {
        Ok(tr.put(format!("I({tag})"), k.i(y)?))
    }

    fn i_deriv_value(&self, k: &Kernels<'_>, y: f64, tr: &mut Trace, tag: &str) -> Result<f64> {
        Ok(tr.put(format!("I'({tag})"), k.i_deriv(y)?))
    }

    /// `H^a(y, theta)`.
    pub fn kernel_h(&self, s: &Scenario, y: f64) -> Result<IdentityValue> {
        self.matches(s)?;
        let k = self.kernels(s.finite_a("kernel_H")?)?;
        let mut tr = Trace::default();
        let v = self.h_value(&k, y, s.theta, "kernel_H", &mut tr, "y")?;
        Ok(IdentityValue::new(v, Source::ExitKernels, tr))
    }

    /// `I^a(y)`.
    pub fn kernel_i(&self, s: &Scenario, y: f64) -> Result<IdentityValue> {
        self.matches(s)?;
        let k = self.kernels(s.finite_a("kernel_I")?)?;
        let mut tr = Trace::default();
        tr.put("W^a(y)", k.shifted().w(y)?);
        tr.put("Z^a(y)", k.shifted().z(y)?);
        let v = self.i_value(&k, y, &mut tr, "y")?;
        Ok(IdentityValue::new(v, Source::ExitKernels, tr))
    }

    /// Right derivative of `H^a(., theta)` at `y != a`.
    pub fn kernel_h_deriv(&self, s: &Scenario, y: f64) -> Result<IdentityValue> {
        self.matches(s)?;
        let k = self.kernels(s.finite_a("kernel_H_deriv")?)?;
        let mut tr = Trace::default();
        let v = self.h_deriv_value(&k, y, s.theta, "kernel_H_deriv", &mut tr, "y")?;
        Ok(IdentityValue::new(v, Source::ReflectedExitKernels, tr))
    }

    /// Right derivative of `I^a` at `y != a`.
    pub fn kernel_i_deriv(&self, s: &Scenario, y: f64) -> Result<IdentityValue> {
        self.matches(s)?;
        let k = self.kernels(s.finite_a("kernel_I_deriv")?)?;
        let mut tr = Trace::default();
        let v = self.i_deriv_value(&k, y, &mut tr, "y")?;
        if y >= k.a() {
            let direct = k.i_deriv_direct(y)?;
            tr.put("I'_direct(y)", direct);
        }
        Ok(IdentityValue::new(v, Source::ReflectedExitKernels, tr))
    }

    /// `(g, h)`: the Laplace transforms on `{tau_b^+(r) < tau_a^-(r)}` and on
    /// the complementary event.
    pub fn two_sided_exit(&self, s: &Scenario) -> Result<(IdentityValue, IdentityValue)> {
        const ID: &str = "two_sided_exit";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        let b = s.finite_b(ID)?;
        s.x_at_most_b(ID)?;
        let mut tr = Trace::default();
        let hb = positive(ID, "H^a(b, theta)", self.h_value(&k, b, s.theta, ID, &mut tr, "b")?)?;
        let hx = self.h_value(&k, s.x, s.theta, ID, &mut tr, "x")?;
        let ib = self.i_value(&k, b, &mut tr, "b")?;
        let ix = self.i_value(&k, s.x, &mut tr, "x")?;
        let g = hx / hb;
        let h = ix - g * ib;
        Ok((
            IdentityValue::new(g, Source::JointLaplaceKilled, tr.clone()),
            IdentityValue::new(h, Source::JointLaplaceKilled, tr),
        ))
    }

    /// `f(x, a, b)`: discounted injections until `tau_b^+(r) ^ tau_a^-(r)`.
    pub fn injections_killed(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "injections_killed";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        let b = s.finite_b(ID)?;
        s.x_at_most_b(ID)?;
        let mut tr = Trace::default();
        if s.x < k.a() {
            return Ok(IdentityValue::new(0.0, Source::InjectionsKilled, tr));
        }
        let hb = positive(ID, "H^a(b, 0)", self.h_value(&k, b, 0.0, ID, &mut tr, "b")?)?;
        let hx = self.h_value(&k, s.x, 0.0, ID, &mut tr, "x")?;
        let sb = self.small_h_value(&k, b, ID, &mut tr, "b")?;
        let sx = self.small_h_value(&k, s.x, ID, &mut tr, "x")?;
        let v = if s.x == b { 0.0 } else { hx / hb * sb - sx };
        Ok(IdentityValue::new(v, Source::InjectionsKilled, tr))
    }

    /// `h^(x, a, b)`: Laplace transform of absolute ruin with dividends paid at `b`.
    pub fn reflected_ruin_laplace(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "reflected_ruin_laplace";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        let b = s.finite_b(ID)?;
        s.x_at_most_b(ID)?;
        let mut tr = Trace::default();
        let hdb = positive(ID, "H^a'(b, theta)", self.h_deriv_value(&k, b, s.theta, ID, &mut tr, "b")?)?;
        let hx = self.h_value(&k, s.x, s.theta, ID, &mut tr, "x")?;
        let idb = self.i_deriv_value(&k, b, &mut tr, "b")?;
        let ix = self.i_value(&k, s.x, &mut tr, "x")?;
        Ok(IdentityValue::new(ix - hx / hdb * idb, Source::ReflectedJointLaplace, tr))
    }

    /// `j^(x, a, b)`: discounted dividends at barrier `b` until absolute ruin.
    pub fn reflected_dividends(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "reflected_dividends";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        let b = s.finite_b(ID)?;
        let mut tr = Trace::default();
        let hdb = positive(ID, "H^a'(b, 0)", self.h_deriv_value(&k, b, 0.0, ID, &mut tr, "b")?)?;
        let v = if s.x <= b {
            self.h_value(&k, s.x, 0.0, ID, &mut tr, "x")? / hdb
        } else {
            self.h_value(&k, b, 0.0, ID, &mut tr, "b")? / hdb + (s.x - b)
        };
        Ok(IdentityValue::new(v, Source::ReflectedDividendsKilled, tr))
    }

    /// `f^(x, a, b)`: discounted injections with dividends paid at `b`, until
    /// absolute ruin.
    pub fn reflected_injections(&self, s: &Scenario) -> Result<IdentityValue> {
        const ID: &str = "reflected_injections";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        let b = s.finite_b(ID)?;
        let x = s.x.min(b);
        let mut tr = Trace::default();
        let hdb = positive(ID, "H^a'(b, 0)", self.h_deriv_value(&k, b, 0.0, ID, &mut tr, "b")?)?;
        let sdb = self.small_h_deriv_value(&k, b, ID, &mut tr, "b")?;
        let hx = self.h_value(&k, x, 0.0, ID, &mut tr, "x")?;
        let sx = self.small_h_value(&k, x, ID, &mut tr, "x")?;
        Ok(IdentityValue::new(hx / hdb * sdb - sx, Source::ReflectedInjectionsKilled, tr))
    }

    /// `(u~_1, u~_2, u~_3)` at `x <= 0`: expectations for the unreflected
    /// process up to an independent exponential clock of rate `r`.
    pub fn building_blocks_u(&self, s: &Scenario) -> Result<[IdentityValue; 3]> {
        const ID: &str = "building_blocks_u";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        if s.x > 0.0 {
            return Err(Error::Precondition {
                identity: ID,
                branch: "x <= 0",
                reason: format!("the clock blocks are defined for x <= 0, got x = {}", s.x),
            });
        }
        let mut tr = Trace::default();
        let u1 = tr.put("u1", k.u1(s.x, s.theta)?);
        if s.theta == 0.0 && s.x >= k.a() {
            let closed = k.u1_zero(s.x)?;
            tr.put("u1_closed", closed.value);
            dual_check(ID, "u~_1 at theta = 0", u1, closed, self.acc())?;
        }
        let u2 = tr.put("u2", k.u2(s.x)?);
        let u3 = tr.put("u3", k.u3(s.x)?);
        let src = Source::ObservationClockBlocks;
        Ok([
            IdentityValue::new(u1, src, tr.clone()),
            IdentityValue::new(u2, src, tr.clone()),
            IdentityValue::new(u3, src, tr),
        ])
    }

    /// `(U_1^0, U_2^0, U_3^0, U_4^0)` at `x`.
    pub fn building_blocks_u0(&self, s: &Scenario) -> Result<[IdentityValue; 4]> {
        const ID: &str = "building_blocks_U0";
        self.matches(s)?;
        let k = self.kernels(s.finite_a(ID)?)?;
        let mut tr = Trace::default();
        let u1 = tr.put("U1_0", k.big_u1(s.x, s.theta)?);
        if s.theta == 0.0 {
            tr.put("U1_0_closed", k.big_u1_zero(s.x)?);
        }
        let u2 = tr.put("U2_0", k.big_u2(s.x)?);
        let u3 = tr.put("U3_0", k.big_u3(s.x)?);
        let u4 = tr.put("U4_0", k.big_u4(s.x)?.value);
        let src = Source::ClassicalExitBlocks;
        Ok([
            IdentityValue::new(u1, src, tr.clone()),
            IdentityValue::new(u2, src, tr.clone()),
            IdentityValue::new(u3, src, tr.clone()),
            IdentityValue::new(u4, src, tr),
        ])
    }
}
