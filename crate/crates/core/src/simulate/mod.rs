//! Monte Carlo oracle: path simulation of the reflected processes and
//! estimators of every path functional with an analytic counterpart.
//!
//! Requests that can be read off the same paths are grouped and share one
//! simulation. Paths run in chunks of fixed size on the rayon pool; chunk
//! statistics are merged in chunk order, so an estimate depends only on
//! `(seed, config, scenario)` and never on the number of workers.

mod engine;
mod rng;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::identities::{Identity, Scenario};
use crate::levy_model::LevyModel;
use engine::{Engine, Kind, Mark, Record, Setup};
use rng::PathRng;

pub use engine::{StopReason, TraceEvent, TraceKind};

/// Paths (or antithetic pairs) per work item.
const CHUNK: u64 = 1024;

/// Default horizon is `HORIZON_WEIGHT / q`, leaving a truncation weight
/// `e^{-qT}` of about 1e-7.
const HORIZON_WEIGHT: f64 = 16.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Target {
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
    U1,
    U2,
    U3,
}

impl Target {
    pub const ALL: [Target; 15] = [
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
        Self::U1,
        Self::U2,
        Self::U3,
    ];

    /// The identity this target estimates.
    pub fn identity(self) -> Identity {
        match self {
            Self::G => Identity::G,
            Self::H => Identity::H,
            Self::F => Identity::F,
            Self::RuinLaplace => Identity::RuinLaplace,
            Self::UpcrossLaplace => Identity::UpcrossLaplace,
            Self::UpcrossNoBailout => Identity::UpcrossNoBailout,
            Self::InjectionsI => Identity::InjectionsI,
            Self::InjectionsII => Identity::InjectionsII,
            Self::InjectionsIII => Identity::InjectionsIII,
            Self::HHat => Identity::HHat,
            Self::JHat => Identity::JHat,
            Self::FHat => Identity::FHat,
            Self::U1 => Identity::U1,
            Self::U2 => Identity::U2,
            Self::U3 => Identity::U3,
        }
    }

    pub fn from_identity(id: Identity) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.identity() == id)
    }

    pub fn name(self) -> &'static str {
        self.identity().name()
    }

    fn engine(self) -> Kind {
        match self {
            Self::HHat | Self::JHat | Self::FHat => Kind::Barrier,
            Self::UpcrossNoBailout | Self::U1 | Self::U2 | Self::U3 => Kind::Killed,
            _ => Kind::Free,
        }
    }

    /// The path mode whose trace shows this target's functional.
    pub fn mode(self) -> Mode {
        match self.engine() {
            Kind::Free => Mode::ParisianOnly,
            Kind::Barrier => Mode::ParisianPlusBarrier,
            Kind::Killed => Mode::KilledAtObservation,
        }
    }

    /// Whether the functional reads the passage below `a`.
    fn uses_lower(self) -> bool {
        !matches!(
            self,
            Self::UpcrossLaplace | Self::UpcrossNoBailout | Self::InjectionsII | Self::InjectionsIII
        )
    }

    /// Whether the functional reads the passage above its upper level.
    fn uses_upper(self) -> bool {
        matches!(
            self,
            Self::G | Self::H | Self::F | Self::UpcrossLaplace | Self::InjectionsII
        ) || self.engine() == Kind::Killed
    }

    /// Whether the functional needs the whole horizon.
    fn runs_to_horizon(self) -> bool {
        matches!(self, Self::InjectionsIII)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id: Identity = s.parse()?;
        Self::from_identity(id)
            .ok_or_else(|| Error::SimConfig(format!("`{s}` has no Monte Carlo estimator")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Euler step; required for unbounded-variation models, ignored otherwise.
    pub euler_step: Option<f64>,
    /// Time cap; defaults to `16.1 / q` when `q > 0`.
    pub horizon: Option<f64>,
    /// Pair paths `2i` and `2i + 1` with mirrored randomness.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            euler_step: None,
            horizon: None,
            antithetic: false,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.euler_step = Some(step);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    fn validate(&self, model: &LevyModel) -> Result<()> {
        let bad = |m: String| Err(Error::SimConfig(m));
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return bad(format!("antithetic sampling needs an even path count, got {}", self.n_paths));
        }
        if let Some(h) = self.euler_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("euler_step must be positive, got {h}"));
            }
        } else if !model.is_bounded_variation() {
            return bad("euler_step is required for unbounded-variation models".into());
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("horizon must be positive and finite, got {t}"));
            }
        }
        Ok(())
    }

    fn horizon_for(&self, q: f64) -> Result<f64> {
        match self.horizon {
            Some(t) => Ok(t),
            None if q > 0.0 => Ok(HORIZON_WEIGHT / q),
            None => Err(Error::SimConfig(
                "q = 0 needs an explicit horizon: without discounting the time cap cannot be derived".into(),
            )),
        }
    }

    fn step_for(&self, model: &LevyModel) -> Option<f64> {
        if model.is_bounded_variation() {
            None
        } else {
            self.euler_step
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Standard deviation of the sample units over the square root of their
    /// number; a unit is one path, or one antithetic pair.
    pub std_error: f64,
    /// Number of simulated paths.
    pub n: u64,
    pub bias_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Parisian reflection below 0; stops at the first exit from `[a, b)`.
    ParisianOnly,
    /// Parisian reflection below 0 and reflection at `b`; stops below `a`.
    ParisianPlusBarrier,
    /// No reflection; stops at the first observation below 0, at the first
    /// passage above 0, or below `a`.
    KilledAtObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathOutcome {
    pub stop_reason: StopReason,
    pub stop_time: f64,
    pub discounted_injections: f64,
    pub discounted_dividends: f64,
    pub injection_total_at_stop: f64,
    pub level_at_stop: f64,
    pub log: Vec<TraceEvent>,
}

/// One estimation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub target: Target,
    pub scenario: Scenario,
}

/// Checks that a request can be estimated under `cfg` without simulating.
pub fn check_request(model: &LevyModel, req: &Request, cfg: &SimConfig) -> Result<()> {
    cfg.validate(model)?;
    let s = &req.scenario;
    s.validate()?;
    let t = req.target;
    let bad = |m: &str| Err(Error::SimConfig(format!("{t}: {m}")));
    let needs_a = !matches!(
        t,
        Target::UpcrossLaplace | Target::UpcrossNoBailout | Target::InjectionsII | Target::InjectionsIII
    );
    let needs_b = matches!(
        t,
        Target::G
            | Target::H
            | Target::F
            | Target::UpcrossLaplace
            | Target::UpcrossNoBailout
            | Target::InjectionsII
            | Target::HHat
            | Target::JHat
            | Target::FHat
    );
    if needs_a && !s.a.is_finite() {
        return bad("needs a finite level a");
    }
    if needs_b && !s.b.is_finite() {
        return bad("needs a finite level b");
    }
    if matches!(t, Target::U1 | Target::U2 | Target::U3) && s.x > 0.0 {
        return bad("the clock blocks need x <= 0");
    }
    if t == Target::InjectionsIII && s.q == 0.0 {
        return bad("needs q > 0: without discounting the total injection is infinite");
    }
    cfg.horizon_for(s.q)?;
    Ok(())
}

/// Paths shared by several requests: same engine, start, rates and barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
struct GroupKey {
    kind: Kind,
    x: f64,
    q: f64,
    r: f64,
    /// Barrier for `Kind::Barrier`, upper level for `Kind::Killed`.
    level: f64,
}

impl GroupKey {
    fn of(req: &Request) -> Self {
        let s = &req.scenario;
        let kind = req.target.engine();
        let level = match (kind, req.target) {
            (Kind::Barrier, _) | (Kind::Killed, Target::UpcrossNoBailout) => s.b,
            (Kind::Killed, _) => 0.0,
            (Kind::Free, _) => f64::NAN,
        };
        Self {
            kind,
            x: s.x,
            q: s.q,
            r: s.r,
            level,
        }
    }

    fn same(&self, o: &Self) -> bool {
        self.kind == o.kind
            && self.x.to_bits() == o.x.to_bits()
            && self.q.to_bits() == o.q.to_bits()
            && self.r.to_bits() == o.r.to_bits()
            && self.level.to_bits() == o.level.to_bits()
    }
}

/// A request resolved to level indices of its group.
struct Slot {
    target: Target,
    scenario: Scenario,
    lower: Option<usize>,
    upper: Option<usize>,
}

fn index_of(levels: &[f64], v: f64) -> Option<usize> {
    levels.iter().position(|l| l.to_bits() == v.to_bits())
}

struct Group<'m> {
    setup: Setup<'m>,
    slots: Vec<(usize, Slot)>,
}

impl Slot {
    fn hit(m: Option<&Option<Mark>>) -> Option<Mark> {
        m.copied().flatten()
    }

    fn lower_mark(&self, rec: &Record) -> Option<Mark> {
        self.lower.and_then(|i| Self::hit(rec.lower.get(i)))
    }

    fn upper_mark(&self, rec: &Record) -> Option<Mark> {
        self.upper.and_then(|j| Self::hit(rec.upper.get(j)))
    }

    /// Whether the functional is determined by the record so far.
    fn done(&self, rec: &Record) -> bool {
        if self.target.runs_to_horizon() {
            return false;
        }
        let lo = self.lower.is_none() || self.lower_mark(rec).is_some();
        match self.target.engine() {
            Kind::Killed => true,
            _ => match (self.lower, self.upper) {
                (Some(_), Some(_)) => self.lower_mark(rec).is_some() || self.upper_mark(rec).is_some(),
                (None, Some(_)) => self.upper_mark(rec).is_some(),
                _ => lo,
            },
        }
    }

    /// First of the two exits, with the upper one winning ties.
    fn exit(&self, rec: &Record) -> (Option<Mark>, Option<Mark>) {
        match (self.upper_mark(rec), self.lower_mark(rec)) {
            (Some(u), Some(l)) if u.time <= l.time => (Some(u), None),
            (Some(_), Some(l)) => (None, Some(l)),
            other => other,
        }
    }

    fn value(&self, rec: &Record) -> f64 {
        let s = &self.scenario;
        let laplace = |m: Mark| (-s.q * m.time - s.theta * m.injected).exp();
        let discount = |m: Mark| (-s.q * m.time).exp();
        let injected_until = |m: Option<Mark>| m.unwrap_or(rec.end).disc_injections;
        match self.target {
            Target::G => self.exit(rec).0.map_or(0.0, laplace),
            Target::H => self.exit(rec).1.map_or(0.0, laplace),
            Target::F => {
                let (u, l) = self.exit(rec);
                injected_until(u.or(l))
            }
            Target::RuinLaplace | Target::HHat => self.lower_mark(rec).map_or(0.0, laplace),
            Target::UpcrossLaplace => self.upper_mark(rec).map_or(0.0, laplace),
            Target::InjectionsI | Target::FHat => injected_until(self.lower_mark(rec)),
            Target::InjectionsII => injected_until(self.upper_mark(rec)),
            Target::InjectionsIII => rec.end.disc_injections,
            Target::JHat => self.lower_mark(rec).unwrap_or(rec.end).disc_dividends,
            Target::UpcrossNoBailout | Target::U2 => self.upper_mark(rec).map_or(0.0, discount),
            Target::U3 => self.lower_mark(rec).map_or(0.0, discount),
            Target::U1 => {
                if rec.reason == StopReason::ObservationClock {
                    (-s.q * rec.end.time + s.theta * rec.end.level).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

fn build_groups<'m>(model: &'m LevyModel, reqs: &[Request], cfg: &SimConfig) -> Result<Vec<Group<'m>>> {
    let mut keys: Vec<(GroupKey, Vec<usize>)> = Vec::new();
    for (i, req) in reqs.iter().enumerate() {
        check_request(model, req, cfg)?;
        let key = GroupKey::of(req);
        match keys.iter_mut().find(|(k, _)| k.same(&key)) {
            Some((_, members)) => members.push(i),
            None => keys.push((key, vec![i])),
        }
    }
    let mut groups = Vec::new();
    for (key, members) in keys {
        let mut lower: Vec<f64> = Vec::new();
        let mut upper: Vec<f64> = Vec::new();
        for &i in &members {
            let s = &reqs[i].scenario;
            let t = reqs[i].target;
            if s.a.is_finite() && t.uses_lower() {
                lower.push(s.a);
            }
            match key.kind {
                Kind::Free if t.uses_upper() => upper.push(s.b),
                Kind::Killed => upper.push(key.level),
                _ => {}
            }
        }
        lower.sort_by(|a, b| b.total_cmp(a));
        lower.dedup_by(|a, b| a.to_bits() == b.to_bits());
        upper.sort_by(f64::total_cmp);
        upper.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let horizon = cfg.horizon_for(key.q)?;
        let slots = members
            .iter()
            .map(|&i| {
                let req = &reqs[i];
                let s = req.scenario;
                let t = req.target;
                let lower_idx = if t.uses_lower() { index_of(&lower, s.a) } else { None };
                let upper_idx = match key.kind {
                    Kind::Killed => index_of(&upper, key.level),
                    _ if t.uses_upper() => index_of(&upper, s.b),
                    _ => None,
                };
                (
                    i,
                    Slot {
                        target: t,
                        scenario: s,
                        lower: lower_idx,
                        upper: upper_idx,
                    },
                )
            })
            .collect();
        groups.push(Group {
            setup: Setup {
                model,
                kind: key.kind,
                x: key.x,
                q: key.q,
                r: key.r,
                lower,
                upper,
                barrier: if key.kind == Kind::Barrier { key.level } else { f64::INFINITY },
                horizon,
                step: cfg.step_for(model),
                trace: false,
            },
            slots,
        });
    }
    Ok(groups)
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        (var / self.n as f64).sqrt()
    }
}

fn run_group(group: &Group<'_>, cfg: &SimConfig) -> Vec<Moments> {
    let per_unit = if cfg.antithetic { 2 } else { 1 };
    let units = cfg.n_paths / per_unit;
    let chunks = units.div_ceil(CHUNK);
    let done = |rec: &Record| group.slots.iter().all(|(_, s)| s.done(rec));
    let partial: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut engine = Engine::new(&group.setup);
            let mut stats = vec![Moments::default(); group.slots.len()];
            let mut acc = vec![0.0; group.slots.len()];
            for unit in c * CHUNK..((c + 1) * CHUNK).min(units) {
                acc.iter_mut().for_each(|v| *v = 0.0);
                for p in 0..per_unit {
                    let path = unit * per_unit + p;
                    let rec = engine.run(&PathRng::new(cfg.seed, path, cfg.antithetic), &done);
                    for (v, (_, slot)) in acc.iter_mut().zip(&group.slots) {
                        *v += slot.value(&rec);
                    }
                }
                for (m, v) in stats.iter_mut().zip(&acc) {
                    m.push(v / per_unit as f64);
                }
            }
            stats
        })
        .collect();
    let mut total = vec![Moments::default(); group.slots.len()];
    for chunk in &partial {
        for (t, m) in total.iter_mut().zip(chunk) {
            t.merge(m);
        }
    }
    total
}

fn bias_note(model: &LevyModel, setup: &Setup<'_>, target: Target, cfg: &SimConfig) -> String {
    let mut parts = Vec::new();
    let weight = (-setup.q * setup.horizon).exp();
    if target.runs_to_horizon() {
        parts.push(format!(
            "horizon T={} truncates the tail by the factor e^(-qT)={weight:.3e}",
            setup.horizon
        ));
    } else {
        parts.push(format!(
            "horizon T={}: paths not stopped by T contribute their value at T; discount weight beyond T e^(-qT)={weight:.3e}",
            setup.horizon
        ));
    }
    match setup.step {
        Some(h) => parts.push(format!(
            "Euler step {h} on a dyadic grid per inter-event interval with Brownian-bridge crossing and maximum corrections"
        )),
        None => {
            if cfg.euler_step.is_some() && model.is_bounded_variation() {
                parts.push("bounded variation: exact simulation, euler_step ignored".into());
            } else {
                parts.push("bounded variation: exact simulation".into());
            }
        }
    }
    if cfg.antithetic {
        parts.push("antithetic pairs are the sample units".into());
    }
    parts.join("; ")
}

/// Estimates several targets, simulating each group of compatible requests
/// on one set of paths. Results follow the order of `reqs`.
pub fn estimate_many(model: &LevyModel, reqs: &[Request], cfg: &SimConfig) -> Result<Vec<MCEstimate>> {
    cfg.validate(model)?;
    if reqs.is_empty() {
        return Err(Error::SimConfig("no estimation requests".into()));
    }
    let groups = build_groups(model, reqs, cfg)?;
    let mut out: Vec<Option<MCEstimate>> = vec![None; reqs.len()];
    for group in &groups {
        let stats = run_group(group, cfg);
        for ((i, slot), m) in group.slots.iter().zip(stats) {
            out[*i] = Some(MCEstimate {
                mean: m.mean,
                std_error: m.std_error(),
                n: cfg.n_paths,
                bias_note: bias_note(model, &group.setup, slot.target, cfg),
            });
        }
    }
    Ok(out.into_iter().map(|e| e.expect("every request belongs to a group")).collect())
}

pub fn estimate(model: &LevyModel, target: Target, scenario: &Scenario, cfg: &SimConfig) -> Result<MCEstimate> {
    let req = Request {
        target,
        scenario: *scenario,
    };
    Ok(estimate_many(model, &[req], cfg)?.remove(0))
}

/// Simulates one path with its full event trace.
pub fn simulate_path(
    model: &LevyModel,
    scenario: &Scenario,
    mode: Mode,
    cfg: &SimConfig,
    path_index: u64,
) -> Result<PathOutcome> {
    cfg.validate(model)?;
    scenario.validate()?;
    let s = scenario;
    let finite = |v: f64| if v.is_finite() { vec![v] } else { vec![] };
    let (kind, lower, upper, barrier) = match mode {
        Mode::ParisianOnly => (Kind::Free, finite(s.a), finite(s.b), f64::INFINITY),
        Mode::ParisianPlusBarrier => {
            if !s.b.is_finite() {
                return Err(Error::SimConfig("barrier mode needs a finite b".into()));
            }
            (Kind::Barrier, finite(s.a), vec![], s.b)
        }
        Mode::KilledAtObservation => {
            if s.x > 0.0 {
                return Err(Error::SimConfig("killed mode starts at x <= 0".into()));
            }
            (Kind::Killed, finite(s.a), vec![0.0], f64::INFINITY)
        }
    };
    let setup = Setup {
        model,
        kind,
        x: s.x,
        q: s.q,
        r: s.r,
        lower,
        upper,
        barrier,
        horizon: cfg.horizon_for(s.q)?,
        step: cfg.step_for(model),
        trace: true,
    };
    let any = |rec: &Record| {
        rec.lower.iter().any(Option::is_some) || rec.upper.iter().any(Option::is_some)
    };
    let rec = Engine::new(&setup).run(&PathRng::new(cfg.seed, path_index, cfg.antithetic), &any);
    Ok(PathOutcome {
        stop_reason: rec.reason,
        stop_time: rec.end.time,
        discounted_injections: rec.end.disc_injections,
        discounted_dividends: rec.end.disc_dividends,
        injection_total_at_stop: rec.end.injected,
        level_at_stop: rec.end.level,
        log: rec.log,
    })
}
