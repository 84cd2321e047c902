//! Event-driven path engine.
//!
//! Jumps and observations arrive on one merged Poisson clock. Between events
//! a bounded-variation path moves linearly with slope `c` and is resolved
//! exactly; an unbounded-variation path is built on a dyadic grid of the
//! inter-event interval by midpoint refinement, so halving the step refines
//! the same Brownian path. Grid crossings of a level are completed with the
//! Brownian-bridge crossing probability, and reflection at a barrier uses the
//! exact bridge maximum over each grid step.

use std::fmt;

use serde::Serialize;

use super::rng::{PathRng, Stream};
use crate::levy_model::{JumpComponent, LevyModel, MagnitudeLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    UpcrossB,
    AbsoluteRuinA,
    HorizonCap,
    /// Killed at an observation time with a negative level.
    ObservationClock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    Jump,
    Observe,
    Inject,
    HitB,
    HitA,
    BarrierEnter,
    BarrierExit,
    Euler,
}

impl TraceKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Jump => "JUMP",
            Self::Observe => "OBSERVE",
            Self::Inject => "INJECT",
            Self::HitB => "HIT_B",
            Self::HitA => "HIT_A",
            Self::BarrierEnter => "BARRIER_ENTER",
            Self::BarrierExit => "BARRIER_EXIT",
            Self::Euler => "EULER",
        }
    }
}

/// One line of an event trace: `time kind level detail`. The detail always
/// carries the free path `X`, the injections `R` and the dividends `L`, so
/// `level = X + R - L` can be checked line by line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub level: f64,
    pub free: f64,
    pub injected: f64,
    pub dividends: f64,
    pub note: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} X={} R={} L={}",
            self.time,
            self.kind.label(),
            self.level,
            self.free,
            self.injected,
            self.dividends
        )?;
        if !self.note.is_empty() {
            write!(f, " {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    /// Parisian reflection below 0, nothing above; records first passages.
    Free,
    /// Parisian reflection below 0 and classical reflection at `barrier`.
    Barrier,
    /// No reflection; killed at the first observation with a negative level.
    Killed,
}

/// State of the path at a recorded instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Mark {
    pub time: f64,
    pub level: f64,
    pub injected: f64,
    pub disc_injections: f64,
    pub disc_dividends: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Record {
    /// First time below each lower level.
    pub lower: Vec<Option<Mark>>,
    /// First time at or above each upper level.
    pub upper: Vec<Option<Mark>>,
    pub end: Mark,
    pub reason: StopReason,
    pub log: Vec<TraceEvent>,
}

pub(crate) struct Setup<'m> {
    pub model: &'m LevyModel,
    pub kind: Kind,
    pub x: f64,
    pub q: f64,
    pub r: f64,
    /// Sorted decreasing: the first one met from above comes first.
    pub lower: Vec<f64>,
    /// Sorted increasing.
    pub upper: Vec<f64>,
    pub barrier: f64,
    pub horizon: f64,
    pub step: Option<f64>,
    pub trace: bool,
}

struct State {
    t: f64,
    level: f64,
    free: f64,
    injected: f64,
    disc_inj: f64,
    dividends: f64,
    disc_div: f64,
}

impl State {
    fn mark(&self) -> Mark {
        Mark {
            time: self.t,
            level: self.level,
            injected: self.injected,
            disc_injections: self.disc_inj,
            disc_dividends: self.disc_div,
        }
    }
}

fn sample_jump(comps: &[JumpComponent], total: f64, s: &mut Stream) -> f64 {
    let mut pick = s.uniform() * total;
    let mut law = comps[comps.len() - 1].law;
    for c in comps {
        if pick < c.rate {
            law = c.law;
            break;
        }
        pick -= c.rate;
    }
    match law {
        MagnitudeLaw::Exponential { mean } => -mean * s.uniform().ln(),
        MagnitudeLaw::Erlang { shape, mean } => {
            let mut prod = 1.0;
            for _ in 0..shape {
                prod *= s.uniform();
            }
            -(mean / shape as f64) * prod.ln()
        }
        MagnitudeLaw::Deterministic { size } => size,
        MagnitudeLaw::Uniform { lo, hi } => lo + (hi - lo) * s.uniform(),
    }
}

pub(crate) struct Engine<'s, 'm> {
    setup: &'s Setup<'m>,
    c: f64,
    sigma: f64,
    lambda: f64,
    /// Grid of Brownian values, reused across intervals.
    grid: Vec<f64>,
}

enum Flow {
    Continue,
    Stop,
}

impl<'s, 'm> Engine<'s, 'm> {
    pub fn new(setup: &'s Setup<'m>) -> Self {
        Self {
            setup,
            c: setup.model.effective_drift(),
            sigma: setup.model.sigma(),
            lambda: setup.model.total_jump_rate(),
            grid: Vec::new(),
        }
    }

    fn log(&self, rec: &mut Record, st: &State, kind: TraceKind, note: String) {
        if self.setup.trace {
            rec.log.push(TraceEvent {
                time: st.t,
                kind,
                level: st.level,
                free: st.free,
                injected: st.injected,
                dividends: st.dividends,
                note,
            });
        }
    }

    fn discount(&self, t: f64) -> f64 {
        (-self.setup.q * t).exp()
    }

    /// Records lower crossings at the current state; returns whether to stop.
    fn check_lower(&self, rec: &mut Record, st: &State, done: &dyn Fn(&Record) -> bool) -> Flow {
        let mut hit = false;
        for (i, &a) in self.setup.lower.iter().enumerate() {
            if rec.lower[i].is_none() && st.level < a {
                rec.lower[i] = Some(st.mark());
                hit = true;
            }
        }
        if hit {
            self.log(rec, st, TraceKind::HitA, String::new());
            rec.reason = StopReason::AbsoluteRuinA;
            if done(rec) {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }

    fn check_upper(&self, rec: &mut Record, st: &State, done: &dyn Fn(&Record) -> bool) -> Flow {
        let mut hit = false;
        for (j, &b) in self.setup.upper.iter().enumerate() {
            if rec.upper[j].is_none() && st.level >= b {
                rec.upper[j] = Some(Mark { level: b, ..st.mark() });
                hit = true;
            }
        }
        if hit {
            self.log(rec, st, TraceKind::HitB, String::new());
            rec.reason = StopReason::UpcrossB;
            if done(rec) {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }

    pub fn run(&mut self, rng: &PathRng, done: &dyn Fn(&Record) -> bool) -> Record {
        let s = self.setup;
        let mut rec = Record {
            lower: vec![None; s.lower.len()],
            upper: vec![None; s.upper.len()],
            end: Mark::default(),
            reason: StopReason::HorizonCap,
            log: Vec::new(),
        };
        let mut st = State {
            t: 0.0,
            level: s.x,
            free: s.x,
            injected: 0.0,
            disc_inj: 0.0,
            dividends: 0.0,
            disc_div: 0.0,
        };
        if s.kind == Kind::Barrier && st.level > s.barrier {
            let over = st.level - s.barrier;
            st.level = s.barrier;
            st.dividends += over;
            st.disc_div += over;
            self.log(&mut rec, &st, TraceKind::BarrierEnter, format!("overshoot={over}"));
        }
        let stopped = matches!(self.check_lower(&mut rec, &st, done), Flow::Stop)
            || matches!(self.check_upper(&mut rec, &st, done), Flow::Stop);
        if !stopped {
            self.events(&mut rec, &mut st, rng, done);
        }
        rec.end = st.mark();
        rec
    }

    fn events(&mut self, rec: &mut Record, st: &mut State, rng: &PathRng, done: &dyn Fn(&Record) -> bool) {
        let s = self.setup;
        let rate = self.lambda + s.r;
        let mut ev = rng.events();
        let mut k = 0u64;
        loop {
            let dt = if rate > 0.0 { ev.exponential(rate) } else { f64::INFINITY };
            let t_event = st.t + dt;
            let t_end = t_event.min(s.horizon);
            if let Flow::Stop = self.motion(rec, st, t_end, k, rng, done) {
                return;
            }
            if t_event >= s.horizon {
                st.t = s.horizon;
                rec.reason = StopReason::HorizonCap;
                return;
            }
            let u = ev.uniform() * rate;
            if u < s.r {
                self.log(rec, st, TraceKind::Observe, String::new());
                if st.level < 0.0 {
                    if s.kind == Kind::Killed {
                        rec.reason = StopReason::ObservationClock;
                        return;
                    }
                    let amount = -st.level;
                    st.injected += amount;
                    st.disc_inj += self.discount(st.t) * amount;
                    st.level = 0.0;
                    self.log(rec, st, TraceKind::Inject, format!("amount={amount}"));
                }
            } else {
                let size = sample_jump(s.model.jumps(), self.lambda, &mut ev);
                let was_at_barrier = s.kind == Kind::Barrier && st.level >= s.barrier;
                st.level -= size;
                st.free -= size;
                self.log(rec, st, TraceKind::Jump, format!("size={size}"));
                if was_at_barrier {
                    self.log(rec, st, TraceKind::BarrierExit, String::new());
                }
                if let Flow::Stop = self.check_lower(rec, st, done) {
                    return;
                }
            }
            k += 1;
        }
    }

    /// Moves the path from `st.t` to `t_end` without events.
    fn motion(
        &mut self,
        rec: &mut Record,
        st: &mut State,
        t_end: f64,
        k: u64,
        rng: &PathRng,
        done: &dyn Fn(&Record) -> bool,
    ) -> Flow {
        let dur = t_end - st.t;
        if dur <= 0.0 {
            return Flow::Continue;
        }
        if self.sigma == 0.0 {
            self.linear(rec, st, t_end, done)
        } else {
            self.diffusive(rec, st, t_end, k, rng, done)
        }
    }

    fn linear(&mut self, rec: &mut Record, st: &mut State, t_end: f64, done: &dyn Fn(&Record) -> bool) -> Flow {
        let s = self.setup;
        let c = self.c;
        let dur = t_end - st.t;
        let t0 = st.t;
        let y0 = st.level;
        match s.kind {
            Kind::Barrier => {
                let b = s.barrier;
                if y0 + c * dur > b {
                    let wait = ((b - y0) / c).max(0.0);
                    let enter = t0 + wait;
                    if y0 < b {
                        st.t = enter;
                        st.free += b - y0;
                        st.level = b;
                        self.log(rec, st, TraceKind::BarrierEnter, String::new());
                    }
                    let paid = c * (dur - wait);
                    st.dividends += paid;
                    st.disc_div += if s.q > 0.0 {
                        c * (self.discount(enter) - self.discount(t_end)) / s.q
                    } else {
                        paid
                    };
                    st.free += paid;
                    st.t = t_end;
                    return Flow::Continue;
                }
            }
            Kind::Free | Kind::Killed => {
                for j in 0..s.upper.len() {
                    let b = s.upper[j];
                    if rec.upper[j].is_none() && y0 < b && y0 + c * dur >= b {
                        st.t = t0 + (b - y0) / c;
                        st.free += b - st.level;
                        st.level = b;
                        if let Flow::Stop = self.check_upper(rec, st, done) {
                            return Flow::Stop;
                        }
                    }
                }
                let moved = y0 + c * dur - st.level;
                st.level += moved;
                st.free += moved;
                st.t = t_end;
                return Flow::Continue;
            }
        }
        st.level += c * dur;
        st.free += c * dur;
        st.t = t_end;
        Flow::Continue
    }

    /// Fills `grid` with a Brownian path on `2^m + 1` nodes over `[0, dur]`
    /// by midpoint refinement: endpoint first, then each dyadic level.
    fn brownian_grid(&mut self, dur: f64, m: u32, normals: &mut Stream) {
        let n = 1usize << m;
        self.grid.clear();
        self.grid.resize(n + 1, 0.0);
        self.grid[n] = dur.sqrt() * normals.normal();
        let mut span = n;
        while span > 1 {
            let half = span / 2;
            let sd = (0.25 * dur * span as f64 / n as f64).sqrt();
            let mut left = 0;
            while left < n {
                let right = left + span;
                self.grid[left + half] = 0.5 * (self.grid[left] + self.grid[right]) + sd * normals.normal();
                left = right;
            }
            span = half;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn diffusive(
        &mut self,
        rec: &mut Record,
        st: &mut State,
        t_end: f64,
        k: u64,
        rng: &PathRng,
        done: &dyn Fn(&Record) -> bool,
    ) -> Flow {
        let s = self.setup;
        let h = s.step.expect("step checked at setup");
        let dur = t_end - st.t;
        let m = (dur / h).log2().ceil().max(0.0) as u32;
        let n = 1usize << m;
        let dt = dur / n as f64;
        let var = self.sigma * self.sigma * dt;
        let mut normals = rng.interval_normals(k);
        let mut unif = rng.interval_uniforms(k);
        self.brownian_grid(dur, m, &mut normals);
        let t0 = st.t;
        let paid_before = st.dividends;
        for i in 0..n {
            let y0 = st.level;
            let inc = self.c * dt + self.sigma * (self.grid[i + 1] - self.grid[i]);
            let mut y1 = y0 + inc;
            st.free += inc;
            st.t = t0 + (i + 1) as f64 * dt;
            match s.kind {
                Kind::Barrier => {
                    let b = s.barrier;
                    let d = y1 - y0;
                    let top = 0.5 * (y0 + y1 + (d * d - 2.0 * var * unif.uniform().ln()).sqrt());
                    if top > b {
                        let push = top - b;
                        y1 -= push;
                        st.dividends += push;
                        st.disc_div += self.discount(st.t) * push;
                    }
                }
                Kind::Free | Kind::Killed => {
                    let mut crossed = false;
                    for j in 0..s.upper.len() {
                        let b = s.upper[j];
                        if rec.upper[j].is_some() {
                            continue;
                        }
                        let hit = y1 >= b || (-2.0 * (b - y0) * (b - y1) / var).exp() > unif.uniform();
                        if hit {
                            st.level = y1;
                            rec.upper[j] = Some(Mark { level: b, ..st.mark() });
                            crossed = true;
                        }
                    }
                    if crossed {
                        self.log(rec, st, TraceKind::HitB, String::new());
                        rec.reason = StopReason::UpcrossB;
                        if done(rec) {
                            return Flow::Stop;
                        }
                    }
                }
            }
            let mut crossed = false;
            for j in 0..s.lower.len() {
                let a = s.lower[j];
                if rec.lower[j].is_some() {
                    continue;
                }
                let hit = y1 < a || (-2.0 * (y0 - a) * (y1 - a) / var).exp() > unif.uniform();
                if hit {
                    st.level = y1;
                    rec.lower[j] = Some(st.mark());
                    crossed = true;
                }
            }
            st.level = y1;
            if crossed {
                self.log(rec, st, TraceKind::HitA, String::new());
                rec.reason = StopReason::AbsoluteRuinA;
                if done(rec) {
                    return Flow::Stop;
                }
            }
        }
        if s.trace {
            let note = format!("steps={n} dt={dt} paid={}", st.dividends - paid_before);
            self.log(rec, st, TraceKind::Euler, note);
        }
        Flow::Continue
    }
}
