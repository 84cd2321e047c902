//! Delay-equation backend for jump laws without a rational transform.
//!
//! `W_q` solves, on `(0, inf)`,
//! `sigma^2/2 W'' + c W' - (q + lambda) W + sum_k rate_k E[W(x - J_k)] = 0`
//! with `W(0) = 0, W'(0) = 2/sigma^2` (or `c W' = ...` with `W(0) = 1/c` when
//! `sigma = 0`). The scaled function `V(x) = e^{-Phi_q x} W_q(x)` stays bounded
//! and is integrated with classical RK4. Expectations over exponential and
//! Erlang magnitudes become auxiliary linear states, deterministic and uniform
//! magnitudes become lookups into the stored history (uniform ones through the
//! running integral of `W`). Steps land on every sum of at most three jump-size
//! breakpoints, where the history has kinks, and history values between nodes
//! come from cubic Hermite interpolation.

use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::levy_model::{LevyModel, MagnitudeLaw};

const BASE_STEP: f64 = 1.0 / 1024.0;
const MAX_NODES: usize = 1 << 21;
const BREAK_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Term {
    /// Last state of an Erlang chain starting at `first` with `len` stages.
    Chain { rate: f64, first: usize, len: usize, stage_rate: f64 },
    Delay { rate: f64, size: f64 },
    Spread { rate: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Debug, Default)]
struct Grid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    dl: Vec<f64>,
    dr: Vec<f64>,
    breaks: Vec<f64>,
    break_limit: f64,
}

#[derive(Debug)]
pub(crate) struct DelayOde {
    sigma: f64,
    drift: f64,
    q: f64,
    lambda: f64,
    phi: f64,
    terms: Vec<Term>,
    /// index of the running integral state, if any uniform law is present
    bar: Option<usize>,
    dim: usize,
    step: f64,
    base_breaks: Vec<f64>,
    grid: RwLock<Grid>,
}

impl Clone for DelayOde {
    fn clone(&self) -> Self {
        let mut fresh = Self::assemble(
            self.sigma,
            self.drift,
            self.q,
            self.lambda,
            self.phi,
            self.terms.clone(),
            self.bar,
            self.dim,
            self.step,
            self.base_breaks.clone(),
        );
        fresh.init();
        fresh
    }
}

impl DelayOde {
    pub fn new(model: &LevyModel, q: f64, phi: f64) -> Self {
        let unbounded = model.sigma() > 0.0;
        let mut dim = if unbounded { 2 } else { 1 };
        let mut terms = Vec::new();
        let mut bar = None;
        let mut base_breaks = Vec::new();
        let mut min_size = f64::INFINITY;
        for j in model.jumps() {
            match j.law {
                MagnitudeLaw::Exponential { mean } => {
                    terms.push(Term::Chain {
                        rate: j.rate,
                        first: dim,
                        len: 1,
                        stage_rate: 1.0 / mean,
                    });
                    dim += 1;
                }
                MagnitudeLaw::Erlang { shape, mean } => {
                    terms.push(Term::Chain {
                        rate: j.rate,
                        first: dim,
                        len: shape as usize,
                        stage_rate: shape as f64 / mean,
                    });
                    dim += shape as usize;
                }
                MagnitudeLaw::Deterministic { size } => {
                    terms.push(Term::Delay { rate: j.rate, size });
                    base_breaks.push(size);
                    min_size = min_size.min(size);
                }
                MagnitudeLaw::Uniform { lo, hi } => {
                    if bar.is_none() {
                        bar = Some(dim);
                        dim += 1;
                    }
                    terms.push(Term::Spread { rate: j.rate, lo, hi });
                    base_breaks.push(lo);
                    base_breaks.push(hi);
                    min_size = min_size.min(lo);
                }
            }
        }
        // delayed lookups must land on stored nodes' span
        let step = BASE_STEP.min(0.5 * min_size);
        let mut s = Self::assemble(
            model.sigma(),
            model.effective_drift(),
            q,
            model.total_jump_rate(),
            phi,
            terms,
            bar,
            dim,
            step,
            base_breaks,
        );
        s.init();
        s
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        sigma: f64,
        drift: f64,
        q: f64,
        lambda: f64,
        phi: f64,
        terms: Vec<Term>,
        bar: Option<usize>,
        dim: usize,
        step: f64,
        base_breaks: Vec<f64>,
    ) -> Self {
        Self {
            sigma,
            drift,
            q,
            lambda,
            phi,
            terms,
            bar,
            dim,
            step,
            base_breaks,
            grid: RwLock::new(Grid::default()),
        }
    }

    fn init(&mut self) {
        let mut y0 = vec![0.0; self.dim];
        if self.sigma > 0.0 {
            y0[1] = 2.0 / (self.sigma * self.sigma);
        } else {
            y0[0] = 1.0 / self.drift;
        }
        // every delayed lookup at the origin points below zero
        let mut d0 = vec![0.0; self.dim];
        self.rhs_with(&Grid::default(), 0.0, &y0, Side::Right, &mut d0);
        let g = self.grid.get_mut().expect("grid lock");
        g.xs.push(0.0);
        g.ys.extend_from_slice(&y0);
        g.dl.extend_from_slice(&d0);
        g.dr.extend_from_slice(&d0);
    }

    fn refresh_breaks(&self, g: &mut Grid, upto: f64) {
        if upto <= g.break_limit {
            return;
        }
        let limit = upto.max(2.0 * g.break_limit);
        let mut pts = vec![0.0];
        for _ in 0..BREAK_ORDER {
            let mut next = pts.clone();
            for &p in &pts {
                for &b in &self.base_breaks {
                    if p + b <= limit {
                        next.push(p + b);
                    }
                }
            }
            next.sort_by(f64::total_cmp);
            next.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            pts = next;
        }
        pts.retain(|&p| p > 0.0);
        g.breaks = pts;
        g.break_limit = limit;
    }

    /// History value of state `idx` at `y` (zero below the origin).
    fn history(&self, g: &Grid, idx: usize, y: f64, side: Side) -> f64 {
        if y < 0.0 || (y == 0.0 && side == Side::Left) {
            return 0.0;
        }
        let d = self.dim;
        let n = g.xs.len();
        let i = g.xs.partition_point(|&t| t <= y);
        if i == 0 {
            return 0.0;
        }
        let i = i - 1;
        if g.xs[i] == y || i + 1 >= n {
            return g.ys[i * d + idx];
        }
        let (x0, x1) = (g.xs[i], g.xs[i + 1]);
        let h = x1 - x0;
        let t = (y - x0) / h;
        let (y0, y1) = (g.ys[i * d + idx], g.ys[(i + 1) * d + idx]);
        let (m0, m1) = (g.dr[i * d + idx], g.dl[(i + 1) * d + idx]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1
    }

    fn rhs_with(&self, g: &Grid, x: f64, y: &[f64], side: Side, out: &mut [f64]) {
        let phi = self.phi;
        let v = y[0];
        // scaled jump expectation: e^{-Phi x} sum_k rate_k E[W(x - J_k)]
        let mut e = 0.0;
        for term in &self.terms {
            match *term {
                Term::Chain {
                    rate,
                    first,
                    len,
                    stage_rate,
                } => {
                    let mut prev = v;
                    for s in 0..len {
                        let cur = y[first + s];
                        out[first + s] = stage_rate * prev - (stage_rate + phi) * cur;
                        prev = cur;
                    }
                    e += rate * prev;
                }
                Term::Delay { rate, size } => {
                    e += rate * (-phi * size).exp() * self.history(g, 0, x - size, side);
                }
                Term::Spread { rate, lo, hi } => {
                    let b = self.bar.expect("running integral state");
                    let upper = (-phi * lo).exp() * self.history(g, b, x - lo, side);
                    let lower = (-phi * hi).exp() * self.history(g, b, x - hi, side);
                    e += rate * (upper - lower) / (hi - lo);
                }
            }
        }
        if let Some(b) = self.bar {
            out[b] = v - phi * y[b];
        }
        let killing = self.q + self.lambda;
        if self.sigma > 0.0 {
            let p = y[1];
            let s2 = self.sigma * self.sigma;
            out[0] = p;
            out[1] = -2.0 * phi * p - phi * phi * v - (2.0 / s2) * (self.drift * (p + phi * v) - killing * v + e);
        } else {
            out[0] = -phi * v + (killing * v - e) / self.drift;
        }
    }

    fn extend(&self, g: &mut Grid, upto: f64) -> Result<()> {
        self.refresh_breaks(g, upto + 1.0);
        let d = self.dim;
        let mut k1 = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        let mut k3 = vec![0.0; d];
        let mut k4 = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        while *g.xs.last().expect("nonempty grid") < upto {
            if g.xs.len() >= MAX_NODES {
                return Err(Error::Inversion {
                    x: upto,
                    achieved: f64::INFINITY,
                    target: 1e-9,
                });
            }
            let n = g.xs.len() - 1;
            let x0 = g.xs[n];
            let mut x1 = x0 + self.step;
            let bi = g.breaks.partition_point(|&b| b <= x0 + 1e-12);
            if let Some(&b) = g.breaks.get(bi) {
                if b < x1 + 0.5 * self.step {
                    x1 = b;
                }
            }
            let h = x1 - x0;
            let y0: Vec<f64> = g.ys[n * d..(n + 1) * d].to_vec();
            k1.copy_from_slice(&g.dr[n * d..(n + 1) * d]);
            for i in 0..d {
                tmp[i] = y0[i] + 0.5 * h * k1[i];
            }
            self.rhs_with(g, x0 + 0.5 * h, &tmp, Side::Right, &mut k2);
            for i in 0..d {
                tmp[i] = y0[i] + 0.5 * h * k2[i];
            }
            self.rhs_with(g, x0 + 0.5 * h, &tmp, Side::Right, &mut k3);
            for i in 0..d {
                tmp[i] = y0[i] + h * k3[i];
            }
            self.rhs_with(g, x1, &tmp, Side::Left, &mut k4);
            for i in 0..d {
                tmp[i] = y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            self.rhs_with(g, x1, &tmp, Side::Left, &mut k4);
            g.dl.extend_from_slice(&k4);
            self.rhs_with(g, x1, &tmp, Side::Right, &mut k4);
            g.dr.extend_from_slice(&k4);
            g.ys.extend_from_slice(&tmp);
            g.xs.push(x1);
        }
        Ok(())
    }

    /// `e^{-Phi_q x} W_q(x)` for `x > 0`.
    pub fn w_scaled(&self, x: f64) -> Result<f64> {
        {
            let g = self.grid.read().expect("grid lock");
            if *g.xs.last().expect("nonempty grid") >= x {
                return Ok(self.history(&g, 0, x, Side::Right));
            }
        }
        let mut g = self.grid.write().expect("grid lock");
        let target = x.max(1.25 * g.xs.last().copied().unwrap_or(0.0)).max(8.0);
        self.extend(&mut g, target)?;
        Ok(self.history(&g, 0, x, Side::Right))
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        Ok((self.phi * x).exp() * self.w_scaled(x)?)
    }

    /// `W_q'(x+)`, read from the stored right derivative of the scaled state.
    pub fn w_deriv(&self, x: f64) -> Result<f64> {
        let v = self.w_scaled(x)?;
        let g = self.grid.read().expect("grid lock");
        let slope = if self.sigma > 0.0 {
            self.history(&g, 1, x, Side::Right)
        } else {
            let mut tmp = vec![0.0; self.dim];
            let mut out = vec![0.0; self.dim];
            for (i, t) in tmp.iter_mut().enumerate() {
                *t = self.history(&g, i, x, Side::Right);
            }
            self.rhs_with(&g, x, &tmp, Side::Right, &mut out);
            out[0]
        };
        Ok((self.phi * x).exp() * (slope + self.phi * v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpComponent;
    use crate::scale::exp_sum::ExpSum;

    fn one(law: MagnitudeLaw, sigma: f64, c: f64) -> LevyModel {
        LevyModel::with_effective_drift(sigma, c, vec![JumpComponent { rate: 1.0, law }]).unwrap()
    }

    #[test]
    fn matches_partial_fractions() {
        for (law, sigma) in [
            (MagnitudeLaw::Exponential { mean: 1.0 }, 0.0),
            (MagnitudeLaw::Exponential { mean: 1.0 }, 1.0),
            (MagnitudeLaw::Erlang { shape: 3, mean: 0.8 }, 0.5),
        ] {
            let m = one(law, sigma, 1.5);
            for q in [0.0, 0.05, 1.0] {
                let phi = m.phi_inverse(q).unwrap();
                let pf = ExpSum::build(&m, q, phi).unwrap();
                let ode = DelayOde::new(&m, q, phi);
                for x in [0.1, 1.0, 5.0, 20.0] {
                    let a = pf.w(x) * (-phi * x).exp();
                    let b = ode.w_scaled(x).unwrap();
                    assert!((a - b).abs() < 1e-9, "{law:?} q={q} x={x}: {a} vs {b}");
                    let da = pf.w_deriv(x);
                    let db = ode.w_deriv(x).unwrap();
                    assert!((da - db).abs() < 1e-8 * da.abs().max(1.0), "{da} vs {db}");
                }
            }
        }
    }

    #[test]
    fn deterministic_claims_closed_form() {
        // W(x) = (1/c) sum_{k <= x/d} (-lambda/c)^k (x - kd)^k / k! e^{(q+lambda)(x - kd)/c}
        let (c, d, lambda, q) = (1.5, 0.7, 1.0, 0.05);
        let m = LevyModel::with_effective_drift(
            0.0,
            c,
            vec![JumpComponent {
                rate: lambda,
                law: MagnitudeLaw::Deterministic { size: d },
            }],
        )
        .unwrap();
        let phi = m.phi_inverse(q).unwrap();
        let ode = DelayOde::new(&m, q, phi);
        for x in [0.3f64, 0.7, 1.0, 2.5, 6.0] {
            let mut exact = 0.0;
            let mut fact = 1.0;
            let mut k = 0;
            while k as f64 * d <= x {
                if k > 0 {
                    fact *= k as f64;
                }
                let u = x - k as f64 * d;
                exact += (-lambda / c).powi(k) * u.powi(k) / fact * ((q + lambda) * u / c).exp();
                k += 1;
            }
            exact /= c;
            let got = ode.w(x).unwrap();
            assert!((got - exact).abs() < 1e-9 * exact.max(1.0), "x={x}: {got} vs {exact}");
        }
    }
}
