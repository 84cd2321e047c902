//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol * |I|)` or the subdivision cap
//! is hit. Estimates that are pure roundoff (the `50 eps * int |f|` floor) are
//! accepted once nothing but the floor remains.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        }
    }
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525056064,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    floor: f64,
}

fn gk21<F: FnMut(f64) -> Result<f64>>(f: &mut F, lo: f64, hi: f64) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    error = error.max(floor);
    if !value.is_finite() {
        return Err(Error::Quadrature {
            lo,
            hi,
            error: f64::INFINITY,
            subdivisions: 0,
        });
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
        floor,
    })
}

/// Integrates a fallible integrand over `[lo, hi]`.
pub fn integrate_fallible<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate_fallible(f, hi, lo, opts).map(|v| -v);
    }
    let mut panels = vec![gk21(&mut f, lo, hi)?];
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let floor: f64 = panels.iter().map(|p| p.floor).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= tol || err <= 2.0 * floor {
            return Ok(total);
        }
        let (idx, worst) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, p)| (i, *p))
            .expect("nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if panels.len() >= opts.max_subdivisions || !(mid > worst.lo && mid < worst.hi) {
            return Err(Error::Quadrature {
                lo: worst.lo,
                hi: worst.hi,
                error: err,
                subdivisions: panels.len(),
            });
        }
        let left = gk21(&mut f, worst.lo, mid)?;
        let right = gk21(&mut f, mid, worst.hi)?;
        panels[idx] = left;
        panels.push(right);
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, opts: &QuadOptions) -> Result<f64> {
    integrate_fallible(|x| Ok(f(x)), lo, hi, opts)
}

/// Integrates over `[lo, hi]` splitting at the interior points of `breaks`
/// (points outside the interval are ignored).
pub fn integrate_with_breaks<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate_with_breaks(f, hi, lo, breaks, opts).map(|v| -v);
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut acc = 0.0;
    let mut start = lo;
    for p in pts.into_iter().chain(std::iter::once(hi)) {
        acc += integrate_fallible(&mut f, start, p, opts)?;
        start = p;
    }
    Ok(acc)
}

/// Integrates over `[lo, inf)` through `x = lo + scale * s / (1 - s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    scale: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    integrate_fallible(
        |s| {
            let one_minus = 1.0 - s;
            let x = lo + scale * s / one_minus;
            let v = f(x)?;
            if v == 0.0 {
                Ok(0.0)
            } else {
                Ok(v * scale / (one_minus * one_minus))
            }
        },
        0.0,
        1.0,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, &QuadOptions::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand_with_break() {
        let f = |x: f64| Ok((x - 0.3).abs().sqrt());
        let v = integrate_with_breaks(f, 0.0, 1.0, &[0.3], &QuadOptions::default()).unwrap();
        let exact = 2.0 / 3.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite() {
        let v = integrate_to_infinity(|x| Ok((-2.0 * x).exp()), 1.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((v - 0.5 * (-2f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits() {
        let o = QuadOptions::default();
        let a = integrate(f64::sin, 0.0, 2.0, &o).unwrap();
        let b = integrate(f64::sin, 2.0, 0.0, &o).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn reports_failure() {
        let opts = QuadOptions {
            max_subdivisions: 3,
            ..Default::default()
        };
        let r = integrate(|x| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, &opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
