//! Partial-fraction backend: `W_q(x) = sum_j A_j e^{rho_j x}` where `rho_j`
//! runs over the roots of `kappa(t) = q` and `A_j = 1 / kappa'(rho_j)`.

use num_complex::Complex64;

use crate::levy_model::{LevyModel, MagnitudeLaw};
use crate::special::{phi1, phi2, psi};

#[derive(Debug, Clone)]
pub(crate) struct ExpSum {
    pub terms: Vec<(Complex64, Complex64)>,
}

/// Ascending coefficients.
type Poly = Vec<f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn poly_pow_linear(beta: f64, k: u32) -> Poly {
    let mut p = vec![1.0];
    for _ in 0..k {
        p = poly_mul(&p, &vec![beta, 1.0]);
    }
    p
}

fn eval(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Numerator of `kappa(t) - q` over the common denominator `prod (beta_g + t)^K_g`.
fn numerator(model: &LevyModel, q: f64) -> Option<Poly> {
    // group components by Erlang rate
    let mut groups: Vec<(f64, u32)> = Vec::new();
    let mut comps: Vec<(f64, f64, u32)> = Vec::new();
    for j in model.jumps() {
        let (beta, k) = match j.law {
            MagnitudeLaw::Exponential { mean } => (1.0 / mean, 1),
            MagnitudeLaw::Erlang { shape, mean } => (shape as f64 / mean, shape),
            _ => return None,
        };
        comps.push((j.rate, beta, k));
        match groups.iter_mut().find(|g| g.0 == beta) {
            Some(g) => g.1 = g.1.max(k),
            None => groups.push((beta, k)),
        }
    }
    let denom = groups
        .iter()
        .fold(vec![1.0], |acc, &(b, k)| poly_mul(&acc, &poly_pow_linear(b, k)));
    let s2 = 0.5 * model.sigma() * model.sigma();
    let lambda = model.total_jump_rate();
    let base = vec![-q - lambda, model.effective_drift(), s2];
    let mut p = poly_mul(&base, &denom);
    for &(rate, beta, k) in &comps {
        let mut term = vec![rate * beta.powi(k as i32)];
        for &(b, kg) in &groups {
            let power = if b == beta { kg - k } else { kg };
            term = poly_mul(&term, &poly_pow_linear(b, power));
        }
        p = poly_add(&p, &term);
    }
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    Some(p)
}

/// Aberth-Ehrlich simultaneous iteration.
fn roots(p: &[f64]) -> Option<Vec<Complex64>> {
    let n = p.len() - 1;
    if n == 0 {
        return Some(Vec::new());
    }
    let lead = p[n];
    let radius = 1.0 + p[..n].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, ang)
        })
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (v, d) = eval(p, z[k]);
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = v / d;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    s += 1.0 / (z[k] - z[j]);
                }
            }
            let w = ratio / (1.0 - ratio * s);
            z[k] -= w;
            moved = moved.max(w.norm() / z[k].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    // Newton polish on the polynomial
    for r in z.iter_mut() {
        for _ in 0..4 {
            let (v, d) = eval(p, *r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= v / d;
        }
    }
    if z.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return None;
    }
    Some(z)
}

impl ExpSum {
    /// Returns `None` when the transform is not rational or the root
    /// structure is too degenerate for a clean expansion.
    pub fn build(model: &LevyModel, q: f64, phi: f64) -> Option<Self> {
        let p = numerator(model, q)?;
        let mut z = roots(&p)?;
        for r in z.iter_mut() {
            if r.im.abs() <= 1e-9 * r.re.abs().max(1.0) {
                r.im = 0.0;
                // polish the real root against kappa itself
                for _ in 0..3 {
                    let f = model.kappa(r.re) - q;
                    let d = model.kappa_prime(r.re);
                    if d == 0.0 || !d.is_finite() {
                        break;
                    }
                    r.re -= f / d;
                }
            }
        }
        let n = z.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let scale = z[i].norm().max(z[j].norm()).max(1.0);
                if (z[i] - z[j]).norm() < 1e-6 * scale {
                    return None;
                }
            }
        }
        // snap the dominant root onto the independently computed Phi_q
        if let Some(best) = z
            .iter_mut()
            .filter(|r| r.im == 0.0)
            .min_by(|a, b| (a.re - phi).abs().total_cmp(&(b.re - phi).abs()))
        {
            if (best.re - phi).abs() <= 1e-8 * phi.max(1.0) {
                best.re = phi;
            } else {
                return None;
            }
        } else {
            return None;
        }
        let terms: Vec<(Complex64, Complex64)> = z
            .iter()
            .map(|&rho| (1.0 / model.kappa_prime_complex(rho), rho))
            .collect();
        let s = Self { terms };
        // W_q(0) must come out right
        let w0 = s.w(0.0);
        if (w0 - model.w_at_zero()).abs() > 1e-9 * model.w_at_zero().max(1.0) {
            return None;
        }
        Some(s)
    }

    fn sum(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> f64 {
        self.terms.iter().map(|&(a, rho)| f(a, rho)).sum::<Complex64>().re
    }

    pub fn w(&self, x: f64) -> f64 {
        self.sum(|a, rho| a * (rho * x).exp())
    }

    pub fn w_deriv(&self, x: f64) -> f64 {
        self.sum(|a, rho| a * rho * (rho * x).exp())
    }

    pub fn wbar(&self, x: f64) -> f64 {
        self.sum(|a, rho| a * x * phi1(rho * x))
    }

    pub fn wbarbar(&self, x: f64) -> f64 {
        self.sum(|a, rho| a * x * x * phi2(rho * x))
    }

    /// `int_0^len e^{-theta t} W(y + t) dt` for `y >= 0`.
    pub fn shifted_laplace(&self, y: f64, len: f64, theta: f64) -> f64 {
        self.sum(|a, rho| a * (rho * y).exp() * len * phi1((rho - theta) * len))
    }

    /// `int_0^x t e^{-theta t} W(t) dt`.
    pub fn laplace_moment(&self, x: f64, theta: f64) -> f64 {
        self.sum(|a, rho| a * x * x * psi((rho - theta) * x))
    }

    /// `Z_q(x) - (q / Phi_q) W_q(x)` for `q > 0`, summed without the dominant
    /// term (whose contributions cancel exactly) and without the constant
    /// (which vanishes since `q sum A / rho = 1`).
    pub fn z_excess(&self, x: f64, q: f64, phi: f64) -> f64 {
        q * self.sum(|a, rho| {
            if rho.im == 0.0 && rho.re == phi {
                Complex64::new(0.0, 0.0)
            } else {
                a * (1.0 / rho - 1.0 / phi) * (rho * x).exp()
            }
        })
    }

    /// `int_0^inf e^{-theta t} W(x + t) dt`, `theta > Phi_q`.
    pub fn laplace_tail(&self, x: f64, theta: f64) -> f64 {
        self.sum(|a, rho| a * (rho * x).exp() / (theta - rho))
    }

    /// `int_0^inf t e^{-theta t} W(x + t) dt`, `theta > Phi_q`.
    pub fn laplace_tail_moment(&self, x: f64, theta: f64) -> f64 {
        self.sum(|a, rho| {
            let d = theta - rho;
            a * (rho * x).exp() / (d * d)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpComponent;

    #[test]
    fn brownian_sinh() {
        let m = LevyModel::brownian(2f64.sqrt(), 0.0).unwrap();
        let e = ExpSum::build(&m, 1.0, 1.0).unwrap();
        for &x in &[0.0, 0.3, 1.0, 4.0] {
            assert!((e.w(x) - f64::sinh(x)).abs() < 1e-13 * f64::cosh(x));
            assert!((e.w_deriv(x) - f64::cosh(x)).abs() < 1e-13 * f64::cosh(x));
            assert!((e.wbar(x) - (f64::cosh(x) - 1.0)).abs() < 1e-13 * f64::cosh(x));
        }
    }

    #[test]
    fn cramer_lundberg_closed_form() {
        // q = 0: W(x) = (1 - (lambda/(c mu)) e^{-(mu - lambda/c) x}) / (c - lambda/mu)
        let m = LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap();
        let e = ExpSum::build(&m, 0.0, 0.0).unwrap();
        for x in [0.0f64, 0.5, 2.0, 10.0] {
            let exact = (1.0 - (1.0 / 1.5) * (-(1.0 - 1.0 / 1.5) * x).exp()) / 0.5;
            assert!((e.w(x) - exact).abs() < 1e-13, "{x}: {} vs {exact}", e.w(x));
        }
    }

    #[test]
    fn mixed_erlang_groups() {
        let m = LevyModel::new(
            0.5,
            0.3,
            vec![
                JumpComponent {
                    rate: 0.7,
                    law: MagnitudeLaw::Erlang { shape: 2, mean: 1.0 },
                },
                JumpComponent {
                    rate: 0.4,
                    law: MagnitudeLaw::Exponential { mean: 0.5 },
                },
            ],
        )
        .unwrap();
        let q = 0.3;
        let phi = m.phi_inverse(q).unwrap();
        let e = ExpSum::build(&m, q, phi).unwrap();
        // two identical-rate components (Erlang(2, 1) has rate 2, Exp(0.5) has rate 2)
        assert_eq!(e.terms.len(), 4);
        for &(_, rho) in &e.terms {
            assert!((m.kappa_complex(rho) - q).norm() < 1e-10);
        }
    }
}
