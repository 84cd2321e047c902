//! Entire functions used by the exponential-sum antiderivatives.

use num_complex::Complex64;

const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 28;

/// `(e^z - 1) / z`, continuous at 0.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n, fact_n| 1.0 / (fact_n * (n as f64 + 1.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(e^z - 1 - z) / z^2`, continuous at 0.
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n, fact_n| {
            let n = n as f64;
            1.0 / (fact_n * (n + 1.0) * (n + 2.0))
        })
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// `int_0^1 s e^{zs} ds`.
pub fn psi(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        series(z, |n, fact_n| 1.0 / (fact_n * (n as f64 + 2.0)))
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

fn series(z: Complex64, coef: impl Fn(usize, f64) -> f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    let mut fact = 1.0;
    for n in 0..SERIES_TERMS {
        if n > 0 {
            fact *= n as f64;
        }
        acc += zn * coef(n, fact);
        zn *= z;
    }
    acc
}

pub fn phi1_real(x: f64) -> f64 {
    phi1(Complex64::new(x, 0.0)).re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn series_and_closed_forms_meet() {
        for &z in &[c(0.999, 0.0), c(-0.7, 0.7), c(0.0, 0.99)] {
            let closed1 = (z.exp() - 1.0) / z;
            let closed2 = (z.exp() - 1.0 - z) / (z * z);
            let closed3 = (z.exp() * (z - 1.0) + 1.0) / (z * z);
            assert!((phi1(z) - closed1).norm() < 1e-14);
            assert!((phi2(z) - closed2).norm() < 1e-13);
            assert!((psi(z) - closed3).norm() < 1e-13);
        }
    }

    #[test]
    fn values_at_zero() {
        let z = c(0.0, 0.0);
        assert_eq!(phi1(z).re, 1.0);
        assert_eq!(phi2(z).re, 0.5);
        assert_eq!(psi(z).re, 0.5);
    }
}
