//! Hermite functions and generalized Laguerre polynomials.

use std::f64::consts::PI;

/// Position-space number states `<x|n> = H_n(x) e^{-x^2/2} / sqrt(2^n n! sqrt(pi))`
/// for `n = 0..=n_max`, by the stable three-term recurrence.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    hermite_functions_into(x, n_max, &mut out);
    out
}

pub fn hermite_functions_into(x: f64, n_max: usize, out: &mut Vec<f64>) {
    out.clear();
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n_max == 0 {
        return;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
}

/// `L_n^{(alpha)}(x)`
pub fn laguerre(n: usize, alpha: usize, x: f64) -> f64 {
    let a = alpha as f64;
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_closed_forms() {
        let x: f64 = 0.7;
        let g = PI.powf(-0.25) * (-x * x / 2.0).exp();
        let psi = hermite_functions(x, 3);
        assert_abs_diff_eq!(psi[0], g, epsilon = 1e-15);
        assert_abs_diff_eq!(psi[1], g * 2.0 * x / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(psi[2], g * (4.0 * x * x - 2.0) / 8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(psi[3], g * (8.0 * x.powi(3) - 12.0 * x) / 48f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn hermite_orthonormal() {
        let dx = 0.01;
        let xs: Vec<f64> = (-1000..=1000).map(|i| i as f64 * dx).collect();
        let tab: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_functions(x, 5)).collect();
        for m in 0..=5 {
            for n in 0..=5 {
                let s: f64 = tab.iter().map(|p| p[m] * p[n]).sum::<f64>() * dx;
                assert_abs_diff_eq!(s, if m == n { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn laguerre_closed_forms() {
        let x = 1.3;
        assert_abs_diff_eq!(laguerre(1, 0, x), 1.0 - x, epsilon = 1e-15);
        assert_abs_diff_eq!(laguerre(2, 0, x), (x * x - 4.0 * x + 2.0) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(laguerre(1, 2, x), 3.0 - x, epsilon = 1e-15);
        assert_abs_diff_eq!(
            laguerre(2, 1, x),
            (x * x - 6.0 * x + 6.0) / 2.0,
            epsilon = 1e-14
        );
    }
}
