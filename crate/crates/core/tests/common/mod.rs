//! Reference implementations used to check the library. Nothing here calls
//! into the crate's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Interpolated quantile evaluated literally from its definition on a
/// sample sorted by insertion sort, with 1-based order statistics.
pub fn brute_quantile(sample: &[f64], p: f64) -> f64 {
    let mut xs: Vec<f64> = Vec::with_capacity(sample.len());
    for &v in sample {
        let pos = xs.iter().position(|x| *x > v).unwrap_or(xs.len());
        xs.insert(pos, v);
    }
    let n = xs.len();
    let x = |i: usize| if i > n { xs[n - 1] } else { xs[i - 1] };
    let h = (n as f64 - 1.0) * p + 1.0;
    let k = h.floor();
    let ki = k as usize;
    x(ki) + (h - k) * (x(ki + 1) - x(ki))
}

/// Gamma at half-integers `k / 2` by the recurrence from Gamma(1/2) and Gamma(1).
fn gamma_half(k: u32) -> f64 {
    let even = k.is_multiple_of(2);
    let mut z = if even { 1.0 } else { 0.5 };
    let mut g = if even { 1.0 } else { PI.sqrt() };
    while z < k as f64 / 2.0 - 1e-12 {
        g *= z;
        z += 1.0;
    }
    g
}

fn t_density(x: f64, df: u32) -> f64 {
    let nu = df as f64;
    gamma_half(df + 1) / ((nu * PI).sqrt() * gamma_half(df))
        * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, left, tol / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, right, tol / 2.0, depth - 1)
    }
}

pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // split into panels so the adaptive rule never straddles too much curvature
    let panels = 64;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * w, a + (i + 1) as f64 * w);
            adaptive_simpson(f, lo, hi, simpson(f, lo, hi), 1e-15, 40)
        })
        .sum()
}

/// `(t, two-sided p)` for the one-sample t test of mean zero, with the
/// p-value from quadrature of the Student-t density.
pub fn oracle_t_test(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = mean / (var / n).sqrt();
    let df = sample.len() as u32 - 1;
    let central = integrate(&|x| t_density(x, df), 0.0, t.abs());
    (t, 1.0 - 2.0 * central)
}

/// KS distance by evaluating both ECDFs at every pooled sample point.
pub fn oracle_ks_d(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
        .fold(0.0, f64::max)
}

/// Kolmogorov survival function from the Jacobi theta form of the CDF,
/// summed over a fixed 400 terms at every lambda.
pub fn oracle_kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut cdf = 0.0;
    for j in (1..=400).rev() {
        let odd = (2 * j - 1) as f64;
        cdf += (-(odd * odd) * PI * PI / (8.0 * lambda * lambda)).exp();
    }
    1.0 - (2.0 * PI).sqrt() / lambda * cdf
}

pub fn oracle_ks(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = oracle_ks_d(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let lambda = (na * nb / (na + nb)).sqrt() * d;
    (d, oracle_kolmogorov_survival(lambda))
}

/// `(t, p)` from the quadrature oracle for `common::t_samples()`.
pub const T_ORACLE: [(f64, f64); 10] = [
    (5.422176684690384, 0.012307551821486462),
    (0.0, 1.0),
    (1.6016775657837572, 0.2075460870877478),
    (3.6114310854827836, 0.02252794024319471),
    (-1.0733301531005544, 0.33216991987857125),
    (2.985481847329302, 0.024462629360477273),
    (3.2753578962701164, 0.013573648198069055),
    (4.871064845315932, 0.00821337475474282),
    (0.07685697734753291, 0.9406247187015107),
    (2.045171681697983, 0.07116743145616267),
];

/// `(D, p)` from the series oracle for `common::ks_samples()`.
pub const KS_ORACLE: [(f64, f64); 10] = [
    (0.20000000000000007, 0.9999652306540077),
    (1.0, 0.0134758898758639),
    (0.6333333333333333, 0.22399236227971753),
    (0.6904761904761905, 0.09185575509389854),
    (0.4, 0.8186211744710058),
    (0.4285714285714286, 0.6576398397424086),
    (0.25, 0.9639452436648751),
    (1.0, 0.008553640029282605),
    (0.19047619047619047, 0.9998033728651061),
    (0.6000000000000001, 0.05464633011386355),
];

/// The ten small t-test samples pinned by the acceptance suite.
pub fn t_samples() -> Vec<Vec<f64>> {
    vec![
        vec![0.2, 0.3, 0.4, 0.5],
        vec![-0.1, 0.0, 0.1],
        vec![0.05, -0.02, 0.11, 0.3],
        vec![0.447, 0.1, 0.9, 0.35, 0.62],
        vec![-0.3, -0.1, 0.05, 0.12, -0.2, 0.01],
        vec![0.15, 0.32, 0.45, 0.08, -0.05, 0.6, 0.21],
        vec![1.2, 0.4, 0.9, -0.1, 0.3, 0.55, 0.7, 0.05],
        vec![0.01, 0.02, 0.015, 0.03, 0.012],
        vec![-0.5, 0.4, -0.3, 0.35, -0.2, 0.25, 0.1, -0.05, 0.02],
        vec![0.338, 0.9, -0.4, 1.6, 0.1, 0.2, -0.1, 0.7, 0.05, 0.3],
    ]
}

/// The ten KS sample pairs pinned by the acceptance suite.
pub fn ks_samples() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (
            vec![0.1, 0.2, 0.3, 0.4, 0.5],
            vec![0.15, 0.25, 0.35, 0.45, 0.55],
        ),
        (vec![0.1, 0.2, 0.3, 0.4, 0.5], vec![0.6, 0.7, 0.8, 0.9, 1.0]),
        (
            vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            vec![0.05, 0.5, 0.6, 0.7, 0.8],
        ),
        (
            vec![-0.2, 0.1, 0.15, 0.3, 0.32, 0.45],
            vec![0.2, 0.4, 0.57, 0.68, 0.9, 1.1, 0.38],
        ),
        (vec![0.1, 0.1, 0.2, 0.2, 0.3], vec![0.1, 0.2, 0.3, 0.3, 0.4]),
        (
            vec![0.5, 0.1, 0.9, 0.3, 0.7, 0.2, 0.8],
            vec![0.4, 0.6, 0.25, 0.65, 0.35],
        ),
        (
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            vec![2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5],
        ),
        (
            vec![0.0, 0.01, 0.02, 0.03, 0.04],
            vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        ),
        (
            vec![0.3, -0.1, 0.2, 0.05, 0.15, 0.25, 0.1],
            vec![0.12, 0.22, 0.02, 0.32, -0.08, 0.18],
        ),
        (
            vec![0.15, 0.32, 0.45, 0.1, -0.06, 0.2, 0.05, 0.6, 0.28, 0.12],
            vec![0.4, 0.57, 0.68, 0.3, 0.1, 0.5, 0.45, 0.9, 0.62, 0.35],
        ),
    ]
}
