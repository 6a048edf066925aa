//! Keeps the frozen oracle values honest: the oracles are re-run and checked
//! against closed forms and against the constants the acceptance suite uses.

mod common;

use std::f64::consts::PI;

#[test]
fn frozen_t_values_reproduce() {
    for (sample, (t, p)) in common::t_samples().iter().zip(common::T_ORACLE) {
        let (t2, p2) = common::oracle_t_test(sample);
        assert!(
            (t - t2).abs() < 1e-12 && (p - p2).abs() < 1e-12,
            "{sample:?}"
        );
    }
}

#[test]
fn frozen_ks_values_reproduce() {
    for ((a, b), (d, p)) in common::ks_samples().iter().zip(common::KS_ORACLE) {
        let (d2, p2) = common::oracle_ks(a, b);
        assert!(
            (d - d2).abs() < 1e-12 && (p - p2).abs() < 1e-12,
            "{a:?} {b:?}"
        );
    }
}

#[test]
fn t_quadrature_matches_closed_forms() {
    // df = 2: P(|T| > t) = 1 - t / sqrt(2 + t^2); df = 1: 1 - 2 atan(t) / pi
    for t in [0.4_f64, 1.3, 2.9, 6.0] {
        let s2 = [t - 1.0, t, t + 1.0];
        let (t_stat, p) = common::oracle_t_test(&s2);
        let want = 1.0 - t_stat / (2.0 + t_stat * t_stat).sqrt();
        assert!((p - want).abs() < 1e-10, "df 2 t {t_stat}: {p} vs {want}");

        let s1 = [0.0, 2.0 * t];
        let (t_stat, p) = common::oracle_t_test(&s1);
        let want = 1.0 - 2.0 * t_stat.atan() / PI;
        assert!((p - want).abs() < 1e-10, "df 1 t {t_stat}: {p} vs {want}");
    }
}

#[test]
fn kolmogorov_oracle_reference_points() {
    // tabulated asymptotic critical values
    for (lambda, alpha) in [(1.2238, 0.10), (1.3581, 0.05), (1.6276, 0.01)] {
        assert!(
            (common::oracle_kolmogorov_survival(lambda) - alpha).abs() < 2e-4,
            "{lambda}"
        );
    }
}

#[test]
fn brute_quantile_small_cases() {
    assert_eq!(common::brute_quantile(&[3.0], 0.7), 3.0);
    assert_eq!(common::brute_quantile(&[0.4, 0.1, 0.3, 0.2], 0.5), 0.25);
    assert_eq!(common::brute_quantile(&[0.1, 0.2, 0.3, 0.4, 0.5], 1.0), 0.5);
}
