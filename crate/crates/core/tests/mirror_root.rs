//! `x' = a1 x(t-h)` has the purely imaginary pair `±iω` when `cos(ωh) = 0`
//! and `a1 = -ω / sin(ωh)`; such a pair is its own mirror, so no Lyapunov
//! matrix exists.

mod common;

use common::delay_free_scalar;
use dlyap_core::odec::OdecOperator;
use dlyap_core::spectrum::{characteristic_value, check};
use dlyap_core::{Error, LyapunovSolution, SpectrumThresholds, TimeDelaySystem, Verdict, Weight};
use nalgebra::dmatrix;
use num_complex::Complex64;

/// Bisection for the first positive zero of `cos(ωh)`.
fn crossing_frequency(h: f64) -> f64 {
    let (mut lo, mut hi) = (1e-6, std::f64::consts::PI / h - 1e-6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (mid * h).cos() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn pure_delay(a1: f64, h: f64) -> TimeDelaySystem {
    let base = delay_free_scalar(0.0, h);
    TimeDelaySystem::new(base.a0, dmatrix![a1], base.ad, base.bd, base.cd, h).unwrap()
}

#[test]
fn imaginary_root_pair_violates_condition() {
    let h = 1.0;
    let omega = crossing_frequency(h);
    let a1 = -omega / (omega * h).sin();
    assert!((a1 + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    let sys = pure_delay(a1, h);

    let root = characteristic_value(&sys, Complex64::new(0.0, omega)).unwrap();
    assert!(root.norm() < 1e-12, "{root}");

    let report = check(
        &OdecOperator::assemble(&sys).unwrap(),
        &SpectrumThresholds::default(),
    );
    assert!(report.sigma_min_relative < 1e-8, "{report:?}");
    assert_ne!(report.verdict, Verdict::Satisfied);
}

#[test]
fn detuned_gain_restores_condition() {
    let sys = pure_delay(-1.0, 1.0);
    let report = check(
        &OdecOperator::assemble(&sys).unwrap(),
        &SpectrumThresholds::default(),
    );
    assert_eq!(report.verdict, Verdict::Satisfied);
    assert!(LyapunovSolution::solve(&sys, &Weight::identity(1)).is_ok());
}

#[test]
fn zero_root_is_rejected() {
    match LyapunovSolution::solve(&delay_free_scalar(0.0, 1.0), &Weight::identity(1)) {
        Err(Error::SpectrumConditionViolated {
            sigma_min_relative, ..
        }) => {
            assert!(sigma_min_relative < 1e-10)
        }
        other => panic!("expected a violation, got {other:?}"),
    }
}
