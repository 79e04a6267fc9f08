mod common;

use std::f64::consts::TAU;

use kerrfocus::capacity::{amplitude_only_mi, mi_monte_carlo};
use kerrfocus::ct_oracle::{compare, compare_detail, oracle_receive};
use kerrfocus::dt_model::{simulate, ModelOptions, ModelVariant, Normalization};
use kerrfocus::focusing::{build_constellation, difference_set, FrequencySet, RingIndexSet};
use kerrfocus::params::direct_coefficients;
use kerrfocus::{Error, User};

use common::{draw_block, gaussian_block, mi_quadrature};

fn rings() -> (RingIndexSet, RingIndexSet) {
    (
        RingIndexSet::new(vec![1, 4, 9], User::One).unwrap(),
        RingIndexSet::new(vec![2, 8], User::Two).unwrap(),
    )
}

#[test]
fn oracle_error_shrinks_with_oversampling() {
    let co = direct_coefficients(0.8, 2.0, 1.5, 0.6, 2, 1.0, 0.0, 1.0).unwrap();
    let x1 = gaussian_block(16, 1.0, User::One, 5);
    let x2 = gaussian_block(16, 1.0, User::Two, 6);
    let fs = FrequencySet::contiguous(4);
    let opts = ModelOptions::default();
    let (m1, m2) = simulate(&x1, &x2, &fs, &fs, &co, &opts, false, 0).unwrap();
    let mut prev = f64::INFINITY;
    for os in [64, 256, 1024] {
        let (o1, o2) = oracle_receive(&x1, &x2, &co, &fs, &fs, ModelVariant::Symmetric, os).unwrap();
        let err = compare(&o1, &m1, &x1, co.es)
            .unwrap()
            .max(compare(&o2, &m2, &x2, co.es).unwrap());
        assert!(err < prev / 1.8, "os={os}: {err} vs previous {prev}");
        prev = err;
    }
    assert!(prev < 1e-2);
}

#[test]
fn oracle_matches_focused_model_in_normalized_mode_too() {
    let (n1, n2) = rings();
    let co = direct_coefficients(1.0, 5.0, 4.0, 1.0, 1, 2.5, 0.0, 1.0).unwrap();
    let x1 = draw_block(&build_constellation(&n1, co.h21, 6).unwrap(), 20, User::One, 1);
    let x2 = draw_block(&build_constellation(&n2, co.h12, 6).unwrap(), 20, User::Two, 2);
    let (f1, f2) = (difference_set(&n2), difference_set(&n1));
    let (o1, o2) = oracle_receive(&x1, &x2, &co, &f1, &f2, ModelVariant::Shifted, 512).unwrap();
    let opts = ModelOptions {
        variant: ModelVariant::Shifted,
        ..Default::default()
    };
    let (m1, m2) = simulate(&x1, &x2, &f1, &f2, &co, &opts, false, 0).unwrap();
    let worst = compare_detail(&o1, &m1, &x1, co.es)
        .unwrap()
        .into_iter()
        .chain(compare_detail(&o2, &m2, &x2, co.es).unwrap())
        .fold(0.0f64, |m, (_, _, e)| m.max(e));
    assert!(worst < 1e-2, "{worst}");

    let normalized = ModelOptions {
        normalization: Normalization::Normalized,
        ..opts
    };
    let (n1out, _) = simulate(&x1, &x2, &f1, &f2, &co, &normalized, false, 0).unwrap();
    for ((_, _, a), (_, _, b)) in n1out.iter().zip(m1.iter()) {
        assert!((a * co.es - b).norm() < 1e-12 * co.es.max(b.norm()));
    }
}

#[test]
fn comparing_mismatched_outputs_is_an_error() {
    let co = direct_coefficients(0.5, 1.0, 1.0, 0.5, 1, 1.0, 0.0, 1.0).unwrap();
    let x1 = gaussian_block(8, 1.0, User::One, 1);
    let x2 = gaussian_block(8, 1.0, User::Two, 2);
    let a = FrequencySet::contiguous(1);
    let b = FrequencySet::contiguous(2);
    let opts = ModelOptions::default();
    let (m1, _) = simulate(&x1, &x2, &a, &a, &co, &opts, false, 0).unwrap();
    let (o1, _) = oracle_receive(&x1, &x2, &co, &b, &b, ModelVariant::Symmetric, 64).unwrap();
    assert!(matches!(compare(&o1, &m1, &x1, co.es), Err(Error::KeyMismatch(_))));
}

fn low_snr_case(snr_db: f64) {
    let rings = RingIndexSet::new(vec![1, 2, 3], User::One).unwrap();
    let c = build_constellation(&rings, TAU, 4).unwrap();
    let noise = c.mean_power() / 10f64.powf(snr_db / 10.0);
    let h_self = 0.7;
    let mc = mi_monte_carlo(&c, h_self, noise, 100_000, 9).unwrap();
    let exact = mi_quadrature(c.points(), h_self, noise, 400, 256);
    assert!(
        (mc.bits - exact).abs() <= 3.0 * mc.std_err,
        "{snr_db} dB: {} +/- {} vs {exact}",
        mc.bits,
        mc.std_err
    );
}

#[test]
fn mi_matches_quadrature_at_5_db() {
    low_snr_case(5.0);
}

#[test]
fn mi_matches_quadrature_at_10_db() {
    low_snr_case(10.0);
}

#[test]
fn amplitude_only_matches_quadrature() {
    let rings = RingIndexSet::new(vec![1, 3, 6], User::Two).unwrap();
    let c = build_constellation(&rings, 2.0, 8).unwrap();
    let noise = c.mean_power() / 10.0;
    let mc = amplitude_only_mi(&c, 0.3, noise, 100_000, 3).unwrap();
    let exact = mi_quadrature(c.with_phases(1).unwrap().points(), 0.3, noise, 400, 256);
    assert!((mc.bits - exact).abs() <= 3.0 * mc.std_err, "{mc:?} vs {exact}");
    assert!(mc.bits <= (3f64).log2() + 1e-12);
}

#[test]
fn mi_is_seed_reproducible() {
    let rings = RingIndexSet::new(vec![1, 2], User::One).unwrap();
    let c = build_constellation(&rings, TAU, 4).unwrap();
    let a = mi_monte_carlo(&c, 0.5, 0.3, 10_000, 11).unwrap();
    let b = mi_monte_carlo(&c, 0.5, 0.3, 10_000, 11).unwrap();
    let d = mi_monte_carlo(&c, 0.5, 0.3, 10_000, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.bits, d.bits);
}
