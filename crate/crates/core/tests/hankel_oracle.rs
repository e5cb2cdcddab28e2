//! Hankel functions against the independent oracle in `common::hankel`.

mod common;

use common::hankel::{asymptotic, oracle, rel, samples, series};
use hnabem::special_functions::{hankel1_0, hankel1_1};
use num_complex::Complex64;
use std::f64::consts::PI;

#[test]
fn oracle_matches_tabulated_values() {
    let (h0, h1) = oracle(1.0);
    assert!((h0.re - 0.765_197_686_557_966_6).abs() < 1e-15);
    assert!((h0.im - 0.088_256_964_215_676_96).abs() < 1e-15);
    assert!((h1.re - 0.440_050_585_744_933_5).abs() < 1e-15);
    assert!((h1.im + 0.781_212_821_300_288_7).abs() < 1e-15);
    let (h0, _) = oracle(10.0);
    assert!((h0.re + 0.245_935_764_451_348_3).abs() < 1e-15);
}

#[test]
fn oracle_branches_agree_at_switch() {
    for &z in &[22.0, 25.0, 30.0] {
        let (j0, y0, j1, y1) = series(z);
        assert!(rel(Complex64::new(j0, y0), asymptotic(0.0, z)) < 1e-13, "z = {z}");
        assert!(rel(Complex64::new(j1, y1), asymptotic(1.0, z)) < 1e-13, "z = {z}");
    }
}

#[test]
fn hankel_matches_oracle_on_log_grid() {
    let mut worst: f64 = 0.0;
    for z in samples() {
        let (o0, o1) = oracle(z);
        let e0 = rel(hankel1_0(z).unwrap(), o0);
        let e1 = rel(hankel1_1(z).unwrap(), o1);
        assert!(e0 <= 1e-10 && e1 <= 1e-10, "z = {z}: {e0:.2e} {e1:.2e}");
        worst = worst.max(e0).max(e1);
    }
    println!("worst relative deviation {worst:.3e}");
}

#[test]
fn h1_bound_on_log_grid() {
    for z in samples() {
        let h1 = hankel1_1(z).unwrap();
        assert!(h1.norm() <= (2.0 / (PI * z)).sqrt() + 2.0 / (PI * z), "z = {z}");
    }
}

#[test]
fn wronskian() {
    for z in [0.01, 0.7, 3.0, 9.5, 17.0, 40.0, 300.0] {
        let h0 = hankel1_0(z).unwrap();
        let h1 = hankel1_1(z).unwrap();
        let w = h1.re * h0.im - h0.re * h1.im;
        let expect = 2.0 / (PI * z);
        assert!((w - expect).abs() <= 1e-10 * expect, "z = {z}");
    }
}

#[test]
fn large_argument_modulus() {
    let z = 1000.0;
    let h0 = hankel1_0(z).unwrap();
    assert!((h0.norm() * (PI * z / 2.0).sqrt() - 1.0).abs() < 1e-4);
}

#[test]
fn derivative_relation() {
    for z in [0.3, 2.0, 7.7, 15.0, 33.0] {
        let h = 1e-5 * z;
        let d = (hankel1_0(z + h).unwrap() - hankel1_0(z - h).unwrap()) / (2.0 * h);
        assert!(rel(d, -hankel1_1(z).unwrap()) < 1e-6, "z = {z}");
    }
}

#[test]
fn small_argument_limits() {
    let z = 1e-8;
    let h0 = hankel1_0(z).unwrap();
    let h1 = hankel1_1(z).unwrap();
    assert!((h0.re - 1.0).abs() < 1e-12);
    assert!(h0.im < -10.0 && h1.im < -1e6);
}
