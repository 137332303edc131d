//! Independent reference implementations checked against the library.

mod common;

use common::{exact, exact_quadratic, hclust_exhaustive as hclust_oracle};
use degradex::cluster::{self, FeatureMatrix, Linkage};
use degradex::rng::rng_from_seed;
use degradex::trajectory::quadratic_fit;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};
use rand::Rng;

fn random_points(seed: u64, grid: bool) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(2..=12);
    let dim = rng.random_range(1..=4);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| if grid { rng.random_range(0..4) as f64 } else { rng.random_range(-5.0..5.0) })
                .collect()
        })
        .collect()
}

fn matrix(points: Vec<Vec<f64>>) -> FeatureMatrix {
    let ids = (0..points.len()).map(|i| format!("p{i}")).collect();
    let cols = (0..points[0].len()).map(|j| format!("x{j}")).collect();
    FeatureMatrix::new(ids, cols, points).unwrap()
}

#[test]
fn hclust_matches_exhaustive_oracle() {
    for linkage in [Linkage::Complete, Linkage::WardD, Linkage::WardD2] {
        for seed in 0..50 {
            let pts = random_points(seed, false);
            let expected = hclust_oracle(&pts, linkage);
            let tree = cluster::hclust(&matrix(pts), linkage).unwrap();
            assert_eq!(tree.merges.len(), expected.len());
            for (m, (a, b, h)) in tree.merges.iter().zip(&expected) {
                assert_eq!((m.left, m.right), (*a, *b), "{linkage} seed {seed}");
                assert!((m.height - h).abs() <= 1e-10, "{linkage} seed {seed}: {} vs {h}", m.height);
            }
        }
    }
}

#[test]
fn hclust_tie_breaking_matches_oracle_on_grids() {
    for seed in 100..150 {
        let pts = random_points(seed, true);
        let expected = hclust_oracle(&pts, Linkage::Complete);
        let tree = cluster::hclust(&matrix(pts), Linkage::Complete).unwrap();
        let got: Vec<(usize, usize, f64)> = tree.merges.iter().map(|m| (m.left, m.right, m.height)).collect();
        assert_eq!(got, expected, "seed {seed}");
    }
}

#[test]
fn quadratic_fit_matches_exact_least_squares() {
    let mut rng = rng_from_seed(17);
    for trial in 0..200 {
        let offset = if trial % 2 == 0 { 0.0 } else { rng.random_range(0.0..500.0) };
        let ts: Vec<f64> = if trial % 3 == 0 {
            vec![0.0, 250.0, 500.0, 1000.0, 2000.0]
        } else {
            let mut t: Vec<f64> = (0..rng.random_range(3..12)).map(|_| rng.random_range(0.0..2000.0f64).round()).collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            while t.len() < 3 {
                t.push(t.last().unwrap() + 1.0);
            }
            t
        }
        .into_iter()
        .map(|t| t + offset)
        .collect();
        let (a, b, c) = (rng.random_range(2.0..4.2), rng.random_range(-1e-3..1e-3), rng.random_range(-1e-6..1e-6));
        let ys: Vec<f64> = ts.iter().map(|t| a + b * t + c * t * t + rng.random_range(-0.05..0.05)).collect();
        let fit = quadratic_fit(&ts, &ys).unwrap();
        let reference = exact_quadratic(&ts, &ys);
        // Compare on the natural scale of each coefficient's contribution.
        let span = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let scale = [1.0, span, span * span];
        for i in 0..3 {
            let diff = (fit.coefficients()[i] - reference[i]).abs() * scale[i];
            assert!(diff <= 1e-8 * (1.0 + a.abs()), "trial {trial} c{i}: {} vs {}", fit.coefficients()[i], reference[i]);
        }
    }
}

#[test]
fn quadratic_fit_residuals_are_orthogonal_to_design() {
    let mut rng = rng_from_seed(23);
    for _ in 0..200 {
        let ts = [0.0, 250.0, 500.0, 1000.0, 2000.0];
        let ys: Vec<f64> = ts.iter().map(|_| rng.random_range(3.0..4.2)).collect();
        let fit = quadratic_fit(&ts, &ys).unwrap();
        let exact_fit = [fit.c0, fit.c1, fit.c2].map(exact);
        for power in 0..3i32 {
            let mut dot = BigRational::zero();
            let mut norm = BigRational::zero();
            for (&t, &y) in ts.iter().zip(&ys) {
                let te = exact(t);
                let pred = &exact_fit[0] + &te * (&exact_fit[1] + &te * &exact_fit[2]);
                let w = num::pow(te.clone(), power as usize);
                dot = dot + (exact(y) - pred) * &w;
                norm = norm + (exact(y) * &w).abs();
            }
            let rel = (dot.abs() / norm).to_f64().unwrap();
            assert!(rel <= 1e-8, "power {power}: {rel}");
        }
    }
}

#[test]
fn exact_quadratics_are_recovered() {
    let ts = [0.0, 250.0, 500.0, 1000.0, 2000.0];
    let (c0, c1, c2) = (3.7, 4.0e-4, -1.5e-7);
    let ys: Vec<f64> = ts.iter().map(|t| c0 + c1 * t + c2 * t * t).collect();
    let fit = quadratic_fit(&ts, &ys).unwrap();
    assert!((fit.c0 - c0).abs() <= 1e-9);
    assert!((fit.c1 - c1).abs() <= 1e-9);
    assert!((fit.c2 - c2).abs() <= 1e-9);
    assert!((fit.r2 - 1.0).abs() <= 1e-9);
}
