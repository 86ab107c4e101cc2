#![allow(dead_code)]

use cantor_core::rational::ratio;
use cantor_core::weights::WeightVector;
use rand::Rng;

/// Weights proportional to integers in `0..=9`, none equal to 1.
pub fn random_interior(rng: &mut impl Rng, n: usize) -> WeightVector {
    loop {
        let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=9)).collect();
        if let Some(w) = from_counts(&raw) {
            if w.is_interior() {
                return w;
            }
        }
    }
}

pub fn random_palindromic(rng: &mut impl Rng, n: usize) -> WeightVector {
    loop {
        let half: Vec<i64> = (0..n.div_ceil(2)).map(|_| rng.gen_range(0..=9)).collect();
        let raw: Vec<i64> = (0..n).map(|i| half[i.min(n - 1 - i)]).collect();
        if let Some(w) = from_counts(&raw) {
            if w.is_interior() {
                return w;
            }
        }
    }
}

/// Interior weights with `α_{N−1} = 0`; needs `N ≥ 3`.
pub fn random_last_zero(rng: &mut impl Rng, n: usize) -> WeightVector {
    assert!(n >= 3, "with N = 2 the only such vector is a point mass");
    loop {
        let mut raw: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=9)).collect();
        raw[n - 1] = 0;
        if let Some(w) = from_counts(&raw) {
            if w.is_interior() {
                return w;
            }
        }
    }
}

pub fn from_counts(raw: &[i64]) -> Option<WeightVector> {
    let total: i64 = raw.iter().sum();
    if total == 0 {
        return None;
    }
    WeightVector::new(raw.iter().map(|&c| ratio(c, total)).collect()).ok()
}
