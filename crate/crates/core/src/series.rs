//! Truncated exponential generating functions in `s` and their products.
//!
//! Coefficient `n` of a [`TruncatedSeries`] is the coefficient of `sⁿ`, so for a
//! moment generating function it stores `moment_n / n!`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::weights::WeightVector;

/// Degree at and above which [`series_mul_trunc`] switches to FFT convolution.
pub const DEFAULT_FFT_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    pub coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        TruncatedSeries { coeffs }
    }

    /// The constant series `1` of the given degree.
    pub fn one(degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = 1.0;
        TruncatedSeries { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    /// `n! · coeffs[n]`, built with an incremental factorial. Entries overflow to
    /// infinity past `n ≈ 170` unless the coefficients decay like `1/n!`.
    pub fn moments(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                if n > 0 {
                    fact *= n as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn truncate(&mut self, degree: usize) {
        self.coeffs.resize(degree + 1, 0.0);
    }
}

/// Degree-`m` truncation of `Σ_ℓ α_ℓ exp(ℓ s / N^r)`:
/// `coeffs[n] = Σ_ℓ α_ℓ (ℓ / N^r)ⁿ / n!`.
pub fn truncated_factor(w: &WeightVector, m: usize, scale_power: u32) -> TruncatedSeries {
    let grid = (w.n_branches() as f64).powi(scale_power as i32);
    let mut coeffs = vec![0.0; m + 1];
    for (l, alpha) in w.as_f64().into_iter().enumerate() {
        if alpha == 0.0 {
            continue;
        }
        let x = l as f64 / grid;
        let mut term = alpha;
        for (n, c) in coeffs.iter_mut().enumerate() {
            if n > 0 {
                term *= x / n as f64;
            }
            *c += term;
        }
    }
    TruncatedSeries { coeffs }
}

/// `F(s · factor)`: coefficient `n` is multiplied by `factorⁿ`.
pub fn rescale_argument(a: &TruncatedSeries, factor: f64) -> TruncatedSeries {
    let mut pow = 1.0;
    let coeffs = a
        .coeffs
        .iter()
        .map(|c| {
            let v = c * pow;
            pow *= factor;
            v
        })
        .collect();
    TruncatedSeries { coeffs }
}

/// Degree-`m` truncation of `a · b`; missing coefficients count as zero.
pub fn series_mul_trunc(a: &TruncatedSeries, b: &TruncatedSeries, m: usize) -> TruncatedSeries {
    series_mul_trunc_with(a, b, m, DEFAULT_FFT_THRESHOLD)
}

pub fn series_mul_trunc_with(
    a: &TruncatedSeries,
    b: &TruncatedSeries,
    m: usize,
    fft_threshold: usize,
) -> TruncatedSeries {
    TruncatedSeries {
        coeffs: if m >= fft_threshold {
            convolve_fft(&a.coeffs, &b.coeffs, m)
        } else {
            convolve_schoolbook(&a.coeffs, &b.coeffs, m)
        },
    }
}

/// Direct `O(m²)` truncated convolution.
pub fn convolve_schoolbook(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    for (i, &x) in a.iter().enumerate().take(m + 1) {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

thread_local! {
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
}

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(len), p.plan_fft_inverse(len))
    })
}

/// Truncated convolution through one complex FFT of length ≥ `len(a) + len(b) − 1`.
///
/// Both real inputs ride in one complex signal `a + i·b`; the product spectrum is
/// `(Z(k)² − conj(Z(−k))²) / 4i`.
pub fn convolve_fft(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let la = a.len().min(m + 1);
    let lb = b.len().min(m + 1);
    if la == 0 || lb == 0 {
        return vec![0.0; m + 1];
    }
    let len = (la + lb - 1).next_power_of_two();
    let (forward, inverse) = plans(len);
    let mut z: Vec<Complex<f64>> = (0..len)
        .map(|i| {
            Complex::new(
                if i < la { a[i] } else { 0.0 },
                if i < lb { b[i] } else { 0.0 },
            )
        })
        .collect();
    forward.process(&mut z);
    let mut prod = vec![Complex::new(0.0, 0.0); len];
    for k in 0..len {
        let zk = z[k];
        let zc = z[(len - k) % len].conj();
        // A(k) = (zk + zc)/2, B(k) = (zk − zc)/(2i)
        prod[k] = (zk * zk - zc * zc) * Complex::new(0.0, -0.25);
    }
    inverse.process(&mut prod);
    let scale = 1.0 / len as f64;
    let mut out: Vec<f64> = prod.iter().take(m + 1).map(|c| c.re * scale).collect();
    out.resize(m + 1, 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn factor_examples() {
        let dirac0: WeightVector = "1,0,0".parse().unwrap();
        assert_eq!(truncated_factor(&dirac0, 4, 3).coeffs, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let t: WeightVector = "1/2,0,1/2".parse().unwrap();
        assert!(close(&truncated_factor(&t, 2, 1).coeffs, &[1.0, 1.0 / 3.0, 1.0 / 9.0], 1e-16));
        let d1: WeightVector = "0,1".parse().unwrap();
        assert!(close(&truncated_factor(&d1, 1, 2).coeffs, &[1.0, 0.25], 0.0));
    }

    #[test]
    fn mul_examples() {
        let a = TruncatedSeries::new(vec![0.3, 0.7, 1.1]);
        assert_eq!(series_mul_trunc(&a, &TruncatedSeries::one(2), 2), a);
        let lin = TruncatedSeries::new(vec![1.0, 1.0]);
        assert_eq!(series_mul_trunc(&lin, &lin, 2).coeffs, vec![1.0, 2.0, 1.0]);
        let e2 = TruncatedSeries::new(vec![1.0, 1.0, 0.5]);
        assert_eq!(series_mul_trunc(&e2, &e2, 2).coeffs, vec![1.0, 2.0, 2.0]);
        // FFT path on the same inputs
        assert!(close(&series_mul_trunc_with(&e2, &e2, 2, 0).coeffs, &[1.0, 2.0, 2.0], 1e-15));
    }

    #[test]
    fn rescale_examples() {
        let a = TruncatedSeries::new(vec![1.0, 1.0, 0.5]);
        assert_eq!(rescale_argument(&a, 1.0), a);
        assert!(close(&rescale_argument(&a, 1.0 / 3.0).coeffs, &[1.0, 1.0 / 3.0, 1.0 / 18.0], 1e-17));
        let c = TruncatedSeries::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(rescale_argument(&c, 7.5), c);
    }

    #[test]
    fn missing_coefficients_are_zero() {
        let a = TruncatedSeries::new(vec![1.0]);
        let b = TruncatedSeries::new(vec![2.0, 3.0]);
        assert_eq!(series_mul_trunc(&a, &b, 3).coeffs, vec![2.0, 3.0, 0.0, 0.0]);
        assert!(close(&series_mul_trunc_with(&a, &b, 3, 0).coeffs, &[2.0, 3.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn fft_agrees_with_schoolbook() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &deg in &[1usize, 17, 64, 255, 1000, 4096] {
            let a: Vec<f64> = (0..=deg).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..=deg).map(|_| rng.gen::<f64>()).collect();
            let naive = convolve_schoolbook(&a, &b, deg);
            let fast = convolve_fft(&a, &b, deg);
            let scale = naive.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = naive.iter().zip(&fast).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(err <= 1e-12 * scale, "degree {deg}: {err} vs scale {scale}");
        }
    }

    #[test]
    fn moments_undo_the_factorials() {
        let s = TruncatedSeries::new(vec![1.0, 0.5, 0.375 / 2.0, 0.3125 / 6.0]);
        assert!(close(&s.moments(), &[1.0, 0.5, 0.375, 0.3125], 1e-16));
    }
}
