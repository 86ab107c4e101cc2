//! Exact rational moments `I_m = ∫ x^m dμ` and shifted moments `J_m = ∫ (x − 1/2)^m dμ`.
//!
//! The self-similarity `μ = Σ α_n μ∘φ_n^{-1}` with `φ_n(x) = (x + n)/N` gives, after
//! expanding `((x + n)/N)^m` and isolating the `i = m` term,
//!
//! ```text
//! I_m = 1/(N^m − 1) · Σ_n α_n Σ_{i<m} C(m,i) n^{m−i} I_i.
//! ```
//!
//! Applying the same identity to the depth-`k` Kronecker power (`N^k` branches)
//! gives a second recurrence whose output must coincide for every `k`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::weights::{DepthCap, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    /// `I_m`, moments of the measure on `[0, 1]`.
    Raw,
    /// `J_m`, moments of the measure translated to `[−1/2, 1/2]`.
    Shifted,
}

impl MomentKind {
    fn name(self) -> &'static str {
        match self {
            MomentKind::Raw => "raw",
            MomentKind::Shifted => "shifted",
        }
    }
}

/// Exact moments `values[0..=m]`, with `values[0] = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub kind: MomentKind,
    #[serde(rename = "moments", with = "rational::serde_vec")]
    pub values: Vec<Rational>,
}

impl MomentSequence {
    pub fn raw(values: Vec<Rational>) -> Self {
        MomentSequence {
            kind: MomentKind::Raw,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Highest index held.
    pub fn max_index(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, m: usize) -> Option<&Rational> {
        self.values.get(m)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(rational::to_f64).collect()
    }

    pub(crate) fn require(&self, kind: MomentKind, needed: usize) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongKind {
                expected: kind.name(),
                got: self.kind.name(),
            });
        }
        if self.values.len() < needed {
            return Err(Error::InsufficientMoments {
                needed,
                available: self.values.len(),
            });
        }
        Ok(())
    }

    /// `m,numerator,denominator` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,numerator,denominator\n");
        for (m, v) in self.values.iter().enumerate() {
            writeln!(out, "{m},{},{}", v.numer(), v.denom()).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Row-by-row binomial coefficients `C(m, 0..=m)`.
struct Pascal {
    row: Vec<BigInt>,
}

impl Pascal {
    fn new() -> Self {
        Pascal {
            row: vec![BigInt::one()],
        }
    }

    fn advance(&mut self) {
        let mut next = Vec::with_capacity(self.row.len() + 1);
        next.push(BigInt::one());
        for pair in self.row.windows(2) {
            next.push(&pair[0] + &pair[1]);
        }
        next.push(BigInt::one());
        self.row = next;
    }
}

/// Solves `I_m = 1/(B^m − 1) · (1/D) · Σ_{i<m} C(m,i) t_{m−i} I_i`, `I_0 = 1`, where
/// `t_j / D = Σ_n w_n n^j` is the `j`-th power sum of the branch weights and
/// `B` the branch count.
///
/// All moments are kept over one common denominator so the inner sums are
/// integer multiply-adds; only the new moment is reduced each step.
fn solve_recurrence(base: &BigInt, power_sums: &[BigInt], sums_denom: &BigInt, m_max: usize) -> Vec<Rational> {
    let mut values = vec![Rational::one()];
    let mut common = BigInt::one();
    let mut numers = vec![BigInt::one()];
    let mut pascal = Pascal::new();
    let mut base_pow = BigInt::one();
    for m in 1..=m_max {
        pascal.advance();
        base_pow *= base;
        let mut acc = BigInt::zero();
        for i in 0..m {
            acc += &pascal.row[i] * &power_sums[m - i] * &numers[i];
        }
        let denom = sums_denom * &common * (&base_pow - 1u32);
        let value = Rational::new(acc, denom);
        let next_common = common.lcm(value.denom());
        let lift = &next_common / &common;
        if !lift.is_one() {
            for a in &mut numers {
                *a *= &lift;
            }
        }
        numers.push(value.numer() * (&next_common / value.denom()));
        common = next_common;
        values.push(value);
    }
    values
}

/// Integer numerators of the weights over their least common denominator.
fn integer_weights(w: &WeightVector) -> (Vec<BigInt>, BigInt) {
    let denom = w
        .weights()
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
    let numers = w
        .weights()
        .iter()
        .map(|a| a.numer() * (&denom / a.denom()))
        .collect();
    (numers, denom)
}

/// `t_j = Σ_n c_n n^j` for `j = 0..=m_max`, skipping zero coefficients.
fn power_sums(coeffs: &[BigInt], m_max: usize) -> Vec<BigInt> {
    let mut sums = vec![BigInt::zero(); m_max + 1];
    for (n, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let n = BigInt::from(n);
        let mut term = c.clone();
        for s in sums.iter_mut() {
            *s += &term;
            term *= &n;
        }
    }
    sums
}

/// `I_0..=I_{m_max}` from the single-level recurrence.
pub fn exact_moments(w: &WeightVector, m_max: usize) -> MomentSequence {
    let (numers, denom) = integer_weights(w);
    let sums = power_sums(&numers, m_max);
    let base = BigInt::from(w.n_branches());
    MomentSequence::raw(solve_recurrence(&base, &sums, &denom, m_max))
}

/// [`exact_moments`] over many weight vectors in parallel.
pub fn exact_moments_batch(ws: &[WeightVector], m_max: usize) -> Vec<MomentSequence> {
    ws.par_iter().map(|w| exact_moments(w, m_max)).collect()
}

pub fn exact_moments_via_depth(w: &WeightVector, k: u32, m_max: usize) -> Result<MomentSequence> {
    exact_moments_via_depth_capped(w, k, m_max, DepthCap::default())
}

/// The depth-`k` recurrence: the same identity applied to `α^{⊗k}` with `N^k` branches,
/// whose inner digit sums `Σ_n β_n n^j` are evaluated exactly.
pub fn exact_moments_via_depth_capped(
    w: &WeightVector,
    k: u32,
    m_max: usize,
    cap: DepthCap,
) -> Result<MomentSequence> {
    let cells = cap.cells(w.n_branches(), k)?;
    let (numers, denom) = integer_weights(w);
    let mut beta = numers.clone();
    for _ in 1..k {
        let prev = std::mem::take(&mut beta);
        beta = numers
            .iter()
            .flat_map(|a| prev.iter().map(move |b| b * a))
            .collect();
    }
    debug_assert_eq!(beta.len(), cells);
    let sums = power_sums(&beta, m_max);
    let base = BigInt::from(cells);
    let beta_denom = num_traits::pow(denom, k as usize);
    Ok(MomentSequence::raw(solve_recurrence(&base, &sums, &beta_denom, m_max)))
}

pub fn left_endpoint_estimate(w: &WeightVector, k: u32, m: usize) -> Result<Rational> {
    Ok(left_endpoint_estimates_capped(w, k, m, DepthCap::default())?.swap_remove(m))
}

pub fn left_endpoint_estimates(w: &WeightVector, k: u32, m_max: usize) -> Result<Vec<Rational>> {
    left_endpoint_estimates_capped(w, k, m_max, DepthCap::default())
}

/// Left-endpoint Riemann–Stieltjes sums of `x^j`, `j = 0..=m_max`, on the grid `S_k`:
/// `Σ_{digits} (Π α_{n_ℓ}) · (Σ n_ℓ N^ℓ / N^k)^j`.
///
/// Brute force over all `N^k` digit tuples; never touches the recurrences, so it
/// serves as their oracle. Each value is a lower bound for `I_j`.
pub fn left_endpoint_estimates_capped(
    w: &WeightVector,
    k: u32,
    m_max: usize,
    cap: DepthCap,
) -> Result<Vec<Rational>> {
    let n = w.n_branches();
    let cells = cap.cells(n, k)?;
    let (numers, denom) = integer_weights(w);
    let mut sums = vec![BigInt::zero(); m_max + 1];
    let mut digits = vec![0usize; k as usize];
    for index in 0..cells {
        if index > 0 {
            // odometer increment, n_0 fastest
            for d in digits.iter_mut() {
                *d += 1;
                if *d < n {
                    break;
                }
                *d = 0;
            }
        }
        let mut mass = BigInt::one();
        for &d in &digits {
            mass *= &numers[d];
            if mass.is_zero() {
                break;
            }
        }
        if mass.is_zero() {
            continue;
        }
        let position: usize = digits.iter().rev().fold(0, |acc, &d| acc * n + d);
        let position = BigInt::from(position);
        let mut term = mass;
        for s in sums.iter_mut() {
            *s += &term;
            term *= &position;
        }
    }
    let mass_denom = num_traits::pow(denom, k as usize);
    let grid = BigInt::from(cells);
    let mut grid_pow = BigInt::one();
    Ok(sums
        .into_iter()
        .map(|s| {
            let v = Rational::new(s, &mass_denom * &grid_pow);
            grid_pow *= &grid;
            v
        })
        .collect())
}

/// Smallest `k ≥ 1` with `(1 + N^{−k})^m − 1 ≤ ε`, which guarantees
/// `0 ≤ I_m − left_endpoint_estimate(k, m) < ε`.
///
/// `(1 + N^{−k})^m − 1` is the exact quantity bounded by `exp(m/N^k) − 1` in the
/// standard argument, so the test stays in rational arithmetic.
pub fn approx_error_depth(n_branches: usize, m: usize, eps: &Rational) -> Result<u32> {
    if !eps.is_positive() {
        return Err(Error::BadTolerance(format!(
            "ε must be positive, got {}",
            rational::format(eps)
        )));
    }
    let n = BigInt::from(n_branches);
    let mut k = 1u32;
    loop {
        let grid = num_traits::pow(n.clone(), k as usize);
        let step = Rational::new(&grid + 1u32, grid);
        if rational::pow(&step, m) - Rational::one() <= *eps {
            return Ok(k);
        }
        k += 1;
    }
}

/// `I_m = ½ Σ_{j<m} (−1)^j C(m,j) I_j` for odd `m`, valid when the weights are palindromic.
pub fn palindromic_odd_moment(prefix: &[Rational], m: usize) -> Result<Rational> {
    if m % 2 == 0 {
        return Err(Error::NotOdd(m));
    }
    if prefix.len() < m {
        return Err(Error::InsufficientMoments {
            needed: m,
            available: prefix.len(),
        });
    }
    let mut binom = BigInt::one();
    let mut acc = Rational::zero();
    for (j, value) in prefix.iter().take(m).enumerate() {
        let term = value * &binom;
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        binom = binom * (m - j) / (j + 1);
    }
    Ok(acc / BigInt::from(2))
}

/// `J_m = Σ_j C(m,j) (−1/2)^{m−j} I_j`.
pub fn shifted_moments(raw: &MomentSequence) -> Result<MomentSequence> {
    raw.require(MomentKind::Raw, 0)?;
    // over a common denominator D: 2^m D J_m = Σ_j C(m,j) (−1)^{m−j} 2^j (D I_j)
    let denom = raw
        .values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled: Vec<BigInt> = raw
        .values
        .iter()
        .map(|v| v.numer() * (&denom / v.denom()))
        .collect();
    let mut pascal = Pascal::new();
    let mut values = Vec::with_capacity(raw.len());
    for m in 0..raw.len() {
        if m > 0 {
            pascal.advance();
        }
        let mut total = BigInt::zero();
        for j in 0..=m {
            let term = (&scaled[j] * &pascal.row[j]) << j;
            if (m - j) % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        values.push(Rational::new(total, &denom << m));
    }
    Ok(MomentSequence {
        kind: MomentKind::Shifted,
        values,
    })
}

/// `I_1 = Σ α_n n / (N − 1)`, the mean.
pub fn mean(w: &WeightVector) -> Rational {
    let n = w.n_branches();
    let total: Rational = w
        .weights()
        .iter()
        .enumerate()
        .map(|(i, a)| a * BigInt::from(i))
        .sum();
    total / BigInt::from(n - 1)
}
