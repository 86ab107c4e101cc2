//! Weight vectors on the simplex and their Kronecker powers.
//!
//! A weight vector `α = (α_0, …, α_{N-1})` drives the contraction maps
//! `x ↦ (x + n) / N`. Its `k`-fold Kronecker power `β` is indexed by
//! `n = n_0 + n_1 N + … + n_{k-1} N^{k-1}` with `n_0` the least-significant
//! base-`N` digit, and `β_n = Π α_{n_ℓ}`. Every module that walks digit
//! tuples uses this order.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Default ceiling on `N^k`, the number of entries in a depth-`k` table.
pub const DEFAULT_DEPTH_CAP: u64 = 43_046_721; // 3^16

/// Environment variable that overrides [`DEFAULT_DEPTH_CAP`] in the CLI.
pub const DEPTH_CAP_ENV: &str = "CANTOR_DEPTH_CAP";

/// Upper bound on `N^k` for operations that enumerate all depth-`k` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthCap(pub u64);

impl Default for DepthCap {
    fn default() -> Self {
        DepthCap(DEFAULT_DEPTH_CAP)
    }
}

impl DepthCap {
    /// Reads `CANTOR_DEPTH_CAP`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(DEPTH_CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse::<u64>()
                .map(DepthCap)
                .map_err(|_| Error::Parse(format!("{DEPTH_CAP_ENV}={v:?} is not a positive integer"))),
            Err(_) => Ok(DepthCap::default()),
        }
    }

    /// Returns `N^k` as a `usize` if it is within the cap.
    pub fn cells(&self, n_branches: usize, depth: u32) -> Result<usize> {
        let overflow = || Error::DepthOverflow {
            n_branches,
            depth,
            cap: self.0,
        };
        let cells = (n_branches as u64).checked_pow(depth).ok_or_else(overflow)?;
        if cells > self.0 || cells > usize::MAX as u64 {
            return Err(overflow());
        }
        Ok(cells as usize)
    }
}

/// A validated point of the simplex `△_N`: nonnegative exact rationals summing to 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    weights: Vec<Rational>,
}

impl WeightVector {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::TooFewBranches(weights.len()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
            return Err(Error::NotASimplexPoint(format!(
                "weight {i} is negative ({})",
                rational::format(w)
            )));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::NotASimplexPoint(format!(
                "weights sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(WeightVector { weights })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(p, q)| rational::ratio(p, q)).collect())
    }

    /// The uniform vector `(1/N, …, 1/N)`; its measure is Lebesgue measure on `[0, 1]`.
    pub fn uniform(n_branches: usize) -> Result<Self> {
        Self::new(vec![rational::ratio(1, n_branches as i64); n_branches])
    }

    /// The standard basis vector `e_n`; its measure is the point mass at `n / (N - 1)`.
    pub fn dirac(n_branches: usize, n: usize) -> Result<Self> {
        let mut w = vec![Rational::zero(); n_branches];
        if n >= n_branches {
            return Err(Error::BadDigit {
                digit: n,
                position: 0,
                n_branches,
            });
        }
        w[n] = Rational::one();
        Self::new(w)
    }

    pub fn n_branches(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn get(&self, n: usize) -> &Rational {
        &self.weights[n]
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.weights.iter().map(rational::to_f64).collect()
    }

    /// `α_{N-1-n} = α_n` for every `n`; equivalent to the measure being symmetric about 1/2.
    pub fn is_palindromic(&self) -> bool {
        self.weights.iter().eq(self.weights.iter().rev())
    }

    /// Some weight equals 1, so the measure is a point mass.
    pub fn is_degenerate(&self) -> bool {
        self.dirac_index().is_some()
    }

    /// Every weight is below 1 (membership in `△_N*`).
    pub fn is_interior(&self) -> bool {
        !self.is_degenerate()
    }

    pub fn dirac_index(&self) -> Option<usize> {
        self.weights.iter().position(|w| w.is_one())
    }

    pub fn max_weight(&self) -> &Rational {
        self.weights.iter().max().expect("at least two weights")
    }

    pub fn last(&self) -> &Rational {
        self.weights.last().expect("at least two weights")
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    /// Parses `"1/2,0,1/2"`.
    fn from_str(s: &str) -> Result<Self> {
        Self::new(rational::parse_list(s)?)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `α^{⊗k}` with the default depth cap.
pub fn kronecker_power(w: &WeightVector, k: u32) -> Result<WeightVector> {
    kronecker_power_capped(w, k, DepthCap::default())
}

pub fn kronecker_power_capped(w: &WeightVector, k: u32, cap: DepthCap) -> Result<WeightVector> {
    Ok(WeightVector {
        weights: kronecker_entries(w, k, cap)?,
    })
}

/// Entries `β_n = Π α_{n_ℓ}`, least-significant digit first.
pub(crate) fn kronecker_entries(w: &WeightVector, k: u32, cap: DepthCap) -> Result<Vec<Rational>> {
    if k == 0 {
        return Err(Error::Parse("depth must be a positive integer".into()));
    }
    let cells = cap.cells(w.n_branches(), k)?;
    let mut beta = w.weights.clone();
    beta.reserve(cells - beta.len());
    for _ in 1..k {
        // digit d at the new most-significant position: index d * len + n
        let prev = std::mem::take(&mut beta);
        beta = w
            .weights
            .iter()
            .flat_map(|a| prev.iter().map(move |b| b * a))
            .collect();
    }
    Ok(beta)
}

/// The measure of the depth-`k` cell addressed by `digits` (`n_0` first): `Π α_{n_ℓ}`.
pub fn interval_mass(w: &WeightVector, digits: &[usize]) -> Result<Rational> {
    let n = w.n_branches();
    let mut mass = Rational::one();
    for (position, &digit) in digits.iter().enumerate() {
        if digit >= n {
            return Err(Error::BadDigit {
                digit,
                position,
                n_branches: n,
            });
        }
        mass *= &w.weights[digit];
    }
    Ok(mass)
}

/// Base-`n` digits of `index`, least-significant first, padded to `depth`.
pub fn digits_of(mut index: usize, n: usize, depth: u32) -> Vec<usize> {
    (0..depth)
        .map(|_| {
            let d = index % n;
            index /= n;
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ternary() -> WeightVector {
        WeightVector::from_ratios(&[(1, 2), (0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn ternary_is_palindromic_interior() {
        let w = ternary();
        assert!(w.is_palindromic());
        assert!(w.is_interior());
        assert!(!w.is_degenerate());
    }

    #[test]
    fn dirac_at_one_is_degenerate() {
        let w: WeightVector = "0,1".parse().unwrap();
        assert!(w.is_degenerate());
        assert_eq!(w.dirac_index(), Some(1));
        assert!(!w.is_palindromic());
    }

    #[test]
    fn rejects_non_simplex_points() {
        assert!(matches!(
            "1/2,1/3".parse::<WeightVector>(),
            Err(Error::NotASimplexPoint(_))
        ));
        assert!(matches!(
            "3/2,-1/2".parse::<WeightVector>(),
            Err(Error::NotASimplexPoint(_))
        ));
        assert!(matches!("1".parse::<WeightVector>(), Err(Error::TooFewBranches(1))));
    }

    #[test]
    fn kronecker_examples() {
        let w = ternary();
        assert_eq!(kronecker_power(&w, 1).unwrap(), w);
        let q = ratio(1, 4);
        let z = ratio(0, 1);
        let expected = vec![
            q.clone(),
            z.clone(),
            q.clone(),
            z.clone(),
            z.clone(),
            z.clone(),
            q.clone(),
            z,
            q,
        ];
        assert_eq!(kronecker_power(&w, 2).unwrap().weights(), &expected[..]);

        let dirac0: WeightVector = "1,0".parse().unwrap();
        let b = kronecker_power(&dirac0, 3).unwrap();
        assert_eq!(b.weights()[0], ratio(1, 1));
        assert!(b.weights()[1..].iter().all(|x| x.is_zero()));
    }

    #[test]
    fn kronecker_digit_order_is_least_significant_first() {
        let w = WeightVector::from_ratios(&[(1, 6), (1, 3), (1, 2)]).unwrap();
        let b = kronecker_power(&w, 3).unwrap();
        for n in 0..27 {
            let d = digits_of(n, 3, 3);
            assert_eq!(b.weights()[n], interval_mass(&w, &d).unwrap());
        }
        // n = 1 = (n_0 = 1, n_1 = 0, n_2 = 0)
        assert_eq!(b.weights()[1], ratio(1, 3) * ratio(1, 6) * ratio(1, 6));
    }

    #[test]
    fn depth_cap_is_enforced() {
        let w = ternary();
        assert!(matches!(
            kronecker_power(&w, 17),
            Err(Error::DepthOverflow { .. })
        ));
        assert!(matches!(
            kronecker_power_capped(&w, 3, DepthCap(26)),
            Err(Error::DepthOverflow { .. })
        ));
        assert!(kronecker_power_capped(&w, 3, DepthCap(27)).is_ok());
    }

    #[test]
    fn interval_mass_examples() {
        let w = ternary();
        assert_eq!(interval_mass(&w, &[0]).unwrap(), ratio(1, 2));
        assert_eq!(interval_mass(&w, &[1, 2]).unwrap(), ratio(0, 1));
        let u = WeightVector::uniform(3).unwrap();
        assert_eq!(interval_mass(&u, &[2, 2, 2]).unwrap(), ratio(1, 27));
        assert!(matches!(
            interval_mass(&w, &[0, 3]),
            Err(Error::BadDigit { digit: 3, position: 1, .. })
        ));
    }
}
