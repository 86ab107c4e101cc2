//! Exact CDF samples on the `N`-adic grid `S_k` and their piecewise-linear interpolant.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::weights::{DepthCap, WeightVector};

/// `F` sampled at `x_j = j / N^k`, `j = 0..=N^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    n_branches: usize,
    depth: u32,
    values: Vec<Rational>,
}

impl CdfTable {
    pub fn n_branches(&self) -> usize {
        self.n_branches
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of cells, `N^k`.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    /// `F_j` for `j = 0..=N^k`.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn x(&self, j: usize) -> Rational {
        Rational::new(BigInt::from(j), BigInt::from(self.cells()))
    }

    pub fn points(&self) -> impl Iterator<Item = (Rational, &Rational)> + '_ {
        self.values.iter().enumerate().map(|(j, f)| (self.x(j), f))
    }

    /// Exact value of the interpolant at a rational `x ∈ [0, 1]`.
    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() || x > &Rational::one() {
            return Err(Error::OutOfDomain(rational::format(x)));
        }
        let scaled = x * BigInt::from(self.cells());
        let j = scaled.floor().to_integer().to_usize().expect("index within table");
        if j == self.cells() {
            return Ok(self.values[j].clone());
        }
        let t = scaled - Rational::from_integer(BigInt::from(j));
        Ok(&self.values[j] + t * (&self.values[j + 1] - &self.values[j]))
    }

    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        let scaled = x * self.cells() as f64;
        let j = (scaled.floor() as usize).min(self.cells());
        let f0 = rational::to_f64(&self.values[j]);
        if j == self.cells() {
            return Ok(f0);
        }
        let f1 = rational::to_f64(&self.values[j + 1]);
        Ok(f0 + (scaled - j as f64) * (f1 - f0))
    }

    /// Largest single-cell increment `max_j (F_{j+1} − F_j)`.
    pub fn max_increment(&self) -> Rational {
        self.values
            .windows(2)
            .map(|p| &p[1] - &p[0])
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,F\n");
        for (x, f) in self.points() {
            writeln!(out, "{},{}", rational::format(&x), rational::format(f)).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CdfJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: CdfJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        CdfTable::try_from(raw)
    }
}

#[derive(Serialize, Deserialize)]
struct CdfJson {
    depth: u32,
    points: Vec<[String; 2]>,
}

impl From<&CdfTable> for CdfJson {
    fn from(t: &CdfTable) -> Self {
        CdfJson {
            depth: t.depth,
            points: t
                .points()
                .map(|(x, f)| [rational::format(&x), rational::format(f)])
                .collect(),
        }
    }
}

impl TryFrom<CdfJson> for CdfTable {
    type Error = Error;

    fn try_from(raw: CdfJson) -> Result<Self> {
        let cells = raw.points.len().saturating_sub(1);
        if raw.depth == 0 || cells == 0 {
            return Err(Error::Parse("empty CDF table".into()));
        }
        let n = (cells as f64).powf(1.0 / raw.depth as f64).round() as usize;
        if n < 2 || (n as u64).checked_pow(raw.depth) != Some(cells as u64) {
            return Err(Error::Parse(format!(
                "{} points is not N^{} + 1",
                raw.points.len(),
                raw.depth
            )));
        }
        let mut values = Vec::with_capacity(raw.points.len());
        for (j, [x, f]) in raw.points.iter().enumerate() {
            if rational::parse(x)? != Rational::new(BigInt::from(j), BigInt::from(cells)) {
                return Err(Error::Parse(format!("point {j} has x = {x}, off the grid")));
            }
            values.push(rational::parse(f)?);
        }
        Ok(CdfTable {
            n_branches: n,
            depth: raw.depth,
            values,
        })
    }
}

pub fn cdf_table(w: &WeightVector, k: u32) -> Result<CdfTable> {
    cdf_table_capped(w, k, DepthCap::default())
}

/// `F_j` = cumulative sums of the depth-`k` Kronecker power.
///
/// Runs over a common denominator `D^k` so the `N^k` partial sums are integer additions.
pub fn cdf_table_capped(w: &WeightVector, k: u32, cap: DepthCap) -> Result<CdfTable> {
    if k == 0 {
        return Err(Error::Parse("depth must be a positive integer".into()));
    }
    let cells = cap.cells(w.n_branches(), k)?;
    let denom = w
        .weights()
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
    let scaled: Vec<BigInt> = w
        .weights()
        .iter()
        .map(|a| a.numer() * (&denom / a.denom()))
        .collect();

    let mut masses = scaled.clone();
    for _ in 1..k {
        let prev = std::mem::take(&mut masses);
        masses = scaled
            .iter()
            .flat_map(|a| prev.iter().map(move |b| b * a))
            .collect();
    }
    debug_assert_eq!(masses.len(), cells);

    let total = num_traits::pow(denom, k as usize);
    let mut values = Vec::with_capacity(cells + 1);
    let mut acc = BigInt::zero();
    values.push(Rational::zero());
    for m in &masses {
        acc += m;
        values.push(Rational::new(acc.clone(), total.clone()));
    }
    Ok(CdfTable {
        n_branches: w.n_branches(),
        depth: k,
        values,
    })
}

/// `max_j |F_a(x_j) − F_b(x_j)|`, which is the sup norm of the difference of the interpolants.
pub fn cdf_sup_distance(a: &CdfTable, b: &CdfTable) -> Result<Rational> {
    if a.n_branches != b.n_branches || a.depth != b.depth {
        return Err(Error::MeshMismatch(format!(
            "N={}, k={} vs N={}, k={}",
            a.n_branches, a.depth, b.n_branches, b.depth
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or_else(Rational::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::weights::{interval_mass, kronecker_power, digits_of};

    fn w(s: &str) -> WeightVector {
        s.parse().unwrap()
    }

    #[test]
    fn ternary_depth_one() {
        let t = cdf_table(&w("1/2,0,1/2"), 1).unwrap();
        let pts: Vec<_> = t.points().map(|(x, f)| (x, f.clone())).collect();
        assert_eq!(
            pts,
            vec![
                (int(0), int(0)),
                (ratio(1, 3), ratio(1, 2)),
                (ratio(2, 3), ratio(1, 2)),
                (int(1), int(1)),
            ]
        );
    }

    #[test]
    fn uniform_is_identity() {
        let t = cdf_table(&w("1/3,1/3,1/3"), 1).unwrap();
        assert_eq!(t.values(), &[int(0), ratio(1, 3), ratio(2, 3), int(1)]);
        let t = cdf_table(&WeightVector::uniform(4).unwrap(), 3).unwrap();
        for j in 0..=64 {
            assert_eq!(t.values()[j], ratio(j as i64, 64));
        }
    }

    #[test]
    fn dirac_at_one_is_a_step() {
        let t = cdf_table(&w("0,1"), 2).unwrap();
        assert_eq!(t.values(), &[int(0), int(0), int(0), int(0), int(1)]);
    }

    #[test]
    fn eval_examples() {
        let t = cdf_table(&w("1/2,0,1/2"), 1).unwrap();
        assert_eq!(t.eval(&ratio(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(t.eval(&ratio(1, 6)).unwrap(), ratio(1, 4));
        assert_eq!(t.eval(&int(1)).unwrap(), int(1));
        assert!((t.eval_f64(1.0 / 6.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(t.eval_f64(1.0).unwrap(), 1.0);
        assert!(matches!(t.eval(&ratio(3, 2)), Err(Error::OutOfDomain(_))));
        assert!(matches!(t.eval_f64(-0.1), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn sup_distance_examples() {
        let a = cdf_table(&w("1/2,0,1/2"), 1).unwrap();
        let b = cdf_table(&w("1/3,1/3,1/3"), 1).unwrap();
        assert_eq!(cdf_sup_distance(&a, &a).unwrap(), int(0));
        assert_eq!(cdf_sup_distance(&a, &b).unwrap(), ratio(1, 6));
        let c = cdf_table(&w("0,1/2,1/2"), 1).unwrap();
        let d = cdf_table(&w("1/2,1/2,0"), 1).unwrap();
        assert_eq!(cdf_sup_distance(&c, &d).unwrap(), ratio(1, 2));
        let e = cdf_table(&w("1/2,0,1/2"), 2).unwrap();
        assert!(matches!(cdf_sup_distance(&a, &e), Err(Error::MeshMismatch(_))));
    }

    #[test]
    fn increments_match_digit_products() {
        let v = w("1/6,1/2,1/3");
        let t = cdf_table(&v, 3).unwrap();
        for j in 0..27 {
            let inc = &t.values()[j + 1] - &t.values()[j];
            assert_eq!(inc, interval_mass(&v, &digits_of(j, 3, 3)).unwrap());
        }
        let beta = kronecker_power(&v, 3).unwrap();
        assert_eq!(cdf_table(&beta, 1).unwrap().values(), t.values());
    }

    #[test]
    fn json_round_trip() {
        let t = cdf_table(&w("1/5,2/5,2/5"), 2).unwrap();
        let back = CdfTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_json().starts_with("{\"depth\":2,\"points\":[[\"0/1\",\"0/1\"],"));
    }

    #[test]
    fn csv_layout() {
        let t = cdf_table(&w("1/2,0,1/2"), 1).unwrap();
        assert_eq!(t.to_csv(), "x,F\n0/1,0/1\n1/3,1/2\n2/3,1/2\n1/1,1/1\n");
    }
}
