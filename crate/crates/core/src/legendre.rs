//! Monic orthogonal polynomials in `L²(μ)` built exactly from the moment sequence.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{MomentKind, MomentSequence};
use crate::rational::{self, Rational};
use crate::weights::WeightVector;

/// Exact polynomial, coefficients from the constant term up.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    pub coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        Polynomial { coeffs }
    }

    pub fn one() -> Self {
        Polynomial::new(vec![Rational::one()])
    }

    /// `x^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        Polynomial { coeffs }
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(One::is_one)
    }

    /// Exact Horner evaluation.
    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        eval_f64(&self.as_f64(), x)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational::to_f64).collect()
    }

    /// `p(1 − x)`, computed by expanding each `(1 − x)^i`.
    pub fn reflect(&self) -> Polynomial {
        let mut out = vec![Rational::zero(); self.coeffs.len()];
        let mut binom: Vec<Rational> = vec![Rational::one()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                let mut next = vec![Rational::one(); i + 1];
                for j in 1..i {
                    next[j] = &binom[j - 1] + &binom[j];
                }
                binom = next;
            }
            for (j, b) in binom.iter().enumerate() {
                let term = c * b;
                if j % 2 == 0 {
                    out[j] += term;
                } else {
                    out[j] -= term;
                }
            }
        }
        Polynomial::new(out)
    }

    fn sub_scaled(&self, other: &Polynomial, scale: &Rational) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                match other.coeffs.get(i) {
                    Some(b) => a - b * scale,
                    None => a,
                }
            })
            .collect();
        Polynomial::new(coeffs)
    }

    /// `(x − c) · self`.
    fn times_linear(&self, c: &Rational) -> Polynomial {
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            coeffs[i + 1] += a;
            coeffs[i] -= a * c;
        }
        Polynomial::new(coeffs)
    }
}

/// Horner on float coefficients, constant term first.
pub fn eval_f64(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `⟨p, q⟩ = Σ_{i,j} p_i q_j I_{i+j}`.
pub fn inner_product(p: &Polynomial, q: &Polynomial, moments: &MomentSequence) -> Result<Rational> {
    moments.require(MomentKind::Raw, p.degree() + q.degree() + 1)?;
    let mut total = Rational::zero();
    for (i, a) in p.coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in q.coeffs.iter().enumerate() {
            if !b.is_zero() {
                total += a * b * &moments.values[i + j];
            }
        }
    }
    Ok(total)
}

/// Monic orthogonal polynomials `p_0..=p_d` with their squared norms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthoBasis {
    pub polys: Vec<Polynomial>,
    pub norms_sq: Vec<Rational>,
}

impl OrthoBasis {
    pub fn degree(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&BasisJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: BasisJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let polys = raw
            .polys
            .iter()
            .map(|p| rational::parse_slice(p).map(Polynomial::new))
            .collect::<Result<Vec<_>>>()?;
        let norms_sq = rational::parse_slice(&raw.norms_sq)?;
        if polys.len() != raw.degree + 1 || norms_sq.len() != polys.len() {
            return Err(Error::Parse(format!(
                "degree {} needs {} polynomials and norms",
                raw.degree,
                raw.degree + 1
            )));
        }
        Ok(OrthoBasis { polys, norms_sq })
    }

    /// Coefficients of `p_n / ‖p_n‖` as floats.
    pub fn normalize(&self) -> Result<Vec<Vec<f64>>> {
        self.polys
            .iter()
            .zip(&self.norms_sq)
            .enumerate()
            .map(|(n, (p, norm_sq))| {
                if norm_sq.is_zero() {
                    return Err(Error::ZeroNorm(n));
                }
                let scale = rational::to_f64(norm_sq).sqrt().recip();
                Ok(p.as_f64().into_iter().map(|c| c * scale).collect())
            })
            .collect()
    }

    /// Normalized polynomials sampled at `x = i / grid`, `i = 0..=grid`, as `x,p0,…,pd` rows.
    pub fn plot_csv(&self, grid: usize) -> Result<String> {
        let grid = grid.max(1);
        let normalized = self.normalize()?;
        let mut out = String::from("x");
        for n in 0..normalized.len() {
            write!(out, ",p{n}").unwrap();
        }
        out.push('\n');
        for i in 0..=grid {
            let x = i as f64 / grid as f64;
            write!(out, "{x}").unwrap();
            for p in &normalized {
                write!(out, ",{}", eval_f64(p, x)).unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    degree: usize,
    polys: Vec<Vec<String>>,
    norms_sq: Vec<String>,
}

impl From<&OrthoBasis> for BasisJson {
    fn from(b: &OrthoBasis) -> Self {
        BasisJson {
            degree: b.degree(),
            polys: b
                .polys
                .iter()
                .map(|p| p.coeffs.iter().map(rational::format).collect())
                .collect(),
            norms_sq: b.norms_sq.iter().map(rational::format).collect(),
        }
    }
}

fn nonzero_norm(p: &Polynomial, n: usize, moments: &MomentSequence) -> Result<Rational> {
    let norm = inner_product(p, p, moments)?;
    if norm.is_zero() {
        return Err(Error::ZeroNorm(n));
    }
    Ok(norm)
}

/// `m_0 = 1`, `m_1 = x − 1/2`, `m_{n+2} = (x − 1/2) m_{n+1} − (‖m_{n+1}‖² / ‖m_n‖²) m_n`.
///
/// Valid only for measures symmetric about 1/2, where every `m_n` has parity `(−1)ⁿ`
/// about the midpoint and the diagonal recurrence coefficient vanishes.
pub fn monic_basis_symmetric(
    w: &WeightVector,
    d: usize,
    moments: &MomentSequence,
) -> Result<OrthoBasis> {
    if !w.is_palindromic() {
        return Err(Error::NotPalindromic);
    }
    moments.require(MomentKind::Raw, 2 * d + 1)?;
    let half = rational::ratio(1, 2);
    let mut polys = vec![Polynomial::one()];
    let mut norms_sq = vec![nonzero_norm(&polys[0], 0, moments)?];
    for n in 1..=d {
        let next = polys[n - 1].times_linear(&half);
        let next = if n >= 2 {
            let ratio = &norms_sq[n - 1] / &norms_sq[n - 2];
            next.sub_scaled(&polys[n - 2], &ratio)
        } else {
            next
        };
        norms_sq.push(nonzero_norm(&next, n, moments)?);
        polys.push(next);
    }
    Ok(OrthoBasis { polys, norms_sq })
}

/// Gram–Schmidt on `1, x, x², …` with moment inner products.
pub fn monic_basis_general(d: usize, moments: &MomentSequence) -> Result<OrthoBasis> {
    moments.require(MomentKind::Raw, 2 * d + 1)?;
    let mut polys: Vec<Polynomial> = Vec::with_capacity(d + 1);
    let mut norms_sq: Vec<Rational> = Vec::with_capacity(d + 1);
    for n in 0..=d {
        let x_n = Polynomial::monomial(n);
        let mut p = x_n.clone();
        for (q, norm) in polys.iter().zip(&norms_sq) {
            let coeff = inner_product(&x_n, q, moments)? / norm;
            p = p.sub_scaled(q, &coeff);
        }
        norms_sq.push(nonzero_norm(&p, n, moments)?);
        polys.push(p);
    }
    Ok(OrthoBasis { polys, norms_sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::exact_moments;
    use crate::rational::{int, ratio};

    fn w(s: &str) -> WeightVector {
        s.parse().unwrap()
    }

    fn poly(c: &[(i64, i64)]) -> Polynomial {
        Polynomial::new(c.iter().map(|&(p, q)| ratio(p, q)).collect())
    }

    #[test]
    fn inner_product_examples() {
        let t = exact_moments(&w("1/2,0,1/2"), 4);
        assert_eq!(inner_product(&Polynomial::one(), &Polynomial::one(), &t).unwrap(), int(1));
        let c = poly(&[(-1, 2), (1, 1)]);
        assert_eq!(inner_product(&c, &c, &t).unwrap(), ratio(1, 8));
        let leb = exact_moments(&w("1/3,1/3,1/3"), 2);
        assert_eq!(inner_product(&c, &Polynomial::one(), &leb).unwrap(), int(0));
        assert!(matches!(
            inner_product(&Polynomial::monomial(3), &Polynomial::monomial(2), &t),
            Err(Error::InsufficientMoments { needed: 6, available: 5 })
        ));
    }

    #[test]
    fn symmetric_examples() {
        let t = w("1/2,0,1/2");
        let b = monic_basis_symmetric(&t, 2, &exact_moments(&t, 4)).unwrap();
        assert_eq!(b.polys[1], poly(&[(-1, 2), (1, 1)]));
        assert_eq!(b.polys[2], poly(&[(1, 8), (-1, 1), (1, 1)]));
        assert_eq!(b.norms_sq[1], ratio(1, 8));

        let leb = w("1/4,1/4,1/4,1/4");
        let b = monic_basis_symmetric(&leb, 2, &exact_moments(&leb, 4)).unwrap();
        assert_eq!(b.polys[2], poly(&[(1, 6), (-1, 1), (1, 1)]));
        assert_eq!(b.norms_sq[1], ratio(1, 12));

        let p = w("1/5,3/5,1/5");
        let b = monic_basis_symmetric(&p, 1, &exact_moments(&p, 2)).unwrap();
        assert_eq!(b.polys[1], poly(&[(-1, 2), (1, 1)]));

        assert!(matches!(
            monic_basis_symmetric(&w("2/3,1/3"), 1, &exact_moments(&w("2/3,1/3"), 2)),
            Err(Error::NotPalindromic)
        ));
    }

    #[test]
    fn general_examples() {
        let t = w("1/2,0,1/2");
        let m = exact_moments(&t, 6);
        assert_eq!(monic_basis_general(3, &m).unwrap(), monic_basis_symmetric(&t, 3, &m).unwrap());

        assert!(matches!(
            monic_basis_general(1, &exact_moments(&w("0,1"), 2)),
            Err(Error::ZeroNorm(1))
        ));
        let b = monic_basis_general(1, &exact_moments(&w("2/3,1/3"), 2)).unwrap();
        assert_eq!(b.polys[1], poly(&[(-1, 3), (1, 1)]));
    }

    #[test]
    fn eval_examples() {
        let t = w("1/2,0,1/2");
        let b = monic_basis_symmetric(&t, 2, &exact_moments(&t, 4)).unwrap();
        assert_eq!(b.polys[1].eval(&ratio(1, 2)), int(0));
        assert_eq!(b.polys[2].eval(&int(0)), ratio(1, 8));
        assert_eq!(b.polys[2].eval(&int(1)), ratio(1, 8));
        assert!((b.polys[2].eval_f64(0.25) - (0.0625 - 0.25 + 0.125)).abs() < 1e-16);
    }

    #[test]
    fn normalize_examples() {
        let t = w("1/2,0,1/2");
        let b = monic_basis_symmetric(&t, 1, &exact_moments(&t, 2)).unwrap();
        let n = b.normalize().unwrap();
        assert_eq!(n[0], vec![1.0]);
        let s8 = 8f64.sqrt();
        assert!((n[1][0] + s8 / 2.0).abs() < 1e-15 && (n[1][1] - s8).abs() < 1e-15);

        let leb = w("1/2,1/2");
        let b = monic_basis_symmetric(&leb, 1, &exact_moments(&leb, 2)).unwrap();
        let n = b.normalize().unwrap();
        assert!((n[1][1] - 12f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn reflect_flips_odd_parity() {
        let p = poly(&[(-1, 2), (1, 1)]);
        assert_eq!(p.reflect(), poly(&[(1, 2), (-1, 1)]));
        let q = poly(&[(1, 8), (-1, 1), (1, 1)]);
        assert_eq!(q.reflect(), q);
    }

    #[test]
    fn json_round_trip_and_plot() {
        let t = w("1/2,0,1/2");
        let b = monic_basis_symmetric(&t, 2, &exact_moments(&t, 4)).unwrap();
        let js = b.to_json();
        assert!(js.starts_with("{\"degree\":2,\"polys\":[[\"1/1\"],[\"-1/2\",\"1/1\"],"));
        assert_eq!(OrthoBasis::from_json(&js).unwrap(), b);
        let csv = b.plot_csv(4).unwrap();
        assert!(csv.starts_with("x,p0,p1,p2\n0,1,"));
        assert_eq!(csv.lines().count(), 6);
    }
}
