//! Regularity and decay checks: Hölder exponent of the CDF, moment decay rates,
//! and the Lipschitz dependence of the CDF on the weights.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cdf::{cdf_sup_distance, cdf_table_capped};
use crate::error::{Error, Result};
use crate::moments::{shifted_moments, MomentKind, MomentSequence};
use crate::rational::{self, Rational};
use crate::weights::{DepthCap, WeightVector};

/// `log(1/r) / log N` with `r = max α_n`.
pub fn holder_exponent(w: &WeightVector) -> Result<f64> {
    if let Some(n) = w.dirac_index() {
        return Err(Error::Degenerate(format!(
            "α_{n} = 1: the CDF is a unit step"
        )));
    }
    let r = rational::to_f64(w.max_weight());
    Ok(-r.ln() / (w.n_branches() as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayRegime {
    /// `α_{N−1} = 0`: `I_m ≤ ((N−1)/N)^m`.
    Exponential,
    /// `α_{N−1} > 0`: `I_m ≳ m^{−γ}`.
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub m: usize,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `log_N(1/α_{N−1})`, absent in the exponential regime.
    pub gamma: Option<f64>,
    pub regime: DecayRegime,
    /// Exponential regime: `max_m I_m (N/(N−1))^m`, at most 1.
    /// Polynomial regime: `min_{1≤m≤M} I_m m^γ`.
    pub witness_constant: f64,
    /// `N^{−γ} e^{−γN} (1/γ + 1)^{−γ}`, the explicit part of the lower-bound
    /// constant; the remaining factor comes from a limit and is not computed.
    pub template_constant: Option<f64>,
    /// Indices where `I_m ≥ (1 − N^{−k})^m α_{N−1}^k` was verified exactly,
    /// with `k` the smallest integer `≥ log_N(1 + m/γ)`.
    pub chain_checked: usize,
    /// Indices where `|J_m| 2^m ≤ 1` was verified exactly.
    pub shifted_checked: usize,
    pub max_m_checked: usize,
    pub violations: Vec<Violation>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// Two-column `check,result` table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let status = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let failed = |name: &str| self.violations.iter().any(|v| v.check == name);
        writeln!(out, "check,result").unwrap();
        match self.regime {
            DecayRegime::Exponential => {
                writeln!(out, "regime,exponential").unwrap();
                writeln!(
                    out,
                    "I_m <= ((N-1)/N)^m for m <= {},{}",
                    self.max_m_checked,
                    status(!failed("exponential"))
                )
                .unwrap();
            }
            DecayRegime::Polynomial => {
                writeln!(out, "regime,polynomial").unwrap();
                writeln!(out, "gamma,{}", self.gamma.unwrap_or(f64::NAN)).unwrap();
                writeln!(
                    out,
                    "min I_m m^gamma for m <= {},{}",
                    self.max_m_checked, self.witness_constant
                )
                .unwrap();
                writeln!(out, "bounded away from 0,{}", status(!failed("polynomial"))).unwrap();
                if let Some(c) = self.template_constant {
                    writeln!(out, "template constant,{c}").unwrap();
                }
                writeln!(
                    out,
                    "tail-mass chain ({} indices),{}",
                    self.chain_checked,
                    status(!failed("chain"))
                )
                .unwrap();
            }
        }
        writeln!(
            out,
            "|J_m| 2^m <= 1 ({} indices),{}",
            self.shifted_checked,
            status(!failed("shifted"))
        )
        .unwrap();
        writeln!(out, "overall,{}", status(self.passed())).unwrap();
        out
    }
}

/// Checks the decay rate of `I_1..=I_M` for the `M` available in `moments`.
pub fn check_decay(w: &WeightVector, moments: &MomentSequence) -> Result<DecayReport> {
    moments.require(MomentKind::Raw, 2)?;
    let n = w.n_branches();
    let max_m = moments.max_index();
    let last = w.last().clone();
    let mut violations = Vec::new();

    let mut report = if last.is_zero() {
        // I_m ≤ ((N−1)/N)^m  ⟺  num(I_m) N^m ≤ den(I_m) (N−1)^m
        let mut top = BigInt::one();
        let mut bottom = BigInt::one();
        let mut witness = 0.0f64;
        let growth = n as f64 / (n - 1) as f64;
        for m in 1..=max_m {
            top *= n - 1;
            bottom *= n;
            let i_m = &moments.values[m];
            if i_m.numer() * &bottom > i_m.denom() * &top {
                violations.push(Violation {
                    m,
                    check: "exponential".into(),
                    detail: format!("I_m = {} exceeds ((N-1)/N)^m", rational::to_f64(i_m)),
                });
            }
            witness = witness.max(rational::to_f64(i_m) * growth.powi(m as i32));
        }
        DecayReport {
            gamma: None,
            regime: DecayRegime::Exponential,
            witness_constant: witness,
            template_constant: None,
            chain_checked: 0,
            shifted_checked: 0,
            max_m_checked: max_m,
            violations: Vec::new(),
        }
    } else {
        let nf = n as f64;
        let gamma = (rational::to_f64(&last).ln() / nf.ln()).abs();
        let mut witness = f64::INFINITY;
        for m in 1..=max_m {
            let scaled = rational::to_f64(&moments.values[m]) * (m as f64).powf(gamma);
            witness = witness.min(scaled);
        }
        if witness.is_nan() || witness <= 0.0 {
            violations.push(Violation {
                m: max_m,
                check: "polynomial".into(),
                detail: format!("min I_m m^γ = {witness}"),
            });
        }
        let template = if gamma == 0.0 {
            1.0
        } else {
            nf.powf(-gamma) * (-gamma * nf).exp() * (1.0 / gamma + 1.0).powf(-gamma)
        };
        let mut chain_checked = 0;
        if gamma > 0.0 {
            for m in 1..=max_m {
                let k = chain_depth(n, m, gamma);
                // mass of the rightmost depth-k cell [1 − N^{−k}, 1] is α_{N−1}^k, so
                // I_m ≥ (N^k − 1)^m α_{N−1}^k / N^{km}
                let grid = BigInt::from(n).pow(k);
                let floor_num = (&grid - 1u32).pow(m as u32) * last.numer().pow(k);
                let floor_den = grid.pow(m as u32) * last.denom().pow(k);
                let i_m = &moments.values[m];
                if i_m.numer() * &floor_den < &floor_num * i_m.denom() {
                    violations.push(Violation {
                        m,
                        check: "chain".into(),
                        detail: format!("I_m below the depth-{k} tail mass bound"),
                    });
                }
                chain_checked += 1;
            }
        }
        DecayReport {
            gamma: Some(gamma),
            regime: DecayRegime::Polynomial,
            witness_constant: witness,
            template_constant: Some(template),
            chain_checked,
            shifted_checked: 0,
            max_m_checked: max_m,
            violations: Vec::new(),
        }
    };

    let shifted = shifted_moments(moments)?;
    for (m, j_m) in shifted.values.iter().enumerate() {
        if (j_m.numer().abs() << m) > *j_m.denom() {
            violations.push(Violation {
                m,
                check: "shifted".into(),
                detail: format!("|J_m| 2^m = {}", rational::to_f64(j_m) * 2f64.powi(m as i32)),
            });
        }
    }
    report.shifted_checked = shifted.len();
    report.violations = violations;
    Ok(report)
}

/// Smallest `k ≥ 1` with `N^k ≥ 1 + m/γ`.
fn chain_depth(n: usize, m: usize, gamma: f64) -> u32 {
    let target = 1.0 + m as f64 / gamma;
    let mut k = 1;
    let mut pow = n as f64;
    while pow < target {
        pow *= n as f64;
        k += 1;
    }
    k
}

/// Sup distance between two depth-`k` CDF tables against `k N^k max_n |α_n − β_n|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LipschitzReport {
    #[serde(with = "rational::serde_str")]
    pub distance: Rational,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    pub ok: bool,
}

pub fn check_lipschitz(wa: &WeightVector, wb: &WeightVector, k: u32) -> Result<LipschitzReport> {
    check_lipschitz_capped(wa, wb, k, DepthCap::default())
}

pub fn check_lipschitz_capped(
    wa: &WeightVector,
    wb: &WeightVector,
    k: u32,
    cap: DepthCap,
) -> Result<LipschitzReport> {
    if wa.n_branches() != wb.n_branches() {
        return Err(Error::MeshMismatch(format!(
            "N = {} vs N = {}",
            wa.n_branches(),
            wb.n_branches()
        )));
    }
    let distance = cdf_sup_distance(&cdf_table_capped(wa, k, cap)?, &cdf_table_capped(wb, k, cap)?)?;
    let sup = wa
        .weights()
        .iter()
        .zip(wb.weights())
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero);
    let grid = BigInt::from(wa.n_branches()).pow(k);
    let bound = sup * Rational::from_integer(grid * k);
    Ok(LipschitzReport {
        ok: distance <= bound,
        distance,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::exact_moments;
    use crate::rational::{int, ratio};

    fn w(s: &str) -> WeightVector {
        s.parse().unwrap()
    }

    #[test]
    fn holder_examples() {
        let log32 = 2f64.ln() / 3f64.ln();
        assert!((holder_exponent(&w("1/2,0,1/2")).unwrap() - log32).abs() < 1e-15);
        assert!((holder_exponent(&w("1/3,1/3,1/3")).unwrap() - 1.0).abs() < 1e-15);
        let log52 = 2f64.ln() / 5f64.ln();
        assert!((holder_exponent(&w("1/20,1/5,1/2,1/5,1/20")).unwrap() - log52).abs() < 1e-15);
        assert!(matches!(holder_exponent(&w("0,1")), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exponential_regime() {
        let v = w("1/2,1/2,0");
        let r = check_decay(&v, &exact_moments(&v, 64)).unwrap();
        assert_eq!(r.regime, DecayRegime::Exponential);
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.witness_constant <= 1.0);
        assert_eq!(r.gamma, None);
    }

    #[test]
    fn ternary_polynomial_regime() {
        let t = w("1/2,0,1/2");
        let r = check_decay(&t, &exact_moments(&t, 64)).unwrap();
        assert_eq!(r.regime, DecayRegime::Polynomial);
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.witness_constant > 0.4);
        assert_eq!(r.chain_checked, 64);
        assert_eq!(r.shifted_checked, 65);
        assert!((r.gamma.unwrap() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dirac_at_one_has_flat_witness() {
        let d = w("0,1");
        let r = check_decay(&d, &exact_moments(&d, 10)).unwrap();
        assert_eq!(r.gamma, Some(0.0));
        assert_eq!(r.witness_constant, 1.0);
        assert!(r.passed());
    }

    #[test]
    fn decay_needs_moments() {
        let t = w("1/2,0,1/2");
        assert!(matches!(
            check_decay(&t, &exact_moments(&t, 0)),
            Err(Error::InsufficientMoments { .. })
        ));
    }

    #[test]
    fn lipschitz_examples() {
        let t = w("1/2,0,1/2");
        let r = check_lipschitz(&t, &t, 2).unwrap();
        assert_eq!((r.distance, r.bound, r.ok), (int(0), int(0), true));

        let r = check_lipschitz(&t, &w("1/3,1/3,1/3"), 1).unwrap();
        // largest weight gap is the middle one, 1/3
        assert_eq!((r.distance, r.bound.clone(), r.ok), (ratio(1, 6), int(1), true));

        let r = check_lipschitz(&t, &w("5/12,1/6,5/12"), 2).unwrap();
        assert_eq!(r.bound, int(3));
        assert_eq!(r.distance, ratio(1, 12));
        assert!(r.ok);

        assert!(matches!(
            check_lipschitz(&t, &w("1/2,1/2"), 1),
            Err(Error::MeshMismatch(_))
        ));
    }

    #[test]
    fn report_serializes() {
        let t = w("1/2,0,1/2");
        let r = check_decay(&t, &exact_moments(&t, 8)).unwrap();
        let js = r.to_json();
        assert!(js.contains("\"regime\":\"polynomial\""));
        assert!(r.to_table().ends_with("overall,PASS\n"));
        let l = check_lipschitz(&t, &w("1/3,1/3,1/3"), 1).unwrap();
        assert_eq!(
            serde_json::to_string(&l).unwrap(),
            "{\"distance\":\"1/6\",\"bound\":\"1/1\",\"ok\":true}"
        );
    }
}
