//! Certified fast approximation of the first `m` moments from partial products of
//! the moment generating function.
//!
//! The MGF factors as `G(s) = Π_{r≥1} Σ_n α_n exp(n s / N^r)`. Its depth-`k` partial
//! product `G_k` has coefficients `I_{m;k}/m!` with `0 ≤ I_{m;k} ↗ I_m` and
//! `|I_m − I_{m;k}| ≤ e·m·√(m−1) / N^k` for `m ≥ 2`. Since
//! `G_{2p}(s) = G_p(s) · G_p(s / N^p)`, the degree-`m` truncation of `G_k` for
//! `k = 2^J` takes `J` truncated products.
//!
//! # Scaled evaluation
//!
//! Stored in floating point, the coefficients `I_n / n!` span hundreds of orders
//! of magnitude and FFT rounding is relative to the largest one, so the naive
//! product loses every moment past `n ≈ 20`. Each product is therefore run on
//! `G(R s)` for a handful of radii `R`: coefficient `n` of `G(R s)` is within a
//! small factor of the largest coefficient when `R ≈ n`, so each radius yields
//! full precision for a window of indices around it. Rescaling a block by
//! `N^{−p}` moves it to a different radius, so every pass keeps the block at the
//! ladder of radii `R, R/N, R/N², …` down to 1. Scale factors are tracked as
//! integer powers of two, and the `n!/Rⁿ` conversion back to moments is done in
//! compensated log space.
//!
//! Below [`DEFAULT_FFT_THRESHOLD`] a single pass at `R = 1` with schoolbook
//! products is exact to rounding (all terms are nonnegative), and is literally
//! the doubling schedule above.

use std::f64::consts::{E, LN_2};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments;
use crate::rational;
use crate::series::{rescale_argument, series_mul_trunc_with, truncated_factor, TruncatedSeries};
use crate::weights::WeightVector;

pub use crate::series::DEFAULT_FFT_THRESHOLD;

/// Tolerances below this are rejected: double-precision rounding is no longer
/// dominated by the certified bound.
pub const MIN_EPS: f64 = 1e-12;

/// Largest accepted `log(e^R n!/Rⁿ) − log(min over R)` when assigning indices to radii.
const WINDOW_BUDGET: f64 = 1.0;

/// Coefficients below this fraction of the largest are dropped after each product.
const NEGLIGIBLE: f64 = 1e-290;

/// Moments with a per-index error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastResult {
    #[serde(rename = "depth")]
    pub depth_used: u32,
    pub moments: Vec<f64>,
    #[serde(rename = "bounds")]
    pub certified_bound: Vec<f64>,
}

impl FastResult {
    /// `m,value,bound` rows, floats with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,value,bound\n");
        for (m, (v, b)) in self.moments.iter().zip(&self.certified_bound).enumerate() {
            writeln!(out, "{m},{v:.16e},{b:.16e}").unwrap();
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

/// Work done by one evaluation of the doubling schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FastStats {
    /// Depth `k` of the partial product.
    pub depth: u32,
    /// Squarings `G_p → G_{2p}` along the chain that produces the result.
    pub doubling_steps: u32,
    /// Extra products `G_d · G_p(·/N^d)` needed when `k` is not a power of two.
    pub combines: u32,
    /// Independent radii evaluated.
    pub passes: usize,
    /// Every truncated product performed, over all passes and ladder levels.
    pub multiplications: usize,
}

impl FastStats {
    /// Truncated products along the result chain of a single pass.
    pub fn chain_multiplications(&self) -> u32 {
        self.doubling_steps + self.combines
    }
}

/// Smallest `k ≥ 1` with `e·m·√(m−1) / N^k ≤ ε`.
pub fn depth_for_eps(n_branches: usize, m: usize, eps: f64) -> Result<u32> {
    if m < 2 {
        return Err(Error::BadTolerance(format!("the Cauchy bound needs m ≥ 2, got {m}")));
    }
    check_positive(eps)?;
    let constant = E * m as f64 * ((m - 1) as f64).sqrt();
    Ok(smallest_depth(n_branches, eps, |k| {
        constant / (n_branches as f64).powi(k as i32)
    }))
}

fn check_positive(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::BadTolerance(format!("ε must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// Smallest `k ≥ 1` with `bound(k) ≤ eps`, for `bound` decreasing geometrically in `k`.
fn smallest_depth(n_branches: usize, eps: f64, bound: impl Fn(u32) -> f64) -> u32 {
    let guess = ((bound(0) / eps).ln() / (n_branches as f64).ln()).ceil();
    let mut k = if guess.is_finite() && guess > 1.0 {
        guess as u32
    } else {
        1
    };
    while bound(k) > eps {
        k += 1;
    }
    while k > 1 && bound(k - 1) <= eps {
        k -= 1;
    }
    k
}

/// `e·n·√(n−1)/N^k` for `n ≥ 2`, 0 for `n < 2`.
pub fn cauchy_bound(n_branches: usize, n: usize, k: u32) -> f64 {
    if n < 2 {
        return 0.0;
    }
    E * n as f64 * ((n - 1) as f64).sqrt() / (n_branches as f64).powi(k as i32)
}

/// Bound on `|J_n − J_{n;k}|` for the shifted partial product.
///
/// `J_{n;k}` is the binomial transform of `I_{·;k}` with shift `(1 − N^{−k})/2`
/// rather than `1/2`, so besides `Σ_i C(n,i) 2^{i−n} |I_i − I_{i;k}| ≤ (3/2)ⁿ·bₙ`
/// there is a shift term `Σ_j C(n,j) 2^{−j} j N^{−k} = (n/3)(3/2)ⁿ N^{−k}`.
/// Odd indices vanish exactly for palindromic weights.
pub fn shifted_cauchy_bound(n_branches: usize, n: usize, k: u32) -> f64 {
    if n < 2 || n % 2 == 1 {
        return 0.0;
    }
    let nf = n as f64;
    let log = nf * 1.5f64.ln() + (nf * (E * (nf - 1.0).sqrt() + 1.0 / 3.0)).ln()
        - k as f64 * (n_branches as f64).ln();
    log.exp()
}

/// `I_0..=I_m` to within `ε` (after rounding `k` up to a power of two).
pub fn fast_moments(w: &WeightVector, m: usize, eps: f64) -> Result<FastResult> {
    fast_moments_with_stats(w, m, eps).map(|(r, _)| r)
}

pub fn fast_moments_with_stats(
    w: &WeightVector,
    m: usize,
    eps: f64,
) -> Result<(FastResult, FastStats)> {
    check_eps(eps)?;
    let n = w.n_branches();
    let depth = depth_for_eps(n, m.max(2), eps)?.next_power_of_two();
    let (mut moments, stats) = partial_product_with_stats(w, m, depth, Mode::Raw, DEFAULT_FFT_THRESHOLD);
    moments[0] = 1.0;
    if m >= 1 {
        moments[1] = rational::to_f64(&moments::mean(w));
    }
    let certified_bound = (0..=m).map(|i| cauchy_bound(n, i, depth)).collect();
    Ok((
        FastResult {
            depth_used: depth,
            moments,
            certified_bound,
        },
        stats,
    ))
}

/// `J_0..=J_m` for palindromic weights, via the centered factors
/// `Σ_ℓ α_ℓ exp((ℓ − (N−1)/2) s / N^r)`, which are weighted averages of `cosh`.
pub fn shifted_fast_moments(w: &WeightVector, m: usize, eps: f64) -> Result<FastResult> {
    if !w.is_palindromic() {
        return Err(Error::NotPalindromic);
    }
    check_eps(eps)?;
    let n = w.n_branches();
    let top = m - m % 2;
    let depth = smallest_depth(n, eps, |k| shifted_cauchy_bound(n, top.max(2), k)).next_power_of_two();
    let (mut moments, _) = partial_product_with_stats(w, m, depth, Mode::Shifted, DEFAULT_FFT_THRESHOLD);
    moments[0] = 1.0;
    for (i, v) in moments.iter_mut().enumerate() {
        if i % 2 == 1 {
            *v = 0.0;
        }
    }
    let certified_bound = (0..=m).map(|i| shifted_cauchy_bound(n, i, depth)).collect();
    Ok(FastResult {
        depth_used: depth,
        moments,
        certified_bound,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    check_positive(eps)?;
    if eps < MIN_EPS {
        return Err(Error::BadTolerance(format!(
            "ε = {eps} is below the double-precision floor {MIN_EPS}"
        )));
    }
    Ok(())
}

/// `I_{0;k}..=I_{m;k}`, the moment coefficients of the depth-`k` partial product, for any `k ≥ 1`.
pub fn partial_product_moments(w: &WeightVector, m: usize, k: u32) -> Vec<f64> {
    partial_product_with_stats(w, m, k, Mode::Raw, DEFAULT_FFT_THRESHOLD).0
}

/// As [`partial_product_moments`] with an explicit FFT crossover, also reporting the work done.
pub fn partial_product_moments_with(
    w: &WeightVector,
    m: usize,
    k: u32,
    fft_threshold: usize,
) -> (Vec<f64>, FastStats) {
    partial_product_with_stats(w, m, k, Mode::Raw, fft_threshold)
}

/// Degree-`m` truncation of `Π_{r=from+1}^{to} Σ_ℓ α_ℓ exp(ℓ s / N^r)`, one factor at a time.
pub fn partial_product_series(w: &WeightVector, m: usize, from: u32, to: u32) -> TruncatedSeries {
    let mut acc = TruncatedSeries::one(m);
    for r in from + 1..=to {
        acc = series_mul_trunc_with(&acc, &truncated_factor(w, m, r), m, usize::MAX);
    }
    acc
}

/// `Π_{r=1}^{k} Σ_n α_n exp(n s / N^r)`, the depth-`k` partial product of the MGF at `s`.
pub fn mgf_eval(w: &WeightVector, s: f64, k: u32) -> f64 {
    let n = w.n_branches() as f64;
    let alphas = w.as_f64();
    let mut grid = 1.0;
    let mut product = 1.0;
    for _ in 0..k {
        grid *= n;
        let factor: f64 = alphas
            .iter()
            .enumerate()
            .map(|(l, a)| a * (l as f64 * s / grid).exp())
            .sum();
        product *= factor;
    }
    product
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Raw,
    Shifted,
}

/// `max |x|` over the support of the depth-`k` partial measure (centered at 1/2 in
/// shifted mode): moments decay like `ρⁿ`, so index `n` is best read at radius `n / ρ`.
fn support_radius(w: &WeightVector, mode: Mode, k: u32) -> f64 {
    let n = w.n_branches();
    let center = match mode {
        Mode::Raw => 0.0,
        Mode::Shifted => (n - 1) as f64 / 2.0,
    };
    let reach = w
        .as_f64()
        .iter()
        .enumerate()
        .filter(|&(_, &a)| a > 0.0)
        .map(|(d, _)| (d as f64 - center).abs())
        .fold(0.0, f64::max);
    reach / (n - 1) as f64 * (1.0 - (n as f64).powi(-(k.min(1000) as i32)))
}

/// A radius and the contiguous block of indices read off at it.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Pass {
    radius: f64,
    lo: usize,
    hi: usize,
}

/// `n (t − 1 − ln t)`: excess of `log(e^{ρR} n!/(ρR)ⁿ)` over its minimum at `ρR = n`.
fn window_loss(n: usize, t: f64) -> f64 {
    n as f64 * (t - 1.0 - t.ln())
}

fn plan_passes(m: usize, rho: f64, fft_threshold: usize) -> Vec<Pass> {
    if m == 0 {
        return Vec::new();
    }
    // schoolbook products of nonnegative series are accurate coefficient by coefficient
    if m < fft_threshold || rho == 0.0 {
        return vec![Pass {
            radius: 1.0,
            lo: 1,
            hi: m,
        }];
    }
    let mut passes = Vec::new();
    let mut lo = 1;
    while lo <= m {
        // radius whose loss at `lo` is exactly the budget, with ρR/lo > 1
        let (mut a, mut b) = (1.0, 2.0);
        while window_loss(lo, b) < WINDOW_BUDGET {
            b *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if window_loss(lo, mid) < WINDOW_BUDGET {
                a = mid;
            } else {
                b = mid;
            }
        }
        let radius = a * lo as f64 / rho;
        let mut hi = lo;
        while hi < m && window_loss(hi + 1, rho * radius / (hi + 1) as f64) <= WINDOW_BUDGET {
            hi += 1;
        }
        passes.push(Pass { radius, lo, hi });
        lo = hi + 1;
    }
    passes
}

fn partial_product_with_stats(
    w: &WeightVector,
    m: usize,
    k: u32,
    mode: Mode,
    fft_threshold: usize,
) -> (Vec<f64>, FastStats) {
    let passes = plan_passes(m, support_radius(w, mode, k), fft_threshold);
    let results: Vec<(Pass, Vec<f64>, FastStats)> = passes
        .par_iter()
        .map(|&pass| {
            let mut engine = Engine::new(w, mode, pass, fft_threshold);
            let (series, stats) = engine.partial_product(k);
            (pass, extract(&series, pass), stats)
        })
        .collect();

    let mut moments = vec![0.0; m + 1];
    moments[0] = 1.0;
    let mut stats = FastStats {
        depth: k,
        passes: results.len(),
        ..FastStats::default()
    };
    for (pass, values, s) in results {
        moments[pass.lo..=pass.hi].copy_from_slice(&values);
        stats.doubling_steps = s.doubling_steps;
        stats.combines = s.combines;
        stats.multiplications += s.multiplications;
    }
    if stats.passes == 0 {
        let (steps, combines) = schedule_counts(k);
        stats.doubling_steps = steps;
        stats.combines = combines;
    }
    (moments, stats)
}

/// (squarings, combines) for the binary schedule of depth `k`.
fn schedule_counts(k: u32) -> (u32, u32) {
    if k == 0 {
        return (0, 0);
    }
    (31 - k.leading_zeros(), k.count_ones() - 1)
}

/// Reads `moment_n = coeff_n · 2^{exp2} · n! / Rⁿ` for `n` in the pass window.
fn extract(series: &ScaledSeries, pass: Pass) -> Vec<f64> {
    let mut log_fact_over_pow = Neumaier::default();
    for i in 1..pass.lo {
        log_fact_over_pow.add((i as f64 / pass.radius).ln());
    }
    (pass.lo..=pass.hi)
        .map(|n| {
            log_fact_over_pow.add((n as f64 / pass.radius).ln());
            let c = series.series.coeff(n);
            if c <= 0.0 {
                return 0.0;
            }
            let mut log = log_fact_over_pow;
            log.add_scaled_ln2(series.exp2);
            log.add(c.ln());
            log.value().exp()
        })
        .collect()
}

/// Kahan–Babuška summation.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

// ln 2 split so that `e · LN2_HI` is exact for |e| < 2^20
const LN2_HI: f64 = f64::from_bits(0x3fe6_2e42_fee0_0000);
const LN2_LO: f64 = f64::from_bits(0x3dea_39ef_3579_3c76);

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn add_scaled_ln2(&mut self, e: i64) {
        self.add(e as f64 * LN2_HI);
        self.add(e as f64 * LN2_LO);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `x · 2^e` without intermediate overflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Coefficients of `F(R s)`, stored as `series · 2^{exp2}`.
#[derive(Debug, Clone)]
struct ScaledSeries {
    series: TruncatedSeries,
    exp2: i64,
}

impl ScaledSeries {
    /// Rescales so the largest coefficient lies in `[1, 2)` and drops a negligible tail.
    fn normalized(mut series: TruncatedSeries, mut exp2: i64) -> Self {
        let max = series.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max > 0.0 && max.is_finite() {
            let e = max.log2().floor() as i64;
            for c in series.coeffs.iter_mut() {
                *c = ldexp(*c, -e);
            }
            exp2 += e;
            let keep = series
                .coeffs
                .iter()
                .rposition(|c| c.abs() >= NEGLIGIBLE)
                .map_or(1, |i| i + 1);
            series.coeffs.truncate(keep);
        }
        ScaledSeries { series, exp2 }
    }
}

/// One pass of the doubling schedule at a fixed radius.
struct Engine {
    n_branches: f64,
    /// Signed branch offsets `ℓ` or `ℓ − (N−1)/2`, with their weights.
    branches: Vec<(f64, f64)>,
    mode: Mode,
    degree: usize,
    /// Radii `R / N^q`, `q = 0..=bottom`, with the last one ≤ 1.
    radii: Vec<f64>,
    fft_threshold: usize,
    multiplications: usize,
}

impl Engine {
    fn new(w: &WeightVector, mode: Mode, pass: Pass, fft_threshold: usize) -> Self {
        let n = w.n_branches();
        let center = match mode {
            Mode::Raw => 0.0,
            Mode::Shifted => (n - 1) as f64 / 2.0,
        };
        let branches = w
            .as_f64()
            .into_iter()
            .enumerate()
            .filter(|&(_, a)| a > 0.0)
            .map(|(l, a)| (l as f64 - center, a))
            .collect();
        let mut radii = vec![pass.radius];
        while *radii.last().unwrap() > 1.0 {
            let next = radii.last().unwrap() / n as f64;
            radii.push(next);
        }
        Engine {
            n_branches: n as f64,
            branches,
            mode,
            degree: pass.hi,
            radii,
            fft_threshold,
            multiplications: 0,
        }
    }

    fn bottom(&self) -> usize {
        self.radii.len() - 1
    }

    /// First factor `Σ_ℓ α_ℓ exp(o_ℓ R_q s / N)` at ladder level `q`, built in log space.
    fn factor(&self, level: usize) -> ScaledSeries {
        let scale = self.radii[level] / self.n_branches;
        let even_only = self.mode == Mode::Shifted;
        // log-magnitude prefix sums per branch: ln α + Σ_{i≤n} ln(|o| R_q / (N i))
        let mut logs: Vec<Vec<Option<Neumaier>>> = Vec::with_capacity(self.branches.len());
        let mut peak = f64::NEG_INFINITY;
        for &(offset, alpha) in &self.branches {
            let y = offset.abs() * scale;
            let mut acc = Neumaier::default();
            acc.add(alpha.ln());
            let mut row = Vec::with_capacity(self.degree + 1);
            for n in 0..=self.degree {
                if n > 0 {
                    if y == 0.0 {
                        row.push(None);
                        continue;
                    }
                    acc.add((y / n as f64).ln());
                }
                if even_only && n % 2 == 1 {
                    row.push(None);
                    continue;
                }
                peak = peak.max(acc.value());
                row.push(Some(acc));
            }
            logs.push(row);
        }
        let exp2 = (peak / LN_2).floor() as i64;
        let coeffs = (0..=self.degree)
            .map(|n| {
                logs.iter()
                    .filter_map(|row| row[n])
                    .map(|mut acc| {
                        acc.add_scaled_ln2(-exp2);
                        acc.value().exp()
                    })
                    .sum()
            })
            .collect();
        ScaledSeries::normalized(TruncatedSeries::new(coeffs), exp2)
    }

    fn mul(&mut self, a: &ScaledSeries, b: &ScaledSeries) -> ScaledSeries {
        self.multiplications += 1;
        let reach = (a.series.coeffs.len() + b.series.coeffs.len()).saturating_sub(2);
        let product = series_mul_trunc_with(
            &a.series,
            &b.series,
            reach.min(self.degree),
            self.fft_threshold,
        );
        ScaledSeries::normalized(product, a.exp2 + b.exp2)
    }

    /// Block `F(R_q s)` for `q` beyond the ladder comes from the bottom rung, `F(R_Q N^{Q−q} s)`.
    fn at_level(&self, ladder: &[ScaledSeries], level: usize) -> ScaledSeries {
        let bottom = self.bottom();
        if level <= bottom {
            return ladder[level].clone();
        }
        let factor = self.n_branches.powi(-((level - bottom) as i32));
        let base = &ladder[bottom];
        ScaledSeries::normalized(rescale_argument(&base.series, factor), base.exp2)
    }

    /// Coefficients of `G_k(R s)` through degree `hi`.
    fn partial_product(&mut self, k: u32) -> (ScaledSeries, FastStats) {
        let (doubling_steps, combines) = schedule_counts(k);
        if k == 0 {
            return (
                ScaledSeries::normalized(TruncatedSeries::one(0), 0),
                FastStats::default(),
            );
        }
        let mut ladder: Vec<ScaledSeries> = (0..=self.bottom()).map(|q| self.factor(q)).collect();
        let mut block_depth = 1usize;
        let mut acc: Option<(ScaledSeries, usize)> = None;
        let mut bits = k;
        loop {
            if bits & 1 == 1 {
                acc = Some(match acc.take() {
                    None => (ladder[0].clone(), block_depth),
                    Some((a, depth)) => {
                        let shifted = self.at_level(&ladder, depth);
                        (self.mul(&a, &shifted), depth + block_depth)
                    }
                });
            }
            bits >>= 1;
            if bits == 0 {
                break;
            }
            // G_{2p}(R_q s) = G_p(R_q s) · G_p(R_{q+p} s), ascending q reads only old rungs
            let mut next = Vec::with_capacity(ladder.len());
            for q in 0..ladder.len() {
                let partner = self.at_level(&ladder, q + block_depth);
                next.push(self.mul(&ladder[q], &partner));
            }
            ladder = next;
            block_depth *= 2;
        }
        let (series, depth) = acc.expect("k ≥ 1 has a set bit");
        debug_assert_eq!(depth, k as usize);
        (
            series,
            FastStats {
                depth: k,
                doubling_steps,
                combines,
                passes: 1,
                multiplications: self.multiplications,
            },
        )
    }
}
