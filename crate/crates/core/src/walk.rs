//! Simple random walk on Z^d: return probabilities, the Green function,
//! hitting probabilities and the closed-form tail bounds used to show
//! `2d·F_d(e_1) → 1`.

use std::collections::HashMap;
use std::f64::consts::{E, PI};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{index_below, replica_rng};
use crate::stats::{binomial_estimate, CompensatedSum};

/// Limit on `n·d` for exact rational return probabilities.
pub const EXACT_LIMIT: u64 = 20_000;

/// Number of binomial standard deviations kept around the mode when
/// convolving in floating point. Mass outside is below 1e-30.
const WINDOW_SIGMAS: f64 = 12.0;

const LN_FACT_TABLE: usize = 256;

fn ln_fact_table() -> &'static [f64; LN_FACT_TABLE] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; LN_FACT_TABLE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; LN_FACT_TABLE];
        let mut acc = CompensatedSum::new();
        for (k, slot) in t.iter_mut().enumerate().skip(1) {
            acc.add((k as f64).ln());
            *slot = acc.value();
        }
        t
    })
}

/// `ln(n!)`: table below 256, Stirling series above (relative error < 1e-17).
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACT_TABLE {
        return ln_fact_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

#[inline]
fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Central window `[lo, hi]` of Bin(n, p).
#[inline]
fn binomial_window(n: u64, p: f64) -> (u64, u64) {
    let mean = n as f64 * p;
    let half = WINDOW_SIGMAS * (n as f64 * p * (1.0 - p)).sqrt() + 2.0;
    let lo = (mean - half).floor().max(0.0) as u64;
    let hi = ((mean + half).ceil() as u64).min(n);
    (lo, hi)
}

// ---------------------------------------------------------------------------
// exact arithmetic

fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

/// `Σ_{k_1+…+k_d = k} k!/(k_1!…k_d!) · Π w(k_i)`: walks of length `k` split
/// over `d` axes, with `w(m)` the number of admissible one-axis paths of
/// length `m`.
pub fn axis_convolution(d: usize, k: u64, w: &[BigUint]) -> BigUint {
    assert!(w.len() as u64 > k, "weights must cover 0..=k");
    let k = k as usize;
    let mut t: Vec<BigUint> = w[..=k].to_vec();
    let binoms: Vec<Vec<BigUint>> = (0..=k as u64).map(binomial_row).collect();
    for _ in 1..d {
        let next: Vec<BigUint> = (0..=k)
            .map(|len| {
                let mut s = BigUint::zero();
                for m in 0..=len {
                    if !w[m].is_zero() && !t[len - m].is_zero() {
                        s += &binoms[len][m] * &w[m] * &t[len - m];
                    }
                }
                s
            })
            .collect();
        t = next;
    }
    t.swap_remove(k)
}

/// Closed one-axis paths of each length `0..=k`.
pub fn closed_axis_paths(k: u64) -> Vec<BigUint> {
    (0..=k)
        .map(|m| {
            if m % 2 == 0 {
                binomial_row(m)[(m / 2) as usize].clone()
            } else {
                BigUint::zero()
            }
        })
        .collect()
}

/// Closed walks of length `2n` on Z^d for `n = 0..=n_max`, via
/// `C(2n, n) · Σ_{m_1+…+m_d=n} (n!/Π m_i!)²`.
pub fn closed_walk_counts(d: usize, n_max: u64) -> Vec<BigUint> {
    let n_max = n_max as usize;
    let binoms: Vec<Vec<BigUint>> = (0..=n_max as u64).map(binomial_row).collect();
    let mut w = vec![BigUint::one(); n_max + 1];
    for _ in 1..d {
        w = (0..=n_max)
            .map(|n| {
                let mut s = BigUint::zero();
                for m in 0..=n {
                    let c = &binoms[n][m];
                    s += c * c * &w[n - m];
                }
                s
            })
            .collect();
    }
    (0..=n_max)
        .map(|n| &binomial_row(2 * n as u64)[n] * &w[n])
        .collect()
}

fn check_exact(d: usize, n: u64) -> Result<()> {
    let load = n.saturating_mul(d as u64);
    if load > EXACT_LIMIT {
        return Err(Error::ResourceLimit {
            what: "n·d for exact return probability",
            value: load,
            limit: EXACT_LIMIT,
        });
    }
    Ok(())
}

/// Exact `P(S_{2n} = 0)` on Z^d.
pub fn p_return_exact(d: usize, n: u64) -> Result<BigRational> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1 and n ≥ 1".into()));
    }
    check_exact(d, n)?;
    let count = closed_walk_counts(d, n).swap_remove(n as usize);
    let denom = BigUint::from(2 * d as u64).pow(2 * n as u32);
    Ok(BigRational::new(count.into(), denom.into()))
}

/// Exact `P(S_{2n} = 0)` for `n = 1..=n_max`.
pub fn return_series_exact(d: usize, n_max: u64) -> Result<Vec<BigRational>> {
    if d == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1".into()));
    }
    check_exact(d, n_max)?;
    let counts = closed_walk_counts(d, n_max);
    let step = BigUint::from(2 * d as u64).pow(2);
    let mut denom = BigUint::one();
    Ok(counts
        .into_iter()
        .skip(1)
        .map(|c| {
            denom *= &step;
            BigRational::new(c.into(), denom.clone().into())
        })
        .collect())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // scale so both parts fit comfortably in f64 range
    let n = r.numer().bits() as i64;
    let m = r.denom().bits() as i64;
    let shift = (n - m) - 60;
    let (num, den) = if shift > 0 {
        (r.numer().clone(), r.denom().clone() << shift as usize)
    } else {
        (r.numer().clone() << (-shift) as usize, r.denom().clone())
    };
    let q = num / den;
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

// ---------------------------------------------------------------------------
// floating point return probabilities

/// `P(S_{2n} = 0)` for `n = 1..=n_max` in double precision.
///
/// Uses `p_d(2n) = p_1(2n) · c_d(n)` where `c_d(n)` is the probability that
/// two independent uniform allocations of `n` balls into `d` boxes agree,
/// built one axis at a time with windowed binomial convolutions.
pub fn return_probabilities(d: usize, n_max: u64) -> Vec<f64> {
    assert!(d >= 1);
    let n_max = n_max as usize;
    let mut c = vec![1.0f64; n_max + 1];
    for j in 1..d {
        let p = 1.0 / (j + 1) as f64;
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let prev = c.clone();
        for (n, slot) in c.iter_mut().enumerate() {
            let nu = n as u64;
            let (lo, hi) = binomial_window(nu, p);
            let lf_n = ln_factorial(nu);
            let mut s = CompensatedSum::new();
            for m in lo..=hi {
                let lpmf = lf_n - ln_factorial(m) - ln_factorial(nu - m)
                    + m as f64 * lp
                    + (nu - m) as f64 * lq;
                s.add((2.0 * lpmf).exp() * prev[n - m as usize]);
            }
            *slot = s.value();
        }
    }
    let mut p1 = 1.0;
    (1..=n_max)
        .map(|n| {
            p1 *= (2 * n - 1) as f64 / (2 * n) as f64;
            p1 * c[n]
        })
        .collect()
}

/// Local CLT approximation `2 (d/(4πn))^{d/2}` of `P(S_{2n} = 0)`.
pub fn local_clt(d: usize, n: f64) -> f64 {
    2.0 * (d as f64 / (4.0 * PI * n)).powf(d as f64 / 2.0)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Local CLT asymptotics with a fitted first-order correction.
    LocalClt,
    /// Per-term minimum of the closed-form bounds `L(n,d)` and the `M_k`
    /// bracket bound. Valid, but only sharp for large `d`.
    PaperBounds,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnSeries {
    pub d: usize,
    /// `terms[n-1] = P(S_{2n} = 0)`
    pub terms: Vec<f64>,
    pub truncation_n: u64,
    pub tail_estimate: f64,
    /// Half-width of the band the true tail is believed to lie in.
    pub tail_uncertainty: f64,
    pub tail_mode: TailMode,
}

impl ReturnSeries {
    pub fn partial_sum(&self) -> f64 {
        self.terms
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }
}

/// Default series length per dimension.
pub fn default_terms(d: usize) -> u64 {
    match d {
        0..=3 => 10_000,
        4 => 4_000,
        _ => 2_000,
    }
}

fn clt_tail(d: usize, n: u64, p_last: f64) -> (f64, f64) {
    // p(2m) ≈ A m^{-d/2} (1 + c/m), c fitted at m = N; sum over m > N by
    // the midpoint integral from N + 1/2
    let a = 2.0 * (d as f64 / (4.0 * PI)).powf(d as f64 / 2.0);
    let nf = n as f64;
    let c = nf * (p_last / local_clt(d, nf) - 1.0);
    let h = d as f64 / 2.0;
    let x0 = nf + 0.5;
    let main = a * x0.powf(1.0 - h) / (h - 1.0);
    let correction = a * c * x0.powf(-h) / h;
    // Euler-Maclaurin remainder of the midpoint rule, bounded by f'(x0)/24
    let em = a * h * x0.powf(-h - 1.0) / 24.0;
    (main + correction, 2.0 * correction.abs() + em)
}

/// Closed-form upper bound on `P(S_{2n} = 0)`: `min(L(n,d), bracket)`
/// with `n = kd + j`, `1 ≤ j ≤ d`, and
/// `bracket = √2 β(2n)/β(n) · (k + j/d)^n / (e^n (k!)^{d-j} ((k+1)!)^j)`.
pub fn paper_term_bound(d: usize, n: u64) -> f64 {
    ln_paper_term_bound(d, n).exp()
}

fn ln_paper_term_bound(d: usize, n: u64) -> f64 {
    let du = d as u64;
    let k = (n - 1) / du;
    let j = n - k * du;
    let nf = n as f64;
    let bracket = 0.5 * 2f64.ln() + ln_beta(2 * n) - ln_beta(n)
        + nf * (k as f64 + j as f64 / d as f64).ln()
        - nf
        - (du - j) as f64 * ln_factorial(k)
        - j as f64 * ln_factorial(k + 1);
    ln_l(n, d).min(bracket)
}

fn paper_tail(d: usize, n: u64) -> (f64, f64) {
    let mut s = CompensatedSum::new();
    let mut m = n + 1;
    let end = n + 200_000;
    let mut last = 0.0;
    while m <= end {
        last = paper_term_bound(d, m);
        s.add(last);
        if last < 1e-20 * s.value().max(1e-300) {
            break;
        }
        m += 1;
    }
    // power-law remainder past the explicit sum
    let h = d as f64 / 2.0;
    let rest = if m > end && h > 1.0 {
        last * m as f64 / (h - 1.0)
    } else {
        0.0
    };
    let total = s.value() + rest;
    // a bound, so the band runs from zero up to it
    (total, total)
}

/// Return series with a tail estimate past `n_terms`.
pub fn return_series(d: usize, n_terms: u64, mode: TailMode) -> Result<ReturnSeries> {
    if d <= 2 {
        return Err(Error::Recurrent { d });
    }
    if n_terms == 0 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    let terms = return_probabilities(d, n_terms);
    let (tail_estimate, tail_uncertainty) = match mode {
        TailMode::LocalClt => clt_tail(d, n_terms, *terms.last().unwrap()),
        TailMode::PaperBounds => paper_tail(d, n_terms),
    };
    Ok(ReturnSeries {
        d,
        terms,
        truncation_n: n_terms,
        tail_estimate,
        tail_uncertainty,
        tail_mode: mode,
    })
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct GreenEstimate {
    pub d: usize,
    pub terms: u64,
    /// `G_d(0,0) = 1 + Σ_{n ≤ N} p(2n) + tail`
    pub value: f64,
    pub tail: f64,
    pub uncertainty: f64,
}

/// `G_d(0,0)`; errors for recurrent dimensions.
pub fn green_function(d: usize, n_terms: u64, mode: TailMode) -> Result<GreenEstimate> {
    let s = return_series(d, n_terms, mode)?;
    let value = 1.0 + s.partial_sum() + s.tail_estimate;
    Ok(GreenEstimate {
        d,
        terms: n_terms,
        value,
        tail: s.tail_estimate,
        uncertainty: s.tail_uncertainty,
    })
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct HittingE1 {
    pub d: usize,
    pub value: f64,
    pub uncertainty: f64,
    /// Set for `d ≤ 2`, where the walk is recurrent and `F = 1`.
    pub recurrent: bool,
}

/// `F_d(e_1) = (G - 1)/G` with the default series length and CLT tail.
pub fn hitting_prob_e1(d: usize) -> Result<HittingE1> {
    hitting_prob_e1_with(d, default_terms(d))
}

pub fn hitting_prob_e1_with(d: usize, n_terms: u64) -> Result<HittingE1> {
    if d == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1".into()));
    }
    if d <= 2 {
        return Ok(HittingE1 {
            d,
            value: 1.0,
            uncertainty: 0.0,
            recurrent: true,
        });
    }
    let g = green_function(d, n_terms, TailMode::LocalClt)?;
    Ok(HittingE1 {
        d,
        value: (g.value - 1.0) / g.value,
        // dF/dG = 1/G²
        uncertainty: g.uncertainty / (g.value * g.value),
        recurrent: false,
    })
}

// ---------------------------------------------------------------------------
// hitting table

/// `F_d(x)` on the box `|x|_∞ ≤ R`, keyed by sorted absolute coordinates.
#[derive(Clone, Debug)]
pub struct HittingTable {
    d: usize,
    radius: u32,
    green: HashMap<Vec<u8>, f64>,
    green_origin: f64,
    /// Largest estimated absolute error over the entries of `F`.
    pub tolerance: f64,
}

pub const DEFAULT_TABLE_RADIUS: u32 = 4;

/// Series length for the table's per-point Green functions.
pub fn default_table_steps(d: usize) -> u64 {
    match d {
        0..=3 => 8_000,
        4 => 3_000,
        _ => 1_000,
    }
}

/// Multisets of `j` values from `0..=r`, sorted ascending.
fn multisets(j: usize, r: u8) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..j {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u8>| {
                let start = v.last().copied().unwrap_or(0);
                (start..=r).map(move |b| {
                    let mut w = v.clone();
                    w.push(b);
                    w
                })
            })
            .collect();
    }
    out
}

/// Key of a lattice point: sorted absolute coordinates.
fn point_key(x: &[i64]) -> Vec<u8> {
    let mut k: Vec<u8> = x.iter().map(|c| c.unsigned_abs().min(255) as u8).collect();
    k.sort_unstable();
    k
}

/// `F_d(x) = G_d(x)/G_d(0)` on the box of radius `R`, from
/// `G_d(x) = Σ_k P(S_k = x)` built axis by axis:
/// `T_{j+1}(k; A ∪ {b}) = Σ_m Bin(m; k, 1/(j+1)) q(m, b) T_j(k - m; A)` with
/// `q(m, b) = C(m, (m+b)/2) 2^{-m}`, plus a local-CLT tail past `K` steps.
pub fn hitting_table(d: usize, radius: u32) -> Result<HittingTable> {
    hitting_table_with(d, radius, default_table_steps(d))
}

pub fn hitting_table_with(d: usize, radius: u32, steps: u64) -> Result<HittingTable> {
    if d <= 2 {
        return Err(Error::Recurrent { d });
    }
    if radius == 0 {
        return Err(Error::InvalidArgument("radius must be ≥ 1".into()));
    }
    let cost = multisets(d, radius as u8).len() as u64 * steps * steps.min(2_000);
    const LIMIT: u64 = 20_000_000_000;
    if radius > 64 || cost > LIMIT {
        return Err(Error::ResourceLimit {
            what: "hitting table work",
            value: cost,
            limit: LIMIT,
        });
    }
    let k_max = steps as usize;
    let r = radius as u8;

    // q(m, b) for m ≤ K, b ≤ R
    let q: Vec<Vec<f64>> = (0..=r)
        .map(|b| {
            (0..=k_max as u64)
                .map(|m| {
                    let b = b as u64;
                    if m < b || (m + b) % 2 == 1 {
                        0.0
                    } else {
                        (ln_choose(m, (m + b) / 2) - m as f64 * 2f64.ln()).exp()
                    }
                })
                .collect()
        })
        .collect();

    // T_1(k; {b}) = q(k, b)
    let mut layer: HashMap<Vec<u8>, Vec<f64>> =
        (0..=r).map(|b| (vec![b], q[b as usize].clone())).collect();
    for j in 1..d {
        let p = 1.0 / (j + 1) as f64;
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let keys = multisets(j + 1, r);
        let next: Vec<(Vec<u8>, Vec<f64>)> = keys
            .into_par_iter()
            .map(|key| {
                // peel off the largest value: the prefix is itself sorted
                let b = *key.last().unwrap();
                let prev = &layer[&key[..j]];
                let qb = &q[b as usize];
                let vals: Vec<f64> = (0..=k_max)
                    .map(|k| {
                        let ku = k as u64;
                        let (lo, hi) = binomial_window(ku, p);
                        let lf_k = ln_factorial(ku);
                        let mut s = CompensatedSum::new();
                        for m in lo.max(b as u64)..=hi {
                            let qm = qb[m as usize];
                            let t = prev[k - m as usize];
                            if qm == 0.0 || t == 0.0 {
                                continue;
                            }
                            let lpmf = lf_k - ln_factorial(m) - ln_factorial(ku - m)
                                + m as f64 * lp
                                + (ku - m) as f64 * lq;
                            s.add(lpmf.exp() * qm * t);
                        }
                        s.value()
                    })
                    .collect();
                (key, vals)
            })
            .collect();
        layer = next.into_iter().collect();
    }

    let df = d as f64;
    let h = df / 2.0;
    let mut green = HashMap::with_capacity(layer.len());
    let mut errors = HashMap::with_capacity(layer.len());
    for (key, series) in &layer {
        let l1: u64 = key.iter().map(|&c| c as u64).sum();
        let norm2: f64 = key.iter().map(|&c| (c as f64).powi(2)).sum();
        // last step count with the right parity
        let k_last = if (k_max as u64 - l1).is_multiple_of(2) {
            k_max
        } else {
            k_max - 1
        };
        let kf = k_last as f64;
        let clt = |k: f64| 2.0 * (df / (2.0 * PI * k)).powf(h) * (-df * norm2 / (2.0 * k)).exp();
        let c = kf * (series[k_last] / clt(kf) - 1.0) - df * norm2 / 2.0;
        // Σ over k = k_last + 2, k_last + 4, … ≈ ½ ∫_{k_last+1}^∞
        let a = 2.0 * (df / (2.0 * PI)).powf(h);
        let x0 = kf + 1.0;
        let main = 0.5 * a * x0.powf(1.0 - h) / (h - 1.0);
        let correction = 0.5 * a * c * x0.powf(-h) / h;
        let em = a * h * x0.powf(-h - 1.0) / 6.0;
        let sum: f64 = series.iter().copied().collect::<CompensatedSum>().value();
        green.insert(key.clone(), sum + main + correction);
        errors.insert(key.clone(), 2.0 * correction.abs() + em);
    }
    let origin = vec![0u8; d];
    let g0 = green[&origin];
    let e0 = errors[&origin];
    let tolerance = green
        .iter()
        .map(|(k, &g)| (errors[k] + g / g0 * e0) / g0)
        .fold(0.0, f64::max);
    Ok(HittingTable {
        d,
        radius,
        green,
        green_origin: g0,
        tolerance,
    })
}

impl HittingTable {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// `G_d(0,0)` as computed by the table.
    pub fn green_origin(&self) -> f64 {
        self.green_origin
    }

    /// `F_d(x)`, or an error outside the box.
    pub fn get(&self, x: &[i64]) -> Result<f64> {
        if x.len() != self.d || x.iter().any(|c| c.unsigned_abs() > self.radius as u64) {
            return Err(Error::OutsideTable(x.to_vec()));
        }
        if x.iter().all(|&c| c == 0) {
            return Ok(1.0);
        }
        Ok(self.green[&point_key(x)] / self.green_origin)
    }

    /// `G_d(x)`.
    pub fn green(&self, x: &[i64]) -> Result<f64> {
        if x.len() != self.d || x.iter().any(|c| c.unsigned_abs() > self.radius as u64) {
            return Err(Error::OutsideTable(x.to_vec()));
        }
        Ok(self.green[&point_key(x)])
    }
}

// ---------------------------------------------------------------------------
// closed-form tail bounds

/// `ln L(n,d)` with `L(n,d) = (2n-1)!!/(2d)^n`.
fn ln_l(n: u64, d: usize) -> f64 {
    ln_factorial(2 * n) - ln_factorial(n) - n as f64 * 2f64.ln() - n as f64 * (2.0 * d as f64).ln()
}

pub fn l_value(n: u64, d: usize) -> f64 {
    ln_l(n, d).exp()
}

/// Exact `L(n,d)`.
pub fn l_exact(n: u64, d: usize) -> BigRational {
    let mut num = BigUint::one();
    for i in 1..=n {
        num *= 2 * i - 1;
    }
    BigRational::new(num.into(), BigUint::from(2 * d as u64).pow(n as u32).into())
}

fn ln_beta(n: u64) -> f64 {
    let x = n as f64;
    ln_factorial(n) - 0.5 * (2.0 * PI * x).ln() - x * (x.ln() - 1.0)
}

/// `β(n) = n!/(√(2πn) (n/e)^n)`.
pub fn beta(n: u64) -> f64 {
    ln_beta(n).exp()
}

/// `M_k = (k+1)^k/(e^k k!)`.
pub fn m_value(k: u64) -> f64 {
    let kf = k as f64;
    (kf * (kf + 1.0).ln() - kf - ln_factorial(k)).exp()
}

/// Closed-form bound `3/(2d²) + 2d/(2e)^{⌊d/2⌋}` on `H_d(1)`.
pub fn h1_bound(d: usize) -> f64 {
    let df = d as f64;
    1.5 / (df * df) + 2.0 * df / (2.0 * E).powi((d / 2) as i32)
}

/// Closed-form bound `2d(2/e)^{2d}` on `H_d(2)`.
pub fn h2_bound(d: usize) -> f64 {
    2.0 * d as f64 * (2.0 / E).powi(2 * d as i32)
}

#[derive(Clone, Debug, Serialize)]
pub struct PaperBoundsReport {
    pub d: usize,
    /// `(n, L(n,d))` for `n = 1..=2d+1`
    pub l_values: Vec<(u64, f64)>,
    /// `n` at which `L(n,d)` is smallest.
    pub l_argmin: u64,
    /// `L` strictly decreasing on `n < ⌈d⌉`.
    pub l_decreasing_below_d: bool,
    /// `L` nondecreasing from `n = ⌈d⌉` on. Fails: the step into `n = d`
    /// still has ratio `(2d-1)/(2d) < 1`.
    pub l_increasing_from_d: bool,
    /// `L` increasing from `n = d + 1` on.
    pub l_increasing_from_d_plus_1: bool,
    pub beta_samples: Vec<(u64, f64)>,
    pub m_values: Vec<(u64, f64)>,
    pub m_sup_is_m2: bool,
    /// Exact `H_d(1) = Σ_{n=2}^{d} P(S_{2n} = 0)`.
    pub h1_exact: f64,
    pub h1_bound: f64,
    pub h1_holds: bool,
    /// Exact `H_d(2) = Σ_{n=d+1}^{2d} P(S_{2n} = 0)`.
    pub h2_exact: f64,
    pub h2_bound: f64,
    pub h2_holds: bool,
}

/// Evaluates the closed-form tail bounds and checks their comparison claims.
pub fn paper_tail_bounds(d: usize) -> Result<PaperBoundsReport> {
    if d == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1".into()));
    }
    let du = d as u64;
    let l_values: Vec<(u64, f64)> = (1..=2 * du + 1).map(|n| (n, l_value(n, d))).collect();
    let l_argmin = l_values
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(n, _)| n)
        .unwrap();
    let l_exact_ratio = |n: u64| l_exact(n, d) < l_exact(n - 1, d);
    let l_decreasing_below_d = (2..du).all(l_exact_ratio);
    let l_increasing_from_d = (du.max(2)..=2 * du + 1).all(|n| !l_exact_ratio(n));
    let l_increasing_from_d_plus_1 = (du + 1..=2 * du + 1).all(|n| !l_exact_ratio(n));

    let beta_samples = [1u64, 2, 5, 10, 20, 50, 100, 1000]
        .iter()
        .map(|&n| (n, beta(n)))
        .collect();
    let m_values: Vec<(u64, f64)> = (2..=20).map(|k| (k, m_value(k))).collect();
    let m_sup_is_m2 = m_values.windows(2).all(|w| w[1].1 < w[0].1);

    let (h1_exact, h2_exact) = if 2 * du * du <= EXACT_LIMIT {
        let series = return_series_exact(d, 2 * du)?;
        let sum = |r: std::ops::RangeInclusive<u64>| -> f64 {
            let mut s = BigRational::zero();
            for n in r {
                s += &series[(n - 1) as usize];
            }
            rational_to_f64(&s)
        };
        (sum(2..=du), sum(du + 1..=2 * du))
    } else {
        let p = return_probabilities(d, 2 * du);
        let sum = |r: std::ops::RangeInclusive<u64>| -> f64 {
            r.map(|n| p[(n - 1) as usize])
                .collect::<CompensatedSum>()
                .value()
        };
        (sum(2..=du), sum(du + 1..=2 * du))
    };
    let (b1, b2) = (h1_bound(d), h2_bound(d));
    Ok(PaperBoundsReport {
        d,
        l_values,
        l_argmin,
        l_decreasing_below_d,
        l_increasing_from_d,
        l_increasing_from_d_plus_1,
        beta_samples,
        m_values,
        m_sup_is_m2,
        h1_exact,
        h1_bound: b1,
        h1_holds: h1_exact <= b1,
        h2_exact,
        h2_bound: b2,
        h2_holds: h2_exact <= b2,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle

#[derive(Copy, Clone, Debug, Serialize)]
pub struct McReturn {
    pub d: usize,
    /// Fraction of walks from `e_1` hitting 0 within the horizon. This
    /// lower-bounds `F_d(e_1)`.
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub horizon_steps: u64,
}

fn walk_hits_origin<R: RngCore>(rng: &mut R, d: usize, horizon: u64, pos: &mut [i64]) -> bool {
    pos.iter_mut().for_each(|c| *c = 0);
    pos[0] = 1;
    let mut nonzero = 1usize;
    let two_d = 2 * d as u64;
    for _ in 0..horizon {
        let r = index_below(rng, two_d) as usize;
        let axis = r >> 1;
        let before = pos[axis];
        let after = if r & 1 == 0 { before + 1 } else { before - 1 };
        pos[axis] = after;
        if before == 0 {
            nonzero += 1;
        } else if after == 0 {
            nonzero -= 1;
            if nonzero == 0 {
                return true;
            }
        }
    }
    false
}

/// Independent Monte Carlo estimate of `F_d(e_1)`.
pub fn mc_return_oracle(d: usize, trials: u64, horizon_steps: u64, seed: u64) -> Result<McReturn> {
    if d == 0 || trials == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1 and trials ≥ 1".into()));
    }
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replica_rng(seed, c);
            let mut pos = vec![0i64; d];
            let n = CHUNK.min(trials - c * CHUNK);
            (0..n)
                .filter(|_| walk_hits_origin(&mut rng, d, horizon_steps, &mut pos))
                .count() as u64
        })
        .sum();
    let (estimate, std_error) = binomial_estimate(hits, trials);
    Ok(McReturn {
        d,
        estimate,
        std_error,
        trials,
        horizon_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Brute force: enumerate all (2d)^{2n} walks.
    fn enumerate_returns(d: usize, n: u32) -> u64 {
        let steps = 2 * n;
        let total = (2 * d as u64).pow(steps);
        let mut count = 0;
        for code in 0..total {
            let mut pos = vec![0i64; d];
            let mut c = code;
            for _ in 0..steps {
                let r = (c % (2 * d as u64)) as usize;
                c /= 2 * d as u64;
                pos[r / 2] += if r.is_multiple_of(2) { 1 } else { -1 };
            }
            if pos.iter().all(|&x| x == 0) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn first_term_is_one_over_2d() {
        for d in 1..=8 {
            assert_eq!(p_return_exact(d, 1).unwrap(), rat(1, 2 * d as i64));
        }
    }

    #[test]
    fn known_small_values() {
        assert_eq!(p_return_exact(1, 2).unwrap(), rat(6, 16));
        assert_eq!(p_return_exact(2, 2).unwrap(), rat(36, 256));
    }

    #[test]
    fn exact_matches_enumeration() {
        for d in 1..=2 {
            for n in 1..=3u32 {
                let count = enumerate_returns(d, n);
                let total = (2 * d as i64).pow(2 * n);
                assert_eq!(
                    p_return_exact(d, n as u64).unwrap(),
                    rat(count as i64, total),
                    "d={d} n={n}"
                );
            }
        }
    }

    #[test]
    fn axis_convolution_normalizes() {
        for d in 1..=4 {
            for k in 0..=8u64 {
                let w: Vec<BigUint> = (0..=k).map(|m| BigUint::from(2u32).pow(m as u32)).collect();
                assert_eq!(
                    axis_convolution(d, k, &w),
                    BigUint::from(2 * d as u64).pow(k as u32)
                );
            }
        }
    }

    #[test]
    fn two_exact_routes_agree() {
        for d in 1..=5 {
            let counts = closed_walk_counts(d, 6);
            let w = closed_axis_paths(12);
            for n in 0..=6u64 {
                assert_eq!(counts[n as usize], axis_convolution(d, 2 * n, &w));
            }
        }
    }

    #[test]
    fn double_route_matches_exact() {
        for d in [1, 2, 3, 5, 10] {
            let exact = return_series_exact(d, 60).unwrap();
            let fast = return_probabilities(d, 60);
            for (e, f) in exact.iter().zip(&fast) {
                let e = rational_to_f64(e);
                assert!((e - f).abs() <= 1e-12 * e, "d={d}: {e} vs {f}");
            }
        }
    }

    #[test]
    fn exact_resource_guard() {
        assert!(matches!(
            p_return_exact(100, 1000),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn recurrent_dimensions() {
        assert!(matches!(
            green_function(1, 100, TailMode::LocalClt),
            Err(Error::Recurrent { d: 1 })
        ));
        assert!(matches!(
            green_function(2, 100, TailMode::LocalClt),
            Err(Error::Recurrent { d: 2 })
        ));
        let f = hitting_prob_e1(2).unwrap();
        assert!(f.recurrent);
        assert_eq!(f.value, 1.0);
    }

    #[test]
    fn divergence_in_one_dimension() {
        // partial sums grow like √n without bound
        let p = return_probabilities(1, 40_000);
        let s: f64 = p.iter().sum();
        assert!(s > 200.0);
    }

    #[test]
    fn green_is_at_least_first_term() {
        for d in 3..=8 {
            let g = green_function(d, 200, TailMode::LocalClt).unwrap();
            assert!(g.value >= 1.0 + 1.0 / (2 * d) as f64);
        }
    }

    #[test]
    fn clt_tail_matches_longer_series() {
        // the tail past N estimated from N terms matches what 4N terms add
        let short = green_function(3, 2_000, TailMode::LocalClt).unwrap();
        let long = green_function(3, 8_000, TailMode::LocalClt).unwrap();
        assert!((short.value - long.value).abs() < short.uncertainty + long.uncertainty + 1e-9);
        assert!(short.uncertainty < 1e-5);
    }

    #[test]
    fn paper_tail_dominates_clt_tail() {
        for d in [6, 10, 14] {
            let clt = green_function(d, 50, TailMode::LocalClt).unwrap();
            let paper = green_function(d, 50, TailMode::PaperBounds).unwrap();
            assert!(paper.tail >= clt.tail);
        }
    }

    #[test]
    fn paper_term_bound_dominates_terms() {
        for d in [3, 5, 10] {
            let p = return_probabilities(d, 300);
            for n in 1..=300u64 {
                assert!(paper_term_bound(d, n) >= p[(n - 1) as usize] * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn closed_form_constants() {
        assert!((m_value(2) - 9.0 / (2.0 * E * E)).abs() < 1e-15);
        assert!((l_value(2, 7) / (3.0 / (4.0 * 49.0)) - 1.0).abs() < 1e-13);
        assert_eq!(l_exact(2, 7), rat(3, 4 * 49));
        assert!((beta(10) - 1.0).abs() < 0.01);
        assert!((beta(1) - E / (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ln_factorial_is_accurate() {
        let mut acc = 0.0f64;
        for n in 1..2000u64 {
            acc += (n as f64).ln();
            assert!(
                (ln_factorial(n) - acc).abs() <= 1e-12 * acc.max(1.0),
                "n={n}"
            );
        }
    }

    #[test]
    fn l_minimum_sits_at_d() {
        for d in 2..12 {
            let r = paper_tail_bounds(d).unwrap();
            assert_eq!(r.l_argmin, d as u64);
            assert!(r.l_decreasing_below_d);
            assert!(!r.l_increasing_from_d);
            assert!(r.l_increasing_from_d_plus_1);
        }
    }

    #[test]
    fn one_step_oracle() {
        let r = mc_return_oracle(3, 60_000, 1, 5).unwrap();
        assert!((r.estimate - 1.0 / 6.0).abs() < 4.0 * r.std_error);
    }

    #[test]
    fn table_small_dimension_consistent() {
        let t = hitting_table_with(4, 2, 1500).unwrap();
        let f = hitting_prob_e1(4).unwrap();
        assert!(
            (t.get(&[1, 0, 0, 0]).unwrap() - f.value).abs() < t.tolerance + f.uncertainty + 1e-6
        );
        assert_eq!(t.get(&[0, 0, 0, 0]).unwrap(), 1.0);
        assert_eq!(
            t.get(&[1, -2, 0, 1]).unwrap(),
            t.get(&[2, 0, 1, -1]).unwrap()
        );
        assert!(t.get(&[3, 0, 0, 0]).is_err());
    }
}
