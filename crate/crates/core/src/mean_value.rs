//! Mean values of two-parametric Weyl sums.
//!
//! By orthogonality, `∫∫ |S_ω(x, y; N)|^{2s} dx dy` equals the number `J` of
//! tuples `(n_1, ..., n_{2s}) ∈ [1, N]^{2s}` with
//! `Σ (-1)^j n_j = 0` and `Σ (-1)^j ω(n_j) = 0`. Writing `r(v)` for the number
//! of `s`-tuples whose key `(Σ n, Σ ω(n))` is `v`, `J = Σ_v r(v)^2`.
//!
//! Only integer `s` is supported: the passage from the real-exponent mean
//! value bound to a solution count needs `2s` to be an even integer.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::phase::IntPolynomial;
use crate::sampling::{chunked_moments, CounterRng};
use crate::weyl::{weyl_sum, CompletionEvaluator};

/// Default cap on the number `N^s` of enumerated half-tuples.
pub const DEFAULT_BUDGET: u64 = 1 << 28;

fn as_decimal<S: Serializer>(v: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn as_omega<S: Serializer>(w: &IntPolynomial, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionCount {
    #[serde(rename = "omega", serialize_with = "as_omega")]
    pub omega: IntPolynomial,
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "J", serialize_with = "as_decimal")]
    pub j: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub slope: f64,
    pub intercept: f64,
    pub residual_max: f64,
    pub points: Vec<(u64, f64)>,
}

fn tuple_count(s: u32, n: u64, budget: u64) -> Result<u64> {
    let needed = n.checked_pow(s);
    match needed {
        Some(v) if v <= budget => Ok(v),
        _ => Err(Error::BudgetExceeded {
            what: "s-tuple enumeration",
            needed: (n as u128).checked_pow(s).unwrap_or(u128::MAX),
            budget: budget as u128,
        }),
    }
}

/// Packs `(Σ n, Σ ω(n))` into one integer, ordered lexicographically.
#[derive(Debug, Clone, Copy)]
struct KeyPacker {
    s: u128,
    min_w: i128,
    span_w: u128,
}

impl KeyPacker {
    fn new(values: &[i128], s: u32) -> Result<(Self, u128)> {
        let overflow = || Error::Overflow("solution-count keys exceed 128-bit range".into());
        let lo = *values.iter().min().expect("N >= 1");
        let hi = *values.iter().max().expect("N >= 1");
        let s128 = s as i128;
        let min_w = lo.checked_mul(s128).ok_or_else(overflow)?;
        let max_w = hi.checked_mul(s128).ok_or_else(overflow)?;
        let span_w = max_w
            .checked_sub(min_w)
            .and_then(|d| (d as u128).checked_add(1))
            .ok_or_else(overflow)?;
        let span_n = (values.len() as u128 - 1) * s as u128 + 1;
        let total = span_n.checked_mul(span_w).ok_or_else(overflow)?;
        Ok((
            Self {
                s: s as u128,
                min_w,
                span_w,
            },
            total,
        ))
    }

    #[inline]
    fn pack(&self, sum_n: u64, sum_w: i128) -> u128 {
        (sum_n as u128 - self.s) * self.span_w + (sum_w - self.min_w) as u128
    }
}

trait Key: Ord + Copy + Send + Sync {
    fn from_packed(v: u128) -> Self;
}

impl Key for u64 {
    fn from_packed(v: u128) -> Self {
        v as u64
    }
}

impl Key for u128 {
    fn from_packed(v: u128) -> Self {
        v
    }
}

/// Enumerates nondecreasing `s`-tuples whose first entry is `first`, with
/// the number of orderings of each multiset as its weight.
fn multisets_from<K: Key>(
    values: &[i128],
    s: u32,
    first: usize,
    packer: &KeyPacker,
    out: &mut Vec<(K, u64)>,
) {
    struct Walk<'a, K> {
        values: &'a [i128],
        s: u32,
        packer: &'a KeyPacker,
        out: &'a mut Vec<(K, u64)>,
    }
    impl<K: Key> Walk<'_, K> {
        // `weight` is the multinomial of the prefix of length `depth`
        fn go(&mut self, last: usize, run: u128, depth: u32, sum_n: u64, sum_w: i128, weight: u128) {
            if depth == self.s {
                let key = K::from_packed(self.packer.pack(sum_n, sum_w));
                self.out.push((key, weight as u64));
                return;
            }
            for next in last..self.values.len() {
                let r = if next == last { run + 1 } else { 1 };
                let w = weight * (depth as u128 + 1) / r;
                self.go(
                    next,
                    r,
                    depth + 1,
                    sum_n + next as u64 + 1,
                    sum_w + self.values[next],
                    w,
                );
            }
        }
    }
    let mut walk = Walk {
        values,
        s,
        packer,
        out,
    };
    walk.go(first, 1, 1, first as u64 + 1, values[first], 1);
}

fn sum_squared_runs<K: Key>(mut keyed: Vec<(K, u64)>) -> u128 {
    keyed.par_sort_unstable_by_key(|e| e.0);
    let mut j: u128 = 0;
    let mut i = 0;
    while i < keyed.len() {
        let key = keyed[i].0;
        let mut r: u128 = 0;
        while i < keyed.len() && keyed[i].0 == key {
            r += keyed[i].1 as u128;
            i += 1;
        }
        j += r * r;
    }
    j
}

fn count_with<K: Key>(values: &[i128], s: u32, packer: &KeyPacker) -> u128 {
    let parts: Vec<Vec<(K, u64)>> = (0..values.len())
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            multisets_from(values, s, first, packer, &mut out);
            out
        })
        .collect();
    sum_squared_runs(parts.concat())
}

fn omega_values(omega: &IntPolynomial, n: u64) -> Result<Vec<i128>> {
    (1..=n).map(|m| omega.eval(m)).collect()
}

fn check_sizes(s: u32, n: u64) -> Result<()> {
    if s == 0 || n == 0 {
        return Err(Error::Domain(format!("need s >= 1 and N >= 1, got s={s}, N={n}")));
    }
    Ok(())
}

/// Exact `J(ω, s, N)` by sorting half-tuple keys and summing squared
/// multiplicities. Half-tuples are enumerated as multisets weighted by their
/// number of orderings; the budget still applies to the `N^s` ordered tuples.
pub fn count_solutions(omega: &IntPolynomial, s: u32, n: u64, budget: u64) -> Result<SolutionCount> {
    check_sizes(s, n)?;
    tuple_count(s, n, budget)?;
    let values = omega_values(omega, n)?;
    let (packer, span) = KeyPacker::new(&values, s)?;
    let j = if span <= u64::MAX as u128 {
        count_with::<u64>(&values, s, &packer)
    } else {
        count_with::<u128>(&values, s, &packer)
    };
    Ok(SolutionCount {
        omega: omega.clone(),
        s,
        n,
        j,
    })
}

/// Keys of all ordered `s`-tuples, in mixed-radix order of the tuple.
fn ordered_keys(values: &[i128], s: u32, packer: &KeyPacker, reversed: bool) -> Vec<u128> {
    let n = values.len();
    let mut idx = vec![0usize; s as usize];
    let mut keys = Vec::new();
    loop {
        let (sum_n, sum_w) = idx.iter().fold((0u64, 0i128), |(a, b), &i| {
            (a + i as u64 + 1, b + values[i])
        });
        keys.push(packer.pack(sum_n, sum_w));
        // odometer; `reversed` turns the last digit fastest instead of the first
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return keys;
            }
            let d = if reversed { idx.len() - 1 - pos } else { pos };
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            pos += 1;
        }
    }
}

/// `J` as a merge join `Σ_v r_+(v) r_-(v)` between the positive-sign and
/// negative-sign halves, each enumerated as ordered tuples. Independent of
/// the multiset route in [`count_solutions`].
pub fn count_solutions_by_join(
    omega: &IntPolynomial,
    s: u32,
    n: u64,
    budget: u64,
) -> Result<SolutionCount> {
    check_sizes(s, n)?;
    tuple_count(s, n, budget)?;
    let values = omega_values(omega, n)?;
    let (packer, _) = KeyPacker::new(&values, s)?;
    let mut plus = ordered_keys(&values, s, &packer, false);
    let mut minus = ordered_keys(&values, s, &packer, true);
    plus.sort_unstable();
    minus.sort_unstable();
    let (mut i, mut k, mut j) = (0, 0, 0u128);
    while i < plus.len() && k < minus.len() {
        match plus[i].cmp(&minus[k]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => {
                let v = plus[i];
                let a = plus[i..].iter().take_while(|&&x| x == v).count();
                let b = minus[k..].iter().take_while(|&&x| x == v).count();
                j += a as u128 * b as u128;
                i += a;
                k += b;
            }
        }
    }
    Ok(SolutionCount {
        omega: omega.clone(),
        s,
        n,
        j,
    })
}

const MIN_SAMPLES: u64 = 1000;

fn monte_carlo<F>(samples: u64, seed: u64, f: F) -> Result<MomentEstimate>
where
    F: Fn(crate::phase::PhasePoint) -> Result<f64> + Sync,
{
    if samples < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "Monte-Carlo moments need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let rng = CounterRng::new(seed);
    let m = chunked_moments(samples, |i| f(rng.point(i)))?;
    Ok(MomentEstimate {
        mean: m.mean,
        std_error: m.std_error(),
        samples,
        seed,
    })
}

/// Monte-Carlo estimate of `∫∫ |S_ω(x, y; N)|^{2s} dx dy`, which equals `J`.
pub fn mc_moment_s(
    omega: &IntPolynomial,
    s: u32,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    check_sizes(s, n)?;
    monte_carlo(samples, seed, |p| {
        let a = weyl_sum(omega, p, n)?;
        Ok((a.re * a.re + a.im * a.im).powi(s as i32))
    })
}

/// Monte-Carlo estimate of `∫∫ W_ω(x, y; N)^{2s} dx dy`.
pub fn mc_moment_w(
    omega: &IntPolynomial,
    s: u32,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    check_sizes(s, n)?;
    let eval = CompletionEvaluator::new(omega, n)?;
    monte_carlo(samples, seed, |p| Ok(eval.eval(p)?.powi(2 * s as i32)))
}

/// Least-squares line through `(ln N, ln value)`.
pub fn fit_exponent(points: &[(u64, f64)]) -> Result<ExponentReport> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "exponent fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(bad) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "exponent fit needs positive finite values, got {} at N={}",
            bad.1, bad.0
        )));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) || points[0].0 == 0 {
        return Err(Error::DegenerateInput(
            "exponent fit needs strictly increasing positive N".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_max = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(ExponentReport {
        slope,
        intercept,
        residual_max,
        points: points.to_vec(),
    })
}
