//! Weyl sums `S_ω(x, y; N) = Σ_{n=1}^{N} e(x n + y ω(n))`, their running
//! maxima, and the completion sum
//!
//! ```text
//! W_ω(x, y; N) = Σ_{h=-N}^{N} (|h|+1)^{-1} |Σ_{n=1}^{N} e(h n / N + x n + y ω(n))|
//! ```
//!
//! The inner sum depends on `h` only through `h mod N`, so all of them come
//! out of one length-`N` DFT of `z_n = e(x n + y ω(n))`. The `n = 1` start
//! of the index contributes a unimodular factor `e(h/N)` relative to a
//! 0-based transform, which does not change the magnitudes and is omitted.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::accum::{ComplexSum, NeumaierSum};
use crate::error::{Error, Result};
use crate::phase::{
    phase_direct, IntPolynomial, PhasePoint, PhaseSource, PhaseStream, RationalPoint,
    RationalRecurrence,
};

/// Default constant in [`perturbation_bound`].
pub const DEFAULT_PERTURBATION_CONSTANT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// `e(t) = exp(2πi t)`.
#[inline]
pub fn unit(turns: f64) -> Complex64 {
    let (s, c) = (TAU * turns).sin_cos();
    Complex64::new(c, s)
}

fn check_len(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("sum length N must be >= 1".into()));
    }
    Ok(())
}

fn stream<'a>(omega: &'a IntPolynomial, p: PhasePoint) -> Result<PhaseStream<'a>> {
    PhaseStream::new(omega, p, 1)
}

/// Walks `n = 1..=N`, calling `f(n, e(p(n)))`.
fn for_each_term<S: PhaseSource>(
    src: &mut S,
    n: u64,
    mut f: impl FnMut(u64, Complex64),
) -> Result<()> {
    for i in 1..=n {
        f(i, unit(src.turns()));
        if i < n {
            src.advance()?;
        }
    }
    Ok(())
}

fn sum_source<S: PhaseSource>(mut src: S, n: u64) -> Result<ComplexValue> {
    let mut acc = ComplexSum::default();
    for_each_term(&mut src, n, |_, z| acc.add(z))?;
    Ok(acc.value().into())
}

/// `S_ω(x, y; N)` through the phase recurrence with compensated summation.
/// Absolute error stays below `1e-6` for `N <= 10^6`.
pub fn weyl_sum(omega: &IntPolynomial, p: PhasePoint, n: u64) -> Result<ComplexValue> {
    check_len(n)?;
    sum_source(stream(omega, p)?, n)
}

/// `S_ω` at a rational point with exact phases; only `e(·)` is rounded.
pub fn weyl_sum_exact(omega: &IntPolynomial, p: RationalPoint, n: u64) -> Result<ComplexValue> {
    check_len(n)?;
    sum_source(RationalRecurrence::init(omega, p, 1)?, n)
}

/// Slow oracle: every phase reduced from its exact value, no recurrence.
pub fn weyl_sum_reference(omega: &IntPolynomial, p: PhasePoint, n: u64) -> Result<ComplexValue> {
    check_len(n)?;
    let mut acc = ComplexSum::default();
    for i in 1..=n {
        acc.add(unit(phase_direct(omega, p, i)?.to_f64()));
    }
    Ok(acc.value().into())
}

/// `max_{1<=M<=N} |S_ω(x, y; M)|` in one pass.
pub fn partial_max(omega: &IntPolynomial, p: PhasePoint, n: u64) -> Result<f64> {
    check_len(n)?;
    let mut src = stream(omega, p)?;
    let mut acc = ComplexSum::default();
    let mut best = 0.0f64;
    for_each_term(&mut src, n, |_, z| {
        acc.add(z);
        best = best.max(acc.value().norm());
    })?;
    Ok(best)
}

/// `z_n = e(x n + y ω(n))` for `n = 1..=N`.
pub fn terms(omega: &IntPolynomial, p: PhasePoint, n: u64) -> Result<Vec<Complex64>> {
    check_len(n)?;
    let mut out = Vec::with_capacity(n as usize);
    let mut src = stream(omega, p)?;
    for_each_term(&mut src, n, |_, z| out.push(z))?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionMethod {
    Fft,
    Direct,
}

impl std::str::FromStr for CompletionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fft" => Ok(Self::Fft),
            "direct" => Ok(Self::Direct),
            _ => Err(Error::Parse(format!("unknown completion method {s:?} (fft|direct)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    /// `W_ω(x, y; N)`.
    pub value: f64,
    /// `|Σ_n z_n e(h n/N)|` for `h = 0..N-1`, when requested.
    pub inner_spectrum: Option<Vec<f64>>,
    pub n: u64,
}

/// Weighted fold of the aliased spectrum: `Σ_{h=-N}^{N} |I(h mod N)| / (|h|+1)`.
fn fold_spectrum(mags: &[f64]) -> f64 {
    let n = mags.len() as i64;
    let mut acc = NeumaierSum::default();
    for h in -n..=n {
        acc.add(mags[h.rem_euclid(n) as usize] / (h.unsigned_abs() as f64 + 1.0));
    }
    acc.value()
}

/// Precomputed FFT plan for repeated `W` evaluations at one `N`.
#[derive(Clone)]
pub struct CompletionEvaluator {
    omega: IntPolynomial,
    n: u64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CompletionEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompletionEvaluator")
            .field("omega", &self.omega)
            .field("n", &self.n)
            .finish()
    }
}

impl CompletionEvaluator {
    pub fn new(omega: &IntPolynomial, n: u64) -> Result<Self> {
        check_len(n)?;
        let fft = FftPlanner::new().plan_fft_inverse(n as usize);
        Ok(Self {
            omega: omega.clone(),
            n,
            fft,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `|I(h)|` for `h = 0..N-1`.
    pub fn spectrum(&self, p: PhasePoint) -> Result<Vec<f64>> {
        let mut buf = terms(&self.omega, p, self.n)?;
        self.fft.process(&mut buf);
        Ok(buf.iter().map(|z| z.norm()).collect())
    }

    pub fn eval(&self, p: PhasePoint) -> Result<f64> {
        Ok(fold_spectrum(&self.spectrum(p)?))
    }

    /// `S` and `W` from a single pass over the terms.
    pub fn eval_with_sum(&self, p: PhasePoint) -> Result<(ComplexValue, f64)> {
        let mut buf = terms(&self.omega, p, self.n)?;
        let mut acc = ComplexSum::default();
        buf.iter().for_each(|z| acc.add(*z));
        self.fft.process(&mut buf);
        let mags: Vec<f64> = buf.iter().map(|z| z.norm()).collect();
        Ok((acc.value().into(), fold_spectrum(&mags)))
    }
}

/// Table of `e(j/N)` for `j = 0..N-1`, each from exact `j/N`.
fn twiddles(n: u64) -> Vec<Complex64> {
    (0..n).map(|j| unit(j as f64 / n as f64)).collect()
}

/// One inner sum `Σ_{n=1}^{N} e(h n/N + x n + y ω(n))` by direct summation.
/// The `h n / N` part is reduced exactly as the integer `h n mod N`, so `h`
/// and `h ± N` give bit-identical results.
pub fn inner_sum_direct(
    omega: &IntPolynomial,
    p: PhasePoint,
    n: u64,
    h: i64,
) -> Result<ComplexValue> {
    let z = terms(omega, p, n)?;
    Ok(inner_from_terms(&z, &twiddles(n), h).into())
}

fn inner_from_terms(z: &[Complex64], tw: &[Complex64], h: i64) -> Complex64 {
    let n = z.len() as i128;
    let mut acc = ComplexSum::default();
    for (i, zi) in z.iter().enumerate() {
        let idx = (h as i128 * (i as i128 + 1)).rem_euclid(n) as usize;
        acc.add(zi * tw[idx]);
    }
    acc.value()
}

/// `W_ω(x, y; N)`. The `Fft` method costs `O(N log N)`; `Direct` evaluates
/// all `2N+1` inner sums in `O(N^2)` and serves as the oracle.
pub fn completion_sum(
    omega: &IntPolynomial,
    p: PhasePoint,
    n: u64,
    method: CompletionMethod,
    keep_spectrum: bool,
) -> Result<CompletionResult> {
    check_len(n)?;
    let (value, spectrum) = match method {
        CompletionMethod::Fft => {
            let mags = CompletionEvaluator::new(omega, n)?.spectrum(p)?;
            (fold_spectrum(&mags), mags)
        }
        CompletionMethod::Direct => {
            let z = terms(omega, p, n)?;
            let tw = twiddles(n);
            let ni = n as i64;
            let mut acc = NeumaierSum::default();
            let mut mags = vec![0.0; n as usize];
            for h in -ni..=ni {
                let m = inner_from_terms(&z, &tw, h).norm();
                if (0..ni).contains(&h) {
                    mags[h as usize] = m;
                }
                acc.add(m / (h.unsigned_abs() as f64 + 1.0));
            }
            (acc.value(), mags)
        }
    };
    Ok(CompletionResult {
        value,
        inner_spectrum: keep_spectrum.then_some(spectrum),
        n,
    })
}

/// `C · ln N · (N^2 |δ1| + N^{k+1} |δ2|)`: a modulus of continuity for `W`
/// under the shift `(x, y) -> (x + δ1, y + δ2)`.
pub fn perturbation_bound(omega: &IntPolynomial, n: u64, delta1: f64, delta2: f64, c: f64) -> f64 {
    let nf = n as f64;
    let k = omega.degree() as i32;
    c * nf.ln() * (nf * nf * delta1.abs() + nf.powi(k + 1) * delta2.abs())
}

/// One row of a batch evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

/// Evaluates `S` and `W` at every `(point, N)`; output order follows input.
pub fn evaluate_batch(omega: &IntPolynomial, inputs: &[(PhasePoint, u64)]) -> Result<Vec<BatchRow>> {
    inputs
        .par_iter()
        .map(|&(p, n)| {
            let (s, w) = CompletionEvaluator::new(omega, n)?.eval_with_sum(p)?;
            Ok(BatchRow {
                x: p.x,
                y: p.y,
                n,
                re: s.re,
                im: s.im,
                abs: s.abs(),
                w,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn t2() -> IntPolynomial {
        IntPolynomial::monomial(2).unwrap()
    }

    fn pt(x: f64, y: f64) -> PhasePoint {
        PhasePoint::new(x, y).unwrap()
    }

    // plain summation with phases from exact rationals, used as an oracle
    fn direct_rational_sum(coeffs: &[i64], a: i64, q: i64, b: i64, r: i64, n: u64) -> Complex64 {
        (1..=n as i64)
            .map(|m| {
                let w: i64 = coeffs.iter().rev().fold(0, |acc, &c| acc * m + c);
                let num = (a * m * r + b * w * q).rem_euclid(q * r);
                unit(num as f64 / (q * r) as f64)
            })
            .sum()
    }

    #[test]
    fn weyl_sum_examples() {
        let s = weyl_sum(&t2(), PhasePoint::origin(), 7).unwrap();
        assert_eq!((s.re, s.im), (7.0, 0.0));
        let s = weyl_sum(&t2(), pt(0.5, 0.0), 5).unwrap();
        assert!((s.re + 1.0).abs() < 1e-15 && s.im.abs() < 1e-15);
        let s = weyl_sum(&t2(), pt(0.0, 0.2), 5).unwrap();
        let oracle = direct_rational_sum(&[0, 0, 1], 0, 1, 1, 5, 5);
        assert!((s.abs() - oracle.norm()).abs() < 1e-12);
        assert!((s.abs() - 5f64.sqrt()).abs() < 1e-7);
        assert!(weyl_sum(&t2(), pt(0.0, 0.2), 0).is_err());
    }

    #[test]
    fn reference_examples() {
        let s = weyl_sum_reference(&t2(), PhasePoint::origin(), 1000).unwrap();
        assert_eq!((s.re, s.im), (1000.0, 0.0));
        let s = weyl_sum_reference(&t2(), pt(0.0, 1.0 / 101.0), 101).unwrap();
        assert!((s.abs() - 101f64.sqrt()).abs() < 1e-9);
        let w = IntPolynomial::monomial(3).unwrap();
        let p = pt(0.6180339887498949, 0.41421356237309515);
        let a = weyl_sum(&w, p, 4096).unwrap();
        let b = weyl_sum_reference(&w, p, 4096).unwrap();
        assert!((a.re - b.re).abs() < 1e-6 && (a.im - b.im).abs() < 1e-6);
    }

    #[test]
    fn exact_path_matches_oracle() {
        let p = RationalPoint::new(Ratio::new(2, 7), Ratio::new(3, 11)).unwrap();
        let w: IntPolynomial = "1,0,-2,1".parse().unwrap();
        let s = weyl_sum_exact(&w, p, 500).unwrap();
        let o = direct_rational_sum(&[1, 0, -2, 1], 2, 7, 3, 11, 500);
        assert!((s.re - o.re).abs() < 1e-10 && (s.im - o.im).abs() < 1e-10);
    }

    #[test]
    fn partial_max_examples() {
        assert_eq!(partial_max(&t2(), PhasePoint::origin(), 9).unwrap(), 9.0);
        assert!((partial_max(&t2(), pt(0.5, 0.0), 6).unwrap() - 1.0).abs() < 1e-15);
        let p = pt(0.3, 0.77);
        let m = partial_max(&t2(), p, 300).unwrap();
        assert!(m >= weyl_sum(&t2(), p, 300).unwrap().abs());
    }

    #[test]
    fn completion_examples() {
        let r = completion_sum(&t2(), PhasePoint::origin(), 4, CompletionMethod::Direct, false)
            .unwrap();
        assert!((r.value - 5.6).abs() < 1e-12);
        let r = completion_sum(&t2(), PhasePoint::origin(), 4, CompletionMethod::Fft, true).unwrap();
        assert!((r.value - 5.6).abs() < 1e-12);
        assert_eq!(r.inner_spectrum.as_ref().unwrap().len(), 4);
        for m in [CompletionMethod::Fft, CompletionMethod::Direct] {
            let r = completion_sum(&t2(), PhasePoint::origin(), 1, m, false).unwrap();
            assert!((r.value - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn completion_dominates_endpoint() {
        let p = pt(0.1234, 0.9876);
        let s = weyl_sum(&t2(), p, 97).unwrap().abs();
        let w = completion_sum(&t2(), p, 97, CompletionMethod::Fft, false).unwrap().value;
        assert!(w >= s - 1e-9);
    }

    #[test]
    fn aliasing_is_exact() {
        let w = IntPolynomial::monomial(3).unwrap();
        let p = pt(0.377, 0.052);
        for h in [-13i64, -1, 0, 5, 12] {
            let a = inner_sum_direct(&w, p, 13, h).unwrap();
            let b = inner_sum_direct(&w, p, 13, h + 13).unwrap();
            let c = inner_sum_direct(&w, p, 13, h - 13).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn fft_matches_direct_small_primes() {
        let w: IntPolynomial = "0,3,-1,2".parse().unwrap();
        for n in [2u64, 3, 7, 31, 64, 97] {
            let p = pt(0.2718, 0.3141);
            let a = completion_sum(&w, p, n, CompletionMethod::Fft, false).unwrap().value;
            let b = completion_sum(&w, p, n, CompletionMethod::Direct, false).unwrap().value;
            assert!((a - b).abs() <= 1e-9 * b, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn perturbation_examples() {
        assert_eq!(perturbation_bound(&t2(), 16, 0.0, 0.0, 100.0), 0.0);
        let b = perturbation_bound(&t2(), 16, 0.0, 16f64.powi(-3), 100.0);
        assert!((b - 100.0 * 16f64.ln()).abs() < 1e-9);
        let one = perturbation_bound(&t2(), 64, 1e-5, 0.0, 100.0);
        let two = perturbation_bound(&t2(), 64, 2e-5, 0.0, 100.0);
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn batch_preserves_order() {
        let inputs: Vec<(PhasePoint, u64)> =
            (0..20).map(|i| (pt(i as f64 / 20.0, 0.3), 8 + i as u64)).collect();
        let rows = evaluate_batch(&t2(), &inputs).unwrap();
        for (row, (p, n)) in rows.iter().zip(&inputs) {
            assert_eq!((row.x, row.n), (p.x, *n));
            let s = weyl_sum(&t2(), *p, *n).unwrap();
            assert!((row.abs - s.abs()).abs() < 1e-12);
            assert!(row.w >= row.abs - 1e-9);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn triangle_inequality(x in 0.0f64..1.0, y in 0.0f64..1.0, n in 1u64..400) {
                prop_assert!(weyl_sum(&t2(), pt(x, y), n).unwrap().abs() <= n as f64 + 1e-9);
            }

            #[test]
            fn conjugate_symmetry(a in 0u64..1 << 40, b in 0u64..1 << 40, n in 1u64..400, k in 2u32..5) {
                // dyadic coordinates so that 1 - x and 1 - y are exact
                let w = IntPolynomial::monomial(k).unwrap();
                let p = pt(a as f64 / 2f64.powi(40), b as f64 / 2f64.powi(40));
                let a = weyl_sum(&w, p, n).unwrap();
                let b = weyl_sum(&w, p.negated(), n).unwrap();
                prop_assert!((a.abs() - b.abs()).abs() <= 1e-9);
                prop_assert!((a.re - b.re).abs() <= 1e-9 && (a.im + b.im).abs() <= 1e-9);
            }
        }
    }
}
