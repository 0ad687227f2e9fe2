//! Decomposition of the torus into `ζ1 × ζ2` rectangles and detection of
//! rectangles on which the completion sum `W` is large.
//!
//! `ζ1 = 1/⌈N^{2+ε-α}⌉` and `ζ2 = 1/⌈N^{k+1+ε-α}⌉` are small enough that `W`
//! varies by at most a factor two across a rectangle, so evaluating `W` at
//! the centre against the threshold `N^α / 2` flags every rectangle that
//! contains a point with `W >= N^α`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Pow, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::error::{Error, Result};
use crate::phase::{IntPolynomial, PhasePoint};
use crate::weyl::CompletionEvaluator;

pub const DEFAULT_EPS: f64 = 0.05;
pub const DEFAULT_SCAN_BUDGET: u64 = 1 << 24;
pub const DEFAULT_STRIP: u64 = 4096;
pub const DEFAULT_MAX_FLAGGED: usize = 1 << 16;

/// Largest denominator tried when reading `α` and `ε` as exact fractions.
const MAX_DENOMINATOR: i64 = 1000;
/// Relative gap required between `N^E` and an integer on the fallback path.
const LOG_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Ceilings proved by exact integer power comparison.
    ExactPower,
    /// Ceilings from logarithms, separated from every integer by a margin.
    LogMargin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: u64,
    pub alpha: f64,
    pub eps: f64,
    pub k: u32,
    /// `1/ζ1`.
    pub counts_x: u64,
    /// `1/ζ2`.
    pub counts_y: u64,
    pub certification: Certification,
}

impl GridSpec {
    pub fn zeta1(&self) -> f64 {
        1.0 / self.counts_x as f64
    }

    pub fn zeta2(&self) -> f64 {
        1.0 / self.counts_y as f64
    }

    pub fn square_count(&self) -> u128 {
        self.counts_x as u128 * self.counts_y as u128
    }

    /// `N^α / 2`.
    pub fn threshold(&self) -> f64 {
        (self.n as f64).powf(self.alpha) / 2.0
    }

    /// Centre of square `(ix, iy)`.
    pub fn center(&self, ix: u64, iy: u64) -> PhasePoint {
        PhasePoint {
            x: (2 * ix + 1) as f64 / (2 * self.counts_x) as f64,
            y: (2 * iy + 1) as f64 / (2 * self.counts_y) as f64,
        }
    }

    /// Index of the square containing `p`.
    pub fn square_of(&self, p: PhasePoint) -> (u64, u64) {
        let ix = ((p.x * self.counts_x as f64) as u64).min(self.counts_x - 1);
        let iy = ((p.y * self.counts_y as f64) as u64).min(self.counts_y - 1);
        (ix, iy)
    }
}

/// Shortest continued-fraction convergent that rounds back to `v`.
fn simple_fraction(v: f64, max_den: i64) -> Option<Ratio<i64>> {
    let exact = BigRational::from_float(v)?;
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact;
    for _ in 0..64 {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            return None;
        }
        let cand = Ratio::new(h2.to_i64()?, k2.to_i64()?);
        if cand.to_f64() == Some(v) {
            return Some(cand);
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return None;
        }
        rest = frac.recip();
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    None
}

/// `⌈N^{p/q}⌉`, certified by `(m-1)^q < N^p <= m^q`.
fn exact_ceiling(n: u64, e: Ratio<i64>) -> Result<u64> {
    let (p, q) = (*e.numer(), *e.denom());
    if p <= 0 {
        return Err(Error::Domain(format!("grid exponent must be positive, got {e}")));
    }
    let target = BigInt::from(n).pow(p as u64);
    let guess = ((n as f64).ln() * p as f64 / q as f64).exp();
    if !guess.is_finite() || guess >= u64::MAX as f64 / 2.0 {
        return Err(Error::Overflow(format!("N^{e} does not fit in 64 bits")));
    }
    let mut m = (guess.ceil() as u64).max(1);
    let pow = |m: u64| BigInt::from(m).pow(q as u64);
    while pow(m) < target {
        m += 1;
    }
    while m > 1 && pow(m - 1) >= target {
        m -= 1;
    }
    Ok(m)
}

/// `⌈exp(x)⌉` when `exp(x)` is safely away from every integer.
fn margin_ceiling(x: f64, what: &str) -> Result<u64> {
    let g = x.exp();
    if !g.is_finite() || g >= 2f64.powi(52) {
        return Err(Error::Overflow(format!("{what} = {g:e} does not fit the grid")));
    }
    let m = g.ceil();
    let gap = (m - g).min(g - (m - 1.0));
    if gap <= LOG_MARGIN * g.max(1.0) {
        return Err(Error::Precision(format!(
            "cannot certify the ceiling of {what} = {g}: too close to an integer"
        )));
    }
    Ok(m as u64)
}

pub fn grid_spec(n: u64, alpha: f64, eps: f64, k: u32) -> Result<GridSpec> {
    if n < 2 {
        return Err(Error::Domain(format!("N must be at least 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("α must lie in (0, 1), got {alpha}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("ε must be non-negative, got {eps}")));
    }
    if k < 2 {
        return Err(Error::Domain(format!("degree k must be at least 2, got {k}")));
    }
    let exact = simple_fraction(alpha, MAX_DENOMINATOR).zip(simple_fraction(eps, MAX_DENOMINATOR));
    let (counts_x, counts_y, certification) = match exact {
        Some((a, e)) if (a.denom() * e.denom()) / a.denom().gcd(e.denom()) <= MAX_DENOMINATOR => {
            let base = e - a;
            let cx = exact_ceiling(n, base + 2)?;
            let cy = exact_ceiling(n, base + (k as i64 + 1))?;
            (cx, cy, Certification::ExactPower)
        }
        _ => {
            let ln = (n as f64).ln();
            let cx = margin_ceiling((2.0 + eps - alpha) * ln, "N^(2+ε-α)")?;
            let cy = margin_ceiling((k as f64 + 1.0 + eps - alpha) * ln, "N^(k+1+ε-α)")?;
            (cx, cy, Certification::LogMargin)
        }
    };
    Ok(GridSpec {
        n,
        alpha,
        eps,
        k,
        counts_x,
        counts_y,
        certification,
    })
}

/// Half-open block of squares `[x0, x1) × [y0, y1)` in grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub x0: u64,
    pub x1: u64,
    pub y0: u64,
    pub y1: u64,
}

impl Window {
    pub fn full(spec: &GridSpec) -> Self {
        Self {
            x0: 0,
            x1: spec.counts_x,
            y0: 0,
            y1: spec.counts_y,
        }
    }

    /// Every square meeting `[x0, x1] × [y0, y1] ⊆ [0, 1]^2`.
    pub fn from_coords(spec: &GridSpec, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = |a: f64, b: f64| (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a <= b;
        if !ok(x0, x1) || !ok(y0, y1) {
            return Err(Error::Domain(format!(
                "window must satisfy 0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1, got {x0},{x1},{y0},{y1}"
            )));
        }
        let lo = |v: f64, c: u64| ((v * c as f64).floor() as u64).min(c - 1);
        let hi = |v: f64, c: u64| ((v * c as f64).ceil() as u64).clamp(1, c);
        let (cx, cy) = (spec.counts_x, spec.counts_y);
        Ok(Self {
            x0: lo(x0, cx),
            x1: hi(x1, cx).max(lo(x0, cx) + 1),
            y0: lo(y0, cy),
            y1: hi(y1, cy).max(lo(y0, cy) + 1),
        })
    }

    /// The `(2r+1) × (2r+1)` block centred on the square containing `p`,
    /// clipped to the grid.
    pub fn around(spec: &GridSpec, p: PhasePoint, r: u64) -> Self {
        let (ix, iy) = spec.square_of(p);
        Self {
            x0: ix.saturating_sub(r),
            x1: (ix + r + 1).min(spec.counts_x),
            y0: iy.saturating_sub(r),
            y1: (iy + r + 1).min(spec.counts_y),
        }
    }

    pub fn width(&self) -> u64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u64 {
        self.y1 - self.y0
    }

    pub fn len(&self) -> u128 {
        self.width() as u128 * self.height() as u128
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn contains_square(&self, ix: u64, iy: u64) -> bool {
        (self.x0..self.x1).contains(&ix) && (self.y0..self.y1).contains(&iy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanParams {
    pub s: u32,
    pub t: u32,
    /// Squares per parallel work unit.
    pub strip_len: u64,
    /// Largest number of squares a scan may evaluate.
    pub budget: u64,
    /// Flagged squares kept in the result, first in scan order.
    pub max_flagged: usize,
}

impl ScanParams {
    /// `(s, t) = (s0(k), k + 1)`.
    pub fn for_degree(k: u32) -> Result<Self> {
        let s = bounds::s0(k as u64)?;
        let s = u32::try_from(s).map_err(|_| Error::Overflow(format!("s0({k}) = {s}")))?;
        Ok(Self {
            s,
            t: k + 1,
            strip_len: DEFAULT_STRIP,
            budget: DEFAULT_SCAN_BUDGET,
            max_flagged: DEFAULT_MAX_FLAGGED,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlaggedSquare {
    pub ix: u64,
    pub iy: u64,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub spec: GridSpec,
    pub window: Window,
    pub s: u32,
    pub t: u32,
    pub squares_scanned: u64,
    pub large_count: u64,
    pub threshold: f64,
    /// `(ζ1 ζ2)^{-1} N^{2s(1-α) - t}`.
    pub lemma_bound: f64,
    /// `large_count / lemma_bound`.
    pub ratio: f64,
    pub max_w: f64,
    pub argmax: PhasePoint,
    pub flagged: Vec<FlaggedSquare>,
    pub flagged_truncated: bool,
}

pub fn lemma_bound(spec: &GridSpec, s: u32, t: u32) -> f64 {
    let e = 2.0 * s as f64 * (1.0 - spec.alpha) - t as f64;
    spec.square_count() as f64 * (spec.n as f64).powf(e)
}

struct Strip {
    count: u64,
    best: (f64, u64),
    flagged: Vec<FlaggedSquare>,
}

/// Evaluates `W` at the centre of every square in `window` and flags those
/// with `W >= N^α / 2`.
pub fn scan(
    omega: &IntPolynomial,
    spec: &GridSpec,
    window: Window,
    params: &ScanParams,
) -> Result<ScanResult> {
    if omega.degree() != spec.k {
        return Err(Error::Domain(format!(
            "grid built for degree {} but ω has degree {}",
            spec.k,
            omega.degree()
        )));
    }
    if !(window.x1 <= spec.counts_x && window.y1 <= spec.counts_y) || window.is_empty() {
        return Err(Error::Domain(format!("window {window:?} is empty or outside the grid")));
    }
    if window.len() > params.budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "squares",
            needed: window.len(),
            budget: params.budget as u128,
        });
    }
    if params.strip_len == 0 {
        return Err(Error::Domain("strip length must be positive".into()));
    }
    let total = window.len() as u64;
    let threshold = spec.threshold();
    let eval = CompletionEvaluator::new(omega, spec.n)?;
    let strips = total.div_ceil(params.strip_len);
    let cap = params.max_flagged;
    let parts: Vec<Strip> = (0..strips)
        .into_par_iter()
        .map(|c| {
            let lo = c * params.strip_len;
            let hi = (lo + params.strip_len).min(total);
            let mut strip = Strip {
                count: 0,
                best: (f64::NEG_INFINITY, lo),
                flagged: Vec::new(),
            };
            for j in lo..hi {
                let ix = window.x0 + j / window.height();
                let iy = window.y0 + j % window.height();
                let p = spec.center(ix, iy);
                let w = eval.eval(p)?;
                if w > strip.best.0 {
                    strip.best = (w, j);
                }
                if w >= threshold {
                    strip.count += 1;
                    if strip.flagged.len() < cap {
                        strip.flagged.push(FlaggedSquare { ix, iy, x: p.x, y: p.y, w });
                    }
                }
            }
            Ok(strip)
        })
        .collect::<Result<_>>()?;

    let mut large_count = 0;
    let mut best = (f64::NEG_INFINITY, 0);
    let mut flagged = Vec::new();
    for strip in parts {
        large_count += strip.count;
        if strip.best.0 > best.0 {
            best = strip.best;
        }
        let room = cap - flagged.len();
        flagged.extend(strip.flagged.into_iter().take(room));
    }
    let argmax = spec.center(
        window.x0 + best.1 / window.height(),
        window.y0 + best.1 % window.height(),
    );
    let bound = lemma_bound(spec, params.s, params.t);
    debug_assert!(flagged.iter().all(|f| window.contains_square(f.ix, f.iy)));
    Ok(ScanResult {
        spec: spec.clone(),
        window,
        s: params.s,
        t: params.t,
        squares_scanned: total,
        large_count,
        threshold,
        lemma_bound: bound,
        ratio: large_count as f64 / bound,
        max_w: best.0,
        argmax,
        flagged_truncated: (flagged.len() as u64) < large_count,
        flagged,
    })
}

/// `|G(a, b; q)| = |Σ_{n mod q} e((a n + b n^2)/q)|`, used to tell genuine
/// major-arc peaks from points where the complete sum cancels.
pub fn complete_quadratic_sum(a: i64, b: i64, q: i64) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for n in 0..q {
        let r = (a * n + b * n * n).rem_euclid(q) as f64 / q as f64;
        let t = std::f64::consts::TAU * r;
        re += t.cos();
        im += t.sin();
    }
    re.hypot(im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{completion_sum, CompletionMethod};

    fn t2() -> IntPolynomial {
        IntPolynomial::monomial(2).unwrap()
    }

    #[test]
    fn simple_fractions() {
        assert_eq!(simple_fraction(0.5, 1000), Some(Ratio::new(1, 2)));
        assert_eq!(simple_fraction(0.9, 1000), Some(Ratio::new(9, 10)));
        assert_eq!(simple_fraction(0.05, 1000), Some(Ratio::new(1, 20)));
        assert_eq!(simple_fraction(0.0, 1000), Some(Ratio::new(0, 1)));
        assert_eq!(simple_fraction(std::f64::consts::PI, 1000), None);
    }

    #[test]
    fn grid_examples() {
        let g = grid_spec(16, 0.5, 0.0, 2).unwrap();
        assert_eq!((g.counts_x, g.counts_y), (64, 1024));
        assert_eq!(g.square_count(), 65536);
        assert_eq!(g.certification, Certification::ExactPower);
        let g = grid_spec(16, 0.5, 0.0, 3).unwrap();
        assert_eq!(g.counts_y, 16384);
        let g = grid_spec(8, 0.9, 0.05, 2).unwrap();
        // 8^1.15 = 10.92.., 8^2.15 = 87.4..
        assert_eq!((g.counts_x, g.counts_y), (11, 88));
    }

    #[test]
    fn grid_ceilings_are_certified() {
        for n in [2u64, 3, 8, 10, 100, 1000] {
            for (a, e) in [(0.5, 0.0), (0.9, 0.05), (0.25, 0.1), (0.75, 0.0), (0.3, 0.01)] {
                let g = grid_spec(n, a, e, 2).unwrap();
                for (c, ex) in [(g.counts_x, 2.0 + e - a), (g.counts_y, 3.0 + e - a)] {
                    let v = (n as f64).powf(ex);
                    assert!((c as f64 - 1.0) < v * (1.0 + 1e-12) && v <= c as f64 * (1.0 + 1e-12));
                }
                assert!(g.counts_y >= g.counts_x);
            }
        }
    }

    #[test]
    fn irrational_exponents_use_the_margin_path() {
        let g = grid_spec(100, 1.0 / std::f64::consts::E, 0.05, 2).unwrap();
        assert_eq!(g.certification, Certification::LogMargin);
        let v = 100f64.powf(2.05 - 1.0 / std::f64::consts::E);
        assert_eq!(g.counts_x, v.ceil() as u64);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(grid_spec(16, 0.0, 0.1, 2), Err(Error::Domain(_))));
        assert!(matches!(grid_spec(16, 1.0, 0.1, 2), Err(Error::Domain(_))));
        assert!(matches!(grid_spec(16, 0.5, -0.1, 2), Err(Error::Domain(_))));
        assert!(matches!(grid_spec(16, 0.5, 0.1, 1), Err(Error::Domain(_))));
        assert!(matches!(grid_spec(1 << 40, 0.1, 0.0, 9), Err(Error::Overflow(_))));
    }

    #[test]
    fn origin_square_is_flagged() {
        let g = grid_spec(16, 0.9, 0.05, 2).unwrap();
        let w0 = completion_sum(&t2(), PhasePoint::origin(), 16, CompletionMethod::Direct, false)
            .unwrap()
            .value;
        assert!((w0 - (16.0 + 32.0 / 17.0)).abs() < 1e-9);
        let win = Window::around(&g, PhasePoint::origin(), 0);
        let r = scan(&t2(), &g, win, &ScanParams::for_degree(2).unwrap()).unwrap();
        assert_eq!(r.squares_scanned, 1);
        assert_eq!(r.large_count, 1);
    }

    #[test]
    fn flagged_values_exceed_threshold() {
        let g = grid_spec(16, 0.8, 0.05, 2).unwrap();
        let win = Window::from_coords(&g, 0.0, 0.2, 0.0, 0.05).unwrap();
        let r = scan(&t2(), &g, win, &ScanParams::for_degree(2).unwrap()).unwrap();
        assert!(r.large_count <= r.squares_scanned);
        assert!(r.large_count > 0);
        assert!(r.flagged.iter().all(|f| f.w >= r.threshold));
        assert_eq!(r.flagged.len() as u64, r.large_count);
        assert!(r.max_w >= r.flagged.iter().map(|f| f.w).fold(0.0, f64::max));
    }

    #[test]
    fn scan_is_monotone_in_alpha() {
        let g = grid_spec(32, 0.6, 0.05, 2).unwrap();
        let win = Window::from_coords(&g, 0.1, 0.4, 0.3, 0.31).unwrap();
        let p = ScanParams::for_degree(2).unwrap();
        let mut last = u64::MAX;
        for a in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95] {
            let spec = GridSpec { alpha: a, ..g.clone() };
            let r = scan(&t2(), &spec, win, &p).unwrap();
            assert!(r.large_count <= last, "α={a}");
            last = r.large_count;
        }
    }

    #[test]
    fn scan_is_independent_of_strip_length() {
        let g = grid_spec(16, 0.7, 0.05, 2).unwrap();
        let win = Window::from_coords(&g, 0.0, 0.5, 0.0, 0.25).unwrap();
        let mut p = ScanParams::for_degree(2).unwrap();
        let a = scan(&t2(), &g, win, &p).unwrap();
        p.strip_len = 97;
        let b = scan(&t2(), &g, win, &p).unwrap();
        p.strip_len = 1;
        let c = scan(&t2(), &g, win, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn scan_budget() {
        let g = grid_spec(16, 0.5, 0.0, 2).unwrap();
        let mut p = ScanParams::for_degree(2).unwrap();
        p.budget = 1000;
        assert!(matches!(
            scan(&t2(), &g, Window::full(&g), &p),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn major_arc_peaks_are_flagged() {
        let g = grid_spec(256, 0.75, 0.05, 2).unwrap();
        let p = ScanParams::for_degree(2).unwrap();
        let mut checked = 0;
        for q in 1..=3i64 {
            for a in 0..q {
                for b in 0..q {
                    if num_integer::gcd(num_integer::gcd(a, b), q) != 1 {
                        continue;
                    }
                    if complete_quadratic_sum(a, b, q) < 1e-9 {
                        continue;
                    }
                    let pt = PhasePoint::new(a as f64 / q as f64, b as f64 / q as f64).unwrap();
                    let r = scan(&t2(), &g, Window::around(&g, pt, 0), &p).unwrap();
                    assert_eq!(r.large_count, 1, "({a}/{q}, {b}/{q}) W={}", r.max_w);
                    checked += 1;
                }
            }
        }
        assert!(checked >= 6);
    }

    #[test]
    fn cancelling_rationals_are_not_peaks() {
        // G(1, 0; 2) = 0, so S nearly vanishes at (1/2, 0)
        assert!(complete_quadratic_sum(1, 0, 2) < 1e-12);
        assert!(complete_quadratic_sum(0, 1, 2) < 1e-12);
        assert!((complete_quadratic_sum(1, 1, 2) - 2.0).abs() < 1e-12);
        assert!((complete_quadratic_sum(0, 1, 5) - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lemma_bound_formula() {
        let g = grid_spec(8, 0.9, 0.05, 2).unwrap();
        let b = lemma_bound(&g, 3, 3);
        assert!((b - 968.0 * 8f64.powf(-2.4)).abs() < 1e-9);
    }
}
