//! Suprema of `|S|` and `W` along curves in the torus, growth exponents along
//! curve families, and bad-set frequency experiments.
//!
//! Curves are sampled on parameter grids. Lines use the closed grid
//! `u = j/M, j = 0..=M`, so grids for `M` and `2M` are nested and reversal maps
//! the sample set onto itself. Empirical mode uses a fixed sample count and
//! is not certified; rigorous mode spaces samples by the grid `(ζ1, ζ2)` of
//! [`crate::large_values`], which bounds how far a `W` peak can hide between
//! samples. Applying the same spacing to `|S|` is a heuristic.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, BadSetFamily};
use crate::error::{Error, Result};
use crate::large_values::{grid_spec, DEFAULT_EPS};
use crate::mean_value::{fit_exponent, ExponentReport};
use crate::phase::{IntPolynomial, PhasePoint};
use crate::sampling::{CounterRng, Moments, CHUNK};
use crate::weyl::{weyl_sum, CompletionEvaluator};

pub const DEFAULT_SAMPLES: u64 = 1 << 14;
pub const DEFAULT_BADSET_SAMPLES: u64 = 1 << 12;
pub const DEFAULT_RIGOROUS_BUDGET: u64 = 1 << 26;
pub const MIN_EXPONENT_TRIALS: u64 = 10;
pub const MIN_BADSET_TRIALS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Curve {
    /// `u ↦ (u, τu + c)`, `u ∈ [0, 1]`.
    Line { tau: f64, c: f64 },
    /// `θ ↦ centre + r (cos 2πθ, sin 2πθ)`.
    Circle { center: PhasePoint, r: f64 },
    /// Explicit samples of a curve with modulus `|γ(u) - γ(v)| <= C |u - v|^ρ`.
    Parametric {
        samples: Vec<PhasePoint>,
        rho: f64,
        holder_const: f64,
    },
}

impl Curve {
    pub fn line(tau: f64, c: f64) -> Result<Self> {
        if !tau.is_finite() || !c.is_finite() {
            return Err(Error::Domain(format!("line needs finite τ and c, got {tau}, {c}")));
        }
        Ok(Curve::Line { tau, c })
    }

    pub fn circle(center: PhasePoint, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain(format!("circle radius must lie in (0, 1), got {r}")));
        }
        Ok(Curve::Circle { center, r })
    }

    pub fn parametric(samples: Vec<PhasePoint>, rho: f64, holder_const: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::DegenerateInput("parametric curve has no samples".into()));
        }
        if !(rho > 0.0 && rho <= 1.0) || !(holder_const >= 0.0 && holder_const.is_finite()) {
            return Err(Error::Domain(format!(
                "parametric curve needs ρ in (0, 1] and C >= 0, got ρ={rho}, C={holder_const}"
            )));
        }
        Ok(Curve::Parametric {
            samples,
            rho,
            holder_const,
        })
    }

    /// Point at parameter `u = j/m`.
    fn point_at(&self, j: u64, m: u64) -> PhasePoint {
        match self {
            Curve::Line { tau, c } => {
                let u = j as f64 / m as f64;
                wrap(u, tau * u + c)
            }
            Curve::Circle { center, r } => {
                let (s, co) = (TAU * (j as f64 / m as f64)).sin_cos();
                wrap(center.x + r * co, center.y + r * s)
            }
            Curve::Parametric { samples, .. } => samples[j as usize],
        }
    }

    /// `(parameter, point)` pairs for `m` sampling steps: `m + 1` points on
    /// a line, `m` on a circle, the given list for a parametric curve.
    pub fn sample(&self, m: u64) -> Vec<(f64, PhasePoint)> {
        let (count, denom) = self.grid(m);
        (0..count)
            .map(|j| (j as f64 / denom as f64, self.point_at(j, denom)))
            .collect()
    }

    fn grid(&self, m: u64) -> (u64, u64) {
        match self {
            Curve::Line { .. } => (m + 1, m),
            Curve::Circle { .. } => (m, m),
            Curve::Parametric { samples, .. } => (samples.len() as u64, samples.len() as u64),
        }
    }
}

fn wrap(x: f64, y: f64) -> PhasePoint {
    let r = |v: f64| {
        let w = v.rem_euclid(1.0);
        if w >= 1.0 {
            0.0
        } else {
            w
        }
    };
    PhasePoint { x: r(x), y: r(y) }
}

/// Signed distance on the circle, in `[-1/2, 1/2)`.
fn torus_delta(a: f64, b: f64) -> f64 {
    (b - a + 0.5).rem_euclid(1.0) - 0.5
}

/// Parameter steps needed so consecutive samples differ by at most `ζ1` in
/// `x` and `ζ2` in `y`.
pub fn sample_count_rigorous(curve: &Curve, n: u64, k: u32, alpha: f64, eps: f64, budget: u64) -> Result<u64> {
    let g = grid_spec(n, alpha, eps, k)?;
    let (cx, cy) = (g.counts_x as f64, g.counts_y as f64);
    let count = match curve {
        Curve::Line { tau, .. } => cx.max((tau.abs() * cy).ceil()),
        Curve::Circle { r, .. } => (TAU * r * cy).ceil(),
        Curve::Parametric {
            samples,
            rho,
            holder_const,
        } => {
            let ok = samples.windows(2).all(|w| {
                torus_delta(w[0].x, w[1].x).abs() <= g.zeta1()
                    && torus_delta(w[0].y, w[1].y).abs() <= g.zeta2()
            });
            if !ok {
                let needed = (holder_const * cy).powf(1.0 / rho).ceil();
                return Err(Error::Domain(format!(
                    "parametric samples are coarser than the (ζ1, ζ2) = ({:e}, {:e}) grid; \
                     about {needed} samples are needed",
                    g.zeta1(),
                    g.zeta2()
                )));
            }
            samples.len() as f64
        }
    };
    if count > budget as f64 {
        return Err(Error::BudgetExceeded {
            what: "curve samples",
            needed: count as u128,
            budget: budget as u128,
        });
    }
    Ok(count as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Empirical,
    Rigorous,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(Self::Empirical),
            "rigorous" => Ok(Self::Rigorous),
            _ => Err(Error::Parse(format!("mode must be empirical or rigorous, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupOptions {
    pub mode: SamplingMode,
    /// Parameter steps in empirical mode.
    pub samples: u64,
    /// Also take the supremum of `W`.
    pub with_w: bool,
    /// Grid parameters for rigorous mode.
    pub alpha: f64,
    pub eps: f64,
    pub budget: u64,
}

impl Default for SupOptions {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Empirical,
            samples: DEFAULT_SAMPLES,
            with_w: false,
            alpha: 0.5,
            eps: DEFAULT_EPS,
            budget: DEFAULT_RIGOROUS_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSupremum {
    pub sup_s: f64,
    pub sup_w: Option<f64>,
    pub argmax: PhasePoint,
    /// Curve parameter of `argmax`.
    pub argmax_param: f64,
    pub samples_used: u64,
    pub mode: SamplingMode,
    /// `sup_s / sup_w`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    param: f64,
    point: PhasePoint,
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        param: f64::INFINITY,
        point: PhasePoint { x: 0.0, y: 0.0 },
    };

    /// Larger value wins; ties go to the smaller parameter.
    fn offer(&mut self, other: Best) {
        let better = match other.value.total_cmp(&self.value) {
            Ordering::Greater => true,
            Ordering::Equal => other.param < self.param,
            Ordering::Less => false,
        };
        if better {
            *self = other;
        }
    }
}

/// Maximum of `|S|` (and optionally `W`) over explicit samples. Ties in `|S|`
/// go to the smallest parameter, so the result does not depend on order.
pub fn sup_over_samples(
    omega: &IntPolynomial,
    samples: &[(f64, PhasePoint)],
    n: u64,
    with_w: bool,
) -> Result<(SampleSup, u64)> {
    if samples.is_empty() {
        return Err(Error::DegenerateInput("no curve samples".into()));
    }
    let eval = if with_w {
        Some(CompletionEvaluator::new(omega, n)?)
    } else {
        None
    };
    let parts: Vec<(Best, Best)> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut bs = Best::NONE;
            let mut bw = Best::NONE;
            for &(param, point) in chunk {
                match &eval {
                    Some(e) => {
                        let (s, w) = e.eval_with_sum(point)?;
                        bs.offer(Best { value: s.abs(), param, point });
                        bw.offer(Best { value: w, param, point });
                    }
                    None => {
                        let s = weyl_sum(omega, point, n)?.abs();
                        bs.offer(Best { value: s, param, point });
                    }
                }
            }
            Ok((bs, bw))
        })
        .collect::<Result<_>>()?;
    let mut bs = Best::NONE;
    let mut bw = Best::NONE;
    for (s, w) in parts {
        bs.offer(s);
        bw.offer(w);
    }
    Ok((
        SampleSup {
            sup_s: bs.value,
            sup_w: with_w.then_some(bw.value),
            argmax: bs.point,
            argmax_param: bs.param,
        },
        samples.len() as u64,
    ))
}

/// Supremum summary from [`sup_over_samples`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSup {
    pub sup_s: f64,
    pub sup_w: Option<f64>,
    pub argmax: PhasePoint,
    pub argmax_param: f64,
}

pub fn sup_along(omega: &IntPolynomial, curve: &Curve, n: u64, opts: &SupOptions) -> Result<CurveSupremum> {
    let steps = match opts.mode {
        SamplingMode::Empirical => {
            if opts.samples < 2 && !matches!(curve, Curve::Parametric { .. }) {
                return Err(Error::Domain(format!(
                    "empirical mode needs at least 2 samples, got {}",
                    opts.samples
                )));
            }
            opts.samples
        }
        SamplingMode::Rigorous => {
            sample_count_rigorous(curve, n, omega.degree(), opts.alpha, opts.eps, opts.budget)?
        }
    };
    let samples = curve.sample(steps);
    let (best, used) = sup_over_samples(omega, &samples, n, opts.with_w)?;
    Ok(CurveSupremum {
        sup_s: best.sup_s,
        sup_w: best.sup_w,
        argmax: best.argmax,
        argmax_param: best.argmax_param,
        samples_used: used,
        mode: opts.mode,
        ratio: best.sup_w.map(|w| best.sup_s / w),
    })
}

/// A one-parameter family of curves indexed by a random draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CurveFamily {
    /// `y = τx + c` with `c` uniform.
    Lines { tau: f64 },
    /// `y = c` with `c` uniform: the supremum is over `x` alone.
    Projection,
    /// Circles of radius `r` with uniform centre.
    Circles { r: f64 },
    /// The single point `(0, 0)`, where `|S| = N`.
    Point,
}

impl CurveFamily {
    /// Member for random draw `trial` under `seed`.
    pub fn member(&self, rng: &CounterRng, trial: u64) -> Result<Curve> {
        let [u, v] = rng.uniforms::<2>(trial);
        match *self {
            CurveFamily::Lines { tau } => Curve::line(tau, u),
            CurveFamily::Projection => Curve::line(0.0, u),
            CurveFamily::Circles { r } => Curve::circle(PhasePoint { x: u, y: v }, r),
            CurveFamily::Point => Curve::parametric(vec![PhasePoint::origin()], 1.0, 0.0),
        }
    }

    fn bad_set_kind(&self) -> Option<(BadSetFamily, f64)> {
        match self {
            CurveFamily::Lines { .. } => Some((BadSetFamily::Holder, 1.0)),
            CurveFamily::Projection => Some((BadSetFamily::Projection, 1.0)),
            CurveFamily::Circles { .. } => Some((BadSetFamily::Circle, 1.0)),
            CurveFamily::Point => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Median,
}

impl std::str::FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            _ => Err(Error::Parse(format!("aggregate must be mean or median, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupStatistics {
    #[serde(rename = "N")]
    pub n: u64,
    pub mean_sup: f64,
    pub median_sup: f64,
    pub std: f64,
    pub sups: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveExponentReport {
    pub family: CurveFamily,
    pub trials: u64,
    pub seed: u64,
    pub aggregate: Aggregate,
    pub samples: u64,
    pub per_n: Vec<SupStatistics>,
    pub fit: ExponentReport,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// For each `N`, the supremum along `trials` random members of `family`
/// (the same members for every `N`), then a log-log fit of the aggregate.
pub fn exponent_along(
    omega: &IntPolynomial,
    family: CurveFamily,
    ns: &[u64],
    trials: u64,
    seed: u64,
    samples: u64,
    aggregate: Aggregate,
) -> Result<CurveExponentReport> {
    if trials < MIN_EXPONENT_TRIALS {
        return Err(Error::Domain(format!(
            "exponent estimation needs at least {MIN_EXPONENT_TRIALS} trials, got {trials}"
        )));
    }
    if let Some(&bad) = ns.iter().find(|n| !n.is_power_of_two() || **n < 2) {
        return Err(Error::Domain(format!("N values must be powers of two >= 2, got {bad}")));
    }
    let rng = CounterRng::new(seed);
    let curves: Vec<Curve> = (0..trials).map(|i| family.member(&rng, i)).collect::<Result<_>>()?;
    let opts = SupOptions {
        samples,
        ..SupOptions::default()
    };
    let mut per_n = Vec::with_capacity(ns.len());
    for &n in ns {
        let sups: Vec<f64> = curves
            .iter()
            .map(|c| sup_along(omega, c, n, &opts).map(|r| r.sup_s))
            .collect::<Result<_>>()?;
        let mut m = Moments::default();
        sups.iter().for_each(|&v| m.push(v));
        per_n.push(SupStatistics {
            n,
            mean_sup: m.mean,
            median_sup: median(&sups),
            std: m.variance().sqrt(),
            sups,
        });
    }
    let points: Vec<(u64, f64)> = per_n
        .iter()
        .map(|s| {
            let v = match aggregate {
                Aggregate::Mean => s.mean_sup,
                Aggregate::Median => s.median_sup,
            };
            (s.n, v)
        })
        .collect();
    Ok(CurveExponentReport {
        family,
        trials,
        seed,
        aggregate,
        samples,
        per_n,
        fit: fit_exponent(&points)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadSetReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub alpha: f64,
    pub family: CurveFamily,
    pub trials: u64,
    pub samples_per_curve: u64,
    pub exceed_count: u64,
    pub exceed_fraction: f64,
    /// Measure-bound exponent at `(s, t) = (s0(k), k + 1)`.
    pub theory_exponent: Option<f64>,
    pub seed: u64,
}

/// Fraction of random family members along which `sup |S| >= N^α`.
pub fn bad_set_experiment(
    omega: &IntPolynomial,
    family: CurveFamily,
    n: u64,
    alpha: f64,
    trials: u64,
    seed: u64,
    samples: u64,
) -> Result<BadSetReport> {
    if trials < MIN_BADSET_TRIALS {
        return Err(Error::Domain(format!(
            "bad-set experiments need at least {MIN_BADSET_TRIALS} trials, got {trials}"
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("α must be positive, got {alpha}")));
    }
    let rng = CounterRng::new(seed);
    let level = (n as f64).powf(alpha);
    let opts = SupOptions {
        samples,
        ..SupOptions::default()
    };
    let mut exceed_count = 0;
    for i in 0..trials {
        let c = family.member(&rng, i)?;
        if sup_along(omega, &c, n, &opts)?.sup_s >= level {
            exceed_count += 1;
        }
    }
    let k = omega.degree() as u64;
    let theory_exponent = match family.bad_set_kind() {
        Some((kind, rho)) => {
            let s = bounds::s0(k)?;
            Some(bounds::bad_set_exponent(alpha, rho, k, s, k + 1, kind))
        }
        None => None,
    };
    Ok(BadSetReport {
        n,
        alpha,
        family,
        trials,
        samples_per_curve: samples,
        exceed_count,
        exceed_fraction: exceed_count as f64 / trials as f64,
        theory_exponent,
        seed,
    })
}
