//! Exponent tables and bounds, all as exact rationals.
//!
//! `s0(k)` is the smallest integer `s` for which the `2s`-th moment of
//! `S_ω` is known to be `N^{2s-k-1+o(1)}`; `sigma0(k)` is the corresponding
//! real threshold. Both are tabulated for `k <= 10` and given by closed
//! formulas beyond. Every bound on the growth exponent of `S_ω` along a curve
//! family is a rational function of `s0(k)`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported degree; keeps every square root well inside exact range.
pub const MAX_DEGREE: u64 = 1_000_000;

const S0_TABLE: [u64; 9] = [3, 5, 8, 12, 18, 24, 31, 40, 49];
const SIGMA0_TABLE: [(i64, i64); 9] = [
    (6, 1),
    (10, 1),
    (15, 1),
    (70, 3),
    (34, 1),
    (93, 2),
    (306, 5),
    (78, 1),
    (678, 7),
];

/// Context for [`theta_exact`].
pub const THETA_NOTE: &str =
    "exact growth exponent for omega = T^k, k in {2, 3}, along lines y = x + c for almost all c";

fn check_degree(k: u64) -> Result<()> {
    if !(2..=MAX_DEGREE).contains(&k) {
        return Err(Error::Domain(format!(
            "degree k must lie in 2..={MAX_DEGREE}, got {k}"
        )));
    }
    Ok(())
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `⌊√(2k+2)⌋`.
fn root(k: u64) -> u64 {
    (2 * k + 2).isqrt()
}

/// `0` when `2k+2 >= f^2 + f` for `f = ⌊√(2k+2)⌋`, else `1`.
pub fn eta(k: u64) -> Result<u8> {
    check_degree(k)?;
    let f = root(k);
    Ok(if 2 * k + 2 >= f * f + f { 0 } else { 1 })
}

pub fn s0(k: u64) -> Result<u64> {
    check_degree(k)?;
    if k <= 10 {
        return Ok(S0_TABLE[(k - 2) as usize]);
    }
    Ok(k * (k - 1) / 2 + root(k) - eta(k)? as u64)
}

pub fn sigma0(k: u64) -> Result<BigRational> {
    check_degree(k)?;
    if k <= 10 {
        let (n, d) = SIGMA0_TABLE[(k - 2) as usize];
        return Ok(rat(n, d));
    }
    Ok(int(k * (k - 1) + 2 * root(k) - 1 - eta(k)? as u64))
}

fn check_rho(rho: &BigRational) -> Result<()> {
    if !rho.is_positive() || *rho > BigRational::one() {
        return Err(Error::Domain(format!("Hölder exponent ρ must lie in (0, 1], got {rho}")));
    }
    Ok(())
}

fn as_fraction<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Growth-exponent bounds for one degree, exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremBounds {
    /// Level sets of ρ-Hölder functions: `1 - ρ/(2 s0 + 2 - ρ)`.
    #[serde(serialize_with = "as_fraction")]
    pub holder: BigRational,
    /// Horizontal lines (projection onto `y`): `1 - k/(2 s0 + 1)`.
    #[serde(serialize_with = "as_fraction")]
    pub projection: BigRational,
    /// Circles of fixed radius with random centre: `1 - 1/(2 s0 + 1)`.
    #[serde(serialize_with = "as_fraction")]
    pub circle: BigRational,
    /// Earlier Weyl-differencing bound `1 - 1/(2^k + 1)`.
    #[serde(serialize_with = "as_fraction")]
    pub weyl_differencing: BigRational,
    /// Earlier mean-value bound `1 - 1/(2k(k-1) + 1)`.
    #[serde(serialize_with = "as_fraction")]
    pub vinogradov: BigRational,
}

pub fn theorem_bounds(k: u64, rho: &BigRational) -> Result<TheoremBounds> {
    check_degree(k)?;
    check_rho(rho)?;
    let s = int(s0(k)?);
    let one = BigRational::one();
    let two = int(2);
    let holder = &one - rho / (&two * &s + &two - rho);
    let projection = &one - int(k) / (&two * &s + &one);
    let circle = &one - &one / (&two * &s + &one);
    let pow2 = BigRational::from_integer(BigInt::one() << k);
    let weyl_differencing = &one - &one / (pow2 + &one);
    let vinogradov = &one - &one / int(2 * k * (k - 1) + 1);
    Ok(TheoremBounds {
        holder,
        projection,
        circle,
        weyl_differencing,
        vinogradov,
    })
}

/// `1 - (t - k - 1 + ρ)/(2s + 2 - ρ)`: the exponent obtained from a moment
/// bound `∫∫ W^{2s} <= N^{2s - t + o(1)}` for level sets of ρ-Hölder maps.
pub fn conditional_bound(s: u64, t: u64, k: u64, rho: &BigRational) -> Result<BigRational> {
    check_rho(rho)?;
    let den = int(2 * s + 2) - rho;
    if !den.is_positive() {
        return Err(Error::Domain(format!("2s + 2 - ρ must be positive, got {den}")));
    }
    let num = int(t) - int(k + 1) + rho;
    Ok(BigRational::one() - num / den)
}

/// `1 - (t - 1)/(2s + 1)`, the threshold for horizontal lines.
pub fn projection_threshold(s: u64, t: u64) -> BigRational {
    BigRational::one() - (int(t) - BigRational::one()) / int(2 * s + 1)
}

/// `1 - (t - k)/(2s + 1)`, the threshold for circles.
pub fn circle_threshold(s: u64, t: u64, k: u64) -> BigRational {
    BigRational::one() - (int(t) - int(k)) / int(2 * s + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BadSetFamily {
    Holder,
    Projection,
    Circle,
}

/// Exponent `e` in the measure bound `N^{e + o(1)}` for the set of curve
/// parameters along which `W` exceeds `N^α`.
pub fn bad_set_exponent(alpha: f64, rho: f64, k: u64, s: u64, t: u64, family: BadSetFamily) -> f64 {
    let (k, s, t) = (k as f64, s as f64, t as f64);
    let tail = 2.0 * s * (1.0 - alpha) - t;
    match family {
        BadSetFamily::Holder => (2.0 - alpha) * (1.0 - rho) + (k + 1.0 - alpha) + tail,
        BadSetFamily::Projection => tail + 2.0 - alpha,
        BadSetFamily::Circle => k + 1.0 - alpha + tail,
    }
}

/// The known exact exponent `3/4` for `T^2` and `T^3` along `y = x + c`;
/// see [`THETA_NOTE`].
pub fn theta_exact() -> BigRational {
    rat(3, 4)
}

/// Everything tabulated for one degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExponentTable {
    pub k: u64,
    pub eta: u8,
    pub s0: u64,
    #[serde(serialize_with = "as_fraction")]
    pub sigma0: BigRational,
    #[serde(serialize_with = "as_fraction")]
    pub rho: BigRational,
    pub bounds: TheoremBounds,
    /// `conditional_bound(s0, k+1, k, ρ)`.
    #[serde(serialize_with = "as_fraction")]
    pub conditional: BigRational,
}

pub fn exponent_table(k: u64, rho: &BigRational) -> Result<ExponentTable> {
    let s = s0(k)?;
    Ok(ExponentTable {
        k,
        eta: eta(k)?,
        s0: s,
        sigma0: sigma0(k)?,
        rho: rho.clone(),
        bounds: theorem_bounds(k, rho)?,
        conditional: conditional_bound(s, k + 1, k, rho)?,
    })
}

pub fn tables(ks: impl IntoIterator<Item = u64>, rho: &BigRational) -> Result<Vec<ExponentTable>> {
    ks.into_iter().map(|k| exponent_table(k, rho)).collect()
}

const COLUMNS: [&str; 10] = [
    "k",
    "eta",
    "s0",
    "sigma0",
    "rho",
    "holder",
    "projection",
    "circle",
    "weyl_differencing",
    "vinogradov",
];

fn row(t: &ExponentTable) -> [String; 10] {
    [
        t.k.to_string(),
        t.eta.to_string(),
        t.s0.to_string(),
        t.sigma0.to_string(),
        t.rho.to_string(),
        t.bounds.holder.to_string(),
        t.bounds.projection.to_string(),
        t.bounds.circle.to_string(),
        t.bounds.weyl_differencing.to_string(),
        t.bounds.vinogradov.to_string(),
    ]
}

pub fn render_csv(rows: &[ExponentTable]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for t in rows {
        out.push_str(&row(t).join(","));
        out.push('\n');
    }
    out
}

pub fn render_markdown(rows: &[ExponentTable]) -> String {
    let mut out = format!("| {} |\n", COLUMNS.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(COLUMNS.len()));
    for t in rows {
        let _ = writeln!(out, "| {} |", row(t).join(" | "));
    }
    out
}

/// Nearest `f64`, for reporting only.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `ρ = j/10` for `j = 1..=10`.
pub fn rho_grid() -> Vec<BigRational> {
    (1..=10).map(|j| rat(j, 10)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn one() -> BigRational {
        BigRational::one()
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(2).unwrap(), 0);
        assert_eq!(eta(11).unwrap(), 0);
        assert_eq!(eta(12).unwrap(), 1);
        assert!(eta(1).is_err());
        assert!(eta(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn s0_and_sigma0_examples() {
        assert_eq!(s0(2).unwrap(), 3);
        assert_eq!(s0(10).unwrap(), 49);
        assert_eq!(s0(12).unwrap(), 70);
        assert_eq!(sigma0(5).unwrap(), rat(70, 3));
        assert_eq!(sigma0(8).unwrap(), rat(306, 5));
        assert_eq!(sigma0(12).unwrap(), int(140));
    }

    #[test]
    fn theorem_bound_examples() {
        let b = theorem_bounds(2, &one()).unwrap();
        assert_eq!(b.holder, rat(6, 7));
        assert_eq!(b.projection, rat(5, 7));
        assert_eq!(b.circle, rat(6, 7));
        assert_eq!(b.weyl_differencing, rat(4, 5));
        assert_eq!(theorem_bounds(3, &one()).unwrap().vinogradov, rat(12, 13));
        assert!(theorem_bounds(2, &BigRational::zero()).is_err());
        assert!(theorem_bounds(2, &rat(11, 10)).is_err());
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(conditional_bound(3, 3, 2, &one()).unwrap(), rat(6, 7));
        assert_eq!(projection_threshold(3, 3), rat(5, 7));
        assert_eq!(circle_threshold(3, 3, 2), rat(6, 7));
        assert!(conditional_bound(3, 3, 2, &BigRational::zero()).is_err());
    }

    #[test]
    fn bad_set_examples() {
        assert_eq!(bad_set_exponent(1.0, 1.0, 2, 3, 3, BadSetFamily::Holder), -1.0);
        assert_eq!(bad_set_exponent(1.0, 1.0, 2, 3, 3, BadSetFamily::Projection), -2.0);
        assert_eq!(bad_set_exponent(1.0, 1.0, 2, 3, 3, BadSetFamily::Circle), -1.0);
    }

    #[test]
    fn bad_set_exponent_vanishes_at_threshold() {
        for k in 2..=12u64 {
            let s = s0(k).unwrap();
            let t = k + 1;
            for rho in rho_grid() {
                let a = to_f64(&conditional_bound(s, t, k, &rho).unwrap());
                let e = bad_set_exponent(a, to_f64(&rho), k, s, t, BadSetFamily::Holder);
                assert!(e.abs() < 1e-12, "k={k} ρ={rho}: {e}");
            }
            let a = to_f64(&projection_threshold(s, t));
            assert!(bad_set_exponent(a, 1.0, k, s, t, BadSetFamily::Projection).abs() < 1e-12);
            let a = to_f64(&circle_threshold(s, t, k));
            assert!(bad_set_exponent(a, 1.0, k, s, t, BadSetFamily::Circle).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_exact(), rat(3, 4));
        let b = theorem_bounds(2, &one()).unwrap();
        assert!(b.holder > theta_exact());
        assert!(b.weyl_differencing > theta_exact());
    }

    #[test]
    fn bounds_in_unit_interval_and_consistent() {
        for k in 2..=64u64 {
            for rho in rho_grid() {
                let b = theorem_bounds(k, &rho).unwrap();
                for v in [&b.holder, &b.projection, &b.circle, &b.weyl_differencing, &b.vinogradov] {
                    assert!(v.is_positive() && *v < one(), "k={k} ρ={rho}: {v}");
                }
                let s = s0(k).unwrap();
                assert_eq!(conditional_bound(s, k + 1, k, &rho).unwrap(), b.holder);
                assert_eq!(projection_threshold(s, k + 1), b.projection);
                assert_eq!(circle_threshold(s, k + 1, k), b.circle);
            }
        }
    }

    #[test]
    fn holder_monotonicity() {
        let grid = rho_grid();
        for k in 2..=64u64 {
            let h: Vec<_> = grid.iter().map(|r| theorem_bounds(k, r).unwrap().holder).collect();
            assert!(h.windows(2).all(|w| w[1] < w[0]), "not decreasing in ρ at k={k}");
            if k > 2 {
                assert!(s0(k).unwrap() > s0(k - 1).unwrap());
                for r in &grid {
                    let prev = theorem_bounds(k - 1, r).unwrap().holder;
                    assert!(theorem_bounds(k, r).unwrap().holder > prev);
                }
            }
        }
    }

    #[test]
    fn admissibility_of_twice_s0() {
        for k in 2..=64u64 {
            let two_s0 = int(2 * s0(k).unwrap());
            let sig = sigma0(k).unwrap();
            assert!(two_s0 >= sig, "k={k}");
            if (4..=10).contains(&k) {
                assert!(two_s0 > sig, "strict admissibility fails at k={k}");
            }
        }
    }

    #[test]
    fn renderers() {
        let rows = tables(2..=12, &one()).unwrap();
        let csv = render_csv(&rows);
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.lines().nth(1).unwrap().starts_with("2,0,3,6,1,6/7,5/7,6/7,4/5,"));
        let md = render_markdown(&rows);
        assert_eq!(md.lines().count(), 13);
        assert!(md.contains("| 10 | 0 | 49 | 678/7 |"));
    }
}
