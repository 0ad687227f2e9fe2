//! Integer phase polynomials and mod-1 phase evaluation.
//!
//! The phase of the two-parametric Weyl sum is `p(n) = x n + y ω(n)` taken
//! modulo 1. Two recurrences walk it one index at a time through its
//! forward-difference table:
//!
//! * [`PhaseRecurrence`] holds the registers as 128-bit fixed-point fractions
//!   of a turn. Addition wraps, so the mod-1 reduction is free and stepping
//!   adds no rounding at all. The only error is the initial rounding of each
//!   register (at most 2^-129), which the difference cascade amplifies by
//!   binomial factors; [`PhaseRecurrence::resync_interval`] bounds how far
//!   a recurrence may be stepped before that amplification reaches 2^-60.
//! * [`RationalRecurrence`] keeps the registers as exact residues modulo a
//!   common denominator when `x` and `y` are rational.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial `ω(T) = c_0 + c_1 T + ... + c_k T^k` with exact integer
/// coefficients and degree `k >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<i128>,
}

impl IntPolynomial {
    /// Builds a polynomial from coefficients listed low to high. Trailing
    /// zero coefficients are dropped before the degree check.
    pub fn new(mut coeffs: Vec<i128>) -> Result<Self> {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(Error::Domain(format!(
                "phase polynomial must have degree >= 2, got degree {}",
                coeffs.len() as i64 - 1
            )));
        }
        Ok(Self { coeffs })
    }

    /// `T^k`.
    pub fn monomial(k: u32) -> Result<Self> {
        let mut coeffs = vec![0; k as usize + 1];
        coeffs[k as usize] = 1;
        Self::new(coeffs)
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> i128 {
        *self.coeffs.last().expect("degree >= 2")
    }

    /// `ω(n)` evaluated exactly. Fails with [`Error::Overflow`] instead of
    /// wrapping when the value leaves the `i128` range.
    pub fn eval(&self, n: u64) -> Result<i128> {
        let x = n as i128;
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(x)
                .and_then(|v| v.checked_add(c))
                .ok_or_else(|| self.overflow(n))?;
        }
        Ok(acc)
    }

    /// Forward differences `Δ^j ω(n0)` for `j = 0..=k`.
    pub fn differences(&self, n0: u64) -> Result<Vec<i128>> {
        let k = self.degree() as u64;
        let mut table = Vec::with_capacity(k as usize + 1);
        for j in 0..=k {
            let n = n0.checked_add(j).ok_or_else(|| self.overflow(n0))?;
            table.push(self.eval(n)?);
        }
        let mut diffs = Vec::with_capacity(table.len());
        for _ in 0..=k {
            diffs.push(table[0]);
            for i in 0..table.len() - 1 {
                table[i] = table[i + 1]
                    .checked_sub(table[i])
                    .ok_or_else(|| self.overflow(n0))?;
            }
            table.pop();
        }
        Ok(diffs)
    }

    fn overflow(&self, n: u64) -> Error {
        Error::Overflow(format!("ω({n}) exceeds 128-bit range for ω = {self}"))
    }
}

impl fmt::Display for IntPolynomial {
    /// Comma-separated coefficients, low to high.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    /// Parses `"c0,c1,...,ck"`.
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i128>()
                    .map_err(|e| Error::Parse(format!("bad coefficient {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }
}

fn reduce_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point `(x, y)` of the torus, both coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    /// Reduces both coordinates modulo 1. Non-finite input is a domain error.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("non-finite torus point ({x}, {y})")));
        }
        Ok(Self {
            x: reduce_unit(x),
            y: reduce_unit(y),
        })
    }

    pub fn origin() -> Self {
        Self { x: 0.0, y: 0.0 }
    }

    /// The point `(-x, -y)` mod 1. For integer ω, `S` there is the complex
    /// conjugate of `S` here.
    pub fn negated(&self) -> Self {
        Self {
            x: reduce_unit(-self.x),
            y: reduce_unit(-self.y),
        }
    }

    /// Translates by `(dx, dy)` and reduces mod 1.
    pub fn shifted(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// A torus point with exact rational coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalPoint {
    pub x: Ratio<i64>,
    pub y: Ratio<i64>,
}

impl RationalPoint {
    pub fn new(x: Ratio<i64>, y: Ratio<i64>) -> Result<Self> {
        if *x.denom() <= 0 || *y.denom() <= 0 {
            return Err(Error::Domain("rational denominators must be positive".into()));
        }
        let unit = |r: Ratio<i64>| {
            let d = *r.denom();
            Ratio::new(r.numer().rem_euclid(d), d)
        };
        Ok(Self {
            x: unit(x),
            y: unit(y),
        })
    }

    pub fn to_phase_point(&self) -> PhasePoint {
        let f = |r: &Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
        PhasePoint {
            x: reduce_unit(f(&self.x)),
            y: reduce_unit(f(&self.y)),
        }
    }
}

/// Element of `R/Z` in units of `2^-128` turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Turns(pub u128);

impl Turns {
    pub const ZERO: Turns = Turns(0);

    /// `frac(x * m)` rounded to the nearest `2^-128`, computed from the exact
    /// dyadic value of `x`. The rounding is the only error.
    pub fn of_product(x: f64, m: i128) -> Turns {
        if x == 0.0 || m == 0 {
            return Turns::ZERO;
        }
        debug_assert!(x.is_finite());
        let (mantissa, exponent) = decompose(x);
        if exponent >= 0 {
            return Turns::ZERO;
        }
        if m.unsigned_abs() < 1 << 74 {
            return product_small(mantissa, m, (-exponent) as u32);
        }
        Self::of_product_wide(mantissa, exponent, m)
    }

    fn of_product_wide(mantissa: i64, exponent: i32, m: i128) -> Turns {
        let mut product = BigInt::from(mantissa) * BigInt::from(m);
        if exponent >= 0 {
            // x is an integer multiple of 2^exponent; x*m is an integer.
            return Turns::ZERO;
        }
        let shift = (-exponent) as u64;
        let modulus = BigInt::one() << shift;
        product = product.mod_floor(&modulus);
        let scaled = if shift <= 128 {
            product << (128 - shift)
        } else {
            let drop = shift - 128;
            (product + (BigInt::one() << (drop - 1))) >> drop
        };
        let wrapped = scaled.mod_floor(&(BigInt::one() << 128u32));
        Turns(wrapped.to_u128().expect("reduced below 2^128"))
    }

    /// Exact `num/den` turns, rounded to the nearest `2^-128`.
    pub fn of_ratio(num: u128, den: u128) -> Turns {
        let n = BigInt::from(num % den);
        let d = BigInt::from(den);
        let scaled: BigInt = ((n << 129u32) / &d + BigInt::one()) >> 1u32;
        let wrapped = scaled.mod_floor(&(BigInt::one() << 128u32));
        Turns(wrapped.to_u128().expect("reduced below 2^128"))
    }

    #[inline]
    pub fn wrapping_add(self, other: Turns) -> Turns {
        Turns(self.0.wrapping_add(other.0))
    }

    /// The value as `f64` in `[0, 1)`, truncated to 53 bits.
    #[inline]
    pub fn to_f64(self) -> f64 {
        (self.0 >> 75) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Distance to `other` on the circle, in turns.
    pub fn circle_distance(self, other: Turns) -> f64 {
        let d = self.0.wrapping_sub(other.0);
        let d = d.min(d.wrapping_neg());
        d as f64 / 2f64.powi(128)
    }
}

/// `frac(mantissa * m / 2^shift)` rounded half up to `2^-128`, for
/// `|mantissa * m| < 2^127`.
fn product_small(mantissa: i64, m: i128, shift: u32) -> Turns {
    let prod = mantissa.unsigned_abs() as u128 * m.unsigned_abs();
    let negative = (mantissa < 0) != (m < 0);
    if shift <= 128 {
        let low = if shift == 128 { prod } else { prod & ((1u128 << shift) - 1) };
        let scaled = if shift == 128 { low } else { low << (128 - shift) };
        return Turns(if negative { scaled.wrapping_neg() } else { scaled });
    }
    let drop = shift - 128;
    let (q, r) = if drop >= 128 {
        (0, prod)
    } else {
        (prod >> drop, prod & ((1u128 << drop) - 1))
    };
    // r <= half, compared without forming 2^(drop-1) when it exceeds u128
    let at_most_half = drop > 128 || r <= 1u128 << (drop - 1);
    let at_least_half = drop <= 128 && r >= 1u128 << (drop - 1);
    let value = if !negative {
        q + at_least_half as u128
    } else if r == 0 {
        q.wrapping_neg()
    } else {
        (q + 1 - at_most_half as u128).wrapping_neg()
    };
    Turns(value)
}

/// `x = mantissa * 2^exponent` exactly.
fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign: i64 = if bits >> 63 == 0 { 1 } else { -1 };
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & 0x000f_ffff_ffff_ffff) as i64;
    if raw_exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1 << 52)), raw_exp - 1075)
    }
}

/// Something that yields the phase `p(n)` for consecutive `n`.
pub trait PhaseSource {
    /// Current index `n`.
    fn index(&self) -> u64;
    /// `p(n) mod 1` in turns.
    fn turns(&self) -> f64;
    /// Moves to `n + 1`.
    fn advance(&mut self) -> Result<()>;
}

/// Forward-difference registers of `p(n) = x n + y ω(n)` mod 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseRecurrence {
    registers: Vec<Turns>,
    n: u64,
}

impl PhaseRecurrence {
    /// Registers hold `Δ^j p(n0)` for `j = 0..=k`. Each is computed as
    /// `frac(x a_j) + frac(y b_j)` where `a_j = Δ^j n` and `b_j = Δ^j ω` are
    /// exact integers.
    pub fn init(omega: &IntPolynomial, p: PhasePoint, n0: u64) -> Result<Self> {
        if n0 < 1 {
            return Err(Error::Domain("phase recurrence starts at n0 >= 1".into()));
        }
        let diffs = omega.differences(n0)?;
        let registers = diffs
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                let a: i128 = match j {
                    0 => n0 as i128,
                    1 => 1,
                    _ => 0,
                };
                Turns::of_product(p.x, a).wrapping_add(Turns::of_product(p.y, b))
            })
            .collect();
        Ok(Self { registers, n: n0 })
    }

    /// Advances `n` by one: `d_j <- d_j + d_{j+1}` for `j = 0..k-1`, in
    /// increasing `j`. `d_k` is never written.
    #[inline]
    pub fn step(&mut self) {
        let k = self.registers.len() - 1;
        for j in 0..k {
            self.registers[j] = self.registers[j].wrapping_add(self.registers[j + 1]);
        }
        self.n += 1;
    }

    pub fn registers(&self) -> &[Turns] {
        &self.registers
    }

    pub fn index(&self) -> u64 {
        self.n
    }

    pub fn phase(&self) -> Turns {
        self.registers[0]
    }

    /// Largest number of steps after which the accumulated register rounding
    /// stays below `2^-60` turns, capped at `2^32`.
    pub fn resync_interval(degree: u32) -> u64 {
        // error after b steps <= 2^-129 * sum_{j=0}^{k} C(b, j)
        let budget = 2f64.powi(69);
        let total = |b: f64| {
            let mut c = 1.0;
            let mut sum = 1.0;
            for j in 0..degree {
                c *= (b - j as f64) / (j as f64 + 1.0);
                sum += c;
            }
            sum
        };
        let (mut lo, mut hi) = (1u64, 1u64 << 32);
        if total(hi as f64) <= budget {
            return hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if total(mid as f64) <= budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// [`PhaseRecurrence`] that re-initialises from exact values every
/// [`PhaseRecurrence::resync_interval`] steps, keeping the phase error below
/// `2^-60` turns for any run length.
#[derive(Debug, Clone)]
pub struct PhaseStream<'a> {
    omega: &'a IntPolynomial,
    point: PhasePoint,
    rec: PhaseRecurrence,
    interval: u64,
    since_sync: u64,
}

impl<'a> PhaseStream<'a> {
    pub fn new(omega: &'a IntPolynomial, point: PhasePoint, n0: u64) -> Result<Self> {
        Ok(Self {
            omega,
            point,
            rec: PhaseRecurrence::init(omega, point, n0)?,
            interval: PhaseRecurrence::resync_interval(omega.degree()),
            since_sync: 0,
        })
    }

    pub fn recurrence(&self) -> &PhaseRecurrence {
        &self.rec
    }
}

impl PhaseSource for PhaseStream<'_> {
    fn index(&self) -> u64 {
        self.rec.n
    }

    fn turns(&self) -> f64 {
        self.rec.phase().to_f64()
    }

    fn advance(&mut self) -> Result<()> {
        self.since_sync += 1;
        if self.since_sync >= self.interval {
            self.rec = PhaseRecurrence::init(self.omega, self.point, self.rec.n + 1)?;
            self.since_sync = 0;
        } else {
            self.rec.step();
        }
        Ok(())
    }
}

/// Difference registers kept as exact residues modulo the common
/// denominator `q` of `x` and `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalRecurrence {
    q: u64,
    registers: Vec<u64>,
    n: u64,
}

impl RationalRecurrence {
    pub fn init(omega: &IntPolynomial, p: RationalPoint, n0: u64) -> Result<Self> {
        if n0 < 1 {
            return Err(Error::Domain("phase recurrence starts at n0 >= 1".into()));
        }
        let qx = *p.x.denom() as u64;
        let qy = *p.y.denom() as u64;
        let q = qx.lcm(&qy);
        let xs = (*p.x.numer() as u64 as u128 * (q / qx) as u128 % q as u128) as u64;
        let ys = (*p.y.numer() as u64 as u128 * (q / qy) as u128 % q as u128) as u64;
        let diffs = omega.differences(n0)?;
        let registers = diffs
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                let a: u128 = match j {
                    0 => n0 as u128 % q as u128,
                    1 => 1 % q as u128,
                    _ => 0,
                };
                let b = b.rem_euclid(q as i128) as u128;
                let v = (xs as u128 * a % q as u128 + ys as u128 * b % q as u128) % q as u128;
                v as u64
            })
            .collect();
        Ok(Self { q, registers, n: n0 })
    }

    #[inline]
    pub fn step(&mut self) {
        let k = self.registers.len() - 1;
        for j in 0..k {
            let s = self.registers[j] as u128 + self.registers[j + 1] as u128;
            let s = if s >= self.q as u128 { s - self.q as u128 } else { s };
            self.registers[j] = s as u64;
        }
        self.n += 1;
    }

    pub fn denominator(&self) -> u64 {
        self.q
    }

    pub fn registers(&self) -> &[u64] {
        &self.registers
    }

    /// Current phase as the exact fraction `numerator / q`.
    pub fn phase(&self) -> Ratio<u64> {
        Ratio::new_raw(self.registers[0], self.q)
    }
}

impl PhaseSource for RationalRecurrence {
    fn index(&self) -> u64 {
        self.n
    }

    fn turns(&self) -> f64 {
        self.registers[0] as f64 / self.q as f64
    }

    fn advance(&mut self) -> Result<()> {
        self.step();
        Ok(())
    }
}

/// `frac(x n + y ω(n))` evaluated from scratch, without any recurrence.
pub fn phase_direct(omega: &IntPolynomial, p: PhasePoint, n: u64) -> Result<Turns> {
    let w = omega.eval(n)?;
    Ok(Turns::of_product(p.x, n as i128).wrapping_add(Turns::of_product(p.y, w)))
}

/// Parses one torus coordinate: a decimal (`0.25`, `-1.5e-3`) or a fraction
/// (`3/7`). Returns the exact rational value.
pub fn parse_coordinate(s: &str) -> Result<num_rational::BigRational> {
    use num_rational::BigRational;
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let b: BigInt = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if b.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(a, b));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    let all: BigInt = format!("{int_part}{frac_part}0")
        .parse::<BigInt>()
        .expect("digits only")
        / BigInt::from(10);
    let scale = exp - frac_part.len() as i64;
    if scale.unsigned_abs() > 4000 {
        return Err(Error::Parse(format!("exponent out of range in {s:?}")));
    }
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Converts an exact rational coordinate to `Ratio<i64>` reduced to `[0, 1)`
/// when both parts fit, otherwise `None`.
pub fn small_ratio(r: &num_rational::BigRational) -> Option<Ratio<i64>> {
    let d = r.denom().to_i64()?;
    let n = r.numer().mod_floor(r.denom()).to_i64()?;
    (d > 0 && d < (1i64 << 62)).then(|| Ratio::new(n, d))
}

/// Nearest `f64` to an exact rational coordinate, reduced to `[0, 1)`.
pub fn ratio_to_unit_f64(r: &num_rational::BigRational) -> f64 {
    let n = r.numer().mod_floor(r.denom());
    let v = num_rational::BigRational::new(n, r.denom().clone());
    reduce_unit(v.to_f64().unwrap_or(0.0))
}
