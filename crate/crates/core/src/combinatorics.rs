//! Exact counting of the affine subspaces that make up expansion manifolds
//! and symmetry-induced critical sets.
//!
//! Notation used throughout the docs:
//!
//! * `G(r, m)`: number of critical subspaces obtained by replicating the
//!   neurons of an irreducible width-`r` critical point into width `m`
//!   (equivalently the number of surjections `[m] -> [r]`).
//! * `T(r, m)`: number of affine subspaces in the expansion manifold of an
//!   irreducible width-`r` point into width `m`.
//! * `g(u)`: number of ways to group `u` zero-type neurons (a Bell number).
//!
//! Every count is an arbitrary-precision integer and every ratio an exact
//! rational, so nothing here loses precision at large widths.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Largest `m` accepted by [`critical_subspace_count_enumerated`].
pub const CRITICAL_ORACLE_MAX_WIDTH: u32 = 9;
/// Largest `m` accepted by [`minima_subspace_count_enumerated`].
pub const MINIMA_ORACLE_MAX_WIDTH: u32 = 7;
/// Default number of significant digits when rendering a [`Ratio`].
pub const DEFAULT_SIGNIFICANT_DIGITS: usize = 12;

/// A non-negative integer count of exact size.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Count(BigUint);

impl Count {
    pub fn zero() -> Self {
        Count(BigUint::zero())
    }

    pub fn one() -> Self {
        Count(BigUint::one())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Nearest `f64`; saturates to infinity beyond the `f64` range.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Natural logarithm, accurate to double precision at any magnitude.
    /// Returns `-inf` for zero.
    pub fn ln(&self) -> f64 {
        ln_biguint(&self.0)
    }
}

impl From<BigUint> for Count {
    fn from(v: BigUint) -> Self {
        Count(v)
    }
}

impl From<u64> for Count {
    fn from(v: u64) -> Self {
        Count(BigUint::from(v))
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Count {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BigUint::from_str(s.trim())
            .map(Count)
            .map_err(|e| Error::Parse(format!("count {s:?}: {e}")))
    }
}

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::ops::Mul for &Count {
    type Output = Count;
    fn mul(self, rhs: &Count) -> Count {
        Count(&self.0 * &rhs.0)
    }
}

impl std::ops::Add for &Count {
    type Output = Count;
    fn add(self, rhs: &Count) -> Count {
        Count(&self.0 + &rhs.0)
    }
}

/// Exact non-negative rational in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(num_rational::Ratio<BigUint>);

impl Ratio {
    pub fn new(numerator: Count, denominator: Count) -> Result<Self> {
        if denominator.is_zero() {
            return Err(invalid("ratio denominator must be positive"));
        }
        Ok(Ratio(num_rational::Ratio::new(numerator.0, denominator.0)))
    }

    pub fn zero() -> Self {
        Ratio(num_rational::Ratio::from_integer(BigUint::zero()))
    }

    pub fn from_integer(v: Count) -> Self {
        Ratio(num_rational::Ratio::from_integer(v.0))
    }

    pub fn numerator(&self) -> Count {
        Count(self.0.numer().clone())
    }

    pub fn denominator(&self) -> Count {
        Count(self.0.denom().clone())
    }

    pub fn pow(&self, e: u32) -> Ratio {
        Ratio(num_rational::Ratio::new(
            self.0.numer().pow(e),
            self.0.denom().pow(e),
        ))
    }

    /// Natural logarithm (`-inf` for zero).
    pub fn ln(&self) -> f64 {
        ln_biguint(self.0.numer()) - ln_biguint(self.0.denom())
    }

    pub fn to_f64(&self) -> f64 {
        if self.0.numer().is_zero() {
            return 0.0;
        }
        self.ln().exp()
    }

    /// Decimal rendering with `sig` significant digits, rounding half to even.
    /// Values in `[1e-6, 10^sig)` are written positionally, others in
    /// scientific notation. Trailing zeros are dropped.
    pub fn to_decimal(&self, sig: usize) -> String {
        let sig = sig.max(1);
        let num = self.0.numer();
        let den = self.0.denom();
        if num.is_zero() {
            return "0".to_string();
        }
        let ten = BigUint::from(10u32);
        // decimal exponent e with 10^e <= x < 10^(e+1)
        let mut e = (self.ln() / std::f64::consts::LN_10).floor() as i64;
        let scaled_cmp = |e: i64| -> std::cmp::Ordering {
            // compare x with 10^e
            if e >= 0 {
                num.cmp(&(den * ten.pow(e as u32)))
            } else {
                (num * ten.pow((-e) as u32)).cmp(den)
            }
        };
        while scaled_cmp(e) == std::cmp::Ordering::Less {
            e -= 1;
        }
        while scaled_cmp(e + 1) != std::cmp::Ordering::Less {
            e += 1;
        }
        let shift = sig as i64 - 1 - e;
        let (n, d) = if shift >= 0 {
            (num * ten.pow(shift as u32), den.clone())
        } else {
            (num.clone(), den * ten.pow((-shift) as u32))
        };
        let (mut q, rem) = n.div_rem(&d);
        let twice = rem << 1usize;
        if twice > d || (twice == d && q.is_odd()) {
            q += 1u32;
        }
        if q == ten.pow(sig as u32) {
            q = ten.pow(sig as u32 - 1);
            e += 1;
        }
        let digits = q.to_string();
        debug_assert_eq!(digits.len(), sig);
        format_decimal(&digits, e, sig)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl std::ops::Add for &Ratio {
    type Output = Ratio;
    fn add(self, rhs: &Ratio) -> Ratio {
        Ratio(&self.0 + &rhs.0)
    }
}

impl std::ops::Mul<&Count> for &Ratio {
    type Output = Ratio;
    fn mul(self, rhs: &Count) -> Ratio {
        Ratio(&self.0 * num_rational::Ratio::from_integer(rhs.0.clone()))
    }
}

#[derive(Serialize, Deserialize)]
struct RatioRepr {
    num: Count,
    den: Count,
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RatioRepr {
            num: self.numerator(),
            den: self.denominator(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RatioRepr::deserialize(d)?;
        Ratio::new(r.num, r.den).map_err(serde::de::Error::custom)
    }
}

fn format_decimal(digits: &str, e: i64, sig: usize) -> String {
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if e >= 0 && (e as usize) < sig {
        let split = e as usize + 1;
        trim(format!("{}.{}", &digits[..split], &digits[split..]))
    } else if (-6..0).contains(&e) {
        let zeros = "0".repeat((-e - 1) as usize);
        trim(format!("0.{zeros}{digits}"))
    } else {
        let mantissa = trim(format!("{}.{}", &digits[..1], &digits[1..]));
        let sign = if e < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{}", e.abs())
    }
}

fn ln_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Binomial coefficient `n choose k` (zero when `k > n`).
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `(p_1 + ... + p_n)! / (p_1! ... p_n!)`.
pub fn multinomial(parts: &[u32]) -> BigUint {
    let mut total = 0u64;
    let mut acc = BigUint::one();
    for &p in parts {
        for i in 1..=p as u64 {
            total += 1;
            acc *= total;
            acc /= i;
        }
    }
    acc
}

/// Shape of an affine subspace: `k` replication counts for the `r` source
/// neurons and `b` sizes of the zero-type groups. Target width is
/// `sum(k) + sum(b)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    k: Vec<u32>,
    b: Vec<u32>,
}

impl Composition {
    pub fn new(k: Vec<u32>, b: Vec<u32>) -> Result<Self> {
        if k.is_empty() {
            return Err(invalid("composition needs at least one source neuron"));
        }
        if k.iter().chain(b.iter()).any(|&v| v == 0) {
            return Err(invalid("composition entries must be >= 1"));
        }
        Ok(Composition { k, b })
    }

    /// `k = (1, ..., 1)`, no zero-type groups.
    pub fn trivial(r: usize) -> Self {
        Composition {
            k: vec![1; r],
            b: Vec::new(),
        }
    }

    pub fn k(&self) -> &[u32] {
        &self.k
    }

    pub fn b(&self) -> &[u32] {
        &self.b
    }

    pub fn source_width(&self) -> usize {
        self.k.len()
    }

    pub fn target_width(&self) -> usize {
        self.k.iter().chain(self.b.iter()).map(|&v| v as usize).sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.b.is_empty() && self.k.iter().all(|&v| v == 1)
    }

    /// `c[i - 1]` is the number of zero-type groups of size `i`.
    pub fn zero_type_multiplicities(&self) -> Vec<u32> {
        let max = self.b.iter().copied().max().unwrap_or(0) as usize;
        let mut c = vec![0u32; max];
        for &v in &self.b {
            c[v as usize - 1] += 1;
        }
        c
    }

    /// Number of distinct neuron arrangements this shape produces:
    /// `multinomial(m; k, b) / prod_i c_i!`.
    pub fn arrangements(&self) -> Count {
        let parts: Vec<u32> = self.k.iter().chain(self.b.iter()).copied().collect();
        let norm = self
            .zero_type_multiplicities()
            .iter()
            .fold(BigUint::one(), |acc, &c| acc * factorial(c as u64));
        let (q, r) = multinomial(&parts).div_rem(&norm);
        debug_assert!(r.is_zero());
        Count(q)
    }
}

/// Calls `f` with every ordered tuple of `parts` positive integers summing to `total`.
pub fn for_each_composition(total: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(remaining: u32, left: usize, buf: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if left == 0 {
            if remaining == 0 {
                f(buf);
            }
            return;
        }
        if (remaining as usize) < left {
            return;
        }
        let max = remaining - (left as u32 - 1);
        for v in 1..=max {
            buf.push(v);
            rec(remaining - v, left - 1, buf, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(parts);
    rec(total, parts, &mut buf, f);
}

/// `G(r, m) = sum_{i=1}^{r} binom(r, i) (-1)^{r-i} i^m`.
///
/// Zero when `r > m`, `m!` when `r = m`. `G(0, m) = 0` for `m >= 1`.
pub fn critical_subspace_count(r: u32, m: u32) -> Count {
    if r == 0 {
        return if m == 0 { Count::one() } else { Count::zero() };
    }
    let mut acc = BigInt::zero();
    for i in 1..=r {
        let term = BigInt::from_biguint(Sign::Plus, binomial(r as u64, i as u64))
            * BigInt::from(i).pow(m);
        if (r - i) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Count(acc.to_biguint().expect("alternating sum is non-negative"))
}

/// `G(r, m)` as the sum of multinomial coefficients over all compositions of
/// `m` into `r` positive parts. Enumerates, so `m` is capped at
/// [`CRITICAL_ORACLE_MAX_WIDTH`].
pub fn critical_subspace_count_enumerated(r: u32, m: u32) -> Result<Count> {
    if m > CRITICAL_ORACLE_MAX_WIDTH {
        return Err(Error::SizeGuard {
            what: "m",
            value: m as usize,
            limit: CRITICAL_ORACLE_MAX_WIDTH as usize,
        });
    }
    if r == 0 || m == 0 {
        return Err(invalid("r and m must be positive"));
    }
    let mut acc = BigUint::zero();
    for_each_composition(m, r as usize, &mut |k| acc += multinomial(k));
    Ok(Count(acc))
}

/// `g(u) = sum_{j=1}^{u} G(j, u) / j!`, the number of ways to split `u`
/// zero-type neurons into unlabeled groups (the `u`-th Bell number).
pub fn zero_type_groupings(u: u32) -> Count {
    Memo::default().zero_type_groupings(u).clone().into()
}

/// `T(r, m) = G(r, m) + sum_{u=1}^{m-r} binom(m, u) G(r, m-u) g(u)`.
pub fn minima_subspace_count(r: u32, m: u32) -> Result<Count> {
    check_source_width(r, m)?;
    Ok(Memo::default().minima(r, m).into())
}

/// `T(r, m)` by direct enumeration of every shape `(k, b)` with the
/// `1 / prod c_i!` normalization. `m` is capped at [`MINIMA_ORACLE_MAX_WIDTH`].
pub fn minima_subspace_count_enumerated(r: u32, m: u32) -> Result<Count> {
    if m > MINIMA_ORACLE_MAX_WIDTH {
        return Err(Error::SizeGuard {
            what: "m",
            value: m as usize,
            limit: MINIMA_ORACLE_MAX_WIDTH as usize,
        });
    }
    check_source_width(r, m)?;
    let mut acc = num_rational::Ratio::<BigUint>::zero();
    for j in 0..=(m - r) {
        // split the width between copies (>= r) and zero-type groups (>= j)
        for zero_total in j..=(m - r) {
            let copy_total = m - zero_total;
            if j == 0 && zero_total > 0 {
                continue;
            }
            let mut ks = Vec::new();
            for_each_composition(copy_total, r as usize, &mut |k| ks.push(k.to_vec()));
            let mut bs = Vec::new();
            if j == 0 {
                bs.push(Vec::new());
            } else {
                // group sizes are unordered: keep the non-increasing representative
                for_each_composition(zero_total, j as usize, &mut |b| {
                    if b.windows(2).all(|w| w[0] >= w[1]) {
                        bs.push(b.to_vec());
                    }
                });
            }
            for k in &ks {
                for b in &bs {
                    let comp = Composition {
                        k: k.clone(),
                        b: b.clone(),
                    };
                    let parts: Vec<u32> = k.iter().chain(b.iter()).copied().collect();
                    let norm = comp
                        .zero_type_multiplicities()
                        .iter()
                        .fold(BigUint::one(), |a, &c| a * factorial(c as u64));
                    acc += num_rational::Ratio::new(multinomial(&parts), norm);
                }
            }
        }
    }
    if !acc.is_integer() {
        return Err(invalid("enumerated subspace count is not an integer"));
    }
    Ok(Count(acc.to_integer()))
}

fn check_source_width(r: u32, m: u32) -> Result<()> {
    if r == 0 {
        return Err(invalid("r must be positive"));
    }
    if r > m {
        return Err(invalid(format!("need r <= m, got r = {r}, m = {m}")));
    }
    Ok(())
}

/// Local memo for `G` and `g`; never shared between calls of the public API.
#[derive(Default)]
struct Memo {
    g: HashMap<(u32, u32), BigUint>,
    groupings: HashMap<u32, BigUint>,
}

impl Memo {
    fn critical(&mut self, r: u32, m: u32) -> &BigUint {
        self.g
            .entry((r, m))
            .or_insert_with(|| critical_subspace_count(r, m).0)
    }

    fn zero_type_groupings(&mut self, u: u32) -> &BigUint {
        if !self.groupings.contains_key(&u) {
            let mut acc = BigUint::zero();
            for j in 1..=u {
                let (q, rem) = self.critical(j, u).div_rem(&factorial(j as u64));
                debug_assert!(rem.is_zero());
                acc += q;
            }
            self.groupings.insert(u, acc);
        }
        &self.groupings[&u]
    }

    fn minima(&mut self, r: u32, m: u32) -> BigUint {
        let mut acc = self.critical(r, m).clone();
        for u in 1..=(m - r) {
            let term =
                binomial(m as u64, u as u64) * self.critical(r, m - u) * self.zero_type_groupings(u);
            acc += term;
        }
        acc
    }
}

/// `R_k(r*, m) = G(r* - k, m) / T(r*, m)`: abundance of `k`-th level saddle
/// subspaces relative to global-minima subspaces.
pub fn saddle_ratio(k: u32, r_star: u32, m: u32) -> Result<Ratio> {
    if k >= r_star {
        return Err(invalid(format!("need k < r*, got k = {k}, r* = {r_star}")));
    }
    check_source_width(r_star, m)?;
    let mut memo = Memo::default();
    let t = memo.minima(r_star, m);
    let g = memo.critical(r_star - k, m).clone();
    Ratio::new(Count(g), Count(t))
}

/// Mild-overparameterization approximation of `R_k(r*, r* + h)`:
/// `(r*)^k / (2^k (h + 1) ... (h + k))`, evaluated in the log domain.
pub fn mild_regime_ratio(k: u32, h: u32, r_star: u32) -> f64 {
    let mut ln = k as f64 * (r_star as f64).ln() - k as f64 * std::f64::consts::LN_2;
    for i in 1..=k {
        ln -= ((h + i) as f64).ln();
    }
    ln.exp()
}

/// `ln(m^k m! / (2^k k!))`, the common asymptote of `G(m - k, m)` and
/// `T(m - k, m)` for fixed `k`.
pub fn ln_asymptotic_count(k: u32, m: u32) -> f64 {
    use libm::lgamma as ln_gamma;
    let (k, m) = (k as f64, m as f64);
    k * m.ln() + ln_gamma(m + 1.0) - k * std::f64::consts::LN_2 - ln_gamma(k + 1.0)
}

/// Outcome of the vast-overparameterization identity at `(r*, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VastIdentity {
    /// `sum_{k=1}^{r*-1} binom(r*-1, k-1) G(r*-k, m)`
    pub lhs: Count,
    /// `(r* - 1)^m`
    pub rhs: Count,
    /// `lhs / T(r*, m)`
    pub ratio_to_minima: Ratio,
    /// `((r* - 1) / r*)^m`
    pub geometric_bound: Ratio,
}

impl VastIdentity {
    pub fn identity_holds(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn bound_holds(&self) -> bool {
        self.ratio_to_minima <= self.geometric_bound
    }
}

pub fn vast_identity(r_star: u32, m: u32) -> Result<VastIdentity> {
    if r_star < 2 {
        return Err(invalid("r* must be >= 2"));
    }
    check_source_width(r_star, m)?;
    let mut memo = Memo::default();
    let mut lhs = BigUint::zero();
    for k in 1..r_star {
        lhs += binomial((r_star - 1) as u64, (k - 1) as u64) * memo.critical(r_star - k, m);
    }
    let rhs = BigUint::from(r_star - 1).pow(m);
    let t = memo.minima(r_star, m);
    let ratio_to_minima = Ratio::new(Count(lhs.clone()), Count(t))?;
    let geometric_bound =
        Ratio::new(Count::from((r_star - 1) as u64), Count::from(r_star as u64))?.pow(m);
    Ok(VastIdentity {
        lhs: Count(lhs),
        rhs: Count(rhs),
        ratio_to_minima,
        geometric_bound,
    })
}

/// Which per-layer count to multiply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    /// `T`: affine subspaces of the expansion manifold.
    Minima,
    /// `G`: symmetry-induced critical subspaces.
    Critical,
}

/// Product of per-hidden-layer counts for a multi-layer network.
pub fn multilayer_count(r_widths: &[u32], m_widths: &[u32], kind: SubspaceKind) -> Result<Count> {
    if r_widths.len() != m_widths.len() {
        return Err(Error::DimensionMismatch {
            expected: r_widths.len(),
            got: m_widths.len(),
        });
    }
    let mut memo = Memo::default();
    let mut acc = BigUint::one();
    for (&r, &m) in r_widths.iter().zip(m_widths) {
        let layer = match kind {
            SubspaceKind::Minima => {
                check_source_width(r, m)?;
                memo.minima(r, m)
            }
            SubspaceKind::Critical => memo.critical(r, m).clone(),
        };
        acc *= layer;
    }
    Ok(Count(acc))
}

/// Multipliers `a_k` for the aggregate saddle ratio `sum_k a_k R_k`.
#[derive(Clone, Debug, PartialEq)]
pub enum SaddleWeights {
    /// `a_k = 1`
    Unit,
    /// `a_k = binom(r* - 1, k - 1)`
    BinomialBound,
    /// `a_k = values[k - 1]`, must cover `k = 1 .. r* - 1`.
    Custom(Vec<Count>),
}

impl SaddleWeights {
    fn weight(&self, k: u32, r_star: u32) -> Result<BigUint> {
        match self {
            SaddleWeights::Unit => Ok(BigUint::one()),
            SaddleWeights::BinomialBound => Ok(binomial((r_star - 1) as u64, (k - 1) as u64)),
            SaddleWeights::Custom(v) => v
                .get(k as usize - 1)
                .map(|c| c.0.clone())
                .ok_or_else(|| invalid(format!("missing a_k for k = {k}"))),
        }
    }
}

/// One `(m, k)` cell of the ratio table, with the aggregate for that `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub m: u32,
    pub k: u32,
    pub ratio: Ratio,
    pub aggregate: Ratio,
}

/// Exact `R_k(r*, m)` for `m = r*+1 ..= m_max` and `k = 0 ..= min(k_max, r*-1)`,
/// each row carrying the aggregate `sum_{k=1}^{r*-1} a_k R_k(r*, m)`.
pub fn ratio_table(
    r_star: u32,
    m_max: u32,
    k_max: u32,
    weights: &SaddleWeights,
) -> Result<Vec<RatioRow>> {
    if r_star == 0 || r_star >= m_max {
        return Err(invalid(format!("need 1 <= r* < m_max, got r* = {r_star}, m_max = {m_max}")));
    }
    let mut memo = Memo::default();
    let mut rows = Vec::new();
    for m in (r_star + 1)..=m_max {
        let t = memo.minima(r_star, m);
        let mut agg = BigUint::zero();
        for k in 1..r_star {
            agg += weights.weight(k, r_star)? * memo.critical(r_star - k, m);
        }
        let aggregate = Ratio::new(Count(agg), Count(t.clone()))?;
        for k in 0..=k_max.min(r_star - 1) {
            let g = memo.critical(r_star - k, m).clone();
            rows.push(RatioRow {
                m,
                k,
                ratio: Ratio::new(Count(g), Count(t.clone()))?,
                aggregate: aggregate.clone(),
            });
        }
    }
    Ok(rows)
}

pub const RATIO_TABLE_HEADER: &str =
    "m,k,R_num,R_den,R_decimal,aggregate_num,aggregate_den,aggregate_decimal";

/// Writes the table as CSV (LF line endings, header first).
pub fn write_ratio_table_csv<W: Write>(rows: &[RatioRow], sig: usize, mut out: W) -> Result<()> {
    writeln!(out, "{RATIO_TABLE_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.m,
            row.k,
            row.ratio.numerator(),
            row.ratio.denominator(),
            row.ratio.to_decimal(sig),
            row.aggregate.numerator(),
            row.aggregate.denominator(),
            row.aggregate.to_decimal(sig),
        )?;
    }
    Ok(())
}
