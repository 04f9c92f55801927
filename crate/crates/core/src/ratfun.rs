//! Exact arithmetic for bivariate rational functions whose denominators are
//! products of factors `1 - X^a Y^b`.
//!
//! Everything the closed formulas produce lives in the field Q(X, Y), with X
//! standing for the residue characteristic and Y for the variable tracking
//! index growth (so a factor `1/(1 - X^b Y^a)` is the local factor of an
//! abelian zeta value shifted by `a*s - b`).  A [`GeoRatFun`] stores
//!
//! ```text
//!   scalar * X^u Y^v * numer(X, Y) / prod (1 - X^a Y^b)^m
//! ```
//!
//! with an exact rational `scalar`, a Laurent monomial prefactor, an integer
//! polynomial numerator and a multiset of geometric denominator factors.
//!
//! Invariants:
//! - denominator pairs `(a, b)` are componentwise nonnegative and never
//!   `(0, 0)`; multiplicities are at least 1.
//! - no gcd reduction is ever attempted: equality is decided by
//!   cross-multiplication over the union of the denominator multisets, which
//!   is exact and total.
//! - variable inversion `X -> 1/X, Y -> 1/Y` is closed on this shape via
//!   `1/(1 - X^-a Y^-b) = -X^a Y^b / (1 - X^a Y^b)`.
//! - series coefficients in Y are Laurent polynomials in X with integer
//!   coefficients; expansion refuses inputs that are not power series in Y.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use thiserror::Error;

/// Errors from evaluation and series expansion.
#[derive(Debug, Error)]
pub enum RatFunError {
    /// A denominator factor (or a negative prefactor power) vanishes or blows
    /// up at the requested point.
    #[error("pole at evaluation point: {0}")]
    Pole(String),
    /// The function is not a power series in Y with Laurent-polynomial
    /// coefficients in X (e.g. a leftover `1 - X^a` factor does not divide
    /// the numerator, or the expansion has rational coefficients).
    #[error("series not expandable: {0}")]
    NotExpandable(String),
}

// ---------------------------------------------------------------------------
// Bivariate polynomials
// ---------------------------------------------------------------------------

/// A polynomial in X and Y with arbitrary-precision integer coefficients,
/// stored sparsely keyed by `(x_exponent, y_exponent)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BivarPoly {
    terms: BTreeMap<(u32, u32), BigInt>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        BivarPoly::default()
    }

    pub fn one() -> Self {
        BivarPoly::monomial(1, 0, 0)
    }

    /// `c * X^i Y^j`.
    pub fn monomial(c: impl Into<BigInt>, i: u32, j: u32) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((i, j), c);
        }
        BivarPoly { terms }
    }

    /// Build from `(x_exp, y_exp, coefficient)` triples, summing duplicates.
    pub fn from_terms<I, C>(iter: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, C)>,
        C: Into<BigInt>,
    {
        let mut p = BivarPoly::zero();
        for (i, j, c) in iter {
            p.add_term(i, j, &c.into());
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &BigInt)> {
        self.terms.iter().map(|(&(i, j), c)| (i, j, c))
    }

    fn add_term(&mut self, i: u32, j: u32, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((i, j)).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, j, c) in other.terms() {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        BivarPoly {
            terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = BivarPoly::zero();
        for (i1, j1, c1) in self.terms() {
            for (i2, j2, c2) in other.terms() {
                out.add_term(i1 + i2, j1 + j2, &(c1 * c2));
            }
        }
        out
    }

    /// Multiply by `X^di Y^dj` (nonnegative shifts only).
    pub fn shift(&self, di: u32, dj: u32) -> Self {
        BivarPoly {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), c)| ((i + di, j + dj), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return BivarPoly::zero();
        }
        BivarPoly {
            terms: self.terms.iter().map(|(&k, v)| (k, v * c)).collect(),
        }
    }

    /// Componentwise maximal exponents `(max_i, max_j)`; `(0, 0)` for the
    /// zero polynomial.
    pub fn max_degrees(&self) -> (u32, u32) {
        let mut mx = 0;
        let mut my = 0;
        for (&(i, j), _) in &self.terms {
            mx = mx.max(i);
            my = my.max(j);
        }
        (mx, my)
    }

    /// The term with lexicographically smallest `(x_exp, y_exp)`.
    fn min_term(&self) -> Option<(u32, u32, &BigInt)> {
        self.terms.iter().next().map(|(&(i, j), c)| (i, j, c))
    }

    /// The term with lexicographically largest `(x_exp, y_exp)`.
    fn max_term(&self) -> Option<(u32, u32, &BigInt)> {
        self.terms.iter().next_back().map(|(&(i, j), c)| (i, j, c))
    }

    /// Substitute `X -> 1/X, Y -> 1/Y` and clear denominators: returns the
    /// reflected polynomial `r` with `self(1/X, 1/Y) = X^-mx Y^-my * r(X, Y)`
    /// where `(mx, my) = max_degrees`.
    pub fn reflect(&self) -> Self {
        let (mx, my) = self.max_degrees();
        BivarPoly {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), c)| ((mx - i, my - j), c.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, x: &BigRational, y: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, j, c) in self.terms() {
            acc += BigRational::from(c.clone()) * rat_pow(x, i as i64) * rat_pow(y, j as i64);
        }
        acc
    }

    /// Exact division by `1 - X^a` (`a >= 1`); `None` when it does not divide.
    ///
    /// Works per Y-degree: with `q_i = n_i + q_{i-a}` the quotient columns
    /// are produced left to right and the division is exact iff the carry
    /// beyond the top degree vanishes.
    pub fn divide_by_one_minus_xpow(&self, a: u32) -> Option<Self> {
        assert!(a >= 1, "divisor must be a genuine 1 - X^a factor");
        // Group coefficients by Y-degree.
        let mut by_y: BTreeMap<u32, BTreeMap<u32, BigInt>> = BTreeMap::new();
        for (i, j, c) in self.terms() {
            by_y.entry(j).or_default().insert(i, c.clone());
        }
        let mut out = BivarPoly::zero();
        for (j, col) in by_y {
            let deg = *col.keys().next_back().expect("nonempty column");
            // 1 - X^a has constant term 1, so q_i = n_i + q_{i-a}.
            let mut q: Vec<BigInt> = vec![BigInt::zero(); deg as usize + 1];
            for i in 0..=deg {
                let n_i = col.get(&i).cloned().unwrap_or_else(BigInt::zero);
                let prev = if i >= a {
                    q[(i - a) as usize].clone()
                } else {
                    BigInt::zero()
                };
                q[i as usize] = n_i + prev;
            }
            // Exactness: the final `a` carries must vanish, i.e. multiplying
            // back may not overflow past `deg`.
            for i in (deg.saturating_sub(a - 1))..=deg {
                if !q[i as usize].is_zero() && i + a > deg {
                    // a nonzero carry would create a term of degree i + a
                    return None;
                }
            }
            for (i, c) in q.into_iter().enumerate() {
                out.add_term(i as u32, j, &c);
            }
        }
        // Defensive check: quotient times divisor reproduces the input.
        let back = out.mul(&BivarPoly::from_terms([(0u32, 0u32, 1), (a, 0, -1)]));
        if back == *self {
            Some(out)
        } else {
            None
        }
    }
}

fn rat_pow(x: &BigRational, e: i64) -> BigRational {
    if e == 0 {
        return BigRational::one();
    }
    x.pow(i32::try_from(e).expect("exponent fits in i32"))
}

// ---------------------------------------------------------------------------
// Laurent polynomials in X (series coefficients)
// ---------------------------------------------------------------------------

/// A Laurent polynomial in X with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentX {
    terms: BTreeMap<i64, BigInt>,
}

impl LaurentX {
    pub fn zero() -> Self {
        LaurentX::default()
    }

    pub fn monomial(c: impl Into<BigInt>, e: i64) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        LaurentX { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    pub fn add_assign_term(&mut self, e: i64, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_assign_term(e, c);
        }
        out
    }

    /// Multiply by `X^a`.
    pub fn shifted(&self, a: i64) -> Self {
        LaurentX {
            terms: self.terms.iter().map(|(&e, c)| (e + a, c.clone())).collect(),
        }
    }

    /// True iff every exponent is nonnegative (a genuine polynomial in X).
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().next().map_or(true, |&e| e >= 0)
    }

    /// Exact division of every coefficient by `d`; `None` if any fails.
    fn divide_coeffs(&self, d: &BigInt) -> Option<Self> {
        let mut out = LaurentX::zero();
        for (e, c) in self.terms() {
            let (q, r) = c.div_rem(d);
            if !r.is_zero() {
                return None;
            }
            out.add_assign_term(e, &q);
        }
        Some(out)
    }

    pub fn eval(&self, x: &BigRational) -> Result<BigRational, RatFunError> {
        let mut acc = BigRational::zero();
        for (e, c) in self.terms() {
            if e < 0 && x.is_zero() {
                return Err(RatFunError::Pole("X^negative at X = 0".into()));
            }
            acc += BigRational::from(c.clone()) * rat_pow(x, e);
        }
        Ok(acc)
    }
}

impl fmt::Display for LaurentX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Descending powers of X, as one writes a polynomial by hand.
        let mut first = true;
        for (&e, c) in self.terms.iter().rev() {
            let (sign, mag) = if c.is_negative() {
                ("-", -c.clone())
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            let coeff_is_one = mag.is_one();
            match (coeff_is_one, e) {
                (true, 0) => write!(f, "1")?,
                (false, 0) => write!(f, "{}", mag)?,
                (true, 1) => write!(f, "X")?,
                (false, 1) => write!(f, "{} X", mag)?,
                (true, _) => write!(f, "X^{}", e)?,
                (false, _) => write!(f, "{} X^{}", mag, e)?,
            }
        }
        Ok(())
    }
}

/// Truncated power series in Y whose coefficients are Laurent polynomials in
/// X: `coeff(k)` is the coefficient of `Y^k`, for `k = 0 ..= order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesInT {
    coeffs: Vec<LaurentX>,
}

impl SeriesInT {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &LaurentX {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[LaurentX] {
        &self.coeffs
    }

    /// Evaluate every coefficient at a numeric X.
    pub fn eval_x(&self, x: &BigRational) -> Result<Vec<BigRational>, RatFunError> {
        self.coeffs.iter().map(|c| c.eval(x)).collect()
    }
}

// ---------------------------------------------------------------------------
// Geometric-denominator rational functions
// ---------------------------------------------------------------------------

/// A bivariate rational function
/// `scalar * X^u Y^v * numer / prod (1 - X^a Y^b)^m` — see the module
/// documentation for the invariants.
#[derive(Debug, Clone)]
pub struct GeoRatFun {
    scalar: BigRational,
    xshift: i64,
    yshift: i64,
    numer: BivarPoly,
    denom: BTreeMap<(u32, u32), u32>,
}

impl GeoRatFun {
    pub fn zero() -> Self {
        GeoRatFun {
            scalar: BigRational::one(),
            xshift: 0,
            yshift: 0,
            numer: BivarPoly::zero(),
            denom: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        GeoRatFun::monomial(BigRational::one(), 0, 0)
    }

    /// `scalar * X^u Y^v`.
    pub fn monomial(scalar: BigRational, u: i64, v: i64) -> Self {
        GeoRatFun {
            scalar,
            xshift: u,
            yshift: v,
            numer: BivarPoly::one(),
            denom: BTreeMap::new(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        GeoRatFun::monomial(BigRational::from(BigInt::from(n)), 0, 0)
    }

    pub fn from_poly(p: BivarPoly) -> Self {
        GeoRatFun {
            scalar: BigRational::one(),
            xshift: 0,
            yshift: 0,
            numer: p,
            denom: BTreeMap::new(),
        }
    }

    /// `numer / prod (1 - X^a Y^b)` for nonnegative factor exponents.
    pub fn fraction(numer: BivarPoly, denom_factors: &[(u32, u32)]) -> Self {
        let mut out = GeoRatFun::from_poly(numer);
        for &(a, b) in denom_factors {
            out.push_denom_factor(a, b, 1);
        }
        out
    }

    /// The factor `1 - X^a Y^b` as a function, for exponents of any sign:
    /// sign-indefinite pairs are normalized by pulling out a Laurent
    /// monomial, e.g. `1 - X^-a Y^b = -X^-a Y^0 (X^a ... )`.
    pub fn one_minus_mono(a: i64, b: i64) -> Self {
        let ua = a.min(0);
        let vb = b.min(0);
        // 1 - X^a Y^b = X^ua Y^vb * (X^-ua Y^-vb - X^(a-ua) Y^(b-vb))
        let lead = ((-ua) as u32, (-vb) as u32);
        let trail = ((a - ua) as u32, (b - vb) as u32);
        let mut numer = BivarPoly::monomial(1, lead.0, lead.1);
        numer = numer.add(&BivarPoly::monomial(-1, trail.0, trail.1));
        GeoRatFun {
            scalar: BigRational::one(),
            xshift: ua,
            yshift: vb,
            numer,
            denom: BTreeMap::new(),
        }
    }

    /// `1 / (1 - X^a Y^b)` for a sign-definite nonzero pair: when both
    /// exponents are nonpositive the identity
    /// `1/(1 - X^-a Y^-b) = -X^a Y^b/(1 - X^a Y^b)` restores the invariant.
    ///
    /// Panics on mixed-sign pairs and on `(0, 0)`: those denominators are
    /// outside the closed shape and indicate a malformed cone substitution.
    pub fn inv_geom(a: i64, b: i64) -> Self {
        assert!(!(a == 0 && b == 0), "denominator factor (1 - 1) is zero");
        if a >= 0 && b >= 0 {
            let mut out = GeoRatFun::one();
            out.push_denom_factor(a as u32, b as u32, 1);
            out
        } else if a <= 0 && b <= 0 {
            let mut out = GeoRatFun::monomial(-BigRational::one(), -a, -b);
            out.push_denom_factor((-a) as u32, (-b) as u32, 1);
            out
        } else {
            panic!(
                "mixed-sign geometric denominator (1 - X^{} Y^{}) is not summable",
                a, b
            );
        }
    }

    fn push_denom_factor(&mut self, a: u32, b: u32, mult: u32) {
        assert!(
            (a, b) != (0, 0),
            "denominator factor (1 - 1) is zero"
        );
        if mult > 0 {
            *self.denom.entry((a, b)).or_insert(0) += mult;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero() || self.scalar.is_zero()
    }

    pub fn numer(&self) -> &BivarPoly {
        &self.numer
    }

    pub fn denom_factors(&self) -> impl Iterator<Item = ((u32, u32), u32)> + '_ {
        self.denom.iter().map(|(&k, &m)| (k, m))
    }

    // ---- Arithmetic ----

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        out.scalar = -out.scalar;
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = self.clone();
        out.scalar *= c;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return GeoRatFun::zero();
        }
        let mut denom = self.denom.clone();
        for (&k, &m) in &other.denom {
            *denom.entry(k).or_insert(0) += m;
        }
        GeoRatFun {
            scalar: &self.scalar * &other.scalar,
            xshift: self.xshift + other.xshift,
            yshift: self.yshift + other.yshift,
            numer: self.numer.mul(&other.numer),
            denom,
        }
    }

    /// Sum over the union-with-max of the two denominator multisets; no gcd
    /// reduction is attempted.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        // Union denominator.
        let mut denom: BTreeMap<(u32, u32), u32> = self.denom.clone();
        for (&k, &m) in &other.denom {
            let e = denom.entry(k).or_insert(0);
            *e = (*e).max(m);
        }
        // Each side gets multiplied by the factors it is missing.
        let extend = |side: &GeoRatFun| -> BivarPoly {
            let mut n = side.numer.clone();
            for (&(a, b), &m) in &denom {
                let have = side.denom.get(&(a, b)).copied().unwrap_or(0);
                for _ in have..m {
                    n = n.mul(&BivarPoly::from_terms([(0u32, 0u32, 1), (a, b, -1)]));
                }
            }
            n
        };
        let n1 = extend(self);
        let n2 = extend(other);
        // Common Laurent prefactor.
        let u = self.xshift.min(other.xshift);
        let v = self.yshift.min(other.yshift);
        let n1 = n1.shift((self.xshift - u) as u32, (self.yshift - v) as u32);
        let n2 = n2.shift((other.xshift - u) as u32, (other.yshift - v) as u32);
        // Common rational scalar 1/L with integer cofactors.
        let d1 = self.scalar.denom();
        let d2 = other.scalar.denom();
        let l = d1.lcm(d2);
        let c1 = self.scalar.numer() * (&l / d1);
        let c2 = other.scalar.numer() * (&l / d2);
        let numer = n1.scale(&c1).add(&n2.scale(&c2));
        if numer.is_zero() {
            return GeoRatFun::zero();
        }
        GeoRatFun {
            scalar: BigRational::new(BigInt::one(), l),
            xshift: u,
            yshift: v,
            numer,
            denom,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Exact equality as rational functions, by cross-multiplication.
    pub fn equals(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    // ---- Variable inversion and functional equations ----

    /// Substitute `X -> 1/X, Y -> 1/Y`, returning the result in the same
    /// closed shape (an involution up to `equals`).
    pub fn invert_vars(&self) -> Self {
        if self.is_zero() {
            return GeoRatFun::zero();
        }
        let (mx, my) = self.numer.max_degrees();
        let rnum = self.numer.reflect();
        let mut sign = BigRational::one();
        let mut du: i64 = 0;
        let mut dv: i64 = 0;
        for (&(a, b), &m) in &self.denom {
            // 1/(1 - X^-a Y^-b) = -X^a Y^b / (1 - X^a Y^b), m times
            if m % 2 == 1 {
                sign = -sign;
            }
            du += a as i64 * m as i64;
            dv += b as i64 * m as i64;
        }
        GeoRatFun {
            scalar: &self.scalar * sign,
            xshift: -self.xshift - mx as i64 + du,
            yshift: -self.yshift - my as i64 + dv,
            numer: rnum,
            denom: self.denom.clone(),
        }
    }

    /// Search for a self-reciprocity `f(1/X, 1/Y) = sign * X^a Y^b * f(X, Y)`
    /// and return `(sign, a, b)` when one exists (verified exactly).
    pub fn functional_equation(&self) -> Option<(i8, i64, i64)> {
        if self.is_zero() {
            return None;
        }
        let g = self.invert_vars();
        // Both sides share the denominator multiset, so a monomial relation
        // between the numerators is forced on the extreme terms.
        let (si, sj, sc) = self.numer.min_term()?;
        let (gi, gj, gc) = g.numer.min_term()?;
        let a = g.xshift + gi as i64 - self.xshift - si as i64;
        let b = g.yshift + gj as i64 - self.yshift - sj as i64;
        let (si2, sj2, _) = self.numer.max_term()?;
        let (gi2, gj2, _) = g.numer.max_term()?;
        if g.xshift + gi2 as i64 - self.xshift - si2 as i64 != a
            || g.yshift + gj2 as i64 - self.yshift - sj2 as i64 != b
        {
            return None;
        }
        let ratio = (&g.scalar * BigRational::from(gc.clone()))
            / (&self.scalar * BigRational::from(sc.clone()));
        let sign: i8 = if ratio == BigRational::one() {
            1
        } else if ratio == -BigRational::one() {
            -1
        } else {
            return None;
        };
        let mut candidate = self.scale(&BigRational::from(BigInt::from(sign)));
        candidate.xshift += a;
        candidate.yshift += b;
        if g.equals(&candidate) {
            Some((sign, a, b))
        } else {
            None
        }
    }

    // ---- Series expansion ----

    /// Expand as a power series in Y up to `Y^order`, with coefficients that
    /// must come out as integer Laurent polynomials in X.
    ///
    /// Denominator factors with `b = 0` are only admissible when they divide
    /// the numerator exactly (a finite correction); otherwise the function is
    /// not a power series of the required shape and the call fails.
    pub fn series_in_t(&self, order: usize) -> Result<SeriesInT, RatFunError> {
        if self.is_zero() {
            return Ok(SeriesInT {
                coeffs: vec![LaurentX::zero(); order + 1],
            });
        }
        // Integer numerator with the scalar's denominator kept aside.
        let mut n = self.numer.scale(self.scalar.numer());
        let scalar_den = self.scalar.denom().clone();
        let mut geo_factors: Vec<((u32, u32), u32)> = Vec::new();
        for (&(a, b), &m) in &self.denom {
            if b == 0 {
                for _ in 0..m {
                    n = n.divide_by_one_minus_xpow(a).ok_or_else(|| {
                        RatFunError::NotExpandable(format!(
                            "denominator factor (1 - X^{}) does not divide the numerator",
                            a
                        ))
                    })?;
                }
            } else {
                geo_factors.push(((a, b), m));
            }
        }
        // Geometric expansion in Y: series of prod 1/(1 - X^a Y^b).
        let v = self.yshift;
        let reach = order as i64 - v + n.max_degrees().1 as i64;
        if reach < 0 {
            // Everything shifted past the truncation order.
            return Ok(SeriesInT {
                coeffs: vec![LaurentX::zero(); order + 1],
            });
        }
        let reach = reach as usize;
        let mut geom: Vec<LaurentX> = vec![LaurentX::zero(); reach + 1];
        geom[0] = LaurentX::monomial(1, 0);
        for ((a, b), m) in geo_factors {
            for _ in 0..m {
                // acc[j] = old[j] + X^a * acc[j - b]
                for j in 0..=reach {
                    if j >= b as usize {
                        let prev = geom[j - b as usize].shifted(a as i64);
                        geom[j] = geom[j].add(&prev);
                    }
                }
            }
        }
        // Multiply by the numerator and place at absolute Y-degrees; the
        // coefficient of each negative degree is computed exactly (the reach
        // covers it), so any nonzero one certifies a pole at Y = 0.
        let mut out = vec![LaurentX::zero(); order + 1];
        let mut below_zero: BTreeMap<i64, LaurentX> = BTreeMap::new();
        for (i, j, c) in n.terms() {
            let base = v + j as i64;
            for (k, g) in geom.iter().enumerate() {
                let abs = base + k as i64;
                if abs > order as i64 {
                    break;
                }
                let contrib = g.shifted(self.xshift + i as i64);
                let mut scaled = LaurentX::zero();
                for (e, gc) in contrib.terms() {
                    scaled.add_assign_term(e, &(gc * c));
                }
                if abs < 0 {
                    let slot = below_zero.entry(abs).or_insert_with(LaurentX::zero);
                    *slot = slot.add(&scaled);
                } else {
                    out[abs as usize] = out[abs as usize].add(&scaled);
                }
            }
        }
        if below_zero.values().any(|c| !c.is_zero()) {
            return Err(RatFunError::NotExpandable(
                "nonzero coefficient at negative Y-degree (pole at Y = 0)".into(),
            ));
        }
        let coeffs = out
            .into_iter()
            .map(|c| {
                c.divide_coeffs(&scalar_den).ok_or_else(|| {
                    RatFunError::NotExpandable(
                        "series coefficients are not integer Laurent polynomials".into(),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesInT { coeffs })
    }

    /// Series in Y at a fixed numeric X, with exact rational coefficients.
    ///
    /// Unlike [`series_in_t`](Self::series_in_t) this handles `b = 0`
    /// denominator factors numerically (they are scalars once X is fixed).
    pub fn series_at_x(&self, x: &BigRational, order: usize) -> Result<Vec<BigRational>, RatFunError> {
        if self.is_zero() {
            return Ok(vec![BigRational::zero(); order + 1]);
        }
        let mut scalar = self.scalar.clone();
        if self.xshift != 0 {
            if x.is_zero() && self.xshift < 0 {
                return Err(RatFunError::Pole("X^negative at X = 0".into()));
            }
            scalar *= rat_pow(x, self.xshift);
        }
        // Numerator as a polynomial in Y with rational coefficients.
        let mut ncoeffs: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (i, j, c) in self.numer.terms() {
            let entry = ncoeffs.entry(j).or_insert_with(BigRational::zero);
            *entry += BigRational::from(c.clone()) * rat_pow(x, i as i64);
        }
        let ndeg = ncoeffs.keys().next_back().copied().unwrap_or(0);
        let v = self.yshift;
        let reach = order as i64 - v + ndeg as i64;
        if reach < 0 {
            return Ok(vec![BigRational::zero(); order + 1]);
        }
        let reach = reach as usize;
        let mut geom: Vec<BigRational> = vec![BigRational::zero(); reach + 1];
        geom[0] = BigRational::one();
        for (&(a, b), &m) in &self.denom {
            let xa = rat_pow(x, a as i64);
            if b == 0 {
                let val = BigRational::one() - xa;
                if val.is_zero() {
                    return Err(RatFunError::Pole(format!(
                        "denominator factor (1 - X^{}) vanishes at X = {}",
                        a, x
                    )));
                }
                for _ in 0..m {
                    scalar /= &val;
                }
            } else {
                for _ in 0..m {
                    for j in b as usize..=reach {
                        let prev = geom[j - b as usize].clone() * &xa;
                        geom[j] += prev;
                    }
                }
            }
        }
        let mut out = vec![BigRational::zero(); order + 1];
        let mut below_zero: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (j, c) in &ncoeffs {
            let base = v + *j as i64;
            for (k, g) in geom.iter().enumerate() {
                let abs = base + k as i64;
                if abs > order as i64 {
                    break;
                }
                let term = g.clone() * c * &scalar;
                if abs < 0 {
                    *below_zero.entry(abs).or_insert_with(BigRational::zero) += term;
                } else {
                    out[abs as usize] += term;
                }
            }
        }
        if below_zero.values().any(|c| !c.is_zero()) {
            return Err(RatFunError::NotExpandable(
                "nonzero coefficient at negative Y-degree (pole at Y = 0)".into(),
            ));
        }
        Ok(out)
    }

    /// Evaluate at an exact rational point.
    pub fn eval_at(&self, x: &BigRational, y: &BigRational) -> Result<BigRational, RatFunError> {
        if self.is_zero() {
            return Ok(BigRational::zero());
        }
        if x.is_zero() && self.xshift < 0 || y.is_zero() && self.yshift < 0 {
            return Err(RatFunError::Pole("negative prefactor power at zero".into()));
        }
        let mut acc = self.scalar.clone() * rat_pow(x, self.xshift) * rat_pow(y, self.yshift);
        acc *= self.numer.eval(x, y);
        for (&(a, b), &m) in &self.denom {
            let f = BigRational::one() - rat_pow(x, a as i64) * rat_pow(y, b as i64);
            if f.is_zero() {
                return Err(RatFunError::Pole(format!(
                    "denominator factor (1 - X^{} Y^{}) vanishes",
                    a, b
                )));
            }
            for _ in 0..m {
                acc /= &f;
            }
        }
        Ok(acc)
    }

    // ---- Canonical display ----

    /// Canonical form for printing: integer scalar content folded into the
    /// numerator, nonnegative prefactor powers folded in as well.  The result
    /// is representation-independent for equal functions *with equal
    /// denominator multisets*.
    fn display_parts(&self) -> (BigRational, i64, i64, BivarPoly) {
        if self.is_zero() {
            return (BigRational::zero(), 0, 0, BivarPoly::zero());
        }
        let mut scalar = self.scalar.clone();
        let mut numer = self.numer.clone();
        if scalar.is_integer() {
            numer = numer.scale(&scalar.to_integer());
            scalar = BigRational::one();
        }
        let mut u = self.xshift;
        let mut v = self.yshift;
        if u >= 0 && v >= 0 {
            numer = numer.shift(u as u32, v as u32);
            u = 0;
            v = 0;
        }
        (scalar, u, v, numer)
    }
}

impl PartialEq for GeoRatFun {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other)
    }
}

fn mono_string(i: u32, j: u32) -> String {
    let xs = match i {
        0 => String::new(),
        1 => "X".into(),
        _ => format!("X^{}", i),
    };
    let ys = match j {
        0 => String::new(),
        1 => "Y".into(),
        _ => format!("Y^{}", j),
    };
    match (xs.is_empty(), ys.is_empty()) {
        (true, true) => "1".into(),
        (false, true) => xs,
        (true, false) => ys,
        (false, false) => format!("{} {}", xs, ys),
    }
}

impl fmt::Display for BivarPoly {
    /// Terms in ascending (Y, X) order, the order index-growth series are
    /// conventionally written in.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut sorted: Vec<(u32, u32, &BigInt)> = self.terms().collect();
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut first = true;
        for (i, j, c) in sorted {
            let (sign, mag) = if c.is_negative() {
                ("-", -c.clone())
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            if mag.is_one() {
                write!(f, "{}", mono_string(i, j))?;
            } else if i == 0 && j == 0 {
                write!(f, "{}", mag)?;
            } else {
                write!(f, "{} {}", mag, mono_string(i, j))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for GeoRatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let (scalar, u, v, numer) = self.display_parts();
        let mut prefix = String::new();
        if !scalar.is_one() {
            prefix.push_str(&format!("{} * ", scalar));
        }
        if u != 0 {
            prefix.push_str(&format!("X^{} ", u));
        }
        if v != 0 {
            prefix.push_str(&format!("Y^{} ", v));
        }
        if self.denom.is_empty() {
            if prefix.is_empty() {
                write!(f, "{}", numer)
            } else {
                write!(f, "{}({})", prefix, numer)
            }
        } else {
            let mut den = String::new();
            for (&(a, b), &m) in &self.denom {
                let factor = format!("(1 - {})", mono_string(a, b));
                if m == 1 {
                    den.push_str(&factor);
                } else {
                    den.push_str(&format!("{}^{}", factor, m));
                }
            }
            write!(f, "{}({}) / {}", prefix, numer, den)
        }
    }
}

// ---------------------------------------------------------------------------
