//! Sparse multivariate polynomials with arbitrary-precision integer
//! coefficients, sized for the symbolic work this library needs: exact
//! determinants of small matrices of linear forms, partial derivatives, and
//! evaluation (exact, or reduced mod a prime for point scans).

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// A polynomial in `nvars` variables; keys are exponent vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = MultiPoly::zero(nvars);
        p.add_term(vec![0; nvars], c.into());
        p
    }

    /// The variable `x_i` (0-indexed).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exps = vec![0u32; nvars];
        exps[i] = 1;
        let mut p = MultiPoly::zero(nvars);
        p.add_term(exps, BigInt::from(1));
        p
    }

    /// A linear form Σ c_i x_i.
    pub fn linear(coeffs: &[i64]) -> Self {
        let nvars = coeffs.len();
        let mut p = MultiPoly::zero(nvars);
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                let mut exps = vec![0u32; nvars];
                exps[i] = 1;
                p.add_term(exps, BigInt::from(c));
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    fn add_term(&mut self, exps: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }

    /// ∂/∂x_i.
    pub fn derivative(&self, i: usize) -> MultiPoly {
        assert!(i < self.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[i] -= 1;
            out.add_term(exps, c * BigInt::from(e[i]));
        }
        out
    }

    /// Exact evaluation at an integer point.
    pub fn eval_bigint(&self, point: &[BigInt]) -> BigInt {
        assert_eq!(point.len(), self.nvars);
        let mut total = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    t *= x;
                }
            }
            total += t;
        }
        total
    }

    pub fn eval_i64(&self, point: &[i64]) -> BigInt {
        let pt: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
        self.eval_bigint(&pt)
    }

    /// Reduce the coefficients mod p for fast repeated evaluation.
    pub fn reduce_mod(&self, p: u64) -> ModPoly {
        let bp = BigInt::from(p);
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            let r = c.mod_floor_u64(&bp);
            if r != 0 {
                terms.push((e.clone(), r));
            }
        }
        ModPoly {
            nvars: self.nvars,
            p,
            terms,
        }
    }
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, p: &BigInt) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, p: &BigInt) -> u64 {
        use num_integer::Integer;
        self.mod_floor(p).to_u64().expect("residue fits u64")
    }
}

/// A polynomial with coefficients reduced modulo a prime, for point scans.
#[derive(Debug, Clone)]
pub struct ModPoly {
    nvars: usize,
    p: u64,
    terms: Vec<(Vec<u32>, u64)>,
}

impl ModPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluate at a point with coordinates already reduced mod p.
    pub fn eval(&self, point: &[u64]) -> u64 {
        debug_assert_eq!(point.len(), self.nvars);
        let p = self.p as u128;
        let mut total: u128 = 0;
        for (e, c) in &self.terms {
            let mut t = *c as u128;
            for (x, &k) in point.iter().zip(e) {
                let mut xp: u128 = 1;
                let mut base = *x as u128 % p;
                let mut k = k;
                while k > 0 {
                    if k & 1 == 1 {
                        xp = xp * base % p;
                    }
                    base = base * base % p;
                    k >>= 1;
                }
                t = t * xp % p;
            }
            total = (total + t) % p;
        }
        total as u64
    }
}

/// Determinant of a square matrix of polynomials by cofactor expansion
/// along the first row (matrices here are small).
pub fn det_poly(m: &[Vec<MultiPoly>]) -> MultiPoly {
    let n = m.len();
    assert!(n > 0 && m.iter().all(|r| r.len() == n));
    let nvars = m[0][0].nvars();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = MultiPoly::zero(nvars);
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<MultiPoly>> = (1..n)
            .map(|i| {
                (0..n)
                    .filter(|&c| c != j)
                    .map(|c| m[i][c].clone())
                    .collect()
            })
            .collect();
        let cof = entry.mul(&det_poly(&minor));
        if j % 2 == 0 {
            total = total.add(&cof);
        } else {
            total = total.sub(&cof);
        }
    }
    total
}

/// p-adic valuation of a nonzero integer; `None` for zero.
pub fn valuation(x: &BigInt, p: i64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let bp = BigInt::from(p);
    let mut v = 0u32;
    let mut x = x.abs();
    loop {
        use num_integer::Integer;
        let (q, r) = x.div_rem(&bp);
        if !r.is_zero() {
            return Some(v);
        }
        x = q;
        v += 1;
    }
}
