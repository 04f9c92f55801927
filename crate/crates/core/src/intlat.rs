//! Integer-lattice primitives: enumeration of finite-index sublattices in
//! Hermite normal form, Smith normal form with explicit transforms,
//! membership tests, and canonical renormalization.
//!
//! Conventions:
//! - Lattices are row lattices: the rows of a basis matrix generate them.
//!   A column convention would silently transpose every pairing downstream.
//! - The Hermite normal form used here is upper triangular with positive
//!   diagonal; every entry above the diagonal is reduced modulo the diagonal
//!   entry of its column.  Two equal sublattices have identical HNF bases.
//! - Enumeration is restricted to indices that are powers of a fixed prime
//!   (the only case needed), and its order is deterministic: diagonal
//!   exponent vectors (k_1..k_n) ascend lexicographically, then off-diagonal
//!   digits ascend lexicographically in column-major cell order.  Chunked
//!   scans over index ranges reproduce the same sequence, so data-parallel
//!   consumers can partition work without changing results.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// A finite-index sublattice of ℤ^n held as its canonical row-style HNF
/// basis (upper triangular, positive diagonal, reduced above the diagonal).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeHnf {
    n: usize,
    rows: Vec<i64>,
}

impl LatticeHnf {
    /// The standard lattice ℤ^n.
    pub fn standard(n: usize) -> Self {
        LatticeHnf::diagonal(&vec![1; n])
    }

    /// Diagonal lattice with the given positive diagonal entries.
    pub fn diagonal(diag: &[i64]) -> Self {
        let n = diag.len();
        assert!(diag.iter().all(|&d| d > 0), "diagonal must be positive");
        let mut rows = vec![0i64; n * n];
        for (j, &d) in diag.iter().enumerate() {
            rows[j * n + j] = d;
        }
        LatticeHnf { n, rows }
    }

    /// Wrap a matrix that is already in canonical HNF (checked).
    pub fn from_hnf_rows(n: usize, rows: Vec<i64>) -> Self {
        let l = LatticeHnf { n, rows };
        assert!(l.is_canonical(), "matrix is not in canonical HNF");
        l
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.rows[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [i64] {
        &mut self.rows
    }

    fn is_canonical(&self) -> bool {
        let n = self.n;
        if self.rows.len() != n * n {
            return false;
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.entry(i, j);
                if j < i && v != 0 {
                    return false;
                }
                if i == j && v <= 0 {
                    return false;
                }
                if j > i && (v < 0 || v >= self.entry(j, j)) {
                    return false;
                }
            }
        }
        true
    }

    /// The index [ℤ^n : Λ] = product of the diagonal.
    pub fn index(&self) -> i64 {
        (0..self.n).map(|j| self.entry(j, j)).product()
    }

    /// log_p of the index, for a lattice whose index is a power of p.
    pub fn index_log(&self, p: i64) -> u32 {
        let mut k = 0u32;
        for j in 0..self.n {
            let mut d = self.entry(j, j);
            while d % p == 0 {
                d /= p;
                k += 1;
            }
            assert!(d == 1, "index is not a power of {}", p);
        }
        k
    }

    /// True iff some basis entry is nonzero mod p, i.e. Λ ⊄ pℤ^n.  Such a
    /// lattice is the unique maximal representative of its homothety class;
    /// equivalently the smallest elementary divisor is 1.
    pub fn is_maximal_rep(&self, p: i64) -> bool {
        self.rows.iter().any(|&v| v % p != 0)
    }

    /// Exact membership of an integer vector in the row span over ℤ, by
    /// back-substitution against the triangular basis.
    pub fn member(&self, v: &[i64]) -> bool {
        assert_eq!(v.len(), self.n, "vector length must equal the rank");
        let n = self.n;
        let mut c = vec![0i64; n];
        for j in 0..n {
            let mut r = v[j];
            for (i, ci) in c.iter().enumerate().take(j) {
                r -= ci * self.entry(i, j);
            }
            let d = self.entry(j, j);
            if r % d != 0 {
                return false;
            }
            c[j] = r / d;
        }
        true
    }

    /// Membership in the sublattice of coordinates `start..n` spanned by the
    /// rows `start..n` (valid because the basis is upper triangular: those
    /// rows are exactly the elements of the lattice supported there).
    /// `v` has length `n - start`.
    pub fn member_suffix(&self, start: usize, v: &[i64]) -> bool {
        let n = self.n;
        assert_eq!(v.len(), n - start);
        let mut c = vec![0i64; n - start];
        for j in 0..n - start {
            let mut r = v[j];
            for (i, ci) in c.iter().enumerate().take(j) {
                r -= ci * self.entry(start + i, start + j);
            }
            let d = self.entry(start + j, start + j);
            if r % d != 0 {
                return false;
            }
            c[j] = r / d;
        }
        true
    }

    /// The projection to the first `d` coordinates, generated by the first
    /// `d` rows truncated (again valid by triangularity).
    pub fn leading_block(&self, d: usize) -> LatticeHnf {
        let mut rows = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                rows[i * d + j] = self.entry(i, j);
            }
        }
        LatticeHnf { n: d, rows }
    }

    /// The intersection with the last `n - start` coordinates, as a lattice
    /// of that rank.
    pub fn trailing_block(&self, start: usize) -> LatticeHnf {
        let m = self.n - start;
        let mut rows = vec![0i64; m * m];
        for i in 0..m {
            for j in 0..m {
                rows[i * m + j] = self.entry(start + i, start + j);
            }
        }
        LatticeHnf { n: m, rows }
    }

    /// Basis as a matrix of big integers.
    pub fn to_mat(&self) -> IntMat {
        IntMat::from_fn(self.n, self.n, |i, j| BigInt::from(self.entry(i, j)))
    }
}

// ---------------------------------------------------------------------------
// Enumeration of index-p^k sublattices
// ---------------------------------------------------------------------------

/// All exponent vectors (k_1..k_n) of nonnegative integers summing to k, in
/// lexicographic ascending order.
pub fn compositions(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(out, cur, pos + 1, left - v);
        }
    }
    if n == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(&mut out, &mut cur, 0, k);
    out
}

fn pow_i64(p: i64, k: u32) -> i64 {
    p.checked_pow(k).expect("prime power overflows i64")
}

/// Number of sublattices of ℤ^n of index p^k: for each diagonal exponent
/// vector, each above-diagonal cell in column j ranges over p^{k_j} values.
pub fn hnf_count(n: usize, p: i64, k: u32) -> u128 {
    let mut total: u128 = 0;
    for comp in compositions(n, k) {
        let mut c: u128 = 1;
        for (j, &kj) in comp.iter().enumerate() {
            let m = pow_i64(p, kj) as u128;
            for _ in 0..j {
                c = c.checked_mul(m).expect("HNF count overflows u128");
            }
        }
        total += c;
    }
    total
}

/// Number of index-p^k sublattices that are maximal representatives of their
/// homothety class: all lattices minus those contained in pℤ^n (which are
/// exactly p·Λ₀ with Λ₀ of index p^{k-n}).
pub fn maximal_hnf_count(n: usize, p: i64, k: u32) -> u128 {
    let all = hnf_count(n, p, k);
    if (k as usize) < n {
        all
    } else {
        all - hnf_count(n, p, k - n as u32)
    }
}

/// A contiguous slice of the enumeration of one diagonal type, for chunked
/// data-parallel scans.
#[derive(Debug, Clone)]
pub struct HnfChunk {
    pub comp: Vec<u32>,
    pub start: u128,
    pub end: u128,
}

/// Split the full enumeration of index-p^k sublattices of ℤ^n into chunks of
/// at most `target` lattices, each within a single diagonal type.
pub fn hnf_chunk_plan(n: usize, p: i64, k: u32, target: u128) -> Vec<HnfChunk> {
    assert!(target >= 1);
    let mut chunks = Vec::new();
    for comp in compositions(n, k) {
        let mut total: u128 = 1;
        for (j, &kj) in comp.iter().enumerate() {
            let m = pow_i64(p, kj) as u128;
            for _ in 0..j {
                total = total.checked_mul(m).expect("HNF count overflows u128");
            }
        }
        let mut start = 0u128;
        while start < total {
            let end = (start + target).min(total);
            chunks.push(HnfChunk {
                comp: comp.clone(),
                start,
                end,
            });
            start = end;
        }
    }
    chunks
}

/// The above-diagonal cells that carry free digits for a diagonal type, in
/// column-major order (column ascending, then row ascending), paired with
/// their modulus p^{k_j}.  Cells in columns with k_j = 0 are omitted (their
/// only value is 0).
fn free_cells(n: usize, p: i64, comp: &[u32]) -> Vec<(usize, usize, i64)> {
    let mut cells = Vec::new();
    for (j, &kj) in comp.iter().enumerate().take(n) {
        if kj == 0 {
            continue;
        }
        let m = pow_i64(p, kj);
        for i in 0..j {
            cells.push((i, j, m));
        }
    }
    cells
}

/// Visit the lattices of one chunk in enumeration order.  The visitor
/// receives a reference to a reused buffer; it must copy what it keeps.
pub fn scan_hnf_chunk(n: usize, p: i64, chunk: &HnfChunk, mut visit: impl FnMut(&LatticeHnf)) {
    let comp = &chunk.comp;
    assert_eq!(comp.len(), n);
    let cells = free_cells(n, p, comp);
    // Buffer initialized with the diagonal.
    let mut buf = LatticeHnf::diagonal(&comp.iter().map(|&kj| pow_i64(p, kj)).collect::<Vec<_>>());
    // Decode the start index into big-endian mixed-radix digits over the
    // cell sequence (first cell most significant).
    let mut digits = vec![0i64; cells.len()];
    let mut rest = chunk.start;
    for (slot, &(_, _, m)) in cells.iter().enumerate().rev() {
        digits[slot] = (rest % m as u128) as i64;
        rest /= m as u128;
    }
    assert!(rest == 0, "chunk start out of range for its diagonal type");
    for (slot, &(i, j, _)) in cells.iter().enumerate() {
        buf.rows_mut()[i * n + j] = digits[slot];
    }
    let mut idx = chunk.start;
    loop {
        if idx >= chunk.end {
            break;
        }
        visit(&buf);
        idx += 1;
        if idx >= chunk.end {
            break;
        }
        // Increment the odometer: last cell is least significant.
        let mut pos = cells.len();
        loop {
            assert!(pos > 0, "odometer overflow before chunk end");
            pos -= 1;
            let (i, j, m) = cells[pos];
            if digits[pos] + 1 < m {
                digits[pos] += 1;
                buf.rows_mut()[i * n + j] = digits[pos];
                break;
            }
            digits[pos] = 0;
            buf.rows_mut()[i * n + j] = 0;
        }
    }
}

/// Iterator over all sublattices of ℤ^n of index p^k in canonical order,
/// optionally restricted to maximal homothety-class representatives.
pub struct HnfIter {
    n: usize,
    p: i64,
    plans: Vec<HnfChunk>,
    plan_idx: usize,
    pending: Vec<LatticeHnf>,
    pending_idx: usize,
    maximal_only: bool,
}

impl HnfIter {
    fn new(n: usize, p: i64, k: u32, maximal_only: bool) -> Self {
        HnfIter {
            n,
            p,
            plans: hnf_chunk_plan(n, p, k, 4096),
            plan_idx: 0,
            pending: Vec::new(),
            pending_idx: 0,
            maximal_only,
        }
    }
}

impl Iterator for HnfIter {
    type Item = LatticeHnf;

    fn next(&mut self) -> Option<LatticeHnf> {
        loop {
            if self.pending_idx < self.pending.len() {
                let item = self.pending[self.pending_idx].clone();
                self.pending_idx += 1;
                return Some(item);
            }
            if self.plan_idx >= self.plans.len() {
                return None;
            }
            let chunk = self.plans[self.plan_idx].clone();
            self.plan_idx += 1;
            self.pending.clear();
            self.pending_idx = 0;
            let maximal_only = self.maximal_only;
            let p = self.p;
            let pending = &mut self.pending;
            scan_hnf_chunk(self.n, p, &chunk, |l| {
                if !maximal_only || l.is_maximal_rep(p) {
                    pending.push(l.clone());
                }
            });
        }
    }
}

/// Every sublattice of ℤ^n of index exactly p^k, each exactly once, in
/// canonical deterministic order.
pub fn enumerate_hnf(n: usize, p: i64, k: u32) -> HnfIter {
    HnfIter::new(n, p, k, false)
}

/// The index-p^k sublattices that are maximal in their homothety class
/// (smallest elementary divisor 1, i.e. basis not ≡ 0 mod p).
pub fn enumerate_maximal_hnf(n: usize, p: i64, k: u32) -> HnfIter {
    HnfIter::new(n, p, k, true)
}

// ---------------------------------------------------------------------------
// Big-integer matrices, HNF normalization, Smith normal form
// ---------------------------------------------------------------------------

/// A dense matrix of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    pub nrows: usize,
    pub ncols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        IntMat {
            nrows,
            ncols,
            data: vec![BigInt::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut m = IntMat::zero(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        IntMat::from_fn(nrows, ncols, |i, j| BigInt::from(rows[i][j]))
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.ncols, other.nrows);
        let mut out = IntMat::zero(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    let t = a * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.ncols {
            self.data.swap(a * self.ncols + j, b * self.ncols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.nrows {
            self.data.swap(i * self.ncols + a, i * self.ncols + b);
        }
    }

    /// row a -= q * row b
    fn row_axpy(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.ncols {
            let t = q * &self[(b, j)];
            self[(a, j)] -= t;
        }
    }

    /// col a -= q * col b
    fn col_axpy(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.nrows {
            let t = q * &self[(i, b)];
            self[(i, a)] -= t;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.ncols {
            let t = -self[(a, j)].clone();
            self[(a, j)] = t;
        }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for t in 0..n - 1 {
            if a[(t, t)].is_zero() {
                let pivot = (t + 1..n).find(|&i| !a[(i, t)].is_zero());
                match pivot {
                    Some(i) => {
                        a.swap_rows(t, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in t + 1..n {
                for j in t + 1..n {
                    let v = (&a[(i, j)] * &a[(t, t)] - &a[(i, t)] * &a[(t, j)]) / &prev;
                    a[(i, j)] = v;
                }
                a[(i, t)] = BigInt::zero();
            }
            prev = a[(t, t)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.ncols + j]
    }
}

/// Canonical row HNF of a nonsingular square integer matrix: upper
/// triangular, positive diagonal, entries above each diagonal reduced into
/// [0, diagonal).  Returns `None` for singular input.
pub fn hnf_normalize(m: &IntMat) -> Option<IntMat> {
    assert_eq!(m.nrows, m.ncols, "normalization expects a square basis");
    let n = m.nrows;
    let mut a = m.clone();
    for j in 0..n {
        // Euclid among rows j..n on column j until one nonzero remains.
        loop {
            let mut best: Option<usize> = None;
            for i in j..n {
                if !a[(i, j)].is_zero()
                    && best.map_or(true, |b| a[(i, j)].abs() < a[(b, j)].abs())
                {
                    best = Some(i);
                }
            }
            let b = best?;
            a.swap_rows(j, b);
            let mut done = true;
            for i in j + 1..n {
                if a[(i, j)].is_zero() {
                    continue;
                }
                let q = &a[(i, j)] / &a[(j, j)];
                a.row_axpy(i, j, &q);
                if !a[(i, j)].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[(j, j)].is_negative() {
            a.negate_row(j);
        }
        let d = a[(j, j)].clone();
        for i in 0..j {
            let q = a[(i, j)].div_floor(&d);
            a.row_axpy(i, j, &q);
        }
    }
    Some(a)
}

/// Smith normal form data: `left · M · right = diag(divisors)` with both
/// transforms unimodular and the divisors a nonnegative divisibility chain
/// (zeros, if any, at the end).
#[derive(Debug, Clone)]
pub struct SnfResult {
    pub divisors: Vec<BigInt>,
    pub left: IntMat,
    pub right: IntMat,
}

impl SnfResult {
    /// p-adic valuations of the divisors; `None` for a zero divisor.
    pub fn divisor_valuations(&self, p: i64) -> Vec<Option<u32>> {
        let bp = BigInt::from(p);
        self.divisors
            .iter()
            .map(|d| {
                if d.is_zero() {
                    None
                } else {
                    let mut v = 0u32;
                    let mut d = d.clone();
                    while (&d % &bp).is_zero() {
                        d /= &bp;
                        v += 1;
                    }
                    Some(v)
                }
            })
            .collect()
    }
}

/// Smith normal form over ℤ with explicit unimodular transforms, for any
/// rectangular matrix.  The factorization `left · M · right = diag` is
/// verified before returning.
pub fn smith(m: &IntMat) -> SnfResult {
    let (r, c) = (m.nrows, m.ncols);
    let rank_bound = r.min(c);
    let mut a = m.clone();
    let mut u = IntMat::identity(r);
    let mut w = IntMat::identity(c);

    // Diagonalize from position t, preserving everything before t.
    fn diagonalize_from(a: &mut IntMat, u: &mut IntMat, w: &mut IntMat, t0: usize) {
        let (r, c) = (a.nrows, a.ncols);
        for t in t0..r.min(c) {
            loop {
                // Smallest nonzero entry of the working submatrix as pivot.
                let mut best: Option<(usize, usize)> = None;
                for i in t..r {
                    for j in t..c {
                        if !a[(i, j)].is_zero()
                            && best.map_or(true, |(bi, bj)| a[(i, j)].abs() < a[(bi, bj)].abs())
                        {
                            best = Some((i, j));
                        }
                    }
                }
                let Some((bi, bj)) = best else { return };
                a.swap_rows(t, bi);
                u.swap_rows(t, bi);
                a.swap_cols(t, bj);
                w.swap_cols(t, bj);
                let mut clean = true;
                for i in t + 1..r {
                    if a[(i, t)].is_zero() {
                        continue;
                    }
                    let q = &a[(i, t)] / &a[(t, t)];
                    a.row_axpy(i, t, &q);
                    u.row_axpy(i, t, &q);
                    if !a[(i, t)].is_zero() {
                        clean = false;
                    }
                }
                for j in t + 1..c {
                    if a[(t, j)].is_zero() {
                        continue;
                    }
                    let q = &a[(t, j)] / &a[(t, t)];
                    a.col_axpy(j, t, &q);
                    w.col_axpy(j, t, &q);
                    if !a[(t, j)].is_zero() {
                        clean = false;
                    }
                }
                if clean {
                    break;
                }
            }
            if a[(t, t)].is_negative() {
                a.negate_row(t);
                u.negate_row(t);
            }
        }
    }

    diagonalize_from(&mut a, &mut u, &mut w, 0);

    // Enforce the divisibility chain: a violation at i is repaired by
    // folding column i+1 into column i and re-diagonalizing from i, which
    // replaces d_i by gcd(d_i, d_{i+1}).
    loop {
        let mut violation = None;
        for i in 0..rank_bound.saturating_sub(1) {
            let di = a[(i, i)].clone();
            let dj = a[(i + 1, i + 1)].clone();
            if di.is_zero() && !dj.is_zero() {
                violation = Some(i);
                break;
            }
            if !di.is_zero() && !(&dj % &di).is_zero() {
                violation = Some(i);
                break;
            }
        }
        let Some(i) = violation else { break };
        let one = BigInt::one();
        // col i += col i+1  (axpy subtracts, so subtract -1 times)
        let minus_one = -&one;
        a.col_axpy(i, i + 1, &minus_one);
        w.col_axpy(i, i + 1, &minus_one);
        diagonalize_from(&mut a, &mut u, &mut w, i);
    }

    let divisors: Vec<BigInt> = (0..rank_bound).map(|t| a[(t, t)].clone()).collect();

    // The factorization is cheap to verify and everything downstream
    // depends on it, so verify unconditionally.
    let prod = u.mul(m).mul(&w);
    for i in 0..r {
        for j in 0..c {
            let expect = if i == j && i < rank_bound {
                divisors[i].clone()
            } else {
                BigInt::zero()
            };
            assert!(
                prod[(i, j)] == expect,
                "Smith factorization failed verification at ({}, {})",
                i,
                j
            );
        }
    }
    SnfResult {
        divisors,
        left: u,
        right: w,
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::GeoRatFun;
    use num_rational::BigRational;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn counts_of_small_enumerations() {
        // index-3 sublattices of ℤ²: p + 1 = 4
        assert_eq!(hnf_count(2, 3, 1), 4);
        assert_eq!(enumerate_hnf(2, 3, 1).count(), 4);
        // rank 1: single lattice diag(p^k)
        assert_eq!(hnf_count(1, 7, 5), 1);
        let only: Vec<_> = enumerate_hnf(1, 7, 5).collect();
        assert_eq!(only, vec![LatticeHnf::diagonal(&[16807])]);
        // index-4 sublattices of ℤ³: 1+p+2p²+p³+p⁴ at p=2 is 35
        assert_eq!(hnf_count(3, 2, 2), 35);
        assert_eq!(enumerate_hnf(3, 2, 2).count(), 35);
    }

    #[test]
    fn maximal_counts_and_types() {
        // ℤ², p=3, k=2: type (p²,1) only — (p+1)p^{s-1} = 12 of them
        // (13 index-9 lattices in all, minus the single type-(p,p) one, 3ℤ²).
        assert_eq!(maximal_hnf_count(2, 3, 2), 12);
        assert_eq!(enumerate_maximal_hnf(2, 3, 2).count(), 12);
        for l in enumerate_maximal_hnf(2, 3, 2) {
            let snf = smith(&l.to_mat());
            assert_eq!(snf.divisors, vec![BigInt::one(), BigInt::from(9)]);
        }
        // ℤ³, p=2, k=1: all 7 index-2 sublattices are maximal
        assert_eq!(maximal_hnf_count(3, 2, 1), 7);
        assert_eq!(enumerate_maximal_hnf(3, 2, 1).count(), 7);
        // ℤ³, p=2, k=3: types (8,1,1) and (4,2,1) occur; (2,2,2) does not
        let mut seen_types = std::collections::BTreeSet::new();
        for l in enumerate_maximal_hnf(3, 2, 3) {
            let snf = smith(&l.to_mat());
            let mut t: Vec<u32> = snf
                .divisor_valuations(2)
                .into_iter()
                .map(|v| v.unwrap())
                .collect();
            t.sort_unstable_by(|a, b| b.cmp(a));
            seen_types.insert(t);
        }
        let expected: std::collections::BTreeSet<Vec<u32>> =
            [vec![3, 0, 0], vec![2, 1, 0]].into_iter().collect();
        assert_eq!(seen_types, expected);
    }

    #[test]
    fn count_identity_against_rational_series() {
        // Σ_k count(n,p,k) T^k = ∏_{i=0}^{n-1} 1/(1 - p^i T)
        for n in 1..=4usize {
            for &p in &[2i64, 3] {
                let mut f = GeoRatFun::one();
                for i in 0..n {
                    f = f.mul(&GeoRatFun::inv_geom(i as i64, 1));
                }
                let series = f
                    .series_at_x(&BigRational::from(BigInt::from(p)), 5)
                    .unwrap();
                for k in 0..=5u32 {
                    let count = BigRational::from(BigInt::from(hnf_count(n, p, k) as i64));
                    assert_eq!(series[k as usize], count, "n={} p={} k={}", n, p, k);
                }
            }
        }
    }

    #[test]
    fn chunked_scan_matches_iterator_order() {
        let all: Vec<_> = enumerate_hnf(3, 2, 3).collect();
        let mut chunked = Vec::new();
        for chunk in hnf_chunk_plan(3, 2, 3, 7) {
            scan_hnf_chunk(3, 2, &chunk, |l| chunked.push(l.clone()));
        }
        assert_eq!(all, chunked);
        // no duplicates
        let set: std::collections::BTreeSet<Vec<i64>> =
            all.iter().map(|l| l.rows.clone()).collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn member_basics() {
        let l = LatticeHnf::diagonal(&[5, 1, 1]);
        assert!(l.member(&[5, 0, 0]));
        assert!(!l.member(&[1, 0, 0]));
        assert!(l.member(&[0, 1, 0]));
        let l2 = LatticeHnf::from_hnf_rows(2, vec![2, 1, 0, 3]);
        assert!(l2.member(&[2, 1]));
        assert!(l2.member(&[0, 3]));
        assert!(l2.member(&[2, 4]));
        assert!(!l2.member(&[1, 0]));
        assert!(!l2.member(&[0, 1]));
    }

    #[test]
    fn member_accepts_integer_row_combinations() {
        let mut rng = StdRng::seed_from_u64(5);
        for l in enumerate_hnf(3, 3, 2) {
            for _ in 0..4 {
                let c: Vec<i64> = (0..3).map(|_| rng.gen_range(-4i64..=4)).collect();
                let mut v = vec![0i64; 3];
                for (i, ci) in c.iter().enumerate() {
                    for j in 0..3 {
                        v[j] += ci * l.entry(i, j);
                    }
                }
                assert!(l.member(&v));
            }
        }
    }

    #[test]
    fn member_agrees_with_rational_solve() {
        // Independent membership oracle: solve c · B = v over ℚ by
        // back-substitution with rational arithmetic, then check integrality.
        let mut rng = StdRng::seed_from_u64(9);
        let rational_member = |l: &LatticeHnf, v: &[i64]| -> bool {
            let n = l.rank();
            let mut c = vec![BigRational::zero(); n];
            for j in 0..n {
                let mut r = BigRational::from(BigInt::from(v[j]));
                for (i, ci) in c.iter().enumerate().take(j) {
                    r -= ci * BigRational::from(BigInt::from(l.entry(i, j)));
                }
                c[j] = r / BigRational::from(BigInt::from(l.entry(j, j)));
            }
            c.iter().all(|x| x.is_integer())
        };
        for l in enumerate_hnf(3, 2, 3) {
            for _ in 0..3 {
                let v: Vec<i64> = (0..3).map(|_| rng.gen_range(-10i64..=10)).collect();
                assert_eq!(l.member(&v), rational_member(&l, &v));
            }
        }
    }

    #[test]
    fn member_suffix_matches_trailing_block() {
        let mut rng = StdRng::seed_from_u64(13);
        for l in enumerate_hnf(4, 2, 2) {
            let tail = l.trailing_block(2);
            for _ in 0..4 {
                let v: Vec<i64> = (0..2).map(|_| rng.gen_range(-6i64..=6)).collect();
                assert_eq!(l.member_suffix(2, &v), tail.member(&v));
            }
        }
    }

    /// Random unimodular integer matrix as a product of elementary row ops.
    fn random_unimodular(rng: &mut StdRng, n: usize) -> IntMat {
        let mut u = IntMat::identity(n);
        for _ in 0..12 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let q = BigInt::from(rng.gen_range(-3i64..=3));
            u.row_axpy(a, b, &q);
        }
        u
    }

    #[test]
    fn normalization_is_canonical_under_unimodular_transforms() {
        let mut rng = StdRng::seed_from_u64(21);
        for l in enumerate_hnf(3, 3, 2) {
            let m = l.to_mat();
            for _ in 0..3 {
                let u = random_unimodular(&mut rng, 3);
                assert!(u.det().abs() == BigInt::one());
                let transformed = u.mul(&m);
                let h = hnf_normalize(&transformed).expect("nonsingular");
                assert_eq!(h, m, "renormalization must reproduce the HNF");
            }
        }
    }

    #[test]
    fn hnf_normalize_rejects_singular() {
        let m = IntMat::from_i64_rows(&[vec![1, 2], vec![2, 4]]);
        assert!(hnf_normalize(&m).is_none());
    }

    #[test]
    fn smith_examples() {
        // diag(4,6) → (2,12)
        let s = smith(&IntMat::from_i64_rows(&[vec![4, 0], vec![0, 6]]));
        assert_eq!(
            s.divisors,
            vec![BigInt::from(2), BigInt::from(12)]
        );
        // zero matrix → all divisors 0
        let s = smith(&IntMat::zero(2, 3));
        assert!(s.divisors.iter().all(|d| d.is_zero()));
        assert_eq!(s.divisors.len(), 2);
        // a type-(p^s, 1) lattice basis has ascending divisors (1, p^s)
        let s = smith(&IntMat::from_i64_rows(&[vec![9, 5], vec![0, 1]]));
        assert_eq!(s.divisors, vec![BigInt::one(), BigInt::from(9)]);
    }

    #[test]
    fn smith_random_roundtrip() {
        let mut rng = StdRng::seed_from_u64(33);
        for _ in 0..60 {
            let r = rng.gen_range(1..=4);
            let c = rng.gen_range(1..=4);
            let m = IntMat::from_fn(r, c, |_, _| BigInt::from(rng.gen_range(-9i64..=9)));
            let s = smith(&m); // smith() verifies left·M·right internally
            assert!(s.left.det().abs() == BigInt::one(), "left not unimodular");
            assert!(s.right.det().abs() == BigInt::one(), "right not unimodular");
            for w in s.divisors.windows(2) {
                assert!(!w[0].is_negative());
                if w[0].is_zero() {
                    assert!(w[1].is_zero(), "zeros must close the chain");
                } else {
                    assert!((&w[1] % &w[0]).is_zero(), "chain violated");
                }
            }
        }
    }

    #[test]
    fn leading_and_trailing_blocks() {
        let l = LatticeHnf::from_hnf_rows(
            3,
            vec![
                2, 1, 1, //
                0, 3, 2, //
                0, 0, 4,
            ],
        );
        assert_eq!(l.leading_block(2), LatticeHnf::from_hnf_rows(2, vec![2, 1, 0, 3]));
        assert_eq!(l.trailing_block(1), LatticeHnf::from_hnf_rows(2, vec![3, 2, 0, 4]));
        assert_eq!(l.index(), 24);
        assert_eq!(LatticeHnf::diagonal(&[8, 2, 1]).index_log(2), 4);
    }
}
