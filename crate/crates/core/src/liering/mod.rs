//! Class-2 nilpotent Lie-ring presentations.
//!
//! A presentation has generators x₁..x_d, y₁..y_{d′} with all brackets of
//! the y's central and (x_i, x_j) = M(y)_{ij}, an antisymmetric d×d matrix
//! of ℤ-linear forms in the y's.  Coordinates are fixed throughout the
//! workspace as (x-block, then y-block).
//!
//! Besides generic matrices, this module builds the classified block forms
//! (odd blocks of size 2r+1, even companion-style blocks of size 2r with a
//! prescribed binary-form determinant), direct sums, and the hyperbolic
//! doubling of a 3-variable square matrix R.  It evaluates brackets, tests
//! fullness and ideality, and counts ideals of p-power index by brute
//! force — the oracle the other two computation paths are checked against.

pub mod input;

use crate::exec::{self, ExecMode};
use crate::intlat::{self, LatticeHnf};
use crate::modcurves::{self, CurveSpec};
use crate::sympoly::{det_poly, MultiPoly};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

/// Maximum supported derived rank for the fast bracket buffers.
const MAX_DPRIME: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LieError {
    /// The requested even block's determinant does not match the prescribed
    /// binary form (or the coefficient list is not a primary power).
    #[error("bad coefficients: {0}")]
    BadCoefficients(String),
    /// Direct summands must agree on the derived rank d′.
    #[error("direct summands have mixed derived ranks")]
    MixedDerivedRank,
    /// A direct sum needs at least one summand.
    #[error("direct sum of an empty list")]
    EmptyDirectSum,
    /// The enumeration the oracle would perform exceeds the budget.
    #[error("enumeration of {needed} lattices exceeds budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
}

/// A ℤ-linear form in the y-variables: coefficient k belongs to y_{k+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub coeffs: Vec<i64>,
}

impl LinearForm {
    pub fn zero(dprime: usize) -> Self {
        LinearForm {
            coeffs: vec![0; dprime],
        }
    }

    pub fn variable(dprime: usize, k: usize, scale: i64) -> Self {
        let mut f = LinearForm::zero(dprime);
        f.coeffs[k] = scale;
        f
    }

    pub fn neg(&self) -> Self {
        LinearForm {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn eval_bigint(&self, y: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for (c, yk) in self.coeffs.iter().zip(y) {
            if *c != 0 {
                acc += BigInt::from(*c) * yk;
            }
        }
        acc
    }

    pub fn to_multipoly(&self) -> MultiPoly {
        MultiPoly::linear(&self.coeffs)
    }
}

/// A square matrix of linear forms.  `antisymmetric` records whether the
/// matrix is constrained (and verified) to satisfy Mᵗ = −M; the plain
/// variant carries the R of a curve presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormMatrix {
    pub d: usize,
    pub dprime: usize,
    pub antisymmetric: bool,
    entries: Vec<LinearForm>,
}

impl LinearFormMatrix {
    pub fn zero(d: usize, dprime: usize, antisymmetric: bool) -> Self {
        LinearFormMatrix {
            d,
            dprime,
            antisymmetric,
            entries: vec![LinearForm::zero(dprime); d * d],
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, form: LinearForm) {
        assert_eq!(form.coeffs.len(), self.dprime);
        self.entries[i * self.d + j] = form;
    }

    /// Set entry (i, j) and its antisymmetric mirror (j, i).
    pub fn set_antisym(&mut self, i: usize, j: usize, form: LinearForm) {
        assert!(self.antisymmetric && i != j);
        self.set(j, i, form.neg());
        self.set(i, j, form);
    }

    pub fn check_antisymmetric(&self) -> bool {
        for i in 0..self.d {
            for j in 0..self.d {
                let a = self.entry(i, j);
                let b = self.entry(j, i).neg();
                if *a != b {
                    return false;
                }
            }
        }
        true
    }

    /// Evaluate at an integer point of the y-space, as a big-integer matrix.
    pub fn eval_bigint(&self, y: &[BigInt]) -> crate::intlat::IntMat {
        crate::intlat::IntMat::from_fn(self.d, self.d, |i, j| self.entry(i, j).eval_bigint(y))
    }

    pub fn to_multipoly(&self) -> Vec<Vec<MultiPoly>> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.entry(i, j).to_multipoly()).collect())
            .collect()
    }
}

/// How a presentation was constructed, when known.  Block provenance is the
/// concatenated list of classified blocks; curve provenance keeps the R
/// matrix for point counts and smoothness screens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Blocks(Vec<BlockSpec>),
    Curve { rmat: LinearFormMatrix },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockSpec {
    Odd { r: u32 },
    /// Coefficients a₁..a_r of the binary form
    /// g = y₁^r + a₁ y₁^{r-1} y₂ + … + a_r y₂^r.
    Even { coeffs: Vec<i64> },
}

/// Bracket tables: C[j] is the d×d′ matrix with row i holding the
/// y-coefficients of M(y)_{ij}, so bracketing u with the j-th generator is
/// the row-vector product u·C[j].
#[derive(Debug, Clone)]
pub struct StructureConstants {
    d: usize,
    dprime: usize,
    /// flat layout: c[(j*d + i)*dprime + k]
    c: Vec<i64>,
}

impl StructureConstants {
    fn from_matrix(m: &LinearFormMatrix) -> Self {
        let (d, dp) = (m.d, m.dprime);
        let mut c = vec![0i64; d * d * dp];
        for j in 0..d {
            for i in 0..d {
                for k in 0..dp {
                    c[(j * d + i) * dp + k] = m.entry(i, j).coeffs[k];
                }
            }
        }
        StructureConstants { d, dprime: dp, c }
    }

    /// w = bracket(u, e_j), written into `out[..dprime]`.
    #[inline]
    pub fn bracket_with_generator(&self, u: &[i64], j: usize, out: &mut [i64]) {
        let dp = self.dprime;
        out[..dp].fill(0);
        let base = j * self.d;
        for (i, &ui) in u.iter().enumerate().take(self.d) {
            if ui == 0 {
                continue;
            }
            let row = &self.c[(base + i) * dp..(base + i) * dp + dp];
            for k in 0..dp {
                out[k] += ui * row[k];
            }
        }
    }
}

/// A class-2 presentation.  Construction precomputes the bracket tables.
#[derive(Debug, Clone)]
pub struct Presentation {
    pub d: usize,
    pub dprime: usize,
    pub m: LinearFormMatrix,
    pub provenance: Option<Provenance>,
    sc: StructureConstants,
}

impl Presentation {
    pub fn new(m: LinearFormMatrix, provenance: Option<Provenance>) -> Self {
        assert!(m.antisymmetric && m.check_antisymmetric(), "M must be antisymmetric");
        assert!(m.dprime >= 1 && m.dprime <= MAX_DPRIME);
        let sc = StructureConstants::from_matrix(&m);
        Presentation {
            d: m.d,
            dprime: m.dprime,
            m,
            provenance,
            sc,
        }
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.sc
    }

    /// Total rank of the ring (Hirsch length at the lattice level).
    pub fn rank(&self) -> usize {
        self.d + self.dprime
    }

    /// The bracket of two vectors of the abelianization, in y-coordinates.
    pub fn bracket(&self, u: &[i64], v: &[i64]) -> Vec<i64> {
        assert!(u.len() == self.d && v.len() == self.d);
        let mut out = vec![0i64; self.dprime];
        let mut tmp = [0i64; MAX_DPRIME];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0 {
                continue;
            }
            self.sc.bracket_with_generator(u, j, &mut tmp);
            for k in 0..self.dprime {
                out[k] += vj * tmp[k];
            }
        }
        out
    }

    /// True iff the bracket image spans a finite-index subgroup of ℤ^{d′}
    /// (rank over ℚ equals d′).
    pub fn is_full(&self) -> bool {
        let mut rows: Vec<Vec<i64>> = Vec::new();
        for i in 0..self.d {
            for j in i + 1..self.d {
                let f = self.m.entry(i, j);
                if !f.is_zero() {
                    rows.push(f.coeffs.clone());
                }
            }
        }
        if rows.is_empty() {
            return self.dprime == 0;
        }
        let mat = crate::intlat::IntMat::from_i64_rows(&rows);
        let snf = intlat::smith(&mat);
        let rank = snf.divisors.iter().filter(|d| !d.is_zero()).count();
        rank == self.dprime
    }

    /// True iff x ↦ [x, ·] is injective on the generator block: the
    /// d × d·d′ matrix of structure constants has row rank d over ℚ.
    /// This is what makes the homothety folding of the class walk valid;
    /// it does not require the bracket image to span the whole centre.
    pub fn adjoint_injective(&self) -> bool {
        let (d, dp) = (self.d, self.dprime);
        let mut rows: Vec<Vec<i64>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut row = Vec::with_capacity(d * dp);
            for j in 0..d {
                for k in 0..dp {
                    row.push(self.sc.c[(j * d + i) * dp + k]);
                }
            }
            rows.push(row);
        }
        let mat = crate::intlat::IntMat::from_i64_rows(&rows);
        let snf = intlat::smith(&mat);
        let rank = snf.divisors.iter().filter(|d| !d.is_zero()).count();
        rank == d
    }

    /// For curve presentations, the plane-curve data det R.
    pub fn curve_spec(&self) -> Option<CurveSpec> {
        match &self.provenance {
            Some(Provenance::Curve { rmat }) => {
                Some(CurveSpec::new(rmat.d, det_poly(&rmat.to_multipoly())))
            }
            _ => None,
        }
    }

    /// Ideal test: [ℒ, Λ] ⊆ Λ, checked on generators against basis rows.
    /// Brackets of basis rows with each x-generator are supported on the
    /// y-block, where membership reduces to the trailing d′×d′ triangle.
    pub fn is_ideal(&self, l: &LatticeHnf) -> bool {
        let (d, dp) = (self.d, self.dprime);
        let n = d + dp;
        debug_assert_eq!(l.rank(), n);
        let mut w = [0i64; MAX_DPRIME];
        let mut c = [0i64; MAX_DPRIME];
        // Rows d..n have zero x-part (triangularity), so their brackets
        // vanish; only the first d rows can obstruct.
        for ri in 0..d {
            let row = &l.row(ri)[..d];
            for j in 0..d {
                self.sc.bracket_with_generator(row, j, &mut w);
                if w[..dp].iter().all(|&x| x == 0) {
                    continue;
                }
                // membership of w in the trailing block by back-substitution
                let mut ok = true;
                for jj in 0..dp {
                    let mut r = w[jj];
                    for (ii, cii) in c.iter().enumerate().take(jj) {
                        r -= cii * l.entry(d + ii, d + jj);
                    }
                    let diag = l.entry(d + jj, d + jj);
                    if r % diag != 0 {
                        ok = false;
                        break;
                    }
                    c[jj] = r / diag;
                }
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Brute-force ideal counts a_{p^0}..a_{p^kmax} by filtering the full
    /// HNF enumeration of rank d+d′ through `is_ideal`.
    pub fn oracle_count(
        &self,
        p: i64,
        kmax: u32,
        budget: u128,
        mode: ExecMode,
    ) -> Result<Vec<BigInt>, LieError> {
        let n = self.rank();
        let needed: u128 = (0..=kmax).map(|k| intlat::hnf_count(n, p, k)).sum();
        if needed > budget {
            return Err(LieError::BudgetExceeded { needed, budget });
        }
        let mut out = Vec::with_capacity(kmax as usize + 1);
        for k in 0..=kmax {
            let chunks = intlat::hnf_chunk_plan(n, p, k, 1 << 16);
            let count = exec::fold_chunks(
                mode,
                chunks,
                || 0u64,
                |chunk| {
                    let mut c = 0u64;
                    intlat::scan_hnf_chunk(n, p, &chunk, |l| {
                        if self.is_ideal(l) {
                            c += 1;
                        }
                    });
                    c
                },
                |a, b| a + b,
            );
            out.push(BigInt::from(count));
        }
        Ok(out)
    }

    /// True iff every bracket of a basis row of `lab` with a generator lies
    /// in `lcen` — the admissibility condition of the pair decomposition.
    pub fn is_admissible_pair(&self, lab: &LatticeHnf, lcen: &LatticeHnf) -> bool {
        let (d, dp) = (self.d, self.dprime);
        debug_assert!(lab.rank() == d && lcen.rank() == dp);
        let mut w = [0i64; MAX_DPRIME];
        for ri in 0..d {
            let row = lab.row(ri);
            for j in 0..d {
                self.sc.bracket_with_generator(row, j, &mut w);
                if !lcen.member(&w[..dp]) {
                    return false;
                }
            }
        }
        true
    }

    /// Ideal counts through the pair decomposition: an ideal of index p^k
    /// projects to Λ_ab (index p^a) and meets the center in Λ′ (index p^b),
    /// a+b = k; conversely every admissible pair arises from exactly
    /// p^{b·d} ideals (the free reduced choices of the top-right block).
    /// Independent of the weight and closed-form paths.
    pub fn oracle_count_paired(
        &self,
        p: i64,
        kmax: u32,
        budget: u128,
        mode: ExecMode,
    ) -> Result<Vec<BigInt>, LieError> {
        let (d, dp) = (self.d, self.dprime);
        let mut needed: u128 = 0;
        for k in 0..=kmax {
            for a in 0..=k {
                needed +=
                    intlat::hnf_count(d, p, a).saturating_mul(intlat::hnf_count(dp, p, k - a));
            }
        }
        if needed > budget {
            return Err(LieError::BudgetExceeded { needed, budget });
        }
        let mut out = vec![BigInt::zero(); kmax as usize + 1];
        for k in 0..=kmax {
            let mut total = BigInt::zero();
            for a in 0..=k {
                let b = k - a;
                let centers: Vec<LatticeHnf> = intlat::enumerate_hnf(dp, p, b).collect();
                let mult = BigInt::from(p).pow(b * d as u32);
                let chunks = intlat::hnf_chunk_plan(d, p, a, 1 << 14);
                let admissible = exec::fold_chunks(
                    mode,
                    chunks,
                    || 0u64,
                    |chunk| {
                        let mut c = 0u64;
                        intlat::scan_hnf_chunk(d, p, &chunk, |lab| {
                            for lcen in &centers {
                                if self.is_admissible_pair(lab, lcen) {
                                    c += 1;
                                }
                            }
                        });
                        c
                    },
                    |x, y| x + y,
                );
                total += BigInt::from(admissible) * &mult;
            }
            out[k as usize] = total;
        }
        Ok(out)
    }

    /// Conservative superset of the primes excluded by the closed-form
    /// layer.  Complete for block provenance ({2} ∪ primes dividing a
    /// squarefree-part discriminant or a pairwise resultant).  For curve
    /// provenance the smoothness screen is a scan: {2} ∪ {p ≤ r} ∪ primes
    /// up to `scan_bound` where the reduction is singular.  `None` when the
    /// provenance does not determine the set (raw matrices).
    pub fn bad_primes(&self, scan_bound: u64) -> Option<BTreeSet<u64>> {
        match &self.provenance {
            Some(Provenance::Blocks(blocks)) => {
                let mut bad: BTreeSet<u64> = BTreeSet::new();
                bad.insert(2);
                let mut parts: Vec<Vec<i64>> = Vec::new();
                for b in blocks {
                    if let BlockSpec::Even { coeffs } = b {
                        let g = even_block_poly(coeffs);
                        let sf = squarefree_part(&g);
                        if !parts.contains(&sf) {
                            parts.push(sf);
                        }
                    }
                }
                for f in &parts {
                    for q in prime_divisors(&modcurves::discriminant(f)) {
                        bad.insert(q);
                    }
                }
                for (i, f) in parts.iter().enumerate() {
                    for g in parts.iter().skip(i + 1) {
                        for q in prime_divisors(&modcurves::resultant(f, g)) {
                            bad.insert(q);
                        }
                    }
                }
                Some(bad)
            }
            Some(Provenance::Curve { rmat }) => {
                let mut bad: BTreeSet<u64> = BTreeSet::new();
                bad.insert(2);
                for q in primes_up_to(rmat.d as u64) {
                    bad.insert(q);
                }
                let cs = self.curve_spec().expect("curve provenance");
                for q in primes_up_to(scan_bound) {
                    if !bad.contains(&q) && !modcurves::is_smooth_mod_p(&cs, q) {
                        bad.insert(q);
                    }
                }
                Some(bad)
            }
            None => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Block constructors
// ---------------------------------------------------------------------------

/// The odd block of size d = 2r+1: hyperbolic around the (r+1)×r
/// two-diagonal matrix B with y₂ on the diagonal and y₁ below it.
pub fn block_odd(r: u32) -> Presentation {
    assert!(r >= 1);
    let r = r as usize;
    let d = 2 * r + 1;
    let mut m = LinearFormMatrix::zero(d, 2, true);
    // B[i][j] occupies M[i][(r+1)+j] for i in 0..=r, j in 0..r.
    for j in 0..r {
        m.set_antisym(j, (r + 1) + j, LinearForm::variable(2, 1, 1)); // y₂
        m.set_antisym(j + 1, (r + 1) + j, LinearForm::variable(2, 0, 1)); // y₁
    }
    Presentation::new(m, Some(Provenance::Blocks(vec![BlockSpec::Odd { r: r as u32 }])))
}

/// The binary form g = y₁^r + a₁ y₁^{r-1} y₂ + … + a_r y₂^r as a 2-variable
/// polynomial.
fn even_block_form(coeffs: &[i64]) -> MultiPoly {
    let r = coeffs.len() as u32;
    let mut g = MultiPoly::zero(2);
    let y1 = MultiPoly::var(2, 0);
    let y2 = MultiPoly::var(2, 1);
    let mut term = MultiPoly::constant(2, 1);
    // y₁^r
    for _ in 0..r {
        term = term.mul(&y1);
    }
    g = g.add(&term);
    for (i, &a) in coeffs.iter().enumerate() {
        let mut t = MultiPoly::constant(2, a);
        for _ in 0..(r as usize - (i + 1)) {
            t = t.mul(&y1);
        }
        for _ in 0..=i {
            t = t.mul(&y2);
        }
        g = g.add(&t);
    }
    g
}

/// The same form as a univariate integer polynomial f(t) = g(t, 1), with
/// ascending coefficients.
pub fn even_block_poly(coeffs: &[i64]) -> Vec<i64> {
    let r = coeffs.len();
    let mut f = vec![0i64; r + 1];
    f[r] = 1;
    for (i, &a) in coeffs.iter().enumerate() {
        f[r - (i + 1)] = a;
    }
    f
}

/// The even block of size d = 2r: hyperbolic around the companion-style
/// r×r matrix B whose determinant is asserted symbolically to equal
/// g = y₁^r + a₁ y₁^{r-1} y₂ + … + a_r y₂^r.
pub fn block_even(coeffs: &[i64]) -> Result<Presentation, LieError> {
    let r = coeffs.len();
    if r < 1 {
        return Err(LieError::BadCoefficients(
            "need at least one coefficient".into(),
        ));
    }
    let d = 2 * r;
    // B in 0-indexed rows/cols:
    //   B[0][0] = y₁ + a₁y₂;  B[k][k] = y₁ (k ≥ 1);  B[k][k+1] = y₂;
    //   B[k][0] = (−1)^k a_{k+1} y₂ (k ≥ 1).
    let mut b = vec![vec![LinearForm::zero(2); r]; r];
    b[0][0] = LinearForm {
        coeffs: vec![1, coeffs[0]],
    };
    for k in 1..r {
        b[k][k] = LinearForm::variable(2, 0, 1);
        let sign = if k % 2 == 1 { -1 } else { 1 };
        b[k][0] = LinearForm::variable(2, 1, sign * coeffs[k]);
    }
    for k in 0..r.saturating_sub(1) {
        b[k][k + 1] = LinearForm::variable(2, 1, 1);
    }
    // symbolic determinant check
    let bpoly: Vec<Vec<MultiPoly>> = b
        .iter()
        .map(|row| row.iter().map(|f| f.to_multipoly()).collect())
        .collect();
    let det = det_poly(&bpoly);
    let g = even_block_form(coeffs);
    if det != g {
        return Err(LieError::BadCoefficients(format!(
            "det B does not realize the prescribed form for coefficients {:?}",
            coeffs
        )));
    }
    let mut m = LinearFormMatrix::zero(d, 2, true);
    for i in 0..r {
        for j in 0..r {
            if !b[i][j].is_zero() {
                m.set_antisym(i, r + j, b[i][j].clone());
            }
        }
    }
    Ok(Presentation::new(
        m,
        Some(Provenance::Blocks(vec![BlockSpec::Even {
            coeffs: coeffs.to_vec(),
        }])),
    ))
}

/// Block-diagonal direct sum of presentations sharing d′.
pub fn direct_sum(blocks: &[Presentation]) -> Result<Presentation, LieError> {
    let first = blocks.first().ok_or(LieError::EmptyDirectSum)?;
    let dprime = first.dprime;
    if blocks.iter().any(|b| b.dprime != dprime) {
        return Err(LieError::MixedDerivedRank);
    }
    let d: usize = blocks.iter().map(|b| b.d).sum();
    let mut m = LinearFormMatrix::zero(d, dprime, true);
    let mut offset = 0;
    for b in blocks {
        for i in 0..b.d {
            for j in 0..b.d {
                m.set(offset + i, offset + j, b.m.entry(i, j).clone());
            }
        }
        offset += b.d;
    }
    let mut specs = Vec::new();
    let mut all_blocks = true;
    for b in blocks {
        match &b.provenance {
            Some(Provenance::Blocks(s)) => specs.extend(s.iter().cloned()),
            _ => {
                all_blocks = false;
                break;
            }
        }
    }
    let provenance = if all_blocks {
        Some(Provenance::Blocks(specs))
    } else {
        None
    };
    Ok(Presentation::new(m, provenance))
}

/// Hyperbolic doubling of an r×r matrix R of forms in three variables:
/// M = [[0, R], [−Rᵗ, 0]], d = 2r, d′ = 3.
pub fn from_r(rmat: LinearFormMatrix) -> Presentation {
    assert!(rmat.d >= 2, "curve presentations need r ≥ 2");
    assert_eq!(rmat.dprime, 3, "curve presentations live in three variables");
    let r = rmat.d;
    let d = 2 * r;
    let mut m = LinearFormMatrix::zero(d, 3, true);
    for i in 0..r {
        for j in 0..r {
            let f = rmat.entry(i, j);
            if !f.is_zero() {
                m.set_antisym(i, r + j, f.clone());
            }
        }
    }
    Presentation::new(m, Some(Provenance::Curve { rmat }))
}

// ---------------------------------------------------------------------------
// Univariate helpers over ℚ (squarefree parts, primary decomposition)
// ---------------------------------------------------------------------------

type QPoly = Vec<num_rational::BigRational>;

fn qpoly_from_int(f: &[i64]) -> QPoly {
    f.iter()
        .map(|&c| num_rational::BigRational::from(BigInt::from(c)))
        .collect()
}

fn qpoly_trim(f: &mut QPoly) {
    while f.last().map_or(false, |c| c.is_zero()) {
        f.pop();
    }
}

fn qpoly_rem(mut a: QPoly, b: &QPoly) -> QPoly {
    qpoly_trim(&mut a);
    let db = b.len() - 1;
    let lb = b.last().unwrap().clone();
    while a.len() >= b.len() && !a.is_empty() {
        let da = a.len() - 1;
        let q = a.last().unwrap() / &lb;
        for i in 0..=db {
            let t = &q * &b[i];
            a[da - db + i] -= t;
        }
        qpoly_trim(&mut a);
        if a.len() > da {
            break; // defensive: no progress
        }
    }
    a
}

fn qpoly_gcd(mut a: QPoly, mut b: QPoly) -> QPoly {
    qpoly_trim(&mut a);
    qpoly_trim(&mut b);
    while !b.is_empty() {
        let r = qpoly_rem(a, &b);
        a = b;
        b = r;
    }
    a
}

fn qpoly_div_exact(a: &QPoly, b: &QPoly) -> Option<QPoly> {
    let mut a = a.clone();
    qpoly_trim(&mut a);
    if a.is_empty() {
        return Some(Vec::new());
    }
    if b.len() > a.len() {
        return None;
    }
    let db = b.len() - 1;
    let lb = b.last().unwrap().clone();
    let mut q = vec![num_rational::BigRational::zero(); a.len() - db];
    while a.len() >= b.len() && !a.is_empty() {
        let da = a.len() - 1;
        let qc = a.last().unwrap() / &lb;
        q[da - db] = qc.clone();
        for i in 0..=db {
            let t = &qc * &b[i];
            a[da - db + i] -= t;
        }
        qpoly_trim(&mut a);
    }
    if a.is_empty() {
        Some(q)
    } else {
        None
    }
}

/// Clear denominators and content; make the leading coefficient positive.
fn qpoly_to_primitive(f: &QPoly) -> Vec<i64> {
    use num_integer::Integer;
    let mut lcm = BigInt::one();
    for c in f {
        lcm = lcm.lcm(c.denom());
    }
    let ints: Vec<BigInt> = f.iter().map(|c| c.numer() * &lcm / c.denom()).collect();
    let mut content = BigInt::zero();
    for c in &ints {
        content = content.gcd(c);
    }
    if content.is_zero() {
        return vec![];
    }
    let mut out: Vec<BigInt> = ints.iter().map(|c| c / &content).collect();
    if out.last().map_or(false, |c| c < &BigInt::zero()) {
        for c in &mut out {
            *c = -c.clone();
        }
    }
    out.iter()
        .map(|c| i64::try_from(c).expect("primitive coefficients fit i64"))
        .collect()
}

/// The squarefree part f / gcd(f, f′) as a primitive integer polynomial
/// with positive leading coefficient.
pub fn squarefree_part(f: &[i64]) -> Vec<i64> {
    let fq = qpoly_from_int(f);
    let deriv: Vec<i64> = (1..f.len()).map(|i| f[i] * i as i64).collect();
    let dq = qpoly_from_int(&deriv);
    let g = qpoly_gcd(fq.clone(), dq);
    if g.len() <= 1 {
        let mut fq = fq;
        qpoly_trim(&mut fq);
        return qpoly_to_primitive(&fq);
    }
    let sf = qpoly_div_exact(&fq, &g).expect("gcd divides");
    qpoly_to_primitive(&sf)
}

/// Recover (f, e) from a monic primary polynomial g = f^e (f monic,
/// squarefree).  Returns `None` if g is not such a power; irreducibility of
/// f is the caller's responsibility and is not verified.
pub fn primary_decompose(g: &[i64]) -> Option<(Vec<i64>, u32)> {
    let dg = g.iter().rposition(|&c| c != 0)?;
    if g[dg] != 1 {
        return None;
    }
    let f = squarefree_part(g);
    let df = f.len() - 1;
    if df == 0 || dg % df != 0 {
        return None;
    }
    if *f.last().unwrap() != 1 {
        return None;
    }
    let e = (dg / df) as u32;
    // verify f^e == g exactly
    let mut power = vec![BigInt::one()];
    for _ in 0..e {
        let mut next = vec![BigInt::zero(); power.len() + df];
        for (i, a) in power.iter().enumerate() {
            for (j, &b) in f.iter().enumerate() {
                next[i + j] += a * BigInt::from(b);
            }
        }
        power = next;
    }
    if power.len() != dg + 1 {
        return None;
    }
    for (c, &gc) in power.iter().zip(g.iter()) {
        if *c != BigInt::from(gc) {
            return None;
        }
    }
    Some((f, e))
}

/// Prime divisors of a nonzero integer by trial division.
fn prime_divisors(n: &BigInt) -> BTreeSet<u64> {
    use num_traits::Signed;
    let mut out = BTreeSet::new();
    let mut n = n.abs();
    assert!(!n.is_zero(), "prime divisors of zero are everything");
    let mut d = 2u64;
    loop {
        let bd = BigInt::from(d);
        if &bd * &bd > n {
            break;
        }
        while (&n % &bd).is_zero() {
            out.insert(d);
            n /= &bd;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > BigInt::one() {
        out.insert(u64::try_from(&n).expect("leftover prime factor fits u64"));
    }
    out
}

/// All primes up to and including `bound`.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return vec![];
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (2..=n as u64).filter(|&q| sieve[q as usize]).collect()
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn y(k: usize) -> LinearForm {
        LinearForm::variable(2, k, 1)
    }

    #[test]
    fn odd_block_shapes() {
        let p1 = block_odd(1);
        assert_eq!((p1.d, p1.dprime), (3, 2));
        assert_eq!(*p1.m.entry(0, 2), y(1)); // y₂
        assert_eq!(*p1.m.entry(1, 2), y(0)); // y₁
        assert_eq!(*p1.m.entry(0, 1), LinearForm::zero(2));
        let p2 = block_odd(2);
        assert_eq!((p2.d, p2.dprime), (5, 2));
        for r in 1..=4u32 {
            assert!(block_odd(r).m.check_antisymmetric());
            assert!(block_odd(r).is_full());
        }
    }

    #[test]
    fn even_block_shapes_and_determinant() {
        // r = 1, a₁ = 0: B = (y₁), Heisenberg with an extra central direction
        let p = block_even(&[0]).unwrap();
        assert_eq!((p.d, p.dprime), (2, 2));
        assert_eq!(*p.m.entry(0, 1), y(0));
        // r = 2: first column of B is (y₁ + a₁y₂, −a₂y₂)ᵗ
        let p = block_even(&[3, 5]).unwrap();
        assert_eq!(
            *p.m.entry(0, 2),
            LinearForm {
                coeffs: vec![1, 3]
            }
        );
        assert_eq!(*p.m.entry(1, 2), LinearForm::variable(2, 1, -5));
        assert_eq!(*p.m.entry(0, 3), y(1));
        // symbolic determinant identity for random r = 3 coefficients
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let a: Vec<i64> = (0..3).map(|_| rng.gen_range(-9i64..=9)).collect();
            let p = block_even(&a).expect("det B must equal g");
            assert!(p.m.check_antisymmetric());
            assert!(p.is_full());
        }
    }

    #[test]
    fn direct_sums() {
        let s = direct_sum(&[block_odd(1), block_odd(1)]).unwrap();
        assert_eq!((s.d, s.dprime), (6, 2));
        match &s.provenance {
            Some(Provenance::Blocks(b)) => assert_eq!(b.len(), 2),
            _ => panic!("expected block provenance"),
        }
        assert!(s.m.check_antisymmetric());
        // mixing derived ranks fails
        let conic = conic_presentation();
        assert_eq!(
            direct_sum(&[block_odd(1), conic]).unwrap_err(),
            LieError::MixedDerivedRank
        );
        assert_eq!(direct_sum(&[]).unwrap_err(), LieError::EmptyDirectSum);
    }

    fn conic_presentation() -> Presentation {
        let mut r = LinearFormMatrix::zero(2, 3, false);
        r.set(0, 0, LinearForm::variable(3, 0, 1));
        r.set(0, 1, LinearForm::variable(3, 1, 1));
        r.set(1, 0, LinearForm::variable(3, 1, 1));
        r.set(1, 1, LinearForm::variable(3, 2, 1));
        from_r(r)
    }

    #[test]
    fn curve_presentation_basics() {
        let p = conic_presentation();
        assert_eq!((p.d, p.dprime), (4, 3));
        assert!(p.m.check_antisymmetric());
        assert!(p.is_full());
        let cs = p.curve_spec().unwrap();
        // det R = y₁y₃ − y₂²
        let yv = |i| MultiPoly::var(3, i);
        assert_eq!(cs.det, yv(0).mul(&yv(2)).sub(&yv(1).mul(&yv(1))));
    }

    #[test]
    fn bracket_properties() {
        let mut rng = StdRng::seed_from_u64(11);
        for p in [block_odd(1), block_odd(2), block_even(&[1, -2]).unwrap()] {
            let d = p.d;
            for i in 0..d {
                for j in 0..d {
                    let mut ei = vec![0i64; d];
                    ei[i] = 1;
                    let mut ej = vec![0i64; d];
                    ej[j] = 1;
                    assert_eq!(p.bracket(&ei, &ej), p.m.entry(i, j).coeffs);
                }
            }
            for _ in 0..10 {
                let u: Vec<i64> = (0..d).map(|_| rng.gen_range(-5i64..=5)).collect();
                let v: Vec<i64> = (0..d).map(|_| rng.gen_range(-5i64..=5)).collect();
                let w: Vec<i64> = (0..d).map(|_| rng.gen_range(-5i64..=5)).collect();
                // alternating
                assert!(p.bracket(&u, &u).iter().all(|&x| x == 0));
                // antisymmetric
                let uv = p.bracket(&u, &v);
                let vu = p.bracket(&v, &u);
                assert!(uv.iter().zip(&vu).all(|(a, b)| *a == -*b));
                // bilinear in the first slot
                let uw: Vec<i64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
                let lhs = p.bracket(&uw, &v);
                let wv = p.bracket(&w, &v);
                assert!(lhs
                    .iter()
                    .zip(uv.iter().zip(&wv))
                    .all(|(l, (a, b))| *l == a + b));
            }
        }
    }

    #[test]
    fn fullness() {
        assert!(block_odd(1).is_full());
        let zero = Presentation::new(LinearFormMatrix::zero(2, 2, true), None);
        assert!(!zero.is_full());
        assert!(conic_presentation().is_full());
    }

    #[test]
    fn ideal_basics_and_scaling() {
        let p = block_odd(1);
        let n = p.rank();
        assert!(p.is_ideal(&LatticeHnf::standard(n)));
        assert!(p.is_ideal(&LatticeHnf::diagonal(&vec![2; n])));
        // Λ is an ideal iff pΛ is: scaling every row by p preserves HNF
        for l in intlat::enumerate_hnf(n, 2, 2) {
            let mut scaled_rows = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    scaled_rows.push(2 * l.entry(i, j));
                }
            }
            let scaled = LatticeHnf::from_hnf_rows(n, scaled_rows);
            assert_eq!(p.is_ideal(&l), p.is_ideal(&scaled));
        }
    }

    #[test]
    fn abelian_oracle_counts_all_sublattices() {
        for n in 2..=5usize {
            let dprime = 2.min(n - 1);
            let d = n - dprime;
            let zero = Presentation::new(LinearFormMatrix::zero(d, dprime, true), None);
            for &p in &[2i64, 3] {
                let kmax = if p == 2 { 4 } else { 3 };
                let counts = zero
                    .oracle_count(p, kmax, u128::MAX, ExecMode::auto())
                    .unwrap();
                for k in 0..=kmax {
                    assert_eq!(
                        counts[k as usize],
                        BigInt::from(intlat::hnf_count(n, p, k) as i64),
                        "n={} p={} k={}",
                        n,
                        p,
                        k
                    );
                }
            }
        }
    }

    #[test]
    fn oracle_budget_guard() {
        let p = block_odd(1);
        match p.oracle_count(3, 4, 10, ExecMode::Sequential) {
            Err(LieError::BudgetExceeded { needed, budget }) => {
                assert!(needed > 10 && budget == 10);
            }
            other => panic!("expected budget error, got {:?}", other),
        }
    }

    #[test]
    fn paired_oracle_matches_full_oracle() {
        // the pair decomposition is |ℒ′:Λ′|^d-to-1 onto admissible pairs
        for pres in [block_odd(1), block_even(&[0, 1]).unwrap()] {
            for &p in &[2i64, 3] {
                let full = pres.oracle_count(p, 3, u128::MAX, ExecMode::auto()).unwrap();
                let paired = pres
                    .oracle_count_paired(p, 3, u128::MAX, ExecMode::auto())
                    .unwrap();
                assert_eq!(full, paired, "presentation d={} p={}", pres.d, p);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_oracles_agree() {
        let pres = block_odd(1);
        let a = pres.oracle_count(2, 3, u128::MAX, ExecMode::Sequential).unwrap();
        let b = pres.oracle_count(2, 3, u128::MAX, ExecMode::auto()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn squarefree_and_primary_decomposition() {
        // (t²+1)² has squarefree part t²+1
        let g = vec![1i64, 0, 2, 0, 1];
        assert_eq!(squarefree_part(&g), vec![1, 0, 1]);
        assert_eq!(primary_decompose(&g), Some((vec![1, 0, 1], 2)));
        // t itself
        assert_eq!(primary_decompose(&[0, 1]), Some((vec![0, 1], 1)));
        // (t−1)³
        let g = vec![-1i64, 3, -3, 1];
        assert_eq!(primary_decompose(&g), Some((vec![-1, 1], 3)));
        // t(t−1) is squarefree but not a proper power: e = 1
        assert_eq!(primary_decompose(&[0, -1, 1]), Some((vec![0, -1, 1], 1)));
    }

    #[test]
    fn bad_prime_sets() {
        // single even block f = t: nothing beyond 2
        let p = block_even(&[0]).unwrap();
        assert_eq!(p.bad_primes(100), Some([2u64].into_iter().collect()));
        // f = t²+1: discriminant −4 contributes only 2
        let p = block_even(&[0, 1]).unwrap();
        assert_eq!(p.bad_primes(100), Some([2u64].into_iter().collect()));
        // two even blocks t and t−1: resultant ±1, still only 2
        let p = direct_sum(&[
            block_even(&[0]).unwrap(),
            block_even(&[-1]).unwrap(),
        ])
        .unwrap();
        assert_eq!(p.bad_primes(100), Some([2u64].into_iter().collect()));
        // t and t−2 collide mod 2 only; t−2 vs t²+1 have resultant 5
        let p = direct_sum(&[
            block_even(&[-2]).unwrap(),
            block_even(&[0, 1]).unwrap(),
        ])
        .unwrap();
        assert_eq!(p.bad_primes(100), Some([2u64, 5].into_iter().collect()));
        // raw matrices have no determined set
        let zero = Presentation::new(LinearFormMatrix::zero(2, 2, true), None);
        assert_eq!(zero.bad_primes(100), None);
    }

    #[test]
    fn curve_bad_primes_include_small_and_singular() {
        // conic r=2: {2} only (3 is fine)
        let conic = conic_presentation();
        let bad = conic.bad_primes(50).unwrap();
        assert!(bad.contains(&2));
        assert!(!bad.contains(&3));
        assert!(!bad.contains(&5));
        // genus-one example r=3 with D=1: {2, 3}, smooth at 5 and 7
        let mut r = LinearFormMatrix::zero(3, 3, false);
        r.set(0, 0, LinearForm::variable(3, 2, 1));
        r.set(0, 1, LinearForm::variable(3, 0, 1));
        r.set(0, 2, LinearForm::variable(3, 1, 1));
        r.set(1, 0, LinearForm::variable(3, 0, 1));
        r.set(1, 1, LinearForm::variable(3, 2, 1));
        r.set(2, 0, LinearForm::variable(3, 1, 1));
        r.set(2, 2, LinearForm::variable(3, 0, 1));
        let p = from_r(r);
        let bad = p.bad_primes(50).unwrap();
        assert!(bad.contains(&2) && bad.contains(&3));
        assert!(!bad.contains(&5) && !bad.contains(&7));
    }

    #[test]
    fn primes_sieve() {
        assert_eq!(primes_up_to(1), Vec::<u64>::new());
        assert_eq!(primes_up_to(13), vec![2, 3, 5, 7, 11, 13]);
    }
}
