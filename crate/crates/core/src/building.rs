//! Vertex walks over homothety classes of full lattices in the derived
//! space, and the weight bookkeeping that turns them into ideal counts.
//!
//! A homothety class of full rank-d′ lattices has a unique maximal
//! representative Λ′ (one not contained in p·ℤ^{d′}).  Diagonalizing Λ′
//! with a unimodular α gives its elementary-divisor type
//! p^{r₁} ≥ … ≥ p^{r_{d′}} = 1.  The class carries two weights:
//!   w  = r₁ + … + r_{d′}       (log_p of the index), and
//!   w′ = w + Σ_{i=1}^d (r₁ − min(e_i, r₁)),
//! where e₁..e_d are the p-valuations of the elementary divisors of the
//! d × d(d′−1) stack  B = [ p^{r₁−r₁}M(α¹) | p^{r₁−r₂}M(α²) | … ]
//! over the first d′−1 columns of α.  The term log_p|ℤ^d : X(Λ′)| counts
//! the x-directions whose brackets land inside Λ′, one congruence
//! x·M(α^k) ≡ 0 (mod p^{r_k}) per diagonal direction, all raised to the
//! common modulus p^{r₁} by the horizontal scaling.
//!
//! Summing p^{w·d}·T^{w′} over all classes gives the series A(p,T); the
//! local ideal zeta function is then
//!   ζ = ζ_{ℤ^d}(T) · 1/(1 − p^{dd′}T^{d+d′}) · A(p,T)
//! in (X,Y) = (p, T), with ζ_{ℤ^d} = ∏_{i=0}^{d−1} (1−p^iT)^{-1}.

use crate::exec::{self, ExecMode};
use crate::intlat::{self, IntMat, LatticeHnf};
use crate::liering::Presentation;
use crate::ratfun::GeoRatFun;
use crate::sympoly::valuation;
use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildingError {
    /// Some generator brackets to zero with everything, so the homothety
    /// folding behind the zeta assembly does not apply to this input.
    #[error("degenerate bracket pairing: some generator is central")]
    NotFull,
}

/// A homothety class: maximal representative, descending exponent type,
/// and both weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexClass {
    pub lattice: LatticeHnf,
    pub edtype: Vec<u32>,
    pub w: u32,
    pub wprime: u32,
}

/// Truncated walk output: coefficient of T^k is Σ p^{w·d} over classes
/// with w′ = k.  All coefficients are nonnegative by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ASeries {
    pub p: i64,
    pub order: u32,
    pub coeffs: Vec<BigInt>,
    /// Classes of index up to p^{max_index_enumerated} were walked; the
    /// truncation bound guarantees no class with w′ ≤ order lies beyond.
    pub max_index_enumerated: u32,
}

/// Diagonalize a nonsingular lattice of p-power index: returns the
/// descending exponent type (r₁ ≥ … ≥ r_n) and a unimodular α such that
/// the rows of M·α span the diagonal lattice diag(p^{r₁},…,p^{r_n}).
/// The span equality is verified on every call.
pub fn alpha_from_lattice(mder: &LatticeHnf, p: i64) -> (Vec<u32>, IntMat) {
    let n = mder.rank();
    let mat = mder.to_mat();
    let snf = intlat::smith(&mat);
    let mut edtype = Vec::with_capacity(n);
    for div in snf.divisors.iter().rev() {
        let v = valuation(div, p).expect("nonsingular lattice");
        assert!(
            BigInt::from(p).pow(v) == *div,
            "lattice index is not a p-power"
        );
        edtype.push(v);
    }
    // α = right transform with columns reversed, so the largest divisor
    // lands on the first coordinate.
    let alpha = IntMat::from_fn(n, n, |i, j| snf.right[(i, n - 1 - j)].clone());
    let prod = mat.mul(&alpha);
    let h = intlat::hnf_normalize(&prod).expect("nonsingular lattice");
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j {
                BigInt::from(p).pow(edtype[i])
            } else {
                BigInt::zero()
            };
            assert!(h[(i, j)] == expect, "diagonalization verification failed");
        }
    }
    (edtype, alpha)
}

/// Rank over F_p of the d×d matrix M(v) for v in F_p^{d′}.
fn rank_m_mod_p(pres: &Presentation, v: &[u64], p: u64) -> usize {
    let d = pres.d;
    let mut rows: Vec<Vec<u64>> = vec![vec![0; d]; d];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let mut acc: u64 = 0;
            for (k, &vk) in v.iter().enumerate() {
                if vk == 0 {
                    continue;
                }
                let c = pres.m.entry(i, j).coeffs[k].rem_euclid(p as i64) as u64;
                acc = (acc + (c as u128 * vk as u128 % p as u128) as u64) % p;
            }
            *cell = acc;
        }
    }
    // Gaussian elimination mod p
    let mut rank = 0;
    let mut col = 0;
    while rank < d && col < d {
        let pivot = (rank..d).find(|&i| rows[i][col] != 0);
        let Some(pi) = pivot else {
            col += 1;
            continue;
        };
        rows.swap(rank, pi);
        let inv = mod_inverse(rows[rank][col], p);
        for i in rank + 1..d {
            if rows[i][col] == 0 {
                continue;
            }
            let factor = (rows[i][col] as u128 * inv as u128 % p as u128) as u64;
            for j in col..d {
                let sub = (factor as u128 * rows[rank][j] as u128 % p as u128) as u64;
                rows[i][j] = (rows[i][j] + p - sub) % p;
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p prime: a^{p-2} mod p
    let mut base = a as u128 % p as u128;
    let mut exp = p - 2;
    let mut acc: u128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        exp >>= 1;
    }
    acc as u64
}

/// Minimum over the projective space P^{d′−1}(F_p) of the F_p-rank of
/// M(v).  Since the top exponent direction α¹ reduces to a nonzero vector
/// and elementary divisors only grow under scaling, at least this many of
/// the e_i vanish at every vertex, giving the truncation bound below.
pub fn rho_min(pres: &Presentation, p: i64) -> u32 {
    let dp = pres.dprime;
    let pu = p as u64;
    let mut best = u32::MAX;
    for lead in 0..dp {
        let tail = dp - lead - 1;
        let total = pu.pow(tail as u32);
        for code in 0..total {
            let mut v = vec![0u64; dp];
            v[lead] = 1;
            let mut c = code;
            for t in 0..tail {
                v[lead + 1 + t] = c % pu;
                c /= pu;
            }
            best = best.min(rank_m_mod_p(pres, &v, pu) as u32);
            if best == 0 {
                return 0;
            }
        }
    }
    best
}

/// Lower bound for w′ of any class of index p^m: each of the ≥ ρ unit
/// divisors contributes a full r₁ ≥ ⌈m/(d′−1)⌉ to the congruence index.
fn wprime_lower_bound(m: u32, rho: u32, dprime: usize) -> u64 {
    if dprime <= 1 {
        return m as u64;
    }
    let r1_min = (m as u64).div_ceil(dprime as u64 - 1);
    m as u64 + rho as u64 * r1_min
}

/// Largest index exponent m with lower bound ≤ order; classes beyond it
/// cannot contribute to the truncated series.
pub fn enumeration_bound(rho: u32, dprime: usize, order: u32) -> u32 {
    if dprime <= 1 {
        return 0;
    }
    let mut m = 0u32;
    while wprime_lower_bound(m + 1, rho, dprime) <= order as u64 {
        m += 1;
    }
    m
}

/// w′ from an explicit diagonalizing α (any valid one gives the same
/// answer: the divisors of the stack are lattice invariants).
fn wprime_given_alpha(pres: &Presentation, edtype: &[u32], alpha: &IntMat, p: i64) -> u32 {
    let (d, dp) = (pres.d, pres.dprime);
    debug_assert_eq!(edtype.len(), dp);
    let w: u32 = edtype.iter().sum();
    let r1 = edtype[0];
    if dp == 1 || r1 == 0 {
        return w;
    }
    let mut b = IntMat::zero(d, d * (dp - 1));
    for k in 1..dp {
        let col: Vec<BigInt> = (0..dp).map(|i| alpha[(i, k - 1)].clone()).collect();
        let scale = BigInt::from(p).pow(r1 - edtype[k - 1]);
        let mval = pres.m.eval_bigint(&col);
        for i in 0..d {
            for j in 0..d {
                b[(i, (k - 1) * d + j)] = &mval[(i, j)] * &scale;
            }
        }
    }
    let snf = intlat::smith(&b);
    let mut extra = 0u32;
    for div in &snf.divisors {
        let e = valuation(div, p).unwrap_or(r1);
        extra += r1 - e.min(r1);
    }
    w + extra
}

/// Both weights of the class of `mder` (maximal representative expected;
/// the computation itself is valid for any nonsingular p-power lattice).
pub fn vertex_weights(pres: &Presentation, mder: &LatticeHnf, p: i64) -> (u32, u32) {
    let (edtype, alpha) = alpha_from_lattice(mder, p);
    let w: u32 = edtype.iter().sum();
    let wprime = wprime_given_alpha(pres, &edtype, &alpha, p);
    assert!(wprime >= w, "congruence index cannot be negative");
    (w, wprime)
}

/// The congruence weight w′ alone, guarded by the nondegeneracy
/// precondition that the zeta assembly relies on.  (The bracket image
/// need not span the whole centre: unconstrained central directions
/// simply contribute nothing to w′.)
pub fn weight_wprime(
    pres: &Presentation,
    mder: &LatticeHnf,
    p: i64,
) -> Result<u32, BuildingError> {
    if !pres.adjoint_injective() {
        return Err(BuildingError::NotFull);
    }
    Ok(vertex_weights(pres, mder, p).1)
}

/// Classify one maximal lattice into a full VertexClass record.
pub fn classify_vertex(pres: &Presentation, mder: &LatticeHnf, p: i64) -> VertexClass {
    let (edtype, alpha) = alpha_from_lattice(mder, p);
    let w: u32 = edtype.iter().sum();
    let wprime = wprime_given_alpha(pres, &edtype, &alpha, p);
    VertexClass {
        lattice: mder.clone(),
        edtype,
        w,
        wprime,
    }
}

/// Walk all homothety classes with w′ ≤ order and accumulate
/// A(p,T) = Σ p^{w·d} T^{w′} truncated to that order.  The walk
/// enumerates maximal lattices of index p^m for m up to the proven
/// truncation bound, in parallel over enumeration chunks.  The walk is
/// defined for every presentation; interpreting the assembled product as
/// an ideal count additionally needs `adjoint_injective`.
pub fn building_series(pres: &Presentation, p: i64, order: u32, mode: ExecMode) -> ASeries {
    let (d, dp) = (pres.d, pres.dprime);
    let mstar = if dp <= 1 {
        0
    } else {
        enumeration_bound(rho_min(pres, p), dp, order)
    };
    let mut coeffs = vec![BigInt::zero(); order as usize + 1];
    for m in 0..=mstar {
        let chunks = intlat::hnf_chunk_plan(dp, p, m, 1 << 12);
        let partial = exec::fold_chunks(
            mode,
            chunks,
            || vec![BigInt::zero(); order as usize + 1],
            |chunk| {
                let mut acc = vec![BigInt::zero(); order as usize + 1];
                intlat::scan_hnf_chunk(dp, p, &chunk, |l| {
                    if !l.is_maximal_rep(p) {
                        return;
                    }
                    let (w, wprime) = vertex_weights(pres, l, p);
                    debug_assert_eq!(w, m);
                    if wprime <= order {
                        acc[wprime as usize] += BigInt::from(p).pow(w * d as u32);
                    }
                });
                acc
            },
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
        for (x, y) in coeffs.iter_mut().zip(partial) {
            *x += y;
        }
    }
    ASeries {
        p,
        order,
        coeffs,
        max_index_enumerated: mstar,
    }
}

/// ζ_{ℤ^d} in (X,Y) form: ∏_{i=0}^{d−1} (1 − X^i Y)^{-1}.
pub fn zeta_zd(d: usize) -> GeoRatFun {
    let mut f = GeoRatFun::one();
    for i in 0..d {
        f = f.mul(&GeoRatFun::inv_geom(i as i64, 1));
    }
    f
}

/// Assemble the local zeta function from a closed-form A:
/// ζ = ζ_{ℤ^d} · (1 − X^{dd′}Y^{d+d′})^{-1} · A.
pub fn assemble_zeta(a: &GeoRatFun, d: usize, dprime: usize) -> GeoRatFun {
    a.mul(&zeta_zd(d))
        .mul(&GeoRatFun::inv_geom((d * dprime) as i64, (d + dprime) as i64))
}

/// Numeric assembly: convolve the walk output with the two explicit
/// factors' coefficient sequences at the walk's prime.
pub fn assemble_zeta_series(a: &ASeries, d: usize, dprime: usize) -> Vec<BigInt> {
    let k = a.order as usize;
    let p = a.p;
    let abelian: Vec<BigInt> = (0..=k)
        .map(|j| BigInt::from(intlat::hnf_count(d, p, j as u32)))
        .collect();
    let step = d + dprime;
    let mut homothety = vec![BigInt::zero(); k + 1];
    let mut r = 0usize;
    while r * step <= k {
        homothety[r * step] = BigInt::from(p).pow((r * d * dprime) as u32);
        r += 1;
    }
    let mut partial = vec![BigInt::zero(); k + 1];
    for (i, ai) in abelian.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, hj) in homothety.iter().enumerate().take(k + 1 - i) {
            if !hj.is_zero() {
                partial[i + j] += ai * hj;
            }
        }
    }
    let mut out = vec![BigInt::zero(); k + 1];
    for (i, ci) in partial.iter().enumerate() {
        if ci.is_zero() {
            continue;
        }
        for (j, aj) in a.coeffs.iter().enumerate().take(k + 1 - i) {
            if !aj.is_zero() {
                out[i + j] += ci * aj;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
