//! Closed-form rational functions for the classified block families, and
//! the polyhedral-cone engine that produces them.
//!
//! For a direct sum of classified blocks (derived rank 2), the weighted
//! vertex sum A(p,T) factorizes over the sector N = {a ≥ b ≥ 1}: a class
//! at distance a whose top direction meets the vanishing set of the index
//! set I at depth b contributes
//!   ψ(a,b) = p^{ad}·T^{c₀b + Σ_r c_r·min(a, e_r b) + c_{σ+1} a},
//! with fiber sizes 1 on the diagonal and (1−p^{-1})p^{a−b} off it.  The
//! engine removes the min's by splitting N along the threshold rays
//! b = a/e_r and sums each sub-sector as a geometric product, substituting
//! Laurent monomials in (p,T) for the sector variables.  Everything is
//! exact, with p kept as the symbolic variable X throughout:
//! 1/(p+1) = (1−X)/(1−X²) and (1−p^{-1}) = (X−1)/X.

use crate::liering::{self, BlockSpec};
use crate::modcurves;
use crate::ratfun::{BivarPoly, GeoRatFun};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConeError {
    /// The index subset of a congruence sector must be nonempty.
    #[error("empty index set")]
    EmptyI,
    /// The prime is excluded (ramified, or root collision between the
    /// defining polynomials).
    #[error("prime {0} is excluded: {1}")]
    BadPrime(u64, String),
    /// Family parameters outside the classified range.
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// Exponent data of one congruence sector: ψ(a,b) as above, with
/// thresholds 1 < e₁ < … < e_σ and coefficients c₀, c₁..c_σ, c_{σ+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeData {
    pub d: i64,
    pub thresholds: Vec<i64>,
    pub coeffs: Vec<i64>,
}

impl ConeData {
    pub fn new(d: i64, thresholds: Vec<i64>, coeffs: Vec<i64>) -> Self {
        assert!(
            thresholds.windows(2).all(|w| w[0] < w[1]),
            "thresholds must be strictly increasing"
        );
        assert!(
            thresholds.iter().all(|&e| e > 1),
            "thresholds must exceed 1"
        );
        assert_eq!(coeffs.len(), thresholds.len() + 2);
        ConeData {
            d,
            thresholds,
            coeffs,
        }
    }

    /// The T-exponent of ψ at a point of the sector.
    pub fn psi_texp(&self, a: i64, b: i64) -> i64 {
        let sigma = self.thresholds.len();
        let mut t = self.coeffs[0] * b + self.coeffs[sigma + 1] * a;
        for (r, &e) in self.thresholds.iter().enumerate() {
            t += self.coeffs[r + 1] * a.min(e * b);
        }
        t
    }
}

/// Block structure of a direct sum: multiplicity vectors per squarefree
/// polynomial, the polynomial degrees, and the sizes of the odd blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityData {
    /// multiplicities[i] = (e_{i1}, …, e_{ir_i}) for the i-th polynomial
    pub multiplicities: Vec<Vec<u32>>,
    /// degrees[i] = deg f_i
    pub degrees: Vec<u32>,
    /// one entry l_k per odd block of size 2l_k + 1
    pub odd_lengths: Vec<u32>,
}

impl MultiplicityData {
    /// Total rank of the abelianized generators.
    pub fn d(&self) -> i64 {
        let even: i64 = self
            .multiplicities
            .iter()
            .zip(&self.degrees)
            .map(|(es, &deg)| 2 * deg as i64 * es.iter().map(|&e| e as i64).sum::<i64>())
            .sum();
        let odd: i64 = self.odd_lengths.iter().map(|&l| 2 * l as i64 + 1).sum();
        even + odd
    }

    /// Number of odd blocks.
    pub fn odd_count(&self) -> i64 {
        self.odd_lengths.len() as i64
    }
}

/// Collect the sector exponents for the index set I: multiplicities equal
/// to 1 fold into the b-coefficient (min(a,b) = b on the sector), larger
/// ones become thresholds weighted by −2 per occurrence, and the
/// a-coefficient is d+1−n.
pub fn cone_data(md: &MultiplicityData, index_set: &[usize]) -> Result<ConeData, ConeError> {
    if index_set.is_empty() {
        return Err(ConeError::EmptyI);
    }
    let d = md.d();
    let n = md.odd_count();
    let mut ones = 0i64;
    let mut counts: std::collections::BTreeMap<i64, i64> = std::collections::BTreeMap::new();
    for &i in index_set {
        for &e in &md.multiplicities[i] {
            if e == 1 {
                ones += 1;
            } else {
                *counts.entry(e as i64).or_insert(0) += 1;
            }
        }
    }
    let thresholds: Vec<i64> = counts.keys().copied().collect();
    let mut coeffs = Vec::with_capacity(thresholds.len() + 2);
    coeffs.push(-2 * ones);
    for &e in &thresholds {
        coeffs.push(-2 * counts[&e]);
    }
    coeffs.push(d + 1 - n);
    Ok(ConeData::new(d, thresholds, coeffs))
}

/// 1/(p+1) with p symbolic: (1−X)/(1−X²).
fn inv_p_plus_one() -> GeoRatFun {
    GeoRatFun::one()
        .sub(&GeoRatFun::monomial(BigRational::one(), 1, 0))
        .mul(&GeoRatFun::inv_geom(2, 0))
}

/// (1 − p^{-1}) with p symbolic: 1 − X^{-1}.
fn one_minus_inv_p() -> GeoRatFun {
    GeoRatFun::one().sub(&GeoRatFun::monomial(BigRational::one(), -1, 0))
}

fn mono(xexp: i64, texp: i64) -> GeoRatFun {
    GeoRatFun::monomial(BigRational::one(), xexp, texp)
}

/// 1/(1 − X^a T^b) for a sector ray; realizable sector data keeps both
/// exponents nonnegative, which the rational-function layer requires.
fn ray(xexp: i64, texp: i64) -> GeoRatFun {
    assert!(
        xexp >= 0 && texp >= 0,
        "sector ray with negative exponent: X^{} T^{}",
        xexp,
        texp
    );
    GeoRatFun::inv_geom(xexp, texp)
}

/// The sector generating function A_I(p,T) = 1/(p+1) + Σ fiber·ψ over
/// a ≥ b ≥ 1, evaluated by the sub-sector decomposition along the
/// threshold rays.  Fully symbolic in both variables.
pub fn cone_gf(cd: &ConeData) -> GeoRatFun {
    let d = cd.d;
    let sigma = cd.thresholds.len();
    let c = &cd.coeffs;
    let c0 = c[0];
    let ctop = c[sigma + 1];
    // suffix sums S_j = c_j + … + c_{σ+1} over the min-coefficients
    let suffix = |j: usize| -> i64 { (j..=sigma + 1).map(|r| c[r]).sum() };
    // prefix ray offsets U_j = c₀ + Σ_{r<j} c_r e_r
    let prefix = |j: usize| -> i64 {
        c0 + (1..j).map(|r| c[r] * cd.thresholds[r - 1]).sum::<i64>()
    };

    let s1 = suffix(1);
    // diagonal sub-sector: Σ_a (p^d T^{c₀+S₁})^a, fiber 1
    let mut total = inv_p_plus_one();
    total = total.add(&mono(d, c0 + s1).mul(&ray(d, c0 + s1)));

    let unit_defect = one_minus_inv_p();
    if sigma == 0 {
        // no thresholds: the rest of the sector is the strict half-plane
        // a > b ≥ 1 with fiber (1−p^{-1})p^{a−b}
        let term = mono(2 * (d + 1) - 1, c0 + 2 * s1)
            .mul(&ray(d + 1, s1))
            .mul(&ray(d, c0 + s1));
        return total.add(&unit_defect.mul(&term));
    }

    let mut strips = GeoRatFun::zero();
    // strip below the first threshold ray: b < a < e₁b
    let e1 = cd.thresholds[0];
    let strip1 = mono(2 * (d + 1) - 1, c0 + 2 * s1)
        .mul(&ray(d + 1, s1))
        .mul(&ray(d, c0 + s1))
        .sub(
            &mono((d + 1) * e1 - 1, c0 + e1 * s1)
                .mul(&ray((d + 1) * e1 - 1, c0 + e1 * s1))
                .mul(&ray(d + 1, s1)),
        );
    strips = strips.add(&strip1);
    // strips between consecutive threshold rays: e_{j−1}b ≤ a < e_j b
    for j in 2..=sigma {
        let (elo, ehi) = (cd.thresholds[j - 2], cd.thresholds[j - 1]);
        let (sj, uj) = (suffix(j), prefix(j));
        let lo = mono((d + 1) * elo - 1, uj + elo * sj);
        let hi = mono((d + 1) * ehi - 1, uj + ehi * sj);
        let term = lo
            .sub(&hi)
            .mul(&ray((d + 1) * elo - 1, uj + elo * sj))
            .mul(&ray((d + 1) * ehi - 1, uj + ehi * sj))
            .mul(&ray(d + 1, sj));
        strips = strips.add(&term);
    }
    // final sector beyond the last threshold: a ≥ e_σ b
    let es = cd.thresholds[sigma - 1];
    let u = prefix(sigma + 1);
    let term = mono((d + 1) * es - 1, u + es * ctop)
        .mul(&ray((d + 1) * es - 1, u + es * ctop))
        .mul(&ray(d + 1, ctop));
    strips = strips.add(&term);

    total.add(&unit_defect.mul(&strips))
}

/// The sector value for directions meeting no congruence locus:
/// A_∅ = (1 + p^d T^{d+1−n}) / ((p+1)(1 − p^{d+1} T^{d+1−n})).
pub fn a_empty(d: i64, n: i64) -> GeoRatFun {
    let m = d + 1 - n;
    assert!(m >= 1, "rank budget d+1-n must be positive");
    inv_p_plus_one()
        .mul(&GeoRatFun::one().add(&mono(d, m)))
        .mul(&ray(d + 1, m))
}

/// Assemble A(p,T) for a direct sum of classified blocks at the prime p:
/// count the projective directions by which subset of the defining
/// polynomials vanishes there, and weight each sector value by its count.
/// The empty sector carries the symbolic complement (X+1) − Σ counts, so
/// the result is an identity in (X,Y) valid at this prime's counts.
pub fn assemble_a(
    md: &MultiplicityData,
    polys: &[Vec<i64>],
    p: u64,
) -> Result<GeoRatFun, ConeError> {
    assert_eq!(polys.len(), md.multiplicities.len());
    let partition =
        modcurves::c_pi(polys, p).map_err(|e| ConeError::BadPrime(p, e.to_string()))?;
    let total: u64 = partition.values().sum();
    assert_eq!(total, p + 1, "direction partition must cover the line");
    let d = md.d();
    let n = md.odd_count();
    let mut nonempty_total: i64 = 0;
    let mut sum = GeoRatFun::zero();
    for (&mask, &count) in &partition {
        if mask == 0 || count == 0 {
            continue;
        }
        nonempty_total += count as i64;
        let index_set: Vec<usize> =
            (0..polys.len()).filter(|i| mask & (1 << i) != 0).collect();
        let ai = cone_gf(&cone_data(md, &index_set)?);
        sum = sum.add(&ai.scale(&BigRational::from(BigInt::from(count))));
    }
    // empty sector: (X + 1 − Σ_{I≠∅} c_I) · A_∅
    let complement = GeoRatFun::monomial(BigRational::one(), 1, 0)
        .add(&GeoRatFun::from_int(1 - nonempty_total));
    sum = sum.add(&complement.mul(&a_empty(d, n)));
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Closed forms for the classified families
// ---------------------------------------------------------------------------

/// Odd block of size 2r+1: A = (1 + p^{2r+1}T^{2r+1}) / (1 − p^{2r+2}T^{2r+1}).
pub fn odd_block_a(r: u32) -> Result<GeoRatFun, ConeError> {
    if r < 1 {
        return Err(ConeError::BadParams("odd block needs r >= 1".into()));
    }
    let r = r as i64;
    Ok(GeoRatFun::one()
        .add(&mono(2 * r + 1, 2 * r + 1))
        .mul(&ray(2 * r + 2, 2 * r + 1)))
}

/// Even block of size 2r with threshold e (so the squarefree degree is
/// r/e): returns (base, coeff) with A = base + n_{f,p}·coeff, where
///   base  = P₁/D = (p+1)A_∅,
///   coeff = P₂/D = A_{{1}} − A_∅,
///   D  = (1−p^{2r+1}T^{2r−1})(1−p^{2r+1}T^{2r+1})(1−p^{(2r+1)e−1}T^{(2r−1)e}),
///   P₁ = (1−p^{2r+1}T^{2r−1})(1+p^{2r}T^{2r+1})(1−p^{(2r+1)e−1}T^{(2r−1)e}),
///   P₂ = p^{2r}T^{2r−1}(1−T²)(1−p^{(2r+1)e}T^{(2r−1)e}).
pub fn even_block_a(r: u32, e: u32) -> Result<(GeoRatFun, GeoRatFun), ConeError> {
    if r < 1 || e < 1 || r % e != 0 {
        return Err(ConeError::BadParams(format!(
            "even block needs e | r, got r={} e={}",
            r, e
        )));
    }
    let (r, e) = (r as i64, e as i64);
    // base = P₁/D with the matching factors cancelled
    let base = GeoRatFun::one()
        .add(&mono(2 * r, 2 * r + 1))
        .mul(&ray(2 * r + 1, 2 * r + 1));
    // coeff = P₂/D
    let p2 = mono(2 * r, 2 * r - 1)
        .mul(&GeoRatFun::one().sub(&mono(0, 2)))
        .mul(&GeoRatFun::one().sub(&mono((2 * r + 1) * e, (2 * r - 1) * e)));
    let coeff = p2
        .mul(&ray(2 * r + 1, 2 * r - 1))
        .mul(&ray(2 * r + 1, 2 * r + 1))
        .mul(&ray((2 * r + 1) * e - 1, (2 * r - 1) * e));
    Ok((base, coeff))
}

/// The two displayed sector values of the plane-curve family of size 4r:
///   A₁ = (1 + p^{2r}T^{2r+1} + p^{2r+1}T^{2r+1} + p^{4r}T^{2r+2}
///           + p^{4r+1}T^{2r+2} + p^{6r+1}T^{4r+3})
///        / ((1−p^{4r+2}T^{2r+2})(1−p^{2r+2}T^{2r+1})),
///   A₂ = (1−T)(1+T)p^{2r}T^{2r−1}(1+p^{4r+1}T^{2r+2})
///        / ((1−p^{4r+2}T^{2r+2})(1−p^{2r+2}T^{2r+1})(1−p^{2r+1}T^{2r−1})),
/// so that A = A₁ + |C(F_p)|·A₂.
pub fn curve_a_pair(r: u32) -> Result<(GeoRatFun, GeoRatFun), ConeError> {
    if r < 2 {
        return Err(ConeError::BadParams("curve family needs r >= 2".into()));
    }
    let r = r as i64;
    let numer1 = BivarPoly::from_terms([
        (0u32, 0u32, 1i64),
        (2 * r as u32, 2 * r as u32 + 1, 1),
        (2 * r as u32 + 1, 2 * r as u32 + 1, 1),
        (4 * r as u32, 2 * r as u32 + 2, 1),
        (4 * r as u32 + 1, 2 * r as u32 + 2, 1),
        (6 * r as u32 + 1, 4 * r as u32 + 3, 1),
    ]);
    let a1 = GeoRatFun::from_poly(numer1)
        .mul(&ray(4 * r + 2, 2 * r + 2))
        .mul(&ray(2 * r + 2, 2 * r + 1));
    // (1−T²)·p^{2r}T^{2r−1}·(1+p^{4r+1}T^{2r+2}) expanded
    let numer2 = BivarPoly::from_terms([
        (2 * r as u32, 2 * r as u32 - 1, 1i64),
        (2 * r as u32, 2 * r as u32 + 1, -1),
        (6 * r as u32 + 1, 4 * r as u32 + 1, 1),
        (6 * r as u32 + 1, 4 * r as u32 + 3, -1),
    ]);
    let a2 = GeoRatFun::from_poly(numer2)
        .mul(&ray(4 * r + 2, 2 * r + 2))
        .mul(&ray(2 * r + 2, 2 * r + 1))
        .mul(&ray(2 * r + 1, 2 * r - 1));
    Ok((a1, a2))
}

/// Rebuild the curve-family pair from its geometric pieces — sector
/// shares, the two boundary sums, and the product form of the interior —
/// verifying every intermediate identity, including the three-variable
/// sub-sector decomposition of the smooth-point boundary.  Returns the
/// same pair as `curve_a_pair`, which it asserts.
pub fn curve_a_construction(r: u32) -> Result<(GeoRatFun, GeoRatFun), ConeError> {
    if r < 2 {
        return Err(ConeError::BadParams("curve family needs r >= 2".into()));
    }
    let ri = r as i64;
    // shares of the root vertex: one per flag, 1/((p²+p+1)(p+1))
    let inv_b21 = GeoRatFun::one()
        .sub(&mono(1, 0))
        .mul(&GeoRatFun::inv_geom(2, 0));
    let inv_b32 = GeoRatFun::one()
        .sub(&mono(1, 0))
        .mul(&GeoRatFun::inv_geom(3, 0));

    // boundary over types (p^s,1,1), direction off the vanishing locus
    let boundary_s_off = mono(2 * ri, 2 * ri + 1).mul(&ray(2 * ri + 2, 2 * ri + 1));
    // boundary over types (p^t,p^t,1) (the line never degenerates)
    let boundary_t = mono(4 * ri, 2 * ri + 2).mul(&ray(4 * ri + 2, 2 * ri + 2));

    // boundary over types (p^s,1,1) at a smooth point of the locus:
    // three-variable sub-sector sum over {a ≥ b, a ≥ c},
    // ψ = p^{2ra}T^{(2r+1)a−2min(a,b)}, fibers (1−p^{-1}) per strict
    // coordinate drop times p^{a−b}, p^{a−c}.
    let unit_defect = one_minus_inv_p();
    // diagonal a=b=c: Σ (X^{2r}T^{2r−1})^a
    let row0 = mono(2 * ri, 2 * ri - 1).mul(&ray(2 * ri, 2 * ri - 1));
    // a=c>b: m = (p^{2r+1}T^{2r+1}, p^{-1}T^{-2}, 1):
    //   X²YZ²/((1−XYZ)(1−XZ))
    let row1 = mono(4 * ri + 1, 4 * ri)
        .mul(&ray(2 * ri, 2 * ri - 1))
        .mul(&ray(2 * ri + 1, 2 * ri + 1));
    // a=b>c: m = (p^{2r+1}T^{2r−1}, 1, p^{-1}): X²Y²Z/((1−XYZ)(1−XY))
    let row2 = mono(4 * ri + 1, 4 * ri - 2)
        .mul(&ray(2 * ri, 2 * ri - 1))
        .mul(&ray(2 * ri + 1, 2 * ri - 1));
    // a>b, a>c: m = (p^{2r+2}T^{2r+1}, p^{-1}T^{-2}, p^{-1}):
    //   X²YZ(1−X²YZ)/((1−XYZ)(1−XY)(1−XZ)(1−X))
    let row3 = mono(4 * ri + 2, 4 * ri)
        .mul(&GeoRatFun::one().sub(&mono(4 * ri + 2, 4 * ri)))
        .mul(&ray(2 * ri, 2 * ri - 1))
        .mul(&ray(2 * ri + 1, 2 * ri - 1))
        .mul(&ray(2 * ri + 1, 2 * ri + 1))
        .mul(&ray(2 * ri + 2, 2 * ri + 1));
    let boundary_s_smooth = row0
        .add(&unit_defect.mul(&row1.add(&row2)))
        .add(&unit_defect.mul(&unit_defect).mul(&row3));
    // the decomposition collapses to a closed two-factor form
    let smooth_closed = mono(2 * ri, 2 * ri - 1)
        .mul(&GeoRatFun::one().sub(&mono(2 * ri + 1, 2 * ri + 1)))
        .mul(&ray(2 * ri + 1, 2 * ri - 1))
        .mul(&ray(2 * ri + 2, 2 * ri + 1));
    assert!(
        boundary_s_smooth.equals(&smooth_closed),
        "sub-sector sum must collapse to the closed smooth-boundary form"
    );

    // interiors: weights add across the two boundary parameters, and each
    // interior stratum at (s,t) = (1,1) has p classes, so the interior
    // sum is p times the product of the boundary sums.
    let p_factor = mono(1, 0);
    let interior_off = p_factor.mul(&boundary_s_off).mul(&boundary_t);
    let interior_smooth = p_factor.mul(&smooth_closed).mul(&boundary_t);

    let shares = inv_b32.mul(&inv_b21);
    let a_offoff = shares
        .add(&inv_b21.mul(&boundary_s_off.add(&boundary_t)))
        .add(&interior_off);
    let a_smpt = shares
        .add(&inv_b21.mul(&smooth_closed.add(&boundary_t)))
        .add(&interior_smooth);

    // A₁ = (p²+p+1)(p+1)·A_off/off;  A₂ = (p+1)·(A_sm.pt. − A_off/off)
    let b21 = GeoRatFun::one().add(&mono(1, 0));
    let b32 = GeoRatFun::one().add(&mono(1, 0)).add(&mono(2, 0));
    let a1 = b32.mul(&b21).mul(&a_offoff);
    let a2 = b21.mul(&a_smpt.sub(&a_offoff));

    let (a1_display, a2_display) = curve_a_pair(r)?;
    assert!(
        a1.equals(&a1_display) && a2.equals(&a2_display),
        "assembled sector values must match the displayed pair"
    );
    Ok((a1_display, a2_display))
}

/// The zeta-level pair for the curve family: W_i = A_i · ζ_{ℤ^{2r}} ·
/// (1 − p^{6r}T^{2r+3})^{-1}, so that ζ = W₁ + |C(F_p)|·W₂ at good p.
pub fn curve_zeta(r: u32) -> Result<(GeoRatFun, GeoRatFun), ConeError> {
    let (a1, a2) = curve_a_pair(r)?;
    let d = 2 * r as usize;
    Ok((
        crate::building::assemble_zeta(&a1, d, 3),
        crate::building::assemble_zeta(&a2, d, 3),
    ))
}

/// Recover the block structure of a direct sum of classified blocks as
/// multiplicity data plus the list of distinct squarefree polynomials
/// (each even block's form is a primary power f^e with f monic).
pub fn multiplicity_from_blocks(
    blocks: &[BlockSpec],
) -> Result<(MultiplicityData, Vec<Vec<i64>>), ConeError> {
    let mut polys: Vec<Vec<i64>> = Vec::new();
    let mut multiplicities: Vec<Vec<u32>> = Vec::new();
    let mut degrees: Vec<u32> = Vec::new();
    let mut odd_lengths: Vec<u32> = Vec::new();
    for b in blocks {
        match b {
            BlockSpec::Odd { r } => odd_lengths.push(*r),
            BlockSpec::Even { coeffs } => {
                let g = liering::even_block_poly(coeffs);
                let (f, e) = liering::primary_decompose(&g).ok_or_else(|| {
                    ConeError::BadParams(format!(
                        "even block form is not a primary power: {:?}",
                        coeffs
                    ))
                })?;
                let deg = (f.len() - 1) as u32;
                if let Some(i) = polys.iter().position(|q| *q == f) {
                    multiplicities[i].push(e);
                } else {
                    polys.push(f);
                    multiplicities.push(vec![e]);
                    degrees.push(deg);
                }
            }
        }
    }
    Ok((
        MultiplicityData {
            multiplicities,
            degrees,
            odd_lengths,
        },
        polys,
    ))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn cone_data_maps_multiplicities() {
        // single even block, e = 1: threshold folds into c₀
        let md = MultiplicityData {
            multiplicities: vec![vec![1]],
            degrees: vec![2],
            odd_lengths: vec![],
        };
        let cd = cone_data(&md, &[0]).unwrap();
        assert_eq!(md.d(), 4);
        assert_eq!((cd.d, &cd.thresholds[..], &cd.coeffs[..]), (4, &[][..], &[-2, 5][..]));
        // single even block, e = 2
        let md = MultiplicityData {
            multiplicities: vec![vec![2]],
            degrees: vec![1],
            odd_lengths: vec![],
        };
        let cd = cone_data(&md, &[0]).unwrap();
        assert_eq!(
            (cd.d, &cd.thresholds[..], &cd.coeffs[..]),
            (4, &[2][..], &[0, -2, 5][..])
        );
        // two polynomials with e = 2 and e = 3, both in I
        let md = MultiplicityData {
            multiplicities: vec![vec![2], vec![3]],
            degrees: vec![1, 1],
            odd_lengths: vec![1],
        };
        let cd = cone_data(&md, &[0, 1]).unwrap();
        assert_eq!(md.d(), 4 + 6 + 3);
        assert_eq!(
            (cd.d, &cd.thresholds[..], &cd.coeffs[..]),
            (13, &[2, 3][..], &[0, -2, -2, 13][..])
        );
        // empty index set is rejected
        assert_eq!(cone_data(&md, &[]).unwrap_err(), ConeError::EmptyI);
    }

    #[test]
    fn engine_matches_even_block_closed_form() {
        for (degf, e) in [(1u32, 1u32), (1, 2), (1, 3), (2, 1), (2, 2)] {
            let r = degf * e;
            let md = MultiplicityData {
                multiplicities: vec![vec![e]],
                degrees: vec![degf],
                odd_lengths: vec![],
            };
            let engine = cone_gf(&cone_data(&md, &[0]).unwrap());
            let (base, coeff) = even_block_a(r, e).unwrap();
            // A_{{1}} = A_∅ + coeff, and base = (p+1)·A_∅
            let closed = a_empty(2 * r as i64, 0).add(&coeff);
            assert!(engine.equals(&closed), "degf={} e={}", degf, e);
            // cross-check base against the displayed empty-sector series
            let b21 = GeoRatFun::one().add(&mono(1, 0));
            assert!(base.equals(&b21.mul(&a_empty(2 * r as i64, 0))));
        }
    }

    #[test]
    fn empty_sector_value_from_engine_rays() {
        // A_∅ follows from the same sub-sector decomposition with no
        // congruence exponents: thresholds empty, c₀ = 0
        for (d, n) in [(3i64, 1i64), (5, 1), (8, 0), (7, 2)] {
            let cd = ConeData::new(d, vec![], vec![0, d + 1 - n]);
            assert!(cone_gf(&cd).equals(&a_empty(d, n)), "d={} n={}", d, n);
        }
    }

    fn brute_force_series(
        cd: &ConeData,
        p: i64,
        amax: i64,
        order: usize,
    ) -> Vec<BigRational> {
        // 1/(p+1) + Σ_{a≥b≥1, a≤amax} |fiber|·p^{ad}·T^{ψ-exponent}
        let mut out =
            vec![BigRational::zero(); order + 1];
        out[0] = BigRational::new(BigInt::one(), BigInt::from(p + 1));
        for a in 1..=amax {
            for b in 1..=a {
                let texp = cd.psi_texp(a, b);
                assert!(texp >= 1, "realizable sector exponents are positive");
                if texp as usize > order {
                    continue;
                }
                let fiber = if a == b {
                    BigRational::one()
                } else {
                    BigRational::from(BigInt::from(p).pow((a - b) as u32))
                        * (BigRational::one()
                            - BigRational::new(BigInt::one(), BigInt::from(p)))
                };
                let weight = BigRational::from(BigInt::from(p).pow((a * cd.d) as u32));
                out[texp as usize] += fiber * weight;
            }
        }
        out
    }

    #[test]
    fn engine_matches_brute_force_summation() {
        let mut rng = StdRng::seed_from_u64(42);
        let mut tested = 0;
        while tested < 12 {
            // random realizable data: blocks with thresholds among {2,3}
            let n_odd = rng.gen_range(0..=1u32);
            let mut mult: Vec<Vec<u32>> = Vec::new();
            let mut degs: Vec<u32> = Vec::new();
            for _ in 0..rng.gen_range(1..=2) {
                let e = rng.gen_range(1..=3u32);
                mult.push(vec![e]);
                degs.push(1);
            }
            let md = MultiplicityData {
                multiplicities: mult,
                degrees: degs,
                odd_lengths: (0..n_odd).map(|_| 1).collect(),
            };
            if md.d() > 8 {
                continue;
            }
            let index_set: Vec<usize> = (0..md.multiplicities.len()).collect();
            let cd = cone_data(&md, &index_set).unwrap();
            for &p in &[3i64, 5] {
                let direct = brute_force_series(&cd, p, 12, 12);
                let series = cone_gf(&cd)
                    .series_at_x(&BigRational::from(BigInt::from(p)), 12)
                    .unwrap();
                // ψ's T-exponent is ≥ a, so a ≤ 12 covers every term
                for k in 0..=12 {
                    assert_eq!(series[k], direct[k], "p={} k={} cd={:?}", p, k, cd);
                }
            }
            tested += 1;
        }
    }

    #[test]
    fn sector_functional_equations() {
        // (p+1)·A_∅ and A_I − A_∅ both invert to −p·(themselves)
        let mut rng = StdRng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 10 {
            let n_odd = rng.gen_range(0..=2u32);
            let blocks = rng.gen_range(1..=3usize);
            let mut mult: Vec<Vec<u32>> = Vec::new();
            let mut degs: Vec<u32> = Vec::new();
            for _ in 0..blocks {
                let parts = rng.gen_range(1..=2usize);
                mult.push((0..parts).map(|_| rng.gen_range(1..=4u32)).collect());
                degs.push(rng.gen_range(1..=2u32));
            }
            let md = MultiplicityData {
                multiplicities: mult,
                degrees: degs,
                odd_lengths: (0..n_odd).map(|_| rng.gen_range(1..=2u32)).collect(),
            };
            // random nonempty index subset
            let index_set: Vec<usize> =
                (0..md.multiplicities.len()).filter(|_| rng.gen_bool(0.7)).collect();
            if index_set.is_empty() {
                continue;
            }
            let d = md.d();
            let n = md.odd_count();
            let cd = cone_data(&md, &index_set).unwrap();
            let deviation = cone_gf(&cd).sub(&a_empty(d, n));
            assert_eq!(
                deviation.functional_equation(),
                Some((-1, 1, 0)),
                "cd={:?}",
                cd
            );
            let b21 = GeoRatFun::one().add(&mono(1, 0));
            assert_eq!(
                b21.mul(&a_empty(d, n)).functional_equation(),
                Some((-1, 1, 0))
            );
            tested += 1;
        }
    }

    #[test]
    fn closed_form_displays() {
        // odd block r=2: (1+p⁵T⁵)/(1−p⁶T⁵)
        let a = odd_block_a(2).unwrap();
        let display = GeoRatFun::one().add(&mono(5, 5)).mul(&ray(6, 5));
        assert!(a.equals(&display));
        assert_eq!(odd_block_a(0).unwrap_err(), ConeError::BadParams("odd block needs r >= 1".into()));
        // even block r=e=1 at n=1: A = (1−X⁴Y⁴)/((1−X³Y³)(1−X²Y))
        let (base, coeff) = even_block_a(1, 1).unwrap();
        let a_at_one_root = base.add(&coeff);
        let display = GeoRatFun::one()
            .sub(&mono(4, 4))
            .mul(&ray(3, 3))
            .mul(&ray(2, 1));
        assert!(a_at_one_root.equals(&display));
        // parameter screens
        assert!(even_block_a(3, 2).is_err());
        assert!(curve_a_pair(1).is_err());
    }

    #[test]
    fn odd_block_matches_empty_sector_assembly() {
        // a single odd block has no congruence directions at all:
        // A = (X+1)·A_∅ with d = 2r+1, n = 1
        for r in 1..=3i64 {
            let a = odd_block_a(r as u32).unwrap();
            let b21 = GeoRatFun::one().add(&mono(1, 0));
            assert!(a.equals(&b21.mul(&a_empty(2 * r + 1, 1))));
        }
    }

    #[test]
    fn assembled_a_matches_closed_forms_at_primes() {
        // f = t, e = 1, r = 1: one root at every prime
        let md = MultiplicityData {
            multiplicities: vec![vec![1]],
            degrees: vec![1],
            odd_lengths: vec![],
        };
        let f_t = vec![0i64, 1];
        let (base, coeff) = even_block_a(1, 1).unwrap();
        for &p in &[3u64, 5, 7] {
            let assembled = assemble_a(&md, &[f_t.clone()], p).unwrap();
            let closed = base.add(&coeff); // n_{f,p} = 1
            assert!(assembled.equals(&closed), "p={}", p);
        }
        // f = t²+1 (block size 4, r = 2) at p ≡ 3 mod 4: no roots,
        // A = (X+1)A_∅
        let md = MultiplicityData {
            multiplicities: vec![vec![1]],
            degrees: vec![2],
            odd_lengths: vec![],
        };
        let f = vec![1i64, 0, 1];
        let (base, coeff) = even_block_a(2, 1).unwrap();
        for &p in &[3u64, 7, 11] {
            let assembled = assemble_a(&md, &[f.clone()], p).unwrap();
            assert!(assembled.equals(&base), "p={}", p);
        }
        // and at p ≡ 1 mod 4 both roots contribute
        for &p in &[5u64, 13] {
            let assembled = assemble_a(&md, &[f.clone()], p).unwrap();
            let closed = base.add(&coeff.scale(&BigRational::from(BigInt::from(2))));
            assert!(assembled.equals(&closed), "p={}", p);
        }
        // ramified prime is refused
        assert!(matches!(
            assemble_a(&md, &[f.clone()], 2),
            Err(ConeError::BadPrime(2, _))
        ));
    }

    #[test]
    fn curve_construction_verifies_all_identities() {
        for r in 2..=3u32 {
            let (a1, a2) = curve_a_construction(r).unwrap();
            let (d1, d2) = curve_a_pair(r).unwrap();
            assert!(a1.equals(&d1) && a2.equals(&d2));
            assert_eq!(a1.functional_equation(), Some((1, 3, 0)), "r={}", r);
            assert_eq!(a2.functional_equation(), Some((1, 4, 0)), "r={}", r);
        }
    }

    #[test]
    fn smooth_boundary_sum_matches_brute_force() {
        // Σ over {(a,b,c): a ≥ b, a ≥ c, all ≥ 1} of fiber·ψ with
        // ψ = p^{2ra}T^{(2r+1)a−2min(a,b)}, truncated; fibers drop one
        // (1−p^{-1})p^{gap} per strict inequality.
        for r in [2i64, 3] {
            let smooth_closed = mono(2 * r, 2 * r - 1)
                .mul(&GeoRatFun::one().sub(&mono(2 * r + 1, 2 * r + 1)))
                .mul(&ray(2 * r + 1, 2 * r - 1))
                .mul(&ray(2 * r + 2, 2 * r + 1));
            for &p in &[3i64, 5] {
                let order = 20usize;
                let mut direct = vec![BigRational::zero(); order + 1];
                let unit = BigRational::one()
                    - BigRational::new(BigInt::one(), BigInt::from(p));
                for a in 1..=10i64 {
                    for b in 1..=a {
                        for c in 1..=a {
                            let texp = (2 * r + 1) * a - 2 * a.min(b);
                            if texp as usize > order {
                                continue;
                            }
                            let mut fiber = BigRational::from(
                                BigInt::from(p).pow((2 * a - b - c) as u32),
                            );
                            if a > b {
                                fiber *= unit.clone();
                            }
                            if a > c {
                                fiber *= unit.clone();
                            }
                            if a == b && a == c {
                                fiber = BigRational::one();
                            } else if a == b {
                                fiber = BigRational::from(
                                    BigInt::from(p).pow((a - c) as u32),
                                ) * unit.clone();
                            } else if a == c {
                                fiber = BigRational::from(
                                    BigInt::from(p).pow((a - b) as u32),
                                ) * unit.clone();
                            }
                            let weight =
                                BigRational::from(BigInt::from(p).pow((2 * r * a) as u32));
                            direct[texp as usize] += fiber * weight;
                        }
                    }
                }
                let series = smooth_closed
                    .series_at_x(&BigRational::from(BigInt::from(p)), order)
                    .unwrap();
                // ψ's T-exponent is ≥ (2r−1)a ≥ 3a, so a ≤ 10 suffices
                for k in 0..=order {
                    assert_eq!(series[k], direct[k], "r={} p={} k={}", r, p, k);
                }
            }
        }
    }

    #[test]
    fn zeta_level_functional_equations() {
        let (w1, w2) = curve_zeta(3).unwrap();
        assert_eq!(w1.functional_equation(), Some((-1, 36, 15)));
        assert_eq!(w2.functional_equation(), Some((-1, 37, 15)));
        // display regression: the size-6 numerator and the paired factors
        assert_eq!(
            w1.numer().to_string(),
            "1 + X^6 Y^7 + X^7 Y^7 + X^12 Y^8 + X^13 Y^8 + X^19 Y^15"
        );
        assert_eq!(
            w2.numer().to_string(),
            "X^6 Y^5 - X^6 Y^7 + X^19 Y^13 - X^19 Y^15"
        );
    }

    #[test]
    fn blocks_to_multiplicities() {
        // t² + 1 squared? no — (t²+1)² needs coefficient vector of g=f²;
        // here: two blocks sharing f = t (r=1 e=1 and r=2 e=2) plus one
        // odd block
        let blocks = vec![
            BlockSpec::Even { coeffs: vec![0] },
            BlockSpec::Even {
                coeffs: vec![0, 0],
            },
            BlockSpec::Odd { r: 2 },
        ];
        let (md, polys) = multiplicity_from_blocks(&blocks).unwrap();
        assert_eq!(polys, vec![vec![0, 1]]);
        assert_eq!(md.multiplicities, vec![vec![1, 2]]);
        assert_eq!(md.degrees, vec![1]);
        assert_eq!(md.odd_lengths, vec![2]);
        assert_eq!(md.d(), 2 * 1 * 3 + 5);
        // t²+1 is kept distinct from t
        let blocks = vec![
            BlockSpec::Even { coeffs: vec![0] },
            BlockSpec::Even {
                coeffs: vec![0, 1],
            },
        ];
        let (md, polys) = multiplicity_from_blocks(&blocks).unwrap();
        assert_eq!(polys.len(), 2);
        assert_eq!(md.multiplicities, vec![vec![1], vec![1]]);
    }
}
