//! Exact computation of local zeta functions counting ideals of finite index
//! in nilpotent Lie rings of class two.
//!
//! The library offers three mutually independent routes to the same power
//! series and cross-checks them:
//!
//! * a brute-force oracle that enumerates sublattices in Hermite normal form
//!   and filters them through the ideal condition ([`liering`]),
//! * a walk over homothety classes of full lattices in the derived subring,
//!   weighting each vertex by two lattice-index invariants ([`building`]),
//! * closed-form bivariate rational functions assembled from cone generating
//!   functions and root/point counts over finite fields ([`cones`],
//!   [`modcurves`]), manipulated exactly by [`ratfun`].
//!
//! All arithmetic is exact: arbitrary-precision integers and rationals, no
//! floating point anywhere.

pub mod exec;
pub mod building;
pub mod cones;
pub mod intlat;
pub mod liering;
pub mod modcurves;
pub mod ratfun;
pub mod sympoly;

pub use ratfun::{BivarPoly, GeoRatFun, LaurentX, RatFunError, SeriesInT};
