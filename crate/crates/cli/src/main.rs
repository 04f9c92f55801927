//! Command-line driver: parse a presentation file, run one of the
//! computation paths (direct enumeration, lattice walk, closed formula),
//! and print series tables or verification reports.
//!
//! Exit codes: 0 success, 1 input/parse error, 2 enumeration budget
//! exceeded, 3 unsupported family or excluded prime, 4 coefficient
//! mismatch between paths.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use nilzeta::building;
use nilzeta::cones::{self, ConeError};
use nilzeta::exec::ExecMode;
use nilzeta::liering::input::parse_presentation;
use nilzeta::liering::input::ParsedInput;
use nilzeta::liering::{self, BlockSpec, LieError, Presentation, Provenance};
use nilzeta::modcurves;
use nilzeta::GeoRatFun;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::path::PathBuf;
use std::process::exit;

const EXIT_PARSE: i32 = 1;
const EXIT_BUDGET: i32 = 2;
const EXIT_UNSUPPORTED: i32 = 3;
const EXIT_MISMATCH: i32 = 4;

const DEFAULT_BUDGET: u128 = 50_000_000;

#[derive(Parser)]
#[command(
    name = "nilzeta",
    version,
    about = "Local normal-subgroup zeta series of class-2 nilpotent Lie rings"
)]
struct Cli {
    /// Cap the number of worker threads (default: one per CPU)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output format for series tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Count ideals of p-power index by direct sublattice enumeration
    Oracle {
        /// Presentation file (TOML)
        input: PathBuf,
        /// Prime(s) to run at (repeatable)
        #[arg(short = 'p', long = "prime", required = true, value_parser = clap::value_parser!(u64).range(2..))]
        primes: Vec<u64>,
        /// Largest k: count indices up to p^k
        #[arg(short = 'K', long = "order", default_value_t = 4)]
        order: u32,
        /// Abort if the enumeration would visit more sublattices than this
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Walk lattice classes and print the weight series A(p,T) and the
    /// assembled zeta series
    Walk {
        input: PathBuf,
        #[arg(short = 'p', long = "prime", required = true, value_parser = clap::value_parser!(u64).range(2..))]
        primes: Vec<u64>,
        /// Truncation order of the series in T = p^{-s}
        #[arg(short = 'K', long = "order", default_value_t = 6)]
        order: u32,
    },
    /// Print the closed rational form for a classified family, with its
    /// series (symbolic in p without -p, numeric with -p)
    Formula {
        input: PathBuf,
        #[arg(short = 'p', long = "prime", value_parser = clap::value_parser!(u64).range(2..))]
        primes: Vec<u64>,
        #[arg(short = 'K', long = "order", default_value_t = 6)]
        order: u32,
    },
    /// Report the functional equations satisfied by the closed forms
    Funeq {
        input: PathBuf,
        /// Needed for families whose closed form is assembled per prime
        #[arg(short = 'p', long = "prime", value_parser = clap::value_parser!(u64).range(2..))]
        primes: Vec<u64>,
    },
    /// Count points of the associated plane curve over F_p
    Curve {
        input: PathBuf,
        #[arg(short = 'p', long = "prime", required = true, value_parser = clap::value_parser!(u64).range(2..))]
        primes: Vec<u64>,
    },
    /// Run every available path and compare coefficients
    Compare {
        input: PathBuf,
        #[arg(short = 'p', long = "prime", required = true, value_parser = clap::value_parser!(u64).range(2..))]
        primes: Vec<u64>,
        #[arg(short = 'K', long = "order", default_value_t = 4)]
        order: u32,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        /// Corrupt the formula path (negative control for the comparator)
        #[arg(long, hide = true)]
        inject_formula_error: bool,
    },
    /// Print the primes excluded by the closed forms for this input
    BadPrimes {
        input: PathBuf,
        /// Upper bound of the smoothness scan for curve inputs
        #[arg(long, default_value_t = 200)]
        scan_bound: u64,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{}", e);
                exit(0);
            }
            _ => {
                eprint!("{}", e);
                exit(EXIT_PARSE);
            }
        },
    };
    if let Some(jobs) = cli.jobs {
        // best effort: the pool can only be sized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    exit(run(&cli));
}

fn run(cli: &Cli) -> i32 {
    let mode = ExecMode::auto();
    match &cli.command {
        Command::Oracle {
            input,
            primes,
            order,
            budget,
        } => cmd_oracle(input, primes, *order, *budget, cli.format, mode),
        Command::Walk {
            input,
            primes,
            order,
        } => cmd_walk(input, primes, *order, cli.format, mode),
        Command::Formula {
            input,
            primes,
            order,
        } => cmd_formula(input, primes, *order, cli.format, mode),
        Command::Funeq { input, primes } => cmd_funeq(input, primes),
        Command::Curve { input, primes } => cmd_curve(input, primes, mode),
        Command::Compare {
            input,
            primes,
            order,
            budget,
            inject_formula_error,
        } => cmd_compare(
            input,
            primes,
            *order,
            *budget,
            cli.format,
            mode,
            *inject_formula_error,
        ),
        Command::BadPrimes { input, scan_bound } => cmd_bad_primes(input, *scan_bound),
    }
}

/// Read and parse the input file; on failure print a diagnostic and
/// return the parse exit code.
fn load(path: &PathBuf) -> Result<ParsedInput, i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", path.display(), e);
            return Err(EXIT_PARSE);
        }
    };
    match parse_presentation(&text) {
        Ok(parsed) => {
            if parsed.raw_matrix {
                eprintln!(
                    "note: raw matrix input; counts assume the presented generators \
                     span the ring with no torsion normalization, and no closed form \
                     is attached"
                );
            }
            Ok(parsed)
        }
        Err(e) => {
            eprintln!("error: {}: {}", path.display(), e);
            Err(EXIT_PARSE)
        }
    }
}

fn print_series(format: Format, title: &str, rows: &[(u32, String)]) {
    println!("# {}", title);
    match format {
        Format::Text => {
            println!("k  coefficient");
            for (k, v) in rows {
                println!("{}  {}", k, v);
            }
        }
        Format::Csv => {
            println!("k,coefficient");
            for (k, v) in rows {
                println!("{},{}", k, v);
            }
        }
    }
}

fn bigint_rows(coeffs: &[BigInt]) -> Vec<(u32, String)> {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, v)| (k as u32, v.to_string()))
        .collect()
}

/// Evaluate a closed form's series at a numeric prime; coefficients of an
/// ideal-counting series are integers by construction.
fn integer_series_at(w: &GeoRatFun, p: u64, order: u32) -> Result<Vec<BigInt>, String> {
    let x = BigRational::from(BigInt::from(p));
    let series = w
        .series_at_x(&x, order as usize)
        .map_err(|e| e.to_string())?;
    series
        .into_iter()
        .map(|c| {
            if c.is_integer() {
                Ok(c.to_integer())
            } else {
                Err(format!("non-integer series coefficient {}", c))
            }
        })
        .collect()
}

fn warn_if_bad_prime(pres: &Presentation, p: u64) {
    if let Some(bad) = pres.bad_primes(p.max(64)) {
        if bad.contains(&p) {
            eprintln!(
                "warning: p={} is excluded for this input; closed forms do not apply",
                p
            );
        }
    }
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(
    input: &PathBuf,
    primes: &[u64],
    order: u32,
    budget: u128,
    format: Format,
    mode: ExecMode,
) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    for &p in primes {
        match parsed.presentation.oracle_count(p as i64, order, budget, mode) {
            Ok(counts) => {
                print_series(format, &format!("oracle p={}", p), &bigint_rows(&counts));
            }
            Err(LieError::BudgetExceeded { needed, budget }) => {
                eprintln!(
                    "error: enumeration needs {} sublattices, budget is {} \
                     (raise --budget or lower --order)",
                    needed, budget
                );
                return EXIT_BUDGET;
            }
            Err(e) => {
                eprintln!("error: {}", e);
                return EXIT_PARSE;
            }
        }
    }
    0
}

// ---------------------------------------------------------------------------
// walk
// ---------------------------------------------------------------------------

fn cmd_walk(input: &PathBuf, primes: &[u64], order: u32, format: Format, mode: ExecMode) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let pres = &parsed.presentation;
    if !pres.adjoint_injective() {
        eprintln!(
            "warning: a generator brackets to zero with everything; the walk \
             is reported as-is but the assembled zeta does not count ideals"
        );
    }
    for &p in primes {
        warn_if_bad_prime(pres, p);
        let aseries = building::building_series(pres, p as i64, order, mode);
        print_series(
            format,
            &format!("A-series p={}", p),
            &bigint_rows(&aseries.coeffs),
        );
        let zeta = building::assemble_zeta_series(&aseries, pres.d, pres.dprime);
        print_series(format, &format!("zeta-series p={}", p), &bigint_rows(&zeta));
    }
    0
}

// ---------------------------------------------------------------------------
// closed forms shared by formula / funeq / compare
// ---------------------------------------------------------------------------

/// A closed form: a prime-independent part, plus an optional second part
/// scaled by a per-prime count (roots of f, or points of the curve).
struct ClosedForm {
    /// what multiplies the second part, e.g. "n = #roots of f mod p"
    multiplier: Option<&'static str>,
    a_base: GeoRatFun,
    a_coeff: Option<GeoRatFun>,
    zeta_base: GeoRatFun,
    zeta_coeff: Option<GeoRatFun>,
}

/// The per-prime multiplier of the two-part closed forms.
fn multiplier_at(pres: &Presentation, p: u64, mode: ExecMode) -> Result<BigInt, String> {
    match &pres.provenance {
        Some(Provenance::Blocks(blocks)) => {
            let (_, polys) = cones::multiplicity_from_blocks(blocks).map_err(|e| e.to_string())?;
            assert_eq!(polys.len(), 1, "two-part form has a single polynomial");
            let n = modcurves::n_fp(&polys[0], p).map_err(|e| e.to_string())?;
            Ok(BigInt::from(n))
        }
        Some(Provenance::Curve { .. }) => {
            if let Some(bad) = pres.bad_primes(p.max(64)) {
                if bad.contains(&p) {
                    return Err(format!("prime {} is excluded for this curve family", p));
                }
            }
            let cs = pres.curve_spec().expect("curve provenance has a spec");
            Ok(BigInt::from(modcurves::count_points_p2(&cs, p, mode)))
        }
        _ => unreachable!("multiplier is only defined for classified families"),
    }
}

/// Closed form for the presentation, when its provenance identifies a
/// classified family that is uniform or two-part in the prime.
fn closed_form(pres: &Presentation) -> Result<ClosedForm, String> {
    match &pres.provenance {
        None => Err("raw matrix input has no closed form; use oracle or walk".into()),
        Some(Provenance::Blocks(blocks)) => match blocks.as_slice() {
            [BlockSpec::Odd { r }] => {
                let a = cones::odd_block_a(*r).map_err(|e| e.to_string())?;
                let zeta = building::assemble_zeta(&a, pres.d, pres.dprime);
                Ok(ClosedForm {
                    multiplier: None,
                    a_base: a,
                    a_coeff: None,
                    zeta_base: zeta,
                    zeta_coeff: None,
                })
            }
            [BlockSpec::Even { coeffs }] => {
                let g = liering::even_block_poly(coeffs);
                let (_, e) = liering::primary_decompose(&g)
                    .ok_or("even block form is not a primary power")?;
                let (base, coeff) =
                    cones::even_block_a(coeffs.len() as u32, e).map_err(|e| e.to_string())?;
                Ok(ClosedForm {
                    multiplier: Some("n = number of distinct roots of f mod p"),
                    zeta_base: building::assemble_zeta(&base, pres.d, pres.dprime),
                    zeta_coeff: Some(building::assemble_zeta(&coeff, pres.d, pres.dprime)),
                    a_base: base,
                    a_coeff: Some(coeff),
                })
            }
            _ => Err(
                "multi-block sums have no prime-uniform closed form; \
                 give a prime (-p) to assemble one per prime"
                    .into(),
            ),
        },
        Some(Provenance::Curve { .. }) => {
            let r = (pres.d / 2) as u32;
            let (a1, a2) = cones::curve_a_pair(r).map_err(|e| e.to_string())?;
            let (w1, w2) = cones::curve_zeta(r).map_err(|e| e.to_string())?;
            Ok(ClosedForm {
                multiplier: Some("|C(F_p)| = number of curve points over F_p"),
                a_base: a1,
                a_coeff: Some(a2),
                zeta_base: w1,
                zeta_coeff: Some(w2),
            })
        }
    }
}

/// The assembled A(p,T) of a block-sum presentation at a prime: an
/// identity in (X,Y) whose direction counts are taken at p.
fn assembled_a_at(pres: &Presentation, p: u64) -> Result<GeoRatFun, String> {
    let blocks = match &pres.provenance {
        Some(Provenance::Blocks(b)) => b,
        _ => return Err("not a block-sum presentation".into()),
    };
    let (md, polys) = cones::multiplicity_from_blocks(blocks).map_err(|e| e.to_string())?;
    if md.multiplicities.is_empty() {
        // only odd blocks: every direction is unconstrained
        let b21 = GeoRatFun::one().add(&GeoRatFun::monomial(BigRational::one(), 1, 0));
        return Ok(b21.mul(&cones::a_empty(md.d(), md.odd_count())));
    }
    cones::assemble_a(&md, &polys, p).map_err(|e| match e {
        ConeError::BadPrime(p, why) => format!("prime {} is excluded: {}", p, why),
        other => other.to_string(),
    })
}

/// The zeta series of the closed-form path at a numeric prime.  With
/// `inject` the formula is deliberately corrupted (negative control):
/// for a single odd block the denominator exponent is altered, otherwise
/// every coefficient is scaled by p.
fn formula_zeta_series(
    pres: &Presentation,
    p: u64,
    order: u32,
    mode: ExecMode,
    inject: bool,
) -> Result<Vec<BigInt>, String> {
    let corrupt = |w: GeoRatFun| -> GeoRatFun {
        if inject {
            w.mul(&GeoRatFun::monomial(BigRational::one(), 1, 0))
        } else {
            w
        }
    };
    match &pres.provenance {
        None => Err("raw matrix input has no closed form".into()),
        Some(Provenance::Blocks(blocks)) => {
            if let [BlockSpec::Odd { r }] = blocks.as_slice() {
                let ri = *r as i64;
                let a = if inject {
                    // altered exponent: 1/(1 - p^{2r+2}T^{2r+1}) becomes
                    // 1/(1 - p^{2r+3}T^{2r+1})
                    GeoRatFun::one()
                        .add(&GeoRatFun::monomial(BigRational::one(), 2 * ri + 1, 2 * ri + 1))
                        .mul(&GeoRatFun::inv_geom(2 * ri + 3, 2 * ri + 1))
                } else {
                    cones::odd_block_a(*r).map_err(|e| e.to_string())?
                };
                let w = building::assemble_zeta(&a, pres.d, pres.dprime);
                return integer_series_at(&w, p, order);
            }
            let a = assembled_a_at(pres, p)?;
            let w = corrupt(building::assemble_zeta(&a, pres.d, pres.dprime));
            integer_series_at(&w, p, order)
        }
        Some(Provenance::Curve { .. }) => {
            let cf = closed_form(pres)?;
            let count = multiplier_at(pres, p, mode)?;
            let total = cf
                .zeta_base
                .add(&cf.zeta_coeff.expect("curve form has two parts").scale(
                    &BigRational::from(count),
                ));
            integer_series_at(&corrupt(total), p, order)
        }
    }
}

// ---------------------------------------------------------------------------
// formula
// ---------------------------------------------------------------------------

fn cmd_formula(
    input: &PathBuf,
    primes: &[u64],
    order: u32,
    format: Format,
    mode: ExecMode,
) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let pres = &parsed.presentation;
    match closed_form(pres) {
        Ok(cf) => {
            match cf.multiplier {
                None => {
                    println!("# closed form");
                    println!("A(p,T) = {}", cf.a_base);
                    println!("zeta(p,T) = {}", cf.zeta_base);
                }
                Some(desc) => {
                    println!("# closed form: zeta = uniform + m * second, {}", desc);
                    println!("A uniform = {}", cf.a_base);
                    println!("A second = {}", cf.a_coeff.as_ref().unwrap());
                    println!("zeta uniform = {}", cf.zeta_base);
                    println!("zeta second = {}", cf.zeta_coeff.as_ref().unwrap());
                }
            }
            if primes.is_empty() {
                // symbolic series: integer Laurent polynomials in p
                let parts: Vec<(&str, &GeoRatFun)> = match &cf.zeta_coeff {
                    None => vec![("zeta series, coefficients in p", &cf.zeta_base)],
                    Some(c) => vec![
                        ("zeta uniform series, coefficients in p", &cf.zeta_base),
                        ("zeta second series, coefficients in p", c),
                    ],
                };
                for (title, w) in parts {
                    match w.series_in_t(order as usize) {
                        Ok(s) => {
                            let rows: Vec<(u32, String)> = s
                                .coeffs()
                                .iter()
                                .enumerate()
                                .map(|(k, c)| (k as u32, c.to_string()))
                                .collect();
                            print_series(format, title, &rows);
                        }
                        Err(e) => {
                            eprintln!("error: {}", e);
                            return EXIT_UNSUPPORTED;
                        }
                    }
                }
            } else {
                for &p in primes {
                    let m = match &cf.zeta_coeff {
                        None => None,
                        Some(_) => match multiplier_at(pres, p, mode) {
                            Ok(m) => Some(m),
                            Err(e) => {
                                eprintln!("error: {}", e);
                                return EXIT_UNSUPPORTED;
                            }
                        },
                    };
                    let total = match (&cf.zeta_coeff, &m) {
                        (Some(c), Some(m)) => cf
                            .zeta_base
                            .add(&c.scale(&BigRational::from(m.clone()))),
                        _ => cf.zeta_base.clone(),
                    };
                    let series = match integer_series_at(&total, p, order) {
                        Ok(s) => s,
                        Err(e) => {
                            eprintln!("error: {}", e);
                            return EXIT_UNSUPPORTED;
                        }
                    };
                    let title = match m {
                        Some(m) => format!("zeta series p={} (m = {})", p, m),
                        None => format!("zeta series p={}", p),
                    };
                    print_series(format, &title, &bigint_rows(&series));
                }
            }
            0
        }
        Err(_) if matches!(&pres.provenance, Some(Provenance::Blocks(_))) && !primes.is_empty() => {
            // block sums assemble per prime
            for &p in primes {
                let a = match assembled_a_at(pres, p) {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("error: {}", e);
                        return EXIT_UNSUPPORTED;
                    }
                };
                let w = building::assemble_zeta(&a, pres.d, pres.dprime);
                println!("# closed form assembled at p={}", p);
                println!("A = {}", a);
                println!("zeta = {}", w);
                match integer_series_at(&w, p, order) {
                    Ok(series) => print_series(
                        format,
                        &format!("zeta series p={}", p),
                        &bigint_rows(&series),
                    ),
                    Err(e) => {
                        eprintln!("error: {}", e);
                        return EXIT_UNSUPPORTED;
                    }
                }
            }
            0
        }
        Err(msg) => {
            eprintln!("error: {}", msg);
            EXIT_UNSUPPORTED
        }
    }
}

// ---------------------------------------------------------------------------
// funeq
// ---------------------------------------------------------------------------

fn funeq_line(label: &str, f: &GeoRatFun) -> String {
    match f.functional_equation() {
        Some((sign, a, b)) => {
            let s = if sign < 0 { "-" } else { "+" };
            format!(
                "{}: (sign, a, b) = ({}1, {}, {})   [F(1/p,1/T) = {}p^{} T^{} F(p,T)]",
                label, s, a, b, s, a, b
            )
        }
        None => format!("{}: none", label),
    }
}

fn cmd_funeq(input: &PathBuf, primes: &[u64]) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let pres = &parsed.presentation;
    match closed_form(pres) {
        Ok(cf) => {
            println!("# functional equations under (p,T) -> (1/p,1/T)");
            match (&cf.a_coeff, &cf.zeta_coeff) {
                (None, None) => {
                    println!("{}", funeq_line("A", &cf.a_base));
                    println!("{}", funeq_line("zeta", &cf.zeta_base));
                }
                (Some(ac), Some(zc)) => {
                    println!("{}", funeq_line("A uniform", &cf.a_base));
                    println!("{}", funeq_line("A second", ac));
                    println!("{}", funeq_line("zeta uniform", &cf.zeta_base));
                    println!("{}", funeq_line("zeta second", zc));
                    match &pres.provenance {
                        Some(Provenance::Curve { .. }) => println!(
                            "note: with |C(F_p)| -> p^-1 |C(F_p)| the two parts combine \
                             to a single equation with the uniform exponents"
                        ),
                        _ => println!(
                            "note: the root count m is held fixed; both parts share \
                             the same equation, so the sum satisfies it too"
                        ),
                    }
                }
                _ => unreachable!("closed forms are one- or two-part"),
            }
            0
        }
        Err(_) if matches!(&pres.provenance, Some(Provenance::Blocks(_))) && !primes.is_empty() => {
            println!("# functional equations under (p,T) -> (1/p,1/T)");
            for &p in primes {
                let a = match assembled_a_at(pres, p) {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("error: {}", e);
                        return EXIT_UNSUPPORTED;
                    }
                };
                let w = building::assemble_zeta(&a, pres.d, pres.dprime);
                println!("{}", funeq_line(&format!("A assembled at p={}", p), &a));
                println!("{}", funeq_line(&format!("zeta assembled at p={}", p), &w));
            }
            0
        }
        Err(msg) => {
            eprintln!("error: {}", msg);
            EXIT_UNSUPPORTED
        }
    }
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

fn cmd_curve(input: &PathBuf, primes: &[u64], mode: ExecMode) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let pres = &parsed.presentation;
    let cs = match (&pres.provenance, pres.curve_spec()) {
        (Some(Provenance::Curve { .. }), Some(cs)) => cs,
        _ => {
            eprintln!("error: curve counting needs an R-form input");
            return EXIT_PARSE;
        }
    };
    for &p in primes {
        let count = modcurves::count_points_p2(&cs, p, mode);
        let smooth = modcurves::is_smooth_mod_p(&cs, p);
        println!(
            "p={}: |C(F_p)| = {}, {}",
            p,
            count,
            if smooth { "smooth" } else { "singular" }
        );
    }
    0
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    input: &PathBuf,
    primes: &[u64],
    order: u32,
    budget: u128,
    format: Format,
    mode: ExecMode,
    inject: bool,
) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let pres = &parsed.presentation;
    let mut any_mismatch = false;
    for &p in primes {
        let mut paths: Vec<(&str, Vec<BigInt>)> = Vec::new();
        match pres.oracle_count(p as i64, order, budget, mode) {
            Ok(counts) => paths.push(("oracle", counts)),
            Err(LieError::BudgetExceeded { needed, .. }) => {
                eprintln!(
                    "note: oracle skipped at p={} (needs {} sublattices, budget {})",
                    p, needed, budget
                );
            }
            Err(e) => {
                eprintln!("error: {}", e);
                return EXIT_PARSE;
            }
        }
        if pres.adjoint_injective() {
            let a = building::building_series(pres, p as i64, order, mode);
            paths.push((
                "walk",
                building::assemble_zeta_series(&a, pres.d, pres.dprime),
            ));
        } else {
            eprintln!("note: walk skipped (degenerate bracket pairing)");
        }
        match formula_zeta_series(pres, p, order, mode, inject) {
            Ok(series) => paths.push(("formula", series)),
            Err(msg) => eprintln!("note: formula skipped at p={}: {}", p, msg),
        }
        if paths.len() < 2 {
            eprintln!(
                "error: fewer than two computation paths available at p={}",
                p
            );
            return EXIT_UNSUPPORTED;
        }
        let names: Vec<&str> = paths.iter().map(|(n, _)| *n).collect();
        println!("# compare p={} (paths: {})", p, names.join(", "));
        let header = std::iter::once("k".to_string())
            .chain(names.iter().map(|n| n.to_string()))
            .collect::<Vec<_>>();
        let sep = match format {
            Format::Text => "  ",
            Format::Csv => ",",
        };
        println!("{}", header.join(sep));
        let mut first_bad: Option<u32> = None;
        for k in 0..=order as usize {
            let vals: Vec<&BigInt> = paths.iter().map(|(_, v)| &v[k]).collect();
            let agree = vals.windows(2).all(|w| w[0] == w[1]);
            let mut row: Vec<String> = vec![k.to_string()];
            row.extend(vals.iter().map(|v| v.to_string()));
            if !agree {
                row.push("<< mismatch".to_string());
                if first_bad.is_none() {
                    first_bad = Some(k as u32);
                }
            }
            println!("{}", row.join(sep));
        }
        match first_bad {
            None => println!("verdict p={}: agree", p),
            Some(k) => {
                println!("verdict p={}: MISMATCH (first at k={})", p, k);
                any_mismatch = true;
            }
        }
    }
    if any_mismatch {
        EXIT_MISMATCH
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// bad-primes
// ---------------------------------------------------------------------------

fn cmd_bad_primes(input: &PathBuf, scan_bound: u64) -> i32 {
    let parsed = match load(input) {
        Ok(x) => x,
        Err(code) => return code,
    };
    match parsed.presentation.bad_primes(scan_bound) {
        Some(set) => {
            let list: Vec<String> = set.iter().map(|p| p.to_string()).collect();
            println!("bad primes (scan bound {}): {}", scan_bound, list.join(" "));
        }
        None => println!("bad primes: unknown (no provenance attached to the input)"),
    }
    0
}
