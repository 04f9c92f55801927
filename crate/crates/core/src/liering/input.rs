//! TOML input format for presentations.
//!
//! A file declares `dprime` and exactly one of:
//!   * `blocks`  — a list of classified blocks, each either
//!                 `{ type = "odd", r = 2 }` or
//!                 `{ type = "even", coeffs = [a1, ..., ar] }` (needs dprime = 2);
//!   * `matrix`  — a d×d array of length-dprime integer vectors, the
//!                 y-coefficients of an antisymmetric matrix of linear forms;
//!   * `R`       — an r×r array of length-3 vectors (needs dprime = 3),
//!                 doubled hyperbolically into a 4r-generator presentation.
//!
//! Raw `matrix` inputs carry no provenance; downstream consumers warn that
//! torsion-freeness of the quotient is the caller's responsibility.

use super::{
    block_even, block_odd, direct_sum, from_r, LieError, LinearForm, LinearFormMatrix,
    Presentation,
};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("TOML parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid presentation: {0}")]
    Invalid(String),
    #[error("bad block data: {0}")]
    Block(#[from] LieError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    dprime: usize,
    blocks: Option<Vec<RawBlock>>,
    matrix: Option<Vec<Vec<Vec<i64>>>>,
    #[serde(rename = "R")]
    r_matrix: Option<Vec<Vec<Vec<i64>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawBlock {
    Odd { r: u32 },
    Even { coeffs: Vec<i64> },
}

/// A parsed presentation plus whether it came from a raw matrix (in which
/// case torsion-freeness was not certified by construction).
#[derive(Debug, Clone)]
pub struct ParsedInput {
    pub presentation: Presentation,
    pub raw_matrix: bool,
}

fn forms_matrix(
    rows: &[Vec<Vec<i64>>],
    dprime: usize,
    antisymmetric: bool,
    what: &str,
) -> Result<LinearFormMatrix, InputError> {
    let d = rows.len();
    if d == 0 {
        return Err(InputError::Invalid(format!("{} must be nonempty", what)));
    }
    let mut m = LinearFormMatrix::zero(d, dprime, antisymmetric);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(InputError::Invalid(format!(
                "{} row {} has {} entries, expected {}",
                what,
                i + 1,
                row.len(),
                d
            )));
        }
        for (j, v) in row.iter().enumerate() {
            if v.len() != dprime {
                return Err(InputError::Invalid(format!(
                    "{} entry ({}, {}) has {} coefficients, expected dprime = {}",
                    what,
                    i + 1,
                    j + 1,
                    v.len(),
                    dprime
                )));
            }
            m.set(i, j, LinearForm { coeffs: v.clone() });
        }
    }
    if antisymmetric && !m.check_antisymmetric() {
        return Err(InputError::Invalid(format!(
            "{} must be antisymmetric with zero diagonal",
            what
        )));
    }
    Ok(m)
}

/// Parse a presentation from TOML text.
pub fn parse_presentation(text: &str) -> Result<ParsedInput, InputError> {
    let raw: RawInput = toml::from_str(text)?;
    let given = [
        raw.blocks.is_some(),
        raw.matrix.is_some(),
        raw.r_matrix.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given != 1 {
        return Err(InputError::Invalid(
            "exactly one of `blocks`, `matrix`, `R` must be given".into(),
        ));
    }
    if let Some(blocks) = raw.blocks {
        if raw.dprime != 2 {
            return Err(InputError::Invalid(
                "block presentations require dprime = 2".into(),
            ));
        }
        if blocks.is_empty() {
            return Err(InputError::Invalid("`blocks` must be nonempty".into()));
        }
        let mut parts = Vec::with_capacity(blocks.len());
        for b in blocks {
            parts.push(match b {
                RawBlock::Odd { r } => {
                    if r == 0 {
                        return Err(InputError::Invalid("odd block needs r >= 1".into()));
                    }
                    block_odd(r)
                }
                RawBlock::Even { coeffs } => block_even(&coeffs)?,
            });
        }
        let presentation = direct_sum(&parts)?;
        return Ok(ParsedInput {
            presentation,
            raw_matrix: false,
        });
    }
    if let Some(rows) = raw.matrix {
        let m = forms_matrix(&rows, raw.dprime, true, "matrix")?;
        let presentation = Presentation::new(m, None);
        return Ok(ParsedInput {
            presentation,
            raw_matrix: true,
        });
    }
    let rows = raw.r_matrix.expect("checked above");
    if raw.dprime != 3 {
        return Err(InputError::Invalid(
            "R presentations require dprime = 3".into(),
        ));
    }
    if rows.len() < 2 {
        return Err(InputError::Invalid("R must be at least 2x2".into()));
    }
    let m = forms_matrix(&rows, 3, false, "R")?;
    let presentation = from_r(m);
    Ok(ParsedInput {
        presentation,
        raw_matrix: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liering::{BlockSpec, Provenance};

    #[test]
    fn parses_blocks() {
        let text = r#"
dprime = 2
blocks = [
  { type = "odd", r = 1 },
  { type = "even", coeffs = [0, 1] },
]
"#;
        let parsed = parse_presentation(text).unwrap();
        assert!(!parsed.raw_matrix);
        let p = parsed.presentation;
        assert_eq!((p.d, p.dprime), (3 + 4, 2));
        match &p.provenance {
            Some(Provenance::Blocks(b)) => {
                assert_eq!(b.len(), 2);
                assert_eq!(b[0], BlockSpec::Odd { r: 1 });
                assert_eq!(
                    b[1],
                    BlockSpec::Even {
                        coeffs: vec![0, 1]
                    }
                );
            }
            _ => panic!("expected block provenance"),
        }
    }

    #[test]
    fn parses_raw_matrix() {
        let text = r#"
dprime = 2
matrix = [
  [[0, 0], [0, 1], [0, 0]],
  [[0, -1], [0, 0], [1, 0]],
  [[0, 0], [-1, 0], [0, 0]],
]
"#;
        let parsed = parse_presentation(text).unwrap();
        assert!(parsed.raw_matrix);
        assert_eq!((parsed.presentation.d, parsed.presentation.dprime), (3, 2));
        assert!(parsed.presentation.provenance.is_none());
    }

    #[test]
    fn parses_r_matrix() {
        let text = r#"
dprime = 3
R = [
  [[1, 0, 0], [0, 1, 0]],
  [[0, 1, 0], [0, 0, 1]],
]
"#;
        let parsed = parse_presentation(text).unwrap();
        let p = parsed.presentation;
        assert_eq!((p.d, p.dprime), (4, 3));
        assert!(p.curve_spec().is_some());
    }

    #[test]
    fn rejects_bad_inputs() {
        // not antisymmetric
        let text = r#"
dprime = 2
matrix = [
  [[0, 0], [0, 1]],
  [[0, 1], [0, 0]],
]
"#;
        assert!(matches!(
            parse_presentation(text),
            Err(InputError::Invalid(_))
        ));
        // wrong vector length
        let text = r#"
dprime = 2
matrix = [
  [[0, 0], [0, 1, 5]],
  [[0, -1], [0, 0]],
]
"#;
        assert!(parse_presentation(text).is_err());
        // both blocks and matrix
        let text = r#"
dprime = 2
blocks = [{ type = "odd", r = 1 }]
matrix = [[[0, 0]]]
"#;
        assert!(parse_presentation(text).is_err());
        // missing dprime entirely
        assert!(matches!(
            parse_presentation("blocks = []"),
            Err(InputError::Toml(_))
        ));
        // blocks with wrong dprime
        let text = r#"
dprime = 3
blocks = [{ type = "odd", r = 1 }]
"#;
        assert!(parse_presentation(text).is_err());
        // R with wrong dprime
        let text = r#"
dprime = 2
R = [[[1, 0, 0], [0, 1, 0]], [[0, 1, 0], [0, 0, 1]]]
"#;
        assert!(parse_presentation(text).is_err());
        // unknown field
        let text = r#"
dprime = 2
blocks = [{ type = "odd", r = 1 }]
extra = 5
"#;
        assert!(matches!(
            parse_presentation(text),
            Err(InputError::Toml(_))
        ));
    }
}
