//! Matrix Market coordinate reader.
//!
//! Supports `real`, `integer` and `pattern` fields with `general`,
//! `symmetric` and `skew-symmetric` symmetry. Indices are 1-based on disk.
//! Symmetric storage is expanded, pattern entries become `1.0`, and
//! duplicate coordinates are summed.

use super::{CooMatrix, MatrixError};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum MarketError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported matrix kind: {0}")]
    Unsupported(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: entry ({row}, {col}) outside {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        line: usize,
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_header(line: &str) -> Result<(Field, Symmetry), MarketError> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(MarketError::MalformedHeader(line.trim().to_string()));
    }
    if tokens[1] != "matrix" {
        return Err(MarketError::MalformedHeader(format!("object `{}`", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(MarketError::Unsupported(format!("`{}` storage", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        "complex" => return Err(MarketError::Unsupported("complex field".into())),
        other => return Err(MarketError::MalformedHeader(format!("field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => return Err(MarketError::Unsupported("hermitian symmetry".into())),
        other => return Err(MarketError::MalformedHeader(format!("symmetry `{other}`"))),
    };
    Ok((field, symmetry))
}

fn parse_usize(token: Option<&str>, line: usize, what: &str) -> Result<usize, MarketError> {
    let token = token.ok_or_else(|| MarketError::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    token.parse().map_err(|_| MarketError::Parse {
        line,
        message: format!("invalid {what} `{token}`"),
    })
}

/// Parses Matrix Market text into a sorted, duplicate-free COO matrix.
pub fn parse_matrix_market<R: Read>(input: R) -> Result<CooMatrix, MarketError> {
    let mut lines = BufReader::new(input).lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(MarketError::MalformedHeader("empty input".into())),
    };
    let (field, symmetry) = parse_header(&header)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut found = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let Some((nrows, ncols, _)) = size else {
            let nrows = parse_usize(tokens.next(), lineno, "row count")?;
            let ncols = parse_usize(tokens.next(), lineno, "column count")?;
            let nnz = parse_usize(tokens.next(), lineno, "entry count")?;
            if symmetry != Symmetry::General && nrows != ncols {
                return Err(MarketError::MalformedHeader(format!(
                    "symmetric matrix must be square, got {nrows}x{ncols}"
                )));
            }
            size = Some((nrows, ncols, nnz));
            triplets.reserve(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
            continue;
        };
        let row = parse_usize(tokens.next(), lineno, "row index")?;
        let col = parse_usize(tokens.next(), lineno, "column index")?;
        if row == 0 || col == 0 || row > nrows || col > ncols {
            return Err(MarketError::IndexOutOfRange {
                line: lineno,
                row,
                col,
                nrows,
                ncols,
            });
        }
        let value = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => {
                let token = tokens.next().ok_or_else(|| MarketError::Parse {
                    line: lineno,
                    message: "missing value".into(),
                })?;
                let v: f64 = token.parse().map_err(|_| MarketError::Parse {
                    line: lineno,
                    message: format!("invalid value `{token}`"),
                })?;
                if !v.is_finite() {
                    return Err(MarketError::Parse {
                        line: lineno,
                        message: format!("non-finite value `{token}`"),
                    });
                }
                v
            }
        };
        let (r, c) = (row - 1, col - 1);
        triplets.push((r, c, value));
        if r != c {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((c, r, value)),
                Symmetry::SkewSymmetric => triplets.push((c, r, -value)),
            }
        }
        found += 1;
    }

    let (nrows, ncols, nnz) =
        size.ok_or_else(|| MarketError::MalformedHeader("missing size line".into()))?;
    if found != nnz {
        return Err(MarketError::EntryCount {
            expected: nnz,
            found,
        });
    }
    Ok(CooMatrix::from_triplets(nrows, ncols, triplets)?)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CooMatrix, MarketError> {
    parse_matrix_market(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n";
        let m = parse_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(
            m.triplets().collect::<Vec<_>>(),
            vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]
        );
    }

    #[test]
    fn symmetric_expansion() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 5\n2 2 3\n";
        let m = parse_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m.nnz(), 4);
        assert_eq!(
            m.triplets().collect::<Vec<_>>(),
            vec![(0, 0, 2.0), (0, 1, 5.0), (1, 0, 5.0), (1, 1, 3.0)]
        );
    }

    #[test]
    fn pattern_duplicates_sum() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 3\n1 2\n1 2\n2 1\n";
        let raw = [(0usize, 1usize), (0, 1), (1, 0)];
        // oracle: sum-by-coordinate over the raw triplets
        let mut expected = std::collections::BTreeMap::new();
        for (r, c) in raw {
            *expected.entry((r, c)).or_insert(0.0) += 1.0;
        }
        let m = parse_matrix_market(text.as_bytes()).unwrap();
        let got: Vec<_> = m.triplets().map(|(r, c, v)| ((r, c), v)).collect();
        assert_eq!(got, expected.into_iter().collect::<Vec<_>>());
        assert_eq!(got[0], ((0, 1), 2.0));
    }

    #[test]
    fn skew_symmetric_negates_mirror() {
        let text = "%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 4\n";
        let m = parse_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m.triplets().collect::<Vec<_>>(), vec![(0, 1, -4.0), (1, 0, 4.0)]);
    }

    #[test]
    fn rejects_complex() {
        let text = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n";
        assert!(matches!(
            parse_matrix_market(text.as_bytes()),
            Err(MarketError::Unsupported(_))
        ));
    }

    #[test]
    fn rejects_malformed_header() {
        for text in ["", "%%MatrixMarket matrix\n", "hello world\n1 1 1\n"] {
            assert!(matches!(
                parse_matrix_market(text.as_bytes()),
                Err(MarketError::MalformedHeader(_))
            ));
        }
    }

    #[test]
    fn rejects_out_of_range_index() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            parse_matrix_market(text.as_bytes()),
            Err(MarketError::IndexOutOfRange { line: 3, row: 3, .. })
        ));
        let zero = "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n";
        assert!(matches!(
            parse_matrix_market(zero.as_bytes()),
            Err(MarketError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_short_entry_list() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(matches!(
            parse_matrix_market(text.as_bytes()),
            Err(MarketError::EntryCount { expected: 2, found: 1 })
        ));
    }
}
