//! Sparse matrix storage formats, Matrix Market ingestion and conversions.
//!
//! Every format is immutable once built. Conversions always allocate a new
//! object; the COO form is the hub that every other format converts through.

mod coo;
mod csr;
mod dia;
mod ell;
mod hyb;
pub mod market;

pub use coo::CooMatrix;
pub use csr::CsrMatrix;
pub use dia::{DiaMatrix, DIA_OFFSET_CAP};
pub use ell::EllMatrix;
pub use hyb::{hyb_split_width, HybMatrix};
pub use market::{parse_matrix_market, read_matrix_market};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Upper bound on padded elements for ELL and DIA storage.
///
/// Conversions refuse to materialize more than this many stored slots.
pub const PADDED_STORAGE_LIMIT: usize = 1 << 27;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MatrixError {
    #[error("index ({row}, {col}) out of range for {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("DIA format inapplicable: {ndiag} diagonals exceed cap of {cap}")]
    DiaCapExceeded { ndiag: usize, cap: usize },
    #[error("{format} format inapplicable: {slots} padded slots exceed limit of {limit}")]
    PaddingLimitExceeded {
        format: FormatTag,
        slots: usize,
        limit: usize,
    },
}

impl MatrixError {
    /// True when the error means "this format cannot hold this matrix"
    /// rather than a malformed input.
    pub fn is_inapplicable(&self) -> bool {
        matches!(
            self,
            MatrixError::DiaCapExceeded { .. } | MatrixError::PaddingLimitExceeded { .. }
        )
    }
}

/// Storage format of a sparse matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormatTag {
    #[serde(rename = "COO")]
    Coo,
    #[serde(rename = "CSR")]
    Csr,
    #[serde(rename = "ELL")]
    Ell,
    #[serde(rename = "DIA")]
    Dia,
    #[serde(rename = "HYB")]
    Hyb,
}

impl FormatTag {
    pub const ALL: [FormatTag; 5] = [
        FormatTag::Coo,
        FormatTag::Csr,
        FormatTag::Ell,
        FormatTag::Dia,
        FormatTag::Hyb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormatTag::Coo => "COO",
            FormatTag::Csr => "CSR",
            FormatTag::Ell => "ELL",
            FormatTag::Dia => "DIA",
            FormatTag::Hyb => "HYB",
        }
    }

    pub fn parse(token: &str) -> Option<FormatTag> {
        FormatTag::ALL.into_iter().find(|f| f.as_str() == token)
    }
}

impl fmt::Display for FormatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An owned matrix in any of the supported formats.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Coo(CooMatrix),
    Csr(CsrMatrix),
    Ell(EllMatrix),
    Dia(DiaMatrix),
    Hyb(HybMatrix),
}

/// A borrowed matrix in any of the supported formats.
#[derive(Debug, Clone, Copy)]
pub enum MatrixView<'a> {
    Coo(&'a CooMatrix),
    Csr(&'a CsrMatrix),
    Ell(&'a EllMatrix),
    Dia(&'a DiaMatrix),
    Hyb(&'a HybMatrix),
}

impl AnyMatrix {
    pub fn view(&self) -> MatrixView<'_> {
        match self {
            AnyMatrix::Coo(m) => MatrixView::Coo(m),
            AnyMatrix::Csr(m) => MatrixView::Csr(m),
            AnyMatrix::Ell(m) => MatrixView::Ell(m),
            AnyMatrix::Dia(m) => MatrixView::Dia(m),
            AnyMatrix::Hyb(m) => MatrixView::Hyb(m),
        }
    }

    pub fn format(&self) -> FormatTag {
        self.view().format()
    }

    pub fn nrows(&self) -> usize {
        self.view().nrows()
    }

    pub fn ncols(&self) -> usize {
        self.view().ncols()
    }

    pub fn to_coo(&self) -> CooMatrix {
        self.view().to_coo()
    }
}

impl<'a> MatrixView<'a> {
    pub fn format(&self) -> FormatTag {
        match self {
            MatrixView::Coo(_) => FormatTag::Coo,
            MatrixView::Csr(_) => FormatTag::Csr,
            MatrixView::Ell(_) => FormatTag::Ell,
            MatrixView::Dia(_) => FormatTag::Dia,
            MatrixView::Hyb(_) => FormatTag::Hyb,
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            MatrixView::Coo(m) => m.nrows(),
            MatrixView::Csr(m) => m.nrows(),
            MatrixView::Ell(m) => m.nrows(),
            MatrixView::Dia(m) => m.nrows(),
            MatrixView::Hyb(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixView::Coo(m) => m.ncols(),
            MatrixView::Csr(m) => m.ncols(),
            MatrixView::Ell(m) => m.ncols(),
            MatrixView::Dia(m) => m.ncols(),
            MatrixView::Hyb(m) => m.ncols(),
        }
    }

    pub fn to_coo(&self) -> CooMatrix {
        match self {
            MatrixView::Coo(m) => (*m).clone(),
            MatrixView::Csr(m) => m.to_coo(),
            MatrixView::Ell(m) => m.to_coo(),
            MatrixView::Dia(m) => m.to_coo(),
            MatrixView::Hyb(m) => m.to_coo(),
        }
    }

    pub fn to_owned(&self) -> AnyMatrix {
        match self {
            MatrixView::Coo(m) => AnyMatrix::Coo((*m).clone()),
            MatrixView::Csr(m) => AnyMatrix::Csr((*m).clone()),
            MatrixView::Ell(m) => AnyMatrix::Ell((*m).clone()),
            MatrixView::Dia(m) => AnyMatrix::Dia((*m).clone()),
            MatrixView::Hyb(m) => AnyMatrix::Hyb((*m).clone()),
        }
    }
}

impl<'a> From<&'a CooMatrix> for MatrixView<'a> {
    fn from(m: &'a CooMatrix) -> Self {
        MatrixView::Coo(m)
    }
}

impl<'a> From<&'a CsrMatrix> for MatrixView<'a> {
    fn from(m: &'a CsrMatrix) -> Self {
        MatrixView::Csr(m)
    }
}

impl<'a> From<&'a AnyMatrix> for MatrixView<'a> {
    fn from(m: &'a AnyMatrix) -> Self {
        m.view()
    }
}

/// Converts any matrix into `target`, going through COO when needed.
///
/// Fails only when the target format cannot hold the matrix (DIA offset cap,
/// padded storage limit).
pub fn convert<'a>(m: impl Into<MatrixView<'a>>, target: FormatTag) -> Result<AnyMatrix, MatrixError> {
    let view = m.into();
    if view.format() == target {
        return Ok(view.to_owned());
    }
    match (view, target) {
        (MatrixView::Coo(coo), t) => convert_from_coo(coo, t),
        (MatrixView::Csr(csr), FormatTag::Coo) => Ok(AnyMatrix::Coo(csr.to_coo())),
        (other, t) => convert_from_coo(&other.to_coo(), t),
    }
}

fn convert_from_coo(coo: &CooMatrix, target: FormatTag) -> Result<AnyMatrix, MatrixError> {
    Ok(match target {
        FormatTag::Coo => AnyMatrix::Coo(coo.clone()),
        FormatTag::Csr => AnyMatrix::Csr(CsrMatrix::from_coo(coo)),
        FormatTag::Ell => AnyMatrix::Ell(EllMatrix::from_coo(coo)?),
        FormatTag::Dia => AnyMatrix::Dia(DiaMatrix::from_coo(coo)?),
        FormatTag::Hyb => AnyMatrix::Hyb(HybMatrix::from_coo(coo)?),
    })
}

/// Reference SpMV: `y[i] = sum_j A[i,j] * x[j]`, columns visited in
/// ascending order within each row.
pub fn spmv_reference(m: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>, DimensionMismatch> {
    if x.len() != m.ncols() {
        return Err(DimensionMismatch {
            expected: m.ncols(),
            found: x.len(),
        });
    }
    let mut y = vec![0.0; m.nrows()];
    for (i, yi) in y.iter_mut().enumerate() {
        let (cols, vals) = m.row(i);
        let mut sum = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            sum += v * x[c];
        }
        *yi = sum;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("dimension mismatch: expected length {expected}, found {found}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub found: usize,
}
