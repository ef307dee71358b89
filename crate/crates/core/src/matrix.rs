//! Dense column-major matrices, mixed norms, sign handling and sparsity metrics.
//!
//! Every projection routine in this crate streams down columns, so storage is
//! column-major and [`DenseMatrix::column`] hands out contiguous slices.
//! Matrices are validated once, at construction: entries are finite and
//! negative zeros are normalised to `+0.0`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// An `n x m` real matrix stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (idx, v) in data.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx % rows,
                    col: idx / rows,
                    value: *v,
                });
            }
            // -0.0 has no sign under `sign()`; store it as +0.0 so that
            // sign/magnitude recomposition is bit-exact.
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        if n == 0 || m == 0 {
            return Err(Error::EmptyShape { rows: n, cols: m });
        }
        let mut data = vec![0.0; n * m];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::ShapeMismatch {
                    rows: n,
                    cols: m,
                    len: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Self::from_col_major(n, m, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_col_major(rows, cols, vec![0.0; rows * cols])
    }

    /// Internal constructor for data that is already known to be valid.
    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always `false`: a valid matrix has at least one entry.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.rows)
    }

    /// Column-major view of all entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Entrywise map. `f` must return finite values.
    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts_unchecked(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Scales every entry by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::from_col_major(self.rows, self.cols, self.data.iter().map(|v| v * alpha).collect())
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_col_major(self.rows, self.cols, data)
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_col_major(self.rows, self.cols, data)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &DenseMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Precondition(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Reads the plain text format: a header line `n m`, then `n` lines of
    /// `m` whitespace-separated reals. Blank lines are skipped.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(idx, l)| (idx + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

        let (line_no, header) = match lines.next() {
            Some((no, Ok(h))) => (no, h),
            Some((no, Err(e))) => return Err(parse_err(no, e.to_string())),
            None => return Err(parse_err(1, "missing header line `n m`")),
        };
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(parse_err(line_no, "header must be `n m`"));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| parse_err(line_no, format!("invalid dimension `{s}`")))
        };
        let n = parse_dim(dims[0])?;
        let m = parse_dim(dims[1])?;

        let mut data = vec![0.0; n * m];
        for i in 0..n {
            let (line_no, line) = match lines.next() {
                Some((no, Ok(l))) => (no, l),
                Some((no, Err(e))) => return Err(parse_err(no, e.to_string())),
                None => {
                    return Err(parse_err(
                        line_no + i + 1,
                        format!("expected {n} data rows, found {i}"),
                    ))
                }
            };
            let mut count = 0;
            for (j, tok) in line.split_whitespace().enumerate() {
                if j >= m {
                    return Err(parse_err(line_no, format!("expected {m} values, found more")));
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("invalid number `{tok}`")))?;
                if !v.is_finite() {
                    return Err(parse_err(line_no, format!("non-finite value `{tok}`")));
                }
                data[j * n + i] = v;
                count += 1;
            }
            if count != m {
                return Err(parse_err(
                    line_no,
                    format!("expected {m} values, found {count}"),
                ));
            }
        }
        if let Some((no, _)) = lines.next() {
            return Err(parse_err(no, format!("trailing data after {n} rows")));
        }
        Self::from_col_major(n, m, data)
    }

    /// Writes the text format. Values use the shortest representation that
    /// parses back to the identical `f64`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        let mut line = String::new();
        for i in 0..self.rows {
            line.clear();
            for j in 0..self.cols {
                if j > 0 {
                    line.push(' ');
                }
                write!(line, "{}", self.get(i, j)).expect("writing to a String");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// `sum_j max_i |Y_ij|`.
pub fn norm_l1_inf(y: &DenseMatrix) -> f64 {
    y.columns()
        .map(|c| c.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
        .sum()
}

/// `max_j sum_i |Y_ij|`, the dual of [`norm_l1_inf`].
pub fn norm_linf_l1(y: &DenseMatrix) -> f64 {
    y.columns()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Entrywise signs in `{-1, 0, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignPattern {
    rows: usize,
    cols: usize,
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.signs[j * self.rows + i]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.signs
    }

    /// Multiplies `magnitudes` entrywise by the stored signs.
    pub fn apply(&self, magnitudes: &DenseMatrix) -> Result<DenseMatrix> {
        if magnitudes.rows() != self.rows || magnitudes.cols() != self.cols {
            return Err(Error::Precondition(format!(
                "sign pattern is {}x{}, magnitudes are {}x{}",
                self.rows,
                self.cols,
                magnitudes.rows(),
                magnitudes.cols()
            )));
        }
        Ok(self.apply_unchecked(magnitudes))
    }

    pub(crate) fn apply_unchecked(&self, magnitudes: &DenseMatrix) -> DenseMatrix {
        let data = self
            .signs
            .iter()
            .zip(magnitudes.as_slice())
            .map(|(&s, &v)| match s {
                -1 => -v,
                _ => v,
            })
            .collect();
        DenseMatrix::from_parts_unchecked(self.rows, self.cols, data)
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Splits `Y` into `(sign(Y), |Y|)`.
pub fn sign_decompose(y: &DenseMatrix) -> (SignPattern, DenseMatrix) {
    let signs = y.as_slice().iter().map(|&v| sign(v)).collect();
    (
        SignPattern {
            rows: y.rows(),
            cols: y.cols(),
            signs,
        },
        y.map(f64::abs),
    )
}

/// Fraction of zero entries and of all-zero columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityReport {
    pub entry_sparsity: f64,
    pub column_sparsity: f64,
    pub zero_tolerance: f64,
}

/// Counts entries and columns whose magnitude is at most `zero_tolerance`.
pub fn sparsity_report(x: &DenseMatrix, zero_tolerance: f64) -> Result<SparsityReport> {
    if !(zero_tolerance >= 0.0) {
        return Err(Error::Precondition(format!(
            "zero tolerance must be nonnegative, got {zero_tolerance}"
        )));
    }
    let mut zero_entries = 0usize;
    let mut zero_cols = 0usize;
    for col in x.columns() {
        let z = col.iter().filter(|v| v.abs() <= zero_tolerance).count();
        zero_entries += z;
        if z == col.len() {
            zero_cols += 1;
        }
    }
    Ok(SparsityReport {
        entry_sparsity: zero_entries as f64 / x.len() as f64,
        column_sparsity: zero_cols as f64 / x.cols() as f64,
        zero_tolerance,
    })
}
