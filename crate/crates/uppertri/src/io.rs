//! Document formats.
//!
//! Matrices, operators, symbols, and analytic factors travel as JSON with a
//! fixed field order and floats printed at 17 significant digits, so every
//! value round trips to the exact same bits and a rewritten file is
//! byte-identical. Writers are hand-rolled for that reason; readers go
//! through serde_json and validate shape before touching content.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::Value;

use crate::blockop::{BlockOperator, ConvergenceReport};
use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::matrix::DenseMatrix;
use crate::toeplitz::{AnalyticFactor, Symbol};

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_pair(z: Complex64) -> String {
    format!("[{},{}]", fmt_f64(z.re), fmt_f64(z.im))
}

fn fmt_index(i: &MultiIndex) -> String {
    let coords: Vec<String> = i.coords().iter().map(|c| c.to_string()).collect();
    format!("[{}]", coords.join(","))
}

/// `{"rows":r,"cols":c,"data":[[re,im],...]}`, data in row-major order.
pub fn write_matrix(m: &DenseMatrix) -> String {
    let mut s = String::new();
    write!(s, "{{\"rows\":{},\"cols\":{},\"data\":[", m.rows(), m.cols()).unwrap();
    let mut first = true;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !first {
                s.push(',');
            }
            first = false;
            s.push_str(&fmt_pair(m[(i, j)]));
        }
    }
    s.push_str("]}");
    s
}

/// Block layout of an operator file: columns hold their upper entries only,
/// both sorted graded-lexicographically; the mirror is implied.
pub fn write_operator(op: &BlockOperator) -> String {
    let mut s = String::new();
    write!(s, "{{\"d\":{},\"c\":{},\"columns\":[", op.d(), op.c()).unwrap();
    let mut first_col = true;
    for k in op.column_indices() {
        let uppers: Vec<_> = op.column(k).filter(|(i, _)| *i <= k).collect();
        if uppers.is_empty() {
            continue;
        }
        if !first_col {
            s.push(',');
        }
        first_col = false;
        write!(s, "\n{{\"K\":{},\"entries\":[", fmt_index(k)).unwrap();
        let mut first_entry = true;
        for (i, block) in uppers {
            if !first_entry {
                s.push(',');
            }
            first_entry = false;
            write!(s, "{{\"I\":{},\"block\":[", fmt_index(i)).unwrap();
            for r in 0..block.rows() {
                if r > 0 {
                    s.push(',');
                }
                s.push('[');
                for c in 0..block.cols() {
                    if c > 0 {
                        s.push(',');
                    }
                    s.push_str(&fmt_pair(block[(r, c)]));
                }
                s.push(']');
            }
            s.push_str("]}");
        }
        s.push_str("]}");
    }
    s.push_str("\n]}");
    s
}

/// `{"coeffs":[{"k":0,"re":...,"im":...},...]}` with k ascending from 0.
pub fn write_symbol(sym: &Symbol) -> String {
    write_coeff_doc(sym.coeffs())
}

/// Same coefficient schema as a symbol; the two are told apart by how they
/// are used, not by shape.
pub fn write_factor(f: &AnalyticFactor) -> String {
    write_coeff_doc(f.coeffs())
}

fn write_coeff_doc(coeffs: &[Complex64]) -> String {
    let mut s = String::from("{\"coeffs\":[");
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        write!(
            s,
            "{{\"k\":{k},\"re\":{},\"im\":{}}}",
            fmt_f64(c.re),
            fmt_f64(c.im)
        )
        .unwrap();
    }
    s.push_str("]}");
    s
}

/// Header plus one row per rung; a missing first delta is an empty field.
pub fn write_csv(rep: &ConvergenceReport) -> String {
    let mut s = String::from("n,delta,residual\n");
    for (i, &n) in rep.schedule.iter().enumerate() {
        let delta = match rep.deltas.get(i).copied().flatten() {
            Some(d) => fmt_f64(d),
            None => String::new(),
        };
        let residual = rep
            .residuals
            .get(i)
            .map(|&r| fmt_f64(r))
            .unwrap_or_default();
        writeln!(s, "{n},{delta},{residual}").unwrap();
    }
    s
}

fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("malformed JSON: {e}")))
}

fn need<'v>(v: &'v Value, field: &str) -> Result<&'v Value> {
    v.get(field)
        .ok_or_else(|| Error::Format(format!("missing field \"{field}\"")))
}

fn need_usize(v: &Value, field: &str) -> Result<usize> {
    need(v, field)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Format(format!("field \"{field}\" is not a nonnegative integer")))
}

fn need_array<'v>(v: &'v Value, field: &str) -> Result<&'v [Value]> {
    need(v, field)?
        .as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| Error::Format(format!("field \"{field}\" is not an array")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Format(format!("{what} is not a number")))
}

fn as_pair(v: &Value, what: &str) -> Result<Complex64> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Format(format!("{what} is not a [re,im] pair")))?;
    Ok(Complex64::new(
        as_f64(&arr[0], what)?,
        as_f64(&arr[1], what)?,
    ))
}

fn as_index(v: &Value, what: &str) -> Result<MultiIndex> {
    let arr = v
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::Format(format!("{what} is not a nonempty index array")))?;
    let mut coords = Vec::with_capacity(arr.len());
    for x in arr {
        let c = x
            .as_u64()
            .filter(|&c| c <= u32::MAX as u64)
            .ok_or_else(|| Error::Format(format!("{what} has a bad coordinate")))?;
        coords.push(c as u32);
    }
    Ok(MultiIndex::new(&coords))
}

pub fn read_matrix(text: &str) -> Result<DenseMatrix> {
    let v = parse(text)?;
    let rows = need_usize(&v, "rows")?;
    let cols = need_usize(&v, "cols")?;
    let data = need_array(&v, "data")?;
    if data.len() != rows * cols {
        return Err(Error::Format(format!(
            "data has {} entries, expected {}",
            data.len(),
            rows * cols
        )));
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    for (pos, entry) in data.iter().enumerate() {
        m[(pos / cols, pos % cols)] = as_pair(entry, "matrix entry")?;
    }
    if !m.is_finite() {
        return Err(Error::Format("matrix has non-finite entries".into()));
    }
    Ok(m)
}

pub fn read_operator(text: &str) -> Result<BlockOperator> {
    let v = parse(text)?;
    let d = need_usize(&v, "d")?;
    let c = need_usize(&v, "c")?;
    let mut entries = Vec::new();
    for col in need_array(&v, "columns")? {
        let k = as_index(need(col, "K")?, "column index K")?;
        for entry in need_array(col, "entries")? {
            let i = as_index(need(entry, "I")?, "row index I")?;
            let rows = need_array(entry, "block")?;
            if rows.len() != c {
                return Err(Error::Format(format!(
                    "block at ({i:?}, {k:?}) has {} rows, expected {c}",
                    rows.len()
                )));
            }
            let mut block = DenseMatrix::zeros(c, c);
            for (r, row) in rows.iter().enumerate() {
                let cells = row
                    .as_array()
                    .filter(|a| a.len() == c)
                    .ok_or_else(|| Error::Format(format!("bad block row at ({i:?}, {k:?})")))?;
                for (s, cell) in cells.iter().enumerate() {
                    block[(r, s)] = as_pair(cell, "block entry")?;
                }
            }
            entries.push((i, k.clone(), block));
        }
    }
    BlockOperator::from_upper(d, c, entries)
}

pub fn read_symbol(text: &str) -> Result<Symbol> {
    Symbol::new(read_coeff_doc(text)?)
}

pub fn read_factor(text: &str) -> Result<AnalyticFactor> {
    AnalyticFactor::new(read_coeff_doc(text)?)
}

fn read_coeff_doc(text: &str) -> Result<Vec<Complex64>> {
    let v = parse(text)?;
    let arr = need_array(&v, "coeffs")?;
    let mut coeffs = vec![Complex64::ZERO; arr.len()];
    let mut seen = vec![false; arr.len()];
    for item in arr {
        let k = need_usize(item, "k")?;
        if k >= coeffs.len() {
            return Err(Error::Format(format!(
                "coefficient index {k} out of range for {} coefficients; \
                 indices must cover 0..{} exactly",
                coeffs.len(),
                coeffs.len() - 1
            )));
        }
        if seen[k] {
            return Err(Error::Format(format!("duplicate coefficient index {k}")));
        }
        seen[k] = true;
        coeffs[k] = Complex64::new(
            as_f64(need(item, "re")?, "re")?,
            as_f64(need(item, "im")?, "im")?,
        );
    }
    Ok(coeffs)
}

/// Distinguishes the document kinds this crate writes by their top-level
/// fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocKind {
    Matrix,
    Operator,
    Coefficients,
}

pub fn sniff_kind(text: &str) -> Result<DocKind> {
    let v = parse(text)?;
    if v.get("rows").is_some() && v.get("data").is_some() {
        Ok(DocKind::Matrix)
    } else if v.get("columns").is_some() {
        Ok(DocKind::Operator)
    } else if v.get("coeffs").is_some() {
        Ok(DocKind::Coefficients)
    } else {
        Err(Error::Format(
            "unrecognized document: expected a matrix, operator, or coefficient file".into(),
        ))
    }
}
