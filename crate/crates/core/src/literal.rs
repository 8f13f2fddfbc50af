//! JSON matrix literals: row-major nested arrays whose entries are
//! `[re, im]` pairs or plain real numbers.
//!
//! `[[[1,0],[0,0]],[[0,0],[-1,0]]]` is `diag(1, -1)`.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::matcore::{c64, CMatrix};
use num_complex::Complex64;

fn parse_error(at: &str, message: impl Into<String>) -> Error {
    Error::Parse { at: at.to_string(), message: message.into() }
}

fn parse_entry(v: &Value, at: &str) -> Result<Complex64> {
    let z = match v {
        Value::Number(x) => c64(x.as_f64().unwrap_or(f64::NAN), 0.0),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0].as_f64().ok_or_else(|| parse_error(at, "real part is not a number"))?;
            let im = pair[1].as_f64().ok_or_else(|| parse_error(at, "imaginary part is not a number"))?;
            c64(re, im)
        }
        _ => return Err(parse_error(at, "expected a number or an [re, im] pair")),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(parse_error(at, "entry is not finite"));
    }
    Ok(z)
}

/// Parses a square matrix literal. `at` names the location used in error
/// messages, e.g. `payload.a0`.
pub fn parse_matrix(v: &Value, at: &str) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| parse_error(at, "expected an array of rows"))?;
    let n = rows.len();
    if n == 0 {
        return Err(parse_error(at, "matrix has no rows"));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row_at = format!("{at}[{i}]");
        let row = row.as_array().ok_or_else(|| parse_error(&row_at, "expected an array of entries"))?;
        if row.len() != n {
            return Err(parse_error(&row_at, format!("row has {} entries, the matrix is {n} x {n}", row.len())));
        }
        for (j, entry) in row.iter().enumerate() {
            m[(i, j)] = parse_entry(entry, &format!("{row_at}[{j}]"))?;
        }
    }
    Ok(m)
}

pub fn parse_matrix_str(text: &str) -> Result<CMatrix> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| parse_error(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    parse_matrix(&v, "matrix")
}

pub fn matrix_to_value(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::real_diag;

    #[test]
    fn diag_example() {
        let m = parse_matrix_str("[[[1,0],[0,0]],[[0,0],[-1,0]]]").unwrap();
        assert_eq!(m, real_diag(&[1.0, -1.0]));
    }

    #[test]
    fn plain_numbers_are_real() {
        let m = parse_matrix_str("[[1, [0, 2]], [3.5, -1]]").unwrap();
        assert_eq!(m[(0, 1)], c64(0.0, 2.0));
        assert_eq!(m[(1, 0)], c64(3.5, 0.0));
    }

    #[test]
    fn round_trip() {
        let m = parse_matrix_str("[[[1,2],[3,4]],[[5,6],[7,8]]]").unwrap();
        assert_eq!(parse_matrix(&matrix_to_value(&m), "m").unwrap(), m);
    }

    #[test]
    fn errors_carry_locations() {
        let err = parse_matrix_str("[[1, 2], [3]]").unwrap_err().to_string();
        assert!(err.starts_with("matrix[1]"), "{err}");
        let err = parse_matrix_str("[[1, \"x\"], [3, 4]]").unwrap_err().to_string();
        assert!(err.starts_with("matrix[0][1]"), "{err}");
        let err = parse_matrix_str("[[1, 2],\n [3, 4]").unwrap_err().to_string();
        assert!(err.starts_with("line 2"), "{err}");
        assert!(parse_matrix_str("[]").is_err());
    }
}
