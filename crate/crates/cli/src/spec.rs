//! Path-spec documents.
//!
//! ```json
//! {"dim": 4, "domain": "unit", "kind": "builtin",
//!  "payload": {"name": "canonical_k", "n": 4, "k": 2}}
//! ```
//!
//! Kinds:
//! - `builtin`: `payload.name` picks a generator, the other payload fields
//!   are its arguments.
//! - `affine`: `A0 + t A1` on `[0, 1]`, `A0 + tanh(t) A1` on the real line.
//!   `a1` may be omitted for a constant path.
//! - `trig`: `C0 + sum_m (cos[m-1] cos(pi m t) + sin[m-1] sin(pi m t))` on `[0, 1]`.
//! - `sampled`: piecewise-linear interpolation of `matrices` at `times`.
//! - `block`: `block_splitting_path` (or `mixing_path` with `"mixing": true`).
//!
//! An optional top-level `"reverse": true` reverses the path.

use std::f64::consts::PI;

use serde_json::{Map, Value};
use specflow_core::literal::parse_matrix;
use specflow_core::matcore::{c64, CMatrix};
use specflow_core::{pathgen, BlockPath, Domain, Error, OperatorPath, Result};

#[derive(Debug, Clone)]
pub enum ParsedPath {
    Plain(OperatorPath),
    Block(BlockPath),
}

impl ParsedPath {
    pub fn path(&self) -> &OperatorPath {
        match self {
            ParsedPath::Plain(p) => p,
            ParsedPath::Block(b) => &b.path,
        }
    }
}

fn err(at: &str, message: impl Into<String>) -> Error {
    Error::Parse { at: at.to_string(), message: message.into() }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(at, format!("missing field '{key}'")))
}

fn uint(obj: &Map<String, Value>, key: &str, at: &str) -> Result<u64> {
    let v = field(obj, key, at)?;
    v.as_u64().ok_or_else(|| err(&format!("{at}.{key}"), "expected a nonnegative integer"))
}

fn uint_or(obj: &Map<String, Value>, key: &str, at: &str, default: u64) -> Result<u64> {
    if obj.contains_key(key) {
        uint(obj, key, at)
    } else {
        Ok(default)
    }
}

fn int(obj: &Map<String, Value>, key: &str, at: &str) -> Result<i64> {
    let v = field(obj, key, at)?;
    v.as_i64().ok_or_else(|| err(&format!("{at}.{key}"), "expected an integer"))
}

fn matrix(obj: &Map<String, Value>, key: &str, at: &str) -> Result<CMatrix> {
    parse_matrix(field(obj, key, at)?, &format!("{at}.{key}"))
}

fn matrix_list(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Vec<CMatrix>> {
    let Some(v) = obj.get(key) else { return Ok(Vec::new()) };
    let items = v.as_array().ok_or_else(|| err(&format!("{at}.{key}"), "expected an array of matrices"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, m)| parse_matrix(m, &format!("{at}.{key}[{i}]")))
        .collect()
}

fn same_dim(ms: &[(&str, &CMatrix)], n: usize) -> Result<()> {
    for (at, m) in ms {
        if m.nrows() != n {
            return Err(err(at, format!("matrix is {} x {}, expected {n} x {n}", m.nrows(), m.nrows())));
        }
    }
    Ok(())
}

pub fn parse_spec_str(text: &str) -> Result<ParsedPath> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| err(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    parse_spec(&v)
}

pub fn parse_spec(v: &Value) -> Result<ParsedPath> {
    let obj = v.as_object().ok_or_else(|| err("document", "expected an object"))?;
    let dim = uint(obj, "dim", "document")? as usize;
    if dim == 0 {
        return Err(err("dim", "dimension must be at least 1"));
    }
    let domain = match field(obj, "domain", "document")?.as_str() {
        Some("unit") => Domain::Unit,
        Some("real-line") => Domain::RealLine,
        _ => return Err(err("domain", "expected \"unit\" or \"real-line\"")),
    };
    let kind = field(obj, "kind", "document")?
        .as_str()
        .ok_or_else(|| err("kind", "expected a string"))?;
    let payload = field(obj, "payload", "document")?
        .as_object()
        .ok_or_else(|| err("payload", "expected an object"))?;

    let parsed = match kind {
        "builtin" => builtin(payload, domain)?,
        "affine" => ParsedPath::Plain(affine(payload, domain)?),
        "trig" => ParsedPath::Plain(trig(payload, domain)?),
        "sampled" => ParsedPath::Plain(sampled(payload, domain)?),
        "block" => block(payload, domain)?,
        other => {
            return Err(err(
                "kind",
                format!("unknown kind '{other}' (expected builtin, affine, trig, sampled or block)"),
            ))
        }
    };
    if parsed.path().dim() != dim {
        return Err(err("dim", format!("declared {dim}, but the payload describes dimension {}", parsed.path().dim())));
    }
    if parsed.path().domain() != domain {
        return Err(err("domain", "does not match the domain of the builtin generator"));
    }
    let reverse = match obj.get("reverse") {
        None => false,
        Some(r) => r.as_bool().ok_or_else(|| err("reverse", "expected a boolean"))?,
    };
    Ok(match (reverse, parsed) {
        (false, p) => p,
        (true, ParsedPath::Plain(p)) => ParsedPath::Plain(p.reverse()),
        (true, ParsedPath::Block(_)) => return Err(err("reverse", "block paths cannot be reversed")),
    })
}

fn builtin(p: &Map<String, Value>, domain: Domain) -> Result<ParsedPath> {
    let at = "payload";
    let name = field(p, "name", at)?.as_str().ok_or_else(|| err("payload.name", "expected a string"))?;
    let path = match name {
        "canonical_k" => pathgen::canonical_k(uint(p, "n", at)? as usize, uint(p, "k", at)? as usize)?,
        "tanh_scalar" => pathgen::tanh_scalar(),
        "tanh_unit" => pathgen::tanh_unit(),
        "random_smooth" => pathgen::random_smooth(
            uint(p, "n", at)? as usize,
            uint(p, "seed", at)?,
            uint_or(p, "degree", at, 2)? as usize,
        )?,
        "conjugation_loop" => {
            let seed = uint(p, "seed", at)?;
            let proj = pathgen::random_projector(uint(p, "n", at)? as usize, uint(p, "rank", at)? as usize, seed)?;
            pathgen::conjugation_loop(&proj, seed)
        }
        "block_splitting_path" | "mixing_path" => {
            let mut q = p.clone();
            q.insert("mixing".into(), Value::Bool(name == "mixing_path"));
            return block(&q, domain);
        }
        other => {
            return Err(err(
                "payload.name",
                format!(
                    "unknown builtin '{other}' (expected canonical_k, tanh_scalar, tanh_unit, random_smooth, \
                     conjugation_loop, block_splitting_path or mixing_path)"
                ),
            ))
        }
    };
    Ok(ParsedPath::Plain(path))
}

fn affine(p: &Map<String, Value>, domain: Domain) -> Result<OperatorPath> {
    let a0 = matrix(p, "a0", "payload")?;
    let n = a0.nrows();
    let a1 = if p.contains_key("a1") { matrix(p, "a1", "payload")? } else { CMatrix::zeros(n, n) };
    same_dim(&[("payload.a1", &a1)], n)?;
    match domain {
        Domain::Unit => OperatorPath::affine(a0, a1),
        Domain::RealLine => {
            let (minus, plus) = (&a0 - &a1, &a0 + &a1);
            let d = a1.clone();
            Ok(OperatorPath::new(n, Domain::RealLine, move |t| &a0 + &a1 * c64(t.tanh(), 0.0))
                .with_derivative(move |t| &d * c64(1.0 / t.cosh().powi(2), 0.0))
                .with_limits(minus, plus))
        }
    }
}

fn trig(p: &Map<String, Value>, domain: Domain) -> Result<OperatorPath> {
    if domain != Domain::Unit {
        return Err(err("domain", "trig paths live on the unit interval"));
    }
    let c0 = matrix(p, "c0", "payload")?;
    let n = c0.nrows();
    let cos = matrix_list(p, "cos", "payload")?;
    let sin = matrix_list(p, "sin", "payload")?;
    for (key, list) in [("cos", &cos), ("sin", &sin)] {
        for (i, m) in list.iter().enumerate() {
            same_dim(&[(&format!("payload.{key}[{i}]"), m)], n)?;
        }
    }
    let (cos_d, sin_d) = (cos.clone(), sin.clone());
    let eval = move |t: f64| {
        let mut out = c0.clone();
        for (m, c) in cos.iter().enumerate() {
            out += c * c64((PI * (m + 1) as f64 * t).cos(), 0.0);
        }
        for (m, s) in sin.iter().enumerate() {
            out += s * c64((PI * (m + 1) as f64 * t).sin(), 0.0);
        }
        out
    };
    let deriv = move |t: f64| {
        let mut out = CMatrix::zeros(n, n);
        for (m, c) in cos_d.iter().enumerate() {
            let f = PI * (m + 1) as f64;
            out += c * c64(-f * (f * t).sin(), 0.0);
        }
        for (m, s) in sin_d.iter().enumerate() {
            let f = PI * (m + 1) as f64;
            out += s * c64(f * (f * t).cos(), 0.0);
        }
        out
    };
    Ok(OperatorPath::new(n, Domain::Unit, eval).with_derivative(deriv))
}

fn sampled(p: &Map<String, Value>, domain: Domain) -> Result<OperatorPath> {
    if domain != Domain::Unit {
        return Err(err("domain", "sampled paths live on the unit interval"));
    }
    let times = field(p, "times", "payload")?
        .as_array()
        .ok_or_else(|| err("payload.times", "expected an array of numbers"))?
        .iter()
        .enumerate()
        .map(|(i, t)| t.as_f64().ok_or_else(|| err(&format!("payload.times[{i}]"), "expected a number")))
        .collect::<Result<Vec<f64>>>()?;
    let matrices = matrix_list(p, "matrices", "payload")?;
    if let Some(first) = matrices.first() {
        for (i, m) in matrices.iter().enumerate() {
            same_dim(&[(&format!("payload.matrices[{i}]"), m)], first.nrows())?;
        }
    }
    OperatorPath::sampled(times, matrices)
}

fn block(p: &Map<String, Value>, domain: Domain) -> Result<ParsedPath> {
    if domain != Domain::RealLine {
        return Err(err("domain", "block paths live on the real line"));
    }
    let at = "payload";
    let (n_plus, n_minus, r) = (
        uint(p, "n_plus", at)? as usize,
        uint(p, "n_minus", at)? as usize,
        uint(p, "r", at)? as usize,
    );
    let seed = uint(p, "seed", at)?;
    let mixing = match p.get("mixing") {
        None => false,
        Some(m) => m.as_bool().ok_or_else(|| err("payload.mixing", "expected a boolean"))?,
    };
    let bp = if mixing {
        pathgen::mixing_path(n_plus, n_minus, r, seed)?
    } else {
        pathgen::block_splitting_path(n_plus, n_minus, r, int(p, "k", at)?, seed)?
    };
    Ok(ParsedPath::Block(bp))
}
