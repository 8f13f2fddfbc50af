//! Parameterized operator families `t -> A(t)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{c64, max_abs, validate, CMatrix};

/// Matrix-valued function of the path parameter. Evaluators must be safe to
/// call concurrently.
pub type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// `[0, 1]`
    Unit,
    /// The whole real line, with limits at `-inf` and `+inf`.
    RealLine,
}

/// A continuous path of square matrices, optionally with its derivative
/// and (on the real line) its limits at infinity.
#[derive(Clone)]
pub struct OperatorPath {
    dim: usize,
    domain: Domain,
    eval: MatrixFn,
    deriv: Option<MatrixFn>,
    limits: Option<(CMatrix, CMatrix)>,
    lipschitz: Option<f64>,
}

impl fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPath")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("smooth", &self.is_smooth())
            .field("has_limits", &self.limits.is_some())
            .finish()
    }
}

/// Sampled modulus of continuity against a declared Lipschitz constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuityReport {
    pub declared: f64,
    pub observed: f64,
    pub within: bool,
}

impl OperatorPath {
    pub fn new<F>(dim: usize, domain: Domain, eval: F) -> Self
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        Self { dim, domain, eval: Arc::new(eval), deriv: None, limits: None, lipschitz: None }
    }

    pub fn with_derivative<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_limits(mut self, minus_inf: CMatrix, plus_inf: CMatrix) -> Self {
        self.limits = Some((minus_inf, plus_inf));
        self
    }

    pub fn with_lipschitz(mut self, constant: f64) -> Self {
        self.lipschitz = Some(constant);
        self
    }

    pub fn without_derivative(mut self) -> Self {
        self.deriv = None;
        self
    }

    pub fn constant(m: CMatrix, domain: Domain) -> Result<Self> {
        let n = validate(&m)?;
        let value = m.clone();
        let path = Self::new(n, domain, move |_| value.clone())
            .with_derivative(move |_| CMatrix::zeros(n, n))
            .with_lipschitz(0.0);
        Ok(match domain {
            Domain::RealLine => path.with_limits(m.clone(), m),
            Domain::Unit => path,
        })
    }

    /// `A(t) = a0 + t a1` on `[0, 1]`.
    pub fn affine(a0: CMatrix, a1: CMatrix) -> Result<Self> {
        let n = validate(&a0)?;
        if validate(&a1)? != n {
            return Err(Error::DimensionMismatch { expected: n, found: a1.nrows() });
        }
        let d = a1.clone();
        Ok(Self::new(n, Domain::Unit, move |t| &a0 + &a1 * c64(t, 0.0))
            .with_derivative(move |_| d.clone()))
    }

    /// Piecewise-linear interpolation of samples on `[0, 1]`. The result has
    /// no derivative.
    pub fn sampled(times: Vec<f64>, matrices: Vec<CMatrix>) -> Result<Self> {
        if times.len() < 2 || times.len() != matrices.len() {
            return Err(Error::InvalidDimension(format!(
                "need at least two samples with matching times, got {} times and {} matrices",
                times.len(),
                matrices.len()
            )));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(Error::RangeError("sample times must start at 0 and end at 1".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::RangeError("sample times must be strictly increasing".into()));
        }
        let n = validate(&matrices[0])?;
        for m in &matrices {
            if validate(m)? != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
            }
        }
        Ok(Self::new(n, Domain::Unit, move |t| {
            let t = t.clamp(0.0, 1.0);
            let k = match times.iter().position(|&s| s >= t) {
                Some(0) => 1,
                Some(k) => k,
                None => times.len() - 1,
            };
            let (t0, t1) = (times[k - 1], times[k]);
            let s = (t - t0) / (t1 - t0);
            &matrices[k - 1] * c64(1.0 - s, 0.0) + &matrices[k] * c64(s, 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_smooth(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn limits(&self) -> Option<&(CMatrix, CMatrix)> {
        self.limits.as_ref()
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.eval)(t)
    }

    pub fn derivative(&self, t: f64) -> Option<CMatrix> {
        self.deriv.as_ref().map(|d| d(t))
    }

    /// `A(0)` and `A(1)` on the unit interval, the limits on the line.
    pub fn endpoints(&self) -> Option<(CMatrix, CMatrix)> {
        match self.domain {
            Domain::Unit => Some((self.at(0.0), self.at(1.0))),
            Domain::RealLine => self.limits.clone(),
        }
    }

    pub(crate) fn require_unit(&self) -> Result<()> {
        if self.domain != Domain::Unit {
            return Err(Error::WrongDomain("expected a path on [0, 1]".into()));
        }
        Ok(())
    }

    pub(crate) fn require_real_line(&self) -> Result<()> {
        if self.domain != Domain::RealLine {
            return Err(Error::WrongDomain("expected a path on the real line".into()));
        }
        Ok(())
    }

    /// Restriction to `[t0, t1]`, reparameterized onto `[0, 1]`.
    pub fn clamp(&self, t0: f64, t1: f64) -> Self {
        let eval = self.eval.clone();
        let scale = t1 - t0;
        let mut out = Self::new(self.dim, Domain::Unit, move |s| eval(t0 + s * scale));
        if let Some(d) = self.deriv.clone() {
            out = out.with_derivative(move |s| d(t0 + s * scale) * c64(scale, 0.0));
        }
        if let Some(l) = self.lipschitz {
            out = out.with_lipschitz(l * scale.abs());
        }
        out
    }

    /// `t -> A(1 - t)` on the unit interval, `t -> A(-t)` on the line.
    pub fn reverse(&self) -> Self {
        let eval = self.eval.clone();
        let mirror = match self.domain {
            Domain::Unit => |t: f64| 1.0 - t,
            Domain::RealLine => |t: f64| -t,
        };
        let mut out = Self::new(self.dim, self.domain, move |t| eval(mirror(t)));
        if let Some(d) = self.deriv.clone() {
            out = out.with_derivative(move |t| -d(mirror(t)));
        }
        if let Some((minus, plus)) = &self.limits {
            out = out.with_limits(plus.clone(), minus.clone());
        }
        out.lipschitz = self.lipschitz;
        out
    }

    /// Catenation: `A(2t)` on `[0, 1/2]`, `B(2t - 1)` on `[1/2, 1]`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.require_unit()?;
        other.require_unit()?;
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let gap = max_abs(&(self.at(1.0) - other.at(0.0)));
        if gap > 1e-12 {
            return Err(Error::EndpointMismatch { gap });
        }
        let (ea, eb) = (self.eval.clone(), other.eval.clone());
        let mut out = Self::new(self.dim, Domain::Unit, move |t| {
            if t <= 0.5 {
                ea(2.0 * t)
            } else {
                eb(2.0 * t - 1.0)
            }
        });
        if let (Some(da), Some(db)) = (self.deriv.clone(), other.deriv.clone()) {
            out = out.with_derivative(move |t| {
                if t <= 0.5 {
                    da(2.0 * t) * c64(2.0, 0.0)
                } else {
                    db(2.0 * t - 1.0) * c64(2.0, 0.0)
                }
            });
        }
        if let (Some(la), Some(lb)) = (self.lipschitz, other.lipschitz) {
            out = out.with_lipschitz(2.0 * la.max(lb));
        }
        Ok(out)
    }

    /// Block-diagonal path `A_1(t) (+) ... (+) A_m(t)`.
    pub fn direct_sum(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidDimension("direct sum of no paths".into()))?;
        let domain = first.domain;
        if parts.iter().any(|p| p.domain != domain) {
            return Err(Error::WrongDomain("direct sum of paths on different domains".into()));
        }
        let dims: Vec<usize> = parts.iter().map(|p| p.dim).collect();
        let total: usize = dims.iter().sum();
        let evals: Vec<MatrixFn> = parts.iter().map(|p| p.eval.clone()).collect();
        let d2 = dims.clone();
        let mut out = Self::new(total, domain, move |t| {
            block_diag(&evals.iter().map(|e| e(t)).collect::<Vec<_>>(), &d2)
        });
        if parts.iter().all(|p| p.deriv.is_some()) {
            let derivs: Vec<MatrixFn> = parts.iter().map(|p| p.deriv.clone().unwrap()).collect();
            let d3 = dims.clone();
            out = out.with_derivative(move |t| {
                block_diag(&derivs.iter().map(|e| e(t)).collect::<Vec<_>>(), &d3)
            });
        }
        if parts.iter().all(|p| p.limits.is_some()) {
            let minus: Vec<CMatrix> = parts.iter().map(|p| p.limits.as_ref().unwrap().0.clone()).collect();
            let plus: Vec<CMatrix> = parts.iter().map(|p| p.limits.as_ref().unwrap().1.clone()).collect();
            out = out.with_limits(block_diag(&minus, &dims), block_diag(&plus, &dims));
        }
        if parts.iter().all(|p| p.lipschitz.is_some()) {
            out = out.with_lipschitz(parts.iter().map(|p| p.lipschitz.unwrap()).fold(0.0, f64::max));
        }
        Ok(out)
    }

    /// Compares `|A(t) - A(s)|_F / |t - s|` on a uniform grid over `[t0, t1]`
    /// with the declared Lipschitz constant. Advisory only.
    pub fn continuity_check(&self, t0: f64, t1: f64, samples: usize) -> Option<ContinuityReport> {
        let declared = self.lipschitz?;
        let samples = samples.max(2);
        let h = (t1 - t0) / (samples - 1) as f64;
        let mut prev = self.at(t0);
        let mut observed: f64 = 0.0;
        for i in 1..samples {
            let cur = self.at(t0 + i as f64 * h);
            observed = observed.max(crate::matcore::frobenius(&(&cur - &prev)) / h.abs());
            prev = cur;
        }
        Some(ContinuityReport { declared, observed, within: observed <= declared * (1.0 + 1e-9) })
    }
}

pub fn block_diag(blocks: &[CMatrix], dims: &[usize]) -> CMatrix {
    let total: usize = dims.iter().sum();
    let mut m = CMatrix::zeros(total, total);
    let mut off = 0;
    for (b, &d) in blocks.iter().zip(dims) {
        m.view_mut((off, off), (d, d)).copy_from(b);
        off += d;
    }
    m
}
