//! Asymptotically hyperbolic paths on the real line: spectral flow, the
//! essentially splitting structure, and the Fredholm index of
//! `F_A u = u' - A(t) u` by shooting.
//!
//! Sign convention: `ind(F_A) = rank P+(A(-inf)) - rank P+(A(+inf)) = -sf(A)`.

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matcore::{c64, frobenius, singular_values, CMatrix, SubspaceBasis};
use crate::path::OperatorPath;
use crate::reldim::pair_index;
use crate::sflow::{sf_endpoint, Diagnostics, Engine, FlowResult};
use crate::spectral::{is_hyperbolic, p_minus, p_plus};

/// `A(t) = A0(t) + K(t)` on the real line with a fixed coordinate splitting
/// `E = E+ (+) E-` (`plus_mask`) and `K` living in the leading `r x r` block.
#[derive(Debug, Clone)]
pub struct BlockPath {
    pub path: OperatorPath,
    /// The hyperbolic, block-diagonal part `A0`.
    pub base: OperatorPath,
    pub r: usize,
    pub plus_mask: Vec<bool>,
    /// Spectral flow planted by the generator, if known.
    pub planted: Option<i64>,
}

impl BlockPath {
    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    /// `K(t) = A(t) - A0(t)`.
    pub fn compact_part(&self, t: f64) -> CMatrix {
        self.path.at(t) - self.base.at(t)
    }

    /// Structural checks of the declared decomposition on a probe grid:
    /// `A0` block-diagonal for the splitting and hyperbolic, `K` zero outside
    /// the leading block.
    pub fn check_structure(&self, tol: &Tolerances) -> Result<()> {
        let n = self.dim();
        if self.plus_mask.len() != n || self.base.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.plus_mask.len() });
        }
        if self.r > n {
            return Err(Error::RangeError(format!("leading block size {} exceeds dimension {n}", self.r)));
        }
        self.path.require_real_line()?;
        for t in probe_grid() {
            let a0 = self.base.at(t);
            for i in 0..n {
                for j in 0..n {
                    if self.plus_mask[i] != self.plus_mask[j] && a0[(i, j)].norm() > 1e-12 {
                        return Err(Error::HypothesisViolation(format!(
                            "A0({t}) couples E+ and E- at entry ({i}, {j})"
                        )));
                    }
                }
            }
            let (ok, gap) = is_hyperbolic(&a0, tol.gap_min)?;
            if !ok {
                return Err(Error::HypothesisViolation(format!("A0({t}) is not hyperbolic (gap {gap:.3e})")));
            }
            let k = self.compact_part(t);
            if let Some((i, j, v)) = out_of_block_max(&k, self.r) {
                if v != 0.0 {
                    return Err(Error::HypothesisViolation(format!(
                        "K({t}) has entry ({i}, {j}) = {v:.3e} outside the leading {r}x{r} block",
                        r = self.r
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Probe grid used by the structure checks: 129 points on `[-16, 16]`.
fn probe_grid() -> impl Iterator<Item = f64> {
    (0..129).map(|i| -16.0 + 32.0 * i as f64 / 128.0)
}

/// Largest entry with `i >= r` or `j >= r`.
fn out_of_block_max(m: &CMatrix, r: usize) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i < r && j < r {
                continue;
            }
            let v = m[(i, j)].norm();
            if best.is_none_or(|(_, _, b)| v > b) {
                best = Some((i, j, v));
            }
        }
    }
    best
}

/// Where the essentially splitting check found its largest violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingWitness {
    /// `limits`, `commutator` or `projector` (`P+(A(t))` drifting along the path).
    pub condition: String,
    pub max_out_of_block: f64,
    pub entry: Option<(usize, usize)>,
    /// Probe time (`None` for the limit condition).
    pub t: Option<f64>,
}

pub fn check_essentially_splitting(bp: &BlockPath, tol: &Tolerances) -> Result<(bool, SplittingWitness)> {
    const LIMIT_TOL: f64 = 1e-9;
    const PROJECTOR_TOL: f64 = 1e-8;
    let (minus, plus) = bp
        .path
        .limits()
        .cloned()
        .ok_or_else(|| Error::WrongDomain("essentially splitting check needs limits at infinity".into()))?;
    let r = bp.r;
    let pp_plus = p_plus(&plus, tol)?;
    let pp_minus = p_plus(&minus, tol)?;

    let mut worst = SplittingWitness { condition: "limits".into(), max_out_of_block: 0.0, entry: None, t: None };
    let mut ok = true;
    let mut record = |cond: &str, t: Option<f64>, m: &CMatrix, threshold: f64, worst: &mut SplittingWitness| {
        if let Some((i, j, v)) = out_of_block_max(m, r) {
            let violated = v > threshold;
            if violated {
                ok = false;
            }
            // report the first violated condition, otherwise the largest value seen
            let worst_violated = worst.max_out_of_block > threshold_for(&worst.condition);
            if (violated && !worst_violated) || (violated == worst_violated && v > worst.max_out_of_block) {
                *worst = SplittingWitness { condition: cond.into(), max_out_of_block: v, entry: Some((i, j)), t };
            }
        }
    };

    record("limits", None, &(pp_plus.matrix() - pp_minus.matrix()), LIMIT_TOL, &mut worst);

    let mut reference: Option<CMatrix> = None;
    for t in probe_grid() {
        let a = bp.path.at(t);
        let comm = &a * pp_plus.matrix() - pp_plus.matrix() * &a;
        record("commutator", Some(t), &comm, LIMIT_TOL, &mut worst);
        if is_hyperbolic(&a, tol.gap_min)?.0 {
            let p = p_plus(&a, tol)?.into_matrix();
            match &reference {
                None => reference = Some(p),
                Some(p0) => record("projector", Some(t), &(&p - p0), PROJECTOR_TOL, &mut worst),
            }
        }
    }
    Ok((ok, worst))
}

fn threshold_for(condition: &str) -> f64 {
    if condition == "projector" {
        1e-8
    } else {
        1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailOptions {
    pub delta_max: f64,
    /// Probe points per side on `[delta, far]`.
    pub probes: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { delta_max: 64.0, probes: 64 }
    }
}

struct Limits {
    minus: CMatrix,
    plus: CMatrix,
    gap_minus: f64,
    gap_plus: f64,
    rank_minus: usize,
    rank_plus: usize,
}

fn limits(path: &OperatorPath, tol: &Tolerances) -> Result<Limits> {
    path.require_real_line()?;
    let (minus, plus) = path
        .limits()
        .cloned()
        .ok_or_else(|| Error::WrongDomain("path on the real line needs its limits at infinity".into()))?;
    let (ok_m, gap_minus) = is_hyperbolic(&minus, tol.gap_min)?;
    if !ok_m {
        return Err(Error::EndpointNotHyperbolic { t: f64::NEG_INFINITY, gap: gap_minus });
    }
    let (ok_p, gap_plus) = is_hyperbolic(&plus, tol.gap_min)?;
    if !ok_p {
        return Err(Error::EndpointNotHyperbolic { t: f64::INFINITY, gap: gap_plus });
    }
    let rank_minus = p_plus(&minus, tol)?.rank();
    let rank_plus = p_plus(&plus, tol)?.rank();
    Ok(Limits { minus, plus, gap_minus, gap_plus, rank_minus, rank_plus })
}

/// Whether `A(t)` is hyperbolic with the limit's `rank P+` for all probes
/// `|t|` in `[delta, 2 delta_max]` on both sides.
fn tail_certified(path: &OperatorPath, lim: &Limits, delta: f64, opts: &TailOptions, tol: &Tolerances) -> Result<bool> {
    let far = 2.0 * opts.delta_max;
    let m = opts.probes.max(2);
    for i in 0..m {
        let s = delta + (far - delta) * i as f64 / (m - 1) as f64;
        for (t, rank) in [(s, lim.rank_plus), (-s, lim.rank_minus)] {
            let a = path.at(t);
            if !is_hyperbolic(&a, tol.gap_min)?.0 || p_plus(&a, tol)?.rank() != rank {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest `delta` in `1, 2, 4, ..., delta_max` with a certified hyperbolic tail.
pub fn hyperbolic_tail(path: &OperatorPath, opts: &TailOptions, tol: &Tolerances) -> Result<f64> {
    let lim = limits(path, tol)?;
    let mut delta = 1.0;
    while delta <= opts.delta_max {
        if tail_certified(path, &lim, delta, opts, tol)? {
            return Ok(delta);
        }
        delta *= 2.0;
    }
    Err(Error::NoHyperbolicTail { delta_max: opts.delta_max })
}

pub fn sf_asymptotic(path: &OperatorPath, opts: &TailOptions, tol: &Tolerances) -> Result<FlowResult> {
    let lim = limits(path, tol)?;
    let delta = hyperbolic_tail(path, opts, tol)?;
    let inner = sf_endpoint(&path.clamp(-delta, delta), tol)?;
    let wide = sf_endpoint(&path.clamp(-2.0 * delta, 2.0 * delta), tol)?;
    if inner.sf != wide.sf {
        return Err(Error::NumericalFailure {
            what: format!("spectral flow changed from {} to {} when doubling delta = {delta}", inner.sf, wide.sf),
            residual: (inner.sf - wide.sf).abs() as f64,
        });
    }
    Ok(FlowResult {
        sf: inner.sf,
        engine: Engine::Endpoint,
        diagnostics: Diagnostics {
            endpoint_gaps: Some((lim.gap_minus, lim.gap_plus)),
            endpoint_ranks: inner.diagnostics.endpoint_ranks,
            delta: Some(delta),
            ..Default::default()
        },
    })
}

/// `rank P+(A(-inf)) - rank P+(A(+inf))`.
pub fn ode_index_formula(path: &OperatorPath, tol: &Tolerances) -> Result<i64> {
    let lim = limits(path, tol)?;
    Ok(lim.rank_minus as i64 - lim.rank_plus as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shooting {
    pub index: i64,
    pub kernel: usize,
    pub cokernel: usize,
    pub t_used: f64,
    pub steps: usize,
    /// Smallest retained over largest discarded singular value of `[X Y]`.
    pub singular_value_gap: f64,
}

/// Absolute threshold on singular values of `[X Y]` (orthonormal blocks).
const SHOOT_RANK_TOL: f64 = 1e-6;
const SHOOT_MIN_RETAINED: f64 = 1e-3;

fn rk4_step(path: &OperatorPath, t: f64, h: f64, u: &CMatrix) -> CMatrix {
    let hc = c64(h, 0.0);
    let half = c64(0.5 * h, 0.0);
    let a0 = path.at(t);
    let am = path.at(t + 0.5 * h);
    let a1 = path.at(t + h);
    let k1 = &a0 * u;
    let k2 = &am * (u + &k1 * half);
    let k3 = &am * (u + &k2 * half);
    let k4 = &a1 * (u + &k3 * hc);
    u + (k1 + k2 * c64(2.0, 0.0) + k3 * c64(2.0, 0.0) + k4) * c64(h / 6.0, 0.0)
}

/// Fredholm index of `F_A` as the pair index of the unstable subspace of
/// `A(-inf)`, carried by `u' = A(t) u` from `-t_end` to `t_end`, against
/// the stable subspace of `A(+inf)`.
pub fn ode_index_shooting(path: &OperatorPath, t_end: f64, steps: usize, tol: &Tolerances) -> Result<Shooting> {
    if steps < 512 {
        return Err(Error::RangeError(format!("shooting needs at least 512 steps, got {steps}")));
    }
    let lim = limits(path, tol)?;
    let delta = hyperbolic_tail(path, &TailOptions::default(), tol)?;
    if !(t_end >= delta) {
        return Err(Error::TailNotReached { t_used: t_end, delta });
    }
    let n = path.dim();
    let unstable = p_plus(&lim.minus, tol)?.range();
    let stable = p_minus(&lim.plus, tol)?.range();

    let mut x = unstable.clone();
    if x.dim() > 0 {
        let h = 2.0 * t_end / steps as f64;
        let mut u = x.into_columns();
        for i in 0..steps {
            let t = -t_end + i as f64 * h;
            u = rk4_step(path, t, h, &u);
            if u.iter().any(|z| !z.is_finite()) {
                return Err(Error::NonFinite);
            }
            u = SubspaceBasis::orthonormalize(&u).into_columns();
        }
        x = SubspaceBasis::new(u, 1e-8)?;
    }

    let (dx, dy) = (x.dim(), stable.dim());
    let mut both = CMatrix::zeros(n, dx + dy);
    both.columns_mut(0, dx).copy_from(x.columns());
    both.columns_mut(dx, dy).copy_from(stable.columns());
    let sv = if dx + dy == 0 { Vec::new() } else { singular_values(&both) };
    let retained: Vec<f64> = sv.iter().copied().filter(|&s| s > SHOOT_RANK_TOL).collect();
    let discarded_max = sv.iter().copied().filter(|&s| s <= SHOOT_RANK_TOL).fold(0.0, f64::max);
    let retained_min = retained.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = if discarded_max > 0.0 {
        retained_min / discarded_max
    } else if retained.is_empty() {
        f64::INFINITY
    } else {
        retained_min / f64::EPSILON
    };
    if retained_min < SHOOT_MIN_RETAINED || discarded_max > SHOOT_RANK_TOL || gap < 1e3 {
        return Err(Error::NumericalFailure {
            what: format!("ambiguous rank in shooting (T = {t_end}, steps = {steps}); increase T or steps"),
            residual: gap,
        });
    }
    let rank = retained.len();
    let kernel = dx + dy - rank;
    let cokernel = n - rank;
    let index = pair_index(&x, &stable, &Tolerances { rank: SHOOT_RANK_TOL, ..*tol })?;
    if index != kernel as i64 - cokernel as i64 {
        return Err(Error::NumericalFailure {
            what: "pair index disagrees with the singular value count".into(),
            residual: (index - (kernel as i64 - cokernel as i64)).abs() as f64,
        });
    }
    Ok(Shooting { index, kernel, cokernel, t_used: t_end, steps, singular_value_gap: gap })
}

/// Horizon and step count used when none are given: `T = delta + 8 / gap`,
/// `steps = max(4096, 2 T max |A|_F)`.
pub fn default_horizon(path: &OperatorPath, tol: &Tolerances) -> Result<(f64, usize)> {
    let lim = limits(path, tol)?;
    let delta = hyperbolic_tail(path, &TailOptions::default(), tol)?;
    let gap = lim.gap_minus.min(lim.gap_plus);
    let t_end = delta + 8.0 / gap;
    let norm = (0..=64)
        .map(|i| frobenius(&path.at(-t_end + 2.0 * t_end * i as f64 / 64.0)))
        .fold(0.0, f64::max);
    let steps = ((2.0 * t_end * norm).ceil() as usize).max(4096);
    Ok((t_end, steps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub sf: i64,
    pub ind_shooting: i64,
    pub ind_formula: i64,
    pub agree: bool,
    #[serde(rename = "T_used")]
    pub t_used: f64,
    pub steps: usize,
    pub delta: f64,
    /// Spectral gaps of `A(-inf)` and `A(+inf)`.
    pub gap_certificates: (f64, f64),
    pub singular_value_gap: f64,
    pub kernel: usize,
    pub cokernel: usize,
    /// Shooting index unchanged under `(T, steps) -> (2T, 2 steps)`.
    pub stable_under_doubling: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShootingOptions {
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
}

pub fn verify_final(path: &OperatorPath, opts: &ShootingOptions, tol: &Tolerances) -> Result<IndexReport> {
    let lim = limits(path, tol)?;
    let flow = sf_asymptotic(path, &TailOptions::default(), tol)?;
    let (t_default, steps_default) = default_horizon(path, tol)?;
    let t_end = opts.t_end.unwrap_or(t_default);
    let steps = opts.steps.unwrap_or(steps_default);
    let shot = ode_index_shooting(path, t_end, steps, tol)?;
    let doubled = ode_index_shooting(path, 2.0 * t_end, 2 * steps, tol)?;
    let ind_formula = ode_index_formula(path, tol)?;
    Ok(IndexReport {
        sf: flow.sf,
        ind_shooting: shot.index,
        ind_formula,
        agree: shot.index == ind_formula && ind_formula == -flow.sf,
        t_used: t_end,
        steps,
        delta: flow.diagnostics.delta.unwrap_or(f64::NAN),
        gap_certificates: (lim.gap_minus, lim.gap_plus),
        singular_value_gap: shot.singular_value_gap.min(doubled.singular_value_gap),
        kernel: shot.kernel,
        cokernel: shot.cokernel,
        stable_under_doubling: doubled.index == shot.index,
    })
}

/// Like [`verify_final`], but first requires the essentially splitting
/// hypothesis; refuses with `HypothesisViolation` otherwise.
pub fn verify_final_block(bp: &BlockPath, opts: &ShootingOptions, tol: &Tolerances) -> Result<IndexReport> {
    let (ok, witness) = check_essentially_splitting(bp, tol)?;
    if !ok {
        return Err(Error::HypothesisViolation(format!(
            "{} condition fails: out-of-block entry {:.3e} at {:?}{}",
            witness.condition,
            witness.max_out_of_block,
            witness.entry.unwrap_or((0, 0)),
            witness.t.map(|t| format!(", t = {t}")).unwrap_or_default()
        )));
    }
    bp.check_structure(tol)?;
    verify_final(&bp.path, opts, tol)
}
