//! Spectral flow of paths on `[0, 1]` with hyperbolic endpoints.
//!
//! Three engines compute the same integer by unrelated means:
//!
//! * [`sf_endpoint`]: `rank P+(A(1)) - rank P+(A(0))`;
//! * [`sf_partition`]: spectral sections built from Riesz projectors on an
//!   adaptive partition of `[0, 1]`, glued with relative dimensions;
//! * [`sf_crossings`]: eigenvalue continuation, bisection of every axis
//!   crossing and first-order perturbation slopes.

use num_complex::Complex64;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matcore::{
    condition_number, frobenius, inverse, min_cost_assignment, CMatrix, SchurForm,
};
use crate::path::OperatorPath;
use crate::reldim::rel_dim;
use crate::spectral::{is_hyperbolic, p_plus, riesz_projector, Contour, Projector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Endpoint,
    Partition,
    Crossings,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Endpoint => "endpoint",
            Engine::Partition => "partition",
            Engine::Crossings => "crossings",
        }
    }
}

/// One interval of the partition engine with the fixed contour used on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionCell {
    pub t0: f64,
    pub t1: f64,
    /// Left edge `re z = margin_line` of the contour; negative, inside a
    /// spectral gap for every `t` in the cell.
    pub margin_line: f64,
    /// Half-size of the bounding box `[margin_line, box_half] x [-box_half, box_half]`.
    pub box_half: f64,
    /// Rank of the spectral section on the cell.
    pub section_rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Spectral gaps `min |re lambda|` at the two endpoints.
    pub endpoint_gaps: Option<(f64, f64)>,
    /// `rank P+` at the two endpoints.
    pub endpoint_ranks: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partition: Vec<PartitionCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossings: Option<usize>,
    /// Half-width of the clamped window for paths on the real line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub sf: i64,
    pub engine: Engine,
    pub diagnostics: Diagnostics,
}

/// One eigenvalue crossing the imaginary axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub lambda: Complex64,
    /// `re lambda'(t)` from first-order perturbation theory.
    pub slope: f64,
    pub contribution: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    pub total: i64,
}

/// Checks endpoint hyperbolicity and returns `(gap(0), gap(1))`.
fn endpoint_gaps(path: &OperatorPath, tol: &Tolerances) -> Result<(CMatrix, CMatrix, f64, f64)> {
    path.require_unit()?;
    let a0 = path.at(0.0);
    let a1 = path.at(1.0);
    let (ok0, g0) = is_hyperbolic(&a0, tol.gap_min)?;
    if !ok0 {
        return Err(Error::EndpointNotHyperbolic { t: 0.0, gap: g0 });
    }
    let (ok1, g1) = is_hyperbolic(&a1, tol.gap_min)?;
    if !ok1 {
        return Err(Error::EndpointNotHyperbolic { t: 1.0, gap: g1 });
    }
    Ok((a0, a1, g0, g1))
}

pub fn sf_endpoint(path: &OperatorPath, tol: &Tolerances) -> Result<FlowResult> {
    let (a0, a1, g0, g1) = endpoint_gaps(path, tol)?;
    let r0 = p_plus(&a0, tol)?.rank();
    let r1 = p_plus(&a1, tol)?.rank();
    Ok(FlowResult {
        sf: r1 as i64 - r0 as i64,
        engine: Engine::Endpoint,
        diagnostics: Diagnostics {
            endpoint_gaps: Some((g0, g1)),
            endpoint_ranks: Some((r0, r1)),
            ..Default::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    pub max_depth: usize,
    /// Sub-samples per cell used to certify the spectral gap.
    pub samples: usize,
    /// Margin lines are searched in `[-window, -gap_min]`.
    pub window: f64,
    pub nodes: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { max_depth: 24, samples: 32, window: 0.5, nodes: crate::spectral::DEFAULT_CONTOUR_NODES }
    }
}

struct Sample {
    eigenvalues: Vec<Complex64>,
    kappa: f64,
    /// `|N|_F` for the Schur form `T = D + N`.
    departure: f64,
    norm: f64,
    matrix: CMatrix,
}

fn sample(path: &OperatorPath, t: f64) -> Result<Sample> {
    let matrix = path.at(t);
    let schur = SchurForm::new(&matrix)?;
    let kappa = condition_number(&schur.eigenvectors());
    let n = schur.t.nrows();
    let departure = (0..n)
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .map(|ij| schur.t[ij].norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(Sample {
        departure,
        eigenvalues: schur.diagonal(),
        kappa: if kappa.is_finite() { kappa } else { f64::INFINITY },
        norm: frobenius(&matrix),
        matrix,
    })
}

/// Largest free sub-interval of `[lo, hi]` after removing `excluded`.
fn widest_gap(lo: f64, hi: f64, mut excluded: Vec<(f64, f64)>) -> Option<(f64, f64)> {
    excluded.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, f64)> = None;
    let mut cursor = lo;
    let consider = |a: f64, b: f64, best: &mut Option<(f64, f64)>| {
        if b > a && best.is_none_or(|(x, y)| b - a > y - x) {
            *best = Some((a, b));
        }
    };
    for (a, b) in excluded {
        if b <= cursor {
            continue;
        }
        if a >= hi {
            break;
        }
        consider(cursor, a.min(hi), &mut best);
        cursor = cursor.max(b);
        if cursor >= hi {
            break;
        }
    }
    consider(cursor, hi, &mut best);
    best
}

/// Tries to certify a margin line on `[t0, t1]`. Returns `None` when the
/// cell has to be split.
fn certify_cell(
    path: &OperatorPath,
    t0: f64,
    t1: f64,
    opts: &PartitionOptions,
    tol: &Tolerances,
) -> Result<Option<(f64, f64)>> {
    let m = opts.samples.max(2);
    let samples: Vec<Sample> = (0..=m)
        .map(|i| sample(path, t0 + (t1 - t0) * i as f64 / m as f64))
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = samples
        .windows(2)
        .map(|w| frobenius(&(&w[1].matrix - &w[0].matrix)))
        .collect();
    let mut excluded = Vec::new();
    let mut radius_max: f64 = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let left = if i > 0 { diffs[i - 1] } else { 0.0 };
        let right = diffs.get(i).copied().unwrap_or(0.0);
        // Bauer-Fike: eigenvalues of A(t) for t near this sample stay within
        // kappa * |A(t) - A(t_i)| of the sampled ones, and within
        // |N| + |A(t) - A(t_i)| since Q D Q* is normal.
        let step = left.max(right);
        let radius = (s.kappa * step).min(s.departure + step);
        if !radius.is_finite() {
            return Ok(None);
        }
        radius_max = radius_max.max(radius);
        for z in &s.eigenvalues {
            excluded.push((z.re - radius - tol.gap_min, z.re + radius + tol.gap_min));
        }
    }
    let Some((a, b)) = widest_gap(-opts.window, -tol.gap_min, excluded) else {
        return Ok(None);
    };
    let line = 0.5 * (a + b);
    let norm_max = samples.iter().map(|s| s.norm).fold(0.0, f64::max);
    let box_half = norm_max + radius_max + 1.0;
    Ok(Some((line, box_half)))
}

fn build_partition(
    path: &OperatorPath,
    t0: f64,
    t1: f64,
    depth: usize,
    opts: &PartitionOptions,
    tol: &Tolerances,
    out: &mut Vec<(f64, f64, f64, f64)>,
) -> Result<()> {
    if let Some((line, box_half)) = certify_cell(path, t0, t1, opts, tol)? {
        out.push((t0, t1, line, box_half));
        return Ok(());
    }
    if depth >= opts.max_depth {
        return Err(Error::SubdivisionLimit { depth, t0, t1 });
    }
    let mid = 0.5 * (t0 + t1);
    build_partition(path, t0, mid, depth + 1, opts, tol, out)?;
    build_partition(path, mid, t1, depth + 1, opts, tol, out)
}

pub fn sf_partition(path: &OperatorPath, opts: &PartitionOptions, tol: &Tolerances) -> Result<FlowResult> {
    let (a0, a1, g0, g1) = endpoint_gaps(path, tol)?;
    let mut raw = Vec::new();
    build_partition(path, 0.0, 1.0, 0, opts, tol, &mut raw)?;

    let section = |t: f64, line: f64, box_half: f64| -> Result<Projector> {
        let contour = Contour::with_nodes(line, box_half, box_half, opts.nodes)?;
        riesz_projector(&path.at(t), &contour, tol)
    };

    let mut cells = Vec::with_capacity(raw.len());
    // sections evaluated at the left and right end of each cell
    let mut left = Vec::with_capacity(raw.len());
    let mut right = Vec::with_capacity(raw.len());
    for &(t0, t1, line, box_half) in &raw {
        let q0 = section(t0, line, box_half)?;
        let q1 = section(t1, line, box_half)?;
        if q0.rank() != q1.rank() {
            return Err(Error::NumericalFailure {
                what: format!("spectral section changed rank on [{t0}, {t1}]"),
                residual: (q0.rank() as f64 - q1.rank() as f64).abs(),
            });
        }
        cells.push(PartitionCell { t0, t1, margin_line: line, box_half, section_rank: q0.rank() });
        left.push(q0);
        right.push(q1);
    }

    let pp0 = p_plus(&a0, tol)?;
    let pp1 = p_plus(&a1, tol)?;
    let last = cells.len() - 1;
    let mut sf = rel_dim(&left[0], &pp0, tol)?.value - rel_dim(&right[last], &pp1, tol)?.value;
    for k in 0..last {
        // junction at t_k: [Q_{k+1}(t_k) - Q_k(t_k)]
        sf += rel_dim(&left[k + 1], &right[k], tol)?.value;
    }
    Ok(FlowResult {
        sf,
        engine: Engine::Partition,
        diagnostics: Diagnostics {
            endpoint_gaps: Some((g0, g1)),
            endpoint_ranks: Some((pp0.rank(), pp1.rank())),
            partition: cells,
            ..Default::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingOptions {
    pub probes: usize,
    /// Maximum number of step halvings between two probes when eigenvalue
    /// matching is ambiguous.
    pub max_refine: usize,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self { probes: 256, max_refine: 12 }
    }
}

fn eig_at(path: &OperatorPath, t: f64) -> Result<Vec<Complex64>> {
    Ok(SchurForm::new(&path.at(t))?.diagonal())
}

/// Matching of `to` against `from`: `perm[i]` is the index in `to` of the
/// continuation of `from[i]`, plus the largest displacement.
fn match_eigenvalues(from: &[Complex64], to: &[Complex64]) -> (Vec<usize>, f64) {
    let cost: Vec<Vec<f64>> = from.iter().map(|a| to.iter().map(|b| (a - b).norm()).collect()).collect();
    let perm = min_cost_assignment(&cost);
    let disp = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
    (perm, disp)
}

/// Smallest distance between eigenvalues that are not numerically equal.
fn separation(ev: &[Complex64], scale: f64) -> f64 {
    let mut sep = f64::INFINITY;
    for i in 0..ev.len() {
        for j in (i + 1)..ev.len() {
            let d = (ev[i] - ev[j]).norm();
            if d > 1e-8 * scale {
                sep = sep.min(d);
            }
        }
    }
    sep
}

struct Tracker<'a> {
    path: &'a OperatorPath,
    max_refine: usize,
    /// branches[j] = samples (t, lambda) of the j-th continued eigenvalue
    branches: Vec<Vec<(f64, Complex64)>>,
}

impl Tracker<'_> {
    fn push(&mut self, t: f64, ordered: &[Complex64]) {
        for (branch, &z) in self.branches.iter_mut().zip(ordered) {
            branch.push((t, z));
        }
    }

    /// Linear extrapolation of each branch to `tb` from its last two samples.
    fn predict(&self, ea: &[Complex64], tb: f64) -> Vec<Complex64> {
        self.branches
            .iter()
            .zip(ea)
            .map(|(branch, &z)| match branch.as_slice() {
                [.., (t0, z0), (t1, z1)] if t1 > t0 => z + (z1 - z0) * ((tb - t1) / (t1 - t0)),
                _ => z,
            })
            .collect()
    }

    /// Extends the branches from `(ta, ea)` (already pushed, in branch
    /// order) to `tb`, halving the step while matching is ambiguous.
    fn advance(&mut self, ta: f64, ea: &[Complex64], tb: f64, eb: Vec<Complex64>, depth: usize) -> Result<Vec<Complex64>> {
        let scale = ea.iter().chain(&eb).map(|z| z.norm()).fold(1.0, f64::max);
        let guess = self.predict(ea, tb);
        let (perm, disp) = match_eigenvalues(&guess, &eb);
        let sep = separation(ea, scale).min(separation(&eb, scale));
        if disp > 0.5 * sep && depth < self.max_refine {
            let tm = 0.5 * (ta + tb);
            let em = eig_at(self.path, tm)?;
            let ordered_mid = self.advance(ta, ea, tm, em, depth + 1)?;
            return self.advance(tm, &ordered_mid, tb, eb, depth + 1);
        }
        let ordered: Vec<Complex64> = perm.iter().map(|&j| eb[j]).collect();
        self.push(tb, &ordered);
        Ok(ordered)
    }
}

struct Bracket {
    ta: f64,
    tb: f64,
    la: Complex64,
    lb: Complex64,
    direction: i64,
}

fn nearest(ev: &[Complex64], target: Complex64) -> Complex64 {
    *ev.iter()
        .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
        .expect("non-empty spectrum")
}

/// Bisects a sign change of `re lambda` down to `t_tol`.
fn bisect(path: &OperatorPath, br: &Bracket, t_tol: f64) -> Result<(f64, Complex64)> {
    let (mut ta, mut tb, mut la, mut lb) = (br.ta, br.tb, br.la, br.lb);
    let sign_a = la.re.signum();
    while tb - ta > t_tol {
        let tm = 0.5 * (ta + tb);
        let s = (tm - ta) / (tb - ta);
        let predicted = la + (lb - la) * s;
        let mu = nearest(&eig_at(path, tm)?, predicted);
        if mu.re == 0.0 {
            return Ok((tm, mu));
        }
        if mu.re.signum() == sign_a {
            ta = tm;
            la = mu;
        } else {
            tb = tm;
            lb = mu;
        }
    }
    let tm = 0.5 * (ta + tb);
    let mu = nearest(&eig_at(path, tm)?, (la + lb) * 0.5);
    Ok((tm, mu))
}

/// Slopes `re lambda_i'(t)` of the eigenvalue cluster around `center`,
/// from the reduced matrix `(W^H V)^{-1} W^H A' V` on the right and left
/// invariant subspaces.
fn cluster_slopes(a: &CMatrix, da: &CMatrix, center: Complex64, radius: f64, t: f64) -> Result<Vec<(Complex64, f64)>> {
    let n = a.nrows();
    let in_cluster = |z: Complex64| (z - center).norm() <= radius;
    let mut right = SchurForm::new(a)?;
    let m = right.reorder(in_cluster);
    if m == 0 {
        return Err(Error::NumericalFailure {
            what: format!("crossing eigenvalue lost at t = {t}"),
            residual: radius,
        });
    }
    let t11 = right.t.view((0, 0), (m, m)).into_owned();
    let mean = (0..m).map(|i| t11[(i, i)]).sum::<Complex64>() / m as f64;
    if m > 1 {
        let off = frobenius(&(t11 - CMatrix::identity(m, m) * mean));
        if off > radius.max(1e-6 * frobenius(a).max(1.0)) {
            return Err(Error::MultipleEigenvalueAtCrossing { t });
        }
    }
    let v = right.q.columns(0, m).into_owned();
    let mut left = SchurForm::new(a)?;
    let k = left.reorder(|z| !in_cluster(z));
    debug_assert_eq!(k, n - m);
    let w = left.q.columns(n - m, m).into_owned();
    let wv = w.adjoint() * &v;
    if condition_number(&wv) > 1e10 {
        return Err(Error::MultipleEigenvalueAtCrossing { t });
    }
    let reduced = inverse(&wv).ok_or(Error::MultipleEigenvalueAtCrossing { t })? * w.adjoint() * da * &v;
    let derivs = SchurForm::new(&reduced)?.diagonal();
    let lambdas = (0..m).map(|i| right.t[(i, i)]);
    Ok(lambdas.zip(derivs).map(|(l, d)| (l, d.re)).collect())
}

pub fn sf_crossings(
    path: &OperatorPath,
    opts: &CrossingOptions,
    tol: &Tolerances,
) -> Result<(FlowResult, CrossingReport)> {
    if !path.is_smooth() {
        return Err(Error::NoDerivative);
    }
    let (_, _, g0, g1) = endpoint_gaps(path, tol)?;

    let probes = opts.probes.max(2);
    let times: Vec<f64> = (0..probes).map(|i| i as f64 / (probes - 1) as f64).collect();
    let first = eig_at(path, 0.0)?;
    let mut tracker = Tracker {
        path,
        max_refine: opts.max_refine,
        branches: vec![Vec::new(); first.len()],
    };
    tracker.push(0.0, &first);
    let mut current = first;
    for w in times.windows(2) {
        let next = eig_at(path, w[1])?;
        current = tracker.advance(w[0], &current, w[1], next, 0)?;
    }

    let mut brackets = Vec::new();
    for branch in &tracker.branches {
        let nonzero: Vec<&(f64, Complex64)> = branch.iter().filter(|(_, z)| z.re != 0.0).collect();
        for pair in nonzero.windows(2) {
            let (ta, la) = *pair[0];
            let (tb, lb) = *pair[1];
            if la.re.signum() != lb.re.signum() {
                brackets.push(Bracket { ta, tb, la, lb, direction: if lb.re > 0.0 { 1 } else { -1 } });
            }
        }
    }

    let mut located: Vec<(f64, Complex64, i64)> = Vec::new();
    for br in &brackets {
        let (t, lambda) = bisect(path, br, tol.t_tol)?;
        located.push((t, lambda, br.direction));
    }
    located.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut report = CrossingReport::default();
    let mut used = vec![false; located.len()];
    for i in 0..located.len() {
        if used[i] {
            continue;
        }
        let (t, lambda, _) = located[i];
        let a = path.at(t);
        let scale = frobenius(&a).max(1.0);
        let radius = 1e-6 * scale;
        let mut group_direction = 0;
        for j in i..located.len() {
            let (tj, lj, dj) = located[j];
            if !used[j] && (tj - t).abs() <= 1e3 * tol.t_tol && (lj - lambda).norm() <= radius {
                used[j] = true;
                group_direction += dj;
            }
        }
        let da = path.derivative(t).ok_or(Error::NoDerivative)?;
        let slopes = cluster_slopes(&a, &da, lambda, radius, t)?;
        let mut group_total = 0;
        for (l, slope) in slopes {
            if slope.abs() <= tol.slope_min {
                return Err(Error::IrregularCrossing { t, slope });
            }
            let contribution = if slope > 0.0 { 1 } else { -1 };
            group_total += contribution;
            report.crossings.push(Crossing { t, lambda: l, slope, contribution });
        }
        if group_total != group_direction {
            return Err(Error::NumericalFailure {
                what: format!(
                    "crossing slopes at t = {t} give {group_total} but the tracked sign changes give {group_direction}"
                ),
                residual: (group_total - group_direction).abs() as f64,
            });
        }
        report.total += group_total;
    }

    let result = FlowResult {
        sf: report.total,
        engine: Engine::Crossings,
        diagnostics: Diagnostics {
            endpoint_gaps: Some((g0, g1)),
            crossings: Some(report.crossings.len()),
            ..Default::default()
        },
    };
    Ok((result, report))
}

/// Runs one engine with default options.
pub fn spectral_flow(path: &OperatorPath, engine: Engine, tol: &Tolerances) -> Result<FlowResult> {
    match engine {
        Engine::Endpoint => sf_endpoint(path, tol),
        Engine::Partition => sf_partition(path, &PartitionOptions::default(), tol),
        Engine::Crossings => sf_crossings(path, &CrossingOptions::default(), tol).map(|(r, _)| r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{c64, real_diag};
    use crate::path::Domain;

    fn real(x: f64) -> Complex64 {
        c64(x, 0.0)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar_linear() -> OperatorPath {
        OperatorPath::affine(real_diag(&[-1.0]), real_diag(&[2.0])).unwrap()
    }

    #[test]
    fn widest_gap_picks_largest_hole() {
        let g = widest_gap(-1.0, -0.3, vec![(-0.9, -0.8), (-0.5, -0.45)]).unwrap();
        assert_eq!(g, (-0.8, -0.5));
        assert!(widest_gap(-1.0, 0.0, vec![(-2.0, 1.0)]).is_none());
    }

    #[test]
    fn scalar_linear_crossing() {
        let p = scalar_linear();
        let (res, report) = sf_crossings(&p, &CrossingOptions::default(), &tol()).unwrap();
        assert_eq!(res.sf, 1);
        assert_eq!(report.crossings.len(), 1);
        let c = &report.crossings[0];
        assert!((c.t - 0.5).abs() < 1e-9);
        assert!((c.slope - 2.0).abs() < 1e-8);
        assert_eq!(sf_endpoint(&p, &tol()).unwrap().sf, 1);
        assert_eq!(sf_partition(&p, &PartitionOptions::default(), &tol()).unwrap().sf, 1);
    }

    #[test]
    fn scalar_matrix_path_partitions() {
        // (2t - 1) I_3: a triple eigenvalue whose eigenvector matrix is
        // numerically singular
        let p = OperatorPath::affine(real_diag(&[-1.0; 3]), real_diag(&[2.0; 3])).unwrap();
        assert_eq!(sf_partition(&p, &PartitionOptions::default(), &tol()).unwrap().sf, 3);
    }

    #[test]
    fn simultaneous_opposite_crossings() {
        let p = OperatorPath::affine(real_diag(&[-1.0, 1.0]), real_diag(&[2.0, -2.0])).unwrap();
        let (res, report) = sf_crossings(&p, &CrossingOptions::default(), &tol()).unwrap();
        assert_eq!(res.sf, 0);
        let mut slopes: Vec<f64> = report.crossings.iter().map(|c| c.slope).collect();
        slopes.sort_by(f64::total_cmp);
        assert_eq!(slopes.len(), 2);
        assert!((slopes[0] + 2.0).abs() < 1e-8 && (slopes[1] - 2.0).abs() < 1e-8);
        assert!(report.crossings.iter().all(|c| (c.t - 0.5).abs() < 1e-9));
    }

    #[test]
    fn opposite_crossings_cancel() {
        let p = OperatorPath::affine(real_diag(&[-1.0, 1.0]), real_diag(&[2.0, -3.0])).unwrap();
        let (res, report) = sf_crossings(&p, &CrossingOptions::default(), &tol()).unwrap();
        assert_eq!(res.sf, 0);
        assert_eq!(report.crossings.len(), 2);
        let mut slopes: Vec<f64> = report.crossings.iter().map(|c| c.slope).collect();
        slopes.sort_by(f64::total_cmp);
        assert!((slopes[0] + 3.0).abs() < 1e-8 && (slopes[1] - 2.0).abs() < 1e-8);
        assert_eq!(sf_endpoint(&p, &tol()).unwrap().sf, 0);
    }

    #[test]
    fn endpoint_must_be_hyperbolic() {
        let p = OperatorPath::affine(real_diag(&[0.0]), real_diag(&[1.0])).unwrap();
        assert!(matches!(sf_endpoint(&p, &tol()), Err(Error::EndpointNotHyperbolic { t, .. }) if t == 0.0));
    }

    #[test]
    fn crossings_refuse_sampled_paths() {
        let p = OperatorPath::sampled(vec![0.0, 1.0], vec![real_diag(&[-1.0]), real_diag(&[1.0])]).unwrap();
        assert!(matches!(
            sf_crossings(&p, &CrossingOptions::default(), &tol()),
            Err(Error::NoDerivative)
        ));
        assert_eq!(sf_partition(&p, &PartitionOptions::default(), &tol()).unwrap().sf, 1);
    }

    #[test]
    fn tangential_touch_is_irregular() {
        // lambda(t) = (t - 1/2)^2 * 4 - 0 touches the axis at t = 1/2 without crossing,
        // lambda(t) = -(2t-1)^3 crosses with zero slope.
        let p = OperatorPath::new(1, Domain::Unit, |t| real_diag(&[-(2.0 * t - 1.0).powi(3)]))
            .with_derivative(|t| real_diag(&[-6.0 * (2.0 * t - 1.0).powi(2)]));
        assert!(matches!(
            sf_crossings(&p, &CrossingOptions::default(), &tol()),
            Err(Error::IrregularCrossing { .. })
        ));
        assert_eq!(sf_endpoint(&p, &tol()).unwrap().sf, -1);
    }

    #[test]
    fn jordan_crossing_is_rejected() {
        // J2(2t - 1): a defective eigenvalue crosses the axis
        let p = OperatorPath::new(2, Domain::Unit, |t| {
            let mut m = real_diag(&[2.0 * t - 1.0, 2.0 * t - 1.0]);
            m[(0, 1)] = real(1.0);
            m
        })
        .with_derivative(|_| real_diag(&[2.0, 2.0]));
        assert!(matches!(
            sf_crossings(&p, &CrossingOptions::default(), &tol()),
            Err(Error::MultipleEigenvalueAtCrossing { .. })
        ));
        assert_eq!(sf_endpoint(&p, &tol()).unwrap().sf, 2);
    }
}
