//! Dense complex linear algebra: Schur decomposition with eigenvalue
//! reordering, singular values, rank, linear solves and subspace bases.
//!
//! Every routine works on `DMatrix<Complex64>`; real input is embedded into
//! the complex field before any spectral work.

use nalgebra::{DMatrix, Hessenberg, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Dense square complex matrix.
pub type CMatrix = DMatrix<Complex64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    let n = entries.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &v) in entries.iter().enumerate() {
        m[(i, i)] = v;
    }
    m
}

pub fn real_diag(entries: &[f64]) -> CMatrix {
    diag(&entries.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>())
}

/// Embeds a real row-major matrix into the complex field.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c64(rows[i][j], 0.0))
}

/// Checks that `a` is a non-empty square matrix with finite entries and
/// returns its dimension.
pub fn validate(a: &CMatrix) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidDimension("empty matrix".into()));
    }
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidDimension(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(a.nrows())
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn norm2(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Singular values in non-increasing order. Accepts rectangular input.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol_rank * sigma_max`.
pub fn rank(m: &CMatrix, tol_rank: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol_rank * smax).count()
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(a: &CMatrix) -> f64 {
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return f64::INFINITY;
    }
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Solves `A X = B` after checking the conditioning of `A`.
pub fn solve(a: &CMatrix, b: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let n = validate(a)?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
    }
    let kappa = condition_number(a);
    if !(kappa <= tol.kappa_max) {
        return Err(Error::SingularSystem { condition: kappa });
    }
    lu_solve(a, b).ok_or(Error::SingularSystem { condition: kappa })
}

/// LU solve without a conditioning check, for hot loops whose callers have
/// already certified invertibility.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMatrix) -> Option<CMatrix> {
    a.clone().lu().try_inverse()
}

/// Orthonormal columns spanning a subspace of `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: CMatrix,
}

impl SubspaceBasis {
    /// Wraps `columns` after checking orthonormality to `tol_ortho`.
    pub fn new(columns: CMatrix, tol_ortho: f64) -> Result<Self> {
        let k = columns.ncols();
        let gram = columns.adjoint() * &columns;
        let defect = max_abs(&(gram - CMatrix::identity(k, k)));
        if defect > tol_ortho {
            return Err(Error::NumericalFailure {
                what: "basis columns are not orthonormal".into(),
                residual: defect,
            });
        }
        Ok(Self { columns })
    }

    /// Orthonormal basis of the column space of `m`, using the singular
    /// value cutoff `tol_rank * sigma_max`.
    pub fn range_of(m: &CMatrix, tol_rank: f64) -> Self {
        let n = m.nrows();
        if m.ncols() == 0 {
            return Self { columns: CMatrix::zeros(n, 0) };
        }
        let svd = SVD::new(m.clone(), true, false);
        let u = svd.u.expect("requested U");
        let s = &svd.singular_values;
        let smax = s.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..s.len())
            .filter(|&i| smax > 0.0 && s[i] > tol_rank * smax)
            .collect();
        let mut cols = CMatrix::zeros(n, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            cols.set_column(j, &u.column(i));
        }
        Self { columns: cols }
    }

    /// Orthonormalizes the (assumed full-rank) columns of `m` by QR.
    pub fn orthonormalize(m: &CMatrix) -> Self {
        let k = m.ncols();
        if k == 0 {
            return Self { columns: CMatrix::zeros(m.nrows(), 0) };
        }
        let q = m.clone().qr().q();
        Self { columns: q.columns(0, k).into_owned() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    pub fn into_columns(self) -> CMatrix {
        self.columns
    }
}

/// Complex Schur form `A = Q T Q^H` with `Q` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: CMatrix,
    pub t: CMatrix,
}

const SCHUR_MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, c64(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, c64(1.0, 0.0));
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    (ax / r, phase * y.conj() / r)
}

/// Applies `G` from the left to rows `k, k+1`, columns `cols`.
fn rot_rows(m: &mut CMatrix, k: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    for j in cols {
        let a = m[(k, j)];
        let b = m[(k + 1, j)];
        m[(k, j)] = a * c + s * b;
        m[(k + 1, j)] = -s.conj() * a + b * c;
    }
}

/// Applies `G^H` from the right to columns `k, k+1`, rows `rows`.
fn rot_cols(m: &mut CMatrix, k: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    for i in rows {
        let a = m[(i, k)];
        let b = m[(i, k + 1)];
        m[(i, k)] = a * c + b * s.conj();
        m[(i, k + 1)] = -s * a + b * c;
    }
}

/// Ahues-Tisseur deflation test for `t[(l, l-1)]`, as in LAPACK `zlahqr`.
/// Catches subdiagonals that stall at roundoff level near repeated
/// eigenvalues.
fn negligible_subdiagonal(t: &CMatrix, l: usize, eps: f64) -> bool {
    let h10 = t[(l, l - 1)].norm();
    let h01 = t[(l - 1, l)].norm();
    let ab = h10.max(h01);
    let ba = h10.min(h01);
    let (hkk, hk1) = (t[(l, l)], t[(l - 1, l - 1)]);
    let aa = hkk.norm().max((hk1 - hkk).norm());
    let bb = hkk.norm().min((hk1 - hkk).norm());
    let s = aa + ab;
    if s == 0.0 {
        return true;
    }
    ba * (ab / s) <= (f64::MIN_POSITIVE / eps).max(eps * (bb * (aa / s)))
}

/// Eigenvalue of the 2x2 matrix `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

impl SchurForm {
    /// Complex Schur decomposition by Hessenberg reduction followed by
    /// implicitly shifted single-shift QR sweeps.
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = validate(a)?;
        if n == 1 {
            return Ok(Self { q: identity(1), t: a.clone() });
        }
        let (mut q, mut t) = Hessenberg::new(a.clone()).unpack();
        for j in 0..n {
            for i in (j + 2)..n {
                t[(i, j)] = c64(0.0, 0.0);
            }
        }
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        let eps = f64::EPSILON;
        // norm-wise floor: clusters of equal eigenvalues leave subdiagonals at
        // a few ulp of |A| that the relative tests never accept
        let floor = 10.0 * n as f64 * eps * frobenius(a);
        let mut hi = n - 1;
        let mut iter = 0usize;
        let mut total = 0usize;
        let budget = SCHUR_MAX_SWEEPS_PER_EIGENVALUE * n;
        while hi > 0 {
            let mut l = hi;
            while l > 0 {
                let sub = t[(l, l - 1)].norm();
                let diag_mag = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
                let reference = if diag_mag == 0.0 { scale } else { diag_mag };
                if sub <= eps * reference || sub <= floor || negligible_subdiagonal(&t, l, eps) {
                    t[(l, l - 1)] = c64(0.0, 0.0);
                    break;
                }
                l -= 1;
            }
            if l == hi {
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            total += 1;
            if total > budget {
                return Err(Error::NumericalFailure {
                    what: "Schur QR iteration did not converge".into(),
                    residual: t[(hi, hi - 1)].norm(),
                });
            }
            let mu = if iter.is_multiple_of(11) {
                // exceptional shift
                t[(hi, hi)] + c64(t[(hi, hi - 1)].norm() * 0.75, t[(hi - 1, hi - 1)].norm() * 0.1)
            } else {
                wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
            };
            let mut x = t[(l, l)] - mu;
            let mut y = t[(l + 1, l)];
            for k in l..hi {
                if k > l {
                    x = t[(k, k - 1)];
                    y = t[(k + 1, k - 1)];
                }
                let (c, s) = givens(x, y);
                let col0 = if k > l { k - 1 } else { k };
                rot_rows(&mut t, k, c, s, col0..n);
                let row_end = (k + 3).min(hi + 1);
                rot_cols(&mut t, k, c, s, 0..row_end);
                rot_cols(&mut q, k, c, s, 0..n);
                if k > l {
                    t[(k + 1, k - 1)] = c64(0.0, 0.0);
                }
            }
        }
        Ok(Self { q, t })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Diagonal of `T`, in Schur order.
    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps the diagonal entries at `k` and `k + 1` by a unitary rotation.
    fn swap_adjacent(&mut self, k: usize) {
        let n = self.dim();
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let c = self.t[(k, k + 1)];
        // eigenvector of the 2x2 block for eigenvalue `b`
        let (gc, gs) = givens(c, b - a);
        // G^H maps e1 to the normalized eigenvector, so apply G on the left
        // and G^H on the right.
        rot_rows(&mut self.t, k, gc, gs, k..n);
        rot_cols(&mut self.t, k, gc, gs, 0..(k + 2));
        rot_cols(&mut self.q, k, gc, gs, 0..n);
        self.t[(k + 1, k)] = c64(0.0, 0.0);
        self.t[(k, k)] = b;
        self.t[(k + 1, k + 1)] = a;
    }

    /// Moves every diagonal entry satisfying `select` to the leading block,
    /// preserving relative order, and returns the size of that block.
    pub fn reorder<F: Fn(Complex64) -> bool>(&mut self, select: F) -> usize {
        let n = self.dim();
        let mut lead = 0;
        for j in 0..n {
            if select(self.t[(j, j)]) {
                for k in (lead..j).rev() {
                    self.swap_adjacent(k);
                }
                lead += 1;
            }
        }
        lead
    }

    /// Moves the entry at position `from` to position `to` by adjacent swaps.
    pub fn move_entry(&mut self, from: usize, to: usize) {
        if from > to {
            for k in (to..from).rev() {
                self.swap_adjacent(k);
            }
        } else {
            for k in from..to {
                self.swap_adjacent(k);
            }
        }
    }

    /// `|A Q - Q T|_F`.
    pub fn reconstruction_defect(&self, a: &CMatrix) -> f64 {
        frobenius(&(a * &self.q - &self.q * &self.t))
    }

    /// Unit-norm right eigenvectors (columns), one per diagonal entry of `T`.
    ///
    /// Repeated eigenvalues use a perturbed denominator; for defective
    /// eigenvalues the returned columns are nearly parallel.
    pub fn eigenvectors(&self) -> CMatrix {
        let n = self.dim();
        let t = &self.t;
        let small = f64::EPSILON * max_abs(t).max(f64::MIN_POSITIVE);
        let mut y = CMatrix::zeros(n, n);
        for j in 0..n {
            y[(j, j)] = c64(1.0, 0.0);
            let lambda = t[(j, j)];
            for i in (0..j).rev() {
                let mut acc = c64(0.0, 0.0);
                for l in (i + 1)..=j {
                    acc += t[(i, l)] * y[(l, j)];
                }
                let mut den = t[(i, i)] - lambda;
                if den.norm() < small {
                    den = c64(small, 0.0);
                }
                y[(i, j)] = -acc / den;
            }
        }
        let mut v = &self.q * y;
        for mut col in v.column_iter_mut() {
            let nrm = col.norm();
            if nrm > 0.0 {
                col.unscale_mut(nrm);
            }
        }
        v
    }
}

/// Lexicographic order on (real part, imaginary part).
pub fn cmp_complex(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues with the Schur basis that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSystem {
    /// Sorted lexicographically by (re, im).
    pub eigenvalues: Vec<Complex64>,
    /// Unitary Schur basis.
    #[serde(skip)]
    pub basis: CMatrix,
    /// Upper triangular Schur factor in the basis order.
    #[serde(skip)]
    pub triangular: CMatrix,
    /// Condition number of `basis` (1 up to rounding for a unitary basis).
    pub condition: f64,
    pub reconstruction_defect: f64,
}

pub fn eigendecompose(a: &CMatrix, tol: &Tolerances) -> Result<EigenSystem> {
    let schur = SchurForm::new(a)?;
    let defect = schur.reconstruction_defect(a);
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    if defect > tol.recon * scale.max(1.0) {
        return Err(Error::NumericalFailure {
            what: "Schur reconstruction defect".into(),
            residual: defect,
        });
    }
    let mut eigenvalues = schur.diagonal();
    eigenvalues.sort_by(cmp_complex);
    Ok(EigenSystem {
        eigenvalues,
        condition: condition_number(&schur.q),
        basis: schur.q,
        triangular: schur.t,
        reconstruction_defect: defect,
    })
}

/// Sorted eigenvalues.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let mut ev = SchurForm::new(a)?.diagonal();
    ev.sort_by(cmp_complex);
    Ok(ev)
}

/// Minimum-cost perfect assignment for a square cost matrix given row-major.
/// Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // potentials formulation, 1-based with a virtual column 0
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Largest distance in the optimal bipartite matching of two eigenvalue
/// multisets (minimizing the total distance). Infinite if the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let assign = min_cost_assignment(&cost);
    assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .fold(0.0, f64::max)
}
