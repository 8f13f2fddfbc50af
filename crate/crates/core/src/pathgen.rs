//! Seeded generators of paths with known spectral flow.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matcore::{c64, frobenius, identity, inverse, real_diag, CMatrix};
use crate::odeindex::BlockPath;
use crate::path::{Domain, OperatorPath};
use crate::spectral::{is_hyperbolic, Projector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian matrix with entries of variance `1 / n`.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let s = (0.5 / rows.max(1) as f64).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(s * re, s * im)
    })
}

fn scaled(m: &CMatrix, x: f64) -> CMatrix {
    m * c64(x, 0.0)
}

/// `(2t - 1) I_k (+) I_{n-k}` on `[0, 1]`.
pub fn canonical_k(n: usize, k: usize) -> Result<OperatorPath> {
    if n == 0 || k > n {
        return Err(Error::RangeError(format!("canonical path needs 0 <= k <= n and n >= 1, got n = {n}, k = {k}")));
    }
    let entries = move |t: f64| -> Vec<f64> { (0..n).map(|i| if i < k { 2.0 * t - 1.0 } else { 1.0 }).collect() };
    let slope: Vec<f64> = (0..n).map(|i| if i < k { 2.0 } else { 0.0 }).collect();
    Ok(OperatorPath::new(n, Domain::Unit, move |t| real_diag(&entries(t)))
        .with_derivative(move |_| real_diag(&slope))
        .with_lipschitz(2.0 * (k as f64).sqrt()))
}

/// `tanh(t)` on the real line (scalar).
pub fn tanh_scalar() -> OperatorPath {
    OperatorPath::new(1, Domain::RealLine, |t| real_diag(&[t.tanh()]))
        .with_derivative(|t| real_diag(&[1.0 / t.cosh().powi(2)]))
        .with_limits(real_diag(&[-1.0]), real_diag(&[1.0]))
        .with_lipschitz(1.0)
}

/// `tanh(4t - 2)` on `[0, 1]`.
pub fn tanh_unit() -> OperatorPath {
    OperatorPath::new(1, Domain::Unit, |t| real_diag(&[(4.0 * t - 2.0).tanh()]))
        .with_derivative(|t| real_diag(&[4.0 / (4.0 * t - 2.0).cosh().powi(2)]))
        .with_lipschitz(4.0)
}

/// Trigonometric polynomial `C0 + sum_m (Cm cos(pi m t) + Sm sin(pi m t)) / m`.
#[derive(Debug, Clone)]
struct TrigPoly {
    c0: CMatrix,
    cos: Vec<CMatrix>,
    sin: Vec<CMatrix>,
}

impl TrigPoly {
    fn random<R: Rng>(rng: &mut R, n: usize, degree: usize) -> Self {
        let c0 = gaussian_matrix(rng, n, n);
        let mut cos = Vec::with_capacity(degree);
        let mut sin = Vec::with_capacity(degree);
        for m in 1..=degree {
            cos.push(scaled(&gaussian_matrix(rng, n, n), 1.0 / m as f64));
            sin.push(scaled(&gaussian_matrix(rng, n, n), 1.0 / m as f64));
        }
        Self { c0, cos, sin }
    }

    fn eval(&self, t: f64) -> CMatrix {
        let mut out = self.c0.clone();
        for (i, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = PI * (i + 1) as f64 * t;
            out += scaled(c, w.cos()) + scaled(s, w.sin());
        }
        out
    }

    fn deriv(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.c0.nrows(), self.c0.ncols());
        for (i, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let f = PI * (i + 1) as f64;
            let w = f * t;
            out += scaled(c, -f * w.sin()) + scaled(s, f * w.cos());
        }
        out
    }

    fn bound(&self) -> f64 {
        // Lipschitz bound sum_m pi m (|Cm| + |Sm|)
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (c, s))| PI * (i + 1) as f64 * (frobenius(c) + frobenius(s)))
            .sum()
    }
}

/// `2 P+(a) - I` where `P+` selects eigenvalues with `re z >= 0`.
fn sign_involution(a: &CMatrix) -> Result<CMatrix> {
    let p = crate::spectral::schur_projector(a, |z| z.re >= 0.0)?;
    Ok(scaled(p.matrix(), 2.0) - identity(a.nrows()))
}

/// Seeded trigonometric polynomial path on `[0, 1]` whose endpoints are
/// pushed off the imaginary axis by `mu (2 P+ - I)` for the smallest
/// `mu` in `0, 0.5, 1, ...` giving a gap above `2 gap_min`.
pub fn random_smooth(n: usize, seed: u64, degree: usize) -> Result<OperatorPath> {
    if n == 0 {
        return Err(Error::InvalidDimension("random path of dimension 0".into()));
    }
    if degree > 8 {
        return Err(Error::RangeError(format!("degree {degree} exceeds 8")));
    }
    let tol = Tolerances::default();
    let mut rng = rng(seed);
    let poly = TrigPoly::random(&mut rng, n, degree);
    let mut shifts = Vec::with_capacity(2);
    for t in [0.0, 1.0] {
        let a = poly.eval(t);
        let j = sign_involution(&a)?;
        let mut found = None;
        for attempt in 0..16 {
            let mu = 0.5 * attempt as f64;
            let (_, gap) = is_hyperbolic(&(&a + scaled(&j, mu)), tol.gap_min)?;
            if gap > 2.0 * tol.gap_min {
                found = Some(scaled(&j, mu));
                break;
            }
        }
        shifts.push(found.ok_or_else(|| {
            Error::GenerationFailure(format!("no endpoint shift made A({t}) hyperbolic (seed {seed})"))
        })?);
    }
    let (s0, s1) = (shifts[0].clone(), shifts[1].clone());
    let lipschitz = poly.bound() + frobenius(&s0) + frobenius(&s1);
    let poly = Arc::new(poly);
    let p2 = poly.clone();
    let (d0, d1) = (s0.clone(), s1.clone());
    Ok(OperatorPath::new(n, Domain::Unit, move |t| poly.eval(t) + scaled(&s0, 1.0 - t) + scaled(&s1, t))
        .with_derivative(move |t| p2.deriv(t) - &d0 + &d1)
        .with_lipschitz(lipschitz))
}

/// `B(t) = R(t) + (1 - t) (a - R(0))` for a seeded random path `R`, so that
/// `B(0) = a` and `B(1) = R(1)` is hyperbolic.
pub fn composable_after(a: &CMatrix, seed: u64, degree: usize) -> Result<OperatorPath> {
    let r = random_smooth(a.nrows(), seed, degree)?;
    let offset = a - r.at(0.0);
    let (r1, o1) = (r.clone(), offset.clone());
    let path = OperatorPath::new(a.nrows(), Domain::Unit, move |t| r1.at(t) + scaled(&o1, 1.0 - t))
        .with_derivative(move |t| r.derivative(t).expect("random paths are smooth") - &offset);
    Ok(path)
}

/// Oblique projector `S diag(1_rank, 0) S^{-1}` with `S = I + X`, `|X|_F = 0.5`.
pub fn random_projector(n: usize, rank: usize, seed: u64) -> Result<Projector> {
    if rank > n {
        return Err(Error::RangeError(format!("rank {rank} exceeds dimension {n}")));
    }
    let mut rng = rng(seed);
    let x = gaussian_matrix(&mut rng, n, n);
    let f = frobenius(&x);
    let s = identity(n) + if f > 0.0 { scaled(&x, 0.5 / f) } else { x };
    let s_inv = inverse(&s).ok_or_else(|| Error::GenerationFailure("singular similarity".into()))?;
    let d: Vec<f64> = (0..n).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
    Projector::new(&s * real_diag(&d) * s_inv, 1e-10)
}

/// Matrix whose spectrum splits into a right cluster (`re` in `[0.25, 2]`)
/// and a left cluster (`re` in `[-2, -0.25]`), at least 0.5 apart, in a
/// random non-normal basis. With `jordan`, the first eigenvalue carries a
/// 2x2 Jordan block. Returns the matrix and the number of eigenvalues in
/// the right half-plane (with multiplicity).
pub fn separated_matrix(n: usize, seed: u64, jordan: bool) -> Result<(CMatrix, usize)> {
    if n < 2 {
        return Err(Error::InvalidDimension("separated matrices need n >= 2".into()));
    }
    let mut rng = rng(seed);
    let right = rng.random_range(1..n);
    let mut eig: Vec<num_complex::Complex64> = (0..n)
        .map(|i| {
            let re = rng.random_range(0.25..2.0);
            let im = rng.random_range(-1.0..1.0);
            c64(if i < right { re } else { -re }, im)
        })
        .collect();
    let mut t = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            t[(i, j)] = c64(0.3 * re, 0.3 * im);
        }
    }
    if jordan {
        eig[1] = eig[0];
        t[(0, 1)] = c64(1.0, 0.0);
    }
    for (i, z) in eig.iter().enumerate() {
        t[(i, i)] = *z;
    }
    let right_count = eig.iter().filter(|z| z.re > 0.0).count();
    let s = near_identity(&mut rng, n);
    let s_inv = inverse(&s).ok_or_else(|| Error::GenerationFailure("singular similarity".into()))?;
    Ok((&s * t * s_inv, right_count))
}

/// Loop `t -> 2 U(t) P U(t)^{-1} - I` with
/// `U(t) = I + sin(2 pi t) X1 + (1 - cos(2 pi t)) X2`, `|X_i|_F = 0.3`.
pub fn conjugation_loop(p: &Projector, seed: u64) -> OperatorPath {
    let n = p.dim();
    let mut rng = rng(seed);
    let normalize = |m: CMatrix| {
        let f = frobenius(&m);
        if f > 0.0 {
            scaled(&m, 0.3 / f)
        } else {
            m
        }
    };
    let x1 = normalize(gaussian_matrix(&mut rng, n, n));
    let x2 = normalize(gaussian_matrix(&mut rng, n, n));
    let pm = p.matrix().clone();
    let u = {
        let (x1, x2) = (x1.clone(), x2.clone());
        Arc::new(move |t: f64| {
            let w = 2.0 * PI * t;
            identity(n) + scaled(&x1, w.sin()) + scaled(&x2, 1.0 - w.cos())
        })
    };
    let du = move |t: f64| {
        let w = 2.0 * PI * t;
        scaled(&x1, 2.0 * PI * w.cos()) + scaled(&x2, 2.0 * PI * w.sin())
    };
    let (u1, p1) = (u.clone(), pm.clone());
    let eval = move |t: f64| {
        let ut = u1(t);
        // |U - I|_2 <= 0.9, so U is invertible
        let inv = inverse(&ut).expect("U(t) is within 0.9 of the identity");
        scaled(&(&ut * &p1 * inv), 2.0) - identity(n)
    };
    let deriv = move |t: f64| {
        let ut = u(t);
        let inv = inverse(&ut).expect("U(t) is within 0.9 of the identity");
        let conj = &ut * &pm * &inv;
        let d = du(t);
        scaled(&(&d * &pm * &inv - &conj * &d * &inv), 2.0)
    };
    OperatorPath::new(n, Domain::Unit, eval).with_derivative(deriv)
}

/// Family `H(t, s) = A(t) + s amp sin^2(pi t) W(t)` with a seeded
/// trigonometric `W`; endpoints do not move.
#[derive(Debug, Clone)]
pub struct Homotopy {
    base: OperatorPath,
    wiggle: Arc<TrigPoly>,
    amplitude: f64,
}

impl Homotopy {
    pub fn at(&self, s: f64) -> OperatorPath {
        let (base, w) = (self.base.clone(), self.wiggle.clone());
        let a = s * self.amplitude;
        let eval = move |t: f64| base.at(t) + scaled(&w.eval(t), a * (PI * t).sin().powi(2));
        let mut out = OperatorPath::new(self.base.dim(), Domain::Unit, eval);
        if self.base.is_smooth() {
            let (base, w) = (self.base.clone(), self.wiggle.clone());
            out = out.with_derivative(move |t: f64| {
                let bump = (PI * t).sin().powi(2);
                let dbump = PI * (2.0 * PI * t).sin();
                base.derivative(t).expect("smooth base") + scaled(&w.eval(t), a * dbump) + scaled(&w.deriv(t), a * bump)
            });
        }
        out
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

pub fn homotopy_wiggle(path: &OperatorPath, seed: u64, amplitude: f64) -> Result<Homotopy> {
    path.require_unit()?;
    let mut rng = rng(seed);
    let wiggle = TrigPoly::random(&mut rng, path.dim(), 2);
    Ok(Homotopy { base: path.clone(), wiggle: Arc::new(wiggle), amplitude })
}

/// Smooth step: 0 for `t <= -2`, 1 for `t >= 2`, and its derivative.
fn smooth_step(t: f64) -> (f64, f64) {
    let x = (t + 2.0) / 4.0;
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let g = |x: f64| (-1.0 / x).exp();
    let dg = |x: f64| g(x) / (x * x);
    let (a, b) = (g(x), g(1.0 - x));
    let s = a + b;
    let d = (dg(x) * b + a * dg(1.0 - x)) / (s * s);
    (a / s, 0.25 * d)
}

/// Random invertible `I + X` with `|X|_F = 0.25`.
fn near_identity<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let x = gaussian_matrix(rng, n, n);
    let f = frobenius(&x);
    identity(n) + if f > 0.0 { scaled(&x, 0.25 / f) } else { x }
}

/// Block `S diag(s_j (a_j + b_j tanh t)) S^{-1}` over one index group.
#[derive(Debug, Clone)]
struct DiagonalBlock {
    idx: Vec<usize>,
    s: CMatrix,
    s_inv: CMatrix,
    sign: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl DiagonalBlock {
    fn random<R: Rng>(rng: &mut R, idx: Vec<usize>, sign: f64) -> Self {
        let m = idx.len();
        let s = near_identity(rng, m);
        let s_inv = inverse(&s).expect("near-identity matrix is invertible");
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..2.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
        Self { idx, s, s_inv, sign, a, b }
    }

    fn diag(&self, tanh: f64) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| self.sign * (a + b * tanh)).collect()
    }

    fn conj(&self, d: &[f64]) -> CMatrix {
        &self.s * real_diag(d) * &self.s_inv
    }

    fn add_into(&self, out: &mut CMatrix, m: &CMatrix) {
        for (i, &gi) in self.idx.iter().enumerate() {
            for (j, &gj) in self.idx.iter().enumerate() {
                out[(gi, gj)] += m[(i, j)];
            }
        }
    }
}

#[derive(Debug)]
struct BlockModel {
    n: usize,
    groups: Vec<DiagonalBlock>,
    /// `M+ - A0_lead(+inf)` on the leading block, padded to `n x n`.
    jump: CMatrix,
}

impl BlockModel {
    fn a0(&self, t: f64) -> CMatrix {
        let th = t.tanh();
        let mut out = CMatrix::zeros(self.n, self.n);
        for g in &self.groups {
            g.add_into(&mut out, &g.conj(&g.diag(th)));
        }
        out
    }

    fn a0_limit(&self, sign: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for g in &self.groups {
            g.add_into(&mut out, &g.conj(&g.diag(sign)));
        }
        out
    }

    fn a0_deriv(&self, t: f64) -> CMatrix {
        let sech2 = 1.0 / t.cosh().powi(2);
        let mut out = CMatrix::zeros(self.n, self.n);
        for g in &self.groups {
            let d: Vec<f64> = g.b.iter().map(|b| g.sign * b * sech2).collect();
            g.add_into(&mut out, &g.conj(&d));
        }
        out
    }
}

fn check_block_args(n_plus: usize, n_minus: usize, r: usize, k: i64) -> Result<()> {
    let n = n_plus + n_minus;
    if n == 0 {
        return Err(Error::InvalidDimension("block path of dimension 0".into()));
    }
    if r > n {
        return Err(Error::RangeError(format!("leading block size {r} exceeds dimension {n}")));
    }
    if k.unsigned_abs() as usize > r {
        return Err(Error::RangeError(format!("|k| = {} exceeds the leading block size {r}", k.abs())));
    }
    let available = if k > 0 { n_minus } else { n_plus };
    if k.unsigned_abs() as usize > available {
        return Err(Error::GenerationFailure(format!(
            "planting k = {k} needs {} coordinates of the flipping sign, only {available} exist",
            k.abs()
        )));
    }
    Ok(())
}

/// Coordinate signs: the first `|k|` coordinates carry the sign that flips,
/// the rest are a seeded shuffle of the remaining signs.
fn sign_mask<R: Rng>(rng: &mut R, n_plus: usize, n_minus: usize, k: i64) -> Vec<bool> {
    let flips = k.unsigned_abs() as usize;
    let flip_is_plus = k < 0;
    let (mut plus_left, mut minus_left) = (n_plus, n_minus);
    let mut mask = Vec::with_capacity(n_plus + n_minus);
    for _ in 0..flips {
        mask.push(flip_is_plus);
        if flip_is_plus {
            plus_left -= 1;
        } else {
            minus_left -= 1;
        }
    }
    let mut rest: Vec<bool> = std::iter::repeat_n(true, plus_left).chain(std::iter::repeat_n(false, minus_left)).collect();
    rest.shuffle(rng);
    mask.extend(rest);
    mask
}

fn build_model<R: Rng>(rng: &mut R, mask: &[bool], r: usize, k: i64) -> BlockModel {
    let n = mask.len();
    let mut groups = Vec::new();
    for (lead, sign) in [(true, true), (true, false), (false, true), (false, false)] {
        let idx: Vec<usize> = (0..n).filter(|&i| (i < r) == lead && mask[i] == sign).collect();
        if !idx.is_empty() {
            groups.push(DiagonalBlock::random(rng, idx, if sign { 1.0 } else { -1.0 }));
        }
    }
    let mut model = BlockModel { n, groups, jump: CMatrix::zeros(n, n) };
    if r > 0 && k != 0 {
        // target M+ on the leading block: the A0(+inf) eigenvalues with the
        // first |k| signs flipped, in a random basis
        let a_inf = model.a0_limit(1.0);
        let lead_inf = a_inf.view((0, 0), (r, r)).into_owned();
        let mut eig = vec![0.0; r];
        for g in model.groups.iter().filter(|g| g.idx[0] < r) {
            for (v, &gi) in g.diag(1.0).into_iter().zip(&g.idx) {
                eig[gi] = v;
            }
        }
        for e in eig.iter_mut().take(k.unsigned_abs() as usize) {
            *e = -*e;
        }
        let basis = near_identity(rng, r);
        let target = &basis * real_diag(&eig) * inverse(&basis).expect("near-identity matrix is invertible");
        model.jump.view_mut((0, 0), (r, r)).copy_from(&(target - lead_inf));
    }
    model
}

/// Seeded essentially splitting path on the real line with planted
/// spectral flow `k`: a block-diagonal hyperbolic `A0(t)` plus
/// `K(t) = phi(t) (M+ - A0_lead(+inf))` on the leading `r x r` block, with
/// `phi` a smooth step from 0 (for `t <= -2`) to 1 (for `t >= 2`).
pub fn block_splitting_path(n_plus: usize, n_minus: usize, r: usize, k: i64, seed: u64) -> Result<BlockPath> {
    check_block_args(n_plus, n_minus, r, k)?;
    let mut rng = rng(seed);
    let mask = sign_mask(&mut rng, n_plus, n_minus, k);
    let model = Arc::new(build_model(&mut rng, &mask, r, k));
    let n = model.n;

    let base = {
        let (m1, m2) = (model.clone(), model.clone());
        OperatorPath::new(n, Domain::RealLine, move |t| m1.a0(t))
            .with_derivative(move |t| m2.a0_deriv(t))
            .with_limits(model.a0_limit(-1.0), model.a0_limit(1.0))
    };
    let (m1, m2) = (model.clone(), model.clone());
    let path = OperatorPath::new(n, Domain::RealLine, move |t| m1.a0(t) + scaled(&m1.jump, smooth_step(t).0))
        .with_derivative(move |t| m2.a0_deriv(t) + scaled(&m2.jump, smooth_step(t).1))
        .with_limits(model.a0_limit(-1.0), model.a0_limit(1.0) + &model.jump);

    let tol = Tolerances::default();
    for t in [-1e3, 1e3] {
        let (ok, gap) = is_hyperbolic(&path.at(t), tol.gap_min)?;
        if !ok {
            return Err(Error::GenerationFailure(format!("A({t}) not hyperbolic (gap {gap:.3e}, seed {seed})")));
        }
    }
    Ok(BlockPath { path, base, r, plus_mask: mask, planted: Some(k) })
}

/// A path violating the essentially splitting hypothesis: the block path
/// with `k = 0` conjugated by a rotation, switched on smoothly, that mixes
/// an `E+` and an `E-` coordinate outside the leading block.
pub fn mixing_path(n_plus: usize, n_minus: usize, r: usize, seed: u64) -> Result<BlockPath> {
    let bp = block_splitting_path(n_plus, n_minus, r, 0, seed)?;
    let mask = bp.plus_mask.clone();
    let i = (r..mask.len()).find(|&i| mask[i]);
    let j = (r..mask.len()).find(|&j| !mask[j]);
    let (Some(i), Some(j)) = (i, j) else {
        return Err(Error::GenerationFailure(
            "mixing needs an E+ and an E- coordinate outside the leading block".into(),
        ));
    };
    let n = mask.len();
    let rotation = move |theta: f64| {
        let mut g = identity(n);
        let (c, s) = (theta.cos(), theta.sin());
        g[(i, i)] = c64(c, 0.0);
        g[(j, j)] = c64(c, 0.0);
        g[(i, j)] = c64(-s, 0.0);
        g[(j, i)] = c64(s, 0.0);
        g
    };
    let theta = |t: f64| 0.25 * PI * smooth_step(t).0;
    let inner = bp.path.clone();
    let rot = rotation;
    let path = OperatorPath::new(n, Domain::RealLine, move |t| {
        let g = rot(theta(t));
        &g * inner.at(t) * g.transpose()
    });
    let (minus, plus) = bp.path.limits().cloned().expect("generated block paths carry limits");
    let g_inf = rotation(0.25 * PI);
    let path = path.with_limits(minus, &g_inf * plus * g_inf.transpose());
    Ok(BlockPath { path, base: bp.base, r, plus_mask: mask, planted: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::max_abs;
    use crate::odeindex::check_essentially_splitting;
    use crate::sflow::sf_endpoint;
    use crate::spectral::p_plus;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn canonical_examples() {
        for (n, k) in [(4, 2), (6, 6), (3, 0)] {
            let p = canonical_k(n, k).unwrap();
            assert_eq!(sf_endpoint(&p, &tol()).unwrap().sf, k as i64);
            assert_eq!(sf_endpoint(&p.reverse(), &tol()).unwrap().sf, -(k as i64));
        }
        assert!(matches!(canonical_k(2, 3), Err(Error::RangeError(_))));
    }

    #[test]
    fn random_smooth_is_deterministic_and_differentiable() {
        let a = random_smooth(4, 7, 3).unwrap();
        let b = random_smooth(4, 7, 3).unwrap();
        for i in 0..32 {
            let t = (i as f64 + 0.5) / 32.0;
            assert_eq!(a.at(t), b.at(t));
            let h = 1e-5;
            let fd = (a.at(t + h) - a.at(t - h)) / c64(2.0 * h, 0.0);
            assert!(max_abs(&(fd - a.derivative(t).unwrap())) < 1e-6);
        }
        let (ok0, _) = is_hyperbolic(&a.at(0.0), 2e-6).unwrap();
        let (ok1, _) = is_hyperbolic(&a.at(1.0), 2e-6).unwrap();
        assert!(ok0 && ok1);
    }

    #[test]
    fn conjugation_loop_is_involutive() {
        let p = Projector::coordinate(&[true, false, true]);
        let path = conjugation_loop(&p, 3);
        let j = scaled(p.matrix(), 2.0) - identity(3);
        assert!(max_abs(&(path.at(0.0) - &j)) < 1e-14);
        for i in 0..16 {
            let a = path.at(i as f64 / 16.0);
            assert!(max_abs(&(&a * &a - identity(3))) < 1e-10);
        }
        assert_eq!(sf_endpoint(&path, &tol()).unwrap().sf, 0);
        let h = 1e-5;
        let t = 0.37;
        let fd = (path.at(t + h) - path.at(t - h)) / c64(2.0 * h, 0.0);
        assert!(max_abs(&(fd - path.derivative(t).unwrap())) < 1e-6);
    }

    #[test]
    fn full_rank_loop_is_decomposable() {
        // 2 U I U^-1 - I is the identity up to roundoff
        let p = random_projector(3, 3, 6).unwrap();
        let a = conjugation_loop(&p, 6).at(0.81);
        let s = crate::matcore::SchurForm::new(&a).unwrap();
        assert!(s.diagonal().iter().all(|z| (z - c64(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn homotopy_keeps_endpoints() {
        let base = canonical_k(3, 1).unwrap();
        let h = homotopy_wiggle(&base, 5, 0.4).unwrap();
        let p = h.at(0.0);
        assert_eq!(p.at(0.3), base.at(0.3));
        let q = h.at(1.0);
        assert!(max_abs(&(q.at(0.0) - base.at(0.0))) < 1e-15);
        assert!(max_abs(&(q.at(1.0) - base.at(1.0))) < 1e-15);
        let t = 0.61;
        let eps = 1e-5;
        let fd = (q.at(t + eps) - q.at(t - eps)) / c64(2.0 * eps, 0.0);
        assert!(max_abs(&(fd - q.derivative(t).unwrap())) < 1e-6);
        let flat = homotopy_wiggle(&base, 5, 0.0).unwrap().at(1.0);
        assert_eq!(flat.at(0.4), base.at(0.4));
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-3.0), (0.0, 0.0));
        assert_eq!(smooth_step(2.5), (1.0, 0.0));
        assert!((smooth_step(0.0).0 - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for t in [-1.5, -0.3, 0.9, 1.7] {
            let fd = (smooth_step(t + h).0 - smooth_step(t - h).0) / (2.0 * h);
            assert!((fd - smooth_step(t).1).abs() < 1e-6);
        }
    }

    #[test]
    fn block_path_planted_flow() {
        for k in [-2i64, 0, 2] {
            let bp = block_splitting_path(3, 3, 3, k, 11).unwrap();
            bp.check_structure(&tol()).unwrap();
            let (ok, _) = check_essentially_splitting(&bp, &tol()).unwrap();
            assert!(ok, "k = {k}");
            let (m, p) = bp.path.limits().unwrap().clone();
            let sf = p_plus(&p, &tol()).unwrap().rank() as i64 - p_plus(&m, &tol()).unwrap().rank() as i64;
            assert_eq!(sf, k);
        }
        let bp = block_splitting_path(2, 2, 0, 0, 1).unwrap();
        assert_eq!(max_abs(&bp.compact_part(0.3)), 0.0);
        assert!(block_splitting_path(1, 3, 3, -2, 1).is_err());
    }

    #[test]
    fn mixing_path_fails_splitting() {
        let bp = mixing_path(2, 2, 1, 4).unwrap();
        let (ok, w) = check_essentially_splitting(&bp, &tol()).unwrap();
        assert!(!ok);
        assert!(w.max_out_of_block > 1e-3);
    }
}
