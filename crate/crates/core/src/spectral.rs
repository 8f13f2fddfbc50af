//! Spectral projectors and hyperbolicity.
//!
//! Two independent routes produce the projector onto the spectrum inside a
//! region:
//!
//! * [`riesz_projector`] integrates the resolvent `(z - A)^{-1}` over the
//!   boundary of a rectangle with composite Gauss-Legendre panels;
//! * [`spectral_projector`] reorders a complex Schur form so the selected
//!   eigenvalues lead, then decouples the two diagonal blocks with one
//!   triangular Sylvester solve.
//!
//! Both return a [`Projector`] carrying its idempotency defect.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matcore::{
    c64, frobenius, identity, inverse, singular_values, validate, CMatrix, SchurForm,
    SubspaceBasis,
};
use crate::quadrature::gauss_legendre;

/// An idempotent matrix together with its defect `|P^2 - P|_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: CMatrix,
    defect: f64,
}

impl Projector {
    /// Accepts `matrix` if its idempotency defect is within `tol_proj`.
    pub fn new(matrix: CMatrix, tol_proj: f64) -> Result<Self> {
        validate(&matrix)?;
        let p = Self::measured(matrix);
        if p.defect > tol_proj {
            return Err(Error::NumericalFailure {
                what: "matrix is not idempotent".into(),
                residual: p.defect,
            });
        }
        Ok(p)
    }

    pub(crate) fn measured(matrix: CMatrix) -> Self {
        let defect = frobenius(&(&matrix * &matrix - &matrix));
        Self { matrix, defect }
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: CMatrix::zeros(n, n), defect: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: identity(n), defect: 0.0 }
    }

    /// Orthogonal projector onto the coordinates flagged in `mask`.
    pub fn coordinate(mask: &[bool]) -> Self {
        let n = mask.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &on) in mask.iter().enumerate() {
            if on {
                m[(i, i)] = c64(1.0, 0.0);
            }
        }
        Self { matrix: m, defect: 0.0 }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rank of the projector.
    ///
    /// Nonzero singular values of an idempotent are at least one, so the
    /// cutoff 1/2 separates them from rounding noise regardless of `|P|`.
    pub fn rank(&self) -> usize {
        singular_values(&self.matrix).iter().filter(|&&s| s > 0.5).count()
    }

    /// `I - P`.
    pub fn complement(&self) -> Self {
        let n = self.dim();
        Self::measured(identity(n) - &self.matrix)
    }

    /// Orthonormal basis of `Range(P)`.
    pub fn range(&self) -> SubspaceBasis {
        let s = singular_values(&self.matrix);
        let smax = s.first().copied().unwrap_or(0.0);
        let tol = if smax > 0.0 { 0.5 / smax } else { 1.0 };
        SubspaceBasis::range_of(&self.matrix, tol)
    }

    /// Orthonormal basis of `ker(P) = Range(I - P)`.
    pub fn kernel(&self) -> SubspaceBasis {
        self.complement().range()
    }

    /// Commutation defect `|P A - A P|_F`.
    pub fn commutator_defect(&self, a: &CMatrix) -> f64 {
        frobenius(&(&self.matrix * a - a * &self.matrix))
    }
}

/// Positively oriented boundary of `[re_min, re_max] x [-im_half, im_half]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub re_min: f64,
    pub re_max: f64,
    pub im_half: f64,
    /// Gauss-Legendre points per panel; edges are split into panels graded
    /// by the distance to the nearest eigenvalue.
    pub nodes: usize,
}

pub const DEFAULT_CONTOUR_NODES: usize = 16;

impl Contour {
    pub fn new(re_min: f64, re_max: f64, im_half: f64) -> Result<Self> {
        Self::with_nodes(re_min, re_max, im_half, DEFAULT_CONTOUR_NODES)
    }

    pub fn with_nodes(re_min: f64, re_max: f64, im_half: f64, nodes: usize) -> Result<Self> {
        if !(re_min < re_max) || !(im_half > 0.0) || nodes == 0 {
            return Err(Error::RangeError(format!(
                "invalid contour [{re_min}, {re_max}] x [-{im_half}, {im_half}] with {nodes} nodes"
            )));
        }
        Ok(Self { re_min, re_max, im_half, nodes })
    }

    pub fn corners(&self) -> [Complex64; 4] {
        [
            c64(self.re_min, -self.im_half),
            c64(self.re_max, -self.im_half),
            c64(self.re_max, self.im_half),
            c64(self.re_min, self.im_half),
        ]
    }

    fn edges(&self) -> [(Complex64, Complex64); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }

    /// Distance from `z` to the boundary curve.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| segment_distance(z, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn encloses(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im.abs() < self.im_half
    }

    /// Winding number of the boundary around an off-curve point, from the
    /// total turning of `z - gamma` along the four edges.
    pub fn winding_number(&self, z: Complex64) -> i32 {
        let c = self.corners();
        let mut total = 0.0;
        for i in 0..4 {
            let a = c[i] - z;
            let b = c[(i + 1) % 4] - z;
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i32
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * s)).norm()
}

/// Spectral subsets used to select eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralRegion {
    RightHalfPlane,
    LeftHalfPlane,
    Rectangle { re_min: f64, re_max: f64, im_half: f64 },
    PointCluster { center: Complex64, radius: f64 },
    /// `|re z| < half_width`: the band around the imaginary axis.
    AxisBand { half_width: f64 },
}

impl SpectralRegion {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Self::RightHalfPlane => z.re > 0.0,
            Self::LeftHalfPlane => z.re < 0.0,
            Self::Rectangle { re_min, re_max, im_half } => {
                z.re > re_min && z.re < re_max && z.im.abs() < im_half
            }
            Self::PointCluster { center, radius } => (z - center).norm() < radius,
            Self::AxisBand { half_width } => z.re.abs() < half_width,
        }
    }

    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        match *self {
            Self::RightHalfPlane | Self::LeftHalfPlane => z.re.abs(),
            Self::Rectangle { re_min, re_max, im_half } => Contour {
                re_min,
                re_max,
                im_half,
                nodes: 1,
            }
            .distance(z),
            Self::PointCluster { center, radius } => ((z - center).norm() - radius).abs(),
            Self::AxisBand { half_width } => (z.re.abs() - half_width).abs(),
        }
    }

    pub fn complement(&self) -> Option<Self> {
        match *self {
            Self::RightHalfPlane => Some(Self::LeftHalfPlane),
            Self::LeftHalfPlane => Some(Self::RightHalfPlane),
            _ => None,
        }
    }
}

/// `(gap > margin, gap)` where `gap` is the smallest `|re lambda|`.
pub fn is_hyperbolic(a: &CMatrix, margin: f64) -> Result<(bool, f64)> {
    let gap = spectral_gap(a)?;
    Ok((gap > margin, gap))
}

/// Smallest distance from the spectrum to the imaginary axis.
pub fn spectral_gap(a: &CMatrix) -> Result<f64> {
    let schur = SchurForm::new(a)?;
    Ok(schur
        .diagonal()
        .iter()
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min))
}

/// Splits `[a, b]` into panels no longer than the distance to the nearest
/// pole, so each Gauss-Legendre panel sees the poles well outside its
/// Bernstein ellipse.
fn graded_panels(
    a: Complex64,
    b: Complex64,
    poles: &[Complex64],
    out: &mut Vec<(Complex64, Complex64)>,
    depth: usize,
) {
    let len = (b - a).norm();
    let dist = poles
        .iter()
        .map(|&p| segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min);
    if len <= dist || depth >= 60 {
        out.push((a, b));
        return;
    }
    let mid = (a + b) * 0.5;
    graded_panels(a, mid, poles, out, depth + 1);
    graded_panels(mid, b, poles, out, depth + 1);
}

fn contour_integral(a: &CMatrix, contour: &Contour, poles: &[Complex64], nodes: usize) -> Result<CMatrix> {
    let n = a.nrows();
    let (x, w) = gauss_legendre(nodes);
    let mut acc = CMatrix::zeros(n, n);
    let mut panels = Vec::new();
    for (z0, z1) in contour.edges() {
        graded_panels(z0, z1, poles, &mut panels, 0);
    }
    let eye = identity(n);
    for (z0, z1) in panels {
        let half = (z1 - z0) * 0.5;
        let mid = (z0 + z1) * 0.5;
        for (xi, wi) in x.iter().zip(&w) {
            let z = mid + half * *xi;
            let shifted = &eye * z - a;
            let resolvent = inverse(&shifted).ok_or(Error::SingularSystem {
                condition: f64::INFINITY,
            })?;
            acc += resolvent * (half * *wi);
        }
    }
    Ok(acc / c64(0.0, 2.0 * PI))
}

/// Riesz projector `(1 / 2 pi i) \oint_Gamma (z - A)^{-1} dz`.
///
/// Fails with [`Error::ContourTooClose`] when an eigenvalue lies within
/// `tol.dist_min` of the contour. If the first pass is not idempotent to
/// `tol.proj`, or its rank disagrees with the enclosed multiplicity, the
/// panel order is doubled once before giving up.
pub fn riesz_projector(a: &CMatrix, contour: &Contour, tol: &Tolerances) -> Result<Projector> {
    validate(a)?;
    let poles = SchurForm::new(a)?.diagonal();
    for &lambda in &poles {
        let d = contour.distance(lambda);
        if d < tol.dist_min {
            return Err(Error::ContourTooClose { lambda, distance: d });
        }
    }
    let enclosed = poles.iter().filter(|&&z| contour.encloses(z)).count();
    let mut nodes = contour.nodes;
    let mut last_defect = f64::INFINITY;
    for _ in 0..2 {
        let m = contour_integral(a, contour, &poles, nodes)?;
        let p = Projector::measured(m);
        if p.defect <= tol.proj && p.rank() == enclosed {
            return Ok(p);
        }
        last_defect = p.defect;
        nodes *= 2;
    }
    Err(Error::QuadratureDefect { defect: last_defect })
}

/// Solves `T11 X - X T22 = C` for upper triangular `T11`, `T22`.
fn triangular_sylvester(t11: &CMatrix, t22: &CMatrix, c: &CMatrix) -> CMatrix {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut x = CMatrix::zeros(k, m);
    for j in 0..m {
        let mut rhs: Vec<Complex64> = (0..k).map(|i| c[(i, j)]).collect();
        for l in 0..j {
            let coeff = t22[(l, j)];
            for i in 0..k {
                rhs[i] += x[(i, l)] * coeff;
            }
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = rhs[i];
            for l in (i + 1)..k {
                acc -= t11[(i, l)] * x[(l, j)];
            }
            x[(i, j)] = acc / (t11[(i, i)] - shift);
        }
    }
    x
}

/// Projector onto the invariant subspace of the eigenvalues selected by
/// `select`, via an ordered Schur form. The caller guarantees that selected
/// and unselected eigenvalues are disjoint.
pub(crate) fn schur_projector<F>(a: &CMatrix, select: F) -> Result<Projector>
where
    F: Fn(Complex64) -> bool,
{
    let n = validate(a)?;
    let mut schur = SchurForm::new(a)?;
    let k = schur.reorder(&select);
    if k == 0 {
        return Ok(Projector::zero(n));
    }
    if k == n {
        return Ok(Projector::identity(n));
    }
    let t = &schur.t;
    let t11 = t.view((0, 0), (k, k)).into_owned();
    let t12 = t.view((0, k), (k, n - k)).into_owned();
    let t22 = t.view((k, k), (n - k, n - k)).into_owned();
    let x = triangular_sylvester(&t11, &t22, &(-t12));
    let mut block = CMatrix::zeros(n, n);
    for i in 0..k {
        block[(i, i)] = c64(1.0, 0.0);
        for j in 0..(n - k) {
            block[(i, k + j)] = -x[(i, j)];
        }
    }
    let p = &schur.q * block * schur.q.adjoint();
    Ok(Projector::measured(p))
}

/// Spectral projector for `region`, via the ordered Schur route.
pub fn spectral_projector(a: &CMatrix, region: &SpectralRegion, tol: &Tolerances) -> Result<Projector> {
    validate(a)?;
    let eigen = SchurForm::new(a)?.diagonal();
    for &lambda in &eigen {
        let d = region.boundary_distance(lambda);
        if d < tol.gap_min {
            return Err(Error::BoundaryEigenvalue { lambda, distance: d });
        }
    }
    let p = schur_projector(a, |z| region.contains(z))?;
    if p.defect > tol.proj {
        return Err(Error::NumericalFailure {
            what: "spectral projector is not idempotent".into(),
            residual: p.defect,
        });
    }
    Ok(p)
}

/// Rectangle contour enclosing exactly the eigenvalues of `a` in `region`.
/// Unbounded regions are cut off at `|A|_F + 1`, which bounds the spectrum.
pub fn region_contour(a: &CMatrix, region: &SpectralRegion) -> Result<Contour> {
    validate(a)?;
    let r = frobenius(a) + 1.0;
    let contour = match *region {
        SpectralRegion::RightHalfPlane => Contour::new(0.0, r, r)?,
        SpectralRegion::LeftHalfPlane => Contour::new(-r, 0.0, r)?,
        SpectralRegion::Rectangle { re_min, re_max, im_half } => Contour::new(re_min, re_max, im_half)?,
        SpectralRegion::AxisBand { half_width } => Contour::new(-half_width, half_width, r)?,
        SpectralRegion::PointCluster { center, radius } => {
            if center.im != 0.0 {
                return Err(Error::RangeError("disc regions must be centred on the real axis".into()));
            }
            let square = Contour::new(center.re - radius, center.re + radius, radius)?;
            for z in SchurForm::new(a)?.diagonal() {
                if region.contains(z) != square.encloses(z) {
                    return Err(Error::RangeError(format!(
                        "no rectangle contour separates the disc around {center} from eigenvalue {z}"
                    )));
                }
            }
            square
        }
    };
    Ok(contour)
}

/// Riesz projector for `region` over [`region_contour`].
pub fn riesz_region_projector(a: &CMatrix, region: &SpectralRegion, tol: &Tolerances) -> Result<Projector> {
    riesz_projector(a, &region_contour(a, region)?, tol)
}

/// Projector onto the spectrum with positive real part.
pub fn p_plus(a: &CMatrix, tol: &Tolerances) -> Result<Projector> {
    spectral_projector(a, &SpectralRegion::RightHalfPlane, tol)
}

/// Projector onto the spectrum with negative real part.
pub fn p_minus(a: &CMatrix, tol: &Tolerances) -> Result<Projector> {
    spectral_projector(a, &SpectralRegion::LeftHalfPlane, tol)
}

/// Writes `A = H + K` with `H` hyperbolic and `K` of rank at most the
/// multiplicity of the eigenvalues in the band `|re z| < cluster_radius`.
///
/// With `P0` the projector onto that band, `H = A (I - P0) + P0` and
/// `K = (A - I) P0`.
pub fn split_essential(a: &CMatrix, cluster_radius: f64, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    let n = validate(a)?;
    if !(cluster_radius > 0.0) {
        return Err(Error::RangeError(format!("cluster radius must be positive, got {cluster_radius}")));
    }
    let band = SpectralRegion::AxisBand { half_width: cluster_radius };
    let p0 = spectral_projector(a, &band, tol)?;
    let p0 = p0.matrix();
    let eye = identity(n);
    let h = a * (&eye - p0) + p0;
    let k = (a - &eye) * p0;
    Ok((h, k))
}

/// `H(t, A) = ((1 - t) A + t) P+ + ((1 - t) A - t) P-`, joining `A` at
/// `t = 0` to the involution `2 P+ - I` at `t = 1` through hyperbolic
/// operators.
pub fn hp_homotopy(a: &CMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    let n = validate(a)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::RangeError(format!("homotopy parameter {t} outside [0, 1]")));
    }
    let (hyperbolic, gap) = is_hyperbolic(a, tol.gap_min)?;
    if !hyperbolic {
        return Err(Error::NotHyperbolic { gap });
    }
    let pp = p_plus(a, tol)?;
    let pm = pp.complement();
    let eye = identity(n);
    let scaled = a * c64(1.0 - t, 0.0);
    Ok((&scaled + &eye * c64(t, 0.0)) * pp.matrix() + (&scaled - &eye * c64(t, 0.0)) * pm.matrix())
}

/// `2 P - I`.
pub fn involution(p: &Projector) -> CMatrix {
    p.matrix() * c64(2.0, 0.0) - identity(p.dim())
}
