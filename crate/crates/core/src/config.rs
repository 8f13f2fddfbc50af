use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Schur reconstruction defect, relative to `|A|`.
    pub recon: f64,
    /// Relative singular value cutoff for rank decisions.
    pub rank: f64,
    /// Eigenvalue multiset comparison.
    pub eig: f64,
    /// Orthonormality of subspace bases.
    pub ortho: f64,
    /// Largest condition number accepted by `solve`.
    pub kappa_max: f64,
    /// Idempotency defect accepted for a projector.
    pub proj: f64,
    /// Minimal distance between an eigenvalue and a region boundary.
    pub gap_min: f64,
    /// Minimal distance between an eigenvalue and a quadrature contour.
    pub dist_min: f64,
    /// Crossing slopes at or below this magnitude are irregular.
    pub slope_min: f64,
    /// Bisection tolerance for crossing times.
    pub t_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            recon: 1e-10,
            rank: 1e-8,
            eig: 1e-7,
            ortho: 1e-10,
            kappa_max: 1e12,
            proj: 1e-8,
            gap_min: 1e-6,
            dist_min: 1e-6,
            slope_min: 1e-6,
            t_tol: 1e-10,
        }
    }
}

impl Tolerances {
    /// Every tolerance halved (`kappa_max` is left alone).
    pub fn strict() -> Self {
        Self::default().halved()
    }

    pub fn halved(self) -> Self {
        Self {
            recon: self.recon / 2.0,
            rank: self.rank / 2.0,
            eig: self.eig / 2.0,
            ortho: self.ortho / 2.0,
            kappa_max: self.kappa_max,
            proj: self.proj / 2.0,
            gap_min: self.gap_min / 2.0,
            dist_min: self.dist_min / 2.0,
            slope_min: self.slope_min / 2.0,
            t_tol: self.t_tol / 2.0,
        }
    }
}
