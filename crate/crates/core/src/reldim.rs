//! Relative dimension of projector pairs, the index of a pair of subspaces
//! and the similarity that transports one projector onto a nearby one.
//!
//! Sign convention: `[P - Q]` is the index of `Q` restricted to `Range(P)`
//! and mapping into `Range(Q)`. In finite dimension this is
//! `rank(P) - rank(Q)`.

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matcore::{condition_number, identity, norm2, rank, CMatrix, SubspaceBasis};
use crate::spectral::Projector;

/// `[P - Q]` computed along two routes that must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelDim {
    pub value: i64,
    /// `rank(P) - rank(Q)`.
    pub route_rank: i64,
    /// `dim ker - dim coker` of `Q: Range(P) -> Range(Q)`.
    pub route_restriction: i64,
}

fn check_dims(p: usize, q: usize) -> Result<()> {
    if p != q {
        return Err(Error::DimensionMismatch { expected: p, found: q });
    }
    Ok(())
}

pub fn rel_dim(p: &Projector, q: &Projector, tol: &Tolerances) -> Result<RelDim> {
    check_dims(p.dim(), q.dim())?;
    let route_rank = p.rank() as i64 - q.rank() as i64;

    let range_p = p.range();
    let range_q = q.range();
    let (dp, dq) = (range_p.dim(), range_q.dim());
    // matrix of Q|Range(P) in orthonormal coordinates of both ranges
    let restricted = range_q.columns().adjoint() * q.matrix() * range_p.columns();
    let r = if dp == 0 || dq == 0 { 0 } else { rank(&restricted, tol.rank) };
    let kernel = dp - r;
    let cokernel = dq - r;
    let route_restriction = kernel as i64 - cokernel as i64;

    if route_rank != route_restriction {
        return Err(Error::NumericalFailure {
            what: format!(
                "relative dimension routes disagree: rank {route_rank} vs restriction {route_restriction}"
            ),
            residual: (route_rank - route_restriction).abs() as f64,
        });
    }
    Ok(RelDim { value: route_rank, route_rank, route_restriction })
}

/// Dimension of `X + Y` from the rank of the concatenated bases.
fn sum_dim(x: &SubspaceBasis, y: &SubspaceBasis, tol_rank: f64) -> usize {
    let n = x.ambient_dim();
    if x.dim() + y.dim() == 0 {
        return 0;
    }
    let mut both = CMatrix::zeros(n, x.dim() + y.dim());
    both.columns_mut(0, x.dim()).copy_from(x.columns());
    both.columns_mut(x.dim(), y.dim()).copy_from(y.columns());
    rank(&both, tol_rank)
}

/// `dim(X ∩ Y) - codim(X + Y)`.
pub fn pair_index(x: &SubspaceBasis, y: &SubspaceBasis, tol: &Tolerances) -> Result<i64> {
    check_dims(x.ambient_dim(), y.ambient_dim())?;
    let n = x.ambient_dim();
    let sum = sum_dim(x, y, tol.rank);
    let intersection = x.dim() + y.dim() - sum;
    Ok(intersection as i64 - (n - sum) as i64)
}

/// An invertible `u` with `u p = q u`, namely `u = q p + (I - q)(I - p)`.
pub fn transport(p: &Projector, q: &Projector, tol: &Tolerances) -> Result<CMatrix> {
    check_dims(p.dim(), q.dim())?;
    let n = p.dim();
    let distance = norm2(&(p.matrix() - q.matrix()));
    if distance >= 1.0 {
        return Err(Error::TooFar { distance });
    }
    let eye = identity(n);
    let u = q.matrix() * p.matrix() + (&eye - q.matrix()) * (&eye - p.matrix());
    let kappa = condition_number(&u);
    if !(kappa <= tol.kappa_max) {
        return Err(Error::NumericalFailure {
            what: "transport is not invertible".into(),
            residual: kappa,
        });
    }
    Ok(u)
}
