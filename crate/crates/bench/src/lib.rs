//! Fixed inputs for the criterion benchmarks.

use specflow_core::matcore::CMatrix;
use specflow_core::pathgen::{block_splitting_path, random_smooth, separated_matrix};
use specflow_core::{BlockPath, OperatorPath};

/// Seeded random path of dimension `n`, degree 2.
pub fn smooth_path(n: usize) -> OperatorPath {
    random_smooth(n, 17, 2).expect("seed 17 generates")
}

/// Matrix with its spectrum split by the imaginary axis, optionally with a
/// Jordan pair.
pub fn split_matrix(n: usize, jordan: bool) -> CMatrix {
    separated_matrix(n, 5, jordan).expect("seed 5 generates").0
}

/// Block path of dimension `n` with planted flow 1.
pub fn block_path(n: usize) -> BlockPath {
    let n_minus = n / 2;
    block_splitting_path(n - n_minus, n_minus, n_minus.min(3), 1, 3).expect("block path generates")
}
