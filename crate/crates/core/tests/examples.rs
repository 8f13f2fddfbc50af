//! Worked examples for each public operation, with hand-computed values.

use specflow_core::matcore::{
    c64, diag, eigenvalues, from_real_rows, identity, max_abs, multiset_distance, rank, real_diag, solve, CMatrix,
    SubspaceBasis,
};
use specflow_core::odeindex::{
    check_essentially_splitting, ode_index_formula, ode_index_shooting, sf_asymptotic, BlockPath, TailOptions,
};
use specflow_core::pathgen::{block_splitting_path, canonical_k, mixing_path, tanh_scalar, tanh_unit};
use specflow_core::sflow::{sf_crossings, CrossingOptions, PartitionOptions};
use specflow_core::spectral::{hp_homotopy, is_hyperbolic, riesz_region_projector, split_essential};
use specflow_core::{
    p_plus, pair_index, rel_dim, sf_endpoint, sf_partition, spectral_projector, transport, verify_final, Domain,
    OperatorPath, Projector, SpectralRegion, Tolerances,
};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn close(a: &CMatrix, b: &CMatrix, eps: f64) -> bool {
    a.shape() == b.shape() && max_abs(&(a - b)) <= eps
}

fn reals(xs: &[f64]) -> Vec<num_complex::Complex64> {
    xs.iter().map(|&x| c64(x, 0.0)).collect()
}

fn rect(re_min: f64, re_max: f64, im_half: f64) -> SpectralRegion {
    SpectralRegion::Rectangle { re_min, re_max, im_half }
}

fn tanh_pair() -> OperatorPath {
    OperatorPath::direct_sum(&[tanh_scalar(), tanh_scalar().reverse()]).unwrap()
}

fn constant_line(a: CMatrix) -> OperatorPath {
    OperatorPath::constant(a, Domain::RealLine).unwrap()
}

#[test]
fn eigenvalues_of_small_matrices() {
    let ev = eigenvalues(&real_diag(&[1.0, -1.0])).unwrap();
    assert!(multiset_distance(&ev, &reals(&[-1.0, 1.0])) < 1e-12);
    let ev = eigenvalues(&identity(3)).unwrap();
    assert!(multiset_distance(&ev, &reals(&[1.0; 3])) < 1e-12);
    // companion matrix of z^2 - 1
    let ev = eigenvalues(&from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
    assert!(multiset_distance(&ev, &reals(&[-1.0, 1.0])) < 1e-12);
}

#[test]
fn numerical_rank() {
    assert_eq!(rank(&CMatrix::zeros(4, 4), 1e-8), 0);
    assert_eq!(rank(&real_diag(&[1.0, 1e-16]), 1e-10), 1);
    let u = from_real_rows(&[&[1.0], &[2.0], &[0.0], &[-1.0], &[3.0]]);
    let v = from_real_rows(&[&[0.5], &[-1.0], &[2.0], &[1.0], &[0.0]]);
    let w = from_real_rows(&[&[1.0], &[0.0], &[1.0], &[0.0], &[1.0]]);
    let m = &u * u.transpose() + &v * w.transpose();
    assert_eq!(rank(&m, 1e-8), 2);
}

#[test]
fn linear_solves() {
    let b = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
    assert!(close(&solve(&identity(2), &b, &tol()).unwrap(), &b, 1e-15));
    let inv = solve(&real_diag(&[2.0, 4.0]), &identity(2), &tol()).unwrap();
    assert!(close(&inv, &real_diag(&[0.5, 0.25]), 1e-15));
    let a = from_real_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
    let x0 = from_real_rows(&[&[1.0, -1.0], &[0.5, 2.0], &[-3.0, 0.0]]);
    assert!(close(&solve(&a, &(&a * &x0), &tol()).unwrap(), &x0, 1e-12));
}

#[test]
fn hyperbolicity_tests() {
    assert_eq!(is_hyperbolic(&real_diag(&[1.0, -1.0]), 0.0).unwrap(), (true, 1.0));
    let (ok, gap) = is_hyperbolic(&from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]), 0.0).unwrap();
    assert!(!ok && gap < 1e-12);
    let (ok, gap) = is_hyperbolic(&real_diag(&[0.3, -2.0, 5.0]), 0.5).unwrap();
    assert!(!ok && (gap - 0.3).abs() < 1e-12);
}

#[test]
fn rectangle_projectors() {
    let region = rect(0.5, 1.5, 1.0);
    for route in [spectral_projector, riesz_region_projector] {
        let p = route(&real_diag(&[1.0, -1.0]), &region, &tol()).unwrap();
        assert!(close(p.matrix(), &real_diag(&[1.0, 0.0]), 1e-10));
        let p = route(&identity(2), &region, &tol()).unwrap();
        assert!(close(p.matrix(), &identity(2), 1e-10));
    }
}

#[test]
fn jordan_block_projector_routes_agree() {
    // J_2(2) (+) (-3)
    let a = from_real_rows(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, -3.0]]);
    let region = rect(1.0, 3.0, 1.0);
    let schur = spectral_projector(&a, &region, &tol()).unwrap();
    let riesz = riesz_region_projector(&a, &region, &tol()).unwrap();
    assert_eq!(riesz.rank(), 2);
    assert!(close(schur.matrix(), riesz.matrix(), 1e-8));
    assert!(close(riesz.matrix(), &real_diag(&[1.0, 1.0, 0.0]), 1e-8));
}

#[test]
fn positive_spectral_projectors() {
    let p = p_plus(&real_diag(&[2.0, -2.0]), &tol()).unwrap();
    assert!(close(p.matrix(), &real_diag(&[1.0, 0.0]), 1e-12));
    let p = p_plus(&real_diag(&[-1.0, -2.0]), &tol()).unwrap();
    assert!(close(p.matrix(), &CMatrix::zeros(2, 2), 1e-12));
    let a = from_real_rows(&[&[1.0, 5.0], &[0.0, -1.0]]);
    let p = p_plus(&a, &tol()).unwrap();
    assert_eq!(p.rank(), 1);
    assert!(max_abs(&(p.matrix() * &a - &a * p.matrix())) < 1e-10);
    // eigenvectors (1, 0) for 1 and (5, -2) for -1 give P = [[1, 2.5], [0, 0]]
    assert!(close(p.matrix(), &from_real_rows(&[&[1.0, 2.5], &[0.0, 0.0]]), 1e-10));
}

#[test]
fn essential_splitting_of_diagonals() {
    let (h, k) = split_essential(&real_diag(&[2.0, 0.0]), 1.0, &tol()).unwrap();
    assert!(close(&h, &real_diag(&[2.0, 1.0]), 1e-12));
    assert!(close(&k, &real_diag(&[0.0, -1.0]), 1e-12));

    let a = diag(&[c64(0.0, 1.0), c64(0.0, -1.0), c64(3.0, 0.0)]);
    let (h, k) = split_essential(&a, 0.5, &tol()).unwrap();
    assert!(close(&h, &real_diag(&[1.0, 1.0, 3.0]), 1e-12));
    assert!(close(&k, &diag(&[c64(-1.0, 1.0), c64(-1.0, -1.0), c64(0.0, 0.0)]), 1e-12));
    assert_eq!(rank(&k, 1e-8), 2);

    let hyperbolic = real_diag(&[1.0, -2.0]);
    let (h, k) = split_essential(&hyperbolic, 0.5, &tol()).unwrap();
    assert!(close(&h, &hyperbolic, 1e-12) && max_abs(&k) < 1e-12);
}

#[test]
fn homotopy_to_the_involution() {
    let a = real_diag(&[3.0, -2.0]);
    assert!(close(&hp_homotopy(&a, 0.0, &tol()).unwrap(), &a, 1e-12));
    assert!(close(&hp_homotopy(&a, 1.0, &tol()).unwrap(), &real_diag(&[1.0, -1.0]), 1e-12));
    assert!(close(&hp_homotopy(&a, 0.5, &tol()).unwrap(), &real_diag(&[2.0, -1.5]), 1e-12));
}

#[test]
fn relative_dimensions() {
    let p = Projector::coordinate(&[true, false, true]);
    assert_eq!(rel_dim(&p, &p, &tol()).unwrap().value, 0);
    let q = Projector::coordinate(&[true, true, false, false]);
    assert_eq!(rel_dim(&Projector::identity(4), &q, &tol()).unwrap().value, 2);
}

#[test]
fn nested_spectral_projectors_of_a_normal_matrix() {
    // unitary conjugate of diag(3, 1, -1, -2)
    let (c, s) = (0.6, 0.8);
    let u = from_real_rows(&[&[c, -s, 0.0, 0.0], &[s, c, 0.0, 0.0], &[0.0, 0.0, c, s], &[0.0, 0.0, -s, c]]);
    let a = &u * real_diag(&[3.0, 1.0, -1.0, -2.0]) * u.transpose();
    let big = spectral_projector(&a, &rect(-1.5, 4.0, 1.0), &tol()).unwrap();
    let small = spectral_projector(&a, &rect(2.0, 4.0, 1.0), &tol()).unwrap();
    assert_eq!(rel_dim(&big, &small, &tol()).unwrap().value, 2);
    assert_eq!(rel_dim(&small, &big, &tol()).unwrap().value, -2);
}

fn span(n: usize, idx: &[usize]) -> SubspaceBasis {
    let mut m = CMatrix::zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        m[(i, j)] = c64(1.0, 0.0);
    }
    SubspaceBasis::new(m, 1e-12).unwrap()
}

#[test]
fn pair_indices() {
    assert_eq!(pair_index(&span(2, &[0]), &span(2, &[1]), &tol()).unwrap(), 0);
    assert_eq!(pair_index(&span(2, &[0]), &span(2, &[0]), &tol()).unwrap(), 0);
    assert_eq!(pair_index(&span(3, &[0, 1]), &span(3, &[1, 2]), &tol()).unwrap(), 1);
}

#[test]
fn transports() {
    let p = Projector::coordinate(&[true, false]);
    let u = transport(&p, &p, &tol()).unwrap();
    assert!(close(&u, &identity(2), 1e-14));

    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let r = from_real_rows(&[&[c, -s], &[s, c]]);
    let q = Projector::new(&r * p.matrix() * r.transpose(), 1e-12).unwrap();
    let u = transport(&p, &q, &tol()).unwrap();
    assert!(max_abs(&(&u * p.matrix() - q.matrix() * &u)) < 1e-10);

    let far = Projector::coordinate(&[false, true]);
    assert!(matches!(transport(&p, &far, &tol()), Err(specflow_core::Error::TooFar { .. })));
}

#[test]
fn flow_of_canonical_and_simple_paths() {
    let path = canonical_k(4, 2).unwrap();
    assert_eq!(sf_endpoint(&path, &tol()).unwrap().sf, 2);
    let part = sf_partition(&path, &PartitionOptions::default(), &tol()).unwrap();
    assert_eq!(part.sf, 2);
    assert!(part.diagnostics.partition.len() >= 2);
    let (res, report) = sf_crossings(&path, &CrossingOptions::default(), &tol()).unwrap();
    assert_eq!(res.sf, 2);
    assert_eq!(report.crossings.len(), 2);
    assert!(report.crossings.iter().all(|c| (c.t - 0.5).abs() < 1e-9 && (c.slope - 2.0).abs() < 1e-8));

    let constant = OperatorPath::constant(real_diag(&[1.0, -3.0]), Domain::Unit).unwrap();
    assert_eq!(sf_endpoint(&constant, &tol()).unwrap().sf, 0);
    let part = sf_partition(&constant, &PartitionOptions::default(), &tol()).unwrap();
    assert_eq!((part.sf, part.diagnostics.partition.len()), (0, 1));

    assert_eq!(sf_endpoint(&tanh_unit(), &tol()).unwrap().sf, 1);
}

#[test]
fn catenation_reversal_and_sums() {
    let a = canonical_k(4, 2).unwrap();
    let rest = OperatorPath::constant(a.at(1.0), Domain::Unit).unwrap();
    let flow = |p: &OperatorPath| sf_partition(p, &PartitionOptions::default(), &tol()).unwrap().sf;
    assert_eq!(flow(&a.concat(&rest).unwrap()), 2);
    assert_eq!(flow(&a.reverse()), -2);

    let second_half = canonical_k(4, 1).unwrap().clamp(0.75, 1.0);
    assert_eq!(flow(&second_half.concat(&second_half.reverse()).unwrap()), 0);

    let b = canonical_k(2, 1).unwrap();
    assert_eq!(flow(&OperatorPath::direct_sum(&[b.clone(), b]).unwrap()), 2);
    assert_eq!(flow(&OperatorPath::direct_sum(&[a.clone(), a.reverse()]).unwrap()), 0);
}

#[test]
fn flows_on_the_real_line() {
    let opts = TailOptions::default();
    assert_eq!(sf_asymptotic(&tanh_scalar(), &opts, &tol()).unwrap().sf, 1);
    assert_eq!(sf_asymptotic(&constant_line(real_diag(&[2.0, -1.0])), &opts, &tol()).unwrap().sf, 0);
    assert_eq!(sf_asymptotic(&tanh_pair(), &opts, &tol()).unwrap().sf, 0);
}

#[test]
fn index_by_shooting_and_formula() {
    let shot = ode_index_shooting(&tanh_scalar(), 12.0, 4096, &tol()).unwrap();
    assert_eq!((shot.kernel, shot.cokernel, shot.index), (0, 1, -1));
    assert_eq!(ode_index_formula(&tanh_scalar(), &tol()).unwrap(), -1);

    let c = constant_line(real_diag(&[2.0, -1.0]));
    assert_eq!(ode_index_shooting(&c, 12.0, 4096, &tol()).unwrap().index, 0);
    assert_eq!(ode_index_formula(&c, &tol()).unwrap(), 0);

    assert_eq!(ode_index_shooting(&tanh_pair(), 12.0, 4096, &tol()).unwrap().index, 0);
    assert_eq!(ode_index_formula(&tanh_pair(), &tol()).unwrap(), 0);
}

#[test]
fn final_reports() {
    let r = verify_final(&tanh_scalar(), &Default::default(), &tol()).unwrap();
    assert_eq!((r.sf, r.ind_shooting, r.ind_formula, r.agree), (1, -1, -1, true));
    let r = verify_final(&constant_line(real_diag(&[1.0, -1.0, 2.0])), &Default::default(), &tol()).unwrap();
    assert_eq!((r.sf, r.ind_shooting, r.ind_formula, r.agree), (0, 0, 0, true));
}

#[test]
fn splitting_checks() {
    let a0 = constant_line(real_diag(&[1.0, -1.0]));
    let trivial = BlockPath { path: a0.clone(), base: a0, r: 0, plus_mask: vec![true, false], planted: Some(0) };
    assert!(check_essentially_splitting(&trivial, &tol()).unwrap().0);

    let bp = block_splitting_path(2, 2, 2, 1, 11).unwrap();
    assert!(check_essentially_splitting(&bp, &tol()).unwrap().0);

    let bad = mixing_path(2, 2, 1, 11).unwrap();
    let (ok, witness) = check_essentially_splitting(&bad, &tol()).unwrap();
    assert!(!ok && witness.max_out_of_block > 0.0);
}
