//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use specflow_core::matcore::{c64, frobenius, identity, max_abs, CMatrix};
use specflow_core::odeindex::{check_essentially_splitting, ShootingOptions};
use specflow_core::pathgen::{
    block_splitting_path, canonical_k, composable_after, conjugation_loop, homotopy_wiggle, mixing_path,
    random_projector, random_smooth, separated_matrix, tanh_scalar,
};
use specflow_core::sflow::{sf_crossings, CrossingOptions, PartitionOptions};
use specflow_core::spectral::riesz_region_projector;
use specflow_core::{
    pair_index, rel_dim, sf_endpoint, sf_partition, spectral_flow, spectral_projector, verify_final,
    verify_final_block, Domain, Engine, Error, OperatorPath, Projector, SpectralRegion, Tolerances,
};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

/// Eigenvalues with positive real part, from nalgebra's own Schur form.
fn oracle_positive(a: &CMatrix) -> i64 {
    let eig = a.clone().schur().eigenvalues().expect("complex Schur form is triangular");
    eig.iter().filter(|z| z.re > 0.0).count() as i64
}

/// `rank P+(A(1)) - rank P+(A(0))` by eigenvalue counting.
fn oracle_flow(path: &OperatorPath) -> i64 {
    oracle_positive(&path.at(1.0)) - oracle_positive(&path.at(0.0))
}

fn trace_rank(p: &CMatrix) -> i64 {
    p.trace().re.round() as i64
}

fn all_engines(path: &OperatorPath, tol: &Tolerances) -> Result<[i64; 3], String> {
    let mut out = [0; 3];
    for (i, e) in [Engine::Endpoint, Engine::Partition, Engine::Crossings].into_iter().enumerate() {
        out[i] = spectral_flow(path, e, tol).map_err(|err| format!("{}: {err}", e.name()))?.sf;
    }
    Ok(out)
}

fn criterion1(tol: &Tolerances) -> Check {
    let mut cases = 0;
    for n in 1..=6 {
        for k in 0..=n {
            let path = canonical_k(n, k).map_err(|e| e.to_string())?;
            let k = k as i64;
            if oracle_flow(&path) != k {
                return Err(format!("oracle disagrees with the planted value for n = {n}, k = {k}"));
            }
            let fwd = all_engines(&path, tol).map_err(|e| format!("n = {n}, k = {k}: {e}"))?;
            let rev = all_engines(&path.reverse(), tol).map_err(|e| format!("n = {n}, k = {k}, reversed: {e}"))?;
            if fwd != [k; 3] || rev != [-k; 3] {
                return Err(format!("n = {n}, k = {k}: forward {fwd:?}, reversed {rev:?}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} (n, k) pairs, 3 engines, both directions"))
}

fn criterion2(tol: &Tolerances) -> Check {
    let mut crossing_runs = 0;
    let mut declined = 0;
    for seed in 0..200u64 {
        let n = 2 + (seed % 7) as usize;
        let degree = 1 + (seed % 3) as usize;
        let path = random_smooth(n, seed, degree).map_err(|e| format!("seed {seed}: {e}"))?;
        let oracle = oracle_flow(&path);
        let e = sf_endpoint(&path, tol).map_err(|e| format!("seed {seed} endpoint: {e}"))?.sf;
        let p = sf_partition(&path, &PartitionOptions::default(), tol)
            .map_err(|e| format!("seed {seed} partition: {e}"))?
            .sf;
        if e != p || e != oracle {
            return Err(format!("seed {seed} dim {n}: endpoint {e}, partition {p}, eigenvalue count {oracle}"));
        }
        match sf_crossings(&path, &CrossingOptions::default(), tol) {
            Ok((c, _)) => {
                crossing_runs += 1;
                if c.sf != e {
                    return Err(format!("seed {seed} dim {n}: crossings {} vs endpoint {e}", c.sf));
                }
            }
            Err(Error::IrregularCrossing { .. } | Error::MultipleEigenvalueAtCrossing { .. }) => declined += 1,
            Err(err) => return Err(format!("seed {seed} dim {n} crossings: {err}")),
        }
    }
    Ok(format!("200 paths; crossing engine ran on {crossing_runs}, declined {declined} irregular"))
}

fn criterion3(tol: &Tolerances) -> Check {
    let sf = |p: &OperatorPath| -> Result<i64, String> {
        sf_partition(p, &PartitionOptions::default(), tol).map(|r| r.sf).map_err(|e| e.to_string())
    };
    for seed in 0..100u64 {
        let n = 2 + (seed % 3) as usize;
        let degree = 1 + (seed % 2) as usize;
        let fail = |what: &str| Err(format!("seed {seed} dim {n}: {what}"));
        let a = random_smooth(n, seed, degree).map_err(|e| e.to_string())?;
        let base = sf(&a)?;

        if sf(&a.reverse())? != -base {
            return fail("reversal");
        }
        let b = composable_after(&a.at(1.0), seed + 7919, degree).map_err(|e| e.to_string())?;
        let ab = a.concat(&b).map_err(|e| e.to_string())?;
        if sf(&ab)? != base + sf(&b)? {
            return fail("catenation");
        }
        let c = random_smooth(1 + (seed % 2) as usize, seed + 104_729, 1).map_err(|e| e.to_string())?;
        let sum = OperatorPath::direct_sum(&[a.clone(), c.clone()]).map_err(|e| e.to_string())?;
        if sf(&sum)? != base + sf(&c)? {
            return fail("direct sum");
        }
        let constant = OperatorPath::constant(a.at(0.0), Domain::Unit).map_err(|e| e.to_string())?;
        if sf(&constant)? != 0 {
            return fail("constant path");
        }
        let proj = random_projector(n, (seed as usize) % (n + 1), seed).map_err(|e| e.to_string())?;
        if sf(&conjugation_loop(&proj, seed))? != 0 {
            return fail("hyperbolic loop");
        }
        let h = homotopy_wiggle(&a, seed, 0.5).map_err(|e| e.to_string())?;
        for j in 0..8 {
            let s = (j + 1) as f64 / 8.0;
            if sf(&h.at(s))? != base {
                return fail(&format!("homotopy sample s = {s}"));
            }
        }
    }
    Ok("100 seeds: reversal, catenation, direct sum, constant, hyperbolic loop, 8 homotopy samples".into())
}

fn criterion4(tol: &Tolerances) -> Check {
    for seed in 0..200u64 {
        let n = 1 + (seed % 6) as usize;
        let ranks = [(seed as usize) % (n + 1), (seed as usize / 3) % (n + 1), (seed as usize / 7) % (n + 1)];
        let ps: Vec<Projector> = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| random_projector(n, r, 1000 * seed + i as u64))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let (p, q, r) = (&ps[0], &ps[1], &ps[2]);
        let rd = |x: &Projector, y: &Projector| rel_dim(x, y, tol).map(|v| v.value).map_err(|e| e.to_string());
        let (pq, qr, pr) = (rd(p, q)?, rd(q, r)?, rd(p, r)?);
        let oracle = trace_rank(p.matrix()) - trace_rank(q.matrix());
        if pq != oracle {
            return Err(format!("seed {seed}: [P-Q] = {pq}, trace difference {oracle}"));
        }
        if pr != pq + qr {
            return Err(format!("seed {seed}: additivity {pr} != {pq} + {qr}"));
        }
        if rd(&q.complement(), &p.complement())? != pq {
            return Err(format!("seed {seed}: complement identity"));
        }
        let ind = pair_index(&p.range(), &q.kernel(), tol).map_err(|e| e.to_string())?;
        // dim(X cap Y) - codim(X + Y) for X = Range P, Y = ker Q
        let x = p.range().into_columns();
        let y = q.kernel().into_columns();
        let joined = CMatrix::from_fn(n, x.ncols() + y.ncols(), |i, j| {
            if j < x.ncols() {
                x[(i, j)]
            } else {
                y[(i, j - x.ncols())]
            }
        });
        let sum_dim = if joined.ncols() == 0 {
            0
        } else {
            joined.singular_values().iter().filter(|&&s| s > 1e-8).count()
        };
        let cap = x.ncols() + y.ncols() - sum_dim;
        let direct = cap as i64 - (n - sum_dim) as i64;
        if ind != direct || ind != pq {
            return Err(format!("seed {seed}: pair index {ind}, direct {direct}, [P-Q] {pq}"));
        }

        let lp = conjugation_loop(p, seed);
        let half = c64(0.5, 0.0);
        let mut prev = Projector::new((lp.at(0.0) + identity(n)) * half, 1e-8).map_err(|e| e.to_string())?;
        for i in 1..=64 {
            let next =
                Projector::new((lp.at(i as f64 / 64.0) + identity(n)) * half, 1e-8).map_err(|e| e.to_string())?;
            if rd(&prev, &next)? != 0 || trace_rank(next.matrix()) != trace_rank(p.matrix()) {
                return Err(format!("seed {seed}: rank jump along the projector loop at step {i}"));
            }
            prev = next;
        }
    }
    Ok("200 triples and projector loops".into())
}

fn criterion5(tol: &Tolerances) -> Check {
    let (mut worst_diff, mut worst_defect, mut jordan_cases) = (0.0f64, 0.0f64, 0);
    for seed in 0..200u64 {
        let n = 2 + (seed % 7) as usize;
        let jordan = seed % 5 == 0;
        let (a, right) = separated_matrix(n, seed, jordan).map_err(|e| e.to_string())?;
        if jordan {
            jordan_cases += 1;
        }
        for region in [SpectralRegion::RightHalfPlane, SpectralRegion::LeftHalfPlane] {
            let expected = if region == SpectralRegion::RightHalfPlane { right } else { n - right };
            let schur = spectral_projector(&a, &region, tol).map_err(|e| format!("seed {seed}: {e}"))?;
            let riesz = riesz_region_projector(&a, &region, tol).map_err(|e| format!("seed {seed}: {e}"))?;
            let diff = max_abs(&(schur.matrix() - riesz.matrix()));
            let pm = riesz.matrix();
            let defect = frobenius(&(pm * pm - pm));
            let comm = frobenius(&(pm * &a - &a * pm));
            worst_diff = worst_diff.max(diff);
            worst_defect = worst_defect.max(defect);
            if diff > 1e-7 {
                return Err(format!("seed {seed}: route difference {diff:.3e}"));
            }
            if defect > 1e-8 || comm > 1e-8 * frobenius(&a) {
                return Err(format!("seed {seed}: idempotency {defect:.3e}, commutation {comm:.3e}"));
            }
            if trace_rank(pm) != expected as i64 || trace_rank(schur.matrix()) != expected as i64 {
                return Err(format!("seed {seed}: trace rank differs from {expected}"));
            }
        }
    }
    if jordan_cases < 20 {
        return Err(format!("only {jordan_cases} Jordan cases"));
    }
    Ok(format!(
        "200 matrices ({jordan_cases} defective), max difference {worst_diff:.2e}, max defect {worst_defect:.2e}"
    ))
}

/// `(n_plus, n_minus, r, k)` covering every planted `k` in `[-3, 3]`.
fn block_params(seed: u64) -> (usize, usize, usize, i64) {
    let k = (seed % 7) as i64 - 3;
    let m = k.unsigned_abs() as usize;
    let n = (2 + (seed / 7) as usize % 7).max(m + 1);
    let lo = m.max(1);
    let flip_side = lo + (seed / 49) as usize % (n - lo);
    let (n_plus, n_minus) = if k < 0 { (flip_side, n - flip_side) } else { (n - flip_side, flip_side) };
    let r = m + (seed / 11) as usize % (n - m + 1);
    (n_plus, n_minus, r, k)
}

fn criterion6(tol: &Tolerances) -> Check {
    let anchor = verify_final(&tanh_scalar(), &ShootingOptions::default(), tol).map_err(|e| e.to_string())?;
    if (anchor.sf, anchor.ind_shooting, anchor.ind_formula) != (1, -1, -1) || !anchor.agree {
        return Err(format!("tanh anchor: {anchor:?}"));
    }
    let mut seen = [false; 7];
    for seed in 0..100u64 {
        let (n_plus, n_minus, r, k) = block_params(seed);
        let bp = block_splitting_path(n_plus, n_minus, r, k, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        let rep = verify_final_block(&bp, &ShootingOptions::default(), tol)
            .map_err(|e| format!("seed {seed} ({n_plus}+{n_minus}, r {r}, k {k}): {e}"))?;
        if rep.sf != k || rep.ind_shooting != -k || rep.ind_formula != -k || !rep.stable_under_doubling {
            return Err(format!(
                "seed {seed}: planted {k}, sf {}, shooting {}, formula {}, stable {}",
                rep.sf, rep.ind_shooting, rep.ind_formula, rep.stable_under_doubling
            ));
        }
        seen[(k + 3) as usize] = true;
    }
    if seen.contains(&false) {
        return Err("some planted k in [-3, 3] never occurred".into());
    }
    Ok("tanh anchor plus 100 block paths, every k in [-3, 3]".into())
}

fn criterion7(tol: &Tolerances) -> Check {
    let mut cases = 0;
    for seed in 0..20u64 {
        let n_plus = 1 + (seed % 3) as usize;
        let n_minus = 1 + (seed / 3 % 3) as usize;
        let bad = mixing_path(n_plus, n_minus, 0, seed).map_err(|e| e.to_string())?;
        let (ok, witness) = check_essentially_splitting(&bad, tol).map_err(|e| e.to_string())?;
        if ok || witness.max_out_of_block == 0.0 {
            return Err(format!("seed {seed}: mixing path accepted"));
        }
        match verify_final_block(&bad, &ShootingOptions::default(), tol) {
            Err(Error::HypothesisViolation(_)) => {}
            Err(e) => return Err(format!("seed {seed}: refused for the wrong reason: {e}")),
            Ok(r) => return Err(format!("seed {seed}: index reported: {r:?}")),
        }
        cases += 1;
    }
    let spec = r#"{"dim": 4, "domain": "real-line", "kind": "builtin",
                   "payload": {"name": "mixing_path", "n_plus": 2, "n_minus": 2, "r": 0, "seed": 3}}"#;
    let file = std::env::temp_dir().join(format!("specflow-mixing-{}.json", std::process::id()));
    std::fs::write(&file, spec).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_specflow"))
        .args(["index", file.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    let _ = std::fs::remove_file(&file);
    if out.status.code() != Some(2) || !out.stdout.is_empty() {
        return Err(format!("cli index on a mixing path exited with {:?}", out.status.code()));
    }
    Ok(format!("{cases} mixing paths refused with a witness, cli exits 2"))
}

fn criterion8() -> Check {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_specflow"))
            .args(["verify", "--seeds", "3", "--dims", "2,3", "--json"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() {
        return Err(format!("verify exited with {:?}", a.status.code()));
    }
    if a.stdout != b.stdout {
        return Err("reports differ between runs".into());
    }
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() {
    let tol = Tolerances::default();
    let criteria: Vec<Criterion> = vec![
        ("canonical flow values", Duration::from_secs(10), Box::new(|| criterion1(&tol))),
        ("engine cross-agreement", Duration::from_secs(120), Box::new(|| criterion2(&tol))),
        ("algebraic properties", Duration::from_secs(120), Box::new(|| criterion3(&tol))),
        ("relative-dimension calculus", Duration::from_secs(60), Box::new(|| criterion4(&tol))),
        ("Riesz projector agreement", Duration::from_secs(60), Box::new(|| criterion5(&tol))),
        ("index theorem", Duration::from_secs(300), Box::new(|| criterion6(&tol))),
        ("hypothesis detection", Duration::from_secs(10), Box::new(|| criterion7(&tol))),
        ("determinism", Duration::from_secs(60), Box::new(criterion8)),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (verdict, detail) = match (&result, elapsed <= *limit) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {} s limit", limit.as_secs())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!("criterion {} {verdict} {name} ({:.2} s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
