//! Seeded invariant suites with a deterministic summary report.
//!
//! Every case is a `(seed, dim)` pair. Cases run in parallel but results are
//! collected in input order, so the report depends only on the configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::Error;
use crate::matcore::{frobenius, identity, max_abs, norm2, CMatrix};
use crate::odeindex::{check_essentially_splitting, verify_final_block, ShootingOptions};
use crate::path::{Domain, OperatorPath};
use crate::pathgen::{self, conjugation_loop, random_projector, random_smooth};
use crate::reldim::{pair_index, rel_dim, transport};
use crate::sflow::{sf_crossings, sf_endpoint, sf_partition, CrossingOptions, PartitionOptions};
use crate::spectral::{riesz_region_projector, spectral_projector, Projector, SpectralRegion};

pub const REPORT_SCHEMA: &str = "sflow-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    SfProperties,
    Reldim,
    Index,
    Projectors,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::SfProperties => "sf-properties",
            Suite::Reldim => "reldim",
            Suite::Index => "index",
            Suite::Projectors => "projectors",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::SfProperties, Suite::Reldim, Suite::Index, Suite::Projectors],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sf-properties" => Ok(Suite::SfProperties),
            "reldim" => Ok(Suite::Reldim),
            "index" => Ok(Suite::Index),
            "projectors" => Ok(Suite::Projectors),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite '{other}' (expected sf-properties, reldim, index, projectors or all)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub seeds: Vec<u64>,
    pub dims: Vec<usize>,
    pub tol: Tolerances,
    /// Negates the partition engine's result; the sf-properties suite must
    /// then fail.
    pub inject_sign_flip: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            seeds: (0..10).collect(),
            dims: vec![2, 3, 4, 5, 6],
            tol: Tolerances::default(),
            inject_sign_flip: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(String),
    Skip(String),
}

type Checks = Vec<(&'static str, Outcome)>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub dim: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSummary {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub invariants: Vec<InvariantSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub seeds: Vec<u64>,
    pub dims: Vec<usize>,
    pub inject_sign_flip: bool,
    pub suites: Vec<SuiteReport>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for suite in &self.suites {
            for inv in &suite.invariants {
                let verdict = if inv.failed == 0 { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "{verdict} {}/{}: {} passed, {} failed, {} skipped",
                    suite.suite, inv.name, inv.passed, inv.failed, inv.skipped
                );
                if let Some(f) = &inv.first_failure {
                    let _ = writeln!(out, "  first failure: seed {} dim {}: {}", f.seed, f.dim, f.detail);
                }
            }
        }
        let _ = writeln!(
            out,
            "total: {} passed, {} failed, {} skipped",
            self.passed, self.failed, self.skipped
        );
        out
    }
}

pub fn run(cfg: &VerifyConfig) -> VerifyReport {
    let cases: Vec<(u64, usize)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.dims.iter().map(move |&d| (s, d)))
        .collect();
    let mut suites = Vec::new();
    for suite in cfg.suite.expand() {
        let results: Vec<Checks> = cases
            .par_iter()
            .map(|&(seed, dim)| match suite {
                Suite::SfProperties => sf_case(seed, dim, cfg),
                Suite::Reldim => reldim_case(seed, dim, &cfg.tol),
                Suite::Index => index_case(seed, dim, &cfg.tol),
                Suite::Projectors => projector_case(seed, dim, &cfg.tol),
                Suite::All => unreachable!("expanded above"),
            })
            .collect();
        suites.push(summarize(suite, &cases, results));
    }
    let (mut passed, mut failed, mut skipped) = (0, 0, 0);
    for inv in suites.iter().flat_map(|s| &s.invariants) {
        passed += inv.passed;
        failed += inv.failed;
        skipped += inv.skipped;
    }
    VerifyReport {
        schema: REPORT_SCHEMA,
        seeds: cfg.seeds.clone(),
        dims: cfg.dims.clone(),
        inject_sign_flip: cfg.inject_sign_flip,
        suites,
        passed,
        failed,
        skipped,
        all_pass: failed == 0,
    }
}

fn summarize(suite: Suite, cases: &[(u64, usize)], results: Vec<Checks>) -> SuiteReport {
    let mut invariants: Vec<InvariantSummary> = Vec::new();
    for (&(seed, dim), checks) in cases.iter().zip(results) {
        for (name, outcome) in checks {
            let idx = match invariants.iter().position(|i| i.name == name) {
                Some(i) => i,
                None => {
                    invariants.push(InvariantSummary {
                        name: name.to_string(),
                        passed: 0,
                        failed: 0,
                        skipped: 0,
                        first_failure: None,
                    });
                    invariants.len() - 1
                }
            };
            let inv = &mut invariants[idx];
            match outcome {
                Outcome::Pass => inv.passed += 1,
                Outcome::Skip(_) => inv.skipped += 1,
                Outcome::Fail(detail) => {
                    inv.failed += 1;
                    if inv.first_failure.is_none() {
                        inv.first_failure = Some(Failure { seed, dim, detail });
                    }
                }
            }
        }
    }
    SuiteReport { suite: suite.name().to_string(), invariants }
}

fn check(cond: bool, detail: impl FnOnce() -> String) -> Outcome {
    if cond {
        Outcome::Pass
    } else {
        Outcome::Fail(detail())
    }
}

fn failed<E: std::fmt::Display>(e: E) -> Outcome {
    Outcome::Fail(e.to_string())
}

/// Outcome of a fallible check.
fn attempt(f: impl FnOnce() -> Result<Outcome, Error>) -> Outcome {
    f().unwrap_or_else(failed)
}

fn case_rng(seed: u64, salt: u64) -> rand_chacha::ChaCha8Rng {
    pathgen::rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// Path degree used for the random corpus.
pub fn corpus_degree(seed: u64) -> usize {
    1 + (seed % 3) as usize
}

fn sf_case(seed: u64, n: usize, cfg: &VerifyConfig) -> Checks {
    let tol = &cfg.tol;
    let degree = corpus_degree(seed);
    let a = match random_smooth(n, seed, degree) {
        Ok(a) => a,
        Err(e) => return vec![("generation", failed(e))],
    };
    let sf = |p: &OperatorPath| -> Result<i64, Error> {
        let v = sf_partition(p, &PartitionOptions::default(), tol)?.sf;
        Ok(if cfg.inject_sign_flip { -v } else { v })
    };
    let mut out = Checks::new();

    out.push((
        "engine-agreement",
        attempt(|| {
            let e = sf_endpoint(&a, tol)?.sf;
            let p = sf(&a)?;
            match sf_crossings(&a, &CrossingOptions::default(), tol) {
                Ok((c, _)) => Ok(check(e == p && p == c.sf, || {
                    format!("endpoint {e}, partition {p}, crossings {}", c.sf)
                })),
                Err(Error::IrregularCrossing { .. } | Error::MultipleEigenvalueAtCrossing { .. }) => {
                    Ok(check(e == p, || format!("endpoint {e}, partition {p}")))
                }
                Err(err) => Err(err),
            }
        }),
    ));

    out.push((
        "reversal",
        attempt(|| {
            let (x, y) = (sf(&a)?, sf(&a.reverse())?);
            Ok(check(y == -x, || format!("sf {x}, reversed {y}")))
        }),
    ));

    out.push((
        "catenation",
        attempt(|| {
            let b = pathgen::composable_after(&a.at(1.0), seed ^ 0x5eed, degree)?;
            let ab = a.concat(&b)?;
            let (x, y, z) = (sf(&a)?, sf(&b)?, sf(&ab)?);
            Ok(check(z == x + y, || format!("sf(A) {x} + sf(B) {y} != sf(A*B) {z}")))
        }),
    ));

    out.push((
        "direct-sum",
        attempt(|| {
            let m = 1 + (seed % 3) as usize;
            let b = random_smooth(m, seed.wrapping_add(1_000_003), degree)?;
            let sum = OperatorPath::direct_sum(&[a.clone(), b.clone()])?;
            let (x, y, z) = (sf(&a)?, sf(&b)?, sf(&sum)?);
            Ok(check(z == x + y, || format!("sf(A) {x} + sf(B) {y} != sf(A+B) {z}")))
        }),
    ));

    out.push((
        "constant-zero",
        attempt(|| {
            let c = OperatorPath::constant(a.at(0.0), Domain::Unit)?;
            let v = sf(&c)?;
            Ok(check(v == 0, || format!("constant path has sf {v}")))
        }),
    ));

    out.push((
        "hyperbolic-zero",
        attempt(|| {
            let rank = case_rng(seed, 1).random_range(0..=n);
            let p = random_projector(n, rank, seed)?;
            let v = sf(&conjugation_loop(&p, seed))?;
            Ok(check(v == 0, || format!("conjugation loop has sf {v}")))
        }),
    ));

    out.push((
        "homotopy",
        attempt(|| {
            let h = pathgen::homotopy_wiggle(&a, seed, 0.5)?;
            let base = sf(&a)?;
            for j in 1..8 {
                let s = j as f64 / 7.0;
                let v = sf(&h.at(s))?;
                if v != base {
                    return Ok(Outcome::Fail(format!("sf {v} at s = {s:.4}, {base} at s = 0")));
                }
            }
            Ok(Outcome::Pass)
        }),
    ));
    out
}

fn reldim_case(seed: u64, n: usize, tol: &Tolerances) -> Checks {
    let mut rng = case_rng(seed, n as u64);
    let ranks: Vec<usize> = (0..3).map(|_| rng.random_range(0..=n)).collect();
    let projectors: Result<Vec<Projector>, Error> = ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| random_projector(n, r, seed.wrapping_mul(3).wrapping_add(i as u64)))
        .collect();
    let ps = match projectors {
        Ok(ps) => ps,
        Err(e) => return vec![("generation", failed(e))],
    };
    let (p, q, r) = (&ps[0], &ps[1], &ps[2]);
    let mut out = Checks::new();

    out.push((
        "additivity",
        attempt(|| {
            let pr = rel_dim(p, r, tol)?.value;
            let pq = rel_dim(p, q, tol)?.value;
            let qr = rel_dim(q, r, tol)?.value;
            Ok(check(pr == pq + qr, || format!("[P-R] {pr} != [P-Q] {pq} + [Q-R] {qr}")))
        }),
    ));

    out.push((
        "complement",
        attempt(|| {
            let pq = rel_dim(p, q, tol)?.value;
            let cc = rel_dim(&q.complement(), &p.complement(), tol)?.value;
            Ok(check(pq == cc, || format!("[P-Q] {pq} != [(I-Q)-(I-P)] {cc}")))
        }),
    ));

    out.push((
        "pair-index",
        attempt(|| {
            let ind = pair_index(&p.range(), &q.kernel(), tol)?;
            let pq = rel_dim(p, q, tol)?.value;
            Ok(check(ind == pq, || format!("ind(Range P, ker Q) {ind} != [P-Q] {pq}")))
        }),
    ));

    let path = conjugation_loop(p, seed);
    // the loop's values are 2 U P U^-1 - I; recover the projectors
    let samples: Vec<CMatrix> = (0..=64)
        .map(|i| (path.at(i as f64 / 64.0) + identity(n)) * crate::matcore::c64(0.5, 0.0))
        .collect();
    out.push((
        "local-constancy",
        attempt(|| {
            for (i, w) in samples.windows(2).enumerate() {
                let (a, b) = (Projector::new(w[0].clone(), 1e-8)?, Projector::new(w[1].clone(), 1e-8)?);
                if norm2(&(a.matrix() - b.matrix())) >= 1.0 {
                    continue;
                }
                let v = rel_dim(&a, &b, tol)?.value;
                if v != 0 {
                    return Ok(Outcome::Fail(format!("[P(t_{i}) - P(t_{})] = {v}", i + 1)));
                }
            }
            Ok(Outcome::Pass)
        }),
    ));

    out.push((
        "transport",
        attempt(|| {
            for w in samples.windows(2) {
                let (a, b) = (Projector::new(w[0].clone(), 1e-8)?, Projector::new(w[1].clone(), 1e-8)?);
                match transport(&a, &b, tol) {
                    Ok(u) => {
                        let res = frobenius(&(&u * a.matrix() - b.matrix() * &u));
                        if res > 1e-10 * norm2(&u) || a.rank() != b.rank() {
                            return Ok(Outcome::Fail(format!("transport residual {res:.3e}")));
                        }
                    }
                    Err(Error::TooFar { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(Outcome::Pass)
        }),
    ));
    out
}

/// Parameters of the block path for an index case: `(n_plus, n_minus, r, k)`.
pub fn block_case_params(seed: u64, n: usize) -> Option<(usize, usize, usize, i64)> {
    if n < 2 {
        return None;
    }
    let mut rng = case_rng(seed, 0xb10c);
    let n_plus = rng.random_range(1..n);
    let n_minus = n - n_plus;
    let r = rng.random_range(0..=n.min(4));
    let up = r.min(n_minus).min(3) as i64;
    let down = r.min(n_plus).min(3) as i64;
    let k = rng.random_range(-down..=up);
    Some((n_plus, n_minus, r, k))
}

fn index_case(seed: u64, n: usize, tol: &Tolerances) -> Checks {
    let Some((n_plus, n_minus, r, k)) = block_case_params(seed, n) else {
        return vec![("index-theorem", Outcome::Skip("dimension below 2".into()))];
    };
    let mut out = Checks::new();
    match pathgen::block_splitting_path(n_plus, n_minus, r, k, seed) {
        Err(e) => out.push(("generation", failed(e))),
        Ok(bp) => {
            out.push((
                "splitting-check",
                attempt(|| {
                    let (ok, w) = check_essentially_splitting(&bp, tol)?;
                    Ok(check(ok, || format!("{} violation {:.3e}", w.condition, w.max_out_of_block)))
                }),
            ));
            match verify_final_block(&bp, &ShootingOptions::default(), tol) {
                Err(e) => {
                    out.push(("index-theorem", failed(&e)));
                    out.push(("planted-flow", failed(&e)));
                    out.push(("doubling", failed(e)));
                }
                Ok(rep) => {
                    out.push((
                        "index-theorem",
                        check(rep.agree, || {
                            format!("sf {}, shooting {}, formula {}", rep.sf, rep.ind_shooting, rep.ind_formula)
                        }),
                    ));
                    out.push(("planted-flow", check(rep.sf == k, || format!("planted {k}, sf {}", rep.sf))));
                    out.push(("doubling", check(rep.stable_under_doubling, || "index changed under (2T, 2 steps)".into())));
                }
            }
        }
    }
    out.push((
        "hypothesis-detection",
        attempt(|| {
            let bad = pathgen::mixing_path(n_plus, n_minus, 0, seed)?;
            let (ok, w) = check_essentially_splitting(&bad, tol)?;
            if ok || w.max_out_of_block == 0.0 {
                return Ok(Outcome::Fail("mixing path passed the splitting check".into()));
            }
            Ok(match verify_final_block(&bad, &ShootingOptions::default(), tol) {
                Err(Error::HypothesisViolation(_)) => Outcome::Pass,
                Err(e) => Outcome::Fail(format!("refused for the wrong reason: {e}")),
                Ok(_) => Outcome::Fail("index reported for a path violating the hypothesis".into()),
            })
        }),
    ));
    out
}

fn projector_case(seed: u64, n: usize, tol: &Tolerances) -> Checks {
    if n < 2 {
        return vec![("route-agreement", Outcome::Skip("dimension below 2".into()))];
    }
    let jordan = seed.is_multiple_of(4);
    let (a, right) = match pathgen::separated_matrix(n, seed, jordan) {
        Ok(x) => x,
        Err(e) => return vec![("generation", failed(e))],
    };
    let region = SpectralRegion::RightHalfPlane;
    let routes = riesz_region_projector(&a, &region, tol).and_then(|r| Ok((r, spectral_projector(&a, &region, tol)?)));
    let (riesz, schur) = match routes {
        Ok(x) => x,
        Err(e) => return vec![("route-agreement", failed(e))],
    };
    let diff = max_abs(&(riesz.matrix() - schur.matrix()));
    let comm = riesz.commutator_defect(&a);
    vec![
        ("route-agreement", check(diff <= 1e-7, || format!("max entry difference {diff:.3e}"))),
        ("idempotency", check(riesz.defect() <= 1e-8, || format!("defect {:.3e}", riesz.defect()))),
        (
            "commutation",
            check(comm <= 1e-8 * frobenius(&a), || format!("commutator {comm:.3e}")),
        ),
        (
            "rank",
            check(riesz.rank() == right && schur.rank() == right, || {
                format!("ranks {} / {}, expected {right}", riesz.rank(), schur.rank())
            }),
        ),
    ]
}
