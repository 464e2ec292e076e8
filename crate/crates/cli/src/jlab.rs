//! Monte-Carlo suites over random strictly `J`-separated matrices.
//!
//! Trial `i` of a suite draws from its own generator, seeded by
//! [`trial_seed`], so every violation can be replayed in isolation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use sechyp::linalg::{diag, min_sym_eigenvalue};
use sechyp::pseudo_euclidean::random::{
    random_form_nonnegative_on_zero_cone, random_strictly_separated,
};
use sechyp::pseudo_euclidean::{
    composition_check, cone_ratio_extrema, kuhne_bounds, polar_decompose, pseudo_adjoint, sigma_d,
    QuadForm,
};
use sechyp::{Matrix, Verdict};

use crate::config::JlabConfig;

const SHAPES: [(usize, usize); 5] = [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4)];
const MAX_REPRODUCERS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct Reproducer {
    pub trial: usize,
    pub seed: u64,
    pub what: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    pub errors: usize,
    /// Worst observed value of each monitored quantity.
    pub worst: BTreeMap<&'static str, f64>,
    pub reproducers: Vec<Reproducer>,
}

impl SuiteReport {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_bool(self.violations == 0 && self.errors == 0)
    }
}

/// Seed of trial `trial` in suite `suite`.
pub fn trial_seed(base: u64, suite: u64, trial: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (suite << 40) ^ trial as u64
}

/// Outcome of one trial: monitored values, and a description if it failed.
struct Trial {
    values: Vec<(&'static str, f64, bool)>,
    failure: Option<String>,
    error: bool,
}

impl Trial {
    fn new() -> Self {
        Self {
            values: Vec::new(),
            failure: None,
            error: false,
        }
    }

    /// Records `value`; `larger_is_worse` selects how the worst case is taken.
    fn watch(&mut self, name: &'static str, value: f64, larger_is_worse: bool) {
        self.values.push((name, value, larger_is_worse));
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    fn error(msg: impl std::fmt::Display) -> Self {
        Self {
            values: Vec::new(),
            failure: Some(msg.to_string()),
            error: true,
        }
    }
}

fn run_suite(
    name: &'static str,
    id: u64,
    cfg: &JlabConfig,
    trial: impl Fn(&mut ChaCha8Rng, usize) -> Trial + Sync,
) -> SuiteReport {
    let outcomes: Vec<(u64, Trial)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(cfg.seed, id, i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (seed, trial(&mut rng, i))
        })
        .collect();
    let mut report = SuiteReport {
        name,
        trials: cfg.trials,
        violations: 0,
        errors: 0,
        worst: BTreeMap::new(),
        reproducers: Vec::new(),
    };
    for (i, (seed, t)) in outcomes.into_iter().enumerate() {
        for (key, v, larger_is_worse) in t.values {
            let w = report.worst.entry(key).or_insert(v);
            if (larger_is_worse && v > *w) || (!larger_is_worse && v < *w) {
                *w = v;
            }
        }
        if let Some(what) = t.failure {
            if t.error {
                report.errors += 1;
            } else {
                report.violations += 1;
            }
            if report.reproducers.len() < MAX_REPRODUCERS {
                report.reproducers.push(Reproducer {
                    trial: i,
                    seed,
                    what,
                });
            }
        }
    }
    report
}

fn form(i: usize) -> QuadForm {
    let (q, n) = SHAPES[i % SHAPES.len()];
    QuadForm::standard(q, n).expect("valid shape")
}

/// `L = RU` reconstruction, `J`-isometry of `U` and `r_1^- < r_1^+`.
fn polar_suite(cfg: &JlabConfig) -> SuiteReport {
    run_suite("polar", 1, cfg, |rng, i| {
        let j = form(i);
        let n = j.dim();
        let (l, _, _) = random_strictly_separated(rng, &j);
        let pair = match polar_decompose(&j, &l) {
            Ok(p) => p,
            Err(e) => return Trial::error(e),
        };
        let mut t = Trial::new();
        let recon = (&pair.r * &pair.u - &l).norm() / l.norm();
        let iso = (pseudo_adjoint(&j, &pair.u) * &pair.u - Matrix::identity(n, n)).norm();
        let gap = pair.r1_plus() - pair.r1_minus();
        t.watch("reconstruction", recon, true);
        t.watch("isometry", iso, true);
        t.watch("r1_gap", gap, false);
        t.require(recon <= 1e-9, || format!("|RU - L|/|L| = {recon:e}"));
        t.require(iso <= 1e-9, || format!("|U+U - I| = {iso:e}"));
        t.require(gap > 0.0, || format!("r_1^+ - r_1^- = {gap:e}"));
        t
    })
}

/// Submultiplicativity of `r_1^±` under composition.
fn composition_suite(cfg: &JlabConfig) -> SuiteReport {
    run_suite("composition", 2, cfg, |rng, i| {
        let j = form(i);
        let (l1, _, _) = random_strictly_separated(rng, &j);
        let (l2, _, _) = random_strictly_separated(rng, &j);
        match composition_check(&j, &l1, &l2) {
            Ok(c) => {
                let mut t = Trial::new();
                let margin = c.plus_margin.min(c.minus_margin);
                t.watch("margin", margin, false);
                t.require(c.holds, || format!("composition margin {margin:e}"));
                t
            }
            Err(e) => Trial::error(e),
        }
    })
}

/// `F - rJ ⪰ 0` exactly on the bisected interval, and the cone ratios lie inside it.
fn kuhne_suite(cfg: &JlabConfig) -> SuiteReport {
    let samples = cfg.samples;
    run_suite("kuhne", 3, cfg, move |rng, i| {
        let j = form(i);
        let d = j.signature_matrix();
        let f = random_form_nonnegative_on_zero_cone(rng, &j);
        let iv = match kuhne_bounds(&j, &f) {
            Ok(iv) => iv,
            Err(e) => return Trial::error(e),
        };
        let mut t = Trial::new();
        let tol = 1e-10 * f.norm().max(1.0);
        let inner = (1..=5)
            .map(|k| {
                let r = iv.lower + (iv.upper - iv.lower) * k as f64 / 6.0;
                min_sym_eigenvalue(&(&f - &d * r))
            })
            .fold(f64::INFINITY, f64::min);
        let outer = [iv.lower - 1e-3, iv.upper + 1e-3]
            .iter()
            .map(|&r| min_sym_eigenvalue(&(&f - &d * r)))
            .fold(f64::NEG_INFINITY, f64::max);
        let (sup_minus, inf_plus) = cone_ratio_extrema(&j, &f, samples, rng.random());
        let slack = (iv.lower - sup_minus).min(inf_plus - iv.upper);
        t.watch("interior_min_eig", inner, false);
        t.watch("exterior_max_eig", outer, true);
        t.watch("cone_slack", slack, false);
        t.require(inner >= -tol, || {
            format!("interior min eigenvalue {inner:e}")
        });
        t.require(outer < 0.0, || format!("exterior min eigenvalue {outer:e}"));
        t.require(slack >= -1e-4, || {
            format!("cone ratio outside by {:e}", -slack)
        });
        t
    })
}

/// Closed-form `σ_d` on diagonal models against the Monte-Carlo infimum.
fn sigma_suite(cfg: &JlabConfig) -> SuiteReport {
    let samples = cfg.samples;
    run_suite("sigma_d", 4, cfg, move |rng, i| {
        let j = form(i);
        let (q, n) = (j.index(), j.dim());
        let d = 1 + i / SHAPES.len() % (n - q);
        let minus: Vec<f64> = (0..q).map(|_| rng.random_range(0.1..0.9)).collect();
        let mut plus: Vec<f64> = (q..n).map(|_| rng.random_range(1.1..6.0)).collect();
        let l = diag(&minus.iter().chain(&plus).copied().collect::<Vec<_>>());
        plus.sort_by(f64::total_cmp);
        let expected: f64 = plus[..d].iter().product();
        let rep = match sigma_d(&j, &l, d, samples, rng.random()) {
            Ok(r) => r,
            Err(e) => return Trial::error(e),
        };
        let mut t = Trial::new();
        let err = (rep.formula - expected).abs();
        let gap = rep.mc_infimum - rep.formula;
        let ext = (rep.extremal / rep.formula - 1.0).abs();
        t.watch("formula_error", err, true);
        t.watch("mc_minus_formula", gap, false);
        t.watch("extremal_deviation", ext, true);
        t.require(err <= 1e-12, || format!("formula error {err:e}"));
        t.require(gap >= -1e-6, || {
            format!("Monte-Carlo undercuts by {:e}", -gap)
        });
        t.require(ext <= 0.05, || format!("extremal deviation {ext:e}"));
        t
    })
}

pub fn run_all(cfg: &JlabConfig) -> Vec<SuiteReport> {
    vec![
        polar_suite(cfg),
        composition_suite(cfg),
        kuhne_suite(cfg),
        sigma_suite(cfg),
    ]
}
