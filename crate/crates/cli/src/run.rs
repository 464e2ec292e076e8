//! The four subcommands. Orbit jobs run in parallel; everything written to
//! disk is produced afterwards, in orbit order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use sechyp::cocycle::Subbundle;
use sechyp::exterior::induced_splitting;
use sechyp::flow::{find_singularities, flow_map, integrate, OrbitSegment, SingularityReport};
use sechyp::lyapunov::{domination_functional, lyapunov_exponents, p_sectional_exponents};
use sechyp::verify::{
    certify_orbit, check_dominated, estimate_splitting, Certificate, ChainOptions, ChainReport,
    SplittingField,
};
use sechyp::{CocycleSeq, Verdict};

use crate::cache::{read_orbit, write_orbit, CacheKey};
use crate::config::RunConfig;
use crate::jlab;
use crate::report::{write_json, write_series};

pub struct Orbit {
    pub index: usize,
    pub start: Vec<f64>,
    pub file: PathBuf,
    pub segment: Result<OrbitSegment, String>,
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out.join("cache")).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.emit()?)?;
    Ok(())
}

/// Loads every configured orbit from the cache, integrating and caching the missing ones.
pub fn orbits(cfg: &RunConfig, out: &Path) -> Result<Vec<Orbit>> {
    prepare(cfg, out)?;
    let jobs: Vec<(usize, CacheKey, PathBuf)> = cfg
        .starts()
        .into_iter()
        .enumerate()
        .map(|(i, x0)| {
            let key = CacheKey {
                field: cfg.field.clone(),
                start: x0.iter().copied().collect(),
                transient: cfg.transient,
                horizon: cfg.horizon,
                dt: cfg.dt,
            };
            (i, key, out.join("cache").join(format!("orbit_{i:03}.csv")))
        })
        .collect();
    let computed: Vec<(Result<OrbitSegment, String>, bool)> = jobs
        .par_iter()
        .map(|(_, key, file)| {
            if let Ok(Some(seg)) = read_orbit(file, key) {
                return (Ok(seg), false);
            }
            let x0 = sechyp::Vector::from_column_slice(&key.start);
            let seg = flow_map(&key.field, &x0, key.transient)
                .and_then(|x| integrate(&key.field, &x, key.horizon, key.dt))
                .map_err(|e| e.to_string());
            (seg, true)
        })
        .collect();
    let mut orbits = Vec::with_capacity(jobs.len());
    for ((index, key, file), (segment, fresh)) in jobs.into_iter().zip(computed) {
        match (&segment, fresh) {
            (Ok(seg), true) => write_orbit(&file, &key, seg)?,
            (Err(e), _) => eprintln!("orbit {index}: {e}"),
            _ => {}
        }
        orbits.push(Orbit {
            index,
            start: key.start,
            file,
            segment,
        });
    }
    Ok(orbits)
}

fn relative(out: &Path, file: &Path) -> String {
    file.strip_prefix(out)
        .unwrap_or(file)
        .to_string_lossy()
        .into_owned()
}

#[derive(Serialize)]
struct OrbitStatus {
    index: usize,
    start: Vec<f64>,
    cache: String,
    samples: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SimulateReport {
    verdict: Verdict,
    orbits: Vec<OrbitStatus>,
}

/// Integrates and caches every orbit. A failed orbit makes the run `Indeterminate`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Verdict> {
    let orbits = orbits(cfg, out)?;
    let statuses: Vec<OrbitStatus> = orbits
        .iter()
        .map(|o| OrbitStatus {
            index: o.index,
            start: o.start.clone(),
            cache: relative(out, &o.file),
            samples: o.segment.as_ref().ok().map(|s| s.times.len()),
            error: o.segment.as_ref().err().cloned(),
        })
        .collect();
    let verdict = Verdict::all(statuses.iter().map(|s| {
        if s.error.is_some() {
            Verdict::Indeterminate
        } else {
            Verdict::Pass
        }
    }));
    let report = SimulateReport {
        verdict,
        orbits: statuses,
    };
    write_json(&out.join("simulate.json"), "simulate", &cfg.name, &report)?;
    println!(
        "simulate: {} orbits, {} cached under {}",
        report.orbits.len(),
        report.orbits.iter().filter(|s| s.error.is_none()).count(),
        out.join("cache").display()
    );
    Ok(verdict)
}

#[derive(Serialize)]
struct OrbitSpectrum {
    index: usize,
    exponents: Option<Vec<f64>>,
    sum: Option<f64>,
    trace_average: Option<f64>,
    error_estimate: Option<f64>,
    low_confidence: bool,
    /// Order `p` to the `p`-sectional exponents along the estimated `F`.
    p_sectional: BTreeMap<usize, Vec<f64>>,
    domination_slope: Option<f64>,
    domination_drift: Option<f64>,
    series: Vec<String>,
    errors: Vec<String>,
}

#[derive(Serialize)]
struct SpectrumFile {
    verdict: Verdict,
    drift_limit: f64,
    orbits: Vec<OrbitSpectrum>,
}

struct SpectrumJob {
    summary: OrbitSpectrum,
    running: Vec<(f64, Vec<f64>)>,
    domination: Vec<(f64, f64)>,
}

fn spectrum_of(cfg: &RunConfig, index: usize, seg: &OrbitSegment) -> SpectrumJob {
    let SpectrumJob {
        summary: mut s,
        mut running,
        mut domination,
    } = empty_spectrum(index);
    match lyapunov_exponents(seg) {
        Ok(rep) => {
            s.sum = Some(rep.exponents.iter().sum());
            s.low_confidence = rep.error_estimate > cfg.tolerances.drift_limit;
            s.error_estimate = Some(rep.error_estimate);
            s.trace_average = rep.trace_average;
            s.exponents = Some(rep.exponents);
            running = rep.series;
        }
        Err(e) => s.errors.push(format!("exponents: {e}")),
    }
    match estimate_splitting(seg, cfg.d_e, cfg.tolerances.splitting_window) {
        Ok(split) => {
            for &p in &cfg.orders {
                match p_sectional_exponents(seg, &split.f, p) {
                    Ok(v) => {
                        s.p_sectional.insert(p, v);
                    }
                    Err(e) => s.errors.push(format!("p = {p}: {e}")),
                }
            }
            match domination_functional(seg, &split.e, &split.f) {
                Ok(d) => {
                    s.domination_slope = Some(d.slope);
                    s.domination_drift = Some(d.drift);
                    domination = d.series;
                }
                Err(e) => s.errors.push(format!("domination: {e}")),
            }
        }
        Err(e) => s.errors.push(format!("splitting: {e}")),
    }
    SpectrumJob {
        summary: s,
        running,
        domination,
    }
}

/// Exponents, `p`-sectional exponents and the domination functional per orbit.
pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<Verdict> {
    let orbits = orbits(cfg, out)?;
    let n = cfg.dim();
    let jobs: Vec<SpectrumJob> = orbits
        .par_iter()
        .map(|o| match &o.segment {
            Ok(seg) => spectrum_of(cfg, o.index, seg),
            Err(e) => {
                let mut job = empty_spectrum(o.index);
                job.summary.errors.push(format!("orbit: {e}"));
                job
            }
        })
        .collect();
    let mut summaries = Vec::with_capacity(jobs.len());
    for mut job in jobs {
        let i = job.summary.index;
        if !job.running.is_empty() {
            let path = out.join(format!("spectrum_{i:03}.csv"));
            let mut header = vec!["t".to_string()];
            header.extend((1..=n).map(|k| format!("chi_{k}")));
            write_series(
                &path,
                &["running Lyapunov exponents, sorted descending; t = flow time"],
                &header,
                job.running.iter().map(|(t, v)| {
                    let mut row = vec![*t];
                    row.extend(v);
                    row
                }),
            )?;
            job.summary.series.push(relative(out, &path));
        }
        if !job.domination.is_empty() {
            let path = out.join(format!("domination_{i:03}.csv"));
            write_series(
                &path,
                &["f_t = log|Phi_t on E| - log m(Phi_t on F) along the estimated splitting"],
                &["t".to_string(), "f_t".to_string()],
                job.domination.iter().map(|&(t, f)| vec![t, f]),
            )?;
            job.summary.series.push(relative(out, &path));
        }
        summaries.push(job.summary);
    }
    let verdict = Verdict::all(summaries.iter().map(|s| {
        if s.errors.is_empty() && !s.low_confidence {
            Verdict::Pass
        } else {
            Verdict::Indeterminate
        }
    }));
    for s in &summaries {
        let chi = s
            .exponents
            .as_ref()
            .map(|v| format_list(v))
            .unwrap_or_else(|| "-".into());
        println!(
            "orbit {:>3}: chi {chi}{}{}",
            s.index,
            if s.low_confidence {
                " (low confidence)"
            } else {
                ""
            },
            s.errors
                .first()
                .map(|e| format!(" [{e}]"))
                .unwrap_or_default()
        );
    }
    let file = SpectrumFile {
        verdict,
        drift_limit: cfg.tolerances.drift_limit,
        orbits: summaries,
    };
    write_json(&out.join("spectrum.json"), "spectrum", &cfg.name, &file)?;
    Ok(verdict)
}

fn empty_spectrum(index: usize) -> SpectrumJob {
    SpectrumJob {
        summary: OrbitSpectrum {
            index,
            exponents: None,
            sum: None,
            trace_average: None,
            error_estimate: None,
            low_confidence: true,
            p_sectional: BTreeMap::new(),
            domination_slope: None,
            domination_drift: None,
            series: Vec::new(),
            errors: Vec::new(),
        },
        running: Vec::new(),
        domination: Vec::new(),
    }
}

fn format_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Domination of the splitting `Ẽ ⊕ F̃` induced on `∧^k`.
#[derive(Serialize)]
struct InducedRow {
    k: usize,
    verdict: Verdict,
    e_rate: Option<f64>,
    f_rate: Option<f64>,
    violation: Option<String>,
    error: Option<String>,
}

fn induced_table(seg: &OrbitSegment, split: &SplittingField) -> Vec<InducedRow> {
    let d_f = split.d_f();
    let row = |k: usize, cert: Result<Certificate, String>| match cert {
        Ok(c) => InducedRow {
            k,
            verdict: c.verdict,
            e_rate: c.e_rate,
            f_rate: c.f_rate,
            violation: c.violation,
            error: None,
        },
        Err(e) => InducedRow {
            k,
            verdict: Verdict::Indeterminate,
            e_rate: None,
            f_rate: None,
            violation: None,
            error: Some(e),
        },
    };
    let mut rows = vec![row(1, Ok(check_dominated(split, seg)))];
    for k in 2..=d_f {
        let cert = (|| -> Result<Certificate, String> {
            let c = CocycleSeq::exterior_power(seg, k).map_err(|e| e.to_string())?;
            let (mut es, mut fs) = (Vec::new(), Vec::new());
            for s in split.first..=split.last {
                let ind = induced_splitting(split.e.basis(s), split.f.basis(s), k)
                    .map_err(|e| e.to_string())?;
                let (e, f) = ind.orthonormal();
                es.push(e);
                fs.push(f);
            }
            let induced = SplittingField::from_bundles(
                &c,
                Subbundle::new(split.first, es),
                Subbundle::new(split.first, fs),
                "induced",
            )
            .map_err(|e| e.to_string())?;
            Ok(check_dominated(&induced, &c))
        })();
        rows.push(row(k, cert));
    }
    rows
}

#[derive(Serialize)]
struct OrbitVerification {
    index: usize,
    verdict: Verdict,
    error: Option<String>,
    /// One chain per configured order `p`.
    chains: BTreeMap<usize, ChainReport>,
    /// Report-only: domination of the induced splittings, `k = 1` being the base.
    induced: Vec<InducedRow>,
}

#[derive(Serialize)]
struct VerifyFile {
    verdict: Verdict,
    singularities: Vec<SingularityReport>,
    singularity_notes: Vec<String>,
    orbits: Vec<OrbitVerification>,
}

fn verify_orbit(cfg: &RunConfig, o: &Orbit, sing: &[SingularityReport]) -> OrbitVerification {
    let seg = match &o.segment {
        Ok(seg) => seg,
        Err(e) => {
            return OrbitVerification {
                index: o.index,
                verdict: Verdict::Indeterminate,
                error: Some(e.clone()),
                chains: BTreeMap::new(),
                induced: Vec::new(),
            }
        }
    };
    let mut chains = BTreeMap::new();
    for &p in &cfg.orders {
        let mut opts = ChainOptions::new(cfg.d_e, p, cfg.tau);
        opts.window = cfg.tolerances.splitting_window;
        chains.insert(p, certify_orbit(seg, sing, &opts));
    }
    let induced = chains
        .values()
        .next()
        .and_then(|c| c.splitting.as_ref())
        .map(|split| induced_table(seg, split))
        .unwrap_or_default();
    OrbitVerification {
        index: o.index,
        verdict: Verdict::all(chains.values().map(|c| c.verdict)),
        error: None,
        chains,
        induced,
    }
}

fn summary_text(file: &VerifyFile) -> String {
    let mut s = String::new();
    for sing in &file.singularities {
        let _ = writeln!(
            s,
            "singularity at {}: index {}, {}",
            format_list(&sing.location),
            sing.index,
            if sing.hyperbolic {
                "hyperbolic"
            } else {
                "not hyperbolic"
            }
        );
    }
    for o in &file.orbits {
        let _ = writeln!(s, "orbit {}: {:?}", o.index, o.verdict);
        if let Some(e) = &o.error {
            let _ = writeln!(s, "  error: {e}");
        }
        for (p, chain) in &o.chains {
            let _ = writeln!(s, "  p = {p}");
            for stage in &chain.stages {
                let c = &stage.certificate;
                let mut line = format!("    {:<22} {:<13?}", stage.stage, c.verdict);
                if let Some(t) = c.uniform_t {
                    let _ = write!(line, " T = {t}");
                }
                if let Some(m) = c.margin {
                    let _ = write!(line, " margin {m:.4}");
                }
                if !stage.counted {
                    line.push_str(" (not counted)");
                }
                if let Some(v) = &c.violation {
                    let _ = write!(line, " [{v}]");
                }
                let _ = writeln!(s, "{}", line.trim_end());
            }
        }
        if !o.induced.is_empty() {
            let _ = writeln!(s, "  induced splittings (not counted)");
            for r in &o.induced {
                let rate = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or("-".into());
                let _ = writeln!(
                    s,
                    "    k = {}  {:<13?} E rate {}  F rate {}",
                    r.k,
                    r.verdict,
                    rate(r.e_rate),
                    rate(r.f_rate)
                );
            }
        }
    }
    let _ = writeln!(s, "ensemble verdict: {:?}", file.verdict);
    s
}

/// Runs the certificate chain on every orbit and aggregates the ensemble verdict.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<Verdict> {
    let search = find_singularities(&cfg.field, &cfg.singularity_seeds())?;
    let orbits = orbits(cfg, out)?;
    let results: Vec<OrbitVerification> = orbits
        .par_iter()
        .map(|o| verify_orbit(cfg, o, &search.found))
        .collect();
    let verdict = Verdict::all(results.iter().map(|r| r.verdict));
    let file = VerifyFile {
        verdict,
        singularities: search.found,
        singularity_notes: search.notes,
        orbits: results,
    };
    let text = summary_text(&file);
    print!("{text}");
    fs::write(out.join("verify.txt"), &text)?;
    write_json(&out.join("verify.json"), "verify", &cfg.name, &file)?;
    Ok(verdict)
}

/// Seeded Monte-Carlo suites on random strictly `J`-separated matrices.
pub fn jlab(cfg: &RunConfig, out: &Path) -> Result<Verdict> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let suites = jlab::run_all(&cfg.jlab);
    let verdict = Verdict::all(suites.iter().map(|s| s.verdict()));
    for s in &suites {
        println!(
            "{:<12} {:?}: {} trials, {} violations, {} errors",
            s.name,
            s.verdict(),
            s.trials,
            s.violations,
            s.errors
        );
        for (k, v) in &s.worst {
            println!("    {k} = {v:.3e}");
        }
        for r in &s.reproducers {
            println!("    reproduce: trial {} seed {}", r.trial, r.seed);
        }
    }
    #[derive(Serialize)]
    struct JlabFile<'a> {
        verdict: Verdict,
        seed: u64,
        suites: &'a [jlab::SuiteReport],
    }
    write_json(
        &out.join("jlab.json"),
        "jlab",
        &cfg.name,
        &JlabFile {
            verdict,
            seed: cfg.jlab.seed,
            suites: &suites,
        },
    )?;
    Ok(verdict)
}
