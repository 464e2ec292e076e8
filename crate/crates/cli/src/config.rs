use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sechyp::flow::VectorFieldSpec;
use sechyp::linalg::diag;
use sechyp::lyapunov::{DRIFT_LIMIT, MIN_HORIZON};
use sechyp::verify::DEFAULT_WINDOW;
use sechyp::Vector;

/// Everything a run depends on. One file fully determines the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub field: VectorFieldSpec,
    pub initial: InitialConditions,
    pub horizon: f64,
    pub dt: f64,
    /// Flow time discarded before sampling starts.
    #[serde(default)]
    pub transient: f64,
    pub tau: f64,
    pub d_e: usize,
    pub orders: Vec<usize>,
    /// Newton seeds for the singularity search.
    #[serde(default)]
    pub singularity_seeds: Vec<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub jlab: JlabConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// Extra starts drawn uniformly from `[box_lo, box_hi]`.
    #[serde(default)]
    pub random: usize,
    #[serde(default)]
    pub box_lo: Vec<f64>,
    #[serde(default)]
    pub box_hi: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Last-quartile drift above which exponents are flagged low-confidence.
    pub drift_limit: f64,
    /// Flow time trimmed at both ends of an estimated splitting.
    pub splitting_window: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            drift_limit: DRIFT_LIMIT,
            splitting_window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JlabConfig {
    pub trials: usize,
    /// Monte-Carlo samples per cone or subspace search.
    pub samples: usize,
    pub seed: u64,
}

impl Default for JlabConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            samples: 2000,
            seed: 0,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Seeds both the random starts and the Monte-Carlo suites.
    pub fn reseed(&mut self, seed: u64) {
        self.initial.seed = seed;
        self.jlab.seed = seed;
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        let n = self.dim();
        ensure!(self.dt > 0.0 && self.dt.is_finite(), "dt must be positive");
        ensure!(
            self.horizon >= MIN_HORIZON,
            "horizon {} is below the minimum of {MIN_HORIZON}",
            self.horizon
        );
        ensure!(self.transient >= 0.0, "transient must be non-negative");
        let steps = (self.tau / self.dt).round();
        ensure!(
            self.tau > 0.0 && steps >= 1.0 && (steps * self.dt - self.tau).abs() <= 1e-9 * self.tau,
            "tau = {} must be a positive multiple of dt = {}",
            self.tau,
            self.dt
        );
        ensure!(
            self.d_e >= 1 && self.d_e < n,
            "d_e = {} outside 1..={}",
            self.d_e,
            n - 1
        );
        ensure!(!self.orders.is_empty(), "orders must not be empty");
        for &p in &self.orders {
            ensure!(
                p >= 2 && p <= n - self.d_e,
                "order p = {p} outside 2..={}",
                n - self.d_e
            );
        }
        let t = &self.tolerances;
        ensure!(
            t.drift_limit > 0.0 && t.splitting_window > 0.0,
            "tolerances must be positive"
        );
        ensure!(
            self.jlab.trials > 0 && self.jlab.samples > 0,
            "jlab trials and samples must be positive"
        );
        let init = &self.initial;
        ensure!(
            !init.points.is_empty() || init.random > 0,
            "no initial conditions"
        );
        for (i, p) in init.points.iter().enumerate() {
            ensure!(p.len() == n, "initial point {i} has dimension {}", p.len());
        }
        if init.random > 0 {
            ensure!(
                init.box_lo.len() == n && init.box_hi.len() == n,
                "box bounds must have dimension {n}"
            );
            ensure!(
                init.box_lo.iter().zip(&init.box_hi).all(|(a, b)| a < b),
                "box_lo must be below box_hi"
            );
        }
        for (i, s) in self.singularity_seeds.iter().enumerate() {
            ensure!(
                s.len() == n,
                "singularity seed {i} has dimension {}",
                s.len()
            );
        }
        Ok(())
    }

    /// Explicit points followed by the seeded random draws.
    pub fn starts(&self) -> Vec<Vector> {
        let init = &self.initial;
        let mut out: Vec<Vector> = init
            .points
            .iter()
            .map(|p| Vector::from_column_slice(p))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
        for _ in 0..init.random {
            let x: Vec<f64> = init
                .box_lo
                .iter()
                .zip(&init.box_hi)
                .map(|(&lo, &hi)| rng.random_range(lo..hi))
                .collect();
            out.push(Vector::from_vec(x));
        }
        out
    }

    pub fn singularity_seeds(&self) -> Vec<Vector> {
        self.singularity_seeds
            .iter()
            .map(|s| Vector::from_column_slice(s))
            .collect()
    }

    pub fn example(name: &str) -> Result<Self> {
        let cfg = match name {
            "lorenz" => RunConfig {
                name: "lorenz".into(),
                field: VectorFieldSpec::lorenz_classic(),
                initial: InitialConditions {
                    points: vec![vec![1.0, 1.0, 20.0]],
                    random: 4,
                    box_lo: vec![-15.0, -20.0, 5.0],
                    box_hi: vec![15.0, 20.0, 45.0],
                    seed: 1,
                },
                horizon: 2000.0,
                dt: 0.05,
                transient: 20.0,
                tau: 0.5,
                d_e: 1,
                orders: vec![2],
                singularity_seeds: vec![
                    vec![0.5, 0.5, 0.5],
                    vec![8.0, 8.0, 27.0],
                    vec![-8.0, -8.0, 27.0],
                ],
                tolerances: Tolerances::default(),
                jlab: JlabConfig::default(),
                output: default_output(),
            },
            "wedge" => RunConfig {
                name: "wedge".into(),
                field: VectorFieldSpec::linear(&diag(&WEDGE_RATES)),
                initial: InitialConditions {
                    points: vec![vec![0.0; 4]],
                    random: 0,
                    box_lo: vec![],
                    box_hi: vec![],
                    seed: 0,
                },
                horizon: 40.0,
                dt: 0.25,
                transient: 0.0,
                tau: 1.0,
                d_e: 1,
                orders: vec![2, 3],
                singularity_seeds: vec![vec![0.0; 4]],
                tolerances: Tolerances::default(),
                jlab: JlabConfig::default(),
                output: default_output(),
            },
            other => bail!("unknown example {other:?}; expected wedge or lorenz"),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Rates of the diagonal linear model behind the `wedge` example.
pub const WEDGE_RATES: [f64; 4] = [-3.0, 2.0, 4.0, 10.0];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_round_trip() {
        for name in ["lorenz", "wedge"] {
            let cfg = RunConfig::example(name).unwrap();
            let text = cfg.emit().unwrap();
            assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn order_above_centre_dimension_is_rejected() {
        let mut cfg = RunConfig::example("lorenz").unwrap();
        cfg.orders = vec![3];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("outside 2..=2"), "{err}");
    }

    #[test]
    fn non_positive_tolerance_is_rejected() {
        let mut cfg = RunConfig::example("wedge").unwrap();
        cfg.tolerances.drift_limit = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn starts_are_seeded() {
        let cfg = RunConfig::example("lorenz").unwrap();
        let (a, b) = (cfg.starts(), cfg.starts());
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.reseed(2);
        assert_ne!(other.starts()[1], a[1]);
    }
}
