//! Orbit caches: one CSV per orbit, with `#` metadata lines ahead of the table.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};

use sechyp::flow::{OrbitSegment, VectorFieldSpec};
use sechyp::{Matrix, Vector};

const MAGIC: &str = "# sechyp orbit cache v1";
const COLUMNS: &str = "# columns: t = sample time; x_i = state; \
phi_i_j = tangent map from the previous sample, identity on the first row; \
log_scale_i = cumulative log|R_ii| of the QR renormalisation; \
trace_integral = integral of tr DX since the first sample";

/// What the cached orbit was computed from. A cache is reused only on an exact match.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheKey {
    pub field: VectorFieldSpec,
    pub start: Vec<f64>,
    pub transient: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl CacheKey {
    fn lines(&self) -> Result<Vec<String>> {
        Ok(vec![
            MAGIC.to_string(),
            format!("# field: {}", serde_json::to_string(&self.field)?),
            format!("# start: {}", serde_json::to_string(&self.start)?),
            format!("# transient: {:?}", self.transient),
            format!("# horizon: {:?}", self.horizon),
            format!("# dt: {:?}", self.dt),
            COLUMNS.to_string(),
        ])
    }
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_orbit(path: &Path, key: &CacheKey, orbit: &OrbitSegment) -> Result<()> {
    let n = orbit.dim();
    let mut out = key.lines()?.join("\n");
    out.push('\n');
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    for i in 0..n {
        header.extend((0..n).map(|j| format!("phi_{i}_{j}")));
    }
    header.extend((0..n).map(|i| format!("log_scale_{i}")));
    header.push("trace_integral".into());
    w.write_record(&header)?;
    let identity = Matrix::identity(n, n);
    for k in 0..orbit.times.len() {
        let phi = if k == 0 {
            &identity
        } else {
            &orbit.factors[k - 1]
        };
        let mut row = vec![fmt(orbit.times[k])];
        row.extend(orbit.states[k].iter().map(|&v| fmt(v)));
        for i in 0..n {
            row.extend((0..n).map(|j| fmt(phi[(i, j)])));
        }
        row.extend(orbit.renorm_log[k].iter().map(|&v| fmt(v)));
        row.push(fmt(orbit.trace_integral[k]));
        w.write_record(&row)?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Loads a cache written for `key`; `None` when the file is absent or stale.
pub fn read_orbit(path: &Path, key: &CacheKey) -> Result<Option<OrbitSegment>> {
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(None);
    };
    let expected = key.lines()?;
    let found: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    if found != expected {
        return Ok(None);
    }
    let n = key.field.dim();
    let width = 1 + n + n * n + n + 1;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    ensure!(
        reader.headers()?.len() == width,
        "{}: expected {width} columns",
        path.display()
    );
    let mut orbit = OrbitSegment {
        field: key.field.clone(),
        dt: key.dt,
        times: Vec::new(),
        states: Vec::new(),
        factors: Vec::new(),
        renorm_log: Vec::new(),
        trace_integral: Vec::new(),
    };
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let v: Vec<f64> = record
            .iter()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}: row {k}", path.display()))?;
        ensure!(v.len() == width, "{}: row {k} is short", path.display());
        orbit.times.push(v[0]);
        orbit.states.push(Vector::from_column_slice(&v[1..1 + n]));
        if k > 0 {
            orbit
                .factors
                .push(Matrix::from_row_slice(n, n, &v[1 + n..1 + n + n * n]));
        }
        orbit
            .renorm_log
            .push(v[1 + n + n * n..1 + 2 * n + n * n].to_vec());
        orbit.trace_integral.push(v[width - 1]);
    }
    if orbit.times.len() < 2 {
        bail!("{}: fewer than two samples", path.display());
    }
    Ok(Some(orbit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sechyp::flow::integrate;

    #[test]
    fn orbit_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("orbit.csv");
        let field = VectorFieldSpec::lorenz_classic();
        let start = vec![1.0, 2.0, 20.0];
        let orbit = integrate(&field, &Vector::from_column_slice(&start), 2.0, 0.1).unwrap();
        let key = CacheKey {
            field,
            start,
            transient: 0.0,
            horizon: 2.0,
            dt: 0.1,
        };
        write_orbit(&path, &key, &orbit).unwrap();
        let back = read_orbit(&path, &key).unwrap().unwrap();
        assert_eq!(back.times, orbit.times);
        assert_eq!(back.states, orbit.states);
        assert_eq!(back.factors, orbit.factors);
        assert_eq!(back.renorm_log, orbit.renorm_log);
        assert_eq!(back.trace_integral, orbit.trace_integral);

        let stale = CacheKey { dt: 0.05, ..key };
        assert!(read_orbit(&path, &stale).unwrap().is_none());
    }
}
