//! Batches of independent scenarios.
//!
//! Each scenario is single-threaded; a batch may spread scenarios over a
//! thread pool. Results always come back in input order, so a sweep's CSV
//! does not depend on which run finished first.

use std::str::FromStr;

use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::sim::{report_row, run_scenario, SimError, Variant, REPORT_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    NodeCount,
    PauseTime,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::NodeCount => "nodes",
            SweepVar::PauseTime => "pause",
        }
    }
}

impl FromStr for SweepVar {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nodes" | "node_count" => Ok(SweepVar::NodeCount),
            "pause" | "pause_time" => Ok(SweepVar::PauseTime),
            _ => Err(SweepError::Spec(format!("unknown sweep variable `{s}`"))),
        }
    }
}

impl FromStr for Variant {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dsdv" => Ok(Variant::Dsdv),
            "dbrt" | "dsdv+dbrt" => Ok(Variant::Dbrt),
            _ => Err(SweepError::Spec(format!("unknown variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    /// Node counts used when none are given.
    pub const DEFAULT_NODE_COUNTS: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];
    pub const DEFAULT_PAUSE_TIMES: [f64; 4] = [10.0, 30.0, 60.0, 90.0];
    pub const DEFAULT_SEEDS: u64 = 5;

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() || self.variants.is_empty() || self.seeds.is_empty() {
            return Err(SweepError::Spec(
                "values, variants and seeds must all be nonempty".to_string(),
            ));
        }
        if self.variable == SweepVar::NodeCount {
            if let Some(v) = self.values.iter().find(|v| v.fract() != 0.0 || **v < 2.0) {
                return Err(SweepError::Spec(format!("node count {v} is not an integer >= 2")));
            }
        }
        Ok(())
    }

    /// One config per (value, variant, seed), in that nesting order.
    pub fn points(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = Vec::with_capacity(self.values.len() * self.variants.len() * self.seeds.len());
        for &value in &self.values {
            for &variant in &self.variants {
                for &seed in &self.seeds {
                    let mut cfg = base.clone();
                    match self.variable {
                        SweepVar::NodeCount => cfg.node_count = value as usize,
                        SweepVar::PauseTime => cfg.mobility.pause_time = value,
                    }
                    cfg.dbrt.enabled = variant == Variant::Dbrt;
                    cfg.seed = seed;
                    out.push(cfg);
                }
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("scenario {index} ({variable}={value}, {variant}, seed {seed}): {source}")]
    Scenario {
        index: usize,
        variable: &'static str,
        value: f64,
        variant: &'static str,
        seed: u64,
        source: SimError,
    },
    #[error("writing sweep table: {0}")]
    Csv(#[from] csv::Error),
}

/// How a batch spreads over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Applies `f` to every item, preserving order.
pub fn run_batch<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
    }
}

/// One sweep table row: the swept value plus the report columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub fields: Vec<String>,
}

pub fn sweep(spec: &SweepSpec, base: &ScenarioConfig, exec: Execution) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let points = spec.points(base);
    let results = run_batch(&points, exec, |cfg| run_scenario(cfg).map(|out| report_row(&out)));
    let per_value = spec.variants.len() * spec.seeds.len();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let value = spec.values[index / per_value];
            r.map(|fields| SweepRow { value, fields }).map_err(|source| {
                let cfg = &points[index];
                SweepError::Scenario {
                    index,
                    variable: spec.variable.as_str(),
                    value,
                    variant: Variant::of(cfg).as_str(),
                    seed: cfg.seed,
                    source,
                }
            })
        })
        .collect()
}

/// Writes the sweep table: the swept variable first, then the report columns.
pub fn write_sweep_csv<W: std::io::Write>(spec: &SweepSpec, rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![spec.variable.as_str()];
    header.extend_from_slice(REPORT_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.value.to_string()];
        rec.extend(r.fields.iter().cloned());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Median of a sample; `None` when empty. NaNs sort last.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}
