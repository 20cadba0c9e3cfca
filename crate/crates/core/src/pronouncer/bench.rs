//! Set-and-evaluate micro-benchmark.
//!
//! Times how long one full query evaluation takes: writing all bound
//! values into the template's diagram, validating, compiling, and folding
//! back. Registry lookup happens once outside the timed region.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{pronounce_entry, BindingValue, PronounceError, Pronouncer};

/// Wall-clock statistics over `runs` set/evaluate iterations, in
/// milliseconds. `stddev_ms` is the sample standard deviation and is
/// reported as 0 for a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub runs: usize,
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

impl BenchStats {
    /// `runs,mean_ms,stddev_ms` as one CSV row.
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.runs, self.mean_ms, self.stddev_ms)
    }

    pub(crate) fn from_samples(samples_ms: &[f64]) -> Self {
        let runs = samples_ms.len();
        let mean = samples_ms.iter().sum::<f64>() / runs as f64;
        let stddev = if runs < 2 {
            0.0
        } else {
            let var =
                samples_ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
            var.sqrt()
        };
        BenchStats {
            runs,
            mean_ms: mean,
            stddev_ms: stddev,
        }
    }
}

impl Pronouncer {
    /// Time `runs` set/evaluate iterations of a query against a registered
    /// template. `warmup` extra iterations run first and are discarded
    /// (default callers pass 0: every iteration counts).
    pub fn benchmark(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, BindingValue>,
        runs: usize,
        warmup: usize,
    ) -> Result<BenchStats, PronounceError> {
        if runs < 1 {
            return Err(PronounceError::NoRuns);
        }
        let entry = self.entry(template_id)?;
        // Fail fast on a query that cannot pronounce.
        pronounce_entry(&entry, bindings)?;

        for _ in 0..warmup {
            let advice = pronounce_entry(&entry, bindings)?;
            std::hint::black_box(advice);
        }
        let mut samples = Vec::with_capacity(runs);
        for _ in 0..runs {
            let start = Instant::now();
            let advice = pronounce_entry(&entry, bindings)?;
            let elapsed = start.elapsed();
            std::hint::black_box(advice);
            samples.push(elapsed.as_secs_f64() * 1e3);
        }
        Ok(BenchStats::from_samples(&samples))
    }
}
