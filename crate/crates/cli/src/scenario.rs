//! Scenario files: a simulation config plus where and how often to run it.
//!
//! A scenario is a JSON object with every `SimConfig` key (all optional,
//! defaults are the reference scenario) and two extra keys:
//!
//! ```json
//! { "snr_db": 30.0, "network": { "node_count": 100 }, "out_dir": "runs/a", "repetitions": 3 }
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rodd::sim::SimConfig;
use serde_json::Value;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFile {
    pub sim: SimConfig,
    pub out_dir: Option<PathBuf>,
    pub repetitions: usize,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).context("scenario is not valid JSON")?;
        let obj = value.as_object_mut().context("scenario must be a JSON object")?;
        let out_dir = match obj.remove("out_dir") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => bail!("out_dir must be a string, got {other}"),
        };
        let repetitions = match obj.remove("repetitions") {
            None => 1,
            Some(v) => v
                .as_u64()
                .filter(|&n| n >= 1)
                .with_context(|| format!("repetitions must be a positive integer, got {v}"))?
                as usize,
        };
        let sim: SimConfig = serde_json::from_value(value).context("invalid scenario")?;
        sim.validate().context("invalid scenario")?;
        Ok(ScenarioFile { sim, out_dir, repetitions })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}

/// `START:STOP:STEP`, inclusive of `STOP` when it falls on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            bail!("expected START:STOP:STEP, got {text:?}");
        };
        let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("{s:?} is not a number"));
        let spec = SweepSpec { start: num(a)?, stop: num(b)?, step: num(c)? };
        if !(spec.step > 0.0) || !spec.step.is_finite() {
            bail!("sweep step must be positive");
        }
        if !(spec.start <= spec.stop) {
            bail!("sweep start must not exceed stop");
        }
        Ok(spec)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}
