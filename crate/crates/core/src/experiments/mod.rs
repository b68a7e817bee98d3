//! Scripted measurements: quasi-orthogonality, kernels, the nested dictionary
//! demo, diagonality versus commutativity, tree decoding and capacity.
//!
//! Every trial draws from its own stream, `rng::derived(seed, key)`, keyed by
//! experiment, point and trial index. Results are therefore independent of
//! thread count and scheduling, and reruns reproduce the CSV byte for byte.

mod capacity;
mod commutativity;
mod kernel;
mod quasi;
pub mod stats;
mod trees;

pub use capacity::{exp_capacity, memorized, CapacityConfig, CapacityRow, CapacityStats, ProbeRow};
pub use commutativity::{exp_diagonality_commutativity, CommutativityConfig, CommutativityRow, TargetPairing};
pub use kernel::{exp_kernel, KernelConfig, KernelRow};
pub use quasi::{exp_quasi_orthogonality, histogram, Histogram, QuasiConfig, QuasiRow};
pub use trees::{curve_means, exp_nested_demo, exp_tree_accuracy, NestedDemoConfig, NestedDemoRow, TreeAccuracyConfig, TreeRow};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GhrrError, Result};

/// Prefix of the config echo line at the top of every CSV file.
pub const CONFIG_PREFIX: &str = "# config=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = GhrrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            other => Err(GhrrError::InvalidConfig(format!("unknown output format `{other}`"))),
        }
    }
}

/// Output of one experiment run: the config echo, one row per trial-point and
/// aggregated statistics. Contains nothing time-dependent.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord<R> {
    pub experiment: String,
    pub config: Value,
    pub rows: Vec<R>,
    pub summary: Value,
}

impl<R: Serialize> ExperimentRecord<R> {
    pub fn new<C: Serialize>(experiment: &str, config: &C, rows: Vec<R>, summary: Value) -> Result<Self> {
        Ok(Self {
            experiment: experiment.to_string(),
            config: serde_json::to_value(config)?,
            rows,
            summary,
        })
    }

    /// Replaces the config echo, e.g. with the full command-line config.
    pub fn with_config<C: Serialize>(mut self, config: &C) -> Result<Self> {
        self.config = serde_json::to_value(config)?;
        Ok(self)
    }

    /// `# config=<json>` followed by a header row and one line per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CONFIG_PREFIX}{}", serde_json::to_string(&self.config)?)?;
        let mut csv = csv::Writer::from_writer(w);
        for row in &self.rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| GhrrError::Format(e.to_string()))
    }

    /// `{experiment, config, summary}`.
    pub fn summary_json(&self) -> Value {
        serde_json::json!({
            "experiment": self.experiment,
            "config": self.config,
            "summary": self.summary,
        })
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.summary_json())?;
        writeln!(w)?;
        Ok(())
    }

    /// Writes `<experiment>.csv` and/or `summary.json` into `dir`, creating
    /// it if needed. Returns the written paths.
    pub fn write_outputs(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
            let path = dir.join(format!("{}.csv", self.experiment));
            self.write_csv(std::io::BufWriter::new(fs::File::create(&path)?))?;
            written.push(path);
        }
        if matches!(format, OutputFormat::Json | OutputFormat::Both) {
            let path = dir.join("summary.json");
            self.write_json(std::io::BufWriter::new(fs::File::create(&path)?))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Reads back the config echo from the first line of a CSV file.
pub fn read_config_echo(csv_text: &str) -> Result<Value> {
    let line = csv_text.lines().next().unwrap_or_default();
    let json = line
        .strip_prefix(CONFIG_PREFIX)
        .ok_or_else(|| GhrrError::Format("CSV does not start with a config echo".into()))?;
    Ok(serde_json::from_str(json)?)
}

/// `D` for a total dimension `D m^2`. Rounds to the nearest integer unless
/// `strict`, in which case an indivisible total is an error.
pub fn resolve_d(total_dim: usize, m: usize, strict: bool) -> Result<usize> {
    if m == 0 || total_dim == 0 {
        return Err(GhrrError::InvalidDimension("total dimension and m must be >= 1".into()));
    }
    let mm = m * m;
    if strict && total_dim % mm != 0 {
        return Err(GhrrError::InvalidDimension(format!(
            "total dimension {total_dim} is not divisible by m^2 = {mm}"
        )));
    }
    let d = (total_dim as f64 / mm as f64).round() as usize;
    Ok(d.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: usize,
        b: f64,
        c: Option<f64>,
    }

    #[test]
    fn csv_has_config_echo_and_header() {
        let rec = ExperimentRecord::new(
            "demo",
            &serde_json::json!({"seed": 3, "dims": [1, 2]}),
            vec![Row { a: 1, b: 0.5, c: None }, Row { a: 2, b: -1.25, c: Some(2.0) }],
            serde_json::json!({}),
        )
        .unwrap();
        let text = rec.to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"# config={"dims":[1,2],"seed":3}"#);
        assert_eq!(lines[1], "a,b,c");
        assert_eq!(lines[2], "1,0.5,");
        assert_eq!(lines[3], "2,-1.25,2.0");
        assert_eq!(read_config_echo(&text).unwrap()["seed"], 3);
    }

    #[test]
    fn outputs_land_in_the_directory() {
        let dir = std::env::temp_dir().join(format!("ghrr-exp-test-{}", std::process::id()));
        let rec = ExperimentRecord::new("x", &1, vec![Row { a: 0, b: 0.0, c: None }], serde_json::json!({"k": 1}))
            .unwrap();
        let paths = rec.write_outputs(&dir, OutputFormat::Both).unwrap();
        assert_eq!(paths.len(), 2);
        let summary: Value = serde_json::from_str(&fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(summary["summary"]["k"], 1);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn dimension_resolution() {
        assert_eq!(resolve_d(600, 1, true).unwrap(), 600);
        assert_eq!(resolve_d(600, 2, true).unwrap(), 150);
        assert!(resolve_d(600, 3, true).is_err());
        assert_eq!(resolve_d(600, 3, false).unwrap(), 67);
        assert_eq!(resolve_d(150, 4, false).unwrap(), 9);
        assert!(resolve_d(600, 0, false).is_err());
    }
}
