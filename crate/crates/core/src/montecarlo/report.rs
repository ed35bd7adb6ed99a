//! Experiment reports and their CSV / JSON encodings.
//!
//! CSV layout: `#`-prefixed metadata lines, then the header
//! `model,n,kernel,method,replicates,mean_D,sd_D,spectral_gap_mean,seed`
//! and one line per cell. Reals are written with 17 significant digits so a
//! report read back reproduces every value exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{EdrError, Result};
use crate::estimators::Method;
use crate::kernels::KernelKind;
use crate::simulation::{Model, RNG_NAME};

pub const REPORT_COLUMNS: [&str; 9] = [
    "model",
    "n",
    "kernel",
    "method",
    "replicates",
    "mean_D",
    "sd_D",
    "spectral_gap_mean",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: Model,
    pub n: usize,
    pub kernel: KernelKind,
    pub method: Method,
    /// Replicates that entered the averages.
    pub replicates: usize,
    #[serde(rename = "mean_D")]
    pub mean_d: f64,
    #[serde(rename = "sd_D")]
    pub sd_d: f64,
    pub spectral_gap_mean: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub rng: String,
    pub bandwidth_rule: String,
    pub config: ExperimentConfig,
}

impl ReportMetadata {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
            bandwidth_rule: cfg.estimator.fixed_bandwidth_rule.describe(),
            config: cfg.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

impl ExperimentReport {
    pub fn to_csv(&self) -> Result<String> {
        let config = serde_json::to_string(&self.metadata.config).map_err(|e| EdrError::Format(e.to_string()))?;
        let mut out = String::new();
        let _ = writeln!(out, "# tool_version: {}", self.metadata.tool_version);
        let _ = writeln!(out, "# rng: {}", self.metadata.rng);
        let _ = writeln!(out, "# bandwidth_rule: {}", self.metadata.bandwidth_rule);
        let _ = writeln!(out, "# config: {config}");

        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let fail = |e: csv::Error| EdrError::Format(e.to_string());
        w.write_record(REPORT_COLUMNS).map_err(fail)?;
        for r in &self.rows {
            w.write_record([
                r.model.id().to_string(),
                r.n.to_string(),
                r.kernel.to_string(),
                r.method.to_string(),
                r.replicates.to_string(),
                real(r.mean_d),
                real(r.sd_d),
                real(r.spectral_gap_mean),
                r.seed.to_string(),
            ])
            .map_err(fail)?;
        }
        let body = w.into_inner().map_err(|e| EdrError::Format(e.to_string()))?;
        out.push_str(std::str::from_utf8(&body).map_err(|e| EdrError::Format(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').trim_start().split_once(": ") {
                meta.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| EdrError::Format(format!("missing metadata line '{k}'")))
        };
        let config: ExperimentConfig =
            serde_json::from_str(&get("config")?).map_err(|e| EdrError::Format(format!("config: {e}")))?;
        let metadata = ReportMetadata {
            tool_version: get("tool_version")?,
            rng: get("rng")?,
            bandwidth_rule: get("bandwidth_rule")?,
            config,
        };

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| EdrError::Format(e.to_string()))?.clone();
        if headers.iter().ne(REPORT_COLUMNS) {
            return Err(EdrError::Format(format!("unexpected header: {headers:?}")));
        }
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| EdrError::Format(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or_default();
            let bad = |what: &str| EdrError::Format(format!("row {line}: bad {what}"));
            let model: u8 = field(0).parse().map_err(|_| bad("model"))?;
            rows.push(ReportRow {
                model: Model::from_id(model)?,
                n: field(1).parse().map_err(|_| bad("n"))?,
                kernel: field(2).parse()?,
                method: field(3).parse()?,
                replicates: field(4).parse().map_err(|_| bad("replicates"))?,
                mean_d: field(5).parse().map_err(|_| bad("mean_D"))?,
                sd_d: field(6).parse().map_err(|_| bad("sd_D"))?,
                spectral_gap_mean: field(7).parse().map_err(|_| bad("spectral_gap_mean"))?,
                seed: field(8).parse().map_err(|_| bad("seed"))?,
            });
        }
        Ok(ExperimentReport { metadata, rows })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| EdrError::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| EdrError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::RngSeed;
    use proptest::prelude::*;

    fn report(values: &[(f64, f64, f64)]) -> ExperimentReport {
        let cfg = ExperimentConfig {
            master_seed: RngSeed(123),
            ..Default::default()
        };
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &(m, s, g))| ReportRow {
                model: Model::ALL[i % 3],
                n: 50 + i,
                kernel: KernelKind::ALL[i % 5],
                method: Method::ALL[i % 2],
                replicates: 500,
                mean_d: m,
                sd_d: s,
                spectral_gap_mean: g,
                seed: 123,
            })
            .collect();
        ExperimentReport {
            metadata: ReportMetadata::for_config(&cfg),
            rows,
        }
    }

    #[test]
    fn csv_header_and_metadata() {
        let csv = report(&[(0.5, 0.1, 0.01)]).to_csv().unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "model,n,kernel,method,replicates,mean_D,sd_D,spectral_gap_mean,seed");
        assert_eq!(data.len(), 2);
        assert!(data[1].starts_with("1,50,gaussian,knn,500,5.0000000000000000e-1,"));
        assert!(csv.contains("# rng: ChaCha8Rng"));
    }

    #[test]
    fn rejects_wrong_header() {
        let csv = report(&[(0.5, 0.1, 0.01)]).to_csv().unwrap().replace("mean_D", "mean");
        assert!(ExperimentReport::from_csv(&csv).is_err());
    }

    proptest! {
        #[test]
        fn csv_and_json_round_trip(values in prop::collection::vec((0.0f64..2.0, 0.0f64..1.0, -1e-3f64..1.0), 1..8)) {
            let r = report(&values);
            prop_assert_eq!(&ExperimentReport::from_csv(&r.to_csv().unwrap()).unwrap(), &r);
            prop_assert_eq!(&ExperimentReport::from_json(&r.to_json().unwrap()).unwrap(), &r);
        }
    }
}
