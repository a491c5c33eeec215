//! Persisted results of a single solve.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::net::{FlowSeries, TrafficNetwork};
use crate::objectives::{EvalOptions, Evaluator, ObjectiveBounds, ObjectiveBreakdown, Placement};
use crate::params::PlanningParams;
use crate::scenario::Scenario;
use crate::solver::{CEConfig, RunTrace, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub network_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows_path: Option<String>,
    pub scenario: Scenario,
    pub ce: CEConfig,
    /// Parameters after the scenario overrides were applied.
    pub params: PlanningParams,
    pub eval_options: EvalOptions,
    pub placement: Placement,
    pub breakdown: ObjectiveBreakdown,
    pub metrics: MetricsReport,
    /// Scale the breakdown was normalized on.
    pub reference: ObjectiveBounds,
    pub status: SolveStatus,
    pub trace: RunTrace,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

/// `<UTC timestamp>-<8 hex>`; the hash covers `content` and the exact
/// start time.
pub fn make_run_id(started_at: DateTime<Utc>, content: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(content);
    hasher.update(started_at.timestamp_nanos_opt().unwrap_or_default().to_le_bytes());
    let digest = hex::encode(hasher.finalize());
    format!("{}-{}", started_at.format("%Y%m%dT%H%M%S%.3fZ"), &digest[..8])
}

impl RunRecord {
    pub fn file_name(&self) -> String {
        format!("{}.json", self.run_id)
    }

    /// Writes `<dir>/<run_id>.json` through a temporary file in the same
    /// directory, so readers never observe a partial record. Refuses to
    /// overwrite an existing record.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
        let target = dir.join(self.file_name());
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|err| Error::io(dir, err))?;
        serde_json::to_writer_pretty(&mut tmp, self).expect("record serializes");
        tmp.write_all(b"\n").map_err(|err| Error::io(&target, err))?;
        tmp.persist_noclobber(&target)
            .map_err(|err| Error::io(&target, err.error))?;
        Ok(target)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|err| Error::io(path, err))?;
        serde_json::from_str(&text).map_err(|err| Error::parse(path.display().to_string(), err))
    }

    /// Every record in `dir`, oldest first. Files that do not parse as
    /// records are skipped.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let dir = dir.as_ref();
        let entries = match std::fs::read_dir(dir) {
            Ok(entries) => entries,
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(err) => return Err(Error::io(dir, err)),
        };
        let mut records = Vec::new();
        for entry in entries {
            let path = entry.map_err(|err| Error::io(dir, err))?.path();
            if path.extension().is_some_and(|ext| ext == "json") {
                if let Ok(record) = Self::load(&path) {
                    records.push(record);
                }
            }
        }
        records.sort_by(|a, b| a.started_at.cmp(&b.started_at).then(a.run_id.cmp(&b.run_id)));
        Ok(records)
    }

    /// Metrics recomputed from the stored placement; checks that the
    /// network is the one the run was made on.
    pub fn recompute_metrics(
        &self,
        net: &TrafficNetwork,
        series: Option<&FlowSeries>,
    ) -> Result<MetricsReport> {
        if net.fingerprint() != self.network_fingerprint {
            return Err(Error::validation(
                "network",
                format!(
                    "fingerprint {} does not match the run's {}",
                    net.fingerprint(),
                    self.network_fingerprint
                ),
            ));
        }
        let eval = Evaluator::new(net, series, &self.params, self.eval_options)?;
        Ok(MetricsReport::compute(&eval, &self.placement)?.with_gamma(self.breakdown.gamma))
    }
}
