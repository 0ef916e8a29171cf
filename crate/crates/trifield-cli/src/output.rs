//! Artifact and manifest emission. CSV values use full decimal precision
//! (17 significant digits) so that reruns can be byte-compared.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use trifield::covering::{CoverId, CoverScales, SurfaceExcessReport, SurfaceMeanReport, SurrogateScale};

/// Appends one CSV row of field values.
pub fn push_row(csv: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            csv.push(',');
        }
        let _ = write!(csv, "{v:.16e}");
    }
    csv.push('\n');
}

/// Writes the primary artifact to `out` (when given) together with
/// `<out>.manifest.json`; without `out` nothing is persisted.
pub fn emit(out: Option<&Path>, cfg: &RunConfig, artifact: &str) -> Result<(), String> {
    let Some(path) = out else { return Ok(()) };
    std::fs::write(path, artifact).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    let manifest = json!({
        "config": cfg,
        "content_hash": cfg.content_hash(),
    });
    let manifest_path = manifest_path(path);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text)
        .map_err(|e| format!("cannot write {}: {e}", manifest_path.display()))?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".manifest.json");
    std::path::PathBuf::from(os)
}

/// Census keyed by a short content hash of each identifier (offset plus
/// quantized boundary values), sorted for deterministic output.
pub fn hash_census(census: &HashMap<CoverId, usize>) -> BTreeMap<String, usize> {
    census
        .iter()
        .map(|(id, &count)| {
            let mut hasher = Sha256::new();
            hasher.update(id.offset.v1.to_le_bytes());
            hasher.update(id.offset.v2.to_le_bytes());
            for q in &id.quantized {
                hasher.update(q.to_le_bytes());
            }
            let digest = hasher.finalize();
            let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
            (hex, count)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn cover_report_json(
    cfg: &RunConfig,
    scales: &CoverScales,
    surrogate: &SurrogateScale,
    mean_reports: &[SurfaceMeanReport],
    excess_reports: &[SurfaceExcessReport],
    census: &BTreeMap<String, usize>,
    log2_count: f64,
    log2_bound: f64,
) -> String {
    let mean_json: Vec<_> = mean_reports
        .iter()
        .map(|r| {
            json!({
                "lhs_avg": r.lhs_avg,
                "bound": r.bound,
                "holds": r.holds,
                "applicable": r.applicable,
            })
        })
        .collect();
    let excess_json: Vec<_> = excess_reports
        .iter()
        .map(|r| {
            json!({
                "avg_plus": r.avg_plus,
                "bound": r.bound,
                "holds": r.holds,
                "applicable": r.applicable,
            })
        })
        .collect();
    let report = json!({
        "scales": {
            "n": scales.n,
            "eps1": scales.eps1,
            "k": scales.k,
            "n1": scales.n1,
            "n2": scales.n2,
        },
        "offset_strategy": cfg.offset_strategy,
        "eps2": surrogate.eps2,
        "slack_raw": [cfg.s0, cfg.s1, cfg.s2],
        "slack_scaled": surrogate.slack.as_array(),
        "weights": surrogate.facet.as_array(),
        "block_log_volume": surrogate.block_log_volume,
        "mean_reports": mean_json,
        "excess_reports": excess_json,
        "census": {
            "distinct": census.len(),
            "counts_by_id_hash": census,
            "log2_count": log2_count,
            "log2_bound": log2_bound,
            "within_bound": log2_count <= log2_bound,
        },
    });
    serde_json::to_string_pretty(&report).expect("report serializes")
}
