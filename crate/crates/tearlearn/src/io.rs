//! On-disk formats for every artifact the command-line driver reads or
//! writes.
//!
//! Formats are bit-exact and deterministic so that reruns with the same
//! configuration produce byte-identical files and external tools in any
//! language can interoperate:
//!
//! * data: CSV with a header row of variable names, one sample per row,
//!   decimal-point floats in shortest round-trip form;
//! * matrices: JSON `{dim, values}` with row-major values;
//! * priors: JSON `{dim, entries}` with entries `"U"` / `"O"` / `"F"`
//!   row-major;
//! * training logs, checkpoints, tear reports, scores, manifest:
//!   structured JSON mirroring the in-memory types.
//!
//! Every parse error carries the file path and a 1-based line number.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::daggnn::{GnnModel, MlpParams};
use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::metrics::RecoveryMetrics;
use crate::postprocess::{TearReport, TearRoundStat, TornStream};
use crate::prior::{Prior, PriorSpec};
use crate::sem::{Dataset, TrainResult};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `content` to `path`, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    fs::write(path, content).map_err(|e| io_err(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Serializes a value as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!(
        "serialization failed for {}: {e}",
        path.display()
    )))?;
    body.push('\n');
    write_text(path, &body)
}

/// Parses a JSON artifact, attaching the path and line to any error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// A weight matrix on disk: dimension plus row-major values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &WeightMatrix) -> Self {
        Self {
            dim: m.dim(),
            values: m.values().iter().copied().collect(),
        }
    }

    pub fn into_matrix(self) -> Result<WeightMatrix> {
        if self.values.len() != self.dim * self.dim {
            return Err(Error::Data(format!(
                "matrix file claims dim {} but holds {} values",
                self.dim,
                self.values.len()
            )));
        }
        let arr = ndarray::Array2::from_shape_vec((self.dim, self.dim), self.values)
            .map_err(|e| Error::Data(format!("matrix shape error: {e}")))?;
        WeightMatrix::new(arr)
    }
}

pub fn write_matrix(path: &Path, m: &WeightMatrix) -> Result<()> {
    write_json(path, &MatrixFile::from_matrix(m))
}

pub fn read_matrix(path: &Path) -> Result<WeightMatrix> {
    read_json::<MatrixFile>(path)?.into_matrix()
}

/// Edge-level prior knowledge on disk: `"U"` unknown, `"O"` obligatory,
/// `"F"` forbidden, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFile {
    pub dim: usize,
    pub entries: Vec<Prior>,
}

impl PriorFile {
    pub fn from_spec(p: &PriorSpec) -> Self {
        Self {
            dim: p.dim(),
            entries: p.entries().to_vec(),
        }
    }

    pub fn into_spec(self) -> Result<PriorSpec> {
        PriorSpec::from_entries(self.dim, self.entries)
    }
}

pub fn write_prior(path: &Path, p: &PriorSpec) -> Result<()> {
    write_json(path, &PriorFile::from_spec(p))
}

pub fn read_prior(path: &Path) -> Result<PriorSpec> {
    read_json::<PriorFile>(path)?.into_spec()
}

/// Writes a dataset as CSV: header `x0,...,x{d-1}`, one sample per row,
/// floats in shortest round-trip decimal form.
pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let d = data.n_vars();
    let mut out = String::new();
    let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in data.values().rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Reads a CSV dataset. The header row names the variables (any names);
/// every data row must have the same field count, and every cell must
/// parse as a float — violations are reported with their line number.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = read_text(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file: expected a header row".into()))?;
    let d = header.split(',').count();
    if header.trim().is_empty() {
        return Err(parse_err(1, "empty header row".into()));
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != d {
            return Err(parse_err(
                idx + 1,
                format!("expected {d} fields, found {}", cells.len()),
            ));
        }
        for cell in cells {
            let v: f64 = cell.trim().parse().map_err(|_| {
                parse_err(idx + 1, format!("cell '{}' is not a number", cell.trim()))
            })?;
            rows.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(parse_err(1, "no data rows after the header".into()));
    }
    let arr = ndarray::Array2::from_shape_vec((n, d), rows)
        .map_err(|e| Error::Data(format!("csv shape error: {e}")))?;
    Dataset::new(arr)
}

/// Training trajectory and outcome, as written to `train_log.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogFile {
    pub model: String,
    pub loss_best: f64,
    pub final_h: f64,
    pub converged: bool,
    pub outer_steps: usize,
    pub h_trajectory: Vec<f64>,
    pub alpha_trajectory: Vec<f64>,
    pub beta_trajectory: Vec<f64>,
    pub l1_trajectory: Vec<f64>,
}

impl TrainLogFile {
    pub fn from_result(model: &str, r: &TrainResult) -> Self {
        Self {
            model: model.to_string(),
            loss_best: r.loss_best,
            final_h: r.final_h,
            converged: r.converged,
            outer_steps: r.outer_steps,
            h_trajectory: r.h_trajectory.clone(),
            alpha_trajectory: r.alpha_trajectory.clone(),
            beta_trajectory: r.beta_trajectory.clone(),
            l1_trajectory: r.l1_trajectory.clone(),
        }
    }
}

/// Serialized variational model state (`checkpoint.json`): adjacency plus
/// both shared per-variable networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub a: MatrixFile,
    pub encoder: MlpParams,
    pub decoder: MlpParams,
    pub latent_dim: usize,
    pub sample_count: usize,
}

impl CheckpointFile {
    pub fn from_model(m: &GnnModel) -> Self {
        Self {
            a: MatrixFile::from_matrix(&m.a),
            encoder: m.encoder.clone(),
            decoder: m.decoder.clone(),
            latent_dim: m.latent_dim,
            sample_count: m.sample_count,
        }
    }

    pub fn into_model(self) -> Result<GnnModel> {
        let model = GnnModel {
            a: self.a.into_matrix()?,
            encoder: self.encoder,
            decoder: self.decoder,
            latent_dim: self.latent_dim,
            sample_count: self.sample_count,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Repair outcome on disk (`tear_report.json`). The repaired matrix
/// itself lives in its own file; this report carries the removal record
/// and per-round solver statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TearReportFile {
    /// "tear" or "truncate".
    pub method: String,
    pub rounds: usize,
    pub total_torn_weight: f64,
    pub milp_optimal_every_round: bool,
    pub torn_streams: Vec<TornStream>,
    pub round_stats: Vec<TearRoundStat>,
}

impl TearReportFile {
    pub fn from_report(method: &str, r: &TearReport) -> Self {
        Self {
            method: method.to_string(),
            rounds: r.rounds,
            total_torn_weight: r.total_torn_weight,
            milp_optimal_every_round: r.milp_optimal_every_round,
            torn_streams: r.torn_streams.clone(),
            round_stats: r.round_stats.clone(),
        }
    }
}

/// Evaluation output (`scores.json`). `schema_version` pins the layout.
/// Recovery metrics appear only when a ground truth was supplied; the
/// model-fit scores only when data was supplied and the evaluated graph
/// is acyclic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresFile {
    pub schema_version: u32,
    pub metrics: Option<RecoveryMetrics>,
    pub bge: Option<f64>,
    pub gaussian_bic: Option<f64>,
    pub bic_ridge_used: Option<bool>,
}

pub const SCORES_SCHEMA_VERSION: u32 = 1;

/// Run provenance (`manifest.json`): configuration hash, seed, versions,
/// and timing. This is the only artifact carrying wall-clock data, so all
/// other outputs are byte-identical across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub crate_version: String,
    pub standardized: bool,
    pub threads: Option<usize>,
    pub started_unix_ms: u128,
    pub wall_time_ms: u128,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use tempfile::tempdir;

    #[test]
    fn matrix_round_trips_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = WeightMatrix::from_rows(&[
            vec![0.0, 0.1 + 0.2, -1e-17],
            vec![std::f64::consts::PI, 0.0, 2.5],
            vec![0.0, -0.75, 0.0],
        ])
        .unwrap();
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        for (a, b) in m.values().iter().zip(back.values().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // Writing twice yields identical bytes.
        let first = read_text(&path).unwrap();
        write_matrix(&path, &m).unwrap();
        assert_eq!(first, read_text(&path).unwrap());
    }

    #[test]
    fn matrix_file_rejects_bad_shapes() {
        let f = MatrixFile {
            dim: 3,
            values: vec![0.0; 8],
        };
        assert!(f.into_matrix().is_err());
        let nonzero_diag = MatrixFile {
            dim: 2,
            values: vec![1.0, 0.0, 0.0, 0.0],
        };
        assert!(nonzero_diag.into_matrix().is_err());
    }

    #[test]
    fn prior_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("prior.json");
        let mut p = PriorSpec::all_unknown(3).unwrap();
        p.set(0, 1, Prior::Obligatory).unwrap();
        p.set(2, 0, Prior::Forbidden).unwrap();
        write_prior(&path, &p).unwrap();
        let back = read_prior(&path).unwrap();
        assert_eq!(p, back);
        let text = read_text(&path).unwrap();
        assert!(text.contains("\"O\"") && text.contains("\"F\"") && text.contains("\"U\""));
    }

    #[test]
    fn csv_round_trips_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let data = Dataset::new(array![
            [1.0, -0.5, 0.1 + 0.2],
            [1e-300, 2e16, -3.25],
            [0.0, 1.5e-8, 7.0],
        ])
        .unwrap();
        write_csv(&path, &data).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.n_samples(), 3);
        assert_eq!(back.n_vars(), 3);
        for (a, b) in data.values().iter().zip(back.values().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let text = read_text(&path).unwrap();
        assert!(text.starts_with("x0,x1,x2\n"));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        write_text(&path, "x0,x1\n1.0,2.0\n3.0\n").unwrap();
        match read_csv(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 2 fields"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        write_text(&path, "x0,x1\n1.0,abc\n").unwrap();
        match read_csv(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("'abc'"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        write_text(&path, "x0,x1\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn checkpoint_round_trips_a_model() {
        use crate::daggnn::{init_model, GnnArch};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let arch = GnnArch {
            latent_dim: 2,
            hidden: 5,
            sample_count: 1,
        };
        let model = init_model(3, &arch, 0.1, &mut rng);
        let dir = tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        write_json(&path, &CheckpointFile::from_model(&model)).unwrap();
        let back: CheckpointFile = read_json(&path).unwrap();
        let restored = back.into_model().unwrap();
        assert_eq!(model, restored);
    }

    #[test]
    fn json_parse_errors_carry_position() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("broken.json");
        write_text(&path, "{\n  \"dim\": 2,\n  values: []\n}\n").unwrap();
        match read_json::<MatrixFile>(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn scores_file_serializes_optional_sections() {
        let f = ScoresFile {
            schema_version: SCORES_SCHEMA_VERSION,
            metrics: None,
            bge: Some(-120.5),
            gaussian_bic: Some(-130.25),
            bic_ridge_used: Some(false),
        };
        let text = serde_json::to_string_pretty(&f).unwrap();
        let back: ScoresFile = serde_json::from_str(&text).unwrap();
        assert_eq!(f, back);
        assert!(text.contains("\"schema_version\": 1"));
    }
}
