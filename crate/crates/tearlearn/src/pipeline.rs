//! End-to-end experiment orchestration: generate → train → repair →
//! evaluate → report, with a manifest tying every run to its
//! configuration hash and seed.
//!
//! Every stage writes deterministic artifacts into the output directory;
//! wall-clock timestamps appear only in `manifest.json`, so rerunning a
//! stage with the same configuration and seed reproduces every other file
//! byte for byte.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::daggnn::GnnArch;
use crate::datagen::{prior_lower_triangular, random_triangular_w, sample_nonlinear_scaled};
use crate::error::{Error, Result};
use crate::graph::{is_acyclic, nonzero_streams};
use crate::io::{
    read_csv, read_json, read_matrix, read_prior, write_csv, write_json, write_matrix,
    write_prior, CheckpointFile, ManifestFile, ScoresFile, TearReportFile, TrainLogFile,
    SCORES_SCHEMA_VERSION,
};
use crate::matrix::WeightMatrix;
use crate::metrics::recovery_metrics;
use crate::postprocess::{preprocess, tear_until_acyclic, truncate_until_acyclic, TearConfig};
use crate::prior::PriorSpec;
use crate::scores::{bge_score, gaussian_bic, BgeHyper};
use crate::sem::{train_linear, Dataset, TrainConfig};

/// Which learner the train stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Linear,
    DagGnn,
}

/// Which prior file the generate stage writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// No constraints anywhere.
    #[default]
    AllUnknown,
    /// Strictly-lower-triangular entries forbidden — encodes knowledge of
    /// a causal ordering compatible with the generator.
    LowerForbidden,
}

/// Synthetic-data parameters for the generate stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub d: usize,
    pub n: usize,
    pub edge_prob: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub noise_scale: f64,
    pub prior_kind: PriorKind,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            d: 5,
            n: 5000,
            edge_prob: 0.5,
            weight_low: 0.5,
            weight_high: 2.0,
            noise_scale: 1.0,
            prior_kind: PriorKind::AllUnknown,
        }
    }
}

/// Complete configuration for the command-line driver. Round-trips
/// losslessly through JSON; unspecified fields take the documented
/// defaults (an empty JSON object is a complete, runnable
/// configuration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Input dataset CSV; defaults to `<output_dir>/data.csv`.
    pub data: Option<PathBuf>,
    /// Prior JSON; defaults to `<output_dir>/prior.json` when present,
    /// otherwise no constraints.
    pub prior: Option<PathBuf>,
    /// Ground-truth matrix JSON; defaults to `<output_dir>/truth.json`
    /// when present, otherwise evaluation skips recovery metrics.
    pub truth: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub model: ModelKind,
    /// Standardize each column to zero mean and unit variance before
    /// training and scoring.
    pub standardize: bool,
    /// Training settings. Unlike the bare trainer default, the pipeline
    /// enables per-entry gradient clipping at 10 out of the box: the
    /// fixed-rate optimizer can otherwise overflow the acyclicity
    /// measure once the penalty weight grows large. Set
    /// `train.grad_clip` to null to reproduce that behavior.
    pub train: TrainConfig,
    pub arch: GnnArch,
    pub tear: TearConfig,
    pub generate: GenerateConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: None,
            prior: None,
            truth: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            model: ModelKind::Linear,
            standardize: true,
            train: TrainConfig {
                grad_clip: Some(10.0),
                ..TrainConfig::default()
            },
            arch: GnnArch::default(),
            tear: TearConfig::default(),
            generate: GenerateConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.tear.validate()?;
        self.arch.validate()?;
        let g = &self.generate;
        if g.d < 2 {
            return Err(Error::InvalidArgument(format!(
                "generate.d must be at least 2, got {}",
                g.d
            )));
        }
        if g.n == 0 {
            return Err(Error::InvalidArgument(
                "generate.n must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&g.edge_prob) {
            return Err(Error::InvalidArgument(format!(
                "generate.edge_prob must lie in [0, 1], got {}",
                g.edge_prob
            )));
        }
        if !(g.weight_low.is_finite()
            && g.weight_high.is_finite()
            && 0.0 < g.weight_low
            && g.weight_low <= g.weight_high)
        {
            return Err(Error::InvalidArgument(format!(
                "generate weight range must satisfy 0 < low <= high, got ({}, {})",
                g.weight_low, g.weight_high
            )));
        }
        if !(g.noise_scale.is_finite() && g.noise_scale >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "generate.noise_scale must be finite and non-negative, got {}",
                g.noise_scale
            )));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidArgument("output_dir must be set".into()));
        }
        Ok(())
    }

    /// Sets the run seed, keeping the training seed in lockstep.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
    }

    pub fn data_path(&self) -> PathBuf {
        self.data
            .clone()
            .unwrap_or_else(|| self.output_dir.join("data.csv"))
    }

    pub fn truth_path(&self) -> Option<PathBuf> {
        match &self.truth {
            Some(p) => Some(p.clone()),
            None => {
                let p = self.output_dir.join("truth.json");
                p.exists().then_some(p)
            }
        }
    }

    pub fn prior_path(&self) -> Option<PathBuf> {
        match &self.prior {
            Some(p) => Some(p.clone()),
            None => {
                let p = self.output_dir.join("prior.json");
                p.exists().then_some(p)
            }
        }
    }

    fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON serialization, lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads and validates the `TEARLEARN_THREADS` cap. Unset means no cap;
/// anything set must parse as a positive integer.
pub fn resolve_threads() -> Result<Option<usize>> {
    match std::env::var("TEARLEARN_THREADS") {
        Err(_) => Ok(None),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(Error::InvalidArgument(format!(
                "TEARLEARN_THREADS must be a positive integer, got '{raw}'"
            ))),
        },
    }
}

fn now_unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn write_manifest(
    cfg: &PipelineConfig,
    command: &str,
    threads: Option<usize>,
    started_unix_ms: u128,
    started: Instant,
) -> Result<()> {
    let manifest = ManifestFile {
        command: command.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        standardized: cfg.standardize,
        threads,
        started_unix_ms,
        wall_time_ms: started.elapsed().as_millis(),
    };
    write_json(&cfg.output_dir.join("manifest.json"), &manifest)
}

/// Generates a synthetic dataset: a random upper-triangular weighted DAG,
/// nonlinear samples from it, and the configured prior. Writes
/// `data.csv`, `truth.json`, and `prior.json` into the output directory.
pub fn run_generate(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let g = &cfg.generate;
    let truth = random_triangular_w(
        g.d,
        g.edge_prob,
        (g.weight_low, g.weight_high),
        cfg.seed,
    )?;
    let data = sample_nonlinear_scaled(&truth, g.n, cfg.seed.wrapping_add(1), g.noise_scale)?;
    let prior = match g.prior_kind {
        PriorKind::AllUnknown => PriorSpec::all_unknown(g.d)?,
        PriorKind::LowerForbidden => prior_lower_triangular(g.d)?,
    };
    write_csv(&cfg.output_dir.join("data.csv"), &data)?;
    write_matrix(&cfg.output_dir.join("truth.json"), truth.w())?;
    write_prior(&cfg.output_dir.join("prior.json"), &prior)?;
    Ok(())
}

fn load_training_data(cfg: &PipelineConfig) -> Result<Dataset> {
    let data = read_csv(&cfg.data_path())?;
    if cfg.standardize {
        data.standardized()
    } else {
        Ok(data)
    }
}

/// Trains the configured model on the dataset and writes `a_best.json`
/// and `train_log.json` (plus `checkpoint.json` for the variational
/// model).
pub fn run_train(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let data = load_training_data(cfg)?;
    match cfg.model {
        ModelKind::Linear => {
            let result = train_linear(&data, &cfg.train)?;
            write_matrix(&cfg.output_dir.join("a_best.json"), &result.a_best)?;
            write_json(
                &cfg.output_dir.join("train_log.json"),
                &TrainLogFile::from_result("linear", &result),
            )?;
        }
        ModelKind::DagGnn => {
            let (result, model) = crate::daggnn::train_daggnn_full(&data, &cfg.train, &cfg.arch)?;
            write_matrix(&cfg.output_dir.join("a_best.json"), &result.a_best)?;
            write_json(
                &cfg.output_dir.join("train_log.json"),
                &TrainLogFile::from_result("daggnn", &result),
            )?;
            write_json(
                &cfg.output_dir.join("checkpoint.json"),
                &CheckpointFile::from_model(&model),
            )?;
        }
    }
    Ok(())
}

fn load_prior(cfg: &PipelineConfig, d: usize) -> Result<PriorSpec> {
    let prior = match cfg.prior_path() {
        Some(p) => read_prior(&p)?,
        None => PriorSpec::all_unknown(d)?,
    };
    if prior.dim() != d {
        return Err(Error::Data(format!(
            "prior dimension {} does not match matrix dimension {d}",
            prior.dim()
        )));
    }
    Ok(prior)
}

fn assert_acyclic(a: &WeightMatrix, context: &str) -> Result<()> {
    if !is_acyclic(&nonzero_streams(a, None), a.dim()) {
        return Err(Error::Precondition(format!(
            "internal: {context} produced a cyclic matrix"
        )));
    }
    Ok(())
}

/// Repairs the trained matrix by exact minimum-cost tearing (after the
/// preprocessing rules) and writes `tear/a_final.json` and
/// `tear/tear_report.json`.
pub fn run_tear(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let a = read_matrix(&cfg.output_dir.join("a_best.json"))?;
    let prior = load_prior(cfg, a.dim())?;
    let pre = preprocess(&a, &prior, cfg.tear.omega)?;
    let report = tear_until_acyclic(&pre, &prior, &cfg.tear)?;
    assert_acyclic(&report.a_final, "tearing")?;
    let dir = cfg.output_dir.join("tear");
    write_matrix(&dir.join("a_final.json"), &report.a_final)?;
    write_json(
        &dir.join("tear_report.json"),
        &TearReportFile::from_report("tear", &report),
    )?;
    Ok(())
}

/// Repairs the trained matrix by threshold escalation and writes
/// `truncate/a_final.json` and `truncate/tear_report.json`.
pub fn run_truncate(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let a = read_matrix(&cfg.output_dir.join("a_best.json"))?;
    let report = truncate_until_acyclic(&a);
    assert_acyclic(&report.a_final, "truncation")?;
    let dir = cfg.output_dir.join("truncate");
    write_matrix(&dir.join("a_final.json"), &report.a_final)?;
    write_json(
        &dir.join("tear_report.json"),
        &TearReportFile::from_report("truncate", &report),
    )?;
    Ok(())
}

fn evaluate_matrix(
    a: &WeightMatrix,
    truth: Option<&WeightMatrix>,
    data: Option<&Dataset>,
) -> Result<ScoresFile> {
    let metrics = match truth {
        Some(t) => Some(recovery_metrics(a, t)?),
        None => None,
    };
    let acyclic = is_acyclic(&nonzero_streams(a, None), a.dim());
    let (bge, bic, ridge) = match data {
        Some(x) if acyclic => {
            let hyper = BgeHyper::defaults_for(a.dim());
            let bge = bge_score(x, a, &hyper)?;
            let bic = gaussian_bic(x, a)?;
            (Some(bge), Some(bic.value), Some(bic.ridge_used))
        }
        _ => (None, None, None),
    };
    Ok(ScoresFile {
        schema_version: SCORES_SCHEMA_VERSION,
        metrics,
        bge,
        gaussian_bic: bic,
        bic_ridge_used: ridge,
    })
}

/// Evaluates repaired matrices (or, lacking any, the trained matrix)
/// against the ground truth and/or the dataset, writing `scores.json`
/// next to each evaluated matrix. Requires at least one of truth or data.
pub fn run_eval(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let truth = match cfg.truth_path() {
        Some(p) => Some(read_matrix(&p)?),
        None => None,
    };
    let data = if cfg.data_path().exists() {
        Some(load_training_data(cfg)?)
    } else {
        None
    };
    if truth.is_none() && data.is_none() {
        return Err(Error::InvalidArgument(
            "evaluation needs a ground-truth matrix, a dataset, or both".into(),
        ));
    }
    let mut evaluated = 0usize;
    for sub in ["tear", "truncate"] {
        let matrix_path = cfg.output_dir.join(sub).join("a_final.json");
        if !matrix_path.exists() {
            continue;
        }
        let a = read_matrix(&matrix_path)?;
        let scores = evaluate_matrix(&a, truth.as_ref(), data.as_ref())?;
        write_json(&cfg.output_dir.join(sub).join("scores.json"), &scores)?;
        evaluated += 1;
    }
    if evaluated == 0 {
        let best_path = cfg.output_dir.join("a_best.json");
        if !best_path.exists() {
            return Err(Error::InvalidArgument(format!(
                "nothing to evaluate: no repaired matrix and no {}",
                best_path.display()
            )));
        }
        let a = read_matrix(&best_path)?;
        let scores = evaluate_matrix(&a, truth.as_ref(), data.as_ref())?;
        write_json(&cfg.output_dir.join("scores.json"), &scores)?;
    }
    Ok(())
}

/// One pipeline command: run a single stage (or all of them) and stamp
/// the manifest.
pub fn run_command(cfg: &PipelineConfig, command: &str, threads: Option<usize>) -> Result<()> {
    let started_unix = now_unix_ms();
    let started = Instant::now();
    match command {
        "generate" => run_generate(cfg)?,
        "train" => run_train(cfg)?,
        "tear" => run_tear(cfg)?,
        "truncate" => run_truncate(cfg)?,
        "eval" => run_eval(cfg)?,
        "pipeline" => {
            if cfg.data.is_none() {
                run_generate(cfg)?;
            }
            run_train(cfg)?;
            run_tear(cfg)?;
            run_truncate(cfg)?;
            run_eval(cfg)?;
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown command '{other}'"
            )));
        }
    }
    write_manifest(cfg, command, threads, started_unix, started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::read_text;
    use tempfile::tempdir;

    fn small_cfg(root: &Path) -> PipelineConfig {
        let mut cfg = PipelineConfig::new();
        cfg.output_dir = root.to_path_buf();
        cfg.generate.d = 4;
        cfg.generate.n = 60;
        cfg.train.epochs = 30;
        cfg.train.max_outer = 6;
        cfg.train.beta_max = 1e4;
        cfg.train.learning_rate = 0.05;
        cfg.train.grad_clip = Some(1.0);
        cfg.apply_seed(7);
        cfg
    }

    #[test]
    fn config_round_trips_losslessly() {
        let mut cfg = PipelineConfig::new();
        cfg.model = ModelKind::DagGnn;
        cfg.generate.prior_kind = PriorKind::LowerForbidden;
        cfg.tear.omega = 0.05;
        cfg.apply_seed(99);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        // An empty JSON object is all defaults.
        let minimal: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(minimal, PipelineConfig::default());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let cfg = PipelineConfig::new();
        assert_eq!(cfg.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.apply_seed(1);
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn generate_is_deterministic_and_creates_directories() {
        let root = tempdir().unwrap();
        let dir_a = root.path().join("missing/nested/a");
        let dir_b = root.path().join("b");
        let mut cfg_a = small_cfg(&dir_a);
        cfg_a.generate.d = 5;
        cfg_a.generate.n = 100;
        let mut cfg_b = cfg_a.clone();
        cfg_b.output_dir = dir_b.clone();
        run_generate(&cfg_a).unwrap();
        run_generate(&cfg_b).unwrap();
        for name in ["data.csv", "truth.json", "prior.json"] {
            let a = read_text(&dir_a.join(name)).unwrap();
            let b = read_text(&dir_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
            assert!(!a.is_empty());
        }
    }

    #[test]
    fn generate_rejects_empty_sample_count() {
        let root = tempdir().unwrap();
        let mut cfg = small_cfg(root.path());
        cfg.generate.n = 0;
        match run_generate(&cfg) {
            Err(e) => assert_eq!(e.exit_code(), 2),
            Ok(()) => panic!("n = 0 must be rejected"),
        }
    }

    #[test]
    fn train_writes_parseable_artifacts_deterministically() {
        let root = tempdir().unwrap();
        let cfg = small_cfg(root.path());
        run_generate(&cfg).unwrap();
        run_train(&cfg).unwrap();
        let first = read_text(&cfg.output_dir.join("a_best.json")).unwrap();
        let a = read_matrix(&cfg.output_dir.join("a_best.json")).unwrap();
        assert_eq!(a.dim(), 4);
        for i in 0..4 {
            assert_eq!(a.get(i, i), 0.0);
        }
        let log: TrainLogFile = read_json(&cfg.output_dir.join("train_log.json")).unwrap();
        assert_eq!(log.model, "linear");
        assert_eq!(log.h_trajectory.len(), log.outer_steps);
        run_train(&cfg).unwrap();
        let second = read_text(&cfg.output_dir.join("a_best.json")).unwrap();
        assert_eq!(first, second, "retraining must be byte-identical");
    }

    #[test]
    fn tear_and_truncate_produce_acyclic_outputs_and_reports() {
        let root = tempdir().unwrap();
        let cfg = small_cfg(root.path());
        // Plant a cyclic trained matrix directly.
        let cyclic = WeightMatrix::from_rows(&[
            vec![0.0, 0.6, 0.0, 0.0],
            vec![0.2, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 0.4],
            vec![0.0, 0.0, 0.1, 0.0],
        ])
        .unwrap();
        write_matrix(&cfg.output_dir.join("a_best.json"), &cyclic).unwrap();
        run_tear(&cfg).unwrap();
        run_truncate(&cfg).unwrap();
        for sub in ["tear", "truncate"] {
            let a = read_matrix(&cfg.output_dir.join(sub).join("a_final.json")).unwrap();
            assert!(is_acyclic(&nonzero_streams(&a, None), a.dim()));
            let report: TearReportFile =
                read_json(&cfg.output_dir.join(sub).join("tear_report.json")).unwrap();
            assert_eq!(report.method, sub);
            assert!(report.rounds >= 1);
        }
        // The tear report carries per-round solver statistics.
        let report: TearReportFile =
            read_json(&cfg.output_dir.join("tear/tear_report.json")).unwrap();
        assert_eq!(report.round_stats.len(), report.rounds);
        assert!(report.round_stats[0].explored_nodes >= 1);
    }

    #[test]
    fn tear_on_acyclic_input_reports_zero_rounds() {
        let root = tempdir().unwrap();
        let cfg = small_cfg(root.path());
        let dag = WeightMatrix::from_rows(&[
            vec![0.0, 0.6, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 0.4],
            vec![0.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        write_matrix(&cfg.output_dir.join("a_best.json"), &dag).unwrap();
        run_tear(&cfg).unwrap();
        let report: TearReportFile =
            read_json(&cfg.output_dir.join("tear/tear_report.json")).unwrap();
        assert_eq!(report.rounds, 0);
        assert!(report.torn_streams.is_empty());
    }

    #[test]
    fn eval_scores_perfect_recovery_at_zero_distance() {
        let root = tempdir().unwrap();
        let cfg = small_cfg(root.path());
        run_generate(&cfg).unwrap();
        // Pretend training recovered the truth exactly.
        let truth = read_matrix(&cfg.output_dir.join("truth.json")).unwrap();
        let dir = cfg.output_dir.join("tear");
        write_matrix(&dir.join("a_final.json"), &truth).unwrap();
        run_eval(&cfg).unwrap();
        let scores: ScoresFile = read_json(&dir.join("scores.json")).unwrap();
        assert_eq!(scores.schema_version, SCORES_SCHEMA_VERSION);
        let m = scores.metrics.expect("truth present, metrics computed");
        assert_eq!(m.shd, 0);
        assert_eq!(m.fdr, 0.0);
        assert!(scores.bge.is_some());
        assert!(scores.gaussian_bic.is_some());
    }

    #[test]
    fn eval_without_truth_or_data_is_a_usage_error() {
        let root = tempdir().unwrap();
        let cfg = small_cfg(root.path());
        let dag = WeightMatrix::zeros(3).unwrap();
        write_matrix(&cfg.output_dir.join("tear/a_final.json"), &dag).unwrap();
        match run_eval(&cfg) {
            Err(e) => assert_eq!(e.exit_code(), 2),
            Ok(()) => panic!("expected a usage error"),
        }
    }

    #[test]
    fn full_pipeline_reruns_byte_identically_except_the_manifest() {
        let root = tempdir().unwrap();
        let cfg = small_cfg(root.path());
        run_command(&cfg, "pipeline", None).unwrap();
        let manifest: ManifestFile = read_json(&cfg.output_dir.join("manifest.json")).unwrap();
        assert_eq!(manifest.command, "pipeline");
        assert_eq!(manifest.config_hash, cfg.hash());
        assert_eq!(manifest.seed, 7);
        let files = [
            "data.csv",
            "truth.json",
            "prior.json",
            "a_best.json",
            "train_log.json",
            "tear/a_final.json",
            "tear/tear_report.json",
            "tear/scores.json",
            "truncate/a_final.json",
            "truncate/tear_report.json",
            "truncate/scores.json",
        ];
        let snapshot: Vec<String> = files
            .iter()
            .map(|f| read_text(&cfg.output_dir.join(f)).unwrap())
            .collect();
        run_command(&cfg, "pipeline", None).unwrap();
        for (f, before) in files.iter().zip(snapshot.iter()) {
            let after = read_text(&cfg.output_dir.join(f)).unwrap();
            assert_eq!(before, &after, "{f} changed across identical reruns");
        }
    }

    #[test]
    fn threads_env_is_validated() {
        // Env manipulation: run serially within this single test.
        unsafe { std::env::remove_var("TEARLEARN_THREADS") };
        assert_eq!(resolve_threads().unwrap(), None);
        unsafe { std::env::set_var("TEARLEARN_THREADS", "4") };
        assert_eq!(resolve_threads().unwrap(), Some(4));
        unsafe { std::env::set_var("TEARLEARN_THREADS", "0") };
        assert!(resolve_threads().is_err());
        unsafe { std::env::set_var("TEARLEARN_THREADS", "lots") };
        assert!(resolve_threads().is_err());
        unsafe { std::env::remove_var("TEARLEARN_THREADS") };
    }
}
