//! Experiment orchestration: ingest, standardize, fuse, classify, evaluate,
//! persist. Also parameter sweeps and MAPPER graph export.

mod config;
mod io;

pub use config::{
    parse_list, Algorithm, Classifier, ExperimentConfig, SweepConfig, SweepValue, DEFAULT_SWEEP_CAP,
};
pub use io::{emit, format_predictions, format_source, ingest, parse_predictions, parse_source, write_atomic};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::alignment::{align, hconcat, lpp_fit, LppModel, ProjectionSet, Standardizer, TopologyMode};
use crate::data::{DataSource, HeldOutLabels, LabeledStack, UNLABELED};
use crate::error::{Error, Result, StageExt};
use crate::eval::{evaluate, linear_classify, one_nn_classify, EvalReport, RunMetadata};
use crate::mapper::MapperGraph;
use crate::numkit::Matrix;
use crate::synth::{select_unlabeled, TwoViewData};

/// Training sources plus test features, with the test labels sealed away.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    /// Co-registered training sources; label 0 marks unlabeled rows.
    pub train: Vec<DataSource>,
    /// Co-registered test features, one matrix per source.
    pub test: Vec<Matrix>,
    pub test_labels: HeldOutLabels,
}

/// Per-instance label shared by co-registered sources.
fn merge_labels(sources: &[DataSource], what: &str) -> Result<Vec<u32>> {
    let n = sources[0].instances();
    if sources.iter().any(|s| s.instances() != n) {
        return Err(Error::validation(format!("{what} sources have different instance counts")));
    }
    if sources.iter().all(|s| s.labels.is_none()) {
        return Err(Error::validation(format!("{what} data carries no labels")));
    }
    let mut out = vec![UNLABELED; n];
    for s in sources {
        for (p, slot) in out.iter_mut().enumerate() {
            let l = s.label(p);
            if l != UNLABELED {
                if *slot != UNLABELED && *slot != l {
                    return Err(Error::validation(format!("{what} instance {p} has labels {slot} and {l}")));
                }
                *slot = l;
            }
        }
    }
    Ok(out)
}

impl ExperimentData {
    pub fn new(train: Vec<DataSource>, test: Vec<DataSource>) -> Result<Self> {
        if train.is_empty() || train.len() != test.len() {
            return Err(Error::validation("need matching train and test sources"));
        }
        for (i, (a, b)) in train.iter().zip(&test).enumerate() {
            if a.dims() != b.dims() {
                return Err(Error::dimension(format!(
                    "source {i}: train has {} features, test has {}",
                    a.dims(),
                    b.dims()
                )));
            }
        }
        let train_labels = merge_labels(&train, "training")?;
        let test_labels = merge_labels(&test, "test")?;
        let train = train
            .into_iter()
            .map(|s| DataSource::new(s.features, Some(train_labels.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            train,
            test: test.into_iter().map(|s| s.features).collect(),
            test_labels: HeldOutLabels::new(test_labels),
        })
    }

    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let read = |paths: &[PathBuf]| paths.iter().map(|p| ingest(p)).collect::<Result<Vec<_>>>();
        Self::new(read(&cfg.train)?, read(&cfg.test)?)
    }

    pub fn from_two_view(data: &TwoViewData) -> Result<Self> {
        let labels: Vec<u32> = data
            .train
            .iter()
            .enumerate()
            .map(|(i, &p)| if data.labeled[i] { data.labels[p] } else { UNLABELED })
            .collect();
        let train = data
            .views
            .iter()
            .map(|v| DataSource::new(v.select_rows(data.train.iter()), Some(labels.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            train,
            test: data.test_views(),
            test_labels: data.test_labels(),
        })
    }

    pub fn test_len(&self) -> usize {
        self.test[0].nrows()
    }

    fn train_labels(&self) -> &[u32] {
        self.train[0].labels.as_deref().expect("training labels are merged on construction")
    }
}

/// Classifier-ready features and the fitted models behind them.
#[derive(Debug, Clone)]
pub struct Fusion {
    pub train: Matrix,
    pub test: Matrix,
    pub standardizers: Vec<Standardizer>,
    pub projections: Option<ProjectionSet>,
    pub lpp: Option<LppModel>,
    pub mappers: Vec<MapperGraph>,
    /// Test positions used as unlabeled training instances.
    pub unlabeled: Vec<usize>,
}

fn selected_sources(algorithm: Algorithm, k: usize) -> Vec<usize> {
    match algorithm {
        Algorithm::OptOnly => vec![0],
        Algorithm::PolOnly => vec![1],
        _ => (0..k).collect(),
    }
}

/// Learns the fused representation. Sees training labels and test features
/// only; test labels are not an input.
pub fn fuse(cfg: &ExperimentConfig, train: &[DataSource], test: &[Matrix]) -> Result<Fusion> {
    cfg.validate_params()?;
    if train.is_empty() || train.len() != test.len() {
        return Err(Error::validation(format!(
            "need one train and one test matrix per source, got {} and {}",
            train.len(),
            test.len()
        )));
    }
    let seed = cfg.seed()?;
    let n_test = test.first().map_or(0, Matrix::nrows);
    let unlabeled = select_unlabeled(n_test, cfg.unlabeled, seed).stage("select")?;
    let sources = selected_sources(cfg.algorithm, train.len());
    if let Some(&i) = sources.iter().find(|&&i| i >= train.len()) {
        return Err(Error::validation(format!("{} needs source {i}", cfg.algorithm)));
    }

    let mut standardizers = Vec::new();
    let (mut std_train, mut std_test, mut stack) = (Vec::new(), Vec::new(), Vec::new());
    let stack_labels: Vec<u32> = train[0]
        .labels
        .clone()
        .unwrap_or_else(|| vec![UNLABELED; train[0].instances()])
        .into_iter()
        .chain(unlabeled.iter().map(|_| UNLABELED))
        .collect();
    for &i in &sources {
        let pool = test[i].select_rows(unlabeled.iter());
        let mut fit_rows = Matrix::zeros(train[i].instances() + pool.nrows(), train[i].dims());
        fit_rows.rows_mut(0, train[i].instances()).copy_from(&train[i].features);
        fit_rows.rows_mut(train[i].instances(), pool.nrows()).copy_from(&pool);
        let s = Standardizer::fit(&fit_rows).stage("standardize")?;
        std_train.push(s.transform(&train[i].features)?);
        std_test.push(s.transform(&test[i])?);
        stack.push(DataSource::new(s.transform(&fit_rows)?, Some(stack_labels.clone()))?);
        standardizers.push(s);
    }
    let stack = LabeledStack::new(stack)?;

    let mut fusion = Fusion {
        train: Matrix::zeros(0, 0),
        test: Matrix::zeros(0, 0),
        standardizers,
        projections: None,
        lpp: None,
        mappers: vec![],
        unlabeled,
    };
    match cfg.algorithm {
        Algorithm::OptOnly | Algorithm::PolOnly | Algorithm::Concat => {
            fusion.train = hconcat(&std_train)?;
            fusion.test = hconcat(&std_test)?;
        }
        Algorithm::Lpp | Algorithm::LppSe => {
            let model = lpp_fit(&stack, cfg.k, cfg.dn, cfg.algorithm == Algorithm::LppSe).stage("solve")?;
            fusion.train = model.apply(&std_train)?;
            fusion.test = model.apply(&std_test)?;
            fusion.lpp = Some(model);
        }
        Algorithm::Ssma | Algorithm::Mima => {
            let mode = if cfg.algorithm == Algorithm::Ssma {
                TopologyMode::Knn { k: cfg.k }
            } else {
                TopologyMode::Mapper {
                    filter: cfg.filter.clone(),
                    cover: cfg.cover()?,
                    k_max: cfg.k_max,
                }
            };
            let (proj, _, mappers) = align(&stack, &mode, cfg.mu, cfg.dn, seed).stage("align")?;
            let latent = |xs: &[Matrix]| -> Result<Matrix> {
                let blocks = xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| proj.apply(i, x))
                    .collect::<Result<Vec<_>>>()?;
                hconcat(&blocks)
            };
            fusion.train = latent(&std_train)?;
            fusion.test = latent(&std_test)?;
            fusion.projections = Some(proj);
            fusion.mappers = mappers;
        }
    }
    Ok(fusion)
}

/// Trains on labeled rows of the fused training features and labels the
/// fused test features.
pub fn classify(cfg: &ExperimentConfig, fusion: &Fusion, train_labels: &[u32]) -> Result<Vec<u32>> {
    let rows: Vec<usize> = (0..train_labels.len()).filter(|&p| train_labels[p] != UNLABELED).collect();
    if rows.is_empty() {
        return Err(Error::validation("no labeled training instances"));
    }
    let x = fusion.train.select_rows(rows.iter());
    let y: Vec<u32> = rows.iter().map(|&p| train_labels[p]).collect();
    match cfg.classifier {
        Classifier::OneNn => one_nn_classify(&x, &y, &fusion.test),
        Classifier::Linear => linear_classify(&x, &y, &fusion.test, cfg.ridge),
    }
}

pub fn metadata(cfg: &ExperimentConfig) -> RunMetadata {
    let a = cfg.algorithm;
    RunMetadata {
        algorithm: a.name().into(),
        mu: a.uses_mu().then_some(cfg.mu),
        dn: a.uses_dn().then_some(cfg.dn),
        bins: a.uses_cover().then_some(cfg.bins),
        overlap: a.uses_cover().then_some(cfg.overlap),
        k: a.uses_k().then_some(cfg.k),
        seed: cfg.seed,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvalReport,
    pub predictions: Vec<u32>,
    pub fusion: Fusion,
    /// Artifact directory when the config names an output root.
    pub artifacts: Option<PathBuf>,
}

/// Fuse, classify, then open the test labels and score.
pub fn run_with_data(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RunOutput> {
    let fusion = fuse(cfg, &data.train, &data.test)?;
    let train_labels = data.train_labels();
    let predictions = classify(cfg, &fusion, train_labels).stage("classify")?;
    let truth = data.test_labels.reveal();
    let classes = train_labels
        .iter()
        .chain(truth)
        .chain(&predictions)
        .copied()
        .max()
        .unwrap_or(1) as usize;
    let report = evaluate(truth, &predictions, classes).stage("evaluate")?.with_meta(metadata(cfg));
    let mut out = RunOutput {
        report,
        predictions,
        fusion,
        artifacts: None,
    };
    if let Some(root) = &cfg.output {
        out.artifacts = Some(persist(cfg, &out, root).stage("persist")?);
    }
    Ok(out)
}

/// Loads the configured files and runs the experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let data = ExperimentData::load(cfg).stage("ingest")?;
    run_with_data(cfg, &data)
}

fn standardization_text(standardizers: &[Standardizer]) -> String {
    let mut out = String::new();
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
    for (i, s) in standardizers.iter().enumerate() {
        let _ = writeln!(out, "source {i}");
        let _ = writeln!(out, "kept {}", join(&mut s.kept.iter().map(|v| v.to_string())));
        let _ = writeln!(out, "mean {}", join(&mut s.mean.iter().map(|v| v.to_string())));
        let _ = writeln!(out, "std {}", join(&mut s.std.iter().map(|v| v.to_string())));
    }
    out
}

/// Writes every artifact of a run under `root/<config hash>` and returns
/// that directory.
pub fn persist(cfg: &ExperimentConfig, out: &RunOutput, root: &Path) -> Result<PathBuf> {
    let dir = root.join(&cfg.content_hash()[..16]);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let put = |name: &str, text: &str| write_atomic(&dir.join(name), text.as_bytes());
    put("config.txt", &cfg.to_text())?;
    put("report.json", &out.report.to_json())?;
    put("report.tsv", &out.report.to_tsv())?;
    put("predictions.tsv", &format_predictions(&out.predictions))?;
    put("standardization.txt", &standardization_text(&out.fusion.standardizers))?;
    if let Some(p) = &out.fusion.projections {
        put("projections.txt", &p.to_text())?;
    }
    if let Some(m) = &out.fusion.lpp {
        let as_set = ProjectionSet {
            maps: vec![m.projection.clone()],
            dn: m.projection.ncols(),
            mu: 0.0,
            mode: cfg.algorithm.name().into(),
            eigenvalues: m.eigenvalues.clone(),
        };
        put("projections.txt", &as_set.to_text())?;
    }
    for (i, g) in out.fusion.mappers.iter().enumerate() {
        export_graph(g, GraphFormat::Dot, &dir.join(format!("mapper_{i}.dot")))?;
        export_graph(g, GraphFormat::Json, &dir.join(format!("mapper_{i}.json")))?;
    }
    Ok(dir)
}

/// Writes a generated dataset as `train_<i>.txt` / `test_<i>.txt` plus an
/// `experiment.cfg` that points at them, and returns that config.
pub fn write_two_view(data: &TwoViewData, dir: &Path, seed: u64) -> Result<ExperimentConfig> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let exp = ExperimentData::from_two_view(data)?;
    let truth = exp.test_labels.reveal().to_vec();
    let mut cfg = ExperimentConfig {
        seed: Some(seed),
        unlabeled: ExperimentConfig::default().unlabeled.min(truth.len()),
        ..Default::default()
    };
    for (i, src) in exp.train.iter().enumerate() {
        let (train, test) = (format!("train_{i}.txt"), format!("test_{i}.txt"));
        emit(src, &dir.join(&train))?;
        emit(&DataSource::new(exp.test[i].clone(), Some(truth.clone()))?, &dir.join(&test))?;
        cfg.train.push(train.into());
        cfg.test.push(test.into());
    }
    write_atomic(&dir.join("experiment.cfg"), cfg.to_text().as_bytes())?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            _ => Err(Error::validation(format!("unknown graph format '{s}' (dot or json)"))),
        }
    }
}

pub fn export_graph(graph: &MapperGraph, format: GraphFormat, path: &Path) -> Result<()> {
    let text = match format {
        GraphFormat::Dot => graph.to_dot(),
        GraphFormat::Json => graph.to_json(),
    };
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub config: ExperimentConfig,
    pub report: EvalReport,
}

/// Runs every combination (in parallel) and returns rows in expansion order.
pub fn sweep_with_data(sweep: &SweepConfig, data: &ExperimentData) -> Result<Vec<SweepRow>> {
    let configs = sweep.expand()?;
    configs
        .into_par_iter()
        .map(|config| {
            let report = run_with_data(&config, data)?.report;
            Ok(SweepRow { config, report })
        })
        .collect()
}

/// Loads data once, runs the sweep, and writes `sweep.tsv` under the output
/// root when one is configured.
pub fn sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.base.validate()?;
    let data = ExperimentData::load(&sweep.base).stage("ingest")?;
    let rows = sweep_with_data(sweep, &data)?;
    if let Some(root) = &sweep.base.output {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        write_atomic(&root.join("sweep.tsv"), sweep_table(&rows).as_bytes())?;
    }
    Ok(rows)
}

pub const SWEEP_COLUMNS: [&str; 9] = ["algorithm", "mu", "dn", "bins", "overlap", "k", "oa", "aa", "kappa"];

/// Tab-separated table with a header line and one row per run.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join("\t");
    out.push('\n');
    for r in rows {
        let c = &r.config;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.algorithm, c.mu, c.dn, c.bins, c.overlap, c.k, r.report.oa, r.report.aa, r.report.kappa
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_two_view, TwoViewSpec};

    fn data(seed: u64) -> ExperimentData {
        let spec = TwoViewSpec::collapsing(0.3, 10, 20, seed);
        ExperimentData::from_two_view(&gen_two_view(&spec).unwrap()).unwrap()
    }

    fn cfg(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            train: vec!["a".into(), "b".into()],
            test: vec!["c".into(), "d".into()],
            seed: Some(1),
            unlabeled: 40,
            k: 5,
            dn: 3,
            ..Default::default()
        }
    }

    #[test]
    fn every_algorithm_runs() {
        let d = data(3);
        for a in Algorithm::ALL {
            let out = run_with_data(&cfg(a), &d).unwrap();
            assert_eq!(out.predictions.len(), 80);
            assert_eq!(out.report.meta.algorithm, a.name());
            let width = match a {
                Algorithm::OptOnly => 6,
                Algorithm::PolOnly => 8,
                Algorithm::Concat => 14,
                Algorithm::Lpp | Algorithm::LppSe => 3,
                Algorithm::Ssma | Algorithm::Mima => 6,
            };
            assert_eq!(out.fusion.test.ncols(), width, "{a}");
            assert_eq!(out.fusion.mappers.len(), if a == Algorithm::Mima { 2 } else { 0 });
        }
    }

    #[test]
    fn fusion_never_reads_test_labels() {
        let d = data(4);
        let c = cfg(Algorithm::Mima);
        fuse(&c, &d.train, &d.test).unwrap();
        assert_eq!(d.test_labels.reads(), 0);
        run_with_data(&c, &d).unwrap();
        assert_eq!(d.test_labels.reads(), 1);
    }

    #[test]
    fn deterministic_report() {
        let c = cfg(Algorithm::Mima);
        let a = run_with_data(&c, &data(5)).unwrap().report.to_json();
        let b = run_with_data(&c, &data(5)).unwrap().report.to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn capacity_error_surfaces_with_stage() {
        let c = ExperimentConfig { dn: 50, ..cfg(Algorithm::Ssma) };
        let err = run_with_data(&c, &data(1)).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "align", .. }));
        assert!(matches!(err.root(), Error::Capacity { requested: 50, .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn too_many_unlabeled_is_validation() {
        let c = ExperimentConfig { unlabeled: 1000, ..cfg(Algorithm::Concat) };
        assert_eq!(run_with_data(&c, &data(1)).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn single_source_hand_example() {
        // X = [1, 2] standardizes to [-1, 1]; with μ = 0 the problem is
        // A = (−1 − 1)² = 4 against B = 0, so λ = 4 / reg.
        let train = DataSource::new(Matrix::from_column_slice(2, 1, &[1.0, 2.0]), Some(vec![1, 1])).unwrap();
        let test = DataSource::new(Matrix::from_column_slice(1, 1, &[1.5]), Some(vec![1])).unwrap();
        let d = ExperimentData::new(vec![train], vec![test]).unwrap();
        let c = ExperimentConfig {
            algorithm: Algorithm::Ssma,
            train: vec!["a".into()],
            test: vec!["b".into()],
            mu: 0.0,
            dn: 1,
            k: 1,
            unlabeled: 0,
            seed: Some(0),
            ..Default::default()
        };
        let out = run_with_data(&c, &d).unwrap();
        let p = out.fusion.projections.unwrap();
        assert!((p.eigenvalues[0] - 4.0 / 1e-9).abs() < 1e-3);
        assert_eq!(out.report.oa, 1.0);
    }

    #[test]
    fn artifacts_written_under_hash() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig {
            output: Some(dir.path().to_path_buf()),
            ..cfg(Algorithm::Mima)
        };
        let out = run_with_data(&c, &data(2)).unwrap();
        let run_dir = out.artifacts.unwrap();
        assert_eq!(run_dir.file_name().unwrap().to_string_lossy(), &c.content_hash()[..16]);
        for f in ["config.txt", "report.json", "report.tsv", "predictions.tsv", "projections.txt", "mapper_1.dot"] {
            assert!(run_dir.join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(run_dir.join("projections.txt")).unwrap();
        assert_eq!(ProjectionSet::from_text(&text).unwrap(), out.fusion.projections.unwrap());
        let saved = std::fs::read_to_string(run_dir.join("predictions.tsv")).unwrap();
        assert_eq!(parse_predictions(&saved, "p").unwrap(), out.predictions);
    }

    #[test]
    fn sweep_rows_follow_expansion() {
        let d = data(6);
        let mut s = SweepConfig::new(cfg(Algorithm::Ssma));
        s.mu = vec![0.0, 1.0, 2.0];
        let rows = sweep_with_data(&s, &d).unwrap();
        assert_eq!(rows.len(), 3);
        let single = run_with_data(&rows[1].config, &d).unwrap();
        assert_eq!(single.report, rows[1].report);
        let table = sweep_table(&rows);
        assert_eq!(table.lines().count(), 4);
        assert!(table.lines().nth(2).unwrap().starts_with("ssma\t1\t3\t"));
    }

    #[test]
    fn generated_files_run_from_config() {
        let dir = tempfile::tempdir().unwrap();
        let data = gen_two_view(&TwoViewSpec::collapsing(0.3, 6, 10, 2)).unwrap();
        write_two_view(&data, dir.path(), 2).unwrap();
        let cfg = ExperimentConfig::load(&dir.path().join("experiment.cfg")).unwrap();
        assert_eq!(cfg.unlabeled, 40);
        assert_eq!(cfg.train[1], dir.path().join("train_1.txt"));
        let loaded = ExperimentData::load(&cfg).unwrap();
        assert_eq!(loaded.test, data.test_views());
        assert_eq!(loaded.train[0].features, data.views[0].select_rows(data.train.iter()));
        let out = run(&ExperimentConfig { dn: 2, ..cfg }).unwrap();
        assert_eq!(out.predictions.len(), 40);
    }
}
