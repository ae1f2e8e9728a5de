//! Experiment orchestration: fitting, evaluation, grid search and the model
//! bundle format.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ChannelStats, Dataset, TimeSeriesInstance};
use crate::error::{Error, Result};
use crate::masking::{default_init, parse_bits, MaskMatrix, PrimitivePolynomial};
use crate::readout::{self, ReadoutModel};
use crate::representation::{self, Representation, RepresentationKind, RepresentationTag};
use crate::reservoir::DfrParams;
use crate::rng::SplitMix64;

pub const MODEL_FORMAT: &str = "dfrmodel-v1";

/// Grid used for gamma and eta when none is given.
pub const DEFAULT_GRID: [f64; 4] = [0.03, 0.1, 0.3, 1.0];

/// Seed of the validation split used by grid search unless overridden.
pub const DEFAULT_SPLIT_SEED: u64 = 20_240_229;

fn default_p() -> u32 {
    2
}
fn default_m() -> usize {
    5
}
fn default_lambda() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    0.01
}

/// Everything that determines a trained model. Mirrors the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub representation: RepresentationTag,
    pub gamma: f64,
    pub eta: f64,
    pub theta: f64,
    #[serde(default = "default_p")]
    pub p: u32,
    /// Degree of the mask polynomial; the reservoir has `2^m + m - 1` nodes.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Polynomial taps below the leading term; the built-in polynomial for
    /// `m` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<Vec<usize>>,
    /// LFSR seed as a bit string such as `"00001"`; `0..01` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    /// Ridge strength of the OMS/RMS one-step predictors.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Ridge strength of the readout.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// MRS padding length; the longest training series when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    /// Per-channel z-score with training statistics before masking.
    #[serde(default)]
    pub normalize: bool,
    /// Worker threads. Never serialized: it must not influence results.
    #[serde(default, skip_serializing)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(representation: RepresentationTag, gamma: f64, eta: f64, theta: f64) -> Self {
        Self {
            representation,
            gamma,
            eta,
            theta,
            p: default_p(),
            m: default_m(),
            poly: None,
            init: None,
            lambda: default_lambda(),
            beta: default_beta(),
            t_max: None,
            normalize: false,
            jobs: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn polynomial(&self) -> Result<PrimitivePolynomial> {
        match &self.poly {
            Some(taps) => PrimitivePolynomial::new(self.m, taps),
            None => PrimitivePolynomial::default_for(self.m),
        }
    }

    pub fn init_bits(&self) -> Result<Vec<u8>> {
        match &self.init {
            Some(s) => parse_bits(s),
            None => Ok(default_init(self.m)),
        }
    }

    pub fn mask(&self, n_vars: usize) -> Result<MaskMatrix> {
        MaskMatrix::new(&self.polynomial()?, &self.init_bits()?, n_vars)
    }

    pub fn params(&self, n_nodes: usize) -> Result<DfrParams> {
        DfrParams::new(self.gamma, self.eta, self.theta, self.p, n_nodes)
    }

    pub fn validate(&self) -> Result<()> {
        let poly = self.polynomial()?;
        let init = self.init_bits()?;
        MaskMatrix::new(&poly, &init, 1)?;
        self.params(poly.mask_len())?;
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.t_max == Some(0) {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Representation kind with its parameters resolved against the
    /// training instances.
    pub fn resolve_kind(&self, train: &[TimeSeriesInstance]) -> Result<RepresentationKind> {
        let t_max = || {
            self.t_max
                .or_else(|| train.iter().map(TimeSeriesInstance::len).max())
                .ok_or(Error::EmptySplit("train"))
        };
        let kind = match self.representation {
            RepresentationTag::Lrs => RepresentationKind::Lrs,
            RepresentationTag::Drs => RepresentationKind::Drs,
            RepresentationTag::MrsUpad => RepresentationKind::MrsUpad { t_max: t_max()? },
            RepresentationTag::MrsXpad => RepresentationKind::MrsXpad { t_max: t_max()? },
            RepresentationTag::Oms => RepresentationKind::Oms { lambda: self.lambda },
            RepresentationTag::Rms => RepresentationKind::Rms { lambda: self.lambda },
            RepresentationTag::Dprr => RepresentationKind::Dprr,
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Runs `f` on a pool with `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// A trained classifier with everything needed to reproduce its inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub format: String,
    pub config: ExperimentConfig,
    pub n_vars: usize,
    pub mask: MaskMatrix,
    pub params: DfrParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<ChannelStats>,
    pub readout: ReadoutModel,
}

impl ModelBundle {
    pub fn classes(&self) -> &[String] {
        &self.readout.classes
    }

    pub fn kind(&self) -> &RepresentationKind {
        &self.readout.rep_kind
    }

    pub fn represent(&self, inst: &TimeSeriesInstance) -> Result<Representation> {
        represent(inst, self.normalization.as_ref(), self.kind(), &self.mask, &self.params)
    }

    pub fn predict_index(&self, inst: &TimeSeriesInstance) -> Result<usize> {
        self.readout.predict_index(&self.represent(inst)?)
    }

    pub fn predict(&self, inst: &TimeSeriesInstance) -> Result<&str> {
        Ok(&self.classes()[self.predict_index(inst)?])
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            format: String,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.format != MODEL_FORMAT {
            return Err(Error::Format {
                expected: MODEL_FORMAT.into(),
                found: probe.format,
            });
        }
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        self.config.validate()?;
        self.readout.rep_kind.validate()?;
        let expect = self.readout.rep_kind.feature_len(self.params.n_nodes(), self.n_vars);
        if self.mask.n_vars() != self.n_vars
            || self.mask.n_nodes() != self.params.n_nodes()
            || self.readout.w_out.cols() != expect + 1
            || self.readout.w_out.rows() != self.readout.classes.len()
        {
            return Err(Error::InvalidArgument("model bundle has inconsistent dimensions".into()));
        }
        Ok(())
    }
}

pub fn save_model(model: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelBundle::from_json(&text)
}

fn represent(
    inst: &TimeSeriesInstance,
    stats: Option<&ChannelStats>,
    kind: &RepresentationKind,
    mask: &MaskMatrix,
    params: &DfrParams,
) -> Result<Representation> {
    match stats {
        Some(s) => representation::compute(kind, &s.apply(inst)?, mask, params),
        None => representation::compute(kind, inst, mask, params),
    }
}

fn label_indices(instances: &[TimeSeriesInstance], classes: &[String]) -> Result<Vec<usize>> {
    instances
        .iter()
        .map(|i| {
            classes
                .iter()
                .position(|c| c == i.label())
                .ok_or_else(|| Error::UnknownLabel(i.label().to_string()))
        })
        .collect()
}

/// Fits mask, reservoir representation and readout on `train`. Runs on the
/// current rayon pool; see [`with_jobs`].
pub fn fit(train: &[TimeSeriesInstance], classes: &[String], config: &ExperimentConfig) -> Result<ModelBundle> {
    config.validate()?;
    let n_vars = train.first().ok_or(Error::EmptySplit("train"))?.n_vars();
    let mask = config.mask(n_vars)?;
    let params = config.params(mask.n_nodes())?;
    let normalization = if config.normalize {
        Some(ChannelStats::fit(train)?)
    } else {
        None
    };
    let kind = config.resolve_kind(train)?;
    let labels = label_indices(train, classes)?;
    let reps = train
        .par_iter()
        .map(|inst| represent(inst, normalization.as_ref(), &kind, &mask, &params))
        .collect::<Result<Vec<_>>>()?;
    let readout = readout::train(&reps, &labels, classes, config.beta)?;
    Ok(ModelBundle {
        format: MODEL_FORMAT.to_string(),
        config: config.clone(),
        n_vars,
        mask,
        params,
        normalization,
        readout,
    })
}

pub fn fit_dataset(ds: &Dataset, config: &ExperimentConfig) -> Result<ModelBundle> {
    fit(&ds.train, &ds.classes, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub classes: Vec<String>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the evaluated split.
    pub per_class_recall: Vec<Option<f64>>,
    pub representation: RepresentationKind,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<Prediction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl EvalReport {
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.classes {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            s.push_str(c);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Accuracy and confusion matrix of `model` on `instances`. Per-instance
/// predictions run in parallel; aggregation uses integer counts.
pub fn evaluate(model: &ModelBundle, instances: &[TimeSeriesInstance], verbose: bool) -> Result<EvalReport> {
    if instances.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    let classes = model.classes();
    let truth = label_indices(instances, classes)?;
    let predicted = instances
        .par_iter()
        .map(|inst| model.predict_index(inst))
        .collect::<Result<Vec<_>>>()?;

    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(&predicted) {
        confusion[t][p] += 1;
    }
    let correct = (0..k).map(|i| confusion[i][i]).sum::<usize>();
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[i] as f64 / total as f64)
        })
        .collect();
    let predictions = verbose.then(|| {
        instances
            .iter()
            .zip(&predicted)
            .map(|(inst, &p)| Prediction {
                id: inst.id().to_string(),
                label: inst.label().to_string(),
                predicted: classes[p].clone(),
            })
            .collect()
    });
    let report = EvalReport {
        n: instances.len(),
        correct,
        accuracy: correct as f64 / instances.len() as f64,
        classes: classes.to_vec(),
        confusion,
        per_class_recall,
        representation: *model.kind(),
        config: model.config.clone(),
        predictions,
        wall_time_s: None,
    };
    Ok(report)
}

/// Where the data for each split comes from. Grid search only ever asks for
/// the training split.
pub trait SplitSource {
    fn classes(&self) -> &[String];
    fn train(&self) -> &[TimeSeriesInstance];
    fn test(&self) -> &[TimeSeriesInstance];
}

impl SplitSource for Dataset {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn train(&self) -> &[TimeSeriesInstance] {
        &self.train
    }

    fn test(&self) -> &[TimeSeriesInstance] {
        &self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    /// Stratified holdout of this fraction of the training split.
    Holdout { fraction: f64 },
    /// Stratified k-fold over the training split.
    KFold { folds: usize },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::Holdout { fraction: 0.2 }
    }
}

impl Validation {
    fn check(&self) -> Result<()> {
        match *self {
            Validation::Holdout { fraction } if !(fraction > 0.0 && fraction < 1.0) => Err(
                Error::InvalidArgument(format!("holdout fraction must lie in (0, 1), got {fraction}")),
            ),
            Validation::KFold { folds } if folds < 2 => {
                Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")))
            }
            _ => Ok(()),
        }
    }

    /// `(fit indices, validation indices)` per fold. Within each class the
    /// instance indices are shuffled with `SplitMix64(seed)` (classes handled
    /// in class order); the holdout takes the first `round(fraction * n_c)`
    /// (at least one when the class has two or more members), k-fold deals
    /// them round-robin.
    pub fn folds(&self, labels: &[usize], n_classes: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        self.check()?;
        let mut rng = SplitMix64::new(seed);
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            by_class[l].push(i);
        }
        for members in &mut by_class {
            rng.shuffle(members);
        }
        let n_folds = match *self {
            Validation::Holdout { .. } => 1,
            Validation::KFold { folds } => folds,
        };
        let mut assignment = vec![0usize; labels.len()];
        let mut in_val = vec![false; labels.len()];
        for members in &by_class {
            match *self {
                Validation::Holdout { fraction } => {
                    let mut take = (fraction * members.len() as f64).round() as usize;
                    if take == 0 && members.len() >= 2 {
                        take = 1;
                    }
                    take = take.min(members.len().saturating_sub(1));
                    for &i in &members[..take] {
                        in_val[i] = true;
                    }
                }
                Validation::KFold { folds } => {
                    for (pos, &i) in members.iter().enumerate() {
                        assignment[i] = pos % folds;
                    }
                }
            }
        }
        Ok((0..n_folds)
            .map(|f| {
                let is_val = |i: usize| match *self {
                    Validation::Holdout { .. } => in_val[i],
                    Validation::KFold { .. } => assignment[i] == f,
                };
                let (val, fit): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| is_val(i));
                (fit, val)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub gamma: f64,
    pub eta: f64,
    /// Mean validation accuracy over folds.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ExperimentConfig,
    pub best_score: f64,
    pub validation: Validation,
    pub seed: u64,
    pub table: Vec<GridRow>,
}

/// Exhaustive search over `gammas x etas` (gamma outer) scored on validation
/// folds carved from the training split only. The first best point wins ties.
pub fn grid_search(
    source: &impl SplitSource,
    base: &ExperimentConfig,
    gammas: &[f64],
    etas: &[f64],
    validation: Validation,
    seed: u64,
) -> Result<GridResult> {
    if gammas.is_empty() || etas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let train = source.train();
    let classes = source.classes();
    if train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    let labels = label_indices(train, classes)?;
    let folds = validation.folds(&labels, classes.len(), seed)?;

    let mut base = base.clone();
    if matches!(base.representation, RepresentationTag::MrsUpad | RepresentationTag::MrsXpad) && base.t_max.is_none() {
        base.t_max = train.iter().map(TimeSeriesInstance::len).max();
    }

    let mut table = Vec::with_capacity(gammas.len() * etas.len());
    for &gamma in gammas {
        for &eta in etas {
            let cfg = ExperimentConfig { gamma, eta, ..base.clone() };
            let mut total = 0.0;
            for (fit_idx, val_idx) in &folds {
                let fit_set: Vec<TimeSeriesInstance> = fit_idx.iter().map(|&i| train[i].clone()).collect();
                let val_set: Vec<TimeSeriesInstance> = val_idx.iter().map(|&i| train[i].clone()).collect();
                let model = fit(&fit_set, classes, &cfg)?;
                total += evaluate(&model, &val_set, false)?.accuracy;
            }
            table.push(GridRow {
                gamma,
                eta,
                score: total / folds.len() as f64,
            });
        }
    }
    let best_row = table
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.score > table[best].score { i } else { best });
    let best = ExperimentConfig {
        gamma: table[best_row].gamma,
        eta: table[best_row].eta,
        ..base
    };
    Ok(GridResult {
        best_score: table[best_row].score,
        best,
        validation,
        seed,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth, SynthSpec};
    use crate::linalg::Matrix;
    use std::cell::Cell;

    fn small_synth(seed: u64) -> Dataset {
        synth(&SynthSpec {
            n_classes: 2,
            n_vars: 2,
            n_train: 40,
            n_test: 20,
            t_min: 15,
            t_max: 25,
            seed,
            noise: 0.2,
        })
        .unwrap()
    }

    fn dprr_config() -> ExperimentConfig {
        ExperimentConfig {
            m: 3,
            ..ExperimentConfig::new(RepresentationTag::Dprr, 0.3, 1.0, 0.25)
        }
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"representation":"DPRR","gamma":0.04,"eta":1,"theta":0.3}"#).unwrap();
        assert_eq!(cfg.p, 2);
        assert_eq!(cfg.m, 5);
        assert_eq!(cfg.beta, 0.01);
        assert_eq!(cfg.lambda, 1.0);
        assert!(ExperimentConfig::from_json(r#"{"representation":"DPRR","gamma":0.04,"eta":1,"theta":0.3,"bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"representation":"DPRR","gamma":0.04,"eta":-1,"theta":0.3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"representation":"DPRR","gamma":0.04,"eta":1,"theta":0.3,"m":2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"representation":"DPRR","gamma":0.04,"eta":1,"theta":0.3,"init":"000"}"#).is_err());
        let with_jobs = ExperimentConfig::from_json(r#"{"representation":"LRS","gamma":0.04,"eta":1,"theta":0.3,"jobs":3}"#).unwrap();
        assert_eq!(with_jobs.jobs, Some(3));
        assert!(!serde_json::to_string(&with_jobs).unwrap().contains("jobs"));
    }

    #[test]
    fn fit_separable_synthetic_perfectly() {
        let ds = small_synth(1);
        let model = fit_dataset(&ds, &dprr_config()).unwrap();
        let report = evaluate(&model, &ds.train, false).unwrap();
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn oms_wiring() {
        let ds = small_synth(2);
        let cfg = ExperimentConfig { representation: RepresentationTag::Oms, ..dprr_config() };
        let model = fit_dataset(&ds, &cfg).unwrap();
        assert_eq!(*model.kind(), RepresentationKind::Oms { lambda: 1.0 });
        assert_eq!(model.readout.n_features(), 2 * (10 + 1));
    }

    #[test]
    fn mrs_t_max_defaults_to_training_maximum() {
        let ds = small_synth(3);
        let cfg = ExperimentConfig { representation: RepresentationTag::MrsXpad, ..dprr_config() };
        let model = fit_dataset(&ds, &cfg).unwrap();
        let t_max = ds.train.iter().map(|i| i.len()).max().unwrap();
        assert_eq!(*model.kind(), RepresentationKind::MrsXpad { t_max });

        let long = TimeSeriesInstance::new("long", "c0", vec![vec![0.1; t_max + 1]; 2]).unwrap();
        assert!(matches!(model.predict_index(&long), Err(Error::ExceedsTMax { .. })));
    }

    #[test]
    fn fit_is_deterministic_across_pools() {
        let ds = small_synth(4);
        let a = with_jobs(Some(1), || fit_dataset(&ds, &dprr_config())).unwrap().unwrap();
        let b = with_jobs(Some(4), || fit_dataset(&ds, &dprr_config())).unwrap().unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let ra = with_jobs(Some(1), || evaluate(&a, &ds.test, true)).unwrap().unwrap();
        let rb = with_jobs(Some(3), || evaluate(&a, &ds.test, true)).unwrap().unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn model_round_trip_predicts_identically() {
        let ds = small_synth(5);
        let cfg = ExperimentConfig { normalize: true, ..dprr_config() };
        let model = fit_dataset(&ds, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(evaluate(&back, &ds.test, true).unwrap(), evaluate(&model, &ds.test, true).unwrap());

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(ModelBundle::from_json(&text[..text.len() / 2]).is_err());
        let wrong = text.replace(MODEL_FORMAT, "dfrmodel-v0");
        assert!(matches!(ModelBundle::from_json(&wrong), Err(Error::Format { .. })));
    }

    #[test]
    fn constant_predictor_on_balanced_split() {
        let ds = small_synth(6);
        let mut model = fit_dataset(&ds, &ExperimentConfig { representation: RepresentationTag::Lrs, ..dprr_config() }).unwrap();
        let cols = model.readout.w_out.cols();
        let mut w = vec![0.0; 2 * cols];
        w[cols - 1] = 1.0; // class 0 bias
        model.readout.w_out = Matrix::new(2, cols, w).unwrap();
        let report = evaluate(&model, &ds.test, false).unwrap();
        assert_eq!(report.accuracy, 0.5);
        assert_eq!(report.confusion, vec![vec![10, 0], vec![10, 0]]);
        assert_eq!(report.per_class_recall, vec![Some(1.0), Some(0.0)]);
    }

    #[test]
    fn report_invariants() {
        let ds = small_synth(7);
        let model = fit_dataset(&ds, &ExperimentConfig { representation: RepresentationTag::Lrs, ..dprr_config() }).unwrap();
        let r = evaluate(&model, &ds.test, true).unwrap();
        let trace: usize = (0..2).map(|i| r.confusion[i][i]).sum();
        assert_eq!(r.accuracy, trace as f64 / r.n as f64);
        for (c, row) in r.confusion.iter().enumerate() {
            let n_c = ds.test.iter().filter(|i| i.label() == ds.classes[c]).count();
            assert_eq!(row.iter().sum::<usize>(), n_c);
        }
        assert_eq!(r.predictions.as_ref().unwrap().len(), ds.test.len());
        assert!(r.confusion_csv().starts_with("true\\predicted,c0,c1\n"));
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let ds = small_synth(8);
        let model = fit_dataset(&ds, &dprr_config()).unwrap();
        let wrong = TimeSeriesInstance::new("w", "c0", vec![vec![0.0; 5]; 3]).unwrap();
        assert!(evaluate(&model, &[wrong], false).is_err());
    }

    #[test]
    fn holdout_is_stratified_and_seeded() {
        let labels: Vec<usize> = (0..50).map(|i| i % 2).collect();
        let v = Validation::default();
        let folds = v.folds(&labels, 2, 1).unwrap();
        assert_eq!(folds.len(), 1);
        let (fit_idx, val_idx) = &folds[0];
        assert_eq!(val_idx.len(), 10);
        assert_eq!(fit_idx.len() + val_idx.len(), 50);
        assert_eq!(val_idx.iter().filter(|&&i| labels[i] == 0).count(), 5);
        assert_eq!(folds, v.folds(&labels, 2, 1).unwrap());
        assert_ne!(folds, v.folds(&labels, 2, 2).unwrap());

        let kf = Validation::KFold { folds: 5 }.folds(&labels, 2, 1).unwrap();
        let mut all: Vec<usize> = kf.iter().flat_map(|(_, v)| v.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());

        assert!(Validation::Holdout { fraction: 1.0 }.folds(&labels, 2, 1).is_err());
        assert!(Validation::KFold { folds: 1 }.folds(&labels, 2, 1).is_err());
    }

    struct CountingSource {
        inner: Dataset,
        train_reads: Cell<usize>,
        test_reads: Cell<usize>,
    }

    impl SplitSource for CountingSource {
        fn classes(&self) -> &[String] {
            &self.inner.classes
        }
        fn train(&self) -> &[TimeSeriesInstance] {
            self.train_reads.set(self.train_reads.get() + 1);
            &self.inner.train
        }
        fn test(&self) -> &[TimeSeriesInstance] {
            self.test_reads.set(self.test_reads.get() + 1);
            &self.inner.test
        }
    }

    #[test]
    fn grid_search_never_touches_test_split() {
        let src = CountingSource {
            inner: small_synth(9),
            train_reads: Cell::new(0),
            test_reads: Cell::new(0),
        };
        let r = grid_search(&src, &dprr_config(), &[0.1, 0.3], &[1.0], Validation::default(), 3).unwrap();
        assert_eq!(r.table.len(), 2);
        assert!(src.train_reads.get() > 0);
        assert_eq!(src.test_reads.get(), 0);
    }

    #[test]
    fn grid_degenerate_and_empty() {
        let ds = small_synth(10);
        let r = grid_search(&ds, &dprr_config(), &[0.3], &[1.0], Validation::default(), 1).unwrap();
        assert_eq!(r.table.len(), 1);
        assert_eq!((r.best.gamma, r.best.eta), (0.3, 1.0));
        assert_eq!(r.best_score, r.table[0].score);
        assert!(matches!(
            grid_search(&ds, &dprr_config(), &[], &[1.0], Validation::default(), 1),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn grid_finds_planted_optimum() {
        // A vanishing input gain or feedback gain leaves the representation
        // at (numerically) zero, so only (0.3, 1) can separate the classes.
        let ds = small_synth(11);
        let r = grid_search(&ds, &dprr_config(), &[1e-12, 0.3], &[1e-12, 1.0], Validation::default(), 5).unwrap();
        assert_eq!(r.table.len(), 4);
        assert_eq!((r.best.gamma, r.best.eta), (0.3, 1.0));
        for row in &r.table {
            if (row.gamma, row.eta) != (0.3, 1.0) {
                assert!(row.score < r.best_score);
            }
        }
    }
}
