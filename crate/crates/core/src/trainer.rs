//! Stratified mini-batch training of the scoring network.
//!
//! Every iteration draws half a batch from the labeled anomalies (with
//! replacement) and half from the unlabeled pool (treated as normal), draws
//! fresh reference scores from the prior, and takes one RMSprop step on the
//! averaged deviation loss plus the L2 penalty.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deviation::{
    deviation, deviation_loss, loss_gradient_wrt_score, sample_reference, LossConfig, PriorConfig,
    ReferenceStats,
};
use crate::error::{DevNetError, Result};
use crate::model::{EpochLoss, Preprocessing, TrainedModel};
use crate::network::{Architecture, Gradients, Parameters};
use crate::optimizer::{l2_penalty, regularized_gradient, rmsprop_step, OptimizerConfig, RmsState};
use crate::{seed, Label};

const INIT_STREAM: u64 = 1;
const BATCH_STREAM: u64 = 2;

/// Network variants: the default model and its three ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "def")]
    Def,
    /// Deviation loss on the 20-d hidden representation, no output unit.
    #[serde(rename = "rep")]
    Rep,
    /// No hidden layer: a direct linear map to the score.
    #[serde(rename = "linear")]
    Linear,
    /// Hidden layers of 1000, 250 and 20 units.
    #[serde(rename = "3hl")]
    ThreeHidden,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Def,
        Variant::Rep,
        Variant::Linear,
        Variant::ThreeHidden,
    ];

    pub fn architecture(self, input_dim: usize) -> Result<Architecture> {
        match self {
            Variant::Def => Architecture::new(input_dim, vec![20], false),
            Variant::Rep => Architecture::new(input_dim, vec![20], true),
            Variant::Linear => Architecture::new(input_dim, vec![], false),
            Variant::ThreeHidden => Architecture::new(input_dim, vec![1000, 250, 20], false),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Def => "def",
            Variant::Rep => "rep",
            Variant::Linear => "linear",
            Variant::ThreeHidden => "3hl",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = DevNetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "def" | "default" => Ok(Variant::Def),
            "rep" => Ok(Variant::Rep),
            "linear" => Ok(Variant::Linear),
            "3hl" => Ok(Variant::ThreeHidden),
            other => Err(DevNetError::InvalidConfig(format!(
                "unknown variant {other:?}; expected def, rep, linear or 3hl"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_epochs: usize,
    pub n_batches: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_epochs: 50,
            n_batches: 20,
            batch_size: 512,
            seed: 0,
            variant: Variant::Def,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_epochs == 0 || self.n_batches == 0 {
            return Err(DevNetError::InvalidConfig(
                "n_epochs and n_batches must be positive".into(),
            ));
        }
        if self.batch_size == 0 || !self.batch_size.is_multiple_of(2) {
            return Err(DevNetError::InvalidConfig(format!(
                "batch size must be a positive even number, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Every knob of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DevNetConfig {
    pub train: TrainConfig,
    pub prior: PriorConfig,
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
}

impl DevNetConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.prior.validate()?;
        self.loss.validate()?;
        self.optimizer.validate()
    }
}

/// Unlabeled rows (trained as normal) and the labeled anomalies.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    unlabeled: Array2<f64>,
    labeled_anomalies: Array2<f64>,
}

impl TrainingSet {
    pub fn new(unlabeled: Array2<f64>, labeled_anomalies: Array2<f64>) -> Result<Self> {
        if labeled_anomalies.nrows() == 0 {
            return Err(DevNetError::InvalidConfig(
                "at least one labeled anomaly is required".into(),
            ));
        }
        if unlabeled.nrows() == 0 {
            return Err(DevNetError::InvalidConfig("unlabeled set is empty".into()));
        }
        if unlabeled.ncols() != labeled_anomalies.ncols() {
            return Err(DevNetError::shape(
                "training set columns",
                unlabeled.ncols(),
                labeled_anomalies.ncols(),
            ));
        }
        Ok(TrainingSet {
            unlabeled,
            labeled_anomalies,
        })
    }

    pub fn unlabeled(&self) -> &Array2<f64> {
        &self.unlabeled
    }

    pub fn labeled_anomalies(&self) -> &Array2<f64> {
        &self.labeled_anomalies
    }

    pub fn input_dim(&self) -> usize {
        self.unlabeled.ncols()
    }
}

/// Draws `b / 2` labeled anomalies with replacement followed by `b / 2`
/// distinct unlabeled rows.
pub fn sample_minibatch<R: Rng + ?Sized>(
    ts: &TrainingSet,
    batch_size: usize,
    rng: &mut R,
) -> Result<(Array2<f64>, Vec<Label>)> {
    if batch_size == 0 || !batch_size.is_multiple_of(2) {
        return Err(DevNetError::InvalidConfig(format!(
            "batch size must be a positive even number, got {batch_size}"
        )));
    }
    let half = batch_size / 2;
    let n_unlabeled = ts.unlabeled.nrows();
    if n_unlabeled < half {
        return Err(DevNetError::BatchTooLarge {
            batch_size,
            needed: half,
            available: n_unlabeled,
        });
    }
    let n_known = ts.labeled_anomalies.nrows();
    let mut batch = Array2::zeros((batch_size, ts.input_dim()));
    for i in 0..half {
        let k = rng.random_range(0..n_known);
        batch.row_mut(i).assign(&ts.labeled_anomalies.row(k));
    }
    for (i, u) in index::sample(rng, n_unlabeled, half)
        .into_iter()
        .enumerate()
    {
        batch.row_mut(half + i).assign(&ts.unlabeled.row(u));
    }
    let mut labels = vec![Label::Anomaly; half];
    labels.resize(batch_size, Label::Normal);
    Ok((batch, labels))
}

/// Mean deviation loss over the batch plus `lambda * sum ||W||^2`, and its gradient.
///
/// `references` holds one reference per network output column: a single
/// entry for scalar networks, `M` entries in representation mode, where the
/// per-row loss is the mean of the per-dimension losses.
pub fn batch_loss(
    params: &Parameters,
    batch: ArrayView2<'_, f64>,
    labels: &[Label],
    references: &[ReferenceStats],
    loss_cfg: &LossConfig,
    lambda: f64,
) -> Result<(f64, Gradients)> {
    let rows = batch.nrows();
    if labels.len() != rows {
        return Err(DevNetError::shape("batch labels", rows, labels.len()));
    }
    let out_dim = params.architecture().output_dim();
    if references.len() != out_dim {
        return Err(DevNetError::shape(
            "reference count",
            out_dim,
            references.len(),
        ));
    }
    let (out, cache) = params.forward(batch)?;
    let scale = 1.0 / (rows * out_dim) as f64;
    let mut data_loss = 0.0;
    let mut dout = Array2::zeros(out.dim());
    for ((i, j), &s) in out.indexed_iter() {
        let label = labels[i];
        let reference = &references[j];
        data_loss += deviation_loss(deviation(s, reference)?, label, loss_cfg);
        dout[[i, j]] = scale * loss_gradient_wrt_score(s, label, reference, loss_cfg)?;
    }
    let loss = data_loss * scale + l2_penalty(params, lambda);
    let mut grads = params.backward(&cache, dout.view())?;
    regularized_gradient(params, &mut grads, lambda)?;
    Ok((loss, grads))
}

/// Trains a network of the configured variant.
pub fn train_variant(ts: &TrainingSet, cfg: &DevNetConfig) -> Result<TrainedModel> {
    let arch = cfg.train.variant.architecture(ts.input_dim())?;
    train(ts, &arch, cfg)
}

/// Runs `n_epochs * n_batches` stratified RMSprop iterations.
pub fn train(ts: &TrainingSet, arch: &Architecture, cfg: &DevNetConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    arch.validate()?;
    let expected = cfg.train.variant.architecture(arch.input_dim)?;
    if &expected != arch {
        return Err(DevNetError::InvalidConfig(format!(
            "architecture {arch:?} does not match variant {}",
            cfg.train.variant
        )));
    }
    if arch.input_dim != ts.input_dim() {
        return Err(DevNetError::shape(
            "training input_dim",
            arch.input_dim,
            ts.input_dim(),
        ));
    }
    let tc = &cfg.train;
    let half = tc.batch_size / 2;
    if ts.unlabeled.nrows() < half {
        return Err(DevNetError::BatchTooLarge {
            batch_size: tc.batch_size,
            needed: half,
            available: ts.unlabeled.nrows(),
        });
    }

    let mut params = Parameters::init(arch, seed::derive(tc.seed, INIT_STREAM))?;
    let mut state = RmsState::new(&params)?;
    let mut rng = seed::rng(seed::derive(tc.seed, BATCH_STREAM));
    let out_dim = arch.output_dim();
    let lambda = cfg.optimizer.weight_decay_lambda;
    let mut log = Vec::with_capacity(tc.n_epochs);

    for epoch in 0..tc.n_epochs {
        let mut epoch_total = 0.0;
        for batch_idx in 0..tc.n_batches {
            let (batch, labels) = sample_minibatch(ts, tc.batch_size, &mut rng)?;
            let references: Vec<ReferenceStats> = (0..out_dim)
                .map(|_| sample_reference(&cfg.prior, &mut rng))
                .collect();
            let (loss, grads) = batch_loss(
                &params,
                batch.view(),
                &labels,
                &references,
                &cfg.loss,
                lambda,
            )?;
            if !loss.is_finite() {
                return Err(DevNetError::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_idx + 1,
                });
            }
            rmsprop_step(&mut params, &grads, &mut state, &cfg.optimizer)?;
            epoch_total += loss;
        }
        log.push(EpochLoss {
            epoch: epoch + 1,
            mean_loss: epoch_total / tc.n_batches as f64,
        });
    }

    Ok(TrainedModel::new(
        params,
        *cfg,
        Preprocessing::default(),
        log,
    ))
}

/// Anomaly scores for already-encoded feature rows; see [`TrainedModel::predict`].
pub fn predict(model: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<ndarray::Array1<f64>> {
    model.predict(x)
}

/// Mean per-dimension Z-score against the prior, used to reduce a
/// representation-mode output to one score per row.
pub(crate) fn representation_score(out: &Array2<f64>, prior: &PriorConfig) -> ndarray::Array1<f64> {
    out.mapv(|q| (q - prior.mu) / prior.sigma)
        .mean_axis(Axis(1))
        .expect("representation has at least one column")
}
