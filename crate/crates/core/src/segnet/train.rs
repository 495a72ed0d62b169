use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::types::{GrayImage, MaskPair};

use super::net::{NetConfig, Param, Params, UNet};
use super::optim::{adam_step, plateau_scheduler, AdamConfig, AdamState, PlateauConfig};
use super::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub plateau: PlateauConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-3,
            adam: AdamConfig::default(),
            plateau: PlateauConfig::default(),
            epochs: 30,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be positive".into()));
        }
        self.adam.validate()?;
        self.plateau.validate()
    }
}

/// Images `(N, 1, H, W)` with heart/thorax targets `(N, 2, H, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Tensor4,
    targets: Tensor4,
}

impl Dataset {
    pub fn new(inputs: Tensor4, targets: Tensor4) -> Result<Self> {
        let [n, c, h, w] = inputs.dims();
        if c != 1 || targets.dims() != [n, 2, h, w] {
            return Err(Error::ShapeMismatch(format!(
                "inputs {:?} do not pair with targets {:?}",
                inputs.dims(),
                targets.dims()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_samples(samples: &[(GrayImage, MaskPair)]) -> Result<Self> {
        let inputs = Tensor4::from_images(samples.iter().map(|(i, _)| i))?;
        let targets = Tensor4::from_masks(samples.iter().map(|(_, m)| m))?;
        Self::new(inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inputs(&self) -> &Tensor4 {
        &self.inputs
    }

    pub fn targets(&self) -> &Tensor4 {
        &self.targets
    }

    pub fn batch(&self, indices: &[usize]) -> (Tensor4, Tensor4) {
        let gather = |t: &Tensor4| {
            let mut dims = t.dims();
            dims[0] = indices.len();
            let data = indices.iter().flat_map(|&i| t.sample(i).iter().copied()).collect();
            Tensor4::from_raw(dims, data)
        };
        (gather(&self.inputs), gather(&self.targets))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

pub const CHECKPOINT_FORMAT: &str = "ctrkit-unet";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Network weights saved at the epoch with the lowest validation loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub net_config: NetConfig,
    /// 1-based epoch the weights come from.
    pub epoch: usize,
    pub val_loss: f64,
    pub params: Vec<Param>,
}

impl Checkpoint {
    pub fn from_net(net: &UNet, epoch: usize, val_loss: f64) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            net_config: *net.config(),
            epoch,
            val_loss,
            params: net.params().clone().into_vec(),
        }
    }

    pub fn to_net(&self) -> Result<UNet> {
        UNet::from_params(self.net_config, Params::new(self.params.clone())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_vec(self).expect("checkpoints always serialize");
        write_atomic(path.as_ref(), &text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ck: Self = serde_json::from_slice(&text)
            .map_err(|e| Error::MalformedDocument(format!("{}: {e}", path.display())))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::MalformedDocument(format!(
                "{}: unsupported checkpoint {} v{}",
                path.display(),
                ck.format,
                ck.version
            )));
        }
        Ok(ck)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochRecord>,
}

/// Mean loss over a dataset, evaluated in batches.
pub fn dataset_loss(net: &UNet, data: &Dataset, batch_size: usize) -> Result<f64> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, y) = data.batch(chunk);
        total += net.loss(&x, &y)? * chunk.len() as f64;
    }
    Ok(total / data.len() as f64)
}

pub fn train(train_set: &Dataset, val_set: &Dataset, net_cfg: NetConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(train_set, val_set, net_cfg, cfg, |_| {})
}

/// Like [`train`], calling `on_epoch` after each epoch.
pub fn train_with(
    train_set: &Dataset,
    val_set: &Dataset,
    net_cfg: NetConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let size = net_cfg.input_size;
    for d in [train_set, val_set] {
        if d.inputs.height() != size || d.inputs.width() != size {
            return Err(Error::ShapeMismatch(format!(
                "dataset images are {}x{}, network expects {size}x{size}",
                d.inputs.height(),
                d.inputs.width()
            )));
        }
    }

    let mut net = UNet::new(net_cfg, cfg.seed)?;
    let mut state = AdamState::new(net.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut lr = cfg.learning_rate;
    let mut history: Vec<EpochRecord> = Vec::with_capacity(cfg.epochs);
    let mut val_losses = Vec::with_capacity(cfg.epochs);
    let mut best: Option<Checkpoint> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut train_total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (x, y) = train_set.batch(chunk);
            let (loss, grads) = net.loss_and_grad(&x, &y)?;
            adam_step(net.params_mut(), &grads, &mut state, lr, &cfg.adam);
            train_total += loss * chunk.len() as f64;
        }
        let val_loss = dataset_loss(&net, val_set, cfg.batch_size)?;
        let record = EpochRecord {
            epoch,
            train_loss: train_total / train_set.len() as f64,
            val_loss,
            lr,
        };
        log::info!(
            "epoch {epoch}: train {:.5} val {:.5} lr {lr:e}",
            record.train_loss,
            val_loss
        );
        on_epoch(&record);
        history.push(record);

        if best.as_ref().map_or(true, |b| val_loss < b.val_loss) {
            best = Some(Checkpoint::from_net(&net, epoch, val_loss));
        }
        val_losses.push(val_loss);
        lr = plateau_scheduler(
            &val_losses,
            cfg.plateau.patience,
            cfg.plateau.factor,
            cfg.plateau.min_lr,
            lr,
        );
    }
    Ok(TrainOutcome {
        checkpoint: best.expect("at least one epoch ran"),
        history,
    })
}

pub fn write_history_csv<W: Write>(history: &[EpochRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in history {
        w.serialize(r)
            .map_err(|e| Error::MalformedDocument(format!("history csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io("<history>", e))
}

pub fn read_history_csv<R: Read>(reader: R) -> Result<Vec<EpochRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e| Error::MalformedDocument(format!("history csv: {e}"))))
        .collect()
}
