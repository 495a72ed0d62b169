//! From-scratch segmentation network: layer kernels, a small U-Net with
//! optional attention gates, BCE loss, Adam, a plateau scheduler and the
//! training loop. Everything runs in `f64` on one thread.

pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod net;
pub mod optim;
pub mod tensor;
pub mod train;

pub use loss::{bce_loss, BCE_CLAMP};
pub use net::{ActivationPattern, ForwardCache, NetConfig, Param, Params, UNet, OUTPUT_CHANNELS};
pub use optim::{adam_step, plateau_scheduler, plateau_triggers, AdamConfig, AdamState, PlateauConfig};
pub use tensor::Tensor4;
pub use train::{
    dataset_loss, read_history_csv, train, train_with, write_history_csv, Checkpoint, Dataset,
    EpochRecord, TrainConfig, TrainOutcome,
};
