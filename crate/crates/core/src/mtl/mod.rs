//! Multi-task heads, the masked classification loss, the joint objective,
//! training with early stopping and the λ sweep.
//!
//! The classification heads are linear maps from sentence embeddings to one
//! logistic output per class, trained jointly with the autoencoder. Learned
//! embeddings can be exported for external classifiers.

mod heads;
mod model;
mod readout;
mod sweep;
mod train;

pub use heads::{argmax_rows, head_forward, joint_loss, multitask_loss, MultitaskLoss, TaskHead, TaskScores};
pub(crate) use model::stream_rng;
pub use model::{GcnModel, Gradients, LossBreakdown, Supervision, TrainConfig};
pub use readout::{embed_sentences_from_words, SentenceReadout};
pub use sweep::{mean_rows, sweep_csv, sweep_lambda, sweep_series_csv, SweepRow};
pub use train::{train, train_with_observer, EpochRecord, TrainHistory};
