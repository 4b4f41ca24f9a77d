//! Two-layer GCN graph autoencoder: encoder, decoders, reconstruction loss,
//! analytic gradients and Adam.
//!
//! Node features are the identity matrix, so the encoder never materializes
//! `X`: `Â X W0 = Â W0`, and each row of `W0` is a free node embedding.

mod adam;
mod backward;
mod forward;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use backward::{encoder_backward, reconstruction_backward, ReconstructionGrad};
pub use forward::{
    decode_gcn, decode_inner, encode, encode_eval, reconstruction_loss, sample_cells, Encoded,
    ReconstructionMode,
};
pub use params::{glorot_uniform, Decoder, GcnParams};
