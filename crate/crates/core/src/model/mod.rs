//! Collision-probability networks: Fourier encoding, the probability and
//! shaping nets, ensembles and the model file format.

mod encoder;
mod ensemble;
mod io;
mod network;

pub use encoder::{EncodedBatch, FourierConfig, FourierEncoder, FourierGroup, GroupKind, MAIN_GROUPS, SHAPING_GROUPS};
pub use ensemble::{aggregate, member_seed, EnsembleMode, EnsembleModel, Member};
pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use network::{gelu, gelu_grad, Arch, Dense, Heads, Mlp, MlpCache, NetworkParams, RawOutputs, ALPHA_SPAN, RHO1_MAX};
