//! Forward-only temporal refinement transformer and reference refiners.
//!
//! Flagged quadtree cells of every frame in a clip are grouped into one token
//! sequence, embedded, passed through alternating node attention (self
//! attention among tokens) and instance guidance (cross attention to
//! video-level instance queries) layers, and decoded to per-token foreground
//! probabilities. Confident predictions then overwrite the coarse labels.

mod correct;
mod encoder;
mod layers;
pub mod nn;
mod refiner;
mod tokens;
mod weights;

pub use correct::{apply_corrections, CORRECTION_THRESHOLD};
pub use encoder::{encode_nodes, low_level_features, signed_distance, RgbFrame};
pub use layers::{decode_pixels, forward, igl_forward, nal_forward, AttentionCapture, ForwardOutput, NodePrediction, LOGIT_CLAMP};
pub use refiner::{oracle_refiner, token_probabilities, ClipInput, ConstantRefiner, OracleRefiner, Refiner, TransformerRefiner};
pub use tokens::{group_quadtree, group_sequence, ClipWindow, NodeToken, TokenSequence};
pub use weights::{DecoderWeights, EncoderWeights, LayerWeights, RefinerConfig, RefinerWeights, TensorMut, TensorRef, CONTEXT_SIDE};
