//! A self-contained neural engine and the depth super-resolution network
//! built on it.
//!
//! The engine is a small tape: four spatial kernels (3x3 convolution, 2x2
//! max-pooling, stride-2 transposed convolution, channel concatenation)
//! plus ReLU, each with reverse-mode gradients. Parameters are stored as
//! f32; activations and every reduction run in f64 with a fixed
//! accumulation order, so results are bit-reproducible across runs and
//! thread counts and agree exactly with naive reference loops.
//!
//! The network itself is a residual U-Net: the concatenated first/second
//! depth maps enter a five-stage encoder whose levels are fed by the
//! multi-scale depth features, the decoder is guided by a pooled intensity
//! pyramid, and a final single-filter convolution emits the residual that
//! is added to the up-scaled first depth.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod ops;
pub mod optim;
pub mod tape;
pub mod tensor4;
pub mod train;

pub use error::{NetError, Result};
pub use model::{HistNet, NetInput, Sample, CANONICAL_WIDTHS};
pub use tensor4::Tensor4;
pub use train::{train, LossCurve, TrainConfig};
