//! Dense tensors, the reverse-mode computation record, and optimizers.

mod optim;
mod params;
mod rng;
mod tape;
mod tensor;

pub use optim::{Direction, OptimizerConfig, OptimizerKind, OptimizerState};
pub use params::{clip_weights, NetworkParams, ParamGrads};
pub use rng::RngStream;
pub use tape::{sigmoid, Gradients, Mode, Tape, Var};
pub use tensor::{matmul_with, Tensor};
