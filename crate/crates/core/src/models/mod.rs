//! Network descriptions, layer runtime, reference architectures and checkpoints.

mod builders;
mod checkpoint;
mod network;
mod spec;

pub use builders::{
    build_timegan, discriminator_spec, fit_stride, forecaster_spec, generator_spec, min_conv_length, scaled,
    timegan_specs, CellKind, Head, TimeGanNets, DEFAULT_KERNEL, DEFAULT_STRIDE, DISCRIMINATOR_DENSE_WIDTHS,
    DISCRIMINATOR_FILTERS, GENERATOR_DENSE_WIDTHS, GENERATOR_DROPOUT, GENERATOR_RECURRENT_WIDTHS, TIMEGAN_HIDDEN,
    TIMEGAN_LAYERS,
};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointManifest, NetworkEntry, TensorEntry, BLOB_FILE,
    CHECKPOINT_FORMAT, MANIFEST_FILE,
};
pub use network::{gru_cell_forward, lstm_cell_forward, Bound, GruVars, LstmVars, Network};
pub use spec::{param_name, Activation, FlowShape, LayerSpec, NetSpec};
