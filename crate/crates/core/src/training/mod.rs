//! Loss functions and the training procedures: supervised forecasters, the
//! adversarial loop, the weight-clipped critic loop and the three-phase
//! latent-space schedule. Also forecasting and synthetic sampling.

mod config;
mod forecast;
mod gan;
mod objectives;
mod supervised;
mod timegan;
mod trace;

pub use config::{Preset, TrainConfig};
pub use forecast::{
    forecast, generate_synthetic, ForecastContext, ForecastMode, ForecastResult, Forecaster, Generative, Persistence,
    SyntheticSample, TimeGanForecaster,
};
pub use gan::{train_discriminator, train_gan, train_wgan, GanModel, WganEvent, WganHook};
pub use objectives::{
    clamp_prob, discriminator_cost, gan_value, generator_cost, jensen_shannon_divergence, optimal_discriminator, LossMode,
    PROB_EPS,
};
pub use supervised::{train_forecaster, train_regression};
pub use timegan::{train_timegan, TimeGanModel};
pub use trace::{EpochRecord, LossTrace, Phase};
