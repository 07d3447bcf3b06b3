//! Bootstrap subsample refits and channel-level regressions.

mod bootstrap;
mod channels;

pub use bootstrap::{
    bootstrap, percentile_nearest_rank, subsample_indices, BootstrapCoefficient, BootstrapResult, Replicate,
};
pub use channels::{per_channel_fits, ChannelFit, ChannelFitSet, ChannelSkip, Sign, CHANNEL_MARGIN};
