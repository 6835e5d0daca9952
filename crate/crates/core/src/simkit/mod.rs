//! Deterministic synthetic EEG standing in for the headset.

mod corpus;
mod generate;
mod linear;
mod profile;
mod replay;

use thiserror::Error;

pub use corpus::{
    balanced_trials, gen_lab_corpus, gen_lab_recordings, gen_recording, recordings_to_tasks, sensor_locations,
    RecordingInfo, TrialPlan, INTER_TRIAL_SECONDS,
};
pub use generate::{gen_segment, gen_trial, pink_noise, raised_cosine, sim_rng, SegmentSpec, ARTIFACT_GAIN, ARTIFACT_SECONDS};
pub use linear::{gen_linear_tasks, LinearTaskModel};
pub use profile::{FittingModel, ProfileDistribution, SyntheticSubjectProfile, TaskModulation};
pub use replay::{replay_stream, Pacing, StreamHandle};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Container(#[from] crate::datastore::ContainerError),
    #[error(transparent)]
    Features(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Decoder(#[from] crate::decoder::DecoderError),
}
