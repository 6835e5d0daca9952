//! Core library for running unsupervised, multi-day EEG studies on a
//! four-channel consumer headset and decoding the recorded control
//! strategies offline.
//!
//! The crate is split by subsystem:
//!
//! * [`streamkit`] estimates per-channel signal quality while the headset is
//!   being fitted and rates environmental line noise.
//! * [`session`] holds the study definition, the per-day schedule and the
//!   event-driven state machine a subject walks through.
//! * [`datastore`] owns the on-disk recording container, the encryption
//!   envelope, subject tokens and the store-and-forward upload queue.
//! * [`features`] turns trial windows into band-power features and effect
//!   size maps.
//! * [`decoder`] learns a Gaussian prior over lab subjects and evaluates
//!   per-day decoders with leave-one-trial-out cross-validation.
//! * [`simkit`] generates deterministic synthetic EEG in place of a headset.

pub mod datastore;
pub mod decoder;
pub mod features;
pub mod session;
pub mod simkit;
pub mod streamkit;

/// Number of EEG channels on the headset.
pub const CHANNELS: usize = 4;

/// Channel order used everywhere in this crate.
pub const CHANNEL_LABELS: [&str; CHANNELS] = ["AF7", "AF8", "TP9", "TP10"];

/// Headset sampling rate in Hz.
pub const SAMPLE_RATE_HZ: u32 = 256;
