//! Word-gated apartment perceptron trained with nullable-target
//! backpropagation.
//!
//! Inputs are extended with a word identifier. Each word owns an
//! *apartment* of hidden and output neurons; presenting a word silences every
//! other apartment, and desired outputs may leave slots unspecified so that
//! their error signal is ignored. The [`experiments`] module reproduces the
//! XOR and RGB-cube studies built on this model.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod model;
pub mod network;
pub mod training;

pub use error::{Error, Result};
pub use network::{
    gated_sigmoid, sigmoid, Activations, Apartment, ApartmentSpan, ApartmentTopology, Network,
    Neuron, WordId,
};
pub use training::{
    backprop_step, example_error, init_network, learning_rate, shake, train, Polarity, TrainConfig,
    TrainReport, TrainingExample,
};
