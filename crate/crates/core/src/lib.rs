// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod autodiff;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod intervention;
pub mod probing;
pub mod report;
pub mod rules;
pub mod seed;
pub mod seq2seq;

pub use error::{Error, Result};
