// SPDX-License-Identifier: Apache-2.0

//! Command line front end and HTTP scoring service.

pub mod commands;
pub mod service;

pub use service::app;
