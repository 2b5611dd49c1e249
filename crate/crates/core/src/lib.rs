//! Quantifies how exposed individual trajectories in a spatio-temporal event
//! dataset (call detail records and the like) remain after coarsening, by
//! measuring what it takes to single a person out rather than whether some
//! fixed sample happens to be unique.
//!
//! The pipeline: ingest raw records ([`io`]), lower them onto a
//! generalization profile of a nested spatial hierarchy and a temporal slice
//! width ([`generalize`]), then interrogate the result ([`reident`]) for the
//! information cost c (expected number of randomly drawn trace points before
//! a user is unique), the information ratio r (cost as a fraction of trace
//! size), unicity u_p, k-anonymity, and point entropy. [`stats`] adds
//! bootstrap confidence intervals over users and Pareto analysis of the
//! privacy-utility trade-off across profiles, and [`synth`] generates
//! realistic test datasets.
//!
//! Everything randomized derives one stream per (user, trial) from the
//! configured seed, so any run is reproducible bit for bit regardless of the
//! `parallel` feature or thread count.

pub mod error;
pub mod exec;
pub mod generalize;
pub mod io;
pub mod model;
pub mod reident;
mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
