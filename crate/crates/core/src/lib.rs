//! Batch orchestration for uploading an image dataset to media platforms,
//! scraping the altered results back, and recording provenance for every
//! produced picture.
//!
//! The crate is organised around the lifecycle of a job:
//!
//! * [`config`] parses the JSON job description,
//! * [`planner`] turns it into an acyclic execution plan (fan-out and pipelines),
//! * [`workers`] defines the connect/upload/download/disconnect contract and
//!   ships simulated and HTTP-backed workers,
//! * [`platformsim`] is a loopback platform that re-encodes uploads with a
//!   deterministic alteration profile,
//! * [`jpegtools`] walks JPEG marker segments for quantization tables, Exif
//!   and dimensions,
//! * [`recordkeeping`] owns the on-disk job tree, job map and job status,
//! * [`engine`] executes plans, applies the critical-issue policy and resumes
//!   interrupted jobs.

pub mod clock;
pub mod config;
pub mod engine;
pub mod fixtures;
pub mod jpegtools;
pub mod planner;
pub mod platformsim;
pub mod recordkeeping;
pub mod workers;

pub use config::{JobConfig, TaskId, TaskSpec};
pub use engine::{Engine, EngineOptions, JobResult};
pub use planner::ExecutionPlan;
pub use workers::WorkerRegistry;
