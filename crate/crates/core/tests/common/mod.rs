#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use bpipe_core::clock::Clock;
use bpipe_core::platformsim::{Platform, RateLimit, TransformProfile};
use bpipe_core::workers::{SimWorker, Worker, WorkerDescriptor, WorkerRegistry};

pub fn profile(code: &str, quality: u8, cap: Option<u32>) -> TransformProfile {
    TransformProfile {
        profile_code: code.into(),
        jpeg_quality: quality,
        max_dimension_px: cap,
        strip_metadata: true,
        rate_limit: None,
    }
}

pub fn limited(mut p: TransformProfile, max_uploads: u32, window_s: u64) -> TransformProfile {
    p.rate_limit = Some(RateLimit { max_uploads, window_s });
    p
}

pub fn descriptor(code: &str, pool: u32, multi: bool) -> WorkerDescriptor {
    WorkerDescriptor {
        platform_code: code.into(),
        default_pool_size: pool,
        supports_multi_pic: multi,
    }
}

/// Registers an in-process simulator; returns the shared platform so tests
/// can look at what it stored.
pub fn add_sim(
    reg: &mut WorkerRegistry,
    desc: WorkerDescriptor,
    profile: TransformProfile,
    clock: Arc<dyn Clock>,
) -> Arc<Platform> {
    let platform = Arc::new(Platform::new(profile, None, clock));
    let p = Arc::clone(&platform);
    let d = desc.clone();
    reg.register(
        desc,
        Arc::new(move || Box::new(SimWorker::new(d.clone(), Arc::clone(&p))) as Box<dyn Worker>),
    )
    .unwrap();
    platform
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    v
}
