//! Built-in simulated platforms and the `--platforms` definition file.
//!
//! The six built-in profiles are fixtures: their qualities and size caps are
//! made up so each leaves a distinguishable fingerprint. They make no claim
//! about what the real services do.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{HttpWorker, RegistryError, SimWorker, Worker, WorkerDescriptor, WorkerFactory, WorkerRegistry};
use crate::clock::Clock;
use crate::platformsim::{Account, Platform, ProfileError, TransformProfile};

fn profile(code: &str, q: u8, cap: Option<u32>, strip: bool) -> TransformProfile {
    TransformProfile {
        profile_code: code.into(),
        jpeg_quality: q,
        max_dimension_px: cap,
        strip_metadata: strip,
        rate_limit: None,
    }
}

fn descriptor(code: &str, pool: u32, multi: bool) -> WorkerDescriptor {
    WorkerDescriptor {
        platform_code: code.into(),
        default_pool_size: pool,
        supports_multi_pic: multi,
    }
}

pub fn builtin_profiles() -> Vec<(WorkerDescriptor, TransformProfile)> {
    vec![
        (descriptor("MASTD", 4, true), profile("MASTD", 83, Some(1920), true)),
        (descriptor("ODNOK", 1, false), profile("ODNOK", 78, Some(1680), true)),
        (descriptor("REDDT", 1, false), profile("REDDT", 90, None, false)),
        (descriptor("SKYPE", 10, true), profile("SKYPE", 74, Some(1600), true)),
        (descriptor("SIGNL", 1, false), profile("SIGNL", 70, Some(1600), true)),
        (descriptor("DIASP", 1, false), profile("DIASP", 86, Some(1024), false)),
    ]
}

fn sim_factory(desc: &WorkerDescriptor, platform: Arc<Platform>) -> WorkerFactory {
    let desc = desc.clone();
    Arc::new(move || Box::new(SimWorker::new(desc.clone(), Arc::clone(&platform))) as Box<dyn Worker>)
}

/// Registry of the built-in simulated platforms, each backed by one shared
/// in-process [`Platform`].
pub fn builtin_registry(clock: Arc<dyn Clock>) -> WorkerRegistry {
    let mut reg = WorkerRegistry::new();
    for (desc, prof) in builtin_profiles() {
        let platform = Arc::new(Platform::new(prof, None, Arc::clone(&clock)));
        reg.register(desc.clone(), sim_factory(&desc, platform))
            .expect("built-in codes are unique");
    }
    reg
}

/// One entry of a platform definition file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlatformDef {
    /// In-process simulated platform.
    Sim {
        code: String,
        default_pool_size: u32,
        #[serde(default)]
        supports_multi_pic: bool,
        profile: TransformProfile,
        #[serde(default)]
        account: Option<Account>,
    },
    /// Remote platform speaking the loopback HTTP protocol.
    Http {
        code: String,
        base_url: String,
        default_pool_size: u32,
        #[serde(default)]
        supports_multi_pic: bool,
    },
}

/// `{"platforms": [ {"kind": "sim", ...}, {"kind": "http", ...} ]}`
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformsFile {
    pub platforms: Vec<PlatformDef>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("invalid platforms file: {0}")]
    Parse(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl PlatformsFile {
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        serde_json::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))
    }

    pub fn register_into(&self, reg: &mut WorkerRegistry, clock: Arc<dyn Clock>) -> Result<(), CatalogError> {
        for def in &self.platforms {
            match def {
                PlatformDef::Sim {
                    code,
                    default_pool_size,
                    supports_multi_pic,
                    profile,
                    account,
                } => {
                    profile.validate()?;
                    let desc = descriptor(code, *default_pool_size, *supports_multi_pic);
                    let platform = Arc::new(Platform::new(profile.clone(), account.clone(), Arc::clone(&clock)));
                    reg.register(desc.clone(), sim_factory(&desc, platform))?;
                }
                PlatformDef::Http {
                    code,
                    base_url,
                    default_pool_size,
                    supports_multi_pic,
                } => {
                    let desc = descriptor(code, *default_pool_size, *supports_multi_pic);
                    let url = base_url.clone();
                    let d = desc.clone();
                    reg.register(
                        desc,
                        Arc::new(move || Box::new(HttpWorker::new(d.clone(), url.clone())) as Box<dyn Worker>),
                    )?;
                }
            }
        }
        Ok(())
    }
}
