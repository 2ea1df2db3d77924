use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use super::{Worker, WorkerDescriptor};

pub type WorkerFactory = Arc<dyn Fn() -> Box<dyn Worker> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("platform {0} is already registered")]
    DuplicateCode(String),
    #[error("invalid worker descriptor for {code}: {reason}")]
    InvalidDescriptor { code: String, reason: String },
}

/// Platform code to worker factory, enumerated in insertion order.
#[derive(Clone, Default)]
pub struct WorkerRegistry {
    entries: IndexMap<String, (WorkerDescriptor, WorkerFactory)>,
}

impl fmt::Debug for WorkerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.values().map(|(d, _)| d)).finish()
    }
}

impl WorkerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, descriptor: WorkerDescriptor, factory: WorkerFactory) -> Result<(), RegistryError> {
        let code = descriptor.platform_code.clone();
        if let Err(reason) = crate::config::validate_platform_code(&code) {
            return Err(RegistryError::InvalidDescriptor {
                code,
                reason: reason.into(),
            });
        }
        if descriptor.default_pool_size == 0 {
            return Err(RegistryError::InvalidDescriptor {
                code,
                reason: "default_pool_size must be >= 1".into(),
            });
        }
        if self.entries.contains_key(&code) {
            return Err(RegistryError::DuplicateCode(code));
        }
        self.entries.insert(code, (descriptor, factory));
        Ok(())
    }

    pub fn lookup(&self, code: &str) -> Option<&WorkerDescriptor> {
        self.entries.get(code).map(|(d, _)| d)
    }

    /// A fresh worker instance for `code`.
    pub fn create(&self, code: &str) -> Option<Box<dyn Worker>> {
        self.entries.get(code).map(|(_, f)| f())
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn code_set(&self) -> BTreeSet<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platformsim::{Platform, TransformProfile};
    use crate::workers::SimWorker;

    fn sim_entry(code: &str, pool: u32) -> (WorkerDescriptor, WorkerFactory) {
        let desc = WorkerDescriptor {
            platform_code: code.into(),
            default_pool_size: pool,
            supports_multi_pic: true,
        };
        let platform = Arc::new(Platform::with_system_clock(TransformProfile {
            profile_code: code.into(),
            jpeg_quality: 75,
            max_dimension_px: None,
            strip_metadata: true,
            rate_limit: None,
        }));
        let d = desc.clone();
        let factory: WorkerFactory =
            Arc::new(move || Box::new(SimWorker::new(d.clone(), Arc::clone(&platform))) as Box<dyn Worker>);
        (desc, factory)
    }

    #[test]
    fn register_and_lookup() {
        let mut r = WorkerRegistry::new();
        let (d, f) = sim_entry("SIMP1", 7);
        r.register(d, f).unwrap();
        assert_eq!(r.lookup("SIMP1").unwrap().default_pool_size, 7);
        assert!(r.lookup("NOPE").is_none());
        assert_eq!(r.create("SIMP1").unwrap().descriptor().platform_code, "SIMP1");
    }

    #[test]
    fn duplicate_code_rejected() {
        let mut r = WorkerRegistry::new();
        let (d, f) = sim_entry("SIMP1", 1);
        r.register(d.clone(), f.clone()).unwrap();
        assert_eq!(r.register(d, f), Err(RegistryError::DuplicateCode("SIMP1".into())));
    }

    #[test]
    fn invalid_descriptors_rejected() {
        let mut r = WorkerRegistry::new();
        let (d, f) = sim_entry("SIMP1", 0);
        assert!(matches!(r.register(d, f), Err(RegistryError::InvalidDescriptor { .. })));
        let (d, f) = sim_entry("lower", 1);
        assert!(matches!(r.register(d, f), Err(RegistryError::InvalidDescriptor { .. })));
    }

    #[test]
    fn enumeration_follows_insertion() {
        let mut r = WorkerRegistry::new();
        for c in ["ZZ", "AA", "MM"] {
            let (d, f) = sim_entry(c, 1);
            r.register(d, f).unwrap();
        }
        assert_eq!(r.codes().collect::<Vec<_>>(), ["ZZ", "AA", "MM"]);
    }
}
