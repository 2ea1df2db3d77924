//! Loopback media platform.
//!
//! [`Platform`] holds the state of one simulated platform: sessions, an
//! in-memory media store, and an optional fixed-window upload limit. Uploads
//! are re-encoded through [`apply_transform`] so every stored picture carries
//! the profile's fingerprint. The same `Platform` backs both the in-process
//! simulated worker and the HTTP service in [`server`].

mod ratelimit;
pub mod server;
mod transform;

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::clock::{Clock, SystemClock};

pub use ratelimit::FixedWindow;
pub use server::{serve, serve_platform, ServeError, ServiceHandle};
pub use transform::{apply_transform, target_dimensions, TransformError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateLimit {
    pub max_uploads: u32,
    pub window_s: u64,
}

/// Alteration recipe of a simulated platform. Also the JSON format of
/// profile files accepted by `bpipe simserve`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformProfile {
    pub profile_code: String,
    pub jpeg_quality: u8,
    #[serde(default)]
    pub max_dimension_px: Option<u32>,
    #[serde(default)]
    pub strip_metadata: bool,
    #[serde(default)]
    pub rate_limit: Option<RateLimit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid profile: {0}")]
pub struct ProfileError(pub String);

impl TransformProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let err = |m: &str| Err(ProfileError(m.to_string()));
        if self.profile_code.is_empty() {
            return err("profile_code is empty");
        }
        if !(1..=100).contains(&self.jpeg_quality) {
            return Err(ProfileError(format!(
                "jpeg_quality must be in 1..=100, got {}",
                self.jpeg_quality
            )));
        }
        if self.max_dimension_px == Some(0) {
            return err("max_dimension_px must be positive");
        }
        if let Some(r) = &self.rate_limit {
            if r.max_uploads == 0 || r.window_s == 0 {
                return err("rate_limit needs max_uploads >= 1 and window_s >= 1");
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let p: Self = serde_json::from_str(text).map_err(|e| ProfileError(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub user: String,
    pub pass: String,
}

#[derive(Debug, Clone)]
pub struct MediaRecord {
    pub media_id: String,
    pub transformed_bytes: Arc<Vec<u8>>,
    pub original_filename: String,
    pub stored_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlatformError {
    #[error("unauthorized")]
    Unauthorized,
    #[error("rate limited, retry after {retry_after_s} s")]
    RateLimited { retry_after_s: u64 },
    #[error("invalid media: {0}")]
    InvalidMedia(String),
    #[error("media not found")]
    NotFound,
}

struct State {
    tokens: HashSet<String>,
    media: HashMap<String, MediaRecord>,
    limiter: Option<FixedWindow>,
}

pub struct Platform {
    profile: TransformProfile,
    account: Option<Account>,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform")
            .field("profile", &self.profile)
            .finish_non_exhaustive()
    }
}

impl Platform {
    /// With `account = None` any login is accepted.
    pub fn new(profile: TransformProfile, account: Option<Account>, clock: Arc<dyn Clock>) -> Self {
        let limiter = profile
            .rate_limit
            .as_ref()
            .map(|r| FixedWindow::new(r.max_uploads, Duration::from_secs(r.window_s)));
        Self {
            profile,
            account,
            clock,
            state: Mutex::new(State {
                tokens: HashSet::new(),
                media: HashMap::new(),
                limiter,
            }),
        }
    }

    pub fn with_system_clock(profile: TransformProfile) -> Self {
        Self::new(profile, None, Arc::new(SystemClock::new()))
    }

    pub fn profile(&self) -> &TransformProfile {
        &self.profile
    }

    pub fn login(&self, user: &str, pass: &str) -> Result<String, PlatformError> {
        if let Some(acct) = &self.account {
            if acct.user != user || acct.pass != pass {
                return Err(PlatformError::Unauthorized);
            }
        }
        let token = Uuid::new_v4().simple().to_string();
        self.state.lock().unwrap().tokens.insert(token.clone());
        Ok(token)
    }

    pub fn logout(&self, token: &str) {
        self.state.lock().unwrap().tokens.remove(token);
    }

    fn check_token(&self, st: &State, token: &str) -> Result<(), PlatformError> {
        if st.tokens.contains(token) {
            Ok(())
        } else {
            Err(PlatformError::Unauthorized)
        }
    }

    /// Stores the transformed upload and returns its media id.
    pub fn upload(&self, token: &str, filename: &str, bytes: &[u8]) -> Result<String, PlatformError> {
        {
            let mut st = self.state.lock().unwrap();
            self.check_token(&st, token)?;
            if !bytes.starts_with(&[0xFF, 0xD8]) {
                return Err(PlatformError::InvalidMedia("body is not a JPEG".into()));
            }
            if let Some(lim) = st.limiter.as_mut() {
                lim.try_acquire(self.clock.now())
                    .map_err(|retry_after_s| PlatformError::RateLimited { retry_after_s })?;
            }
        }
        let transformed = apply_transform(&self.profile, bytes)
            .map_err(|e| PlatformError::InvalidMedia(e.to_string()))?;
        let media_id = format!(
            "{}-{}",
            self.profile.profile_code.to_ascii_lowercase(),
            Uuid::new_v4().simple()
        );
        let rec = MediaRecord {
            media_id: media_id.clone(),
            transformed_bytes: Arc::new(transformed),
            original_filename: filename.to_string(),
            stored_at: Utc::now(),
        };
        self.state.lock().unwrap().media.insert(media_id.clone(), rec);
        Ok(media_id)
    }

    pub fn fetch(&self, token: &str, media_id: &str) -> Result<Arc<Vec<u8>>, PlatformError> {
        let st = self.state.lock().unwrap();
        self.check_token(&st, token)?;
        st.media
            .get(media_id)
            .map(|r| Arc::clone(&r.transformed_bytes))
            .ok_or(PlatformError::NotFound)
    }

    pub fn media_count(&self) -> usize {
        self.state.lock().unwrap().media.len()
    }

    pub fn record(&self, media_id: &str) -> Option<MediaRecord> {
        self.state.lock().unwrap().media.get(media_id).cloned()
    }
}
