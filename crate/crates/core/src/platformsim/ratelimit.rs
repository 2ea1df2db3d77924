use std::time::Duration;

/// Fixed-window upload counter. A window opens on the first upload after the
/// previous one expired and admits `max` uploads until it closes.
#[derive(Debug, Clone)]
pub struct FixedWindow {
    max: u32,
    window: Duration,
    opened_at: Option<Duration>,
    used: u32,
}

impl FixedWindow {
    pub fn new(max: u32, window: Duration) -> Self {
        Self {
            max,
            window,
            opened_at: None,
            used: 0,
        }
    }

    /// `Err(retry_after_s)` when the window is full; the wait is rounded up
    /// to whole seconds and is at least 1.
    pub fn try_acquire(&mut self, now: Duration) -> Result<(), u64> {
        if let Some(start) = self.opened_at {
            if now >= start + self.window {
                self.opened_at = None;
            }
        }
        let start = *self.opened_at.get_or_insert_with(|| {
            self.used = 0;
            now
        });
        if self.used < self.max {
            self.used += 1;
            return Ok(());
        }
        let left = (start + self.window).saturating_sub(now);
        let secs = left.as_secs() + u64::from(left.subsec_nanos() > 0);
        Err(secs.max(1))
    }
}
