use serde::{Deserialize, Serialize};

/// Milliseconds on the host's clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Millis(pub u64);

impl Millis {
    pub fn from_secs(s: u64) -> Self {
        Self(s * 1000)
    }

    pub fn from_hours(h: u64) -> Self {
        Self(h * 3_600_000)
    }

    pub fn saturating_sub(self, other: Millis) -> Millis {
        Millis(self.0.saturating_sub(other.0))
    }
}

impl std::ops::Add for Millis {
    type Output = Millis;
    fn add(self, rhs: Millis) -> Millis {
        Millis(self.0 + rhs.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerStatus {
    NotStarted,
    /// Started, not expired, scenarios still open.
    Running,
    Locked,
    Expired,
}

/// Twelve-hour window that opens with the first recording of a study day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayTimer {
    pub started_at: Option<Millis>,
    pub duration: Millis,
}

impl DayTimer {
    pub fn new(duration: Millis) -> Self {
        Self { started_at: None, duration }
    }

    /// Starts the timer. Later calls on the same day have no effect.
    pub fn start(&mut self, now: Millis) -> bool {
        if self.started_at.is_some() {
            return false;
        }
        self.started_at = Some(now);
        true
    }

    pub fn expired(&self, now: Millis) -> bool {
        self.started_at.is_some_and(|s| now.saturating_sub(s) >= self.duration)
    }

    pub fn tick(&self, now: Millis, all_done: bool) -> TimerStatus {
        match self.started_at {
            None => TimerStatus::NotStarted,
            Some(_) if self.expired(now) => TimerStatus::Expired,
            Some(_) if all_done => TimerStatus::Locked,
            Some(_) => TimerStatus::Running,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_and_expiry() {
        let mut t = DayTimer::new(Millis::from_hours(12));
        assert_eq!(t.tick(Millis::from_hours(100), true), TimerStatus::NotStarted);
        let start = Millis::from_hours(3);
        assert!(t.start(start));
        assert!(!t.start(start + Millis::from_secs(10)));
        let almost = start + Millis::from_hours(11) + Millis::from_secs(59 * 60);
        assert_eq!(t.tick(almost, true), TimerStatus::Locked);
        assert_eq!(t.tick(almost, false), TimerStatus::Running);
        assert_eq!(t.tick(start + Millis::from_hours(12), true), TimerStatus::Expired);
    }
}
