use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};

/// Source of "now" for every timestamp the engine records.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A pinned clock for replayable runs. Each call to `now` returns the current
/// instant and then advances it by `tick`.
#[derive(Debug)]
pub struct ManualClock {
    state: Mutex<DateTime<Utc>>,
    tick: Duration,
}

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self::with_tick(start, Duration::zero())
    }

    pub fn with_tick(start: DateTime<Utc>, tick: Duration) -> Self {
        Self {
            state: Mutex::new(start),
            tick,
        }
    }

    pub fn set(&self, instant: DateTime<Utc>) {
        *self.state.lock().unwrap() = instant;
    }

    pub fn advance(&self, by: Duration) {
        let mut state = self.state.lock().unwrap();
        *state += by;
    }

    pub fn peek(&self) -> DateTime<Utc> {
        *self.state.lock().unwrap()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        let mut state = self.state.lock().unwrap();
        let current = *state;
        *state = current + self.tick;
        current
    }
}
