use std::time::{Duration, Instant};

use treerules_core::selection::Budget;

/// Stops the search once a wall-clock deadline passes. The clock is read
/// every 256 nodes.
#[derive(Debug, Clone)]
pub struct Deadline {
    end: Instant,
    ticks: u64,
    expired: bool,
}

impl Deadline {
    pub fn after(limit: Duration) -> Self {
        Deadline { end: Instant::now() + limit, ticks: 0, expired: false }
    }

    pub fn expired(&self) -> bool {
        self.expired
    }
}

impl Budget for Deadline {
    fn tick(&mut self) -> bool {
        self.ticks += 1;
        if !self.expired && self.ticks.is_multiple_of(256) && Instant::now() >= self.end {
            self.expired = true;
        }
        !self.expired
    }
}
