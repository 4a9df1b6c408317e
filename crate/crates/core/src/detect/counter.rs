use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::DetectorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    /// Count flags among the last `n_window` intervals; alert on a flagged
    /// interval once the count exceeds `nbr_incr`, then start over.
    Window,
    /// Lifetime counter checked before it is incremented and never reset:
    /// every exceedance after the first `nbr_incr + 1` alerts.
    Literal,
}

/// Successive-increase counter of a home detector.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagWindow {
    mode: CounterMode,
    nbr_incr: usize,
    n_window: usize,
    flags: VecDeque<bool>,
    counter: usize,
}

impl FlagWindow {
    pub fn new(params: DetectorParams) -> Self {
        FlagWindow {
            mode: params.counter_mode,
            nbr_incr: params.nbr_incr,
            n_window: params.n_window.max(1),
            flags: VecDeque::with_capacity(params.n_window.max(1) + 1),
            counter: 0,
        }
    }

    /// Records the next interval's flag and reports whether it alerts.
    pub fn push(&mut self, flagged: bool) -> bool {
        match self.mode {
            CounterMode::Window => {
                self.flags.push_back(flagged);
                if self.flags.len() > self.n_window {
                    self.flags.pop_front();
                }
                self.counter = self.flags.iter().filter(|&&f| f).count();
                if flagged && self.counter > self.nbr_incr {
                    self.flags.clear();
                    self.counter = 0;
                    return true;
                }
                false
            }
            CounterMode::Literal => {
                if !flagged {
                    return false;
                }
                if self.counter > self.nbr_incr {
                    return true;
                }
                self.counter += 1;
                false
            }
        }
    }

    /// Flags currently counted.
    pub fn count(&self) -> usize {
        self.counter
    }

    pub fn reset(&mut self) {
        self.flags.clear();
        self.counter = 0;
    }
}
