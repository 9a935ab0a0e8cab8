//! Sliding contact history per peer and the link weight derived from it.
//!
//! A window of `size` seconds ending at `now` is split into contact
//! intervals and gaps. Over the window, `f(t)` is the time remaining until
//! the next encounter: zero inside a contact, falling linearly to zero across
//! each gap. The gap after the last contact runs to the window end, which
//! stands in for the next encounter. Every gap of length `g` therefore adds
//! `g^2 / 2` to the integral of `f`, and the weight is `size / integral`.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::graph::NodeId;

/// Simulation time in seconds.
pub type Seconds = f64;

#[derive(Debug, Error, PartialEq)]
pub enum ContactError {
    #[error("peer {peer}: encounter at {at} while a contact is still open")]
    AlreadyOpen { peer: NodeId, at: Seconds },
    #[error("peer {peer}: encounter at {at} precedes the end of the last contact ({last_end})")]
    OutOfOrder {
        peer: NodeId,
        at: Seconds,
        last_end: Seconds,
    },
    #[error("peer {peer}: departure at {at} without an open contact")]
    NoOpenContact { peer: NodeId, at: Seconds },
    #[error("peer {peer}: departure at {at} precedes encounter at {start}")]
    DepartureBeforeStart {
        peer: NodeId,
        at: Seconds,
        start: Seconds,
    },
}

/// One contact; `end == None` while the contact is ongoing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactInterval {
    pub start: Seconds,
    pub end: Option<Seconds>,
}

impl ContactInterval {
    pub fn closed(start: Seconds, end: Seconds) -> Self {
        ContactInterval {
            start,
            end: Some(end),
        }
    }

    pub fn open(start: Seconds) -> Self {
        ContactInterval { start, end: None }
    }

    pub fn is_open(&self) -> bool {
        self.end.is_none()
    }
}

/// Friendship score between two nodes. Larger means a tighter tie.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LinkWeight(f64);

impl LinkWeight {
    pub const ZERO: LinkWeight = LinkWeight(0.0);
    /// Returned when the peer was in contact for the entire window.
    pub const MAX_SENTINEL: LinkWeight = LinkWeight(f64::MAX);

    pub fn new(value: f64) -> Self {
        assert!(
            value >= 0.0 && !value.is_nan(),
            "invalid link weight {value}"
        );
        LinkWeight(value.min(f64::MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_sentinel(self) -> bool {
        self.0 == f64::MAX
    }
}

impl fmt::Display for LinkWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_sentinel() {
            f.write_str("MAX")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Contact history one node keeps about one peer.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactWindow {
    peer: NodeId,
    size: Seconds,
    intervals: VecDeque<ContactInterval>,
    now: Seconds,
}

impl ContactWindow {
    pub fn new(peer: NodeId, size: Seconds) -> Self {
        assert!(size > 0.0, "window size must be positive");
        ContactWindow {
            peer,
            size,
            intervals: VecDeque::new(),
            now: f64::NEG_INFINITY,
        }
    }

    pub fn peer(&self) -> NodeId {
        self.peer
    }

    pub fn size(&self) -> Seconds {
        self.size
    }

    pub fn intervals(&self) -> impl ExactSizeIterator<Item = &ContactInterval> {
        self.intervals.iter()
    }

    pub fn is_open(&self) -> bool {
        self.intervals.back().is_some_and(ContactInterval::is_open)
    }

    pub fn record_encounter(&mut self, t: Seconds) -> Result<(), ContactError> {
        match self.intervals.back() {
            Some(last) if last.is_open() => {
                return Err(ContactError::AlreadyOpen {
                    peer: self.peer,
                    at: t,
                })
            }
            Some(&ContactInterval {
                end: Some(last_end),
                ..
            }) if t < last_end => {
                return Err(ContactError::OutOfOrder {
                    peer: self.peer,
                    at: t,
                    last_end,
                })
            }
            _ => {}
        }
        self.intervals.push_back(ContactInterval::open(t));
        Ok(())
    }

    pub fn record_departure(&mut self, t: Seconds) -> Result<(), ContactError> {
        match self.intervals.back_mut() {
            Some(last) if last.is_open() => {
                if t < last.start {
                    return Err(ContactError::DepartureBeforeStart {
                        peer: self.peer,
                        at: t,
                        start: last.start,
                    });
                }
                last.end = Some(t);
                Ok(())
            }
            _ => Err(ContactError::NoOpenContact {
                peer: self.peer,
                at: t,
            }),
        }
    }

    /// Clips history to `[now - size, now]`. Intervals that ended before the
    /// window start are dropped; an open interval is always kept.
    pub fn slide(&mut self, now: Seconds) {
        if now > self.now {
            self.now = now;
        }
        let now = self.now;
        let start = now - self.size;
        self.intervals
            .retain(|iv| iv.end.is_none_or(|e| e >= start));
        for iv in self.intervals.iter_mut() {
            if iv.start < start {
                iv.start = start;
            }
            if let Some(e) = iv.end.as_mut() {
                *e = e.min(now);
            }
        }
    }

    /// Integral of the time-to-next-encounter over the window ending at `now`.
    pub fn remaining_time_integral(&self, now: Seconds) -> f64 {
        let window_start = now - self.size;
        let mut cursor = window_start;
        let mut total = 0.0;
        for iv in &self.intervals {
            let start = iv.start.clamp(window_start, now);
            let end = iv.end.unwrap_or(now).clamp(window_start, now);
            if end < window_start || start > now {
                continue;
            }
            if start > cursor {
                let gap = start - cursor;
                total += gap * gap / 2.0;
            }
            cursor = cursor.max(end);
        }
        if now > cursor {
            let gap = now - cursor;
            total += gap * gap / 2.0;
        }
        total
    }

    pub fn link_weight(&self, now: Seconds) -> LinkWeight {
        let integral = self.remaining_time_integral(now);
        if integral <= 0.0 {
            LinkWeight::MAX_SENTINEL
        } else {
            LinkWeight::new(self.size / integral)
        }
    }
}
