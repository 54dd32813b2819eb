//! Discrete-event kernel: a virtual clock plus an event calendar that is
//! drained in strict `(time, seq)` order.
//!
//! Events scheduled for the same instant are delivered in the order they
//! were scheduled, so a run is fully reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

/// A point on the simulation clock, in seconds.
///
/// Always finite and non-negative. Ordered totally so it can key the
/// calendar heap.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn from_secs(secs: f64) -> Result<Self, KernelError> {
        if secs.is_finite() && secs >= 0.0 {
            Ok(SimTime(secs))
        } else {
            Err(KernelError::InvalidTime(secs))
        }
    }

    pub fn secs(self) -> f64 {
        self.0
    }

    pub fn max(self, other: SimTime) -> SimTime {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    /// Panics if the result would leave the valid clock range; every delay in
    /// the simulator is a non-negative finite quantity.
    fn add(self, rhs: f64) -> SimTime {
        let t = self.0 + rhs;
        assert!(t.is_finite() && t >= 0.0, "clock arithmetic out of range: {t}");
        SimTime(t)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("event scheduled at {at} but the clock already reads {now}")]
    ScheduledInPast { at: SimTime, now: SimTime },
    #[error("invalid simulation time {0}")]
    InvalidTime(f64),
}

/// Handle returned by [`EventCalendar::schedule`]; permits cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(u64);

impl EventId {
    pub fn seq(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub payload: P,
}

struct Entry<P>(Event<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}

impl<P> Eq for Entry<P> {}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    // BinaryHeap is a max-heap; reverse so the smallest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.time, other.0.seq).cmp(&(self.0.time, self.0.seq))
    }
}

/// Pending events ordered by `(time, seq)`, plus the clock they drive.
pub struct EventCalendar<P> {
    heap: BinaryHeap<Entry<P>>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    now: SimTime,
}

impl<P> Default for EventCalendar<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventCalendar<P> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of live (not cancelled) events.
    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn schedule(&mut self, time: SimTime, payload: P) -> Result<EventId, KernelError> {
        if time < self.now {
            return Err(KernelError::ScheduledInPast {
                at: time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { time, seq, payload }));
        Ok(EventId(seq))
    }

    /// Cancels a pending event. Returns false if it was already delivered,
    /// already cancelled, or never existed.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if id.0 >= self.next_seq || self.cancelled.contains(&id.0) {
            return false;
        }
        if !self.heap.iter().any(|e| e.0.seq == id.0) {
            return false;
        }
        self.cancelled.insert(id.0)
    }

    /// Time of the earliest live event, without removing it.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.discard_cancelled_head();
        self.heap.peek().map(|e| e.0.time)
    }

    /// Removes the earliest live event and advances the clock to its time.
    pub fn pop_next(&mut self) -> Option<Event<P>> {
        self.discard_cancelled_head();
        let Entry(ev) = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
    }

    fn discard_cancelled_head(&mut self) {
        while let Some(head) = self.heap.peek() {
            if self.cancelled.remove(&head.0.seq) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub events_processed: u64,
    pub final_clock: SimTime,
}
