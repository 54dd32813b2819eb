//! Router output-port queuing disciplines: FIFO, strict priority (PQ) and
//! packet-count weighted round robin over a shared buffer (WFQ).
//!
//! All three share one contract: `enqueue` either accepts an item or drops
//! it because a buffer bound is met, and `dequeue` picks the next item to
//! serialize. Service is non-preemptive; the caller dequeues only when the
//! output link is free.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Traffic class, ordered by strict priority (Voice first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrafficClass {
    Voice,
    Video,
    BestEffort,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 3] = [TrafficClass::Voice, TrafficClass::Video, TrafficClass::BestEffort];

    /// Priority rank; 0 is served first.
    pub fn index(self) -> usize {
        match self {
            TrafficClass::Voice => 0,
            TrafficClass::Video => 1,
            TrafficClass::BestEffort => 2,
        }
    }

    pub fn tos(self) -> u8 {
        match self {
            TrafficClass::Voice => 6,
            TrafficClass::Video => 4,
            TrafficClass::BestEffort => 0,
        }
    }

    /// Exact inverse of [`TrafficClass::tos`].
    pub fn from_tos(tos: u8) -> Option<TrafficClass> {
        match tos {
            6 => Some(TrafficClass::Voice),
            4 => Some(TrafficClass::Video),
            0 => Some(TrafficClass::BestEffort),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficClass::Voice => "voice",
            TrafficClass::Video => "video",
            TrafficClass::BestEffort => "best_effort",
        }
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-class values indexed by [`TrafficClass::index`].
pub type ClassMap<T> = [T; 3];

/// Maps a ToS marking to a class, sending unknown markings to best effort.
#[derive(Clone, Debug, Default)]
pub struct Classifier {
    unmapped: u64,
}

impl Classifier {
    pub fn classify(&mut self, tos: u8) -> TrafficClass {
        TrafficClass::from_tos(tos).unwrap_or_else(|| {
            self.unmapped += 1;
            TrafficClass::BestEffort
        })
    }

    pub fn unmapped(&self) -> u64 {
        self.unmapped
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    BufferFull,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Dropped(DropReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdiscKind {
    Fifo,
    Priority,
    Wfq,
}

impl QdiscKind {
    pub fn name(self) -> &'static str {
        match self {
            QdiscKind::Fifo => "fifo",
            QdiscKind::Priority => "pq",
            QdiscKind::Wfq => "wfq",
        }
    }
}

impl fmt::Display for QdiscKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QdiscKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" => Ok(QdiscKind::Fifo),
            "pq" | "priority" => Ok(QdiscKind::Priority),
            "wfq" => Ok(QdiscKind::Wfq),
            other => Err(format!("unknown queuing discipline `{other}` (expected fifo, pq or wfq)")),
        }
    }
}

pub const DEFAULT_CAPACITY: usize = 500;
pub const DEFAULT_WFQ_WEIGHTS: ClassMap<u32> = [60, 40, 10];

#[derive(Clone, Debug, PartialEq)]
pub struct QdiscConfig {
    pub kind: QdiscKind,
    pub fifo_capacity: usize,
    pub pq_capacity: ClassMap<usize>,
    pub wfq_capacity: usize,
    pub wfq_weights: ClassMap<u32>,
}

impl QdiscConfig {
    pub fn new(kind: QdiscKind) -> Self {
        Self {
            kind,
            fifo_capacity: DEFAULT_CAPACITY,
            pq_capacity: [DEFAULT_CAPACITY; 3],
            wfq_capacity: DEFAULT_CAPACITY,
            wfq_weights: DEFAULT_WFQ_WEIGHTS,
        }
    }

    pub fn validate(&self) -> Result<(), QdiscError> {
        let caps = [self.fifo_capacity, self.wfq_capacity]
            .into_iter()
            .chain(self.pq_capacity);
        if caps.into_iter().any(|c| c == 0) {
            return Err(QdiscError::ZeroCapacity);
        }
        if self.wfq_weights.contains(&0) {
            return Err(QdiscError::ZeroWeight);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QdiscError {
    #[error("queue capacities must be at least one packet")]
    ZeroCapacity,
    #[error("round-robin weights must be at least one")]
    ZeroWeight,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Backlog {
    pub per_class: ClassMap<usize>,
    pub total: usize,
}

/// A queuing discipline instance holding items of type `T`.
#[derive(Clone, Debug)]
pub struct Qdisc<T> {
    inner: Discipline<T>,
    drops: ClassMap<u64>,
}

#[derive(Clone, Debug)]
enum Discipline<T> {
    Fifo {
        queue: VecDeque<(TrafficClass, T)>,
        capacity: usize,
    },
    Priority {
        queues: ClassMap<VecDeque<T>>,
        capacity: ClassMap<usize>,
    },
    Wfq(RoundRobin<T>),
}

/// Packet-count weighted round robin.
///
/// Classes are visited in priority order. On each visit a class may send up
/// to its weight in packets; the visit ends early when the class runs dry.
/// Unused credit is forfeited, never carried into the next round.
#[derive(Clone, Debug)]
struct RoundRobin<T> {
    queues: ClassMap<VecDeque<T>>,
    weights: ClassMap<u32>,
    capacity: usize,
    cursor: usize,
    credit: u32,
    stored: usize,
}

impl<T> RoundRobin<T> {
    fn reset_round(&mut self) {
        self.cursor = 0;
        self.credit = self.weights[0];
    }

    fn dequeue(&mut self) -> Option<T> {
        if self.stored == 0 {
            self.reset_round();
            return None;
        }
        loop {
            if self.credit > 0 {
                if let Some(item) = self.queues[self.cursor].pop_front() {
                    self.credit -= 1;
                    self.stored -= 1;
                    return Some(item);
                }
            }
            self.cursor = (self.cursor + 1) % 3;
            self.credit = self.weights[self.cursor];
        }
    }
}

impl<T> Qdisc<T> {
    pub fn new(config: &QdiscConfig) -> Result<Self, QdiscError> {
        config.validate()?;
        let inner = match config.kind {
            QdiscKind::Fifo => Discipline::Fifo {
                queue: VecDeque::new(),
                capacity: config.fifo_capacity,
            },
            QdiscKind::Priority => Discipline::Priority {
                queues: Default::default(),
                capacity: config.pq_capacity,
            },
            QdiscKind::Wfq => Discipline::Wfq(RoundRobin {
                queues: Default::default(),
                weights: config.wfq_weights,
                capacity: config.wfq_capacity,
                cursor: 0,
                credit: config.wfq_weights[0],
                stored: 0,
            }),
        };
        Ok(Self {
            inner,
            drops: [0; 3],
        })
    }

    pub fn kind(&self) -> QdiscKind {
        match self.inner {
            Discipline::Fifo { .. } => QdiscKind::Fifo,
            Discipline::Priority { .. } => QdiscKind::Priority,
            Discipline::Wfq(_) => QdiscKind::Wfq,
        }
    }

    pub fn enqueue(&mut self, class: TrafficClass, item: T) -> Verdict {
        let c = class.index();
        let accepted = match &mut self.inner {
            Discipline::Fifo { queue, capacity } => {
                if queue.len() < *capacity {
                    queue.push_back((class, item));
                    true
                } else {
                    false
                }
            }
            Discipline::Priority { queues, capacity } => {
                if queues[c].len() < capacity[c] {
                    queues[c].push_back(item);
                    true
                } else {
                    false
                }
            }
            Discipline::Wfq(rr) => {
                if rr.stored < rr.capacity {
                    rr.queues[c].push_back(item);
                    rr.stored += 1;
                    true
                } else {
                    false
                }
            }
        };
        if accepted {
            Verdict::Accepted
        } else {
            self.drops[c] += 1;
            Verdict::Dropped(DropReason::BufferFull)
        }
    }

    pub fn dequeue(&mut self) -> Option<T> {
        match &mut self.inner {
            Discipline::Fifo { queue, .. } => queue.pop_front().map(|(_, item)| item),
            Discipline::Priority { queues, .. } => queues.iter_mut().find_map(|q| q.pop_front()),
            Discipline::Wfq(rr) => rr.dequeue(),
        }
    }

    pub fn backlog(&self) -> Backlog {
        let mut per_class = [0usize; 3];
        match &self.inner {
            Discipline::Fifo { queue, .. } => {
                for (class, _) in queue {
                    per_class[class.index()] += 1;
                }
            }
            Discipline::Priority { queues, .. } => {
                for (n, q) in per_class.iter_mut().zip(queues) {
                    *n = q.len();
                }
            }
            Discipline::Wfq(rr) => {
                for (n, q) in per_class.iter_mut().zip(&rr.queues) {
                    *n = q.len();
                }
            }
        }
        Backlog {
            per_class,
            total: per_class.iter().sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.inner {
            Discipline::Fifo { queue, .. } => queue.is_empty(),
            Discipline::Priority { queues, .. } => queues.iter().all(VecDeque::is_empty),
            Discipline::Wfq(rr) => rr.stored == 0,
        }
    }

    pub fn drops(&self) -> ClassMap<u64> {
        self.drops
    }
}
