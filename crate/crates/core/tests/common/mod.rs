#![allow(dead_code)]

use std::path::PathBuf;

use stepnet::qdisc::{ClassMap, QdiscConfig, QdiscKind, TrafficClass, Verdict};
use stepnet::scenario::{parse_scenario, ScenarioConfig};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn load_scenario(name: &str) -> ScenarioConfig {
    let text = std::fs::read_to_string(scenario_path(name)).expect("bundled scenario");
    parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const BUNDLED: [&str; 3] = ["table1.scn", "congested.scn", "mm1.scn"];

/// Straightforward reference scheduler: every stored item lives in one
/// arrival-ordered list and each decision is a linear scan over it.
pub struct ReferenceQdisc {
    kind: QdiscKind,
    cfg: QdiscConfig,
    items: Vec<(TrafficClass, u64)>,
    cursor: usize,
    credit: u32,
}

impl ReferenceQdisc {
    pub fn new(cfg: &QdiscConfig) -> Self {
        Self {
            kind: cfg.kind,
            cfg: cfg.clone(),
            items: Vec::new(),
            cursor: 0,
            credit: cfg.wfq_weights[0],
        }
    }

    fn stored(&self, class: TrafficClass) -> usize {
        self.items.iter().filter(|(c, _)| *c == class).count()
    }

    pub fn enqueue(&mut self, class: TrafficClass, id: u64) -> Verdict {
        let full = match self.kind {
            QdiscKind::Fifo => self.items.len() >= self.cfg.fifo_capacity,
            QdiscKind::Priority => self.stored(class) >= self.cfg.pq_capacity[class.index()],
            QdiscKind::Wfq => self.items.len() >= self.cfg.wfq_capacity,
        };
        if full {
            Verdict::Dropped(stepnet::qdisc::DropReason::BufferFull)
        } else {
            self.items.push((class, id));
            Verdict::Accepted
        }
    }

    fn take_first(&mut self, class: TrafficClass) -> Option<u64> {
        let pos = self.items.iter().position(|(c, _)| *c == class)?;
        Some(self.items.remove(pos).1)
    }

    pub fn dequeue(&mut self) -> Option<u64> {
        match self.kind {
            QdiscKind::Fifo => (!self.items.is_empty()).then(|| self.items.remove(0).1),
            QdiscKind::Priority => TrafficClass::ALL.into_iter().find_map(|c| self.take_first(c)),
            QdiscKind::Wfq => {
                if self.items.is_empty() {
                    self.cursor = 0;
                    self.credit = self.cfg.wfq_weights[0];
                    return None;
                }
                loop {
                    if self.credit > 0 {
                        if let Some(id) = self.take_first(TrafficClass::ALL[self.cursor]) {
                            self.credit -= 1;
                            return Some(id);
                        }
                    }
                    self.cursor = (self.cursor + 1) % 3;
                    self.credit = self.cfg.wfq_weights[self.cursor];
                }
            }
        }
    }

    pub fn backlog(&self) -> ClassMap<usize> {
        TrafficClass::ALL.map(|c| self.stored(c))
    }
}
