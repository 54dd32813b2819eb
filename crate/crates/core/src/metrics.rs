//! Per-packet bookkeeping and the derived metric families: drops,
//! end-to-end delay, delay variation, traffic received and per-router
//! queuing delay.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::kernel::SimTime;
use crate::qdisc::{ClassMap, TrafficClass};
use crate::topology::NodeId;
use crate::traffic::{FlowId, Packet};

/// Gain of the smoothed interarrival-jitter estimator.
pub const JITTER_GAIN: f64 = 1.0 / 16.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("packet {id} was never delivered")]
    NotDelivered { id: u64 },
    #[error("packet {id} for node {dst} was delivered to node {at}")]
    WrongDestination { id: u64, dst: NodeId, at: NodeId },
    #[error("queuing delay needs per-hop detail; run with `--detail per-hop` or set `detail = per-hop` in [sim]")]
    DetailDisabled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Detail {
    #[default]
    Summary,
    PerHop,
}

impl FromStr for Detail {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summary" => Ok(Detail::Summary),
            "per-hop" => Ok(Detail::PerHop),
            other => Err(format!("unknown detail level `{other}` (expected summary or per-hop)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopRecord {
    pub node: NodeId,
    pub enqueued: SimTime,
    pub dequeued: Option<SimTime>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PacketRecord {
    pub id: u64,
    pub flow: FlowId,
    pub class: TrafficClass,
    pub size: u32,
    pub created: SimTime,
    pub delivered: Option<SimTime>,
    pub dropped: Option<(NodeId, SimTime)>,
    pub hops: Vec<HopRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Delivered,
    Dropped,
    InFlight,
}

impl PacketRecord {
    pub fn outcome(&self) -> Outcome {
        match (self.delivered, self.dropped) {
            (Some(_), _) => Outcome::Delivered,
            (None, Some(_)) => Outcome::Dropped,
            (None, None) => Outcome::InFlight,
        }
    }
}

pub fn e2e_delay(r: &PacketRecord) -> Result<f64, MetricsError> {
    r.delivered
        .map(|d| d - r.created)
        .ok_or(MetricsError::NotDelivered { id: r.id })
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population variance of end-to-end delays; `None` below two samples.
pub fn delay_variation(delays: &[f64]) -> Option<f64> {
    if delays.len() < 2 {
        return None;
    }
    let m = mean(delays)?;
    Some(delays.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / delays.len() as f64)
}

/// Smoothed mean of successive delay differences (interarrival jitter),
/// fed with delays in arrival order. `None` below two samples.
pub fn jitter_rfc(delays: &[f64]) -> Option<f64> {
    if delays.len() < 2 {
        return None;
    }
    Some(
        delays
            .windows(2)
            .fold(0.0, |j, w| j + ((w[1] - w[0]).abs() - j) * JITTER_GAIN),
    )
}

/// A `(window start, value)` pair.
pub type Point = (f64, f64);

#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputPoint {
    pub time: f64,
    pub bytes_per_s: f64,
    pub packets_per_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DropReport {
    pub per_node: BTreeMap<NodeId, u64>,
    pub total: u64,
    /// Drops per second in each window.
    pub rate: Vec<Point>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassSummary {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub mean_delay: Option<f64>,
    pub max_delay: Option<f64>,
    pub delay_var: Option<f64>,
    pub throughput_bps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub classes: Vec<(TrafficClass, ClassSummary)>,
    pub total: ClassSummary,
}

impl Summary {
    pub fn class(&self, class: TrafficClass) -> &ClassSummary {
        &self
            .classes
            .iter()
            .find(|(c, _)| *c == class)
            .expect("summary has a row per class")
            .1
    }
}

#[derive(Clone, Debug)]
pub struct MetricStore {
    records: Vec<PacketRecord>,
    window: f64,
    warmup: f64,
    detail: Detail,
    end: SimTime,
}

impl MetricStore {
    pub fn new(window: f64, warmup: f64, detail: Detail) -> Self {
        assert!(window > 0.0, "window must be positive");
        Self {
            records: Vec::new(),
            window,
            warmup,
            detail,
            end: SimTime::ZERO,
        }
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn warmup(&self) -> f64 {
        self.warmup
    }

    pub fn detail(&self) -> Detail {
        self.detail
    }

    pub fn end(&self) -> SimTime {
        self.end
    }

    pub fn finish(&mut self, end: SimTime) {
        self.end = end;
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn record(&self, id: u64) -> &PacketRecord {
        &self.records[id as usize]
    }

    /// Registers a freshly generated packet. Ids must be dense from zero.
    pub fn record_sent(&mut self, p: &Packet) {
        assert_eq!(p.id as usize, self.records.len(), "packet ids must be dense");
        self.records.push(PacketRecord {
            id: p.id,
            flow: p.flow,
            class: p.class,
            size: p.size,
            created: p.created,
            delivered: None,
            dropped: None,
            hops: Vec::new(),
        });
    }

    pub fn record_enqueue(&mut self, id: u64, node: NodeId, now: SimTime) {
        if self.detail == Detail::PerHop {
            self.records[id as usize].hops.push(HopRecord {
                node,
                enqueued: now,
                dequeued: None,
            });
        }
    }

    pub fn record_dequeue(&mut self, id: u64, node: NodeId, now: SimTime) {
        if self.detail == Detail::PerHop {
            let hop = self.records[id as usize]
                .hops
                .last_mut()
                .filter(|h| h.node == node && h.dequeued.is_none())
                .expect("dequeue matches the latest enqueue");
            hop.dequeued = Some(now);
        }
    }

    pub fn record_drop(&mut self, id: u64, node: NodeId, now: SimTime) {
        self.records[id as usize].dropped = Some((node, now));
    }

    /// Terminal delivery of `p` at host `at`.
    pub fn sink_receive(&mut self, p: &Packet, at: NodeId, now: SimTime) -> Result<(), MetricsError> {
        if p.dst != at {
            return Err(MetricsError::WrongDestination {
                id: p.id,
                dst: p.dst,
                at,
            });
        }
        self.records[p.id as usize].delivered = Some(now);
        Ok(())
    }

    fn in_stats(&self, r: &PacketRecord) -> bool {
        r.created.secs() >= self.warmup
    }

    fn window_count(&self) -> usize {
        (self.end.secs() / self.window).ceil() as usize
    }

    fn window_of(&self, t: SimTime) -> usize {
        let n = self.window_count().max(1);
        ((t.secs() / self.window).floor() as usize).min(n - 1)
    }

    fn window_start(&self, k: usize) -> f64 {
        k as f64 * self.window
    }

    /// Delivered records of `class` in arrival order, with their delays.
    fn deliveries(&self, class: TrafficClass) -> Vec<(SimTime, f64)> {
        let mut out: Vec<(SimTime, u64, f64)> = self
            .records
            .iter()
            .filter(|r| r.class == class && self.in_stats(r))
            .filter_map(|r| r.delivered.map(|d| (d, r.id, d - r.created)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        out.into_iter().map(|(d, _, delay)| (d, delay)).collect()
    }

    fn per_window<F>(&self, samples: &[(SimTime, f64)], reduce: F) -> Vec<Point>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); self.window_count()];
        for &(t, v) in samples {
            if !buckets.is_empty() {
                let k = self.window_of(t);
                buckets[k].push(v);
            }
        }
        buckets
            .iter()
            .enumerate()
            .filter_map(|(k, b)| reduce(b).map(|v| (self.window_start(k), v)))
            .collect()
    }

    /// End-to-end delays of delivered packets of `class`, in arrival order.
    pub fn delays(&self, class: TrafficClass) -> Vec<f64> {
        self.deliveries(class).into_iter().map(|(_, d)| d).collect()
    }

    /// Mean end-to-end delay per window; windows without deliveries are omitted.
    pub fn delay_series(&self, class: TrafficClass) -> Vec<Point> {
        self.per_window(&self.deliveries(class), mean)
    }

    pub fn delay_variation_series(&self, class: TrafficClass) -> Vec<Point> {
        self.per_window(&self.deliveries(class), delay_variation)
    }

    /// Running jitter estimate sampled at the last delivery of each window.
    pub fn jitter_series(&self, class: TrafficClass) -> Vec<Point> {
        let deliveries = self.deliveries(class);
        let mut running = Vec::with_capacity(deliveries.len());
        let mut j = 0.0;
        for (i, &(t, d)) in deliveries.iter().enumerate() {
            if i > 0 {
                j += ((d - deliveries[i - 1].1).abs() - j) * JITTER_GAIN;
                running.push((t, j));
            }
        }
        self.per_window(&running, |xs| xs.last().copied())
    }

    pub fn traffic_received(&self, class: TrafficClass) -> Vec<ThroughputPoint> {
        let n = self.window_count();
        let mut bytes = vec![0u64; n];
        let mut packets = vec![0u64; n];
        for r in self.records.iter().filter(|r| r.class == class) {
            if let Some(d) = r.delivered.filter(|d| d.secs() >= self.warmup) {
                let k = self.window_of(d);
                bytes[k] += u64::from(r.size);
                packets[k] += 1;
            }
        }
        (0..n)
            .map(|k| ThroughputPoint {
                time: self.window_start(k),
                bytes_per_s: bytes[k] as f64 / self.window,
                packets_per_s: packets[k] as f64 / self.window,
            })
            .collect()
    }

    pub fn drops(&self, class: TrafficClass) -> DropReport {
        let n = self.window_count();
        let mut report = DropReport {
            rate: (0..n).map(|k| (self.window_start(k), 0.0)).collect(),
            ..DropReport::default()
        };
        for r in self.records.iter().filter(|r| r.class == class) {
            if let Some((node, t)) = r.dropped {
                *report.per_node.entry(node).or_default() += 1;
                report.total += 1;
                if t.secs() >= self.warmup {
                    let k = self.window_of(t);
                    report.rate[k].1 += 1.0 / self.window;
                }
            }
        }
        report
    }

    fn queuing_samples(&self, node: NodeId) -> Result<Vec<(SimTime, f64)>, MetricsError> {
        if self.detail != Detail::PerHop {
            return Err(MetricsError::DetailDisabled);
        }
        let mut samples: Vec<(SimTime, f64)> = self
            .records
            .iter()
            .flat_map(|r| r.hops.iter())
            .filter(|h| h.node == node && h.enqueued.secs() >= self.warmup)
            .filter_map(|h| h.dequeued.map(|d| (d, d - h.enqueued)))
            .collect();
        samples.sort_by_key(|s| s.0);
        Ok(samples)
    }

    /// Mean time between enqueue and dequeue at `node`, per window.
    pub fn queuing_delay(&self, node: NodeId) -> Result<Vec<Point>, MetricsError> {
        Ok(self.per_window(&self.queuing_samples(node)?, mean))
    }

    /// Mean queuing delay at `node` over the whole run (after warmup) and the
    /// number of samples behind it.
    pub fn mean_queuing_delay(&self, node: NodeId) -> Result<(Option<f64>, usize), MetricsError> {
        let samples: Vec<f64> = self.queuing_samples(node)?.into_iter().map(|(_, q)| q).collect();
        Ok((mean(&samples), samples.len()))
    }

    /// Routers that recorded at least one queue visit.
    pub fn queuing_nodes(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self
            .records
            .iter()
            .flat_map(|r| r.hops.iter().map(|h| h.node))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn summarize(&self) -> Summary {
        let span = self.end.secs() - self.warmup;
        let mut counts: ClassMap<ClassSummary> = Default::default();
        let mut delays: ClassMap<Vec<f64>> = Default::default();
        let mut bytes: ClassMap<u64> = [0; 3];
        for r in &self.records {
            let c = r.class.index();
            let s = &mut counts[c];
            s.sent += 1;
            match r.outcome() {
                Outcome::Delivered => s.delivered += 1,
                Outcome::Dropped => s.dropped += 1,
                Outcome::InFlight => s.in_flight += 1,
            }
            if let Some(d) = r.delivered {
                if self.in_stats(r) {
                    delays[c].push(d - r.created);
                }
                if d.secs() >= self.warmup {
                    bytes[c] += u64::from(r.size);
                }
            }
        }
        let finish = |s: &mut ClassSummary, delays: &[f64], bytes: u64| {
            s.mean_delay = mean(delays);
            s.max_delay = delays.iter().copied().reduce(f64::max);
            s.delay_var = delay_variation(delays);
            s.throughput_bps = if span > 0.0 { bytes as f64 * 8.0 / span } else { 0.0 };
        };
        let mut total = ClassSummary::default();
        for c in 0..3 {
            finish(&mut counts[c], &delays[c], bytes[c]);
            total.sent += counts[c].sent;
            total.delivered += counts[c].delivered;
            total.dropped += counts[c].dropped;
            total.in_flight += counts[c].in_flight;
        }
        let all: Vec<f64> = delays.concat();
        finish(&mut total, &all, bytes.iter().sum());
        Summary {
            classes: TrafficClass::ALL.into_iter().zip(counts).collect(),
            total,
        }
    }
}
