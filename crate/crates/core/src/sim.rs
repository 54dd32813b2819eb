//! The packet-level engine: hosts emit onto their access links, routers
//! queue on each output port and serialize one packet at a time.

use thiserror::Error;

use crate::kernel::{EventCalendar, KernelError, RunSummary, SimTime};
use crate::metrics::{Detail, MetricStore, MetricsError};
use crate::qdisc::{Classifier, Qdisc, QdiscConfig, QdiscError, Verdict};
use crate::topology::{NodeId, Topology, TopologyError};
use crate::traffic::{FlowId, FlowSource, FlowSpec, Packet, TrafficError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Qdisc(#[from] QdiscError),
    #[error("no route from node {node} to node {dst}")]
    NoRoute { node: NodeId, dst: NodeId },
    #[error("flow {flow} must run between two distinct hosts (src {src}, dst {dst})")]
    BadEndpoints { flow: FlowId, src: NodeId, dst: NodeId },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// `packet` reaches `node` (after any router processing delay).
    PacketArrival { node: NodeId, packet: Packet },
    /// Output port `port` of router `node` finished serializing.
    TransmitComplete { node: NodeId, port: usize },
    GenerateNext { flow: FlowId },
    SimEnd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub seed: u64,
    pub qdisc: QdiscConfig,
    /// Delay between a packet reaching a router and joining an output queue.
    pub processing_delay: f64,
    pub window: f64,
    pub warmup: f64,
    pub detail: Detail,
}

impl EngineConfig {
    pub fn new(qdisc: QdiscConfig) -> Self {
        Self {
            seed: 0,
            qdisc,
            processing_delay: 0.0,
            window: 1.0,
            warmup: 0.0,
            detail: Detail::Summary,
        }
    }
}

struct Port {
    qdisc: Qdisc<Packet>,
    busy: bool,
}

pub struct Simulation {
    cal: EventCalendar<Payload>,
    topo: Topology,
    /// `ports[node][i]` drives `topo.node(node).links[i]`; empty for hosts.
    ports: Vec<Vec<Port>>,
    flows: Vec<FlowSource>,
    classifier: Classifier,
    metrics: MetricStore,
    processing_delay: f64,
    next_packet_id: u64,
    events: u64,
    trace: Option<Vec<(SimTime, u64)>>,
}

impl Simulation {
    pub fn new(topo: Topology, flows: Vec<FlowSpec>, cfg: &EngineConfig) -> Result<Self, SimError> {
        let mut ports = Vec::with_capacity(topo.nodes().len());
        for node in topo.nodes() {
            let mut node_ports = Vec::new();
            if node.is_router() {
                for _ in &node.links {
                    node_ports.push(Port {
                        qdisc: Qdisc::new(&cfg.qdisc)?,
                        busy: false,
                    });
                }
            }
            ports.push(node_ports);
        }
        let mut cal = EventCalendar::new();
        let mut sources = Vec::with_capacity(flows.len());
        for (id, spec) in flows.into_iter().enumerate() {
            let endpoints_ok = spec.src != spec.dst
                && [spec.src, spec.dst]
                    .iter()
                    .all(|&n| n < topo.nodes().len() && !topo.node(n).is_router());
            if !endpoints_ok {
                return Err(SimError::BadEndpoints {
                    flow: id,
                    src: spec.src,
                    dst: spec.dst,
                });
            }
            let source = FlowSource::new(id, spec, cfg.seed)?;
            if let Some(t) = source.first_emission() {
                cal.schedule(t, Payload::GenerateNext { flow: id })?;
            }
            sources.push(source);
        }
        Ok(Self {
            cal,
            topo,
            ports,
            flows: sources,
            classifier: Classifier::default(),
            metrics: MetricStore::new(cfg.window, cfg.warmup, cfg.detail),
            processing_delay: cfg.processing_delay,
            next_packet_id: 0,
            events: 0,
            trace: None,
        })
    }

    /// Keep the `(time, seq)` of every processed event.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> Option<&[(SimTime, u64)]> {
        self.trace.as_deref()
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn metrics(&self) -> &MetricStore {
        &self.metrics
    }

    pub fn into_metrics(self) -> MetricStore {
        self.metrics
    }

    pub fn now(&self) -> SimTime {
        self.cal.now()
    }

    /// Events processed across every call to [`Simulation::run`].
    pub fn events_processed(&self) -> u64 {
        self.events
    }

    /// Packets whose ToS matched no known class.
    pub fn unmapped_tos(&self) -> u64 {
        self.classifier.unmapped()
    }

    pub fn schedule(&mut self, at: SimTime, payload: Payload) -> Result<(), SimError> {
        self.cal.schedule(at, payload)?;
        Ok(())
    }

    /// Processes events with time `<= until` (or until a `SimEnd` event).
    pub fn run(&mut self, until: SimTime) -> Result<RunSummary, SimError> {
        let mut processed = 0;
        while self.cal.peek_time().is_some_and(|t| t <= until) {
            let ev = self.cal.pop_next().expect("peeked");
            processed += 1;
            if let Some(trace) = &mut self.trace {
                trace.push((ev.time, ev.seq));
            }
            match ev.payload {
                Payload::PacketArrival { node, packet } => self.on_arrival(node, packet)?,
                Payload::TransmitComplete { node, port } => {
                    self.ports[node][port].busy = false;
                    self.start_transmission(node, port)?;
                }
                Payload::GenerateNext { flow } => self.on_generate(flow)?,
                Payload::SimEnd => break,
            }
        }
        self.events += processed;
        self.metrics.finish(until.max(self.cal.now()));
        Ok(RunSummary {
            events_processed: processed,
            final_clock: self.cal.now(),
        })
    }

    fn on_generate(&mut self, flow: FlowId) -> Result<(), SimError> {
        let now = self.cal.now();
        let emission = self.flows[flow].generate(now, &mut self.next_packet_id);
        for packet in emission.packets {
            self.metrics.record_sent(&packet);
            self.send_from_host(packet, now)?;
        }
        if let Some(next) = emission.next {
            self.cal.schedule(next, Payload::GenerateNext { flow })?;
        }
        Ok(())
    }

    /// Hosts have no queue: the packet goes straight onto the access link,
    /// behind anything the host is already serializing.
    fn send_from_host(&mut self, packet: Packet, now: SimTime) -> Result<(), SimError> {
        let host = packet.src;
        let link_id = self.topo.node(host).links[0];
        let link = self.topo.link_mut(link_id);
        let (dir, next) = link.leaving(host);
        let (_, arrive) = link.transmit(dir, packet.size_bits(), now);
        self.forward(next, packet, arrive)
    }

    fn forward(&mut self, next: NodeId, mut packet: Packet, arrive: SimTime) -> Result<(), SimError> {
        packet.hops += 1;
        let at = if self.topo.node(next).is_router() {
            arrive + self.processing_delay
        } else {
            arrive
        };
        self.cal.schedule(at, Payload::PacketArrival { node: next, packet })?;
        Ok(())
    }

    fn on_arrival(&mut self, node: NodeId, packet: Packet) -> Result<(), SimError> {
        let now = self.cal.now();
        if !self.topo.node(node).is_router() {
            self.metrics.sink_receive(&packet, node, now)?;
            return Ok(());
        }
        let dst = packet.dst;
        let port = self
            .topo
            .next_hop(node, dst)
            .and_then(|hop| self.topo.port_towards(node, hop))
            .ok_or(SimError::NoRoute { node, dst })?;
        let id = packet.id;
        let class = self.classifier.classify(packet.tos);
        match self.ports[node][port].qdisc.enqueue(class, packet) {
            Verdict::Accepted => self.metrics.record_enqueue(id, node, now),
            Verdict::Dropped(_) => self.metrics.record_drop(id, node, now),
        }
        if !self.ports[node][port].busy {
            self.start_transmission(node, port)?;
        }
        Ok(())
    }

    fn start_transmission(&mut self, node: NodeId, port: usize) -> Result<(), SimError> {
        let now = self.cal.now();
        let Some(packet) = self.ports[node][port].qdisc.dequeue() else {
            return Ok(());
        };
        self.metrics.record_dequeue(packet.id, node, now);
        let link_id = self.topo.node(node).links[port];
        let link = self.topo.link_mut(link_id);
        let (dir, next) = link.leaving(node);
        let (depart, arrive) = link.transmit(dir, packet.size_bits(), now);
        self.ports[node][port].busy = true;
        self.cal.schedule(depart, Payload::TransmitComplete { node, port })?;
        self.forward(next, packet, arrive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdisc::QdiscKind;
    use crate::topology::{LinkProfile, StepParams};
    use crate::traffic::AppParams;

    fn two_routers() -> (Topology, NodeId, NodeId) {
        let mut topo = Topology::step(StepParams {
            steps: 1,
            nodes_per_step: 2,
            link: LinkProfile::default(),
        })
        .unwrap();
        let a = topo.attach_host(0, LinkProfile::default()).unwrap();
        let b = topo.attach_host(1, LinkProfile::default()).unwrap();
        (topo, a, b)
    }

    #[test]
    fn no_flows_processes_nothing() {
        let (topo, _, _) = two_routers();
        let mut sim = Simulation::new(topo, vec![], &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))).unwrap();
        let s = sim.run(SimTime::from_secs(100.0).unwrap()).unwrap();
        assert_eq!(s.events_processed, 0);
        assert_eq!(s.final_clock, SimTime::ZERO);
    }

    #[test]
    fn single_voip_packet_latency() {
        let (topo, a, b) = two_routers();
        let flows = vec![FlowSpec::new(AppParams::voip(), a, b, 0.0, 0.01)];
        let expected = topo.path_latency(a, b, 1280.0);
        let mut sim = Simulation::new(topo, flows, &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))).unwrap();
        sim.run(SimTime::from_secs(1.0).unwrap()).unwrap();
        let r = sim.metrics().record(0);
        let delay = r.delivered.unwrap() - r.created;
        // 3 links of 128 us serialization + 5 us propagation each.
        assert!((expected - 3.0 * (0.000128 + 0.000005)).abs() < 1e-15);
        assert!((delay - expected).abs() < 1e-12);
    }

    #[test]
    fn sim_end_stops_the_run() {
        let (topo, a, b) = two_routers();
        let flows = vec![FlowSpec::new(AppParams::voip(), a, b, 0.0, 10.0)];
        let mut sim = Simulation::new(topo, flows, &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))).unwrap();
        sim.schedule(SimTime::from_secs(0.5).unwrap(), Payload::SimEnd).unwrap();
        let s = sim.run(SimTime::from_secs(10.0).unwrap()).unwrap();
        assert_eq!(s.final_clock.secs(), 0.5);
    }

    #[test]
    fn flows_must_join_hosts() {
        let (topo, a, _) = two_routers();
        let flows = vec![FlowSpec::new(AppParams::voip(), a, 0, 0.0, 1.0)];
        assert!(matches!(
            Simulation::new(topo, flows, &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))),
            Err(SimError::BadEndpoints { .. })
        ));
    }
}
