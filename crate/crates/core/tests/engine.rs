mod common;

use stepnet::metrics::Detail;
use stepnet::qdisc::{QdiscConfig, QdiscKind, TrafficClass};
use stepnet::sim::EngineConfig;
use stepnet::topology::{LinkProfile, StepParams};
use stepnet::traffic::{AppParams, FlowSpec};
use stepnet::{run_scenario, SimTime, Simulation, Topology};

use common::load_scenario;

fn chain(steps: usize, k: usize) -> (Topology, usize, usize) {
    let mut topo = Topology::step(StepParams {
        steps,
        nodes_per_step: k,
        link: LinkProfile::default(),
    })
    .unwrap();
    let a = topo.attach_host(0, LinkProfile::default()).unwrap();
    let b = topo.attach_host(steps * k - 1, LinkProfile::default()).unwrap();
    (topo, a, b)
}

fn secs(t: f64) -> SimTime {
    SimTime::from_secs(t).unwrap()
}

fn mixed_flows(a: usize, b: usize) -> Vec<FlowSpec> {
    let mut flows = Vec::new();
    for i in 0..30 {
        let mut f = FlowSpec::new(AppParams::voip(), a, b, 0.0, 5.0);
        f.start_jitter = 0.02;
        flows.push(f);
        if i < 6 {
            let mut v = FlowSpec::new(AppParams::video(), a, b, 0.0, 5.0);
            v.start_jitter = 0.1;
            flows.push(v);
        }
    }
    flows.push(FlowSpec::new(AppParams::ftp(), a, b, 0.5, 5.0));
    flows
}

#[test]
fn kernel_processes_events_in_time_then_fifo_order() {
    let (topo, a, b) = chain(2, 2);
    let mut sim = Simulation::new(topo, mixed_flows(a, b), &EngineConfig::new(QdiscConfig::new(QdiscKind::Wfq))).unwrap();
    sim.enable_trace();
    sim.run(secs(2.0)).unwrap();
    let trace = sim.trace().unwrap();
    assert!(trace.len() > 1000);
    for w in trace.windows(2) {
        let ((t0, s0), (t1, s1)) = (w[0], w[1]);
        assert!(t0 < t1 || (t0 == t1 && s0 < s1), "{t0}/{s0} before {t1}/{s1}");
    }
}

#[test]
fn one_voip_flow_for_a_second() {
    let (topo, a, b) = chain(1, 2);
    let flows = vec![FlowSpec::new(AppParams::voip(), a, b, 0.0, 1.0)];
    let mut sim = Simulation::new(topo, flows, &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))).unwrap();
    let s = sim.run(secs(1.0)).unwrap();
    assert!(s.events_processed >= 50, "{} events", s.events_processed);
}

#[test]
fn uncongested_flow_sees_only_path_latency() {
    let (topo, a, b) = chain(3, 3);
    let expected = topo.path_latency(a, b, 160.0 * 8.0);
    let flows = vec![FlowSpec::new(AppParams::voip(), a, b, 0.0, 10.0)];
    let mut sim = Simulation::new(topo, flows, &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))).unwrap();
    sim.run(secs(11.0)).unwrap();
    let summary = sim.metrics().summarize();
    let voice = summary.class(TrafficClass::Voice);
    assert_eq!(voice.sent, 500);
    assert_eq!(voice.delivered, 500);
    assert_eq!(voice.dropped, 0);
    // 10 links, each 128 us serialization plus 5 us propagation.
    assert!((expected - 10.0 * 133e-6).abs() < 1e-12);
    for d in sim.metrics().delays(TrafficClass::Voice) {
        assert!((d - expected).abs() < 1e-12, "delay {d} vs {expected}");
    }
}

#[test]
fn delay_never_beats_the_empty_path() {
    let (topo, a, b) = chain(2, 2);
    let flows = mixed_flows(a, b);
    let mut sim = Simulation::new(topo.clone(), flows.clone(), &EngineConfig::new(QdiscConfig::new(QdiscKind::Fifo))).unwrap();
    sim.run(secs(5.0)).unwrap();
    let mut delivered = 0;
    for r in sim.metrics().records() {
        if let Some(at) = r.delivered {
            let spec = &flows[r.flow];
            let floor = topo.path_latency(spec.src, spec.dst, r.size as f64 * 8.0);
            assert!(at - r.created >= floor - 1e-12);
            delivered += 1;
        }
    }
    assert!(delivered > 0);
}

#[test]
fn a_port_sends_one_packet_at_a_time() {
    let (topo, a, b) = chain(1, 2);
    let rate = LinkProfile::default().rate_bps;
    let mut cfg = EngineConfig::new(QdiscConfig::new(QdiscKind::Priority));
    cfg.detail = Detail::PerHop;
    let mut sim = Simulation::new(topo, mixed_flows(a, b), &cfg).unwrap();
    sim.run(secs(5.0)).unwrap();
    // Router 0 forwards everything over its one link towards router 1.
    let mut departures: Vec<(f64, u32)> = sim
        .metrics()
        .records()
        .iter()
        .flat_map(|r| r.hops.iter().filter(|h| h.node == 0).filter_map(move |h| h.dequeued.map(|t| (t.secs(), r.size))))
        .collect();
    departures.sort_by(|x, y| x.0.total_cmp(&y.0));
    assert!(departures.len() > 1000);
    for w in departures.windows(2) {
        let tx = w[0].1 as f64 * 8.0 / rate;
        assert!(w[1].0 >= w[0].0 + tx - 1e-12, "overlap at {}", w[1].0);
    }
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = load_scenario("congested.scn");
    cfg.sim.duration = 5.0;
    let a = run_scenario(&cfg, Some(42)).unwrap();
    let b = run_scenario(&cfg, Some(42)).unwrap();
    assert_eq!(a.metrics.records(), b.metrics.records());
    assert_eq!(a.summary, b.summary);
}

#[test]
fn offered_traffic_does_not_depend_on_discipline() {
    let mut cfg = load_scenario("congested.scn");
    cfg.sim.duration = 5.0;
    let sent: Vec<Vec<u64>> = [QdiscKind::Fifo, QdiscKind::Priority, QdiscKind::Wfq]
        .into_iter()
        .map(|kind| {
            cfg.qdisc.kind = kind;
            let s = run_scenario(&cfg, None).unwrap().metrics.summarize();
            TrafficClass::ALL.iter().map(|&c| s.class(c).sent).collect()
        })
        .collect();
    assert_eq!(sent[0], sent[1]);
    assert_eq!(sent[1], sent[2]);
}

#[test]
fn priority_steadies_voice_compared_to_fifo() {
    let mut cfg = load_scenario("congested.scn");
    cfg.sim.duration = 20.0;
    let mut var = |kind| {
        cfg.qdisc.kind = kind;
        let s = run_scenario(&cfg, None).unwrap().metrics.summarize();
        s.class(TrafficClass::Voice).delay_var.unwrap()
    };
    let fifo = var(QdiscKind::Fifo);
    let pq = var(QdiscKind::Priority);
    assert!(fifo > pq, "fifo {fifo} pq {pq}");
}
