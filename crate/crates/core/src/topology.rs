//! Network graph, the step-topology builder, static routing and link timing.

use std::collections::VecDeque;

use thiserror::Error;

use crate::kernel::SimTime;

pub type NodeId = usize;
pub type LinkId = usize;

/// Default per-link propagation delay (LAN scale).
pub const DEFAULT_PROP_DELAY: f64 = 5e-6;
/// 10BaseT.
pub const DEFAULT_LINK_RATE: f64 = 10_000_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("step topology needs at least one step and one node per step (got {steps} x {nodes_per_step})")]
    EmptyStep { steps: usize, nodes_per_step: usize },
    #[error("node {0} does not exist")]
    NoSuchNode(NodeId),
    #[error("node {0} is a host; hosts can only attach to routers")]
    NotARouter(NodeId),
    #[error("node {dst} is unreachable from node {src}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error("invalid link profile: rate {rate} bps, propagation delay {prop_delay} s")]
    BadLinkProfile { rate: f64, prop_delay: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Router { step: usize, offset: usize },
    Host,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Attached links, in attachment order. A router's output port `i`
    /// transmits on `links[i]`.
    pub links: Vec<LinkId>,
}

impl Node {
    pub fn is_router(&self) -> bool {
        matches!(self.kind, NodeKind::Router { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkProfile {
    pub rate_bps: f64,
    pub prop_delay: f64,
}

impl Default for LinkProfile {
    fn default() -> Self {
        Self {
            rate_bps: DEFAULT_LINK_RATE,
            prop_delay: DEFAULT_PROP_DELAY,
        }
    }
}

impl LinkProfile {
    fn validate(self) -> Result<Self, TopologyError> {
        if self.rate_bps > 0.0
            && self.rate_bps.is_finite()
            && self.prop_delay >= 0.0
            && self.prop_delay.is_finite()
        {
            Ok(self)
        } else {
            Err(TopologyError::BadLinkProfile {
                rate: self.rate_bps,
                prop_delay: self.prop_delay,
            })
        }
    }
}

/// Which way a packet crosses a link: from `endpoints.0` to `endpoints.1`
/// is `Forward`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Reverse => 1,
        }
    }
}

/// Full-duplex point-to-point link; each direction serializes independently.
#[derive(Clone, Debug)]
pub struct Link {
    pub endpoints: (NodeId, NodeId),
    pub profile: LinkProfile,
    busy_until: [SimTime; 2],
}

impl Link {
    pub fn new(a: NodeId, b: NodeId, profile: LinkProfile) -> Self {
        Self {
            endpoints: (a, b),
            profile,
            busy_until: [SimTime::ZERO; 2],
        }
    }

    pub fn rate_bps(&self) -> f64 {
        self.profile.rate_bps
    }

    pub fn prop_delay(&self) -> f64 {
        self.profile.prop_delay
    }

    /// Direction of travel when leaving `from`, and the node at the far end.
    pub fn leaving(&self, from: NodeId) -> (Direction, NodeId) {
        if self.endpoints.0 == from {
            (Direction::Forward, self.endpoints.1)
        } else {
            debug_assert_eq!(self.endpoints.1, from);
            (Direction::Reverse, self.endpoints.0)
        }
    }

    pub fn busy_until(&self, dir: Direction) -> SimTime {
        self.busy_until[dir.index()]
    }

    /// Serializes `size_bits` onto the link in direction `dir`.
    ///
    /// Transmission starts once the direction is free and cannot be
    /// interrupted. Returns `(depart, arrive)` where `depart` is the instant
    /// the last bit leaves and `arrive` adds the propagation delay.
    pub fn transmit(&mut self, dir: Direction, size_bits: f64, now: SimTime) -> (SimTime, SimTime) {
        let start = now.max(self.busy_until[dir.index()]);
        let depart = start + transmission_time(size_bits, self.profile.rate_bps);
        self.busy_until[dir.index()] = depart;
        (depart, depart + self.profile.prop_delay)
    }
}

pub fn transmission_time(size_bits: f64, rate_bps: f64) -> f64 {
    debug_assert!(rate_bps > 0.0);
    size_bits / rate_bps
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepParams {
    pub steps: usize,
    pub nodes_per_step: usize,
    pub link: LinkProfile,
}

#[derive(Clone, Debug)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// `next_hop[src][dst]`; `None` on the diagonal.
    next_hop: Vec<Vec<Option<NodeId>>>,
}

impl Topology {
    /// Staircase chain of `steps * nodes_per_step` routers.
    ///
    /// Each step is a horizontal run of `nodes_per_step` routers linked in
    /// sequence; the last router of step `i` is joined to the first router of
    /// step `i + 1` by a riser link.
    pub fn step(params: StepParams) -> Result<Self, TopologyError> {
        if params.steps == 0 || params.nodes_per_step == 0 {
            return Err(TopologyError::EmptyStep {
                steps: params.steps,
                nodes_per_step: params.nodes_per_step,
            });
        }
        let profile = params.link.validate()?;
        let mut topo = Topology {
            nodes: Vec::new(),
            links: Vec::new(),
            next_hop: Vec::new(),
        };
        for step in 0..params.steps {
            for offset in 0..params.nodes_per_step {
                let id = topo.push_node(NodeKind::Router { step, offset });
                if id > 0 {
                    topo.push_link(id - 1, id, profile);
                }
            }
        }
        topo.next_hop = compute_routes(&topo)?;
        Ok(topo)
    }

    /// Appends a host linked to `router` and extends the routing table.
    pub fn attach_host(&mut self, router: NodeId, profile: LinkProfile) -> Result<NodeId, TopologyError> {
        let kind = self.nodes.get(router).ok_or(TopologyError::NoSuchNode(router))?.kind;
        if kind == NodeKind::Host {
            return Err(TopologyError::NotARouter(router));
        }
        let profile = profile.validate()?;
        let host = self.push_node(NodeKind::Host);
        self.push_link(router, host, profile);
        self.next_hop = compute_routes(self)?;
        Ok(host)
    }

    fn push_node(&mut self, kind: NodeKind) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            kind,
            links: Vec::new(),
        });
        id
    }

    fn push_link(&mut self, a: NodeId, b: NodeId, profile: LinkProfile) -> LinkId {
        let id = self.links.len();
        self.links.push(Link::new(a, b, profile));
        self.nodes[a].links.push(id);
        self.nodes[b].links.push(id);
        id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn link_mut(&mut self, id: LinkId) -> &mut Link {
        &mut self.links[id]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.nodes[id].links.len()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id]
            .links
            .iter()
            .map(move |&l| self.links[l].leaving(id).1)
    }

    pub fn next_hop(&self, from: NodeId, dst: NodeId) -> Option<NodeId> {
        self.next_hop.get(from)?.get(dst).copied().flatten()
    }

    /// Index into `node(from).links` of the port facing `to`.
    pub fn port_towards(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.nodes[from]
            .links
            .iter()
            .position(|&l| self.links[l].leaving(from).1 == to)
    }

    /// Full node sequence from `src` to `dst`, inclusive; empty when equal.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Vec<NodeId> {
        if src == dst {
            return Vec::new();
        }
        let mut path = vec![src];
        let mut at = src;
        while at != dst {
            match self.next_hop(at, dst) {
                Some(n) if path.len() <= self.nodes.len() => {
                    path.push(n);
                    at = n;
                }
                _ => return Vec::new(),
            }
        }
        path
    }

    /// Sum of serialization plus propagation along the route for a packet
    /// of `size_bits`, ignoring queuing.
    pub fn path_latency(&self, src: NodeId, dst: NodeId, size_bits: f64) -> f64 {
        self.route(src, dst)
            .windows(2)
            .map(|w| {
                let port = self.port_towards(w[0], w[1]).expect("route follows links");
                let link = &self.links[self.nodes[w[0]].links[port]];
                transmission_time(size_bits, link.rate_bps()) + link.prop_delay()
            })
            .sum()
    }
}

/// Minimum-hop next-hop table for every ordered node pair.
///
/// Runs one BFS per destination. Among neighbours one hop closer to the
/// destination, the lowest node id wins.
pub fn compute_routes(topo: &Topology) -> Result<Vec<Vec<Option<NodeId>>>, TopologyError> {
    let n = topo.nodes.len();
    let mut table = vec![vec![None; n]; n];
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for dst in 0..n {
        dist.fill(usize::MAX);
        dist[dst] = 0;
        queue.push_back(dst);
        while let Some(u) = queue.pop_front() {
            for v in topo.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for src in 0..n {
            if src == dst {
                continue;
            }
            if dist[src] == usize::MAX {
                return Err(TopologyError::Unreachable { src, dst });
            }
            table[src][dst] = topo.neighbors(src).filter(|&v| dist[v] + 1 == dist[src]).min();
        }
    }
    Ok(table)
}
