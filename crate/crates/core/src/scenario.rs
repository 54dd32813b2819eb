//! Scenario files: a sectioned, line-oriented `key = value` format.
//!
//! ```text
//! # comment
//! [sim]
//! duration = 100
//! seed = 1
//!
//! [topology]
//! steps = 2
//! nodes_per_step = 2
//!
//! [qdisc]
//! kind = fifo
//!
//! [host phone]
//! router = 0
//!
//! [flow calls]
//! app = voip
//! src = phone
//! dst = other_phone
//! count = 10
//! ```
//!
//! Parsing collects every problem it finds, each tagged with the line it
//! refers to, instead of stopping at the first.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kernel::SimTime;
use crate::metrics::{Detail, MetricStore};
use crate::qdisc::{QdiscConfig, QdiscKind, TrafficClass};
use crate::sim::{EngineConfig, SimError, Simulation};
use crate::topology::{LinkProfile, NodeId, StepParams, Topology, DEFAULT_LINK_RATE, DEFAULT_PROP_DELAY};
use crate::traffic::{AppKind, AppParams, FlowSpec, DEFAULT_MTU};

#[derive(Clone, Debug, PartialEq)]
pub struct SimSection {
    pub duration: f64,
    pub seed: u64,
    pub window: f64,
    pub warmup: f64,
    pub detail: Detail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HostDecl {
    pub name: String,
    pub router: NodeId,
    pub link: LinkProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologySection {
    pub steps: usize,
    pub nodes_per_step: usize,
    pub link: LinkProfile,
    pub processing_delay: f64,
    pub hosts: Vec<HostDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowDecl {
    pub name: String,
    pub app: AppParams,
    pub src: String,
    pub dst: String,
    pub tos: u8,
    pub start: f64,
    /// Defaults to the run duration.
    pub stop: Option<f64>,
    pub start_jitter: f64,
    pub mtu: u32,
    /// Number of identical flows this entry expands to.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub sim: SimSection,
    pub topology: TopologySection,
    pub qdisc: QdiscConfig,
    pub flows: Vec<FlowDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ScenarioError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid scenario ({} problem(s)):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// One `[kind name]` block and its entries.
struct Section {
    kind: String,
    name: Option<String>,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

struct Reader<'a> {
    section: &'a mut Section,
    issues: &'a mut Vec<Issue>,
}

impl Reader<'_> {
    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        let e = self.section.entries.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn has(&self, key: &str) -> bool {
        self.section.entries.contains_key(key)
    }

    fn header(&self) -> String {
        match &self.section.name {
            Some(n) => format!("[{} {}]", self.section.kind, n),
            None => format!("[{}]", self.section.kind),
        }
    }

    fn missing(&mut self, key: &str) {
        let header = self.header();
        self.issues.push(Issue {
            line: Some(self.section.line),
            message: format!("{header} is missing required key `{key}`"),
        });
    }

    fn error(&mut self, line: usize, message: String) {
        self.issues.push(Issue {
            line: Some(line),
            message,
        });
    }

    fn parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Option<(T, usize)> {
        let (raw, line) = self.raw(key)?;
        let cleaned = raw.replace('_', "");
        match cleaned.parse::<T>() {
            Ok(v) => Some((v, line)),
            Err(_) => {
                self.error(line, format!("`{key}` must be {what}, got `{raw}`"));
                None
            }
        }
    }

    fn real(&mut self, key: &str, positive: bool) -> Option<f64> {
        let (v, line) = self.parsed::<f64>(key, "a number")?;
        let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
        if !ok {
            let rule = if positive { "positive" } else { "non-negative" };
            self.error(line, format!("`{key}` must be {rule}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn count<T: FromStr + PartialOrd + From<u8>>(&mut self, key: &str) -> Option<T> {
        let (v, line) = self.parsed::<T>(key, "a whole number")?;
        if v < T::from(1) {
            self.error(line, format!("`{key}` must be at least 1"));
            return None;
        }
        Some(v)
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.raw(key).map(|(v, _)| v)
    }

    fn choice<T: FromStr<Err = String>>(&mut self, key: &str) -> Option<T> {
        let (raw, line) = self.raw(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(msg) => {
                self.error(line, msg);
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, value: Option<T>) -> Option<T> {
        if value.is_none() && !self.has(key) {
            self.missing(key);
        }
        value
    }

    fn finish(self) {
        let header = self.header();
        for (key, e) in &self.section.entries {
            if !e.used {
                self.issues.push(Issue {
                    line: Some(e.line),
                    message: format!("unknown key `{key}` in {header}"),
                });
            }
        }
    }
}

fn split_sections(text: &str, issues: &mut Vec<Issue>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                issues.push(Issue {
                    line: Some(line),
                    message: format!("malformed section header `{content}`"),
                });
                continue;
            };
            let mut words = inner.split_whitespace();
            let kind = words.next().unwrap_or("").to_string();
            let name = words.next().map(str::to_string);
            if words.next().is_some() {
                issues.push(Issue {
                    line: Some(line),
                    message: format!("section header `{content}` has too many words"),
                });
            }
            sections.push(Section {
                kind,
                name,
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(Issue {
                line: Some(line),
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let Some(section) = sections.last_mut() else {
            issues.push(Issue {
                line: Some(line),
                message: "key outside of any section".to_string(),
            });
            continue;
        };
        let key = key.trim().to_string();
        if let Some(prev) = section.entries.get(&key) {
            issues.push(Issue {
                line: Some(line),
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
            continue;
        }
        section.entries.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
                used: false,
            },
        );
    }
    sections
}

const APP_KEYS: [(&str, AppKind); 8] = [
    ("interval", AppKind::Voip),
    ("payload", AppKind::Voip),
    ("fps", AppKind::Video),
    ("frame_size", AppKind::Video),
    ("inter_request", AppKind::Ftp),
    ("file_size", AppKind::Ftp),
    ("rate", AppKind::Poisson),
    ("mean_size", AppKind::Poisson),
];

impl FromStr for AppKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "voip" => Ok(AppKind::Voip),
            "video" => Ok(AppKind::Video),
            "ftp" => Ok(AppKind::Ftp),
            "poisson" => Ok(AppKind::Poisson),
            other => Err(format!("unknown app `{other}` (expected voip, video, ftp or poisson)")),
        }
    }
}

fn parse_sim(r: &mut Reader) -> Option<SimSection> {
    let duration = r.real("duration", true);
    let duration = r.required("duration", duration);
    let seed = r.parsed::<u64>("seed", "a whole number").map(|v| v.0).unwrap_or(0);
    let window = r.real("window", true).unwrap_or(1.0);
    let warmup = r.real("warmup", false).unwrap_or(0.0);
    let detail = r.choice::<Detail>("detail").unwrap_or_default();
    Some(SimSection {
        duration: duration?,
        seed,
        window,
        warmup,
        detail,
    })
}

fn parse_link(r: &mut Reader, default: LinkProfile) -> LinkProfile {
    LinkProfile {
        rate_bps: r.real("link_rate", true).unwrap_or(default.rate_bps),
        prop_delay: r.real("prop_delay", false).unwrap_or(default.prop_delay),
    }
}

fn parse_topology(r: &mut Reader) -> Option<TopologySection> {
    let steps = r.count::<usize>("steps");
    let steps = r.required("steps", steps);
    let k = r.count::<usize>("nodes_per_step");
    let k = r.required("nodes_per_step", k);
    let link = parse_link(
        r,
        LinkProfile {
            rate_bps: DEFAULT_LINK_RATE,
            prop_delay: DEFAULT_PROP_DELAY,
        },
    );
    let processing_delay = r.real("processing_delay", false).unwrap_or(0.0);
    Some(TopologySection {
        steps: steps?,
        nodes_per_step: k?,
        link,
        processing_delay,
        hosts: Vec::new(),
    })
}

fn parse_qdisc(r: &mut Reader) -> Option<QdiscConfig> {
    let kind = r.choice::<QdiscKind>("kind");
    let kind = r.required("kind", kind)?;
    let mut cfg = QdiscConfig::new(kind);
    if let Some(c) = r.count::<usize>("fifo_capacity") {
        cfg.fifo_capacity = c;
    }
    if let Some(c) = r.count::<usize>("wfq_capacity") {
        cfg.wfq_capacity = c;
    }
    for class in TrafficClass::ALL {
        if let Some(c) = r.count::<usize>(&format!("pq_capacity_{}", class.name())) {
            cfg.pq_capacity[class.index()] = c;
        }
        let key = format!("wfq_weight_{}", class.name());
        if r.has(&key) && kind != QdiscKind::Wfq {
            let (_, line) = r.raw(&key).expect("present");
            r.error(line, format!("`{key}` is only valid when kind = wfq"));
        } else if let Some(w) = r.count::<u32>(&key) {
            cfg.wfq_weights[class.index()] = w;
        }
    }
    Some(cfg)
}

fn parse_host(r: &mut Reader, default_link: LinkProfile) -> Option<(usize, HostDecl)> {
    let router = r.parsed::<usize>("router", "a router index");
    let router = r.required("router", router);
    let link = parse_link(r, default_link);
    let name = r.section.name.clone()?;
    let (router, line) = router?;
    Some((
        line,
        HostDecl {
            name,
            router,
            link,
        },
    ))
}

fn parse_flow(r: &mut Reader) -> Option<FlowDecl> {
    let app = r.choice::<AppKind>("app");
    let app = r.required("app", app);
    let src = r.text("src");
    let src = r.required("src", src);
    let dst = r.text("dst");
    let dst = r.required("dst", dst);
    let tos = r.parsed::<u8>("tos", "an integer 0-255");
    let start = r.real("start", false).unwrap_or(0.0);
    let stop = r.real("stop", true);
    let start_jitter = r.real("start_jitter", false).unwrap_or(0.0);
    let mtu = r.count::<u32>("mtu").unwrap_or(DEFAULT_MTU);
    let count = r.count::<usize>("count").unwrap_or(1);

    let app = app?;
    for (key, owner) in APP_KEYS {
        if owner != app && r.has(key) {
            let (_, line) = r.raw(key).expect("present");
            r.error(line, format!("`{key}` does not apply to app = {}", app.name()));
        }
    }
    let params = match app {
        AppKind::Voip => {
            let AppParams::Voip { interval, payload } = AppParams::voip() else { unreachable!() };
            AppParams::Voip {
                interval: r.real("interval", true).unwrap_or(interval),
                payload: r.count::<u32>("payload").unwrap_or(payload),
            }
        }
        AppKind::Video => {
            let AppParams::Video { fps, frame_size } = AppParams::video() else { unreachable!() };
            AppParams::Video {
                fps: r.real("fps", true).unwrap_or(fps),
                frame_size: r.count::<u32>("frame_size").unwrap_or(frame_size),
            }
        }
        AppKind::Ftp => {
            let AppParams::Ftp {
                inter_request,
                file_size,
            } = AppParams::ftp()
            else {
                unreachable!()
            };
            AppParams::Ftp {
                inter_request: r.real("inter_request", true).unwrap_or(inter_request),
                file_size: r.count::<u32>("file_size").unwrap_or(file_size),
            }
        }
        AppKind::Poisson => {
            let rate = r.real("rate", true);
            let rate = r.required("rate", rate);
            let mean_size = r.real("mean_size", true);
            let mean_size = r.required("mean_size", mean_size);
            AppParams::Poisson {
                rate: rate?,
                mean_size: mean_size?,
            }
        }
    };
    let tos = match tos {
        Some((t, line)) => {
            if app != AppKind::Poisson && t != app.default_tos() {
                r.error(
                    line,
                    format!("tos {t} does not match app {} (expected {})", app.name(), app.default_tos()),
                );
            }
            t
        }
        None => app.default_tos(),
    };
    if let Some(stop) = stop.filter(|&s| s <= start) {
        let line = r.section.entries["stop"].line;
        r.error(line, format!("`stop` ({stop}) must be after `start` ({start})"));
    }
    Some(FlowDecl {
        name: r.section.name.clone().unwrap_or_default(),
        app: params,
        src: src?,
        dst: dst?,
        tos,
        start,
        stop,
        start_jitter,
        mtu,
        count,
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut issues = Vec::new();
    let mut sections = split_sections(text, &mut issues);

    let mut sim = None;
    let mut topology = None;
    let mut qdisc = None;
    let mut hosts: Vec<(usize, HostDecl)> = Vec::new();
    let mut flows: Vec<(usize, FlowDecl)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    // Topology first so host sections can inherit its link profile.
    sections.sort_by_key(|s| s.kind != "topology");
    let mut default_link = LinkProfile::default();

    for section in &mut sections {
        let line = section.line;
        let kind = section.kind.clone();
        let singleton = matches!(kind.as_str(), "sim" | "topology" | "qdisc");
        let named = matches!(kind.as_str(), "host" | "flow");
        if !singleton && !named {
            issues.push(Issue {
                line: Some(line),
                message: format!("unknown section `[{kind}]` (expected sim, topology, qdisc, host or flow)"),
            });
            continue;
        }
        if singleton && section.name.is_some() {
            issues.push(Issue {
                line: Some(line),
                message: format!("section `[{kind}]` takes no name"),
            });
        }
        if named && section.name.is_none() {
            issues.push(Issue {
                line: Some(line),
                message: format!("section `[{kind}]` needs a name, e.g. `[{kind} a]`"),
            });
            continue;
        }
        let key = format!("{kind} {}", section.name.as_deref().unwrap_or(""));
        if let Some(first) = seen.insert(key, line) {
            issues.push(Issue {
                line: Some(line),
                message: format!("duplicate section (first declared on line {first})"),
            });
            continue;
        }
        let mut r = Reader {
            section,
            issues: &mut issues,
        };
        match kind.as_str() {
            "sim" => sim = parse_sim(&mut r),
            "topology" => {
                topology = parse_topology(&mut r);
                if let Some(t) = &topology {
                    default_link = t.link;
                }
            }
            "qdisc" => qdisc = parse_qdisc(&mut r),
            "host" => hosts.extend(parse_host(&mut r, default_link)),
            _ => flows.extend(parse_flow(&mut r).map(|f| (line, f))),
        }
        r.finish();
    }

    for (kind, present) in [
        ("sim", seen.contains_key("sim ")),
        ("topology", seen.contains_key("topology ")),
        ("qdisc", seen.contains_key("qdisc ")),
    ] {
        if !present {
            issues.push(Issue {
                line: None,
                message: format!("missing required section `[{kind}]`"),
            });
        }
    }

    if let Some(t) = &topology {
        let routers = t.steps * t.nodes_per_step;
        for (line, h) in &hosts {
            if h.router >= routers {
                issues.push(Issue {
                    line: Some(*line),
                    message: format!(
                        "host `{}` attaches to router {} but the backbone has routers 0..{}",
                        h.name,
                        h.router,
                        routers - 1
                    ),
                });
            }
        }
    }
    for (line, f) in &flows {
        for end in [&f.src, &f.dst] {
            if !hosts.iter().any(|(_, h)| &h.name == end) {
                issues.push(Issue {
                    line: Some(*line),
                    message: format!("flow `{}` references undeclared host `{end}`", f.name),
                });
            }
        }
        if f.src == f.dst {
            issues.push(Issue {
                line: Some(*line),
                message: format!("flow `{}` has the same source and destination", f.name),
            });
        }
    }
    if let (Some(s), true) = (&sim, issues.is_empty()) {
        if s.warmup >= s.duration {
            issues.push(Issue {
                line: None,
                message: format!("warmup ({}) must be shorter than duration ({})", s.warmup, s.duration),
            });
        }
    }

    issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
    match (sim, topology, qdisc) {
        (Some(sim), Some(mut topology), Some(qdisc)) if issues.is_empty() => {
            topology.hosts = hosts.into_iter().map(|(_, h)| h).collect();
            Ok(ScenarioConfig {
                sim,
                topology,
                qdisc,
                flows: flows.into_iter().map(|(_, f)| f).collect(),
            })
        }
        _ => Err(ScenarioError { issues }),
    }
}

/// Everything a finished run produces.
pub struct RunResult {
    pub config: ScenarioConfig,
    pub metrics: MetricStore,
    pub summary: crate::kernel::RunSummary,
    /// Host names by node id.
    pub hosts: BTreeMap<NodeId, String>,
    pub topology: Topology,
    pub unmapped_tos: u64,
}

/// Builds the network and flows described by `config` and runs it for the
/// configured duration. `seed` overrides the file's seed when given.
pub fn run_scenario(config: &ScenarioConfig, seed: Option<u64>) -> Result<RunResult, SimError> {
    let sim = &config.sim;
    let topo_cfg = &config.topology;
    let mut topo = Topology::step(StepParams {
        steps: topo_cfg.steps,
        nodes_per_step: topo_cfg.nodes_per_step,
        link: topo_cfg.link,
    })?;
    let mut by_name = HashMap::new();
    let mut hosts = BTreeMap::new();
    for h in &topo_cfg.hosts {
        let id = topo.attach_host(h.router, h.link)?;
        by_name.insert(h.name.as_str(), id);
        hosts.insert(id, h.name.clone());
    }
    let mut flows = Vec::new();
    for f in &config.flows {
        let src = by_name[f.src.as_str()];
        let dst = by_name[f.dst.as_str()];
        for _ in 0..f.count {
            flows.push(FlowSpec {
                app: f.app,
                src,
                dst,
                tos: f.tos,
                start: f.start,
                stop: f.stop.unwrap_or(sim.duration).min(sim.duration),
                start_jitter: f.start_jitter,
                mtu: f.mtu,
            });
        }
    }
    let engine_cfg = EngineConfig {
        seed: seed.unwrap_or(sim.seed),
        qdisc: config.qdisc.clone(),
        processing_delay: topo_cfg.processing_delay,
        window: sim.window,
        warmup: sim.warmup,
        detail: sim.detail,
    };
    let mut engine = Simulation::new(topo, flows, &engine_cfg)?;
    let summary = engine.run(SimTime::from_secs(sim.duration)?)?;
    let unmapped_tos = engine.unmapped_tos();
    let topology = engine.topology().clone();
    let mut config = config.clone();
    config.sim.seed = engine_cfg.seed;
    Ok(RunResult {
        config,
        metrics: engine.into_metrics(),
        summary,
        hosts,
        topology,
        unmapped_tos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[sim]
duration = 10
[topology]
steps = 1
nodes_per_step = 2
[qdisc]
kind = fifo
[host a]
router = 0
[host b]
router = 1
[flow v]
app = voip
src = a
dst = b
";

    fn messages(err: &ScenarioError) -> Vec<String> {
        err.issues.iter().map(|i| i.to_string()).collect()
    }

    #[test]
    fn parses_minimal() {
        let cfg = parse_scenario(MINIMAL).unwrap();
        assert_eq!(cfg.sim.duration, 10.0);
        assert_eq!(cfg.topology.hosts.len(), 2);
        assert_eq!(cfg.flows[0].tos, 6);
        assert_eq!(cfg.flows[0].app, AppParams::voip());
        assert_eq!(cfg.qdisc, QdiscConfig::new(QdiscKind::Fifo));
    }

    #[test]
    fn undeclared_host_is_named() {
        let text = MINIMAL.replace("dst = b", "dst = nowhere");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert!(err.issues[0].message.contains("`nowhere`"), "{err}");
    }

    #[test]
    fn empty_file_lists_missing_sections() {
        let err = parse_scenario("").unwrap_err();
        let msgs = messages(&err);
        for s in ["[sim]", "[topology]", "[qdisc]"] {
            assert!(msgs.iter().any(|m| m.contains(s)), "{msgs:?}");
        }
    }

    #[test]
    fn reports_every_problem_with_lines() {
        let text = "
[sim]
duration = -3
bogus = 1
[topology]
steps = 0
nodes_per_step = 2
[qdisc]
kind = fifo
wfq_weight_voice = 5
";
        let err = parse_scenario(text).unwrap_err();
        let msgs = messages(&err);
        assert!(msgs.iter().any(|m| m.starts_with("line 3:") && m.contains("duration")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.starts_with("line 4:") && m.contains("bogus")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.starts_with("line 6:") && m.contains("steps")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.starts_with("line 10:") && m.contains("only valid")), "{msgs:?}");
    }

    #[test]
    fn app_keys_must_match_app() {
        let text = MINIMAL.replace("dst = b", "dst = b\nfile_size = 10");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.issues[0].message.contains("does not apply"));
    }

    #[test]
    fn tos_must_match_app() {
        let text = MINIMAL.replace("dst = b", "dst = b\ntos = 0");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn missing_required_keys() {
        let text = "[sim]\n[topology]\nsteps = 1\n[qdisc]\n";
        let msgs = messages(&parse_scenario(text).unwrap_err());
        assert!(msgs.iter().any(|m| m.contains("`duration`")));
        assert!(msgs.iter().any(|m| m.contains("`nodes_per_step`")));
        assert!(msgs.iter().any(|m| m.contains("`kind`")));
    }

    #[test]
    fn host_on_missing_router() {
        let text = MINIMAL.replace("router = 1", "router = 7");
        let msgs = messages(&parse_scenario(&text).unwrap_err());
        assert!(msgs[0].contains("router 7"));
    }

    #[test]
    fn wfq_weights_parse() {
        let text = MINIMAL.replace("kind = fifo", "kind = wfq\nwfq_weight_voice = 5\nwfq_weight_video = 3\nwfq_weight_best_effort = 1");
        let cfg = parse_scenario(&text).unwrap();
        assert_eq!(cfg.qdisc.wfq_weights, [5, 3, 1]);
    }

    #[test]
    fn count_expands_flows() {
        let text = MINIMAL.replace("dst = b", "dst = b\ncount = 4");
        let cfg = parse_scenario(&text).unwrap();
        let result = run_scenario(&cfg, None).unwrap();
        let flows: std::collections::BTreeSet<_> = result.metrics.records().iter().map(|r| r.flow).collect();
        assert_eq!(flows.len(), 4);
    }
}
