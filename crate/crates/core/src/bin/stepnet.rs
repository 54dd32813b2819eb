use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stepnet::metrics::Detail;
use stepnet::report::{emit_csv, emit_svg, format_number};
use stepnet::scenario::{parse_scenario, run_scenario, RunResult, ScenarioConfig};
use stepnet::QdiscKind;

#[derive(Parser)]
#[command(name = "stepnet", version, about = "Queuing-discipline simulator for step-topology networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV (and optionally SVG) reports.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        qdisc: Option<QdiscKind>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        detail: Option<Detail>,
        #[arg(long)]
        charts: bool,
    },
    /// Check a scenario file and report every problem found.
    Validate { scenario: PathBuf },
    /// Run a scenario under several disciplines and compare them.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "fifo,pq,wfq")]
        qdisc: Vec<QdiscKind>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        charts: bool,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("in {}", path.display()))
}

fn with_kind(cfg: &ScenarioConfig, kind: QdiscKind) -> ScenarioConfig {
    let mut cfg = cfg.clone();
    cfg.qdisc.kind = kind;
    cfg
}

fn write_reports(result: &RunResult, out: &Path, charts: bool) -> Result<()> {
    emit_csv(result, out)?;
    if charts {
        emit_svg(result, out)?;
    }
    Ok(())
}

fn print_summary(label: &str, result: &RunResult) {
    let s = result.metrics.summarize();
    println!(
        "{label}: {} events, clock {:.6} s",
        result.summary.events_processed,
        result.summary.final_clock.secs()
    );
    println!("  {:<12} {:>9} {:>9} {:>9} {:>9} {:>14}", "class", "sent", "deliv", "dropped", "inflight", "mean_delay_s");
    for (class, c) in &s.classes {
        println!(
            "  {:<12} {:>9} {:>9} {:>9} {:>9} {:>14}",
            class.name(),
            c.sent,
            c.delivered,
            c.dropped,
            c.in_flight,
            c.mean_delay.map(|d| format!("{d:.6}")).unwrap_or_else(|| "-".into())
        );
    }
    if result.unmapped_tos > 0 {
        println!("  {} packet(s) carried an unmapped ToS and were treated as best effort", result.unmapped_tos);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            let cfg = load(&scenario)?;
            let flows: usize = cfg.flows.iter().map(|f| f.count).sum();
            println!(
                "{}: ok ({} routers, {} hosts, {} flows, qdisc {})",
                scenario.display(),
                cfg.topology.steps * cfg.topology.nodes_per_step,
                cfg.topology.hosts.len(),
                flows,
                cfg.qdisc.kind
            );
        }
        Command::Run {
            scenario,
            seed,
            qdisc,
            duration,
            out,
            detail,
            charts,
        } => {
            let mut cfg = load(&scenario)?;
            if let Some(kind) = qdisc {
                cfg.qdisc.kind = kind;
            }
            if let Some(d) = duration {
                if !(d > 0.0 && d.is_finite()) || d <= cfg.sim.warmup {
                    bail!("--duration must be positive and longer than the warmup");
                }
                cfg.sim.duration = d;
            }
            if let Some(d) = detail {
                cfg.sim.detail = d;
            }
            let result = run_scenario(&cfg, seed)?;
            write_reports(&result, &out, charts)?;
            print_summary(cfg.qdisc.kind.name(), &result);
            println!("reports written to {}", out.display());
        }
        Command::Sweep {
            scenario,
            qdisc,
            out,
            seed,
            charts,
        } => {
            if qdisc.is_empty() {
                bail!("--qdisc needs at least one discipline");
            }
            let cfg = load(&scenario)?;
            let results: Vec<(QdiscKind, Result<RunResult>)> = thread::scope(|s| {
                let handles: Vec<_> = qdisc
                    .iter()
                    .map(|&kind| {
                        let cfg = with_kind(&cfg, kind);
                        let dir = out.join(kind.name());
                        (
                            kind,
                            s.spawn(move || -> Result<RunResult> {
                                let result = run_scenario(&cfg, seed)?;
                                write_reports(&result, &dir, charts)?;
                                Ok(result)
                            }),
                        )
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|(k, h)| (k, h.join().expect("sweep worker panicked")))
                    .collect()
            });
            let mut comparison = String::from("qdisc,class,sent,delivered,dropped,mean_delay_s,delay_var_s2,throughput_bps\n");
            for (kind, result) in results {
                let result = result.with_context(|| format!("running {kind}"))?;
                print_summary(kind.name(), &result);
                let summary = result.metrics.summarize();
                for (class, c) in &summary.classes {
                    comparison.push_str(&format!(
                        "{kind},{},{},{},{},{},{},{}\n",
                        class.name(),
                        c.sent,
                        c.delivered,
                        c.dropped,
                        c.mean_delay.map(format_number).unwrap_or_default(),
                        c.delay_var.map(format_number).unwrap_or_default(),
                        format_number(c.throughput_bps)
                    ));
                }
            }
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("comparison.csv");
            std::fs::write(&path, comparison).with_context(|| format!("writing {}", path.display()))?;
            println!("comparison written to {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
