use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use socialdtn::config::ExperimentSpec;
use socialdtn::experiment::{run_experiment, CellResult};

/// Sweep DTN routing protocols over mobility scenarios and write CSV results.
///
/// Every flag can also be set through the matching SOCIALDTN_* environment
/// variable. Flags and variables override values from --config.
#[derive(Parser, Debug)]
#[command(name = "socialdtn", version, about)]
struct Args {
    /// Flat key=value configuration file
    #[arg(long, env = "SOCIALDTN_CONFIG")]
    config: Option<PathBuf>,

    /// Protocols: epidemic, friendship, proposed1, proposed2 (comma separated)
    #[arg(long, env = "SOCIALDTN_PROTOCOL")]
    protocol: Option<String>,

    /// Message TTLs in seconds (comma separated)
    #[arg(long, env = "SOCIALDTN_TTL")]
    ttl: Option<String>,

    /// Node counts (comma separated)
    #[arg(long, env = "SOCIALDTN_NODES")]
    nodes: Option<String>,

    /// Node speeds in m/s (comma separated)
    #[arg(long, env = "SOCIALDTN_SPEED")]
    speed: Option<String>,

    /// Replications per sweep cell
    #[arg(long, env = "SOCIALDTN_RUNS")]
    runs: Option<String>,

    /// Base seed; run r of every cell uses seed + r
    #[arg(long, env = "SOCIALDTN_SEED")]
    seed: Option<String>,

    /// Replay node movement from this trace file
    #[arg(long, env = "SOCIALDTN_TRACE")]
    trace: Option<String>,

    /// Write the generated trace of the first cell here
    #[arg(long, env = "SOCIALDTN_DUMP_TRACE")]
    dump_trace: Option<String>,

    /// Results CSV (stdout if omitted)
    #[arg(long, env = "SOCIALDTN_OUT")]
    out: Option<String>,

    /// Per-message event log of the first run of the first cell
    #[arg(long, env = "SOCIALDTN_EVENT_LOG")]
    event_log: Option<String>,

    /// Suppress per-cell progress on stderr
    #[arg(long, short)]
    quiet: bool,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("protocol", &self.protocol),
            ("ttl", &self.ttl),
            ("nodes", &self.nodes),
            ("speed", &self.speed),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("trace", &self.trace),
            ("dump_trace", &self.dump_trace),
            ("out", &self.out),
            ("event_log", &self.event_log),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let spec = match ExperimentSpec::load(args.config.as_deref(), args.overrides()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let quiet = args.quiet;
    let progress = move |r: &CellResult| {
        if quiet {
            return;
        }
        let c = &r.cell;
        let speed = c
            .speed
            .map_or_else(|| "trace".to_string(), |s| s.to_string());
        match &r.outcome {
            Ok(rep) => eprintln!(
                "{} nodes={} speed={} ttl={}: ratio={:.4} cost={:.4} efficiency={:.4}",
                c.protocol,
                c.nodes,
                speed,
                c.ttl,
                rep.delivery_ratio,
                rep.delivery_cost,
                rep.delivery_efficiency
            ),
            Err(e) => eprintln!(
                "{} nodes={} speed={} ttl={}: FAILED: {e}",
                c.protocol, c.nodes, speed, c.ttl
            ),
        }
    };

    match run_experiment(spec, &progress) {
        Ok(outcome) if outcome.failed == 0 => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("{} cell(s) failed", outcome.failed);
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
