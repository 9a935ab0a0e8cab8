//! Parameter sweeps: every (nodes, speed, ttl, protocol) cell is replicated
//! and summarised as one CSV row.
//!
//! Columns: `protocol,nodes,speed,ttl,runs,status,delivery_ratio,
//! delivery_cost,delivery_efficiency,undefined_efficiency_runs`, then
//! `ratio_1..ratio_R`, `cost_1..cost_R`, `efficiency_1..efficiency_R` for
//! `R = runs`. Rows follow the sweep order regardless of which cell finishes
//! first. A failed cell has `status=failed` and empty metric fields. `speed`
//! reads `trace` when movement is replayed from a file.

use std::fs::File;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::ExperimentSpec;
use crate::mobility::{Arena, MobilityError, Trace};
use crate::routing::Protocol;
use crate::sim::{
    replicate, write_event_log, ReplicateReport, SimConfig, SimError, Simulation, TraceSource,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing results: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing results: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub protocol: Protocol,
    pub nodes: usize,
    /// `None` when movement comes from a trace file.
    pub speed: Option<f64>,
    pub ttl: f64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<ReplicateReport, String>,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// An experiment spec with any trace file already loaded.
pub struct Experiment {
    spec: ExperimentSpec,
    trace: Option<Arc<Trace>>,
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self, ExperimentError> {
        let trace = match &spec.trace {
            Some(p) => Some(Arc::new(Trace::load(p)?)),
            None => None,
        };
        Ok(Experiment { spec, trace })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    /// Sweep cells in output order: nodes, then speed, then ttl, then protocol.
    pub fn cells(&self) -> Vec<Cell> {
        let (nodes, speeds): (Vec<usize>, Vec<Option<f64>>) = match &self.trace {
            Some(t) => (vec![t.node_count()], vec![None]),
            None => (
                self.spec.node_counts.clone(),
                self.spec.speeds.iter().map(|&s| Some(s)).collect(),
            ),
        };
        let mut cells = Vec::new();
        for &n in &nodes {
            for &speed in &speeds {
                for &ttl in &self.spec.ttls {
                    for &protocol in &self.spec.protocols {
                        cells.push(Cell {
                            protocol,
                            nodes: n,
                            speed,
                            ttl,
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: &Cell) -> SimConfig {
        let s = &self.spec;
        let trace = match (&self.trace, cell.speed) {
            (Some(t), _) => TraceSource::Provided(Arc::clone(t)),
            (None, speed) => TraceSource::RandomWaypoint {
                arena: Arena {
                    width: s.width,
                    height: s.height,
                },
                speed: speed.unwrap_or(1.0),
                pause: s.pause,
            },
        };
        SimConfig {
            trace,
            node_count: cell.nodes,
            comm_range: s.comm_range,
            window: s.window,
            threshold: s.threshold,
            ttl: cell.ttl,
            message_count: s.messages,
            generation_span: s.generation_span,
            hello_period: s.hello_period,
            missed_hello_limit: s.missed_hello_limit,
            protocol: cell.protocol,
            seed: s.seed,
            record_events: false,
        }
    }

    /// Runs every cell; `progress` sees each result as it completes.
    pub fn run_cells(&self, progress: &(dyn Fn(&CellResult) + Sync)) -> Vec<CellResult> {
        self.cells()
            .into_par_iter()
            .map(|cell| {
                let outcome =
                    replicate(&self.cell_config(&cell), self.spec.runs).map_err(|e| e.to_string());
                let result = CellResult { cell, outcome };
                progress(&result);
                result
            })
            .collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "protocol",
            "nodes",
            "speed",
            "ttl",
            "runs",
            "status",
            "delivery_ratio",
            "delivery_cost",
            "delivery_efficiency",
            "undefined_efficiency_runs",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for prefix in ["ratio", "cost", "efficiency"] {
            h.extend((1..=self.spec.runs).map(|r| format!("{prefix}_{r}")));
        }
        h
    }

    pub fn write_csv<W: Write>(
        &self,
        results: &[CellResult],
        out: W,
    ) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let runs = self.spec.runs;
        for r in results {
            let c = &r.cell;
            let mut row = vec![
                c.protocol.to_string(),
                c.nodes.to_string(),
                c.speed
                    .map_or_else(|| "trace".to_string(), |s| s.to_string()),
                c.ttl.to_string(),
                runs.to_string(),
            ];
            match &r.outcome {
                Ok(rep) => {
                    row.push("ok".into());
                    row.push(rep.delivery_ratio.to_string());
                    row.push(rep.delivery_cost.to_string());
                    row.push(rep.delivery_efficiency.to_string());
                    row.push(rep.undefined_efficiency_runs().to_string());
                    row.extend(rep.runs.iter().map(|m| m.delivery_ratio.to_string()));
                    row.extend(rep.runs.iter().map(|m| m.delivery_cost.to_string()));
                    row.extend(rep.runs.iter().map(|m| m.delivery_efficiency.to_string()));
                }
                Err(_) => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat_n(String::new(), 4 + 3 * runs));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the trace of the first cell's first run.
    pub fn dump_first_trace(&self, path: &std::path::Path) -> Result<(), ExperimentError> {
        let Some(first) = self.cells().first().copied() else {
            return Ok(());
        };
        let mut cfg = self.cell_config(&first);
        cfg.ttl = self.spec.ttls.iter().copied().fold(cfg.ttl, f64::max);
        cfg.build_trace()?.save(path)?;
        Ok(())
    }

    /// Re-runs the first cell's first run with event recording on.
    pub fn write_first_event_log(&self, path: &std::path::Path) -> Result<(), ExperimentError> {
        let Some(first) = self.cells().first().copied() else {
            return Ok(());
        };
        let mut cfg = self.cell_config(&first);
        cfg.record_events = true;
        let mut sim = Simulation::new(cfg)?;
        sim.run_to_end()?;
        write_event_log(sim.events(), File::create(path)?)?;
        Ok(())
    }
}

/// Summary of a finished sweep.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub results: Vec<CellResult>,
    pub failed: usize,
}

/// Runs the whole sweep and writes the CSV to `spec.out` or stdout, plus the
/// optional trace dump and event log.
pub fn run_experiment(
    spec: ExperimentSpec,
    progress: &(dyn Fn(&CellResult) + Sync),
) -> Result<ExperimentOutcome, ExperimentError> {
    let exp = Experiment::new(spec)?;
    if let Some(p) = &exp.spec.dump_trace {
        exp.dump_first_trace(p)?;
    }
    let results = exp.run_cells(progress);
    match &exp.spec.out {
        Some(p) => exp.write_csv(&results, File::create(p)?)?,
        None => exp.write_csv(&results, io::stdout().lock())?,
    }
    if let Some(p) = &exp.spec.event_log {
        exp.write_first_event_log(p)?;
    }
    let failed = results.iter().filter(|r| !r.is_ok()).count();
    Ok(ExperimentOutcome { results, failed })
}
