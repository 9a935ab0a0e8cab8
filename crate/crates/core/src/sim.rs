//! Time-stepped simulation of one routing protocol over one mobility trace.
//!
//! Every tick (one second) runs, in order: message creation, contact
//! detection with window updates, hello exchange with social-view
//! maintenance, routing over every in-range pair in ascending pair order, and
//! TTL expiry. Nothing depends on wall-clock time or hash iteration order, so
//! a configuration and seed always reproduce the same report and logs.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::contact::{ContactError, ContactWindow, Seconds};
use crate::graph::NodeId;
use crate::mobility::{self, Arena, MobilityError, Point, Trace, WaypointParams};
use crate::routing::{decide, Acceptance, ActionKind, Message, MessageId, NodeState, Protocol};
use crate::social::HelloPayload;

/// Stream reserved for the message schedule; mobility uses streams `0..n`.
const SCHEDULE_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trace exhausted at t={time} with {pending} message(s) unresolved")]
    TraceExhausted { time: Seconds, pending: usize },
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error("event log: {0}")]
    Log(#[from] csv::Error),
}

#[derive(Debug, Clone)]
pub enum TraceSource {
    RandomWaypoint {
        arena: Arena,
        speed: f64,
        pause: Seconds,
    },
    Provided(Arc<Trace>),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub trace: TraceSource,
    pub node_count: usize,
    pub comm_range: f64,
    pub window: Seconds,
    pub threshold: f64,
    pub ttl: Seconds,
    pub message_count: usize,
    /// Messages are created uniformly over `[window, window + generation_span]`.
    pub generation_span: Seconds,
    /// In ticks.
    pub hello_period: u64,
    pub missed_hello_limit: u32,
    pub protocol: Protocol,
    pub seed: u64,
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trace: TraceSource::RandomWaypoint {
                arena: Arena {
                    width: 1000.0,
                    height: 1500.0,
                },
                speed: 1.0,
                pause: 0.0,
            },
            node_count: 25,
            comm_range: 3.0,
            window: 600.0,
            threshold: 0.01,
            ttl: 60.0,
            message_count: 1000,
            generation_span: 1000.0,
            hello_period: 1,
            missed_hello_limit: 3,
            protocol: Protocol::Epidemic,
            seed: 0,
            record_events: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.comm_range > 0.0 && self.comm_range.is_finite()) {
            return bad(format!("comm_range must be > 0, got {}", self.comm_range));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return bad(format!("window must be > 0, got {}", self.window));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold must be >= 0, got {}", self.threshold));
        }
        if !(self.ttl > 0.0 && self.ttl.is_finite()) {
            return bad(format!("ttl must be > 0, got {}", self.ttl));
        }
        if self.message_count == 0 {
            return bad("message_count must be > 0".into());
        }
        if !(self.generation_span >= 0.0 && self.generation_span.is_finite()) {
            return bad(format!(
                "generation_span must be >= 0, got {}",
                self.generation_span
            ));
        }
        if self.hello_period == 0 {
            return bad("hello_period must be >= 1 tick".into());
        }
        if self.missed_hello_limit == 0 {
            return bad("missed_hello_limit must be >= 1".into());
        }
        if self.node_count < 2 {
            return bad(format!("need at least 2 nodes, got {}", self.node_count));
        }
        if let TraceSource::Provided(trace) = &self.trace {
            if trace.node_count() != self.node_count {
                return bad(format!(
                    "trace has {} nodes but node_count is {}",
                    trace.node_count(),
                    self.node_count
                ));
            }
            if trace.tick() != 1.0 {
                return bad(format!("trace tick must be 1 s, got {}", trace.tick()));
            }
        }
        Ok(())
    }

    /// Seconds of movement a generated trace needs so every message can expire.
    pub fn required_duration(&self) -> Seconds {
        self.window + self.generation_span.floor() + self.ttl.floor() + 2.0
    }

    pub fn build_trace(&self) -> Result<Arc<Trace>, SimError> {
        match &self.trace {
            TraceSource::Provided(t) => Ok(Arc::clone(t)),
            TraceSource::RandomWaypoint {
                arena,
                speed,
                pause,
            } => {
                let params = WaypointParams {
                    pause: *pause,
                    ..WaypointParams::fixed_speed(*arena, *speed, self.seed)
                };
                Ok(Arc::new(mobility::generate(
                    &params,
                    self.node_count,
                    self.required_duration(),
                    1.0,
                )?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactKind {
    Encounter,
    Depart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub kind: ContactKind,
    pub pair: (NodeId, NodeId),
    pub time: Seconds,
}

#[derive(Debug, Clone, Copy, Default)]
struct PairState {
    in_contact: bool,
    misses: u32,
    first_miss: Seconds,
}

/// Contact transitions plus the pairs within range at this tick.
#[derive(Debug, Clone, Default)]
pub struct TickContacts {
    pub events: Vec<ContactEvent>,
    pub in_range: Vec<(NodeId, NodeId)>,
}

/// Hello-based encounter/departure detection for every node pair.
///
/// A pair starts a contact the first tick it is within range. It ends the
/// contact after `missed_limit` consecutive out-of-range ticks, stamped at
/// the first of them; any in-range tick resets the count.
#[derive(Debug, Clone)]
pub struct ContactDetector {
    node_count: usize,
    range: f64,
    missed_limit: u32,
    pairs: Vec<PairState>,
}

impl ContactDetector {
    pub fn new(node_count: usize, range: f64, missed_limit: u32) -> Self {
        ContactDetector {
            node_count,
            range,
            missed_limit,
            pairs: vec![PairState::default(); node_count * node_count.saturating_sub(1) / 2],
        }
    }

    pub fn in_contact(&self, a: NodeId, b: NodeId) -> bool {
        let (a, b) = (a.index().min(b.index()), a.index().max(b.index()));
        self.pairs[self.pair_index(a, b)].in_contact
    }

    fn pair_index(&self, a: usize, b: usize) -> usize {
        // row-major upper triangle, a < b
        a * (2 * self.node_count - a - 1) / 2 + (b - a - 1)
    }

    pub fn detect(&mut self, positions: &[Point], time: Seconds) -> TickContacts {
        assert_eq!(positions.len(), self.node_count, "incomplete position set");
        let mut out = TickContacts::default();
        let mut idx = 0;
        for a in 0..self.node_count {
            for b in a + 1..self.node_count {
                let pair = (NodeId(a as u32), NodeId(b as u32));
                let st = &mut self.pairs[idx];
                idx += 1;
                if positions[a].distance(positions[b]) <= self.range {
                    out.in_range.push(pair);
                    st.misses = 0;
                    if !st.in_contact {
                        st.in_contact = true;
                        out.events.push(ContactEvent {
                            kind: ContactKind::Encounter,
                            pair,
                            time,
                        });
                    }
                } else if st.in_contact {
                    if st.misses == 0 {
                        st.first_miss = time;
                    }
                    st.misses += 1;
                    if st.misses >= self.missed_limit {
                        st.in_contact = false;
                        st.misses = 0;
                        out.events.push(ContactEvent {
                            kind: ContactKind::Depart,
                            pair,
                            time: st.first_miss,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Message schedule for one run: creation times are whole seconds drawn
/// uniformly from `[window, window + generation_span]`, sources uniform over
/// nodes, destinations uniform over the other nodes. Sorted by creation
/// time, ties by id.
pub fn schedule_messages(config: &SimConfig, seed: u64) -> Vec<Message> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SCHEDULE_STREAM);
    let n = config.node_count as u32;
    let first = config.window.ceil() as u64;
    let last = (config.window + config.generation_span).floor() as u64;
    let mut messages: Vec<Message> = (0..config.message_count as u64)
        .map(|id| {
            let created = rng.random_range(first..=last.max(first)) as f64;
            let src = rng.random_range(0..n);
            let mut dst = rng.random_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            Message::new(id, NodeId(src), NodeId(dst), created, config.ttl)
        })
        .collect();
    messages.sort_by(|a, b| a.created_at.total_cmp(&b.created_at).then(a.id.cmp(&b.id)));
    messages
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Gen,
    Fwd,
    Dlv,
    Exp,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Gen => "GEN",
            EventKind::Fwd => "FWD",
            EventKind::Dlv => "DLV",
            EventKind::Exp => "EXP",
        }
    }
}

/// One line of the per-message event log. `GEN` and `EXP` carry the
/// message's source and destination; `FWD` and `DLV` the two ends of the
/// transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEvent {
    pub time: Seconds,
    pub kind: EventKind,
    pub msg_id: MessageId,
    pub from: NodeId,
    pub to: NodeId,
}

pub fn write_event_log<W: Write>(events: &[LogEvent], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "event", "msg_id", "from", "to"])?;
    for e in events {
        w.write_record([
            e.time.to_string(),
            e.kind.label().to_string(),
            e.msg_id.to_string(),
            e.from.to_string(),
            e.to.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub generated: usize,
    pub delivered: usize,
    pub expired: usize,
    pub total_forwards: u64,
    pub delivery_ratio: f64,
    pub delivery_cost: f64,
    /// Zero when `efficiency_undefined` is set.
    pub delivery_efficiency: f64,
    /// No forwards happened, so ratio / cost has no value.
    pub efficiency_undefined: bool,
}

impl MetricsReport {
    pub fn new(generated: usize, delivered: usize, expired: usize, total_forwards: u64) -> Self {
        let g = generated.max(1) as f64;
        let ratio = delivered as f64 / g;
        let cost = total_forwards as f64 / g;
        let undefined = total_forwards == 0;
        MetricsReport {
            generated,
            delivered,
            expired,
            total_forwards,
            delivery_ratio: ratio,
            delivery_cost: cost,
            delivery_efficiency: if undefined { 0.0 } else { ratio / cost },
            efficiency_undefined: undefined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MessageStatus {
    Pending,
    Live,
    Delivered,
    Expired,
}

pub struct Simulation {
    config: SimConfig,
    trace: Arc<Trace>,
    detector: ContactDetector,
    nodes: Vec<NodeState>,
    schedule: Vec<Message>,
    /// Message id to position in `schedule`.
    id_index: Vec<usize>,
    status: Vec<MessageStatus>,
    next_message: usize,
    unresolved: usize,
    step: usize,
    forwards: u64,
    delivered: usize,
    expired: usize,
    contact_log: Vec<ContactEvent>,
    events: Vec<LogEvent>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let trace = config.build_trace()?;
        let schedule = schedule_messages(&config, config.seed);
        let nodes = (0..config.node_count)
            .map(|i| NodeState::new(NodeId(i as u32), config.threshold))
            .collect();
        let count = schedule.len();
        let mut id_index = vec![0; count];
        for (pos, m) in schedule.iter().enumerate() {
            id_index[m.id as usize] = pos;
        }
        Ok(Simulation {
            detector: ContactDetector::new(
                config.node_count,
                config.comm_range,
                config.missed_hello_limit,
            ),
            trace,
            nodes,
            status: vec![MessageStatus::Pending; count],
            schedule,
            id_index,
            next_message: 0,
            unresolved: count,
            step: 0,
            forwards: 0,
            delivered: 0,
            expired: 0,
            contact_log: Vec::new(),
            events: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn trace(&self) -> &Arc<Trace> {
        &self.trace
    }

    /// Time of the most recently processed tick.
    pub fn now(&self) -> Seconds {
        self.step.saturating_sub(1) as f64
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn schedule(&self) -> &[Message] {
        &self.schedule
    }

    pub fn contact_log(&self) -> &[ContactEvent] {
        &self.contact_log
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn is_finished(&self) -> bool {
        self.unresolved == 0
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport::new(
            self.schedule.len(),
            self.delivered,
            self.expired,
            self.forwards,
        )
    }

    fn log(&mut self, time: Seconds, kind: EventKind, msg_id: MessageId, from: NodeId, to: NodeId) {
        if self.config.record_events {
            self.events.push(LogEvent {
                time,
                kind,
                msg_id,
                from,
                to,
            });
        }
    }

    /// Processes one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.step >= self.trace.steps() {
            return Err(SimError::TraceExhausted {
                time: self.now(),
                pending: self.unresolved,
            });
        }
        let tick = self.step;
        let now = tick as f64;
        self.step += 1;

        self.create_messages(now);
        let contacts = self.update_contacts(tick, now)?;
        if (tick as u64).is_multiple_of(self.config.hello_period) {
            let hellos = self.exchange_hellos(&contacts.in_range, now);
            for &(a, b) in &contacts.in_range {
                self.transfer(a, b, &hellos, now);
                self.transfer(b, a, &hellos, now);
            }
        }
        self.expire(now);
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<MetricsReport, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.report())
    }

    fn create_messages(&mut self, now: Seconds) {
        while let Some(m) = self.schedule.get(self.next_message) {
            if m.created_at > now {
                break;
            }
            let m = m.clone();
            self.status[self.next_message] = MessageStatus::Live;
            self.next_message += 1;
            self.log(now, EventKind::Gen, m.id, m.src, m.dst);
            self.nodes[m.src.index()].buffer.originate(m);
        }
    }

    fn update_contacts(&mut self, tick: usize, now: Seconds) -> Result<TickContacts, SimError> {
        let trace = Arc::clone(&self.trace);
        let contacts = self.detector.detect(trace.at_step(tick), now);
        let window = self.config.window;
        for ev in &contacts.events {
            let (a, b) = ev.pair;
            for (me, peer) in [(a, b), (b, a)] {
                let w = self.nodes[me.index()]
                    .windows
                    .entry(peer)
                    .or_insert_with(|| ContactWindow::new(peer, window));
                match ev.kind {
                    ContactKind::Encounter => w.record_encounter(ev.time)?,
                    ContactKind::Depart => w.record_departure(ev.time)?,
                }
            }
        }
        self.contact_log.extend_from_slice(&contacts.events);
        for node in &mut self.nodes {
            for w in node.windows.values_mut() {
                w.slide(now);
            }
        }
        Ok(contacts)
    }

    /// Refreshes every view, then swaps hellos across in-range pairs.
    /// Returns each node's hello for this tick.
    fn exchange_hellos(
        &mut self,
        in_range: &[(NodeId, NodeId)],
        now: Seconds,
    ) -> Vec<HelloPayload> {
        for node in &mut self.nodes {
            node.view.maintain(&node.windows, now);
        }
        let hellos: Vec<HelloPayload> = self.nodes.iter().map(|n| n.view.make_hello()).collect();
        for &(a, b) in in_range {
            self.nodes[a.index()]
                .view
                .apply_hello(hellos[b.index()].clone(), now);
            self.nodes[b.index()]
                .view
                .apply_hello(hellos[a.index()].clone(), now);
        }
        hellos
    }

    fn transfer(&mut self, from: NodeId, to: NodeId, hellos: &[HelloPayload], now: Seconds) {
        let peer_has = self.nodes[to.index()].summary_vector();
        let actions = decide(
            self.config.protocol,
            &self.nodes[from.index()],
            &hellos[to.index()],
            &peer_has,
            now,
        );
        for action in actions {
            let Some(m) = self.nodes[from.index()]
                .buffer
                .get(action.message_id)
                .cloned()
            else {
                continue;
            };
            self.forwards += 1;
            match action.kind {
                ActionKind::Deliver => {
                    self.nodes[to.index()].delivered.insert(m.id);
                    self.nodes[from.index()].buffer.remove(m.id);
                    let slot = self.schedule_index(m.id);
                    if self.status[slot] == MessageStatus::Live {
                        self.status[slot] = MessageStatus::Delivered;
                        self.delivered += 1;
                        self.unresolved -= 1;
                    }
                    self.log(now, EventKind::Dlv, m.id, from, to);
                }
                ActionKind::Copy | ActionKind::ForwardAndDelete => {
                    let outcome = self.nodes[to.index()].buffer.accept(&m, to);
                    debug_assert_eq!(outcome, Acceptance::Buffered);
                    if action.kind == ActionKind::ForwardAndDelete {
                        self.nodes[from.index()].buffer.remove(m.id);
                    }
                    self.log(now, EventKind::Fwd, m.id, from, to);
                }
            }
        }
    }

    fn schedule_index(&self, id: MessageId) -> usize {
        self.id_index[id as usize]
    }

    fn expire(&mut self, now: Seconds) {
        for node in &mut self.nodes {
            node.buffer.expire(now);
        }
        for idx in 0..self.next_message {
            if self.status[idx] == MessageStatus::Live && !self.schedule[idx].is_live(now) {
                self.status[idx] = MessageStatus::Expired;
                self.expired += 1;
                self.unresolved -= 1;
                let m = &self.schedule[idx];
                let (id, src, dst) = (m.id, m.src, m.dst);
                self.log(now, EventKind::Exp, id, src, dst);
            }
        }
    }
}

/// Runs one complete simulation.
pub fn run(config: SimConfig) -> Result<MetricsReport, SimError> {
    Simulation::new(config)?.run_to_end()
}

/// Means over independent runs with seeds `seed, seed + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateReport {
    pub runs: Vec<MetricsReport>,
    pub delivery_ratio: f64,
    pub delivery_cost: f64,
    pub delivery_efficiency: f64,
}

impl ReplicateReport {
    pub fn from_runs(runs: Vec<MetricsReport>) -> Self {
        let n = runs.len().max(1) as f64;
        let mean = |f: fn(&MetricsReport) -> f64| runs.iter().map(f).sum::<f64>() / n;
        ReplicateReport {
            delivery_ratio: mean(|r| r.delivery_ratio),
            delivery_cost: mean(|r| r.delivery_cost),
            delivery_efficiency: mean(|r| r.delivery_efficiency),
            runs,
        }
    }

    pub fn undefined_efficiency_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.efficiency_undefined).count()
    }
}

pub fn replicate(config: &SimConfig, runs: usize) -> Result<ReplicateReport, SimError> {
    if runs == 0 {
        return Err(SimError::InvalidConfig("runs must be >= 1".into()));
    }
    let reports = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(r);
            cfg.record_events = false;
            run(cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReplicateReport::from_runs(reports))
}
