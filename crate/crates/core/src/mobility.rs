//! Node movement: random-waypoint trace generation and a plain-text trace
//! file format so externally produced mobility data can be replayed.
//!
//! Generation is seeded with ChaCha8. Node `n` draws from stream `n` of a
//! generator seeded with `seed_from_u64(seed)`, so every node's path depends
//! only on the seed and its own index, and a longer trace extends a shorter
//! one with the same seed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::contact::Seconds;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("invalid mobility parameters: {0}")]
    InvalidParams(String),
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("incomplete trace: node {node} has no sample at t={time}")]
    Incomplete { time: Seconds, node: usize },
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn new(width: f64, height: f64) -> Result<Self, MobilityError> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(MobilityError::InvalidParams(format!(
                "arena must be positive, got {width} x {height}"
            )));
        }
        Ok(Arena { width, height })
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    fn sample(&self, rng: &mut impl Rng) -> Point {
        Point::new(
            rng.random_range(0.0..=self.width),
            rng.random_range(0.0..=self.height),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointParams {
    pub arena: Arena,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause: Seconds,
    pub seed: u64,
}

impl WaypointParams {
    /// Fixed-speed walk without pauses.
    pub fn fixed_speed(arena: Arena, speed: f64, seed: u64) -> Self {
        WaypointParams {
            arena,
            speed_min: speed,
            speed_max: speed,
            pause: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite())
        {
            return Err(MobilityError::InvalidParams(format!(
                "need 0 < speed_min <= speed_max, got {}..{}",
                self.speed_min, self.speed_max
            )));
        }
        if !(self.pause >= 0.0 && self.pause.is_finite()) {
            return Err(MobilityError::InvalidParams(format!(
                "pause must be non-negative, got {}",
                self.pause
            )));
        }
        Arena::new(self.arena.width, self.arena.height).map(|_| ())
    }
}

/// One straight movement followed by a pause.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub from: Point,
    pub to: Point,
    pub depart: Seconds,
    pub arrive: Seconds,
    /// When the next leg starts (`arrive` plus the pause).
    pub resume: Seconds,
}

impl Leg {
    pub fn new(from: Point, to: Point, speed: f64, depart: Seconds, pause: Seconds) -> Self {
        let arrive = depart + from.distance(to) / speed;
        Leg {
            from,
            to,
            depart,
            arrive,
            resume: arrive + pause,
        }
    }

    pub fn position_at(&self, t: Seconds) -> Point {
        if t <= self.depart {
            self.from
        } else if t >= self.arrive {
            self.to
        } else {
            let frac = (t - self.depart) / (self.arrive - self.depart);
            Point::new(
                self.from.x + (self.to.x - self.from.x) * frac,
                self.from.y + (self.to.y - self.from.y) * frac,
            )
        }
    }
}

struct Walker {
    rng: ChaCha8Rng,
    leg: Leg,
}

impl Walker {
    fn new(params: &WaypointParams, node: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(node as u64);
        let start = params.arena.sample(&mut rng);
        let leg = Self::next_leg(&mut rng, params, start, 0.0);
        Walker { rng, leg }
    }

    fn next_leg(
        rng: &mut ChaCha8Rng,
        params: &WaypointParams,
        from: Point,
        depart: Seconds,
    ) -> Leg {
        let to = params.arena.sample(rng);
        let speed = rng.random_range(params.speed_min..=params.speed_max);
        Leg::new(from, to, speed, depart, params.pause)
    }

    fn position_at(&mut self, params: &WaypointParams, t: Seconds) -> Point {
        while t >= self.leg.resume {
            self.leg = Self::next_leg(&mut self.rng, params, self.leg.to, self.leg.resume);
        }
        params.arena.clamp(self.leg.position_at(t))
    }
}

/// Positions of every node at every sample time `0, tick, 2*tick, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    node_count: usize,
    tick: Seconds,
    steps: usize,
    positions: Vec<Point>,
}

impl Trace {
    /// `positions` is step-major: all nodes for step 0, then step 1, and so on.
    pub fn from_positions(
        node_count: usize,
        tick: Seconds,
        positions: Vec<Point>,
    ) -> Result<Self, MobilityError> {
        if !(tick > 0.0 && tick.is_finite()) {
            return Err(MobilityError::InvalidParams(format!(
                "tick must be positive, got {tick}"
            )));
        }
        let steps = if node_count == 0 {
            0
        } else {
            if !positions.len().is_multiple_of(node_count) {
                return Err(MobilityError::InvalidParams(format!(
                    "{} samples do not divide evenly among {node_count} nodes",
                    positions.len()
                )));
            }
            positions.len() / node_count
        };
        Ok(Trace {
            node_count,
            tick,
            steps,
            positions,
        })
    }

    /// Nodes that never move, sampled for `steps` ticks of one second.
    pub fn stationary(points: &[Point], steps: usize) -> Self {
        let positions = (0..steps).flat_map(|_| points.iter().copied()).collect();
        Trace {
            node_count: points.len(),
            tick: 1.0,
            steps: if points.is_empty() { 0 } else { steps },
            positions,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn tick(&self) -> Seconds {
        self.tick
    }

    /// Number of sample instants.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> Seconds {
        self.steps.saturating_sub(1) as f64 * self.tick
    }

    pub fn at_step(&self, step: usize) -> &[Point] {
        &self.positions[step * self.node_count..(step + 1) * self.node_count]
    }

    pub fn position(&self, step: usize, node: usize) -> Point {
        self.positions[step * self.node_count + node]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MobilityError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MobilityError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Header `nodes=<n> duration=<s> tick=<s>` followed by `t,node,x,y` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "nodes={} duration={} tick={}\n",
            self.node_count,
            self.duration(),
            self.tick
        );
        for step in 0..self.steps {
            let t = step as f64 * self.tick;
            for (node, p) in self.at_step(step).iter().enumerate() {
                let _ = writeln!(out, "{t},{node},{},{}", coord(p.x), coord(p.y));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MobilityError> {
        let mut lines = text.lines().enumerate();
        let (node_count, duration, tick) = match lines.next() {
            Some((_, header)) => parse_header(header)?,
            None => {
                return Err(MobilityError::Parse {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        let steps = if node_count == 0 {
            0
        } else {
            (duration / tick).round() as usize + 1
        };
        let mut slots: Vec<Option<Point>> = vec![None; steps * node_count];

        for (idx, raw) in lines {
            let line = idx + 1;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            let bad = |reason: String| MobilityError::Parse { line, reason };
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected t,node,x,y but found {row:?}")));
            }
            let num = |s: &str, what: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("bad {what} {s:?}")))
            };
            let t = num(fields[0], "time")?;
            let node: usize = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad node {:?}", fields[1])))?;
            let p = Point::new(num(fields[2], "x")?, num(fields[3], "y")?);
            if node >= node_count {
                return Err(bad(format!("node {node} outside 0..{node_count}")));
            }
            let step = (t / tick).round();
            if step < 0.0
                || (step * tick - t).abs() > 1e-9 * tick.max(1.0)
                || step as usize >= steps
            {
                return Err(bad(format!(
                    "time {t} is not a sample instant of this trace"
                )));
            }
            let slot = &mut slots[step as usize * node_count + node];
            if slot.is_some() {
                return Err(bad(format!("duplicate sample for node {node} at t={t}")));
            }
            *slot = Some(p);
        }

        let mut positions = Vec::with_capacity(slots.len());
        for (i, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(p) => positions.push(p),
                None => {
                    return Err(MobilityError::Incomplete {
                        time: (i / node_count) as f64 * tick,
                        node: i % node_count,
                    })
                }
            }
        }
        Ok(Trace {
            node_count,
            tick,
            steps,
            positions,
        })
    }
}

/// Shortest round-trip decimal, padded to at least three fractional digits.
fn coord(v: f64) -> String {
    let mut s = format!("{v}");
    let frac = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in frac..3 {
        s.push('0');
    }
    s
}

fn parse_header(header: &str) -> Result<(usize, Seconds, Seconds), MobilityError> {
    let bad = |reason: String| MobilityError::Parse { line: 1, reason };
    let (mut nodes, mut duration, mut tick) = (None, None, None);
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, found {field:?}")))?;
        match key {
            "nodes" => {
                nodes = Some(
                    value
                        .parse::<usize>()
                        .map_err(|e| bad(format!("nodes: {e}")))?,
                )
            }
            "duration" => {
                duration = Some(
                    value
                        .parse::<f64>()
                        .map_err(|e| bad(format!("duration: {e}")))?,
                )
            }
            "tick" => {
                tick = Some(
                    value
                        .parse::<f64>()
                        .map_err(|e| bad(format!("tick: {e}")))?,
                )
            }
            other => return Err(bad(format!("unknown header key {other:?}"))),
        }
    }
    match (nodes, duration, tick) {
        (Some(n), Some(d), Some(t)) if t > 0.0 && d >= 0.0 && t.is_finite() && d.is_finite() => {
            Ok((n, d, t))
        }
        (Some(_), Some(_), Some(_)) => Err(bad("duration must be >= 0 and tick > 0".into())),
        _ => Err(bad("header needs nodes=, duration= and tick=".into())),
    }
}

/// Random-waypoint trace covering `[0, duration]` sampled every `tick`.
pub fn generate(
    params: &WaypointParams,
    node_count: usize,
    duration: Seconds,
    tick: Seconds,
) -> Result<Trace, MobilityError> {
    params.validate()?;
    if !(duration > 0.0 && tick > 0.0 && duration.is_finite() && tick.is_finite()) {
        return Err(MobilityError::InvalidParams(format!(
            "duration and tick must be positive, got {duration} and {tick}"
        )));
    }
    if node_count == 0 {
        return Trace::from_positions(0, tick, Vec::new());
    }
    let steps = (duration / tick).floor() as usize + 1;
    let columns: Vec<Vec<Point>> = (0..node_count)
        .map(|node| {
            let mut walker = Walker::new(params, node);
            (0..steps)
                .map(|s| walker.position_at(params, s as f64 * tick))
                .collect()
        })
        .collect();
    let mut positions = Vec::with_capacity(steps * node_count);
    for step in 0..steps {
        positions.extend(columns.iter().map(|c| c[step]));
    }
    Trace::from_positions(node_count, tick, positions)
}
