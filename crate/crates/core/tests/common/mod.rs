//! Test-only oracles and fixtures shared by the integration suites.
//!
//! Nothing here calls into the library's centrality or weight code; the
//! oracles recompute from first principles so they can check it.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socialdtn::{
    CentralityScore, ContactWindow, HelloPayload, LinkWeight, Message, NodeId, NodeState,
    SocialGraph,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ─── graphs ──────────────────────────────────────────────────────────────────

/// Graph on vertices `0..n` whose edges are the set bits of `mask` over the
/// pairs `(a, b)`, `a < b`, in lexicographic order.
pub fn graph_from_mask(n: u32, mask: u64) -> SocialGraph {
    let mut g = SocialGraph::new();
    let mut bit = 0;
    for a in 0..n {
        g.add_vertex(NodeId(a));
        for b in a + 1..n {
            if mask >> bit & 1 == 1 {
                g.add_edge(NodeId(a), NodeId(b)).unwrap();
            }
            bit += 1;
        }
    }
    g
}

pub fn gnp(n: u32, p: f64, rng: &mut impl Rng) -> SocialGraph {
    let mut g = SocialGraph::new();
    for a in 0..n {
        g.add_vertex(NodeId(a));
        for b in a + 1..n {
            if rng.random_bool(p) {
                g.add_edge(NodeId(a), NodeId(b)).unwrap();
            }
        }
    }
    g
}

pub fn is_connected(g: &SocialGraph) -> bool {
    match g.vertices().next() {
        None => true,
        Some(v) => g.reachable_count(v).unwrap() + 1 == g.vertex_count(),
    }
}

pub fn connected_gnp(n: u32, p: f64, rng: &mut impl Rng) -> SocialGraph {
    loop {
        let g = gnp(n, p, rng);
        if is_connected(&g) {
            return g;
        }
    }
}

fn bfs_dist(g: &SocialGraph, s: NodeId) -> BTreeMap<NodeId, usize> {
    let mut dist = BTreeMap::from([(s, 0)]);
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        let d = dist[&v];
        for &w in g.neighbors(v).unwrap() {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(d + 1);
                q.push_back(w);
            }
        }
    }
    dist
}

/// Every shortest path from `s` to `t`, written out vertex by vertex.
pub fn all_shortest_paths(g: &SocialGraph, s: NodeId, t: NodeId) -> Vec<Vec<NodeId>> {
    let from_s = bfs_dist(g, s);
    let Some(&len) = from_s.get(&t) else {
        return Vec::new();
    };
    let to_t = bfs_dist(g, t);
    let mut out = Vec::new();
    let mut stack = vec![vec![s]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if last == t {
            out.push(path);
            continue;
        }
        let step = path.len() - 1;
        for &w in g.neighbors(last).unwrap() {
            if from_s.get(&w) == Some(&(step + 1)) && to_t.get(&w) == Some(&(len - step - 1)) {
                let mut next = path.clone();
                next.push(w);
                stack.push(next);
            }
        }
    }
    out
}

/// Brute-force betweenness by explicit path enumeration over unordered pairs.
/// With `endpoints`, pairs the vertex terminates count too.
pub fn oracle_betweenness(g: &SocialGraph, endpoints: bool) -> BTreeMap<NodeId, f64> {
    let vs: Vec<NodeId> = g.vertices().collect();
    let mut score: BTreeMap<NodeId, f64> = vs.iter().map(|&v| (v, 0.0)).collect();
    for (a, &s) in vs.iter().enumerate() {
        for &t in &vs[a + 1..] {
            let paths = all_shortest_paths(g, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for &i in &vs {
                if !endpoints && (i == s || i == t) {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&i)).count() as f64;
                *score.get_mut(&i).unwrap() += through / total;
            }
        }
    }
    score
}

/// Kendall's tau-b between paired samples.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let dx = x[a] - x[b];
            let dy = y[a] - y[b];
            let tx = dx.abs() < 1e-12;
            let ty = dy.abs() < 1e-12;
            match (tx, ty) {
                (true, true) => {}
                (true, false) => ties_x += 1,
                (false, true) => ties_y += 1,
                _ if dx * dy > 0.0 => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + ties_x) as f64;
    let n2 = (concordant + discordant + ties_y) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    (concordant - discordant) as f64 / (n1 * n2).sqrt()
}

// ─── contact windows ─────────────────────────────────────────────────────────

/// A window described in integer hundredths of a second: it covers
/// `[end - size, end]` and holds contacts `(start, Some(stop))` or an open
/// `(start, None)` as the last entry.
#[derive(Debug, Clone)]
pub struct CentiWindow {
    pub size: i64,
    pub end: i64,
    pub contacts: Vec<(i64, Option<i64>)>,
}

impl CentiWindow {
    pub fn random(rng: &mut impl Rng) -> Self {
        let size = rng.random_range(1_000..=60_000i64);
        let end = size + rng.random_range(0..=5_000i64);
        let lo = end - size - 2_000;
        let count = rng.random_range(0..=7usize);
        let mut points: Vec<i64> = (0..2 * count).map(|_| rng.random_range(lo..=end)).collect();
        points.sort_unstable();
        let mut contacts: Vec<(i64, Option<i64>)> = points
            .chunks(2)
            .map(|c| (c[0], Some(if rng.random_bool(0.2) { c[0] } else { c[1] })))
            .collect();
        // keep contacts disjoint after the zero-length rewrite
        contacts.dedup_by(|b, a| b.0 == a.0);
        if let Some(last) = contacts.last_mut() {
            if rng.random_bool(0.25) {
                last.1 = None;
            }
        }
        CentiWindow {
            size,
            end,
            contacts,
        }
    }

    pub fn to_window(&self, peer: NodeId) -> ContactWindow {
        let mut w = ContactWindow::new(peer, self.size as f64 / 100.0);
        for &(s, e) in &self.contacts {
            w.record_encounter(s as f64 / 100.0).unwrap();
            if let Some(e) = e {
                w.record_departure(e as f64 / 100.0).unwrap();
            }
        }
        w.slide(self.end as f64 / 100.0);
        w
    }

    /// Contacts clipped to the window, in hundredths.
    fn clipped(&self) -> Vec<(i64, i64)> {
        let start = self.end - self.size;
        self.contacts
            .iter()
            .map(|&(s, e)| (s, e.unwrap_or(self.end)))
            .filter(|&(_, e)| e >= start)
            .map(|(s, e)| (s.max(start), e.min(self.end)))
            .collect()
    }

    /// `f` just right of instant `k`: zero inside a contact, otherwise time
    /// until the next contact start or the window end.
    fn f_right(&self, cs: &[(i64, i64)], k: i64) -> i64 {
        if cs.iter().any(|&(s, e)| s <= k && k < e) {
            return 0;
        }
        cs.iter()
            .map(|&(s, _)| s)
            .filter(|&s| s > k)
            .min()
            .unwrap_or(self.end)
            - k
    }

    /// `f` just left of instant `k`.
    fn f_left(&self, cs: &[(i64, i64)], k: i64) -> i64 {
        if cs.iter().any(|&(s, e)| s < k && k <= e) {
            return 0;
        }
        cs.iter()
            .map(|&(s, _)| s)
            .filter(|&s| s >= k)
            .min()
            .unwrap_or(self.end)
            - k
    }

    /// Composite trapezoid rule for the integral of `f` with 0.01 s panels,
    /// in seconds squared.
    pub fn quadrature_integral(&self) -> f64 {
        let cs = self.clipped();
        let start = self.end - self.size;
        let mut sum = 0.0;
        for k in start..self.end {
            let a = self.f_right(&cs, k) as f64 / 100.0;
            let b = self.f_left(&cs, k + 1) as f64 / 100.0;
            sum += (a + b) / 2.0 * 0.01;
        }
        sum
    }

    /// Link weight by quadrature; `None` when the integral vanishes.
    pub fn quadrature_weight(&self) -> Option<f64> {
        let integral = self.quadrature_integral();
        (integral > 0.0).then(|| (self.size as f64 / 100.0) / integral)
    }
}

/// Window whose single contact has already slid out, so its weight is
/// exactly `2 / size`. Used to dial in a precise weight.
pub fn window_with_weight(peer: NodeId, weight: f64, now: f64) -> ContactWindow {
    let size = 2.0 / weight;
    assert!(
        now > size,
        "now must leave the old contact outside the window"
    );
    let mut w = ContactWindow::new(peer, size);
    w.record_encounter(0.0).unwrap();
    w.record_departure(0.0).unwrap();
    w.slide(now);
    assert_eq!(w.link_weight(now).value(), weight);
    w
}

pub fn ids(vs: &[u32]) -> BTreeSet<NodeId> {
    vs.iter().map(|&v| NodeId(v)).collect()
}

// ─── routing fixtures ────────────────────────────────────────────────────────

pub const TH: f64 = 0.01;
/// Late enough that every `window_with_weight` fixture has slid clean.
pub const NOW: f64 = 100_000.0;

/// Hello from `sender` advertising `friends` with their weights.
pub fn hello(sender: u32, friends: &[(u32, f64)], cb: f64, ceb: f64) -> HelloPayload {
    HelloPayload {
        sender: NodeId(sender),
        neighbor_list: friends.iter().map(|&(v, _)| NodeId(v)).collect(),
        sender_cb: CentralityScore::new(cb),
        sender_ceb: CentralityScore::new(ceb),
        weights: friends
            .iter()
            .map(|&(v, w)| (NodeId(v), LinkWeight::new(w)))
            .collect(),
    }
}

/// Node `id` whose windows give exactly the listed weights, that has heard
/// `hellos`, and whose view has been maintained at [`NOW`].
pub fn node_with(id: u32, weights: &[(u32, f64)], hellos: Vec<HelloPayload>) -> NodeState {
    let mut node = NodeState::new(NodeId(id), TH);
    for &(peer, w) in weights {
        node.windows
            .insert(NodeId(peer), window_with_weight(NodeId(peer), w, NOW));
    }
    for h in hellos {
        node.view.apply_hello(h, NOW - 1.0);
    }
    node.view.maintain(&node.windows, NOW);
    node
}

/// Buffers one message per destination, ids counting from 1 in order.
pub fn carry(node: &mut NodeState, dsts: &[u32]) {
    for (i, &d) in dsts.iter().enumerate() {
        node.buffer.originate(Message::new(
            i as u64 + 1,
            node.id,
            NodeId(d),
            NOW - 10.0,
            60.0,
        ));
    }
}
