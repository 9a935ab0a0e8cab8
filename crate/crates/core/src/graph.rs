//! Undirected social graphs and shortest-path betweenness.
//!
//! Two betweenness variants are provided. The plain score of a vertex sums,
//! over unordered pairs of *other* vertices, the fraction of shortest paths
//! that pass through it. The endpoint-biased score also counts the pairs in
//! which the vertex is itself an endpoint; each such pair contributes exactly
//! one. Both are computed with single-source dependency accumulation over
//! hop-count BFS, and pairs in different components contribute nothing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Identity of a simulated node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// A non-negative, finite sum of shortest-path fractions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct CentralityScore(f64);

impl CentralityScore {
    pub const ZERO: CentralityScore = CentralityScore(0.0);

    /// Panics if `value` is negative or not finite.
    pub fn new(value: f64) -> Self {
        assert!(
            value.is_finite() && value >= 0.0,
            "centrality must be finite and non-negative, got {value}"
        );
        CentralityScore(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for CentralityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(NodeId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(NodeId),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Simple undirected graph keyed by [`NodeId`].
///
/// Adjacency is stored symmetrically, so `(u, v)` is present iff `(v, u)` is.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl SocialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from an edge list, adding endpoints as vertices.
    pub fn from_edges<I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut g = SocialGraph::new();
        for (u, v) in edges {
            g.add_edge(NodeId(u), NodeId(v))?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, v: NodeId) -> bool {
        if self.adjacency.contains_key(&v) {
            return false;
        }
        self.adjacency.insert(v, BTreeSet::new());
        true
    }

    /// Inserts the undirected edge `{u, v}`, creating missing endpoints.
    /// Returns `false` when the edge already existed.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let fresh = self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default().insert(u);
        Ok(fresh)
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        let removed = self
            .adjacency
            .get_mut(&u)
            .map(|s| s.remove(&v))
            .unwrap_or(false);
        if let Some(s) = self.adjacency.get_mut(&v) {
            s.remove(&u);
        }
        removed
    }

    /// Removes `v` and every edge incident to it.
    pub fn remove_vertex(&mut self, v: NodeId) -> bool {
        let Some(adj) = self.adjacency.remove(&v) else {
            return false;
        };
        for u in adj {
            if let Some(s) = self.adjacency.get_mut(&u) {
                s.remove(&v);
            }
        }
        true
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency
            .get(&u)
            .map(|s| s.contains(&v))
            .unwrap_or(false)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Vertices in ascending order.
    pub fn vertices(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    /// Each undirected edge once, as `(low, high)`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&u, adj)| adj.range(u..).map(move |&v| (u, v)))
    }

    pub fn neighbors(&self, u: NodeId) -> Result<&BTreeSet<NodeId>, GraphError> {
        self.adjacency.get(&u).ok_or(GraphError::UnknownVertex(u))
    }

    /// Vertices reachable from `u`, excluding `u` itself.
    pub fn reachable_count(&self, u: NodeId) -> Result<usize, GraphError> {
        self.neighbors(u)?;
        let mut seen = BTreeSet::from([u]);
        let mut queue = VecDeque::from([u]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[&v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        Ok(seen.len() - 1)
    }

    /// Renders the debugging dump: one `u v` line per edge, `u -` per isolated vertex.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (&u, adj) in &self.adjacency {
            if adj.is_empty() {
                out.push_str(&format!("{u} -\n"));
            }
            for &v in adj.range(u..) {
                out.push_str(&format!("{u} {v}\n"));
            }
        }
        out
    }
}

impl FromStr for SocialGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut g = SocialGraph::new();
        for (idx, raw) in s.lines().enumerate() {
            let line = idx + 1;
            let text = raw.trim();
            if text.is_empty() {
                continue;
            }
            let mut parts = text.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GraphError::Parse {
                    line,
                    reason: format!("expected two fields, got {text:?}"),
                });
            };
            let parse = |field: &str| {
                field
                    .parse::<u32>()
                    .map(NodeId)
                    .map_err(|e| GraphError::Parse {
                        line,
                        reason: format!("bad vertex {field:?}: {e}"),
                    })
            };
            let u = parse(a)?;
            if b == "-" {
                g.add_vertex(u);
            } else {
                let v = parse(b)?;
                g.add_edge(u, v).map_err(|e| GraphError::Parse {
                    line,
                    reason: e.to_string(),
                })?;
            }
        }
        Ok(g)
    }
}

/// Compact index-based adjacency used by the accumulation passes.
struct Indexed {
    ids: Vec<NodeId>,
    adj: Vec<Vec<usize>>,
}

impl Indexed {
    fn new(g: &SocialGraph) -> Self {
        let ids: Vec<NodeId> = g.vertices().collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adj = ids
            .iter()
            .map(|v| g.adjacency[v].iter().map(|w| index[w]).collect())
            .collect();
        Indexed { ids, adj }
    }
}

/// Runs dependency accumulation from every source and returns raw scores
/// indexed like `Indexed::ids`. Every unordered pair is seen from both of its
/// endpoints, so the ordered-pair totals are halved at the end.
fn accumulate(ix: &Indexed, endpoints: bool) -> Vec<f64> {
    let n = ix.ids.len();
    let mut score = vec![0.0_f64; n];
    let mut sigma = vec![0.0_f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0_f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        for v in 0..n {
            sigma[v] = 0.0;
            dist[v] = usize::MAX;
            delta[v] = 0.0;
            preds[v].clear();
        }
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &ix.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        if endpoints {
            // the source is an endpoint of one pair per reachable target
            score[s] += (order.len() - 1) as f64;
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += if endpoints { delta[w] + 1.0 } else { delta[w] };
            }
        }
    }
    score.iter_mut().for_each(|x| *x /= 2.0);
    score
}

fn scores(g: &SocialGraph, endpoints: bool) -> BTreeMap<NodeId, CentralityScore> {
    let ix = Indexed::new(g);
    let raw = accumulate(&ix, endpoints);
    ix.ids
        .iter()
        .zip(raw)
        .map(|(&v, x)| (v, CentralityScore::new(x.max(0.0))))
        .collect()
}

/// Shortest-path betweenness over unordered pairs of other vertices.
pub fn betweenness(g: &SocialGraph) -> BTreeMap<NodeId, CentralityScore> {
    scores(g, false)
}

/// Betweenness that also credits a vertex for every pair it terminates.
pub fn endpoint_betweenness(g: &SocialGraph) -> BTreeMap<NodeId, CentralityScore> {
    scores(g, true)
}

/// The ego, its neighbours, their neighbours, and only those edges that
/// touch the ego or one of its neighbours. Edges between two second-hop
/// vertices are left out.
pub fn extract_expanded_ego(g: &SocialGraph, ego: NodeId) -> Result<SocialGraph, GraphError> {
    let first_hop = g.neighbors(ego)?;
    let mut out = SocialGraph::new();
    out.add_vertex(ego);
    for &j in first_hop {
        out.add_edge(ego, j)?;
        for &k in &g.adjacency[&j] {
            if k != ego {
                out.add_edge(j, k)?;
            }
        }
    }
    Ok(out)
}

/// Betweenness of `ego` inside its expanded ego network.
pub fn expanded_ego_betweenness(
    g: &SocialGraph,
    ego: NodeId,
    endpoint_biased: bool,
) -> Result<CentralityScore, GraphError> {
    let local = extract_expanded_ego(g, ego)?;
    let scores = if endpoint_biased {
        endpoint_betweenness(&local)
    } else {
        betweenness(&local)
    };
    Ok(scores[&ego])
}
