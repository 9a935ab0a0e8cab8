//! Each node's local view of the social network, rebuilt from its contact
//! windows and the neighbour lists its friends advertise in hello messages.

use std::collections::{BTreeMap, BTreeSet};

use crate::contact::{ContactWindow, LinkWeight, Seconds};
use crate::graph::{betweenness, endpoint_betweenness, CentralityScore, NodeId, SocialGraph};

/// What a node broadcasts in every hello.
#[derive(Debug, Clone, PartialEq)]
pub struct HelloPayload {
    pub sender: NodeId,
    /// The sender's current friends.
    pub neighbor_list: BTreeSet<NodeId>,
    pub sender_cb: CentralityScore,
    pub sender_ceb: CentralityScore,
    /// Link weights to the sender's friends. Peers at or below the friendship
    /// threshold are not advertised.
    pub weights: BTreeMap<NodeId, LinkWeight>,
}

impl HelloPayload {
    /// An empty hello, as sent by a node with no friends.
    pub fn bare(sender: NodeId) -> Self {
        HelloPayload {
            sender,
            neighbor_list: BTreeSet::new(),
            sender_cb: CentralityScore::ZERO,
            sender_ceb: CentralityScore::ZERO,
            weights: BTreeMap::new(),
        }
    }

    /// The sender's advertised weight towards `peer`; zero when not advertised.
    pub fn weight_to(&self, peer: NodeId) -> LinkWeight {
        self.weights.get(&peer).copied().unwrap_or(LinkWeight::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerCentrality {
    pub cb: CentralityScore,
    pub ceb: CentralityScore,
    pub stamped_at: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocialNetworkView {
    owner: NodeId,
    threshold: f64,
    graph: SocialGraph,
    peer_centrality: BTreeMap<NodeId, PeerCentrality>,
    staged: BTreeMap<NodeId, HelloPayload>,
    friend_weights: BTreeMap<NodeId, LinkWeight>,
    own: (CentralityScore, CentralityScore),
}

impl SocialNetworkView {
    pub fn new(owner: NodeId, threshold: f64) -> Self {
        let mut graph = SocialGraph::new();
        graph.add_vertex(owner);
        SocialNetworkView {
            owner,
            threshold,
            graph,
            peer_centrality: BTreeMap::new(),
            staged: BTreeMap::new(),
            friend_weights: BTreeMap::new(),
            own: (CentralityScore::ZERO, CentralityScore::ZERO),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    /// Current 1-hop friends.
    pub fn friends(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.friend_weights.keys().copied()
    }

    pub fn is_friend(&self, peer: NodeId) -> bool {
        self.friend_weights.contains_key(&peer)
    }

    pub fn peer_centrality(&self, peer: NodeId) -> Option<&PeerCentrality> {
        self.peer_centrality.get(&peer)
    }

    /// Last hello received from `peer`, if still held.
    pub fn staged_hello(&self, peer: NodeId) -> Option<&HelloPayload> {
        self.staged.get(&peer)
    }

    /// `(C_B, C_EB)` of the owner as of the last [`maintain`](Self::maintain).
    pub fn self_centrality(&self) -> (CentralityScore, CentralityScore) {
        self.own
    }

    /// Re-derives the view from the owner's contact windows.
    ///
    /// A peer with at least one recorded contact is a friend iff its weight is
    /// strictly above the threshold. Friends contribute the edge to the owner
    /// plus edges to everything in their last advertised neighbour list. A
    /// peer that stops being a friend loses its edges and its advertised list,
    /// and any second-hop vertex no other friend advertises disappears with
    /// it. Rebuilding from the friend set gives the same vertex and edge sets
    /// as applying add/remove steps peer by peer, without leaving orphaned
    /// vertices behind when two friends share a neighbour.
    pub fn maintain(&mut self, windows: &BTreeMap<NodeId, ContactWindow>, now: Seconds) {
        let friends: BTreeMap<NodeId, LinkWeight> = windows
            .iter()
            .filter(|(&peer, _)| peer != self.owner)
            .filter_map(|(&peer, window)| {
                let w = window.link_weight(now);
                (w.value() > self.threshold).then_some((peer, w))
            })
            .collect();

        for lost in self.friend_weights.keys() {
            if !friends.contains_key(lost) {
                self.staged.remove(lost);
            }
        }

        let mut graph = SocialGraph::new();
        graph.add_vertex(self.owner);
        for &j in friends.keys() {
            graph
                .add_edge(self.owner, j)
                .expect("peer differs from owner");
            if let Some(hello) = self.staged.get(&j) {
                for &k in &hello.neighbor_list {
                    if k != self.owner && k != j {
                        graph.add_edge(j, k).expect("k differs from j");
                    }
                }
            }
        }

        self.graph = graph;
        self.friend_weights = friends;
        self.own = self.my_centrality();
    }

    /// `(C_B, C_EB)` of the owner in its own graph. The view only ever holds
    /// owner-to-friend and friend-to-anything edges, so it already is the
    /// owner's expanded ego network.
    pub fn my_centrality(&self) -> (CentralityScore, CentralityScore) {
        if self.graph.edge_count() == 0 {
            return (CentralityScore::ZERO, CentralityScore::ZERO);
        }
        let cb = betweenness(&self.graph)[&self.owner];
        let ceb = endpoint_betweenness(&self.graph)[&self.owner];
        (cb, ceb)
    }

    pub fn make_hello(&self) -> HelloPayload {
        HelloPayload {
            sender: self.owner,
            neighbor_list: self.friend_weights.keys().copied().collect(),
            sender_cb: self.own.0,
            sender_ceb: self.own.1,
            weights: self.friend_weights.clone(),
        }
    }

    /// Caches the sender's centralities and stages its neighbour list for the
    /// next `maintain`. The graph itself is left untouched.
    pub fn apply_hello(&mut self, payload: HelloPayload, now: Seconds) {
        if payload.sender == self.owner {
            return;
        }
        self.peer_centrality.insert(
            payload.sender,
            PeerCentrality {
                cb: payload.sender_cb,
                ceb: payload.sender_ceb,
                stamped_at: now,
            },
        );
        self.staged.insert(payload.sender, payload);
    }
}
