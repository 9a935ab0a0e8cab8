//! Message buffers and the per-contact forwarding decision of each protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::contact::{ContactWindow, LinkWeight, Seconds};
use crate::graph::{CentralityScore, NodeId};
use crate::social::{HelloPayload, SocialNetworkView};

pub type MessageId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: MessageId,
    pub src: NodeId,
    pub dst: NodeId,
    pub created_at: Seconds,
    pub ttl: Seconds,
    pub hops: u32,
}

impl Message {
    pub fn new(id: MessageId, src: NodeId, dst: NodeId, created_at: Seconds, ttl: Seconds) -> Self {
        assert_ne!(src, dst, "message {id} addressed to its own source");
        assert!(ttl > 0.0, "message {id} has non-positive ttl");
        Message {
            id,
            src,
            dst,
            created_at,
            ttl,
            hops: 0,
        }
    }

    /// Live while the elapsed time does not exceed the TTL.
    pub fn is_live(&self, now: Seconds) -> bool {
        now - self.created_at <= self.ttl
    }
}

/// Outcome of handing a message to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceptance {
    Delivered,
    Buffered,
    Duplicate,
}

/// Unbounded store of messages a node carries, at most one copy per id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Buffer {
    messages: BTreeMap<MessageId, Message>,
}

impl Buffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.messages.contains_key(&id)
    }

    pub fn get(&self, id: MessageId) -> Option<&Message> {
        self.messages.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.messages.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = MessageId> + '_ {
        self.messages.keys().copied()
    }

    /// Stores a freshly created message as-is.
    pub fn originate(&mut self, m: Message) {
        self.messages.insert(m.id, m);
    }

    pub fn remove(&mut self, id: MessageId) -> Option<Message> {
        self.messages.remove(&id)
    }

    /// Drops every message whose elapsed time exceeds its TTL and returns them.
    pub fn expire(&mut self, now: Seconds) -> Vec<Message> {
        let dead: Vec<MessageId> = self
            .messages
            .values()
            .filter(|m| !m.is_live(now))
            .map(|m| m.id)
            .collect();
        dead.into_iter()
            .filter_map(|id| self.messages.remove(&id))
            .collect()
    }

    /// Receives `m` on behalf of `receiver`. The destination consumes the
    /// message; relays keep one copy with the hop count advanced.
    pub fn accept(&mut self, m: &Message, receiver: NodeId) -> Acceptance {
        if receiver == m.dst {
            return Acceptance::Delivered;
        }
        if self.messages.contains_key(&m.id) {
            return Acceptance::Duplicate;
        }
        let mut copy = m.clone();
        copy.hops += 1;
        self.messages.insert(copy.id, copy);
        Acceptance::Buffered
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown protocol {0:?} (expected epidemic, friendship, proposed1 or proposed2)")]
pub struct UnknownProtocol(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    /// Copy everything to everyone.
    Epidemic,
    /// Copy to friends of the destination that know it better.
    Friendship,
    /// Link weight, falling back to expanded-ego betweenness.
    ProposedI,
    /// Link weight, falling back to endpoint-biased expanded-ego betweenness.
    ProposedII,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Epidemic,
        Protocol::Friendship,
        Protocol::ProposedI,
        Protocol::ProposedII,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Epidemic => "epidemic",
            Protocol::Friendship => "friendship",
            Protocol::ProposedI => "proposed1",
            Protocol::ProposedII => "proposed2",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = UnknownProtocol;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epidemic" => Ok(Protocol::Epidemic),
            "friendship" => Ok(Protocol::Friendship),
            "proposed1" | "proposedi" | "proposed-i" => Ok(Protocol::ProposedI),
            "proposed2" | "proposedii" | "proposed-ii" => Ok(Protocol::ProposedII),
            _ => Err(UnknownProtocol(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    /// Sender keeps its copy.
    Copy,
    /// Sender drops its copy after the transfer.
    ForwardAndDelete,
    /// The peer is the destination.
    Deliver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardAction {
    pub message_id: MessageId,
    pub kind: ActionKind,
}

/// Everything one node carries: contact history, social view, buffer, and
/// the ids of messages it has received as destination.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub windows: BTreeMap<NodeId, ContactWindow>,
    pub view: SocialNetworkView,
    pub buffer: Buffer,
    pub delivered: BTreeSet<MessageId>,
}

impl NodeState {
    pub fn new(id: NodeId, threshold: f64) -> Self {
        NodeState {
            id,
            windows: BTreeMap::new(),
            view: SocialNetworkView::new(id, threshold),
            buffer: Buffer::new(),
            delivered: BTreeSet::new(),
        }
    }

    /// This node's own weight towards `peer`; zero if never met.
    pub fn weight_to(&self, peer: NodeId, now: Seconds) -> LinkWeight {
        self.windows
            .get(&peer)
            .map(|w| w.link_weight(now))
            .unwrap_or(LinkWeight::ZERO)
    }

    /// Ids this node would refuse: everything buffered or already received.
    pub fn summary_vector(&self) -> BTreeSet<MessageId> {
        self.buffer
            .ids()
            .chain(self.delivered.iter().copied())
            .collect()
    }
}

/// Weights the peer advertised for each destination of `node`'s buffered
/// messages. Destinations it does not advertise read as zero.
pub fn weight_exchange(
    node: &NodeState,
    peer_hello: &HelloPayload,
) -> BTreeMap<NodeId, LinkWeight> {
    node.buffer
        .iter()
        .map(|m| (m.dst, peer_hello.weight_to(m.dst)))
        .collect()
}

/// What `node` sends to the peer that produced `peer_hello` during one
/// contact. `peer_has` is the peer's summary vector.
pub fn decide(
    protocol: Protocol,
    node: &NodeState,
    peer_hello: &HelloPayload,
    peer_has: &BTreeSet<MessageId>,
    now: Seconds,
) -> Vec<ForwardAction> {
    let peer = peer_hello.sender;
    let advertised = weight_exchange(node, peer_hello);
    let mut actions = Vec::new();

    for m in node.buffer.iter() {
        if !m.is_live(now) || peer_has.contains(&m.id) {
            continue;
        }
        let kind = if m.dst == peer {
            Some(ActionKind::Deliver)
        } else {
            let peer_weight = advertised[&m.dst];
            match protocol {
                Protocol::Epidemic => Some(ActionKind::Copy),
                Protocol::Friendship => {
                    let own = node.weight_to(m.dst, now);
                    (peer_weight.value() > node.view.threshold() && peer_weight > own)
                        .then_some(ActionKind::Copy)
                }
                Protocol::ProposedI | Protocol::ProposedII => {
                    social_decision(protocol, node, peer_hello, peer_weight, m.dst, now)
                }
            }
        };
        if let Some(kind) = kind {
            actions.push(ForwardAction {
                message_id: m.id,
                kind,
            });
        }
    }
    actions
}

/// Forwarding rule of the proposed schemes for one message bound to `dst`.
fn social_decision(
    protocol: Protocol,
    node: &NodeState,
    peer_hello: &HelloPayload,
    peer_weight: LinkWeight,
    dst: NodeId,
    now: Seconds,
) -> Option<ActionKind> {
    let peer = peer_hello.sender;
    let view = &node.view;
    if !view.graph().contains(peer) {
        return None;
    }
    let own = node.weight_to(dst, now);
    if peer_weight > own {
        let best = view
            .graph()
            .vertices()
            .filter(|&m| m != peer && m != dst)
            .all(|m| known_weight(node, m, dst, own) < peer_weight);
        return Some(if best {
            ActionKind::ForwardAndDelete
        } else {
            ActionKind::Copy
        });
    }
    let (own_cb, own_ceb) = view.self_centrality();
    let (mine, theirs): (CentralityScore, CentralityScore) = match protocol {
        Protocol::ProposedII => (own_ceb, peer_hello.sender_ceb),
        _ => (own_cb, peer_hello.sender_cb),
    };
    (theirs > mine).then_some(ActionKind::Copy)
}

/// `w(m, dst)` as far as `node` knows it: its own weight, or whatever `m`
/// last advertised.
fn known_weight(node: &NodeState, m: NodeId, dst: NodeId, own: LinkWeight) -> LinkWeight {
    if m == node.id {
        return own;
    }
    node.view
        .staged_hello(m)
        .map(|h| h.weight_to(dst))
        .unwrap_or(LinkWeight::ZERO)
}
