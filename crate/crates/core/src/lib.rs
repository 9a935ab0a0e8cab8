//! Simulator for social-network-aware routing in delay-tolerant networks.
//!
//! Nodes move through an arena, record when they meet each other, turn
//! those contact histories into link weights, and build a local social
//! graph from the friends whose weight clears a threshold. Routing
//! protocols then use the weights and the owner's expanded-ego betweenness
//! to choose relays. [`experiment`] sweeps protocols and parameters and
//! writes the delivery ratio, cost and efficiency of each cell as CSV.

pub mod config;
pub mod contact;
pub mod experiment;
pub mod graph;
pub mod mobility;
pub mod routing;
pub mod sim;
pub mod social;

pub use contact::{ContactInterval, ContactWindow, LinkWeight, Seconds};
pub use graph::{
    betweenness, endpoint_betweenness, expanded_ego_betweenness, extract_expanded_ego,
    CentralityScore, NodeId, SocialGraph,
};
pub use mobility::{Arena, Point, Trace, WaypointParams};
pub use routing::{decide, ActionKind, Buffer, ForwardAction, Message, NodeState, Protocol};
pub use sim::{replicate, run, MetricsReport, ReplicateReport, SimConfig, SimError, Simulation};
pub use social::{HelloPayload, SocialNetworkView};
