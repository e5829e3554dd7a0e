//! End-to-end protocol orchestration: collection rounds with
//! retransmission, dissemination rounds, and multi-hop forwarding over a
//! routing tree.

mod multihop;
mod session;

pub use multihop::{
    build_uniform_tree, multihop_combine_forward, multihop_encode_decode_forward, NodeKind,
    RoutingTree, TreeNode,
};
pub use session::{
    run_collection_round, run_dissemination_round, Activation, ChannelKind, DecoderKind,
    DisseminationOutcome, RoundOutcome, RoundRecord, SessionConfig,
};
