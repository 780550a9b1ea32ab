//! Deterministic discrete-event MANET simulator with DSDV routing and a
//! driven backup routing table (DBRT) that pre-computes node-disjoint
//! alternate paths for active destinations.
//!
//! The crate is organised bottom-up: [`engine`] orders events, [`radio`] and
//! [`mobility`] decide who can hear whom, [`link`] moves frames, [`dsdv`] and
//! [`dbrt`] route them, [`sim`] ties everything together, and [`metrics`],
//! [`oracle`] and [`verify`] judge the outcome. [`sweep`] runs many
//! independent simulations at once.

use std::fmt;

pub mod config;
pub mod dbrt;
pub mod dsdv;
pub mod engine;
pub mod link;
pub mod metrics;
pub mod mobility;
pub mod oracle;
pub mod radio;
pub mod sim;
pub mod sweep;
pub mod traffic;
pub mod verify;

pub use engine::SimTime;

/// Identifier of a mobile node, dense from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index fits in u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
