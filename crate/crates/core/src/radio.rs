//! Node positions, the free-space range model and neighbor sets.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Free-space propagation: received power falls as `1/d^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    /// Watts.
    pub tx_power: f64,
    /// Watts.
    pub rx_threshold: f64,
}

/// 0.28 W at 250 m under unit-gain free space.
pub const DEFAULT_TX_POWER: f64 = 0.28;
pub const DEFAULT_RX_THRESHOLD: f64 = 4.48e-6;

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            tx_power: DEFAULT_TX_POWER,
            rx_threshold: DEFAULT_RX_THRESHOLD,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("tx_power must be positive and finite, got {0}")]
    TxPower(f64),
    #[error("rx_threshold must be positive and finite, got {0}")]
    RxThreshold(f64),
    #[error("degenerate geometry: distance {0} m")]
    Degenerate(f64),
    #[error("node {0} is not in the snapshot")]
    UnknownNode(NodeId),
}

impl RadioModel {
    pub fn new(tx_power: f64, rx_threshold: f64) -> Result<Self, RadioError> {
        let m = RadioModel {
            tx_power,
            rx_threshold,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.tx_power.is_finite() && self.tx_power > 0.0) {
            return Err(RadioError::TxPower(self.tx_power));
        }
        if !(self.rx_threshold.is_finite() && self.rx_threshold > 0.0) {
            return Err(RadioError::RxThreshold(self.rx_threshold));
        }
        Ok(())
    }

    /// Distance at which received power equals the threshold.
    pub fn range(&self) -> f64 {
        (self.tx_power / self.rx_threshold).sqrt()
    }

    pub fn received_power(&self, d: f64) -> Result<f64, RadioError> {
        if !(d > 0.0) {
            return Err(RadioError::Degenerate(d));
        }
        Ok(self.tx_power / (d * d))
    }

    /// Inclusive at the boundary; co-located nodes are always in range.
    pub fn in_range(&self, a: &Position, b: &Position) -> bool {
        a.distance(b) <= self.range()
    }
}

/// Positions of the live nodes at one instant. Dead or absent nodes are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySnapshot {
    pub positions: Vec<Option<Position>>,
    pub taken_at: SimTime,
}

impl TopologySnapshot {
    pub fn new(positions: Vec<Option<Position>>, taken_at: SimTime) -> Self {
        TopologySnapshot {
            positions,
            taken_at,
        }
    }

    pub fn from_positions(positions: &[Position]) -> Self {
        TopologySnapshot {
            positions: positions.iter().copied().map(Some).collect(),
            taken_at: SimTime::ZERO,
        }
    }

    pub fn position(&self, n: NodeId) -> Option<Position> {
        self.positions.get(n.index()).copied().flatten()
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.positions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_some())
            .map(|(i, _)| NodeId::from_index(i))
    }

    pub fn neighbors(&self, model: &RadioModel, n: NodeId) -> Result<BTreeSet<NodeId>, RadioError> {
        let me = self.position(n).ok_or(RadioError::UnknownNode(n))?;
        Ok(self
            .live_nodes()
            .filter(|&m| m != n)
            .filter(|&m| self.position(m).is_some_and(|p| model.in_range(&me, &p)))
            .collect())
    }

    pub fn linked(&self, model: &RadioModel, a: NodeId, b: NodeId) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(pa), Some(pb)) => model.in_range(&pa, &pb),
            _ => false,
        }
    }

    /// Sorted adjacency lists for every slot; dead slots get an empty list.
    pub fn adjacency(&self, model: &RadioModel) -> Vec<Vec<NodeId>> {
        let r = model.range();
        let n = self.positions.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            let Some(pi) = self.positions[i] else { continue };
            for j in (i + 1)..n {
                let Some(pj) = self.positions[j] else { continue };
                if pi.distance(&pj) <= r {
                    adj[i].push(NodeId::from_index(j));
                    adj[j].push(NodeId::from_index(i));
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}
