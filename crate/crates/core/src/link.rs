//! Frames, the idealized shared medium, HELLO beacons and neighbor liveness.
//!
//! The medium has no contention: every frame arrives exactly
//! `size * 8 / bandwidth + proc_delay` seconds after it is sent, unless it is
//! dropped by independent per-receiver loss.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::dbrt::{QueryMessage, ReplyMessage};
use crate::dsdv::UpdateMessage;
use crate::radio::{RadioModel, TopologySnapshot};
use crate::traffic::DataPacket;
use crate::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Hello,
    DsdvUpdate,
    DbrtQuery,
    DbrtReply,
    Data,
}

impl FrameKind {
    pub const ALL: [FrameKind; 5] = [
        FrameKind::Hello,
        FrameKind::DsdvUpdate,
        FrameKind::DbrtQuery,
        FrameKind::DbrtReply,
        FrameKind::Data,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Hello => "HELLO",
            FrameKind::DsdvUpdate => "DSDV_UPDATE",
            FrameKind::DbrtQuery => "DBRT_QUERY",
            FrameKind::DbrtReply => "DBRT_REPLY",
            FrameKind::Data => "DATA",
        }
    }

    pub fn is_control(self) -> bool {
        self != FrameKind::Data
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Destination {
    Unicast(NodeId),
    Broadcast,
}

impl fmt::Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Destination::Unicast(n) => write!(f, "{n}"),
            Destination::Broadcast => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Hello,
    Update(UpdateMessage),
    Query(QueryMessage),
    Reply(ReplyMessage),
    Data(DataPacket),
}

impl Payload {
    pub fn kind(&self) -> FrameKind {
        match self {
            Payload::Hello => FrameKind::Hello,
            Payload::Update(_) => FrameKind::DsdvUpdate,
            Payload::Query(_) => FrameKind::DbrtQuery,
            Payload::Reply(_) => FrameKind::DbrtReply,
            Payload::Data(_) => FrameKind::Data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub uid: u64,
    pub src: NodeId,
    pub dst: Destination,
    /// Bytes.
    pub size: u32,
    pub payload: Payload,
}

impl Frame {
    pub fn kind(&self) -> FrameKind {
        self.payload.kind()
    }
}

/// Byte sizes used for overhead accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSizes {
    pub hello: u32,
    pub update_header: u32,
    pub update_entry: u32,
    pub dbrt_header: u32,
    pub dbrt_node_id: u32,
}

impl Default for FrameSizes {
    fn default() -> Self {
        FrameSizes {
            hello: 28,
            update_header: 12,
            update_entry: 12,
            dbrt_header: 20,
            dbrt_node_id: 4,
        }
    }
}

impl FrameSizes {
    pub fn update(&self, entries: usize) -> u32 {
        self.update_header + self.update_entry * entries as u32
    }

    pub fn dbrt(&self, carried_ids: usize) -> u32 {
        self.dbrt_header + self.dbrt_node_id * carried_ids as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// bits/s
    pub bandwidth: f64,
    /// seconds per hop
    pub proc_delay: f64,
    pub loss_prob: f64,
    /// seconds
    pub hello_interval: f64,
    pub miss_threshold: u32,
    pub sizes: FrameSizes,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            bandwidth: 2_000_000.0,
            proc_delay: 0.0,
            loss_prob: 0.0,
            hello_interval: 2.0,
            miss_threshold: 3,
            sizes: FrameSizes::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("bandwidth must be positive, got {0}")]
    Bandwidth(f64),
    #[error("proc_delay must be non-negative, got {0}")]
    ProcDelay(f64),
    #[error("loss_prob must lie in [0, 1), got {0}")]
    LossProb(f64),
    #[error("hello_interval must be positive, got {0}")]
    HelloInterval(f64),
    #[error("miss_threshold must be at least 1")]
    MissThreshold,
    #[error("frame sizes must be positive")]
    FrameSize,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(LinkError::Bandwidth(self.bandwidth));
        }
        if !(self.proc_delay >= 0.0 && self.proc_delay.is_finite()) {
            return Err(LinkError::ProcDelay(self.proc_delay));
        }
        if !(0.0..1.0).contains(&self.loss_prob) {
            return Err(LinkError::LossProb(self.loss_prob));
        }
        if !(self.hello_interval > 0.0 && self.hello_interval.is_finite()) {
            return Err(LinkError::HelloInterval(self.hello_interval));
        }
        if self.miss_threshold == 0 {
            return Err(LinkError::MissThreshold);
        }
        let s = &self.sizes;
        if [s.hello, s.update_header, s.dbrt_header].contains(&0) {
            return Err(LinkError::FrameSize);
        }
        Ok(())
    }

    pub fn latency(&self, size: u32) -> f64 {
        f64::from(size) * 8.0 / self.bandwidth + self.proc_delay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOutcome {
    Delivered,
    Dropped,
    OutOfRange,
}

impl FrameOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameOutcome::Delivered => "delivered",
            FrameOutcome::Dropped => "dropped",
            FrameOutcome::OutOfRange => "out_of_range",
        }
    }
}

/// Radio view of the network at the current tick.
pub struct Medium<'a> {
    pub snapshot: &'a TopologySnapshot,
    pub model: &'a RadioModel,
    /// Sorted neighbor lists, indexed by node.
    pub adjacency: &'a [Vec<NodeId>],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub to: NodeId,
    pub at: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub deliveries: Vec<Delivery>,
    pub dropped: Vec<NodeId>,
    pub outcome: FrameOutcome,
}

/// Computes which receivers get `frame` and when. Unicast to an out-of-range
/// destination yields no delivery.
pub fn transmit<R: Rng + ?Sized>(
    frame: &Frame,
    medium: &Medium<'_>,
    cfg: &LinkConfig,
    now: SimTime,
    rng: &mut R,
) -> Transmission {
    let at = now + cfg.latency(frame.size);
    let receivers: Vec<NodeId> = match frame.dst {
        Destination::Unicast(to) => {
            if to != frame.src && medium.snapshot.linked(medium.model, frame.src, to) {
                vec![to]
            } else {
                Vec::new()
            }
        }
        Destination::Broadcast => medium
            .adjacency
            .get(frame.src.index())
            .cloned()
            .unwrap_or_default(),
    };
    if receivers.is_empty() {
        return Transmission {
            deliveries: Vec::new(),
            dropped: Vec::new(),
            outcome: FrameOutcome::OutOfRange,
        };
    }
    let mut deliveries = Vec::with_capacity(receivers.len());
    let mut dropped = Vec::new();
    for to in receivers {
        if cfg.loss_prob > 0.0 && rng.gen::<f64>() < cfg.loss_prob {
            dropped.push(to);
        } else {
            deliveries.push(Delivery { to, at });
        }
    }
    let outcome = if deliveries.is_empty() {
        FrameOutcome::Dropped
    } else {
        FrameOutcome::Delivered
    };
    Transmission {
        deliveries,
        dropped,
        outcome,
    }
}

pub fn hello_frame(node: NodeId, uid: u64, sizes: &FrameSizes) -> Frame {
    Frame {
        uid,
        src: node,
        dst: Destination::Broadcast,
        size: sizes.hello,
        payload: Payload::Hello,
    }
}

/// Neighbors heard recently. A neighbor silent for longer than
/// `miss_threshold * hello_interval` is declared dead.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLiveness {
    last_heard: BTreeMap<NodeId, SimTime>,
    pub hello_interval: f64,
    pub miss_threshold: u32,
}

impl NeighborLiveness {
    pub fn new(hello_interval: f64, miss_threshold: u32) -> Self {
        NeighborLiveness {
            last_heard: BTreeMap::new(),
            hello_interval,
            miss_threshold: miss_threshold.max(1),
        }
    }

    /// Records a frame from `n`; returns true if `n` was not known before.
    pub fn heard(&mut self, n: NodeId, now: SimTime) -> bool {
        self.last_heard.insert(n, now).is_none()
    }

    pub fn is_alive(&self, n: NodeId) -> bool {
        self.last_heard.contains_key(&n)
    }

    pub fn last_heard(&self, n: NodeId) -> Option<SimTime> {
        self.last_heard.get(&n).copied()
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.last_heard.keys().copied()
    }

    /// Removes `n`; returns true if it was alive (deduplicates break notices).
    pub fn forget(&mut self, n: NodeId) -> bool {
        self.last_heard.remove(&n).is_some()
    }

    pub fn detect_failures(&mut self, now: SimTime) -> Vec<NodeId> {
        let limit = f64::from(self.miss_threshold) * self.hello_interval;
        let dead: Vec<NodeId> = self
            .last_heard
            .iter()
            .filter(|(_, &t)| now - t > limit)
            .map(|(&n, _)| n)
            .collect();
        for n in &dead {
            self.last_heard.remove(n);
        }
        dead
    }
}

/// One transmission in the frame log.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLogRow {
    pub time: SimTime,
    pub uid: u64,
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: Destination,
    pub size: u32,
    pub outcome: FrameOutcome,
}

/// Writes CSV `time,uid,kind,src,dst,size,outcome`; broadcast dst is `*`.
pub fn write_frame_log<W: std::io::Write>(rows: &[FrameLogRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "uid", "kind", "src", "dst", "size", "outcome"])?;
    for r in rows {
        w.write_record([
            r.time.to_string(),
            r.uid.to_string(),
            r.kind.to_string(),
            r.src.to_string(),
            r.dst.to_string(),
            r.size.to_string(),
            r.outcome.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub type SharedFrame = Arc<Frame>;
