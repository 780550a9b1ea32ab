//! Constant-bit-rate flows and the per-packet ledger.

use std::sync::Arc;

use thiserror::Error;

use crate::{NodeId, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub src: NodeId,
    pub dst: NodeId,
    /// Bytes.
    pub packet_size: u32,
    /// Seconds between packets.
    pub interval: f64,
    pub start: SimTime,
    pub stop: SimTime,
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("flow source and destination are both {0}")]
    SelfFlow(NodeId),
    #[error("flow interval must be positive, got {0}")]
    Interval(f64),
    #[error("flow window [{start}, {stop}) is empty or exceeds the run ({duration} s)")]
    Window {
        start: SimTime,
        stop: SimTime,
        duration: SimTime,
    },
    #[error("packet size must be positive")]
    PacketSize,
}

impl FlowConfig {
    pub fn validate(&self, duration: SimTime) -> Result<(), FlowError> {
        if self.src == self.dst {
            return Err(FlowError::SelfFlow(self.src));
        }
        if !(self.interval > 0.0 && self.interval.is_finite()) {
            return Err(FlowError::Interval(self.interval));
        }
        if self.start >= self.stop || self.stop > duration {
            return Err(FlowError::Window {
                start: self.start,
                stop: self.stop,
                duration,
            });
        }
        if self.packet_size == 0 {
            return Err(FlowError::PacketSize);
        }
        Ok(())
    }
}

/// Send times `start, start + interval, ...` strictly before `stop`.
pub fn generate_cbr(flow: &FlowConfig) -> Vec<SimTime> {
    let span = flow.stop - flow.start;
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let offset = k as f64 * flow.interval;
        if offset >= span {
            break;
        }
        times.push(flow.start + offset);
        k += 1;
    }
    times
}

/// Application payload carried in DATA frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub pkt_id: u64,
    pub flow: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub sent_at: SimTime,
    pub hops: u32,
    pub ttl: u32,
    /// Recorded backup path the packet follows after a failover.
    pub backup_route: Option<Arc<[NodeId]>>,
}

impl DataPacket {
    pub fn new(pkt_id: u64, flow: usize, src: NodeId, dst: NodeId, sent_at: SimTime, ttl: u32) -> Self {
        DataPacket {
            pkt_id,
            flow,
            src,
            dst,
            sent_at,
            hops: 0,
            ttl,
            backup_route: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LossReason {
    /// No usable route and nowhere to hold the packet.
    NoRoute,
    /// Evicted from a full hold queue.
    HoldOverflow,
    /// Sent to a next hop that was no longer in range.
    OutOfRange,
    /// Dropped by the channel loss model.
    ChannelLoss,
    TtlExpired,
    /// The node holding the packet failed.
    NodeDown,
}

impl LossReason {
    pub fn as_str(self) -> &'static str {
        match self {
            LossReason::NoRoute => "no_route",
            LossReason::HoldOverflow => "hold_overflow",
            LossReason::OutOfRange => "out_of_range",
            LossReason::ChannelLoss => "channel_loss",
            LossReason::TtlExpired => "ttl_expired",
            LossReason::NodeDown => "node_down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacketStatus {
    InFlight,
    Delivered { at: SimTime, hops: u32 },
    Lost { at: SimTime, reason: LossReason },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub pkt_id: u64,
    pub flow: usize,
    pub sent_at: SimTime,
    pub status: PacketStatus,
}

impl PacketRecord {
    pub fn delay(&self) -> Option<f64> {
        match self.status {
            PacketStatus::Delivered { at, .. } => Some(at - self.sent_at),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Recorded,
    Duplicate,
    Unknown,
    AlreadyLost,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PacketLedger {
    records: Vec<PacketRecord>,
    pub duplicate_deliveries: u64,
    pub unknown_packets: u64,
}

impl PacketLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, flow: usize, sent_at: SimTime) -> u64 {
        let pkt_id = self.records.len() as u64;
        self.records.push(PacketRecord {
            pkt_id,
            flow,
            sent_at,
            status: PacketStatus::InFlight,
        });
        pkt_id
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn get(&self, pkt_id: u64) -> Option<&PacketRecord> {
        self.records.get(pkt_id as usize)
    }

    /// First delivery wins; later ones only bump a counter.
    pub fn record_delivery(&mut self, pkt_id: u64, now: SimTime, hops: u32) -> RecordOutcome {
        let Some(rec) = self.records.get_mut(pkt_id as usize) else {
            self.unknown_packets += 1;
            return RecordOutcome::Unknown;
        };
        match rec.status {
            PacketStatus::InFlight => {
                rec.status = PacketStatus::Delivered { at: now, hops };
                RecordOutcome::Recorded
            }
            PacketStatus::Delivered { .. } => {
                self.duplicate_deliveries += 1;
                RecordOutcome::Duplicate
            }
            PacketStatus::Lost { .. } => RecordOutcome::AlreadyLost,
        }
    }

    pub fn record_loss(&mut self, pkt_id: u64, now: SimTime, reason: LossReason) -> RecordOutcome {
        let Some(rec) = self.records.get_mut(pkt_id as usize) else {
            self.unknown_packets += 1;
            return RecordOutcome::Unknown;
        };
        match rec.status {
            PacketStatus::InFlight => {
                rec.status = PacketStatus::Lost { at: now, reason };
                RecordOutcome::Recorded
            }
            PacketStatus::Delivered { .. } => RecordOutcome::Duplicate,
            PacketStatus::Lost { .. } => RecordOutcome::AlreadyLost,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn flow(start: f64, stop: f64, interval: f64) -> FlowConfig {
        FlowConfig {
            src: NodeId(0),
            dst: NodeId(1),
            packet_size: 512,
            interval,
            start: t(start),
            stop: t(stop),
        }
    }

    #[test]
    fn cbr_send_times() {
        let times: Vec<f64> = generate_cbr(&flow(1.0, 2.0, 0.25)).iter().map(|t| t.secs()).collect();
        assert_eq!(times, vec![1.0, 1.25, 1.5, 1.75]);
    }

    #[test]
    fn empty_window_rejected() {
        assert!(matches!(
            flow(5.0, 5.0, 0.25).validate(t(250.0)),
            Err(FlowError::Window { .. })
        ));
        let mut f = flow(0.0, 10.0, 0.25);
        f.dst = f.src;
        assert_eq!(f.validate(t(250.0)), Err(FlowError::SelfFlow(NodeId(0))));
    }

    #[test]
    fn saturating_interval() {
        // One 512 B packet per serialization time fills 2 Mb/s exactly.
        assert_eq!(512.0 * 8.0 / 2e6, 0.002048);
        let f = flow(0.0, 1.0, 0.02048);
        assert_eq!(generate_cbr(&f).len(), 49);
    }

    #[test]
    fn ledger_delivery_rules() {
        let mut l = PacketLedger::new();
        let a = l.register(0, t(1.0));
        let b = l.register(0, t(1.25));
        assert_eq!(l.record_delivery(a, t(1.002048), 1), RecordOutcome::Recorded);
        assert_eq!(l.get(a).unwrap().delay(), Some(1.002048 - 1.0));
        assert_eq!(l.record_delivery(a, t(2.0), 1), RecordOutcome::Duplicate);
        assert_eq!(l.duplicate_deliveries, 1);
        assert_eq!(
            l.get(a).unwrap().status,
            PacketStatus::Delivered { at: t(1.002048), hops: 1 }
        );
        assert_eq!(l.record_delivery(99, t(2.0), 1), RecordOutcome::Unknown);
        assert_eq!(l.unknown_packets, 1);
        assert_eq!(l.get(b).unwrap().status, PacketStatus::InFlight);
    }
}
