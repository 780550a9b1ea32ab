//! Aggregate metrics over packet records and the frame log.

use std::collections::BTreeMap;

use crate::link::{FrameKind, FrameLogRow};
use crate::traffic::{PacketRecord, PacketStatus};
use crate::SimTime;

/// Stated alongside every report: the load metric has no standard definition.
pub const TRAFFIC_LOAD_DEFINITION: &str =
    "traffic_load = (control + data) frame transmissions per second of the measurement window";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: SimTime,
    pub end: SimTime,
}

impl Window {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: SimTime) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounts {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub in_flight: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Seconds; `None` when nothing was delivered.
    pub avg_delay: Option<f64>,
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub in_flight: u64,
    /// bits/s over the window.
    pub throughput: f64,
    pub control_frames: u64,
    pub control_bytes: u64,
    pub data_frames: u64,
    pub frames_by_kind: BTreeMap<FrameKind, u64>,
    /// Transmissions per second.
    pub traffic_load: f64,
    pub window: Window,
    pub per_flow: BTreeMap<usize, FlowCounts>,
}

impl MetricsReport {
    pub fn delivery_ratio(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.delivered as f64 / self.sent as f64
        }
    }

    /// `sent = delivered + lost + in_flight` for every flow and overall.
    pub fn is_conserved(&self) -> bool {
        let flows_ok = self
            .per_flow
            .values()
            .all(|c| c.sent == c.delivered + c.lost + c.in_flight);
        flows_ok && self.sent == self.delivered + self.lost + self.in_flight
    }
}

/// `packet_size` is in bytes and is used for the throughput numerator.
pub fn report(
    records: &[PacketRecord],
    frames: &[FrameLogRow],
    window: Window,
    packet_size: u32,
) -> MetricsReport {
    let mut per_flow: BTreeMap<usize, FlowCounts> = BTreeMap::new();
    let mut delay_sum = 0.0;
    for r in records {
        let c = per_flow.entry(r.flow).or_default();
        c.sent += 1;
        match r.status {
            PacketStatus::Delivered { at, .. } => {
                c.delivered += 1;
                delay_sum += at - r.sent_at;
            }
            PacketStatus::Lost { .. } => c.lost += 1,
            PacketStatus::InFlight => c.in_flight += 1,
        }
    }
    let sum = |f: fn(&FlowCounts) -> u64| per_flow.values().map(f).sum::<u64>();
    let (sent, delivered, lost, in_flight) = (
        sum(|c| c.sent),
        sum(|c| c.delivered),
        sum(|c| c.lost),
        sum(|c| c.in_flight),
    );

    let mut frames_by_kind: BTreeMap<FrameKind, u64> = FrameKind::ALL.iter().map(|&k| (k, 0)).collect();
    let mut control_bytes = 0u64;
    let mut in_window = 0u64;
    for f in frames {
        *frames_by_kind.entry(f.kind).or_default() += 1;
        if f.kind.is_control() {
            control_bytes += u64::from(f.size);
        }
        if window.contains(f.time) {
            in_window += 1;
        }
    }
    let data_frames = frames_by_kind[&FrameKind::Data];
    let control_frames = frames.len() as u64 - data_frames;
    let len = window.length();
    let per_sec = |x: f64| if len > 0.0 { x / len } else { 0.0 };

    MetricsReport {
        avg_delay: (delivered > 0).then(|| delay_sum / delivered as f64),
        sent,
        delivered,
        lost,
        in_flight,
        throughput: per_sec(delivered as f64 * f64::from(packet_size) * 8.0),
        control_frames,
        control_bytes,
        data_frames,
        frames_by_kind,
        traffic_load: per_sec(in_window as f64),
        window,
        per_flow,
    }
}
