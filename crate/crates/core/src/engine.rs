//! Discrete-event scheduler, simulation clock and seeded random streams.
//!
//! Events are dispatched in `(fire_at, seq)` order where `seq` is a per-run
//! insertion counter, so two runs that schedule the same events in the same
//! order dispatch them identically.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::NodeId;

/// Simulated time in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics on negative or non-finite input; simulated time is a
    /// non-negative real.
    pub fn from_secs(secs: f64) -> Self {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "simulation time must be finite and non-negative, got {secs}"
        );
        SimTime(secs)
    }

    pub fn secs(self) -> f64 {
        self.0
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: f64) -> SimTime {
        SimTime::from_secs(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Handle returned by [`Scheduler::schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(u64);

impl EventId {
    pub fn seq(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("event at {fire_at} s scheduled in the past (clock is {now} s)")]
    InPast { fire_at: SimTime, now: SimTime },
}

/// A dispatched event.
#[derive(Debug, Clone)]
pub struct Event<P> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub target: Option<NodeId>,
    pub payload: P,
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.0.fire_at, self.0.seq).cmp(&(other.0.fire_at, other.0.seq))
    }
}

/// One row of the optional dispatch log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLogEntry {
    pub time: SimTime,
    pub seq: u64,
    pub target: Option<NodeId>,
    pub kind: &'static str,
}

/// Payloads name themselves for the dispatch log.
pub trait EventKind {
    fn kind(&self) -> &'static str;
}

pub struct Scheduler<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Queued<P>>>,
    pending: HashSet<u64>,
    log: Option<Vec<EventLogEntry>>,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            pending: HashSet::new(),
            log: None,
        }
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn log(&self) -> Option<&[EventLogEntry]> {
        self.log.as_deref()
    }

    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        target: Option<NodeId>,
        payload: P,
    ) -> Result<EventId, ScheduleError> {
        if fire_at < self.now {
            return Err(ScheduleError::InPast {
                fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert(seq);
        self.queue.push(Reverse(Queued(Event {
            fire_at,
            seq,
            target,
            payload,
        })));
        Ok(EventId(seq))
    }

    /// Schedules `delay` seconds after the current clock. Never fails for
    /// non-negative delays.
    pub fn schedule_in(&mut self, delay: f64, target: Option<NodeId>, payload: P) -> EventId {
        let at = self.now + delay.max(0.0);
        self.schedule(at, target, payload)
            .expect("non-negative delay is never in the past")
    }

    /// Returns true iff the event existed and had not fired yet.
    pub fn cancel(&mut self, id: EventId) -> bool {
        self.pending.remove(&id.0)
    }

    /// Time of the next live event, if any.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.drop_cancelled_head();
        self.queue.peek().map(|Reverse(q)| q.0.fire_at)
    }

    fn drop_cancelled_head(&mut self) {
        while let Some(Reverse(head)) = self.queue.peek() {
            if self.pending.contains(&head.0.seq) {
                break;
            }
            self.queue.pop();
        }
    }

    /// Pops the next live event with `fire_at <= t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<P>>
    where
        P: EventKind,
    {
        self.drop_cancelled_head();
        let due = matches!(self.queue.peek(), Some(Reverse(q)) if q.0.fire_at <= t_end);
        if !due {
            return None;
        }
        let Reverse(Queued(event)) = self.queue.pop()?;
        self.pending.remove(&event.seq);
        self.now = event.fire_at;
        if let Some(log) = self.log.as_mut() {
            log.push(EventLogEntry {
                time: event.fire_at,
                seq: event.seq,
                target: event.target,
                kind: event.payload.kind(),
            });
        }
        Some(event)
    }

    /// Dispatches every event with `fire_at <= t_end` through `handler` and
    /// leaves the clock at `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<usize, ScheduleError>
    where
        P: EventKind,
        F: FnMut(&mut Scheduler<P>, Event<P>),
    {
        if t_end < self.now {
            return Err(ScheduleError::InPast {
                fire_at: t_end,
                now: self.now,
            });
        }
        let mut dispatched = 0;
        while let Some(event) = self.pop_until(t_end) {
            handler(self, event);
            dispatched += 1;
        }
        self.now = t_end;
        Ok(dispatched)
    }
}

/// Writes the dispatch log as CSV with columns `time,seq,target,kind`.
pub fn write_event_log<W: std::io::Write>(log: &[EventLogEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "seq", "target", "kind"])?;
    for e in log {
        let target = e.target.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
        w.write_record([e.time.to_string(), e.seq.to_string(), target, e.kind.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Named random stream derived from a master seed. Streams with different
/// labels are statistically independent, so drawing from one never shifts
/// another.
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        RngStream {
            seed,
            label: label.to_owned(),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, label)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded with the seed through a splitmix step.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
