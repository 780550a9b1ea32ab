//! Scenario orchestration: one single-threaded discrete-event run.
//!
//! Every node runs the same agents: HELLO beaconing, a DSDV routing table,
//! a per-destination hold queue, and (when enabled) a DBRT agent. Node
//! positions come from precomputed trajectories and are sampled into a
//! topology snapshot every tick; links that vanish between ticks are
//! reported to both endpoints at once, like link-layer feedback.
//!
//! Randomness is split into independent streams by purpose. DSDV and HELLO
//! never read the streams that DATA or DBRT frames use, so a run with DBRT
//! enabled sees exactly the same DSDV control traffic as one without.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::config::{ConfigError, MobilityModel, ScenarioConfig};
use crate::dbrt::{
    build_adjacent_list, check_backup_path, evaluate_query, failover, forwarding_decision, issue_queries, select_backup,
    BackupEntry, DbrtAgent, DbrtCounters, ForwardDecision, LocalView, QueryOutcome, RebuildTrigger, Unavailable,
};
use crate::dsdv::{trace_in, RoutingTable};
use crate::engine::{EventKind, EventLogEntry, RngStream, Scheduler};
use crate::link::{
    hello_frame, transmit, Destination, Frame, FrameKind, FrameLogRow, FrameOutcome, Medium, NeighborLiveness,
    Payload,
};
use crate::metrics::{report, MetricsReport, Window};
use crate::mobility::Trajectory;
use crate::oracle::is_connected;
use crate::radio::{Position, TopologySnapshot};
use crate::traffic::{generate_cbr, DataPacket, FlowConfig, LossReason, PacketLedger, PacketRecord};
use crate::verify::Monitors;
use crate::{NodeId, SimTime};

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no placement of {nodes} nodes met the neighbor constraints in {attempts} attempts")]
    Placement { nodes: usize, attempts: usize },
    #[error("flow {index}: {source}")]
    Flow {
        index: usize,
        source: crate::traffic::FlowError,
    },
    #[error("cannot draw {wanted} distinct flows among {nodes} nodes")]
    FlowCount { wanted: usize, nodes: usize },
    #[error("writing {file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("writing {file}: {source}")]
    Csv { file: String, source: csv::Error },
}

#[derive(Debug, Clone)]
enum Ev {
    Tick,
    Hello(NodeId),
    Periodic(NodeId),
    Trigger(NodeId),
    Receive { to: NodeId, frame: Arc<Frame> },
    Cbr { flow: usize },
    RoundStart { node: NodeId, dest: NodeId },
    RoundClose { node: NodeId, query_id: u64 },
    NodeDown(NodeId),
    PrimaryFault(usize),
}

impl EventKind for Ev {
    fn kind(&self) -> &'static str {
        match self {
            Ev::Tick => "tick",
            Ev::Hello(_) => "hello",
            Ev::Periodic(_) => "dsdv_periodic",
            Ev::Trigger(_) => "dsdv_trigger",
            Ev::Receive { .. } => "receive",
            Ev::Cbr { .. } => "cbr_send",
            Ev::RoundStart { .. } => "dbrt_round_start",
            Ev::RoundClose { .. } => "dbrt_round_close",
            Ev::NodeDown(_) => "node_down",
            Ev::PrimaryFault(_) => "primary_fault",
        }
    }
}

/// A node switching a destination onto its backup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailoverRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub dest: NodeId,
    /// The failed next hop, when the switch was caused by a local break.
    pub dead: Option<NodeId>,
    pub via: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultRecord {
    pub time: SimTime,
    pub node: NodeId,
}

/// An installed backup together with the primary path it was checked
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct InstallRecord {
    pub owner: NodeId,
    pub entry: BackupEntry,
    pub primary: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Dsdv,
    Dbrt,
}

impl Variant {
    pub fn of(cfg: &ScenarioConfig) -> Self {
        if cfg.dbrt.enabled {
            Variant::Dbrt
        } else {
            Variant::Dsdv
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Dsdv => "dsdv",
            Variant::Dbrt => "dbrt",
        }
    }
}

struct Streams {
    routing: RngStream,
    dbrt: RngStream,
    loss_control: RngStream,
    loss_dbrt: RngStream,
    loss_data: RngStream,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    sched: Scheduler<Ev>,
    end: SimTime,
    trajectories: Vec<Trajectory>,
    alive: Vec<bool>,
    snapshot: TopologySnapshot,
    adjacency: Vec<Vec<NodeId>>,
    tables: Vec<RoutingTable>,
    liveness: Vec<NeighborLiveness>,
    trigger_pending: Vec<bool>,
    hold: Vec<BTreeMap<NodeId, VecDeque<DataPacket>>>,
    agents: Vec<DbrtAgent>,
    flows: Vec<FlowConfig>,
    ledger: PacketLedger,
    frames: Vec<FrameLogRow>,
    streams: Streams,
    next_uid: u64,
    next_query_id: u64,
    dsdv_in_flight: usize,
    failovers: Vec<FailoverRecord>,
    faults: Vec<FaultRecord>,
    installs: Vec<InstallRecord>,
    monitors: Option<Monitors>,
}

/// Everything a finished run produced.
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub report: MetricsReport,
    pub counters: DbrtCounters,
    pub frames: Vec<FrameLogRow>,
    pub records: Vec<PacketRecord>,
    pub trajectories: Vec<Trajectory>,
    pub tables: Vec<RoutingTable>,
    pub agents: Vec<DbrtAgent>,
    pub flows: Vec<FlowConfig>,
    pub failovers: Vec<FailoverRecord>,
    pub faults: Vec<FaultRecord>,
    pub installs: Vec<InstallRecord>,
    pub events: Option<Vec<EventLogEntry>>,
    pub monitors: Option<Monitors>,
}

impl RunOutput {
    pub fn variant(&self) -> Variant {
        Variant::of(&self.config)
    }
}

fn place(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<Vec<Position>, SimError> {
    if let Some(ps) = &cfg.positions {
        return Ok(ps.clone());
    }
    let constrained = cfg.min_neighbors > 0 || cfg.require_connected;
    let attempts = if constrained { PLACEMENT_ATTEMPTS } else { 1 };
    for _ in 0..attempts {
        let ps: Vec<Position> = (0..cfg.node_count)
            .map(|_| cfg.mobility.random_position(rng.rng()))
            .collect();
        if !constrained {
            return Ok(ps);
        }
        let adj = TopologySnapshot::from_positions(&ps).adjacency(&cfg.radio);
        let degree_ok = adj.iter().all(|l| l.len() >= cfg.min_neighbors);
        if degree_ok && (!cfg.require_connected || is_connected(&adj)) {
            return Ok(ps);
        }
    }
    Err(SimError::Placement {
        nodes: cfg.node_count,
        attempts,
    })
}

fn draw_flows(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<Vec<FlowConfig>, SimError> {
    let interval = cfg.packet_interval();
    let pairs: Vec<(NodeId, NodeId)> = match &cfg.traffic.flows {
        Some(f) => f.clone(),
        None => {
            let n = cfg.node_count;
            if cfg.traffic.flow_count > n * (n - 1) {
                return Err(SimError::FlowCount {
                    wanted: cfg.traffic.flow_count,
                    nodes: n,
                });
            }
            let mut all: Vec<(NodeId, NodeId)> = (0..n)
                .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
                .map(|(a, b)| (NodeId::from_index(a), NodeId::from_index(b)))
                .collect();
            all.shuffle(rng.rng());
            all.truncate(cfg.traffic.flow_count);
            all
        }
    };
    let stop = SimTime::from_secs(cfg.traffic_stop());
    pairs
        .into_iter()
        .enumerate()
        .map(|(index, (src, dst))| {
            let offset = rng.rng().gen_range(0.0..interval);
            let flow = FlowConfig {
                src,
                dst,
                packet_size: cfg.traffic.packet_size,
                interval,
                start: SimTime::from_secs((cfg.traffic.start + offset).min(cfg.traffic_stop())),
                stop,
            };
            flow.validate(SimTime::from_secs(cfg.duration))
                .map_err(|source| SimError::Flow { index, source })?;
            Ok(flow)
        })
        .collect()
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let seed = cfg.seed;
        let n = cfg.node_count;
        let end = SimTime::from_secs(cfg.duration);
        let mut placement = RngStream::new(seed, "placement");
        let mut mobility = RngStream::new(seed, "mobility");
        let mut traffic = RngStream::new(seed, "traffic");
        let starts = place(cfg, &mut placement)?;
        let trajectories: Vec<Trajectory> = starts
            .iter()
            .map(|&p| match cfg.mobility_model {
                MobilityModel::Static => Trajectory::stationary(p),
                MobilityModel::RandomWaypoint => Trajectory::random_waypoint(p, &cfg.mobility, end, mobility.rng()),
            })
            .collect();
        let flows = draw_flows(cfg, &mut traffic)?;

        let mut sim = Simulation {
            cfg: cfg.clone(),
            sched: Scheduler::new(),
            end,
            alive: vec![true; n],
            snapshot: TopologySnapshot::from_positions(&starts),
            adjacency: vec![Vec::new(); n],
            tables: (0..n).map(|i| RoutingTable::new(NodeId::from_index(i), SimTime::ZERO)).collect(),
            liveness: (0..n)
                .map(|_| NeighborLiveness::new(cfg.link.hello_interval, cfg.link.miss_threshold))
                .collect(),
            trigger_pending: vec![false; n],
            hold: vec![BTreeMap::new(); n],
            agents: vec![DbrtAgent::default(); n],
            flows,
            ledger: PacketLedger::new(),
            frames: Vec::new(),
            streams: Streams {
                routing: RngStream::new(seed, "routing"),
                dbrt: RngStream::new(seed, "dbrt"),
                loss_control: RngStream::new(seed, "loss.control"),
                loss_dbrt: RngStream::new(seed, "loss.dbrt"),
                loss_data: RngStream::new(seed, "loss.data"),
            },
            next_uid: 0,
            next_query_id: 0,
            dsdv_in_flight: 0,
            failovers: Vec::new(),
            faults: Vec::new(),
            installs: Vec::new(),
            monitors: None,
            trajectories,
        };
        sim.adjacency = sim.snapshot.adjacency(&sim.cfg.radio);
        sim.schedule_initial();
        Ok(sim)
    }

    fn schedule_initial(&mut self) {
        let n = self.cfg.node_count;
        let at = |s: f64| SimTime::from_secs(s);
        self.sched
            .schedule(at(self.cfg.tick), None, Ev::Tick)
            .expect("first tick lies ahead");
        for i in 0..n {
            let node = NodeId::from_index(i);
            let hello = self.streams.routing.rng().gen_range(0.0..self.cfg.link.hello_interval);
            let dump = self.streams.routing.rng().gen_range(0.0..self.cfg.dsdv.periodic_interval);
            self.sched.schedule(at(hello), Some(node), Ev::Hello(node)).expect("future");
            self.sched.schedule(at(dump), Some(node), Ev::Periodic(node)).expect("future");
        }
        for (flow, f) in self.flows.iter().enumerate() {
            for t in generate_cbr(f) {
                self.sched.schedule(t, Some(f.src), Ev::Cbr { flow }).expect("future");
            }
        }
        for f in self.cfg.fault.node_down.clone() {
            self.sched
                .schedule(at(f.at), Some(f.node), Ev::NodeDown(f.node))
                .expect("future");
        }
        for (i, f) in self.cfg.fault.primary_node.iter().enumerate() {
            self.sched
                .schedule(at(f.at), Some(f.src), Ev::PrimaryFault(i))
                .expect("future");
        }
    }

    /// Records every dispatched event for `events.csv`.
    pub fn with_event_log(mut self) -> Self {
        self.sched = std::mem::take(&mut self.sched).with_log();
        self
    }

    /// Arms the invariant monitors used by `verify`.
    pub fn with_monitors(mut self) -> Self {
        self.monitors = Some(Monitors::new());
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn tables(&self) -> &[RoutingTable] {
        &self.tables
    }

    pub fn agents(&self) -> &[DbrtAgent] {
        &self.agents
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    pub fn snapshot(&self) -> &TopologySnapshot {
        &self.snapshot
    }

    pub fn flows(&self) -> &[FlowConfig] {
        &self.flows
    }

    pub fn is_alive(&self, n: NodeId) -> bool {
        self.alive[n.index()]
    }

    /// No DSDV update is in the air and none is waiting to be sent.
    pub fn is_dsdv_quiescent(&self) -> bool {
        self.dsdv_in_flight == 0 && !self.trigger_pending.iter().any(|&p| p)
    }

    /// Processes one event no later than the scenario end. Returns false
    /// when nothing is left to do.
    pub fn step(&mut self) -> bool {
        match self.sched.pop_until(self.end) {
            Some(ev) => {
                self.dispatch(ev.payload);
                true
            }
            None => false,
        }
    }

    pub fn run_until(&mut self, t: SimTime) {
        let t = t.min(self.end);
        while self.sched.peek_time().is_some_and(|at| at <= t) {
            self.step();
        }
    }

    /// Runs to `from`, then on until DSDV is quiescent or `limit` passes.
    /// Returns whether a quiescent point was reached.
    pub fn run_until_quiescent(&mut self, from: SimTime, limit: SimTime) -> bool {
        self.run_until(from);
        loop {
            if self.is_dsdv_quiescent() {
                return true;
            }
            match self.sched.peek_time() {
                Some(at) if at <= limit && at <= self.end => {
                    self.step();
                }
                _ => return self.is_dsdv_quiescent(),
            }
        }
    }

    /// Schedules a construction round at `node` for `dest` right now.
    pub fn start_round(&mut self, node: NodeId, dest: NodeId) {
        self.agents[node.index()].rebuild.entry(dest).or_default().round_pending = true;
        let now = self.now();
        self.sched
            .schedule(now, Some(node), Ev::RoundStart { node, dest })
            .expect("now is never in the past");
    }

    pub fn run(mut self) -> RunOutput {
        while self.step() {}
        self.finish()
    }

    pub fn finish(self) -> RunOutput {
        let window = Window {
            start: SimTime::from_secs(self.cfg.traffic.start),
            end: SimTime::from_secs(self.cfg.traffic_stop()),
        };
        let records = self.ledger.records().to_vec();
        let report = report(&records, &self.frames, window, self.cfg.traffic.packet_size);
        let mut counters = DbrtCounters::default();
        for a in &self.agents {
            counters.add(&a.counters);
        }
        RunOutput {
            report,
            counters,
            events: self.sched.log().map(<[_]>::to_vec),
            frames: self.frames,
            records,
            trajectories: self.trajectories,
            tables: self.tables,
            agents: self.agents,
            flows: self.flows,
            failovers: self.failovers,
            faults: self.faults,
            installs: self.installs,
            monitors: self.monitors,
            config: self.cfg,
        }
    }

    fn dispatch(&mut self, ev: Ev) {
        match ev {
            Ev::Tick => self.on_tick(),
            Ev::Hello(n) => self.on_hello(n),
            Ev::Periodic(n) => self.on_periodic(n),
            Ev::Trigger(n) => self.on_trigger(n),
            Ev::Receive { to, frame } => self.on_receive(to, frame),
            Ev::Cbr { flow } => self.on_cbr(flow),
            Ev::RoundStart { node, dest } => self.on_round_start(node, dest),
            Ev::RoundClose { node, query_id } => self.on_round_close(node, query_id),
            Ev::NodeDown(n) => self.kill(n),
            Ev::PrimaryFault(i) => self.on_primary_fault(i),
        }
    }

    fn uid(&mut self) -> u64 {
        self.next_uid += 1;
        self.next_uid
    }

    /// Puts `frame` on the air and schedules its receptions.
    fn send(&mut self, frame: Frame) -> FrameOutcome {
        let now = self.now();
        let kind = frame.kind();
        let rng = match kind {
            FrameKind::Hello | FrameKind::DsdvUpdate => &mut self.streams.loss_control,
            FrameKind::DbrtQuery | FrameKind::DbrtReply => &mut self.streams.loss_dbrt,
            FrameKind::Data => &mut self.streams.loss_data,
        };
        let medium = Medium {
            snapshot: &self.snapshot,
            model: &self.cfg.radio,
            adjacency: &self.adjacency,
        };
        let tx = transmit(&frame, &medium, &self.cfg.link, now, rng.rng());
        if let (Some(m), Destination::Unicast(to)) = (self.monitors.as_mut(), frame.dst) {
            m.on_unicast(now, frame.src, to, tx.outcome, &self.snapshot, &self.cfg.radio);
        }
        self.frames.push(FrameLogRow {
            time: now,
            uid: frame.uid,
            kind,
            src: frame.src,
            dst: frame.dst,
            size: frame.size,
            outcome: tx.outcome,
        });
        let frame = Arc::new(frame);
        for d in &tx.deliveries {
            if kind == FrameKind::DsdvUpdate {
                self.dsdv_in_flight += 1;
            }
            self.sched.schedule(
                d.at,
                Some(d.to),
                Ev::Receive {
                    to: d.to,
                    frame: Arc::clone(&frame),
                },
            )
            .expect("deliveries lie ahead");
        }
        tx.outcome
    }

    fn refresh_topology(&mut self) {
        let now = self.now();
        let positions = self
            .trajectories
            .iter()
            .zip(&self.alive)
            .map(|(t, &up)| up.then(|| t.position_at(now)))
            .collect();
        self.snapshot = TopologySnapshot::new(positions, now);
        let old = std::mem::replace(&mut self.adjacency, self.snapshot.adjacency(&self.cfg.radio));
        for (i, before) in old.iter().enumerate() {
            if !self.alive[i] {
                continue;
            }
            let node = NodeId::from_index(i);
            for &m in before {
                if self.adjacency[i].binary_search(&m).is_err() && self.liveness[i].forget(m) {
                    self.link_break(node, m);
                }
            }
        }
    }

    fn on_tick(&mut self) {
        let now = self.now();
        self.refresh_topology();
        for i in 0..self.alive.len() {
            if !self.alive[i] {
                continue;
            }
            for dead in self.liveness[i].detect_failures(now) {
                self.link_break(NodeId::from_index(i), dead);
            }
        }
        if self.cfg.dbrt.enabled {
            self.watch_primaries();
        }
        if let Some(m) = self.monitors.as_mut() {
            let quiet = self.dsdv_in_flight == 0 && !self.trigger_pending.iter().any(|&p| p);
            m.on_tick(now, &self.tables, &self.adjacency, &self.alive, quiet, &self.cfg);
        }
        let next = now + self.cfg.tick;
        if next <= self.end {
            self.sched.schedule(next, None, Ev::Tick).expect("future");
        }
    }

    /// Starts a round wherever an active destination's primary path changed
    /// or the rebuild interval elapsed.
    fn watch_primaries(&mut self) {
        let now = self.now();
        let n = self.alive.len();
        for i in 0..n {
            if !self.alive[i] {
                continue;
            }
            let node = NodeId::from_index(i);
            let agent = &mut self.agents[i];
            agent.expire_inactive(now, self.cfg.dbrt.active_timeout);
            let dests: Vec<NodeId> = if self.cfg.dbrt.all_pairs {
                (0..n).filter(|&j| j != i).map(NodeId::from_index).collect()
            } else {
                agent.active.keys().copied().collect()
            };
            let view = self.local_view(node);
            for dest in dests {
                let Ok(primary) = trace_in(&self.tables, node, dest) else {
                    continue;
                };
                if primary.len() < 3 {
                    continue;
                }
                let liveness = &self.liveness[i];
                let agent = &mut self.agents[i];
                let st = agent.rebuild.entry(dest).or_default();
                let Some(trigger) = st.poll(&primary, now, self.cfg.dbrt.rebuild_interval, &view) else {
                    continue;
                };
                let backup_holds = agent.backup.get(dest).is_some_and(|e| {
                    liveness.is_alive(e.backup_next_hop)
                        && check_backup_path(node, dest, &e.recorded_path, &primary).is_ok()
                });
                if trigger == RebuildTrigger::PrimaryChanged && backup_holds {
                    st.accept_primary(primary);
                    agent.counters.rounds_skipped += 1;
                    continue;
                }
                st.round_pending = true;
                match trigger {
                    RebuildTrigger::PrimaryChanged => agent.counters.rounds_path_change += 1,
                    RebuildTrigger::Periodic => agent.counters.rounds_periodic += 1,
                }
                let jitter = self.cfg.dbrt.round_jitter;
                let delay = if jitter > 0.0 {
                    self.streams.dbrt.rng().gen_range(0.0..jitter)
                } else {
                    0.0
                };
                self.sched.schedule_in(delay, Some(node), Ev::RoundStart { node, dest });
            }
        }
    }

    fn local_view(&self, node: NodeId) -> LocalView {
        LocalView {
            position: self.trajectories[node.index()].position_at(self.now()),
            neighbors: self.liveness[node.index()].neighbors().collect(),
        }
    }

    fn on_hello(&mut self, n: NodeId) {
        if !self.alive[n.index()] {
            return;
        }
        let uid = self.uid();
        self.send(hello_frame(n, uid, &self.cfg.link.sizes));
        self.sched
            .schedule_in(self.cfg.link.hello_interval, Some(n), Ev::Hello(n));
    }

    fn broadcast_update(&mut self, n: NodeId, full: bool) {
        let now = self.now();
        let msg = self.tables[n.index()].originate_update(now, full);
        let size = self.cfg.link.sizes.update(msg.routes.len());
        let uid = self.uid();
        self.send(Frame {
            uid,
            src: n,
            dst: Destination::Broadcast,
            size,
            payload: Payload::Update(msg),
        });
    }

    fn on_periodic(&mut self, n: NodeId) {
        if !self.alive[n.index()] {
            return;
        }
        self.broadcast_update(n, true);
        self.sched
            .schedule_in(self.cfg.dsdv.periodic_interval, Some(n), Ev::Periodic(n));
    }

    fn request_trigger(&mut self, n: NodeId) {
        if self.trigger_pending[n.index()] {
            return;
        }
        self.trigger_pending[n.index()] = true;
        let jitter = self.cfg.dsdv.trigger_jitter;
        let delay = if jitter > 0.0 {
            self.streams.routing.rng().gen_range(0.0..jitter)
        } else {
            0.0
        };
        self.sched.schedule_in(delay, Some(n), Ev::Trigger(n));
    }

    fn on_trigger(&mut self, n: NodeId) {
        self.trigger_pending[n.index()] = false;
        if self.alive[n.index()] && self.tables[n.index()].has_pending_changes() {
            self.broadcast_update(n, false);
        }
    }

    fn heard(&mut self, at: NodeId, from: NodeId) {
        let now = self.now();
        if self.liveness[at.index()].heard(from, now) {
            self.tables[at.index()].mark_changed(at);
            self.request_trigger(at);
        }
    }

    fn on_receive(&mut self, to: NodeId, frame: Arc<Frame>) {
        if frame.kind() == FrameKind::DsdvUpdate {
            self.dsdv_in_flight -= 1;
        }
        if !self.alive[to.index()] {
            if let Payload::Data(p) = &frame.payload {
                self.ledger.record_loss(p.pkt_id, self.now(), LossReason::NodeDown);
            }
            return;
        }
        let from = frame.src;
        match &frame.payload {
            Payload::Hello => self.heard(to, from),
            Payload::Update(msg) => {
                self.heard(to, from);
                let now = self.now();
                let changed = self.tables[to.index()].process_update(msg, from, now);
                if !changed.is_empty() {
                    self.request_trigger(to);
                    for d in changed {
                        self.flush_held(to, d);
                    }
                }
            }
            Payload::Query(q) => self.on_query(to, q.clone()),
            Payload::Reply(r) => self.on_reply(to, r.clone()),
            Payload::Data(p) => self.forward(to, p.clone()),
        }
    }

    fn link_break(&mut self, node: NodeId, dead: NodeId) {
        let now = self.now();
        let changed = self.tables[node.index()].handle_link_break(dead, now);
        if changed.is_empty() {
            return;
        }
        self.request_trigger(node);
        if !self.cfg.dbrt.enabled {
            return;
        }
        let liveness = &self.liveness[node.index()];
        let agent = &mut self.agents[node.index()];
        for &dest in &changed {
            if let ForwardDecision::Backup { next_hop, .. } =
                failover(dest, dead, &agent.backup, |n| liveness.is_alive(n))
            {
                if agent.on_backup.insert(dest) {
                    agent.counters.failovers += 1;
                    self.failovers.push(FailoverRecord {
                        time: now,
                        node,
                        dest,
                        dead: Some(dead),
                        via: next_hop,
                    });
                }
            }
        }
        for dest in changed {
            self.flush_held(node, dest);
        }
    }

    fn on_cbr(&mut self, flow: usize) {
        let f = &self.flows[flow];
        let (src, dst) = (f.src, f.dst);
        let now = self.now();
        let pkt_id = self.ledger.register(flow, now);
        let pkt = DataPacket::new(pkt_id, flow, src, dst, now, self.cfg.traffic.ttl);
        if !self.alive[src.index()] {
            self.ledger.record_loss(pkt_id, now, LossReason::NodeDown);
            return;
        }
        self.forward(src, pkt);
    }

    fn forward(&mut self, at: NodeId, mut pkt: DataPacket) {
        let now = self.now();
        if at == pkt.dst {
            self.ledger.record_delivery(pkt.pkt_id, now, pkt.hops);
            return;
        }
        if pkt.ttl == 0 {
            self.ledger.record_loss(pkt.pkt_id, now, LossReason::TtlExpired);
            return;
        }
        let i = at.index();
        let dbrt = self.cfg.dbrt.enabled;
        if dbrt {
            self.agents[i].note_traffic(pkt.dst, now);
        }
        if let Some(route) = pkt.backup_route.clone() {
            let next = route.iter().position(|&n| n == at).and_then(|k| route.get(k + 1)).copied();
            match next {
                Some(nh) if self.liveness[i].is_alive(nh) => {
                    self.send_data(at, nh, pkt, true);
                    return;
                }
                _ => pkt.backup_route = None,
            }
        }
        let primary = self.tables[i].lookup_next_hop(pkt.dst);
        if !dbrt {
            match primary {
                Some(nh) => self.send_data(at, nh, pkt, false),
                None => self.hold_packet(at, pkt),
            }
            return;
        }
        let liveness = &self.liveness[i];
        let agent = &mut self.agents[i];
        match forwarding_decision(primary, pkt.dst, &agent.backup, |n| liveness.is_alive(n)) {
            ForwardDecision::Primary(nh) => {
                agent.on_backup.remove(&pkt.dst);
                self.send_data(at, nh, pkt, false);
            }
            ForwardDecision::Backup { next_hop, path } => {
                if agent.on_backup.insert(pkt.dst) {
                    agent.counters.failovers += 1;
                    self.failovers.push(FailoverRecord {
                        time: now,
                        node: at,
                        dest: pkt.dst,
                        dead: None,
                        via: next_hop,
                    });
                }
                pkt.backup_route = Some(path);
                self.send_data(at, next_hop, pkt, true);
            }
            ForwardDecision::Unavailable(why) => {
                if let Unavailable::BackupNextHopDown(_) = why {
                    agent.counters.failover_drops += 1;
                }
                self.hold_packet(at, pkt);
            }
        }
    }

    fn send_data(&mut self, at: NodeId, next: NodeId, mut pkt: DataPacket, via_backup: bool) {
        let now = self.now();
        pkt.hops += 1;
        pkt.ttl -= 1;
        let pkt_id = pkt.pkt_id;
        let uid = self.uid();
        let outcome = self.send(Frame {
            uid,
            src: at,
            dst: Destination::Unicast(next),
            size: self.cfg.traffic.packet_size,
            payload: Payload::Data(pkt),
        });
        match outcome {
            FrameOutcome::Delivered => {
                if via_backup {
                    *self.agents[at.index()].reliability.entry(next).or_default() += 1;
                }
            }
            FrameOutcome::OutOfRange => {
                self.ledger.record_loss(pkt_id, now, LossReason::OutOfRange);
            }
            FrameOutcome::Dropped => {
                self.ledger.record_loss(pkt_id, now, LossReason::ChannelLoss);
            }
        }
    }

    fn hold_packet(&mut self, at: NodeId, pkt: DataPacket) {
        let now = self.now();
        let cap = self.cfg.dsdv.hold_queue;
        if cap == 0 {
            self.ledger.record_loss(pkt.pkt_id, now, LossReason::NoRoute);
            return;
        }
        let q = self.hold[at.index()].entry(pkt.dst).or_default();
        q.push_back(pkt);
        while q.len() > cap {
            let evicted = q.pop_front().expect("queue over capacity is nonempty");
            self.ledger.record_loss(evicted.pkt_id, now, LossReason::HoldOverflow);
        }
    }

    /// Re-forwards packets held for `dest` once some route exists.
    fn flush_held(&mut self, at: NodeId, dest: NodeId) {
        let i = at.index();
        if !self.hold[i].contains_key(&dest) {
            return;
        }
        let usable = self.tables[i].lookup_next_hop(dest).is_some()
            || (self.cfg.dbrt.enabled
                && self.agents[i]
                    .backup
                    .get(dest)
                    .is_some_and(|e| self.liveness[i].is_alive(e.backup_next_hop)));
        if !usable {
            return;
        }
        let queue = self.hold[i].remove(&dest).unwrap_or_default();
        for pkt in queue {
            self.forward(at, pkt);
        }
    }

    fn on_round_start(&mut self, node: NodeId, dest: NodeId) {
        let i = node.index();
        if !self.alive[i] {
            return;
        }
        let now = self.now();
        let primary = match trace_in(&self.tables, node, dest) {
            Ok(p) if p.len() >= 3 => p,
            _ => {
                self.agents[i].rebuild.entry(dest).or_default().round_pending = false;
                return;
            }
        };
        let adj = build_adjacent_list(node, dest, self.liveness[i].neighbors(), &primary);
        self.next_query_id += 1;
        let query_id = self.next_query_id;
        let queries = issue_queries(&adj, &primary, self.cfg.dbrt.query_depth, query_id);
        let view = self.local_view(node);
        self.agents[i].open_round(query_id, dest, primary, view, now);
        self.agents[i].counters.queries_sent += queries.len() as u64;
        for (to, q) in queries {
            self.send_query(node, to, q);
        }
        self.sched
            .schedule_in(self.cfg.dbrt.round_window, Some(node), Ev::RoundClose { node, query_id });
    }

    fn send_query(&mut self, from: NodeId, to: NodeId, q: crate::dbrt::QueryMessage) {
        let size = self.cfg.link.sizes.dbrt(q.carried_ids());
        let uid = self.uid();
        self.send(Frame {
            uid,
            src: from,
            dst: Destination::Unicast(to),
            size,
            payload: Payload::Query(q),
        });
    }

    fn send_reply(&mut self, from: NodeId, to: NodeId, r: crate::dbrt::ReplyMessage) {
        let size = self.cfg.link.sizes.dbrt(r.carried_ids());
        let uid = self.uid();
        self.send(Frame {
            uid,
            src: from,
            dst: Destination::Unicast(to),
            size,
            payload: Payload::Reply(r),
        });
    }

    fn on_query(&mut self, at: NodeId, q: crate::dbrt::QueryMessage) {
        let route = trace_in(&self.tables, at, q.for_dest);
        let neighbors: Vec<NodeId> = self.liveness[at.index()].neighbors().collect();
        match evaluate_query(at, &q, route, neighbors) {
            QueryOutcome::Reply { to, reply } => {
                self.agents[at.index()].counters.replies_sent += 1;
                self.send_reply(at, to, reply);
            }
            QueryOutcome::Forward(fw) => {
                self.agents[at.index()].counters.queries_forwarded += fw.len() as u64;
                for (to, q) in fw {
                    self.send_query(at, to, q);
                }
            }
            QueryOutcome::Silence(_) => {}
        }
    }

    fn on_reply(&mut self, at: NodeId, r: crate::dbrt::ReplyMessage) {
        if r.chain.is_empty() {
            if r.origin == at {
                self.agents[at.index()].accept_reply(r);
            }
            return;
        }
        if let Some(relayed) = r.relay(at) {
            let to = relayed.next_toward_origin();
            self.send_reply(at, to, relayed);
        }
    }

    fn on_round_close(&mut self, node: NodeId, query_id: u64) {
        let i = node.index();
        let Some(round) = self.agents[i].close_round(query_id) else {
            return;
        };
        if !self.alive[i] {
            return;
        }
        let now = self.now();
        let primary = match trace_in(&self.tables, node, round.dest) {
            Ok(p) => p,
            Err(_) => round.primary.clone(),
        };
        let snapshot = &self.snapshot;
        let model = &self.cfg.radio;
        let liveness = &self.liveness[i];
        let sel = select_backup(node, round.dest, &round.replies, &primary, now, |a, b| {
            snapshot.linked(model, a, b) && (a != node || liveness.is_alive(b))
        });
        let agent = &mut self.agents[i];
        agent.counters.stale_discards += sel.discarded.len() as u64;
        let Some(entry) = sel.entry else {
            return;
        };
        agent.counters.installs += 1;
        if let Some(m) = self.monitors.as_mut() {
            m.on_install(now, node, &entry, &primary, &self.snapshot, &self.cfg.radio);
        }
        self.installs.push(InstallRecord {
            owner: node,
            entry: entry.clone(),
            primary,
        });
        let dest = entry.dest;
        self.agents[i].backup.install(entry);
        self.flush_held(node, dest);
    }

    fn kill(&mut self, n: NodeId) {
        let i = n.index();
        if !self.alive[i] {
            return;
        }
        let now = self.now();
        self.alive[i] = false;
        self.faults.push(FaultRecord { time: now, node: n });
        for (_, q) in std::mem::take(&mut self.hold[i]) {
            for pkt in q {
                self.ledger.record_loss(pkt.pkt_id, now, LossReason::NodeDown);
            }
        }
        self.refresh_topology();
    }

    fn on_primary_fault(&mut self, idx: usize) {
        let f = self.cfg.fault.primary_node[idx];
        if let Ok(path) = trace_in(&self.tables, f.src, f.dst) {
            if path.len() >= 3 {
                self.kill(path[1]);
            }
        }
    }
}

/// Runs a whole scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    Ok(Simulation::new(cfg)?.run())
}

/// Column names of `report.csv` and `sweep.csv` rows.
pub const REPORT_COLUMNS: &[&str] = &[
    "scenario",
    "variant",
    "seed",
    "node_count",
    "pause_time",
    "loss_prob",
    "sent",
    "delivered",
    "lost",
    "in_flight",
    "delivery_ratio",
    "avg_delay",
    "throughput",
    "control_frames",
    "control_bytes",
    "data_frames",
    "hello_frames",
    "dsdv_update_frames",
    "dbrt_query_frames",
    "dbrt_reply_frames",
    "traffic_load",
    "window_start",
    "window_end",
    "queries_sent",
    "replies_received",
    "stale_discards",
    "installs",
    "rounds_path_change",
    "rounds_periodic",
    "rounds_skipped",
    "failovers",
    "failover_drops",
];

/// One report row; an undefined average delay is written as `NA`.
pub fn report_row(out: &RunOutput) -> Vec<String> {
    let r = &out.report;
    let c = &out.counters;
    let cfg = &out.config;
    let kind = |k: FrameKind| r.frames_by_kind.get(&k).copied().unwrap_or(0).to_string();
    vec![
        cfg.name.clone(),
        out.variant().as_str().to_string(),
        cfg.seed.to_string(),
        cfg.node_count.to_string(),
        cfg.mobility.pause_time.to_string(),
        cfg.link.loss_prob.to_string(),
        r.sent.to_string(),
        r.delivered.to_string(),
        r.lost.to_string(),
        r.in_flight.to_string(),
        r.delivery_ratio().to_string(),
        r.avg_delay.map_or("NA".to_string(), |d| d.to_string()),
        r.throughput.to_string(),
        r.control_frames.to_string(),
        r.control_bytes.to_string(),
        r.data_frames.to_string(),
        kind(FrameKind::Hello),
        kind(FrameKind::DsdvUpdate),
        kind(FrameKind::DbrtQuery),
        kind(FrameKind::DbrtReply),
        r.traffic_load.to_string(),
        r.window.start.to_string(),
        r.window.end.to_string(),
        c.queries_sent.to_string(),
        c.replies_received.to_string(),
        c.stale_discards.to_string(),
        c.installs.to_string(),
        c.rounds_path_change.to_string(),
        c.rounds_periodic.to_string(),
        c.rounds_skipped.to_string(),
        c.failovers.to_string(),
        c.failover_drops.to_string(),
    ]
}

fn csv_file(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>, SimError> {
    csv::Writer::from_path(dir.join(name)).map_err(|source| SimError::Csv {
        file: name.to_string(),
        source,
    })
}

fn with_file<F>(dir: &Path, name: &str, write: F) -> Result<(), SimError>
where
    F: FnOnce(std::fs::File) -> csv::Result<()>,
{
    let f = std::fs::File::create(dir.join(name)).map_err(|source| SimError::Io {
        file: name.to_string(),
        source,
    })?;
    write(f).map_err(|source| SimError::Csv {
        file: name.to_string(),
        source,
    })
}

/// Writes `report.csv`, `frames.csv`, `packets.csv`, `mobility.csv`,
/// `tables.csv`, `backup_tables.csv`, `failovers.csv` and, when recorded,
/// `events.csv` into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), SimError> {
    std::fs::create_dir_all(dir).map_err(|source| SimError::Io {
        file: dir.display().to_string(),
        source,
    })?;
    let csv_err = |file: &str| {
        let file = file.to_string();
        move |source| SimError::Csv { file, source }
    };

    let mut w = csv_file(dir, "report.csv")?;
    w.write_record(REPORT_COLUMNS).map_err(csv_err("report.csv"))?;
    w.write_record(report_row(out)).map_err(csv_err("report.csv"))?;
    w.flush().map_err(|source| SimError::Io {
        file: "report.csv".into(),
        source,
    })?;

    let mut w = csv_file(dir, "packets.csv")?;
    w.write_record(["pkt_id", "flow", "src", "dst", "sent_at", "status", "at", "hops_or_reason"])
        .map_err(csv_err("packets.csv"))?;
    for r in &out.records {
        let f = &out.flows[r.flow];
        let (status, at, extra) = match r.status {
            crate::traffic::PacketStatus::InFlight => ("in_flight", String::new(), String::new()),
            crate::traffic::PacketStatus::Delivered { at, hops } => ("delivered", at.to_string(), hops.to_string()),
            crate::traffic::PacketStatus::Lost { at, reason } => ("lost", at.to_string(), reason.as_str().to_string()),
        };
        w.write_record([
            r.pkt_id.to_string(),
            r.flow.to_string(),
            f.src.to_string(),
            f.dst.to_string(),
            r.sent_at.to_string(),
            status.to_string(),
            at,
            extra,
        ])
        .map_err(csv_err("packets.csv"))?;
    }
    w.flush().map_err(|source| SimError::Io {
        file: "packets.csv".into(),
        source,
    })?;

    let mut w = csv_file(dir, "failovers.csv")?;
    w.write_record(["time", "node", "dest", "dead", "via"])
        .map_err(csv_err("failovers.csv"))?;
    for f in &out.failovers {
        w.write_record([
            f.time.to_string(),
            f.node.to_string(),
            f.dest.to_string(),
            f.dead.map_or("-".to_string(), |d| d.to_string()),
            f.via.to_string(),
        ])
        .map_err(csv_err("failovers.csv"))?;
    }
    w.flush().map_err(|source| SimError::Io {
        file: "failovers.csv".into(),
        source,
    })?;

    with_file(dir, "frames.csv", |f| crate::link::write_frame_log(&out.frames, f))?;
    with_file(dir, "mobility.csv", |f| {
        crate::mobility::write_trace(
            &out.trajectories,
            out.config.trace_interval,
            SimTime::from_secs(out.config.duration),
            f,
        )
    })?;
    with_file(dir, "tables.csv", |f| crate::dsdv::write_tables(&out.tables, f))?;
    with_file(dir, "backup_tables.csv", |f| {
        crate::dbrt::write_backup_tables(
            out.agents
                .iter()
                .enumerate()
                .map(|(i, a)| (NodeId::from_index(i), &a.backup)),
            f,
        )
    })?;
    if let Some(events) = &out.events {
        with_file(dir, "events.csv", |f| crate::engine::write_event_log(events, f))?;
    }
    Ok(())
}
