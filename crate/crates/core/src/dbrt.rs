//! Driven backup routing table.
//!
//! For every protected destination a node looks for a neighbor whose own
//! route to the destination avoids every node of the current primary path.
//! One construction round works as follows:
//!
//! 1. The adjacent list is the node's live neighbors minus the internal nodes
//!    of the primary path.
//! 2. A small query carrying the primary path's node set goes to each member.
//! 3. A member traces its own route hop by hop; if the route touches the
//!    primary path only at the destination it replies with that route.
//! 4. Otherwise, while the query still has depth, the member asks its own
//!    neighbors off the primary path, and relays any reply back.
//!
//! When the round closes the node keeps the candidate with the fewest total
//! hops (ties go to the smaller first-hop id), re-checking disjointness
//! against the primary path as it stands at install time.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::dsdv::TraceError;
use crate::radio::Position;
use crate::{NodeId, SimTime};

/// Nodes strictly between the endpoints of `path`.
pub fn internal_nodes(path: &[NodeId]) -> &[NodeId] {
    if path.len() <= 2 {
        &[]
    } else {
        &path[1..path.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacentList {
    pub owner: NodeId,
    pub for_dest: NodeId,
    pub members: BTreeSet<NodeId>,
}

/// Neighbors of `owner` that are not internal to `primary`. The destination
/// stays in the list when it is a direct neighbor.
pub fn build_adjacent_list<I>(owner: NodeId, dest: NodeId, neighbors: I, primary: &[NodeId]) -> AdjacentList
where
    I: IntoIterator<Item = NodeId>,
{
    let excluded: BTreeSet<NodeId> = internal_nodes(primary).iter().copied().collect();
    AdjacentList {
        owner,
        for_dest: dest,
        members: neighbors
            .into_iter()
            .filter(|n| *n != owner && !excluded.contains(n))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMessage {
    pub origin: NodeId,
    pub for_dest: NodeId,
    /// Every node of the origin's primary path, endpoints included.
    pub primary_set: BTreeSet<NodeId>,
    pub depth_remaining: u8,
    pub query_id: u64,
    /// Relays between the origin and the current recipient.
    pub chain: Vec<NodeId>,
}

impl QueryMessage {
    pub fn carried_ids(&self) -> usize {
        self.primary_set.len() + self.chain.len()
    }

    /// Node the recipient got this query from.
    pub fn sender(&self) -> NodeId {
        self.chain.last().copied().unwrap_or(self.origin)
    }

    fn visited(&self, n: NodeId) -> bool {
        n == self.origin || self.chain.contains(&n)
    }
}

/// One query per adjacent member, all sharing `query_id`.
pub fn issue_queries(
    adj: &AdjacentList,
    primary: &[NodeId],
    depth: u8,
    query_id: u64,
) -> Vec<(NodeId, QueryMessage)> {
    let primary_set: BTreeSet<NodeId> = primary.iter().copied().collect();
    adj.members
        .iter()
        .map(|&to| {
            (
                to,
                QueryMessage {
                    origin: adj.owner,
                    for_dest: adj.for_dest,
                    primary_set: primary_set.clone(),
                    depth_remaining: depth,
                    query_id,
                    chain: Vec::new(),
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplyMessage {
    /// Head of `path`: the origin's neighbor once all relays have prepended.
    pub responder: NodeId,
    pub for_dest: NodeId,
    /// Route from `responder` to `for_dest`.
    pub path: Vec<NodeId>,
    pub hop_count: u32,
    pub query_id: u64,
    pub origin: NodeId,
    /// Relays still to traverse on the way back, nearest last.
    pub chain: Vec<NodeId>,
}

impl ReplyMessage {
    fn new(path: Vec<NodeId>, q: &QueryMessage) -> Self {
        ReplyMessage {
            responder: path[0],
            for_dest: q.for_dest,
            hop_count: (path.len() - 1) as u32,
            path,
            query_id: q.query_id,
            origin: q.origin,
            chain: q.chain.clone(),
        }
    }

    pub fn carried_ids(&self) -> usize {
        self.path.len() + self.chain.len()
    }

    /// Where this reply goes next from its current holder.
    pub fn next_toward_origin(&self) -> NodeId {
        self.chain.last().copied().unwrap_or(self.origin)
    }

    /// Relay step at `at`, which must be the last chain entry: prepends
    /// itself to the path.
    pub fn relay(mut self, at: NodeId) -> Option<ReplyMessage> {
        if self.chain.last() != Some(&at) {
            return None;
        }
        self.chain.pop();
        self.path.insert(0, at);
        self.responder = at;
        self.hop_count += 1;
        Some(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SilenceReason {
    NoRoute,
    /// Own route crosses the primary path and no depth is left.
    Overlaps,
    /// Would forward, but no eligible neighbor exists.
    NoForwardTargets,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryOutcome {
    Reply { to: NodeId, reply: ReplyMessage },
    Forward(Vec<(NodeId, QueryMessage)>),
    Silence(SilenceReason),
}

/// Step 3 and 4 at a query recipient. `own_route` is the recipient's traced
/// route to the destination.
pub fn evaluate_query<I>(
    responder: NodeId,
    q: &QueryMessage,
    own_route: Result<Vec<NodeId>, TraceError>,
    neighbors: I,
) -> QueryOutcome
where
    I: IntoIterator<Item = NodeId>,
{
    let dest = q.for_dest;
    if responder == dest {
        return QueryOutcome::Reply {
            to: q.sender(),
            reply: ReplyMessage::new(vec![dest], q),
        };
    }
    let Ok(route) = own_route else {
        return QueryOutcome::Silence(SilenceReason::NoRoute);
    };
    let clear = route
        .iter()
        .all(|&n| n == dest || (!q.primary_set.contains(&n) && !q.visited(n)));
    if clear && route.first() == Some(&responder) && route.last() == Some(&dest) {
        return QueryOutcome::Reply {
            to: q.sender(),
            reply: ReplyMessage::new(route, q),
        };
    }
    if q.depth_remaining == 0 {
        return QueryOutcome::Silence(SilenceReason::Overlaps);
    }
    let mut chain = q.chain.clone();
    chain.push(responder);
    let targets: Vec<(NodeId, QueryMessage)> = neighbors
        .into_iter()
        .filter(|&n| n != responder && !q.visited(n))
        .filter(|&n| n == dest || !q.primary_set.contains(&n))
        .map(|n| {
            (
                n,
                QueryMessage {
                    chain: chain.clone(),
                    depth_remaining: q.depth_remaining - 1,
                    ..q.clone()
                },
            )
        })
        .collect();
    if targets.is_empty() {
        QueryOutcome::Silence(SilenceReason::NoForwardTargets)
    } else {
        QueryOutcome::Forward(targets)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackupEntry {
    pub dest: NodeId,
    pub backup_next_hop: NodeId,
    /// Owner to destination over the backup path.
    pub backup_hop_count: u32,
    /// Owner first, destination last.
    pub recorded_path: Arc<[NodeId]>,
    pub built_at: SimTime,
}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum BackupViolation {
    #[error("backup path does not run from owner to destination")]
    Endpoints,
    #[error("backup path visits {0} twice")]
    RepeatedNode(NodeId),
    #[error("backup path crosses primary node {0}")]
    SharesPrimaryNode(NodeId),
    #[error("backup next hop {0} lies on the primary path")]
    NextHopOnPrimary(NodeId),
    #[error("no radio link between {0} and {1}")]
    BrokenLink(NodeId, NodeId),
}

/// Checks `recorded` (owner first, dest last) against `primary`.
pub fn check_backup_path(
    owner: NodeId,
    dest: NodeId,
    recorded: &[NodeId],
    primary: &[NodeId],
) -> Result<(), BackupViolation> {
    if recorded.len() < 2 || recorded[0] != owner || recorded[recorded.len() - 1] != dest {
        return Err(BackupViolation::Endpoints);
    }
    let mut seen = BTreeSet::new();
    for &n in recorded {
        if !seen.insert(n) {
            return Err(BackupViolation::RepeatedNode(n));
        }
    }
    let primary_internal: BTreeSet<NodeId> = internal_nodes(primary).iter().copied().collect();
    if primary_internal.contains(&recorded[1]) {
        return Err(BackupViolation::NextHopOnPrimary(recorded[1]));
    }
    if let Some(&n) = internal_nodes(recorded).iter().find(|n| primary_internal.contains(n)) {
        return Err(BackupViolation::SharesPrimaryNode(n));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub entry: Option<BackupEntry>,
    pub discarded: Vec<BackupViolation>,
}

/// Picks the best valid candidate. `linked` reports whether two nodes can
/// currently hear each other.
pub fn select_backup<F>(
    owner: NodeId,
    dest: NodeId,
    replies: &[ReplyMessage],
    primary: &[NodeId],
    now: SimTime,
    linked: F,
) -> Selection
where
    F: Fn(NodeId, NodeId) -> bool,
{
    let mut discarded = Vec::new();
    let mut best: Option<(u32, NodeId, Vec<NodeId>)> = None;
    for r in replies {
        if r.for_dest != dest || r.path.is_empty() {
            discarded.push(BackupViolation::Endpoints);
            continue;
        }
        let mut recorded = Vec::with_capacity(r.path.len() + 1);
        recorded.push(owner);
        recorded.extend_from_slice(&r.path);
        let checked = check_backup_path(owner, dest, &recorded, primary).and_then(|()| {
            match recorded.windows(2).find(|w| !linked(w[0], w[1])) {
                Some(w) => Err(BackupViolation::BrokenLink(w[0], w[1])),
                None => Ok(()),
            }
        });
        if let Err(v) = checked {
            discarded.push(v);
            continue;
        }
        let total = 1 + r.hop_count;
        let via = r.path[0];
        let better = match &best {
            None => true,
            Some((bt, bv, bp)) => (total, via, &recorded) < (*bt, *bv, bp),
        };
        if better {
            best = Some((total, via, recorded));
        }
    }
    Selection {
        entry: best.map(|(total, via, recorded)| BackupEntry {
            dest,
            backup_next_hop: via,
            backup_hop_count: total,
            recorded_path: recorded.into(),
            built_at: now,
        }),
        discarded,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BackupRoutingTable {
    entries: BTreeMap<NodeId, BackupEntry>,
}

impl BackupRoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, dest: NodeId) -> Option<&BackupEntry> {
        self.entries.get(&dest)
    }

    pub fn install(&mut self, entry: BackupEntry) -> Option<BackupEntry> {
        self.entries.insert(entry.dest, entry)
    }

    pub fn entries(&self) -> impl Iterator<Item = &BackupEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardDecision {
    Primary(NodeId),
    Backup {
        next_hop: NodeId,
        path: Arc<[NodeId]>,
    },
    Unavailable(Unavailable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unavailable {
    NoBackup,
    BackupNextHopDown(NodeId),
}

/// Switch to the backup after the primary next hop `dead` failed.
pub fn failover<F>(dest: NodeId, dead: NodeId, backup: &BackupRoutingTable, alive: F) -> ForwardDecision
where
    F: Fn(NodeId) -> bool,
{
    match backup.get(dest) {
        None => ForwardDecision::Unavailable(Unavailable::NoBackup),
        Some(e) if e.backup_next_hop == dead || !alive(e.backup_next_hop) => {
            ForwardDecision::Unavailable(Unavailable::BackupNextHopDown(e.backup_next_hop))
        }
        Some(e) => ForwardDecision::Backup {
            next_hop: e.backup_next_hop,
            path: e.recorded_path.clone(),
        },
    }
}

/// Primary route when DSDV has one, the backup otherwise.
pub fn forwarding_decision<F>(
    primary_next: Option<NodeId>,
    dest: NodeId,
    backup: &BackupRoutingTable,
    alive: F,
) -> ForwardDecision
where
    F: Fn(NodeId) -> bool,
{
    match primary_next {
        Some(n) => ForwardDecision::Primary(n),
        None => match backup.get(dest) {
            None => ForwardDecision::Unavailable(Unavailable::NoBackup),
            Some(e) if !alive(e.backup_next_hop) => {
                ForwardDecision::Unavailable(Unavailable::BackupNextHopDown(e.backup_next_hop))
            }
            Some(e) => ForwardDecision::Backup {
                next_hop: e.backup_next_hop,
                path: e.recorded_path.clone(),
            },
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebuildTrigger {
    PrimaryChanged,
    Periodic,
}

/// What a node can observe about its own surroundings: where it is and
/// whom it hears.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalView {
    pub position: Position,
    pub neighbors: Vec<NodeId>,
}

/// Per-destination rebuild bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RebuildState {
    pub last_primary: Option<Vec<NodeId>>,
    pub last_round_at: Option<SimTime>,
    pub last_view: Option<LocalView>,
    /// A changed primary seen once, waiting to be confirmed.
    pub unconfirmed: Option<Vec<NodeId>>,
    pub round_pending: bool,
}

impl RebuildState {
    /// Called once per observation of the primary path.
    ///
    /// A new destination triggers a round at once. A changed primary path
    /// triggers one when the same new path is observed twice in a row, so
    /// that states passing within one observation period are ignored.
    /// Otherwise a round is refreshed every `interval` while the node keeps
    /// moving or its neighborhood keeps changing, and not at all once both
    /// are still.
    pub fn poll(&mut self, primary: &[NodeId], now: SimTime, interval: f64, view: &LocalView) -> Option<RebuildTrigger> {
        if self.round_pending {
            return None;
        }
        match self.last_primary.as_deref() {
            None => return Some(RebuildTrigger::PrimaryChanged),
            Some(last) if last != primary => {
                if self.unconfirmed.as_deref() == Some(primary) {
                    return Some(RebuildTrigger::PrimaryChanged);
                }
                self.unconfirmed = Some(primary.to_vec());
                return None;
            }
            Some(_) => self.unconfirmed = None,
        }
        if self.last_view.as_ref() == Some(view) {
            return None;
        }
        match self.last_round_at {
            Some(at) if now - at < interval => None,
            _ => Some(RebuildTrigger::Periodic),
        }
    }

    /// Adopts `primary` as the reference path without running a round.
    pub fn accept_primary(&mut self, primary: Vec<NodeId>) {
        self.last_primary = Some(primary);
        self.unconfirmed = None;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DbrtCounters {
    pub rounds: u64,
    pub rounds_path_change: u64,
    pub rounds_periodic: u64,
    /// Primary changes that left the installed backup valid.
    pub rounds_skipped: u64,
    pub queries_sent: u64,
    pub queries_forwarded: u64,
    pub replies_sent: u64,
    pub replies_received: u64,
    pub installs: u64,
    pub stale_discards: u64,
    pub failovers: u64,
    pub failover_drops: u64,
}

impl DbrtCounters {
    pub fn add(&mut self, o: &DbrtCounters) {
        self.rounds += o.rounds;
        self.rounds_path_change += o.rounds_path_change;
        self.rounds_periodic += o.rounds_periodic;
        self.rounds_skipped += o.rounds_skipped;
        self.queries_sent += o.queries_sent;
        self.queries_forwarded += o.queries_forwarded;
        self.replies_sent += o.replies_sent;
        self.replies_received += o.replies_received;
        self.installs += o.installs;
        self.stale_discards += o.stale_discards;
        self.failovers += o.failovers;
        self.failover_drops += o.failover_drops;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenRound {
    pub dest: NodeId,
    pub primary: Vec<NodeId>,
    pub replies: Vec<ReplyMessage>,
    pub started_at: SimTime,
}

/// Per-node DBRT state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DbrtAgent {
    pub backup: BackupRoutingTable,
    /// Destinations seen in passing traffic, with the last time seen.
    pub active: BTreeMap<NodeId, SimTime>,
    pub rebuild: BTreeMap<NodeId, RebuildState>,
    pub rounds: BTreeMap<u64, OpenRound>,
    pub counters: DbrtCounters,
    /// Successful backup deliveries per neighbor. Recorded, not used for
    /// selection.
    pub reliability: BTreeMap<NodeId, u64>,
    /// Destinations currently forwarded over the backup.
    pub on_backup: BTreeSet<NodeId>,
}

impl DbrtAgent {
    /// Returns true when `dest` was not active before.
    pub fn note_traffic(&mut self, dest: NodeId, now: SimTime) -> bool {
        self.active.insert(dest, now).is_none()
    }

    pub fn expire_inactive(&mut self, now: SimTime, timeout: f64) {
        self.active.retain(|_, &mut seen| now - seen <= timeout);
    }

    pub fn open_round(&mut self, query_id: u64, dest: NodeId, primary: Vec<NodeId>, view: LocalView, now: SimTime) {
        let st = self.rebuild.entry(dest).or_default();
        st.last_primary = Some(primary.clone());
        st.last_view = Some(view);
        st.last_round_at = Some(now);
        st.round_pending = true;
        self.counters.rounds += 1;
        self.rounds.insert(
            query_id,
            OpenRound {
                dest,
                primary,
                replies: Vec::new(),
                started_at: now,
            },
        );
    }

    /// Returns false for replies to rounds that are no longer open.
    pub fn accept_reply(&mut self, reply: ReplyMessage) -> bool {
        match self.rounds.get_mut(&reply.query_id) {
            Some(r) if r.dest == reply.for_dest => {
                self.counters.replies_received += 1;
                r.replies.push(reply);
                true
            }
            _ => false,
        }
    }

    pub fn close_round(&mut self, query_id: u64) -> Option<OpenRound> {
        let round = self.rounds.remove(&query_id)?;
        if let Some(st) = self.rebuild.get_mut(&round.dest) {
            st.round_pending = false;
        }
        Some(round)
    }
}

/// Writes CSV `node,dest,backup_next_hop,hops,path` with `path` joined by `-`.
pub fn write_backup_tables<'a, W, I>(tables: I, out: W) -> csv::Result<()>
where
    W: std::io::Write,
    I: IntoIterator<Item = (NodeId, &'a BackupRoutingTable)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "dest", "backup_next_hop", "hops", "path"])?;
    for (owner, table) in tables {
        for e in table.entries() {
            w.write_record([
                owner.to_string(),
                e.dest.to_string(),
                e.backup_next_hop.to_string(),
                e.backup_hop_count.to_string(),
                join_path(&e.recorded_path),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn join_path(path: &[NodeId]) -> String {
    path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
}
