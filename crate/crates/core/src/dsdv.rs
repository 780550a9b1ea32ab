//! Destination-sequenced distance-vector routing.
//!
//! Sequence numbers originate at the destination and are even while the
//! route is reachable. A node that loses a next hop marks every route through
//! it with `INFINITY` and the next odd sequence number. Fresher sequence
//! numbers always win; at equal sequence numbers the shorter route wins.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::{NodeId, SimTime};

/// Hop count treated as unreachable.
pub const INFINITY: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub metric: u32,
    pub seq: u64,
    pub installed_at: SimTime,
}

impl RouteEntry {
    pub fn is_reachable(&self) -> bool {
        self.metric < INFINITY
    }
}

/// One advertised route: `(dest, metric, seq)` as stored by the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Advertisement {
    pub dest: NodeId,
    pub metric: u32,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMessage {
    pub origin: NodeId,
    pub routes: Vec<Advertisement>,
    pub full_dump: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    owner: NodeId,
    entries: BTreeMap<NodeId, RouteEntry>,
    own_seq: u64,
    /// Destinations changed since the last emitted update.
    dirty: BTreeSet<NodeId>,
}

impl RoutingTable {
    pub fn new(owner: NodeId, now: SimTime) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            owner,
            RouteEntry {
                dest: owner,
                next_hop: owner,
                metric: 0,
                seq: 0,
                installed_at: now,
            },
        );
        RoutingTable {
            owner,
            entries,
            own_seq: 0,
            dirty: BTreeSet::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn own_seq(&self) -> u64 {
        self.own_seq
    }

    pub fn entry(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&dest)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }

    pub fn metric(&self, dest: NodeId) -> Option<u32> {
        self.entries.get(&dest).map(|e| e.metric)
    }

    pub fn has_pending_changes(&self) -> bool {
        !self.dirty.is_empty()
    }

    /// Builds an update. A full dump first advances the node's own sequence
    /// number by two and carries every entry; an incremental update carries
    /// the entries changed since the last emission plus the owner's entry.
    pub fn originate_update(&mut self, now: SimTime, full: bool) -> UpdateMessage {
        if full {
            self.own_seq += 2;
            let owner = self.owner;
            let seq = self.own_seq;
            let own = self.entries.get_mut(&owner).expect("self entry");
            own.seq = seq;
            own.installed_at = now;
        }
        let advertise = |e: &RouteEntry| Advertisement {
            dest: e.dest,
            metric: e.metric,
            seq: e.seq,
        };
        let routes = if full {
            self.entries.values().map(advertise).collect()
        } else {
            let mut v = vec![advertise(&self.entries[&self.owner])];
            v.extend(
                self.dirty
                    .iter()
                    .filter(|&&d| d != self.owner)
                    .filter_map(|d| self.entries.get(d))
                    .map(advertise),
            );
            v
        };
        self.dirty.clear();
        UpdateMessage {
            origin: self.owner,
            routes,
            full_dump: full,
        }
    }

    /// Applies a neighbor's advertisement and returns the destinations whose
    /// entry changed.
    ///
    /// A broken advertisement only displaces a reachable route when it comes
    /// from that route's next hop: the break lies on the sender's path, and
    /// a route that does not use the sender is unaffected by it.
    pub fn process_update(
        &mut self,
        msg: &UpdateMessage,
        from: NodeId,
        now: SimTime,
    ) -> BTreeSet<NodeId> {
        let mut changed = BTreeSet::new();
        for adv in &msg.routes {
            if adv.dest == self.owner {
                continue;
            }
            let broken = adv.metric >= INFINITY;
            if !broken && adv.metric + 1 >= INFINITY {
                continue;
            }
            let metric = if broken { INFINITY } else { adv.metric + 1 };
            let adopt = match self.entries.get(&adv.dest) {
                None => !broken,
                Some(cur) => {
                    let fresher = adv.seq > cur.seq;
                    let shorter = adv.seq == cur.seq && metric < cur.metric;
                    if broken && fresher && cur.is_reachable() && cur.next_hop != from {
                        false
                    } else {
                        fresher || shorter
                    }
                }
            };
            if adopt {
                let entry = RouteEntry {
                    dest: adv.dest,
                    next_hop: from,
                    metric,
                    seq: adv.seq,
                    installed_at: now,
                };
                self.entries.insert(adv.dest, entry);
                self.dirty.insert(adv.dest);
                changed.insert(adv.dest);
            }
        }
        changed
    }

    /// Invalidates every reachable route through `dead`.
    pub fn handle_link_break(&mut self, dead: NodeId, now: SimTime) -> BTreeSet<NodeId> {
        let mut changed = BTreeSet::new();
        for e in self.entries.values_mut() {
            if e.dest != self.owner && e.next_hop == dead && e.is_reachable() {
                e.metric = INFINITY;
                e.seq += 1;
                e.installed_at = now;
                changed.insert(e.dest);
            }
        }
        self.dirty.extend(changed.iter().copied());
        changed
    }

    /// Marks `dest` for the next incremental update without changing it.
    pub fn mark_changed(&mut self, dest: NodeId) {
        if self.entries.contains_key(&dest) {
            self.dirty.insert(dest);
        }
    }

    pub fn lookup_next_hop(&self, dest: NodeId) -> Option<NodeId> {
        self.entries
            .get(&dest)
            .filter(|e| e.is_reachable())
            .map(|e| e.next_hop)
    }
}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("no route from {at} to {dest}")]
    NoRoute { at: NodeId, dest: NodeId },
    #[error("forwarding loop at {at} towards {dest}")]
    LoopDetected { at: NodeId, dest: NodeId },
}

/// Follows next hops from `src` until `dest`. The result includes both
/// endpoints. `table` returns `None` for nodes that cannot forward.
pub fn trace_primary_path<'a, F>(table: F, src: NodeId, dest: NodeId) -> Result<Vec<NodeId>, TraceError>
where
    F: Fn(NodeId) -> Option<&'a RoutingTable>,
{
    let mut path = vec![src];
    let mut seen = BTreeSet::from([src]);
    let mut at = src;
    while at != dest {
        let next = table(at)
            .and_then(|t| t.lookup_next_hop(dest))
            .ok_or(TraceError::NoRoute { at, dest })?;
        if !seen.insert(next) {
            return Err(TraceError::LoopDetected { at: next, dest });
        }
        path.push(next);
        at = next;
    }
    Ok(path)
}

/// Convenience for a dense table vector indexed by node.
pub fn trace_in(tables: &[RoutingTable], src: NodeId, dest: NodeId) -> Result<Vec<NodeId>, TraceError> {
    trace_primary_path(|n| tables.get(n.index()), src, dest)
}

/// Writes CSV `node,dest,next_hop,metric,seq`.
pub fn write_tables<W: std::io::Write>(tables: &[RoutingTable], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "dest", "next_hop", "metric", "seq"])?;
    for t in tables {
        for e in t.entries() {
            w.write_record([
                t.owner().to_string(),
                e.dest.to_string(),
                e.next_hop.to_string(),
                e.metric.to_string(),
                e.seq.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn adv(dest: u32, metric: u32, seq: u64) -> Advertisement {
        Advertisement {
            dest: n(dest),
            metric,
            seq,
        }
    }

    fn msg(origin: u32, routes: Vec<Advertisement>) -> UpdateMessage {
        UpdateMessage {
            origin: n(origin),
            routes,
            full_dump: false,
        }
    }

    fn with_entry(owner: u32, dest: u32, via: u32, metric: u32, seq: u64) -> RoutingTable {
        let mut rt = RoutingTable::new(n(owner), t(0.0));
        rt.entries.insert(
            n(dest),
            RouteEntry {
                dest: n(dest),
                next_hop: n(via),
                metric,
                seq,
                installed_at: t(0.0),
            },
        );
        rt
    }

    #[test]
    fn fresh_full_dump() {
        let mut rt = RoutingTable::new(n(0), t(0.0));
        let m = rt.originate_update(t(0.0), true);
        assert_eq!(m.routes, vec![adv(0, 0, 2)]);
        assert!(m.full_dump);
    }

    #[test]
    fn incremental_without_changes_carries_only_self() {
        let mut rt = RoutingTable::new(n(0), t(0.0));
        rt.originate_update(t(0.0), true);
        let m = rt.originate_update(t(1.0), false);
        assert_eq!(m.routes, vec![adv(0, 0, 2)]);
    }

    #[test]
    fn direct_neighbor_adoption() {
        let mut rt = RoutingTable::new(n(0), t(0.0));
        let changed = rt.process_update(&msg(3, vec![adv(3, 0, 4)]), n(3), t(1.0));
        assert_eq!(changed, BTreeSet::from([n(3)]));
        let e = rt.entry(n(3)).unwrap();
        assert_eq!((e.next_hop, e.metric, e.seq), (n(3), 1, 4));
    }

    #[test]
    fn older_sequence_loses() {
        let mut rt = with_entry(0, 9, 1, 2, 6);
        let changed = rt.process_update(&msg(2, vec![adv(9, 3, 4)]), n(2), t(1.0));
        assert!(changed.is_empty());
        assert_eq!(rt.entry(n(9)).unwrap().next_hop, n(1));
    }

    #[test]
    fn equal_sequence_shorter_wins() {
        let mut rt = with_entry(0, 9, 1, 3, 6);
        rt.process_update(&msg(2, vec![adv(9, 1, 6)]), n(2), t(1.0));
        let e = rt.entry(n(9)).unwrap();
        assert_eq!((e.next_hop, e.metric, e.seq), (n(2), 2, 6));
        // Equal metric at equal seq keeps the incumbent.
        assert!(rt
            .process_update(&msg(4, vec![adv(9, 1, 6)]), n(4), t(2.0))
            .is_empty());
    }

    #[test]
    fn link_break_marks_odd_infinity() {
        let mut rt = with_entry(0, 9, 1, 3, 6);
        rt.entries.insert(
            n(8),
            RouteEntry {
                dest: n(8),
                next_hop: n(1),
                metric: 2,
                seq: 10,
                installed_at: t(0.0),
            },
        );
        let changed = rt.handle_link_break(n(1), t(5.0));
        assert_eq!(changed, BTreeSet::from([n(8), n(9)]));
        for d in [8, 9] {
            let e = rt.entry(n(d)).unwrap();
            assert_eq!(e.metric, INFINITY);
            assert_eq!(e.seq % 2, 1);
        }
        assert!(rt.handle_link_break(n(7), t(5.0)).is_empty());
        assert!(rt.has_pending_changes());
    }

    #[test]
    fn broken_advert_from_other_neighbor_ignored() {
        let mut rt = with_entry(0, 9, 1, 2, 6);
        assert!(rt
            .process_update(&msg(2, vec![adv(9, INFINITY, 7)]), n(2), t(1.0))
            .is_empty());
        // ...but accepted from the next hop.
        let changed = rt.process_update(&msg(1, vec![adv(9, INFINITY, 7)]), n(1), t(1.0));
        assert_eq!(changed, BTreeSet::from([n(9)]));
        assert_eq!(rt.lookup_next_hop(n(9)), None);
        // A fresh even sequence repairs it.
        rt.process_update(&msg(2, vec![adv(9, 2, 8)]), n(2), t(2.0));
        assert_eq!(rt.lookup_next_hop(n(9)), Some(n(2)));
    }

    #[test]
    fn lookups() {
        let rt = with_entry(0, 9, 1, INFINITY, 7);
        assert_eq!(rt.lookup_next_hop(n(0)), Some(n(0)));
        assert_eq!(rt.lookup_next_hop(n(9)), None);
        assert_eq!(rt.lookup_next_hop(n(5)), None);
    }

    #[test]
    fn self_advertisements_are_ignored() {
        let mut rt = RoutingTable::new(n(0), t(0.0));
        rt.originate_update(t(0.0), true);
        rt.process_update(&msg(1, vec![adv(0, INFINITY, 99)]), n(1), t(1.0));
        let own = rt.entry(n(0)).unwrap();
        assert_eq!((own.next_hop, own.metric, own.seq), (n(0), 0, 2));
    }

    #[test]
    fn trace_examples() {
        // Line 0-1-2 built by hand.
        let mut tables: Vec<RoutingTable> = (0..3).map(|i| RoutingTable::new(n(i), t(0.0))).collect();
        tables[0] = with_entry(0, 2, 1, 2, 2);
        tables[1] = with_entry(1, 2, 2, 1, 2);
        assert_eq!(trace_in(&tables, n(0), n(2)).unwrap(), vec![n(0), n(1), n(2)]);
        assert_eq!(trace_in(&tables, n(1), n(1)).unwrap(), vec![n(1)]);
        assert_eq!(
            trace_in(&tables, n(2), n(0)),
            Err(TraceError::NoRoute { at: n(2), dest: n(0) })
        );
        // Inconsistent tables: 0 -> 1 -> 0.
        tables[1] = with_entry(1, 2, 0, 3, 2);
        assert!(matches!(
            trace_in(&tables, n(0), n(2)),
            Err(TraceError::LoopDetected { .. })
        ));
    }
}
