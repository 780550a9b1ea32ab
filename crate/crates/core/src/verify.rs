//! Runtime invariant monitors and the `verify` report.
//!
//! The monitors re-derive each property from raw state instead of calling
//! the protocol code they check: disjointness is recomputed from node sets,
//! routing metrics are compared against breadth-first search, and delivered
//! unicast frames are checked against the radio range.

use std::collections::BTreeSet;
use std::fmt;

use crate::config::{MobilityModel, ScenarioConfig};
use crate::dbrt::{join_path, BackupEntry, DbrtCounters};
use crate::dsdv::{trace_in, RoutingTable, TraceError, INFINITY};
use crate::link::FrameOutcome;
use crate::oracle::all_pairs;
use crate::radio::{RadioModel, TopologySnapshot};
use crate::sim::{FailoverRecord, SimError, Simulation};
use crate::{NodeId, SimTime};

const MAX_EXAMPLES: usize = 5;
const LOOP_CHECK_PERIOD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorStats {
    pub name: &'static str,
    pub checks: u64,
    pub violations: u64,
    /// First few counterexamples.
    pub examples: Vec<String>,
}

impl MonitorStats {
    fn new(name: &'static str) -> Self {
        MonitorStats {
            name,
            checks: 0,
            violations: 0,
            examples: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, example: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(example());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for MonitorStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {:<22} checks={} violations={}",
            self.name, self.checks, self.violations
        )?;
        for e in &self.examples {
            write!(f, "\n    {e}")?;
        }
        Ok(())
    }
}

/// Adjacency lists paired with their all-pairs hop distances.
type OracleCache = (Vec<Vec<NodeId>>, Vec<Vec<Option<u32>>>);

#[derive(Debug, Clone, PartialEq)]
pub struct Monitors {
    pub disjointness: MonitorStats,
    pub loop_freedom: MonitorStats,
    pub dsdv_oracle: MonitorStats,
    pub frame_range: MonitorStats,
    oracle_cache: Option<OracleCache>,
    stable_since: SimTime,
    last_loop_check: Option<SimTime>,
}

impl Default for Monitors {
    fn default() -> Self {
        Self::new()
    }
}

impl Monitors {
    pub fn new() -> Self {
        Monitors {
            disjointness: MonitorStats::new("backup_disjointness"),
            loop_freedom: MonitorStats::new("loop_freedom"),
            dsdv_oracle: MonitorStats::new("dsdv_vs_bfs"),
            frame_range: MonitorStats::new("frame_range"),
            oracle_cache: None,
            stable_since: SimTime::ZERO,
            last_loop_check: None,
        }
    }

    pub fn all(&self) -> [&MonitorStats; 4] {
        [&self.disjointness, &self.loop_freedom, &self.dsdv_oracle, &self.frame_range]
    }

    /// Disjointness, next-hop exclusion, loop freedom and radio soundness of
    /// a freshly installed backup.
    pub fn on_install(
        &mut self,
        now: SimTime,
        owner: NodeId,
        entry: &BackupEntry,
        primary: &[NodeId],
        snapshot: &TopologySnapshot,
        model: &RadioModel,
    ) {
        let path = &entry.recorded_path;
        let inner = |p: &[NodeId]| -> BTreeSet<NodeId> {
            if p.len() > 2 {
                p[1..p.len() - 1].iter().copied().collect()
            } else {
                BTreeSet::new()
            }
        };
        let primary_inner = inner(primary);
        let distinct: BTreeSet<NodeId> = path.iter().copied().collect();
        let problem = if path.first() != Some(&owner) || path.last() != Some(&entry.dest) {
            Some("endpoints")
        } else if path.get(1) != Some(&entry.backup_next_hop) {
            Some("next hop is not the second path node")
        } else if primary_inner.contains(&entry.backup_next_hop) {
            Some("next hop on primary")
        } else if !inner(path).is_disjoint(&primary_inner) {
            Some("shares primary node")
        } else if distinct.len() != path.len() {
            Some("repeated node")
        } else if path.windows(2).any(|w| !snapshot.linked(model, w[0], w[1])) {
            Some("edge out of range")
        } else {
            None
        };
        self.disjointness.check(problem.is_none(), || {
            format!(
                "t={now} node {owner} dest {}: {} (backup {}, primary {})",
                entry.dest,
                problem.unwrap_or_default(),
                join_path(path),
                join_path(primary)
            )
        });
    }

    /// A unicast frame may only be delivered between nodes in range.
    pub fn on_unicast(
        &mut self,
        now: SimTime,
        src: NodeId,
        dst: NodeId,
        outcome: FrameOutcome,
        snapshot: &TopologySnapshot,
        model: &RadioModel,
    ) {
        let delivered = outcome == FrameOutcome::Delivered;
        let ok = !delivered || snapshot.linked(model, src, dst);
        self.frame_range
            .check(ok, || format!("t={now} frame {src}->{dst} delivered out of range"));
    }

    /// Loop freedom every second; BFS equivalence whenever DSDV is quiet on
    /// a lossless topology that has been stable for three update intervals.
    pub fn on_tick(
        &mut self,
        now: SimTime,
        tables: &[RoutingTable],
        adjacency: &[Vec<NodeId>],
        alive: &[bool],
        quiescent: bool,
        cfg: &ScenarioConfig,
    ) {
        let n = tables.len();
        let due = self
            .last_loop_check
            .is_none_or(|t| now - t >= LOOP_CHECK_PERIOD - 1e-9);
        if due {
            self.last_loop_check = Some(now);
            for s in (0..n).filter(|&i| alive[i]) {
                for d in (0..n).filter(|&j| j != s && alive[j]) {
                    let (s, d) = (NodeId::from_index(s), NodeId::from_index(d));
                    let r = trace_in(tables, s, d);
                    self.loop_freedom.check(!matches!(r, Err(TraceError::LoopDetected { .. })), || {
                        format!("t={now} route {s}->{d} loops")
                    });
                }
            }
        }

        let changed = self.oracle_cache.as_ref().is_none_or(|(adj, _)| adj != adjacency);
        if changed {
            self.oracle_cache = Some((adjacency.to_vec(), all_pairs(adjacency)));
            self.stable_since = now;
        }
        let settled = now - self.stable_since >= 3.0 * cfg.dsdv.periodic_interval;
        let applicable = cfg.mobility_model == MobilityModel::Static && cfg.link.loss_prob == 0.0;
        if !(quiescent && settled && applicable) {
            return;
        }
        let (_, dist) = self.oracle_cache.as_ref().expect("cache filled above");
        for s in (0..n).filter(|&i| alive[i]) {
            for d in (0..n).filter(|&j| j != s && alive[j]) {
                let want = dist[s][d];
                let got = tables[s].metric(NodeId::from_index(d)).filter(|&m| m < INFINITY);
                let path_ok = want.is_none()
                    || trace_in(tables, NodeId::from_index(s), NodeId::from_index(d))
                        .is_ok_and(|p| p.len() as u32 == want.unwrap_or(0) + 1);
                self.dsdv_oracle.check(want == got && path_ok, || {
                    format!("t={now} metric {s}->{d}: table {got:?}, bfs {want:?}")
                });
            }
        }
    }
}

/// Outcome of `verify`.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub monitors: Vec<MonitorStats>,
    pub notes: Vec<String>,
    pub counters: DbrtCounters,
    pub failovers: Vec<FailoverRecord>,
    pub conserved: bool,
    pub exhaustive_classification: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.monitors.iter().all(MonitorStats::passed) && self.conserved && self.exhaustive_classification
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.monitors {
            writeln!(f, "{m}")?;
        }
        let flag = |b: bool| if b { "PASS" } else { "FAIL" };
        writeln!(f, "{} packet_conservation", flag(self.conserved))?;
        writeln!(f, "{} frame_classification", flag(self.exhaustive_classification))?;
        for fo in &self.failovers {
            writeln!(
                f,
                "note: t={} node {} switched dest {} to backup via {}",
                fo.time, fo.node, fo.dest, fo.via
            )?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "overall: {}", flag(self.passed()))
    }
}

/// Runs `cfg` with every monitor armed.
pub fn verify(cfg: &ScenarioConfig) -> Result<VerificationReport, SimError> {
    let out = Simulation::new(cfg)?.with_monitors().run();
    let monitors = out.monitors.clone().expect("monitors were armed");
    let mut notes = Vec::new();
    if cfg.dbrt.enabled {
        for f in &out.flows {
            let covered = out.installs.iter().any(|r| r.owner == f.src && r.entry.dest == f.dst);
            if !covered {
                notes.push(format!("flow {}->{}: no backup available", f.src, f.dst));
            }
        }
    }
    if monitors.dsdv_oracle.checks == 0 {
        notes.push("dsdv_vs_bfs not exercised (needs a static lossless run with quiet periods)".to_string());
    }
    for fault in &out.faults {
        notes.push(format!("t={} node {} failed", fault.time, fault.node));
    }
    let classified: u64 = out.report.frames_by_kind.values().sum();
    Ok(VerificationReport {
        monitors: monitors.all().into_iter().cloned().collect(),
        notes,
        counters: out.counters.clone(),
        failovers: out.failovers.clone(),
        conserved: out.report.is_conserved(),
        exhaustive_classification: classified == out.frames.len() as u64
            && out.report.control_frames + out.report.data_frames == classified,
    })
}
