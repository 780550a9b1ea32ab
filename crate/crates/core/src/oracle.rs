//! Reference answers computed directly from a connectivity graph.
//!
//! Graphs are adjacency lists indexed by node, as produced by
//! [`TopologySnapshot::adjacency`](crate::radio::TopologySnapshot::adjacency).
//! Nothing here is used by the protocols themselves.

use std::collections::{BTreeSet, VecDeque};

use crate::dbrt::internal_nodes;
use crate::dsdv::{trace_in, RoutingTable};
use crate::NodeId;

/// Hop distance from `src` to every node, `None` when unreachable.
pub fn bfs_distances(adj: &[Vec<NodeId>], src: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src.index()] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.index()].expect("queued nodes have a distance");
        for &v in &adj[u.index()] {
            if dist[v.index()].is_none() {
                dist[v.index()] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs hop distances.
pub fn all_pairs(adj: &[Vec<NodeId>]) -> Vec<Vec<Option<u32>>> {
    (0..adj.len()).map(|i| bfs_distances(adj, NodeId::from_index(i))).collect()
}

pub fn is_connected(adj: &[Vec<NodeId>]) -> bool {
    adj.is_empty() || bfs_distances(adj, NodeId(0)).iter().all(Option::is_some)
}

/// Shortest path from `src` to `dest` in `adj` with `blocked` removed,
/// preferring smaller node ids among equal-length paths.
pub fn shortest_path_avoiding(
    adj: &[Vec<NodeId>],
    src: NodeId,
    dest: NodeId,
    blocked: &BTreeSet<NodeId>,
) -> Option<Vec<NodeId>> {
    let mut parent: Vec<Option<NodeId>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    seen[src.index()] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dest {
            let mut path = vec![dest];
            let mut at = dest;
            while let Some(p) = parent[at.index()] {
                path.push(p);
                at = p;
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adj[u.index()] {
            if !seen[v.index()] && !blocked.contains(&v) {
                seen[v.index()] = true;
                parent[v.index()] = Some(u);
                queue.push_back(v);
            }
        }
    }
    None
}

/// Shortest path from `src` to `dest` that shares no internal node with
/// `primary`.
pub fn oracle_disjoint_path(
    adj: &[Vec<NodeId>],
    src: NodeId,
    dest: NodeId,
    primary: &[NodeId],
) -> Option<Vec<NodeId>> {
    let blocked: BTreeSet<NodeId> = internal_nodes(primary).iter().copied().collect();
    shortest_path_avoiding(adj, src, dest, &blocked)
}

/// Every simple path from `src` to `dest`. Exponential; for small graphs.
pub fn enumerate_simple_paths(adj: &[Vec<NodeId>], src: NodeId, dest: NodeId) -> Vec<Vec<NodeId>> {
    fn go(adj: &[Vec<NodeId>], dest: NodeId, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        let at = *path.last().expect("path starts nonempty");
        if at == dest {
            out.push(path.clone());
            return;
        }
        for &v in &adj[at.index()] {
            if !path.contains(&v) {
                path.push(v);
                go(adj, dest, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(adj, dest, &mut vec![src], &mut out);
    out
}

/// Length of the shortest disjoint path by exhaustive enumeration.
pub fn exhaustive_disjoint_len(
    adj: &[Vec<NodeId>],
    src: NodeId,
    dest: NodeId,
    primary: &[NodeId],
) -> Option<usize> {
    let internal: BTreeSet<NodeId> = internal_nodes(primary).iter().copied().collect();
    enumerate_simple_paths(adj, src, dest)
        .into_iter()
        .filter(|p| internal_nodes(p).iter().all(|n| !internal.contains(n)))
        .map(|p| p.len())
        .min()
}

/// Neighbors of `owner` off the primary path whose own traced route to
/// `dest` avoids every primary node except `dest`. These are exactly the
/// neighbors that can answer a query without forwarding it.
pub fn disjoint_route_neighbors(
    tables: &[RoutingTable],
    adj: &[Vec<NodeId>],
    owner: NodeId,
    dest: NodeId,
    primary: &[NodeId],
) -> Vec<NodeId> {
    let on_primary: BTreeSet<NodeId> = primary.iter().copied().collect();
    adj[owner.index()]
        .iter()
        .copied()
        .filter(|n| !internal_nodes(primary).contains(n))
        .filter(|&n| {
            n == dest
                || trace_in(tables, n, dest)
                    .map(|route| route.iter().all(|m| *m == dest || !on_primary.contains(m)))
                    .unwrap_or(false)
        })
        .collect()
}
