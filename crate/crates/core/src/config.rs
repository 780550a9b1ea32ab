//! Scenario configuration in a flat `section.key = value` text format.
//!
//! Lines may carry `#` comments. Every key is optional; missing keys take the
//! defaults below, unknown or repeated keys are rejected. [`emit`] writes
//! every key so that `parse(emit(cfg)) == cfg`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::link::LinkConfig;
use crate::mobility::MobilityConfig;
use crate::radio::{Position, RadioModel};
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("{}: invalid `{key}`: {reason}", line.map_or("config".to_string(), |l| format!("line {l}")))]
    Invalid { line: Option<usize>, key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityModel {
    Static,
    RandomWaypoint,
}

impl MobilityModel {
    pub fn as_str(self) -> &'static str {
        match self {
            MobilityModel::Static => "static",
            MobilityModel::RandomWaypoint => "random_waypoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsdvConfig {
    /// Seconds between full dumps.
    pub periodic_interval: f64,
    /// Upper bound of the random delay before a triggered update.
    pub trigger_jitter: f64,
    /// DATA packets buffered per destination while no route exists.
    pub hold_queue: usize,
}

impl Default for DsdvConfig {
    fn default() -> Self {
        DsdvConfig {
            periodic_interval: 15.0,
            trigger_jitter: 0.01,
            hold_queue: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbrtConfig {
    pub enabled: bool,
    pub query_depth: u8,
    pub rebuild_interval: f64,
    /// How long a round collects replies before selecting.
    pub round_window: f64,
    pub round_jitter: f64,
    /// Protect every destination rather than only those seen in traffic.
    pub all_pairs: bool,
    /// A destination stops being protected after this long without traffic.
    pub active_timeout: f64,
}

impl Default for DbrtConfig {
    fn default() -> Self {
        DbrtConfig {
            enabled: true,
            query_depth: 1,
            rebuild_interval: 10.0,
            round_window: 0.2,
            round_jitter: 0.01,
            all_pairs: false,
            active_timeout: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    /// Explicit flow endpoints; drawn at random when absent.
    pub flows: Option<Vec<(NodeId, NodeId)>>,
    pub flow_count: usize,
    /// Packets per second per flow.
    pub rate: f64,
    pub packet_size: u32,
    pub start: f64,
    /// Defaults to the scenario duration.
    pub stop: Option<f64>,
    pub ttl: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            flows: None,
            flow_count: 4,
            rate: 4.0,
            packet_size: 512,
            start: 10.0,
            stop: None,
            ttl: 32,
        }
    }
}

/// Kills a node at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDown {
    pub node: NodeId,
    pub at: f64,
}

/// Kills the first internal node of the primary path `src -> dst` as it
/// stands at time `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimaryFault {
    pub src: NodeId,
    pub dst: NodeId,
    pub at: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultConfig {
    pub node_down: Vec<NodeDown>,
    pub primary_node: Vec<PrimaryFault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub node_count: usize,
    pub duration: f64,
    pub seed: u64,
    /// Initial placement is redrawn until every node has this many
    /// neighbors.
    pub min_neighbors: usize,
    pub require_connected: bool,
    pub radio: RadioModel,
    pub mobility_model: MobilityModel,
    pub mobility: MobilityConfig,
    /// Spacing of topology snapshots.
    pub tick: f64,
    /// Spacing of rows in the mobility trace.
    pub trace_interval: f64,
    /// Fixed start positions, one per node.
    pub positions: Option<Vec<Position>>,
    pub link: LinkConfig,
    pub dsdv: DsdvConfig,
    pub dbrt: DbrtConfig,
    pub traffic: TrafficConfig,
    pub fault: FaultConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".to_string(),
            node_count: 50,
            duration: 250.0,
            seed: 1,
            min_neighbors: 0,
            require_connected: false,
            radio: RadioModel::default(),
            mobility_model: MobilityModel::RandomWaypoint,
            mobility: MobilityConfig::default(),
            tick: 0.1,
            trace_interval: 1.0,
            positions: None,
            link: LinkConfig::default(),
            dsdv: DsdvConfig::default(),
            dbrt: DbrtConfig::default(),
            traffic: TrafficConfig::default(),
            fault: FaultConfig::default(),
        }
    }
}

/// Every recognised key, in emission order.
pub const KEYS: &[&str] = &[
    "scenario.name",
    "scenario.node_count",
    "scenario.duration",
    "scenario.seed",
    "scenario.min_neighbors",
    "scenario.require_connected",
    "area.width",
    "area.height",
    "radio.tx_power",
    "radio.rx_threshold",
    "mobility.model",
    "mobility.speed_min",
    "mobility.speed_max",
    "mobility.pause_time",
    "mobility.tick",
    "mobility.trace_interval",
    "topology.positions",
    "link.bandwidth",
    "link.proc_delay",
    "link.loss_prob",
    "link.hello_interval",
    "link.miss_threshold",
    "link.size_hello",
    "link.size_update_header",
    "link.size_update_entry",
    "link.size_dbrt_header",
    "link.size_dbrt_node_id",
    "dsdv.periodic_interval",
    "dsdv.trigger_jitter",
    "dsdv.hold_queue",
    "dbrt.enabled",
    "dbrt.query_depth",
    "dbrt.rebuild_interval",
    "dbrt.round_window",
    "dbrt.round_jitter",
    "dbrt.all_pairs",
    "dbrt.active_timeout",
    "traffic.flows",
    "traffic.flow_count",
    "traffic.rate",
    "traffic.packet_size",
    "traffic.start",
    "traffic.stop",
    "traffic.ttl",
    "fault.node_down",
    "fault.primary_node",
];

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn node(v: &str) -> Result<NodeId, String> {
    num::<u32>(v.trim()).map(NodeId)
}

fn list(v: &str, sep: char) -> impl Iterator<Item = &str> {
    v.split(sep).map(str::trim).filter(|s| !s.is_empty())
}

fn positions(v: &str) -> Result<Vec<Position>, String> {
    list(v, ';')
        .map(|p| {
            let xy: Vec<&str> = p.split_whitespace().collect();
            match xy.as_slice() {
                [x, y] => Ok(Position::new(num(x)?, num(y)?)),
                _ => Err(format!("position `{p}` is not `x y`")),
            }
        })
        .collect()
}

fn pair(v: &str, sep: char) -> Result<(&str, &str), String> {
    v.split_once(sep)
        .ok_or_else(|| format!("`{v}` is missing `{sep}`"))
}

fn flows(v: &str) -> Result<Vec<(NodeId, NodeId)>, String> {
    list(v, ',')
        .map(|f| {
            let (a, b) = pair(f, '-')?;
            Ok((node(a)?, node(b)?))
        })
        .collect()
}

fn node_downs(v: &str) -> Result<Vec<NodeDown>, String> {
    list(v, ',')
        .map(|f| {
            let (n, at) = pair(f, '@')?;
            Ok(NodeDown {
                node: node(n)?,
                at: num(at.trim())?,
            })
        })
        .collect()
}

fn primary_faults(v: &str) -> Result<Vec<PrimaryFault>, String> {
    list(v, ',')
        .map(|f| {
            let (route, at) = pair(f, '@')?;
            let (s, d) = pair(route, '>')?;
            Ok(PrimaryFault {
                src: node(s)?,
                dst: node(d)?,
                at: num(at.trim())?,
            })
        })
        .collect()
}

impl ScenarioConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "scenario.name" => self.name = v.to_string(),
            "scenario.node_count" => self.node_count = num(v)?,
            "scenario.duration" => self.duration = num(v)?,
            "scenario.seed" => self.seed = num(v)?,
            "scenario.min_neighbors" => self.min_neighbors = num(v)?,
            "scenario.require_connected" => self.require_connected = boolean(v)?,
            "area.width" => self.mobility.area_width = num(v)?,
            "area.height" => self.mobility.area_height = num(v)?,
            "radio.tx_power" => self.radio.tx_power = num(v)?,
            "radio.rx_threshold" => self.radio.rx_threshold = num(v)?,
            "mobility.model" => {
                self.mobility_model = match v {
                    "static" => MobilityModel::Static,
                    "random_waypoint" => MobilityModel::RandomWaypoint,
                    _ => return Err(format!("`{v}` is not one of static, random_waypoint")),
                }
            }
            "mobility.speed_min" => self.mobility.speed_min = num(v)?,
            "mobility.speed_max" => self.mobility.speed_max = num(v)?,
            "mobility.pause_time" => self.mobility.pause_time = num(v)?,
            "mobility.tick" => self.tick = num(v)?,
            "mobility.trace_interval" => self.trace_interval = num(v)?,
            "topology.positions" => self.positions = Some(positions(v)?),
            "link.bandwidth" => self.link.bandwidth = num(v)?,
            "link.proc_delay" => self.link.proc_delay = num(v)?,
            "link.loss_prob" => self.link.loss_prob = num(v)?,
            "link.hello_interval" => self.link.hello_interval = num(v)?,
            "link.miss_threshold" => self.link.miss_threshold = num(v)?,
            "link.size_hello" => self.link.sizes.hello = num(v)?,
            "link.size_update_header" => self.link.sizes.update_header = num(v)?,
            "link.size_update_entry" => self.link.sizes.update_entry = num(v)?,
            "link.size_dbrt_header" => self.link.sizes.dbrt_header = num(v)?,
            "link.size_dbrt_node_id" => self.link.sizes.dbrt_node_id = num(v)?,
            "dsdv.periodic_interval" => self.dsdv.periodic_interval = num(v)?,
            "dsdv.trigger_jitter" => self.dsdv.trigger_jitter = num(v)?,
            "dsdv.hold_queue" => self.dsdv.hold_queue = num(v)?,
            "dbrt.enabled" => self.dbrt.enabled = boolean(v)?,
            "dbrt.query_depth" => self.dbrt.query_depth = num(v)?,
            "dbrt.rebuild_interval" => self.dbrt.rebuild_interval = num(v)?,
            "dbrt.round_window" => self.dbrt.round_window = num(v)?,
            "dbrt.round_jitter" => self.dbrt.round_jitter = num(v)?,
            "dbrt.all_pairs" => self.dbrt.all_pairs = boolean(v)?,
            "dbrt.active_timeout" => self.dbrt.active_timeout = num(v)?,
            "traffic.flows" => self.traffic.flows = Some(flows(v)?),
            "traffic.flow_count" => self.traffic.flow_count = num(v)?,
            "traffic.rate" => self.traffic.rate = num(v)?,
            "traffic.packet_size" => self.traffic.packet_size = num(v)?,
            "traffic.start" => self.traffic.start = num(v)?,
            "traffic.stop" => self.traffic.stop = Some(num(v)?),
            "traffic.ttl" => self.traffic.ttl = num(v)?,
            "fault.node_down" => self.fault.node_down = node_downs(v)?,
            "fault.primary_node" => self.fault.primary_node = primary_faults(v)?,
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Text form of `key`, or `None` when the key is unset and should be
    /// omitted.
    fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "scenario.name" => self.name.clone(),
            "scenario.node_count" => self.node_count.to_string(),
            "scenario.duration" => self.duration.to_string(),
            "scenario.seed" => self.seed.to_string(),
            "scenario.min_neighbors" => self.min_neighbors.to_string(),
            "scenario.require_connected" => self.require_connected.to_string(),
            "area.width" => self.mobility.area_width.to_string(),
            "area.height" => self.mobility.area_height.to_string(),
            "radio.tx_power" => self.radio.tx_power.to_string(),
            "radio.rx_threshold" => self.radio.rx_threshold.to_string(),
            "mobility.model" => self.mobility_model.as_str().to_string(),
            "mobility.speed_min" => self.mobility.speed_min.to_string(),
            "mobility.speed_max" => self.mobility.speed_max.to_string(),
            "mobility.pause_time" => self.mobility.pause_time.to_string(),
            "mobility.tick" => self.tick.to_string(),
            "mobility.trace_interval" => self.trace_interval.to_string(),
            "topology.positions" => self
                .positions
                .as_ref()?
                .iter()
                .map(|p| format!("{} {}", p.x, p.y))
                .collect::<Vec<_>>()
                .join("; "),
            "link.bandwidth" => self.link.bandwidth.to_string(),
            "link.proc_delay" => self.link.proc_delay.to_string(),
            "link.loss_prob" => self.link.loss_prob.to_string(),
            "link.hello_interval" => self.link.hello_interval.to_string(),
            "link.miss_threshold" => self.link.miss_threshold.to_string(),
            "link.size_hello" => self.link.sizes.hello.to_string(),
            "link.size_update_header" => self.link.sizes.update_header.to_string(),
            "link.size_update_entry" => self.link.sizes.update_entry.to_string(),
            "link.size_dbrt_header" => self.link.sizes.dbrt_header.to_string(),
            "link.size_dbrt_node_id" => self.link.sizes.dbrt_node_id.to_string(),
            "dsdv.periodic_interval" => self.dsdv.periodic_interval.to_string(),
            "dsdv.trigger_jitter" => self.dsdv.trigger_jitter.to_string(),
            "dsdv.hold_queue" => self.dsdv.hold_queue.to_string(),
            "dbrt.enabled" => self.dbrt.enabled.to_string(),
            "dbrt.query_depth" => self.dbrt.query_depth.to_string(),
            "dbrt.rebuild_interval" => self.dbrt.rebuild_interval.to_string(),
            "dbrt.round_window" => self.dbrt.round_window.to_string(),
            "dbrt.round_jitter" => self.dbrt.round_jitter.to_string(),
            "dbrt.all_pairs" => self.dbrt.all_pairs.to_string(),
            "dbrt.active_timeout" => self.dbrt.active_timeout.to_string(),
            "traffic.flows" => self
                .traffic
                .flows
                .as_ref()?
                .iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect::<Vec<_>>()
                .join(", "),
            "traffic.flow_count" => self.traffic.flow_count.to_string(),
            "traffic.rate" => self.traffic.rate.to_string(),
            "traffic.packet_size" => self.traffic.packet_size.to_string(),
            "traffic.start" => self.traffic.start.to_string(),
            "traffic.stop" => self.traffic.stop?.to_string(),
            "traffic.ttl" => self.traffic.ttl.to_string(),
            "fault.node_down" => self
                .fault
                .node_down
                .iter()
                .map(|f| format!("{}@{}", f.node, f.at))
                .collect::<Vec<_>>()
                .join(", "),
            "fault.primary_node" => self
                .fault
                .primary_node
                .iter()
                .map(|f| format!("{}>{}@{}", f.src, f.dst, f.at))
                .collect::<Vec<_>>()
                .join(", "),
            _ => unreachable!("key list and getter disagree on {key}"),
        };
        Some(s)
    }

    /// End of the traffic window.
    pub fn traffic_stop(&self) -> f64 {
        self.traffic.stop.unwrap_or(self.duration)
    }

    /// Seconds between packets of one flow.
    pub fn packet_interval(&self) -> f64 {
        1.0 / self.traffic.rate
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(&BTreeMap::new())
    }

    fn validate_with(&self, lines: &BTreeMap<&str, usize>) -> Result<(), ConfigError> {
        let fail = |key: &str, reason: String| ConfigError::Invalid {
            line: lines.get(key).copied(),
            key: key.to_string(),
            reason,
        };
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(fail(key, format!("must be positive, got {v}")))
            }
        };
        let nonneg = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(fail(key, format!("must be non-negative, got {v}")))
            }
        };
        let n = self.node_count;
        let in_net = |key: &str, id: NodeId| {
            if id.index() < n {
                Ok(())
            } else {
                Err(fail(key, format!("node {id} out of range for {n} nodes")))
            }
        };

        if self.name.is_empty() || self.name.contains(['#', '\n']) || self.name.trim() != self.name {
            return Err(fail("scenario.name", format!("`{}` is not a plain name", self.name)));
        }
        if n < 2 {
            return Err(fail("scenario.node_count", format!("need at least 2 nodes, got {n}")));
        }
        positive("scenario.duration", self.duration)?;
        if self.min_neighbors >= n {
            return Err(fail(
                "scenario.min_neighbors",
                format!("{} neighbors impossible with {n} nodes", self.min_neighbors),
            ));
        }
        self.radio.validate().map_err(|e| fail("radio.tx_power", e.to_string()))?;
        self.mobility.validate().map_err(|e| {
            let key = match e {
                crate::mobility::MobilityError::Area(..) => "area.width",
                crate::mobility::MobilityError::Speed(..) => "mobility.speed_min",
                crate::mobility::MobilityError::Pause(..) => "mobility.pause_time",
            };
            fail(key, e.to_string())
        })?;
        positive("mobility.tick", self.tick)?;
        positive("mobility.trace_interval", self.trace_interval)?;
        if let Some(ps) = &self.positions {
            if ps.len() != n {
                return Err(fail(
                    "topology.positions",
                    format!("{} positions for {n} nodes", ps.len()),
                ));
            }
            if let Some(p) = ps.iter().find(|p| !self.mobility.contains(p)) {
                return Err(fail("topology.positions", format!("{p:?} lies outside the area")));
            }
        }
        self.link.validate().map_err(|e| fail("link.bandwidth", e.to_string()))?;
        positive("dsdv.periodic_interval", self.dsdv.periodic_interval)?;
        nonneg("dsdv.trigger_jitter", self.dsdv.trigger_jitter)?;
        positive("dbrt.rebuild_interval", self.dbrt.rebuild_interval)?;
        positive("dbrt.round_window", self.dbrt.round_window)?;
        nonneg("dbrt.round_jitter", self.dbrt.round_jitter)?;
        positive("dbrt.active_timeout", self.dbrt.active_timeout)?;
        if let Some(fl) = &self.traffic.flows {
            for &(a, b) in fl {
                in_net("traffic.flows", a)?;
                in_net("traffic.flows", b)?;
                if a == b {
                    return Err(fail("traffic.flows", format!("flow {a}-{b} has equal endpoints")));
                }
            }
        }
        positive("traffic.rate", self.traffic.rate)?;
        if self.traffic.packet_size == 0 {
            return Err(fail("traffic.packet_size", "must be positive".to_string()));
        }
        if self.traffic.ttl == 0 {
            return Err(fail("traffic.ttl", "must be positive".to_string()));
        }
        nonneg("traffic.start", self.traffic.start)?;
        let stop = self.traffic_stop();
        if !(self.traffic.start < stop && stop <= self.duration) {
            return Err(fail(
                "traffic.stop",
                format!(
                    "window {}..{stop} must be nonempty and end by {}",
                    self.traffic.start, self.duration
                ),
            ));
        }
        for f in &self.fault.node_down {
            in_net("fault.node_down", f.node)?;
            nonneg("fault.node_down", f.at)?;
        }
        for f in &self.fault.primary_node {
            in_net("fault.primary_node", f.src)?;
            in_net("fault.primary_node", f.dst)?;
            nonneg("fault.primary_node", f.at)?;
            if f.src == f.dst {
                return Err(fail("fault.primary_node", "source equals destination".to_string()));
            }
        }
        Ok(())
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut lines: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        if lines.insert(known, line).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        cfg.set(known, value).map_err(|reason| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        })?;
    }
    cfg.validate_with(&lines)?;
    Ok(cfg)
}

/// Writes every set key, one per line.
pub fn emit(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        if let Some(v) = cfg.get(key) {
            if !v.is_empty() {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.mobility.area_width, 1000.0);
        assert_eq!(cfg.mobility.area_height, 800.0);
        assert_eq!(cfg.radio.tx_power, 0.28);
        assert_eq!(cfg.radio.rx_threshold, 4.48e-6);
        assert_eq!(cfg.link.bandwidth, 2e6);
        assert_eq!(cfg.duration, 250.0);
        assert_eq!(cfg.traffic.packet_size, 512);
        assert_eq!(cfg.dbrt.rebuild_interval, 10.0);
    }

    #[test]
    fn negative_pause_rejected() {
        let err = parse_config("mobility.pause_time = -1").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { line: Some(1), ref key, .. } if key == "mobility.pause_time"), "{err}");
    }

    #[test]
    fn midpoint_scenario() {
        let cfg = parse_config("scenario.node_count = 50\nmobility.pause_time = 30 # midpoint\n").unwrap();
        assert_eq!(cfg.node_count, 50);
        assert_eq!(cfg.mobility.pause_time, 30.0);
    }

    #[test]
    fn errors_name_key_and_line() {
        let err = parse_config("# hi\n\nradio.power = 3").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 3,
                key: "radio.power".into()
            }
        );
        assert!(err.to_string().contains("radio.power"));
        assert!(matches!(
            parse_config("scenario.seed = x").unwrap_err(),
            ConfigError::BadValue { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("scenario.seed = 1\nscenario.seed = 2").unwrap_err(),
            ConfigError::DuplicateKey { line: 2, .. }
        ));
        assert!(matches!(parse_config("nonsense").unwrap_err(), ConfigError::Syntax { .. }));
        assert!(parse_config("scenario.node_count = 1").is_err());
        assert!(parse_config("traffic.flows = 0-0").is_err());
        assert!(parse_config("scenario.node_count = 4\ntraffic.flows = 0-9").is_err());
    }

    #[test]
    fn lists_parse() {
        let cfg = parse_config(
            "scenario.node_count = 4\n\
             mobility.model = static\n\
             topology.positions = 100 300; 250 400; 250 200; 400 300\n\
             traffic.flows = 0-3, 1-2\n\
             fault.node_down = 1@40\n\
             fault.primary_node = 0>3@50.5\n",
        )
        .unwrap();
        assert_eq!(cfg.positions.as_ref().unwrap()[1], Position::new(250.0, 400.0));
        assert_eq!(cfg.traffic.flows.as_ref().unwrap()[1], (NodeId(1), NodeId(2)));
        assert_eq!(cfg.fault.node_down[0], NodeDown { node: NodeId(1), at: 40.0 });
        assert_eq!(cfg.fault.primary_node[0].at, 50.5);
        assert_eq!(parse_config(&emit(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn every_key_has_getter_and_setter() {
        let cfg = ScenarioConfig::default();
        for key in KEYS {
            if let Some(v) = cfg.get(key) {
                if !v.is_empty() {
                    let mut c = cfg.clone();
                    c.set(key, &v).unwrap();
                    assert_eq!(c, cfg, "{key}");
                }
            }
        }
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            (2usize..60, 1.0f64..1000.0, any::<u64>(), any::<bool>(), 0.0f64..200.0),
            (0.1f64..5.0, 0.0f64..5.0, 0.0f64..1.0, any::<bool>(), 0u8..4),
            (0.5f64..20.0, 1.0f64..100.0, 0usize..10, proptest::option::of(prop::collection::vec((0u32..2, 2u32..4), 1..4))),
            prop::collection::vec((0.0f64..1000.0, 0.0f64..800.0), 4),
        )
            .prop_map(|((n, dur, seed, rc, pause), (smin, sdelta, loss, en, depth), (rate, tx, hq, fl), pos)| {
                let mut c = ScenarioConfig {
                    node_count: n.max(4),
                    duration: dur,
                    seed,
                    require_connected: rc,
                    ..Default::default()
                };
                c.mobility.pause_time = pause;
                c.mobility.speed_min = smin;
                c.mobility.speed_max = smin + sdelta;
                c.link.loss_prob = loss;
                c.dbrt.enabled = en;
                c.dbrt.query_depth = depth;
                c.traffic.rate = rate;
                c.traffic.start = 0.0;
                c.traffic.stop = Some(dur / 2.0);
                c.radio.tx_power = tx;
                c.dsdv.hold_queue = hq;
                c.traffic.flows = fl.map(|v| v.into_iter().map(|(a, b)| (NodeId(a), NodeId(b))).collect());
                if c.node_count == 4 {
                    c.positions = Some(pos.into_iter().map(|(x, y)| Position::new(x, y)).collect());
                }
                c.fault.node_down = vec![NodeDown { node: NodeId(1), at: dur / 3.0 }];
                c
            })
    }

    proptest! {
        #[test]
        fn round_trip(cfg in arb_config()) {
            prop_assert!(cfg.validate().is_ok(), "{:?}", cfg.validate());
            let text = emit(&cfg);
            prop_assert_eq!(parse_config(&text).unwrap(), cfg);
        }
    }
}
