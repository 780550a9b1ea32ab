//! Random-waypoint motion with pause times.
//!
//! Trajectories are generated up front for the whole run from a dedicated
//! random stream, so node motion does not depend on anything the routing
//! layer does.

use rand::Rng;
use thiserror::Error;

use crate::radio::Position;
use crate::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig {
    pub area_width: f64,
    pub area_height: f64,
    /// m/s
    pub speed_min: f64,
    /// m/s
    pub speed_max: f64,
    /// seconds
    pub pause_time: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            area_width: 1000.0,
            area_height: 800.0,
            speed_min: 1.0,
            speed_max: 10.0,
            pause_time: 30.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("area dimensions must be positive, got {0} x {1}")]
    Area(f64, f64),
    #[error("speeds must satisfy 0 < speed_min <= speed_max, got {0}..{1}")]
    Speed(f64, f64),
    #[error("pause_time must be non-negative, got {0}")]
    Pause(f64),
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.area_width > 0.0 && self.area_height > 0.0)
            || !self.area_width.is_finite()
            || !self.area_height.is_finite()
        {
            return Err(MobilityError::Area(self.area_width, self.area_height));
        }
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite()) {
            return Err(MobilityError::Speed(self.speed_min, self.speed_max));
        }
        if !(self.pause_time >= 0.0 && self.pause_time.is_finite()) {
            return Err(MobilityError::Pause(self.pause_time));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.area_width).contains(&p.x) && (0.0..=self.area_height).contains(&p.y)
    }

    pub fn random_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(
            rng.gen_range(0.0..=self.area_width),
            rng.gen_range(0.0..=self.area_height),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    Moving,
    PausedUntil(SimTime),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointState {
    /// Position at `leg_start`.
    pub pos: Position,
    pub dest: Position,
    pub speed: f64,
    pub leg_start: SimTime,
    pub phase: Phase,
}

impl WaypointState {
    /// Initial state: resting at `pos` until `pause_time`.
    pub fn resting(pos: Position, cfg: &MobilityConfig) -> Self {
        WaypointState {
            pos,
            dest: pos,
            speed: cfg.speed_min,
            leg_start: SimTime::ZERO,
            phase: Phase::PausedUntil(SimTime::from_secs(cfg.pause_time)),
        }
    }

    pub fn arrival(&self) -> SimTime {
        self.leg_start + self.pos.distance(&self.dest) / self.speed
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        match self.phase {
            Phase::PausedUntil(_) => self.pos,
            Phase::Moving => {
                let total = self.pos.distance(&self.dest);
                let travelled = (t - self.leg_start).max(0.0) * self.speed;
                if total == 0.0 || travelled >= total {
                    return self.dest;
                }
                let f = travelled / total;
                Position::new(
                    self.pos.x + (self.dest.x - self.pos.x) * f,
                    self.pos.y + (self.dest.y - self.pos.y) * f,
                )
            }
        }
    }
}

/// Destination uniform over the area, speed uniform in `[speed_min, speed_max]`.
pub fn next_leg<R: Rng + ?Sized>(rng: &mut R, cfg: &MobilityConfig) -> (Position, f64) {
    let dest = cfg.random_position(rng);
    let speed = if cfg.speed_min == cfg.speed_max {
        cfg.speed_min
    } else {
        rng.gen_range(cfg.speed_min..=cfg.speed_max)
    };
    (dest, speed)
}

/// State transition at `now`: an arrived mover starts pausing, an expired
/// pause draws a new leg. Anything else is returned unchanged.
pub fn advance<R: Rng + ?Sized>(
    state: &WaypointState,
    now: SimTime,
    rng: &mut R,
    cfg: &MobilityConfig,
) -> WaypointState {
    match state.phase {
        Phase::Moving if now >= state.arrival() => {
            let rested = WaypointState {
                pos: state.dest,
                dest: state.dest,
                speed: state.speed,
                leg_start: now,
                phase: Phase::PausedUntil(now + cfg.pause_time),
            };
            if cfg.pause_time == 0.0 {
                advance(&rested, now, rng, cfg)
            } else {
                rested
            }
        }
        Phase::PausedUntil(until) if now >= until => {
            let (dest, speed) = next_leg(rng, cfg);
            WaypointState {
                pos: state.pos,
                dest,
                speed,
                leg_start: now,
                phase: Phase::Moving,
            }
        }
        _ => *state,
    }
}

/// Piecewise-linear motion of one node over the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Consecutive states; `states[i]` is valid on `[states[i].leg_start, states[i+1].leg_start)`.
    states: Vec<WaypointState>,
}

impl Trajectory {
    pub fn stationary(pos: Position) -> Self {
        Trajectory {
            states: vec![WaypointState {
                pos,
                dest: pos,
                speed: 1.0,
                leg_start: SimTime::ZERO,
                phase: Phase::PausedUntil(SimTime::from_secs(f64::MAX)),
            }],
        }
    }

    pub fn random_waypoint<R: Rng + ?Sized>(
        start: Position,
        cfg: &MobilityConfig,
        horizon: SimTime,
        rng: &mut R,
    ) -> Self {
        let mut state = WaypointState::resting(start, cfg);
        let mut states = vec![state];
        loop {
            let boundary = match state.phase {
                Phase::Moving => state.arrival(),
                Phase::PausedUntil(until) => until,
            };
            if boundary > horizon {
                break;
            }
            state = advance(&state, boundary, rng, cfg);
            states.push(state);
        }
        Trajectory { states }
    }

    pub fn states(&self) -> &[WaypointState] {
        &self.states
    }

    /// Number of legs started (pause to move transitions).
    pub fn leg_count(&self) -> usize {
        self.states
            .iter()
            .filter(|s| s.phase == Phase::Moving)
            .count()
    }

    fn state_at(&self, t: SimTime) -> &WaypointState {
        let idx = self.states.partition_point(|s| s.leg_start <= t);
        &self.states[idx.saturating_sub(1)]
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        self.state_at(t).position_at(t)
    }
}

/// Writes sampled positions as CSV `time,node,x,y`.
pub fn write_trace<W: std::io::Write>(
    trajectories: &[Trajectory],
    interval: f64,
    duration: SimTime,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "node", "x", "y"])?;
    let steps = (duration.secs() / interval).floor() as u64;
    for k in 0..=steps {
        let t = SimTime::from_secs(k as f64 * interval);
        for (i, traj) in trajectories.iter().enumerate() {
            let p = traj.position_at(t);
            w.write_record([
                t.to_string(),
                NodeId::from_index(i).to_string(),
                p.x.to_string(),
                p.y.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
