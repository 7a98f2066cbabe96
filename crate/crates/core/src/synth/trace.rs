use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{oracle::GeneratorConfig, Application, DayPhase, LocationCategory, Persona, SECONDS_PER_DAY};
use crate::channel::{step_position, Geometry, Position};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose, StreamRng};

/// Observable context of one user in one time slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub ts_index: u64,
    /// Seconds since midnight.
    pub time_of_day: f64,
    pub cell: (u32, u32),
    pub position: Position,
    pub location: LocationCategory,
    /// m/s
    pub speed: f64,
    pub application: Application,
}

impl ContextRecord {
    pub fn phase(&self) -> DayPhase {
        DayPhase::of(self.time_of_day)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedAnchor {
    pub category: LocationCategory,
    pub position: Position,
    pub radius_m: f64,
}

impl Persona {
    /// Anchors in metres, ordered by category tie-break order.
    pub fn resolved_anchors(&self, geometry: &Geometry) -> Vec<ResolvedAnchor> {
        self.anchors
            .iter()
            .map(|(&category, a)| ResolvedAnchor {
                category,
                position: geometry.cell_center((a.row, a.col)),
                radius_m: a.radius_m,
            })
            .collect()
    }
}

/// Category of the nearest anchor that covers `position`; ties go to the
/// earlier category (home, work, commute), uncovered positions map to other.
pub fn map_location(position: Position, anchors: &[ResolvedAnchor]) -> LocationCategory {
    let mut best: Option<(f64, LocationCategory)> = None;
    for a in anchors {
        let d = (position.0 - a.position.0).hypot(position.1 - a.position.1);
        if d > a.radius_m {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bc)) => d < bd || (d == bd && a.category < bc),
        };
        if better {
            best = Some((d, a.category));
        }
    }
    best.map_or(LocationCategory::Other, |(_, c)| c)
}

fn sample_app(rng: &mut StreamRng, persona: &Persona, window: usize) -> Application {
    let mix = &persona.schedule[window].apps;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (&app, &p) in mix {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(app);
        if u < acc {
            return app;
        }
    }
    last.expect("validated app mix has positive mass")
}

struct Mover<'a> {
    persona: &'a Persona,
    geometry: &'a Geometry,
    gen: &'a GeneratorConfig,
    anchors: Vec<ResolvedAnchor>,
    position: Position,
    route: VecDeque<Position>,
    dwell_at: Position,
    offset: (f64, f64),
}

impl Mover<'_> {
    fn anchor_of(&self, loc: LocationCategory) -> Position {
        self.anchors
            .iter()
            .find(|a| a.category == loc)
            .map(|a| a.position)
            .expect("validated schedule references known anchors")
    }

    fn enter_window(&mut self, window: usize) {
        let schedule = &self.persona.schedule;
        let loc = schedule[window].location;
        self.route.clear();
        if loc == LocationCategory::Commute {
            let dest = (1..=schedule.len())
                .map(|k| schedule[(window + k) % schedule.len()].location)
                .find(|l| *l != LocationCategory::Commute)
                .expect("validated schedule has a non-commute window");
            self.route.push_back(self.anchor_of(LocationCategory::Commute));
            self.route.push_back(self.anchor_of(dest));
        } else {
            self.route.push_back(self.anchor_of(loc));
        }
    }

    fn advance(&mut self, rng: &mut StreamRng, ts_len: f64) -> f64 {
        let before = self.position;
        if let Some(&target) = self.route.front() {
            self.position = step_position(self.position, target, self.persona.speed_mps, ts_len, self.geometry);
            if self.position == target {
                self.route.pop_front();
                if self.route.is_empty() {
                    self.dwell_at = target;
                    self.offset = (0.0, 0.0);
                }
            }
        } else {
            let (step, lim) = (self.gen.dwell_step_m, self.gen.dwell_jitter_m);
            if step > 0.0 {
                self.offset.0 = (self.offset.0 + rng.random_range(-step..=step)).clamp(-lim, lim);
                self.offset.1 = (self.offset.1 + rng.random_range(-step..=step)).clamp(-lim, lim);
            }
            self.position = self
                .geometry
                .clamp((self.dwell_at.0 + self.offset.0, self.dwell_at.1 + self.offset.1));
        }
        (self.position.0 - before.0).hypot(self.position.1 - before.1) / ts_len
    }
}

/// One context record per slot for `duration_s` seconds.
///
/// Users follow the persona schedule: at each window change they head for the
/// window's anchor (commute windows route through the commute anchor to the
/// next destination), travelling at the persona speed, and dwell with a small
/// bounded jitter once there. Applications are held for exponentially
/// distributed sessions drawn from the window's mix.
pub fn generate_trace(
    persona: &Persona,
    geometry: &Geometry,
    gen: &GeneratorConfig,
    duration_s: f64,
    ts_len: f64,
    seed: u64,
) -> Result<Vec<ContextRecord>> {
    if persona.schedule.is_empty() {
        return Err(Error::EmptySchedule(persona.id));
    }
    persona.validate()?;
    if !(duration_s > 0.0 && ts_len > 0.0 && duration_s >= ts_len) {
        return Err(Error::Config(format!(
            "duration {duration_s}s must be positive and at least one slot of {ts_len}s"
        )));
    }
    let slots = (duration_s / ts_len).floor() as u64;
    let mut move_rng = rng::stream(seed, persona.id as u64, Purpose::Mobility);
    let mut app_rng = rng::stream(seed, persona.id as u64, Purpose::Application);

    let anchors = persona.resolved_anchors(geometry);
    let time_at = |ts: u64| (gen.start_time_s + ts as f64 * ts_len).rem_euclid(SECONDS_PER_DAY);

    let first_window = persona.schedule_index(time_at(0));
    let mut mover = Mover {
        persona,
        geometry,
        gen,
        anchors,
        position: (0.0, 0.0),
        route: VecDeque::new(),
        dwell_at: (0.0, 0.0),
        offset: (0.0, 0.0),
    };
    let start_loc = persona.schedule[first_window].location;
    mover.position = mover.anchor_of(start_loc);
    mover.dwell_at = mover.position;
    mover.enter_window(first_window);

    let switch_prob = if gen.mean_session_s > 0.0 {
        (ts_len / gen.mean_session_s).min(1.0)
    } else {
        1.0
    };
    let mut window = first_window;
    let mut app = sample_app(&mut app_rng, persona, window);
    let mut records = Vec::with_capacity(slots as usize);

    for ts in 0..slots {
        let time_of_day = time_at(ts);
        let w = persona.schedule_index(time_of_day);
        if w != window {
            window = w;
            mover.enter_window(w);
            app = sample_app(&mut app_rng, persona, w);
        } else if ts > 0 && app_rng.random::<f64>() < switch_prob {
            app = sample_app(&mut app_rng, persona, w);
        }
        let speed = if ts == 0 { 0.0 } else { mover.advance(&mut move_rng, ts_len) };
        let position = mover.position;
        records.push(ContextRecord {
            ts_index: ts,
            time_of_day,
            cell: geometry.cell_of(position),
            position,
            location: map_location(position, &mover.anchors),
            speed,
            application: app,
        });
    }
    Ok(records)
}
