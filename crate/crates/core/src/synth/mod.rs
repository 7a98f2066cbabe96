//! Synthetic personas, mobility/context traces, the ground-truth tolerance
//! oracle and labelled development datasets.

mod dataset;
mod defaults;
mod oracle;
mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{emit_dataset, read_dataset_csv, write_dataset_csv, DatasetSpec, LabeledSample, QosSampling};
pub use defaults::{default_demands, default_personas};
pub use oracle::{ground_truth_profile, GeneratorConfig, ThresholdFractions};
pub use trace::{generate_trace, map_location, ContextRecord, ResolvedAnchor};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }

            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| Error::Parse(format!("unknown {} `{s}`", stringify!($name))))
            }
        }
    };
}

named_enum!(
    /// Application classes a user can be running in a slot.
    Application {
        Video => "video",
        Voice => "voice",
        Browsing => "browsing",
        Gaming => "gaming",
        Music => "music",
        VideoCall => "video_call",
        Social => "social",
        Download => "download",
    }
);

named_enum!(
    /// Semantic location a position is mapped to. Listed in tie-break order.
    LocationCategory {
        Home => "home",
        Work => "work",
        Commute => "commute",
        Other => "other",
    }
);

named_enum!(
    /// Fixed partition of the day used for features and tolerance buckets.
    DayPhase {
        Night => "night",
        Morning => "morning",
        Midday => "midday",
        Evening => "evening",
        Late => "late",
    }
);

impl DayPhase {
    /// Phase start hours; the last phase ends at midnight.
    pub const START_HOURS: [f64; 5] = [0.0, 6.0, 10.0, 16.0, 20.0];

    pub fn of(time_of_day_s: f64) -> DayPhase {
        let hour = time_of_day_s.rem_euclid(SECONDS_PER_DAY) / 3600.0;
        let idx = DayPhase::START_HOURS.iter().rposition(|&h| hour >= h).unwrap_or(0);
        DayPhase::ALL[idx]
    }
}

/// Constant demanded rate per application, in Mb/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandTable(BTreeMap<Application, f64>);

impl DemandTable {
    pub fn new(table: BTreeMap<Application, f64>) -> Result<Self> {
        for (app, &d) in &table {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("demand for {app} must be positive, got {d}")));
            }
        }
        Ok(DemandTable(table))
    }

    pub fn application_demand(&self, app: Application) -> Result<f64> {
        self.0.get(&app).copied().ok_or(Error::UnknownApplication(app))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Application, f64)> + '_ {
        self.0.iter().map(|(a, d)| (*a, *d))
    }

    pub fn validate(&self) -> Result<()> {
        DemandTable::new(self.0.clone()).map(|_| ())
    }
}

/// Anchor of a location category, given as a grid cell; positions within
/// `radius_m` of the cell centre map to the category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub row: u32,
    pub col: u32,
    pub radius_m: f64,
}

/// One schedule window `[start_h, end_h)` with its intended location and the
/// application mix used while in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub start_h: f64,
    pub end_h: f64,
    pub location: LocationCategory,
    pub apps: BTreeMap<Application, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    pub location: LocationCategory,
    pub application: Application,
    pub phase: DayPhase,
    pub tightness: f64,
}

/// Tightness per (location, application, day phase): an additive base plus
/// per-factor adjustments, clamped to `[0, 1]`, with explicit overrides taking
/// precedence. `1` pins `q_a5` to the demand, `0` drops it to `min_frac` of it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceParams {
    pub base: f64,
    pub location: BTreeMap<LocationCategory, f64>,
    pub application: BTreeMap<Application, f64>,
    pub phase: BTreeMap<DayPhase, f64>,
    pub overrides: Vec<ToleranceOverride>,
}

impl ToleranceParams {
    pub fn tightness(&self, location: LocationCategory, application: Application, phase: DayPhase) -> f64 {
        if let Some(o) = self
            .overrides
            .iter()
            .find(|o| o.location == location && o.application == application && o.phase == phase)
        {
            return o.tightness.clamp(0.0, 1.0);
        }
        let loc = self.location.get(&location).copied().unwrap_or(0.0);
        let app = self.application.get(&application).copied().unwrap_or(0.0);
        let ph = self.phase.get(&phase).copied().unwrap_or(0.0);
        (self.base + loc + app + ph).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Persona {
    pub id: u32,
    pub name: String,
    /// Travel speed between anchors, m/s.
    pub speed_mps: f64,
    pub anchors: BTreeMap<LocationCategory, Anchor>,
    pub schedule: Vec<ScheduleEntry>,
    pub tolerance: ToleranceParams,
    /// Per-slot Gaussian jitter on `q_a5`, Mb/s.
    pub tolerance_noise_std: f64,
}

impl Persona {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidPersona { id: self.id, reason };
        if self.schedule.is_empty() {
            return Err(Error::EmptySchedule(self.id));
        }
        if !(self.speed_mps.is_finite() && self.speed_mps >= 0.0) {
            return Err(bad(format!("speed {} must be >= 0", self.speed_mps)));
        }
        if !(self.tolerance_noise_std.is_finite() && self.tolerance_noise_std >= 0.0) {
            return Err(bad("tolerance_noise_std must be >= 0".into()));
        }
        let mut expected_start = 0.0;
        for entry in &self.schedule {
            if entry.start_h != expected_start || entry.end_h <= entry.start_h {
                return Err(bad(format!(
                    "schedule windows must be contiguous from 0h, found [{}, {})",
                    entry.start_h, entry.end_h
                )));
            }
            expected_start = entry.end_h;
            if !self.anchors.contains_key(&entry.location) {
                return Err(bad(format!("no anchor for location {}", entry.location)));
            }
            let total: f64 = entry.apps.values().sum();
            if entry.apps.values().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(bad(format!("app mix of window starting {}h must sum to 1", entry.start_h)));
            }
            if entry.location == LocationCategory::Commute
                && self.schedule.iter().all(|e| e.location == LocationCategory::Commute)
            {
                return Err(bad("a schedule cannot consist only of commute windows".into()));
            }
        }
        if expected_start != 24.0 {
            return Err(bad(format!("schedule ends at {expected_start}h, expected 24h")));
        }
        for (loc, a) in &self.anchors {
            if !(a.radius_m.is_finite() && a.radius_m >= 0.0) {
                return Err(bad(format!("anchor radius for {loc} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn schedule_index(&self, time_of_day_s: f64) -> usize {
        let hour = time_of_day_s.rem_euclid(SECONDS_PER_DAY) / 3600.0;
        self.schedule
            .iter()
            .position(|e| hour >= e.start_h && hour < e.end_h)
            .unwrap_or(self.schedule.len() - 1)
    }

    /// Applications this persona can ever use.
    pub fn applications(&self) -> Vec<Application> {
        let mut apps: Vec<Application> = self
            .schedule
            .iter()
            .flat_map(|e| e.apps.iter().filter(|(_, p)| **p > 0.0).map(|(a, _)| *a))
            .collect();
        apps.sort();
        apps.dedup();
        apps
    }
}

pub fn find_persona(personas: &[Persona], id: u32) -> Result<&Persona> {
    personas.iter().find(|p| p.id == id).ok_or(Error::UnknownPersona(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for app in Application::ALL {
            assert_eq!(app.name().parse::<Application>().unwrap(), *app);
        }
        for loc in LocationCategory::ALL {
            assert_eq!(loc.name().parse::<LocationCategory>().unwrap(), *loc);
        }
        assert!("tv".parse::<Application>().is_err());
    }

    #[test]
    fn day_phases() {
        assert_eq!(DayPhase::of(0.0), DayPhase::Night);
        assert_eq!(DayPhase::of(6.0 * 3600.0 - 1.0), DayPhase::Night);
        assert_eq!(DayPhase::of(6.0 * 3600.0), DayPhase::Morning);
        assert_eq!(DayPhase::of(12.0 * 3600.0), DayPhase::Midday);
        assert_eq!(DayPhase::of(23.9 * 3600.0), DayPhase::Late);
        assert_eq!(DayPhase::of(SECONDS_PER_DAY + 60.0), DayPhase::Night);
    }

    #[test]
    fn demand_lookup() {
        let demands = default_demands();
        assert_eq!(demands.application_demand(Application::Video).unwrap(), 5.0);
        assert_eq!(demands.application_demand(Application::Voice).unwrap(), 0.1);
        assert_eq!(
            demands.application_demand(Application::Video).unwrap(),
            demands.application_demand(Application::Video).unwrap()
        );
        let partial = DemandTable::new([(Application::Voice, 0.1)].into_iter().collect()).unwrap();
        assert!(matches!(
            partial.application_demand(Application::Gaming),
            Err(Error::UnknownApplication(Application::Gaming))
        ));
        assert!(DemandTable::new([(Application::Voice, 0.0)].into_iter().collect()).is_err());
    }

    #[test]
    fn default_personas_are_valid() {
        let personas = default_personas();
        assert_eq!(personas.len(), 4);
        for p in &personas {
            p.validate().unwrap();
        }
    }

    #[test]
    fn tightness_overrides_and_clamps() {
        let mut t = ToleranceParams {
            base: 0.9,
            ..Default::default()
        };
        t.location.insert(LocationCategory::Work, 0.5);
        assert_eq!(t.tightness(LocationCategory::Work, Application::Video, DayPhase::Night), 1.0);
        t.overrides.push(ToleranceOverride {
            location: LocationCategory::Work,
            application: Application::Video,
            phase: DayPhase::Night,
            tightness: 0.25,
        });
        assert_eq!(t.tightness(LocationCategory::Work, Application::Video, DayPhase::Night), 0.25);
        assert_eq!(t.tightness(LocationCategory::Home, Application::Video, DayPhase::Night), 0.9);
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let mut p = default_personas().remove(0);
        p.schedule.clear();
        assert!(matches!(p.validate(), Err(Error::EmptySchedule(_))));

        let mut p = default_personas().remove(0);
        p.schedule.pop();
        assert!(p.validate().is_err());

        let mut p = default_personas().remove(0);
        p.schedule[0].apps.values_mut().for_each(|v| *v *= 0.5);
        assert!(p.validate().is_err());
    }
}
