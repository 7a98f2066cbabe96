//! Fixed-layout feature encoding of a context record.
//!
//! | range    | content                                  |
//! |----------|------------------------------------------|
//! | 0..2     | time of day as `(sin, cos)` of the daily angle |
//! | 2..7     | day phase one-hot                        |
//! | 7..11    | location category one-hot                |
//! | 11       | speed / 30 m/s, clamped to 1             |
//! | 12..20   | application one-hot                      |

use std::f64::consts::TAU;

use crate::synth::{Application, ContextRecord, DayPhase, LocationCategory, SECONDS_PER_DAY};

pub const TIME: usize = 0;
pub const PHASE: usize = 2;
pub const LOCATION: usize = PHASE + 5;
pub const SPEED: usize = LOCATION + 4;
pub const APPLICATION: usize = SPEED + 1;
pub const DIM: usize = APPLICATION + 8;

/// Speed that maps to a normalised value of 1.
pub const SPEED_SCALE_MPS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; DIM]);

fn argmax(slice: &[f64]) -> usize {
    slice
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn phase(&self) -> DayPhase {
        DayPhase::ALL[argmax(&self.0[PHASE..LOCATION])]
    }

    pub fn location(&self) -> LocationCategory {
        LocationCategory::ALL[argmax(&self.0[LOCATION..SPEED])]
    }

    pub fn application(&self) -> Application {
        Application::ALL[argmax(&self.0[APPLICATION..DIM])]
    }

    pub fn squared_distance(&self, other: &[f64; DIM]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

pub fn preprocess(record: &ContextRecord) -> FeatureVector {
    let mut v = [0.0; DIM];
    let angle = TAU * record.time_of_day.rem_euclid(SECONDS_PER_DAY) / SECONDS_PER_DAY;
    v[TIME] = angle.sin();
    v[TIME + 1] = angle.cos();
    v[PHASE + record.phase().index()] = 1.0;
    v[LOCATION + record.location.index()] = 1.0;
    v[SPEED] = (record.speed / SPEED_SCALE_MPS).clamp(0.0, 1.0);
    v[APPLICATION + record.application.index()] = 1.0;
    FeatureVector(v)
}
