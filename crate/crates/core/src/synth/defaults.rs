use std::collections::BTreeMap;

use super::{
    Anchor, Application, DayPhase, DemandTable, LocationCategory, Persona, ScheduleEntry, ToleranceParams,
};

use Application::*;
use LocationCategory::*;

pub fn default_demands() -> DemandTable {
    DemandTable::new(
        [
            (Video, 5.0),
            (Voice, 0.1),
            (Browsing, 1.5),
            (Gaming, 2.5),
            (Music, 0.3),
            (VideoCall, 2.0),
            (Social, 1.0),
            (Download, 4.0),
        ]
        .into_iter()
        .collect(),
    )
    .expect("default demands are positive")
}

fn window(start_h: f64, end_h: f64, location: LocationCategory, apps: &[(Application, f64)]) -> ScheduleEntry {
    ScheduleEntry {
        start_h,
        end_h,
        location,
        apps: apps.iter().copied().collect(),
    }
}

fn anchors(list: &[(LocationCategory, u32, u32, f64)]) -> BTreeMap<LocationCategory, Anchor> {
    list.iter()
        .map(|&(loc, row, col, radius_m)| (loc, Anchor { row, col, radius_m }))
        .collect()
}

fn tolerance(
    base: f64,
    location: &[(LocationCategory, f64)],
    application: &[(Application, f64)],
    phase: &[(DayPhase, f64)],
) -> ToleranceParams {
    ToleranceParams {
        base,
        location: location.iter().copied().collect(),
        application: application.iter().copied().collect(),
        phase: phase.iter().copied().collect(),
        overrides: Vec::new(),
    }
}

/// Four personas with disjoint application sets, different daily rhythms and
/// different tolerance structure. Anchors assume the default 100 x 100 grid
/// over a 1 km square cell.
pub fn default_personas() -> Vec<Persona> {
    vec![
        Persona {
            id: 0,
            name: "office_commuter".into(),
            speed_mps: 1.4,
            anchors: anchors(&[(Home, 62, 44, 40.0), (Work, 38, 66, 40.0), (Commute, 50, 55, 120.0), (Other, 70, 70, 30.0)]),
            schedule: vec![
                window(0.0, 7.0, Home, &[(Video, 0.3), (Browsing, 0.7)]),
                window(7.0, 8.0, Commute, &[(Video, 0.4), (Browsing, 0.6)]),
                window(8.0, 12.0, Work, &[(Video, 0.2), (Browsing, 0.8)]),
                window(12.0, 13.0, Other, &[(Video, 0.5), (Browsing, 0.5)]),
                window(13.0, 17.0, Work, &[(Video, 0.2), (Browsing, 0.8)]),
                window(17.0, 18.0, Commute, &[(Video, 0.5), (Browsing, 0.5)]),
                window(18.0, 24.0, Home, &[(Video, 0.7), (Browsing, 0.3)]),
            ],
            tolerance: tolerance(
                0.45,
                &[(Home, -0.35), (Work, 0.35), (Commute, -0.1), (Other, 0.1)],
                &[(Browsing, -0.1)],
                &[(DayPhase::Night, -0.05), (DayPhase::Late, -0.1)],
            ),
            tolerance_noise_std: 0.05,
        },
        Persona {
            id: 1,
            name: "field_driver".into(),
            speed_mps: 12.0,
            anchors: anchors(&[(Home, 35, 30, 40.0), (Work, 68, 72, 40.0), (Commute, 50, 50, 180.0), (Other, 25, 65, 40.0)]),
            schedule: vec![
                window(0.0, 6.0, Home, &[(Voice, 0.6), (VideoCall, 0.4)]),
                window(6.0, 7.0, Commute, &[(Voice, 0.7), (VideoCall, 0.3)]),
                window(7.0, 15.0, Work, &[(Voice, 0.5), (VideoCall, 0.5)]),
                window(15.0, 16.0, Commute, &[(Voice, 0.7), (VideoCall, 0.3)]),
                window(16.0, 20.0, Other, &[(Voice, 0.4), (VideoCall, 0.6)]),
                window(20.0, 24.0, Home, &[(Voice, 0.3), (VideoCall, 0.7)]),
            ],
            tolerance: tolerance(
                0.65,
                &[(Home, -0.3), (Work, 0.2), (Commute, 0.3)],
                &[(Voice, -0.3), (VideoCall, 0.2)],
                &[(DayPhase::Evening, -0.1)],
            ),
            tolerance_noise_std: 0.05,
        },
        Persona {
            id: 2,
            name: "student_gamer".into(),
            speed_mps: 5.0,
            anchors: anchors(&[(Home, 45, 58, 40.0), (Work, 58, 35, 40.0), (Commute, 52, 46, 90.0), (Other, 40, 40, 30.0)]),
            schedule: vec![
                window(0.0, 9.0, Home, &[(Gaming, 0.6), (Music, 0.4)]),
                window(9.0, 10.0, Commute, &[(Gaming, 0.2), (Music, 0.8)]),
                window(10.0, 16.0, Work, &[(Gaming, 0.3), (Music, 0.7)]),
                window(16.0, 17.0, Commute, &[(Gaming, 0.2), (Music, 0.8)]),
                window(17.0, 24.0, Home, &[(Gaming, 0.8), (Music, 0.2)]),
            ],
            tolerance: tolerance(
                0.5,
                &[(Home, -0.1), (Commute, -0.2)],
                &[(Gaming, 0.4), (Music, -0.3)],
                &[(DayPhase::Evening, 0.1)],
            ),
            tolerance_noise_std: 0.05,
        },
        Persona {
            id: 3,
            name: "night_shift".into(),
            speed_mps: 1.4,
            anchors: anchors(&[(Home, 56, 60, 40.0), (Work, 44, 36, 40.0), (Commute, 50, 48, 110.0), (Other, 64, 52, 30.0)]),
            schedule: vec![
                window(0.0, 7.0, Work, &[(Download, 0.5), (Social, 0.5)]),
                window(7.0, 8.0, Commute, &[(Download, 0.2), (Social, 0.8)]),
                window(8.0, 18.0, Home, &[(Download, 0.6), (Social, 0.4)]),
                window(18.0, 21.0, Other, &[(Download, 0.3), (Social, 0.7)]),
                window(21.0, 22.0, Commute, &[(Download, 0.2), (Social, 0.8)]),
                window(22.0, 24.0, Work, &[(Download, 0.5), (Social, 0.5)]),
            ],
            tolerance: tolerance(
                0.35,
                &[(Work, 0.25), (Home, -0.1)],
                &[(Download, -0.3), (Social, 0.1)],
                &[(DayPhase::Night, 0.1)],
            ),
            tolerance_noise_std: 0.05,
        },
    ]
}
