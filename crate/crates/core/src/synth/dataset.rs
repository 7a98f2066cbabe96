use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{generate_trace, ground_truth_profile, Application, ContextRecord, DemandTable, GeneratorConfig, LocationCategory, Persona};
use crate::channel::Geometry;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::zot::{satisfaction_of, SatisfactionLevel};

/// How development `qos_p` values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "fraction")]
pub enum QosSampling {
    /// Uniform over `[0, demand]`.
    Uniform,
    /// A fixed fraction of the demand.
    DemandFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub user_id: u32,
    /// Only present in development data.
    pub persona_id: Option<u32>,
    pub context: ContextRecord,
    pub qos_p: f64,
    pub satisfaction: SatisfactionLevel,
}

pub struct DatasetSpec<'a> {
    pub personas: &'a [Persona],
    pub demands: &'a DemandTable,
    pub generator: &'a GeneratorConfig,
    pub geometry: Geometry,
    pub users_per_persona: u32,
    pub duration_s: f64,
    pub ts_len: f64,
    pub seed: u64,
    pub sampling: QosSampling,
}

impl DatasetSpec<'_> {
    /// Seed of development user `user_id`; feeds trace, labels and sampling.
    pub fn user_seed(&self, user_id: u32) -> u64 {
        rng::combine(self.seed, user_id as u64)
    }

    fn user(&self, persona: &Persona, user_id: u32) -> Result<Vec<LabeledSample>> {
        let seed = self.user_seed(user_id);
        let trace = generate_trace(persona, &self.geometry, self.generator, self.duration_s, self.ts_len, seed)?;
        let mut qos_rng = rng::stream(seed, 0, Purpose::QosSampling);
        trace
            .into_iter()
            .map(|context| {
                let profile = ground_truth_profile(persona, &context, self.demands, self.generator, seed)?;
                let demand = profile.qos_demand();
                let qos_p = match self.sampling {
                    QosSampling::Uniform => qos_rng.random_range(0.0..=demand),
                    QosSampling::DemandFraction(f) => f * demand,
                };
                Ok(LabeledSample {
                    user_id,
                    persona_id: Some(persona.id),
                    context,
                    qos_p,
                    satisfaction: satisfaction_of(&profile, qos_p),
                })
            })
            .collect()
    }
}

/// Labelled development samples for `users_per_persona` users of every
/// persona, ordered by user then slot. User `u` of persona index `i` gets id
/// `i * users_per_persona + u`. Users are generated on separate threads.
pub fn emit_dataset(spec: &DatasetSpec<'_>) -> Result<Vec<LabeledSample>> {
    if spec.personas.is_empty() {
        return Err(Error::Empty("persona list"));
    }
    for p in spec.personas {
        p.validate()?;
    }
    let jobs: Vec<(&Persona, u32)> = spec
        .personas
        .iter()
        .enumerate()
        .flat_map(|(i, p)| (0..spec.users_per_persona).map(move |u| (p, i as u32 * spec.users_per_persona + u)))
        .collect();
    let per_user: Vec<Result<Vec<LabeledSample>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(persona, user_id)| scope.spawn(move || spec.user(persona, user_id)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("dataset worker panicked"))
            .collect()
    });
    let mut samples = Vec::new();
    for user in per_user {
        samples.extend(user?);
    }
    Ok(samples)
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    user_id: u32,
    persona_id: Option<u32>,
    ts_index: u64,
    time_of_day: f64,
    cell_row: u32,
    cell_col: u32,
    x: f64,
    y: f64,
    location_category: LocationCategory,
    speed: f64,
    application: Application,
    qos_p_mbps: f64,
    satisfaction: u8,
}

impl From<&LabeledSample> for DatasetRow {
    fn from(s: &LabeledSample) -> Self {
        let c = &s.context;
        DatasetRow {
            user_id: s.user_id,
            persona_id: s.persona_id,
            ts_index: c.ts_index,
            time_of_day: c.time_of_day,
            cell_row: c.cell.0,
            cell_col: c.cell.1,
            x: c.position.0,
            y: c.position.1,
            location_category: c.location,
            speed: c.speed,
            application: c.application,
            qos_p_mbps: s.qos_p,
            satisfaction: s.satisfaction.value(),
        }
    }
}

impl TryFrom<DatasetRow> for LabeledSample {
    type Error = Error;

    fn try_from(r: DatasetRow) -> Result<Self> {
        Ok(LabeledSample {
            user_id: r.user_id,
            persona_id: r.persona_id,
            context: ContextRecord {
                ts_index: r.ts_index,
                time_of_day: r.time_of_day,
                cell: (r.cell_row, r.cell_col),
                position: (r.x, r.y),
                location: r.location_category,
                speed: r.speed,
                application: r.application,
            },
            qos_p: r.qos_p_mbps,
            satisfaction: SatisfactionLevel::new(r.satisfaction)?,
        })
    }
}

/// Writes the dataset CSV (header row first, one row per user and slot).
pub fn write_dataset_csv(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for s in samples {
        w.serialize(DatasetRow::from(s))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<LabeledSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize::<DatasetRow>()
        .map(|row| LabeledSample::try_from(row?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{default_demands, default_personas};

    fn spec<'a>(personas: &'a [Persona], demands: &'a DemandTable, gen: &'a GeneratorConfig) -> DatasetSpec<'a> {
        DatasetSpec {
            personas,
            demands,
            generator: gen,
            geometry: Geometry::new(500.0, 100),
            users_per_persona: 1,
            duration_s: 3600.0,
            ts_len: 1.0,
            seed: 5,
            sampling: QosSampling::Uniform,
        }
    }

    #[test]
    fn row_count_and_oracle_labels() {
        let personas = default_personas();
        let demands = default_demands();
        let gen = GeneratorConfig::default();
        let spec = spec(&personas, &demands, &gen);
        let samples = emit_dataset(&spec).unwrap();
        assert_eq!(samples.len(), 4 * 3600);
        for s in &samples {
            let persona = &personas[s.persona_id.unwrap() as usize];
            let profile = ground_truth_profile(persona, &s.context, &demands, &gen, spec.user_seed(s.user_id)).unwrap();
            assert_eq!(satisfaction_of(&profile, s.qos_p), s.satisfaction);
            assert!(s.qos_p >= 0.0 && s.qos_p <= profile.qos_demand());
        }
    }

    #[test]
    fn demand_rows_are_level_five() {
        let personas = default_personas();
        let demands = default_demands();
        let gen = GeneratorConfig::default();
        let mut spec = spec(&personas, &demands, &gen);
        spec.sampling = QosSampling::DemandFraction(1.0);
        spec.duration_s = 600.0;
        assert!(emit_dataset(&spec)
            .unwrap()
            .iter()
            .all(|s| s.satisfaction == SatisfactionLevel::MAX));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let personas = default_personas();
        let demands = default_demands();
        let gen = GeneratorConfig::default();
        let mut spec = spec(&personas, &demands, &gen);
        spec.duration_s = 120.0;
        let mut samples = emit_dataset(&spec).unwrap();
        samples[0].persona_id = None;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset_csv(&path, &samples).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "user_id,persona_id,ts_index,time_of_day,cell_row,cell_col,x,y,location_category,speed,application,qos_p_mbps,satisfaction"
        );
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), samples.len() + 1);
        assert_eq!(read_dataset_csv(&path).unwrap(), samples);
    }

    #[test]
    fn unwritable_path_errors() {
        let err = write_dataset_csv(Path::new("/nonexistent-dir/x/data.csv"), &[]).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn no_personas_is_an_error() {
        let demands = default_demands();
        let gen = GeneratorConfig::default();
        assert!(emit_dataset(&spec(&[], &demands, &gen)).is_err());
    }
}
