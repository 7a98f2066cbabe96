//! Plain-text model file.
//!
//! ```text
//! format zotnet-model 1
//! params eta=0.1 drift_threshold=50 temperature=0.02 prior_weight=1
//! counters update_count=0 drift_counter=0 reset_count=0
//! demand application=video mbps=5
//! class id=0 samples=7200 prior=0,0.5,1,1.5,2 centroid=<20 values>
//! bucket persona=0 location=home application=video phase=night samples=310 drift=0 adequate=<5> lower=<5> upper=<5>
//! end
//! ```
//!
//! Lists are comma separated, `-` marks an unknown bracket. Numbers use the
//! shortest representation that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::features::DIM;
use super::model::{Bucket, BucketKey, LearningParams, PersonaClass, TwoPhaseModel};
use crate::error::{Error, Result};
use crate::zot::NUM_LEVELS;

pub const FORMAT_HEADER: &str = "format zotnet-model 1";

fn list(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn option_list(values: &[Option<f64>]) -> String {
    values
        .iter()
        .map(|v| v.map_or("-".to_string(), |x| x.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn to_text(model: &TwoPhaseModel) -> String {
    let mut out = String::new();
    let p = &model.params;
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(
        out,
        "params eta={} drift_threshold={} temperature={} prior_weight={}",
        p.eta, p.drift_threshold, p.temperature, p.prior_weight
    )
    .unwrap();
    writeln!(
        out,
        "counters update_count={} drift_counter={} reset_count={}",
        model.update_count, model.drift_counter, model.reset_count
    )
    .unwrap();
    for (app, mbps) in &model.demands {
        writeln!(out, "demand application={app} mbps={mbps}").unwrap();
    }
    for c in &model.classes {
        writeln!(
            out,
            "class id={} samples={} prior={} centroid={}",
            c.id,
            c.samples,
            list(&c.prior),
            list(&c.centroid)
        )
        .unwrap();
    }
    for (k, b) in &model.buckets {
        writeln!(
            out,
            "bucket persona={} location={} application={} phase={} samples={} drift={} adequate={} lower={} upper={}",
            k.persona,
            k.location,
            k.application,
            k.phase,
            b.samples,
            b.drift,
            list(&b.adequate),
            option_list(&b.lower),
            option_list(&b.upper)
        )
        .unwrap();
    }
    out.push_str("end\n");
    out
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(line: usize, tokens: &[&'a str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in tokens {
            let (k, v) = t.split_once('=').ok_or_else(|| bad(line, format!("expected key=value, got `{t}`")))?;
            if map.insert(k, v).is_some() {
                return Err(bad(line, format!("duplicate field `{k}`")));
            }
        }
        Ok(Fields { line, map })
    }

    fn raw(&self, key: &str) -> Result<&'a str> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| bad(self.line, format!("missing field `{key}`")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| bad(self.line, format!("cannot parse `{key}` from `{raw}`")))
    }

    fn array<const N: usize>(&self, key: &str) -> Result<[f64; N]> {
        let mut out = [0.0; N];
        for (slot, v) in self.options::<N>(key)?.into_iter().zip(out.iter_mut()) {
            *v = slot.ok_or_else(|| bad(self.line, format!("`{key}` may not contain `-`")))?;
        }
        Ok(out)
    }

    fn options<const N: usize>(&self, key: &str) -> Result<[Option<f64>; N]> {
        let parts: Vec<&str> = self.raw(key)?.split(',').collect();
        if parts.len() != N {
            return Err(bad(self.line, format!("`{key}` needs {N} values, got {}", parts.len())));
        }
        let mut out = [None; N];
        for (p, o) in parts.iter().zip(out.iter_mut()) {
            if *p != "-" {
                *o = Some(p.parse().map_err(|_| bad(self.line, format!("bad number `{p}` in `{key}`")))?);
            }
        }
        Ok(out)
    }

    fn finish(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(bad(self.line, format!("unknown field `{k}`"))),
            None => Ok(()),
        }
    }
}

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::ModelFormat {
        line,
        reason: reason.into(),
    }
}

pub fn from_text(text: &str) -> Result<TwoPhaseModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == FORMAT_HEADER => {}
        Some((n, l)) => return Err(bad(n, format!("expected `{FORMAT_HEADER}`, got `{l}`"))),
        None => return Err(bad(1, "empty model file")),
    }
    let mut model = TwoPhaseModel::default();
    let mut seen_params = false;
    let mut ended = false;
    for (n, line) in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let f = Fields::parse(n, &tokens[1..])?;
        match tokens[0] {
            "params" => {
                f.finish(&["eta", "drift_threshold", "temperature", "prior_weight"])?;
                model.params = LearningParams {
                    eta: f.get("eta")?,
                    drift_threshold: f.get("drift_threshold")?,
                    temperature: f.get("temperature")?,
                    prior_weight: f.get("prior_weight")?,
                };
                model.params.validate().map_err(|e| bad(n, e.to_string()))?;
                seen_params = true;
            }
            "counters" => {
                f.finish(&["update_count", "drift_counter", "reset_count"])?;
                model.update_count = f.get("update_count")?;
                model.drift_counter = f.get("drift_counter")?;
                model.reset_count = f.get("reset_count")?;
            }
            "demand" => {
                f.finish(&["application", "mbps"])?;
                model.demands.insert(f.get("application")?, f.get("mbps")?);
            }
            "class" => {
                f.finish(&["id", "samples", "prior", "centroid"])?;
                model.classes.push(PersonaClass {
                    id: f.get("id")?,
                    samples: f.get("samples")?,
                    prior: f.array::<NUM_LEVELS>("prior")?,
                    centroid: f.array::<DIM>("centroid")?,
                });
            }
            "bucket" => {
                f.finish(&[
                    "persona", "location", "application", "phase", "samples", "drift", "adequate", "lower", "upper",
                ])?;
                let key = BucketKey {
                    persona: f.get("persona")?,
                    location: f.get("location")?,
                    application: f.get("application")?,
                    phase: f.get("phase")?,
                };
                if model.class_index(key.persona).is_none() {
                    return Err(bad(n, format!("bucket for unknown persona {}", key.persona)));
                }
                let bucket = Bucket {
                    adequate: f.array("adequate")?,
                    lower: f.options("lower")?,
                    upper: f.options("upper")?,
                    samples: f.get("samples")?,
                    drift: f.get("drift")?,
                };
                if model.buckets.insert(key, bucket).is_some() {
                    return Err(bad(n, "duplicate bucket"));
                }
            }
            "end" => {
                ended = true;
                break;
            }
            other => return Err(bad(n, format!("unknown record `{other}`"))),
        }
    }
    if !ended {
        return Err(bad(text.lines().count(), "missing `end`"));
    }
    if let Some((n, _)) = lines.next() {
        return Err(bad(n, "content after `end`"));
    }
    if !seen_params {
        return Err(bad(1, "missing `params` record"));
    }
    Ok(model)
}

pub fn write_model(path: &Path, model: &TwoPhaseModel) -> Result<()> {
    fs::write(path, to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<TwoPhaseModel> {
    from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
