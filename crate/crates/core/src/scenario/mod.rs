//! Scenario files and detection-log ingestion.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "name": "optional label",
//!   "materials": [{"id": 1, "name": "plastic"}],
//!   "classes": [{"id": 1, "name": "glucose meter"}],
//!   "compositions": [
//!     {"class": 1, "masses": [1.0]},
//!     {"class": 2, "masses": {"plastic": 0.25}}
//!   ],
//!   "units": [
//!     {"id": 1, "location": {"x": 0, "y": 0, "lat": 45.06, "lon": 7.66},
//!      "pulses": [{"class": 1, "start_s": 20, "end_s": 100}]}
//!   ],
//!   "confusion": {"matrix": [[0.9, 0.1], [0.2, 0.8]], "seed": 7},
//!   "export": {"t0_s": 0, "t1_s": 150, "step_s": 1}
//! }
//! ```
//!
//! `masses` is either a full positional list (one entry per material, in id
//! order) or an object keyed by material name; unlisted materials get 0 kg.
//! Times are decimal seconds with at most six fractional digits, and each
//! window must last an even number of microseconds.

mod locate;
mod log;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::locate::{line_of, JsonPath};
pub use self::log::{ingest_detection_log, DetectionRecord, LogIngest, LogLineError};

use crate::aggregator::Network;
use crate::composition::{ClassId, CompositionRegistry, MassInput, Material, ObjectClass};
use crate::signal::{RectPulse, Time};
use crate::unit::{apply_confusion, ConfusionModel, GeoTag, Location, UnitId, VisionUnit};

/// The two-unit, three-material, two-class study network.
pub const STUDY_SCENARIO: &str = include_str!("../../scenarios/two_unit_study.json");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("{path}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid { path: String, line: Option<usize>, message: String },
}

impl ScenarioError {
    fn invalid(path: &JsonPath, message: impl ToString) -> Self {
        ScenarioError::Invalid { path: path.to_string(), line: None, message: message.to_string() }
    }

    fn with_source(self, text: &str, path: &JsonPath) -> Self {
        match self {
            ScenarioError::Invalid { path: p, message, .. } => ScenarioError::Invalid {
                path: p,
                line: line_of(text, path),
                message,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MassesSpec {
    Positional(Vec<f64>),
    Named(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionSpec {
    pub class: ClassId,
    pub masses: MassesSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LocationSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub class: ClassId,
    pub start_s: Time,
    pub end_s: Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSpec {
    pub id: UnitId,
    #[serde(default)]
    pub location: LocationSpec,
    #[serde(default)]
    pub pulses: Vec<PulseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionSpec {
    pub matrix: Vec<Vec<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExportOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0_s: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_s: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_s: Option<Time>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub materials: Vec<Material>,
    pub classes: Vec<ObjectClass>,
    pub compositions: Vec<CompositionSpec>,
    #[serde(default)]
    pub units: Vec<UnitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export: Option<ExportOptions>,
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scn: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Schema {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scn.check().map_err(|(err, path)| err.with_source(text, &path))?;
    Ok(scn)
}

pub fn build_network(scn: &Scenario) -> Result<Network, ScenarioError> {
    scn.check().map_err(|(err, _)| err)
}

type Checked<T> = Result<T, (ScenarioError, JsonPath)>;

fn fail<T>(path: JsonPath, message: impl ToString) -> Checked<T> {
    Err((ScenarioError::invalid(&path, message), path))
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        parse_scenario(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario is always serializable")
    }

    pub fn s(&self) -> usize {
        self.units.len()
    }

    pub fn q(&self) -> usize {
        self.classes.len()
    }

    pub fn psi(&self) -> usize {
        self.materials.len()
    }

    /// Appends logged detections to the matching units' pulse lists.
    pub fn add_detections(&mut self, records: &[DetectionRecord]) -> Result<(), ScenarioError> {
        for r in records {
            let unit = self
                .units
                .iter_mut()
                .find(|u| u.id == r.unit)
                .ok_or_else(|| ScenarioError::invalid(&JsonPath::root().key("units"), format!("detection log names unknown unit {}", r.unit)))?;
            unit.pulses.push(PulseSpec { class: r.class, start_s: r.start, end_s: r.end });
        }
        Ok(())
    }

    fn registry(&self) -> Checked<CompositionRegistry> {
        let root = JsonPath::root();
        let mut reg = CompositionRegistry::new(self.materials.clone(), self.classes.clone()).or_else(|e| {
            let key = if e.to_string().contains("class") { "classes" } else { "materials" };
            fail(root.key(key), e)
        })?;
        for (k, comp) in self.compositions.iter().enumerate() {
            let here = root.key("compositions").index(k);
            if !reg.has_class(comp.class) {
                return fail(here.key("class"), format!("unknown class id {}", comp.class));
            }
            let input = match &comp.masses {
                MassesSpec::Positional(v) => MassInput::Positional(v.clone()),
                MassesSpec::Named(map) => {
                    let mut pairs = Vec::with_capacity(map.len());
                    for (name, &mass) in map {
                        let id = reg.material_by_name(name).or_else(|| {
                            name.parse().ok().map(crate::composition::MaterialId).filter(|j| reg.has_material(*j))
                        });
                        match id {
                            Some(j) => pairs.push((j, mass)),
                            None => return fail(here.key("masses").key(name), format!("unknown material `{name}`")),
                        }
                    }
                    MassInput::Pairs(pairs)
                }
            };
            reg.register_class(comp.class, input).or_else(|e| fail(here.key("masses"), e))?;
        }
        reg.ensure_complete().or_else(|e| fail(root.key("compositions"), e))?;
        Ok(reg)
    }

    fn check(&self) -> Checked<Network> {
        let root = JsonPath::root();
        let reg = self.registry()?;
        let mut units = Vec::with_capacity(self.units.len());
        let mut seen = BTreeMap::new();
        for (k, spec) in self.units.iter().enumerate() {
            let here = root.key("units").index(k);
            if let Some(prev) = seen.insert(spec.id, k) {
                return fail(here.key("id"), format!("duplicate unit id {} (also units[{prev}])", spec.id));
            }
            let loc = &spec.location;
            let geo = match (loc.lat, loc.lon) {
                (Some(lat), Some(lon)) => Some(GeoTag { lat, lon }),
                (None, None) => None,
                _ => return fail(here.key("location"), "lat and lon must be given together"),
            };
            let location = Location::new(loc.x, loc.y, geo).or_else(|e| fail(here.key("location"), e))?;
            let mut unit = VisionUnit::new(spec.id, location);
            for (p, pulse) in spec.pulses.iter().enumerate() {
                let at = here.key("pulses").index(p);
                if reg.composition(pulse.class).is_none() {
                    return fail(at.key("class"), format!("unknown class id {}", pulse.class));
                }
                let rp = RectPulse::from_window(pulse.start_s, pulse.end_s).or_else(|e| fail(at.key("end_s"), e))?;
                unit.add_pulse(pulse.class, rp);
            }
            units.push(unit);
        }
        if let Some(c) = &self.confusion {
            let here = root.key("confusion");
            let cm = ConfusionModel::new(c.matrix.clone(), c.seed).or_else(|e| fail(here.key("matrix"), e))?;
            if cm.q() != reg.q() {
                return fail(here.key("matrix"), format!("matrix has {} rows but there are {} classes", cm.q(), reg.q()));
            }
            units = units
                .iter()
                .map(|u| apply_confusion(u, &cm))
                .collect::<Result<_, _>>()
                .or_else(|e| fail(here.clone(), e))?;
        }
        if let Some(ex) = &self.export {
            let here = root.key("export");
            if let Some(step) = ex.step_s {
                if step <= Time::ZERO {
                    return fail(here.key("step_s"), "sample step must be positive");
                }
            }
            if let (Some(t0), Some(t1)) = (ex.t0_s, ex.t1_s) {
                if t0 > t1 {
                    return fail(here.key("t1_s"), "t1_s must not precede t0_s");
                }
            }
        }
        Network::new(units, reg).or_else(|e| fail(root.key("units"), e))
    }
}

/// Classes referenced by pulses, for reporting.
pub fn scheduled_classes(scn: &Scenario) -> Vec<ClassId> {
    let mut v: Vec<ClassId> = scn.units.iter().flat_map(|u| u.pulses.iter().map(|p| p.class)).collect();
    v.sort_unstable();
    v.dedup();
    v
}
