//! A single networked vision unit and its material stock signal.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{ClassId, CompositionRegistry};
use crate::signal::{pulse_breakpoints, pulse_value, PulseLevel, RectPulse, Time};

/// Row sums of a confusion matrix must be within this of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("unit {unit} schedules class {class}, which has no registered composition")]
    UnregisteredClass { unit: u32, class: u32 },
    #[error("location coordinate `{0}` is not valid")]
    InvalidLocation(&'static str),
    #[error("confusion matrix must be square with one row per class ({expected}), got {rows}x{cols}")]
    MatrixShape { expected: usize, rows: usize, cols: usize },
    #[error("confusion matrix entry ({row},{col}) = {value} is outside [0, 1]")]
    MatrixEntry { row: usize, col: usize, value: f64 },
    #[error("confusion matrix row {row} sums to {sum}, not 1")]
    NotRowStochastic { row: usize, sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTag {
    pub lat: f64,
    pub lon: f64,
}

/// Planar site coordinates in meters plus an optional GPS fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", flatten)]
    pub geo: Option<GeoTag>,
}

impl Location {
    pub fn new(x: f64, y: f64, geo: Option<GeoTag>) -> Result<Self, UnitError> {
        let loc = Location { x, y, geo };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<(), UnitError> {
        if !self.x.is_finite() {
            return Err(UnitError::InvalidLocation("x"));
        }
        if !self.y.is_finite() {
            return Err(UnitError::InvalidLocation("y"));
        }
        if let Some(g) = self.geo {
            if !(-90.0..=90.0).contains(&g.lat) {
                return Err(UnitError::InvalidLocation("lat"));
            }
            if !(-180.0..=180.0).contains(&g.lon) {
                return Err(UnitError::InvalidLocation("lon"));
            }
        }
        Ok(())
    }
}

impl Default for Location {
    fn default() -> Self {
        Location { x: 0.0, y: 0.0, geo: None }
    }
}

/// Detection windows per class. Same-class windows may overlap; their
/// levels add up.
pub type DetectionSchedule = BTreeMap<ClassId, Vec<RectPulse>>;

#[derive(Debug, Clone, PartialEq)]
pub struct VisionUnit {
    pub id: UnitId,
    pub location: Location,
    pub schedule: DetectionSchedule,
}

impl VisionUnit {
    pub fn new(id: UnitId, location: Location) -> Self {
        VisionUnit { id, location, schedule: DetectionSchedule::new() }
    }

    pub fn add_pulse(&mut self, class: ClassId, pulse: RectPulse) {
        self.schedule.entry(class).or_default().push(pulse);
    }

    pub fn pulses(&self) -> impl Iterator<Item = (ClassId, &RectPulse)> {
        self.schedule
            .iter()
            .flat_map(|(c, ps)| ps.iter().map(move |p| (*c, p)))
    }

    pub fn pulse_count(&self) -> usize {
        self.schedule.values().map(Vec::len).sum()
    }

    pub fn shifted(&self, by: Time) -> VisionUnit {
        VisionUnit {
            id: self.id,
            location: self.location,
            schedule: self
                .schedule
                .iter()
                .map(|(c, ps)| (*c, ps.iter().map(|p| p.shifted(by)).collect()))
                .collect(),
        }
    }

    pub fn check_classes(&self, reg: &CompositionRegistry) -> Result<(), UnitError> {
        for c in self.schedule.keys() {
            if reg.composition(*c).is_none() {
                return Err(UnitError::UnregisteredClass { unit: self.id.0, class: c.0 });
            }
        }
        Ok(())
    }

    /// Adds this unit's stock into `out` given a level for each pulse.
    ///
    /// Classes are visited in ascending id order, pulses in schedule order;
    /// every stock evaluation goes through here so that float sums are
    /// reproducible.
    pub(crate) fn accumulate_stock(
        &self,
        reg: &CompositionRegistry,
        level: impl Fn(&RectPulse) -> PulseLevel,
        out: &mut [f64],
    ) -> Result<(), UnitError> {
        for (c, pulses) in &self.schedule {
            let m = reg
                .composition(*c)
                .ok_or(UnitError::UnregisteredClass { unit: self.id.0, class: c.0 })?;
            let halves: u64 = pulses.iter().map(|p| level(p).halves() as u64).sum();
            if halves == 0 {
                continue;
            }
            let xi = halves as f64 * 0.5;
            for (acc, mass) in out.iter_mut().zip(m.as_slice()) {
                *acc += xi * mass;
            }
        }
        Ok(())
    }
}

/// Material masses seen by `u` at time `t`, one entry per material.
pub fn unit_stock(u: &VisionUnit, reg: &CompositionRegistry, t: Time) -> Result<Vec<f64>, UnitError> {
    let mut out = vec![0.0; reg.psi()];
    u.accumulate_stock(reg, |p| pulse_value(p, t), &mut out)?;
    Ok(out)
}

pub fn unit_breakpoints(u: &VisionUnit) -> Vec<Time> {
    let mut times: Vec<Time> = u.pulses().flat_map(|(_, p)| pulse_breakpoints(p)).collect();
    times.sort_unstable();
    times.dedup();
    times
}

/// Class-substitution probabilities for simulating a classifier that errs.
///
/// `matrix[true_class - 1][reported_class - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionModel {
    matrix: Vec<Vec<f64>>,
    seed: u64,
}

impl ConfusionModel {
    pub fn new(matrix: Vec<Vec<f64>>, seed: u64) -> Result<Self, UnitError> {
        let rows = matrix.len();
        for (r, row) in matrix.iter().enumerate() {
            if row.len() != rows {
                return Err(UnitError::MatrixShape { expected: rows, rows, cols: row.len() });
            }
            for (col, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(UnitError::MatrixEntry { row: r, col, value });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(UnitError::NotRowStochastic { row: r, sum });
            }
        }
        Ok(ConfusionModel { matrix, seed })
    }

    pub fn identity(q: usize, seed: u64) -> Self {
        let matrix = (0..q)
            .map(|r| (0..q).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        ConfusionModel { matrix, seed }
    }

    pub fn q(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn sample(&self, true_class: ClassId, draw: f64) -> ClassId {
        let row = &self.matrix[true_class.0 as usize - 1];
        let mut cumulative = 0.0;
        for (k, &p) in row.iter().enumerate() {
            cumulative += p;
            if p > 0.0 && draw < cumulative {
                return ClassId(k as u32 + 1);
            }
        }
        // Row sums slightly below 1 leave a sliver; it goes to the last
        // class with nonzero probability.
        let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(true_class.0 as usize - 1);
        ClassId(last as u32 + 1)
    }
}

/// Relabels every detection window of `u` by sampling from the confusion row
/// of its true class.
///
/// The generator is ChaCha8 seeded with the model seed on a stream selected
/// by the unit id, drawing once per pulse in (class, pulse index) order.
/// Pulse times are kept.
pub fn apply_confusion(u: &VisionUnit, cm: &ConfusionModel) -> Result<VisionUnit, UnitError> {
    let q = cm.q();
    for c in u.schedule.keys() {
        if c.0 == 0 || c.0 as usize > q {
            return Err(UnitError::MatrixShape { expected: c.0 as usize, rows: q, cols: q });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cm.seed);
    rng.set_stream(u.id.0 as u64);
    let mut out = VisionUnit::new(u.id, u.location);
    for (c, pulse) in u.pulses() {
        let draw: f64 = rng.gen();
        out.add_pulse(cm.sample(c, draw), *pulse);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{MassInput, Material, MaterialId, ObjectClass};

    fn s(v: i64) -> Time {
        Time::from_secs(v)
    }

    fn registry(q: u32) -> CompositionRegistry {
        let materials = (1..=3)
            .map(|i| Material { id: MaterialId(i), name: format!("m{i}") })
            .collect();
        let classes = (1..=q)
            .map(|i| ObjectClass { id: ClassId(i), name: format!("c{i}") })
            .collect();
        let mut reg = CompositionRegistry::new(materials, classes).unwrap();
        for c in 1..=q {
            reg.register_class(ClassId(c), MassInput::Positional(vec![1.0, 2.0, 3.0])).unwrap();
        }
        reg
    }

    fn study_unit_one() -> VisionUnit {
        let mut u = VisionUnit::new(UnitId(1), Location::default());
        u.add_pulse(ClassId(1), RectPulse::new(s(60), s(80)).unwrap());
        u.add_pulse(ClassId(2), RectPulse::new(s(70), s(80)).unwrap());
        u
    }

    #[test]
    fn stock_of_study_unit() {
        let reg = registry(2);
        let u = study_unit_one();
        assert_eq!(unit_stock(&u, &reg, s(25)).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(unit_stock(&u, &reg, s(65)).unwrap(), vec![2.0, 4.0, 6.0]);
        assert_eq!(unit_stock(&u, &reg, s(20)).unwrap(), vec![0.5, 1.0, 1.5]);
        let empty = VisionUnit::new(UnitId(3), Location::default());
        assert_eq!(unit_stock(&empty, &reg, s(65)).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn overlapping_same_class_pulses_add() {
        let reg = registry(1);
        let mut u = VisionUnit::new(UnitId(1), Location::default());
        u.add_pulse(ClassId(1), RectPulse::new(s(10), s(10)).unwrap());
        u.add_pulse(ClassId(1), RectPulse::new(s(12), s(10)).unwrap());
        assert_eq!(unit_stock(&u, &reg, s(11)).unwrap(), vec![2.0, 4.0, 6.0]);
        assert_eq!(unit_stock(&u, &reg, s(15)).unwrap(), vec![1.5, 3.0, 4.5]);
    }

    #[test]
    fn unregistered_class_is_an_error() {
        let reg = registry(1);
        let u = study_unit_one();
        assert_eq!(
            unit_stock(&u, &reg, s(0)),
            Err(UnitError::UnregisteredClass { unit: 1, class: 2 })
        );
    }

    #[test]
    fn breakpoints() {
        assert_eq!(unit_breakpoints(&study_unit_one()), vec![s(20), s(30), s(100), s(110)]);
        let mut u2 = VisionUnit::new(UnitId(2), Location::default());
        u2.add_pulse(ClassId(1), RectPulse::new(s(80), s(80)).unwrap());
        u2.add_pulse(ClassId(2), RectPulse::new(s(90), s(80)).unwrap());
        assert_eq!(unit_breakpoints(&u2), vec![s(40), s(50), s(120), s(130)]);
        assert!(unit_breakpoints(&VisionUnit::new(UnitId(1), Location::default())).is_empty());
    }

    #[test]
    fn location_validation() {
        assert!(Location::new(0.0, f64::NAN, None).is_err());
        assert!(Location::new(0.0, 0.0, Some(GeoTag { lat: 91.0, lon: 0.0 })).is_err());
        assert!(Location::new(0.0, 0.0, Some(GeoTag { lat: 45.0, lon: -181.0 })).is_err());
        assert!(Location::new(1.0, 2.0, Some(GeoTag { lat: -90.0, lon: 180.0 })).is_ok());
    }

    #[test]
    fn confusion_validation() {
        assert!(ConfusionModel::new(vec![vec![0.5, 0.4], vec![0.0, 1.0]], 1).is_err());
        assert!(ConfusionModel::new(vec![vec![1.5, -0.5], vec![0.0, 1.0]], 1).is_err());
        assert!(ConfusionModel::new(vec![vec![1.0], vec![0.0, 1.0]], 1).is_err());
        assert!(ConfusionModel::new(vec![vec![0.3, 0.7], vec![0.5, 0.5]], 1).is_ok());
    }

    #[test]
    fn identity_confusion_keeps_schedule() {
        let u = study_unit_one();
        let out = apply_confusion(&u, &ConfusionModel::identity(2, 99)).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn one_hot_confusion_relabels_everything() {
        let u = study_unit_one();
        let cm = ConfusionModel::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]], 7).unwrap();
        let out = apply_confusion(&u, &cm).unwrap();
        assert_eq!(out.schedule.len(), 1);
        assert_eq!(out.schedule[&ClassId(2)].len(), 2);
        assert_eq!(out.pulse_count(), u.pulse_count());
    }

    #[test]
    fn confusion_is_deterministic_and_rejects_out_of_range_classes() {
        let mut u = study_unit_one();
        for k in 0..20 {
            u.add_pulse(ClassId(1 + k % 2), RectPulse::new(s(200 + k as i64), s(2)).unwrap());
        }
        let cm = ConfusionModel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 42).unwrap();
        assert_eq!(apply_confusion(&u, &cm).unwrap(), apply_confusion(&u, &cm).unwrap());
        let small = ConfusionModel::identity(1, 0);
        assert!(apply_confusion(&u, &small).is_err());
    }
}
