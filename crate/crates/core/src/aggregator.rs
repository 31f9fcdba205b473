//! Network-wide stock aggregation.
//!
//! A [`StockSeries`] is the exact event-driven form of the network stock:
//! sorted breakpoints, one constant vector per open interval between them,
//! and the (half-level) value exactly at each breakpoint. Sampling is
//! derived from it.
//!
//! Every sum runs over units in ascending id order, then classes in
//! ascending id order, so results are bit-identical across runs and between
//! the serial and parallel paths.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::composition::{CompositionError, CompositionRegistry, MaterialId};
use crate::signal::{pulse_value, pulse_value_on_gap, PulseLevel, RectPulse, Time, MICROS_PER_SEC};
use crate::unit::{unit_breakpoints, Location, UnitError, UnitId, VisionUnit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("duplicate unit id {0}")]
    DuplicateUnit(u32),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("sample step must be positive, got {0} us")]
    NonPositiveStep(i64),
    #[error("sample range start {t0} is after end {t1}")]
    InvertedRange { t0: Time, t1: Time },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    units: Vec<VisionUnit>,
    registry: CompositionRegistry,
}

impl Network {
    pub fn new(mut units: Vec<VisionUnit>, registry: CompositionRegistry) -> Result<Self, AggregateError> {
        registry.ensure_complete()?;
        units.sort_by_key(|u| u.id);
        for pair in units.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(AggregateError::DuplicateUnit(pair[0].id.0));
            }
        }
        for u in &units {
            u.check_classes(&registry)?;
            u.location.validate()?;
        }
        Ok(Network { units, registry })
    }

    pub fn units(&self) -> &[VisionUnit] {
        &self.units
    }

    pub fn registry(&self) -> &CompositionRegistry {
        &self.registry
    }

    pub fn psi(&self) -> usize {
        self.registry.psi()
    }

    /// The sub-network made of the units accepted by `keep`.
    pub fn subnetwork(&self, keep: impl Fn(UnitId) -> bool) -> Network {
        Network {
            units: self.units.iter().filter(|u| keep(u.id)).cloned().collect(),
            registry: self.registry.clone(),
        }
    }

    /// Every detection window moved by `by`.
    pub fn shifted(&self, by: Time) -> Network {
        Network {
            units: self.units.iter().map(|u| u.shifted(by)).collect(),
            registry: self.registry.clone(),
        }
    }

    /// Every composition multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Network {
        Network {
            units: self.units.clone(),
            registry: self.registry.scaled(alpha),
        }
    }

    pub fn breakpoints(&self) -> Vec<Time> {
        let mut all: Vec<Time> = self.units.iter().flat_map(unit_breakpoints).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    fn unit_contribution(&self, u: &VisionUnit, level: &(impl Fn(&RectPulse) -> PulseLevel + Sync)) -> Vec<f64> {
        let mut out = vec![0.0; self.psi()];
        u.accumulate_stock(&self.registry, level, &mut out)
            .expect("network classes are validated at construction");
        out
    }

    fn total(&self, level: impl Fn(&RectPulse) -> PulseLevel + Sync) -> Vec<f64> {
        let mut total = vec![0.0; self.psi()];
        for u in &self.units {
            add_into(&mut total, &self.unit_contribution(u, &level));
        }
        total
    }
}

fn add_into(total: &mut [f64], part: &[f64]) {
    for (t, p) in total.iter_mut().zip(part) {
        *t += p;
    }
}

/// Network stock at `t`: the sum of every unit's stock.
pub fn network_stock(net: &Network, t: Time) -> Vec<f64> {
    net.total(|p| pulse_value(p, t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StockSeries {
    psi: usize,
    breakpoints: Vec<Time>,
    plateaus: Vec<Vec<f64>>,
    boundary_values: Vec<Vec<f64>>,
}

impl StockSeries {
    pub fn psi(&self) -> usize {
        self.psi
    }

    pub fn breakpoints(&self) -> &[Time] {
        &self.breakpoints
    }

    /// `plateaus()[k]` holds on the open interval ending at breakpoint `k`;
    /// the first and last entries are the unbounded zero tails.
    pub fn plateaus(&self) -> &[Vec<f64>] {
        &self.plateaus
    }

    pub fn boundary_values(&self) -> &[Vec<f64>] {
        &self.boundary_values
    }

    /// Bounded intervals with their plateau: `(start, end, value)`.
    pub fn intervals(&self) -> impl Iterator<Item = (Time, Time, &[f64])> {
        self.breakpoints
            .windows(2)
            .zip(&self.plateaus[1..])
            .map(|(w, p)| (w[0], w[1], p.as_slice()))
    }

    pub fn value_at(&self, t: Time) -> &[f64] {
        match self.breakpoints.binary_search(&t) {
            Ok(k) => &self.boundary_values[k],
            Err(k) => &self.plateaus[k],
        }
    }

    pub fn is_breakpoint(&self, t: Time) -> bool {
        self.breakpoints.binary_search(&t).is_ok()
    }
}

fn series_from_parts(psi: usize, breakpoints: Vec<Time>, mut plateaus: Vec<Vec<f64>>, boundary_values: Vec<Vec<f64>>) -> StockSeries {
    plateaus.insert(0, vec![0.0; psi]);
    if !breakpoints.is_empty() {
        plateaus.push(vec![0.0; psi]);
    }
    StockSeries { psi, breakpoints, plateaus, boundary_values }
}

pub fn stock_series(net: &Network) -> StockSeries {
    let breakpoints = net.breakpoints();
    let plateaus = breakpoints
        .windows(2)
        .map(|w| net.total(|p| pulse_value_on_gap(p, w[0], w[1])))
        .collect();
    let boundary_values = breakpoints.iter().map(|&b| network_stock(net, b)).collect();
    series_from_parts(net.psi(), breakpoints, plateaus, boundary_values)
}

type Rows = Vec<Vec<f64>>;

/// Same result as [`stock_series`], with per-unit evaluation spread over the
/// rayon pool. The reduction over units stays serial and ordered.
pub fn stock_series_parallel(net: &Network) -> StockSeries {
    let breakpoints = net.breakpoints();
    let per_unit: Vec<(Rows, Rows)> = net
        .units
        .par_iter()
        .map(|u| {
            let plateaus = breakpoints
                .windows(2)
                .map(|w| net.unit_contribution(u, &|p: &RectPulse| pulse_value_on_gap(p, w[0], w[1])))
                .collect();
            let bounds = breakpoints
                .iter()
                .map(|&b| net.unit_contribution(u, &|p: &RectPulse| pulse_value(p, b)))
                .collect();
            (plateaus, bounds)
        })
        .collect();
    let psi = net.psi();
    let mut plateaus = vec![vec![0.0; psi]; breakpoints.len().saturating_sub(1)];
    let mut boundary_values = vec![vec![0.0; psi]; breakpoints.len()];
    for (unit_plateaus, unit_bounds) in &per_unit {
        for (total, part) in plateaus.iter_mut().zip(unit_plateaus) {
            add_into(total, part);
        }
        for (total, part) in boundary_values.iter_mut().zip(unit_bounds) {
            add_into(total, part);
        }
    }
    series_from_parts(psi, breakpoints, plateaus, boundary_values)
}

/// A step in one material stock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StockEvent {
    pub time: Time,
    pub material: MaterialId,
    /// Plateau after minus plateau before, kg.
    pub delta: f64,
    /// Plateau after the step, kg.
    pub after: f64,
}

pub fn events_from_series(series: &StockSeries) -> Vec<StockEvent> {
    let mut events = Vec::new();
    for (k, &time) in series.breakpoints.iter().enumerate() {
        let before = &series.plateaus[k];
        let after = &series.plateaus[k + 1];
        for j in 0..series.psi {
            let delta = after[j] - before[j];
            if delta != 0.0 {
                events.push(StockEvent {
                    time,
                    material: MaterialId(j as u32 + 1),
                    delta,
                    after: after[j],
                });
            }
        }
    }
    events
}

pub fn stock_events(net: &Network) -> Vec<StockEvent> {
    events_from_series(&stock_series(net))
}

pub fn sample_series(series: &StockSeries, t0: Time, t1: Time, step: Time) -> Result<Vec<(Time, Vec<f64>)>, AggregateError> {
    if step <= Time::ZERO {
        return Err(AggregateError::NonPositiveStep(step.micros()));
    }
    if t0 > t1 {
        return Err(AggregateError::InvertedRange { t0, t1 });
    }
    let count = ((t1 - t0).micros() / step.micros()) as usize + 1;
    Ok((0..count)
        .map(|k| {
            let t = t0 + Time::from_micros(k as i64 * step.micros());
            (t, series.value_at(t).to_vec())
        })
        .collect())
}

/// Integral of each material stock over all time, kg*s, in closed form.
pub fn mass_time_integral(net: &Network) -> Vec<f64> {
    let mut kg_us = vec![0.0; net.psi()];
    for u in &net.units {
        for (c, pulse) in u.pulses() {
            let m = net.registry.composition(c).expect("validated");
            let d = pulse.duration().micros() as f64;
            for (acc, mass) in kg_us.iter_mut().zip(m.as_slice()) {
                *acc += d * mass;
            }
        }
    }
    kg_us.iter().map(|v| v / MICROS_PER_SEC as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialRow {
    pub unit: UnitId,
    pub location: Location,
    pub stock: Vec<f64>,
}

pub fn spatial_map(net: &Network, t: Time) -> Vec<SpatialRow> {
    net.units
        .iter()
        .map(|u| SpatialRow {
            unit: u.id,
            location: u.location,
            stock: net.unit_contribution(u, &|p: &RectPulse| pulse_value(p, t)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{ClassId, MassInput, Material, ObjectClass};
    use crate::unit::GeoTag;

    fn s(v: i64) -> Time {
        Time::from_secs(v)
    }

    fn registry() -> CompositionRegistry {
        let materials = ["plastic", "glass", "gold"]
            .iter()
            .enumerate()
            .map(|(i, n)| Material { id: MaterialId(i as u32 + 1), name: n.to_string() })
            .collect();
        let classes = (1..=2)
            .map(|i| ObjectClass { id: ClassId(i), name: format!("c{i}") })
            .collect();
        let mut reg = CompositionRegistry::new(materials, classes).unwrap();
        for c in 1..=2 {
            reg.register_class(ClassId(c), MassInput::Positional(vec![1.0, 2.0, 3.0])).unwrap();
        }
        reg
    }

    fn study() -> Network {
        let mut u1 = VisionUnit::new(UnitId(1), Location::new(0.0, 0.0, None).unwrap());
        u1.add_pulse(ClassId(1), RectPulse::new(s(60), s(80)).unwrap());
        u1.add_pulse(ClassId(2), RectPulse::new(s(70), s(80)).unwrap());
        let mut u2 = VisionUnit::new(
            UnitId(2),
            Location::new(100.0, 50.0, Some(GeoTag { lat: 45.07, lon: 7.69 })).unwrap(),
        );
        u2.add_pulse(ClassId(1), RectPulse::new(s(80), s(80)).unwrap());
        u2.add_pulse(ClassId(2), RectPulse::new(s(90), s(80)).unwrap());
        Network::new(vec![u2, u1], registry()).unwrap()
    }

    #[test]
    fn network_stock_examples() {
        let net = study();
        assert_eq!(network_stock(&net, s(75)), vec![4.0, 8.0, 12.0]);
        assert_eq!(network_stock(&net, s(10)), vec![0.0; 3]);
        assert_eq!(network_stock(&net, s(25)), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn series_of_study() {
        let series = stock_series(&study());
        let times: Vec<i64> = series.breakpoints().iter().map(|t| t.micros() / 1_000_000).collect();
        assert_eq!(times, vec![20, 30, 40, 50, 100, 110, 120, 130]);
        assert_eq!(series.plateaus().len(), 9);
        assert_eq!(series.plateaus()[4], vec![4.0, 8.0, 12.0]);
        assert_eq!(series.plateaus()[0], vec![0.0; 3]);
        assert_eq!(series.plateaus()[8], vec![0.0; 3]);
        assert_eq!(series.value_at(s(20)), &[0.5, 1.0, 1.5]);
        assert_eq!(stock_series_parallel(&study()), series);
    }

    #[test]
    fn single_pulse_series() {
        let mut u = VisionUnit::new(UnitId(1), Location::default());
        u.add_pulse(ClassId(1), RectPulse::new(s(60), s(80)).unwrap());
        let net = Network::new(vec![u], registry()).unwrap();
        let series = stock_series(&net);
        assert_eq!(series.plateaus(), &[vec![0.0; 3], vec![1.0, 2.0, 3.0], vec![0.0; 3]]);
        assert_eq!(series.boundary_values(), &[vec![0.5, 1.0, 1.5], vec![0.5, 1.0, 1.5]]);
    }

    #[test]
    fn empty_network() {
        let net = Network::new(vec![], registry()).unwrap();
        let series = stock_series(&net);
        assert!(series.breakpoints().is_empty());
        assert_eq!(series.plateaus(), &[vec![0.0; 3]]);
        assert!(stock_events(&net).is_empty());
        assert_eq!(mass_time_integral(&net), vec![0.0; 3]);
    }

    #[test]
    fn study_events() {
        let events = stock_events(&study());
        assert_eq!(events.len(), 24);
        let gold: Vec<f64> = events.iter().filter(|e| e.material == MaterialId(3)).map(|e| e.delta).collect();
        assert_eq!(gold, vec![3.0, 3.0, 3.0, 3.0, -3.0, -3.0, -3.0, -3.0]);
        for pair in events.windows(2) {
            assert!((pair[0].time, pair[0].material) < (pair[1].time, pair[1].material));
        }
    }

    #[test]
    fn sampling() {
        let series = stock_series(&study());
        let samples = sample_series(&series, s(0), s(150), s(5)).unwrap();
        assert_eq!(samples.len(), 31);
        assert_eq!(samples[4], (s(20), vec![0.5, 1.0, 1.5]));
        assert_eq!(samples[15].1, vec![4.0, 8.0, 12.0]);
        let one = sample_series(&series, s(0), s(3), s(10)).unwrap();
        assert_eq!(one, vec![(s(0), vec![0.0; 3])]);
        for (_, v) in sample_series(&series, s(60), s(99), Time::from_micros(700_001)).unwrap() {
            assert_eq!(v, vec![4.0, 8.0, 12.0]);
        }
        assert!(sample_series(&series, s(0), s(1), s(0)).is_err());
        assert!(sample_series(&series, s(2), s(1), s(1)).is_err());
    }

    #[test]
    fn integral_and_map() {
        let net = study();
        assert_eq!(mass_time_integral(&net), vec![320.0, 640.0, 960.0]);
        let rows = spatial_map(&net, s(75));
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].unit, UnitId(1));
        assert_eq!(rows[1].location.x, 100.0);
        for r in &rows {
            assert_eq!(r.stock, vec![2.0, 4.0, 6.0]);
        }
        for r in spatial_map(&net, s(0)) {
            assert_eq!(r.stock, vec![0.0; 3]);
        }
        let solo = net.subnetwork(|id| id == UnitId(2));
        assert_eq!(spatial_map(&solo, s(75))[0].stock, network_stock(&solo, s(75)));
    }

    #[test]
    fn duplicate_units_rejected() {
        let a = VisionUnit::new(UnitId(1), Location::default());
        let b = VisionUnit::new(UnitId(1), Location::default());
        assert_eq!(Network::new(vec![a, b], registry()), Err(AggregateError::DuplicateUnit(1)));
    }
}
