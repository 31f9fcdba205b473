//! Test-only helpers: the brute-force stock oracle and a seeded generator of
//! small random networks.
//!
//! The oracle evaluates unit stocks straight from the pulse schedules with
//! `rect`; it does not touch breakpoints, series or sampling.

#![allow(dead_code)]

use matmap::{
    rect, ClassId, CompositionRegistry, Location, MassInput, Material, MaterialId, Network, ObjectClass, RectPulse,
    Time, UnitId, VisionUnit,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Network stock at `t`, summed unit by unit in id order and class by class
/// within each unit.
pub fn naive_network_stock(net: &Network, t: Time) -> Vec<f64> {
    let psi = net.psi();
    let mut tau = vec![0.0; psi];
    for unit in net.units() {
        let mut m_i = vec![0.0; psi];
        for (class, pulses) in &unit.schedule {
            let mut xi = 0.0;
            for p in pulses {
                xi += rect(t - p.center(), p.duration()).unwrap().as_f64();
            }
            let m_c = net.registry().composition(*class).unwrap().as_slice();
            for j in 0..psi {
                m_i[j] += xi * m_c[j];
            }
        }
        for j in 0..psi {
            tau[j] += m_i[j];
        }
    }
    tau
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrace {
    pub step: Time,
    pub samples: Vec<(Time, Vec<f64>)>,
}

pub fn dense_trace(net: &Network, t0: Time, t1: Time, step: Time) -> DenseTrace {
    assert!(step > Time::ZERO, "grid step must be positive");
    let mut samples = Vec::new();
    let mut t = t0;
    while t <= t1 {
        samples.push((t, naive_network_stock(net, t)));
        t = t + step;
    }
    DenseTrace { step, samples }
}

/// Earliest start and latest end over all pulses.
pub fn pulse_hull(net: &Network) -> Option<(Time, Time)> {
    let mut hull: Option<(Time, Time)> = None;
    for u in net.units() {
        for (_, p) in u.pulses() {
            hull = Some(match hull {
                None => (p.start(), p.end()),
                Some((a, b)) => (a.min(p.start()), b.max(p.end())),
            });
        }
    }
    hull
}

pub fn registry(psi: usize, compositions: &[Vec<f64>]) -> CompositionRegistry {
    let materials = (1..=psi)
        .map(|j| Material { id: MaterialId(j as u32), name: format!("material{j}") })
        .collect();
    let classes = (1..=compositions.len())
        .map(|c| ObjectClass { id: ClassId(c as u32), name: format!("class{c}") })
        .collect();
    let mut reg = CompositionRegistry::new(materials, classes).unwrap();
    for (c, m) in compositions.iter().enumerate() {
        reg.register_class(ClassId(c as u32 + 1), MassInput::Positional(m.clone())).unwrap();
    }
    reg
}

/// Masses for generated networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassGrid {
    /// Multiples of 1/8 kg up to 10 kg; every sum of these is exact.
    Dyadic,
    /// Arbitrary three-decimal kg values, which round in binary.
    Decimal,
}

/// A random network with s <= 5 units, q <= 4 classes, psi <= 5 materials
/// and at most 3 pulses per (unit, class). Pulse edges lie on a 0.5 s grid
/// in [0, 200] s so that 0.1 s sampling regularly hits them.
pub fn random_network(rng: &mut ChaCha8Rng, masses: MassGrid) -> Network {
    let s = rng.gen_range(1..=5);
    let q = rng.gen_range(1..=4);
    let psi = rng.gen_range(1..=5);
    let compositions: Vec<Vec<f64>> = (0..q)
        .map(|_| {
            (0..psi)
                .map(|_| match masses {
                    MassGrid::Dyadic => rng.gen_range(0..=80) as f64 / 8.0,
                    MassGrid::Decimal => rng.gen_range(0..=10_000) as f64 / 1000.0,
                })
                .collect()
        })
        .collect();
    let units = (1..=s)
        .map(|i| {
            let loc = Location::new(rng.gen_range(-1000.0..1000.0), rng.gen_range(-1000.0..1000.0), None).unwrap();
            let mut u = VisionUnit::new(UnitId(i), loc);
            for c in 1..=q {
                for _ in 0..rng.gen_range(0..=3) {
                    let start = rng.gen_range(0..=300i64) * 500_000;
                    let len = rng.gen_range(1..=100i64) * 500_000;
                    let end = (start + len).min(200_000_000);
                    if end > start {
                        let p = RectPulse::from_window(Time::from_micros(start), Time::from_micros(end)).unwrap();
                        u.add_pulse(ClassId(c), p);
                    }
                }
            }
            u
        })
        .collect();
    Network::new(units, registry(psi, &compositions)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn study_network() -> Network {
    let scn = matmap::parse_scenario(matmap::scenario::STUDY_SCENARIO).unwrap();
    matmap::build_network(&scn).unwrap()
}
