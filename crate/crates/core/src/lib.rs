//! Networked vision material mapping and quantification.
//!
//! Vision units report detection windows for object classes; each class has
//! a known material composition. A unit's material stock at time `t` is the
//! sum over classes of the rectangular detection level times the class
//! composition, and the network stock is the sum over units.
//!
//! - [`signal`]: integer-microsecond time and the exact three-level
//!   rectangular pulse.
//! - [`composition`]: materials, classes and their mass vectors.
//! - [`unit`]: one vision unit, its stock signal and the optional
//!   misclassification model.
//! - [`aggregator`]: network stock, exact piecewise-constant series, events,
//!   sampling, integrals and the spatial map.
//! - [`geometry`]: local-to-robot frame conversion of pick points.
//! - [`scenario`]: JSON scenario files and detection logs.
//! - [`cli`]: the `matmap` command line.

pub mod aggregator;
pub mod cli;
pub mod composition;
pub mod geometry;
pub mod scenario;
pub mod signal;
pub mod unit;

pub use aggregator::{
    events_from_series, mass_time_integral, network_stock, sample_series, spatial_map, stock_events, stock_series,
    stock_series_parallel, AggregateError, Network, SpatialRow, StockEvent, StockSeries,
};
pub use composition::{ClassId, CompositionError, CompositionRegistry, MassInput, MassVector, Material, MaterialId, ObjectClass};
pub use geometry::{
    pick_points_robot, split_target, to_robot_frame, validate_rotation, FrameTransform, GeometryError, PickPoints,
    Rotation3, TargetVector,
};
pub use scenario::{build_network, ingest_detection_log, parse_scenario, DetectionRecord, Scenario, ScenarioError};
pub use signal::{pulse_breakpoints, pulse_support, pulse_value, rect, PulseLevel, RectPulse, SignalError, Time};
pub use unit::{apply_confusion, unit_breakpoints, unit_stock, ConfusionModel, GeoTag, Location, UnitError, UnitId, VisionUnit};
