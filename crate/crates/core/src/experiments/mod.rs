//! Batch experiments: seeded parameter sweeps, code rasters and the exact
//! property suites.

pub mod properties;
pub mod raster;
pub mod sampling;
pub mod sweep;

pub use properties::{verify_properties, verify_properties_with, PropertyCounts, PropertyHooks, PropertyReport, SuiteResult};
pub use raster::{raster, Raster};
pub use sweep::{run_sweep, MatrixSpec, RuntimeMeta, SampleRecord, SweepReport, SweepSpec, TranslationSampler};
