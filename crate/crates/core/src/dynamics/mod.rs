//! Orbits of the extended contraction `G_μ`: itineraries, exact and bounded
//! iteration, certification of periodic attractors and grid scans.

mod kernel;

pub mod certify;
pub mod recheck;
pub mod scan;
pub mod trace;
pub mod word;

pub use certify::{certify, verify_word, Budget, Enclosure, OrbitVerdict, PeriodicOrbitCertificate, UndeterminedReason};
pub use recheck::{recheck_certificate, RecheckReport};
pub use scan::{attractor_scan, InitialGrid, ScanReport};
pub use trace::{iterate_orbit, IterationMode, TraceStep};
pub use word::{compose_word, AffineWord, Itinerary};
