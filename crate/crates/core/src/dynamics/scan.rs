//! Certification over a grid of initial conditions of one rotation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{rat, RVector};
use crate::conjugation::h_inverse;
use crate::error::{Error, Result};
use crate::extension::ExtendedSystem;
use crate::rotation::ContractedRotation;

use super::certify::{certify, Budget, OrbitVerdict};
use super::word::Itinerary;

/// Largest number of grid points a uniform grid may expand to.
const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialGrid {
    /// The points `(i_1/n, …, i_d/n)` with `0 ≤ i_j < n`.
    Uniform { per_axis: usize },
    Points { points: Vec<RVector> },
}

impl InitialGrid {
    pub fn points(&self, d: usize) -> Result<Vec<RVector>> {
        match self {
            InitialGrid::Uniform { per_axis } => {
                let n = *per_axis;
                if n == 0 {
                    return Ok(Vec::new());
                }
                let total = u32::try_from(d)
                    .ok()
                    .and_then(|d| n.checked_pow(d))
                    .filter(|&t| t <= MAX_GRID_POINTS)
                    .ok_or_else(|| Error::Invalid(format!("grid {n}^{d} is too large")))?;
                Ok((0..total)
                    .map(|mut idx| {
                        (0..d)
                            .map(|_| {
                                let i = idx % n;
                                idx /= n;
                                rat(i as i64, n as i64)
                            })
                            .collect()
                    })
                    .collect())
            }
            InitialGrid::Points { points } => {
                for p in points {
                    if p.dim() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
                    }
                    if !p.in_unit_cube() {
                        return Err(Error::OutsideCube);
                    }
                }
                Ok(points.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub x0: RVector,
    #[serde(flatten)]
    pub verdict: OrbitVerdict,
}

/// A periodic orbit in original coordinates, listed from its smallest point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinctOrbit {
    pub period: usize,
    pub word: Itinerary,
    /// Orbit points in `[0,1)^d`.
    pub points: Vec<RVector>,
    /// Number of grid points attracted to this orbit.
    pub basin_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub certified: usize,
    pub hit_discontinuity: usize,
    pub undetermined: usize,
}

impl VerdictCounts {
    pub fn total(&self) -> usize {
        self.certified + self.hit_discontinuity + self.undetermined
    }

    pub fn record(&mut self, verdict: &OrbitVerdict) {
        match verdict {
            OrbitVerdict::Certified(_) => self.certified += 1,
            OrbitVerdict::HitDiscontinuity { .. } => self.hit_discontinuity += 1,
            OrbitVerdict::Undetermined(_) => self.undetermined += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub system_hash: String,
    pub points: Vec<PointVerdict>,
    pub orbits: Vec<DistinctOrbit>,
    pub counts: VerdictCounts,
    /// Every grid point was certified.
    pub asymptotically_periodic_on_sample: bool,
}

/// Rotates the orbit so that its smallest point comes first.
fn normalise(word: &Itinerary, points: Vec<RVector>) -> (Itinerary, Vec<RVector>) {
    let start = (0..points.len()).min_by(|&i, &j| points[i].cmp(&points[j])).unwrap_or(0);
    let mut rotated = points;
    rotated.rotate_left(start);
    (word.rotated(start), rotated)
}

pub fn attractor_scan(sys: &ContractedRotation, grid: &InitialGrid, budget: &Budget) -> Result<ScanReport> {
    let ext = ExtendedSystem::from_rotation(sys);
    let starts = grid.points(sys.dim())?;
    let verdicts: Vec<OrbitVerdict> = starts
        .par_iter()
        .map(|x0| certify(&ext, &h_inverse(sys, x0), budget))
        .collect::<Result<_>>()?;

    let mut counts = VerdictCounts::default();
    let mut orbits: Vec<DistinctOrbit> = Vec::new();
    for verdict in &verdicts {
        counts.record(verdict);
        let Some(cert) = verdict.certificate() else { continue };
        let original = cert.orbit.iter().map(|z| z + sys.resolvent_offset()).collect();
        let (word, points) = normalise(&cert.word, original);
        match orbits.iter_mut().find(|o| o.points == points) {
            Some(o) => o.basin_count += 1,
            None => orbits.push(DistinctOrbit { period: cert.period, word, points, basin_count: 1 }),
        }
    }
    orbits.sort_by(|a, b| a.points.cmp(&b.points));
    let asymptotically_periodic_on_sample = !verdicts.is_empty() && counts.certified == verdicts.len();
    let points = starts.into_iter().zip(verdicts).map(|(x0, verdict)| PointVerdict { x0, verdict }).collect();
    Ok(ScanReport { system_hash: sys.system_hash(), points, orbits, counts, asymptotically_periodic_on_sample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::RMatrix;

    fn one_dim(b: (i64, i64)) -> ContractedRotation {
        ContractedRotation::new(RMatrix::from_fractions(&[&[(1, 2)]]), RVector::new(vec![rat(b.0, b.1)])).unwrap()
    }

    #[test]
    fn period_two_on_sixteen_points() {
        let report = attractor_scan(&one_dim((7, 10)), &InitialGrid::Uniform { per_axis: 16 }, &Budget::default()).unwrap();
        assert_eq!(report.counts, VerdictCounts { certified: 16, hit_discontinuity: 0, undetermined: 0 });
        assert_eq!(report.orbits.len(), 1);
        assert_eq!(report.orbits[0].points, vec![RVector::new(vec![rat(1, 15)]), RVector::new(vec![rat(11, 15)])]);
        assert_eq!(report.orbits[0].basin_count, 16);
        assert!(report.asymptotically_periodic_on_sample);
    }

    #[test]
    fn zero_translation_has_fixed_point() {
        let report = attractor_scan(&one_dim((0, 1)), &InitialGrid::Uniform { per_axis: 10 }, &Budget::default()).unwrap();
        assert_eq!(report.orbits.len(), 1);
        assert_eq!(report.orbits[0].points, vec![RVector::zeros(1)]);
    }

    #[test]
    fn exact_discontinuity_hit_is_isolated() {
        // x/2 + 3/4 = 1 at x = 1/2
        let report = attractor_scan(&one_dim((3, 4)), &InitialGrid::Uniform { per_axis: 4 }, &Budget::default()).unwrap();
        assert_eq!(report.counts, VerdictCounts { certified: 3, hit_discontinuity: 1, undetermined: 0 });
        assert_eq!(report.points[2].x0, RVector::new(vec![rat(1, 2)]));
        assert!(matches!(report.points[2].verdict, OrbitVerdict::HitDiscontinuity { step: 0, .. }));
        assert_eq!(report.orbits[0].points, vec![RVector::new(vec![rat(1, 6)]), RVector::new(vec![rat(5, 6)])]);
        assert!(!report.asymptotically_periodic_on_sample);
    }

    #[test]
    fn explicit_points_are_validated() {
        let grid = InitialGrid::Points { points: vec![RVector::new(vec![rat(1, 1)])] };
        assert!(attractor_scan(&one_dim((0, 1)), &grid, &Budget::default()).is_err());
    }
}
