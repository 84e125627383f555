//! Independent re-verification of a periodic-orbit certificate.
//!
//! Everything is recomputed from the matrix rows, `k` and `μ` with plain
//! rational vectors; nothing here goes through the search path.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{RVector, Rational};
use crate::extension::ExtendedSystem;

use super::certify::PeriodicOrbitCertificate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnclosureCheck {
    /// `y_N` was recomputed exactly and lies within `ε` of `z_m`.
    Confirmed,
    Violated,
    /// `N` exceeds the replay limit.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecheckReport {
    /// Shapes agree and the hash matches the system.
    pub well_formed: bool,
    /// The listed points form a cycle of the branch maps named by the word.
    pub fixed_point: bool,
    /// Each point carries the label of its letter.
    pub itinerary: bool,
    /// Each point is at distance at least `δ > 0` from every hyperplane.
    pub margin: bool,
    /// `ε < δ (1 − ‖A‖)`
    pub contraction: bool,
    pub enclosure: EnclosureCheck,
}

impl RecheckReport {
    pub fn passed(&self) -> bool {
        self.well_formed
            && self.fixed_point
            && self.itinerary
            && self.margin
            && self.contraction
            && self.enclosure != EnclosureCheck::Violated
    }
}

/// Signed distance of `y` to `H_j`, scaled so that it is the max-norm distance.
fn gap(sys: &ExtendedSystem, j: usize, y: &RVector) -> Rational {
    let row = sys.matrix().row(j);
    let weight: Rational = row.iter().map(|a| a.abs()).sum();
    let dot: Rational = row.iter().zip(y.iter()).map(|(a, v)| a * v).sum();
    dot / &weight - &sys.mu()[j]
}

fn letter_bits(sys: &ExtendedSystem, y: &RVector) -> u32 {
    (0..sys.dim()).filter(|&j| !gap(sys, j, y).is_negative()).fold(0, |m, j| m | 1 << j)
}

fn branch(sys: &ExtendedSystem, bits: u32, y: &RVector) -> RVector {
    let a = sys.matrix();
    (0..sys.dim())
        .map(|j| {
            let dot: Rational = a.row(j).iter().zip(y.iter()).map(|(a, v)| a * v).sum();
            dot - Rational::from_integer((sys.k()[j] + i64::from(bits >> j & 1 == 1)).into())
        })
        .collect()
}

/// Rechecks `cert` for the orbit of `y0`, replaying up to `replay_limit` steps.
pub fn recheck_certificate(
    sys: &ExtendedSystem,
    y0: &RVector,
    cert: &PeriodicOrbitCertificate,
    replay_limit: u64,
) -> RecheckReport {
    let q = cert.period;
    let d = sys.dim();
    let well_formed = q >= 1
        && cert.word.len() == q
        && cert.orbit.len() == q
        && cert.orbit[0] == cert.point
        && cert.phase < q
        && cert.orbit.iter().all(|z| z.dim() == d)
        && cert.word.letters().iter().all(|l| l.dim() == d)
        && y0.dim() == d
        && cert.system_hash == sys.system_hash();
    if !well_formed {
        return RecheckReport {
            well_formed,
            fixed_point: false,
            itinerary: false,
            margin: false,
            contraction: false,
            enclosure: EnclosureCheck::Violated,
        };
    }

    let letters: Vec<u32> = cert.word.letters().iter().map(|l| l.mask()).collect();
    let mut fixed_point = true;
    let mut itinerary = true;
    let mut margin = cert.delta.is_positive();
    for m in 0..q {
        let z = &cert.orbit[m];
        if letter_bits(sys, z) != letters[m] {
            itinerary = false;
        }
        for j in 0..d {
            let g = gap(sys, j, z).abs();
            if g.is_zero() || g < cert.delta {
                margin = false;
            }
        }
        let image = branch(sys, letters[m], z);
        if image != cert.orbit[(m + 1) % q] {
            fixed_point = false;
        }
    }

    let norm = (0..d)
        .map(|j| sys.matrix().row(j).iter().map(|a| a.abs()).sum::<Rational>())
        .max()
        .unwrap_or_else(Rational::zero);
    let contraction =
        norm < Rational::one() && !cert.epsilon.is_negative() && cert.epsilon < &cert.delta * (Rational::one() - &norm);

    let enclosure = if cert.witness_step > replay_limit {
        EnclosureCheck::Skipped
    } else {
        let mut y = y0.clone();
        for _ in 0..cert.witness_step {
            y = branch(sys, letter_bits(sys, &y), &y);
        }
        if y.distance(&cert.orbit[cert.phase]) <= cert.epsilon {
            EnclosureCheck::Confirmed
        } else {
            EnclosureCheck::Violated
        }
    };

    RecheckReport { well_formed, fixed_point, itinerary, margin, contraction, enclosure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, RMatrix};
    use crate::conjugation::h_inverse;
    use crate::dynamics::certify::{certify, Budget};
    use crate::rotation::ContractedRotation;

    fn period_two() -> (ExtendedSystem, RVector, PeriodicOrbitCertificate) {
        let rot = ContractedRotation::new(RMatrix::from_fractions(&[&[(1, 2)]]), RVector::new(vec![rat(7, 10)])).unwrap();
        let ext = ExtendedSystem::from_rotation(&rot);
        let y0 = h_inverse(&rot, &RVector::new(vec![rat(1, 5)]));
        let cert = certify(&ext, &y0, &Budget::default()).unwrap().certificate().unwrap().clone();
        (ext, y0, cert)
    }

    #[test]
    fn genuine_certificate_passes() {
        let (ext, y0, cert) = period_two();
        let report = recheck_certificate(&ext, &y0, &cert, 10_000);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.enclosure, EnclosureCheck::Confirmed);
    }

    #[test]
    fn tampered_certificates_fail() {
        let (ext, y0, cert) = period_two();
        let mut wide = cert.clone();
        wide.epsilon = cert.delta.clone();
        assert!(!recheck_certificate(&ext, &y0, &wide, 10_000).contraction);

        let mut moved = cert.clone();
        moved.orbit[1] = &moved.orbit[1] + &RVector::new(vec![rat(1, 1000)]);
        assert!(!recheck_certificate(&ext, &y0, &moved, 10_000).fixed_point);

        let mut greedy = cert.clone();
        greedy.delta = &cert.delta * rat(2, 1);
        assert!(!recheck_certificate(&ext, &y0, &greedy, 10_000).margin);

        let mut early = cert.clone();
        early.witness_step = 0;
        early.epsilon = rat(0, 1);
        let report = recheck_certificate(&ext, &RVector::new(vec![rat(-1, 10)]), &early, 10_000);
        assert_eq!(report.enclosure, EnclosureCheck::Violated);

        let mut foreign = cert;
        foreign.system_hash = "00".into();
        assert!(!recheck_certificate(&ext, &y0, &foreign, 10_000).passed());
    }
}
