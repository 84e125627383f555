//! Certification that the `G_μ`-orbit of a point converges to a periodic orbit.
//!
//! A certificate consists of
//! 1. a word `α` of length `q` whose affine map `φ^α` has the exact fixed
//!    point `z_0`, with the orbit `z_0, …, z_{q−1}` realising `α` letter by
//!    letter and every point at max-norm distance at least `δ > 0` from every
//!    hyperplane;
//! 2. a step `N` at which the orbit point `y_N` is enclosed in the ball of
//!    radius `ε < δ (1 − ‖A‖)` around `z_0`.
//!
//! Any `y` within `δ` of `z_m` has the label of `z_m`, so
//! `‖G(y) − z_{m+1}‖ ≤ ‖A‖ ‖y − z_m‖`; by induction the orbit stays regular,
//! follows `α` forever and converges to the periodic orbit.
//!
//! The orbit is iterated exactly while its bit size stays below the cap, then
//! on the bounded dyadic path with a tracked error radius. Candidate periods
//! come from a Brent-style search over float shadows of the orbit; false
//! candidates only cost an attempt since everything is re-verified exactly.

use std::collections::{HashSet, VecDeque};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{serde_rational, RVector, Rational};
use crate::bounded::{precision_for, BoundedFloatState};
use crate::conjugation::Label;
use crate::error::{Error, Result};
use crate::extension::ExtendedSystem;

use super::kernel::{Kernel, ScaledPoint};
use super::recheck::recheck_certificate;
use super::word::{compose_word, Itinerary};

/// Initial precision of the bounded path.
const DEFAULT_PRECISION_BITS: u32 = 128;

/// Certificates whose witness step is at most this are replayed by the
/// independent verifier before being returned.
pub const RECHECK_REPLAY_LIMIT: u64 = 20_000;

/// Proximity threshold is `2^-20 (1 − ‖A‖) 2r`.
const PROXIMITY_EXPONENT: i32 = -20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub max_steps: u64,
    pub max_attempts: u32,
    /// Largest bit size of the exact orbit point; also caps the bounded precision.
    pub bits_cap: u64,
    /// Longest period the candidate search looks for.
    pub max_period: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_steps: 1_000_000, max_attempts: 10, bits_cap: 4096, max_period: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Enclosure {
    Exact,
    Bounded { precision_bits: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicOrbitCertificate {
    #[serde(rename = "q")]
    pub period: usize,
    #[serde(rename = "alpha")]
    pub word: Itinerary,
    /// `z_0`, the fixed point of `φ^α`.
    pub point: RVector,
    /// `z_0, …, z_{q−1}`
    pub orbit: Vec<RVector>,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    #[serde(rename = "N")]
    pub witness_step: u64,
    /// Index `m` of the orbit point enclosing `y_N`.
    pub phase: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub enclosure: Enclosure,
    pub system_hash: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndeterminedReason {
    StepBudget,
    AttemptBudget,
    PrecisionBudget,
    /// The independent verifier rejected a certificate; never expected.
    RecheckFailed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub reason: UndeterminedReason,
    pub steps: u64,
    pub attempts: u32,
    /// Step at which the exact path handed over to the bounded one.
    pub exact_steps: u64,
    pub precision_bits: Option<u32>,
    pub last_candidate_period: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrbitVerdict {
    Certified(PeriodicOrbitCertificate),
    HitDiscontinuity { step: u64, hyperplanes: Vec<usize> },
    Undetermined(Diagnostics),
}

impl OrbitVerdict {
    pub fn certificate(&self) -> Option<&PeriodicOrbitCertificate> {
        match self {
            OrbitVerdict::Certified(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, OrbitVerdict::Certified(_))
    }
}

/// A periodic orbit of `G_μ` realising its own word, with its margin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifiedOrbit {
    pub word: Itinerary,
    pub orbit: Vec<RVector>,
    pub delta: Rational,
}

/// Exact check that the fixed point of `φ^α` follows `α` off the hyperplanes.
/// Reduces `α` to its primitive root first.
pub fn verify_word(sys: &ExtendedSystem, word: &Itinerary) -> Option<VerifiedOrbit> {
    if word.is_empty() {
        return None;
    }
    let word = word.primitive_root();
    let z0 = compose_word(sys.matrix(), sys.k(), &word).fixed_point().ok()?;
    let arrangement = sys.arrangement();
    let mut orbit = Vec::with_capacity(word.len());
    let mut delta: Option<Rational> = None;
    let mut z = z0.clone();
    for &letter in word.letters() {
        if arrangement.label(&z) != letter {
            return None;
        }
        for j in 0..sys.dim() {
            let gap = num_traits::Signed::abs(&arrangement.signed_gap(j, &z));
            if gap.is_zero() {
                return None;
            }
            if delta.as_ref().is_none_or(|d| gap < *d) {
                delta = Some(gap);
            }
        }
        let next = sys.apply_phi(letter, &z);
        orbit.push(z);
        z = next;
    }
    (z == z0).then(|| VerifiedOrbit { word, orbit, delta: delta.expect("non-empty word") })
}

/// Smallest rotation, so that rotated copies of a word compare equal.
fn canonical_rotation(word: &Itinerary) -> Itinerary {
    (0..word.len()).map(|m| word.rotated(m)).min().unwrap_or_else(|| word.clone())
}

fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Brent-style search: the orbit is compared with an anchor point that is
/// moved at exponentially spaced steps (then every `max_period` steps), and
/// a close return triggers a search for the smallest matching period.
struct Detector {
    max_period: usize,
    threshold: f64,
    base: u64,
    first: u64,
    labels: VecDeque<Label>,
    points: VecDeque<Vec<f64>>,
    anchor: Option<(u64, Vec<f64>)>,
    next_anchor: u64,
}

impl Detector {
    fn new(max_period: usize, threshold: f64, start: u64) -> Self {
        let mut d = Detector {
            max_period,
            threshold,
            base: start,
            first: start,
            labels: VecDeque::new(),
            points: VecDeque::new(),
            anchor: None,
            next_anchor: start,
        };
        d.reset(start);
        d
    }

    fn reset(&mut self, start: u64) {
        self.base = start;
        self.first = start;
        self.labels.clear();
        self.points.clear();
        self.anchor = None;
        self.next_anchor = start;
    }

    fn label_at(&self, n: u64) -> Option<Label> {
        n.checked_sub(self.first).and_then(|i| self.labels.get(i as usize)).copied()
    }

    fn point_at(&self, n: u64) -> Option<&Vec<f64>> {
        n.checked_sub(self.first).and_then(|i| self.points.get(i as usize))
    }

    /// The labels of steps `n − q, …, n − 1`.
    fn word_ending_at(&self, n: u64, q: usize) -> Option<Itinerary> {
        (n - q as u64..n).map(|i| self.label_at(i)).collect::<Option<Vec<_>>>().map(Itinerary::new)
    }

    fn push(&mut self, label: Label, point: Vec<f64>) {
        self.labels.push_back(label);
        self.points.push_back(point);
        if self.labels.len() > 2 * self.max_period + 1 {
            self.labels.pop_front();
            self.points.pop_front();
            self.first += 1;
        }
    }

    /// Moves the anchor to step `n`.
    fn re_anchor(&mut self, n: u64) {
        if let Some(p) = self.point_at(n) {
            self.anchor = Some((n, p.clone()));
        }
    }

    /// Candidate period after pushing step `n`.
    fn detect(&mut self, n: u64) -> Option<usize> {
        let current = self.point_at(n)?.clone();
        let mut found = None;
        if let Some((a, anchor)) = &self.anchor {
            if max_distance(&current, anchor) < self.threshold {
                found = self.minimal_period(n, &current, (n - a) as usize);
            }
        }
        if n >= self.next_anchor {
            self.anchor = Some((n, current));
            let age = n - self.base;
            let spacing = if age < self.max_period as u64 { age.max(1) } else { self.max_period as u64 };
            self.next_anchor = n + spacing;
        }
        found
    }

    fn minimal_period(&self, n: u64, current: &[f64], gap: usize) -> Option<usize> {
        (1..=gap.min(self.max_period)).find(|&q| {
            let back = n - q as u64;
            let Some(p) = self.point_at(back) else { return false };
            if max_distance(current, p) >= self.threshold {
                return false;
            }
            // compare the last two windows of labels when both are in memory
            (0..q as u64).all(|i| match (back.checked_sub(q as u64 - i), self.label_at(n - q as u64 + i)) {
                (Some(earlier), Some(later)) => self.label_at(earlier).is_none_or(|e| e == later),
                _ => true,
            })
        })
    }
}

struct Candidate {
    orbit: VerifiedOrbit,
    /// Step whose point is expected to approach `z_0`.
    start: u64,
    /// Precision at which the bounded path can resolve `ε < δ (1 − ‖A‖)`.
    required_bits: u32,
    /// `δ (1 − ‖A‖)`
    enclosure_bound: Rational,
}

enum Outcome {
    Continue,
    CheckEnclosure,
    GiveUp(UndeterminedReason),
}

struct Certifier<'a> {
    sys: &'a ExtendedSystem,
    budget: &'a Budget,
    kernel: Kernel,
    detector: Detector,
    attempts: u32,
    rejected: HashSet<Itinerary>,
    candidate: Option<Candidate>,
    last_candidate_period: Option<usize>,
    exact_steps: u64,
    precision_bits: Option<u32>,
}

pub fn certify(sys: &ExtendedSystem, y0: &RVector, budget: &Budget) -> Result<OrbitVerdict> {
    if !sys.in_ball(y0) {
        return Err(Error::OutsideBall(sys.ball_radius()));
    }
    let gap = 1.0 - crate::arith::to_f64(sys.norm());
    let threshold = 2f64.powi(PROXIMITY_EXPONENT) * gap * 2.0 * crate::arith::to_f64(sys.r());
    let mut certifier = Certifier {
        sys,
        budget,
        kernel: Kernel::new(sys),
        detector: Detector::new(budget.max_period.max(1), threshold, 0),
        attempts: 0,
        rejected: HashSet::new(),
        candidate: None,
        last_candidate_period: None,
        exact_steps: 0,
        precision_bits: None,
    };
    let verdict = certifier.run(y0)?;
    if let OrbitVerdict::Certified(cert) = &verdict {
        if !recheck_certificate(sys, y0, cert, RECHECK_REPLAY_LIMIT).passed() {
            return Ok(certifier.undetermined(UndeterminedReason::RecheckFailed, cert.witness_step));
        }
    }
    Ok(verdict)
}

impl Certifier<'_> {
    fn undetermined(&self, reason: UndeterminedReason, steps: u64) -> OrbitVerdict {
        OrbitVerdict::Undetermined(Diagnostics {
            reason,
            steps,
            attempts: self.attempts,
            exact_steps: self.exact_steps,
            precision_bits: self.precision_bits,
            last_candidate_period: self.last_candidate_period,
        })
    }

    fn certificate(&self, n: u64, epsilon: Rational, enclosure: Enclosure) -> OrbitVerdict {
        let c = self.candidate.as_ref().expect("active candidate");
        OrbitVerdict::Certified(PeriodicOrbitCertificate {
            period: c.orbit.word.len(),
            word: c.orbit.word.clone(),
            point: c.orbit.orbit[0].clone(),
            orbit: c.orbit.orbit.clone(),
            delta: c.orbit.delta.clone(),
            witness_step: n,
            phase: 0,
            epsilon,
            enclosure,
            system_hash: self.sys.system_hash(),
        })
    }

    fn reject(&mut self, word: Itinerary) -> Option<UndeterminedReason> {
        self.rejected.insert(canonical_rotation(&word));
        self.attempts += 1;
        (self.attempts >= self.budget.max_attempts).then_some(UndeterminedReason::AttemptBudget)
    }

    /// Records step `n` and decides whether its point should be tested
    /// against the active candidate.
    fn track(&mut self, n: u64, label: Label, approx: Vec<f64>) -> Outcome {
        self.detector.push(label, approx);
        if let Some(c) = &self.candidate {
            let q = c.orbit.word.len() as u64;
            if n < c.start || (n - c.start) % q != 0 {
                return Outcome::Continue;
            }
            if n == c.start || self.detector.word_ending_at(n, q as usize).as_ref() == Some(&c.orbit.word) {
                return Outcome::CheckEnclosure;
            }
            let word = c.orbit.word.clone();
            self.candidate = None;
            self.detector.re_anchor(n);
            return match self.reject(word) {
                Some(reason) => Outcome::GiveUp(reason),
                None => Outcome::Continue,
            };
        }
        let Some(q) = self.detector.detect(n) else { return Outcome::Continue };
        let Some(word) = self.detector.word_ending_at(n, q) else { return Outcome::Continue };
        if self.rejected.contains(&canonical_rotation(&word.primitive_root())) {
            self.detector.re_anchor(n);
            return Outcome::Continue;
        }
        match verify_word(self.sys, &word) {
            Some(orbit) => {
                let q = orbit.word.len();
                self.last_candidate_period = Some(q);
                let enclosure_bound = &orbit.delta * (Rational::one() - self.sys.norm());
                let required_bits = precision_for(&(&enclosure_bound / Rational::from_integer(4.into())), self.sys.norm());
                self.candidate = Some(Candidate { orbit, start: n - q as u64, required_bits, enclosure_bound });
                Outcome::CheckEnclosure
            }
            None => {
                self.last_candidate_period = Some(word.primitive_period());
                self.detector.re_anchor(n);
                match self.reject(word.primitive_root()) {
                    Some(reason) => Outcome::GiveUp(reason),
                    None => Outcome::Continue,
                }
            }
        }
    }

    fn run(&mut self, y0: &RVector) -> Result<OrbitVerdict> {
        let mut y = ScaledPoint::from_rvector(y0);
        let mut n = 0u64;
        loop {
            if n >= self.budget.max_steps {
                self.exact_steps = n;
                return Ok(self.undetermined(UndeterminedReason::StepBudget, n));
            }
            if y.bit_size() > self.budget.bits_cap {
                break;
            }
            let (class, next) = self.kernel.step_exact(&y);
            if class.on_plane != 0 {
                let hyperplanes = (0..self.sys.dim()).filter(|j| class.on_plane >> j & 1 == 1).collect();
                return Ok(OrbitVerdict::HitDiscontinuity { step: n, hyperplanes });
            }
            match self.track(n, class.label, y.to_f64()) {
                Outcome::Continue => {}
                Outcome::GiveUp(reason) => return Ok(self.undetermined(reason, n)),
                Outcome::CheckEnclosure => {
                    let c = self.candidate.as_ref().expect("candidate");
                    let epsilon = y.to_rvector().distance(&c.orbit.orbit[0]);
                    if epsilon < c.enclosure_bound {
                        return Ok(self.certificate(n, epsilon, Enclosure::Exact));
                    }
                }
            }
            y = next;
            n += 1;
        }
        self.exact_steps = n;
        self.run_bounded(n, y.to_rvector())
    }

    fn run_bounded(&mut self, start: u64, snapshot: RVector) -> Result<OrbitVerdict> {
        let ceiling = Rational::one();
        let mut precision = DEFAULT_PRECISION_BITS.max(self.candidate.as_ref().map_or(0, |c| c.required_bits));
        let mut replay = false;
        'restart: loop {
            if u64::from(precision) > self.budget.bits_cap {
                return Ok(self.undetermined(UndeterminedReason::PrecisionBudget, start));
            }
            self.precision_bits = Some(precision);
            if replay {
                self.detector.reset(start);
            }
            replay = true;
            let mut state = BoundedFloatState::from_exact(&snapshot, precision);
            let mut n = start;
            loop {
                if n >= self.budget.max_steps {
                    return Ok(self.undetermined(UndeterminedReason::StepBudget, n));
                }
                let (class, next) = match self.kernel.step_bounded(&state, &ceiling) {
                    Ok(step) => step,
                    Err(Error::PrecisionExhausted { .. }) => {
                        precision *= 2;
                        continue 'restart;
                    }
                    Err(e) => return Err(e),
                };
                if class.ambiguous != 0 {
                    if state.error_radius().is_zero() && class.on_plane != 0 {
                        let hyperplanes = (0..self.sys.dim()).filter(|j| class.on_plane >> j & 1 == 1).collect();
                        return Ok(OrbitVerdict::HitDiscontinuity { step: n, hyperplanes });
                    }
                    precision *= 2;
                    continue 'restart;
                }
                match self.track(n, class.label, state.to_f64()) {
                    Outcome::Continue => {}
                    Outcome::GiveUp(reason) => return Ok(self.undetermined(reason, n)),
                    Outcome::CheckEnclosure => {
                        let c = self.candidate.as_ref().expect("candidate");
                        let epsilon = state.point().distance(&c.orbit.orbit[0]) + state.error_radius();
                        if epsilon < c.enclosure_bound {
                            return Ok(self.certificate(n, epsilon, Enclosure::Bounded { precision_bits: precision }));
                        }
                        if precision < c.required_bits {
                            precision = c.required_bits;
                            continue 'restart;
                        }
                    }
                }
                state = next;
                n += 1;
            }
        }
    }
}
