//! Finite itineraries and their composed affine maps `φ^α(y) = A^n y + r_α`.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::arith::{solve_resolvent, RMatrix, RVector};
use crate::conjugation::Label;
use crate::error::Result;

/// A word `α = (i_0, …, i_{n−1})` of labels; `i_0` is applied first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Itinerary(Vec<Label>);

impl Itinerary {
    pub fn new(letters: Vec<Label>) -> Self {
        Itinerary(letters)
    }

    pub fn letters(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word read from position `m` onwards, wrapping around.
    pub fn rotated(&self, m: usize) -> Itinerary {
        let mut letters = self.0.clone();
        let len = letters.len();
        if len > 0 {
            letters.rotate_left(m % len);
        }
        Itinerary(letters)
    }

    /// Length of the shortest `β` with `α = β^j`.
    pub fn primitive_period(&self) -> usize {
        let n = self.0.len();
        (1..=n)
            .find(|&q| n % q == 0 && (q..n).all(|i| self.0[i] == self.0[i - q]))
            .unwrap_or(0)
    }

    pub fn primitive_root(&self) -> Itinerary {
        Itinerary(self.0[..self.primitive_period()].to_vec())
    }

    /// Letters as `p`-vectors in `{0,1}^d`.
    pub fn as_p_vectors(&self) -> Vec<Vec<u8>> {
        self.0.iter().map(Label::p).collect()
    }
}

impl Serialize for Itinerary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_p_vectors().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Itinerary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let letters: Vec<Vec<u8>> = Vec::deserialize(d)?;
        if letters.iter().any(|p| p.len() > 32 || p.iter().any(|&b| b > 1)) {
            return Err(de::Error::custom("itinerary letters must be 0/1 vectors"));
        }
        Ok(Itinerary(letters.iter().map(|p| Label::from_p(p)).collect()))
    }
}

/// `y ↦ power · y + shift`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineWord {
    pub power: RMatrix,
    pub shift: RVector,
}

impl AffineWord {
    pub fn identity(d: usize) -> Self {
        AffineWord { power: RMatrix::identity(d), shift: RVector::zeros(d) }
    }

    pub fn apply(&self, y: &RVector) -> RVector {
        &self.power.mul_vec(y) + &self.shift
    }

    /// The unique fixed point; requires `‖power‖ < 1`, which holds for every
    /// non-empty word of a contraction.
    pub fn fixed_point(&self) -> Result<RVector> {
        solve_resolvent(&self.power, &self.shift)
    }
}

/// `φ^α = φ_{i_{n−1}} ∘ ⋯ ∘ φ_{i_0}` with `φ_i(y) = A y − (k + p)`.
pub fn compose_word(a: &RMatrix, k: &[i64], word: &Itinerary) -> AffineWord {
    word.letters().iter().fold(AffineWord::identity(a.dim()), |acc, letter| {
        let shift: Vec<i64> = k.iter().zip(letter.p()).map(|(k, p)| k + i64::from(p)).collect();
        AffineWord {
            power: a * &acc.power,
            shift: &a.mul_vec(&acc.shift) - &RVector::from_ints(&shift),
        }
    })
}
