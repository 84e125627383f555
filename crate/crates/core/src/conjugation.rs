//! Translated coordinates `y = x − (I − A)^{-1} b`, the conjugated map `g_b`,
//! the parameter map `ρ` and the hyperplane labels `σ_μ`.

use std::fmt;

use num_traits::{One, Zero};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::arith::{int, RMatrix, RVector, Rational};
use crate::error::{Error, Result};
use crate::rotation::ContractedRotation;

/// `D_b = [0,1)^d − offset`, kept implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslatedCube {
    offset: RVector,
}

impl TranslatedCube {
    pub fn of(sys: &ContractedRotation) -> Self {
        TranslatedCube { offset: sys.resolvent_offset().clone() }
    }

    pub fn offset(&self) -> &RVector {
        &self.offset
    }

    pub fn contains(&self, y: &RVector) -> bool {
        y.dim() == self.offset.dim() && (y + &self.offset).in_unit_cube()
    }
}

/// `h_b(y) = y + (I − A)^{-1} b`
pub fn h_apply(sys: &ContractedRotation, y: &RVector) -> RVector {
    y + sys.resolvent_offset()
}

/// `h_b^{-1}(x) = x − (I − A)^{-1} b`
pub fn h_inverse(sys: &ContractedRotation, x: &RVector) -> RVector {
    x - sys.resolvent_offset()
}

/// `g_b(y) = A y − e_b(h_b(y))` on `D_b`.
pub fn apply_g(sys: &ContractedRotation, y: &RVector) -> Result<RVector> {
    if !TranslatedCube::of(sys).contains(y) {
        return Err(Error::OutsideTranslatedCube);
    }
    let code = sys.code_e(&h_apply(sys, y))?;
    Ok(&sys.matrix().mul_vec(y) - &code.to_rvector())
}

/// `μ_j = ((χ(b) − (I − A)^{-1} b)_j + 1) / ‖A^{(j)}‖` with the row norm
/// `‖A^{(j)}‖ = Σ_l |a_jl|`.
pub fn rho(sys: &ContractedRotation) -> RVector {
    let chi = sys.chi();
    let offset = sys.resolvent_offset();
    (0..sys.dim())
        .map(|j| (int(chi.0[j]) - &offset[j] + Rational::one()) / sys.matrix().row_abs_sum(j))
        .collect()
}

/// A sign pattern in `{−1, +1}^d`, stored as the bits of `p` with
/// `(−1)^p = signs`: bit `j` is set iff sign `j` is `−1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    mask: u32,
    dim: u8,
}

impl Label {
    pub fn from_p(p: &[u8]) -> Self {
        assert!(p.len() <= 32 && p.iter().all(|&b| b <= 1), "p must be a 0/1 vector");
        let mask = p.iter().enumerate().fold(0u32, |m, (j, &b)| m | (u32::from(b) << j));
        Label { mask, dim: p.len() as u8 }
    }

    pub fn from_signs(signs: &[i8]) -> Self {
        let p: Vec<u8> = signs
            .iter()
            .map(|&s| match s {
                1 => 0,
                -1 => 1,
                _ => panic!("label signs must be ±1"),
            })
            .collect();
        Label::from_p(&p)
    }

    pub fn from_mask(mask: u32, dim: usize) -> Self {
        debug_assert!(dim <= 32);
        Label { mask, dim: dim as u8 }
    }

    /// The label `(+1, …, +1)`.
    pub fn all_plus(dim: usize) -> Self {
        Label { mask: 0, dim: dim as u8 }
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn dim(&self) -> usize {
        usize::from(self.dim)
    }

    pub fn p(&self) -> Vec<u8> {
        (0..self.dim()).map(|j| ((self.mask >> j) & 1) as u8).collect()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.p().into_iter().map(|b| if b == 0 { 1 } else { -1 }).collect()
    }

    /// Every label of dimension `d`.
    pub fn all(d: usize) -> impl Iterator<Item = Label> {
        (0u32..1 << d).map(move |mask| Label::from_mask(mask, d))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<&str> = self.signs().iter().map(|&s| if s > 0 { "+" } else { "-" }).collect();
        write!(f, "[{}]", s.join(""))
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.signs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let signs: Vec<i8> = Vec::deserialize(d)?;
        if signs.len() > 32 || signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(de::Error::custom("label entries must be +1 or -1"));
        }
        Ok(Label::from_signs(&signs))
    }
}

/// The hyperplanes `H_j(μ) = {⟨v^{(j)}, y⟩ = μ_j}` with `v^{(j)} = A^{(j)} / ‖A^{(j)}‖`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelArrangement {
    mu: RVector,
    directions: Vec<RVector>,
}

impl LabelArrangement {
    pub fn new(a: &RMatrix, mu: RVector) -> Result<Self> {
        if mu.dim() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: mu.dim() });
        }
        let directions = (0..a.dim())
            .map(|j| {
                let norm = a.row_abs_sum(j);
                if norm.is_zero() {
                    return Err(Error::Singular);
                }
                Ok(a.row(j).scale(&norm.recip()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabelArrangement { mu, directions })
    }

    pub fn for_rotation(sys: &ContractedRotation) -> Self {
        LabelArrangement::new(sys.matrix(), rho(sys)).expect("rows of an invertible matrix are nonzero")
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn mu(&self) -> &RVector {
        &self.mu
    }

    pub fn directions(&self) -> &[RVector] {
        &self.directions
    }

    /// `⟨v^{(j)}, y⟩ − μ_j`. Since `‖v^{(j)}‖_1 = 1` its absolute value is the
    /// max-norm distance from `y` to `H_j(μ)`.
    pub fn signed_gap(&self, j: usize, y: &RVector) -> Rational {
        self.directions[j].dot(y) - &self.mu[j]
    }

    /// `σ_μ(y)`: `+1` strictly below a hyperplane, `−1` on or above it.
    pub fn label(&self, y: &RVector) -> Label {
        let mask = (0..self.dim()).fold(0u32, |m, j| {
            if self.directions[j].dot(y) >= self.mu[j] {
                m | 1 << j
            } else {
                m
            }
        });
        Label::from_mask(mask, self.dim())
    }

    /// Indices `j` (0-based) with `y ∈ H_j(μ)`.
    pub fn on_hyperplane(&self, y: &RVector) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.signed_gap(j, y).is_zero()).collect()
    }
}

pub fn label_sigma(arrangement: &LabelArrangement, y: &RVector) -> Label {
    arrangement.label(y)
}

pub fn on_hyperplane(arrangement: &LabelArrangement, y: &RVector) -> Vec<usize> {
    arrangement.on_hyperplane(y)
}
