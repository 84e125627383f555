//! Integer-only stepping of `G_μ` for long orbits.
//!
//! Exact points are kept as integer numerators over one common denominator,
//! which avoids a gcd per component per step. The label of row `j` is decided
//! by comparing `(A y)_j` with `θ_j = μ_j ‖A^{(j)}‖`, equivalent to comparing
//! `⟨v^{(j)}, y⟩` with `μ_j`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{approx_f64, RVector, Rational};
use crate::bounded::{BoundedFloatState, BoundedStepper};
use crate::conjugation::Label;
use crate::error::Result;
use crate::extension::ExtendedSystem;

/// Reduce common factors every this many steps.
const REDUCE_EVERY: u64 = 16;

#[derive(Clone, Debug)]
pub(crate) struct ScaledPoint {
    numer: Vec<BigInt>,
    denom: BigInt,
}

impl ScaledPoint {
    pub fn from_rvector(y: &RVector) -> Self {
        let denom = y.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let numer = y.iter().map(|q| q.numer() * (&denom / q.denom())).collect();
        ScaledPoint { numer, denom }
    }

    pub fn to_rvector(&self) -> RVector {
        self.numer.iter().map(|n| Rational::new(n.clone(), self.denom.clone())).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.numer.iter().map(|n| approx_f64(n, &self.denom)).collect()
    }

    pub fn bit_size(&self) -> u64 {
        self.denom.bits() + self.numer.iter().map(BigInt::bits).max().unwrap_or(0)
    }

    fn reduce(&mut self) {
        let g = self.numer.iter().fold(self.denom.clone(), |g, n| g.gcd(n));
        if !g.is_one() && !g.is_zero() {
            for n in &mut self.numer {
                *n /= &g;
            }
            self.denom /= &g;
        }
    }
}

/// Label of a point plus the rows whose hyperplane it lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Classified {
    pub label: Label,
    /// Bit `j` set iff the point lies on `H_j(μ)`.
    pub on_plane: u32,
}

/// Bounded-mode classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct BoundedClassified {
    pub label: Label,
    /// Bit `j` set iff the error ball meets `H_j(μ)`.
    pub ambiguous: u32,
    /// Bit `j` set iff the dyadic point itself lies on `H_j(μ)`.
    pub on_plane: u32,
}

#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    dim: usize,
    k: Vec<i64>,
    mat_numer: Vec<Vec<BigInt>>,
    mat_denom: BigInt,
    /// `θ_j · thr_denom`
    thr_numer: Vec<BigInt>,
    thr_denom: BigInt,
    /// `‖A^{(j)}‖`
    row_norms: Vec<Rational>,
    bounded: BoundedStepper,
    steps: u64,
}

impl Kernel {
    pub fn new(sys: &ExtendedSystem) -> Self {
        let a = sys.matrix();
        let dim = a.dim();
        let bounded = BoundedStepper::new(a);
        let mat_denom = bounded.denom().clone();
        let mat_numer = a
            .rows()
            .iter()
            .map(|r| r.iter().map(|q| q.numer() * (&mat_denom / q.denom())).collect())
            .collect();
        let row_norms: Vec<Rational> = (0..dim).map(|j| a.row_abs_sum(j)).collect();
        let thresholds: Vec<Rational> = (0..dim).map(|j| &sys.mu()[j] * &row_norms[j]).collect();
        let thr_denom = thresholds.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let thr_numer = thresholds.iter().map(|q| q.numer() * (&thr_denom / q.denom())).collect();
        Kernel {
            dim,
            k: sys.k().to_vec(),
            mat_numer,
            mat_denom,
            thr_numer,
            thr_denom,
            row_norms,
            bounded,
            steps: 0,
        }
    }

    fn shift(&self, label: Label) -> Vec<i64> {
        let mask = label.mask();
        self.k.iter().enumerate().map(|(j, k)| k + i64::from((mask >> j) & 1 == 1)).collect()
    }

    /// Classifies `y` and returns the next exact point.
    pub fn step_exact(&mut self, y: &ScaledPoint) -> (Classified, ScaledPoint) {
        let products: Vec<BigInt> = self
            .mat_numer
            .iter()
            .map(|row| row.iter().zip(&y.numer).map(|(a, n)| a * n).sum())
            .collect();
        // (A y)_j = products_j / (a D)
        let scale = &self.mat_denom * &y.denom;
        let mut mask = 0u32;
        let mut on_plane = 0u32;
        for (j, s) in products.iter().enumerate() {
            let lhs = s * &self.thr_denom;
            let rhs = &self.thr_numer[j] * &scale;
            if lhs >= rhs {
                mask |= 1 << j;
                if lhs == rhs {
                    on_plane |= 1 << j;
                }
            }
        }
        let label = Label::from_mask(mask, self.dim);
        let numer = products
            .into_iter()
            .zip(self.shift(label))
            .map(|(s, c)| s - &scale * BigInt::from(c))
            .collect();
        let mut next = ScaledPoint { numer, denom: scale };
        self.steps += 1;
        if self.steps % REDUCE_EVERY == 0 {
            next.reduce();
        }
        (Classified { label, on_plane }, next)
    }

    /// Classifies the dyadic point with its error ball and returns the next state.
    pub fn step_bounded(
        &self,
        state: &BoundedFloatState,
        ceiling: &Rational,
    ) -> Result<(BoundedClassified, BoundedFloatState)> {
        let products = self.bounded.scaled_products(state);
        // (A ỹ)_j = products_j / (a 2^P)
        let scale = &self.mat_denom << state.precision_bits();
        let radius = state.error_radius();
        let mut mask = 0u32;
        let mut ambiguous = 0u32;
        let mut on_plane = 0u32;
        for (j, s) in products.iter().enumerate() {
            // gap · a 2^P · thr_denom
            let gap = s * &self.thr_denom - &self.thr_numer[j] * &scale;
            if !gap.is_negative() {
                mask |= 1 << j;
            }
            if gap.is_zero() {
                on_plane |= 1 << j;
            }
            // |⟨A^{(j)}, y − ỹ⟩| ≤ ‖A^{(j)}‖ · radius
            let slack = radius * &self.row_norms[j];
            let lhs = gap.abs() * slack.denom();
            let rhs = slack.numer() * &scale * &self.thr_denom;
            if lhs <= rhs {
                ambiguous |= 1 << j;
            }
        }
        let label = Label::from_mask(mask, self.dim);
        let next = self.bounded.step_integer_shift(state, &products, &self.shift(label), ceiling)?;
        Ok((BoundedClassified { label, ambiguous, on_plane }, next))
    }
}
