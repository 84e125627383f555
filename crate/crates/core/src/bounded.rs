//! Fixed-precision dyadic iteration with a sound error radius.
//!
//! A state holds mantissas `m_j` standing for `m_j / 2^P` together with a
//! radius `e` such that the exact orbit point it shadows lies within `e` in
//! the max-norm. Every affine step is evaluated exactly and rounded once to
//! the nearest multiple of `2^-P`, so the per-step rounding error is at most
//! `u = 2^-(P+1)` and the radius follows `e' = ‖A‖ e + u`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{approx_f64, floor_int, RMatrix, RVector, Rational};
use crate::error::{Error, Result};

/// Extra bits of the grid on which radii are rounded upward.
const RADIUS_GUARD_BITS: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedFloatState {
    mantissas: Vec<BigInt>,
    precision_bits: u32,
    error_radius: Rational,
}

pub fn rounding_unit(precision_bits: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << (precision_bits + 1))
}

/// Nearest integer to `n / d` for `d > 0`, ties rounded up.
fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (n * &two + d).div_floor(&(d * two))
}

/// Smallest multiple of `2^-(P + guard)` that is `≥ q`.
fn round_radius_up(q: &Rational, precision_bits: u32) -> Rational {
    let scale = BigInt::one() << (precision_bits + RADIUS_GUARD_BITS);
    let scaled = q * Rational::from_integer(scale.clone());
    let ceil = -floor_int(&-scaled);
    Rational::new(ceil, scale)
}

impl BoundedFloatState {
    /// Rounds an exact point to the nearest dyadic grid point. The radius is
    /// the rounding error bound, or zero when the point is representable.
    pub fn from_exact(x: &RVector, precision_bits: u32) -> Self {
        let scale = BigInt::one() << precision_bits;
        let mut inexact = false;
        let mantissas = x
            .iter()
            .map(|c| {
                let scaled = c.numer() * &scale;
                if !scaled.is_multiple_of(c.denom()) {
                    inexact = true;
                }
                round_div(&scaled, c.denom())
            })
            .collect();
        let error_radius = if inexact { rounding_unit(precision_bits) } else { Rational::zero() };
        BoundedFloatState { mantissas, precision_bits, error_radius }
    }

    pub fn dim(&self) -> usize {
        self.mantissas.len()
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn error_radius(&self) -> &Rational {
        &self.error_radius
    }

    pub fn mantissas(&self) -> &[BigInt] {
        &self.mantissas
    }

    /// The dyadic point as an exact vector.
    pub fn point(&self) -> RVector {
        let scale = BigInt::one() << self.precision_bits;
        self.mantissas.iter().map(|m| Rational::new(m.clone(), scale.clone())).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let scale = BigInt::one() << self.precision_bits;
        self.mantissas.iter().map(|m| approx_f64(m, &scale)).collect()
    }

    pub fn rounding_unit(&self) -> Rational {
        rounding_unit(self.precision_bits)
    }

    /// True iff `x` lies within the error radius of the dyadic point.
    pub fn encloses(&self, x: &RVector) -> bool {
        self.point().distance(x) <= self.error_radius
    }
}

/// `A` brought to a common denominator so each step is pure integer work.
#[derive(Clone, Debug)]
pub struct BoundedStepper {
    numer: Vec<Vec<BigInt>>,
    denom: BigInt,
    norm: Rational,
}

impl BoundedStepper {
    pub fn new(a: &RMatrix) -> Self {
        let denom = a
            .rows()
            .iter()
            .flat_map(|r| r.iter())
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let numer = a
            .rows()
            .iter()
            .map(|r| r.iter().map(|q| q.numer() * (&denom / q.denom())).collect())
            .collect();
        BoundedStepper { numer, denom, norm: a.inf_norm() }
    }

    pub fn norm(&self) -> &Rational {
        &self.norm
    }

    /// Common denominator `a` of the matrix entries.
    pub fn denom(&self) -> &BigInt {
        &self.denom
    }

    /// `2^P · a · (A y)_j` for the dyadic point `y`, as exact integers.
    pub fn scaled_products(&self, state: &BoundedFloatState) -> Vec<BigInt> {
        self.numer
            .iter()
            .map(|row| row.iter().zip(&state.mantissas).map(|(a, m)| a * m).sum())
            .collect()
    }

    fn next_radius(&self, state: &BoundedFloatState, ceiling: &Rational) -> Result<Rational> {
        let raw = &self.norm * &state.error_radius + state.rounding_unit();
        let radius = round_radius_up(&raw, state.precision_bits);
        if radius > *ceiling {
            return Err(Error::PrecisionExhausted { radius, ceiling: ceiling.clone() });
        }
        Ok(radius)
    }

    /// One step of `y ↦ A y + t` with a rational translation.
    pub fn step(&self, state: &BoundedFloatState, t: &RVector, ceiling: &Rational) -> Result<BoundedFloatState> {
        if t.dim() != state.dim() {
            return Err(Error::DimensionMismatch { expected: state.dim(), found: t.dim() });
        }
        let error_radius = self.next_radius(state, ceiling)?;
        let scale = BigInt::one() << state.precision_bits;
        let mantissas = self
            .scaled_products(state)
            .into_iter()
            .zip(t.iter())
            .map(|(s, tj)| {
                // round(s / a + 2^P t_j) over the common denominator a·den(t_j)
                let n = s * tj.denom() + &scale * tj.numer() * &self.denom;
                round_div(&n, &(&self.denom * tj.denom()))
            })
            .collect();
        Ok(BoundedFloatState { mantissas, precision_bits: state.precision_bits, error_radius })
    }

    /// One step of `y ↦ A y − shift` for an integer shift, reusing precomputed
    /// products `scaled_products(state)`.
    pub fn step_integer_shift(
        &self,
        state: &BoundedFloatState,
        products: &[BigInt],
        shift: &[i64],
        ceiling: &Rational,
    ) -> Result<BoundedFloatState> {
        let error_radius = self.next_radius(state, ceiling)?;
        let mantissas = products
            .iter()
            .zip(shift)
            .map(|(s, &k)| round_div(s, &self.denom) - (BigInt::from(k) << state.precision_bits))
            .collect();
        Ok(BoundedFloatState { mantissas, precision_bits: state.precision_bits, error_radius })
    }
}

/// Rounded image of `y ↦ A y + t` with radius `‖A‖ e + u`; fails once the
/// radius would exceed `ceiling`.
pub fn step_bounded(
    state: &BoundedFloatState,
    a: &RMatrix,
    t: &RVector,
    ceiling: &Rational,
) -> Result<BoundedFloatState> {
    BoundedStepper::new(a).step(state, t, ceiling)
}

/// Smallest precision whose steady-state radius `2^-P / (1 − ‖A‖)` is below
/// `target`.
pub fn precision_for(target: &Rational, norm: &Rational) -> u32 {
    assert!(target.is_positive() && *norm < Rational::one());
    let bound = target * (Rational::one() - norm);
    let mut bits = 1u32;
    while Rational::new(BigInt::one(), BigInt::one() << bits) >= bound {
        bits += 1;
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    fn huge() -> Rational {
        int(1)
    }

    #[test]
    fn zero_matrix_resets_radius() {
        let mut state = BoundedFloatState::from_exact(&RVector::new(vec![rat(1, 3)]), 40);
        state.error_radius = rat(1, 8);
        let next = step_bounded(&state, &RMatrix::zeros(1), &RVector::new(vec![rat(1, 7)]), &huge()).unwrap();
        assert_eq!(next.error_radius, rounding_unit(40));
    }

    #[test]
    fn steady_state_radius_is_stable() {
        let p = 30;
        let u = rounding_unit(p);
        let a = RMatrix::from_fractions(&[&[(1, 4), (-1, 4)], &[(0, 1), (1, 2)]]);
        let mut state = BoundedFloatState::from_exact(&RVector::new(vec![rat(1, 3), rat(2, 3)]), p);
        state.error_radius = &u * int(2);
        let t = RVector::new(vec![rat(1, 5), rat(-1, 9)]);
        for _ in 0..50 {
            state = step_bounded(&state, &a, &t, &huge()).unwrap();
            assert!(state.error_radius <= &u * int(2));
        }
    }

    #[test]
    fn first_step_from_exact_input() {
        let state = BoundedFloatState::from_exact(&RVector::new(vec![rat(1, 2), rat(1, 4)]), 16);
        assert!(state.error_radius.is_zero());
        let a = RMatrix::from_fractions(&[&[(1, 3), (0, 1)], &[(0, 1), (1, 3)]]);
        let next = step_bounded(&state, &a, &RVector::zeros(2), &huge()).unwrap();
        assert_eq!(next.error_radius, rounding_unit(16));
    }

    #[test]
    fn ceiling_signals_exhaustion() {
        let state = BoundedFloatState::from_exact(&RVector::new(vec![rat(1, 3)]), 4);
        let a = RMatrix::from_fractions(&[&[(1, 3)]]);
        let err = step_bounded(&state, &a, &RVector::zeros(1), &rat(1, 1000)).unwrap_err();
        assert!(matches!(err, Error::PrecisionExhausted { .. }));
    }

    #[test]
    fn integer_shift_matches_generic_step() {
        let a = RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]]);
        let stepper = BoundedStepper::new(&a);
        let state = BoundedFloatState::from_exact(&RVector::new(vec![rat(-22, 7), rat(5, 13)]), 64);
        let products = stepper.scaled_products(&state);
        let via_shift = stepper.step_integer_shift(&state, &products, &[1, -1], &huge()).unwrap();
        let via_generic = stepper.step(&state, &RVector::from_ints(&[-1, 1]), &huge()).unwrap();
        assert_eq!(via_shift, via_generic);
    }

    #[test]
    fn shadowing_holds_over_a_thousand_steps() {
        let a = RMatrix::from_fractions(&[&[(3, 7), (-2, 9)], &[(1, 5), (3, 5)]]);
        let t = RVector::new(vec![rat(1, 3), rat(-5, 11)]);
        let mut exact = RVector::new(vec![rat(2, 3), rat(-1, 6)]);
        let mut state = BoundedFloatState::from_exact(&exact, 48);
        for _ in 0..1000 {
            exact = &a.mul_vec(&exact) + &t;
            state = step_bounded(&state, &a, &t, &huge()).unwrap();
            assert!(state.encloses(&exact));
        }
    }

    #[test]
    fn precision_selection_meets_target() {
        let norm = rat(9, 10);
        let target = rat(1, 1000);
        let p = precision_for(&target, &norm);
        let steady = Rational::new(BigInt::one(), BigInt::one() << p) / (int(1) - &norm);
        assert!(steady < target);
        let coarser = Rational::new(BigInt::one(), BigInt::one() << (p - 1)) / (int(1) - &norm);
        assert!(coarser >= target);
    }
}
