//! Seeded exact samplers for translations, matrices and points.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{floor_int, serde_rational, RMatrix, RVector, Rational};
use crate::error::{Error, Result};

/// Denominator exponent of random translations.
pub const TRANSLATION_BITS: u32 = 31;

/// A generator for sample `index` of the run seeded with `seed`; independent
/// of how samples are scheduled across threads.
pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on `{0, 1/2^bits, …, 1 − 1/2^bits}`.
pub fn random_unit(rng: &mut impl Rng, bits: u32) -> Rational {
    let n: u64 = rng.random_range(0..1u64 << bits);
    Rational::new(BigInt::from(n), BigInt::one() << bits)
}

pub fn random_unit_vector(rng: &mut impl Rng, d: usize, bits: u32) -> RVector {
    (0..d).map(|_| random_unit(rng, bits)).collect()
}

/// Uniform on the dyadic grid of `[lo, hi]` with spacing `(hi − lo)/2^bits`,
/// endpoints included.
pub fn random_in_interval(rng: &mut impl Rng, lo: &Rational, hi: &Rational, bits: u32) -> Rational {
    let n: u64 = rng.random_range(0..=1u64 << bits);
    lo + (hi - lo) * Rational::new(BigInt::from(n), BigInt::one() << bits)
}

/// Random invertible matrices with entries `n / 2^bits` and `‖A‖ ≤ norm_bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSampler {
    pub denominator_bits: u32,
    #[serde(with = "serde_rational")]
    pub norm_bound: Rational,
}

impl MatrixSampler {
    pub fn new(denominator_bits: u32, norm_bound: Rational) -> Result<Self> {
        let sampler = MatrixSampler { denominator_bits, norm_bound };
        sampler.validate(1)?;
        Ok(sampler)
    }

    /// Largest admissible numerator magnitude per entry at dimension `d`.
    fn entry_bound(&self, d: usize) -> i64 {
        let scaled = &self.norm_bound * Rational::from_integer(BigInt::one() << self.denominator_bits);
        let per_entry = floor_int(&(scaled / Rational::from_integer(BigInt::from(d))));
        i64::try_from(per_entry).unwrap_or(i64::MAX)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !self.norm_bound.is_positive() || self.norm_bound >= Rational::one() {
            return Err(Error::Invalid("norm bound must lie in (0, 1)".into()));
        }
        if self.denominator_bits == 0 || self.denominator_bits > 40 {
            return Err(Error::Invalid("matrix denominator bits must lie in 1..=40".into()));
        }
        if d == 0 || self.entry_bound(d) < 1 {
            return Err(Error::Invalid(format!("no nonzero entries fit the norm bound at dimension {d}")));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng, d: usize) -> Result<RMatrix> {
        self.validate(d)?;
        let bound = self.entry_bound(d);
        let denom = BigInt::one() << self.denominator_bits;
        loop {
            let rows: Vec<Vec<Rational>> = (0..d)
                .map(|_| {
                    (0..d)
                        .map(|_| Rational::new(BigInt::from(rng.random_range(-bound..=bound)), denom.clone()))
                        .collect()
                })
                .collect();
            let a = RMatrix::from_rows(rows)?;
            if !a.determinant().is_zero() {
                return Ok(a);
            }
        }
    }
}
