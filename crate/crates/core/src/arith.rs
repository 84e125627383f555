//! Exact rational scalars, vectors and square matrices.
//!
//! All norms are max-norms: `‖x‖ = max_j |x_j|` for vectors and the induced
//! row-sum norm `‖A‖ = max_j Σ_l |a_jl|` for matrices.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Integer vector, the result of a component-wise floor.
pub type IntVector = Vec<BigInt>;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, integers and plain decimals (`"-0.125"`, `"3."`, `".5"`)
/// into an exact rational.
pub fn parse_rational(input: &str) -> Result<Rational> {
    let s = input.trim();
    let err = || Error::ParseRational(input.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{whole}{frac}");
    let numer = BigInt::from_str(&digits).map_err(|_| err())?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let q = Rational::new(numer, denom);
    Ok(if negative { -q } else { q })
}

/// Canonical `"p/q"` form; integers are written with denominator 1.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn floor_int(q: &Rational) -> BigInt {
    q.numer().div_floor(q.denom())
}

/// Floor as `i64`, `None` on overflow.
pub fn floor_i64(q: &Rational) -> Option<i64> {
    floor_int(q).to_i64()
}

/// Bits needed to write the numerator and the denominator.
pub fn bit_size(q: &Rational) -> u64 {
    q.numer().bits() + q.denom().bits()
}

/// Float approximation that never builds huge intermediate floats.
pub fn approx_f64(numer: &BigInt, denom: &BigInt) -> f64 {
    let shift = denom.bits().saturating_sub(60);
    let n = numer >> shift;
    let d = denom >> shift;
    let (n, d) = (n.to_f64().unwrap_or(f64::NAN), d.to_f64().unwrap_or(f64::NAN));
    n / d
}

pub fn to_f64(q: &Rational) -> f64 {
    approx_f64(q.numer(), q.denom())
}

/// Exact vector in Q^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RVector(Vec<Rational>);

impl RVector {
    pub fn new(components: Vec<Rational>) -> Self {
        RVector(components)
    }

    pub fn zeros(d: usize) -> Self {
        RVector(vec![Rational::zero(); d])
    }

    pub fn from_ints(values: &[i64]) -> Self {
        RVector(values.iter().map(|&v| int(v)).collect())
    }

    pub fn from_big_ints(values: &[BigInt]) -> Self {
        RVector(values.iter().cloned().map(Rational::from_integer).collect())
    }

    pub fn parse(values: &[&str]) -> Result<Self> {
        values.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>().map(RVector)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot(&self, other: &RVector) -> Rational {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, c: &Rational) -> RVector {
        RVector(self.0.iter().map(|x| x * c).collect())
    }

    pub fn inf_norm(&self) -> Rational {
        inf_norm_vector(self)
    }

    /// `‖self − other‖`
    pub fn distance(&self, other: &RVector) -> Rational {
        (self - other).inf_norm()
    }

    /// True iff every component lies in `[0, 1)`.
    pub fn in_unit_cube(&self) -> bool {
        let one = Rational::one();
        self.0.iter().all(|x| !x.is_negative() && *x < one)
    }

    /// Largest bit size of any component.
    pub fn max_bit_size(&self) -> u64 {
        self.0.iter().map(bit_size).max().unwrap_or(0)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

impl Index<usize> for RVector {
    type Output = Rational;

    fn index(&self, j: usize) -> &Rational {
        &self.0[j]
    }
}

impl FromIterator<Rational> for RVector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        RVector(iter.into_iter().collect())
    }
}

impl<'a> Add<&'a RVector> for &'a RVector {
    type Output = RVector;

    fn add(self, rhs: &'a RVector) -> RVector {
        assert_eq!(self.dim(), rhs.dim(), "vector dimensions differ");
        self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect()
    }
}

impl<'a> Sub<&'a RVector> for &'a RVector {
    type Output = RVector;

    fn sub(self, rhs: &'a RVector) -> RVector {
        assert_eq!(self.dim(), rhs.dim(), "vector dimensions differ");
        self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect()
    }
}

impl Neg for &RVector {
    type Output = RVector;

    fn neg(self) -> RVector {
        self.0.iter().map(|a| -a).collect()
    }
}

impl fmt::Display for RVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, x) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Square exact matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RMatrix {
    rows: Vec<RVector>,
}

impl RMatrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        Ok(RMatrix { rows: rows.into_iter().map(RVector).collect() })
    }

    /// Builds from `(numerator, denominator)` pairs; panics on a ragged grid.
    pub fn from_fractions(rows: &[&[(i64, i64)]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect())
            .collect();
        RMatrix::from_rows(rows).expect("square matrix")
    }

    pub fn parse(rows: &[&[&str]]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        RMatrix::from_rows(rows)
    }

    pub fn identity(d: usize) -> Self {
        let rows = (0..d)
            .map(|j| (0..d).map(|l| if j == l { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        RMatrix { rows }
    }

    pub fn zeros(d: usize) -> Self {
        RMatrix { rows: vec![RVector::zeros(d); d] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, j: usize) -> &RVector {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[RVector] {
        &self.rows
    }

    pub fn get(&self, j: usize, l: usize) -> &Rational {
        &self.rows[j].0[l]
    }

    pub fn mul_vec(&self, x: &RVector) -> RVector {
        assert_eq!(self.dim(), x.dim(), "matrix/vector dimensions differ");
        self.rows.iter().map(|row| row.dot(x)).collect()
    }

    pub fn transpose(&self) -> RMatrix {
        let d = self.dim();
        let rows = (0..d).map(|l| (0..d).map(|j| self.get(j, l).clone()).collect()).collect();
        RMatrix { rows }
    }

    /// `Σ_l |a_jl|`, the max-norm of the row seen as a linear functional.
    pub fn row_abs_sum(&self, j: usize) -> Rational {
        self.rows[j].iter().map(|a| a.abs()).sum()
    }

    pub fn inf_norm(&self) -> Rational {
        inf_norm_matrix(self)
    }

    pub fn determinant(&self) -> Rational {
        let mut m: Vec<Vec<Rational>> = self.rows.iter().map(|r| r.0.clone()).collect();
        let d = m.len();
        let mut det = Rational::one();
        for col in 0..d {
            let Some(pivot) = (col..d).find(|&r| !m[r][col].is_zero()) else {
                return Rational::zero();
            };
            if pivot != col {
                m.swap(pivot, col);
                det = -det;
            }
            det *= &m[col][col];
            for r in col + 1..d {
                if m[r][col].is_zero() {
                    continue;
                }
                let factor = &m[r][col] / &m[col][col];
                for c in col..d {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
        det
    }

    /// Solves `self · v = rhs` by exact Gaussian elimination.
    pub fn solve(&self, rhs: &RVector) -> Result<RVector> {
        let d = self.dim();
        if rhs.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: rhs.dim() });
        }
        let mut m: Vec<Vec<Rational>> = self
            .rows
            .iter()
            .zip(rhs.iter())
            .map(|(row, b)| {
                let mut r = row.0.clone();
                r.push(b.clone());
                r
            })
            .collect();
        for col in 0..d {
            // any exact nonzero pivot is as good as another
            let pivot = (col..d).find(|&r| !m[r][col].is_zero()).ok_or(Error::Singular)?;
            m.swap(pivot, col);
            let inv = m[col][col].recip();
            for c in col..=d {
                m[col][c] *= &inv;
            }
            for r in 0..d {
                if r == col || m[r][col].is_zero() {
                    continue;
                }
                let factor = m[r][col].clone();
                for c in col..=d {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
        Ok(m.into_iter().map(|mut r| r.pop().expect("augmented column")).collect())
    }

    pub fn max_bit_size(&self) -> u64 {
        self.rows.iter().map(RVector::max_bit_size).max().unwrap_or(0)
    }
}

impl<'a> Mul<&'a RMatrix> for &'a RMatrix {
    type Output = RMatrix;

    fn mul(self, rhs: &'a RMatrix) -> RMatrix {
        assert_eq!(self.dim(), rhs.dim(), "matrix dimensions differ");
        let t = rhs.transpose();
        let rows = self.rows.iter().map(|r| t.rows.iter().map(|c| r.dot(c)).collect()).collect();
        RMatrix { rows }
    }
}

impl<'a> Sub<&'a RMatrix> for &'a RMatrix {
    type Output = RMatrix;

    fn sub(self, rhs: &'a RMatrix) -> RMatrix {
        assert_eq!(self.dim(), rhs.dim(), "matrix dimensions differ");
        RMatrix { rows: self.rows.iter().zip(&rhs.rows).map(|(a, b)| a - b).collect() }
    }
}

pub fn inf_norm_vector(x: &RVector) -> Rational {
    x.iter().map(|c| c.abs()).max().unwrap_or_else(Rational::zero)
}

pub fn inf_norm_matrix(a: &RMatrix) -> Rational {
    (0..a.dim()).map(|j| a.row_abs_sum(j)).max().unwrap_or_else(Rational::zero)
}

/// Exact solution of `(I − A) v = b`, defined whenever `‖A‖ < 1`.
pub fn solve_resolvent(a: &RMatrix, b: &RVector) -> Result<RVector> {
    let norm = a.inf_norm();
    if norm >= Rational::one() {
        return Err(Error::NotContraction(norm));
    }
    let i_minus_a = &RMatrix::identity(a.dim()) - a;
    i_minus_a.solve(b)
}

/// Component-wise floor and fractional part: `x = floor + frac`, `frac ∈ [0,1)^d`.
pub fn floor_frac(x: &RVector) -> (IntVector, RVector) {
    let floor: IntVector = x.iter().map(floor_int).collect();
    let frac = x
        .iter()
        .zip(&floor)
        .map(|(c, f)| c - Rational::from_integer(f.clone()))
        .collect();
    (floor, frac)
}

/// `#[serde(with = "serde_rational")]` for a single rational as `"p/q"`.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

struct RationalVisitor;

impl<'de> Visitor<'de> for RationalVisitor {
    type Value = Rational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as a \"p/q\" or decimal string, or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
        parse_rational(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
        Ok(int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
        Ok(Rational::from_integer(BigInt::from(v)))
    }

    fn visit_f64<E: de::Error>(self, _: f64) -> std::result::Result<Rational, E> {
        Err(E::custom("floating-point JSON numbers are not exact; quote the value as a string"))
    }
}

struct WrappedRational(Rational);

impl<'de> Deserialize<'de> for WrappedRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(RationalVisitor).map(WrappedRational)
    }
}

impl Serialize for RVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.dim()))?;
        for q in &self.0 {
            seq.serialize_element(&format_rational(q))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct SeqVisitor;
        impl<'de> Visitor<'de> for SeqVisitor {
            type Value = RVector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of rationals")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<RVector, A::Error> {
                let mut out = Vec::new();
                while let Some(WrappedRational(q)) = seq.next_element()? {
                    out.push(q);
                }
                Ok(RVector(out))
            }
        }
        d.deserialize_seq(SeqVisitor)
    }
}

impl Serialize for RMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.dim()))?;
        for row in &self.rows {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<RVector> = Vec::deserialize(d)?;
        RMatrix::from_rows(rows.into_iter().map(RVector::into_inner).collect()).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn figure_one() -> RMatrix {
        RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]])
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rational("0.8").unwrap(), rat(4, 5));
        assert_eq!(parse_rational("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" -7 ").unwrap(), int(-7));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1e-3").is_err());
        assert!(parse_rational(".").is_err());
        assert!(parse_rational("").is_err());
        assert_eq!(format_rational(&int(3)), "3/1");
    }

    #[test]
    fn matrix_norm_examples() {
        assert_eq!(inf_norm_matrix(&figure_one()), rat(9, 10));
        assert_eq!(inf_norm_matrix(&RMatrix::zeros(3)), int(0));
        assert_eq!(inf_norm_matrix(&RMatrix::from_fractions(&[&[(-1, 2)]])), rat(1, 2));
    }

    #[test]
    fn vector_norm_examples() {
        assert_eq!(inf_norm_vector(&RVector::new(vec![rat(3, 10), rat(-2, 5)])), rat(2, 5));
        assert_eq!(inf_norm_vector(&RVector::zeros(2)), int(0));
        assert_eq!(inf_norm_vector(&RVector::from_ints(&[-1, 0])), int(1));
    }

    #[test]
    fn resolvent_examples() {
        let b = RVector::new(vec![rat(3, 10), rat(2, 5)]);
        assert_eq!(solve_resolvent(&RMatrix::zeros(2), &b).unwrap(), b);
        let half = RMatrix::from_fractions(&[&[(1, 2)]]);
        assert_eq!(
            solve_resolvent(&half, &RVector::new(vec![rat(7, 10)])).unwrap(),
            RVector::new(vec![rat(7, 5)])
        );
        // Cramer's rule on I − A with det(I − A) = 7/100.
        assert_eq!(
            solve_resolvent(&figure_one(), &b).unwrap(),
            RVector::new(vec![rat(22, 7), rat(23, 7)])
        );
        let one = RMatrix::from_fractions(&[&[(1, 1)]]);
        assert!(matches!(solve_resolvent(&one, &RVector::zeros(1)), Err(Error::NotContraction(_))));
    }

    #[test]
    fn floor_frac_examples() {
        let (fl, fr) = floor_frac(&RVector::new(vec![rat(11, 10), rat(-3, 10)]));
        assert_eq!(fl, vec![BigInt::from(1), BigInt::from(-1)]);
        assert_eq!(fr, RVector::new(vec![rat(1, 10), rat(7, 10)]));
        let (fl, fr) = floor_frac(&RVector::from_ints(&[4, -2]));
        assert_eq!(fl, vec![BigInt::from(4), BigInt::from(-2)]);
        assert!(fr.is_zero());
        let (fl, fr) = floor_frac(&RVector::zeros(2));
        assert!(fl.iter().all(Zero::is_zero) && fr.is_zero());
    }

    #[test]
    fn determinant_and_singular_solve() {
        assert_eq!(figure_one().determinant(), rat(27, 100));
        let singular = RMatrix::from_fractions(&[&[(1, 2), (1, 4)], &[(1, 1), (1, 2)]]);
        assert_eq!(singular.determinant(), int(0));
        assert!(matches!(singular.solve(&RVector::zeros(2)), Err(Error::Singular)));
    }

    #[test]
    fn serde_uses_fraction_strings() {
        let v = RVector::new(vec![rat(1, 3), int(-2)]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["1/3","-2/1"]"#);
        let back: RVector = serde_json::from_str(r#"["1/3", "-2", 0]"#).unwrap();
        assert_eq!(back, RVector::new(vec![rat(1, 3), int(-2), int(0)]));
        assert!(serde_json::from_str::<RVector>("[0.5]").is_err());
        let m: RMatrix = serde_json::from_str(r#"[["0.8","0.1"],["0.5","0.4"]]"#).unwrap();
        assert_eq!(m, figure_one());
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-64i64..=64, 1i64..=32).prop_map(|(p, q)| rat(p, q))
    }

    fn contraction(d: usize) -> impl Strategy<Value = RMatrix> {
        prop::collection::vec(-100i64..=100, d * d).prop_map(move |raw| {
            let scale: i64 = (0..d)
                .map(|j| raw[j * d..(j + 1) * d].iter().map(|v| v.abs()).sum::<i64>())
                .max()
                .unwrap()
                + 1;
            let rows = (0..d).map(|j| (0..d).map(|l| rat(raw[j * d + l], scale)).collect()).collect();
            RMatrix::from_rows(rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn norm_bounds_images(
            (a, x, y) in (1usize..=3).prop_flat_map(|d| (
                contraction(d),
                prop::collection::vec(small_rational(), d),
                prop::collection::vec(small_rational(), d),
            ))
        ) {
            let (x, y) = (RVector::new(x), RVector::new(y));
            let lhs = a.mul_vec(&(&x - &y)).inf_norm();
            prop_assert!(lhs <= a.inf_norm() * (&x - &y).inf_norm());
        }

        #[test]
        fn resolvent_residual_vanishes(
            (a, b) in (1usize..=3).prop_flat_map(|d| (contraction(d), prop::collection::vec(small_rational(), d)))
        ) {
            let b = RVector::new(b);
            let v = solve_resolvent(&a, &b).unwrap();
            let residual = &(&v - &a.mul_vec(&v)) - &b;
            prop_assert!(residual.is_zero());
        }

        #[test]
        fn floor_frac_reconstructs(x in prop::collection::vec(small_rational(), 1..4)) {
            let x = RVector::new(x);
            let (fl, fr) = floor_frac(&x);
            prop_assert!(fr.in_unit_cube());
            prop_assert_eq!(&RVector::from_big_ints(&fl) + &fr, x);
        }

        #[test]
        fn decimal_strings_parse_exactly(p in -100_000i64..100_000) {
            let s = format!("{}.{:03}", p / 1000, (p % 1000).abs());
            let s = if p < 0 && p / 1000 == 0 { format!("-{s}") } else { s };
            prop_assert_eq!(parse_rational(&s).unwrap(), rat(p, 1000));
        }
    }
}
