//! The contracted rotation `f_b(x) = {Ax + b}` on `[0,1)^d`, its code map and
//! the partition of the cube into continuity domains.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::{floor_i64, format_rational, int, solve_resolvent, RMatrix, RVector, Rational};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Translations are kept below this max-norm so codes always fit in `i64`.
const MAX_TRANSLATION_BITS: u32 = 52;

/// Dimensions up to this value decide domain emptiness by vertex enumeration.
const EXACT_EMPTINESS_MAX_DIM: usize = 4;

/// Integer vector labelling a continuity domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CodeVector(pub Vec<i64>);

impl CodeVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn to_rvector(&self) -> RVector {
        RVector::from_ints(&self.0)
    }

    /// `self − base`, component-wise.
    pub fn offset_from(&self, base: &CodeVector) -> Vec<i64> {
        self.0.iter().zip(&base.0).map(|(a, b)| a - b).collect()
    }
}

impl fmt::Display for CodeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// On-disk form of a system: `{"d": .., "A": [[..]], "b": [..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemFile {
    pub d: usize,
    #[serde(rename = "A")]
    pub a: RMatrix,
    pub b: RVector,
}

/// A validated pair `(A, b)` with `‖A‖ < 1` and `det A ≠ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractedRotation {
    a: RMatrix,
    b: RVector,
    norm: Rational,
    offset: RVector,
}

impl ContractedRotation {
    pub fn new(a: RMatrix, b: RVector) -> Result<Self> {
        let d = a.dim();
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if b.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
        }
        let norm = a.inf_norm();
        if norm >= Rational::one() {
            return Err(Error::NotContraction(norm));
        }
        if a.determinant().is_zero() {
            return Err(Error::Singular);
        }
        let b_norm = b.inf_norm();
        if b_norm >= Rational::from_integer(BigInt::one() << MAX_TRANSLATION_BITS) {
            return Err(Error::TranslationTooLarge(b_norm));
        }
        let offset = solve_resolvent(&a, &b)?;
        Ok(ContractedRotation { a, b, norm, offset })
    }

    pub fn from_file(file: SystemFile) -> Result<Self> {
        if file.a.dim() != file.d {
            return Err(Error::DimensionMismatch { expected: file.d, found: file.a.dim() });
        }
        ContractedRotation::new(file.a, file.b)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        ContractedRotation::from_file(serde_json::from_str(json)?)
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile { d: self.dim(), a: self.a.clone(), b: self.b.clone() }
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn system_hash(&self) -> String {
        let json = serde_json::to_string(&self.to_file()).expect("system serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// The same matrix with another translation.
    pub fn with_translation(&self, b: RVector) -> Result<Self> {
        ContractedRotation::new(self.a.clone(), b)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.a
    }

    pub fn translation(&self) -> &RVector {
        &self.b
    }

    /// `‖A‖`
    pub fn norm(&self) -> &Rational {
        &self.norm
    }

    /// `(I − A)^{-1} b`
    pub fn resolvent_offset(&self) -> &RVector {
        &self.offset
    }

    fn check_cube(&self, x: &RVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        if !x.in_unit_cube() {
            return Err(Error::OutsideCube);
        }
        Ok(())
    }

    /// `Ax + b` without the reduction mod 1.
    pub fn affine(&self, x: &RVector) -> RVector {
        &self.a.mul_vec(x) + &self.b
    }

    /// Image and code in one pass: `(f_b(x), e_b(x))`.
    pub fn step(&self, x: &RVector) -> Result<(RVector, CodeVector)> {
        self.check_cube(x)?;
        let y = self.affine(x);
        let code: Vec<i64> = y.iter().map(|c| floor_i64(c).expect("bounded code")).collect();
        let image = y.iter().zip(&code).map(|(c, &k)| c - int(k)).collect();
        Ok((image, CodeVector(code)))
    }

    pub fn apply_f(&self, x: &RVector) -> Result<RVector> {
        self.step(x).map(|(image, _)| image)
    }

    pub fn code_e(&self, x: &RVector) -> Result<CodeVector> {
        self.step(x).map(|(_, code)| code)
    }

    /// Component-wise minimum of the code over the cube.
    ///
    /// Row `j` of `Ax + b` ranges over an interval with infimum
    /// `m_j = b_j + Σ_l min(a_jl, 0)` and length `Σ_l |a_jl| < 1`. When `m_j`
    /// is attained the minimum floor is `⌊m_j⌋`; when it is only approached
    /// (some `a_jl < 0`), values just above `m_j` still have floor `⌊m_j⌋`.
    pub fn chi(&self) -> CodeVector {
        let zero = Rational::zero();
        let code = (0..self.dim())
            .map(|j| {
                let low: Rational = self.a.row(j).iter().filter(|a| **a < zero).sum::<Rational>() + &self.b[j];
                floor_i64(&low).expect("bounded code")
            })
            .collect();
        CodeVector(code)
    }

    /// The `2^d` candidate domains `E_b(χ(b) + p)`, `p ∈ {0,1}^d`, in the order
    /// of `p` read as a binary number with `p_0` as the lowest bit.
    pub fn continuity_domains(&self) -> Vec<ContinuityDomain> {
        let chi = self.chi();
        let d = self.dim();
        (0u32..1 << d)
            .map(|mask| {
                let p: Vec<u8> = (0..d).map(|j| ((mask >> j) & 1) as u8).collect();
                let code = CodeVector(chi.0.iter().zip(&p).map(|(c, &pj)| c + i64::from(pj)).collect());
                let thresholds = chi.0.iter().map(|c| int(c + 1)).collect();
                let mut domain = ContinuityDomain {
                    p,
                    code,
                    rows: self.a.clone(),
                    b: self.b.clone(),
                    thresholds,
                    status: Emptiness::Undecided,
                };
                domain.status = domain.decide_emptiness();
                domain
            })
            .collect()
    }
}

/// Which side of its threshold row `j` must lie on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `(Ax + b)_j < χ_j + 1`
    Below,
    /// `(Ax + b)_j ≥ χ_j + 1`
    AtOrAbove,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emptiness {
    NonEmpty,
    Empty,
    /// Sampling found no point and the dimension is too large for the exact test.
    Undecided,
}

/// `E_b(χ(b) + p)` described by `d` half-space conditions on the cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuityDomain {
    p: Vec<u8>,
    code: CodeVector,
    rows: RMatrix,
    b: RVector,
    thresholds: Vec<Rational>,
    status: Emptiness,
}

impl ContinuityDomain {
    pub fn p(&self) -> &[u8] {
        &self.p
    }

    pub fn code(&self) -> &CodeVector {
        &self.code
    }

    pub fn sides(&self) -> Vec<Side> {
        self.p.iter().map(|&pj| if pj == 0 { Side::Below } else { Side::AtOrAbove }).collect()
    }

    pub fn thresholds(&self) -> &[Rational] {
        &self.thresholds
    }

    pub fn status(&self) -> Emptiness {
        self.status
    }

    pub fn is_non_empty(&self) -> bool {
        self.status == Emptiness::NonEmpty
    }

    /// Exact evaluation of the `d` half-space conditions at `x ∈ [0,1)^d`.
    pub fn membership(&self, x: &RVector) -> bool {
        self.p.iter().enumerate().all(|(j, &pj)| {
            let value = self.rows.row(j).dot(x) + &self.b[j];
            if pj == 0 {
                value < self.thresholds[j]
            } else {
                value >= self.thresholds[j]
            }
        })
    }

    /// Inequalities `c·x ≤ rhs` of the closure, each flagged strict or not.
    fn constraints(&self) -> Vec<(RVector, Rational, bool)> {
        let d = self.p.len();
        let mut out = Vec::with_capacity(3 * d);
        for l in 0..d {
            let mut e = RVector::zeros(d).into_inner();
            e[l] = Rational::one();
            let e = RVector::new(e);
            out.push((-&e, Rational::zero(), false));
            out.push((e, Rational::one(), true));
        }
        for (j, &pj) in self.p.iter().enumerate() {
            let rhs = &self.thresholds[j] - &self.b[j];
            let row = self.rows.row(j).clone();
            if pj == 0 {
                out.push((row, rhs, true));
            } else {
                out.push((-&row, -rhs, false));
            }
        }
        out
    }

    fn decide_emptiness(&self) -> Emptiness {
        if self.p.len() <= EXACT_EMPTINESS_MAX_DIM {
            if self.vertex_test() {
                Emptiness::NonEmpty
            } else {
                Emptiness::Empty
            }
        } else if self.sampling_test() {
            Emptiness::NonEmpty
        } else {
            Emptiness::Undecided
        }
    }

    /// The closure is a polytope inside `[0,1]^d`, so it is non-empty iff it
    /// has a vertex. The domain itself is non-empty iff additionally every
    /// strict constraint is strict at some vertex: averaging those vertices
    /// gives a point satisfying all strict constraints at once.
    fn vertex_test(&self) -> bool {
        let d = self.p.len();
        let cons = self.constraints();
        let m = cons.len();
        let mut vertices = Vec::new();
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != d {
                continue;
            }
            let chosen: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            let rows = chosen.iter().map(|&i| cons[i].0.clone().into_inner()).collect();
            let rhs: RVector = chosen.iter().map(|&i| cons[i].1.clone()).collect();
            let Ok(system) = RMatrix::from_rows(rows) else { continue };
            let Ok(v) = system.solve(&rhs) else { continue };
            if cons.iter().all(|(c, r, _)| c.dot(&v) <= *r) {
                vertices.push(v);
            }
        }
        !vertices.is_empty()
            && cons
                .iter()
                .filter(|(_, _, strict)| *strict)
                .all(|(c, r, _)| vertices.iter().any(|v| c.dot(v) < *r))
    }

    /// Tries the points of a dyadic grid; can only prove non-emptiness.
    fn sampling_test(&self) -> bool {
        let d = self.p.len();
        let per_axis: u64 = 3;
        let total = per_axis.pow(d as u32);
        (0..total).any(|mut idx| {
            let x: RVector = (0..d)
                .map(|_| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    Rational::new(BigInt::from(2 * i + 1), BigInt::from(2 * per_axis))
                })
                .collect();
            self.membership(&x)
        })
    }
}

/// JSON-friendly summary of a domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub p: Vec<u8>,
    pub code: CodeVector,
    pub sides: Vec<Side>,
    pub thresholds: Vec<String>,
    pub status: Emptiness,
}

impl From<&ContinuityDomain> for DomainSummary {
    fn from(d: &ContinuityDomain) -> Self {
        DomainSummary {
            p: d.p.clone(),
            code: d.code.clone(),
            sides: d.sides(),
            thresholds: d.thresholds.iter().map(format_rational).collect(),
            status: d.status,
        }
    }
}

/// True when every entry of `A` is non-negative.
pub fn is_non_negative(a: &RMatrix) -> bool {
    a.rows().iter().all(|r| r.iter().all(|q| !q.is_negative()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    pub(crate) fn figure_one() -> ContractedRotation {
        let a = RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]]);
        ContractedRotation::new(a, RVector::new(vec![rat(3, 10), rat(2, 5)])).unwrap()
    }

    fn one_dim(a: (i64, i64), b: (i64, i64)) -> ContractedRotation {
        ContractedRotation::new(RMatrix::from_fractions(&[&[a]]), RVector::new(vec![rat(b.0, b.1)])).unwrap()
    }

    #[test]
    fn apply_f_examples() {
        let sys = figure_one();
        let (img, code) = sys.step(&RVector::zeros(2)).unwrap();
        assert_eq!(img, RVector::new(vec![rat(3, 10), rat(2, 5)]));
        assert_eq!(code, CodeVector(vec![0, 0]));
        let x = RVector::new(vec![rat(9, 10), rat(9, 10)]);
        assert_eq!(sys.affine(&x), RVector::new(vec![rat(111, 100), rat(121, 100)]));
        let (img, code) = sys.step(&x).unwrap();
        assert_eq!(img, RVector::new(vec![rat(11, 100), rat(21, 100)]));
        assert_eq!(code, CodeVector(vec![1, 1]));
        let zero_b = ContractedRotation::new(sys.matrix().clone(), RVector::zeros(2)).unwrap();
        assert_eq!(zero_b.apply_f(&RVector::zeros(2)).unwrap(), RVector::zeros(2));
    }

    #[test]
    fn apply_f_rejects_points_outside_cube() {
        let sys = figure_one();
        assert!(matches!(sys.apply_f(&RVector::from_ints(&[1, 0])), Err(Error::OutsideCube)));
        assert!(matches!(
            sys.apply_f(&RVector::new(vec![rat(-1, 10), rat(0, 1)])),
            Err(Error::OutsideCube)
        ));
        assert!(matches!(sys.apply_f(&RVector::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn code_examples() {
        let sys = one_dim((-1, 2), (0, 1));
        assert_eq!(sys.code_e(&RVector::new(vec![rat(1, 2)])).unwrap(), CodeVector(vec![-1]));
        let zero_b = ContractedRotation::new(figure_one().matrix().clone(), RVector::zeros(2)).unwrap();
        assert_eq!(zero_b.code_e(&RVector::zeros(2)).unwrap(), CodeVector(vec![0, 0]));
    }

    #[test]
    fn chi_examples() {
        assert_eq!(figure_one().chi(), CodeVector(vec![0, 0]));
        assert_eq!(one_dim((-1, 2), (0, 1)).chi(), CodeVector(vec![-1]));
        assert_eq!(one_dim((1, 2), (16, 5)).chi(), CodeVector(vec![3]));
        // infimum 0 approached but not attained
        assert_eq!(one_dim((-1, 2), (1, 2)).chi(), CodeVector(vec![0]));
    }

    #[test]
    fn validation_rejects_bad_systems() {
        let bad_norm = RMatrix::from_fractions(&[&[(1, 1)]]);
        assert!(matches!(
            ContractedRotation::new(bad_norm, RVector::zeros(1)),
            Err(Error::NotContraction(_))
        ));
        let singular = RMatrix::from_fractions(&[&[(1, 4), (1, 4)], &[(1, 4), (1, 4)]]);
        assert!(matches!(ContractedRotation::new(singular, RVector::zeros(2)), Err(Error::Singular)));
        let a = RMatrix::from_fractions(&[&[(1, 2)]]);
        assert!(matches!(
            ContractedRotation::new(a, RVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn figure_one_has_four_domains() {
        let domains = figure_one().continuity_domains();
        assert_eq!(domains.len(), 4);
        assert!(domains.iter().all(ContinuityDomain::is_non_empty));
        let codes: Vec<_> = domains.iter().map(|d| d.code().0.clone()).collect();
        assert_eq!(codes, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn one_dimensional_domains() {
        let continuous = one_dim((1, 2), (0, 1)).continuity_domains();
        assert_eq!(continuous[0].status(), Emptiness::NonEmpty);
        assert_eq!(continuous[1].status(), Emptiness::Empty);

        let split = one_dim((1, 2), (7, 10)).continuity_domains();
        assert!(split.iter().all(ContinuityDomain::is_non_empty));
        let below = RVector::new(vec![rat(59, 100)]);
        let at = RVector::new(vec![rat(3, 5)]);
        assert!(split[0].membership(&below) && !split[1].membership(&below));
        assert!(!split[0].membership(&at) && split[1].membership(&at));
    }

    #[test]
    fn membership_examples() {
        let sys = figure_one();
        let domains = sys.continuity_domains();
        assert!(domains[0].membership(&RVector::zeros(2)));
        assert!(domains[3].membership(&RVector::new(vec![rat(9, 10), rat(9, 10)])));
        let x = RVector::new(vec![rat(1, 3), rat(5, 7)]);
        assert_eq!(domains.iter().filter(|d| d.membership(&x)).count(), 1);
    }

    #[test]
    fn domain_empty_only_through_strict_sides() {
        // 1/2 x + 1/2 reaches 1 only in the limit x → 1
        let sys = one_dim((1, 2), (1, 2));
        let domains = sys.continuity_domains();
        assert_eq!(domains[0].status(), Emptiness::NonEmpty);
        assert_eq!(domains[1].status(), Emptiness::Empty);
    }

    #[test]
    fn system_file_round_trip() {
        let json = r#"{"d":2,"A":[["0.8","0.1"],["0.5","0.4"]],"b":["0.3","0.4"]}"#;
        let sys = ContractedRotation::from_json(json).unwrap();
        assert_eq!(sys, figure_one());
        let again = serde_json::to_string(&sys.to_file()).unwrap();
        assert_eq!(ContractedRotation::from_json(&again).unwrap(), sys);
        assert_eq!(sys.system_hash().len(), 64);
    }

    #[test]
    fn non_negative_matrix_chi_is_floor_of_b() {
        let sys = figure_one().with_translation(RVector::new(vec![rat(-13, 10), rat(27, 10)])).unwrap();
        assert!(is_non_negative(sys.matrix()));
        assert_eq!(sys.chi(), CodeVector(vec![-2, 2]));
    }
}
