//! The branches `φ_i(y) = A y − (k + p)`, the invariant ball `X` of radius
//! `2r` and the global piecewise-affine contraction `G_μ(y) = φ_{σ_μ(y)}(y)`.

use num_traits::One;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::{serde_rational, solve_resolvent, RMatrix, RVector, Rational};
use crate::conjugation::{rho, Label, LabelArrangement};
use crate::error::{Error, Result};
use crate::rotation::ContractedRotation;

/// `r = (1 + ‖A‖)(1 + ‖k‖) / (1 − ‖A‖)^2`
pub fn radius_r(a: &RMatrix, k: &[i64]) -> Result<Rational> {
    let norm = a.inf_norm();
    if norm >= Rational::one() {
        return Err(Error::NotContraction(norm));
    }
    let k_norm = k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    let one = Rational::one();
    let numer = (&one + &norm) * (&one + Rational::from_integer(k_norm.into()));
    let gap = &one - &norm;
    Ok(numer / (&gap * &gap))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedSystem {
    a: RMatrix,
    norm: Rational,
    k: Vec<i64>,
    r: Rational,
    arrangement: LabelArrangement,
}

/// Result of one application of `G_μ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionStep {
    pub image: RVector,
    pub label: Label,
    /// False when the input lies on one of the hyperplanes.
    pub regular: bool,
}

impl ExtendedSystem {
    pub fn new(a: RMatrix, k: Vec<i64>, mu: RVector) -> Result<Self> {
        if k.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: k.len() });
        }
        let r = radius_r(&a, &k)?;
        let arrangement = LabelArrangement::new(&a, mu)?;
        let norm = a.inf_norm();
        Ok(ExtendedSystem { a, norm, k, r, arrangement })
    }

    /// The extension of `g_b`: `k = χ(b)`, `μ = ρ(b)`.
    pub fn from_rotation(sys: &ContractedRotation) -> Self {
        ExtendedSystem::new(sys.matrix().clone(), sys.chi().0, rho(sys)).expect("validated rotation")
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.a
    }

    pub fn norm(&self) -> &Rational {
        &self.norm
    }

    pub fn k(&self) -> &[i64] {
        &self.k
    }

    pub fn mu(&self) -> &RVector {
        self.arrangement.mu()
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }

    /// Radius of the ball `X`, i.e. `2r`.
    pub fn ball_radius(&self) -> Rational {
        &self.r * Rational::from_integer(2.into())
    }

    pub fn arrangement(&self) -> &LabelArrangement {
        &self.arrangement
    }

    /// Closed ball: `‖y‖ ≤ 2r`.
    pub fn in_ball(&self, y: &RVector) -> bool {
        y.dim() == self.dim() && y.inf_norm() <= self.ball_radius()
    }

    /// `k + p` for the label `(−1)^p`.
    pub fn branch_shift(&self, label: Label) -> Vec<i64> {
        self.k.iter().zip(label.p()).map(|(k, p)| k + i64::from(p)).collect()
    }

    pub fn apply_phi(&self, label: Label, y: &RVector) -> RVector {
        let shift = RVector::from_ints(&self.branch_shift(label));
        &self.a.mul_vec(y) - &shift
    }

    /// `z_i = −(I − A)^{-1}(k + p)`
    pub fn branch_fixed_point(&self, label: Label) -> RVector {
        let shift = RVector::from_ints(&self.branch_shift(label));
        -&solve_resolvent(&self.a, &shift).expect("contraction")
    }

    pub fn apply_extension(&self, y: &RVector) -> Result<ExtensionStep> {
        if !self.in_ball(y) {
            return Err(Error::OutsideBall(self.ball_radius()));
        }
        let label = self.arrangement.label(y);
        let regular = self.arrangement.on_hyperplane(y).is_empty();
        Ok(ExtensionStep { image: self.apply_phi(label, y), label, regular })
    }

    /// SHA-256 of the canonical JSON record, tying certificates to a system.
    pub fn system_hash(&self) -> String {
        let json = serde_json::to_string(&self.to_record()).expect("record serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_record(&self) -> ExtendedSystemRecord {
        ExtendedSystemRecord {
            a: self.a.clone(),
            k: self.k.clone(),
            mu: self.mu().clone(),
            r: self.r.clone(),
        }
    }
}

/// JSON form `{A, k, mu, r}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedSystemRecord {
    #[serde(rename = "A")]
    pub a: RMatrix,
    pub k: Vec<i64>,
    pub mu: RVector,
    #[serde(with = "serde_rational")]
    pub r: Rational,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use crate::conjugation::{apply_g, h_inverse};

    fn half() -> RMatrix {
        RMatrix::from_fractions(&[&[(1, 2)]])
    }

    #[test]
    fn radius_examples() {
        assert_eq!(radius_r(&half(), &[0]).unwrap(), int(6));
        let fig = RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]]);
        assert_eq!(radius_r(&fig, &[-1, 0]).unwrap(), int(380));
        for n in 1..20 {
            let a = RMatrix::from_fractions(&[&[(n, 20)]]);
            assert!(radius_r(&a, &[0]).unwrap() > int(1));
        }
        assert!(radius_r(&RMatrix::from_fractions(&[&[(1, 1)]]), &[0]).is_err());
    }

    #[test]
    fn phi_examples() {
        let sys = ExtendedSystem::new(half(), vec![0], RVector::new(vec![int(2)])).unwrap();
        let plus = Label::all_plus(1);
        assert_eq!(sys.apply_phi(plus, &RVector::zeros(1)), RVector::zeros(1));
        let minus = Label::from_p(&[1]);
        let z = sys.branch_fixed_point(minus);
        assert_eq!(z, RVector::from_ints(&[-2]));
        assert_eq!(sys.apply_phi(minus, &z), z);
    }

    #[test]
    fn ball_boundary_maps_inside() {
        let fig = RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]]);
        let sys = ExtendedSystem::new(fig, vec![-1, 0], RVector::new(vec![rat(1, 3), rat(-2, 5)])).unwrap();
        let big = sys.ball_radius();
        for signs in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let y = RVector::new(vec![&big * int(signs.0), &big * int(signs.1)]);
            assert!(sys.in_ball(&y));
            for label in Label::all(2) {
                assert!(sys.apply_phi(label, &y).inf_norm() < big);
            }
        }
    }

    #[test]
    fn extension_regularity_flags() {
        let sys = ExtendedSystem::new(half(), vec![0], RVector::new(vec![rat(1, 2)])).unwrap();
        let step = sys.apply_extension(&RVector::new(vec![rat(1, 3)])).unwrap();
        assert!(step.regular);
        // ⟨v, y⟩ = y here, so y = μ sits on the hyperplane
        let on = sys.apply_extension(&RVector::new(vec![rat(1, 2)])).unwrap();
        assert!(!on.regular);
        assert_eq!(on.label, Label::from_p(&[1]));
        assert_eq!(on.image, RVector::new(vec![rat(-3, 4)]));
        assert!(matches!(sys.apply_extension(&RVector::from_ints(&[100])), Err(Error::OutsideBall(_))));
    }

    #[test]
    fn extension_agrees_with_g_on_translated_cube() {
        let a = RMatrix::from_fractions(&[&[(4, 5), (1, 10)], &[(1, 2), (2, 5)]]);
        let rot = ContractedRotation::new(a, RVector::new(vec![rat(3, 10), rat(2, 5)])).unwrap();
        let ext = ExtendedSystem::from_rotation(&rot);
        for i in 0..9 {
            for j in 0..9 {
                let y = h_inverse(&rot, &RVector::new(vec![rat(i, 9), rat(j, 9)]));
                assert_eq!(ext.apply_extension(&y).unwrap().image, apply_g(&rot, &y).unwrap());
            }
        }
        let record = serde_json::to_value(ext.to_record()).unwrap();
        assert_eq!(record["k"], serde_json::json!([0, 0]));
    }
}
