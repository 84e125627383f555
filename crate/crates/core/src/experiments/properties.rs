//! Exact randomized checks of the structural identities behind the library:
//! elementary properties of the torus map, of `χ` and the continuity domains,
//! the conjugacy, the label/domain identity, ball invariance, the extension
//! identity, bounded shadowing and certificate soundness.

use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{floor_frac, int, rat, solve_resolvent, RVector, Rational};
use crate::conjugation::{apply_g, h_apply, h_inverse, Label, LabelArrangement, TranslatedCube};
use crate::dynamics::{certify, iterate_orbit, recheck_certificate, Budget, IterationMode};
use crate::extension::ExtendedSystem;
use crate::rotation::{CodeVector, ContractedRotation, Emptiness};

use super::sampling::{random_in_interval, random_unit_vector, sample_rng, MatrixSampler};

/// Denominator exponent of random points.
const POINT_BITS: u32 = 31;
/// Denominator exponent of random matrix entries.
const MATRIX_BITS: u32 = 10;
/// Length of the dual exact/bounded runs.
const SHADOW_STEPS: usize = 1000;
const SHADOW_PRECISION: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCounts {
    /// Random systems per suite, cycling through `d = 1, 2, 3`.
    pub systems: usize,
    /// Random samples per suite, spread evenly over the systems.
    pub samples: usize,
    /// Systems compared against the brute-force `χ` grid.
    pub oracle_systems: usize,
}

impl Default for PropertyCounts {
    fn default() -> Self {
        PropertyCounts { systems: 100, samples: 10_000, oracle_systems: 1000 }
    }
}

/// Injection points for checking that the suites detect faults.
#[derive(Clone, Copy)]
pub struct PropertyHooks {
    pub chi: fn(&ContractedRotation) -> CodeVector,
}

impl Default for PropertyHooks {
    fn default() -> Self {
        PropertyHooks { chi: ContractedRotation::chi }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub statement: String,
    pub checks: u64,
    pub passed: bool,
    /// No system or sample was drawn, so the pass is vacuous.
    pub no_samples: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub counts: PropertyCounts,
    pub suites: Vec<SuiteResult>,
    pub all_passed: bool,
}

type Check = std::result::Result<u64, String>;

struct Ctx<'a> {
    rng: ChaCha8Rng,
    sys: ContractedRotation,
    samples: usize,
    hooks: &'a PropertyHooks,
}

impl Ctx<'_> {
    fn describe(&self, detail: String) -> String {
        let system = serde_json::to_string(&self.sys.to_file()).unwrap_or_default();
        format!("system {system}: {detail}")
    }

    fn point(&mut self) -> RVector {
        random_unit_vector(&mut self.rng, self.sys.dim(), POINT_BITS)
    }

    fn int_vector(&mut self, range: i64) -> Vec<i64> {
        (0..self.sys.dim()).map(|_| self.rng.random_range(-range..=range)).collect()
    }
}

fn random_system(rng: &mut ChaCha8Rng, d: usize, matrix_bits: u32, b_bits: u32) -> ContractedRotation {
    let sampler = MatrixSampler { denominator_bits: matrix_bits, norm_bound: rat(9, 10) };
    let a = sampler.sample(rng, d).expect("valid sampler");
    let b = random_unit_vector(rng, d, b_bits);
    ContractedRotation::new(a, b).expect("sampled system is valid")
}

struct Suite {
    name: &'static str,
    statement: &'static str,
    check: fn(&mut Ctx) -> Check,
}

fn run_suite(tag: u64, suite: &Suite, seed: u64, counts: &PropertyCounts, hooks: &PropertyHooks) -> SuiteResult {
    let systems = counts.systems;
    let outcomes: Vec<Check> = (0..systems)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, tag << 32 | i as u64);
            let sys = random_system(&mut rng, 1 + i % 3, MATRIX_BITS, POINT_BITS);
            let samples = counts.samples / systems + usize::from(i < counts.samples % systems);
            (suite.check)(&mut Ctx { rng, sys, samples, hooks })
        })
        .collect();
    collect(suite, outcomes, systems == 0 || counts.samples == 0)
}

fn collect(suite: &Suite, outcomes: Vec<Check>, no_samples: bool) -> SuiteResult {
    let mut checks = 0;
    let mut counterexample = None;
    for outcome in outcomes {
        match outcome {
            Ok(n) => checks += n,
            Err(e) => {
                counterexample = Some(e);
                break;
            }
        }
    }
    SuiteResult {
        name: suite.name.into(),
        statement: suite.statement.into(),
        checks,
        passed: counterexample.is_none(),
        no_samples,
        counterexample,
    }
}

fn exact_arithmetic(ctx: &mut Ctx) -> Check {
    let a = ctx.sys.matrix().clone();
    let d = a.dim();
    let b = ctx.sys.translation().clone();
    let v = solve_resolvent(&a, &b).map_err(|e| ctx.describe(e.to_string()))?;
    if &v - &a.mul_vec(&v) != b {
        return Err(ctx.describe("nonzero resolvent residual".into()));
    }
    let mut checks = 1;
    for _ in 0..ctx.samples {
        let (x, y) = (ctx.point(), ctx.point());
        let shift = RVector::from_ints(&ctx.int_vector(5));
        let lhs = a.mul_vec(&(&x - &y)).inf_norm();
        if lhs > a.inf_norm() * (&x - &y).inf_norm() {
            return Err(ctx.describe(format!("‖A(x−y)‖ exceeds ‖A‖‖x−y‖ at x={x}, y={y}")));
        }
        let z = &x + &shift;
        let (floor, frac) = floor_frac(&z);
        let back: RVector = (0..d).map(|j| Rational::from_integer(floor[j].clone()) + &frac[j]).collect();
        if !frac.in_unit_cube() || back != z {
            return Err(ctx.describe(format!("floor/fractional split of {z} is wrong")));
        }
        checks += 2;
    }
    Ok(checks)
}

fn bounded_shadowing(ctx: &mut Ctx) -> Check {
    if ctx.samples == 0 {
        return Ok(0);
    }
    let ext = ExtendedSystem::from_rotation(&ctx.sys);
    let x0 = ctx.point();
    let y0 = h_inverse(&ctx.sys, &x0);
    let exact = iterate_orbit(&ext, &y0, SHADOW_STEPS, &IterationMode::Exact).map_err(|e| ctx.describe(e.to_string()))?;
    let mode = IterationMode::Bounded { precision_bits: SHADOW_PRECISION, radius_ceiling: Rational::one() };
    let bounded = iterate_orbit(&ext, &y0, SHADOW_STEPS, &mode).map_err(|e| ctx.describe(e.to_string()))?;
    let mut checks = 0;
    for (n, (e, b)) in exact.iter().zip(&bounded).enumerate() {
        let radius = b.radius.clone().expect("bounded trace carries radii");
        if e.point.distance(&b.point) > radius {
            return Err(ctx.describe(format!("exact point {} escapes the radius at step {n}", e.point)));
        }
        if b.ambiguous {
            break;
        }
        if e.label != b.label {
            return Err(ctx.describe(format!("labels differ at unambiguous step {n}")));
        }
        checks += 2;
    }
    Ok(checks)
}

fn torus_map(ctx: &mut Ctx) -> Check {
    let sys = ctx.sys.clone();
    let mut checks = 0;
    for _ in 0..ctx.samples {
        let x = ctx.point();
        let mut y = ctx.point();
        if y == x {
            y = random_unit_vector(&mut ctx.rng, sys.dim(), POINT_BITS - 1);
        }
        let fx = sys.apply_f(&x).map_err(|e| ctx.describe(e.to_string()))?;
        if x != y && fx == sys.apply_f(&y).map_err(|e| ctx.describe(e.to_string()))? {
            return Err(ctx.describe(format!("f({x}) = f({y})")));
        }
        let code = sys.code_e(&x).map_err(|e| ctx.describe(e.to_string()))?;
        if code.0.iter().any(|c| !(-1..=1).contains(c)) {
            return Err(ctx.describe(format!("code {code} at {x} leaves {{−1,0,1}}^d")));
        }
        let p = RVector::from_ints(&ctx.int_vector(5));
        let shifted = sys.with_translation(sys.translation() + &p).map_err(|e| ctx.describe(e.to_string()))?;
        if shifted.apply_f(&x).map_err(|e| ctx.describe(e.to_string()))? != fx {
            return Err(ctx.describe(format!("shifting b by {p} changes f at {x}")));
        }
        checks += 3;
    }
    Ok(checks)
}

fn chi_and_domains(ctx: &mut Ctx) -> Check {
    let sys = ctx.sys.clone();
    let d = sys.dim();
    let chi = (ctx.hooks.chi)(&sys);
    if chi.0.iter().any(|&c| c != -1 && c != 0) {
        return Err(ctx.describe(format!("χ(b) = {chi} leaves {{−1,0}}^d")));
    }
    let domains = sys.continuity_domains();
    let non_empty = domains.iter().filter(|dom| dom.status() != Emptiness::Empty).count();
    if domains.len() != 1 << d || non_empty > 1 << d {
        return Err(ctx.describe("more than 2^d continuity domains".into()));
    }
    let mut checks = 2;
    for _ in 0..ctx.samples {
        let shift = ctx.int_vector(6);
        let b = sys.translation() + &RVector::from_ints(&shift);
        let moved = sys.with_translation(b).map_err(|e| ctx.describe(e.to_string()))?;
        let expected: Vec<i64> = chi.0.iter().zip(&shift).map(|(c, s)| c + s).collect();
        if (ctx.hooks.chi)(&moved).0 != expected {
            return Err(ctx.describe(format!("χ(b + {shift:?}) ≠ χ(b) + {shift:?}")));
        }
        let x = ctx.point();
        let code = sys.code_e(&x).map_err(|e| ctx.describe(e.to_string()))?;
        let p = code.offset_from(&chi);
        if p.iter().any(|&v| v != 0 && v != 1) {
            return Err(ctx.describe(format!("e_b({x}) − χ(b) = {p:?} is not in {{0,1}}^d")));
        }
        let hits: Vec<_> = domains.iter().filter(|dom| dom.membership(&x)).collect();
        if hits.len() != 1 || hits[0].status() == Emptiness::Empty {
            return Err(ctx.describe(format!("{x} lies in {} continuity domains", hits.len())));
        }
        checks += 3;
    }
    Ok(checks)
}

fn conjugacy(ctx: &mut Ctx) -> Check {
    let sys = ctx.sys.clone();
    let cube = TranslatedCube::of(&sys);
    let mut checks = 0;
    for _ in 0..ctx.samples {
        let x = ctx.point();
        let y = h_inverse(&sys, &x);
        if !cube.contains(&y) || h_apply(&sys, &y) != x {
            return Err(ctx.describe(format!("h does not invert at {x}")));
        }
        let g = apply_g(&sys, &y).map_err(|e| ctx.describe(e.to_string()))?;
        let via_f = h_inverse(&sys, &sys.apply_f(&x).map_err(|e| ctx.describe(e.to_string()))?);
        let code = sys.code_e(&x).map_err(|e| ctx.describe(e.to_string()))?;
        if g != via_f || g != &sys.matrix().mul_vec(&y) - &code.to_rvector() {
            return Err(ctx.describe(format!("g ≠ h⁻¹∘f∘h at y = {y}")));
        }
        checks += 2;
    }
    Ok(checks)
}

fn labels_select_domains(ctx: &mut Ctx) -> Check {
    let sys = ctx.sys.clone();
    let chi = sys.chi();
    let arrangement = LabelArrangement::for_rotation(&sys);
    let mut checks = 0;
    for _ in 0..ctx.samples {
        let x = ctx.point();
        let y = h_inverse(&sys, &x);
        let p: Vec<u8> = sys
            .code_e(&x)
            .map_err(|e| ctx.describe(e.to_string()))?
            .offset_from(&chi)
            .iter()
            .map(|&v| v as u8)
            .collect();
        if arrangement.label(&y) != Label::from_p(&p) {
            return Err(ctx.describe(format!("σ(ρ(b), {y}) differs from (−1)^{p:?}")));
        }
        let shift: Vec<i64> = chi.0.iter().zip(&p).map(|(c, &v)| c + i64::from(v)).collect();
        let branch = &sys.matrix().mul_vec(&y) - &RVector::from_ints(&shift);
        if apply_g(&sys, &y).map_err(|e| ctx.describe(e.to_string()))? != branch {
            return Err(ctx.describe(format!("g(y) ≠ Ay − (χ + p) at y = {y}")));
        }
        checks += 2;
    }
    Ok(checks)
}

fn ball_invariance(ctx: &mut Ctx) -> Check {
    let ext = ExtendedSystem::from_rotation(&ctx.sys);
    let d = ext.dim();
    let big = ext.ball_radius();
    let neg = -&big;
    let labels: Vec<Label> = Label::all(d).collect();
    let mut checks = 0;
    for s in 0..ctx.samples {
        let mut y: Vec<Rational> = (0..d).map(|_| random_in_interval(&mut ctx.rng, &neg, &big, 20)).collect();
        if s % 2 == 0 {
            let j = ctx.rng.random_range(0..d);
            y[j] = if ctx.rng.random_bool(0.5) { big.clone() } else { neg.clone() };
        }
        let y = RVector::new(y);
        for &label in &labels {
            if ext.apply_phi(label, &y).inf_norm() >= big {
                return Err(ctx.describe(format!("branch {label} maps {y} out of the open ball")));
            }
            checks += 1;
        }
    }
    Ok(checks)
}

fn extension_restricts_to_g(ctx: &mut Ctx) -> Check {
    let sys = ctx.sys.clone();
    let ext = ExtendedSystem::from_rotation(&sys);
    let norm = sys.norm().clone();
    let one = Rational::one();
    if (int(2) - &norm) / (&one - &norm) >= ext.ball_radius() {
        return Err(ctx.describe("(2 − ‖A‖)/(1 − ‖A‖) is not below 2r".into()));
    }
    let mut checks = 1;
    for _ in 0..ctx.samples {
        let y = h_inverse(&sys, &ctx.point());
        if y.inf_norm() >= ext.ball_radius() {
            return Err(ctx.describe(format!("{y} ∈ D_b lies outside the ball")));
        }
        let step = ext.apply_extension(&y).map_err(|e| ctx.describe(e.to_string()))?;
        if step.image != apply_g(&sys, &y).map_err(|e| ctx.describe(e.to_string()))? {
            return Err(ctx.describe(format!("G(y) ≠ g(y) at y = {y}")));
        }
        let nudge: RVector = (0..sys.dim()).map(|_| random_in_interval(&mut ctx.rng, &rat(-1, 64), &rat(1, 64), 16)).collect();
        let other = &y + &nudge;
        if ext.in_ball(&other) {
            let second = ext.apply_extension(&other).map_err(|e| ctx.describe(e.to_string()))?;
            if second.label == step.label && second.image.distance(&step.image) > &norm * other.distance(&y) {
                return Err(ctx.describe(format!("G expands distances within a label cell near {y}")));
            }
        }
        checks += 3;
    }
    Ok(checks)
}

fn certificate_recheck(ctx: &mut Ctx) -> Check {
    if ctx.samples == 0 {
        return Ok(0);
    }
    let ext = ExtendedSystem::from_rotation(&ctx.sys);
    let x0 = ctx.point();
    let y0 = h_inverse(&ctx.sys, &x0);
    let verdict = certify(&ext, &y0, &Budget::default()).map_err(|e| ctx.describe(e.to_string()))?;
    match verdict.certificate() {
        Some(cert) => {
            let report = recheck_certificate(&ext, &y0, cert, u64::MAX);
            if !report.passed() {
                return Err(ctx.describe(format!("certificate from {y0} fails the recheck: {report:?}")));
            }
            Ok(1)
        }
        None => Ok(0),
    }
}

/// Brute-force `χ`: minimum floor over the grid `{i/N}^d`, `N = 2^bits`.
/// Exact when entries of `A` and `b` have denominator dividing `N`.
fn grid_chi(a: &[Vec<i64>], b: &[i64], n: i64) -> Vec<i64> {
    let d = b.len();
    let points = n.pow(d as u32);
    (0..d)
        .map(|j| {
            (0..points)
                .map(|mut idx| {
                    let mut acc = 0i64;
                    for l in 0..d {
                        acc += a[j][l] * (idx % n);
                        idx /= n;
                    }
                    // (Ax + b)_j = (acc + b_j n) / n^2
                    (acc + b[j] * n).div_euclid(n * n)
                })
                .min()
                .expect("non-empty grid")
        })
        .collect()
}

fn oracle_bits(d: usize) -> u32 {
    match d {
        1 => 8,
        2 => 5,
        _ => 3,
    }
}

fn chi_closed_form_vs_grid(seed: u64, counts: &PropertyCounts, hooks: &PropertyHooks) -> SuiteResult {
    let suite = Suite {
        name: "chi_closed_form_vs_grid",
        statement: "closed-form χ(b) equals the minimum floor over an exact rational grid",
        check: |_| Ok(0),
    };
    let outcomes: Vec<Check> = (0..counts.oracle_systems)
        .into_par_iter()
        .map(|i| {
            let d = 1 + i % 3;
            let bits = oracle_bits(d);
            let mut rng = sample_rng(seed, 99 << 32 | i as u64);
            let sys = random_system(&mut rng, d, bits, bits);
            let shift: Vec<i64> = (0..d).map(|_| rng.random_range(-3..=3)).collect();
            let sys = sys.with_translation(sys.translation() + &RVector::from_ints(&shift)).expect("valid");
            let n = 1i64 << bits;
            let scale = Rational::from_integer(BigInt::from(n));
            let to_int = |q: &Rational| -> i64 { i64::try_from((q * &scale).to_integer()).expect("small") };
            let a: Vec<Vec<i64>> = sys.matrix().rows().iter().map(|r| r.iter().map(to_int).collect()).collect();
            let b: Vec<i64> = sys.translation().iter().map(to_int).collect();
            let expected = grid_chi(&a, &b, n);
            let got = (hooks.chi)(&sys).0;
            if got == expected {
                Ok(1)
            } else {
                let system = serde_json::to_string(&sys.to_file()).unwrap_or_default();
                Err(format!("system {system}: closed form {got:?}, grid {expected:?}"))
            }
        })
        .collect();
    collect(&suite, outcomes, counts.oracle_systems == 0)
}

const SUITES: [Suite; 9] = [
    Suite {
        name: "exact_arithmetic",
        statement: "‖A(x−y)‖ ≤ ‖A‖‖x−y‖, zero resolvent residual, exact floor/fractional split",
        check: exact_arithmetic,
    },
    Suite {
        name: "bounded_shadowing",
        statement: "bounded orbits enclose the exact orbit and agree on labels until the first ambiguous step",
        check: bounded_shadowing,
    },
    Suite {
        name: "torus_map",
        statement: "f_b is injective, codes of b ∈ [0,1)^d lie in {−1,0,1}^d, f_{b+p} = f_b for integer p",
        check: torus_map,
    },
    Suite {
        name: "chi_and_domains",
        statement: "χ(b + p) = χ(b) + p, χ(b) ∈ {−1,0}^d, the 2^d domains partition the cube",
        check: chi_and_domains,
    },
    Suite {
        name: "conjugacy",
        statement: "g_b = h_b⁻¹ ∘ f_b ∘ h_b = Ay − e_b(h_b(y)) on D_b",
        check: conjugacy,
    },
    Suite {
        name: "labels_select_domains",
        statement: "σ_ρ(b)(y) = (−1)^p on h_b⁻¹(E_b(χ(b)+p)) and g_b(y) = Ay − (χ(b)+p) there",
        check: labels_select_domains,
    },
    Suite {
        name: "ball_invariance",
        statement: "every branch maps the closed ball of radius 2r into the open ball",
        check: ball_invariance,
    },
    Suite {
        name: "extension_restricts_to_g",
        statement: "D_b lies inside the ball, G_μ = g_b on D_b, G_μ contracts within label cells",
        check: extension_restricts_to_g,
    },
    Suite {
        name: "certificate_recheck",
        statement: "every periodic-orbit certificate passes the independent recheck with full replay",
        check: certificate_recheck,
    },
];

pub fn verify_properties(seed: u64, counts: &PropertyCounts) -> PropertyReport {
    verify_properties_with(seed, counts, &PropertyHooks::default())
}

pub fn verify_properties_with(seed: u64, counts: &PropertyCounts, hooks: &PropertyHooks) -> PropertyReport {
    let mut suites: Vec<SuiteResult> =
        SUITES.iter().enumerate().map(|(tag, suite)| run_suite(tag as u64, suite, seed, counts, hooks)).collect();
    suites.insert(4, chi_closed_form_vs_grid(seed, counts, hooks));
    let all_passed = suites.iter().all(|s| s.passed);
    PropertyReport { seed, counts: counts.clone(), suites, all_passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PropertyCounts {
        PropertyCounts { systems: 12, samples: 240, oracle_systems: 60 }
    }

    #[test]
    fn small_run_passes() {
        let report = verify_properties(3, &small());
        for suite in &report.suites {
            assert!(suite.passed, "{}: {:?}", suite.name, suite.counterexample);
            assert!(suite.checks > 0, "{}", suite.name);
        }
        assert!(report.all_passed);
        assert_eq!(report.suites.len(), 10);
    }

    #[test]
    fn corrupted_chi_is_caught() {
        fn off_by_one(sys: &ContractedRotation) -> CodeVector {
            let mut chi = sys.chi();
            chi.0[0] += 1;
            chi
        }
        let report = verify_properties_with(3, &small(), &PropertyHooks { chi: off_by_one });
        let partition = report.suites.iter().find(|s| s.name == "chi_and_domains").unwrap();
        assert!(!partition.passed);
        assert!(partition.counterexample.as_ref().unwrap().starts_with("system {"));
        assert!(!report.all_passed);
    }

    #[test]
    fn zero_counts_are_vacuous() {
        let report = verify_properties(1, &PropertyCounts { systems: 0, samples: 0, oracle_systems: 0 });
        assert!(report.all_passed);
        assert!(report.suites.iter().all(|s| s.no_samples && s.checks == 0));
    }

    #[test]
    fn grid_oracle_examples() {
        // A = -1/2, b = 0 on the grid of eighths: min floor(-x/2) = -1
        assert_eq!(grid_chi(&[vec![-4]], &[0], 8), vec![-1]);
        assert_eq!(grid_chi(&[vec![4]], &[0], 8), vec![0]);
    }
}
