use serde::{Deserialize, Serialize};

use crate::arith::{serde_rational, RVector, Rational};
use crate::bounded::BoundedFloatState;
use crate::conjugation::Label;
use crate::error::{Error, Result};
use crate::extension::ExtendedSystem;

use super::kernel::{Kernel, ScaledPoint};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IterationMode {
    Exact,
    Bounded { precision_bits: u32, radius_ceiling: Rational },
}

/// One orbit point with the branch that is applied to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub point: RVector,
    pub label: Label,
    /// The point is off every hyperplane.
    pub regular: bool,
    /// Bounded mode only: the tracked error radius.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub radius: Option<Rational>,
    /// Bounded mode only: the error ball meets a hyperplane, so the label of
    /// the exact point is not determined.
    #[serde(default)]
    pub ambiguous: bool,
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => serde_rational::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        serde_rational::deserialize(d).map(Some)
    }
}

/// The points `y_0, …, y_steps` of the `G_μ`-orbit of `y0`, each with its label.
///
/// In bounded mode a step whose error ball meets a hyperplane is flagged as
/// ambiguous; iteration continues with the label of the dyadic point, so the
/// shadowing guarantee only covers the trace up to the first ambiguous step.
pub fn iterate_orbit(sys: &ExtendedSystem, y0: &RVector, steps: usize, mode: &IterationMode) -> Result<Vec<TraceStep>> {
    if !sys.in_ball(y0) {
        return Err(Error::OutsideBall(sys.ball_radius()));
    }
    let mut kernel = Kernel::new(sys);
    let mut trace = Vec::with_capacity(steps + 1);
    match mode {
        IterationMode::Exact => {
            let mut y = ScaledPoint::from_rvector(y0);
            for _ in 0..=steps {
                let (class, next) = kernel.step_exact(&y);
                trace.push(TraceStep {
                    point: y.to_rvector(),
                    label: class.label,
                    regular: class.on_plane == 0,
                    radius: None,
                    ambiguous: false,
                });
                y = next;
            }
        }
        IterationMode::Bounded { precision_bits, radius_ceiling } => {
            let mut state = BoundedFloatState::from_exact(y0, *precision_bits);
            for _ in 0..=steps {
                let (class, next) = kernel.step_bounded(&state, radius_ceiling)?;
                trace.push(TraceStep {
                    point: state.point(),
                    label: class.label,
                    regular: class.on_plane == 0,
                    radius: Some(state.error_radius().clone()),
                    ambiguous: class.ambiguous != 0,
                });
                state = next;
            }
        }
    }
    Ok(trace)
}
