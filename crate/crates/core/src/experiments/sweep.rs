//! Parameter sweeps over translations `b`, certifying attractors from a grid
//! of initial conditions for every sampled system.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, rat, RMatrix, RVector};
use crate::dynamics::certify::UndeterminedReason;
use crate::dynamics::{attractor_scan, recheck_certificate, Budget, InitialGrid, OrbitVerdict};
use crate::dynamics::scan::VerdictCounts;
use crate::error::{Error, Result};
use crate::extension::ExtendedSystem;
use crate::rotation::ContractedRotation;

use super::sampling::{random_unit_vector, sample_rng, MatrixSampler, TRANSLATION_BITS};

/// Replay limit for the sweep's own recheck of every certificate.
const SWEEP_REPLAY_LIMIT: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    Fixed {
        #[serde(rename = "A")]
        a: RMatrix,
    },
    /// A fresh matrix per sample.
    Random(MatrixSampler),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranslationSampler {
    /// The grid `{i/n}^d`; `samples` must equal `n^d`.
    Grid,
    /// Denominator `2^31` rationals.
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d: usize,
    pub matrix: MatrixSpec,
    pub b_sampler: TranslationSampler,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub initial_grid: InitialGrid,
    #[serde(default)]
    pub budget: Budget,
}

impl SweepSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn grid_side(&self) -> Result<usize> {
        if self.samples == 0 {
            return Ok(0);
        }
        let side = (self.samples as f64).powf(1.0 / self.d as f64).round() as usize;
        let exact = u32::try_from(self.d).ok().and_then(|d| side.checked_pow(d));
        if exact != Some(self.samples) {
            return Err(Error::Invalid(format!("{} grid samples is not a {}-th power", self.samples, self.d)));
        }
        Ok(side)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > crate::rotation::MAX_DIM {
            return Err(Error::UnsupportedDimension(self.d));
        }
        match &self.matrix {
            MatrixSpec::Fixed { a } if a.dim() != self.d => {
                return Err(Error::DimensionMismatch { expected: self.d, found: a.dim() })
            }
            MatrixSpec::Fixed { a } => {
                ContractedRotation::new(a.clone(), RVector::zeros(self.d))?;
            }
            MatrixSpec::Random(sampler) => sampler.validate(self.d)?,
        }
        if self.b_sampler == TranslationSampler::Grid {
            self.grid_side()?;
        }
        self.initial_grid.points(self.d)?;
        Ok(())
    }

    /// The system of sample `index`.
    pub fn system(&self, index: usize) -> Result<ContractedRotation> {
        let mut rng = sample_rng(self.seed, index as u64);
        let a = match &self.matrix {
            MatrixSpec::Fixed { a } => a.clone(),
            MatrixSpec::Random(sampler) => sampler.sample(&mut rng, self.d)?,
        };
        let b = match self.b_sampler {
            TranslationSampler::Random => random_unit_vector(&mut rng, self.d, TRANSLATION_BITS),
            TranslationSampler::Grid => {
                let n = self.grid_side()?;
                let mut idx = index;
                (0..self.d)
                    .map(|_| {
                        let i = idx % n;
                        idx /= n;
                        rat(i as i64, n as i64)
                    })
                    .collect()
            }
        };
        ContractedRotation::new(a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    /// Present when the matrix is sampled.
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    pub a: Option<RMatrix>,
    pub b: RVector,
    /// `χ(b)`, which is also the cell `U_k` containing `b`.
    pub k: Vec<i64>,
    pub counts: VerdictCounts,
    /// Distinct certified periods, ascending.
    pub periods: Vec<usize>,
    /// Every initial condition not hitting a hyperplane was certified.
    pub fully_certified: bool,
    /// Certificates rejected by a recheck.
    pub recheck_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SampleRecord {
    /// Samples whose every initial condition hits a hyperplane carry no information.
    pub fn evaluated(&self) -> bool {
        self.error.is_none() && self.counts.total() > self.counts.hit_discontinuity
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub samples: usize,
    /// Samples with at least one initial condition off the hyperplanes.
    pub evaluated: usize,
    pub fully_certified: usize,
    pub certified_fraction: Option<f64>,
    /// Fraction of evaluated samples with an undetermined initial condition.
    pub undetermined_fraction: Option<f64>,
    pub counts: VerdictCounts,
    /// Period → number of samples exhibiting it.
    pub period_histogram: BTreeMap<usize, usize>,
    /// `U_k` cell → number of samples.
    pub buckets: BTreeMap<String, usize>,
    pub recheck_failures: usize,
    pub sample_errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub records: Vec<SampleRecord>,
    pub aggregate: SweepAggregate,
}

/// Wall-clock data kept apart from the report so that reports are reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMeta {
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub version: String,
}

impl RuntimeMeta {
    pub fn since(start: std::time::Instant) -> Self {
        RuntimeMeta {
            elapsed_seconds: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn bucket_name(k: &[i64]) -> String {
    let parts: Vec<String> = k.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

fn run_sample(spec: &SweepSpec, index: usize) -> SampleRecord {
    let mut record = SampleRecord {
        index,
        a: None,
        b: RVector::zeros(spec.d),
        k: Vec::new(),
        counts: VerdictCounts::default(),
        periods: Vec::new(),
        fully_certified: false,
        recheck_failures: 0,
        error: None,
    };
    let sys = match spec.system(index) {
        Ok(sys) => sys,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    if matches!(spec.matrix, MatrixSpec::Random(_)) {
        record.a = Some(sys.matrix().clone());
    }
    record.b = sys.translation().clone();
    record.k = sys.chi().0;
    let report = match attractor_scan(&sys, &spec.initial_grid, &spec.budget) {
        Ok(report) => report,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let ext = ExtendedSystem::from_rotation(&sys);
    for point in &report.points {
        match &point.verdict {
            OrbitVerdict::Certified(cert) => {
                let y0 = crate::conjugation::h_inverse(&sys, &point.x0);
                if !recheck_certificate(&ext, &y0, cert, SWEEP_REPLAY_LIMIT).passed() {
                    record.recheck_failures += 1;
                }
            }
            OrbitVerdict::Undetermined(d) if d.reason == UndeterminedReason::RecheckFailed => {
                record.recheck_failures += 1;
            }
            _ => {}
        }
    }
    let mut periods: Vec<usize> = report.orbits.iter().map(|o| o.period).collect();
    periods.sort_unstable();
    periods.dedup();
    record.periods = periods;
    record.fully_certified = report.counts.undetermined == 0 && report.counts.certified > 0;
    record.counts = report.counts;
    record
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let records: Vec<SampleRecord> = (0..spec.samples).into_par_iter().map(|i| run_sample(spec, i)).collect();

    let mut agg = SweepAggregate { samples: records.len(), ..SweepAggregate::default() };
    let mut undetermined_samples = 0usize;
    for r in &records {
        if r.error.is_some() {
            agg.sample_errors += 1;
            continue;
        }
        agg.counts.certified += r.counts.certified;
        agg.counts.hit_discontinuity += r.counts.hit_discontinuity;
        agg.counts.undetermined += r.counts.undetermined;
        agg.recheck_failures += r.recheck_failures;
        *agg.buckets.entry(bucket_name(&r.k)).or_default() += 1;
        for &p in &r.periods {
            *agg.period_histogram.entry(p).or_default() += 1;
        }
        if r.evaluated() {
            agg.evaluated += 1;
            if r.fully_certified {
                agg.fully_certified += 1;
            }
            if r.counts.undetermined > 0 {
                undetermined_samples += 1;
            }
        }
    }
    if agg.evaluated > 0 {
        agg.certified_fraction = Some(agg.fully_certified as f64 / agg.evaluated as f64);
        agg.undetermined_fraction = Some(undetermined_samples as f64 / agg.evaluated as f64);
    }
    Ok(SweepReport { spec: spec.clone(), records, aggregate: agg })
}

impl SweepReport {
    /// Columns `b_1..b_d, k, certified, hit_discontinuity, undetermined, periods`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.spec.d).map(|j| format!("b_{j}")).collect();
        header.extend(["k", "certified", "hit_discontinuity", "undetermined", "periods"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.b.iter().map(format_rational).collect();
            row.push(r.k.iter().map(i64::to_string).collect::<Vec<_>>().join(";"));
            row.push(r.counts.certified.to_string());
            row.push(r.counts.hit_discontinuity.to_string());
            row.push(r.counts.undetermined.to_string());
            row.push(r.periods.iter().map(usize::to_string).collect::<Vec<_>>().join(";"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
