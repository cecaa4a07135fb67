//! Isoperimetric profiles: sampled curves with provenance, candidate upper
//! bounds, transfer lower bounds, the grid oracle, and structural audits.

pub mod audit;
pub mod bounds;
pub mod grid;
pub mod oracle;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub use audit::{
    concavity_audit, curvature_audit, scaling_audit, strict_subadditivity_probe, ConcavityReport, CurvatureReport,
    ScalingReport, SubadditivityReport,
};
pub use bounds::{
    ball_profile_constant, lower_bound_ball_transfer, lower_bound_half_profile, profile_curve, upper_bound,
    BallTransfer, CurveOptions, Method, UpperBoundOptions, Witness,
};

/// Where a profile value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    #[serde(rename = "upper")]
    UpperBound,
    #[serde(rename = "lower")]
    LowerBound,
    Oracle,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::UpperBound => "upper",
            Provenance::LowerBound => "lower",
            Provenance::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(Provenance::Analytic),
            "upper" => Some(Provenance::UpperBound),
            "lower" => Some(Provenance::LowerBound),
            "oracle" => Some(Provenance::Oracle),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub v: f64,
    pub value: f64,
    pub provenance: Provenance,
    pub uncertainty: f64,
    #[serde(default)]
    pub witness: String,
}

/// Sampled values of `I_C` for one body, kept sorted by `v`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub body_id: String,
    pub total_volume: f64,
    /// `n`, one less than the ambient dimension.
    pub n: usize,
    pub samples: Vec<Sample>,
}

/// Points `(x, value)` of one normalized curve.
pub type Series = Vec<(f64, f64)>;

#[derive(Clone, Debug, Serialize)]
pub struct Normalized {
    /// `Y = I^{(n+1)/n}` against `v`.
    pub big_y: Series,
    /// `J(λ) = I(λ|C|)` against `λ`.
    pub j: Series,
    /// `y = J^{(n+1)/n}` against `λ`.
    pub y: Series,
}

impl ProfileCurve {
    pub fn new(body_id: impl Into<String>, total_volume: f64, n: usize) -> Result<Self> {
        if !(total_volume > 0.0) {
            return Err(Error::NonpositiveVolume(total_volume));
        }
        if n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        Ok(Self {
            body_id: body_id.into(),
            total_volume,
            n,
            samples: Vec::new(),
        })
    }

    /// Inserts keeping the samples ordered by `v` (stable among equal `v`).
    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if !(sample.v > 0.0 && sample.v < self.total_volume) {
            return Err(Error::VolumeOutOfRange {
                v: sample.v,
                total: self.total_volume,
            });
        }
        if !(sample.value > 0.0 && sample.value.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "profile value must be positive, got {}",
                sample.value
            )));
        }
        let at = self.samples.partition_point(|s| s.v <= sample.v);
        self.samples.insert(at, sample);
        Ok(())
    }

    /// `(v, value, uncertainty)` of the samples with the given provenance.
    pub fn series(&self, p: Provenance) -> Vec<(f64, f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.provenance == p)
            .map(|s| (s.v, s.value, s.uncertainty))
            .collect()
    }

    pub fn provenances(&self) -> Vec<Provenance> {
        let mut p: Vec<Provenance> = self.samples.iter().map(|s| s.provenance).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn normalizations(&self) -> Normalized {
        let e = (self.n as f64 + 1.0) / self.n as f64;
        let big_y = self.samples.iter().map(|s| (s.v, s.value.powf(e))).collect();
        let j: Series = self
            .samples
            .iter()
            .map(|s| (s.v / self.total_volume, s.value))
            .collect();
        let y = j.iter().map(|&(l, v)| (l, v.powf(e))).collect();
        Normalized { big_y, j, y }
    }

    /// Every lower-bound sample lies below every upper-bound or oracle
    /// sample at the same `v`, up to their combined uncertainty.
    pub fn ordering_violations(&self) -> Vec<f64> {
        let mut bad = Vec::new();
        for lo in self.samples.iter().filter(|s| s.provenance == Provenance::LowerBound) {
            for hi in self
                .samples
                .iter()
                .filter(|s| s.v == lo.v && s.provenance != Provenance::LowerBound)
            {
                if lo.value > hi.value + lo.uncertainty + hi.uncertainty {
                    bad.push(lo.v);
                }
            }
        }
        for o in self.samples.iter().filter(|s| s.provenance == Provenance::Oracle) {
            for u in self
                .samples
                .iter()
                .filter(|s| s.v == o.v && s.provenance == Provenance::UpperBound)
            {
                if o.value > u.value + o.uncertainty + u.uncertainty {
                    bad.push(o.v);
                }
            }
        }
        bad
    }
}

/// Linear interpolation in a `v`-sorted series; `None` outside its range.
pub fn interpolate(series: &[(f64, f64, f64)], v: f64) -> Option<(f64, f64)> {
    let first = series.first()?;
    let last = series.last()?;
    if v < first.0 || v > last.0 {
        return None;
    }
    let k = series.partition_point(|s| s.0 < v);
    if k < series.len() && series[k].0 == v {
        return Some((series[k].1, series[k].2));
    }
    let (a, b) = (&series[k - 1], &series[k]);
    let t = (v - a.0) / (b.0 - a.0);
    Some((a.1 + t * (b.1 - a.1), a.2.max(b.2)))
}
