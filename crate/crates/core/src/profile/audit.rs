//! Structural checks on sampled profiles: concavity of `y`, symmetry and
//! monotonicity, the scaling laws, strict subadditivity, and the relation
//! between one-sided slopes and the curvature of ball witnesses.

use super::bounds::{upper_bound_with, UpperBoundOptions, Witness};
use super::{interpolate, ProfileCurve, Provenance};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use serde::Serialize;

/// Multiple of a sample's stated uncertainty tolerated by the audits.
pub const UNCERTAINTY_FACTOR: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub provenance: Provenance,
    pub samples: usize,
    pub tol: f64,
    /// Largest second difference of `y` over consecutive sample triples.
    pub max_second_difference: f64,
    /// Largest second difference minus its allowance; `<= 0` passes.
    pub max_excess: f64,
    pub worst_lambda: Option<f64>,
    pub symmetry_defect: f64,
    pub symmetry_excess: f64,
    pub monotonicity_violations: Vec<f64>,
    pub concave: bool,
    pub symmetric: bool,
    pub monotone: bool,
    pub pass: bool,
}

/// Concavity of `y = J^{(n+1)/n}` by nonuniform second differences,
/// symmetry `I(v) = I(|C| - v)`, and monotonicity on each side of `|C|/2`.
/// Each check allows `tol` plus three times the propagated uncertainty.
pub fn concavity_audit(curve: &ProfileCurve, provenance: Provenance, tol: f64) -> Result<ConcavityReport> {
    let series = curve.series(provenance);
    if series.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "concavity needs at least 3 {} samples, got {}",
            provenance.name(),
            series.len()
        )));
    }
    let total = curve.total_volume;
    let e = (curve.n as f64 + 1.0) / curve.n as f64;
    let pts: Vec<(f64, f64, f64)> = series
        .iter()
        .map(|&(v, i, u)| (v / total, i.powf(e), e * i.powf(e - 1.0) * u))
        .collect();

    let mut max_d = f64::NEG_INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst = None;
    for w in pts.windows(3) {
        let ((x1, y1, u1), (x2, y2, u2), (x3, y3, u3)) = (w[0], w[1], w[2]);
        if x2 <= x1 || x3 <= x2 {
            continue;
        }
        let d = 2.0 * ((y3 - y2) / (x3 - x2) - (y2 - y1) / (x2 - x1)) / (x3 - x1);
        let sigma = 2.0 * (u1 / ((x2 - x1) * (x3 - x1)) + u2 / ((x2 - x1) * (x3 - x2)) + u3 / ((x3 - x2) * (x3 - x1)));
        let excess = d - UNCERTAINTY_FACTOR * sigma;
        max_d = max_d.max(d);
        if excess > max_excess {
            max_excess = excess;
            worst = Some(x2);
        }
    }

    let mut sym = 0.0f64;
    let mut sym_excess = f64::NEG_INFINITY;
    for &(v, i, u) in &series {
        if let Some((j, uj)) = interpolate(&series, total - v) {
            let d = (i - j).abs();
            sym = sym.max(d);
            sym_excess = sym_excess.max(d - UNCERTAINTY_FACTOR * (u + uj));
        }
    }

    let mut mono = Vec::new();
    for w in series.windows(2) {
        let ((va, ia, ua), (vb, ib, ub)) = (w[0], w[1]);
        let allow = tol + UNCERTAINTY_FACTOR * (ua + ub);
        if vb <= total / 2.0 && ib < ia - allow {
            mono.push(vb);
        }
        if va >= total / 2.0 && ib > ia + allow {
            mono.push(vb);
        }
    }

    let concave = max_excess <= tol;
    let symmetric = sym_excess <= tol;
    let monotone = mono.is_empty();
    Ok(ConcavityReport {
        provenance,
        samples: series.len(),
        tol,
        max_second_difference: max_d,
        max_excess,
        worst_lambda: worst,
        symmetry_defect: sym,
        symmetry_excess: sym_excess.max(0.0),
        monotonicity_violations: mono,
        concave,
        symmetric,
        monotone,
        pass: concave && symmetric && monotone,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub v: f64,
    /// `I_{λC}(λ^{n+1} v)`.
    pub scaled: f64,
    /// `λ^n I_C(v)`.
    pub expected: f64,
    /// `I_big(v) - I_small(v)` where both are defined.
    pub one_sided: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub tol: f64,
    pub rows: Vec<ScalingRow>,
    pub equality_defect: f64,
    /// Least `I_big(v) - I_small(v)`; the body scaled by `max(λ, 1)` plays
    /// the larger role.
    pub one_sided_defect: f64,
    pub pass: bool,
}

/// Compares upper-bound curves of the body and of `λ` times the body.
pub fn scaling_audit(
    body: &ConvexBody,
    lambda: f64,
    v_grid: &[f64],
    tol: f64,
    opts: &UpperBoundOptions,
) -> Result<ScalingReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "scale factor must be positive, got {lambda}"
        )));
    }
    let scaled_body = body.scaled(lambda)?;
    let n = body.dim() as i32 - 1;
    let total = body.exact_volume()?;
    let scaled_total = scaled_body.exact_volume()?;
    let (big, small, small_total) = if lambda >= 1.0 {
        (&scaled_body, body, total)
    } else {
        (body, &scaled_body, scaled_total)
    };
    let mut rows = Vec::with_capacity(v_grid.len());
    for &v in v_grid {
        let base = upper_bound_with(body, v, opts)?.value;
        let scaled = upper_bound_with(&scaled_body, lambda.powi(n + 1) * v, opts)?.value;
        let one_sided = if v < small_total {
            Some(upper_bound_with(big, v, opts)?.value - upper_bound_with(small, v, opts)?.value)
        } else {
            None
        };
        rows.push(ScalingRow {
            v,
            scaled,
            expected: lambda.powi(n) * base,
            one_sided,
        });
    }
    let equality_defect = rows.iter().map(|r| (r.scaled - r.expected).abs()).fold(0.0, f64::max);
    let one_sided_defect = rows
        .iter()
        .filter_map(|r| r.one_sided)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    Ok(ScalingReport {
        lambda,
        tol,
        pass: equality_defect <= tol && one_sided_defect >= -tol,
        rows,
        equality_defect,
        one_sided_defect,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityRow {
    pub v1: f64,
    pub v2: f64,
    /// `I(v1) + I(v2) - I(v1 + v2)`.
    pub margin: f64,
    pub uncertainty: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityReport {
    pub provenance: Provenance,
    pub rows: Vec<SubadditivityRow>,
    pub min_margin: f64,
    pub pass: bool,
}

/// Margins of `I(v1 + v2) < I(v1) + I(v2)` on the linearly interpolated
/// curve; each must exceed three times the combined uncertainty.
pub fn strict_subadditivity_probe(
    curve: &ProfileCurve,
    provenance: Provenance,
    pairs: &[(f64, f64)],
) -> Result<SubadditivityReport> {
    let series = curve.series(provenance);
    let at = |v: f64| {
        interpolate(&series, v).ok_or_else(|| Error::InvalidInput(format!("v = {v} is outside the sampled range")))
    };
    let mut rows = Vec::with_capacity(pairs.len());
    for &(v1, v2) in pairs {
        if !(v1 > 0.0 && v2 > 0.0 && v1 + v2 < curve.total_volume) {
            return Err(Error::VolumeOutOfRange {
                v: v1 + v2,
                total: curve.total_volume,
            });
        }
        let (a, ua) = at(v1)?;
        let (b, ub) = at(v2)?;
        let (c, uc) = at(v1 + v2)?;
        let margin = a + b - c;
        let uncertainty = UNCERTAINTY_FACTOR * (ua + ub + uc);
        rows.push(SubadditivityRow {
            v1,
            v2,
            margin,
            uncertainty,
            pass: margin > uncertainty,
        });
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(SubadditivityReport {
        provenance,
        pass: rows.iter().all(|r| r.pass),
        rows,
        min_margin,
    })
}

pub const CURVATURE_CONVENTION: &str = "H = 1/rho for a ball witness of radius rho (mean of principal curvatures), \
negative when the region is the complement of the ball";

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub v: f64,
    pub delta: f64,
    pub radius: f64,
    pub curvature: f64,
    pub slope_left: f64,
    pub slope_right: f64,
    pub slope_central: f64,
    /// `|slope_central - curvature|`.
    pub mismatch: f64,
    /// `v^{1/(n+1)} H`.
    pub scaled_curvature: f64,
    /// `I(|C|/2) / (|C|/2)^{n/(n+1)}`.
    pub m: f64,
    /// Largest `I^{(n+1)/n}(v) / v` over the curve.
    pub big_m: f64,
    /// `M n / ((n+1) m^{1/n})`.
    pub bound: f64,
    pub bound_holds: bool,
    pub convention: &'static str,
}

/// Slopes of the upper-bound profile at `v` (steps of `1e-4 |C|`) against
/// the curvature of the ball witness, plus the scale-free curvature bound
/// computed from the curve.
pub fn curvature_audit(
    curve: &ProfileCurve,
    body: &ConvexBody,
    v: f64,
    opts: &UpperBoundOptions,
) -> Result<CurvatureReport> {
    let total = curve.total_volume;
    let delta = 1e-4 * total;
    if !(v - delta > 0.0 && v + delta < total) {
        return Err(Error::VolumeOutOfRange { v, total });
    }
    let mid = upper_bound_with(body, v, opts)?;
    let (radius, sign) = match mid.witness {
        Witness::Ball { radius, complement, .. } => (radius, if complement { -1.0 } else { 1.0 }),
        _ => return Err(Error::WitnessNotBall),
    };
    let lo = upper_bound_with(body, v - delta, opts)?.value;
    let hi = upper_bound_with(body, v + delta, opts)?.value;
    let curvature = sign / radius;
    let slope_central = (hi - lo) / (2.0 * delta);

    let provenance = [Provenance::UpperBound, Provenance::Analytic, Provenance::Oracle]
        .into_iter()
        .find(|p| curve.samples.iter().any(|s| s.provenance == *p))
        .ok_or_else(|| Error::InvalidInput("curve has no samples".into()))?;
    let series = curve.series(provenance);
    let n = curve.n as f64;
    let e = n / (n + 1.0);
    let half = match interpolate(&series, total / 2.0) {
        Some((i, _)) => i,
        None => upper_bound_with(body, total / 2.0, opts)?.value,
    };
    let m = half / (total / 2.0).powf(e);
    let big_m = series
        .iter()
        .map(|&(w, i, _)| i.powf(1.0 / e) / w)
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled_curvature = v.powf(1.0 / (n + 1.0)) * curvature;
    let bound = big_m * n / ((n + 1.0) * m.powf(1.0 / n));
    Ok(CurvatureReport {
        v,
        delta,
        radius,
        curvature,
        slope_left: (mid.value - lo) / delta,
        slope_right: (hi - mid.value) / delta,
        slope_central,
        mismatch: (slope_central - curvature).abs(),
        scaled_curvature,
        m,
        big_m,
        bound,
        bound_holds: scaled_curvature <= bound,
        convention: CURVATURE_CONVENTION,
    })
}
