//! File formats: bodies and grid regions as JSON, profile curves as CSV,
//! and numbers printed with 12 significant digits.

use crate::convex::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::profile::grid::{Grid, GridRegion};
use crate::profile::{ProfileCurve, Provenance, Sample};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::sync::Arc;

/// `{"dim": 2, "kind": "polytope", "vertices": [[x, y], ...]}` or
/// `{"kind": "ball", "center": [...], "radius": r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodyFile {
    Polytope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        vertices: Vec<Point>,
    },
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        center: Point,
        radius: f64,
    },
}

impl BodyFile {
    pub fn to_body(&self) -> Result<ConvexBody> {
        let check = |dim: &Option<usize>, actual: usize| match dim {
            Some(d) if *d != actual => Err(Error::DimensionMismatch(actual, *d)),
            _ => Ok(()),
        };
        match self {
            BodyFile::Polytope { dim, vertices } => {
                let actual = vertices.first().map_or(0, |v| v.len());
                check(dim, actual)?;
                ConvexBody::polytope(vertices)
            }
            BodyFile::Ball { dim, center, radius } => {
                check(dim, center.len())?;
                ConvexBody::ball(center.clone(), *radius)
            }
        }
    }

    pub fn from_body(body: &ConvexBody) -> Self {
        match body.kind() {
            BodyKind::Polytope => BodyFile::Polytope {
                dim: Some(body.dim()),
                vertices: body.vertices().to_vec(),
            },
            BodyKind::Ball => {
                let (c, r) = body.as_ball().expect("ball body");
                BodyFile::Ball {
                    dim: Some(body.dim()),
                    center: c.to_vec(),
                    radius: r,
                }
            }
        }
    }
}

pub fn parse_body(text: &str) -> Result<ConvexBody> {
    let file: BodyFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("body file: {e}")))?;
    file.to_body()
}

/// `{"resolution": N, "origin": [...], "h": h, "cells": [i, ...]}` with
/// flat indices, first axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionFile {
    pub resolution: usize,
    pub origin: Point,
    pub h: f64,
    pub cells: Vec<usize>,
}

impl RegionFile {
    pub fn from_region(region: &GridRegion) -> Self {
        Self {
            resolution: region.grid.resolution,
            origin: region.grid.origin.clone(),
            h: region.grid.h,
            cells: region.cells.clone(),
        }
    }

    /// Rebuilds the region on the body's grid at the stored resolution;
    /// the stored origin and cell size must match that grid.
    pub fn to_region(&self, body: &ConvexBody) -> Result<GridRegion> {
        let grid = Grid::for_body(body, self.resolution)?;
        let tol = 1e-9 * grid.h.max(1e-300) * self.resolution as f64;
        let same_origin =
            self.origin.len() == grid.dim && self.origin.iter().zip(&grid.origin).all(|(a, b)| (a - b).abs() <= tol);
        if !same_origin || (self.h - grid.h).abs() > 1e-9 * grid.h {
            return Err(Error::InvalidInput(
                "region grid does not match the body's grid at this resolution".into(),
            ));
        }
        GridRegion::new(Arc::new(grid), self.cells.clone())
    }
}

pub fn parse_region(text: &str, body: &ConvexBody) -> Result<GridRegion> {
    let file: RegionFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("region file: {e}")))?;
    file.to_region(body)
}

/// `x` with 12 significant digits, plain notation for moderate exponents.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!(
            "{:.*}",
            decimals,
            mant.parse::<f64>().expect("mantissa") * 10f64.powi(exp)
        );
        trim_zeros(s)
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt12(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Rounds every number in a JSON value to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round12(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serializes with every float rounded to 12 significant digits.
pub fn to_json_12<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    round_json(&mut v);
    Ok(v)
}

pub const PROFILE_COLUMNS: &str = "v,method,value,uncertainty,witness";

/// Profile CSV: `# key: value` comment lines carry the body id, total
/// volume and `n`, then one row per sample.
pub fn write_profile_csv(curve: &ProfileCurve, extra_header: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in extra_header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(&format!("# body_id: {}\n", curve.body_id));
    out.push_str(&format!("# total_volume: {}\n", fmt12(curve.total_volume)));
    out.push_str(&format!("# n: {}\n", curve.n));
    out.push_str(PROFILE_COLUMNS);
    out.push('\n');
    for s in &curve.samples {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt12(s.v),
            s.provenance.name(),
            fmt12(s.value),
            fmt12(s.uncertainty),
            s.witness
        ));
    }
    out
}

pub fn read_profile_csv(text: &str) -> Result<ProfileCurve> {
    let bad = |m: String| Error::InvalidInput(format!("profile csv: {m}"));
    let mut body_id = String::new();
    let mut total = None;
    let mut n = None;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once(':') {
                let v = v.trim();
                match k.trim() {
                    "body_id" => body_id = v.to_string(),
                    "total_volume" => total = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                    "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line != PROFILE_COLUMNS {
                return Err(bad(format!("expected header `{PROFILE_COLUMNS}`, got `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.splitn(5, ',').collect();
        if f.len() < 4 {
            return Err(bad(format!("line {}: expected 5 fields", lineno + 1)));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: {e}", lineno + 1)))
        };
        rows.push(Sample {
            v: num(f[0])?,
            provenance: Provenance::parse(f[1].trim())
                .ok_or_else(|| bad(format!("line {}: unknown method `{}`", lineno + 1, f[1])))?,
            value: num(f[2])?,
            uncertainty: num(f[3])?,
            witness: f.get(4).map_or(String::new(), |s| s.to_string()),
        });
    }
    let total = total.ok_or_else(|| bad("missing `# total_volume:` line".into()))?;
    let n = n.ok_or_else(|| bad("missing `# n:` line".into()))?;
    let mut curve = ProfileCurve::new(body_id, total, n)?;
    for s in rows {
        curve.push(s)?;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(0.5604991216397929), "0.56049912164");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.5e-9), "-2.5e-9");
        assert_eq!(fmt12(123456789.0123456), "123456789.012");
        assert_eq!(fmt12(std::f64::consts::PI * 1e20), "3.14159265359e20");
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
    }

    #[test]
    fn body_round_trip() {
        let b = parse_body(r#"{"dim": 2, "kind": "polytope", "vertices": [[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        assert_eq!(b.exact_volume().unwrap(), 1.0);
        let disk = parse_body(r#"{"kind":"ball","center":[0,0],"radius":2}"#).unwrap();
        assert_eq!(disk.as_ball().unwrap().1, 2.0);
        let back: BodyFile = serde_json::from_str(&serde_json::to_string(&BodyFile::from_body(&b)).unwrap()).unwrap();
        assert_eq!(back.to_body().unwrap().vertices(), b.vertices());
        assert!(parse_body(r#"{"kind":"polytope","vertices":[[0,0],[1,0],[1,1]],"halfspaces":[]}"#).is_err());
        assert!(parse_body(r#"{"dim":3,"kind":"polytope","vertices":[[0,0],[1,0],[1,1]]}"#).is_err());
    }

    #[test]
    fn region_round_trip() {
        let b = ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let g = Arc::new(Grid::for_body(&b, 8).unwrap());
        let r = GridRegion::new(g, vec![0, 1, 8, 9]).unwrap();
        let text = serde_json::to_string(&RegionFile::from_region(&r)).unwrap();
        assert_eq!(parse_region(&text, &b).unwrap().cells, r.cells);
        let other = ConvexBody::cuboid(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!(parse_region(&text, &other).is_err());
    }

    #[test]
    fn profile_csv_round_trip() {
        let mut c = ProfileCurve::new("sq", 1.0, 1).unwrap();
        c.push(Sample {
            v: 0.1,
            value: 0.5604991216397929,
            provenance: Provenance::UpperBound,
            uncertainty: 0.0,
            witness: "ball(center=0 0;radius=0.3)".into(),
        })
        .unwrap();
        let text = write_profile_csv(&c, &[("seed".into(), "0".into())]);
        let back = read_profile_csv(&text).unwrap();
        assert_eq!(back.samples.len(), 1);
        assert_eq!(back.samples[0].value, 0.56049912164);
        assert_eq!(back.samples[0].witness, c.samples[0].witness);
        assert_eq!(back.body_id, "sq");
    }
}
