//! Declarative continuous maps `[0,1]^2 -> [0,1]`.
//!
//! Specs are JSON objects with a `"kind"` discriminator:
//!
//! ```json
//! {"kind": "polynomial", "terms": [{"coeff": 0.5, "x_pow": 1, "y_pow": 0}]}
//! {"kind": "grid-bilinear", "rows": 2, "cols": 2, "values": [0, 1, 1, 0]}
//! {"kind": "distance-to-point", "anchor": ["1/3", "1/3"]}
//! {"kind": "composition-clamped", "inner": {"kind": "coordinate-x"}, "outer": [0, 0, 1]}
//! ```
//!
//! Every output is clamped to `[0,1]`; clamping is part of the map and keeps
//! it continuous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Point2, UnitValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    #[serde(default)]
    pub x_pow: u32,
    #[serde(default)]
    pub y_pow: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionKind {
    CoordinateX,
    CoordinateY,
    /// `clamp(sum coeff * x^x_pow * y^y_pow)`.
    Polynomial {
        terms: Vec<Monomial>,
    },
    /// Bilinear interpolation on a regular `rows x cols` grid over the
    /// square. `values` is row-major with row 0 at `y = 0` and column 0 at
    /// `x = 0`.
    GridBilinear {
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    },
    /// `clamp(|p - anchor|)`.
    DistanceToPoint {
        anchor: Point2,
    },
    /// `clamp(outer(inner(p)))` with `outer` a univariate polynomial given by
    /// ascending coefficients.
    CompositionClamped {
        inner: Box<FunctionKind>,
        outer: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub kind: FunctionKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, description: impl Into<String>) -> Result<Self> {
        let spec = FunctionSpec {
            kind,
            description: description.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FunctionSpec = serde_json::from_str(text).map_err(|e| Error::MalformedSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        validate_kind(&self.kind)
    }

    /// Evaluates at a point given by real coordinates in the square.
    pub fn eval_xy(&self, x: f64, y: f64) -> UnitValue {
        UnitValue::clamped(raw_eval(&self.kind, x, y))
    }

    pub fn label(&self) -> String {
        if self.description.is_empty() {
            serde_json::to_string(&self.kind).expect("specs serialize")
        } else {
            self.description.clone()
        }
    }
}

fn validate_kind(kind: &FunctionKind) -> Result<()> {
    let bad = |m: String| Err(Error::MalformedSpec(m));
    match kind {
        FunctionKind::CoordinateX | FunctionKind::CoordinateY | FunctionKind::DistanceToPoint { .. } => Ok(()),
        FunctionKind::Polynomial { terms } => {
            if terms.is_empty() {
                return bad("polynomial needs at least one term".into());
            }
            if terms.iter().any(|t| !t.coeff.is_finite()) {
                return bad("polynomial coefficients must be finite".into());
            }
            Ok(())
        }
        FunctionKind::GridBilinear { rows, cols, values } => {
            if *rows < 2 || *cols < 2 {
                return bad(format!("grid must be at least 2x2, got {rows}x{cols}"));
            }
            if values.len() != rows * cols {
                return bad(format!(
                    "grid {rows}x{cols} needs {} values, got {}",
                    rows * cols,
                    values.len()
                ));
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return bad(format!("grid value {v} outside [0,1]"));
            }
            Ok(())
        }
        FunctionKind::CompositionClamped { inner, outer } => {
            if outer.is_empty() || outer.iter().any(|c| !c.is_finite()) {
                return bad("outer polynomial needs finite coefficients".into());
            }
            validate_kind(inner)
        }
    }
}

fn raw_eval(kind: &FunctionKind, x: f64, y: f64) -> f64 {
    match kind {
        FunctionKind::CoordinateX => x,
        FunctionKind::CoordinateY => y,
        FunctionKind::Polynomial { terms } => terms
            .iter()
            .map(|t| t.coeff * x.powi(t.x_pow as i32) * y.powi(t.y_pow as i32))
            .sum(),
        FunctionKind::GridBilinear { rows, cols, values } => bilinear(*rows, *cols, values, x, y),
        FunctionKind::DistanceToPoint { anchor } => {
            let (ax, ay) = anchor.to_f64();
            (x - ax).hypot(y - ay)
        }
        FunctionKind::CompositionClamped { inner, outer } => {
            let v = raw_eval(inner, x, y).clamp(0.0, 1.0);
            outer.iter().rev().fold(0.0, |acc, c| acc * v + c)
        }
    }
}

fn bilinear(rows: usize, cols: usize, values: &[f64], x: f64, y: f64) -> f64 {
    let locate = |t: f64, n: usize| {
        let scaled = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let cell = (scaled.floor() as usize).min(n - 2);
        (cell, scaled - cell as f64)
    };
    let (c, fx) = locate(x, cols);
    let (r, fy) = locate(y, rows);
    let at = |r: usize, c: usize| values[r * cols + c];
    let bottom = at(r, c) * (1.0 - fx) + at(r, c + 1) * fx;
    let top = at(r + 1, c) * (1.0 - fx) + at(r + 1, c + 1) * fx;
    bottom * (1.0 - fy) + top * fy
}

/// `f(p)` for a spec.
pub fn eval_f(spec: &FunctionSpec, p: &Point2) -> UnitValue {
    let (x, y) = p.to_f64();
    spec.eval_xy(x, y)
}

const BUNDLED: [(&str, &str); 8] = [
    ("coordinate-x", include_str!("../../specs/coordinate_x.json")),
    ("coordinate-y", include_str!("../../specs/coordinate_y.json")),
    ("poly-rising", include_str!("../../specs/poly_rising.json")),
    ("poly-falling", include_str!("../../specs/poly_falling.json")),
    ("poly-saddle", include_str!("../../specs/poly_saddle.json")),
    ("grid-ridge", include_str!("../../specs/grid_ridge.json")),
    ("grid-checker", include_str!("../../specs/grid_checker.json")),
    ("distance-third", include_str!("../../specs/distance_third.json")),
];

/// The fixed test family: both projections, three polynomials, two 4x4
/// bilinear grids and the distance to (1/3, 1/3).
pub fn bundled_specs() -> Vec<(&'static str, FunctionSpec)> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let spec = FunctionSpec::from_json(text).unwrap_or_else(|e| panic!("bundled spec {name}: {e}"));
            (*name, spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(xn: i64, xd: i64, yn: i64, yd: i64) -> Point2 {
        Point2::from_fractions(xn, xd, yn, yd).unwrap()
    }

    #[test]
    fn projection_and_clamp_examples() {
        let fx = FunctionSpec::new(FunctionKind::CoordinateX, "").unwrap();
        assert_eq!(eval_f(&fx, &pt(1, 2, 1, 4)).get(), 0.5);
        let grid = FunctionSpec::new(
            FunctionKind::GridBilinear {
                rows: 3,
                cols: 2,
                values: vec![0.7; 6],
            },
            "",
        )
        .unwrap();
        assert!((eval_f(&grid, &pt(1, 3, 5, 7)).get() - 0.7).abs() < 1e-15);
        let sum = FunctionSpec::new(
            FunctionKind::Polynomial {
                terms: vec![
                    Monomial {
                        coeff: 1.0,
                        x_pow: 1,
                        y_pow: 0,
                    },
                    Monomial {
                        coeff: 1.0,
                        x_pow: 0,
                        y_pow: 1,
                    },
                ],
            },
            "x+y",
        )
        .unwrap();
        assert_eq!(eval_f(&sum, &pt(8, 10, 9, 10)).get(), 1.0);
    }

    #[test]
    fn bilinear_hits_grid_nodes() {
        let values = vec![0.0, 0.25, 0.5, 1.0];
        let g = FunctionSpec::new(
            FunctionKind::GridBilinear {
                rows: 2,
                cols: 2,
                values,
            },
            "",
        )
        .unwrap();
        assert_eq!(g.eval_xy(0.0, 0.0).get(), 0.0);
        assert_eq!(g.eval_xy(1.0, 0.0).get(), 0.25);
        assert_eq!(g.eval_xy(0.0, 1.0).get(), 0.5);
        assert_eq!(g.eval_xy(1.0, 1.0).get(), 1.0);
        assert!((g.eval_xy(0.5, 0.5).get() - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn composition_applies_outer_polynomial() {
        let sq = FunctionSpec::new(
            FunctionKind::CompositionClamped {
                inner: Box::new(FunctionKind::CoordinateX),
                outer: vec![0.0, 0.0, 1.0],
            },
            "",
        )
        .unwrap();
        assert!((sq.eval_xy(0.3, 0.9).get() - 0.09).abs() < 1e-15);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        let cases = [
            r#"{"kind": "polynomial", "terms": []}"#,
            r#"{"kind": "grid-bilinear", "rows": 2, "cols": 2, "values": [0, 1, 1]}"#,
            r#"{"kind": "grid-bilinear", "rows": 2, "cols": 2, "values": [0, 1, 1, 2]}"#,
            r#"{"kind": "grid-bilinear", "rows": 1, "cols": 2, "values": [0, 1]}"#,
            r#"{"kind": "spline"}"#,
            r#"{"kind": "distance-to-point", "anchor": ["3/2", "0"]}"#,
            r#"{"kind": "composition-clamped", "inner": {"kind": "coordinate-x"}, "outer": []}"#,
            "not json",
        ];
        for text in cases {
            assert!(
                matches!(FunctionSpec::from_json(text), Err(Error::MalformedSpec(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn json_round_trip_keeps_the_kind_tag() {
        for (_, spec) in bundled_specs() {
            let text = spec.to_json();
            assert!(text.contains("\"kind\""));
            assert_eq!(FunctionSpec::from_json(&text).unwrap(), spec);
        }
    }

    #[test]
    fn bundled_family_has_eight_members() {
        assert_eq!(bundled_specs().len(), 8);
    }
}
