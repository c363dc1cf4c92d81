//! Dense real vectors with the Euclidean inner product.
//!
//! The fallible free functions ([`inner`], [`dist`], [`combine`]) check
//! dimensions and are the public entry points. The operator impls on `&Point`
//! are for internal arithmetic where dimensions are already known to agree;
//! they panic on mismatch, the same way slice indexing would.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Componentwise tolerance for comparing points.
pub const POINT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, rejecting empty or non-finite coordinate lists.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index, value });
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Point(vec![0.0; dim])
    }

    /// Wraps coordinates produced by arithmetic on valid points. Finiteness is
    /// not re-checked; callers that may overflow use [`Point::is_finite`].
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self - other).norm()
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    /// `(1 - t) * self + t * other` without range checks on `t`.
    pub(crate) fn lerp(&self, other: &Point, t: f64) -> Point {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let s = 1.0 - t;
        // Equal coordinates are copied so that fixed points stay fixed exactly.
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| if a == b { *a } else { s * a + t * b })
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Point {
    type Output = Point;

    fn add(self, rhs: &Point) -> Point {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Point {
    type Output = Point;

    fn sub(self, rhs: &Point) -> Point {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub fn inner(a: &Point, b: &Point) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.dot(b))
}

pub fn norm(a: &Point) -> f64 {
    a.norm()
}

pub fn dist(a: &Point, b: &Point) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.distance(b))
}

/// Convex combination `(1 - t) a + t b` for `t` in `[0, 1]`.
pub fn combine(a: &Point, b: &Point, t: f64) -> Result<Point> {
    check_dims(a.dim(), b.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "combination weight {t} is outside [0, 1]"
        )));
    }
    Ok(a.lerp(b, t))
}
