//! Closed convex sets with exact metric projections.
//!
//! [`ConvexSetSpec`] is the declarative form (what a config file holds);
//! [`ConvexSet`] is the validated form, built with [`ConvexSetSpec::build`] or
//! the named constructors. Everything that consumes sets goes through the
//! [`Region`] trait so property suites can be pointed at test doubles.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{check_dims, Point};
use crate::SampleRng;

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Residual norm below which a basis vector is treated as dependent.
const RANK_TOL: f64 = 1e-12;

/// Side of the box that unbounded sets are sampled from.
const SAMPLE_BOX_SIDE: f64 = 10.0;

/// A closed convex subset of R^d with an exact projection.
pub trait Region {
    fn dim(&self) -> usize;

    /// Nearest point of the set to `x`.
    fn project(&self, x: &Point) -> Point;

    /// Draws a point of the set.
    fn sample(&self, rng: &mut SampleRng) -> Point;

    fn dist_to(&self, x: &Point) -> f64 {
        x.distance(&self.project(x))
    }

    fn contains(&self, x: &Point, tol: f64) -> bool {
        self.dist_to(x) <= tol
    }
}

/// Declarative set description, as written in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConvexSetSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : <normal, x> <= offset}`
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// `{x : <normal, x> = offset}`
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Affine { origin: Vec<f64>, basis: Vec<Vec<f64>> },
    Segment { p: Vec<f64>, q: Vec<f64> },
    Singleton { p: Vec<f64> },
    Translate { inner: Box<ConvexSetSpec>, shift: Vec<f64> },
}

impl ConvexSetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        let pt = |v: &Vec<f64>| Point::new(v.clone());
        match self {
            ConvexSetSpec::Box { lo, hi } => ConvexSet::boxed(pt(lo)?, pt(hi)?),
            ConvexSetSpec::Ball { center, radius } => ConvexSet::ball(pt(center)?, *radius),
            ConvexSetSpec::Halfspace { normal, offset } => ConvexSet::halfspace(pt(normal)?, *offset),
            ConvexSetSpec::Hyperplane { normal, offset } => {
                ConvexSet::hyperplane(pt(normal)?, *offset)
            }
            ConvexSetSpec::Affine { origin, basis } => {
                let basis = basis.iter().map(pt).collect::<Result<Vec<_>>>()?;
                ConvexSet::affine(pt(origin)?, basis)
            }
            ConvexSetSpec::Segment { p, q } => ConvexSet::segment(pt(p)?, pt(q)?),
            ConvexSetSpec::Singleton { p } => Ok(ConvexSet::singleton(pt(p)?)),
            ConvexSetSpec::Translate { inner, shift } => ConvexSet::translate(inner.build()?, pt(shift)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    Halfspace { normal: Point, offset: f64, norm_sq: f64 },
    Hyperplane { normal: Point, offset: f64, norm_sq: f64 },
    /// `basis` is orthonormal.
    Affine { origin: Point, basis: Vec<Point> },
    Segment { p: Point, dir: Point, len_sq: f64 },
    Singleton { p: Point },
    Translate { inner: Box<ConvexSet>, shift: Point },
}

/// A validated, immutable closed convex set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSet {
    shape: Shape,
    dim: usize,
}

impl ConvexSet {
    /// Axis-aligned box `lo <= x <= hi`.
    pub fn boxed(lo: Point, hi: Point) -> Result<Self> {
        check_dims(lo.dim(), hi.dim())?;
        if let Some(i) = (0..lo.dim()).find(|&i| lo.coords()[i] > hi.coords()[i]) {
            return Err(Error::InvalidSet(format!(
                "box has lo[{i}] = {} > hi[{i}] = {}",
                lo.coords()[i],
                hi.coords()[i]
            )));
        }
        let dim = lo.dim();
        Ok(ConvexSet { shape: Shape::Box { lo, hi }, dim })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidSet(format!("ball radius {radius} must be finite and >= 0")));
        }
        let dim = center.dim();
        Ok(ConvexSet { shape: Shape::Ball { center, radius }, dim })
    }

    pub fn halfspace(normal: Point, offset: f64) -> Result<Self> {
        let norm_sq = Self::check_normal(&normal, offset)?;
        let dim = normal.dim();
        Ok(ConvexSet { shape: Shape::Halfspace { normal, offset, norm_sq }, dim })
    }

    pub fn hyperplane(normal: Point, offset: f64) -> Result<Self> {
        let norm_sq = Self::check_normal(&normal, offset)?;
        let dim = normal.dim();
        Ok(ConvexSet { shape: Shape::Hyperplane { normal, offset, norm_sq }, dim })
    }

    fn check_normal(normal: &Point, offset: f64) -> Result<f64> {
        let norm_sq = normal.dot(normal);
        if norm_sq == 0.0 {
            return Err(Error::InvalidSet("normal vector must be nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidSet(format!("offset {offset} is not finite")));
        }
        Ok(norm_sq)
    }

    /// `origin + span(basis)`. The basis is orthonormalized with two-pass
    /// modified Gram-Schmidt; dependent vectors are dropped.
    pub fn affine(origin: Point, basis: Vec<Point>) -> Result<Self> {
        let dim = origin.dim();
        for b in &basis {
            check_dims(dim, b.dim())?;
        }
        let basis = orthonormalize(&basis);
        Ok(ConvexSet { shape: Shape::Affine { origin, basis }, dim })
    }

    pub fn segment(p: Point, q: Point) -> Result<Self> {
        check_dims(p.dim(), q.dim())?;
        let dir = &q - &p;
        let len_sq = dir.dot(&dir);
        let dim = p.dim();
        Ok(ConvexSet { shape: Shape::Segment { p, dir, len_sq }, dim })
    }

    pub fn singleton(p: Point) -> Self {
        let dim = p.dim();
        ConvexSet { shape: Shape::Singleton { p }, dim }
    }

    /// `inner + shift`.
    pub fn translate(inner: ConvexSet, shift: Point) -> Result<Self> {
        check_dims(inner.dim, shift.dim())?;
        let dim = inner.dim;
        Ok(ConvexSet { shape: Shape::Translate { inner: Box::new(inner), shift }, dim })
    }

    /// Short name of the variant, used in reports.
    pub fn variant_name(&self) -> &'static str {
        match &self.shape {
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::Halfspace { .. } => "halfspace",
            Shape::Hyperplane { .. } => "hyperplane",
            Shape::Affine { .. } => "affine",
            Shape::Segment { .. } => "segment",
            Shape::Singleton { .. } => "singleton",
            Shape::Translate { .. } => "translate",
        }
    }

    /// Orthonormal basis of an affine subspace after construction.
    pub fn affine_basis(&self) -> Option<&[Point]> {
        match &self.shape {
            Shape::Affine { basis, .. } => Some(basis),
            _ => None,
        }
    }

    /// A fixed point of the set, used as the centre for sampling unbounded sets.
    pub fn anchor(&self) -> Point {
        match &self.shape {
            Shape::Box { lo, .. } => lo.clone(),
            Shape::Ball { center, .. } => center.clone(),
            Shape::Halfspace { normal, offset, norm_sq }
            | Shape::Hyperplane { normal, offset, norm_sq } => normal.scale(offset / norm_sq),
            Shape::Affine { origin, .. } => origin.clone(),
            Shape::Segment { p, .. } | Shape::Singleton { p } => p.clone(),
            Shape::Translate { inner, shift } => &inner.anchor() + shift,
        }
    }

    fn sample_box_around(&self, rng: &mut SampleRng) -> Point {
        let centre = self.anchor();
        let half = SAMPLE_BOX_SIDE / 2.0;
        let raw: Vec<f64> = centre.coords().iter().map(|c| c + rng.random_range(-half..=half)).collect();
        self.project(&Point::from_raw(raw))
    }
}

impl Region for ConvexSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.dim, "point dimension does not match set dimension");
        match &self.shape {
            Shape::Box { lo, hi } => Point::from_raw(
                x.coords()
                    .iter()
                    .zip(lo.coords().iter().zip(hi.coords()))
                    .map(|(v, (l, h))| v.clamp(*l, *h))
                    .collect(),
            ),
            Shape::Ball { center, radius } => {
                let d = x - center;
                let r = d.norm();
                if r <= *radius {
                    x.clone()
                } else {
                    center + &d.scale(radius / r)
                }
            }
            Shape::Halfspace { normal, offset, norm_sq } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - &normal.scale(excess / norm_sq)
                }
            }
            Shape::Hyperplane { normal, offset, norm_sq } => {
                let excess = normal.dot(x) - offset;
                x - &normal.scale(excess / norm_sq)
            }
            Shape::Affine { origin, basis } => {
                let rel = x - origin;
                basis.iter().fold(origin.clone(), |acc, q| &acc + &q.scale(rel.dot(q)))
            }
            Shape::Segment { p, dir, len_sq } => {
                if *len_sq == 0.0 {
                    return p.clone();
                }
                let t = ((x - p).dot(dir) / len_sq).clamp(0.0, 1.0);
                p + &dir.scale(t)
            }
            Shape::Singleton { p } => p.clone(),
            Shape::Translate { inner, shift } => &inner.project(&(x - shift)) + shift,
        }
    }

    fn sample(&self, rng: &mut SampleRng) -> Point {
        match &self.shape {
            Shape::Box { lo, hi } => Point::from_raw(
                lo.coords()
                    .iter()
                    .zip(hi.coords())
                    .map(|(l, h)| if l == h { *l } else { rng.random_range(*l..=*h) })
                    .collect(),
            ),
            Shape::Ball { center, radius } => {
                let dir: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
                let dir = Point::from_raw(dir);
                let len = dir.norm();
                if len == 0.0 || *radius == 0.0 {
                    return center.clone();
                }
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / self.dim as f64);
                center + &dir.scale(r / len)
            }
            Shape::Segment { p, dir, .. } => {
                let t: f64 = rng.random();
                p + &dir.scale(t)
            }
            Shape::Singleton { p } => p.clone(),
            Shape::Halfspace { .. } | Shape::Hyperplane { .. } | Shape::Affine { .. } => {
                self.sample_box_around(rng)
            }
            Shape::Translate { inner, shift } => &inner.sample(rng) + shift,
        }
    }
}

fn orthonormalize(vectors: &[Point]) -> Vec<Point> {
    let mut basis: Vec<Point> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = v.clone();
        // Second pass recovers orthogonality lost to cancellation.
        for _ in 0..2 {
            for q in &basis {
                r = &r - &q.scale(r.dot(q));
            }
        }
        let len = r.norm();
        if len >= RANK_TOL {
            basis.push(r.scale(1.0 / len));
        }
    }
    basis
}

pub fn project(set: &ConvexSet, x: &Point) -> Result<Point> {
    check_dims(set.dim, x.dim())?;
    Ok(set.project(x))
}

pub fn contains(set: &ConvexSet, x: &Point, tol: f64) -> Result<bool> {
    check_dims(set.dim, x.dim())?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("membership tolerance {tol} must be >= 0")));
    }
    Ok(set.contains(x, tol))
}

pub fn dist_to_set(set: &ConvexSet, x: &Point) -> Result<f64> {
    check_dims(set.dim, x.dim())?;
    Ok(set.dist_to(x))
}
