//! Maps `F : M ∪ N → M ∪ N` given by one rule per side, plus sampled checks
//! of the invariance and relative nonexpansiveness hypotheses.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;

use crate::convex::{ConvexSet, Region, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::hilbert::{check_dims, Point};
use crate::SampleRng;

/// How `F` moves the two sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    /// `F(M) ⊆ M` and `F(N) ⊆ N`.
    SelfPreserving,
    /// `F(M) ⊆ N` and `F(N) ⊆ M`.
    Cyclic,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::SelfPreserving => "self-preserving",
            MapKind::Cyclic => "cyclic",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `x ↦ matrix · x + offset` with a square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineRule {
    dim: usize,
    matrix: Vec<f64>,
    offset: Point,
}

impl AffineRule {
    pub fn new(rows: Vec<Vec<f64>>, offset: Point) -> Result<Self> {
        let dim = offset.dim();
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidMap(format!("affine matrix must be {dim}x{dim} to match its offset")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap("affine matrix has non-finite entries".into()));
        }
        Ok(AffineRule { dim, matrix: rows.into_iter().flatten().collect(), offset })
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        AffineRule { dim, matrix, offset: Point::zeros(dim) }
    }

    /// `x ↦ factor · x + offset`.
    pub fn scaled(factor: f64, offset: Point) -> Self {
        let mut rule = AffineRule::identity(offset.dim());
        rule.matrix.iter_mut().for_each(|v| *v *= factor);
        rule.offset = offset;
        rule
    }

    pub fn apply(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.dim, "dimension mismatch");
        let out = self
            .matrix
            .chunks(self.dim)
            .zip(self.offset.coords())
            .map(|(row, b)| row.iter().zip(x.coords()).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect();
        Point::from_raw(out)
    }
}

pub type HostFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Per-side rule of a [`MapSpec`].
#[derive(Clone)]
pub enum Rule {
    Affine(AffineRule),
    /// Arbitrary function; library use only.
    Host(HostFn),
}

impl Rule {
    pub fn host(f: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        Rule::Host(Arc::new(f))
    }

    pub fn apply(&self, x: &Point) -> Point {
        match self {
            Rule::Affine(a) => a.apply(x),
            Rule::Host(f) => f(x),
        }
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Affine(a) => f.debug_tuple("Affine").field(a).finish(),
            Rule::Host(_) => f.write_str("Host(..)"),
        }
    }
}

/// Which rule [`MapSpec::evaluate_traced`] used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    M,
    N,
    /// The point lies in `M ∩ N`; the `M` rule was applied.
    Overlap,
}

#[derive(Clone, Debug)]
pub struct MapSpec {
    pub kind: MapKind,
    pub on_m: Rule,
    pub on_n: Rule,
    /// Tolerance used to decide which side a point is on.
    pub membership_tol: f64,
}

impl MapSpec {
    pub fn new(kind: MapKind, on_m: Rule, on_n: Rule) -> Self {
        MapSpec { kind, on_m, on_n, membership_tol: MEMBERSHIP_TOL }
    }

    pub fn with_membership_tol(mut self, tol: f64) -> Self {
        self.membership_tol = tol;
        self
    }

    /// Checks affine rule dimensions against the ambient dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        for rule in [&self.on_m, &self.on_n] {
            if let Rule::Affine(a) = rule {
                check_dims(dim, a.dim)?;
            }
        }
        Ok(())
    }

    pub fn evaluate<M, N>(&self, x: &Point, m: &M, n: &N) -> Result<Point>
    where
        M: Region + ?Sized,
        N: Region + ?Sized,
    {
        self.evaluate_traced(x, m, n).map(|(y, _)| y)
    }

    /// Like [`MapSpec::evaluate`] but also reports which rule was applied.
    pub fn evaluate_traced<M, N>(&self, x: &Point, m: &M, n: &N) -> Result<(Point, Branch)>
    where
        M: Region + ?Sized,
        N: Region + ?Sized,
    {
        let dist_m = m.dist_to(x);
        if dist_m <= self.membership_tol {
            let branch = if n.contains(x, self.membership_tol) { Branch::Overlap } else { Branch::M };
            return Ok((self.on_m.apply(x), branch));
        }
        let dist_n = n.dist_to(x);
        if dist_n <= self.membership_tol {
            return Ok((self.on_n.apply(x), Branch::N));
        }
        Err(Error::OutsideDomain { point: x.coords().to_vec(), dist_m, dist_n })
    }
}

pub fn evaluate<M, N>(map: &MapSpec, x: &Point, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    map.evaluate(x, m, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    M,
    N,
}

#[derive(Clone, Debug)]
pub struct InvarianceViolation {
    /// Side the sample was drawn from.
    pub side: Side,
    pub point: Point,
    pub image: Point,
    /// Distance from the image to the set it should land in.
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub kind: MapKind,
    /// Points drawn per side.
    pub trials: usize,
    pub violations: Vec<InvarianceViolation>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `trials` points from each of `M` and `N` and checks that their
/// images land where the declared kind says they should.
pub fn check_invariance<M, N>(
    map: &MapSpec,
    m: &M,
    n: &N,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<InvarianceReport>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = SampleRng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for _ in 0..trials {
        for side in [Side::M, Side::N] {
            let point = match side {
                Side::M => m.sample(&mut rng),
                Side::N => n.sample(&mut rng),
            };
            let image = map.evaluate(&point, m, n)?;
            let lands_in_m = matches!(
                (map.kind, side),
                (MapKind::SelfPreserving, Side::M) | (MapKind::Cyclic, Side::N)
            );
            let distance = if lands_in_m { m.dist_to(&image) } else { n.dist_to(&image) };
            if distance > tol {
                violations.push(InvarianceViolation { side, point, image, distance });
            }
        }
    }
    Ok(InvarianceReport { kind: map.kind, trials, violations })
}

#[derive(Clone, Debug)]
pub struct PairViolation {
    pub w: Point,
    pub z: Point,
    /// `‖Fw − Fz‖ − ‖w − z‖`.
    pub excess: f64,
}

#[derive(Clone, Debug)]
pub struct NonexpansiveReport {
    pub trials: usize,
    pub violations: Vec<PairViolation>,
    /// Largest `‖Fw − Fz‖ / ‖w − z‖` over pairs with `w ≠ z`.
    pub max_ratio: Option<f64>,
}

impl NonexpansiveReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples pairs `(w, z) ∈ M × N` and flags `‖Fw − Fz‖ > ‖w − z‖ + tol`.
pub fn check_rel_nonexpansive<M, N>(
    map: &MapSpec,
    m: &M,
    n: &N,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<NonexpansiveReport>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = SampleRng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut max_ratio: Option<f64> = None;
    for _ in 0..trials {
        let w = m.sample(&mut rng);
        let z = n.sample(&mut rng);
        let before = w.distance(&z);
        let after = map.evaluate(&w, m, n)?.distance(&map.evaluate(&z, m, n)?);
        if before > 0.0 {
            let ratio = after / before;
            max_ratio = Some(max_ratio.map_or(ratio, |r| r.max(ratio)));
        }
        if after > before + tol {
            violations.push(PairViolation { w, z, excess: after - before });
        }
    }
    Ok(NonexpansiveReport { trials, violations, max_ratio })
}

/// A complete problem instance: the two sets, the map and a start in `M`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub label: String,
    pub m: ConvexSet,
    pub n: ConvexSet,
    pub map: MapSpec,
    pub w0: Point,
    /// Optional description of the proximal subset `M_0 = M ∩ (N − v)`,
    /// used only for the `d(w_n, M_0)` diagnostic.
    pub m0: Option<ConvexSet>,
}

impl Problem {
    pub fn new(label: impl Into<String>, m: ConvexSet, n: ConvexSet, map: MapSpec, w0: Point) -> Result<Self> {
        let dim = m.dim();
        check_dims(dim, n.dim())?;
        check_dims(dim, w0.dim())?;
        map.validate(dim)?;
        Ok(Problem { label: label.into(), m, n, map, w0, m0: None })
    }

    pub fn with_m0(mut self, m0: ConvexSet) -> Result<Self> {
        check_dims(self.m.dim(), m0.dim())?;
        self.m0 = Some(m0);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }
}

fn pt(c: [f64; 2]) -> Point {
    Point::from_raw(c.to_vec())
}

fn paper_sets() -> (ConvexSet, ConvexSet) {
    let m = ConvexSet::boxed(pt([-4.0, 0.0]), pt([-3.0, 0.0])).expect("valid box");
    let n = ConvexSet::boxed(pt([3.0, 0.0]), pt([4.0, 0.0])).expect("valid box");
    (m, n)
}

/// `M = [-4, -3] × {0}`, `N = [3, 4] × {0}`, `F(w, 0) = ((w − 3)/2, 0)` on `M`
/// and `((w + 3)/2, 0)` on `N`, started at `(-3.5, 0)`.
pub fn paper_example() -> Problem {
    let (m, n) = paper_sets();
    let on_m = AffineRule::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]], pt([-1.5, 0.0])).expect("2x2");
    let on_n = AffineRule::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]], pt([1.5, 0.0])).expect("2x2");
    let map = MapSpec::new(MapKind::SelfPreserving, Rule::Affine(on_m), Rule::Affine(on_n));
    let m0 = ConvexSet::singleton(pt([-3.0, 0.0]));
    Problem::new("paper-example", m, n, map, pt([-3.5, 0.0]))
        .and_then(|p| p.with_m0(m0))
        .expect("consistent preset")
}

/// Same sets as [`paper_example`] with the cyclic reflection `F(w, 0) = (−w, 0)`.
pub fn reflection_example() -> Problem {
    let (m, n) = paper_sets();
    let reflect = AffineRule::scaled(-1.0, Point::zeros(2));
    let map = MapSpec::new(MapKind::Cyclic, Rule::Affine(reflect.clone()), Rule::Affine(reflect));
    let m0 = ConvexSet::singleton(pt([-3.0, 0.0]));
    Problem::new("paper-reflection", m, n, map, pt([-3.5, 0.0]))
        .and_then(|p| p.with_m0(m0))
        .expect("consistent preset")
}
