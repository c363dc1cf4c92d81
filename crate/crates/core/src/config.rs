//! Problem files for the CLI.
//!
//! A problem file is TOML:
//!
//! ```toml
//! label = "paper-example"     # optional
//! dimension = 2
//! w0 = [-3.5, 0.0]
//!
//! [set_m]
//! type = "box"
//! lo = [-4.0, 0.0]
//! hi = [-3.0, 0.0]
//!
//! [set_n]
//! type = "box"
//! lo = [3.0, 0.0]
//! hi = [4.0, 0.0]
//!
//! [map]
//! kind = "self-preserving"    # or "cyclic"
//! membership_tol = 1e-9       # optional
//! on_m = { matrix = [[0.5, 0.0], [0.0, 0.0]], offset = [-1.5, 0.0] }
//! on_n = { matrix = [[0.5, 0.0], [0.0, 0.0]], offset = [1.5, 0.0] }
//!
//! [set_m0]                    # optional
//! type = "singleton"
//! p = [-3.0, 0.0]
//! ```
//!
//! Set tables take a `type` of `box`, `ball`, `halfspace`, `hyperplane`,
//! `affine`, `segment`, `singleton` or `translate`; see [`ConvexSetSpec`]
//! for the fields of each.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexSetSpec, Region, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::hilbert::Point;
use crate::mappings::{AffineRule, MapKind, MapSpec, Problem, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindConfig {
    SelfPreserving,
    Cyclic,
}

impl From<KindConfig> for MapKind {
    fn from(k: KindConfig) -> Self {
        match k {
            KindConfig::SelfPreserving => MapKind::SelfPreserving,
            KindConfig::Cyclic => MapKind::Cyclic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineConfig {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub kind: KindConfig,
    pub on_m: AffineConfig,
    pub on_n: AffineConfig,
    #[serde(default)]
    pub membership_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub dimension: usize,
    pub set_m: ConvexSetSpec,
    pub set_n: ConvexSetSpec,
    pub map: MapConfig,
    pub w0: Vec<f64>,
    #[serde(default)]
    pub set_m0: Option<ConvexSetSpec>,
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("{name}: {e}")))
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Validates dimensions and builds the problem. `w0` must lie in `M`.
    pub fn build(&self) -> Result<Problem> {
        let dim = self.dimension;
        if dim == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        let m = field("set_m", self.set_m.build())?;
        let n = field("set_n", self.set_n.build())?;
        let w0 = field("w0", Point::new(self.w0.clone()))?;
        for (name, d) in [("set_m", m.dim()), ("set_n", n.dim()), ("w0", w0.dim())] {
            if d != dim {
                return Err(Error::Config(format!("{name}: dimension {d} does not match dimension = {dim}")));
            }
        }
        let rule = |name: &str, a: &AffineConfig| {
            let offset = field(name, Point::new(a.offset.clone()))?;
            field(name, AffineRule::new(a.matrix.clone(), offset))
        };
        let tol = self.map.membership_tol.unwrap_or(MEMBERSHIP_TOL);
        if !(tol >= 0.0) {
            return Err(Error::Config(format!("map.membership_tol: {tol} must be >= 0")));
        }
        let map = MapSpec::new(
            self.map.kind.into(),
            Rule::Affine(rule("map.on_m", &self.map.on_m)?),
            Rule::Affine(rule("map.on_n", &self.map.on_n)?),
        )
        .with_membership_tol(tol);
        let dist = m.dist_to(&w0);
        if dist > tol {
            return Err(Error::StartOutsideM { point: w0.into_coords(), dist });
        }
        let label = self.label.clone().unwrap_or_else(|| "config".into());
        let mut problem = field("map", Problem::new(label, m, n, map, w0))?;
        if let Some(spec) = &self.set_m0 {
            let m0 = field("set_m0", spec.build())?;
            problem = field("set_m0", problem.with_m0(m0))?;
        }
        Ok(problem)
    }
}
