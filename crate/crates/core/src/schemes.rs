//! Iteration kernels and the traced run loop.
//!
//! All kernels share the Ishikawa shape
//!
//! ```text
//! z_n     = (1 − δ_n) w_n + δ_n G w_n
//! w_{n+1} = Q_n((1 − η_n) w_n + η_n G z_n)
//! ```
//!
//! where `G` is either `F` or, for the best-proximity variants, `P_M ∘ F`,
//! and `Q_n` is the identity or the `n`-fold composite `Pⁿ` of `P = P_M ∘ P_N`.
//! Mann drops the inner stage and Picard is `w_{n+1} = F w_n`.

use std::fmt;

use crate::alternating::{neumann_limit, p_power, DEFAULT_EARLY_TOL, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::convex::Region;
use crate::error::{Error, Result};
use crate::hilbert::{combine, Point};
use crate::mappings::{check_invariance, Branch, MapKind, MapSpec, Problem};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_WEIGHT: f64 = 0.999;
pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-8;
pub const DEFAULT_RUN_MAX_ITERS: usize = 10_000;
/// Number of trailing residuals used by the rate estimate.
pub const RATE_WINDOW: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    Constant(f64),
    /// `values[n]` for `n < values.len()`, then `tail`.
    Table { values: Vec<f64>, tail: f64 },
}

/// A parameter sequence `η_n` or `δ_n`, guarded to `[ε, 1 − ε]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    epsilon_guard: f64,
}

impl Schedule {
    pub fn constant(c: f64) -> Self {
        Schedule { kind: ScheduleKind::Constant(c), epsilon_guard: DEFAULT_EPSILON }
    }

    pub fn table(values: Vec<f64>, tail: f64) -> Self {
        Schedule { kind: ScheduleKind::Table { values, tail }, epsilon_guard: DEFAULT_EPSILON }
    }

    pub fn with_guard(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon guard {epsilon} must lie in (0, 1/2)")));
        }
        self.epsilon_guard = epsilon;
        Ok(self)
    }

    pub fn epsilon_guard(&self) -> f64 {
        self.epsilon_guard
    }

    fn raw(&self, n: usize) -> f64 {
        match &self.kind {
            ScheduleKind::Constant(c) => *c,
            ScheduleKind::Table { values, tail } => values.get(n).copied().unwrap_or(*tail),
        }
    }

    /// The `n`-th value, or an error if it falls outside `[ε, 1 − ε]`.
    pub fn value(&self, n: usize) -> Result<f64> {
        let v = self.raw(n);
        let (lo, hi) = (self.epsilon_guard, 1.0 - self.epsilon_guard);
        if (lo..=hi).contains(&v) {
            Ok(v)
        } else {
            Err(Error::ScheduleOutOfRange { n, value: v, lo, hi })
        }
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::constant(DEFAULT_WEIGHT)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScheduleKind::Constant(c) => write!(f, "{c}"),
            ScheduleKind::Table { values, tail } => {
                write!(f, "table[")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "|{tail}]")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSpec {
    Picard,
    Mann { eta: Schedule },
    Ishikawa { eta: Schedule, delta: Schedule },
    ProjectedMann { eta: Schedule },
    ProjectedIshikawa { eta: Schedule, delta: Schedule },
    BpIshikawa { eta: Schedule, delta: Schedule },
    BpProjectedIshikawa { eta: Schedule, delta: Schedule },
}

impl SchemeSpec {
    /// Canonical label used in reports and CSV files.
    pub fn label(&self) -> String {
        match self {
            SchemeSpec::Picard => "picard".into(),
            SchemeSpec::Mann { eta } => format!("mann(η={eta})"),
            SchemeSpec::Ishikawa { eta, delta } => format!("ishikawa(η={eta},δ={delta})"),
            SchemeSpec::ProjectedMann { eta } => format!("proj-mann(η={eta})"),
            SchemeSpec::ProjectedIshikawa { eta, delta } => format!("proj-ishikawa(η={eta},δ={delta})"),
            SchemeSpec::BpIshikawa { eta, delta } => format!("bp-ishikawa(η={eta},δ={delta})"),
            SchemeSpec::BpProjectedIshikawa { eta, delta } => {
                format!("bp-proj-ishikawa(η={eta},δ={delta})")
            }
        }
    }

    pub fn required_kind(&self) -> MapKind {
        if self.is_best_proximity() {
            MapKind::Cyclic
        } else {
            MapKind::SelfPreserving
        }
    }

    pub fn is_best_proximity(&self) -> bool {
        matches!(self, SchemeSpec::BpIshikawa { .. } | SchemeSpec::BpProjectedIshikawa { .. })
    }

    pub fn is_projected(&self) -> bool {
        matches!(
            self,
            SchemeSpec::ProjectedMann { .. }
                | SchemeSpec::ProjectedIshikawa { .. }
                | SchemeSpec::BpProjectedIshikawa { .. }
        )
    }

    /// Errors unless the map's declared kind suits this scheme.
    pub fn check_compatible(&self, kind: MapKind) -> Result<()> {
        let required = self.required_kind();
        if required == kind {
            Ok(())
        } else {
            Err(Error::IncompatibleScheme { scheme: self.label(), required: required.name(), declared: kind.name() })
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StopRule {
    /// Applies to `gap_residual`, which equals the residual for non-BP runs.
    pub tol_residual: f64,
    /// Ignored when zero.
    pub tol_step: f64,
    pub max_iters: usize,
}

impl StopRule {
    pub fn new(tol_residual: f64, tol_step: f64, max_iters: usize) -> Result<Self> {
        let rule = StopRule { tol_residual, tol_step, max_iters };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter(format!("tol_residual {} must be > 0", self.tol_residual)));
        }
        if !(self.tol_step >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol_step {} must be >= 0", self.tol_step)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { tol_residual: DEFAULT_TOL_RESIDUAL, tol_step: 0.0, max_iters: DEFAULT_RUN_MAX_ITERS }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Residual,
    Step,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::Step => "step",
            StopReason::MaxIters => "max_iters",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub point: Point,
    /// `‖w_n − F w_n‖`.
    pub residual: f64,
    /// `‖w_n − w_{n−1}‖`, zero at `n = 0`.
    pub step_norm: f64,
    /// `|‖w_n − F w_n‖ − d̂(M, N)|` for best-proximity runs, else `residual`.
    pub gap_residual: f64,
    /// `d(w_n, M_0)` when the problem supplies `M_0`.
    pub dist_m0: Option<f64>,
    /// Applications of `P` performed by the update that produced `w_n`.
    pub p_applied: usize,
    /// `‖w_{n−1} − G z_{n−1}‖` for Ishikawa-type updates. Not written to CSV.
    pub inner_gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scheme: SchemeSpec,
    pub problem_label: String,
    pub trace: Vec<TraceRecord>,
    pub final_point: Point,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// Geometric mean of successive `gap_residual` ratios over the last
    /// [`RATE_WINDOW`] entries above `10 · f64::EPSILON`.
    pub rate_estimate: Option<f64>,
    /// `d̂(M, N)` for best-proximity runs.
    pub gap_estimate: Option<f64>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn final_record(&self) -> &TraceRecord {
        self.trace.last().expect("trace always holds n = 0")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Turn a failed kind check into an error instead of a warning.
    pub strict: bool,
    pub early_tol: f64,
    /// Caps the number of `P` applications per update. `Some(0)` turns the
    /// projected variants into their plain counterparts.
    pub p_cap: Option<usize>,
    pub kind_check_trials: usize,
    pub seed: u64,
    pub neumann_tol: f64,
    pub neumann_max_iters: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            strict: false,
            early_tol: DEFAULT_EARLY_TOL,
            p_cap: None,
            kind_check_trials: 100,
            seed: 0,
            neumann_tol: DEFAULT_TOL,
            neumann_max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

struct Update {
    next: Point,
    p_applied: usize,
    /// `G z_n` for two-stage updates.
    g_inner: Option<Point>,
}

fn apply_map<M, N>(map: &MapSpec, x: &Point, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    map.evaluate(x, m, n)
}

/// `P_M ∘ F`.
fn apply_bp_map<M, N>(map: &MapSpec, x: &Point, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    Ok(m.project(&map.evaluate(x, m, n)?))
}

fn two_stage(
    x: &Point,
    eta: f64,
    delta: f64,
    g: impl Fn(&Point) -> Result<Point>,
) -> Result<(Point, Point)> {
    let inner = combine(x, &g(x)?, delta)?;
    let g_inner = g(&inner).map_err(|e| match e {
        Error::OutsideDomain { point, .. } => Error::InnerPointEscaped { point },
        other => other,
    })?;
    Ok((combine(x, &g_inner, eta)?, g_inner))
}

pub fn picard_step<M, N>(map: &MapSpec, x: &Point, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    apply_map(map, x, m, n)
}

/// `(1 − η) x + η F x`.
pub fn mann_step<M, N>(map: &MapSpec, x: &Point, eta: f64, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    combine(x, &apply_map(map, x, m, n)?, eta)
}

/// `(1 − η) x + η F((1 − δ) x + δ F x)`.
pub fn ishikawa_step<M, N>(map: &MapSpec, x: &Point, eta: f64, delta: f64, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    two_stage(x, eta, delta, |y| apply_map(map, y, m, n)).map(|(w, _)| w)
}

/// `P^k` applied to the Mann point. Returns the point and the applications of `P`.
pub fn projected_mann_step<M, N>(
    map: &MapSpec,
    x: &Point,
    eta: f64,
    k: usize,
    m: &M,
    n: &N,
    early_tol: f64,
) -> Result<(Point, usize)>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    let mann = mann_step(map, x, eta, m, n)?;
    Ok(p_power(m, n, &mann, k, early_tol))
}

/// `P^k` applied to the Ishikawa point.
#[allow(clippy::too_many_arguments)]
pub fn projected_ishikawa_step<M, N>(
    map: &MapSpec,
    x: &Point,
    eta: f64,
    delta: f64,
    k: usize,
    m: &M,
    n: &N,
    early_tol: f64,
) -> Result<(Point, usize)>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    let ish = ishikawa_step(map, x, eta, delta, m, n)?;
    Ok(p_power(m, n, &ish, k, early_tol))
}

/// Ishikawa step for `G = P_M ∘ F` with a cyclic `F`.
pub fn bp_ishikawa_step<M, N>(map: &MapSpec, x: &Point, eta: f64, delta: f64, m: &M, n: &N) -> Result<Point>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    two_stage(x, eta, delta, |y| apply_bp_map(map, y, m, n)).map(|(w, _)| w)
}

/// `P^k` applied to the best-proximity Ishikawa point.
#[allow(clippy::too_many_arguments)]
pub fn bp_projected_ishikawa_step<M, N>(
    map: &MapSpec,
    x: &Point,
    eta: f64,
    delta: f64,
    k: usize,
    m: &M,
    n: &N,
    early_tol: f64,
) -> Result<(Point, usize)>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    let w = bp_ishikawa_step(map, x, eta, delta, m, n)?;
    Ok(p_power(m, n, &w, k, early_tol))
}

fn advance(problem: &Problem, scheme: &SchemeSpec, w: &Point, k: usize, opts: &RunOptions) -> Result<Update> {
    let (map, m, n) = (&problem.map, &problem.m, &problem.n);
    let p_count = opts.p_cap.map_or(k, |cap| cap.min(k));
    let project = |pt: Point| p_power(m, n, &pt, p_count, opts.early_tol);
    let ishikawa = |eta: &Schedule, delta: &Schedule, bp: bool| -> Result<(Point, Point)> {
        let (e, d) = (eta.value(k)?, delta.value(k)?);
        if bp {
            two_stage(w, e, d, |y| apply_bp_map(map, y, m, n))
        } else {
            two_stage(w, e, d, |y| apply_map(map, y, m, n))
        }
    };

    let update = match scheme {
        SchemeSpec::Picard => Update { next: picard_step(map, w, m, n)?, p_applied: 0, g_inner: None },
        SchemeSpec::Mann { eta } => {
            Update { next: mann_step(map, w, eta.value(k)?, m, n)?, p_applied: 0, g_inner: None }
        }
        SchemeSpec::ProjectedMann { eta } => {
            let (next, p_applied) = project(mann_step(map, w, eta.value(k)?, m, n)?);
            Update { next, p_applied, g_inner: None }
        }
        SchemeSpec::Ishikawa { eta, delta } | SchemeSpec::BpIshikawa { eta, delta } => {
            let (next, g) = ishikawa(eta, delta, scheme.is_best_proximity())?;
            Update { next, p_applied: 0, g_inner: Some(g) }
        }
        SchemeSpec::ProjectedIshikawa { eta, delta } | SchemeSpec::BpProjectedIshikawa { eta, delta } => {
            let (raw, g) = ishikawa(eta, delta, scheme.is_best_proximity())?;
            let (next, p_applied) = project(raw);
            Update { next, p_applied, g_inner: Some(g) }
        }
    };
    Ok(update)
}

fn rate_estimate(trace: &[TraceRecord]) -> Option<f64> {
    let floor = 10.0 * f64::EPSILON;
    let tail: Vec<f64> = trace.iter().map(|r| r.gap_residual).filter(|r| *r > floor).collect();
    let window = &tail[tail.len().saturating_sub(RATE_WINDOW)..];
    if window.len() < 3 {
        return None;
    }
    let first = window[0];
    let last = window[window.len() - 1];
    Some((last / first).powf(1.0 / (window.len() - 1) as f64))
}

struct Recorder<'a> {
    problem: &'a Problem,
    gap_hat: Option<f64>,
    overlap_logged: bool,
    warnings: Vec<String>,
}

impl Recorder<'_> {
    fn record(&mut self, n: usize, point: Point, step_norm: f64, p_applied: usize, inner_gap: Option<f64>) -> Result<TraceRecord> {
        let pr = self.problem;
        let (image, branch) = pr.map.evaluate_traced(&point, &pr.m, &pr.n)?;
        if branch == Branch::Overlap && !self.overlap_logged {
            let msg = format!("iterate {point} lies in M ∩ N; the M rule was applied");
            log::info!("{msg}");
            self.warnings.push(msg);
            self.overlap_logged = true;
        }
        let residual = point.distance(&image);
        let gap_residual = self.gap_hat.map_or(residual, |g| (residual - g).abs());
        let dist_m0 = pr.m0.as_ref().map(|s| s.dist_to(&point));
        Ok(TraceRecord { n, point, residual, step_norm, gap_residual, dist_m0, p_applied, inner_gap })
    }
}

/// Iterates `scheme` from `problem.w0` until `stop` fires.
pub fn run(problem: &Problem, scheme: &SchemeSpec, stop: &StopRule, opts: &RunOptions) -> Result<RunReport> {
    stop.validate()?;
    scheme.check_compatible(problem.map.kind)?;
    let (m, n) = (&problem.m, &problem.n);
    let tol = problem.map.membership_tol;
    let w0 = &problem.w0;
    let start_dist = m.dist_to(w0);
    if start_dist > tol {
        return Err(Error::StartOutsideM { point: w0.coords().to_vec(), dist: start_dist });
    }

    let mut warnings = Vec::new();
    if opts.kind_check_trials > 0 {
        let report = check_invariance(&problem.map, m, n, opts.kind_check_trials, opts.seed, tol)?;
        if !report.passed() {
            if opts.strict {
                return Err(Error::KindCheckFailed { violations: report.violations.len() });
            }
            let msg = format!(
                "declared {} map failed {} of {} sampled invariance checks",
                problem.map.kind,
                report.violations.len(),
                2 * report.trials
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let gap_hat = if scheme.is_best_proximity() {
        Some(neumann_limit(m, n, w0, opts.neumann_tol, opts.neumann_max_iters)?.gap)
    } else {
        None
    };

    let mut rec = Recorder { problem, gap_hat, overlap_logged: false, warnings };
    let mut trace = vec![rec.record(0, w0.clone(), 0.0, 0, None)?];
    let mut reason = None;
    if trace[0].gap_residual <= stop.tol_residual {
        reason = Some(StopReason::Residual);
    }

    let mut k = 0;
    while reason.is_none() && k < stop.max_iters {
        let w = &trace[k].point;
        let Update { next, p_applied, g_inner } = advance(problem, scheme, w, k, opts)?;
        if !next.is_finite() {
            return Err(Error::NonFiniteIterate { n: k + 1, trace });
        }
        let step_norm = next.distance(w);
        let inner_gap = g_inner.map(|g| w.distance(&g));
        let record = rec.record(k + 1, next, step_norm, p_applied, inner_gap)?;
        if record.gap_residual <= stop.tol_residual {
            reason = Some(StopReason::Residual);
        } else if stop.tol_step > 0.0 && record.step_norm <= stop.tol_step {
            reason = Some(StopReason::Step);
        }
        trace.push(record);
        k += 1;
    }

    let stop_reason = reason.unwrap_or(StopReason::MaxIters);
    Ok(RunReport {
        scheme: scheme.clone(),
        problem_label: problem.label.clone(),
        final_point: trace[k].point.clone(),
        converged: stop_reason != StopReason::MaxIters,
        stop_reason,
        iterations: k,
        rate_estimate: rate_estimate(&trace),
        gap_estimate: gap_hat,
        trace,
        warnings: rec.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexSet;
    use crate::mappings::{paper_example, reflection_example, AffineRule, Rule};

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn ish() -> SchemeSpec {
        SchemeSpec::Ishikawa { eta: Schedule::default(), delta: Schedule::default() }
    }

    #[test]
    fn schedule_guard_and_table() {
        let s = Schedule::table(vec![0.2, 0.3], 0.9);
        assert_eq!(s.value(0).unwrap(), 0.2);
        assert_eq!(s.value(1).unwrap(), 0.3);
        assert_eq!(s.value(7).unwrap(), 0.9);
        assert!(matches!(Schedule::constant(1.0).value(0), Err(Error::ScheduleOutOfRange { .. })));
        assert!(Schedule::constant(0.0005).value(3).is_err());
        assert!(Schedule::constant(0.5).with_guard(0.5).is_err());
        assert!(Schedule::constant(0.5).with_guard(0.0).is_err());
        let g = Schedule::constant(0.2).with_guard(0.25).unwrap();
        assert!(g.value(0).is_err());
    }

    #[test]
    fn labels_are_canonical() {
        assert_eq!(SchemeSpec::Picard.label(), "picard");
        assert_eq!(SchemeSpec::Mann { eta: Schedule::default() }.label(), "mann(η=0.999)");
        assert_eq!(ish().label(), "ishikawa(η=0.999,δ=0.999)");
        let bp = SchemeSpec::BpIshikawa { eta: Schedule::constant(0.5), delta: Schedule::constant(0.25) };
        assert_eq!(bp.label(), "bp-ishikawa(η=0.5,δ=0.25)");
        assert_eq!(
            SchemeSpec::ProjectedMann { eta: Schedule::table(vec![0.5], 0.75) }.label(),
            "proj-mann(η=table[0.5|0.75])"
        );
    }

    #[test]
    fn picard_examples() {
        let pr = paper_example();
        let step = |x: &[f64]| picard_step(&pr.map, &p(x), &pr.m, &pr.n).unwrap();
        assert_eq!(step(&[-3.5, 0.0]), p(&[-3.25, 0.0]));
        assert_eq!(step(&[-3.0, 0.0]), p(&[-3.0, 0.0]));
        assert_eq!(step(&[-4.0, 0.0]), p(&[-3.5, 0.0]));
    }

    #[test]
    fn mann_examples() {
        let pr = paper_example();
        let w = mann_step(&pr.map, &p(&[-3.5, 0.0]), 0.999, &pr.m, &pr.n).unwrap();
        assert!((w.coords()[0] - (0.5005 * -3.5 - 1.4985)).abs() < 1e-12);
        assert!((w.coords()[0] + 3.25025).abs() < 1e-12);
        for eta in [DEFAULT_EPSILON, 1.0 - DEFAULT_EPSILON] {
            let fixed = p(&[-3.0, 0.0]);
            assert_eq!(mann_step(&pr.map, &fixed, eta, &pr.m, &pr.n).unwrap(), fixed);
        }
        assert_eq!(mann_step(&pr.map, &p(&[-4.0, 0.0]), 0.5, &pr.m, &pr.n).unwrap(), p(&[-3.75, 0.0]));
        assert!(mann_step(&pr.map, &p(&[-4.0, 0.0]), 1.5, &pr.m, &pr.n).is_err());
    }

    #[test]
    fn ishikawa_examples() {
        let pr = paper_example();
        let w = ishikawa_step(&pr.map, &p(&[-3.5, 0.0]), 0.999, 0.999, &pr.m, &pr.n).unwrap();
        // 0.25099975 · (−3.5) − 2.24700075
        assert!((w.coords()[0] + 3.125499875).abs() < 1e-12);
        let fixed = p(&[-3.0, 0.0]);
        for (eta, delta) in [(0.2, 0.7), (0.999, 0.001), (0.5, 0.5)] {
            assert_eq!(ishikawa_step(&pr.map, &fixed, eta, delta, &pr.m, &pr.n).unwrap(), fixed);
        }
        // inner (−3.75, 0), F(inner) (−3.375, 0), result (−3.6875, 0)
        assert_eq!(ishikawa_step(&pr.map, &p(&[-4.0, 0.0]), 0.5, 0.5, &pr.m, &pr.n).unwrap(), p(&[-3.6875, 0.0]));
    }

    #[test]
    fn ishikawa_inner_escape_is_reported() {
        // F(M) lands far outside both sets, so the inner point escapes.
        let pr = paper_example();
        let escape = MapSpec::new(
            MapKind::SelfPreserving,
            Rule::Affine(AffineRule::scaled(0.0, p(&[0.0, 10.0]))),
            Rule::Affine(AffineRule::identity(2)),
        );
        let err = ishikawa_step(&escape, &p(&[-3.5, 0.0]), 0.5, 0.5, &pr.m, &pr.n).unwrap_err();
        assert!(matches!(err, Error::InnerPointEscaped { .. }));
    }

    #[test]
    fn scalar_collapse_over_m() {
        let pr = paper_example();
        for i in 0..=1000 {
            let w = -4.0 + i as f64 / 1000.0;
            let out = ishikawa_step(&pr.map, &p(&[w, 0.0]), 0.999, 0.999, &pr.m, &pr.n).unwrap();
            assert!((out.coords()[0] - (0.25099975 * w - 2.24700075)).abs() <= 1e-12);
            assert_eq!(out.coords()[1], 0.0);
        }
    }

    #[test]
    fn projected_steps() {
        let pr = paper_example();
        let x = p(&[-3.5, 0.0]);
        let (a, k) = projected_mann_step(&pr.map, &x, 0.999, 0, &pr.m, &pr.n, DEFAULT_EARLY_TOL).unwrap();
        assert_eq!(k, 0);
        assert_eq!(a, mann_step(&pr.map, &x, 0.999, &pr.m, &pr.n).unwrap());

        let (b, _) = projected_mann_step(&pr.map, &p(&[-3.9, 0.0]), 0.7, 3, &pr.m, &pr.n, DEFAULT_EARLY_TOL).unwrap();
        assert_eq!(b, p(&[-3.0, 0.0]));

        let (c, k) =
            projected_ishikawa_step(&pr.map, &x, 0.999, 0.999, 0, &pr.m, &pr.n, DEFAULT_EARLY_TOL).unwrap();
        assert_eq!(k, 0);
        assert_eq!(c, ishikawa_step(&pr.map, &x, 0.999, 0.999, &pr.m, &pr.n).unwrap());

        let (d, _) =
            projected_ishikawa_step(&pr.map, &x, 0.999, 0.999, 2, &pr.m, &pr.n, DEFAULT_EARLY_TOL).unwrap();
        assert_eq!(d, p(&[-3.0, 0.0]));
    }

    #[test]
    fn projected_steps_reduce_when_sets_coincide() {
        let pr = paper_example();
        let m = pr.m.clone();
        let map = &pr.map;
        let mut x = p(&[-3.9, 0.0]);
        let mut y = x.clone();
        for k in 0..10 {
            x = ishikawa_step(map, &x, 0.6, 0.4, &m, &m).unwrap();
            y = projected_ishikawa_step(map, &y, 0.6, 0.4, k, &m, &m, DEFAULT_EARLY_TOL).unwrap().0;
            assert_eq!(x, y);
            let a = mann_step(map, &x, 0.3, &m, &m).unwrap();
            let b = projected_mann_step(map, &x, 0.3, k, &m, &m, DEFAULT_EARLY_TOL).unwrap().0;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bp_steps_on_reflection() {
        let pr = reflection_example();
        let x = p(&[-3.5, 0.0]);
        let w = bp_ishikawa_step(&pr.map, &x, 0.999, 0.999, &pr.m, &pr.n).unwrap();
        // G ≡ (−3, 0): w = 0.001 · (−3.5) + 0.999 · (−3)
        assert!(w.approx_eq(&p(&[-3.0, 0.0]), 1e-3));
        assert!((w.coords()[0] - (0.001 * -3.5 + 0.999 * -3.0)).abs() < 1e-12);

        let fixed = p(&[-3.0, 0.0]);
        assert_eq!(bp_ishikawa_step(&pr.map, &fixed, 0.999, 0.999, &pr.m, &pr.n).unwrap(), fixed);
        assert_eq!(bp_ishikawa_step(&pr.map, &fixed, 1e-3, 1e-3, &pr.m, &pr.n).unwrap(), fixed);
        let fx = pr.map.evaluate(&fixed, &pr.m, &pr.n).unwrap();
        assert_eq!(fixed.distance(&fx), 6.0);

        let (v, _) =
            bp_projected_ishikawa_step(&pr.map, &x, 0.999, 0.999, 1, &pr.m, &pr.n, DEFAULT_EARLY_TOL).unwrap();
        assert_eq!(v, fixed);
    }

    #[test]
    fn run_already_at_fixed_point() {
        let mut pr = paper_example();
        pr.w0 = p(&[-3.0, 0.0]);
        let report = run(&pr, &ish(), &StopRule::default(), &RunOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.trace.len(), 1);
        assert_eq!(report.trace[0].residual, 0.0);
        assert_eq!(report.stop_reason, StopReason::Residual);
        assert_eq!(report.rate_estimate, None);
    }

    #[test]
    fn run_rejects_bad_setups() {
        let pr = paper_example();
        let bp = SchemeSpec::BpIshikawa { eta: Schedule::default(), delta: Schedule::default() };
        assert!(matches!(
            run(&pr, &bp, &StopRule::default(), &RunOptions::default()),
            Err(Error::IncompatibleScheme { .. })
        ));
        let cyc = reflection_example();
        assert!(run(&cyc, &ish(), &StopRule::default(), &RunOptions::default()).is_err());

        let mut outside = paper_example();
        outside.w0 = p(&[3.5, 0.0]);
        assert!(matches!(
            run(&outside, &ish(), &StopRule::default(), &RunOptions::default()),
            Err(Error::StartOutsideM { .. })
        ));
        let bad_stop = StopRule { tol_residual: 0.0, ..StopRule::default() };
        assert!(run(&pr, &ish(), &bad_stop, &RunOptions::default()).is_err());
    }

    #[test]
    fn run_aborts_on_out_of_range_schedule() {
        let pr = paper_example();
        let scheme = SchemeSpec::Mann { eta: Schedule::table(vec![0.5, 0.5, 1.0], 0.5) };
        match run(&pr, &scheme, &StopRule::default(), &RunOptions::default()) {
            Err(Error::ScheduleOutOfRange { n, value, .. }) => {
                assert_eq!(n, 2);
                assert_eq!(value, 1.0);
            }
            other => panic!("expected schedule error, got {other:?}"),
        }
    }

    #[test]
    fn run_stops_on_step_and_max_iters() {
        let pr = paper_example();
        let step_rule = StopRule { tol_residual: 1e-300, tol_step: 1e-6, max_iters: 1000 };
        let report = run(&pr, &SchemeSpec::Picard, &step_rule, &RunOptions::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::Step);
        assert!(report.converged);
        assert!(report.final_record().step_norm <= 1e-6);

        let short = StopRule { max_iters: 3, ..StopRule::default() };
        let report = run(&pr, &SchemeSpec::Picard, &short, &RunOptions::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::MaxIters);
        assert!(!report.converged);
        assert_eq!(report.iterations, 3);
        assert_eq!(report.trace.len(), 4);
    }

    #[test]
    fn misdeclared_kind_warns_or_fails() {
        let pr = paper_example();
        let mut bad = pr.clone();
        // Expands M past its right end; residual iteration still stays in M∪N for a few steps.
        bad.map = MapSpec::new(
            MapKind::SelfPreserving,
            Rule::Affine(AffineRule::scaled(1.1, Point::zeros(2))),
            Rule::Affine(AffineRule::identity(2)),
        );
        bad.w0 = p(&[-3.5, 0.0]);
        let stop = StopRule { max_iters: 1, ..StopRule::default() };
        let report = run(&bad, &SchemeSpec::Picard, &stop, &RunOptions::default()).unwrap();
        assert_eq!(report.warnings.len(), 1);
        let strict = RunOptions { strict: true, ..RunOptions::default() };
        assert!(matches!(run(&bad, &SchemeSpec::Picard, &stop, &strict), Err(Error::KindCheckFailed { .. })));
    }

    #[test]
    fn run_reports_non_finite_iterates() {
        let m = ConvexSet::halfspace(p(&[1.0]), 0.0).unwrap();
        let n = ConvexSet::halfspace(p(&[-1.0]), -10.0).unwrap();
        let map = MapSpec::new(
            MapKind::SelfPreserving,
            Rule::host(|x| x.scale(1e300)),
            Rule::Affine(AffineRule::identity(1)),
        );
        let pr = Problem::new("blowup", m, n, map, p(&[-1.0])).unwrap();
        let opts = RunOptions { kind_check_trials: 0, ..RunOptions::default() };
        match run(&pr, &SchemeSpec::Picard, &StopRule::default(), &opts) {
            Err(Error::NonFiniteIterate { n, trace }) => {
                assert_eq!(n, 2);
                assert_eq!(trace.len(), 2);
            }
            other => panic!("expected NonFiniteIterate, got {other:?}"),
        }
    }

    #[test]
    fn overlap_is_noted_once() {
        let m = ConvexSet::boxed(p(&[0.0]), p(&[2.0])).unwrap();
        let n = ConvexSet::boxed(p(&[1.0]), p(&[3.0])).unwrap();
        let rule = AffineRule::new(vec![vec![0.5]], p(&[0.75])).unwrap();
        let map = MapSpec::new(MapKind::SelfPreserving, Rule::Affine(rule.clone()), Rule::Affine(rule));
        let pr = Problem::new("overlap", m, n, map, p(&[2.0])).unwrap();
        let report = run(&pr, &SchemeSpec::Picard, &StopRule::default(), &RunOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.warnings.iter().filter(|w| w.contains("M ∩ N")).count(), 1);
        assert!(report.final_point.approx_eq(&p(&[1.5]), 1e-7));
    }

    #[test]
    fn rate_estimate_matches_contraction() {
        let pr = paper_example();
        let report = run(&pr, &SchemeSpec::Picard, &StopRule::default(), &RunOptions::default()).unwrap();
        assert!((report.rate_estimate.unwrap() - 0.5).abs() < 1e-9);
        let report = run(&pr, &ish(), &StopRule::default(), &RunOptions::default()).unwrap();
        assert!((report.rate_estimate.unwrap() - 0.25099975).abs() < 1e-6);
    }

    #[test]
    fn dist_m0_column_follows_problem() {
        let mut pr = paper_example();
        let report = run(&pr, &ish(), &StopRule::default(), &RunOptions::default()).unwrap();
        assert_eq!(report.trace[0].dist_m0, Some(0.5));
        pr.m0 = None;
        let report = run(&pr, &ish(), &StopRule::default(), &RunOptions::default()).unwrap();
        assert!(report.trace.iter().all(|r| r.dist_m0.is_none()));
        assert!(report.trace[1..].iter().all(|r| r.inner_gap.is_some()));
    }
}
