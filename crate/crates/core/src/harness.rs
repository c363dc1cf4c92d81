//! Scheme comparison tables, seeded property suites, and CSV output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::thread;

use rand::{Rng, SeedableRng};

use crate::alternating::{neumann_limit, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::convex::{Region, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::hilbert::Point;
use crate::mappings::{check_invariance, check_rel_nonexpansive, MapSpec, Problem};
use crate::schemes::{run, RunOptions, RunReport, SchemeSpec, StopRule};
use crate::SampleRng;

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub scheme_label: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_point: Point,
    pub rate_estimate: Option<f64>,
    pub converged: bool,
}

impl ComparisonRow {
    fn from_report(report: &RunReport) -> Self {
        ComparisonRow {
            scheme_label: report.scheme.label(),
            iterations: report.iterations,
            final_residual: report.final_record().gap_residual,
            final_point: report.final_point.clone(),
            rate_estimate: report.rate_estimate,
            converged: report.converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub problem_label: String,
    pub tol: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

/// Runs every scheme from the same start under the same stop rule. Runs
/// execute on separate threads; rows keep the request order.
pub fn compare(
    problem: &Problem,
    schemes: &[SchemeSpec],
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<(ComparisonTable, Vec<RunReport>)> {
    if schemes.is_empty() {
        return Err(Error::InvalidParameter("at least one scheme is required".into()));
    }
    stop.validate()?;
    for scheme in schemes {
        scheme.check_compatible(problem.map.kind)?;
    }
    let reports: Vec<Result<RunReport>> = thread::scope(|s| {
        let handles: Vec<_> =
            schemes.iter().map(|scheme| s.spawn(move || run(problem, scheme, stop, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let table = ComparisonTable {
        problem_label: problem.label.clone(),
        tol: stop.tol_residual,
        rows: reports.iter().map(ComparisonRow::from_report).collect(),
    };
    Ok((table, reports))
}

/// Thresholds for [`verify_properties`]. A check passes when its margin is
/// at least `-threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyThresholds {
    pub idempotence: f64,
    pub nonexpansive: f64,
    pub kolmogorov: f64,
    pub cross_projection: f64,
    pub neumann_monotone: f64,
    pub membership: f64,
    /// Samples of the set per Kolmogorov test point.
    pub kolmogorov_samples: usize,
    /// Cap on von Neumann starts and on the power `n` in the monotonicity suite.
    pub neumann_starts: usize,
    pub neumann_depth: usize,
    /// Treat map-hypothesis violations as failures rather than warnings.
    pub strict: bool,
}

impl Default for PropertyThresholds {
    fn default() -> Self {
        PropertyThresholds {
            idempotence: 1e-12,
            nonexpansive: 1e-12,
            kolmogorov: 1e-10,
            cross_projection: 1e-12,
            neumann_monotone: 1e-12,
            membership: MEMBERSHIP_TOL,
            kolmogorov_samples: 100,
            neumann_starts: 100,
            neumann_depth: 100,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub checks: usize,
    pub failures: usize,
    /// Smallest margin seen; negative values beyond the threshold fail.
    pub worst_margin: f64,
    /// Descriptions of the first few failures.
    pub witnesses: Vec<String>,
    /// Failures in advisory suites are reported but do not fail the report.
    pub advisory: bool,
}

impl SuiteResult {
    fn new(name: impl Into<String>) -> Self {
        SuiteResult {
            name: name.into(),
            checks: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            witnesses: Vec::new(),
            advisory: false,
        }
    }

    fn check(&mut self, margin: f64, threshold: f64, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if !(margin >= -threshold) {
            self.failures += 1;
            if self.witnesses.len() < 5 {
                self.witnesses.push(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub trials: usize,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.advisory || s.passed())
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// Random point near a set: a member plus a uniform offset in `[-5, 5]^d`.
fn sample_near<S: Region + ?Sized>(set: &S, rng: &mut SampleRng) -> Point {
    let base = set.sample(rng);
    let coords = base.coords().iter().map(|c| c + rng.random_range(-5.0..=5.0)).collect();
    Point::new(coords).expect("finite sample")
}

fn projection_suites<S: Region + ?Sized>(
    label: &str,
    set: &S,
    trials: usize,
    th: &PropertyThresholds,
    rng: &mut SampleRng,
) -> [SuiteResult; 3] {
    let mut idem = SuiteResult::new(format!("idempotence[{label}]"));
    let mut nonexp = SuiteResult::new(format!("nonexpansive[{label}]"));
    let mut kolm = SuiteResult::new(format!("kolmogorov[{label}]"));
    for _ in 0..trials {
        let x = sample_near(set, rng);
        let y = sample_near(set, rng);
        let px = set.project(&x);
        let py = set.project(&y);
        let ppx = set.project(&px);
        idem.check(-ppx.max_abs_diff(&px), th.idempotence, || format!("x = {x}: P(Px) = {ppx}, Px = {px}"));
        let (lhs, rhs) = (px.distance(&py), x.distance(&y));
        nonexp.check(rhs - lhs, th.nonexpansive, || {
            format!("x = {x}, y = {y}: ‖Px − Py‖ = {lhs:e} > ‖x − y‖ = {rhs:e}")
        });
        let r = &x - &px;
        for _ in 0..th.kolmogorov_samples {
            let a = set.sample(rng);
            let margin = r.dot(&(&px - &a));
            kolm.check(margin, th.kolmogorov, || format!("x = {x}, a = {a}: <x − Px, Px − a> = {margin:e}"));
        }
    }
    [idem, nonexp, kolm]
}

/// Runs the projection, cross-projection and von Neumann monotonicity suites
/// on `(M, N)`, plus the map-hypothesis suites when a map is given.
pub fn verify_properties<M, N>(
    m: &M,
    n: &N,
    map: Option<&MapSpec>,
    trials: usize,
    seed: u64,
    th: &PropertyThresholds,
) -> Result<PropertyReport>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = SampleRng::seed_from_u64(seed);
    let mut suites = Vec::new();
    suites.extend(projection_suites("M", m, trials, th, &mut rng));
    suites.extend(projection_suites("N", n, trials, th, &mut rng));

    let mut cross = SuiteResult::new("cross-projection");
    for _ in 0..trials {
        let w = m.sample(&mut rng);
        let z = n.sample(&mut rng);
        let pnw = n.project(&w);
        let pmz = m.project(&z);
        let (dn, dm) = (n.dist_to(&pnw), m.dist_to(&pmz));
        cross.check(-dn, th.membership, || format!("P_N w = {pnw} is {dn:e} outside N"));
        cross.check(-dm, th.membership, || format!("P_M z = {pmz} is {dm:e} outside M"));
        let (lhs, rhs) = (pnw.distance(&pmz), w.distance(&z));
        cross.check(rhs - lhs, th.cross_projection, || {
            format!("w = {w}, z = {z}: ‖P_N w − P_M z‖ = {lhs:e} > ‖w − z‖ = {rhs:e}")
        });
    }
    suites.push(cross);

    let mut mono = SuiteResult::new("neumann-monotone");
    let anchor_start = m.sample(&mut rng);
    let pair = neumann_limit(m, n, &anchor_start, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    for _ in 0..trials.min(th.neumann_starts) {
        let w = m.sample(&mut rng);
        for a in [&pair.w_star, &pair.z_star] {
            let mut current = w.clone();
            let mut prev_dist = current.distance(a);
            for k in 0..th.neumann_depth {
                current = m.project(&n.project(&current));
                let d = current.distance(a);
                mono.check(prev_dist - d, th.neumann_monotone, || {
                    format!("w = {w}, a = {a}, n = {k}: ‖Pⁿ⁺¹w − a‖ = {d:e} > ‖Pⁿw − a‖ = {prev_dist:e}")
                });
                prev_dist = d;
            }
        }
    }
    suites.push(mono);

    if let Some(map) = map {
        let mut inv = SuiteResult::new("map-invariance");
        let report = check_invariance(map, m, n, trials, seed, th.membership)?;
        for _ in 0..2 * report.trials - report.violations.len() {
            inv.check(0.0, 0.0, String::new);
        }
        for v in &report.violations {
            inv.check(-v.distance, th.membership, || {
                format!("{:?}-side point {} maps to {} ({:e} outside)", v.side, v.point, v.image, v.distance)
            });
        }
        inv.advisory = !th.strict;
        suites.push(inv);

        let mut rel = SuiteResult::new("map-rel-nonexpansive");
        let report = check_rel_nonexpansive(map, m, n, trials, seed.wrapping_add(1), th.nonexpansive)?;
        for _ in 0..report.trials - report.violations.len() {
            rel.check(0.0, 0.0, String::new);
        }
        for v in &report.violations {
            rel.check(-v.excess, th.nonexpansive, || {
                format!("w = {}, z = {}: ‖Fw − Fz‖ exceeds ‖w − z‖ by {:e}", v.w, v.z, v.excess)
            });
        }
        rel.advisory = !th.strict;
        suites.push(rel);
    }

    Ok(PropertyReport { trials, seed, suites })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the per-iteration trace as CSV:
/// `scheme,n,coord_0,…,coord_{d-1},residual,step_norm,gap_residual,dist_M0,p_applied`.
/// Floats use the shortest representation that round-trips exactly.
pub fn write_trace<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let dim = report.final_point.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scheme".to_string(), "n".to_string()];
    header.extend((0..dim).map(|i| format!("coord_{i}")));
    header.extend(["residual", "step_norm", "gap_residual", "dist_M0", "p_applied"].map(String::from));
    w.write_record(&header)?;
    let label = report.scheme.label();
    for r in &report.trace {
        let mut row = vec![label.clone(), r.n.to_string()];
        row.extend(r.point.coords().iter().map(f64::to_string));
        row.push(r.residual.to_string());
        row.push(r.step_norm.to_string());
        row.push(r.gap_residual.to_string());
        row.push(fmt_opt(r.dist_m0));
        row.push(r.p_applied.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_trace_file(report: &RunReport, path: &Path) -> Result<()> {
    write_trace(report, create(path)?).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
            _ => unreachable!(),
        },
        other => other,
    }
}

/// One parsed row of a trace CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub scheme: String,
    pub n: usize,
    pub coords: Vec<f64>,
    pub residual: f64,
    pub step_norm: f64,
    pub gap_residual: f64,
    pub dist_m0: Option<f64>,
    pub p_applied: usize,
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Config(format!("cannot parse {name} from {field:?}")))
}

/// Reads a trace written by [`write_trace`].
pub fn parse_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let width = rdr.headers()?.len();
    if width < 8 {
        return Err(Error::Config(format!("trace has {width} columns, expected at least 8")));
    }
    let dim = width - 7;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let coords = (0..dim).map(|i| parse_field(&rec[2 + i], "coordinate")).collect::<Result<Vec<f64>>>()?;
        let tail = 2 + dim;
        let dist_m0 = match &rec[tail + 3] {
            "" => None,
            s => Some(parse_field(s, "dist_M0")?),
        };
        rows.push(TraceRow {
            scheme: rec[0].to_string(),
            n: parse_field(&rec[1], "n")?,
            coords,
            residual: parse_field(&rec[tail], "residual")?,
            step_norm: parse_field(&rec[tail + 1], "step_norm")?,
            gap_residual: parse_field(&rec[tail + 2], "gap_residual")?,
            dist_m0,
            p_applied: parse_field(&rec[tail + 4], "p_applied")?,
        });
    }
    Ok(rows)
}

/// Writes `scheme,iterations,converged,final_residual,rate_estimate`.
pub fn write_table<W: Write>(table: &ComparisonTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "iterations", "converged", "final_residual", "rate_estimate"])?;
    for row in &table.rows {
        w.write_record([
            row.scheme_label.clone(),
            row.iterations.to_string(),
            row.converged.to_string(),
            row.final_residual.to_string(),
            fmt_opt(row.rate_estimate),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_table_file(table: &ComparisonTable, path: &Path) -> Result<()> {
    write_table(table, create(path)?).map_err(|e| with_path(e, path))
}
