//! von Neumann alternating projections between two closed convex sets.
//!
//! `P = P_M ∘ P_N`. Iterating `P` from any start yields a sequence in `M`
//! whose limit `w*` realises the gap `d(M, N)` together with `z* = P_N(w*)`.

use crate::convex::Region;
use crate::error::{Error, Result};
use crate::hilbert::{check_dims, Point};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
/// Movement below which further applications of `P` are skipped.
pub const DEFAULT_EARLY_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct ProximalPair {
    /// Limit point in `M`.
    pub w_star: Point,
    /// `P_N(w_star)`, in `N`.
    pub z_star: Point,
    /// `‖w_star − z_star‖`, the estimate of `d(M, N)`.
    pub gap: f64,
    /// `z_star − w_star`.
    pub displacement: Point,
    pub iterations_used: usize,
    pub converged: bool,
}

/// One application of `P`: returns `(P_M(P_N w), P_N w)`.
pub fn neumann_step<M, N>(m: &M, n: &N, w: &Point) -> (Point, Point)
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    let z = n.project(w);
    (m.project(&z), z)
}

/// Iterator over the von Neumann pairs `(P^k w, P_N P^{k-1} w)` for `k >= 1`.
pub struct NeumannSequence<'a, M: ?Sized, N: ?Sized> {
    m: &'a M,
    n: &'a N,
    current: Point,
}

impl<'a, M: Region + ?Sized, N: Region + ?Sized> NeumannSequence<'a, M, N> {
    pub fn new(m: &'a M, n: &'a N, start: Point) -> Self {
        NeumannSequence { m, n, current: start }
    }
}

impl<M: Region + ?Sized, N: Region + ?Sized> Iterator for NeumannSequence<'_, M, N> {
    type Item = (Point, Point);

    fn next(&mut self) -> Option<Self::Item> {
        let (w, z) = neumann_step(self.m, self.n, &self.current);
        self.current = w.clone();
        Some((w, z))
    }
}

/// Runs `P` until consecutive iterates move at most `tol`, or `max_iters`
/// applications. Running out of iterations is reported through
/// [`ProximalPair::converged`], not as an error.
pub fn neumann_limit<M, N>(m: &M, n: &N, w0: &Point, tol: f64, max_iters: usize) -> Result<ProximalPair>
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    check_dims(m.dim(), w0.dim())?;
    check_dims(n.dim(), w0.dim())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be > 0")));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
    }

    let mut prev = w0.clone();
    let mut last = None;
    let mut converged = false;
    let mut used = 0;
    for (w, z) in NeumannSequence::new(m, n, w0.clone()).take(max_iters) {
        used += 1;
        let moved = w.distance(&prev);
        prev = w.clone();
        last = Some((w, z));
        if moved <= tol {
            converged = true;
            break;
        }
    }
    let (w_star, z_star) = last.expect("max_iters >= 1");
    let displacement = &z_star - &w_star;
    Ok(ProximalPair {
        gap: displacement.norm(),
        w_star,
        z_star,
        displacement,
        iterations_used: used,
        converged,
    })
}

/// Applies `P` up to `count` times, stopping once an application moves the
/// point less than `early_tol`. Returns the point and the number of
/// applications actually performed.
pub fn p_power<M, N>(m: &M, n: &N, w: &Point, count: usize, early_tol: f64) -> (Point, usize)
where
    M: Region + ?Sized,
    N: Region + ?Sized,
{
    let mut current = w.clone();
    let mut applied = 0;
    while applied < count {
        let (next, _) = neumann_step(m, n, &current);
        applied += 1;
        let moved = next.distance(&current);
        current = next;
        if moved < early_tol {
            break;
        }
    }
    (current, applied)
}
