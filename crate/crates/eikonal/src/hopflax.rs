//! The Hopf-Lax solution `u(x, t) = min over B_t(x) of g` and the structure
//! it induces: minimizer sets `L(x, t)`, directional derivatives, the
//! differentiability verdict and reachable gradients.
//!
//! The dichotomy implemented by [`gradient_u`] is: `u` is differentiable at
//! `(x, t)` exactly when the set of gradient *values* over the minimizers is
//! a singleton; when it is, `Du = (Dg(y0), -|Dg(y0)|)`, and in particular
//! `Du = 0` when every minimizer carries a zero gradient. Multiple distinct
//! gradient values with at least one nonzero make the point
//! nondifferentiable. Gradient values that straddle the merge tolerance are
//! surfaced as an ambiguity, never silently resolved.

use crate::error::{EikonalError, Result};
use crate::field::ScalarField;
use crate::geometry;
use crate::optim::{minimize_over_ball, BallSearch, SearchBudget};
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};

/// A space-time query point `(x, t)`, `t >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(EikonalError::InvalidArgument(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(EikonalError::InvalidArgument("nonfinite coordinate".into()));
        }
        Ok(Self { x, t })
    }
}

/// Cardinality class of a resolved minimizer set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    Singleton,
    Finite(usize),
    Continuum,
}

/// The numerically resolved minimizer set `L(x, t)`, with the gradient values
/// `Dg(y)` at the representatives (the set written `L~(x, t)` lives in
/// `grad_values` after deduplication).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizerSet {
    /// `u(x, t)`.
    pub value: f64,
    /// Deduplicated representatives, pairwise separated by the merge radius,
    /// ordered by increasing value.
    pub points: Vec<Vec<f64>>,
    pub cardinality: Cardinality,
    /// `Dg` at each representative (parallel to `points`), with gradients
    /// below the degeneracy threshold snapped to exactly zero.
    pub grad_values: Vec<Vec<f64>>,
}

impl MinimizerSet {
    /// Distinct gradient values after merging at radius `merge`.
    pub fn distinct_gradients(&self, merge: f64) -> Vec<Vec<f64>> {
        let mut groups: Vec<Vec<f64>> = Vec::new();
        for g in &self.grad_values {
            if groups.iter().all(|k| geometry::dist(k, g) > merge) {
                groups.push(g.clone());
            }
        }
        groups
    }

    /// Largest gradient magnitude among the representatives.
    pub fn grad_scale(&self) -> f64 {
        self.grad_values
            .iter()
            .map(|g| geometry::norm(g))
            .fold(0.0, f64::max)
    }
}

/// The full gradient `Du = (grad u, u_t)` of the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGradient {
    pub spatial: Vec<f64>,
    pub time: f64,
}

impl SpaceTimeGradient {
    /// `(Dg(y), -|Dg(y)|)` from an initial gradient value.
    pub fn from_initial_gradient(dg: &[f64]) -> Self {
        let n = geometry::norm(dg);
        Self {
            spatial: dg.to_vec(),
            time: if n == 0.0 { 0.0 } else { -n },
        }
    }
}

/// Differentiability verdict at a space-time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GradientVerdict {
    Differentiable(SpaceTimeGradient),
    Nondifferentiable,
}

/// Reachable gradients `D*u(x, t)`, in one-to-one correspondence with the
/// distinct gradient values over the minimizers (not with the minimizers
/// themselves).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachableGradients {
    pub gradients: Vec<SpaceTimeGradient>,
    /// True when the underlying minimizer set was a continuum, in which case
    /// `gradients` is a sampled subset.
    pub sampled_continuum: bool,
}

fn check_ball(field: &dyn ScalarField, p: &SpaceTimePoint) -> Result<()> {
    if p.x.len() != field.dim() {
        return Err(EikonalError::InvalidArgument(format!(
            "point dimension {} != field dimension {}",
            p.x.len(),
            field.dim()
        )));
    }
    if !field.bounds().contains_ball(&p.x, p.t) {
        return Err(EikonalError::OutOfBounds {
            center: p.x.clone(),
            radius: p.t,
        });
    }
    Ok(())
}

/// Evaluates `u(x, t)` by global minimization of `g` over the closed ball.
pub fn evaluate_u(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<f64> {
    Ok(minimizer_set(field, p, tol, budget)?.value)
}

/// Resolves the minimizer set `L(x, t)`.
pub fn minimizer_set(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<MinimizerSet> {
    minimizer_set_seeded(field, p, tol, budget, &[])
}

/// As [`minimizer_set`], additionally seeding the search from known good
/// candidates (used by the termination-time bisection, which walks along a
/// characteristic and reuses the minimizers of the previous probe).
pub fn minimizer_set_seeded(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    tol: &Tolerances,
    budget: &SearchBudget,
    hints: &[Vec<f64>],
) -> Result<MinimizerSet> {
    check_ball(field, p)?;
    let search = minimize_over_ball(field, &p.x, p.t, budget, hints);
    Ok(build_minimizer_set(field, p, tol, &search))
}

/// Filters a raw ball search down to the minimizer set: membership band
/// around the minimum, spatial merge at the configured radius, cardinality
/// classification.
pub(crate) fn build_minimizer_set(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    tol: &Tolerances,
    search: &BallSearch,
) -> MinimizerSet {
    let u = search.value;
    let band = tol.member_value(u);
    let merge = tol.merge_radius(p.t);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for m in search.within(band) {
        if points.iter().all(|q| geometry::dist(q, &m.point) > merge) {
            points.push(m.point.clone());
        }
    }
    let eps_grad = tol.grad_zero(u.abs());
    let grad_values: Vec<Vec<f64>> = points
        .iter()
        .map(|y| {
            let g = field.gradient(y);
            if geometry::norm(&g) <= eps_grad {
                vec![0.0; g.len()]
            } else {
                g
            }
        })
        .collect();
    let cardinality = match points.len() {
        1 => Cardinality::Singleton,
        k if k > tol.continuum_threshold => Cardinality::Continuum,
        k => Cardinality::Finite(k),
    };
    MinimizerSet {
        value: u,
        points,
        cardinality,
        grad_values,
    }
}

/// Directional derivative of `u(., t)` along the unit vector `l`:
/// the minimum of `Dg(y) . l` over the minimizers.
pub fn directional_derivative_u(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    l: &[f64],
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<f64> {
    let ln = geometry::norm(l);
    if (ln - 1.0).abs() > 1e-8 {
        return Err(EikonalError::InvalidDirection {
            reason: format!("directional derivative needs a unit vector, |l| = {ln}"),
        });
    }
    let set = minimizer_set(field, p, tol, budget)?;
    Ok(set
        .grad_values
        .iter()
        .map(|g| geometry::dot(g, l))
        .fold(f64::INFINITY, f64::min))
}

/// Greedy clustering count of gradient values at tolerance `merge`.
fn gradient_group_count(values: &[Vec<f64>], merge: f64) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for v in values {
        if reps.iter().all(|r| geometry::dist(r, v) > merge) {
            reps.push(v);
        }
    }
    reps.len()
}

/// Differentiability verdict via the gradient-value dichotomy.
///
/// Errors with [`EikonalError::AmbiguousGradient`] when the clustering of
/// gradient values changes between the merge tolerance and twice the merge
/// tolerance, i.e. when the verdict would hinge on sub-tolerance differences.
pub fn gradient_u(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<GradientVerdict> {
    let set = minimizer_set(field, p, tol, budget)?;
    gradient_verdict(&set, tol)
}

/// Verdict from an already-resolved minimizer set.
pub fn gradient_verdict(set: &MinimizerSet, tol: &Tolerances) -> Result<GradientVerdict> {
    let merge = tol.grad_merge(set.grad_scale());
    let n1 = gradient_group_count(&set.grad_values, merge);
    let n2 = gradient_group_count(&set.grad_values, 2.0 * merge);
    if n1 != n2 {
        return Err(EikonalError::AmbiguousGradient);
    }
    if n1 <= 1 {
        let dg = set
            .grad_values
            .first()
            .cloned()
            .unwrap_or_else(|| vec![0.0; set.points.first().map_or(0, Vec::len)]);
        Ok(GradientVerdict::Differentiable(
            SpaceTimeGradient::from_initial_gradient(&dg),
        ))
    } else {
        // At least two distinct values; after zero-snapping, a multi-valued
        // set always contains a nonzero one.
        Ok(GradientVerdict::Nondifferentiable)
    }
}

/// The reachable gradients `D*u(x, t) = {(Dg(y), -|Dg(y)|)}`, deduplicated by
/// gradient value.
pub fn reachable_gradients(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<ReachableGradients> {
    let set = minimizer_set(field, p, tol, budget)?;
    let merge = tol.grad_merge(set.grad_scale());
    let gradients = set
        .distinct_gradients(merge)
        .iter()
        .map(|g| SpaceTimeGradient::from_initial_gradient(g))
        .collect();
    Ok(ReachableGradients {
        gradients,
        sampled_continuum: set.cardinality == Cardinality::Continuum,
    })
}
