//! Global minimization of a field over a closed ball (intersected with the
//! field bounds): coarse rejection grid plus sphere samples, then multi-start
//! projected gradient descent from the surviving cells.
//!
//! The minimum of `g` over `B_t(x)` may sit in the interior (at a critical
//! point of `g`) or anywhere on the sphere, so neither a pure interior search
//! nor a pure boundary search is sufficient; starts come from both.
//!
//! Everything here is deterministic in the query: start lattices are fixed
//! functions of the ball, so grid scans give identical results for any worker
//! count.

use crate::field::ScalarField;
use crate::geometry::{self, BoundsBox};
use serde::{Deserialize, Serialize};

/// Effort knobs for ball searches. `standard` is the default for point
/// queries, `scan` is the cheaper profile used by grid sweeps, `thorough`
/// backs oracle-grade cross checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Aim for roughly this many coarse grid points in total.
    pub grid_target: usize,
    /// Boundary samples (2D: circle angles; 3D: Fibonacci sphere; 1D always 2).
    pub sphere_samples: usize,
    /// Cap on the number of descents launched.
    pub max_descents: usize,
    /// Iteration cap per descent.
    pub max_iters: usize,
    /// Projected-gradient residual tolerance, relative to `1 + |grad|`.
    pub grad_tol_base: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self::standard()
    }
}

impl SearchBudget {
    pub fn standard() -> Self {
        Self {
            grid_target: 289,
            sphere_samples: 48,
            max_descents: 56,
            max_iters: 160,
            grad_tol_base: 1e-10,
        }
    }

    pub fn scan() -> Self {
        Self {
            grid_target: 121,
            sphere_samples: 24,
            max_descents: 18,
            max_iters: 90,
            grad_tol_base: 1e-9,
        }
    }

    pub fn thorough() -> Self {
        Self {
            grid_target: 1089,
            sphere_samples: 96,
            max_descents: 96,
            max_iters: 240,
            grad_tol_base: 1e-12,
        }
    }

    fn grid_per_axis(&self, dim: usize) -> usize {
        let per = (self.grid_target as f64).powf(1.0 / dim as f64).round() as usize;
        match dim {
            1 => per.clamp(17, 129),
            2 => per.clamp(7, 65),
            _ => per.clamp(5, 17),
        }
    }
}

/// A polished local minimum of the restricted problem.
#[derive(Debug, Clone)]
pub struct LocalMinimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Projected-gradient residual at the endpoint; near zero for genuine
    /// local minima, large for descents stopped by the iteration cap.
    pub residual: f64,
}

/// Result of a ball search: the best value found and all distinct polished
/// local minima, sorted by value.
#[derive(Debug, Clone)]
pub struct BallSearch {
    pub value: f64,
    pub minima: Vec<LocalMinimum>,
}

impl BallSearch {
    /// Local minima within `band` of the global minimum.
    pub fn within(&self, band: f64) -> impl Iterator<Item = &LocalMinimum> {
        let cut = self.value + band;
        self.minima.iter().take_while(move |m| m.value <= cut)
    }
}

/// Projects `p` onto `B_r(center)` intersected with `bounds`. The center is
/// assumed to lie in the box, so clamping first and then pulling toward the
/// center along a straight segment stays inside the box.
pub fn project_ball(center: &[f64], radius: f64, bounds: &BoundsBox, p: &[f64]) -> Vec<f64> {
    let q = bounds.clamp(p);
    let d = geometry::dist(&q, center);
    if d <= radius || d == 0.0 {
        q
    } else {
        geometry::add_scaled(center, radius / d, &geometry::sub(&q, center))
    }
}

/// Minimizes `field` over `B_radius(center)`, seeded additionally from
/// `hints` (e.g. minimizers known from a neighboring query).
pub fn minimize_over_ball(
    field: &dyn ScalarField,
    center: &[f64],
    radius: f64,
    budget: &SearchBudget,
    hints: &[Vec<f64>],
) -> BallSearch {
    let dim = field.dim();
    debug_assert_eq!(center.len(), dim);
    let bounds = field.bounds();

    if radius <= f64::EPSILON * (1.0 + geometry::norm(center)) {
        let p = bounds.clamp(center);
        let value = field.value(&p);
        return BallSearch {
            value,
            minima: vec![LocalMinimum {
                point: p,
                value,
                residual: 0.0,
            }],
        };
    }

    // Candidate starts: hints first (always descended), then center, grid,
    // sphere.
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for h in hints {
        starts.push(project_ball(center, radius, bounds, h));
    }
    let hint_count = starts.len();
    starts.push(bounds.clamp(center));

    let per_axis = budget.grid_per_axis(dim);
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<f64> = (0..dim)
            .map(|a| center[a] - radius + 2.0 * radius * idx[a] as f64 / (per_axis - 1) as f64)
            .collect();
        if geometry::dist(&p, center) <= radius {
            starts.push(bounds.clamp(&p));
        }
        // odometer increment
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == dim {
                break;
            }
        }
        if a == dim {
            break;
        }
    }
    for s in sphere_points(dim, budget.sphere_samples) {
        starts.push(project_ball(
            center,
            radius,
            bounds,
            &geometry::add_scaled(center, radius, &s),
        ));
    }

    let mut evaluated: Vec<(f64, Vec<f64>)> = starts
        .into_iter()
        .map(|p| (field.value(&p), p))
        .collect();
    let best_raw = evaluated
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .cloned()
        .expect("at least the center start exists");

    // Keep hints, then fill by value order with spatial pruning so a single
    // deep basin cannot hog every descent slot.
    let prune_radius = 2.0 * radius / (per_axis.max(2) - 1) as f64;
    let mut chosen: Vec<(f64, Vec<f64>)> = evaluated.drain(..hint_count).collect();
    evaluated.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (v, p) in evaluated {
        if chosen.len() >= budget.max_descents {
            break;
        }
        if chosen
            .iter()
            .all(|(_, q)| geometry::dist(&p, q) > prune_radius)
        {
            chosen.push((v, p));
        }
    }

    let mut minima: Vec<LocalMinimum> = chosen
        .into_iter()
        .map(|(_, p)| descend(field, center, radius, &p, budget))
        .collect();

    // A raw sample strictly better than every polished endpoint means its
    // basin slipped through the pruning; descend from it as well.
    let best_polished = minima
        .iter()
        .map(|m| m.value)
        .fold(f64::INFINITY, f64::min);
    if best_raw.0 < best_polished - 1e-14 * (1.0 + best_raw.0.abs()) {
        minima.push(descend(field, center, radius, &best_raw.1, budget));
    }

    // Second-order polish tightens endpoints in flat valleys (tangentially
    // degenerate sphere minima stall first-order descent at a scatter wider
    // than the merge radius).
    for m in &mut minima {
        if let Some(p) = newton_polish(field, center, radius, &m.point) {
            let v = field.value(&p);
            if v <= m.value + 1e-13 * (1.0 + m.value.abs()) {
                m.residual = residual_at(field, center, radius, &p);
                m.point = p;
                m.value = v;
            }
        }
    }

    minima.sort_by(|a, b| a.value.total_cmp(&b.value));
    // Drop duplicate endpoints (distinct basins stay far apart).
    let dedup_radius = 1e-8 * (1.0 + radius);
    let mut distinct: Vec<LocalMinimum> = Vec::new();
    for m in minima {
        if distinct
            .iter()
            .all(|k| geometry::dist(&k.point, &m.point) > dedup_radius)
        {
            distinct.push(m);
        }
    }
    let value = distinct.first().map(|m| m.value).unwrap_or(best_raw.0);
    BallSearch {
        value,
        minima: distinct,
    }
}

/// Monotone projected gradient descent with backtracking and a
/// Barzilai-Borwein step guess.
fn descend(
    field: &dyn ScalarField,
    center: &[f64],
    radius: f64,
    start: &[f64],
    budget: &SearchBudget,
) -> LocalMinimum {
    let bounds = field.bounds();
    let proj = |p: &[f64]| project_ball(center, radius, bounds, p);
    let mut y = proj(start);
    let mut fy = field.value(&y);
    let mut g = field.gradient(&y);
    let mut step = 0.25 * radius / (1.0 + geometry::norm(&g));
    let min_step = 1e-13 * radius;
    let mut last_residual = f64::INFINITY;

    for _ in 0..budget.max_iters {
        let gnorm = geometry::norm(&g);
        // Gradient-mapping residual: small probe step, measure blocked motion.
        let sigma = 1e-3 * radius / (1.0 + gnorm);
        let probe = proj(&geometry::add_scaled(&y, -sigma, &g));
        let residual = geometry::dist(&y, &probe) / sigma;
        last_residual = residual;
        if residual <= budget.grad_tol_base * (1.0 + gnorm) {
            break;
        }

        let mut s = step.clamp(min_step, radius);
        let mut moved = false;
        for _ in 0..40 {
            let cand = proj(&geometry::add_scaled(&y, -s, &g));
            let fc = field.value(&cand);
            let disp2: f64 = geometry::dist(&cand, &y).powi(2);
            if disp2 == 0.0 {
                break;
            }
            if fc <= fy - 1e-4 * disp2 / s {
                let g_new = field.gradient(&cand);
                // BB1 step from the accepted displacement
                let dy = geometry::sub(&cand, &y);
                let dg = geometry::sub(&g_new, &g);
                let denom = geometry::dot(&dy, &dg);
                step = if denom > 0.0 {
                    (geometry::dot(&dy, &dy) / denom).clamp(min_step, radius)
                } else {
                    (s * 2.0).min(radius)
                };
                y = cand;
                fy = fc;
                g = g_new;
                moved = true;
                break;
            }
            s *= 0.5;
            if s < min_step {
                break;
            }
        }
        if !moved {
            break;
        }
    }
    // the loop may have moved after the last measurement
    if last_residual > budget.grad_tol_base * 100.0 {
        last_residual = residual_at(field, center, radius, &y);
    }
    LocalMinimum {
        point: y,
        value: fy,
        residual: last_residual,
    }
}

/// Projected-gradient residual of the ball-constrained problem at `y`.
fn residual_at(field: &dyn ScalarField, center: &[f64], radius: f64, y: &[f64]) -> f64 {
    let g = field.gradient(y);
    let sigma = 1e-3 * radius / (1.0 + geometry::norm(&g));
    let probe = project_ball(center, radius, field.bounds(), &geometry::add_scaled(y, -sigma, &g));
    geometry::dist(y, &probe) / sigma
}

/// Curvature-aware polish of a descent endpoint, for fields with a Hessian.
///
/// Interior points get a plain Newton step; points on the sphere get a
/// Riemannian Newton step for the constrained problem (projected Hessian
/// corrected by the sphere's Weingarten term `-(Dg . n)/r`). Flat directions
/// (continua of minima) leave the system near-singular and the polish backs
/// off, keeping the endpoint as is.
fn newton_polish(
    field: &dyn ScalarField,
    center: &[f64],
    radius: f64,
    point: &[f64],
) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    if field.smoothness() != crate::field::Smoothness::C2Plus {
        return None;
    }
    let dim = field.dim();
    let bounds = field.bounds();
    let mut y = point.to_vec();
    let mut improved = false;
    for _ in 0..30 {
        let g = field.gradient(&y);
        let Some(h) = field.hessian(&y) else { break };
        let r = geometry::dist(&y, center);
        let on_sphere = r >= radius * (1.0 - 1e-9);
        let (grad_sys, hess_sys) = if on_sphere && r > 0.0 {
            let n: Vec<f64> = geometry::scale(&geometry::sub(&y, center), 1.0 / r);
            let gn = geometry::dot(&g, &n);
            let gt: Vec<f64> = geometry::add_scaled(&g, -gn, &n);
            // P (H - (g.n)/r I) P + penalty on the normal direction
            let mut p: DMatrix<f64> = DMatrix::identity(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    p[(i, j)] -= n[i] * n[j];
                }
            }
            let core: DMatrix<f64> = &p * (h - DMatrix::identity(dim, dim) * (gn / r)) * &p;
            let scale = 1.0 + core.amax();
            let mut sys = core;
            for i in 0..dim {
                for j in 0..dim {
                    sys[(i, j)] += n[i] * n[j] * scale * 1e6;
                }
            }
            (gt, sys)
        } else {
            (g.clone(), h)
        };
        let rhs = DVector::from_vec(grad_sys.clone());
        let Some(step) = hess_sys.lu().solve(&rhs) else { break };
        let step: Vec<f64> = step.iter().map(|v| -v).collect();
        let sn = geometry::norm(&step);
        if !sn.is_finite() || sn > 0.2 * radius {
            break;
        }
        let cand = project_ball(center, radius, bounds, &geometry::add_scaled(&y, 1.0, &step));
        if field.value(&cand) > field.value(&y) + 1e-13 * (1.0 + field.value(&y).abs()) {
            break;
        }
        let moved = geometry::dist(&cand, &y);
        y = cand;
        improved = true;
        if moved <= 1e-13 * (1.0 + radius) {
            break;
        }
    }
    improved.then_some(y)
}

/// Deterministic unit directions: interval ends in 1D, uniform angles in 2D,
/// Fibonacci sphere in 3D.
pub fn sphere_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..count.max(4))
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count.max(4) as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let n = count.max(8);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}
