//! Characteristics `X(y0, t) = y0 + t Dg(y0)/|Dg(y0)|`, their first and
//! second termination times, and the membership predicates for the sets of
//! terminating initial points.
//!
//! Two independent computations of the termination times are provided.
//!
//! The *touching-time* method rests on a reduction: a point `z` enters the
//! moving ball `B_t(y0 + t n)` exactly at
//!
//! `tau(z) = |z - y0|^2 / (2 (z - y0) . n)`,
//!
//! (never, if the denominator is nonpositive), so the second termination time
//! is the infimum of `tau` over the strict sublevel set `{g < g(y0)}` in the
//! half space `H_{y0}`, and the first termination time is the infimum over
//! `{g <= g(y0)}` minus a small ball around `y0`. The infimum is approached
//! either at a far touching point, at a local minimum of `g` (tangential
//! contact), or in the limit toward `y0` along the level surface (curvature
//! limited, the conjugate-time case), and the sampler covers all three:
//! quasi-random global samples, polished local minima of `g`, and ring
//! samples Newton-projected onto the level surface, followed by a
//! tangent-walk refinement of the best candidates along the level surface.
//!
//! The *bisection* method evaluates the defining predicates "`y0` is the
//! unique minimizer for `(X(t), t)`" and "`y0` is a minimizer for
//! `(X(t), t)`" directly through minimizer sets; both are monotone in `t`,
//! so bisection is valid. It is slower but independent, and doubles as the
//! oracle for the touching-time method.

use crate::error::{EikonalError, Result};
use crate::field::ScalarField;
use crate::geometry::{self, halton, SplitMix64};
use crate::hopflax::{minimizer_set_seeded, SpaceTimePoint};
use crate::optim::{minimize_over_ball, sphere_points, SearchBudget};
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};

/// Salt for the quasi-random global sampler.
const TERMINATION_SALT: u64 = 0x7e31_c0de;

/// Termination data of one characteristic. Infinite times are encoded as the
/// cap `t = t_max` plus the `capped` flag, never as a sentinel float, so that
/// "no termination found up to the horizon" stays distinguishable from a
/// large finite time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminationRecord {
    pub y0: Vec<f64>,
    /// Unit characteristic direction (or the supplied `P`, `|P| <= 1`, for
    /// zero-gradient starting points).
    pub direction: Vec<f64>,
    /// First termination time: last time `y0` is the unique minimizer.
    pub t_bar: f64,
    pub t_bar_capped: bool,
    /// Second termination time: first time `y0` stops being a minimizer.
    pub t_s: f64,
    pub t_s_capped: bool,
    /// First termination point, present when `t_bar` is finite.
    pub x_bar: Option<Vec<f64>>,
    /// Second termination point, present when `t_s` is finite.
    pub x_s: Option<Vec<f64>>,
    /// The search region was clipped by the field bounds.
    pub search_truncated: bool,
}

impl TerminationRecord {
    fn finish(
        y0: Vec<f64>,
        direction: Vec<f64>,
        t_bar: f64,
        t_s: f64,
        t_max: f64,
        truncated: bool,
    ) -> Self {
        // enforce t_bar <= t_s (uniqueness fails no later than membership)
        let t_bar = t_bar.min(t_s);
        let t_bar_capped = !(t_bar < t_max) || !t_bar.is_finite();
        let t_s_capped = !(t_s < t_max) || !t_s.is_finite();
        let point = |t: f64, capped: bool| {
            (!capped).then(|| geometry::add_scaled(&y0, t, &direction))
        };
        let t_bar = if t_bar_capped { t_max } else { t_bar };
        let t_s = if t_s_capped { t_max } else { t_s };
        Self {
            x_bar: point(t_bar, t_bar_capped),
            x_s: point(t_s, t_s_capped),
            y0,
            direction,
            t_bar,
            t_bar_capped,
            t_s,
            t_s_capped,
            search_truncated: truncated,
        }
    }
}

/// Unit direction of the characteristic from `y0`, or a degenerate-gradient
/// error.
pub fn characteristic_direction(
    field: &dyn ScalarField,
    y0: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let dg = field.gradient(y0);
    let norm = geometry::norm(&dg);
    let threshold = tol.grad_zero(field.value(y0).abs() + norm);
    if norm <= threshold {
        Err(EikonalError::DegenerateGradient {
            norm,
            threshold,
        })
    } else {
        Ok(geometry::scale(&dg, 1.0 / norm))
    }
}

/// The point `X(y0, t)` on the characteristic from `y0`.
///
/// When `Dg(y0) != 0` the direction is `Dg(y0)/|Dg(y0)|` and `p` must be
/// absent; when `Dg(y0) = 0` a direction `p` with `|p| <= 1` must be
/// supplied (zero-gradient points emit a whole fan of characteristics).
pub fn characteristic_point(
    field: &dyn ScalarField,
    y0: &[f64],
    t: f64,
    p: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    match characteristic_direction(field, y0, tol) {
        Ok(dir) => {
            if p.is_some() {
                return Err(EikonalError::InvalidDirection {
                    reason: "direction override supplied where Dg(y0) != 0".into(),
                });
            }
            Ok(geometry::add_scaled(y0, t, &dir))
        }
        Err(EikonalError::DegenerateGradient { .. }) => {
            let p = p.ok_or(EikonalError::DegenerateGradient {
                norm: 0.0,
                threshold: 0.0,
            })?;
            let pn = geometry::norm(p);
            if pn > 1.0 + 1e-12 {
                return Err(EikonalError::InvalidDirection {
                    reason: format!("|P| = {pn} exceeds 1"),
                });
            }
            Ok(geometry::add_scaled(y0, t, p))
        }
        Err(e) => Err(e),
    }
}

/// First time at which `z` enters the ball `B_t(y0 + t * direction)`;
/// `+inf` when it never does. `direction` must be a unit vector.
pub fn touching_time(y0: &[f64], direction: &[f64], z: &[f64]) -> f64 {
    let d = geometry::sub(z, y0);
    let dn = geometry::dot(&d, direction);
    if dn <= 0.0 {
        f64::INFINITY
    } else {
        geometry::dot(&d, &d) / (2.0 * dn)
    }
}

fn tau_gradient(y0: &[f64], direction: &[f64], z: &[f64]) -> Option<(f64, Vec<f64>)> {
    let d = geometry::sub(z, y0);
    let dn = geometry::dot(&d, direction);
    if dn <= 0.0 {
        return None;
    }
    let d2 = geometry::dot(&d, &d);
    let tau = d2 / (2.0 * dn);
    let grad: Vec<f64> = d
        .iter()
        .zip(direction)
        .map(|(di, ni)| di / dn - d2 / (2.0 * dn * dn) * ni)
        .collect();
    Some((tau, grad))
}

/// Effort knobs for the touching-time search.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationBudget {
    /// Quasi-random samples over the search region.
    pub global_samples: usize,
    /// Radii of the level-projected rings around `y0`.
    pub ring_radii: Vec<f64>,
    /// Directions per ring.
    pub ring_directions: usize,
    /// How many best candidates of each class get a tangent-walk refinement.
    pub refine_walks: usize,
    /// Iterations per tangent walk.
    pub refine_iters: usize,
    /// Budget for the local-minima sweep of `g` over the region.
    pub region_search: SearchBudget,
    /// Seed mixed into the quasi-random offsets.
    pub seed: u64,
}

impl Default for TerminationBudget {
    fn default() -> Self {
        Self::standard()
    }
}

impl TerminationBudget {
    pub fn standard() -> Self {
        Self {
            global_samples: 1200,
            ring_radii: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            ring_directions: 64,
            refine_walks: 8,
            refine_iters: 60,
            region_search: SearchBudget::standard(),
            seed: 0,
        }
    }

    pub fn scan() -> Self {
        Self {
            global_samples: 320,
            ring_radii: vec![0.05, 0.01, 0.002],
            ring_directions: 24,
            refine_walks: 4,
            refine_iters: 30,
            region_search: SearchBudget::scan(),
            seed: 0,
        }
    }
}

/// Newton-projects `z` onto the level surface `{g = level}` along the local
/// gradient direction. `None` if the iteration stalls or leaves the bounds.
///
/// The acceptance is near machine precision on purpose: close to `y0` the
/// touching time is extremely sensitive to the residual normal displacement
/// (a residual `eps` outside the level inflates into a `tau` deficit of
/// order `eps / (curvature * s^2)` at tangential distance `s`), so a loose
/// projection would corrupt the infimum.
fn project_to_level(field: &dyn ScalarField, z: &[f64], level: f64) -> Option<Vec<f64>> {
    let tol = 1e-13 * (1.0 + level.abs());
    let mut z = z.to_vec();
    for _ in 0..12 {
        let g = field.value(&z);
        if (g - level).abs() <= tol {
            return field.bounds().contains(&z).then_some(z);
        }
        let dg = field.gradient(&z);
        let dg2 = geometry::dot(&dg, &dg);
        if dg2 <= 1e-30 {
            return None;
        }
        z = geometry::add_scaled(&z, (level - g) / dg2, &dg);
        if !field.bounds().contains(&z) {
            return None;
        }
    }
    None
}

/// Descends `tau` along the level surface `{g = level}` by walking in the
/// tangential direction of the constraint; `tau` has no interior critical
/// points, so the constrained minimum always sits on the level surface.
fn walk_level(
    field: &dyn ScalarField,
    y0: &[f64],
    direction: &[f64],
    level: f64,
    start: &[f64],
    min_dist: f64,
    iters: usize,
) -> Option<(f64, Vec<f64>)> {
    let mut z = project_to_level(field, start, level)?;
    let (mut tau, _) = tau_gradient(y0, direction, &z)?;
    let mut step = 0.1 * geometry::dist(&z, y0).max(1e-3);
    for _ in 0..iters {
        let (_, gt) = tau_gradient(y0, direction, &z)?;
        let dg = field.gradient(&z);
        let dgn = geometry::norm(&dg);
        if dgn <= 1e-14 {
            break;
        }
        let nu = geometry::scale(&dg, 1.0 / dgn);
        let tangent = geometry::add_scaled(&gt, -geometry::dot(&gt, &nu), &nu);
        let tn = geometry::norm(&tangent);
        if tn <= 1e-12 * (1.0 + geometry::norm(&gt)) {
            break;
        }
        let dir_step = geometry::scale(&tangent, -1.0 / tn);
        let mut accepted = false;
        let mut s = step;
        for _ in 0..15 {
            let cand = geometry::add_scaled(&z, s, &dir_step);
            if let Some(cand) = project_to_level(field, &cand, level) {
                if geometry::dist(&cand, y0) >= min_dist {
                    if let Some((tc, _)) = tau_gradient(y0, direction, &cand) {
                        if tc < tau {
                            z = cand;
                            tau = tc;
                            step = (s * 1.5).min(1.0);
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            s *= 0.4;
            if s < 1e-12 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    Some((tau, z))
}

/// Bounded min-heap substitute: keeps the `cap` smallest candidates.
struct TopCandidates {
    cap: usize,
    items: Vec<(f64, Vec<f64>)>,
}

impl TopCandidates {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            items: Vec::new(),
        }
    }

    fn push(&mut self, tau: f64, z: &[f64]) {
        if !tau.is_finite() {
            return;
        }
        self.items.push((tau, z.to_vec()));
        self.items.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.items.truncate(self.cap);
    }

    fn best(&self) -> f64 {
        self.items.first().map(|(t, _)| *t).unwrap_or(f64::INFINITY)
    }
}

/// Termination times by the touching-time reduction.
///
/// `t_s` is the infimum of `tau` over sampled `z` with `g(z) < g(y0)` (up to
/// the membership band); `t_bar` the infimum over `z != y0` with
/// `g(z) <= g(y0)`, excluding a small ball around `y0`. Both are capped at
/// `t_max`. Points farther than `2 t_max` from `y0` cannot touch before
/// `t_max` (since `tau >= |z - y0| / 2`), which bounds the search region.
pub fn termination_times(
    field: &dyn ScalarField,
    y0: &[f64],
    t_max: f64,
    tol: &Tolerances,
    budget: &TerminationBudget,
) -> Result<TerminationRecord> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(EikonalError::InvalidArgument(format!(
            "t_max must be positive and finite, got {t_max}"
        )));
    }
    let direction = characteristic_direction(field, y0, tol)?;
    let dim = field.dim();
    let g0 = field.value(y0);
    let band = tol.member_value(g0);
    let delta_excl = tol.merge_radius_base * t_max.max(1.0);
    let radius = 2.0 * t_max;
    let bounds = field.bounds();
    let truncated = !bounds.contains_ball(y0, radius);

    let mut strict = TopCandidates::new(budget.refine_walks.max(1));
    let mut loose = TopCandidates::new(budget.refine_walks.max(1));

    let consider = |z: &[f64], strict: &mut TopCandidates, loose: &mut TopCandidates| {
        let tau = touching_time(y0, &direction, z);
        if !tau.is_finite() || tau <= 0.0 {
            return;
        }
        let gz = field.value(z);
        if gz < g0 - band {
            strict.push(tau, z);
        }
        if gz <= g0 + band && geometry::dist(z, y0) > delta_excl {
            loose.push(tau, z);
        }
    };

    // (1) quasi-random global samples over the clipped region box
    let lo: Vec<f64> = (0..dim).map(|a| (y0[a] - radius).max(bounds.lo[a])).collect();
    let hi: Vec<f64> = (0..dim).map(|a| (y0[a] + radius).min(bounds.hi[a])).collect();
    let offset = SplitMix64::from_point(budget.seed ^ TERMINATION_SALT, y0).next_u64() % (1 << 20);
    for i in 0..budget.global_samples as u64 {
        let h = halton(offset + i, dim);
        let z: Vec<f64> = (0..dim).map(|a| lo[a] + (hi[a] - lo[a]) * h[a]).collect();
        consider(&z, &mut strict, &mut loose);
    }

    // (2) polished local minima of g over the region (tangential contacts)
    let region = minimize_over_ball(field, y0, radius, &budget.region_search, &[]);
    for m in &region.minima {
        consider(&m.point, &mut strict, &mut loose);
    }

    // (3) ring samples projected onto the level surfaces near y0
    for &r in &budget.ring_radii {
        for w in sphere_points(dim, budget.ring_directions) {
            let z0 = geometry::add_scaled(y0, r, &w);
            if let Some(z) = project_to_level(field, &z0, g0) {
                consider(&z, &mut strict, &mut loose);
            }
            if let Some(z) = project_to_level(field, &z0, g0 - 2.0 * band) {
                consider(&z, &mut strict, &mut loose);
            }
        }
    }

    // (4) tangent-walk refinement of the best candidates of each class
    let strict_seeds = strict.items.clone();
    for (_, z) in &strict_seeds {
        if let Some((_, zr)) = walk_level(
            field,
            y0,
            &direction,
            g0 - 2.0 * band,
            z,
            0.0,
            budget.refine_iters,
        ) {
            consider(&zr, &mut strict, &mut loose);
        }
    }
    let loose_seeds = loose.items.clone();
    for (_, z) in &loose_seeds {
        if let Some((_, zr)) = walk_level(
            field,
            y0,
            &direction,
            g0,
            z,
            delta_excl,
            budget.refine_iters,
        ) {
            consider(&zr, &mut strict, &mut loose);
        }
    }

    let t_s = strict.best();
    let t_bar = loose.best().min(t_s);
    Ok(TerminationRecord::finish(
        y0.to_vec(),
        direction,
        t_bar,
        t_s,
        t_max,
        truncated,
    ))
}

/// Largest `t` for which the ball `B_t(y0 + t d)` stays inside `bounds`.
fn max_time_inside(bounds: &crate::geometry::BoundsBox, y0: &[f64], d: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for a in 0..y0.len() {
        let up = d[a] + 1.0;
        if up > 0.0 {
            t = t.min((bounds.hi[a] - y0[a]) / up);
        }
        let dn = 1.0 - d[a];
        if dn > 0.0 {
            t = t.min((y0[a] - bounds.lo[a]) / dn);
        }
    }
    t.max(0.0)
}

/// Termination times by monotone bisection on the defining predicates,
/// evaluated through minimizer sets. Independent of [`termination_times`];
/// the two must agree within `tol.time(t)` wherever both are finite.
pub fn termination_times_bisect(
    field: &dyn ScalarField,
    y0: &[f64],
    t_max: f64,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<TerminationRecord> {
    let direction = characteristic_direction(field, y0, tol)?;
    bisect_along(field, y0, direction, t_max, tol, budget)
}

/// Bisection termination times for a characteristic from a zero-gradient
/// point with an explicit direction `p`, `|p| <= 1`. (The touching-time
/// reduction needs a nonzero gradient and does not apply here.)
pub fn termination_times_bisect_with_direction(
    field: &dyn ScalarField,
    y0: &[f64],
    p: &[f64],
    t_max: f64,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<TerminationRecord> {
    let dg = field.gradient(y0);
    let dgn = geometry::norm(&dg);
    let threshold = tol.grad_zero(field.value(y0).abs() + dgn);
    if dgn > threshold {
        return Err(EikonalError::InvalidDirection {
            reason: "explicit direction only valid where Dg(y0) = 0".into(),
        });
    }
    if geometry::norm(p) > 1.0 + 1e-12 {
        return Err(EikonalError::InvalidDirection {
            reason: format!("|P| = {} exceeds 1", geometry::norm(p)),
        });
    }
    bisect_along(field, y0, p.to_vec(), t_max, tol, budget)
}

fn bisect_along(
    field: &dyn ScalarField,
    y0: &[f64],
    direction: Vec<f64>,
    t_max: f64,
    tol: &Tolerances,
    budget: &SearchBudget,
) -> Result<TerminationRecord> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(EikonalError::InvalidArgument(format!(
            "t_max must be positive and finite, got {t_max}"
        )));
    }
    let g0 = field.value(y0);
    let t_box = max_time_inside(field.bounds(), y0, &direction);
    let t_eff = t_max.min(t_box * (1.0 - 1e-12));
    let truncated = t_eff < t_max;
    if t_eff <= 0.0 {
        return Err(EikonalError::OutOfBounds {
            center: y0.to_vec(),
            radius: 0.0,
        });
    }

    // Probe state: reuse the previous probe's minimizers as search hints.
    let mut hints: Vec<Vec<f64>> = vec![y0.to_vec()];
    let probe = |t: f64, hints: &mut Vec<Vec<f64>>| -> Result<(bool, bool)> {
        let x = geometry::add_scaled(y0, t, &direction);
        let mut seeded = hints.clone();
        seeded.push(geometry::add_scaled(y0, 2.0 * t, &direction));
        let p = SpaceTimePoint::new(x, t)?;
        let set = minimizer_set_seeded(field, &p, tol, budget, &seeded)?;
        *hints = std::iter::once(y0.to_vec())
            .chain(set.points.iter().cloned())
            .collect();
        let is_min = g0 <= set.value + tol.member_value(set.value);
        let near = tol.merge_radius(t).max(1e-6 * (1.0 + geometry::norm(y0)));
        let unique =
            is_min && set.points.len() == 1 && geometry::dist(&set.points[0], y0) <= near;
        Ok((is_min, unique))
    };

    let bisect = |mut lo: f64,
                  mut hi: f64,
                  which_unique: bool,
                  hints: &mut Vec<Vec<f64>>|
     -> Result<f64> {
        // invariant: predicate true at lo, false at hi
        while hi - lo > 0.25 * tol.time(hi) {
            let mid = 0.5 * (lo + hi);
            let (is_min, unique) = probe(mid, hints)?;
            let ok = if which_unique { unique } else { is_min };
            if ok {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let (min_at_end, unique_at_end) = probe(t_eff, &mut hints)?;
    let t_s = if min_at_end {
        f64::INFINITY
    } else {
        bisect(0.0, t_eff, false, &mut hints)?
    };
    let t_bar_hi = if t_s.is_finite() { t_s * (1.0 + 1e-9) } else { t_eff };
    let t_bar = if min_at_end && unique_at_end {
        f64::INFINITY
    } else {
        // uniqueness holds at t = 0 and fails at t_bar_hi (at t_s membership
        // itself fails; in the capped case uniqueness failed at t_eff)
        bisect(0.0, t_bar_hi.min(t_eff), true, &mut hints)?
    };
    // capping against t_max (not t_eff) keeps the record's encoding uniform
    Ok(TerminationRecord::finish(
        y0.to_vec(),
        direction,
        t_bar,
        t_s,
        t_max,
        truncated,
    ))
}

/// Membership in `M`: does the characteristic from `y0` terminate at all
/// (finite first termination time)? Equivalently, is there `z` in the half
/// space `H_{y0}` with `g(z) <= g(y0)`? Returns `false` for zero-gradient
/// points.
pub fn in_m(
    field: &dyn ScalarField,
    y0: &[f64],
    t_max: f64,
    tol: &Tolerances,
    budget: &TerminationBudget,
) -> bool {
    match termination_times(field, y0, t_max, tol, budget) {
        Ok(rec) => !rec.t_bar_capped,
        Err(_) => false,
    }
}

/// Membership in `E`: finite second termination time (there is `z` in
/// `H_{y0}` with `g(z) < g(y0)`). Returns `false` for zero-gradient points.
pub fn in_e(
    field: &dyn ScalarField,
    y0: &[f64],
    t_max: f64,
    tol: &Tolerances,
    budget: &TerminationBudget,
) -> bool {
    match termination_times(field, y0, t_max, tol, budget) {
        Ok(rec) => !rec.t_s_capped,
        Err(_) => false,
    }
}
