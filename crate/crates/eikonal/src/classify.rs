//! Stratification of space-time points: smooth points, nondifferentiable
//! points (Sigma), termination points with a unique minimizer (T1), and the
//! zero-gradient contact region (P0).
//!
//! The verdicts come from the minimizer-set structure:
//!
//! * Sigma: at least two distinct gradient values over the minimizers, one
//!   of them nonzero.
//! * T1: a unique minimizer `y0` with nonzero gradient whose characteristic
//!   terminates exactly here (`t = t_bar = t_s`), confirmed on C2 fields by
//!   `det X_y` vanishing at scale.
//! * P0: every minimizer has zero gradient and at least one sits on the
//!   sphere `|x - y| = t`.
//! * Smooth: a unique gradient value, either a single pre-termination
//!   minimizer with nonzero gradient, or only interior zero-gradient
//!   minimizers (where the solution is locally constant).
//!
//! Precedence when tolerances overlap: Sigma > T1 > P0 > Smooth; a verdict
//! that would hinge on sub-tolerance gradient differences is reported as
//! Ambiguous, never resolved silently.
//!
//! Grid scans classify against *cell-scaled* tolerances ([`CellScale`]): a
//! node is labeled Sigma/T1/P0 when the corresponding exact structure passes
//! within roughly one grid cell of it. With the exact (default) tolerances
//! the strata are sets of measure zero and a finite sample would almost
//! never land on them.

use crate::characteristics::{termination_times, TerminationBudget};
use crate::conjugate::direction_jacobian;
use crate::error::{EikonalError, Result};
use crate::field::{ScalarField, Smoothness};
use crate::geometry;
use crate::hopflax::{build_minimizer_set, SpaceTimeGradient, SpaceTimePoint};
use crate::optim::{minimize_over_ball, SearchBudget};
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};

/// Stratum of a space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumLabel {
    Smooth,
    Sigma,
    T1,
    P0,
    Ambiguous,
}

impl StratumLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StratumLabel::Smooth => "smooth",
            StratumLabel::Sigma => "sigma",
            StratumLabel::T1 => "t1",
            StratumLabel::P0 => "p0",
            StratumLabel::Ambiguous => "ambiguous",
        }
    }
}

/// Diagnostic payload attached to every classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `u(x, t)`.
    pub u: f64,
    /// Number of merged minimizer representatives.
    pub minimizer_count: usize,
    /// Number of distinct gradient values among them.
    pub gradient_value_count: usize,
    /// Some minimizer touches the sphere `|x - y| = t`.
    pub boundary_contact: bool,
    /// Some minimizer has (numerically) zero gradient. Recorded because the
    /// clustering behaviour of such nondifferentiable points is an open
    /// structural question; nothing is asserted from it.
    pub zero_gradient_minimizer: bool,
    /// `det X_y(y0, t)` when a unique minimizer on a C2 field was examined.
    pub det_xy: Option<f64>,
    /// `(t_bar, t_s)` estimates when a termination check ran.
    pub termination_window: Option<(f64, f64)>,
    /// Whether that termination check hit its search cap.
    pub termination_capped: Option<bool>,
    /// Filled by [`classify_termination`] for records with `t_bar < t_s`:
    /// whether every sampled point of the segment between the termination
    /// points classified Sigma.
    pub segment_all_sigma: Option<bool>,
}

/// Classification of one space-time point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointClass {
    pub label: StratumLabel,
    /// `Du = (grad u, u_t)`, present for Smooth and T1 points.
    pub gradient: Option<SpaceTimeGradient>,
    pub diagnostics: Diagnostics,
}

/// Physical cell sizes of a grid scan; classification tolerances widen to
/// these scales so that measure-zero strata become one cell thick.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellScale {
    /// Largest spatial node spacing.
    pub space: f64,
    /// Node spacing in `t`.
    pub time: f64,
}

impl CellScale {
    fn reach(&self) -> f64 {
        0.75 * (self.space + self.time)
    }
}

/// Knobs for classification.
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub tol: Tolerances,
    pub ball_budget: SearchBudget,
    pub termination_budget: TerminationBudget,
    /// `None` for exact point queries; `Some` inside grid scans.
    pub cell: Option<CellScale>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            ball_budget: SearchBudget::standard(),
            termination_budget: TerminationBudget::standard(),
            cell: None,
        }
    }
}

impl ClassifyOptions {
    pub fn scan(tol: Tolerances, cell: CellScale) -> Self {
        Self {
            tol,
            ball_budget: SearchBudget::scan(),
            termination_budget: TerminationBudget::scan(),
            cell: Some(cell),
        }
    }
}

/// Greedy clustering of gradient values; returns group count.
fn group_count(values: &[Vec<f64>], merge: f64) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for v in values {
        if reps.iter().all(|r| geometry::dist(r, v) > merge) {
            reps.push(v);
        }
    }
    reps.len()
}

/// Classifies the space-time point `p`.
pub fn classify_point(
    field: &dyn ScalarField,
    p: &SpaceTimePoint,
    opts: &ClassifyOptions,
) -> Result<PointClass> {
    let tol = &opts.tol;
    if p.x.len() != field.dim() {
        return Err(EikonalError::InvalidArgument(format!(
            "point dimension {} != field dimension {}",
            p.x.len(),
            field.dim()
        )));
    }
    // t = 0 convention: the solution starts smooth with Du = (Dg, -|Dg|).
    if p.t <= f64::EPSILON {
        let dg = field.gradient(&p.x);
        return Ok(PointClass {
            label: StratumLabel::Smooth,
            gradient: Some(SpaceTimeGradient::from_initial_gradient(&dg)),
            diagnostics: Diagnostics {
                u: field.value(&p.x),
                minimizer_count: 1,
                gradient_value_count: 1,
                boundary_contact: true,
                zero_gradient_minimizer: false,
                det_xy: None,
                termination_window: None,
                termination_capped: None,
                segment_all_sigma: None,
            },
        });
    }
    if !field.bounds().contains_ball(&p.x, p.t) {
        return Err(EikonalError::OutOfBounds {
            center: p.x.clone(),
            radius: p.t,
        });
    }

    let search = minimize_over_ball(field, &p.x, p.t, &opts.ball_budget, &[]);
    let set = build_minimizer_set(field, p, tol, &search);
    let u = set.value;

    // Cell mode: admit co-minimizer candidates whose value gap closes within
    // one cell of query motion (the gap moves at most at rate |Dg| per unit
    // of x or t). Only genuinely stationary endpoints count: a descent that
    // stalled on a slope is not a second minimizer.
    let mut minimizers = set.clone();
    if let Some(cell) = opts.cell {
        let merge = tol.merge_radius(p.t);
        let eps_grad = tol.grad_zero(u.abs());
        for m in search.minima.iter() {
            if m.value <= u {
                continue;
            }
            let dg = field.gradient(&m.point);
            if m.residual > 1e-4 * (1.0 + geometry::norm(&dg)) {
                continue;
            }
            let halo = cell.reach() * (geometry::norm(&dg) + set.grad_scale()).max(1e-3);
            if m.value - u <= halo
                && minimizers
                    .points
                    .iter()
                    .all(|q| geometry::dist(q, &m.point) > merge)
            {
                minimizers.points.push(m.point.clone());
                minimizers.grad_values.push(if geometry::norm(&dg) <= eps_grad {
                    vec![0.0; dg.len()]
                } else {
                    dg
                });
            }
        }
    }

    let grad_merge = tol.grad_merge(minimizers.grad_scale());
    let n1 = group_count(&minimizers.grad_values, grad_merge);
    let n2 = group_count(&minimizers.grad_values, 2.0 * grad_merge);

    // The Sigma / all-gradients-zero dichotomy is decided with the analytic
    // zero threshold (gradients were snapped to exactly zero at that scale
    // when the set was built): distinct nonzero gradient values must win
    // even when they are small on the cell scale. The cell-widened
    // threshold below only broadens the *near-P0* test for single-valued
    // sets, so that nodes one cell away from a zero-gradient characteristic
    // still see it.
    let eps_grad_cell = match opts.cell {
        Some(cell) => {
            let curv = field
                .hessian(&minimizers.points[0])
                .map(|h| crate::conjugate::spectral_norm(&h))
                .unwrap_or(1.0)
                .max(0.25);
            tol.grad_zero(u.abs()).max(cell.reach() * curv)
        }
        None => tol.grad_zero(u.abs()),
    };
    let contact_tol = match opts.cell {
        Some(cell) => tol.boundary_contact(p.t).max(cell.reach()),
        None => tol.boundary_contact(p.t),
    };

    let grad_norms: Vec<f64> = minimizers.grad_values.iter().map(|g| geometry::norm(g)).collect();
    let all_zero = grad_norms.iter().all(|&n| n == 0.0);
    let any_zero = grad_norms.iter().any(|&n| n == 0.0);
    let boundary_contact = minimizers
        .points
        .iter()
        .any(|y| p.t - geometry::dist(y, &p.x) <= contact_tol);

    let mut diagnostics = Diagnostics {
        u,
        minimizer_count: minimizers.points.len(),
        gradient_value_count: n1,
        boundary_contact,
        zero_gradient_minimizer: any_zero,
        det_xy: None,
        termination_window: None,
        termination_capped: None,
        segment_all_sigma: None,
    };

    // Ambiguity: the grouping of gradient values flips between the merge
    // tolerance and twice the merge tolerance.
    if n1 != n2 {
        return Ok(PointClass {
            label: StratumLabel::Ambiguous,
            gradient: None,
            diagnostics,
        });
    }

    // Sigma: multiple distinct gradient values, at least one nonzero.
    if n1 >= 2 && !all_zero {
        return Ok(PointClass {
            label: StratumLabel::Sigma,
            gradient: None,
            diagnostics,
        });
    }

    // All minimizers carry zero gradient: contact region or locally constant.
    if all_zero {
        let label = if boundary_contact {
            StratumLabel::P0
        } else {
            StratumLabel::Smooth
        };
        let zero = vec![0.0; field.dim()];
        return Ok(PointClass {
            label,
            gradient: Some(SpaceTimeGradient::from_initial_gradient(&zero)),
            diagnostics,
        });
    }

    // Unique gradient value, nonzero.
    let y0 = minimizers.points[0].clone();
    let du = SpaceTimeGradient::from_initial_gradient(&minimizers.grad_values[0]);

    // Near-P0 (cell mode): a single sphere-touching minimizer whose gradient
    // is zero at the cell scale marks a node within a cell of a
    // zero-gradient characteristic.
    if geometry::norm(&minimizers.grad_values[0]) <= eps_grad_cell {
        let label = if boundary_contact {
            StratumLabel::P0
        } else {
            StratumLabel::Smooth
        };
        return Ok(PointClass {
            label,
            gradient: Some(du),
            diagnostics,
        });
    }

    let time_tol = match opts.cell {
        Some(cell) => tol.time(p.t).max(cell.reach()),
        None => tol.time(p.t),
    };

    // C2 prefilter: T1 requires det X_y(y0, t) = 0 at scale; nodes with a
    // clearly nonzero determinant skip the termination search.
    let mut det_gate = true;
    if field.smoothness() == Smoothness::C2Plus {
        if let Ok(spec) = direction_jacobian(field, &y0, tol) {
            let det = spec.xy(p.t).determinant();
            diagnostics.det_xy = Some(det);
            let slack = match opts.cell {
                // |d det/dt| <= n ||A|| (1 + ||A|| t)^(n-1) near the zero
                Some(cell) => {
                    let a = spec.a_norm();
                    let n = field.dim() as f64;
                    tol.det(a * p.t)
                        + 1.5 * cell.reach() * n * a * (1.0 + a * p.t).powi(field.dim() as i32 - 1)
                }
                None => tol.det(spec.a_norm() * p.t),
            };
            det_gate = det.abs() <= slack;
        }
    }

    if det_gate {
        let t_max = p.t + (0.25 * (1.0 + p.t)).max(4.0 * time_tol);
        if let Ok(rec) = termination_times(field, &y0, t_max, tol, &opts.termination_budget) {
            diagnostics.termination_window = Some((rec.t_bar, rec.t_s));
            diagnostics.termination_capped = Some(rec.t_s_capped);
            let coincide = (rec.t_s - rec.t_bar).abs() <= 2.0 * time_tol;
            let here = !rec.t_s_capped && (p.t - rec.t_s).abs() <= time_tol;
            if coincide && here {
                // termination reached: T1 when the limit minimizer is
                // unique, Sigma when the termination point itself carries
                // minimizers beyond the coalescence scale of y0
                match termination_minimizers(field, &rec, opts)? {
                    TerminationMinimizers::Unique => {
                        return Ok(PointClass {
                            label: StratumLabel::T1,
                            gradient: Some(du),
                            diagnostics,
                        });
                    }
                    TerminationMinimizers::Multiple { count, grad_count } => {
                        diagnostics.minimizer_count = count;
                        diagnostics.gradient_value_count = grad_count;
                        return Ok(PointClass {
                            label: StratumLabel::Sigma,
                            gradient: None,
                            diagnostics,
                        });
                    }
                }
            }
        }
    }

    Ok(PointClass {
        label: StratumLabel::Smooth,
        gradient: Some(du),
        diagnostics,
    })
}

enum TerminationMinimizers {
    Unique,
    Multiple { count: usize, grad_count: usize },
}

/// Resolves the minimizer structure at the second termination point of a
/// record, tolerating the estimate slack of `t_s`.
///
/// Two slack effects are compensated. An estimate high by `eps` splits a
/// focal pair to separation `~ sqrt(t eps)` around `y0`; representatives
/// inside the coalescence radius count as the single limit minimizer. And
/// the same slack mislocates the query transversally, hiding co-minimizers
/// behind a value gap of order `|Dg| eps`; stationary local minima inside
/// that halo are admitted before deciding.
fn termination_minimizers(
    field: &dyn ScalarField,
    rec: &crate::characteristics::TerminationRecord,
    opts: &ClassifyOptions,
) -> Result<TerminationMinimizers> {
    let at = SpaceTimePoint::new(
        geometry::add_scaled(&rec.y0, rec.t_s, &rec.direction),
        rec.t_s,
    )?;
    if !field.bounds().contains_ball(&at.x, at.t) {
        return Err(EikonalError::OutOfBounds {
            center: at.x.clone(),
            radius: at.t,
        });
    }
    let search = crate::optim::minimize_over_ball(
        field,
        &at.x,
        at.t,
        &opts.ball_budget,
        &[rec.y0.clone()],
    );
    let mut set = build_minimizer_set(field, &at, &opts.tol, &search);
    let u = set.value;
    let slack = 2.0 * opts.tol.time(rec.t_s);
    let merge = opts.tol.merge_radius(at.t);
    for m in search.minima.iter() {
        if m.value <= u {
            continue;
        }
        let dg = field.gradient(&m.point);
        if m.residual > 1e-4 * (1.0 + geometry::norm(&dg)) {
            continue;
        }
        let halo = slack * (geometry::norm(&dg) + set.grad_scale()).max(1e-3);
        if m.value - u <= halo
            && set.points.iter().all(|q| geometry::dist(q, &m.point) > merge)
        {
            set.points.push(m.point.clone());
            set.grad_values.push(dg);
        }
    }
    // floor: the analytic estimate slack; relative term: distinct
    // characteristic directions separate minimizers proportionally to t
    let coalesce = (2.0 * (rec.t_s.max(1e-6) * 4.0 * opts.tol.time(rec.t_s)).sqrt())
        .max(0.25 * rec.t_s);
    if set
        .points
        .iter()
        .all(|y| geometry::dist(y, &rec.y0) <= coalesce)
    {
        Ok(TerminationMinimizers::Unique)
    } else {
        let merge = opts.tol.grad_merge(set.grad_scale());
        Ok(TerminationMinimizers::Multiple {
            count: set.points.len(),
            grad_count: set.distinct_gradients(merge).len(),
        })
    }
}

/// Classifies the second termination point of a record; for records with
/// `t_bar < t_s` it additionally samples the characteristic segment between
/// the two termination points and reports whether every sample classified
/// Sigma (`diagnostics.segment_all_sigma`).
///
/// Requires a finite first termination time. A capped `t_s` (the contact
/// branch ending in a forever-nonunique minimizer) is classified at the cap.
pub fn classify_termination(
    field: &dyn ScalarField,
    rec: &crate::characteristics::TerminationRecord,
    opts: &ClassifyOptions,
) -> Result<PointClass> {
    if rec.t_bar_capped {
        return Err(EikonalError::InvalidArgument(
            "termination record has no finite first termination time".into(),
        ));
    }
    let at = SpaceTimePoint::new(
        geometry::add_scaled(&rec.y0, rec.t_s, &rec.direction),
        rec.t_s,
    )?;
    let mut class = classify_point(field, &at, opts)?;

    // The t_s estimate carries slack both along the characteristic (it can
    // split the coalescing pair of a focal point) and transversally (it can
    // hide the co-minimizers of a genuinely multi-valued termination), so
    // the label at a coincident termination is settled by the
    // slack-compensated minimizer structure.
    if !rec.t_bar_capped && !rec.t_s_capped {
        let time_tol = opts.tol.time(rec.t_s);
        if (rec.t_s - rec.t_bar).abs() <= 2.0 * time_tol
            && matches!(class.label, StratumLabel::Sigma | StratumLabel::Smooth)
        {
            match termination_minimizers(field, rec, opts)? {
                TerminationMinimizers::Unique => {
                    let dg = field.gradient(&rec.y0);
                    class.label = StratumLabel::T1;
                    class.gradient = Some(SpaceTimeGradient::from_initial_gradient(&dg));
                    if field.smoothness() == Smoothness::C2Plus {
                        if let Ok(spec) = direction_jacobian(field, &rec.y0, &opts.tol) {
                            class.diagnostics.det_xy = Some(spec.xy(rec.t_s).determinant());
                        }
                    }
                }
                TerminationMinimizers::Multiple { count, grad_count } => {
                    class.label = StratumLabel::Sigma;
                    class.gradient = None;
                    class.diagnostics.minimizer_count = count;
                    class.diagnostics.gradient_value_count = grad_count;
                }
            }
            class.diagnostics.termination_window = Some((rec.t_bar, rec.t_s));
            class.diagnostics.termination_capped = Some(false);
        }
    }

    let gap = rec.t_s - rec.t_bar;
    if gap > opts.tol.time(rec.t_s) {
        let samples = 9;
        let mut all_sigma = true;
        for k in 0..samples {
            let t = rec.t_bar + gap * (k as f64 + 0.5) / samples as f64;
            let p = SpaceTimePoint::new(geometry::add_scaled(&rec.y0, t, &rec.direction), t)?;
            let c = classify_point(field, &p, opts)?;
            if c.label != StratumLabel::Sigma {
                all_sigma = false;
            }
        }
        class.diagnostics.segment_all_sigma = Some(all_sigma);
    }
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::catalog::{lookup, Params};
    use crate::field::FieldRef;

    fn f(name: &str, dim: usize) -> FieldRef {
        lookup(name, dim, &Params::new()).unwrap()
    }

    fn pt(x: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x.to_vec(), t).unwrap()
    }

    fn opts() -> ClassifyOptions {
        ClassifyOptions::default()
    }

    #[test]
    fn continuum_with_nonzero_gradients_is_sigma() {
        let c = classify_point(f("concave_bowl", 2).as_ref(), &pt(&[0.0, 0.0], 1.5), &opts())
            .unwrap();
        assert_eq!(c.label, StratumLabel::Sigma);
        assert!(c.diagnostics.minimizer_count >= 2);
        assert!(c.gradient.is_none());
    }

    #[test]
    fn parabola_cone_boundary_is_p0() {
        let c = classify_point(f("quadratic_bowl", 1).as_ref(), &pt(&[1.0], 1.0), &opts())
            .unwrap();
        assert_eq!(c.label, StratumLabel::P0);
        assert!(c.diagnostics.boundary_contact);
    }

    #[test]
    fn parabola_cone_interior_is_smooth_with_zero_gradient() {
        let c = classify_point(f("quadratic_bowl", 1).as_ref(), &pt(&[0.5], 1.0), &opts())
            .unwrap();
        assert_eq!(c.label, StratumLabel::Smooth);
        let du = c.gradient.unwrap();
        assert_eq!(du.spatial, vec![0.0]);
        assert_eq!(du.time, 0.0);
    }

    #[test]
    fn saddle_focal_point_is_t1() {
        let c = classify_point(f("saddle", 2).as_ref(), &pt(&[2.0, 0.0], 1.0), &opts()).unwrap();
        assert_eq!(c.label, StratumLabel::T1, "diag: {:?}", c.diagnostics);
        let det = c.diagnostics.det_xy.unwrap();
        assert!(det.abs() < 1e-6, "det = {det}");
        let du = c.gradient.unwrap();
        assert!((du.spatial[0] - 2.0).abs() < 1e-6);
        assert!((du.time + 2.0).abs() < 1e-6);
    }

    #[test]
    fn pre_termination_characteristic_points_are_smooth() {
        let c = classify_point(f("saddle", 2).as_ref(), &pt(&[1.5, 0.0], 0.5), &opts()).unwrap();
        assert_eq!(c.label, StratumLabel::Smooth);
        let du = c.gradient.unwrap();
        assert!((du.spatial[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_time_is_smooth_by_convention() {
        let c = classify_point(f("saddle", 2).as_ref(), &pt(&[1.0, 1.0], 0.0), &opts()).unwrap();
        assert_eq!(c.label, StratumLabel::Smooth);
        let du = c.gradient.unwrap();
        assert_eq!(du.spatial, vec![2.0, -2.0]);
    }

    #[test]
    fn termination_classification_matches_structure() {
        let tol = Tolerances::default();
        let saddle = f("saddle", 2);
        let rec = crate::characteristics::termination_times(
            saddle.as_ref(),
            &[1.0, 0.0],
            10.0,
            &tol,
            &TerminationBudget::standard(),
        )
        .unwrap();
        let c = classify_termination(saddle.as_ref(), &rec, &opts()).unwrap();
        assert_eq!(c.label, StratumLabel::T1);

        let bowl = f("concave_bowl", 2);
        let rec = crate::characteristics::termination_times(
            bowl.as_ref(),
            &[1.0, 0.0],
            10.0,
            &tol,
            &TerminationBudget::standard(),
        )
        .unwrap();
        let c = classify_termination(bowl.as_ref(), &rec, &opts()).unwrap();
        assert_eq!(c.label, StratumLabel::Sigma);
    }

    #[test]
    fn fully_capped_records_are_rejected() {
        let tol = Tolerances::default();
        let lin = f("linear", 1);
        let rec = crate::characteristics::termination_times(
            lin.as_ref(),
            &[0.0],
            5.0,
            &tol,
            &TerminationBudget::standard(),
        )
        .unwrap();
        assert!(rec.t_bar_capped);
        assert!(classify_termination(lin.as_ref(), &rec, &opts()).is_err());
    }
}
