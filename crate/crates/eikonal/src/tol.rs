//! Centralized numerical tolerances.
//!
//! The underlying theory works with exact predicates (exact minimizers, exact
//! gradient equality, `det = 0`). Every thresholded surrogate used by this
//! crate is collected here, with its scaling rule, so that all operations
//! share one consistent notion of "equal", "zero" and "on the boundary".
//!
//! All rules are scale-aware: a base constant multiplied by a local scale
//! factor of the form `1 + |local quantity|`, which keeps behaviour sensible
//! both near zero and for large fields.

use serde::{Deserialize, Serialize};

/// Tolerance configuration. `Tolerances::default()` gives the documented
/// defaults; every constant can be overridden (e.g. from the CLI config).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Base for the gradient-zero threshold: `|Dg| <= grad_zero_base * (1 + scale)`
    /// declares a degenerate gradient. Double-precision conditioning scale.
    pub grad_zero_base: f64,
    /// Base for level-set comparisons of `g` values: `1e-10 * (1 + |g(y0)|)`.
    pub level_value_base: f64,
    /// Base for the half-space dot-product test: `1e-10 * |Dg(y0)|`.
    pub half_space_dot_base: f64,
    /// Base for minimizer-set membership: `g(y) <= u + member_value_base * (1 + |u|)`.
    pub member_value_base: f64,
    /// Minimizer merge radius: `merge_radius_base * t`.
    pub merge_radius_base: f64,
    /// A minimizer set with more than this many merged representatives is
    /// reported as a continuum.
    pub continuum_threshold: usize,
    /// Slack for ball membership `|y - x| <= t + ball_slack_base * (1 + t)`.
    pub ball_slack_base: f64,
    /// Sphere-contact test: a minimizer is "on the boundary" when
    /// `t - |y - x| <= ball_slack_base * (1 + t)`.
    pub boundary_contact_base: f64,
    /// Termination-time comparison: `time_base * max(1, t)`.
    pub time_base: f64,
    /// Determinant-zero test: `det_base * (1 + ||A|| t)`.
    pub det_base: f64,
    /// Merge tolerance for gradient *values* when deciding whether the set
    /// of minimizer gradients is a singleton: `grad_merge_base * (1 + max |Dg|)`.
    pub grad_merge_base: f64,
    /// Real-part threshold for declaring an eigenvalue of `A` real:
    /// `|Im| <= eig_real_base * (1 + |lambda|)`.
    pub eig_real_base: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grad_zero_base: 1e-8,
            level_value_base: 1e-10,
            half_space_dot_base: 1e-10,
            member_value_base: 1e-8,
            merge_radius_base: 1e-4,
            continuum_threshold: 32,
            ball_slack_base: 1e-7,
            boundary_contact_base: 1e-6,
            time_base: 1e-3,
            det_base: 1e-6,
            grad_merge_base: 1e-6,
            eig_real_base: 1e-9,
        }
    }
}

impl Tolerances {
    /// Gradient-zero threshold at a point with local field scale `scale`
    /// (typically `|Dg|` itself is compared against this with `scale = 1`,
    /// or against `1 + |g|` when a value scale is available).
    pub fn grad_zero(&self, scale: f64) -> f64 {
        self.grad_zero_base * (1.0 + scale.abs())
    }

    /// Tolerance band for comparing values of `g` against `g(y0)`.
    pub fn level_value(&self, g0: f64) -> f64 {
        self.level_value_base * (1.0 + g0.abs())
    }

    /// Tolerance for the signed dot product in the half-space predicate.
    pub fn half_space_dot(&self, grad_norm: f64) -> f64 {
        self.half_space_dot_base * grad_norm
    }

    /// Membership band around the minimum value `u`.
    pub fn member_value(&self, u: f64) -> f64 {
        self.member_value_base * (1.0 + u.abs())
    }

    /// Merge radius for minimizer representatives at time `t`.
    pub fn merge_radius(&self, t: f64) -> f64 {
        self.merge_radius_base * t.max(f64::MIN_POSITIVE)
    }

    /// Ball-membership slack at time `t`.
    pub fn ball_slack(&self, t: f64) -> f64 {
        self.ball_slack_base * (1.0 + t)
    }

    /// Sphere-contact tolerance at time `t`.
    pub fn boundary_contact(&self, t: f64) -> f64 {
        self.boundary_contact_base * (1.0 + t)
    }

    /// Tolerance for comparing characteristic times near `t`.
    pub fn time(&self, t: f64) -> f64 {
        self.time_base * t.max(1.0)
    }

    /// Determinant-zero threshold for `det(I + tA)` with `||A|| t = a_norm_t`.
    pub fn det(&self, a_norm_t: f64) -> f64 {
        self.det_base * (1.0 + a_norm_t)
    }

    /// Merge tolerance for gradient values with local gradient scale.
    pub fn grad_merge(&self, grad_scale: f64) -> f64 {
        self.grad_merge_base * (1.0 + grad_scale.abs())
    }

    /// Threshold below which the imaginary part of an eigenvalue is noise.
    pub fn eig_real(&self, lambda_abs: f64) -> f64 {
        self.eig_real_base * (1.0 + lambda_abs)
    }
}
