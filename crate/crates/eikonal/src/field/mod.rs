//! The initial datum `g` and its derivatives, plus the level-set and
//! half-space predicates every other module consumes.
//!
//! A field carries exact first (and, for C2 fields, second) derivative
//! evaluators on an axis-aligned validity box. Value queries outside the box
//! clamp onto it; operations that need a whole ball inside the box check the
//! box explicitly and report `OutOfBounds`.

pub mod catalog;
pub mod sampled;

pub use catalog::{catalog, lookup, FieldCatalogEntry};
pub use sampled::SampledField;

use crate::error::{EikonalError, Result};
use crate::geometry::{self, BoundsBox};
use crate::tol::Tolerances;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Smoothness class of the initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C1,
    C2Plus,
}

/// The initial datum `g: R^n -> R` with derivative evaluators.
///
/// Implementations must be pure: no interior mutability after construction,
/// safe to call from any number of threads.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    /// `g(y)`. Queries outside the bounds clamp onto the box.
    fn value(&self, y: &[f64]) -> f64;

    /// `Dg(y)`.
    fn gradient(&self, y: &[f64]) -> Vec<f64>;

    /// `D^2 g(y)`; `None` for C1 fields.
    fn hessian(&self, y: &[f64]) -> Option<DMatrix<f64>>;

    fn smoothness(&self) -> Smoothness;

    fn bounds(&self) -> &BoundsBox;

    /// Hessian or a `NotC2` error, for operations that require curvature.
    fn hessian_checked(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        self.hessian(y)
            .ok_or(EikonalError::NotC2("hessian unavailable on a C1 field"))
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A field given by closed-form closures.
pub struct AnalyticField {
    dim: usize,
    smoothness: Smoothness,
    bounds: BoundsBox,
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
    hessian: Option<Box<HessFn>>,
}

impl AnalyticField {
    pub fn new(
        dim: usize,
        bounds: BoundsBox,
        smoothness: Smoothness,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hessian: Option<Box<HessFn>>,
    ) -> Self {
        assert_eq!(bounds.dim(), dim);
        if smoothness == Smoothness::C2Plus {
            assert!(hessian.is_some(), "C2 fields must provide a hessian");
        }
        Self {
            dim,
            smoothness,
            bounds,
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian,
        }
    }
}

impl ScalarField for AnalyticField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &[f64]) -> f64 {
        if self.bounds.contains(y) {
            (self.value)(y)
        } else {
            (self.value)(&self.bounds.clamp(y))
        }
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        if self.bounds.contains(y) {
            (self.gradient)(y)
        } else {
            (self.gradient)(&self.bounds.clamp(y))
        }
    }

    fn hessian(&self, y: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.hessian.as_ref()?;
        Some(if self.bounds.contains(y) {
            h(y)
        } else {
            h(&self.bounds.clamp(y))
        })
    }

    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn bounds(&self) -> &BoundsBox {
        &self.bounds
    }
}

/// Shared handle to a field.
pub type FieldRef = Arc<dyn ScalarField>;

/// Side of `z` relative to the open half space
/// `H_{y0} = { y : (y - y0) . Dg(y0) > 0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfSpaceSide {
    Inside,
    Boundary,
    Outside,
}

/// Side of `z` relative to the level set of `g` through `y0`: `H^-` carries
/// strictly smaller values, `H^+` strictly larger ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelSide {
    HPlus,
    Level,
    HMinus,
}

/// Classifies `z` against the half space `H_{y0}`.
///
/// Requires a nondegenerate gradient at `y0`.
pub fn half_space_side(
    field: &dyn ScalarField,
    y0: &[f64],
    z: &[f64],
    tol: &Tolerances,
) -> Result<HalfSpaceSide> {
    let grad = field.gradient(y0);
    let grad_norm = geometry::norm(&grad);
    let threshold = tol.grad_zero(field.value(y0));
    if grad_norm <= threshold {
        return Err(EikonalError::DegenerateGradient {
            norm: grad_norm,
            threshold,
        });
    }
    let d = geometry::dot(&geometry::sub(z, y0), &grad);
    let band = tol.half_space_dot(grad_norm);
    Ok(if d > band {
        HalfSpaceSide::Inside
    } else if d < -band {
        HalfSpaceSide::Outside
    } else {
        HalfSpaceSide::Boundary
    })
}

/// Classifies `z` against the level of `g` through `y0`.
pub fn level_side(field: &dyn ScalarField, y0: &[f64], z: &[f64], tol: &Tolerances) -> LevelSide {
    let g0 = field.value(y0);
    let gz = field.value(z);
    let band = tol.level_value(g0);
    if gz < g0 - band {
        LevelSide::HMinus
    } else if gz > g0 + band {
        LevelSide::HPlus
    } else {
        LevelSide::Level
    }
}
