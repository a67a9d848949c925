//! Catalog of analytic initial data used throughout the test suite and CLI.
//!
//! Every entry records, in `notes`, the analytic facts the tests rely on;
//! the tests encode those facts as frozen expected values.

use super::{AnalyticField, FieldRef, Smoothness};
use crate::error::{EikonalError, Result};
use crate::geometry::BoundsBox;
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Half-width of the validity cube for catalog fields. Large enough that
/// termination searches with desk-scale `T_max` never truncate.
const CATALOG_HALF_WIDTH: f64 = 64.0;

/// A named catalog field together with its analytic facts.
pub struct FieldCatalogEntry {
    pub name: String,
    pub field: FieldRef,
    pub notes: String,
}

/// Parameter map for `lookup` (e.g. the oblique-saddle tilt `a`).
pub type Params = BTreeMap<String, f64>;

fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn bounds(dim: usize) -> BoundsBox {
    BoundsBox::cube(dim, CATALOG_HALF_WIDTH)
}

fn const_hessian(dim: usize, entries: Vec<f64>) -> impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync {
    move |_y: &[f64]| DMatrix::from_row_slice(dim, dim, &entries)
}

/// Builds a catalog field by name.
///
/// Known names: `quadratic_bowl`, `concave_bowl` (any dim up to 3);
/// `cubic`, `quartic`, `double_well`, `tilted_double_well` (1D);
/// `saddle`, `oblique_saddle` (2D); `linear` (any dim up to 3).
pub fn lookup(name: &str, dim: usize, params: &Params) -> Result<FieldRef> {
    if dim == 0 || dim > 3 {
        return Err(EikonalError::InvalidArgument(format!(
            "unsupported dimension {dim}"
        )));
    }
    let field: FieldRef = match name {
        "quadratic_bowl" => Arc::new(AnalyticField::new(
            dim,
            bounds(dim),
            Smoothness::C2Plus,
            |y| y.iter().map(|v| v * v).sum(),
            |y| y.iter().map(|v| 2.0 * v).collect(),
            Some(Box::new(move |_| {
                DMatrix::from_diagonal_element(dim, dim, 2.0)
            })),
        )),
        "concave_bowl" => Arc::new(AnalyticField::new(
            dim,
            bounds(dim),
            Smoothness::C2Plus,
            |y| -y.iter().map(|v| v * v).sum::<f64>(),
            |y| y.iter().map(|v| -2.0 * v).collect(),
            Some(Box::new(move |_| {
                DMatrix::from_diagonal_element(dim, dim, -2.0)
            })),
        )),
        "cubic" => {
            require_dim(name, dim, 1)?;
            Arc::new(AnalyticField::new(
                1,
                bounds(1),
                Smoothness::C2Plus,
                |y| y[0].powi(3),
                |y| vec![3.0 * y[0] * y[0]],
                Some(Box::new(|y: &[f64]| {
                    DMatrix::from_element(1, 1, 6.0 * y[0])
                })),
            ))
        }
        "quartic" => {
            require_dim(name, dim, 1)?;
            Arc::new(AnalyticField::new(
                1,
                bounds(1),
                Smoothness::C2Plus,
                |y| y[0].powi(4),
                |y| vec![4.0 * y[0].powi(3)],
                Some(Box::new(|y: &[f64]| {
                    DMatrix::from_element(1, 1, 12.0 * y[0] * y[0])
                })),
            ))
        }
        "saddle" => {
            require_dim(name, dim, 2)?;
            Arc::new(AnalyticField::new(
                2,
                bounds(2),
                Smoothness::C2Plus,
                |y| y[0] * y[0] - y[1] * y[1],
                |y| vec![2.0 * y[0], -2.0 * y[1]],
                Some(Box::new(const_hessian(2, vec![2.0, 0.0, 0.0, -2.0]))),
            ))
        }
        "oblique_saddle" => {
            require_dim(name, dim, 2)?;
            let a = param(params, "a", 0.5);
            Arc::new(AnalyticField::new(
                2,
                bounds(2),
                Smoothness::C2Plus,
                move |y| y[0] * y[0] - y[1] * y[1] + a * y[0],
                move |y| vec![2.0 * y[0] + a, -2.0 * y[1]],
                Some(Box::new(const_hessian(2, vec![2.0, 0.0, 0.0, -2.0]))),
            ))
        }
        "double_well" | "tilted_double_well" => {
            require_dim(name, dim, 1)?;
            let tilt = if name == "double_well" {
                0.0
            } else {
                param(params, "tilt", 0.3)
            };
            Arc::new(AnalyticField::new(
                1,
                bounds(1),
                Smoothness::C2Plus,
                move |y| {
                    let w = y[0] * y[0] - 1.0;
                    w * w + tilt * y[0]
                },
                move |y| vec![4.0 * y[0] * (y[0] * y[0] - 1.0) + tilt],
                Some(Box::new(|y: &[f64]| {
                    DMatrix::from_element(1, 1, 12.0 * y[0] * y[0] - 4.0)
                })),
            ))
        }
        "linear" => {
            let slope = param(params, "slope", 1.0);
            Arc::new(AnalyticField::new(
                dim,
                bounds(dim),
                Smoothness::C2Plus,
                move |y| slope * y.iter().sum::<f64>(),
                move |y| vec![slope; y.len()],
                Some(Box::new(move |_| DMatrix::zeros(dim, dim))),
            ))
        }
        other => {
            return Err(EikonalError::InvalidArgument(format!(
                "unknown catalog field `{other}`"
            )))
        }
    };
    Ok(field)
}

fn require_dim(name: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(EikonalError::InvalidArgument(format!(
            "field `{name}` is {want}-dimensional, got dim = {got}"
        )))
    }
}

/// The standard catalog instantiations exercised by the test suite.
pub fn catalog() -> Vec<FieldCatalogEntry> {
    let defaults = Params::new();
    let mut tilted = Params::new();
    tilted.insert("tilt".into(), 0.3);
    let mut oblique = Params::new();
    oblique.insert("a".into(), 0.5);

    let entries: Vec<(&str, usize, &Params, &str)> = vec![
        (
            "quadratic_bowl",
            1,
            &defaults,
            "g = y^2: u = (|x|-t)^2 outside |x|<=t, 0 inside; no nondifferentiable \
             points; P0 is the pair of lines |x| = t; u fails to be C2 exactly there",
        ),
        (
            "quadratic_bowl",
            2,
            &defaults,
            "g = |y|^2: u = (max(|x|-t,0))^2; minimum over the ball sits on the \
             segment from x toward the origin",
        ),
        (
            "concave_bowl",
            1,
            &defaults,
            "g = -y^2: two minimizers at the interval ends; at (0,2) the reachable \
             gradients are exactly {(4,-4), (-4,-4)}",
        ),
        (
            "concave_bowl",
            2,
            &defaults,
            "g = -|y|^2: all characteristics focus on the t-axis; t_bar = t_s = |y0|; \
             minimizer set of ((0,0),t) is the full circle |y| = t",
        ),
        (
            "cubic",
            1,
            &defaults,
            "g = y^3: u = (x-t)^3 everywhere; no singular structure; smooth to all orders",
        ),
        (
            "quartic",
            1,
            &defaults,
            "g = y^4: u = (|x|-t)^4 outside the cone, 0 inside; C2 everywhere but the \
             fourth derivative jumps across |x| = t",
        ),
        (
            "saddle",
            2,
            &defaults,
            "g = y1^2 - y2^2: t_bar = t_s = |y0| on both axes; at y0=(1,0) the \
             direction jacobian is diag(0,-1), conjugate time 1, det X_y = 1 - t; \
             Sigma plus T1 has a single connected component",
        ),
        (
            "oblique_saddle",
            2,
            &oblique,
            "g = y1^2 - y2^2 + a y1: no critical points for a != 0; every \
             characteristic terminates",
        ),
        (
            "double_well",
            1,
            &defaults,
            "g = (y^2-1)^2: symmetric wells at y = +-1 with equal depth",
        ),
        (
            "tilted_double_well",
            1,
            &tilted,
            "g = (y^2-1)^2 + 0.3 y: wells near -1.028 (depth -0.305) and +0.960 \
             (depth +0.294), hump near 0.076; solving g(y0) = g(right well) on the \
             middle slope yields the tangential contact with t_bar < t_s",
        ),
        (
            "linear",
            1,
            &defaults,
            "g = y: g strictly increases along every characteristic; no termination, \
             empty singular set",
        ),
        (
            "linear",
            2,
            &defaults,
            "g = y1 + y2: as in 1D, the singular set is empty",
        ),
    ];

    entries
        .into_iter()
        .map(|(name, dim, params, notes)| FieldCatalogEntry {
            name: format!("{name}_{dim}d"),
            field: lookup(name, dim, params).expect("catalog entry must build"),
            notes: notes.to_string(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;

    #[test]
    fn lookup_rejects_unknown_and_bad_dims() {
        assert!(lookup("no_such_field", 1, &Params::new()).is_err());
        assert!(lookup("saddle", 1, &Params::new()).is_err());
        assert!(lookup("cubic", 2, &Params::new()).is_err());
    }

    #[test]
    fn catalog_values_and_gradients() {
        let p = Params::new();
        let bowl = lookup("quadratic_bowl", 2, &p).unwrap();
        assert_eq!(bowl.value(&[1.0, 2.0]), 5.0);
        assert_eq!(bowl.gradient(&[1.0, 2.0]), vec![2.0, 4.0]);

        let saddle = lookup("saddle", 2, &p).unwrap();
        assert_eq!(saddle.value(&[1.0, 0.0]), 1.0);
        assert_eq!(saddle.gradient(&[1.0, 2.0]), vec![2.0, -4.0]);
        let h = saddle.hessian(&[0.3, -0.7]).unwrap();
        assert_eq!(h[(0, 0)], 2.0);
        assert_eq!(h[(1, 1)], -2.0);

        let tdw = lookup("tilted_double_well", 1, &p).unwrap();
        assert!((tdw.value(&[1.0]) - 0.3).abs() < 1e-15);
        assert!((tdw.gradient(&[1.0])[0] - 0.3).abs() < 1e-15);

        let lin = lookup("linear", 2, &p).unwrap();
        assert_eq!(lin.gradient(&[5.0, -3.0]), vec![1.0, 1.0]);
    }

    /// Central finite differences of `value` must reproduce `gradient` to
    /// O(h^2), and `hessian` must be exactly symmetric and agree with finite
    /// differences of `gradient`.
    #[test]
    fn derivatives_agree_with_finite_differences() {
        let h = 1e-4;
        for entry in catalog() {
            let f = entry.field.as_ref();
            let dim = f.dim();
            let samples = sample_points(dim);
            for y in &samples {
                let scale = 1.0 + f.value(y).abs() + geometry::norm(&f.gradient(y));
                let grad = f.gradient(y);
                for a in 0..dim {
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[a] += h;
                    ym[a] -= h;
                    let fd = (f.value(&yp) - f.value(&ym)) / (2.0 * h);
                    assert!(
                        (fd - grad[a]).abs() <= 10.0 * h * h * scale,
                        "{}: grad mismatch at {:?} axis {a}: fd {fd} vs {}",
                        entry.name,
                        y,
                        grad[a]
                    );
                }
                if f.smoothness() == Smoothness::C2Plus {
                    let hess = f.hessian(y).unwrap();
                    for i in 0..dim {
                        for j in 0..dim {
                            assert_eq!(hess[(i, j)], hess[(j, i)], "{}: asymmetric", entry.name);
                            let mut yp = y.clone();
                            let mut ym = y.clone();
                            yp[j] += h;
                            ym[j] -= h;
                            let fd = (f.gradient(&yp)[i] - f.gradient(&ym)[i]) / (2.0 * h);
                            assert!(
                                (fd - hess[(i, j)]).abs() <= 100.0 * h * h * scale,
                                "{}: hess mismatch at {:?} ({i},{j})",
                                entry.name,
                                y
                            );
                        }
                    }
                }
            }
        }
    }

    fn sample_points(dim: usize) -> Vec<Vec<f64>> {
        let coords = [-2.3, -0.7, 0.4, 1.9];
        match dim {
            1 => coords.iter().map(|&c| vec![c]).collect(),
            2 => coords
                .iter()
                .zip(coords.iter().rev())
                .map(|(&a, &b)| vec![a, b])
                .chain([vec![1.0, 0.0], vec![0.0, -1.5]])
                .collect(),
            _ => vec![vec![0.5; dim], vec![-1.1; dim]],
        }
    }
}
