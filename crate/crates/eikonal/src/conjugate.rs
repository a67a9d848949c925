//! The characteristic Jacobian `X_y(y0, t) = I + t A(y0)` for C2 fields,
//! with `A(y0) = K'(Dg(y0)) D^2 g(y0)`, `K(z) = z/|z|`, so that
//! `A = (I - n n^T) D^2 g / |Dg|` with `n` the unit characteristic direction.
//!
//! The determinant of `X_y` vanishes exactly at the conjugate times
//! `-1/lambda` over the real negative eigenvalues `lambda` of `A`, of which
//! there are at most `n`. Along a characteristic that terminates with a
//! unique minimizer, the transported Hessian of the solution,
//! `D^2 g(y0) X_y^{-1}`, blows up as `t` approaches the termination time;
//! [`blowup_probe`] measures the growth exponent.

use crate::characteristics::{termination_times, TerminationBudget};
use crate::error::{EikonalError, Result};
use crate::field::ScalarField;
use crate::geometry;
use crate::tol::Tolerances;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Spectrum of the direction Jacobian at one initial point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharSpectrum {
    pub y0: Vec<f64>,
    /// The matrix `A(y0)` (row-major in the serialized form).
    #[serde(with = "matrix_serde")]
    pub matrix: DMatrix<f64>,
    /// Eigenvalues of `A` as `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    /// `{-1/lambda : lambda real, lambda < 0}`, sorted ascending. At most
    /// `n` entries; complex pairs are reported in `eigenvalues` but excluded.
    pub conjugate_times: Vec<f64>,
}

mod matrix_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Rows(Vec<Vec<f64>>);

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        Rows(rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let Rows(rows) = Rows::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

impl CharSpectrum {
    /// `X_y(y0, t) = I + t A(y0)`.
    pub fn xy(&self, t: f64) -> DMatrix<f64> {
        let n = self.matrix.nrows();
        DMatrix::identity(n, n) + &self.matrix * t
    }

    /// Operator norm of `A` (largest singular value).
    pub fn a_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// Smallest conjugate time, if any.
    pub fn first_conjugate_time(&self) -> Option<f64> {
        self.conjugate_times.first().copied()
    }
}

/// Operator norm (largest singular value) of a small dense matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Computes `A(y0)`, its eigenvalues and the conjugate times.
pub fn direction_jacobian(
    field: &dyn ScalarField,
    y0: &[f64],
    tol: &Tolerances,
) -> Result<CharSpectrum> {
    let hess = field.hessian_checked(y0)?;
    let dg = field.gradient(y0);
    let dgn = geometry::norm(&dg);
    let threshold = tol.grad_zero(field.value(y0).abs() + dgn);
    if dgn <= threshold {
        return Err(EikonalError::DegenerateGradient {
            norm: dgn,
            threshold,
        });
    }
    let n = field.dim();
    let unit = geometry::scale(&dg, 1.0 / dgn);
    // (I - n n^T) H / |Dg|
    let mut projector: DMatrix<f64> = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            projector[(i, j)] -= unit[i] * unit[j];
        }
    }
    let a: DMatrix<f64> = projector * hess / dgn;

    let eig = a.clone().complex_eigenvalues();
    let eigenvalues: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    let mut conjugate_times: Vec<f64> = eigenvalues
        .iter()
        .filter(|(re, im)| im.abs() <= tol.eig_real(re.abs()) && *re < -f64::MIN_POSITIVE)
        .map(|(re, _)| -1.0 / re)
        .collect();
    conjugate_times.sort_by(f64::total_cmp);
    Ok(CharSpectrum {
        y0: y0.to_vec(),
        matrix: a,
        eigenvalues,
        conjugate_times,
    })
}

/// `det X_y(y0, t) = det(I + t A(y0))`.
pub fn det_xy(field: &dyn ScalarField, y0: &[f64], t: f64, tol: &Tolerances) -> Result<f64> {
    Ok(direction_jacobian(field, y0, tol)?.xy(t).determinant())
}

/// The Hessian of `u` transported along the characteristic:
/// `D^2 u(X(y0, t), t) = D^2 g(y0) X_y(y0, t)^{-1}`.
///
/// Valid for `t` below the first conjugate time and below the first
/// termination time; errors with `SingularJacobian` when `det X_y` is zero
/// at scale.
pub fn hessian_transport(
    field: &dyn ScalarField,
    y0: &[f64],
    t: f64,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let spectrum = direction_jacobian(field, y0, tol)?;
    let xy = spectrum.xy(t);
    let det = xy.determinant();
    if det.abs() <= tol.det(spectrum.a_norm() * t.abs()) {
        return Err(EikonalError::SingularJacobian { t });
    }
    let inv = xy
        .try_inverse()
        .ok_or(EikonalError::SingularJacobian { t })?;
    let hess = field.hessian_checked(y0)?;
    Ok(hess * inv)
}

/// Result of the blow-up diagnostic along one characteristic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    /// Fitted exponent in `||D^2 u|| ~ C / (t_s - t)^alpha`; absent when the
    /// characteristic never terminates.
    pub exponent: Option<f64>,
    /// True when the transported-Hessian norm grows monotonically and
    /// exceeds `1e3 * ||D^2 g(y0)||` before the termination time.
    pub witnessed: bool,
    /// `(t, ||D^2 u(X(y0,t), t)||)` samples used.
    pub samples: Vec<(f64, f64)>,
    /// Termination time used as the blow-up location (capped at `t_max` when
    /// no termination was found).
    pub t_s: f64,
    pub terminated: bool,
}

/// Samples the transported Hessian on `t_k = t_s (1 - 2^-k)` and fits the
/// blow-up exponent by log-log least squares on `k = 2..=8`; the witness
/// threshold keeps sampling (up to `k = 16`) until the norm either exceeds
/// `1e3 ||D^2 g(y0)||` or stops growing.
pub fn blowup_probe(
    field: &dyn ScalarField,
    y0: &[f64],
    t_max: f64,
    tol: &Tolerances,
    budget: &TerminationBudget,
) -> Result<BlowupReport> {
    field.hessian_checked(y0)?;
    let rec = termination_times(field, y0, t_max, tol, budget)?;
    if rec.t_s_capped {
        return Ok(BlowupReport {
            exponent: None,
            witnessed: false,
            samples: Vec::new(),
            t_s: rec.t_s,
            terminated: false,
        });
    }
    let t_s = rec.t_s;
    let hess_norm = spectral_norm(&field.hessian_checked(y0)?);
    let threshold = 1e3 * hess_norm.max(f64::MIN_POSITIVE);

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut monotone = true;
    let mut exceeded = false;
    for k in 2..=16u32 {
        let t = t_s * (1.0 - 2f64.powi(-(k as i32)));
        let norm = match hessian_transport(field, y0, t, tol) {
            Ok(h) => spectral_norm(&h),
            // singular exactly at a conjugate time: treat as an infinite
            // sample and stop
            Err(EikonalError::SingularJacobian { .. }) => {
                exceeded = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(&(_, prev)) = samples.last() {
            if norm <= prev {
                monotone = false;
            }
        }
        samples.push((t, norm));
        if norm > threshold {
            exceeded = true;
        }
        if k >= 8 && exceeded {
            break;
        }
        if k >= 8 && !monotone {
            break;
        }
    }

    // exponent fit on the first seven samples (k = 2..=8)
    let fit: Vec<(f64, f64)> = samples
        .iter()
        .take(7)
        .filter(|(t, n)| *n > 0.0 && t_s - t > 0.0)
        .map(|(t, n)| (-(t_s - t).ln(), n.ln()))
        .collect();
    let exponent = (fit.len() >= 3).then(|| slope(&fit));

    Ok(BlowupReport {
        exponent,
        witnessed: monotone && exceeded,
        samples,
        t_s,
        terminated: true,
    })
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
