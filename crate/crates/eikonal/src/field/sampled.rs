//! Fields sampled on a regular grid, loaded from CSV, differentiated by
//! natural cubic splines (tensor-product splines in 2D).
//!
//! CSV layout: an optional `#` comment block, then one header record
//! `n, lo_1, hi_1, count_1 [, lo_2, hi_2, count_2]`, then `count_1 * count_2`
//! values in row-major order (first axis slowest). Values may be separated by
//! commas, whitespace or newlines.
//!
//! A sampled field is tagged `C2Plus` only when the source declares it;
//! otherwise it is `C1` and exposes no hessian.

use super::{ScalarField, Smoothness};
use crate::error::{EikonalError, Result};
use crate::geometry::BoundsBox;
use nalgebra::DMatrix;

/// Natural cubic spline on a uniform grid.
#[derive(Debug, Clone)]
struct Spline1D {
    lo: f64,
    h: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots (natural boundary: zero at the ends).
    m: Vec<f64>,
}

impl Spline1D {
    fn new(lo: f64, h: f64, values: Vec<f64>) -> Self {
        let m = second_derivatives(&values, h);
        Self { lo, h, values, m }
    }

    fn segment(&self, x: f64) -> (usize, f64) {
        let n = self.values.len();
        let s = ((x - self.lo) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    fn eval(&self, x: f64) -> f64 {
        let (i, s) = self.segment(x);
        let (v0, v1, m0, m1) = (self.values[i], self.values[i + 1], self.m[i], self.m[i + 1]);
        let u = 1.0 - s;
        v0 * u + v1 * s + self.h * self.h / 6.0 * ((u * u * u - u) * m0 + (s * s * s - s) * m1)
    }

    fn deriv(&self, x: f64) -> f64 {
        let (i, s) = self.segment(x);
        let (v0, v1, m0, m1) = (self.values[i], self.values[i + 1], self.m[i], self.m[i + 1]);
        let u = 1.0 - s;
        (v1 - v0) / self.h + self.h / 6.0 * ((1.0 - 3.0 * u * u) * m0 + (3.0 * s * s - 1.0) * m1)
    }

    fn second(&self, x: f64) -> f64 {
        let (i, s) = self.segment(x);
        (1.0 - s) * self.m[i] + s * self.m[i + 1]
    }
}

/// Thomas solve of the natural-spline tridiagonal system.
fn second_derivatives(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut diag = vec![4.0; k];
    let mut rhs: Vec<f64> = (1..n - 1)
        .map(|i| 6.0 * (values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h))
        .collect();
    for i in 1..k {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    let mut sol = vec![0.0; k];
    sol[k - 1] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        sol[i] = (rhs[i] - sol[i + 1]) / diag[i];
    }
    m[1..n - 1].copy_from_slice(&sol);
    m
}

enum Interp {
    One(Spline1D),
    Two {
        /// One spline per axis-0 grid line, parametrized by the axis-1 coordinate.
        rows: Vec<Spline1D>,
        lo0: f64,
        h0: f64,
    },
}

/// A grid-sampled field.
pub struct SampledField {
    bounds: BoundsBox,
    smoothness: Smoothness,
    interp: Interp,
}

impl SampledField {
    pub fn from_csv_str(text: &str, smoothness: Smoothness) -> Result<Self> {
        let mut numbers = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                numbers.push(tok.parse::<f64>().map_err(|_| {
                    EikonalError::InvalidArgument(format!("bad CSV number `{tok}`"))
                })?);
            }
        }
        Self::from_numbers(&numbers, smoothness)
    }

    pub fn from_csv_path(path: &std::path::Path, smoothness: Smoothness) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            EikonalError::InvalidArgument(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_csv_str(&text, smoothness)
    }

    fn from_numbers(numbers: &[f64], smoothness: Smoothness) -> Result<Self> {
        let bad = |msg: &str| EikonalError::InvalidArgument(format!("sampled field: {msg}"));
        let dim = *numbers.first().ok_or_else(|| bad("empty input"))? as usize;
        if dim == 0 || dim > 2 {
            return Err(bad("dimension must be 1 or 2"));
        }
        let header = 1 + 3 * dim;
        if numbers.len() < header {
            return Err(bad("truncated header"));
        }
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut counts = Vec::new();
        for a in 0..dim {
            let base = 1 + 3 * a;
            lo.push(numbers[base]);
            hi.push(numbers[base + 1]);
            let c = numbers[base + 2];
            if c < 4.0 || c.fract() != 0.0 {
                return Err(bad("axis count must be an integer >= 4"));
            }
            counts.push(c as usize);
            if numbers[base] >= numbers[base + 1] {
                return Err(bad("axis extent must have lo < hi"));
            }
        }
        let total: usize = counts.iter().product();
        let values = &numbers[header..];
        if values.len() != total {
            return Err(bad(&format!(
                "expected {total} values, found {}",
                values.len()
            )));
        }
        let bounds = BoundsBox::new(lo.clone(), hi.clone());
        let interp = match dim {
            1 => {
                let h = (hi[0] - lo[0]) / (counts[0] - 1) as f64;
                Interp::One(Spline1D::new(lo[0], h, values.to_vec()))
            }
            _ => {
                let h0 = (hi[0] - lo[0]) / (counts[0] - 1) as f64;
                let h1 = (hi[1] - lo[1]) / (counts[1] - 1) as f64;
                let rows = (0..counts[0])
                    .map(|i| {
                        let row = values[i * counts[1]..(i + 1) * counts[1]].to_vec();
                        Spline1D::new(lo[1], h1, row)
                    })
                    .collect();
                Interp::Two {
                    rows,
                    lo0: lo[0],
                    h0,
                }
            }
        };
        Ok(Self {
            bounds,
            smoothness,
            interp,
        })
    }

    /// Spline of the per-row quantity `extract(row, y1)` along axis 0.
    fn axis0_spline(&self, y1: f64, extract: impl Fn(&Spline1D, f64) -> f64) -> Spline1D {
        match &self.interp {
            Interp::Two { rows, lo0, h0 } => {
                let col: Vec<f64> = rows.iter().map(|r| extract(r, y1)).collect();
                Spline1D::new(*lo0, *h0, col)
            }
            Interp::One(_) => unreachable!("axis0_spline is 2D-only"),
        }
    }
}

impl ScalarField for SampledField {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let y = self.bounds.clamp(y);
        match &self.interp {
            Interp::One(s) => s.eval(y[0]),
            Interp::Two { .. } => self.axis0_spline(y[1], |r, b| r.eval(b)).eval(y[0]),
        }
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let y = self.bounds.clamp(y);
        match &self.interp {
            Interp::One(s) => vec![s.deriv(y[0])],
            Interp::Two { .. } => {
                let d0 = self.axis0_spline(y[1], |r, b| r.eval(b)).deriv(y[0]);
                let d1 = self.axis0_spline(y[1], |r, b| r.deriv(b)).eval(y[0]);
                vec![d0, d1]
            }
        }
    }

    fn hessian(&self, y: &[f64]) -> Option<DMatrix<f64>> {
        if self.smoothness != Smoothness::C2Plus {
            return None;
        }
        let y = self.bounds.clamp(y);
        Some(match &self.interp {
            Interp::One(s) => DMatrix::from_element(1, 1, s.second(y[0])),
            Interp::Two { .. } => {
                let d00 = self.axis0_spline(y[1], |r, b| r.eval(b)).second(y[0]);
                let d11 = self.axis0_spline(y[1], |r, b| r.second(b)).eval(y[0]);
                let d01 = self.axis0_spline(y[1], |r, b| r.deriv(b)).deriv(y[0]);
                DMatrix::from_row_slice(2, 2, &[d00, d01, d01, d11])
            }
        })
    }

    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn bounds(&self) -> &BoundsBox {
        &self.bounds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_csv_1d() -> String {
        let n = 41;
        let (lo, hi) = (-2.0, 2.0);
        let mut s = format!("# g = y^2 sampled\n1, {lo}, {hi}, {n}\n");
        for i in 0..n {
            let y = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            s.push_str(&format!("{}\n", y * y));
        }
        s
    }

    #[test]
    fn spline_reproduces_quadratic_1d() {
        let f = SampledField::from_csv_str(&quadratic_csv_1d(), Smoothness::C2Plus).unwrap();
        for &y in &[-1.7, -0.33, 0.0, 0.8, 1.95] {
            assert!((f.value(&[y]) - y * y).abs() < 2e-3, "value at {y}");
            assert!((f.gradient(&[y])[0] - 2.0 * y).abs() < 2e-2, "grad at {y}");
        }
        let h = f.hessian(&[0.4]).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 0.2);
    }

    #[test]
    fn spline_2d_interpolates_and_is_symmetric() {
        let n = 25;
        let (lo, hi) = (-1.5, 1.5);
        let mut s = format!("2, {lo}, {hi}, {n}, {lo}, {hi}, {n}\n");
        for i in 0..n {
            let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let b = lo + (hi - lo) * j as f64 / (n - 1) as f64;
                s.push_str(&format!("{}, ", a * a - b * b + 0.25 * a * b));
            }
            s.push('\n');
        }
        let f = SampledField::from_csv_str(&s, Smoothness::C2Plus).unwrap();
        let y = [0.37, -0.61];
        let expect = y[0] * y[0] - y[1] * y[1] + 0.25 * y[0] * y[1];
        assert!((f.value(&y) - expect).abs() < 5e-3);
        let g = f.gradient(&y);
        assert!((g[0] - (2.0 * y[0] + 0.25 * y[1])).abs() < 5e-2);
        assert!((g[1] - (-2.0 * y[1] + 0.25 * y[0])).abs() < 5e-2);
        let h = f.hessian(&y).unwrap();
        assert_eq!(h[(0, 1)], h[(1, 0)]);
        assert!((h[(0, 1)] - 0.25).abs() < 0.1);
    }

    #[test]
    fn c1_fields_expose_no_hessian() {
        let f = SampledField::from_csv_str(&quadratic_csv_1d(), Smoothness::C1).unwrap();
        assert!(f.hessian(&[0.0]).is_none());
        assert_eq!(f.smoothness(), Smoothness::C1);
    }

    #[test]
    fn loader_rejects_malformed_input() {
        assert!(SampledField::from_csv_str("", Smoothness::C1).is_err());
        assert!(SampledField::from_csv_str("3, 0, 1, 5", Smoothness::C1).is_err());
        assert!(SampledField::from_csv_str("1, 0, 1, 5\n1 2 3", Smoothness::C1).is_err());
        assert!(SampledField::from_csv_str("1, 1, 0, 5\n1 2 3 4 5", Smoothness::C1).is_err());
    }

    /// Central differences of `value` must match `gradient` at interior points.
    #[test]
    fn spline_gradient_consistent_with_value() {
        let f = SampledField::from_csv_str(&quadratic_csv_1d(), Smoothness::C2Plus).unwrap();
        let h = 1e-5;
        for &y in &[-1.2, -0.4, 0.3, 1.1] {
            let fd = (f.value(&[y + h]) - f.value(&[y - h])) / (2.0 * h);
            assert!((fd - f.gradient(&[y])[0]).abs() < 1e-7);
        }
    }
}
