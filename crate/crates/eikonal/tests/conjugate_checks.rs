//! Independent verification of the characteristic Jacobian machinery: the
//! closed-form `A(y0)` against a finite-difference Jacobian of the
//! characteristic map, nonvanishing of `det X_y` strictly before the first
//! termination time, the coincidence of the first conjugate time with the
//! termination time at unique-minimizer terminations, and the transported
//! Hessian against finite differences of the solution itself.

use eikonal::characteristics::{termination_times, TerminationBudget};
use eikonal::conjugate::{blowup_probe, det_xy, direction_jacobian, hessian_transport};
use eikonal::field::catalog::{catalog, lookup, Params};
use eikonal::field::{FieldRef, ScalarField, Smoothness};
use eikonal::geometry::{self, SplitMix64};
use eikonal::hopflax::{evaluate_u, SpaceTimePoint};
use eikonal::optim::SearchBudget;
use eikonal::tol::Tolerances;

fn field(name: &str, dim: usize) -> FieldRef {
    lookup(name, dim, &Params::new()).unwrap()
}

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Central-difference Jacobian of `y -> X(y, t)` minus the identity, divided
/// by `t`; must match the closed-form `A(y0)` to O(h^2).
fn fd_direction_jacobian(f: &dyn ScalarField, y0: &[f64], h: f64) -> Vec<Vec<f64>> {
    let dim = f.dim();
    let x_at = |y: &[f64]| -> Vec<f64> {
        let dg = f.gradient(y);
        let n = geometry::norm(&dg);
        geometry::add_scaled(y, 1.0 / n, &dg)
    };
    let mut j = vec![vec![0.0; dim]; dim];
    for col in 0..dim {
        let mut yp = y0.to_vec();
        let mut ym = y0.to_vec();
        yp[col] += h;
        ym[col] -= h;
        let (xp, xm) = (x_at(&yp), x_at(&ym));
        for row in 0..dim {
            j[row][col] = (xp[row] - xm[row]) / (2.0 * h);
            if row == col {
                j[row][col] -= 1.0;
            }
        }
    }
    j
}

#[test]
fn closed_form_jacobian_matches_finite_differences() {
    let t0 = tol();
    let h = 1e-5;
    let mut rng = SplitMix64::new(0xfeed);
    for name in ["saddle", "oblique_saddle", "quadratic_bowl", "concave_bowl"] {
        let f = field(name, 2);
        let mut tested = 0;
        while tested < 12 {
            let y0 = vec![rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)];
            if geometry::norm(&f.gradient(&y0)) < 0.3 {
                continue;
            }
            tested += 1;
            let spec = direction_jacobian(f.as_ref(), &y0, &t0).unwrap();
            let fd = fd_direction_jacobian(f.as_ref(), &y0, h);
            for i in 0..2 {
                for j in 0..2 {
                    let err = (spec.matrix[(i, j)] - fd[i][j]).abs();
                    assert!(
                        err <= 1e-6 * (1.0 + spec.a_norm()),
                        "{name} at {y0:?}: A[{i}][{j}] err {err}"
                    );
                }
            }
        }
    }
}

/// `det X_y(y0, t) != 0` on `[0, 0.999 t_bar]` for every sampled
/// characteristic of every C2 catalog field with finite termination.
#[test]
fn determinant_nonzero_before_first_termination() {
    let t0 = tol();
    let term_budget = TerminationBudget::standard();
    for entry in catalog() {
        let f = entry.field.as_ref();
        if f.smoothness() != Smoothness::C2Plus {
            continue;
        }
        let mut rng = SplitMix64::new(0xdef0 ^ entry.name.len() as u64);
        let mut tested = 0;
        let mut attempts = 0;
        while tested < 20 && attempts < 400 {
            attempts += 1;
            let y0: Vec<f64> = (0..f.dim()).map(|_| rng.uniform(-2.0, 2.0)).collect();
            if geometry::norm(&f.gradient(&y0)) < 1e-2 {
                continue;
            }
            let rec = termination_times(f, &y0, 6.0, &t0, &term_budget).unwrap();
            if rec.t_bar_capped {
                continue;
            }
            tested += 1;
            for k in 0..=64 {
                let t = rec.t_bar * 0.999 * k as f64 / 64.0;
                let det = det_xy(f, &y0, t, &t0).unwrap();
                assert!(
                    det > 0.0,
                    "{}: det X_y = {det} at t = {t} before t_bar = {}",
                    entry.name,
                    rec.t_bar
                );
            }
        }
    }
}

/// At a unique-minimizer termination with coinciding times, the first
/// conjugate time equals the termination time. Characteristics that
/// terminate against *other* minimizers need no conjugate time at all: on
/// the saddle's contracting axis the direction Jacobian has no negative
/// eigenvalue although the characteristic terminates (at a
/// nondifferentiable point).
#[test]
fn first_conjugate_time_matches_termination_at_t1_points() {
    let t0 = tol();
    let saddle = field("saddle", 2);
    for y0 in [vec![1.0, 0.0], vec![-1.7, 0.0], vec![0.4, 0.0]] {
        let rec = termination_times(
            saddle.as_ref(),
            &y0,
            8.0,
            &t0,
            &TerminationBudget::standard(),
        )
        .unwrap();
        assert!(!rec.t_s_capped);
        let spec = direction_jacobian(saddle.as_ref(), &y0, &t0).unwrap();
        let tc = spec.first_conjugate_time().unwrap();
        assert!(
            (tc - rec.t_s).abs() <= 2e-3 * rec.t_s.max(1.0),
            "y0 = {y0:?}: conjugate {tc} vs termination {}",
            rec.t_s
        );
    }

    // y0 = (0, b): the characteristic focuses at the origin against its
    // mirror image; termination is multi-valued and A = diag(2/|Dg|, 0)
    // has no negative eigenvalue
    let y0 = vec![0.0, 1.3];
    let rec = termination_times(
        saddle.as_ref(),
        &y0,
        8.0,
        &t0,
        &TerminationBudget::standard(),
    )
    .unwrap();
    assert!(!rec.t_s_capped && (rec.t_s - 1.3).abs() < 2e-3);
    let spec = direction_jacobian(saddle.as_ref(), &y0, &t0).unwrap();
    assert!(spec.conjugate_times.is_empty());
    use eikonal::classify::{classify_termination, ClassifyOptions, StratumLabel};
    let class = classify_termination(saddle.as_ref(), &rec, &ClassifyOptions::default()).unwrap();
    assert_eq!(class.label, StratumLabel::Sigma);
}

/// The transported Hessian agrees with central second differences of the
/// solution along the characteristic, before termination.
#[test]
fn transported_hessian_matches_fd_hessian_of_u() {
    let t0 = tol();
    let budget = SearchBudget::standard();
    let h = 2e-3;
    let cases = [
        ("saddle", vec![1.0, 0.0], 0.5),
        ("saddle", vec![1.0, 0.0], 0.9),
        ("concave_bowl", vec![1.5, 0.0], 0.6),
    ];
    for (name, y0, tt) in cases {
        let f = field(name, 2);
        let transported = hessian_transport(f.as_ref(), &y0, tt, &t0).unwrap();
        let dg = f.gradient(&y0);
        let x = geometry::add_scaled(&y0, tt / geometry::norm(&dg), &dg);
        let u_at = |dx: f64, dy: f64| {
            let p = SpaceTimePoint::new(vec![x[0] + dx, x[1] + dy], tt).unwrap();
            evaluate_u(f.as_ref(), &p, &t0, &budget).unwrap()
        };
        let u00 = u_at(0.0, 0.0);
        let fd = [
            [
                (u_at(h, 0.0) - 2.0 * u00 + u_at(-h, 0.0)) / (h * h),
                (u_at(h, h) - u_at(h, -h) - u_at(-h, h) + u_at(-h, -h)) / (4.0 * h * h),
            ],
            [
                (u_at(h, h) - u_at(h, -h) - u_at(-h, h) + u_at(-h, -h)) / (4.0 * h * h),
                (u_at(0.0, h) - 2.0 * u00 + u_at(0.0, -h)) / (h * h),
            ],
        ];
        let scale = 1.0 + eikonal::conjugate::spectral_norm(&transported);
        for i in 0..2 {
            for j in 0..2 {
                let err = (transported[(i, j)] - fd[i][j]).abs();
                assert!(
                    err <= 0.05 * scale,
                    "{name} t={tt}: H[{i}][{j}] transported {} vs fd {}",
                    transported[(i, j)],
                    fd[i][j]
                );
            }
        }
    }
}

/// Blow-up diagnostics: unit exponent at the saddle and the concave bowl,
/// nothing witnessed on fields without termination.
#[test]
fn blowup_exponents_on_focal_characteristics() {
    let t0 = tol();
    let budget = TerminationBudget::standard();
    for (name, y0) in [("saddle", vec![1.0, 0.0]), ("concave_bowl", vec![1.0, 0.0])] {
        let f = field(name, 2);
        let rep = blowup_probe(f.as_ref(), &y0, 8.0, &t0, &budget).unwrap();
        assert!(rep.terminated && rep.witnessed, "{name}: {rep:?}");
        let alpha = rep.exponent.unwrap();
        assert!((alpha - 1.0).abs() <= 0.3, "{name}: alpha = {alpha}");
        let hess_norm = eikonal::conjugate::spectral_norm(&f.hessian(&y0).unwrap());
        let max_norm = rep.samples.iter().map(|(_, n)| *n).fold(0.0, f64::max);
        assert!(max_norm > 1e3 * hess_norm);
    }
    let lin = field("linear", 2);
    let rep = blowup_probe(lin.as_ref(), &[0.3, 0.3], 5.0, &t0, &budget).unwrap();
    assert!(!rep.witnessed && rep.exponent.is_none());
}
