//! Consistency of the two independent verdicts about differentiability: the
//! gradient-value dichotomy of `gradient_u` and the stratum labels of
//! `classify_point` must tell the same story at random points, with the
//! measure-zero refinements (T1, P0) allowed only on the differentiable
//! side.

use eikonal::classify::{classify_point, ClassifyOptions, StratumLabel};
use eikonal::error::EikonalError;
use eikonal::field::catalog::catalog;
use eikonal::geometry::SplitMix64;
use eikonal::hopflax::{gradient_u, GradientVerdict, SpaceTimePoint};
use eikonal::optim::SearchBudget;
use eikonal::tol::Tolerances;

/// One random point: both verdicts, cross-checked. Returns true when the
/// pair was ambiguous.
fn check_one(
    field: &dyn eikonal::field::ScalarField,
    x: Vec<f64>,
    t: f64,
    name: &str,
) -> bool {
    let tol = Tolerances::default();
    let budget = SearchBudget::standard();
    let opts = ClassifyOptions::default();
    let p = SpaceTimePoint::new(x.clone(), t).unwrap();
    let verdict = gradient_u(field, &p, &tol, &budget);
    let class = classify_point(field, &p, &opts);
    match (&verdict, &class) {
        (Err(EikonalError::AmbiguousGradient), _) => true,
        (_, Ok(c)) if c.label == StratumLabel::Ambiguous => true,
        (Ok(v), Ok(c)) => {
            match c.label {
                StratumLabel::Smooth | StratumLabel::T1 | StratumLabel::P0 => {
                    assert!(
                        matches!(v, GradientVerdict::Differentiable(_)),
                        "{name} at ({x:?}, {t}): label {:?} but nondifferentiable",
                        c.label
                    );
                }
                StratumLabel::Sigma => {
                    assert!(
                        matches!(v, GradientVerdict::Nondifferentiable),
                        "{name} at ({x:?}, {t}): Sigma but differentiable"
                    );
                }
                StratumLabel::Ambiguous => unreachable!(),
            }
            false
        }
        (Err(e), _) => panic!("{name}: gradient_u failed: {e}"),
        (_, Err(e)) => panic!("{name}: classify failed: {e}"),
    }
}

#[test]
fn gradient_and_classification_verdicts_are_consistent() {
    for entry in catalog() {
        let f = entry.field.as_ref();
        let mut rng = SplitMix64::new(0xc0ffee ^ entry.name.len() as u64);
        let n = 120;
        let mut ambiguous = 0usize;
        for _ in 0..n {
            let x: Vec<f64> = (0..f.dim()).map(|_| rng.uniform(-2.5, 2.5)).collect();
            let t = rng.uniform(0.05, 2.0);
            if check_one(f, x, t, &entry.name) {
                ambiguous += 1;
            }
        }
        assert!(
            (ambiguous as f64) <= 0.01 * n as f64,
            "{}: ambiguous rate {}/{n}",
            entry.name,
            ambiguous
        );
    }
}

/// Points deliberately placed on the singular strata still agree.
#[test]
fn verdicts_agree_on_structured_points() {
    let tol = Tolerances::default();
    let budget = SearchBudget::standard();
    let opts = ClassifyOptions::default();

    // Sigma: equidistant between the wells, interval ends on the slopes
    // carry two distinct nonzero gradients
    let dw = eikonal::field::catalog::lookup("double_well", 1, &Default::default()).unwrap();
    let p = SpaceTimePoint::new(vec![0.0], 0.5).unwrap();
    let c = classify_point(dw.as_ref(), &p, &opts).unwrap();
    assert_eq!(c.label, StratumLabel::Sigma);
    assert!(matches!(
        gradient_u(dw.as_ref(), &p, &tol, &budget),
        Ok(GradientVerdict::Nondifferentiable)
    ));

    // and once the ball swallows both well bottoms, every minimizer carries
    // a zero gradient: differentiable with more than one minimizer
    let p = SpaceTimePoint::new(vec![0.0], 1.4).unwrap();
    let c = classify_point(dw.as_ref(), &p, &opts).unwrap();
    assert_eq!(c.label, StratumLabel::Smooth);
    assert!(c.diagnostics.minimizer_count >= 2);
    match gradient_u(dw.as_ref(), &p, &tol, &budget).unwrap() {
        GradientVerdict::Differentiable(du) => {
            assert_eq!(du.spatial, vec![0.0]);
            assert_eq!(du.time, 0.0);
        }
        _ => panic!("all-zero-gradient minimizers must be differentiable"),
    }

    // P0 reports differentiable-with-zero-gradient on its cone
    let par = eikonal::field::catalog::lookup("quadratic_bowl", 1, &Default::default()).unwrap();
    let p = SpaceTimePoint::new(vec![-1.2], 1.2).unwrap();
    let c = classify_point(par.as_ref(), &p, &opts).unwrap();
    assert_eq!(c.label, StratumLabel::P0);
    match gradient_u(par.as_ref(), &p, &tol, &budget).unwrap() {
        GradientVerdict::Differentiable(du) => {
            assert_eq!(du.spatial, vec![0.0]);
            assert_eq!(du.time, 0.0);
        }
        _ => panic!("P0 point must be differentiable"),
    }

    // T1 reports differentiable with the minimizer's gradient
    let saddle = eikonal::field::catalog::lookup("saddle", 2, &Default::default()).unwrap();
    let p = SpaceTimePoint::new(vec![2.0, 0.0], 1.0).unwrap();
    let c = classify_point(saddle.as_ref(), &p, &opts).unwrap();
    assert_eq!(c.label, StratumLabel::T1);
    assert!(matches!(
        gradient_u(saddle.as_ref(), &p, &tol, &budget),
        Ok(GradientVerdict::Differentiable(_))
    ));
}

/// Sigma points carry at least two minimizer representatives in their
/// diagnostics; T1 points carry a vanishing determinant.
#[test]
fn diagnostics_support_the_labels() {
    let opts = ClassifyOptions::default();
    let bowl = eikonal::field::catalog::lookup("concave_bowl", 2, &Default::default()).unwrap();
    let c = classify_point(
        bowl.as_ref(),
        &SpaceTimePoint::new(vec![0.0, 0.0], 1.0).unwrap(),
        &opts,
    )
    .unwrap();
    assert_eq!(c.label, StratumLabel::Sigma);
    assert!(c.diagnostics.minimizer_count >= 2);
    assert!(c.diagnostics.gradient_value_count >= 2);

    let saddle = eikonal::field::catalog::lookup("saddle", 2, &Default::default()).unwrap();
    let c = classify_point(
        saddle.as_ref(),
        &SpaceTimePoint::new(vec![2.0, 0.0], 1.0).unwrap(),
        &opts,
    )
    .unwrap();
    assert_eq!(c.label, StratumLabel::T1);
    let det = c.diagnostics.det_xy.unwrap();
    assert!(det.abs() <= 1e-6 * (1.0 + det.abs()));
    // and smooth points on the same characteristic have det bounded away
    let c = classify_point(
        saddle.as_ref(),
        &SpaceTimePoint::new(vec![1.5, 0.0], 0.5).unwrap(),
        &opts,
    )
    .unwrap();
    assert_eq!(c.label, StratumLabel::Smooth);
    assert!(c.diagnostics.det_xy.unwrap() > 0.4);
}
