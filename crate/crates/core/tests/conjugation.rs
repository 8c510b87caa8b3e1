//! Conjugating an F-continuous family by a strongly continuous unitary
//! family keeps it F-continuous, and the conjugated operator still admits
//! a decomposition.

use noether_calc::a_operator::{AOperator, OperatorFamily, TailDescriptor};
use noether_calc::fredholm::{decompose_id_plus_k, index};
use noether_calc::gallery::make_eq_aa;
use noether_calc::numerics::{Complex64, ComplexMatrix};
use noether_calc::topologies::{conjugation_check, NetVerdict};

#[test]
fn varying_phases_conjugation_keeps_decomposability() {
    let m = 8;
    let fam = make_eq_aa(m);
    let space = fam.space.clone();
    let dim = m;

    // diagonal phases that vary along the first half of the net and settle
    // exactly afterwards, so the truncated net witnesses the convergence
    let u_family = OperatorFamily::from_fn(space.clone(), dim, |p| {
        let step = p
            .strip_prefix("1/")
            .and_then(|s| s.parse::<i64>().ok())
            .unwrap_or(i64::MAX);
        let theta = if step <= (m as i64) / 2 {
            0.4 / step as f64
        } else {
            0.0
        };
        ComplexMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, theta * (i as f64 + 1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    })
    .unwrap();

    let shifted = fam.shifted_family();
    let report = conjugation_check(&u_family, &shifted, 1e-6).unwrap();
    assert!(report.unitary_residual <= 1e-12);
    assert_eq!(report.u_strong.overall, NetVerdict::Continuous);
    assert_eq!(report.u_inverse_strong.overall, NetVerdict::Continuous);
    assert_eq!(report.conjugated_f.overall, NetVerdict::Continuous);

    // the conjugated family is id + compact and decomposes with index 0
    let conj_op =
        AOperator::from_family(&report.conjugated, TailDescriptor::identity(space.clone()))
            .unwrap();
    let k = conj_op.sub(&AOperator::identity(space.clone())).unwrap();
    let dec = decompose_id_plus_k(&k, 0.9).unwrap();
    assert!(dec.residuals.ldu.unwrap() <= 1e-10);
    assert!(index(&dec).unwrap().is_constant(0));
}
