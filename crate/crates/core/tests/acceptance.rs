//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (visible with `cargo test --test acceptance
//! -- --nocapture`).

use noether_calc::a_operator::{random_compact, random_fredholm_pair, AOperator, TailDescriptor};
use noether_calc::base_space::{make_sequence_space, AlgebraElement};
use noether_calc::compactness::{
    is_adjointable_compact, is_compact, scaling_study, tail_norm_profile, StudyVerdict, VerdictKind,
};
use noether_calc::fredholm::{
    check_parametrix, decompose_fredholm, decompose_id_plus_k, index, index_external,
    inner_to_external,
};
use noether_calc::gallery;
use noether_calc::numerics::{self, Complex64, ComplexMatrix};
use noether_calc::topologies::{
    self, f_subspace_member, im_member, pointwise_member, NetVerdict, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion(number: usize, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {number} ({name}): PASS"),
        Err(e) => {
            println!("criterion {number} ({name}): FAIL - {e}");
            panic!("criterion {number} ({name}) failed: {e}");
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

#[test]
fn criterion_1_tail_criterion_exactness() {
    criterion(1, "tail-criterion exactness", || {
        let space = make_sequence_space(2);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for trial in 0..200 {
            let support = rng.random_range(1..=64);
            let k = random_compact(&space, support, rng.random_range(0.1..4.0), &mut rng);
            let s = k.support();
            let qs = AOperator::tail_projector(space.clone(), s);
            let qk = qs.compose(&k).map_err(|e| e.to_string())?;
            let norm = qk.op_norm();
            ensure(
                norm.hi <= 1e-12,
                format!("trial {trial}: |q_s K| = {:e} above 1e-12", norm.hi),
            )?;
            let verdict = is_compact(&k, 1e-8, s + 4);
            match verdict.kind {
                VerdictKind::Compact { witness } => ensure(
                    witness <= s,
                    format!("trial {trial}: witness {witness} above support {s}"),
                )?,
                other => return Err(format!("trial {trial}: expected Compact, got {other:?}")),
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_2_eq50_reproduction() {
    criterion(2, "eq50 reproduction", || {
        let levels = [8usize, 16, 32, 64];
        let study = scaling_study(|m| gallery::make_eq50(m).operator, &levels, 1e-8)
            .map_err(|e| e.to_string())?;
        match study.verdict {
            StudyVerdict::Escaping { floor } => ensure(
                (floor - 1.0).abs() <= 1e-12,
                format!("escaping floor {floor} not 1 within 1e-12"),
            )?,
            other => return Err(format!("expected Escaping, got {other:?}")),
        }
        for m in levels {
            let fam = gallery::make_eq50(m);
            let family = fam.family();
            let strong = topologies::family_continuity(&family, Topology::Strong, 1e-6)
                .map_err(|e| e.to_string())?;
            ensure(
                strong.overall == NetVerdict::Continuous,
                format!("M={m}: strong verdict {:?}", strong.overall),
            )?;
            let f_diag = topologies::family_continuity(&fam.shifted_family(), Topology::F, 0.5)
                .map_err(|e| e.to_string())?;
            match f_diag.overall {
                NetVerdict::Discontinuous { bound } => ensure(
                    (bound - 1.0).abs() <= 1e-12,
                    format!("M={m}: F bound {bound} not 1"),
                )?,
                other => return Err(format!("M={m}: expected F Discontinuous, got {other:?}")),
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_3_eq_aa_reproduction() {
    criterion(3, "eqAA reproduction", || {
        for m in [8usize, 16, 32, 64] {
            let fam = gallery::make_eq_aa(m);
            let k = &fam.operator;
            let verdict = is_compact(k, 1e-8, m + 4);
            ensure(
                verdict.kind == VerdictKind::Compact { witness: 1 },
                format!("M={m}: compactness verdict {:?}", verdict.kind),
            )?;
            // right tails keep norm one over every proper cut
            let adj = is_adjointable_compact(k, 1e-8, m - 1);
            match adj.kind {
                VerdictKind::NotCompactAtScale { bound } => ensure(
                    (bound - 1.0).abs() <= 1e-12,
                    format!("M={m}: |K q_m| floor {bound} not 1"),
                )?,
                other => return Err(format!("M={m}: expected NotCompactAtScale, got {other:?}")),
            }
            let profile = tail_norm_profile(k, 4.min(m - 1));
            for (i, e) in profile.kq_norms.iter().enumerate().skip(1) {
                ensure(
                    (e.hi - 1.0).abs() <= 1e-12 && (e.lo - 1.0).abs() <= 1e-12,
                    format!("M={m}: |K q_{i}| = [{},{}] not 1", e.lo, e.hi),
                )?;
            }
            let family = fam.family();
            let uniform = topologies::family_continuity(&family, Topology::Uniform, 1e-6)
                .map_err(|e| e.to_string())?;
            match uniform.overall {
                NetVerdict::Discontinuous { bound } => ensure(
                    bound >= 1.0 - 1e-12,
                    format!("M={m}: uniform bound {bound} below 1"),
                )?,
                other => {
                    return Err(format!(
                        "M={m}: expected uniform Discontinuous, got {other:?}"
                    ))
                }
            }
            let im = topologies::family_continuity(&family, Topology::Im, 1e-6)
                .map_err(|e| e.to_string())?;
            ensure(
                im.overall == NetVerdict::Continuous,
                format!("M={m}: IM verdict {:?}", im.overall),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_4_ldu_factorization() {
    criterion(4, "LDU factorization", || {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        for trial in 0..100 {
            let space = make_sequence_space(rng.random_range(2..5));
            let support = rng.random_range(1..7);
            let norm = rng.random_range(0.1..3.0);
            let k = random_compact(&space, support, norm, &mut rng);
            let dec = decompose_id_plus_k(&k, 0.9).map_err(|e| e.to_string())?;
            let ldu_residual = dec.residuals.ldu.expect("id+K route records it");
            ensure(
                ldu_residual <= 1e-10,
                format!("trial {trial}: LDU residual {ldu_residual:e}"),
            )?;
            let factors = dec.ldu.as_ref().expect("id+K route keeps factors");
            let inv_norm = factors.f1_inverse.op_norm().hi;
            ensure(
                inv_norm <= factors.neumann_bound + 1e-8,
                format!(
                    "trial {trial}: |F1^-1| = {inv_norm} above Neumann bound {}",
                    factors.neumann_bound
                ),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_5_projector_pipeline() {
    criterion(5, "projector pipeline", || {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        for trial in 0..50 {
            let space = make_sequence_space(rng.random_range(2..5));
            let offset = rng.random_range(-2..=2i64);
            let (f, g) = random_fredholm_pair(&space, offset, rng.random_range(1..4), &mut rng);
            let dec = decompose_fredholm(&f, &g, 0.9, 1e-8).map_err(|e| e.to_string())?;
            let proj = dec.projector.as_ref().expect("pipeline records projector");
            ensure(
                proj.idempotency_residual <= 1e-10,
                format!("trial {trial}: |P^2 - P| = {:e}", proj.idempotency_residual),
            )?;
            ensure(
                dec.residuals.lower_left <= 1e-10,
                format!(
                    "trial {trial}: lower-left block {:e}",
                    dec.residuals.lower_left
                ),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_6_index_invariance() {
    criterion(6, "index invariance", || {
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        // inner vs external agreement, exactly, on 50 instances
        for trial in 0..50 {
            let space = make_sequence_space(rng.random_range(2..5));
            let offset = rng.random_range(-2..=2i64);
            let (f, g) = random_fredholm_pair(&space, offset, rng.random_range(1..4), &mut rng);
            let dec = decompose_fredholm(&f, &g, 0.9, 1e-8).map_err(|e| e.to_string())?;
            let inner_ix = index(&dec).map_err(|e| e.to_string())?;
            let ext = inner_to_external(&dec).map_err(|e| e.to_string())?;
            let ext_ix = index_external(&ext).map_err(|e| e.to_string())?;
            ensure(
                inner_ix == ext_ix,
                format!("trial {trial}: inner and external indices differ"),
            )?;
        }
        // compact perturbations preserve the index, exactly
        for trial in 0..50 {
            let space = make_sequence_space(rng.random_range(2..5));
            let offset = rng.random_range(-2..=2i64);
            let (f, g) = random_fredholm_pair(&space, offset, 3, &mut rng);
            let k = random_compact(&space, rng.random_range(1..5), 10.0, &mut rng);
            let fk = f.add(&k).map_err(|e| e.to_string())?;
            let report = check_parametrix(&fk, &g, 1e-8).map_err(|e| e.to_string())?;
            ensure(
                report.accepted,
                format!("trial {trial}: F+K lost its parametrix"),
            )?;
            let base = index(&decompose_fredholm(&f, &g, 0.9, 1e-8).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let pert = index(&decompose_fredholm(&fk, &g, 0.9, 1e-8).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            ensure(
                base == pert,
                format!("trial {trial}: index moved under a compact perturbation"),
            )?;
        }
        // the shift has index +1 at every point and truncation
        for m in 8..=64usize {
            let space = make_sequence_space(m);
            let up = AOperator::shift(space.clone(), 1);
            let down = AOperator::shift(space, -1);
            let dec = decompose_fredholm(&up, &down, 0.9, 1e-8).map_err(|e| e.to_string())?;
            let ix = index(&dec).map_err(|e| e.to_string())?;
            ensure(
                ix.is_constant(1),
                format!("truncation {m}: shift index is not +1 everywhere"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_7_topology_order_properties() {
    criterion(7, "topology order properties", || {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        // ball inclusion: all three oracles accept with R = id admissible
        for trial in 0..100 {
            let dim = rng.random_range(2..10);
            let a = numerics::random_matrix(dim, dim, &mut rng);
            let eps = rng.random_range(1e-4..1e-1);
            let bump = numerics::random_matrix(dim, dim, &mut rng);
            let scale = 0.5 * eps / numerics::spectral_norm(&bump).max(1e-12);
            let b = a.add(&bump.scale(Complex64::new(scale, 0.0))).unwrap();

            let vectors: Vec<Vec<Complex64>> = (0..3)
                .map(|_| numerics::random_unit_vector(dim, &mut rng))
                .collect();
            let v1 = pointwise_member(&b, &a, eps, &vectors).map_err(|e| e.to_string())?;
            ensure(
                v1.is_member(),
                format!("trial {trial}: pointwise ball failed"),
            )?;

            let d = rng.random_range(1..dim);
            let v_basis = ComplexMatrix::from_fn(dim, d, |i, j| {
                if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let v2 = f_subspace_member(&b, &a, eps, &v_basis).map_err(|e| e.to_string())?;
            ensure(
                v2.is_member(),
                format!("trial {trial}: F-subspace ball failed"),
            )?;

            let s = ComplexMatrix::identity(dim).scale(Complex64::new(2.0, 0.0));
            let v3 =
                im_member(&b, &a, eps, &s, rng.random_range(0..dim)).map_err(|e| e.to_string())?;
            ensure(v3.is_member(), format!("trial {trial}: IM ball failed"))?;
        }
        // closed-form IM witness has residual at most 1e-12 whenever the
        // invertibility thresholds pass
        for trial in 0..100 {
            let dim = rng.random_range(2..10);
            let b = numerics::random_matrix(dim, dim, &mut rng).scale(Complex64::new(0.4, 0.0));
            let k = numerics::random_matrix(dim, dim, &mut rng).scale(Complex64::new(0.4, 0.0));
            let s = ComplexMatrix::identity(dim).scale(Complex64::new(2.0, 0.0));
            let n = rng.random_range(0..=dim);
            // |Q_n B| <= 0.4 sqrt(dim) < 2 = sigma_min(S): thresholds pass
            let v = im_member(&b, &k, 1e-6, &s, n).map_err(|e| e.to_string())?;
            match v.kind {
                topologies::MembershipKind::Member { residual, .. } => ensure(
                    residual <= 1e-12,
                    format!("trial {trial}: closed-form residual {residual:e}"),
                )?,
                other => return Err(format!("trial {trial}: expected Member, got {other:?}")),
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_8_fredprime_strictness() {
    criterion(8, "pair-class strictness witness", || {
        for m in [16usize, 64] {
            let report = gallery::fredprime_compare(m, 1e-6).map_err(|e| e.to_string())?;
            ensure(
                report.defects_compact,
                format!("M={m}: defect operators not accepted compact"),
            )?;
            ensure(
                report.im_route_ok,
                format!("M={m}: IM route rejected the pair"),
            )?;
            ensure(
                !report.uniform_route_ok,
                format!("M={m}: uniform route unexpectedly accepted the pair"),
            )?;
            match report.compact_part_uniform {
                NetVerdict::Discontinuous { bound } => ensure(
                    bound >= 1.0 - 1e-12,
                    format!("M={m}: uniform failure bound {bound} below 1"),
                )?,
                other => {
                    return Err(format!(
                        "M={m}: compact part should be uniform-discontinuous, got {other:?}"
                    ))
                }
            }
            ensure(
                report.index.iter().all(|&z| z == 0),
                format!("M={m}: index of id + K is not 0"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_9_e_d_round_trip() {
    criterion(9, "E/D round trip", || {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        for trial in 0..100 {
            let space = make_sequence_space(rng.random_range(2..5));
            let support = rng.random_range(0..5);
            let offset = rng.random_range(-2..=2i64);
            // dyadic-grid entries keep the corner arithmetic exact
            let scale = AlgebraElement::new(
                space.clone(),
                numerics::random_dyadic_matrix(1, space.len(), &mut rng)
                    .entries()
                    .to_vec(),
            )
            .unwrap();
            let blocks = (0..space.len())
                .map(|_| numerics::random_dyadic_matrix(support, support, &mut rng))
                .collect();
            let op = AOperator::new(space.clone(), TailDescriptor { scale, offset }, blocks)
                .map_err(|e| e.to_string())?;
            let dim = op.support() + op.offset().unsigned_abs() as usize + rng.random_range(1..4);
            let family = op.to_family(dim).map_err(|e| e.to_string())?;
            let back =
                AOperator::from_family(&family, op.tail().clone()).map_err(|e| e.to_string())?;
            ensure(back == op, format!("trial {trial}: E(D(T)) differs from T"))?;
            let family2 = back.to_family(dim).map_err(|e| e.to_string())?;
            ensure(
                family2 == family,
                format!("trial {trial}: D(E(f)) differs from f"),
            )?;
        }
        Ok(())
    });
}
