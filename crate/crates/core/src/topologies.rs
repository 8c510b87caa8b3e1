//! Membership oracles for the F- and IM-topology subbases and
//! family-continuity diagnostics along nets.
//!
//! The existential over the invertible group is not exactly decidable, so
//! each oracle is sound rather than complete: Member comes with a verified
//! certificate R, NotMember comes with a kernel-vector certificate that
//! bounds the residual from below for every R, and everything else is
//! Inconclusive with the best residual found.
//!
//! Net diagnostics read a residual trace toward the net's limit. A
//! discontinuity verdict needs a persistent certified bound over the last
//! half of the net; a continuity verdict needs the trace to be settled
//! below eps by the net's end. Finite nets evidence limits, they do not
//! prove them.

use serde_json::{json, Value};

use crate::a_operator::OperatorFamily;
use crate::error::{Error, Result};
use crate::numerics::{self, Complex64, ComplexMatrix, DEFAULT_INVERT_TOL};

/// Relative slack for the non-increasing-tail check.
const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum MembershipKind {
    /// A verified certificate: R invertible, spectral residual below eps.
    Member {
        certificate: ComplexMatrix,
        residual: f64,
    },
    /// A unit vector v with Bv = 0 exactly and |Av| at least the bound:
    /// every R then has residual at least the bound.
    NotMember {
        bound: f64,
    },
    Inconclusive {
        best_residual: f64,
    },
}

#[derive(Debug, Clone)]
pub struct TopologyVerdict {
    pub kind: MembershipKind,
    /// What was asked, for report files.
    pub query: String,
}

impl TopologyVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self.kind, MembershipKind::Member { .. })
    }

    pub fn to_json(&self) -> Value {
        let kind = match &self.kind {
            MembershipKind::Member { residual, .. } => {
                json!({"kind": "Member", "residual": residual})
            }
            MembershipKind::NotMember { bound } => json!({"kind": "NotMember", "bound": bound}),
            MembershipKind::Inconclusive { best_residual } => {
                json!({"kind": "Inconclusive", "best_residual": best_residual})
            }
        };
        json!({"verdict": kind, "query": self.query})
    }
}

fn member(certificate: ComplexMatrix, residual: f64, query: String) -> TopologyVerdict {
    TopologyVerdict {
        kind: MembershipKind::Member {
            certificate,
            residual,
        },
        query,
    }
}

/// First subbase set of both topologies: closeness on a finite vector
/// battery, no R involved.
pub fn pointwise_member(
    b: &ComplexMatrix,
    a: &ComplexMatrix,
    eps: f64,
    vectors: &[Vec<Complex64>],
) -> Result<TopologyVerdict> {
    if b.rows() != a.rows() || b.cols() != a.cols() {
        return Err(Error::ShapeMismatch(format!(
            "pointwise_member: {}x{} vs {}x{}",
            b.rows(),
            b.cols(),
            a.rows(),
            a.cols()
        )));
    }
    let diff = b.sub(a)?;
    let mut worst: f64 = 0.0;
    for v in vectors {
        if v.len() != diff.cols() {
            return Err(Error::ShapeMismatch(
                "battery vector length must match the matrix".into(),
            ));
        }
        worst = worst.max(numerics::vec_norm(&diff.matvec(v)));
    }
    let query = format!("pointwise eps={eps} vectors={}", vectors.len());
    if worst < eps {
        Ok(member(ComplexMatrix::identity(b.rows()), worst, query))
    } else {
        // direct evaluation; the bound is certified
        Ok(TopologyVerdict {
            kind: MembershipKind::NotMember { bound: worst },
            query,
        })
    }
}

/// Unit vectors v with Bv = 0 exactly in floating point: zero columns and
/// numerical kernel vectors whose image happens to vanish bitwise.
fn exact_kernel_vectors(b: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    let mut out = Vec::new();
    for j in 0..b.cols() {
        let col = b.column(j);
        if col.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            let mut v = vec![Complex64::new(0.0, 0.0); b.cols()];
            v[j] = Complex64::new(1.0, 0.0);
            out.push(v);
        }
    }
    let ns = numerics::null_space_basis(b, 1e-13);
    for j in 0..ns.cols() {
        let v = ns.column(j);
        let img = b.matvec(&v);
        if img.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            out.push(v);
        }
    }
    out
}

fn kernel_certificate(b: &ComplexMatrix, a: &ComplexMatrix, eps: f64) -> Option<f64> {
    let mut bound: f64 = 0.0;
    for v in exact_kernel_vectors(b) {
        bound = bound.max(numerics::vec_norm(&a.matvec(&v)));
    }
    (bound >= eps).then_some(bound)
}

/// Second F-topology subbase set: existence of an invertible R with
/// R(V) contained in V and |RB - A| < eps.
///
/// The search minimizes the Frobenius norm over the subspace-preserving
/// class (block upper triangular in a basis adapted to V + V-perp) and
/// re-checks the spectral residual and invertibility of the minimizer.
pub fn f_subspace_member(
    b: &ComplexMatrix,
    a: &ComplexMatrix,
    eps: f64,
    v_basis: &ComplexMatrix,
) -> Result<TopologyVerdict> {
    let n = b.rows();
    if b.cols() != n || a.rows() != n || a.cols() != n {
        return Err(Error::ShapeMismatch(
            "f_subspace_member needs square matrices of one size".into(),
        ));
    }
    if v_basis.rows() != n || v_basis.cols() == 0 || v_basis.cols() >= n {
        return Err(Error::ShapeMismatch(
            "subspace basis must be n x d with 0 < d < n".into(),
        ));
    }
    let gram_defect = v_basis
        .adjoint()
        .mul(v_basis)?
        .sub(&ComplexMatrix::identity(v_basis.cols()))?;
    if numerics::spectral_norm(&gram_defect) > 1e-8 {
        return Err(Error::ShapeMismatch(
            "subspace basis columns must be orthonormal".into(),
        ));
    }
    let d = v_basis.cols();
    let query = format!("F-subspace dim={d} eps={eps}");

    // ball inclusion: R = id works whenever |B - A| < eps; the Frobenius
    // norm is a cheap certified upper bound for the spectral one
    let diff = b.sub(a)?;
    let direct_f = diff.frobenius_norm();
    if direct_f < eps {
        return Ok(member(ComplexMatrix::identity(n), direct_f, query));
    }

    // exactly-zero columns certify non-membership without any factorization
    if let Some(bound) = zero_column_certificate(b, a, eps) {
        return Ok(TopologyVerdict {
            kind: MembershipKind::NotMember { bound },
            query,
        });
    }

    // adapted unitary basis [V | V_perp]; leading-coordinate subspaces keep
    // the identity frame
    let (b_t, a_t, w) = if is_leading_basis(v_basis) {
        (b.clone(), a.clone(), None)
    } else {
        let v_perp = numerics::null_space_basis(&v_basis.adjoint(), 1e-12);
        let w = v_basis.hstack(&v_perp)?;
        (w.adjoint().mul(b)?, w.adjoint().mul(a)?, Some(w))
    };

    // top rows of R' are free, bottom rows are supported on the V-perp block
    let top = solve_rows(&b_t, &a_t.adjoint().sub_matrix(0, n, 0, d))?;
    let b_bottom = b_t.sub_matrix(d, n, 0, n);
    let bottom = solve_rows(&b_bottom, &a_t.adjoint().sub_matrix(0, n, d, n))?;

    let mut r_prime = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..n {
            r_prime.set(i, j, top.get(j, i).conj());
        }
    }
    for i in d..n {
        for j in d..n {
            r_prime.set(i, j, bottom.get(j - d, i - d).conj());
        }
    }
    let r = match &w {
        Some(w) => w.mul(&r_prime)?.mul(&w.adjoint())?,
        None => r_prime,
    };

    let residual = cheap_spectral(&r.mul(b)?.sub(a)?, eps);
    if residual < eps && numerics::certify_invertible(&r, DEFAULT_INVERT_TOL) {
        return Ok(member(r, residual, query));
    }
    // full kernel search before giving up
    if let Some(bound) = kernel_certificate(b, a, eps) {
        return Ok(TopologyVerdict {
            kind: MembershipKind::NotMember { bound },
            query,
        });
    }
    let direct = numerics::spectral_norm(&diff);
    if direct < eps {
        return Ok(member(ComplexMatrix::identity(n), direct, query));
    }
    Ok(TopologyVerdict {
        kind: MembershipKind::Inconclusive {
            best_residual: residual.min(direct),
        },
        query,
    })
}

/// Row-wise minimizer of |r M - a| over rows r supported on all of M's
/// rows: solves through the Gram fast path with an SVD fallback.
fn solve_rows(m_rows: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    let a = m_rows.adjoint();
    if a.rows() == a.cols() {
        if let Ok(x) = numerics::lu_solve(&a, rhs, 1e-10) {
            return Ok(x);
        }
    } else if a.rows() > a.cols() && a.cols() > 0 {
        // tall: normal equations, verified against the true least squares
        // only through the caller's post-hoc residual check
        let gram = a.adjoint().mul(&a)?;
        if let Ok(x) = numerics::lu_solve(&gram, &a.adjoint().mul(rhs)?, 1e-10) {
            return Ok(x);
        }
    }
    numerics::least_squares(&a, rhs)
}

/// Spectral norm when it is needed exactly, or the Frobenius bound when
/// that is already conclusive against eps.
fn cheap_spectral(m: &ComplexMatrix, eps: f64) -> f64 {
    let f = m.frobenius_norm();
    if f < eps {
        return f;
    }
    numerics::spectral_norm(m)
}

fn is_leading_basis(v: &ComplexMatrix) -> bool {
    for i in 0..v.rows() {
        for j in 0..v.cols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            if v.get(i, j) != Complex64::new(expect, 0.0) {
                return false;
            }
        }
    }
    true
}

fn zero_column_certificate(b: &ComplexMatrix, a: &ComplexMatrix, eps: f64) -> Option<f64> {
    let mut bound: f64 = 0.0;
    for j in 0..b.cols() {
        if b.column(j).iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            bound = bound.max(numerics::vec_norm(&a.column(j)));
        }
    }
    (bound >= eps).then_some(bound)
}

fn tail_kill(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        if i < n {
            Complex64::new(0.0, 0.0)
        } else {
            m.get(i, j)
        }
    })
}

/// One IM-topology subbase factor: existence of an invertible R with
/// |R(S + Q_n B) - (S + Q_n K)| < eps.
///
/// When both shifted operators pass the invertibility threshold the
/// closed-form certificate R = (S + Q_n K)(S + Q_n B)^-1 gives residual
/// zero; otherwise the oracle falls back to an unconstrained least-squares
/// search.
pub fn im_member(
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    eps: f64,
    s: &ComplexMatrix,
    n: usize,
) -> Result<TopologyVerdict> {
    im_check_shapes(b, k, s)?;
    im_member_unchecked(b, k, eps, s, n)
}

fn im_check_shapes(b: &ComplexMatrix, k: &ComplexMatrix, s: &ComplexMatrix) -> Result<()> {
    let dim = b.rows();
    if b.cols() != dim || k.rows() != dim || k.cols() != dim || s.rows() != dim || s.cols() != dim {
        return Err(Error::ShapeMismatch(
            "im_member needs square matrices of one size".into(),
        ));
    }
    if !numerics::certify_invertible(s, DEFAULT_INVERT_TOL) {
        return Err(Error::SingularS);
    }
    Ok(())
}

/// Body of [`im_member`] with the shape and S checks hoisted out, so a
/// battery sweep validates S once.
fn im_member_unchecked(
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    eps: f64,
    s: &ComplexMatrix,
    n: usize,
) -> Result<TopologyVerdict> {
    let dim = b.rows();
    let query = format!("IM n={n} eps={eps}");

    // ball inclusion with R = id, certified through the Frobenius bound:
    // |(S + Q_n B) - (S + Q_n K)| = |Q_n (B - K)|, no materialization needed
    let mut fro2 = 0.0;
    for i in n..dim {
        for j in 0..dim {
            fro2 += (b.get(i, j) - k.get(i, j)).norm_sqr();
        }
    }
    let direct_f = fro2.sqrt();
    if direct_f < eps {
        return Ok(member(ComplexMatrix::identity(dim), direct_f, query));
    }

    let b_shift = s.add(&tail_kill(b, n))?;
    let k_shift = s.add(&tail_kill(k, n))?;
    let diff = b_shift.sub(&k_shift)?;

    // closed-form certificate R = (S + Q_n K)(S + Q_n B)^-1
    if let Ok(b_inv) = numerics::inverse_fast(&b_shift, DEFAULT_INVERT_TOL) {
        let r = k_shift.mul(&b_inv)?;
        let residual = r.mul(&b_shift)?.sub(&k_shift)?.frobenius_norm();
        if residual < eps && numerics::certify_invertible(&r, DEFAULT_INVERT_TOL) {
            return Ok(member(r, residual, query));
        }
    }

    if let Some(bound) = kernel_certificate(&b_shift, &k_shift, eps) {
        return Ok(TopologyVerdict {
            kind: MembershipKind::NotMember { bound },
            query,
        });
    }

    // unconstrained least-squares fallback
    let r_adj = numerics::least_squares(&b_shift.adjoint(), &k_shift.adjoint())?;
    let r = r_adj.adjoint();
    let residual = cheap_spectral(&r.mul(&b_shift)?.sub(&k_shift)?, eps);
    let direct = numerics::spectral_norm(&diff);
    if direct < eps {
        return Ok(member(ComplexMatrix::identity(dim), direct, query));
    }
    if residual < eps && numerics::certify_invertible(&r, DEFAULT_INVERT_TOL) {
        Ok(member(r, residual, query))
    } else {
        Ok(TopologyVerdict {
            kind: MembershipKind::Inconclusive {
                best_residual: residual.min(direct),
            },
            query,
        })
    }
}

/// The all-n intersection of the IM subbase factors, at truncation scale:
/// Member only when every n in 0..=n_max is Member.
pub fn im_full_member(
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    eps: f64,
    s: &ComplexMatrix,
    n_max: usize,
) -> Result<TopologyVerdict> {
    im_check_shapes(b, k, s)?;
    im_full_member_unchecked(b, k, eps, s, n_max)
}

fn im_full_member_unchecked(
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    eps: f64,
    s: &ComplexMatrix,
    n_max: usize,
) -> Result<TopologyVerdict> {
    let query = format!("IM-full n_max={n_max} eps={eps}");
    let mut worst_residual: f64 = 0.0;
    let mut certificate = None;
    let mut inconclusive: Option<f64> = None;
    for n in 0..=n_max {
        let v = im_member_unchecked(b, k, eps, s, n)?;
        match v.kind {
            MembershipKind::Member {
                certificate: c,
                residual,
            } => {
                worst_residual = worst_residual.max(residual);
                if certificate.is_none() {
                    certificate = Some(c);
                }
            }
            MembershipKind::NotMember { bound } => {
                return Ok(TopologyVerdict {
                    kind: MembershipKind::NotMember { bound },
                    query,
                });
            }
            MembershipKind::Inconclusive { best_residual } => {
                inconclusive =
                    Some(inconclusive.map_or(best_residual, |x: f64| x.min(best_residual)));
            }
        }
    }
    if let Some(best) = inconclusive {
        return Ok(TopologyVerdict {
            kind: MembershipKind::Inconclusive {
                best_residual: best,
            },
            query,
        });
    }
    Ok(member(
        certificate.unwrap_or_else(|| ComplexMatrix::identity(b.rows())),
        worst_residual,
        query,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Uniform,
    Strong,
    F,
    Im,
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Topology::Uniform => "uniform",
            Topology::Strong => "strong",
            Topology::F => "F",
            Topology::Im => "IM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetVerdict {
    Continuous,
    Discontinuous { bound: f64 },
    Inconclusive { best_residual: f64 },
}

#[derive(Debug, Clone)]
pub struct NetDiagnostic {
    pub net_index: usize,
    pub verdict: NetVerdict,
    /// One residual per net position (worst over the battery).
    pub residual_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ContinuityDiagnostic {
    pub topology: Topology,
    pub per_net: Vec<NetDiagnostic>,
    pub overall: NetVerdict,
}

impl ContinuityDiagnostic {
    pub fn to_json(&self) -> Value {
        json!({
            "topology": self.topology.name(),
            "overall": crate::gallery::net_verdict_json(&self.overall),
            "nets": self.per_net.iter().map(|n| json!({
                "net": n.net_index,
                "verdict": crate::gallery::net_verdict_json(&n.verdict),
                "trace": n.residual_trace,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("net,position,residual\n");
        for n in &self.per_net {
            for (i, r) in n.residual_trace.iter().enumerate() {
                out.push_str(&format!("{},{},{:.17e}\n", n.net_index, i, r));
            }
        }
        out
    }
}

/// Verdict for one residual trace toward the net limit.
fn trace_verdict(trace: &[f64], eps: f64) -> NetVerdict {
    if trace.is_empty() {
        return NetVerdict::Continuous;
    }
    let tail_start = trace.len() / 2;
    let tail = &trace[tail_start..];
    let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if tail_min > eps {
        return NetVerdict::Discontinuous { bound: tail_min };
    }
    let tail_max = tail.iter().copied().fold(0.0, f64::max);
    let last = *trace.last().unwrap();
    let monotone = tail
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK) + 1e-14);
    if tail_max <= eps || (last <= eps && monotone) {
        NetVerdict::Continuous
    } else {
        NetVerdict::Inconclusive {
            best_residual: last,
        }
    }
}

/// Outcome of one membership query along a net.
enum PointOutcome {
    Member(f64),
    NotMember(f64),
    Inconclusive(f64),
}

/// Verdict for a trace of membership outcomes: a discontinuity needs
/// certified non-membership over the whole tail half, continuity needs
/// membership over the tail half.
fn membership_trace_verdict(outcomes: &[PointOutcome], eps: f64) -> NetVerdict {
    if outcomes.is_empty() {
        return NetVerdict::Continuous;
    }
    let tail = &outcomes[outcomes.len() / 2..];
    if tail.iter().all(|o| matches!(o, PointOutcome::NotMember(_))) {
        let bound = tail
            .iter()
            .map(|o| match o {
                PointOutcome::NotMember(b) => *b,
                _ => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min);
        if bound > eps {
            return NetVerdict::Discontinuous { bound };
        }
    }
    if tail.iter().all(|o| matches!(o, PointOutcome::Member(_))) {
        return NetVerdict::Continuous;
    }
    let best = outcomes
        .iter()
        .map(|o| match o {
            PointOutcome::Member(r) => *r,
            PointOutcome::NotMember(b) => *b,
            PointOutcome::Inconclusive(r) => *r,
        })
        .fold(f64::INFINITY, f64::min);
    NetVerdict::Inconclusive {
        best_residual: best,
    }
}

fn outcome_residual(o: &PointOutcome) -> f64 {
    match o {
        PointOutcome::Member(r) => *r,
        PointOutcome::NotMember(b) => *b,
        PointOutcome::Inconclusive(r) => *r,
    }
}

/// The strong-topology vector battery: the standard basis of the leading
/// half of the corner plus seeded random unit vectors supported on the
/// leading quarter. Battery vectors must be honest fixed vectors for this
/// truncation; probing with vectors indexed at the truncation edge asks
/// about net positions beyond the truncation.
fn strong_battery(dim: usize) -> Vec<Vec<Complex64>> {
    use rand::SeedableRng;
    let mut battery = Vec::new();
    let lead = dim.div_ceil(2).max(1);
    for j in 0..lead {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[j] = Complex64::new(1.0, 0.0);
        battery.push(v);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xA11CE);
    let supp = dim.div_ceil(4).max(1);
    for _ in 0..8 {
        let head = numerics::random_unit_vector(supp, &mut rng);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[..supp].copy_from_slice(&head);
        battery.push(v);
    }
    battery
}

/// Leading-coordinate subspaces of a small dimension grid.
fn f_battery(dim: usize) -> Vec<ComplexMatrix> {
    let mut dims: Vec<usize> = [1usize, 2, 4, 8]
        .iter()
        .copied()
        .filter(|&d| d < dim)
        .collect();
    dims.dedup();
    dims.iter()
        .map(|&d| {
            ComplexMatrix::from_fn(dim, d, |i, j| {
                if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

/// S battery for IM queries: id, 2 id, and a seeded well-conditioned
/// perturbation of 1.5 id.
fn im_battery(dim: usize) -> Vec<ComplexMatrix> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x51AB);
    let noise = numerics::random_matrix(dim, dim, &mut rng);
    let norm = numerics::spectral_norm(&noise).max(1e-12);
    let wc = ComplexMatrix::identity(dim)
        .scale(Complex64::new(1.5, 0.0))
        .add(&noise.scale(Complex64::new(0.25 / norm, 0.0)))
        .expect("same shape");
    vec![
        ComplexMatrix::identity(dim),
        ComplexMatrix::identity(dim).scale(Complex64::new(2.0, 0.0)),
        wc,
    ]
}

/// Net-by-net continuity diagnostics of an operator family in one of the
/// four topologies.
pub fn family_continuity(
    family: &OperatorFamily,
    topology: Topology,
    eps: f64,
) -> Result<ContinuityDiagnostic> {
    let space = family.space().clone();
    let dim = family.dim();
    let mut per_net = Vec::new();
    for (net_index, net) in space.nets().iter().enumerate() {
        let limit_idx = space.point_index(&net.limit).expect("net limit is a point");
        let limit = family.matrix_at(limit_idx);
        let seq_mats: Vec<&ComplexMatrix> = net
            .seq
            .iter()
            .map(|p| family.matrix_at(space.point_index(p).expect("net point")))
            .collect();

        let diag = match topology {
            Topology::Uniform => {
                let trace: Vec<f64> = seq_mats
                    .iter()
                    .map(|m| Ok(numerics::spectral_norm(&m.sub(limit)?)))
                    .collect::<Result<_>>()?;
                NetDiagnostic {
                    net_index,
                    verdict: trace_verdict(&trace, eps),
                    residual_trace: trace,
                }
            }
            Topology::Strong => {
                let battery = strong_battery(dim);
                let mut worst = NetVerdict::Continuous;
                let mut max_trace = vec![0.0; seq_mats.len()];
                for v in &battery {
                    let trace: Vec<f64> = seq_mats
                        .iter()
                        .map(|m| Ok(numerics::vec_norm(&m.sub(limit)?.matvec(v))))
                        .collect::<Result<_>>()?;
                    for (acc, r) in max_trace.iter_mut().zip(&trace) {
                        *acc = f64::max(*acc, *r);
                    }
                    worst = worse_of(worst, trace_verdict(&trace, eps));
                }
                NetDiagnostic {
                    net_index,
                    verdict: worst,
                    residual_trace: max_trace,
                }
            }
            Topology::F => {
                let battery = f_battery(dim);
                let outcomes = seq_mats
                    .iter()
                    .map(|m| {
                        let mut point = PointOutcome::Member(0.0);
                        for v in &battery {
                            let verdict = f_subspace_member(m, limit, eps, v)?;
                            point = combine_point(point, &verdict.kind);
                        }
                        Ok(point)
                    })
                    .collect::<Result<Vec<_>>>()?;
                NetDiagnostic {
                    net_index,
                    verdict: membership_trace_verdict(&outcomes, eps),
                    residual_trace: outcomes.iter().map(outcome_residual).collect(),
                }
            }
            Topology::Im => {
                let battery = im_battery(dim);
                for s in &battery {
                    im_check_shapes(limit, limit, s)?;
                }
                let n_max = dim.min(16);
                let outcomes = seq_mats
                    .iter()
                    .map(|m| {
                        let mut point = PointOutcome::Member(0.0);
                        for s in &battery {
                            let verdict = im_full_member_unchecked(m, limit, eps, s, n_max)?;
                            point = combine_point(point, &verdict.kind);
                        }
                        Ok(point)
                    })
                    .collect::<Result<Vec<_>>>()?;
                NetDiagnostic {
                    net_index,
                    verdict: membership_trace_verdict(&outcomes, eps),
                    residual_trace: outcomes.iter().map(outcome_residual).collect(),
                }
            }
        };
        per_net.push(diag);
    }
    let overall = per_net
        .iter()
        .map(|n| n.verdict.clone())
        .fold(NetVerdict::Continuous, worse_of);
    Ok(ContinuityDiagnostic {
        topology,
        per_net,
        overall,
    })
}

/// Battery aggregation at one net point: any certified non-membership
/// fails the point, any inconclusive taints it.
fn combine_point(acc: PointOutcome, v: &MembershipKind) -> PointOutcome {
    match (&acc, v) {
        (PointOutcome::NotMember(b), MembershipKind::NotMember { bound }) => {
            PointOutcome::NotMember(b.max(*bound))
        }
        (_, MembershipKind::NotMember { bound }) => PointOutcome::NotMember(*bound),
        (PointOutcome::NotMember(b), _) => PointOutcome::NotMember(*b),
        (PointOutcome::Inconclusive(r), MembershipKind::Member { residual, .. }) => {
            PointOutcome::Inconclusive(r.min(*residual))
        }
        (_, MembershipKind::Inconclusive { best_residual }) => {
            PointOutcome::Inconclusive(outcome_residual(&acc).min(*best_residual))
        }
        (PointOutcome::Member(r), MembershipKind::Member { residual, .. }) => {
            PointOutcome::Member(r.max(*residual))
        }
    }
}

fn worse_of(a: NetVerdict, b: NetVerdict) -> NetVerdict {
    use NetVerdict::*;
    match (a, b) {
        (Discontinuous { bound: x }, Discontinuous { bound: y }) => {
            Discontinuous { bound: x.max(y) }
        }
        (d @ Discontinuous { .. }, _) | (_, d @ Discontinuous { .. }) => d,
        (Inconclusive { best_residual: x }, Inconclusive { best_residual: y }) => Inconclusive {
            best_residual: x.min(y),
        },
        (i @ Inconclusive { .. }, _) | (_, i @ Inconclusive { .. }) => i,
        (Continuous, Continuous) => Continuous,
    }
}

#[derive(Debug, Clone)]
pub struct ConjugationReport {
    pub unitary_residual: f64,
    pub u_strong: ContinuityDiagnostic,
    pub u_inverse_strong: ContinuityDiagnostic,
    pub conjugated: OperatorFamily,
    pub conjugated_f: ContinuityDiagnostic,
}

/// Conjugates an F-continuous family by a strongly continuous unitary
/// family and diagnoses the result; the inverse family U^-1 = U^H is
/// checked strongly continuous as well.
pub fn conjugation_check(
    u_family: &OperatorFamily,
    f_family: &OperatorFamily,
    eps: f64,
) -> Result<ConjugationReport> {
    if u_family.space() != f_family.space() || u_family.dim() != f_family.dim() {
        return Err(Error::ShapeMismatch(
            "conjugation: families must share space and dimension".into(),
        ));
    }
    let dim = u_family.dim();
    let id = ComplexMatrix::identity(dim);
    let mut unitary_residual: f64 = 0.0;
    for pi in 0..u_family.space().len() {
        let u = u_family.matrix_at(pi);
        let defect = u.adjoint().mul(u)?.sub(&id)?;
        unitary_residual = unitary_residual.max(numerics::spectral_norm(&defect));
    }
    if unitary_residual > 1e-10 {
        return Err(Error::NotUnitary {
            residual: unitary_residual,
        });
    }
    let u_strong = family_continuity(u_family, Topology::Strong, eps)?;
    let u_inverse = u_family.map(|m| m.adjoint())?;
    let u_inverse_strong = family_continuity(&u_inverse, Topology::Strong, eps)?;
    let conjugated = OperatorFamily::from_fn(f_family.space().clone(), dim, |p| {
        let pi = f_family.space().point_index(p).expect("point");
        let u = u_family.matrix_at(pi);
        u.mul(f_family.matrix_at(pi))
            .and_then(|m| m.mul(&u.adjoint()))
            .expect("square matrices")
    })?;
    let conjugated_f = family_continuity(&conjugated, Topology::F, eps)?;
    Ok(ConjugationReport {
        unitary_residual,
        u_strong,
        u_inverse_strong,
        conjugated,
        conjugated_f,
    })
}
