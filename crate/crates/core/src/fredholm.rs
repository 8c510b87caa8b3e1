//! Noether decompositions of Fredholm operators and the index.
//!
//! Two construction routes feed one decomposition type. For id + K with K
//! accepted compact, a cut m with |q_m K q_m| below the margin makes the
//! tail-side corner invertible and the block LDU factorization splits the
//! operator into an isomorphism between graph subspaces and a finite
//! corner. For a general parametrix pair (F, G), the composite GF is id
//! plus compact, its decomposition yields an invertible tail part K1, and
//! P = F K1^-1 q G is an idempotent whose image/kernel split the codomain.
//!
//! The index of a decomposition is `[N2] - [N1]`, the per-point rank of the
//! codomain complement minus the rank of the domain complement, realized
//! as an integer function on X that must be constant along every net. This
//! is the negative of the classical analytic index dim ker - dim coker.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::a_operator::{AOperator, Enclosure};
use crate::base_space::SequentialSpace;
use crate::compactness::{self, CompactnessVerdict, TailNormProfile, VerdictKind};
use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, DEFAULT_INVERT_TOL};

/// Default margin for the cut search: |q_m K q_m| must come under this,
/// strictly below one.
pub const DEFAULT_MARGIN: f64 = 0.9;

const IDENTITY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ParametrixReport {
    pub defect_fg: CompactnessVerdict,
    pub defect_gf: CompactnessVerdict,
    pub accepted: bool,
}

impl ParametrixReport {
    pub fn to_json(&self) -> Value {
        json!({
            "defect_fg": self.defect_fg.to_json(),
            "defect_gf": self.defect_gf.to_json(),
            "accepted": self.accepted,
        })
    }
}

/// Runs the compactness oracle on both defects id - FG and id - GF.
pub fn check_parametrix(f: &AOperator, g: &AOperator, eps: f64) -> Result<ParametrixReport> {
    let id = AOperator::identity(f.space().clone());
    let defect_fg = defect_verdict(&id, &f.compose(g)?, eps);
    let defect_gf = defect_verdict(&id, &g.compose(f)?, eps);
    let accepted = defect_fg.is_compact() && defect_gf.is_compact();
    Ok(ParametrixReport {
        defect_fg,
        defect_gf,
        accepted,
    })
}

fn defect_verdict(id: &AOperator, product: &AOperator, eps: f64) -> CompactnessVerdict {
    match id.sub(product) {
        Ok(defect) => compactness::is_compact(&defect, eps, compactness::default_m_max(&defect)),
        // a defect with a genuine shift tail is never compact
        Err(_) => CompactnessVerdict {
            kind: VerdictKind::NotCompactAtScale {
                bound: f64::INFINITY,
            },
            profile: TailNormProfile {
                m_values: vec![],
                qk_norms: vec![],
                qkq_norms: vec![],
                kq_norms: vec![],
            },
        },
    }
}

#[derive(Debug, Clone)]
pub struct LduFactors {
    pub l: AOperator,
    pub d: AOperator,
    pub u: AOperator,
    /// The globally invertible representative id + q_m K q_m of the
    /// tail-side isomorphism.
    pub f1: AOperator,
    pub f1_inverse: AOperator,
    pub qkq_norm: Enclosure,
    /// 1 / (1 - |q_m K q_m|), the a-priori bound on |F1^-1|.
    pub neumann_bound: f64,
}

#[derive(Debug, Clone)]
pub struct ProjectorData {
    pub p: AOperator,
    pub idempotency_residual: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DecompositionResiduals {
    pub ldu: Option<f64>,
    pub projector: Option<f64>,
    pub lower_left: f64,
}

/// Splitting of domain and codomain into an isomorphism part plus finite
/// complements, with per-point bases, projectors and restricted blocks.
#[derive(Debug, Clone)]
pub struct NoetherDecomposition {
    space: Arc<SequentialSpace>,
    /// The tail cut used by the construction, when one was used.
    pub m_split: Option<usize>,
    /// Materialized domain and codomain corner dimensions.
    pub d_dom: usize,
    pub d_cod: usize,
    /// Per-point ranks of the finite complements N1 (domain) and N2
    /// (codomain).
    pub n1_dims: Vec<usize>,
    pub n2_dims: Vec<usize>,
    pub basis_m1: Vec<ComplexMatrix>,
    pub basis_n1: Vec<ComplexMatrix>,
    pub basis_m2: Vec<ComplexMatrix>,
    pub basis_n2: Vec<ComplexMatrix>,
    /// Per-point projectors onto M1 along N1 and onto M2 along N2.
    pub proj_m1: Vec<ComplexMatrix>,
    pub proj_m2: Vec<ComplexMatrix>,
    /// Per-point matrix of the restricted isomorphism F1: M1 -> M2 in the
    /// decomposition bases, with its smallest singular value across points.
    pub iso: Vec<ComplexMatrix>,
    pub iso_sigma_min: f64,
    /// Per-point off-diagonal block F2 (N1 -> M2 coordinates) and corner
    /// block F4 (N1 -> N2 coordinates).
    pub off_diagonal: Vec<ComplexMatrix>,
    pub corner: Vec<ComplexMatrix>,
    /// Materialized operator, d_cod x d_dom per point.
    pub f_rect: Vec<ComplexMatrix>,
    pub operator: Option<AOperator>,
    pub ldu: Option<LduFactors>,
    pub projector: Option<ProjectorData>,
    pub residuals: DecompositionResiduals,
}

impl NoetherDecomposition {
    pub fn space(&self) -> &Arc<SequentialSpace> {
        &self.space
    }

    pub fn summary_json(&self) -> Value {
        let points = self.space.points();
        let dims: serde_json::Map<String, Value> = points
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                (
                    p.clone(),
                    json!({"N1": self.n1_dims[pi], "N2": self.n2_dims[pi]}),
                )
            })
            .collect();
        let index_json = match index(self) {
            Ok(ix) => ix.to_json(),
            Err(_) => Value::Null,
        };
        json!({
            "m_split": self.m_split,
            "dims": dims,
            "index": index_json,
            "residuals": {
                "ldu": self.residuals.ldu,
                "projector": self.residuals.projector,
                "lower_left": self.residuals.lower_left,
            },
        })
    }
}

/// Per-point coordinates of f against the bases: returns (iso, off_diag,
/// corner, lower_left_norm) where the splitting follows basis_m2 | basis_n2
/// columns and basis_m1 | basis_n1 columns.
#[allow(clippy::type_complexity)]
fn restricted_blocks(
    f_rect: &ComplexMatrix,
    basis_m1: &ComplexMatrix,
    basis_n1: &ComplexMatrix,
    basis_m2: &ComplexMatrix,
    basis_n2: &ComplexMatrix,
    tol: f64,
) -> Result<(ComplexMatrix, ComplexMatrix, ComplexMatrix, f64)> {
    let cod = basis_m2.hstack(basis_n2)?;
    let m2_rank = basis_m2.cols();
    let image_m1 = f_rect.mul(basis_m1)?;
    let image_n1 = f_rect.mul(basis_n1)?;
    let coords_m1 = numerics::solve_fast(&cod, &image_m1, tol)?;
    let coords_n1 = numerics::solve_fast(&cod, &image_n1, tol)?;
    let iso = coords_m1.sub_matrix(0, m2_rank, 0, coords_m1.cols());
    let lower_left = numerics::spectral_norm(&coords_m1.sub_matrix(
        m2_rank,
        coords_m1.rows(),
        0,
        coords_m1.cols(),
    ));
    let off_diag = coords_n1.sub_matrix(0, m2_rank, 0, coords_n1.cols());
    let corner = coords_n1.sub_matrix(m2_rank, coords_n1.rows(), 0, coords_n1.cols());
    Ok((iso, off_diag, corner, lower_left))
}

fn oblique_projector(
    range: &ComplexMatrix,
    complement: &ComplexMatrix,
    tol: f64,
) -> Result<ComplexMatrix> {
    let n = range.rows();
    let combined = range.hstack(complement)?;
    let inv = numerics::inverse_fast(&combined, tol)?;
    let selector = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j && i < range.cols() {
            numerics::Complex64::new(1.0, 0.0)
        } else {
            numerics::Complex64::new(0.0, 0.0)
        }
    });
    combined.mul(&selector)?.mul(&inv)
}

fn head_columns(dim: usize, count: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, count, |i, j| {
        if i == j {
            numerics::Complex64::new(1.0, 0.0)
        } else {
            numerics::Complex64::new(0.0, 0.0)
        }
    })
}

fn tail_columns(dim: usize, m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim - m, |i, j| {
        if i == j + m {
            numerics::Complex64::new(1.0, 0.0)
        } else {
            numerics::Complex64::new(0.0, 0.0)
        }
    })
}

/// Decomposition of id + K through the block LDU factorization at the
/// smallest admissible cut.
///
/// The cut m is the smallest with |q_m K q_m| at most `margin`; then
/// F1 = id + q_m K q_m inverts with Neumann bound 1/(1 - margin), and
///
///   F = (id + F3 F1^-1) (F1 + Schur) (id + F1^-1 F2),
///
/// an exact identity in the operator class. The domain splits as the tail
/// subspace plus the graph of -F1^-1 F2 over the head, the codomain as the
/// graph of F3 F1^-1 over the tail plus the head.
pub fn decompose_id_plus_k(k: &AOperator, margin: f64) -> Result<NoetherDecomposition> {
    decompose_id_plus_k_with(k, margin, DEFAULT_INVERT_TOL)
}

fn decompose_id_plus_k_with(k: &AOperator, margin: f64, tol: f64) -> Result<NoetherDecomposition> {
    if !(0.0 < margin && margin < 1.0) {
        return Err(Error::InputParse("margin must lie in (0, 1)".into()));
    }
    let space = k.space().clone();
    let m_max = compactness::default_m_max(k);
    let evaluator = compactness::ProfileEvaluator::new(k, m_max);
    let (m, qkq_norm) = evaluator
        .first_below(compactness::TailKind::Qkq, margin)
        .ok_or(Error::NoCutFound { m_max })?;

    let id = AOperator::identity(space.clone());
    let kd = k.block_decompose(m)?;
    let f1 = id.add(&kd.f1)?;
    let g1 = f1.invert(tol)?;
    let w = g1.compose(&kd.f2)?; // G1 F2: head -> tail
    let v = kd.f3.compose(&g1)?; // F3 G1: tail -> head
    let l = id.add(&v)?;
    let u = id.add(&w)?;
    let f1_glob = AOperator::tail_projector(space.clone(), m).add(&kd.f1)?;
    let f4_full = AOperator::head_projector(space.clone(), m).add(&kd.f4)?;
    let schur = f4_full.sub(&v.compose(&kd.f2)?)?;
    let d_op = f1_glob.add(&schur)?;

    let target = id.add(k)?;
    let ldu_residual =
        l.compose(&d_op.compose(&u)?)?.sub(&target)?.op_norm().hi / target.op_norm().hi.max(1.0);
    let neumann_bound = 1.0 / (1.0 - qkq_norm.hi);

    let d = [k.support(), w.support(), v.support(), f1.support(), m]
        .into_iter()
        .max()
        .unwrap()
        + 2;

    let pi1 = AOperator::tail_projector(space.clone(), m).add(&w)?;
    let pi2 = AOperator::tail_projector(space.clone(), m).add(&v)?;

    let mut dec = NoetherDecomposition {
        space: space.clone(),
        m_split: Some(m),
        d_dom: d,
        d_cod: d,
        n1_dims: vec![m; space.len()],
        n2_dims: vec![m; space.len()],
        basis_m1: Vec::new(),
        basis_n1: Vec::new(),
        basis_m2: Vec::new(),
        basis_n2: Vec::new(),
        proj_m1: Vec::new(),
        proj_m2: Vec::new(),
        iso: Vec::new(),
        iso_sigma_min: f64::INFINITY,
        off_diagonal: Vec::new(),
        corner: Vec::new(),
        f_rect: Vec::new(),
        operator: Some(target.clone()),
        ldu: Some(LduFactors {
            l,
            d: d_op,
            u: u.clone(),
            f1,
            f1_inverse: g1,
            qkq_norm,
            neumann_bound,
        }),
        projector: None,
        residuals: DecompositionResiduals {
            ldu: Some(ldu_residual),
            projector: None,
            lower_left: 0.0,
        },
    };

    let identity_d = ComplexMatrix::identity(d);
    let head = head_columns(d, m);
    let tail = tail_columns(d, m);
    for pi in 0..space.len() {
        let w_mat = w.corner_at(pi, d, d);
        let v_mat = v.corner_at(pi, d, d);
        let basis_n1 = identity_d.sub(&w_mat)?.mul(&head)?;
        let basis_m2 = identity_d.add(&v_mat)?.mul(&tail)?;
        let f_rect = target.corner_at(pi, d, d);
        let (iso, off_diag, corner, lower_left) =
            restricted_blocks(&f_rect, &tail, &basis_n1, &basis_m2, &head, tol)?;
        let sigma = numerics::singular_values(&iso);
        if let Some(&smin) = sigma.last() {
            dec.iso_sigma_min = dec.iso_sigma_min.min(smin);
        }
        dec.residuals.lower_left = dec.residuals.lower_left.max(lower_left);
        dec.basis_m1.push(tail.clone());
        dec.basis_n1.push(basis_n1);
        dec.basis_m2.push(basis_m2);
        dec.basis_n2.push(head.clone());
        dec.proj_m1.push(pi1.corner_at(pi, d, d));
        dec.proj_m2.push(pi2.corner_at(pi, d, d));
        dec.iso.push(iso);
        dec.off_diagonal.push(off_diag);
        dec.corner.push(corner);
        dec.f_rect.push(f_rect);
    }
    Ok(dec)
}

/// Decomposition of a general Fredholm operator from a parametrix pair.
///
/// Pipeline: decompose GF = id + compact at a cut m1; the operator
/// P = F (id + q K q)^-1 q_m1 G is then an idempotent on the codomain
/// whose image receives F(M1) and whose kernel N2 is finite per point,
/// certified by rank counts of id - P.
pub fn decompose_fredholm(
    f: &AOperator,
    g: &AOperator,
    margin: f64,
    eps: f64,
) -> Result<NoetherDecomposition> {
    let tol = DEFAULT_INVERT_TOL;
    let report = check_parametrix(f, g, eps)?;
    if !report.accepted {
        return Err(Error::NotAParametrix(
            "a defect fails the compactness oracle".into(),
        ));
    }
    let space = f.space().clone();
    let id = AOperator::identity(space.clone());
    let gf = g.compose(f)?;
    let ktilde = gf.sub(&id)?;
    let dec1 = decompose_id_plus_k_with(&ktilde, margin, tol)?;
    let m1 = dec1.m_split.expect("id+K route sets the cut");
    let ldu = dec1.ldu.as_ref().expect("id+K route keeps factors");
    let g1 = ldu.f1_inverse.clone();
    let w1 = ldu.u.sub(&id)?; // G1 F2 of GF

    let p_op =
        f.compose(&g1.compose(&AOperator::tail_projector(space.clone(), m1).compose(g)?)?)?;
    let idempotency = p_op.compose(&p_op)?.sub(&p_op)?.op_norm().hi;
    if idempotency > IDENTITY_RESIDUAL_TOL {
        return Err(Error::ProjectorDefect {
            residual: idempotency,
        });
    }

    let kf = f.offset();
    let reach = |op: &AOperator| op.support() + op.offset().unsigned_abs() as usize;
    let d = [
        reach(&gf),
        reach(&ktilde),
        reach(&w1),
        reach(&p_op),
        reach(f),
        m1 + 1,
    ]
    .into_iter()
    .max()
    .unwrap()
        + kf.unsigned_abs() as usize
        + 2;
    let d_cod = (d as i64 + kf)
        .try_into()
        .map_err(|_| Error::ShapeMismatch("negative codomain corner".into()))?;

    let pi1 = AOperator::tail_projector(space.clone(), m1).add(&w1)?;
    let identity_dom = ComplexMatrix::identity(d);
    let identity_cod = ComplexMatrix::identity(d_cod);
    let head = head_columns(d, m1);
    let tail = tail_columns(d, m1);

    let mut dec = NoetherDecomposition {
        space: space.clone(),
        m_split: Some(m1),
        d_dom: d,
        d_cod,
        n1_dims: vec![m1; space.len()],
        n2_dims: Vec::new(),
        basis_m1: Vec::new(),
        basis_n1: Vec::new(),
        basis_m2: Vec::new(),
        basis_n2: Vec::new(),
        proj_m1: Vec::new(),
        proj_m2: Vec::new(),
        iso: Vec::new(),
        iso_sigma_min: f64::INFINITY,
        off_diagonal: Vec::new(),
        corner: Vec::new(),
        f_rect: Vec::new(),
        operator: Some(f.clone()),
        ldu: dec1.ldu.clone(),
        projector: Some(ProjectorData {
            p: p_op.clone(),
            idempotency_residual: idempotency,
        }),
        residuals: DecompositionResiduals {
            ldu: dec1.residuals.ldu,
            projector: Some(idempotency),
            lower_left: 0.0,
        },
    };

    for pi in 0..space.len() {
        let w_mat = w1.corner_at(pi, d, d);
        let basis_n1 = identity_dom.sub(&w_mat)?.mul(&head)?;
        let p_mat = p_op.corner_at(pi, d_cod, d_cod);
        let basis_m2 = numerics::idempotent_range_basis(&p_mat);
        let basis_n2 = numerics::idempotent_range_basis(&identity_cod.sub(&p_mat)?);
        if basis_m2.cols() + basis_n2.cols() != d_cod {
            return Err(Error::ProjectorDefect {
                residual: idempotency,
            });
        }
        let f_rect = f.corner_at(pi, d_cod, d);
        let (iso, off_diag, corner, lower_left) =
            restricted_blocks(&f_rect, &tail, &basis_n1, &basis_m2, &basis_n2, tol)?;
        let sigma = numerics::singular_values(&iso);
        if let Some(&smin) = sigma.last() {
            dec.iso_sigma_min = dec.iso_sigma_min.min(smin);
        }
        dec.residuals.lower_left = dec.residuals.lower_left.max(lower_left);
        dec.n2_dims.push(basis_n2.cols());
        dec.basis_m1.push(tail.clone());
        dec.basis_n1.push(basis_n1);
        dec.basis_m2.push(basis_m2);
        dec.basis_n2.push(basis_n2);
        dec.proj_m1.push(pi1.corner_at(pi, d, d));
        dec.proj_m2.push(p_mat);
        dec.iso.push(iso);
        dec.off_diagonal.push(off_diag);
        dec.corner.push(corner);
        dec.f_rect.push(f_rect);
    }
    Ok(dec)
}

/// Augmentation-by-finite-summands form of a decomposition: the enlarged
/// operator F0 = [[F, E2], [E3, 0]] is invertible per point.
#[derive(Debug, Clone)]
pub struct ExternalDecomposition {
    space: Arc<SequentialSpace>,
    pub d_dom: usize,
    pub d_cod: usize,
    /// Per-point ranks of the augmenting summands X1 and X2.
    pub x1_dims: Vec<usize>,
    pub x2_dims: Vec<usize>,
    pub f_mats: Vec<ComplexMatrix>,
    /// X1 -> codomain inclusion.
    pub e2: Vec<ComplexMatrix>,
    /// Domain -> X2 coordinate map.
    pub e3: Vec<ComplexMatrix>,
    pub f0: Vec<ComplexMatrix>,
    pub g0: Vec<ComplexMatrix>,
    /// Max over points of |F0 G0 - id| and |G0 F0 - id|.
    pub inverse_residual: f64,
}

impl ExternalDecomposition {
    pub fn space(&self) -> &Arc<SequentialSpace> {
        &self.space
    }

    /// Blocks of G0 = F0^-1: (G, G2, G3, G4).
    pub fn g_blocks(
        &self,
        pi: usize,
    ) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let g0 = &self.g0[pi];
        let d = self.d_dom;
        let dc = self.d_cod;
        (
            g0.sub_matrix(0, d, 0, dc),
            g0.sub_matrix(0, d, dc, g0.cols()),
            g0.sub_matrix(d, g0.rows(), 0, dc),
            g0.sub_matrix(d, g0.rows(), dc, g0.cols()),
        )
    }
}

/// Builds the external form from an inner decomposition by augmenting with
/// X1 = N2 and X2 = N1.
pub fn inner_to_external(dec: &NoetherDecomposition) -> Result<ExternalDecomposition> {
    let tol = DEFAULT_INVERT_TOL;
    let space = dec.space.clone();
    let mut ext = ExternalDecomposition {
        space: space.clone(),
        d_dom: dec.d_dom,
        d_cod: dec.d_cod,
        x1_dims: dec.n2_dims.clone(),
        x2_dims: dec.n1_dims.clone(),
        f_mats: dec.f_rect.clone(),
        e2: dec.basis_n2.clone(),
        e3: Vec::new(),
        f0: Vec::new(),
        g0: Vec::new(),
        inverse_residual: 0.0,
    };
    for pi in 0..space.len() {
        let n1 = dec.n1_dims[pi];
        let n2 = dec.n2_dims[pi];
        if dec.d_cod + n1 != dec.d_dom + n2 {
            return Err(Error::DegenerateExternal(format!(
                "complement ranks ({n1}, {n2}) do not square the augmented corner"
            )));
        }
        let combined = dec.basis_m1[pi].hstack(&dec.basis_n1[pi])?;
        let inv = numerics::inverse(&combined, tol)
            .map_err(|_| Error::DegenerateExternal("domain bases are not a direct sum".into()))?;
        let e3 = inv.sub_matrix(dec.d_dom - n1, dec.d_dom, 0, dec.d_dom);
        let top = dec.f_rect[pi].hstack(&dec.basis_n2[pi])?;
        let bottom = e3.hstack(&ComplexMatrix::zeros(n1, n2))?;
        let f0 = top.vstack(&bottom)?;
        let g0 = numerics::inverse(&f0, tol)
            .map_err(|_| Error::DegenerateExternal("augmented operator is singular".into()))?;
        let dim = f0.rows();
        let r1 = numerics::spectral_norm(&f0.mul(&g0)?.sub(&ComplexMatrix::identity(dim))?);
        let r2 = numerics::spectral_norm(&g0.mul(&f0)?.sub(&ComplexMatrix::identity(dim))?);
        ext.inverse_residual = ext.inverse_residual.max(r1).max(r2);
        ext.e3.push(e3);
        ext.f0.push(f0);
        ext.g0.push(g0);
    }
    Ok(ext)
}

/// Recovers an inner decomposition from an external one: the domain splits
/// along the kernel of E3, the codomain along the kernel of G3, and the
/// eight compatibility identities of the inverse are verified per point.
pub fn external_to_inner(ext: &ExternalDecomposition) -> Result<NoetherDecomposition> {
    let tol = DEFAULT_INVERT_TOL;
    let space = ext.space.clone();
    let mut dec = NoetherDecomposition {
        space: space.clone(),
        m_split: None,
        d_dom: ext.d_dom,
        d_cod: ext.d_cod,
        n1_dims: Vec::new(),
        n2_dims: Vec::new(),
        basis_m1: Vec::new(),
        basis_n1: Vec::new(),
        basis_m2: Vec::new(),
        basis_n2: Vec::new(),
        proj_m1: Vec::new(),
        proj_m2: Vec::new(),
        iso: Vec::new(),
        iso_sigma_min: f64::INFINITY,
        off_diagonal: Vec::new(),
        corner: Vec::new(),
        f_rect: ext.f_mats.clone(),
        operator: None,
        ldu: None,
        projector: None,
        residuals: DecompositionResiduals::default(),
    };
    for pi in 0..space.len() {
        let n1 = ext.x2_dims[pi];
        let n2 = ext.x1_dims[pi];
        let e3 = &ext.e3[pi];
        let rank_e3 = rank_of(e3, tol);
        if rank_e3 != n1 {
            return Err(Error::DegenerateExternal(format!(
                "E3 has rank {rank_e3}, expected {n1}: not onto the augmenting summand"
            )));
        }
        let (g, g2, g3, g4) = ext.g_blocks(pi);
        let rank_g3 = rank_of(&g3, tol);
        if rank_g3 != n2 {
            return Err(Error::DegenerateExternal(format!(
                "G3 has rank {rank_g3}, expected {n2}: not onto the augmenting summand"
            )));
        }
        verify_inverse_identities(&ext.f_mats[pi], &ext.e2[pi], e3, &g, &g2, &g3, &g4)?;

        let basis_m1 = numerics::null_space_basis(e3, tol);
        let basis_n1 = numerics::column_space_basis(&e3.adjoint(), tol);
        let basis_m2 = numerics::null_space_basis(&g3, tol);
        let basis_n2 = numerics::column_space_basis(&g3.adjoint(), tol);
        if basis_m1.cols() + basis_n1.cols() != ext.d_dom
            || basis_m2.cols() + basis_n2.cols() != ext.d_cod
        {
            return Err(Error::DegenerateExternal(
                "kernel and coimage do not split the corner".into(),
            ));
        }
        let (iso, off_diag, corner, lower_left) = restricted_blocks(
            &ext.f_mats[pi],
            &basis_m1,
            &basis_n1,
            &basis_m2,
            &basis_n2,
            tol,
        )?;
        let sigma = numerics::singular_values(&iso);
        let smin = sigma.last().copied().unwrap_or(f64::INFINITY);
        let smax = sigma.first().copied().unwrap_or(0.0);
        if !iso.is_empty() && (smax == 0.0 || smin <= tol * smax) {
            return Err(Error::DegenerateExternal(
                "restriction to the kernel side is not invertible".into(),
            ));
        }
        dec.iso_sigma_min = dec.iso_sigma_min.min(smin);
        dec.residuals.lower_left = dec.residuals.lower_left.max(lower_left);
        dec.proj_m1
            .push(oblique_projector(&basis_m1, &basis_n1, tol)?);
        dec.proj_m2
            .push(oblique_projector(&basis_m2, &basis_n2, tol)?);
        dec.n1_dims.push(n1);
        dec.n2_dims.push(n2);
        dec.basis_m1.push(basis_m1);
        dec.basis_n1.push(basis_n1);
        dec.basis_m2.push(basis_m2);
        dec.basis_n2.push(basis_n2);
        dec.iso.push(iso);
        dec.off_diagonal.push(off_diag);
        dec.corner.push(corner);
    }
    Ok(dec)
}

fn rank_of(m: &ComplexMatrix, tol: f64) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let sigma = numerics::singular_values(m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    sigma
        .iter()
        .filter(|&&s| smax > 0.0 && s > tol * smax)
        .count()
}

#[allow(clippy::too_many_arguments)]
fn verify_inverse_identities(
    f: &ComplexMatrix,
    e2: &ComplexMatrix,
    e3: &ComplexMatrix,
    g: &ComplexMatrix,
    g2: &ComplexMatrix,
    g3: &ComplexMatrix,
    g4: &ComplexMatrix,
) -> Result<()> {
    let d_cod = f.rows();
    let d_dom = f.cols();
    let n1 = e3.rows();
    let n2 = e2.cols();
    let checks = [
        // F G + E2 G3 = id on the codomain
        f.mul(g)?
            .add(&e2.mul(g3)?)?
            .sub(&ComplexMatrix::identity(d_cod))?,
        // F G2 + E2 G4 = 0
        f.mul(g2)?.add(&e2.mul(g4)?)?,
        // E3 G = 0
        e3.mul(g)?,
        // E3 G2 = id
        e3.mul(g2)?.sub(&ComplexMatrix::identity(n1))?,
        // G F + G2 E3 = id on the domain
        g.mul(f)?
            .add(&g2.mul(e3)?)?
            .sub(&ComplexMatrix::identity(d_dom))?,
        // G E2 = 0
        g.mul(e2)?,
        // G3 F + G4 E3 = 0
        g3.mul(f)?.add(&g4.mul(e3)?)?,
        // G3 E2 = id
        g3.mul(e2)?.sub(&ComplexMatrix::identity(n2))?,
    ];
    for (i, c) in checks.iter().enumerate() {
        let r = numerics::spectral_norm(c);
        if r > IDENTITY_RESIDUAL_TOL {
            return Err(Error::DegenerateExternal(format!(
                "inverse identity {} fails with residual {r:e}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// The index as an integer function on X, constant along every net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexElement {
    space: Arc<SequentialSpace>,
    values: Vec<i64>,
}

impl IndexElement {
    pub fn new(space: Arc<SequentialSpace>, values: Vec<i64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::ShapeMismatch(
                "one index value per point required".into(),
            ));
        }
        for (net_idx, net) in space.nets().iter().enumerate() {
            let limit_value = values[space.point_index(&net.limit).expect("valid net")];
            let tail_start = net.seq.len() / 2;
            for p in &net.seq[tail_start..] {
                let v = values[space.point_index(p).expect("valid net")];
                if v != limit_value {
                    return Err(Error::NotLocallyConstant { net: net_idx });
                }
            }
        }
        Ok(IndexElement { space, values })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn at(&self, point: &str) -> Option<i64> {
        self.space.point_index(point).map(|i| self.values[i])
    }

    pub fn is_constant(&self, v: i64) -> bool {
        self.values.iter().all(|&x| x == v)
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .space
            .points()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| (p.clone(), json!(v)))
            .collect();
        Value::Object(map)
    }
}

/// index = `[N2] - [N1]` per point.
pub fn index(dec: &NoetherDecomposition) -> Result<IndexElement> {
    let values = dec
        .n1_dims
        .iter()
        .zip(&dec.n2_dims)
        .map(|(&n1, &n2)| n2 as i64 - n1 as i64)
        .collect();
    IndexElement::new(dec.space.clone(), values)
}

/// index = `[X1] - [X2]` per point.
pub fn index_external(ext: &ExternalDecomposition) -> Result<IndexElement> {
    let values = ext
        .x1_dims
        .iter()
        .zip(&ext.x2_dims)
        .map(|(&x1, &x2)| x1 as i64 - x2 as i64)
        .collect();
    IndexElement::new(ext.space.clone(), values)
}
