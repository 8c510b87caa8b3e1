//! The central operator representation: T = t * Shift^k + F, with t an
//! algebra element (the scalar tail), k a uniform coordinate offset, and F
//! a finite block per point of X.
//!
//! The class is closed under composition, sums of compatible tails,
//! inversion at offset zero, and corner projections, all of them exact: a
//! composition enlarges the finite block instead of truncating, so the
//! operator identities hold at desk scale with no discretization error.
//!
//! Sign conventions: the tail sends the basis vector e_j to t(x) e_{j+k},
//! with e_{j+k} = 0 whenever j + k < 1. Offsets are uniform over X; only
//! the scale varies from point to point.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::base_space::{algebra_norm, parse_complex, AlgebraElement, PointId, SequentialSpace};
use crate::error::{Error, Result};
use crate::hilbert_module::ModuleVector;
use crate::numerics::{self, Complex64, ComplexMatrix};

/// Tail behaviour outside every finite corner: the operator
/// e_j -> scale(x) * e_{j+offset}.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDescriptor {
    pub scale: AlgebraElement,
    pub offset: i64,
}

impl TailDescriptor {
    pub fn zero(space: Arc<SequentialSpace>) -> Self {
        TailDescriptor {
            scale: AlgebraElement::zero(space),
            offset: 0,
        }
    }

    pub fn identity(space: Arc<SequentialSpace>) -> Self {
        TailDescriptor {
            scale: AlgebraElement::one(space),
            offset: 0,
        }
    }

    pub fn shift(space: Arc<SequentialSpace>, offset: i64) -> Self {
        TailDescriptor {
            scale: AlgebraElement::one(space),
            offset,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scale.is_zero()
    }
}

/// A two-sided enclosure of an operator norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn exact(v: f64) -> Self {
        Enclosure { lo: v, hi: v }
    }
}

/// Bounded operator of the standard module over C(X), in tail-plus-block
/// form. Blocks are stored per point, all with the same shape.
#[derive(Debug, Clone)]
pub struct AOperator {
    space: Arc<SequentialSpace>,
    tail: TailDescriptor,
    block_rows: usize,
    block_cols: usize,
    /// One block per point, aligned with the space's point order.
    blocks: Vec<ComplexMatrix>,
}

impl AOperator {
    pub fn new(
        space: Arc<SequentialSpace>,
        tail: TailDescriptor,
        blocks: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if *tail.scale.space() != space {
            return Err(Error::SpaceMismatch);
        }
        if blocks.len() != space.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for a space of {} points",
                blocks.len(),
                space.len()
            )));
        }
        let rows = blocks.first().map(|b| b.rows()).unwrap_or(0);
        let cols = blocks.first().map(|b| b.cols()).unwrap_or(0);
        if blocks.iter().any(|b| b.rows() != rows || b.cols() != cols) {
            return Err(Error::ShapeMismatch(
                "per-point blocks must share one shape".into(),
            ));
        }
        Ok(AOperator {
            space,
            tail,
            block_rows: rows,
            block_cols: cols,
            blocks,
        }
        .normalized())
    }

    pub fn zero(space: Arc<SequentialSpace>) -> Self {
        let blocks = vec![ComplexMatrix::zeros(0, 0); space.len()];
        AOperator {
            tail: TailDescriptor::zero(space.clone()),
            space,
            block_rows: 0,
            block_cols: 0,
            blocks,
        }
    }

    pub fn identity(space: Arc<SequentialSpace>) -> Self {
        let blocks = vec![ComplexMatrix::zeros(0, 0); space.len()];
        AOperator {
            tail: TailDescriptor::identity(space.clone()),
            space,
            block_rows: 0,
            block_cols: 0,
            blocks,
        }
    }

    /// The pure shift by `offset`, unit scale.
    pub fn shift(space: Arc<SequentialSpace>, offset: i64) -> Self {
        let blocks = vec![ComplexMatrix::zeros(0, 0); space.len()];
        AOperator {
            tail: TailDescriptor::shift(space.clone(), offset),
            space,
            block_rows: 0,
            block_cols: 0,
            blocks,
        }
    }

    /// The multiplication operator by an algebra element.
    pub fn multiplication(t: AlgebraElement) -> Self {
        let space = t.space().clone();
        let blocks = vec![ComplexMatrix::zeros(0, 0); space.len()];
        AOperator {
            tail: TailDescriptor {
                scale: t,
                offset: 0,
            },
            space,
            block_rows: 0,
            block_cols: 0,
            blocks,
        }
    }

    /// A tail-free operator given only by its per-point blocks.
    pub fn from_blocks(space: Arc<SequentialSpace>, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(space.clone(), TailDescriptor::zero(space), blocks)
    }

    /// The head projector p_m onto the span of e_1..e_m.
    pub fn head_projector(space: Arc<SequentialSpace>, m: usize) -> Self {
        let blocks = vec![ComplexMatrix::identity(m); space.len()];
        AOperator {
            tail: TailDescriptor::zero(space.clone()),
            space,
            block_rows: m,
            block_cols: m,
            blocks,
        }
    }

    /// The tail projector q_m = id - p_m.
    pub fn tail_projector(space: Arc<SequentialSpace>, m: usize) -> Self {
        let blocks = vec![ComplexMatrix::identity(m).scale(Complex64::new(-1.0, 0.0)); space.len()];
        AOperator {
            tail: TailDescriptor::identity(space.clone()),
            space,
            block_rows: m,
            block_cols: m,
            blocks,
        }
        .normalized()
    }

    pub fn space(&self) -> &Arc<SequentialSpace> {
        &self.space
    }

    pub fn tail(&self) -> &TailDescriptor {
        &self.tail
    }

    pub fn offset(&self) -> i64 {
        self.tail.offset
    }

    /// The block support: blocks vanish outside the leading support x
    /// support corner.
    pub fn support(&self) -> usize {
        self.block_rows.max(self.block_cols)
    }

    pub fn block_at(&self, point_idx: usize) -> &ComplexMatrix {
        &self.blocks[point_idx]
    }

    /// Trims all-zero boundary rows/columns of the blocks and canonicalizes
    /// a vanishing tail scale to offset zero.
    fn normalized(mut self) -> Self {
        let mut rows = 0;
        let mut cols = 0;
        for b in &self.blocks {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    if b.get(i, j) != Complex64::new(0.0, 0.0) {
                        rows = rows.max(i + 1);
                        cols = cols.max(j + 1);
                    }
                }
            }
        }
        if rows != self.block_rows || cols != self.block_cols {
            self.blocks = self
                .blocks
                .iter()
                .map(|b| b.sub_matrix(0, rows, 0, cols))
                .collect();
            self.block_rows = rows;
            self.block_cols = cols;
        }
        if self.tail.is_zero() && self.tail.offset != 0 {
            self.tail.offset = 0;
        }
        self
    }

    /// The rectangular corner of the operator at one point, with `rows`
    /// output and `cols` input coordinates, tail included.
    pub fn corner_at(&self, point_idx: usize, rows: usize, cols: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(rows, cols);
        let t = self.tail.scale.value_at_index(point_idx);
        if !self.tail.is_zero() {
            for c in 0..cols as i64 {
                let r = c + self.tail.offset;
                if r >= 0 && (r as usize) < rows {
                    m.add_at(r as usize, c as usize, t);
                }
            }
        }
        let b = &self.blocks[point_idx];
        for i in 0..b.rows().min(rows) {
            for j in 0..b.cols().min(cols) {
                m.add_at(i, j, b.get(i, j));
            }
        }
        m
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Pointwise action on a module vector. The result truncation is
    /// N + max(offset, 0).
    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        if *x.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        let n = x.truncation();
        let needed = self.support() + self.tail.offset.unsigned_abs() as usize;
        if n < needed {
            return Err(Error::ShapeMismatch(format!(
                "vector truncation {n} below operator reach {needed}"
            )));
        }
        let out_n = n + self.tail.offset.max(0) as usize;
        let k = self.tail.offset;
        let mut out_cols: Vec<Vec<Complex64>> = Vec::with_capacity(self.space.len());
        for pi in 0..self.space.len() {
            let v = x.eval_at_index(pi);
            let mut out = vec![Complex64::new(0.0, 0.0); out_n];
            if !self.tail.is_zero() {
                let t = self.tail.scale.value_at_index(pi);
                for (c, val) in v.iter().enumerate() {
                    let r = c as i64 + k;
                    if r >= 0 && (r as usize) < out_n {
                        out[r as usize] += t * val;
                    }
                }
            }
            let b = &self.blocks[pi];
            for (i, out_i) in out.iter_mut().enumerate().take(b.rows()) {
                for (j, val) in v.iter().enumerate().take(b.cols()) {
                    *out_i += b.get(i, j) * val;
                }
            }
            out_cols.push(out);
        }
        // reassemble coordinate-major
        let coords = (0..out_n)
            .map(|c| {
                AlgebraElement::new(
                    self.space.clone(),
                    (0..self.space.len()).map(|pi| out_cols[pi][c]).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        ModuleVector::new(self.space.clone(), coords)
    }

    /// Exact composition self after other. The composite tail is the
    /// product of the tails; every deviation of the shift pattern from a
    /// true composite shift lands in the finite block.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let ks = self.tail.offset;
        let kt = other.tail.offset;
        let scale = self.tail.scale.mul(&other.tail.scale)?;
        let tail = TailDescriptor {
            scale,
            offset: ks + kt,
        };

        // bounding box of the composite block
        let rows = (self.block_rows as i64)
            .max(other.block_rows as i64 + ks.max(0))
            .max(ks + kt)
            .max(0) as usize;
        let cols = (other.block_cols as i64)
            .max(self.block_cols as i64 + (-kt).max(0))
            .max(-kt)
            .max(0) as usize;

        let mut blocks = Vec::with_capacity(self.space.len());
        for pi in 0..self.space.len() {
            let mut b = ComplexMatrix::zeros(rows, cols);
            let ts = self.tail.scale.value_at_index(pi);
            let tt = other.tail.scale.value_at_index(pi);
            let bs = &self.blocks[pi];
            let bt = &other.blocks[pi];

            // tail of self acting on the block of other: rows shift by ks
            if !self.tail.is_zero() {
                for i in 0..bt.rows() {
                    let r = i as i64 + ks;
                    if r < 0 {
                        continue;
                    }
                    for j in 0..bt.cols() {
                        b.add_at(r as usize, j, ts * bt.get(i, j));
                    }
                }
            }
            // block of self acting on the tail of other: columns shift by -kt
            if !other.tail.is_zero() {
                for i in 0..bs.rows() {
                    for j in 0..bs.cols() {
                        let c = j as i64 - kt;
                        if c >= 0 && (c as usize) < cols {
                            b.add_at(i, c as usize, bs.get(i, j) * tt);
                        }
                    }
                }
            }
            // block times block
            if !bs.is_empty() && !bt.is_empty() {
                let inner = bs.cols().max(bt.rows());
                let p = bs
                    .resized(bs.rows(), inner)
                    .mul(&bt.resized(inner, bt.cols()))?;
                for i in 0..p.rows() {
                    for j in 0..p.cols() {
                        b.add_at(i, j, p.get(i, j));
                    }
                }
            }
            // shift-annihilation correction: columns killed by the inner
            // shift that the composite shift pattern would claim survive
            if !self.tail.is_zero() && !other.tail.is_zero() {
                for c in 0..(-kt).max(0) {
                    let r = c + ks + kt;
                    if r >= 0 {
                        b.add_at(r as usize, c as usize, -(ts * tt));
                    }
                }
            }
            blocks.push(b);
        }
        AOperator::new(self.space.clone(), tail, blocks)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let tail = if self.tail.is_zero() {
            other.tail.clone()
        } else if other.tail.is_zero() {
            self.tail.clone()
        } else if self.tail.offset == other.tail.offset {
            TailDescriptor {
                scale: self.tail.scale.add(&other.tail.scale)?,
                offset: self.tail.offset,
            }
        } else {
            return Err(Error::IncompatibleTails(format!(
                "offsets {} and {}; the sum of distinct shift tails leaves the class",
                self.tail.offset, other.tail.offset
            )));
        };
        let rows = self.block_rows.max(other.block_rows);
        let cols = self.block_cols.max(other.block_cols);
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.resized(rows, cols).add(&b.resized(rows, cols)))
            .collect::<Result<Vec<_>>>()?;
        AOperator::new(self.space.clone(), tail, blocks)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        AOperator {
            space: self.space.clone(),
            tail: TailDescriptor {
                scale: self.tail.scale.scale(s),
                offset: self.tail.offset,
            },
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
        .normalized()
    }

    /// Certified enclosure of the operator norm, sup over points of the
    /// per-point norm.
    ///
    /// The lower bound is the larger of the tail sup-norm and the largest
    /// singular value of the materialized corner. The bound is exact (lo =
    /// hi) when the offset is zero, because the operator is then block
    /// diagonal with respect to corner + remainder, and when the block is
    /// zero, because a scaled shift has norm equal to its scale sup-norm.
    pub fn op_norm(&self) -> Enclosure {
        let tail_norm = if self.tail.is_zero() {
            0.0
        } else {
            algebra_norm(&self.tail.scale)
        };
        let k = self.tail.offset;
        let cols = self.support() + k.unsigned_abs() as usize;
        let rows = cols + k.max(0) as usize;
        let mut corner_max: f64 = 0.0;
        for pi in 0..self.space.len() {
            let c = self.corner_at(pi, rows, cols);
            corner_max = corner_max.max(numerics::spectral_norm(&c));
        }
        let lo = tail_norm.max(corner_max);
        let hi = if self.tail.is_zero() || self.block_rows == 0 || k == 0 {
            lo
        } else {
            corner_max + tail_norm
        };
        Enclosure { lo, hi }
    }

    /// Inverse of an offset-zero operator with non-vanishing tail scale:
    /// the corner inverts pointwise and the tail inverts to 1/t.
    pub fn invert(&self, tol: f64) -> Result<Self> {
        if self.tail.is_zero() {
            return Err(Error::NotInvertible(
                "tail scale is zero; finitely generated operators are never invertible".into(),
            ));
        }
        if self.tail.offset != 0 {
            return Err(Error::NotInvertible(format!(
                "offset {} tail; shifts are inverted only through parametrices",
                self.tail.offset
            )));
        }
        let sup = algebra_norm(&self.tail.scale);
        if self
            .tail
            .scale
            .values()
            .iter()
            .any(|z| z.norm() <= tol * sup)
        {
            return Err(Error::NotInvertible(
                "tail scale vanishes at some point".into(),
            ));
        }
        let s = self.support();
        let mut blocks = Vec::with_capacity(self.space.len());
        for pi in 0..self.space.len() {
            let t = self.tail.scale.value_at_index(pi);
            let corner = self.corner_at(pi, s, s);
            let inv = numerics::inverse(&corner, tol).map_err(|_| {
                Error::NotInvertible(format!(
                    "corner singular at point {:?}",
                    self.space.points()[pi]
                ))
            })?;
            let tinv = ComplexMatrix::identity(s).scale(t.inv());
            blocks.push(inv.sub(&tinv)?);
        }
        let tail = TailDescriptor {
            scale: self.tail.scale.recip()?,
            offset: 0,
        };
        AOperator::new(self.space.clone(), tail, blocks)
    }

    /// The four corner operators of the splitting l2 = (L_m)^perp + L_m:
    /// f1 = q T q, f2 = q T p, f3 = p T q, f4 = p T p. Reassembly is exact.
    pub fn block_decompose(&self, m: usize) -> Result<BlockDecomposition> {
        let p = Self::head_projector(self.space.clone(), m);
        let q = Self::tail_projector(self.space.clone(), m);
        let tp = self.compose(&p)?;
        let tq = self.compose(&q)?;
        Ok(BlockDecomposition {
            m,
            f1: q.compose(&tq)?,
            f2: q.compose(&tp)?,
            f3: p.compose(&tq)?,
            f4: p.compose(&tp)?,
        })
    }

    /// The family of dim x dim corners over X (the direction operator ->
    /// strongly continuous family of the E/D correspondence).
    pub fn to_family(&self, dim: usize) -> Result<OperatorFamily> {
        let needed = self.support() + self.tail.offset.unsigned_abs() as usize;
        if dim < needed {
            return Err(Error::ShapeMismatch(format!(
                "family dim {dim} below operator reach {needed}"
            )));
        }
        let matrices = (0..self.space.len())
            .map(|pi| self.corner_at(pi, dim, dim))
            .collect();
        Ok(OperatorFamily {
            space: self.space.clone(),
            dim,
            matrices,
        })
    }

    /// Rebuilds an operator from a family of corners and a declared tail
    /// extension (the direction family -> operator). The tail contribution
    /// is subtracted from each matrix to recover the finite blocks.
    pub fn from_family(family: &OperatorFamily, tail: TailDescriptor) -> Result<Self> {
        if *tail.scale.space() != family.space {
            return Err(Error::SpaceMismatch);
        }
        let probe = AOperator {
            space: family.space.clone(),
            tail: tail.clone(),
            block_rows: 0,
            block_cols: 0,
            blocks: vec![ComplexMatrix::zeros(0, 0); family.space.len()],
        };
        let blocks = (0..family.space.len())
            .map(|pi| {
                let tail_corner = probe.corner_at(pi, family.dim, family.dim);
                family.matrices[pi].sub(&tail_corner)
            })
            .collect::<Result<Vec<_>>>()?;
        AOperator::new(family.space.clone(), tail, blocks)
    }

    pub fn to_json(&self) -> Value {
        let mut blocks = serde_json::Map::new();
        for (pi, p) in self.space.points().iter().enumerate() {
            blocks.insert(p.clone(), numerics_matrix_to_json(&self.blocks[pi]));
        }
        json!({
            "tail": {
                "scale": self.tail.scale.to_json(),
                "offset": self.tail.offset,
            },
            "blocks": Value::Object(blocks),
        })
    }

    pub fn from_json(space: Arc<SequentialSpace>, v: &Value) -> Result<Self> {
        let scale = AlgebraElement::from_json(space.clone(), &v["tail"]["scale"])?;
        let offset = v["tail"]["offset"]
            .as_i64()
            .ok_or_else(|| Error::InputParse("operator: missing tail offset".into()))?;
        let blocks_map = v["blocks"]
            .as_object()
            .ok_or_else(|| Error::InputParse("operator: missing \"blocks\" map".into()))?;
        let mut parsed: Vec<Option<ComplexMatrix>> = vec![None; space.len()];
        let mut rows = 0;
        let mut cols = 0;
        for (p, m) in blocks_map {
            let idx = space
                .point_index(p)
                .ok_or_else(|| Error::InputParse(format!("operator: unknown point {p:?}")))?;
            let mat = numerics_matrix_from_json(m)?;
            rows = rows.max(mat.rows());
            cols = cols.max(mat.cols());
            parsed[idx] = Some(mat);
        }
        let blocks = parsed
            .into_iter()
            .map(|b| match b {
                Some(m) => m.resized(rows, cols),
                None => ComplexMatrix::zeros(rows, cols),
            })
            .collect();
        AOperator::new(space, TailDescriptor { scale, offset }, blocks)
    }
}

impl PartialEq for AOperator {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space
            && self.tail == other.tail
            && self.block_rows == other.block_rows
            && self.block_cols == other.block_cols
            && self.blocks == other.blocks
    }
}

/// The corner operators of eq-style splitting at a cut m; reassembling the
/// four parts reproduces the operator exactly.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub m: usize,
    /// q T q: tail side to tail side.
    pub f1: AOperator,
    /// q T p: head to tail.
    pub f2: AOperator,
    /// p T q: tail to head.
    pub f3: AOperator,
    /// p T p: head to head.
    pub f4: AOperator,
}

impl BlockDecomposition {
    pub fn reassemble(&self) -> Result<AOperator> {
        self.f1.add(&self.f2)?.add(&self.f3)?.add(&self.f4)
    }
}

/// A strongly-continuous-family stand-in: one dim x dim matrix per point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily {
    space: Arc<SequentialSpace>,
    dim: usize,
    matrices: Vec<ComplexMatrix>,
}

impl OperatorFamily {
    pub fn from_fn(
        space: Arc<SequentialSpace>,
        dim: usize,
        mut f: impl FnMut(&PointId) -> ComplexMatrix,
    ) -> Result<Self> {
        let matrices: Vec<ComplexMatrix> = space.points().iter().map(&mut f).collect();
        if matrices.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(Error::ShapeMismatch(
                "family matrices must all be dim x dim".into(),
            ));
        }
        Ok(OperatorFamily {
            space,
            dim,
            matrices,
        })
    }

    pub fn space(&self) -> &Arc<SequentialSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix_at(&self, point_idx: usize) -> &ComplexMatrix {
        &self.matrices[point_idx]
    }

    pub fn at_point(&self, p: &str) -> Option<&ComplexMatrix> {
        self.space.point_index(p).map(|i| &self.matrices[i])
    }

    pub fn map(&self, mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        let matrices: Vec<ComplexMatrix> = self.matrices.iter().map(&mut f).collect();
        let dim = matrices.first().map(|m| m.rows()).unwrap_or(0);
        if matrices.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(Error::ShapeMismatch(
                "family map must keep matrices square".into(),
            ));
        }
        Ok(OperatorFamily {
            space: self.space.clone(),
            dim,
            matrices,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (pi, p) in self.space.points().iter().enumerate() {
            map.insert(p.clone(), numerics_matrix_to_json(&self.matrices[pi]));
        }
        json!({ "dim": self.dim, "matrices": Value::Object(map) })
    }
}

pub fn numerics_matrix_to_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| {
            Value::Array(
                (0..m.cols())
                    .map(|j| {
                        let z = m.get(i, j);
                        json!([z.re, z.im])
                    })
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn numerics_matrix_from_json(v: &Value) -> Result<ComplexMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::InputParse("matrix: expected array of rows".into()))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .map(|r| r.as_array().map(|a| a.len()).unwrap_or(0))
        .unwrap_or(0);
    let mut data = Vec::with_capacity(nrows * ncols);
    for r in rows {
        let entries = r
            .as_array()
            .ok_or_else(|| Error::InputParse("matrix: rows must be arrays".into()))?;
        if entries.len() != ncols {
            return Err(Error::InputParse("matrix: ragged rows".into()));
        }
        for e in entries {
            data.push(parse_complex(e)?);
        }
    }
    ComplexMatrix::from_data(nrows, ncols, data)
}

/// Random tail-free operator with the given block support, rescaled so the
/// operator norm is `target_norm` up to the Frobenius overshoot: scaling
/// goes through the per-point Frobenius norms, so the spectral norm lands
/// at or below the target without a factorization.
pub fn random_compact(
    space: &Arc<SequentialSpace>,
    support: usize,
    target_norm: f64,
    rng: &mut impl rand::Rng,
) -> AOperator {
    let blocks: Vec<ComplexMatrix> = (0..space.len())
        .map(|_| numerics::random_matrix(support, support, rng))
        .collect();
    let norm = blocks
        .iter()
        .map(|b| b.frobenius_norm())
        .fold(0.0, f64::max);
    let op = AOperator::from_blocks(space.clone(), blocks).expect("blocks share shape");
    if norm == 0.0 {
        op
    } else {
        op.scale(Complex64::new(target_norm / norm, 0.0))
    }
}

/// Random parametrix pair: F = shift(k) + small block, G = shift(-k) +
/// small block. Both defects are tail-free, so the pair always passes the
/// parametrix check, and the index of F equals k.
pub fn random_fredholm_pair(
    space: &Arc<SequentialSpace>,
    offset: i64,
    block_support: usize,
    rng: &mut impl rand::Rng,
) -> (AOperator, AOperator) {
    let f = AOperator::shift(space.clone(), offset)
        .add(&random_compact(space, block_support, 0.4, rng))
        .expect("tail-free block is always addable");
    let g = AOperator::shift(space.clone(), -offset)
        .add(&random_compact(space, block_support, 0.4, rng))
        .expect("tail-free block is always addable");
    (f, g)
}
