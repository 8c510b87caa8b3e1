//! Compactness criteria through tail norms.
//!
//! An operator is accepted compact when some tail projection q_m kills it
//! to within eps in operator norm; the adjointable subclass is detected the
//! same way on the right tails K q_m. Both checks produce certified
//! enclosures, monotone in m by construction: all cuts are evaluated on one
//! shared rectangular corner, where killing more rows or columns can only
//! shrink the largest singular value.
//!
//! A fixed truncation can certify compactness (a finite block is finitely
//! generated) but can only ever report a lower bound against it; the
//! scaling study upgrades that evidence by asking for a single witness cut
//! that works uniformly across truncation levels.

use serde_json::{json, Value};

use crate::a_operator::{AOperator, Enclosure};
use crate::base_space::algebra_norm;
use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};

/// Default acceptance threshold for tail norms.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Default cut search window for an operator: support + 4.
pub fn default_m_max(op: &AOperator) -> usize {
    op.support() + 4
}

#[derive(Debug, Clone)]
pub struct TailNormProfile {
    pub m_values: Vec<usize>,
    /// Enclosures of |q_m K|.
    pub qk_norms: Vec<Enclosure>,
    /// Enclosures of |q_m K q_m|.
    pub qkq_norms: Vec<Enclosure>,
    /// Enclosures of |K q_m|.
    pub kq_norms: Vec<Enclosure>,
}

impl TailNormProfile {
    pub fn to_json(&self) -> Value {
        let row =
            |v: &[Enclosure]| -> Vec<Value> { v.iter().map(|e| json!([e.lo, e.hi])).collect() };
        json!({
            "m": self.m_values,
            "qK": row(&self.qk_norms),
            "qKq": row(&self.qkq_norms),
            "Kq": row(&self.kq_norms),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerdictKind {
    /// Some cut m kills the tail norm to within eps; m is the smallest
    /// witness.
    Compact { witness: usize },
    /// The tail norm stays above eps over the whole explored window, with
    /// the certified floor recorded.
    NotCompactAtScale { bound: f64 },
    /// Neither a witness nor a certified floor.
    Inconclusive { best_residual: f64 },
}

#[derive(Debug, Clone)]
pub struct CompactnessVerdict {
    pub kind: VerdictKind,
    pub profile: TailNormProfile,
}

impl CompactnessVerdict {
    pub fn is_compact(&self) -> bool {
        matches!(self.kind, VerdictKind::Compact { .. })
    }

    pub fn to_json(&self) -> Value {
        let kind = match &self.kind {
            VerdictKind::Compact { witness } => json!({"kind": "Compact", "witness": witness}),
            VerdictKind::NotCompactAtScale { bound } => {
                json!({"kind": "NotCompactAtScale", "bound": bound})
            }
            VerdictKind::Inconclusive { best_residual } => {
                json!({"kind": "Inconclusive", "best_residual": best_residual})
            }
        };
        json!({ "verdict": kind, "profile": self.profile.to_json() })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum TailKind {
    /// |q_m K|
    Qk,
    /// |q_m K q_m|
    Qkq,
    /// |K q_m|
    Kq,
}

/// Lazy evaluator over one shared rectangular corner per point, wide
/// enough that every column beyond it is pure tail for all cuts up to
/// m_max. Evaluating all cuts on one fixed corner makes the enclosures
/// monotone in m: killing more rows or columns only shrinks the largest
/// singular value. Corners are kept as sparse entry lists so a cut costs
/// a filter pass, not a dense rebuild.
pub(crate) struct ProfileEvaluator {
    corner_entries: Vec<Vec<(usize, usize, numerics::Complex64)>>,
    tail_norm: f64,
    tail_is_zero: bool,
    offset_is_zero: bool,
    pub m_max: usize,
}

impl ProfileEvaluator {
    pub fn new(op: &AOperator, m_max: usize) -> Self {
        let k = op.offset();
        let cols = op.support() + k.unsigned_abs() as usize + m_max + 1;
        let rows = cols + k.max(0) as usize;
        let corner_entries = (0..op.space().len())
            .map(|pi| {
                let c = op.corner_at(pi, rows, cols);
                let mut entries = Vec::new();
                for i in 0..rows {
                    for j in 0..cols {
                        let v = c.get(i, j);
                        if v != numerics::Complex64::new(0.0, 0.0) {
                            entries.push((i, j, v));
                        }
                    }
                }
                entries
            })
            .collect();
        ProfileEvaluator {
            corner_entries,
            tail_norm: if op.tail().is_zero() {
                0.0
            } else {
                algebra_norm(&op.tail().scale)
            },
            tail_is_zero: op.tail().is_zero(),
            offset_is_zero: op.offset() == 0,
            m_max,
        }
    }

    pub fn norm_at(&self, m: usize, kind: TailKind) -> Enclosure {
        let (kill_rows, kill_cols) = match kind {
            TailKind::Qk => (m, 0),
            TailKind::Qkq => (m, m),
            TailKind::Kq => (0, m),
        };
        let mut sigma: f64 = 0.0;
        for entries in &self.corner_entries {
            sigma = sigma.max(killed_entries_norm(entries, kill_rows, kill_cols));
        }
        let lo = self.tail_norm.max(sigma);
        let hi = if self.tail_is_zero || self.offset_is_zero {
            lo
        } else {
            sigma + self.tail_norm
        };
        Enclosure { lo, hi }
    }

    /// Smallest m in 0..=m_max with hi(m) <= threshold, walking down from
    /// the top cut. The upper bound is monotone, and cuts near the top
    /// leave almost nothing of the corner, so the walk touches expensive
    /// dense evaluations only when the witness genuinely sits low.
    pub fn first_below(&self, kind: TailKind, threshold: f64) -> Option<(usize, Enclosure)> {
        let at_end = self.norm_at(self.m_max, kind);
        if at_end.hi > threshold {
            return None;
        }
        let mut witness = (self.m_max, at_end);
        for m in (0..self.m_max).rev() {
            let e = self.norm_at(m, kind);
            if e.hi <= threshold {
                witness = (m, e);
            } else {
                break;
            }
        }
        Some(witness)
    }
}

fn killed_entries_norm(
    entries: &[(usize, usize, numerics::Complex64)],
    kill_rows: usize,
    kill_cols: usize,
) -> f64 {
    let mut r0 = usize::MAX;
    let mut c0 = usize::MAX;
    let mut r1 = 0usize;
    let mut c1 = 0usize;
    for &(i, j, _) in entries {
        if i >= kill_rows && j >= kill_cols {
            r0 = r0.min(i);
            c0 = c0.min(j);
            r1 = r1.max(i + 1);
            c1 = c1.max(j + 1);
        }
    }
    if r1 == 0 {
        return 0.0;
    }
    let mut m = ComplexMatrix::zeros(r1 - r0, c1 - c0);
    for &(i, j, v) in entries {
        if i >= kill_rows && j >= kill_cols {
            m.set(i - r0, j - c0, v);
        }
    }
    numerics::spectral_norm(&m)
}

/// Enclosures of |q_m K|, |q_m K q_m| and |K q_m| for m in 0..=m_max.
pub fn tail_norm_profile(op: &AOperator, m_max: usize) -> TailNormProfile {
    let ev = ProfileEvaluator::new(op, m_max);
    let mut profile = TailNormProfile {
        m_values: (0..=m_max).collect(),
        qk_norms: Vec::with_capacity(m_max + 1),
        qkq_norms: Vec::with_capacity(m_max + 1),
        kq_norms: Vec::with_capacity(m_max + 1),
    };
    for m in 0..=m_max {
        profile.qk_norms.push(ev.norm_at(m, TailKind::Qk));
        profile.qkq_norms.push(ev.norm_at(m, TailKind::Qkq));
        profile.kq_norms.push(ev.norm_at(m, TailKind::Kq));
    }
    profile
}

/// Lazy verdict: binary search for a witness on the monotone upper bound;
/// without one, the monotone lower bound at m_max is the certified floor
/// over the whole window. The attached profile records the probed cuts.
fn verdict_from(op: &AOperator, eps: f64, m_max: usize, kind: TailKind) -> CompactnessVerdict {
    let ev = ProfileEvaluator::new(op, m_max);
    let mut probed: Vec<(usize, Enclosure)> = Vec::new();
    let kind_slot = |profile: &mut TailNormProfile, e: Enclosure| match kind {
        TailKind::Qk => profile.qk_norms.push(e),
        TailKind::Qkq => profile.qkq_norms.push(e),
        TailKind::Kq => profile.kq_norms.push(e),
    };
    let verdict = if let Some((witness, e)) = ev.first_below(kind, eps) {
        probed.push((witness, e));
        VerdictKind::Compact { witness }
    } else {
        let at_end = ev.norm_at(m_max, kind);
        probed.push((m_max, at_end));
        if at_end.lo > eps {
            // monotone: the lower bound at m_max floors the whole window
            VerdictKind::NotCompactAtScale { bound: at_end.lo }
        } else {
            VerdictKind::Inconclusive {
                best_residual: at_end.hi,
            }
        }
    };
    let mut profile = TailNormProfile {
        m_values: Vec::new(),
        qk_norms: Vec::new(),
        qkq_norms: Vec::new(),
        kq_norms: Vec::new(),
    };
    for (m, e) in probed {
        profile.m_values.push(m);
        kind_slot(&mut profile, e);
    }
    CompactnessVerdict {
        kind: verdict,
        profile,
    }
}

/// Membership test for the compact ideal: looks for a cut with
/// |q_m K| <= eps. For tail-free operators the test is exact, since
/// q_m K = 0 once m reaches the block support.
pub fn is_compact(op: &AOperator, eps: f64, m_max: usize) -> CompactnessVerdict {
    assert!(eps > 0.0, "eps must be positive");
    verdict_from(op, eps, m_max, TailKind::Qk)
}

/// Membership test for the adjointable compacts: decay of |K q_m| instead
/// of |q_m K|. Every operator accepted here is accepted by [`is_compact`]
/// at the same eps.
pub fn is_adjointable_compact(op: &AOperator, eps: f64, m_max: usize) -> CompactnessVerdict {
    assert!(eps > 0.0, "eps must be positive");
    verdict_from(op, eps, m_max, TailKind::Kq)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyVerdict {
    /// One cut serves every truncation level.
    UniformlyCompact {
        witness: usize,
    },
    /// At the largest level the norm stays above the recorded floor for
    /// every cut in the grid.
    Escaping {
        floor: f64,
    },
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct ScalingStudy {
    pub levels: Vec<usize>,
    pub m_grid: Vec<usize>,
    /// `norms[level][m]`
    pub norms: Vec<Vec<Enclosure>>,
    pub verdict: StudyVerdict,
}

impl ScalingStudy {
    pub fn to_json(&self) -> Value {
        let verdict = match &self.verdict {
            StudyVerdict::UniformlyCompact { witness } => {
                json!({"kind": "UniformlyCompact", "witness": witness})
            }
            StudyVerdict::Escaping { floor } => json!({"kind": "Escaping", "floor": floor}),
            StudyVerdict::Inconclusive => json!({"kind": "Inconclusive"}),
        };
        json!({
            "levels": self.levels,
            "m_grid": self.m_grid,
            "norms": self.norms.iter().map(|row| {
                row.iter().map(|e| json!([e.lo, e.hi])).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "verdict": verdict,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,m,norm_lo,norm_hi\n");
        for (li, level) in self.levels.iter().enumerate() {
            for (mi, m) in self.m_grid.iter().enumerate() {
                let e = self.norms[li][mi];
                out.push_str(&format!("{level},{m},{:.17e},{:.17e}\n", e.lo, e.hi));
            }
        }
        out
    }
}

/// Runs the |q_m K_M| grid across truncation levels. A family is accepted
/// uniformly compact only when a single witness cut works at every level;
/// it is escaping when at the largest level no cut in the grid brings the
/// norm under eps, with a certified floor.
pub fn scaling_study(
    generator: impl Fn(usize) -> AOperator,
    levels: &[usize],
    eps: f64,
) -> Result<ScalingStudy> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InputParse(
            "scaling study levels must be strictly increasing and nonempty".into(),
        ));
    }
    // Cuts up to the smallest level: larger cuts would trivially zero out
    // the smallest truncation without saying anything uniform.
    let m_top = levels[0];
    let m_grid: Vec<usize> = (0..=m_top).collect();
    let mut norms = Vec::with_capacity(levels.len());
    for &level in levels {
        let op = generator(level);
        let profile = tail_norm_profile(&op, m_top);
        norms.push(profile.qk_norms);
    }
    let verdict = study_verdict(&m_grid, &norms, eps);
    Ok(ScalingStudy {
        levels: levels.to_vec(),
        m_grid,
        norms,
        verdict,
    })
}

fn study_verdict(m_grid: &[usize], norms: &[Vec<Enclosure>], eps: f64) -> StudyVerdict {
    for (mi, &m) in m_grid.iter().enumerate() {
        if norms.iter().all(|row| row[mi].hi <= eps) {
            return StudyVerdict::UniformlyCompact { witness: m };
        }
    }
    let last = norms.last().expect("levels nonempty");
    let floor = last.iter().map(|e| e.lo).fold(f64::INFINITY, f64::min);
    if floor > eps {
        return StudyVerdict::Escaping { floor };
    }
    StudyVerdict::Inconclusive
}
