//! The compact parameter space X, modeled as a finite point set with
//! explicit convergent nets, and the algebra A = C(X) of complex functions
//! on it.
//!
//! A finite Hausdorff space is discrete, so the net structure is what
//! carries the topological content at this scale: "continuity along X" of a
//! point-indexed quantity always means decay of its values along each net
//! toward the value at the net's limit.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numerics::Complex64;

/// Opaque point identifier; the canonical family space names its points
/// "0", "1/1", "1/2", ... so they double as stable report keys.
pub type PointId = String;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    /// Ordered point sequence, the net itself.
    pub seq: Vec<PointId>,
    /// The point the net converges to.
    pub limit: PointId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialSpace {
    points: Vec<PointId>,
    nets: Vec<Net>,
}

impl SequentialSpace {
    pub fn new(points: Vec<PointId>, nets: Vec<Net>) -> Result<Arc<Self>> {
        let index: BTreeMap<&str, usize> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        if index.len() != points.len() {
            return Err(Error::InvalidSpace("duplicate point identifiers".into()));
        }
        for (k, net) in nets.iter().enumerate() {
            if !index.contains_key(net.limit.as_str()) {
                return Err(Error::InvalidSpace(format!(
                    "net {k}: limit {:?} is not a point of the space",
                    net.limit
                )));
            }
            let mut seen = std::collections::BTreeSet::new();
            for p in &net.seq {
                if !index.contains_key(p.as_str()) {
                    return Err(Error::InvalidSpace(format!(
                        "net {k}: point {p:?} is not a point of the space"
                    )));
                }
                if *p == net.limit {
                    return Err(Error::InvalidSpace(format!(
                        "net {k}: the limit point appears in the sequence"
                    )));
                }
                if !seen.insert(p.clone()) {
                    return Err(Error::InvalidSpace(format!(
                        "net {k}: point {p:?} repeats in the sequence"
                    )));
                }
            }
        }
        Ok(Arc::new(SequentialSpace { points, nets }))
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point_index(&self, p: &str) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "points": self.points,
            "nets": self.nets.iter().map(|n| json!({
                "seq": n.seq,
                "limit": n.limit,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Arc<Self>> {
        let points = v["points"]
            .as_array()
            .ok_or_else(|| Error::InputParse("space: missing \"points\" array".into()))?
            .iter()
            .map(|p| {
                p.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::InputParse("space: points must be strings".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let nets = v["nets"]
            .as_array()
            .ok_or_else(|| Error::InputParse("space: missing \"nets\" array".into()))?
            .iter()
            .map(|n| {
                let seq = n["seq"]
                    .as_array()
                    .ok_or_else(|| Error::InputParse("net: missing \"seq\"".into()))?
                    .iter()
                    .map(|p| {
                        p.as_str().map(str::to_owned).ok_or_else(|| {
                            Error::InputParse("net: seq entries must be strings".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let limit = n["limit"]
                    .as_str()
                    .ok_or_else(|| Error::InputParse("net: missing \"limit\"".into()))?
                    .to_owned();
                Ok(Net { seq, limit })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, nets)
    }
}

/// The truncated model of X = {0} and the points 1/i, i = 1..count, with the
/// single net (1/1, ..., 1/count) converging to "0".
pub fn make_sequence_space(count: usize) -> Arc<SequentialSpace> {
    assert!(count >= 1, "sequence space needs at least one net point");
    let mut points = vec!["0".to_string()];
    let seq: Vec<PointId> = (1..=count).map(|i| format!("1/{i}")).collect();
    points.extend(seq.iter().cloned());
    SequentialSpace::new(
        points,
        vec![Net {
            seq,
            limit: "0".to_string(),
        }],
    )
    .expect("canonical space is valid")
}

/// An element of A = C(X): one complex value per point, stored in the
/// space's point order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    space: Arc<SequentialSpace>,
    values: Vec<Complex64>,
}

impl AlgebraElement {
    pub fn new(space: Arc<SequentialSpace>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::ShapeMismatch(format!(
                "algebra element needs {} values, got {}",
                space.len(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(AlgebraElement { space, values })
    }

    pub fn constant(space: Arc<SequentialSpace>, v: Complex64) -> Self {
        let n = space.len();
        AlgebraElement {
            space,
            values: vec![v; n],
        }
    }

    pub fn zero(space: Arc<SequentialSpace>) -> Self {
        Self::constant(space, Complex64::new(0.0, 0.0))
    }

    pub fn one(space: Arc<SequentialSpace>) -> Self {
        Self::constant(space, Complex64::new(1.0, 0.0))
    }

    /// The indicator of a single point.
    pub fn indicator(space: Arc<SequentialSpace>, point: &str) -> Result<Self> {
        let idx = space
            .point_index(point)
            .ok_or_else(|| Error::OutOfRange(format!("no point {point:?} in space")))?;
        let mut values = vec![Complex64::new(0.0, 0.0); space.len()];
        values[idx] = Complex64::new(1.0, 0.0);
        Ok(AlgebraElement { space, values })
    }

    pub fn space(&self) -> &Arc<SequentialSpace> {
        &self.space
    }

    pub fn value_at_index(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    pub fn value_at(&self, point: &str) -> Option<Complex64> {
        self.space.point_index(point).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(AlgebraElement {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(AlgebraElement {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Pointwise product, the algebra multiplication.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(AlgebraElement {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Pointwise conjugation, the algebra involution.
    pub fn conj(&self) -> Self {
        AlgebraElement {
            space: self.space.clone(),
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        AlgebraElement {
            space: self.space.clone(),
            values: self.values.iter().map(|z| z * s).collect(),
        }
    }

    /// Pointwise reciprocal; caller guarantees no zero values.
    pub fn recip(&self) -> Result<Self> {
        if self.values.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::NotInvertible(
                "algebra element vanishes at some point".into(),
            ));
        }
        Ok(AlgebraElement {
            space: self.space.clone(),
            values: self.values.iter().map(|z| z.inv()).collect(),
        })
    }

    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (p, z) in self.space.points().iter().zip(&self.values) {
            map.insert(p.clone(), json!([z.re, z.im]));
        }
        json!({ "values": Value::Object(map) })
    }

    pub fn from_json(space: Arc<SequentialSpace>, v: &Value) -> Result<Self> {
        let map = v["values"]
            .as_object()
            .ok_or_else(|| Error::InputParse("algebra element: missing \"values\" map".into()))?;
        let mut values = vec![Complex64::new(0.0, 0.0); space.len()];
        for (p, z) in map {
            let idx = space.point_index(p).ok_or_else(|| {
                Error::InputParse(format!("algebra element: unknown point {p:?}"))
            })?;
            values[idx] = parse_complex(z)?;
        }
        AlgebraElement::new(space, values)
    }
}

pub(crate) fn parse_complex(v: &Value) -> Result<Complex64> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::InputParse("complex values are [re, im] pairs".into()))?;
    let re = arr[0]
        .as_f64()
        .ok_or_else(|| Error::InputParse("complex re part must be a number".into()))?;
    let im = arr[1]
        .as_f64()
        .ok_or_else(|| Error::InputParse("complex im part must be a number".into()))?;
    Ok(Complex64::new(re, im))
}

/// The C*-norm of C(X): max over points of the modulus.
pub fn algebra_norm(a: &AlgebraElement) -> f64 {
    a.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
