//! Vectors of the standard module l2(A) at truncation N: coordinate lists
//! of algebra elements, the A-valued inner product, the free basis and the
//! head/tail projectors.

use std::sync::Arc;

use serde_json::Value;

use crate::base_space::{algebra_norm, AlgebraElement, SequentialSpace};
use crate::error::{Error, Result};
use crate::numerics::Complex64;

/// Which side of the splitting l2 = (L_m)^perp + L_m a projection keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Coordinates 1..m (the finite free summand L_m).
    Head,
    /// Coordinates m+1..N (the complement).
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    space: Arc<SequentialSpace>,
    coords: Vec<AlgebraElement>,
}

impl ModuleVector {
    pub fn new(space: Arc<SequentialSpace>, coords: Vec<AlgebraElement>) -> Result<Self> {
        for c in &coords {
            if *c.space() != space {
                return Err(Error::SpaceMismatch);
            }
        }
        Ok(ModuleVector { space, coords })
    }

    pub fn zero(space: Arc<SequentialSpace>, n: usize) -> Self {
        let coords = (0..n)
            .map(|_| AlgebraElement::zero(space.clone()))
            .collect();
        ModuleVector { space, coords }
    }

    pub fn space(&self) -> &Arc<SequentialSpace> {
        &self.space
    }

    /// Truncation N: the number of stored coordinates.
    pub fn truncation(&self) -> usize {
        self.coords.len()
    }

    /// 1-indexed coordinate access, matching the basis numbering.
    pub fn coord(&self, k: usize) -> &AlgebraElement {
        &self.coords[k - 1]
    }

    pub fn coords(&self) -> &[AlgebraElement] {
        &self.coords
    }

    /// Point-major view: the coordinate column of the vector at one point.
    pub fn eval_at_index(&self, point_idx: usize) -> Vec<Complex64> {
        self.coords
            .iter()
            .map(|c| c.value_at_index(point_idx))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.truncation() != other.truncation() {
            return Err(Error::ShapeMismatch(format!(
                "vector truncations {} vs {}",
                self.truncation(),
                other.truncation()
            )));
        }
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModuleVector {
            space: self.space.clone(),
            coords,
        })
    }

    /// Module multiplication by an algebra element, coordinate-wise.
    pub fn scale_by(&self, a: &AlgebraElement) -> Result<Self> {
        let coords = self
            .coords
            .iter()
            .map(|c| c.mul(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModuleVector {
            space: self.space.clone(),
            coords,
        })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.coords.iter().map(|c| c.to_json()).collect())
    }

    pub fn from_json(space: Arc<SequentialSpace>, v: &Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::InputParse("vector: expected coordinate array".into()))?;
        let coords = arr
            .iter()
            .map(|c| AlgebraElement::from_json(space.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        ModuleVector::new(space, coords)
    }
}

/// The A-valued inner product: sum over k of x_k (y_k)*.
pub fn inner_product(x: &ModuleVector, y: &ModuleVector) -> Result<AlgebraElement> {
    if x.space != y.space {
        return Err(Error::SpaceMismatch);
    }
    if x.truncation() != y.truncation() {
        return Err(Error::ShapeMismatch(format!(
            "inner product of truncations {} vs {}",
            x.truncation(),
            y.truncation()
        )));
    }
    let mut acc = AlgebraElement::zero(x.space.clone());
    for (a, b) in x.coords.iter().zip(&y.coords) {
        acc = acc.add(&a.mul(&b.conj())?)?;
    }
    Ok(acc)
}

/// The module norm |x| = |<x,x>|^(1/2).
pub fn vector_norm(x: &ModuleVector) -> f64 {
    let ip = inner_product(x, x).expect("self inner product is always defined");
    algebra_norm(&ip).sqrt()
}

/// The k-th free basis vector e^k at truncation N (1-indexed).
pub fn basis_vector(k: usize, n: usize, space: Arc<SequentialSpace>) -> Result<ModuleVector> {
    if k < 1 || k > n {
        return Err(Error::OutOfRange(format!("basis index {k} not in 1..={n}")));
    }
    let coords = (1..=n)
        .map(|j| {
            if j == k {
                AlgebraElement::one(space.clone())
            } else {
                AlgebraElement::zero(space.clone())
            }
        })
        .collect();
    ModuleVector::new(space, coords)
}

/// The head projector p_m (keep coordinates 1..m) or the tail projector
/// q_m (keep the complement); p_m + q_m = id.
pub fn project(x: &ModuleVector, m: usize, part: Part) -> Result<ModuleVector> {
    if m > x.truncation() {
        return Err(Error::OutOfRange(format!(
            "cut {m} exceeds truncation {}",
            x.truncation()
        )));
    }
    let coords = x
        .coords
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let in_head = idx < m;
            let keep = match part {
                Part::Head => in_head,
                Part::Tail => !in_head,
            };
            if keep {
                c.clone()
            } else {
                AlgebraElement::zero(x.space.clone())
            }
        })
        .collect();
    ModuleVector::new(x.space.clone(), coords)
}

/// Applies the map A^n -> l2(A) determined by the images y_k of the free
/// basis: x maps to the sum of x_k y_k.
pub fn apply_generated(images: &[ModuleVector], x: &ModuleVector) -> Result<ModuleVector> {
    if images.len() != x.truncation() {
        return Err(Error::ShapeMismatch(format!(
            "{} images for a vector of truncation {}",
            images.len(),
            x.truncation()
        )));
    }
    let out_n = images.iter().map(|y| y.truncation()).max().unwrap_or(0);
    let mut acc = ModuleVector::zero(x.space.clone(), out_n);
    for (k, y) in images.iter().enumerate() {
        let mut padded = y.coords().to_vec();
        padded.resize(out_n, AlgebraElement::zero(x.space.clone()));
        let term = ModuleVector::new(x.space.clone(), padded)?.scale_by(x.coord(k + 1))?;
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_space::make_sequence_space;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(space: &Arc<SequentialSpace>, n: usize, rng: &mut impl Rng) -> ModuleVector {
        let coords = (0..n)
            .map(|_| {
                AlgebraElement::new(
                    space.clone(),
                    (0..space.len())
                        .map(|_| {
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        ModuleVector::new(space.clone(), coords).unwrap()
    }

    #[test]
    fn basis_orthonormality() {
        let s = make_sequence_space(3);
        let e1 = basis_vector(1, 3, s.clone()).unwrap();
        let e2 = basis_vector(2, 3, s.clone()).unwrap();
        let ip11 = inner_product(&e1, &e1).unwrap();
        assert_eq!(ip11, AlgebraElement::one(s.clone()));
        let ip12 = inner_product(&e1, &e2).unwrap();
        assert!(ip12.is_zero());
    }

    #[test]
    fn basis_vector_layout_and_range() {
        let s = make_sequence_space(2);
        let e1 = basis_vector(1, 3, s.clone()).unwrap();
        assert!(!e1.coord(1).is_zero());
        assert!(e1.coord(2).is_zero() && e1.coord(3).is_zero());
        let e3 = basis_vector(3, 3, s.clone()).unwrap();
        assert!(e3.coord(1).is_zero() && e3.coord(2).is_zero());
        assert!(!e3.coord(3).is_zero());
        assert!(matches!(basis_vector(4, 3, s), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn indicator_coordinates_inner_product() {
        // x = (phi_1, phi_2): <x,x> is 1 on 1/1 and 1/2, 0 at the limit
        let s = make_sequence_space(3);
        let phi1 = AlgebraElement::indicator(s.clone(), "1/1").unwrap();
        let phi2 = AlgebraElement::indicator(s.clone(), "1/2").unwrap();
        let x = ModuleVector::new(s.clone(), vec![phi1, phi2]).unwrap();
        let ip = inner_product(&x, &x).unwrap();
        assert_eq!(ip.value_at("1/1").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(ip.value_at("1/2").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(ip.value_at("0").unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn norms() {
        let s = make_sequence_space(2);
        let e2 = basis_vector(2, 4, s.clone()).unwrap();
        assert!((vector_norm(&e2) - 1.0).abs() < 1e-15);
        assert_eq!(vector_norm(&ModuleVector::zero(s.clone(), 4)), 0.0);
        let x = basis_vector(1, 2, s.clone())
            .unwrap()
            .add(&basis_vector(2, 2, s).unwrap())
            .unwrap();
        assert!((vector_norm(&x) - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projector_identities() {
        let s = make_sequence_space(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_vector(&s, 5, &mut rng);
        for m in 0..=5 {
            let head = project(&x, m, Part::Head).unwrap();
            let tail = project(&x, m, Part::Tail).unwrap();
            assert_eq!(head.add(&tail).unwrap(), x);
            // idempotency and disjointness, exactly
            assert_eq!(project(&head, m, Part::Head).unwrap(), head);
            assert!(project(&head, m, Part::Tail)
                .unwrap()
                .coords()
                .iter()
                .all(|c| c.is_zero()));
        }
        assert_eq!(project(&x, 0, Part::Tail).unwrap(), x);
        assert_eq!(project(&x, 5, Part::Head).unwrap(), x);
        assert!(matches!(
            project(&x, 6, Part::Head),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn head_tail_split_example() {
        let s = make_sequence_space(1);
        let a = AlgebraElement::constant(s.clone(), Complex64::new(1.0, 0.0));
        let b = AlgebraElement::constant(s.clone(), Complex64::new(2.0, 0.0));
        let c = AlgebraElement::constant(s.clone(), Complex64::new(3.0, 0.0));
        let x = ModuleVector::new(s.clone(), vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let head = project(&x, 1, Part::Head).unwrap();
        let tail = project(&x, 1, Part::Tail).unwrap();
        assert_eq!(head.coord(1), &a);
        assert!(head.coord(2).is_zero() && head.coord(3).is_zero());
        assert!(tail.coord(1).is_zero());
        assert_eq!(tail.coord(2), &b);
        assert_eq!(tail.coord(3), &c);
    }

    #[test]
    fn cauchy_schwarz_on_random_pairs() {
        let s = make_sequence_space(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(1..6);
            let x = random_vector(&s, n, &mut rng);
            let y = random_vector(&s, n, &mut rng);
            let lhs = algebra_norm(&inner_product(&x, &y).unwrap());
            let rhs = vector_norm(&x) * vector_norm(&y);
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn finitely_generated_map_bound() {
        // |f(x)| <= n sqrt(C) |x| with C = max |<y_k, y_j>|
        let s = make_sequence_space(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(1..5);
            let big_n = rng.random_range(n..8);
            let images: Vec<ModuleVector> =
                (0..n).map(|_| random_vector(&s, big_n, &mut rng)).collect();
            let x = random_vector(&s, n, &mut rng);
            let fx = apply_generated(&images, &x).unwrap();
            let mut c = 0.0f64;
            for yk in &images {
                for yj in &images {
                    c = c.max(algebra_norm(&inner_product(yk, yj).unwrap()));
                }
            }
            let bound = n as f64 * c.sqrt() * vector_norm(&x);
            assert!(vector_norm(&fx) <= bound + 1e-10);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = make_sequence_space(2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_vector(&s, 3, &mut rng);
        let j = x.to_json();
        let y = ModuleVector::from_json(s, &j).unwrap();
        assert_eq!(x, y);
    }
}
