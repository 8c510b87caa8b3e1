//! Finite-truncation operator calculus over the commutative C*-algebra C(X).
//!
//! The library models the standard module l2(A) over A = C(X) at a finite
//! truncation, where X is a finite point set carrying explicit convergent
//! nets. Operators are represented exactly as "scalar tail times a power of
//! the shift, plus a finite block per point", which is closed under
//! composition and rich enough to express shifts, multiplication operators
//! and all finitely generated perturbations.
//!
//! On top of that representation the crate provides:
//!
//! - certified tail-norm profiles and compactness verdicts ([`compactness`]),
//! - Noether decompositions of Fredholm operators with index computation,
//!   including the block LDU factorization of `id + K` and the projector
//!   pipeline for general parametrix pairs ([`fredholm`]),
//! - membership oracles for the F- and IM-topology subbases and
//!   family-continuity diagnostics ([`topologies`]),
//! - the two named counterexample families and the relaxed-pair-class
//!   comparison experiment ([`gallery`]).
//!
//! Index convention: the index of a decomposition is `[N2] - [N1]`, the rank
//! of the codomain complement minus the rank of the domain complement. This
//! is the negative of the classical analytic index `dim ker - dim coker`;
//! the CLI prints both signs.

pub mod a_operator;
pub mod base_space;
pub mod compactness;
pub mod error;
pub mod fredholm;
pub mod gallery;
pub mod hilbert_module;
pub mod numerics;
pub mod topologies;

pub use a_operator::{AOperator, BlockDecomposition, Enclosure, OperatorFamily, TailDescriptor};
pub use base_space::{AlgebraElement, PointId, SequentialSpace};
pub use compactness::{CompactnessVerdict, ScalingStudy, TailNormProfile};
pub use error::{Error, Result};
pub use fredholm::{ExternalDecomposition, IndexElement, NoetherDecomposition, ParametrixReport};
pub use gallery::NamedFamily;
pub use hilbert_module::ModuleVector;
pub use numerics::{Complex64, ComplexMatrix};
pub use topologies::{ContinuityDiagnostic, NetVerdict, Topology, TopologyVerdict};
