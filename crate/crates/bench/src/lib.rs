//! Benchmark-only crate; see benches/operator_calculus.rs.
