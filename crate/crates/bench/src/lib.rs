//! Criterion benchmarks for `hkflow-core`; see `benches/flows.rs`.
